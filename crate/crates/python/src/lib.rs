//! Python bindings: model descriptions, quadratic densities, samples, the
//! divergence, the inner projection, the outer estimator and the model audit.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use smoothdiv_core as core;
use smoothdiv_core::{Density, MeasureView};

create_exception!(smoothdiv, SmoothdivError, PyException, "Error raised by the estimation core.");

fn err(e: core::Error) -> PyErr {
    SmoothdivError::new_err(e.to_string())
}

/// Model description: domain, Θ range, class constants and the true density.
#[pyclass(name = "Model", module = "smoothdiv", from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: core::ModelDescription,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (*, alpha=None, theta_min=None, theta_max=None, gamma=None, grid=None, quad_order=None, domain=None, true_a=None, true_mu=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: Option<f64>,
        theta_min: Option<f64>,
        theta_max: Option<f64>,
        gamma: Option<f64>,
        grid: Option<usize>,
        quad_order: Option<usize>,
        domain: Option<(f64, f64)>,
        true_a: Option<f64>,
        true_mu: Option<f64>,
    ) -> PyResult<Self> {
        let mut d = core::ModelDescription::default();
        d.alpha = alpha.unwrap_or(d.alpha);
        d.theta_min = theta_min.unwrap_or(d.theta_min);
        d.theta_max = theta_max.unwrap_or(d.theta_max);
        d.gamma = gamma.unwrap_or(d.gamma);
        d.grid = grid.unwrap_or(d.grid);
        d.quad_order = quad_order.unwrap_or(d.quad_order);
        if let Some((lo, hi)) = domain {
            d.domain_lower = lo;
            d.domain_upper = hi;
        }
        d.true_a = true_a.unwrap_or(d.true_a);
        d.true_mu = true_mu.unwrap_or(d.true_mu);
        d.validate().map_err(err)?;
        Ok(PyModel { inner: d })
    }

    /// Reads a `key = value` model description file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let inner = core::ModelDescription::read(&path).map_err(err)?;
        inner.validate().map_err(err)?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn theta_range(&self) -> (f64, f64) {
        (self.inner.theta_min, self.inner.theta_max)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        (self.inner.domain_lower, self.inner.domain_upper)
    }

    /// The true density `p₀`.
    fn truth(&self) -> PyResult<PyQuadratic> {
        Ok(PyQuadratic {
            inner: self.inner.truth().map_err(err)?,
        })
    }

    /// Feasible interval of the leading coefficient at `theta`.
    fn feasible_interval(&self, theta: f64) -> PyResult<(f64, f64)> {
        let model = self.inner.model().map_err(err)?;
        core::feasible_a_interval(theta, &model).map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(alpha={}, theta_range=({}, {}), gamma={})",
            self.inner.alpha, self.inner.theta_min, self.inner.theta_max, self.inner.gamma
        )
    }
}

/// `q(x) = a x² + b x + c` on a compact interval.
#[pyclass(name = "Quadratic", module = "smoothdiv", from_py_object)]
#[derive(Clone)]
struct PyQuadratic {
    inner: core::QuadraticDensity,
}

fn domain(bounds: (f64, f64)) -> PyResult<core::Domain> {
    core::Domain::new(bounds.0, bounds.1).map_err(err)
}

#[pymethods]
impl PyQuadratic {
    #[new]
    #[pyo3(signature = (a, b, c, domain=(0.0, 1.0)))]
    fn new(a: f64, b: f64, c: f64, domain: (f64, f64)) -> PyResult<Self> {
        Ok(PyQuadratic {
            inner: core::QuadraticDensity::new(a, b, c, self::domain(domain)?),
        })
    }

    /// The member with leading coefficient `a`, unit mass and mean `mu`.
    #[staticmethod]
    #[pyo3(signature = (a, mu, domain=(0.0, 1.0)))]
    fn from_constraints(a: f64, mu: f64, domain: (f64, f64)) -> PyResult<Self> {
        Ok(PyQuadratic {
            inner: core::QuadraticDensity::from_constraints(a, mu, self::domain(domain)?),
        })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn coefficients(&self) -> (f64, f64, f64) {
        (self.inner.a, self.inner.b, self.inner.c)
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    /// `(min, max)` over the domain.
    fn extrema(&self) -> (f64, f64) {
        self.inner.extrema()
    }

    /// `sup |self - other|` over the domain.
    fn sup_distance(&self, other: &PyQuadratic) -> f64 {
        core::sup_distance(&self.inner, &other.inner)
    }

    fn __repr__(&self) -> String {
        format!("Quadratic({}, {}, {})", self.inner.a, self.inner.b, self.inner.c)
    }
}

/// An i.i.d. sample with the seed and source it was drawn from.
#[pyclass(name = "Sample", module = "smoothdiv", from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: core::EmpiricalMeasure,
}

#[pymethods]
impl PySample {
    #[new]
    #[pyo3(signature = (points, seed=0, source="python"))]
    fn new(points: Vec<f64>, seed: u64, source: &str) -> PyResult<Self> {
        Ok(PySample {
            inner: core::EmpiricalMeasure::new(points, seed, source).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(PySample {
            inner: core::EmpiricalMeasure::read_csv(&path).map_err(err)?,
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(err)
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.inner.points().to_vec()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sample(n={}, seed={}, source={:?})", self.inner.len(), self.inner.seed(), self.inner.source())
    }
}

/// Projection of the data onto the submodel at a fixed `θ`.
#[pyclass(name = "Projection", module = "smoothdiv", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyProjection {
    theta: f64,
    density: PyQuadratic,
    objective: f64,
    a_star: f64,
    feasible_interval: (f64, f64),
    on_boundary: bool,
}

impl From<core::InnerSolution> for PyProjection {
    fn from(s: core::InnerSolution) -> Self {
        PyProjection {
            theta: s.theta,
            density: PyQuadratic { inner: s.density },
            objective: s.objective,
            a_star: s.a_star,
            feasible_interval: s.feasible_interval,
            on_boundary: s.on_boundary,
        }
    }
}

#[pymethods]
impl PyProjection {
    fn __repr__(&self) -> String {
        format!(
            "Projection(theta={}, a_star={}, objective={})",
            self.theta, self.a_star, self.objective
        )
    }
}

/// Result of the two-step estimator.
#[pyclass(name = "Estimate", module = "smoothdiv", skip_from_py_object)]
struct PyEstimate {
    inner: core::EstimationResult,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn theta_hat(&self) -> f64 {
        self.inner.theta_hat
    }

    #[getter]
    fn a_hat(&self) -> f64 {
        self.inner.a_hat()
    }

    #[getter]
    fn density(&self) -> PyQuadratic {
        PyQuadratic {
            inner: self.inner.inner.density,
        }
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.inner.objective
    }

    /// `(theta, objective, a_star)` on the outer grid; infeasible points
    /// have objective `inf` and `a_star` `None`.
    #[getter]
    fn profile(&self) -> Vec<(f64, f64, Option<f64>)> {
        self.inner.profile.iter().map(|p| (p.theta, p.objective, p.a_star)).collect()
    }

    fn profile_csv(&self) -> String {
        self.inner.profile_csv()
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    fn __repr__(&self) -> String {
        format!("Estimate(theta_hat={}, a_hat={})", self.inner.theta_hat, self.inner.a_hat())
    }
}

/// Draws `n` points from `density` by inverse-CDF sampling.
#[pyfunction]
#[pyo3(signature = (density, n, seed=0))]
fn sample(density: &PyQuadratic, n: usize, seed: u64) -> PyResult<PySample> {
    Ok(PySample {
        inner: core::sample(&density.inner, n, seed).map_err(err)?,
    })
}

/// The power divergence `D_α(q, p)`.
#[pyfunction]
#[pyo3(signature = (q, p, alpha, quad_order=32))]
fn d_alpha(q: &PyQuadratic, p: &PyQuadratic, alpha: f64, quad_order: usize) -> PyResult<f64> {
    let cfg = core::DivergenceConfig::with_order(alpha, quad_order, q.inner.domain).map_err(err)?;
    core::d_alpha(&q.inner, &p.inner, &cfg).map_err(err)
}

/// The reduced criterion `R_α(q, P_n)` against a sample.
#[pyfunction]
#[pyo3(signature = (q, data, alpha, quad_order=32))]
fn r_alpha(q: &PyQuadratic, data: &PySample, alpha: f64, quad_order: usize) -> PyResult<f64> {
    let cfg = core::DivergenceConfig::with_order(alpha, quad_order, q.inner.domain).map_err(err)?;
    Ok(core::r_alpha(&q.inner, MeasureView::Empirical(&data.inner), &cfg)
        .map_err(err)?
        .r_alpha)
}

/// Minimizes the criterion over the submodel at `theta`. Without `data`
/// the model's true density is used.
#[pyfunction]
#[pyo3(signature = (model, theta, data=None))]
fn project(py: Python<'_>, model: &PyModel, theta: f64, data: Option<&PySample>) -> PyResult<PyProjection> {
    let desc = &model.inner;
    let (m, cfg) = (desc.model().map_err(err)?, desc.divergence().map_err(err)?);
    let opts = desc.outer_grid().inner;
    let truth = desc.truth().map_err(err)?;
    let data = data.map(|d| d.inner.clone());
    py.detach(|| match &data {
        Some(s) => core::inner_minimize_empirical(theta, s, &m, &cfg, &opts),
        None => core::inner_minimize_population(theta, &truth, &m, &cfg, &opts),
    })
    .map(PyProjection::from)
    .map_err(err)
}

/// Runs the two-step estimator. Without `data` the model's true density is used.
#[pyfunction]
#[pyo3(signature = (model, data=None))]
fn estimate(py: Python<'_>, model: &PyModel, data: Option<&PySample>) -> PyResult<PyEstimate> {
    let desc = &model.inner;
    let (m, cfg) = (desc.model().map_err(err)?, desc.divergence().map_err(err)?);
    let truth = desc.truth().map_err(err)?;
    let data = data.map(|d| d.inner.clone());
    let grid = desc.outer_grid();
    py.detach(|| {
        let view = match &data {
            Some(s) => MeasureView::Empirical(s),
            None => MeasureView::Density(&truth),
        };
        core::outer_minimize(view, &m, &cfg, &grid)
    })
    .map(|inner| PyEstimate { inner })
    .map_err(err)
}

/// Audits the model; returns `(passed, report)`.
#[pyfunction]
fn check_model(py: Python<'_>, model: &PyModel) -> PyResult<(bool, String)> {
    let audit = py.detach(|| core::check_model(&model.inner)).map_err(err)?;
    Ok((audit.passed(), audit.report()))
}

/// Runs the replicated sweep and writes its CSV and SVG files to `out_dir`.
/// Returns the sweep CSV text.
#[pyfunction]
#[pyo3(signature = (model, n_ladder, replications, seed, out_dir))]
fn run_experiment(
    py: Python<'_>,
    model: &PyModel,
    n_ladder: Vec<usize>,
    replications: usize,
    seed: u64,
    out_dir: PathBuf,
) -> PyResult<String> {
    let cfg = core::ExperimentConfig {
        n_ladder,
        replications,
        base_seed: seed,
        model: model.inner,
        output_dir: out_dir,
        budget: None,
    };
    py.detach(|| core::run_experiment(&cfg))
        .map(|out| out.sweep_csv)
        .map_err(err)
}

#[pymodule]
fn smoothdiv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SmoothdivError", m.py().get_type::<SmoothdivError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyQuadratic>()?;
    m.add_class::<PySample>()?;
    m.add_class::<PyProjection>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(d_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(r_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(check_model, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
