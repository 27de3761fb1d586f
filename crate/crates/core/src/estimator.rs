//! Two-step minimum-divergence estimation.
//!
//! The inner step projects a measure `P` onto `M_θ ∩ E` by minimizing the
//! reduced criterion `R_α(Q, P)` over the feasible members at fixed `θ`; for
//! the quadratic family this is a one-dimensional search over the leading
//! coefficient. The outer step minimizes the projected criterion over a
//! `θ`-grid and refines around the best grid point.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{d0, r_alpha_slope, rho_expectation, DivergenceConfig, MeasureView};
use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::model::{sup_distance, ConstrainedFamily, Density, MomentModel, QuadraticDensity};
use crate::numerics::{bracket_root_increasing, minimize_1d_with, Minimize1dOptions};

pub const DEFAULT_OUTER_POINTS: usize = 41;
pub const DEFAULT_REFINE_CELLS: usize = 8;

/// Projection of a measure onto `M_θ ∩ E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerSolution<M = QuadraticDensity> {
    pub theta: f64,
    pub density: M,
    /// `R_α(density, P)`.
    pub objective: f64,
    pub a_star: f64,
    pub feasible_interval: (f64, f64),
    /// The minimizer sits on the positivity floor.
    pub on_boundary: bool,
}

/// `R_α(Q, P)` for a member already known to live on the rule's domain.
pub fn reduced_criterion<Q: Density + ?Sized>(q: &Q, p: MeasureView<'_>, cfg: &DivergenceConfig) -> Result<f64> {
    Ok(d0(q, cfg)? + rho_expectation(q, p, cfg)?)
}

fn validate_measure(p: MeasureView<'_>, domain: crate::numerics::Domain) -> Result<()> {
    match p {
        MeasureView::Empirical(s) => {
            if s.is_empty() {
                return Err(Error::EmptySample);
            }
            s.check_support(domain)
        }
        MeasureView::Density(_) => Ok(()),
    }
}

/// Generic projection over any [`ConstrainedFamily`].
pub fn project<F: ConstrainedFamily>(
    family: &F,
    theta: f64,
    p: MeasureView<'_>,
    cfg: &DivergenceConfig,
    opts: &Minimize1dOptions,
) -> Result<InnerSolution<F::Member>> {
    validate_measure(p, family.domain())?;
    project_validated(family, theta, p, cfg, opts)
}

fn project_validated<F: ConstrainedFamily>(
    family: &F,
    theta: f64,
    p: MeasureView<'_>,
    cfg: &DivergenceConfig,
    opts: &Minimize1dOptions,
) -> Result<InnerSolution<F::Member>> {
    let (lo, hi) = family.feasible_params(theta)?;
    let objective = |param: f64| {
        let q = family.member(theta, param);
        reduced_criterion(&q, p, cfg).unwrap_or(f64::INFINITY)
    };
    let (mut a_star, mut value) = if hi - lo <= opts.tol {
        let mid = 0.5 * (lo + hi);
        (mid, objective(mid))
    } else {
        let r = minimize_1d_with(objective, lo, hi, opts)?;
        (r.argmin, r.value)
    };
    if let Some(dir) = family.param_direction(theta) {
        if let Some(polished) = polish(family, theta, &dir, p, cfg, (lo, hi), a_star, opts.tol) {
            let v = objective(polished);
            // Value noise near the minimum is ~1e-15; only reject clear losses.
            if v <= value + 1e-12 * (1.0 + value.abs()) {
                a_star = polished;
                value = v;
            }
        }
    }
    let on_boundary = (a_star - lo).abs() <= 2.0 * opts.tol || (hi - a_star).abs() <= 2.0 * opts.tol;
    Ok(InnerSolution {
        theta,
        density: family.member(theta, a_star),
        objective: value,
        a_star,
        feasible_interval: (lo, hi),
        on_boundary,
    })
}

/// Golden section resolves the argmin only to about `sqrt(ε |R| / R'')`.
/// For affinely parametrized families the criterion is convex in the
/// parameter, so the argmin is refined as the root of the analytic slope.
#[allow(clippy::too_many_arguments)]
fn polish<F: ConstrainedFamily>(
    family: &F,
    theta: f64,
    dir: &F::Member,
    p: MeasureView<'_>,
    cfg: &DivergenceConfig,
    (lo, hi): (f64, f64),
    start: f64,
    tol: f64,
) -> Option<f64> {
    let slope = |param: f64| r_alpha_slope(&family.member(theta, param), dir, p, cfg).ok();
    let reach = (1e4 * tol).max(1e-6 * (hi - lo));
    let mut left = (start - reach).max(lo);
    let mut right = (start + reach).min(hi);
    let mut s_left = slope(left)?;
    let mut s_right = slope(right)?;
    if s_left > 0.0 && left > lo {
        left = lo;
        s_left = slope(lo)?;
    }
    if s_right < 0.0 && right < hi {
        right = hi;
        s_right = slope(hi)?;
    }
    if !(s_left.is_finite() && s_right.is_finite()) {
        return None;
    }
    if s_left >= 0.0 {
        return Some(left);
    }
    if s_right <= 0.0 {
        return Some(right);
    }
    let root_tol = 1e-14 * (1.0 + start.abs());
    bracket_root_increasing(|a| slope(a).unwrap_or(f64::NAN), left, right, root_tol, 0.0)
        .ok()
        .map(|b| b.root)
}

/// `Q_n(θ)`: projection of the empirical measure onto `M_θ ∩ E`.
pub fn inner_minimize_empirical(
    theta: f64,
    sample: &crate::sampling::EmpiricalMeasure,
    model: &MomentModel,
    cfg: &DivergenceConfig,
    opts: &Minimize1dOptions,
) -> Result<InnerSolution> {
    project(model, theta, MeasureView::Empirical(sample), cfg, opts)
}

/// `Q*_θ`: projection of an absolutely continuous `P₀` onto `M_θ ∩ E`.
pub fn inner_minimize_population(
    theta: f64,
    p0: &QuadraticDensity,
    model: &MomentModel,
    cfg: &DivergenceConfig,
    opts: &Minimize1dOptions,
) -> Result<InnerSolution> {
    project(model, theta, MeasureView::Density(p0), cfg, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterGridConfig {
    /// Equispaced `θ` values over `Θ`, endpoints included.
    pub points: usize,
    pub inner: Minimize1dOptions,
    /// Search around the best grid point.
    pub refine: Minimize1dOptions,
    #[serde(skip)]
    pub budget: Option<Duration>,
}

impl Default for OuterGridConfig {
    fn default() -> Self {
        OuterGridConfig {
            points: DEFAULT_OUTER_POINTS,
            inner: Minimize1dOptions::default(),
            refine: Minimize1dOptions {
                cells: DEFAULT_REFINE_CELLS,
                ..Minimize1dOptions::default()
            },
            budget: None,
        }
    }
}

impl OuterGridConfig {
    pub fn grid(&self, theta_min: f64, theta_max: f64) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    theta_max
                } else {
                    theta_min + (theta_max - theta_min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub theta: f64,
    /// `+inf` when `M_θ ∩ E` is empty.
    pub objective: f64,
    pub a_star: Option<f64>,
    pub feasible: bool,
    pub on_boundary: bool,
}

/// Settings the estimate was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub quad_order: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub gamma: f64,
    pub grid: OuterGridConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub inner: InnerSolution,
    pub profile: Vec<ProfilePoint>,
    /// Sample size, `None` for a population input.
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub config: ConfigEcho,
}

impl EstimationResult {
    pub fn a_hat(&self) -> f64 {
        self.inner.a_star
    }

    pub fn profile_csv(&self) -> String {
        let mut out = String::from("theta,objective,a_star,feasible,on_boundary\n");
        for p in &self.profile {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt12(p.theta),
                fmt12(p.objective),
                p.a_star.map(fmt12).unwrap_or_default(),
                p.feasible,
                p.on_boundary
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let q = &self.inner.density;
        let mut out = String::new();
        let _ = writeln!(out, "theta_hat = {}", fmt12(self.theta_hat));
        let _ = writeln!(out, "a_hat = {}", fmt12(q.a));
        let _ = writeln!(out, "b_hat = {}", fmt12(q.b));
        let _ = writeln!(out, "c_hat = {}", fmt12(q.c));
        let _ = writeln!(out, "objective = {}", fmt12(self.inner.objective));
        let _ = writeln!(out, "on_boundary = {}", self.inner.on_boundary);
        match self.n {
            Some(n) => {
                let _ = writeln!(out, "n = {n}");
            }
            None => {
                let _ = writeln!(out, "n = population");
            }
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        let _ = writeln!(out, "alpha = {}", fmt12(self.config.alpha));
        out
    }
}

/// `θ̂ = argmin_θ min_{Q ∈ M_θ ∩ E} R_α(Q, P)`.
///
/// Evaluates the projected criterion on the grid, then runs a 1-D search
/// between the neighbours of the best grid point (ties go to the smaller
/// `θ`). Infeasible `θ` contribute `+inf`.
pub fn outer_minimize(
    p: MeasureView<'_>,
    model: &MomentModel,
    cfg: &DivergenceConfig,
    grid: &OuterGridConfig,
) -> Result<EstimationResult> {
    if grid.points < 8 {
        return Err(Error::Config(format!("outer grid needs at least 8 points, got {}", grid.points)));
    }
    validate_measure(p, model.domain)?;
    let deadline = grid.budget.map(|b| Instant::now() + b);
    let expired = || deadline.is_some_and(|d| Instant::now() > d);

    let thetas = grid.grid(model.theta_min, model.theta_max);
    let solved: Vec<Result<InnerSolution>> = thetas
        .par_iter()
        .map(|&theta| {
            if expired() {
                return Err(Error::Timeout);
            }
            project_validated(model, theta, p, cfg, &grid.inner)
        })
        .collect();

    let mut profile = Vec::with_capacity(thetas.len());
    for (&theta, s) in thetas.iter().zip(&solved) {
        profile.push(match s {
            Ok(s) => ProfilePoint {
                theta,
                objective: s.objective,
                a_star: Some(s.a_star),
                feasible: true,
                on_boundary: s.on_boundary,
            },
            Err(Error::EmptyFeasibleSet { .. }) => ProfilePoint {
                theta,
                objective: f64::INFINITY,
                a_star: None,
                feasible: false,
                on_boundary: false,
            },
            Err(Error::Timeout) => return Err(Error::Timeout),
            Err(e) => return Err(clone_error(e)),
        });
    }

    let mut best: Option<usize> = None;
    for (i, pt) in profile.iter().enumerate() {
        if pt.feasible && best.is_none_or(|b| pt.objective < profile[b].objective) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::AllInfeasible)?;
    let grid_best = solved[best].as_ref().map_err(clone_error)?;

    let lo = thetas[best.saturating_sub(1)];
    let hi = thetas[(best + 1).min(thetas.len() - 1)];
    let mut timed_out = false;
    let refined = minimize_1d_with(
        |theta| {
            if expired() {
                timed_out = true;
                return f64::INFINITY;
            }
            project_validated(model, theta, p, cfg, &grid.inner)
                .map(|s| s.objective)
                .unwrap_or(f64::INFINITY)
        },
        lo,
        hi,
        &grid.refine,
    )?;
    if timed_out {
        return Err(Error::Timeout);
    }

    let inner = if refined.value < grid_best.objective {
        project_validated(model, refined.argmin, p, cfg, &grid.inner)?
    } else {
        *grid_best
    };

    let (n, seed) = match p {
        MeasureView::Empirical(s) => (Some(s.len()), Some(s.seed())),
        MeasureView::Density(_) => (None, None),
    };
    Ok(EstimationResult {
        theta_hat: inner.theta,
        inner,
        profile,
        n,
        seed,
        config: ConfigEcho {
            alpha: cfg.alpha(),
            quad_order: cfg.rule().order(),
            theta_min: model.theta_min,
            theta_max: model.theta_max,
            gamma: model.class.floor_gamma,
            grid: *grid,
        },
    })
}

// Inner errors other than infeasibility are all value-like; rebuild them for
// the caller since `Error` holds non-clonable sources.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::EmptyFeasibleSet {
            theta,
            best_floor,
            gamma,
        } => Error::EmptyFeasibleSet {
            theta: *theta,
            best_floor: *best_floor,
            gamma: *gamma,
        },
        Error::Timeout => Error::Timeout,
        other => Error::Config(other.to_string()),
    }
}

/// Largest `sup_K |q*_θ - q*_θ'| / |θ - θ'|` over adjacent grid pairs.
/// Grids with fewer than two points give `0`.
pub fn m4_lipschitz_probe(
    model: &MomentModel,
    p0: &QuadraticDensity,
    cfg: &DivergenceConfig,
    theta_grid: &[f64],
    opts: &Minimize1dOptions,
) -> Result<f64> {
    if theta_grid.len() < 2 {
        return Ok(0.0);
    }
    let projections = theta_grid
        .par_iter()
        .map(|&t| inner_minimize_population(t, p0, model, cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(projections
        .windows(2)
        .map(|w| sup_distance(&w[0].density, &w[1].density) / (w[1].theta - w[0].theta).abs())
        .fold(0.0, f64::max))
}
