//! Minimum density-power-divergence estimation for smooth semiparametric
//! models defined by moment constraints.
//!
//! The model is `M_E = ∪_θ (M_θ ∩ E)`, where `M_θ` holds the densities with
//! `∫ g(x, θ) q(x) dx = 0` and `E` is a class of bounded densities with a
//! positivity floor. The estimator is the two-step minimizer
//!
//! ```text
//! θ̂_n = argmin_θ  min_{Q ∈ M_θ ∩ E}  R_α(Q, P_n)
//! ```
//!
//! of the reduced power-divergence criterion `R_α` against the empirical
//! measure `P_n`. The shipped class `E` is quadratic densities on a compact
//! interval with the mean constraint `g(x, θ) = x - θ`.
//!
//! ```
//! use smoothdiv_core::{ModelDescription, MeasureView, outer_minimize, sample};
//!
//! let desc = ModelDescription::default();
//! let model = desc.model().unwrap();
//! let cfg = desc.divergence().unwrap();
//! let p0 = desc.truth().unwrap();
//! let data = sample(&p0, 2_000, 7).unwrap();
//! let est = outer_minimize(MeasureView::Empirical(&data), &model, &cfg, &desc.outer_grid()).unwrap();
//! assert!((est.theta_hat - 0.4).abs() < 0.05);
//! ```

pub mod config;
pub mod divergence;
pub mod error;
pub mod estimator;
pub mod format;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod sampling;
pub mod svg;

pub use config::ModelDescription;
pub use divergence::{d0, d1, d_alpha, phi_integrand, r_alpha, r_alpha_slope, rho_expectation, DivergenceConfig, DivergenceValue, MeasureView};
pub use error::{Error, Result};
pub use estimator::{
    inner_minimize_empirical, inner_minimize_population, m4_lipschitz_probe, outer_minimize, EstimationResult,
    InnerSolution, OuterGridConfig, ProfilePoint,
};
pub use harness::{check_model, run_experiment, ExperimentConfig, ModelAudit, SweepRow};
pub use model::{
    check_membership, coeffs_from_constraints, feasible_a_interval, separation_witness, sup_distance,
    ConstrainedFamily, ConstraintReport, Density, MomentModel, QuadraticDensity, SmoothClassConfig,
};
pub use numerics::{
    find_root_increasing, gauss_quadrature, minimize_1d, minimize_1d_with, Domain, Minimize1dOptions,
    Minimizer1DResult, QuadratureRule,
};
pub use sampling::{empirical_mean_of, sample, EmpiricalMeasure};
