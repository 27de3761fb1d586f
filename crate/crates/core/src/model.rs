//! The smooth moment-constrained model: positivity-floored quadratic
//! densities on a compact interval, restricted by the first-moment
//! constraint `∫ (x - θ) q(x) dx = 0`.
//!
//! For fixed `θ` the unit-mass and moment constraints are affine in the
//! coefficients, so a member is pinned down by its leading coefficient `a`.
//! The feasible `a` values form an interval because `a ↦ min_K q_a` is
//! concave.

use serde::{Deserialize, Serialize};

use crate::divergence::pow_alpha;
use crate::error::{Error, Result};
use crate::numerics::{bracket_root_increasing, minimize_1d_with, Domain, Minimize1dOptions};

pub const DEFAULT_GAMMA: f64 = 1e-6;
pub const DEFAULT_BOUND: f64 = 10.0;
pub const DEFAULT_E2_GRID: usize = 2048;
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Rounding allowance when comparing `min_K q` with the floor: endpoints of
/// the feasible interval sit on the floor up to a few ulps.
pub const FLOOR_SLACK: f64 = 1e-12;

/// A probability density on a compact interval.
///
/// This is the seam for density classes other than quadratics: the
/// divergence and estimator code only relies on these operations.
pub trait Density: Send + Sync {
    fn domain(&self) -> Domain;

    fn eval(&self, x: f64) -> f64;

    /// `∫_K x^k q(x) dx`.
    fn moment(&self, k: u32) -> f64;

    /// `(min, max)` of the density over its domain.
    fn extrema(&self) -> (f64, f64);
}

/// `q(x) = a x² + b x + c` on a [`Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDensity {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub domain: Domain,
}

impl QuadraticDensity {
    pub fn new(a: f64, b: f64, c: f64, domain: Domain) -> Self {
        QuadraticDensity { a, b, c, domain }
    }

    pub fn uniform(domain: Domain) -> Self {
        QuadraticDensity::new(0.0, 0.0, 1.0 / domain.width(), domain)
    }

    /// The unique member with leading coefficient `a`, unit mass and mean `mu`.
    pub fn from_constraints(a: f64, mu: f64, domain: Domain) -> Self {
        let (b, c) = coeffs_from_constraints(a, mu, domain);
        QuadraticDensity::new(a, b, c, domain)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1) / self.moment(0)
    }

    /// `∫_lower^x q(t) dt`.
    pub fn cdf(&self, x: f64) -> f64 {
        let antiderivative = |t: f64| ((self.a / 3.0 * t + self.b / 2.0) * t + self.c) * t;
        antiderivative(x) - antiderivative(self.domain.lower())
    }

    pub fn derivative(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    /// `max_K |q'|`; the derivative is affine so the endpoints suffice.
    pub fn max_abs_slope(&self) -> f64 {
        self.derivative(self.domain.lower())
            .abs()
            .max(self.derivative(self.domain.upper()).abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        QuadraticDensity::new(self.a * factor, self.b * factor, self.c * factor, self.domain)
    }

    fn critical_points(&self) -> impl Iterator<Item = f64> {
        let vertex = if self.a != 0.0 {
            Some(-self.b / (2.0 * self.a))
        } else {
            None
        };
        let dom = self.domain;
        [Some(dom.lower()), Some(dom.upper()), vertex.filter(|v| dom.contains(*v))]
            .into_iter()
            .flatten()
    }
}

impl Density for QuadraticDensity {
    fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        self.value(x)
    }

    fn moment(&self, k: u32) -> f64 {
        let d = &self.domain;
        self.a * d.monomial_integral(k + 2) + self.b * d.monomial_integral(k + 1) + self.c * d.monomial_integral(k)
    }

    fn extrema(&self) -> (f64, f64) {
        self.critical_points()
            .map(|x| self.value(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Solves the unit-mass and mean constraints for `(b, c)` given `a`.
///
/// The 2x2 system has determinant `M1² - M0 M2 < 0` (Cauchy-Schwarz), so it
/// is never singular.
pub fn coeffs_from_constraints(a: f64, mu: f64, domain: Domain) -> (f64, f64) {
    let m = |k| domain.monomial_integral(k);
    let (m0, m1, m2, m3) = (m(0), m(1), m(2), m(3));
    // b m1 + c m0 = 1 - a m2
    // b m2 + c m1 = mu - a m3
    let r0 = 1.0 - a * m2;
    let r1 = mu - a * m3;
    let det = m1 * m1 - m0 * m2;
    let b = (r0 * m1 - r1 * m0) / det;
    let c = (m1 * r1 - m2 * r0) / det;
    (b, c)
}

/// `sup_K |q1 - q2|`, exact for quadratics.
pub fn sup_distance(q1: &QuadraticDensity, q2: &QuadraticDensity) -> f64 {
    let diff = QuadraticDensity::new(q1.a - q2.a, q1.b - q2.b, q1.c - q2.c, q1.domain);
    let (lo, hi) = diff.extrema();
    lo.abs().max(hi.abs())
}

/// Sup-norm distance used to witness well-separation of submodels.
pub fn separation_witness(q: &QuadraticDensity, q2: &QuadraticDensity) -> f64 {
    sup_distance(q, q2)
}

/// Constants of the smooth class `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothClassConfig {
    /// Uniform bound `B` on `sup_K |q|`.
    pub bound: f64,
    /// Uniform Lipschitz constant `M` of `q^α`.
    pub lipschitz: f64,
    /// Positivity floor `γ`.
    pub floor_gamma: f64,
    /// Exponent the Lipschitz condition refers to.
    pub alpha: f64,
    /// Grid points used to estimate the Lipschitz constant of `q^α`.
    pub e2_grid: usize,
}

impl SmoothClassConfig {
    /// Class constants with `M = α γ^(α-1) L`, where `L = 8 B / |K|` bounds
    /// `|q'|` for quadratics with `sup |q| <= B` (Markov's inequality).
    pub fn new(alpha: f64, floor_gamma: f64, bound: f64, domain: Domain) -> Self {
        SmoothClassConfig {
            bound,
            lipschitz: lipschitz_bound(alpha, floor_gamma, 8.0 * bound / domain.width()),
            floor_gamma,
            alpha,
            e2_grid: DEFAULT_E2_GRID,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound > 0.0 && self.lipschitz > 0.0 && self.floor_gamma >= 0.0) {
            return Err(Error::Config(format!(
                "class constants must be positive (bound {}, lipschitz {}, gamma {})",
                self.bound, self.lipschitz, self.floor_gamma
            )));
        }
        if self.e2_grid < 2 {
            return Err(Error::Config("e2 grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// Lipschitz constant of `q^α` when `q >= γ` and `|q'| <= slope_bound`.
pub fn lipschitz_bound(alpha: f64, floor_gamma: f64, slope_bound: f64) -> f64 {
    if alpha >= 1.0 {
        slope_bound
    } else {
        alpha * floor_gamma.powf(alpha - 1.0) * slope_bound
    }
}

/// A family of densities indexed by `(θ, parameter)`, where for fixed `θ`
/// the admissible parameters form a closed interval.
pub trait ConstrainedFamily: Sync {
    type Member: Density + Clone;

    fn domain(&self) -> Domain;

    fn theta_range(&self) -> (f64, f64);

    fn member(&self, theta: f64, param: f64) -> Self::Member;

    fn feasible_params(&self, theta: f64) -> Result<(f64, f64)>;

    /// `∂ member / ∂ param` when members are affine in the parameter.
    fn param_direction(&self, _theta: f64) -> Option<Self::Member> {
        None
    }
}

/// Constraint `g(x, θ) = x - θ`, parameter space `Θ` and class `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentModel {
    pub domain: Domain,
    pub theta_min: f64,
    pub theta_max: f64,
    pub class: SmoothClassConfig,
}

impl MomentModel {
    pub fn new(domain: Domain, theta_min: f64, theta_max: f64, class: SmoothClassConfig) -> Result<Self> {
        let model = MomentModel {
            domain,
            theta_min,
            theta_max,
            class,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_min.is_finite() && self.theta_max.is_finite() && self.theta_min < self.theta_max) {
            return Err(Error::Config(format!(
                "theta interval [{}, {}] is not a proper compact interval",
                self.theta_min, self.theta_max
            )));
        }
        self.class.validate()
    }

    #[inline]
    pub fn g(&self, x: f64, theta: f64) -> f64 {
        x - theta
    }

    /// `sup_θ sup_K |g|`, finite because both `K` and `Θ` are compact.
    pub fn g_bound(&self) -> f64 {
        [
            self.domain.lower() - self.theta_max,
            self.domain.upper() - self.theta_min,
        ]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn density(&self, a: f64, theta: f64) -> QuadraticDensity {
        QuadraticDensity::from_constraints(a, theta, self.domain)
    }
}

impl ConstrainedFamily for MomentModel {
    type Member = QuadraticDensity;

    fn domain(&self) -> Domain {
        self.domain
    }

    fn theta_range(&self) -> (f64, f64) {
        (self.theta_min, self.theta_max)
    }

    fn member(&self, theta: f64, param: f64) -> QuadraticDensity {
        self.density(param, theta)
    }

    fn feasible_params(&self, theta: f64) -> Result<(f64, f64)> {
        feasible_a_interval(theta, self)
    }

    fn param_direction(&self, theta: f64) -> Option<QuadraticDensity> {
        let one = self.density(1.0, theta);
        let zero = self.density(0.0, theta);
        Some(QuadraticDensity::new(1.0, one.b - zero.b, one.c - zero.c, self.domain))
    }
}

/// The maximal interval of leading coefficients `a` whose constrained
/// density satisfies `min_K q >= γ`.
pub fn feasible_a_interval(mu: f64, model: &MomentModel) -> Result<(f64, f64)> {
    let gamma = model.class.floor_gamma;
    let dom = model.domain;
    let floor_at = |a: f64| QuadraticDensity::from_constraints(a, mu, dom).extrema().0;

    // Unit-mass nonnegative quadratics have |a| of order 1/|K|³; this box is
    // generous by an order of magnitude.
    let reach = 64.0 / dom.width().powi(3);
    let peak = minimize_1d_with(
        |a| -floor_at(a),
        -reach,
        reach,
        &Minimize1dOptions {
            cells: 128,
            tol: 1e-13 * reach,
        },
    )?;
    let best_floor = -peak.value;
    if !(best_floor >= gamma) {
        return Err(Error::EmptyFeasibleSet {
            theta: mu,
            best_floor,
            gamma,
        });
    }
    let a_peak = peak.argmin;
    let tol = 1e-13 * reach;

    let a_min = if floor_at(-reach) >= gamma {
        -reach
    } else {
        bracket_root_increasing(|a| floor_at(a) - gamma, -reach, a_peak, tol, 0.0)?.hi
    };
    let a_max = if floor_at(reach) >= gamma {
        reach
    } else {
        bracket_root_increasing(|a| gamma - floor_at(a), a_peak, reach, tol, 0.0)?.lo
    };
    Ok((a_min, a_max))
}

/// Instance-level audit of a candidate against `M_θ ∩ E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub e1_ok: bool,
    /// `max_K |q|`.
    pub sup_abs: f64,
    pub e2_ok: bool,
    /// Largest divided difference of `q^α` on the audit grid.
    pub max_slope: f64,
    pub floor_ok: bool,
    /// `min_K q`.
    pub min_value: f64,
    /// `∫ g(x, θ) q(x) dx`.
    pub moment_residual: f64,
    /// `∫ q - 1`.
    pub normalization_residual: f64,
}

impl ConstraintReport {
    pub fn admitted(&self) -> bool {
        self.e1_ok
            && self.e2_ok
            && self.floor_ok
            && self.moment_residual.abs() < RESIDUAL_TOL
            && self.normalization_residual.abs() < RESIDUAL_TOL
    }
}

/// Checks (E1), the Lipschitz condition on `q^α`, the positivity floor and
/// both constraints.
///
/// The Lipschitz constant is estimated by divided differences on an
/// equispaced grid of `model.class.e2_grid` points, an approximation of the
/// sup over all pairs.
pub fn check_membership(q: &QuadraticDensity, theta: f64, model: &MomentModel, alpha: f64) -> ConstraintReport {
    let (min_value, max_value) = q.extrema();
    let sup_abs = min_value.abs().max(max_value.abs());
    let class = &model.class;

    let dom = q.domain;
    let points = class.e2_grid.max(2);
    let h = dom.width() / (points - 1) as f64;
    let powered = |i: usize| {
        let x = if i == points - 1 { dom.upper() } else { dom.lower() + h * i as f64 };
        let v = q.value(x);
        if v < 0.0 {
            f64::NAN
        } else {
            pow_alpha(v, alpha)
        }
    };
    let mut max_slope = 0.0f64;
    let mut prev = powered(0);
    for i in 1..points {
        let cur = powered(i);
        let slope = ((cur - prev) / h).abs();
        max_slope = if slope.is_nan() { f64::NAN } else { max_slope.max(slope) };
        prev = cur;
        if max_slope.is_nan() {
            break;
        }
    }

    let mass = q.mass();
    ConstraintReport {
        e1_ok: sup_abs <= class.bound,
        sup_abs,
        e2_ok: max_slope <= class.lipschitz,
        max_slope,
        floor_ok: min_value >= class.floor_gamma - FLOOR_SLACK,
        min_value,
        moment_residual: q.moment(1) - theta * mass,
        normalization_residual: mass - 1.0,
    }
}

/// Smallest sup-distance between members of `M_θ` and `M_θ'`, searched over
/// `grid` equispaced leading coefficients in each feasible interval.
pub fn set_separation(model: &MomentModel, theta: f64, theta2: f64, grid: usize) -> Result<f64> {
    let members = |t: f64| -> Result<Vec<QuadraticDensity>> {
        let (lo, hi) = feasible_a_interval(t, model)?;
        let n = grid.max(2);
        Ok((0..n)
            .map(|i| model.density(lo + (hi - lo) * i as f64 / (n - 1) as f64, t))
            .collect())
    };
    let left = members(theta)?;
    let right = members(theta2)?;
    Ok(left
        .iter()
        .flat_map(|q| right.iter().map(move |r| sup_distance(q, r)))
        .fold(f64::INFINITY, f64::min))
}
