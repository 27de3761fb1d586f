//! Deterministic scalar kernels: Gauss-Legendre quadrature on a compact
//! interval, a bracketing root finder and a derivative-free minimizer.
//!
//! Every integral the estimator needs is taken against one shared
//! [`QuadratureRule`], so identities between integrals hold to rounding
//! level rather than to the accuracy of two different rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The compact support `K = [lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: f64,
    upper: f64,
}

impl Domain {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidDomain { lower, upper });
        }
        Ok(Domain { lower, upper })
    }

    pub fn unit() -> Self {
        Domain {
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// `∫_K x^k dx`.
    pub fn monomial_integral(&self, k: u32) -> f64 {
        let p = (k + 1) as i32;
        (self.upper.powi(p) - self.lower.powi(p)) / p as f64
    }
}

/// Gauss-Legendre nodes and weights mapped onto a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
    domain: Domain,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Builds the `order`-point Gauss-Legendre rule on `domain`.
///
/// Nodes are the roots of the Legendre polynomial `P_order`, located by
/// Newton iteration from the Tricomi initial guesses; the rule is exact for
/// polynomials of degree `2 * order - 1`.
pub fn gauss_quadrature(order: usize, domain: Domain) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::QuadratureOrder(order));
    }
    let n = order;
    let mut ref_nodes = vec![0.0; n];
    let mut ref_weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut x = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ref_nodes[i] = -x;
        ref_nodes[n - 1 - i] = x;
        ref_weights[i] = w;
        ref_weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        ref_nodes[n / 2] = 0.0;
    }

    let mid = 0.5 * (domain.lower + domain.upper);
    let half_width = 0.5 * domain.width();
    Ok(QuadratureRule {
        nodes: ref_nodes.iter().map(|t| mid + half_width * t).collect(),
        weights: ref_weights.iter().map(|w| half_width * w).collect(),
        order,
        domain,
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// A bracket `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Best point found, always inside the bracket.
    pub root: f64,
    pub iterations: usize,
}

/// Shrinks a sign-change bracket of a nondecreasing function until its width
/// is at most `tol` or a point with `|f| <= f_tol` is found.
///
/// Steps alternate between Illinois false position and a bisection fallback:
/// whenever a false-position step fails to halve the bracket the next step
/// bisects, so the width at least halves every two iterations.
pub fn bracket_root_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    f_tol: f64,
) -> Result<RootBracket> {
    if lo > hi {
        return Err(Error::EmptyInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa <= 0.0 && fb >= 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    if fa == 0.0 {
        return Ok(RootBracket {
            lo: a,
            hi: a,
            root: a,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(RootBracket {
            lo: b,
            hi: b,
            root: b,
            iterations: 0,
        });
    }

    let mut iterations = 0;
    let mut force_bisect = false;
    // Which end was retained on the previous false-position step (Illinois).
    let mut last_side = 0i8;
    while b - a > tol {
        iterations += 1;
        let width = b - a;
        let x = if force_bisect {
            0.5 * (a + b)
        } else {
            let t = a - fa * (b - a) / (fb - fa);
            if t > a && t < b {
                t
            } else {
                0.5 * (a + b)
            }
        };
        let fx = f(x);
        if fx.abs() <= f_tol || fx == 0.0 {
            return Ok(RootBracket {
                lo: x,
                hi: x,
                root: x,
                iterations,
            });
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if last_side == -1 {
                fb *= 0.5;
            }
            last_side = -1;
        } else {
            b = x;
            fb = fx;
            if last_side == 1 {
                fa *= 0.5;
            }
            last_side = 1;
        }
        force_bisect = !force_bisect && (b - a) > 0.5 * width;
        if iterations > 10_000 {
            break;
        }
    }
    let root = if -fa < fb { a } else { b };
    Ok(RootBracket {
        lo: a,
        hi: b,
        root,
        iterations,
    })
}

/// Root of a nondecreasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
pub fn find_root_increasing<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    bracket_root_increasing(f, lo, hi, tol, tol).map(|b| b.root)
}

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
pub const DEFAULT_MIN_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_CELLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimize1dOptions {
    /// Coarse scan resolution before golden-section refinement.
    pub cells: usize,
    /// Target width of the final golden-section bracket.
    pub tol: f64,
}

impl Default for Minimize1dOptions {
    fn default() -> Self {
        Minimize1dOptions {
            cells: DEFAULT_GRID_CELLS,
            tol: DEFAULT_MIN_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimizer1DResult {
    pub argmin: f64,
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` over `[lo, hi]` without assuming unimodality.
///
/// The interval is scanned on `opts.cells` equal cells; golden-section search
/// then runs in the two cells around the best grid point. Grid ties go to the
/// smaller abscissa. NaN values are treated as `+inf`.
pub fn minimize_1d_with<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &Minimize1dOptions,
) -> Result<Minimizer1DResult> {
    if !(lo < hi) {
        return Err(Error::EmptyInterval { lo, hi });
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let cells = opts.cells.max(2);
    let step = (hi - lo) / cells as f64;
    let grid_x = |i: usize| if i == cells { hi } else { lo + step * i as f64 };

    let values: Vec<f64> = (0..=cells).map(|i| eval(grid_x(i))).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let mut iterations = cells + 1;

    let left = best.saturating_sub(1);
    let right = (best + 1).min(cells);
    let (br_lo, br_hi) = (grid_x(left), grid_x(right));

    let mut a = br_lo;
    let mut b = br_hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    iterations += 2;
    while b - a > opts.tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
        iterations += 1;
        if iterations > 100_000 {
            break;
        }
    }

    let mut candidates = [
        (grid_x(best), values[best]),
        (br_lo, values[left]),
        (br_hi, values[right]),
        (c, fc),
        (d, fd),
    ];
    // Stable order: smaller value first, ties to the smaller abscissa.
    candidates.sort_by(|p, q| p.1.total_cmp(&q.1).then(p.0.total_cmp(&q.0)));
    let (argmin, value) = candidates[0];
    Ok(Minimizer1DResult {
        argmin,
        value,
        iterations,
        bracket: (br_lo, br_hi),
    })
}

pub fn minimize_1d<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimizer1DResult> {
    minimize_1d_with(
        f,
        lo,
        hi,
        &Minimize1dOptions {
            tol,
            ..Minimize1dOptions::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_square_exactly() {
        let rule = gauss_quadrature(8, Domain::unit()).unwrap();
        assert!((rule.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_constant_gives_width() {
        let dom = Domain::new(-0.5, 2.0).unwrap();
        let rule = gauss_quadrature(5, dom).unwrap();
        assert!((rule.integrate(|_| 1.0) - 2.5).abs() < 1e-13);
        let total: f64 = rule.weights().iter().sum();
        assert!((total - dom.width()).abs() < 1e-12);
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!(rule.nodes().iter().all(|&x| x > dom.lower() && x < dom.upper()));
    }

    #[test]
    fn quadrature_monomials_up_to_exact_degree() {
        for order in [2, 3, 8, 16, 32, 64] {
            let rule = gauss_quadrature(order, Domain::unit()).unwrap();
            for k in 0..=rule.exact_degree() as i32 {
                let got = rule.integrate(|x| x.powi(k));
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "order {order} k {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn quadrature_rejects_low_order() {
        assert!(matches!(gauss_quadrature(1, Domain::unit()), Err(Error::QuadratureOrder(1))));
    }

    #[test]
    fn quadrature_self_convergence_on_p0_power() {
        // p0(x) = 4x^2 - 5.2x + 34/15, the 3/2 power is smooth since p0 > 0.5 on [0, 1].
        let p0 = |x: f64| (4.0 * x * x - 5.2 * x + 34.0 / 15.0).powf(1.5);
        let lo = gauss_quadrature(16, Domain::unit()).unwrap().integrate(p0);
        let hi = gauss_quadrature(64, Domain::unit()).unwrap().integrate(p0);
        assert!((lo - hi).abs() < 1e-10);
    }

    #[test]
    fn root_of_linear_function() {
        let x = find_root_increasing(|x| x - 0.5, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        let x = find_root_increasing(|x| x - 0.25, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - 0.25).abs() < 1e-12);
    }

    #[test]
    fn root_rejects_bad_bracket() {
        let err = find_root_increasing(|x| x + 1.0, 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn root_bracket_halving_rate() {
        // Flat then steep: false position stalls on this, bisection must take over.
        let f = |x: f64| if x < 0.9 { -1e-9 * (0.9 - x) - 1e-12 } else { 1e6 * (x - 0.9) };
        let tol = 1e-12;
        let br = bracket_root_increasing(f, 0.0, 1.0, tol, 0.0).unwrap();
        assert!(f(br.lo) <= 0.0 && f(br.hi) >= 0.0);
        assert!(br.hi - br.lo <= tol);
        let bound = 2 * ((1.0 / tol).log2().ceil() as usize) + 2;
        assert!(br.iterations <= bound, "{} > {}", br.iterations, bound);
    }

    #[test]
    fn minimizer_finds_interior_parabola() {
        let r = minimize_1d(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10).unwrap();
        assert!((r.argmin - 0.3).abs() < 1e-8);
        assert!(r.bracket.0 <= r.argmin && r.argmin <= r.bracket.1);
    }

    #[test]
    fn minimizer_returns_boundary() {
        let r = minimize_1d(|x| (x + 1.0) * (x + 1.0), 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(r.argmin, 0.0);
        let r = minimize_1d(|x| (x - 3.0) * (x - 3.0), 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(r.argmin, 1.0);
    }

    #[test]
    fn minimizer_escapes_wrong_basin() {
        // Local minimum near 0.1, global near 0.8: golden section from the full
        // interval would land in the shallow basin.
        let f = |x: f64| -(-((x - 0.1) / 0.05).powi(2)).exp() * 0.5 - (-((x - 0.8) / 0.02).powi(2)).exp();
        let r = minimize_1d(f, 0.0, 1.0, 1e-10).unwrap();
        assert!((r.argmin - 0.8).abs() < 1e-6);
    }

    #[test]
    fn minimizer_value_not_above_bracket_ends() {
        let f = |x: f64| (x - 0.77).abs().sqrt();
        let r = minimize_1d(f, 0.0, 1.0, 1e-9).unwrap();
        assert!(r.value <= f(r.bracket.0) && r.value <= f(r.bracket.1));
    }

    #[test]
    fn minimizer_rejects_empty_interval() {
        assert!(minimize_1d(|x| x, 1.0, 1.0, 1e-8).is_err());
    }
}
