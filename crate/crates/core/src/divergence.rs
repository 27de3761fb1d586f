//! The density power divergence
//!
//! ```text
//! D_α(Q, P) = ∫ q^(α+1) - (1 + 1/α) q^α p + (1/α) p^(α+1)
//! ```
//!
//! and its decomposition `D_α = D⁰(Q) + D¹(P) + ∫ ρ_q dP` with
//! `D⁰(Q) = ∫ q^(α+1)`, `D¹(P) = (1/α) ∫ p^(α+1)` and
//! `ρ_q = -(1 + 1/α) q^α`. Dropping the `Q`-free term gives the reduced
//! criterion `R_α(Q, P) = D⁰(Q) + ∫ ρ_q dP`, which only needs `P` through
//! an expectation and therefore accepts an empirical measure.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Density;
use crate::numerics::{gauss_quadrature, Domain, QuadratureRule};
use crate::sampling::EmpiricalMeasure;

pub const DEFAULT_QUAD_ORDER: usize = 32;

/// `v^α`, extended by continuity to `0` at `v = 0`.
#[inline]
pub fn pow_alpha(v: f64, alpha: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if alpha == 1.0 {
        v
    } else if alpha == 0.5 {
        v.sqrt()
    } else {
        v.powf(alpha)
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Exponent plus the quadrature rule shared by every integral of a run.
#[derive(Debug, Clone)]
pub struct DivergenceConfig {
    alpha: f64,
    rule: Arc<QuadratureRule>,
}

impl DivergenceConfig {
    pub fn new(alpha: f64, rule: Arc<QuadratureRule>) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(DivergenceConfig { alpha, rule })
    }

    pub fn with_order(alpha: f64, order: usize, domain: Domain) -> Result<Self> {
        DivergenceConfig::new(alpha, Arc::new(gauss_quadrature(order, domain)?))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `1 + 1/α`.
    pub fn rho_coefficient(&self) -> f64 {
        1.0 + 1.0 / self.alpha
    }

    fn check_domain(&self, domain: Domain) -> Result<()> {
        let rd = self.rule.domain();
        if rd != domain {
            return Err(Error::DomainMismatch {
                rule_lower: rd.lower(),
                rule_upper: rd.upper(),
                lower: domain.lower(),
                upper: domain.upper(),
            });
        }
        Ok(())
    }
}

/// The measure `P` a criterion is evaluated against.
#[derive(Clone, Copy)]
pub enum MeasureView<'a> {
    /// Absolutely continuous, integrated by quadrature.
    Density(&'a dyn Density),
    /// The empirical measure of a sample.
    Empirical(&'a EmpiricalMeasure),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    /// `D_α(Q, P)`; only known when `P` is absolutely continuous.
    pub d_alpha: Option<f64>,
    pub r_alpha: f64,
    pub d0: f64,
    /// `D¹(P)`; only known when `P` is absolutely continuous.
    pub d1: Option<f64>,
    pub rho_mean: f64,
}

/// Pointwise integrand of `D_α`. Nonnegative by convexity of `u ↦ u^(α+1)`;
/// rounding below zero is clamped.
pub fn phi_integrand(q_val: f64, p_val: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    for v in [q_val, p_val] {
        if !(v >= 0.0) {
            return Err(Error::NegativeDensity(v));
        }
    }
    Ok(phi_unchecked(q_val, p_val, alpha))
}

#[inline]
fn phi_unchecked(q: f64, p: f64, alpha: f64) -> f64 {
    let q_a = pow_alpha(q, alpha);
    let p_a = pow_alpha(p, alpha);
    let v = q_a * q - (1.0 + 1.0 / alpha) * q_a * p + p_a * p / alpha;
    v.max(0.0)
}

/// `D⁰(Q) = ∫ q^(α+1)`.
pub fn d0<Q: Density + ?Sized>(q: &Q, cfg: &DivergenceConfig) -> Result<f64> {
    cfg.check_domain(q.domain())?;
    let alpha = cfg.alpha;
    Ok(cfg.rule.integrate(|x| {
        let v = q.eval(x);
        pow_alpha(v, alpha) * v.max(0.0)
    }))
}

/// `D¹(P) = (1/α) ∫ p^(α+1)`.
pub fn d1<P: Density + ?Sized>(p: &P, cfg: &DivergenceConfig) -> Result<f64> {
    cfg.check_domain(p.domain())?;
    let alpha = cfg.alpha;
    Ok(cfg.rule.integrate(|x| {
        let v = p.eval(x);
        pow_alpha(v, alpha) * v.max(0.0)
    }) / alpha)
}

/// `∫ ρ_q dP = -(1 + 1/α) ∫ q^α dP`.
pub fn rho_expectation<Q: Density + ?Sized>(q: &Q, p: MeasureView<'_>, cfg: &DivergenceConfig) -> Result<f64> {
    let mean = match p {
        MeasureView::Density(p) => {
            cfg.check_domain(q.domain())?;
            cfg.check_domain(p.domain())?;
            cfg.rule
                .integrate(|x| pow_alpha(q.eval(x), cfg.alpha) * p.eval(x))
        }
        MeasureView::Empirical(sample) => {
            sample.check_support(q.domain())?;
            crate::sampling::empirical_mean_of(q, cfg.alpha, sample)
        }
    };
    Ok(-cfg.rho_coefficient() * mean)
}

/// `R_α(Q, P) = D⁰(Q) + ∫ ρ_q dP`, plus `D¹` and `D_α` when `P` has a density.
pub fn r_alpha<Q: Density + ?Sized>(q: &Q, p: MeasureView<'_>, cfg: &DivergenceConfig) -> Result<DivergenceValue> {
    let d0 = d0(q, cfg)?;
    let rho_mean = rho_expectation(q, p, cfg)?;
    let r = d0 + rho_mean;
    let d1 = match p {
        MeasureView::Density(p) => Some(d1(p, cfg)?),
        MeasureView::Empirical(_) => None,
    };
    Ok(DivergenceValue {
        d_alpha: d1.map(|d1| r + d1),
        r_alpha: r,
        d0,
        d1,
        rho_mean,
    })
}

/// `d/dt R_α(q + t·dir, P)` at `t = 0`, i.e.
/// `(α + 1) [∫ q^α dir dx - ∫ q^(α-1) dir dP]`.
///
/// Infinite when `q` vanishes on the support of `P` and `α < 1`.
pub fn r_alpha_slope<Q: Density + ?Sized, Dn: Density + ?Sized>(
    q: &Q,
    dir: &Dn,
    p: MeasureView<'_>,
    cfg: &DivergenceConfig,
) -> Result<f64> {
    cfg.check_domain(q.domain())?;
    let alpha = cfg.alpha;
    let weight = |v: f64| {
        if alpha == 1.0 {
            1.0
        } else {
            pow_alpha(v, alpha) / v
        }
    };
    let own = cfg.rule.integrate(|x| pow_alpha(q.eval(x), alpha) * dir.eval(x));
    let against = match p {
        MeasureView::Density(p) => {
            cfg.check_domain(p.domain())?;
            cfg.rule.integrate(|x| {
                let pv = p.eval(x);
                if pv == 0.0 {
                    0.0
                } else {
                    weight(q.eval(x)) * dir.eval(x) * pv
                }
            })
        }
        MeasureView::Empirical(sample) => {
            sample.check_support(q.domain())?;
            let pts = sample.points();
            pts.iter().map(|&x| weight(q.eval(x)) * dir.eval(x)).sum::<f64>() / pts.len() as f64
        }
    };
    Ok((alpha + 1.0) * (own - against))
}

/// `D_α(Q, P)` by direct quadrature of the pointwise integrand.
pub fn d_alpha<Q: Density + ?Sized, P: Density + ?Sized>(q: &Q, p: &P, cfg: &DivergenceConfig) -> Result<f64> {
    cfg.check_domain(q.domain())?;
    cfg.check_domain(p.domain())?;
    let alpha = cfg.alpha;
    Ok(cfg
        .rule
        .integrate(|x| phi_unchecked(q.eval(x).max(0.0), p.eval(x).max(0.0), alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuadraticDensity;

    fn cfg(alpha: f64) -> DivergenceConfig {
        DivergenceConfig::with_order(alpha, DEFAULT_QUAD_ORDER, Domain::unit()).unwrap()
    }

    fn linear() -> QuadraticDensity {
        QuadraticDensity::new(0.0, 2.0, 0.0, Domain::unit())
    }

    fn p0() -> QuadraticDensity {
        QuadraticDensity::from_constraints(4.0, 0.4, Domain::unit())
    }

    #[test]
    fn integrand_examples() {
        for alpha in [0.1, 0.5, 1.0] {
            assert!(phi_integrand(1.7, 1.7, alpha).unwrap().abs() < 1e-14);
        }
        assert!((phi_integrand(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi_integrand(1.0, 0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        // q = 0 with α < 1: (1/α) p^(α+1) survives.
        assert!((phi_integrand(0.0, 4.0, 0.5).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn integrand_domain_errors() {
        assert!(matches!(phi_integrand(1.0, 1.0, 0.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(phi_integrand(1.0, 1.0, 1.5), Err(Error::InvalidAlpha(_))));
        assert!(matches!(phi_integrand(-0.1, 1.0, 0.5), Err(Error::NegativeDensity(_))));
        assert!(DivergenceConfig::with_order(0.0, 8, Domain::unit()).is_err());
    }

    #[test]
    fn d0_examples() {
        let u = QuadraticDensity::uniform(Domain::unit());
        assert!((d0(&u, &cfg(1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((d0(&u, &cfg(0.5)).unwrap() - 1.0).abs() < 1e-14);
        assert!((d0(&linear(), &cfg(1.0)).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rho_examples() {
        let u = QuadraticDensity::uniform(Domain::unit());
        let sample = EmpiricalMeasure::new(vec![0.1, 0.9, 0.33], 0, "manual").unwrap();
        let v = rho_expectation(&u, MeasureView::Empirical(&sample), &cfg(1.0)).unwrap();
        assert!((v + 2.0).abs() < 1e-15);
        let v = rho_expectation(&u, MeasureView::Density(&u), &cfg(0.5)).unwrap();
        assert!((v + 3.0).abs() < 1e-14);
        let half = EmpiricalMeasure::new(vec![0.5], 0, "manual").unwrap();
        let v = rho_expectation(&linear(), MeasureView::Empirical(&half), &cfg(1.0)).unwrap();
        assert!((v + 2.0).abs() < 1e-15);
    }

    #[test]
    fn rho_rejects_points_outside_support() {
        let u = QuadraticDensity::uniform(Domain::unit());
        let sample = EmpiricalMeasure::new_unchecked(vec![0.5, 1.5], 0, "manual");
        let err = rho_expectation(&u, MeasureView::Empirical(&sample), &cfg(1.0)).unwrap_err();
        assert!(matches!(err, Error::OutsideSupport { .. }));
    }

    #[test]
    fn r_alpha_examples() {
        let c = cfg(1.0);
        let q = p0();
        let v = r_alpha(&q, MeasureView::Density(&q), &c).unwrap();
        let int_sq = c.rule().integrate(|x| q.value(x).powi(2));
        assert!((v.r_alpha + int_sq).abs() < 1e-13);
        assert!(v.d_alpha.unwrap().abs() < 1e-13);

        let u = QuadraticDensity::uniform(Domain::unit());
        let sample = EmpiricalMeasure::new(vec![0.2, 0.4], 0, "manual").unwrap();
        let v = r_alpha(&u, MeasureView::Empirical(&sample), &c).unwrap();
        assert!((v.r_alpha + 1.0).abs() < 1e-15);
        assert!(v.d1.is_none() && v.d_alpha.is_none());

        let v = r_alpha(&linear(), MeasureView::Density(&u), &c).unwrap();
        assert!((v.d_alpha.unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn d_alpha_examples() {
        let q = p0();
        assert!(d_alpha(&q, &q, &cfg(0.5)).unwrap() < 1e-10);
        let u = QuadraticDensity::uniform(Domain::unit());
        assert!((d_alpha(&linear(), &u, &cfg(1.0)).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn d_alpha_uniform_vs_p0_matches_riemann_sum() {
        // Independent midpoint rule on a fine grid, written out in full.
        let c = cfg(0.5);
        let (a, b, cc) = (4.0, -5.2, 34.0 / 15.0);
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let mut riemann = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            let p = a * x * x + b * x + cc;
            riemann += (1.0 - 3.0 * p + 2.0 * p * p.sqrt()) * h;
        }
        let got = d_alpha(&QuadraticDensity::uniform(Domain::unit()), &p0(), &c).unwrap();
        assert!(got > 0.0);
        assert!((got - riemann).abs() < 1e-9, "{got} vs {riemann}");
    }

    #[test]
    fn slope_matches_central_differences() {
        let c = cfg(0.5);
        let q = p0();
        let dir = QuadraticDensity::new(1.0, -1.0, 1.0 / 6.0, Domain::unit());
        let shifted = |t: f64| QuadraticDensity::new(q.a + t, q.b - t, q.c + t / 6.0, Domain::unit());
        let sample = EmpiricalMeasure::new(vec![0.05, 0.3, 0.31, 0.7, 0.99], 0, "manual").unwrap();
        let u = QuadraticDensity::uniform(Domain::unit());
        for p in [MeasureView::Empirical(&sample), MeasureView::Density(&u)] {
            let h = 1e-5;
            let fd = (r_alpha(&shifted(h), p, &c).unwrap().r_alpha - r_alpha(&shifted(-h), p, &c).unwrap().r_alpha)
                / (2.0 * h);
            let got = r_alpha_slope(&q, &dir, p, &c).unwrap();
            assert!((got - fd).abs() < 1e-8, "{got} vs {fd}");
        }
    }

    #[test]
    fn mismatched_rule_domain_is_an_error() {
        let q = QuadraticDensity::uniform(Domain::new(0.0, 2.0).unwrap());
        assert!(matches!(d0(&q, &cfg(0.5)), Err(Error::DomainMismatch { .. })));
    }
}
