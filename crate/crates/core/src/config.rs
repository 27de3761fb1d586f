//! Plain-text model description files.
//!
//! One `key = value` pair per line; `#` starts a comment. Recognised keys:
//!
//! | key            | meaning                                         | default |
//! |----------------|-------------------------------------------------|---------|
//! | `domain_lower` | lower end of the support `K`                    | 0       |
//! | `domain_upper` | upper end of the support `K`                    | 1       |
//! | `theta_min`    | lower end of `Θ`                                | 0.25    |
//! | `theta_max`    | upper end of `Θ`                                | 0.55    |
//! | `gamma`        | positivity floor of the class                   | 1e-6    |
//! | `alpha`        | divergence exponent in (0, 1]                   | 0.5     |
//! | `quad_order`   | Gauss-Legendre points                           | 32      |
//! | `bound`        | uniform bound `B` on `sup |q|`                  | 10      |
//! | `lipschitz`    | Lipschitz constant of `q^α` (derived if absent) | derived |
//! | `e2_grid`      | grid points for the Lipschitz audit             | 2048    |
//! | `grid`         | outer `θ`-grid points                           | 41      |
//! | `true_a`       | leading coefficient of the reference density    | 4       |
//! | `true_mu`      | mean of the reference density                   | 0.4     |

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::divergence::{check_alpha, DivergenceConfig, DEFAULT_QUAD_ORDER};
use crate::error::{Error, Result};
use crate::estimator::{OuterGridConfig, DEFAULT_OUTER_POINTS};
use crate::format::fmt12;
use crate::model::{MomentModel, QuadraticDensity, SmoothClassConfig, DEFAULT_BOUND, DEFAULT_E2_GRID, DEFAULT_GAMMA};
use crate::numerics::Domain;

pub const DEFAULT_THETA_MIN: f64 = 0.25;
pub const DEFAULT_THETA_MAX: f64 = 0.55;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_TRUE_A: f64 = 4.0;
pub const DEFAULT_TRUE_MU: f64 = 0.4;

const KEYS: &[&str] = &[
    "domain_lower",
    "domain_upper",
    "theta_min",
    "theta_max",
    "gamma",
    "alpha",
    "quad_order",
    "bound",
    "lipschitz",
    "e2_grid",
    "grid",
    "true_a",
    "true_mu",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelDescription {
    pub domain_lower: f64,
    pub domain_upper: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub quad_order: usize,
    pub bound: f64,
    pub lipschitz: Option<f64>,
    pub e2_grid: usize,
    pub grid: usize,
    pub true_a: f64,
    pub true_mu: f64,
}

impl Default for ModelDescription {
    fn default() -> Self {
        ModelDescription {
            domain_lower: 0.0,
            domain_upper: 1.0,
            theta_min: DEFAULT_THETA_MIN,
            theta_max: DEFAULT_THETA_MAX,
            gamma: DEFAULT_GAMMA,
            alpha: DEFAULT_ALPHA,
            quad_order: DEFAULT_QUAD_ORDER,
            bound: DEFAULT_BOUND,
            lipschitz: None,
            e2_grid: DEFAULT_E2_GRID,
            grid: DEFAULT_OUTER_POINTS,
            true_a: DEFAULT_TRUE_A,
            true_mu: DEFAULT_TRUE_MU,
        }
    }
}

impl ModelDescription {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut desc = ModelDescription::default();
        let mut seen = HashSet::new();
        let mut lines_of = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    key: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let err = |message: String| Error::Parse {
                line,
                key: key.to_string(),
                message,
            };
            if !KEYS.contains(&key) {
                return Err(err("unknown key".into()));
            }
            if !seen.insert(key.to_string()) {
                return Err(err("duplicate key".into()));
            }
            lines_of.insert(key.to_string(), line);
            let real = || {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("expected a finite number, got {value:?}")))
            };
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|_| err(format!("expected a nonnegative integer, got {value:?}")))
            };
            match key {
                "domain_lower" => desc.domain_lower = real()?,
                "domain_upper" => desc.domain_upper = real()?,
                "theta_min" => desc.theta_min = real()?,
                "theta_max" => desc.theta_max = real()?,
                "gamma" => desc.gamma = real()?,
                "alpha" => desc.alpha = real()?,
                "quad_order" => desc.quad_order = count()?,
                "bound" => desc.bound = real()?,
                "lipschitz" => desc.lipschitz = Some(real()?),
                "e2_grid" => desc.e2_grid = count()?,
                "grid" => desc.grid = count()?,
                "true_a" => desc.true_a = real()?,
                "true_mu" => desc.true_mu = real()?,
                _ => unreachable!(),
            }
        }
        desc.validate_with(|key| lines_of.get(key).copied().unwrap_or(0))?;
        Ok(desc)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(|_| 0)
    }

    fn validate_with(&self, line_of: impl Fn(&str) -> usize) -> Result<()> {
        let fail = |key: &str, message: String| Error::Parse {
            line: line_of(key),
            key: key.to_string(),
            message,
        };
        if self.domain_lower >= self.domain_upper {
            return Err(fail("domain_upper", "must exceed domain_lower".into()));
        }
        if self.theta_min >= self.theta_max {
            return Err(fail("theta_max", "must exceed theta_min".into()));
        }
        if self.gamma < 0.0 {
            return Err(fail("gamma", "must be nonnegative".into()));
        }
        if check_alpha(self.alpha).is_err() {
            return Err(fail("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if self.quad_order < 2 {
            return Err(fail("quad_order", "must be at least 2".into()));
        }
        if self.bound <= 0.0 {
            return Err(fail("bound", "must be positive".into()));
        }
        if self.lipschitz.is_some_and(|m| m <= 0.0) {
            return Err(fail("lipschitz", "must be positive".into()));
        }
        if self.e2_grid < 2 {
            return Err(fail("e2_grid", "must be at least 2".into()));
        }
        if self.grid < 8 {
            return Err(fail("grid", "must be at least 8".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain_lower, self.domain_upper)
    }

    pub fn class(&self) -> Result<SmoothClassConfig> {
        let mut class = SmoothClassConfig::new(self.alpha, self.gamma, self.bound, self.domain()?);
        if let Some(m) = self.lipschitz {
            class.lipschitz = m;
        }
        class.e2_grid = self.e2_grid;
        Ok(class)
    }

    pub fn model(&self) -> Result<MomentModel> {
        MomentModel::new(self.domain()?, self.theta_min, self.theta_max, self.class()?)
    }

    pub fn divergence(&self) -> Result<DivergenceConfig> {
        DivergenceConfig::with_order(self.alpha, self.quad_order, self.domain()?)
    }

    pub fn outer_grid(&self) -> OuterGridConfig {
        OuterGridConfig {
            points: self.grid,
            ..OuterGridConfig::default()
        }
    }

    /// The reference density `p₀` with leading coefficient `true_a` and mean `true_mu`.
    pub fn truth(&self) -> Result<QuadraticDensity> {
        Ok(QuadraticDensity::from_constraints(self.true_a, self.true_mu, self.domain()?))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "domain_lower = {}", fmt12(self.domain_lower));
        let _ = writeln!(out, "domain_upper = {}", fmt12(self.domain_upper));
        let _ = writeln!(out, "theta_min = {}", fmt12(self.theta_min));
        let _ = writeln!(out, "theta_max = {}", fmt12(self.theta_max));
        let _ = writeln!(out, "gamma = {:e}", self.gamma);
        let _ = writeln!(out, "alpha = {}", fmt12(self.alpha));
        let _ = writeln!(out, "quad_order = {}", self.quad_order);
        let _ = writeln!(out, "bound = {}", fmt12(self.bound));
        if let Some(m) = self.lipschitz {
            let _ = writeln!(out, "lipschitz = {}", fmt12(m));
        }
        let _ = writeln!(out, "e2_grid = {}", self.e2_grid);
        let _ = writeln!(out, "grid = {}", self.grid);
        let _ = writeln!(out, "true_a = {}", fmt12(self.true_a));
        let _ = writeln!(out, "true_mu = {}", fmt12(self.true_mu));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let d = ModelDescription::default();
        assert_eq!(ModelDescription::parse(&d.to_text()).unwrap(), d);
        assert_eq!(ModelDescription::parse("").unwrap(), d);
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# the default experiment\n\nalpha = 1   # L2 case\ngamma=0\nlipschitz = 3.5\n";
        let d = ModelDescription::parse(text).unwrap();
        assert_eq!(d.alpha, 1.0);
        assert_eq!(d.gamma, 0.0);
        assert_eq!(d.class().unwrap().lipschitz, 3.5);
    }

    fn parse_err(text: &str) -> (usize, String) {
        match ModelDescription::parse(text).unwrap_err() {
            Error::Parse { line, key, .. } => (line, key),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_key_and_line() {
        assert_eq!(parse_err("alpha = 0.5\nthet_min = 0.1\n"), (2, "thet_min".into()));
        assert_eq!(parse_err("\n\nquad_order = many\n"), (3, "quad_order".into()));
        assert_eq!(parse_err("gamma = 1\ngamma = 2\n"), (2, "gamma".into()));
        assert_eq!(parse_err("alpha = 0.5\nalpha_only\n"), (2, "alpha_only".into()));
        assert_eq!(parse_err("x = 1\n").1, "x");
        assert_eq!(parse_err("theta_min = 0.5\ntheta_max = 0.3\n"), (2, "theta_max".into()));
        assert_eq!(parse_err("grid = 3\n"), (1, "grid".into()));
        assert_eq!(parse_err("alpha = 0\n"), (1, "alpha".into()));
        assert_eq!(parse_err("bound = inf\n"), (1, "bound".into()));
    }
}
