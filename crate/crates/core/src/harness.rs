//! Replication sweeps over a ladder of sample sizes, and the model audit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ModelDescription;
use crate::divergence::MeasureView;
use crate::error::{Error, Result};
use crate::estimator::{inner_minimize_population, m4_lipschitz_probe, outer_minimize, ProfilePoint};
use crate::format::fmt12;
use crate::model::{check_membership, feasible_a_interval, set_separation, QuadraticDensity};
use crate::numerics::Minimize1dOptions;
use crate::sampling::{replica_seed, sample};
use crate::svg::{convergence_chart, ConvergenceSeries};

pub const DEFAULT_N_LADDER: [usize; 9] = [10, 50, 100, 500, 1000, 5000, 10000, 50000, 100000];

pub const SWEEP_FILE: &str = "sweep.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const MU_CHART_FILE: &str = "mu_convergence.svg";
pub const A_CHART_FILE: &str = "a_convergence.svg";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_ladder: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    /// Model, divergence exponent and the true `(a, μ)` of the simulated density.
    pub model: ModelDescription,
    pub output_dir: PathBuf,
    /// Per-estimation wall-clock budget; overruns are recorded as timeouts.
    pub budget: Option<Duration>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_ladder: DEFAULT_N_LADDER.to_vec(),
            replications: 1,
            base_seed: 0,
            model: ModelDescription::default(),
            output_dir: PathBuf::from("out"),
            budget: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() || self.n_ladder.contains(&0) {
            return Err(Error::Config("sample sizes must be positive and at least one is needed".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Timeout,
    Error,
}

/// One estimation of the sweep. Replication `r` uses seed
/// `replica_seed(base_seed, r)` at every `n`, so along the ladder the
/// samples of one replication are nested prefixes of a single stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub mu_hat: Option<f64>,
    pub a_hat: Option<f64>,
    pub abs_err_mu: Option<f64>,
    pub abs_err_a: Option<f64>,
    pub status: RowStatus,
    pub error: String,
    #[serde(skip)]
    pub wall_time_ms: u64,
}

const SWEEP_HEADER: [&str; 9] = [
    "n",
    "replication",
    "seed",
    "mu_hat",
    "a_hat",
    "abs_err_mu",
    "abs_err_a",
    "status",
    "error",
];

/// Sweep table; wall-clock times are kept out so that identical configs give
/// identical bytes.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
    for r in rows {
        let status = match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Timeout => "timeout",
            RowStatus::Error => "error",
        };
        w.write_record([
            r.n.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            opt(r.mu_hat),
            opt(r.a_hat),
            opt(r.abs_err_mu),
            opt(r.abs_err_a),
            status.to_string(),
            r.error.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn timing_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,replication,wall_time_ms\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.replication, r.wall_time_ms);
    }
    out
}

/// `(μ chart, a chart)` from sweep rows.
pub fn sweep_charts(rows: &[SweepRow], true_mu: f64, true_a: f64) -> (String, String) {
    let collect = |f: fn(&SweepRow) -> Option<f64>| {
        rows.iter()
            .filter_map(|r| f(r).map(|v| (r.n as u64, v)))
            .collect::<Vec<_>>()
    };
    let mu = convergence_chart(&ConvergenceSeries {
        title: "Estimation of the parameter mu",
        y_label: "mu estimate",
        truth: true_mu,
        points: collect(|r| r.mu_hat),
    });
    let a = convergence_chart(&ConvergenceSeries {
        title: "Estimation of the coefficient a",
        y_label: "a estimate",
        truth: true_a,
        points: collect(|r| r.a_hat),
    });
    (mu, a)
}

/// Runs every `(n, replication)` estimation. Rows come back in
/// `(n, replication)` order whatever the completion order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let desc = &cfg.model;
    let model = desc.model()?;
    let div = desc.divergence()?;
    let truth = desc.truth()?;
    let mut grid = desc.outer_grid();
    grid.budget = cfg.budget;

    let jobs: Vec<(usize, usize)> = cfg
        .n_ladder
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();

    Ok(jobs
        .par_iter()
        .map(|&(n, rep)| {
            let seed = replica_seed(cfg.base_seed, rep as u64);
            let start = Instant::now();
            let outcome = sample(&truth, n, seed)
                .and_then(|s| outer_minimize(MeasureView::Empirical(&s), &model, &div, &grid));
            let wall_time_ms = start.elapsed().as_millis() as u64;
            let mut row = SweepRow {
                n,
                replication: rep,
                seed,
                mu_hat: None,
                a_hat: None,
                abs_err_mu: None,
                abs_err_a: None,
                status: RowStatus::Ok,
                error: String::new(),
                wall_time_ms,
            };
            match outcome {
                Ok(est) => {
                    row.mu_hat = Some(est.theta_hat);
                    row.a_hat = Some(est.a_hat());
                    row.abs_err_mu = Some((est.theta_hat - desc.true_mu).abs());
                    row.abs_err_a = Some((est.a_hat() - desc.true_a).abs());
                }
                Err(Error::Timeout) => {
                    row.status = RowStatus::Timeout;
                    row.error = Error::Timeout.to_string();
                }
                Err(e) => {
                    row.status = RowStatus::Error;
                    row.error = e.to_string();
                }
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<SweepRow>,
    pub sweep_csv: String,
    pub mu_chart: String,
    pub a_chart: String,
}

/// Runs the sweep and writes the sweep table, the timing table and both
/// charts into `cfg.output_dir`. Charts are drawn from the table as written,
/// so re-plotting a saved table reproduces them exactly.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let rows = run_sweep(cfg)?;
    let sweep = sweep_csv(&rows)?;
    let reparsed = parse_sweep_csv(&sweep)?;
    let (mu_chart, a_chart) = sweep_charts(&reparsed, cfg.model.true_mu, cfg.model.true_a);

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(SWEEP_FILE), &sweep)?;
    write_file(&dir.join(TIMING_FILE), &timing_csv(&rows))?;
    write_file(&dir.join(MU_CHART_FILE), &mu_chart)?;
    write_file(&dir.join(A_CHART_FILE), &a_chart)?;
    Ok(ExperimentOutput {
        rows,
        sweep_csv: sweep,
        mu_chart,
        a_chart,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelAudit {
    pub checks: Vec<CheckLine>,
    /// `θ` values of the audit grid with an empty feasible set.
    pub infeasible_thetas: Vec<f64>,
    pub m4_coarse: Option<f64>,
    pub m4_fine: Option<f64>,
}

impl ModelAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{:<12} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        }
        let _ = writeln!(out, "overall      {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

pub const AUDIT_MEMBERS_PER_THETA: usize = 9;
pub const SEPARATION_GAP: f64 = 0.05;
pub const M4_STEPS: (f64, f64) = (0.01, 0.005);
pub const M4_AGREEMENT: f64 = 0.2;

fn step_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Instance-level audit of the model: feasibility over the `θ`-grid, the
/// positivity floor, (E1), the Lipschitz condition on `q^α`, membership
/// residuals, identifiability of `θ` from the moment, separation of
/// submodels, a strict population minimum at the true `θ`, and stability of
/// the `θ ↦ q*_θ` Lipschitz ratio under grid refinement.
pub fn check_model(desc: &ModelDescription) -> Result<ModelAudit> {
    desc.validate()?;
    let model = desc.model()?;
    let div = desc.divergence()?;
    let class = model.class;
    let thetas = desc.outer_grid().grid(model.theta_min, model.theta_max);

    let mut infeasible = Vec::new();
    let mut members: Vec<(f64, QuadraticDensity)> = Vec::new();
    for &t in &thetas {
        match feasible_a_interval(t, &model) {
            Ok((lo, hi)) => {
                for i in 0..AUDIT_MEMBERS_PER_THETA {
                    let a = lo + (hi - lo) * i as f64 / (AUDIT_MEMBERS_PER_THETA - 1) as f64;
                    members.push((t, model.density(a, t)));
                }
            }
            Err(Error::EmptyFeasibleSet { .. }) => infeasible.push(t),
            Err(e) => return Err(e),
        }
    }
    let mut checks = Vec::new();
    checks.push(CheckLine {
        name: "feasibility".into(),
        passed: infeasible.is_empty(),
        detail: if infeasible.is_empty() {
            format!("nonempty feasible interval at all {} grid points", thetas.len())
        } else {
            format!(
                "empty feasible interval at {} of {} grid points: {}",
                infeasible.len(),
                thetas.len(),
                infeasible.iter().map(|t| fmt12(*t)).collect::<Vec<_>>().join(" ")
            )
        },
    });

    let reports: Vec<_> = members
        .iter()
        .map(|(t, q)| check_membership(q, *t, &model, desc.alpha))
        .collect();
    let min_q = reports.iter().map(|r| r.min_value).fold(f64::INFINITY, f64::min);
    let sup_q = reports.iter().map(|r| r.sup_abs).fold(0.0, f64::max);
    let slope = reports.iter().map(|r| r.max_slope).fold(0.0, f64::max);
    let residual = reports
        .iter()
        .map(|r| r.moment_residual.abs().max(r.normalization_residual.abs()))
        .fold(0.0, f64::max);

    checks.push(CheckLine {
        name: "floor".into(),
        passed: class.floor_gamma > 0.0 && !members.is_empty() && reports.iter().all(|r| r.floor_ok),
        detail: format!("min q = {:e} against gamma = {:e}", min_q, class.floor_gamma),
    });
    checks.push(CheckLine {
        name: "E1".into(),
        passed: !members.is_empty() && reports.iter().all(|r| r.e1_ok),
        detail: format!("max |q| = {} <= B = {}", fmt12(sup_q), fmt12(class.bound)),
    });
    checks.push(CheckLine {
        name: "E2".into(),
        passed: !members.is_empty() && reports.iter().all(|r| r.e2_ok),
        detail: format!(
            "max grid slope of q^alpha = {} <= M = {} ({} points)",
            fmt12(slope),
            fmt12(class.lipschitz),
            class.e2_grid
        ),
    });
    checks.push(CheckLine {
        name: "membership".into(),
        passed: !members.is_empty() && residual < crate::model::RESIDUAL_TOL,
        detail: format!("{} members, max constraint residual {:e}", members.len(), residual),
    });

    // θ is identified by the moment: a member of M_θ has residual θ - θ' at θ'.
    let m1_err = members
        .iter()
        .flat_map(|(t, q)| thetas.iter().filter(move |&&t2| t2 != *t).map(move |&t2| (t, t2, q)))
        .map(|(t, t2, q)| {
            let r = check_membership(q, t2, &model, desc.alpha).moment_residual;
            (r - (t - t2)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(CheckLine {
        name: "M1".into(),
        passed: !members.is_empty() && m1_err < 1e-10,
        detail: format!("max |residual(theta') - (theta - theta')| = {m1_err:e}"),
    });

    let feasible: Vec<f64> = thetas.iter().copied().filter(|t| !infeasible.contains(t)).collect();
    let mut sep_min = f64::INFINITY;
    for &t in &feasible {
        for &t2 in &feasible {
            if t2 - t >= SEPARATION_GAP - 1e-12 {
                sep_min = sep_min.min(set_separation(&model, t, t2, 40)?);
            }
        }
    }
    checks.push(CheckLine {
        name: "M2".into(),
        passed: sep_min.is_finite() && sep_min > 0.0,
        detail: format!(
            "min sup-distance between submodels {} apart: {}",
            fmt12(SEPARATION_GAP),
            fmt12(sep_min)
        ),
    });

    let truth = desc.truth()?;
    let opts = Minimize1dOptions::default();
    let profile: Vec<ProfilePoint> = thetas
        .par_iter()
        .map(|&t| match inner_minimize_population(t, &truth, &model, &div, &opts) {
            Ok(s) => ProfilePoint {
                theta: t,
                objective: s.objective,
                a_star: Some(s.a_star),
                feasible: true,
                on_boundary: s.on_boundary,
            },
            Err(_) => ProfilePoint {
                theta: t,
                objective: f64::INFINITY,
                a_star: None,
                feasible: false,
                on_boundary: false,
            },
        })
        .collect();
    let step = (model.theta_max - model.theta_min) / (thetas.len() - 1) as f64;
    let best = profile
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("grid is nonempty");
    checks.push(CheckLine {
        name: "M3".into(),
        passed: best.feasible && (best.theta - desc.true_mu).abs() <= 0.5 * step + 1e-12,
        detail: format!(
            "population profile minimized at theta = {} (true {})",
            fmt12(best.theta),
            fmt12(desc.true_mu)
        ),
    });

    let probe = |h: f64| -> Result<f64> {
        let grid: Vec<f64> = step_grid(model.theta_min, model.theta_max, h)
            .into_iter()
            .filter(|t| feasible_a_interval(*t, &model).is_ok())
            .collect();
        m4_lipschitz_probe(&model, &truth, &div, &grid, &opts)
    };
    let coarse = probe(M4_STEPS.0)?;
    let fine = probe(M4_STEPS.1)?;
    let rel = (coarse - fine).abs() / coarse.max(fine).max(f64::MIN_POSITIVE);
    checks.push(CheckLine {
        name: "M4".into(),
        passed: coarse.is_finite() && fine.is_finite() && rel <= M4_AGREEMENT,
        detail: format!(
            "Lipschitz ratio {} at step {} vs {} at step {} (relative gap {})",
            fmt12(coarse),
            M4_STEPS.0,
            fmt12(fine),
            M4_STEPS.1,
            fmt12(rel)
        ),
    });

    Ok(ModelAudit {
        checks,
        infeasible_thetas: infeasible,
        m4_coarse: Some(coarse),
        m4_fine: Some(fine),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_follow_replica_rule() {
        let cfg = ExperimentConfig {
            n_ladder: vec![20, 40],
            replications: 2,
            base_seed: 5,
            ..ExperimentConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(
            rows.iter().map(|r| (r.n, r.replication)).collect::<Vec<_>>(),
            vec![(20, 0), (20, 1), (40, 0), (40, 1)]
        );
        assert_eq!(rows[0].seed, 5);
        assert_eq!(rows[1].seed, replica_seed(5, 1));
        assert_eq!(rows[2].seed, rows[0].seed);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ExperimentConfig {
            n_ladder: vec![],
            ..ExperimentConfig::default()
        };
        assert!(run_sweep(&cfg).is_err());
        cfg.n_ladder = vec![10, 0];
        assert!(run_sweep(&cfg).is_err());
        cfg.n_ladder = vec![10];
        cfg.replications = 0;
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn failed_rows_are_recorded() {
        let cfg = ExperimentConfig {
            n_ladder: vec![50],
            model: ModelDescription {
                theta_min: 0.85,
                theta_max: 0.95,
                ..ModelDescription::default()
            },
            ..ExperimentConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows[0].status, RowStatus::Error);
        assert!(rows[0].mu_hat.is_none());
        let csv = sweep_csv(&rows).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",error,"));
        assert_eq!(parse_sweep_csv(&csv).unwrap()[0].status, RowStatus::Error);
    }

    #[test]
    fn zero_budget_times_out() {
        let cfg = ExperimentConfig {
            n_ladder: vec![2000],
            budget: Some(Duration::ZERO),
            ..ExperimentConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows[0].status, RowStatus::Timeout);
    }

    #[test]
    fn step_grid_includes_endpoints() {
        let g = step_grid(0.25, 0.55, 0.01);
        assert_eq!(g.len(), 31);
        assert!((g[30] - 0.55).abs() < 1e-12);
    }
}
