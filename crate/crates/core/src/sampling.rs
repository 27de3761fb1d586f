//! Seeded inverse-CDF sampling from quadratic densities.
//!
//! Streams come from PCG XSL RR 128/64 ([`rand_pcg::Pcg64`]) seeded with
//! `Pcg64::seed_from_u64(seed)`. Each uniform is `(next_u64() >> 11) * 2⁻⁵³`
//! and is mapped through the inverse of the cubic CDF with a bracketing
//! root finder at absolute tolerance [`SAMPLE_ROOT_TOL`]. Replica `r` of a
//! run seeded with `s` uses seed `s + r * REPLICA_SEED_STRIDE` (wrapping).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand_pcg::rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::divergence::pow_alpha;
use crate::error::{Error, Result};
use crate::model::{Density, QuadraticDensity};
use crate::numerics::{bracket_root_increasing, Domain};

/// Odd constant separating per-replica seeds (the 64-bit golden ratio).
pub const REPLICA_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
pub const SAMPLE_ROOT_TOL: f64 = 1e-13;

pub fn replica_seed(base_seed: u64, replica: u64) -> u64 {
    base_seed.wrapping_add(replica.wrapping_mul(REPLICA_SEED_STRIDE))
}

/// The empirical measure `P_n` of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<f64>,
    seed: u64,
    source: String,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<f64>, seed: u64, source: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("sample contains non-finite value {x}")));
        }
        Ok(EmpiricalMeasure {
            points,
            seed,
            source: source.into(),
        })
    }

    /// Skips validation; support is still checked wherever `K` is known.
    pub fn new_unchecked(points: Vec<f64>, seed: u64, source: impl Into<String>) -> Self {
        EmpiricalMeasure {
            points,
            seed,
            source: source.into(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.points.len() as f64
    }

    pub fn check_support(&self, domain: Domain) -> Result<()> {
        match self.points.iter().find(|&&x| !domain.contains(x)) {
            Some(&x) => Err(Error::OutsideSupport {
                x,
                lower: domain.lower(),
                upper: domain.upper(),
            }),
            None => Ok(()),
        }
    }

    /// Single-column CSV; the header cell records the seed and the source.
    pub fn to_csv_string(&self) -> String {
        let mut out = format!("x seed={} source={}\n", self.seed, self.source.replace([',', '\n'], " "));
        for x in &self.points {
            out.push_str(&format!("{x:?}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(BufReader::new(file))
    }

    pub fn parse_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io("<sample>", e))?,
            None => return Err(Error::EmptySample),
        };
        let mut seed = 0;
        let mut source = String::from("file");
        if let Some(rest) = header.trim().strip_prefix('x') {
            for token in rest.split_whitespace() {
                if let Some(s) = token.strip_prefix("seed=") {
                    seed = s.parse().map_err(|_| Error::Parse {
                        line: 1,
                        key: "seed".into(),
                        message: format!("not an unsigned integer: {s:?}"),
                    })?;
                }
            }
            if let Some(idx) = rest.find("source=") {
                source = rest[idx + "source=".len()..].trim().to_string();
            }
        } else {
            return Err(Error::Parse {
                line: 1,
                key: "x".into(),
                message: format!("expected a header row starting with `x`, got {header:?}"),
            });
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<sample>", e))?;
            let cell = line.trim();
            if cell.is_empty() {
                continue;
            }
            let x = cell.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                key: "x".into(),
                message: format!("not a number: {cell:?}"),
            })?;
            points.push(x);
        }
        EmpiricalMeasure::new(points, seed, source)
    }
}

/// Draws `n` points from `p` by inverting its CDF.
pub fn sample(p: &QuadraticDensity, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let dom = p.domain();
    let total = p.cdf(dom.upper());
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let target = u * total;
        let br = bracket_root_increasing(
            |x| p.cdf(x) - target,
            dom.lower(),
            dom.upper(),
            SAMPLE_ROOT_TOL,
            0.0,
        )?;
        points.push(br.root.clamp(dom.lower(), dom.upper()));
    }
    Ok(EmpiricalMeasure::new_unchecked(
        points,
        seed,
        format!("quadratic(a={} b={} c={})", p.a, p.b, p.c),
    ))
}

/// `(1/n) Σ q^α(Xᵢ)`, summed in index order.
pub fn empirical_mean_of<Q: Density + ?Sized>(q: &Q, alpha: f64, sample: &EmpiricalMeasure) -> f64 {
    let sum: f64 = sample.points.iter().map(|&x| pow_alpha(q.eval(x), alpha)).sum();
    sum / sample.points.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> QuadraticDensity {
        QuadraticDensity::from_constraints(4.0, 0.4, Domain::unit())
    }

    #[test]
    fn uniform_sample_mean() {
        let n = 100_000;
        let s = sample(&QuadraticDensity::uniform(Domain::unit()), n, 11).unwrap();
        let bound = 3.0 * (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((s.mean() - 0.5).abs() < bound);
    }

    #[test]
    fn p0_sample_mean() {
        // E[X²] under p0 = a/5 + b/4 + c/3 with (a, b, c) = (4, -5.2, 34/15).
        let second = 4.0 / 5.0 - 5.2 / 4.0 + 34.0 / 45.0;
        let sigma = (second - 0.16f64).sqrt();
        let n = 100_000;
        let s = sample(&p0(), n, 5).unwrap();
        assert!((s.mean() - 0.4).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn single_point_in_support() {
        let s = sample(&p0(), 1, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert!(Domain::unit().contains(s.points()[0]));
    }

    #[test]
    fn zero_size_is_rejected() {
        assert!(matches!(sample(&p0(), 0, 0), Err(Error::EmptySample)));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample(&p0(), 500, 42).unwrap();
        let b = sample(&p0(), 500, 42).unwrap();
        let c = sample(&p0(), 500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn empirical_mean_examples() {
        let u = QuadraticDensity::uniform(Domain::unit());
        let s = EmpiricalMeasure::new(vec![0.25, 0.75], 0, "manual").unwrap();
        assert_eq!(empirical_mean_of(&u, 0.3, &s), 1.0);
        let lin = QuadraticDensity::new(0.0, 2.0, 0.0, Domain::unit());
        assert!((empirical_mean_of(&lin, 1.0, &s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_header_carries_seed_and_source() {
        let s = sample(&p0(), 20, 9).unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("x seed=9 source=quadratic("));
        let back = EmpiricalMeasure::parse_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_parse_errors_name_line() {
        let err = EmpiricalMeasure::parse_csv("x seed=1\n0.5\nfoo\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(EmpiricalMeasure::parse_csv("".as_bytes()).is_err());
        assert!(EmpiricalMeasure::parse_csv("x\n".as_bytes()).is_err());
    }
}
