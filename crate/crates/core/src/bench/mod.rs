//! Seeded instance generation, timing sweeps and their CSV/JSON output.
//!
//! Instances come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`; `Q`, `K` and `V` are filled in that order, row-major,
//! each entry uniform on `[−B, B]`. The same seed always yields the same
//! bits.

mod config;

pub use config::{BoundRule, EpsRule, Method, SweepConfig};

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attention::{entry_accuracy, entry_interval, error_report, exact_attention, poly_attention, AttentionInstance};
use crate::error::{Error, Result};
use crate::expoly::min_degree_additive;
use crate::featuremap::binomial;
use crate::linalg::DenseMatrix;

pub fn generate_instance(n: usize, d: usize, bound: f64, eps_a: f64, seed: u64) -> Result<AttentionInstance> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("entry bound {bound} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-bound..=bound));
    let q = draw()?;
    let k = draw()?;
    let v = draw()?;
    AttentionInstance::new(q, k, v, bound, eps_a)
}

/// One CSV row: a method at one size, timed as the median over repetitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "B")]
    pub bound: f64,
    pub eps_a: f64,
    pub method: &'static str,
    pub g: Option<usize>,
    pub r: Option<usize>,
    pub wall_time_seconds: f64,
    /// Against exact attention; only when exact ran at this `n`.
    pub max_abs_error: Option<f64>,
    pub seed: u64,
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m].as_secs_f64()
    } else {
        (xs[m - 1].as_secs_f64() + xs[m].as_secs_f64()) / 2.0
    }
}

/// Runs every configured method at every size, in config order. Exact is
/// skipped above `exact_cap`; when it runs, it goes first so the other
/// methods can be scored against it.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &n in &cfg.n_values {
        let bound = cfg.b_rule.at(n);
        let eps_a = cfg.eps_rule.at(n);
        let inst = generate_instance(n, cfg.d, bound, eps_a, cfg.seed)?;
        let record = |method: Method, g, r, times, err| SweepRecord {
            n,
            d: cfg.d,
            bound,
            eps_a,
            method: method.name(),
            g,
            r,
            wall_time_seconds: median(times),
            max_abs_error: err,
            seed: cfg.seed,
        };

        let run_exact = cfg.methods.contains(&Method::Exact) && n <= cfg.exact_cap;
        let mut reference = None;
        if run_exact {
            let mut times = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                let clock = Instant::now();
                reference = Some(exact_attention(&inst));
                times.push(clock.elapsed());
            }
            out.push(record(Method::Exact, None, None, times, Some(0.0)));
        }
        if cfg.methods.contains(&Method::Poly) {
            let mut times = Vec::with_capacity(cfg.repetitions);
            let mut last = None;
            for _ in 0..cfg.repetitions {
                let clock = Instant::now();
                last = Some(poly_attention(&inst)?);
                times.push(clock.elapsed());
            }
            let (t, report) = last.expect("at least one repetition");
            let err = reference.as_ref().map(|e| error_report(e, &t)).transpose()?;
            out.push(record(Method::Poly, Some(report.degree), Some(report.rank), times, err));
        }
    }
    Ok(out)
}

pub fn write_csv<W: Write>(w: W, records: &[SweepRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        csv.serialize(r).map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

pub fn write_json<W: Write>(mut w: W, records: &[SweepRecord]) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)
        .map_err(|e| Error::InvalidParameter(format!("json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Degree and rank PolyAttention would need at size `n`, computed without
/// building anything; the rank is kept exact even where it could never be
/// materialized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimePoint {
    pub n: usize,
    pub d: usize,
    pub bound: f64,
    pub eps_a: f64,
    pub degree: usize,
    pub rank: u128,
}

pub fn regime_point(n: usize, d: usize, b_rule: BoundRule, eps_rule: EpsRule) -> Result<RegimePoint> {
    let bound = b_rule.at(n);
    let eps_a = eps_rule.at(n);
    let degree = min_degree_additive(2.0 * entry_interval(bound), entry_accuracy(bound, eps_a))?;
    let rank = binomial((d + degree) as u64, degree as u64).ok_or(Error::RankOverflow { d, g: degree })?;
    Ok(RegimePoint {
        n,
        d,
        bound,
        eps_a,
        degree,
        rank,
    })
}
