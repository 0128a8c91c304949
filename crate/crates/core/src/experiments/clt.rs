//! Normal-limit checks for rescaled cycle counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fmt_sig, tag, CsvTable, ExperimentConfig, Runner, STREAM_CHUNKS};
use crate::error::Result;
use crate::permstat::{
    cycle_counts, estimate_covariance, estimate_covariance_paired, estimate_mi, estimate_mu2i,
    paired_regen_blocks, stream_blocks, Composition, CovarianceEstimate, PairedRegenBlock,
    RegenBlock,
};
use crate::qseries::{mu2_exact, QParam, Regime};
use crate::sampler::{sample_mallows_finite, stream_mallows};
use crate::stats::{Estimate, Moments};

pub const MAX_SKEW: f64 = 0.15;
pub const MAX_EXCESS_KURTOSIS: f64 = 0.3;
pub const MAX_REL_VARIANCE_GAP: f64 = 0.15;

/// Standardized moments of `(C - center·n)/√n` for one cycle length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltRow {
    pub q: f64,
    /// Cycle length of the statistic.
    pub len: usize,
    pub center: Estimate,
    pub moments: Moments,
    /// Regeneration estimate of the limiting variance.
    pub cov_hat: f64,
}

impl CltRow {
    pub fn rel_variance_gap(&self) -> f64 {
        (self.moments.variance / self.cov_hat - 1.0).abs()
    }

    pub fn passes(&self) -> bool {
        self.moments.skewness.abs() <= MAX_SKEW
            && self.moments.excess_kurtosis.abs() <= MAX_EXCESS_KURTOSIS
            && self.rel_variance_gap() <= MAX_REL_VARIANCE_GAP
    }
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
    /// Regeneration estimate of the centring against its exact value, when
    /// one is known: `(q, estimate, exact)`.
    pub centering: Vec<(f64, Estimate, f64)>,
    pub table: CsvTable,
}

impl CltReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CltRow::passes)
            && self.centering.iter().all(|(_, e, x)| e.within(*x, 4.0))
    }
}

fn regen_blocks_parallel(runner: &Runner, name: &str, q: QParam, steps: u64) -> Vec<RegenBlock> {
    let per_chunk = steps.div_ceil(STREAM_CHUNKS as u64);
    runner
        .replicate(tag(name, q.value(), 0), STREAM_CHUNKS, |rng| {
            let mut s = stream_mallows(q, rng).expect("q < 1");
            stream_blocks(&mut s, per_chunk)
        })
        .into_iter()
        .flatten()
        .collect()
}

fn paired_blocks_parallel(
    runner: &Runner,
    name: &str,
    q: QParam,
    steps: u64,
) -> Vec<PairedRegenBlock> {
    let per_chunk = steps.div_ceil(STREAM_CHUNKS as u64);
    let inv = q.inverse();
    runner
        .replicate(tag(name, q.value(), 0), STREAM_CHUNKS, |rng| {
            let other = ChaCha8Rng::seed_from_u64(rng.gen());
            let mut a = stream_mallows(inv, rng).expect("1/q < 1");
            let mut b = stream_mallows(inv, other).expect("1/q < 1");
            paired_regen_blocks(&mut a, &mut b, per_chunk)
        })
        .into_iter()
        .flatten()
        .collect()
}

fn sample_counts(
    cfg: &ExperimentConfig,
    runner: &Runner,
    q: QParam,
    lens: &[usize],
) -> Vec<Vec<f64>> {
    let rows = runner.replicate(tag(&cfg.name, q.value(), cfg.n), cfg.replicates, |rng| {
        let c = cycle_counts(&sample_mallows_finite(cfg.n, q, rng), Composition::None)
            .expect("no reflection");
        lens.iter().map(|&l| c.count(l) as f64).collect::<Vec<_>>()
    });
    (0..lens.len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

fn standardized(counts: &[f64], center: f64, n: usize) -> Moments {
    let nf = n as f64;
    let z: Vec<f64> = counts.iter().map(|c| (c - center * nf) / nf.sqrt()).collect();
    Moments::from_samples(&z)
}

const HEADER: [&str; 14] = [
    "q",
    "n",
    "reps",
    "seed",
    "cycle_len",
    "center",
    "center_se",
    "mean",
    "variance",
    "skewness",
    "excess_kurtosis",
    "cov_hat",
    "rel_var_gap",
    "pass",
];

fn push_row(table: &mut CsvTable, cfg: &ExperimentConfig, r: &CltRow) {
    table.push(vec![
        fmt_sig(r.q),
        cfg.n.to_string(),
        cfg.replicates.to_string(),
        cfg.seed.to_string(),
        r.len.to_string(),
        fmt_sig(r.center.mean),
        fmt_sig(r.center.std_error),
        fmt_sig(r.moments.mean),
        fmt_sig(r.moments.variance),
        fmt_sig(r.moments.skewness),
        fmt_sig(r.moments.excess_kurtosis),
        fmt_sig(r.cov_hat),
        fmt_sig(r.rel_variance_gap()),
        r.passes().to_string(),
    ]);
}

fn build_rows(
    q: QParam,
    lens: &[usize],
    centers: &[Estimate],
    counts: &[Vec<f64>],
    cov: &CovarianceEstimate,
    n: usize,
) -> Vec<CltRow> {
    (0..lens.len())
        .map(|j| CltRow {
            q: q.value(),
            len: lens[j],
            center: centers[j],
            moments: standardized(&counts[j], centers[j].mean, n),
            cov_hat: cov.get(j + 1, j + 1),
        })
        .collect()
}

/// `q < 1`: `(C_i(Π_n) - m̂_i n)/√n` for `i <= ell`, compared with the
/// regeneration estimate `P̂_ii` from `regen_steps` stream steps.
pub fn run_clt_check(cfg: &ExperimentConfig, ell: usize, regen_steps: u64) -> Result<CltReport> {
    let qs = cfg.validate(Regime::SubCritical)?;
    let runner = cfg.runner()?;
    let mut table = CsvTable::new(&HEADER);
    let mut rows = Vec::new();
    let lens: Vec<usize> = (1..=ell).collect();
    for q in qs {
        let blocks = regen_blocks_parallel(&runner, &format!("{}-regen", cfg.name), q, regen_steps);
        let centers = lens
            .iter()
            .map(|&i| estimate_mi(&blocks, i))
            .collect::<Result<Vec<_>>>()?;
        let cov = estimate_covariance(&blocks, ell)?;
        let counts = sample_counts(cfg, &runner, q, &lens);
        for r in build_rows(q, &lens, &centers, &counts, &cov, cfg.n) {
            push_row(&mut table, cfg, &r);
            rows.push(r);
        }
    }
    Ok(CltReport {
        rows,
        centering: Vec::new(),
        table,
    })
}

/// `q > 1`: `(C_{2i}(Π_n) - μ_{2i} n)/√n` for `i <= ell`, compared with
/// `Q̂_ii` from paired streams at `1/q`. The `i = 1` centring is the exact
/// `μ_2`, and the paired estimate of it is gated against that value.
pub fn run_even_clt_check(
    cfg: &ExperimentConfig,
    ell: usize,
    regen_steps: u64,
) -> Result<CltReport> {
    let qs = cfg.validate(Regime::SuperCritical)?;
    let runner = cfg.runner()?;
    let mut table = CsvTable::new(&HEADER);
    let mut rows = Vec::new();
    let mut centering = Vec::new();
    let lens: Vec<usize> = (1..=ell).map(|i| 2 * i).collect();
    for q in qs {
        let blocks = paired_blocks_parallel(&runner, &format!("{}-regen", cfg.name), q, regen_steps);
        let mut centers = (1..=ell)
            .map(|i| estimate_mu2i(&blocks, i))
            .collect::<Result<Vec<_>>>()?;
        let exact = mu2_exact(q, cfg.tol)?;
        centering.push((q.value(), centers[0], exact));
        centers[0] = Estimate {
            mean: exact,
            std_error: 0.0,
            replicates: centers[0].replicates,
        };
        let cov = estimate_covariance_paired(&blocks, ell)?;
        let counts = sample_counts(cfg, &runner, q, &lens);
        for r in build_rows(q, &lens, &centers, &counts, &cov, cfg.n) {
            push_row(&mut table, cfg, &r);
            rows.push(r);
        }
    }
    Ok(CltReport {
        rows,
        centering,
        table,
    })
}
