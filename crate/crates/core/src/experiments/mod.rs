//! Monte Carlo experiments behind the `mallows` command line tool.
//!
//! Every replicate draws from its own [`RngStream`], derived from the run
//! seed, a tag naming the experiment and grid point, and the replicate
//! index. Results are gathered in index order before any aggregation, so
//! output does not depend on the number of workers.

use std::path::PathBuf;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qseries::{QParam, Regime, DEFAULT_TOL};
use crate::rng::RngStream;

mod clt;
mod curves;
mod parity;
mod plot;
mod selftest;
mod table;

pub use clt::{run_clt_check, run_even_clt_check, CltReport, CltRow};
pub use curves::{constants_table, run_ceco_curve, run_m1_curve, run_mu2_curve, CurveReport};
pub use parity::{
    run_odd_tightness, run_parity_tail, tv_distance, OddTightnessRow, ParityTail, ParityTailReport,
    TvEstimate,
};
pub use plot::{emit_plot_script, plot_script, Figure};
pub use selftest::{run_selftest, SelftestCheck};
pub use table::{fmt_sig, CsvTable};

/// `0.05, 0.10, ..., 0.95`
pub fn default_sub_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

pub fn default_super_grid() -> Vec<f64> {
    vec![1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 15.0, 20.0, 25.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub q_grid: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub tol: f64,
}

impl ExperimentConfig {
    pub fn new(name: &str, q_grid: Vec<f64>, n: usize, replicates: usize) -> Self {
        Self {
            name: name.to_string(),
            q_grid,
            n,
            replicates,
            seed: 1,
            workers: 1,
            output_path: None,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Checks sizes and that every grid point lies in `regime`.
    pub fn validate(&self, regime: Regime) -> Result<Vec<QParam>> {
        if self.replicates == 0 {
            return Err(Error::Domain("replicates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if self.q_grid.is_empty() {
            return Err(Error::Domain("empty q grid".into()));
        }
        self.q_grid
            .iter()
            .map(|&q| {
                let q = QParam::new(q)?;
                if q.regime() == regime {
                    Ok(q)
                } else {
                    Err(Error::Domain(format!(
                        "{}: q = {q} is outside the {regime:?} regime",
                        self.name
                    )))
                }
            })
            .collect()
    }

    pub(crate) fn runner(&self) -> Result<Runner> {
        Runner::new(self.workers, self.seed)
    }
}

/// A worker pool plus the run seed.
pub(crate) struct Runner {
    pool: rayon::ThreadPool,
    seed: u64,
}

impl Runner {
    pub(crate) fn new(workers: usize, seed: u64) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(Self { pool, seed })
    }

    /// `f` applied to replicates `0..reps`, each with its own stream,
    /// returned in replicate order.
    pub(crate) fn replicate<T, F>(&self, tag: u64, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync,
    {
        let seed = self.seed;
        self.pool.install(|| {
            (0..reps as u64)
                .into_par_iter()
                .map(|k| f(&mut RngStream::derive(seed, tag, k).rng()))
                .collect()
        })
    }
}

/// FNV-1a over the experiment name, a parameter and a size.
pub(crate) fn tag(name: &str, q: f64, n: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = name
        .bytes()
        .chain(q.to_bits().to_le_bytes())
        .chain((n as u64).to_le_bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Stream chunks used for regeneration estimates; fixed so that results do
/// not depend on the worker count.
pub(crate) const STREAM_CHUNKS: usize = 16;

/// Parses `a,b,c` or `start:stop:step`.
pub fn parse_q_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || stop < start {
                return Err(Error::Parse(format!("bad range {s:?}")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            // round to the step's decimal grid to avoid 0.30000000000000004
            Ok((0..=count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(Error::Parse(format!("bad grid {s:?}"))),
    }
}
