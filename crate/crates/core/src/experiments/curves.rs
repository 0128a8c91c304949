//! Cycle-count curves against their limiting constants.

use super::{fmt_sig, tag, CsvTable, ExperimentConfig};
use crate::error::Result;
use crate::permstat::{cycle_counts, Composition};
use crate::qseries::{
    ce_co_exact, expected_fixed_points_finite, m1_exact, mu2_exact, ExactConstants, QParam,
    Regime,
};
use crate::sampler::sample_mallows_finite;
use crate::stats::Estimate;

/// One Monte Carlo mean set against a reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub n: usize,
    pub estimate: Estimate,
    pub exact: f64,
}

impl CurvePoint {
    pub fn within_4se(&self) -> bool {
        self.estimate.within(self.exact, 4.0)
    }
}

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub points: Vec<CurvePoint>,
    pub table: CsvTable,
}

impl CurveReport {
    /// Every point lies within four standard errors of its limit.
    pub fn passed(&self) -> bool {
        self.points.iter().all(CurvePoint::within_4se)
    }
}

fn cycle_mean(
    cfg: &ExperimentConfig,
    runner: &super::Runner,
    q: QParam,
    n: usize,
    len: usize,
    per_n: bool,
) -> Estimate {
    let scale = if per_n { n as f64 } else { 1.0 };
    let xs = runner.replicate(tag(&cfg.name, q.value(), n), cfg.replicates, |rng| {
        let p = sample_mallows_finite(n, q, rng);
        cycle_counts(&p, Composition::None)
            .expect("no reflection")
            .count(len) as f64
            / scale
    });
    Estimate::from_samples(&xs)
}

fn provenance(cfg: &ExperimentConfig, q: f64, n: usize) -> Vec<String> {
    vec![
        fmt_sig(q),
        n.to_string(),
        cfg.replicates.to_string(),
        cfg.seed.to_string(),
    ]
}

/// Mean `C_1(Π_n)/n` for `q < 1`. Besides the limit `m_1` the table
/// carries the exact finite-`n` mean from the arc chain.
pub fn run_m1_curve(cfg: &ExperimentConfig) -> Result<CurveReport> {
    let qs = cfg.validate(Regime::SubCritical)?;
    let runner = cfg.runner()?;
    let mut table = CsvTable::new(&[
        "q",
        "n",
        "reps",
        "seed",
        "mc_mean",
        "mc_se",
        "exact_m1",
        "exact_finite_n",
        "z",
        "within_4se",
    ]);
    let mut points = Vec::new();
    for q in qs {
        let est = cycle_mean(cfg, &runner, q, cfg.n, 1, true);
        let exact = m1_exact(q, cfg.tol)?;
        let finite = expected_fixed_points_finite(cfg.n, q)? / cfg.n as f64;
        let point = CurvePoint {
            q: q.value(),
            n: cfg.n,
            estimate: est,
            exact,
        };
        let mut row = provenance(cfg, q.value(), cfg.n);
        row.extend([
            fmt_sig(est.mean),
            fmt_sig(est.std_error),
            fmt_sig(exact),
            fmt_sig(finite),
            fmt_sig(est.z_score(exact)),
            point.within_4se().to_string(),
        ]);
        table.push(row);
        points.push(point);
    }
    Ok(CurveReport { points, table })
}

/// Mean `C_2(Π_n)/n` for `q > 1`.
pub fn run_mu2_curve(cfg: &ExperimentConfig) -> Result<CurveReport> {
    let qs = cfg.validate(Regime::SuperCritical)?;
    let runner = cfg.runner()?;
    let mut table = CsvTable::new(&[
        "q",
        "n",
        "reps",
        "seed",
        "mc_mean",
        "mc_se",
        "exact_mu2",
        "z",
        "within_4se",
    ]);
    let mut points = Vec::new();
    for q in qs {
        let est = cycle_mean(cfg, &runner, q, cfg.n, 2, true);
        let exact = mu2_exact(q, cfg.tol)?;
        let point = CurvePoint {
            q: q.value(),
            n: cfg.n,
            estimate: est,
            exact,
        };
        let mut row = provenance(cfg, q.value(), cfg.n);
        row.extend([
            fmt_sig(est.mean),
            fmt_sig(est.std_error),
            fmt_sig(exact),
            fmt_sig(est.z_score(exact)),
            point.within_4se().to_string(),
        ]);
        table.push(row);
        points.push(point);
    }
    Ok(CurveReport { points, table })
}

/// Mean `C_1` (not divided by `n`) at an even `n` against `c_e` and at
/// `n + 1` against `c_o`. Points alternate even, odd per grid value.
pub fn run_ceco_curve(cfg: &ExperimentConfig) -> Result<CurveReport> {
    let qs = cfg.validate(Regime::SuperCritical)?;
    let runner = cfg.runner()?;
    let n_even = cfg.n - cfg.n % 2;
    let n_odd = n_even + 1;
    let mut table = CsvTable::new(&[
        "q",
        "n",
        "reps",
        "seed",
        "mc_even_n",
        "se_even",
        "mc_odd_n",
        "se_odd",
        "exact_ce",
        "exact_co",
        "co_gt_half_gt_ce",
        "within_4se",
    ]);
    let mut points = Vec::new();
    for q in qs {
        let (ce, co) = ce_co_exact(q, cfg.tol)?;
        let even = CurvePoint {
            q: q.value(),
            n: n_even,
            estimate: cycle_mean(cfg, &runner, q, n_even, 1, false),
            exact: ce,
        };
        let odd = CurvePoint {
            q: q.value(),
            n: n_odd,
            estimate: cycle_mean(cfg, &runner, q, n_odd, 1, false),
            exact: co,
        };
        let mut row = provenance(cfg, q.value(), n_even);
        row.extend([
            fmt_sig(even.estimate.mean),
            fmt_sig(even.estimate.std_error),
            fmt_sig(odd.estimate.mean),
            fmt_sig(odd.estimate.std_error),
            fmt_sig(ce),
            fmt_sig(co),
            (co > 0.5 && 0.5 > ce).to_string(),
            (even.within_4se() && odd.within_4se()).to_string(),
        ]);
        table.push(row);
        points.extend([even, odd]);
    }
    Ok(CurveReport { points, table })
}

/// Exact limit constants over a grid; blank cells where a constant is not
/// defined for the regime.
pub fn constants_table(q_grid: &[f64], tol: f64) -> Result<CsvTable> {
    let mut table = CsvTable::new(&["q", "tol", "m1", "mu2", "c_e", "c_o"]);
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    for &q in q_grid {
        let c = ExactConstants::compute(QParam::new(q)?, tol)?;
        table.push(vec![
            fmt_sig(q),
            fmt_sig(tol),
            opt(c.m1),
            opt(c.mu2),
            opt(c.c_e),
            opt(c.c_o),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_curve() {
        let cfg = ExperimentConfig::new("m1-curve", vec![0.5], 1, 1);
        let r = run_m1_curve(&cfg).unwrap();
        assert_eq!(r.points[0].estimate.mean, 1.0);
        assert_eq!(r.table.rows.len(), 1);
        assert!(run_m1_curve(&ExperimentConfig::new("m1-curve", vec![2.0], 1, 1)).is_err());
    }

    #[test]
    fn two_cycles_bounded_at_n2() {
        let cfg = ExperimentConfig::new("mu2-curve", vec![1.5, 4.0], 2, 200);
        let r = run_mu2_curve(&cfg).unwrap();
        assert!(r.points.iter().all(|p| p.estimate.mean <= 0.5));
    }

    #[test]
    fn constants_blank_outside_regime() {
        let t = constants_table(&[0.5, 2.0], 1e-8).unwrap();
        assert_eq!(t.rows[0][3], "");
        assert_eq!(t.rows[1][2], "");
        assert!(constants_table(&[1.0], 1e-8).is_err());
    }
}
