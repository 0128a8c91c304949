//! Odd-cycle tightness for `q > 1` and fixed points of reflected windows.

use super::{fmt_sig, tag, CsvTable, ExperimentConfig, Runner};
use crate::error::{Error, Result};
use crate::permstat::{cycle_counts, fixed_points_reflected, Composition, Reflection};
use crate::qseries::{QParam, Regime};
use crate::sampler::{sample_mallows_finite, sample_mallows_window, sample_mallows_window_rho};
use crate::stats::Estimate;

/// Total variation distance between two empirical pmfs, with a
/// delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub tv: f64,
    pub std_error: f64,
}

/// `½ Σ |p̂₁ - p̂₂|` over histograms indexed by value. The standard error
/// treats `s = sign(p̂₁ - p̂₂)` as fixed:
/// `Var = ¼ [Var₁(s)/N₁ + Var₂(s)/N₂]`.
pub fn tv_distance(a: &[u64], b: &[u64]) -> TvEstimate {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let len = a.len().max(b.len());
    let at = |v: &[u64], k: usize, n: u64| v.get(k).copied().unwrap_or(0) as f64 / n as f64;
    let (mut tv, mut sa, mut sa2, mut sb, mut sb2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..len {
        let (pa, pb) = (at(a, k, na), at(b, k, nb));
        let s = (pa - pb).signum() * f64::from(pa != pb);
        tv += (pa - pb).abs();
        sa += s * pa;
        sa2 += s * s * pa;
        sb += s * pb;
        sb2 += s * s * pb;
    }
    let var = 0.25 * ((sa2 - sa * sa) / na as f64 + (sb2 - sb * sb) / nb as f64);
    TvEstimate {
        tv: 0.5 * tv,
        std_error: var.max(0.0).sqrt(),
    }
}

fn histogram(xs: &[usize]) -> Vec<u64> {
    let mut h = vec![0u64; xs.iter().max().map_or(0, |m| m + 1)];
    for &x in xs {
        h[x] += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct OddTightnessRow {
    pub q: f64,
    pub n_half: usize,
    pub n: usize,
    pub n_other: usize,
    /// Number of odd cycles at `n_half` and at `n`.
    pub tv_half: TvEstimate,
    /// Number of odd cycles at `n` and at `n_other = n + 1`.
    pub tv_parity: TvEstimate,
    /// Elements lying in odd cycles.
    pub odd_elems_half: Estimate,
    pub odd_elems_n: Estimate,
    pub pmf_half: Vec<u64>,
    pub pmf_n: Vec<u64>,
    pub pmf_other: Vec<u64>,
}

impl OddTightnessRow {
    pub fn tight(&self) -> bool {
        self.tv_half.tv <= 0.02 + 4.0 * self.tv_half.std_error
    }

    pub fn parity_distinct(&self) -> bool {
        self.tv_parity.tv > 5.0 * self.tv_parity.std_error
    }

    pub fn odd_mass_ratio(&self) -> f64 {
        self.odd_elems_n.mean / self.odd_elems_half.mean
    }

    pub fn passes(&self) -> bool {
        self.tight() && self.parity_distinct() && self.odd_mass_ratio() <= 1.2
    }
}

fn odd_statistics(runner: &Runner, cfg: &ExperimentConfig, q: QParam, n: usize) -> Vec<(usize, f64)> {
    runner.replicate(tag(&cfg.name, q.value(), n), cfg.replicates, |rng| {
        let c = cycle_counts(&sample_mallows_finite(n, q, rng), Composition::None)
            .expect("no reflection");
        let elems: u64 = (1..=n).step_by(2).map(|l| l as u64 * c.count(l)).sum();
        (c.odd_cycles() as usize, elems as f64)
    })
}

/// Law of the number of odd cycles at `n/2` and `n` (same parity) and at
/// `n + 1`, for each `q > 1`.
pub fn run_odd_tightness(cfg: &ExperimentConfig) -> Result<(Vec<OddTightnessRow>, CsvTable)> {
    let qs = cfg.validate(Regime::SuperCritical)?;
    if cfg.n < 4 {
        return Err(Error::Domain("odd-tightness needs n >= 4".into()));
    }
    let runner = cfg.runner()?;
    let n = cfg.n;
    let n_half = n / 2 + (n / 2 + n) % 2;
    let n_other = n + 1;
    let mut table = CsvTable::new(&[
        "q",
        "n",
        "reps",
        "seed",
        "n_half",
        "tv_half",
        "tv_half_se",
        "tv_parity",
        "tv_parity_se",
        "odd_elems_half",
        "odd_elems_n",
        "odd_mass_ratio",
        "pass",
    ]);
    let mut rows = Vec::new();
    for q in qs {
        let half = odd_statistics(&runner, cfg, q, n_half);
        let full = odd_statistics(&runner, cfg, q, n);
        let other = odd_statistics(&runner, cfg, q, n_other);
        let hist = |v: &[(usize, f64)]| histogram(&v.iter().map(|x| x.0).collect::<Vec<_>>());
        let elems = |v: &[(usize, f64)]| Estimate::from_samples(&v.iter().map(|x| x.1).collect::<Vec<_>>());
        let (ph, pn, po) = (hist(&half), hist(&full), hist(&other));
        let row = OddTightnessRow {
            q: q.value(),
            n_half,
            n,
            n_other,
            tv_half: tv_distance(&ph, &pn),
            tv_parity: tv_distance(&pn, &po),
            odd_elems_half: elems(&half),
            odd_elems_n: elems(&full),
            pmf_half: ph,
            pmf_n: pn,
            pmf_other: po,
        };
        table.push(vec![
            fmt_sig(row.q),
            n.to_string(),
            cfg.replicates.to_string(),
            cfg.seed.to_string(),
            n_half.to_string(),
            fmt_sig(row.tv_half.tv),
            fmt_sig(row.tv_half.std_error),
            fmt_sig(row.tv_parity.tv),
            fmt_sig(row.tv_parity.std_error),
            fmt_sig(row.odd_elems_half.mean),
            fmt_sig(row.odd_elems_n.mean),
            fmt_sig(row.odd_mass_ratio()),
            row.passes().to_string(),
        ]);
        rows.push(row);
    }
    Ok((rows, table))
}

/// Tail estimates `P̂(C_1(ρ∘Σ) >= m)` and `P̂(C_1(r∘Σ) >= m)` for one `q`,
/// indexed from `m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityTail {
    pub q: f64,
    pub half_width: usize,
    pub rho: Vec<Estimate>,
    pub r: Vec<Estimate>,
}

impl ParityTail {
    pub fn rho_ge(&self, m: usize) -> Estimate {
        self.rho[m - 1]
    }

    pub fn r_ge(&self, m: usize) -> Estimate {
        self.r[m - 1]
    }

    /// `a > b` with disjoint 95% confidence intervals.
    pub fn clearly_greater(a: Estimate, b: Estimate) -> bool {
        a.mean - 1.96 * a.std_error > b.mean + 1.96 * b.std_error
    }

    pub fn monotone(&self) -> bool {
        let dec = |v: &[Estimate]| v.windows(2).all(|w| w[1].mean <= w[0].mean);
        dec(&self.rho) && dec(&self.r)
    }

    /// `ρ` wins at `m = 2`, `r` wins at `m = 3`.
    pub fn ordering_k1(&self) -> bool {
        self.rho.len() >= 3
            && Self::clearly_greater(self.rho_ge(2), self.r_ge(2))
            && Self::clearly_greater(self.r_ge(3), self.rho_ge(3))
    }
}

#[derive(Debug, Clone)]
pub struct ParityTailReport {
    pub tails: Vec<ParityTail>,
    pub table: CsvTable,
}

impl ParityTailReport {
    pub fn passed(&self) -> bool {
        self.tails.iter().all(|t| t.monotone() && t.ordering_k1())
    }
}

fn tail_estimates(counts: &[usize], m_max: usize) -> Vec<Estimate> {
    let n = counts.len() as f64;
    (1..=m_max)
        .map(|m| {
            let p = counts.iter().filter(|&&c| c >= m).count() as f64 / n;
            Estimate {
                mean: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                replicates: counts.len(),
            }
        })
        .collect()
}

/// Fixed points of `r∘Σ` on windows `[-W, W]` and of `ρ∘Σ` on independent
/// windows `[-W+1, W]`, counted inside the trust margin, for
/// `m = 1..=2 kmax + 1`. Here `cfg.n` is the half-width `W`.
pub fn run_parity_tail(cfg: &ExperimentConfig, kmax: usize) -> Result<ParityTailReport> {
    let qs = cfg.validate(Regime::SubCritical)?;
    let w = cfg.n;
    if w < 4 {
        return Err(Error::Domain(format!("window half-width {w} is below 4")));
    }
    let runner = cfg.runner()?;
    let m_max = 2 * kmax + 1;
    let mut table = CsvTable::new(&[
        "q",
        "n",
        "reps",
        "seed",
        "m",
        "p_rho_ge_m",
        "se_rho",
        "p_r_ge_m",
        "se_r",
    ]);
    let mut tails = Vec::new();
    for q in qs {
        let pairs = runner.replicate(tag(&cfg.name, q.value(), w), cfg.replicates, |rng| {
            let win = sample_mallows_window(w, q, rng).expect("q < 1");
            let r = fixed_points_reflected(&win, Reflection::R).expect("symmetric window");
            let win = sample_mallows_window_rho(w, q, rng).expect("q < 1");
            let rho = fixed_points_reflected(&win, Reflection::Rho).expect("rho window");
            (rho, r)
        });
        let rho: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let r: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let tail = ParityTail {
            q: q.value(),
            half_width: w,
            rho: tail_estimates(&rho, m_max),
            r: tail_estimates(&r, m_max),
        };
        for m in 1..=m_max {
            let (a, b) = (tail.rho_ge(m), tail.r_ge(m));
            table.push(vec![
                fmt_sig(q.value()),
                w.to_string(),
                cfg.replicates.to_string(),
                cfg.seed.to_string(),
                m.to_string(),
                fmt_sig(a.mean),
                fmt_sig(a.std_error),
                fmt_sig(b.mean),
                fmt_sig(b.std_error),
            ]);
        }
        tails.push(tail);
    }
    Ok(ParityTailReport { tails, table })
}
