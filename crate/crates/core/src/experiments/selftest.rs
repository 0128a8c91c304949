//! Quick oracle suite for the `selftest` subcommand.

use super::{tag, Runner};
use crate::error::Result;
use crate::oracle::{chi_square_gof, enumerate_pmf, exact_expected_cycles, lehmer_rank};
use crate::qseries::{displacement_pmf, m1_exact, z_partition, QParam};
use crate::sampler::{sample_mallows_finite, sample_mallows_two_sided};

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> SelftestCheck {
    SelftestCheck {
        name: name.into(),
        passed,
        detail,
    }
}

/// Exact identities plus sampler goodness of fit on `S_5` with `samples`
/// draws per sampler.
pub fn run_selftest(seed: u64, workers: usize, samples: usize) -> Result<Vec<SelftestCheck>> {
    let runner = Runner::new(workers, seed)?;
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for n in 1..=8 {
        for qv in [0.2, 0.5, 0.7, 0.9, 1.0, 2.0] {
            let q = QParam::new(qv)?;
            let z = z_partition(n, q)?;
            worst = worst.max((enumerate_pmf(n, q)?.normalizer - z).abs() / z);
        }
    }
    out.push(check("normalizer", worst <= 1e-10, format!("max rel err {worst:.2e}")));

    let mut worst = 0.0f64;
    for n in 1..=8 {
        worst = worst.max((exact_expected_cycles(n, QParam::new(1.0)?, 1)? - 1.0).abs());
    }
    out.push(check("uniform fixed points", worst <= 1e-12, format!("max err {worst:.2e}")));

    let mut worst = 0.0f64;
    for qv in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let q = QParam::new(qv)?;
        worst = worst.max((m1_exact(q, 1e-10)? - displacement_pmf(q, 1e-10)?.prob(0)).abs());
    }
    out.push(check("m1 = p(0)", worst <= 1e-8, format!("max err {worst:.2e}")));

    for (name, qv, two_sided) in [
        ("one-sided q=0.7", 0.7, false),
        ("two-sided q=0.7", 0.7, true),
        ("reversal q=2", 2.0, false),
    ] {
        let q = QParam::new(qv)?;
        let pmf = enumerate_pmf(5, q)?;
        let ranks = runner.replicate(tag(name, qv, 5), samples, |rng| {
            let p = if two_sided {
                sample_mallows_two_sided(5, q, rng).expect("q < 1")
            } else {
                sample_mallows_finite(5, q, rng)
            };
            lehmer_rank(&p)
        });
        let mut counts = vec![0u64; pmf.probs.len()];
        for r in ranks {
            counts[r] += 1;
        }
        let gof = chi_square_gof(&counts, &pmf.probs)?;
        out.push(check(
            &format!("gof {name}"),
            gof.passes(1e-3),
            format!("chi2 {:.1} on {} dof, p = {:.3}", gof.statistic, gof.dof, gof.p_value),
        ));
    }
    Ok(out)
}
