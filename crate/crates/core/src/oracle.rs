//! Exact ground truth by full enumeration of small symmetric groups, plus
//! chi-square goodness-of-fit utilities.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::permstat::csv_err;
use crate::qseries::QParam;
use crate::sampler::Permutation;

/// Largest `n` for [`enumerate_pmf`].
pub const MAX_ENUM: usize = 8;
/// Largest window for [`exact_window_displacement`].
pub const MAX_WINDOW: usize = 9;

/// The Mallows law on `S_n` listed in lexicographic order, so that the
/// index of a permutation equals its [`lehmer_rank`].
#[derive(Debug, Clone)]
pub struct ExactPmf {
    pub n: usize,
    pub q: f64,
    pub support: Vec<Permutation>,
    pub probs: Vec<f64>,
    /// `Σ_σ q^inv(σ)`.
    pub normalizer: f64,
}

impl ExactPmf {
    pub fn prob(&self, perm: &Permutation) -> f64 {
        self.probs[lehmer_rank(perm)]
    }

    pub fn expect<F: Fn(&Permutation) -> f64>(&self, f: F) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Position of `perm` in lexicographic order of `S_n`, from 0.
pub fn lehmer_rank(perm: &Permutation) -> usize {
    let v = perm.images();
    let n = v.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller_after = v[i + 1..].iter().filter(|&&w| w < v[i]).count();
        rank = rank * (n - i) + smaller_after;
    }
    rank
}

// Deliberately quadratic so it shares nothing with the Fenwick version.
fn inversions_naive(v: &[usize]) -> u32 {
    let mut inv = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inv += 1;
            }
        }
    }
    inv
}

fn cycle_lengths_naive(v: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; v.len()];
    let mut out = Vec::new();
    for s in 0..v.len() {
        let mut len = 0;
        let mut j = s;
        while !seen[j] {
            seen[j] = true;
            j = v[j] - 1;
            len += 1;
        }
        if len > 0 {
            out.push(len);
        }
    }
    out
}

/// All permutations of `1..=n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (1..=n).collect();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn enumerate_unchecked(n: usize, q: f64) -> ExactPmf {
    let perms = all_permutations(n);
    let weights: Vec<f64> = perms.iter().map(|v| q.powi(inversions_naive(v) as i32)).collect();
    let normalizer: f64 = weights.iter().sum();
    ExactPmf {
        n,
        q,
        probs: weights.iter().map(|w| w / normalizer).collect(),
        support: perms
            .into_iter()
            .map(Permutation::from_images_unchecked)
            .collect(),
        normalizer,
    }
}

/// Exact `Mallows(n, q)` pmf, `1 <= n <= 8`.
pub fn enumerate_pmf(n: usize, q: QParam) -> Result<ExactPmf> {
    check_size(n, MAX_ENUM)?;
    Ok(enumerate_unchecked(n, q.value()))
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("n must be at least 1".into()))
    } else if n > max {
        Err(Error::SizeCap { n, max })
    } else {
        Ok(())
    }
}

/// `E C_i(Π_n)` by enumeration.
pub fn exact_expected_cycles(n: usize, q: QParam, i: usize) -> Result<f64> {
    let pmf = enumerate_pmf(n, q)?;
    Ok(pmf.expect(|p| {
        cycle_lengths_naive(p.images())
            .into_iter()
            .filter(|&l| l == i)
            .count() as f64
    }))
}

/// Law of `κ_t` by enumeration.
pub fn exact_arc_marginal(n: usize, q: QParam, t: usize) -> Result<BTreeMap<usize, f64>> {
    let pmf = enumerate_pmf(n, q)?;
    if t > n {
        return Err(Error::Index(format!("t = {t} outside 0..={n}")));
    }
    let mut out = BTreeMap::new();
    for (p, w) in pmf.support.iter().zip(&pmf.probs) {
        let k = p.images()[..t].iter().filter(|&&v| v > t).count();
        *out.entry(k).or_insert(0.0) += w;
    }
    Ok(out)
}

/// `P(Π_n(c) = c + d)` for the centre `c = (n+1)/2` of an odd window.
pub fn exact_window_displacement(n: usize, q: QParam, d: i64) -> Result<f64> {
    check_size(n, MAX_WINDOW)?;
    if n.is_multiple_of(2) {
        return Err(Error::Domain(format!("window size {n} must be odd")));
    }
    let c = n.div_ceil(2);
    let target = c as i64 + d;
    if target < 1 || target > n as i64 {
        return Ok(0.0);
    }
    let pmf = enumerate_unchecked(n, q.value());
    Ok(pmf
        .support
        .iter()
        .zip(&pmf.probs)
        .filter(|(p, _)| p.image(c) as i64 == target)
        .map(|(_, w)| w)
        .sum())
}

/// Pearson chi-square result.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Original cells pooled because their expected count was below 5.
    pub cells_merged: usize,
}

impl GofReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

const MIN_EXPECTED: f64 = 5.0;

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 || stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive dof")
        .sf(stat)
        .clamp(0.0, 1.0)
}

/// Groups cells so that each group's weight reaches [`MIN_EXPECTED`]: small
/// cells are pooled together, and a pool that is still small joins the
/// smallest large cell. Returns group labels and the number of pooled cells.
fn merge_plan(expected: &[f64]) -> (Vec<usize>, usize, usize) {
    let small: Vec<usize> = (0..expected.len())
        .filter(|&k| expected[k] < MIN_EXPECTED)
        .collect();
    let mut label = vec![0; expected.len()];
    let mut groups = 0;
    for (k, e) in expected.iter().enumerate() {
        if *e >= MIN_EXPECTED {
            label[k] = groups;
            groups += 1;
        }
    }
    if small.is_empty() {
        return (label, groups, 0);
    }
    let pool: f64 = small.iter().map(|&k| expected[k]).sum();
    let target = if pool >= MIN_EXPECTED || groups == 0 {
        groups += 1;
        groups - 1
    } else {
        let smallest = (0..expected.len())
            .filter(|&k| expected[k] >= MIN_EXPECTED)
            .min_by(|&a, &b| expected[a].total_cmp(&expected[b]))
            .expect("a large cell exists");
        label[smallest]
    };
    for &k in &small {
        label[k] = target;
    }
    (label, groups, small.len())
}

/// Goodness of fit of `observed` counts against cell probabilities
/// `probs`, with `cells - 1` degrees of freedom after merging.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<GofReport> {
    assert_eq!(observed.len(), probs.len(), "cell count mismatch");
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Empty);
    }
    let n = total as f64;
    let mass: f64 = probs.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p / mass * n).collect();
    let (label, groups, merged) = merge_plan(&expected);
    let mut obs = vec![0.0; groups];
    let mut exp = vec![0.0; groups];
    for k in 0..observed.len() {
        obs[label[k]] += observed[k] as f64;
        exp[label[k]] += expected[k];
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = groups.saturating_sub(1);
    Ok(GofReport {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
        cells_merged: merged,
    })
}

/// Homogeneity test of two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<GofReport> {
    assert_eq!(a.len(), b.len(), "cell count mismatch");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Empty);
    }
    let (na, nb) = (na as f64, nb as f64);
    let fa = na / (na + nb);
    // merge on the smaller of the two expected counts
    let min_expected: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x + y) as f64 * fa.min(1.0 - fa))
        .collect();
    let (label, groups, merged) = merge_plan(&min_expected);
    let mut ga = vec![0.0; groups];
    let mut gb = vec![0.0; groups];
    for k in 0..a.len() {
        ga[label[k]] += a[k] as f64;
        gb[label[k]] += b[k] as f64;
    }
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (x, y) in ga.iter().zip(&gb) {
        let t = x + y;
        if t == 0.0 {
            continue;
        }
        used += 1;
        let (ea, eb) = (t * fa, t * (1.0 - fa));
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = used.saturating_sub(1);
    Ok(GofReport {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
        cells_merged: merged,
    })
}

/// One frozen oracle value.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRow {
    pub n: usize,
    pub q: f64,
    pub statistic: String,
    pub value: f64,
}

/// The oracle values kept under version control for regression tests.
pub fn standard_fixtures() -> Result<Vec<FixtureRow>> {
    let mut rows = Vec::new();
    for n in [3usize, 4, 6, 8] {
        for qv in [0.2, 0.5, 0.7, 0.9, 1.0, 2.0] {
            let q = QParam::new(qv)?;
            let pmf = enumerate_pmf(n, q)?;
            let mut push = |statistic: &str, value: f64| {
                rows.push(FixtureRow {
                    n,
                    q: qv,
                    statistic: statistic.to_string(),
                    value,
                })
            };
            push("normalizer", pmf.normalizer);
            push(
                "mean_inversions",
                pmf.expect(|p| inversions_naive(p.images()) as f64),
            );
            for i in 1..=3 {
                push(&format!("mean_c{i}"), exact_expected_cycles(n, q, i)?);
            }
            push("p_identity", pmf.probs[0]);
        }
    }
    Ok(rows)
}

pub fn write_fixtures_csv<W: Write>(rows: &[FixtureRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "q", "statistic", "value"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.q.to_string(),
            r.statistic.clone(),
            format!("{:.17e}", r.value),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fixtures_csv<R: Read>(input: R) -> Result<Vec<FixtureRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("short row {rec:?}")));
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        rows.push(FixtureRow {
            n: field(0)?
                .parse()
                .map_err(|e| Error::Parse(format!("n: {e}")))?,
            q: parse(field(1)?)?,
            statistic: field(2)?.to_string(),
            value: parse(field(3)?)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permstat::{cycle_counts, inversions, Composition};
    use crate::qseries::z_partition;
    use crate::sampler::reverse_compose;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn small_pmfs() {
        let p = enumerate_pmf(2, q(0.5)).unwrap();
        assert!((p.probs[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probs[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = enumerate_pmf(3, q(1.0)).unwrap();
        assert!(p.probs.iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
        let p = enumerate_pmf(8, q(0.9)).unwrap();
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(enumerate_pmf(9, q(0.5)), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn lexicographic_rank() {
        for (k, v) in all_permutations(5).into_iter().enumerate() {
            assert_eq!(lehmer_rank(&Permutation::new(v).unwrap()), k);
        }
    }

    #[test]
    fn normalizer_matches_partition_function() {
        for n in 1..=8 {
            for qv in [0.2, 0.5, 0.7, 0.9, 1.0, 2.0] {
                let z = z_partition(n, q(qv)).unwrap();
                let e = enumerate_pmf(n, q(qv)).unwrap().normalizer;
                assert!((z - e).abs() <= 1e-10 * z.max(1.0), "n={n} q={qv}");
            }
        }
    }

    #[test]
    fn exhaustive_s4_identities() {
        for v in all_permutations(4) {
            let p = Permutation::new(v.clone()).unwrap();
            let inv = inversions(&p);
            assert_eq!(inv, inversions_naive(&v) as u64);
            assert_eq!(inversions(&p.inverse()), inv);
            assert_eq!(inversions(&reverse_compose(&p)), 6 - inv);
            let r = Permutation::reversal(4);
            assert_eq!(inversions(&r.compose(&p).compose(&r)), inv);
            let mut lens = cycle_lengths_naive(&v);
            lens.sort_unstable();
            let c = cycle_counts(&p, Composition::None).unwrap();
            let mut from_counts: Vec<usize> = (1..=4)
                .flat_map(|i| std::iter::repeat_n(i, c.count(i) as usize))
                .collect();
            from_counts.sort_unstable();
            assert_eq!(lens, from_counts);
        }
    }

    #[test]
    fn uniform_cycle_means() {
        for n in 1..=8 {
            for i in 1..=n {
                let e = exact_expected_cycles(n, q(1.0), i).unwrap();
                assert!((e - 1.0 / i as f64).abs() < 1e-12, "n={n} i={i}");
            }
        }
        assert!((exact_expected_cycles(1, q(0.3), 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn arc_marginal_ends() {
        for t in [0, 6] {
            let m = exact_arc_marginal(6, q(0.7), t).unwrap();
            assert_eq!(m.len(), 1);
            assert!((m[&0] - 1.0).abs() < 1e-12);
        }
        assert!(exact_arc_marginal(6, q(0.7), 7).is_err());
    }

    #[test]
    fn window_displacement_symmetry() {
        assert_eq!(exact_window_displacement(1, q(0.4), 0).unwrap(), 1.0);
        for d in 1..=4 {
            let a = exact_window_displacement(9, q(0.6), d).unwrap();
            let b = exact_window_displacement(9, q(0.6), -d).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(exact_window_displacement(11, q(0.6), 0).is_err());
    }

    #[test]
    fn gof_exact_counts() {
        let r = chi_square_gof(&[250, 500, 250], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!((r.statistic, r.p_value, r.dof), (0.0, 1.0, 2));
        assert!(matches!(chi_square_gof(&[0, 0], &[0.5, 0.5]), Err(Error::Empty)));
    }

    #[test]
    fn gof_merges_small_cells() {
        let r = chi_square_gof(&[1000, 0, 1], &[0.999, 0.0005, 0.0005]).unwrap();
        assert_eq!(r.cells_merged, 2);
        assert_eq!(r.dof, 0);
    }

    #[test]
    fn fixtures_round_trip() {
        let rows = standard_fixtures().unwrap();
        let mut buf = Vec::new();
        write_fixtures_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_fixtures_csv(&buf[..]).unwrap(), rows);
    }
}
