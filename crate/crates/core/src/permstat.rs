//! Deterministic permutation statistics and regeneration-block estimators.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::sampler::{Permutation, StreamStep, WindowPermutation};
use crate::stats::{Estimate, KahanSum};

/// Fewest blocks accepted by the ratio estimators.
pub const MIN_BLOCKS: usize = 1000;
/// Fewest blocks accepted by [`estimate_covariance`].
pub const MIN_COV_BLOCKS: usize = 10_000;

/// Number of inversions, in O(n log n).
pub fn inversions(perm: &Permutation) -> u64 {
    let n = perm.len();
    let mut seen = Fenwick::zeros(n);
    let mut inv = 0u64;
    for (i, &v) in perm.images().iter().enumerate() {
        // earlier entries larger than v
        inv += (i as i64 - seen.prefix(v)) as u64;
        seen.add(v, 1);
    }
    inv
}

/// Cycle-length histogram. `count(i)` is the number of `i`-cycles.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CycleCounts {
    counts: Vec<u64>,
    total_cycles: u64,
}

impl CycleCounts {
    pub fn from_lengths<I: IntoIterator<Item = usize>>(n: usize, lengths: I) -> Self {
        let mut counts = vec![0u64; n + 1];
        let mut total_cycles = 0;
        for len in lengths {
            counts[len] += 1;
            total_cycles += 1;
        }
        Self {
            counts,
            total_cycles,
        }
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts.get(i).copied().unwrap_or(0)
    }

    /// Indexed by cycle length; entry 0 is always zero.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_cycles(&self) -> u64 {
        self.total_cycles
    }

    /// `Σ i·count(i)`, the size of the underlying set.
    pub fn size(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| i as u64 * c)
            .sum()
    }

    pub fn odd_cycles(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

/// Reflection applied after the permutation: `r(i) = -i`, `ρ(i) = 1 - i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reflection {
    R,
    Rho,
}

impl Reflection {
    pub fn apply(self, i: i64) -> i64 {
        match self {
            Reflection::R => -i,
            Reflection::Rho => 1 - i,
        }
    }

    /// The interval `[lo, hi]` is closed under the map.
    pub fn preserves(self, lo: i64, hi: i64) -> bool {
        self.apply(hi) == lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Composition {
    #[default]
    None,
    R,
    Rho,
}

impl Composition {
    pub fn reflection(self) -> Option<Reflection> {
        match self {
            Composition::None => None,
            Composition::R => Some(Reflection::R),
            Composition::Rho => Some(Reflection::Rho),
        }
    }
}

impl From<Reflection> for Composition {
    fn from(r: Reflection) -> Self {
        match r {
            Reflection::R => Composition::R,
            Reflection::Rho => Composition::Rho,
        }
    }
}

/// A bijection of an integer interval.
pub trait IntervalBijection {
    fn lo(&self) -> i64;
    fn hi(&self) -> i64;
    fn image_at(&self, i: i64) -> i64;
}

impl IntervalBijection for Permutation {
    fn lo(&self) -> i64 {
        1
    }

    fn hi(&self) -> i64 {
        self.len() as i64
    }

    fn image_at(&self, i: i64) -> i64 {
        self.image(i as usize) as i64
    }
}

impl IntervalBijection for WindowPermutation {
    fn lo(&self) -> i64 {
        WindowPermutation::lo(self)
    }

    fn hi(&self) -> i64 {
        WindowPermutation::hi(self)
    }

    fn image_at(&self, i: i64) -> i64 {
        self.image(i)
    }
}

fn check_reflection<P: IntervalBijection + ?Sized>(perm: &P, r: Reflection) -> Result<()> {
    if r.preserves(perm.lo(), perm.hi()) {
        Ok(())
    } else {
        Err(Error::ReflectionMismatch {
            lo: perm.lo(),
            hi: perm.hi(),
        })
    }
}

/// Cycle histogram of `perm`, or of `r ∘ perm` / `ρ ∘ perm`.
pub fn cycle_counts<P: IntervalBijection + ?Sized>(
    perm: &P,
    composed_with: Composition,
) -> Result<CycleCounts> {
    let refl = composed_with.reflection();
    if let Some(r) = refl {
        check_reflection(perm, r)?;
    }
    let lo = perm.lo();
    let n = (perm.hi() - lo + 1).max(0) as usize;
    let map = |i: i64| {
        let v = perm.image_at(i);
        refl.map_or(v, |r| r.apply(v))
    };
    let mut visited = vec![false; n];
    let mut lengths = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !visited[j] {
            visited[j] = true;
            len += 1;
            j = (map(j as i64 + lo) - lo) as usize;
        }
        lengths.push(len);
    }
    Ok(CycleCounts::from_lengths(n, lengths))
}

/// `|{i trusted : Σ(i) = refl(i)}|`, the fixed points of `refl ∘ Σ`
/// inside the window's trust margin.
pub fn fixed_points_reflected(window: &WindowPermutation, mode: Reflection) -> Result<usize> {
    check_reflection(window, mode)?;
    Ok(window
        .trusted()
        .filter(|&i| window.image(i) == mode.apply(i))
        .count())
}

/// `κ_t = |{i <= t : π(i) > t}|` for `t = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcPath {
    pub kappa: Vec<usize>,
}

impl ArcPath {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }
}

pub fn arc_path(perm: &Permutation) -> ArcPath {
    let n = perm.len();
    let inv = perm.inverse();
    let mut kappa = Vec::with_capacity(n + 1);
    kappa.push(0usize);
    let mut k = 0usize;
    for t in 1..=n {
        if perm.image(t) > t {
            k += 1;
        }
        if inv.image(t) < t {
            k -= 1;
        }
        kappa.push(k);
    }
    ArcPath { kappa }
}

/// Regeneration flags of a finite permutation: `flags[j-1]` is true iff
/// `π([j]) = [j]`.
pub fn regeneration_flags(perm: &Permutation) -> Vec<bool> {
    let mut max = 0;
    perm.images()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            max = max.max(v);
            max == i + 1
        })
        .collect()
}

/// One excursion between consecutive regeneration times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegenBlock {
    /// Block length `X`.
    pub len: usize,
    /// The block's internal permutation of `1..=len`.
    pub perm: Permutation,
    pub cycle_counts: CycleCounts,
}

impl RegenBlock {
    fn from_images(images: Vec<usize>) -> Self {
        let perm = Permutation::from_images_unchecked(images);
        let cycle_counts = cycle_counts(&perm, Composition::None).expect("no reflection");
        Self {
            len: perm.len(),
            perm,
            cycle_counts,
        }
    }
}

/// Cuts a flagged sequence of absolute values into blocks. Values must be
/// consistent with the flags (each flagged prefix maps onto itself); an
/// unterminated trailing block is discarded.
pub fn blocks_from_flagged<I>(steps: I) -> Vec<RegenBlock>
where
    I: IntoIterator<Item = (u64, bool)>,
{
    let mut blocks = Vec::new();
    let mut base = 0u64;
    let mut current = Vec::new();
    for (value, flag) in steps {
        current.push((value - base) as usize);
        if flag {
            base += current.len() as u64;
            blocks.push(RegenBlock::from_images(std::mem::take(&mut current)));
        }
    }
    blocks
}

/// Blocks of a finite permutation, flags by prefix-max scan.
pub fn regen_blocks(perm: &Permutation) -> Vec<RegenBlock> {
    let flags = regeneration_flags(perm);
    blocks_from_flagged(
        perm.images()
            .iter()
            .zip(flags)
            .map(|(&v, f)| (v as u64, f)),
    )
}

/// Consumes at least `min_steps` steps of a stream, stopping at the first
/// regeneration at or after that point, so that `Σ X` equals the number of
/// steps consumed.
pub fn stream_blocks<S>(stream: &mut S, min_steps: u64) -> Vec<RegenBlock>
where
    S: Iterator<Item = StreamStep>,
{
    let mut steps = Vec::new();
    for step in stream.by_ref() {
        steps.push((step.value, step.is_regeneration));
        if step.is_regeneration && step.position >= min_steps {
            break;
        }
    }
    blocks_from_flagged(steps)
}

/// A simultaneous regeneration block of two streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedRegenBlock {
    pub len: usize,
    /// Cycles of `Σ' ∘ Σ` on the block.
    pub composed_cycle_counts: CycleCounts,
}

/// Blocks ending where both streams regenerate together. Consumes at least
/// `min_steps` from each stream and stops at a common regeneration.
pub fn paired_regen_blocks<A, B>(a: &mut A, b: &mut B, min_steps: u64) -> Vec<PairedRegenBlock>
where
    A: Iterator<Item = StreamStep>,
    B: Iterator<Item = StreamStep>,
{
    let mut blocks = Vec::new();
    let mut base = 0u64;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (sa, sb) in a.by_ref().zip(b.by_ref()) {
        first.push((sa.value - base) as usize);
        second.push((sb.value - base) as usize);
        if sa.is_regeneration && sb.is_regeneration {
            let len = first.len();
            let composed: Vec<usize> = first.iter().map(|&j| second[j - 1]).collect();
            let perm = Permutation::from_images_unchecked(composed);
            blocks.push(PairedRegenBlock {
                len,
                composed_cycle_counts: cycle_counts(&perm, Composition::None)
                    .expect("no reflection"),
            });
            base += len as u64;
            first.clear();
            second.clear();
            if base >= min_steps {
                break;
            }
        }
    }
    blocks
}

/// Per-block values `Y_i = f(Σ_i)`.
pub fn additive_statistic<Y, F>(f: F, blocks: &[RegenBlock]) -> Vec<Y>
where
    F: Fn(&Permutation) -> Y,
{
    blocks.iter().map(|b| f(&b.perm)).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<KahanSum>().value() / xs.len() as f64
}

/// `mean(Y) / mean(X)` with delta-method standard error
/// `sqrt(Var(Y - R X) / N) / mean(X)`.
pub fn ratio_estimate(ys: &[f64], xs: &[f64]) -> Result<Estimate> {
    assert_eq!(ys.len(), xs.len());
    let n = ys.len();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    let xbar = mean(xs);
    let ratio = mean(ys) / xbar;
    let resid: Vec<f64> = ys.iter().zip(xs).map(|(y, x)| y - ratio * x).collect();
    let rbar = mean(&resid);
    let var = resid
        .iter()
        .map(|r| (r - rbar).powi(2))
        .collect::<KahanSum>()
        .value()
        / (n - 1) as f64;
    Ok(Estimate {
        mean: ratio,
        std_error: (var / n as f64).sqrt() / xbar,
        replicates: n,
    })
}

fn require_blocks(got: usize, needed: usize) -> Result<()> {
    if got < needed {
        Err(Error::TooFew { needed, got })
    } else {
        Ok(())
    }
}

/// `m̂_i = mean(C_i) / mean(X)`.
pub fn estimate_mi(blocks: &[RegenBlock], i: usize) -> Result<Estimate> {
    require_blocks(blocks.len(), MIN_BLOCKS)?;
    let ys: Vec<f64> = blocks.iter().map(|b| b.cycle_counts.count(i) as f64).collect();
    let xs: Vec<f64> = blocks.iter().map(|b| b.len as f64).collect();
    ratio_estimate(&ys, &xs)
}

/// `μ̂_{2i} = mean(C_i(Σ'∘Σ)) / (2 mean(X))`.
pub fn estimate_mu2i(blocks: &[PairedRegenBlock], i: usize) -> Result<Estimate> {
    require_blocks(blocks.len(), MIN_BLOCKS)?;
    let ys: Vec<f64> = blocks
        .iter()
        .map(|b| b.composed_cycle_counts.count(i) as f64)
        .collect();
    let xs: Vec<f64> = blocks.iter().map(|b| 2.0 * b.len as f64).collect();
    ratio_estimate(&ys, &xs)
}

/// Symmetric `ℓ × ℓ` matrix, indices are cycle lengths `1..=ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: Vec<Vec<f64>>,
    pub replicates: usize,
}

impl CovarianceEstimate {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i - 1][j - 1]
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }
}

fn covariance_of_u(counts: &[&CycleCounts], lens: &[usize], ell: usize) -> CovarianceEstimate {
    let n = lens.len();
    let xs: Vec<f64> = lens.iter().map(|&x| x as f64).collect();
    let xbar = mean(&xs);
    let scale = xbar.powf(1.5);
    let us: Vec<Vec<f64>> = (1..=ell)
        .map(|i| {
            let cs: Vec<f64> = counts.iter().map(|c| c.count(i) as f64).collect();
            let cbar = mean(&cs);
            let u: Vec<f64> = cs
                .iter()
                .zip(&xs)
                .map(|(c, x)| (c * xbar - x * cbar) / scale)
                .collect();
            let ubar = mean(&u);
            u.into_iter().map(|v| v - ubar).collect()
        })
        .collect();
    let mut matrix = vec![vec![0.0; ell]; ell];
    for a in 0..ell {
        for b in a..ell {
            let s = us[a]
                .iter()
                .zip(&us[b])
                .map(|(x, y)| x * y)
                .collect::<KahanSum>()
                .value()
                / (n - 1) as f64;
            matrix[a][b] = s;
            matrix[b][a] = s;
        }
    }
    CovarianceEstimate {
        matrix,
        replicates: n,
    }
}

/// Plug-in `P̂_ij = Cov(U_i, U_j)` with
/// `U_i = (C_i x̄ - X c̄_i) / x̄^{3/2}`.
pub fn estimate_covariance(blocks: &[RegenBlock], ell: usize) -> Result<CovarianceEstimate> {
    require_blocks(blocks.len(), MIN_COV_BLOCKS)?;
    let counts: Vec<&CycleCounts> = blocks.iter().map(|b| &b.cycle_counts).collect();
    let lens: Vec<usize> = blocks.iter().map(|b| b.len).collect();
    Ok(covariance_of_u(&counts, &lens, ell))
}

/// Even-cycle analogue `Q̂` from paired blocks: the `U` covariance of the
/// composed counts, halved because a block of the pair covers half as many
/// positions of the `q > 1` permutation as it has two-sided steps.
pub fn estimate_covariance_paired(
    blocks: &[PairedRegenBlock],
    ell: usize,
) -> Result<CovarianceEstimate> {
    require_blocks(blocks.len(), MIN_COV_BLOCKS)?;
    let counts: Vec<&CycleCounts> = blocks.iter().map(|b| &b.composed_cycle_counts).collect();
    let lens: Vec<usize> = blocks.iter().map(|b| b.len).collect();
    let mut cov = covariance_of_u(&counts, &lens, ell);
    for row in &mut cov.matrix {
        for v in row {
            *v /= 2.0;
        }
    }
    Ok(cov)
}

/// Writes `block_index,X,c1,...,c_ell`.
pub fn write_blocks_csv<W: Write>(blocks: &[RegenBlock], ell: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["block_index".to_string(), "X".to_string()];
    header.extend((1..=ell).map(|i| format!("c{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (idx, b) in blocks.iter().enumerate() {
        let mut row = vec![idx.to_string(), b.len.to_string()];
        row.extend((1..=ell).map(|i| b.cycle_counts.count(i).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::qseries::QParam;
    use crate::rng::RngStream;
    use crate::sampler::{sample_mallows_finite, stream_mallows};

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversions(&Permutation::identity(6)), 0);
        assert_eq!(inversions(&Permutation::reversal(6)), 15);
        assert_eq!(inversions(&perm(&[2, 1, 3])), 1);
    }

    #[test]
    fn cycle_examples() {
        let c = cycle_counts(&Permutation::identity(5), Composition::None).unwrap();
        assert_eq!((c.count(1), c.total_cycles()), (5, 5));
        let c = cycle_counts(&perm(&[2, 3, 4, 5, 1]), Composition::None).unwrap();
        assert_eq!(c.count(5), 1);

        let w = WindowPermutation::from_permutation(&Permutation::identity(5), -2, 0);
        let c = cycle_counts(&w, Composition::R).unwrap();
        assert_eq!((c.count(1), c.count(2)), (1, 2));
        assert!(cycle_counts(&w, Composition::Rho).is_err());
        assert!(cycle_counts(&Permutation::identity(3), Composition::R).is_err());
    }

    #[test]
    fn reflected_fixed_points() {
        let id7 = WindowPermutation::from_permutation(&Permutation::identity(7), -3, 0);
        assert_eq!(fixed_points_reflected(&id7, Reflection::R).unwrap(), 1);
        let id8 = WindowPermutation::from_permutation(&Permutation::identity(8), -3, 0);
        assert_eq!(fixed_points_reflected(&id8, Reflection::Rho).unwrap(), 0);
        let rev = WindowPermutation::new(-3, (-3..=3).rev().collect(), 0).unwrap();
        assert_eq!(fixed_points_reflected(&rev, Reflection::R).unwrap(), 7);
        assert!(fixed_points_reflected(&id7, Reflection::Rho).is_err());
    }

    #[test]
    fn arc_examples() {
        assert_eq!(arc_path(&Permutation::identity(4)).kappa, vec![0; 5]);
        assert_eq!(arc_path(&Permutation::reversal(4)).kappa, vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn block_examples() {
        let blocks = regen_blocks(&Permutation::identity(5));
        assert_eq!(blocks.len(), 5);
        assert!(blocks.iter().all(|b| b.len == 1 && b.cycle_counts.count(1) == 1));

        let blocks = regen_blocks(&perm(&[2, 3, 4, 1]));
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].cycle_counts.count(4), 1);
    }

    #[test]
    fn degenerate_estimators() {
        let blocks = regen_blocks(&Permutation::identity(2000));
        let m1 = estimate_mi(&blocks, 1).unwrap();
        assert_eq!((m1.mean, m1.std_error), (1.0, 0.0));
        assert_eq!(additive_statistic(|p| p.len(), &blocks), vec![1; 2000]);

        let paired: Vec<PairedRegenBlock> = blocks
            .iter()
            .map(|b| PairedRegenBlock {
                len: 1,
                composed_cycle_counts: b.cycle_counts.clone(),
            })
            .collect();
        assert_eq!(estimate_mu2i(&paired, 1).unwrap().mean, 0.5);
        assert!(matches!(
            estimate_mi(&blocks[..10], 1),
            Err(Error::TooFew { needed: 1000, got: 10 })
        ));
    }

    #[test]
    fn stream_partition_identity() {
        let q = QParam::new(0.4).unwrap();
        let mut s = stream_mallows(q, RngStream::new(5, 0).rng()).unwrap();
        let blocks = stream_blocks(&mut s, 100_000);
        let total: usize = blocks.iter().map(|b| b.len).sum();
        assert!(total >= 100_000);
        assert!(blocks.iter().all(|b| b.cycle_counts.size() == b.len as u64));
    }

    #[test]
    fn blocks_csv_header() {
        let mut buf = Vec::new();
        write_blocks_csv(&regen_blocks(&perm(&[2, 1, 3])), 2, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "block_index,X,c1,c2\n0,2,0,1\n1,1,1,0\n"
        );
    }

    proptest! {
        #[test]
        fn arc_path_properties(n in 1usize..200, qv in 0.05f64..3.0, seed: u64) {
            let mut rng = RngStream::new(seed, 0).rng();
            let p = sample_mallows_finite(n, QParam::new(qv).unwrap(), &mut rng);
            let path = arc_path(&p);
            prop_assert_eq!(path.kappa[0], 0);
            prop_assert_eq!(path.kappa[n], 0);
            for w in path.kappa.windows(2) {
                prop_assert!(w[0].abs_diff(w[1]) <= 1);
            }
            let flags = regeneration_flags(&p);
            for t in 1..=n {
                prop_assert_eq!(path.kappa[t] == 0, flags[t - 1]);
            }
            let blocks = regen_blocks(&p);
            prop_assert_eq!(blocks.iter().map(|b| b.len).sum::<usize>(), n);
            let whole = cycle_counts(&p, Composition::None).unwrap();
            let mut merged = vec![0u64; n + 1];
            for b in &blocks {
                for (i, c) in b.cycle_counts.counts().iter().enumerate() {
                    merged[i] += c;
                }
            }
            prop_assert_eq!(whole.counts(), &merged[..]);
        }

        #[test]
        fn inversions_match_quadratic(v in Just((1..=40usize).collect::<Vec<_>>()).prop_shuffle()) {
            let p = Permutation::new(v.clone()).unwrap();
            let slow = (0..v.len())
                .flat_map(|i| (i + 1..v.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| v[i] > v[j])
                .count() as u64;
            prop_assert_eq!(inversions(&p), slow);
            prop_assert_eq!(inversions(&p.inverse()), slow);
        }
    }
}
