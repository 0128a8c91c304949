//! Random generation of Mallows permutations.
//!
//! Four procedures are provided: the finite iterative sampler, its two-sided
//! variant, windows of the bi-infinite model (finite Mallows relabelled to a
//! centred interval), and the lazy `Mallows(N, q)` stream with regeneration
//! flags. `q > 1` is handled by composing a `1/q` sample with the reversal.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::qseries::{QParam, Regime};

/// A bijection of `{1, ..., n}` stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// Validates that `images` is a bijection of `1..=images.len()`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &v in &images {
            if v == 0 || v > n || seen[v] {
                return Err(Error::Parse(format!("{images:?} is not a permutation of 1..={n}")));
            }
            seen[v] = true;
        }
        Ok(Self { images })
    }

    pub(crate) fn from_images_unchecked(images: Vec<usize>) -> Self {
        debug_assert!(Self::new(images.clone()).is_ok());
        Self { images }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (1..=n).collect(),
        }
    }

    /// `i -> n + 1 - i`
    pub fn reversal(n: usize) -> Self {
        Self {
            images: (1..=n).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image of `i` (1-based).
    pub fn image(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn into_images(self) -> Vec<usize> {
        self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Self { images: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len(), "composition of different sizes");
        Self {
            images: other.images.iter().map(|&j| self.images[j - 1]).collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        Self::new(self.images.clone()).is_ok()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.images {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(images)
    }
}

/// `r_n ∘ π`, i.e. `i -> n + 1 - π(i)`.
pub fn reverse_compose(perm: &Permutation) -> Permutation {
    let n = perm.len();
    Permutation {
        images: perm.images.iter().map(|&v| n + 1 - v).collect(),
    }
}

/// A bijection of the integer interval `[offset, offset + len - 1]`.
///
/// Windows sampled from [`sample_mallows_window`] carry a trust margin `B`:
/// only indices at distance at least `B` from either end of the interval are
/// read as values of the bi-infinite permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPermutation {
    offset: i64,
    images: Vec<i64>,
    trust_margin: usize,
}

impl WindowPermutation {
    /// Relabel `perm` so that its domain starts at `offset`.
    pub fn from_permutation(perm: &Permutation, offset: i64, trust_margin: usize) -> Self {
        Self {
            offset,
            images: perm.images.iter().map(|&v| v as i64 - 1 + offset).collect(),
            trust_margin,
        }
    }

    /// Validating constructor for an explicit image list over `[offset, ..]`.
    pub fn new(offset: i64, images: Vec<i64>, trust_margin: usize) -> Result<Self> {
        let shifted: Vec<usize> = images
            .iter()
            .map(|&v| {
                let s = v - offset + 1;
                if s < 1 { 0 } else { s as usize }
            })
            .collect();
        Permutation::new(shifted)?;
        Ok(Self {
            offset,
            images,
            trust_margin,
        })
    }

    pub fn lo(&self) -> i64 {
        self.offset
    }

    pub fn hi(&self) -> i64 {
        self.offset + self.images.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: i64) -> i64 {
        self.images[(i - self.offset) as usize]
    }

    pub fn images(&self) -> &[i64] {
        &self.images
    }

    pub fn trust_margin(&self) -> usize {
        self.trust_margin
    }

    /// Indices whose values are trusted, as an inclusive range. Empty when
    /// the margin swallows the whole window.
    pub fn trusted(&self) -> std::ops::RangeInclusive<i64> {
        let b = self.trust_margin as i64;
        (self.lo() + b)..=(self.hi() - b)
    }

    pub fn to_permutation(&self) -> Permutation {
        Permutation::from_images_unchecked(
            self.images.iter().map(|&v| (v - self.offset + 1) as usize).collect(),
        )
    }
}

/// Truncated geometric law on `1..=n`: `P(k) ∝ p (1-p)^{k-1}`; `p = 0`
/// means uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncGeomSpec {
    pub n: usize,
    pub p: f64,
}

impl TruncGeomSpec {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("TGeo needs n >= 1, p in [0, 1]; got n={n}, p={p}")));
        }
        Ok(Self { n, p })
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 || k > self.n {
            return 0.0;
        }
        if self.p == 0.0 {
            return 1.0 / self.n as f64;
        }
        let l = (-self.p).ln_1p();
        self.p * ((k - 1) as f64 * l).exp() / -(self.n as f64 * l).exp_m1()
    }
}

/// One draw by closed-form inverse CDF.
pub fn sample_trunc_geom<R: Rng + ?Sized>(spec: TruncGeomSpec, rng: &mut R) -> usize {
    let n = spec.n;
    if n == 1 || spec.p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.gen();
    if spec.p == 0.0 {
        return ((u * n as f64) as usize + 1).min(n);
    }
    // F(k) = (1 - (1-p)^k) / (1 - (1-p)^n); smallest k with F(k) > u
    let l = (-spec.p).ln_1p();
    let mass = -(n as f64 * l).exp_m1();
    let k = ((-u * mass).ln_1p() / l).floor() as usize + 1;
    k.clamp(1, n)
}

/// Success probability of the geometric steps for `0 < q <= 1`.
fn step_prob(q: f64) -> f64 {
    if q >= 1.0 {
        0.0
    } else {
        1.0 - q
    }
}

fn sample_iterative<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Permutation {
    let p = step_prob(q);
    let mut free = Fenwick::ones(n);
    let images = (0..n)
        .map(|i| {
            let z = sample_trunc_geom(TruncGeomSpec { n: n - i, p }, rng);
            let v = free.select(z as i64).expect("rank within remaining set");
            free.add(v, -1);
            v
        })
        .collect();
    Permutation::from_images_unchecked(images)
}

/// `Mallows(n, q)` via the iterative procedure: `Π(i)` is the `Z_i`-th
/// smallest unused value with `Z_i ~ TGeo(n+1-i, 1-q)`. For `q > 1` a
/// `Mallows(n, 1/q)` sample is composed with the reversal.
pub fn sample_mallows_finite<R: Rng + ?Sized>(n: usize, q: QParam, rng: &mut R) -> Permutation {
    match q.regime() {
        Regime::SuperCritical => reverse_compose(&sample_iterative(n, 1.0 / q.value(), rng)),
        _ => sample_iterative(n, q.value(), rng),
    }
}

/// `Mallows(n, q)`, `0 < q < 1`, fixing `Π(i)` and `Π(n+1-i)` alternately:
/// the former as the `Z`-th smallest and the latter as the `Z'`-th largest
/// of the remaining values.
pub fn sample_mallows_two_sided<R: Rng + ?Sized>(
    n: usize,
    q: QParam,
    rng: &mut R,
) -> Result<Permutation> {
    let p = 1.0 - q.require_sub()?;
    let mut free = Fenwick::ones(n);
    let mut images = vec![0usize; n];
    let mut remaining = n;
    for i in 0..n / 2 {
        let z = sample_trunc_geom(TruncGeomSpec { n: remaining, p }, rng);
        let v = free.select(z as i64).expect("rank within remaining set");
        free.add(v, -1);
        images[i] = v;
        remaining -= 1;

        let z = sample_trunc_geom(TruncGeomSpec { n: remaining, p }, rng);
        let v = free
            .select((remaining + 1 - z) as i64)
            .expect("rank within remaining set");
        free.add(v, -1);
        images[n - 1 - i] = v;
        remaining -= 1;
    }
    if n % 2 == 1 {
        images[n / 2] = free.select(1).expect("one value left");
    }
    Ok(Permutation::from_images_unchecked(images))
}

/// Trust margin for a window of `len` indices: `ceil(3 ln(len) / ln(1/q))`,
/// so that the displacement tail beyond it is `O(len^-3)`.
pub fn trust_margin(len: usize, q: f64) -> usize {
    if len <= 1 {
        return 0;
    }
    (3.0 * (len as f64).ln() / -q.ln()).ceil() as usize
}

/// `Mallows([lo, lo + len - 1], q)` as a window of the bi-infinite model.
pub fn sample_mallows_interval<R: Rng + ?Sized>(
    lo: i64,
    len: usize,
    q: QParam,
    rng: &mut R,
) -> Result<WindowPermutation> {
    let qv = q.require_sub()?;
    let perm = sample_iterative(len, qv, rng);
    Ok(WindowPermutation::from_permutation(&perm, lo, trust_margin(len, qv)))
}

/// Window `[-W, W]`, i.e. `Mallows(2W+1, q)` relabelled around zero.
pub fn sample_mallows_window<R: Rng + ?Sized>(
    half_width: usize,
    q: QParam,
    rng: &mut R,
) -> Result<WindowPermutation> {
    sample_mallows_interval(-(half_width as i64), 2 * half_width + 1, q, rng)
}

/// Window `[-W+1, W]`, the domain on which `ρ(i) = 1 - i` acts.
pub fn sample_mallows_window_rho<R: Rng + ?Sized>(
    half_width: usize,
    q: QParam,
    rng: &mut R,
) -> Result<WindowPermutation> {
    sample_mallows_interval(1 - half_width as i64, 2 * half_width, q, rng)
}

/// One step of a [`MallowsStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamStep {
    /// 1-based position `j`.
    pub position: u64,
    /// `Π(j)`.
    pub value: u64,
    /// `Π([j]) = [j]`.
    pub is_regeneration: bool,
}

/// Lazy `Mallows(N, q)` process, `0 < q < 1`.
///
/// Values are drawn against an order-statistic tree over the values above
/// the last regeneration point. At a regeneration every value in the block
/// has been used, so the tree is cleared and rebased, keeping memory
/// proportional to the largest excursion of `max_{i<=j} Π(i) - j`.
pub struct MallowsStream<R> {
    rng: R,
    ln_q: f64,
    base: u64,
    block_pos: usize,
    block_max: usize,
    used: Fenwick,
    touched: Vec<usize>,
}

impl<R: Rng> MallowsStream<R> {
    pub fn new(q: QParam, rng: R) -> Result<Self> {
        let qv = q.require_sub()?;
        Ok(Self {
            rng,
            ln_q: qv.ln(),
            base: 0,
            block_pos: 0,
            block_max: 0,
            used: Fenwick::zeros(64),
            touched: Vec::new(),
        })
    }

    /// `M_j = max_{i<=j} Π(i) - j`.
    pub fn excess(&self) -> usize {
        self.block_max - self.block_pos
    }

    fn geometric(&mut self) -> usize {
        let u = 1.0 - self.rng.gen::<f64>();
        1 + (u.ln() / self.ln_q).floor() as usize
    }

    fn grow(&mut self, needed: usize) {
        let cap = needed.next_power_of_two().max(2 * self.used.capacity());
        let mut tree = Fenwick::zeros(cap);
        for &v in &self.touched {
            tree.add(v, 1);
        }
        self.used = tree;
    }
}

impl<R: Rng> Iterator for MallowsStream<R> {
    type Item = StreamStep;

    fn next(&mut self) -> Option<StreamStep> {
        let z = self.geometric();
        let vacant = self.used.capacity() - self.touched.len();
        if z > vacant {
            self.grow(self.used.capacity() + (z - vacant));
        }
        let v = self.used.select_vacant(z as i64).expect("capacity covers rank");
        self.used.add(v, 1);
        self.touched.push(v);
        self.block_pos += 1;
        self.block_max = self.block_max.max(v);

        let step = StreamStep {
            position: self.base + self.block_pos as u64,
            value: self.base + v as u64,
            is_regeneration: self.block_max == self.block_pos,
        };
        if step.is_regeneration {
            for &t in &self.touched {
                self.used.add(t, -1);
            }
            self.touched.clear();
            self.base += self.block_pos as u64;
            self.block_pos = 0;
            self.block_max = 0;
        }
        Some(step)
    }
}

/// Convenience constructor for [`MallowsStream`].
pub fn stream_mallows<R: Rng>(q: QParam, rng: R) -> Result<MallowsStream<R>> {
    MallowsStream::new(q, rng)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::rng::RngStream;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn permutation_text_round_trip() {
        let p: Permutation = "3 1 2".parse().unwrap();
        assert_eq!(p.to_string(), "3 1 2");
        assert!("1 1 2".parse::<Permutation>().is_err());
        assert!("0 1".parse::<Permutation>().is_err());
    }

    #[test]
    fn reverse_compose_identity() {
        assert_eq!(reverse_compose(&Permutation::identity(3)).images(), &[3, 2, 1]);
    }

    #[test]
    fn trunc_geom_single_point() {
        let mut rng = RngStream::new(1, 1).rng();
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(sample_trunc_geom(TruncGeomSpec { n: 1, p }, &mut rng), 1);
        }
        let spec = TruncGeomSpec::new(5, 0.5).unwrap();
        let total: f64 = (1..=5).map(|k| spec.pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_q_gives_identity() {
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..1000 {
            let p = sample_mallows_finite(3, q(1e-9), &mut rng);
            assert_eq!(p, Permutation::identity(3));
        }
    }

    #[test]
    fn two_sided_n1() {
        let mut rng = RngStream::new(2, 0).rng();
        assert_eq!(
            sample_mallows_two_sided(1, q(0.5), &mut rng).unwrap(),
            Permutation::identity(1)
        );
    }

    #[test]
    fn zero_width_window_is_fixed_point() {
        let mut rng = RngStream::new(3, 0).rng();
        let w = sample_mallows_window(0, q(0.5), &mut rng).unwrap();
        assert_eq!((w.lo(), w.hi(), w.image(0)), (0, 0, 0));
    }

    #[test]
    fn window_metadata() {
        let mut rng = RngStream::new(3, 0).rng();
        let w = sample_mallows_window(64, q(0.5), &mut rng).unwrap();
        assert_eq!((w.lo(), w.hi()), (-64, 64));
        assert_eq!(w.trust_margin(), 22);
        assert!(w.to_permutation().is_valid());
        let r = sample_mallows_window_rho(64, q(0.5), &mut rng).unwrap();
        assert_eq!((r.lo(), r.hi()), (-63, 64));
    }

    #[test]
    fn stream_blocks_are_self_maps() {
        let rng = RngStream::new(4, 0).rng();
        let mut start = 1u64;
        let mut seen = Vec::new();
        for step in stream_mallows(q(0.7), rng).unwrap().take(20_000) {
            seen.push(step.value);
            if step.is_regeneration {
                let mut block: Vec<u64> = std::mem::take(&mut seen);
                block.sort_unstable();
                let want: Vec<u64> = (start..=step.position).collect();
                assert_eq!(block, want);
                start = step.position + 1;
            }
        }
    }

    proptest! {
        #[test]
        fn samplers_return_bijections(n in 1usize..300, qv in 0.01f64..5.0, seed: u64) {
            let mut rng = RngStream::new(seed, 0).rng();
            let qq = q(qv);
            prop_assert!(sample_mallows_finite(n, qq, &mut rng).is_valid());
            if qv < 1.0 {
                prop_assert!(sample_mallows_two_sided(n, qq, &mut rng).unwrap().is_valid());
            }
        }

        #[test]
        fn trunc_geom_in_range(n in 1usize..50, p in 0.0f64..=1.0, seed: u64) {
            let mut rng = RngStream::new(seed, 9).rng();
            let k = sample_trunc_geom(TruncGeomSpec { n, p }, &mut rng);
            prop_assert!((1..=n).contains(&k));
        }
    }
}
