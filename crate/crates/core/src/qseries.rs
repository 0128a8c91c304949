//! q-series evaluation: partition function, q-Pochhammer symbols, the
//! displacement law of the bi-infinite Mallows permutation, the stationary
//! law of the arc chain, and the limiting cycle constants built from them.
//!
//! All infinite series are truncated with an explicit tail certificate and
//! summed in log space with compensated accumulation, so that `q` close to
//! one (where `(q;q)_inf` underflows) still evaluates accurately.

use std::fmt;

use crate::error::{Error, Result};
use crate::stats::{ksum, log_sum_exp, KahanSum};

/// Default truncation tolerance for series evaluations.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Smallest tolerance we are willing to certify in double precision.
pub const MIN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// 0 < q < 1
    SubCritical,
    /// q = 1 (uniform permutations)
    Critical,
    /// q > 1
    SuperCritical,
}

/// The Mallows parameter. Always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 {
            Ok(Self(q))
        } else {
            Err(Error::Domain(format!("q must be finite and positive, got {q}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn regime(self) -> Regime {
        if self.0 < 1.0 {
            Regime::SubCritical
        } else if self.0 > 1.0 {
            Regime::SuperCritical
        } else {
            Regime::Critical
        }
    }

    pub fn inverse(self) -> Self {
        Self(1.0 / self.0)
    }

    pub fn require_sub(self) -> Result<f64> {
        match self.regime() {
            Regime::SubCritical => Ok(self.0),
            _ => Err(Error::Domain(format!("requires 0 < q < 1, got q = {}", self.0))),
        }
    }

    pub fn require_super(self) -> Result<f64> {
        match self.regime() {
            Regime::SuperCritical => Ok(self.0),
            _ => Err(Error::Domain(format!("requires q > 1, got q = {}", self.0))),
        }
    }
}

impl fmt::Display for QParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if tol < MIN_TOL {
        return Err(Error::Tolerance(tol));
    }
    Ok(())
}

/// `Z(n, q) = sum over S_n of q^inv = prod_{i=1}^n (1 - q^i) / (1 - q)`.
///
/// At `q = 1` this is `n!`. Fails with [`Error::Range`] instead of returning
/// infinity.
pub fn z_partition(n: usize, q: QParam) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let q = q.value();
    let mut z = 1.0f64;
    for i in 1..=n {
        let factor = if q == 1.0 {
            i as f64
        } else {
            // (1 - q^i) / (1 - q), stable for q near 1
            (i as f64 * q.ln()).exp_m1() / q.ln().exp_m1()
        };
        z *= factor;
        if !z.is_finite() {
            return Err(Error::Range(format!("Z({n}, {q}) overflows")));
        }
    }
    Ok(z)
}

/// Length argument of [`q_pochhammer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PochhammerLen {
    Finite(usize),
    Infinite,
}

/// `(a; q)_n = prod_{i=1}^n (1 - a q^{i-1})`, or the infinite product.
///
/// The infinite product requires `0 < q < 1`; it is truncated once
/// `|a| q^i < tol / 100` and the neglected factors are certified to change
/// the value by a relative amount below `tol`.
pub fn q_pochhammer(a: f64, q: QParam, len: PochhammerLen, tol: f64) -> Result<f64> {
    let qv = q.value();
    match len {
        PochhammerLen::Finite(n) => {
            let mut p = 1.0;
            let mut aq = a;
            for _ in 0..n {
                p *= 1.0 - aq;
                aq *= qv;
            }
            Ok(p)
        }
        PochhammerLen::Infinite => {
            q.require_sub()?;
            check_tol(tol)?;
            let mut p = 1.0;
            let mut aq = a;
            loop {
                let x = aq.abs();
                if x < tol * 1e-2 {
                    // |log of remaining product| <= x / ((1-q)(1-x))
                    let bound = x / ((1.0 - qv) * (1.0 - x));
                    if bound.exp_m1() < tol {
                        return Ok(p);
                    }
                }
                p *= 1.0 - aq;
                aq *= qv;
            }
        }
    }
}

/// Running table of `ln (q;q)_k`, extended on demand.
struct LogQFactorials {
    ln_q: f64,
    table: Vec<f64>,
    acc: KahanSum,
}

impl LogQFactorials {
    fn new(q: f64) -> Self {
        Self {
            ln_q: q.ln(),
            table: vec![0.0],
            acc: KahanSum::new(),
        }
    }

    fn get(&mut self, k: usize) -> f64 {
        while self.table.len() <= k {
            let i = self.table.len() as f64;
            self.acc.add((-(i * self.ln_q).exp()).ln_1p());
            self.table.push(self.acc.value());
        }
        self.table[k]
    }
}

/// `ln (q;q)_inf` for `0 < q < 1` together with a certified bound on the
/// absolute error of the returned logarithm.
fn ln_q_inf(q: f64) -> (f64, f64) {
    let ln_q = q.ln();
    let mut acc = KahanSum::new();
    let mut i = 1.0f64;
    loop {
        let qi = (i * ln_q).exp();
        // -sum_{j>=i} ln(1 - q^j) <= q^i / ((1-q)(1-q^i))
        let rest = qi / ((1.0 - q) * (1.0 - qi));
        if rest < 1e-17 {
            return (acc.value(), rest);
        }
        acc.add((-qi).ln_1p());
        i += 1.0;
    }
}

/// Lower bound on `ln (a; q)_inf` for `0 <= a < 1`, from
/// `-ln(1 - x) <= x / (1 - x)`.
fn ln_q_inf_lower(a: f64, q: f64) -> f64 {
    -a / ((1.0 - q) * (1.0 - a))
}

/// The law of `Sigma(0)` for the bi-infinite Mallows permutation, on the
/// window `[-D, D]`.
#[derive(Debug, Clone)]
pub struct DisplacementPmf {
    q: QParam,
    half_width: usize,
    probs: Vec<f64>,
    tail_bound: f64,
}

impl DisplacementPmf {
    pub fn q(&self) -> QParam {
        self.q
    }

    /// Window half-width `D`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Certified upper bound on the mass outside `[-D, D]` plus the
    /// truncation error of the inner sums.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `P[Sigma(0) = d]`; zero outside the window.
    pub fn prob(&self, d: i64) -> f64 {
        let idx = d + self.half_width as i64;
        if idx < 0 || idx as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[idx as usize]
        }
    }

    /// `(d, P[Sigma(0) = d])` for `d` in `[-D, D]`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let off = self.half_width as i64;
        self.probs.iter().enumerate().map(move |(i, &p)| (i as i64 - off, p))
    }

    pub fn total(&self) -> f64 {
        ksum(self.probs.iter().copied())
    }

    pub fn even_mass(&self) -> f64 {
        ksum(self.iter().filter(|(d, _)| d % 2 == 0).map(|(_, p)| p))
    }

    pub fn odd_mass(&self) -> f64 {
        ksum(self.iter().filter(|(d, _)| d % 2 != 0).map(|(_, p)| p))
    }

    pub fn sum_of_squares(&self) -> f64 {
        ksum(self.probs.iter().map(|p| p * p))
    }
}

/// Log of the inner sum `sum_{l>=0} q^{l^2 + (d+2) l + d} / ((q;q)_{l+d} (q;q)_l)`
/// together with a bound on the relative truncation error.
///
/// Terms are log-concave in `l` (the ratio of consecutive terms is
/// decreasing), so we start at the mode and walk outward until the geometric
/// tail certificate on each side falls below `REL`.
fn ln_inner_sum(d: usize, ln_q: f64, lf: &mut LogQFactorials) -> (f64, f64) {
    const REL: f64 = 1e-18;
    let df = d as f64;
    let log_term = |l: usize, lf: &mut LogQFactorials| -> f64 {
        let lf_ = l as f64;
        (lf_ * lf_ + (df + 2.0) * lf_ + df) * ln_q - lf.get(l + d) - lf.get(l)
    };
    // log of term(l+1) / term(l)
    let log_ratio = |l: usize| -> f64 {
        let lf_ = l as f64;
        (2.0 * lf_ + df + 3.0) * ln_q
            - (-((lf_ + df + 1.0) * ln_q).exp()).ln_1p()
            - (-((lf_ + 1.0) * ln_q).exp()).ln_1p()
    };

    // mode: first l with log_ratio(l) < 0
    let mode = if log_ratio(0) < 0.0 {
        0
    } else {
        let mut hi = 1usize;
        while log_ratio(hi) >= 0.0 {
            hi *= 2;
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if log_ratio(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let peak = log_term(mode, lf);
    let mut logs = vec![0.0];
    let mut err = 0.0;

    // right of the mode
    let mut l = mode;
    let mut rel = 0.0;
    loop {
        let lr = log_ratio(l);
        rel += lr;
        l += 1;
        logs.push(rel);
        let r = log_ratio(l).exp();
        if r < 1.0 {
            let bound = rel.exp() * r / (1.0 - r);
            if bound < REL {
                err += bound;
                break;
            }
        }
    }
    // left of the mode
    let mut l = mode;
    let mut rel = 0.0;
    while l > 0 {
        let lr = log_ratio(l - 1);
        rel -= lr;
        l -= 1;
        logs.push(rel);
        if l == 0 {
            break;
        }
        // stepping further left multiplies by exp(-log_ratio(l-1)) < 1,
        // and these factors shrink as l decreases
        let s = (-log_ratio(l - 1)).exp();
        if s < 1.0 {
            let bound = rel.exp() * s / (1.0 - s);
            if bound < REL {
                err += bound;
                break;
            }
        }
    }
    (peak + log_sum_exp(&logs), err)
}

/// Displacement law `P[Sigma(0) = d] = (1-q)(q;q)_inf sum_{r-l=d} q^{rl+r+l} / ((q;q)_r (q;q)_l)`
/// for `Sigma ~ Mallows(Z, q)`, `0 < q < 1`.
///
/// The window `[-D, D]` is the smallest for which the certified tail
/// `2 q^{D+1} / (q^{D+3}; q)_inf` is at most `tol / 2`. Entries are computed
/// for `d >= 0` and mirrored, so the result is exactly symmetric.
pub fn displacement_pmf(q: QParam, tol: f64) -> Result<DisplacementPmf> {
    let qv = q.require_sub()?;
    check_tol(tol)?;
    let ln_q = qv.ln();

    let window_tail = |d: usize| -> f64 {
        let a = ((d as f64 + 3.0) * ln_q).exp();
        2.0 * ((d as f64 + 1.0) * ln_q - ln_q_inf_lower(a, qv)).exp()
    };
    let mut half_width = ((tol / 4.0).ln() / ln_q).floor().max(0.0) as usize;
    while half_width > 0 && window_tail(half_width - 1) <= tol / 2.0 {
        half_width -= 1;
    }
    while window_tail(half_width) > tol / 2.0 {
        half_width += 1;
    }

    let (ln_qinf, ln_qinf_err) = ln_q_inf(qv);
    let ln_prefactor = (-qv).ln_1p() + ln_qinf;
    let mut lf = LogQFactorials::new(qv);
    let mut half = Vec::with_capacity(half_width + 1);
    let mut inner_err = KahanSum::new();
    for d in 0..=half_width {
        let (ln_inner, rel) = ln_inner_sum(d, ln_q, &mut lf);
        let p = (ln_prefactor + ln_inner).exp();
        inner_err.add(p * (rel + ln_qinf_err.exp_m1()) * if d == 0 { 1.0 } else { 2.0 });
        half.push(p);
    }

    let mut probs = Vec::with_capacity(2 * half_width + 1);
    probs.extend(half.iter().rev());
    probs.extend(half.iter().skip(1));
    Ok(DisplacementPmf {
        q,
        half_width,
        probs,
        tail_bound: window_tail(half_width) + inner_err.value(),
    })
}

/// Stationary law of the `(inf, q)` arc chain, truncated at `S`.
#[derive(Debug, Clone)]
pub struct StationaryArc {
    q: QParam,
    weights: Vec<f64>,
    tail_bound: f64,
}

impl StationaryArc {
    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `nu_s`, zero beyond the truncation point.
    pub fn weight(&self, s: usize) -> f64 {
        self.weights.get(s).copied().unwrap_or(0.0)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}

/// `nu_s` proportional to `prod_{i=1}^s q^{2i-1} / (1-q^i)^2`.
///
/// The unnormalised terms are accumulated in log space; successive ratios
/// `q^{2s+1} / (1-q^{s+1})^2` decrease in `s`, which gives a geometric
/// certificate for the neglected tail once a ratio drops below one.
pub fn nu_stationary(q: QParam, tol: f64) -> Result<StationaryArc> {
    let qv = q.require_sub()?;
    check_tol(tol)?;
    let ln_q = qv.ln();
    let log_ratio = |s: usize| -> f64 {
        let s = s as f64;
        (2.0 * s + 1.0) * ln_q - 2.0 * (-((s + 1.0) * ln_q).exp()).ln_1p()
    };

    let mut logs = vec![0.0f64];
    let mut max = 0.0f64;
    let tail_rel = loop {
        let s = logs.len() - 1;
        let lr = log_ratio(s);
        let last = logs[s];
        if lr < 0.0 {
            let r = lr.exp();
            // relative to the largest term, which is <= the normaliser
            let next_rel = (last + lr - max).exp();
            let tail_rel = (last - max).exp() * r / (1.0 - r);
            if next_rel < tol * 1e-2 && tail_rel < tol * 1e-2 {
                break tail_rel;
            }
        }
        let next = last + lr;
        max = max.max(next);
        logs.push(next);
    };

    let ln_norm = log_sum_exp(&logs);
    let weights = logs.iter().map(|l| (l - ln_norm).exp()).collect();
    Ok(StationaryArc {
        q,
        weights,
        tail_bound: tail_rel,
    })
}

/// `m_1 = sum_s nu_s q^{2s} (1-q)`: the limiting density of fixed points for
/// `0 < q < 1`.
pub fn m1_exact(q: QParam, tol: f64) -> Result<f64> {
    let qv = q.require_sub()?;
    let nu = nu_stationary(q, tol)?;
    let q2 = qv * qv;
    let mut pow = 1.0;
    let mut acc = KahanSum::new();
    for &w in nu.weights() {
        acc.add(w * pow);
        pow *= q2;
    }
    Ok(acc.value() * (1.0 - qv))
}

/// `mu_2 = 1/2 sum_d P[Sigma(0) = d]^2` with `Sigma ~ Mallows(Z, 1/q)`, `q > 1`.
pub fn mu2_exact(q: QParam, tol: f64) -> Result<f64> {
    q.require_super()?;
    let pmf = displacement_pmf(q.inverse(), tol)?;
    Ok(0.5 * pmf.sum_of_squares())
}

/// `(c_e, c_o) = (P[Sigma(0) odd], P[Sigma(0) even])` with
/// `Sigma ~ Mallows(Z, 1/q)`, `q > 1`.
pub fn ce_co_exact(q: QParam, tol: f64) -> Result<(f64, f64)> {
    q.require_super()?;
    let pmf = displacement_pmf(q.inverse(), tol)?;
    Ok((pmf.odd_mass(), pmf.even_mass()))
}

/// The limiting constants available at a given `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConstants {
    pub q: QParam,
    pub tol: f64,
    /// Defined for `q < 1`.
    pub m1: Option<f64>,
    /// Defined for `q > 1`.
    pub mu2: Option<f64>,
    pub c_e: Option<f64>,
    pub c_o: Option<f64>,
}

impl ExactConstants {
    pub fn compute(q: QParam, tol: f64) -> Result<Self> {
        match q.regime() {
            Regime::SubCritical => Ok(Self {
                q,
                tol,
                m1: Some(m1_exact(q, tol)?),
                mu2: None,
                c_e: None,
                c_o: None,
            }),
            Regime::SuperCritical => {
                let pmf = displacement_pmf(q.inverse(), tol)?;
                Ok(Self {
                    q,
                    tol,
                    m1: None,
                    mu2: Some(0.5 * pmf.sum_of_squares()),
                    c_e: Some(pmf.odd_mass()),
                    c_o: Some(pmf.even_mass()),
                })
            }
            Regime::Critical => Err(Error::Domain(
                "limit constants are not defined at q = 1".into(),
            )),
        }
    }
}

/// One row of an arc-chain transition kernel: probabilities of moving from
/// state `from` to `from - 1`, `from`, `from + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTransition {
    pub from: usize,
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

impl ArcTransition {
    pub fn prob(&self, to: i64) -> f64 {
        let k = self.from as i64;
        match to - k {
            -1 => self.down,
            0 => self.stay,
            1 => self.up,
            _ => 0.0,
        }
    }

    pub fn row_sum(&self) -> f64 {
        self.down + self.stay + self.up
    }
}

fn check_arc_state(k: usize, t: usize, n: usize) -> Result<()> {
    if t >= n || k > t.min(n - t) {
        return Err(Error::Index(format!(
            "arc state requires t < n and k <= min(t, n - t); got k={k}, t={t}, n={n}"
        )));
    }
    Ok(())
}

/// Transition law of the `(n, q)` arc chain `kappa_t -> kappa_{t+1}`.
pub fn arc_transition_finite(k: usize, t: usize, n: usize, q: QParam) -> Result<ArcTransition> {
    let qv = q.require_sub()?;
    check_arc_state(k, t, n)?;
    // same powi path for every power so that q^k == q^(n-t) exactly at k = n - t
    let qk = qv.powi(k as i32);
    let qk1 = qv.powi(k as i32 + 1);
    let qr = qv.powi((n - t) as i32);
    let den = 1.0 - qr;
    let a = (qk - qr) / den;
    Ok(ArcTransition {
        from: k,
        down: ((1.0 - qk) / den).powi(2),
        stay: a * (2.0 - qk - qk1) / den,
        up: a * (qk1 - qr) / den,
    })
}

/// Transition law of the time-homogeneous `(inf, q)` arc chain.
pub fn arc_transition_infinite(k: usize, q: QParam) -> Result<ArcTransition> {
    let qv = q.require_sub()?;
    let qk = qv.powf(k as f64);
    let q2k = qk * qk;
    Ok(ArcTransition {
        from: k,
        down: (1.0 - qk).powi(2),
        stay: 2.0 * qk - q2k - q2k * qv,
        up: q2k * qv,
    })
}

/// `P[Pi_n(t+1) = t+1 | kappa_t = k] = (q^k - q^{k+1})(q^k - q^{n-t}) / (1 - q^{n-t})^2`.
pub fn fixed_point_prob_given_arc(k: usize, t: usize, n: usize, q: QParam) -> Result<f64> {
    let qv = q.require_sub()?;
    check_arc_state(k, t, n)?;
    let qk = qv.powi(k as i32);
    let qr = qv.powi((n - t) as i32);
    Ok((qk - qk * qv) * (qk - qr) / (1.0 - qr).powi(2))
}

/// Exact marginal laws of `kappa_t`, `t = 0..=n`, obtained by pushing the
/// point mass at `kappa_0 = 0` through the finite kernels.
pub fn arc_marginals(n: usize, q: QParam) -> Result<Vec<Vec<f64>>> {
    q.require_sub()?;
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = vec![1.0];
    for t in 0..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let tr = arc_transition_finite(k, t, n, q)?;
            if k > 0 {
                next[k - 1] += p * tr.down;
            }
            next[k] += p * tr.stay;
            next[k + 1] += p * tr.up;
        }
        next.truncate((t + 1).min(n - t - 1) + 1);
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        out.push(std::mem::replace(&mut cur, next));
    }
    out.push(cur);
    Ok(out)
}

/// Exact `E C_1(Pi_n)` for `0 < q < 1`, via the arc chain:
/// `sum_t sum_k P[kappa_t = k] P[Pi_n(t+1) = t+1 | kappa_t = k]`.
pub fn expected_fixed_points_finite(n: usize, q: QParam) -> Result<f64> {
    let marg = arc_marginals(n, q)?;
    let mut acc = KahanSum::new();
    for (t, law) in marg.iter().enumerate().take(n) {
        for (k, &p) in law.iter().enumerate() {
            if p > 0.0 {
                acc.add(p * fixed_point_prob_given_arc(k, t, n, q)?);
            }
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn qparam_regimes() {
        assert_eq!(q(0.5).regime(), Regime::SubCritical);
        assert_eq!(q(1.0).regime(), Regime::Critical);
        assert_eq!(q(2.0).regime(), Regime::SuperCritical);
        assert!(QParam::new(0.0).is_err());
        assert!(QParam::new(f64::NAN).is_err());
        assert!(m1_exact(q(1.0), DEFAULT_TOL).is_err());
        assert!(mu2_exact(q(1.0), DEFAULT_TOL).is_err());
        assert!(ce_co_exact(q(0.5), DEFAULT_TOL).is_err());
    }

    #[test]
    fn z_partition_small_cases() {
        assert_eq!(z_partition(1, q(0.5)).unwrap(), 1.0);
        assert!((z_partition(2, q(0.5)).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(z_partition(5, q(1.0)).unwrap(), 120.0);
        assert!(z_partition(0, q(0.5)).is_err());
    }

    #[test]
    fn z_partition_overflow_is_an_error() {
        assert!(matches!(z_partition(200, q(1.0)), Err(Error::Range(_))));
        assert!(matches!(z_partition(2000, q(2.0)), Err(Error::Range(_))));
    }

    #[test]
    fn pochhammer_basics() {
        let p = |a, n| q_pochhammer(a, q(0.5), n, DEFAULT_TOL).unwrap();
        assert_eq!(p(0.3, PochhammerLen::Finite(0)), 1.0);
        assert_eq!(p(0.5, PochhammerLen::Finite(1)), 0.5);
        assert!(q_pochhammer(0.5, q(2.0), PochhammerLen::Infinite, 1e-8).is_err());
    }

    #[test]
    fn arc_boundary_states() {
        let t = arc_transition_infinite(0, q(0.3)).unwrap();
        assert_eq!(t.down, 0.0);
        assert!((t.up - 0.3).abs() < 1e-15);
        assert!((t.stay - 0.7).abs() < 1e-15);
        let f = arc_transition_finite(0, 3, 8, q(0.6)).unwrap();
        assert_eq!(f.prob(-1), 0.0);
        assert!(arc_transition_finite(4, 3, 8, q(0.6)).is_err());
        assert!(arc_transition_finite(0, 8, 8, q(0.6)).is_err());
    }

    #[test]
    fn fixed_point_prob_vanishes_at_k_eq_n_minus_t() {
        assert_eq!(fixed_point_prob_given_arc(3, 3, 6, q(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn small_q_displacement_concentrates_at_zero() {
        let pmf = displacement_pmf(q(1e-6), DEFAULT_TOL).unwrap();
        assert!((pmf.prob(0) - 1.0).abs() < 1e-5);
        assert_eq!(pmf.prob(3), pmf.prob(-3));
    }

    #[test]
    fn nu_first_ratio() {
        let qq = 0.3;
        let nu = nu_stationary(q(qq), DEFAULT_TOL).unwrap();
        let want = qq / (1.0 - qq).powi(2);
        assert!((nu.weight(1) / nu.weight(0) - want).abs() < 1e-13 * want);
    }
}
