//! Small numerical helpers shared by the estimators.

use std::fmt;

/// Monte Carlo output: point estimate, its standard error and the number of
/// replicates (or blocks) it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl Estimate {
    /// Sample mean with standard error `sd / sqrt(n)`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = Moments::from_samples(xs);
        Self {
            mean: m.mean,
            std_error: if xs.len() > 1 {
                (m.variance / xs.len() as f64).sqrt()
            } else {
                0.0
            },
            replicates: xs.len(),
        }
    }

    /// |mean - target| <= k * std_error
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.2e} (n={})", self.mean, self.std_error, self.replicates)
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// log(sum(exp(xs))) without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + ksum(xs.iter().map(|&x| (x - max).exp())).ln()
}

/// First four sample moments. `variance` uses the n-1 denominator;
/// skewness and excess kurtosis are the plain moment ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
                skewness: f64::NAN,
                excess_kurtosis: f64::NAN,
            };
        }
        let nf = n as f64;
        let mean = ksum(xs.iter().copied()) / nf;
        let (mut m2, mut m3, mut m4) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2.add(d2);
            m3.add(d2 * d);
            m4.add(d2 * d2);
        }
        let (m2, m3, m4) = (m2.value() / nf, m3.value() / nf, m4.value() / nf);
        Self {
            n,
            mean,
            variance: if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 },
            skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
            excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
        }
    }
}
