//! The Zipf (zeta) distribution of pattern sizes.
//!
//! `P[Z = k] = k^(-s) / zeta(s)` for `k = 1, 2, ...`. The fitted exponent `s`
//! doubles as the propagation slope index: the magnitude of the log-log slope
//! of the pattern size distribution.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// Terms summed directly before the Euler-Maclaurin tail.
const DIRECT_TERMS: u32 = 20;

/// `B_{2j} / (2j)!` for j = 1..=4.
const EM_COEFFS: [f64; 4] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
];

/// Cached CDF entries; sizes beyond this are summed on demand.
const CDF_TABLE: usize = 256;

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::InvalidParameter(format!("zeta needs s > 1, got {s}")));
    }
    let n = f64::from(DIRECT_TERMS);
    // small terms first
    let mut sum = 0.0;
    for k in (1..DIRECT_TERMS).rev() {
        sum += libm::pow(f64::from(k), -s);
    }
    let n_pow = libm::pow(n, -s);
    let mut tail = n * n_pow / (s - 1.0) + 0.5 * n_pow;
    // rising factorial s (s+1) ... (s+2j-2) times n^(-s-2j+1)
    let mut rising = s;
    let mut power = n_pow / n;
    for (j, c) in EM_COEFFS.iter().enumerate() {
        tail += c * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= n * n;
    }
    Ok(sum + tail)
}

/// `sum_{j >= a} j^-s` for large `a` by Euler-Maclaurin.
fn tail_sum(s: f64, a: f64) -> f64 {
    let f = libm::pow(a, -s);
    f * (a / (s - 1.0) + 0.5 + s / (12.0 * a) - s * (s + 1.0) * (s + 2.0) / (720.0 * a * a * a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfModel {
    s: f64,
    zeta_s: f64,
    cdf: Vec<f64>,
}

impl ZipfModel {
    pub fn new(s: f64) -> Result<Self> {
        let zeta_s = zeta(s)?;
        let mut cdf = Vec::with_capacity(CDF_TABLE);
        let mut acc = 0.0;
        for k in 1..=CDF_TABLE {
            acc += libm::pow(k as f64, -s) / zeta_s;
            cdf.push(acc);
        }
        Ok(ZipfModel { s, zeta_s, cdf })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn zeta_s(&self) -> f64 {
        self.zeta_s
    }

    /// Probability of exactly `k` lines.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("pattern size must be at least 1".into()));
        }
        Ok(libm::pow(k as f64, -self.s) / self.zeta_s)
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        -self.s * libm::log(k as f64) - libm::log(self.zeta_s)
    }

    pub fn cdf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if k as usize <= CDF_TABLE {
            return self.cdf[k as usize - 1];
        }
        1.0 - self.survival(k)
    }

    /// `P[K > k]` for `k` at or beyond the cached table.
    fn survival(&self, k: u64) -> f64 {
        tail_sum(self.s, k as f64 + 1.0) / self.zeta_s
    }

    /// Inverse-CDF draw, capped at `k_max`.
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R, k_max: u64) -> u64 {
        let u: f64 = rng.random();
        self.size_for_quantile(u, k_max)
    }

    /// Smallest `k` with `cdf(k) >= u`, or `k_max` if that is larger.
    pub fn size_for_quantile(&self, u: f64, k_max: u64) -> u64 {
        let k_max = k_max.max(1);
        let table_max = (CDF_TABLE as u64).min(k_max) as usize;
        let idx = self.cdf[..table_max].partition_point(|&c| c < u);
        if idx < table_max {
            return idx as u64 + 1;
        }
        if table_max as u64 == k_max {
            return k_max;
        }
        // bisection on the tail: smallest k with P[K > k] <= 1 - u
        let target = 1.0 - u;
        if self.survival(k_max) > target {
            return k_max;
        }
        let (mut lo, mut hi) = (CDF_TABLE as u64, k_max);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.survival(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Log-likelihood of a sample of sizes (all ≥ 1).
    pub fn log_likelihood(&self, sizes: &[u64]) -> f64 {
        let sum_ln: f64 = sizes.iter().map(|&k| libm::log(k as f64)).sum();
        -(sizes.len() as f64) * libm::log(self.zeta_s) - self.s * sum_ln
    }

    /// Asymptotic standard error of the exponent from `n` observations,
    /// `1 / sqrt(n * d²/ds² ln zeta(s))`.
    pub fn standard_error(&self, n: usize) -> f64 {
        let h = 1e-4 * self.s.max(1.0);
        let lo = (self.s - h).max(1.0 + 0.5 * (self.s - 1.0));
        let hi = self.s + (self.s - lo);
        let step = self.s - lo;
        let f = |x: f64| libm::log(zeta(x).unwrap_or(f64::NAN));
        let second = (f(hi) - 2.0 * f(self.s) + f(lo)) / (step * step);
        1.0 / libm::sqrt(n as f64 * second)
    }

    /// Propagation slope index: the fitted exponent itself.
    pub fn pepsi(&self) -> f64 {
        self.s
    }

    /// Probability of a pattern with at least `cutoff` lines.
    pub fn p_large(&self, cutoff: u64) -> Result<f64> {
        if cutoff == 0 {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(1.0 - self.cdf(cutoff - 1))
    }
}

/// Lower end of the exponent search interval.
pub const S_MIN: f64 = 1.0001;
/// Upper end of the exponent search interval.
pub const S_MAX: f64 = 20.0;

/// Maximum-likelihood exponent for sizes with lower cutoff 1.
///
/// Maximizes `-n ln zeta(s) - s * sum(ln k)` by golden-section search on
/// `[S_MIN, S_MAX]`; the objective is concave in `s`.
pub fn fit_mle(sizes: &[u64]) -> Result<ZipfModel> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("no pattern sizes to fit"));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("pattern sizes must be at least 1".into()));
    }
    if sizes.len() < 2 {
        return Err(Error::InsufficientData("fit needs at least two observations"));
    }
    if sizes.iter().all(|&k| k == 1) {
        return Err(Error::NoFiniteMle);
    }
    let n = sizes.len() as f64;
    let mean_ln = sizes.iter().map(|&k| libm::log(k as f64)).sum::<f64>() / n;
    // per-observation likelihood, so the scale does not depend on n
    let objective = |s: f64| -libm::log(zeta(s).expect("s > 1")) - s * mean_ln;

    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (S_MIN, S_MAX);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-7 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    ZipfModel::new(0.5 * (a + b))
}
