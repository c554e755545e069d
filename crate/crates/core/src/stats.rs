//! Sample statistics: means with standard errors and the two-sample
//! Kolmogorov–Smirnov test.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Mean of a real sample with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, stderr: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanEstimate { mean, stderr, n }
}

/// Complex mean and the combined standard error
/// `sqrt(s_re² + s_im²) / sqrt(n)`.
pub fn complex_mean_stderr(zs: &[Complex64]) -> (Complex64, f64) {
    let n = zs.len();
    if n == 0 {
        return (Complex64::new(f64::NAN, f64::NAN), f64::NAN);
    }
    let mean = zs.iter().sum::<Complex64>() / n as f64;
    let stderr = if n > 1 {
        let ss: f64 = zs.iter().map(|z| (z - mean).norm_sqr()).sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, stderr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// sup |F₁ − F₂|
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution (Stephens' small-sample correction).
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    KsResult { statistic: d, p_value: kolmogorov_q(lambda) }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
