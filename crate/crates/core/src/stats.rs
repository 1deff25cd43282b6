//! Statistical tests for the invariance experiments.
//!
//! Pass/fail is always derivable from the recorded numbers alone: each report
//! carries the statistic, the p-value, the significance level it was tested
//! at, and the sample sizes.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[derive(Debug, Clone, Serialize)]
pub struct StatReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    pub pass: bool,
    pub sample_sizes: Vec<usize>,
    pub detail: String,
}

fn mean_and_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided z-test of the sample mean against `target_mean`.
pub fn z_test_mean(name: &str, samples: &[f64], target_mean: f64, level: f64) -> StatReport {
    let n = samples.len();
    let (mean, var) = mean_and_var(samples);
    let se = (var / n as f64).sqrt();
    let z = (mean - target_mean) / se;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p_value = 2.0 * (1.0 - normal.cdf(z.abs()));
    StatReport {
        name: name.into(),
        statistic: z,
        p_value,
        level,
        pass: p_value > level,
        sample_sizes: vec![n],
        detail: format!("sample mean {mean:.6} vs target {target_mean:.6} (se {se:.3e})"),
    }
}

/// Two-sided chi-square test of the sample variance against `target_var`.
pub fn chi_square_variance(name: &str, samples: &[f64], target_var: f64, level: f64) -> StatReport {
    let n = samples.len();
    let (_, var) = mean_and_var(samples);
    let dof = (n - 1) as f64;
    let statistic = dof * var / target_var;
    let chi = ChiSquared::new(dof).unwrap();
    let lower = chi.cdf(statistic);
    let p_value = 2.0 * lower.min(1.0 - lower);
    StatReport {
        name: name.into(),
        statistic,
        p_value,
        level,
        pass: p_value > level,
        sample_sizes: vec![n],
        detail: format!("sample variance {var:.6} vs target {target_var:.6}"),
    }
}

/// Asymptotic Kolmogorov distribution tail `Q(lambda) = 2 sum (-1)^{j-1}
/// exp(-2 j^2 lambda^2)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], level: f64) -> StatReport {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (sa.len(), sb.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let (fa, fb) = (i as f64 / n as f64, j as f64 / m as f64);
        d = d.max((fa - fb).abs());
        if sa[i] <= sb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    d = d.max((1.0 - j as f64 / m as f64).abs().max((1.0 - i as f64 / n as f64).abs()));
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let p_value = kolmogorov_tail(lambda);
    StatReport {
        name: name.into(),
        statistic: d,
        p_value,
        level,
        pass: p_value > level,
        sample_sizes: vec![n, m],
        detail: format!("KS distance {d:.5}"),
    }
}
