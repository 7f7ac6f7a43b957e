//! Goodness-of-fit tests and summary statistics for Monte Carlo checks.

use alloc::vec::Vec;

use crate::math::{abs, erfc, exp, lgamma, log, sqrt, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Asymptotic Kolmogorov tail `P[K > lambda]`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = exp(-2.0 * kf * kf * lambda * lambda);
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = sqrt(n_eff);
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov-Smirnov test against a cdf.
///
/// The statistic compares the empirical cdf with `cdf` at both sides of each
/// sample point, so atoms of the reference law are handled via `cdf_left`.
pub fn ks_one_sample<C, L>(samples: &[f64], cdf: C, cdf_left: L) -> TestResult
where
    C: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max(abs(cdf_left(x) - below)).max(abs(cdf(x) - upto));
        i = j;
    }
    TestResult { statistic: d, p_value: ks_p_value(d, n) }
}

/// Two-sample Kolmogorov-Smirnov test. Ties are stepped together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max(abs(i as f64 / n - j as f64 / m));
    }
    TestResult { statistic: d, p_value: ks_p_value(d, n * m / (n + m)) }
}

/// Regularised upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln_pre = -x + a * log(x) - lgamma(a);
    if x < a + 1.0 {
        // Series for P.
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..1000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if abs(del) < abs(sum) * 1e-16 {
                break;
            }
        }
        (1.0 - sum * exp(ln_pre)).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if abs(d) < TINY {
                d = TINY;
            }
            c = b + an / c;
            if abs(c) < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if abs(del - 1.0) < 1e-16 {
                break;
            }
        }
        (exp(ln_pre) * h).clamp(0.0, 1.0)
    }
}

/// Pearson chi-square goodness of fit. Adjacent bins are pooled until each
/// expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> TestResult {
    let n: f64 = observed.iter().sum::<u64>() as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        acc.0 += *o as f64;
        acc.1 += p * n;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let stat: f64 = pooled.iter().map(|(o, e)| if *e > 0.0 { (o - e) * (o - e) / e } else { 0.0 }).sum();
    let df = pooled.len().saturating_sub(1).max(1) as f64;
    TestResult { statistic: stat, p_value: gamma_q(0.5 * df, 0.5 * stat) }
}

/// Two-sided normal-approximation binomial test of `P[success] = p`.
pub fn binomial_test(successes: u64, trials: u64, p: f64) -> TestResult {
    let n = trials as f64;
    let z = (successes as f64 - n * p) / sqrt(n * p * (1.0 - p));
    TestResult { statistic: z, p_value: erfc(abs(z) / SQRT_2) }
}

/// Sample mean and standard error of the mean. Sums run on data shifted by
/// the first value, so constant samples come back exactly.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let k = values[0];
    let d = values.iter().map(|v| v - k).sum::<f64>() / n as f64;
    let mean = k + d;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - k - d) * (v - k - d)).sum::<f64>() / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// Pearson correlation; zero when either sample is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / sqrt(sxx * syy)
    }
}

pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    exp(k as f64 * log(mean) - mean - lgamma(k as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{open01, stream};

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Standard table: P[K > 1.36] ~ 0.049, P[K > 1.95] ~ 0.001.
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_tail(1.9495) - 0.001).abs() < 5e-5);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
    }

    #[test]
    fn gamma_q_reference_values() {
        // Q(1, x) = e^{-x}; Q(k/2, x/2) is the chi-square tail.
        assert!((gamma_q(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-14);
        assert!((gamma_q(1.0, 0.3) - (-0.3f64).exp()).abs() < 1e-14);
        // chi-square with 5 df at 11.0705 has tail 0.05.
        assert!((gamma_q(2.5, 11.0705 / 2.0) - 0.05).abs() < 1e-5);
        // chi-square with 20 df at 10.851 has tail 0.95.
        assert!((gamma_q(10.0, 10.851 / 2.0) - 0.95).abs() < 1e-4);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shift() {
        let mut r = stream(3, 0, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| open01(&mut r)).collect();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_one_sample(&xs, cdf, cdf).passes(1e-3));
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.05).collect();
        assert!(!ks_one_sample(&shifted, cdf, cdf).passes(1e-3));
        let ys: Vec<f64> = (0..20_000).map(|_| open01(&mut r)).collect();
        assert!(ks_two_sample(&xs, &ys).passes(1e-3));
        assert!(!ks_two_sample(&xs, &shifted).passes(1e-3));
    }

    #[test]
    fn ks_two_sample_handles_ties() {
        let a = vec![0.0; 100];
        let b = vec![0.0; 50];
        assert_eq!(ks_two_sample(&a, &b).statistic, 0.0);
    }

    #[test]
    fn chi_square_and_binomial() {
        let obs = [100, 100, 100, 100];
        let p = [0.25; 4];
        let r = chi_square_gof(&obs, &p);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(!chi_square_gof(&[200, 100, 50, 50], &p).passes(1e-3));
        assert!(binomial_test(5000, 10_000, 0.5).passes(0.5));
        assert!(!binomial_test(5300, 10_000, 0.5).passes(1e-3));
    }

    #[test]
    fn summaries() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[4.0; 7]), (4.0, 0.0));
        let r2 = core::f64::consts::SQRT_2;
        assert_eq!(mean_se(&[r2; 1000]), (r2, 0.0));
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert_eq!(correlation(&[1.0, 1.0], &[0.0, 3.0]), 0.0);
        let total: f64 = (0..60).map(|k| poisson_pmf(4.0, k)).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!((poisson_pmf(2.0, 0) - (-2.0f64).exp()).abs() < 1e-16);
    }
}
