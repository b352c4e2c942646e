//! Two-sample nonparametric tests. Both report two-sided p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub method: String,
}

pub const MANN_WHITNEY: &str = "mann-whitney-u";
pub const KOLMOGOROV_SMIRNOV: &str = "ks-two-sample";

fn check(a: &[f64], b: &[f64]) -> Result<(), AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

/// Mid-ranks (1-based) of `values`, plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// U for sample `a` (wins of `a` over `b`, ties counted half), with a
/// normal-approximation p-value using tie-corrected variance and a 0.5
/// continuity correction.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<TestResult, AnalysisError> {
    check(a, b)?;
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n_a].iter().sum();
    let u_a = rank_sum_a - (n_a * (n_a + 1)) as f64 / 2.0;

    let (na, nb) = (n_a as f64, n_b as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = if n > 1.0 {
        na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        (2.0 * standard_normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: u_a,
        p_value,
        n_a,
        n_b,
        method: MANN_WHITNEY.into(),
    })
}

/// U for the second sample given a result from [`mann_whitney`].
pub fn u_complement(result: &TestResult) -> f64 {
    (result.n_a * result.n_b) as f64 - result.statistic
}

fn standard_normal_sf(z: f64) -> f64 {
    let normal = Normal::standard();
    normal.sf(z)
}

/// D = sup |F_a − F_b| over the pooled points, with the asymptotic
/// Kolmogorov p-value at effective size n_a·n_b/(n_a+n_b).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, AnalysisError> {
    check(a, b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let effective = na * nb / (na + nb);
    let p_value = kolmogorov_sf(effective.sqrt() * d);
    Ok(TestResult {
        statistic: d,
        p_value,
        n_a: sa.len(),
        n_b: sb.len(),
        method: KOLMOGOROV_SMIRNOV.into(),
    })
}

/// Survival function of the Kolmogorov distribution, P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // CDF = √(2π)/x · Σ exp(−(2j−1)²π²/(8x²)); converges fast for small x.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let factor = (2.0 * std::f64::consts::PI).sqrt() / x;
        let cdf: f64 = (1..=8)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * pi2 / (8.0 * x * x)).exp()
            })
            .sum::<f64>()
            * factor;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        // 2 Σ (−1)^{j−1} exp(−2j²x²).
        let sf: f64 = (1..=20)
            .map(|j| {
                let jf = j as f64;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * jf * jf * x * x).exp()
            })
            .sum::<f64>()
            * 2.0;
        sf.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(u_complement(&r), 4.0);

        let r = mann_whitney(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 2.0);
        assert!(r.p_value > 0.99);

        let r = mann_whitney(&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!((r.statistic, u_complement(&r)), (3.0, 6.0));

        assert_eq!(mann_whitney(&[], &[1.0]), Err(AnalysisError::EmptySample));
    }

    #[test]
    fn mann_whitney_all_tied() {
        let r = mann_whitney(&[5.0; 4], &[5.0; 3]).unwrap();
        assert_eq!(r.statistic, 6.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().statistic, 0.0);
        let r = ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap().statistic, 0.5);
        assert_eq!(ks_two_sample(&[1.0], &[]), Err(AnalysisError::EmptySample));
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Standard table values of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 5e-4);
        // Both series agree around the switch point.
        let left = {
            let x: f64 = 1.18 - 1e-9;
            kolmogorov_sf(x)
        };
        assert!((left - kolmogorov_sf(1.18)).abs() < 1e-7);
    }
}
