//! Summary statistics and the two-sample t-test used to compare trial sets.

use serde::Serialize;
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
}

/// Compensated (Neumaier) summation, so that repeated values such as
/// 25 × 0.7 average back to exactly 0.7.
pub fn sum(xs: &[f64]) -> f64 {
    let (mut total, mut carry) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = total + x;
        if total.abs() >= x.abs() {
            carry += (total - t) + x;
        } else {
            carry += (x - t) + total;
        }
        total = t;
    }
    total + carry
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(sum(xs) / xs.len() as f64)
    }
}

/// Sample standard deviation (divisor `n - 1`); `None` for fewer than two values.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-tailed p-value.
    pub p: f64,
    pub significant: bool,
}

/// Two-tailed tail mass of Student's t with `df` degrees of freedom:
/// `P(|T| ≥ |t|) = I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Pooled-variance two-sample Student t-test, two-tailed.
///
/// With zero pooled variance the statistic is undefined; equal means give
/// `t = 0, p = 1` and unequal means give `t = ±∞, p = 0`.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest, StatsError> {
    for xs in [a, b] {
        if xs.len() < 2 {
            return Err(StatsError::TooFew {
                needed: 2,
                got: xs.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let ssa: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let ssb: f64 = b.iter().map(|x| (x - mb) * (x - mb)).sum();
    let df = na + nb - 2.0;
    let pooled = (ssa + ssb) / df;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let diff = ma - mb;

    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = diff / se;
        (t, student_t_two_tailed(t, df))
    };
    Ok(TTest {
        t,
        df,
        p,
        significant: p < alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_std() {
        assert_relative_eq!(mean(&[0.6, 0.8]).unwrap(), 0.7, epsilon = 1e-15);
        assert_relative_eq!(sample_std(&[0.6, 0.8]).unwrap(), 0.1414213562373095, epsilon = 1e-12);
        assert_eq!(sample_std(&[0.7; 25]).unwrap(), 0.0);
        assert_eq!(sample_std(&[0.7]), None);
    }

    #[test]
    fn identical_samples() {
        let a = [0.5, 0.6, 0.7];
        let r = t_test(&a, &a, 0.01).unwrap();
        assert_eq!((r.t, r.p, r.significant), (0.0, 1.0, false));
    }

    #[test]
    fn degenerate_separation() {
        let r = t_test(&[0.9; 25], &[0.1; 25], 0.01).unwrap();
        assert!(r.significant);
        assert_eq!(r.p, 0.0);
        assert_eq!(r.t, f64::INFINITY);
        assert_eq!(t_test(&[0.3; 4], &[0.3; 4], 0.01).unwrap().p, 1.0);
    }

    #[test]
    fn known_quantiles() {
        // t_{0.975, 10} = 2.228138851986274
        assert_relative_eq!(student_t_two_tailed(2.228138851986274, 10.0), 0.05, epsilon = 1e-10);
        // t_{0.995, 48} = 2.682204
        assert_relative_eq!(student_t_two_tailed(2.682204, 48.0), 0.01, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.61, 0.65, 0.58, 0.7];
        let b = [0.55, 0.52, 0.6, 0.57, 0.5];
        let x = t_test(&a, &b, 0.05).unwrap();
        let y = t_test(&b, &a, 0.05).unwrap();
        assert_eq!(x.t, -y.t);
        assert_eq!(x.p, y.p);
    }

    #[test]
    fn too_few() {
        assert!(t_test(&[1.0], &[1.0, 2.0], 0.01).is_err());
    }
}
