//! Shapiro-Wilk W test using Royston's polynomial approximations for the
//! coefficients and the null distribution of W (algorithm AS R94).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_finite, normal_sf, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwResult {
    pub w_statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

const MIN_N: usize = 3;
const MAX_N: usize = 5000;

const SMALL: f64 = 1e-19;
const G: [f64; 2] = [-2.273, 0.459];
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

/// `cc[0] + cc[1] x + cc[2] x^2 + ...`
fn poly(cc: &[f64], x: f64) -> f64 {
    cc.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Antisymmetric weights `a[0..n/2]` for the largest-minus-smallest pairs.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let standard = Normal::standard();
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| standard.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first_free, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first_free..half {
        a[i] = -m[i] / fac;
    }
    a
}

pub fn shapiro_wilk(xs: &[f64]) -> Result<SwResult, StatsError> {
    let n = xs.len();
    if n < MIN_N {
        return Err(StatsError::TooFew {
            needed: MIN_N,
            got: n,
        });
    }
    if n > MAX_N {
        return Err(StatsError::TooMany {
            limit: MAX_N,
            got: n,
        });
    }
    check_finite(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    let range = sorted[n - 1] - sorted[0];
    if range < SMALL {
        return Err(StatsError::ConstantSample);
    }

    // Scale by the range to keep sums well conditioned.
    let scaled: Vec<f64> = sorted.iter().map(|x| x / range).collect();
    let a = coefficients(n);
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let ssq: f64 = scaled.iter().map(|x| (x - mean) * (x - mean)).sum();
    let ssa: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (scaled[n - 1 - i] - scaled[i]))
        .sum();
    let w = (ssa * ssa / ssq).min(1.0);

    Ok(SwResult {
        w_statistic: w,
        p_value: p_value(w, n),
        n,
    })
}

fn p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        return (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0);
    }
    let w1 = (1.0 - w).ln();
    let an = n as f64;
    let (y, mean, sd) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return 1e-99;
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let ln_n = an.ln();
        (w1, poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    normal_sf((y - mean) / sd).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_rejected() {
        assert_eq!(
            shapiro_wilk(&[4.0; 10]).unwrap_err(),
            StatsError::ConstantSample
        );
    }

    #[test]
    fn size_limits() {
        assert!(matches!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(StatsError::TooFew { .. })
        ));
        let big: Vec<f64> = (0..5001).map(f64::from).collect();
        assert!(matches!(
            shapiro_wilk(&big),
            Err(StatsError::TooMany { .. })
        ));
    }

    #[test]
    fn small_samples_match_reference() {
        // scipy.stats.shapiro
        let r = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
        assert!((r.w_statistic - 0.9642857142857143).abs() < 1e-6, "{r:?}");
        assert!((r.p_value - 0.6368868450289689).abs() < 1e-4, "{r:?}");
        let r = shapiro_wilk(&[2.1, 3.3, 1.2, 5.5, 4.1, 3.9, 2.8]).unwrap();
        assert!((r.w_statistic - 0.9919315024456852).abs() < 1e-4, "{r:?}");
        assert!((r.p_value - 0.9962536999454521).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn w_in_unit_interval() {
        let xs: Vec<f64> = (0..40).map(|i| f64::from(i * i % 17)).collect();
        let r = shapiro_wilk(&xs).unwrap();
        assert!(r.w_statistic > 0.0 && r.w_statistic <= 1.0);
        assert!((0.0..=1.0).contains(&r.p_value));
    }
}
