use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

/// N, Mean, STD, Min, Max of one variable. `std` uses the n - 1 denominator
/// and is absent for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Kahan-Babuska (Neumaier) compensated sum.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

pub fn describe(xs: &[f64]) -> Result<DescriptiveStats, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(xs)?;
    let n = xs.len();
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (neumaier_sum(xs.iter().copied()) / n as f64).clamp(min, max);
    let std = (n > 1).then(|| {
        let ss = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(DescriptiveStats {
        n,
        mean,
        std,
        min,
        max,
    })
}
