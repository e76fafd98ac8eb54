//! Nonparametric statistics kernel. Every function here is pure and
//! reentrant.

mod descriptive;
mod kendall;
mod magnitude;
mod mann_whitney;
mod shapiro;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use descriptive::{describe, neumaier_sum, DescriptiveStats};
pub use kendall::{kendall_tau_b, KendallResult};
pub use magnitude::{classify_magnitude, Magnitude};
pub use mann_whitney::{mann_whitney_u, MwuMethod, MwuResult, EXACT_MAX_TOTAL};
pub use shapiro::{shapiro_wilk, SwResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    Empty,
    #[error("paired samples differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("at most {limit} observations supported, got {got}")]
    TooMany { limit: usize, got: usize },
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("every {0} value is tied; the statistic is undefined")]
    AllTied(&'static str),
    #[error("sample has zero range; the statistic is undefined")]
    ConstantSample,
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Upper tail probability of the standard normal distribution.
pub(crate) fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided significance flags at the 0.05 and 0.01 levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Significance {
    pub at_05: bool,
    pub at_01: bool,
}

impl Significance {
    pub fn of(p_value: f64) -> Self {
        Self {
            at_05: p_value < 0.05,
            at_01: p_value < 0.01,
        }
    }
}
