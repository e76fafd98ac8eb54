use std::fmt;

use serde::{Deserialize, Serialize};

/// Qualitative strength of a rank correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Magnitude {
    #[serde(rename = "Very Weak")]
    VeryWeak,
    Weak,
    Moderate,
    Strong,
}

impl Magnitude {
    pub fn label(self) -> &'static str {
        match self {
            Magnitude::VeryWeak => "Very Weak",
            Magnitude::Weak => "Weak",
            Magnitude::Moderate => "Moderate",
            Magnitude::Strong => "Strong",
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Bins `|tau|` after rounding it half away from zero to two decimals:
/// below 0.10 Very Weak, below 0.20 Weak, below 0.30 Moderate, else Strong.
///
/// The thresholds are inferred from published (tau, label) pairs, for which
/// this is the simplest consistent rule (-0.199 reads as Moderate).
pub fn classify_magnitude(tau_b: f64) -> Magnitude {
    // Nudge absorbs binary representation error of decimal inputs like 0.195.
    let hundredths = (tau_b.abs() * 100.0 + 1e-9).round();
    if hundredths < 10.0 {
        Magnitude::VeryWeak
    } else if hundredths < 20.0 {
        Magnitude::Weak
    } else if hundredths < 30.0 {
        Magnitude::Moderate
    } else {
        Magnitude::Strong
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_and_rounding() {
        assert_eq!(classify_magnitude(-0.332), Magnitude::Strong);
        assert_eq!(classify_magnitude(0.237), Magnitude::Moderate);
        assert_eq!(classify_magnitude(-0.199), Magnitude::Moderate);
        assert_eq!(classify_magnitude(0.093), Magnitude::VeryWeak);
        assert_eq!(classify_magnitude(0.148), Magnitude::Weak);
        assert_eq!(classify_magnitude(0.094), Magnitude::VeryWeak);
        assert_eq!(classify_magnitude(0.095), Magnitude::Weak);
        assert_eq!(classify_magnitude(0.195), Magnitude::Moderate);
        assert_eq!(classify_magnitude(-0.295), Magnitude::Strong);
        assert_eq!(classify_magnitude(0.0), Magnitude::VeryWeak);
        assert_eq!(classify_magnitude(1.0), Magnitude::Strong);
    }

    #[test]
    fn serde_labels() {
        assert_eq!(
            serde_json::to_string(&Magnitude::VeryWeak).unwrap(),
            "\"Very Weak\""
        );
        assert_eq!(
            serde_json::from_str::<Magnitude>("\"Strong\"").unwrap(),
            Magnitude::Strong
        );
    }
}
