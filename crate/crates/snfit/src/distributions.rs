//! Standard location-scale kernels for the four log-location-scale families
//! used by the S-N models: normal (lognormal lifetimes), smallest extreme
//! value (Weibull), logistic (loglogistic), and largest extreme value
//! (Frechet).
//!
//! Each family exposes the standardized cdf, pdf, quantile, and a dedicated
//! log-survival routine so right-censored terms stay accurate at extreme z.

use crate::special;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
}

/// Location-scale family of the log lifetime (or log strength).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Normal errors: lifetime is lognormal.
    #[serde(rename = "lognormal")]
    Normal,
    /// Smallest extreme value errors: lifetime is Weibull.
    #[serde(rename = "weibull")]
    SmallestExtremeValue,
    /// Logistic errors: lifetime is loglogistic.
    #[serde(rename = "loglogistic")]
    Logistic,
    /// Largest extreme value errors: lifetime is Frechet.
    #[serde(rename = "frechet")]
    LargestExtremeValue,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Normal,
        Family::SmallestExtremeValue,
        Family::Logistic,
        Family::LargestExtremeValue,
    ];

    /// Name used in CLI flags and JSON documents.
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "lognormal",
            Family::SmallestExtremeValue => "weibull",
            Family::Logistic => "loglogistic",
            Family::LargestExtremeValue => "frechet",
        }
    }

    /// Display name as used in the comparison tables.
    pub fn table_name(self) -> &'static str {
        match self {
            Family::Normal => "Lognormal",
            Family::SmallestExtremeValue => "Weibull",
            Family::Logistic => "Loglogistic",
            Family::LargestExtremeValue => "Frechet",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        match name.to_ascii_lowercase().as_str() {
            "lognormal" | "normal" => Some(Family::Normal),
            "weibull" | "sev" => Some(Family::SmallestExtremeValue),
            "loglogistic" | "logistic" => Some(Family::Logistic),
            "frechet" | "lev" => Some(Family::LargestExtremeValue),
            _ => None,
        }
    }
}

/// Standardized cdf of `family` at `z`.
pub fn std_cdf(family: Family, z: f64) -> f64 {
    match family {
        Family::Normal => special::norm_cdf(z),
        Family::SmallestExtremeValue => -(-z.exp()).exp_m1(),
        Family::Logistic => plogis(z),
        Family::LargestExtremeValue => (-(-z).exp()).exp(),
    }
}

/// Standardized pdf of `family` at `z`.
pub fn std_pdf(family: Family, z: f64) -> f64 {
    std_log_pdf(family, z).exp()
}

/// log of the standardized pdf; the form the likelihood actually sums.
pub fn std_log_pdf(family: Family, z: f64) -> f64 {
    match family {
        Family::Normal => {
            -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
        }
        Family::SmallestExtremeValue => z - z.exp(),
        Family::Logistic => -special::softplus(z) - special::softplus(-z),
        Family::LargestExtremeValue => -z - (-z).exp(),
    }
}

/// log(1 - cdf), computed through per-family survival forms so censored
/// contributions do not cancel catastrophically.
pub fn std_log_survival(family: Family, z: f64) -> f64 {
    match family {
        Family::Normal => special::norm_log_survival(z),
        Family::SmallestExtremeValue => -z.exp(),
        Family::Logistic => -special::softplus(z),
        Family::LargestExtremeValue => {
            // 1 - exp(-exp(-z))
            let u = (-z).exp();
            if u < 1e-300 {
                // survival ~ e^{-z}
                -z
            } else {
                special::ln_one_minus_exp(-u)
            }
        }
    }
}

/// Standardized quantile of `family` at probability `p`.
pub fn std_quantile(family: Family, p: f64) -> Result<f64, DistributionError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DistributionError::ProbabilityOutOfRange(p));
    }
    Ok(match family {
        Family::Normal => special::norm_quantile(p),
        Family::SmallestExtremeValue => (-(-p).ln_1p()).ln(),
        Family::Logistic => p.ln() - (-p).ln_1p(),
        Family::LargestExtremeValue => -(-p.ln()).ln(),
    })
}

/// Median of the standardized distribution.
pub fn std_median(family: Family) -> f64 {
    match family {
        Family::Normal | Family::Logistic => 0.0,
        Family::SmallestExtremeValue => (2f64.ln()).ln(),
        Family::LargestExtremeValue => -(2f64.ln()).ln(),
    }
}

/// Standard logistic cdf (inverse logit).
pub fn plogis(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard logistic quantile (logit). Errors at 0 and 1 where the value
/// would be infinite.
pub fn qlogis(p: f64) -> Result<f64, DistributionError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DistributionError::ProbabilityOutOfRange(p));
    }
    Ok(p.ln() - (-p).ln_1p())
}
