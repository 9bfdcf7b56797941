//! Exact, invertible maps between the four parameterization views of each
//! model (TP <-> SP <-> USP), initial-value heuristics, and recovery of the
//! traditional parameters for the unscaled data (TPNS).
//!
//! The USP coordinates are the optimizer's space: every finite USP vector
//! maps to a valid traditional-parameter vector, and the conversions round
//! trip to ~1e-10 even deep into the limiting-model regions. The algebra is
//! arranged so no map subtracts nearly-equal large terms.

pub mod basquin;
pub mod boxcox;
pub mod cm;
pub mod initial;
pub mod nishijima;

use crate::dataset::{DataAnchors, ScalingMeta, SNDataset};
use crate::distributions::{qlogis, Family};
use crate::params::RelationshipKind;

pub use crate::params::{SpVector, TpVector, TpnsVector, UspVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Anchor quantities the reparameterizations are defined against. The data
/// anchors already carry everything needed, including the Box-Cox stress
/// anchors and the Basquin centering constant.
pub type AnchorContext = DataAnchors;

#[derive(Debug, Error, PartialEq)]
pub enum ReparamError {
    #[error("limit-region overflow in coordinate {coordinate}: {message}")]
    LimitRegion {
        coordinate: &'static str,
        message: String,
    },
    #[error("outside concave-up region: {0}")]
    OutsideConcaveRegion(String),
    #[error("outside limiting-model region: {0}")]
    LimitingModelRegion(String),
    #[error("degenerate anchors: {0}")]
    DegenerateAnchors(String),
    #[error("insufficient failures for slope split")]
    InsufficientFailures,
    #[error("insufficient curvature information")]
    InsufficientCurvature,
    #[error("not enough data: {0}")]
    NotEnoughData(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// A note that a transform was evaluated at (or pushed into) a limiting
/// region, e.g. a probability clipped before a logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFlag {
    pub coordinate: String,
    /// -1 toward the lower limit, +1 toward the upper limit
    pub direction: i32,
    pub message: String,
}

/// Probability clip bounds used before qlogis in initial-value transforms.
pub const QLOGIS_CLIP: f64 = 1e-12;

/// qlogis with clipping into [1e-12, 1-1e-12]; a clip is reported as a
/// limit-region flag rather than an error.
pub fn qlogis_clipped(p: f64, coordinate: &str) -> (f64, Option<LimitFlag>) {
    if p < QLOGIS_CLIP {
        let flag = LimitFlag {
            coordinate: coordinate.to_string(),
            direction: -1,
            message: format!("probability {p:.3e} clipped to {QLOGIS_CLIP:.0e} before qlogis"),
        };
        (qlogis(QLOGIS_CLIP).unwrap(), Some(flag))
    } else if p > 1.0 - QLOGIS_CLIP {
        let flag = LimitFlag {
            coordinate: coordinate.to_string(),
            direction: 1,
            message: format!(
                "probability {p:.12} clipped to 1-{QLOGIS_CLIP:.0e} before qlogis"
            ),
        };
        (qlogis(1.0 - QLOGIS_CLIP).unwrap(), Some(flag))
    } else {
        (qlogis(p).unwrap(), None)
    }
}

/// Slope of the line connecting (log n_high, log sLow) and
/// (log n_low, log sHigh): the limiting slope every Coffin-Manson slope is
/// pinned between.
pub fn limit_slope(
    ctx: &AnchorContext,
    s_low: f64,
    s_high: f64,
) -> Result<f64, ReparamError> {
    let span = ctx.n_high.ln() - ctx.n_low.ln();
    if !(span > 0.0) {
        return Err(ReparamError::DegenerateAnchors(format!(
            "log n span is {span}; n_low and n_high coincide"
        )));
    }
    Ok((s_low.ln() - s_high.ln()) / span)
}

pub(crate) fn exp_checked(x: f64, coordinate: &'static str) -> Result<f64, ReparamError> {
    let v = x.exp();
    if !v.is_finite() {
        return Err(ReparamError::LimitRegion {
            coordinate,
            message: format!("exp({x}) overflows"),
        });
    }
    Ok(v)
}

fn require_finite(usp: &UspVector) -> Result<(), ReparamError> {
    if !usp.all_finite() {
        return Err(ReparamError::InvalidParameters(format!(
            "non-finite USP coordinate in {:?}",
            usp.kind
        )));
    }
    Ok(())
}

/// Traditional parameters from unrestricted stable parameters.
pub fn usp_to_tp(
    usp: &UspVector,
    ctx: &AnchorContext,
    family: Family,
) -> Result<TpVector, ReparamError> {
    require_finite(usp)?;
    match usp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            cm::usp_to_tp(usp, ctx)
        }
        RelationshipKind::Nishijima => nishijima::usp_to_tp(usp, ctx),
        RelationshipKind::RectangularHyperbola => nishijima::recthyp_usp_to_tp(usp, ctx),
        RelationshipKind::Basquin => basquin::usp_to_tp(usp, ctx),
        RelationshipKind::BoxCoxLoglinearSigma => boxcox::usp_to_tp(usp, ctx, family),
    }
}

/// Unrestricted stable parameters from traditional parameters.
pub fn tp_to_usp(
    tp: &TpVector,
    ctx: &AnchorContext,
    family: Family,
) -> Result<UspVector, ReparamError> {
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            cm::tp_to_usp(tp, ctx)
        }
        RelationshipKind::Nishijima => nishijima::tp_to_usp(tp, ctx),
        RelationshipKind::RectangularHyperbola => nishijima::recthyp_tp_to_usp(tp, ctx),
        RelationshipKind::Basquin => basquin::tp_to_usp(tp, ctx),
        RelationshipKind::BoxCoxLoglinearSigma => boxcox::tp_to_usp(tp, ctx, family),
    }
}

/// Stable parameters from unrestricted stable parameters.
pub fn usp_to_sp(
    usp: &UspVector,
    ctx: &AnchorContext,
    family: Family,
) -> Result<SpVector, ReparamError> {
    require_finite(usp)?;
    match usp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            cm::usp_to_sp(usp, ctx)
        }
        RelationshipKind::Nishijima => nishijima::usp_to_sp(usp, ctx),
        RelationshipKind::RectangularHyperbola => nishijima::recthyp_usp_to_sp(usp, ctx),
        RelationshipKind::Basquin => basquin::usp_to_sp(usp),
        RelationshipKind::BoxCoxLoglinearSigma => {
            let _ = family;
            boxcox::usp_to_sp(usp)
        }
    }
}

/// Traditional parameters for the original unscaled data.
pub fn unscale_tp(tp: &TpVector, meta: &ScalingMeta) -> TpnsVector {
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            cm::unscale_tp(tp, meta)
        }
        RelationshipKind::Nishijima => nishijima::unscale_tp(tp, meta),
        RelationshipKind::RectangularHyperbola => nishijima::recthyp_unscale_tp(tp, meta),
        RelationshipKind::Basquin => basquin::unscale_tp(tp, meta),
        RelationshipKind::BoxCoxLoglinearSigma => boxcox::unscale_tp(tp, meta),
    }
}

/// Estimability preconditions for fitting `kind` to `data`.
pub fn check_estimability(kind: RelationshipKind, data: &SNDataset) -> Result<(), ReparamError> {
    initial::check_estimability(kind, data)
}

/// Initial USP vector plus any limit-region flags raised while building it.
pub fn initial_usp(
    kind: RelationshipKind,
    data: &SNDataset,
    family: Family,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    initial::initial_usp(kind, data, family)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A typical scaled-data anchor context used across the map tests.
    pub fn context() -> AnchorContext {
        AnchorContext {
            n_low: 0.01,
            n_high: 1.0,
            n_mid: 0.1,
            s_low_fail: 0.5,
            s_high_fail: 1.0,
            s_high_all: 1.0,
            mean_log_stress: -0.34,
        }
    }
}
