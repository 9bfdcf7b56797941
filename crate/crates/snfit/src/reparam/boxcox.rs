//! Box-Cox/Loglinear-sigma maps. The stable parameterization trades the
//! regression coefficients for the shape parameters and medians of the life
//! distribution at the two anchor stress levels (lowest failure stress and
//! highest stress in the data set).

use super::{exp_checked, AnchorContext, ReparamError};
use crate::distributions::{std_median, Family};
use crate::params::{RelationshipKind, SpVector, TpVector, TpnsVector, UspVector};
use crate::relationships::{boxcox_nu, BoxCoxParams};

struct StressAnchors {
    ln_s_low: f64,
    ln_s_high: f64,
    s_low: f64,
    s_high: f64,
}

fn anchors(ctx: &AnchorContext) -> Result<StressAnchors, ReparamError> {
    let s_low = ctx.s_low_fail;
    let s_high = ctx.s_high_all;
    if !(s_high > s_low) {
        return Err(ReparamError::DegenerateAnchors(format!(
            "stress anchors coincide (S_Low = {s_low}, S_High = {s_high}); singular inversion"
        )));
    }
    Ok(StressAnchors {
        ln_s_low: s_low.ln(),
        ln_s_high: s_high.ln(),
        s_low,
        s_high,
    })
}

pub fn usp_to_tp(
    usp: &UspVector,
    ctx: &AnchorContext,
    family: Family,
) -> Result<TpVector, ReparamError> {
    let a = anchors(ctx)?;
    let (ls_low, ls_high, lambda, lt_low, lt_high) = (
        usp.values[0],
        usp.values[1],
        usp.values[2],
        usp.values[3],
        usp.values[4],
    );
    let sigma_low = exp_checked(ls_low, "logSigmaLow")?;
    let sigma_high = exp_checked(ls_high, "logSigmaHigh")?;
    let z50 = std_median(family);
    // shape link through the two anchors
    let beta1_sigma = (ls_high - ls_low) / (a.ln_s_low - a.ln_s_high);
    let beta0_sigma = ls_low - beta1_sigma * a.ln_s_high;
    // location link through the two anchor medians
    let nu_low = boxcox_nu(a.s_low, lambda);
    let nu_high = boxcox_nu(a.s_high, lambda);
    let denom = nu_low - nu_high;
    if denom == 0.0 {
        return Err(ReparamError::DegenerateAnchors(
            "Box-Cox transform collapses the stress anchors".into(),
        ));
    }
    let beta1 = ((lt_high - lt_low) - z50 * (sigma_high - sigma_low)) / denom;
    let beta0 = lt_low - beta1 * nu_high - z50 * sigma_low;
    if !(beta0.is_finite() && beta1.is_finite()) {
        return Err(ReparamError::LimitRegion {
            coordinate: "lambda",
            message: "location coefficients overflow".into(),
        });
    }
    Ok(TpVector::new(
        RelationshipKind::BoxCoxLoglinearSigma,
        vec![beta0, beta1, lambda, beta0_sigma, beta1_sigma],
    ))
}

pub fn tp_to_usp(
    tp: &TpVector,
    ctx: &AnchorContext,
    family: Family,
) -> Result<UspVector, ReparamError> {
    let a = anchors(ctx)?;
    let p = BoxCoxParams::from_tp(tp).unwrap();
    let z50 = std_median(family);
    let ls_low = p.beta0_sigma + p.beta1_sigma * a.ln_s_high;
    let ls_high = p.beta0_sigma + p.beta1_sigma * a.ln_s_low;
    let lt_low = p.beta0 + p.beta1 * boxcox_nu(a.s_high, p.lambda) + z50 * ls_low.exp();
    let lt_high = p.beta0 + p.beta1 * boxcox_nu(a.s_low, p.lambda) + z50 * ls_high.exp();
    Ok(UspVector::new(
        RelationshipKind::BoxCoxLoglinearSigma,
        vec![ls_low, ls_high, p.lambda, lt_low, lt_high],
    ))
}

pub fn usp_to_sp(usp: &UspVector) -> Result<SpVector, ReparamError> {
    Ok(SpVector::new(
        RelationshipKind::BoxCoxLoglinearSigma,
        vec![
            exp_checked(usp.values[0], "logSigmaLow")?,
            exp_checked(usp.values[1], "logSigmaHigh")?,
            usp.values[2],
            exp_checked(usp.values[3], "logTLow")?,
            exp_checked(usp.values[4], "logTHigh")?,
        ],
    ))
}

pub fn unscale_tp(tp: &TpVector, meta: &crate::dataset::ScalingMeta) -> TpnsVector {
    let p = BoxCoxParams::from_tp(tp).unwrap();
    let s_pow = (p.lambda * meta.s_max.ln()).exp();
    let beta1 = p.beta1 / s_pow;
    TpnsVector::new(
        RelationshipKind::BoxCoxLoglinearSigma,
        vec![
            meta.n_max.ln() + p.beta0 - beta1 * boxcox_nu(meta.s_max, p.lambda),
            beta1,
            p.lambda,
            p.beta0_sigma - p.beta1_sigma * meta.s_max.ln(),
            p.beta1_sigma,
        ],
    )
}
