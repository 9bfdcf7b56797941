//! Basquin (inverse power law) maps. The stable parameterization is the
//! centering remedy: the log median life at the mean log stress replaces the
//! raw intercept, and the slope is carried on a log scale so every USP
//! coordinate is a free real.

use super::{exp_checked, AnchorContext, ReparamError};
use crate::params::{RelationshipKind, SpVector, TpVector, TpnsVector, UspVector};
use crate::relationships::BasquinParams;

pub fn usp_to_tp(usp: &UspVector, ctx: &AnchorContext) -> Result<TpVector, ReparamError> {
    let (m, slope, lsig) = (usp.values[0], usp.values[1], usp.values[2]);
    let sigma = exp_checked(lsig, "logSigma")?;
    let beta1 = -exp_checked(slope, "slope")?;
    let beta0 = m - beta1 * ctx.mean_log_stress;
    Ok(TpVector::new(
        RelationshipKind::Basquin,
        vec![beta0, beta1, sigma],
    ))
}

pub fn tp_to_usp(tp: &TpVector, ctx: &AnchorContext) -> Result<UspVector, ReparamError> {
    let p = BasquinParams::from_tp(tp).unwrap();
    if !(p.beta1 < 0.0 && p.sigma > 0.0) {
        return Err(ReparamError::InvalidParameters(
            "Basquin needs beta1<0 and sigma>0".into(),
        ));
    }
    let m = p.beta0 + p.beta1 * ctx.mean_log_stress;
    Ok(UspVector::new(
        RelationshipKind::Basquin,
        vec![m, (-p.beta1).ln(), p.sigma.ln()],
    ))
}

pub fn usp_to_sp(usp: &UspVector) -> Result<SpVector, ReparamError> {
    let (m, slope, lsig) = (usp.values[0], usp.values[1], usp.values[2]);
    Ok(SpVector::new(
        RelationshipKind::Basquin,
        vec![
            exp_checked(m, "logMedianAtCenter")?,
            -exp_checked(slope, "slope")?,
            exp_checked(lsig, "logSigma")?,
        ],
    ))
}

pub fn unscale_tp(tp: &TpVector, meta: &crate::dataset::ScalingMeta) -> TpnsVector {
    let p = BasquinParams::from_tp(tp).unwrap();
    TpnsVector::new(
        RelationshipKind::Basquin,
        vec![
            p.beta0 + meta.n_max.ln() - p.beta1 * meta.s_max.ln(),
            p.beta1,
            p.sigma,
        ],
    )
}
