//! Nishijima hyperbola USP/TP/SP maps and the rectangular-hyperbola special
//! case reached as qlogisp -> +inf.
//!
//! The linear system tying (A, B, C) to the three anchor stresses is solved
//! by elimination; the elimination collapses to closed forms in the USP
//! coordinates (e.g. C = (logS_MidL - E)(logS_Mid - E) p/(1-p)), which is
//! what keeps the round trips tight at extreme qlogisp.

use super::{exp_checked, AnchorContext, ReparamError};
use crate::distributions::plogis;
use crate::params::{RelationshipKind, SpVector, TpVector, TpnsVector, UspVector};
use crate::relationships::{hyperbola_offset, NishijimaParams, RectHyperbolaParams};

struct Geometry {
    vl: f64,
    vh: f64,
    vm: f64,
    dlogn: f64,
}

fn geometry(ctx: &AnchorContext) -> Result<Geometry, ReparamError> {
    let vl = ctx.n_low.ln();
    let vh = ctx.n_high.ln();
    let dlogn = vh - vl;
    if !(dlogn > 0.0) {
        return Err(ReparamError::DegenerateAnchors(format!(
            "log n span is {dlogn}; anchor system singular"
        )));
    }
    Ok(Geometry {
        vl,
        vh,
        vm: ctx.n_mid.ln(),
        dlogn,
    })
}

/// Offsets above the asymptote of the two mid-level references: the chord
/// midpoint (upper) and the rectangular-hyperbola point (lower).
/// `a` and `b` are logS_Low - E and logS_High - E.
fn mid_offsets(a: f64, b: f64, w: f64) -> (f64, f64, f64) {
    let upper = 0.5 * (a + b);
    let lower = 2.0 * a * b / (a + b);
    let width = w * w / (2.0 * (a + b)); // upper - lower, cancellation-free
    (upper, lower, width)
}

pub fn usp_to_tp(usp: &UspVector, ctx: &AnchorContext) -> Result<TpVector, ReparamError> {
    let g = geometry(ctx)?;
    let (lsl, ldhl, q, ldsle, lsx) = (
        usp.values[0],
        usp.values[1],
        usp.values[2],
        usp.values[3],
        usp.values[4],
    );
    let w = exp_checked(ldhl, "logDeltaHighLow")?;
    let a = exp_checked(ldsle, "logDeltaSLowE")?; // logS_Low - E
    let sigma_x = exp_checked(lsx, "logSigmaX")?;
    let b_off = a + w; // logS_High - E
    let e = lsl - a;
    let (_, lower, width) = mid_offsets(a, b_off, w);
    let x2 = lower + plogis(-q) * width; // logS_Mid - E
    let eq = q.exp();
    if !eq.is_finite() {
        return Err(ReparamError::LimitRegion {
            coordinate: "qlogisp",
            message: format!("exp({q}) overflows in the hyperbola solve"),
        });
    }
    // elimination of the anchor linear system
    let c = lower * x2 * eq;
    let dy = a * w / (a + b_off) + plogis(-q) * width; // logS_Mid - logS_Low
    let a_tp = (dy / (0.5 * g.dlogn)) * (1.0 + (lower / a) * eq);
    let b_tp = lsl + a_tp * g.vh - c / a;
    if !(c.is_finite() && a_tp.is_finite() && b_tp.is_finite()) {
        return Err(ReparamError::LimitRegion {
            coordinate: "qlogisp",
            message: "hyperbola coefficients overflow toward the rectangular limit".into(),
        });
    }
    Ok(TpVector::new(
        RelationshipKind::Nishijima,
        vec![a_tp, b_tp, c, e, sigma_x],
    ))
}

pub fn tp_to_usp(tp: &TpVector, ctx: &AnchorContext) -> Result<UspVector, ReparamError> {
    let g = geometry(ctx)?;
    let p = NishijimaParams::from_tp(tp).unwrap();
    if !(p.a > 0.0 && p.c > 0.0 && p.sigma_x > 0.0) {
        return Err(ReparamError::InvalidParameters(
            "Nishijima parameters violate A>0, C>0, sigma_X>0".into(),
        ));
    }
    let m = |v: f64| p.a * v - (p.b - p.e);
    let x1 = hyperbola_offset(m(g.vh), p.c); // logS_Low - E
    let x2 = hyperbola_offset(m(g.vm), p.c);
    let x3 = hyperbola_offset(m(g.vl), p.c); // logS_High - E
    let s1 = (m(g.vh) * m(g.vh) + 4.0 * p.c).sqrt();
    let s3 = (m(g.vl) * m(g.vl) + 4.0 * p.c).sqrt();
    // logS_High - logS_Low without subtracting nearby curve values
    let w = p.a * g.dlogn * (x1 + x3) / (s1 + s3);
    let lower = 2.0 * x1 * x3 / (x1 + x3);
    if !(x2 > 0.0 && lower > 0.0) {
        return Err(ReparamError::LimitingModelRegion(
            "mid anchor fell outside (S_MidL, S_MidU)".into(),
        ));
    }
    // p/(1-p) = C / [(logS_MidL - E)(logS_Mid - E)]
    let q = p.c.ln() - lower.ln() - x2.ln();
    Ok(UspVector::new(
        RelationshipKind::Nishijima,
        vec![p.e + x1, w.ln(), q, x1.ln(), p.sigma_x.ln()],
    ))
}

pub fn usp_to_sp(usp: &UspVector, ctx: &AnchorContext) -> Result<SpVector, ReparamError> {
    let _ = geometry(ctx)?;
    let (lsl, ldhl, q, ldsle, lsx) = (
        usp.values[0],
        usp.values[1],
        usp.values[2],
        usp.values[3],
        usp.values[4],
    );
    let w = exp_checked(ldhl, "logDeltaHighLow")?;
    let a = exp_checked(ldsle, "logDeltaSLowE")?;
    let b_off = a + w;
    let e = lsl - a;
    let (_, lower, width) = mid_offsets(a, b_off, w);
    let x2 = lower + plogis(-q) * width;
    Ok(SpVector::new(
        RelationshipKind::Nishijima,
        vec![
            lsl.exp(),
            (e + x2).exp(),
            (lsl + w).exp(),
            e,
            exp_checked(lsx, "logSigmaX")?,
        ],
    ))
}

pub fn unscale_tp(tp: &TpVector, meta: &crate::dataset::ScalingMeta) -> TpnsVector {
    let p = NishijimaParams::from_tp(tp).unwrap();
    let ln_s = meta.s_max.ln();
    let ln_n = meta.n_max.ln();
    TpnsVector::new(
        RelationshipKind::Nishijima,
        vec![
            p.a,
            p.b + ln_s + p.a * ln_n,
            p.c,
            p.e + ln_s,
            p.sigma_x,
        ],
    )
}

// --- rectangular hyperbola -------------------------------------------------

pub fn recthyp_usp_to_tp(usp: &UspVector, ctx: &AnchorContext) -> Result<TpVector, ReparamError> {
    let g = geometry(ctx)?;
    let (lsl, ldhl, ldsle, lsx) = (
        usp.values[0],
        usp.values[1],
        usp.values[2],
        usp.values[3],
    );
    let w = exp_checked(ldhl, "logDeltaHighLow")?;
    let a = exp_checked(ldsle, "logDeltaSLowE")?;
    let sigma_x = exp_checked(lsx, "logSigmaX")?;
    let b_off = a + w;
    let e_star = lsl - a;
    // anchor equations x(log n_high) = a, x(log n_low) = a + w
    let b_star = g.vl - a * g.dlogn / w;
    let c_star = a * b_off * g.dlogn / w;
    if !(b_star.is_finite() && c_star.is_finite()) {
        return Err(ReparamError::LimitRegion {
            coordinate: "logDeltaHighLow",
            message: "rectangular-hyperbola coefficients overflow".into(),
        });
    }
    Ok(TpVector::new(
        RelationshipKind::RectangularHyperbola,
        vec![b_star, c_star, e_star, sigma_x],
    ))
}

pub fn recthyp_tp_to_usp(tp: &TpVector, ctx: &AnchorContext) -> Result<UspVector, ReparamError> {
    let g = geometry(ctx)?;
    let p = RectHyperbolaParams::from_tp(tp).unwrap();
    if !(p.c_star > 0.0 && p.sigma_x > 0.0) {
        return Err(ReparamError::InvalidParameters(
            "rectangular hyperbola needs C*>0 and sigma_X>0".into(),
        ));
    }
    if g.vl <= p.b_star {
        return Err(ReparamError::LimitingModelRegion(format!(
            "anchor log n_low = {} at or left of the vertical asymptote B* = {}",
            g.vl, p.b_star
        )));
    }
    let x1 = p.c_star / (g.vh - p.b_star);
    let w = p.c_star * g.dlogn / ((g.vh - p.b_star) * (g.vl - p.b_star));
    Ok(UspVector::new(
        RelationshipKind::RectangularHyperbola,
        vec![p.e_star + x1, w.ln(), x1.ln(), p.sigma_x.ln()],
    ))
}

pub fn recthyp_usp_to_sp(
    usp: &UspVector,
    ctx: &AnchorContext,
) -> Result<SpVector, ReparamError> {
    let _ = geometry(ctx)?;
    let (lsl, ldhl, ldsle, lsx) = (
        usp.values[0],
        usp.values[1],
        usp.values[2],
        usp.values[3],
    );
    let w = exp_checked(ldhl, "logDeltaHighLow")?;
    let a = exp_checked(ldsle, "logDeltaSLowE")?;
    Ok(SpVector::new(
        RelationshipKind::RectangularHyperbola,
        vec![
            lsl.exp(),
            (lsl + w).exp(),
            lsl - a,
            exp_checked(lsx, "logSigmaX")?,
        ],
    ))
}

pub fn recthyp_unscale_tp(tp: &TpVector, meta: &crate::dataset::ScalingMeta) -> TpnsVector {
    let p = RectHyperbolaParams::from_tp(tp).unwrap();
    TpnsVector::new(
        RelationshipKind::RectangularHyperbola,
        vec![
            p.b_star + meta.n_max.ln(),
            p.c_star,
            p.e_star + meta.s_max.ln(),
            p.sigma_x,
        ],
    )
}
