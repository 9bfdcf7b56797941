//! Coffin-Manson USP/TP/SP maps, shared with the zero-elastic-slope special
//! case (which drops the qlogisp coordinate and pins b = 0).
//!
//! Both amplitude coefficients are assembled in log space from differences
//! that are available exactly in USP terms, so the maps stay accurate out to
//! the limiting regions instead of cancelling.

use super::{exp_checked, AnchorContext, ReparamError};
use crate::distributions::{plogis, qlogis};
use crate::params::{RelationshipKind, SpVector, TpVector, TpnsVector, UspVector};
use crate::special::{ln_expm1, ln_one_minus_exp, log_add_exp};

struct Unpacked {
    lsl: f64,
    ldhl: f64,
    qlogisp: Option<f64>,
    lds: f64,
    lsx: f64,
}

fn unpack(usp: &UspVector) -> Unpacked {
    let v = &usp.values;
    match usp.kind {
        RelationshipKind::CoffinManson => Unpacked {
            lsl: v[0],
            ldhl: v[1],
            qlogisp: Some(v[2]),
            lds: v[3],
            lsx: v[4],
        },
        RelationshipKind::CoffinMansonZeroElasticSlope => Unpacked {
            lsl: v[0],
            ldhl: v[1],
            qlogisp: None,
            lds: v[2],
            lsx: v[3],
        },
        _ => unreachable!("cm maps called with {:?}", usp.kind),
    }
}

struct Geometry {
    dlogn: f64,
    l2l: f64,
    l2h: f64,
}

fn geometry(ctx: &AnchorContext) -> Result<Geometry, ReparamError> {
    let vl = ctx.n_low.ln();
    let vh = ctx.n_high.ln();
    let dlogn = vh - vl;
    if !(dlogn > 0.0) {
        return Err(ReparamError::DegenerateAnchors(format!(
            "log n span is {dlogn}; slope reparameterization undefined"
        )));
    }
    Ok(Geometry {
        dlogn,
        l2l: 2f64.ln() + vl,
        l2h: 2f64.ln() + vh,
    })
}

pub fn usp_to_tp(usp: &UspVector, ctx: &AnchorContext) -> Result<TpVector, ReparamError> {
    let u = unpack(usp);
    let g = geometry(ctx)?;
    let w = exp_checked(u.ldhl, "logDeltaHighLow")?; // log S_High - log S_Low
    let delta = exp_checked(u.lds, "logDeltaSlopes")?; // chi - c
    let sigma_x = exp_checked(u.lsx, "logSigmaX")?;
    let chi = -w / g.dlogn;
    // plogis weights; the zero-elastic-slope case is the p -> 0 limit
    let (p_b, p_mb) = match u.qlogisp {
        Some(q) => (plogis(q), plogis(-q)),
        None => (0.0, 1.0),
    };
    let b = chi * p_b;
    let c = chi - delta;
    let y3 = u.lsl + w;

    // A_el = [S_Low/(2N_High)^c - S_High/(2N_Low)^c]
    //      / [(2N_High)^(b-c) - (2N_Low)^(b-c)], all positive
    let el_gap = delta * g.dlogn; // log-argument gap in the numerator
    let bc_gap = w * p_mb + delta * g.dlogn; // (b - c) * dlogn
    let b_minus_c = -chi * p_mb + delta;
    let ln_a_el = (y3 - c * g.l2l) + ln_expm1(el_gap)
        - (b_minus_c * g.l2l + ln_expm1(bc_gap));

    // A_pl = [S_Low/(2N_High)^b - S_High/(2N_Low)^b]
    //      / [(2N_High)^(c-b) - (2N_Low)^(c-b)], numerator and denominator
    // both negative
    let pl_gap = -w * p_mb; // x1 - x2 < 0
    let ln_a_pl = if pl_gap == 0.0 {
        // q -> +inf boundary cannot occur with finite coordinates
        f64::NEG_INFINITY
    } else {
        (y3 - b * g.l2l) + ln_one_minus_exp(pl_gap)
            - (-b_minus_c * g.l2l + ln_one_minus_exp(-bc_gap))
    };

    let a_el = exp_checked(ln_a_el, "logDeltaHighLow")?;
    let a_pl = ln_a_pl.exp();
    if !a_pl.is_finite() {
        return Err(ReparamError::LimitRegion {
            coordinate: "logDeltaSlopes",
            message: format!("A_pl overflows (log A_pl = {ln_a_pl:.3})"),
        });
    }
    if usp.kind == RelationshipKind::CoffinMansonZeroElasticSlope && a_pl == 0.0 {
        return Err(ReparamError::LimitRegion {
            coordinate: "logDeltaSlopes",
            message: "A_pl underflows to zero".into(),
        });
    }
    Ok(match usp.kind {
        RelationshipKind::CoffinManson => TpVector::new(
            RelationshipKind::CoffinManson,
            vec![a_el, a_pl, b, c, sigma_x],
        ),
        _ => TpVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![a_el, a_pl, c, sigma_x],
        ),
    })
}

/// log S_Low and the log-stress gap Delta = log S_High - log S_Low for a
/// traditional-parameter point, via forms that never subtract nearby logs.
fn anchor_stress_logs(
    a_el: f64,
    a_pl: f64,
    b: f64,
    c: f64,
    g: &Geometry,
) -> Result<(f64, f64), ReparamError> {
    let ln_a_el = a_el.ln();
    let cb = c - b; // negative
    let (ln_low, gap) = if a_pl > 0.0 {
        let ln_a_pl = a_pl.ln();
        let ln_ph = ln_a_pl + cb * g.l2h; // A_pl (2N_High)^(c-b)
        let ln_pl = ln_a_pl + cb * g.l2l; // A_pl (2N_Low)^(c-b)
        let ln_base = log_add_exp(ln_a_el, ln_ph); // A_el + P_H
        let ln_diff = ln_pl + ln_one_minus_exp(cb * g.dlogn); // P_L - P_H
        let r = ln_diff - ln_base;
        let curvature = if r > 700.0 { r } else { r.exp().ln_1p() };
        (b * g.l2h + ln_base, -b * g.dlogn + curvature)
    } else {
        (b * g.l2h + ln_a_el, -b * g.dlogn)
    };
    if !(gap > 0.0) {
        return Err(ReparamError::OutsideConcaveRegion(
            "curve has no stress spread over the anchors".into(),
        ));
    }
    Ok((ln_low, gap))
}

pub fn tp_to_usp(tp: &TpVector, ctx: &AnchorContext) -> Result<UspVector, ReparamError> {
    let g = geometry(ctx)?;
    let p = crate::relationships::CmParams::from_tp(tp).unwrap();
    if !(p.a_el > 0.0) || p.a_pl < 0.0 || !(p.sigma_x > 0.0) || p.c >= p.b || p.b > 0.0 {
        return Err(ReparamError::InvalidParameters(
            "Coffin-Manson parameters violate A_el>0, A_pl>=0, c<b<=0, sigma_X>0".into(),
        ));
    }
    let (lsl, gap) = anchor_stress_logs(p.a_el, p.a_pl, p.b, p.c, &g)?;
    let chi = -gap / g.dlogn;
    let lds = {
        let d = chi - p.c;
        if !(d > 0.0) {
            return Err(ReparamError::OutsideConcaveRegion(format!(
                "plastic slope c = {} is not below the limit slope {chi}",
                p.c
            )));
        }
        d.ln()
    };
    let lsx = p.sigma_x.ln();
    let ldhl = gap.ln();
    Ok(match tp.kind {
        RelationshipKind::CoffinManson => {
            let ratio = p.b / chi;
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(ReparamError::OutsideConcaveRegion(format!(
                    "b/chi = {ratio} must lie strictly inside (0, 1)"
                )));
            }
            let q = qlogis(ratio).expect("ratio checked");
            UspVector::new(
                RelationshipKind::CoffinManson,
                vec![lsl, ldhl, q, lds, lsx],
            )
        }
        _ => UspVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![lsl, ldhl, lds, lsx],
        ),
    })
}

pub fn usp_to_sp(usp: &UspVector, ctx: &AnchorContext) -> Result<SpVector, ReparamError> {
    let u = unpack(usp);
    let g = geometry(ctx)?;
    let w = exp_checked(u.ldhl, "logDeltaHighLow")?;
    let delta = exp_checked(u.lds, "logDeltaSlopes")?;
    let sigma_x = exp_checked(u.lsx, "logSigmaX")?;
    let chi = -w / g.dlogn;
    let c = chi - delta;
    let s_low = exp_checked(u.lsl, "logSLow")?;
    let s_high = exp_checked(u.lsl + w, "logDeltaHighLow")?;
    Ok(match u.qlogisp {
        Some(q) => SpVector::new(
            RelationshipKind::CoffinManson,
            vec![s_low, s_high, chi * plogis(q), c, sigma_x],
        ),
        None => SpVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![s_low, s_high, c, sigma_x],
        ),
    })
}

pub fn unscale_tp(tp: &TpVector, meta: &crate::dataset::ScalingMeta) -> TpnsVector {
    let p = crate::relationships::CmParams::from_tp(tp).unwrap();
    let ln_s = meta.s_max.ln();
    let ln_n = meta.n_max.ln();
    let a_el = (ln_s + p.a_el.ln() - p.b * ln_n).exp();
    let a_pl = if p.a_pl > 0.0 {
        (ln_s + p.a_pl.ln() - p.c * ln_n).exp()
    } else {
        0.0
    };
    match tp.kind {
        RelationshipKind::CoffinManson => TpnsVector::new(
            RelationshipKind::CoffinManson,
            vec![a_el, a_pl, p.b, p.c, p.sigma_x],
        ),
        _ => TpnsVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![a_el, a_pl, p.c, p.sigma_x],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reparam::test_support::context;
    use approx::assert_relative_eq;

    fn usp(values: Vec<f64>) -> UspVector {
        UspVector::new(RelationshipKind::CoffinManson, values)
    }

    #[test]
    fn qlogisp_zero_halves_the_limit_slope() {
        let ctx = context();
        let u = usp(vec![-0.7, -1.0, 0.0, -2.0, -2.3]);
        let tp = usp_to_tp(&u, &ctx).unwrap();
        let w = (-1.0f64).exp();
        let chi = -w / (ctx.n_high.ln() - ctx.n_low.ln());
        assert_relative_eq!(tp.get("b").unwrap(), chi / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn large_negative_log_delta_slopes_is_basquin_limit() {
        let ctx = context();
        let u = usp(vec![-0.7, -1.0, 0.0, -30.0, -2.3]);
        let tp = usp_to_tp(&u, &ctx).unwrap();
        let w = (-1.0f64).exp();
        let chi = -w / (ctx.n_high.ln() - ctx.n_low.ln());
        assert_relative_eq!(tp.get("c").unwrap(), chi, max_relative = 1e-10);
    }

    #[test]
    fn produced_tp_satisfies_invariants() {
        let ctx = context();
        for lsl in [-3.0, 0.0] {
            for ldhl in [-4.0, 0.0, 4.0] {
                for q in [-5.0, 0.0, 5.0] {
                    for lds in [-4.0, 0.0, 4.0] {
                        let u = usp(vec![lsl, ldhl, q, lds, -1.0]);
                        let tp = usp_to_tp(&u, &ctx).unwrap();
                        crate::relationships::validate_tp(&tp).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_usp_tp_usp() {
        let ctx = context();
        let points = [
            vec![-0.7, -1.0, 0.3, -2.0, -2.3],
            vec![0.2, 1.5, -4.0, 2.0, -0.5],
            vec![-4.9, 4.9, 4.9, -4.9, 4.9],
            vec![2.0, -4.5, 4.2, 3.8, -4.0],
        ];
        for values in points {
            let u = usp(values.clone());
            let tp = usp_to_tp(&u, &ctx).unwrap();
            let back = tp_to_usp(&tp, &ctx).unwrap();
            for (a, b) in values.iter().zip(back.values.iter()) {
                assert!((a - b).abs() < 1e-10, "{values:?} -> {:?}", back.values);
            }
        }
    }

    #[test]
    fn zes_round_trip() {
        let ctx = context();
        let u = UspVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![-0.7, -1.0, -2.0, -2.3],
        );
        let tp = usp_to_tp(&u, &ctx).unwrap();
        assert_eq!(tp.kind, RelationshipKind::CoffinMansonZeroElasticSlope);
        crate::relationships::validate_tp(&tp).unwrap();
        let back = tp_to_usp(&tp, &ctx).unwrap();
        for (a, b) in u.values.iter().zip(back.values.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_power_law_is_outside_concave_region() {
        let ctx = context();
        // A_pl = 0 makes b/chi = 1, the boundary of the concave-up region
        let tp = TpVector::new(
            RelationshipKind::CoffinManson,
            vec![1.0, 0.0, -0.1, -0.5, 0.1],
        );
        let err = tp_to_usp(&tp, &ctx).unwrap_err();
        assert!(matches!(err, ReparamError::OutsideConcaveRegion(_)), "{err}");
    }

    #[test]
    fn amplitude_sign_structure_of_the_anchor_solve() {
        // the denominator of A_el is positive and of A_pl negative for
        // c < b and n_high > n_low
        let ctx = context();
        let g = geometry(&ctx).unwrap();
        for (b, c) in [(-0.1, -0.5), (-0.01, -2.0), (-0.4, -0.45)] {
            let den_el = ((b - c) * g.l2h).exp() - ((b - c) * g.l2l).exp();
            let den_pl = ((c - b) * g.l2h).exp() - ((c - b) * g.l2l).exp();
            assert!(den_el > 0.0);
            assert!(den_pl < 0.0);
        }
    }

    #[test]
    fn unscale_identity_and_direct_value() {
        let tp = TpVector::new(
            RelationshipKind::CoffinManson,
            vec![2.0, 5.0, -0.1, -0.6, 0.1],
        );
        let id = unscale_tp(&tp, &crate::dataset::ScalingMeta::identity());
        for (a, b) in tp.values.iter().zip(id.values.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
        let meta = crate::dataset::ScalingMeta {
            s_max: 3.0,
            n_max: 100.0,
        };
        let us = unscale_tp(&tp, &meta);
        // A_el_hat = S_max * A_el * N_max^(-b)
        assert_relative_eq!(
            us.get("A_el").unwrap(),
            3.0 * 2.0 * 100f64.powf(0.1),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            us.get("A_pl").unwrap(),
            3.0 * 5.0 * 100f64.powf(0.6),
            max_relative = 1e-12
        );
        assert_eq!(us.get("b"), tp.get("b"));
        assert_eq!(us.get("c"), tp.get("c"));
    }

    #[test]
    fn unscaled_quantile_curve_matches_scaled_curve() {
        // evaluating the TPNS at raw n equals evaluating the scaled TP at
        // n/n_max, times s_max
        let ctx = context();
        let u = usp(vec![-0.7, -1.0, 0.3, -2.0, -2.3]);
        let tp = usp_to_tp(&u, &ctx).unwrap();
        let meta = crate::dataset::ScalingMeta {
            s_max: 17.3,
            n_max: 1e4,
        };
        let tpns = unscale_tp(&tp, &meta);
        let tpns_as_tp = TpVector::new(tpns.kind, tpns.values.clone());
        for n_raw in [5e1, 1e3, 5e4] {
            let scaled = crate::relationships::eval_h(&tp, n_raw / meta.n_max).unwrap();
            let unscaled = crate::relationships::eval_h(&tpns_as_tp, n_raw).unwrap();
            assert_relative_eq!(unscaled, scaled * meta.s_max, max_relative = 1e-10);
        }
    }
}
