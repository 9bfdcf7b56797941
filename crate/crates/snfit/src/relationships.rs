//! Evaluation of each S-N relationship in traditional parameters: the
//! strength curve h(N) and its log-log derivative for strength-specified
//! kinds, the location/scale of log life for life-specified kinds, and the
//! curve inversions the quantile machinery needs.

use crate::distributions::{std_median, Family};
use crate::special::log_add_exp;
use thiserror::Error;

pub use crate::params::{RelationshipKind, SpecificationMode, TpVector};

#[derive(Debug, Error, PartialEq)]
pub enum RelationshipError {
    #[error("{kind:?} is not a {expected}-specified relationship")]
    WrongMode {
        kind: RelationshipKind,
        expected: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("invalid traditional parameters: {0}")]
    InvalidTp(String),
}

/// Coffin-Manson parameters; also carries the zero-elastic-slope special
/// case with b pinned at 0.
#[derive(Debug, Clone, Copy)]
pub struct CmParams {
    pub a_el: f64,
    pub a_pl: f64,
    pub b: f64,
    pub c: f64,
    pub sigma_x: f64,
}

impl CmParams {
    pub fn from_tp(tp: &TpVector) -> Option<CmParams> {
        let v = &tp.values;
        match tp.kind {
            RelationshipKind::CoffinManson => Some(CmParams {
                a_el: v[0],
                a_pl: v[1],
                b: v[2],
                c: v[3],
                sigma_x: v[4],
            }),
            RelationshipKind::CoffinMansonZeroElasticSlope => Some(CmParams {
                a_el: v[0],
                a_pl: v[1],
                b: 0.0,
                c: v[2],
                sigma_x: v[3],
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NishijimaParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub sigma_x: f64,
}

impl NishijimaParams {
    pub fn from_tp(tp: &TpVector) -> Option<NishijimaParams> {
        let v = &tp.values;
        (tp.kind == RelationshipKind::Nishijima).then(|| NishijimaParams {
            a: v[0],
            b: v[1],
            c: v[2],
            e: v[3],
            sigma_x: v[4],
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RectHyperbolaParams {
    pub b_star: f64,
    pub c_star: f64,
    pub e_star: f64,
    pub sigma_x: f64,
}

impl RectHyperbolaParams {
    pub fn from_tp(tp: &TpVector) -> Option<RectHyperbolaParams> {
        let v = &tp.values;
        (tp.kind == RelationshipKind::RectangularHyperbola).then(|| RectHyperbolaParams {
            b_star: v[0],
            c_star: v[1],
            e_star: v[2],
            sigma_x: v[3],
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BasquinParams {
    pub beta0: f64,
    pub beta1: f64,
    pub sigma: f64,
}

impl BasquinParams {
    pub fn from_tp(tp: &TpVector) -> Option<BasquinParams> {
        let v = &tp.values;
        (tp.kind == RelationshipKind::Basquin).then(|| BasquinParams {
            beta0: v[0],
            beta1: v[1],
            sigma: v[2],
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoxCoxParams {
    pub beta0: f64,
    pub beta1: f64,
    pub lambda: f64,
    pub beta0_sigma: f64,
    pub beta1_sigma: f64,
}

impl BoxCoxParams {
    pub fn from_tp(tp: &TpVector) -> Option<BoxCoxParams> {
        let v = &tp.values;
        (tp.kind == RelationshipKind::BoxCoxLoglinearSigma).then(|| BoxCoxParams {
            beta0: v[0],
            beta1: v[1],
            lambda: v[2],
            beta0_sigma: v[3],
            beta1_sigma: v[4],
        })
    }
}

/// Check the per-kind parameter constraints.
pub fn validate_tp(tp: &TpVector) -> Result<(), RelationshipError> {
    let bad = |msg: String| Err(RelationshipError::InvalidTp(msg));
    if !tp.all_finite() {
        return bad(format!("non-finite coordinate in {:?}", tp.kind));
    }
    match tp.kind {
        RelationshipKind::CoffinManson => {
            let p = CmParams::from_tp(tp).unwrap();
            if !(p.a_el > 0.0 && p.a_pl >= 0.0 && p.b <= 0.0 && p.c < 0.0 && p.sigma_x > 0.0) {
                return bad("need A_el>0, A_pl>=0, b<=0, c<0, sigma_X>0".into());
            }
            if p.c >= p.b {
                return bad("need |c|>|b| (c < b)".into());
            }
        }
        RelationshipKind::CoffinMansonZeroElasticSlope => {
            let p = CmParams::from_tp(tp).unwrap();
            if !(p.a_el > 0.0 && p.a_pl > 0.0 && p.c < 0.0 && p.sigma_x > 0.0) {
                return bad("need A_el>0, A_pl>0, c<0, sigma_X>0".into());
            }
        }
        RelationshipKind::Nishijima => {
            let p = NishijimaParams::from_tp(tp).unwrap();
            if !(p.a > 0.0 && p.c > 0.0 && p.sigma_x > 0.0) {
                return bad("need A>0, C>0, sigma_X>0".into());
            }
        }
        RelationshipKind::RectangularHyperbola => {
            let p = RectHyperbolaParams::from_tp(tp).unwrap();
            if !(p.c_star > 0.0 && p.sigma_x > 0.0) {
                return bad("need C*>0, sigma_X>0".into());
            }
        }
        RelationshipKind::Basquin => {
            let p = BasquinParams::from_tp(tp).unwrap();
            if !(p.beta1 < 0.0 && p.sigma > 0.0) {
                return bad("need beta1<0, sigma>0".into());
            }
        }
        RelationshipKind::BoxCoxLoglinearSigma => {}
    }
    Ok(())
}

/// Shape parameter of the strength distribution for strength-specified
/// kinds.
pub fn strength_sigma(tp: &TpVector) -> Option<f64> {
    match tp.kind {
        RelationshipKind::CoffinManson
        | RelationshipKind::CoffinMansonZeroElasticSlope
        | RelationshipKind::Nishijima
        | RelationshipKind::RectangularHyperbola => Some(*tp.values.last().unwrap()),
        _ => None,
    }
}

/// Positive root of x(x + m) = C, i.e. the offset of log h above the
/// horizontal asymptote of the Nishijima hyperbola. Stable for both signs
/// of m.
pub(crate) fn hyperbola_offset(m: f64, c: f64) -> f64 {
    let s = (m * m + 4.0 * c).sqrt();
    if m > 0.0 {
        2.0 * c / (m + s)
    } else {
        0.5 * (s - m)
    }
}

/// log h(N) for a strength-specified relationship.
pub fn eval_log_h(tp: &TpVector, n: f64) -> Result<f64, RelationshipError> {
    debug_assert!(n > 0.0);
    let ln_n = n.ln();
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            let p = CmParams::from_tp(tp).unwrap();
            let l2n = 2f64.ln() + ln_n;
            let elastic = p.a_el.ln() + p.b * l2n;
            let plastic = if p.a_pl > 0.0 {
                p.a_pl.ln() + p.c * l2n
            } else {
                f64::NEG_INFINITY
            };
            Ok(log_add_exp(elastic, plastic))
        }
        RelationshipKind::Nishijima => {
            let p = NishijimaParams::from_tp(tp).unwrap();
            let m = p.a * ln_n - (p.b - p.e);
            Ok(p.e + hyperbola_offset(m, p.c))
        }
        RelationshipKind::RectangularHyperbola => {
            let p = RectHyperbolaParams::from_tp(tp).unwrap();
            if ln_n <= p.b_star {
                return Err(RelationshipError::Domain(format!(
                    "log N = {ln_n} is at or left of the vertical asymptote B* = {}",
                    p.b_star
                )));
            }
            Ok(p.e_star + p.c_star / (ln_n - p.b_star))
        }
        _ => Err(RelationshipError::WrongMode {
            kind: tp.kind,
            expected: "strength",
        }),
    }
}

/// h(N) for a strength-specified relationship.
pub fn eval_h(tp: &TpVector, n: f64) -> Result<f64, RelationshipError> {
    eval_log_h(tp, n).map(f64::exp)
}

/// d log h / d log t, analytic per kind; strictly negative on the valid
/// domain.
pub fn dlogh_dlogt(tp: &TpVector, t: f64) -> Result<f64, RelationshipError> {
    let ln_t = t.ln();
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            let p = CmParams::from_tp(tp).unwrap();
            let l2n = 2f64.ln() + ln_t;
            let elastic = p.a_el.ln() + p.b * l2n;
            let plastic = if p.a_pl > 0.0 {
                p.a_pl.ln() + p.c * l2n
            } else {
                f64::NEG_INFINITY
            };
            let total = log_add_exp(elastic, plastic);
            let w_el = (elastic - total).exp();
            let w_pl = if plastic.is_finite() {
                (plastic - total).exp()
            } else {
                0.0
            };
            Ok(p.b * w_el + p.c * w_pl)
        }
        RelationshipKind::Nishijima => {
            let p = NishijimaParams::from_tp(tp).unwrap();
            let m = p.a * ln_t - (p.b - p.e);
            let s = (m * m + 4.0 * p.c).sqrt();
            Ok(-p.a * hyperbola_offset(m, p.c) / s)
        }
        RelationshipKind::RectangularHyperbola => {
            let p = RectHyperbolaParams::from_tp(tp).unwrap();
            if ln_t <= p.b_star {
                return Err(RelationshipError::Domain(format!(
                    "log N = {ln_t} is at or left of the vertical asymptote B* = {}",
                    p.b_star
                )));
            }
            let d = ln_t - p.b_star;
            Ok(-p.c_star / (d * d))
        }
        _ => Err(RelationshipError::WrongMode {
            kind: tp.kind,
            expected: "strength",
        }),
    }
}

/// Infimum of h over its domain: the horizontal asymptote where one exists,
/// otherwise 0.
fn h_infimum(tp: &TpVector) -> f64 {
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            let p = CmParams::from_tp(tp).unwrap();
            if p.b == 0.0 {
                p.a_el
            } else {
                0.0
            }
        }
        RelationshipKind::Nishijima => NishijimaParams::from_tp(tp).unwrap().e.exp(),
        RelationshipKind::RectangularHyperbola => {
            RectHyperbolaParams::from_tp(tp).unwrap().e_star.exp()
        }
        _ => 0.0,
    }
}

/// Solve h(n) = s for n. Closed forms where the relationship inverts in
/// elementary terms; bracketed bisection on log n for the two-slope
/// Coffin-Manson sum.
pub fn invert_h(tp: &TpVector, s: f64) -> Result<f64, RelationshipError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(RelationshipError::Domain(format!(
            "target stress must be positive and finite, got {s}"
        )));
    }
    let inf = h_infimum(tp);
    if s <= inf {
        return Err(RelationshipError::NoSolution(if s == inf {
            "target stress at horizontal asymptote".into()
        } else {
            format!("target stress {s} below horizontal asymptote {inf}")
        }));
    }
    let ln_s = s.ln();
    match tp.kind {
        RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope => {
            let p = CmParams::from_tp(tp).unwrap();
            if p.a_pl == 0.0 {
                if p.b == 0.0 {
                    return Err(RelationshipError::NoSolution(
                        "curve is constant; no crossing".into(),
                    ));
                }
                let l2n = (ln_s - p.a_el.ln()) / p.b;
                return Ok((l2n - 2f64.ln()).exp());
            }
            if p.b == 0.0 {
                // S = A_el + A_pl (2N)^c
                let l2n = ((s - p.a_el) / p.a_pl).ln() / p.c;
                return Ok((l2n - 2f64.ln()).exp());
            }
            invert_cm_bisect(&p, ln_s)
        }
        RelationshipKind::Nishijima => {
            let p = NishijimaParams::from_tp(tp).unwrap();
            let ln_n = (p.b - ln_s + p.c / (ln_s - p.e)) / p.a;
            Ok(ln_n.exp())
        }
        RelationshipKind::RectangularHyperbola => {
            let p = RectHyperbolaParams::from_tp(tp).unwrap();
            let v = p.b_star + p.c_star / (ln_s - p.e_star);
            Ok(v.exp())
        }
        _ => Err(RelationshipError::WrongMode {
            kind: tp.kind,
            expected: "strength",
        }),
    }
}

fn invert_cm_bisect(p: &CmParams, ln_s: f64) -> Result<f64, RelationshipError> {
    let log_h = |v: f64| -> f64 {
        let l2n = 2f64.ln() + v;
        log_add_exp(p.a_el.ln() + p.b * l2n, p.a_pl.ln() + p.c * l2n)
    };
    let mut lo = -60.0;
    let mut hi = 60.0;
    // h decreasing in v: need log_h(lo) >= ln_s >= log_h(hi)
    let mut expand = 0;
    while log_h(lo) < ln_s {
        lo -= 40.0;
        expand += 1;
        if expand > 10 {
            return Err(RelationshipError::NoSolution(
                "target stress above curve over the search range".into(),
            ));
        }
    }
    expand = 0;
    while log_h(hi) > ln_s {
        hi += 40.0;
        expand += 1;
        if expand > 10 {
            return Err(RelationshipError::NoSolution(
                "target stress below curve over the search range".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = log_h(mid) - ln_s;
        if g.abs() < 1e-13 || (hi - lo) < 1e-14 {
            return Ok(mid.exp());
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Box-Cox power transform of stress. The small-lambda branch keeps the map
/// continuous as the optimizer crosses 0.
pub fn boxcox_nu(s: f64, lambda: f64) -> f64 {
    debug_assert!(s > 0.0);
    let l = s.ln();
    if lambda.abs() < 1e-8 {
        l * (1.0 + lambda * l / 2.0)
    } else {
        (lambda * l).exp_m1() / lambda
    }
}

/// Location and scale of log life at stress s for a life-specified kind.
pub fn life_location_scale(tp: &TpVector, s: f64) -> Result<(f64, f64), RelationshipError> {
    match tp.kind {
        RelationshipKind::Basquin => {
            let p = BasquinParams::from_tp(tp).unwrap();
            Ok((p.beta0 + p.beta1 * s.ln(), p.sigma))
        }
        RelationshipKind::BoxCoxLoglinearSigma => {
            let p = BoxCoxParams::from_tp(tp).unwrap();
            let mu = p.beta0 + p.beta1 * boxcox_nu(s, p.lambda);
            let sigma = (p.beta0_sigma + p.beta1_sigma * s.ln()).exp();
            Ok((mu, sigma))
        }
        _ => Err(RelationshipError::WrongMode {
            kind: tp.kind,
            expected: "life",
        }),
    }
}

/// Log of the median-life curve for a life-specified kind. For Basquin the
/// relationship itself is the median curve; the Box-Cox median includes the
/// family's standardized median through the loglinear scale.
pub fn eval_life_median_log(
    tp: &TpVector,
    s: f64,
    family: Family,
) -> Result<f64, RelationshipError> {
    match tp.kind {
        RelationshipKind::Basquin => {
            let p = BasquinParams::from_tp(tp).unwrap();
            Ok(p.beta0 + p.beta1 * s.ln())
        }
        RelationshipKind::BoxCoxLoglinearSigma => {
            let (mu, sigma) = life_location_scale(tp, s)?;
            Ok(mu + sigma * std_median(family))
        }
        _ => Err(RelationshipError::WrongMode {
            kind: tp.kind,
            expected: "life",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cm_tp(a_el: f64, a_pl: f64, b: f64, c: f64, sx: f64) -> TpVector {
        TpVector::new(RelationshipKind::CoffinManson, vec![a_el, a_pl, b, c, sx])
    }

    fn nish_tp(a: f64, b: f64, c: f64, e: f64, sx: f64) -> TpVector {
        TpVector::new(RelationshipKind::Nishijima, vec![a, b, c, e, sx])
    }

    fn rh_tp(b: f64, c: f64, e: f64, sx: f64) -> TpVector {
        TpVector::new(RelationshipKind::RectangularHyperbola, vec![b, c, e, sx])
    }

    #[test]
    fn cm_pure_elastic_power() {
        let tp = cm_tp(1.0, 0.0, -0.1, -0.5, 0.1);
        // 2n = 1 makes the power term 1
        assert_relative_eq!(eval_h(&tp, 0.5).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(dlogh_dlogt(&tp, 0.5).unwrap(), -0.1, max_relative = 1e-14);
        assert_relative_eq!(invert_h(&tp, 1.0).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn nishijima_horizontal_asymptote() {
        // Inconel-like parameters
        let (a, b, c, e) = (0.418, 0.769, 0.123, -1.127);
        let tp = nish_tp(a, b, c, e, 0.095);
        // direct quadratic-formula evaluation of the hyperbola as an
        // independent path
        let direct = |n: f64| {
            let m = a * n.ln() - (b - e);
            0.5 * (-m + (m * m + 4.0 * c).sqrt()) + e
        };
        assert_relative_eq!(
            eval_log_h(&tp, 1e12).unwrap(),
            direct(1e12),
            max_relative = 1e-12
        );
        // monotone approach to the horizontal asymptote exp(E)
        let d12 = eval_log_h(&tp, 1e12).unwrap() - e;
        let d40 = eval_log_h(&tp, 1e40).unwrap() - e;
        assert!(d12 > d40 && d40 > 0.0);
        assert_relative_eq!(eval_h(&tp, 1e130).unwrap(), e.exp(), max_relative = 1e-3);
        // inverse at the asymptote errors
        let err = invert_h(&tp, e.exp()).unwrap_err();
        assert!(err.to_string().contains("at horizontal asymptote"), "{err}");
    }

    #[test]
    fn nishijima_invert_round_trip() {
        let tp = nish_tp(0.418, 0.769, 0.123, -1.127, 0.095);
        for n in [1e-4, 1e-2, 0.5, 1.0, 50.0] {
            let s = eval_h(&tp, n).unwrap();
            let back = invert_h(&tp, s).unwrap();
            assert_relative_eq!(back, n, max_relative = 1e-10);
        }
    }

    #[test]
    fn rect_hyperbola_closed_form() {
        let tp = rh_tp(0.0, 1.0, 0.0, 0.1);
        // log h(n) = 1/log n, so h(e) = e
        assert_relative_eq!(
            eval_h(&tp, std::f64::consts::E).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            dlogh_dlogt(&tp, std::f64::consts::E).unwrap(),
            -1.0,
            max_relative = 1e-13
        );
        assert!(matches!(
            eval_log_h(&tp, 1.0),
            Err(RelationshipError::Domain(_))
        ));
        assert!(matches!(
            eval_log_h(&tp, 0.5),
            Err(RelationshipError::Domain(_))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases: Vec<TpVector> = vec![
            cm_tp(2.0, 30.0, -0.08, -0.6, 0.1),
            TpVector::new(
                RelationshipKind::CoffinMansonZeroElasticSlope,
                vec![0.5, 20.0, -0.7, 0.1],
            ),
            nish_tp(0.418, 0.769, 0.123, -1.127, 0.095),
            rh_tp(-2.0, 3.0, -1.5, 0.1),
        ];
        for tp in &cases {
            for k in -8..=4 {
                let t = 10f64.powi(k);
                if eval_log_h(tp, t).is_err() {
                    continue;
                }
                let h = 1e-6;
                let up = eval_log_h(tp, (t.ln() + h).exp()).unwrap();
                let dn = eval_log_h(tp, (t.ln() - h).exp()).unwrap();
                let fd = (up - dn) / (2.0 * h);
                let an = dlogh_dlogt(tp, t).unwrap();
                assert!(
                    (an - fd).abs() <= 1e-6 * an.abs().max(1e-8),
                    "{:?} t={t}: analytic {an} vs fd {fd}",
                    tp.kind
                );
                assert!(an < 0.0);
            }
        }
    }

    #[test]
    fn h_is_strictly_decreasing() {
        let cases = vec![
            cm_tp(2.0, 30.0, -0.08, -0.6, 0.1),
            nish_tp(0.418, 0.769, 0.123, -1.127, 0.095),
            rh_tp(-9.48, 14.2, -1.49, 0.091),
        ];
        for tp in &cases {
            let mut prev = f64::INFINITY;
            for i in 0..60 {
                let n = 10f64.powf(-6.0 + i as f64 * 0.2);
                if let Ok(h) = eval_h(tp, n) {
                    assert!(h < prev, "{:?} at n={n}", tp.kind);
                    prev = h;
                }
            }
        }
    }

    #[test]
    fn cm_small_b_approaches_zes() {
        let cm = cm_tp(2.0, 30.0, -1e-10, -0.6, 0.1);
        let zes = TpVector::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            vec![2.0, 30.0, -0.6, 0.1],
        );
        let mut sup: f64 = 0.0;
        for i in 0..=100 {
            let n = 10f64.powf(-5.0 + 7.0 * i as f64 / 100.0);
            let d = (eval_log_h(&cm, n).unwrap() - eval_log_h(&zes, n).unwrap()).abs();
            sup = sup.max(d);
        }
        assert!(sup <= 1e-8, "sup |log h difference| = {sup}");
    }

    #[test]
    fn boxcox_nu_cases() {
        assert_relative_eq!(boxcox_nu(4.0, 1.0), 3.0, max_relative = 1e-14);
        assert_relative_eq!(boxcox_nu(4.0, 0.0), 4f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(boxcox_nu(4.0, 0.5), 2.0, max_relative = 1e-14);
        // continuity across lambda = 0
        let eps = 1e-9;
        let a = boxcox_nu(3.0, eps);
        let b = boxcox_nu(3.0, -eps);
        let c = boxcox_nu(3.0, 0.0);
        assert!((a - c).abs() < 1e-8 && (b - c).abs() < 1e-8);
    }

    #[test]
    fn life_median_log_cases() {
        let basquin = TpVector::new(RelationshipKind::Basquin, vec![2.0, -1.0, 0.3]);
        assert_relative_eq!(
            eval_life_median_log(&basquin, 1.0, Family::Normal).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        let bc = TpVector::new(
            RelationshipKind::BoxCoxLoglinearSigma,
            vec![2.0, -1.0, 0.0, -2.0, 0.5],
        );
        // normal family median term vanishes; lambda = 0 reduces to Basquin
        assert_relative_eq!(
            eval_life_median_log(&bc, 0.5, Family::Normal).unwrap(),
            2.0 - 0.5f64.ln(),
            max_relative = 1e-14
        );
        // Weibull family shifts by sigma(s) * ln ln 2
        let (_, sigma) = life_location_scale(&bc, 0.5).unwrap();
        assert_relative_eq!(
            eval_life_median_log(&bc, 0.5, Family::SmallestExtremeValue).unwrap(),
            2.0 - 0.5f64.ln() + sigma * (2f64.ln()).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn validate_tp_rules() {
        assert!(validate_tp(&cm_tp(1.0, 0.0, -0.1, -0.5, 0.1)).is_ok());
        assert!(validate_tp(&cm_tp(1.0, 0.0, -0.6, -0.5, 0.1)).is_err()); // |c|<|b|
        assert!(validate_tp(&cm_tp(-1.0, 0.0, -0.1, -0.5, 0.1)).is_err());
        assert!(validate_tp(&nish_tp(0.4, 0.7, 0.1, -1.1, 0.1)).is_ok());
        assert!(validate_tp(&nish_tp(-0.4, 0.7, 0.1, -1.1, 0.1)).is_err());
        let basquin_bad = TpVector::new(RelationshipKind::Basquin, vec![2.0, 1.0, 0.3]);
        assert!(validate_tp(&basquin_bad).is_err());
    }

    #[test]
    fn invert_h_rejects_wrong_mode() {
        let basquin = TpVector::new(RelationshipKind::Basquin, vec![2.0, -1.0, 0.3]);
        assert!(matches!(
            invert_h(&basquin, 1.0),
            Err(RelationshipError::WrongMode { .. })
        ));
    }
}
