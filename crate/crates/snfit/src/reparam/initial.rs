//! Initial USP values. These only need to land where the likelihood is
//! nonnegligible: descriptive statistics with censoring ignored, slopes
//! clamped into the valid ordering, probabilities clipped before the logit.

use super::{limit_slope, qlogis_clipped, AnchorContext, LimitFlag, ReparamError};
use crate::dataset::SNDataset;
use crate::distributions::{std_median, Family};
use crate::optimize;
use crate::params::{RelationshipKind, UspVector};
use crate::relationships::boxcox_nu;

const SIGMA_FLOOR: f64 = 1e-4;

struct Ols {
    intercept: f64,
    slope: Option<f64>,
    resid_sd: f64,
    mean_y: f64,
}

/// Least squares of y on x; slope is None when x has no spread.
fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Ols {
            intercept: my,
            slope: None,
            resid_sd: 0.0,
            mean_y: my,
        };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let dof = (x.len().saturating_sub(2)).max(1) as f64;
    Ols {
        intercept,
        slope: Some(slope),
        resid_sd: (sse / dof).sqrt(),
        mean_y: my,
    }
}

/// Failure-stress extremes used as S_Low / S_High starts.
fn failure_stress_extremes(data: &SNDataset) -> Result<(f64, f64), ReparamError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for o in data.observations.iter().filter(|o| o.status.is_failure()) {
        lo = lo.min(o.stress);
        hi = hi.max(o.stress);
    }
    if !(hi > lo) {
        return Err(ReparamError::InsufficientCurvature);
    }
    Ok((lo, hi))
}

/// Split at the (lower) median lifetime, censored observations treated as
/// failures; ties go to the lower-lifetime half.
fn median_lifetime_split(data: &SNDataset) -> (Vec<usize>, Vec<usize>) {
    let mut cycles: Vec<f64> = data.observations.iter().map(|o| o.cycles).collect();
    cycles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = cycles[(cycles.len() - 1) / 2];
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, o) in data.observations.iter().enumerate() {
        if o.cycles <= med {
            lower.push(i);
        } else {
            upper.push(i);
        }
    }
    (lower, upper)
}

fn half_slope(data: &SNDataset, idx: &[usize]) -> Option<f64> {
    let x: Vec<f64> = idx.iter().map(|&i| data.observations[i].cycles.ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| data.observations[i].stress.ln()).collect();
    ols(&x, &y).slope
}

/// Pooled OLS of log stress on log life; the residual standard deviation is
/// a deliberately-high sigma_X start.
fn pooled_sigma_x(data: &SNDataset) -> f64 {
    let x: Vec<f64> = data.observations.iter().map(|o| o.cycles.ln()).collect();
    let y: Vec<f64> = data.observations.iter().map(|o| o.stress.ln()).collect();
    ols(&x, &y).resid_sd.max(SIGMA_FLOOR)
}

/// Clamp the two OLS slopes into c < chi < b < 0.
fn clamp_cm_slopes(b: Option<f64>, c: Option<f64>, chi: f64) -> (f64, f64) {
    match (b, c) {
        (Some(b), Some(c)) if c < chi && chi < b && b < 0.0 => (b, c),
        (Some(b), Some(c)) if b == c => (0.9 * chi, 1.1 * chi),
        _ => (crate::distributions::plogis(1.0) * chi, 1.5 * chi),
    }
}

pub fn check_estimability(
    kind: RelationshipKind,
    data: &SNDataset,
) -> Result<(), ReparamError> {
    let a = &data.anchors;
    match kind {
        RelationshipKind::CoffinManson
        | RelationshipKind::CoffinMansonZeroElasticSlope
        | RelationshipKind::Nishijima
        | RelationshipKind::RectangularHyperbola => {
            if !(a.n_high > a.n_low) {
                return Err(ReparamError::DegenerateAnchors(
                    "single distinct failure time; anchor span is zero".into(),
                ));
            }
            failure_stress_extremes(data)?;
            if matches!(
                kind,
                RelationshipKind::CoffinManson | RelationshipKind::CoffinMansonZeroElasticSlope
            ) {
                let (lower, upper) = median_lifetime_split(data);
                if lower.len() < 2 || upper.len() < 2 {
                    return Err(ReparamError::InsufficientFailures);
                }
            }
            Ok(())
        }
        RelationshipKind::Basquin => {
            if !(a.s_high_all > data.observations.iter().map(|o| o.stress).fold(f64::INFINITY, f64::min)) {
                return Err(ReparamError::InsufficientCurvature);
            }
            Ok(())
        }
        RelationshipKind::BoxCoxLoglinearSigma => {
            if data.len() < 5 {
                return Err(ReparamError::NotEnoughData(
                    "Box-Cox initials need at least 5 observations".into(),
                ));
            }
            if !(a.s_high_all > a.s_low_fail) {
                return Err(ReparamError::InsufficientCurvature);
            }
            let (lower, upper) = median_stress_split(data);
            if lower.len() < 2 || upper.len() < 2 {
                return Err(ReparamError::NotEnoughData(
                    "fewer than 2 observations in a stress half".into(),
                ));
            }
            Ok(())
        }
    }
}

pub fn initial_usp(
    kind: RelationshipKind,
    data: &SNDataset,
    family: Family,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    check_estimability(kind, data)?;
    let ctx = data.anchors;
    match kind {
        RelationshipKind::CoffinManson => cm_initial(data, &ctx),
        RelationshipKind::CoffinMansonZeroElasticSlope => cmzes_initial(data, &ctx),
        RelationshipKind::Nishijima => nishijima_initial(data, &ctx, false),
        RelationshipKind::RectangularHyperbola => nishijima_initial(data, &ctx, true),
        RelationshipKind::Basquin => basquin_initial(data),
        RelationshipKind::BoxCoxLoglinearSigma => boxcox_initial(data, &ctx, family),
    }
}

fn cm_initial(
    data: &SNDataset,
    ctx: &AnchorContext,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    let (s_low, s_high) = failure_stress_extremes(data)?;
    let chi = limit_slope(ctx, s_low, s_high)?;
    let (lower, upper) = median_lifetime_split(data);
    let (b, c) = clamp_cm_slopes(half_slope(data, &upper), half_slope(data, &lower), chi);
    let sigma_x = pooled_sigma_x(data);
    let mut flags = Vec::new();
    let (q, flag) = qlogis_clipped(b / chi, "qlogisp");
    flags.extend(flag);
    let usp = UspVector::new(
        RelationshipKind::CoffinManson,
        vec![
            s_low.ln(),
            (s_high.ln() - s_low.ln()).ln(),
            q,
            (chi - c).ln(),
            sigma_x.ln(),
        ],
    );
    Ok((usp, flags))
}

fn cmzes_initial(
    data: &SNDataset,
    ctx: &AnchorContext,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    let (s_low, s_high) = failure_stress_extremes(data)?;
    let chi = limit_slope(ctx, s_low, s_high)?;
    let (lower, _) = median_lifetime_split(data);
    let c = match half_slope(data, &lower) {
        Some(c) if c < chi => c,
        _ => 1.5 * chi,
    };
    let sigma_x = pooled_sigma_x(data);
    let usp = UspVector::new(
        RelationshipKind::CoffinMansonZeroElasticSlope,
        vec![
            s_low.ln(),
            (s_high.ln() - s_low.ln()).ln(),
            (chi - c).ln(),
            sigma_x.ln(),
        ],
    );
    Ok((usp, Vec::new()))
}

fn nishijima_initial(
    data: &SNDataset,
    ctx: &AnchorContext,
    recthyp: bool,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    let (s_low, s_high) = failure_stress_extremes(data)?;
    let _ = limit_slope(ctx, s_low, s_high)?; // anchors must be non-degenerate
    let sigma_x = pooled_sigma_x(data);
    let w = s_high.ln() - s_low.ln();
    // asymptote 10% of the log-stress span below S_Low; the mid stress at
    // the midpoint of the two limiting references makes qlogisp start at 0
    let usp = if recthyp {
        UspVector::new(
            RelationshipKind::RectangularHyperbola,
            vec![s_low.ln(), w.ln(), (0.1 * w).ln(), sigma_x.ln()],
        )
    } else {
        UspVector::new(
            RelationshipKind::Nishijima,
            vec![s_low.ln(), w.ln(), 0.0, (0.1 * w).ln(), sigma_x.ln()],
        )
    };
    Ok((usp, Vec::new()))
}

fn basquin_initial(data: &SNDataset) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    let x: Vec<f64> = data.observations.iter().map(|o| o.stress.ln()).collect();
    let y: Vec<f64> = data.observations.iter().map(|o| o.cycles.ln()).collect();
    let fit = ols(&x, &y);
    let Some(slope) = fit.slope else {
        return Err(ReparamError::InsufficientCurvature);
    };
    let beta1 = slope.min(-1e-3);
    let sigma = fit.resid_sd.max(SIGMA_FLOOR);
    // the OLS fitted value at the mean log stress is the mean log life
    let usp = UspVector::new(
        RelationshipKind::Basquin,
        vec![fit.mean_y, (-beta1).ln(), sigma.ln()],
    );
    Ok((usp, Vec::new()))
}

/// Split at the median stress, ties to the lower-stress half.
fn median_stress_split(data: &SNDataset) -> (Vec<usize>, Vec<usize>) {
    let mut stresses: Vec<f64> = data.observations.iter().map(|o| o.stress).collect();
    stresses.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = stresses[(stresses.len() - 1) / 2];
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, o) in data.observations.iter().enumerate() {
        if o.stress <= med {
            lower.push(i);
        } else {
            upper.push(i);
        }
    }
    (lower, upper)
}

/// ML fit of a single location-scale distribution to the log lives of one
/// stress half (censoring already ignored at this stage).
fn half_ml_sigma(data: &SNDataset, idx: &[usize], family: Family) -> f64 {
    let xs: Vec<f64> = idx.iter().map(|&i| data.observations[i].cycles.ln()).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt().max(SIGMA_FLOOR);
    if family == Family::Normal {
        return sd;
    }
    let neg_loglik = |p: &[f64]| -> f64 {
        let (mu, sigma) = (p[0], p[1].exp());
        -xs.iter()
            .map(|x| crate::distributions::std_log_pdf(family, (x - mu) / sigma) - p[1])
            .sum::<f64>()
    };
    let r = optimize::nelder_mead(neg_loglik, &[mean, sd.ln()], 0.2, 400, 1e-12);
    r.x[1].exp().max(SIGMA_FLOOR)
}

fn boxcox_initial(
    data: &SNDataset,
    ctx: &AnchorContext,
    family: Family,
) -> Result<(UspVector, Vec<LimitFlag>), ReparamError> {
    let ln_s: Vec<f64> = data.observations.iter().map(|o| o.stress.ln()).collect();
    let ln_n: Vec<f64> = data.observations.iter().map(|o| o.cycles.ln()).collect();
    let straight = ols(&ln_s, &ln_n);
    if straight.slope.is_none() {
        return Err(ReparamError::InsufficientCurvature);
    }

    // 1-D search over lambda with the linear coefficients profiled out by
    // OLS at each candidate
    let sse_at = |lambda: f64| -> (f64, Ols) {
        let nu: Vec<f64> = data
            .observations
            .iter()
            .map(|o| boxcox_nu(o.stress, lambda))
            .collect();
        let fit = ols(&nu, &ln_n);
        let sse = match fit.slope {
            Some(slope) => nu
                .iter()
                .zip(&ln_n)
                .map(|(x, y)| {
                    let r = y - fit.intercept - slope * x;
                    r * r
                })
                .sum::<f64>(),
            None => f64::INFINITY,
        };
        (sse, fit)
    };
    let (sse0, fit0) = sse_at(0.0);
    let (mut lo, mut hi) = (-5.0, 3.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = sse_at(x1).0;
    let mut f2 = sse_at(x2).0;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = sse_at(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = sse_at(x2).0;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    let (sse_star, fit_star) = sse_at(lambda_star);
    // fall back to the log transform when the search did not improve
    let (lambda, fit) = if sse_star.is_finite() && sse_star < sse0 {
        (lambda_star, fit_star)
    } else {
        (0.0, fit0)
    };
    let (beta0, beta1) = (fit.intercept, fit.slope.unwrap());

    let (lower, upper) = median_stress_split(data);
    let sigma_low = half_ml_sigma(data, &upper, family); // highest stresses
    let sigma_high = half_ml_sigma(data, &lower, family); // lowest stresses
    let z50 = std_median(family);
    let lt_low = beta0 + beta1 * boxcox_nu(ctx.s_high_all, lambda) + z50 * sigma_low;
    let lt_high = beta0 + beta1 * boxcox_nu(ctx.s_low_fail, lambda) + z50 * sigma_high;
    let usp = UspVector::new(
        RelationshipKind::BoxCoxLoglinearSigma,
        vec![sigma_low.ln(), sigma_high.ln(), lambda, lt_low, lt_high],
    );
    Ok((usp, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{scale, Observation, Status};
    use approx::assert_relative_eq;

    fn obs(stress: f64, cycles: f64) -> Observation {
        Observation::new(stress, cycles, Status::Failure)
    }

    fn linear_dataset() -> SNDataset {
        // log-linear with slope -2 in life-on-stress terms
        let rows: Vec<Observation> = (0..12)
            .map(|i| {
                let s = 1.0 + i as f64 * 0.2;
                obs(s, 1e6 * s.powf(-2.0) * (1.0 + 0.01 * (i % 3) as f64))
            })
            .collect();
        scale(&rows).unwrap()
    }

    #[test]
    fn three_observations_fail_the_split() {
        let data = scale(&[obs(1.0, 10.0), obs(2.0, 20.0), obs(3.0, 30.0)]).unwrap();
        let err = initial_usp(RelationshipKind::CoffinManson, &data, Family::Normal).unwrap_err();
        assert_eq!(err.to_string(), "insufficient failures for slope split");
    }

    #[test]
    fn single_stress_level_is_not_estimable() {
        let rows: Vec<Observation> = (0..6).map(|i| obs(5.0, 100.0 * (i + 1) as f64)).collect();
        let data = scale(&rows).unwrap();
        let err = initial_usp(RelationshipKind::CoffinManson, &data, Family::Normal).unwrap_err();
        assert_eq!(err.to_string(), "insufficient curvature information");
    }

    #[test]
    fn equal_slopes_clamp_symmetrically() {
        let chi = -0.5;
        let (b, c) = clamp_cm_slopes(Some(-0.3), Some(-0.3), chi);
        assert_relative_eq!(b, 0.9 * chi, max_relative = 1e-12);
        assert_relative_eq!(c, 1.1 * chi, max_relative = 1e-12);
        // violating but unequal slopes take the plogis(1) split
        let (b, c) = clamp_cm_slopes(Some(0.1), Some(-0.2), chi);
        assert_relative_eq!(b, crate::distributions::plogis(1.0) * chi, max_relative = 1e-12);
        assert_relative_eq!(c, 1.5 * chi, max_relative = 1e-12);
        // valid slopes pass through
        let (b, c) = clamp_cm_slopes(Some(-0.2), Some(-0.9), chi);
        assert_eq!((b, c), (-0.2, -0.9));
    }

    #[test]
    fn cm_initials_are_finite_and_in_region() {
        let data = linear_dataset();
        let (usp, _) = initial_usp(RelationshipKind::CoffinManson, &data, Family::Normal).unwrap();
        assert!(usp.all_finite());
        let tp = crate::reparam::usp_to_tp(&usp, &data.anchors, Family::Normal).unwrap();
        crate::relationships::validate_tp(&tp).unwrap();
    }

    #[test]
    fn nishijima_initials_start_qlogisp_at_zero() {
        let data = linear_dataset();
        let (usp, _) =
            initial_usp(RelationshipKind::Nishijima, &data, Family::Normal).unwrap();
        assert_eq!(usp.get("qlogisp"), Some(0.0));
        // E sits below log S_Low by 10% of the log-stress span
        let (s_low, s_high) = failure_stress_extremes(&data).unwrap();
        let e = usp.get("logSLow").unwrap() - usp.get("logDeltaSLowE").unwrap().exp();
        assert_relative_eq!(
            e,
            s_low.ln() - 0.1 * (s_high.ln() - s_low.ln()),
            max_relative = 1e-10
        );
    }

    #[test]
    fn basquin_centered_intercept_is_mean_log_life() {
        let data = linear_dataset();
        let (usp, _) = initial_usp(RelationshipKind::Basquin, &data, Family::Normal).unwrap();
        let mean_ln_n: f64 = data
            .observations
            .iter()
            .map(|o| o.cycles.ln())
            .sum::<f64>()
            / data.len() as f64;
        assert_relative_eq!(
            usp.get("logMedianAtCenter").unwrap(),
            mean_ln_n,
            max_relative = 1e-12
        );
    }

    #[test]
    fn boxcox_initials_on_exactly_loglinear_data() {
        // exactly linear in log-log with constant spread: the transform
        // search settles at the log branch and the two sigma halves agree
        let rows: Vec<Observation> = (0..16)
            .map(|i| {
                let s = (i as f64 * 0.12).exp();
                obs(s, 3e5 * s.powf(-2.0))
            })
            .collect();
        let data = scale(&rows).unwrap();
        let (usp, _) =
            initial_usp(RelationshipKind::BoxCoxLoglinearSigma, &data, Family::Normal).unwrap();
        assert!(usp.get("lambda").unwrap().abs() < 0.1, "{usp:?}");
        let dsigma =
            (usp.get("logSigmaLow").unwrap() - usp.get("logSigmaHigh").unwrap()).abs();
        assert!(dsigma < 0.2, "{usp:?}");
    }

    #[test]
    fn boxcox_initials_on_noisy_data_stay_finite() {
        let data = linear_dataset();
        let (usp, _) =
            initial_usp(RelationshipKind::BoxCoxLoglinearSigma, &data, Family::Normal).unwrap();
        assert!(usp.all_finite());
        let tp = crate::reparam::usp_to_tp(&usp, &data.anchors, Family::Normal).unwrap();
        crate::relationships::validate_tp(&tp).unwrap();
    }

    #[test]
    fn boxcox_needs_five_observations() {
        let data = scale(&[
            obs(1.0, 10.0),
            obs(2.0, 20.0),
            obs(3.0, 30.0),
            obs(4.0, 40.0),
        ])
        .unwrap();
        assert!(matches!(
            initial_usp(RelationshipKind::BoxCoxLoglinearSigma, &data, Family::Normal),
            Err(ReparamError::NotEnoughData(_))
        ));
    }

    #[test]
    fn runouts_counted_as_failures_in_initials() {
        let mut rows: Vec<Observation> = (0..10)
            .map(|i| {
                let s = 1.0 + i as f64 * 0.25;
                obs(s, 2e5 * s.powf(-3.0))
            })
            .collect();
        rows.push(Observation::new(0.9, 1e6, Status::Runout));
        let data = scale(&rows).unwrap();
        let (usp, _) = initial_usp(RelationshipKind::Basquin, &data, Family::Normal).unwrap();
        // the runout's log life enters the mean
        let mean_all: f64 = data
            .observations
            .iter()
            .map(|o| o.cycles.ln())
            .sum::<f64>()
            / data.len() as f64;
        assert_relative_eq!(
            usp.get("logMedianAtCenter").unwrap(),
            mean_all,
            max_relative = 1e-12
        );
    }
}
