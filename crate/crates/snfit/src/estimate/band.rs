//! Pointwise confidence bands for life quantiles: a Wald interval on the
//! log quantile, and a profile-likelihood interval obtained by rewriting
//! one USP coordinate as an explicit function of the target quantile and
//! re-maximizing over the rest.

use super::profile::optimize_with_fixed_transform;
use super::{FitError, FitResult};
use crate::distributions::{std_median, std_quantile};
use crate::likelihood::quantile_life_tp;
use crate::optimize::CBRT_EPS;
use crate::params::{RelationshipKind, SpecificationMode, UspVector};
use crate::relationships::{boxcox_nu, eval_log_h};
use crate::reparam::usp_to_tp;
use crate::special::norm_quantile;
use serde::Serialize;

/// Search window around the MLE on the log-quantile scale; endpoints not
/// bracketed inside it are reported one-sided.
const SEARCH_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Serialize)]
pub struct BandPoint {
    pub stress: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub wald_lower: f64,
    pub wald_upper: f64,
    /// the profile search hit the span cap without crossing the threshold
    pub lower_open: bool,
    pub upper_open: bool,
}

/// Index of the USP coordinate the target log-quantile replaces.
fn substituted_coordinate(kind: RelationshipKind) -> usize {
    match kind.mode() {
        SpecificationMode::Strength => 0, // logSLow
        SpecificationMode::Life => match kind {
            RelationshipKind::Basquin => 0,           // logMedianAtCenter
            RelationshipKind::BoxCoxLoglinearSigma => 3, // logTLow
            _ => unreachable!(),
        },
    }
}

/// Value of the substituted coordinate making the model's p-quantile at
/// (scaled) stress `se` equal exp(q), given the other coordinates.
fn substitution(
    fit: &FitResult,
    full: &[f64],
    q: f64,
    se: f64,
    zp: f64,
) -> Option<f64> {
    let kind = fit.spec.relationship;
    let ctx = fit.anchors();
    match kind.mode() {
        SpecificationMode::Strength => {
            // log h shifts uniformly with logSLow, so evaluate the curve
            // with logSLow = 0 and solve for the shift
            let mut unit = full.to_vec();
            unit[0] = 0.0;
            let tp = usp_to_tp(
                &UspVector::new(kind, unit),
                ctx,
                fit.spec.family,
            )
            .ok()?;
            let sigma_x = crate::relationships::strength_sigma(&tp)?;
            let log_h_unit = eval_log_h(&tp, q.exp()).ok()?;
            Some(se.ln() - sigma_x * zp - log_h_unit)
        }
        SpecificationMode::Life => match kind {
            RelationshipKind::Basquin => {
                let beta1 = -full[1].exp();
                let sigma = full[2].exp();
                Some(q - beta1 * (se.ln() - ctx.mean_log_stress) - sigma * zp)
            }
            RelationshipKind::BoxCoxLoglinearSigma => {
                let (ls_low, ls_high, lambda, lt_high) =
                    (full[0], full[1], full[2], full[4]);
                let z50 = std_median(fit.spec.family);
                let ln_sl = ctx.s_low_fail.ln();
                let ln_sh = ctx.s_high_all.ln();
                let d_nu = boxcox_nu(ctx.s_low_fail, lambda) - boxcox_nu(ctx.s_high_all, lambda);
                if d_nu == 0.0 {
                    return None;
                }
                let r = (boxcox_nu(se, lambda) - boxcox_nu(ctx.s_high_all, lambda)) / d_nu;
                if (1.0 - r).abs() < 1e-9 {
                    return None; // stress sits on the opposite anchor
                }
                let beta1_sigma = (ls_high - ls_low) / (ln_sl - ln_sh);
                let sigma_se = (ls_low + beta1_sigma * (se.ln() - ln_sh)).exp();
                let d_sigma = ls_high.exp() - ls_low.exp();
                let value = (q - sigma_se * zp - (lt_high - z50 * d_sigma) * r
                    + z50 * ls_low.exp())
                    / (1.0 - r);
                value.is_finite().then_some(value)
            }
            _ => unreachable!(),
        },
    }
}

/// Profile log-likelihood of the log-quantile value `q`.
fn profile_ll(
    fit: &FitResult,
    q: f64,
    se: f64,
    zp: f64,
    warm: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let subst_idx = substituted_coordinate(fit.spec.relationship);
    let subst = |free_full: &[f64]| substitution(fit, free_full, q, se, zp);
    optimize_with_fixed_transform(&fit.spec, &fit.dataset, subst_idx, &subst, warm)
}

/// Scaled log quantile as a function of the USP vector, for the Wald
/// gradient.
fn log_quantile_of(fit: &FitResult, values: &[f64], se: f64, p: f64) -> Option<f64> {
    let tp = usp_to_tp(
        &UspVector::new(fit.spec.relationship, values.to_vec()),
        fit.anchors(),
        fit.spec.family,
    )
    .ok()?;
    quantile_life_tp(&tp, fit.spec.family, se, p)
        .ok()
        .map(f64::ln)
}

fn wald_se(fit: &FitResult, se_stress: f64, p: f64) -> Option<f64> {
    let cov = fit.cov_usp.as_ref()?;
    let x = &fit.usp_hat.values;
    let k = x.len();
    let mut grad = vec![0.0; k];
    let mut xp = x.clone();
    for i in 0..k {
        let h = CBRT_EPS * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = log_quantile_of(fit, &xp, se_stress, p)?;
        xp[i] = x[i] - h;
        let dn = log_quantile_of(fit, &xp, se_stress, p)?;
        xp[i] = x[i];
        grad[i] = (up - dn) / (2.0 * h);
    }
    let mut var = 0.0;
    for i in 0..k {
        for j in 0..k {
            var += grad[i] * cov[(i, j)] * grad[j];
        }
    }
    (var >= 0.0).then(|| var.sqrt())
}

/// One profile endpoint: march outward until the profile drops below the
/// threshold, then bisect. Returns (bound, open) where `open` means the
/// span cap was reached first.
fn profile_endpoint(
    fit: &FitResult,
    q_hat: f64,
    se: f64,
    zp: f64,
    target_ll: f64,
    step0: f64,
    direction: f64,
) -> (f64, bool) {
    let mut warm = fit.usp_hat.values.clone();
    let eval = |q: f64, warm: &mut Vec<f64>| -> f64 {
        match profile_ll(fit, q, se, zp, warm) {
            Some((full, ll)) => {
                *warm = full;
                ll
            }
            None => f64::NEG_INFINITY,
        }
    };
    let mut inside = q_hat;
    let mut step = step0;
    let mut outside = None;
    for _ in 0..60 {
        let cand = inside + direction * step;
        if (cand - q_hat).abs() > SEARCH_SPAN {
            break;
        }
        let ll = eval(cand, &mut warm);
        if ll < target_ll {
            outside = Some(cand);
            break;
        }
        inside = cand;
        step *= 2.0;
    }
    let Some(mut hi) = outside else {
        return (q_hat + direction * SEARCH_SPAN, true);
    };
    let mut lo = inside;
    for _ in 0..40 {
        if (hi - lo).abs() < 1e-4 * step0 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut warm) >= target_ll {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), false)
}

/// Pointwise band for the p-quantile of life over a stress grid in original
/// units; `level` is the two-sided confidence level of both interval kinds.
pub fn quantile_band(
    fit: &FitResult,
    p: f64,
    stresses: &[f64],
    level: f64,
) -> Result<Vec<BandPoint>, FitError> {
    if !fit.diagnostics.converged {
        return Err(FitError::NotConverged(
            "quantile bands need a converged fit".into(),
        ));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(FitError::Invalid(format!(
            "confidence level must be in [0, 1), got {level}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(FitError::Invalid(format!(
            "quantile probability must be in (0, 1), got {p}"
        )));
    }
    let zp = std_quantile(fit.spec.family, p).expect("p checked");
    let s_max = fit.scaling().s_max;
    let n_max = fit.scaling().n_max;
    let mut out = Vec::with_capacity(stresses.len());
    for &stress in stresses {
        if !(stress > 0.0) {
            return Err(FitError::Invalid(format!(
                "stress grid values must be positive, got {stress}"
            )));
        }
        let se_stress = stress / s_max;
        let q_hat = log_quantile_of(fit, &fit.usp_hat.values, se_stress, p).ok_or_else(|| {
            FitError::Invalid(format!(
                "quantile undefined at stress {stress} (outside the curve's range)"
            ))
        })?;
        let se_q = wald_se(fit, se_stress, p);
        let estimate = q_hat.exp() * n_max;

        if level == 0.0 {
            out.push(BandPoint {
                stress,
                estimate,
                lower: estimate,
                upper: estimate,
                wald_lower: estimate,
                wald_upper: estimate,
                lower_open: false,
                upper_open: false,
            });
            continue;
        }
        let z_level = norm_quantile(0.5 * (1.0 + level));
        let (wald_lower, wald_upper) = match se_q {
            Some(se) => (
                (q_hat - z_level * se).exp() * n_max,
                (q_hat + z_level * se).exp() * n_max,
            ),
            None => (f64::NAN, f64::NAN),
        };
        // chi-square(1) calibration: the profile drops by z^2/2 at the
        // interval endpoints
        let target_ll = fit.loglik - 0.5 * z_level * z_level;
        let step0 = se_q.unwrap_or(0.1).max(1e-3);
        let (q_lo, lower_open) =
            profile_endpoint(fit, q_hat, se_stress, zp, target_ll, step0, -1.0);
        let (q_hi, upper_open) =
            profile_endpoint(fit, q_hat, se_stress, zp, target_ll, step0, 1.0);
        out.push(BandPoint {
            stress,
            estimate,
            lower: q_lo.exp() * n_max,
            upper: q_hi.exp() * n_max,
            wald_lower,
            wald_upper,
            lower_open,
            upper_open,
        });
    }
    Ok(out)
}
