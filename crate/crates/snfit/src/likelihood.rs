//! Censored log-likelihood of a model at a USP point, for both
//! specification modes, plus the quantile of the life distribution.
//!
//! Life-specified models standardize log life against the relationship's
//! location/scale; strength-specified models standardize log stress against
//! log h(t) and pick up the chain-rule term from the induced life density.
//! Invalid points evaluate to -inf rather than erroring, so derivative-free
//! searches stay total.

use crate::dataset::SNDataset;
use crate::distributions::{
    std_log_pdf, std_log_survival, std_quantile, Family,
};
use crate::params::{RelationshipKind, SpecificationMode, TpVector, UspVector};
use crate::relationships::{
    dlogh_dlogt, eval_log_h, invert_h, life_location_scale, RelationshipError,
};
use crate::reparam::{usp_to_tp, AnchorContext};
use crate::special::pairwise_sum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-observation terms below this are treated as impossible rather than
/// silently absorbed into the sum.
const TERM_FLOOR: f64 = -1e10;

#[derive(Debug, Error)]
pub enum LikelihoodError {
    #[error("quantile error: {0}")]
    Quantile(String),
    #[error(transparent)]
    Relationship(#[from] RelationshipError),
}

/// Model identity: relationship, distribution family, and the specification
/// mode the relationship fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub relationship: RelationshipKind,
    pub family: Family,
}

impl ModelSpec {
    pub fn new(relationship: RelationshipKind, family: Family) -> ModelSpec {
        ModelSpec {
            relationship,
            family,
        }
    }

    pub fn mode(&self) -> SpecificationMode {
        self.relationship.mode()
    }

    pub fn dim(&self) -> usize {
        self.relationship.dim()
    }
}

/// Log-likelihood value with its per-observation decomposition.
#[derive(Debug, Clone)]
pub struct LogLikValue {
    pub value: f64,
    pub per_observation: Vec<f64>,
    pub valid: bool,
}

impl LogLikValue {
    fn invalid(n: usize) -> LogLikValue {
        LogLikValue {
            value: f64::NEG_INFINITY,
            per_observation: vec![f64::NEG_INFINITY; n],
            valid: false,
        }
    }
}

/// Per-observation log-likelihood terms for a traditional-parameter point.
fn per_observation_terms(
    tp: &TpVector,
    family: Family,
    data: &SNDataset,
) -> Option<Vec<f64>> {
    let mut terms = Vec::with_capacity(data.len());
    match tp.kind.mode() {
        SpecificationMode::Life => {
            for o in &data.observations {
                let (mu, sigma) = life_location_scale(tp, o.stress).ok()?;
                if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
                    return None;
                }
                let z = (o.cycles.ln() - mu) / sigma;
                let term = if o.status.is_failure() {
                    std_log_pdf(family, z) - sigma.ln() - o.cycles.ln()
                } else {
                    std_log_survival(family, z)
                };
                terms.push(term);
            }
        }
        SpecificationMode::Strength => {
            let sigma_x = crate::relationships::strength_sigma(tp)?;
            if !(sigma_x > 0.0) || !sigma_x.is_finite() {
                return None;
            }
            for o in &data.observations {
                let log_h = eval_log_h(tp, o.cycles).ok()?;
                let z = (o.stress.ln() - log_h) / sigma_x;
                let term = if o.status.is_failure() {
                    let slope = dlogh_dlogt(tp, o.cycles).ok()?;
                    if !(slope < 0.0) {
                        return None;
                    }
                    std_log_pdf(family, z) + (-slope).ln() - sigma_x.ln() - o.cycles.ln()
                } else {
                    std_log_survival(family, z)
                };
                terms.push(term);
            }
        }
    }
    Some(terms)
}

/// Censored log-likelihood at a USP point. Any non-finite intermediate, or
/// a per-observation term below the floor, marks the point invalid with
/// value -inf.
pub fn loglik(spec: &ModelSpec, usp: &UspVector, data: &SNDataset) -> LogLikValue {
    debug_assert_eq!(spec.relationship, usp.kind);
    let Ok(tp) = usp_to_tp(usp, &data.anchors, spec.family) else {
        return LogLikValue::invalid(data.len());
    };
    loglik_at_tp(&tp, spec.family, data)
}

/// Censored log-likelihood at a traditional-parameter point.
pub fn loglik_at_tp(tp: &TpVector, family: Family, data: &SNDataset) -> LogLikValue {
    let Some(terms) = per_observation_terms(tp, family, data) else {
        return LogLikValue::invalid(data.len());
    };
    if terms.iter().any(|t| !t.is_finite() || *t < TERM_FLOOR) {
        return LogLikValue::invalid(data.len());
    }
    LogLikValue {
        value: pairwise_sum(&terms),
        per_observation: terms,
        valid: true,
    }
}

/// Standardized residuals (z per the likelihood's standardization).
pub fn standardized_residuals(
    tp: &TpVector,
    data: &SNDataset,
) -> Result<Vec<f64>, RelationshipError> {
    let mut out = Vec::with_capacity(data.len());
    match tp.kind.mode() {
        SpecificationMode::Life => {
            for o in &data.observations {
                let (mu, sigma) = life_location_scale(tp, o.stress)?;
                out.push((o.cycles.ln() - mu) / sigma);
            }
        }
        SpecificationMode::Strength => {
            let sigma_x = crate::relationships::strength_sigma(tp).expect("strength kind");
            for o in &data.observations {
                let log_h = eval_log_h(tp, o.cycles)?;
                out.push((o.stress.ln() - log_h) / sigma_x);
            }
        }
    }
    Ok(out)
}

/// p-quantile of the life distribution at stress `s_e`, in the units the
/// TP is expressed in.
pub fn quantile_life_tp(
    tp: &TpVector,
    family: Family,
    s_e: f64,
    p: f64,
) -> Result<f64, LikelihoodError> {
    let z = std_quantile(family, p).map_err(|e| LikelihoodError::Quantile(e.to_string()))?;
    match tp.kind.mode() {
        SpecificationMode::Life => {
            let (mu, sigma) = life_location_scale(tp, s_e)?;
            Ok((mu + sigma * z).exp())
        }
        SpecificationMode::Strength => {
            let sigma_x = crate::relationships::strength_sigma(tp).expect("strength kind");
            let target = (s_e.ln() - sigma_x * z).exp();
            Ok(invert_h(tp, target)?)
        }
    }
}

/// p-quantile of the life distribution at a USP point.
pub fn quantile_life(
    spec: &ModelSpec,
    usp: &UspVector,
    ctx: &AnchorContext,
    s_e: f64,
    p: f64,
) -> Result<f64, LikelihoodError> {
    let tp = usp_to_tp(usp, ctx, spec.family)
        .map_err(|e| LikelihoodError::Quantile(e.to_string()))?;
    quantile_life_tp(&tp, spec.family, s_e, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{compute_anchors, Observation, ScalingMeta, Status};
    use approx::assert_relative_eq;

    fn dataset(rows: Vec<Observation>) -> SNDataset {
        // anchors are irrelevant for loglik_at_tp; fall back to fixed ones
        // when the rows are all runouts
        let anchors = compute_anchors(&rows).unwrap_or(crate::dataset::DataAnchors {
            n_low: 0.01,
            n_high: 1.0,
            n_mid: 0.1,
            s_low_fail: 0.5,
            s_high_fail: 1.0,
            s_high_all: 1.0,
            mean_log_stress: 0.0,
        });
        SNDataset {
            observations: rows,
            scaling: ScalingMeta::identity(),
            anchors,
        }
    }

    #[test]
    fn single_failure_at_median_normal() {
        // Basquin life model with z = 0 and sigma * t = 1
        let tp = TpVector::new(RelationshipKind::Basquin, vec![0.0, -1.0, 1.0]);
        let data = dataset(vec![Observation::new(1.0, 1.0, Status::Failure)]);
        let ll = loglik_at_tp(&tp, Family::Normal, &data);
        assert!(ll.valid);
        assert_relative_eq!(ll.value, -0.918_938_533_204_672_7, max_relative = 1e-12);
    }

    #[test]
    fn single_runout_at_median_normal() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![0.0, -1.0, 1.0]);
        let data = dataset(vec![Observation::new(1.0, 1.0, Status::Runout)]);
        let ll = loglik_at_tp(&tp, Family::Normal, &data);
        assert_relative_eq!(ll.value, 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn strength_cm_with_zero_plastic_equals_life_basquin() {
        // A_pl = 0 makes the strength model a pure power law, which is the
        // Basquin life model with beta1 = 1/b, sigma_N = sigma_X/|b|
        let (a_el, b, sigma_x) = (2.0f64, -0.25f64, 0.1f64);
        let cm = TpVector::new(
            RelationshipKind::CoffinManson,
            vec![a_el, 0.0, b, -1.0, sigma_x],
        );
        let basquin = TpVector::new(
            RelationshipKind::Basquin,
            vec![-a_el.ln() / b - 2f64.ln(), 1.0 / b, sigma_x / (-b)],
        );
        let rows = vec![
            Observation::new(1.2, 30.0, Status::Failure),
            Observation::new(1.0, 100.0, Status::Failure),
            Observation::new(0.8, 900.0, Status::Failure),
            Observation::new(0.7, 2500.0, Status::Runout),
            Observation::new(0.9, 400.0, Status::Failure),
        ];
        let data = dataset(rows);
        for family in Family::ALL {
            let a = loglik_at_tp(&cm, family, &data);
            let c = loglik_at_tp(&basquin, family, &data);
            assert!(a.valid && c.valid);
            assert_relative_eq!(a.value, c.value, max_relative = 1e-12);
            for (x, y) in a.per_observation.iter().zip(c.per_observation.iter()) {
                assert_relative_eq!(x, y, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_observation_adds_its_term() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![5.0, -2.0, 0.5]);
        let base = vec![
            Observation::new(1.0, 150.0, Status::Failure),
            Observation::new(0.8, 900.0, Status::Runout),
        ];
        let d1 = dataset(base.clone());
        let mut rows = base;
        rows.push(Observation::new(0.8, 900.0, Status::Runout));
        let d2 = dataset(rows);
        let l1 = loglik_at_tp(&tp, Family::SmallestExtremeValue, &d1);
        let l2 = loglik_at_tp(&tp, Family::SmallestExtremeValue, &d2);
        assert_relative_eq!(
            l2.value,
            l1.value + l1.per_observation[1],
            max_relative = 1e-12
        );
    }

    #[test]
    fn reorder_invariance() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![5.0, -2.0, 0.5]);
        let rows = vec![
            Observation::new(1.0, 150.0, Status::Failure),
            Observation::new(0.8, 900.0, Status::Runout),
            Observation::new(0.9, 320.0, Status::Failure),
            Observation::new(0.7, 1800.0, Status::Failure),
        ];
        let mut rev = rows.clone();
        rev.reverse();
        let l1 = loglik_at_tp(&tp, Family::Logistic, &dataset(rows));
        let l2 = loglik_at_tp(&tp, Family::Logistic, &dataset(rev));
        assert!((l1.value - l2.value).abs() < 1e-10);
    }

    #[test]
    fn strength_density_integrates_to_cdf_difference() {
        // numeric integral of the induced life density recovers F_N
        // differences, validating the chain-rule term
        let tp = TpVector::new(
            RelationshipKind::Nishijima,
            vec![0.418, 0.769, 0.123, -1.127, 0.095],
        );
        let family = Family::Normal;
        let sigma_x = 0.095;
        let s_e = 0.6f64;
        let cdf = |t: f64| {
            let z = (s_e.ln() - eval_log_h(&tp, t).unwrap()) / sigma_x;
            crate::distributions::std_cdf(family, z)
        };
        let density = |t: f64| {
            let z = (s_e.ln() - eval_log_h(&tp, t).unwrap()) / sigma_x;
            let slope = dlogh_dlogt(&tp, t).unwrap();
            crate::distributions::std_pdf(family, z) * (-slope) / (sigma_x * t)
        };
        let (t0, t1) = (0.5f64, 0.8f64);
        let n = 4000;
        let h = (t1 - t0) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * density(t0 + i as f64 * h);
        }
        acc *= h;
        assert!((acc - (cdf(t1) - cdf(t0))).abs() < 1e-6, "{acc}");
    }

    #[test]
    fn residuals_vanish_on_exact_fit_data() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![5.0, -2.0, 0.5]);
        let rows: Vec<Observation> = [1.0f64, 1.5, 2.0]
            .iter()
            .map(|&s| {
                Observation::new(s, (5.0 - 2.0 * s.ln()).exp(), Status::Failure)
            })
            .collect();
        let zs = standardized_residuals(&tp, &dataset(rows)).unwrap();
        for z in zs {
            assert!(z.abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn invalid_point_returns_neg_infinity() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![0.0, -1.0, -1.0]);
        let data = dataset(vec![Observation::new(1.0, 1.0, Status::Failure)]);
        let ll = loglik_at_tp(&tp, Family::Normal, &data);
        assert!(!ll.valid);
        assert_eq!(ll.value, f64::NEG_INFINITY);
    }

    #[test]
    fn quantile_median_strength_normal_inverts_curve() {
        let tp = TpVector::new(
            RelationshipKind::Nishijima,
            vec![0.418, 0.769, 0.123, -1.127, 0.095],
        );
        let s_e = eval_log_h(&tp, 0.3).unwrap().exp();
        let t = quantile_life_tp(&tp, Family::Normal, s_e, 0.5).unwrap();
        assert_relative_eq!(t, 0.3, max_relative = 1e-9);
    }

    #[test]
    fn quantile_life_basquin_median() {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![2.0, -1.5, 0.4]);
        let t = quantile_life_tp(&tp, Family::Normal, 0.7, 0.5).unwrap();
        assert_relative_eq!(
            t,
            (2.0 - 1.5 * 0.7f64.ln()).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn quantile_monotone_in_p() {
        let cases = vec![
            TpVector::new(RelationshipKind::Basquin, vec![2.0, -1.5, 0.4]),
            TpVector::new(
                RelationshipKind::Nishijima,
                vec![0.418, 0.769, 0.123, -1.127, 0.095],
            ),
            TpVector::new(
                RelationshipKind::CoffinManson,
                vec![2.0, 30.0, -0.08, -0.6, 0.1],
            ),
        ];
        for tp in cases {
            for family in Family::ALL {
                let s_e = match tp.kind.mode() {
                    SpecificationMode::Life => 0.7,
                    SpecificationMode::Strength => eval_log_h(&tp, 0.2).unwrap().exp(),
                };
                let mut prev = 0.0;
                for i in 1..10 {
                    let p = i as f64 / 10.0;
                    let q = quantile_life_tp(&tp, family, s_e, p).unwrap();
                    assert!(q > prev, "{:?} {family:?} p={p}", tp.kind);
                    prev = q;
                }
            }
        }
    }
}
