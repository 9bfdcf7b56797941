//! Maximum likelihood estimation over the USP coordinates, plus everything
//! that hangs off a fit: covariances in all parameter views, Wald and
//! profile-likelihood inference, AIC comparison, limiting-model detection,
//! residuals, and simulation.

mod band;
mod compare;
mod diagnostics;
mod limits;
mod profile;
mod simulate;

pub use band::{quantile_band, BandPoint};
pub use compare::{compare_grid, LeaderboardRow};
pub use diagnostics::{diagnostics_at, ConvergenceDiag};
pub use limits::{detect_limiting, Advisory};
pub use profile::{default_profile_grid, profile_1d, profile_2d, ProfileTrace};
pub use simulate::simulate;

use crate::dataset::{DataAnchors, ScalingMeta, SNDataset};
use crate::likelihood::{loglik, LikelihoodError, ModelSpec};
use crate::optimize;
use crate::params::{SpVector, TpVector, TpnsVector, UspVector};
use crate::relationships::RelationshipError;
use crate::reparam::{self, ReparamError};
use crate::special::chi2_survival;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("estimability: {0}")]
    Estimability(#[from] ReparamError),
    #[error("optimizer never reached a finite likelihood")]
    NoFiniteLikelihood,
    #[error("fit has not converged: {0}")]
    NotConverged(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Relationship(#[from] RelationshipError),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Extra optimizations from perturbed starting points (kept if better).
    pub restarts: usize,
}

/// Everything a fit produces. Carries the scaled dataset so downstream
/// profiling can re-evaluate the likelihood.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub usp_hat: UspVector,
    pub sp_hat: SpVector,
    pub tp_hat: TpVector,
    pub tpns_hat: TpnsVector,
    pub loglik: f64,
    pub aic: f64,
    pub cov_usp: Option<DMatrix<f64>>,
    pub cov_tp: Option<DMatrix<f64>>,
    pub cov_tpns: Option<DMatrix<f64>>,
    pub diagnostics: ConvergenceDiag,
    pub dataset: SNDataset,
    pub restarts: usize,
}

impl FitResult {
    pub fn scaling(&self) -> &ScalingMeta {
        &self.dataset.scaling
    }

    pub fn anchors(&self) -> &DataAnchors {
        &self.dataset.anchors
    }

    pub fn n_parms(&self) -> usize {
        self.usp_hat.len()
    }

    pub fn se_usp(&self) -> Option<Vec<f64>> {
        self.cov_usp.as_ref().map(se_from_cov)
    }

    pub fn se_tp(&self) -> Option<Vec<f64>> {
        self.cov_tp.as_ref().map(se_from_cov)
    }

    pub fn se_tpns(&self) -> Option<Vec<f64>> {
        self.cov_tpns.as_ref().map(se_from_cov)
    }
}

fn se_from_cov(cov: &DMatrix<f64>) -> Vec<f64> {
    (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
}

/// AIC = 2k - 2 loglik.
pub fn aic(k: usize, loglik: f64) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Gradient-norm tolerance the convergence flag is judged against.
pub fn grad_tolerance(loglik: f64) -> f64 {
    1e-4 * (1.0 + loglik.abs())
}

/// Deterministic +-2 offset pattern for multistart perturbations.
fn restart_offset(r: usize, k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| {
            if ((r + 1) >> (j % usize::BITS as usize)) & 1 == 1 {
                2.0
            } else {
                -2.0
            }
        })
        .collect()
}

/// Fit `spec` to `data` by maximum likelihood: derivative-free simplex from
/// the initial values, then a quasi-Newton polish, then diagnostics,
/// covariances, and the parameter-view translations.
pub fn fit_ml(spec: &ModelSpec, data: &SNDataset, opts: &FitOptions) -> Result<FitResult, FitError> {
    let (init, mut flags) = reparam::initial_usp(spec.relationship, data, spec.family)?;
    let k = init.len();
    let objective = |values: &[f64]| {
        -loglik(
            spec,
            &UspVector::new(spec.relationship, values.to_vec()),
            data,
        )
        .value
    };

    let run_from = |start: &[f64]| -> optimize::MinimizeResult {
        let stage1 = optimize::nelder_mead(objective, start, 0.25, 500 * k, 1e-10);
        let tol = 1e-6 * (1.0 + stage1.fx.abs());
        let polish = optimize::bfgs(objective, &stage1.x, 200, tol);
        if polish.fx.is_finite() && polish.fx <= stage1.fx {
            polish
        } else {
            stage1
        }
    };

    let mut best = run_from(&init.values);
    for r in 0..opts.restarts {
        let offset = restart_offset(r, k);
        let start: Vec<f64> = init
            .values
            .iter()
            .zip(&offset)
            .map(|(v, o)| v + o)
            .collect();
        let cand = run_from(&start);
        if cand.fx < best.fx {
            best = cand;
        }
    }
    if !best.fx.is_finite() {
        return Err(FitError::NoFiniteLikelihood);
    }
    let usp_hat = UspVector::new(spec.relationship, best.x.clone());
    let ll = -best.fx;

    let internals = diagnostics::diagnostics_internal_for(spec, &usp_hat, data);
    let mut diag = internals.diag;
    diag.limit_flags.append(&mut flags);
    limits::append_hessian_ridge_flags(
        &mut diag,
        internals.eigenvectors.as_ref(),
        usp_hat.names(),
    );
    diag.converged = diag.grad_norm < grad_tolerance(ll)
        && !diag.hessian_eigenvalues.is_empty()
        && diag.hessian_eigenvalues.iter().all(|&e| e < 0.0);

    let cov_usp = internals
        .hessian
        .as_ref()
        .and_then(diagnostics::covariance_from_hessian);

    let ctx = data.anchors;
    let family = spec.family;
    let tp_hat = reparam::usp_to_tp(&usp_hat, &ctx, family)
        .map_err(|e| FitError::Invalid(format!("MLE does not convert to TPs: {e}")))?;
    let sp_hat = reparam::usp_to_sp(&usp_hat, &ctx, family)
        .map_err(|e| FitError::Invalid(format!("MLE does not convert to SPs: {e}")))?;
    let tpns_hat = reparam::unscale_tp(&tp_hat, &data.scaling);

    let tp_dim = tp_hat.len();
    let tp_map = |values: &[f64]| -> Option<Vec<f64>> {
        reparam::usp_to_tp(
            &UspVector::new(spec.relationship, values.to_vec()),
            &ctx,
            family,
        )
        .ok()
        .map(|tp| tp.values)
    };
    let tpns_map = |values: &[f64]| -> Option<Vec<f64>> {
        reparam::usp_to_tp(
            &UspVector::new(spec.relationship, values.to_vec()),
            &ctx,
            family,
        )
        .ok()
        .map(|tp| reparam::unscale_tp(&tp, &data.scaling).values)
    };
    let cov_tp = cov_usp
        .as_ref()
        .and_then(|c| diagnostics::delta_method(c, &best.x, tp_dim, tp_map));
    let cov_tpns = cov_usp
        .as_ref()
        .and_then(|c| diagnostics::delta_method(c, &best.x, tp_dim, tpns_map));

    Ok(FitResult {
        spec: *spec,
        usp_hat,
        sp_hat,
        tp_hat,
        tpns_hat,
        loglik: ll,
        aic: aic(k, ll),
        cov_usp,
        cov_tp,
        cov_tpns,
        diagnostics: diag,
        dataset: data.clone(),
        restarts: opts.restarts,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LrTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood-ratio test of a nested model against the full model it is a
/// limiting case of.
pub fn lr_test(full: &FitResult, nested: &FitResult) -> Result<LrTestResult, FitError> {
    if nested.n_parms() >= full.n_parms() {
        return Err(FitError::Invalid(format!(
            "nested model has {} parameters, full model {}; nesting direction reversed",
            nested.n_parms(),
            full.n_parms()
        )));
    }
    if full.spec.family != nested.spec.family {
        return Err(FitError::Invalid(
            "likelihood-ratio test requires the same distribution family".into(),
        ));
    }
    let statistic = (2.0 * (full.loglik - nested.loglik)).max(0.0);
    let df = full.n_parms() - nested.n_parms();
    Ok(LrTestResult {
        statistic,
        df,
        p_value: chi2_survival(statistic, df as u64),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Residual {
    pub z: f64,
    pub censored: bool,
}

/// Standardized residuals of a converged fit.
pub fn residuals(fit: &FitResult, data: &SNDataset) -> Result<Vec<Residual>, FitError> {
    if !fit.diagnostics.converged {
        return Err(FitError::NotConverged(
            "residual analysis needs a converged fit".into(),
        ));
    }
    let zs = crate::likelihood::standardized_residuals(&fit.tp_hat, data)?;
    Ok(zs
        .into_iter()
        .zip(&data.observations)
        .map(|(z, o)| Residual {
            z,
            censored: !o.status.is_failure(),
        })
        .collect())
}

// --- JSON form of a fit ------------------------------------------------

fn mat_to_json(m: &Option<DMatrix<f64>>) -> serde_json::Value {
    match m {
        None => serde_json::Value::Null,
        Some(m) => serde_json::json!({
            "dim": m.nrows(),
            "data": m.as_slice().to_vec(), // column-major == row-major: symmetric
        }),
    }
}

fn mat_from_json(v: &serde_json::Value) -> Result<Option<DMatrix<f64>>, String> {
    if v.is_null() {
        return Ok(None);
    }
    let dim = v["dim"].as_u64().ok_or("covariance missing dim")? as usize;
    let data: Vec<f64> = v["data"]
        .as_array()
        .ok_or("covariance missing data")?
        .iter()
        .map(|x| x.as_f64().ok_or("non-numeric covariance entry"))
        .collect::<Result<_, _>>()?;
    if data.len() != dim * dim {
        return Err("covariance size mismatch".into());
    }
    Ok(Some(DMatrix::from_row_slice(dim, dim, &data)))
}

impl FitResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": {
                "relationship": self.spec.relationship.name(),
                "family": self.spec.family.name(),
                "mode": self.spec.mode().label(),
            },
            "n_parms": self.n_parms(),
            "loglik": self.loglik,
            "aic": self.aic,
            "usp": self.usp_hat,
            "sp": self.sp_hat,
            "tp": self.tp_hat,
            "tpns": self.tpns_hat,
            "cov_usp": mat_to_json(&self.cov_usp),
            "cov_tp": mat_to_json(&self.cov_tp),
            "cov_tpns": mat_to_json(&self.cov_tpns),
            "diagnostics": self.diagnostics,
            "anchors": self.dataset.anchors,
            "dataset": crate::dataset::echo_json(&self.dataset),
            "metadata": {
                "basquin_centering": "all-observations",
                "band_calibration": "chi-square-1df",
                "restarts": self.restarts,
            },
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<FitResult, String> {
        let relationship = crate::params::RelationshipKind::parse(
            v["spec"]["relationship"].as_str().ok_or("missing relationship")?,
        )
        .ok_or("unknown relationship")?;
        let family = crate::distributions::Family::parse(
            v["spec"]["family"].as_str().ok_or("missing family")?,
        )
        .ok_or("unknown family")?;
        let spec = ModelSpec::new(relationship, family);
        let parse = |key: &str| -> Result<serde_json::Value, String> {
            let val = &v[key];
            if val.is_null() {
                Err(format!("missing field {key}"))
            } else {
                Ok(val.clone())
            }
        };
        let usp_hat: UspVector =
            serde_json::from_value(parse("usp")?).map_err(|e| e.to_string())?;
        let sp_hat: SpVector = serde_json::from_value(parse("sp")?).map_err(|e| e.to_string())?;
        let tp_hat: TpVector = serde_json::from_value(parse("tp")?).map_err(|e| e.to_string())?;
        let tpns_hat: TpnsVector =
            serde_json::from_value(parse("tpns")?).map_err(|e| e.to_string())?;
        let diagnostics: ConvergenceDiag =
            serde_json::from_value(parse("diagnostics")?).map_err(|e| e.to_string())?;
        let scaling: ScalingMeta =
            serde_json::from_value(v["dataset"]["scaling"].clone()).map_err(|e| e.to_string())?;
        let anchors: DataAnchors =
            serde_json::from_value(parse("anchors")?).map_err(|e| e.to_string())?;
        let observations: Vec<crate::dataset::Observation> =
            serde_json::from_value(v["dataset"]["observations"].clone())
                .map_err(|e| e.to_string())?;
        let loglik = v["loglik"].as_f64().ok_or("missing loglik")?;
        let aic_value = v["aic"].as_f64().ok_or("missing aic")?;
        Ok(FitResult {
            spec,
            usp_hat,
            sp_hat,
            tp_hat,
            tpns_hat,
            loglik,
            aic: aic_value,
            cov_usp: mat_from_json(&v["cov_usp"])?,
            cov_tp: mat_from_json(&v["cov_tp"])?,
            cov_tpns: mat_from_json(&v["cov_tpns"])?,
            diagnostics,
            dataset: SNDataset {
                observations,
                scaling,
                anchors,
            },
            restarts: v["metadata"]["restarts"].as_u64().unwrap_or(0) as usize,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::scale;
    use crate::distributions::Family;
    use crate::params::RelationshipKind;
    use approx::assert_relative_eq;

    pub(crate) fn basquin_lognormal_data(n: usize, seed: u64) -> SNDataset {
        let tp = TpVector::new(RelationshipKind::Basquin, vec![12.0, -3.0, 0.4]);
        let stresses: Vec<f64> = (0..n).map(|i| 80.0 + 60.0 * (i % 8) as f64 / 7.0).collect();
        let spec = ModelSpec::new(RelationshipKind::Basquin, Family::Normal);
        let raw = simulate(&spec, &tp, &stresses, 1e9, seed).unwrap();
        scale(&raw).unwrap()
    }

    #[test]
    fn aic_identity_matches_table_arithmetic() {
        assert_relative_eq!(aic(5, 1276.6), -2543.2, epsilon = 1e-9);
        assert!((aic(4, 45.8) - (-83.7)).abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn basquin_fit_recovers_generator() {
        let data = basquin_lognormal_data(200, 42);
        let spec = ModelSpec::new(RelationshipKind::Basquin, Family::Normal);
        let fit = fit_ml(&spec, &data, &FitOptions::default()).unwrap();
        assert!(fit.diagnostics.converged, "{:?}", fit.diagnostics);
        let se = fit.se_tpns().expect("covariance available");
        let truth = [12.0, -3.0, 0.4];
        for (i, t) in truth.iter().enumerate() {
            let est = fit.tpns_hat.values[i];
            assert!(
                (est - t).abs() < 3.0 * se[i],
                "parameter {i}: {est} vs {t} (se {})",
                se[i]
            );
        }
        // AIC identity holds exactly
        assert_relative_eq!(fit.aic, aic(3, fit.loglik), epsilon = 1e-12);
        // Hessian eigenvalues all negative at the optimum
        assert!(fit.diagnostics.hessian_eigenvalues.iter().all(|&e| e < 0.0));
        assert!(fit.diagnostics.grad_norm < grad_tolerance(fit.loglik));
    }

    #[test]
    fn lr_test_basics() {
        let data = basquin_lognormal_data(60, 7);
        let full_spec = ModelSpec::new(RelationshipKind::CoffinManson, Family::Normal);
        let nested_spec = ModelSpec::new(
            RelationshipKind::CoffinMansonZeroElasticSlope,
            Family::Normal,
        );
        let full = fit_ml(&full_spec, &data, &FitOptions::default()).unwrap();
        let nested = fit_ml(&nested_spec, &data, &FitOptions::default()).unwrap();
        let out = lr_test(&full, &nested).unwrap();
        assert_eq!(out.df, 1);
        assert!(out.statistic >= 0.0);
        assert!(out.p_value >= 0.0 && out.p_value <= 1.0);
        // reversed direction errors
        assert!(lr_test(&nested, &full).is_err());
        // identical loglik boundary: statistic 0, p = 1
        let mut same = nested.clone();
        same.loglik = full.loglik;
        let out = lr_test(&full, &same).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn chi2_95th_percentile_p_value() {
        let stat = 3.841_458_820_694_124;
        assert_relative_eq!(chi2_survival(stat, 1), 0.05, max_relative = 1e-9);
    }

    #[test]
    fn residuals_look_standard_on_simulated_data() {
        let data = basquin_lognormal_data(150, 11);
        let spec = ModelSpec::new(RelationshipKind::Basquin, Family::Normal);
        let fit = fit_ml(&spec, &data, &FitOptions::default()).unwrap();
        let res = residuals(&fit, &data).unwrap();
        assert_eq!(res.len(), data.len());
        let n = res.len() as f64;
        let mean = res.iter().map(|r| r.z).sum::<f64>() / n;
        let var = res.iter().map(|r| (r.z - mean) * (r.z - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
        assert!((0.5..1.5).contains(&var), "variance {var}");
    }

    #[test]
    fn fit_json_round_trip() {
        let data = basquin_lognormal_data(40, 3);
        let spec = ModelSpec::new(RelationshipKind::Basquin, Family::Normal);
        let fit = fit_ml(&spec, &data, &FitOptions::default()).unwrap();
        let json = fit.to_json();
        let back = FitResult::from_json(&json).unwrap();
        assert_eq!(back.usp_hat, fit.usp_hat);
        assert_eq!(back.loglik, fit.loglik);
        assert_eq!(back.dataset.observations, fit.dataset.observations);
        let (a, b) = (back.cov_usp.unwrap(), fit.cov_usp.unwrap());
        assert_eq!(a, b);
    }
}
