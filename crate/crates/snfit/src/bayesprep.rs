//! Default prior construction and MCMC chain initialization. Stops at the
//! boundary of the sampler: output is a JSON document a generic MCMC engine
//! can consume.

use crate::estimate::FitResult;
use crate::params::UspVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// z quantile at 0.995, the parameter-range divisor.
const Z_995: f64 = 2.575_829_303_548_900_4;
/// Wald multiplier defining the initialization hyper-rectangle.
const Z_95: f64 = 1.959_963_984_540_054;
/// Standard-error factors below this reuse the data substantively.
const MIN_FACTOR: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum BayesPrepError {
    #[error("prior dimension must be at least 1")]
    EmptyDimension,
    #[error("fit has not converged; refusing to build priors from it")]
    NotConverged,
    #[error("fit carries no covariance matrix")]
    NoCovariance,
    #[error(
        "factor {0} reuses data substantively (confidence-interval scale); use a factor of 10 or more"
    )]
    FactorTooSmall(f64),
    #[error("reversed range: q995 {q995} must exceed q005 {q005}")]
    ReversedRange { q005: f64, q995: f64 },
    #[error("{requested} chains requested but the hyper-rectangle has only {available} vertices")]
    TooManyChains { requested: usize, available: u128 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Prior {
    Flat,
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatePrior {
    pub name: String,
    pub prior: Prior,
    pub note: String,
}

/// Marginal priors for every USP coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub coordinates: Vec<CoordinatePrior>,
}

/// Flat (uniform over the whole real line) marginals: the default prior for
/// typical S-N data sets.
pub fn flat_priors(names: &[String]) -> Result<PriorSpec, BayesPrepError> {
    if names.is_empty() {
        return Err(BayesPrepError::EmptyDimension);
    }
    Ok(PriorSpec {
        coordinates: names
            .iter()
            .map(|name| CoordinatePrior {
                name: name.clone(),
                prior: Prior::Flat,
                note: "flat over the real line".into(),
            })
            .collect(),
    })
}

/// Weakly informative normal marginals centered at the MLE with standard
/// deviations `factor` times the Wald standard errors. Factors on the
/// confidence-interval scale are rejected.
pub fn weakly_informative_from_fit(
    fit: &FitResult,
    factor: f64,
) -> Result<PriorSpec, BayesPrepError> {
    if factor < MIN_FACTOR {
        return Err(BayesPrepError::FactorTooSmall(factor));
    }
    if !fit.diagnostics.converged {
        return Err(BayesPrepError::NotConverged);
    }
    let se = fit.se_usp().ok_or(BayesPrepError::NoCovariance)?;
    let coordinates = fit
        .usp_hat
        .names()
        .iter()
        .zip(fit.usp_hat.values.iter())
        .zip(se.iter())
        .map(|((name, &mle), &se)| CoordinatePrior {
            name: (*name).to_string(),
            prior: Prior::Normal {
                mean: mle,
                sd: factor * se,
            },
            note: format!(
                "{} ML standard errors around the {}/{} MLE",
                factor,
                fit.spec.relationship.name(),
                fit.spec.family.name()
            ),
        })
        .collect();
    Ok(PriorSpec { coordinates })
}

/// Normal distribution matching stated 0.005 and 0.995 quantiles (the
/// parameter-range method of prior elicitation).
pub fn range_to_normal(q005: f64, q995: f64) -> Result<Prior, BayesPrepError> {
    if !(q995 > q005) {
        return Err(BayesPrepError::ReversedRange { q005, q995 });
    }
    Ok(Prior::Normal {
        mean: 0.5 * (q005 + q995),
        sd: (q995 - q005) / (2.0 * Z_995),
    })
}

/// Chain starting points: vertices of the hyper-rectangle at the endpoints
/// of the 95% Wald intervals, sampled without replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInits {
    pub chains: Vec<UspVector>,
}

/// Sample `n_chains` distinct vertices of the hyper-rectangle
/// [mle_i - 1.96 se_i, mle_i + 1.96 se_i], without replacement.
pub fn sample_vertices(
    mle: &[f64],
    se: &[f64],
    n_chains: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, BayesPrepError> {
    assert_eq!(mle.len(), se.len());
    let k = mle.len();
    if k == 0 {
        return Err(BayesPrepError::EmptyDimension);
    }
    let available: u128 = 1u128 << k.min(127);
    if n_chains as u128 > available {
        return Err(BayesPrepError::TooManyChains {
            requested: n_chains,
            available,
        });
    }
    let mut vertex_ids: Vec<u64> = (0..available as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vertex_ids.shuffle(&mut rng);
    Ok(vertex_ids
        .into_iter()
        .take(n_chains)
        .map(|id| {
            mle.iter()
                .zip(se.iter())
                .enumerate()
                .map(|(i, (&m, &s))| {
                    let sign = if (id >> i) & 1 == 1 { 1.0 } else { -1.0 };
                    m + sign * Z_95 * s
                })
                .collect()
        })
        .collect())
}

pub fn chain_inits(
    fit: &FitResult,
    n_chains: usize,
    seed: u64,
) -> Result<ChainInits, BayesPrepError> {
    if !fit.diagnostics.converged {
        return Err(BayesPrepError::NotConverged);
    }
    let se = fit.se_usp().ok_or(BayesPrepError::NoCovariance)?;
    let chains = sample_vertices(&fit.usp_hat.values, &se, n_chains, seed)?
        .into_iter()
        .map(|values| UspVector::new(fit.spec.relationship, values))
        .collect();
    Ok(ChainInits { chains })
}

/// JSON document handed to the external sampler.
pub fn export_json(priors: &PriorSpec, inits: &ChainInits) -> serde_json::Value {
    serde_json::json!({
        "coordinates": priors.coordinates,
        "inits": inits
            .chains
            .iter()
            .map(|c| c.values.clone())
            .collect::<Vec<_>>(),
    })
}
