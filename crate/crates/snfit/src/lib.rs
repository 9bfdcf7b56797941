// Guards of the form `!(x > 0.0)` are used on purpose: unlike `x <= 0.0`
// they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Maximum likelihood fitting of nonlinear S-N fatigue models to
//! right-censored stress/life data, over numerically stable
//! reparameterizations, with estimability diagnostics, profile likelihoods,
//! AIC model comparison, and Bayesian prior/initialization preparation.

pub mod dataset;
pub mod distributions;
pub mod optimize;
mod params;
pub mod relationships;
pub mod reparam;
pub mod special;
pub mod likelihood;
pub mod cli;
pub mod estimate;
pub mod bayesprep;
