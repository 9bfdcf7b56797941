//! Convergence diagnostics at a USP point: carefully stepped finite
//! differences for the gradient and Hessian of the log-likelihood, the
//! Hessian eigendecomposition, and the covariance propagation (delta
//! method) to the other parameter views.

use crate::dataset::SNDataset;
use crate::likelihood::{loglik, ModelSpec};
use crate::optimize::CBRT_EPS;
use crate::params::UspVector;
use crate::reparam::LimitFlag;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceDiag {
    pub grad_norm: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub converged: bool,
    pub limit_flags: Vec<LimitFlag>,
}

pub(crate) struct DiagInternals {
    pub diag: ConvergenceDiag,
    pub hessian: Option<DMatrix<f64>>,
    /// columns ordered with the (ascending) eigenvalues
    pub eigenvectors: Option<DMatrix<f64>>,
}

/// Gradient/Hessian/eigen diagnostics of an arbitrary objective; the
/// objective is the log-likelihood in production use.
pub(crate) fn diagnostics_core<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    names: &[&str],
) -> DiagInternals {
    let k = x.len();
    let mut flags: Vec<LimitFlag> = Vec::new();

    // gradient steps h_i = cbrt(eps) * max(|u_i|, 1)
    let mut grad = vec![0.0; k];
    let mut grad_ok = true;
    let mut xp = x.to_vec();
    for i in 0..k {
        let h = CBRT_EPS * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let dn = f(&xp);
        xp[i] = x[i];
        if !(up.is_finite() && dn.is_finite()) {
            flags.push(LimitFlag {
                coordinate: names[i].to_string(),
                direction: if up.is_finite() { -1 } else { 1 },
                message: "non-finite log-likelihood in gradient stencil".into(),
            });
            grad_ok = false;
            continue;
        }
        grad[i] = (up - dn) / (2.0 * h);
    }
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();

    // Hessian with sqrt(h_i)-scaled steps
    let steps: Vec<f64> = (0..k)
        .map(|i| (CBRT_EPS * x[i].abs().max(1.0)).sqrt())
        .collect();
    let f0 = f(x);
    let mut hess = DMatrix::<f64>::zeros(k, k);
    let mut hess_ok = grad_ok && f0.is_finite();
    if hess_ok {
        'outer: for i in 0..k {
            for j in i..k {
                let value = if i == j {
                    let mut xs = x.to_vec();
                    xs[i] = x[i] + steps[i];
                    let up = f(&xs);
                    xs[i] = x[i] - steps[i];
                    let dn = f(&xs);
                    (up - 2.0 * f0 + dn) / (steps[i] * steps[i])
                } else {
                    let mut xs = x.to_vec();
                    let mut corner = |si: f64, sj: f64| {
                        xs[i] = x[i] + si * steps[i];
                        xs[j] = x[j] + sj * steps[j];
                        let v = f(&xs);
                        xs[i] = x[i];
                        xs[j] = x[j];
                        v
                    };
                    (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                        + corner(-1.0, -1.0))
                        / (4.0 * steps[i] * steps[j])
                };
                if !value.is_finite() {
                    flags.push(LimitFlag {
                        coordinate: names[i].to_string(),
                        direction: 0,
                        message: "non-finite log-likelihood in Hessian stencil".into(),
                    });
                    hess_ok = false;
                    break 'outer;
                }
                hess[(i, j)] = value;
                hess[(j, i)] = value;
            }
        }
    }

    let (eigenvalues, eigenvectors, hessian) = if hess_ok {
        let eig = hess.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap()
        });
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::<f64>::zeros(k, k);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        (values, Some(vectors), Some(hess))
    } else {
        (Vec::new(), None, None)
    };

    DiagInternals {
        diag: ConvergenceDiag {
            grad_norm,
            hessian_eigenvalues: eigenvalues,
            converged: false, // the caller decides against its tolerance
            limit_flags: flags,
        },
        hessian,
        eigenvectors,
    }
}

/// Diagnostics of the censored log-likelihood at `usp`. The convergence
/// flag is judged against the gradient tolerance at this point's
/// log-likelihood and requires a negative-definite Hessian.
pub fn diagnostics_at(spec: &ModelSpec, usp: &UspVector, data: &SNDataset) -> ConvergenceDiag {
    let mut diag = diagnostics_internal_for(spec, usp, data).diag;
    let ll = loglik(spec, usp, data).value;
    diag.converged = ll.is_finite()
        && diag.grad_norm < crate::estimate::grad_tolerance(ll)
        && !diag.hessian_eigenvalues.is_empty()
        && diag.hessian_eigenvalues.iter().all(|&e| e < 0.0);
    diag
}

pub(crate) fn diagnostics_internal_for(
    spec: &ModelSpec,
    usp: &UspVector,
    data: &SNDataset,
) -> DiagInternals {
    let f = |values: &[f64]| {
        loglik(
            spec,
            &UspVector::new(spec.relationship, values.to_vec()),
            data,
        )
        .value
    };
    diagnostics_core(f, &usp.values, usp.names())
}

/// Covariance of the USPs: inverse of the negative Hessian, symmetrized.
pub(crate) fn covariance_from_hessian(hessian: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let neg = -hessian.clone();
    let inv = neg.try_inverse()?;
    let sym = (&inv + inv.transpose()) * 0.5;
    if sym.iter().all(|v| v.is_finite()) {
        Some(sym)
    } else {
        None
    }
}

/// Delta method: J * cov * J^T where J is the finite-difference Jacobian of
/// `map` (a USP vector to parameter vector function).
pub(crate) fn delta_method<F>(
    cov: &DMatrix<f64>,
    usp: &[f64],
    out_dim: usize,
    map: F,
) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = usp.len();
    let mut jac = DMatrix::<f64>::zeros(out_dim, k);
    let mut xp = usp.to_vec();
    for i in 0..k {
        let h = CBRT_EPS * usp[i].abs().max(1.0);
        xp[i] = usp[i] + h;
        let up = map(&xp)?;
        xp[i] = usp[i] - h;
        let dn = map(&xp)?;
        xp[i] = usp[i];
        if up.len() != out_dim || dn.len() != out_dim {
            return None;
        }
        for t in 0..out_dim {
            jac[(t, i)] = (up[t] - dn[t]) / (2.0 * h);
        }
    }
    if !jac.iter().all(|v| v.is_finite()) {
        return None;
    }
    let out = &jac * cov * jac.transpose();
    Some((&out + out.transpose()) * 0.5)
}
