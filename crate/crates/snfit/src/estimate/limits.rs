//! Detection of limiting-model situations: extreme USP coordinates, clipped
//! logits, and near-singular Hessian directions concentrated on a single
//! coordinate.

use super::diagnostics::ConvergenceDiag;
use super::FitResult;
use crate::params::RelationshipKind;
use crate::reparam::LimitFlag;
use nalgebra::DMatrix;
use serde::Serialize;

const COORD_LIMIT: f64 = 10.0;
const EIGEN_RIDGE: f64 = -1e-6;
const CONCENTRATION: f64 = 0.9;

/// Advisory that a simpler (limiting) model likely describes the data.
#[derive(Debug, Clone, Serialize)]
pub struct Advisory {
    pub message: String,
    pub coordinate: Option<String>,
    pub suggested: Option<RelationshipKind>,
}

/// Add limit flags for near-zero Hessian eigenvalues whose eigenvector mass
/// sits on one coordinate.
pub(crate) fn append_hessian_ridge_flags(
    diag: &mut ConvergenceDiag,
    eigenvectors: Option<&DMatrix<f64>>,
    names: &[&str],
) {
    let Some(vectors) = eigenvectors else {
        return;
    };
    for (idx, &ev) in diag.hessian_eigenvalues.iter().enumerate() {
        if ev <= EIGEN_RIDGE {
            continue;
        }
        let col = vectors.column(idx);
        let norm2: f64 = col.iter().map(|v| v * v).sum();
        if norm2 <= 0.0 {
            continue;
        }
        let (max_i, max_mass) = col
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v * v / norm2))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if max_mass > CONCENTRATION {
            diag.limit_flags.push(LimitFlag {
                coordinate: names[max_i].to_string(),
                direction: 0,
                message: format!(
                    "Hessian eigenvalue {ev:.3e} is not clearly negative and its \
                     eigenvector loads on {}",
                    names[max_i]
                ),
            });
        }
    }
}

fn clip_direction(flags: &[LimitFlag], coordinate: &str) -> Option<i32> {
    flags
        .iter()
        .find(|f| f.coordinate == coordinate && f.direction != 0)
        .map(|f| f.direction)
}

/// Limiting-model advisories for a fit.
pub fn detect_limiting(fit: &FitResult) -> Vec<Advisory> {
    let mut out = Vec::new();
    let usp = &fit.usp_hat;
    let flags = &fit.diagnostics.limit_flags;
    let coord = |name: &str| usp.get(name);

    match fit.spec.relationship {
        RelationshipKind::CoffinManson => {
            let q = coord("qlogisp").unwrap_or(0.0);
            let clip = clip_direction(flags, "qlogisp");
            if q < -COORD_LIMIT || clip == Some(-1) {
                out.push(Advisory {
                    message: format!(
                        "qlogisp = {q:.2} is deep in the zero-elastic-slope limit (b -> 0); \
                         consider the Coffin-Manson zero-elastic-slope model"
                    ),
                    coordinate: Some("qlogisp".into()),
                    suggested: Some(RelationshipKind::CoffinMansonZeroElasticSlope),
                });
            }
            if q > COORD_LIMIT || clip == Some(1) {
                out.push(Advisory {
                    message: format!(
                        "qlogisp = {q:.2} pushes b toward the limit slope; consider the \
                         Basquin model"
                    ),
                    coordinate: Some("qlogisp".into()),
                    suggested: Some(RelationshipKind::Basquin),
                });
            }
            if coord("logDeltaSlopes").unwrap_or(0.0) < -COORD_LIMIT {
                out.push(Advisory {
                    message: "logDeltaSlopes is far negative (c -> limit slope); consider \
                              the Basquin model"
                        .into(),
                    coordinate: Some("logDeltaSlopes".into()),
                    suggested: Some(RelationshipKind::Basquin),
                });
            }
        }
        RelationshipKind::Nishijima => {
            let q = coord("qlogisp").unwrap_or(0.0);
            let clip = clip_direction(flags, "qlogisp");
            if q > COORD_LIMIT || clip == Some(1) {
                out.push(Advisory {
                    message: format!(
                        "qlogisp = {q:.2} is in the rectangular-hyperbola limit; consider \
                         the rectangular-hyperbola model"
                    ),
                    coordinate: Some("qlogisp".into()),
                    suggested: Some(RelationshipKind::RectangularHyperbola),
                });
            }
            if q < -COORD_LIMIT || clip == Some(-1) {
                out.push(Advisory {
                    message: format!(
                        "qlogisp = {q:.2} is in the piecewise-linear limit; the Basquin \
                         model is a plausible alternative when the asymptote sits far \
                         below the data"
                    ),
                    coordinate: Some("qlogisp".into()),
                    suggested: Some(RelationshipKind::Basquin),
                });
            }
        }
        _ => {}
    }

    // Hessian ridge directions flagged during the fit
    for flag in flags {
        if flag.message.contains("eigenvector loads on") {
            out.push(Advisory {
                message: flag.message.clone(),
                coordinate: Some(flag.coordinate.clone()),
                suggested: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn empty_diag(eigen: Vec<f64>) -> ConvergenceDiag {
        ConvergenceDiag {
            grad_norm: 0.0,
            hessian_eigenvalues: eigen,
            converged: false,
            limit_flags: Vec::new(),
        }
    }

    #[test]
    fn ridge_flag_names_concentrated_coordinate() {
        let mut diag = empty_diag(vec![-1e-9, -2.0]);
        // first column (eigenvalue -1e-9) concentrated on coordinate 1
        let vectors = dmatrix![0.05, 0.998; 0.998, -0.05];
        append_hessian_ridge_flags(&mut diag, Some(&vectors), &["a", "qlogisp"]);
        assert_eq!(diag.limit_flags.len(), 1);
        assert_eq!(diag.limit_flags[0].coordinate, "qlogisp");
    }

    #[test]
    fn clearly_negative_eigenvalues_raise_nothing() {
        let mut diag = empty_diag(vec![-0.5, -2.0]);
        let vectors = dmatrix![1.0, 0.0; 0.0, 1.0];
        append_hessian_ridge_flags(&mut diag, Some(&vectors), &["a", "b"]);
        assert!(diag.limit_flags.is_empty());
    }
}
