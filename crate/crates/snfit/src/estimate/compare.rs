//! AIC leaderboard across a relationship x family grid. Cells fit
//! independently (optionally in parallel); failures are captured per row
//! and listed last.

use super::{fit_ml, FitOptions, FitResult};
use crate::dataset::SNDataset;
use crate::distributions::Family;
use crate::likelihood::ModelSpec;
use crate::params::RelationshipKind;
use rayon::prelude::*;

#[derive(Debug)]
pub struct LeaderboardRow {
    pub relationship: RelationshipKind,
    pub family: Family,
    pub n_parms: usize,
    pub neg_loglik: Option<f64>,
    pub aic: Option<f64>,
    pub converged: Option<bool>,
    pub status: String,
    pub fit: Option<FitResult>,
}

impl LeaderboardRow {
    pub fn mode_label(&self) -> &'static str {
        self.relationship.mode().label()
    }
}

/// Fit every relationship/family pair and return rows sorted ascending by
/// AIC, failed fits last with their reason.
pub fn compare_grid(
    data: &SNDataset,
    relationships: &[RelationshipKind],
    families: &[Family],
    opts: &FitOptions,
) -> Vec<LeaderboardRow> {
    let cells: Vec<(RelationshipKind, Family)> = relationships
        .iter()
        .flat_map(|&r| families.iter().map(move |&f| (r, f)))
        .collect();
    let mut rows: Vec<LeaderboardRow> = cells
        .par_iter()
        .map(|&(relationship, family)| {
            let spec = ModelSpec::new(relationship, family);
            match fit_ml(&spec, data, opts) {
                Ok(fit) => LeaderboardRow {
                    relationship,
                    family,
                    n_parms: fit.n_parms(),
                    neg_loglik: Some(-fit.loglik),
                    aic: Some(fit.aic),
                    converged: Some(fit.diagnostics.converged),
                    status: if fit.diagnostics.converged {
                        "ok".into()
                    } else {
                        "ok (convergence flags raised)".into()
                    },
                    fit: Some(fit),
                },
                Err(e) => LeaderboardRow {
                    relationship,
                    family,
                    n_parms: relationship.dim(),
                    neg_loglik: None,
                    aic: None,
                    converged: None,
                    status: format!("failed: {e}"),
                    fit: None,
                },
            }
        })
        .collect();

    rows.sort_by(|a, b| match (a.aic, b.aic) {
        (Some(x), Some(y)) => x
            .partial_cmp(&y)
            .unwrap()
            .then_with(|| a.relationship.name().cmp(b.relationship.name()))
            .then_with(|| a.family.name().cmp(b.family.name())),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a
            .relationship
            .name()
            .cmp(b.relationship.name())
            .then_with(|| a.family.name().cmp(b.family.name())),
    });
    rows
}
