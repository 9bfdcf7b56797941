//! Profile relative likelihood over one or two USP coordinates: the
//! estimability diagnostic of choice when a fit sits near a limiting model.

use super::FitResult;
use crate::likelihood::{loglik, ModelSpec};
use crate::optimize;
use crate::params::UspVector;

#[derive(Debug, Clone)]
pub struct ProfileTrace {
    pub coords: Vec<usize>,
    pub coord_names: Vec<String>,
    /// fixed coordinate values per grid point (one entry per coordinate)
    pub grid: Vec<Vec<f64>>,
    /// relative likelihood in [0, 1]; None where the inner fit failed
    pub rel_lik: Vec<Option<f64>>,
    pub refit_usp: Vec<Option<UspVector>>,
    pub loglik_max: f64,
}

/// Maximize the log-likelihood over the free coordinates with the listed
/// coordinates held fixed. Returns the full vector and its log-likelihood.
pub(crate) fn optimize_with_fixed(
    spec: &ModelSpec,
    data: &crate::dataset::SNDataset,
    fixed: &[(usize, f64)],
    start_full: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let k = start_full.len();
    let free: Vec<usize> = (0..k)
        .filter(|i| !fixed.iter().any(|(j, _)| j == i))
        .collect();
    let assemble = |free_vals: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; k];
        for (slot, &i) in free.iter().enumerate() {
            full[i] = free_vals[slot];
        }
        for &(i, v) in fixed {
            full[i] = v;
        }
        full
    };
    if free.is_empty() {
        let full = assemble(&[]);
        let ll = loglik(
            spec,
            &UspVector::new(spec.relationship, full.clone()),
            data,
        )
        .value;
        return ll.is_finite().then_some((full, ll));
    }
    let objective = |free_vals: &[f64]| {
        -loglik(
            spec,
            &UspVector::new(spec.relationship, assemble(free_vals)),
            data,
        )
        .value
    };
    let start: Vec<f64> = free.iter().map(|&i| start_full[i]).collect();
    let stage1 = optimize::nelder_mead(objective, &start, 0.15, 250 * free.len(), 1e-10);
    let tol = 1e-7 * (1.0 + stage1.fx.abs());
    let polish = optimize::bfgs(objective, &stage1.x, 100, tol);
    let best = if polish.fx.is_finite() && polish.fx <= stage1.fx {
        polish
    } else {
        stage1
    };
    best.fx
        .is_finite()
        .then(|| (assemble(&best.x), -best.fx))
}

/// Like `optimize_with_fixed`, but the held coordinate's value is a
/// function of the free coordinates (used when profiling a derived
/// quantity such as a quantile).
pub(crate) fn optimize_with_fixed_transform(
    spec: &ModelSpec,
    data: &crate::dataset::SNDataset,
    subst_idx: usize,
    subst: &dyn Fn(&[f64]) -> Option<f64>,
    start_full: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let k = start_full.len();
    let free: Vec<usize> = (0..k).filter(|&i| i != subst_idx).collect();
    let assemble = |free_vals: &[f64]| -> Option<Vec<f64>> {
        let mut full = vec![0.0; k];
        for (slot, &i) in free.iter().enumerate() {
            full[i] = free_vals[slot];
        }
        full[subst_idx] = subst(&full)?;
        full[subst_idx].is_finite().then_some(full)
    };
    let objective = |free_vals: &[f64]| match assemble(free_vals) {
        Some(full) => {
            -loglik(spec, &UspVector::new(spec.relationship, full), data).value
        }
        None => f64::INFINITY,
    };
    let start: Vec<f64> = free.iter().map(|&i| start_full[i]).collect();
    let stage1 = optimize::nelder_mead(objective, &start, 0.15, 250 * free.len(), 1e-10);
    let tol = 1e-7 * (1.0 + stage1.fx.abs());
    let polish = optimize::bfgs(objective, &stage1.x, 100, tol);
    let best = if polish.fx.is_finite() && polish.fx <= stage1.fx {
        polish
    } else {
        stage1
    };
    if !best.fx.is_finite() {
        return None;
    }
    assemble(&best.x).map(|full| (full, -best.fx))
}

/// Default grid: MLE +- span Wald standard errors, `points` values. Falls
/// back to unit steps when no covariance is available.
pub fn default_profile_grid(fit: &FitResult, coord: usize, points: usize, span: f64) -> Vec<f64> {
    let center = fit.usp_hat.values[coord];
    let se = fit
        .se_usp()
        .map(|se| se[coord])
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(1.0);
    let points = points.max(2);
    (0..points)
        .map(|i| center - span * se + 2.0 * span * se * i as f64 / (points - 1) as f64)
        .collect()
}

/// One-dimensional profile: for each grid value the remaining USPs are
/// re-optimized, warm-starting outward from the grid point nearest the MLE.
pub fn profile_1d(fit: &FitResult, coord: usize, grid: &[f64]) -> ProfileTrace {
    let k = fit.usp_hat.len();
    assert!(coord < k, "coordinate index {coord} out of range");
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].partial_cmp(&grid[b]).unwrap());
    let center_rank = order
        .iter()
        .position(|&i| {
            (grid[i] - fit.usp_hat.values[coord]).abs()
                == order
                    .iter()
                    .map(|&j| (grid[j] - fit.usp_hat.values[coord]).abs())
                    .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(0);

    let mut rel = vec![None; grid.len()];
    let mut refit = vec![None; grid.len()];
    let mut run_leg = |indices: Vec<usize>| {
        let mut warm = fit.usp_hat.values.clone();
        for rank in indices {
            let gi = order[rank];
            match optimize_with_fixed(&fit.spec, &fit.dataset, &[(coord, grid[gi])], &warm) {
                Some((full, ll)) => {
                    warm = full.clone();
                    rel[gi] = Some(((ll - fit.loglik).exp()).clamp(0.0, 1.0));
                    refit[gi] = Some(UspVector::new(fit.spec.relationship, full));
                }
                None => {
                    // leave the entry missing and keep marching
                }
            }
        }
    };
    run_leg((center_rank..grid.len()).collect());
    run_leg((0..center_rank).rev().collect());

    ProfileTrace {
        coords: vec![coord],
        coord_names: vec![fit.usp_hat.names()[coord].to_string()],
        grid: grid.iter().map(|&v| vec![v]).collect(),
        rel_lik: rel,
        refit_usp: refit,
        loglik_max: fit.loglik,
    }
}

/// Two-dimensional profile over the outer product of two axis grids,
/// row-major in `grid2`, warm-started from the nearest computed neighbor.
pub fn profile_2d(
    fit: &FitResult,
    coords: (usize, usize),
    grid1: &[f64],
    grid2: &[f64],
) -> ProfileTrace {
    let (c1, c2) = coords;
    let k = fit.usp_hat.len();
    assert!(c1 < k && c2 < k && c1 != c2, "bad coordinate pair");
    let n1 = grid1.len();
    let n2 = grid2.len();
    let mut rel = vec![None; n1 * n2];
    let mut refit: Vec<Option<UspVector>> = vec![None; n1 * n2];

    let nearest = |values: &[f64], target: f64| -> usize {
        values
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - target)
                    .abs()
                    .partial_cmp(&(b.1 - target).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap()
    };
    let center1 = nearest(grid1, fit.usp_hat.values[c1]);
    let center2 = nearest(grid2, fit.usp_hat.values[c2]);

    // visit rows outward from the center row; within a row, columns outward
    // from the center column
    let row_order: Vec<usize> = outward(n1, center1);
    let col_order: Vec<usize> = outward(n2, center2);
    let mut row_anchor = fit.usp_hat.values.clone();
    for &i in &row_order {
        let mut warm = row_anchor.clone();
        let mut first_in_row = true;
        for &j in &col_order {
            let fixed = [(c1, grid1[i]), (c2, grid2[j])];
            if let Some((full, ll)) =
                optimize_with_fixed(&fit.spec, &fit.dataset, &fixed, &warm)
            {
                warm = full.clone();
                if first_in_row {
                    row_anchor = full.clone();
                    first_in_row = false;
                }
                rel[i * n2 + j] = Some(((ll - fit.loglik).exp()).clamp(0.0, 1.0));
                refit[i * n2 + j] = Some(UspVector::new(fit.spec.relationship, full));
            }
        }
    }

    let mut grid = Vec::with_capacity(n1 * n2);
    for &v1 in grid1 {
        for &v2 in grid2 {
            grid.push(vec![v1, v2]);
        }
    }
    ProfileTrace {
        coords: vec![c1, c2],
        coord_names: vec![
            fit.usp_hat.names()[c1].to_string(),
            fit.usp_hat.names()[c2].to_string(),
        ],
        grid,
        rel_lik: rel,
        refit_usp: refit,
        loglik_max: fit.loglik,
    }
}

/// Index order walking outward from `center`: center, center+1, center-1, ...
fn outward(n: usize, center: usize) -> Vec<usize> {
    let mut out = vec![center.min(n - 1)];
    let mut step = 1usize;
    while out.len() < n {
        if center + step < n {
            out.push(center + step);
        }
        if center >= step {
            out.push(center - step);
        }
        step += 1;
    }
    out.truncate(n);
    out
}
