//! Derivative-free simplex search and a finite-difference quasi-Newton
//! polish. Both minimize; callers hand in the negative log-likelihood.
//!
//! Objective values of +inf are legal (the likelihood returns -inf at
//! invalid points) and simply rank worst, so the search retreats.

use nalgebra::{DMatrix, DVector};

/// cbrt(f64::EPSILON), the central-difference step scale.
pub const CBRT_EPS: f64 = 6.055_454_452_393_343e-6;

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead with the classic coefficients. Stops when the value spread
/// across the simplex drops below `spread_tol` or the evaluation budget is
/// spent.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    spread_tol: f64,
) -> MinimizeResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut xi = x0.to_vec();
        xi[i] += step * xi[i].abs().max(1.0);
        let fi = eval(&xi, &mut evals);
        simplex.push((xi, fi));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let spread = simplex[n].1 - simplex[0].1;
        if spread.is_finite() && spread < spread_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for j in 0..n {
                centroid[j] += x[j] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let at = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (centroid[j] - worst.0[j]))
                .collect()
        };

        let xr = at(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = at(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = at(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = at(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    for (x, b) in item.0.iter_mut().zip(&best) {
                        *x = b + sigma * (*x - b);
                    }
                    item.1 = eval(&item.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    MinimizeResult {
        x: simplex[0].0.clone(),
        fx: simplex[0].1,
        evals,
        converged,
    }
}

/// Central-difference gradient with per-coordinate steps
/// h_i = cbrt(eps) * max(|x_i|, 1).
pub fn central_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = CBRT_EPS * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let dn = f(&xp);
        xp[i] = x[i];
        g[i] = (up - dn) / (2.0 * h);
    }
    g
}

/// BFGS with backtracking line search on finite-difference gradients.
/// `grad_tol` is an absolute threshold on the gradient norm.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    max_iters: usize,
    grad_tol: f64,
) -> MinimizeResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut x = DVector::from_column_slice(x0);
    let mut fx = {
        evals += 1;
        f(x.as_slice())
    };
    if !fx.is_finite() {
        return MinimizeResult {
            x: x0.to_vec(),
            fx,
            evals,
            converged: false,
        };
    }
    let mut grad = DVector::from_vec(central_gradient(
        |v| {
            evals += 1;
            f(v)
        },
        x.as_slice(),
    ));
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut converged = false;

    for _ in 0..max_iters {
        if !grad.iter().all(|v| v.is_finite()) {
            break;
        }
        if grad.norm() < grad_tol {
            converged = true;
            break;
        }
        let mut dir = -(&h_inv * &grad);
        if dir.dot(&grad) >= 0.0 {
            // not a descent direction; reset curvature
            h_inv = DMatrix::identity(n, n);
            dir = -grad.clone();
        }

        // backtracking Armijo search
        let g_dot_d = grad.dot(&dir);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &x + &dir * t;
            evals += 1;
            let fc = f(cand.as_slice());
            if fc.is_finite() && fc <= fx + 1e-4 * t * g_dot_d {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };

        let g_new = DVector::from_vec(central_gradient(
            |v| {
                evals += 1;
                f(v)
            },
            x_new.as_slice(),
        ));
        let s = &x_new - &x;
        let y = &g_new - &grad;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            // BFGS inverse update
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            let coef = (sy + yhy) / (sy * sy);
            h_inv = h_inv.clone() + &s * s.transpose() * coef
                - (&hy * s.transpose() + &s * hy.transpose()) / sy;
        }
        let step_size = s.norm();
        x = x_new;
        fx = f_new;
        grad = g_new;
        if step_size < 1e-14 {
            converged = grad.norm() < grad_tol;
            break;
        }
    }
    if grad.iter().all(|v| v.is_finite()) && grad.norm() < grad_tol {
        converged = true;
    }
    MinimizeResult {
        x: x.as_slice().to_vec(),
        fx,
        evals,
        converged,
    }
}

/// Simplex search followed by the quasi-Newton polish; keeps whichever
/// endpoint is better.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    simplex_budget: usize,
    grad_tol: f64,
) -> MinimizeResult {
    let nm = nelder_mead(&mut f, x0, 0.25, simplex_budget, 1e-10);
    let polish = bfgs(&mut f, &nm.x, 200, grad_tol);
    if polish.fx.is_finite() && polish.fx <= nm.fx {
        MinimizeResult {
            evals: nm.evals + polish.evals,
            ..polish
        }
    } else {
        MinimizeResult {
            evals: nm.evals + polish.evals,
            ..nm
        }
    }
}
