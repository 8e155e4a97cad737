//! Projected Newton for smooth minimisation over a box.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::Result;

pub(crate) struct Local {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub(crate) struct BoxOutcome {
    pub x: DVector<f64>,
    pub local: Local,
    pub projected_gradient: f64,
    pub converged: bool,
}

fn project(x: &DVector<f64>, lo: f64, hi: f64) -> DVector<f64> {
    x.map(|v| v.clamp(lo, hi))
}

pub(crate) fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>, lo: f64, hi: f64) -> f64 {
    (x - project(&(x - g), lo, hi)).amax()
}

/// Positive-definite version of a symmetric matrix: eigenvalues replaced by
/// their absolute values, floored relative to the largest.
fn make_definite(h: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.amax().max(1e-12);
    let vals = eig.eigenvalues.map(|l| l.abs().max(1e-8 * top));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Minimises `f` over `[lo, hi]^d`. `full` returns value, gradient and
/// Hessian; `value` only the value (used in the line search).
pub(crate) fn minimise_box<F, V>(
    full: F,
    value: V,
    x0: DVector<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BoxOutcome>
where
    F: Fn(&DVector<f64>) -> Result<Local>,
    V: Fn(&DVector<f64>) -> Result<f64>,
{
    let d = x0.len();
    let mut x = project(&x0, lo, hi);
    let mut local = full(&x)?;
    for _ in 0..max_iter {
        let pg = projected_gradient_norm(&x, &local.grad, lo, hi);
        if pg < tol {
            return Ok(BoxOutcome { x, local, projected_gradient: pg, converged: true });
        }
        let eps = pg.min(1e-6 * (hi - lo).max(1e-12));
        let g = &local.grad;
        let bound: Vec<bool> =
            (0..d).map(|i| (x[i] <= lo + eps && g[i] > 0.0) || (x[i] >= hi - eps && g[i] < 0.0)).collect();
        let free: Vec<usize> = (0..d).filter(|i| !bound[*i]).collect();
        let mut dir = DVector::zeros(d);
        let diag_scale = local.hess.diagonal().amax().max(1e-12);
        for i in 0..d {
            if bound[i] {
                dir[i] = -g[i] / diag_scale;
            }
        }
        if !free.is_empty() {
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| local.hess[(free[a], free[b])]);
            let gf = DVector::from_fn(free.len(), |a, _| g[free[a]]);
            let step = make_definite(&hf).cholesky().map(|c| -c.solve(&gf)).unwrap_or_else(|| -gf / diag_scale);
            for (a, &i) in free.iter().enumerate() {
                dir[i] = step[a];
            }
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let trial = project(&(&x + &dir * t), lo, hi);
            let v = value(&trial)?;
            let decrease = g.dot(&(&trial - &x));
            if v.is_finite() && v <= local.value + 1e-4 * decrease.min(0.0) {
                if (&trial - &x).amax() == 0.0 {
                    break;
                }
                x = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // no further decrease is representable
            let pg = projected_gradient_norm(&x, &local.grad, lo, hi);
            return Ok(BoxOutcome { x, local, projected_gradient: pg, converged: pg < 100.0 * tol });
        }
        local = full(&x)?;
    }
    let pg = projected_gradient_norm(&x, &local.grad, lo, hi);
    Ok(BoxOutcome { x, local, projected_gradient: pg, converged: pg < tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_box_constrained_quadratic() {
        // f = (x0 - 2)^2 + (x1 + 0.5)^2 + x0 x1 on [-1, 1]^2
        let full = |x: &DVector<f64>| {
            Ok(Local {
                value: (x[0] - 2.0).powi(2) + (x[1] + 0.5).powi(2) + x[0] * x[1],
                grad: DVector::from_vec(vec![2.0 * (x[0] - 2.0) + x[1], 2.0 * (x[1] + 0.5) + x[0]]),
                hess: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
            })
        };
        let value = |x: &DVector<f64>| full(x).map(|l| l.value);
        let out = minimise_box(full, value, DVector::zeros(2), -1.0, 1.0, 1e-12, 100).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-12);
        assert!((out.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn handles_indefinite_hessian() {
        // f = -x^2 on [-1, 2]: minimum at the upper end
        let full = |x: &DVector<f64>| {
            Ok(Local {
                value: -x[0] * x[0],
                grad: DVector::from_vec(vec![-2.0 * x[0]]),
                hess: DMatrix::from_element(1, 1, -2.0),
            })
        };
        let value = |x: &DVector<f64>| Ok(-x[0] * x[0]);
        let out = minimise_box(full, value, DVector::from_vec(vec![0.1]), -1.0, 2.0, 1e-12, 100).unwrap();
        assert_eq!(out.x[0], 2.0);
    }
}
