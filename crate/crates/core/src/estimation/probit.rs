//! Probit maximum likelihood under linear inequality constraints `Aθ ≤ 0`,
//! by an augmented Lagrangian with damped Newton inner solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{inverse_mills, log_normal_cdf};

#[derive(Clone, Copy, Debug)]
pub(crate) struct SolverOptions {
    pub feasibility_tolerance: f64,
    pub gradient_tolerance: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub initial_penalty: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-9,
            gradient_tolerance: 1e-9,
            max_outer: 60,
            max_newton: 200,
            initial_penalty: 10.0,
        }
    }
}

pub(crate) struct ProbitSolution {
    pub theta: DVector<f64>,
    pub loglik: f64,
    pub multipliers: DVector<f64>,
    pub newton_iterations: usize,
}

/// Log-likelihood, its gradient and the negated Hessian (positive
/// semi-definite), all for the full sample.
pub(crate) fn probit_derivatives(
    x: &DMatrix<f64>,
    y: &[bool],
    theta: &DVector<f64>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let eta = x * theta;
    let n = y.len();
    let mut ll = 0.0;
    let mut score = DVector::zeros(n);
    let mut weight = DVector::zeros(n);
    for i in 0..n {
        let s = if y[i] { 1.0 } else { -1.0 };
        let t = s * eta[i];
        ll += log_normal_cdf(t);
        let lam = inverse_mills(t);
        score[i] = s * lam;
        weight[i] = lam * (t + lam);
    }
    let grad = x.tr_mul(&score);
    let mut xw = x.clone();
    for (mut row, w) in xw.row_iter_mut().zip(weight.iter()) {
        row *= *w;
    }
    let info = x.tr_mul(&xw);
    (ll, grad, info)
}

pub(crate) fn probit_loglik(x: &DMatrix<f64>, y: &[bool], theta: &DVector<f64>) -> f64 {
    let eta = x * theta;
    y.iter().zip(eta.iter()).map(|(b, e)| log_normal_cdf(if *b { *e } else { -*e })).sum()
}

struct Augmented<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [bool],
    a: &'a DMatrix<f64>,
    lambda: &'a DVector<f64>,
    mu: f64,
    n: f64,
}

impl Augmented<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let g = self.a * theta;
        let pen: f64 = g
            .iter()
            .zip(self.lambda.iter())
            .map(|(g, l)| ((l + self.mu * g).max(0.0).powi(2) - l * l) / (2.0 * self.mu))
            .sum();
        -probit_loglik(self.x, self.y, theta) / self.n + pen
    }

    fn newton_system(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (ll, grad, info) = probit_derivatives(self.x, self.y, theta);
        let mut value = -ll / self.n;
        let mut g = -grad / self.n;
        let mut h = info / self.n;
        let c = self.a * theta;
        for i in 0..c.len() {
            let l = self.lambda[i];
            let shifted = l + self.mu * c[i];
            value += (shifted.max(0.0).powi(2) - l * l) / (2.0 * self.mu);
            if shifted > 0.0 {
                let row = self.a.row(i).transpose();
                g += &row * shifted;
                h += &row * row.transpose() * self.mu;
            }
        }
        (value, g, h)
    }
}

fn newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let k = h.nrows();
    let scale = h.diagonal().amax().max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..k {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            return Ok(-ch.solve(g));
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
    }
    Err(Error::Singular("probit Hessian is not positive definite".into()))
}

/// Maximises the probit log-likelihood subject to `a θ ≤ 0` (`a` may have
/// zero rows).
pub(crate) fn constrained_probit(
    x: &DMatrix<f64>,
    y: &[bool],
    a: &DMatrix<f64>,
    start: DVector<f64>,
    opts: &SolverOptions,
) -> Result<ProbitSolution> {
    let n = y.len() as f64;
    let m = a.nrows();
    let mut theta = start;
    let mut lambda = DVector::zeros(m);
    let mut mu = opts.initial_penalty;
    let mut prev_violation = f64::INFINITY;
    let mut total_newton = 0;
    for _outer in 0..opts.max_outer {
        let aug = Augmented { x, y, a, lambda: &lambda, mu, n };
        let mut converged = false;
        for _ in 0..opts.max_newton {
            total_newton += 1;
            let (value, g, h) = aug.newton_system(&theta);
            if !value.is_finite() {
                return Err(Error::NonFinite("probit likelihood".into()));
            }
            if g.amax() < opts.gradient_tolerance {
                converged = true;
                break;
            }
            let step = newton_step(&h, &g)?;
            let slope = g.dot(&step);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &theta + &step * t;
                let v = aug.value(&trial);
                if v.is_finite() && v <= value + 1e-4 * t * slope {
                    theta = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || (t * step.amax()) < 1e-15 * theta.amax().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "probit Newton iterations did not converge after {} steps",
                opts.max_newton
            )));
        }
        if m == 0 {
            break;
        }
        let c = a * &theta;
        let violation = c.iter().fold(0.0_f64, |v, c| v.max(*c));
        for i in 0..m {
            lambda[i] = (lambda[i] + mu * c[i]).max(0.0);
        }
        let slack = c.iter().zip(lambda.iter()).fold(0.0_f64, |s, (c, l)| s.max((c * l).abs()));
        if violation <= opts.feasibility_tolerance && slack <= opts.feasibility_tolerance {
            return Ok(ProbitSolution {
                loglik: probit_loglik(x, y, &theta),
                theta,
                multipliers: lambda,
                newton_iterations: total_newton,
            });
        }
        if violation > 0.25 * prev_violation {
            mu = (mu * 10.0).min(1e10);
        }
        prev_violation = violation;
    }
    if m > 0 {
        let c = a * &theta;
        let violation = c.iter().fold(0.0_f64, |v, c| v.max(*c));
        if violation > 1e3 * opts.feasibility_tolerance {
            return Err(Error::Infeasible(format!(
                "constrained probit ended with constraint violation {violation:.3e}"
            )));
        }
    }
    Ok(ProbitSolution {
        loglik: probit_loglik(x, y, &theta),
        theta,
        multipliers: lambda,
        newton_iterations: total_newton,
    })
}
