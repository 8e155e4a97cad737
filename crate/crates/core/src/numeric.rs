//! Special functions, Gauss rules and small root/derivative helpers.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// `phi(x) / Phi(x)`, stable for very negative `x`.
pub fn inverse_mills(x: f64) -> f64 {
    if x < -30.0 {
        // Asymptotic series of Phi(x) / phi(x) for x -> -inf.
        let x2 = x * x;
        let ratio = (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)) / -x;
        1.0 / ratio
    } else {
        normal_pdf(x) / normal_cdf(x)
    }
}

/// `ln Phi(x)`, stable for very negative `x`.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x < -30.0 {
        -0.5 * x * x - FRAC_1_SQRT_2PI.recip().ln() - inverse_mills(x).ln()
    } else {
        normal_cdf(x).ln()
    }
}

/// Logistic CDF `1 / (1 + exp(-x))` without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule for expectations under a standard normal:
/// `E[f(Z)] ≈ Σ w_i f(x_i)`, weights summing to one.
///
/// Golub–Welsch on the probabilists' Hermite recurrence.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes = pairs.iter().map(|p| p.0).collect();
    let weights = pairs.iter().map(|p| p.1 / total).collect();
    (nodes, weights)
}

/// Bisection for an increasing function: returns `x` in `[lo, hi]` with
/// `f(x) ≈ target`, assuming `f(lo) <= target <= f(hi)`.
pub fn bisect_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..400 {
        if hi - lo <= tol * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central difference with one Richardson extrapolation step.
pub fn richardson_derivative<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |step: f64| -> Result<f64> { Ok((f(x + step)? - f(x - step)?) / (2.0 * step)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    let value = (4.0 * fine - coarse) / 3.0;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("numerical derivative at {x}")));
    }
    Ok(value)
}
