//! Clamped B-spline bases on equally spaced breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree-`q` B-spline basis on `M + 1` equally spaced breakpoints over
/// `[lower, upper]`, with boundary knots repeated so the basis has `M + q`
/// functions and interpolates at the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineSpec", into = "SplineSpec")]
pub struct SplineBasis {
    lower: f64,
    upper: f64,
    intervals: usize,
    degree: usize,
    knots: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplineSpec {
    pub lower: f64,
    pub upper: f64,
    pub intervals: usize,
    pub degree: usize,
}

impl TryFrom<SplineSpec> for SplineBasis {
    type Error = Error;
    fn try_from(s: SplineSpec) -> Result<Self> {
        SplineBasis::new(s.lower, s.upper, s.intervals, s.degree)
    }
}

impl From<SplineBasis> for SplineSpec {
    fn from(b: SplineBasis) -> Self {
        SplineSpec { lower: b.lower, upper: b.upper, intervals: b.intervals, degree: b.degree }
    }
}

impl SplineBasis {
    pub fn new(lower: f64, upper: f64, intervals: usize, degree: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && upper > lower) {
            return Err(Error::invalid(format!("spline interval [{lower}, {upper}] is degenerate")));
        }
        if degree == 0 || degree > 5 {
            return Err(Error::invalid(format!("spline degree {degree} not supported (1..=5)")));
        }
        if intervals < 1 {
            return Err(Error::invalid("spline needs at least one interval"));
        }
        let width = (upper - lower) / intervals as f64;
        let mut knots = vec![lower; degree + 1];
        for m in 1..intervals {
            knots.push(lower + width * m as f64);
        }
        knots.extend(std::iter::repeat_n(upper, degree + 1));
        Ok(Self { lower, upper, intervals, degree, knots })
    }

    /// Basis with `size` functions of the given degree (`size = M + q`).
    pub fn with_size(lower: f64, upper: f64, size: usize, degree: usize) -> Result<Self> {
        if size <= degree {
            return Err(Error::invalid(format!("a degree-{degree} spline needs more than {degree} basis functions")));
        }
        Self::new(lower, upper, size - degree, degree)
    }

    pub fn size(&self) -> usize {
        self.intervals + self.degree
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Values of all basis functions at `x` (clamped to the support).
    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        basis_into(&self.knots, self.degree, x.clamp(self.lower, self.upper), &mut out);
        out
    }

    /// Derivatives of all basis functions at `x`, from the degree-lowering
    /// recursion `B'_{i,q} = q [B_{i,q-1}/(t_{i+q}-t_i) - B_{i+1,q-1}/(t_{i+q+1}-t_{i+1})]`.
    pub fn derivative_values(&self, x: f64) -> Vec<f64> {
        let q = self.degree;
        let n = self.size();
        let x = x.clamp(self.lower, self.upper);
        // degree q-1 functions on the full knot vector: n + 1 of them
        let mut lower = vec![0.0; n + 1];
        basis_into(&self.knots, q - 1, x, &mut lower);
        let t = &self.knots;
        let qf = q as f64;
        (0..n)
            .map(|i| {
                let mut d = 0.0;
                let a = t[i + q] - t[i];
                if a > 0.0 {
                    d += lower[i] / a;
                }
                let b = t[i + q + 1] - t[i + 1];
                if b > 0.0 {
                    d -= lower[i + 1] / b;
                }
                qf * d
            })
            .collect()
    }

    pub fn evaluate(&self, coefficients: &[f64], x: f64) -> f64 {
        debug_assert_eq!(coefficients.len(), self.size());
        self.values(x).iter().zip(coefficients).map(|(b, c)| b * c).sum()
    }

    /// Derivative of `Σ c_m B_m` through the coefficient-difference form on the
    /// reduced knot system (boundary multiplicity lowered by one).
    pub fn evaluate_derivative(&self, coefficients: &[f64], x: f64) -> f64 {
        let q = self.degree;
        let n = self.size();
        debug_assert_eq!(coefficients.len(), n);
        let reduced = &self.knots[1..self.knots.len() - 1];
        let mut b = vec![0.0; n - 1];
        basis_into(reduced, q - 1, x.clamp(self.lower, self.upper), &mut b);
        let t = &self.knots;
        (0..n - 1)
            .map(|m| {
                let span = t[m + q + 1] - t[m + 1];
                q as f64 * (coefficients[m + 1] - coefficients[m]) / span * b[m]
            })
            .sum()
    }
}

/// Evaluates the `knots.len() - degree - 1` B-splines of `degree` at `x` into
/// `out`. Right-continuous except at the last knot, where the final non-empty
/// span is used so the basis still sums to one.
pub(crate) fn basis_into(knots: &[f64], degree: usize, x: f64, out: &mut [f64]) {
    let n = knots.len() - degree - 1;
    debug_assert!(out.len() >= n);
    out.iter_mut().for_each(|v| *v = 0.0);
    let last = knots[n];
    let first = knots[degree];
    if x < first || x > last {
        return;
    }
    // span index s with knots[s] <= x < knots[s + 1], degree <= s < n
    let mut s = if x >= last {
        let mut s = n - 1;
        while s > degree && knots[s] == knots[s + 1] {
            s -= 1;
        }
        s
    } else {
        match knots[degree..=n].partition_point(|k| *k <= x) {
            0 => degree,
            p => degree + p - 1,
        }
    };
    if s >= n {
        s = n - 1;
    }
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    let mut nloc = vec![0.0; degree + 1];
    nloc[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[s + 1 - j];
        right[j] = knots[s + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom > 0.0 { nloc[r] / denom } else { 0.0 };
            nloc[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        nloc[j] = saved;
    }
    for (r, v) in nloc.into_iter().enumerate() {
        out[s - degree + r] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_is_intervals_plus_degree() {
        assert_eq!(SplineBasis::new(0.0, 1.0, 4, 3).unwrap().size(), 7);
        assert_eq!(SplineBasis::with_size(0.0, 1.0, 6, 3).unwrap().intervals(), 3);
    }

    #[test]
    fn partition_of_unity_including_endpoints() {
        for degree in 1..=4 {
            let b = SplineBasis::new(1.0, 10.0, 8, degree).unwrap();
            for k in 0..=200 {
                let x = 1.0 + 9.0 * k as f64 / 200.0;
                let s: f64 = b.values(x).iter().sum();
                assert!((s - 1.0).abs() < 1e-14, "degree {degree} x {x}: {s}");
                assert!(b.values(x).iter().all(|v| *v >= -1e-15));
            }
        }
    }

    #[test]
    fn endpoint_interpolation() {
        let b = SplineBasis::new(0.0, 2.0, 5, 3).unwrap();
        let v = b.values(0.0);
        assert_eq!(v[0], 1.0);
        let v = b.values(2.0);
        assert_eq!(*v.last().unwrap(), 1.0);
    }

    #[test]
    fn reproduces_linear_functions() {
        // Greville abscissae as coefficients reproduce x.
        let b = SplineBasis::new(-1.0, 3.0, 6, 3).unwrap();
        let t = b.knots();
        let coefs: Vec<f64> = (0..b.size()).map(|i| (t[i + 1] + t[i + 2] + t[i + 3]) / 3.0).collect();
        for k in 0..50 {
            let x = -1.0 + 4.0 * k as f64 / 49.0;
            assert!((b.evaluate(&coefs, x) - x).abs() < 1e-13);
            assert!((b.evaluate_derivative(&coefs, x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_routes_agree_with_finite_differences() {
        let b = SplineBasis::new(1.0, 10.0, 8, 3).unwrap();
        let coefs: Vec<f64> = (0..b.size()).map(|i| ((i as f64) * 0.7).sin() + 0.1 * i as f64).collect();
        for k in 1..100 {
            let x = 1.0 + 9.0 * k as f64 / 100.0 + 0.013;
            let via_coefs = b.evaluate_derivative(&coefs, x);
            let via_basis: f64 = b.derivative_values(x).iter().zip(&coefs).map(|(d, c)| d * c).sum();
            let h = 1e-5;
            let fd = (b.evaluate(&coefs, x + h) - b.evaluate(&coefs, x - h)) / (2.0 * h);
            assert!((via_coefs - via_basis).abs() < 1e-11);
            assert!((via_coefs - fd).abs() < 1e-6, "{x}: {via_coefs} vs {fd}");
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(SplineBasis::new(1.0, 1.0, 4, 3).is_err());
        assert!(SplineBasis::new(0.0, 1.0, 0, 3).is_err());
        assert!(SplineBasis::with_size(0.0, 1.0, 3, 3).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let b = SplineBasis::new(1.0, 10.0, 8, 3).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: SplineBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
    }
}
