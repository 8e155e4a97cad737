//! Random-utility models with explicit utilities, used as ground truth.
//!
//! `U_j(n, η) = s_j(β) g_j(n) + a_j(β) + shock_j`, where `β` is a vector of
//! independent random coefficients, `g_j` a strictly increasing transform of
//! the numeraire `n`, and `s_j`, `a_j` affine in `β`. Choice probabilities
//! integrate the closed-form shock probabilities over `β`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ChoiceProbabilities;
use crate::distributions::{open_unit, ScalarDistribution};
use crate::error::{Error, Result};
use crate::numeric::{logistic, normal_cdf};
use crate::oracle::RandomUtility;

/// Strictly increasing map of the numeraire; `-inf` outside its domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum Transform {
    Linear,
    Log,
    Log1p,
    /// `(n^{1-ρ} − 1)/(1 − ρ)`, log at `ρ = 1`.
    Crra {
        rho: f64,
    },
}

impl Transform {
    pub fn apply(&self, n: f64) -> f64 {
        match *self {
            Transform::Linear => n,
            Transform::Log => {
                if n > 0.0 {
                    n.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Transform::Log1p => {
                if n > -1.0 {
                    n.ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Transform::Crra { rho } => {
                if n <= 0.0 {
                    f64::NEG_INFINITY
                } else if (rho - 1.0).abs() < 1e-12 {
                    n.ln()
                } else {
                    (n.powf(1.0 - rho) - 1.0) / (1.0 - rho)
                }
            }
        }
    }

    /// Inverse of [`Transform::apply`] where it exists.
    pub fn invert(&self, u: f64) -> Option<f64> {
        match *self {
            Transform::Linear => Some(u),
            Transform::Log => Some(u.exp()),
            Transform::Log1p => Some(u.exp_m1()),
            Transform::Crra { rho } => {
                if (rho - 1.0).abs() < 1e-12 {
                    Some(u.exp())
                } else {
                    let base = 1.0 + (1.0 - rho) * u;
                    (base > 0.0).then(|| base.powf(1.0 / (1.0 - rho)))
                }
            }
        }
    }
}

/// `constant + Σ loadings_i β_i`; missing loadings are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    #[serde(default)]
    pub loadings: Vec<f64>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, loadings: Vec::new() }
    }

    pub fn new(constant: f64, loadings: Vec<f64>) -> Self {
        Self { constant, loadings }
    }

    #[inline]
    pub fn eval(&self, beta: &[f64]) -> f64 {
        self.constant + self.loadings.iter().zip(beta).map(|(l, b)| l * b).sum::<f64>()
    }
}

/// Deterministic part of one alternative's utility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeUtility {
    #[serde(flatten)]
    pub transform: Transform,
    pub slope: Affine,
    pub intercept: Affine,
}

impl AlternativeUtility {
    pub fn new(transform: Transform, slope: Affine, intercept: Affine) -> Self {
        Self { transform, slope, intercept }
    }

    /// `n ↦ n + a`.
    pub fn linear(intercept: f64) -> Self {
        Self::new(Transform::Linear, Affine::constant(1.0), Affine::constant(intercept))
    }

    #[inline]
    pub fn value(&self, numeraire: f64, beta: &[f64]) -> f64 {
        let g = self.transform.apply(numeraire);
        if g == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.slope.eval(beta) * g + self.intercept.eval(beta)
    }
}

/// Idiosyncratic shock added to utilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shock", rename_all = "snake_case")]
pub enum Shock {
    /// I.i.d. Gumbel shocks on every alternative (logit kernel), any `J`.
    Gumbel { scale: f64 },
    /// Normal shock on `U_1 − U_0`; binary models only.
    NormalDifference { sd: f64 },
    /// Logistic shock on `U_1 − U_0`; binary models only.
    LogisticDifference { scale: f64 },
}

impl Shock {
    fn scale(&self) -> f64 {
        match *self {
            Shock::Gumbel { scale } => scale,
            Shock::NormalDifference { sd } => sd,
            Shock::LogisticDifference { scale } => scale,
        }
    }
}

/// How the random coefficients are integrated out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
#[derive(Default)]
pub enum IntegrationMethod {
    /// Tensor-product quadrature when at most two coefficients are random,
    /// fixed-draw simulation otherwise.
    #[default]
    Auto,
    Quadrature {
        nodes_per_dim: usize,
    },
    /// Common draws fixed at construction; `q_j` is smooth in `(p, y)`.
    Simulation {
        draws: usize,
    },
}

const AUTO_NODES: usize = 64;
const AUTO_DRAWS: usize = 100_000;
const VALIDATION_DRAWS: usize = 1000;
const VALIDATION_POINTS: usize = 20;

fn default_seed() -> u64 {
    20_240_601
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Independent random coefficients `β`.
    #[serde(default)]
    pub coefficients: Vec<ScalarDistribution>,
    /// Utilities for alternatives `0..=J`, outside option first.
    pub alternatives: Vec<AlternativeUtility>,
    pub shock: Shock,
    #[serde(default)]
    pub integration: IntegrationMethod,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl SyntheticSpec {
    /// `U_0 = n`, `U_1 = n + ε` with `ε ~ N(0, sd²)`: `q_1 = Φ(−p/sd)`.
    pub fn probit_quasilinear(sd: f64) -> Self {
        Self {
            coefficients: Vec::new(),
            alternatives: vec![AlternativeUtility::linear(0.0), AlternativeUtility::linear(0.0)],
            shock: Shock::NormalDifference { sd },
            integration: IntegrationMethod::Auto,
            seed: default_seed(),
        }
    }

    /// `U_0 = n`, `U_1 = n + α + ε` with logistic `ε`: `q_1 = Λ((α − p)/s)`.
    pub fn logit_quasilinear(alpha: f64, scale: f64) -> Self {
        Self {
            coefficients: Vec::new(),
            alternatives: vec![AlternativeUtility::linear(0.0), AlternativeUtility::linear(alpha)],
            shock: Shock::LogisticDifference { scale },
            integration: IntegrationMethod::Auto,
            seed: default_seed(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_integration(mut self, method: IntegrationMethod) -> Self {
        self.integration = method;
        self
    }

    pub fn build(self) -> Result<SyntheticModel> {
        SyntheticModel::new(self)
    }
}

/// Synthetic random-utility model with precomputed integration nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SyntheticSpec", into = "SyntheticSpec")]
pub struct SyntheticModel {
    spec: SyntheticSpec,
    /// Flattened `β` nodes, `dim` entries each.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for SyntheticModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<SyntheticSpec> for SyntheticModel {
    type Error = Error;
    fn try_from(spec: SyntheticSpec) -> Result<Self> {
        SyntheticModel::new(spec)
    }
}

impl From<SyntheticModel> for SyntheticSpec {
    fn from(m: SyntheticModel) -> Self {
        m.spec
    }
}

impl SyntheticModel {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        validate_structure(&spec)?;
        let (nodes, weights) = integration_nodes(&spec);
        let model = Self { spec, nodes, weights };
        model.validate_monotonicity()?;
        Ok(model)
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.coefficients.len()
    }

    pub fn integration_size(&self) -> usize {
        self.weights.len()
    }

    /// Deterministic utility `V_j(n, β)`, without the shock.
    #[inline]
    pub fn systematic_utility(&self, j: usize, numeraire: f64, beta: &[f64]) -> f64 {
        self.spec.alternatives[j].value(numeraire, beta)
    }

    fn validate_monotonicity(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(1);
        let grid: Vec<f64> = (0..VALIDATION_POINTS)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (VALIDATION_POINTS - 1) as f64))
            .collect();
        let mut beta = vec![0.0; self.dim()];
        for _ in 0..VALIDATION_DRAWS {
            for (b, d) in beta.iter_mut().zip(&self.spec.coefficients) {
                *b = d.sample(&mut rng);
            }
            for (j, alt) in self.spec.alternatives.iter().enumerate() {
                let mut prev = f64::NEG_INFINITY;
                for &n in &grid {
                    let v = alt.value(n, &beta);
                    if v.is_nan() || !(v > prev) {
                        return Err(Error::NonMonotoneUtility {
                            alternative: j,
                            detail: format!("utility {v} at numeraire {n} does not exceed {prev} (beta = {beta:?})"),
                        });
                    }
                    prev = v;
                }
            }
        }
        Ok(())
    }
}

fn validate_structure(spec: &SyntheticSpec) -> Result<()> {
    if spec.alternatives.len() < 2 {
        return Err(Error::invalid("synthetic model needs an outside and at least one inside utility"));
    }
    let dim = spec.coefficients.len();
    for d in &spec.coefficients {
        d.validate()?;
    }
    for (j, alt) in spec.alternatives.iter().enumerate() {
        for a in [&alt.slope, &alt.intercept] {
            if a.loadings.len() > dim {
                return Err(Error::invalid(format!(
                    "alternative {j} has {} loadings but only {dim} random coefficients",
                    a.loadings.len()
                )));
            }
            if !a.constant.is_finite() || !a.loadings.iter().all(|l| l.is_finite()) {
                return Err(Error::NonFinite(format!("utility parameters of alternative {j}")));
            }
        }
        if let Transform::Crra { rho } = alt.transform {
            if !(rho.is_finite() && rho >= 0.0) {
                return Err(Error::invalid("CRRA curvature must be finite and non-negative"));
            }
        }
    }
    let scale = spec.shock.scale();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("shock scale must be positive"));
    }
    let binary_only = !matches!(spec.shock, Shock::Gumbel { .. });
    if binary_only && spec.alternatives.len() != 2 {
        return Err(Error::invalid("difference shocks are only defined for binary models"));
    }
    match spec.integration {
        IntegrationMethod::Quadrature { nodes_per_dim: 0 } => {
            Err(Error::invalid("quadrature needs at least one node per dimension"))
        }
        IntegrationMethod::Simulation { draws: 0 } => Err(Error::invalid("simulation needs at least one draw")),
        _ => Ok(()),
    }
}

fn integration_nodes(spec: &SyntheticSpec) -> (Vec<f64>, Vec<f64>) {
    let dim = spec.coefficients.len();
    if dim == 0 {
        return (Vec::new(), vec![1.0]);
    }
    let method = match spec.integration {
        IntegrationMethod::Auto if dim <= 2 => IntegrationMethod::Quadrature { nodes_per_dim: AUTO_NODES },
        IntegrationMethod::Auto => IntegrationMethod::Simulation { draws: AUTO_DRAWS },
        m => m,
    };
    match method {
        IntegrationMethod::Quadrature { nodes_per_dim } => {
            let per_dim: Vec<Vec<(f64, f64)>> =
                spec.coefficients.iter().map(|d| d.integration_nodes(nodes_per_dim)).collect();
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            let mut index = vec![0usize; dim];
            loop {
                let mut w = 1.0;
                for (i, &k) in index.iter().enumerate() {
                    nodes.push(per_dim[i][k].0);
                    w *= per_dim[i][k].1;
                }
                weights.push(w);
                let mut d = 0;
                loop {
                    index[d] += 1;
                    if index[d] < per_dim[d].len() {
                        break;
                    }
                    index[d] = 0;
                    d += 1;
                    if d == dim {
                        return (nodes, weights);
                    }
                }
            }
        }
        IntegrationMethod::Simulation { draws } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(2);
            let mut nodes = Vec::with_capacity(draws * dim);
            for _ in 0..draws {
                for d in &spec.coefficients {
                    nodes.push(d.sample(&mut rng));
                }
            }
            (nodes, vec![1.0 / draws as f64; draws])
        }
        IntegrationMethod::Auto => unreachable!("resolved above"),
    }
}

impl ChoiceProbabilities for SyntheticModel {
    fn n_inside(&self) -> usize {
        self.spec.alternatives.len() - 1
    }

    fn probabilities_into(&self, prices: &[f64], income: f64, out: &mut [f64]) -> Result<()> {
        let n_alt = self.spec.alternatives.len();
        let dim = self.dim();
        out[..n_alt].iter_mut().for_each(|o| *o = 0.0);
        let mut v = vec![0.0; n_alt];
        for (k, w) in self.weights.iter().enumerate() {
            let beta = &self.nodes[k * dim..(k + 1) * dim];
            v[0] = self.systematic_utility(0, income, beta);
            for j in 1..n_alt {
                let p = prices[j - 1];
                v[j] =
                    if p == f64::INFINITY { f64::NEG_INFINITY } else { self.systematic_utility(j, income - p, beta) };
            }
            match self.spec.shock {
                Shock::Gumbel { scale } => {
                    let m = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
                    if m == f64::NEG_INFINITY {
                        return Err(Error::NonFinite(format!("all utilities are -inf at income {income}")));
                    }
                    let mut total = 0.0;
                    for x in v.iter_mut() {
                        *x = ((*x - m) / scale).exp();
                        total += *x;
                    }
                    for (o, x) in out.iter_mut().zip(&v) {
                        *o += w * x / total;
                    }
                }
                Shock::NormalDifference { sd } => {
                    let q1 = difference_probability(v[1] - v[0], |d| normal_cdf(d / sd));
                    out[1] += w * q1;
                    out[0] += w * (1.0 - q1);
                }
                Shock::LogisticDifference { scale } => {
                    let q1 = difference_probability(v[1] - v[0], |d| logistic(d / scale));
                    out[1] += w * q1;
                    out[0] += w * (1.0 - q1);
                }
            }
        }
        if out.iter().any(|q| !q.is_finite()) {
            return Err(Error::NonFinite(format!("choice probabilities at income {income}")));
        }
        Ok(())
    }
}

fn difference_probability<F: Fn(f64) -> f64>(d: f64, cdf: F) -> f64 {
    if d.is_nan() {
        // both utilities -inf: the inside good is unaffordable as well
        0.0
    } else {
        cdf(d)
    }
}

impl RandomUtility for SyntheticModel {
    fn n_inside(&self) -> usize {
        self.spec.alternatives.len() - 1
    }

    fn eta_dim(&self) -> usize {
        self.dim() + self.shock_dim()
    }

    fn sample_eta(&self, rng: &mut dyn RngCore, eta: &mut [f64]) {
        let dim = self.dim();
        for (e, d) in eta[..dim].iter_mut().zip(&self.spec.coefficients) {
            *e = d.sample(rng);
        }
        let shocks = &mut eta[dim..];
        match self.spec.shock {
            Shock::Gumbel { scale } => {
                for e in shocks.iter_mut() {
                    *e = -scale * (-open_unit(rng).ln()).ln();
                }
            }
            Shock::NormalDifference { sd } => {
                shocks[0] = sd * crate::numeric::normal_quantile(open_unit(rng));
            }
            Shock::LogisticDifference { scale } => {
                let u = open_unit(rng);
                shocks[0] = scale * (u / (1.0 - u)).ln();
            }
        }
    }

    fn utility(&self, j: usize, numeraire: f64, eta: &[f64]) -> f64 {
        let dim = self.dim();
        let v = self.systematic_utility(j, numeraire, &eta[..dim]);
        v + self.shock_term(j, &eta[dim..])
    }

    fn outside_inverse(&self, u: f64, eta: &[f64]) -> Option<f64> {
        let dim = self.dim();
        let beta = &eta[..dim];
        let alt = &self.spec.alternatives[0];
        let slope = alt.slope.eval(beta);
        if !(slope > 0.0) {
            return None;
        }
        let g = (u - self.shock_term(0, &eta[dim..]) - alt.intercept.eval(beta)) / slope;
        alt.transform.invert(g)
    }
}

impl SyntheticModel {
    fn shock_dim(&self) -> usize {
        match self.spec.shock {
            Shock::Gumbel { .. } => self.spec.alternatives.len(),
            _ => 1,
        }
    }

    #[inline]
    fn shock_term(&self, j: usize, shocks: &[f64]) -> f64 {
        match self.spec.shock {
            Shock::Gumbel { .. } => shocks[j],
            _ => {
                if j == 0 {
                    0.0
                } else {
                    shocks[0]
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probit_fixture_matches_closed_form() {
        let m = SyntheticSpec::probit_quasilinear(1.0).build().unwrap();
        for &p in &[0.0, 0.5, 2.0] {
            for &y in &[1.0, 7.0] {
                let q1 = m.choice_probability(1, &[p], y).unwrap();
                assert!((q1 - normal_cdf(-p)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gumbel_random_coefficient_by_quadrature_matches_simulated_nodes() {
        let spec = SyntheticSpec {
            coefficients: vec![ScalarDistribution::Normal { mean: 0.0, sd: 1.0 }],
            alternatives: vec![
                AlternativeUtility::new(Transform::Log, Affine::constant(1.0), Affine::default()),
                AlternativeUtility::new(Transform::Log, Affine::constant(1.0), Affine::new(0.5, vec![0.8])),
                AlternativeUtility::new(Transform::Log, Affine::constant(1.0), Affine::new(0.2, vec![-0.5])),
            ],
            shock: Shock::Gumbel { scale: 1.0 },
            integration: IntegrationMethod::Auto,
            seed: 3,
        };
        let quad = spec.clone().build().unwrap();
        let sim = spec.with_integration(IntegrationMethod::Simulation { draws: 200_000 }).build().unwrap();
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        quad.probabilities_into(&[1.0, 2.0], 5.0, &mut a).unwrap();
        sim.probabilities_into(&[1.0, 2.0], 5.0, &mut b).unwrap();
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..3 {
            assert!((a[j] - b[j]).abs() < 3e-3, "{j}: {} vs {}", a[j], b[j]);
        }
    }

    #[test]
    fn decreasing_utility_is_rejected() {
        let spec = SyntheticSpec {
            coefficients: Vec::new(),
            alternatives: vec![
                AlternativeUtility::new(Transform::Linear, Affine::constant(-1.0), Affine::default()),
                AlternativeUtility::linear(0.0),
            ],
            shock: Shock::LogisticDifference { scale: 1.0 },
            integration: IntegrationMethod::Auto,
            seed: 1,
        };
        assert!(matches!(spec.build(), Err(Error::NonMonotoneUtility { alternative: 0, .. })));
    }

    #[test]
    fn randomly_negative_slope_is_caught_by_sampling() {
        let spec = SyntheticSpec {
            coefficients: vec![ScalarDistribution::Normal { mean: 0.0, sd: 1.0 }],
            alternatives: vec![
                AlternativeUtility::linear(0.0),
                AlternativeUtility::new(Transform::Log, Affine::new(1.0, vec![1.0]), Affine::default()),
            ],
            shock: Shock::NormalDifference { sd: 1.0 },
            integration: IntegrationMethod::Auto,
            seed: 1,
        };
        assert!(spec.build().is_err());
    }

    #[test]
    fn difference_shock_requires_binary() {
        let mut spec = SyntheticSpec::probit_quasilinear(1.0);
        spec.alternatives.push(AlternativeUtility::linear(0.0));
        assert!(spec.build().is_err());
    }

    #[test]
    fn outside_inverse_inverts_utility() {
        let spec = SyntheticSpec {
            coefficients: vec![ScalarDistribution::LogNormal { mu: 0.0, sigma: 0.3 }],
            alternatives: vec![
                AlternativeUtility::new(
                    Transform::Crra { rho: 0.5 },
                    Affine::new(0.0, vec![1.0]),
                    Affine::constant(0.3),
                ),
                AlternativeUtility::linear(0.0),
            ],
            shock: Shock::Gumbel { scale: 1.0 },
            integration: IntegrationMethod::Auto,
            seed: 1,
        };
        let m = spec.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut eta = vec![0.0; m.eta_dim()];
        for _ in 0..100 {
            m.sample_eta(&mut rng, &mut eta);
            let n = 3.7;
            let u = m.utility(0, n, &eta);
            let back = m.outside_inverse(u, &eta).unwrap();
            assert!((back - n).abs() < 1e-10);
        }
    }
}
