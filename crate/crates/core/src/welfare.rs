//! Distribution of money-metric indirect utility `W(p, y, η)` and the social
//! welfare functionals built on it.
//!
//! At a budget point `(p, y)`, `Pr[W ≤ c] = 0` for `c < y` and
//! `q_0(c − y + p_1, …, c − y + p_J; c)` otherwise, so everything here is a
//! functional of the outside-option probability. Half-line integrals over
//! `z = c − y` are truncated at `z_max` (by default the distance from `y` to an
//! income ceiling) and refused when the integrand at the cut is not negligible.

use serde::{Deserialize, Serialize};

use crate::choice::{check_budget, BudgetPoint, ChoiceProbabilities};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};

/// Where the `z`-integrals stop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum Truncation {
    /// `z_max = y_max − y`.
    IncomeCeiling(f64),
    /// A fixed `z_max` regardless of income.
    Fixed(f64),
}

impl Truncation {
    pub fn zmax(&self, income: f64) -> Result<f64> {
        match *self {
            Truncation::IncomeCeiling(ymax) => {
                if !(ymax.is_finite() && ymax > income) {
                    return Err(Error::invalid(format!("income {income} is not below the income ceiling {ymax}")));
                }
                Ok(ymax - income)
            }
            Truncation::Fixed(z) => {
                if !(z.is_finite() && z > 0.0) {
                    return Err(Error::invalid(format!("truncation point must be positive, got {z}")));
                }
                Ok(z)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareConfig {
    pub truncation: Truncation,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Largest integrand value tolerated at `z_max`.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn default_tail_tolerance() -> f64 {
    1e-4
}

impl WelfareConfig {
    pub fn new(truncation: Truncation) -> Self {
        Self { truncation, quadrature: QuadratureConfig::default(), tail_tolerance: 1e-4 }
    }

    pub fn income_ceiling(ymax: f64) -> Self {
        Self::new(Truncation::IncomeCeiling(ymax))
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::invalid("tail tolerance must be positive"));
        }
        Ok(())
    }
}

fn check_point<M: ChoiceProbabilities + ?Sized>(model: &M, point: &BudgetPoint) -> Result<()> {
    if point.prices.len() != model.n_inside() {
        return Err(Error::invalid(format!(
            "model has {} inside alternatives but {} prices were given",
            model.n_inside(),
            point.prices.len()
        )));
    }
    point.validate()
}

/// Probability that `W` exceeds `y + z`: `1 − q_0(p + z, y + z)`, summed over
/// the inside alternatives to keep precision in the tail.
pub fn survival<M: ChoiceProbabilities + ?Sized>(model: &M, prices: &[f64], income: f64, z: f64) -> Result<f64> {
    let shifted: Vec<f64> = prices.iter().map(|p| p + z).collect();
    let mut q = vec![0.0; model.n_inside() + 1];
    model.probabilities_into(&shifted, income + z, &mut q)?;
    let s: f64 = q[1..].iter().sum();
    if !s.is_finite() {
        return Err(Error::NonFinite(format!("choice probabilities at z = {z}")));
    }
    Ok(s.clamp(0.0, 1.0))
}

/// `Pr[W(p, y, η) ≤ c]`.
pub fn welfare_cdf<M: ChoiceProbabilities + ?Sized>(model: &M, point: &BudgetPoint, c: f64) -> Result<f64> {
    check_point(model, point)?;
    if !c.is_finite() {
        return Err(Error::invalid(format!("CDF argument must be finite, got {c}")));
    }
    if c < point.income {
        return Ok(0.0);
    }
    Ok(1.0 - survival(model, &point.prices, point.income, c - point.income)?)
}

/// `Pr[W < c]` for models whose `q_0` is continuous in `(p, y)`: zero up to
/// and including `y`, the CDF itself above.
pub fn welfare_cdf_left<M: ChoiceProbabilities + ?Sized>(model: &M, point: &BudgetPoint, c: f64) -> Result<f64> {
    if c <= point.income {
        check_point(model, point)?;
        return Ok(0.0);
    }
    welfare_cdf(model, point, c)
}

/// The CDF of `W` at one budget point, as a reusable evaluator.
pub struct WelfareCdf<'a, M: ChoiceProbabilities + ?Sized> {
    model: &'a M,
    point: BudgetPoint,
}

impl<'a, M: ChoiceProbabilities + ?Sized> WelfareCdf<'a, M> {
    pub fn new(model: &'a M, point: BudgetPoint) -> Result<Self> {
        check_point(model, &point)?;
        Ok(Self { model, point })
    }

    pub fn point(&self) -> &BudgetPoint {
        &self.point
    }

    pub fn eval(&self, c: f64) -> Result<f64> {
        welfare_cdf(self.model, &self.point, c)
    }

    /// Size of the mass point at `c = y`.
    pub fn mass_at_income(&self) -> Result<f64> {
        self.eval(self.point.income)
    }

    /// Right-continuous quantile `inf{c : F(c) ≥ u}` by bisection on
    /// `[y, y + z_max]`.
    pub fn quantile(&self, u: f64, zmax: f64, tol: f64) -> Result<f64> {
        let y = self.point.income;
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("quantile level {u} outside [0, 1]")));
        }
        if self.eval(y)? >= u {
            return Ok(y);
        }
        let mut lo = y;
        let mut hi = y + zmax;
        if self.eval(hi)? < u {
            return Ok(hi);
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid)? >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn truncated_integral<M, G>(model: &M, point: &BudgetPoint, config: &WelfareConfig, weight: G) -> Result<f64>
where
    M: ChoiceProbabilities + ?Sized,
    G: Fn(f64, f64) -> f64,
{
    config.validate()?;
    let zmax = config.truncation.zmax(point.income)?;
    let y = point.income;
    let tail = weight(zmax, survival(model, &point.prices, y, zmax)?);
    log::debug!("truncated welfare integral: z_max = {zmax}, integrand at cut = {tail:e}");
    if tail.abs() > config.tail_tolerance {
        return Err(Error::TruncationTail { zmax, value: tail, tolerance: config.tail_tolerance });
    }
    let r = integrate(|z| Ok(weight(z, survival(model, &point.prices, y, z)?)), 0.0, zmax, &config.quadrature)?;
    Ok(r.value)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("inequality aversion must lie in [0, 1], got {epsilon}")));
    }
    Ok(())
}

/// Average social welfare `E[W^{1−ε}/(1−ε)]`, with `E[log W]` at `ε = 1`.
pub fn asw<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    epsilon: f64,
    config: &WelfareConfig,
) -> Result<f64> {
    check_point(model, point)?;
    check_epsilon(epsilon)?;
    if epsilon == 1.0 {
        return asw_epsilon_one(model, point, config);
    }
    let y = point.income;
    let integral = truncated_integral(model, point, config, |z, s| (z + y).powf(-epsilon) * s)?;
    Ok(y.powf(1.0 - epsilon) / (1.0 - epsilon) + integral)
}

/// `E[log W] = log y + ∫ (z + y)^{-1} [1 − q_0(p + z, y + z)] dz`.
pub fn asw_epsilon_one<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    config: &WelfareConfig,
) -> Result<f64> {
    check_point(model, point)?;
    let y = point.income;
    let integral = truncated_integral(model, point, config, |z, s| s / (z + y))?;
    Ok(y.ln() + integral)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "index", rename_all = "snake_case")]
pub enum InequalityIndex {
    Gini,
    Atkinson { epsilon: f64 },
}

/// Gini coefficient of `W` from the survival function `S(z) = Pr[W > y + z]`:
/// `E[W] = y + ∫S` and `E[min(W, W')] = y + ∫S²`, so
/// `Gini = 1 − (y + ∫S²)/(y + ∫S)`.
pub fn gini<M: ChoiceProbabilities + ?Sized>(model: &M, point: &BudgetPoint, config: &WelfareConfig) -> Result<f64> {
    check_point(model, point)?;
    let y = point.income;
    let mean = y + truncated_integral(model, point, config, |_, s| s)?;
    let min_pair = y + truncated_integral(model, point, config, |_, s| s * s)?;
    Ok((1.0 - min_pair / mean).max(0.0))
}

/// Gini by the midpoint rule on the quantile function,
/// `Gini = ∫(2u − 1) Q(u) du / E[W]`, with quantiles from bisection.
pub fn gini_by_quantiles<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    config: &WelfareConfig,
    levels: usize,
    tol: f64,
) -> Result<f64> {
    if levels == 0 {
        return Err(Error::invalid("quantile rule needs at least one level"));
    }
    let cdf = WelfareCdf::new(model, point.clone())?;
    let zmax = config.truncation.zmax(point.income)?;
    let mut mean = 0.0;
    let mut weighted = 0.0;
    for k in 0..levels {
        let u = (k as f64 + 0.5) / levels as f64;
        let q = cdf.quantile(u, zmax, tol)?;
        mean += q;
        weighted += (2.0 * u - 1.0) * q;
    }
    Ok((weighted / mean).max(0.0))
}

/// Atkinson index `1 − EDE/E[W]`, where the equally distributed equivalent
/// solves `EDE^{1−ε}/(1−ε) = ASW(ε)` (`exp E[log W]` at `ε = 1`).
pub fn atkinson<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    epsilon: f64,
    config: &WelfareConfig,
) -> Result<f64> {
    check_point(model, point)?;
    check_epsilon(epsilon)?;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let mean = asw(model, point, 0.0, config)?;
    let value = asw(model, point, epsilon, config)?;
    let ede = if epsilon == 1.0 { value.exp() } else { ((1.0 - epsilon) * value).powf(1.0 / (1.0 - epsilon)) };
    Ok((1.0 - ede / mean).clamp(0.0, 1.0))
}

pub fn welfare_inequality_index<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    index: InequalityIndex,
    config: &WelfareConfig,
) -> Result<f64> {
    match index {
        InequalityIndex::Gini => gini(model, point, config),
        InequalityIndex::Atkinson { epsilon } => atkinson(model, point, epsilon, config),
    }
}

/// `(c, Pr[W ≤ c])` pairs on `points` equally spaced values of `c` in
/// `[y, y + z_max]`.
pub fn cdf_grid<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    point: &BudgetPoint,
    zmax: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    check_budget(&point.prices, point.income)?;
    if points < 2 {
        return Err(Error::invalid("CDF grid needs at least two points"));
    }
    (0..points)
        .map(|k| {
            let c = point.income + zmax * k as f64 / (points - 1) as f64;
            Ok((c, welfare_cdf(model, point, c)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::QuasilinearModel;
    use crate::distributions::ScalarDistribution;
    use crate::numeric::logistic;

    struct NeverBuys;
    impl ChoiceProbabilities for NeverBuys {
        fn n_inside(&self) -> usize {
            1
        }
        fn probabilities_into(&self, _: &[f64], _: f64, out: &mut [f64]) -> Result<()> {
            out[0] = 1.0;
            out[1] = 0.0;
            Ok(())
        }
    }

    fn logit() -> QuasilinearModel {
        QuasilinearModel::logit(0.0, 1.0).unwrap()
    }

    #[test]
    fn cdf_vanishes_below_income() {
        let p = BudgetPoint::single(1.0, 10.0).unwrap();
        assert_eq!(welfare_cdf(&logit(), &p, 9.0).unwrap(), 0.0);
        let c = 11.3;
        let expect = logistic(c - 10.0 + 1.0);
        assert!((welfare_cdf(&logit(), &p, c).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn degenerate_offset_gives_step() {
        let m = QuasilinearModel::single(ScalarDistribution::Degenerate { value: 3.0 }).unwrap();
        let p = BudgetPoint::single(1.0, 5.0).unwrap();
        assert_eq!(welfare_cdf(&m, &p, 6.99).unwrap(), 0.0);
        assert_eq!(welfare_cdf(&m, &p, 7.0).unwrap(), 1.0);
    }

    #[test]
    fn log_sum_value() {
        let p = BudgetPoint::single(0.0, 5.0).unwrap();
        let cfg = WelfareConfig::income_ceiling(60.0);
        let v = asw(&logit(), &p, 0.0, &cfg).unwrap();
        assert!((v - (5.0 + 2f64.ln())).abs() < 1e-9, "{v}");
    }

    #[test]
    fn never_buying_gives_income() {
        let p = BudgetPoint::single(1.0, 4.0).unwrap();
        let cfg = WelfareConfig::income_ceiling(20.0);
        assert!((asw(&NeverBuys, &p, 0.0, &cfg).unwrap() - 4.0).abs() < 1e-15);
        assert!((asw_epsilon_one(&NeverBuys, &p, &cfg).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(gini(&NeverBuys, &p, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_gain_gives_log_of_shifted_income() {
        let m = QuasilinearModel::single(ScalarDistribution::Degenerate { value: 2.0 }).unwrap();
        let y = std::f64::consts::E - 1.0;
        let p = BudgetPoint::single(1.0, y).unwrap();
        let cfg = WelfareConfig::income_ceiling(10.0);
        assert!((asw_epsilon_one(&m, &p, &cfg).unwrap() - 1.0).abs() < 1e-9);
        assert!(gini(&m, &p, &cfg).unwrap() < 1e-9);
    }

    #[test]
    fn two_point_distribution_gini() {
        let m =
            QuasilinearModel::single(ScalarDistribution::Discrete { values: vec![0.0, 20.0], probs: vec![0.5, 0.5] })
                .unwrap();
        let p = BudgetPoint::single(0.0, 10.0).unwrap();
        let cfg = WelfareConfig::income_ceiling(40.0);
        assert!((gini(&m, &p, &cfg).unwrap() - 0.25).abs() < 1e-9);
        let by_q = gini_by_quantiles(&m, &p, &cfg, 512, 1e-9).unwrap();
        assert!((by_q - 0.25).abs() < 1e-6, "{by_q}");
        assert_eq!(atkinson(&m, &p, 0.0, &cfg).unwrap(), 0.0);
        // EDE at ε = 1 is the geometric mean sqrt(300)
        let a1 = atkinson(&m, &p, 1.0, &cfg).unwrap();
        assert!((a1 - (1.0 - 300f64.sqrt() / 20.0)).abs() < 1e-7, "{a1}");
    }

    #[test]
    fn truncation_tail_is_enforced() {
        let p = BudgetPoint::single(0.0, 5.0).unwrap();
        let cfg = WelfareConfig::income_ceiling(8.0);
        assert!(matches!(asw(&logit(), &p, 0.0, &cfg), Err(Error::TruncationTail { .. })));
    }

    #[test]
    fn quantile_is_right_continuous_at_mass_point() {
        let p = BudgetPoint::single(1.0, 10.0).unwrap();
        let m = logit();
        let cdf = WelfareCdf::new(&m, p).unwrap();
        let mass = cdf.mass_at_income().unwrap();
        assert_eq!(cdf.quantile(0.5 * mass, 50.0, 1e-9).unwrap(), 10.0);
        let q = cdf.quantile(0.9, 50.0, 1e-9).unwrap();
        assert!((cdf.eval(q).unwrap() - 0.9).abs() < 1e-8);
    }
}
