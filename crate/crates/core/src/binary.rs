//! Welfare effects of a price subsidy on a single inside good.
//!
//! A subsidy `σ` moves the price from `p̄` to `p̄ − σ`; `σ < 0` is a tax.
//! All functionals are integrals of `q_1` along the diagonal `(p̄ + z, y + z)`.

use serde::{Deserialize, Serialize};

use crate::choice::ChoiceProbabilities;
use crate::error::{Error, Result};
use crate::numeric::richardson_derivative;
use crate::quadrature::integrate;
use crate::welfare::WelfareConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsidyScenario {
    pub base_price: f64,
    pub subsidy: f64,
    pub income: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl SubsidyScenario {
    pub fn new(base_price: f64, subsidy: f64, income: f64, epsilon: f64) -> Result<Self> {
        let s = Self { base_price, subsidy, income, epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.base_price, self.subsidy, self.income, self.epsilon];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("subsidy scenario".into()));
        }
        if !(self.base_price > 0.0) {
            return Err(Error::invalid(format!("base price must be positive, got {}", self.base_price)));
        }
        if self.base_price - self.subsidy < 0.0 {
            return Err(Error::invalid(format!(
                "subsidised price {} must be non-negative",
                self.base_price - self.subsidy
            )));
        }
        if !(self.income > 0.0) {
            return Err(Error::invalid(format!("income must be positive, got {}", self.income)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid("inequality aversion must be non-negative"));
        }
        Ok(())
    }

    pub fn subsidised_price(&self) -> f64 {
        self.base_price - self.subsidy
    }
}

fn require_binary<M: ChoiceProbabilities + ?Sized>(model: &M) -> Result<()> {
    if model.n_inside() != 1 {
        return Err(Error::invalid(format!(
            "binary welfare needs one inside alternative, the model has {}",
            model.n_inside()
        )));
    }
    Ok(())
}

/// `q_1(p, y)`.
pub fn purchase_probability<M: ChoiceProbabilities + ?Sized>(model: &M, price: f64, income: f64) -> Result<f64> {
    let q = model.choice_probability(1, &[price], income)?;
    if !q.is_finite() {
        return Err(Error::NonFinite(format!("q_1 at price {price}, income {income}")));
    }
    Ok(q)
}

fn checked_integral<F>(f: F, upper: f64, config: &WelfareConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let tail = f(upper)?;
    log::debug!("subsidy welfare integral: z_max = {upper}, integrand at cut = {tail:e}");
    if tail.abs() > config.tail_tolerance {
        return Err(Error::TruncationTail { zmax: upper, value: tail, tolerance: config.tail_tolerance });
    }
    Ok(integrate(f, 0.0, upper, &config.quadrature)?.value)
}

/// Change in average social welfare at income `y`:
/// `∫_0^{z_max} (z + y)^{−ε} [q_1(p̄ − σ + z, y + z) − q_1(p̄ + z, y + z)] dz`.
pub fn delta_asw<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    s: &SubsidyScenario,
    config: &WelfareConfig,
) -> Result<f64> {
    require_binary(model)?;
    s.validate()?;
    config.validate()?;
    if s.subsidy == 0.0 {
        return Ok(0.0);
    }
    let (pb, ps, y, eps) = (s.base_price, s.subsidised_price(), s.income, s.epsilon);
    let zmax = config.truncation.zmax(y)?;
    checked_integral(
        |z| {
            let d = purchase_probability(model, ps + z, y + z)? - purchase_probability(model, pb + z, y + z)?;
            Ok(if eps == 0.0 { d } else { (z + y).powf(-eps) * d })
        },
        zmax,
        config,
    )
}

/// Average compensating variation, `∫_0^σ q_1(p̄ − σ + z, y + z) dz` for a
/// subsidy. For a tax (`σ < 0`) it is minus the compensating variation of the
/// reverse move from `p̄ − σ` back to `p̄`: `−∫_0^{|σ|} q_1(p̄ + z, y + z) dz`.
pub fn acv<M: ChoiceProbabilities + ?Sized>(model: &M, s: &SubsidyScenario, config: &WelfareConfig) -> Result<f64> {
    require_binary(model)?;
    s.validate()?;
    config.quadrature.validate()?;
    let (pb, sigma, y) = (s.base_price, s.subsidy, s.income);
    if sigma == 0.0 {
        return Ok(0.0);
    }
    if sigma > 0.0 {
        let r = integrate(|z| purchase_probability(model, pb - sigma + z, y + z), 0.0, sigma, &config.quadrature)?;
        Ok(r.value)
    } else {
        let r = integrate(|z| purchase_probability(model, pb + z, y + z), 0.0, -sigma, &config.quadrature)?;
        Ok(-r.value)
    }
}

/// Average treatment effect on purchase, `q_1(p̄ − σ, y) − q_1(p̄, y)`.
pub fn ate<M: ChoiceProbabilities + ?Sized>(model: &M, s: &SubsidyScenario) -> Result<f64> {
    require_binary(model)?;
    s.validate()?;
    Ok(purchase_probability(model, s.subsidised_price(), s.income)?
        - purchase_probability(model, s.base_price, s.income)?)
}

/// Per-capita fiscal cost `σ q_1(p̄ − σ, y)`; negative for a tax.
pub fn program_cost_at<M: ChoiceProbabilities + ?Sized>(model: &M, s: &SubsidyScenario) -> Result<f64> {
    require_binary(model)?;
    s.validate()?;
    Ok(s.subsidy * purchase_probability(model, s.subsidised_price(), s.income)?)
}

/// Deadweight loss at `ε = 0` and its two-term decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeadweightLoss {
    /// `σ q_1(p̄ − σ, y) − ΔASW`.
    pub dwl: f64,
    pub cost: f64,
    pub delta_asw: f64,
    /// `∫_0^σ [q_1(p̄ − σ, y) − q_1(p̄ − σ + z, y + z)] dz`, non-negative.
    pub price_term: f64,
    /// `∫_0^{z_max} [q_1(p̄ + z, y + z) − q_1(p̄ + z, y + σ + z)] dz`,
    /// non-positive for a normal good.
    pub income_term: f64,
}

pub fn dwl<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    s: &SubsidyScenario,
    config: &WelfareConfig,
) -> Result<DeadweightLoss> {
    require_binary(model)?;
    s.validate()?;
    let s0 = SubsidyScenario { epsilon: 0.0, ..*s };
    let cost = program_cost_at(model, &s0)?;
    let delta = delta_asw(model, &s0, config)?;
    let (pb, ps, sigma, y) = (s.base_price, s.subsidised_price(), s.subsidy, s.income);
    let (price_term, income_term) = if sigma == 0.0 {
        (0.0, 0.0)
    } else {
        if y + sigma <= 0.0 {
            return Err(Error::invalid("tax exceeds income; decomposition undefined"));
        }
        let q_sub = purchase_probability(model, ps, y)?;
        let price_term =
            integrate(|z| Ok(q_sub - purchase_probability(model, ps + z, y + z)?), 0.0, sigma, &config.quadrature)?
                .value;
        let zmax = config.truncation.zmax(y)?;
        let income_term = checked_integral(
            |z| Ok(purchase_probability(model, pb + z, y + z)? - purchase_probability(model, pb + z, y + sigma + z)?),
            zmax,
            config,
        )?;
        (price_term, income_term)
    };
    Ok(DeadweightLoss { dwl: cost - delta, cost, delta_asw: delta, price_term, income_term })
}

/// Exact net benefit `ΔASW − σ q_1(p̄ − σ, y)` at `ε = 0`, i.e. `−DWL`.
pub fn net_benefit<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    s: &SubsidyScenario,
    config: &WelfareConfig,
) -> Result<f64> {
    let s0 = SubsidyScenario { epsilon: 0.0, ..*s };
    Ok(delta_asw(model, &s0, config)? - program_cost_at(model, &s0)?)
}

/// Marginal value of public funds at the status quo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mvpf {
    /// Marginal willingness to pay, `−∫_0^{z_max} ∂_p q_1(p̄ + z, y + z) dz`.
    pub numerator: f64,
    /// Marginal cost, `q_1(p̄, y)`.
    pub denominator: f64,
    pub ratio: f64,
}

/// Central-difference price derivative of `q_1` with step `h`, one
/// Richardson extrapolation.
fn price_slope<M: ChoiceProbabilities + ?Sized>(model: &M, price: f64, income: f64, h: f64) -> Result<f64> {
    richardson_derivative(|p| purchase_probability(model, p, income), price, h)
}

pub fn mvpf<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    base_price: f64,
    income: f64,
    config: &WelfareConfig,
) -> Result<Mvpf> {
    require_binary(model)?;
    SubsidyScenario::new(base_price, 0.0, income, 0.0)?;
    config.validate()?;
    let denominator = purchase_probability(model, base_price, income)?;
    if denominator < 1e-10 {
        return Err(Error::invalid(format!(
            "status-quo purchase probability {denominator:e} is too small for the MVPF ratio"
        )));
    }
    let h = 1e-4 * base_price.max(1.0);
    if base_price - h <= 0.0 {
        return Err(Error::invalid("base price too close to zero for a central difference"));
    }
    let zmax = config.truncation.zmax(income)?;
    let numerator = -checked_integral(|z| price_slope(model, base_price + z, income + z, h), zmax, config)?;
    Ok(Mvpf { numerator, denominator, ratio: numerator / denominator })
}

/// First-order net-benefit approximation `σ (numerator − denominator)`.
pub fn mvpf_linear_net_benefit<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    base_price: f64,
    income: f64,
    subsidy: f64,
    config: &WelfareConfig,
) -> Result<f64> {
    let m = mvpf(model, base_price, income, config)?;
    Ok(subsidy * (m.numerator - m.denominator))
}

/// One row of a subsidy sweep at a fixed income.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsidyRow {
    pub subsidy: f64,
    pub delta_asw: f64,
    pub acv: f64,
    pub ate: f64,
    pub cost: f64,
    pub dwl: f64,
    pub mvpf_linear: f64,
}

/// Welfare functionals over a grid of subsidies (`ε = 0`).
pub fn subsidy_sweep<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    base_price: f64,
    income: f64,
    subsidies: &[f64],
    config: &WelfareConfig,
) -> Result<Vec<SubsidyRow>> {
    let m = mvpf(model, base_price, income, config)?;
    subsidies
        .iter()
        .map(|&sigma| {
            let s = SubsidyScenario::new(base_price, sigma, income, 0.0)?;
            let d = dwl(model, &s, config)?;
            Ok(SubsidyRow {
                subsidy: sigma,
                delta_asw: d.delta_asw,
                acv: acv(model, &s, config)?,
                ate: ate(model, &s)?,
                cost: d.cost,
                dwl: d.dwl,
                mvpf_linear: sigma * (m.numerator - m.denominator),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::QuasilinearModel;
    use crate::distributions::ScalarDistribution;
    use crate::numeric::logistic;

    fn logit() -> QuasilinearModel {
        QuasilinearModel::logit(0.0, 1.0).unwrap()
    }

    fn cfg() -> WelfareConfig {
        WelfareConfig::income_ceiling(80.0)
    }

    #[test]
    fn zero_subsidy_is_neutral() {
        let s = SubsidyScenario::new(1.0, 0.0, 5.0, 0.0).unwrap();
        assert_eq!(delta_asw(&logit(), &s, &cfg()).unwrap(), 0.0);
        assert_eq!(acv(&logit(), &s, &cfg()).unwrap(), 0.0);
        assert_eq!(ate(&logit(), &s).unwrap(), 0.0);
        assert_eq!(dwl(&logit(), &s, &cfg()).unwrap().dwl, 0.0);
    }

    #[test]
    fn logit_closed_forms() {
        let s = SubsidyScenario::new(1.0, 1.0, 5.0, 0.0).unwrap();
        let expect = 2f64.ln() - (1.0 + (-1f64).exp()).ln();
        assert!((delta_asw(&logit(), &s, &cfg()).unwrap() - expect).abs() < 1e-8);
        assert!((acv(&logit(), &s, &cfg()).unwrap() - expect).abs() < 1e-10);
        assert!((ate(&logit(), &s).unwrap() - (0.5 - logistic(-1.0))).abs() < 1e-15);
        let d = dwl(&logit(), &s, &cfg()).unwrap();
        assert!((d.dwl - (0.5 - expect)).abs() < 1e-8);
        assert!(d.price_term >= 0.0);
        assert!(d.income_term.abs() < 1e-12);
        assert!((d.price_term + d.income_term - d.dwl).abs() < 1e-8);
    }

    #[test]
    fn tax_lowers_welfare_and_raises_revenue() {
        let s = SubsidyScenario::new(1.0, -0.5, 5.0, 0.0).unwrap();
        assert!(delta_asw(&logit(), &s, &cfg()).unwrap() < 0.0);
        assert!(program_cost_at(&logit(), &s).unwrap() < 0.0);
        let a = acv(&logit(), &s, &cfg()).unwrap();
        let d = delta_asw(&logit(), &s, &cfg()).unwrap();
        assert!((a - d).abs() < 1e-8);
    }

    #[test]
    fn quasilinear_mvpf_is_one() {
        let m = mvpf(&logit(), 1.0, 5.0, &cfg()).unwrap();
        assert!((m.ratio - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn flat_demand_has_zero_mvpf() {
        let m = QuasilinearModel::single(ScalarDistribution::Degenerate { value: 500.0 }).unwrap();
        let r = mvpf(&m, 1.0, 5.0, &cfg()).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn rejects_non_binary_and_bad_scenarios() {
        assert!(SubsidyScenario::new(1.0, 1.5, 5.0, 0.0).is_err());
        assert!(SubsidyScenario::new(1.0, 0.5, -5.0, 0.0).is_err());
        let mnl = QuasilinearModel::new(crate::choice::TasteOffsets::MultinomialLogit {
            intercepts: vec![0.0, 0.0],
            scale: 1.0,
        })
        .unwrap();
        let s = SubsidyScenario::new(1.0, 0.5, 5.0, 0.0).unwrap();
        assert!(ate(&mnl, &s).is_err());
    }
}
