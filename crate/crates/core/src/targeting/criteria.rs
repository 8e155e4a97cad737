use serde::{Deserialize, Serialize};

use crate::binary::{acv, ate, delta_asw, purchase_probability, SubsidyScenario};
use crate::choice::ChoiceProbabilities;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::welfare::WelfareConfig;

/// Per-income benefit `B(p̄, σ, y)` the planner maximises.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum Criterion {
    /// Change in purchase probability.
    Ate,
    /// Average compensating variation.
    Acv,
    /// Change in average social welfare with inequality aversion `ε`.
    Casw { epsilon: f64 },
}

impl Criterion {
    pub fn validate(&self) -> Result<()> {
        match self {
            Criterion::Casw { epsilon } if !(epsilon.is_finite() && *epsilon >= 0.0) => {
                Err(Error::invalid(format!("inequality aversion must be non-negative, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Criterion::Ate => "ate".into(),
            Criterion::Acv => "acv".into(),
            Criterion::Casw { epsilon } => format!("casw(eps={epsilon})"),
        }
    }
}

/// `B(σ)` at one income.
pub fn benefit<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    criterion: Criterion,
    base_price: f64,
    income: f64,
    subsidy: f64,
    cfg: &WelfareConfig,
) -> Result<f64> {
    let eps = match criterion {
        Criterion::Casw { epsilon } => epsilon,
        _ => 0.0,
    };
    let s = SubsidyScenario::new(base_price, subsidy, income, eps)?;
    match criterion {
        Criterion::Ate => ate(model, &s),
        Criterion::Acv => acv(model, &s, cfg),
        Criterion::Casw { .. } => delta_asw(model, &s, cfg),
    }
}

fn dq_dp<M: ChoiceProbabilities + ?Sized>(model: &M, price: f64, income: f64) -> Result<f64> {
    let d = model.price_derivative(1, 1, &[price], income)?;
    if !d.is_finite() {
        return Err(Error::NonFinite(format!("price derivative at ({price}, {income})")));
    }
    Ok(d)
}

/// `∂B/∂σ` at one income.
pub fn benefit_slope<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    criterion: Criterion,
    base_price: f64,
    income: f64,
    subsidy: f64,
    cfg: &WelfareConfig,
) -> Result<f64> {
    let (pb, y, s) = (base_price, income, subsidy);
    if pb - s < 0.0 {
        return Err(Error::invalid(format!("subsidy {s} exceeds base price {pb}")));
    }
    match criterion {
        Criterion::Ate => Ok(-dq_dp(model, pb - s, y)?),
        Criterion::Acv => {
            if s <= 0.0 {
                purchase_probability(model, pb - s, y - s)
            } else {
                let inner = integrate(|z| dq_dp(model, pb - s + z, y + z), 0.0, s, &cfg.quadrature)?;
                Ok(purchase_probability(model, pb, y + s)? - inner.value)
            }
        }
        Criterion::Casw { epsilon } => {
            let zmax = cfg.truncation.zmax(y)?;
            let r = integrate(
                |z| {
                    let d = dq_dp(model, pb - s + z, y + z)?;
                    Ok(if epsilon == 0.0 { d } else { (z + y).powf(-epsilon) * d })
                },
                0.0,
                zmax,
                &cfg.quadrature,
            )?;
            Ok(-r.value)
        }
    }
}

/// Values and `σ`-derivatives of benefit and cost at one income.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeValues {
    pub benefit: f64,
    pub benefit_slope: f64,
    pub benefit_curvature: f64,
    pub cost: f64,
    pub cost_slope: f64,
    pub cost_curvature: f64,
}

fn cost_slope<M: ChoiceProbabilities + ?Sized>(model: &M, pb: f64, y: f64, s: f64) -> Result<f64> {
    Ok(purchase_probability(model, pb - s, y)? - s * dq_dp(model, pb - s, y)?)
}

/// Benefit and cost with first derivatives and, when `curvature` is set,
/// second derivatives by central differences of the first (backward near
/// the zero-price floor).
pub fn node_values<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    criterion: Criterion,
    base_price: f64,
    income: f64,
    subsidy: f64,
    cfg: &WelfareConfig,
    curvature: bool,
) -> Result<NodeValues> {
    let (pb, y, s) = (base_price, income, subsidy);
    let mut v = NodeValues {
        benefit: benefit(model, criterion, pb, y, s, cfg)?,
        benefit_slope: benefit_slope(model, criterion, pb, y, s, cfg)?,
        cost: s * purchase_probability(model, pb - s, y)?,
        cost_slope: cost_slope(model, pb, y, s)?,
        ..Default::default()
    };
    if curvature {
        let h = 1e-4 * pb.max(1.0);
        let (lo, hi, mid_weight) = if pb - s - h >= 0.0 { (s - h, s + h, 2.0 * h) } else { (s - h, s, h) };
        let db = |x: f64| benefit_slope(model, criterion, pb, y, x, cfg);
        let dc = |x: f64| cost_slope(model, pb, y, x);
        v.benefit_curvature = (db(hi)? - db(lo)?) / mid_weight;
        v.cost_curvature = (dc(hi)? - dc(lo)?) / mid_weight;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::welfare::Truncation;

    fn cfg() -> WelfareConfig {
        WelfareConfig::new(Truncation::Fixed(40.0))
    }

    #[test]
    fn slopes_match_differences() {
        let m = fixtures::price_sensitivity_gradient();
        let c = cfg();
        for crit in [Criterion::Ate, Criterion::Acv, Criterion::Casw { epsilon: 0.0 }, Criterion::Casw { epsilon: 0.7 }]
        {
            for s in [-0.6, 0.3, 0.9] {
                let h = 1e-5;
                let fd = (benefit(&m, crit, 2.0, 4.0, s + h, &c).unwrap()
                    - benefit(&m, crit, 2.0, 4.0, s - h, &c).unwrap())
                    / (2.0 * h);
                let an = benefit_slope(&m, crit, 2.0, 4.0, s, &c).unwrap();
                assert!((fd - an).abs() < 1e-6, "{crit:?} at {s}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn quasilinear_casw_slope_is_demand() {
        let m = fixtures::quasilinear_logit();
        let v = benefit_slope(&m, Criterion::Casw { epsilon: 0.0 }, 1.0, 3.0, 0.4, &cfg()).unwrap();
        let q = purchase_probability(&m, 0.6, 3.0).unwrap();
        assert!((v - q).abs() < 1e-8);
    }
}
