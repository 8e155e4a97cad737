//! Reference models with known structure, used in tests, examples and the
//! bundled CLI inputs.

use crate::choice::{
    Affine, AlternativeUtility, ChoiceModel, IntegrationMethod, QuasilinearModel, Shock, SyntheticModel, SyntheticSpec,
    Transform,
};
use crate::choice::{SplineProbitModel, SplineProbitSpec};
use crate::distributions::ScalarDistribution;
use crate::error::Result;
use crate::spline::SplineBasis;

/// `q_1(p) = Λ(−p)`.
pub fn quasilinear_logit() -> QuasilinearModel {
    QuasilinearModel::logit(0.0, 1.0).expect("valid logit")
}

/// `q_1(p) = Φ(−p)`.
pub fn quasilinear_probit() -> QuasilinearModel {
    QuasilinearModel::single(ScalarDistribution::Normal { mean: 0.0, sd: 1.0 }).expect("valid probit")
}

/// Binary model with a normal inside good:
/// `U_0 = log n`, `U_1 = log n + 0.4 + 0.3 β + ε`, `β ~ N(0, 1)`,
/// `ε ~ N(0, 0.5²)`. Then `q_1 = Φ((log(1 − p/y) + 0.4)/√0.34)`.
pub fn income_effect() -> SyntheticModel {
    SyntheticSpec {
        coefficients: vec![ScalarDistribution::Normal { mean: 0.0, sd: 1.0 }],
        alternatives: vec![
            AlternativeUtility::new(Transform::Log, Affine::constant(1.0), Affine::default()),
            AlternativeUtility::new(Transform::Log, Affine::constant(1.0), Affine::new(0.4, vec![0.3])),
        ],
        shock: Shock::NormalDifference { sd: 0.5 },
        integration: IntegrationMethod::Auto,
        seed: 11,
    }
    .build()
    .expect("valid income-effect fixture")
}

/// Binary model whose good's appeal doubles with spending power:
/// `U_0 = n`, `U_1 = 2n + ε`, `ε` standard logistic, so
/// `q_1 = Λ(y − 2p)`.
pub fn strong_income_effect() -> SyntheticModel {
    SyntheticSpec {
        coefficients: Vec::new(),
        alternatives: vec![
            AlternativeUtility::linear(0.0),
            AlternativeUtility::new(Transform::Linear, Affine::constant(2.0), Affine::default()),
        ],
        shock: Shock::LogisticDifference { scale: 1.0 },
        integration: IntegrationMethod::Auto,
        seed: 12,
    }
    .build()
    .expect("valid strong-income-effect fixture")
}

/// Two inside alternatives with income effects, a random coefficient
/// `β ~ N(0, 1)` and i.i.d. Gumbel shocks:
/// `U_0 = n`, `U_1 = 1.2 n − 0.5 + 0.6 β`, `U_2 = 1.5 n − 1.5 − 0.4 β`.
pub fn multinomial() -> SyntheticModel {
    SyntheticSpec {
        coefficients: vec![ScalarDistribution::Normal { mean: 0.0, sd: 1.0 }],
        alternatives: vec![
            AlternativeUtility::linear(0.0),
            AlternativeUtility::new(Transform::Linear, Affine::constant(1.2), Affine::new(-0.5, vec![0.6])),
            AlternativeUtility::new(Transform::Linear, Affine::constant(1.5), Affine::new(-1.5, vec![-0.4])),
        ],
        shock: Shock::Gumbel { scale: 1.0 },
        integration: IntegrationMethod::Auto,
        seed: 13,
    }
    .build()
    .expect("valid multinomial fixture")
}

/// Probit demand `Φ(−p + 0.5 + 0.25 y)` on incomes `[1, 10]` (clamped
/// outside). Price semi-elasticity falls with income and rises with price.
pub fn price_sensitivity_gradient() -> SplineProbitModel {
    linear_income_probit(-1.0, 0.5, 0.25, 1.0, 10.0).expect("valid probit fixture")
}

/// Spline probit with a linear income index `b_0 + b_1 y` on `[lower, upper]`.
pub fn linear_income_probit(
    price_coefficient: f64,
    intercept: f64,
    slope: f64,
    lower: f64,
    upper: f64,
) -> Result<SplineProbitModel> {
    let basis = SplineBasis::new(lower, upper, 4, 3)?;
    let t = basis.knots().to_vec();
    // coefficients at the Greville abscissae reproduce a linear function
    let coefs = (0..basis.size()).map(|i| intercept + slope * (t[i + 1] + t[i + 2] + t[i + 3]) / 3.0).collect();
    SplineProbitModel::new(SplineProbitSpec {
        basis,
        price_coefficient,
        income_coefficients: coefs,
        covariate_coefficients: Vec::new(),
        covariate_profile: Vec::new(),
    })
}

/// The named fixtures as [`ChoiceModel`]s.
pub fn by_name(name: &str) -> Option<ChoiceModel> {
    Some(match name {
        "quasilinear_logit" => ChoiceModel::Quasilinear(quasilinear_logit()),
        "quasilinear_probit" => ChoiceModel::Quasilinear(quasilinear_probit()),
        "income_effect" => ChoiceModel::Synthetic(income_effect()),
        "strong_income_effect" => ChoiceModel::Synthetic(strong_income_effect()),
        "multinomial" => ChoiceModel::Synthetic(multinomial()),
        "price_sensitivity_gradient" => ChoiceModel::SplineProbit(price_sensitivity_gradient()),
        _ => return None,
    })
}

pub const NAMES: [&str; 6] = [
    "quasilinear_logit",
    "quasilinear_probit",
    "income_effect",
    "strong_income_effect",
    "multinomial",
    "price_sensitivity_gradient",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::ChoiceProbabilities;
    use crate::numeric::{logistic, normal_cdf};

    #[test]
    fn closed_forms_hold() {
        let ie = income_effect();
        for &(p, y) in &[(1.0f64, 5.0f64), (0.5, 2.0), (3.0, 9.0)] {
            let expect = normal_cdf(((1.0 - p / y).ln() + 0.4) / 0.34f64.sqrt());
            let got = ie.choice_probability(1, &[p], y).unwrap();
            assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
            let strong = strong_income_effect().choice_probability(1, &[p], y).unwrap();
            assert!((strong - logistic(y - 2.0 * p)).abs() < 1e-15);
        }
        let g = price_sensitivity_gradient();
        let q = g.choice_probability(1, &[2.0], 4.0).unwrap();
        assert!((q - normal_cdf(-2.0 + 0.5 + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn all_named_fixtures_resolve() {
        for n in NAMES {
            assert!(by_name(n).is_some());
        }
        assert!(by_name("nope").is_none());
    }
}
