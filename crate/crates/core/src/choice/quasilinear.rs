//! Utility additive in the numeraire: `U_j(n, η) = n + h_j(η)`.
//!
//! Choice probabilities depend on prices only.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::ChoiceProbabilities;
use crate::distributions::{open_unit, ScalarDistribution};
use crate::error::{Error, Result};
use crate::oracle::RandomUtility;

/// Law of a money-valued taste offset `h_1(η) − h_0(η)`.
pub type OffsetDistribution = ScalarDistribution;

/// Distribution of the offsets `h_j − h_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum TasteOffsets {
    /// One inside alternative with an arbitrary offset law. The good is bought
    /// when the offset strictly exceeds the price.
    Single { offset: OffsetDistribution },
    /// `J` alternatives with offsets `a_j + s(ε_j − ε_0)`, `ε` i.i.d. Gumbel.
    MultinomialLogit { intercepts: Vec<f64>, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuasilinearSpec", into = "QuasilinearSpec")]
pub struct QuasilinearModel {
    offsets: TasteOffsets,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasilinearSpec {
    pub taste_offsets: TasteOffsets,
}

impl TryFrom<QuasilinearSpec> for QuasilinearModel {
    type Error = Error;
    fn try_from(spec: QuasilinearSpec) -> Result<Self> {
        QuasilinearModel::new(spec.taste_offsets)
    }
}

impl From<QuasilinearModel> for QuasilinearSpec {
    fn from(m: QuasilinearModel) -> Self {
        QuasilinearSpec { taste_offsets: m.offsets }
    }
}

impl QuasilinearModel {
    pub fn new(offsets: TasteOffsets) -> Result<Self> {
        match &offsets {
            TasteOffsets::Single { offset } => offset.validate()?,
            TasteOffsets::MultinomialLogit { intercepts, scale } => {
                if intercepts.is_empty() {
                    return Err(Error::invalid("multinomial logit needs at least one intercept"));
                }
                if !intercepts.iter().all(|a| a.is_finite()) || !scale.is_finite() {
                    return Err(Error::NonFinite("multinomial logit parameters".into()));
                }
                if *scale <= 0.0 {
                    return Err(Error::invalid("multinomial logit scale must be positive"));
                }
            }
        }
        Ok(Self { offsets })
    }

    pub fn single(offset: OffsetDistribution) -> Result<Self> {
        Self::new(TasteOffsets::Single { offset })
    }

    /// Binary logit `q_1 = Λ((α − p)/s)`.
    pub fn logit(alpha: f64, scale: f64) -> Result<Self> {
        Self::single(ScalarDistribution::Logistic { location: alpha, scale })
    }

    pub fn offsets(&self) -> &TasteOffsets {
        &self.offsets
    }
}

impl ChoiceProbabilities for QuasilinearModel {
    fn n_inside(&self) -> usize {
        match &self.offsets {
            TasteOffsets::Single { .. } => 1,
            TasteOffsets::MultinomialLogit { intercepts, .. } => intercepts.len(),
        }
    }

    fn probabilities_into(&self, prices: &[f64], _income: f64, out: &mut [f64]) -> Result<()> {
        match &self.offsets {
            TasteOffsets::Single { offset } => {
                out[0] = offset.cdf(prices[0]);
                out[1] = offset.sf(prices[0]);
            }
            TasteOffsets::MultinomialLogit { intercepts, scale } => {
                let v: Vec<f64> = intercepts.iter().zip(prices).map(|(a, p)| (a - p) / scale).collect();
                let m = v.iter().fold(0.0_f64, |m, x| m.max(*x));
                let mut total = (-m).exp();
                out[0] = total;
                for (o, x) in out[1..].iter_mut().zip(&v) {
                    *o = (x - m).exp();
                    total += *o;
                }
                out.iter_mut().for_each(|o| *o /= total);
            }
        }
        Ok(())
    }

    fn price_derivative(&self, j: usize, k: usize, prices: &[f64], income: f64) -> Result<f64> {
        let n = ChoiceProbabilities::n_inside(self);
        if j > n {
            return Err(Error::InvalidAlternative { index: j, inside: n });
        }
        if k == 0 || k > n {
            return Err(Error::InvalidAlternative { index: k, inside: n });
        }
        match &self.offsets {
            TasteOffsets::Single { offset } => {
                let d = offset.density(prices[0]);
                Ok(if j == 0 { d } else { -d })
            }
            TasteOffsets::MultinomialLogit { scale, .. } => {
                let mut q = vec![0.0; n + 1];
                self.probabilities_into(prices, income, &mut q)?;
                let own = if j == k { 1.0 } else { 0.0 };
                Ok(-q[j] * (own - q[k]) / scale)
            }
        }
    }

    fn income_derivative(&self, _j: usize, _prices: &[f64], _income: f64) -> Result<f64> {
        Ok(0.0)
    }
}

impl RandomUtility for QuasilinearModel {
    fn n_inside(&self) -> usize {
        ChoiceProbabilities::n_inside(self)
    }

    fn eta_dim(&self) -> usize {
        match &self.offsets {
            TasteOffsets::Single { .. } => 1,
            TasteOffsets::MultinomialLogit { intercepts, .. } => intercepts.len() + 1,
        }
    }

    fn sample_eta(&self, rng: &mut dyn RngCore, eta: &mut [f64]) {
        match &self.offsets {
            TasteOffsets::Single { offset } => eta[0] = offset.sample(rng),
            TasteOffsets::MultinomialLogit { scale, .. } => {
                for e in eta.iter_mut() {
                    *e = -scale * (-open_unit(rng).ln()).ln();
                }
            }
        }
    }

    fn utility(&self, j: usize, numeraire: f64, eta: &[f64]) -> f64 {
        match &self.offsets {
            TasteOffsets::Single { .. } => {
                if j == 0 {
                    numeraire
                } else {
                    numeraire + eta[0]
                }
            }
            TasteOffsets::MultinomialLogit { intercepts, .. } => {
                if j == 0 {
                    numeraire + eta[0]
                } else {
                    numeraire + intercepts[j - 1] + eta[j]
                }
            }
        }
    }

    fn outside_inverse(&self, u: f64, eta: &[f64]) -> Option<f64> {
        Some(match &self.offsets {
            TasteOffsets::Single { .. } => u,
            TasteOffsets::MultinomialLogit { .. } => u - eta[0],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{logistic, normal_cdf};

    fn q1(m: &QuasilinearModel, p: f64, y: f64) -> f64 {
        m.choice_probability(1, &[p], y).unwrap()
    }

    #[test]
    fn logit_at_zero_index_is_half() {
        let m = QuasilinearModel::logit(0.0, 1.0).unwrap();
        assert_eq!(q1(&m, 0.0, 3.0), 0.5);
        for p in [0.0, 1.0, 5.0] {
            let q0 = m.choice_probability(0, &[p], 3.0).unwrap();
            assert!((q0 + q1(&m, p, 3.0) - 1.0).abs() < 1e-15);
            assert_eq!(q1(&m, p, 1.0), q1(&m, p, 100.0));
            assert!((q1(&m, p, 10.0) - logistic(-p)).abs() < 1e-16);
        }
    }

    #[test]
    fn degenerate_offset_is_a_strict_step() {
        let m = QuasilinearModel::single(ScalarDistribution::Degenerate { value: 2.0 }).unwrap();
        assert_eq!(q1(&m, 1.999, 1.0), 1.0);
        assert_eq!(q1(&m, 2.0, 1.0), 0.0);
        assert_eq!(q1(&m, 3.0, 1.0), 0.0);
        assert_eq!(m.price_derivative(1, 1, &[1.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn normal_offset_symmetry() {
        let m = QuasilinearModel::single(ScalarDistribution::Normal { mean: 1.0, sd: 1.0 }).unwrap();
        assert_eq!(q1(&m, 1.0, 7.0), 0.5);
        assert!((q1(&m, 0.3, 7.0) - normal_cdf(0.7)).abs() < 1e-15);
    }

    #[test]
    fn infinite_price_removes_alternative() {
        let m = QuasilinearModel::logit(0.0, 1.0).unwrap();
        assert_eq!(q1(&m, f64::INFINITY, 1.0), 0.0);
        let mnl =
            QuasilinearModel::new(TasteOffsets::MultinomialLogit { intercepts: vec![1.0, 2.0], scale: 1.0 }).unwrap();
        let mut q = [0.0; 3];
        mnl.probabilities_into(&[f64::INFINITY, 1.0], 1.0, &mut q).unwrap();
        assert_eq!(q[1], 0.0);
        assert!((q[2] - logistic(1.0)).abs() < 1e-15);
    }

    #[test]
    fn multinomial_derivatives_match_differences() {
        let mnl =
            QuasilinearModel::new(TasteOffsets::MultinomialLogit { intercepts: vec![0.5, -0.3], scale: 0.7 }).unwrap();
        let p = [0.4, 0.9];
        for j in 0..3 {
            for k in 1..3 {
                let h = 1e-6;
                let mut up = p;
                let mut dn = p;
                up[k - 1] += h;
                dn[k - 1] -= h;
                let fd = (mnl.choice_probability(j, &up, 1.0).unwrap() - mnl.choice_probability(j, &dn, 1.0).unwrap())
                    / (2.0 * h);
                let an = mnl.price_derivative(j, k, &p, 1.0).unwrap();
                assert!((fd - an).abs() < 1e-8, "{j} {k}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuasilinearModel::logit(0.0, -1.0).is_err());
        assert!(QuasilinearModel::new(TasteOffsets::MultinomialLogit { intercepts: vec![], scale: 1.0 }).is_err());
        let json = r#"{"taste_offsets":{"structure":"single","offset":{"dist":"normal","mean":0.0,"sd":-1.0}}}"#;
        assert!(serde_json::from_str::<QuasilinearModel>(json).is_err());
    }
}
