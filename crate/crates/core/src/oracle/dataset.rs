//! Synthetic microdata with a known binary demand and optional price
//! endogeneity.
//!
//! ```text
//! price  = c_0 + c_z z + c_y y + v,          v ~ N(0, s_v²)
//! buy    = 1{β_p price + f(y) + x'β + u > 0}, u ~ N(0, 1), corr(u, v) = ρ
//! f(y)   = a_0 + a_1 y + a_2 y²
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::open_unit;
use crate::error::{Error, Result};
use crate::estimation::EstimationDataset;
use crate::numeric::{normal_cdf, normal_quantile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetDesign {
    pub rows: usize,
    pub income_lower: f64,
    pub income_upper: f64,
    pub price_coefficient: f64,
    /// `(a_0, a_1, a_2)` of the quadratic income profile.
    pub income_profile: [f64; 3],
    /// Coefficients on a standard-normal and a Bernoulli(½) covariate.
    pub covariate_coefficients: [f64; 2],
    /// `(c_0, c_z, c_y)` of the price equation.
    pub price_equation: [f64; 3],
    pub instrument_upper: f64,
    pub price_noise_sd: f64,
    /// `corr(u, v)`; zero makes price exogenous.
    pub endogeneity: f64,
    pub clusters: usize,
    pub strata: usize,
    /// Drop observed prices of non-purchasers.
    pub mask_nonbuyer_prices: bool,
    pub seed: u64,
}

impl Default for DatasetDesign {
    fn default() -> Self {
        Self {
            rows: 20_000,
            income_lower: 1.0,
            income_upper: 10.0,
            price_coefficient: -0.5,
            income_profile: [0.8, 0.4, -0.03],
            covariate_coefficients: [0.3, -0.2],
            price_equation: [2.0, 0.8, 0.1],
            instrument_upper: 4.0,
            price_noise_sd: 0.5,
            endogeneity: 0.6,
            clusters: 200,
            strata: 20,
            mask_nonbuyer_prices: false,
            seed: 1,
        }
    }
}

/// Generated rows plus the structural demand they were drawn from.
#[derive(Clone, Debug)]
pub struct SimulatedDataset {
    pub data: EstimationDataset,
    pub design: DatasetDesign,
}

impl SimulatedDataset {
    /// True structural `q_1(p, y)` at covariate profile `x`.
    pub fn true_demand(&self, price: f64, income: f64, x: &[f64]) -> f64 {
        normal_cdf(self.design.true_index(price, income, x))
    }
}

impl DatasetDesign {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.clusters == 0 || self.strata == 0 {
            return Err(Error::invalid("rows, clusters and strata must be positive"));
        }
        if self.strata > self.clusters {
            return Err(Error::invalid("more strata than clusters"));
        }
        if !(self.income_lower > 0.0 && self.income_upper > self.income_lower) {
            return Err(Error::invalid("income range must satisfy 0 < lower < upper"));
        }
        if !(self.endogeneity.abs() < 1.0) {
            return Err(Error::invalid("endogeneity correlation must lie in (-1, 1)"));
        }
        if !(self.price_noise_sd > 0.0 && self.instrument_upper > 0.0) {
            return Err(Error::invalid("price noise and instrument range must be positive"));
        }
        Ok(())
    }

    pub fn income_effect(&self, income: f64) -> f64 {
        let [a0, a1, a2] = self.income_profile;
        a0 + a1 * income + a2 * income * income
    }

    pub fn true_index(&self, price: f64, income: f64, x: &[f64]) -> f64 {
        let cov: f64 = self.covariate_coefficients.iter().zip(x).map(|(b, x)| b * x).sum();
        self.price_coefficient * price + self.income_effect(income) + cov
    }
}

/// Draws a dataset; row `i` uses stream `i` of the seed.
pub fn simulate_dataset(design: &DatasetDesign) -> Result<SimulatedDataset> {
    design.validate()?;
    let n = design.rows;
    let mut data = EstimationDataset {
        choice: Vec::with_capacity(n),
        price: Vec::with_capacity(n),
        income: Vec::with_capacity(n),
        covariates: Vec::with_capacity(n),
        covariate_names: vec!["x1".into(), "x2".into()],
        instrument: Vec::with_capacity(n),
        cluster: Vec::with_capacity(n),
        stratum: Vec::with_capacity(n),
    };
    let rho = design.endogeneity;
    let [c0, cz, cy] = design.price_equation;
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
        rng.set_stream(i as u64);
        let y = design.income_lower + (design.income_upper - design.income_lower) * open_unit(&mut rng);
        let z = design.instrument_upper * open_unit(&mut rng);
        let x1 = normal_quantile(open_unit(&mut rng));
        let x2 = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        let (price, v) = loop {
            let v = design.price_noise_sd * normal_quantile(open_unit(&mut rng));
            let p = c0 + cz * z + cy * y + v;
            if p > 0.0 {
                break (p, v);
            }
        };
        let e = normal_quantile(open_unit(&mut rng));
        let u = rho * v / design.price_noise_sd + (1.0 - rho * rho).sqrt() * e;
        let buy = design.true_index(price, y, &[x1, x2]) + u > 0.0;
        let cluster = (i % design.clusters) as u64;
        data.choice.push(buy);
        data.price.push(if design.mask_nonbuyer_prices && !buy { None } else { Some(price) });
        data.income.push(y);
        data.covariates.push(vec![x1, x2]);
        data.instrument.push(z);
        data.cluster.push(cluster);
        data.stratum.push(cluster % design.strata as u64);
    }
    Ok(SimulatedDataset { data, design: design.clone() })
}
