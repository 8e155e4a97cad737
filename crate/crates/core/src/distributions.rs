//! Univariate distributions used for preference heterogeneity.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_hermite_normal, gauss_legendre, logistic, normal_cdf, normal_pdf, normal_quantile};

/// A scalar random variable with an evaluable CDF and quantile function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ScalarDistribution {
    Degenerate {
        value: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Logistic {
        location: f64,
        scale: f64,
    },
    Gumbel {
        location: f64,
        scale: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Finite support; `probs` must sum to one.
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
}

fn finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} distribution parameters")))
    }
}

impl ScalarDistribution {
    pub fn validate(&self) -> Result<()> {
        use ScalarDistribution::*;
        match self {
            Degenerate { value } => finite("degenerate", &[*value]),
            Normal { mean, sd } => {
                finite("normal", &[*mean, *sd])?;
                positive("normal sd", *sd)
            }
            Logistic { location, scale } => {
                finite("logistic", &[*location, *scale])?;
                positive("logistic scale", *scale)
            }
            Gumbel { location, scale } => {
                finite("gumbel", &[*location, *scale])?;
                positive("gumbel scale", *scale)
            }
            Uniform { lower, upper } => {
                finite("uniform", &[*lower, *upper])?;
                if upper > lower {
                    Ok(())
                } else {
                    Err(Error::invalid("uniform distribution needs lower < upper"))
                }
            }
            LogNormal { mu, sigma } => {
                finite("lognormal", &[*mu, *sigma])?;
                positive("lognormal sigma", *sigma)
            }
            Discrete { values, probs } => {
                finite("discrete", values)?;
                finite("discrete", probs)?;
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid("discrete distribution needs matching non-empty values and probs"));
                }
                if probs.iter().any(|p| *p < 0.0) {
                    return Err(Error::invalid("discrete probabilities must be non-negative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("discrete probabilities sum to {total}, expected 1")));
                }
                Ok(())
            }
        }
    }

    /// `Pr[X <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        use ScalarDistribution::*;
        match self {
            Degenerate { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Logistic { location, scale } => logistic((x - location) / scale),
            Gumbel { location, scale } => {
                if x == f64::INFINITY {
                    1.0
                } else {
                    (-(-(x - location) / scale).exp()).exp()
                }
            }
            Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Discrete { values, probs } => {
                values.iter().zip(probs).filter(|(v, _)| **v <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
        }
    }

    /// `Pr[X > x]`, computed without cancellation where the family allows.
    pub fn sf(&self, x: f64) -> f64 {
        use ScalarDistribution::*;
        match self {
            Normal { mean, sd } => normal_cdf(-(x - mean) / sd),
            Logistic { location, scale } => logistic(-(x - location) / scale),
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    normal_cdf(-(x.ln() - mu) / sigma)
                }
            }
            Gumbel { location, scale } => {
                if x == f64::INFINITY {
                    0.0
                } else {
                    -(-(-(x - location) / scale).exp()).exp_m1()
                }
            }
            Discrete { values, probs } => {
                values.iter().zip(probs).filter(|(v, _)| **v > x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Density with respect to Lebesgue measure; zero for atoms.
    pub fn density(&self, x: f64) -> f64 {
        use ScalarDistribution::*;
        match self {
            Degenerate { .. } | Discrete { .. } => 0.0,
            Normal { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            Logistic { location, scale } => {
                let l = logistic((x - location) / scale);
                l * (1.0 - l) / scale
            }
            Gumbel { location, scale } => {
                let z = (x - location) / scale;
                if z < -700.0 {
                    0.0
                } else {
                    (-z - (-z).exp()).exp() / scale
                }
            }
            Uniform { lower, upper } => {
                if x >= *lower && x <= *upper {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_pdf((x.ln() - mu) / sigma) / (sigma * x)
                }
            }
        }
    }

    /// Quantile function; right-continuous inverse for discrete laws.
    pub fn quantile(&self, u: f64) -> f64 {
        use ScalarDistribution::*;
        match self {
            Degenerate { value } => *value,
            Normal { mean, sd } => mean + sd * normal_quantile(u),
            Logistic { location, scale } => location + scale * (u / (1.0 - u)).ln(),
            Gumbel { location, scale } => location - scale * (-(u.ln())).ln(),
            Uniform { lower, upper } => lower + u * (upper - lower),
            LogNormal { mu, sigma } => (mu + sigma * normal_quantile(u)).exp(),
            Discrete { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }

    pub fn mean(&self) -> f64 {
        use ScalarDistribution::*;
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        match self {
            Degenerate { value } => *value,
            Normal { mean, .. } => *mean,
            Logistic { location, .. } => *location,
            Gumbel { location, scale } => location + scale * EULER_GAMMA,
            Uniform { lower, upper } => 0.5 * (lower + upper),
            LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    /// Rough spread, used to size search brackets.
    pub fn scale(&self) -> f64 {
        use ScalarDistribution::*;
        match self {
            Degenerate { value } => value.abs(),
            Normal { sd, .. } => *sd,
            Logistic { scale, .. } | Gumbel { scale, .. } => 1.8 * scale,
            Uniform { lower, upper } => upper - lower,
            LogNormal { .. } => self.mean(),
            Discrete { values, .. } => values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng))
    }

    /// Weighted nodes whose weighted sum approximates `E[g(X)]` for smooth `g`.
    ///
    /// Gauss–Hermite for (log-)normal laws, exact atoms for discrete laws and
    /// Gauss–Legendre in probability space otherwise.
    pub fn integration_nodes(&self, n: usize) -> Vec<(f64, f64)> {
        use ScalarDistribution::*;
        match self {
            Degenerate { value } => vec![(*value, 1.0)],
            Discrete { values, probs } => {
                values.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(v, p)| (*v, *p)).collect()
            }
            Normal { mean, sd } => {
                let (x, w) = gauss_hermite_normal(n);
                x.iter().zip(w).map(|(x, w)| (mean + sd * x, w)).collect()
            }
            LogNormal { mu, sigma } => {
                let (x, w) = gauss_hermite_normal(n);
                x.iter().zip(w).map(|(x, w)| ((mu + sigma * x).exp(), w)).collect()
            }
            _ => {
                let (x, w) = gauss_legendre(n);
                x.iter().zip(w).map(|(x, w)| (self.quantile(0.5 * (x + 1.0)), 0.5 * w)).collect()
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<ScalarDistribution> {
        use ScalarDistribution::*;
        vec![
            Normal { mean: 1.0, sd: 2.0 },
            Logistic { location: -1.0, scale: 0.5 },
            Gumbel { location: 0.3, scale: 1.5 },
            Uniform { lower: -2.0, upper: 3.0 },
            LogNormal { mu: 0.2, sigma: 0.4 },
        ]
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in families() {
            d.validate().unwrap();
            for &u in &[0.01, 0.2, 0.5, 0.8, 0.99] {
                let x = d.quantile(u);
                assert!((d.cdf(x) - u).abs() < 1e-10, "{d:?} at {u}");
                assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn integration_nodes_reproduce_means() {
        for d in families() {
            let nodes = d.integration_nodes(64);
            let w: f64 = nodes.iter().map(|n| n.1).sum();
            let m: f64 = nodes.iter().map(|n| n.0 * n.1).sum();
            assert!((w - 1.0).abs() < 1e-12);
            assert!((m - d.mean()).abs() < 2e-3 * d.scale(), "{d:?}: {m} vs {}", d.mean());
        }
    }

    #[test]
    fn density_matches_cdf_slope() {
        for d in families() {
            for &u in &[0.1, 0.5, 0.9] {
                let x = d.quantile(u);
                let h = 1e-5 * d.scale();
                let fd = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
                assert!((fd - d.density(x)).abs() < 1e-6 * d.density(x).max(1.0), "{d:?}");
            }
        }
    }

    #[test]
    fn discrete_quantile_and_cdf() {
        let d = ScalarDistribution::Discrete { values: vec![0.0, 20.0], probs: vec![0.5, 0.5] };
        d.validate().unwrap();
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(0.0), 0.5);
        assert_eq!(d.sf(0.0), 0.5);
        assert_eq!(d.quantile(0.25), 0.0);
        assert_eq!(d.quantile(0.5), 20.0);
    }

    #[test]
    fn sampling_is_reproducible_and_centered() {
        let d = ScalarDistribution::Normal { mean: 3.0, sd: 1.0 };
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..20_000).map(|_| d.sample(&mut a)).collect();
        let ys: Vec<f64> = (0..20_000).map(|_| d.sample(&mut b)).collect();
        assert_eq!(xs, ys);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 3.0).abs() < 4.0 / (20_000f64).sqrt());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ScalarDistribution::Normal { mean: 0.0, sd: 0.0 }.validate().is_err());
        assert!(ScalarDistribution::Normal { mean: f64::NAN, sd: 1.0 }.validate().is_err());
        assert!(ScalarDistribution::Discrete { values: vec![1.0], probs: vec![0.9] }.validate().is_err());
    }
}
