//! Least-squares first stage: price on the excluded instrument and the
//! exogenous regressors (intercept, income, covariates).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::EstimationDataset;
use crate::error::{Error, Result};

/// Residual sums of squares below this fraction of the total count as an
/// exact fit.
const EXACT_FIT: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    /// Regressor names, aligned with `coefficients`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Conventional (homoskedastic) standard errors.
    pub standard_errors: Vec<f64>,
    pub residual_variance: f64,
    /// Exclusion F statistic for the instrument; `None` when the fit is exact.
    pub f_statistic: Option<f64>,
    pub f_p_value: f64,
    pub f_infinite: bool,
    pub observations: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

pub(crate) struct LeastSquares {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub xtx_inv: DMatrix<f64>,
}

/// OLS by Householder QR; rank deficiency is an error.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::Singular(format!("{n} observations for {k} regressors")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(i) = (0..k).find(|&i| r[(i, i)].abs() <= 1e-10 * rmax) {
        return Err(Error::Singular(format!("regressor {i} is collinear with the others")));
    }
    let qty = qr.q().transpose() * y;
    let coefficients =
        r.solve_upper_triangular(&qty).ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let residuals = y - x * &coefficients;
    let rss = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares { coefficients, residuals, rss, xtx_inv })
}

fn design(data: &EstimationDataset, with_instrument: bool) -> DMatrix<f64> {
    let n = data.len();
    let k = 2 + data.n_covariates() + usize::from(with_instrument);
    DMatrix::from_fn(n, k, |i, j| {
        let j = if with_instrument || j == 0 { j } else { j + 1 };
        match j {
            0 => 1.0,
            1 => data.instrument[i],
            2 => data.income[i],
            _ => data.covariates[i][j - 3],
        }
    })
}

/// Regresses price on `[1, instrument, income, covariates]`.
pub fn first_stage(data: &EstimationDataset) -> Result<FirstStage> {
    data.validate(true)?;
    let n = data.len();
    let z0 = data.instrument.first().copied().unwrap_or(0.0);
    if data.instrument.iter().all(|z| *z == z0) {
        return Err(Error::Singular("instrument is constant".into()));
    }
    let price = DVector::from_vec(data.prices()?);
    let full = least_squares(&design(data, true), &price)?;
    let restricted = least_squares(&design(data, false), &price)?;
    let k = full.coefficients.len();
    let dof = (n - k) as f64;
    let mean = price.mean();
    let tss: f64 = price.iter().map(|p| (p - mean).powi(2)).sum();
    let exact = full.rss <= EXACT_FIT * tss.max(f64::MIN_POSITIVE);
    let sigma2 = if exact { 0.0 } else { full.rss / dof };
    let (f_statistic, f_p_value) = if exact {
        (None, 0.0)
    } else {
        let f = ((restricted.rss - full.rss).max(0.0)) / sigma2;
        let dist = FisherSnedecor::new(1.0, dof).map_err(|e| Error::invalid(format!("F distribution: {e}")))?;
        (Some(f), dist.sf(f))
    };
    let mut names = vec!["intercept".to_string(), "instrument".into(), "income".into()];
    names.extend(data.covariate_names.iter().cloned());
    Ok(FirstStage {
        names,
        coefficients: full.coefficients.iter().copied().collect(),
        standard_errors: (0..k).map(|i| (sigma2 * full.xtx_inv[(i, i)]).sqrt()).collect(),
        residual_variance: sigma2,
        f_statistic,
        f_p_value,
        f_infinite: exact,
        observations: n,
        residuals: full.residuals.iter().copied().collect(),
    })
}
