//! Estimation microdata, price imputation and Hausman instruments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Household-level rows for binary demand estimation.
///
/// `price` is `None` where unobserved (typically for non-purchasers) until
/// [`impute_prices`] fills it in.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimationDataset {
    pub choice: Vec<bool>,
    pub price: Vec<Option<f64>>,
    pub income: Vec<f64>,
    /// One vector of covariates per row, all of length `covariate_names.len()`.
    pub covariates: Vec<Vec<f64>>,
    pub covariate_names: Vec<String>,
    pub instrument: Vec<f64>,
    pub cluster: Vec<u64>,
    pub stratum: Vec<u64>,
}

impl EstimationDataset {
    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    /// Checks lengths and finiteness; with `require_prices`, also that no
    /// price is missing.
    pub fn validate(&self, require_prices: bool) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        let lengths = [
            self.price.len(),
            self.income.len(),
            self.covariates.len(),
            self.instrument.len(),
            self.cluster.len(),
            self.stratum.len(),
        ];
        if lengths.iter().any(|l| *l != n) {
            return Err(Error::Data(format!("column lengths differ: {n} rows vs {lengths:?}")));
        }
        let k = self.n_covariates();
        for i in 0..n {
            if self.covariates[i].len() != k {
                return Err(Error::Data(format!("row {i} has {} covariates, expected {k}", self.covariates[i].len())));
            }
            if !(self.income[i].is_finite() && self.income[i] > 0.0) {
                return Err(Error::Data(format!("row {i}: income must be positive, got {}", self.income[i])));
            }
            if !self.instrument[i].is_finite() || !self.covariates[i].iter().all(|x| x.is_finite()) {
                return Err(Error::Data(format!("row {i}: non-finite regressor")));
            }
            match self.price[i] {
                Some(p) if !(p.is_finite() && p > 0.0) => {
                    return Err(Error::Data(format!("row {i}: price must be positive, got {p}")));
                }
                None if require_prices => {
                    return Err(Error::Data(format!("row {i}: price missing")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Observed prices; errors if any is missing.
    pub fn prices(&self) -> Result<Vec<f64>> {
        self.price
            .iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::Data(format!("row {i}: price missing"))))
            .collect()
    }

    /// Rows selected by index, in the given order (duplicates allowed).
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            choice: rows.iter().map(|&i| self.choice[i]).collect(),
            price: rows.iter().map(|&i| self.price[i]).collect(),
            income: rows.iter().map(|&i| self.income[i]).collect(),
            covariates: rows.iter().map(|&i| self.covariates[i].clone()).collect(),
            covariate_names: self.covariate_names.clone(),
            instrument: rows.iter().map(|&i| self.instrument[i]).collect(),
            cluster: rows.iter().map(|&i| self.cluster[i]).collect(),
            stratum: rows.iter().map(|&i| self.stratum[i]).collect(),
        }
    }

    /// Income quantile by linear interpolation of order statistics.
    pub fn income_quantile(&self, u: f64) -> f64 {
        let mut y = self.income.clone();
        y.sort_by(f64::total_cmp);
        quantile_sorted(&y, u)
    }

    /// Covariate medians, the default evaluation profile.
    pub fn covariate_medians(&self) -> Vec<f64> {
        (0..self.n_covariates())
            .map(|k| {
                let mut v: Vec<f64> = self.covariates.iter().map(|r| r[k]).collect();
                v.sort_by(f64::total_cmp);
                quantile_sorted(&v, 0.5)
            })
            .collect()
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = u.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Which rows had prices filled in, and how.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    /// Rows filled with their cluster's mean purchaser price.
    pub from_cluster: usize,
    /// Rows filled with their stratum's mean purchaser price because their
    /// cluster had no purchaser.
    pub from_stratum: usize,
    /// Clusters that fell back to the stratum level.
    pub fallback_clusters: Vec<u64>,
}

/// Fills missing prices with the mean price paid by purchasers in the same
/// cluster, falling back to the stratum mean when a cluster has no purchaser
/// with an observed price. Observed prices are left untouched.
pub fn impute_prices(data: &EstimationDataset) -> Result<(EstimationDataset, ImputationReport)> {
    data.validate(false)?;
    let mut cluster_sum: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    let mut stratum_sum: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for i in 0..data.len() {
        if let (true, Some(p)) = (data.choice[i], data.price[i]) {
            let c = cluster_sum.entry(data.cluster[i]).or_default();
            c.0 += p;
            c.1 += 1;
            let s = stratum_sum.entry(data.stratum[i]).or_default();
            s.0 += p;
            s.1 += 1;
        }
    }
    let mean = |m: &BTreeMap<u64, (f64, usize)>, k: u64| m.get(&k).map(|(s, n)| s / *n as f64);
    let mut out = data.clone();
    let mut report = ImputationReport::default();
    for i in 0..data.len() {
        if data.price[i].is_some() {
            continue;
        }
        if let Some(p) = mean(&cluster_sum, data.cluster[i]) {
            out.price[i] = Some(p);
            report.from_cluster += 1;
        } else if let Some(p) = mean(&stratum_sum, data.stratum[i]) {
            out.price[i] = Some(p);
            report.from_stratum += 1;
            if !report.fallback_clusters.contains(&data.cluster[i]) {
                report.fallback_clusters.push(data.cluster[i]);
            }
        } else {
            return Err(Error::Data(format!(
                "row {i}: neither cluster {} nor stratum {} has a purchaser price to impute from",
                data.cluster[i], data.stratum[i]
            )));
        }
    }
    report.fallback_clusters.sort_unstable();
    if report.from_stratum > 0 {
        log::warn!(
            "{} prices imputed from stratum means (clusters without purchasers: {:?})",
            report.from_stratum,
            report.fallback_clusters
        );
    }
    Ok((out, report))
}

/// Hausman instrument: for each row, the mean of cluster-mean prices over the
/// other clusters of its stratum. Requires complete prices.
pub fn hausman_instrument(data: &EstimationDataset) -> Result<Vec<f64>> {
    let prices = data.prices()?;
    let mut clusters: BTreeMap<u64, (u64, f64, usize)> = BTreeMap::new();
    for ((&cluster, &stratum), &price) in data.cluster.iter().zip(&data.stratum).zip(&prices) {
        let c = clusters.entry(cluster).or_insert((stratum, 0.0, 0));
        if c.0 != stratum {
            return Err(Error::Data(format!("cluster {cluster} spans several strata")));
        }
        c.1 += price;
        c.2 += 1;
    }
    let mut strata: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for (stratum, sum, n) in clusters.values() {
        let s = strata.entry(*stratum).or_default();
        s.0 += sum / *n as f64;
        s.1 += 1;
    }
    (0..data.len())
        .map(|i| {
            let (_, sum, n) = clusters[&data.cluster[i]];
            let own = sum / n as f64;
            let (total, count) = strata[&data.stratum[i]];
            if count < 2 {
                return Err(Error::Data(format!(
                    "stratum {} has a single cluster; no leave-one-out price exists",
                    data.stratum[i]
                )));
            }
            Ok((total - own) / (count - 1) as f64)
        })
        .collect()
}
