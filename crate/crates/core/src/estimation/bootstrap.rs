//! Row-resampling bootstrap of the full two-step fit.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_constrained_probit, DemandFit, FitOptions};
use super::EstimationDataset;
use crate::error::{Error, Result};
use crate::spline::SplineBasis;

/// Largest tolerated share of failed refits.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

/// Bootstrap refits, used as draws from an approximate posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub seed: u64,
    pub requested: usize,
    /// Successful refits, ordered by draw index.
    pub draws: Vec<DemandFit>,
    /// Indices and messages of failed refits.
    pub failures: Vec<(usize, String)>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Refits both stages on `draws` resamples of the rows. Draw `b` resamples
/// with stream `b` of `seed`, so results do not depend on scheduling.
pub fn bootstrap_fit(
    data: &EstimationDataset,
    basis: &SplineBasis,
    grid: &[f64],
    opts: &FitOptions,
    draws: usize,
    seed: u64,
) -> Result<PosteriorDraws> {
    if draws < 2 {
        return Err(Error::invalid(format!("bootstrap needs at least 2 draws, got {draws}")));
    }
    data.validate(true)?;
    let n = data.len();
    let results: Vec<Result<DemandFit>> = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            fit_constrained_probit(&data.subset(&rows), basis, grid, opts)
        })
        .collect();
    let mut out = PosteriorDraws { seed, requested: draws, draws: Vec::new(), failures: Vec::new() };
    for (b, r) in results.into_iter().enumerate() {
        match r {
            Ok(fit) => out.draws.push(fit),
            Err(e) => {
                debug!("bootstrap draw {b} failed: {e}");
                out.failures.push((b, e.to_string()));
            }
        }
    }
    if out.failures.len() as f64 > MAX_FAILURE_SHARE * draws as f64 {
        return Err(Error::NonConvergence(format!(
            "{} of {draws} bootstrap refits failed; first: {}",
            out.failures.len(),
            out.failures[0].1
        )));
    }
    Ok(out)
}
