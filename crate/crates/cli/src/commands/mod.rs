pub mod bounds;
pub mod estimate;
pub mod report;
pub mod simulate;
pub mod target;
pub mod welfare;

use dcwelfare::quadrature::QuadratureConfig;
use dcwelfare::welfare::{Truncation, WelfareConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Integration settings shared by every command that evaluates welfare
/// integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationKeys {
    /// `fixed` (stop at `truncation_value`) or `income_ceiling` (stop where
    /// income reaches `truncation_value`).
    pub truncation: String,
    pub truncation_value: f64,
    pub tail_tolerance: f64,
    pub quad_panels: usize,
    pub quad_nodes: usize,
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub quad_max_evaluations: usize,
}

impl Default for IntegrationKeys {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            truncation: "fixed".into(),
            truncation_value: 100.0,
            tail_tolerance: 1e-4,
            quad_panels: q.panels,
            quad_nodes: q.nodes,
            quad_rel_tol: q.rel_tol,
            quad_abs_tol: q.abs_tol,
            quad_max_evaluations: q.max_evaluations,
        }
    }
}

impl IntegrationKeys {
    pub fn welfare_config(&self) -> CliResult<WelfareConfig> {
        let truncation = match self.truncation.as_str() {
            "fixed" => Truncation::Fixed(self.truncation_value),
            "income_ceiling" => Truncation::IncomeCeiling(self.truncation_value),
            other => return Err(CliError::usage(format!("truncation must be fixed or income_ceiling, got {other:?}"))),
        };
        let cfg = WelfareConfig {
            truncation,
            quadrature: QuadratureConfig {
                panels: self.quad_panels,
                nodes: self.quad_nodes,
                rel_tol: self.quad_rel_tol,
                abs_tol: self.quad_abs_tol,
                max_evaluations: self.quad_max_evaluations,
            },
            tail_tolerance: self.tail_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `lo + (hi - lo) k/(n - 1)` for `k = 0..n`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    if n < 2 || !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::usage(format!(
            "grid needs at least two points on a proper interval, got {n} on [{lo}, {hi}]"
        )));
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

pub fn epsilon_label(e: f64) -> String {
    format!("eps_{e}")
}
