use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IncomeDistribution;
use crate::error::{Error, Result};
use crate::spline::SplineBasis;

/// Feasible set of subsidy schedules: a parameterisation plus a box
/// `lower ≤ σ(y) ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScheduleSpace {
    /// B-spline on the income support's range; the box is imposed on the
    /// coefficients, which bounds `σ(y)` by the convex-hull property.
    Spline { size: usize, degree: usize, lower: f64, upper: f64 },
    /// One free value per support point of the income distribution.
    Pointwise { lower: f64, upper: f64 },
}

impl ScheduleSpace {
    pub fn spline(lower: f64, upper: f64) -> Self {
        ScheduleSpace::Spline { size: 6, degree: 3, lower, upper }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            ScheduleSpace::Spline { lower, upper, .. } | ScheduleSpace::Pointwise { lower, upper } => (*lower, *upper),
        }
    }

    /// Checks the box against the base price and builds the map from
    /// parameters to `σ` at the support points.
    pub(crate) fn realise(&self, base_price: f64, income: &IncomeDistribution) -> Result<Realised> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("schedule bounds [{lo}, {hi}] are invalid")));
        }
        if hi >= base_price {
            return Err(Error::invalid(format!("upper subsidy bound {hi} must be below the base price {base_price}")));
        }
        match self {
            ScheduleSpace::Spline { size, degree, .. } => {
                if income.len() < 2 || income.min() == income.max() {
                    return Err(Error::invalid("a spline schedule needs at least two distinct incomes"));
                }
                let basis = SplineBasis::with_size(income.min(), income.max(), *size, *degree)?;
                let design = DMatrix::from_fn(income.len(), basis.size(), |k, j| basis.values(income.support()[k])[j]);
                Ok(Realised { design, basis: Some(basis), lower: lo, upper: hi })
            }
            ScheduleSpace::Pointwise { .. } => Ok(Realised {
                design: DMatrix::identity(income.len(), income.len()),
                basis: None,
                lower: lo,
                upper: hi,
            }),
        }
    }
}

pub(crate) struct Realised {
    /// `σ(y_k) = Σ_j design[k, j] c_j`.
    pub design: DMatrix<f64>,
    pub basis: Option<SplineBasis>,
    pub lower: f64,
    pub upper: f64,
}

impl Realised {
    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn schedule(&self, coefficients: Vec<f64>, income: &IncomeDistribution) -> SubsidySchedule {
        match &self.basis {
            Some(b) => SubsidySchedule::Spline { basis: b.clone(), coefficients, lower: self.lower, upper: self.upper },
            None => SubsidySchedule::Pointwise {
                incomes: income.support().to_vec(),
                values: coefficients,
                lower: self.lower,
                upper: self.upper,
            },
        }
    }
}

/// A subsidy (negative: tax) as a function of income.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SubsidySchedule {
    Spline {
        basis: SplineBasis,
        coefficients: Vec<f64>,
        lower: f64,
        upper: f64,
    },
    /// Values at income points, linearly interpolated between them and held
    /// constant beyond the ends.
    Pointwise {
        incomes: Vec<f64>,
        values: Vec<f64>,
        lower: f64,
        upper: f64,
    },
}

impl SubsidySchedule {
    /// Same subsidy at every income.
    pub fn constant(value: f64) -> Self {
        SubsidySchedule::Pointwise { incomes: vec![0.0], values: vec![value], lower: value, upper: value }
    }

    pub fn eval(&self, income: f64) -> f64 {
        match self {
            SubsidySchedule::Spline { basis, coefficients, .. } => basis.evaluate(coefficients, income),
            SubsidySchedule::Pointwise { incomes, values, .. } => {
                let i = incomes.partition_point(|y| *y < income);
                if i == 0 {
                    values[0]
                } else if i == incomes.len() {
                    values[i - 1]
                } else if incomes[i] == income {
                    values[i]
                } else {
                    let w = (income - incomes[i - 1]) / (incomes[i] - incomes[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    pub fn parameters(&self) -> &[f64] {
        match self {
            SubsidySchedule::Spline { coefficients, .. } => coefficients,
            SubsidySchedule::Pointwise { values, .. } => values,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            SubsidySchedule::Spline { lower, upper, .. } | SubsidySchedule::Pointwise { lower, upper, .. } => {
                (*lower, *upper)
            }
        }
    }

    /// Errors if the subsidised price `p̄ − σ(y)` is negative at any support
    /// point.
    pub fn check_prices(&self, base_price: f64, income: &IncomeDistribution) -> Result<()> {
        for &y in income.support() {
            let s = self.eval(y);
            if !s.is_finite() || base_price - s < 0.0 {
                return Err(Error::invalid(format!("subsidy {s} at income {y} pushes the price below zero")));
            }
        }
        Ok(())
    }
}
