//! Reading models, datasets and tables.

use std::path::Path;

use dcwelfare::bounds::DemandObservation;
use dcwelfare::choice::{ChoiceModel, ModelDocument};
use dcwelfare::estimation::EstimationDataset;
use dcwelfare::fixtures;
use dcwelfare::targeting::IncomeDistribution;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

/// A bundled fixture name or a path to a model JSON document.
pub fn load_model(spec: &str) -> CliResult<ChoiceModel> {
    if let Some(m) = fixtures::by_name(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::usage(format!(
            "model {spec:?} is neither a file nor a bundled fixture ({})",
            fixtures::NAMES.join(", ")
        )));
    }
    ModelDocument::from_json(&read(path)?)
        .map(|d| d.model)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct DrawsDocument {
    models: Vec<ChoiceModel>,
}

/// Posterior draws as written by `estimate`.
pub fn load_draws(path: &Path) -> CliResult<Vec<ChoiceModel>> {
    let doc: DrawsDocument =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if doc.models.is_empty() {
        return Err(CliError::data(format!("{}: no draws", path.display())));
    }
    Ok(doc.models)
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn number(field: &str, column: &str, row: usize, path: &Path) -> CliResult<f64> {
    field.parse::<f64>().map_err(|_| {
        CliError::data(format!("{}: row {row}, column {column}: {field:?} is not a number", path.display()))
    })
}

fn integer(field: &str, column: &str, row: usize, path: &Path) -> CliResult<u64> {
    field.parse::<u64>().map_err(|_| {
        CliError::data(format!(
            "{}: row {row}, column {column}: {field:?} is not a non-negative integer",
            path.display()
        ))
    })
}

const DATASET_COLUMNS: [&str; 6] = ["choice", "price", "income", "instrument", "cluster", "stratum"];

/// Household rows: the six named columns in any order; every other column
/// is a covariate. An empty `price` marks a missing price.
pub fn load_dataset(path: &Path) -> CliResult<EstimationDataset> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("{}: missing column {name:?}", path.display())))
    };
    let idx: Vec<usize> = DATASET_COLUMNS.iter().map(|c| find(c)).collect::<CliResult<_>>()?;
    let cov: Vec<usize> = (0..headers.len()).filter(|i| !idx.contains(i)).collect();
    let mut data = EstimationDataset {
        covariate_names: cov.iter().map(|&i| headers[i].to_string()).collect(),
        ..Default::default()
    };
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let row = r + 1;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        data.choice.push(match get(0) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(CliError::data(format!("{}: row {row}: choice {other:?} is not 0/1", path.display()))),
        });
        data.price.push(match get(1) {
            "" => None,
            p => Some(number(p, "price", row, path)?),
        });
        data.income.push(number(get(2), "income", row, path)?);
        data.instrument.push(number(get(3), "instrument", row, path)?);
        data.cluster.push(integer(get(4), "cluster", row, path)?);
        data.stratum.push(integer(get(5), "stratum", row, path)?);
        data.covariates.push(
            cov.iter().map(|&i| number(rec.get(i).unwrap_or(""), &headers[i], row, path)).collect::<CliResult<_>>()?,
        );
    }
    data.validate(false).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(data)
}

/// `income[,weight]` rows; weights default to equal.
pub fn load_income(path: &Path) -> CliResult<IncomeDistribution> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?.clone();
    let yi = headers
        .iter()
        .position(|h| h == "income")
        .ok_or_else(|| CliError::data(format!("{}: missing column \"income\"", path.display())))?;
    let wi = headers.iter().position(|h| h == "weight");
    let (mut ys, mut ws) = (Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        ys.push(number(rec.get(yi).unwrap_or(""), "income", r + 1, path)?);
        ws.push(match wi {
            Some(i) => number(rec.get(i).unwrap_or(""), "weight", r + 1, path)?,
            None => 1.0,
        });
    }
    IncomeDistribution::weighted(ys, ws).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// `p1, …, pJ, income, q0` rows.
pub fn load_observations(path: &Path) -> CliResult<(usize, Vec<DemandObservation>)> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("{}: missing column {name:?}", path.display())))
    };
    let mut prices = Vec::new();
    while let Some(i) = headers.iter().position(|h| h == format!("p{}", prices.len() + 1)) {
        prices.push(i);
    }
    if prices.is_empty() {
        return Err(CliError::data(format!("{}: no price columns p1, p2, ...", path.display())));
    }
    let (yi, qi) = (col("income")?, col("q0")?);
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let f = |i: usize, name: &str| number(rec.get(i).unwrap_or(""), name, r + 1, path);
        out.push(DemandObservation {
            prices: prices.iter().enumerate().map(|(j, &i)| f(i, &format!("p{}", j + 1))).collect::<CliResult<_>>()?,
            income: f(yi, "income")?,
            q0: f(qi, "q0")?,
        });
    }
    Ok((prices.len(), out))
}
