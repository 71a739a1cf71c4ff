use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The JSON Schema the report is validated against before every emit.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub spec: SpecEcho,
    pub dataset: DatasetSummary,
    pub runs: Vec<RunRecord>,
}

/// The resolved run parameters, echoed for reproducibility.
#[derive(Debug, Serialize)]
pub struct SpecEcho {
    pub input: String,
    pub group_col: String,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<String>,
    pub init: String,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub preprocess: Option<String>,
    pub threads: usize,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub raw_dim: usize,
    pub groups: usize,
    pub group_labels: Vec<String>,
    pub group_sizes: Vec<usize>,
    pub rejected_rows: Vec<RejectedRow>,
}

#[derive(Debug, Serialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub k: usize,
    pub algorithm: String,
    pub used_dim: usize,
    /// Mean cost for lloyd, max group cost for fair-lloyd.
    pub objective: f64,
    pub iterations_run: usize,
    pub objective_trace: Vec<f64>,
    pub metrics: MetricsOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fair: Option<FairOut>,
    /// Present only with --timings so that default outputs are byte-stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct MetricsOut {
    pub per_group_cost: Vec<f64>,
    /// None encodes the +infinity sentinel (some group has zero cost).
    pub max_cost_ratio: Option<f64>,
    pub overall_cost: f64,
    pub balance: Option<f64>,
    pub price_of_fairness: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FairOut {
    pub gamma: Vec<f64>,
    pub group_costs: Vec<f64>,
    pub objective: f64,
    pub lower_bound: f64,
    pub certificate_gap: f64,
    pub solver_iterations: usize,
}

impl From<&fairkm::metrics::MetricsReport> for MetricsOut {
    fn from(m: &fairkm::metrics::MetricsReport) -> Self {
        MetricsOut {
            per_group_cost: m.per_group_cost.clone(),
            max_cost_ratio: m.max_cost_ratio.is_finite().then_some(m.max_cost_ratio),
            overall_cost: m.overall_cost,
            balance: m.balance,
            price_of_fairness: m.price_of_fairness,
        }
    }
}

/// Serialize the report, validate it against the checked-in schema, and return
/// the canonical bytes.
pub fn render_report(report: &Report) -> Result<Vec<u8>, CliError> {
    let value = serde_json::to_value(report)?;
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA)
        .map_err(|e| CliError::Internal(format!("bundled schema unreadable: {e}")))?;
    let compiled = jsonschema::JSONSchema::compile(&schema)
        .map_err(|e| CliError::Internal(format!("bundled schema invalid: {e}")))?;
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| format!("{e}")).collect();
        return Err(CliError::Internal(format!(
            "report failed schema validation: {}",
            msgs.join("; ")
        )));
    }
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), CliError> {
    let bytes = render_report(report)?;
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}

/// Emit the two plot-data CSVs next to `prefix`: `<prefix>.group_costs.csv`
/// with (k, algorithm, group, avg_cost) rows and `<prefix>.ratios.csv` with
/// (k, algorithm, max_cost_ratio) rows. Infinite ratios are written as "inf".
pub fn write_plot_data(report: &Report, prefix: &Path) -> Result<(), CliError> {
    let gc_path = prefix.with_extension("group_costs.csv");
    let ratio_path = prefix.with_extension("ratios.csv");
    let mut gc = Vec::new();
    writeln!(gc, "k,algorithm,group,avg_cost").unwrap();
    for run in &report.runs {
        for (j, cost) in run.metrics.per_group_cost.iter().enumerate() {
            let label = report
                .dataset
                .group_labels
                .get(j)
                .map(String::as_str)
                .unwrap_or("?");
            writeln!(gc, "{},{},{},{}", run.k, run.algorithm, label, cost).unwrap();
        }
    }
    let mut ratios = Vec::new();
    writeln!(ratios, "k,algorithm,max_cost_ratio").unwrap();
    for run in &report.runs {
        match run.metrics.max_cost_ratio {
            Some(r) => writeln!(ratios, "{},{},{}", run.k, run.algorithm, r).unwrap(),
            None => writeln!(ratios, "{},{},inf", run.k, run.algorithm).unwrap(),
        }
    }
    std::fs::write(&gc_path, gc)
        .map_err(|e| CliError::Internal(format!("writing {}: {e}", gc_path.display())))?;
    std::fs::write(&ratio_path, ratios)
        .map_err(|e| CliError::Internal(format!("writing {}: {e}", ratio_path.display())))?;
    Ok(())
}
