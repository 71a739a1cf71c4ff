use std::path::PathBuf;
use std::time::Instant;

use fairkm::clustering::{fair_lloyd, lloyd, ClusteringConfig, ClusteringResult, InitMethod};
use fairkm::metrics::metrics_report;
use fairkm::preprocess::{fit_pipeline, parse_pipeline, StepSpec};
use fairkm::solver::SolverConfig;
use fairkm::Dataset;
use rayon::prelude::*;

use crate::error::CliError;
use crate::ingest::{ingest_csv, Ingested};
use crate::report::{
    DatasetSummary, FairOut, RejectedRow, Report, RunRecord, SpecEcho, REPORT_SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Lloyd,
    FairLloyd,
    Both,
}

impl Algo {
    fn runs_lloyd(self) -> bool {
        matches!(self, Algo::Lloyd | Algo::Both)
    }
    fn runs_fair(self) -> bool {
        matches!(self, Algo::FairLloyd | Algo::Both)
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub input: PathBuf,
    pub group_col: String,
    pub ks: Vec<usize>,
    pub algo: Algo,
    pub init: InitMethod,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub preprocess: Option<String>,
    pub threads: usize,
    pub timings: bool,
}

/// Parse `"7"` or an inclusive range `"4..16"`.
pub fn parse_k_spec(s: &str) -> Result<Vec<usize>, CliError> {
    let parse_one = |t: &str| -> Result<usize, CliError> {
        t.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("bad k value {t:?}")))
    };
    let ks = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse_one(a)?, parse_one(b)?);
            if a > b {
                return Err(CliError::Input(format!("empty k range {s:?}")));
            }
            (a..=b).collect()
        }
        None => vec![parse_one(s)?],
    };
    if ks.contains(&0) {
        return Err(CliError::Input("k must be at least 1".into()));
    }
    Ok(ks)
}

fn init_name(init: InitMethod) -> &'static str {
    match init {
        InitMethod::Random => "random",
        InitMethod::KMeansPlusPlus => "kmeanspp",
        InitMethod::WeightedLloyd => "weighted",
    }
}

/// Feature columns the pipeline one-hot encodes; these are the columns the
/// ingester must treat as categorical.
fn categorical_columns(preprocess: &Option<String>, first_k: usize) -> Result<Vec<usize>, CliError> {
    let Some(spec) = preprocess else {
        return Ok(Vec::new());
    };
    let steps = parse_pipeline(spec, Some(first_k))?;
    let mut cols = Vec::new();
    for step in steps {
        if let StepSpec::OneHot(cs) = step {
            cols.extend(cs);
        }
    }
    cols.sort_unstable();
    cols.dedup();
    Ok(cols)
}

struct Job {
    k_index: usize,
    k: usize,
    fair: bool,
}

struct JobOutcome {
    result: ClusteringResult,
    wall_time_seconds: f64,
}

/// Execute the whole spec: ingest, preprocess per k, cluster per (k,
/// algorithm), and assemble the validated report structure.
pub fn execute(spec: &RunSpec) -> Result<(Report, Ingested), CliError> {
    if spec.restarts == 0 || spec.iterations == 0 {
        return Err(CliError::Input("--restarts and --iters must be at least 1".into()));
    }
    if spec.threads == 0 {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    let cats = categorical_columns(&spec.preprocess, *spec.ks.first().expect("non-empty ks"))?;
    let ingested = ingest_csv(&spec.input, &spec.group_col, &cats)?;

    // Preprocessing is fit per k because the pipeline may track k (pca:k).
    let mut datasets: Vec<Dataset> = Vec::with_capacity(spec.ks.len());
    for &k in &spec.ks {
        let ds = match &spec.preprocess {
            Some(p) => {
                let steps = parse_pipeline(p, Some(k))?;
                fit_pipeline(&steps, &ingested.dataset)?.1
            }
            None => ingested.dataset.clone(),
        };
        if k > ds.n() {
            return Err(CliError::Input(format!("k = {k} exceeds n = {}", ds.n())));
        }
        datasets.push(ds);
    }

    let mut jobs = Vec::new();
    for (k_index, &k) in spec.ks.iter().enumerate() {
        if spec.algo.runs_lloyd() {
            jobs.push(Job { k_index, k, fair: false });
        }
        if spec.algo.runs_fair() {
            jobs.push(Job { k_index, k, fair: true });
        }
    }

    let run_job = |job: &Job| -> Result<JobOutcome, CliError> {
        let ds = &datasets[job.k_index];
        let config = ClusteringConfig {
            k: job.k,
            max_outer_iterations: spec.iterations,
            restarts: spec.restarts,
            seed: spec.seed,
            init: spec.init,
            ..ClusteringConfig::new(job.k)
        };
        let started = Instant::now();
        let result = if job.fair {
            let solver = if ds.m() == 2 {
                SolverConfig::line_search()
            } else {
                SolverConfig::mwu()
            };
            fair_lloyd(ds, &config, &solver)?
        } else {
            lloyd(ds, &config)?
        };
        // millisecond resolution; only reported under --timings
        let wall_time_seconds = (started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
        Ok(JobOutcome { result, wall_time_seconds })
    };

    let outcomes: Vec<JobOutcome> = if spec.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>, _>>())?
    } else {
        jobs.iter().map(run_job).collect::<Result<Vec<_>, _>>()?
    };

    // Pair each fair run with the same-k lloyd run for the price of fairness.
    let mut runs = Vec::with_capacity(jobs.len());
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        let ds = &datasets[job.k_index];
        let baseline = if job.fair {
            jobs.iter()
                .zip(&outcomes)
                .find(|(j, _)| j.k == job.k && !j.fair)
                .map(|(_, o)| &o.result)
        } else {
            None
        };
        let metrics = metrics_report(&outcome.result, ds, baseline)?;
        let fair = outcome.result.fair_report.as_ref().map(|fr| FairOut {
            gamma: fr.gamma.clone(),
            group_costs: fr.group_costs.clone(),
            objective: fr.objective,
            lower_bound: fr.lower_bound,
            certificate_gap: fr.certificate_gap,
            solver_iterations: fr.iterations,
        });
        runs.push(RunRecord {
            k: job.k,
            algorithm: if job.fair { "fair-lloyd" } else { "lloyd" }.to_string(),
            used_dim: ds.d(),
            objective: outcome.result.objective(),
            iterations_run: outcome.result.iterations_run,
            objective_trace: outcome.result.objective_trace.clone(),
            metrics: (&metrics).into(),
            fair,
            wall_time_seconds: spec.timings.then_some(outcome.wall_time_seconds),
        });
    }

    let mut algorithms = Vec::new();
    if spec.algo.runs_lloyd() {
        algorithms.push("lloyd".to_string());
    }
    if spec.algo.runs_fair() {
        algorithms.push("fair-lloyd".to_string());
    }
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        spec: SpecEcho {
            input: spec.input.display().to_string(),
            group_col: spec.group_col.clone(),
            k_values: spec.ks.clone(),
            algorithms,
            init: init_name(spec.init).to_string(),
            restarts: spec.restarts,
            iterations: spec.iterations,
            seed: spec.seed,
            preprocess: spec.preprocess.clone(),
            threads: spec.threads,
        },
        dataset: DatasetSummary {
            n: ingested.dataset.n(),
            raw_dim: ingested.dataset.d(),
            groups: ingested.dataset.m(),
            group_labels: ingested.group_labels.clone(),
            group_sizes: ingested.dataset.group_sizes().to_vec(),
            rejected_rows: ingested
                .rejected_rows
                .iter()
                .map(|(line, reason)| RejectedRow { line: *line, reason: reason.clone() })
                .collect(),
        },
        runs,
    };
    Ok((report, ingested))
}
