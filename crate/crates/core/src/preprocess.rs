//! Feature normalization, categorical encoding and PCA projection applied
//! before clustering. Plans are fit once and applied many times, and
//! serialize to a versioned JSON document for reproducible pipelines.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

pub const PLAN_VERSION: u32 = 1;

/// Stddev floor: constant columns become all-zeros instead of dividing by 0.
const STDDEV_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Step {
    ZScore {
        mean: Vec<f64>,
        stddev: Vec<f64>,
    },
    OneHot {
        /// Per encoded column: source index and its sorted label set.
        columns: Vec<OneHotColumn>,
        input_dim: usize,
    },
    Pca {
        mean: Vec<f64>,
        /// d x r orthonormal basis, row-major.
        basis: Vec<f64>,
        input_dim: usize,
        target_dim: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneHotColumn {
    pub index: usize,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessPlan {
    pub version: u32,
    pub steps: Vec<Step>,
}

impl PreprocessPlan {
    pub fn new() -> Self {
        Self {
            version: PLAN_VERSION,
            steps: Vec::new(),
        }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let mut current = dataset.clone();
        for step in &self.steps {
            current = apply_step(step, &current)?;
        }
        Ok(current)
    }
}

impl Default for PreprocessPlan {
    fn default() -> Self {
        Self::new()
    }
}

/// Requested pipeline step, before fitting. `FairPca` is recognized but not
/// implemented; fitting it is an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepSpec {
    ZScore,
    OneHot(Vec<usize>),
    Pca(usize),
    FairPca(usize),
}

/// Parse a pipeline string such as `"zscore,pca:5"`. `pca:k` may use the
/// literal `k`, filled in via `k_value`.
pub fn parse_pipeline(spec: &str, k_value: Option<usize>) -> Result<Vec<StepSpec>> {
    let mut steps = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, arg) = match part.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (part, None),
        };
        let dim = |arg: Option<&str>| -> Result<usize> {
            match arg {
                Some("k") => k_value.ok_or_else(|| {
                    Error::InvalidArgument("pipeline uses pca:k but no k is in scope".into())
                }),
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad dimension '{s}'"))),
                None => Err(Error::InvalidArgument(format!("'{name}' requires a dimension"))),
            }
        };
        steps.push(match name {
            "zscore" => StepSpec::ZScore,
            "pca" => StepSpec::Pca(dim(arg)?),
            "fairpca" | "fair-pca" => StepSpec::FairPca(dim(arg)?),
            "onehot" => {
                let cols = arg
                    .unwrap_or("")
                    .split('+')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::InvalidArgument(format!("bad column '{s}'")))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                StepSpec::OneHot(cols)
            }
            other => {
                return Err(Error::InvalidArgument(format!("unknown pipeline step '{other}'")))
            }
        });
    }
    Ok(steps)
}

/// Fit a full plan by running each step on progressively transformed data.
pub fn fit_pipeline(specs: &[StepSpec], dataset: &Dataset) -> Result<(PreprocessPlan, Dataset)> {
    let mut plan = PreprocessPlan::new();
    let mut current = dataset.clone();
    for spec in specs {
        let step = match spec {
            StepSpec::ZScore => fit_zscore(&current)?,
            StepSpec::OneHot(cols) => fit_onehot(&current, cols)?,
            StepSpec::Pca(r) => fit_pca(&current, *r)?,
            StepSpec::FairPca(_) => {
                return Err(Error::InvalidArgument(
                    "fair-pca preprocessing is not implemented; use 'pca' or omit the step".into(),
                ))
            }
        };
        current = apply_step(&step, &current)?;
        plan.steps.push(step);
    }
    Ok((plan, current))
}

/// Per-feature standardization to mean 0, variance 1.
pub fn fit_zscore(dataset: &Dataset) -> Result<Step> {
    if dataset.n() < 2 {
        return Err(Error::InvalidArgument("zscore requires n >= 2".into()));
    }
    let (n, d) = (dataset.n(), dataset.d());
    let mut mean = vec![0.0; d];
    for p in 0..n {
        for (s, x) in dataset.point(p).iter().enumerate() {
            mean[s] += x;
        }
    }
    for mu in mean.iter_mut() {
        *mu /= n as f64;
    }
    let mut var = vec![0.0; d];
    for p in 0..n {
        for (s, x) in dataset.point(p).iter().enumerate() {
            let t = x - mean[s];
            var[s] += t * t;
        }
    }
    let stddev: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
    Ok(Step::ZScore { mean, stddev })
}

/// Replace each declared column with one indicator column per observed label
/// (sorted label order).
pub fn fit_onehot(dataset: &Dataset, columns: &[usize]) -> Result<Step> {
    let d = dataset.d();
    let mut encoded = Vec::new();
    for &col in columns {
        if col >= d {
            return Err(Error::InvalidArgument(format!("onehot column {col} out of range")));
        }
        let mut labels: Vec<f64> = (0..dataset.n()).map(|p| dataset.point(p)[col]).collect();
        labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        labels.dedup();
        encoded.push(OneHotColumn { index: col, labels });
    }
    Ok(Step::OneHot {
        columns: encoded,
        input_dim: d,
    })
}

/// Project onto the top-r eigenvectors of the sample covariance. Eigenvector
/// signs follow a deterministic convention: the largest-magnitude component of
/// each basis vector is positive.
pub fn fit_pca(dataset: &Dataset, r: usize) -> Result<Step> {
    let (n, d) = (dataset.n(), dataset.d());
    if r == 0 || r > d.min(n) {
        return Err(Error::InvalidArgument(format!(
            "pca dimension {r} outside [1, min(n, d) = {}]",
            d.min(n)
        )));
    }
    let mut mean = vec![0.0; d];
    for p in 0..n {
        for (s, x) in dataset.point(p).iter().enumerate() {
            mean[s] += x;
        }
    }
    for mu in mean.iter_mut() {
        *mu /= n as f64;
    }
    let denom = (n.max(2) - 1) as f64;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for p in 0..n {
        let pt = dataset.point(p);
        for a in 0..d {
            let xa = pt[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += xa * (pt[b] - mean[b]) / denom;
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut basis = vec![0.0; d * r];
    for (col, &e) in order.iter().take(r).enumerate() {
        let v = eig.eigenvectors.column(e);
        let mut pivot = 0;
        for s in 1..d {
            if v[s].abs() > v[pivot].abs() {
                pivot = s;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for s in 0..d {
            basis[s * r + col] = sign * v[s];
        }
    }
    Ok(Step::Pca {
        mean,
        basis,
        input_dim: d,
        target_dim: r,
    })
}

fn apply_step(step: &Step, dataset: &Dataset) -> Result<Dataset> {
    let (n, d) = (dataset.n(), dataset.d());
    match step {
        Step::ZScore { mean, stddev } => {
            if mean.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "zscore parameters vs data",
                    expected: mean.len(),
                    got: d,
                });
            }
            let mut out = Vec::with_capacity(n * d);
            for p in 0..n {
                for (s, x) in dataset.point(p).iter().enumerate() {
                    if stddev[s] <= STDDEV_FLOOR {
                        out.push(0.0);
                    } else {
                        out.push((x - mean[s]) / stddev[s]);
                    }
                }
            }
            Dataset::new(out, d, dataset.group_of().to_vec())
        }
        Step::OneHot { columns, input_dim } => {
            if *input_dim != d {
                return Err(Error::DimensionMismatch {
                    context: "onehot parameters vs data",
                    expected: *input_dim,
                    got: d,
                });
            }
            let encoded: Vec<usize> = columns.iter().map(|c| c.index).collect();
            let new_d = d - encoded.len() + columns.iter().map(|c| c.labels.len()).sum::<usize>();
            let mut out = Vec::with_capacity(n * new_d);
            for p in 0..n {
                let pt = dataset.point(p);
                for (s, &x) in pt.iter().enumerate() {
                    if let Some(col) = columns.iter().find(|c| c.index == s) {
                        let pos = col.labels.iter().position(|&l| l == x).ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "unseen label {x} in one-hot column {s} (row {p})"
                            ))
                        })?;
                        for li in 0..col.labels.len() {
                            out.push(if li == pos { 1.0 } else { 0.0 });
                        }
                    } else {
                        out.push(x);
                    }
                }
            }
            Dataset::new(out, new_d, dataset.group_of().to_vec())
        }
        Step::Pca {
            mean,
            basis,
            input_dim,
            target_dim,
        } => {
            if *input_dim != d {
                return Err(Error::DimensionMismatch {
                    context: "pca parameters vs data",
                    expected: *input_dim,
                    got: d,
                });
            }
            let r = *target_dim;
            let mut out = Vec::with_capacity(n * r);
            for p in 0..n {
                let pt = dataset.point(p);
                for col in 0..r {
                    let mut v = 0.0;
                    for s in 0..d {
                        v += (pt[s] - mean[s]) * basis[s * r + col];
                    }
                    out.push(v);
                }
            }
            Dataset::new(out, r, dataset.group_of().to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(points: Vec<f64>, d: usize) -> Dataset {
        let n = points.len() / d;
        Dataset::new(points, d, vec![0; n]).unwrap()
    }

    #[test]
    fn zscore_symmetric_pair() {
        let data = ds(vec![0.0, 2.0], 1);
        let step = fit_zscore(&data).unwrap();
        let out = apply_step(&step, &data).unwrap();
        assert_eq!(out.points_flat(), &[-1.0, 1.0]);
    }

    #[test]
    fn zscore_constant_column_becomes_zeros() {
        let data = ds(vec![5.0, 1.0, 5.0, 2.0], 2);
        let step = fit_zscore(&data).unwrap();
        let out = apply_step(&step, &data).unwrap();
        assert_eq!(out.point(0)[0], 0.0);
        assert_eq!(out.point(1)[0], 0.0);
    }

    #[test]
    fn zscore_moments_on_random_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (n, d) = (200, 5);
        let data = ds((0..n * d).map(|_| rng.gen_range(-3.0..7.0)).collect(), d);
        let step = fit_zscore(&data).unwrap();
        let out = apply_step(&step, &data).unwrap();
        for s in 0..d {
            let mean: f64 = (0..n).map(|p| out.point(p)[s]).sum::<f64>() / n as f64;
            let var: f64 = (0..n).map(|p| out.point(p)[s].powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn refitting_transformed_data_is_identity_like() {
        let data = ds(vec![1.0, 4.0, 2.0, 8.0, 3.0, 6.0], 2);
        let step = fit_zscore(&data).unwrap();
        let out = apply_step(&step, &data).unwrap();
        match fit_zscore(&out).unwrap() {
            Step::ZScore { mean, stddev } => {
                assert!(mean.iter().all(|m| m.abs() < 1e-12));
                assert!(stddev.iter().all(|s| (s - 1.0).abs() < 1e-12));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn onehot_binary_column() {
        let data = ds(vec![0.0, 1.5, 1.0, 2.5, 0.0, 3.5], 2);
        let step = fit_onehot(&data, &[0]).unwrap();
        let out = apply_step(&step, &data).unwrap();
        assert_eq!(out.d(), 3);
        assert_eq!(out.point(0), &[1.0, 0.0, 1.5]);
        assert_eq!(out.point(1), &[0.0, 1.0, 2.5]);
        for p in 0..3 {
            let row = out.point(p);
            assert_eq!(row[0] + row[1], 1.0);
        }
    }

    #[test]
    fn onehot_three_labels_and_roundtrip() {
        let data = ds(vec![2.0, 0.0, 1.0], 1);
        let step = fit_onehot(&data, &[0]).unwrap();
        let out = apply_step(&step, &data).unwrap();
        assert_eq!(out.d(), 3);
        // Indicator position recovers the sorted label.
        let labels = match &step {
            Step::OneHot { columns, .. } => columns[0].labels.clone(),
            _ => unreachable!(),
        };
        for p in 0..3 {
            let row = out.point(p);
            let pos = row.iter().position(|&x| x == 1.0).unwrap();
            assert_eq!(labels[pos], data.point(p)[0]);
        }
    }

    #[test]
    fn onehot_unseen_label_rejected() {
        let train = ds(vec![0.0, 1.0], 1);
        let step = fit_onehot(&train, &[0]).unwrap();
        let test = ds(vec![2.0], 1);
        assert!(apply_step(&step, &test).is_err());
    }

    #[test]
    fn pca_full_rank_preserves_distances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let (n, d) = (40, 4);
        let data = ds((0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(), d);
        let step = fit_pca(&data, d).unwrap();
        let out = apply_step(&step, &data).unwrap();
        for p in 0..5 {
            for q in 0..5 {
                let before = crate::cost::sq_dist(data.point(p), data.point(q));
                let after = crate::cost::sq_dist(out.point(p), out.point(q));
                assert!((before - after).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pca_rank_one_exact() {
        // Points along a single direction: r=1 reconstructs exactly.
        let dir = [3.0, 4.0];
        let mut pts = Vec::new();
        for t in 0..10 {
            pts.push(t as f64 * dir[0]);
            pts.push(t as f64 * dir[1]);
        }
        let data = ds(pts, 2);
        let step = fit_pca(&data, 1).unwrap();
        let out = apply_step(&step, &data).unwrap();
        // Projected variance equals original total variance.
        let total = |d: &Dataset, dim: usize| -> f64 {
            let n = d.n() as f64;
            let mut mean = vec![0.0; dim];
            for p in 0..d.n() {
                for (s, x) in d.point(p).iter().enumerate() {
                    mean[s] += x / n;
                }
            }
            (0..d.n())
                .map(|p| crate::cost::sq_dist(d.point(p), &mean))
                .sum::<f64>()
                / (n - 1.0)
        };
        assert!((total(&data, 2) - total(&out, 1)).abs() < 1e-8);
    }

    #[test]
    fn pca_projection_variance_is_top_eigenvalue_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let (n, d, r) = (100, 10, 3);
        let data = ds((0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(), d);
        // Dense eigendecomposition oracle for the full spectrum.
        let step_full = fit_pca(&data, d).unwrap();
        let full = apply_step(&step_full, &data).unwrap();
        let var_of = |out: &Dataset, col: usize| -> f64 {
            let n = out.n() as f64;
            let mean: f64 = (0..out.n()).map(|p| out.point(p)[col]).sum::<f64>() / n;
            (0..out.n()).map(|p| (out.point(p)[col] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        let top_r_sum: f64 = (0..r).map(|c| var_of(&full, c)).sum();
        let step = fit_pca(&data, r).unwrap();
        let out = apply_step(&step, &data).unwrap();
        let proj_var: f64 = (0..r).map(|c| var_of(&out, c)).sum();
        assert!((proj_var - top_r_sum).abs() / top_r_sum < 1e-6);
    }

    #[test]
    fn pca_basis_orthonormal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let (n, d, r) = (50, 6, 4);
        let data = ds((0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect(), d);
        let step = fit_pca(&data, r).unwrap();
        let basis = match &step {
            Step::Pca { basis, .. } => basis.clone(),
            _ => unreachable!(),
        };
        for a in 0..r {
            for b in 0..r {
                let dot: f64 = (0..d).map(|s| basis[s * r + a] * basis[s * r + b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-8, "B^T B[{a}][{b}] = {dot}");
            }
        }
    }

    #[test]
    fn pca_rejects_bad_dim() {
        let data = ds(vec![0.0, 1.0, 2.0, 3.0], 2);
        assert!(fit_pca(&data, 0).is_err());
        assert!(fit_pca(&data, 3).is_err());
    }

    #[test]
    fn fairpca_rejected_with_message() {
        let data = ds(vec![0.0, 1.0], 1);
        let specs = parse_pipeline("fairpca:1", None).unwrap();
        let err = fit_pipeline(&specs, &data).unwrap_err();
        assert!(err.to_string().contains("fair-pca"));
    }

    #[test]
    fn pipeline_parsing() {
        assert_eq!(
            parse_pipeline("zscore,pca:k", Some(5)).unwrap(),
            vec![StepSpec::ZScore, StepSpec::Pca(5)]
        );
        assert_eq!(
            parse_pipeline("onehot:1+3,zscore", None).unwrap(),
            vec![StepSpec::OneHot(vec![1, 3]), StepSpec::ZScore]
        );
        assert!(parse_pipeline("pca:k", None).is_err());
        assert!(parse_pipeline("mystery", None).is_err());
    }

    #[test]
    fn plan_json_roundtrip() {
        let data = ds(vec![1.0, 2.0, 3.0, 4.0], 1);
        let (plan, _) = fit_pipeline(&[StepSpec::ZScore], &data).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        let back: PreprocessPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back.version, PLAN_VERSION);
        let a = plan.apply(&data).unwrap();
        let b = back.apply(&data).unwrap();
        assert_eq!(a.points_flat(), b.points_flat());
    }
}
