use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points with a demographic group label per point.
///
/// Group identifiers are dense integers in `[0, m)`; ingestion maps string
/// labels to them in sorted label order so runs are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
    group_of: Vec<usize>,
    group_sizes: Vec<usize>,
}

impl Dataset {
    /// `points` is row-major `n x d`; `group_of[i]` is the group of row `i`.
    pub fn new(points: Vec<f64>, d: usize, group_of: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("d must be >= 1".into()));
        }
        if points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                context: "points length not a multiple of d",
                expected: d,
                got: points.len(),
            });
        }
        let n = points.len() / d;
        if n == 0 {
            return Err(Error::InvalidArgument("dataset must contain at least one point".into()));
        }
        if group_of.len() != n {
            return Err(Error::DimensionMismatch {
                context: "group_of length",
                expected: n,
                got: group_of.len(),
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let m = group_of.iter().copied().max().unwrap() + 1;
        let mut group_sizes = vec![0usize; m];
        for &g in &group_of {
            group_sizes[g] += 1;
        }
        if group_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(
                "group identifiers must be dense: every id in [0, m) must appear".into(),
            ));
        }
        Ok(Self {
            points,
            n,
            d,
            group_of,
            group_sizes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of groups.
    pub fn m(&self) -> usize {
        self.group_sizes.len()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn group(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }
}

/// Cluster index per point for `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    cluster_of: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(cluster_of: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if let Some(&c) = cluster_of.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidArgument(format!(
                "cluster index {c} out of range for k = {k}"
            )));
        }
        Ok(Self { cluster_of, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.cluster_of.len()
    }

    #[inline]
    pub fn cluster(&self, i: usize) -> usize {
        self.cluster_of[i]
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub(crate) fn cluster_of_mut(&mut self) -> &mut [usize] {
        &mut self.cluster_of
    }
}

/// `k` centers in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    coords: Vec<f64>,
    k: usize,
    d: usize,
}

impl CenterSet {
    pub fn new(coords: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                context: "center coordinates",
                expected: d,
                got: coords.len(),
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite center coordinate".into()));
        }
        let k = coords.len() / d;
        Ok(Self { coords, k, d })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn coords_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Per cluster x group statistics of a fixed partition: the entire sufficient
/// statistic for the fair-center subproblem.
///
/// `frac[i][j]` is the fraction of group `j`'s points that fall in cluster `i`;
/// `base_cost[j]` is group `j`'s average within-cluster cost when each center
/// sits at the group's own cluster mean. A group's cost at centers `C` is then
/// `base_cost[j] + sum_i frac[i][j] * ||c_i - mean[i][j]||^2`, independent of n.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupClusterStats {
    k: usize,
    m: usize,
    d: usize,
    frac: Vec<f64>,
    mean: Vec<f64>,
    present: Vec<bool>,
    base_cost: Vec<f64>,
}

impl GroupClusterStats {
    pub fn from_parts(
        k: usize,
        m: usize,
        d: usize,
        frac: Vec<f64>,
        mean: Vec<f64>,
        present: Vec<bool>,
        base_cost: Vec<f64>,
    ) -> Result<Self> {
        if frac.len() != k * m || present.len() != k * m || mean.len() != k * m * d {
            return Err(Error::DimensionMismatch {
                context: "stats arrays",
                expected: k * m,
                got: frac.len(),
            });
        }
        if base_cost.len() != m {
            return Err(Error::DimensionMismatch {
                context: "base_cost length",
                expected: m,
                got: base_cost.len(),
            });
        }
        for j in 0..m {
            let col: f64 = (0..k).map(|i| frac[i * m + j]).sum();
            if (col - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "frac column {j} sums to {col}, expected 1"
                )));
            }
        }
        Ok(Self {
            k,
            m,
            d,
            frac,
            mean,
            present,
            base_cost,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// alpha_i^j: share of group `j` in cluster `i`.
    #[inline]
    pub fn frac(&self, i: usize, j: usize) -> f64 {
        self.frac[i * self.m + j]
    }

    /// Mean of group `j`'s points in cluster `i`; `None` when the cell is empty.
    #[inline]
    pub fn mean(&self, i: usize, j: usize) -> Option<&[f64]> {
        if self.present[i * self.m + j] {
            let off = (i * self.m + j) * self.d;
            Some(&self.mean[off..off + self.d])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_present(&self, i: usize, j: usize) -> bool {
        self.present[i * self.m + j]
    }

    pub fn base_cost(&self, j: usize) -> f64 {
        self.base_cost[j]
    }

    pub fn base_costs(&self) -> &[f64] {
        &self.base_cost
    }

    /// Distance between the two group means of cluster `i` (two-group case).
    /// Zero when either group is absent from the cluster.
    pub fn segment_length(&self, i: usize) -> f64 {
        debug_assert_eq!(self.m, 2);
        match (self.mean(i, 0), self.mean(i, 1)) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            _ => 0.0,
        }
    }
}

/// Outcome of a fixed-partition fair-center solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairSolveReport {
    pub centers: CenterSet,
    /// Simplex weights identifying the returned point of Z.
    pub gamma: Vec<f64>,
    /// f_j at the returned centers, one entry per group.
    pub group_costs: Vec<f64>,
    /// max_j group_costs[j].
    pub objective: f64,
    /// Certified lower bound on the optimum (min_j f_j at a Z point).
    pub lower_bound: f64,
    /// objective - lower_bound.
    pub certificate_gap: f64,
    pub iterations: usize,
}

impl FairSolveReport {
    pub(crate) fn from_solution(
        centers: CenterSet,
        gamma: Vec<f64>,
        group_costs: Vec<f64>,
        lower_bound: f64,
        iterations: usize,
    ) -> Self {
        let objective = group_costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            centers,
            gamma,
            group_costs,
            objective,
            lower_bound,
            certificate_gap: objective - lower_bound,
            iterations,
        }
    }
}
