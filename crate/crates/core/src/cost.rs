//! Clustering cost functions: the raw k-means cost, the per-group average
//! costs f_j, and the fair objective (their maximum), together with the
//! sufficient-statistic extraction that makes the fair-center solvers
//! independent of the number of points.

use crate::error::{Error, Result};
use crate::sum::KahanSum;
use crate::types::{Assignment, CenterSet, Dataset, GroupClusterStats};

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// Sum of squared distances from each point to its assigned center, optionally
/// restricted to the points of one group.
pub fn kmeans_cost(
    centers: &CenterSet,
    dataset: &Dataset,
    assignment: &Assignment,
    subset: Option<usize>,
) -> Result<f64> {
    if centers.d() != dataset.d() {
        return Err(Error::DimensionMismatch {
            context: "center dimension vs dataset",
            expected: dataset.d(),
            got: centers.d(),
        });
    }
    if assignment.k() != centers.k() {
        return Err(Error::DimensionMismatch {
            context: "assignment k vs centers",
            expected: centers.k(),
            got: assignment.k(),
        });
    }
    if assignment.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            context: "assignment length vs dataset",
            expected: dataset.n(),
            got: assignment.n(),
        });
    }
    if let Some(j) = subset {
        if j >= dataset.m() {
            return Err(Error::GroupOutOfRange { got: j, m: dataset.m() });
        }
    }
    let mut acc = KahanSum::new();
    for p in 0..dataset.n() {
        if subset.is_some_and(|j| dataset.group(p) != j) {
            continue;
        }
        acc.add(sq_dist(dataset.point(p), centers.center(assignment.cluster(p))));
    }
    Ok(acc.value())
}

/// Exact per cluster x group counts, means, and base costs for a fixed partition.
pub fn compute_group_stats(dataset: &Dataset, assignment: &Assignment) -> Result<GroupClusterStats> {
    if assignment.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            context: "assignment length vs dataset",
            expected: dataset.n(),
            got: assignment.n(),
        });
    }
    let (k, m, d) = (assignment.k(), dataset.m(), dataset.d());
    let mut count = vec![0usize; k * m];
    let mut mean = vec![0.0f64; k * m * d];
    for p in 0..dataset.n() {
        let cell = assignment.cluster(p) * m + dataset.group(p);
        count[cell] += 1;
        let off = cell * d;
        for (s, x) in dataset.point(p).iter().enumerate() {
            mean[off + s] += x;
        }
    }
    let present: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    for cell in 0..k * m {
        if count[cell] > 0 {
            let inv = 1.0 / count[cell] as f64;
            for s in 0..d {
                mean[cell * d + s] *= inv;
            }
        }
    }
    let mut frac = vec![0.0f64; k * m];
    for i in 0..k {
        for j in 0..m {
            frac[i * m + j] = count[i * m + j] as f64 / dataset.group_sizes()[j] as f64;
        }
    }
    // Base cost: average within-cell variance around the group-cluster means.
    let mut base_acc: Vec<KahanSum> = vec![KahanSum::new(); m];
    for p in 0..dataset.n() {
        let j = dataset.group(p);
        let cell = assignment.cluster(p) * m + j;
        let mu = &mean[cell * d..cell * d + d];
        base_acc[j].add(sq_dist(dataset.point(p), mu));
    }
    let base_cost: Vec<f64> = base_acc
        .iter()
        .zip(dataset.group_sizes())
        .map(|(acc, &sz)| acc.value() / sz as f64)
        .collect();
    GroupClusterStats::from_parts(k, m, d, frac, mean, present, base_cost)
}

/// Group j's average cost at the given centers:
/// `base_cost[j] + sum_i frac[i][j] * ||c_i - mean[i][j]||^2`.
pub fn group_cost(centers: &CenterSet, stats: &GroupClusterStats, j: usize) -> Result<f64> {
    if j >= stats.m() {
        return Err(Error::GroupOutOfRange { got: j, m: stats.m() });
    }
    if centers.k() != stats.k() || centers.d() != stats.d() {
        return Err(Error::DimensionMismatch {
            context: "centers vs stats",
            expected: stats.k() * stats.d(),
            got: centers.k() * centers.d(),
        });
    }
    let mut acc = KahanSum::new();
    acc.add(stats.base_cost(j));
    for i in 0..stats.k() {
        if let Some(mu) = stats.mean(i, j) {
            acc.add(stats.frac(i, j) * sq_dist(centers.center(i), mu));
        }
    }
    Ok(acc.value())
}

/// The fair objective: the largest per-group average cost.
pub fn fair_objective(centers: &CenterSet, stats: &GroupClusterStats) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for j in 0..stats.m() {
        best = best.max(group_cost(centers, stats, j)?);
    }
    Ok(best)
}

/// All per-group costs at once.
pub fn group_costs(centers: &CenterSet, stats: &GroupClusterStats) -> Result<Vec<f64>> {
    (0..stats.m()).map(|j| group_cost(centers, stats, j)).collect()
}

/// Gradient of f_j with respect to all k*d center coordinates:
/// `d f_j / d c_i = 2 frac[i][j] (c_i - mean[i][j])`, zero for absent cells.
pub fn group_cost_gradient(centers: &CenterSet, stats: &GroupClusterStats, j: usize) -> Result<Vec<f64>> {
    if j >= stats.m() {
        return Err(Error::GroupOutOfRange { got: j, m: stats.m() });
    }
    let d = stats.d();
    let mut grad = vec![0.0; stats.k() * d];
    for i in 0..stats.k() {
        if let Some(mu) = stats.mean(i, j) {
            let a = stats.frac(i, j);
            let c = centers.center(i);
            for s in 0..d {
                grad[i * d + s] = 2.0 * a * (c[s] - mu[s]);
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cluster(points: &[f64], groups: &[usize]) -> (Dataset, Assignment) {
        let ds = Dataset::new(points.to_vec(), 1, groups.to_vec()).unwrap();
        let asg = Assignment::new(vec![0; ds.n()], 1).unwrap();
        (ds, asg)
    }

    #[test]
    fn point_at_its_center_costs_zero() {
        let (ds, asg) = one_cluster(&[3.5], &[0]);
        let c = CenterSet::new(vec![3.5], 1).unwrap();
        assert_eq!(kmeans_cost(&c, &ds, &asg, None).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_pair_around_zero() {
        let (ds, asg) = one_cluster(&[-1.0, 1.0], &[0, 0]);
        let c = CenterSet::new(vec![0.0], 1).unwrap();
        assert_eq!(kmeans_cost(&c, &ds, &asg, None).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (ds, asg) = one_cluster(&[0.0], &[0]);
        let c = CenterSet::new(vec![0.0, 0.0], 2).unwrap();
        assert!(kmeans_cost(&c, &ds, &asg, None).is_err());
    }

    #[test]
    fn stats_of_symmetric_pair() {
        let (ds, asg) = one_cluster(&[0.0, 2.0], &[0, 0]);
        let st = compute_group_stats(&ds, &asg).unwrap();
        assert_eq!(st.mean(0, 0).unwrap(), &[1.0]);
        assert_eq!(st.frac(0, 0), 1.0);
        assert_eq!(st.base_cost(0), 1.0);
    }

    #[test]
    fn frac_column_concentrates_when_group_in_one_cluster() {
        let ds = Dataset::new(vec![0.0, 0.1, 9.0], 1, vec![0, 0, 1]).unwrap();
        let asg = Assignment::new(vec![0, 0, 1], 2).unwrap();
        let st = compute_group_stats(&ds, &asg).unwrap();
        assert_eq!(st.frac(0, 0), 1.0);
        assert_eq!(st.frac(1, 0), 0.0);
        assert!(!st.is_present(1, 0));
        assert_eq!(st.frac(1, 1), 1.0);
    }

    #[test]
    fn group_cost_at_group_means_is_base_cost() {
        let ds = Dataset::new(vec![0.0, 2.0, 5.0, 9.0], 1, vec![0, 0, 1, 1]).unwrap();
        let asg = Assignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let st = compute_group_stats(&ds, &asg).unwrap();
        // Centers at group 0's means: cluster 0 -> 1.0, cluster 1 absent for
        // group 0 (any center); pick the group-1 mean there.
        let c = CenterSet::new(vec![1.0, 7.0], 1).unwrap();
        assert!((group_cost(&c, &st, 0).unwrap() - st.base_cost(0)).abs() < 1e-15);
        assert!((group_cost(&c, &st, 1).unwrap() - st.base_cost(1)).abs() < 1e-15);
    }

    #[test]
    fn fair_objective_single_group_is_mean_cost() {
        let (ds, asg) = one_cluster(&[-1.0, 1.0], &[0, 0]);
        let st = compute_group_stats(&ds, &asg).unwrap();
        let c = CenterSet::new(vec![0.0], 1).unwrap();
        let phi = fair_objective(&c, &st).unwrap();
        let mean_cost = kmeans_cost(&c, &ds, &asg, None).unwrap() / ds.n() as f64;
        assert!((phi - mean_cost).abs() < 1e-15);
    }

    #[test]
    fn group_out_of_range() {
        let (ds, asg) = one_cluster(&[0.0], &[0]);
        let st = compute_group_stats(&ds, &asg).unwrap();
        let c = CenterSet::new(vec![0.0], 1).unwrap();
        assert!(matches!(
            group_cost(&c, &st, 1).unwrap_err(),
            Error::GroupOutOfRange { .. }
        ));
    }
}
