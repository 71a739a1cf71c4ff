//! Fairness and quality metrics: per-group average costs, the maximum
//! pairwise cost ratio, two-group balance, and the price of fairness.

use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::cost::{compute_group_stats, group_costs, kmeans_cost};
use crate::error::{Error, Result};
use crate::types::{Assignment, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_group_cost: Vec<f64>,
    /// Max over group pairs of f_j / f_j'; +inf sentinel when some group has
    /// zero cost while another does not.
    pub max_cost_ratio: f64,
    /// Population-wide average cost.
    pub overall_cost: f64,
    /// Two-group balance; `None` for m != 2.
    pub balance: Option<f64>,
    /// Relative overall-cost increase vs a baseline; `None` without a
    /// baseline or with a zero-cost baseline.
    pub price_of_fairness: Option<f64>,
}

/// Per-group average costs of a clustering result.
pub fn per_group_costs(result: &ClusteringResult, dataset: &Dataset) -> Result<Vec<f64>> {
    let stats = compute_group_stats(dataset, &result.assignment)?;
    group_costs(&result.centers, &stats)
}

/// Maximum ratio of average clustering cost between any two groups.
pub fn max_cost_ratio(result: &ClusteringResult, dataset: &Dataset) -> Result<f64> {
    if dataset.m() < 2 {
        return Err(Error::UnsupportedGroupCount { required: 2, got: dataset.m() });
    }
    let costs = per_group_costs(result, dataset)?;
    Ok(ratio_of(&costs))
}

fn ratio_of(costs: &[f64]) -> f64 {
    let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        if max == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        max / min
    }
}

/// Proportionality of a two-group clustering: the minimum over non-empty
/// clusters of the smaller-to-larger group-count ratio. A cluster containing
/// only one group contributes 0.
pub fn balance(dataset: &Dataset, assignment: &Assignment) -> Result<f64> {
    if dataset.m() != 2 {
        return Err(Error::UnsupportedGroupCount { required: 2, got: dataset.m() });
    }
    let k = assignment.k();
    let mut count = vec![[0usize; 2]; k];
    for p in 0..dataset.n() {
        count[assignment.cluster(p)][dataset.group(p)] += 1;
    }
    let mut best = f64::INFINITY;
    for c in count.iter().filter(|c| c[0] + c[1] > 0) {
        let (a, b) = (c[0] as f64, c[1] as f64);
        let r = if a == 0.0 || b == 0.0 {
            0.0
        } else {
            (a / b).min(b / a)
        };
        best = best.min(r);
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// Relative increase in the overall average k-means cost of the fair result
/// against a baseline. `None` when the baseline cost is zero.
pub fn price_of_fairness(
    fair_result: &ClusteringResult,
    baseline_result: &ClusteringResult,
    dataset: &Dataset,
) -> Result<Option<f64>> {
    let n = dataset.n() as f64;
    let fair = kmeans_cost(&fair_result.centers, dataset, &fair_result.assignment, None)? / n;
    let base = kmeans_cost(&baseline_result.centers, dataset, &baseline_result.assignment, None)? / n;
    if base == 0.0 {
        return Ok(None);
    }
    Ok(Some((fair - base) / base))
}

/// Full metrics for one clustering result.
pub fn metrics_report(
    result: &ClusteringResult,
    dataset: &Dataset,
    baseline: Option<&ClusteringResult>,
) -> Result<MetricsReport> {
    let per_group_cost = per_group_costs(result, dataset)?;
    let overall_cost =
        kmeans_cost(&result.centers, dataset, &result.assignment, None)? / dataset.n() as f64;
    let bal = if dataset.m() == 2 {
        Some(balance(dataset, &result.assignment)?)
    } else {
        None
    };
    let pof = match baseline {
        Some(b) => price_of_fairness(result, b, dataset)?,
        None => None,
    };
    Ok(MetricsReport {
        max_cost_ratio: if dataset.m() >= 2 { ratio_of(&per_group_cost) } else { 1.0 },
        per_group_cost,
        overall_cost,
        balance: bal,
        price_of_fairness: pof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{assign_points, update_means};
    use crate::types::CenterSet;

    fn result_for(dataset: &Dataset, centers: CenterSet) -> ClusteringResult {
        let assignment = assign_points(dataset, &centers);
        let n = dataset.n() as f64;
        let obj = kmeans_cost(&centers, dataset, &assignment, None).unwrap() / n;
        ClusteringResult {
            centers,
            assignment,
            objective_trace: vec![obj],
            fair_report: None,
            iterations_run: 1,
        }
    }

    #[test]
    fn ratio_one_when_costs_equal() {
        // Mirror-symmetric two-group data with center at the middle.
        let ds = Dataset::new(vec![-1.0, 1.0], 1, vec![0, 1]).unwrap();
        let res = result_for(&ds, CenterSet::new(vec![0.0], 1).unwrap());
        assert_eq!(max_cost_ratio(&res, &ds).unwrap(), 1.0);
    }

    #[test]
    fn ratio_two_for_costs_two_and_one() {
        // Group 0 at distance sqrt(2), group 1 at distance 1.
        let ds = Dataset::new(vec![-2.0f64.sqrt(), 1.0], 1, vec![0, 1]).unwrap();
        let res = result_for(&ds, CenterSet::new(vec![0.0], 1).unwrap());
        assert!((max_cost_ratio(&res, &ds).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_infinite_when_one_group_is_free() {
        let ds = Dataset::new(vec![0.0, 1.0], 1, vec![0, 1]).unwrap();
        let res = result_for(&ds, CenterSet::new(vec![0.0], 1).unwrap());
        assert!(max_cost_ratio(&res, &ds).unwrap().is_infinite());
    }

    #[test]
    fn balance_balanced_clusters() {
        let ds = Dataset::new(vec![0.0, 0.1, 0.2, 0.3, 5.0, 5.1, 5.2, 5.3], 1,
            vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
        let asg = Assignment::new(vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        assert_eq!(balance(&ds, &asg).unwrap(), 1.0);
    }

    #[test]
    fn balance_zero_for_single_group_cluster() {
        let ds = Dataset::new(vec![0.0, 0.1, 5.0], 1, vec![0, 0, 1]).unwrap();
        let asg = Assignment::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(balance(&ds, &asg).unwrap(), 0.0);
    }

    #[test]
    fn balance_takes_worst_cluster() {
        // Cluster 0 ratio 1/2, cluster 1 ratio 1/3.
        let ds = Dataset::new(
            vec![0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 5.3],
            1,
            vec![0, 1, 1, 0, 1, 1, 1],
        )
        .unwrap();
        let asg = Assignment::new(vec![0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        assert!((balance(&ds, &asg).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn price_of_fairness_identical_results_zero() {
        let ds = Dataset::new(vec![0.0, 1.0, 4.0, 5.0], 1, vec![0, 1, 0, 1]).unwrap();
        let res = result_for(&ds, CenterSet::new(vec![0.5, 4.5], 1).unwrap());
        let p = price_of_fairness(&res, &res, &ds).unwrap().unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn price_of_fairness_zero_baseline_is_none() {
        let ds = Dataset::new(vec![0.0, 5.0], 1, vec![0, 1]).unwrap();
        let exact = result_for(&ds, CenterSet::new(vec![0.0, 5.0], 1).unwrap());
        let off = result_for(&ds, CenterSet::new(vec![0.5, 5.0], 1).unwrap());
        assert!(price_of_fairness(&off, &exact, &ds).unwrap().is_none());
    }

    #[test]
    fn per_group_cost_matches_point_level() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 50;
        let pts: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let groups: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let groups = {
            let mut g = groups;
            g[0] = 0;
            g[1] = 1;
            g
        };
        let ds = Dataset::new(pts, 2, groups).unwrap();
        let centers = CenterSet::new(vec![-1.0, 0.0, 1.0, 1.0], 2).unwrap();
        let res = result_for(&ds, centers);
        let via_stats = per_group_costs(&res, &ds).unwrap();
        for j in 0..2 {
            let raw = kmeans_cost(&res.centers, &ds, &res.assignment, Some(j)).unwrap()
                / ds.group_sizes()[j] as f64;
            assert!((raw - via_stats[j]).abs() <= 1e-10 * raw.max(1.0));
        }
        let _ = update_means(&ds, &res.assignment);
    }
}
