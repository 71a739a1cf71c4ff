//! Outer clustering loops: standard Lloyd's k-means and Fair-Lloyd, which
//! replaces the mean-update step with the fixed-partition fair-center solve.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{compute_group_stats, fair_objective, kmeans_cost, sq_dist};
use crate::error::{Error, Result};
use crate::solver::{line_search_2groups, solve_mwu, solve_subgradient, SolverConfig, SolverMode};
use crate::types::{Assignment, CenterSet, Dataset, FairSolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Random,
    KMeansPlusPlus,
    /// Lloyd on group-weighted points (weight 1/|A_j|), whose optimum is a
    /// 2-approximation (m-approximation for m groups) proxy for the fair
    /// objective.
    WeightedLloyd,
}

#[derive(Debug, Clone)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_outer_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitMethod,
    /// Relative objective-improvement threshold treated as converged.
    pub rel_tol: f64,
}

impl ClusteringConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_outer_iterations: 200,
            restarts: 1,
            seed: 0,
            init: InitMethod::Random,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub centers: CenterSet,
    pub assignment: Assignment,
    /// Objective after each outer iteration (mean cost for Lloyd, fair
    /// objective for Fair-Lloyd). Non-increasing.
    pub objective_trace: Vec<f64>,
    pub fair_report: Option<FairSolveReport>,
    pub iterations_run: usize,
}

impl ClusteringResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("at least one iteration")
    }
}

/// Nearest-center assignment; ties broken by the lowest cluster index.
pub fn assign_points(dataset: &Dataset, centers: &CenterSet) -> Assignment {
    let mut cluster_of = Vec::with_capacity(dataset.n());
    for p in 0..dataset.n() {
        let pt = dataset.point(p);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..centers.k() {
            let dist = sq_dist(pt, centers.center(i));
            if dist < best_d {
                best_d = dist;
                best = i;
            }
        }
        cluster_of.push(best);
    }
    Assignment::new(cluster_of, centers.k()).expect("indices in range by construction")
}

/// Cluster means. Empty clusters are re-seeded to the point farthest from its
/// currently assigned mean (ties by lowest point index), each point used at
/// most once.
pub fn update_means(dataset: &Dataset, assignment: &Assignment) -> CenterSet {
    weighted_means(dataset, assignment, None)
}

fn weighted_means(dataset: &Dataset, assignment: &Assignment, weights: Option<&[f64]>) -> CenterSet {
    let (k, d) = (assignment.k(), dataset.d());
    let mut sums = vec![0.0f64; k * d];
    let mut totals = vec![0.0f64; k];
    for p in 0..dataset.n() {
        let i = assignment.cluster(p);
        let w = weights.map_or(1.0, |ws| ws[p]);
        totals[i] += w;
        for (s, x) in dataset.point(p).iter().enumerate() {
            sums[i * d + s] += w * x;
        }
    }
    for i in 0..k {
        if totals[i] > 0.0 {
            for s in 0..d {
                sums[i * d + s] /= totals[i];
            }
        }
    }
    let empties: Vec<usize> = (0..k).filter(|&i| totals[i] == 0.0).collect();
    if !empties.is_empty() {
        let mut used = vec![false; dataset.n()];
        for &i in &empties {
            let mut far_p = 0;
            let mut far_d = f64::NEG_INFINITY;
            for p in 0..dataset.n() {
                if used[p] || totals[assignment.cluster(p)] == 0.0 {
                    continue;
                }
                let c = assignment.cluster(p);
                let dist = sq_dist(dataset.point(p), &sums[c * d..(c + 1) * d]);
                if dist > far_d {
                    far_d = dist;
                    far_p = p;
                }
            }
            used[far_p] = true;
            sums[i * d..(i + 1) * d].copy_from_slice(dataset.point(far_p));
        }
    }
    CenterSet::new(sums, d).expect("finite means")
}

/// k distinct data points chosen uniformly without replacement.
pub fn init_random(dataset: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    if k > dataset.n() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points {}",
            dataset.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = sample(&mut rng, dataset.n(), k).into_iter().collect();
    idx.sort_unstable();
    let mut coords = Vec::with_capacity(k * dataset.d());
    for &p in &idx {
        coords.extend_from_slice(dataset.point(p));
    }
    CenterSet::new(coords, dataset.d())
}

/// D^2-sampling: first center uniform, each next with probability proportional
/// to the squared distance to the nearest chosen center.
pub fn init_kmeanspp(dataset: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    if k > dataset.n() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points {}",
            dataset.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dataset.n();
    let d = dataset.d();
    let mut coords = Vec::with_capacity(k * d);
    let first = rng.gen_range(0..n);
    coords.extend_from_slice(dataset.point(first));
    let mut min_d2: Vec<f64> = (0..n)
        .map(|p| sq_dist(dataset.point(p), dataset.point(first)))
        .collect();
    for _ in 1..k {
        let total: f64 = min_d2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (p, &w) in min_d2.iter().enumerate() {
                if target < w {
                    pick = p;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All points coincide with chosen centers; any copy will do.
            rng.gen_range(0..n)
        };
        let c0 = coords.len();
        coords.extend_from_slice(dataset.point(chosen));
        let new_center = coords[c0..].to_vec();
        for p in 0..n {
            let dist = sq_dist(dataset.point(p), &new_center);
            if dist < min_d2[p] {
                min_d2[p] = dist;
            }
        }
    }
    CenterSet::new(coords, d)
}

/// Centers from a weighted-Lloyd run minimizing the sum of per-group average
/// costs g(C). A c-approximation to g is a 2c-approximation (mc for m groups)
/// for the fair objective, so these centers are an approximation-preserving
/// initialization for Fair-Lloyd.
pub fn init_weighted_lloyd(dataset: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    let weights: Vec<f64> = (0..dataset.n())
        .map(|p| 1.0 / dataset.group_sizes()[dataset.group(p)] as f64)
        .collect();
    let mut centers = init_random(dataset, k, seed)?;
    let mut prev: Option<Assignment> = None;
    let mut prev_obj = f64::INFINITY;
    for _ in 0..200 {
        let asg = assign_points(dataset, &centers);
        if prev.as_ref() == Some(&asg) {
            break;
        }
        centers = weighted_means(dataset, &asg, Some(&weights));
        let obj: f64 = {
            let mut acc = crate::sum::KahanSum::new();
            for p in 0..dataset.n() {
                acc.add(weights[p] * sq_dist(dataset.point(p), centers.center(asg.cluster(p))));
            }
            acc.value()
        };
        let improved = (prev_obj - obj) > prev_obj.abs().max(1.0) * 1e-10;
        prev = Some(asg);
        prev_obj = obj;
        if !improved {
            break;
        }
    }
    Ok(centers)
}

/// The weighted objective g(C) = sum_j Delta(C, U_C ∩ A_j)/|A_j| at the
/// nearest-center partition of C.
pub fn weighted_objective(dataset: &Dataset, centers: &CenterSet) -> Result<f64> {
    let asg = assign_points(dataset, centers);
    let mut total = 0.0;
    for j in 0..dataset.m() {
        total += kmeans_cost(centers, dataset, &asg, Some(j))? / dataset.group_sizes()[j] as f64;
    }
    Ok(total)
}

fn initial_centers(dataset: &Dataset, config: &ClusteringConfig, seed: u64) -> Result<CenterSet> {
    match config.init {
        InitMethod::Random => init_random(dataset, config.k, seed),
        InitMethod::KMeansPlusPlus => init_kmeanspp(dataset, config.k, seed),
        InitMethod::WeightedLloyd => init_weighted_lloyd(dataset, config.k, seed),
    }
}

fn lloyd_single(dataset: &Dataset, config: &ClusteringConfig, seed: u64) -> Result<ClusteringResult> {
    let mut centers = initial_centers(dataset, config, seed)?;
    let mut trace = Vec::new();
    let mut prev_asg: Option<Assignment> = None;
    let mut iterations = 0;
    let n = dataset.n() as f64;
    loop {
        let asg = assign_points(dataset, &centers);
        if prev_asg.as_ref() == Some(&asg) {
            break;
        }
        centers = update_means(dataset, &asg);
        let obj = kmeans_cost(&centers, dataset, &asg, None)? / n;
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| prev - obj < prev.abs().max(1.0) * config.rel_tol);
        trace.push(obj);
        prev_asg = Some(asg);
        iterations += 1;
        if converged || iterations >= config.max_outer_iterations {
            break;
        }
    }
    let assignment = prev_asg.expect("at least one iteration");
    Ok(ClusteringResult {
        centers,
        assignment,
        objective_trace: trace,
        fair_report: None,
        iterations_run: iterations,
    })
}

/// Standard Lloyd's k-means; best of `config.restarts` runs by final mean cost.
pub fn lloyd(dataset: &Dataset, config: &ClusteringConfig) -> Result<ClusteringResult> {
    if config.k > dataset.n() {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds number of points {}",
            config.k,
            dataset.n()
        )));
    }
    let mut best: Option<ClusteringResult> = None;
    for r in 0..config.restarts {
        let res = lloyd_single(dataset, config, restart_seed(config.seed, r))?;
        if best.as_ref().is_none_or(|b| res.objective() < b.objective()) {
            best = Some(res);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

pub(crate) fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed.wrapping_add((restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Move the farthest-from-its-center point into each empty cluster so the
/// fair-center statistics never see an empty cluster.
fn repair_empty_clusters(dataset: &Dataset, centers: &CenterSet, asg: &mut Assignment) {
    let k = asg.k();
    let mut counts = vec![0usize; k];
    for p in 0..dataset.n() {
        counts[asg.cluster(p)] += 1;
    }
    let empties: Vec<usize> = (0..k).filter(|&i| counts[i] == 0).collect();
    if empties.is_empty() {
        return;
    }
    let mut moved = vec![false; dataset.n()];
    for &i in &empties {
        let mut far_p = usize::MAX;
        let mut far_d = f64::NEG_INFINITY;
        for p in 0..dataset.n() {
            if moved[p] || counts[asg.cluster(p)] <= 1 {
                continue;
            }
            let dist = sq_dist(dataset.point(p), centers.center(asg.cluster(p)));
            if dist > far_d {
                far_d = dist;
                far_p = p;
            }
        }
        if far_p == usize::MAX {
            continue;
        }
        moved[far_p] = true;
        counts[asg.cluster(far_p)] -= 1;
        asg.cluster_of_mut()[far_p] = i;
        counts[i] += 1;
    }
}

/// Solve the fair-center subproblem for a fixed partition, dispatching on the
/// number of groups: exact line search for two, MWU polished by the
/// subgradient oracle when its certificate is loose for more.
pub fn fair_center_step(
    dataset: &Dataset,
    assignment: &Assignment,
    solver_config: &SolverConfig,
) -> Result<FairSolveReport> {
    let stats = compute_group_stats(dataset, assignment)?;
    match (dataset.m(), solver_config.mode) {
        (1, _) => {
            let centers = update_means(dataset, assignment);
            let cost = fair_objective(&centers, &stats)?;
            Ok(FairSolveReport {
                centers,
                gamma: vec![1.0],
                group_costs: vec![cost],
                objective: cost,
                lower_bound: cost,
                certificate_gap: 0.0,
                iterations: 0,
            })
        }
        (2, SolverMode::LineSearch) => line_search_2groups(&stats, solver_config),
        (_, SolverMode::Subgradient) => solve_subgradient(&stats, solver_config),
        (_, SolverMode::Mwu) | (_, SolverMode::LineSearch) => {
            let mwu = solve_mwu(&stats, &SolverConfig { mode: SolverMode::Mwu, ..*solver_config })?;
            if mwu.certificate_gap > 1e-4 * mwu.objective.abs().max(1e-300) {
                let sg = solve_subgradient(&stats, &SolverConfig::subgradient())?;
                if sg.objective < mwu.objective {
                    return Ok(sg);
                }
            }
            Ok(mwu)
        }
    }
}

fn fair_lloyd_single(
    dataset: &Dataset,
    config: &ClusteringConfig,
    solver_config: &SolverConfig,
    seed: u64,
) -> Result<ClusteringResult> {
    if dataset.m() == 1 {
        // Single group: the fair objective is the mean cost and the fair
        // center of each cluster is its mean, so the trajectory is Lloyd's.
        return lloyd_single(dataset, config, seed);
    }
    let mut centers = initial_centers(dataset, config, seed)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut prev_asg: Option<Assignment> = None;
    let mut report: Option<FairSolveReport> = None;
    let mut iterations = 0;
    loop {
        let mut asg = assign_points(dataset, &centers);
        repair_empty_clusters(dataset, &centers, &mut asg);
        if prev_asg.as_ref() == Some(&asg) {
            break;
        }
        let rep = fair_center_step(dataset, &asg, solver_config)?;
        if trace.last().is_some_and(|&prev| rep.objective > prev) {
            // A heuristic center step (or an empty-cluster repair) failed to
            // improve; keep the previous centers and stop.
            prev_asg = Some(asg);
            break;
        }
        centers = rep.centers.clone();
        let converged = trace
            .last()
            .is_some_and(|&prev| prev - rep.objective < prev.abs().max(1.0) * config.rel_tol);
        trace.push(rep.objective);
        report = Some(rep);
        prev_asg = Some(asg);
        iterations += 1;
        if converged || iterations >= config.max_outer_iterations {
            break;
        }
    }
    let assignment = prev_asg.expect("at least one iteration");
    Ok(ClusteringResult {
        centers,
        assignment,
        objective_trace: trace,
        fair_report: report,
        iterations_run: iterations,
    })
}

/// Fair-Lloyd: alternate nearest-center assignment with the fair-center solve
/// on the fixed partition. Best of `config.restarts` runs by fair objective.
pub fn fair_lloyd(
    dataset: &Dataset,
    config: &ClusteringConfig,
    solver_config: &SolverConfig,
) -> Result<ClusteringResult> {
    if config.k > dataset.n() {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds number of points {}",
            config.k,
            dataset.n()
        )));
    }
    let mut best: Option<ClusteringResult> = None;
    for r in 0..config.restarts {
        let res = fair_lloyd_single(dataset, config, solver_config, restart_seed(config.seed, r))?;
        if best.as_ref().is_none_or(|b| res.objective() < b.objective()) {
            best = Some(res);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
