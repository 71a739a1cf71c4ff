//! Fixed-partition fair-center solvers.
//!
//! Given the per cluster x group statistics of a partition, these solvers
//! return centers minimizing the maximum per-group average cost. Every
//! stationary center set is a weighted combination of group means indexed by a
//! simplex vector gamma (the set Z); for two groups Z is a curve searched by
//! bisection, for more groups a multiplicative-weights heuristic walks the
//! simplex and a projected subgradient method on the underlying convex program
//! serves as the reference oracle. A min/max theorem turns `min_j f_j` at any
//! Z point into a certified lower bound on the optimum.

use crate::cost::{group_cost, group_cost_gradient, group_costs};
use crate::error::{Error, Result};
use crate::types::{CenterSet, FairSolveReport, GroupClusterStats};

/// Which solver `fair_lloyd` uses for the center step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    LineSearch,
    Mwu,
    Subgradient,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative tolerance on the equal-cost / optimality gap stopping rule.
    pub tolerance: f64,
    pub mode: SolverMode,
}

impl SolverConfig {
    /// Bisection defaults: 64 halvings exhaust double precision.
    pub fn line_search() -> Self {
        Self {
            max_iterations: 64,
            tolerance: 1e-9,
            mode: SolverMode::LineSearch,
        }
    }

    pub fn mwu() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
            mode: SolverMode::Mwu,
        }
    }

    pub fn subgradient() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-9,
            mode: SolverMode::Subgradient,
        }
    }
}

fn require_two_groups(stats: &GroupClusterStats) -> Result<()> {
    if stats.m() != 2 {
        return Err(Error::UnsupportedGroupCount {
            required: 2,
            got: stats.m(),
        });
    }
    Ok(())
}

/// Displacement along each cluster's segment for a given scalar gamma
/// (two groups): `x_i = (1-g) b_i l_i / (g a_i + (1-g) b_i)`.
///
/// Degenerate clusters are pinned: `x_i = 0` when group B is absent or the
/// segment has zero length, `x_i = l_i` when group A is absent.
pub fn x_from_gamma(gamma: f64, stats: &GroupClusterStats) -> Result<Vec<f64>> {
    require_two_groups(stats)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    let mut x = Vec::with_capacity(stats.k());
    for i in 0..stats.k() {
        let a = stats.frac(i, 0);
        let b = stats.frac(i, 1);
        let l = stats.segment_length(i);
        let xi = if b == 0.0 || l == 0.0 {
            0.0
        } else if a == 0.0 {
            l
        } else {
            let denom = gamma * a + (1.0 - gamma) * b;
            if denom == 0.0 {
                // gamma in {0,1} with the matching fraction zero is covered
                // above; this is unreachable for gamma in (0,1).
                0.0
            } else {
                ((1.0 - gamma) * b * l / denom).clamp(0.0, l)
            }
        };
        x.push(xi);
    }
    Ok(x)
}

/// The Z point for a simplex vector gamma: each center is the gamma- and
/// fraction-weighted combination of the present group means of its cluster.
///
/// Errors when some cluster has zero total weight over its present groups;
/// [`centers_from_gamma_lenient`] falls back instead.
pub fn centers_from_gamma(gamma: &[f64], stats: &GroupClusterStats) -> Result<CenterSet> {
    build_centers(gamma, stats, false)
}

/// As [`centers_from_gamma`], but clusters whose present groups all received
/// zero gamma-weight fall back to the fraction-weighted mean of present
/// groups, and clusters with no points at all get the origin.
pub fn centers_from_gamma_lenient(gamma: &[f64], stats: &GroupClusterStats) -> CenterSet {
    build_centers(gamma, stats, true).expect("lenient center construction cannot fail")
}

fn build_centers(gamma: &[f64], stats: &GroupClusterStats, lenient: bool) -> Result<CenterSet> {
    let (k, m, d) = (stats.k(), stats.m(), stats.d());
    assert_eq!(gamma.len(), m, "gamma length must equal m");
    let mut coords = vec![0.0f64; k * d];
    for i in 0..k {
        let mut denom = 0.0;
        for j in 0..m {
            if stats.is_present(i, j) {
                denom += gamma[j] * stats.frac(i, j);
            }
        }
        let c = &mut coords[i * d..(i + 1) * d];
        if denom > 0.0 {
            for j in 0..m {
                if let Some(mu) = stats.mean(i, j) {
                    let w = gamma[j] * stats.frac(i, j) / denom;
                    for s in 0..d {
                        c[s] += w * mu[s];
                    }
                }
            }
        } else if lenient {
            // Uniform gamma over the present groups of this cluster.
            let total: f64 = (0..m)
                .filter(|&j| stats.is_present(i, j))
                .map(|j| stats.frac(i, j))
                .sum();
            if total > 0.0 {
                for j in 0..m {
                    if let Some(mu) = stats.mean(i, j) {
                        let w = stats.frac(i, j) / total;
                        for s in 0..d {
                            c[s] += w * mu[s];
                        }
                    }
                }
            }
            // Entirely empty cluster: leave at the origin; it contributes to
            // no group cost.
        } else {
            return Err(Error::DegenerateCluster { cluster: i });
        }
    }
    CenterSet::new(coords, d)
}

/// Euclidean norm of `sum_j gamma_j grad f_j(C)` over all k*d coordinates.
/// Zero exactly on Z (for the matching gamma).
pub fn stationarity_residual(gamma: &[f64], centers: &CenterSet, stats: &GroupClusterStats) -> f64 {
    let (k, m, d) = (stats.k(), stats.m(), stats.d());
    assert_eq!(gamma.len(), m);
    assert_eq!(centers.k(), k);
    assert_eq!(centers.d(), d);
    let mut norm2 = 0.0;
    for i in 0..k {
        let c = centers.center(i);
        for s in 0..d {
            let mut comp = 0.0;
            for j in 0..m {
                if let Some(mu) = stats.mean(i, j) {
                    comp += gamma[j] * 2.0 * stats.frac(i, j) * (c[s] - mu[s]);
                }
            }
            norm2 += comp * comp;
        }
    }
    norm2.sqrt()
}

/// f_A and f_B as functions of the segment displacements x (two groups).
pub(crate) fn two_group_costs_from_x(x: &[f64], stats: &GroupClusterStats) -> (f64, f64) {
    let mut fa = stats.base_cost(0);
    let mut fb = stats.base_cost(1);
    for i in 0..stats.k() {
        let l = stats.segment_length(i);
        fa += stats.frac(i, 0) * x[i] * x[i];
        fb += stats.frac(i, 1) * (l - x[i]) * (l - x[i]);
    }
    (fa, fb)
}

fn report_on_z(
    gamma: Vec<f64>,
    stats: &GroupClusterStats,
    iterations: usize,
) -> Result<FairSolveReport> {
    let centers = centers_from_gamma_lenient(&gamma, stats);
    let costs = group_costs(&centers, stats)?;
    let lb = support_lower_bound(&gamma, &costs, stats);
    Ok(FairSolveReport::from_solution(centers, gamma, costs, lb, iterations))
}

/// Lower bound from the support of gamma: min_j f_j over groups carrying
/// gamma-mass, evaluated at the Z_S point obtained by renormalizing gamma on
/// that support. Sound by the min/max theorem for any subset S.
fn support_lower_bound(gamma: &[f64], costs_full: &[f64], stats: &GroupClusterStats) -> f64 {
    const SUPPORT_EPS: f64 = 1e-6;
    let m = gamma.len();
    let support: Vec<usize> = (0..m).filter(|&j| gamma[j] > SUPPORT_EPS).collect();
    // Always-sound fallback: min over all groups at the full-gamma point.
    let mut best = costs_full.iter().cloned().fold(f64::INFINITY, f64::min);
    if !support.is_empty() && support.len() < m {
        let mut g_s = vec![0.0; m];
        let total: f64 = support.iter().map(|&j| gamma[j]).sum();
        for &j in &support {
            g_s[j] = gamma[j] / total;
        }
        let c_s = centers_from_gamma_lenient(&g_s, stats);
        let cand = support
            .iter()
            .map(|&j| group_cost(&c_s, stats, j).unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min);
        best = best.max(cand);
    }
    best
}

/// Bisection on gamma for two groups. f_A is decreasing and f_B increasing in
/// gamma, so the equalizing gamma (or the dominating boundary) is found by
/// halving steps from 0.5.
pub fn line_search_2groups(stats: &GroupClusterStats, config: &SolverConfig) -> Result<FairSolveReport> {
    require_two_groups(stats)?;
    let eval = |gamma: f64| -> Result<(f64, f64)> {
        let x = x_from_gamma(gamma, stats)?;
        Ok(two_group_costs_from_x(&x, stats))
    };

    // Boundary cases: if one group's cost dominates across the whole curve,
    // the optimum sits at that group's means.
    let (fa1, fb1) = eval(1.0)?;
    if fa1 >= fb1 {
        // f_A at its curve minimum still dominates.
        let mut rep = report_on_z(vec![1.0, 0.0], stats, 0)?;
        rep.lower_bound = rep.objective;
        rep.certificate_gap = 0.0;
        return Ok(rep);
    }
    let (fa0, fb0) = eval(0.0)?;
    if fb0 >= fa0 {
        let mut rep = report_on_z(vec![0.0, 1.0], stats, 0)?;
        rep.lower_bound = rep.objective;
        rep.certificate_gap = 0.0;
        return Ok(rep);
    }

    let mut gamma = 0.5;
    let mut step = 0.25;
    let mut iterations = 0;
    for _ in 0..config.max_iterations {
        iterations += 1;
        let (fa, fb) = eval(gamma)?;
        if (fa - fb).abs() <= config.tolerance * fa.max(fb).max(1.0) {
            break;
        }
        if fa > fb {
            gamma += step;
        } else {
            gamma -= step;
        }
        step *= 0.5;
    }
    report_on_z(vec![gamma, 1.0 - gamma], stats, iterations)
}

/// Multiplicative weights on the gamma simplex for m >= 2 groups, with damping
/// `1/sqrt(t+1)`. Returns the best iterate by objective, with a certified
/// lower bound from the support of its gamma.
pub fn solve_mwu(stats: &GroupClusterStats, config: &SolverConfig) -> Result<FairSolveReport> {
    let m = stats.m();
    if m < 2 {
        return Err(Error::UnsupportedGroupCount { required: 2, got: m });
    }
    let mut gamma = vec![1.0 / m as f64; m];
    let mut best_gamma = gamma.clone();
    let mut best_obj = f64::INFINITY;
    let mut iterations = 0;
    for t in 1..=config.max_iterations {
        iterations = t;
        let centers = centers_from_gamma_lenient(&gamma, stats);
        let costs = group_costs(&centers, stats)?;
        let fmax = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if fmax < best_obj {
            best_obj = fmax;
            best_gamma = gamma.clone();
        }
        let dmax = costs.iter().map(|&f| fmax - f).fold(0.0f64, f64::max);
        if dmax == 0.0 {
            // All group costs equal: exact stationary equalized point.
            best_gamma = gamma.clone();
            break;
        }
        let damp = (t as f64 + 1.0).sqrt() * dmax;
        let mut total = 0.0;
        for j in 0..m {
            gamma[j] *= 1.0 - (fmax - costs[j]) / damp;
            total += gamma[j];
        }
        for g in gamma.iter_mut() {
            *g /= total;
        }
    }
    report_on_z(best_gamma, stats, iterations)
}

/// Projected subgradient descent on `F(C) = max_j f_j(C)` over the product of
/// per-cluster convex hulls of present group means.
///
/// Each center is parametrized by simplex weights over its cluster's present
/// group means, so projection is the exact simplex projection. Steps are
/// Polyak-sized against a certified lower bound that the solver refines from
/// its own iterates (the step-weighted frequency of active groups converges to
/// the optimal gamma, and `min_j f_j` at the corresponding Z point is a sound
/// bound); before a bound exists the step is a normalized diminishing
/// `a/sqrt(t)`.
pub fn solve_subgradient(stats: &GroupClusterStats, config: &SolverConfig) -> Result<FairSolveReport> {
    let (k, m, d) = (stats.k(), stats.m(), stats.d());
    let present: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..m).filter(|&j| stats.is_present(i, j)).collect())
        .collect();

    // Per-cluster simplex weights over present groups.
    let mut w: Vec<Vec<f64>> = present
        .iter()
        .map(|pj| vec![1.0 / pj.len().max(1) as f64; pj.len()])
        .collect();

    let centers_of = |w: &[Vec<f64>]| -> CenterSet {
        let mut coords = vec![0.0f64; k * d];
        for i in 0..k {
            let c = &mut coords[i * d..(i + 1) * d];
            for (t, &j) in present[i].iter().enumerate() {
                let mu = stats.mean(i, j).unwrap();
                for s in 0..d {
                    c[s] += w[i][t] * mu[s];
                }
            }
        }
        CenterSet::new(coords, d).unwrap()
    };

    let mut lower = f64::NEG_INFINITY;
    let mut best_centers = centers_of(&w);
    let mut best_obj = f64::INFINITY;
    let mut best_gamma: Option<Vec<f64>> = None;

    // Maximize the dual bound around `gamma`; if the maximizer's Z point beats
    // the incumbent, adopt it and restart the primal weights from it.
    let probe = |gamma: &[f64],
                 lower: &mut f64,
                 best_obj: &mut f64,
                 best_centers: &mut CenterSet,
                 best_gamma: &mut Option<Vec<f64>>,
                 w: &mut Vec<Vec<f64>>|
     -> Result<()> {
        let total: f64 = gamma.iter().sum();
        if total <= 0.0 {
            return Ok(());
        }
        let g: Vec<f64> = gamma.iter().map(|x| x / total).collect();
        let (gstar, cand) = polish_gamma_bound(&g, stats);
        if cand > *lower {
            *lower = cand;
        }
        let centers = centers_from_gamma_lenient(&gstar, stats);
        let costs = group_costs(&centers, stats)?;
        let fmax = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if fmax < *best_obj {
            *best_obj = fmax;
            *best_centers = centers.clone();
            *best_gamma = Some(gstar.clone());
            for i in 0..k {
                let denom: f64 = present[i]
                    .iter()
                    .map(|&j| gstar[j] * stats.frac(i, j))
                    .sum();
                if denom > 0.0 {
                    for (ti, &j) in present[i].iter().enumerate() {
                        w[i][ti] = gstar[j] * stats.frac(i, j) / denom;
                    }
                }
            }
        }
        Ok(())
    };
    probe(
        &vec![1.0; m],
        &mut lower,
        &mut best_obj,
        &mut best_centers,
        &mut best_gamma,
        &mut w,
    )?;

    let mut gamma_acc = vec![0.0f64; m];
    let probe_every = 25;
    let diameter = (2.0 * k as f64).sqrt();

    let mut iterations = 0;
    for t in 1..=config.max_iterations {
        iterations = t;
        let centers = centers_of(&w);
        let costs = group_costs(&centers, stats)?;
        let fmax = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if fmax < best_obj {
            best_obj = fmax;
            best_centers = centers.clone();
        }
        if best_obj - lower <= 1e-13 * best_obj.abs().max(1.0) {
            break;
        }
        // Smallest active index is the deterministic subgradient choice.
        let jstar = costs
            .iter()
            .position(|&f| f == fmax)
            .expect("max attained by some group");

        // Gradient of f_{jstar} with respect to the simplex weights.
        let mut grad: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut gnorm2 = 0.0;
        for i in 0..k {
            let c = centers.center(i);
            let mut gi = vec![0.0; present[i].len()];
            if let Some(mu_star) = stats.mean(i, jstar) {
                let a = stats.frac(i, jstar);
                for (ti, &j) in present[i].iter().enumerate() {
                    let mu = stats.mean(i, j).unwrap();
                    let mut dot = 0.0;
                    for s in 0..d {
                        dot += 2.0 * a * (c[s] - mu_star[s]) * mu[s];
                    }
                    gi[ti] = dot;
                }
            }
            gnorm2 += gi.iter().map(|x| x * x).sum::<f64>();
            grad.push(gi);
        }
        if gnorm2 <= 1e-30 {
            // The active group's cost is already minimized; nothing to move.
            break;
        }
        let step = if lower.is_finite() && fmax > lower {
            ((fmax - lower) / gnorm2).min(diameter / gnorm2.sqrt())
        } else {
            1.0 / ((t as f64).sqrt() * gnorm2.sqrt())
        };
        for i in 0..k {
            for ti in 0..present[i].len() {
                w[i][ti] -= step * grad[i][ti];
            }
            project_to_simplex(&mut w[i]);
        }
        gamma_acc[jstar] += step;
        if t % probe_every == 0 {
            probe(
                &gamma_acc,
                &mut lower,
                &mut best_obj,
                &mut best_centers,
                &mut best_gamma,
                &mut w,
            )?;
        }
    }
    probe(
        &gamma_acc,
        &mut lower,
        &mut best_obj,
        &mut best_centers,
        &mut best_gamma,
        &mut w,
    )?;

    let centers = best_centers;
    let costs = group_costs(&centers, stats)?;
    // Recover a gamma describing the returned point for reporting.
    let total: f64 = gamma_acc.iter().sum();
    let gamma = match best_gamma {
        Some(g) => g,
        None if total > 0.0 => gamma_acc.iter().map(|x| x / total).collect(),
        None => vec![1.0 / m as f64; m],
    };
    let objective = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lb = lower.min(objective);
    Ok(FairSolveReport {
        centers,
        gamma,
        group_costs: costs,
        objective,
        lower_bound: lb,
        certificate_gap: objective - lb,
        iterations,
    })
}

/// Certified lower bound on the fair-center optimum: `min_{j in S} f_j` at
/// centers verified to lie on Z_S. The caller may pass any subset S (default
/// all groups) and take the best bound.
pub fn certificate_lower_bound(
    centers: &CenterSet,
    stats: &GroupClusterStats,
    subset: Option<&[usize]>,
) -> Result<f64> {
    const RESIDUAL_TOL: f64 = 1e-6;
    let m = stats.m();
    let default: Vec<usize> = (0..m).collect();
    let s_set: &[usize] = subset.unwrap_or(&default);
    if s_set.is_empty() {
        return Err(Error::InvalidArgument("subset must be non-empty".into()));
    }
    for &j in s_set {
        if j >= m {
            return Err(Error::GroupOutOfRange { got: j, m });
        }
    }
    // Find the simplex combination of group gradients (over S) with the
    // smallest norm; its norm is the Z_S stationarity residual.
    let grads: Vec<Vec<f64>> = s_set
        .iter()
        .map(|&j| group_cost_gradient(centers, stats, j))
        .collect::<Result<_>>()?;
    let residual = min_combination_residual(&grads);
    if residual > RESIDUAL_TOL {
        return Err(Error::InvalidCertificate {
            residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    let mut best = f64::INFINITY;
    for &j in s_set {
        best = best.min(group_cost(centers, stats, j)?);
    }
    Ok(best)
}

/// Maximize the dual function `h(gamma) = sum_j gamma_j f_j(C(gamma))` over
/// the simplex by deterministic mass transfers with a shrinking step.
///
/// `C(gamma)` minimizes `sum_j gamma_j f_j` over the feasible hulls, so
/// `h(gamma) <= min_C max_j f_j(C)` for every simplex gamma (weak duality)
/// and `h` is concave, which makes the compass search converge to the global
/// maximum. The returned value is therefore a sound, and at the maximum a
/// tight, lower bound on the fair-center optimum.
fn polish_gamma_bound(gamma0: &[f64], stats: &GroupClusterStats) -> (Vec<f64>, f64) {
    let m = gamma0.len();
    let eval = |g: &[f64]| -> f64 {
        let c = centers_from_gamma_lenient(g, stats);
        match group_costs(&c, stats) {
            Ok(costs) => (0..m).map(|j| g[j] * costs[j]).sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut gamma = gamma0.to_vec();
    let mut best = eval(&gamma);
    let mut step = 0.1f64;
    while step > 1e-14 {
        let mut improved = false;
        'search: for a in 0..m {
            if gamma[a] == 0.0 {
                continue;
            }
            for b in 0..m {
                if a == b {
                    continue;
                }
                let delta = step.min(gamma[a]);
                let mut cand = gamma.clone();
                cand[a] -= delta;
                cand[b] += delta;
                if cand[a] < 1e-15 {
                    cand[a] = 0.0;
                }
                let v = eval(&cand);
                if v > best {
                    best = v;
                    gamma = cand;
                    improved = true;
                    break 'search;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (gamma, best)
}

/// min over the simplex of `|| sum_j gamma_j v_j ||` for the given vectors,
/// by projected gradient on the induced quadratic.
fn min_combination_residual(vectors: &[Vec<f64>]) -> f64 {
    let m = vectors.len();
    if m == 0 {
        return 0.0;
    }
    let gram: Vec<f64> = (0..m * m)
        .map(|idx| {
            let (a, b) = (idx / m, idx % m);
            vectors[a].iter().zip(&vectors[b]).map(|(x, y)| x * y).sum()
        })
        .collect();
    let trace: f64 = (0..m).map(|j| gram[j * m + j]).sum();
    if trace <= 0.0 {
        return 0.0;
    }
    let step = 1.0 / (2.0 * trace);
    let mut gamma = vec![1.0 / m as f64; m];
    let mut grad = vec![0.0; m];
    for _ in 0..2000 {
        for a in 0..m {
            grad[a] = 2.0 * (0..m).map(|b| gram[a * m + b] * gamma[b]).sum::<f64>();
        }
        for a in 0..m {
            gamma[a] -= step * grad[a];
        }
        project_to_simplex(&mut gamma);
    }
    let q: f64 = (0..m)
        .map(|a| (0..m).map(|b| gamma[a] * gram[a * m + b] * gamma[b]).sum::<f64>())
        .sum();
    q.max(0.0).sqrt()
}

/// Exact Euclidean projection onto the probability simplex.
pub(crate) fn project_to_simplex(v: &mut [f64]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    if n == 1 {
        v[0] = 1.0;
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Renormalize away accumulated rounding.
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    } else {
        let u = 1.0 / n as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}
