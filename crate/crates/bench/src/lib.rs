//! Shared synthetic-instance builders for the benchmarks.

use fairkm::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two-group Gaussian blobs around `sites` cluster sites; the second group is
/// smaller and offset so the instance exercises the fair solver's interior
/// solutions.
pub fn two_group_blobs(n: usize, d: usize, sites: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let minority = n / 4;
    let mut points = Vec::with_capacity(n * d);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        let site = (i % sites) as f64 * 15.0;
        let group = usize::from(i < minority);
        let offset = if group == 1 { 3.0 } else { -0.75 };
        for s in 0..d {
            let mut x = normal.sample(&mut rng);
            if s == 0 {
                x += site;
            }
            if s == d.min(2) - 1 {
                x += offset;
            }
            points.push(x);
        }
        groups.push(group);
    }
    // Shuffle so clusters are not trivially ordered by index.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut shuffled_points = Vec::with_capacity(n * d);
    let mut shuffled_groups = Vec::with_capacity(n);
    for &i in &order {
        shuffled_points.extend_from_slice(&points[i * d..(i + 1) * d]);
        shuffled_groups.push(groups[i]);
    }
    Dataset::new(shuffled_points, d, shuffled_groups).unwrap()
}
