//! Socially fair k-means clustering.
//!
//! Provides standard Lloyd's k-means alongside Fair-Lloyd, which minimizes the
//! maximum average clustering cost over demographic groups instead of the
//! population-wide average. The fixed-partition fair-center subproblem is
//! solved exactly: a bisection line search for two groups, a multiplicative
//! weights heuristic with an optimality certificate for more groups, and a
//! projected subgradient oracle as the general reference solver.

pub mod clustering;
pub mod cost;
pub mod error;
pub mod metrics;
pub mod preprocess;
pub mod solver;
mod sum;
mod types;

pub use error::{Error, Result};
pub use sum::KahanSum;
pub use types::{Assignment, CenterSet, Dataset, FairSolveReport, GroupClusterStats};
