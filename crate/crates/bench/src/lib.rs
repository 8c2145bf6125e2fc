//! Shared inputs for the benchmarks.

use dkhac::dgp::{sls_ar1_path, SlsAr1Spec};
use dkhac::ScoreMatrix;

/// AR(1) scores with `p` columns of length `t`.
pub fn ar1_scores(t: usize, p: usize, seed: u64) -> ScoreMatrix {
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| sls_ar1_path(&SlsAr1Spec::constant(0.5, 1.0), t, seed + j as u64).expect("valid spec"))
        .collect();
    let rows: Vec<Vec<f64>> = (0..t).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    ScoreMatrix::from_rows(&rows).expect("finite scores")
}
