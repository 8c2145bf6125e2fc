//! Time-localized and full-sample autocovariances of a score matrix.
//!
//! `local_autocov` smooths the lag-`k` cross products with the time kernel
//! over a left window ending at the end of block `r`; `block_avg_autocov`
//! averages those local estimates over the block grid. Block `r` ends at
//! observation `(r + 1) n_T` and there are `floor((T - n_T) / n_T) + 1`
//! blocks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};
use crate::kernels::TimeKernel;
use crate::score::ScoreMatrix;

/// Prefactor applied to the sum of local autocovariances over blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlockNormalization {
    /// `n_T / (T - n_T)`.
    #[default]
    Display,
    /// `n_T / T`, the asymptotically equivalent form.
    Proof,
}

/// Bandwidths and block layout of a double-kernel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingPlan {
    /// Lag bandwidth: lag `k` gets weight `K1(b1 * k)`.
    pub b1: f64,
    /// Time bandwidth as a fraction of the sample.
    pub b2: f64,
    /// Block length `n_T`.
    pub block_len: usize,
    /// Multiply by `T / (T - p)`.
    pub dof_adjust: bool,
    #[serde(default)]
    pub normalization: BlockNormalization,
}

impl SmoothingPlan {
    pub fn new(b1: f64, b2: f64, block_len: usize) -> Self {
        Self {
            b1,
            b2,
            block_len,
            dof_adjust: true,
            normalization: BlockNormalization::Display,
        }
    }

    /// Default block length `floor(T^0.66)`.
    pub fn default_block_len(t: usize) -> usize {
        ((t as f64).powf(0.66).floor() as usize).max(1)
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if !(self.b1.is_finite() && self.b1 > 0.0) {
            return Err(LrvError::Config(format!("lag bandwidth must be positive, got {}", self.b1)));
        }
        if !(self.b2.is_finite() && self.b2 > 0.0 && self.b2 <= 1.0) {
            return Err(LrvError::Config(format!("time bandwidth must lie in (0, 1], got {}", self.b2)));
        }
        if self.block_len == 0 || self.block_len >= t {
            return Err(LrvError::Config(format!(
                "block length {} must satisfy 1 <= n_T < T = {t}",
                self.block_len
            )));
        }
        if (t as f64) * self.b2 < 1.0 {
            return Err(LrvError::Config(format!(
                "time window T*b2 = {} holds no observation",
                t as f64 * self.b2
            )));
        }
        Ok(())
    }

    /// Number of blocks `floor((T - n_T) / n_T) + 1`.
    pub fn n_blocks(&self, t: usize) -> usize {
        (t - self.block_len) / self.block_len + 1
    }

    fn prefactor(&self, t: usize) -> f64 {
        let n = self.block_len as f64;
        match self.normalization {
            BlockNormalization::Display => n / (t as f64 - n),
            BlockNormalization::Proof => n / t as f64,
        }
    }
}

fn check_lag(k: i64, t: usize) -> Result<()> {
    if k.unsigned_abs() as usize >= t {
        Err(LrvError::LagOutOfRange { lag: k, t })
    } else {
        Ok(())
    }
}

/// `sum_{s=k+1}^{T} w(s) V_s V'_{s-k}` for `k >= 0` (1-based `s`).
fn weighted_cross(v: &DMatrix<f64>, k: usize, weight: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let (t, p) = v.shape();
    let mut out = DMatrix::<f64>::zeros(p, p);
    for s in (k + 1)..=t {
        let w = weight(s);
        if w == 0.0 {
            continue;
        }
        let (a, b) = (s - 1, s - 1 - k);
        for i in 0..p {
            let wa = w * v[(a, i)];
            for j in 0..p {
                out[(i, j)] += wa * v[(b, j)];
            }
        }
    }
    out
}

/// Local autocovariance at the end of block `r` and lag `k`.
pub fn local_autocov(
    v: &ScoreMatrix,
    r: usize,
    k: i64,
    b2: f64,
    block_len: usize,
    kernel: TimeKernel,
) -> Result<DMatrix<f64>> {
    let t = v.t();
    check_lag(k, t)?;
    if block_len == 0 || block_len > t {
        return Err(LrvError::Config(format!("invalid block length {block_len}")));
    }
    if r > (t - block_len) / block_len {
        return Err(LrvError::Config(format!("block index {r} out of range")));
    }
    let tb2 = t as f64 * b2;
    let end = ((r + 1) * block_len) as f64;
    let lag = k.unsigned_abs() as usize;
    let half = lag as f64 / 2.0;
    let c = weighted_cross(v.matrix(), lag, |s| kernel.eval((end - (s as f64 - half)) / tb2));
    let c = c / tb2;
    Ok(if k >= 0 { c } else { c.transpose() })
}

/// Average of the local autocovariances over the block grid.
pub fn block_avg_autocov(
    v: &ScoreMatrix,
    k: i64,
    plan: &SmoothingPlan,
    kernel: TimeKernel,
) -> Result<DMatrix<f64>> {
    let t = v.t();
    plan.validate(t)?;
    check_lag(k, t)?;
    let p = v.p();
    let mut acc = DMatrix::<f64>::zeros(p, p);
    for r in 0..plan.n_blocks(t) {
        acc += local_autocov(v, r, k, plan.b2, plan.block_len, kernel)?;
    }
    Ok(acc * plan.prefactor(t))
}

/// Full-sample autocovariance `T^{-1} sum V_t V'_{t-k}` (no demeaning).
pub fn classical_autocov(v: &ScoreMatrix, k: i64) -> Result<DMatrix<f64>> {
    let t = v.t();
    check_lag(k, t)?;
    let c = weighted_cross(v.matrix(), k.unsigned_abs() as usize, |_| 1.0) / t as f64;
    Ok(if k >= 0 { c } else { c.transpose() })
}

/// Time weights summed over blocks, tabulated on the half-integer grid.
///
/// Entry `h` holds `sum_r K2(((r+1) n_T - h/2) / (T b2))` so that lag `k`
/// and observation `s` read index `2s - k`. Blocks are visited in `order`.
pub(crate) fn summed_time_weights(
    t: usize,
    plan: &SmoothingPlan,
    kernel: TimeKernel,
    order: &[usize],
) -> Vec<f64> {
    let tb2 = t as f64 * plan.b2;
    let mut g = vec![0.0; 2 * t + 1];
    for &r in order {
        let end = ((r + 1) * plan.block_len) as f64;
        // support: 0 <= (end - h/2) / tb2 <= 1  <=>  2(end - tb2) <= h <= 2 end
        let lo = (2.0 * (end - tb2)).ceil().max(0.0) as usize;
        let hi = ((2.0 * end).floor() as usize).min(2 * t);
        for (h, slot) in g.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *slot += kernel.eval((end - h as f64 / 2.0) / tb2);
        }
    }
    g
}

/// `Γ̂(k)` for `k >= 0` from precomputed summed weights.
pub(crate) fn block_avg_autocov_fast(
    v: &DMatrix<f64>,
    k: usize,
    weights: &[f64],
    scale: f64,
) -> DMatrix<f64> {
    weighted_cross(v, k, |s| weights[2 * s - k]) * scale
}

/// Scale applied to `block_avg_autocov_fast`: prefactor over `T b2`.
pub(crate) fn fast_scale(t: usize, plan: &SmoothingPlan) -> f64 {
    plan.prefactor(t) / (t as f64 * plan.b2)
}
