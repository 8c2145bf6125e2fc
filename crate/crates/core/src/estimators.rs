//! Long-run variance estimators: double-kernel HAC, classical kernel HAC,
//! equal-weighted cosine (EWC), plus an eigenvalue-floor PSD repair.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};
use crate::kernels::{LagKernel, TimeKernel};
use crate::local_cov::{self, SmoothingPlan};
use crate::score::ScoreMatrix;

/// Lags whose kernel weight falls below this are skipped.
const WEIGHT_CUTOFF: f64 = 1e-12;

/// Which estimator produced an [`LrvEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    DkHac {
        lag_kernel: LagKernel,
        time_kernel: TimeKernel,
        plan: SmoothingPlan,
    },
    ClassicalHac {
        lag_kernel: LagKernel,
        b1: f64,
    },
    Ewc {
        df: usize,
    },
}

/// A `p x p` long-run variance estimate with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LrvEstimate {
    pub j: DMatrix<f64>,
    pub kind: EstimatorKind,
    pub psd_repaired: bool,
    /// Smallest eigenvalue before any repair.
    pub min_eig: f64,
    /// `max |J - J'|` before symmetrization.
    pub raw_asymmetry: f64,
}

impl LrvEstimate {
    fn from_raw(j: DMatrix<f64>, kind: EstimatorKind) -> Self {
        let raw_asymmetry = (&j - j.transpose()).abs().max();
        let j = (&j + j.transpose()) * 0.5;
        let min_eig = min_eigenvalue(&j);
        Self {
            j,
            kind,
            psd_repaired: false,
            min_eig,
            raw_asymmetry,
        }
    }

    /// Equivalent degrees of freedom (EWC only).
    pub fn df(&self) -> Option<usize> {
        match self.kind {
            EstimatorKind::Ewc { df } => Some(df),
            _ => None,
        }
    }

    pub fn p(&self) -> usize {
        self.j.nrows()
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn dof_factor(t: usize, p: usize, on: bool) -> f64 {
    if on {
        t as f64 / (t - p) as f64
    } else {
        1.0
    }
}

/// Double-kernel HAC estimate with blocks summed in natural order.
pub fn dk_hac(
    v: &ScoreMatrix,
    plan: &SmoothingPlan,
    lag_kernel: LagKernel,
    time_kernel: TimeKernel,
) -> Result<LrvEstimate> {
    plan.validate(v.t())?;
    let order: Vec<usize> = (0..plan.n_blocks(v.t())).collect();
    dk_hac_ordered(v, plan, lag_kernel, time_kernel, &order)
}

/// As [`dk_hac`] but summing blocks in the given order (a permutation of
/// `0..n_blocks`).
pub fn dk_hac_ordered(
    v: &ScoreMatrix,
    plan: &SmoothingPlan,
    lag_kernel: LagKernel,
    time_kernel: TimeKernel,
    block_order: &[usize],
) -> Result<LrvEstimate> {
    let (t, p) = (v.t(), v.p());
    plan.validate(t)?;
    let n_blocks = plan.n_blocks(t);
    let mut seen = vec![false; n_blocks];
    for &r in block_order {
        if r >= n_blocks || std::mem::replace(&mut seen[r], true) {
            return Err(LrvError::Config("block order is not a permutation".into()));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(LrvError::Config("block order is not a permutation".into()));
    }

    let weights = local_cov::summed_time_weights(t, plan, time_kernel, block_order);
    let scale = local_cov::fast_scale(t, plan);
    let data = v.matrix();
    let mut j = DMatrix::<f64>::zeros(p, p);
    for k in 0..t {
        let w = lag_kernel.eval(plan.b1 * k as f64);
        if k > 0 && w.abs() < WEIGHT_CUTOFF {
            if lag_kernel.has_compact_support() && plan.b1 * k as f64 > 1.0 {
                break;
            }
            continue;
        }
        let gamma = local_cov::block_avg_autocov_fast(data, k, &weights, scale);
        if gamma.iter().any(|x| !x.is_finite()) {
            return Err(locate_non_finite(v, plan, time_kernel, k));
        }
        if k == 0 {
            j += gamma * w;
        } else {
            j += (&gamma + gamma.transpose()) * w;
        }
    }
    j *= dof_factor(t, p, plan.dof_adjust);
    Ok(LrvEstimate::from_raw(
        j,
        EstimatorKind::DkHac {
            lag_kernel,
            time_kernel,
            plan: *plan,
        },
    ))
}

fn locate_non_finite(v: &ScoreMatrix, plan: &SmoothingPlan, kernel: TimeKernel, k: usize) -> LrvError {
    let block = (0..plan.n_blocks(v.t())).find(|&r| {
        local_cov::local_autocov(v, r, k as i64, plan.b2, plan.block_len, kernel)
            .map(|c| c.iter().any(|x| !x.is_finite()))
            .unwrap_or(false)
    });
    LrvError::NonFinite {
        what: "block-averaged autocovariance".into(),
        lag: Some(k as i64),
        block,
    }
}

/// Classical kernel HAC: `[T/(T-p)] sum_k K1(b1 k) Γ̂_Cla(k)`.
pub fn classical_hac(v: &ScoreMatrix, b1: f64, lag_kernel: LagKernel, dof_adjust: bool) -> Result<LrvEstimate> {
    if !(b1.is_finite() && b1 > 0.0 && b1 <= 1.0) {
        return Err(LrvError::Config(format!("lag bandwidth must lie in (0, 1], got {b1}")));
    }
    let (t, p) = (v.t(), v.p());
    let mut j = DMatrix::<f64>::zeros(p, p);
    for k in 0..t {
        let w = lag_kernel.eval(b1 * k as f64);
        if k > 0 && w.abs() < WEIGHT_CUTOFF {
            if lag_kernel.has_compact_support() && b1 * k as f64 > 1.0 {
                break;
            }
            continue;
        }
        let gamma = local_cov::classical_autocov(v, k as i64)?;
        if gamma.iter().any(|x| !x.is_finite()) {
            return Err(LrvError::NonFinite {
                what: "autocovariance".into(),
                lag: Some(k as i64),
                block: None,
            });
        }
        if k == 0 {
            j += gamma * w;
        } else {
            j += (&gamma + gamma.transpose()) * w;
        }
    }
    j *= dof_factor(t, p, dof_adjust);
    Ok(LrvEstimate::from_raw(j, EstimatorKind::ClassicalHac { lag_kernel, b1 }))
}

/// Default number of cosine projections, `max(1, floor(0.4 T^{2/3}))`.
pub fn ewc_default_b(t: usize) -> usize {
    ((0.4 * (t as f64).powf(2.0 / 3.0)).floor() as usize).max(1)
}

/// Equal-weighted cosine estimate from the first `b` cosine projections.
pub fn ewc(v: &ScoreMatrix, b: usize) -> Result<LrvEstimate> {
    let (t, p) = (v.t(), v.p());
    if b == 0 || b >= t {
        return Err(LrvError::Config(format!("EWC needs 1 <= B < T, got B={b}, T={t}")));
    }
    let data = v.matrix();
    let norm = (2.0 / t as f64).sqrt();
    let mut j = DMatrix::<f64>::zeros(p, p);
    let mut lambda = vec![0.0; p];
    for freq in 1..=b {
        lambda.iter_mut().for_each(|x| *x = 0.0);
        for (row, s) in (1..=t).enumerate() {
            let c = (PI * freq as f64 * (s as f64 - 0.5) / t as f64).cos();
            for (i, l) in lambda.iter_mut().enumerate() {
                *l += c * data[(row, i)];
            }
        }
        for i in 0..p {
            for k in 0..p {
                j[(i, k)] += norm * norm * lambda[i] * lambda[k];
            }
        }
    }
    j /= b as f64;
    Ok(LrvEstimate::from_raw(j, EstimatorKind::Ewc { df: b }))
}

/// Clips eigenvalues below `floor`. The input is returned untouched when no
/// eigenvalue needs raising.
pub fn psd_project(est: &LrvEstimate, floor: f64) -> LrvEstimate {
    let floor = floor.max(0.0);
    let eig = SymmetricEigen::new(est.j.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = est.clone();
    out.min_eig = min_eig;
    if min_eig >= floor {
        return out;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let j = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    out.j = (&j + j.transpose()) * 0.5;
    out.psd_repaired = true;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scores(t: usize, p: usize, seed: u64) -> ScoreMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScoreMatrix::new(DMatrix::from_fn(t, p, |_, _| rng.random::<f64>() - 0.5)).unwrap()
    }

    /// Textbook Newey-West with `m` lags, written out directly.
    fn newey_west_brute(v: &ScoreMatrix, m: usize) -> DMatrix<f64> {
        let (t, p) = (v.t(), v.p());
        let x = v.matrix();
        let mut s = DMatrix::<f64>::zeros(p, p);
        for lag in 0..=m {
            let w = 1.0 - lag as f64 / (m as f64 + 1.0);
            let mut g = DMatrix::<f64>::zeros(p, p);
            for tt in lag..t {
                for i in 0..p {
                    for j in 0..p {
                        g[(i, j)] += x[(tt, i)] * x[(tt - lag, j)] / t as f64;
                    }
                }
            }
            if lag == 0 {
                s += g;
            } else {
                s += (&g + g.transpose()) * w;
            }
        }
        s * (t as f64 / (t - p) as f64)
    }

    #[test]
    fn zero_scores() {
        let v = ScoreMatrix::new(DMatrix::zeros(50, 2)).unwrap();
        let plan = SmoothingPlan::new(0.1, 0.4, 10);
        let e = dk_hac(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic).unwrap();
        assert_eq!(e.j, DMatrix::zeros(2, 2));
        assert!(!e.psd_repaired);
        assert_eq!(classical_hac(&v, 0.2, LagKernel::Bartlett, true).unwrap().j, DMatrix::zeros(2, 2));
        let w = ewc(&v, 5).unwrap();
        assert_eq!(w.j, DMatrix::zeros(2, 2));
        assert_eq!(w.df(), Some(5));
    }

    #[test]
    fn bartlett_matches_newey_west_loop() {
        let v = random_scores(50, 2, 21);
        for m in [0usize, 1, 4, 12] {
            let b1 = 1.0 / (m as f64 + 1.0);
            let got = classical_hac(&v, b1, LagKernel::Bartlett, true).unwrap().j;
            let want = newey_west_brute(&v, m);
            assert!((got - want).abs().max() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn truncated_window_edges() {
        let v = random_scores(40, 2, 2);
        let lag0 = local_cov::classical_autocov(&v, 0).unwrap() * (40.0 / 38.0);
        let g1 = local_cov::classical_autocov(&v, 1).unwrap() * (40.0 / 38.0);
        let one_lag = &lag0 + &g1 + g1.transpose();
        for b1 in [1.0, 0.99, 1.0 / 1.5] {
            let got = classical_hac(&v, b1, LagKernel::Truncated, true).unwrap().j;
            assert!((got - &one_lag).abs().max() < 1e-12, "b1 = {b1}");
        }
        let bartlett = classical_hac(&v, 1.0, LagKernel::Bartlett, true).unwrap().j;
        assert!((bartlett - lag0).abs().max() < 1e-12);
    }

    #[test]
    fn ewc_cosine_basis() {
        let t = 16;
        let x: Vec<f64> = (1..=t)
            .map(|s| (PI * (s as f64 - 0.5) / t as f64).cos())
            .collect();
        let v = ScoreMatrix::from_series(&x).unwrap();
        let e = ewc(&v, 1).unwrap();
        assert!((e.j[(0, 0)] - t as f64 / 2.0).abs() < 1e-12);
        assert!(ewc(&v, 16).is_err());
        assert!(ewc(&v, 0).is_err());
    }

    #[test]
    fn psd_projection_cases() {
        let id = LrvEstimate::from_raw(DMatrix::identity(2, 2), EstimatorKind::Ewc { df: 1 });
        let out = psd_project(&id, 0.0);
        assert_eq!(out.j, id.j);
        assert!(!out.psd_repaired);

        let d = LrvEstimate::from_raw(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -0.1])), EstimatorKind::Ewc { df: 1 });
        let out = psd_project(&d, 0.0);
        assert!(out.psd_repaired);
        assert!((out.min_eig + 0.1).abs() < 1e-15);
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!((out.j - want).abs().max() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let psd = &a * a.transpose() + DMatrix::identity(3, 3) * 1e-3;
        let e = LrvEstimate::from_raw(psd.clone(), EstimatorKind::Ewc { df: 1 });
        let out = psd_project(&e, 0.0);
        assert!(!out.psd_repaired);
        assert!((out.j - psd).abs().max() < 1e-12);
    }

    #[test]
    fn dk_hac_scale_equivariance() {
        let v = random_scores(120, 2, 8);
        let plan = SmoothingPlan::new(0.15, 0.35, SmoothingPlan::default_block_len(120));
        let base = dk_hac(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic).unwrap().j;
        for c in [2.0, 10.0] {
            let scaled = dk_hac(&v.scaled(c), &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic)
                .unwrap()
                .j;
            let rel = (scaled - &base * (c * c)).abs().max() / (base.abs().max() * c * c);
            assert!(rel < 1e-10);
        }
    }

    #[test]
    fn dk_hac_equals_lag_sum_of_block_averages() {
        let t = 70;
        let v = random_scores(t, 2, 13);
        let plan = SmoothingPlan::new(0.2, 0.5, 15);
        let got = dk_hac(&v, &plan, LagKernel::Parzen, TimeKernel::Parabolic).unwrap().j;
        let mut want = DMatrix::<f64>::zeros(2, 2);
        for k in -(t as i64 - 1)..(t as i64) {
            let w = LagKernel::Parzen.eval(plan.b1 * k as f64);
            want += local_cov::block_avg_autocov(&v, k, &plan, TimeKernel::Parabolic).unwrap() * w;
        }
        want *= t as f64 / (t - 2) as f64;
        let want = (&want + want.transpose()) * 0.5;
        assert!((got - want).abs().max() < 1e-12);
    }

    #[test]
    fn dk_hac_block_order_invariance() {
        let v = random_scores(200, 1, 17);
        let plan = SmoothingPlan::new(0.1, 0.3, SmoothingPlan::default_block_len(200));
        let n = plan.n_blocks(200);
        let fwd: Vec<usize> = (0..n).collect();
        let rev: Vec<usize> = (0..n).rev().collect();
        let a = dk_hac_ordered(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic, &fwd).unwrap();
        let b = dk_hac_ordered(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic, &rev).unwrap();
        assert!((a.j[(0, 0)] - b.j[(0, 0)]).abs() <= 1e-12 * a.j[(0, 0)].abs());
        assert!(dk_hac_ordered(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic, &[0, 0]).is_err());
    }

    #[test]
    fn bartlett_hac_and_ewc_are_psd() {
        for seed in 0..100 {
            let v = random_scores(60, 3, 100 + seed);
            let nw = classical_hac(&v, 0.2, LagKernel::Bartlett, true).unwrap();
            assert!(nw.min_eig >= -1e-10);
            let e = ewc(&v, 8).unwrap();
            assert!(e.min_eig >= -1e-12);
        }
    }

    #[test]
    fn dk_hac_rejects_bad_plan() {
        let v = random_scores(30, 1, 1);
        let plan = SmoothingPlan::new(0.1, 0.01, 5);
        assert!(dk_hac(&v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic).is_err());
    }
}
