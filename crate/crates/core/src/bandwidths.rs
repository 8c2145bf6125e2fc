//! Data-driven bandwidths: the joint plug-in pair `(b1, b2)` for the
//! double-kernel estimator, Andrews' AR(1) plug-in and the Newey-West (1994)
//! automatic lag for classical HAC, plus the asymptotic ReMSE objective.

use std::f64::consts::PI;

use log::warn;
use nalgebra::Complex;

type Complex64 = Complex<f64>;
use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};
use crate::kernels::LagKernel;
use crate::score::ScoreMatrix;

/// Lag-bandwidth constant of the joint minimizer.
pub const JOINT_C1: f64 = 0.46;
/// Time-bandwidth constant of the joint minimizer.
pub const JOINT_C2: f64 = 3.56;
/// Default AR(1) coefficient clip.
pub const DEFAULT_A_MAX: f64 = 0.97;

/// Default frequency grid for the curvature term.
pub fn default_s_omega() -> Vec<f64> {
    vec![-PI, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, PI]
}

/// How the local innovation scale is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaScale {
    /// Root of the residual sum of squares over the window.
    ResidualSum,
    /// Root of the residual mean square.
    #[default]
    ResidualMean,
}

/// Options of the joint plug-in rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PluginOptions {
    pub a_max: f64,
    pub sigma_scale: SigmaScale,
    /// Rescale each series to unit sample variance before fitting. With
    /// `ResidualMean` this makes the bandwidths invariant to the data scale.
    pub standardize: bool,
    /// Window length `n2`; `None` gives `floor(T^0.66)`.
    pub window: Option<usize>,
    /// Fit spacing `n3`; `None` gives `floor(T^0.66)`.
    pub step: Option<usize>,
    pub s_omega: Vec<f64>,
    /// Per-series weights `W`; `None` gives ones.
    pub weights: Option<Vec<f64>>,
}

impl Default for PluginOptions {
    fn default() -> Self {
        Self {
            a_max: DEFAULT_A_MAX,
            sigma_scale: SigmaScale::ResidualMean,
            standardize: true,
            window: None,
            step: None,
            s_omega: default_s_omega(),
            weights: None,
        }
    }
}

/// One local AR(1) fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Window {
    /// Fit point `t` (1-based).
    pub t: usize,
    pub a1: f64,
    pub sigma: f64,
    pub degenerate: bool,
}

/// Local AR(1) fits of one series on the block-start grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalAr1Fits {
    pub windows: Vec<Ar1Window>,
    pub n2: usize,
    pub n3: usize,
    pub t: usize,
}

/// Least-squares AR(1) fit on `x[lo..=hi]` (0-based), pairing each point with
/// its predecessor when one exists.
fn ar1_fit(x: &[f64], lo: usize, hi: usize, a_max: f64, scale: SigmaScale) -> (f64, f64, bool) {
    let first = lo.max(1);
    let (mut num, mut den) = (0.0, 0.0);
    for j in first..=hi {
        num += x[j] * x[j - 1];
        den += x[j - 1] * x[j - 1];
    }
    if den == 0.0 {
        return (0.0, 0.0, true);
    }
    let a = (num / den).clamp(-a_max, a_max);
    let ssr: f64 = (first..=hi).map(|j| (x[j] - a * x[j - 1]).powi(2)).sum();
    let sigma = match scale {
        SigmaScale::ResidualSum => ssr.sqrt(),
        SigmaScale::ResidualMean => (ssr / (hi + 1 - first) as f64).sqrt(),
    };
    (a, sigma, false)
}

/// Fits AR(1) models on left windows of length `n2` ending at
/// `t = j n3 + 1`, `j = 0..floor(T/n3)`. Windows that would start before the
/// sample use the first `n2` observations.
pub fn fit_local_ar1(
    x: &[f64],
    n2: usize,
    n3: usize,
    a_max: f64,
    scale: SigmaScale,
) -> Result<LocalAr1Fits> {
    let t = x.len();
    if n2 < 4 || n2 > t {
        return Err(LrvError::Config(format!("AR window n2 = {n2} must satisfy 4 <= n2 <= T = {t}")));
    }
    if n3 == 0 || n3 > t {
        return Err(LrvError::Config(format!("fit spacing n3 = {n3} must satisfy 1 <= n3 <= T = {t}")));
    }
    if !(a_max > 0.0 && a_max < 1.0) {
        return Err(LrvError::Config(format!("a_max must lie in (0, 1), got {a_max}")));
    }
    let windows = (0..t / n3)
        .map(|j| {
            let point = j * n3 + 1;
            let end = point.max(n2);
            let (a1, sigma, degenerate) = ar1_fit(x, end - n2, end - 1, a_max, scale);
            Ar1Window {
                t: point,
                a1,
                sigma,
                degenerate,
            }
        })
        .collect();
    Ok(LocalAr1Fits { windows, n2, n3, t })
}

/// Grid average over `s_omega` of the analytic curvature term at rescaled
/// time `u` and lag `k`.
pub fn delta_121_analytic(u: f64, k: i64, s_omega: &[f64]) -> f64 {
    let a = 0.8 * (1.5f64.cos() + (4.0 * PI * u).cos());
    let d1 = 0.8 * (-4.0 * PI * (4.0 * PI * u).sin());
    let d2 = 0.8 * (-16.0 * PI * PI * (4.0 * PI * u).cos());
    let sum: Complex64 = s_omega
        .iter()
        .map(|&w| {
            let e = Complex64::from_polar(1.0, -w);
            let base = Complex64::new(1.0, 0.0) + a * e;
            let term1 = (3.0 / PI) * base.powi(-4) * d1 * e;
            let term2 = (1.0 / PI) * base.norm().powi(-3) * d2 * e;
            Complex64::from_polar(1.0, k as f64 * w) * (term1 - term2)
        })
        .sum();
    sum.re / s_omega.len() as f64
}

/// Riemann sum of [`delta_121_analytic`] over `u = j n3 / T` and
/// `|k| <= floor(T^{1/6})`. Depends only on `(T, n3, s_omega)`.
pub fn delta_bar_121(t: usize, n3: usize, s_omega: &[f64]) -> Result<f64> {
    if n3 == 0 || t == 0 {
        return Err(LrvError::Config("delta_bar_121 needs T >= 1 and n3 >= 1".into()));
    }
    if s_omega.is_empty() {
        return Err(LrvError::Config("frequency grid is empty".into()));
    }
    // guard exact sixth powers (64, 729, 4096) against powf rounding down
    let kmax = ((t as f64).powf(1.0 / 6.0) + 1e-9).floor() as i64;
    let h = n3 as f64 / t as f64;
    let mut total = 0.0;
    for k in -kmax..=kmax {
        let inner: f64 = (0..=t / n3)
            .map(|j| delta_121_analytic(j as f64 * h, k, s_omega))
            .sum();
        total += h * inner;
    }
    Ok(total)
}

/// Plug-in quantities of the joint bandwidth rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginQuantities {
    pub phi11: f64,
    pub phi12: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub delta_bar: Vec<f64>,
}

impl PluginQuantities {
    /// `phi12 = 0` or a non-finite ratio: the joint rule is undefined.
    pub fn is_zero_curvature(&self) -> bool {
        !(self.phi11 > 0.0
            && self.phi12 > 0.0
            && self.phi1.is_finite()
            && self.phi2.is_finite()
            && self.phi1 > 0.0
            && self.phi2 > 0.0)
    }
}

/// Combines per-series fits and curvature terms into `phi11`, `phi12`,
/// `phi1 = phi11 / phi12^5` and `phi2 = phi12 / phi11^5`.
pub fn phi_hats(fits: &[LocalAr1Fits], delta_bar: &[f64], weights: &[f64], n3: usize, t: usize) -> Result<PluginQuantities> {
    if fits.is_empty() || fits.len() != delta_bar.len() || fits.len() != weights.len() {
        return Err(LrvError::InvalidInput(
            "fits, curvature terms and weights must have one entry per series".into(),
        ));
    }
    let h = n3 as f64 / t as f64;
    let (mut phi11, mut phi12) = (0.0, 0.0);
    for ((f, &db), &w) in fits.iter().zip(delta_bar).zip(weights) {
        let (mut d, mut n) = (0.0, 0.0);
        for win in &f.windows {
            let s2 = win.sigma * win.sigma;
            let one_minus = 1.0 - win.a1;
            d += s2 / one_minus.powi(2);
            n += s2 * win.a1 / one_minus.powi(4);
        }
        let (d, n) = (h * d, h * n);
        phi11 += w * db * db / (d * d);
        phi12 += w * (n / d).powi(2);
    }
    phi11 /= (4.0 * PI).powi(2);
    phi12 *= 36.0;
    Ok(PluginQuantities {
        phi11,
        phi12,
        phi1: phi11 / phi12.powi(5),
        phi2: phi12 / phi11.powi(5),
        delta_bar: delta_bar.to_vec(),
    })
}

/// A `(b1, b2)` bandwidth pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPair {
    pub b1: f64,
    pub b2: f64,
    /// Unit plug-ins were used because the curvature estimate vanished.
    pub fallback: bool,
}

fn clip_bandwidth(b: f64, t: usize) -> f64 {
    b.clamp(1.0 / t as f64, 1.0)
}

/// `b1 = 0.46 phi1^{1/24} T^{-1/6}`, `b2 = 3.56 phi2^{1/24} T^{-1/6}`,
/// clipped to `[1/T, 1]`.
pub fn joint_bandwidths(pq: &PluginQuantities, t: usize) -> BandwidthPair {
    let rate = (t as f64).powf(-1.0 / 6.0);
    if pq.is_zero_curvature() {
        warn!("zero curvature in joint plug-in; using unit plug-ins");
        return BandwidthPair {
            b1: clip_bandwidth(JOINT_C1 * rate, t),
            b2: clip_bandwidth(JOINT_C2 * rate, t),
            fallback: true,
        };
    }
    BandwidthPair {
        b1: clip_bandwidth(JOINT_C1 * pq.phi1.powf(1.0 / 24.0) * rate, t),
        b2: clip_bandwidth(JOINT_C2 * pq.phi2.powf(1.0 / 24.0) * rate, t),
        fallback: false,
    }
}

fn unit_variance(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        x.iter().map(|v| v / sd).collect()
    } else {
        x.to_vec()
    }
}

/// Full joint plug-in pipeline on a score matrix.
pub fn joint_plugin(v: &ScoreMatrix, opts: &PluginOptions) -> Result<(BandwidthPair, PluginQuantities)> {
    let t = v.t();
    let default_len = ((t as f64).powf(0.66).floor() as usize).max(4);
    let n2 = opts.window.unwrap_or(default_len).min(t);
    let n3 = opts.step.unwrap_or(default_len).min(t);
    let weights = opts.weights.clone().unwrap_or_else(|| vec![1.0; v.p()]);
    let db = delta_bar_121(t, n3, &opts.s_omega)?;
    let mut fits = Vec::with_capacity(v.p());
    for r in 0..v.p() {
        let mut x = v.series(r);
        if opts.standardize {
            x = unit_variance(&x);
        }
        fits.push(fit_local_ar1(&x, n2, n3, opts.a_max, opts.sigma_scale)?);
    }
    let pq = phi_hats(&fits, &vec![db; v.p()], &weights, n3, t)?;
    Ok((joint_bandwidths(&pq, t), pq))
}

/// Andrews' AR(1) plug-in `alpha(q)` from full-sample fits.
pub fn andrews_alpha(v: &ScoreMatrix, q: u32, weights: Option<&[f64]>, a_max: f64) -> Result<f64> {
    let fits: Vec<(f64, f64)> = (0..v.p())
        .map(|r| {
            let x = v.series(r);
            let (a, s, _) = ar1_fit(&x, 0, x.len() - 1, a_max, SigmaScale::ResidualSum);
            (a, s)
        })
        .collect();
    andrews_alpha_from_fits(&fits, q, weights)
}

/// `alpha(q)` from per-series `(a1, sigma)` pairs.
pub fn andrews_alpha_from_fits(fits: &[(f64, f64)], q: u32, weights: Option<&[f64]>) -> Result<f64> {
    if q != 1 && q != 2 {
        return Err(LrvError::Config(format!("Andrews plug-in needs q in {{1, 2}}, got {q}")));
    }
    let ones = vec![1.0; fits.len()];
    let w = weights.unwrap_or(&ones);
    if w.len() != fits.len() {
        return Err(LrvError::InvalidInput("one weight per series required".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&(a, s), &wr) in fits.iter().zip(w) {
        let s4 = s.powi(4);
        let tail = match q {
            2 => (1.0 - a).powi(8),
            _ => (1.0 - a).powi(6) * (1.0 + a).powi(2),
        };
        num += wr * 4.0 * a * a * s4 / tail;
        den += wr * s4 / (1.0 - a).powi(4);
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// A single lag bandwidth with a degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagBandwidth {
    pub b1: f64,
    pub degenerate: bool,
}

/// `b = (q K_q^2 alpha T / int K^2)^{-1/(2q+1)}`, clipped to `[1/T, 1]`.
pub fn andrews_bandwidth(alpha: f64, q: u32, kernel: LagKernel, t: usize) -> Result<LagBandwidth> {
    let c = kernel.constants()?;
    if c.q != q {
        return Err(LrvError::Config(format!(
            "kernel {kernel} has characteristic exponent {}, not {q}",
            c.q
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Ok(LagBandwidth { b1: 1.0, degenerate: true });
    }
    let qf = q as f64;
    let base = qf * c.k1q * c.k1q * alpha * t as f64 / c.l2norm;
    Ok(LagBandwidth {
        b1: clip_bandwidth(base.powf(-1.0 / (2.0 * qf + 1.0)), t),
        degenerate: false,
    })
}

/// Newey-West (1994) automatic Bartlett lag, returned as `b1 = 1/(m+1)`.
/// Scores are combined with unit weights.
pub fn nw_bandwidth(v: &ScoreMatrix) -> LagBandwidth {
    let t = v.t();
    let data = v.matrix();
    let h: Vec<f64> = data.row_iter().map(|row| row.sum()).collect();
    let n = ((4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize).min(t - 1);
    let sigma = |j: usize| (j..t).map(|s| h[s] * h[s - j]).sum::<f64>() / t as f64;
    let mut s0 = sigma(0);
    let mut s1 = 0.0;
    for j in 1..=n {
        let sj = sigma(j);
        s0 += 2.0 * sj;
        s1 += 2.0 * j as f64 * sj;
    }
    if !(s0 > 0.0 && s0.is_finite() && s1.is_finite()) {
        return LagBandwidth { b1: 1.0, degenerate: true };
    }
    let gamma = 1.1447 * ((s1 / s0).powi(2)).powf(1.0 / 3.0);
    let m = ((gamma * (t as f64).powf(1.0 / 3.0)).floor() as usize).min(t - 1);
    LagBandwidth {
        b1: 1.0 / (m as f64 + 1.0),
        degenerate: false,
    }
}

/// `(T b1 b2)^{-1} w3 + (b1^2 w1 + b2^2 w2)^2`.
pub fn asymptotic_remse(w1: f64, w2: f64, w3: f64, b1: f64, b2: f64, t: f64) -> f64 {
    w3 / (t * b1 * b2) + (b1 * b1 * w1 + b2 * b2 * w2).powi(2)
}

/// Closed-form minimizer of [`asymptotic_remse`] for positive weights.
pub fn remse_minimizer(w1: f64, w2: f64, w3: f64, t: f64) -> (f64, f64) {
    let common = t.powf(-1.0 / 6.0) * (w3 / 8.0).powf(1.0 / 6.0);
    let b1 = common * (w2 / w1.powi(5)).powf(1.0 / 12.0);
    let b2 = common * (w1 / w2.powi(5)).powf(1.0 / 12.0);
    (b1, b2)
}
