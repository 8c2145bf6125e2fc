//! Seeded simulators for the regression designs M1-M4, a segmented locally
//! stationary AR(1) generator, and the seed-stream scheme.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};

/// Random number generator used for every simulated stream.
pub type StreamRng = ChaCha8Rng;

/// splitmix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two seeds into a new, well-mixed seed.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix(splitmix(a) ^ b.rotate_left(17) ^ 0x2545_f491_4f6c_dd1d)
}

/// FNV-1a hash of a string, stable across platforms and releases.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::M1, Model::M2, Model::M3, Model::M4];

    pub fn name(self) -> &'static str {
        match self {
            Model::M1 => "M1",
            Model::M2 => "M2",
            Model::M3 => "M3",
            Model::M4 => "M4",
        }
    }

    /// Coefficient tested in the regression designs (0-based).
    pub fn tested_coef(self) -> usize {
        match self {
            Model::M1 => 0,
            _ => 1,
        }
    }

    /// Null value of the tested coefficient.
    pub fn null_value(self) -> f64 {
        0.0
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Model::M1),
            "M2" => Ok(Model::M2),
            "M3" => Ok(Model::M3),
            "M4" => Ok(Model::M4),
            _ => Err(LrvError::Config(format!("unknown model '{s}'"))),
        }
    }
}

/// One simulated data set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub model: Model,
    pub t: usize,
    pub delta: f64,
    pub seed: u64,
}

/// Simulated regression data: `y` and the design `X = [1, x]` (for M4, `x`
/// holds the raw predictor series and `X` is unused by the forecast test).
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl Simulated {
    /// The stochastic regressor column.
    pub fn regressor(&self) -> Vec<f64> {
        self.x.column(1).iter().copied().collect()
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

const BURN_IN: usize = 200;

/// Stationary AR(1) path started from its stationary law after a burn-in.
fn ar1_errors(rng: &mut StreamRng, t: usize, a: f64, sd: f64) -> Vec<f64> {
    let mut e = normal(rng) * sd / (1.0 - a * a).sqrt();
    for _ in 0..BURN_IN {
        e = a * e + sd * normal(rng);
    }
    (0..t)
        .map(|_| {
            e = a * e + sd * normal(rng);
            e
        })
        .collect()
}

fn design(x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] })
}

fn check_t(model: Model, t: usize) -> Result<()> {
    if t < 20 {
        return Err(LrvError::Config(format!("sample size {t} too small")));
    }
    if ![200, 400, 800].contains(&t) {
        warn!("{model} with T = {t} is outside the tabulated designs");
    }
    Ok(())
}

/// `y = δ + x + e`, `x ~ N(1,1)`, `e` AR(1) with `a = 0.4`, `σ²_u = 0.5`.
pub fn gen_m1(t: usize, delta: f64, seed: u64) -> Result<Simulated> {
    check_t(Model::M1, t)?;
    let mut rng = stream_rng(seed);
    let x: Vec<f64> = (0..t).map(|_| 1.0 + normal(&mut rng)).collect();
    let e = ar1_errors(&mut rng, t, 0.4, 0.5f64.sqrt());
    let y = DVector::from_fn(t, |i, _| delta + x[i] + e[i]);
    Ok(Simulated { y, x: design(&x) })
}

/// `y = δ x + e`, `x ~ N(1,1)`, `e` AR(1) with `a = 0.4`, `σ²_u = 1`.
pub fn gen_m2(t: usize, delta: f64, seed: u64) -> Result<Simulated> {
    check_t(Model::M2, t)?;
    let mut rng = stream_rng(seed);
    let x: Vec<f64> = (0..t).map(|_| 1.0 + normal(&mut rng)).collect();
    let e = ar1_errors(&mut rng, t, 0.4, 1.0);
    let y = DVector::from_fn(t, |i, _| delta * x[i] + e[i]);
    Ok(Simulated { y, x: design(&x) })
}

/// Smooth M3 coefficient `max{0, -cos(1.5 - cos(5u))}` at `u = t/T`.
pub fn m3_rho(u: f64) -> f64 {
    (-(1.5 - (5.0 * u).cos()).cos()).max(0.0)
}

/// Length of the near-unit-root window in M3.
pub fn m3_window(t: usize) -> usize {
    match t {
        200 => 10,
        400 => 30,
        _ => {
            warn!("M3 window length for T = {t} is not tabulated; using T/20");
            (t / 20).max(2)
        }
    }
}

/// Segmented locally stationary AR(1) specification.
#[derive(Clone)]
pub struct SlsAr1Spec {
    pub rho: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sigma: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `(start, end, rho)`: observations `start..=end` (1-based) use `rho`.
    pub breaks: Vec<(usize, usize, f64)>,
}

impl std::fmt::Debug for SlsAr1Spec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlsAr1Spec").field("breaks", &self.breaks).finish_non_exhaustive()
    }
}

impl SlsAr1Spec {
    pub fn constant(rho: f64, sigma: f64) -> Self {
        Self {
            rho: std::sync::Arc::new(move |_| rho),
            sigma: std::sync::Arc::new(move |_| sigma),
            breaks: Vec::new(),
        }
    }

    /// The M3 error law for sample size `t`.
    pub fn m3(t: usize) -> Self {
        let h = m3_window(t);
        // integers strictly inside (4T/5 + 1, 4T/5 + h)
        let lo = 4 * t / 5 + 2;
        let hi = 4 * t / 5 + h - 1;
        Self {
            rho: std::sync::Arc::new(m3_rho),
            sigma: std::sync::Arc::new(|_| 1.0),
            breaks: vec![(lo, hi, 0.99)],
        }
    }

    fn rho_at(&self, s: usize, t: usize) -> f64 {
        self.breaks
            .iter()
            .find(|(lo, hi, _)| (*lo..=*hi).contains(&s))
            .map(|b| b.2)
            .unwrap_or_else(|| (self.rho)(s as f64 / t as f64))
    }

    fn validate(&self, t: usize) -> Result<()> {
        for s in 1..=t {
            let r = self.rho_at(s, t);
            if !(r.abs() < 1.0) {
                return Err(LrvError::Config(format!("AR coefficient {r} at t = {s} is not inside (-1, 1)")));
            }
        }
        Ok(())
    }
}

fn sls_path_with(rng: &mut StreamRng, spec: &SlsAr1Spec, t: usize) -> Vec<f64> {
    let r0 = (spec.rho)(0.0);
    let s0 = (spec.sigma)(0.0);
    let mut e = normal(rng) * s0 / (1.0 - r0 * r0).sqrt();
    for _ in 0..BURN_IN {
        e = r0 * e + s0 * normal(rng);
    }
    (1..=t)
        .map(|s| {
            let u = s as f64 / t as f64;
            e = spec.rho_at(s, t) * e + (spec.sigma)(u) * normal(rng);
            e
        })
        .collect()
}

/// `e_t = ρ_t e_{t-1} + σ(t/T) z_t` after a 200-draw burn-in started from
/// the stationary law at `u = 0`.
pub fn sls_ar1_path(spec: &SlsAr1Spec, t: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate(t)?;
    Ok(sls_path_with(&mut stream_rng(seed), spec, t))
}

/// `y = δ x + e` with SLS errors and `x_t = 1 + 0.6 x_{t-1} + u_t`.
pub fn gen_m3(t: usize, delta: f64, seed: u64) -> Result<Simulated> {
    check_t(Model::M3, t)?;
    let spec = SlsAr1Spec::m3(t);
    spec.validate(t)?;
    let mut rng = stream_rng(seed);
    let mut xv = 1.0 / (1.0 - 0.6) + normal(&mut rng) / (1.0f64 - 0.36).sqrt();
    for _ in 0..BURN_IN {
        xv = 1.0 + 0.6 * xv + normal(&mut rng);
    }
    let x: Vec<f64> = (0..t)
        .map(|_| {
            xv = 1.0 + 0.6 * xv + normal(&mut rng);
            xv
        })
        .collect();
    let e = sls_path_with(&mut rng, &spec, t);
    let y = DVector::from_fn(t, |i, _| delta * x[i] + e[i]);
    Ok(Simulated { y, x: design(&x) })
}

/// `y_t = 1 + x_{t-1} + δ x_{t-1} 1{t > 0.7T} + e_t`, `x ~ N(1, 1.2)`, `e`
/// AR(1) with `a = 0.3`. `y_1` uses a pre-sample draw of `x_0`.
pub fn gen_m4(t: usize, delta: f64, seed: u64) -> Result<Simulated> {
    check_t(Model::M4, t)?;
    let mut rng = stream_rng(seed);
    let sd = 1.2f64.sqrt();
    let x0 = 1.0 + sd * normal(&mut rng);
    let x: Vec<f64> = (0..t).map(|_| 1.0 + sd * normal(&mut rng)).collect();
    let e = ar1_errors(&mut rng, t, 0.3, 1.0);
    let brk = 0.7 * t as f64;
    let y = DVector::from_fn(t, |i, _| {
        let prev = if i == 0 { x0 } else { x[i - 1] };
        let s = (i + 1) as f64;
        let slope = if s > brk { 1.0 + delta } else { 1.0 };
        1.0 + slope * prev + e[i]
    });
    Ok(Simulated { y, x: design(&x) })
}

/// Dispatches on `spec.model`.
pub fn generate(spec: &DgpSpec) -> Result<Simulated> {
    match spec.model {
        Model::M1 => gen_m1(spec.t, spec.delta, spec.seed),
        Model::M2 => gen_m2(spec.t, spec.delta, spec.seed),
        Model::M3 => gen_m3(spec.t, spec.delta, spec.seed),
        Model::M4 => gen_m4(spec.t, spec.delta, spec.seed),
    }
}

/// Writes a simulated data set as CSV with columns `y,x`.
pub fn dump_csv(sim: &Simulated, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| LrvError::Io(e.to_string()))?;
    w.write_record(["y", "x"]).map_err(|e| LrvError::Io(e.to_string()))?;
    for i in 0..sim.y.len() {
        w.write_record([sim.y[i].to_string(), sim.x[(i, 1)].to_string()])
            .map_err(|e| LrvError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Maximum of [`m3_rho`] on a fine grid of `[0, 1]`.
pub fn m3_rho_max() -> f64 {
    (0..=100_000)
        .map(|i| m3_rho(i as f64 / 100_000.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn deterministic_and_null_consistent() {
        for m in Model::ALL {
            let s = DgpSpec {
                model: m,
                t: 200,
                delta: 0.0,
                seed: 99,
            };
            assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        }
        let null = gen_m2(200, 0.0, 5).unwrap();
        let alt = gen_m2(200, 0.0, 5).unwrap();
        assert_eq!(null.y.as_slice(), alt.y.as_slice());
        assert_ne!(gen_m2(200, 0.3, 5).unwrap().y, null.y);
        assert_eq!(gen_m2(200, 0.3, 5).unwrap().x, null.x);
    }

    #[test]
    fn m1_error_variance() {
        let mut rng = stream_rng(1);
        let e = ar1_errors(&mut rng, 100_000, 0.4, 0.5f64.sqrt());
        assert!((variance(&e) - 0.5 / 0.84).abs() < 0.01);
    }

    #[test]
    fn m3_rho_range() {
        let max = m3_rho_max();
        assert!((max - 0.8011).abs() < 1e-3, "{max}");
        let min = (0..=1000).map(|i| m3_rho(i as f64 / 1000.0)).fold(1.0, f64::min);
        assert_eq!(min, 0.0);
        let spec = SlsAr1Spec::m3(200);
        assert_eq!(spec.breaks, vec![(162, 169, 0.99)]);
    }

    #[test]
    fn sls_zero_sigma_and_autocorrelation() {
        let spec = SlsAr1Spec {
            rho: std::sync::Arc::new(|_| 0.5),
            sigma: std::sync::Arc::new(|_| 0.0),
            breaks: vec![],
        };
        assert!(sls_ar1_path(&spec, 100, 1).unwrap().iter().all(|v| *v == 0.0));
        let x = sls_ar1_path(&SlsAr1Spec::constant(0.4, 1.0), 100_000, 2).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        assert!((num / den - 0.4).abs() < 0.01);
    }

    #[test]
    fn sls_override_inflates_variance() {
        let t = 400;
        let spec = SlsAr1Spec {
            rho: std::sync::Arc::new(|_| 0.2),
            sigma: std::sync::Arc::new(|_| 1.0),
            breaks: vec![(200, 300, 0.99)],
        };
        let (mut inside, mut outside) = (0.0, 0.0);
        for seed in 0..100 {
            let x = sls_ar1_path(&spec, t, seed).unwrap();
            inside += x[250..300].iter().map(|v| v * v).sum::<f64>() / 50.0;
            outside += x[50..150].iter().map(|v| v * v).sum::<f64>() / 100.0;
        }
        assert!(inside > outside);
        let bad = SlsAr1Spec::constant(1.0, 1.0);
        assert!(sls_ar1_path(&bad, 50, 0).is_err());
    }

    #[test]
    fn substreams_uncorrelated() {
        let base = 42;
        let a = sls_ar1_path(&SlsAr1Spec::constant(0.0, 1.0), 10_000, mix_seed(base, 0)).unwrap();
        let b = sls_ar1_path(&SlsAr1Spec::constant(0.0, 1.0), 10_000, mix_seed(base, 1)).unwrap();
        let c: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / 10_000.0;
        assert!(c.abs() < 0.02 * (variance(&a) * variance(&b)).sqrt());
    }

    #[test]
    fn seed_hashes_are_stable() {
        assert_eq!(hash_str(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(hash_str("a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(mix_seed(1, 2), mix_seed(2, 1));
    }

    #[test]
    fn m4_break_location() {
        let t = 200;
        let null = gen_m4(t, 0.0, 3).unwrap();
        let alt = gen_m4(t, 1.0, 3).unwrap();
        for i in 0..t {
            let changed = null.y[i] != alt.y[i];
            assert_eq!(changed, (i + 1) as f64 > 140.0, "row {i}");
        }
    }
}
