//! Replication and cell-level Monte Carlo loops.

use std::collections::HashSet;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, RunOptions};
use super::spec::{BandwidthRule, CvRule, EstimatorName, EstimatorSpec};
use crate::bandwidths::{andrews_alpha, andrews_bandwidth, joint_plugin, nw_bandwidth};
use crate::dgp::{generate, hash_str, mix_seed, DgpSpec, Model};
use crate::error::{LrvError, Result};
use crate::estimators::{classical_hac, dk_hac, ewc, ewc_default_b, LrvEstimate};
use crate::har_tests::{critical_value_with, gr_statistic_with, ols_fit, t_statistic, CvDist, FixedBSettings, GrInputs};
use crate::kernels::{LagKernel, TimeKernel};
use crate::local_cov::SmoothingPlan;
use crate::score::ScoreMatrix;

/// An LRV estimate with the bandwidths that produced it.
#[derive(Debug, Clone)]
pub struct LrvChoice {
    pub estimate: LrvEstimate,
    pub b1: f64,
    /// Time bandwidth (double-kernel estimator only).
    pub b2: Option<f64>,
    /// A bandwidth rule fell back to a default.
    pub fallback: bool,
}

/// Selects bandwidths and estimates the LRV of `v` according to `spec`.
pub fn estimate_lrv(v: &ScoreMatrix, spec: &EstimatorSpec, opts: &RunOptions) -> Result<LrvChoice> {
    let t = v.t();
    let lag_only = |b1: f64, kernel: LagKernel, fallback: bool| -> Result<LrvChoice> {
        Ok(LrvChoice {
            estimate: classical_hac(v, b1, kernel, opts.dof_adjust)?,
            b1,
            b2: None,
            fallback,
        })
    };
    match (spec.estimator, spec.bandwidth) {
        (EstimatorName::DkHac, rule) => {
            let (b1, b2, fallback) = match rule {
                BandwidthRule::JointPlugin => {
                    let (bw, _) = joint_plugin(v, &opts.plugin)?;
                    (bw.b1, bw.b2, bw.fallback)
                }
                BandwidthRule::Fixed(b1, b2) => (b1, b2, false),
                other => return Err(LrvError::Config(format!("dk-hac does not support bandwidth '{other}'"))),
            };
            let mut plan = SmoothingPlan::new(b1, b2, SmoothingPlan::default_block_len(t));
            plan.dof_adjust = opts.dof_adjust;
            plan.normalization = opts.normalization;
            Ok(LrvChoice {
                estimate: dk_hac(v, &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic)?,
                b1,
                b2: Some(b2),
                fallback,
            })
        }
        (EstimatorName::HacQs, BandwidthRule::Andrews) => {
            let alpha = andrews_alpha(v, 2, None, opts.plugin.a_max)?;
            let bw = andrews_bandwidth(alpha, 2, LagKernel::QuadraticSpectral, t)?;
            lag_only(bw.b1, LagKernel::QuadraticSpectral, bw.degenerate)
        }
        (EstimatorName::Nw, BandwidthRule::Nw94) => {
            let bw = nw_bandwidth(v);
            lag_only(bw.b1, LagKernel::Bartlett, bw.degenerate)
        }
        (EstimatorName::HacQs, BandwidthRule::Fixed(b1, _)) => lag_only(b1, LagKernel::QuadraticSpectral, false),
        (EstimatorName::Nw, BandwidthRule::Fixed(b1, _)) => lag_only(b1, LagKernel::Bartlett, false),
        (EstimatorName::HacQs, BandwidthRule::FixedB(b)) => {
            lag_only(1.0 / (b * t as f64), LagKernel::QuadraticSpectral, false)
        }
        (EstimatorName::Nw, BandwidthRule::FixedB(b)) => lag_only(1.0 / (b * t as f64), LagKernel::Bartlett, false),
        (EstimatorName::Ewc, rule) => {
            let b = match rule {
                BandwidthRule::Terms(n) => n,
                _ => ewc_default_b(t),
            };
            Ok(LrvChoice {
                estimate: ewc(v, b)?,
                b1: b as f64,
                b2: None,
                fallback: false,
            })
        }
        (e, rule) => Err(LrvError::Config(format!(
            "estimator '{}' does not support bandwidth '{rule}'",
            e.name()
        ))),
    }
}

/// Reference distribution implied by `spec` and the estimate.
pub fn reference_dist(spec: &EstimatorSpec, lrv: &LrvEstimate) -> Result<CvDist> {
    match spec.cv {
        CvRule::Normal => Ok(CvDist::Normal),
        CvRule::Student => lrv
            .df()
            .map(|df| CvDist::Student { df: df as f64 })
            .ok_or_else(|| LrvError::Config("Student-t critical values need an EWC estimate".into())),
        CvRule::FixedB => match spec.bandwidth {
            BandwidthRule::FixedB(b) => Ok(CvDist::FixedB {
                b,
                kernel: match spec.estimator {
                    EstimatorName::HacQs => LagKernel::QuadraticSpectral,
                    _ => LagKernel::Bartlett,
                },
            }),
            _ => Err(LrvError::Config("fixed-b critical values need a fixed-b bandwidth".into())),
        },
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    pub stat: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub b1: f64,
    pub b2: Option<f64>,
    /// PSD repair or bandwidth fallback happened.
    pub degenerate: bool,
}

/// Simulates one data set and runs one test.
pub fn replicate(dgp: &DgpSpec, spec: &EstimatorSpec, alpha: f64, opts: &RunOptions) -> Result<RepOutcome> {
    let sim = generate(dgp)?;
    let fb = FixedBSettings {
        n_paths: opts.fixed_b_paths,
        grid_n: opts.fixed_b_grid,
        seed: opts.fixed_b_seed,
    };
    let (stat, choice, repaired) = if dgp.model == Model::M4 {
        let tm = (opts.gr_in_sample * dgp.t as f64).round() as usize;
        let g = GrInputs::fixed_scheme(sim.y.as_slice(), &sim.regressor(), tm)?;
        let v = g.scores(opts.center_surprise_losses)?;
        let choice = estimate_lrv(&v, spec, opts)?;
        (gr_statistic_with(&g, &choice.estimate, opts.gr_fixed_scheme_adjust)?, choice, false)
    } else {
        let fit = ols_fit(&sim.y, &sim.x)?;
        let choice = estimate_lrv(&fit.scores, spec, opts)?;
        let r = dgp.model.tested_coef();
        let ts = t_statistic(&fit, &choice.estimate, r, dgp.model.null_value())?;
        (ts.t, choice, ts.psd_repaired)
    };
    let cv = critical_value_with(reference_dist(spec, &choice.estimate)?, alpha, fb)?;
    Ok(RepOutcome {
        stat,
        critical_value: cv,
        reject: stat.abs() > cv,
        b1: choice.b1,
        b2: choice.b2,
        degenerate: repaired || choice.fallback,
    })
}

/// Identifies one cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub model: Model,
    pub estimator: String,
    pub t: usize,
    pub delta: f64,
}

impl CellKey {
    fn id(&self) -> (Model, String, usize, u64) {
        (self.model, self.estimator.clone(), self.t, self.delta.to_bits())
    }

    /// `hash(baseSeed, model, estimator, T, delta)`.
    pub fn seed(&self, base: u64) -> u64 {
        let mut s = mix_seed(base, hash_str(self.model.name()));
        s = mix_seed(s, hash_str(&self.estimator));
        s = mix_seed(s, self.t as u64);
        mix_seed(s, self.delta.to_bits())
    }
}

/// Aggregated result of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: Model,
    pub estimator: String,
    pub t: usize,
    pub delta: f64,
    pub rejection_rate: f64,
    pub mcse: f64,
    /// Replications that produced a test decision.
    pub n_reps: usize,
    pub failures: usize,
    pub degenerate_count: usize,
    pub mean_b1: f64,
    /// Empty for single-bandwidth estimators.
    pub mean_b2: Option<f64>,
    pub wall_time: f64,
}

impl ExperimentResult {
    pub fn key(&self) -> CellKey {
        CellKey {
            model: self.model,
            estimator: self.estimator.clone(),
            t: self.t,
            delta: self.delta,
        }
    }

    /// Equality of every field except wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }
}

/// Runs `n_reps` replications of one cell on the current rayon pool.
pub fn run_cell(key: &CellKey, spec: &EstimatorSpec, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let cell_seed = key.seed(cfg.base_seed);
    let outcomes: Vec<Result<RepOutcome>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|i| {
            let dgp = DgpSpec {
                model: key.model,
                t: key.t,
                delta: key.delta,
                seed: mix_seed(cell_seed, i as u64),
            };
            replicate(&dgp, spec, cfg.alpha, &cfg.options)
        })
        .collect();

    let mut ok = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(r) => ok.push(r),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let failures = cfg.n_reps - ok.len();
    if let Some(e) = first_error {
        if failures * 100 >= cfg.n_reps || ok.is_empty() {
            return Err(LrvError::TooManyFailures {
                cell: format!("{}/{}/T={}/delta={}", key.model, key.estimator, key.t, key.delta),
                failed: failures,
                reps: cfg.n_reps,
                first: e.to_string(),
            });
        }
    }
    let n = ok.len();
    let rejections = ok.iter().filter(|o| o.reject).count();
    let rate = rejections as f64 / n as f64;
    let mean_b2 = if ok.iter().all(|o| o.b2.is_some()) {
        Some(ok.iter().map(|o| o.b2.unwrap_or(0.0)).sum::<f64>() / n as f64)
    } else {
        None
    };
    Ok(ExperimentResult {
        model: key.model,
        estimator: key.estimator.clone(),
        t: key.t,
        delta: key.delta,
        rejection_rate: rate,
        mcse: (rate * (1.0 - rate) / n as f64).sqrt(),
        n_reps: n,
        failures,
        degenerate_count: ok.iter().filter(|o| o.degenerate).count(),
        mean_b1: ok.iter().map(|o| o.b1).sum::<f64>() / n as f64,
        mean_b2,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Every cell of the grid in run order, with its parsed spec.
pub fn cells(cfg: &ExperimentConfig) -> Vec<(CellKey, EstimatorSpec)> {
    let mut out = Vec::new();
    for &model in &cfg.models {
        for spec in &cfg.estimators {
            for &t in &cfg.ts {
                for &delta in &cfg.deltas {
                    out.push((
                        CellKey {
                            model,
                            estimator: spec.label(),
                            t,
                            delta,
                        },
                        *spec,
                    ));
                }
            }
        }
    }
    out
}

/// Runs every cell of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    run_experiment_resume(cfg, &[])
}

/// Runs the cells of `cfg` that are not already in `done`; results for the
/// full grid are returned in grid order.
pub fn run_experiment_resume(cfg: &ExperimentConfig, done: &[ExperimentResult]) -> Result<Vec<ExperimentResult>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| LrvError::Config(e.to_string()))?;
    let finished: HashSet<_> = done.iter().map(|r| r.key().id()).collect();
    let mut results = Vec::new();
    for (key, spec) in cells(cfg) {
        if finished.contains(&key.id()) {
            if let Some(r) = done.iter().find(|r| r.key().id() == key.id()) {
                results.push(r.clone());
            }
            continue;
        }
        let r = pool.install(|| run_cell(&key, &spec, cfg))?;
        info!(
            "{} {} T={} delta={}: rate {:.4} (mcse {:.4}) in {:.1}s",
            r.model, r.estimator, r.t, r.delta, r.rejection_rate, r.mcse, r.wall_time
        );
        results.push(r);
    }
    Ok(results)
}
