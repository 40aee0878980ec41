//! The benchmark suite behind `flsa bench`: inner-loop count, penalty
//! weight, and robust-loss comparisons on simulated signals.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::loss::LossModel;
use crate::simulate::{generate, NoiseModel, SignalSpec};
use crate::solver::{solve, solve_with_observer, AlmConfig, SolverState, Termination};

pub fn mse(estimate: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(estimate.len(), truth.len());
    estimate.iter().zip(truth).map(|(b, t)| (b - t).powi(2)).sum::<f64>() / truth.len() as f64
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment1Config {
    pub inner_ts: Vec<usize>,
    pub sizes: Vec<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
    pub variance: f64,
    pub replicates: usize,
    /// Replicate `r` uses signal seed `seed + r`, shared across all `T`.
    pub seed: u64,
}

impl Default for Experiment1Config {
    fn default() -> Self {
        Self {
            inner_ts: vec![1, 2, 5, 10],
            sizes: vec![200, 2000],
            lambda1: 0.5,
            lambda2: 4.0,
            c: 5.0,
            variance: 0.1,
            replicates: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment1Row {
    pub inner_t: usize,
    pub n: usize,
    pub replicates: usize,
    pub mean_outer_iterations: f64,
    pub mean_inner_sweeps: f64,
    pub mean_wall_time_ms: f64,
}

/// Rows are ordered by `n`, then `T`.
pub fn run_experiment1(cfg: &Experiment1Config) -> Result<Vec<Experiment1Row>> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let signals = (0..cfg.replicates as u64)
            .map(|r| generate(&SignalSpec::gaussian(n, cfg.seed + r, cfg.variance)).map(|s| s.noisy))
            .collect::<Result<Vec<_>>>()?;
        for &t in &cfg.inner_ts {
            let alm = AlmConfig::new(cfg.lambda1, cfg.lambda2)
                .with_c(cfg.c)
                .with_inner_t(t)
                .with_trace(false);
            let runs = signals
                .par_iter()
                .map(|y| {
                    let start = Instant::now();
                    let report = solve(y, &LossModel::Quadratic, &alm, None)?;
                    Ok((report.iterations, report.inner_sweeps, elapsed_ms(start)))
                })
                .collect::<Result<Vec<_>>>()?;
            let k = runs.len().max(1) as f64;
            rows.push(Experiment1Row {
                inner_t: t,
                n,
                replicates: runs.len(),
                mean_outer_iterations: runs.iter().map(|r| r.0 as f64).sum::<f64>() / k,
                mean_inner_sweeps: runs.iter().map(|r| r.1 as f64).sum::<f64>() / k,
                mean_wall_time_ms: runs.iter().map(|r| r.2).sum::<f64>() / k,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment2Config {
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub cs: Vec<f64>,
    pub variance: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_outer_iters: usize,
}

impl Default for Experiment2Config {
    fn default() -> Self {
        Self {
            n: 1000,
            lambda1: 0.0,
            lambda2: 0.1,
            cs: vec![0.05, 0.5, 5.0, 50.0, 500.0],
            variance: 0.1,
            seed: 0,
            tol: 1e-10,
            max_outer_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseTrace {
    pub c: f64,
    /// MSE to the noiseless signal after each outer iteration.
    pub mse: Vec<f64>,
    pub iterations: usize,
    pub terminated: Termination,
}

impl MseTrace {
    pub fn final_mse(&self) -> f64 {
        self.mse.last().copied().unwrap_or(f64::NAN)
    }

    /// First iteration (1-based) from which every later MSE lies within
    /// 10% of the final MSE, in either direction.
    pub fn settle_iteration(&self) -> usize {
        let fin = self.final_mse();
        self.mse
            .iter()
            .rposition(|m| (m - fin).abs() > 0.1 * fin)
            .map_or(1, |k| k + 2)
    }
}

/// One trace per `c`, in the order given, all on the same signal.
pub fn run_experiment2(cfg: &Experiment2Config) -> Result<Vec<MseTrace>> {
    let signal = generate(&SignalSpec::gaussian(cfg.n, cfg.seed, cfg.variance))?;
    cfg.cs
        .par_iter()
        .map(|&c| {
            let alm = AlmConfig::new(cfg.lambda1, cfg.lambda2)
                .with_c(c)
                .with_tol(cfg.tol)
                .with_max_outer_iters(cfg.max_outer_iters)
                .with_trace(false);
            let mut trace = Vec::new();
            let report = solve_with_observer(&signal.noisy, &LossModel::Quadratic, &alm, None, |s: &SolverState| {
                trace.push(mse(&s.beta, &signal.truth))
            })?;
            Ok(MseTrace {
                c,
                mse: trace,
                iterations: report.iterations,
                terminated: report.terminated,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub iterations: usize,
    pub terminated: Termination,
    /// Fastest of the repeats.
    pub wall_time_ms: f64,
}

/// Iterations and wall time of the Experiment 2 problem as `n` grows, at a single `c`.
pub fn run_scaling(cfg: &Experiment2Config, c: f64, sizes: &[usize], repeats: usize) -> Result<Vec<ScalingRow>> {
    let alm = AlmConfig::new(cfg.lambda1, cfg.lambda2)
        .with_c(c)
        .with_tol(cfg.tol)
        .with_max_outer_iters(cfg.max_outer_iters)
        .with_trace(false);
    sizes
        .iter()
        .map(|&n| {
            let y = generate(&SignalSpec::gaussian(n, cfg.seed, cfg.variance))?.noisy;
            let mut best = f64::INFINITY;
            let mut last = None;
            for _ in 0..repeats.max(1) {
                let start = Instant::now();
                let report = solve(&y, &LossModel::Quadratic, &alm, None)?;
                best = best.min(elapsed_ms(start));
                last = Some(report);
            }
            let report = last.expect("at least one repeat");
            Ok(ScalingRow {
                n,
                iterations: report.iterations,
                terminated: report.terminated,
                wall_time_ms: best,
            })
        })
        .collect()
}

/// Seed fixed after a single calibration run.
pub const EXPERIMENT4_SEED: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment4Config {
    pub n: usize,
    pub df: f64,
    pub scale: f64,
    pub seed: u64,
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
}

impl Default for Experiment4Config {
    fn default() -> Self {
        Self {
            n: 100,
            df: 2.0,
            scale: 0.3,
            seed: EXPERIMENT4_SEED,
            lambda1_grid: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2],
            // 0.01 to 10, four points per decade
            lambda2_grid: (0..=12).map(|k| 0.01 * 10f64.powf(k as f64 / 4.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub loss: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mse: f64,
    pub terminated: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestFit {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mse: f64,
    pub beta_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment4Result {
    pub truth: Vec<f64>,
    pub noisy: Vec<f64>,
    pub quadratic: BestFit,
    pub lad: BestFit,
    pub grid: Vec<GridPoint>,
}

/// Tunes both losses over the λ-grid by MSE to the noiseless signal.
pub fn run_experiment4(cfg: &Experiment4Config) -> Result<Experiment4Result> {
    let noise = NoiseModel::StudentT {
        df: cfg.df,
        scale: cfg.scale,
    };
    let signal = generate(&SignalSpec::new(cfg.n, cfg.seed, noise))?;
    let pairs: Vec<(f64, f64)> = cfg
        .lambda1_grid
        .iter()
        .flat_map(|&l1| cfg.lambda2_grid.iter().map(move |&l2| (l1, l2)))
        .collect();

    let mut grid = Vec::new();
    let mut fits = Vec::new();
    for loss in [LossModel::Quadratic, LossModel::LeastAbsoluteDeviation] {
        let solved = pairs
            .par_iter()
            .map(|&(l1, l2)| {
                let report = solve(&signal.noisy, &loss, &AlmConfig::new(l1, l2).with_trace(false), None)?;
                Ok((l1, l2, report))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<BestFit> = None;
        for (l1, l2, report) in solved {
            let err = mse(&report.beta_hat, &signal.truth);
            grid.push(GridPoint {
                loss: loss.name().to_string(),
                lambda1: l1,
                lambda2: l2,
                mse: err,
                terminated: report.terminated,
            });
            if best.as_ref().is_none_or(|b| err < b.mse) {
                best = Some(BestFit {
                    lambda1: l1,
                    lambda2: l2,
                    mse: err,
                    beta_hat: report.beta_hat,
                });
            }
        }
        fits.push(best.expect("non-empty λ-grid"));
    }
    let lad = fits.pop().expect("two losses");
    let quadratic = fits.pop().expect("two losses");
    Ok(Experiment4Result {
        truth: signal.truth,
        noisy: signal.noisy,
        quadratic,
        lad,
        grid,
    })
}
