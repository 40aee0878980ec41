//! Augmented Lagrangian engine for the fused lasso signal approximator
//!
//! ```text
//! minimize  Σ F(β_i, y_i) + λ₁ Σ |β_i| + λ₂ Σ |β_{i+1} − β_i|
//! ```
//!
//! The fused differences are split off as `θ_j = β_{j+1} − β_j` with
//! multipliers `ν`. In doubly augmented mode the loss and the λ₁ penalty are
//! moved onto a copy `γ = β` with multipliers `μ`, so that every block update
//! is either a soft-threshold, a one-dimensional convex problem, or a
//! tridiagonal solve. Both quadratic penalties share the weight `c/2`.
//!
//! One outer iteration runs `inner_t` block sweeps (γ, then β, then θ) and a
//! single multiplier step. `inner_t = 1` is plain alternating minimization;
//! larger values approach the exact joint minimization over the primal blocks.
//!
//! Storage is 0-based: `theta[j]` and `nu[j]` belong to the pair
//! `(beta[j], beta[j + 1])`.

use serde::{Deserialize, Serialize};

use crate::error::{FlsaError, Result};
use crate::linalg::ThomasScratch;
use crate::loss::{soft_threshold, CoordinateProblem, LossModel, GENERIC_UPDATE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationMode {
    /// Only the fused differences are split off; quadratic loss with λ₁ = 0.
    SinglyAugmented,
    DoublyAugmented,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmConfig {
    /// Penalty weight shared by both augmentation terms.
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Stop once `‖Δν‖₂ + ‖Δμ‖₂` falls below this (and the primal step
    /// `c(‖Δβ‖₂ + ‖Δθ‖₂)` does too, see [`SolveReport::final_primal_step`]).
    pub tol: f64,
    pub max_outer_iters: usize,
    /// Block sweeps per multiplier update.
    pub inner_t: usize,
    pub mode: AugmentationMode,
    /// Early exit from the inner loop when a sweep moves no coordinate by more than this.
    pub inner_tol: f64,
    pub record_trace: bool,
    /// Bisection width for γ-updates of losses without a closed form.
    pub gamma_tol: f64,
}

impl Default for AlmConfig {
    fn default() -> Self {
        Self {
            c: 5.0,
            lambda1: 0.0,
            lambda2: 0.0,
            tol: 1e-10,
            max_outer_iters: 100_000,
            inner_t: 1,
            mode: AugmentationMode::DoublyAugmented,
            inner_tol: 1e-12,
            record_trace: true,
            gamma_tol: GENERIC_UPDATE_TOL,
        }
    }
}

impl AlmConfig {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            ..Self::default()
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer_iters(mut self, max: usize) -> Self {
        self.max_outer_iters = max;
        self
    }

    pub fn with_inner_t(mut self, inner_t: usize) -> Self {
        self.inner_t = inner_t;
        self
    }

    pub fn with_mode(mut self, mode: AugmentationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn validate(&self, loss: &LossModel) -> Result<()> {
        let bad = |msg: String| Err(FlsaError::InvalidConfig(msg));
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad(format!("c must be positive and finite, got {}", self.c));
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return bad(format!("lambda1 must be nonnegative, got {}", self.lambda1));
        }
        if !(self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return bad(format!("lambda2 must be nonnegative, got {}", self.lambda2));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.inner_tol > 0.0) || !(self.gamma_tol > 0.0) {
            return bad("inner_tol and gamma_tol must be positive".into());
        }
        if self.max_outer_iters == 0 || self.inner_t == 0 {
            return bad("max_outer_iters and inner_t must be at least 1".into());
        }
        if self.mode == AugmentationMode::SinglyAugmented && (self.lambda1 != 0.0 || !loss.is_quadratic()) {
            return bad("singly augmented mode needs quadratic loss and lambda1 = 0".into());
        }
        Ok(())
    }
}

/// Primal blocks `(β, θ, γ)` and multipliers `(μ, ν)`.
///
/// `gamma` and `mu` are empty in singly augmented mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub outer_iter: usize,
}

impl SolverState {
    /// `β = y`, everything else zero.
    pub fn from_observations(y: &[f64], mode: AugmentationMode) -> Self {
        Self::from_beta(y.to_vec(), mode)
    }

    /// Given `β⁰`, everything else zero.
    pub fn from_beta(beta: Vec<f64>, mode: AugmentationMode) -> Self {
        let n = beta.len();
        let doubly = if mode == AugmentationMode::DoublyAugmented { n } else { 0 };
        Self {
            beta,
            theta: vec![0.0; n.saturating_sub(1)],
            gamma: vec![0.0; doubly],
            mu: vec![0.0; doubly],
            nu: vec![0.0; n.saturating_sub(1)],
            outer_iter: 0,
        }
    }

    fn check(&self, n: usize, mode: AugmentationMode) -> Result<()> {
        let m = n.saturating_sub(1);
        let doubly = if mode == AugmentationMode::DoublyAugmented { n } else { 0 };
        if self.beta.len() != n || self.theta.len() != m || self.nu.len() != m {
            return Err(FlsaError::InvalidInput(format!(
                "initial state lengths (beta={}, theta={}, nu={}) do not match n={n}",
                self.beta.len(),
                self.theta.len(),
                self.nu.len()
            )));
        }
        if self.gamma.len() != doubly || self.mu.len() != doubly {
            return Err(FlsaError::InvalidInput(format!(
                "initial state gamma/mu must have length {doubly} in {mode:?} mode"
            )));
        }
        if !self.is_finite() {
            return Err(FlsaError::InvalidInput("initial state is not finite".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.beta, &self.theta, &self.gamma, &self.mu, &self.nu]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// `‖θ − Δβ‖₂ + ‖γ − β‖₂`; the second term is absent without γ.
    pub fn primal_residual(&self) -> f64 {
        let fused: f64 = self
            .theta
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let r = t - (self.beta[j + 1] - self.beta[j]);
                r * r
            })
            .sum();
        let copy: f64 = self.gamma.iter().zip(&self.beta).map(|(g, b)| (g - b) * (g - b)).sum();
        fused.sqrt() + copy.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub beta_hat: Vec<f64>,
    /// Objective at `β^k`, one entry per outer iteration.
    pub objective_trace: Vec<f64>,
    /// `‖ν^k − ν^{k−1}‖₂ + ‖μ^k − μ^{k−1}‖₂` per outer iteration.
    pub dual_residual_trace: Vec<f64>,
    pub primal_residual_trace: Vec<f64>,
    pub iterations: usize,
    /// Block sweeps actually performed, summed over outer iterations.
    pub inner_sweeps: usize,
    pub terminated: Termination,
    pub final_objective: f64,
    pub final_dual_residual: f64,
    pub final_primal_residual: f64,
    /// `c(‖β^k − β^{k−1}‖₂ + ‖θ^k − θ^{k−1}‖₂)` at the last iteration. The
    /// multipliers can stall for an iteration while β and θ are still
    /// moving (θ lands exactly on Δβ), so convergence also requires this
    /// to be below `tol`.
    pub final_primal_step: f64,
    pub final_state: SolverState,
}

/// `Σ F(β_i, y_i) + λ₁ Σ|β_i| + λ₂ Σ|β_{i+1} − β_i|`.
pub fn objective(beta: &[f64], y: &[f64], loss: &LossModel, lambda1: f64, lambda2: f64) -> f64 {
    assert_eq!(beta.len(), y.len(), "beta and y must have equal length");
    let fit: f64 = beta.iter().zip(y).map(|(&b, &yi)| loss.evaluate(b, yi)).sum();
    let sparsity: f64 = beta.iter().map(|b| b.abs()).sum();
    let fusion: f64 = beta.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    fit + lambda1 * sparsity + lambda2 * fusion
}

/// Soft-thresholds `Δβ − ν/c` at `λ₂/c`.
pub fn theta_update(beta: &[f64], nu: &[f64], c: f64, lambda2: f64) -> Vec<f64> {
    let mut theta = vec![0.0; nu.len()];
    theta_update_into(beta, nu, c, lambda2, &mut theta);
    theta
}

fn theta_update_into(beta: &[f64], nu: &[f64], c: f64, lambda2: f64, theta: &mut [f64]) {
    let t = lambda2 / c;
    for (j, th) in theta.iter_mut().enumerate() {
        *th = soft_threshold(beta[j + 1] - beta[j] - nu[j] / c, t);
    }
}

/// `c(θ_{i−1} − θ_i) + (ν_{i−1} − ν_i)` with out-of-range entries taken as 0.
#[inline]
fn fused_rhs(theta: &[f64], nu: &[f64], c: f64, i: usize) -> f64 {
    let m = theta.len();
    let (tp, np) = if i > 0 { (theta[i - 1], nu[i - 1]) } else { (0.0, 0.0) };
    let (tn, nn) = if i < m { (theta[i], nu[i]) } else { (0.0, 0.0) };
    c * (tp - tn) + (np - nn)
}

/// Diagonals of the β-system: `base + c·(number of neighbours)` on the
/// main diagonal and `−c` off it.
fn beta_system_diagonals(n: usize, base: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
    let main = (0..n)
        .map(|i| {
            let neighbours = usize::from(i > 0) + usize::from(i + 1 < n);
            base + c * neighbours as f64
        })
        .collect();
    (main, vec![-c; n.saturating_sub(1)])
}

/// Exact minimizer over β of the doubly augmented Lagrangian.
pub fn beta_update_doubly(gamma: &[f64], theta: &[f64], mu: &[f64], nu: &[f64], c: f64) -> Result<Vec<f64>> {
    let n = gamma.len();
    let (main, off) = beta_system_diagonals(n, c, c);
    let rhs: Vec<f64> = (0..n).map(|i| c * gamma[i] + mu[i] + fused_rhs(theta, nu, c, i)).collect();
    let mut out = vec![0.0; n];
    ThomasScratch::with_capacity(n).solve_into(&off, &main, &off, &rhs, &mut out)?;
    Ok(out)
}

/// Exact minimizer over β of the singly augmented Lagrangian with
/// quadratic loss and λ₁ = 0.
pub fn beta_update_singly_quadratic(y: &[f64], theta: &[f64], nu: &[f64], c: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let (main, off) = beta_system_diagonals(n, 1.0, c);
    let rhs: Vec<f64> = (0..n).map(|i| y[i] + fused_rhs(theta, nu, c, i)).collect();
    let mut out = vec![0.0; n];
    ThomasScratch::with_capacity(n).solve_into(&off, &main, &off, &rhs, &mut out)?;
    Ok(out)
}

/// Multiplier ascent step. Returns `‖Δν‖₂ + ‖Δμ‖₂`.
pub fn dual_update(state: &mut SolverState, c: f64) -> f64 {
    let mut dnu = 0.0;
    for (j, nu) in state.nu.iter_mut().enumerate() {
        let step = c * (state.theta[j] - (state.beta[j + 1] - state.beta[j]));
        *nu += step;
        dnu += step * step;
    }
    let mut dmu = 0.0;
    for ((mu, g), b) in state.mu.iter_mut().zip(&state.gamma).zip(&state.beta) {
        let step = c * (g - b);
        *mu += step;
        dmu += step * step;
    }
    dnu.sqrt() + dmu.sqrt()
}

/// Runs the solver from `init` (default: `β = y`, all else zero).
pub fn solve(y: &[f64], loss: &LossModel, config: &AlmConfig, init: Option<SolverState>) -> Result<SolveReport> {
    solve_with_observer(y, loss, config, init, |_| {})
}

/// Like [`solve`], calling `observer` with the state after every outer iteration.
pub fn solve_with_observer<O>(
    y: &[f64],
    loss: &LossModel,
    config: &AlmConfig,
    init: Option<SolverState>,
    mut observer: O,
) -> Result<SolveReport>
where
    O: FnMut(&SolverState),
{
    config.validate(loss)?;
    let n = y.len();
    if n == 0 {
        return Err(FlsaError::InvalidInput("need at least one observation".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FlsaError::InvalidInput("observations must be finite".into()));
    }
    let state = match init {
        Some(s) => {
            s.check(n, config.mode)?;
            s
        }
        None => SolverState::from_observations(y, config.mode),
    };
    Engine::new(y, loss, config, state).run(&mut observer)
}

struct Engine<'a> {
    y: &'a [f64],
    loss: &'a LossModel,
    config: &'a AlmConfig,
    state: SolverState,
    main: Vec<f64>,
    off: Vec<f64>,
    rhs: Vec<f64>,
    scratch: ThomasScratch,
    prev: Vec<f64>,
    prev_outer: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(y: &'a [f64], loss: &'a LossModel, config: &'a AlmConfig, state: SolverState) -> Self {
        let n = y.len();
        let base = match config.mode {
            AugmentationMode::SinglyAugmented => 1.0,
            AugmentationMode::DoublyAugmented => config.c,
        };
        let (main, off) = beta_system_diagonals(n, base, config.c);
        Self {
            y,
            loss,
            config,
            state,
            main,
            off,
            rhs: vec![0.0; n],
            scratch: ThomasScratch::with_capacity(n),
            prev: Vec::new(),
            prev_outer: Vec::new(),
        }
    }

    fn gamma_step(&mut self) -> Result<()> {
        let s = &mut self.state;
        for i in 0..self.y.len() {
            let p = CoordinateProblem {
                y: self.y[i],
                beta: s.beta[i],
                mu: s.mu[i],
                c: self.config.c,
                lambda1: self.config.lambda1,
            };
            s.gamma[i] = self.loss.gamma_update(&p, self.config.gamma_tol)?;
        }
        Ok(())
    }

    fn beta_step(&mut self) -> Result<()> {
        let c = self.config.c;
        let s = &self.state;
        for i in 0..self.y.len() {
            let local = match self.config.mode {
                AugmentationMode::SinglyAugmented => self.y[i],
                AugmentationMode::DoublyAugmented => c * s.gamma[i] + s.mu[i],
            };
            self.rhs[i] = local + fused_rhs(&s.theta, &s.nu, c, i);
        }
        if !self.rhs.iter().all(|v| v.is_finite()) {
            return Err(FlsaError::Diverged {
                iteration: s.outer_iter + 1,
            });
        }
        self.scratch
            .solve_into(&self.off, &self.main, &self.off, &self.rhs, &mut self.state.beta)
    }

    fn sweep(&mut self) -> Result<()> {
        if self.config.mode == AugmentationMode::DoublyAugmented {
            self.gamma_step()?;
        }
        self.beta_step()?;
        let s = &mut self.state;
        theta_update_into(&s.beta, &s.nu, self.config.c, self.config.lambda2, &mut s.theta);
        Ok(())
    }

    fn snapshot(&mut self) {
        let s = &self.state;
        self.prev.clear();
        self.prev.extend_from_slice(&s.gamma);
        self.prev.extend_from_slice(&s.beta);
        self.prev.extend_from_slice(&s.theta);
    }

    fn max_change_since_snapshot(&self) -> f64 {
        let s = &self.state;
        s.gamma
            .iter()
            .chain(&s.beta)
            .chain(&s.theta)
            .zip(&self.prev)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Stores `(β, θ)` for the primal-step check.
    fn remember_outer(&mut self) {
        self.prev_outer.clear();
        self.prev_outer.extend_from_slice(&self.state.beta);
        self.prev_outer.extend_from_slice(&self.state.theta);
    }

    fn primal_step(&self) -> f64 {
        let n = self.state.beta.len();
        let norm = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        self.config.c * (norm(&self.state.beta, &self.prev_outer[..n]) + norm(&self.state.theta, &self.prev_outer[n..]))
    }

    fn run<O: FnMut(&SolverState)>(mut self, observer: &mut O) -> Result<SolveReport> {
        let cfg = self.config;
        let capacity = if cfg.record_trace { cfg.max_outer_iters.min(4096) } else { 0 };
        let mut objective_trace = Vec::with_capacity(capacity);
        let mut dual_residual_trace = Vec::with_capacity(capacity);
        let mut primal_residual_trace = Vec::with_capacity(capacity);
        let mut inner_sweeps = 0;
        let mut terminated = Termination::MaxIters;
        let mut dual_residual = f64::INFINITY;
        let mut primal_residual = self.state.primal_residual();
        let mut primal_step = f64::INFINITY;

        for _ in 0..cfg.max_outer_iters {
            self.remember_outer();
            for t in 0..cfg.inner_t {
                let early_exit = cfg.inner_t > 1;
                if early_exit {
                    self.snapshot();
                }
                self.sweep()?;
                inner_sweeps += 1;
                if early_exit && t + 1 < cfg.inner_t && self.max_change_since_snapshot() < cfg.inner_tol {
                    break;
                }
            }
            primal_residual = self.state.primal_residual();
            primal_step = self.primal_step();
            dual_residual = dual_update(&mut self.state, cfg.c);
            self.state.outer_iter += 1;

            if !self.state.is_finite() || !dual_residual.is_finite() {
                return Err(FlsaError::Diverged {
                    iteration: self.state.outer_iter,
                });
            }
            if cfg.record_trace {
                objective_trace.push(objective(&self.state.beta, self.y, self.loss, cfg.lambda1, cfg.lambda2));
                dual_residual_trace.push(dual_residual);
                primal_residual_trace.push(primal_residual);
            }
            observer(&self.state);
            if dual_residual < cfg.tol && primal_step < cfg.tol {
                terminated = Termination::Converged;
                break;
            }
        }

        let final_objective = objective(&self.state.beta, self.y, self.loss, cfg.lambda1, cfg.lambda2);
        Ok(SolveReport {
            beta_hat: self.state.beta.clone(),
            objective_trace,
            dual_residual_trace,
            primal_residual_trace,
            iterations: self.state.outer_iter,
            inner_sweeps,
            terminated,
            final_objective,
            final_dual_residual: dual_residual,
            final_primal_residual: primal_residual,
            final_primal_step: primal_step,
            final_state: self.state,
        })
    }
}

/// Quadratic-loss shortcut for λ₁ > 0: solve with λ₁ = 0, then soft-threshold
/// every coordinate at λ₁.
pub fn fuse_then_threshold(y: &[f64], lambda1: f64, lambda2: f64, config: &AlmConfig) -> Result<Vec<f64>> {
    if !(lambda1.is_finite() && lambda1 >= 0.0) {
        return Err(FlsaError::InvalidConfig(format!("lambda1 must be nonnegative, got {lambda1}")));
    }
    let fused_config = AlmConfig {
        lambda1: 0.0,
        lambda2,
        ..config.clone()
    };
    let report = solve(y, &LossModel::Quadratic, &fused_config, None)?;
    Ok(report.beta_hat.into_iter().map(|b| soft_threshold(b, lambda1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::grid_minimize_1d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // central differences are exact on quadratics; a wider step keeps the
    // cancellation error of O(10)-sized Lagrangian terms below 1e-10
    const FD_STEP: f64 = 1e-4;

    /// β-dependent terms of the augmented Lagrangian that involve `beta[i]`,
    /// written out term by term.
    fn local_lagrangian(
        i: usize,
        beta: &[f64],
        y: Option<&[f64]>,
        gamma: &[f64],
        theta: &[f64],
        mu: &[f64],
        nu: &[f64],
        c: f64,
    ) -> f64 {
        let mut v = 0.0;
        match y {
            Some(y) => v += 0.5 * (y[i] - beta[i]).powi(2),
            None => {
                let d = gamma[i] - beta[i];
                v += mu[i] * d + 0.5 * c * d * d;
            }
        }
        for j in [i.wrapping_sub(1), i] {
            if j < theta.len() {
                let r = theta[j] - beta[j + 1] + beta[j];
                v += nu[j] * r + 0.5 * c * r * r;
            }
        }
        v
    }

    #[allow(clippy::too_many_arguments)]
    fn fd_gradient_max(
        beta: &[f64],
        y: Option<&[f64]>,
        gamma: &[f64],
        theta: &[f64],
        mu: &[f64],
        nu: &[f64],
        c: f64,
        h: f64,
    ) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..beta.len() {
            let mut plus = beta.to_vec();
            let mut minus = beta.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let g = (local_lagrangian(i, &plus, y, gamma, theta, mu, nu, c)
                - local_lagrangian(i, &minus, y, gamma, theta, mu, nu, c))
                / (2.0 * h);
            worst = worst.max(g.abs());
        }
        worst
    }

    fn randv(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn objective_examples() {
        let q = LossModel::Quadratic;
        assert_eq!(objective(&[1.0; 3], &[1.0; 3], &q, 0.0, 1.0), 0.0);
        assert_eq!(objective(&[0.0, 0.0], &[1.0, -1.0], &q, 1.0, 1.0), 1.0);
        // |1|+|2|+|4| = 7 loss, 0.5*7 sparsity, 2*(1+2) fusion
        let lad = LossModel::LeastAbsoluteDeviation;
        assert_eq!(objective(&[1.0, 2.0, 4.0], &[0.0; 3], &lad, 0.5, 2.0), 16.5);
    }

    #[test]
    fn theta_update_examples() {
        assert_eq!(theta_update(&[0.0, 1.0], &[0.0], 1.0, 0.5), vec![0.5]);
        assert_eq!(theta_update(&[3.0; 3], &[0.0, 0.0], 0.7, 1.0), vec![0.0, 0.0]);

        let (beta, nu, c, l2) = ([0.0, 2.0, -1.0], [1.0, -2.0], 2.0, 1.0);
        let got = theta_update(&beta, &nu, c, l2);
        // frozen from the grid oracle on λ₂|θ| + ν(θ − Δ) + (c/2)(θ − Δ)²
        let expected = [1.0, -1.5];
        for j in 0..2 {
            let delta = beta[j + 1] - beta[j];
            let f = |t: f64| l2 * t.abs() + nu[j] * (t - delta) + 0.5 * c * (t - delta).powi(2);
            let oracle = grid_minimize_1d(f, -10.0, 10.0, 1e-8);
            assert!((oracle - expected[j]).abs() < 1e-6, "oracle {oracle}");
            assert!((got[j] - expected[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_update_with_zero_lambda2_is_plain_shift() {
        let th = theta_update(&[1.0, 4.0, 2.0], &[0.5, -1.0], 2.0, 0.0);
        assert_eq!(th, vec![3.0 - 0.25, -2.0 + 0.5]);
    }

    #[test]
    fn beta_doubly_constant_consensus() {
        for c in [0.1, 1.0, 5.0] {
            let beta = beta_update_doubly(&[1.7; 6], &[0.0; 5], &[0.0; 6], &[0.0; 5], c).unwrap();
            for b in beta {
                assert!((b - 1.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_doubly_two_by_two() {
        // (2,-1;-1,2) β = (-2, 4)  ->  β = (0, 2)
        let (gamma, theta, mu, nu) = ([0.0, 2.0], [2.0], [0.0, 0.0], [0.0]);
        let beta = beta_update_doubly(&gamma, &theta, &mu, &nu, 1.0).unwrap();
        assert!(beta[0].abs() < 1e-12 && (beta[1] - 2.0).abs() < 1e-12, "{beta:?}");
        assert!(fd_gradient_max(&beta, None, &gamma, &theta, &mu, &nu, 1.0, 1e-6) <= 1e-8);
    }

    #[test]
    fn beta_doubly_random_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = 6;
            let c = rng.random_range(0.1..10.0);
            let (gamma, mu) = (randv(&mut rng, n, 3.0), randv(&mut rng, n, 2.0));
            let (theta, nu) = (randv(&mut rng, n - 1, 3.0), randv(&mut rng, n - 1, 2.0));
            let beta = beta_update_doubly(&gamma, &theta, &mu, &nu, c).unwrap();
            let g = fd_gradient_max(&beta, None, &gamma, &theta, &mu, &nu, c, FD_STEP);
            assert!(g <= 1e-9, "{g}");
        }
    }

    #[test]
    fn beta_singly_examples() {
        let beta = beta_update_singly_quadratic(&[2.5; 4], &[0.0; 3], &[0.0; 3], 3.0).unwrap();
        for b in beta {
            assert!((b - 2.5).abs() < 1e-12);
        }
        // (2,-1;-1,2) β = (0, 3)  ->  β = (1, 2)
        let beta = beta_update_singly_quadratic(&[0.0, 3.0], &[0.0], &[0.0], 1.0).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-12 && (beta[1] - 2.0).abs() < 1e-12);
        let y = [0.0, 3.0];
        assert!(fd_gradient_max(&beta, Some(&y), &[], &[0.0], &[], &[0.0], 1.0, 1e-6) <= 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let n = 5;
            let c = rng.random_range(0.1..10.0);
            let y = randv(&mut rng, n, 4.0);
            let (theta, nu) = (randv(&mut rng, n - 1, 3.0), randv(&mut rng, n - 1, 2.0));
            let beta = beta_update_singly_quadratic(&y, &theta, &nu, c).unwrap();
            let g = fd_gradient_max(&beta, Some(&y), &[], &theta, &[], &nu, c, FD_STEP);
            assert!(g <= 1e-9, "{g}");
        }
    }

    #[test]
    fn dual_update_examples() {
        let mut s = SolverState::from_beta(vec![0.0, 0.0], AugmentationMode::SinglyAugmented);
        s.theta = vec![1.0];
        let r = dual_update(&mut s, 2.0);
        assert_eq!(s.nu, vec![2.0]);
        assert_eq!(r, 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let beta = randv(&mut rng, 5, 2.0);
        let mut s = SolverState::from_beta(beta.clone(), AugmentationMode::DoublyAugmented);
        s.gamma = beta.clone();
        s.theta = beta.windows(2).map(|w| w[1] - w[0]).collect();
        s.mu = randv(&mut rng, 5, 1.0);
        s.nu = randv(&mut rng, 4, 1.0);
        let before = s.clone();
        assert_eq!(dual_update(&mut s, 3.0), 0.0);
        assert_eq!(s, before);
    }

    #[test]
    fn dual_update_idempotent_at_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = SolverState::from_beta(randv(&mut rng, 6, 2.0), AugmentationMode::DoublyAugmented);
        s.gamma = randv(&mut rng, 6, 2.0);
        s.theta = randv(&mut rng, 5, 2.0);
        dual_update(&mut s, 1.5);
        // make the primal feasible, then two steps leave the duals fixed
        s.gamma = s.beta.clone();
        s.theta = s.beta.windows(2).map(|w| w[1] - w[0]).collect();
        let (mu, nu) = (s.mu.clone(), s.nu.clone());
        dual_update(&mut s, 1.5);
        dual_update(&mut s, 1.5);
        assert_eq!((s.mu, s.nu), (mu, nu));
    }

    #[test]
    fn solve_constant_signal() {
        let y = vec![2.0; 10];
        let r = solve(&y, &LossModel::Quadratic, &AlmConfig::new(0.0, 1.0), None).unwrap();
        assert_eq!(r.terminated, Termination::Converged);
        for b in &r.beta_hat {
            assert!((b - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn solve_two_points_separated_and_fused() {
        // closed forms: |y2 - y1| > 2λ₂ shrinks each end by λ₂, otherwise both take the mean
        for mode in [AugmentationMode::DoublyAugmented, AugmentationMode::SinglyAugmented] {
            let cfg = AlmConfig::new(0.0, 1.0).with_mode(mode);
            let r = solve(&[0.0, 4.0], &LossModel::Quadratic, &cfg, None).unwrap();
            assert!((r.beta_hat[0] - 1.0).abs() < 1e-5 && (r.beta_hat[1] - 3.0).abs() < 1e-5, "{mode:?} {:?}", r.beta_hat);
            let cfg = AlmConfig::new(0.0, 3.0).with_mode(mode);
            let r = solve(&[0.0, 4.0], &LossModel::Quadratic, &cfg, None).unwrap();
            assert!((r.beta_hat[0] - 2.0).abs() < 1e-5 && (r.beta_hat[1] - 2.0).abs() < 1e-5, "{mode:?} {:?}", r.beta_hat);
        }
    }

    #[test]
    fn two_point_closed_forms_agree_with_grid() {
        // 2-D brute force over a 0.01 grid, then 0.0005 refinement
        let q = LossModel::Quadratic;
        for (l2, want) in [(1.0, [1.0, 3.0]), (3.0, [2.0, 2.0])] {
            let f = |b: [f64; 2]| objective(&b, &[0.0, 4.0], &q, 0.0, l2);
            let mut best = ([0.0, 0.0], f64::INFINITY);
            for i in 0..=500 {
                for k in 0..=500 {
                    let b = [i as f64 * 0.01, k as f64 * 0.01];
                    if f(b) < best.1 {
                        best = (b, f(b));
                    }
                }
            }
            assert!((best.0[0] - want[0]).abs() <= 0.01 && (best.0[1] - want[1]).abs() <= 0.01);
            assert!(f(want) <= best.1 + 1e-12);
        }
    }

    #[test]
    fn singly_mode_rejects_lambda1_and_other_losses() {
        let cfg = AlmConfig::new(0.5, 1.0).with_mode(AugmentationMode::SinglyAugmented);
        assert!(solve(&[1.0, 2.0], &LossModel::Quadratic, &cfg, None).is_err());
        let cfg = AlmConfig::new(0.0, 1.0).with_mode(AugmentationMode::SinglyAugmented);
        assert!(solve(&[1.0, 2.0], &LossModel::LeastAbsoluteDeviation, &cfg, None).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let q = LossModel::Quadratic;
        for cfg in [
            AlmConfig::new(0.0, 1.0).with_c(0.0),
            AlmConfig::new(-1.0, 1.0),
            AlmConfig::new(0.0, f64::NAN),
            AlmConfig::new(0.0, 1.0).with_tol(0.0),
            AlmConfig::new(0.0, 1.0).with_inner_t(0),
            AlmConfig::new(0.0, 1.0).with_max_outer_iters(0),
        ] {
            assert!(matches!(solve(&[1.0, 2.0], &q, &cfg, None), Err(FlsaError::InvalidConfig(_))));
        }
        assert!(solve(&[], &q, &AlmConfig::new(0.0, 1.0), None).is_err());
        assert!(solve(&[1.0, f64::INFINITY], &q, &AlmConfig::new(0.0, 1.0), None).is_err());
        let bad_init = SolverState::from_beta(vec![0.0; 3], AugmentationMode::DoublyAugmented);
        assert!(solve(&[1.0, 2.0], &q, &AlmConfig::new(0.0, 1.0), Some(bad_init)).is_err());
    }

    #[test]
    fn single_observation() {
        let r = solve(&[3.0], &LossModel::Quadratic, &AlmConfig::new(1.0, 2.0), None).unwrap();
        assert_eq!(r.terminated, Termination::Converged);
        assert!((r.beta_hat[0] - 2.0).abs() < 1e-8);
        let r = solve(&[3.0], &LossModel::LeastAbsoluteDeviation, &AlmConfig::new(0.5, 2.0), None).unwrap();
        assert!((r.beta_hat[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn max_iters_reported_not_raised() {
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let cfg = AlmConfig::new(0.0, 0.5).with_max_outer_iters(3);
        let r = solve(&y, &LossModel::Quadratic, &cfg, None).unwrap();
        assert_eq!(r.terminated, Termination::MaxIters);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.objective_trace.len(), 3);
        assert_eq!(r.dual_residual_trace.len(), 3);
        assert_eq!(r.primal_residual_trace.len(), 3);
    }

    #[test]
    fn trace_can_be_disabled() {
        let y = [0.0, 1.0, 5.0, 5.2];
        let r = solve(&y, &LossModel::Quadratic, &AlmConfig::new(0.0, 0.5).with_trace(false), None).unwrap();
        assert!(r.objective_trace.is_empty() && r.dual_residual_trace.is_empty());
        assert!(r.iterations > 0);
    }

    #[test]
    fn overflow_is_reported_as_divergence() {
        let y = [1e308, -1e308, 1e308];
        let err = solve(&y, &LossModel::Quadratic, &AlmConfig::new(0.0, 1.0), None).unwrap_err();
        assert!(matches!(err, FlsaError::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn custom_loss_without_minimizer_fails() {
        use crate::loss::CustomLoss;
        // subgradient interval that never contains zero makes bracketing fail
        let loss = LossModel::Custom(CustomLoss::new("broken", |g, _| -g, |_, _| (-1.0, -1.0)));
        let cfg = AlmConfig::new(0.0, 1.0).with_c(1e-300);
        let err = solve(&[0.0, 1.0], &loss, &cfg, None).unwrap_err();
        assert!(matches!(err, FlsaError::BracketFailed { .. }), "{err:?}");
    }

    #[test]
    fn observer_sees_every_iteration() {
        let y = [0.0, 0.3, 2.0, 2.1, 0.1];
        let mut seen = Vec::new();
        let r = solve_with_observer(&y, &LossModel::Quadratic, &AlmConfig::new(0.0, 0.3), None, |s| {
            seen.push(s.outer_iter)
        })
        .unwrap();
        assert_eq!(seen, (1..=r.iterations).collect::<Vec<_>>());
    }

    #[test]
    fn fuse_then_threshold_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = randv(&mut rng, 15, 3.0);
        let cfg = AlmConfig::new(0.0, 0.8);
        let direct = solve(&y, &LossModel::Quadratic, &cfg, None).unwrap().beta_hat;
        assert_eq!(fuse_then_threshold(&y, 0.0, 0.8, &cfg).unwrap(), direct);

        let b = fuse_then_threshold(&[2.0; 8], 2.0, 1.0, &cfg).unwrap();
        assert!(b.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn fuse_then_threshold_matches_doubly_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = (0..20).map(|i| if i < 8 { 1.5 } else { -0.5 } + rng.random_range(-0.5..0.5)).collect();
        let (l1, l2) = (0.4, 0.7);
        let cfg = AlmConfig::new(l1, l2);
        let shortcut = fuse_then_threshold(&y, l1, l2, &cfg).unwrap();
        let direct = solve(&y, &LossModel::Quadratic, &cfg, None).unwrap().beta_hat;
        for (a, b) in shortcut.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
