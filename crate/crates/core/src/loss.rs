//! Per-coordinate convex losses and the exact one-dimensional minimizers
//! used for the γ-block of the doubly augmented Lagrangian.
//!
//! Every γ-update minimizes, for a single coordinate,
//!
//! ```text
//! h(γ) = F(γ, y) + λ₁|γ| + μ(γ − β) + (c/2)(γ − β)²
//! ```
//!
//! which is strongly convex because of the `c/2` term. Quadratic loss admits a
//! closed form, absolute deviation a finite candidate search, and anything
//! else goes through subgradient bisection.

use std::fmt;
use std::sync::Arc;

use crate::error::{FlsaError, Result};

/// Default transition point of the Huber loss.
pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

/// Bisection width used by the solver for losses without a closed-form update.
pub const GENERIC_UPDATE_TOL: f64 = 1e-13;

const MAX_BRACKET_EXPANSIONS: usize = 200;

/// `sign(x) · max(|x| − t, 0)`, the proximal map of `t|·|`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Subgradient interval of `|x|`.
#[inline]
fn abs_subgradient(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (1.0, 1.0)
    } else if x < 0.0 {
        (-1.0, -1.0)
    } else {
        (-1.0, 1.0)
    }
}

type EvalFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type SubgradFn = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// A user-supplied convex, coercive loss `F(value, observation)`.
///
/// `subgradient` must return the subdifferential interval `[lo, hi]` of
/// `F(·, y)` at the given value.
#[derive(Clone)]
pub struct CustomLoss {
    name: String,
    evaluate: Arc<EvalFn>,
    subgradient: Arc<SubgradFn>,
}

impl CustomLoss {
    pub fn new<E, S>(name: impl Into<String>, evaluate: E, subgradient: S) -> Self
    where
        E: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            evaluate: Arc::new(evaluate),
            subgradient: Arc::new(subgradient),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLoss").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Separable data-fit term `F(y, β) = Σ F_i(β_i, y_i)`.
#[derive(Debug, Clone)]
pub enum LossModel {
    /// `½ (y − β)²`
    Quadratic,
    /// `|y − β|`
    LeastAbsoluteDeviation,
    /// Quadratic within `delta` of the observation, linear outside.
    Huber { delta: f64 },
    Custom(CustomLoss),
}

impl LossModel {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(FlsaError::InvalidConfig(format!("huber delta must be positive, got {delta}")));
        }
        Ok(Self::Huber { delta })
    }

    /// Parses `"quadratic" | "lad" | "huber"`; `huber_delta` defaults to 1.0.
    pub fn from_name(name: &str, huber_delta: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "quadratic" => Ok(Self::Quadratic),
            "lad" => Ok(Self::LeastAbsoluteDeviation),
            "huber" => Self::huber(huber_delta.unwrap_or(DEFAULT_HUBER_DELTA)),
            other => Err(FlsaError::InvalidConfig(format!(
                "unknown loss '{other}' (expected quadratic, lad or huber)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Quadratic => "quadratic",
            Self::LeastAbsoluteDeviation => "lad",
            Self::Huber { .. } => "huber",
            Self::Custom(c) => c.name(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Self::Quadratic)
    }

    /// `F(value, y)`.
    pub fn evaluate(&self, value: f64, y: f64) -> f64 {
        let r = y - value;
        match self {
            Self::Quadratic => 0.5 * r * r,
            Self::LeastAbsoluteDeviation => r.abs(),
            Self::Huber { delta } => {
                if r.abs() <= *delta {
                    0.5 * r * r
                } else {
                    delta * (r.abs() - 0.5 * delta)
                }
            }
            Self::Custom(c) => (c.evaluate)(value, y),
        }
    }

    /// Subdifferential of `F(·, y)` at `value`, as an interval.
    pub fn subgradient(&self, value: f64, y: f64) -> (f64, f64) {
        match self {
            Self::Quadratic => {
                let g = value - y;
                (g, g)
            }
            Self::LeastAbsoluteDeviation => abs_subgradient(value - y),
            Self::Huber { delta } => {
                let g = (value - y).clamp(-delta, *delta);
                (g, g)
            }
            Self::Custom(c) => (c.subgradient)(value, y),
        }
    }

    /// Exact minimizer of the coordinate problem, dispatching to the
    /// closed form where one exists.
    pub fn gamma_update(&self, p: &CoordinateProblem, tol: f64) -> Result<f64> {
        match self {
            Self::Quadratic => Ok(quadratic_gamma_update(p)),
            Self::LeastAbsoluteDeviation => Ok(lad_gamma_update(p)),
            _ => generic_gamma_update(self, p, tol),
        }
    }
}

/// One γ-coordinate subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateProblem {
    pub y: f64,
    pub beta: f64,
    pub mu: f64,
    pub c: f64,
    pub lambda1: f64,
}

impl CoordinateProblem {
    pub fn new(y: f64, beta: f64, mu: f64, c: f64, lambda1: f64) -> Result<Self> {
        let p = Self { y, beta, mu, c, lambda1 };
        if !(y.is_finite() && beta.is_finite() && mu.is_finite() && c.is_finite() && lambda1.is_finite()) {
            return Err(FlsaError::InvalidInput(format!("non-finite coordinate problem {p:?}")));
        }
        if c <= 0.0 || lambda1 < 0.0 {
            return Err(FlsaError::InvalidConfig(format!("coordinate problem needs c > 0, lambda1 >= 0: {p:?}")));
        }
        Ok(p)
    }

    /// `F(γ, y) + λ₁|γ| + μ(γ − β) + (c/2)(γ − β)²`.
    pub fn objective(&self, loss: &LossModel, gamma: f64) -> f64 {
        let d = gamma - self.beta;
        loss.evaluate(gamma, self.y) + self.lambda1 * gamma.abs() + self.mu * d + 0.5 * self.c * d * d
    }

    fn subgradient(&self, loss: &LossModel, gamma: f64) -> (f64, f64) {
        let (flo, fhi) = loss.subgradient(gamma, self.y);
        let (alo, ahi) = abs_subgradient(gamma);
        let smooth = self.mu + self.c * (gamma - self.beta);
        (flo + self.lambda1 * alo + smooth, fhi + self.lambda1 * ahi + smooth)
    }
}

/// Closed-form γ-update for `F = ½(y − γ)²`.
pub fn quadratic_gamma_update(p: &CoordinateProblem) -> f64 {
    let denom = 1.0 + p.c;
    soft_threshold((p.y + p.c * p.beta - p.mu) / denom, p.lambda1 / denom)
}

/// γ-update for `F = |y − γ|` by enumerating the two kinks and the four
/// sign-pattern stationary points.
pub fn lad_gamma_update(p: &CoordinateProblem) -> f64 {
    let loss = LossModel::LeastAbsoluteDeviation;
    let mut best: f64 = 0.0;
    let mut best_val = p.objective(&loss, 0.0);
    let mut consider = |g: f64| {
        let v = p.objective(&loss, g);
        let better = v < best_val
            || (v == best_val && (g.abs() < best.abs() || (g.abs() == best.abs() && g < best)));
        if better {
            best = g;
            best_val = v;
        }
    };
    consider(p.y);
    for s_y in [-1.0, 1.0] {
        for s_g in [-1.0, 1.0] {
            let g = p.beta + (s_y - p.lambda1 * s_g - p.mu) / p.c;
            let in_region = g * s_g > 0.0 && (p.y - g) * s_y > 0.0;
            if in_region {
                consider(g);
            }
        }
    }
    best
}

/// γ-update for any convex, coercive loss by bracketing the zero of the
/// subgradient and bisecting to width `tol`.
pub fn generic_gamma_update(loss: &LossModel, p: &CoordinateProblem, tol: f64) -> Result<f64> {
    debug_assert!(tol > 0.0);
    let mut width = 1.0 + (p.y - p.beta).abs();
    let mut lo = p.beta - width;
    let mut hi = p.beta + width;
    let mut expansions = 0;

    loop {
        let (a, b) = p.subgradient(loss, lo);
        if a <= 0.0 && 0.0 <= b {
            return Ok(lo);
        }
        if b < 0.0 {
            break;
        }
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(FlsaError::BracketFailed { expansions: MAX_BRACKET_EXPANSIONS });
        }
        width *= 2.0;
        lo = p.beta - width;
    }
    width = 1.0 + (p.y - p.beta).abs();
    loop {
        let (a, b) = p.subgradient(loss, hi);
        if a <= 0.0 && 0.0 <= b {
            return Ok(hi);
        }
        if a > 0.0 {
            break;
        }
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(FlsaError::BracketFailed { expansions: MAX_BRACKET_EXPANSIONS });
        }
        width *= 2.0;
        hi = p.beta + width;
    }

    // invariant: sup ∂h(lo) < 0 < inf ∂h(hi)
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (a, b) = p.subgradient(loss, mid);
        if a <= 0.0 && 0.0 <= b {
            return Ok(mid);
        }
        if b < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
