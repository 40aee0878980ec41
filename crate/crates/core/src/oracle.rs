//! Slow reference minimizers used to check the solver from the outside.
//!
//! Nothing here shares code paths with the augmented Lagrangian engine
//! beyond the loss definitions and the objective itself.

use crate::loss::LossModel;
use crate::solver::objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub grid_points: usize,
    pub subgrad_iters: usize,
    /// Step size at iteration `k` is `subgrad_step0 / sqrt(k)`.
    pub subgrad_step0: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_points: 10_001,
            subgrad_iters: 200_000,
            subgrad_step0: 1.0,
        }
    }
}

/// Minimizes a convex `f` on `[lo, hi]`: evaluates a uniform grid of
/// `OracleConfig::default().grid_points` points, then refines around the
/// best grid point by golden-section search down to `resolution`.
pub fn grid_minimize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, resolution: f64) -> f64 {
    grid_minimize_1d_with(f, lo, hi, resolution, OracleConfig::default().grid_points)
}

pub fn grid_minimize_1d_with<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, resolution: f64, grid_points: usize) -> f64 {
    assert!(lo < hi, "grid_minimize_1d needs lo < hi");
    assert!(grid_points >= 2);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let at = |k: usize| if k + 1 == grid_points { hi } else { lo + step * k as f64 };

    let mut best_k = 0;
    let mut best_v = f(lo);
    for k in 1..grid_points {
        let v = f(at(k));
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }

    // by convexity the minimizer lies within one grid step of the best point
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(grid_points - 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > resolution {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    // the refinement can only improve on the grid point
    if f(mid) <= best_v {
        mid
    } else {
        at(best_k)
    }
}

/// Picks 0 when the subdifferential interval contains it, else the
/// endpoint nearest to 0.
fn pick(interval: (f64, f64)) -> f64 {
    let (a, b) = interval;
    if a <= 0.0 && 0.0 <= b {
        0.0
    } else if a > 0.0 {
        a
    } else {
        b
    }
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient descent on the full objective with steps `step0/√k`,
/// started from `y`. Returns the best iterate seen.
pub fn subgradient_solve(y: &[f64], loss: &LossModel, lambda1: f64, lambda2: f64, cfg: &OracleConfig) -> Vec<f64> {
    let n = y.len();
    let mut beta = y.to_vec();
    let mut best = beta.clone();
    let mut best_val = objective(&beta, y, loss, lambda1, lambda2);
    let mut grad = vec![0.0; n];

    for k in 1..=cfg.subgrad_iters {
        for i in 0..n {
            grad[i] = pick(loss.subgradient(beta[i], y[i])) + lambda1 * sign_or_zero(beta[i]);
        }
        for j in 0..n.saturating_sub(1) {
            let s = lambda2 * sign_or_zero(beta[j + 1] - beta[j]);
            grad[j + 1] += s;
            grad[j] -= s;
        }
        if grad.iter().all(|&g| g == 0.0) {
            break;
        }
        let step = cfg.subgrad_step0 / (k as f64).sqrt();
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= step * g;
        }
        let val = objective(&beta, y, loss, lambda1, lambda2);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&beta);
        }
    }
    best
}

/// Exact minimizer by dynamic programming over the chain.
///
/// With `f_1(b) = F_1(b) + λ₁|b|` and
/// `f_i(b) = F_i(b) + λ₁|b| + min_{b'} [f_{i−1}(b') + λ₂|b − b'|]`,
/// the subdifferential of `f_i` is `∂F_i(b) + λ₁∂|b| + clamp(∂f_{i−1}(b), ±λ₂)`.
/// The last coordinate is the zero of `∂f_n`, found by bisection, and the
/// rest follow by backtracking: `b_{i−1} = b_i` when `∂f_{i−1}(b_i)` meets
/// `[−λ₂, λ₂]`, otherwise the point where `∂f_{i−1}` crosses `±λ₂`.
///
/// Each evaluation of `∂f_i` walks the chain, so the cost is
/// `O(n² · bisection steps)`. Exact up to floating-point bisection for any
/// convex loss with a correct subgradient interval.
pub fn chain_dp_solve(y: &[f64], loss: &LossModel, lambda1: f64, lambda2: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 1);
    assert!(lambda1 >= 0.0 && lambda2 >= 0.0);
    let (ymin, ymax) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    // subdifferential interval of f_{i} (0-based, inclusive) at b
    let sub = |i: usize, b: f64| -> (f64, f64) {
        let (alo, ahi) = if b > 0.0 {
            (1.0, 1.0)
        } else if b < 0.0 {
            (-1.0, -1.0)
        } else {
            (-1.0, 1.0)
        };
        let mut acc: (f64, f64) = (0.0, 0.0);
        for k in 0..=i {
            let (flo, fhi) = loss.subgradient(b, y[k]);
            let lo = acc.0.clamp(-lambda2, lambda2);
            let hi = acc.1.clamp(-lambda2, lambda2);
            let (lo, hi) = if k == 0 { (0.0, 0.0) } else { (lo, hi) };
            acc = (flo + lambda1 * alo + lo, fhi + lambda1 * ahi + hi);
        }
        acc
    };

    // point where `target` enters the (monotone) subdifferential of f_i
    let crossing = |i: usize, target: f64| -> f64 {
        let mut width = 1.0 + (ymax - ymin);
        let mut lo = ymin - width;
        while sub(i, lo).1 >= target {
            width *= 2.0;
            lo = ymin - width;
            assert!(width.is_finite(), "loss is not coercive");
        }
        width = 1.0 + (ymax - ymin);
        let mut hi = ymax + width;
        while sub(i, hi).0 <= target {
            width *= 2.0;
            hi = ymax + width;
            assert!(width.is_finite(), "loss is not coercive");
        }
        // sup ∂f(lo) < target < inf ∂f(hi)
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            let (a, b) = sub(i, mid);
            if a <= target && target <= b {
                return mid;
            }
            if b < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    let mut beta = vec![0.0; n];
    beta[n - 1] = crossing(n - 1, 0.0);
    for i in (1..n).rev() {
        let next = beta[i];
        let (a, b) = sub(i - 1, next);
        beta[i - 1] = if b < -lambda2 {
            crossing(i - 1, -lambda2)
        } else if a > lambda2 {
            crossing(i - 1, lambda2)
        } else {
            next
        };
    }
    beta
}
