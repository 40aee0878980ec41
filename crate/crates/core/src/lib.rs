//! Augmented Lagrangian solver for the one-dimensional fused lasso signal
//! approximator with an arbitrary convex, coercive per-coordinate loss.
//!
//! ```
//! use flsa::{solve, AlmConfig, LossModel};
//!
//! let y = [0.0, 4.0];
//! let report = solve(&y, &LossModel::Quadratic, &AlmConfig::new(0.0, 1.0), None).unwrap();
//! assert!((report.beta_hat[0] - 1.0).abs() < 1e-6);
//! assert!((report.beta_hat[1] - 3.0).abs() < 1e-6);
//! ```

pub mod error;
pub mod experiments;
pub mod cli;
pub mod linalg;
pub mod loss;
#[doc(hidden)]
pub mod oracle;
pub mod simulate;
pub mod solver;

pub use error::{FlsaError, Result};
pub use loss::{CoordinateProblem, CustomLoss, LossModel};
pub use simulate::{generate, NoiseModel, SignalSpec, SimulatedSignal};
pub use solver::{
    fuse_then_threshold, objective, solve, solve_with_observer, AlmConfig, AugmentationMode, SolveReport,
    SolverState, Termination,
};
