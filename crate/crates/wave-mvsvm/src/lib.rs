//! # wave-mvsvm
//!
//! A two-view kernel classifier built on the bounded, smooth, asymmetric
//! *wave loss*. Each view gets its own Gaussian-kernel expansion; a
//! co-regularization term pulls the two views' predictions together, and the
//! weighted sum of both views' decision values classifies new points. The
//! non-convex training problem is solved by ADMM with closed-form
//! coefficient updates and an inner gradient descent for the slack vectors.
//!
//! The crate ships the full experiment harness around the classifier:
//! PCA-based second-view synthesis, train/test splits, five-fold grid
//! search, label-noise injection, ROC/AUC, Friedman/Nemenyi rank statistics,
//! and a Rademacher-style generalization-bound evaluator.
//!
//! ## Quick start
//!
//! ```
//! use wave_mvsvm::data::make_synthetic_two_view;
//! use wave_mvsvm::model::{fit, predict};
//! use wave_mvsvm::solver::Hyperparams;
//!
//! let ds = make_synthetic_two_view(40, 10.0, 1.0, 7).unwrap();
//! let hp = Hyperparams {
//!     kernel1: wave_mvsvm::kernel::KernelConfig { sigma: 5.0 },
//!     kernel2: wave_mvsvm::kernel::KernelConfig { sigma: 5.0 },
//!     ..Default::default()
//! };
//! let (model, _trace) = fit(&ds, &hp).unwrap();
//! let x1: Vec<f64> = ds.view1.row(0).iter().copied().collect();
//! let x2: Vec<f64> = ds.view2.row(0).iter().copied().collect();
//! assert_eq!(predict(&model, &x1, &x2).unwrap(), ds.labels[0]);
//! ```
//!
//! See the `examples/` directory for one runnable program per capability
//! and the `wave-mvsvm` binary for the command-line front end.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod loss;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{GramPair, KernelConfig};
pub use loss::WaveParams;
pub use model::TrainedModel;
pub use solver::{ConvergenceTrace, Hyperparams, SolverState};
