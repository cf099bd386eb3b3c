//! Langevin Monte Carlo and stochastic gradient descent as samplers for
//! strongly log-concave targets.
//!
//! The crate covers four things:
//!
//! * **Targets** ([`potentials`]): potentials `f` with declared strong-convexity
//!   (`m`), smoothness (`M`) and optional Hessian-Lipschitz (`L`) constants,
//!   including sum-decomposable targets `f = Σ g_i`.
//! * **Samplers** ([`samplers`]): the Langevin update
//!   `θ ← θ − h∇f(θ) + √(2h)ξ`, SGD with idealized isotropic Gaussian
//!   mini-batch noise of variance `n(n−b)/b`, and true mini-batch SGD.
//! * **Planning** ([`planner`]): non-asymptotic Wasserstein-2 upper bounds and
//!   their inversion into `(h, b, K)` schedules minimizing the gradient budget
//!   `K·b` for a requested accuracy `ε`.
//! * **Ground truth** ([`metrics`], [`oracles`]): closed-form W₂ between
//!   Gaussians, exact optimal transport between sample sets, exact laws of
//!   affine-Gaussian chains and brute-force subset-variance enumeration.
//!
//! ## Example
//!
//! ```
//! use langevin_sgd::potentials::make_isotropic_gaussian_target;
//! use langevin_sgd::planner::plan_sgd_first_order;
//!
//! let centers: Vec<Vec<f64>> = (0..100).map(|i| vec![(i as f64 - 49.5) / 50.0]).collect();
//! let target = make_isotropic_gaussian_target(1, 100, 1.0, &centers).unwrap();
//! let plan = plan_sgd_first_order(0.1, &target, 0.0).unwrap();
//! assert_eq!(plan.b, 11);
//! assert!(plan.predicted_bound <= 0.1);
//! ```
//!
//! Runnable programs for each capability live in the crate's `examples/`
//! directory; the `langevin-sgd` binary exposes `plan`, `sample`, `bound`
//! and `verify` subcommands.

pub mod assignment;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod metrics;
pub mod oracles;
pub mod planner;
pub mod potentials;
pub mod samplers;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::GaussianLaw;
pub use planner::{Plan, Theorem};
pub use potentials::{Constants, DecomposableTarget, Potential};
pub use samplers::{ChainState, SamplerConfig, SamplerKind};
