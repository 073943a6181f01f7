//! Online linear quadratic regulator control with disturbance predictions.
//!
//! The library covers the full loop from problem definition to evaluation:
//!
//! - [`matlin`] — small dense matrix kernel (Cholesky solves, spectral norms).
//! - [`riccati`] — discrete algebraic Riccati solver and the closed-loop
//!   quantities (gain, closed-loop matrix, control-effect kernel) every
//!   policy is built from.
//! - [`system`] — LQR problem instances, trajectory rollout, quadratic cost,
//!   and the reduction from quadratic tracking to disturbed LQR.
//! - [`disturbance`] — disturbance process contract (sampling + conditional
//!   means) with i.i.d., AR(1), sign-coupled, tracking-residual, and bounded
//!   adversarial realizations.
//! - [`policy`] — control laws: classic LQR feedback, closed-form MPC with k
//!   predictions, receding-horizon MPC, the conditional-mean optimal policy,
//!   the per-path offline optimum, and the exact piecewise policy for the
//!   scalar adversarial instance.
//! - [`evaluate`] — cost/regret/performance-ratio estimation: Monte Carlo,
//!   trace closed forms, exact scenario-tree enumeration, adversarial vertex
//!   maximization, and a scalar minimax grid DP.
//! - [`cli`] — config-driven front end behind the `predlqr` binary.
//!
//! Runnable walkthroughs for each capability live under `examples/`; start
//! with `cargo run --release -p predlqr --example solve_riccati`.

pub mod cli;
pub mod disturbance;
pub mod error;
pub mod evaluate;
pub mod matlin;
pub mod policy;
pub mod riccati;
pub mod rng;
pub mod system;

pub use error::{Error, Result};
pub use matlin::Mat;
pub use riccati::{solve_dare, RiccatiSolution};
pub use system::{LqrSystem, Trajectory};
