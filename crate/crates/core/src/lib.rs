//! Annealed ferromagnetic Ising model on configuration models.
//!
//! The configuration model pairs half-edges ("stubs") of a prescribed degree
//! sequence uniformly at random. Averaging the Ising partition function over
//! that pairing turns the model into an exactly solvable one: the annealed
//! pressure is a scalar variational problem driven by the random-matching
//! kernel g_β(k, m) and its growth rate F_β. This crate computes
//!
//! * the thermodynamic-limit pressure, magnetization and critical inverse
//!   temperature for a fixed asymptotic degree distribution
//!   ([`deterministic`]),
//! * the entropy-penalized variational pressure and the critical upper bound
//!   for i.i.d. degrees, with closed forms for Poisson and geometric degrees
//!   ([`iid`]),
//! * exact finite-size partition functions and exhaustive matching/spin
//!   enumerations that serve as ground truth at small sizes ([`oracle`]),
//! * a self-contained invariant suite ([`verify`]).

pub mod degree;
pub mod deterministic;
mod error;
pub mod iid;
pub mod kernel;
mod numeric;
pub mod oracle;
pub mod verify;

pub use degree::{
    geometric, make_distribution, poisson_truncated, relative_entropy, DegreeDistribution,
    DegreeSequence, DistributionSpec, SizeBiasedDistribution,
};
pub use deterministic::{
    critical_beta, estimate_transition, pressure, solve_w, spontaneous_magnetization,
    FixedPointSolution, ModelParams, PressureResult, SolveOptions,
};
pub use error::{Error, Result};
pub use iid::{beta_bar_c, geometric_beta_bar, poisson_beta_bar, pressure_iid, IidPressure};
pub use oracle::{brute_force_crossing, brute_force_z, log_annealed_z, psi_n, OracleInstance};
