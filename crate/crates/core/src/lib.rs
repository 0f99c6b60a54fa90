//! Simulation and analysis of measurement-driven quantum 3-SAT solving.
//!
//! - [`sat`]: formulas, assignments, brute-force solution counting, DIMACS.
//! - [`generate`]: random instances with rejection on the solution count.
//! - [`schoening`]: the classical random walk baseline, counting clause checks.
//! - [`qstate`]: real state vectors, θ-states and clause-check projectors.
//! - [`mdsolver`]: schedules, post-selected trajectories, expected runtime,
//!   Monte-Carlo sampling with noise, majority-vote inference.
//! - [`spectral`]: the frustration-free Hamiltonian, its ground space and gap.
//! - [`harness`]: experiment plans and CSV reports.

pub mod generate;
pub mod harness;
pub mod mdsolver;
pub mod qstate;
pub mod rng;
pub mod sat;
pub mod schoening;
pub mod spectral;
pub mod stats;
pub mod tolerance;
