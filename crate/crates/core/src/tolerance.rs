//! Numerical tolerances shared by the simulator, the spectral tools and the
//! tests. Values are the defaults quoted in the module docs that use them.

/// A clause check whose pass probability is below this is a certain failure.
pub const CERTAIN_FAILURE: f64 = 1e-14;

/// Allowed drift of the state norm from 1 before an operation rejects it.
pub const NORM_CONTRACT: f64 = 1e-8;

/// Normalisation accuracy promised after every normalising operation.
pub const NORMALIZED: f64 = 1e-10;

/// Orthogonality of the single-qubit perpendicular states.
pub const ORTHOGONAL: f64 = 1e-12;

/// Monotone-fidelity slack between consecutive cycle boundaries.
pub const FIDELITY_SLACK: f64 = 1e-10;

/// Eigenvalues below this count towards the ground space.
pub const ZERO_ENERGY: f64 = 1e-9;

/// Smallest Gram-matrix eigenvalue accepted when inverting over the
/// solution states.
pub const GRAM_CONDITION: f64 = 1e-12;

/// Per-qubit probability toward the solution value that counts as "correct"
/// when locating the smoothing cycle.
pub const SMOOTH_BIAS: f64 = 0.51;
