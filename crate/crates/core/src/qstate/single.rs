//! θ-parameterised single-qubit states.
//!
//! All four are `R_Y(φ)|+⟩` for some angle φ, which is the real vector
//! `(cos(π/4 + φ/2), sin(π/4 + φ/2))`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use super::StateError;

/// Angle θ ∈ [0, π/2] between the TRUE/FALSE states and `|+⟩`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Theta(f64);

impl Theta {
    pub const CLASSICAL: Theta = Theta(FRAC_PI_2);
    pub const DEGENERATE: Theta = Theta(0.0);

    pub fn new(theta: f64) -> Result<Self, StateError> {
        // allow rounding noise at the classical end, e.g. from schedule arithmetic
        if theta.is_finite() && (0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
            Ok(Theta(theta.min(FRAC_PI_2)))
        } else {
            Err(StateError::ThetaRange(theta))
        }
    }

    /// Strictly inside (0, π/2), where clause checks need not commute.
    pub fn interior(theta: f64) -> Result<Self, StateError> {
        let t = Theta::new(theta)?;
        if t.0 > 0.0 && t.0 < FRAC_PI_2 {
            Ok(t)
        } else {
            Err(StateError::ThetaRange(theta))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitKind {
    /// TRUE: `R_Y(θ)|+⟩`.
    True,
    /// FALSE: `R_Y(−θ)|+⟩`.
    False,
    /// Orthogonal to TRUE: `R_Y(π+θ)|+⟩`.
    TruePerp,
    /// Orthogonal to FALSE: `R_Y(π−θ)|+⟩`.
    FalsePerp,
}

/// `R_Y(phi)|+⟩` as `[⟨0|·⟩, ⟨1|·⟩]`.
pub fn ry_plus(phi: f64) -> [f64; 2] {
    let a = FRAC_PI_4 + phi / 2.0;
    [a.cos(), a.sin()]
}

pub fn single_qubit_state(kind: QubitKind, theta: Theta) -> [f64; 2] {
    let t = theta.value();
    let phi = match kind {
        QubitKind::True => t,
        QubitKind::False => -t,
        QubitKind::TruePerp => PI + t,
        QubitKind::FalsePerp => PI - t,
    };
    ry_plus(phi)
}

/// The state encoding boolean value `value`.
pub fn value_state(value: bool, theta: Theta) -> [f64; 2] {
    single_qubit_state(if value { QubitKind::True } else { QubitKind::False }, theta)
}

/// The state orthogonal to the one encoding `value`.
pub fn perp_state(value: bool, theta: Theta) -> [f64; 2] {
    single_qubit_state(if value { QubitKind::TruePerp } else { QubitKind::FalsePerp }, theta)
}
