//! Dense n-qubit state vectors for the clause-check process.
//!
//! Every operation used by the algorithm (rotations `R_Y`, the product
//! projectors, Pauli errors up to a global phase) is real, so amplitudes are
//! stored as `f64`. Qubit `i` is bit `i` of the basis index; `|1⟩` is TRUE.

pub mod projector;
pub mod single;
pub mod snapshot;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::sat::Assignment;
use crate::tolerance;

pub use projector::{ClauseProjector, ProductProjector};
pub use single::{perp_state, single_qubit_state, value_state, QubitKind, Theta};

/// Largest register allocated unless a caller raises the limit.
pub const DEFAULT_MAX_QUBITS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("theta = {0} outside [0, π/2]")]
    ThetaRange(f64),
    #[error("{n} qubits exceed the limit of {limit} ({bytes} bytes of amplitudes)")]
    Capacity { n: usize, limit: usize, bytes: u128 },
    #[error("projector arity {0} not in 1..=3")]
    ProjectorArity(usize),
    #[error("projector qubits {0:?} repeat or fall outside the register")]
    ProjectorQubits(Vec<usize>),
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("clause check fails with certainty (pass probability {pass_prob:e})")]
    CertainFailure { pass_prob: f64 },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("solution Gram matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    Conditioning { min_eigenvalue: f64 },
    #[error("no solution states given")]
    EmptySolutions,
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Bytes needed for `n` qubits of real amplitudes.
pub fn memory_estimate(n: usize) -> u128 {
    (1u128 << n) * std::mem::size_of::<f64>() as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    amps: Vec<f64>,
    #[serde(skip)]
    work: Vec<f64>,
}

impl PartialEq for StateVector {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.amps == other.amps
    }
}

fn check_capacity(n: usize, limit: usize) -> Result<(), StateError> {
    if n == 0 || n > limit || n >= usize::BITS as usize - 1 {
        return Err(StateError::Capacity { n, limit, bytes: memory_estimate(n.min(127)) });
    }
    Ok(())
}

impl StateVector {
    /// `|+⟩^⊗n`.
    pub fn init_plus(n: usize) -> Result<Self, StateError> {
        Self::init_plus_with_limit(n, DEFAULT_MAX_QUBITS)
    }

    pub fn init_plus_with_limit(n: usize, limit: usize) -> Result<Self, StateError> {
        check_capacity(n, limit)?;
        let len = 1usize << n;
        let a = (len as f64).sqrt().recip();
        Ok(StateVector { n, amps: vec![a; len], work: Vec::new() })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self, StateError> {
        check_capacity(n, DEFAULT_MAX_QUBITS)?;
        let mut amps = vec![0.0; 1 << n];
        amps[index] = 1.0;
        Ok(StateVector { n, amps, work: Vec::new() })
    }

    /// Wrap raw amplitudes. No normalisation is applied.
    pub fn from_amplitudes(n: usize, amps: Vec<f64>) -> Result<Self, StateError> {
        if n == 0 || n >= usize::BITS as usize - 1 {
            return Err(StateError::Capacity { n, limit: DEFAULT_MAX_QUBITS, bytes: memory_estimate(n) });
        }
        if amps.len() != 1 << n {
            return Err(StateError::LengthMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(StateVector { n, amps, work: Vec::new() })
    }

    /// `⊗_i vectors[i]` with `vectors[0]` on qubit 0.
    pub fn product(vectors: &[[f64; 2]]) -> Result<Self, StateError> {
        let n = vectors.len();
        check_capacity(n, DEFAULT_MAX_QUBITS)?;
        let mut amps = Vec::with_capacity(1 << n);
        amps.push(1.0);
        for v in vectors {
            // qubit i is bit i: the new factor selects the upper half
            let len = amps.len();
            amps.extend_from_within(..len);
            for a in &mut amps[..len] {
                *a *= v[0];
            }
            for a in &mut amps[len..] {
                *a *= v[1];
            }
        }
        Ok(StateVector { n, amps, work: Vec::new() })
    }

    /// `⊗_i R_Y(L_i θ)|+⟩`, `L_i = +1` for TRUE.
    pub fn solution_state(a: &Assignment, theta: Theta) -> Result<Self, StateError> {
        let vs: Vec<[f64; 2]> = a.bits().iter().map(|&b| value_state(b, theta)).collect();
        Self::product(&vs)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> f64 {
        self.amps[index]
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }

    /// Rescale to unit norm; returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let nrm = self.norm_sqr().sqrt();
        if nrm > 0.0 {
            let s = nrm.recip();
            self.amps.iter_mut().for_each(|a| *a *= s);
        }
        nrm
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }

    /// Probability of reading `|1⟩` on qubit `i`.
    pub fn qubit_bias(&self, i: usize) -> f64 {
        assert!(i < self.n, "qubit {i} out of range");
        let stride = 1usize << i;
        self.amps
            .chunks_exact(2 * stride)
            .map(|c| c[stride..].iter().map(|a| a * a).sum::<f64>())
            .sum()
    }

    pub fn biases(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.qubit_bias(i)).collect()
    }

    /// `⟨⊗_i vectors[i] | s⟩`, contracting the highest qubit first.
    pub fn product_overlap(&self, vectors: &[[f64; 2]]) -> Result<f64, StateError> {
        if vectors.len() != self.n {
            return Err(StateError::LengthMismatch { expected: self.n, got: vectors.len() });
        }
        let half = self.amps.len() / 2;
        let v = vectors[self.n - 1];
        let mut buf: Vec<f64> = (0..half).map(|j| v[0] * self.amps[j] + v[1] * self.amps[j + half]).collect();
        for q in (0..self.n - 1).rev() {
            let h = buf.len() / 2;
            let v = vectors[q];
            for j in 0..h {
                buf[j] = v[0] * buf[j] + v[1] * buf[j + h];
            }
            buf.truncate(h);
        }
        Ok(buf[0])
    }

    /// `|⟨θ_a|s⟩|²` for the solution state of `a`.
    pub fn fidelity(&self, a: &Assignment, theta: Theta) -> Result<f64, StateError> {
        let vs: Vec<[f64; 2]> = a.bits().iter().map(|&b| value_state(b, theta)).collect();
        let ov = self.product_overlap(&vs)?;
        Ok(ov * ov)
    }

    /// `s†Πs` with `Π` the orthogonal projector onto the span of the solution
    /// states, computed as `bᵀG⁻¹b` from the overlaps `b_j = ⟨θ_j|s⟩` and the
    /// Gram matrix `G_jk = (cos θ)^{Hamming(j,k)}`.
    pub fn subspace_fidelity(&self, solutions: &[Assignment], theta: Theta) -> Result<f64, StateError> {
        if solutions.is_empty() {
            return Err(StateError::EmptySolutions);
        }
        let b: Vec<f64> = solutions
            .iter()
            .map(|a| {
                let vs: Vec<[f64; 2]> = a.bits().iter().map(|&x| value_state(x, theta)).collect();
                self.product_overlap(&vs)
            })
            .collect::<Result<_, _>>()?;
        let g = solution_gram(solutions, theta);
        let b = DVector::from_vec(b);
        let min_eig = g.clone().symmetric_eigenvalues().min();
        if min_eig < tolerance::GRAM_CONDITION {
            return Err(StateError::Conditioning { min_eigenvalue: min_eig });
        }
        let chol = g.cholesky().ok_or(StateError::Conditioning { min_eigenvalue: min_eig })?;
        let x = chol.solve(&b);
        Ok(b.dot(&x))
    }

    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        assert!(qubit < self.n, "qubit {qubit} out of range");
        let stride = 1usize << qubit;
        for chunk in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            match pauli {
                Pauli::X => lo.swap_with_slice(hi),
                Pauli::Z => hi.iter_mut().for_each(|a| *a = -*a),
                // Y = i·X·Z; the global phase i is dropped
                Pauli::Y => {
                    hi.iter_mut().for_each(|a| *a = -*a);
                    lo.swap_with_slice(hi);
                }
            }
        }
    }

    /// Sample a z-basis measurement of every qubit; returns the basis index.
    pub fn sample_basis(&self, rng: &mut rng::Rng) -> usize {
        let r: f64 = rng.random::<f64>() * self.norm_sqr();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a * a;
            if r < acc {
                return i;
            }
        }
        // rounding left r at the very top
        self.amps.iter().rposition(|a| *a != 0.0).unwrap_or(0)
    }
}

/// `(cos θ)^{Hamming(j,k)}` over the given solutions.
pub fn solution_gram(solutions: &[Assignment], theta: Theta) -> DMatrix<f64> {
    let c = theta.value().cos();
    DMatrix::from_fn(solutions.len(), solutions.len(), |j, k| {
        c.powi(solutions[j].hamming(&solutions[k]) as i32)
    })
}

pub fn init_plus(n: usize) -> Result<StateVector, StateError> {
    StateVector::init_plus(n)
}

pub fn solution_state(a: &Assignment, theta: Theta) -> Result<StateVector, StateError> {
    StateVector::solution_state(a, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn plus_state() {
        let s = StateVector::init_plus(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0) - h).abs() < 1e-15 && (s.amplitude(1) - h).abs() < 1e-15);
        let s = StateVector::init_plus(20).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.biases().iter().all(|b| (b - 0.5).abs() < 1e-12));
    }

    #[test]
    fn capacity_error_carries_estimate() {
        match StateVector::init_plus_with_limit(12, 10) {
            Err(StateError::Capacity { n: 12, limit: 10, bytes }) => assert_eq!(bytes, 8 * 4096),
            other => panic!("{other:?}"),
        }
        assert!(StateVector::init_plus(0).is_err());
    }

    #[test]
    fn classical_solution_state_is_basis() {
        let a = Assignment::new(vec![true, false]);
        let s = StateVector::solution_state(&a, Theta::CLASSICAL).unwrap();
        // b1 = T is bit 0
        assert!((s.amplitude(0b01) - 1.0).abs() < 1e-15);
        assert!(s.amplitude(0b10).abs() < 1e-15);
    }

    #[test]
    fn degenerate_solution_state_is_plus() {
        let a = Assignment::new(vec![true, false, true]);
        let s = StateVector::solution_state(&a, Theta::DEGENERATE).unwrap();
        let p = StateVector::init_plus(3).unwrap();
        for x in 0..8 {
            assert!((s.amplitude(x) - p.amplitude(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn solution_overlap_with_plus() {
        let a = Assignment::new(vec![true, false, false, true, true]);
        for th in [0.0, 0.3, 1.1, FRAC_PI_2] {
            let t = Theta::new(th).unwrap();
            let s = StateVector::solution_state(&a, t).unwrap();
            let p = StateVector::init_plus(5).unwrap();
            assert!((s.dot(&p) - (th / 2.0).cos().powi(5)).abs() < 1e-14);
            assert!((p.fidelity(&a, t).unwrap() - (th / 2.0).cos().powi(10)).abs() < 1e-14);
            assert!((s.fidelity(&a, t).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn solution_biases() {
        let a = Assignment::new(vec![true, false, true]);
        let t = Theta::new(0.8).unwrap();
        let s = StateVector::solution_state(&a, t).unwrap();
        let hi = 0.5 + 0.5 * 0.8f64.sin();
        let lo = 0.5 - 0.5 * 0.8f64.sin();
        let b = s.biases();
        assert!((b[0] - hi).abs() < 1e-14 && (b[1] - lo).abs() < 1e-14 && (b[2] - hi).abs() < 1e-14);
    }

    #[test]
    fn gram_off_diagonal() {
        let a = Assignment::new(vec![true, false, true, true]);
        let b = Assignment::new(vec![false, false, true, false]);
        let t = Theta::new(0.6).unwrap();
        let g = solution_gram(&[a.clone(), b.clone()], t);
        let sa = StateVector::solution_state(&a, t).unwrap();
        let sb = StateVector::solution_state(&b, t).unwrap();
        assert!((g[(0, 1)] - 0.6f64.cos().powi(2)).abs() < 1e-15);
        assert!((g[(0, 1)] - sa.dot(&sb)).abs() < 1e-14);
    }

    #[test]
    fn subspace_fidelity_of_member_and_singular_gram() {
        let a = Assignment::new(vec![true, false, true]);
        let b = Assignment::new(vec![false, false, true]);
        let t = Theta::new(0.5).unwrap();
        let s = StateVector::solution_state(&b, t).unwrap();
        assert!((s.subspace_fidelity(&[a.clone(), b.clone()], t).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            s.subspace_fidelity(&[a, b], Theta::DEGENERATE),
            Err(StateError::Conditioning { .. })
        ));
        assert!(matches!(s.subspace_fidelity(&[], t), Err(StateError::EmptySolutions)));
    }

    #[test]
    fn paulis() {
        let a = Assignment::new(vec![true, false]);
        let mut s = StateVector::solution_state(&a, Theta::CLASSICAL).unwrap();
        s.apply_pauli(1, Pauli::X);
        assert!((s.amplitude(0b11) - 1.0).abs() < 1e-15);
        s.apply_pauli(0, Pauli::Y);
        assert!((s.amplitude(0b10).abs() - 1.0).abs() < 1e-15);
        s.apply_pauli(1, Pauli::Z);
        assert!((s.amplitude(0b10) + 1.0).abs() < 1e-15 || (s.amplitude(0b10) - 1.0).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_follows_probabilities() {
        let s = StateVector::solution_state(&Assignment::new(vec![true]), Theta::new(0.9).unwrap()).unwrap();
        let mut rng = crate::rng::seeded(4);
        let ones = (0..20000).filter(|_| s.sample_basis(&mut rng) == 1).count() as f64 / 20000.0;
        let p = 0.5 + 0.5 * 0.9f64.sin();
        assert!((ones - p).abs() < 4.0 * (p * (1.0 - p) / 20000.0).sqrt());
    }
}
