//! Rank-1 product projectors on one to three qubits and the post-selected
//! clause check.
//!
//! For `P = |v⟩⟨v|` with `|v⟩ = |A⟩⊗|B⟩⊗|C⟩`, the register splits into
//! `2^{n−k}` groups of `2^k` amplitudes that differ only on the projector's
//! qubits. Per group the overlap `c = ⟨v|s_group⟩` gives both the failure
//! weight (`Σ c²`) and the projected state (`s_group − c·v`), so a check is
//! one read sweep computing overlaps and one write sweep applying them.

use serde::{Deserialize, Serialize};

use super::single::{perp_state, Theta};
use super::{StateError, StateVector};
use crate::sat::{Clause, Literal};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductProjector {
    qubits: Vec<usize>,
    vectors: Vec<[f64; 2]>,
    /// Index offsets of the group members, pattern bit `j` ↔ `qubits[j]`.
    offsets: [usize; 8],
    /// `⟨pattern|v⟩` for each group member.
    weights: [f64; 8],
    mask: usize,
}

impl ProductProjector {
    /// Projector onto `⊗ vectors[j]` acting on `qubits[j]`. Vectors are
    /// normalised here.
    pub fn new(qubits: Vec<usize>, vectors: Vec<[f64; 2]>) -> Result<Self, StateError> {
        let k = qubits.len();
        if k == 0 || k > 3 || vectors.len() != k {
            return Err(StateError::ProjectorArity(k));
        }
        let mut mask = 0usize;
        for &q in &qubits {
            if q >= usize::BITS as usize - 1 || mask & (1 << q) != 0 {
                return Err(StateError::ProjectorQubits(qubits.clone()));
            }
            mask |= 1 << q;
        }
        let vectors: Vec<[f64; 2]> = vectors
            .into_iter()
            .map(|v| {
                let nrm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                [v[0] / nrm, v[1] / nrm]
            })
            .collect();
        let mut offsets = [0usize; 8];
        let mut weights = [0.0; 8];
        for p in 0..(1usize << k) {
            let mut off = 0;
            let mut w = 1.0;
            for j in 0..k {
                let bit = (p >> j) & 1;
                off |= bit << qubits[j];
                w *= vectors[j][bit];
            }
            offsets[p] = off;
            weights[p] = w;
        }
        Ok(ProductProjector { qubits, vectors, offsets, weights, mask })
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn max_qubit(&self) -> usize {
        *self.qubits.iter().max().expect("arity >= 1")
    }

    /// `⟨pattern|v⟩` where bit `j` of `pattern` is the value on `qubits[j]`.
    pub fn weight(&self, pattern: usize) -> f64 {
        self.weights[pattern]
    }

    /// `offsets` and `weights` restricted to the group size.
    pub(crate) fn group(&self) -> (&[usize], &[f64]) {
        let len = 1 << self.arity();
        (&self.offsets[..len], &self.weights[..len])
    }

    pub(crate) fn mask(&self) -> usize {
        self.mask
    }
}

/// The check for one clause: projector onto the product of the states
/// orthogonal to what each literal wants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseProjector {
    pub clause: Clause,
    pub theta: Theta,
    projector: ProductProjector,
}

impl ClauseProjector {
    pub fn new(clause: &Clause, theta: Theta) -> Self {
        let lits = clause.literals();
        let projector = ProductProjector::new(
            lits.iter().map(|l| l.var).collect(),
            lits.iter().map(|l| perp_state(l.wanted(), theta)).collect(),
        )
        .expect("a clause has three distinct variables");
        ClauseProjector { clause: *clause, theta, projector }
    }

    /// Generalised clause over one to three literals.
    pub fn from_literals(literals: &[Literal], theta: Theta) -> Result<ProductProjector, StateError> {
        ProductProjector::new(
            literals.iter().map(|l| l.var).collect(),
            literals.iter().map(|l| perp_state(l.wanted(), theta)).collect(),
        )
    }

    pub fn projector(&self) -> &ProductProjector {
        &self.projector
    }
}

/// Visit the base index of every group: indices with the mask bits cleared,
/// in increasing order.
#[inline]
pub(crate) fn for_each_group(len: usize, mask: usize, mut f: impl FnMut(usize)) {
    let groups = len >> mask.count_ones();
    let mut base = 0usize;
    for _ in 0..groups {
        f(base);
        base = ((base | mask) + 1) & !mask;
    }
}

#[inline]
fn overlaps<const L: usize>(amps: &[f64], p: &ProductProjector, out: &mut [f64]) -> (f64, f64) {
    let off: [usize; L] = p.offsets[..L].try_into().unwrap();
    let w: [f64; L] = p.weights[..L].try_into().unwrap();
    let mut fail = 0.0;
    let mut norm = 0.0;
    let mut g = 0;
    for_each_group(amps.len(), p.mask, |base| {
        let mut c = 0.0;
        for k in 0..L {
            let a = amps[base + off[k]];
            c += w[k] * a;
            norm += a * a;
        }
        out[g] = c;
        fail += c * c;
        g += 1;
    });
    (fail, norm)
}

#[inline]
fn project<const L: usize>(amps: &mut [f64], p: &ProductProjector, cs: &[f64], scale: f64) {
    let off: [usize; L] = p.offsets[..L].try_into().unwrap();
    let w: [f64; L] = p.weights[..L].try_into().unwrap();
    let mut g = 0;
    let len = amps.len();
    for_each_group(len, p.mask, |base| {
        let c = cs[g];
        for k in 0..L {
            let a = &mut amps[base + off[k]];
            *a = (*a - c * w[k]) * scale;
        }
        g += 1;
    });
}

impl StateVector {
    /// `‖P s‖²` without touching the state.
    pub fn projector_weight(&self, p: &ProductProjector) -> f64 {
        let mut fail = 0.0;
        let (off, w) = p.group();
        for_each_group(self.amps.len(), p.mask(), |base| {
            let c: f64 = off.iter().zip(w).map(|(&o, &wk)| wk * self.amps[base + o]).sum();
            fail += c * c;
        });
        fail
    }

    /// Post-selected measurement of `I − P`: returns the pass probability
    /// `1 − ‖P s‖²` and replaces the state with `(I − P)s / ‖(I − P)s‖`.
    ///
    /// A pass probability below [`tolerance::CERTAIN_FAILURE`] is reported
    /// as [`StateError::CertainFailure`] and leaves the state unchanged, as
    /// does a non-normalised input.
    pub fn apply_projector_check(&mut self, p: &ProductProjector) -> Result<f64, StateError> {
        if p.max_qubit() >= self.n {
            return Err(StateError::ProjectorQubits(p.qubits.clone()));
        }
        let groups = self.amps.len() >> p.arity();
        if self.work.len() < groups {
            self.work.resize(groups, 0.0);
        }
        let (fail, norm) = match p.arity() {
            1 => overlaps::<2>(&self.amps, p, &mut self.work),
            2 => overlaps::<4>(&self.amps, p, &mut self.work),
            _ => overlaps::<8>(&self.amps, p, &mut self.work),
        };
        if (norm - 1.0).abs() > tolerance::NORM_CONTRACT {
            return Err(StateError::NotNormalized(norm.sqrt()));
        }
        let remaining = norm - fail;
        let pass_prob = (remaining / norm).clamp(0.0, 1.0);
        if pass_prob < tolerance::CERTAIN_FAILURE {
            return Err(StateError::CertainFailure { pass_prob });
        }
        let scale = 1.0 / remaining.sqrt();
        match p.arity() {
            1 => project::<2>(&mut self.amps, p, &self.work, scale),
            2 => project::<4>(&mut self.amps, p, &self.work, scale),
            _ => project::<8>(&mut self.amps, p, &self.work, scale),
        }
        Ok(pass_prob)
    }

    pub fn apply_clause_check(&mut self, p: &ClauseProjector) -> Result<f64, StateError> {
        self.apply_projector_check(&p.projector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::Literal;

    #[test]
    fn group_enumeration_skips_mask_bits() {
        let mut seen = vec![];
        for_each_group(32, 0b10010, |b| seen.push(b));
        assert_eq!(seen, vec![0, 1, 4, 5, 8, 9, 12, 13]);
    }

    #[test]
    fn rejects_bad_projectors() {
        assert!(ProductProjector::new(vec![], vec![]).is_err());
        assert!(ProductProjector::new(vec![1, 1], vec![[1.0, 0.0]; 2]).is_err());
        assert!(ProductProjector::new(vec![0, 1, 2, 3], vec![[1.0, 0.0]; 4]).is_err());
    }

    #[test]
    fn plus_state_classical_limit() {
        let clause = Clause::new([Literal::pos(0), Literal::neg(2), Literal::pos(3)]).unwrap();
        let p = ClauseProjector::new(&clause, Theta::CLASSICAL);
        let mut s = StateVector::init_plus(4).unwrap();
        let q = s.apply_clause_check(&p).unwrap();
        assert!((q - 7.0 / 8.0).abs() < 1e-14);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        // the violating pattern b1=F, b3=T, b4=F now has zero weight
        for x in 0..16u64 {
            let violating = x & 1 == 0 && (x >> 2) & 1 == 1 && (x >> 3) & 1 == 0;
            if violating {
                assert!(s.amplitude(x as usize).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_theta_leaves_plus_alone() {
        let clause = Clause::new([Literal::pos(0), Literal::pos(1), Literal::neg(2)]).unwrap();
        let p = ClauseProjector::new(&clause, Theta::DEGENERATE);
        let mut s = StateVector::init_plus(3).unwrap();
        let before = s.clone();
        let q = s.apply_clause_check(&p).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
        for x in 0..8 {
            assert!((s.amplitude(x) - before.amplitude(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn certain_failure_leaves_state() {
        // state equal to the excluded vector
        let clause = Clause::new([Literal::pos(0), Literal::pos(1), Literal::pos(2)]).unwrap();
        let p = ClauseProjector::new(&clause, Theta::CLASSICAL);
        let mut s = StateVector::basis(3, 0).unwrap();
        let before = s.clone();
        assert!(matches!(s.apply_clause_check(&p), Err(StateError::CertainFailure { .. })));
        assert_eq!(s, before);
    }

    #[test]
    fn non_normalized_input_is_rejected() {
        let clause = Clause::new([Literal::pos(0), Literal::pos(1), Literal::pos(2)]).unwrap();
        let p = ClauseProjector::new(&clause, Theta::new(0.5).unwrap());
        let mut s = StateVector::from_amplitudes(3, vec![1.0; 8]).unwrap();
        assert!(matches!(s.apply_clause_check(&p), Err(StateError::NotNormalized(_))));
    }

    #[test]
    fn idempotent_second_check() {
        let clause = Clause::new([Literal::neg(1), Literal::pos(0), Literal::pos(4)]).unwrap();
        let p = ClauseProjector::new(&clause, Theta::new(0.7).unwrap());
        let mut s = StateVector::init_plus(5).unwrap();
        let q1 = s.apply_clause_check(&p).unwrap();
        assert!(q1 < 1.0);
        let q2 = s.apply_clause_check(&p).unwrap();
        assert!((q2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lower_arity_projectors() {
        let th = Theta::new(0.9).unwrap();
        let one = ClauseProjector::from_literals(&[Literal::pos(1)], th).unwrap();
        let mut s = StateVector::init_plus(3).unwrap();
        let q = s.apply_projector_check(&one).unwrap();
        let v = perp_state(true, th);
        let ov = (v[0] + v[1]) / 2f64.sqrt();
        assert!((q - (1.0 - ov * ov)).abs() < 1e-14);
        let two = ClauseProjector::from_literals(&[Literal::pos(0), Literal::neg(2)], th).unwrap();
        assert_eq!(two.arity(), 2);
        s.apply_projector_check(&two).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
