//! 3-SAT data model: literals, clauses, formulas and assignments.
//!
//! Variables are 0-indexed everywhere inside the crate. DIMACS text uses
//! 1-indexed signed integers; the conversion happens in [`dimacs`] only.

pub mod dimacs;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default largest `n` accepted by [`count_solutions`].
pub const DEFAULT_ENUMERATION_LIMIT: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("variable index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("clause repeats variable {var}")]
    RepeatedVariable { var: usize },
    #[error("assignment has length {got}, formula has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("enumeration over 2^{n} assignments exceeds the limit n <= {limit}")]
    Capacity { n: usize, limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A possibly negated reference to one boolean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Value of the literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }

    /// The variable value that makes this literal TRUE.
    #[inline]
    pub fn wanted(self) -> bool {
        !self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬b{}", self.var + 1)
        } else {
            write!(f, "b{}", self.var + 1)
        }
    }
}

/// Three OR'ed literals over pairwise distinct variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: [Literal; 3],
}

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Result<Self, SatError> {
        let [a, b, c] = literals;
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if x.var == y.var {
                return Err(SatError::RepeatedVariable { var: x.var });
            }
        }
        Ok(Clause { literals })
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.literals
    }

    pub fn vars(&self) -> [usize; 3] {
        self.literals.map(|l| l.var)
    }

    pub fn max_var(&self) -> usize {
        self.literals.iter().map(|l| l.var).max().unwrap_or(0)
    }

    /// Literals sorted by variable: two clauses are the same set of literals
    /// iff their keys are equal.
    pub fn canonical_key(&self) -> [Literal; 3] {
        let mut k = self.literals;
        k.sort();
        k
    }

    /// Bit mask of the clause's variables and the unique bit pattern (over
    /// those variables) that falsifies it. An index `x` violates the clause
    /// iff `x & mask == pattern`.
    #[inline]
    pub fn violation_mask(&self) -> (u64, u64) {
        let mut mask = 0u64;
        let mut pattern = 0u64;
        for l in &self.literals {
            mask |= 1 << l.var;
            // a negated literal is FALSE when the variable is TRUE
            if l.negated {
                pattern |= 1 << l.var;
            }
        }
        (mask, pattern)
    }

    /// The clause value for a candidate assignment.
    pub fn evaluate(&self, a: &Assignment) -> Result<bool, SatError> {
        for l in &self.literals {
            if l.var >= a.len() {
                return Err(SatError::IndexOutOfRange { index: l.var, n: a.len() });
            }
        }
        Ok(self.evaluate_unchecked(a))
    }

    #[inline]
    pub(crate) fn evaluate_unchecked(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(a.bits[l.var]))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.literals;
        write!(f, "({a} ∨ {b} ∨ {c})")
    }
}

/// Conjunction of clauses over `n` variables. Clause order is significant: it
/// is the order of the sequential check cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    n: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self, SatError> {
        for c in &clauses {
            let v = c.max_var();
            if v >= n {
                return Err(SatError::IndexOutOfRange { index: v, n });
            }
        }
        Ok(Formula { n, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<bool, SatError> {
        self.check_len(a)?;
        Ok(self.clauses.iter().all(|c| c.evaluate_unchecked(a)))
    }

    /// Indices of clauses FALSE under `a`, in formula order.
    pub fn violated_clauses(&self, a: &Assignment) -> Result<Vec<usize>, SatError> {
        self.check_len(a)?;
        Ok(self
            .clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.evaluate_unchecked(a))
            .map(|(i, _)| i)
            .collect())
    }

    /// Number of clauses violated by the basis index `x` (bit i = b_i).
    pub fn violation_count(&self, x: u64) -> usize {
        self.clauses
            .iter()
            .filter(|c| {
                let (mask, pat) = c.violation_mask();
                x & mask == pat
            })
            .count()
    }

    fn check_len(&self, a: &Assignment) -> Result<(), SatError> {
        if a.len() != self.n {
            return Err(SatError::LengthMismatch { expected: self.n, got: a.len() });
        }
        Ok(())
    }
}

/// Truth values for `b_1..b_n`, TRUE ↔ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    /// Decode a basis index: bit i of `x` is the value of `b_{i+1}`.
    pub fn from_index(x: u64, n: usize) -> Self {
        Assignment { bits: (0..n).map(|i| (x >> i) & 1 == 1).collect() }
    }

    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    /// `'1'`/`'0'` per variable, `b_1` first.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '1' => Some(true),
                '0' => Some(false),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

pub fn evaluate_clause(clause: &Clause, a: &Assignment) -> Result<bool, SatError> {
    clause.evaluate(a)
}

pub fn evaluate_formula(f: &Formula, a: &Assignment) -> Result<bool, SatError> {
    f.evaluate(a)
}

/// Result of exhaustive solution counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub count: usize,
    /// Ascending by basis index.
    pub solutions: Vec<Assignment>,
}

/// Enumerate all 2^n assignments, with the default limit on `n`.
pub fn count_solutions(f: &Formula) -> Result<SolutionSet, SatError> {
    count_solutions_with_limit(f, DEFAULT_ENUMERATION_LIMIT)
}

pub fn count_solutions_with_limit(f: &Formula, limit: usize) -> Result<SolutionSet, SatError> {
    let n = f.num_vars();
    if n > limit || n > 40 {
        return Err(SatError::Capacity { n, limit: limit.min(40) });
    }
    let masks: Vec<(u64, u64)> = f.clauses().iter().map(Clause::violation_mask).collect();
    let total = 1u64 << n;
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    // per-chunk results are concatenated in chunk order, so the listing is
    // ascending regardless of scheduling
    let found: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(total);
            (lo..hi)
                .filter(|&x| masks.iter().all(|&(m, p)| x & m != p))
                .collect()
        })
        .collect();
    let solutions: Vec<Assignment> = found
        .into_iter()
        .flatten()
        .map(|x| Assignment::from_index(x, n))
        .collect();
    Ok(SolutionSet { count: solutions.len(), solutions })
}
