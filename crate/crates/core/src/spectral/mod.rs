//! The frustration-free Hamiltonian `H = (1/m) Σ_i P_i` of a formula, its
//! ground space and gap, and the analytic gap bound.
//!
//! `P_i` is the clause projector used by the clause checks, so every
//! solution state is a zero-energy eigenvector of every term.

pub mod lanczos;

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdsolver::CheckOrderPolicy;
use crate::qstate::projector::for_each_group;
use crate::qstate::{solution_gram, ClauseProjector, ProductProjector, StateError, StateVector, Theta};
use crate::sat::{Assignment, Formula};
use crate::tolerance;
pub use lanczos::{EigenPair, LanczosConfig};

/// Largest register materialised as a dense matrix (128 MiB at 12 qubits).
pub const DENSE_MAX_QUBITS: usize = 12;
/// Largest register for the matrix-free operator.
pub const MATRIX_FREE_MAX_QUBITS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("{n} qubits exceed the {mode:?} limit of {limit}")]
    Capacity { n: usize, limit: usize, mode: Mode },
    #[error("eigensolver did not converge; residuals {residuals:?}")]
    NonConvergence { residuals: Vec<f64> },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dense,
    MatrixFree,
    /// Dense up to [`AUTO_DENSE_MAX_QUBITS`], matrix-free above.
    Auto,
}

/// Register size up to which [`Mode::Auto`] picks the dense solver.
pub const AUTO_DENSE_MAX_QUBITS: usize = 10;

impl Mode {
    pub fn resolve(self, n: usize) -> Mode {
        match self {
            Mode::Auto if n <= AUTO_DENSE_MAX_QUBITS => Mode::Dense,
            Mode::Auto => Mode::MatrixFree,
            m => m,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = SpectralError;
    fn from_str(s: &str) -> Result<Self, SpectralError> {
        match s {
            "dense" => Ok(Mode::Dense),
            "matrix-free" | "iterative" => Ok(Mode::MatrixFree),
            "auto" => Ok(Mode::Auto),
            _ => Err(SpectralError::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n: usize,
    m: usize,
    theta: Theta,
    mode: Mode,
    projectors: Vec<ProductProjector>,
    dense: Option<DMatrix<f64>>,
}

pub fn build_hamiltonian(f: &Formula, theta: Theta, mode: Mode) -> Result<Hamiltonian, SpectralError> {
    let n = f.num_vars();
    let mode = mode.resolve(n);
    let limit = match mode {
        Mode::Dense => DENSE_MAX_QUBITS,
        _ => MATRIX_FREE_MAX_QUBITS,
    };
    if n == 0 || n > limit {
        return Err(SpectralError::Capacity { n, limit, mode });
    }
    if f.num_clauses() == 0 {
        return Err(SpectralError::Config("formula has no clauses".into()));
    }
    let projectors = f.clauses().iter().map(|c| ClauseProjector::new(c, theta).projector().clone()).collect();
    let mut h = Hamiltonian { n, m: f.num_clauses(), theta, mode, projectors, dense: None };
    if mode == Mode::Dense {
        h.dense = Some(h.to_dense());
    }
    Ok(h)
}

impl Hamiltonian {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    /// `y = H·x`, clause by clause in formula order.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        if let Some(d) = &self.dense {
            let v = d * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
            return;
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        let inv_m = 1.0 / self.m as f64;
        for p in &self.projectors {
            let (off, w) = p.group();
            for_each_group(x.len(), p.mask(), |base| {
                let c: f64 = off.iter().zip(w).map(|(&o, &wk)| wk * x[base + o]).sum::<f64>() * inv_m;
                for (&o, &wk) in off.iter().zip(w) {
                    y[base + o] += c * wk;
                }
            });
        }
    }

    /// The full matrix, assembled from the 8×8 blocks of each projector.
    pub fn to_dense(&self) -> DMatrix<f64> {
        if let Some(d) = &self.dense {
            return d.clone();
        }
        let dim = self.dim();
        let inv_m = 1.0 / self.m as f64;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for p in &self.projectors {
            let (off, w) = p.group();
            for_each_group(dim, p.mask(), |base| {
                for (&oi, &wi) in off.iter().zip(w) {
                    for (&oj, &wj) in off.iter().zip(w) {
                        h[(base + oi, base + oj)] += wi * wj * inv_m;
                    }
                }
            });
        }
        h
    }

    /// `x·H·x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// The `k` lowest eigenpairs excluding the `locked` orthonormal vectors.
    /// Dense mode diagonalises exactly; matrix-free mode uses Lanczos.
    pub fn lowest(&self, k: usize, locked: &[Vec<f64>], cfg: &LanczosConfig) -> Vec<EigenPair> {
        match (&self.dense, locked.is_empty()) {
            (Some(d), true) => {
                let eig = SymmetricEigen::new(d.clone());
                let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
                idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                idx.into_iter()
                    .take(k)
                    .map(|i| {
                        let v: Vec<f64> = eig.eigenvectors.column(i).iter().cloned().collect();
                        let mut hv = vec![0.0; v.len()];
                        self.apply(&v, &mut hv);
                        let lam = eig.eigenvalues[i];
                        let residual = hv.iter().zip(&v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
                        EigenPair { value: lam, vector: v, residual, converged: true }
                    })
                    .collect()
            }
            _ => lanczos::lowest_eigenpairs(&|x: &[f64], y: &mut [f64]| self.apply(x, y), self.dim(), k, locked, cfg),
        }
    }

    /// All eigenvalues, ascending. Dense mode only.
    pub fn spectrum(&self) -> Option<Vec<f64>> {
        let d = self.dense.as_ref()?;
        let mut ev: Vec<f64> = d.clone().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        Some(ev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSpace {
    pub dim: usize,
    /// Eigenvalues found, ascending; the last is the first one at or above
    /// the tolerance when the search got that far.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Number of eigenvalues below `tol`.
pub fn ground_space_dim(h: &Hamiltonian, tol: f64, cfg: &LanczosConfig) -> Result<GroundSpace, SpectralError> {
    if let Some(ev) = h.spectrum() {
        let dim = ev.iter().filter(|&&e| e < tol).count();
        let upto = (dim + 1).min(ev.len());
        return Ok(GroundSpace { dim, eigenvalues: ev[..upto].to_vec(), residuals: vec![0.0; upto] });
    }
    let mut locked: Vec<Vec<f64>> = vec![];
    let mut eigenvalues = vec![];
    let mut residuals = vec![];
    while locked.len() < h.dim() {
        let p = lanczos::lowest_in_complement(
            &|x: &[f64], y: &mut [f64]| h.apply(x, y),
            h.dim(),
            &locked,
            cfg,
            locked.len() as u64,
        );
        eigenvalues.push(p.value);
        residuals.push(p.residual);
        if !p.converged {
            return Err(SpectralError::NonConvergence { residuals });
        }
        if p.value >= tol {
            break;
        }
        locked.push(p.vector);
    }
    Ok(GroundSpace { dim: locked.len(), eigenvalues, residuals })
}

/// The `(ground_dim + 1)`-th smallest eigenvalue.
pub fn spectral_gap(h: &Hamiltonian, ground_dim: usize, cfg: &LanczosConfig) -> Result<f64, SpectralError> {
    if let Some(ev) = h.spectrum() {
        return ev.get(ground_dim).copied().ok_or(SpectralError::Config("ground space fills the register".into()));
    }
    let ps = h.lowest(ground_dim + 1, &[], cfg);
    if ps.iter().any(|p| !p.converged) {
        return Err(SpectralError::NonConvergence { residuals: ps.iter().map(|p| p.residual).collect() });
    }
    ps.last().map(|p| p.value).ok_or(SpectralError::Config("empty register".into()))
}

/// Lowest eigenvalue orthogonal to the span of the solution states, found
/// by locking their Gram-orthonormalised basis.
pub fn spectral_gap_deflated(
    h: &Hamiltonian,
    solutions: &[Assignment],
    cfg: &LanczosConfig,
) -> Result<EigenPair, SpectralError> {
    let locked = solution_basis(solutions, h.theta())?;
    let p = lanczos::lowest_in_complement(&|x: &[f64], y: &mut [f64]| h.apply(x, y), h.dim(), &locked, cfg, 0);
    if !p.converged {
        return Err(SpectralError::NonConvergence { residuals: vec![p.residual] });
    }
    Ok(p)
}

/// Orthonormal basis of the span of the solution states at `theta`.
pub fn solution_basis(solutions: &[Assignment], theta: Theta) -> Result<Vec<Vec<f64>>, SpectralError> {
    if solutions.is_empty() {
        return Ok(vec![]);
    }
    let g = solution_gram(solutions, theta);
    let min_eig = g.clone().symmetric_eigenvalues().min();
    if min_eig < tolerance::GRAM_CONDITION {
        return Err(StateError::Conditioning { min_eigenvalue: min_eig }.into());
    }
    let vs: Vec<Vec<f64>> = solutions
        .iter()
        .map(|a| StateVector::solution_state(a, theta).map(StateVector::into_amplitudes))
        .collect::<Result<_, _>>()?;
    Ok(lanczos::orthonormalize(&vs, &g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    pub value: f64,
    /// θ = 0, where the bound vanishes.
    pub degenerate: bool,
}

/// `(1/m)·sin⁶θ·((1 − cos θ)/(1 + cos θ))ⁿ`, written with
/// `(1 − cos θ)/(1 + cos θ) = tan²(θ/2)` for accuracy at small θ.
pub fn gap_lower_bound(n: usize, m: usize, theta: Theta) -> GapBound {
    let t = theta.value();
    if t == 0.0 {
        return GapBound { value: 0.0, degenerate: true };
    }
    let ratio = if t == FRAC_PI_2 { 1.0 } else { (t / 2.0).tan().powi(2) };
    let value = t.sin().powi(6) * ratio.powi(n as i32) / m as f64;
    GapBound { value, degenerate: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    /// `(1 + (1 − g)^k (1/ov − 1))⁻¹`.
    pub exact: f64,
    /// `1 − e^{−kg} (1/ov − 1)`.
    pub exponential: f64,
}

/// Lower bound on the ground-space overlap after `k` successful random
/// checks, from gap `g` and initial overlap `ov`.
pub fn convergence_bound(k: u64, gap: f64, initial_overlap: f64) -> ConvergenceBound {
    assert!(gap > 0.0 && gap <= 1.0, "gap must lie in (0, 1]");
    assert!(initial_overlap > 0.0 && initial_overlap <= 1.0, "overlap must lie in (0, 1]");
    let excess = 1.0 / initial_overlap - 1.0;
    let decay = if gap == 1.0 {
        if k == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        ((k as f64) * (1.0 - gap).ln()).exp()
    };
    ConvergenceBound {
        exact: 1.0 / (1.0 + decay * excess),
        exponential: 1.0 - (-(k as f64) * gap).exp() * excess,
    }
}

/// Ground-space overlap of `|+⟩^⊗n` at `theta`, computed directly.
pub fn initial_overlap(n: usize, solutions: &[Assignment], theta: Theta) -> Result<f64, SpectralError> {
    Ok(StateVector::init_plus(n)?.subspace_fidelity(solutions, theta)?)
}

/// Ground-space overlap after each of the requested numbers of successful
/// checks, with clauses drawn independently and uniformly (the
/// [`CheckOrderPolicy::IidUniform`] sequence for `seed`) at fixed θ.
pub fn measured_overlaps(
    f: &Formula,
    theta: Theta,
    solutions: &[Assignment],
    ks: &[usize],
    seed: u64,
) -> Result<Vec<(usize, f64)>, SpectralError> {
    let m = f.num_clauses();
    let order = CheckOrderPolicy::IidUniform { seed };
    let projectors: Vec<ClauseProjector> = f.clauses().iter().map(|c| ClauseProjector::new(c, theta)).collect();
    let mut s = StateVector::init_plus(f.num_vars())?;
    let mut targets = ks.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let mut out = Vec::with_capacity(targets.len());
    let mut done = 0usize;
    let mut cycle = 1usize;
    let mut seq = order.cycle_order(m, cycle).into_iter();
    for k in targets {
        while done < k {
            let ci = match seq.next() {
                Some(ci) => ci,
                None => {
                    s.normalize();
                    cycle += 1;
                    seq = order.cycle_order(m, cycle).into_iter();
                    continue;
                }
            };
            s.apply_clause_check(&projectors[ci])?;
            done += 1;
        }
        out.push((k, s.subspace_fidelity(solutions, theta)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub mode: Mode,
    pub n_s: Option<usize>,
    pub ground_space_dim: usize,
    pub gap: f64,
    pub lowest: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bound: f64,
    pub bound_degenerate: bool,
    pub bound_satisfied: bool,
    /// `gap / bound`.
    pub looseness: f64,
}

/// Ground-space dimension, gap and bound for one formula and angle.
pub fn analyze(
    f: &Formula,
    theta: Theta,
    mode: Mode,
    n_s: Option<usize>,
    cfg: &LanczosConfig,
) -> Result<SpectrumReport, SpectralError> {
    let h = build_hamiltonian(f, theta, mode)?;
    let gs = ground_space_dim(&h, tolerance::ZERO_ENERGY, cfg)?;
    let gap = match gs.eigenvalues.get(gs.dim) {
        Some(&g) => g,
        None => spectral_gap(&h, gs.dim, cfg)?,
    };
    let b = gap_lower_bound(f.num_vars(), f.num_clauses(), theta);
    Ok(SpectrumReport {
        n: f.num_vars(),
        m: f.num_clauses(),
        theta: theta.value(),
        mode: h.mode(),
        n_s,
        ground_space_dim: gs.dim,
        gap,
        lowest: gs.eigenvalues,
        residuals: gs.residuals,
        bound: b.value,
        bound_degenerate: b.degenerate,
        bound_satisfied: b.value <= gap,
        looseness: gap / b.value,
    })
}
