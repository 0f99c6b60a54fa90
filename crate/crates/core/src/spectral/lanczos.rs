//! Lowest eigenpairs of a real symmetric operator given only `y = A·x`.
//!
//! Each eigenpair comes from a restarted Lanczos iteration with full
//! reorthogonalisation, run on the complement of a locked set of
//! orthonormal vectors. Found eigenvectors join the locked set, so pairs are
//! produced in ascending order, multiplicities included.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;

use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Krylov dimension per restart.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Residual `‖A x − λ x‖` at which a pair is accepted.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig { krylov: 80, max_restarts: 400, tol: 1e-8, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the components along `basis` (orthonormal), twice for stability.
fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, x);
            axpy(x, -c, b);
        }
    }
}

/// Lowest eigenpair of `A` restricted to the orthogonal complement of
/// `locked`.
pub fn lowest_in_complement<F>(apply: &F, dim: usize, locked: &[Vec<f64>], cfg: &LanczosConfig, stream: u64) -> EigenPair
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut rng = rng::stream(cfg.seed, stream);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    project_out(&mut x, locked);
    let k_max = cfg.krylov.min(dim.saturating_sub(locked.len())).max(1);
    let mut best = EigenPair { value: f64::NAN, vector: vec![], residual: f64::INFINITY, converged: false };
    let mut w = vec![0.0; dim];

    for _ in 0..=cfg.max_restarts {
        let nx = norm(&x);
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha = Vec::with_capacity(k_max);
        let mut beta: Vec<f64> = Vec::with_capacity(k_max);
        for j in 0..k_max {
            apply(&basis[j], &mut w);
            let hn = norm(&w);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            // full reorthogonalisation against the locked set and the Krylov
            // basis; the off-diagonal terms of T come out of the norm
            for _ in 0..2 {
                project_out(&mut w, locked);
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(&mut w, -c, b);
                }
            }
            if j + 1 == k_max {
                break;
            }
            let mut bn = norm(&w);
            if bn <= 1e-10 * hn.max(1e-300) {
                // invariant subspace reached: continue with a fresh direction
                // so eigenvectors the start vector missed stay reachable
                w.iter_mut().for_each(|v| *v = rng.random::<f64>() * 2.0 - 1.0);
                for _ in 0..2 {
                    project_out(&mut w, locked);
                    for b in &basis {
                        let c = dot(b, &w);
                        axpy(&mut w, -c, b);
                    }
                }
                let fresh = norm(&w);
                if fresh < 1e-12 {
                    break;
                }
                w.iter_mut().for_each(|v| *v /= fresh);
                bn = 0.0;
                beta.push(bn);
                basis.push(w.clone());
                continue;
            }
            beta.push(bn);
            basis.push(w.iter().map(|v| v / bn).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tridiagonal");
        let y = eig.eigenvectors.column(imin);
        let mut ritz = vec![0.0; dim];
        for (i, b) in basis.iter().enumerate() {
            axpy(&mut ritz, y[i], b);
        }
        project_out(&mut ritz, locked);
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|v| *v /= nr);
        apply(&ritz, &mut w);
        project_out(&mut w, locked);
        let value = dot(&ritz, &w);
        axpy(&mut w, -value, &ritz);
        let residual = norm(&w);
        best = EigenPair { value, vector: ritz.clone(), residual, converged: residual < cfg.tol };
        if best.converged {
            break;
        }
        x = ritz;
    }
    best
}

/// The `k` lowest eigenpairs in ascending order, after the `locked`
/// orthonormal vectors (which are excluded).
pub fn lowest_eigenpairs<F>(apply: &F, dim: usize, k: usize, locked: &[Vec<f64>], cfg: &LanczosConfig) -> Vec<EigenPair>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut lock: Vec<Vec<f64>> = locked.to_vec();
    let mut out = Vec::with_capacity(k);
    for i in 0..k.min(dim.saturating_sub(locked.len())) {
        let p = lowest_in_complement(apply, dim, &lock, cfg, i as u64);
        lock.push(p.vector.clone());
        out.push(p);
    }
    out
}

/// Orthonormal basis of the span of `vectors` via the Gram matrix:
/// `Q = V·U·Λ^{−1/2}` with `G = UΛUᵀ`.
pub fn orthonormalize(vectors: &[Vec<f64>], gram: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let eig = SymmetricEigen::new(gram.clone());
    let dim = vectors.first().map_or(0, Vec::len);
    (0..vectors.len())
        .map(|k| {
            let s = eig.eigenvalues[k].sqrt().recip();
            let mut q = vec![0.0; dim];
            for (j, v) in vectors.iter().enumerate() {
                axpy(&mut q, eig.eigenvectors[(j, k)] * s, v);
            }
            q
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        }
    }

    #[test]
    fn finds_ascending_with_multiplicity() {
        let d: Vec<f64> = (0..300).map(|i| if i < 2 { 0.0 } else { 0.1 + i as f64 * 0.01 }).collect();
        let op = diag_op(d);
        let ps = lowest_eigenpairs(&op, 300, 4, &[], &LanczosConfig::default());
        let vals: Vec<f64> = ps.iter().map(|p| p.value).collect();
        assert!(vals[0].abs() < 1e-12 && vals[1].abs() < 1e-12, "{vals:?}");
        assert!((vals[2] - 0.12).abs() < 1e-10 && (vals[3] - 0.13).abs() < 1e-10, "{vals:?}");
        assert!(ps.iter().all(|p| p.converged));
    }

    #[test]
    fn dense_symmetric_matches_nalgebra() {
        let n = 60;
        let mut r = crate::rng::seeded(1);
        let mut a = DMatrix::<f64>::from_fn(n, n, |_, _| r.random::<f64>() - 0.5);
        a = &a + a.transpose();
        let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        let op = |x: &[f64], y: &mut [f64]| {
            let v = &a * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        };
        let ps = lowest_eigenpairs(&op, n, 3, &[], &LanczosConfig::default());
        for i in 0..3 {
            assert!((ps[i].value - ev[i]).abs() < 1e-9, "{} vs {}", ps[i].value, ev[i]);
        }
    }

    #[test]
    fn locked_vectors_are_skipped() {
        let op = diag_op(vec![0.0, 1.0, 2.0, 3.0]);
        let e0 = vec![1.0, 0.0, 0.0, 0.0];
        let ps = lowest_eigenpairs(&op, 4, 1, &[e0], &LanczosConfig::default());
        assert!((ps[0].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_orthonormalization() {
        let v = vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        let g = DMatrix::from_fn(2, 2, |i, j| dot(&v[i], &v[j]));
        let q = orthonormalize(&v, &g);
        assert!((dot(&q[0], &q[0]) - 1.0).abs() < 1e-12);
        assert!((dot(&q[1], &q[1]) - 1.0).abs() < 1e-12);
        assert!(dot(&q[0], &q[1]).abs() < 1e-12);
        assert!(q.iter().all(|x| x[2] == 0.0));
    }
}
