//! Discretized weighted Laplacian, spectral gap, and the integrated
//! identities and inequalities built on it.

mod dual;
mod identities;
mod operator;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{dot, norm, BandCholesky};

pub use dual::{
    cube_root_bound_check, dual_identities_check, h_minus_one_norm, h_minus_one_report, linear_gram, HMinusOne,
};
pub use identities::{
    bochner_eigenfunction, bochner_residual, discrete_covariance, eigen_direction_check, lichnerowicz_check, BochnerReport,
    TestFunction,
};
pub use operator::{build_operator, DiscreteOperator, Edge};

/// First nonzero eigenvalue of `-L` with its eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub lambda: f64,
    pub c_p: f64,
    /// `‖(-L)f - λ f‖_{L²(μ)}` for the normalized eigenfunction.
    pub residual: f64,
    pub iterations: usize,
    /// Grid values, `‖f‖_{L²(μ)} = 1`, `∫ f dμ = 0`.
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
}

const BLOCK: usize = 4;
const MAX_OUTER: usize = 400;

/// Spectral gap of `d` on `grid`.
pub fn spectral_gap(d: &Density, grid: &Grid) -> Result<SpectralResult> {
    let op = build_operator(d, grid)?;
    gap_of(&op)
}

/// Spectral gap of an assembled operator. In 1D the symmetrized
/// tridiagonal form is bisected with Sturm counts and the eigenvector found
/// by inverse iteration; otherwise block inverse iteration with
/// Rayleigh–Ritz runs on the symmetrized form, deflating `√m`.
pub fn gap_of(op: &DiscreteOperator) -> Result<SpectralResult> {
    if let Some(t) = op.tridiagonal() {
        let lambda = t.eigenvalue(1);
        let v0 = op.ground_state();
        let mut q: Vec<f64> = op
            .coordinate(0)
            .iter()
            .zip(v0)
            .map(|(x, s)| s * (x + 0.1))
            .collect();
        let mut iterations = 0;
        for _ in 0..4 {
            deflate(&mut q, v0);
            normalize(&mut q);
            q = t.solve_shifted(lambda, &q);
            iterations += 1;
        }
        deflate(&mut q, v0);
        normalize(&mut q);
        return Ok(finish(op, q, iterations));
    }
    block_inverse_iteration(op)
}

fn deflate(q: &mut [f64], v0: &[f64]) {
    let c = dot(q, v0);
    q.iter_mut().zip(v0).for_each(|(a, b)| *a -= c * b);
}

fn normalize(q: &mut [f64]) {
    let n = norm(q);
    if n > 0.0 {
        q.iter_mut().for_each(|a| *a /= n);
    }
}

/// Builds the result from a unit symmetrized eigenvector.
fn finish(op: &DiscreteOperator, mut q: Vec<f64>, iterations: usize) -> SpectralResult {
    let sq = op.apply_symmetric(&q);
    let lambda = dot(&q, &sq);
    let residual = sq
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut f: Vec<f64> = q.iter().zip(op.ground_state()).map(|(a, s)| a / s).collect();
    // Fix the sign: positive correlation with the first coordinate that
    // carries any.
    let sign = (0..op.dim())
        .map(|k| op.inner(&f, &op.coordinate(k)))
        .find(|c| c.abs() > 1e-8)
        .map(|c| c.signum())
        .unwrap_or(1.0);
    if sign < 0.0 {
        f.iter_mut().for_each(|v| *v = -*v);
        q.iter_mut().for_each(|v| *v = -*v);
    }
    SpectralResult {
        lambda,
        c_p: 1.0 / lambda,
        residual,
        iterations,
        eigenfunction: f,
    }
}

fn orthonormalize(vs: &mut Vec<Vec<f64>>, v0: &[f64]) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        for _ in 0..2 {
            deflate(&mut v, v0);
            for u in &out {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|a| *a /= n);
            out.push(v);
        }
    }
    *vs = out;
}

/// Work limit (nodes × bandwidth²) for the banded Cholesky path; larger
/// lattices fall back to preconditioned CG.
const FACTOR_BUDGET: f64 = 2e9;
const BLOCK_DIRECT: usize = 8;

/// Cholesky factor of `S + τ I` in natural lattice order, when affordable.
fn shifted_factor(op: &DiscreteOperator, tau: f64) -> Option<BandCholesky> {
    let w = op.edges().iter().map(|e| e.j.abs_diff(e.i)).max().unwrap_or(0);
    if op.len() as f64 * (w * w) as f64 > FACTOR_BUDGET {
        return None;
    }
    let sm = op.ground_state();
    let diag = op.symmetric_diagonal();
    let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); op.len()];
    for e in op.edges() {
        let (hi, lo) = (e.i.max(e.j), e.i.min(e.j));
        lower[hi].push((lo, -e.coupling / (sm[e.i] * sm[e.j])));
    }
    BandCholesky::factor(op.len(), w, |i, j| {
        if i == j {
            diag[i] + tau
        } else {
            lower[i].iter().filter(|p| p.0 == j).map(|p| p.1).sum()
        }
    })
    .ok()
}

/// Starting block: low-degree monomials in the coordinates.
fn seeds(op: &DiscreteOperator, count: usize) -> Vec<Vec<f64>> {
    let n = op.dim();
    let x: Vec<Vec<f64>> = (0..n).map(|k| op.coordinate(k)).collect();
    let prod = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p * q).collect() };
    let mut out: Vec<Vec<f64>> = x.clone();
    for k in 0..n {
        for l in k..n {
            out.push(prod(&x[k], &x[l]));
        }
    }
    for k in 0..n {
        out.push(prod(&prod(&x[k], &x[k]), &x[k]));
    }
    if n > 1 {
        out.push(prod(&prod(&x[0], &x[0]), &x[1]));
    }
    out.truncate(count);
    out
}

fn block_inverse_iteration(op: &DiscreteOperator) -> Result<SpectralResult> {
    let v0 = op.ground_state().to_vec();
    let scale = op.symmetric_diagonal().iter().copied().fold(0.0, f64::max);
    let factor = shifted_factor(op, 1e-10 * scale);
    let block = if factor.is_some() { BLOCK_DIRECT } else { BLOCK };
    let mut basis: Vec<Vec<f64>> = seeds(op, block)
        .into_iter()
        .map(|f| f.iter().zip(&v0).map(|(a, s)| a * s).collect())
        .collect();
    orthonormalize(&mut basis, &v0);
    let mut ritz: Vec<f64> = vec![1.0; basis.len()];
    for it in 1..=MAX_OUTER {
        let mut next = match &factor {
            Some(chol) => chol.solve_many(&basis),
            None => {
                let mut next = Vec::with_capacity(basis.len());
                for (v, theta) in basis.iter().zip(&ritz) {
                    let guess: Vec<f64> = v.iter().map(|a| a / theta.max(1e-12)).collect();
                    next.push(op.solve_symmetric(v, Some(&guess), 1e-13)?.x);
                }
                next
            }
        };
        orthonormalize(&mut next, &v0);
        let images: Vec<Vec<f64>> = next.iter().map(|v| op.apply_symmetric(v)).collect();
        let k = next.len();
        let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&next[i], &images[j]) + dot(&next[j], &images[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        basis = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; op.len()];
                for (r, w) in next.iter().enumerate() {
                    let coef = eig.eigenvectors[(r, c)];
                    v.iter_mut().zip(w).for_each(|(a, b)| *a += coef * b);
                }
                v
            })
            .collect();
        ritz = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let first = &basis[0];
        let img = op.apply_symmetric(first);
        let res = img
            .iter()
            .zip(first)
            .map(|(a, b)| (a - ritz[0] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= 1e-10 * ritz[0] {
            let mut q = basis.swap_remove(0);
            deflate(&mut q, &v0);
            normalize(&mut q);
            return Ok(finish(op, q, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_OUTER,
        residual: f64::NAN,
    })
}

/// Independent route for the gap: inverse iteration on the weighted form
/// `-L = M⁻¹K` with the `L²(μ)` inner product, using [`DiscreteOperator::solve`].
pub fn weighted_gap(op: &DiscreteOperator, tol: f64, max_iter: usize) -> Result<f64> {
    let n = op.dim();
    let mut f: Vec<f64> = (0..op.len())
        .map(|i| (0..n).map(|k| op.coord(i, k) * (1.0 + 0.3 * k as f64)).sum::<f64>())
        .collect();
    let mut lambda = f64::NAN;
    for _ in 0..max_iter {
        let m = op.mean(&f);
        f.iter_mut().for_each(|v| *v -= m);
        let s = op.inner(&f, &f).sqrt();
        f.iter_mut().for_each(|v| *v /= s);
        let g = op.solve(&f)?;
        // Rayleigh quotient of g: E(g,g)/‖g‖² with E(g,g) = ⟨f, g⟩.
        let next = op.inner(&f, &g) / op.inner(&g, &g);
        let done = (next - lambda).abs() <= tol * next;
        lambda = next;
        f = g;
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_gap_is_one() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let r = spectral_gap(&g, &g.default_grid()).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-3, "{}", r.lambda);
        assert!(r.residual <= 1e-8 * r.lambda, "{}", r.residual);
    }

    #[test]
    fn operator_kills_constants_and_is_adjoint() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let op = build_operator(&g, &Grid::line(-8.0, 8.0, 401).unwrap()).unwrap();
        let one = vec![1.0; op.len()];
        assert!(norm(&op.apply_stiffness(&one)) <= 1e-14 * norm(&op.symmetric_diagonal()).max(1.0));
        let u = op.sample(|x| x[0].sin());
        let v = op.sample(|x| x[0] * x[0]);
        let lhs = op.inner(&op.apply(&u), &v);
        assert!((lhs - op.dirichlet(&u, &v)).abs() <= 1e-12 * lhs.abs().max(1.0));
    }
}
