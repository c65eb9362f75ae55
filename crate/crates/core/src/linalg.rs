//! Dense and banded kernels for the small problems this crate solves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues of a symmetric matrix in descending order, by power
/// iteration with Hotelling deflation. Intended for n <= 3.
pub fn power_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    // Shift to make the matrix positive semi-definite so the dominant
    // eigenvalue is the largest one.
    let gersh = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] += gersh;
    }
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        // Deterministic start vector with a component along every axis.
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i + k) as f64);
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let w = &a * &v;
            let nw = w.norm();
            if nw == 0.0 {
                lambda = 0.0;
                break;
            }
            let next = w / nw;
            let new_lambda = next.dot(&(&a * &next));
            let converged = (next.clone() - &v).norm() < 1e-14 || (new_lambda - lambda).abs() <= 1e-15 * new_lambda.abs();
            v = next;
            lambda = new_lambda;
            if converged {
                break;
            }
        }
        values.push(lambda - gersh);
        a -= lambda * &v * v.transpose();
    }
    values
}

/// Operator norm of a symmetric positive semi-definite matrix.
pub fn op_norm_psd(m: &DMatrix<f64>) -> f64 {
    power_eigenvalues(m)[0]
}

pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(0.0, f64::max);
    if !(min > 1e-12 * max.max(1e-300)) {
        return Err(Error::SingularCovariance(min));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| 1.0 / v.sqrt()),
    ));
    Ok(&vecs * d * vecs.transpose())
}

/// Symmetric tridiagonal matrix: `diag[i]`, `off[i]` couples i and i+1.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence via LDLᵀ).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            d = self.diag[i] - x - if i > 0 { e2 / d } else { 0.0 };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = (if i > 0 { self.off[i - 1].abs() } else { 0.0 })
                + (if i + 1 < n { self.off[i].abs() } else { 0.0 });
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solve `(T - shift) x = b` by Gaussian elimination with partial pivoting.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            let d = self.diag[0] - shift;
            return vec![b[0] / if d == 0.0 { 1e-300 } else { d }];
        }
        // Row i after pivoting holds up to three nonzeros: u0 (col i), u1, u2.
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        let mut cur0 = self.diag[0] - shift;
        let mut cur1 = self.off[0];
        let mut cur2 = 0.0;
        for i in 0..n - 1 {
            let sub = self.off[i];
            let mut nd = self.diag[i + 1] - shift;
            let mut nu = if i + 2 < n { self.off[i + 1] } else { 0.0 };
            let mut n2 = 0.0;
            if sub.abs() > cur0.abs() {
                // swap rows i and i+1
                let (a0, a1, a2) = (sub, nd, nu);
                let (b0, b1, b2) = (cur0, cur1, cur2);
                rhs.swap(i, i + 1);
                let f = b0 / a0;
                u0[i] = a0;
                u1[i] = a1;
                u2[i] = a2;
                nd = b1 - f * a1;
                nu = b2 - f * a2;
                n2 = 0.0;
                rhs[i + 1] -= f * rhs[i];
            } else {
                let f = if cur0 == 0.0 { 0.0 } else { sub / cur0 };
                u0[i] = cur0;
                u1[i] = cur1;
                u2[i] = cur2;
                nd -= f * cur1;
                nu -= f * cur2;
                rhs[i + 1] -= f * rhs[i];
            }
            cur0 = nd;
            cur1 = nu;
            cur2 = n2;
        }
        u0[n - 1] = cur0;
        let mut x = vec![0.0; n];
        let guard = |v: f64| if v == 0.0 { 1e-300 } else { v };
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / guard(u0[i]);
        }
        x
    }
}

/// Dot product with four independent accumulators, which lets the
/// compiler vectorize the loop.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let (x, y) = (&a[4 * c..4 * c + 4], &b[4 * c..4 * c + 4]);
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..n {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite band
/// matrix with half-bandwidth `w`. Row `i` of `L` keeps columns
/// `i-w ..= i`, left-padded with zeros.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    w: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix whose lower entries are `entry(i, j)` for
    /// `i - w ≤ j ≤ i`.
    pub fn factor(n: usize, w: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let stride = w + 1;
        let mut l = vec![0.0; n * stride];
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let (done, rest) = l.split_at_mut(i * stride);
            let row = &mut rest[..stride];
            // row[c] holds L[i][i - w + c]
            for j in lo..=i {
                let start = lo.max(j.saturating_sub(w));
                let ci = j + w - i;
                let mut s = entry(i, j);
                if j < i {
                    let rj = &done[j * stride..(j + 1) * stride];
                    let cj0 = start + w - j;
                    s -= dot4(&row[start + w - i..ci], &rj[cj0..w]);
                    row[ci] = s / rj[w];
                } else {
                    s -= dot4(&row[start + w - i..w], &row[start + w - i..w]);
                    if !(s > 0.0) {
                        return Err(Error::SingularSolve(format!("band Cholesky pivot {s:.3e} at row {i}")));
                    }
                    row[w] = s.sqrt();
                }
            }
        }
        Ok(Self { n, w, l })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_many(&[b.to_vec()]).remove(0)
    }

    /// Solves `A x = b` for several right-hand sides in one sweep over `L`.
    pub fn solve_many(&self, bs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (n, w, stride) = (self.n, self.w, self.w + 1);
        let mut ys: Vec<Vec<f64>> = bs.to_vec();
        for i in 0..n {
            let row = &self.l[i * stride..(i + 1) * stride];
            let lo = i.saturating_sub(w);
            let seg = &row[lo + w - i..w];
            for y in ys.iter_mut() {
                let s = y[i] - dot4(seg, &y[lo..i]);
                y[i] = s / row[w];
            }
        }
        for i in (0..n).rev() {
            let row = &self.l[i * stride..(i + 1) * stride];
            let lo = i.saturating_sub(w);
            let seg = &row[lo + w - i..w];
            for y in ys.iter_mut() {
                y[i] /= row[w];
                let xi = y[i];
                for (t, l) in y[lo..i].iter_mut().zip(seg) {
                    *t -= l * xi;
                }
            }
        }
        ys
    }
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi-)definite operator. When `deflate` is given (unit vector), the
/// iteration is kept orthogonal to it, which handles a one-dimensional kernel.
pub fn pcg<F>(
    apply: F,
    b: &[f64],
    precond: &[f64],
    deflate: Option<&[f64]>,
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let project = |v: &mut Vec<f64>| {
        if let Some(z) = deflate {
            let c = dot(v, z);
            for (vi, zi) in v.iter_mut().zip(z) {
                *vi -= c * zi;
            }
        }
    };
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    project(&mut x);
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(r, p)| r * p).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SingularSolve(format!(
                "operator not positive along search direction (pAp = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        z = r.iter().zip(precond).map(|(r, p)| r * p).collect();
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm(&r) / bnorm;
    }
    if rel <= tol * 10.0 {
        project(&mut x);
        return Ok(CgOutcome {
            x,
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_matches_dense_solve() {
        let n = 30;
        let w = 4;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            if d == 0 {
                10.0 + i as f64 * 0.1
            } else if d <= w {
                ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6
            } else {
                0.0
            }
        });
        let band = BandCholesky::factor(n, w, |i, j| a[(i, j)]).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = band.solve(&b);
        let expected = a.clone().cholesky().unwrap().solve(&DVector::from_vec(b));
        for (p, q) in x.iter().zip(expected.iter()) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
        assert!(BandCholesky::factor(2, 1, |i, j| if i == j { 1.0 } else { 2.0 }).is_err());
    }

    #[test]
    fn power_iteration_matches_symmetric_eigen() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 1.0]);
        let mut reference = sym_eigen(&m).0;
        reference.sort_by(|a, b| b.total_cmp(a));
        let ours = power_eigenvalues(&m);
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn power_iteration_handles_degenerate_spectrum() {
        let m = DMatrix::<f64>::identity(3, 3) * 2.5;
        for v in power_eigenvalues(&m) {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_bisection_recovers_path_laplacian_spectrum() {
        let n = 50;
        let t = SymTridiagonal {
            diag: (0..n).map(|i| if i == 0 || i == n - 1 { 1.0 } else { 2.0 }).collect(),
            off: vec![-1.0; n - 1],
        };
        // Neumann path Laplacian: 2 - 2 cos(k pi / n)
        for k in 0..5 {
            let exact = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoted_tridiagonal_solve() {
        let t = SymTridiagonal {
            diag: vec![0.0, 1.0, 3.0, 2.0],
            off: vec![2.0, -1.0, 0.5],
        };
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b = t.apply(&x);
        let got = t.solve_shifted(0.0, &b);
        for (a, e) in got.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
        let shifted: Vec<f64> = t.apply(&x).iter().zip(&x).map(|(b, x)| b - 0.7 * x).collect();
        let got = t.solve_shifted(0.7, &shifted);
        for (a, e) in got.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let t = SymTridiagonal {
            diag: vec![4.0; 30],
            off: vec![-1.0; 29],
        };
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let b = t.apply(&x);
        let out = pcg(|v| t.apply(v), &b, &[0.25; 30], None, None, 1e-13, 200).unwrap();
        for (a, e) in out.x.iter().zip(&x) {
            assert!((a - e).abs() < 1e-10);
        }
    }
}
