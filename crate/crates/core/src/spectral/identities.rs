use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{gap_of, DiscreteOperator, SpectralResult};
use crate::check::{CheckItem, CheckReport};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::moments::moment_report;
use crate::quadrature::{check_leakage, integrate_with, node_densities};

type Scalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type Matrix = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A smooth test function with analytic gradient and Hessian.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    value: Scalar,
    grad: Vector,
    hess: Matrix,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        (self.hess)(x)
    }

    /// `x_axis^p`.
    pub fn power(n: usize, axis: usize, p: i32) -> Self {
        let pf = p as f64;
        Self::new(
            if p == 1 { format!("x{}", axis + 1) } else { format!("x{}^{p}", axis + 1) },
            move |x| x[axis].powi(p),
            move |x| {
                let mut g = vec![0.0; n];
                g[axis] = pf * x[axis].powi(p - 1);
                g
            },
            move |x| {
                let mut h = DMatrix::zeros(n, n);
                if p >= 2 {
                    h[(axis, axis)] = pf * (pf - 1.0) * x[axis].powi(p - 2);
                }
                h
            },
        )
    }

    /// `sin(ω x_axis)`.
    pub fn sine(n: usize, axis: usize, omega: f64) -> Self {
        Self::new(
            format!("sin({omega}*x{})", axis + 1),
            move |x| (omega * x[axis]).sin(),
            move |x| {
                let mut g = vec![0.0; n];
                g[axis] = omega * (omega * x[axis]).cos();
                g
            },
            move |x| {
                let mut h = DMatrix::zeros(n, n);
                h[(axis, axis)] = -omega * omega * (omega * x[axis]).sin();
                h
            },
        )
    }

    /// `x_1 x_2 + x_1²/2`.
    pub fn mixed(n: usize) -> Self {
        assert!(n >= 2, "mixed test function needs n >= 2");
        Self::new(
            "x1*x2+x1^2/2",
            |x| x[0] * x[1] + 0.5 * x[0] * x[0],
            move |x| {
                let mut g = vec![0.0; n];
                g[0] = x[1] + x[0];
                g[1] = x[0];
                g
            },
            move |_| {
                let mut h = DMatrix::zeros(n, n);
                h[(0, 0)] = 1.0;
                h[(0, 1)] = 1.0;
                h[(1, 0)] = 1.0;
                h
            },
        )
    }

    /// `|x - c|²`.
    pub fn squared_distance(c: Vec<f64>) -> Self {
        let n = c.len();
        let c2 = c.clone();
        Self::new(
            "|x-b|^2",
            move |x| x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum(),
            move |x| x.iter().zip(&c2).map(|(a, b)| 2.0 * (a - b)).collect(),
            move |_| DMatrix::identity(n, n) * 2.0,
        )
    }

    /// Names accepted by configs: `x`, `x2`, `x3`, `sin`, `mixed`.
    pub fn named(name: &str, n: usize) -> Result<Self> {
        match name {
            "x" => Ok(Self::power(n, 0, 1)),
            "x2" => Ok(Self::power(n, 0, 2)),
            "x3" => Ok(Self::power(n, 0, 3)),
            "sin" => Ok(Self::sine(n, 0, 1.0)),
            "mixed" if n >= 2 => Ok(Self::mixed(n)),
            other => Err(Error::Parse {
                spec: other.to_string(),
                reason: format!("unknown test function for dimension {n}"),
            }),
        }
    }

    /// `L u = Δu - ∇ψ·∇u` at `x`, given `∇ψ(x)`.
    fn generator(&self, x: &[f64], grad_psi: &[f64]) -> f64 {
        let h = self.hess(x);
        let g = self.grad(x);
        h.trace() - grad_psi.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// The three terms of the integrated Bochner formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    /// `∫ (Lu)² dμ`
    pub lhs: f64,
    /// `∫ ‖∇²u‖²_HS dμ`
    pub hessian_term: f64,
    /// `∫ ⟨∇²ψ ∇u, ∇u⟩ dμ`
    pub curvature_term: f64,
    /// `|lhs - hessian_term - curvature_term| / lhs`
    pub residual: f64,
}

impl BochnerReport {
    fn new(lhs: f64, hessian_term: f64, curvature_term: f64) -> Self {
        Self {
            lhs,
            hessian_term,
            curvature_term,
            residual: (lhs - hessian_term - curvature_term).abs() / lhs.abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// Bochner terms for an analytic test function, each by quadrature on `grid`.
pub fn bochner_residual(d: &Density, u: &TestFunction, grid: &Grid) -> Result<BochnerReport> {
    let n = d.dim();
    let rho = node_densities(d, grid);
    check_leakage(d, grid, &rho)?;
    let lhs = integrate_with(
        &|x: &[f64]| {
            let dv = d.derivs(x);
            u.generator(x, &dv.grad_psi).powi(2)
        },
        n,
        grid,
        &rho,
    );
    let hess = integrate_with(&|x: &[f64]| u.hess(x).norm_squared(), n, grid, &rho);
    let curv = integrate_with(
        &|x: &[f64]| {
            let g = nalgebra::DVector::from_vec(u.grad(x));
            (d.hess_psi(x) * &g).dot(&g)
        },
        n,
        grid,
        &rho,
    );
    Ok(BochnerReport::new(lhs, hess, curv))
}

/// Central-difference gradients at every node (one-sided where a
/// neighbour is missing).
fn node_gradients(op: &DiscreteOperator, f: &[f64]) -> Vec<Vec<f64>> {
    let n = op.dim();
    (0..op.len())
        .map(|i| {
            (0..n)
                .map(|k| {
                    let (a, b) = match (op.neighbor(i, k, false), op.neighbor(i, k, true)) {
                        (Some(a), Some(b)) => (a, b),
                        (None, Some(b)) => (i, b),
                        (Some(a), None) => (a, i),
                        (None, None) => return 0.0,
                    };
                    (f[b] - f[a]) / (op.coord(b, k) - op.coord(a, k))
                })
                .collect()
        })
        .collect()
}

/// Discrete `∫ ⟨∇²ψ ∇f, ∇f⟩ dμ`: bond form in 1D, node gradients otherwise.
pub(super) fn curvature_form(op: &DiscreteOperator, f: &[f64]) -> f64 {
    let d = op.density();
    let n = op.dim();
    if n == 1 {
        return op
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (op.coord(e.i, 0), op.coord(e.j, 0));
                let h = d.hess_psi(&[0.5 * (a + b)])[(0, 0)];
                e.coupling * h * (f[e.j] - f[e.i]).powi(2)
            })
            .sum();
    }
    let grads = node_gradients(op, f);
    (0..op.len())
        .map(|i| {
            let h = d.hess_psi(&op.point(i));
            let g = nalgebra::DVector::from_column_slice(&grads[i]);
            op.mass()[i] * (h * &g).dot(&g)
        })
        .sum()
}

/// Discrete `∫ ‖∇²f‖²_HS dμ` from second differences, reflecting where a
/// neighbour is missing.
fn hessian_form(op: &DiscreteOperator, f: &[f64]) -> f64 {
    let grid = op.grid();
    let n = op.dim();
    let grads = node_gradients(op, f);
    (0..op.len())
        .map(|i| {
            let mut hs = 0.0;
            for k in 0..n {
                let h = grid.spacing(k);
                let second = match (op.neighbor(i, k, false), op.neighbor(i, k, true)) {
                    (Some(a), Some(b)) => (f[b] - 2.0 * f[i] + f[a]) / (h * h),
                    (None, Some(b)) => 2.0 * (f[b] - f[i]) / (h * h),
                    (Some(a), None) => 2.0 * (f[a] - f[i]) / (h * h),
                    (None, None) => 0.0,
                };
                hs += second * second;
                for l in 0..n {
                    if l == k {
                        continue;
                    }
                    let (a, b) = match (op.neighbor(i, l, false), op.neighbor(i, l, true)) {
                        (Some(a), Some(b)) => (a, b),
                        (None, Some(b)) => (i, b),
                        (Some(a), None) => (a, i),
                        (None, None) => continue,
                    };
                    let mixed = (grads[b][k] - grads[a][k]) / (op.coord(b, l) - op.coord(a, l));
                    hs += mixed * mixed;
                }
            }
            op.mass()[i] * hs
        })
        .sum()
}

/// Bochner terms for the computed grid eigenfunction with discrete
/// derivatives.
pub fn bochner_eigenfunction(op: &DiscreteOperator, spec: &SpectralResult) -> BochnerReport {
    let f = &spec.eigenfunction;
    let lf = op.apply(f);
    let lhs = op.inner(&lf, &lf);
    BochnerReport::new(lhs, hessian_form(op, f), curvature_form(op, f))
}

/// Discrete covariance of the node measure.
pub fn discrete_covariance(op: &DiscreteOperator) -> DMatrix<f64> {
    let n = op.dim();
    let xs: Vec<Vec<f64>> = (0..n).map(|k| op.coordinate(k)).collect();
    let means: Vec<f64> = xs.iter().map(|x| op.mean(x)).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let a: Vec<f64> = xs[i].iter().map(|v| v - means[i]).collect();
        let b: Vec<f64> = xs[j].iter().map(|v| v - means[j]).collect();
        op.inner(&a, &b)
    })
}

/// For the normalized eigenfunction `f`:
/// (a) `|∫∇f dμ|² ≥ λ⁻¹ ∫⟨∇²ψ∇f,∇f⟩ dμ`;
/// (b) `|∫∇f dμ|² = λ² |∫ f x dμ|²`;
/// (c) `λ² |∫ f x dμ|² ≤ λ² ‖Cov‖_op`.
pub fn eigen_direction_check(d: &Density, grid: &Grid) -> Result<CheckReport> {
    let op = &super::build_operator(d, grid)?;
    let spec = gap_of(op)?;
    let lambda = spec.lambda;
    let f = &spec.eigenfunction;
    let g = op.mean_gradient(f);
    let grad_sq: f64 = g.iter().map(|v| v * v).sum();
    let fx: f64 = (0..op.dim())
        .map(|k| op.inner(f, &op.coordinate(k)).powi(2))
        .sum();
    let curvature = curvature_form(op, f);
    let cov = crate::linalg::op_norm_psd(&discrete_covariance(op));
    let mut r = CheckReport::new("eigen_direction", op.density().to_string());
    r.push(CheckItem::at_least("(a) |E grad f|^2 >= E<Hess psi grad f, grad f>/lambda", grad_sq, curvature / lambda, 1e-4));
    r.push(CheckItem::close_rel("(b) |E grad f|^2 = lambda^2 |E f x|^2", grad_sq, lambda * lambda * fx, 1e-6));
    r.push(CheckItem::at_most("(c) lambda^2 |E f x|^2 <= lambda^2 ||Cov||", lambda * lambda * fx, lambda * lambda * cov, 1e-4));
    r.push(CheckItem::observe("lambda", lambda, lambda));
    Ok(r)
}

/// `1/λ ≤ √(‖Cov‖/t) ≤ 1/t` for a `t`-uniformly log-concave density.
pub fn lichnerowicz_check(d: &Density, grid: &Grid) -> Result<CheckReport> {
    let t = d.uniform_convexity_t();
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("{d} is not uniformly log-concave")));
    }
    let spec = super::spectral_gap(d, grid)?;
    let cov = moment_report(d, &d.moment_grid())?.op_norm;
    let improved = (cov / t).sqrt();
    let mut r = CheckReport::new("lichnerowicz", d.to_string());
    r.push(CheckItem::at_most("C_P <= sqrt(||Cov||/t)", spec.c_p, improved, 1e-3));
    r.push(CheckItem::at_most("sqrt(||Cov||/t) <= 1/t", improved, 1.0 / t, 1e-3));
    r.push(CheckItem::observe("improvement over 1/t", 1.0 - improved * t, 0.0));
    r.push(CheckItem::observe("C_P * t", spec.c_p * t, 1.0));
    Ok(r)
}
