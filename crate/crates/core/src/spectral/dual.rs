use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::identities::discrete_covariance;
use super::{build_operator, gap_of, DiscreteOperator};
use crate::check::{CheckItem, CheckReport};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::op_norm_psd;

/// `‖f‖_{H⁻¹(μ)}` together with the `L²` size of the centred `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMinusOne {
    pub norm: f64,
    pub norm_sq: f64,
    /// `‖f - ∫f‖²_{L²(μ)}`
    pub l2_sq: f64,
}

impl HMinusOne {
    /// `‖f‖²_{H⁻¹} = -∫ (L⁻¹f) f dμ` for grid values `f`, centred first. In
    /// 1D the flux through each bond is `Σ_{j≤i} m_j f_j` and the norm is
    /// `Σ flux²/c`; otherwise `-L g = f` is solved.
    pub fn of(op: &DiscreteOperator, f: &[f64]) -> Result<Self> {
        let mean = op.mean(f);
        let fc: Vec<f64> = f.iter().map(|v| v - mean).collect();
        let l2_sq = op.inner(&fc, &fc);
        let norm_sq = if op.dim() == 1 {
            let mut flux = 0.0;
            let mut acc = 0.0;
            for (k, e) in op.edges().iter().enumerate() {
                flux += op.mass()[k] * fc[k];
                acc += flux * flux / e.coupling;
            }
            acc
        } else {
            let g = op.solve(&fc)?;
            op.inner(&g, &fc).max(0.0)
        };
        Ok(Self {
            norm: norm_sq.sqrt(),
            norm_sq,
            l2_sq,
        })
    }
}

/// `‖f - ∫f dμ‖_{H⁻¹(μ)}` on `grid`.
pub fn h_minus_one_norm<F>(d: &Density, f: F, grid: &Grid) -> Result<HMinusOne>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let op = build_operator(d, grid)?;
    HMinusOne::of(&op, &op.sample(f))
}

/// The norm with the dual Poincaré check `λ ‖f‖²_{H⁻¹} ≤ ‖f‖²_{L²}`.
pub fn h_minus_one_report<F>(d: &Density, f: F, grid: &Grid) -> Result<(HMinusOne, CheckReport)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let op = build_operator(d, grid)?;
    let h = HMinusOne::of(&op, &op.sample(f))?;
    let lambda = gap_of(&op)?.lambda;
    let mut r = CheckReport::new("h_minus_one", d.to_string());
    r.push(CheckItem::at_most(
        "lambda ||f||^2_H-1 <= ||f||^2_L2",
        lambda * h.norm_sq,
        h.l2_sq,
        1e-9 * h.l2_sq.max(1e-300),
    ));
    r.push(CheckItem::observe("||f||^2_H-1", h.norm_sq, h.l2_sq / lambda));
    Ok((h, r))
}

/// Gram matrix `G_ij = ⟨(-L)⁻¹(x_i - b_i), x_j - b_j⟩_μ`; its top eigenvalue
/// is `sup_θ ‖⟨·,θ⟩‖²_{H⁻¹}`.
pub fn linear_gram(op: &DiscreteOperator) -> Result<DMatrix<f64>> {
    let n = op.dim();
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let x = op.coordinate(k);
            let m = op.mean(&x);
            x.into_iter().map(|v| v - m).collect()
        })
        .collect();
    if n == 1 {
        let h = HMinusOne::of(op, &xs[0])?;
        return Ok(DMatrix::from_element(1, 1, h.norm_sq));
    }
    let gs = xs.iter().map(|x| op.solve(x)).collect::<Result<Vec<_>>>()?;
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * (op.inner(&gs[i], &xs[j]) + op.inner(&gs[j], &xs[i])));
    Ok(g)
}

/// (a) `Σ_k ‖∂_kψ‖²_{H⁻¹} = n` (asserted for full-support densities);
/// (b) `Var(f) ≤ Σ_k ‖∂_k f‖²_{H⁻¹}` for `f = |x - b|²`;
/// (c) `Var_μ(ψ) ≤ n`.
pub fn dual_identities_check(d: &Density, grid: &Grid) -> Result<CheckReport> {
    let op = build_operator(d, grid)?;
    let n = d.dim() as f64;
    let derivs: Vec<_> = (0..op.len())
        .map(|i| d.derivs(&op.point(i)))
        .collect();
    let mut score = 0.0;
    for k in 0..d.dim() {
        let dk: Vec<f64> = derivs.iter().map(|dv| dv.grad_psi[k]).collect();
        score += HMinusOne::of(&op, &dk)?.norm_sq;
    }
    let mut r = CheckReport::new("dual_identities", d.to_string());
    let a = CheckItem::close_rel("(a) -E<L^-1 grad psi, grad psi> = n", score, n, 1e-3);
    r.push(if d.has_full_support() { a } else { a.observed() });

    let b: Vec<f64> = (0..d.dim()).map(|k| op.mean(&op.coordinate(k))).collect();
    let f: Vec<f64> = (0..op.len())
        .map(|i| (0..d.dim()).map(|k| (op.coord(i, k) - b[k]).powi(2)).sum())
        .collect();
    let mut rhs = 0.0;
    for k in 0..d.dim() {
        let dk: Vec<f64> = (0..op.len()).map(|i| 2.0 * (op.coord(i, k) - b[k])).collect();
        rhs += HMinusOne::of(&op, &dk)?.norm_sq;
    }
    let var_f = op.variance(&f);
    r.push(CheckItem::at_most("(b) Var(|x-b|^2) <= sum_k ||d_k f||^2_H-1", var_f, rhs, 1e-6 * rhs.max(1.0)));

    let psi: Vec<f64> = derivs.iter().map(|dv| -dv.log_density).collect();
    let varentropy = op.variance(&psi);
    r.push(CheckItem::at_most("(c) Var(psi) <= n", varentropy, n, 1e-3 * n));
    Ok(r)
}

/// `λ ≥ (t/R)^{1/3}` with `R = sup_θ ‖⟨·,θ⟩‖²_{H⁻¹}`.
pub fn cube_root_bound_check(d: &Density, grid: &Grid) -> Result<CheckReport> {
    let t = d.uniform_convexity_t();
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("{d} is not uniformly log-concave")));
    }
    let op = build_operator(d, grid)?;
    let lambda = gap_of(&op)?.lambda;
    let big_r = op_norm_psd(&linear_gram(&op)?);
    let bound = (t / big_r).cbrt();
    let mut r = CheckReport::new("cube_root_bound", d.to_string());
    r.push(CheckItem::at_least("lambda >= (t/R)^(1/3)", lambda, bound, 1e-3));
    r.push(CheckItem::observe("R", big_r, op_norm_psd(&discrete_covariance(&op)) / lambda));
    Ok(r)
}
