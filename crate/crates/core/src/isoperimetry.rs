//! Cheeger-type constants restricted to half-spaces, the Cheeger–Buser
//! sandwich, and variances of 1-Lipschitz witnesses.
//!
//! Convention: `h = inf ρ(∂A) / min(μ(A), 1-μ(A))` and `ψ_μ = 1/h`, so the
//! sandwich reads `1/4 ≤ ψ²/C_P = λ/h² ≤ π`.
//!
//! In one dimension half-lines are isoperimetric minimizers for log-concave
//! measures; this is assumed, not computed.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{CheckItem, CheckReport};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::{composite_gl, gauss_legendre, Grid};
use crate::linalg::sym_eigen;
use crate::slicing::{complement_basis, directions};
use crate::spectral::{build_operator, discrete_covariance, gap_of};

/// Masses below this are too small to divide by reliably.
const MIN_MASS: f64 = 1e-10;
const GOLDEN_STEPS: usize = 60;

/// The set `{⟨x, normal⟩ ≤ offset}` with its mass (at most 1/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub mass: f64,
}

/// Best half-space ratio found along one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProfile {
    pub normal: Vec<f64>,
    pub ratio: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub dim: usize,
    /// Exact in 1D; not computed otherwise.
    pub psi_mu: Option<f64>,
    /// `1/h` over half-spaces, never above `psi_mu`.
    pub psi_halfspace: f64,
    /// The infimal boundary-to-mass ratio `h` over the competitor class.
    pub cheeger: f64,
    pub minimizer: HalfSpace,
    /// `ψ²/C_P` when the spectral gap could be computed on the same grid.
    pub buser_ratio: Option<f64>,
    pub profiles: Vec<DirectionProfile>,
}

/// Density of `⟨X, u⟩` as a function of the offset.
struct Marginal<'a> {
    d: &'a Density,
    u: Vec<f64>,
    basis: Vec<Vec<f64>>,
    ys: Vec<f64>,
    yw: Vec<f64>,
}

impl Marginal<'_> {
    fn at(&self, s: f64) -> f64 {
        let n = self.d.dim();
        if let Some(body) = self.d.as_uniform() {
            return body.section_volume(&self.u, s) / body.volume();
        }
        if n == 1 {
            return self.d.density(&[s * self.u[0]]);
        }
        let mut x = vec![0.0; n];
        let mut acc = 0.0;
        let mut visit = |coef: &[f64], w: f64| {
            for c in 0..n {
                x[c] = s * self.u[c] + coef.iter().zip(&self.basis).map(|(a, e)| a * e[c]).sum::<f64>();
            }
            acc += w * self.d.density(&x);
        };
        for (i, yi) in self.ys.iter().enumerate() {
            if n == 2 {
                visit(&[*yi], self.yw[i]);
            } else {
                for (j, yj) in self.ys.iter().enumerate() {
                    visit(&[*yi, *yj], self.yw[i] * self.yw[j]);
                }
            }
        }
        acc
    }

    /// `∫_a^b` of the marginal by 8-point Gauss–Legendre.
    fn mass_between(&self, a: f64, b: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
        if b <= a {
            return 0.0;
        }
        if let Some(body) = self.d.as_uniform() {
            return (body.halfspace_volume(&self.u, a) - body.halfspace_volume(&self.u, b)) / body.volume();
        }
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        gl.0.iter().zip(&gl.1).map(|(z, w)| r * w * self.at(c + r * z)).sum()
    }
}

fn marginal<'a>(d: &'a Density, u: &[f64], grid: &Grid) -> Marginal<'a> {
    let n = d.dim();
    let (ys, yw) = if n == 1 || d.as_uniform().is_some() {
        (vec![], vec![])
    } else {
        let r = corners(grid).iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max).sqrt();
        let points = grid.axes()[0].n;
        composite_gl(-r, r, (points / 8).max(1), 8, &[])
    };
    Marginal {
        d,
        u: u.to_vec(),
        basis: complement_basis(u),
        ys,
        yw,
    }
}

fn corners(grid: &Grid) -> Vec<Vec<f64>> {
    let n = grid.dim();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|k| {
                    let ax = &grid.axes()[k];
                    if mask >> k & 1 == 1 { ax.hi } else { ax.lo }
                })
                .collect()
        })
        .collect()
}

/// Scans offsets `s` (ascending) for the smallest `g(s)/min(F(s), 1-F(s))`,
/// then refines by golden section between the neighbouring offsets. Lower
/// and upper tails are accumulated separately so neither suffers
/// cancellation. Returns `(ratio, offset, lower mass at offset)`.
fn scan(m: &Marginal<'_>, s: &[f64]) -> (f64, f64, f64) {
    let gl = gauss_legendre(8);
    let pieces: Vec<f64> = s.windows(2).map(|w| m.mass_between(w[0], w[1], &gl)).collect();
    let total: f64 = pieces.iter().sum();
    let mut lower = vec![0.0; s.len()];
    for i in 1..s.len() {
        lower[i] = lower[i - 1] + pieces[i - 1] / total;
    }
    let mut upper = vec![0.0; s.len()];
    for i in (0..s.len() - 1).rev() {
        upper[i] = upper[i + 1] + pieces[i] / total;
    }
    let ratio = |g: f64, lo: f64, up: f64| {
        let small = lo.min(up);
        if small < MIN_MASS {
            f64::INFINITY
        } else {
            g / total / small
        }
    };
    let values: Vec<f64> = s.iter().map(|&x| m.at(x)).collect();
    let (best, _) = (0..s.len())
        .map(|i| (i, ratio(values[i], lower[i], upper[i])))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut result = (ratio(values[best], lower[best], upper[best]), s[best], lower[best]);
    if !result.0.is_finite() {
        return result;
    }
    let (ia, ib) = (best.saturating_sub(1), (best + 1).min(s.len() - 1));
    let eval = |x: f64| {
        let lo = lower[ia] + m.mass_between(s[ia], x, &gl) / total;
        let up = upper[ib] + m.mass_between(x, s[ib], &gl) / total;
        (ratio(m.at(x), lo, up), lo)
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (s[ia], s[ib]);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c).0, eval(d).0);
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d).0;
        }
    }
    let x = 0.5 * (a + b);
    let (r, lo) = eval(x);
    if r < result.0 {
        result = (r, x, lo);
    }
    result
}

fn minimizer(u: &[f64], offset: f64, lower: f64) -> HalfSpace {
    if lower <= 0.5 {
        HalfSpace {
            normal: u.to_vec(),
            offset,
            mass: lower,
        }
    } else {
        HalfSpace {
            normal: u.iter().map(|v| -v).collect(),
            offset: -offset,
            mass: 1.0 - lower,
        }
    }
}

fn buser_ratio(d: &Density, grid: &Grid, h: f64) -> Option<f64> {
    let op = build_operator(d, grid).ok()?;
    gap_of(&op).ok().map(|s| s.lambda / (h * h))
}

/// Half-line scan over the grid points of a 1D density.
pub fn cheeger_1d(d: &Density, grid: &Grid) -> Result<IsoperimetricReport> {
    if d.dim() != 1 || grid.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: d.dim().max(grid.dim()),
        });
    }
    let u = [1.0];
    let m = marginal(d, &u, grid);
    let (h, offset, lower) = scan(&m, grid.axis_coords(0));
    let psi = 1.0 / h;
    Ok(IsoperimetricReport {
        dim: 1,
        psi_mu: Some(psi),
        psi_halfspace: psi,
        cheeger: h,
        minimizer: minimizer(&u, offset, lower),
        buser_ratio: buser_ratio(d, grid, h),
        profiles: vec![DirectionProfile {
            normal: u.to_vec(),
            ratio: h,
            offset,
        }],
    })
}

/// Half-space infimum over `dirs` (each used with both orientations) for
/// `n ∈ {2, 3}`. Since half-spaces are only some of the competitors,
/// `1/ψ_halfspace ≥ 1/ψ_μ`.
pub fn halfspace_profile_nd(d: &Density, dirs: &[Vec<f64>], grid: &Grid) -> Result<IsoperimetricReport> {
    let mut r = profile_nd(d, dirs, grid)?;
    r.buser_ratio = buser_ratio(d, grid, r.cheeger);
    Ok(r)
}

fn profile_nd(d: &Density, dirs: &[Vec<f64>], grid: &Grid) -> Result<IsoperimetricReport> {
    let n = d.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::Unsupported(format!("half-space profile needs n in {{2, 3}}, got {n}")));
    }
    if grid.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: grid.dim(),
        });
    }
    let box_corners = corners(grid);
    let count = 2 * grid.axes()[0].n + 1;
    let found: Vec<(DirectionProfile, f64)> = dirs
        .par_iter()
        .map(|raw| {
            let len = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = raw.iter().map(|v| v / len).collect();
            let (lo, hi) = match d.as_uniform() {
                Some(body) => body.width_interval(&u),
                None => box_corners
                    .iter()
                    .map(|c| c.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v))),
            };
            let s: Vec<f64> = (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect();
            let m = marginal(d, &u, grid);
            let (ratio, offset, lower) = scan(&m, &s);
            (DirectionProfile { normal: u, ratio, offset }, lower)
        })
        .collect();
    let (best, lower) = found
        .iter()
        .min_by(|a, b| a.0.ratio.total_cmp(&b.0.ratio))
        .ok_or_else(|| Error::InvalidParameter("no directions".into()))?;
    let h = best.ratio;
    Ok(IsoperimetricReport {
        dim: n,
        psi_mu: None,
        psi_halfspace: 1.0 / h,
        cheeger: h,
        minimizer: minimizer(&best.normal, best.offset, *lower),
        buser_ratio: None,
        profiles: found.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Default direction count for the nD half-space sweep.
pub fn default_directions(n: usize) -> Vec<Vec<f64>> {
    directions(n, if n == 2 { 90 } else { 64 })
}

/// `1/4 ≤ ψ²/C_P ≤ π` in 1D. In higher dimensions only the consequence
/// `ψ_halfspace² ≤ π C_P` is asserted.
pub fn buser_sandwich_check(d: &Density, grid: &Grid) -> Result<CheckReport> {
    let op = build_operator(d, grid)?;
    let lambda = gap_of(&op)?.lambda;
    let mut r = CheckReport::new("cheeger_buser", d.to_string());
    if d.dim() == 1 {
        let iso = cheeger_1d(d, grid)?;
        let psi = iso.psi_halfspace;
        let ratio = psi * psi * lambda;
        r.push(CheckItem::at_least("psi^2/C_P >= 1/4", ratio, 0.25, 1e-3));
        r.push(CheckItem::at_most("psi^2/C_P <= pi", ratio, PI, 1e-3));
        r.push(CheckItem::observe("psi_mu", psi, 1.0 / iso.cheeger));
        r.push(CheckItem::observe("C_P", 1.0 / lambda, 1.0 / lambda));
        r.push(CheckItem::observe("ratio - 1/4", ratio - 0.25, 0.0));
        r.push(CheckItem::observe("pi - ratio", PI - ratio, 0.0));
    } else {
        let iso = profile_nd(d, &default_directions(d.dim()), grid)?;
        let psi = iso.psi_halfspace;
        let ratio = psi * psi * lambda;
        r.push(CheckItem::at_most("psi_halfspace^2/C_P <= pi", ratio, PI, 1e-3));
        r.push(CheckItem::observe("psi_halfspace", psi, psi));
        r.push(CheckItem::observe("C_P", 1.0 / lambda, 1.0 / lambda));
    }
    Ok(r)
}

/// One 1-Lipschitz witness with its discrete variance and energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub name: String,
    pub variance: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `λ · sup Var(φ)` over the witnesses, in `(0, 1]`.
    pub ratio: f64,
    pub sup_variance: f64,
    pub c_p: f64,
    pub witnesses: Vec<Witness>,
    pub check: CheckReport,
}

/// Variances of 1-Lipschitz witnesses: the top linear direction, the
/// distance to the minimizing half-space, and the distance to the
/// barycenter. Asserts `Var φ ≤ C_P E(φ, φ)` and `E(φ, φ) ≤ 1` in the
/// discrete measure.
pub fn lipschitz_variance_ratio(d: &Density, grid: &Grid) -> Result<LipschitzReport> {
    let n = d.dim();
    let op = build_operator(d, grid)?;
    let lambda = gap_of(&op)?.lambda;
    let c_p = 1.0 / lambda;

    let (vals, vecs) = sym_eigen(&discrete_covariance(&op));
    let top = (0..n).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let theta: Vec<f64> = (0..n).map(|k| vecs[(k, top)]).collect();
    let half = if n == 1 {
        cheeger_1d(d, grid)?.minimizer
    } else {
        profile_nd(d, &directions(n, 16), grid)?.minimizer
    };
    let coords: Vec<Vec<f64>> = (0..n).map(|k| op.coordinate(k)).collect();
    let b: Vec<f64> = coords.iter().map(|x| op.mean(x)).collect();
    let at = |i: usize| -> Vec<f64> { coords.iter().map(|x| x[i]).collect() };
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();

    let families: Vec<(String, Vec<f64>)> = vec![
        ("linear top direction".into(), (0..op.len()).map(|i| dot(&at(i), &theta)).collect()),
        (
            "distance to minimizing half-space".into(),
            (0..op.len())
                .map(|i| (half.offset - dot(&at(i), &half.normal)).max(0.0))
                .collect(),
        ),
        (
            "distance to barycenter".into(),
            (0..op.len())
                .map(|i| at(i).iter().zip(&b).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt())
                .collect(),
        ),
    ];
    let mut check = CheckReport::new("lipschitz_variance", d.to_string());
    let mut witnesses = Vec::new();
    for (name, f) in families {
        let variance = op.variance(&f);
        let energy = op.dirichlet(&f, &f);
        check.push(CheckItem::at_most(
            format!("Var <= C_P E|grad|^2 ({name})"),
            variance,
            c_p * energy,
            1e-8 * c_p,
        ));
        check.push(CheckItem::at_most(format!("E|grad|^2 <= 1 ({name})"), energy, 1.0, 1e-3));
        witnesses.push(Witness { name, variance, energy });
    }
    let sup_variance = witnesses.iter().map(|w| w.variance).fold(0.0, f64::max);
    let ratio = lambda * sup_variance;
    check.push(CheckItem::observe("lambda sup Var", ratio, 1.0));
    Ok(LipschitzReport {
        ratio,
        sup_variance,
        c_p,
        witnesses,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_half_line() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let r = cheeger_1d(&g, &g.default_grid()).unwrap();
        assert!((r.cheeger - (2.0 / PI).sqrt()).abs() < 1e-6, "{}", r.cheeger);
        assert!(r.minimizer.offset.abs() < 1e-6);
        assert!((r.minimizer.mass - 0.5).abs() < 1e-9);
    }
}
