//! Barycenters, covariance, isotropic position, central sections,
//! half-space masses and the third-moment functional.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::density::{Density, Support};
use crate::error::{Error, Result};
use crate::grid::{composite_gl, Grid};
use crate::linalg::{inv_sqrt_spd, op_norm_psd, power_eigenvalues};
use crate::quadrature::{check_leakage, integrate_with, node_densities};
use crate::slicing::complement_basis;

/// Tolerance for the `is_isotropic` flag.
pub const ISOTROPY_TOL: f64 = 1e-6;

/// Largest tolerated deviation of the quadrature mass from one when the
/// normalizer is known.
pub const RESOLUTION_TOL: f64 = 1e-3;

pub const SECTION_BOUNDS: (f64, f64) = (0.288_675_134_594_812_9, std::f64::consts::FRAC_1_SQRT_2);
pub const HALFSPACE_BOUNDS: (f64, f64) = (0.367_879_441_171_442_33, 0.632_120_558_828_557_7);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub barycenter: Vec<f64>,
    /// Row-major rows.
    pub covariance: Vec<Vec<f64>>,
    pub op_norm: f64,
    pub is_isotropic: bool,
}

impl MomentReport {
    fn from_parts(mean: Vec<f64>, cov: &DMatrix<f64>) -> Self {
        let n = mean.len();
        let sym = (cov + cov.transpose()) * 0.5;
        let op_norm = op_norm_psd(&sym);
        let iso = mean.iter().all(|m| m.abs() <= ISOTROPY_TOL)
            && (0..n).all(|i| (0..n).all(|j| (sym[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= ISOTROPY_TOL));
        Self {
            barycenter: mean,
            covariance: (0..n).map(|i| (0..n).map(|j| sym[(i, j)]).collect()).collect(),
            op_norm,
            is_isotropic: iso,
        }
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.barycenter.len();
        DMatrix::from_fn(n, n, |i, j| self.covariance[i][j])
    }

    /// Eigenvalues of the covariance, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        power_eigenvalues(&self.covariance_matrix())
    }
}

/// Barycenter and covariance. Closed forms are used where the density
/// has them; otherwise quadrature on `grid`.
pub fn moment_report(d: &Density, grid: &Grid) -> Result<MomentReport> {
    if let Some(m) = d.exact_moments() {
        return Ok(MomentReport::from_parts(m.mean, &m.covariance));
    }
    quadrature_moments(d, grid)
}

/// Barycenter and covariance by quadrature only.
pub fn quadrature_moments(d: &Density, grid: &Grid) -> Result<MomentReport> {
    let n = d.dim();
    let rho = node_densities(d, grid);
    check_leakage(d, grid, &rho)?;
    if d.log_normalizer_known() {
        let mass: f64 = rho.iter().enumerate().map(|(i, r)| grid.weight(i) * r).sum();
        if (mass - 1.0).abs() > RESOLUTION_TOL {
            return Err(Error::Unresolved { mass });
        }
    }
    let mean: Vec<f64> = (0..n).map(|k| integrate_with(&|x: &[f64]| x[k], n, grid, &rho)).collect();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (mi, mj) = (mean[i], mean[j]);
            let v = integrate_with(&|x: &[f64]| (x[i] - mi) * (x[j] - mj), n, grid, &rho);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(MomentReport::from_parts(mean, &cov))
}

#[derive(Debug, Clone)]
pub struct Isotropized {
    pub density: Density,
    /// `Cov^{-1/2}`.
    pub a: DMatrix<f64>,
    pub shift: Vec<f64>,
    /// Moments of the input.
    pub source: MomentReport,
}

/// The affine image `A(X - b)` with `A = Cov^{-1/2}`: barycenter zero and
/// identity covariance.
pub fn isotropize(d: &Density) -> Result<Isotropized> {
    let n = d.dim();
    let source = moment_report(d, &d.moment_grid())?;
    let a = inv_sqrt_spd(&source.covariance_matrix())?;
    let b = DVector::from_column_slice(&source.barycenter);
    let shift: Vec<f64> = (-(&a * b)).iter().copied().collect();
    let identity = (&a - DMatrix::identity(n, n)).amax() <= 1e-15 && shift.iter().all(|v| v.abs() <= 1e-15);
    let density = if identity {
        d.clone()
    } else if d.as_gaussian().is_some() {
        Density::standard_gaussian(n, 1.0)?
    } else {
        Density::affine(d, a.clone(), shift.clone())?
    };
    Ok(Isotropized {
        density,
        a,
        shift,
        source,
    })
}

fn barycenter(d: &Density) -> Result<Vec<f64>> {
    Ok(moment_report(d, &d.moment_grid())?.barycenter)
}

fn unit(normal: &[f64]) -> Result<Vec<f64>> {
    let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return Err(Error::InvalidParameter("zero normal".into()));
    }
    Ok(normal.iter().map(|v| v / len).collect())
}

/// Half-width of a ball around `b` containing the grid box.
fn radius_from(b: &[f64], grid: &Grid) -> f64 {
    grid.axes()
        .iter()
        .zip(b)
        .map(|(ax, c)| {
            let r = (ax.hi - c).abs().max((c - ax.lo).abs());
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

fn rule(lo: f64, hi: f64, points: usize, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let order = 8;
    composite_gl(lo, hi, (points / order).max(1), order, breaks)
}

/// Support as constraints `⟨m, x⟩ ≤ c`, or a ball.
enum Region {
    Linear(Vec<(Vec<f64>, f64)>),
    Ball(Vec<f64>, f64),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Region {
    fn of(d: &Density) -> Self {
        match d.support() {
            Support::AllSpace => Region::Linear(Vec::new()),
            Support::Box(iv) => {
                let n = iv.len();
                let mut cs = Vec::new();
                for (i, (lo, hi)) in iv.iter().enumerate() {
                    let mut e = vec![0.0; n];
                    if hi.is_finite() {
                        e[i] = 1.0;
                        cs.push((e.clone(), *hi));
                    }
                    if lo.is_finite() {
                        e[i] = -1.0;
                        cs.push((e, -lo));
                    }
                }
                Region::Linear(cs)
            }
            Support::Halfspaces(hs) => Region::Linear(hs.into_iter().map(|h| (h.normal, h.offset)).collect()),
            Support::Ball { center, radius } => Region::Ball(center, radius),
        }
    }

    /// `{y ∈ [-r, r] : p + y v ∈ support}`.
    fn chord(&self, p: &[f64], v: &[f64], r: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (-r, r);
        match self {
            Region::Linear(cs) => {
                for (m, c) in cs {
                    let a = dot(m, v);
                    let rhs = c - dot(m, p);
                    if a.abs() < 1e-14 {
                        if rhs < 0.0 {
                            return None;
                        }
                    } else if a > 0.0 {
                        hi = hi.min(rhs / a);
                    } else {
                        lo = lo.max(rhs / a);
                    }
                }
            }
            Region::Ball(c, rad) => {
                let q: Vec<f64> = p.iter().zip(c).map(|(x, y)| x - y).collect();
                let b = dot(&q, v);
                let disc = b * b - (dot(&q, &q) - rad * rad);
                if disc <= 0.0 {
                    return None;
                }
                lo = lo.max(-b - disc.sqrt());
                hi = hi.min(-b + disc.sqrt());
            }
        }
        (hi > lo).then_some((lo, hi))
    }

    /// Offsets `s` along `u` from `b` where a support face is orthogonal
    /// to `u`; the marginal jumps there.
    fn face_offsets(&self, b: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Region::Linear(cs) => cs
                .iter()
                .filter_map(|(m, c)| {
                    let len = dot(m, m).sqrt();
                    let a = dot(m, u);
                    (a.abs() > len * (1.0 - 1e-12)).then(|| (c - dot(m, b)) / a)
                })
                .collect(),
            Region::Ball(..) => Vec::new(),
        }
    }
}

/// Absolute accuracy of the adaptive rules for sections and half-spaces.
const ADAPTIVE_TOL: f64 = 1e-11;

/// Adaptive Gauss–Legendre: panels are bisected until an order-8 panel
/// agrees with its two halves to within its share of `tol`. Starts from
/// 16 panels so narrow features are seen.
fn adaptive(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let (nodes, weights) = crate::grid::gauss_legendre(8);
    let gl = |a: f64, b: f64| -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        nodes.iter().zip(&weights).map(|(x, w)| w * h * f(m + h * x)).sum()
    };
    let width = hi - lo;
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, f64, u32)> = (0..16)
        .map(|k| {
            let a = lo + width * k as f64 / 16.0;
            let b = lo + width * (k + 1) as f64 / 16.0;
            (a, b, gl(a, b), 0)
        })
        .collect();
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (l, r) = (gl(a, m), gl(m, b));
        if (l + r - whole).abs() <= tol * (b - a) / width || depth >= 40 {
            total += l + r;
        } else {
            stack.push((a, m, l, depth + 1));
            stack.push((m, b, r, depth + 1));
        }
    }
    total
}

/// `∫ ρ` along `q + y v`, clipped to the support and to `|y| ≤ r`.
fn line_integral(d: &Density, region: &Region, q: &[f64], v: &[f64], r: f64) -> f64 {
    let Some((lo, hi)) = region.chord(q, v, r) else {
        return 0.0;
    };
    let n = q.len();
    let f = |y: f64| {
        let x: Vec<f64> = (0..n).map(|c| q[c] + y * v[c]).collect();
        d.density(&x)
    };
    adaptive(&f, lo, hi, ADAPTIVE_TOL)
}

/// `∫ ρ` over the affine plane `p + span(basis)` (one or two directions).
fn plane_integral(d: &Density, region: &Region, p: &[f64], basis: &[Vec<f64>], r: f64) -> f64 {
    match basis {
        [v] => line_integral(d, region, p, v, r),
        [v1, v2] => {
            let n = p.len();
            let f = |y: f64| {
                let q: Vec<f64> = (0..n).map(|c| p[c] + y * v1[c]).collect();
                line_integral(d, region, &q, v2, r)
            };
            adaptive(&f, -r, r, ADAPTIVE_TOL)
        }
        _ => unreachable!("planes of dimension one or two"),
    }
}

/// `∫_H ρ` over the hyperplane through the barycenter orthogonal to
/// `normal`. Uniform bodies use exact sections; 1D reads `ρ(b)`; otherwise
/// the hyperplane is parametrized in a rotated frame over the ball around
/// the barycenter that contains `grid`, and integrated line by line with
/// each line clipped to the support.
pub fn central_section(d: &Density, normal: &[f64], grid: &Grid) -> Result<f64> {
    let u = unit(normal)?;
    let b = barycenter(d)?;
    if let Some(body) = d.as_uniform() {
        return Ok(body.section_volume(&u, dot(&u, &b)) / body.volume());
    }
    if d.dim() == 1 {
        return Ok(d.density(&b));
    }
    let basis = complement_basis(&u);
    let r = radius_from(&b, grid);
    Ok(plane_integral(d, &Region::of(d), &b, &basis, r))
}

/// `μ{⟨x - b, u⟩ ≥ 0}` for the barycenter `b`.
pub fn halfspace_mass(d: &Density, normal: &[f64], grid: &Grid) -> Result<f64> {
    let u = unit(normal)?;
    let b = barycenter(d)?;
    let n = d.dim();
    if let Some(body) = d.as_uniform() {
        return Ok(body.halfspace_volume(&u, dot(&u, &b)) / body.volume());
    }
    let r = radius_from(&b, grid);
    let points = grid.axes()[0].n.max(64);
    if n == 1 {
        let ax = &grid.axes()[0];
        let mut breaks = vec![b[0]];
        if let Support::Box(iv) = d.support() {
            breaks.extend([iv[0].0, iv[0].1]);
        }
        let (xs, ws) = rule(ax.lo, ax.hi, points, &breaks);
        let (mut upper, mut all) = (0.0, 0.0);
        for (x, w) in xs.iter().zip(&ws) {
            let v = w * d.density(&[*x]);
            all += v;
            if (x - b[0]) * u[0] >= 0.0 {
                upper += v;
            }
        }
        return Ok(upper / all);
    }
    let region = Region::of(d);
    let basis = complement_basis(&u);
    let marginal = |s: f64| {
        let p: Vec<f64> = b.iter().zip(&u).map(|(x, v)| x + s * v).collect();
        plane_integral(d, &region, &p, &basis, r)
    };
    let mut cuts = vec![-r, 0.0, r];
    cuts.extend(region.face_offsets(&b, &u).into_iter().filter(|s| s.abs() < r));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces: Vec<(f64, f64)> = cuts
        .windows(2)
        .map(|w| (w[0], adaptive(&marginal, w[0], w[1], ADAPTIVE_TOL)))
        .collect();
    let all: f64 = pieces.iter().map(|p| p.1).sum();
    let upper: f64 = pieces.iter().filter(|p| p.0 >= 0.0).map(|p| p.1).sum();
    Ok(upper / all)
}

/// `‖B‖_HS` for `B = E X₁ X ⊗ X` in the frame where the density is centred.
pub fn kappa_functional(d: &Density, grid: &Grid) -> Result<f64> {
    let n = d.dim();
    if let Some(t) = d.exact_moments().and_then(|m| m.third) {
        return Ok((0..n * n).map(|jk| t[jk] * t[jk]).sum::<f64>().sqrt());
    }
    let rho = node_densities(d, grid);
    check_leakage(d, grid, &rho)?;
    if d.log_normalizer_known() {
        let mass: f64 = rho.iter().enumerate().map(|(i, r)| grid.weight(i) * r).sum();
        if (mass - 1.0).abs() > RESOLUTION_TOL {
            return Err(Error::Unresolved { mass });
        }
    }
    let mean: Vec<f64> = (0..n).map(|k| integrate_with(&|x: &[f64]| x[k], n, grid, &rho)).collect();
    let mut hs = 0.0;
    for j in 0..n {
        for k in 0..n {
            let m = &mean;
            let v = integrate_with(&|x: &[f64]| (x[0] - m[0]) * (x[j] - m[j]) * (x[k] - m[k]), n, grid, &rho);
            hs += v * v;
        }
    }
    Ok(hs.sqrt())
}

/// One direction of a section or half-space sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionValue {
    pub direction: Vec<f64>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub values: Vec<DirectionValue>,
    pub tolerance: f64,
    /// Set when the input fails the precondition for the bound.
    pub warning: Option<String>,
}

impl Sweep {
    pub fn all_within(&self) -> bool {
        self.values.iter().all(|v| v.within)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().map(|v| v.value).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn sweep<F>(dirs: Vec<Vec<f64>>, bounds: (f64, f64), tol: f64, warning: Option<String>, eval: F) -> Result<Sweep>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let values = dirs
        .into_iter()
        .map(|u| {
            let value = eval(&u)?;
            Ok(DirectionValue {
                within: value >= bounds.0 - tol && value <= bounds.1 + tol,
                direction: u,
                value,
                lower: bounds.0,
                upper: bounds.1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        values,
        tolerance: tol,
        warning,
    })
}

/// Central sections over `count` directions against `[1/√12, 1/√2]`.
pub fn section_sweep(d: &Density, count: usize, grid: &Grid, tol: f64) -> Result<Sweep> {
    let rep = moment_report(d, &d.moment_grid())?;
    let warning = (!rep.is_isotropic).then(|| format!("{d} is not isotropic; section bounds do not apply"));
    sweep(crate::slicing::directions(d.dim(), count), SECTION_BOUNDS, tol, warning, |u| {
        central_section(d, u, grid)
    })
}

/// Half-space masses over `2·count` directions (both signs) against
/// `[1/e, 1 - 1/e]`.
pub fn halfspace_sweep(d: &Density, count: usize, grid: &Grid, tol: f64) -> Result<Sweep> {
    let dirs: Vec<Vec<f64>> = crate::slicing::directions(d.dim(), count)
        .into_iter()
        .flat_map(|u| {
            let neg = u.iter().map(|v| -v).collect();
            [u, neg]
        })
        .collect();
    sweep(dirs, HALFSPACE_BOUNDS, tol, None, |u| halfspace_mass(d, u, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_interval_moments() {
        let u = Density::uniform_interval(-1.0, 1.0).unwrap();
        let r = quadrature_moments(&u, &u.moment_grid()).unwrap();
        assert!((r.covariance[0][0] - 1.0 / 3.0).abs() < 1e-8);
        assert!(r.barycenter[0].abs() < 1e-12);
    }

    #[test]
    fn exponential_witnesses() {
        let e = Density::centered_exponential();
        let grid = e.moment_grid();
        let m = halfspace_mass(&e, &[1.0], &grid).unwrap();
        assert!((m - (-1f64).exp()).abs() < 1e-9, "{m}");
        assert!((kappa_functional(&e, &grid).unwrap() - 2.0).abs() < 1e-15);
        let q = quadrature_moments(&e, &grid).unwrap();
        assert!((q.covariance[0][0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn isotropize_unit_interval() {
        let u = Density::uniform_interval(0.0, 1.0).unwrap();
        let iso = isotropize(&u).unwrap();
        let r = moment_report(&iso.density, &iso.density.moment_grid()).unwrap();
        assert!(r.is_isotropic);
        let s = central_section(&iso.density, &[1.0], &iso.density.default_grid()).unwrap();
        assert!((s - 1.0 / 12f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_section_in_the_plane() {
        let g = Density::standard_gaussian(2, 1.0).unwrap();
        let s = central_section(&g, &[0.6, 0.8], &g.default_grid()).unwrap();
        assert!((s - (2.0 * std::f64::consts::PI).sqrt().recip()).abs() < 1e-10, "{s}");
        let h = halfspace_mass(&g, &[0.6, -0.8], &g.default_grid()).unwrap();
        assert!((h - 0.5).abs() < 1e-10);
    }
}
