//! Log-concave densities with exact derivative information.
//!
//! A [`Density`] is an immutable node in a small expression tree over a
//! closed catalog: Gaussians, uniform laws on convex bodies, the centred
//! exponential, products, affine images, exponential tilts, Gaussian
//! convolutions and the convolve-then-multiply regularization. Every node
//! can evaluate `log ρ`, `∇ψ` and `∇²ψ` (with `ψ = -log ρ`). Nodes whose
//! normalizer is not known in closed form compute it once by Gauss–Legendre
//! quadrature and cache it.

mod catalog;
mod exact;
mod shuffle;
mod transform;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{composite_gl, Grid};
use crate::slicing::{ConvexBody, Halfspace};

pub use exact::ExactMoments;
pub use shuffle::{gaussian_shuffle_check, ShuffleFunction, ShuffleReport};
pub use transform::uniform_convexity_estimate;

/// Points per axis of the default grid in dimension 1, 2, 3.
pub const DEFAULT_POINTS: [usize; 3] = [4001, 161, 41];

/// Gauss–Legendre points per axis for moment grids.
pub const MOMENT_POINTS: [usize; 3] = [400, 120, 40];

/// Value, gradient and Hessian information at one point.
#[derive(Debug, Clone)]
pub struct Derivs {
    /// Normalized `log ρ(x)`; `-∞` outside the support.
    pub log_density: f64,
    /// `∇ψ(x)`; zero outside the support.
    pub grad_psi: Vec<f64>,
    /// `∇²ψ(x)`; zero outside the support.
    pub hess_psi: DMatrix<f64>,
}

impl Derivs {
    fn outside(n: usize) -> Self {
        Self {
            log_density: f64::NEG_INFINITY,
            grad_psi: vec![0.0; n],
            hess_psi: DMatrix::zeros(n, n),
        }
    }

    pub fn inside(&self) -> bool {
        self.log_density > f64::NEG_INFINITY
    }
}

/// Borrowed view of the outer structure of a density.
#[derive(Debug, Clone, Copy)]
pub enum View<'a> {
    Gaussian { mean: &'a [f64], s: f64 },
    Uniform(&'a ConvexBody),
    Exponential,
    Product(&'a [Density]),
    Affine {
        base: &'a Density,
        a: &'a DMatrix<f64>,
        shift: &'a [f64],
    },
    /// Tilts, convolutions and regularizations.
    Opaque,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    AllSpace,
    /// Per-axis intervals, possibly half-infinite.
    Box(Vec<(f64, f64)>),
    /// `⟨normal, x⟩ ≤ offset` for each; empty when the support is not known.
    Halfspaces(Vec<Halfspace>),
    Ball { center: Vec<f64>, radius: f64 },
}

/// Precomputed inner quadrature against a base density, used to evaluate
/// Gaussian convolutions: nodes `y_j` and `log(w_j ρ(y_j))`, normalized to
/// total mass one.
#[derive(Debug)]
struct InnerRule {
    nodes: Vec<Vec<f64>>,
    log_w: Vec<f64>,
}

#[derive(Debug)]
enum Kind {
    Gaussian {
        mean: Vec<f64>,
        s: f64,
    },
    Uniform(ConvexBody),
    /// `e^{-(x+1)}` on `[-1, ∞)`: mean zero, variance one.
    Exponential,
    Product(Vec<Density>),
    Affine {
        base: Density,
        a: DMatrix<f64>,
        a_inv: DMatrix<f64>,
        shift: Vec<f64>,
        log_det: f64,
    },
    Tilt {
        base: Density,
        t: f64,
        theta: Vec<f64>,
    },
    Convolution {
        base: Density,
        s: f64,
        inner: InnerRule,
    },
    Regularized {
        base: Density,
        delta: f64,
        inner: InnerRule,
    },
}

#[derive(Debug)]
struct Node {
    dim: usize,
    kind: Kind,
    log_z: OnceLock<f64>,
}

/// Cheap-to-clone handle on an immutable density.
#[derive(Debug, Clone)]
pub struct Density(Arc<Node>);

fn log_sum_exp(values: impl Iterator<Item = f64>) -> (f64, Vec<f64>) {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, v);
    }
    let s: f64 = v.iter().map(|x| (x - max).exp()).sum();
    (max + s.ln(), v)
}

impl Density {
    fn wrap(dim: usize, kind: Kind) -> Self {
        Density(Arc::new(Node {
            dim,
            kind,
            log_z: OnceLock::new(),
        }))
    }

    /// Gaussian `N(mean, s·Id)`.
    pub fn gaussian(mean: Vec<f64>, s: f64) -> Result<Self> {
        if !(s > 0.0) || mean.is_empty() || mean.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "gaussian needs s > 0 and 1 <= n <= 3 (s = {s}, n = {})",
                mean.len()
            )));
        }
        Ok(Self::wrap(mean.len(), Kind::Gaussian { mean, s }))
    }

    /// Centred `γ_s` in dimension `n`.
    pub fn standard_gaussian(n: usize, s: f64) -> Result<Self> {
        Self::gaussian(vec![0.0; n], s)
    }

    pub fn uniform(body: ConvexBody) -> Self {
        Self::wrap(body.dim(), Kind::Uniform(body))
    }

    /// Uniform law on an axis-aligned box.
    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self::uniform(ConvexBody::cube(lo, hi)?))
    }

    /// Uniform law on `[lo, hi]`.
    pub fn uniform_interval(lo: f64, hi: f64) -> Result<Self> {
        Self::uniform_box(vec![lo], vec![hi])
    }

    /// One-sided exponential shifted to mean zero: `e^{-(x+1)}` on `[-1, ∞)`.
    pub fn centered_exponential() -> Self {
        Self::wrap(1, Kind::Exponential)
    }

    pub fn product(factors: Vec<Density>) -> Result<Self> {
        let dim: usize = factors.iter().map(Density::dim).sum();
        if factors.is_empty() || dim > 3 {
            return Err(Error::InvalidParameter(format!("product dimension {dim} not in 1..=3")));
        }
        Ok(Self::wrap(dim, Kind::Product(factors)))
    }

    /// Law of `A X + shift` for `X ~ base`. Uniform laws stay uniform.
    pub fn affine(base: &Density, a: DMatrix<f64>, shift: Vec<f64>) -> Result<Self> {
        let n = base.dim();
        if a.nrows() != n || a.ncols() != n || shift.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: a.nrows(),
            });
        }
        if let Kind::Uniform(body) = &base.0.kind {
            if let Some(img) = body.affine_image(&a, &shift) {
                return Ok(Self::uniform(img));
            }
        }
        let det = a.determinant();
        let a_inv = a
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 1e-300)
            .ok_or_else(|| Error::InvalidParameter("singular affine map".into()))?;
        Ok(Self::wrap(
            n,
            Kind::Affine {
                base: base.clone(),
                a,
                a_inv,
                shift,
                log_det: det.abs().ln(),
            },
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Catalog kind name.
    pub fn kind_name(&self) -> &'static str {
        match &self.0.kind {
            Kind::Gaussian { .. } => "gaussian",
            Kind::Uniform(_) => "uniform",
            Kind::Exponential => "exponential",
            Kind::Product(_) => "product",
            Kind::Affine { .. } => "affine",
            Kind::Tilt { .. } => "tilt",
            Kind::Convolution { .. } => "convolve",
            Kind::Regularized { .. } => "regularize",
        }
    }

    /// Closed-form Gaussian parameters `(mean, s)` when this node is one.
    pub fn as_gaussian(&self) -> Option<(&[f64], f64)> {
        match &self.0.kind {
            Kind::Gaussian { mean, s } => Some((mean, *s)),
            _ => None,
        }
    }

    pub fn as_uniform(&self) -> Option<&ConvexBody> {
        match &self.0.kind {
            Kind::Uniform(b) => Some(b),
            _ => None,
        }
    }

    /// Structural view used by samplers.
    pub fn view(&self) -> View<'_> {
        match &self.0.kind {
            Kind::Gaussian { mean, s } => View::Gaussian { mean, s: *s },
            Kind::Uniform(b) => View::Uniform(b),
            Kind::Exponential => View::Exponential,
            Kind::Product(fs) => View::Product(fs),
            Kind::Affine { base, a, shift, .. } => View::Affine { base, a, shift },
            _ => View::Opaque,
        }
    }

    pub fn support(&self) -> Support {
        match &self.0.kind {
            Kind::Gaussian { .. } | Kind::Convolution { .. } | Kind::Regularized { .. } => Support::AllSpace,
            Kind::Uniform(ConvexBody::Ball { center, radius }) => Support::Ball {
                center: center.clone(),
                radius: *radius,
            },
            Kind::Uniform(ConvexBody::Box { lo, hi }) => {
                Support::Box(lo.iter().copied().zip(hi.iter().copied()).collect())
            }
            Kind::Uniform(body @ ConvexBody::Polytope(_)) => {
                Support::Halfspaces(body.halfspaces().unwrap_or_default())
            }
            Kind::Exponential => Support::Box(vec![(-1.0, f64::INFINITY)]),
            Kind::Product(fs) => {
                let mut boxes = Vec::new();
                for f in fs {
                    match f.support() {
                        Support::AllSpace => boxes.extend(
                            std::iter::repeat((f64::NEG_INFINITY, f64::INFINITY)).take(f.dim()),
                        ),
                        Support::Box(b) => boxes.extend(b),
                        _ => return Support::Halfspaces(Vec::new()),
                    }
                }
                if boxes.iter().all(|(a, b)| a.is_infinite() && b.is_infinite()) {
                    Support::AllSpace
                } else {
                    Support::Box(boxes)
                }
            }
            Kind::Affine { base, a_inv, shift, .. } => {
                // ⟨m, x⟩ ≤ c with x = A⁻¹(y - shift) becomes ⟨A⁻ᵀm, y⟩ ≤ c + ⟨A⁻ᵀm, shift⟩
                let map = |m: &[f64], c: f64| {
                    let m = DVector::from_column_slice(m);
                    let mt = a_inv.transpose() * m;
                    let c2 = c + mt.iter().zip(shift).map(|(x, y)| x * y).sum::<f64>();
                    Halfspace::new(mt.iter().copied().collect(), c2).ok()
                };
                let hs: Option<Vec<Halfspace>> = match base.support() {
                    Support::AllSpace => return Support::AllSpace,
                    Support::Box(b) => {
                        let n = b.len();
                        let mut v = Vec::new();
                        for (i, (lo, hi)) in b.iter().enumerate() {
                            let mut e = vec![0.0; n];
                            if hi.is_finite() {
                                e[i] = 1.0;
                                v.push(map(&e, *hi));
                            }
                            if lo.is_finite() {
                                e[i] = -1.0;
                                v.push(map(&e, -lo));
                            }
                        }
                        v.into_iter().collect()
                    }
                    Support::Halfspaces(h) if !h.is_empty() => h.iter().map(|h| map(&h.normal, h.offset)).collect(),
                    _ => None,
                };
                Support::Halfspaces(hs.unwrap_or_default())
            }
            Kind::Tilt { base, .. } => base.support(),
        }
    }

    /// Full-support densities with bounded Hessian (the "regular" class on
    /// which the integrated identities hold without boundary terms).
    pub fn has_full_support(&self) -> bool {
        matches!(self.support(), Support::AllSpace)
    }

    /// Largest known `t` with `∇²ψ ⪰ t·Id`.
    pub fn uniform_convexity_t(&self) -> f64 {
        match &self.0.kind {
            Kind::Gaussian { s, .. } => 1.0 / s,
            Kind::Uniform(_) | Kind::Exponential => 0.0,
            Kind::Product(fs) => fs.iter().map(Density::uniform_convexity_t).fold(f64::INFINITY, f64::min),
            Kind::Affine { base, a, .. } => {
                let sv = a.clone().svd(false, false).singular_values;
                let smax = sv.iter().copied().fold(0.0, f64::max);
                base.uniform_convexity_t() / (smax * smax)
            }
            Kind::Tilt { base, t, .. } => base.uniform_convexity_t() + t,
            Kind::Convolution { base, s, .. } => {
                let t = base.uniform_convexity_t();
                if t > 0.0 {
                    1.0 / (1.0 / t + s)
                } else {
                    0.0
                }
            }
            Kind::Regularized { base, delta, .. } => {
                let t = base.uniform_convexity_t();
                delta + t / (1.0 + t * delta)
            }
        }
    }

    /// Known upper bound on `∇²ψ` (infinite when none is known).
    pub fn hessian_upper_bound(&self) -> f64 {
        match &self.0.kind {
            Kind::Gaussian { s, .. } => 1.0 / s,
            Kind::Uniform(_) | Kind::Exponential => 0.0,
            Kind::Product(fs) => fs.iter().map(Density::hessian_upper_bound).fold(0.0, f64::max),
            Kind::Affine { base, a_inv, .. } => {
                let sv = a_inv.clone().svd(false, false).singular_values;
                let smax = sv.iter().copied().fold(0.0, f64::max);
                base.hessian_upper_bound() * smax * smax
            }
            Kind::Tilt { base, t, .. } => base.hessian_upper_bound() + t,
            Kind::Convolution { s, .. } => 1.0 / s,
            Kind::Regularized { delta, .. } => delta + 1.0 / delta,
        }
    }

    pub fn log_normalizer_known(&self) -> bool {
        match &self.0.kind {
            Kind::Tilt { .. } | Kind::Regularized { .. } => false,
            Kind::Product(fs) => fs.iter().all(Density::log_normalizer_known),
            Kind::Affine { base, .. } => base.log_normalizer_known(),
            _ => true,
        }
    }

    /// A finite box outside of which the density is negligible
    /// (below roughly `1e-20` of its maximum).
    pub fn effective_box(&self) -> Vec<(f64, f64)> {
        match &self.0.kind {
            Kind::Gaussian { mean, s } => {
                let r = 10.0 * s.sqrt();
                mean.iter().map(|m| (m - r, m + r)).collect()
            }
            Kind::Uniform(b) => b.bounding_box(),
            // Long enough that truncation barely moves the spectral gap,
            // which sits at the bottom of the essential spectrum.
            Kind::Exponential => vec![(-1.0, 59.0)],
            Kind::Product(fs) => fs.iter().flat_map(|f| f.effective_box()).collect(),
            Kind::Affine { base, a, shift, .. } => {
                let bb = base.effective_box();
                let n = bb.len();
                let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
                for corner in 0..(1usize << n) {
                    let x: Vec<f64> = (0..n)
                        .map(|k| if corner >> k & 1 == 1 { bb[k].1 } else { bb[k].0 })
                        .collect();
                    for i in 0..n {
                        let y = shift[i] + (0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>();
                        out[i].0 = out[i].0.min(y);
                        out[i].1 = out[i].1.max(y);
                    }
                }
                // the image of a box is a loose cover under shears; log-concave
                // tails are exponential, so 40 standard deviations suffice
                if let Some(m) = self.exact_moments() {
                    for (i, iv) in out.iter_mut().enumerate() {
                        let r = 40.0 * m.covariance[(i, i)].sqrt();
                        *iv = (iv.0.max(m.mean[i] - r), iv.1.min(m.mean[i] + r));
                    }
                }
                out
            }
            Kind::Tilt { base, .. } => base.effective_box(),
            Kind::Convolution { base, s, .. } => {
                let r = 10.0 * s.sqrt();
                base.effective_box().into_iter().map(|(a, b)| (a - r, b + r)).collect()
            }
            Kind::Regularized { base, delta, .. } => {
                let r = 10.0 * delta.sqrt();
                base.effective_box().into_iter().map(|(a, b)| (a - r, b + r)).collect()
            }
        }
    }

    /// Trapezoid grid on the effective box with the default resolution.
    pub fn default_grid(&self) -> Grid {
        self.grid_with_points(DEFAULT_POINTS[self.dim() - 1])
    }

    /// Gauss–Legendre grid on the effective box, for moment quadrature.
    pub fn moment_grid(&self) -> Grid {
        let bb = self.effective_box();
        let axes = bb
            .iter()
            .map(|&(lo, hi)| crate::grid::Axis {
                lo,
                hi,
                n: MOMENT_POINTS[bb.len() - 1],
            })
            .collect();
        Grid::new(axes, crate::grid::Rule::GaussLegendre).expect("effective box is a valid grid box")
    }

    pub fn grid_with_points(&self, n: usize) -> Grid {
        let bb = self.effective_box();
        let lo: Vec<f64> = bb.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = bb.iter().map(|b| b.1).collect();
        Grid::uniform(&lo, &hi, &vec![n; bb.len()]).expect("effective box is a valid grid box")
    }

    fn check_dim(&self, x: &[f64]) {
        debug_assert!(x.len() >= self.dim(), "point of dimension {} for density of dimension {}", x.len(), self.dim());
    }

    /// `log ρ(x)`, `-∞` outside the support.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        let x = &x[..self.dim()];
        match &self.0.kind {
            Kind::Gaussian { mean, s } => {
                let d2: f64 = x.iter().zip(mean).map(|(a, m)| (a - m) * (a - m)).sum();
                -d2 / (2.0 * s) - 0.5 * self.dim() as f64 * (2.0 * PI * s).ln()
            }
            Kind::Uniform(b) => {
                if b.contains(x) {
                    -b.volume().ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kind::Exponential => {
                if x[0] >= -1.0 {
                    -(x[0] + 1.0)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kind::Product(fs) => {
                let mut off = 0;
                let mut total = 0.0;
                for f in fs {
                    total += f.log_density(&x[off..off + f.dim()]);
                    off += f.dim();
                }
                total
            }
            Kind::Affine {
                base,
                a_inv,
                shift,
                log_det,
                ..
            } => base.log_density(&apply_inv(a_inv, shift, x)) - log_det,
            Kind::Tilt { base, t, theta } => {
                let b = base.log_density(x);
                if b == f64::NEG_INFINITY {
                    return b;
                }
                b + tilt_exponent(x, *t, theta) - self.log_normalizer()
            }
            Kind::Convolution { .. } | Kind::Regularized { .. } => self.derivs(x).log_density,
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// `ψ(x) = -log ρ(x)`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        -self.log_density(x)
    }

    pub fn grad_psi(&self, x: &[f64]) -> Vec<f64> {
        self.derivs(x).grad_psi
    }

    pub fn hess_psi(&self, x: &[f64]) -> DMatrix<f64> {
        self.derivs(x).hess_psi
    }

    /// Log-density, gradient and Hessian of `ψ` in one pass.
    pub fn derivs(&self, x: &[f64]) -> Derivs {
        self.check_dim(x);
        let x = &x[..self.dim()];
        let n = self.dim();
        match &self.0.kind {
            Kind::Gaussian { mean, s } => Derivs {
                log_density: self.log_density(x),
                grad_psi: x.iter().zip(mean).map(|(a, m)| (a - m) / s).collect(),
                hess_psi: DMatrix::identity(n, n) / *s,
            },
            Kind::Uniform(_) | Kind::Exponential => {
                let ld = self.log_density(x);
                if ld == f64::NEG_INFINITY {
                    return Derivs::outside(n);
                }
                let grad = if matches!(self.0.kind, Kind::Exponential) {
                    vec![1.0]
                } else {
                    vec![0.0; n]
                };
                Derivs {
                    log_density: ld,
                    grad_psi: grad,
                    hess_psi: DMatrix::zeros(n, n),
                }
            }
            Kind::Product(fs) => {
                let mut out = Derivs {
                    log_density: 0.0,
                    grad_psi: vec![0.0; n],
                    hess_psi: DMatrix::zeros(n, n),
                };
                let mut off = 0;
                for f in fs {
                    let k = f.dim();
                    let d = f.derivs(&x[off..off + k]);
                    if !d.inside() {
                        return Derivs::outside(n);
                    }
                    out.log_density += d.log_density;
                    out.grad_psi[off..off + k].copy_from_slice(&d.grad_psi);
                    out.hess_psi.view_mut((off, off), (k, k)).copy_from(&d.hess_psi);
                    off += k;
                }
                out
            }
            Kind::Affine {
                base,
                a_inv,
                shift,
                log_det,
                ..
            } => {
                let d = base.derivs(&apply_inv(a_inv, shift, x));
                if !d.inside() {
                    return Derivs::outside(n);
                }
                let g = nalgebra::DVector::from_column_slice(&d.grad_psi);
                let at = a_inv.transpose();
                Derivs {
                    log_density: d.log_density - log_det,
                    grad_psi: (&at * g).iter().copied().collect(),
                    hess_psi: &at * d.hess_psi * a_inv,
                }
            }
            Kind::Tilt { base, t, theta } => {
                let mut d = base.derivs(x);
                if !d.inside() {
                    return d;
                }
                d.log_density += tilt_exponent(x, *t, theta) - self.log_normalizer();
                for i in 0..n {
                    d.grad_psi[i] += t * x[i] - theta[i];
                    d.hess_psi[(i, i)] += t;
                }
                d
            }
            Kind::Convolution { s, inner, .. } => convolution_derivs(inner, *s, x),
            Kind::Regularized { delta, inner, .. } => {
                let mut d = convolution_derivs(inner, *delta, x);
                let sq: f64 = x.iter().map(|v| v * v).sum();
                d.log_density += -0.5 * delta * sq - self.log_normalizer();
                for i in 0..n {
                    d.grad_psi[i] += delta * x[i];
                    d.hess_psi[(i, i)] += delta;
                }
                d
            }
        }
    }

    /// `log Z` for nodes normalized by quadrature (zero otherwise).
    fn log_normalizer(&self) -> f64 {
        *self.0.log_z.get_or_init(|| match &self.0.kind {
            Kind::Tilt { base, t, theta } => {
                let (nodes, log_w) = normalizer_rule(base);
                log_sum_exp(nodes.iter().zip(&log_w).map(|(y, lw)| {
                    let b = base.log_density(y);
                    if b == f64::NEG_INFINITY {
                        b
                    } else {
                        lw + b + tilt_exponent(y, *t, theta)
                    }
                }))
                .0
            }
            Kind::Regularized { delta, inner, .. } => {
                let (nodes, log_w) = normalizer_rule(self);
                log_sum_exp(nodes.iter().zip(&log_w).map(|(x, lw)| {
                    let sq: f64 = x.iter().map(|v| v * v).sum();
                    lw + convolution_log(inner, *delta, x) - 0.5 * delta * sq
                }))
                .0
            }
            _ => 0.0,
        })
    }

    /// Whether `∫ e^{⟨θ,x⟩} ρ(x) dx` is finite.
    fn dominates_linear(&self, theta: &[f64]) -> bool {
        match &self.0.kind {
            Kind::Gaussian { .. } | Kind::Uniform(_) | Kind::Regularized { .. } => true,
            Kind::Exponential => theta[0] < 1.0,
            Kind::Product(fs) => {
                let mut off = 0;
                fs.iter().all(|f| {
                    let ok = f.dominates_linear(&theta[off..off + f.dim()]);
                    off += f.dim();
                    ok
                })
            }
            Kind::Affine { base, a, .. } => {
                let n = self.dim();
                let pulled: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[(i, j)] * theta[i]).sum()).collect();
                base.dominates_linear(&pulled)
            }
            Kind::Tilt { base, t, theta: th } => {
                *t > 0.0 || base.dominates_linear(&theta.iter().zip(th).map(|(a, b)| a + b).collect::<Vec<_>>())
            }
            Kind::Convolution { base, .. } => base.dominates_linear(theta),
        }
    }
}

fn apply_inv(a_inv: &DMatrix<f64>, shift: &[f64], y: &[f64]) -> Vec<f64> {
    let n = shift.len();
    (0..n)
        .map(|i| (0..n).map(|j| a_inv[(i, j)] * (y[j] - shift[j])).sum())
        .collect()
}

fn tilt_exponent(x: &[f64], t: f64, theta: &[f64]) -> f64 {
    x.iter().zip(theta).map(|(xi, th)| th * xi - 0.5 * t * xi * xi).sum()
}

/// Panels per axis for normalizer and inner convolution rules.
const RULE_PANELS: [usize; 3] = [400, 48, 12];
const RULE_ORDER: usize = 8;

/// Tensor composite Gauss–Legendre nodes over the effective box of `d`,
/// returned with `log w`. Support edges are panel breaks.
fn normalizer_rule(d: &Density) -> (Vec<Vec<f64>>, Vec<f64>) {
    let bb = d.effective_box();
    let n = bb.len();
    let breaks: Vec<Vec<f64>> = match d.support() {
        Support::Box(b) => b.iter().map(|(lo, hi)| vec![*lo, *hi]).collect(),
        _ => vec![Vec::new(); n],
    };
    let axes: Vec<(Vec<f64>, Vec<f64>)> = bb
        .iter()
        .enumerate()
        .map(|(k, (lo, hi))| composite_gl(*lo, *hi, RULE_PANELS[n - 1], RULE_ORDER, &breaks[k]))
        .collect();
    let sizes: Vec<usize> = axes.iter().map(|a| a.0.len()).collect();
    let total: usize = sizes.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut log_w = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut x = vec![0.0; n];
        let mut w = 1.0;
        for k in (0..n).rev() {
            let i = rem % sizes[k];
            rem /= sizes[k];
            x[k] = axes[k].0[i];
            w *= axes[k].1[i];
        }
        nodes.push(x);
        log_w.push(w.ln());
    }
    (nodes, log_w)
}

fn inner_rule(base: &Density) -> Result<InnerRule> {
    if base.dim() > 2 {
        return Err(Error::Unsupported(
            "Gaussian convolution by quadrature is limited to dimension <= 2".into(),
        ));
    }
    let (nodes, log_w) = normalizer_rule(base);
    let mut keep_nodes = Vec::new();
    let mut keep_w = Vec::new();
    for (y, lw) in nodes.into_iter().zip(log_w) {
        let b = base.log_density(&y);
        if b > f64::NEG_INFINITY {
            keep_nodes.push(y);
            keep_w.push(lw + b);
        }
    }
    let (lz, _) = log_sum_exp(keep_w.iter().copied());
    // Drop nodes below 1e-12 of the maximum weight.
    let max = keep_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = max + (1e-12f64).ln();
    let (nodes, log_w): (Vec<_>, Vec<_>) = keep_nodes
        .into_iter()
        .zip(keep_w)
        .filter(|(_, w)| *w >= cut)
        .map(|(y, w)| (y, w - lz))
        .unzip();
    Ok(InnerRule { nodes, log_w })
}

/// `log (ρ * γ_s)(x)` through the inner rule.
fn convolution_log(inner: &InnerRule, s: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let (lse, _) = log_sum_exp(inner.nodes.iter().zip(&inner.log_w).map(|(y, lw)| {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        lw - d2 / (2.0 * s)
    }));
    lse - 0.5 * n as f64 * (2.0 * PI * s).ln()
}

/// Value and derivatives of `ψ = -log(ρ * γ_s)`: the gradient is
/// `(x - m)/s` and the Hessian `Id/s - C/s²`, with `m`, `C` the mean and
/// covariance of the posterior `∝ ρ(y) γ_s(x - y)`.
fn convolution_derivs(inner: &InnerRule, s: f64, x: &[f64]) -> Derivs {
    let n = x.len();
    let (lse, logs) = log_sum_exp(inner.nodes.iter().zip(&inner.log_w).map(|(y, lw)| {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        lw - d2 / (2.0 * s)
    }));
    let probs: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
    let mut m = vec![0.0; n];
    for (p, y) in probs.iter().zip(&inner.nodes) {
        for k in 0..n {
            m[k] += p * y[k];
        }
    }
    let mut c = DMatrix::zeros(n, n);
    for (p, y) in probs.iter().zip(&inner.nodes) {
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] += p * (y[i] - m[i]) * (y[j] - m[j]);
            }
        }
    }
    Derivs {
        log_density: lse - 0.5 * n as f64 * (2.0 * PI * s).ln(),
        grad_psi: (0..n).map(|k| (x[k] - m[k]) / s).collect(),
        hess_psi: DMatrix::identity(n, n) / s - c / (s * s),
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        catalog::write_spec(self, f)
    }
}
