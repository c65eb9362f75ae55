//! Integration against densities on grids, and seeded sampling.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::density::{Density, View};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::slicing::ConvexBody;

/// Relative density allowed just outside the grid box.
pub const LEAKAGE_TOL: f64 = 1e-10;

/// Density values at every grid node.
pub fn node_densities(d: &Density, grid: &Grid) -> Vec<f64> {
    let n = d.dim();
    (0..grid.len())
        .into_par_iter()
        .map(|i| d.density(&grid.node(i)[..n]))
        .collect()
}

/// Fails when the density just outside the box exceeds
/// `LEAKAGE_TOL` times the largest node density.
pub fn check_leakage(d: &Density, grid: &Grid, values: &[f64]) -> Result<()> {
    let n = d.dim();
    if grid.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: grid.dim(),
        });
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::MassLeakage {
            ratio: f64::INFINITY,
            tol: LEAKAGE_TOL,
        });
    }
    let worst = (0..grid.len())
        .into_par_iter()
        .filter(|&i| grid.on_boundary(i))
        .map(|i| {
            let mi = grid.multi_index(i);
            let x = grid.node(i);
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let ax = &grid.axes()[k];
                let step = (ax.hi - ax.lo) / (ax.n - 1) as f64;
                for (at_face, sign) in [(mi[k] == 0, -1.0), (mi[k] + 1 == ax.n, 1.0)] {
                    if at_face {
                        let mut y = x;
                        y[k] = if sign < 0.0 { ax.lo - step } else { ax.hi + step };
                        worst = worst.max(d.density(&y[..n]));
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let ratio = worst / max;
    if ratio > LEAKAGE_TOL {
        return Err(Error::MassLeakage { ratio, tol: LEAKAGE_TOL });
    }
    Ok(())
}

/// `Σ w_i ρ(x_i)`; close to one for a normalized density on a covering grid.
pub fn mass(d: &Density, grid: &Grid) -> Result<f64> {
    let rho = node_densities(d, grid);
    check_leakage(d, grid, &rho)?;
    Ok(rho.iter().enumerate().map(|(i, r)| grid.weight(i) * r).sum())
}

/// `∫ f dμ` by weighted summation, normalized by the quadrature mass so
/// that constants integrate exactly.
pub fn integrate<F>(f: F, d: &Density, grid: &Grid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rho = node_densities(d, grid);
    check_leakage(d, grid, &rho)?;
    Ok(integrate_with(&f, d.dim(), grid, &rho))
}

/// As [`integrate`] with precomputed node densities and no leakage check.
pub fn integrate_with<F>(f: &F, n: usize, grid: &Grid, rho: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (num, den) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let w = grid.weight(i) * rho[i];
            if w == 0.0 {
                (0.0, 0.0)
            } else {
                (w * f(&grid.node(i)[..n]), w)
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    num / den
}

/// Stream seed for `(master, index)`: a SplitMix64 step.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

#[derive(Debug)]
enum Scheme {
    Gaussian { mean: Vec<f64>, sd: f64 },
    Exponential,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// Barycentric Dirichlet(1,...,1) weights over the vertices.
    Simplex { vertices: Vec<Vec<f64>> },
    Rejection { body: ConvexBody, lo: Vec<f64>, hi: Vec<f64> },
    Product(Vec<Scheme>),
    Affine { base: Box<Scheme>, a: nalgebra::DMatrix<f64>, shift: Vec<f64> },
    /// Piecewise-linear density on a 1D lattice, inverted exactly per cell.
    InverseCdf { x: Vec<f64>, rho: Vec<f64>, cdf: Vec<f64> },
    /// Alias table over lattice cells with uniform jitter inside the cell.
    Cells { grid: Grid, alias: WeightedAliasIndex<f64>, cells: Vec<[usize; 3]> },
}

/// Seeded i.i.d. sampler for a catalog density.
#[derive(Debug)]
pub struct Sampler {
    density: Density,
    scheme: Scheme,
    master_seed: u64,
}

fn scheme_for(d: &Density) -> Result<Scheme> {
    Ok(match d.view() {
        View::Gaussian { mean, s } => Scheme::Gaussian {
            mean: mean.to_vec(),
            sd: s.sqrt(),
        },
        View::Exponential => Scheme::Exponential,
        View::Uniform(ConvexBody::Box { lo, hi }) => Scheme::Box {
            lo: lo.clone(),
            hi: hi.clone(),
        },
        View::Uniform(ConvexBody::Ball { center, radius }) => Scheme::Ball {
            center: center.clone(),
            radius: *radius,
        },
        View::Uniform(body @ ConvexBody::Polytope(p)) => {
            if p.vertices().len() == p.dim() + 1 {
                Scheme::Simplex {
                    vertices: p.vertices().to_vec(),
                }
            } else {
                let bb = body.bounding_box();
                Scheme::Rejection {
                    body: body.clone(),
                    lo: bb.iter().map(|b| b.0).collect(),
                    hi: bb.iter().map(|b| b.1).collect(),
                }
            }
        }
        View::Product(fs) => Scheme::Product(fs.iter().map(scheme_for).collect::<Result<_>>()?),
        View::Affine { base, a, shift } => Scheme::Affine {
            base: Box::new(scheme_for(base)?),
            a: a.clone(),
            shift: shift.to_vec(),
        },
        View::Opaque => grid_scheme(d)?,
    })
}

fn grid_scheme(d: &Density) -> Result<Scheme> {
    let grid = d.default_grid();
    let rho = node_densities(d, &grid);
    check_leakage(d, &grid, &rho)?;
    if d.dim() == 1 {
        let x = grid.axis_coords(0).to_vec();
        let mut cdf = vec![0.0; x.len()];
        for i in 1..x.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (rho[i] + rho[i - 1]) * (x[i] - x[i - 1]);
        }
        let total = cdf[cdf.len() - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        let rho = rho.iter().map(|r| r / total).collect();
        return Ok(Scheme::InverseCdf { x, rho, cdf });
    }
    let n = d.dim();
    let counts: Vec<usize> = grid.axes().iter().map(|a| a.n - 1).collect();
    let total: usize = counts.iter().product();
    let mut cells = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for c in 0..total {
        let mut rem = c;
        let mut mi = [0usize; 3];
        for k in (0..n).rev() {
            mi[k] = rem % counts[k];
            rem /= counts[k];
        }
        let mut sum = 0.0;
        for corner in 0..(1usize << n) {
            let mut idx = 0;
            for k in 0..n {
                idx += (mi[k] + (corner >> k & 1)) * grid.stride(k);
            }
            sum += rho[idx];
        }
        cells.push(mi);
        weights.push(sum);
    }
    let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::Unsupported(format!("alias table: {e}")))?;
    Ok(Scheme::Cells { grid, alias, cells })
}

fn draw(scheme: &Scheme, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    match scheme {
        Scheme::Gaussian { mean, sd } => {
            for m in mean {
                let z: f64 = StandardNormal.sample(rng);
                out.push(m + sd * z);
            }
        }
        Scheme::Exponential => {
            let e: f64 = Exp1.sample(rng);
            out.push(e - 1.0);
        }
        Scheme::Box { lo, hi } => {
            for (a, b) in lo.iter().zip(hi) {
                out.push(a + (b - a) * rng.random::<f64>());
            }
        }
        Scheme::Ball { center, radius } => {
            let n = center.len();
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let len = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
            out.extend(center.iter().zip(&z).map(|(c, v)| c + r * v / len));
        }
        Scheme::Simplex { vertices } => {
            let e: Vec<f64> = vertices.iter().map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            let n = vertices[0].len();
            for k in 0..n {
                out.push(vertices.iter().zip(&e).map(|(v, w)| v[k] * w / s).sum());
            }
        }
        Scheme::Rejection { body, lo, hi } => loop {
            let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
            if body.contains(&x) {
                out.extend(x);
                break;
            }
        },
        Scheme::Product(parts) => {
            for p in parts {
                draw(p, rng, out);
            }
        }
        Scheme::Affine { base, a, shift } => {
            let mut y = Vec::with_capacity(shift.len());
            draw(base, rng, &mut y);
            let v = a * DVector::from_vec(y);
            out.extend(v.iter().zip(shift).map(|(a, b)| a + b));
        }
        Scheme::InverseCdf { x, rho, cdf } => {
            let u: f64 = rng.random();
            let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1) - 1;
            // Solve for s in [0, h]: ρ_i s + (ρ_{i+1} - ρ_i) s²/(2h) = u - F_i.
            let h = x[i + 1] - x[i];
            let (r0, r1) = (rho[i], rho[i + 1]);
            let target = (u - cdf[i]).max(0.0);
            let slope = (r1 - r0) / h;
            let s = if slope.abs() < 1e-14 * (r0 + r1).max(1e-300) {
                if r0 > 0.0 { target / r0 } else { 0.5 * h }
            } else {
                let disc = (r0 * r0 + 2.0 * slope * target).max(0.0);
                2.0 * target / (r0 + disc.sqrt())
            };
            out.push(x[i] + s.clamp(0.0, h));
        }
        Scheme::Cells { grid, alias, cells } => {
            let mi = cells[alias.sample(rng)];
            for k in 0..grid.dim() {
                let c = grid.axis_coords(k);
                let (a, b) = (c[mi[k]], c[mi[k] + 1]);
                out.push(a + (b - a) * rng.random::<f64>());
            }
        }
    }
}

impl Sampler {
    pub fn new(d: &Density, master_seed: u64) -> Result<Self> {
        Ok(Self {
            density: d.clone(),
            scheme: scheme_for(d)?,
            master_seed,
        })
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// One draw from an explicit stream.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.density.dim());
        draw(&self.scheme, rng, &mut out);
        out
    }

    /// `count` draws from the stream for `(master_seed, worker)`.
    pub fn sample_stream(&self, worker: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = stream(self.master_seed, worker);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    /// `count` draws from worker stream 0.
    pub fn sample(&self, count: usize) -> Vec<Vec<f64>> {
        self.sample_stream(0, count)
    }
}

/// Kolmogorov–Smirnov statistic of 1D samples against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments_by_quadrature() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let grid = g.default_grid();
        assert!((integrate(|_| 1.0, &g, &grid).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate(|x| x[0] * x[0], &g, &grid).unwrap() - 1.0).abs() < 1e-8);
        assert!((integrate(|x| x[0].powi(4), &g, &grid).unwrap() - 3.0).abs() < 1e-7);
        assert!((mass(&g, &grid).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_leaks() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let grid = Grid::line(-3.0, 3.0, 101).unwrap();
        assert!(matches!(integrate(|_| 1.0, &g, &grid), Err(Error::MassLeakage { .. })));
    }

    #[test]
    fn uniform_box_grid_does_not_leak() {
        let u = Density::uniform_interval(-1.0, 1.0).unwrap();
        let grid = Grid::line(-1.0, 1.0, 11).unwrap();
        assert!((mass(&u, &grid).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }
}
