use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use super::{inner_rule, Density, Kind};
use crate::error::{Error, Result};
use crate::grid::Grid;

impl Density {
    /// Exponential tilt `∝ e^{⟨θ,x⟩ - t|x|²/2} ρ(x)`.
    ///
    /// Gaussian inputs stay Gaussian in closed form; everything else gets a
    /// lazily computed quadrature normalizer.
    pub fn tilt(&self, t: f64, theta: &[f64]) -> Result<Density> {
        let n = self.dim();
        if theta.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: theta.len(),
            });
        }
        if !(t >= 0.0) || theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("tilt needs t >= 0 (got {t})")));
        }
        if t == 0.0 && theta.iter().all(|v| *v == 0.0) {
            return Ok(self.clone());
        }
        if t == 0.0 && !self.dominates_linear(theta) {
            return Err(Error::DivergentNormalizer(format!(
                "e^<theta,x> is not integrable against {self} for theta = {theta:?}"
            )));
        }
        if let Kind::Gaussian { mean, s } = &self.0.kind {
            let precision = 1.0 / s + t;
            let m = mean
                .iter()
                .zip(theta)
                .map(|(m, th)| (m / s + th) / precision)
                .collect();
            return Density::gaussian(m, 1.0 / precision);
        }
        Ok(Density::wrap(
            n,
            Kind::Tilt {
                base: self.clone(),
                t,
                theta: theta.to_vec(),
            },
        ))
    }

    /// Law of `X + √s Z` with `Z` standard normal.
    pub fn convolve_gaussian(&self, s: f64) -> Result<Density> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("convolution needs s > 0 (got {s})")));
        }
        if let Kind::Gaussian { mean, s: a } = &self.0.kind {
            return Density::gaussian(mean.clone(), a + s);
        }
        Ok(Density::wrap(
            self.dim(),
            Kind::Convolution {
                base: self.clone(),
                s,
                inner: inner_rule(self)?,
            },
        ))
    }

    /// `(ρ * γ_δ) · γ_{1/δ}`, normalized. Smooth, positive everywhere and
    /// `δ ≤ ∇²ψ ≤ δ + 1/δ`.
    pub fn regularize(&self, delta: f64) -> Result<Density> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization needs delta in (0, 1) (got {delta})"
            )));
        }
        if let Kind::Gaussian { mean, s: a } = &self.0.kind {
            let precision = 1.0 / (a + delta) + delta;
            let m = mean.iter().map(|m| m / (a + delta) / precision).collect();
            return Density::gaussian(m, 1.0 / precision);
        }
        Ok(Density::wrap(
            self.dim(),
            Kind::Regularized {
                base: self.clone(),
                delta,
                inner: inner_rule(self)?,
            },
        ))
    }
}

/// Smallest eigenvalue of `∇²ψ` over the grid nodes inside the support.
pub fn uniform_convexity_estimate(d: &Density, grid: &Grid) -> f64 {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let dv = d.derivs(&x[..d.dim()]);
            if !dv.inside() {
                return f64::INFINITY;
            }
            SymmetricEigen::new(dv.hess_psi)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_tilt_completes_the_square() {
        let g = Density::standard_gaussian(2, 1.0).unwrap();
        let p = g.tilt(1.0, &[0.5, -1.0]).unwrap();
        let (m, s) = p.as_gaussian().unwrap();
        assert!((m[0] - 0.25).abs() < 1e-15 && (m[1] + 0.5).abs() < 1e-15);
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_tilt_is_identity() {
        let e = Density::centered_exponential();
        let same = e.tilt(0.0, &[0.0]).unwrap();
        assert!(std::sync::Arc::ptr_eq(&e.0, &same.0));
    }

    #[test]
    fn exponential_tilt_diverges_past_rate() {
        let e = Density::centered_exponential();
        assert!(matches!(e.tilt(0.0, &[1.5]), Err(Error::DivergentNormalizer(_))));
        assert!(e.tilt(0.0, &[0.5]).is_ok());
        assert!(e.tilt(0.1, &[1.5]).is_ok());
    }

    #[test]
    fn regularized_gaussian_closed_form() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let r = g.regularize(0.1).unwrap();
        let (_, s) = r.as_gaussian().unwrap();
        assert!((s - 1.1 / 1.11).abs() < 1e-14);
        assert!((s - 0.990991).abs() < 1e-6);
        assert!((r.hess_psi(&[0.3])[(0, 0)] - 1.00909).abs() < 1e-5);
        assert!(g.regularize(1.0).is_err());
    }

    #[test]
    fn convolution_of_gaussians_adds_variance() {
        let g = Density::gaussian(vec![1.0], 0.5).unwrap();
        let c = g.convolve_gaussian(0.25).unwrap();
        assert_eq!(c.as_gaussian().unwrap().1, 0.75);
        assert!((c.uniform_convexity_t() - 1.0 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn convexity_estimate_matches_tilt_shift() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let grid = Grid::line(-3.0, 3.0, 61).unwrap();
        let p = g.tilt(2.0, &[0.4]).unwrap();
        assert!((uniform_convexity_estimate(&p, &grid) - 3.0).abs() < 1e-12);
    }
}
