use nalgebra::{DMatrix, DVector};

use super::{Density, Kind};

/// Closed-form mean, covariance and third central moment tensor
/// (`third[(a*n + b)*n + c]`).
#[derive(Debug, Clone)]
pub struct ExactMoments {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub third: Option<Vec<f64>>,
}

impl Density {
    /// Moments known without quadrature: Gaussians, uniform bodies, the
    /// exponential, and products, affine images and Gaussian convolutions
    /// of those.
    pub fn exact_moments(&self) -> Option<ExactMoments> {
        let n = self.dim();
        match &self.0.kind {
            Kind::Gaussian { mean, s } => Some(ExactMoments {
                mean: mean.clone(),
                covariance: DMatrix::identity(n, n) * *s,
                third: Some(vec![0.0; n * n * n]),
            }),
            Kind::Uniform(b) => {
                let m = b.moments();
                Some(ExactMoments {
                    mean: m.mean,
                    covariance: m.covariance,
                    third: Some(m.third),
                })
            }
            Kind::Exponential => Some(ExactMoments {
                mean: vec![0.0],
                covariance: DMatrix::from_element(1, 1, 1.0),
                third: Some(vec![2.0]),
            }),
            Kind::Product(fs) => {
                let mut mean = Vec::with_capacity(n);
                let mut cov = DMatrix::zeros(n, n);
                let mut third = Some(vec![0.0; n * n * n]);
                let mut off = 0;
                for f in fs {
                    let m = f.exact_moments()?;
                    let k = f.dim();
                    mean.extend(m.mean);
                    cov.view_mut((off, off), (k, k)).copy_from(&m.covariance);
                    match (&mut third, m.third) {
                        (Some(t), Some(ft)) => {
                            for a in 0..k {
                                for b in 0..k {
                                    for c in 0..k {
                                        t[((off + a) * n + off + b) * n + off + c] = ft[(a * k + b) * k + c];
                                    }
                                }
                            }
                        }
                        _ => third = None,
                    }
                    off += k;
                }
                Some(ExactMoments {
                    mean,
                    covariance: cov,
                    third,
                })
            }
            Kind::Affine { base, a, shift, .. } => {
                let m = base.exact_moments()?;
                let mean = a * DVector::from_column_slice(&m.mean);
                let third = m.third.map(|t| {
                    let mut out = vec![0.0; n * n * n];
                    for p in 0..n {
                        for q in 0..n {
                            for r in 0..n {
                                let mut acc = 0.0;
                                for i in 0..n {
                                    for j in 0..n {
                                        for k in 0..n {
                                            acc += a[(p, i)] * a[(q, j)] * a[(r, k)] * t[(i * n + j) * n + k];
                                        }
                                    }
                                }
                                out[(p * n + q) * n + r] = acc;
                            }
                        }
                    }
                    out
                });
                Some(ExactMoments {
                    mean: mean.iter().zip(shift).map(|(m, v)| m + v).collect(),
                    covariance: a * m.covariance * a.transpose(),
                    third,
                })
            }
            Kind::Convolution { base, s, .. } => {
                let m = base.exact_moments()?;
                Some(ExactMoments {
                    covariance: m.covariance + DMatrix::identity(n, n) * *s,
                    ..m
                })
            }
            Kind::Tilt { .. } | Kind::Regularized { .. } => None,
        }
    }
}
