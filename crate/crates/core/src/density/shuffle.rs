use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Test functions for the convolution/multiplication interchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShuffleFunction {
    One,
    /// Centred Gaussian bump `γ_u`.
    Gaussian { u: f64 },
    /// Indicator of `[lo, hi]`, taking the value 1/2 at the endpoints.
    Indicator { lo: f64, hi: f64 },
}

impl ShuffleFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ShuffleFunction::One => 1.0,
            ShuffleFunction::Gaussian { u } => gauss(x, u),
            ShuffleFunction::Indicator { lo, hi } => {
                if x > lo && x < hi {
                    1.0
                } else if x == lo || x == hi {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShuffleReport {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// `sup_x |(f γ_t) * γ_s - S_r[(f * γ_p) γ_q]|` over the grid nodes.
    pub discrepancy: f64,
    /// `sup_x (f γ_t) * γ_s`, for scale.
    pub peak: f64,
    pub spacing: f64,
}

fn gauss(x: f64, s: f64) -> f64 {
    (-x * x / (2.0 * s)).exp() / (2.0 * PI * s).sqrt()
}

/// Grid quadrature of `∫ f(y) k(y) dy`, restricted to `|y - c| ≤ width`.
fn banded_sum(coords: &[f64], weights: &[f64], c: f64, width: f64, g: impl Fn(f64) -> f64) -> f64 {
    let lo = coords.partition_point(|&y| y < c - width);
    let hi = coords.partition_point(|&y| y <= c + width);
    (lo..hi).map(|i| weights[i] * g(coords[i])).sum()
}

/// Compares `(f γ_t) * γ_s` with `S_r[(f * γ_p) γ_q]` on a 1D grid, doing
/// both convolutions with the grid's own quadrature rule.
///
/// Here `p = st/(s+t)`, `q = t²/(s+t)`, `r = t/(s+t)` and
/// `S_r g(x) = r g(r x)`.
pub fn gaussian_shuffle_check(f: ShuffleFunction, s: f64, t: f64, grid: &Grid) -> Result<ShuffleReport> {
    if grid.dim() != 1 {
        return Err(Error::Unsupported("shuffle check runs on 1D grids".into()));
    }
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(format!("need s, t > 0 (got {s}, {t})")));
    }
    let p = s * t / (s + t);
    let q = t * t / (s + t);
    let r = t / (s + t);
    let ys = grid.axis_coords(0);
    let ws = grid.axis_weights(0);

    let lhs: Vec<f64> = ys
        .iter()
        .map(|&x| banded_sum(ys, ws, x, 12.0 * s.sqrt(), |y| f.eval(y) * gauss(y, t) * gauss(x - y, s)))
        .collect();
    let rhs: Vec<f64> = ys
        .iter()
        .map(|&x| {
            let rx = r * x;
            r * banded_sum(ys, ws, rx, 12.0 * p.sqrt(), |y| f.eval(y) * gauss(rx - y, p)) * gauss(rx, q)
        })
        .collect();

    let peak = lhs.iter().copied().fold(0.0, f64::max);
    let source_peak = ys.iter().map(|&y| f.eval(y) * gauss(y, t)).fold(0.0, f64::max);
    let tol = 1e-10;
    let edge = |v: &[f64], scale: f64| (v[0].abs().max(v[v.len() - 1].abs())) / scale;
    let source: Vec<f64> = ys.iter().map(|&y| f.eval(y) * gauss(y, t)).collect();
    let leak = edge(&lhs, peak).max(edge(&source, source_peak));
    if !(leak <= tol) {
        return Err(Error::MassLeakage { ratio: leak, tol });
    }
    let discrepancy = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ShuffleReport {
        s,
        t,
        p,
        q,
        r,
        discrepancy,
        peak,
        spacing: grid.spacing(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function_gives_gamma_s_plus_t() {
        let g = Grid::line(-12.0, 12.0, 2401).unwrap();
        let rep = gaussian_shuffle_check(ShuffleFunction::One, 0.7, 1.3, &g).unwrap();
        assert!(rep.discrepancy < 1e-12, "{}", rep.discrepancy);
    }

    #[test]
    fn small_box_leaks() {
        let g = Grid::line(-1.0, 1.0, 201).unwrap();
        assert!(matches!(
            gaussian_shuffle_check(ShuffleFunction::One, 1.0, 1.0, &g),
            Err(Error::MassLeakage { .. })
        ));
    }
}
