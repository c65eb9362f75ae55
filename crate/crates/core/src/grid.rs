//! Tensor-product lattices with quadrature weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spec::{parse_box, split_top_level};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// A truncated rectangular lattice in dimension 1..=3. Nodes are stored
/// implicitly; index order is row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    rule: Rule,
    coords: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>, rule: Rule) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1..={MAX_DIM}, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.hi > a.lo) || a.n < 2 || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bad axis [{}, {}] with {} points",
                    a.lo, a.hi, a.n
                )));
            }
        }
        let (coords, weights): (Vec<_>, Vec<_>) = axes
            .iter()
            .map(|a| match rule {
                Rule::Trapezoid => trapezoid_axis(a.lo, a.hi, a.n),
                Rule::GaussLegendre => {
                    let (x, w) = gauss_legendre(a.n);
                    let half = 0.5 * (a.hi - a.lo);
                    let mid = 0.5 * (a.hi + a.lo);
                    (
                        x.iter().map(|t| mid + half * t).collect(),
                        w.iter().map(|w| half * w).collect(),
                    )
                }
            })
            .unzip();
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].n;
        }
        let len = axes.iter().map(|a| a.n).product();
        Ok(Self {
            axes,
            rule,
            coords,
            weights,
            strides,
            len,
        })
    }

    pub fn uniform(lo: &[f64], hi: &[f64], n: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: n.len().min(hi.len()),
            });
        }
        let axes = lo
            .iter()
            .zip(hi)
            .zip(n)
            .map(|((&lo, &hi), &n)| Axis { lo, hi, n })
            .collect();
        Self::new(axes, Rule::Trapezoid)
    }

    /// One-dimensional trapezoid grid.
    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::uniform(&[lo], &[hi], &[n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis_coords(&self, k: usize) -> &[f64] {
        &self.coords[k]
    }

    pub fn axis_weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    /// Uniform spacing of axis `k` (meaningful for trapezoid grids).
    pub fn spacing(&self, k: usize) -> f64 {
        let a = &self.axes[k];
        (a.hi - a.lo) / (a.n - 1) as f64
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.hi - a.lo).product()
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rem = idx;
        for k in 0..self.dim() {
            out[k] = rem / self.strides[k];
            rem %= self.strides[k];
        }
        out
    }

    pub fn node(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = self.coords[k][mi[k]];
        }
        x
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let mi = self.multi_index(idx);
        (0..self.dim()).map(|k| self.weights[k][mi[k]]).product()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.weight(i)).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = [f64; MAX_DIM]> + '_ {
        (0..self.len).map(|i| self.node(i))
    }

    /// True when the node sits on the outer face of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dim()).any(|k| mi[k] == 0 || mi[k] + 1 == self.axes[k].n)
    }

    /// Same box with every axis refined to `2(n-1)+1` points.
    pub fn refined(&self) -> Self {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                n: 2 * (a.n - 1) + 1,
                ..a.clone()
            })
            .collect();
        Self::new(axes, self.rule).expect("refinement of a valid grid")
    }

    pub fn with_rule(&self, rule: Rule) -> Self {
        Self::new(self.axes.clone(), rule).expect("valid axes")
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let boxes: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("[{},{}]", a.lo, a.hi))
            .collect();
        let ns: Vec<String> = self.axes.iter().map(|a| a.n.to_string()).collect();
        write!(f, "grid:box={},n={}", boxes.join("x"), ns.join("x"))?;
        if self.rule == Rule::GaussLegendre {
            write!(f, ",rule=gl")?;
        }
        Ok(())
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `grid:box=[-8,8]x[-8,8],n=161x161[,rule=gl]`
    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let body = s
            .trim()
            .strip_prefix("grid:")
            .ok_or_else(|| err("missing `grid:` prefix"))?;
        let mut bounds = None;
        let mut counts: Option<Vec<usize>> = None;
        let mut rule = Rule::Trapezoid;
        for part in split_top_level(body, ',') {
            let (k, v) = part.split_once('=').ok_or_else(|| err("expected key=value"))?;
            match k.trim() {
                "box" => bounds = Some(parse_box(v).map_err(|e| err(&e))?),
                "n" => {
                    counts = Some(
                        v.split('x')
                            .map(|c| c.trim().parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| err("bad point count"))?,
                    )
                }
                "rule" => {
                    rule = match v.trim() {
                        "gl" | "gauss" | "gauss-legendre" => Rule::GaussLegendre,
                        "trapezoid" | "trap" => Rule::Trapezoid,
                        _ => return Err(err("unknown rule")),
                    }
                }
                other => return Err(err(&format!("unknown key `{other}`"))),
            }
        }
        let bounds = bounds.ok_or_else(|| err("missing box"))?;
        let mut counts = counts.ok_or_else(|| err("missing n"))?;
        if counts.len() == 1 && bounds.len() > 1 {
            counts = vec![counts[0]; bounds.len()];
        }
        if counts.len() != bounds.len() {
            return Err(err("box and n have different dimensions"));
        }
        let axes = bounds
            .into_iter()
            .zip(counts)
            .map(|((lo, hi), n)| Axis { lo, hi, n })
            .collect();
        Grid::new(axes, rule).map_err(|e| err(&e.to_string()))
    }
}

fn trapezoid_axis(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let x = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + i as f64 * h })
        .collect();
    let w = (0..n)
        .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
        .collect();
    (x, w)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[lo, hi]` with `panels` panels of
/// `order` points each, with extra panel breaks at `breaks` inside the range.
pub fn composite_gl(lo: f64, hi: f64, panels: usize, order: usize, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut cuts: Vec<f64> = (0..=panels)
        .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
        .collect();
    for &b in breaks {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + b.abs()));
    let (gx, gw) = gauss_legendre(order);
    let mut x = Vec::with_capacity((cuts.len() - 1) * order);
    let mut w = Vec::with_capacity(x.capacity());
    for pair in cuts.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[1] + pair[0]);
        for (t, wt) in gx.iter().zip(&gw) {
            x.push(mid + half * t);
            w.push(half * wt);
        }
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let g = Grid::uniform(&[-1.0, 0.0], &[2.0, 0.5], &[31, 17]).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - g.volume()).abs() <= 1e-12 * g.volume());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is exact for 5 nodes
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_grid_weights_sum_to_volume() {
        let g: Grid = "grid:box=[-3,5],n=40,rule=gl".parse().unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 8.0).abs() < 1e-12 * 8.0);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let g: Grid = "grid:box=[-8,8]x[-2,2],n=161x41".parse().unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.len(), 161 * 41);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        let again: Grid = g.to_string().parse().unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn node_indexing_is_row_major() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 2.0], &[3, 5]).unwrap();
        assert_eq!(g.node(1)[..2], [0.0, 0.5]);
        assert_eq!(g.node(5)[..2], [0.5, 0.0]);
        assert!(g.on_boundary(0));
        assert!(!g.on_boundary(6));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!("grid:box=[1,0],n=10".parse::<Grid>().is_err());
        assert!("grid:box=[0,1],n=10,foo=1".parse::<Grid>().is_err());
        assert!("box=[0,1],n=10".parse::<Grid>().is_err());
    }

    #[test]
    fn composite_gl_respects_breaks() {
        let (x, w) = composite_gl(-1.0, 2.0, 3, 4, &[0.3]);
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| if *x >= 0.3 { *w } else { 0.0 })
            .sum();
        assert!((s - 1.7).abs() < 1e-14);
    }
}
