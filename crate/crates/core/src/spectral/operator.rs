use rayon::prelude::*;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{pcg, CgOutcome, SymTridiagonal};

/// Nearest-neighbour bond of the lattice with its coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub axis: usize,
    pub coupling: f64,
}

/// `-L` as a weighted graph Laplacian `K = Dᵀ Ω D` on the grid, with node
/// masses `m_i` (summing to one) representing `μ`.
///
/// The discrete Dirichlet form `E(u,v) = Σ_e c_e (u_j-u_i)(v_j-v_i)` equals
/// `⟨-L u, v⟩_μ = Σ_i m_i v_i (-L u)_i` identically, and constants are in
/// the kernel. Couplings use the density at bond midpoints.
///
/// When the support does not fill the grid box, only the largest connected
/// set of nodes with positive density is kept (a staircase domain with
/// zero flux across its boundary); operator indices then differ from grid
/// indices.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    density: Density,
    grid: Grid,
    nodes: Vec<usize>,
    slot: Vec<usize>,
    mass: Vec<f64>,
    edges: Vec<Edge>,
    degree: Vec<f64>,
    sqrt_mass: Vec<f64>,
}

impl DiscreteOperator {
    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    /// True when every grid node is an operator node.
    pub fn is_full(&self) -> bool {
        self.nodes.len() == self.grid.len()
    }

    /// Grid index of operator node `i`.
    pub fn grid_index(&self, i: usize) -> usize {
        self.nodes[i]
    }

    /// Coordinates of operator node `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.grid.node(self.nodes[i])[..self.dim()].to_vec()
    }

    /// Operator index of the lattice neighbour of `i` along `axis`.
    pub fn neighbor(&self, i: usize, axis: usize, forward: bool) -> Option<usize> {
        let g = self.nodes[i];
        let m = self.grid.multi_index(g)[axis];
        let s = self.grid.stride(axis);
        let j = if forward {
            (m + 1 < self.grid.axes()[axis].n).then(|| g + s)?
        } else {
            (m > 0).then(|| g - s)?
        };
        let k = self.slot[j];
        (k != NONE).then_some(k)
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Node masses `m_i`; they sum to one.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `√m`, the unit kernel vector of the symmetrized form.
    pub fn ground_state(&self) -> &[f64] {
        &self.sqrt_mass
    }

    /// `K u = Σ_e c_e (u_i - u_j)` at every node (the Dirichlet-form matrix).
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.degree.iter().zip(u).map(|(d, x)| d * x).collect();
        for e in &self.edges {
            out[e.i] -= e.coupling * u[e.j];
            out[e.j] -= e.coupling * u[e.i];
        }
        out
    }

    /// `-L u = M⁻¹ K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut k = self.apply_stiffness(u);
        k.iter_mut().zip(&self.mass).for_each(|(v, m)| *v /= m);
        k
    }

    /// `L u`.
    pub fn apply_generator(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u).into_iter().map(|v| -v).collect()
    }

    /// `S = M^{-1/2} K M^{-1/2}`, symmetric with kernel `√m`.
    pub fn apply_symmetric(&self, q: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = q.iter().zip(&self.sqrt_mass).map(|(a, s)| a / s).collect();
        let mut k = self.apply_stiffness(&u);
        k.iter_mut().zip(&self.sqrt_mass).for_each(|(v, s)| *v /= s);
        k
    }

    pub fn symmetric_diagonal(&self) -> Vec<f64> {
        self.degree.iter().zip(&self.mass).map(|(d, m)| d / m).collect()
    }

    /// Dirichlet form `E(u, v)`.
    pub fn dirichlet(&self, u: &[f64], v: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.coupling * (u[e.j] - u[e.i]) * (v[e.j] - v[e.i]))
            .sum()
    }

    /// `⟨u, v⟩_μ`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// `∫ u dμ`.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.mass.iter().zip(u).map(|(m, a)| m * a).sum()
    }

    pub fn variance(&self, u: &[f64]) -> f64 {
        let m = self.mean(u);
        self.mass.iter().zip(u).map(|(w, a)| w * (a - m) * (a - m)).sum()
    }

    /// `∫ ∂_k u dμ`, defined as `E(u, x_k)`.
    pub fn mean_gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for e in &self.edges {
            let (a, b) = (self.coord(e.i, e.axis), self.coord(e.j, e.axis));
            out[e.axis] += e.coupling * (u[e.j] - u[e.i]) * (b - a);
        }
        out
    }

    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        self.grid.axis_coords(axis)[self.grid.multi_index(self.nodes[idx])[axis]]
    }

    /// Values of `f` at the grid nodes.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        let n = self.dim();
        (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.grid.node(self.nodes[i])[..n]))
            .collect()
    }

    /// Coordinate function `x_k` on the grid.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.coord(i, axis)).collect()
    }

    /// Solves `-L g = f` for `f` with `∫ f dμ = 0`, returning the mean-zero
    /// solution. 1D uses the exact cumulative-flux recursion; otherwise
    /// preconditioned CG on the symmetrized form.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mean = self.mean(f);
        let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if mean.abs() > 1e-8 * scale {
            return Err(Error::SingularSolve(format!("right-hand side has mean {mean:.3e}")));
        }
        let b: Vec<f64> = f.iter().zip(&self.mass).map(|(v, m)| m * (v - mean)).collect();
        let g = if self.dim() == 1 {
            let mut g = vec![0.0; self.len()];
            let mut flux = 0.0;
            for (k, e) in self.edges.iter().enumerate() {
                flux += b[k];
                g[e.j] = g[e.i] - flux / e.coupling;
            }
            g
        } else {
            let rhs: Vec<f64> = b.iter().zip(&self.sqrt_mass).map(|(v, s)| v / s).collect();
            let out = self.solve_symmetric(&rhs, None, 1e-12)?;
            out.x.iter().zip(&self.sqrt_mass).map(|(q, s)| q / s).collect()
        };
        let gm = self.mean(&g);
        Ok(g.into_iter().map(|v| v - gm).collect())
    }

    /// PCG for `S q = rhs` on the complement of `√m`.
    pub fn solve_symmetric(&self, rhs: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<CgOutcome> {
        let pre: Vec<f64> = self.symmetric_diagonal().iter().map(|d| 1.0 / d).collect();
        pcg(
            |q| self.apply_symmetric(q),
            rhs,
            &pre,
            Some(&self.sqrt_mass),
            x0,
            tol,
            20 * self.len().max(100),
        )
    }

    /// 1D symmetrized form as a tridiagonal matrix.
    pub fn tridiagonal(&self) -> Option<SymTridiagonal> {
        if self.dim() != 1 {
            return None;
        }
        let diag = self.symmetric_diagonal();
        let off = self
            .edges
            .iter()
            .map(|e| -e.coupling / (self.sqrt_mass[e.i] * self.sqrt_mass[e.j]))
            .collect();
        Some(SymTridiagonal { diag, off })
    }
}

const NONE: usize = usize::MAX;

/// Assembles `-L` for `d` on `grid`. Grid nodes outside the support are
/// dropped; it is an error if none remain connected.
pub fn build_operator(d: &Density, grid: &Grid) -> Result<DiscreteOperator> {
    let n = d.dim();
    if grid.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: grid.dim(),
        });
    }
    let log_rho: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| d.log_density(&grid.node(i)[..n]))
        .collect();
    let top = log_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::NonPositiveDensity { node: 0 });
    }
    // Bonds between positive nodes, with the midpoint density rescaled by
    // the maximum to keep tiny tails representable.
    let mut pairs = Vec::new();
    for idx in 0..grid.len() {
        if !log_rho[idx].is_finite() {
            continue;
        }
        let mi = grid.multi_index(idx);
        for k in 0..n {
            if mi[k] + 1 < grid.axes()[k].n && log_rho[idx + grid.stride(k)].is_finite() {
                pairs.push((idx, idx + grid.stride(k), k));
            }
        }
    }
    let bonds: Vec<(usize, usize, usize, f64)> = pairs
        .par_iter()
        .filter_map(|&(i, j, k)| {
            let (a, b) = (grid.node(i), grid.node(j));
            let mut mid = a;
            mid[k] = 0.5 * (a[k] + b[k]);
            let h = b[k] - a[k];
            let mi = grid.multi_index(i);
            let perp: f64 = (0..n)
                .filter(|&l| l != k)
                .map(|l| grid.axis_weights(l)[mi[l]])
                .product();
            let r = (d.log_density(&mid[..n]) - top).exp();
            (r > 0.0).then_some((i, j, k, r * perp / h))
        })
        .collect();
    let nodes = largest_component(grid.len(), &log_rho, &bonds);
    if nodes.is_empty() {
        return Err(Error::NonPositiveDensity { node: 0 });
    }
    let mut slot = vec![NONE; grid.len()];
    for (k, &g) in nodes.iter().enumerate() {
        slot[g] = k;
    }
    let rho: Vec<f64> = nodes.iter().map(|&g| (log_rho[g] - top).exp()).collect();
    let total: f64 = nodes.iter().zip(&rho).map(|(&g, r)| r * grid.weight(g)).sum();
    let mass: Vec<f64> = nodes.iter().zip(&rho).map(|(&g, r)| r * grid.weight(g) / total).collect();
    if let Some(node) = mass.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::NonPositiveDensity { node: nodes[node] });
    }
    let edges: Vec<Edge> = bonds
        .iter()
        .filter(|b| slot[b.0] != NONE && slot[b.1] != NONE)
        .map(|&(i, j, axis, c)| Edge {
            i: slot[i],
            j: slot[j],
            axis,
            coupling: c / total,
        })
        .collect();
    let mut degree = vec![0.0; nodes.len()];
    for e in &edges {
        degree[e.i] += e.coupling;
        degree[e.j] += e.coupling;
    }
    let sqrt_mass = mass.iter().map(|m| m.sqrt()).collect();
    Ok(DiscreteOperator {
        density: d.clone(),
        grid: grid.clone(),
        nodes,
        slot,
        mass,
        edges,
        degree,
        sqrt_mass,
    })
}

/// Grid indices of the largest connected set of positive nodes, ascending.
fn largest_component(len: usize, log_rho: &[f64], bonds: &[(usize, usize, usize, f64)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j, _, _) in bonds {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut size = vec![0usize; len];
    for i in 0..len {
        if log_rho[i].is_finite() {
            let r = find(&mut parent, i);
            size[r] += 1;
        }
    }
    let Some(root) = (0..len).filter(|&r| size[r] > 0).max_by_key(|&r| (size[r], std::cmp::Reverse(r))) else {
        return vec![];
    };
    (0..len)
        .filter(|&i| log_rho[i].is_finite() && find(&mut parent, i) == root)
        .collect()
}
