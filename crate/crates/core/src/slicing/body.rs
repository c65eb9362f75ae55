//! Convex bodies in dimension 1..=3 with exact volumes, moments,
//! hyperplane sections and half-space cuts.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// `⟨normal, x⟩ ≤ offset` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return Err(Error::InvalidParameter("zero halfspace normal".into()));
        }
        Ok(Self {
            normal: normal.iter().map(|v| v / len).collect(),
            offset: offset / len,
        })
    }

    fn value(&self, x: &[f64]) -> f64 {
        dotn(&self.normal, x) - self.offset
    }
}

/// Bounded intersection of half-spaces with its vertex set and a
/// simplicial decomposition (used for exact volume and moments).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polytope(Polytope),
}

/// Central moments of the uniform distribution on a body.
#[derive(Debug, Clone)]
pub struct BodyMoments {
    pub volume: f64,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// `third[(a * n + b) * n + c] = E (x-m)_a (x-m)_b (x-m)_c`
    pub third: Vec<f64>,
}

fn dotn(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Orthonormal basis of the complement of a unit vector (n = 2 or 3).
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    match u.len() {
        1 => vec![],
        2 => vec![vec![-u[1], u[0]]],
        _ => {
            let seed = if u[0].abs() < 0.6 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let a = cross(u, &seed);
            let na = dotn(&a, &a).sqrt();
            let a: Vec<f64> = a.iter().map(|v| v / na).collect();
            let b = cross(u, &a).to_vec();
            vec![a, b]
        }
    }
}

fn simplex_volume(v: &[Vec<f64>]) -> f64 {
    let n = v.len() - 1;
    let m = DMatrix::from_fn(n, n, |i, j| v[j + 1][i] - v[0][i]);
    m.determinant().abs() / factorial(n)
}

/// Raw moments of the uniform law on a simplex via Dirichlet(1,..,1)
/// barycentric moments: E Πλ^k = n! Πk! / (n + Σk)!.
fn simplex_raw_moments(v: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let n = v.len() - 1;
    let d = v[0].len();
    let k = v.len();
    let nf = factorial(n);
    let e2 = |i: usize, j: usize| nf * if i == j { 2.0 } else { 1.0 } / factorial(n + 2);
    let e3 = |i: usize, j: usize, l: usize| {
        let mult = if i == j && j == l {
            6.0
        } else if i == j || j == l || i == l {
            2.0
        } else {
            1.0
        };
        nf * mult / factorial(n + 3)
    };
    let mean: Vec<f64> = (0..d)
        .map(|a| v.iter().map(|p| p[a]).sum::<f64>() / k as f64)
        .collect();
    let mut second = DMatrix::zeros(d, d);
    let mut third = vec![0.0; d * d * d];
    for i in 0..k {
        for j in 0..k {
            let w2 = e2(i, j);
            for a in 0..d {
                for b in 0..d {
                    second[(a, b)] += w2 * v[i][a] * v[j][b];
                }
            }
            for l in 0..k {
                let w3 = e3(i, j, l);
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            third[(a * d + b) * d + c] += w3 * v[i][a] * v[j][b] * v[l][c];
                        }
                    }
                }
            }
        }
    }
    (mean, second, third)
}

impl Polytope {
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("polytope dimension {dim}")));
        }
        if halfspaces.iter().any(|h| h.normal.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: halfspaces.iter().map(|h| h.normal.len()).find(|&l| l != dim).unwrap_or(0),
            });
        }
        let vertices = enumerate_vertices(dim, &halfspaces);
        if vertices.len() < dim + 1 {
            return Err(Error::InvalidParameter(
                "halfspace list does not bound a body with nonempty interior".into(),
            ));
        }
        let simplices = triangulate(dim, &halfspaces, &vertices);
        let p = Self {
            dim,
            halfspaces,
            vertices,
            simplices,
        };
        if !(p.volume() > EPS) {
            return Err(Error::InvalidParameter("polytope has empty interior".into()));
        }
        Ok(p)
    }

    /// Simplex with the given `dim + 1` vertices.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.len().saturating_sub(1);
        if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidParameter("simplex needs n+1 points in R^n".into()));
        }
        if simplex_volume(&vertices) <= EPS {
            return Err(Error::InvalidParameter("degenerate simplex".into()));
        }
        let mut hs = Vec::with_capacity(dim + 1);
        for skip in 0..=dim {
            let face: Vec<&Vec<f64>> = vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| v)
                .collect();
            let normal: Vec<f64> = match dim {
                1 => vec![1.0],
                2 => {
                    let e = sub(face[1], face[0]);
                    vec![-e[1], e[0]]
                }
                _ => cross(&sub(face[1], face[0]), &sub(face[2], face[0])).to_vec(),
            };
            let mut h = Halfspace::new(normal, 0.0)?;
            h.offset = dotn(&h.normal, face[0]);
            if h.value(&vertices[skip]) > 0.0 {
                h.normal.iter_mut().for_each(|v| *v = -*v);
                h.offset = -h.offset;
            }
            hs.push(h);
        }
        Self::from_halfspaces(dim, hs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(|s| simplex_volume(s)).sum()
    }

    /// Every enumerated vertex satisfies every halfspace and lies on at
    /// least `dim` of them.
    pub fn vertices_consistent(&self) -> bool {
        self.vertices.iter().all(|v| {
            let tight = self
                .halfspaces
                .iter()
                .filter(|h| h.value(v).abs() <= 1e-9)
                .count();
            self.halfspaces.iter().all(|h| h.value(v) <= 1e-9) && tight >= self.dim
        })
    }
}

fn solve_small(rows: &[&Halfspace]) -> Option<Vec<f64>> {
    let n = rows.len();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i].normal[j]);
    let b = nalgebra::DVector::from_iterator(n, rows.iter().map(|h| h.offset));
    if a.determinant().abs() < 1e-12 {
        return None;
    }
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

fn enumerate_vertices(dim: usize, hs: &[Halfspace]) -> Vec<Vec<f64>> {
    let m = hs.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |p: Vec<f64>| {
        if hs.iter().all(|h| h.value(&p) <= 1e-9)
            && !out
                .iter()
                .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-9))
        {
            out.push(p);
        }
    };
    match dim {
        1 => {
            for i in 0..m {
                if let Some(p) = solve_small(&[&hs[i]]) {
                    push(p);
                }
            }
        }
        2 => {
            for i in 0..m {
                for j in i + 1..m {
                    if let Some(p) = solve_small(&[&hs[i], &hs[j]]) {
                        push(p);
                    }
                }
            }
        }
        _ => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        if let Some(p) = solve_small(&[&hs[i], &hs[j], &hs[k]]) {
                            push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    (0..d)
        .map(|a| points.iter().map(|p| p[a]).sum::<f64>() / points.len() as f64)
        .collect()
}

/// Sort coplanar points by angle inside the plane spanned by `basis`.
fn sort_by_angle(points: &mut [Vec<f64>], basis: &[Vec<f64>]) {
    let c = centroid(points);
    points.sort_by(|p, q| {
        let dp = sub(p, &c);
        let dq = sub(q, &c);
        let ap = dotn(&dp, &basis[1]).atan2(dotn(&dp, &basis[0]));
        let aq = dotn(&dq, &basis[1]).atan2(dotn(&dq, &basis[0]));
        ap.total_cmp(&aq)
    });
}

fn triangulate(dim: usize, hs: &[Halfspace], vertices: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    match dim {
        1 => {
            let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            vec![vec![vec![lo], vec![hi]]]
        }
        2 => {
            let mut ring = vertices.to_vec();
            sort_by_angle(&mut ring, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
            (1..ring.len() - 1)
                .map(|i| vec![ring[0].clone(), ring[i].clone(), ring[i + 1].clone()])
                .collect()
        }
        _ => {
            let apex = centroid(vertices);
            let mut out = Vec::new();
            for h in hs {
                let mut face: Vec<Vec<f64>> = vertices
                    .iter()
                    .filter(|v| h.value(v).abs() <= 1e-9)
                    .cloned()
                    .collect();
                if face.len() < 3 {
                    continue;
                }
                let basis = complement_basis(&h.normal);
                sort_by_angle(&mut face, &basis);
                for i in 1..face.len() - 1 {
                    out.push(vec![
                        apex.clone(),
                        face[0].clone(),
                        face[i].clone(),
                        face[i + 1].clone(),
                    ]);
                }
            }
            out
        }
    }
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() || center.len() > 3 {
            return Err(Error::InvalidParameter("ball needs radius > 0 and 1 <= n <= 3".into()));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 3 || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidParameter("box needs lo < hi per axis, 1 <= n <= 3".into()));
        }
        Ok(Self::Box { lo, hi })
    }

    /// `[0,1]^n`
    pub fn unit_cube(n: usize) -> Result<Self> {
        Self::cube(vec![0.0; n], vec![1.0; n])
    }

    /// Regular simplex centred at the origin with the given volume.
    pub fn regular_simplex(n: usize, volume: f64) -> Result<Self> {
        let raw: Vec<Vec<f64>> = match n {
            1 => vec![vec![-0.5], vec![0.5]],
            2 => (0..3)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / 3.0 + PI / 2.0;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            3 => vec![
                vec![1.0, 1.0, 1.0],
                vec![1.0, -1.0, -1.0],
                vec![-1.0, 1.0, -1.0],
                vec![-1.0, -1.0, 1.0],
            ],
            _ => return Err(Error::Unsupported(format!("simplex in dimension {n}"))),
        };
        let scale = (volume / simplex_volume(&raw)).powf(1.0 / n as f64);
        let pts = raw
            .into_iter()
            .map(|v| v.into_iter().map(|c| c * scale).collect())
            .collect();
        Ok(Self::Polytope(Polytope::simplex(pts)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lo, .. } => lo.len(),
            Self::Polytope(p) => p.dim,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Self::Ball { center, radius } => ball_volume(center.len(), *radius),
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Self::Polytope(p) => p.volume(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius * (1.0 + EPS)
            }
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - EPS && *v <= b + EPS),
            Self::Polytope(p) => p.halfspaces.iter().all(|h| h.value(x) <= EPS),
        }
    }

    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Ball { center, radius } => center.iter().map(|c| (c - radius, c + radius)).collect(),
            Self::Box { lo, hi } => lo.iter().copied().zip(hi.iter().copied()).collect(),
            Self::Polytope(p) => (0..p.dim)
                .map(|a| {
                    let lo = p.vertices.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min);
                    let hi = p.vertices.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect(),
        }
    }

    pub fn halfspaces(&self) -> Option<Vec<Halfspace>> {
        match self {
            Self::Ball { .. } => None,
            Self::Box { lo, hi } => {
                let n = lo.len();
                let mut out = Vec::with_capacity(2 * n);
                for a in 0..n {
                    let mut e = vec![0.0; n];
                    e[a] = 1.0;
                    out.push(Halfspace { normal: e.clone(), offset: hi[a] });
                    e[a] = -1.0;
                    out.push(Halfspace { normal: e, offset: -lo[a] });
                }
                Some(out)
            }
            Self::Polytope(p) => Some(p.halfspaces.clone()),
        }
    }

    fn as_polytope(&self) -> Option<Polytope> {
        match self {
            Self::Polytope(p) => Some(p.clone()),
            Self::Box { .. } => Polytope::from_halfspaces(self.dim(), self.halfspaces()?).ok(),
            Self::Ball { .. } => None,
        }
    }

    /// Image under `y = A x + v`, when it stays in the catalog.
    pub fn affine_image(&self, a: &DMatrix<f64>, v: &[f64]) -> Option<ConvexBody> {
        let n = self.dim();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
        match self {
            Self::Ball { center, radius } => {
                let c = a[(0, 0)];
                let scalar = diagonal && (0..n).all(|i| a[(i, i)] == c) && c != 0.0;
                scalar.then(|| Self::Ball {
                    center: (0..n).map(|i| c * center[i] + v[i]).collect(),
                    radius: radius * c.abs(),
                })
            }
            Self::Box { lo, hi } if diagonal && (0..n).all(|i| a[(i, i)] > 0.0) => Some(Self::Box {
                lo: (0..n).map(|i| a[(i, i)] * lo[i] + v[i]).collect(),
                hi: (0..n).map(|i| a[(i, i)] * hi[i] + v[i]).collect(),
            }),
            _ => {
                let inv = a.clone().try_inverse()?;
                let hs = self
                    .halfspaces()?
                    .into_iter()
                    .map(|h| {
                        // ⟨n, A⁻¹(y - v)⟩ ≤ b  ⇔  ⟨A⁻ᵀ n, y⟩ ≤ b + ⟨A⁻ᵀ n, v⟩
                        let m: Vec<f64> = (0..n)
                            .map(|j| (0..n).map(|i| inv[(i, j)] * h.normal[i]).sum())
                            .collect();
                        let off = h.offset + dotn(&m, v);
                        Halfspace::new(m, off)
                    })
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                Polytope::from_halfspaces(n, hs).ok().map(Self::Polytope)
            }
        }
    }

    pub fn moments(&self) -> BodyMoments {
        let n = self.dim();
        match self {
            Self::Ball { center, radius } => BodyMoments {
                volume: self.volume(),
                mean: center.clone(),
                covariance: DMatrix::identity(n, n) * (radius * radius / (n as f64 + 2.0)),
                third: vec![0.0; n * n * n],
            },
            Self::Box { lo, hi } => BodyMoments {
                volume: self.volume(),
                mean: lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
                covariance: DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        (hi[i] - lo[i]).powi(2) / 12.0
                    } else {
                        0.0
                    }
                }),
                third: vec![0.0; n * n * n],
            },
            Self::Polytope(p) => {
                let mut vol = 0.0;
                let mut m1 = vec![0.0; n];
                let mut m2 = DMatrix::zeros(n, n);
                let mut m3 = vec![0.0; n * n * n];
                for s in &p.simplices {
                    let w = simplex_volume(s);
                    if w == 0.0 {
                        continue;
                    }
                    let (a, b, c) = simplex_raw_moments(s);
                    vol += w;
                    for i in 0..n {
                        m1[i] += w * a[i];
                    }
                    m2 += b * w;
                    for (t, v) in m3.iter_mut().zip(&c) {
                        *t += w * v;
                    }
                }
                m1.iter_mut().for_each(|v| *v /= vol);
                m2 /= vol;
                m3.iter_mut().for_each(|v| *v /= vol);
                let cov = DMatrix::from_fn(n, n, |i, j| m2[(i, j)] - m1[i] * m1[j]);
                let mut third = vec![0.0; n * n * n];
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            third[(a * n + b) * n + c] = m3[(a * n + b) * n + c]
                                - m1[a] * m2[(b, c)]
                                - m1[b] * m2[(a, c)]
                                - m1[c] * m2[(a, b)]
                                + 2.0 * m1[a] * m1[b] * m1[c];
                        }
                    }
                }
                BodyMoments {
                    volume: vol,
                    mean: m1,
                    covariance: cov,
                    third,
                }
            }
        }
    }

    /// Support interval of `x ↦ ⟨u, x⟩` over the body.
    pub fn width_interval(&self, u: &[f64]) -> (f64, f64) {
        match self {
            Self::Ball { center, radius } => {
                let c = dotn(center, u);
                (c - radius, c + radius)
            }
            _ => {
                let p = self.as_polytope().expect("box and polytope have vertices");
                let vals = p.vertices.iter().map(|v| dotn(v, u));
                vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            }
        }
    }

    /// Exact (n-1)-volume of `K ∩ {⟨u,x⟩ = offset}`; in 1D this is the
    /// counting measure of the point.
    pub fn section_volume(&self, u: &[f64], offset: f64) -> f64 {
        let n = self.dim();
        if let Self::Ball { center, radius } = self {
            let d = offset - dotn(center, u);
            let r2 = radius * radius - d * d;
            if r2 <= 0.0 {
                return 0.0;
            }
            return match n {
                1 => 1.0,
                2 => 2.0 * r2.sqrt(),
                _ => PI * r2,
            };
        }
        let hs = self.halfspaces().expect("polytopal body");
        match n {
            1 => {
                if self.contains(&[offset * u[0]]) {
                    1.0
                } else {
                    0.0
                }
            }
            2 => {
                let tau = [-u[1], u[0]];
                let base = [offset * u[0], offset * u[1]];
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for h in &hs {
                    let a = dotn(&h.normal, &tau);
                    let b = h.offset - dotn(&h.normal, &base);
                    if a.abs() <= EPS {
                        if b < -EPS {
                            return 0.0;
                        }
                    } else if a > 0.0 {
                        hi = hi.min(b / a);
                    } else {
                        lo = lo.max(b / a);
                    }
                }
                (hi - lo).max(0.0)
            }
            _ => {
                let basis = complement_basis(u);
                let bb = self.bounding_box();
                let big = bb.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max) * 4.0 + 1.0;
                let mut poly = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
                for h in &hs {
                    let a0 = dotn(&h.normal, &basis[0]);
                    let a1 = dotn(&h.normal, &basis[1]);
                    let b = h.offset - offset * dotn(&h.normal, u);
                    poly = clip_polygon(&poly, a0, a1, b);
                    if poly.is_empty() {
                        return 0.0;
                    }
                }
                polygon_area(&poly)
            }
        }
    }

    /// Exact volume of `K ∩ {⟨u,x⟩ ≥ offset}`.
    pub fn halfspace_volume(&self, u: &[f64], offset: f64) -> f64 {
        let n = self.dim();
        if let Self::Ball { center, radius } = self {
            let d = offset - dotn(center, u);
            let r = *radius;
            if d >= r {
                return 0.0;
            }
            if d <= -r {
                return self.volume();
            }
            let cap = match n {
                1 => r - d,
                2 => r * r * (d / r).acos() - d * (r * r - d * d).sqrt(),
                _ => PI * (r - d).powi(2) * (2.0 * r + d) / 3.0,
            };
            return cap;
        }
        let p = self.as_polytope().expect("polytopal body");
        let (lo, hi) = self.width_interval(u);
        if offset <= lo {
            return p.volume();
        }
        if offset >= hi {
            return 0.0;
        }
        let mut hs = p.halfspaces.clone();
        hs.push(Halfspace {
            normal: u.iter().map(|v| -v).collect(),
            offset: -offset,
        });
        Polytope::from_halfspaces(n, hs).map(|q| q.volume()).unwrap_or(0.0)
    }
}

pub(crate) fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r.powi(3),
    }
}

/// Sutherland–Hodgman clip of a convex polygon by `a0 s + a1 t ≤ b`.
fn clip_polygon(poly: &[[f64; 2]], a0: f64, a1: f64, b: f64) -> Vec<[f64; 2]> {
    let val = |p: &[f64; 2]| a0 * p[0] + a1 * p[1] - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (vp, vq) = (val(&p), val(&q));
        if vp <= 0.0 {
            out.push(p);
        }
        if (vp < 0.0 && vq > 0.0) || (vp > 0.0 && vq < 0.0) {
            let s = vp / (vp - vq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}
