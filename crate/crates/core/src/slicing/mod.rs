//! Convex bodies and their hyperplane sections.

mod body;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use body::{complement_basis, BodyMoments, ConvexBody, Halfspace, Polytope};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::spec::{parse_box, parse_vector, split_top_level, unwrap_parens};

/// The hyperplane `⟨x, normal⟩ = offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionQuery {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl SectionQuery {
    /// Normalizes `normal`; the offset is taken relative to the unit normal.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidParameter("section normal must be nonzero".into()));
        }
        Ok(Self {
            normal: normal.into_iter().map(|v| v / len).collect(),
            offset,
        })
    }
}

pub fn section_volume(body: &ConvexBody, q: &SectionQuery) -> f64 {
    body.section_volume(&q.normal, q.offset)
}

/// `count` unit vectors covering directions up to sign: one in 1D, equally
/// spaced angles in `[0, π)` in 2D, a Fibonacci lattice on the upper
/// hemisphere in 3D.
pub fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => fibonacci_hemisphere(count),
    }
}

pub fn fibonacci_hemisphere(count: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            vec![r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

fn direction_from_angles(n: usize, a: &[f64]) -> Vec<f64> {
    match n {
        1 => vec![1.0],
        2 => vec![a[0].cos(), a[0].sin()],
        _ => vec![a[1].sin() * a[0].cos(), a[1].sin() * a[0].sin(), a[1].cos()],
    }
}

fn angles_of(u: &[f64]) -> Vec<f64> {
    match u.len() {
        1 => vec![],
        2 => vec![u[1].atan2(u[0])],
        _ => vec![u[1].atan2(u[0]), u[2].clamp(-1.0, 1.0).acos()],
    }
}

/// Maximizes the section volume over offsets for a fixed direction. The
/// `(n-1)`-th root of the section volume is concave on the support
/// interval, so golden-section search finds the maximum.
pub fn best_offset(body: &ConvexBody, u: &[f64]) -> (f64, f64) {
    let (mut a, mut b) = body.width_interval(u);
    if body.dim() == 1 {
        return (0.5 * (a + b), 1.0);
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |o: f64| body.section_volume(u, o);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let o = 0.5 * (a + b);
    (o, f(o))
}

/// Grid search over `directions × offsets` followed by a pattern search on
/// the direction (with golden-section offsets). The value is a lower bound
/// on the maximal section.
pub fn best_section(body: &ConvexBody, n_directions: usize, n_offsets: usize) -> (SectionQuery, f64) {
    let n = body.dim();
    let dirs = directions(n, n_directions.max(1));
    let sweep: Vec<(Vec<f64>, f64, f64)> = dirs
        .par_iter()
        .map(|u| {
            let (lo, hi) = body.width_interval(u);
            let k = n_offsets.max(1);
            (0..k)
                .map(|j| {
                    let o = lo + (hi - lo) * (j as f64 + 0.5) / k as f64;
                    (u.clone(), o, body.section_volume(u, o))
                })
                .fold((u.clone(), 0.0, f64::NEG_INFINITY), |best, c| if c.2 > best.2 { c } else { best })
        })
        .collect();
    let (mut u, _, _) = sweep
        .into_iter()
        .fold((vec![], 0.0, f64::NEG_INFINITY), |best, c| if c.2 > best.2 { c } else { best });
    let (mut o, mut v) = best_offset(body, &u);
    if n > 1 {
        let mut ang = angles_of(&u);
        let mut step = PI / n_directions.max(2) as f64;
        while step > 1e-10 {
            let mut improved = false;
            for k in 0..ang.len() {
                for sgn in [1.0, -1.0] {
                    let mut trial = ang.clone();
                    trial[k] += sgn * step;
                    let w = direction_from_angles(n, &trial);
                    let (to, tv) = best_offset(body, &w);
                    if tv > v {
                        ang = trial;
                        u = w;
                        o = to;
                        v = tv;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
    (SectionQuery { normal: u, offset: o }, v)
}

/// Uniform law on the body.
pub fn body_to_density(body: &ConvexBody) -> Density {
    Density::uniform(body.clone())
}

/// The same body scaled about its centroid to volume one.
pub fn unit_volume(body: &ConvexBody) -> ConvexBody {
    let n = body.dim();
    let m = body.moments();
    let scale = (1.0 / m.volume).powf(1.0 / n as f64);
    let a = nalgebra::DMatrix::identity(n, n) * scale;
    let shift: Vec<f64> = m.mean.iter().map(|c| c * (1.0 - scale)).collect();
    body.affine_image(&a, &shift).expect("scaling is invertible")
}

#[derive(Deserialize)]
struct HpolyFile {
    halfspaces: Vec<Halfspace>,
}

fn perr(spec: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_rows(spec: &str, s: &str) -> Result<Vec<Halfspace>> {
    let t = s.trim();
    let inner = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(t);
    inner
        .split(';')
        .map(|row| {
            let v = parse_vector(row).map_err(|e| perr(spec, e))?;
            if v.len() < 2 {
                return Err(perr(spec, format!("halfspace row `{row}` too short")));
            }
            let (normal, off) = v.split_at(v.len() - 1);
            Halfspace::new(normal.to_vec(), off[0]).map_err(|e| perr(spec, e.to_string()))
        })
        .collect()
}

/// Body specs: `body:cube[:n=3]`, `body:box:box=[0,1]x[0,2]`,
/// `body:ball:r=1,n=3[,center=..]` or `body:ball:volume=1,n=2`,
/// `body:simplex:n=2[,volume=1]`, `body:hpoly:file=K.json` or
/// `body:hpoly:h=[nx,ny,offset;...]`.
impl FromStr for ConvexBody {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = unwrap_parens(spec);
        let rest = spec
            .strip_prefix("body:")
            .ok_or_else(|| perr(spec, "body specs start with `body:`"))?;
        let (kind, args) = rest.split_once(':').unwrap_or((rest, ""));
        let mut kv = Vec::new();
        for part in split_top_level(args, ',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| perr(spec, format!("expected key=value, got `{part}`")))?;
            kv.push((k.trim(), v.trim()));
        }
        let allowed: &[&str] = match kind {
            "cube" => &["n"],
            "box" => &["box"],
            "ball" => &["r", "n", "center", "volume"],
            "simplex" => &["n", "volume"],
            "hpoly" => &["file", "h"],
            other => return Err(perr(spec, format!("unknown body kind `{other}`"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(perr(spec, format!("unknown key `{k}`")));
        }
        let get = |k: &str| kv.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let num = |k: &str| -> Result<Option<f64>> {
            get(k)
                .map(|v| v.parse::<f64>().map_err(|_| perr(spec, format!("bad number `{v}`"))))
                .transpose()
        };
        let dim = num("n")?.map(|v| v as usize);
        let wrap = |e: Error| perr(spec, e.to_string());
        match kind {
            "cube" => ConvexBody::unit_cube(dim.unwrap_or(3)).map_err(wrap),
            "box" => {
                let iv = parse_box(get("box").ok_or_else(|| perr(spec, "missing `box`"))?).map_err(|e| perr(spec, e))?;
                let (lo, hi) = iv.into_iter().unzip();
                ConvexBody::cube(lo, hi).map_err(wrap)
            }
            "ball" => {
                let center = match get("center") {
                    Some(c) => parse_vector(c).map_err(|e| perr(spec, e))?,
                    None => vec![0.0; dim.unwrap_or(3)],
                };
                let n = center.len();
                let r = match (num("r")?, num("volume")?) {
                    (Some(r), None) => r,
                    (None, Some(v)) => (v / body::ball_volume(n, 1.0)).powf(1.0 / n as f64),
                    (None, None) => 1.0,
                    _ => return Err(perr(spec, "give at most one of `r`, `volume`")),
                };
                ConvexBody::ball(center, r).map_err(wrap)
            }
            "simplex" => ConvexBody::regular_simplex(dim.unwrap_or(3), num("volume")?.unwrap_or(1.0)).map_err(wrap),
            _ => {
                let hs = match (get("file"), get("h")) {
                    (Some(path), None) => {
                        let text = std::fs::read_to_string(path).map_err(|e| perr(spec, format!("{path}: {e}")))?;
                        let file: HpolyFile =
                            serde_json::from_str(&text).map_err(|e| perr(spec, format!("{path}: {e}")))?;
                        file.halfspaces
                            .into_iter()
                            .map(|h| Halfspace::new(h.normal, h.offset))
                            .collect::<Result<Vec<_>>>()
                            .map_err(wrap)?
                    }
                    (None, Some(rows)) => parse_rows(spec, rows)?,
                    _ => return Err(perr(spec, "hpoly needs exactly one of `file`, `h`")),
                };
                let n = hs.first().map(|h| h.normal.len()).unwrap_or(0);
                if hs.iter().any(|h| h.normal.len() != n) {
                    return Err(perr(spec, "halfspace normals of mixed dimension"));
                }
                Polytope::from_halfspaces(n, hs).map(ConvexBody::Polytope).map_err(wrap)
            }
        }
    }
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            ConvexBody::Ball { center, radius } => {
                write!(f, "body:ball:r={radius}")?;
                if center.iter().all(|c| *c == 0.0) {
                    write!(f, ",n={}", center.len())
                } else {
                    write!(f, ",center=[{}]", list(center))
                }
            }
            ConvexBody::Box { lo, hi } => {
                let parts: Vec<String> = lo.iter().zip(hi).map(|(a, b)| format!("[{a},{b}]")).collect();
                write!(f, "body:box:box={}", parts.join("x"))
            }
            ConvexBody::Polytope(p) => {
                let rows: Vec<String> = p
                    .halfspaces()
                    .iter()
                    .map(|h| {
                        let mut v = h.normal.clone();
                        v.push(h.offset);
                        list(&v)
                    })
                    .collect();
                write!(f, "body:hpoly:h=[{}]", rows.join(";"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_body_specs() {
        let c: ConvexBody = "body:cube".parse().unwrap();
        assert_eq!(c.dim(), 3);
        assert!((c.volume() - 1.0).abs() < 1e-15);
        let b: ConvexBody = "body:ball:volume=1,n=2".parse().unwrap();
        assert!((b.volume() - 1.0).abs() < 1e-14);
        let s: ConvexBody = "body:simplex:n=2".parse().unwrap();
        assert!((s.volume() - 1.0).abs() < 1e-12);
        let h: ConvexBody = "body:hpoly:h=[1,0,1;-1,0,1;0,1,1;0,-1,1]".parse().unwrap();
        assert!((h.volume() - 4.0).abs() < 1e-12);
        assert!("body:torus".parse::<ConvexBody>().is_err());
        assert!("body:ball:radius=2".parse::<ConvexBody>().is_err());
    }

    #[test]
    fn body_specs_round_trip() {
        for s in ["body:ball:r=1,n=3", "body:box:box=[0,1]x[0,2]", "body:simplex:n=3", "body:ball:r=2,center=[1,0]"] {
            let b: ConvexBody = s.parse().unwrap();
            let again: ConvexBody = b.to_string().parse().unwrap();
            assert!((b.volume() - again.volume()).abs() < 1e-12 * b.volume(), "{s}");
        }
    }

    #[test]
    fn ball_best_section_is_a_diameter() {
        let b: ConvexBody = "body:ball:volume=1,n=2".parse().unwrap();
        let (_, v) = best_section(&b, 16, 9);
        assert!((v - 2.0 / PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn unit_volume_rescales_about_centroid() {
        let c = ConvexBody::cube(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap();
        let u = unit_volume(&c);
        assert!((u.volume() - 1.0).abs() < 1e-14);
        assert!((u.moments().mean[0] - 2.0).abs() < 1e-14);
    }
}
