//! String specs for the density catalog, e.g. `gaussian:s=1`,
//! `uniform:box=[-1,1]`, `tilt:t=0.5,theta=0.2,base=(exponential)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{Density, Kind};
use crate::error::{Error, Result};
use crate::slicing::ConvexBody;
use crate::spec::{parse_box, parse_vector, split_top_level, unwrap_parens};

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(","))
}

pub(super) fn write_spec(d: &Density, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &d.0.kind {
        Kind::Gaussian { mean, s } => {
            write!(f, "gaussian:s={s}")?;
            if mean.iter().any(|m| *m != 0.0) {
                write!(f, ",mean={}", fmt_vec(mean))
            } else if mean.len() > 1 {
                write!(f, ",n={}", mean.len())
            } else {
                Ok(())
            }
        }
        Kind::Uniform(ConvexBody::Box { lo, hi }) => {
            let parts: Vec<String> = lo.iter().zip(hi).map(|(a, b)| format!("[{a},{b}]")).collect();
            write!(f, "uniform:box={}", parts.join("x"))
        }
        Kind::Uniform(body) => write!(f, "uniform:body=({body})"),
        Kind::Exponential => write!(f, "exponential"),
        Kind::Product(fs) => {
            let parts: Vec<String> = fs.iter().map(|x| format!("({x})")).collect();
            write!(f, "product:factors={}", parts.join("|"))
        }
        Kind::Affine { base, a, shift, .. } => {
            let rows: Vec<f64> = (0..a.nrows())
                .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)])
                .collect();
            write!(f, "affine:a={},shift={},base=({base})", fmt_vec(&rows), fmt_vec(shift))
        }
        Kind::Tilt { base, t, theta } => {
            write!(f, "tilt:t={t},theta={},base=({base})", fmt_vec(theta))
        }
        Kind::Convolution { base, s, .. } => write!(f, "convolve:s={s},base=({base})"),
        Kind::Regularized { base, delta, .. } => write!(f, "regularize:delta={delta},base=({base})"),
    }
}

struct Args<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn new(spec: &'a str, body: &'a str, allowed: &[&str]) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in split_top_level(body, ',') {
            let (k, v) = part.split_once('=').ok_or_else(|| err(spec, format!("expected key=value, got `{part}`")))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(err(spec, format!("unknown key `{k}`")));
            }
            if pairs.iter().any(|(p, _)| *p == k) {
                return Err(err(spec, format!("duplicate key `{k}`")));
            }
            pairs.push((k, v.trim()));
        }
        Ok(Self { spec, pairs })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn require(&self, key: &str) -> Result<&'a str> {
        self.get(key).ok_or_else(|| err(self.spec, format!("missing `{key}`")))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| err(self.spec, format!("bad number for `{key}`: `{v}`"))))
            .transpose()
    }

    fn vector(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| parse_vector(v).map_err(|e| err(self.spec, e)))
            .transpose()
    }

    fn density(&self, key: &str) -> Result<Density> {
        unwrap_parens(self.require(key)?).parse()
    }
}

fn err(spec: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn broadcast(spec: &str, v: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v),
        k => Err(err(spec, format!("vector of length {k} for dimension {n}"))),
    }
}

impl FromStr for Density {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Density> {
        let spec = unwrap_parens(spec);
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let wrap = |e: Error| match e {
            Error::Parse { .. } => e,
            other => err(spec, other.to_string()),
        };
        match kind.trim() {
            "gaussian" => {
                let a = Args::new(spec, rest, &["s", "mean", "n"])?;
                let s = a.number("s")?.unwrap_or(1.0);
                let n = a.number("n")?.map(|v| v as usize);
                let mean = match (a.vector("mean")?, n) {
                    (Some(m), Some(n)) => broadcast(spec, m, n)?,
                    (Some(m), None) => m,
                    (None, n) => vec![0.0; n.unwrap_or(1)],
                };
                Density::gaussian(mean, s).map_err(wrap)
            }
            "uniform" => {
                let a = Args::new(spec, rest, &["box", "body"])?;
                match (a.get("box"), a.get("body")) {
                    (Some(b), None) => {
                        let iv = parse_box(b).map_err(|e| err(spec, e))?;
                        let (lo, hi) = iv.into_iter().unzip();
                        Density::uniform_box(lo, hi).map_err(wrap)
                    }
                    (None, Some(b)) => Ok(Density::uniform(unwrap_parens(b).parse::<ConvexBody>()?)),
                    _ => Err(err(spec, "uniform needs exactly one of `box`, `body`")),
                }
            }
            "exponential" => {
                Args::new(spec, rest, &[])?;
                Ok(Density::centered_exponential())
            }
            "product" => {
                let a = Args::new(spec, rest, &["factors"])?;
                let factors = split_top_level(a.require("factors")?, '|')
                    .into_iter()
                    .map(|p| unwrap_parens(p).parse())
                    .collect::<Result<Vec<Density>>>()?;
                Density::product(factors).map_err(wrap)
            }
            "affine" => {
                let a = Args::new(spec, rest, &["a", "shift", "base"])?;
                let base = a.density("base")?;
                let n = base.dim();
                let m = a.vector("a")?.ok_or_else(|| err(spec, "missing `a`"))?;
                let mat = match m.len() {
                    1 => DMatrix::identity(n, n) * m[0],
                    k if k == n * n => DMatrix::from_row_slice(n, n, &m),
                    k => return Err(err(spec, format!("matrix with {k} entries for dimension {n}"))),
                };
                let shift = broadcast(spec, a.vector("shift")?.unwrap_or(vec![0.0]), n)?;
                Density::affine(&base, mat, shift).map_err(wrap)
            }
            "isotropic" => {
                let a = Args::new(spec, rest, &["base"])?;
                let base = a.density("base")?;
                crate::moments::isotropize(&base).map(|iso| iso.density).map_err(wrap)
            }
            "tilt" => {
                let a = Args::new(spec, rest, &["t", "theta", "base"])?;
                let base = a.density("base")?;
                let t = a.number("t")?.unwrap_or(0.0);
                let theta = broadcast(spec, a.vector("theta")?.unwrap_or(vec![0.0]), base.dim())?;
                base.tilt(t, &theta).map_err(wrap)
            }
            "convolve" => {
                let a = Args::new(spec, rest, &["s", "base"])?;
                let base = a.density("base")?;
                let s = a.number("s")?.ok_or_else(|| err(spec, "missing `s`"))?;
                base.convolve_gaussian(s).map_err(wrap)
            }
            "regularize" => {
                let a = Args::new(spec, rest, &["delta", "base"])?;
                let base = a.density("base")?;
                let delta = a.number("delta")?.ok_or_else(|| err(spec, "missing `delta`"))?;
                base.regularize(delta).map_err(wrap)
            }
            other => Err(err(spec, format!("unknown density kind `{other}`"))),
        }
    }
}
