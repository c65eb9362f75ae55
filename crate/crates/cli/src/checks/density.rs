use lcl_core::check::{CheckItem, CheckReport};
use lcl_core::density::{gaussian_shuffle_check, uniform_convexity_estimate, ShuffleFunction};
use lcl_core::quadrature::{integrate, ks_critical_1pct, ks_statistic, Sampler};
use lcl_core::density::Support;
use lcl_core::{Density, Grid};
use serde_json::json;

use super::catalog::*;
use super::{density_inputs, per_density, Case, Check, Group, Outcome, Source};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "shuffle",
            group: Group::Density,
            anchor: "(f gamma_t) * gamma_s = S_r[(f * gamma_p) gamma_q], p = st/(s+t), q = t^2/(s+t), r = t/(s+t)",
            cases: shuffle_cases,
        },
        Check {
            id: "regularize",
            group: Group::Density,
            anchor: "regularized density: delta <= Hess psi_delta <= delta + 1/delta",
            cases: regularize_cases,
        },
        Check {
            id: "convolution",
            group: Group::Density,
            anchor: "mu * gamma_s is 1/(t+s)-uniformly log-concave when mu is 1/t-uniformly log-concave",
            cases: convolution_cases,
        },
        Check {
            id: "normalization",
            group: Group::Density,
            anchor: "every catalog density integrates to one",
            cases: |src| per_density(src, normalization_defaults(), normalization_report),
        },
        Check {
            id: "sampler",
            group: Group::Density,
            anchor: "samples follow the density (Kolmogorov-Smirnov at the 1% level)",
            cases: sampler_cases,
        },
    ]
}

fn shuffle_cases(_src: &Source) -> Vec<Case> {
    let triples = [
        (ShuffleFunction::Gaussian { u: 0.5 }, 0.7, 1.3),
        (ShuffleFunction::Indicator { lo: 0.0, hi: 1.0 }, 1.0, 1.0),
        (ShuffleFunction::One, 0.5, 2.0),
    ];
    triples
        .into_iter()
        .map(|(f, s, t)| {
            let inputs = json!({ "f": f, "s": s, "t": t, "h": 1e-3 });
            let subject = format!("f={}; s={s}; t={t}", serde_json::to_string(&f).unwrap_or_default());
            let subj = subject.clone();
            Case::new(subject, inputs, move |_| {
                let grid = Grid::line(-12.0, 12.0, 24_001)?;
                let rep = gaussian_shuffle_check(f, s, t, &grid)?;
                let mut r = CheckReport::new("shuffle", subj.clone());
                r.push(CheckItem::at_most("sup discrepancy <= 1e-8", rep.discrepancy, 1e-8, 0.0));
                r.push(CheckItem::observe("peak of (f gamma_t) * gamma_s", rep.peak, rep.peak));
                Ok(r.into())
            })
        })
        .collect()
}

fn regularize_cases(src: &Source) -> Vec<Case> {
    let bases = src
        .densities
        .clone()
        .unwrap_or_else(|| vec![gauss(), uniform(-1.0, 1.0), exponential(), truncated_gaussian()]);
    let mut cases = Vec::new();
    for d in bases.into_iter().filter(|d| d.dim() <= 2) {
        for delta in [0.05, 0.1] {
            let inputs = json!({ "density": d.to_string(), "delta": delta });
            let d = d.clone();
            cases.push(Case::new(format!("{d}; delta={delta}"), inputs, move |_| {
                let reg = d.regularize(delta)?;
                let (lo, hi) = probe_range(&d);
                let probes: Vec<Vec<f64>> = (0..=40)
                    .map(|k| {
                        let x = lo + (hi - lo) * k as f64 / 40.0;
                        vec![x; d.dim()]
                    })
                    .collect();
                let mut min_eig = f64::INFINITY;
                let mut max_eig: f64 = 0.0;
                for x in &probes {
                    let e = reg.hess_psi(x).symmetric_eigen().eigenvalues;
                    min_eig = min_eig.min(e.min());
                    max_eig = max_eig.max(e.max());
                }
                let mut r = CheckReport::new("regularize", format!("{d}; delta={delta}"));
                r.push(CheckItem::at_least("min Hess psi_delta >= delta", min_eig, delta, 1e-9));
                r.push(CheckItem::at_most("max Hess psi_delta <= delta + 1/delta", max_eig, delta + 1.0 / delta, 1e-9));
                r.push(CheckItem::at_least("density positive outside the base support", reg.density(&vec![hi + 1.0; d.dim()]), 0.0, 0.0));
                Ok(r.into())
            }));
        }
    }
    cases
}

fn probe_range(d: &Density) -> (f64, f64) {
    let b = d.effective_box();
    let (lo, hi) = b[0];
    let w = (hi - lo).min(20.0);
    let c = 0.5 * (lo + hi);
    (c - 0.6 * w, c + 0.6 * w)
}

fn convolution_cases(src: &Source) -> Vec<Case> {
    let pairs: Vec<(Density, f64)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), 0.5)).collect(),
        None => vec![(gauss(), 0.5), (gauss_s(1, 2.0), 0.25), (gauss_s(2, 0.5), 1.0), (uniform(-1.0, 1.0), 0.5)],
    };
    pairs
        .into_iter()
        .map(|(d, s)| {
            let inputs = json!({ "density": d.to_string(), "s": s });
            let subject = format!("{d}; s={s}");
            Case::new(subject.clone(), inputs, move |_| {
                let c = d.convolve_gaussian(s)?;
                let mut r = CheckReport::new("convolution", subject.clone());
                let t0 = d.uniform_convexity_t();
                let expected = if t0 > 0.0 { 1.0 / (1.0 / t0 + s) } else { 0.0 };
                r.push(CheckItem::close("uniform convexity = 1/(t+s)", c.uniform_convexity_t(), expected, 1e-12));
                if let Some((_, var)) = d.as_gaussian() {
                    let (_, v2) = c
                        .as_gaussian()
                        .ok_or_else(|| lcl_core::Error::Unsupported("Gaussian convolution lost its closed form".into()))?;
                    r.push(CheckItem::close("variance adds", v2, var + s, 1e-14));
                }
                if d.dim() == 1 {
                    let (lo, hi) = probe_range(&d);
                    let grid = Grid::line(lo, hi, 81)?;
                    let est = uniform_convexity_estimate(&c, &grid);
                    r.push(CheckItem::at_least("min Hess psi on probes >= 1/(t+s)", est, expected, 1e-9));
                    let max_h = grid
                        .axis_coords(0)
                        .iter()
                        .map(|&x| c.hess_psi(&[x])[(0, 0)])
                        .fold(0.0, f64::max);
                    r.push(CheckItem::at_most("max Hess psi on probes <= 1/s", max_h, 1.0 / s, 1e-6));
                }
                Ok(r.into())
            })
        })
        .collect()
}

fn normalization_defaults() -> Vec<Density> {
    let mut v = line();
    v.push(regularized_uniform());
    v.push(gauss_s(2, 0.5));
    v.push(Density::product(vec![gauss(), exponential()]).expect("valid"));
    v
}

fn normalization_report(d: &Density, grid: &Grid) -> lcl_core::Result<CheckReport> {
    let fine = d.moment_grid();
    let mass = lcl_core::quadrature::mass(d, &fine)?;
    let mut r = CheckReport::new("normalization", d.to_string());
    let item = CheckItem::close("int rho = 1", mass, 1.0, 1e-8);
    // tensor rules resolve jumps only along grid faces
    r.push(if grid_aligned(d) { item } else { item.observed() });
    let m = integrate(|_| 1.0, d, grid)?;
    r.push(CheckItem::close("integrate(1) = 1", m, 1.0, 1e-8));
    Ok(r)
}

fn grid_aligned(d: &Density) -> bool {
    match d.support() {
        Support::AllSpace | Support::Box(_) => true,
        Support::Halfspaces(hs) => {
            !hs.is_empty() && hs.iter().all(|h| h.normal.iter().filter(|v| v.abs() > 1e-12).count() == 1)
        }
        Support::Ball { .. } => false,
    }
}

/// CDF on a fine trapezoid lattice over the effective support.
fn numeric_cdf(d: &Density) -> impl Fn(f64) -> f64 {
    let (lo, hi) = d.effective_box()[0];
    let n = 200_001;
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
    let ps: Vec<f64> = xs.iter().map(|&x| d.density(&[x])).collect();
    let mut c = vec![0.0; n];
    for k in 1..n {
        c[k] = c[k - 1] + 0.5 * h * (ps[k] + ps[k - 1]);
    }
    let total = c[n - 1];
    move |x: f64| {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let f = (x - lo) / h;
        let k = (f.floor() as usize).min(n - 2);
        let w = f - k as f64;
        ((1.0 - w) * c[k] + w * c[k + 1]) / total
    }
}

fn sampler_cases(src: &Source) -> Vec<Case> {
    let count = src.mc.paths;
    src.densities
        .clone()
        .unwrap_or_else(line)
        .into_iter()
        .filter(|d| d.dim() == 1)
        .map(|d| {
            let mut inputs = density_inputs(&d, &d.default_grid());
            inputs["samples"] = json!(count);
            Case::new(d.to_string(), inputs, move |ctx| {
                let s = Sampler::new(&d, ctx.seed)?;
                let xs: Vec<f64> = s.sample(count).into_iter().map(|v| v[0]).collect();
                let ks = ks_statistic(&xs, numeric_cdf(&d));
                let mut r = CheckReport::new("sampler", d.to_string());
                r.push(CheckItem::at_most("KS statistic <= 1% critical value", ks, ks_critical_1pct(count), 0.0));
                Ok(Outcome::from(r))
            })
        })
        .collect()
}
