use lcl_core::check::{CheckItem, CheckReport};
use lcl_core::localization::{
    covariance_bound_check, cross_scheme_check, localized_bochner_check, martingale_check, spectral_restart_check,
    variance_monotonicity_check, variance_sandwich_check, PathScheme, PathSimulator,
};
use lcl_core::spectral::{spectral_gap, TestFunction};
use lcl_core::Density;
use serde_json::json;

use super::catalog::*;
use super::{Case, Check, Group, Outcome, Source};
use crate::record::Series;

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "martingale",
            group: Group::Localize,
            anchor: "p_t(x) is a martingale: E p_T(x) = rho(x)",
            cases: martingale_cases,
        },
        Check {
            id: "covariance_bound",
            group: Group::Localize,
            anchor: "||A_t||_op <= 1/t along the tilt process",
            cases: covariance_cases,
        },
        Check {
            id: "variance_sandwich",
            group: Group::Localize,
            anchor: "E Var_p_t(f) <= Var_mu(f) <= (2 + t/lambda_0) E Var_p_t(f)",
            cases: sandwich_cases,
        },
        Check {
            id: "variance_monotonicity",
            group: Group::Localize,
            anchor: "t -> E Var_p_t(f) is non-increasing",
            cases: monotonicity_cases,
        },
        Check {
            id: "localized_bochner",
            group: Group::Localize,
            anchor: "localized Bochner formula: int (Lu)^2 + t int |grad u|^2 = E int (L_t u)^2 dmu_t",
            cases: bochner_cases,
        },
        Check {
            id: "spectral_restart",
            group: Group::Localize,
            anchor: "lambda_t >= sqrt(t/||A_t||_op) >= t per path; lambda_0^-1 against E sqrt(||A_t||_op / t) recorded",
            cases: restart_cases,
        },
        Check {
            id: "cross_scheme",
            group: Group::Localize,
            anchor: "the tilt process coincides in law with tX + W_t",
            cases: cross_scheme_cases,
        },
    ]
}

fn named(f: &str) -> fn(&[f64]) -> f64 {
    match f {
        "x2" => |x| x[0] * x[0],
        "one" => |_| 1.0,
        _ => |x| x[0],
    }
}

/// Probe points at the barycenter and ±0.5, ±1 standard deviations along
/// the first axis.
fn default_probes(d: &Density) -> Vec<Vec<f64>> {
    let m = lcl_core::moments::moment_report(d, &d.moment_grid());
    let (b, s) = match m {
        Ok(m) => (m.barycenter.clone(), m.covariance[0][0].sqrt()),
        Err(_) => (vec![0.0; d.dim()], 1.0),
    };
    [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|k| {
            let mut x = b.clone();
            x[0] += k * s;
            x
        })
        .collect()
}

fn martingale_cases(src: &Source) -> Vec<Case> {
    let cases: Vec<(Density, Vec<Vec<f64>>)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), default_probes(d))).collect(),
        None => {
            let pts = |xs: &[f64]| xs.iter().map(|x| vec![*x]).collect::<Vec<_>>();
            vec![
                (gauss(), pts(&[-1.5, -0.5, 0.0, 0.7, 1.5])),
                (uniform(-1.0, 1.0), pts(&[-0.8, -0.3, 0.0, 0.5, 0.9])),
                (exponential(), pts(&[-0.5, 0.0, 0.5, 1.5, 3.0])),
            ]
        }
    };
    let horizon = src.mc.horizon;
    let paths = src.mc.paths;
    cases
        .into_iter()
        .map(|(d, probes)| {
            let inputs = json!({ "density": d.to_string(), "probes": probes, "horizon": horizon, "paths": paths });
            Case::new(d.to_string(), inputs, move |ctx| {
                martingale_check(&d, &probes, horizon, paths, ctx.seed).map(Outcome::from)
            })
        })
        .collect()
}

fn covariance_cases(src: &Source) -> Vec<Case> {
    let ds = src
        .densities
        .clone()
        .unwrap_or_else(|| vec![gauss(), uniform(-1.0, 1.0), exponential()]);
    let horizon = 4.0 * src.mc.horizon;
    let steps = src.mc.steps;
    let paths = (src.mc.paths / 10).max(1);
    ds.into_iter()
        .map(|d| {
            let inputs = json!({ "density": d.to_string(), "horizon": horizon, "steps": steps, "paths": paths });
            Case::new(d.to_string(), inputs, move |ctx| {
                let (r, traj) = covariance_bound_check(&d, horizon, steps, paths, ctx.seed)?;
                let sim = PathSimulator::new(&d, ctx.seed)?;
                let shown = sim.paths(paths.min(8), horizon, steps, PathScheme::Representation)?;
                let mut series = vec![Series::Covariance {
                    id: ctx.id.clone(),
                    times: traj.times.clone(),
                    paths: shown.iter().map(|p| p.cov_norm.clone()).collect(),
                    mean: traj.mean_cov_norm.clone(),
                }];
                if let Some(p) = shown.into_iter().next() {
                    series.push(Series::Path {
                        id: format!("{}#path0", ctx.id),
                        path: p,
                    });
                }
                Ok(Outcome { report: r, series })
            })
        })
        .collect()
}

fn sandwich_cases(src: &Source) -> Vec<Case> {
    let cases: Vec<(Density, &'static str, f64)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), "x", 0.5)).collect(),
        None => vec![
            (gauss(), "x", 0.5),
            (gauss(), "one", 0.5),
            (uniform_sqrt3(), "x2", 0.4),
            (exponential(), "x", 0.5),
        ],
    };
    let paths = src.mc.paths;
    cases
        .into_iter()
        .map(|(d, f, t)| {
            let inputs = json!({ "density": d.to_string(), "f": f, "t": t, "paths": paths });
            Case::new(format!("{d}; f={f}; t={t}"), inputs, move |ctx| {
                let mut r = variance_sandwich_check(&d, named(f), t, paths, ctx.seed)?;
                if f == "x" && d.dim() == 1 && d.as_gaussian().map(|(m, s)| m[0] == 0.0 && s == 1.0).unwrap_or(false) {
                    let lo = r.items[0].value;
                    let mid = r.items[0].bound;
                    r.push(CheckItem::close("E Var_p_t(x) = 1/(1+t)", lo, 1.0 / (1.0 + t), 1e-9));
                    r.push(CheckItem::close("Var_mu(x) = 1", mid, 1.0, 1e-9));
                }
                Ok(r.into())
            })
        })
        .collect()
}

fn monotonicity_cases(src: &Source) -> Vec<Case> {
    let cases: Vec<(Density, &'static str)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), "x")).collect(),
        None => vec![(uniform_sqrt3(), "x2"), (exponential(), "x")],
    };
    let times = [0.1, 0.4, 1.0, 2.0];
    let paths = src.mc.paths;
    cases
        .into_iter()
        .map(|(d, f)| {
            let inputs = json!({ "density": d.to_string(), "f": f, "times": times, "paths": paths });
            Case::new(format!("{d}; f={f}"), inputs, move |ctx| {
                variance_monotonicity_check(&d, named(f), &times, paths, ctx.seed).map(Outcome::from)
            })
        })
        .collect()
}

fn bochner_cases(src: &Source) -> Vec<Case> {
    let cases: Vec<(Density, &'static str, f64, usize)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), "x2", 0.3, src.mc.eigen_paths)).collect(),
        None => vec![
            (gauss(), "x", 0.5, src.mc.eigen_paths),
            (regularized_uniform(), "x2", 0.3, src.mc.eigen_paths),
        ],
    };
    cases
        .into_iter()
        .map(|(d, u, t, paths)| {
            let inputs = json!({ "density": d.to_string(), "u": u, "t": t, "paths": paths });
            Case::new(format!("{d}; u={u}; t={t}"), inputs, move |ctx| {
                let f = TestFunction::named(u, d.dim())?;
                let mut r = localized_bochner_check(&d, &f, t, paths, ctx.seed)?;
                if u == "x" && d.dim() == 1 && d.as_gaussian().map(|(m, s)| m[0] == 0.0 && s == 1.0).unwrap_or(false) {
                    let (lhs, rhs) = (r.items[0].value, r.items[0].bound);
                    r.push(CheckItem::close("lhs = 1 + t", lhs, 1.0 + t, 1e-6));
                    r.push(CheckItem::close("rhs = 1 + t", rhs, 1.0 + t, 1e-6));
                }
                Ok(r.into())
            })
        })
        .collect()
}

fn restart_cases(src: &Source) -> Vec<Case> {
    let cases: Vec<(Density, f64)> = match &src.densities {
        Some(ds) => ds.iter().filter(|d| d.dim() <= 2).map(|d| (d.clone(), 0.5)).collect(),
        None => vec![(gauss(), 0.5), (uniform_sqrt3(), 0.2)],
    };
    let paths = src.mc.eigen_paths;
    cases
        .into_iter()
        .map(|(d, t)| {
            let inputs = json!({ "density": d.to_string(), "t": t, "paths": paths });
            Case::new(format!("{d}; t={t}"), inputs, move |ctx| {
                let r = spectral_restart_check(&d, t, paths, ctx.seed)?;
                let series = if d.dim() == 1 { vec![gap_series(&d, ctx)?] } else { Vec::new() };
                Ok(Outcome { report: r, series })
            })
        })
        .collect()
}

/// `t ↦ λ_t` along the first four paths.
fn gap_series(d: &Density, ctx: &super::Ctx) -> lcl_core::Result<Series> {
    let times = vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0];
    let sim = PathSimulator::new(d, ctx.seed)?;
    let paths = (0..4u64)
        .map(|i| {
            let (_, thetas) = sim.representation(i, &times);
            times
                .iter()
                .zip(&thetas)
                .map(|(t, th)| {
                    let tilted = d.tilt(*t, th)?;
                    Ok(spectral_gap(&tilted, &tilted.default_grid())?.lambda)
                })
                .collect::<lcl_core::Result<Vec<f64>>>()
        })
        .collect::<lcl_core::Result<Vec<_>>>()?;
    Ok(Series::Gap {
        id: ctx.id.clone(),
        times,
        paths,
    })
}

fn cross_scheme_cases(src: &Source) -> Vec<Case> {
    let ds = src.densities.clone().unwrap_or_else(|| vec![gauss(), uniform(-1.0, 1.0)]);
    let horizon = src.mc.horizon;
    let steps = 500;
    let paths = (src.mc.paths / 5).max(2);
    ds.into_iter()
        .map(|d| {
            let inputs = json!({ "density": d.to_string(), "horizon": horizon, "steps": steps, "paths": paths });
            Case::new(d.to_string(), inputs, move |ctx| {
                let r: CheckReport = cross_scheme_check(&d, horizon, steps, paths, ctx.seed)?;
                Ok(r.into())
            })
        })
        .collect()
}
