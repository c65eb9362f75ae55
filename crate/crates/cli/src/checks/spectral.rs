use std::f64::consts::PI;

use lcl_core::check::{CheckItem, CheckReport};
use lcl_core::density::View;
use lcl_core::slicing::ConvexBody;
use lcl_core::spectral::{
    bochner_residual, build_operator, cube_root_bound_check, dual_identities_check, eigen_direction_check, gap_of,
    h_minus_one_report, lichnerowicz_check, weighted_gap, TestFunction,
};
use lcl_core::{Density, Grid};
use serde_json::json;

use super::catalog::*;
use super::{density_inputs, per_density, Case, Check, Group, Outcome, Source};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "spectral_gap",
            group: Group::Spectral,
            anchor: "C_P(mu) = 1/lambda_1(-L); Gaussian and Neumann-interval closed forms",
            cases: gap_cases,
        },
        Check {
            id: "bochner",
            group: Group::Spectral,
            anchor: "integrated Bochner formula: int (Lu)^2 = int ||Hess u||^2 + int <Hess psi grad u, grad u>",
            cases: bochner_cases,
        },
        Check {
            id: "eigen_direction",
            group: Group::Spectral,
            anchor: "first eigenfunction f: |int grad f|^2 = lambda^2 |int f x|^2 and its companion inequalities",
            cases: |src| per_density(src, eigen_defaults(), eigen_direction_check),
        },
        Check {
            id: "lichnerowicz",
            group: Group::Spectral,
            anchor: "improved Lichnerowicz chain 1/lambda <= sqrt(||Cov||/t) <= 1/t for t-uniformly log-concave mu",
            cases: |src| per_density(src, lichnerowicz_defaults(), lichnerowicz_check),
        },
        Check {
            id: "dual_identities",
            group: Group::Spectral,
            anchor: "-int <L^-1 grad psi, grad psi> = n and Var(psi) <= ||grad psi||^2_H-1 = n",
            cases: |src| per_density(src, dual_defaults(), dual_identities_check),
        },
        Check {
            id: "cube_root",
            group: Group::Spectral,
            anchor: "lambda >= (t/R)^(1/3) for t-uniformly log-concave mu with ||Cov|| <= R",
            cases: |src| per_density(src, cube_root_defaults(), cube_root_bound_check),
        },
        Check {
            id: "h_minus_one",
            group: Group::Spectral,
            anchor: "dual Poincare inequality lambda ||f||^2_H-1 <= ||f||^2_L2",
            cases: h_minus_one_cases,
        },
    ]
}

/// Closed-form spectral gap where one is known.
pub fn known_gap(d: &Density) -> Option<f64> {
    match d.view() {
        View::Gaussian { s, .. } => Some(1.0 / s),
        View::Uniform(ConvexBody::Box { lo, hi }) => {
            let w = lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            Some(PI * PI / (w * w))
        }
        View::Product(fs) => fs.iter().map(known_gap).try_fold(f64::INFINITY, |acc, g| g.map(|g| acc.min(g))),
        _ => None,
    }
}

fn gap_defaults() -> Vec<Density> {
    vec![
        gauss(),
        uniform_sqrt3(),
        exponential(),
        truncated_gaussian(),
        Density::product(vec![gauss(), uniform_sqrt3()]).expect("valid"),
        gauss_s(2, 0.5),
    ]
}

fn gap_cases(src: &Source) -> Vec<Case> {
    per_density(src, gap_defaults(), gap_report)
}

fn gap_report(d: &Density, grid: &Grid) -> lcl_core::Result<CheckReport> {
    let op = build_operator(d, grid)?;
    let s = gap_of(&op)?;
    let mut r = CheckReport::new("spectral_gap", d.to_string());
    if let Some(exact) = known_gap(d) {
        let tol = if d.dim() == 1 { 1e-3 } else { 2e-3 };
        r.push(CheckItem::close("lambda = closed form", s.lambda, exact, tol));
    }
    r.push(CheckItem::at_most("eigen residual <= 1e-8 lambda", s.residual, 1e-8 * s.lambda, 0.0));
    if d.dim() == 1 {
        let w = weighted_gap(&op, 1e-11, 200_000)?;
        r.push(CheckItem::close_rel("symmetrized gap = weighted-form gap", s.lambda, w, 1e-6));
    }
    r.push(CheckItem::observe("lambda", s.lambda, s.lambda));
    r.push(CheckItem::observe("C_P", s.c_p, s.c_p));
    Ok(r)
}

fn eigen_defaults() -> Vec<Density> {
    vec![gauss(), uniform_sqrt3(), truncated_gaussian(), shifted_gaussian_tilt()]
}

fn lichnerowicz_defaults() -> Vec<Density> {
    vec![
        gauss_s(1, 0.5),
        gauss(),
        truncated_gaussian(),
        uniform(-1.0, 1.0).tilt(2.0, &[0.0]).expect("valid"),
        shifted_gaussian_tilt(),
        gauss_s(2, 0.5),
    ]
}

fn dual_defaults() -> Vec<Density> {
    vec![gauss(), gauss_s(2, 0.5), shifted_gaussian_tilt(), exponential()]
}

fn cube_root_defaults() -> Vec<Density> {
    vec![gauss(), gauss_s(1, 0.5), gauss_s(1, 2.0), truncated_gaussian()]
}

fn bochner_defaults() -> Vec<(Density, &'static str)> {
    vec![
        (gauss(), "x"),
        (gauss(), "x2"),
        (gauss(), "x3"),
        (gauss(), "sin"),
        (gauss_s(1, 0.5), "x2"),
        (shifted_gaussian_tilt(), "sin"),
        (regularized_uniform(), "x2"),
        (gauss_s(2, 1.0), "mixed"),
    ]
}

fn bochner_cases(src: &Source) -> Vec<Case> {
    let pairs = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), "x2")).collect(),
        None => bochner_defaults(),
    };
    pairs
        .into_iter()
        .map(|(d, u)| {
            let g = src.grid_for(&d);
            let mut inputs = density_inputs(&d, &g);
            inputs["u"] = json!(u);
            Case::new(format!("{d}; u={u}"), inputs, move |_| bochner_report(&d, u, &g).map(Outcome::from))
        })
        .collect()
}

fn bochner_report(d: &Density, u: &str, grid: &Grid) -> lcl_core::Result<CheckReport> {
    let f = TestFunction::named(u, d.dim())?;
    let b = bochner_residual(d, &f, grid)?;
    let mut r = CheckReport::new("bochner", format!("{d}; u={u}"));
    r.push(CheckItem::at_most("relative residual <= 1e-4", b.residual, 1e-4, 0.0));
    if d.as_gaussian().map(|(_, s)| s == 1.0).unwrap_or(false) && d.dim() == 1 && u == "x2" {
        r.push(CheckItem::close("int (Lu)^2 = 8", b.lhs, 8.0, 1e-6));
        r.push(CheckItem::close("int ||Hess u||^2 = 4", b.hessian_term, 4.0, 1e-6));
        r.push(CheckItem::close("int <Hess psi grad u, grad u> = 4", b.curvature_term, 4.0, 1e-6));
    }
    r.push(CheckItem::observe("int (Lu)^2", b.lhs, b.hessian_term + b.curvature_term));
    r.push(CheckItem::observe("int ||Hess u||^2", b.hessian_term, b.hessian_term));
    r.push(CheckItem::observe("int <Hess psi grad u, grad u>", b.curvature_term, b.curvature_term));
    Ok(r)
}

fn h_minus_one_cases(src: &Source) -> Vec<Case> {
    let pairs: Vec<(Density, &'static str)> = match &src.densities {
        Some(ds) => ds.iter().map(|d| (d.clone(), "x")).collect(),
        None => vec![(gauss(), "x"), (gauss(), "x2"), (exponential(), "x"), (uniform_sqrt3(), "x")],
    };
    pairs
        .into_iter()
        .map(|(d, f)| {
            let g = src.grid_for(&d);
            let mut inputs = density_inputs(&d, &g);
            inputs["f"] = json!(f);
            Case::new(format!("{d}; f={f}"), inputs, move |_| {
                let (h, mut r) = match f {
                    "x2" => h_minus_one_report(&d, |x| x[0] * x[0], &g)?,
                    _ => h_minus_one_report(&d, |x| x[0], &g)?,
                };
                // Gaussian: -L x = x and -L (x² - 1) = 2 (x² - 1)
                if d.as_gaussian().map(|(_, s)| s == 1.0).unwrap_or(false) && d.dim() == 1 {
                    r.push(CheckItem::close("||f||^2_H-1 = 1", h.norm_sq, 1.0, 1e-3));
                }
                Ok(r.into())
            })
        })
        .collect()
}
