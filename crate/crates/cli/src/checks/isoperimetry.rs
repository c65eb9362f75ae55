use std::f64::consts::PI;

use lcl_core::check::{CheckItem, CheckReport};
use lcl_core::density::View;
use lcl_core::isoperimetry::{buser_sandwich_check, halfspace_profile_nd, lipschitz_variance_ratio};
use lcl_core::moments::isotropize;
use lcl_core::slicing::{directions, ConvexBody};
use lcl_core::{Density, Grid};
use serde_json::json;

use super::catalog::*;
use super::{density_inputs, per_density, Case, Check, Group, Outcome, Source};
use crate::record::{Series, SweepRow};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "cheeger_buser",
            group: Group::Isoperimetry,
            anchor: "Cheeger-Buser sandwich 1/4 <= psi_mu^2 / C_P <= pi",
            cases: |src| per_density(src, buser_defaults(), buser_report),
        },
        Check {
            id: "lipschitz",
            group: Group::Isoperimetry,
            anchor: "Var(phi) <= C_P for 1-Lipschitz phi; lambda sup Var(phi) in (0, 1]",
            cases: |src| per_density(src, lipschitz_defaults(), lipschitz_report),
        },
        Check {
            id: "halfspace_profile",
            group: Group::Isoperimetry,
            anchor: "half-space boundary-to-mass profile over directions; the infimum bounds the Cheeger ratio from above",
            cases: profile_cases,
        },
    ]
}

fn isotropic_triangle() -> Density {
    let body: ConvexBody = "body:simplex:n=2".parse().expect("valid spec");
    isotropize(&Density::uniform(body)).expect("isotropic position exists").density
}

fn buser_defaults() -> Vec<Density> {
    let mut v = line();
    v.push(isotropic_triangle());
    v
}

/// `ψ²/C_P` in closed form for the 1D extremal examples.
fn known_ratio(d: &Density) -> Option<f64> {
    if d.dim() != 1 {
        return None;
    }
    match d.view() {
        View::Gaussian { .. } => Some(PI / 2.0),
        View::Exponential => Some(0.25),
        View::Uniform(_) => Some(PI * PI / 4.0),
        _ => None,
    }
}

fn buser_report(d: &Density, grid: &Grid) -> lcl_core::Result<CheckReport> {
    let mut r = buser_sandwich_check(d, grid)?;
    if let Some(exact) = known_ratio(d) {
        let psi = r.item("psi_mu").map(|i| i.value).unwrap_or(f64::NAN);
        let cp = r.item("C_P").map(|i| i.value).unwrap_or(f64::NAN);
        r.push(CheckItem::close("psi^2/C_P = closed form", psi * psi / cp, exact, 1e-2));
    }
    Ok(r)
}

fn lipschitz_defaults() -> Vec<Density> {
    vec![
        gauss(),
        uniform_sqrt3(),
        exponential(),
        Density::product(vec![gauss(), uniform_sqrt3()]).expect("valid"),
    ]
}

fn lipschitz_report(d: &Density, grid: &Grid) -> lcl_core::Result<CheckReport> {
    let l = lipschitz_variance_ratio(d, grid)?;
    let mut r = l.check;
    r.push(CheckItem::at_most("lambda sup Var(phi) <= 1", l.ratio, 1.0, 1e-9));
    r.push(CheckItem::at_least("lambda sup Var(phi) > 0", l.ratio, 0.0, 0.0));
    if d.dim() == 1 && d.as_gaussian().is_some() {
        r.push(CheckItem::close("Gaussian: linear witness attains C_P", l.ratio, 1.0, 1e-3));
    }
    Ok(r)
}

fn profile_cases(src: &Source) -> Vec<Case> {
    let defaults = vec![
        gauss_s(2, 1.0),
        Density::product(vec![gauss(), exponential()]).expect("valid"),
        isotropic_triangle(),
    ];
    src.densities
        .clone()
        .unwrap_or(defaults)
        .into_iter()
        .filter(|d| (2..=3).contains(&d.dim()))
        .map(|d| {
            let g = src.grid_for(&d);
            let count = if d.dim() == 2 { 36 } else { 32 };
            let mut inputs = density_inputs(&d, &g);
            inputs["directions"] = json!(count);
            Case::new(d.to_string(), inputs, move |ctx| {
                let dirs = directions(d.dim(), count);
                let iso = halfspace_profile_nd(&d, &dirs, &g)?;
                let mut r = CheckReport::new("halfspace_profile", d.to_string());
                let worst = iso.profiles.iter().map(|p| p.ratio).fold(0.0, f64::max);
                r.push(CheckItem::at_least("inf ratio <= every direction's ratio", worst, iso.cheeger, 0.0));
                r.push(CheckItem::at_most("minimizer mass <= 1/2", iso.minimizer.mass, 0.5, 1e-12));
                if let Some((_, s)) = d.as_gaussian() {
                    let exact = (2.0 / PI).sqrt() / s.sqrt();
                    for p in &iso.profiles {
                        if (p.ratio - exact).abs() > 2e-3 {
                            r.push(CheckItem::close("Gaussian ratio is sqrt(2/pi)/sigma in every direction", p.ratio, exact, 2e-3));
                        }
                    }
                    r.push(CheckItem::close("Gaussian Cheeger ratio = sqrt(2/pi)/sigma", iso.cheeger, exact, 2e-3));
                }
                r.push(CheckItem::observe("psi_halfspace", iso.psi_halfspace, iso.psi_halfspace));
                let rows = iso
                    .profiles
                    .iter()
                    .map(|p| SweepRow {
                        direction: p.normal.clone(),
                        offset: p.offset,
                        value: p.ratio,
                    })
                    .collect();
                Ok(Outcome {
                    report: r,
                    series: vec![Series::Sweep {
                        id: ctx.id.clone(),
                        quantity: "boundary/mass ratio at the minimizing offset".into(),
                        rows,
                    }],
                })
            })
        })
        .collect()
}
