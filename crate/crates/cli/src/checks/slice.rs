use std::f64::consts::PI;

use lcl_core::check::{CheckItem, CheckReport};
use lcl_core::moments::{halfspace_sweep, isotropize, kappa_functional, section_sweep};
use lcl_core::grid::gauss_legendre;
use lcl_core::slicing::{best_section, directions, section_volume, unit_volume, ConvexBody, SectionQuery};
use lcl_core::Density;
use serde_json::json;

use super::catalog::*;
use super::{Case, Check, Group, Outcome, Source};
use crate::record::{Series, SweepRow};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "section_bounds",
            group: Group::Slice,
            anchor: "central sections of isotropic log-concave densities lie in [1/sqrt(12), 1/sqrt(2)]",
            cases: section_bound_cases,
        },
        Check {
            id: "grunbaum",
            group: Group::Slice,
            anchor: "half-spaces through the barycenter carry mass in [1/e, 1 - 1/e]",
            cases: grunbaum_cases,
        },
        Check {
            id: "kappa",
            group: Group::Slice,
            anchor: "instance value of kappa = ||E X_1 X (x) X||_HS in isotropic position (recorded)",
            cases: kappa_cases,
        },
        Check {
            id: "section_exact",
            group: Group::Slice,
            anchor: "exact section volumes: cube diagonal sqrt(2), volume-one ball sections",
            cases: exact_cases,
        },
        Check {
            id: "fubini",
            group: Group::Slice,
            anchor: "int Vol_{n-1}(K cap {<x,u> = o}) do = Vol_n(K)",
            cases: fubini_cases,
        },
        Check {
            id: "brunn_minkowski",
            group: Group::Slice,
            anchor: "o -> Vol_{n-1}(K cap H_o)^(1/(n-1)) is concave on its support",
            cases: brunn_minkowski_cases,
        },
        Check {
            id: "best_section",
            group: Group::Slice,
            anchor: "sup_H Vol_{n-1}(K cap H) for volume-one K (lower bound by search)",
            cases: best_section_cases,
        },
    ]
}

fn body(spec: &str) -> ConvexBody {
    spec.parse().expect("valid body spec")
}

fn iso(d: Density) -> Density {
    isotropize(&d).expect("isotropic position exists").density
}

fn isotropic_catalog() -> Vec<Density> {
    vec![
        gauss(),
        uniform_sqrt3(),
        exponential(),
        gauss_s(2, 1.0),
        iso(Density::uniform(body("body:simplex:n=2"))),
        iso(Density::uniform(body("body:cube:n=3"))),
        iso(Density::uniform(body("body:simplex:n=3"))),
        iso(Density::uniform(body("body:ball:n=3"))),
        iso(Density::product(vec![gauss(), exponential()]).expect("valid")),
    ]
}

fn section_bound_cases(src: &Source) -> Vec<Case> {
    let ds = src.densities.clone().unwrap_or_else(isotropic_catalog);
    ds.into_iter()
        .map(|d| {
            let count = 64;
            let inputs = json!({ "density": d.to_string(), "directions": count });
            Case::new(d.to_string(), inputs, move |ctx| {
                let grid = d.moment_grid();
                let s = section_sweep(&d, count, &grid, 1e-6)?;
                let mut r = CheckReport::new("section_bounds", d.to_string());
                let item_lo = CheckItem::at_least("min section >= 1/sqrt(12)", s.min(), 1.0 / 12f64.sqrt(), 1e-6);
                let item_hi = CheckItem::at_most("max section <= 1/sqrt(2)", s.max(), 1.0 / 2f64.sqrt(), 1e-6);
                if s.warning.is_some() {
                    r.push(item_lo.observed());
                    r.push(item_hi.observed());
                } else {
                    r.push(item_lo);
                    r.push(item_hi);
                }
                if d.dim() == 1 && d.as_uniform().is_some() {
                    r.push(CheckItem::close("uniform interval attains 1/sqrt(12)", s.min(), 1.0 / 12f64.sqrt(), 1e-6));
                }
                let rows = s
                    .values
                    .iter()
                    .map(|v| SweepRow {
                        direction: v.direction.clone(),
                        offset: 0.0,
                        value: v.value,
                    })
                    .collect();
                Ok(Outcome {
                    report: r,
                    series: vec![Series::Sweep {
                        id: ctx.id.clone(),
                        quantity: "central section".into(),
                        rows,
                    }],
                })
            })
        })
        .collect()
}

fn grunbaum_cases(src: &Source) -> Vec<Case> {
    let ds = src.densities.clone().unwrap_or_else(|| {
        let mut v = isotropic_catalog();
        v.push(Density::uniform(body("body:simplex:n=3")));
        v.push(Density::uniform(body("body:simplex:n=2")));
        v
    });
    ds.into_iter()
        .map(|d| {
            let count = 32;
            let inputs = json!({ "density": d.to_string(), "directions": count });
            Case::new(d.to_string(), inputs, move |_| {
                let s = halfspace_sweep(&d, count, &d.moment_grid(), 1e-6)?;
                let e = std::f64::consts::E;
                let mut r = CheckReport::new("grunbaum", d.to_string());
                r.push(CheckItem::at_least("min mass >= 1/e", s.min(), 1.0 / e, 1e-6));
                r.push(CheckItem::at_most("max mass <= 1 - 1/e", s.max(), 1.0 - 1.0 / e, 1e-6));
                if d.dim() == 1 && matches!(d.view(), lcl_core::density::View::Exponential) {
                    r.push(CheckItem::close("centered exponential attains 1/e", s.min(), 1.0 / e, 1e-6));
                }
                Ok(r.into())
            })
        })
        .collect()
}

fn kappa_cases(src: &Source) -> Vec<Case> {
    let ds = src.densities.clone().unwrap_or_else(|| {
        vec![
            gauss(),
            exponential(),
            iso(Density::uniform(body("body:simplex:n=2"))),
            iso(Density::uniform(body("body:simplex:n=3"))),
        ]
    });
    ds.into_iter()
        .map(|d| {
            let inputs = json!({ "density": d.to_string() });
            Case::new(d.to_string(), inputs, move |_| {
                let k = kappa_functional(&d, &d.moment_grid())?;
                let mut r = CheckReport::new("kappa", d.to_string());
                r.push(CheckItem::observe("kappa", k, 0.0));
                Ok(r.into())
            })
        })
        .collect()
}

fn exact_cases(_src: &Source) -> Vec<Case> {
    let r3 = (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
    let cases: Vec<(&'static str, Vec<f64>, f64, f64)> = vec![
        ("body:cube:n=3", vec![1.0, 0.0, 0.0], 0.5, 1.0),
        ("body:cube:n=3", vec![1.0, 1.0, 0.0], 0.5 * 2f64.sqrt(), 2f64.sqrt()),
        ("body:ball:n=3,volume=1", vec![0.3, -0.4, 0.5], 0.0, PI * r3 * r3),
        ("body:ball:n=2,volume=1", vec![1.0, 2.0], 0.0, 2.0 / PI.sqrt()),
        ("body:ball:n=3,volume=1", vec![0.0, 0.0, 1.0], 0.5 * r3, PI * 0.75 * r3 * r3),
    ];
    cases
        .into_iter()
        .map(|(spec, u, o, exact)| {
            let inputs = json!({ "body": spec, "normal": u, "offset": o });
            let subject = format!("{spec}; normal={u:?}; offset={o}");
            let subj = subject.clone();
            Case::new(subject, inputs, move |_| {
                let k = body(spec);
                let q = SectionQuery::new(u.clone(), o)?;
                let v = section_volume(&k, &q);
                let mut r = CheckReport::new("section_exact", subj.clone());
                r.push(CheckItem::close("section volume = closed form", v, exact, 1e-9));
                Ok(r.into())
            })
        })
        .collect()
}

fn default_bodies() -> Vec<ConvexBody> {
    vec![
        body("body:cube:n=3"),
        body("body:cube:n=2"),
        body("body:ball:n=3,volume=1"),
        body("body:ball:n=2,volume=1"),
        body("body:simplex:n=3"),
        body("body:simplex:n=2"),
        body("body:hpoly:h=[1,0,0,1;-1,0,0,1;0,1,0,1;0,-1,0,1;0,0,1,1;0,0,-1,1;1,1,1,1.5]"),
    ]
}

/// `∫ V(o) do` over the support interval: Gauss–Legendre between the
/// vertex projections for polytopes, and in the angle `o = c + r sin φ`
/// for balls, where the integrand is smooth.
fn fubini_integral(k: &ConvexBody, u: &[f64]) -> f64 {
    let (lo, hi) = k.width_interval(u);
    let (nodes, weights) = gauss_legendre(24);
    let seg = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        nodes.iter().zip(&weights).map(|(x, w)| w * h * f(m + h * x)).sum()
    };
    match k {
        ConvexBody::Ball { .. } => {
            let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let half = PI / 2.0;
            let f = |phi: f64| k.section_volume(u, c + r * phi.sin()) * r * phi.cos();
            (0..8)
                .map(|j| {
                    let a = -half + PI * j as f64 / 8.0;
                    seg(a, a + PI / 8.0, &f)
                })
                .sum()
        }
        _ => {
            let mut breaks: Vec<f64> = corners(k).iter().map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum()).collect();
            breaks.push(lo);
            breaks.push(hi);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let f = |o: f64| k.section_volume(u, o);
            breaks.windows(2).map(|w| seg(w[0], w[1], &f)).sum()
        }
    }
}

fn corners(k: &ConvexBody) -> Vec<Vec<f64>> {
    match k {
        ConvexBody::Polytope(p) => p.vertices().to_vec(),
        ConvexBody::Box { lo, hi } => (0..1usize << lo.len())
            .map(|m| (0..lo.len()).map(|i| if m >> i & 1 == 1 { hi[i] } else { lo[i] }).collect())
            .collect(),
        ConvexBody::Ball { .. } => Vec::new(),
    }
}

fn fubini_cases(src: &Source) -> Vec<Case> {
    let bodies = src.bodies.clone().unwrap_or_else(default_bodies);
    bodies
        .into_iter()
        .filter(|k| k.dim() >= 2)
        .map(|k| {
            let count = 16;
            let inputs = json!({ "body": k.to_string(), "directions": count });
            Case::new(k.to_string(), inputs, move |_| {
                let vol = k.volume();
                let worst = directions(k.dim(), count)
                    .iter()
                    .map(|u| (fubini_integral(&k, u) - vol).abs() / vol)
                    .fold(0.0, f64::max);
                let mut r = CheckReport::new("fubini", k.to_string());
                r.push(CheckItem::at_most("max relative |int V - Vol|", worst, 1e-8, 0.0));
                Ok(r.into())
            })
        })
        .collect()
}

fn brunn_minkowski_cases(src: &Source) -> Vec<Case> {
    let bodies = src.bodies.clone().unwrap_or_else(default_bodies);
    bodies
        .into_iter()
        .filter(|k| k.dim() >= 2)
        .map(|k| {
            let (count, offsets) = (12, 41);
            let inputs = json!({ "body": k.to_string(), "directions": count, "offsets": offsets });
            Case::new(k.to_string(), inputs, move |ctx| {
                let p = 1.0 / (k.dim() as f64 - 1.0);
                let mut worst = f64::NEG_INFINITY;
                let mut rows = Vec::new();
                for u in directions(k.dim(), count) {
                    let (lo, hi) = k.width_interval(&u);
                    let os: Vec<f64> = (1..=offsets).map(|j| lo + (hi - lo) * j as f64 / (offsets + 1) as f64).collect();
                    let vs: Vec<f64> = os.iter().map(|o| k.section_volume(&u, *o)).collect();
                    let roots: Vec<f64> = vs.iter().map(|v| v.max(0.0).powf(p)).collect();
                    for w in roots.windows(3) {
                        worst = worst.max(w[0] - 2.0 * w[1] + w[2]);
                    }
                    rows.extend(os.iter().zip(&vs).map(|(o, v)| SweepRow {
                        direction: u.clone(),
                        offset: *o,
                        value: *v,
                    }));
                }
                let mut r = CheckReport::new("brunn_minkowski", k.to_string());
                r.push(CheckItem::at_most("max second difference of V^(1/(n-1))", worst, 0.0, 1e-9));
                Ok(Outcome {
                    report: r,
                    series: vec![Series::Sweep {
                        id: ctx.id.clone(),
                        quantity: "section volume".into(),
                        rows,
                    }],
                })
            })
        })
        .collect()
}

fn best_section_cases(src: &Source) -> Vec<Case> {
    let bodies = src.bodies.clone().unwrap_or_else(|| {
        vec![
            body("body:cube:n=3"),
            body("body:ball:n=2"),
            body("body:simplex:n=3"),
            body("body:cube:n=2"),
        ]
    });
    bodies
        .into_iter()
        .filter(|k| k.dim() >= 2)
        .map(|k| {
            let (dirs, offs) = (64, 16);
            let inputs = json!({ "body": k.to_string(), "directions": dirs, "offsets": offs });
            Case::new(k.to_string(), inputs, move |_| {
                let k1 = unit_volume(&k);
                let (q, v) = best_section(&k1, dirs, offs);
                let mut r = CheckReport::new("best_section", k.to_string());
                r.push(CheckItem::close("value = direct clipping at the found hyperplane", v, section_volume(&k1, &q), 1e-9));
                match &k1 {
                    ConvexBody::Box { .. } => {
                        r.push(CheckItem::at_least("cube: best >= axis section 1", v, 1.0, 1e-12));
                        if k1.dim() == 3 {
                            r.push(CheckItem::observe("cube: best <= sqrt(2)", v, 2f64.sqrt()));
                        }
                    }
                    ConvexBody::Ball { .. } if k1.dim() == 2 => {
                        r.push(CheckItem::close("disc: diameter 2/sqrt(pi)", v, 2.0 / PI.sqrt(), 1e-9));
                    }
                    _ => {}
                }
                r.push(CheckItem::observe("best section", v, v));
                Ok(r.into())
            })
        })
        .collect()
}
