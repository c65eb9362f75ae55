use std::f64::consts::PI;

use lcl_core::slicing::{best_offset, best_section, section_volume, unit_volume, ConvexBody, SectionQuery};
use proptest::prelude::*;

fn body(s: &str) -> ConvexBody {
    s.parse().unwrap()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Length of `{p + s w} ∩ {⟨a_i, x⟩ ≤ b_i}` by clipping the parameter.
fn chord(rows: &[[f64; 3]], p: [f64; 2], w: [f64; 2]) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for [a0, a1, b] in rows {
        let slope = a0 * w[0] + a1 * w[1];
        let rest = b - (a0 * p[0] + a1 * p[1]);
        if slope.abs() < 1e-15 {
            if rest < 0.0 {
                return 0.0;
            }
        } else if slope > 0.0 {
            hi = hi.min(rest / slope);
        } else {
            lo = lo.max(rest / slope);
        }
    }
    (hi - lo).max(0.0)
}

/// Composite Simpson of `o ↦ |K ∩ {⟨x,u⟩ = o}|` over the width interval,
/// split at vertex projections so each piece is smooth.
fn fubini(k: &ConvexBody, u: &[f64], breaks: &[f64]) -> f64 {
    let (lo, hi) = k.width_interval(u);
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    cuts.extend([lo, hi]);
    cuts.sort_by(f64::total_cmp);
    let n = 200;
    cuts.windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / n as f64;
            let f = |o: f64| k.section_volume(u, o);
            let mut acc = f(w[0]) + f(w[1]);
            for j in 1..n {
                acc += f(w[0] + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        })
        .sum()
}

#[test]
fn polygon_sections_match_clipped_chords() {
    let rows = [[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, -1.0, 1.0], [1.0, 1.0, 1.5]];
    let k = body("body:hpoly:h=[1,0,1;-1,0,1;0,1,1;0,-1,1;1,1,1.5]");
    for (u, o) in [([1.0, 0.0], 0.2), ([1.0, 1.0], 0.5), ([0.3, -0.8], -0.1), ([-1.0, 2.0], 0.9)] {
        let u = unit(&u);
        let p = [u[0] * o, u[1] * o];
        let w = [-u[1], u[0]];
        let want = chord(&rows, p, w);
        let got = section_volume(&k, &SectionQuery::new(u.clone(), o).unwrap());
        assert!((got - want).abs() < 1e-12, "{u:?} {o}: {got} vs {want}");
    }
}

#[test]
fn ball_sections_are_lower_dimensional_balls() {
    let k = body("body:ball:r=1.5,n=3");
    for o in [0.0, 0.5, 1.2] {
        let got = k.section_volume(&unit(&[1.0, -2.0, 0.5]), o);
        assert!((got - PI * (1.5f64 * 1.5 - o * o)).abs() < 1e-12);
    }
    assert_eq!(k.section_volume(&[0.0, 0.0, 1.0], 1.6), 0.0);
}

#[test]
fn cube_best_section_is_at_least_one() {
    let (q, v) = best_section(&body("body:cube:n=3"), 32, 8);
    assert!(v >= 1.0 - 1e-12, "{v}");
    assert!(v <= 2f64.sqrt() + 1e-9, "{v}");
    assert!((q.normal.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn central_ball_section_is_best() {
    let k = unit_volume(&body("body:ball:r=2,n=3"));
    let (o, v) = best_offset(&k, &[0.0, 1.0, 0.0]);
    let r = (3.0 / (4.0 * PI)).cbrt();
    assert!(o.abs() < 1e-6);
    assert!((v - PI * r * r).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sections_integrate_to_volume(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        prop_assume!(x * x + y * y + z * z > 0.05);
        let u = unit(&[x, y, z]);
        for spec in ["body:cube:n=3", "body:simplex:n=3", "body:hpoly:h=[1,0,0,1;-1,0,0,1;0,1,0,1;0,-1,0,1;0,0,1,1;0,0,-1,1;1,1,1,1.5]"] {
            let k = body(spec);
            let corners: Vec<Vec<f64>> = match &k {
                ConvexBody::Polytope(p) => p.vertices().to_vec(),
                _ => {
                    let bb = k.bounding_box();
                    (0..8).map(|m| (0..3).map(|i| if m >> i & 1 == 1 { bb[i].1 } else { bb[i].0 }).collect()).collect()
                }
            };
            let breaks: Vec<f64> = corners.iter().map(|v| v.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
            let got = fubini(&k, &u, &breaks);
            prop_assert!((got - k.volume()).abs() < 1e-6 * k.volume(), "{}: {} vs {}", spec, got, k.volume());
        }
    }

    #[test]
    fn section_roots_are_concave_in_the_offset(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, s in 0.05f64..0.45) {
        prop_assume!(x * x + y * y + z * z > 0.05);
        let u = unit(&[x, y, z]);
        for spec in ["body:simplex:n=3", "body:ball:r=1,n=3", "body:box:box=[0,1]x[0,2]x[-1,1]"] {
            let k = body(spec);
            let (lo, hi) = k.width_interval(&u);
            let w = hi - lo;
            let f = |o: f64| k.section_volume(&u, o).sqrt();
            let (a, b) = (lo + s * w, lo + (s + 0.5) * w);
            prop_assert!(f(0.5 * (a + b)) >= 0.5 * (f(a) + f(b)) - 1e-9, "{}", spec);
        }
    }

    #[test]
    fn half_spaces_partition_the_volume(x in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.0f64..1.0) {
        prop_assume!(x * x + y * y > 0.05);
        let u = unit(&[x, y]);
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        for spec in ["body:simplex:n=2", "body:ball:r=1,n=2", "body:cube:n=2"] {
            let k = body(spec);
            let (lo, hi) = k.width_interval(&u);
            let o = lo + t * (hi - lo);
            let total = k.halfspace_volume(&u, o) + k.halfspace_volume(&neg, -o);
            prop_assert!((total - k.volume()).abs() < 1e-10, "{}: {}", spec, total);
        }
    }

    #[test]
    fn section_volume_is_continuous(o in -0.4f64..0.4, theta in 0.0f64..PI) {
        let u = [theta.cos(), theta.sin()];
        let k = body("body:hpoly:h=[1,0,1;-1,0,1;0,1,1;0,-1,1;1,1,1.5]");
        let (a, b) = (k.section_volume(&u, o), k.section_volume(&u, o + 1e-7));
        prop_assert!((a - b).abs() < 1e-5);
    }
}
