use lcl_core::Density;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn parse(s: &str) -> Density {
    s.parse().unwrap()
}

fn fd_grad(d: &Density, x: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (d.psi(&a) - d.psi(&b)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gaussian_tilt_matches_completed_square() {
    let g = Density::standard_gaussian(2, 1.0).unwrap();
    let (t, th) = (0.5, [0.3, -1.2]);
    let p = g.tilt(t, &th).unwrap();
    // N(θ/(1+t), 1/(1+t) I)
    let prec: f64 = 1.0 + t;
    for x in [[0.0, 0.0], [1.0, -0.5], [-2.0, 0.7]] {
        let q: f64 = x.iter().zip(th).map(|(xi, ti)| (xi - ti / prec).powi(2)).sum();
        let want = -0.5 * prec * q + (prec / (2.0 * std::f64::consts::PI)).ln();
        assert!((p.log_density(&x) - want).abs() < 1e-12);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for spec in [
        "gaussian:s=2,n=2",
        "exponential",
        "tilt:t=0.7,theta=[0.4],base=(uniform:box=[-1,1])",
        "regularize:delta=0.3,base=(uniform:box=[-1,1])",
        "convolve:s=0.5,base=(exponential)",
    ] {
        let d = parse(spec);
        let x = vec![0.2; d.dim()];
        let g = d.grad_psi(&x);
        for (a, b) in g.iter().zip(fd_grad(&d, &x)) {
            assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{spec}: {a} vs {b}");
        }
    }
}

#[test]
fn display_round_trips_through_the_parser() {
    for spec in [
        "gaussian:s=1",
        "product:factors=(gaussian:s=1)|(exponential)",
        "tilt:t=1,theta=[0],base=(uniform:box=[-1,1])",
        "convolve:s=0.25,base=(uniform:box=[0,1])",
    ] {
        let d = parse(spec);
        let again = parse(&d.to_string());
        let x = vec![0.3; d.dim()];
        assert!((d.log_density(&x) - again.log_density(&x)).abs() < 1e-12, "{spec}");
    }
}

#[test]
fn tilting_an_exponential_the_wrong_way_is_rejected() {
    let e = parse("exponential");
    assert!(e.tilt(0.0, &[2.0]).is_err());
    assert!(e.tilt(-1.0, &[0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tilts_compose(t1 in 0.0f64..2.0, t2 in 0.0f64..2.0, a in -2.0f64..2.0, b in -2.0f64..2.0, x in -0.9f64..0.9) {
        let base = parse("uniform:box=[-1,1]");
        let twice = base.tilt(t1, &[a]).unwrap().tilt(t2, &[b]).unwrap();
        let once = base.tilt(t1 + t2, &[a + b]).unwrap();
        prop_assert!((twice.log_density(&[x]) - once.log_density(&[x])).abs() < 1e-8);
    }

    #[test]
    fn psi_is_midpoint_convex(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0, w in -3.0f64..3.0) {
        for spec in ["exponential", "convolve:s=0.5,base=(exponential)", "regularize:delta=0.2,base=(uniform:box=[-1,1])"] {
            let d = parse(spec);
            let (p, q) = (vec![x], vec![y]);
            let m = vec![0.5 * (x + y)];
            if d.psi(&p).is_finite() && d.psi(&q).is_finite() {
                prop_assert!(d.psi(&m) <= 0.5 * (d.psi(&p) + d.psi(&q)) + 1e-9, "{}", spec);
            }
        }
        let d = parse("product:factors=(gaussian:s=1)|(convolve:s=0.3,base=(uniform:box=[-1,1]))");
        let (p, q) = ([x, z], [y, w]);
        let m = [0.5 * (x + y), 0.5 * (z + w)];
        prop_assert!(d.psi(&m) <= 0.5 * (d.psi(&p) + d.psi(&q)) + 1e-9);
    }

    #[test]
    fn hessian_is_positive_semidefinite(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let d = parse("product:factors=(regularize:delta=0.3,base=(exponential))|(convolve:s=0.5,base=(uniform:box=[-1,1]))");
        let h = d.hess_psi(&[x, y]);
        let low = SymmetricEigen::new(h).eigenvalues.min();
        prop_assert!(low >= -1e-9, "min eigenvalue {}", low);
    }

    #[test]
    fn regularized_hessian_is_sandwiched(x in -3.0f64..3.0, delta in 0.1f64..0.9) {
        let d = parse("uniform:box=[-1,1]").regularize(delta).unwrap();
        let h = d.hess_psi(&[x])[(0, 0)];
        prop_assert!(h >= delta - 1e-7 && h <= delta + 1.0 / delta + 1e-7, "{} outside [{}, {}]", h, delta, delta + 1.0 / delta);
    }
}
