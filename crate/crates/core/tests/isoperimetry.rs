use std::f64::consts::PI;

use lcl_core::density::Density;
use lcl_core::isoperimetry::*;
use lcl_core::moments::isotropize;
use lcl_core::slicing::{directions, ConvexBody};

fn one_d_catalog() -> Vec<Density> {
    let r = 3f64.sqrt();
    vec![
        Density::standard_gaussian(1, 1.0).unwrap(),
        Density::uniform_interval(-r, r).unwrap(),
        Density::uniform_interval(0.0, 1.0).unwrap(),
        Density::centered_exponential(),
        Density::uniform_interval(-1.0, 1.0).unwrap().tilt(1.0, &[0.0]).unwrap(),
        Density::standard_gaussian(1, 1.0).unwrap().tilt(0.5, &[1.0]).unwrap(),
    ]
}

#[test]
fn cheeger_1d_examples() {
    let g = Density::standard_gaussian(1, 1.0).unwrap();
    let r = cheeger_1d(&g, &g.default_grid()).unwrap();
    assert!((r.psi_mu.unwrap() - (PI / 2.0).sqrt()).abs() < 1e-3);

    let e = Density::centered_exponential();
    let r = cheeger_1d(&e, &e.default_grid()).unwrap();
    assert!((r.psi_mu.unwrap() - 1.0).abs() < 1e-3, "{r:?}");

    let u = Density::uniform_interval(0.0, 1.0).unwrap();
    let r = cheeger_1d(&u, &u.default_grid()).unwrap();
    assert!((r.psi_mu.unwrap() - 0.5).abs() < 1e-3);
    assert!((r.minimizer.offset - 0.5).abs() < 1e-6);
}

#[test]
fn scan_is_stable_under_refinement() {
    for d in one_d_catalog() {
        let grid = d.grid_with_points(1001);
        let a = cheeger_1d(&d, &grid).unwrap().cheeger;
        let b = cheeger_1d(&d, &grid.refined()).unwrap().cheeger;
        assert!((a - b).abs() <= grid.spacing(0), "{d}: {a} vs {b}");
    }
}

#[test]
fn report_invariants() {
    for d in one_d_catalog() {
        let r = cheeger_1d(&d, &d.default_grid()).unwrap();
        assert!(r.psi_halfspace <= r.psi_mu.unwrap() + 1e-9);
        assert!(r.cheeger > 0.0 && r.minimizer.mass > 0.0 && r.minimizer.mass <= 0.5);
    }
}

#[test]
fn sandwich_on_one_d_catalog() {
    for d in one_d_catalog() {
        let r = buser_sandwich_check(&d, &d.default_grid()).unwrap();
        assert!(r.passed(), "{r:#?}");
    }
    let ratio = |d: Density| cheeger_1d(&d, &d.default_grid()).unwrap().buser_ratio.unwrap();
    assert!((ratio(Density::centered_exponential()) - 0.25).abs() < 1e-2);
    assert!((ratio(Density::standard_gaussian(1, 1.0).unwrap()) - PI / 2.0).abs() < 1e-2);
    assert!((ratio(Density::uniform_interval(0.0, 1.0).unwrap()) - PI * PI / 4.0).abs() < 1e-2);
}

#[test]
fn gaussian_plane_matches_line() {
    let g = Density::standard_gaussian(2, 1.0).unwrap();
    let r = halfspace_profile_nd(&g, &directions(2, 12), &g.default_grid()).unwrap();
    assert!((r.cheeger - (2.0 / PI).sqrt()).abs() < 2e-3, "{}", r.cheeger);
    for p in &r.profiles {
        assert!((p.ratio - r.cheeger).abs() < 2e-3);
    }
}

#[test]
fn product_axis_competitors() {
    let g = Density::standard_gaussian(1, 1.0).unwrap();
    let e = Density::centered_exponential();
    let hg = cheeger_1d(&g, &g.default_grid()).unwrap().cheeger;
    let he = cheeger_1d(&e, &e.default_grid()).unwrap().cheeger;
    let p = Density::product(vec![g, e]).unwrap();
    let r = halfspace_profile_nd(&p, &directions(2, 16), &p.default_grid()).unwrap();
    assert!(r.cheeger <= hg.min(he) + 1e-3, "{} vs {}", r.cheeger, hg.min(he));
}

#[test]
fn isotropic_triangle() {
    let body: ConvexBody = "body:simplex:n=2".parse().unwrap();
    let t = isotropize(&Density::uniform(body)).unwrap().density;
    let r = halfspace_profile_nd(&t, &directions(2, 48), &t.default_grid()).unwrap();
    assert!(r.cheeger.is_finite() && r.cheeger > 0.0);
    let s = buser_sandwich_check(&t, &t.default_grid()).unwrap();
    assert!(s.passed(), "{s:#?}");
}

#[test]
fn lipschitz_examples() {
    let g = Density::standard_gaussian(1, 1.0).unwrap();
    let r = lipschitz_variance_ratio(&g, &g.default_grid()).unwrap();
    assert!(r.check.passed(), "{:#?}", r.check);
    assert!((r.ratio - 1.0).abs() < 1e-3);

    let rt = 3f64.sqrt();
    let u = Density::uniform_interval(-rt, rt).unwrap();
    let r = lipschitz_variance_ratio(&u, &u.default_grid()).unwrap();
    assert!(r.check.passed());
    assert!((r.ratio - PI * PI / 12.0).abs() < 1e-3, "{}", r.ratio);

    let e = Density::centered_exponential();
    let r = lipschitz_variance_ratio(&e, &e.default_grid()).unwrap();
    assert!(r.check.passed());
    assert!((r.ratio - 0.25).abs() < 1e-2, "{}", r.ratio);

    let p = Density::product(vec![g, u]).unwrap();
    let r = lipschitz_variance_ratio(&p, &p.default_grid()).unwrap();
    assert!(r.check.passed(), "{:#?}", r.check);
    assert!(r.ratio > 0.0 && r.ratio <= 1.0 + 1e-6);
}
