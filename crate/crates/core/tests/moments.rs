use std::f64::consts::{E, PI};

use lcl_core::moments::{
    central_section, halfspace_mass, halfspace_sweep, isotropize, moment_report, quadrature_moments, section_sweep,
    HALFSPACE_BOUNDS, SECTION_BOUNDS,
};
use lcl_core::{Density, Error, Grid};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn parse(s: &str) -> Density {
    s.parse().unwrap()
}

#[test]
fn exponential_moments_by_quadrature() {
    let d = parse("exponential");
    let m = quadrature_moments(&d, &d.moment_grid()).unwrap();
    assert!(m.barycenter[0].abs() < 1e-8);
    assert!((m.covariance[0][0] - 1.0).abs() < 1e-8);
}

#[test]
fn isotropic_product_half_space_attains_inverse_e() {
    let d = isotropize(&parse("product:factors=(gaussian:s=1)|(exponential)")).unwrap().density;
    // P(E - 1 >= 0) for E ~ Exp(1)
    let m = halfspace_mass(&d, &[0.0, 1.0], &d.moment_grid()).unwrap();
    assert!((m - 1.0 / E).abs() < 1e-8, "{m}");
    let other = halfspace_mass(&d, &[0.0, -1.0], &d.moment_grid()).unwrap();
    assert!((m + other - 1.0).abs() < 1e-8);
}

#[test]
fn gaussian_sections_are_direction_free() {
    let d = parse("gaussian:s=1,n=3");
    for u in [[1.0, 0.0, 0.0], [1.0, 2.0, -1.0], [0.3, 0.3, 0.9]] {
        let v = central_section(&d, &u, &d.moment_grid()).unwrap();
        assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-8, "{v}");
    }
}

#[test]
fn uniform_triangle_section_through_barycenter() {
    // right triangle with legs 1: barycenter (1/3, 1/3); vertical chord of length 2/3
    let d = parse("uniform:body=(body:hpoly:h=[-1,0,0;0,-1,0;1,1,1])");
    let v = central_section(&d, &[1.0, 0.0], &d.moment_grid()).unwrap();
    assert!((v - (2.0 / 3.0) / 0.5).abs() < 1e-12, "{v}");
    let m = halfspace_mass(&d, &[1.0, 0.0], &d.moment_grid()).unwrap();
    // {x ≥ 1/3}: triangle with legs 2/3
    assert!((m - (2.0f64 / 3.0).powi(2)).abs() < 1e-12, "{m}");
}

#[test]
fn isotropic_catalog_respects_both_bounds() {
    for spec in ["isotropic:base=(uniform:box=[0,2]x[0,1])", "isotropic:base=(product:factors=(exponential)|(uniform:box=[-1,1]))"] {
        let d = parse(spec);
        let s = section_sweep(&d, 16, &d.moment_grid(), 1e-6).unwrap();
        assert!(s.warning.is_none(), "{spec}");
        assert!(s.all_within(), "{spec}: [{}, {}] vs {SECTION_BOUNDS:?}", s.min(), s.max());
        let h = halfspace_sweep(&d, 16, &d.moment_grid(), 1e-6).unwrap();
        assert!(h.all_within(), "{spec}: [{}, {}] vs {HALFSPACE_BOUNDS:?}", h.min(), h.max());
    }
}

#[test]
fn sheared_isotropic_image_by_quadrature() {
    let base = parse("product:factors=(gaussian:s=1)|(convolve:s=0.3,base=(exponential))");
    let d = Density::affine(&base, DMatrix::from_row_slice(2, 2, &[0.3, 0.8, 0.0, 0.3]), vec![0.5, -0.5]).unwrap();
    let iso = isotropize(&d).unwrap().density;
    let r = quadrature_moments(&iso, &iso.moment_grid()).unwrap();
    assert!((r.covariance_matrix() - DMatrix::identity(2, 2)).amax() < 1e-3, "{:?}", r.covariance);
    assert!(r.barycenter.iter().all(|v| v.abs() < 1e-3), "{:?}", r.barycenter);
}

#[test]
fn coarse_grids_are_reported() {
    let d = parse("gaussian:s=0.01,n=2");
    let grid = Grid::uniform(&[-5.0, -5.0], &[5.0, 5.0], &[11, 11]).unwrap();
    assert!(matches!(quadrature_moments(&d, &grid), Err(Error::Unresolved { .. })));
}

#[test]
fn non_isotropic_inputs_carry_a_warning() {
    let d = parse("gaussian:s=4");
    assert!(section_sweep(&d, 4, &d.moment_grid(), 1e-6).unwrap().warning.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn isotropize_whitens_affine_images(a in 0.3f64..3.0, b in -1.0f64..1.0, c in 0.3f64..3.0, s in -2.0f64..2.0) {
        // base has mean 0 and covariance diag(1, 1/3); the composed map must whiten it
        let base = parse("product:factors=(exponential)|(uniform:box=[-1,1])");
        let m = DMatrix::from_row_slice(2, 2, &[a, b, 0.0, c]);
        let shift = DVector::from_vec(vec![s, -s]);
        let d = Density::affine(&base, m.clone(), shift.as_slice().to_vec()).unwrap();
        let iso = isotropize(&d).unwrap();
        let t = &iso.a * &m;
        let cov = &t * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 3.0])) * t.transpose();
        prop_assert!((cov - DMatrix::identity(2, 2)).amax() < 1e-10);
        let mean = &iso.a * &shift + DVector::from_vec(iso.shift.clone());
        prop_assert!(mean.amax() < 1e-10, "{}", mean);
    }

    #[test]
    fn symmetric_densities_split_in_half(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        prop_assume!(x.abs() + y.abs() > 0.1);
        let d = parse("product:factors=(gaussian:s=2)|(uniform:box=[-1,1])");
        let m = halfspace_mass(&d, &[x, y], &d.moment_grid()).unwrap();
        prop_assert!((m - 0.5).abs() < 1e-8, "{}", m);
    }

    #[test]
    fn scaling_covariance_matches_the_map(k in 0.2f64..4.0) {
        let base = parse("exponential");
        let d = Density::affine(&base, DMatrix::from_element(1, 1, k), vec![0.0]).unwrap();
        let r = moment_report(&d, &d.moment_grid()).unwrap();
        prop_assert!((r.covariance[0][0] - k * k).abs() < 1e-7 * k * k);
    }
}
