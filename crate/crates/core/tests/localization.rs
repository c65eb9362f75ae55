use lcl_core::density::Density;
use lcl_core::localization::*;
use lcl_core::spectral::TestFunction;

fn gauss() -> Density {
    Density::standard_gaussian(1, 1.0).unwrap()
}

#[test]
fn gaussian_posterior_moments() {
    let g = gauss();
    let grid = g.moment_grid();
    for (t, th) in [(0.0, 0.0), (0.5, 1.2), (2.0, -3.0)] {
        let p = posterior_moments(&g, t, &[th], &grid).unwrap();
        assert!((p.mean[0] - th / (1.0 + t)).abs() < 1e-10);
        assert!((p.cov[0][0] - 1.0 / (1.0 + t)).abs() < 1e-10);
    }
    let g2 = Density::standard_gaussian(2, 1.0).unwrap();
    let p = posterior_moments(&g2, 1.0, &[0.4, -0.2], &g2.moment_grid()).unwrap();
    assert!((p.mean[0] - 0.2).abs() < 1e-10 && (p.mean[1] + 0.1).abs() < 1e-10);
    assert!((p.cov[0][0] - 0.5).abs() < 1e-10 && p.cov[0][1].abs() < 1e-10);
}

#[test]
fn uniform_posterior_is_centered_and_contracted() {
    let u = Density::uniform_interval(-1.0, 1.0).unwrap();
    let p = posterior_moments(&u, 1.0, &[0.0], &u.moment_grid()).unwrap();
    assert!(p.mean[0].abs() < 1e-12);
    assert!(p.cov[0][0] < 1.0 / 3.0);
    // oracle: adaptive Simpson of x² e^{-x²/2} over x e^{-x²/2} on [-1, 1]
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mut s = f(-1.0) + f(1.0);
        for k in 1..n {
            let x = -1.0 + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let z = simpson(&|x| (-0.5 * x * x).exp());
    let m2 = simpson(&|x| x * x * (-0.5 * x * x).exp()) / z;
    assert!((p.cov[0][0] - m2).abs() < 1e-10, "{} vs {m2}", p.cov[0][0]);
}

#[test]
fn posterior_propagates_tilt_errors() {
    let e = Density::centered_exponential();
    assert!(posterior_moments(&e, 0.0, &[2.0], &e.moment_grid()).is_err());
}

#[test]
fn representation_terminal_variance() {
    let g = gauss();
    let sim = PathSimulator::new(&g, 11).unwrap();
    let t = 1.0;
    let ends: Vec<f64> = sim.terminals(10_000, t).into_iter().map(|v| v[0]).collect();
    let n = ends.len() as f64;
    let m = ends.iter().sum::<f64>() / n;
    let sq: Vec<f64> = ends.iter().map(|x| (x - m) * (x - m)).collect();
    let (var, se) = mean_se(&sq);
    assert!((var - (t * t + t)).abs() <= 3.0 * se, "{var} ± {se}");
}

#[test]
fn path_invariants() {
    for d in [gauss(), Density::uniform_interval(-1.0, 1.0).unwrap(), Density::centered_exponential()] {
        let sim = PathSimulator::new(&d, 3).unwrap();
        for p in sim.paths(20, 2.0, 50, PathScheme::Representation).unwrap() {
            assert_eq!(p.theta[0], vec![0.0]);
            assert!(p.max_scaled_cov() <= 1.0 + 1e-6);
            assert!(p.cov.iter().all(|c| c[0][0] >= 0.0));
        }
    }
}

#[test]
fn schemes_agree_on_gaussian() {
    let g = gauss();
    let r = cross_scheme_check(&g, 0.5, 500, 2000, 5).unwrap();
    assert!(r.passed(), "{r:#?}");
    for it in &r.items {
        assert!(it.value.abs() <= 0.1);
    }
}

#[test]
fn martingale_on_catalog() {
    let cases = [
        (gauss(), vec![-1.5, -0.5, 0.0, 0.7, 1.5]),
        (Density::uniform_interval(-1.0, 1.0).unwrap(), vec![-0.8, -0.3, 0.0, 0.5, 0.9]),
        (Density::centered_exponential(), vec![-0.5, 0.0, 0.5, 1.5, 3.0]),
    ];
    for (d, xs) in cases {
        let probes: Vec<Vec<f64>> = xs.into_iter().map(|x| vec![x]).collect();
        let r = martingale_check(&d, &probes, 0.3, 10_000, 21).unwrap();
        assert!(r.passed(), "{r:#?}");
        let r0 = martingale_check(&d, &probes, 0.0, 10, 21).unwrap();
        for it in r0.items.iter().filter(|i| i.label.starts_with("E p_T")) {
            assert!((it.value - it.bound).abs() <= 1e-15 * it.bound, "{it:?}");
        }
    }
}

#[test]
fn covariance_bound_on_paths() {
    for d in [gauss(), Density::centered_exponential()] {
        let (r, traj) = covariance_bound_check(&d, 3.0, 60, 200, 8).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(traj.max_scaled <= 1.0 + 1e-6);
        assert_eq!(traj.times.len(), 61);
    }
}

#[test]
fn gaussian_variance_sandwich() {
    let g = gauss();
    let r = variance_sandwich_check(&g, |x| x[0], 0.5, 500, 2).unwrap();
    assert!(r.passed(), "{r:#?}");
    let it = r.item("E Var_p_t(f) <= Var_mu(f)").unwrap();
    assert!((it.value - 2.0 / 3.0).abs() < 1e-10 && (it.bound - 1.0).abs() < 1e-10);

    let r = variance_sandwich_check(&g, |_| 1.0, 0.5, 50, 2).unwrap();
    assert!(r.passed());
    assert!(r.items[0].value.abs() < 1e-20 && r.items[0].bound.abs() < 1e-20);
}

#[test]
fn uniform_variance_sandwich_and_monotonicity() {
    let r3 = 3f64.sqrt();
    let u = Density::uniform_interval(-r3, r3).unwrap();
    let r = variance_sandwich_check(&u, |x| x[0] * x[0], 0.4, 10_000, 4).unwrap();
    assert!(r.passed(), "{r:#?}");
    let m = variance_monotonicity_check(&u, |x| x[0] * x[0], &[0.1, 0.4, 1.0, 2.0], 2000, 4).unwrap();
    assert!(m.passed(), "{m:#?}");
}

#[test]
fn localized_bochner_examples() {
    let g = gauss();
    let r = localized_bochner_check(&g, &TestFunction::power(1, 0, 1), 0.5, 200, 1).unwrap();
    assert!(r.passed());
    let it = &r.items[0];
    assert!((it.value - 1.5).abs() < 1e-6 && (it.bound - 1.5).abs() < 1e-6, "{it:?}");

    let r = localized_bochner_check(&g, &TestFunction::power(1, 0, 0), 0.5, 20, 1).unwrap();
    assert!(r.items[0].value.abs() < 1e-15 && r.items[0].bound.abs() < 1e-15);

    let reg = Density::uniform_interval(-1.0, 1.0).unwrap().regularize(0.1).unwrap();
    let r = localized_bochner_check(&reg, &TestFunction::power(1, 0, 2), 0.3, 1000, 6).unwrap();
    assert!(r.passed(), "{r:#?}");
}

#[test]
fn spectral_restart_examples() {
    let g = gauss();
    let r = spectral_restart_check(&g, 0.5, 20, 3).unwrap();
    assert!(r.passed(), "{r:#?}");
    let it = &r.items[0];
    // λ_t - √(t/‖A_t‖) = 1.5 - √0.75 on every path
    assert!((it.value - (1.5 - 0.75f64.sqrt())).abs() < 2e-3, "{it:?}");

    let r3 = 3f64.sqrt();
    let u = Density::uniform_interval(-r3, r3).unwrap();
    let r = spectral_restart_check(&u, 0.2, 100, 3).unwrap();
    assert!(r.passed(), "{r:#?}");
}
