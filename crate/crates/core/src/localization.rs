//! The tilt process `dθ_t = dW_t + a(t, θ_t) dt`, `θ_0 = 0`, where `a` and
//! `A` are the barycenter and covariance of
//! `p_{t,θ}(x) ∝ exp(⟨θ,x⟩ - t|x|²/2) ρ(x)`, and the statements checked
//! along its paths.
//!
//! Two schemes: the exact representation `θ_t = tX + W_t` with `X ~ μ`,
//! and Euler–Maruyama on the SDE. Both consume the same stream, `X` first
//! and then the Brownian increments, so a path index fixes the noise.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{CheckItem, CheckReport};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::op_norm_psd;
use crate::quadrature::{stream, Sampler};
use crate::spectral::{spectral_gap, TestFunction};

/// Upper bound on `Δt · max(1, ‖Cov μ‖_op)` for the Euler scheme.
pub const EULER_CAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathScheme {
    Representation,
    Euler,
}

impl fmt::Display for PathScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Representation => "representation",
            Self::Euler => "euler",
        })
    }
}

impl FromStr for PathScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "representation" => Ok(Self::Representation),
            "euler" => Ok(Self::Euler),
            other => Err(Error::Parse {
                spec: other.into(),
                reason: "expected `representation` or `euler`".into(),
            }),
        }
    }
}

/// Barycenter and covariance of a tilt, with its log normalizer relative
/// to the base quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub log_z: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl Posterior {
    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let n = self.mean.len();
        DMatrix::from_fn(n, n, |i, j| self.cov[i][j])
    }

    pub fn cov_norm(&self) -> f64 {
        if self.mean.len() == 1 {
            self.cov[0][0].max(0.0)
        } else {
            op_norm_psd(&self.cov_matrix())
        }
    }
}

/// All tilts of one density on one quadrature rule. `log w + log ρ` is
/// cached per node; a tilt only adds `⟨θ,x⟩ - t|x|²/2`.
#[derive(Debug, Clone)]
pub struct TiltFamily {
    density: Density,
    n: usize,
    points: Vec<f64>,
    base: Vec<f64>,
    base_log_z: f64,
}

impl TiltFamily {
    pub fn new(d: &Density, grid: &Grid) -> Result<Self> {
        let n = d.dim();
        if grid.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: grid.dim(),
            });
        }
        let rows: Vec<Option<(Vec<f64>, f64)>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let w = grid.weight(i);
                let x = grid.node(i)[..n].to_vec();
                let lr = d.log_density(&x);
                (w > 0.0 && lr.is_finite()).then(|| (x, w.ln() + lr))
            })
            .collect();
        let mut points = Vec::new();
        let mut base = Vec::new();
        for (x, lb) in rows.into_iter().flatten() {
            points.extend(x);
            base.push(lb);
        }
        if base.is_empty() {
            return Err(Error::NonPositiveDensity { node: 0 });
        }
        let mut fam = Self {
            density: d.clone(),
            n,
            points,
            base,
            base_log_z: 0.0,
        };
        fam.base_log_z = fam.probabilities(0.0, &vec![0.0; n]).1;
        Ok(fam)
    }

    /// Family on the density's Gauss–Legendre moment grid.
    pub fn for_density(d: &Density) -> Result<Self> {
        Self::new(d, &d.moment_grid())
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    fn exponent(&self, i: usize, t: f64, theta: &[f64]) -> f64 {
        let x = self.point(i);
        let mut e = self.base[i];
        for (xk, th) in x.iter().zip(theta) {
            e += th * xk - 0.5 * t * xk * xk;
        }
        e
    }

    /// Normalized node probabilities of `p_{t,θ}` and `log Z(t,θ)`.
    pub fn probabilities(&self, t: f64, theta: &[f64]) -> (Vec<f64>, f64) {
        let e: Vec<f64> = (0..self.len()).map(|i| self.exponent(i, t, theta)).collect();
        let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = e.iter().map(|v| (v - top).exp()).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        (p, top + s.ln())
    }

    pub fn posterior(&self, t: f64, theta: &[f64]) -> Posterior {
        let (p, log_z) = self.probabilities(t, theta);
        let n = self.n;
        let mut mean = vec![0.0; n];
        for (i, pi) in p.iter().enumerate() {
            for (m, x) in mean.iter_mut().zip(self.point(i)) {
                *m += pi * x;
            }
        }
        let mut cov = vec![vec![0.0; n]; n];
        for (i, pi) in p.iter().enumerate() {
            let x = self.point(i);
            for a in 0..n {
                for b in a..n {
                    cov[a][b] += pi * (x[a] - mean[a]) * (x[b] - mean[b]);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                cov[a][b] = cov[b][a];
            }
        }
        Posterior { log_z, mean, cov }
    }

    /// `a(t, θ)` alone.
    pub fn mean(&self, t: f64, theta: &[f64]) -> Vec<f64> {
        let (p, _) = self.probabilities(t, theta);
        let mut mean = vec![0.0; self.n];
        for (i, pi) in p.iter().enumerate() {
            for (m, x) in mean.iter_mut().zip(self.point(i)) {
                *m += pi * x;
            }
        }
        mean
    }

    /// `E_{p_{t,θ}} f` and `Var_{p_{t,θ}} f` for node values `f`.
    pub fn mean_var(&self, t: f64, theta: &[f64], f: &[f64]) -> (f64, f64) {
        let (p, _) = self.probabilities(t, theta);
        let m: f64 = p.iter().zip(f).map(|(a, b)| a * b).sum();
        let v: f64 = p.iter().zip(f).map(|(a, b)| a * (b - m) * (b - m)).sum();
        (m, v)
    }

    /// `p_{t,θ}(x)` given `log Z(t,θ)` from [`Self::probabilities`]. The
    /// normalizer is taken relative to the rule's base mass, so `p_{0,0} = ρ`
    /// exactly.
    pub fn tilted_density(&self, t: f64, theta: &[f64], log_z: f64, x: &[f64]) -> f64 {
        let tilt: f64 = x.iter().zip(theta).map(|(a, b)| a * b - 0.5 * t * a * a).sum();
        if tilt == 0.0 && log_z == self.base_log_z {
            return self.density.density(x);
        }
        let lr = self.density.log_density(x);
        if !lr.is_finite() {
            return 0.0;
        }
        (lr + tilt - (log_z - self.base_log_z)).exp()
    }

    /// Values of `f` at the nodes.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect()
    }
}

/// Quadrature moments of `tilt(d, t, θ)` on `grid`.
pub fn posterior_moments(d: &Density, t: f64, theta: &[f64], grid: &Grid) -> Result<Posterior> {
    d.tilt(t, theta)?;
    Ok(TiltFamily::new(d, grid)?.posterior(t, theta))
}

/// One simulated path with posterior moments at every grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltPath {
    pub scheme: PathScheme,
    pub seed: u64,
    pub index: u64,
    pub times: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub cov: Vec<Vec<Vec<f64>>>,
    /// `‖A_t‖_op` at each time.
    pub cov_norm: Vec<f64>,
}

impl TiltPath {
    /// `max_t t ‖A_t‖_op`.
    pub fn max_scaled_cov(&self) -> f64 {
        self.times
            .iter()
            .zip(&self.cov_norm)
            .map(|(t, c)| t * c)
            .fold(0.0, f64::max)
    }

    pub fn terminal(&self) -> &[f64] {
        self.theta.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

/// Sampler, tilt family and seed shared by all paths of one run.
#[derive(Debug)]
pub struct PathSimulator {
    family: TiltFamily,
    sampler: Sampler,
    seed: u64,
    cov_norm0: f64,
}

impl PathSimulator {
    pub fn new(d: &Density, seed: u64) -> Result<Self> {
        Self::with_grid(d, &d.moment_grid(), seed)
    }

    pub fn with_grid(d: &Density, grid: &Grid, seed: u64) -> Result<Self> {
        let family = TiltFamily::new(d, grid)?;
        let cov_norm0 = family.posterior(0.0, &vec![0.0; d.dim()]).cov_norm();
        Ok(Self {
            family,
            sampler: Sampler::new(d, seed)?,
            seed,
            cov_norm0,
        })
    }

    pub fn family(&self) -> &TiltFamily {
        &self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest Euler step allowed.
    pub fn step_cap(&self) -> f64 {
        EULER_CAP / self.cov_norm0.max(1.0)
    }

    /// `θ` at the given increasing times for path `index`, exact
    /// representation. Returns `(X, θ_{t_k})`.
    pub fn representation(&self, index: u64, times: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.family.dim();
        let mut rng = stream(self.seed, index);
        let x = self.sampler.draw(&mut rng);
        let mut w = vec![0.0; n];
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let dw = gaussian_vec(&mut rng, n, (t - prev).max(0.0).sqrt());
            w.iter_mut().zip(&dw).for_each(|(a, b)| *a += b);
            prev = t;
            out.push(x.iter().zip(&w).map(|(xi, wi)| t * xi + wi).collect());
        }
        (x, out)
    }

    /// Full path on `steps` equal steps up to `horizon`.
    pub fn path(&self, index: u64, horizon: f64, steps: usize, scheme: PathScheme) -> Result<TiltPath> {
        let n = self.family.dim();
        if !(horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be >= 0 (got {horizon})")));
        }
        let steps = if horizon == 0.0 { 0 } else { steps.max(1) };
        let dt = if steps == 0 { 0.0 } else { horizon / steps as f64 };
        if scheme == PathScheme::Euler && dt > self.step_cap() {
            return Err(Error::StepSize { dt, cap: self.step_cap() });
        }
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let theta = match scheme {
            PathScheme::Representation => {
                let (_, th) = self.representation(index, &times);
                th
            }
            PathScheme::Euler => {
                let mut rng = stream(self.seed, index);
                let _ = self.sampler.draw(&mut rng);
                let mut th = vec![vec![0.0; n]];
                let mut cur = vec![0.0; n];
                for k in 1..=steps {
                    // The first increment of the representation is over
                    // [0, t_0] = [0, 0].
                    if k == 1 {
                        let _ = gaussian_vec(&mut rng, n, 0.0);
                    }
                    let drift = self.family.mean(times[k - 1], &cur);
                    let dw = gaussian_vec(&mut rng, n, dt.sqrt());
                    for c in 0..n {
                        cur[c] += dw[c] + drift[c] * dt;
                    }
                    th.push(cur.clone());
                }
                th
            }
        };
        let mut a = Vec::with_capacity(times.len());
        let mut cov = Vec::with_capacity(times.len());
        let mut cov_norm = Vec::with_capacity(times.len());
        for (t, th) in times.iter().zip(&theta) {
            let p = self.family.posterior(*t, th);
            cov_norm.push(p.cov_norm());
            a.push(p.mean);
            cov.push(p.cov);
        }
        Ok(TiltPath {
            scheme,
            seed: self.seed,
            index,
            times,
            theta,
            a,
            cov,
            cov_norm,
        })
    }

    /// Paths `0..count`, in index order.
    pub fn paths(&self, count: usize, horizon: f64, steps: usize, scheme: PathScheme) -> Result<Vec<TiltPath>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.path(i, horizon, steps, scheme))
            .collect()
    }

    /// Terminal `θ_t` of paths `0..count` under the exact representation.
    pub fn terminals(&self, count: usize, t: f64) -> Vec<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.representation(i, &[0.0, t]).1.pop().unwrap_or_default())
            .collect()
    }
}

/// Path 0 of a run.
pub fn simulate_path(d: &Density, horizon: f64, steps: usize, scheme: PathScheme, seed: u64) -> Result<TiltPath> {
    PathSimulator::new(d, seed)?.path(0, horizon, steps, scheme)
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (m, 0.0);
    }
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Tolerance `3·SE` with a floor for deterministic cases.
fn three_se(se: f64, scale: f64) -> f64 {
    3.0 * se + 1e-9 * (1.0 + scale.abs())
}

/// `E p_T(x) = ρ(x)` at each probe, within `3·SE`.
pub fn martingale_check(d: &Density, probes: &[Vec<f64>], horizon: f64, npaths: usize, seed: u64) -> Result<CheckReport> {
    let sim = PathSimulator::new(d, seed)?;
    let fam = sim.family();
    let ends = sim.terminals(npaths, horizon);
    let log_z: Vec<f64> = ends.par_iter().map(|th| fam.probabilities(horizon, th).1).collect();
    let mut r = CheckReport::new("martingale", d.to_string());
    for x in probes {
        let values: Vec<f64> = ends
            .iter()
            .zip(&log_z)
            .map(|(th, lz)| fam.tilted_density(horizon, th, *lz, x))
            .collect();
        let (m, se) = mean_se(&values);
        let target = d.density(x);
        let label = format!("E p_T({}) = rho", fmt_point(x));
        r.push(CheckItem::close(&label, m, target, three_se(se, target)));
        r.push(CheckItem::observe(format!("z-score at {}", fmt_point(x)), z_score(m, target, se), 3.0));
    }
    Ok(r)
}

fn z_score(m: f64, target: f64, se: f64) -> f64 {
    if se > 0.0 {
        (m - target).abs() / se
    } else if m == target {
        0.0
    } else {
        f64::INFINITY
    }
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    parts.join(",")
}

/// Mean trajectory of `‖A_t‖_op` and the worst `t ‖A_t‖_op` over paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub mean_cov_norm: Vec<f64>,
    pub max_scaled: f64,
}

/// `t ‖A_t‖_op ≤ 1` at every time of every path; `A_t` symmetric PSD.
pub fn covariance_bound_check(
    d: &Density,
    horizon: f64,
    steps: usize,
    npaths: usize,
    seed: u64,
) -> Result<(CheckReport, CovarianceTrajectory)> {
    let sim = PathSimulator::new(d, seed)?;
    let paths = sim.paths(npaths, horizon, steps, PathScheme::Representation)?;
    let times = paths.first().map(|p| p.times.clone()).unwrap_or_default();
    let mut mean_cov_norm = vec![0.0; times.len()];
    let mut max_scaled: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for p in &paths {
        for (k, c) in p.cov_norm.iter().enumerate() {
            mean_cov_norm[k] += c / paths.len() as f64;
        }
        max_scaled = max_scaled.max(p.max_scaled_cov());
        for c in &p.cov {
            let n = c.len();
            let m = DMatrix::from_fn(n, n, |i, j| c[i][j]);
            let e = m.symmetric_eigen().eigenvalues.min();
            min_eig = min_eig.min(e);
        }
    }
    let mut r = CheckReport::new("covariance_bound", d.to_string());
    r.push(CheckItem::at_most("max t ||A_t||_op <= 1", max_scaled, 1.0, 1e-6));
    r.push(CheckItem::at_least("min eigenvalue of A_t >= 0", min_eig, 0.0, 1e-12));
    let cov0 = sim.cov_norm0;
    r.push(CheckItem::observe(
        "max_t E ||A_t||_op",
        mean_cov_norm.iter().copied().fold(0.0, f64::max),
        cov0,
    ));
    Ok((
        r,
        CovarianceTrajectory {
            times,
            mean_cov_norm,
            max_scaled,
        },
    ))
}

/// `E Var_{p_t} f ≤ Var_μ f ≤ (2 + t/λ₀) E Var_{p_t} f`, each within `3·SE`.
pub fn variance_sandwich_check<F>(d: &Density, f: F, t: f64, npaths: usize, seed: u64) -> Result<CheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sim = PathSimulator::new(d, seed)?;
    let fam = sim.family();
    let fv = fam.sample(&f);
    let (_, var0) = fam.mean_var(0.0, &vec![0.0; d.dim()], &fv);
    let vars: Vec<f64> = sim
        .terminals(npaths, t)
        .par_iter()
        .map(|th| fam.mean_var(t, th, &fv).1)
        .collect();
    let (m, se) = mean_se(&vars);
    let lambda0 = spectral_gap(d, &d.default_grid())?.lambda;
    let factor = 2.0 + t / lambda0;
    let mut r = CheckReport::new("variance_sandwich", d.to_string());
    r.push(CheckItem::at_most("E Var_p_t(f) <= Var_mu(f)", m, var0, three_se(se, var0)));
    r.push(CheckItem::at_most(
        "Var_mu(f) <= (2 + t/lambda_0) E Var_p_t(f)",
        var0,
        factor * m,
        factor * three_se(se, m),
    ));
    r.push(CheckItem::observe("E Var_p_t(f)", m, se));
    r.push(CheckItem::observe("Var_mu(f) / E Var_p_t(f)", var0 / m, factor));
    Ok(r)
}

/// `E Var_{p_t} f` non-increasing over `times`, with common paths; each
/// consecutive pair is compared through the paired differences.
pub fn variance_monotonicity_check<F>(d: &Density, f: F, times: &[f64], npaths: usize, seed: u64) -> Result<CheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sim = PathSimulator::new(d, seed)?;
    let fam = sim.family();
    let fv = fam.sample(&f);
    let per_path: Vec<Vec<f64>> = (0..npaths as u64)
        .into_par_iter()
        .map(|i| {
            let (_, th) = sim.representation(i, times);
            times.iter().zip(&th).map(|(t, th)| fam.mean_var(*t, th, &fv).1).collect()
        })
        .collect();
    let mut r = CheckReport::new("variance_monotonicity", d.to_string());
    for k in 1..times.len() {
        let diffs: Vec<f64> = per_path.iter().map(|v| v[k] - v[k - 1]).collect();
        let (m, se) = mean_se(&diffs);
        r.push(CheckItem::at_most(
            format!("E Var_p_{} - E Var_p_{} <= 0", times[k], times[k - 1]),
            m,
            0.0,
            three_se(se, 0.0),
        ));
    }
    Ok(r)
}

/// `∫(Lu)² dμ + t∫|∇u|² dμ = E ∫(L_t u)² dμ_t` with
/// `∇ψ_t = ∇ψ + t x - θ_t`.
pub fn localized_bochner_check(d: &Density, u: &TestFunction, t: f64, npaths: usize, seed: u64) -> Result<CheckReport> {
    let sim = PathSimulator::new(d, seed)?;
    let fam = sim.family();
    let n = d.dim();
    let nodes: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..fam.len())
        .into_par_iter()
        .map(|i| {
            let x = fam.point(i);
            (u.hess(x).trace(), u.grad(x), d.grad_psi(x))
        })
        .collect();
    let zero = vec![0.0; n];
    let (p0, _) = fam.probabilities(0.0, &zero);
    let mut lhs = 0.0;
    for (pi, (lap, g, gp)) in p0.iter().zip(&nodes) {
        let lu = lap - g.iter().zip(gp).map(|(a, b)| a * b).sum::<f64>();
        let grad2: f64 = g.iter().map(|a| a * a).sum();
        lhs += pi * (lu * lu + t * grad2);
    }
    let rhs: Vec<f64> = sim
        .terminals(npaths, t)
        .par_iter()
        .map(|th| {
            let (p, _) = fam.probabilities(t, th);
            p.iter()
                .enumerate()
                .map(|(i, pi)| {
                    let (lap, g, gp) = &nodes[i];
                    let x = fam.point(i);
                    let drift: f64 = (0..n).map(|k| (gp[k] + t * x[k] - th[k]) * g[k]).sum();
                    let lu = lap - drift;
                    pi * lu * lu
                })
                .sum()
        })
        .collect();
    let (m, se) = mean_se(&rhs);
    let mut r = CheckReport::new("localized_bochner", format!("{d}; u = {}", u.name));
    r.push(CheckItem::close("int (Lu)^2 + t int |grad u|^2 = E int (L_t u)^2", lhs, m, three_se(se, m)));
    r.push(CheckItem::observe("lhs", lhs, lhs));
    r.push(CheckItem::observe("rhs mean", m, se));
    Ok(r)
}

/// Per path `λ_t ≥ √(t/‖A_t‖_op) ≥ t`; the ratio
/// `λ₀⁻¹ / E[√‖A_t‖_op / √t]` is recorded.
pub fn spectral_restart_check(d: &Density, t: f64, npaths: usize, seed: u64) -> Result<CheckReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("restart time must be positive (got {t})")));
    }
    if d.dim() > 2 {
        return Err(Error::Unsupported("per-path eigen-solves are limited to n <= 2".into()));
    }
    let sim = PathSimulator::new(d, seed)?;
    let fam = sim.family();
    let ends = sim.terminals(npaths, t);
    let rows: Vec<(f64, f64)> = ends
        .par_iter()
        .map(|th| {
            let a = fam.posterior(t, th).cov_norm();
            let tilted = d.tilt(t, th)?;
            let lambda = spectral_gap(&tilted, &tilted.default_grid())?.lambda;
            Ok((lambda, a))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst_first = f64::INFINITY;
    let mut worst_second = f64::INFINITY;
    for (lambda, a) in &rows {
        let mid = (t / a).sqrt();
        worst_first = worst_first.min(lambda - mid);
        worst_second = worst_second.min(mid - t);
    }
    let lambda0 = spectral_gap(d, &d.default_grid())?.lambda;
    let scaled: Vec<f64> = rows.iter().map(|(_, a)| a.sqrt() / t.sqrt()).collect();
    let (ms, _) = mean_se(&scaled);
    let (ma, _) = mean_se(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let mut r = CheckReport::new("spectral_restart", d.to_string());
    r.push(CheckItem::at_least("min over paths of lambda_t - sqrt(t/||A_t||)", worst_first, 0.0, 1e-3));
    r.push(CheckItem::at_least("min over paths of sqrt(t/||A_t||) - t", worst_second, 0.0, 1e-3));
    r.push(CheckItem::observe("lambda_0^-1 / E[sqrt(||A_t||/t)]", (1.0 / lambda0) / ms, 0.0));
    r.push(CheckItem::observe("E ||A_t||_op", ma, sim.cov_norm0));
    Ok(r)
}

/// Representation and Euler terminal states agree in mean and covariance
/// within `3·SE` of the paired differences (the two share Brownian
/// increments but `X` is independent of them, so agreement is in law).
pub fn cross_scheme_check(d: &Density, horizon: f64, steps: usize, npaths: usize, seed: u64) -> Result<CheckReport> {
    let sim = PathSimulator::new(d, seed)?;
    let n = d.dim();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..npaths as u64)
        .into_par_iter()
        .map(|i| {
            let rep = sim.path(i, horizon, steps, PathScheme::Representation)?;
            let eul = sim.path(i, horizon, steps, PathScheme::Euler)?;
            Ok((rep.terminal().to_vec(), eul.terminal().to_vec()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = CheckReport::new("cross_scheme", d.to_string());
    let mean_of = |k: usize, which: usize| -> f64 {
        pairs.iter().map(|p| if which == 0 { p.0[k] } else { p.1[k] }).sum::<f64>() / pairs.len() as f64
    };
    let mr: Vec<f64> = (0..n).map(|k| mean_of(k, 0)).collect();
    let me: Vec<f64> = (0..n).map(|k| mean_of(k, 1)).collect();
    for k in 0..n {
        let diffs: Vec<f64> = pairs.iter().map(|p| p.0[k] - p.1[k]).collect();
        let (m, se) = mean_se(&diffs);
        r.push(CheckItem::close(format!("mean theta_T[{k}]"), m, 0.0, three_se(se, 0.0).min(0.1)));
    }
    for a in 0..n {
        for b in a..n {
            let diffs: Vec<f64> = pairs
                .iter()
                .map(|p| (p.0[a] - mr[a]) * (p.0[b] - mr[b]) - (p.1[a] - me[a]) * (p.1[b] - me[b]))
                .collect();
            let (m, se) = mean_se(&diffs);
            r.push(CheckItem::close(format!("cov theta_T[{a}{b}]"), m, 0.0, three_se(se, 0.0).min(0.1)));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_posterior_closed_form() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let p = posterior_moments(&g, 0.5, &[0.9], &g.moment_grid()).unwrap();
        assert!((p.mean[0] - 0.9 / 1.5).abs() < 1e-12);
        assert!((p.cov[0][0] - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_horizon_path() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        let p = simulate_path(&g, 0.0, 10, PathScheme::Representation, 1).unwrap();
        assert_eq!(p.times, vec![0.0]);
        assert_eq!(p.theta, vec![vec![0.0]]);
    }

    #[test]
    fn euler_step_cap() {
        let g = Density::standard_gaussian(1, 1.0).unwrap();
        assert!(matches!(
            simulate_path(&g, 1.0, 2, PathScheme::Euler, 1),
            Err(Error::StepSize { .. })
        ));
    }
}
