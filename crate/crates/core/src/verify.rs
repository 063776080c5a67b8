//! Self-check suite behind `omo verify`.
//!
//! Each check recomputes a closed-form fact about the counterexample game,
//! PSD-affine losses, the sandwich bound, the curl bound or the learners, and
//! compares it with the numerical machinery of the crate.

use std::fmt;

use rand::Rng;

use crate::domain::ConvexDomain;
use crate::integral::{
    line_integral, line_integral_estimate, omo_loss, sandwich_bounds, triangle_discrepancy_bound, triangle_loop,
    LossSpec, QuadratureRule,
};
use crate::learners::{LearnerState, Regularizer};
use crate::maps::{check_monotone, MonotoneMap};
use crate::networks::{gen_network, NetworkFamily, NetworkSpec};
use crate::{rng, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Quadrature nodes used by the closed-form checks.
    pub quad_nodes: usize,
    /// Adds an affine map whose symmetric part has a negative eigenvalue to
    /// the convexity check.
    pub inject_negative_eig: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, quad_nodes: 16, inject_negative_eig: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Reported but not counted.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckResult {
    fn judge(name: &'static str, ok: bool, detail: String) -> Self {
        CheckResult { name, status: if ok { Status::Pass } else { Status::Fail }, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, detail)) => Self::judge(name, ok, detail),
            Err(e) => CheckResult { name, status: Status::Fail, detail: format!("error: {e}") },
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        write!(f, "{tag:<5} {:<32} {}", self.name, self.detail)
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.status != Status::Fail)
}

pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckResult> {
    vec![
        CheckResult::from_result("saddle jacobian eigenvalues", saddle_eigenvalues()),
        CheckResult::from_result("saddle loss closed form", saddle_closed_form(opts)),
        CheckResult::from_result("saddle loss hessian", saddle_hessian()),
        saddle_monotonicity(opts),
        CheckResult::from_result("psd-affine closed form", affine_closed_form(opts)),
        CheckResult::from_result("psd-affine convexity", affine_convexity(opts)),
        CheckResult::from_result("sandwich bound", sandwich(opts)),
        CheckResult::from_result("curl bound on rotation", stokes(opts)),
        CheckResult::from_result("gradient loss reduction", gradient_reduction(opts)),
        CheckResult::from_result("descent/mirror equivalence", learner_equivalence(opts)),
    ]
}

const GRID: usize = 101;

fn grid() -> impl Iterator<Item = (f64, f64)> {
    (0..GRID).flat_map(|i| (0..GRID).map(move |j| (i as f64 / (GRID - 1) as f64, j as f64 / (GRID - 1) as f64)))
}

fn v2(r: f64, c: f64) -> Vector {
    Vector::from_row_slice(&[r, c])
}

fn saddle_eigenvalues() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (r, c) in grid() {
        let j = MonotoneMap::SaddleGame.jacobian(&v2(r, c))?;
        let (tr, det) = (j[(0, 0)] + j[(1, 1)], j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]);
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let (lo, hi) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
        worst = worst.max(lo.abs()).max((hi - (r + c)).abs());
    }
    Ok((worst <= 1e-12, format!("max deviation from {{0, r+c}} = {worst:.1e}")))
}

/// `r³/3 − r²/2 + rc − c²/2 + c³/3 − 2/3`, the loss with reference (1, 1).
fn saddle_loss(r: f64, c: f64) -> f64 {
    r.powi(3) / 3.0 - r * r / 2.0 + r * c - c * c / 2.0 + c.powi(3) / 3.0 - 2.0 / 3.0
}

fn saddle_closed_form(opts: &VerifyOptions) -> Result<(bool, String)> {
    let rule = QuadratureRule::gauss_legendre(opts.quad_nodes)?;
    let spec = LossSpec::new(&MonotoneMap::SaddleGame, v2(1.0, 1.0), 0.0);
    let mut worst = 0.0f64;
    for (r, c) in grid() {
        worst = worst.max((omo_loss(&spec, &v2(r, c), &rule)? - saddle_loss(r, c)).abs());
    }
    Ok((worst <= 1e-10, format!("max |quadrature − closed form| = {worst:.1e} on a {GRID}×{GRID} grid")))
}

fn saddle_hessian() -> Result<(bool, String)> {
    let rule = QuadratureRule::default();
    let spec = LossSpec::new(&MonotoneMap::SaddleGame, v2(1.0, 1.0), 0.0);
    let f = |r: f64, c: f64| omo_loss(&spec, &v2(r, c), &rule);
    let h = 1e-3;
    let (mut worst_fit, mut max_det) = (0.0f64, f64::NEG_INFINITY);
    for (r, c) in grid() {
        let f0 = f(r, c)?;
        let hrr = (f(r + h, c)? - 2.0 * f0 + f(r - h, c)?) / (h * h);
        let hcc = (f(r, c + h)? - 2.0 * f0 + f(r, c - h)?) / (h * h);
        let hrc = (f(r + h, c + h)? - f(r + h, c - h)? - f(r - h, c + h)? + f(r - h, c - h)?) / (4.0 * h * h);
        let (a, b) = (2.0 * r - 1.0, 2.0 * c - 1.0);
        worst_fit = worst_fit.max((hrr - a).abs()).max((hcc - b).abs()).max((hrc - 1.0).abs());
        max_det = max_det.max(a * b - 1.0);
    }
    Ok((
        worst_fit <= 1e-5 && max_det <= 0.0,
        format!("finite-difference fit {worst_fit:.1e}, max det = {max_det:.3}"),
    ))
}

fn saddle_monotonicity(opts: &VerifyOptions) -> CheckResult {
    let name = "saddle monotonicity (sampled)";
    match check_monotone(&MonotoneMap::SaddleGame, &ConvexDomain::unit_box(2), 500, 1e-12, opts.seed) {
        Ok(rep) => CheckResult {
            name,
            status: Status::Info,
            detail: format!(
                "{:?}: min pairwise ⟨F(x)−F(y), x−y⟩ = {:.3e}; the Jacobian is not symmetric, so eigenvalues ≥ 0 do not imply monotonicity",
                rep.verdict, rep.min_pairwise_inner
            ),
        },
        Err(e) => CheckResult { name, status: Status::Fail, detail: format!("error: {e}") },
    }
}

fn random_psd_affine(r: &mut rng::Rng, n: usize) -> Result<MonotoneMap> {
    let m = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let k = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let a = m.transpose() * &m + (&k - k.transpose()) * 0.5;
    MonotoneMap::affine_psd(a, Vector::from_fn(n, |_, _| r.random_range(-1.0..1.0)))
}

/// `½[xᵀAᵀx + xᵀ(A − Aᵀ)o − oᵀAᵀo] + bᵀ(x − o)`.
fn affine_loss(a: &Matrix, b: &Vector, o: &Vector, x: &Vector) -> f64 {
    let at = a.transpose();
    0.5 * (x.dot(&(&at * x)) + x.dot(&((a - &at) * o)) - o.dot(&(&at * o))) + b.dot(&(x - o))
}

fn affine_closed_form(opts: &VerifyOptions) -> Result<(bool, String)> {
    let rule = QuadratureRule::gauss_legendre(opts.quad_nodes)?;
    let mut r = rng::stream(opts.seed, rng::STREAM_CHECKS);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 1 + i % 10;
        let map = random_psd_affine(&mut r, n)?;
        let (a, b) = map.affine_parts().expect("affine");
        let box_ = ConvexDomain::new_box(Vector::from_element(n, -2.0), Vector::from_element(n, 2.0))?;
        let (o, x) = (box_.sample(&mut r), box_.sample(&mut r));
        let q = omo_loss(&LossSpec::new(&map, o.clone(), 0.0), &x, &rule)?;
        worst = worst.max((q - affine_loss(a, b, &o, &x)).abs());
    }
    Ok((worst <= 1e-8, format!("50 instances, max error {worst:.1e}")))
}

fn affine_convexity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut r = rng::stream(opts.seed.wrapping_add(1), rng::STREAM_CHECKS);
    let mut maps = Vec::with_capacity(51);
    for i in 0..50 {
        maps.push(random_psd_affine(&mut r, 1 + i % 10)?);
    }
    if opts.inject_negative_eig {
        let a = Matrix::from_diagonal(&Vector::from_row_slice(&[-1.0, 1.0]));
        maps.push(MonotoneMap::affine_unchecked(a, Vector::zeros(2))?);
    }
    let mut min = f64::INFINITY;
    for m in &maps {
        let (a, _) = m.affine_parts().expect("affine");
        let sym = (a + a.transpose()) * 0.5;
        min = min.min(nalgebra::SymmetricEigen::new(sym).eigenvalues.min());
    }
    Ok((min >= -1e-10, format!("{} instances, min eigenvalue of ½(A+Aᵀ) = {min:.3e}", maps.len())))
}

fn monotone_families(seed: u64) -> Result<Vec<(MonotoneMap, ConvexDomain)>> {
    let mut r = rng::stream(seed, rng::STREAM_CHECKS);
    let m = Matrix::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
    let quad = MonotoneMap::quadratic_gradient(m.transpose() * &m, Vector::from_fn(3, |_, _| r.random_range(-1.0..1.0)))?;
    let affine = random_psd_affine(&mut r, 4)?;
    let net = gen_network(&NetworkSpec::new(NetworkFamily::SupplyChain, seed))?;
    Ok(vec![
        (quad, ConvexDomain::ball(Vector::zeros(3), 2.0)?),
        (affine, ConvexDomain::unit_box(4)),
        (MonotoneMap::Rotation2D, ConvexDomain::ball(Vector::zeros(2), 1.0)?),
        (net, ConvexDomain::unit_box(6)),
    ])
}

fn sandwich(opts: &VerifyOptions) -> Result<(bool, String)> {
    let rule = QuadratureRule::default();
    let mut r = rng::stream(opts.seed, rng::STREAM_CHECKS);
    let mut violations = 0usize;
    let mut total = 0usize;
    for (map, domain) in monotone_families(opts.seed)? {
        for _ in 0..1000 {
            let (a, b) = (domain.sample(&mut r), domain.sample(&mut r));
            let est = line_integral_estimate(&map, &a, &b, &rule)?;
            let (lo, hi) = sandwich_bounds(&map, &a, &b)?;
            if est.value < lo - est.eps || est.value > hi + est.eps {
                violations += 1;
            }
            total += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in {total} pairs over 4 families")))
}

fn stokes(opts: &VerifyOptions) -> Result<(bool, String)> {
    let rule = QuadratureRule::default();
    let ball = ConvexDomain::ball(Vector::zeros(2), 1.0)?;
    let constants = MonotoneMap::Rotation2D.curl_constants(&ball);
    let mut r = rng::stream(opts.seed, rng::STREAM_CHECKS);
    let (mut violations, mut tightest) = (0usize, f64::INFINITY);
    for _ in 0..200 {
        let (o, u, x) = (ball.sample(&mut r), ball.sample(&mut r), ball.sample(&mut r));
        let lp = triangle_loop(&MonotoneMap::Rotation2D, &o, &u, &x, &rule)?.abs();
        let bound = triangle_discrepancy_bound(&constants, &o, &u, &x)?;
        if lp > bound + 1e-12 {
            violations += 1;
        }
        if lp > 0.0 {
            tightest = tightest.min(bound / lp);
        }
    }
    Ok((
        violations == 0 && tightest <= 10.0,
        format!("{violations} violations in 200 triangles, tightest bound/|loop| = {tightest:.2}"),
    ))
}

fn gradient_reduction(opts: &VerifyOptions) -> Result<(bool, String)> {
    let rule = QuadratureRule::default();
    let mut r = rng::stream(opts.seed, rng::STREAM_CHECKS);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = Matrix::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
        let q = m.transpose() * &m;
        let c = Vector::from_fn(3, |_, _| r.random_range(-1.0..1.0));
        let f = |x: &Vector| 0.5 * x.dot(&(&q * x)) + c.dot(x);
        let map = MonotoneMap::quadratic_gradient(q.clone(), c.clone())?;
        let (o, x) = (Vector::from_fn(3, |_, _| r.random_range(-1.0..1.0)), Vector::from_fn(3, |_, _| r.random_range(-1.0..1.0)));
        let loss = omo_loss(&LossSpec::new(&map, o.clone(), f(&o)), &x, &rule)?;
        worst = worst.max((loss - f(&x)).abs());
        worst = worst.max((line_integral(&map, &o, &x, &rule)? - (f(&x) - f(&o))).abs());
    }
    Ok((worst <= 1e-9, format!("max |loss − f(x)| = {worst:.1e} over 100 quadratics")))
}

fn learner_equivalence(opts: &VerifyOptions) -> Result<(bool, String)> {
    let domain = ConvexDomain::ball(Vector::zeros(3), 1e6)?;
    let eta = 0.01;
    let reg = Regularizer::euclidean(eta)?;
    let mut a = LearnerState::omod_init(&domain, eta)?;
    let mut b = LearnerState::omomd_init(&domain, &reg)?;
    let mut r = rng::stream(opts.seed, rng::STREAM_CHECKS);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = Vector::from_fn(3, |_, _| r.random_range(-1.0..1.0));
        a = a.omod_step(&z, &domain)?;
        b = b.omomd_step(&z, &reg, &domain)?;
        worst = worst.max((&a.primal - &b.primal).amax());
    }
    Ok((worst <= 1e-12, format!("max iterate gap over 1000 steps = {worst:.1e}")))
}
