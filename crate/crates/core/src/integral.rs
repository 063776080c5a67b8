//! Straight-line path integrals and the bounds built on them.
//!
//! The loss of a play `x` against a map `F` with reference `(o, f_o)` is
//! `f_o + ∫₀¹ ⟨F(o + τ(x − o)), x − o⟩ dτ`. For gradient fields this is the
//! potential difference; for rotational fields it depends on the path, and
//! the loop integral around a triangle measures by how much.

use crate::maps::{CurlConstants, VectorField};
use crate::{check_dim, Error, Result, Vector};

/// Declared quadrature tolerance when the rule integrates the integrand exactly.
pub const EXACT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    GaussLegendre,
    CompositeTrapezoid,
}

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss_legendre(16).expect("16 nodes is valid")
    }
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidArgument(format!("quadrature needs at least 2 nodes, got {nodes}")));
        }
        let (points, weights) = match kind {
            QuadratureKind::GaussLegendre => gauss_legendre_unit(nodes),
            QuadratureKind::CompositeTrapezoid => {
                let h = 1.0 / (nodes - 1) as f64;
                let points = (0..nodes).map(|i| i as f64 * h).collect();
                let weights = (0..nodes)
                    .map(|i| if i == 0 || i == nodes - 1 { 0.5 * h } else { h })
                    .collect();
                (points, weights)
            }
        };
        Ok(QuadratureRule { kind, points, weights })
    }

    pub fn gauss_legendre(nodes: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussLegendre, nodes)
    }

    pub fn trapezoid(nodes: usize) -> Result<Self> {
        Self::new(QuadratureKind::CompositeTrapezoid, nodes)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn nodes(&self) -> usize {
        self.points.len()
    }

    /// Nodes on `[0, 1]`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Weights on `[0, 1]`; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫₀¹ φ(τ) dτ`.
    pub fn integrate(&self, mut phi: impl FnMut(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&t, &w)| w * phi(t)).sum()
    }

    /// Whether polynomials of this degree are integrated exactly.
    pub fn is_exact_for(&self, degree: usize) -> bool {
        match self.kind {
            QuadratureKind::GaussLegendre => degree < 2 * self.nodes(),
            QuadratureKind::CompositeTrapezoid => degree <= 1,
        }
    }

    fn doubled(&self) -> Self {
        let nodes = match self.kind {
            QuadratureKind::GaussLegendre => 2 * self.nodes(),
            QuadratureKind::CompositeTrapezoid => 2 * self.nodes() - 1,
        };
        Self::new(self.kind, nodes).expect("doubling keeps nodes ≥ 2")
    }
}

/// Gauss–Legendre nodes and weights mapped from `[−1, 1]` to `[0, 1]`,
/// by Newton iteration on the three-term Legendre recurrence.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; mirror it to keep the rule symmetric.
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    (points, weights)
}

/// A value together with its quadrature error estimate `ε_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub eps: f64,
}

/// `∫₀¹ ⟨F(a + τ(b − a)), b − a⟩ dτ`.
pub fn line_integral<F: VectorField + ?Sized>(map: &F, a: &Vector, b: &Vector, rule: &QuadratureRule) -> Result<f64> {
    check_dim(map.dim(), a.len())?;
    check_dim(map.dim(), b.len())?;
    Ok(segment(map, a, b, rule))
}

fn segment<F: VectorField + ?Sized>(map: &F, a: &Vector, b: &Vector, rule: &QuadratureRule) -> f64 {
    let d = b - a;
    rule.integrate(|t| map.apply(&(a + &d * t)).dot(&d))
}

/// [`line_integral`] plus `ε_q`: [`EXACT_EPS`] when the rule is exact for the
/// map's polynomial degree, otherwise the node-doubling difference.
pub fn line_integral_estimate<F: VectorField + ?Sized>(
    map: &F,
    a: &Vector,
    b: &Vector,
    rule: &QuadratureRule,
) -> Result<Estimate> {
    let value = line_integral(map, a, b, rule)?;
    Ok(Estimate { value, eps: quadrature_eps(map, a, b, rule, value) })
}

fn quadrature_eps<F: VectorField + ?Sized>(map: &F, a: &Vector, b: &Vector, rule: &QuadratureRule, value: f64) -> f64 {
    match map.polynomial_degree() {
        Some(p) if rule.is_exact_for(p) => EXACT_EPS,
        _ => (segment(map, a, b, &rule.doubled()) - value).abs(),
    }
}

/// Reference vector and scalar that turn a map into a loss.
#[derive(Debug, Clone)]
pub struct LossSpec<'a, F: ?Sized> {
    pub map: &'a F,
    pub o: Vector,
    pub f_o: f64,
}

impl<'a, F: VectorField + ?Sized> LossSpec<'a, F> {
    pub fn new(map: &'a F, o: Vector, f_o: f64) -> Self {
        LossSpec { map, o, f_o }
    }
}

/// `f_o + ∫_{o→x} ⟨F, dx⟩`.
pub fn omo_loss<F: VectorField + ?Sized>(spec: &LossSpec<'_, F>, x: &Vector, rule: &QuadratureRule) -> Result<f64> {
    Ok(spec.f_o + line_integral(spec.map, &spec.o, x, rule)?)
}

/// `(⟨F(a), b − a⟩, ⟨F(b), b − a⟩)`, which bracket the line integral from `a`
/// to `b` whenever `F` is monotone along the segment.
pub fn sandwich_bounds<F: VectorField + ?Sized>(map: &F, a: &Vector, b: &Vector) -> Result<(f64, f64)> {
    check_dim(map.dim(), a.len())?;
    check_dim(map.dim(), b.len())?;
    let d = b - a;
    Ok((map.apply(a).dot(&d), map.apply(b).dot(&d)))
}

/// Sum of straight-line integrals over consecutive waypoints.
pub fn polyline_integral<F: VectorField + ?Sized>(
    map: &F,
    waypoints: &[Vector],
    rule: &QuadratureRule,
) -> Result<f64> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "polyline needs at least 2 waypoints, got {}",
            waypoints.len()
        )));
    }
    for w in waypoints {
        check_dim(map.dim(), w.len())?;
    }
    Ok(waypoints.windows(2).map(|w| segment(map, &w[0], &w[1], rule)).sum())
}

/// Loop integral `a → b → c → a`.
pub fn triangle_loop<F: VectorField + ?Sized>(
    map: &F,
    a: &Vector,
    b: &Vector,
    c: &Vector,
    rule: &QuadratureRule,
) -> Result<f64> {
    polyline_integral(map, &[a.clone(), b.clone(), c.clone(), a.clone()], rule)
}

/// `3·√(½(β² + Lγ))·d_uo·d_xu`: bound on the gap between standard and
/// path-integral regret for one round, from the curl of `F` over the
/// triangle `(o, u, x)`.
pub fn curl_discrepancy_bound(beta: f64, lipschitz: f64, gamma: f64, d_uo: f64, d_xu: f64) -> Result<f64> {
    for (name, value) in [("beta", beta), ("L", lipschitz), ("gamma", gamma), ("d_uo", d_uo), ("d_xu", d_xu)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be finite and ≥ 0, got {value}")));
        }
    }
    Ok(3.0 * (0.5 * (beta * beta + lipschitz * gamma)).sqrt() * d_uo * d_xu)
}

/// [`curl_discrepancy_bound`] for a concrete triangle.
///
/// The bound is stated for three-dimensional fields. A triangle in higher
/// dimension lies in a 3-D subspace; the distances are rotation invariant and
/// the constants of the restricted field are dominated by those of the full
/// one, so the same formula applies.
pub fn triangle_discrepancy_bound(constants: &CurlConstants, o: &Vector, u: &Vector, x: &Vector) -> Result<f64> {
    check_dim(o.len(), u.len())?;
    check_dim(o.len(), x.len())?;
    curl_discrepancy_bound(
        constants.beta,
        constants.lipschitz,
        constants.gamma,
        (u - o).norm(),
        (x - u).norm(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use crate::maps::{FnField, MonotoneMap};
    use crate::{rng, Matrix};
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn gauss_legendre_weights_and_moments() {
        for n in [2, 3, 5, 8, 16, 33] {
            let rule = QuadratureRule::gauss_legendre(n).unwrap();
            // weights sum to 2 on [−1, 1], i.e. 1 on [0, 1]
            let sum: f64 = rule.weights().iter().sum();
            assert!((2.0 * sum - 2.0).abs() < 1e-14, "n={n}: {sum}");
            // exact for monomials up to degree 2n − 1
            for k in 0..2 * n {
                let got = rule.integrate(|t| t.powi(k as i32));
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn rules_need_two_nodes() {
        assert!(QuadratureRule::gauss_legendre(1).is_err());
        assert!(QuadratureRule::trapezoid(0).is_err());
    }

    #[test]
    fn saddle_line_integral_matches_closed_form() {
        let rule = QuadratureRule::gauss_legendre(5).unwrap();
        let got = line_integral(&MonotoneMap::SaddleGame, &v(&[1.0, 1.0]), &v(&[0.0, 0.0]), &rule).unwrap();
        assert!((got + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_length_path() {
        let rule = QuadratureRule::default();
        let p = v(&[0.3, 0.9]);
        assert_eq!(line_integral(&MonotoneMap::SaddleGame, &p, &p, &rule).unwrap(), 0.0);
        assert_eq!(sandwich_bounds(&MonotoneMap::SaddleGame, &p, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn identity_map_in_one_dimension() {
        let id = MonotoneMap::affine_psd(Matrix::identity(1, 1), v(&[0.0])).unwrap();
        let rule = QuadratureRule::default();
        // ∫₀¹ (2τ)·2 dτ = 2
        assert!((line_integral(&id, &v(&[0.0]), &v(&[2.0]), &rule).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(sandwich_bounds(&id, &v(&[0.0]), &v(&[2.0])).unwrap(), (0.0, 4.0));
    }

    #[test]
    fn saddle_sandwich_example() {
        let (lo, hi) = sandwich_bounds(&MonotoneMap::SaddleGame, &v(&[1.0, 1.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!((lo, hi), (-2.0, 0.0));
        assert!(lo <= -2.0 / 3.0 && -2.0 / 3.0 <= hi);
    }

    #[test]
    fn omo_loss_examples() {
        let rule = QuadratureRule::default();
        let saddle = LossSpec::new(&MonotoneMap::SaddleGame, v(&[1.0, 1.0]), 0.0);
        assert_eq!(omo_loss(&saddle, &v(&[1.0, 1.0]), &rule).unwrap(), 0.0);
        assert!((omo_loss(&saddle, &v(&[0.0, 0.0]), &rule).unwrap() + 2.0 / 3.0).abs() < 1e-15);

        let quad = MonotoneMap::quadratic_gradient(Matrix::identity(2, 2) * 2.0, v(&[0.0, 0.0])).unwrap();
        let spec = LossSpec::new(&quad, v(&[0.0, 0.0]), 0.0);
        assert!((omo_loss(&spec, &v(&[1.0, 1.0]), &rule).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_loops_follow_greens_theorem() {
        let rule = QuadratureRule::default();
        let (o, e1, e2) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let ccw = triangle_loop(&MonotoneMap::Rotation2D, &o, &e1, &e2, &rule).unwrap();
        let cw = triangle_loop(&MonotoneMap::Rotation2D, &o, &e2, &e1, &rule).unwrap();
        // curl 2 × area ½
        assert!((ccw - 1.0).abs() < 1e-14);
        assert!((cw + 1.0).abs() < 1e-14);
        let poly = polyline_integral(&MonotoneMap::Rotation2D, &[o.clone(), e1, e2, o], &rule).unwrap();
        assert_eq!(poly, ccw);
    }

    #[test]
    fn saddle_loop_value() {
        // ∬ (∂F₂/∂r − ∂F₁/∂c) = ∬ 3(r − c) over {0 ≤ c ≤ r ≤ 1} = 1/2
        let rule = QuadratureRule::default();
        let got = triangle_loop(
            &MonotoneMap::SaddleGame,
            &v(&[0.0, 0.0]),
            &v(&[1.0, 0.0]),
            &v(&[1.0, 1.0]),
            &rule,
        )
        .unwrap();
        assert!((got - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_and_conservative_loops_vanish() {
        let rule = QuadratureRule::default();
        let collinear = triangle_loop(
            &MonotoneMap::Rotation2D,
            &v(&[0.0, 0.0]),
            &v(&[0.5, 0.5]),
            &v(&[1.0, 1.0]),
            &rule,
        )
        .unwrap();
        assert!(collinear.abs() < 1e-14);
        let quad = MonotoneMap::quadratic_gradient(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]), v(&[1.0, -1.0]))
            .unwrap();
        let l = triangle_loop(&quad, &v(&[0.1, 0.2]), &v(&[0.9, -0.4]), &v(&[-0.3, 0.7]), &rule).unwrap();
        assert!(l.abs() < 1e-13);
    }

    #[test]
    fn polyline_requires_two_points() {
        let rule = QuadratureRule::default();
        assert!(polyline_integral(&MonotoneMap::Rotation2D, &[v(&[0.0, 0.0])], &rule).is_err());
    }

    #[test]
    fn curl_bound_examples() {
        assert!((curl_discrepancy_bound(1.0, 1.0, 1.0, 1.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(curl_discrepancy_bound(0.0, 5.0, 0.0, 2.0, 3.0).unwrap(), 0.0);
        let b = curl_discrepancy_bound(1.0, 0.0, 7.0, 1.0, 1.0).unwrap();
        assert!((b - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(curl_discrepancy_bound(-1.0, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimates_report_exactness_or_doubling_gap() {
        let rule = QuadratureRule::default();
        let e = line_integral_estimate(&MonotoneMap::SaddleGame, &v(&[0.0, 0.0]), &v(&[1.0, 0.5]), &rule).unwrap();
        assert_eq!(e.eps, EXACT_EPS);
        let smooth = FnField::new(1, |x: &Vector| x.map(f64::sin));
        let e = line_integral_estimate(&smooth, &v(&[0.0]), &v(&[2.0]), &rule).unwrap();
        assert!((e.value - (1.0 - 2f64.cos())).abs() < 1e-14);
        assert!(e.eps < 1e-13);
        let trap = QuadratureRule::trapezoid(9).unwrap();
        let e = line_integral_estimate(&MonotoneMap::SaddleGame, &v(&[0.0, 0.0]), &v(&[1.0, 0.5]), &trap).unwrap();
        assert!(e.eps > 0.0 && e.eps < 1e-1);
    }

    #[test]
    fn trapezoid_cross_checks_gauss_legendre() {
        let gl = QuadratureRule::default();
        let trap = QuadratureRule::trapezoid(4001).unwrap();
        let (a, b) = (v(&[0.9, 0.1]), v(&[0.2, 0.7]));
        let x = line_integral(&MonotoneMap::SaddleGame, &a, &b, &gl).unwrap();
        let y = line_integral(&MonotoneMap::SaddleGame, &a, &b, &trap).unwrap();
        assert!((x - y).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn additivity_and_reversal(seed in any::<u64>()) {
            let rule = QuadratureRule::default();
            let d = ConvexDomain::unit_box(2);
            let mut r = rng::stream(seed, 11);
            let (a, b, c) = (d.sample(&mut r), d.sample(&mut r), d.sample(&mut r));
            for map in [MonotoneMap::SaddleGame, MonotoneMap::Rotation2D] {
                let ab = line_integral(&map, &a, &b, &rule).unwrap();
                let bc = line_integral(&map, &b, &c, &rule).unwrap();
                let poly = polyline_integral(&map, &[a.clone(), b.clone(), c.clone()], &rule).unwrap();
                prop_assert_eq!(ab + bc, poly);
                let ba = line_integral(&map, &b, &a, &rule).unwrap();
                prop_assert!((ab + ba).abs() < 1e-12);
            }
        }
    }
}
