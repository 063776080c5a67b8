//! Monotone maps and their numerical property checks.
//!
//! Every algorithm in the crate only needs single-valued evaluation
//! `x ↦ F(x)`, captured by [`VectorField`]. [`MonotoneMap`] holds the concrete
//! families used throughout: gradients of convex quadratics, PSD-affine maps,
//! the two-player cubic game, the planar rotation and the affine network games.

use nalgebra::SymmetricEigen;

use crate::domain::ConvexDomain;
use crate::integral::{triangle_loop, QuadratureRule};
use crate::networks::NetworkFamily;
use crate::{check_dim, check_finite, rng, Error, Matrix, Result, Vector};

/// Symmetric-part eigenvalues below this are treated as a monotonicity violation
/// when constructing affine maps.
pub const PSD_TOL: f64 = 1e-10;

/// Default central finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A single-valued field `F: ℝⁿ → ℝⁿ`.
pub trait VectorField {
    fn dim(&self) -> usize;

    /// Evaluate without dimension checks.
    fn apply(&self, x: &Vector) -> Vector;

    /// Total polynomial degree of `F` in `x`, if `F` is a polynomial.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }

    /// Global Lipschitz constant, when known without sampling.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

/// Wraps a closure as a [`VectorField`].
pub struct FnField<G> {
    dim: usize,
    f: G,
    degree: Option<usize>,
}

impl<G: Fn(&Vector) -> Vector> FnField<G> {
    pub fn new(dim: usize, f: G) -> Self {
        FnField { dim, f, degree: None }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = Some(degree);
        self
    }
}

impl<G: Fn(&Vector) -> Vector> VectorField for FnField<G> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }

    fn polynomial_degree(&self) -> Option<usize> {
        self.degree
    }
}

/// Provenance of a generated network game.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMeta {
    pub family: NetworkFamily,
    pub n_firms: usize,
    pub controls_per_firm: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneMap {
    /// `F(x) = Qx + c`, the gradient of `½xᵀQx + cᵀx` with `Q` symmetric PSD.
    QuadraticGradient { q: Matrix, c: Vector },
    /// `F(x) = Ax + b` with `½(A + Aᵀ) ⪰ 0`.
    AffinePsd { a: Matrix, b: Vector },
    /// Concatenated gradients of the cubic two-player game on `[0,1]²`:
    /// both components equal `r² − rc + c²`.
    SaddleGame,
    /// `F(x, y) = (−y, x)`.
    Rotation2D,
    /// Affine concatenated-gradient game `F(x) = Ax + b`, `A = S + K`.
    NetworkGame { a: Matrix, b: Vector, meta: NetworkMeta },
}

fn sym_min_eig(a: &Matrix) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

fn check_affine(a: &Matrix, b: &Vector) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidMap(format!("matrix must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    check_dim(a.nrows(), b.len())?;
    if a.nrows() == 0 {
        return Err(Error::InvalidMap("dimension must be ≥ 1".into()));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("map coefficients".into()));
    }
    Ok(())
}

fn check_psd(a: &Matrix) -> Result<()> {
    let min = sym_min_eig(a);
    if min < -PSD_TOL {
        return Err(Error::InvalidMap(format!(
            "symmetric part has eigenvalue {min:e} < 0; map is not monotone"
        )));
    }
    Ok(())
}

impl MonotoneMap {
    pub fn quadratic_gradient(q: Matrix, c: Vector) -> Result<Self> {
        check_affine(&q, &c)?;
        if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidMap("quadratic form must be symmetric".into()));
        }
        check_psd(&q)?;
        Ok(MonotoneMap::QuadraticGradient { q, c })
    }

    pub fn affine_psd(a: Matrix, b: Vector) -> Result<Self> {
        check_affine(&a, &b)?;
        check_psd(&a)?;
        Ok(MonotoneMap::AffinePsd { a, b })
    }

    /// Affine map without the monotonicity check, for exercising the
    /// verifiers on deliberately invalid input.
    pub fn affine_unchecked(a: Matrix, b: Vector) -> Result<Self> {
        check_affine(&a, &b)?;
        Ok(MonotoneMap::AffinePsd { a, b })
    }

    /// Constant map `F(x) = b`.
    pub fn constant(b: Vector) -> Self {
        let n = b.len();
        MonotoneMap::AffinePsd { a: Matrix::zeros(n, n), b }
    }

    pub fn network(a: Matrix, b: Vector, meta: NetworkMeta) -> Result<Self> {
        check_affine(&a, &b)?;
        check_psd(&a)?;
        Ok(MonotoneMap::NetworkGame { a, b, meta })
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneMap::QuadraticGradient { c, .. } => c.len(),
            MonotoneMap::AffinePsd { b, .. } | MonotoneMap::NetworkGame { b, .. } => b.len(),
            MonotoneMap::SaddleGame | MonotoneMap::Rotation2D => 2,
        }
    }

    /// Short family name, as used on the command line.
    pub fn family_name(&self) -> &'static str {
        match self {
            MonotoneMap::QuadraticGradient { .. } => "quadratic",
            MonotoneMap::AffinePsd { .. } => "affine",
            MonotoneMap::SaddleGame => "saddle",
            MonotoneMap::Rotation2D => "rotation2d",
            MonotoneMap::NetworkGame { .. } => "network",
        }
    }

    /// `(A, b)` for the affine families.
    pub fn affine_parts(&self) -> Option<(&Matrix, &Vector)> {
        match self {
            MonotoneMap::QuadraticGradient { q, c } => Some((q, c)),
            MonotoneMap::AffinePsd { a, b } | MonotoneMap::NetworkGame { a, b, .. } => Some((a, b)),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        check_finite(x, "evaluation point")?;
        Ok(self.apply(x))
    }

    /// Analytic Jacobian. Every built-in family has a closed form.
    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            MonotoneMap::QuadraticGradient { q: a, .. }
            | MonotoneMap::AffinePsd { a, .. }
            | MonotoneMap::NetworkGame { a, .. } => a.clone(),
            MonotoneMap::SaddleGame => {
                let (r, c) = (x[0], x[1]);
                let (da, db) = (2.0 * r - c, 2.0 * c - r);
                Matrix::from_row_slice(2, 2, &[da, db, da, db])
            }
            MonotoneMap::Rotation2D => Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        })
    }

    /// True when the family is a gradient field (zero loop integrals).
    pub fn is_conservative(&self) -> bool {
        match self {
            MonotoneMap::QuadraticGradient { .. } => true,
            MonotoneMap::AffinePsd { a, .. } | MonotoneMap::NetworkGame { a, .. } => {
                (a - a.transpose()).amax() <= 1e-12 * a.amax().max(1.0)
            }
            MonotoneMap::SaddleGame | MonotoneMap::Rotation2D => false,
        }
    }

    /// True for families whose monotonicity holds by construction.
    ///
    /// The cubic game is not in this set: its Jacobian has nonnegative
    /// eigenvalues but an indefinite symmetric part, and sampled pairs violate
    /// `⟨F(x) − F(x'), x − x'⟩ ≥ 0`.
    pub fn is_certified_monotone(&self) -> bool {
        match self {
            MonotoneMap::QuadraticGradient { .. } | MonotoneMap::Rotation2D => true,
            MonotoneMap::AffinePsd { a, .. } | MonotoneMap::NetworkGame { a, .. } => sym_min_eig(a) >= -PSD_TOL,
            MonotoneMap::SaddleGame => false,
        }
    }

    /// Global Lipschitz constant when one is known in closed form.
    pub fn lipschitz_hint(&self) -> Option<f64> {
        match self {
            MonotoneMap::Rotation2D => Some(1.0),
            MonotoneMap::SaddleGame => None,
            _ => self.affine_parts().map(|(a, _)| spectral_norm(a)),
        }
    }

    /// Bounds feeding the curl discrepancy bound over `domain`: `beta` bounds
    /// the Jacobian spectral norm, `lipschitz` bounds `‖F‖` and `gamma` bounds
    /// the second-derivative matrix `[∂²Fᵢ/∂xⱼ²]` in the (2,1)-norm.
    pub fn curl_constants(&self, domain: &ConvexDomain) -> CurlConstants {
        let radius = domain.max_norm();
        match self {
            MonotoneMap::Rotation2D => CurlConstants { beta: 1.0, lipschitz: radius, gamma: 0.0 },
            MonotoneMap::SaddleGame => {
                // ‖J‖₂ = √2·√(a² + b²) with a² + b² = 5r² − 8rc + 5c² ≤ 9‖x‖².
                let beta = 3.0 * std::f64::consts::SQRT_2 * radius;
                // r² − rc + c² ≤ 1.5‖x‖²
                let lipschitz = std::f64::consts::SQRT_2 * 1.5 * radius * radius;
                // [∂²Fᵢ/∂xⱼ²] = [[2, 2], [2, 2]]
                let gamma = 2.0 * 8f64.sqrt();
                CurlConstants { beta, lipschitz, gamma }
            }
            _ => {
                let (a, b) = self.affine_parts().expect("affine family");
                let beta = spectral_norm(a);
                CurlConstants { beta, lipschitz: beta * radius + b.norm(), gamma: 0.0 }
            }
        }
    }

    /// Plain-text matrix format: `dim`, then the rows of `A`, then `b`, one
    /// line each with space-separated shortest round-trip decimals.
    pub fn to_matrix_text(&self) -> Result<String> {
        let (a, b) = self
            .affine_parts()
            .ok_or_else(|| Error::InvalidArgument(format!("{} map has no matrix form", self.family_name())))?;
        Ok(write_matrix_text(a, b))
    }
}

impl VectorField for MonotoneMap {
    fn dim(&self) -> usize {
        MonotoneMap::dim(self)
    }

    fn apply(&self, x: &Vector) -> Vector {
        match self {
            MonotoneMap::QuadraticGradient { q: a, c: b }
            | MonotoneMap::AffinePsd { a, b }
            | MonotoneMap::NetworkGame { a, b, .. } => a * x + b,
            MonotoneMap::SaddleGame => {
                let (r, c) = (x[0], x[1]);
                let g = r * r - r * c + c * c;
                Vector::from_row_slice(&[g, g])
            }
            MonotoneMap::Rotation2D => Vector::from_row_slice(&[-x[1], x[0]]),
        }
    }

    fn polynomial_degree(&self) -> Option<usize> {
        match self {
            MonotoneMap::SaddleGame => Some(2),
            _ => Some(1),
        }
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        MonotoneMap::lipschitz_hint(self)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &Vector) -> Vector {
        (**self).apply(x)
    }

    fn polynomial_degree(&self) -> Option<usize> {
        (**self).polynomial_degree()
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        (**self).lipschitz_hint()
    }
}

/// Pointwise mean of a nonempty list of fields of equal dimension.
pub struct MeanField<'a, F> {
    fields: &'a [F],
}

impl<'a, F: VectorField> MeanField<'a, F> {
    pub fn new(fields: &'a [F]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of an empty list of maps".into()))?;
        for f in fields {
            check_dim(first.dim(), f.dim())?;
        }
        Ok(MeanField { fields })
    }
}

impl<F: VectorField> VectorField for MeanField<'_, F> {
    fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn apply(&self, x: &Vector) -> Vector {
        let mut sum = Vector::zeros(self.dim());
        for f in self.fields {
            sum += f.apply(x);
        }
        sum / self.fields.len() as f64
    }

    fn polynomial_degree(&self) -> Option<usize> {
        self.fields.iter().map(|f| f.polynomial_degree()).try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        let sum = self.fields.iter().map(|f| f.lipschitz_hint()).sum::<Option<f64>>()?;
        Some(sum / self.fields.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurlConstants {
    pub beta: f64,
    pub lipschitz: f64,
    pub gamma: f64,
}

pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ata = a.transpose() * a;
    SymmetricEigen::new(ata).eigenvalues.max().max(0.0).sqrt()
}

/// Central finite-difference Jacobian with step `h`.
pub fn jacobian_fd<F: VectorField + ?Sized>(field: &F, x: &Vector, h: f64) -> Result<Matrix> {
    check_dim(field.dim(), x.len())?;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {h}")));
    }
    let n = x.len();
    let mut jac = Matrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (field.apply(&xp) - field.apply(&xm)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Monotone,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub sampled_pairs: usize,
    /// `min ⟨F(x) − F(x'), x − x'⟩` over the sampled pairs.
    pub min_pairwise_inner: f64,
    /// Smallest eigenvalue of `½(J + Jᵀ)` over the sampled points.
    pub min_jacobian_sym_eig: f64,
    pub verdict: Verdict,
}

/// Samples `n_samples` point pairs uniformly in `domain` and checks the
/// monotone inequality and the symmetric Jacobian at each point.
pub fn check_monotone(
    map: &MonotoneMap,
    domain: &ConvexDomain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<MonotonicityReport> {
    check_dim(map.dim(), domain.dim())?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("check_monotone needs at least 2 samples".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be ≥ 0, got {tol}")));
    }
    let mut rng = rng::stream(seed, rng::STREAM_CHECKS);
    let mut min_inner = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let inner = (map.apply(&x) - map.apply(&y)).dot(&(&x - &y));
        min_inner = min_inner.min(inner);
        for p in [&x, &y] {
            min_eig = min_eig.min(sym_min_eig(&map.jacobian(p)?));
        }
    }
    let verdict = if min_inner >= -tol && min_eig >= -tol {
        Verdict::Monotone
    } else {
        Verdict::Violated
    };
    Ok(MonotonicityReport {
        sampled_pairs: n_samples,
        min_pairwise_inner: min_inner,
        min_jacobian_sym_eig: min_eig,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Conservativity {
    /// No sampled loop exceeded the tolerance.
    ConservativeConsistent { loops: usize, max_abs_loop: f64 },
    NonConservative { witness: [Vector; 3], value: f64 },
}

/// Integrates `F` around random triangles with vertices in `domain` and
/// returns the first loop whose value exceeds `tol` in magnitude.
pub fn check_conservative<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    n_loops: usize,
    rule: &QuadratureRule,
    tol: f64,
    seed: u64,
) -> Result<Conservativity> {
    check_dim(map.dim(), domain.dim())?;
    let mut rng = rng::stream(seed, rng::STREAM_CHECKS);
    let mut max_abs = 0.0f64;
    for _ in 0..n_loops {
        let a = domain.sample(&mut rng);
        let b = domain.sample(&mut rng);
        let c = domain.sample(&mut rng);
        let value = triangle_loop(map, &a, &b, &c, rule)?;
        if value.abs() > tol {
            return Ok(Conservativity::NonConservative { witness: [a, b, c], value });
        }
        max_abs = max_abs.max(value.abs());
    }
    Ok(Conservativity::ConservativeConsistent { loops: n_loops, max_abs_loop: max_abs })
}

/// Largest sampled ratio `‖F(x') − F(x)‖ / ‖x' − x‖`; a lower bound on `L`.
pub fn estimate_lipschitz<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(map.dim(), domain.dim())?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("estimate_lipschitz needs at least 2 samples".into()));
    }
    let mut rng = rng::stream(seed, rng::STREAM_CHECKS);
    let mut best = 0.0f64;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let dx = (&x - &y).norm();
        if dx > 1e-12 {
            best = best.max((map.apply(&x) - map.apply(&y)).norm() / dx);
        }
    }
    Ok(best)
}

pub(crate) fn fmt_row<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    values.into_iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

pub(crate) fn write_matrix_text(a: &Matrix, b: &Vector) -> String {
    let mut out = format!("{}\n", b.len());
    for i in 0..a.nrows() {
        out.push_str(&fmt_row(a.row(i).iter()));
        out.push('\n');
    }
    out.push_str(&fmt_row(b.iter()));
    out.push('\n');
    out
}

pub(crate) fn parse_row(line: &str, line_no: usize, expected: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(expected);
    let mut column = 1;
    for token in line.split(' ') {
        if !token.is_empty() {
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                line: line_no,
                column,
                message: format!("invalid number `{token}`"),
            })?;
            out.push(value);
        }
        column += token.chars().count() + 1;
    }
    if out.len() != expected {
        return Err(Error::Parse {
            line: line_no,
            column: 1,
            message: format!("expected {expected} values, found {}", out.len()),
        });
    }
    Ok(out)
}

/// Reads one matrix block from numbered lines.
pub(crate) fn read_matrix_block<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(Matrix, Vector)> {
    let (line_no, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        column: 1,
        message: "unexpected end of input, expected dimension".into(),
    })?;
    let dim: usize = header.trim().parse().map_err(|_| Error::Parse {
        line: line_no,
        column: 1,
        message: format!("invalid dimension `{}`", header.trim()),
    })?;
    let mut a = Matrix::zeros(dim, dim);
    for i in 0..dim {
        let (n, line) = lines.next().ok_or_else(|| Error::Parse {
            line: line_no + i + 1,
            column: 1,
            message: "unexpected end of input in matrix rows".into(),
        })?;
        let row = parse_row(line, n, dim)?;
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let (n, line) = lines.next().ok_or_else(|| Error::Parse {
        line: line_no + dim + 1,
        column: 1,
        message: "unexpected end of input, expected offset vector".into(),
    })?;
    let b = Vector::from_vec(parse_row(line, n, dim)?);
    Ok((a, b))
}

/// Parses the plain-text matrix format back into `(A, b)`.
pub fn parse_matrix_text(text: &str) -> Result<(Matrix, Vector)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    read_matrix_block(&mut lines)
}
