//! Convex feasible sets with closed-form Euclidean projections.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::{check_dim, check_finite, Error, Result, Vector};

/// A closed, nonempty convex set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    /// The probability simplex `{x ≥ 0, Σx = 1}`.
    Simplex { dim: usize },
}

// Relative slack under which a point counts as already feasible, so that
// projecting a projected point returns it bit for bit.
fn slack(n: usize) -> f64 {
    16.0 * f64::EPSILON * n.max(1) as f64
}

impl ConvexDomain {
    pub fn new_box(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidDomain("box must have dimension ≥ 1".into()));
        }
        check_finite(&lower, "box lower bound")?;
        check_finite(&upper, "box upper bound")?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidDomain("box lower bound exceeds upper bound".into()));
        }
        Ok(ConvexDomain::Box { lower, upper })
    }

    /// `[0, 1]^dim`.
    pub fn unit_box(dim: usize) -> Self {
        ConvexDomain::Box {
            lower: Vector::zeros(dim),
            upper: Vector::from_element(dim, 1.0),
        }
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidDomain("ball must have dimension ≥ 1".into()));
        }
        check_finite(&center, "ball center")?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidDomain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexDomain::Ball { center, radius })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("simplex must have dimension ≥ 1".into()));
        }
        Ok(ConvexDomain::Simplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Box { lower, .. } => lower.len(),
            ConvexDomain::Ball { center, .. } => center.len(),
            ConvexDomain::Simplex { dim } => *dim,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &Vector) -> Result<Vector> {
        check_dim(self.dim(), p.len())?;
        Ok(self.project_unchecked(p))
    }

    pub(crate) fn project_unchecked(&self, p: &Vector) -> Vector {
        match self {
            ConvexDomain::Box { lower, upper } => {
                Vector::from_iterator(p.len(), p.iter().zip(lower.iter().zip(upper.iter())).map(
                    |(&x, (&l, &u))| x.clamp(l, u),
                ))
            }
            ConvexDomain::Ball { center, radius } => {
                let d = p - center;
                let norm = d.norm();
                if norm <= radius * (1.0 + slack(1)) {
                    p.clone()
                } else {
                    center + d * (radius / norm)
                }
            }
            ConvexDomain::Simplex { dim } => project_simplex(p, *dim),
        }
    }

    /// Membership with slack `tol`: ∞-norm violation for boxes, distance
    /// outside the sphere for balls, and `Σ max(0, −xᵢ) + |Σx − 1|` for the
    /// simplex.
    pub fn contains(&self, p: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim(), p.len())?;
        if tol < 0.0 || tol.is_nan() {
            return Err(Error::InvalidArgument(format!("tolerance must be ≥ 0, got {tol}")));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Ok(false);
        }
        Ok(self.violation(p) <= tol)
    }

    fn violation(&self, p: &Vector) -> f64 {
        match self {
            ConvexDomain::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(&x, (&l, &u))| (l - x).max(x - u).max(0.0))
                .fold(0.0, f64::max),
            ConvexDomain::Ball { center, radius } => ((p - center).norm() - radius).max(0.0),
            ConvexDomain::Simplex { .. } => {
                let neg: f64 = p.iter().map(|&x| (-x).max(0.0)).sum();
                neg + (p.sum() - 1.0).abs()
            }
        }
    }

    /// `sup ‖x − x'‖₂` over the set.
    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Box { lower, upper } => (upper - lower).norm(),
            ConvexDomain::Ball { radius, .. } => 2.0 * radius,
            ConvexDomain::Simplex { dim } => {
                if *dim >= 2 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest Euclidean norm of a point in the set.
    pub fn max_norm(&self) -> f64 {
        match self {
            ConvexDomain::Box { lower, upper } => lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ConvexDomain::Ball { center, radius } => center.norm() + radius,
            ConvexDomain::Simplex { .. } => 1.0,
        }
    }

    /// Uniform sample from the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            ConvexDomain::Box { lower, upper } => Vector::from_iterator(
                lower.len(),
                lower
                    .iter()
                    .zip(upper.iter())
                    .map(|(&l, &u)| l + (u - l) * rng.random::<f64>()),
            ),
            ConvexDomain::Ball { center, radius } => {
                let n = center.len();
                let dir = loop {
                    let g = Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)));
                    let norm = g.norm();
                    if norm > 1e-12 {
                        break g / norm;
                    }
                };
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                center + dir * r
            }
            ConvexDomain::Simplex { dim } => {
                let e = Vector::from_iterator(*dim, (0..*dim).map(|_| Exp1.sample(rng)));
                let s = e.sum();
                e / s
            }
        }
    }
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(p: &Vector, dim: usize) -> Vector {
    let sum = p.sum();
    if p.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() <= slack(dim) {
        return p.clone();
    }
    let mut sorted: Vec<f64> = p.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    p.map(|x| (x - theta).max(0.0))
}
