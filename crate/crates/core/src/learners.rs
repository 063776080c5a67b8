//! Online monotone descent (OMoD) and online monotone mirror descent (OMoMD).
//!
//! Both learners see only `z_t = F_t(x_t)`.
//!
//! Step-size convention: the regularizer is `R = ψ/η` with `ψ` 1-strongly
//! convex, the dual accumulates unit steps `θ ← θ − z` and the link
//! `g(θ) = argmax ⟨x, θ⟩ − R(x)` applies `η`. For `ψ = ½‖·‖²` this gives
//! `x = Π(ηθ)`, so exactly one factor of `η` enters each iterate. On the
//! interior of the domain the primal sequence coincides with OMoD's
//! `x ← Π(x − ηz)`.

use crate::domain::ConvexDomain;
use crate::{check_dim, check_finite, Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    OMoD,
    OMoMD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// `ψ(x) = ½‖x‖₂²`
    EuclideanHalfSq,
    /// `ψ(x) = Σ xᵢ ln xᵢ`, simplex only.
    NegativeEntropy,
}

/// `R = ψ/η`, which is `1/η`-strongly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub eta: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("learning rate must be positive, got {eta}")))
    }
}

impl Regularizer {
    pub fn new(kind: RegularizerKind, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Regularizer { kind, eta })
    }

    pub fn euclidean(eta: f64) -> Result<Self> {
        Self::new(RegularizerKind::EuclideanHalfSq, eta)
    }

    pub fn entropy(eta: f64) -> Result<Self> {
        Self::new(RegularizerKind::NegativeEntropy, eta)
    }

    /// Strong-convexity modulus `1/η`.
    pub fn strength(&self) -> f64 {
        1.0 / self.eta
    }

    pub fn check_domain(&self, domain: &ConvexDomain) -> Result<()> {
        match (self.kind, domain) {
            (RegularizerKind::NegativeEntropy, ConvexDomain::Simplex { .. }) | (RegularizerKind::EuclideanHalfSq, _) => {
                Ok(())
            }
            (RegularizerKind::NegativeEntropy, _) => Err(Error::Incompatible(
                "negative entropy is only defined on the simplex".into(),
            )),
        }
    }

    /// `R(x)`.
    pub fn value(&self, x: &Vector) -> f64 {
        let psi = match self.kind {
            RegularizerKind::EuclideanHalfSq => 0.5 * x.norm_squared(),
            RegularizerKind::NegativeEntropy => x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum(),
        };
        psi / self.eta
    }

    /// `min_{v ∈ X} R(v)` in closed form.
    pub fn min_over(&self, domain: &ConvexDomain) -> Result<f64> {
        self.check_domain(domain)?;
        Ok(match self.kind {
            RegularizerKind::EuclideanHalfSq => {
                let v = domain.project_unchecked(&Vector::zeros(domain.dim()));
                self.value(&v)
            }
            RegularizerKind::NegativeEntropy => -(domain.dim() as f64).ln() / self.eta,
        })
    }
}

/// Link function `g(θ) = argmax_{x ∈ X} ⟨x, θ⟩ − R(x)`.
pub fn link(regularizer: &Regularizer, theta: &Vector, domain: &ConvexDomain) -> Result<Vector> {
    regularizer.check_domain(domain)?;
    check_dim(domain.dim(), theta.len())?;
    check_finite(theta, "dual point")?;
    let scaled = theta * regularizer.eta;
    Ok(match regularizer.kind {
        RegularizerKind::EuclideanHalfSq => domain.project_unchecked(&scaled),
        RegularizerKind::NegativeEntropy => {
            let max = scaled.max();
            let e = scaled.map(|s| (s - max).exp());
            let total = e.sum();
            e / total
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub algo: Algorithm,
    /// Current prediction `x_t`.
    pub primal: Vector,
    /// Accumulated dual point `θ_t` (OMoMD only).
    pub dual: Option<Vector>,
    pub eta: f64,
    pub step_count: usize,
}

impl LearnerState {
    /// OMoD starts at the feasible point closest to the origin.
    pub fn omod_init(domain: &ConvexDomain, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(LearnerState {
            algo: Algorithm::OMoD,
            primal: domain.project_unchecked(&Vector::zeros(domain.dim())),
            dual: None,
            eta,
            step_count: 0,
        })
    }

    /// OMoMD starts at `g(0)`.
    pub fn omomd_init(domain: &ConvexDomain, regularizer: &Regularizer) -> Result<Self> {
        let theta = Vector::zeros(domain.dim());
        Ok(LearnerState {
            algo: Algorithm::OMoMD,
            primal: link(regularizer, &theta, domain)?,
            dual: Some(theta),
            eta: regularizer.eta,
            step_count: 0,
        })
    }

    fn check_feedback(&self, z: &Vector, algo: Algorithm) -> Result<()> {
        if self.algo != algo {
            return Err(Error::InvalidArgument(format!("{:?} step applied to {:?} state", algo, self.algo)));
        }
        check_dim(self.primal.len(), z.len())?;
        check_finite(z, "feedback z_t")
    }

    /// `x ← Π(x − ηz)`.
    pub fn omod_step(&self, z: &Vector, domain: &ConvexDomain) -> Result<Self> {
        self.check_feedback(z, Algorithm::OMoD)?;
        check_dim(domain.dim(), z.len())?;
        Ok(LearnerState {
            primal: domain.project_unchecked(&(&self.primal - z * self.eta)),
            step_count: self.step_count + 1,
            ..self.clone()
        })
    }

    /// `θ ← θ − z`, `x ← g(θ)`.
    pub fn omomd_step(&self, z: &Vector, regularizer: &Regularizer, domain: &ConvexDomain) -> Result<Self> {
        self.check_feedback(z, Algorithm::OMoMD)?;
        let dual = self.dual.as_ref().expect("OMoMD state carries a dual point") - z;
        let primal = link(regularizer, &dual, domain)?;
        Ok(LearnerState {
            primal,
            dual: Some(dual),
            step_count: self.step_count + 1,
            ..self.clone()
        })
    }
}

/// A learner bound to its domain, for protocol loops.
#[derive(Debug, Clone)]
pub struct Learner {
    pub state: LearnerState,
    pub domain: ConvexDomain,
    pub regularizer: Regularizer,
}

impl Learner {
    pub fn new(algo: Algorithm, domain: ConvexDomain, regularizer: Regularizer) -> Result<Self> {
        regularizer.check_domain(&domain)?;
        let state = match algo {
            Algorithm::OMoD => {
                if regularizer.kind != RegularizerKind::EuclideanHalfSq {
                    return Err(Error::Incompatible("OMoD uses the Euclidean regularizer".into()));
                }
                LearnerState::omod_init(&domain, regularizer.eta)?
            }
            Algorithm::OMoMD => LearnerState::omomd_init(&domain, &regularizer)?,
        };
        Ok(Learner { state, domain, regularizer })
    }

    /// Replace the initial prediction. For OMoMD the dual point is set to
    /// `x/η`, which `g` maps back to `x` for interior points of the
    /// Euclidean link.
    pub fn start_at(&mut self, x: Vector) -> Result<()> {
        check_dim(self.domain.dim(), x.len())?;
        if !self.domain.contains(&x, 1e-9)? {
            return Err(Error::Infeasible("initial prediction outside the domain".into()));
        }
        if let Some(dual) = self.state.dual.as_mut() {
            *dual = match self.regularizer.kind {
                RegularizerKind::EuclideanHalfSq => &x / self.regularizer.eta,
                RegularizerKind::NegativeEntropy => x.map(|v| v.max(1e-300).ln()) / self.regularizer.eta,
            };
        }
        self.state.primal = x;
        Ok(())
    }

    pub fn predict(&self) -> &Vector {
        &self.state.primal
    }

    pub fn observe(&mut self, z: &Vector) -> Result<()> {
        self.state = match self.state.algo {
            Algorithm::OMoD => self.state.omod_step(z, &self.domain)?,
            Algorithm::OMoMD => self.state.omomd_step(z, &self.regularizer, &self.domain)?,
        };
        Ok(())
    }
}

/// Right-hand side `R(u) − min_X R + η Σ‖z_t‖²_*` of the FoReL regret bound.
/// The caller supplies the dual norms (`‖·‖₂` for the Euclidean regularizer,
/// `‖·‖_∞` for negative entropy).
pub fn regret_bound_thm2(
    regularizer: &Regularizer,
    u_t: &Vector,
    z_dual_norms: &[f64],
    domain: &ConvexDomain,
) -> Result<f64> {
    check_dim(domain.dim(), u_t.len())?;
    if !domain.contains(u_t, 1e-9)? {
        return Err(Error::Infeasible("comparator u_T lies outside the domain".into()));
    }
    let sum_sq: f64 = z_dual_norms.iter().map(|n| n * n).sum();
    Ok(regularizer.value(u_t) - regularizer.min_over(domain)? + regularizer.eta * sum_sq)
}

/// `B·L·√(2T)`, the projected online gradient descent regret bound on a ball
/// of radius `B` with feedback norms bounded by `L`.
pub fn ogd_theoretical_bound(b: f64, l: f64, t: usize) -> Result<f64> {
    if !(b > 0.0 && l > 0.0) || t == 0 {
        return Err(Error::InvalidArgument(format!("need B > 0, L > 0, T ≥ 1; got B={b}, L={l}, T={t}")));
    }
    Ok(b * l * (2.0 * t as f64).sqrt())
}

/// `η = B/(L√(2T))`, the rate that balances the two terms of the bound.
pub fn tuned_eta(b: f64, l: f64, t: usize) -> Result<f64> {
    ogd_theoretical_bound(b, l, t).map(|bound| b * b / bound)
}
