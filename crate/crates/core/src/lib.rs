//! Online monotone optimization.
//!
//! Losses are straight-line path integrals of monotone maps,
//! `f_t(x) = f_o + ∫₀¹ ⟨F_t(o + τ(x − o)), x − o⟩ dτ`, which reduce to ordinary
//! convex losses when the map is a gradient field and remain well defined when
//! it is not (rotational fields, concatenated game gradients). On top of that
//! loss the crate provides:
//!
//! * convex feasible sets with exact projections ([`domain`]),
//! * the map families and numerical property checks ([`maps`]),
//! * quadrature, loop integrals and the curl discrepancy bound ([`integral`]),
//! * projected online descent and mirror descent learners ([`learners`]),
//! * path-integral and standard regret accounting ([`regret`]),
//! * an extragradient VI solver and the farthest-equilibrium adversary ([`equilibrium`]),
//! * seeded affine game generators ([`networks`]),
//! * the experiment runner and verification suite behind the `omo` binary
//!   ([`experiment`], [`verify`]).

pub mod config;
pub mod domain;
pub mod equilibrium;
mod error;
pub mod experiment;
pub mod integral;
pub mod learners;
pub mod maps;
pub mod networks;
pub mod plot;
pub mod regret;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

/// Dense column vector used for points, map values and dual iterates.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for Jacobians and affine map coefficients.
pub type Matrix = nalgebra::DMatrix<f64>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
