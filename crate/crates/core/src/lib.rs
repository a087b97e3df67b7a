//! φ-divergences between members of a parametric model through their dual
//! representation, minimum dual divergence estimators computed from raw
//! samples, and numerical checks of the dual identities.

pub mod divergence;
pub mod dual;
pub mod estim;
pub mod models;
pub mod numerics;
pub mod verify;
