//! Two-level-system (TLS) defects coupled to a driven, damped
//! Josephson-junction resonator.
//!
//! The crate builds the full driven Jaynes-Cummings master equation, the two
//! effective TLS-only models (dispersive high-Q and strongly damped), gate
//! synthesis on top of them, and the readout observables. All numerics are
//! generic over the real scalar type ([`scalar::Real`]); the aliases at the
//! crate root fix it to `f64` (and `f32` where useful).
//!
//! Units: angular frequencies in rad/us, times in us.

pub mod algebra;
pub mod circuit;
pub mod effective;
pub mod error;
pub mod gates;
pub mod model;
pub mod readout;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type OperatorMatrix = algebra::Operator<f64>;
pub type DensityMatrix = algebra::Density<f64>;
pub type PureState = algebra::PureState<f64>;
pub type SystemModel = model::SystemModel<f64>;
pub type Schedule = model::Schedule<f64>;
pub type LindbladTerm = model::LindbladTerm<f64>;
pub type Liouvillian = solver::Liouvillian<f64>;
pub type Trajectory = solver::Trajectory<f64>;
pub type CircuitParams = circuit::CircuitParams<f64>;
pub type EffectiveDispersive = effective::EffectiveDispersive<f64>;
pub type EffectiveBadCavity = effective::EffectiveBadCavity<f64>;

pub type OperatorMatrixF32 = algebra::Operator<f32>;
pub type DensityMatrixF32 = algebra::Density<f32>;
pub type SystemModelF32 = model::SystemModel<f32>;
