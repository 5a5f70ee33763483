//! Numerical verification of classical and moving-centre monotonicity
//! formulae for minimal submanifolds of the space forms `H^n`, `R^n`, `S^n`.

pub mod cli;
pub mod error;
pub mod fibration;
pub mod levelset;
pub mod profile;
pub mod quadrature;
pub mod spaceform;
pub mod surfaces;
pub mod verifier;
pub mod vector;

pub use error::{Error, Result};
pub use fibration::{AxisFrame, ProblemConfig, Regime};
pub use profile::AreaProfile;
pub use spaceform::{Curvature, Point, SpaceForm, TangentVector};
pub use vector::Vector;
