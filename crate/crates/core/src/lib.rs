//! Stealthy actuation-attack synthesis and backstepping-observer attack
//! detection for the reaction–diffusion equation on `[0, 1]` with Neumann
//! boundaries and a single boundary measurement `y(t) = u(1, t)`.

pub mod backstepping;
pub mod detector;
pub mod eigen;
pub mod error;
pub mod lmi;
pub mod quadrature;
pub mod scenario;
pub mod spectral;
pub mod stealth;

pub use error::{Error, Result};
