//! Ensemble Langevin simulation of a driven, dissipative two-level system in
//! canonical population/phase variables, with closed-form thermodynamic
//! references and power-spectrum analysis of the driven response.

pub mod analytic;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod persist;
pub mod quadrature;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{BlochVector, SystemParams, TlsState};
