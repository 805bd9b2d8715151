//! Numerical engine for mutation–selection dynamics with nonlocal competition:
//! model validation, time integration, equilibria, relative-entropy
//! diagnostics and convergence analysis.

pub mod acceptance;
pub mod analysis;
pub mod dynamics;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod scenario;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use model::{build_model, HypothesisReport, Interaction, Model};
