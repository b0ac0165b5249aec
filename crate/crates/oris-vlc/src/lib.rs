//! Link-level simulator for indoor visible light communication assisted by
//! wall-mounted specular reflectors, either fixed mirrors or steerable
//! elements (ORIS). Models Lambertian LoS and first-order NLoS optical
//! channels with user-body blockage, enforces lighting-standard constraints
//! through an embedded dense LP solver, and minimizes the outage probability
//! with alternating-optimization heuristics validated against an exact
//! brute-force oracle at tiny scale.
//!
//! ```
//! use oris_vlc::{montecarlo, optimizer::{AoConfig, Approach, SolverContext}};
//! use oris_vlc::scene::Scene;
//!
//! let mut scene = Scene::default();
//! scene.sensing.spacing = 0.5; // coarser grid keeps the doctest quick
//! let ctx = SolverContext::new(scene).unwrap();
//! let cfg = AoConfig::new(Approach::MinPower, 40.0);
//! let records = montecarlo::run_trials(&ctx, &[Approach::MinPower], 4, 7, &cfg).unwrap();
//! assert_eq!(records.len(), 4);
//! ```

pub mod channel;
pub mod geometry;
pub mod illumination;
pub mod metrics;
pub mod montecarlo;
pub mod optimizer;
pub mod scene;

pub use crate::optimizer::{AoConfig, Approach, SolveResult, SolverContext};
pub use crate::scene::Scene;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scenario or parameter failed validation.
    InvalidConfig(String),
    /// The illumination constraint system admits no power allocation.
    Infeasible(String),
    /// An exact enumeration was requested beyond the configured budget.
    BudgetExceeded(String),
    /// An operation was invoked with arguments outside its domain.
    InvalidInput(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::BudgetExceeded(m) => write!(f, "enumeration budget exceeded: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convert a decibel quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
