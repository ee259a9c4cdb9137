//! Physics-informed neural networks for forward problems of nonlinear PDEs.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, the precision used for training.

pub mod autodiff;
mod batch;
pub mod ct;
pub mod dt;
pub mod error;
pub mod jet;
pub mod metrics;
pub mod network;
pub mod optimizer;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CtProblem = ct::CtProblem<f64>;
pub type CtTrainingSet = ct::CtTrainingSet<f64>;
pub type DtProblem = dt::DtProblem<f64>;
pub type DtSnapshot = dt::DtSnapshot<f64>;
pub type SolutionGrid = metrics::SolutionGrid<f64>;
pub type Parameters = network::ParameterVector<f64>;
pub type Report = optimizer::OptimizeReport<f64>;
