//! Simulation-trained parameter estimators.
//!
//! A branched network with sample-pooling layers is trained on simulated
//! `(parameter, dataset)` pairs to approximate a point estimator. On top of
//! any [`Estimator`] the crate provides parametric-bootstrap confidence
//! intervals and approximate Bayesian computation with an importance-sampling
//! refinement stage. An EM algorithm for haplotype frequencies serves as the
//! classical baseline for the genetics simulator.

pub mod em;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod layers;
pub mod model_file;
pub mod network;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use estimator::{Estimator, SampleMean};
pub use network::{build_network, HyperParams, NetworkModel};
pub use tensor::{Matrix2, Tensor3};
