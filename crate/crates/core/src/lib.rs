//! Sparse ISAR imaging with FISTA, ℓ1 + total-variation regularization and an
//! Ising support prior on the scatterer map.
//!
//! The pipeline: build an [`ImageGrid`] and phantom scene, simulate
//! undersampled stepped-frequency returns through a [`SensingOperator`], then
//! reconstruct with [`solve`] (plain FISTA or with MRF support gating) and
//! score against the truth with [`metrics`].

pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod metrics;
pub mod mrf;
pub mod operator;
pub mod phantom;
pub mod prox;
pub mod radar;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{ComplexImage, ImageGrid, RealImage, SPEED_OF_LIGHT};
pub use measurement::{make_mask, MeasurementSet, SamplingMask};
pub use operator::{
    estimate_lipschitz, simulate_measurements, DenseOperator, LinearOperator, LipschitzEstimate,
    RangeModel, SensingOperator,
};
pub use phantom::{make_phantom, PhantomSpec};
pub use radar::RadarConfig;
pub use solver::{solve, SolveOutput, SolverParams};
