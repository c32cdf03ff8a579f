//! Inference of combinatorial graph Laplacians (CGLs) from snapshot
//! observations of discrete-time consensus dynamics.
//!
//! The crate is organised along the estimation pipeline:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graphs`] | weighted graphs, random generators, Laplacians, CGL validation |
//! | [`dynamics`] | consensus filters, snapshot simulation, covariances |
//! | [`spectral`] | eigen-data extraction and the inverse-filter estimator |
//! | [`solvers`] | nearest-CGL projection, ordered spectral templates, hybrid, baselines |
//! | [`metrics`] | recovery error, F-score, recovery rate |
//! | [`io`] | file formats (graph JSON, edge CSV, matrix CSV, sidecars, roll-call) |
//!
//! Dense linear algebra is done with `nalgebra`; matrices are `DMatrix<f64>`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod graphs;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod solvers;
pub mod spectral;

pub use dynamics::{FilterSource, FilterSpec, SampleCovariance, SnapshotSet};
pub use graphs::{Edge, GraphModel, GraphSpec, Laplacian, WeightDist, WeightedGraph};
pub use solvers::{CglSolution, Distance, SolverConfig};
pub use spectral::SpectralEstimate;

/// Top-level error, wrapping the per-module error types.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graphs::GraphError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Solver(#[from] solvers::SolverError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Io(#[from] io::FormatError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
