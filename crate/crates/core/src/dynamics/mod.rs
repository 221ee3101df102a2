//! Vertex dynamics, coupling architectures and time stepping.

mod coupling;
mod integrate;
mod vertex;

use nalgebra::DMatrix;
use thiserror::Error;

pub use coupling::{
    linearized_rhs, matrix_row_sums, rhs, CoupledSystem, CouplingSpec, RowSumReport,
};
pub use integrate::{
    cml_step, integrate, iterate_cml, rk4_step, sync_error, SyncTarget, Trajectory,
};
pub use vertex::{Aggregator, Dynamics, DynamicsKind, ScalarMap, VertexDynamics};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid dynamics specification: {0}")]
    BadSpec(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value at vertex {vertex}, t = {t}")]
    NonFinite { vertex: usize, t: f64 },
    #[error("geometric mean needs positive entries: hyperedge {hyperedge}, vertex {vertex} has {value}")]
    GeometricDomain {
        hyperedge: usize,
        vertex: usize,
        value: f64,
    },
    #[error("invalid time stepping: {0}")]
    BadStep(String),
    #[error("{0} dynamics cannot be used here")]
    WrongKind(String),
    #[error("trajectory diverged at vertex {vertex}, t = {t} ({} samples kept)", partial.states.len())]
    Diverged {
        vertex: usize,
        t: f64,
        partial: Box<Trajectory>,
    },
}

/// State of all vertices at time `t`; row `i` is the state of vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub x: DMatrix<f64>,
}

impl SystemState {
    pub fn new(t: f64, x: DMatrix<f64>) -> Self {
        Self { t, x }
    }

    /// Every vertex at the same point.
    pub fn synchronized(t: f64, n: usize, point: &[f64]) -> Self {
        Self {
            t,
            x: DMatrix::from_fn(n, point.len(), |_, a| point[a]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
    }

    pub(crate) fn first_non_finite_vertex(&self) -> Option<usize> {
        self.x
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| p % self.x.nrows())
    }
}
