//! Master stability analysis of coupled dynamics on chemical hypergraphs.
//!
//! - [`hypergraph`]: oriented hyperedges, incidence and degree structure.
//! - [`spectral`]: the normalized Laplacian `D⁻¹·S·Sᵀ`, its spectrum and kernel.
//! - [`dynamics`]: vertex dynamics, coupling architectures, RK4 and coupled map lattices.
//! - [`stability`]: Lyapunov exponents, per-mode verdicts, coupling windows.
//! - [`io`]: CSV and JSON output formats.

pub mod dynamics;
pub mod eigen;
pub mod hypergraph;
pub mod io;
pub mod spectral;
pub mod stability;

pub use hypergraph::{parse_hypergraph, serialize_hypergraph, ChemicalHypergraph, Hyperedge};
pub use spectral::{kernel_projector, laplacian, spectrum, LaplacianMatrix, Spectrum};
