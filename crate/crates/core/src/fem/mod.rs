//! Lagrange finite elements (P1, P2): assembly, evaluation, norms, energies and fluxes.

mod assemble;
mod function;
mod space;
mod sparse;

pub use assemble::{assemble, load_boundary, load_boundary_normal, load_domain, Form, EDGE_POINTS};
pub use function::{
    consistent_flux, consistent_flux_from_residual, energy, BoundaryTrace, EnergyModel, FeFunction,
    NormKind,
};
pub use space::{edge_basis, local_basis, ElementGeometry, FeSpace, RaySegment};
pub use sparse::SparseSymMatrix;
