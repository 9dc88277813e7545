//! Restricted Dirichlet realization of `(-Δ)^a` on `Ω = (-1, 1)`: Galerkin
//! assembly in the weighted Jacobi basis, stationary solves, eigenpairs,
//! boundary-regularity probes and the boundary integral identities.

mod assembly;
mod basis;
mod eigen;
mod identities;
mod regularity;
mod solve;

pub use assembly::{
    assemble, bilinear_form_matrix, mass_matrix, operator_matrix, AssemblyConfig, AssemblyRoute,
    DirichletSystem, KernelConstant, QuadratureInfo, MAX_BASIS_SIZE,
};
pub use basis::WeightedBasis;
pub use eigen::{eigen_solve, ritz_pairs, EigenPair, EigenReport, REFINEMENT_TOL};
pub use identities::{greens_reduced_check, ibp_identity_check, GreensReport, IbpEntry, IbpReport};
pub use regularity::{
    boundary_regularity_probe, holder_divergence, HolderReport, RegularityReport, REGULARITY_FIT_WINDOW,
};
pub use solve::{solve_stationary, solve_stationary_fn, StationarySolution};
