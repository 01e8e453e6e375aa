//! # layerlab-core
//!
//! Numerical spectral geometry for tubular neighbourhoods of immersed
//! submanifolds ("quantum layers"). The crate builds Fermi-coordinate
//! metric tensors on sampled grids, assembles the Dirichlet Laplacian
//! quadratic form on a truncated layer, solves the resulting sparse
//! generalized eigenproblems, and certifies essential-spectrum membership
//! through a quadratic-form Weyl criterion evaluated in a discrete dual
//! norm.
//!
//! The pipeline, in the order a typical experiment runs it:
//!
//! 1. [`geometry`] — immersed-base data (curvature/torsion profiles or
//!    graph samples), orthonormal normal frames, second fundamental form,
//!    and the layer metric `G` together with its product reference `G0`.
//! 2. [`cross_section`] — Dirichlet eigenpairs `(E_k, sigma_k)` of the
//!    bounded cross-section.
//! 3. [`discretization`] — sparse stiffness `K` and diagonal mass `M`
//!    realizing the form `h_G` on a truncated grid.
//! 4. [`spectral`] — blocked preconditioned CG eigensolver, CG linear
//!    solver and eigenvalue counting.
//! 5. [`weyl`] — singular families `xi_n (x) sigma_1`, dual-norm Weyl
//!    quotients, the certification scan, and a dense matrix harness for
//!    the spectral-gap lower bound.
//!
//! All numerical paths are deterministic: fixed seeds, ordered parallel
//! reductions, no address-dependent iteration.

pub mod cross_section;
pub mod discretization;
pub mod geometry;
pub mod grid;
pub mod parallel;
pub mod smat;
pub mod sparse;
pub mod spectral;
pub mod weyl;
