//! Grid strength and static voltage stability assessment for multi-infeed
//! LCC-HVDC systems based on the generalized short circuit ratio (gSCR).
//!
//! The pipeline runs network → susceptance matrix → `J_eq` eigen-analysis →
//! gSCR / `T*` / `CgSCR*` → verdict, with an exact `J_sys` oracle alongside
//! for validation and boundary tracing.

pub mod boundary;
pub mod error;
pub mod network;
pub mod spectral;
pub mod strength;

pub use error::{Error, Result};
pub use network::{build_susceptance, kron_reduce, validate, AcNetwork, Branch, BusId, BusSpec, SusceptanceMatrix};
pub use spectral::{
    build_jeq, eigen_jeq, perturbation_diagnostics, perturbed_eigenvalue, JeqMatrix, PerturbationDiagnostics,
    SpectralData,
};
pub use strength::{
    analyze, analyze_with, cgscr_star, gscr, jsys_exact, lambda_crit_approx, weighted_t, AnalysisOptions, Assessment,
    Converter, ConverterSet, StrengthReport, TRef, Verdict,
};
pub use boundary::{
    boundary_gaps, compare_boundaries, find_approx_boundary, find_exact_boundary, gscr_contour, inhomogeneity_study,
    sample_std_dev, sweep, BoundaryComparison, BoundaryGap, ContourAxes, ContourPoint, ContourResult, ContourTarget,
    LoadingDirection, StudyRow, SweepResult, SweepSample,
};
