//! Eigen-analysis of the weighted susceptance matrix `J_eq = diag(1/P)·B`
//! and first-order eigenvalue perturbation estimates.
//!
//! `J_eq` is not symmetric, but it is similar to
//! `S = diag(P^-1/2)·B·diag(P^-1/2)`, which is. With `S u = λ u` and `‖u‖ = 1`
//! the right and left eigenvectors of `J_eq` are `ν = diag(P^-1/2) u` and
//! `μ = diag(P^1/2) u`, so `μᵀν = 1` holds by construction and the
//! participation weights of the leading mode are `w_j = u_j²`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::SusceptanceMatrix;

/// Relative gap `(λ2 - λ1) / λn` below which the leading eigenvalue is
/// treated as repeated.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct JeqMatrix {
    pub entries: DMatrix<f64>,
    pub susceptance: SusceptanceMatrix,
    pub rated_power: Vec<f64>,
}

impl JeqMatrix {
    pub fn n(&self) -> usize {
        self.rated_power.len()
    }

    /// `diag(P^-1/2)·B·diag(P^-1/2)`, symmetric and similar to `J_eq`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let b = &self.susceptance.entries;
        let s: Vec<f64> = self.rated_power.iter().map(|p| p.sqrt().recip()).collect();
        DMatrix::from_fn(self.n(), self.n(), |i, j| s[i] * b[(i, j)] * s[j])
    }
}

pub fn build_jeq(b: &SusceptanceMatrix, rated_power: &[f64]) -> Result<JeqMatrix> {
    let n = b.n();
    if rated_power.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rated_power.len() });
    }
    for (id, &p) in b.bus_ids.iter().zip(rated_power) {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonPositiveRatedPower { bus: id.0.clone(), p });
        }
    }
    let entries = DMatrix::from_fn(n, n, |i, j| b.entries[(i, j)] / rated_power[i]);
    Ok(JeqMatrix { entries, susceptance: b.clone(), rated_power: rated_power.to_vec() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Ascending, all positive.
    pub eigenvalues: Vec<f64>,
    /// Columns are right eigenvectors `ν_i` of `J_eq`.
    pub right: DMatrix<f64>,
    /// Columns are left eigenvectors `μ_i`, scaled so that `μ_iᵀν_k = δ_ik`.
    pub left: DMatrix<f64>,
    /// `w_j = μ_1j·ν_1j`.
    pub weights: Vec<f64>,
    /// `λ2 - λ1`, infinite for a single bus.
    pub gap: f64,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    pub fn is_degenerate(&self) -> bool {
        self.gap < DEGENERACY_TOL * self.lambda_max()
    }

    /// Errors when the leading eigenvalue is not simple.
    pub fn require_simple(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateLeadingEigenvalue { gap: self.gap })
        } else {
            Ok(())
        }
    }

    pub fn right_vector(&self, i: usize) -> DVector<f64> {
        self.right.column(i).into_owned()
    }

    pub fn left_vector(&self, i: usize) -> DVector<f64> {
        self.left.column(i).into_owned()
    }
}

/// Eigen-decomposition of `J_eq` through its symmetric similarity.
///
/// A repeated leading eigenvalue is not an error here; callers that need a
/// simple eigenvalue check [`SpectralData::require_simple`].
pub fn eigen_jeq(j: &JeqMatrix) -> SpectralData {
    let n = j.n();
    let eig = SymmetricEigen::new(j.symmetrized());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let sqrt_p: Vec<f64> = j.rated_power.iter().map(|p| p.sqrt()).collect();
    let mut right = DMatrix::zeros(n, n);
    let mut left = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut u = eig.eigenvectors.column(k).normalize();
        let pivot = u.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
        if pivot < 0.0 {
            u.neg_mut();
        }
        for r in 0..n {
            right[(r, col)] = u[r] / sqrt_p[r];
            left[(r, col)] = u[r] * sqrt_p[r];
        }
    }
    let weights = (0..n).map(|r| right[(r, 0)] * left[(r, 0)]).collect();
    let gap = if n > 1 { eigenvalues[1] - eigenvalues[0] } else { f64::INFINITY };
    SpectralData { eigenvalues, right, left, weights, gap }
}

/// First-order estimate `yᵀ(A+E)x / yᵀx` of the eigenvalue of `A + E`
/// continuing the simple eigen-triple `(λ, x, y)` of `A`.
pub fn perturbed_eigenvalue(a: &DMatrix<f64>, e: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let n = a.nrows();
    for dim in [a.ncols(), e.nrows(), e.ncols(), x.len(), y.len()] {
        if dim != n {
            return Err(Error::DimensionMismatch { expected: n, got: dim });
        }
    }
    let yx = y.dot(x);
    if yx.abs() < 1e-12 * x.norm() * y.norm() {
        return Err(Error::BiorthogonalityBreakdown(yx.abs()));
    }
    let ax = a * x + e * x;
    Ok(y.dot(&ax) / yx)
}

/// Applicability and error radius of the Gerschgorin-disk certificate for a
/// first-order eigenvalue estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationDiagnostics {
    /// Separation of the critical eigenvalue from the rest of the spectrum.
    pub delta: f64,
    /// `‖Y‖₂·‖E‖₂·‖X‖₂` for the eigenvector matrices of the unperturbed matrix.
    pub epsilon: f64,
    /// `16nε²/δ²`; the certificate applies when this is below one.
    pub validity: f64,
    /// `4nε²/δ`.
    pub radius: f64,
}

impl PerturbationDiagnostics {
    pub fn from_bounds(n: usize, delta: f64, epsilon: f64) -> Self {
        let nf = n as f64;
        let (validity, radius) = if epsilon == 0.0 {
            (0.0, 0.0)
        } else {
            (16.0 * nf * epsilon * epsilon / (delta * delta), 4.0 * nf * epsilon * epsilon / delta)
        };
        PerturbationDiagnostics { delta, epsilon, validity, radius }
    }

    pub fn is_applicable(&self) -> bool {
        self.validity < 1.0
    }

    pub fn epsilon_over_delta(&self) -> f64 {
        self.epsilon / self.delta
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Diagnostics for treating `J_sys = diag(T) + J_eq⁻¹ - J_eq` as the
/// perturbation `E = diag(T_i - t_ref)` of the homogeneous
/// `t_ref·I + J_eq⁻¹ - J_eq`, whose eigenvalues are `t_ref + 1/λ_i - λ_i`.
pub fn perturbation_diagnostics(spectral: &SpectralData, t: &[f64], t_ref: f64) -> Result<PerturbationDiagnostics> {
    let n = spectral.n();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.len() });
    }
    spectral.require_simple()?;
    let f = |l: f64| l.recip() - l;
    let f1 = f(spectral.lambda_min());
    let delta = spectral.eigenvalues[1..].iter().map(|&l| (f(l) - f1).abs()).fold(f64::INFINITY, f64::min);
    if delta.is_finite() && delta <= DEGENERACY_TOL * spectral.lambda_max() {
        return Err(Error::DegenerateLeadingEigenvalue { gap: delta });
    }
    let e_norm = t.iter().map(|ti| (ti - t_ref).abs()).fold(0.0, f64::max);
    let epsilon = if e_norm == 0.0 {
        0.0
    } else {
        spectral_norm(&spectral.right) * e_norm * spectral_norm(&spectral.left)
    };
    Ok(PerturbationDiagnostics::from_bounds(n, delta, epsilon))
}
