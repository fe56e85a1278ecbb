//! Grid strength assessment: gSCR, the weighted control parameter `T*`,
//! the critical value `CgSCR*` and the stability verdict.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{build_susceptance, AcNetwork, BusId, SusceptanceMatrix};
use crate::spectral::{build_jeq, eigen_jeq, perturbation_diagnostics, JeqMatrix, PerturbationDiagnostics, SpectralData};

/// Margin band inside which the verdict is `Marginal`.
pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Converter {
    pub bus: BusId,
    /// Rated power injection in p.u.
    pub p_rated: f64,
    /// Control parameter `T`.
    pub t_param: f64,
}

impl Converter {
    pub fn new(bus: impl Into<BusId>, p_rated: f64, t_param: f64) -> Self {
        Converter { bus: bus.into(), p_rated, t_param }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConverterSet {
    pub converters: Vec<Converter>,
}

impl ConverterSet {
    pub fn new(converters: Vec<Converter>) -> Self {
        ConverterSet { converters }
    }

    pub fn len(&self) -> usize {
        self.converters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.converters.is_empty()
    }

    pub fn get(&self, bus: &BusId) -> Option<&Converter> {
        self.converters.iter().find(|c| &c.bus == bus)
    }

    pub fn rated_power(&self) -> Vec<f64> {
        self.converters.iter().map(|c| c.p_rated).collect()
    }

    pub fn t_params(&self) -> Vec<f64> {
        self.converters.iter().map(|c| c.t_param).collect()
    }

    /// Copy with the rated power of `bus` replaced.
    pub fn with_power(&self, bus: &BusId, p: f64) -> Result<ConverterSet> {
        let mut out = self.clone();
        let c = out.converters.iter_mut().find(|c| &c.bus == bus).ok_or_else(|| Error::UnknownBus(bus.0.clone()))?;
        c.p_rated = p;
        Ok(out)
    }

    /// Copy with every rated power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ConverterSet {
        let mut out = self.clone();
        out.converters.iter_mut().for_each(|c| c.p_rated *= factor);
        out
    }

    /// Copy with control parameters replaced, in converter order.
    pub fn with_t_params(&self, t: &[f64]) -> Result<ConverterSet> {
        if t.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: t.len() });
        }
        let mut out = self.clone();
        out.converters.iter_mut().zip(t).for_each(|(c, &ti)| c.t_param = ti);
        Ok(out)
    }

    /// Reorders the set to follow the bus order of `net`, rejecting buses
    /// without a converter and converters on unknown buses.
    pub fn aligned_to(&self, net: &AcNetwork) -> Result<ConverterSet> {
        if let Some(c) = self.converters.iter().find(|c| net.index_of(&c.bus).is_none()) {
            return Err(Error::UnknownBus(c.bus.0.clone()));
        }
        let mut out = Vec::with_capacity(net.len());
        for bus in &net.buses {
            match self.get(&bus.id) {
                Some(c) if bus.is_converter => out.push(c.clone()),
                _ => return Err(Error::MissingConverter(bus.id.0.clone())),
            }
        }
        for c in &out {
            if !(c.p_rated > 0.0) || !c.p_rated.is_finite() {
                return Err(Error::NonPositiveRatedPower { bus: c.bus.0.clone(), p: c.p_rated });
            }
            if !c.t_param.is_finite() {
                return Err(Error::NonFiniteControlParameter { bus: c.bus.0.clone() });
            }
        }
        Ok(ConverterSet { converters: out })
    }
}

/// Reference control parameter for the homogeneous system being perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TRef {
    #[default]
    TStar,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }

    pub fn from_margin(margin: f64, tol: f64) -> Self {
        if margin > tol {
            Verdict::Stable
        } else if margin < -tol {
            Verdict::Unstable
        } else {
            Verdict::Marginal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub t_ref: TRef,
    pub margin_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { t_ref: TRef::TStar, margin_tol: DEFAULT_MARGIN_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthReport {
    pub gscr: f64,
    pub t_star: f64,
    pub cgscr_star: f64,
    pub margin: f64,
    pub lambda_crit_approx: f64,
    pub lambda_crit_exact: f64,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub t_ref: f64,
    pub diagnostics: Option<PerturbationDiagnostics>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

/// Generalized short circuit ratio: the smallest eigenvalue of `J_eq`.
pub fn gscr(spectral: &SpectralData) -> f64 {
    spectral.lambda_min()
}

/// Participation-weighted control parameter `T* = Σ w_j T_j`.
pub fn weighted_t(spectral: &SpectralData, t: &[f64]) -> Result<f64> {
    if t.len() != spectral.n() {
        return Err(Error::DimensionMismatch { expected: spectral.n(), got: t.len() });
    }
    if t.iter().all(|&ti| ti == t[0]) {
        return Ok(t[0]);
    }
    Ok(spectral.weights.iter().zip(t).map(|(w, ti)| w * ti).sum())
}

/// Positive root of `λ² - T*λ - 1 = 0`.
pub fn cgscr_star(t_star: f64) -> f64 {
    let half = 0.5 * t_star;
    let root = (half * half + 1.0).sqrt();
    if t_star >= 0.0 {
        half + root
    } else {
        // Product of the roots is -1; avoids cancellation.
        1.0 / (root - half)
    }
}

/// `T* + 1/λ1 - λ1`; negative on the stable side.
pub fn lambda_crit_approx(spectral: &SpectralData, t: &[f64]) -> Result<f64> {
    spectral.require_simple()?;
    Ok(critical_value(weighted_t(spectral, t)?, spectral.lambda_min()))
}

fn critical_value(t_star: f64, lambda1: f64) -> f64 {
    t_star + lambda1.recip() - lambda1
}

/// `J_sys = diag(T) + J_eq⁻¹ - J_eq`, with `J_eq⁻¹` obtained from LU solves.
pub fn jsys_exact(j: &JeqMatrix, t: &[f64]) -> Result<DMatrix<f64>> {
    let n = j.n();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.len() });
    }
    let inv = j.entries.clone().lu().solve(&DMatrix::identity(n, n)).ok_or(Error::SingularMatrix)?;
    let mut out = inv - &j.entries;
    for (i, ti) in t.iter().enumerate() {
        out[(i, i)] += ti;
    }
    Ok(out)
}

/// Eigenvalue of `J_sys` closest to `target`, from a general dense eigensolve
/// of the assembled matrix.
pub fn nearest_eigenvalue(jsys: &DMatrix<f64>, target: f64) -> f64 {
    jsys.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .expect("non-empty matrix")
}

/// Precomputed susceptance matrix plus aligned converter data; the shared
/// entry point for single evaluations and for continuation runs that only
/// change rated powers.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub susceptance: SusceptanceMatrix,
    pub converters: ConverterSet,
}

impl Assessment {
    pub fn new(net: &AcNetwork, conv: &ConverterSet) -> Result<Self> {
        let susceptance = build_susceptance(net)?;
        let converters = conv.aligned_to(net)?;
        Ok(Assessment { susceptance, converters })
    }

    pub fn with_converters(&self, conv: ConverterSet) -> Self {
        Assessment { susceptance: self.susceptance.clone(), converters: conv }
    }

    pub fn jeq(&self) -> Result<JeqMatrix> {
        build_jeq(&self.susceptance, &self.converters.rated_power())
    }

    pub fn spectral(&self) -> Result<SpectralData> {
        Ok(eigen_jeq(&self.jeq()?))
    }

    /// `gSCR - CgSCR*`.
    pub fn margin(&self) -> Result<f64> {
        let s = self.spectral()?;
        Ok(gscr(&s) - cgscr_star(weighted_t(&s, &self.converters.t_params())?))
    }

    pub fn jsys(&self) -> Result<DMatrix<f64>> {
        jsys_exact(&self.jeq()?, &self.converters.t_params())
    }

    pub fn jsys_determinant(&self) -> Result<f64> {
        Ok(self.jsys()?.determinant())
    }

    pub fn report(&self, opts: &AnalysisOptions) -> Result<StrengthReport> {
        let t = self.converters.t_params();
        let jeq = self.jeq()?;
        let spectral = eigen_jeq(&jeq);
        let g = gscr(&spectral);
        let t_star = weighted_t(&spectral, &t)?;
        let cg = cgscr_star(t_star);
        let margin = g - cg;
        let approx = critical_value(t_star, g);
        let exact = nearest_eigenvalue(&jsys_exact(&jeq, &t)?, approx);
        let t_ref = match opts.t_ref {
            TRef::TStar => t_star,
            TRef::Mean => t.iter().sum::<f64>() / t.len() as f64,
        };

        let mut warnings = Vec::new();
        let mut verdict = Verdict::from_margin(margin, opts.margin_tol);
        let diagnostics = match perturbation_diagnostics(&spectral, &t, t_ref) {
            Ok(d) => Some(d),
            Err(e @ Error::DegenerateLeadingEigenvalue { .. }) => {
                warnings.push(e.to_string());
                verdict = Verdict::Marginal;
                None
            }
            Err(e) => return Err(e),
        };
        if let Some(d) = diagnostics {
            if !d.is_applicable() {
                warnings.push(format!("perturbation certificate not applicable (16n eps^2/delta^2 = {:.4})", d.validity));
            }
        }
        Ok(StrengthReport {
            gscr: g,
            t_star,
            cgscr_star: cg,
            margin,
            lambda_crit_approx: approx,
            lambda_crit_exact: exact,
            eigenvalues: spectral.eigenvalues.clone(),
            weights: spectral.weights.clone(),
            t_ref,
            diagnostics,
            verdict,
            warnings,
        })
    }
}

/// Full assessment pipeline for one operating point.
pub fn analyze(net: &AcNetwork, conv: &ConverterSet) -> Result<StrengthReport> {
    analyze_with(net, conv, &AnalysisOptions::default())
}

pub fn analyze_with(net: &AcNetwork, conv: &ConverterSet, opts: &AnalysisOptions) -> Result<StrengthReport> {
    Assessment::new(net, conv)?.report(opts)
}
