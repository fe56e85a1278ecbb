//! Continuation experiments on rated powers: sweeps, exact and approximate
//! stability boundaries, iso-gSCR contours and the control-parameter
//! inhomogeneity study.
//!
//! The exact boundary is where `det(J_sys)` changes sign; the approximate
//! one is where `gSCR = CgSCR*`. Both are located by bisection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{AcNetwork, BusId};
use crate::strength::{cgscr_star, gscr, weighted_t, AnalysisOptions, Assessment, ConverterSet, StrengthReport};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Lower end and growth ratio of the geometric scan that brackets contour
/// roots.
const SCAN_START: f64 = 0.01;
const SCAN_RATIO: f64 = 1.25;
const SCAN_STEPS: usize = 60;
/// Sub-intervals scanned inside an explicit loading range.
const RANGE_SEGMENTS: usize = 64;
const MAX_BISECTIONS: usize = 200;

/// How rated powers grow along a one-parameter loading path.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingDirection {
    pub base: ConverterSet,
    /// `Some(bus)`: the loading value is that bus's rated power.
    /// `None`: the loading value multiplies every base rated power.
    pub scaled_bus: Option<BusId>,
    pub lo: f64,
    pub hi: f64,
}

impl LoadingDirection {
    pub fn new(base: ConverterSet, scaled_bus: Option<BusId>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || lo <= 0.0 {
            return Err(Error::InvalidRange { lo, hi });
        }
        if let Some(bus) = &scaled_bus {
            if base.get(bus).is_none() {
                return Err(Error::UnknownBus(bus.0.clone()));
            }
        }
        Ok(LoadingDirection { base, scaled_bus, lo, hi })
    }

    pub fn converters_at(&self, p: f64) -> ConverterSet {
        match &self.scaled_bus {
            Some(bus) => self.base.with_power(bus, p).expect("bus checked in constructor"),
            None => self.base.scaled(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub p: f64,
    pub report: Result<StrengthReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub samples: Vec<SweepSample>,
    /// gSCR decreases strictly between consecutive successful samples.
    pub gscr_strictly_decreasing: bool,
    /// `(max - min) / min` of CgSCR* over successful samples.
    pub cgscr_star_rel_variation: f64,
}

impl SweepResult {
    pub fn reports(&self) -> impl Iterator<Item = (f64, &StrengthReport)> {
        self.samples.iter().filter_map(|s| s.report.as_ref().ok().map(|r| (s.p, r)))
    }

    /// Loading where the sampled margin first crosses zero, by linear
    /// interpolation between the bracketing samples.
    pub fn margin_crossing(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.reports().map(|(p, r)| (p, r.margin)).collect();
        pts.windows(2).find_map(|w| {
            let ((p0, m0), (p1, m1)) = (w[0], w[1]);
            (m0 > 0.0 && m1 <= 0.0).then(|| p0 + (p1 - p0) * m0 / (m0 - m1))
        })
    }
}

/// Uniform grid of `steps` points over `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let last = steps.saturating_sub(1).max(1) as f64;
    (0..steps)
        .map(|k| if k + 1 == steps { hi } else { lo + (hi - lo) * k as f64 / last })
        .collect()
}

pub fn sweep(net: &AcNetwork, dir: &LoadingDirection, steps: usize, opts: &AnalysisOptions) -> Result<SweepResult> {
    if steps < 2 {
        return Err(Error::InvalidRange { lo: dir.lo, hi: dir.hi });
    }
    let base = Assessment::new(net, &dir.base)?;
    let samples: Vec<SweepSample> = uniform_grid(dir.lo, dir.hi, steps)
        .into_iter()
        .map(|p| {
            let report = base.with_converters(dir.converters_at(p)).report(opts);
            SweepSample { p, report }
        })
        .collect();

    let ok: Vec<&StrengthReport> = samples.iter().filter_map(|s| s.report.as_ref().ok()).collect();
    let gscr_strictly_decreasing = ok.windows(2).all(|w| w[1].gscr < w[0].gscr);
    let (lo, hi) = ok
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.cgscr_star), hi.max(r.cgscr_star)));
    let cgscr_star_rel_variation = if ok.is_empty() { 0.0 } else { (hi - lo) / lo };
    Ok(SweepResult { samples, gscr_strictly_decreasing, cgscr_star_rel_variation })
}

fn sign(v: f64) -> bool {
    v > 0.0
}

/// Bisects a bracket `[a, b]` whose endpoints differ in the sign of `f`,
/// until its width is at most `tol`; returns the midpoint.
fn bisect<F>(mut f: F, mut a: f64, mut b: f64, sign_a: bool, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if sign(f(mid)?) == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// First sign change of `f` on `[lo, hi]`, scanned over uniform
/// sub-intervals and refined by bisection.
fn root_in_range<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let s0 = sign(f(lo)?);
    let grid = uniform_grid(lo, hi, RANGE_SEGMENTS + 1);
    for w in grid.windows(2) {
        if sign(f(w[1])?) != s0 {
            return bisect(f, w[0], w[1], s0, tol);
        }
    }
    Err(Error::NoBracket { lo, hi })
}

/// First sign change of `f` on `(0, ∞)`, scanned geometrically upward from
/// `SCAN_START` and refined by bisection.
fn root_by_scan<F>(mut f: F, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut a = SCAN_START;
    let s0 = sign(f(a)?);
    for _ in 0..SCAN_STEPS {
        let b = a * SCAN_RATIO;
        if sign(f(b)?) != s0 {
            return bisect(f, a, b, s0, tol);
        }
        a = b;
    }
    Err(Error::NoBracket { lo: SCAN_START, hi: a })
}

fn check_stable_start(base: &Assessment, dir: &LoadingDirection) -> Result<()> {
    let at_lo = base.with_converters(dir.converters_at(dir.lo));
    let critical = at_lo
        .jsys()?
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if critical < 0.0 && at_lo.margin()? > 0.0 {
        Ok(())
    } else {
        Err(Error::UnstableStart(dir.lo))
    }
}

/// Loading at which `det(J_sys)` first changes sign along `dir`.
pub fn find_exact_boundary(net: &AcNetwork, dir: &LoadingDirection, tol: f64) -> Result<f64> {
    let base = Assessment::new(net, &dir.base)?;
    check_stable_start(&base, dir)?;
    root_in_range(|p| base.with_converters(dir.converters_at(p)).jsys_determinant(), dir.lo, dir.hi, tol)
}

/// Loading at which `gSCR = CgSCR*` along `dir`.
pub fn find_approx_boundary(net: &AcNetwork, dir: &LoadingDirection, tol: f64) -> Result<f64> {
    let base = Assessment::new(net, &dir.base)?;
    check_stable_start(&base, dir)?;
    root_in_range(|p| base.with_converters(dir.converters_at(p)).margin(), dir.lo, dir.hi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryComparison {
    pub p_exact: f64,
    pub p_approx: f64,
    pub rel_error: f64,
}

pub fn compare_boundaries(net: &AcNetwork, dir: &LoadingDirection, tol: f64) -> Result<BoundaryComparison> {
    let p_exact = find_exact_boundary(net, dir, tol)?;
    let p_approx = find_approx_boundary(net, dir, tol)?;
    Ok(BoundaryComparison { p_exact, p_approx, rel_error: (p_approx - p_exact).abs() / p_exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ContourTarget {
    /// `gSCR` equal to a fixed value.
    Gscr(f64),
    /// `gSCR = CgSCR*`, the approximate stability boundary.
    CgscrStar,
    /// `det(J_sys) = 0`, the exact stability boundary.
    Singular,
}

impl ContourTarget {
    pub fn label(&self) -> String {
        match self {
            ContourTarget::Gscr(v) => format!("{v}"),
            ContourTarget::CgscrStar => "cgscr_star".to_owned(),
            ContourTarget::Singular => "singular".to_owned(),
        }
    }

    fn residual(&self, a: &Assessment) -> Result<f64> {
        match *self {
            ContourTarget::Gscr(v) => Ok(gscr(&a.spectral()?) - v),
            ContourTarget::CgscrStar => a.margin(),
            ContourTarget::Singular => a.jsys_determinant(),
        }
    }
}

/// Two rated powers traced against each other while the rest stay at base.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourAxes {
    /// Rated power solved for at each grid value (`P_N1` in the triple-infeed
    /// study).
    pub solve_bus: BusId,
    /// Rated power stepped over the grid (`P_N2`).
    pub grid_bus: BusId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub p_grid: f64,
    pub p_solve: f64,
    pub target: ContourTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    pub points: Vec<ContourPoint>,
    /// Grid values for which no bracket was found.
    pub skipped: Vec<(f64, Error)>,
}

fn solve_power<F>(base: &Assessment, conv: &ConverterSet, bus: &BusId, tol: f64, mut residual: F) -> Result<f64>
where
    F: FnMut(&Assessment) -> Result<f64>,
{
    root_by_scan(|p| residual(&base.with_converters(conv.with_power(bus, p)?)), tol)
}

/// For each grid value of `axes.grid_bus`, the rated power of
/// `axes.solve_bus` that puts the system on `target`.
pub fn gscr_contour(
    net: &AcNetwork,
    conv: &ConverterSet,
    target: ContourTarget,
    axes: &ContourAxes,
    grid: &[f64],
    tol: f64,
) -> Result<ContourResult> {
    let base = Assessment::new(net, conv)?;
    let conv = &base.converters;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &p_grid in grid {
        let at = conv.with_power(&axes.grid_bus, p_grid)?;
        match solve_power(&base, &at, &axes.solve_bus, tol, |a| target.residual(a)) {
            Ok(p_solve) => points.push(ContourPoint { p_grid, p_solve, target }),
            Err(e @ Error::NoBracket { .. }) => skipped.push((p_grid, e)),
            Err(e) => return Err(e),
        }
    }
    Ok(ContourResult { points, skipped })
}

/// One point of the exact boundary and its distance to the approximate one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryGap {
    pub p_grid: f64,
    /// Solve-bus power on the singular boundary.
    pub p_solve_exact: f64,
    /// Solve-bus power on the `gSCR = CgSCR*` curve at the same grid power.
    pub p_solve_approx: f64,
    /// Grid-bus power on the `gSCR = CgSCR*` curve at the same solve-bus power.
    pub p_grid_approx: f64,
    pub gscr_at_exact: f64,
    pub cgscr_star_at_exact: f64,
    /// `|gSCR - CgSCR*| / CgSCR*` on the singular boundary.
    pub gscr_rel_error: f64,
    /// `|p_grid_approx - p_grid| / p_grid`.
    pub grid_rel_gap: f64,
    /// `|p_solve_approx - p_solve_exact| / p_solve_exact`.
    pub solve_rel_gap: f64,
}

pub fn boundary_gaps(
    net: &AcNetwork,
    conv: &ConverterSet,
    axes: &ContourAxes,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<BoundaryGap>> {
    let base = Assessment::new(net, conv)?;
    let conv = &base.converters;
    let t = conv.t_params();
    grid.iter()
        .map(|&p_grid| {
            let at = conv.with_power(&axes.grid_bus, p_grid)?;
            let p_solve_exact = solve_power(&base, &at, &axes.solve_bus, tol, Assessment::jsys_determinant)?;
            let p_solve_approx = solve_power(&base, &at, &axes.solve_bus, tol, Assessment::margin)?;
            let on_exact = at.with_power(&axes.solve_bus, p_solve_exact)?;
            let p_grid_approx = solve_power(&base, &on_exact, &axes.grid_bus, tol, Assessment::margin)?;

            let spectral = base.with_converters(on_exact).spectral()?;
            let gscr_at_exact = gscr(&spectral);
            let cgscr_star_at_exact = cgscr_star(weighted_t(&spectral, &t)?);
            Ok(BoundaryGap {
                p_grid,
                p_solve_exact,
                p_solve_approx,
                p_grid_approx,
                gscr_at_exact,
                cgscr_star_at_exact,
                gscr_rel_error: (gscr_at_exact - cgscr_star_at_exact).abs() / cgscr_star_at_exact,
                grid_rel_gap: (p_grid_approx - p_grid).abs() / p_grid,
                solve_rel_gap: (p_solve_approx - p_solve_exact).abs() / p_solve_exact,
            })
        })
        .collect()
}

/// Sample standard deviation (divisor `n - 1`); zero for fewer than two values.
pub fn sample_std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub t: Vec<f64>,
    pub std_dev: f64,
    /// Largest `|gSCR - CgSCR*| / CgSCR*` along the singular boundary.
    pub max_rel_error: f64,
    /// Largest relative grid-bus power gap at fixed solve-bus power.
    pub max_grid_gap: f64,
    /// Largest relative solve-bus power gap at fixed grid-bus power.
    pub max_solve_gap: f64,
}

/// Boundary approximation error for each set of control parameters, with
/// `t_rows` given in the network's bus order.
pub fn inhomogeneity_study(
    net: &AcNetwork,
    conv: &ConverterSet,
    t_rows: &[Vec<f64>],
    axes: &ContourAxes,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<StudyRow>> {
    let aligned = conv.aligned_to(net)?;
    t_rows
        .iter()
        .map(|t| {
            let gaps = boundary_gaps(net, &aligned.with_t_params(t)?, axes, grid, tol)?;
            let max_of = |f: fn(&BoundaryGap) -> f64| gaps.iter().map(f).fold(0.0, f64::max);
            Ok(StudyRow {
                t: t.clone(),
                std_dev: sample_std_dev(t),
                max_rel_error: max_of(|g| g.gscr_rel_error),
                max_grid_gap: max_of(|g| g.grid_rel_gap),
                max_solve_gap: max_of(|g| g.solve_rel_gap),
            })
        })
        .collect()
}
