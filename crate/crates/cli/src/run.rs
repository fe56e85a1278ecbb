//! Experiment dispatch and output assembly.

use std::fs;
use std::path::PathBuf;

use gscr_core::boundary::uniform_grid;
use gscr_core::{
    analyze_with, boundary_gaps, compare_boundaries, gscr_contour, inhomogeneity_study, sweep, AcNetwork,
    AnalysisOptions, BusId, ContourAxes, ConverterSet, LoadingDirection,
};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigError, ContourConfig, Experiment, Format, LoadingConfig, StudyConfig, TRefChoice, TargetSpec};
use crate::output::{fmt_num, write_json, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] gscr_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Domain(_) | RunError::Io(_) => EXIT_DOMAIN,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            RunError::Config(e) => e.code(),
            RunError::Domain(e) => e.code(),
            RunError::Io(_) => "OUTPUT_IO",
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        json!({ "error": self.code(), "exit": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub bus: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub targets: Option<Vec<TargetSpec>>,
    pub t_ref: Option<TRefChoice>,
}

impl Overrides {
    /// Applies the overrides for `experiment` and re-checks the result.
    pub fn apply(&self, config: &mut StudyConfig, experiment: Experiment) -> Result<(), ConfigError> {
        config.experiment = experiment;
        if let Some(out) = &self.out {
            config.output = out.clone();
        }
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(t_ref) = self.t_ref {
            config.t_ref = t_ref;
        }
        let loading = |section: &mut Option<LoadingConfig>| {
            let s = section.get_or_insert_with(LoadingConfig::default);
            if let Some(bus) = &self.bus {
                s.bus = Some(bus.clone());
            }
            if let Some(v) = self.from {
                s.from = v;
            }
            if let Some(v) = self.to {
                s.to = v;
            }
            if let Some(v) = self.steps {
                s.steps = v;
            }
        };
        match experiment {
            Experiment::Sweep => loading(&mut config.sweep),
            Experiment::Boundary => loading(&mut config.boundary),
            Experiment::Contour | Experiment::Study => {
                let c = config.contour.get_or_insert_with(ContourConfig::default);
                if let Some(bus) = &self.bus {
                    c.grid_bus = Some(bus.clone());
                }
                if let Some(v) = self.from {
                    c.from = v;
                }
                if let Some(v) = self.to {
                    c.to = v;
                }
                if let Some(v) = self.steps {
                    c.steps = v;
                }
                if let Some(t) = &self.targets {
                    c.targets = t.clone();
                }
            }
            Experiment::Analyze => {}
        }
        config.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub experiment: String,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// Experiment summary, also printed to stdout by the binary.
    pub summary: serde_json::Value,
}

struct Emitter<'a> {
    config: &'a StudyConfig,
    files: Vec<String>,
}

impl Emitter<'_> {
    fn csv(&mut self, name: &str, table: &Table) -> std::io::Result<()> {
        if self.config.wants(Format::Csv) {
            table.write(&self.config.output.join(name))?;
            self.files.push(name.to_owned());
        }
        Ok(())
    }

    fn report<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        if self.config.wants(Format::Report) {
            write_json(&self.config.output.join(name), value)?;
            self.files.push(name.to_owned());
        }
        Ok(())
    }
}

pub fn run(config: &StudyConfig) -> Result<RunOutcome, RunError> {
    let net = config.converter_network()?;
    let conv = config.converters().aligned_to(&net)?;
    let opts = AnalysisOptions { t_ref: config.t_ref.into(), margin_tol: config.margin_tol };
    fs::create_dir_all(&config.output)?;
    info!("running {} into {}", config.experiment.name(), config.output.display());

    let mut out = Emitter { config, files: Vec::new() };
    let mut warnings = Vec::new();
    if net.len() != config.network.buses.len() {
        warnings.push(format!("{} passive bus(es) eliminated by Kron reduction", config.network.buses.len() - net.len()));
    }

    let summary = match config.experiment {
        Experiment::Analyze => run_analyze(&net, &conv, &opts, &mut out, &mut warnings)?,
        Experiment::Sweep => run_sweep(config, &net, &conv, &opts, &mut out, &mut warnings)?,
        Experiment::Boundary => run_boundary(config, &net, &conv, &mut out)?,
        Experiment::Contour => run_contour(config, &net, &conv, &mut out, &mut warnings)?,
        Experiment::Study => run_study(config, &net, &conv, &mut out)?,
    };
    for w in &warnings {
        warn!("{w}");
    }

    let manifest = RunManifest {
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        experiment: config.experiment.name().to_owned(),
        output_dir: config.output.clone(),
        files: out.files,
        warnings,
    };
    write_json(&config.output.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { manifest, summary })
}

fn loading_direction(section: Option<&LoadingConfig>, conv: &ConverterSet) -> gscr_core::Result<(LoadingDirection, usize)> {
    let s = section.cloned().unwrap_or_default();
    let dir = LoadingDirection::new(conv.clone(), s.bus.map(BusId), s.from, s.to)?;
    Ok((dir, s.steps))
}

fn contour_setup(config: &StudyConfig) -> Result<(ContourAxes, Vec<f64>, ContourConfig), ConfigError> {
    let c = config.contour.clone().unwrap_or_default();
    let ids = config.converter_ids();
    let pick = |given: &Option<String>, idx: usize, field: &str| {
        given.clone().or_else(|| ids.get(idx).cloned()).ok_or_else(|| ConfigError::Schema {
            field: field.to_owned(),
            message: "contours need at least two converter buses".to_owned(),
        })
    };
    let solve_bus = pick(&c.solve_bus, 0, "contour.solve_bus")?;
    let grid_bus = pick(&c.grid_bus, 1, "contour.grid_bus")?;
    if solve_bus == grid_bus {
        return Err(ConfigError::Schema {
            field: "contour.grid_bus".to_owned(),
            message: "must differ from solve_bus".to_owned(),
        });
    }
    let axes = ContourAxes { solve_bus: BusId(solve_bus), grid_bus: BusId(grid_bus) };
    let grid = uniform_grid(c.from, c.to, c.steps);
    Ok((axes, grid, c))
}

fn run_analyze(
    net: &AcNetwork,
    conv: &ConverterSet,
    opts: &AnalysisOptions,
    out: &mut Emitter,
    warnings: &mut Vec<String>,
) -> Result<serde_json::Value, RunError> {
    let report = analyze_with(net, conv, opts)?;
    warnings.extend(report.warnings.iter().cloned());
    let mut t = Table::new(["gscr", "t_star", "cgscr_star", "margin", "lambda_crit_exact", "lambda_crit_approx", "verdict"]);
    t.push(vec![
        fmt_num(report.gscr),
        fmt_num(report.t_star),
        fmt_num(report.cgscr_star),
        fmt_num(report.margin),
        fmt_num(report.lambda_crit_exact),
        fmt_num(report.lambda_crit_approx),
        report.verdict.as_str().to_owned(),
    ]);
    out.csv("analyze.csv", &t)?;
    let summary = json!({
        "experiment": "analyze",
        "buses": net.bus_ids().iter().map(|b| b.0.clone()).collect::<Vec<_>>(),
        "report": report,
    });
    out.report("report.json", &summary)?;
    Ok(summary)
}

fn run_sweep(
    config: &StudyConfig,
    net: &AcNetwork,
    conv: &ConverterSet,
    opts: &AnalysisOptions,
    out: &mut Emitter,
    warnings: &mut Vec<String>,
) -> Result<serde_json::Value, RunError> {
    let (dir, steps) = loading_direction(config.sweep.as_ref(), conv)?;
    let result = sweep(net, &dir, steps, opts)?;
    let mut t = Table::new(["p", "gscr", "cgscr_star", "margin", "lambda_crit_exact", "lambda_crit_approx"]);
    let mut failed = Vec::new();
    for s in &result.samples {
        match &s.report {
            Ok(r) => t.push(vec![
                fmt_num(s.p),
                fmt_num(r.gscr),
                fmt_num(r.cgscr_star),
                fmt_num(r.margin),
                fmt_num(r.lambda_crit_exact),
                fmt_num(r.lambda_crit_approx),
            ]),
            Err(e) => {
                warnings.push(format!("sample p = {} failed: {e}", fmt_num(s.p)));
                failed.push(json!({ "p": s.p, "error": e.code() }));
                t.push(vec![fmt_num(s.p), String::new(), String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    if !result.gscr_strictly_decreasing {
        warnings.push("gSCR is not strictly decreasing along the sweep".to_owned());
    }
    out.csv("sweep.csv", &t)?;
    let summary = json!({
        "experiment": "sweep",
        "bus": dir.scaled_bus.as_ref().map(|b| b.0.clone()),
        "from": dir.lo,
        "to": dir.hi,
        "steps": steps,
        "gscr_strictly_decreasing": result.gscr_strictly_decreasing,
        "cgscr_star_rel_variation": result.cgscr_star_rel_variation,
        "margin_crossing": result.margin_crossing(),
        "failed": failed,
    });
    out.report("sweep.json", &summary)?;
    Ok(summary)
}

fn run_boundary(
    config: &StudyConfig,
    net: &AcNetwork,
    conv: &ConverterSet,
    out: &mut Emitter,
) -> Result<serde_json::Value, RunError> {
    let (dir, _) = loading_direction(config.boundary.as_ref(), conv)?;
    let cmp = compare_boundaries(net, &dir, config.tol)?;
    let mut t = Table::new(["p_exact", "p_approx", "rel_error"]);
    t.push(vec![fmt_num(cmp.p_exact), fmt_num(cmp.p_approx), fmt_num(cmp.rel_error)]);
    out.csv("boundary.csv", &t)?;
    let summary = json!({
        "experiment": "boundary",
        "bus": dir.scaled_bus.as_ref().map(|b| b.0.clone()),
        "from": dir.lo,
        "to": dir.hi,
        "tol": config.tol,
        "comparison": cmp,
    });
    out.report("boundary.json", &summary)?;
    Ok(summary)
}

fn run_contour(
    config: &StudyConfig,
    net: &AcNetwork,
    conv: &ConverterSet,
    out: &mut Emitter,
    warnings: &mut Vec<String>,
) -> Result<serde_json::Value, RunError> {
    let (axes, grid, section) = contour_setup(config)?;
    let mut t = Table::new(["target", "p_grid", "p_solve"]);
    let mut curves = Vec::new();
    for target in &section.targets {
        let c = gscr_contour(net, conv, target.0, &axes, &grid, config.tol)?;
        for (p, e) in &c.skipped {
            warnings.push(format!("contour {target}: no point at {} = {}: {e}", axes.grid_bus, fmt_num(*p)));
        }
        for p in &c.points {
            t.push(vec![target.to_string(), fmt_num(p.p_grid), fmt_num(p.p_solve)]);
        }
        curves.push(json!({ "target": target, "points": c.points.len(), "skipped": c.skipped.len() }));
    }
    out.csv("contour.csv", &t)?;

    let gaps = boundary_gaps(net, conv, &axes, &grid, config.tol)?;
    let mut g = Table::new([
        "p_grid",
        "p_solve_exact",
        "p_solve_approx",
        "p_grid_approx",
        "gscr",
        "cgscr_star",
        "gscr_rel_error",
        "grid_rel_gap",
        "solve_rel_gap",
    ]);
    for p in &gaps {
        g.push(
            [
                p.p_grid,
                p.p_solve_exact,
                p.p_solve_approx,
                p.p_grid_approx,
                p.gscr_at_exact,
                p.cgscr_star_at_exact,
                p.gscr_rel_error,
                p.grid_rel_gap,
                p.solve_rel_gap,
            ]
            .iter()
            .map(|&v| fmt_num(v))
            .collect(),
        );
    }
    out.csv("contour_gaps.csv", &g)?;
    let max_of = |f: fn(&gscr_core::BoundaryGap) -> f64| gaps.iter().map(f).fold(0.0, f64::max);
    let summary = json!({
        "experiment": "contour",
        "solve_bus": axes.solve_bus.0,
        "grid_bus": axes.grid_bus.0,
        "grid": { "from": section.from, "to": section.to, "steps": section.steps },
        "curves": curves,
        "max_gscr_rel_error": max_of(|g| g.gscr_rel_error),
        "max_grid_rel_gap": max_of(|g| g.grid_rel_gap),
        "max_solve_rel_gap": max_of(|g| g.solve_rel_gap),
    });
    out.report("contour.json", &summary)?;
    Ok(summary)
}

fn run_study(
    config: &StudyConfig,
    net: &AcNetwork,
    conv: &ConverterSet,
    out: &mut Emitter,
) -> Result<serde_json::Value, RunError> {
    let (axes, grid, section) = contour_setup(config)?;
    let rows = config
        .study
        .as_ref()
        .ok_or_else(|| ConfigError::Schema { field: "study".to_owned(), message: "t_rows are required".to_owned() })?;
    // t_rows follow converter order in the file; the reduced network keeps it.
    let study = inhomogeneity_study(net, conv, &rows.t_rows, &axes, &grid, config.tol)?;

    let mut header: Vec<String> = net.bus_ids().iter().map(|b| format!("t_{b}")).collect();
    header.extend(["std_dev", "error_pct", "grid_gap_pct", "solve_gap_pct"].map(String::from));
    let mut t = Table::new(header);
    for r in &study {
        let mut row: Vec<String> = r.t.iter().map(|&v| fmt_num(v)).collect();
        row.extend([r.std_dev, 100.0 * r.max_rel_error, 100.0 * r.max_grid_gap, 100.0 * r.max_solve_gap].map(fmt_num));
        t.push(row);
    }
    out.csv("study.csv", &t)?;
    let summary = json!({
        "experiment": "study",
        "solve_bus": axes.solve_bus.0,
        "grid_bus": axes.grid_bus.0,
        "grid": { "from": section.from, "to": section.to, "steps": section.steps },
        "rows": study,
    });
    out.report("study.json", &summary)?;
    Ok(summary)
}
