use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gscr_cli::config::{TRefChoice, TargetSpec};
use gscr_cli::{load_config, run, Experiment, Overrides, RunError};

#[derive(Parser)]
#[command(name = "gscr", version, about = "Grid strength assessment of multi-infeed HVDC systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// gSCR, CgSCR* and the stability verdict at the configured operating point.
    Analyze(Common),
    /// Analyze along a loading path.
    Sweep(Common),
    /// Iso-gSCR and boundary contours over two rated powers.
    Contour(Common),
    /// Exact versus approximate stability boundary along a loading path.
    Boundary(Common),
    /// Boundary approximation error for several control-parameter sets.
    Study(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    bus: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<TargetSpec>>,
    #[arg(long = "t-ref")]
    t_ref: Option<TRefChoice>,
}

fn execute(experiment: Experiment, args: Common) -> Result<(), RunError> {
    let mut config = load_config(&args.config)?;
    let overrides = Overrides {
        out: args.out,
        tol: args.tol,
        steps: args.steps,
        bus: args.bus,
        from: args.from,
        to: args.to,
        targets: args.targets,
        t_ref: args.t_ref,
    };
    overrides.apply(&mut config, experiment)?;
    let outcome = run(&config)?;
    let text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    // A closed stdout (e.g. piped into `head`) is not an error for the run.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GSCR_LOG", "warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Analyze(a) => (Experiment::Analyze, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::Contour(a) => (Experiment::Contour, a),
        Command::Boundary(a) => (Experiment::Boundary, a),
        Command::Study(a) => (Experiment::Study, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
