use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use morrey_lab::cli::{self, ConfigError, ExperimentConfig, Mode};
use morrey_lab::{generate_space, Error, MetricMeasureSpace, SpaceFile, SpaceSpec};

/// Numerical laboratory for Morrey-space inequalities on finite metric measure spaces.
#[derive(Parser)]
#[command(name = "morrey-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a space file and print its summary.
    Validate { space: PathBuf },
    /// Generate a space from a spec (TOML or JSON) and write it as JSON.
    Gen {
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the inequality checks of a config.
    Check(RunArgs),
    /// Run the extremal-constant estimates of a config.
    Estimate(RunArgs),
    /// Run the kernel-parameter sweeps of a config.
    Sweep(RunArgs),
    /// Run checks, estimates and sweeps.
    Run(RunArgs),
    /// Print the records table of a finished run as CSV.
    Report { run_dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_name = "CONFIG", required_unless_present = "config")]
    config_pos: Option<PathBuf>,
    #[arg(long, conflicts_with = "config_pos")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "MORREY_LAB_JOBS")]
    jobs: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { space } => validate(&space),
        Command::Gen { spec, out } => gen(&spec, &out),
        Command::Check(a) => run(a, Mode::Checks),
        Command::Estimate(a) => run(a, Mode::Estimates),
        Command::Sweep(a) => run(a, Mode::Sweeps),
        Command::Run(a) => run(a, Mode::All),
        Command::Report { run_dir } => report(&run_dir),
    };
    ExitCode::from(code)
}

fn validate(path: &Path) -> u8 {
    let raw: SpaceFile = match cli::read_json(path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match MetricMeasureSpace::try_from(raw) {
        Ok(space) => {
            let w = space.doubling_ratio();
            eprintln!(
                "ok: n={} total_mass={} diameter={} doubling_ratio={} (center {}, radius {})",
                space.len(),
                space.total_mass(),
                space.diameter(),
                w.ratio,
                w.center,
                w.radius
            );
            0
        }
        Err(Error::InvalidSpace(violations)) => {
            eprintln!("invalid space: {} violation(s)", violations.len());
            for v in violations {
                eprintln!("  {v}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn read_spec(path: &Path) -> anyhow::Result<SpaceSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text)?
    };
    Ok(spec)
}

fn gen(spec: &Path, out: &Path) -> u8 {
    let result = read_spec(spec).and_then(|spec| {
        let space = generate_space(&spec)?;
        let json = serde_json::to_vec(&space.to_file())?;
        fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn run(args: RunArgs, mode: Mode) -> u8 {
    let path = args.config.or(args.config_pos).expect("clap requires a config");
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let Some(out) = args.out.or_else(|| cfg.output_dir.clone()) else {
        return config_error(ConfigError::Invalid("no output directory (set output_dir or --out)".into()));
    };
    let report = match cli::run(&cfg, mode, args.jobs, args.quiet) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    if let Err(e) = cli::write_report(&report, &out) {
        eprintln!("error: writing {}: {e}", out.display());
        return 2;
    }
    report.exit_code() as u8
}

fn config_error(e: ConfigError) -> u8 {
    eprintln!("error: {e}");
    2
}

fn report(dir: &Path) -> u8 {
    match cli::read_report(dir) {
        Ok(r) => {
            let csv = cli::records_csv(&r.records);
            if std::io::stdout().lock().write_all(csv.as_bytes()).is_err() {
                return 2;
            }
            0
        }
        Err(e) => config_error(e),
    }
}
