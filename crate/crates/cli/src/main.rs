mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Outcome, RunError};
use crate::config::{RunConfig, DEFAULTS};
use crate::output::{display, OutDir};

#[derive(Parser)]
#[command(name = "germlab", version, about = "Minimal hyperbolic germs on a genus-2 surface")]
struct Cli {
    /// TOML run configuration; every key must be present. Without it the
    /// embedded defaults are used.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Seed for the presentation spot checks, overriding `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Group depth, overriding both `census_depth` and `entropy_depth`.
    #[arg(long, global = true, value_name = "N")]
    depth: Option<usize>,
    /// Mesh subdivision level, overriding `mesh_level`.
    #[arg(long, global = true, value_name = "N")]
    level: Option<usize>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the germ ray; writes the mesh, the differential and per-vertex germ data.
    SolveGerm,
    /// Manning bound and volume entropy along the ray, with the Hessian experiment.
    Entropy,
    /// Orbit census and critical-exponent estimates for each bending angle.
    OrbitCount,
    /// Limit-set samples, plots, box dimension and critical exponents.
    LimitSet,
    /// Rigidity bounds on an epsilon grid.
    Rigidity,
    /// Every check in one JSON report.
    Report,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_TERMINATED: u8 = 2;

fn load(cli: &Cli) -> Result<RunConfig, config::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::defaults(),
    };
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.depth {
        cfg.census_depth = d;
        cfg.entropy_depth = d;
    }
    if let Some(l) = cli.level {
        cfg.mesh_level = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command, cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    match cmd {
        Command::SolveGerm => commands::solve_germ(cfg, out),
        Command::Entropy => commands::entropy(cfg, out),
        Command::OrbitCount => commands::orbit_count_cmd(cfg, out),
        Command::LimitSet => commands::limit_set(cfg, out),
        Command::Rigidity => commands::rigidity(cfg, out),
        Command::Report => commands::report(cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{DEFAULTS}");
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: no command given; see --help");
        return ExitCode::from(EXIT_CONFIG);
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut out = match OutDir::create(&cfg.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = run(cmd, &cfg, &mut out);
    for p in out.written() {
        println!("wrote {}", display(p));
    }
    match result {
        Ok(Outcome { terminated: None }) => ExitCode::SUCCESS,
        Ok(Outcome { terminated: Some(msg) }) => {
            eprintln!("error: {msg}; rows before it were kept");
            ExitCode::from(EXIT_TERMINATED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
