//! Batch experiment front end: builds net/tree/cubature artifacts and runs
//! the rate, inverse-inequality, oscillation-equivalence, frame, and
//! harmonic-extension experiments, emitting plot-ready CSV plus JSON
//! summaries. Configuration comes from per-command defaults, an optional
//! flat key=value config file, and flag overrides, in that order.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{Command as Cmd, ConfigOverrides, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "needlets", version, about = "spherical frame and approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Verb,
}

#[derive(Args, Default)]
struct CommonFlags {
    /// Flat key=value config file; flags given here override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ambient dimension of the sphere S^{d-1} (2 = circle, 3 = sphere).
    #[arg(long, global = true)]
    d: Option<u8>,
    /// Scale base: level-j mesh is gamma * b^{-j}.
    #[arg(long, global = true)]
    b: Option<u32>,
    /// Core-cap radius factor; needs 1/(b-1) + 2*betaw <= 1/2.
    #[arg(long, global = true)]
    betaw: Option<f64>,
    /// Mesh prefactor gamma.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Deepest level J.
    #[arg(long, global = true)]
    j: Option<u32>,
    /// Sparsity exponent; coupled to s by 1/tau = s/(d-1).
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Smoothness exponent; coupled to tau by 1/tau = s/(d-1).
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Aggregation exponent of the error norm.
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Comma-separated strictly increasing budgets, e.g. 1,2,4,8.
    #[arg(long, global = true)]
    n_grid: Option<String>,
    /// Independent random repetitions.
    #[arg(long, global = true)]
    trials: Option<u32>,
    /// Seed for the command's single random generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Atom budget charged per selected frame element in the demo.
    #[arg(long, global = true)]
    atoms_per_element: Option<u32>,
    /// Input scale; 0 exercises the zero-input edge case.
    #[arg(long, global = true)]
    amplitude: Option<f64>,
}

#[derive(Subcommand)]
enum Verb {
    /// Construct the nested tree and per-level cubature rules; write JSON artifacts.
    Build(CommonFlags),
    /// Greedy n-term rate experiment: sigma_n vs n with a fitted slope.
    Jackson(CommonFlags),
    /// Inverse inequality on random sparse sequences (constant exactly 1).
    Bernstein(CommonFlags),
    /// Cap-oscillation norm vs coefficient norm over the test suite.
    Bmo(CommonFlags),
    /// Analysis/synthesis round trip and Parseval check on band-limited inputs.
    FrameCheck(CommonFlags),
    /// Budgeted n-term demo with per-element atom counts and extension checks.
    AtomsDemo(CommonFlags),
}

impl Verb {
    fn split(&self) -> (Cmd, &CommonFlags) {
        match self {
            Verb::Build(f) => (Cmd::Build, f),
            Verb::Jackson(f) => (Cmd::Jackson, f),
            Verb::Bernstein(f) => (Cmd::Bernstein, f),
            Verb::Bmo(f) => (Cmd::Bmo, f),
            Verb::FrameCheck(f) => (Cmd::FrameCheck, f),
            Verb::AtomsDemo(f) => (Cmd::AtomsDemo, f),
        }
    }
}

fn flag_overrides(f: &CommonFlags) -> Result<ConfigOverrides, String> {
    Ok(ConfigOverrides {
        d: f.d,
        b: f.b,
        betaw: f.betaw,
        gamma: f.gamma,
        j: f.j,
        tau: f.tau,
        s: f.s,
        q: f.q,
        n_grid: f.n_grid.as_deref().map(config::parse_n_grid).transpose()?,
        trials: f.trials,
        seed: f.seed,
        output_dir: f.output_dir.clone(),
        atoms_per_element: f.atoms_per_element,
        amplitude: f.amplitude,
    })
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    let (cmd, flags) = cli.command.split();

    let file_layer = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ConfigOverrides::from_file(&text).map_err(|e| e.to_string())?
        }
        None => ConfigOverrides::default(),
    };
    let merged = flag_overrides(flags)?.layered_over(file_layer);
    let cfg = ExperimentConfig::resolve(cmd, merged).map_err(|e| e.to_string())?;
    eprintln!("{} fingerprint={}", cmd.name(), cfg.fingerprint());

    let outcome = match cmd {
        Cmd::Build => commands::cmd_build(&cfg),
        Cmd::Jackson => commands::cmd_jackson(&cfg),
        Cmd::Bernstein => commands::cmd_bernstein(&cfg),
        Cmd::Bmo => commands::cmd_bmo(&cfg),
        Cmd::FrameCheck => commands::cmd_frame_check(&cfg),
        Cmd::AtomsDemo => commands::cmd_atoms_demo(&cfg),
    }?;
    println!("{}", outcome.summary);
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
