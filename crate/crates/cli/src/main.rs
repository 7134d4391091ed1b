use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ionsim_cli::{load_config, run, CliError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "ionsim", version, about = "Long-range Ising chain simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration (one experiment per file).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Worker thread count; overrides IONSIM_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ion equilibrium positions and transverse normal modes.
    Modes(RunArgs),
    /// Phonon-mediated coupling matrix and its power-law fit.
    Couplings(RunArgs),
    /// Disordered quench from the Neel state.
    Mbl(RunArgs),
    /// Clean-chain quench tracking the excitation position.
    Pretherm(RunArgs),
    /// Driven chain with stroboscopic sub-harmonic analysis.
    Dtc(RunArgs),
    /// Perturbation/interaction phase scan of the driven chain.
    DtcScan(RunArgs),
    /// Splitting spectroscopy and coupling reconstruction.
    Spectroscopy(RunArgs),
}

impl Cmd {
    fn kind(&self) -> &'static str {
        match self {
            Cmd::Modes(_) => "modes",
            Cmd::Couplings(_) => "couplings",
            Cmd::Mbl(_) => "mbl",
            Cmd::Pretherm(_) => "pretherm",
            Cmd::Dtc(_) => "dtc",
            Cmd::DtcScan(_) => "dtc-scan",
            Cmd::Spectroscopy(_) => "spectroscopy",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Cmd::Modes(a)
            | Cmd::Couplings(a)
            | Cmd::Mbl(a)
            | Cmd::Pretherm(a)
            | Cmd::Dtc(a)
            | Cmd::DtcScan(a)
            | Cmd::Spectroscopy(a) => a,
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let args = cli.cmd.args();
    if let Some(n) = resolve_threads(args.threads)? {
        if n == 0 {
            return Err(CliError::Config("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut config = load_config(&args.config)?;
    if config.kind() != cli.cmd.kind() {
        return Err(CliError::Config(format!(
            "config is for \"{}\" but the \"{}\" subcommand was invoked",
            config.kind(),
            cli.cmd.kind()
        )));
    }
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    let manifest = run(&config, &args.out)?;
    println!(
        "{} complete: {} output file(s) in {}",
        manifest.experiment,
        manifest.outputs.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // Machine-readable record on stderr alongside the prose line.
            eprintln!("{}", serde_json::json!({"error": e.to_string(), "exit_code": e.exit_code()}));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
