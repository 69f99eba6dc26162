use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qalign_cli::config::{ChannelMode, Matrix, NoiseKind};
use qalign_cli::{csv_destination, dispatch, exit, Command, Overrides, RunConfig, RunError, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "qalign", version, about = "Interference alignment on deterministic and Gaussian K-user channels")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Shift-XOR deterministic channel: bit trace and per-user rates.
    DetDemo(Flags),
    /// Slotted propagation-delay channel: interference-free slot fractions.
    DelayDemo(Flags),
    /// Noise-free Gaussian decoding check over all or random message tuples.
    GaussVerify(Flags),
    /// Monte Carlo per-position qit error rates under unit AWGN.
    GaussMc(Flags),
    /// Exact power, genie rates and DoF estimate for a list of block lengths.
    Sweep(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    base: Option<u32>,
    /// N: odd level count minus one for det-demo, qits per user otherwise.
    #[arg(long)]
    blocks: Option<usize>,
    /// Comma-separated block lengths for sweep.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ChannelMode>,
    /// Matrix as rows separated by ';' and entries by ','.
    #[arg(long)]
    alpha: Option<Matrix<u64>>,
    #[arg(long, allow_hyphen_values = true)]
    exponent: Option<Matrix<i32>>,
    #[arg(long)]
    shifts: Option<Matrix<u32>>,
    #[arg(long)]
    delays: Option<Matrix<u64>>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    exhaustive: Option<bool>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Flags {
    fn into_overrides(self) -> (Option<PathBuf>, Overrides) {
        let o = Overrides {
            command: None,
            users: self.users,
            base: self.base,
            blocks: self.blocks,
            n_list: self.n_list,
            trials: self.trials,
            seed: self.seed,
            threshold: self.threshold,
            mode: self.mode,
            alpha: self.alpha.map(|m| m.0),
            exponent: self.exponent.map(|m| m.0),
            shifts: self.shifts.map(|m| m.0),
            delays: self.delays.map(|m| m.0),
            horizon: self.horizon,
            noise: self.noise,
            exhaustive: self.exhaustive,
            threads: self.threads,
            output: self.output,
        };
        (self.config, o)
    }
}

fn run(command: Command, flags: Flags) -> Result<i32, (i32, String)> {
    let usage = |e: &dyn std::fmt::Display| (exit::USAGE, format!("error: {e}"));
    let (file, cli) = flags.into_overrides();
    let file = match file {
        Some(path) => Overrides::from_toml_file(&path).map_err(|e| usage(&e))?,
        None => Overrides::default(),
    };
    let cfg = RunConfig::resolve(command, cli, file).map_err(|e| usage(&e))?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (exit::USAGE, format!("error: cannot set thread count: {e}")))?;
    }
    let outcome = dispatch(&cfg).map_err(|e| match e {
        RunError::Config(e) => usage(&e),
        RunError::Io(_) | RunError::Csv(_) => (exit::IO, format!("error: {e}")),
        RunError::Core(_) => (exit::USAGE, format!("error: {e}")),
    })?;

    let io_err = |e: std::io::Error| (exit::IO, format!("error: {e}"));
    let echo = format!("# resolved configuration\n{}\n", cfg.to_toml());
    match csv_destination(&cfg, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(io_err)?;
            }
            std::fs::write(&path, &outcome.csv).map_err(io_err)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "{echo}{}csv written to {}", outcome.summary, path.display()).map_err(io_err)?;
        }
        None => {
            eprint!("{echo}{}", outcome.summary);
            std::io::stdout().lock().write_all(outcome.csv.as_bytes()).map_err(io_err)?;
        }
    }
    Ok(if outcome.verified { exit::SUCCESS } else { exit::VERIFICATION_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::DetDemo(f) => (Command::DetDemo, f),
        Sub::DelayDemo(f) => (Command::DelayDemo, f),
        Sub::GaussVerify(f) => (Command::GaussVerify, f),
        Sub::GaussMc(f) => (Command::GaussMc, f),
        Sub::Sweep(f) => (Command::Sweep, f),
    };
    let code = run(command, flags).unwrap_or_else(|(code, msg)| {
        eprintln!("{msg}");
        code
    });
    ExitCode::from(code as u8)
}
