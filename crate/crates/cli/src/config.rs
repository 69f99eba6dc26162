//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Every flag mirrors a top-level key of the file. Flags win over file values
//! and defaults fill whatever is left, so a resolved [`RunConfig`] is complete
//! and can be written back out with [`RunConfig::to_toml`] and fed in again.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use qalign_core::analysis::DEFAULT_THRESHOLD;
use qalign_core::gauss::{alphabet_bound, ChannelSpec, NoiseMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("config file is for `{file}` but `{cli}` was requested")]
    CommandMismatch { file: String, cli: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DetDemo,
    DelayDemo,
    GaussVerify,
    GaussMc,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DetDemo => "det-demo",
            Command::DelayDemo => "delay-demo",
            Command::GaussVerify => "gauss-verify",
            Command::GaussMc => "gauss-mc",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    Basic,
    Generalized,
    SingleUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Awgn,
    None,
}

impl From<NoiseKind> for NoiseMode {
    fn from(n: NoiseKind) -> Self {
        match n {
            NoiseKind::Awgn => NoiseMode::Awgn,
            NoiseKind::None => NoiseMode::Silent,
        }
    }
}

/// Integer matrix written as rows separated by `;`, entries by `,`:
/// `"0,1,1;1,0,1;1,1,0"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<T>(pub Vec<Vec<T>>);

impl<T: FromStr> FromStr for Matrix<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| v.trim().parse::<T>().map_err(|_| format!("bad matrix entry `{}`", v.trim())))
                    .collect()
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Matrix)
    }
}

/// Values a config file or the command line may set. Every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub command: Option<Command>,
    pub users: Option<usize>,
    pub base: Option<u32>,
    pub blocks: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub mode: Option<ChannelMode>,
    pub alpha: Option<Vec<Vec<u64>>>,
    pub exponent: Option<Vec<Vec<i32>>>,
    pub shifts: Option<Vec<Vec<u32>>>,
    pub delays: Option<Vec<Vec<u64>>>,
    pub horizon: Option<u64>,
    pub noise: Option<NoiseKind>,
    pub exhaustive: Option<bool>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| ConfigError::Malformed { path: path.into(), message: e.to_string() })
    }

    /// Fills every unset field of `self` from `lower`.
    pub fn layered_over(self, lower: Overrides) -> Overrides {
        Overrides {
            command: self.command.or(lower.command),
            users: self.users.or(lower.users),
            base: self.base.or(lower.base),
            blocks: self.blocks.or(lower.blocks),
            n_list: self.n_list.or(lower.n_list),
            trials: self.trials.or(lower.trials),
            seed: self.seed.or(lower.seed),
            threshold: self.threshold.or(lower.threshold),
            mode: self.mode.or(lower.mode),
            alpha: self.alpha.or(lower.alpha),
            exponent: self.exponent.or(lower.exponent),
            shifts: self.shifts.or(lower.shifts),
            delays: self.delays.or(lower.delays),
            horizon: self.horizon.or(lower.horizon),
            noise: self.noise.or(lower.noise),
            exhaustive: self.exhaustive.or(lower.exhaustive),
            threads: self.threads.or(lower.threads),
            output: self.output.or(lower.output),
        }
    }
}

/// Fully resolved and validated run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub users: usize,
    pub base: u32,
    pub blocks: usize,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub threshold: f64,
    pub mode: ChannelMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<u64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<Vec<Vec<i32>>>,
    pub shifts: Vec<Vec<u32>>,
    pub delays: Vec<Vec<u64>>,
    pub horizon: u64,
    pub noise: NoiseKind,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Cap on message tuples enumerated by an exhaustive `gauss-verify`.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

fn unit_offset_matrix<T: From<u8>>(users: usize) -> Vec<Vec<T>> {
    (0..users).map(|k| (0..users).map(|j| T::from(u8::from(j != k))).collect()).collect()
}

fn check_square<T>(key: &'static str, m: &[Vec<T>], users: usize) -> Result<(), ConfigError> {
    if m.len() != users || m.iter().any(|r| r.len() != users) {
        return Err(invalid(key, format!("expected a {users}x{users} matrix")));
    }
    Ok(())
}

impl RunConfig {
    /// Resolves `cli` flags layered over `file` for `command`, applying
    /// per-command defaults and checking every constraint before any work
    /// starts.
    pub fn resolve(command: Command, cli: Overrides, file: Overrides) -> Result<Self, ConfigError> {
        if let Some(c) = file.command {
            if c != command {
                return Err(ConfigError::CommandMismatch { file: c.to_string(), cli: command.to_string() });
            }
        }
        let o = cli.layered_over(file);
        let (users, base, blocks, trials) = match command {
            Command::DetDemo => (3, 2, 7, 1000),
            Command::DelayDemo => (3, 2, 1, 1),
            Command::GaussVerify => (3, 9, 2, 10_000),
            Command::GaussMc => (4, 64, 4, 100_000),
            Command::Sweep => (4, 64, 4, 20_000),
        };
        let users = o.users.unwrap_or(users);
        let mut cfg = RunConfig {
            command,
            users,
            base: o.base.unwrap_or(base),
            blocks: o.blocks.unwrap_or(blocks),
            n_list: o.n_list.unwrap_or_else(|| vec![2, 4, 8, 12]),
            trials: o.trials.unwrap_or(trials),
            seed: o.seed.unwrap_or(0),
            threshold: o.threshold.unwrap_or(DEFAULT_THRESHOLD),
            mode: o.mode.unwrap_or(ChannelMode::Basic),
            alpha: o.alpha,
            exponent: o.exponent,
            shifts: o.shifts.unwrap_or_else(|| unit_offset_matrix(users)),
            delays: o.delays.unwrap_or_else(|| unit_offset_matrix(users)),
            horizon: o.horizon.unwrap_or(100),
            noise: o.noise.unwrap_or(NoiseKind::Awgn),
            exhaustive: false,
            threads: o.threads,
            output: o.output,
        };
        cfg.validate()?;
        if command == Command::GaussVerify {
            let tuples = cfg.message_tuples()?;
            cfg.exhaustive = match o.exhaustive {
                Some(true) if tuples > EXHAUSTIVE_LIMIT => {
                    return Err(invalid(
                        "exhaustive",
                        format!("{tuples} message tuples exceeds the limit of {EXHAUSTIVE_LIMIT}"),
                    ))
                }
                Some(e) => e,
                None => tuples <= EXHAUSTIVE_LIMIT,
            };
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        match self.command {
            Command::DetDemo => {
                if self.users < 2 {
                    return Err(invalid("users", "the deterministic channel needs at least 2 users"));
                }
                if self.blocks.is_multiple_of(2) {
                    return Err(invalid("blocks", format!("N must be odd, got {}", self.blocks)));
                }
                if self.trials == 0 {
                    return Err(invalid("trials", "must be at least 1"));
                }
                check_square("shifts", &self.shifts, self.users)?;
            }
            Command::DelayDemo => {
                if self.users == 0 {
                    return Err(invalid("users", "must be at least 1"));
                }
                if self.horizon == 0 {
                    return Err(invalid("horizon", "must be at least 1"));
                }
                check_square("delays", &self.delays, self.users)?;
            }
            Command::GaussVerify | Command::GaussMc | Command::Sweep => {
                self.channel_spec()?;
                if self.trials == 0 {
                    return Err(invalid("trials", "must be at least 1"));
                }
                if self.command == Command::Sweep {
                    if self.n_list.is_empty() || self.n_list.contains(&0) {
                        return Err(invalid("n_list", "needs at least one positive block length"));
                    }
                    if !(0.0..1.0).contains(&self.threshold) {
                        return Err(invalid("threshold", format!("must lie in [0, 1), got {}", self.threshold)));
                    }
                } else if self.blocks == 0 {
                    return Err(invalid("blocks", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Channel described by `mode`, `users`, `base` and the optional
    /// matrices, with its alphabet checked.
    pub fn channel_spec(&self) -> Result<ChannelSpec, ConfigError> {
        let spec = match self.mode {
            ChannelMode::Basic => ChannelSpec::basic(self.users, self.base),
            ChannelMode::SingleUser => ChannelSpec::single_user(self.base),
            ChannelMode::Generalized => {
                let alpha = self.alpha.clone().ok_or_else(|| invalid("alpha", "generalized mode needs an alpha matrix"))?;
                let exponent =
                    self.exponent.clone().ok_or_else(|| invalid("exponent", "generalized mode needs an exponent matrix"))?;
                check_square("alpha", &alpha, self.users)?;
                check_square("exponent", &exponent, self.users)?;
                ChannelSpec::generalized(self.base, alpha, exponent)
            }
        }
        .map_err(|e| invalid("mode", e.to_string()))?;
        alphabet_bound(&spec).map_err(|e| invalid("base", e.to_string()))?;
        Ok(spec)
    }

    /// `M^(K * N)`, saturating.
    pub fn message_tuples(&self) -> Result<u128, ConfigError> {
        let spec = self.channel_spec()?;
        let m = alphabet_bound(&spec).map_err(|e| invalid("base", e.to_string()))?;
        let exp = (spec.users() * self.blocks) as u32;
        Ok((m as u128).checked_pow(exp).unwrap_or(u128::MAX))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }
}
