//! Command-line flags, TOML run configs and their merge. Flags win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qexp", version, about = "p-adic cell integration and exponential sums")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// The prime p.
    #[arg(long, global = true)]
    pub prime: Option<u64>,
    /// Maximum number of residue points any enumeration may visit.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving `<command>.json` and `<command>.csv`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML run config; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an expression and print its canonical form.
    Parse { expr: String },
    /// Closed-form integral over a certificate, compared with the residue oracle.
    Integrate(IntegrateArgs),
    /// Verify a decomposition certificate and its norm descriptions.
    CellsCheck(CellsArgs),
    /// Residue-sum integrals across levels, optionally with a Monte-Carlo estimate.
    Oracle(OracleArgs),
    /// Exponential sums E(y).
    Expsum(ExpsumArgs),
    /// Normalized Kloosterman-type sums over a grid of (a, m).
    Kloosterman(KloostermanArgs),
    /// Local singular series F_m(z) across levels.
    Singular(SingularArgs),
    /// Decay fits of |E(u p^-m)| along unit directions.
    Decay(DecayArgs),
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Certificate JSON with cell-adapted terms.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Integrand in the expression DSL, for the oracle.
    #[arg(long)]
    pub integrand: Option<String>,
    /// Oracle and partition-check level.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CellsArgs {
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub integrand: Option<String>,
    #[arg(long)]
    pub arity: Option<usize>,
    /// Restricts to the domain of this certificate.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Single level; ignored when a range is given.
    #[arg(long)]
    pub level: Option<u32>,
    /// Inclusive level range `a:b`.
    #[arg(long)]
    pub m_range: Option<String>,
    /// Monte-Carlo sample count at the last level.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Component of the polynomial map; repeat for each.
    #[arg(long = "map")]
    pub map: Vec<String>,
    #[arg(long)]
    pub arity: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExpsumArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Comma-separated rationals, one per map component; repeat for more.
    #[arg(long = "y")]
    pub y: Vec<String>,
}

#[derive(Debug, Args)]
pub struct KloostermanArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Comma-separated integers coprime to p; repeat for more.
    #[arg(long = "a")]
    pub a: Vec<String>,
    /// Comma-separated positive levels; repeat for more.
    #[arg(long = "m")]
    pub m: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SingularArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Comma-separated target values; repeat for more. Defaults to all of (Z/p)^r.
    #[arg(long = "z")]
    pub z: Vec<String>,
    #[arg(long)]
    pub m_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Comma-separated p-adic units; repeat for more. Defaults to all ones.
    #[arg(long = "direction")]
    pub directions: Vec<String>,
    #[arg(long)]
    pub m_range: Option<String>,
}

/// Keys of a TOML run config. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    pub prime: Option<u64>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub integrand: Option<String>,
    pub arity: Option<usize>,
    pub level: Option<u32>,
    pub m_range: Option<String>,
    pub samples: Option<u64>,
    #[serde(default)]
    pub map: Vec<String>,
    #[serde(default)]
    pub y: Vec<String>,
    #[serde(default)]
    pub a: Vec<String>,
    #[serde(default)]
    pub m: Vec<String>,
    #[serde(default)]
    pub z: Vec<String>,
    #[serde(default)]
    pub directions: Vec<String>,
}

fn over<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn over_list(flag: Vec<String>, file: Vec<String>) -> Vec<String> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl Payload {
    fn overlay_map(&mut self, m: MapArgs) {
        self.map = over_list(m.map, std::mem::take(&mut self.map));
        self.arity = over(m.arity, self.arity);
    }

    fn overlay(&mut self, cmd: &mut Command) {
        match cmd {
            Command::Parse { .. } => {}
            Command::Integrate(a) => {
                self.certificate = over(a.certificate.take(), self.certificate.take());
                self.integrand = over(a.integrand.take(), self.integrand.take());
                self.level = over(a.level, self.level);
            }
            Command::CellsCheck(a) => {
                self.certificate = over(a.certificate.take(), self.certificate.take());
                self.level = over(a.level, self.level);
            }
            Command::Oracle(a) => {
                self.integrand = over(a.integrand.take(), self.integrand.take());
                self.arity = over(a.arity, self.arity);
                self.certificate = over(a.certificate.take(), self.certificate.take());
                self.level = over(a.level, self.level);
                self.m_range = over(a.m_range.take(), self.m_range.take());
                self.samples = over(a.samples, self.samples);
            }
            Command::Expsum(a) => {
                self.overlay_map(std::mem::replace(&mut a.map, empty_map()));
                self.y = over_list(std::mem::take(&mut a.y), std::mem::take(&mut self.y));
            }
            Command::Kloosterman(a) => {
                self.overlay_map(std::mem::replace(&mut a.map, empty_map()));
                self.a = over_list(std::mem::take(&mut a.a), std::mem::take(&mut self.a));
                self.m = over_list(std::mem::take(&mut a.m), std::mem::take(&mut self.m));
            }
            Command::Singular(a) => {
                self.overlay_map(std::mem::replace(&mut a.map, empty_map()));
                self.z = over_list(std::mem::take(&mut a.z), std::mem::take(&mut self.z));
                self.m_range = over(a.m_range.take(), self.m_range.take());
            }
            Command::Decay(a) => {
                self.overlay_map(std::mem::replace(&mut a.map, empty_map()));
                self.directions = over_list(std::mem::take(&mut a.directions), std::mem::take(&mut self.directions));
                self.m_range = over(a.m_range.take(), self.m_range.take());
            }
        }
    }
}

fn empty_map() -> MapArgs {
    MapArgs { map: Vec::new(), arity: None }
}

/// Merged settings for one run.
#[derive(Debug)]
pub struct RunConfig {
    pub prime: Option<u64>,
    pub budget: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub payload: Payload,
}

impl RunConfig {
    pub fn resolve(global: GlobalArgs, cmd: &mut Command) -> CliResult<Self> {
        let (mut payload, base) = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let payload: Payload =
                    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                (payload, path.parent().map(Path::to_path_buf))
            }
            None => (Payload::default(), None),
        };
        // Paths in a config file are relative to the file.
        if let Some(base) = &base {
            for p in [&mut payload.certificate, &mut payload.out].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        payload.overlay(cmd);
        let budget = over(global.budget, payload.budget).unwrap_or(qexp_core::padic::DEFAULT_BUDGET);
        if budget == 0 {
            return Err(CliError::Usage("budget must be positive".into()));
        }
        Ok(Self {
            prime: over(global.prime, payload.prime),
            budget,
            seed: over(global.seed, payload.seed).unwrap_or(0),
            out: over(global.out, payload.out.take()),
            payload,
        })
    }
}

/// Parses an inclusive range `a:b` (or a single level `a`).
pub fn parse_range(s: &str) -> CliResult<(u32, u32)> {
    let bad = || CliError::Parse(format!("bad level range `{s}`; expected a:b"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:8").unwrap(), (1, 8));
        assert_eq!(parse_range(" 3 ").unwrap(), (3, 3));
        assert!(parse_range("0:2").is_err());
        assert!(parse_range("5:2").is_err());
        assert!(parse_range("a:b").is_err());
    }

    #[test]
    fn flags_win() {
        let mut cmd = Command::Decay(DecayArgs {
            map: MapArgs { map: vec!["x1^3".into()], arity: None },
            directions: Vec::new(),
            m_range: Some("1:4".into()),
        });
        let mut payload: Payload =
            toml::from_str("map = [\"x1^2\"]\ndirections = [\"2\"]\nm_range = \"1:8\"\narity = 1").unwrap();
        payload.overlay(&mut cmd);
        assert_eq!(payload.map, vec!["x1^3"]);
        assert_eq!(payload.directions, vec!["2"]);
        assert_eq!(payload.m_range.as_deref(), Some("1:4"));
        assert_eq!(payload.arity, Some(1));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Payload>("primes = 5").is_err());
    }
}
