use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use inclab::report::Format;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Energy,
    IncidenceSweep,
    XrayCheck,
    Smoothing,
    Content,
    Furstenberg,
    Slicing,
    Radial,
    VerifyAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    BottomRow,
    FullSquare,
    Diagonal,
    Cantor,
}

/// Numerical experiments on incidences, X-ray smoothing and dyadic content.
#[derive(Debug, Parser)]
#[command(name = "inclab", version)]
pub struct Cli {
    pub command: Command,
    /// Flat TOML file with any of the keys below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated scales, each a number or `2^-k`.
    #[arg(long, value_parser = parse_deltas)]
    pub deltas: Option<Deltas>,
    /// Worker threads; falls back to INCLAB_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Grid size of the spectral commands.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// JSON measure record used by `energy` instead of the generated suite.
    #[arg(long)]
    pub measure: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deltas(pub Vec<f64>);

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: inclab::Error| e.to_string())
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("2^") {
        Some(e) => e
            .parse::<i32>()
            .map(|k| 2f64.powi(k))
            .map_err(|e| format!("{s:?}: {e}"))?,
        None => s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?,
    };
    if !(v > 0.0 && v < 1.0) {
        return Err(format!("scale {s} is not in (0, 1)"));
    }
    Ok(v)
}

pub fn parse_deltas(s: &str) -> Result<Deltas, String> {
    let v: Vec<f64> = s.split(',').map(parse_delta).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty scale list".into());
    }
    Ok(Deltas(v))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    deltas: Option<Vec<f64>>,
    threads: Option<usize>,
    format: Option<Format>,
    s: Option<f64>,
    t: Option<f64>,
    tau: Option<f64>,
    sigma: Option<f64>,
    n: Option<usize>,
    fixture: Option<Fixture>,
    measure: Option<PathBuf>,
}

/// Resolved parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub n: Option<usize>,
    pub fixture: Option<Fixture>,
    pub measure: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolve(cli: Cli) -> Result<Self, String> {
        let file = match &cli.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        if let Some(c) = file.command {
            if c != cli.command {
                return Err(format!(
                    "config is for {c:?} but the command is {:?}",
                    cli.command
                ));
            }
        }
        let env_threads = match std::env::var("INCLAB_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("INCLAB_THREADS={v:?}: {e}"))?,
            ),
            Err(_) => None,
        };
        let deltas = match (cli.deltas, file.deltas) {
            (Some(d), _) => Some(d.0),
            (None, Some(d)) => {
                for &x in &d {
                    if !(x > 0.0 && x < 1.0) {
                        return Err(format!("scale {x} is not in (0, 1)"));
                    }
                }
                Some(d)
            }
            (None, None) => None,
        };
        let c = Self {
            command: cli.command,
            out: cli
                .out
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("inclab-out")),
            format: cli.format.or(file.format).unwrap_or_default(),
            seed: cli.seed.or(file.seed).unwrap_or(1),
            threads: cli.threads.or(file.threads).or(env_threads),
            deltas,
            s: cli.s.or(file.s),
            t: cli.t.or(file.t),
            tau: cli.tau.or(file.tau),
            sigma: cli.sigma.or(file.sigma),
            n: cli.n.or(file.n),
            fixture: cli.fixture.or(file.fixture),
            measure: cli.measure.or(file.measure),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), String> {
        if self.threads == Some(0) {
            return Err("threads must be positive".into());
        }
        if let Some(n) = self.n {
            if n < 16 || !n.is_power_of_two() {
                return Err(format!("grid size {n} is not a power of two at least 16"));
            }
        }
        for (name, v) in [
            ("s", self.s),
            ("t", self.t),
            ("tau", self.tau),
            ("sigma", self.sigma),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(format!("{name} = {v} is not finite"));
                }
            }
        }
        if self.measure.is_some() && self.command != Command::Energy {
            return Err("a measure file is only used by the energy command".into());
        }
        if self.fixture.is_some() && self.command != Command::Content {
            return Err("a fixture is only used by the content command".into());
        }
        Ok(())
    }
}

fn read_config(p: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas_accept_powers() {
        assert_eq!(parse_deltas("2^-5,0.25").unwrap().0, vec![1.0 / 32.0, 0.25]);
        assert!(parse_deltas("2").is_err());
        assert!(parse_deltas("2^x").is_err());
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
        let c: FileConfig = toml::from_str("t = 1.5\ndeltas = [0.5]\nformat = \"csv\"").unwrap();
        assert_eq!(c.t, Some(1.5));
        assert_eq!(c.format, Some(Format::Csv));
    }
}
