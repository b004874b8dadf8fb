//! Flat `key = value` experiment configs.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a comment. Keys may appear once. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RnmpBound,
    EmbedVerify,
    RecoverSweep,
    PhaseStability,
    FreimanSearch,
    DemodSelftest,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::RnmpBound,
        Command::EmbedVerify,
        Command::RecoverSweep,
        Command::PhaseStability,
        Command::FreimanSearch,
        Command::DemodSelftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::RnmpBound => "rnmp-bound",
            Command::EmbedVerify => "embed-verify",
            Command::RecoverSweep => "recover-sweep",
            Command::PhaseStability => "phase-stability",
            Command::FreimanSearch => "freiman-search",
            Command::DemodSelftest => "demod-selftest",
        }
    }

    /// Keys accepted besides `command`, `seed` and `format`.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::RnmpBound => &["n", "s", "f", "trials", "det_budget"],
            Command::EmbedVerify => &[
                "n", "m", "s", "f", "kappa", "ensemble", "bilinear", "set", "trials", "delta", "c2", "eps_hat",
                "rho", "lambda", "c",
            ],
            Command::RecoverSweep => &[
                "n1", "n2", "s", "f", "m_values", "trials", "threshold", "max_iterations", "tolerance", "penalty",
            ],
            Command::PhaseStability => &["n", "trials", "variant"],
            Command::FreimanSearch => &["elements", "budget", "d"],
            Command::DemodSelftest => &["n", "m"],
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(ConfigError(format!("format must be csv or json, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A parsed config: the command plus validated raw values, kept for the
/// report echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub format: Format,
    values: BTreeMap<String, String>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError(format!("invalid value '{raw}' for key '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(|p| parse_value(key, p.trim()))
        .collect::<Result<Vec<T>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(ConfigError(format!("empty list for key '{key}'")))
            } else {
                Ok(v)
            }
        })
}

const ENSEMBLES: [&str; 4] = ["gaussian", "universal-demodulator", "partial-circulant", "identity"];
const BILINEAR: [&str; 4] = ["circular-convolution", "zero-padded-convolution", "spreading", "none"];
const SETS: [&str; 5] = [
    "sparse-vectors",
    "sparse-rank-one",
    "sparse-rank-one-diff",
    "sparse-low-rank",
    "symmetric-quadratic",
];
const VARIANTS: [&str; 2] = ["padded", "prime"];

fn check_type(key: &str, raw: &str) -> Result<(), ConfigError> {
    let one_of = |allowed: &[&str]| {
        if allowed.contains(&raw) {
            Ok(())
        } else {
            Err(ConfigError(format!("key '{key}' must be one of {}, got '{raw}'", allowed.join(", "))))
        }
    };
    match key {
        "seed" => parse_value::<u64>(key, raw).map(drop),
        "budget" => parse_value::<u64>(key, raw).map(drop),
        "n" | "m" | "n1" | "n2" | "s" | "f" | "kappa" | "trials" | "det_budget" | "max_iterations" | "d" => {
            parse_value::<usize>(key, raw).map(drop)
        }
        "delta" | "c2" | "eps_hat" | "rho" | "lambda" | "c" | "threshold" | "tolerance" | "penalty" => {
            let v: f64 = parse_value(key, raw)?;
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError(format!("key '{key}' must be finite")))
            }
        }
        "m_values" => parse_list::<usize>(key, raw).map(drop),
        "elements" => parse_list::<i64>(key, raw).map(drop),
        "format" => raw.parse::<Format>().map(drop),
        "ensemble" => one_of(&ENSEMBLES),
        "bilinear" => one_of(&BILINEAR),
        "set" => one_of(&SETS),
        "variant" => one_of(&VARIANTS),
        _ => Err(ConfigError(format!("unknown key '{key}'"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut command = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError(format!("line {}: empty key or value", lineno + 1)));
            }
            if key == "command" {
                if command.is_some() {
                    return Err(ConfigError("duplicate key 'command'".into()));
                }
                command = Some(value.parse::<Command>()?);
                continue;
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError(format!("duplicate key '{key}'")));
            }
        }
        let command = command.ok_or_else(|| ConfigError("missing key 'command'".into()))?;
        for (k, v) in &values {
            let allowed = matches!(k.as_str(), "seed" | "format") || command.keys().contains(&k.as_str());
            if !allowed {
                return Err(ConfigError(format!("unknown key '{k}' for command {}", command.name())));
            }
            check_type(k, v)?;
        }
        let seed = values.get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(0);
        let format = values
            .get("format")
            .map(|v| v.parse())
            .transpose()?
            .unwrap_or(Format::Json);
        Ok(Self {
            command,
            seed,
            format,
            values,
        })
    }

    /// Config with the given command and no other keys.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            format: Format::Json,
            values: BTreeMap::new(),
        }
    }

    /// Sets a key after validating it like [`ExperimentConfig::parse`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        if !matches!(key, "seed" | "format") && !self.command.keys().contains(&key) {
            return Err(ConfigError(format!("unknown key '{key}' for command {}", self.command.name())));
        }
        check_type(key, value)?;
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "format" => self.format = value.parse()?,
            _ => {}
        }
        self.values.insert(key.into(), value.into());
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.values.insert("seed".into(), seed.to_string());
    }

    pub fn override_format(&mut self, format: Format) {
        self.format = format;
        let name = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.values.insert("format".into(), name.into());
    }

    /// Effective config echo: the command, seed, format and every given key.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut out = self.values.clone();
        out.insert("command".into(), self.command.name().into());
        out.insert("seed".into(), self.seed.to_string());
        out.entry("format".into()).or_insert_with(|| match self.format {
            Format::Csv => "csv".into(),
            Format::Json => "json".into(),
        });
        out
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.values.get(key).map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn usize_opt(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|v| v.parse().expect("validated"))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> u64 {
        self.values.get(key).map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn f64_opt(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|v| v.parse().expect("validated"))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.values.get(key).map_or(default, String::as_str)
    }

    pub fn usize_list(&self, key: &str) -> Option<Vec<usize>> {
        self.values.get(key).map(|v| parse_list(key, v).expect("validated"))
    }

    pub fn i64_list(&self, key: &str) -> Option<Vec<i64>> {
        self.values.get(key).map(|v| parse_list(key, v).expect("validated"))
    }
}
