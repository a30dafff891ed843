//! Parameter resolution: command-line flags override config-file entries,
//! which override built-in defaults.

use crate::{Cli, CliError, Command};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use supercavity::{ScanMethod, SystemParams, DEFAULT_PEAK_THRESHOLD};

pub const DEFAULT_N_CAVITIES: usize = 31;
pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_XI: f64 = 1.0;
pub const DEFAULT_K_MIN: f64 = 0.02;
pub const DEFAULT_SAMPLES: usize = 1001;
pub const DEFAULT_MODE: usize = 4;
pub const DEFAULT_WINDOW: f64 = 0.05;

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub params: SystemParams,
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    pub method: ScanMethod,
    pub mode: usize,
    pub window: f64,
    pub threshold: f64,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub figure: Option<u32>,
    pub snapshot: ConfigSnapshot,
}

/// Serializable snapshot of the effective configuration; embedded as the
/// `config` object of JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub command: String,
    pub n_cavities: usize,
    pub eta: f64,
    pub xi: f64,
    pub atom_site: Option<usize>,
    pub omega_a: Option<f64>,
    pub g: Option<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    pub method: String,
    pub mode: usize,
    pub window: f64,
    pub threshold: f64,
    pub format: String,
    pub out: String,
    pub figure: Option<u32>,
}

/// Keys accepted in a config file: the long flag names without the leading
/// dashes.
const CONFIG_KEYS: &[&str] = &[
    "n-cavities",
    "atom-site",
    "omega-a",
    "eta",
    "xi",
    "g",
    "k-min",
    "k-max",
    "samples",
    "method",
    "out",
    "format",
    "figure",
    "mode",
    "window",
    "threshold",
];

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown config key {key:?}",
                path.display(),
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Flag value if given, otherwise the parsed config-file value.
fn pick<T: FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("config key {key}: cannot parse {raw:?}: {e}"))),
        None => Ok(None),
    }
}

fn parse_method(name: &str) -> Result<ScanMethod, CliError> {
    match name {
        "closed-form" => Ok(ScanMethod::ClosedForm),
        "direct" => Ok(ScanMethod::Direct),
        "two-level" => Err(CliError::Config(
            "the two-level backend is driven by the tla-compare command, not --method".into(),
        )),
        other => Err(CliError::Config(format!(
            "unknown method {other:?}; expected closed-form or direct"
        ))),
    }
}

fn parse_format(name: &str) -> Result<OutputFormat, CliError> {
    match name {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(CliError::Config(format!(
            "unknown format {other:?}; expected csv or json"
        ))),
    }
}

pub fn resolve(cli: Cli) -> Result<Resolved, CliError> {
    let file = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };

    let n_cavities = pick(cli.n_cavities, &file, "n-cavities")?.unwrap_or(DEFAULT_N_CAVITIES);
    let eta = pick(cli.eta, &file, "eta")?.unwrap_or(DEFAULT_ETA);
    let xi = pick(cli.xi, &file, "xi")?.unwrap_or(DEFAULT_XI);
    let atom_site = pick(cli.atom_site, &file, "atom-site")?;
    let omega_a = pick(cli.omega_a, &file, "omega-a")?;
    let g = pick(cli.g, &file, "g")?;
    let k_min = pick(cli.k_min, &file, "k-min")?.unwrap_or(DEFAULT_K_MIN);
    let k_max =
        pick(cli.k_max, &file, "k-max")?.unwrap_or(std::f64::consts::PI - DEFAULT_K_MIN);
    let samples = pick(cli.samples, &file, "samples")?.unwrap_or(DEFAULT_SAMPLES);
    let method_name =
        pick(cli.method, &file, "method")?.unwrap_or_else(|| "closed-form".to_string());
    let mode = pick(cli.mode, &file, "mode")?.unwrap_or(DEFAULT_MODE);
    let window = pick(cli.window, &file, "window")?.unwrap_or(DEFAULT_WINDOW);
    let threshold = pick(cli.threshold, &file, "threshold")?.unwrap_or(DEFAULT_PEAK_THRESHOLD);
    let figure = pick(cli.figure, &file, "figure")?;
    let out = match pick(cli.out, &file, "out")? {
        Some(path) => path,
        None => return Err(CliError::Config("missing required --out".into())),
    };
    let format_name = match pick(cli.format, &file, "format")? {
        Some(name) => name,
        None => {
            return Err(CliError::Config(
                "missing required --format (csv or json)".into(),
            ))
        }
    };

    let method = parse_method(&method_name)?;
    let format = parse_format(&format_name)?;

    let params = match atom_site {
        Some(site) => {
            let omega_a = omega_a.ok_or_else(|| {
                CliError::Config("--atom-site requires --omega-a".into())
            })?;
            let g = g.ok_or_else(|| CliError::Config("--atom-site requires --g".into()))?;
            SystemParams::with_atom(n_cavities, eta, site, omega_a, g)?
        }
        None => {
            if omega_a.is_some() || g.is_some() {
                return Err(CliError::Config(
                    "--omega-a/--g make no sense without --atom-site".into(),
                ));
            }
            SystemParams::empty(n_cavities, eta)?
        }
    };
    let params = params.scaled_xi(xi)?;

    let snapshot = ConfigSnapshot {
        command: cli.command.name().to_string(),
        n_cavities,
        eta,
        xi,
        atom_site,
        omega_a,
        g,
        k_min,
        k_max,
        samples,
        method: method_name,
        mode,
        window,
        threshold,
        format: format_name,
        out: out.display().to_string(),
        figure,
    };

    Ok(Resolved {
        command: cli.command,
        params,
        k_min,
        k_max,
        samples,
        method,
        mode,
        window,
        threshold,
        out,
        format,
        figure,
        snapshot,
    })
}
