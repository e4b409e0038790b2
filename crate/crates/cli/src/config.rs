//! Run configuration. Each subcommand resolves its config as
//! defaults < `--config` file < command-line flags, then deserializes strictly.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use weylkit::level_set::{EstimatorKind, DEFAULT_GRID_LIMIT, DEFAULT_SAMPLES};
use weylkit::mean_value::Method;

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "WEYLKIT_OUT";

/// Options that steer execution but never change results; they are not hashed.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = OUT_ENV, default_value = "weylkit-out")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long)]
    pub parallelism: Option<usize>,
}

fn overlay(base: &mut Map<String, Value>, layer: Value, origin: &str) -> CliResult<()> {
    match layer {
        Value::Object(m) => {
            base.extend(m);
            Ok(())
        }
        Value::Null => Ok(()),
        _ => Err(CliError::Usage(format!("{origin} must be a JSON object"))),
    }
}

pub fn read_config_file(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Merge `defaults`, the optional file, and the flags that were set.
pub fn resolve<C: DeserializeOwned, F: Serialize>(
    defaults: Value,
    file: Option<&Path>,
    flags: &F,
) -> CliResult<C> {
    let mut merged = Map::new();
    overlay(&mut merged, defaults, "defaults")?;
    if let Some(path) = file {
        overlay(
            &mut merged,
            read_config_file(path)?,
            &path.display().to_string(),
        )?;
    }
    let flags = serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))?;
    overlay(&mut merged, flags, "flags")?;
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SumEvalArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// Degree d ≥ 2
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    /// Length N ≥ 1
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Phase t as a/q or a decimal
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    /// Phase x as a/q or a decimal
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    /// Also write a JSON-lines record
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub record: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumEvalConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub t: String,
    pub x: String,
    pub record: bool,
}

impl SumEvalConfig {
    pub fn defaults() -> Value {
        json!({"d": 2, "x": "0", "record": false})
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Smallest modulus (default ceil(N^{d/2}))
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_lo: Option<u64>,
    /// Largest modulus (default N^d)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_hi: Option<u64>,
    /// Sample at most this many primes per dyadic block instead of all
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes_per_block: Option<usize>,
    /// Sample at most this many residues per prime instead of all
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residues_per_prime: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRunConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub q_lo: Option<u64>,
    pub q_hi: Option<u64>,
    pub primes_per_block: Option<usize>,
    pub residues_per_prime: Option<usize>,
    pub seed: u64,
}

impl ScanRunConfig {
    pub fn defaults() -> Value {
        json!({"d": 2, "q_lo": null, "q_hi": null, "primes_per_block": null, "residues_per_prime": null, "seed": 0})
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeanValueArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Moment parameter; count and quadrature need an integer
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Comma-separated methods: count, quadrature, monte_carlo
    #[arg(long = "method", value_delimiter = ',', value_parser = parse_method)]
    #[serde(rename = "methods", skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    /// Monte Carlo sample count
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.trim() {
        "count" => Ok(Method::Count),
        "quadrature" => Ok(Method::Quadrature),
        "monte_carlo" | "monte-carlo" | "mc" => Ok(Method::MonteCarlo),
        other => Err(format!(
            "unknown method `{other}` (expected count, quadrature or monte_carlo)"
        )),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanValueConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub p: f64,
    pub methods: Vec<Method>,
    pub samples: u64,
    pub seed: u64,
}

impl MeanValueConfig {
    pub fn defaults() -> Value {
        json!({"d": 2, "methods": ["count"], "samples": DEFAULT_SAMPLES, "seed": 0})
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExponentFitArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    /// Comma-separated increasing lengths, e.g. 8,16,32,64
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentFitConfig {
    pub d: u32,
    pub p: u32,
    #[serde(rename = "N")]
    pub n: Vec<u64>,
}

impl ExponentFitConfig {
    pub fn defaults() -> Value {
        json!({"d": 2})
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelVerifyArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// Comma-separated scales Q
    #[arg(long = "Q", value_delimiter = ',')]
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Largest frequency in the Φ̂ sweep
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u64>,
    /// Kernel degree for the K̂_2 sweep
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    /// Kernel length for the K̂_2 sweep
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// n2 window for the K̂_2 sweep as lo,hi (default 0,2N^d)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_window: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelVerifyConfig {
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub kmax: u64,
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub n2_window: Option<(i64, i64)>,
}

impl KernelVerifyConfig {
    pub fn defaults() -> Value {
        json!({"Q": [50.0], "kmax": 10_000, "d": 2, "N": 3, "n2_window": null})
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LevelSetArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Comma-separated levels λ ≥ 0
    #[arg(long = "lambda", value_delimiter = ',')]
    #[serde(rename = "lambdas", skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// grid or monte_carlo
    #[arg(long, value_parser = parse_estimator)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mx: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mt: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Grid points above which Monte Carlo is used instead
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_limit: Option<u64>,
    /// Fit the decay slope over lo,hi ⊂ (√N, N]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<f64>>,
    /// Levels used in the decay fit
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_levels: Option<usize>,
    /// ε in the large-level threshold and the level-to-scale helper
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    match s {
        "grid" => Ok(EstimatorKind::Grid),
        "monte_carlo" | "monte-carlo" | "mc" => Ok(EstimatorKind::MonteCarlo),
        other => Err(format!(
            "unknown estimator `{other}` (expected grid or monte_carlo)"
        )),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub lambdas: Vec<f64>,
    pub estimator: EstimatorKind,
    pub mx: Option<u64>,
    pub mt: Option<u64>,
    pub samples: u64,
    pub seed: u64,
    pub grid_limit: u64,
    pub window: Option<(f64, f64)>,
    pub window_levels: usize,
    pub epsilon: f64,
}

impl LevelSetConfig {
    pub fn defaults() -> Value {
        json!({
            "d": 2,
            "estimator": "grid",
            "mx": null,
            "mt": null,
            "samples": DEFAULT_SAMPLES,
            "seed": 0,
            "grid_limit": DEFAULT_GRID_LIMIT as u64,
            "window": null,
            "window_levels": 8,
            "epsilon": 0.1,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Comma-separated levels λ ≥ 0
    #[arg(long = "lambda", value_delimiter = ',')]
    #[serde(rename = "lambdas", skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Coarse grid size in x (default 4(2N+1))
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mx: Option<u64>,
    /// Coarse grid size in t (default 4(2N^d+1))
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mt: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub lambdas: Vec<f64>,
    pub mx: Option<u64>,
    pub mt: Option<u64>,
}

impl AuditConfig {
    pub fn defaults() -> Value {
        json!({"d": 2, "mx": null, "mt": null})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn common() -> Common {
        Common {
            config: None,
            out: PathBuf::from("unused"),
            parallelism: None,
        }
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"N": 5, "x": "1/3", "d": 3}}"#).unwrap();
        let flags = SumEvalArgs {
            common: common(),
            d: Some(4),
            n: None,
            t: Some("1/7".into()),
            x: None,
            record: false,
        };
        let cfg: SumEvalConfig =
            resolve(SumEvalConfig::defaults(), Some(file.path()), &flags).unwrap();
        assert_eq!(
            (cfg.d, cfg.n, cfg.t.as_str(), cfg.x.as_str(), cfg.record),
            (4, 5, "1/7", "1/3", false)
        );
    }

    #[test]
    fn missing_and_unknown_fields_are_usage_errors() {
        let flags = SumEvalArgs {
            common: common(),
            d: None,
            n: None,
            t: Some("0".into()),
            x: None,
            record: false,
        };
        let err = resolve::<SumEvalConfig, _>(SumEvalConfig::defaults(), None, &flags).unwrap_err();
        assert!(
            matches!(err, CliError::Usage(ref m) if m.contains("N")),
            "{err}"
        );
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"N": 5, "bogus": 1}}"#).unwrap();
        let err = resolve::<SumEvalConfig, _>(SumEvalConfig::defaults(), Some(file.path()), &flags)
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn method_names() {
        assert_eq!(parse_method("mc"), Ok(Method::MonteCarlo));
        assert!(parse_method("fft").is_err());
    }
}
