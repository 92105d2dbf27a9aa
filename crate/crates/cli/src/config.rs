use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use twincity::experiments::{Checkpoint, ExperimentConfig};
use twincity::schedule::CalibrationOptions;
use twincity::stats::DiscrepancyMode;

use crate::error::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub tsp: TspSection,
    #[serde(default)]
    pub oscillate: OscillateSection,
    #[serde(default)]
    pub closeness: ClosenessSection,
    #[serde(default)]
    pub discrepancy: DiscrepancySection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    /// Defaults to the deepest stage of the spec.
    pub stage: Option<usize>,
    pub start: i64,
    pub draw_shifts: bool,
    pub format: Format,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            n: 10,
            stage: None,
            start: 0,
            draw_shifts: false,
            format: Format::Json,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TspSection {
    pub instance: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillateSection {
    /// Stages to append by calibration before measuring.
    pub calibrate_stages: usize,
    /// `η_j` for every stage (existing and calibrated); geometric when empty.
    pub etas: Vec<f64>,
    /// Reference ratio; estimated from the iid process at `beta_n` when absent.
    pub beta_hat: Option<f64>,
    pub beta_n: usize,
    pub calibration: CalibrationOptions,
    /// Checkpoints to evaluate; recover(j) and dip(j) for every stage when empty.
    pub checkpoints: Vec<Checkpoint>,
}

impl Default for OscillateSection {
    fn default() -> Self {
        Self {
            calibrate_stages: 0,
            etas: Vec::new(),
            beta_hat: None,
            beta_n: 5000,
            calibration: CalibrationOptions::default(),
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosenessSection {
    pub stage: usize,
    pub m: usize,
    pub cells: usize,
}

impl Default for ClosenessSection {
    fn default() -> Self {
        Self {
            stage: 1,
            m: 2,
            cells: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Kronecker,
    Iid,
    Process,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscrepancySection {
    pub generator: GeneratorKind,
    pub n: usize,
    pub mode: DiscrepancyMode,
    pub resolution: usize,
    pub phi1: f64,
    pub phi2: f64,
}

impl Default for DiscrepancySection {
    fn default() -> Self {
        Self {
            generator: GeneratorKind::Kronecker,
            n: 4096,
            mode: DiscrepancyMode::GridApprox,
            resolution: 64,
            phi1: std::f64::consts::SQRT_2,
            phi2: 3f64.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub only: Vec<usize>,
}

/// Shipped defaults, one per subcommand.
pub fn builtin(subcommand: &str) -> &'static str {
    match subcommand {
        "beta" => include_str!("../../../configs/beta.json"),
        "oscillate" => include_str!("../../../configs/oscillate.json"),
        "closeness" => include_str!("../../../configs/closeness.json"),
        "discrepancy" => include_str!("../../../configs/discrepancy.json"),
        _ => "{}",
    }
}

pub fn parse_value(text: &str, origin: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

/// Set `path` (dot separated; numeric segments index arrays) to `value`,
/// creating objects along the way.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad config path `{path}`")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    CliError::Config(format!("`{path}`: `{part}` is not an array index"))
                })?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("`{path}`: index {idx} out of range (length {len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(CliError::Config(format!(
                    "`{path}`: `{part}` is not inside an object or array"
                )))
            }
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Parse the right-hand side of `--set`: JSON when it parses, a string
/// otherwise.
pub fn loose_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub fn finish(value: Value) -> Result<CliConfig, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("field `{path}`: {}", e.into_inner()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dotted_paths() {
        let mut v = json!({"experiment": {"spec": {"stages": [{"epsilon": 0.1}]}}});
        set_path(&mut v, "experiment.spec.stages.0.epsilon", json!(0.2)).unwrap();
        set_path(&mut v, "sample.n", json!(7)).unwrap();
        assert_eq!(v["experiment"]["spec"]["stages"][0]["epsilon"], json!(0.2));
        assert_eq!(v["sample"]["n"], json!(7));
        assert!(set_path(&mut v, "experiment.spec.stages.3.epsilon", json!(1)).is_err());
        assert!(set_path(&mut v, "sample..n", json!(1)).is_err());
    }

    #[test]
    fn builtins_parse() {
        for sub in ["beta", "oscillate", "closeness", "discrepancy", "sample"] {
            finish(parse_value(builtin(sub), sub).unwrap()).unwrap();
        }
    }

    #[test]
    fn errors_name_the_field() {
        let err = finish(json!({"experiment": {"reps": "many"}})).unwrap_err();
        assert!(err.to_string().contains("experiment.reps"), "{err}");
        let err = finish(json!({"sample": {"nn": 3}})).unwrap_err();
        assert!(err.to_string().contains("nn"), "{err}");
    }
}
