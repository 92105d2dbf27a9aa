//! Monte Carlo harness: ratio estimates, oscillation checkpoints and the
//! distributional diagnostics.

mod closeness;
mod diagnostics;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::process::{draw_shift_indices, ProcessSpec};
use crate::rng::{derive_seed, streams, DEFAULT_MASTER_SEED};
use crate::schedule::{calibrate_schedule, Calibrated, CalibrationOptions, Schedule};
use crate::stats::mean_variance;
use crate::torus::Metric;
use crate::tsp::SolverConfig;

pub use closeness::{closeness_diagnostic, ClosenessReport, CLOSENESS_BIN_CAP};
pub use diagnostics::{
    limit_gap_report, logtsp_diagnostic, LimitGap, LogTspEntry, SequenceGenerator,
};
pub use output::{append_records_csv, read_records_csv, RunManifest, VERSION};

/// Few's bound `L ≤ 3√n` with 20% slack for heuristic overshoot.
pub const FEW_SANITY_CAP: f64 = 3.0 * 1.2;
/// Largest `n` an experiment will hand to the heuristic.
pub const DEFAULT_MAX_N: usize = 2_000_000;

fn default_name() -> String {
    "experiment".into()
}
fn default_spec() -> ProcessSpec {
    ProcessSpec::iid(0)
}
fn default_metric() -> Metric {
    Metric::Torus
}
fn default_reps() -> usize {
    20
}
fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}
fn default_max_n() -> usize {
    DEFAULT_MAX_N
}

/// Everything one experiment run needs. The spec's own `base_seed` is not
/// used; every replication derives its seeds from `master_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_spec")]
    pub spec: ProcessSpec,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Keep the spec's shift indices instead of drawing fresh ones per
    /// replication.
    #[serde(default)]
    pub pin_shifts: bool,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            spec: default_spec(),
            metric: default_metric(),
            solver: SolverConfig::default(),
            n_values: Vec::new(),
            reps: default_reps(),
            master_seed: default_seed(),
            pin_shifts: false,
            max_n: default_max_n(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.reps == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::config("n_values", "must not be empty"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_values", "must be strictly increasing"));
        }
        if self.n_values[0] == 0 {
            return Err(Error::config("n_values", "counts must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn check_feasible(&self, n: usize) -> Result<()> {
        let cap = self.solver.cap().min(self.max_n);
        if n > cap {
            return Err(Error::TooLarge {
                solver: self.solver.method().name(),
                n,
                cap,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckpointKind {
    Iid,
    Dip(usize),
    Recover(usize),
    Plain,
}

impl fmt::Display for CheckpointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointKind::Iid => f.write_str("iid"),
            CheckpointKind::Dip(j) => write!(f, "dip({j})"),
            CheckpointKind::Recover(j) => write!(f, "recover({j})"),
            CheckpointKind::Plain => f.write_str("plain"),
        }
    }
}

impl FromStr for CheckpointKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("checkpoint_kind", format!("unknown kind `{s}`"));
        match s {
            "iid" => return Ok(CheckpointKind::Iid),
            "plain" => return Ok(CheckpointKind::Plain),
            _ => {}
        }
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let j: usize = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        match head {
            "dip" => Ok(CheckpointKind::Dip(j)),
            "recover" => Ok(CheckpointKind::Recover(j)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for CheckpointKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CheckpointKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of experiment output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub experiment: String,
    pub checkpoint_kind: CheckpointKind,
    /// Stage of the sampled process.
    pub j: usize,
    pub n: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
    pub reps: usize,
    pub metric: Metric,
    pub method: String,
    pub seed: u64,
}

/// Per-replication ratios `L(X^(j)[0:n-1])/√n` and their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub n: usize,
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

/// Spec for replication `r`: fresh base seed, fresh shift indices unless
/// pinned.
pub fn replication_spec(
    spec: &ProcessSpec,
    master_seed: u64,
    r: u64,
    pin_shifts: bool,
) -> ProcessSpec {
    let spec = spec.reseeded(derive_seed(master_seed, streams::BASE, r));
    if pin_shifts {
        spec
    } else {
        draw_shift_indices(&spec, derive_seed(master_seed, streams::SHIFTS, r))
    }
}

/// Run `reps` independent replications of `L(X^(j)[0:n-1])/√n`.
/// Replications run in parallel; results do not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn replicate_ratio(
    spec: &ProcessSpec,
    j: usize,
    n: usize,
    reps: usize,
    master_seed: u64,
    metric: Metric,
    solver: &SolverConfig,
    pin_shifts: bool,
) -> Result<RatioSample> {
    if n == 0 || reps == 0 {
        return Err(Error::Precondition("n and reps must be positive".into()));
    }
    spec.truncated(j)?;
    let ratios: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let spec_r = replication_spec(spec, master_seed, r, pin_shifts);
            let pts = spec_r.prefix(j, n)?;
            let solver_r = solver.with_seed(derive_seed(master_seed, streams::SOLVER, r));
            Ok(solver_r.solve(&pts, metric)?.length / (n as f64).sqrt())
        })
        .collect::<Result<_>>()?;
    let (mean, var) = mean_variance(&ratios);
    let stderr = (var / reps as f64).sqrt();
    if mean > FEW_SANITY_CAP {
        return Err(Error::SanityCap {
            ratio: mean,
            n,
            cap: FEW_SANITY_CAP,
        });
    }
    Ok(RatioSample {
        n,
        ratios,
        mean,
        stderr,
    })
}

fn record(
    config: &ExperimentConfig,
    kind: CheckpointKind,
    j: usize,
    s: &RatioSample,
) -> EstimateRecord {
    EstimateRecord {
        experiment: config.name.clone(),
        checkpoint_kind: kind,
        j,
        n: s.n,
        mean_ratio: s.mean,
        stderr: s.stderr,
        reps: s.ratios.len(),
        metric: config.metric,
        method: config.solver.method().name().to_string(),
        seed: config.master_seed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    pub records: Vec<EstimateRecord>,
}

/// Mean ratios at every `n` of the config on the deepest stage of the spec;
/// `beta_hat` is the value at the largest `n`.
pub fn estimate_beta(config: &ExperimentConfig) -> Result<BetaEstimate> {
    config.validate()?;
    let j = config.spec.depth();
    let kind = if j == 0 {
        CheckpointKind::Iid
    } else {
        CheckpointKind::Plain
    };
    let mut records = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        config.check_feasible(n)?;
        let s = replicate_ratio(
            &config.spec,
            j,
            n,
            config.reps,
            config.master_seed,
            config.metric,
            &config.solver,
            config.pin_shifts,
        )?;
        records.push(record(config, kind, j, &s));
    }
    let beta_hat = records.last().map(|r| r.mean_ratio).unwrap_or(f64::NAN);
    Ok(BetaEstimate { beta_hat, records })
}

/// A checkpoint to evaluate: the count comes from `kind`, the points from
/// `X^(sample_stage)[0:n-1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub sample_stage: usize,
}

impl Checkpoint {
    pub fn dip(j: usize) -> Self {
        Self {
            kind: CheckpointKind::Dip(j),
            sample_stage: j,
        }
    }

    pub fn recover(j: usize) -> Self {
        Self {
            kind: CheckpointKind::Recover(j),
            sample_stage: j,
        }
    }

    pub fn sampled_from(self, stage: usize) -> Self {
        Self {
            sample_stage: stage,
            ..self
        }
    }

    /// `recover(j)` at `⌊N_j/j⌋`, `dip(j)` at `2jN_j`.
    pub fn n(&self, spec: &ProcessSpec) -> Result<usize> {
        let j = match self.kind {
            CheckpointKind::Dip(j) | CheckpointKind::Recover(j) => j,
            _ => {
                return Err(Error::config(
                    "checkpoint_kind",
                    "only dip and recover checkpoints have a count",
                ))
            }
        };
        if j == 0 || j > spec.depth() {
            return Err(Error::StageOutOfRange {
                j,
                stages: spec.depth(),
            });
        }
        let big_n = spec.stages[j - 1].block_len as usize;
        Ok(match self.kind {
            CheckpointKind::Dip(_) => 2 * j * big_n,
            _ => (big_n / j).max(1),
        })
    }

    /// `recover(j)` then `dip(j)` for every stage.
    pub fn standard(spec: &ProcessSpec) -> Vec<Self> {
        (1..=spec.depth())
            .flat_map(|j| [Self::recover(j), Self::dip(j)])
            .collect()
    }
}

/// Ratio estimates at the given checkpoints (the standard set when
/// `checkpoints` is empty).
pub fn oscillation_experiment(
    config: &ExperimentConfig,
    checkpoints: &[Checkpoint],
) -> Result<Vec<EstimateRecord>> {
    config.spec.validate()?;
    if config.reps == 0 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    let standard;
    let checkpoints = if checkpoints.is_empty() {
        standard = Checkpoint::standard(&config.spec);
        &standard[..]
    } else {
        checkpoints
    };
    let mut planned = Vec::with_capacity(checkpoints.len());
    for cp in checkpoints {
        let n = cp.n(&config.spec)?;
        config.check_feasible(n)?;
        planned.push((cp, n));
    }
    let mut records = Vec::with_capacity(planned.len());
    for (cp, n) in planned {
        let s = replicate_ratio(
            &config.spec,
            cp.sample_stage,
            n,
            config.reps,
            config.master_seed,
            config.metric,
            &config.solver,
            config.pin_shifts,
        )?;
        records.push(record(config, cp.kind, cp.sample_stage, &s));
    }
    Ok(records)
}

/// Calibrate one more stage on top of `spec` using the configured solver,
/// metric and seed (shift indices are drawn fresh, so the estimator sees the
/// stationary process). Returns the extended spec with the new stage pinned.
pub fn calibrate_next_stage(
    config: &ExperimentConfig,
    spec: &ProcessSpec,
    schedule: &mut Schedule,
    beta_hat: f64,
    opts: &CalibrationOptions,
) -> Result<(ProcessSpec, Calibrated)> {
    let j = spec.depth() + 1;
    let master = derive_seed(config.master_seed, streams::ESTIMATOR, j as u64);
    let estimator = |s: &ProcessSpec, stage: usize, n: u64, reps: usize| -> Result<f64> {
        let n = n as usize;
        config.check_feasible(n)?;
        Ok(replicate_ratio(
            s,
            stage,
            n,
            reps,
            master,
            config.metric,
            &config.solver,
            false,
        )?
        .mean)
    };
    let cal = calibrate_schedule(spec, schedule, j, estimator, beta_hat, opts)?;
    let extended = spec.clone().with_stage(cal.stage()?);
    Ok((extended, cal))
}
