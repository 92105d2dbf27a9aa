use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::process::{kronecker_sequence, ProcessSpec};
use crate::torus::{Metric, TorusPoint};
use crate::tsp::{solve_heuristic, HeuristicOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitGap {
    pub j: usize,
    pub n: u64,
    /// `3 n^{3/2} Σ_k 1/N_{j+k}`.
    pub bound: f64,
    /// Part of the sum from the block lengths supplied.
    pub known_sum: f64,
    /// Part of the sum from extrapolated block lengths.
    pub tail_sum: f64,
    /// `bound / √n`, the gap on the ratio scale.
    pub ratio_gap: f64,
    pub tolerance: f64,
    pub certified: bool,
}

/// Bound on `|E L(X^(j)[0:n-1]) − E L(X*[0:n-1])|` from the block lengths
/// `N_{j+1}, N_{j+2}, …` in `tail`. With `extrapolate`, stages past the end
/// of `tail` are assumed to grow at the slowest rate the schedule allows,
/// `N_{i} = i²·N_{i-1}`, which makes the bound conservative; without it the
/// listed stages are taken to be the last ones.
pub fn limit_gap_report(
    tail: &[u64],
    j: usize,
    n: u64,
    extrapolate: bool,
    tolerance: f64,
) -> LimitGap {
    let known_sum: f64 = tail.iter().map(|&b| 1.0 / b as f64).sum();
    let mut tail_sum = 0.0;
    if extrapolate {
        if let Some(&last) = tail.last() {
            let mut stage = j + tail.len();
            let mut len = last as f64;
            loop {
                stage += 1;
                len *= (stage * stage) as f64;
                let term = 1.0 / len;
                tail_sum += term;
                if !len.is_finite() || term <= 1e-18 * (known_sum + tail_sum) {
                    break;
                }
            }
        }
    }
    let nf = n as f64;
    let bound = 3.0 * nf.powf(1.5) * (known_sum + tail_sum);
    let ratio_gap = if n == 0 { 0.0 } else { bound / nf.sqrt() };
    LimitGap {
        j,
        n,
        bound,
        known_sum,
        tail_sum,
        ratio_gap,
        tolerance,
        certified: ratio_gap <= tolerance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceGenerator {
    Kronecker { phi1: f64, phi2: f64 },
    Process { spec: ProcessSpec, j: usize },
}

impl SequenceGenerator {
    pub fn default_kronecker() -> Self {
        SequenceGenerator::Kronecker {
            phi1: std::f64::consts::SQRT_2,
            phi2: 3f64.sqrt(),
        }
    }

    pub fn points(&self, n: usize) -> Result<Vec<TorusPoint>> {
        match self {
            SequenceGenerator::Kronecker { phi1, phi2 } => Ok(kronecker_sequence(*phi1, *phi2, n)),
            SequenceGenerator::Process { spec, j } => spec.prefix(*j, n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogTspEntry {
    pub n: usize,
    pub length: f64,
    /// `log L / log n`; `None` when undefined (`n = 1` or `L = 0`).
    pub log_ratio: Option<f64>,
}

/// `log L(x_1..x_n) / log n` on the first `n` points of a sequence.
pub fn logtsp_diagnostic(
    generator: &SequenceGenerator,
    n_values: &[usize],
    metric: Metric,
    opts: &HeuristicOptions,
) -> Result<Vec<LogTspEntry>> {
    let max = n_values.iter().copied().max().unwrap_or(0);
    let pts = generator.points(max)?;
    Ok(n_values
        .iter()
        .map(|&n| {
            let length = solve_heuristic(&pts[..n], metric, opts).length;
            let log_ratio = (n > 1 && length > 0.0).then(|| length.ln() / (n as f64).ln());
            LogTspEntry {
                n,
                length,
                log_ratio,
            }
        })
        .collect())
}
