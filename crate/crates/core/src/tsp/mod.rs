//! Shortest open paths through a point set.
//!
//! Every solver here minimizes the length of a Hamiltonian *path* with free
//! endpoints, never a closed tour. Lengths are measured under one of the
//! three [`Metric`]s.

mod brute;
mod exact;
mod heuristic;
mod loops;
mod neighbors;
mod partition;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Metric, TorusPoint};

pub use brute::{solve_brute, BRUTE_CAP};
pub use exact::{solve_exact, solve_exact_capped, EXACT_CAP};
pub use heuristic::{solve_heuristic, HeuristicOptions};
pub use loops::{loop_augmented_path, LoopAugmented};
pub use neighbors::SpatialGrid;
pub use partition::{
    partition_lower_diagnostic, solve_partition, LowerDiagnostic, PartitionOptions,
    PartitionSolution,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Brute,
    Exact,
    Heuristic,
    Partition,
    LoopAugmented,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Exact => "exact",
            Method::Heuristic => "heuristic",
            Method::Partition => "partition",
            Method::LoopAugmented => "loop_augmented",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A path through every input point, in visiting order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub order: Vec<usize>,
    pub length: f64,
    pub method: Method,
    pub metric: Metric,
    pub optimal: bool,
}

impl PathSolution {
    pub(crate) fn build(
        points: &[TorusPoint],
        order: Vec<usize>,
        method: Method,
        metric: Metric,
    ) -> Self {
        let length = length_unchecked(points, &order, metric);
        Self {
            order,
            length,
            method,
            metric,
            optimal: matches!(method, Method::Brute | Method::Exact),
        }
    }

    /// Recompute the length from `points` and check it against the stored one.
    pub fn verify(&self, points: &[TorusPoint]) -> Result<()> {
        let recomputed = path_length(points, &self.order, self.metric)?;
        if (recomputed - self.length).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "stored length {} differs from recomputed {recomputed}",
                self.length
            )));
        }
        Ok(())
    }
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Sum of the `n-1` consecutive distances along `order`.
pub fn path_length(points: &[TorusPoint], order: &[usize], metric: Metric) -> Result<f64> {
    if !is_permutation(order, points.len()) {
        return Err(Error::NotAPermutation { n: points.len() });
    }
    Ok(length_unchecked(points, order, metric))
}

pub(crate) fn length_unchecked(points: &[TorusPoint], order: &[usize], metric: Metric) -> f64 {
    order
        .windows(2)
        .map(|w| metric.distance(points[w[0]], points[w[1]]))
        .sum()
}

/// Which solver an experiment uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverConfig {
    Brute,
    Exact {
        #[serde(default = "default_exact_cap")]
        cap: usize,
    },
    Heuristic(#[serde(default)] HeuristicOptions),
    Partition(#[serde(default)] PartitionOptions),
}

fn default_exact_cap() -> usize {
    EXACT_CAP
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::Heuristic(HeuristicOptions::default())
    }
}

impl SolverConfig {
    pub fn method(&self) -> Method {
        match self {
            SolverConfig::Brute => Method::Brute,
            SolverConfig::Exact { .. } => Method::Exact,
            SolverConfig::Heuristic(_) => Method::Heuristic,
            SolverConfig::Partition(_) => Method::Partition,
        }
    }

    /// Same solver with its randomized start drawn from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            SolverConfig::Heuristic(o) => {
                SolverConfig::Heuristic(HeuristicOptions { seed, ..o.clone() })
            }
            SolverConfig::Partition(o) => SolverConfig::Partition(PartitionOptions {
                heuristic: HeuristicOptions {
                    seed,
                    ..o.heuristic.clone()
                },
                ..o.clone()
            }),
            other => other.clone(),
        }
    }

    /// Largest `n` this solver accepts.
    pub fn cap(&self) -> usize {
        match self {
            SolverConfig::Brute => BRUTE_CAP,
            SolverConfig::Exact { cap } => *cap,
            _ => usize::MAX,
        }
    }

    pub fn solve(&self, points: &[TorusPoint], metric: Metric) -> Result<PathSolution> {
        match self {
            SolverConfig::Brute => solve_brute(points, metric),
            SolverConfig::Exact { cap } => solve_exact_capped(points, metric, *cap),
            SolverConfig::Heuristic(o) => Ok(solve_heuristic(points, metric, o)),
            SolverConfig::Partition(o) => Ok(solve_partition(points, metric, o)?.solution),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(
            path_length(&[p(0.2, 0.2)], &[0], Metric::Euclidean).unwrap(),
            0.0
        );
        assert_eq!(path_length(&[], &[], Metric::Torus).unwrap(), 0.0);
        let two = [p(0.1, 0.1), p(0.4, 0.5)];
        let a = path_length(&two, &[0, 1], Metric::Euclidean).unwrap();
        let b = path_length(&two, &[1, 0], Metric::Euclidean).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && a == b);
        let one = 0.999_999_999;
        let corners = [p(0.0, 0.0), p(0.0, one), p(one, one), p(one, 0.0)];
        let l = path_length(&corners, &[0, 1, 2, 3], Metric::Euclidean).unwrap();
        assert!((l - 3.0).abs() < 1e-8);
    }

    #[test]
    fn path_length_rejects_non_permutations() {
        let pts = [p(0.0, 0.0), p(0.5, 0.5), p(0.1, 0.9)];
        assert!(path_length(&pts, &[0, 1], Metric::Torus).is_err());
        assert!(path_length(&pts, &[0, 1, 1], Metric::Torus).is_err());
        assert!(path_length(&pts, &[0, 1, 3], Metric::Torus).is_err());
    }

    #[test]
    fn solver_config_json() {
        let cfg: SolverConfig =
            serde_json::from_str(r#"{"method": "heuristic", "candidate_k": 8}"#).unwrap();
        match cfg {
            SolverConfig::Heuristic(o) => assert_eq!(o.candidate_k, 8),
            _ => panic!("wrong variant"),
        }
        let cfg: SolverConfig = serde_json::from_str(r#"{"method": "exact"}"#).unwrap();
        assert_eq!(cfg, SolverConfig::Exact { cap: EXACT_CAP });
    }

    #[test]
    fn solution_json_fields() {
        let pts = [p(0.1, 0.1), p(0.2, 0.1)];
        let sol = solve_brute(&pts, Metric::Torus).unwrap();
        let v: serde_json::Value = serde_json::to_value(&sol).unwrap();
        for key in ["order", "length", "method", "metric", "optimal"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "brute");
        assert_eq!(v["metric"], "torus");
    }
}
