//! Fixed-dissection solver: cut the square into `k×k` cells, solve each
//! cell, and join the cell paths in plowman's (boustrophedon) order.
//!
//! Consecutive non-empty cells in plowman's order are joined by one edge.
//! Walking through the skipped empty cells bounds each joining edge by the
//! `√5/k` diagonal of two adjacent cells per step, so the joins cost at most
//! `√5·k < 3k` in total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Metric, TorusPoint};

use super::exact::solve_exact_capped;
use super::heuristic::{solve_heuristic, HeuristicOptions};
use super::{length_unchecked, Method, PathSolution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionOptions {
    /// Cells per side.
    pub k: usize,
    /// Cells with at most this many points are solved exactly.
    pub exact_cap: usize,
    pub heuristic: HeuristicOptions,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            k: 8,
            exact_cap: 12,
            heuristic: HeuristicOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSolution {
    pub solution: PathSolution,
    /// Sum of the per-cell path lengths.
    pub cell_sum: f64,
    /// Length of the joining edges.
    pub stitch_cost: f64,
    pub k: usize,
    pub nonempty_cells: usize,
}

impl PartitionSolution {
    pub fn stitch_bound(&self) -> f64 {
        self.cell_sum + 3.0 * self.k as f64
    }
}

/// Point indices per cell, listed in plowman's order; each list keeps the
/// input order of its points.
pub fn plowman_cells(points: &[TorusPoint], k: usize) -> Vec<Vec<usize>> {
    let k = k.max(1);
    let mut cells = vec![Vec::new(); k * k];
    for (i, p) in points.iter().enumerate() {
        let cx = ((p.x() * k as f64) as usize).min(k - 1);
        let cy = ((p.y() * k as f64) as usize).min(k - 1);
        let col = if cy % 2 == 0 { cx } else { k - 1 - cx };
        cells[cy * k + col].push(i);
    }
    cells
}

fn solve_cell(
    points: &[TorusPoint],
    metric: Metric,
    opts: &PartitionOptions,
) -> (Vec<usize>, bool) {
    if points.len() <= opts.exact_cap {
        if let Ok(s) = solve_exact_capped(points, metric, opts.exact_cap) {
            return (s.order, true);
        }
    }
    (
        solve_heuristic(points, metric, &opts.heuristic).order,
        false,
    )
}

pub fn solve_partition(
    points: &[TorusPoint],
    metric: Metric,
    opts: &PartitionOptions,
) -> Result<PartitionSolution> {
    let k = opts.k.max(1);
    let mut order = Vec::with_capacity(points.len());
    let mut cell_sum = 0.0;
    let mut stitch_cost = 0.0;
    let mut nonempty = 0;
    for cell in plowman_cells(points, k) {
        if cell.is_empty() {
            continue;
        }
        nonempty += 1;
        let local: Vec<TorusPoint> = cell.iter().map(|&i| points[i]).collect();
        let (local_order, _) = solve_cell(&local, metric, opts);
        let mut path: Vec<usize> = local_order.into_iter().map(|i| cell[i]).collect();
        cell_sum += length_unchecked(points, &path, metric);
        if let Some(&prev) = order.last() {
            let head = metric.distance(points[prev], points[path[0]]);
            let tail = metric.distance(points[prev], points[*path.last().unwrap()]);
            if tail < head {
                path.reverse();
            }
            stitch_cost += head.min(tail);
        }
        order.extend(path);
    }
    let solution = PathSolution::build(points, order, Method::Partition, metric);
    let out = PartitionSolution {
        solution,
        cell_sum,
        stitch_cost,
        k,
        nonempty_cells: nonempty,
    };
    if out.solution.length > out.stitch_bound() {
        return Err(Error::StitchBound {
            length: out.solution.length,
            bound: out.stitch_bound(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerDiagnostic {
    pub sum_cells: f64,
    pub implied_c0: f64,
    /// Whether every cell was solved exactly.
    pub exact_cells: bool,
    pub k: usize,
}

/// Report `Σ L(cell)` and the constant `C0 = max(0, (Σ − L_ref)/k)` that the
/// reference length implies. Diagnostic only.
pub fn partition_lower_diagnostic(
    points: &[TorusPoint],
    metric: Metric,
    opts: &PartitionOptions,
    reference_length: f64,
) -> LowerDiagnostic {
    let k = opts.k.max(1);
    let mut sum_cells = 0.0;
    let mut exact_cells = true;
    for cell in plowman_cells(points, k) {
        if cell.len() < 2 {
            continue;
        }
        let local: Vec<TorusPoint> = cell.iter().map(|&i| points[i]).collect();
        let (o, exact) = solve_cell(&local, metric, opts);
        exact_cells &= exact;
        sum_cells += length_unchecked(&local, &o, metric);
    }
    LowerDiagnostic {
        sum_cells,
        implied_c0: ((sum_cells - reference_length) / k as f64).max(0.0),
        exact_cells,
        k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessSpec;
    use crate::tsp::{is_permutation, solve_exact};

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn plowman_order_snakes() {
        // One point per cell of a 3x3 grid, tagged by (col, row).
        let mut pts = Vec::new();
        for row in 0..3 {
            for col in 0..3 {
                pts.push(p((col as f64 + 0.5) / 3.0, (row as f64 + 0.5) / 3.0));
            }
        }
        let flat: Vec<usize> = plowman_cells(&pts, 3).into_iter().flatten().collect();
        assert_eq!(flat, vec![0, 1, 2, 5, 4, 3, 6, 7, 8]);
    }

    #[test]
    fn single_cell_equals_subsolver() {
        let pts = ProcessSpec::iid(6).prefix(0, 300).unwrap();
        let opts = PartitionOptions {
            k: 1,
            ..Default::default()
        };
        let part = solve_partition(&pts, Metric::Torus, &opts).unwrap();
        let direct = solve_heuristic(&pts, Metric::Torus, &opts.heuristic);
        assert_eq!(part.solution.order, direct.order);
        assert_eq!(part.stitch_cost, 0.0);
        let small = &pts[..9];
        let part = solve_partition(small, Metric::Euclidean, &opts).unwrap();
        let exact = solve_exact(small, Metric::Euclidean).unwrap();
        assert!((part.solution.length - exact.length).abs() < 1e-12);
    }

    #[test]
    fn empty_cells_are_skipped() {
        let pts = vec![p(0.05, 0.05), p(0.07, 0.06), p(0.93, 0.95)];
        let part = solve_partition(
            &pts,
            Metric::Euclidean,
            &PartitionOptions {
                k: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(part.nonempty_cells, 2);
        assert!(is_permutation(&part.solution.order, 3));
        assert!(part.solution.length <= part.stitch_bound());
        let none = solve_partition(&[], Metric::Euclidean, &PartitionOptions::default()).unwrap();
        assert_eq!(none.solution.length, 0.0);
    }

    #[test]
    fn lower_diagnostic_examples() {
        let pts = ProcessSpec::iid(14).prefix(0, 12).unwrap();
        let exact = solve_exact(&pts, Metric::Torus).unwrap();
        let one = partition_lower_diagnostic(
            &pts,
            Metric::Torus,
            &PartitionOptions {
                k: 1,
                ..Default::default()
            },
            exact.length,
        );
        assert!(one.exact_cells);
        assert!(one.implied_c0.abs() < 1e-12);

        let two = partition_lower_diagnostic(
            &pts,
            Metric::Torus,
            &PartitionOptions {
                k: 2,
                ..Default::default()
            },
            exact.length,
        );
        assert!(two.exact_cells && two.implied_c0.is_finite() && two.implied_c0 >= 0.0);

        let clustered: Vec<_> = (0..7)
            .map(|i| p(0.4 + 0.02 * i as f64, 0.45 + 0.01 * (i % 3) as f64))
            .collect();
        let reference = solve_exact(&clustered, Metric::Euclidean).unwrap().length;
        let d = partition_lower_diagnostic(
            &clustered,
            Metric::Euclidean,
            &PartitionOptions {
                k: 3,
                ..Default::default()
            },
            reference,
        );
        assert!(d.sum_cells <= reference + 1e-12);
        assert_eq!(d.implied_c0, 0.0);
    }
}
