use crate::error::{Error, Result};
use crate::torus::{Metric, TorusPoint};

use super::{Method, PathSolution};

pub const BRUTE_CAP: usize = 9;

/// Exhaustive minimum over every undirected ordering. Only meant as an oracle.
pub fn solve_brute(points: &[TorusPoint], metric: Metric) -> Result<PathSolution> {
    let n = points.len();
    if n > BRUTE_CAP {
        return Err(Error::TooLarge {
            solver: "brute",
            n,
            cap: BRUTE_CAP,
        });
    }
    if n <= 2 {
        return Ok(PathSolution::build(
            points,
            (0..n).collect(),
            Method::Brute,
            metric,
        ));
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|&a| points.iter().map(|&b| metric.distance(a, b)).collect())
        .collect();

    // Heap's algorithm; each undirected path is scored once by requiring
    // first < last.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_len = f64::INFINITY;
    let mut score = |perm: &[usize]| {
        if perm[0] < perm[n - 1] {
            let len: f64 = perm.windows(2).map(|w| dist[w[0]][w[1]]).sum();
            if len < best_len {
                best_len = len;
                best.copy_from_slice(perm);
            }
        }
    };
    score(&perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            score(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(PathSolution::build(points, best, Method::Brute, metric))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn two_points() {
        let pts = [p(0.1, 0.2), p(0.4, 0.6)];
        let s = solve_brute(&pts, Metric::Euclidean).unwrap();
        assert!((s.length - 0.5).abs() < 1e-12);
        assert!(s.optimal);
    }

    #[test]
    fn three_points_by_hand() {
        let pts = [p(0.1, 0.1), p(0.5, 0.1), p(0.1, 0.4)];
        let d01 = 0.4;
        let d02 = 0.3;
        let d12 = 0.5;
        let expect = [d01 + d12, d01 + d02, d02 + d12]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let s = solve_brute(&pts, Metric::Euclidean).unwrap();
        assert!((s.length - expect).abs() < 1e-12);
        assert_eq!(s.order, vec![1, 0, 2]);
    }

    #[test]
    fn rejects_large_inputs() {
        let pts = vec![p(0.0, 0.0); 10];
        assert!(matches!(
            solve_brute(&pts, Metric::Torus),
            Err(Error::TooLarge { .. })
        ));
    }
}
