//! Held–Karp subset dynamic program for the shortest Hamiltonian path.
//!
//! Free endpoints come from a virtual start vertex at distance zero from
//! every point: `best[S][v]` is the shortest path visiting exactly `S` and
//! ending at `v`, seeded with `best[{v}][v] = 0`.

use crate::error::{Error, Result};
use crate::torus::{Metric, TorusPoint};

use super::{Method, PathSolution};

pub const EXACT_CAP: usize = 18;
/// Hard ceiling regardless of the configured cap (memory is `2^n·n` words).
const EXACT_HARD_CAP: usize = 24;

pub fn solve_exact(points: &[TorusPoint], metric: Metric) -> Result<PathSolution> {
    solve_exact_capped(points, metric, EXACT_CAP)
}

pub fn solve_exact_capped(
    points: &[TorusPoint],
    metric: Metric,
    cap: usize,
) -> Result<PathSolution> {
    let n = points.len();
    let cap = cap.min(EXACT_HARD_CAP);
    if n > cap {
        return Err(Error::TooLarge {
            solver: "exact",
            n,
            cap,
        });
    }
    if n <= 2 {
        return Ok(PathSolution::build(
            points,
            (0..n).collect(),
            Method::Exact,
            metric,
        ));
    }
    let dist: Vec<f64> = points
        .iter()
        .flat_map(|&a| points.iter().map(move |&b| metric.distance(a, b)))
        .collect();

    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; (full + 1) * n];
    let mut parent = vec![u8::MAX; (full + 1) * n];
    for v in 0..n {
        best[(1 << v) * n + v] = 0.0;
    }
    for mask in 1..=full {
        let row = mask * n;
        for last in 0..n {
            let here = best[row + last];
            if mask & (1 << last) == 0 || here == f64::INFINITY {
                continue;
            }
            let drow = &dist[last * n..(last + 1) * n];
            let mut rest = full & !mask;
            while rest != 0 {
                let next = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let slot = (mask | (1 << next)) * n + next;
                let cand = here + drow[next];
                if cand < best[slot] {
                    best[slot] = cand;
                    parent[slot] = last as u8;
                }
            }
        }
    }

    let mut end = 0;
    for v in 1..n {
        if best[full * n + v] < best[full * n + end] {
            end = v;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut v = end;
    loop {
        order.push(v);
        let p = parent[mask * n + v];
        mask &= !(1 << v);
        if p == u8::MAX {
            break;
        }
        v = p as usize;
    }
    debug_assert_eq!(mask, 0);
    order.reverse();
    Ok(PathSolution::build(points, order, Method::Exact, metric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::{is_permutation, solve_brute};

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn trivial_sizes() {
        assert_eq!(solve_exact(&[], Metric::Torus).unwrap().length, 0.0);
        let one = solve_exact(&[p(0.3, 0.3)], Metric::Torus).unwrap();
        assert_eq!(one.length, 0.0);
        assert_eq!(one.order, vec![0]);
        assert!(one.optimal);
    }

    #[test]
    fn collinear_points() {
        let xs = [0.62, 0.11, 0.47, 0.3, 0.85, 0.2, 0.71];
        let pts: Vec<_> = xs.iter().map(|&x| p(x, 0.5)).collect();
        let s = solve_exact(&pts, Metric::Euclidean).unwrap();
        assert!((s.length - (0.85 - 0.11)).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_on_a_fixed_instance() {
        let pts: Vec<_> = (0..8)
            .map(|i| {
                let t = i as f64;
                p((t * 0.618_034).fract(), (t * t * 0.414_213 + 0.05).fract())
            })
            .collect();
        for m in Metric::ALL {
            let e = solve_exact(&pts, m).unwrap();
            let b = solve_brute(&pts, m).unwrap();
            assert!(is_permutation(&e.order, pts.len()));
            assert!((e.length - b.length).abs() < 1e-9);
        }
    }

    #[test]
    fn respects_cap() {
        let pts = vec![p(0.1, 0.1); 6];
        assert!(solve_exact_capped(&pts, Metric::Torus, 5).is_err());
        assert!(solve_exact_capped(&pts, Metric::Torus, 6).is_ok());
    }
}
