//! Nearest-neighbor construction followed by neighbor-list 2-opt.
//!
//! The open path is handled as a closed tour through the real points plus one
//! dummy vertex at distance zero from everything; cutting the tour at the
//! dummy gives the path, and every path 2-opt move (including the ones that
//! change an endpoint) is an ordinary tour 2-opt move. The dummy heads every
//! candidate list so endpoint moves are always examined.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::torus::{Metric, TorusPoint};

use super::brute::solve_brute;
use super::neighbors::SpatialGrid;
use super::{Method, PathSolution};

const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicOptions {
    pub candidate_k: usize,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self {
            candidate_k: 10,
            max_passes: 100,
            seed: 0,
        }
    }
}

pub fn solve_heuristic(
    points: &[TorusPoint],
    metric: Metric,
    opts: &HeuristicOptions,
) -> PathSolution {
    let n = points.len();
    if n <= 3 {
        let mut s = solve_brute(points, metric).expect("n <= 3 is within the brute-force cap");
        s.method = Method::Heuristic;
        s.optimal = false;
        return s;
    }
    let grid = SpatialGrid::new(points, metric == Metric::Torus, 2.0);
    let start = rng::uniform_below(&mut rng::seeded(opts.seed), n as u64) as usize;
    let path = nearest_neighbor_path(points, metric, grid.clone(), start);
    let cands = candidate_lists(points, metric, &grid, opts.candidate_k.max(1));
    let mut tour = Tour::new(path, n);
    tour.two_opt(points, metric, &cands, opts.max_passes.max(1));
    PathSolution::build(points, tour.into_path(), Method::Heuristic, metric)
}

/// Boundary distances of live points, ordered, for free-boundary queries.
struct BoundaryIndex {
    set: BTreeSet<(u64, u32)>,
}

impl BoundaryIndex {
    fn new(points: &[TorusPoint]) -> Self {
        Self {
            set: points
                .iter()
                .enumerate()
                .map(|(i, p)| (p.boundary_distance().to_bits(), i as u32))
                .collect(),
        }
    }

    fn remove(&mut self, points: &[TorusPoint], i: usize) {
        self.set
            .remove(&(points[i].boundary_distance().to_bits(), i as u32));
    }

    fn closest(&self) -> Option<(usize, f64)> {
        self.set
            .first()
            .map(|&(b, i)| (i as usize, f64::from_bits(b)))
    }
}

fn nearest_neighbor_path(
    points: &[TorusPoint],
    metric: Metric,
    mut grid: SpatialGrid,
    start: usize,
) -> Vec<usize> {
    let n = points.len();
    let mut boundary = (metric == Metric::FreeBoundary).then(|| BoundaryIndex::new(points));
    let mut path = Vec::with_capacity(n);
    let mut cur = start;
    loop {
        path.push(cur);
        grid.remove(cur);
        if let Some(b) = boundary.as_mut() {
            b.remove(points, cur);
        }
        if path.len() == n {
            break;
        }
        let p = points[cur];
        // Free-boundary distance splits into a straight part and a boundary
        // part, and each can be minimized separately.
        let via_boundary = boundary
            .as_ref()
            .and_then(|b| b.closest())
            .map(|(j, db)| (j, p.boundary_distance() + db));
        let bound = via_boundary.map_or(f64::INFINITY, |(_, d)| d);
        let direct = grid.nearest(points, p, None, bound);
        cur = match (direct, via_boundary) {
            (Some((i, di)), Some((j, dj))) => {
                if dj < di || (dj == di && j < i) {
                    j
                } else {
                    i
                }
            }
            (Some((i, _)), None) => i,
            (None, Some((j, _))) => j,
            (None, None) => unreachable!("live points remain"),
        };
    }
    path
}

fn candidate_lists(
    points: &[TorusPoint],
    metric: Metric,
    grid: &SpatialGrid,
    k: usize,
) -> Vec<Vec<u32>> {
    let n = points.len();
    let near_boundary: Vec<usize> = if metric == Metric::FreeBoundary {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            points[a]
                .boundary_distance()
                .total_cmp(&points[b].boundary_distance())
                .then(a.cmp(&b))
        });
        idx.truncate(k + 1);
        idx
    } else {
        Vec::new()
    };
    (0..n)
        .map(|i| {
            let mut list: Vec<(usize, f64)> = grid.k_nearest(points, i, k);
            if metric == Metric::FreeBoundary {
                for e in list.iter_mut() {
                    e.1 = metric.distance(points[i], points[e.0]);
                }
                for &j in &near_boundary {
                    if j != i && !list.iter().any(|e| e.0 == j) {
                        list.push((j, metric.distance(points[i], points[j])));
                    }
                }
                list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                list.truncate(k);
            }
            list.into_iter().map(|e| e.0 as u32).collect()
        })
        .collect()
}

/// Array tour over `n` real vertices plus the dummy `n`.
struct Tour {
    order: Vec<u32>,
    pos: Vec<u32>,
    dummy: usize,
}

impl Tour {
    fn new(path: Vec<usize>, n: usize) -> Self {
        let mut order: Vec<u32> = path.into_iter().map(|i| i as u32).collect();
        order.push(n as u32);
        let mut pos = vec![0u32; n + 1];
        for (i, &v) in order.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        Self {
            order,
            pos,
            dummy: n,
        }
    }

    #[inline]
    fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    fn succ(&self, v: usize) -> usize {
        let i = self.pos[v] as usize + 1;
        self.order[if i == self.len() { 0 } else { i }] as usize
    }

    #[inline]
    fn pred(&self, v: usize) -> usize {
        let i = self.pos[v] as usize;
        self.order[if i == 0 { self.len() - 1 } else { i - 1 }] as usize
    }

    #[inline]
    fn dist(&self, points: &[TorusPoint], metric: Metric, a: usize, b: usize) -> f64 {
        if a == self.dummy || b == self.dummy {
            0.0
        } else {
            metric.distance(points[a], points[b])
        }
    }

    /// Reverse the tour section running forward from `from` to `to`, or the
    /// complementary section when that is shorter (same cycle either way).
    fn reverse(&mut self, from: usize, to: usize) {
        let m = self.len();
        let mut i = self.pos[from] as usize;
        let mut j = self.pos[to] as usize;
        let mut span = (j + m - i) % m + 1;
        if 2 * span > m {
            let (ni, nj) = ((j + 1) % m, (i + m - 1) % m);
            i = ni;
            j = nj;
            span = m - span;
        }
        for _ in 0..span / 2 {
            self.order.swap(i, j);
            self.pos[self.order[i] as usize] = i as u32;
            self.pos[self.order[j] as usize] = j as u32;
            i = if i + 1 == m { 0 } else { i + 1 };
            j = if j == 0 { m - 1 } else { j - 1 };
        }
    }

    /// Try the moves anchored at `a`; apply the first improving one and
    /// return the four endpoints touched.
    fn improve(
        &mut self,
        points: &[TorusPoint],
        metric: Metric,
        cands: &[Vec<u32>],
        a: usize,
    ) -> Option<[usize; 4]> {
        let dummy = std::iter::once(self.dummy as u32);
        // Forward: drop (a, succ a) and (c, succ c), add (a, c) and (succ a, succ c).
        let b = self.succ(a);
        let d_ab = self.dist(points, metric, a, b);
        for c in dummy.clone().chain(cands[a].iter().copied()) {
            let c = c as usize;
            let g1 = d_ab - self.dist(points, metric, a, c);
            if g1 <= GAIN_EPS {
                break;
            }
            let d = self.succ(c);
            if c == b || d == a {
                continue;
            }
            let gain = g1 + self.dist(points, metric, c, d) - self.dist(points, metric, b, d);
            if gain > GAIN_EPS {
                self.reverse(b, c);
                return Some([a, b, c, d]);
            }
        }
        // Backward: drop (pred a, a) and (pred c, c), add (a, c) and (pred a, pred c).
        let b = self.pred(a);
        let d_ba = self.dist(points, metric, b, a);
        for c in dummy.chain(cands[a].iter().copied()) {
            let c = c as usize;
            let g1 = d_ba - self.dist(points, metric, a, c);
            if g1 <= GAIN_EPS {
                break;
            }
            let d = self.pred(c);
            if c == b || d == a {
                continue;
            }
            let gain = g1 + self.dist(points, metric, d, c) - self.dist(points, metric, b, d);
            if gain > GAIN_EPS {
                self.reverse(a, d);
                return Some([a, b, c, d]);
            }
        }
        None
    }

    fn two_opt(
        &mut self,
        points: &[TorusPoint],
        metric: Metric,
        cands: &[Vec<u32>],
        max_passes: usize,
    ) {
        let n = self.dummy;
        let mut active = vec![true; n];
        for _ in 0..max_passes {
            let mut improved = false;
            for a in 0..n {
                if !active[a] {
                    continue;
                }
                active[a] = false;
                while let Some(touched) = self.improve(points, metric, cands, a) {
                    improved = true;
                    for v in touched {
                        if v != self.dummy {
                            active[v] = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    fn into_path(self) -> Vec<usize> {
        let at = self.pos[self.dummy] as usize;
        self.order[at + 1..]
            .iter()
            .chain(&self.order[..at])
            .map(|&v| v as usize)
            .collect()
    }
}
