//! Uniform bucket grid over the unit square.
//!
//! Under the torus metric the grid wraps, so the buckets next to the right
//! edge are neighbors of the buckets next to the left edge. Ring `r` around a
//! bucket holds the buckets at (wrapped) Chebyshev offset exactly `r`; any
//! point outside rings `0..=r` is at least `r·h` away, which is what lets the
//! searches stop early.

use crate::torus::{euclidean_distance, torus_distance, TorusPoint};

#[derive(Clone, Debug)]
pub struct SpatialGrid {
    side: usize,
    wrap: bool,
    cells: Vec<Vec<u32>>,
    /// Position of each point inside its cell's vector, for O(1) removal.
    slot: Vec<u32>,
    cell_of: Vec<u32>,
    live: usize,
}

impl SpatialGrid {
    /// Grid with about `per_cell` points per bucket.
    pub fn new(points: &[TorusPoint], wrap: bool, per_cell: f64) -> Self {
        let n = points.len().max(1);
        let side = ((n as f64 / per_cell).sqrt().ceil() as usize).clamp(1, 2048);
        let mut cells = vec![Vec::new(); side * side];
        let mut slot = vec![0u32; points.len()];
        let mut cell_of = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = Self::bucket(side, p);
            slot[i] = cells[c].len() as u32;
            cell_of[i] = c as u32;
            cells[c].push(i as u32);
        }
        Self {
            side,
            wrap,
            cells,
            slot,
            cell_of,
            live: points.len(),
        }
    }

    fn bucket(side: usize, p: &TorusPoint) -> usize {
        let cx = ((p.x() * side as f64) as usize).min(side - 1);
        let cy = ((p.y() * side as f64) as usize).min(side - 1);
        cy * side + cx
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn remove(&mut self, i: usize) {
        let c = self.cell_of[i] as usize;
        let s = self.slot[i] as usize;
        let cell = &mut self.cells[c];
        debug_assert_eq!(cell[s] as usize, i);
        cell.swap_remove(s);
        if s < cell.len() {
            self.slot[cell[s] as usize] = s as u32;
        }
        self.live -= 1;
    }

    #[inline]
    fn dist(&self, a: TorusPoint, b: TorusPoint) -> f64 {
        if self.wrap {
            torus_distance(a, b)
        } else {
            euclidean_distance(a, b)
        }
    }

    fn max_ring(&self) -> usize {
        if self.wrap {
            self.side / 2
        } else {
            self.side - 1
        }
    }

    /// Visit every cell of ring `r` around `(cx, cy)`.
    fn for_ring<F: FnMut(usize)>(&self, cx: usize, cy: usize, r: usize, mut f: F) {
        let g = self.side as i64;
        let r = r as i64;
        let (lo, hi) = if self.wrap {
            (-((g - 1) / 2), g / 2)
        } else {
            (-r, r)
        };
        let (lo, hi) = (lo.max(-r), hi.min(r));
        let mut visit = |dx: i64, dy: i64| {
            let (x, y) = (cx as i64 + dx, cy as i64 + dy);
            if self.wrap {
                f((y.rem_euclid(g) * g + x.rem_euclid(g)) as usize);
            } else if (0..g).contains(&x) && (0..g).contains(&y) {
                f((y * g + x) as usize);
            }
        };
        for dy in lo..=hi {
            if dy.abs() == r {
                for dx in lo..=hi {
                    visit(dx, dy);
                }
            } else {
                if lo == -r {
                    visit(-r, dy);
                }
                if hi == r && r != 0 {
                    visit(r, dy);
                }
            }
        }
    }

    fn coords(&self, p: &TorusPoint) -> (usize, usize) {
        let c = Self::bucket(self.side, p);
        (c % self.side, c / self.side)
    }

    /// Nearest live point to `p` other than `skip`, as `(index, distance)`.
    /// Ties go to the lower index. Stops once nothing can beat `bound`.
    pub fn nearest(
        &self,
        points: &[TorusPoint],
        p: TorusPoint,
        skip: Option<usize>,
        bound: f64,
    ) -> Option<(usize, f64)> {
        if self.live == 0 {
            return None;
        }
        let h = 1.0 / self.side as f64;
        let (cx, cy) = self.coords(&p);
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=self.max_ring() {
            self.for_ring(cx, cy, r, |c| {
                for &j in &self.cells[c] {
                    let j = j as usize;
                    if Some(j) == skip {
                        continue;
                    }
                    let d = self.dist(p, points[j]);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && j < bi),
                    };
                    if better {
                        best = Some((j, d));
                    }
                }
            });
            let reach = r as f64 * h;
            let target = best.map_or(bound, |(_, d)| d.min(bound));
            if target <= reach {
                break;
            }
        }
        best
    }

    /// The `k` nearest points to point `i` (excluding `i`), sorted by
    /// distance then index.
    pub fn k_nearest(&self, points: &[TorusPoint], i: usize, k: usize) -> Vec<(usize, f64)> {
        let k = k.min(points.len().saturating_sub(1));
        let mut found: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 {
            return found;
        }
        let p = points[i];
        let h = 1.0 / self.side as f64;
        let (cx, cy) = self.coords(&p);
        let worse = |a: &(usize, f64), b: &(usize, f64)| a.1 > b.1 || (a.1 == b.1 && a.0 > b.0);
        for r in 0..=self.max_ring() {
            self.for_ring(cx, cy, r, |c| {
                for &j in &self.cells[c] {
                    let j = j as usize;
                    if j == i {
                        continue;
                    }
                    let cand = (j, self.dist(p, points[j]));
                    if found.len() == k && !worse(&found[k - 1], &cand) {
                        continue;
                    }
                    let at = found.partition_point(|e| !worse(e, &cand));
                    found.insert(at, cand);
                    found.truncate(k);
                }
            });
            if found.len() == k && found[k - 1].1 <= r as f64 * h {
                break;
            }
        }
        found
    }
}
