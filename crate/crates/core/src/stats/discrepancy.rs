//! Rectangle discrepancy on the unit square (no wraparound):
//! `D_n = sup_Q |#{x_t ∈ Q}/n − area(Q)|` over axis-aligned rectangles `Q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

pub const EXACT_DISCREPANCY_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyMode {
    /// Exact supremum via the grid of data coordinates plus 0 and 1.
    ExactAnchoredGrid,
    /// Maximum over rectangles with corners on the `m×m` lattice; a lower
    /// bound for the supremum.
    GridApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    pub n: usize,
    pub mode: DiscrepancyMode,
    pub resolution: usize,
}

pub fn rectangle_discrepancy(
    points: &[TorusPoint],
    mode: DiscrepancyMode,
    m: usize,
) -> Result<DiscrepancyResult> {
    let n = points.len();
    match mode {
        DiscrepancyMode::GridApprox => {
            if m < 2 {
                return Err(Error::Precondition(format!(
                    "grid resolution must be at least 2, got {m}"
                )));
            }
            Ok(DiscrepancyResult {
                value: grid_discrepancy(points, m),
                n,
                mode,
                resolution: m,
            })
        }
        DiscrepancyMode::ExactAnchoredGrid => {
            if n > EXACT_DISCREPANCY_CAP {
                return Err(Error::TooLarge {
                    solver: "exact discrepancy",
                    n,
                    cap: EXACT_DISCREPANCY_CAP,
                });
            }
            let (value, resolution) = exact_discrepancy(points);
            Ok(DiscrepancyResult {
                value,
                n,
                mode,
                resolution,
            })
        }
    }
}

fn grid_discrepancy(points: &[TorusPoint], m: usize) -> f64 {
    let n = points.len();
    if n == 0 {
        return 1.0;
    }
    // prefix[(i)*(m+1) + j] = points with x < i/m and y < j/m.
    let w = m + 1;
    let mut prefix = vec![0u32; w * w];
    for p in points {
        let cx = ((p.x() * m as f64) as usize).min(m - 1);
        let cy = ((p.y() * m as f64) as usize).min(m - 1);
        prefix[(cx + 1) * w + cy + 1] += 1;
    }
    for i in 1..w {
        for j in 1..w {
            prefix[i * w + j] +=
                prefix[(i - 1) * w + j] + prefix[i * w + j - 1] - prefix[(i - 1) * w + j - 1];
        }
    }
    let inv_n = 1.0 / n as f64;
    let cell = 1.0 / (m * m) as f64;
    let mut best = 0.0f64;
    for a in 0..m {
        for b in a + 1..=m {
            let width = (b - a) as f64;
            for c in 0..m {
                let base_ac = prefix[a * w + c] as i64;
                let base_bc = prefix[b * w + c] as i64;
                for d in c + 1..=m {
                    let count =
                        prefix[b * w + d] as i64 - prefix[a * w + d] as i64 - base_bc + base_ac;
                    let diff = (count as f64 * inv_n - width * (d - c) as f64 * cell).abs();
                    if diff > best {
                        best = diff;
                    }
                }
            }
        }
    }
    best
}

/// `O(n³)`: for every pair of x-boundaries, a linear scan over the points
/// between them (sorted by y) finds the best y-boundaries, once for closed
/// rectangles (excess points) and once for open ones (excess area).
fn exact_discrepancy(points: &[TorusPoint]) -> (f64, usize) {
    let n = points.len();
    if n == 0 {
        return (1.0, 2);
    }
    let inv_n = 1.0 / n as f64;
    let mut xs: Vec<f64> = points.iter().map(|p| p.x()).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut by_x: Vec<(f64, f64)> = points.iter().map(|p| (p.x(), p.y())).collect();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut best = 0.0f64;
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    for (ai, &a) in xs.iter().enumerate() {
        // Closed boundaries [a, b] with a, b data coordinates.
        ys.clear();
        let mut next = by_x.partition_point(|q| q.0 < a);
        for &b in &xs[ai..] {
            while next < n && by_x[next].0 <= b {
                let y = by_x[next].1;
                let at = ys.partition_point(|&v| v < y);
                ys.insert(at, y);
                next += 1;
            }
            if ys.is_empty() {
                continue;
            }
            let width = b - a;
            let mut lead = f64::NEG_INFINITY;
            for (l, &yl) in ys.iter().enumerate() {
                lead = lead.max(-(l as f64) * inv_n + width * yl);
                let v = (l + 1) as f64 * inv_n - width * yl + lead;
                best = best.max(v);
            }
        }
        // Open boundaries (a, b) with a, b in {0, data, 1}.
        ys.clear();
        let mut next = by_x.partition_point(|q| q.0 <= a);
        for &b in &xs[ai + 1..] {
            while next < n && by_x[next].0 < b {
                let y = by_x[next].1;
                let at = ys.partition_point(|&v| v < y);
                ys.insert(at, y);
                next += 1;
            }
            let width = b - a;
            // z_0 = 0, z_1..z_k = ys, z_{k+1} = 1; open count between z_i
            // and z_l is l − i − 1.
            let k = ys.len();
            let z = |i: usize| -> f64 {
                if i == 0 {
                    0.0
                } else if i == k + 1 {
                    1.0
                } else {
                    ys[i - 1]
                }
            };
            let mut lead = -width * z(0);
            for l in 1..=k + 1 {
                let v = width * z(l) - (l as f64 - 1.0) * inv_n + lead;
                best = best.max(v);
                lead = lead.max(-width * z(l) + l as f64 * inv_n);
            }
        }
    }
    (best.clamp(0.0, 1.0), xs.len())
}
