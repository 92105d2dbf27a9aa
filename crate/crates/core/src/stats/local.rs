use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{draw_shift_indices, hat_index_map, ProcessSpec};
use crate::rng::{derive_seed, streams};
use crate::torus::{wrap_unit, TorusPoint};

use super::chi2::{chi_square_counts, ChiSquare};
use super::{mean_variance, RegionQuery};

/// Parameters `(α, M)` of local uniformity: every rectangle inside an
/// `α`-square gets its fair share of points from any window longer than `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalUniformityParams {
    pub alpha: f64,
    pub m: u64,
}

impl LocalUniformityParams {
    pub fn new(alpha: f64, m: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config("alpha", format!("{alpha} not in (0,1]")));
        }
        Ok(Self { alpha, m })
    }

    fn shrunk_alpha(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < self.alpha) {
            return Err(Error::Precondition(format!(
                "epsilon {eps} must lie in (0, alpha = {})",
                self.alpha
            )));
        }
        Ok(0.5 * eps.min(self.alpha - eps))
    }

    /// Parameters after the hat transform `H_{ε,N}`.
    pub fn hat_update(&self, eps: f64, block_len: u64) -> Result<Self> {
        Ok(Self {
            alpha: self.shrunk_alpha(eps)?,
            m: self.m + 4 * block_len,
        })
    }

    /// Parameters after the shifted transform `T_{ε,N}`.
    pub fn t_update(&self, eps: f64, block_len: u64) -> Result<Self> {
        Ok(Self {
            alpha: self.shrunk_alpha(eps)?,
            m: self.m + 6 * block_len,
        })
    }
}

/// Variance constant that survives one hat transform with block length `N`.
pub fn variance_constant_after_hat(c: f64, block_len: u64) -> f64 {
    let n = block_len as f64;
    c + 32.0 * n * n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceWindow {
    pub window: u64,
    pub mean: f64,
    pub variance: f64,
    /// `variance / window`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceFit {
    pub windows: Vec<VarianceWindow>,
    /// Smallest `C` with `Var ≤ C·w` on every window.
    pub fitted_c: f64,
    pub reps: usize,
}

/// Empirical variance of `#{t < w : X^(j)_t ∈ region}` over independent
/// realizations (fresh base seed and shift indices per replication).
pub fn variance_condition_fit(
    spec: &ProcessSpec,
    j: usize,
    region: &RegionQuery,
    windows: &[u64],
    reps: usize,
    master_seed: u64,
) -> Result<VarianceFit> {
    region.validate()?;
    if reps < 2 {
        return Err(Error::config(
            "reps",
            "at least 2 replications needed for a variance",
        ));
    }
    if windows.is_empty() || windows.contains(&0) {
        return Err(Error::config(
            "windows",
            "need at least one positive window",
        ));
    }
    spec.truncated(j)?;
    let longest = *windows.iter().max().unwrap() as usize;
    let counts: Vec<Vec<u64>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<u64>> {
            let spec_r = replicate(spec, master_seed, r as u64);
            let pts = spec_r.prefix(j, longest)?;
            let mut running = Vec::with_capacity(longest + 1);
            running.push(0u64);
            let mut c = 0u64;
            for p in &pts {
                c += region.contains(p) as u64;
                running.push(c);
            }
            Ok(windows.iter().map(|&w| running[w as usize]).collect())
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(windows.len());
    let mut fitted_c = 0.0f64;
    for (k, &w) in windows.iter().enumerate() {
        let xs: Vec<f64> = counts.iter().map(|c| c[k] as f64).collect();
        let (mean, variance) = mean_variance(&xs);
        let normalized = variance / w as f64;
        fitted_c = fitted_c.max(normalized);
        out.push(VarianceWindow {
            window: w,
            mean,
            variance,
            normalized,
        });
    }
    Ok(VarianceFit {
        windows: out,
        fitted_c,
        reps,
    })
}

fn replicate(spec: &ProcessSpec, master: u64, r: u64) -> ProcessSpec {
    draw_shift_indices(
        &spec.reseeded(derive_seed(master, streams::BASE, r)),
        derive_seed(master, streams::SHIFTS, r),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinShiftOptions {
    /// Complete blocks of length `2N` examined per replication.
    pub blocks: u64,
    pub reps: usize,
    /// Chi-square grid side.
    pub grid: usize,
    /// `false` runs the negative control: points of the left-shifted
    /// region are pooled without being moved.
    pub shift_translated: bool,
    pub master_seed: u64,
}

impl Default for TwinShiftOptions {
    fn default() -> Self {
        Self {
            blocks: 50,
            reps: 20,
            grid: 4,
            shift_translated: true,
            master_seed: crate::rng::DEFAULT_MASTER_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinShiftReport {
    pub chi_square: ChiSquare,
    pub points: usize,
    /// Replications where the pooled points differed from the hat points in
    /// the region (always 0 for a correct implementation).
    pub identity_violations: usize,
    pub shift_translated: bool,
}

/// Checks that the hat points of stage `j` in `region` are exactly the
/// unshifted points in `region` together with the translates of the points in
/// the region moved left by `ε_j`, and tests the pooled set for uniformity on
/// the region.
pub fn twin_shift_uniformity_check(
    spec: &ProcessSpec,
    j: usize,
    region: &RegionQuery,
    opts: &TwinShiftOptions,
) -> Result<TwinShiftReport> {
    region.validate()?;
    if j == 0 || j > spec.depth() {
        return Err(Error::StageOutOfRange {
            j,
            stages: spec.depth(),
        });
    }
    let stage = spec.stages[j - 1];
    let eps = stage.epsilon;
    if region.width + eps > 1.0 {
        return Err(Error::Precondition(format!(
            "region width {} plus epsilon {eps} exceeds the torus",
            region.width
        )));
    }
    if opts.grid < 1 || opts.blocks == 0 || opts.reps == 0 {
        return Err(Error::config(
            "twin_shift",
            "grid, blocks and reps must be positive",
        ));
    }
    let n = stage.block_len;
    let base_len = (opts.blocks * n) as usize;

    let per_rep: Vec<(Vec<TorusPoint>, bool)> = (0..opts.reps)
        .into_par_iter()
        .map(|r| -> Result<(Vec<TorusPoint>, bool)> {
            let spec_r = replicate(spec, opts.master_seed, r as u64);
            let below = spec_r.prefix(j - 1, base_len)?;
            let mut pooled = Vec::new();
            let mut moved = Vec::new();
            for p in &below {
                if region.contains(p) {
                    pooled.push(*p);
                    moved.push(*p);
                }
                let q = p.translate(eps);
                if region.contains(&q) {
                    pooled.push(if opts.shift_translated { q } else { *p });
                    moved.push(q);
                }
            }
            let mut hat = Vec::new();
            for u in 0..2 * base_len as i64 {
                let (v, s) = hat_index_map(u, n);
                let p = below[v as usize];
                let p = if s { p.translate(eps) } else { p };
                if region.contains(&p) {
                    hat.push(p);
                }
            }
            let ok = same_multiset(hat, moved);
            Ok((pooled, ok))
        })
        .collect::<Result<_>>()?;

    let g = opts.grid;
    let (x_start, width) = if opts.shift_translated {
        (region.x0, region.width)
    } else {
        (region.x0 - eps, region.width + eps)
    };
    let mut counts = vec![0u64; g * g];
    let mut total = 0usize;
    let mut violations = 0usize;
    for (pooled, ok) in &per_rep {
        violations += !ok as usize;
        for p in pooled {
            let u = wrap_unit(p.x() - x_start) / width;
            let v = wrap_unit(p.y() - region.y0) / region.height;
            let cx = ((u * g as f64) as usize).min(g - 1);
            let cy = ((v * g as f64) as usize).min(g - 1);
            counts[cy * g + cx] += 1;
            total += 1;
        }
    }
    let required = 5 * g * g;
    if total < required {
        return Err(Error::UndersizedSample { n: total, required });
    }
    Ok(TwinShiftReport {
        chi_square: chi_square_counts(&counts),
        points: total,
        identity_violations: violations,
        shift_translated: opts.shift_translated,
    })
}

fn same_multiset(mut a: Vec<TorusPoint>, mut b: Vec<TorusPoint>) -> bool {
    let key =
        |p: &TorusPoint, q: &TorusPoint| p.x().total_cmp(&q.x()).then(p.y().total_cmp(&q.y()));
    a.sort_by(key);
    b.sort_by(key);
    a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(p, q)| p.x().to_bits() == q.x().to_bits() && p.y().to_bits() == q.y().to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::Stage;

    #[test]
    fn parameter_updates() {
        let p = LocalUniformityParams::new(0.1, 7).unwrap();
        let h = p.hat_update(0.03, 100).unwrap();
        assert!((h.alpha - 0.015).abs() < 1e-15);
        assert_eq!(h.m, 407);
        let t = p.t_update(0.08, 100).unwrap();
        assert!((t.alpha - 0.01).abs() < 1e-15);
        assert_eq!(t.m, 607);
        assert!(p.hat_update(0.1, 1).is_err());
        assert!(p.t_update(0.2, 1).is_err());
        assert!(LocalUniformityParams::new(0.0, 1).is_err());
        assert_eq!(variance_constant_after_hat(2.0, 10), 3202.0);
    }

    #[test]
    fn iid_variance_is_binomial() {
        let region = RegionQuery::new(0.1, 0.2, 0.5, 0.4, 0.5).unwrap();
        let fit =
            variance_condition_fit(&ProcessSpec::iid(0), 0, &region, &[100, 1000], 400, 9).unwrap();
        // p(1−p) with p = 0.2
        for w in &fit.windows {
            assert!((w.normalized - 0.16).abs() < 0.04, "{w:?}");
            assert!((w.mean / w.window as f64 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn variance_after_hat_stays_bounded() {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(0.01, 20).unwrap());
        let region = RegionQuery::new(0.3, 0.3, 0.2, 0.2, 0.2).unwrap();
        let fit = variance_condition_fit(&spec, 1, &region, &[50, 400, 2000], 200, 4).unwrap();
        assert!(fit.fitted_c <= variance_constant_after_hat(0.25, 20));
    }

    #[test]
    fn twin_identity_and_control() {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(0.1, 50).unwrap());
        let region = RegionQuery::new(0.4, 0.3, 0.05, 0.3, 0.3).unwrap();
        let opts = TwinShiftOptions {
            blocks: 40,
            reps: 20,
            grid: 5,
            shift_translated: true,
            master_seed: 3,
        };
        let good = twin_shift_uniformity_check(&spec, 1, &region, &opts).unwrap();
        assert_eq!(good.identity_violations, 0);
        assert!(good.chi_square.p_value > 1e-4, "{good:?}");
        let bad = twin_shift_uniformity_check(
            &spec,
            1,
            &region,
            &TwinShiftOptions {
                shift_translated: false,
                ..opts
            },
        )
        .unwrap();
        assert!(bad.chi_square.p_value < 1e-6, "{bad:?}");
    }

    #[test]
    fn twin_check_preconditions() {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(0.1, 50).unwrap());
        let region = RegionQuery::new(0.4, 0.3, 0.05, 0.3, 0.3).unwrap();
        let opts = TwinShiftOptions::default();
        assert!(twin_shift_uniformity_check(&spec, 2, &region, &opts).is_err());
        assert!(twin_shift_uniformity_check(&spec, 0, &region, &opts).is_err());
    }
}
