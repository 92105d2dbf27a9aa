use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{draw_shift_indices, ProcessSpec};
use crate::rng::{derive_seed, streams};
use crate::torus::TorusPoint;

/// Largest histogram the diagnostic will allocate.
pub const CLOSENESS_BIN_CAP: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub j: usize,
    pub m: usize,
    pub cells: usize,
    pub reps: usize,
    /// Plug-in distance `½ Σ |p̃ − p|` over the product partition.
    pub empirical_distance: f64,
    /// `m / N_j`.
    pub bound: f64,
    /// `½ Σ sd(p̃_A − p_A)` with the pooled frequency in each bin.
    pub mc_error: f64,
    /// Expected plug-in distance when both laws agree, `≈ mc_error·√(2/π)`.
    pub noise_floor: f64,
    /// `empirical − noise_floor`, clamped at 0.
    pub debiased: f64,
    pub passes: bool,
}

/// Compares the joint law of `X^(j)[0:m]` with that of `X^(j-1)[0:m]` on the
/// partition of `T^{m+1}` into products of `cells × cells` squares.
pub fn closeness_diagnostic(
    spec: &ProcessSpec,
    j: usize,
    m: usize,
    cells: usize,
    reps: usize,
    master_seed: u64,
) -> Result<ClosenessReport> {
    if j == 0 || j > spec.depth() {
        return Err(Error::StageOutOfRange {
            j,
            stages: spec.depth(),
        });
    }
    if cells == 0 || reps == 0 {
        return Err(Error::config(
            "closeness",
            "cells and reps must be positive",
        ));
    }
    let per_point = cells * cells;
    let bins = (0..=m)
        .try_fold(1usize, |acc, _| acc.checked_mul(per_point))
        .filter(|&b| b <= CLOSENESS_BIN_CAP);
    let Some(bins) = bins else {
        return Err(Error::Precondition(format!(
            "histogram with {cells}^(2·{}) bins exceeds the cap of {CLOSENESS_BIN_CAP}",
            m + 1
        )));
    };
    let block_len = spec.stages[j - 1].block_len;
    let bin_of = |pts: &[TorusPoint]| -> usize {
        pts.iter().fold(0usize, |acc, p| {
            let cx = ((p.x() * cells as f64) as usize).min(cells - 1);
            let cy = ((p.y() * cells as f64) as usize).min(cells - 1);
            acc * per_point + cy * cells + cx
        })
    };
    let pairs: Vec<(usize, usize)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<(usize, usize)> {
            let tilde = draw_shift_indices(
                &spec.reseeded(derive_seed(master_seed, streams::BASE, r)),
                derive_seed(master_seed, streams::SHIFTS, r),
            );
            let plain = draw_shift_indices(
                &spec.reseeded(derive_seed(master_seed, streams::PAIRED, r)),
                derive_seed(master_seed, streams::ESTIMATOR, r),
            );
            let a = tilde.prefix(j, m + 1)?;
            let b = plain.prefix(j - 1, m + 1)?;
            Ok((bin_of(&a), bin_of(&b)))
        })
        .collect::<Result<_>>()?;

    let mut ca = vec![0u32; bins];
    let mut cb = vec![0u32; bins];
    for &(a, b) in &pairs {
        ca[a] += 1;
        cb[b] += 1;
    }
    let r = reps as f64;
    let mut dist = 0.0;
    let mut mc = 0.0;
    for (&a, &b) in ca.iter().zip(&cb) {
        if a == 0 && b == 0 {
            continue;
        }
        let (pa, pb) = (a as f64 / r, b as f64 / r);
        dist += (pa - pb).abs();
        let pooled = 0.5 * (pa + pb);
        mc += (2.0 * pooled * (1.0 - pooled) / r).sqrt();
    }
    let empirical_distance = 0.5 * dist;
    let mc_error = 0.5 * mc;
    let noise_floor = mc_error * (2.0 / std::f64::consts::PI).sqrt();
    let bound = m as f64 / block_len as f64;
    Ok(ClosenessReport {
        j,
        m,
        cells,
        reps,
        empirical_distance,
        bound,
        mc_error,
        noise_floor,
        debiased: (empirical_distance - noise_floor).max(0.0),
        passes: empirical_distance <= bound + 3.0 * mc_error,
    })
}
