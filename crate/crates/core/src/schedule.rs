//! Parameter schedule for the iterated construction.
//!
//! Stage `j` needs a block length `N_j > j²·N_{j-1}` large enough that the
//! previous process already looks like iid uniform at scales `n ≥ ⌊N_j/j⌋`
//! (Rule 1), and a translation `ε_j < ε_{j-1}` with `ε_j·√j·√N_j ≤ η_j`
//! (Rule 2). Rule 1 is an asymptotic statement, so here it is checked with a
//! Monte Carlo ratio estimator on a finite log-spaced grid of `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{ProcessSpec, Stage};

/// Desk-scale defaults; none of these values come from a theorem.
pub const DEFAULT_N1: u64 = 1000;
pub const DEFAULT_EPSILON1: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// `η_1 > η_2 > … > 0`, indexed from stage 1.
    pub etas: Vec<f64>,
    /// Accepted `(N_j, ε_j)` in stage order.
    pub chosen: Vec<(u64, f64)>,
    /// The `n` values checked for the most recent calibration.
    pub calibration_grid: Vec<u64>,
}

impl Schedule {
    pub fn new(etas: Vec<f64>) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::config("etas", "must not be empty"));
        }
        if etas.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::config("etas", "every value must lie in (0,1)"));
        }
        if etas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("etas", "must be strictly decreasing"));
        }
        Ok(Self {
            etas,
            chosen: Vec::new(),
            calibration_grid: Vec::new(),
        })
    }

    /// `η_j = 2^{-j}` for `j = 1..=stages`.
    pub fn geometric(stages: usize) -> Self {
        Self::new((1..=stages).map(|j| 0.5f64.powi(j as i32)).collect())
            .expect("geometric etas are valid")
    }

    /// `η_j` for 1-based `j`.
    pub fn eta(&self, j: usize) -> Result<f64> {
        j.checked_sub(1)
            .and_then(|i| self.etas.get(i))
            .copied()
            .ok_or_else(|| Error::config("etas", format!("no eta for stage {j}")))
    }
}

/// Largest `ε ≤ target` with `ε·√j·√N ≤ η` in floating point.
pub fn rule2_epsilon(target: f64, eta: f64, j: usize, block_len: u64) -> f64 {
    let scale = (j as f64).sqrt() * (block_len as f64).sqrt();
    let mut eps = target.min(eta / scale);
    while !satisfies_rule2(eps, eta, j, block_len) {
        eps = f64::from_bits(eps.to_bits() - 1);
    }
    eps
}

pub fn satisfies_rule2(eps: f64, eta: f64, j: usize, block_len: u64) -> bool {
    eps * (j as f64).sqrt() * (block_len as f64).sqrt() <= eta
}

/// `count` log-spaced integers covering `[lo, hi]`, deduplicated.
pub fn log_grid(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let lo = lo.max(1);
    let hi = hi.max(lo);
    if count <= 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<u64> = (0..count)
        .map(|i| {
            let f = i as f64 / (count - 1) as f64;
            ((a + f * (b - a)).exp().round() as u64).clamp(lo, hi)
        })
        .collect();
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Candidate block lengths are `base·j·2^i`.
    pub base: u64,
    /// Give up once candidates exceed this.
    pub cap: u64,
    pub grid_factor: usize,
    pub reps: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            base: 250,
            cap: 1 << 22,
            grid_factor: 3,
            reps: 8,
        }
    }
}

/// Outcome of one accepted calibration, with the evidence behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibrated {
    pub j: usize,
    pub block_len: u64,
    pub epsilon: f64,
    pub eta: f64,
    /// `(n, mean ratio)` at every grid point of the accepted candidate.
    pub evidence: Vec<(u64, f64)>,
    pub rejected: Vec<u64>,
}

impl Calibrated {
    pub fn stage(&self) -> Result<Stage> {
        Stage::pinned(self.epsilon, self.block_len)
    }
}

/// Choose `(N_j, ε_j)` for stage `j ≥ 1` on top of the first `j-1` stages of
/// `spec`.
///
/// `ratio_estimator(spec, j-1, n, reps)` must return the mean of
/// `L(X^(j-1)[0:n-1])/√n`. A candidate is accepted when every grid ratio is
/// within `η_j·beta_hat` of `beta_hat`.
pub fn calibrate_schedule<F>(
    spec: &ProcessSpec,
    schedule: &mut Schedule,
    j: usize,
    mut ratio_estimator: F,
    beta_hat: f64,
    opts: &CalibrationOptions,
) -> Result<Calibrated>
where
    F: FnMut(&ProcessSpec, usize, u64, usize) -> Result<f64>,
{
    if j == 0 {
        return Err(Error::Precondition("stages are numbered from 1".into()));
    }
    if beta_hat.is_nan() || beta_hat <= 0.0 {
        return Err(Error::Precondition(format!(
            "beta_hat must be positive, got {beta_hat}"
        )));
    }
    if spec.depth() < j - 1 {
        return Err(Error::StageOutOfRange {
            j: j - 1,
            stages: spec.depth(),
        });
    }
    if opts.base == 0 || opts.reps == 0 {
        return Err(Error::config(
            "calibration",
            "base and reps must be positive",
        ));
    }
    let prev = spec.truncated(j - 1)?;
    let eta = schedule.eta(j)?;
    let (prev_n, prev_eps) = match j {
        1 => (1, 1.0),
        _ => {
            let s = prev.stages[j - 2];
            (s.block_len, s.epsilon)
        }
    };
    let jj = j as u64;
    let floor = jj * jj * prev_n;
    let mut candidate = opts.base * jj;
    while candidate <= floor {
        candidate *= 2;
    }
    let mut rejected = Vec::new();
    while candidate <= opts.cap {
        let grid = log_grid(candidate / jj, 2 * jj * candidate, opts.grid_factor);
        let mut evidence = Vec::with_capacity(grid.len());
        let mut ok = true;
        for &n in &grid {
            let ratio = ratio_estimator(&prev, j - 1, n, opts.reps)?;
            evidence.push((n, ratio));
            if (ratio - beta_hat).abs() > eta * beta_hat {
                ok = false;
                break;
            }
        }
        schedule.calibration_grid = grid;
        if ok {
            let epsilon = rule2_epsilon(prev_eps / 2.0, eta, j, candidate);
            debug_assert!(satisfies_rule2(epsilon, eta, j, candidate));
            schedule.chosen.push((candidate, epsilon));
            return Ok(Calibrated {
                j,
                block_len: candidate,
                epsilon,
                eta,
                evidence,
                rejected,
            });
        }
        rejected.push(candidate);
        candidate *= 2;
    }
    Err(Error::Calibration(format!(
        "no block length up to {} passed for stage {j} (rejected {rejected:?}); increase reps, the cap, or eta",
        opts.cap
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![]).is_err());
        assert!(Schedule::new(vec![0.5, 0.5]).is_err());
        assert!(Schedule::new(vec![1.0]).is_err());
        let s = Schedule::geometric(3);
        assert_eq!(s.etas, vec![0.5, 0.25, 0.125]);
        assert_eq!(s.eta(2).unwrap(), 0.25);
        assert!(s.eta(0).is_err() && s.eta(4).is_err());
    }

    #[test]
    fn rule2_holds_exactly() {
        for &(eta, j, n) in &[(0.05, 2usize, 4000u64), (0.5, 1, 1000), (0.013, 7, 123_457)] {
            let eps = rule2_epsilon(1.0, eta, j, n);
            assert!(satisfies_rule2(eps, eta, j, n));
            assert!(eps > 0.0);
        }
        // The ε_{j-1}/2 cap wins when it is tighter.
        assert_eq!(rule2_epsilon(1e-6, 0.5, 1, 10), 1e-6);
    }

    #[test]
    fn log_grid_endpoints() {
        assert_eq!(log_grid(10, 1000, 3), vec![10, 100, 1000]);
        assert_eq!(log_grid(5, 5, 4), vec![5]);
        assert_eq!(log_grid(5, 50, 1), vec![5]);
    }

    #[test]
    fn first_stage_candidate_exceeds_one() {
        let spec = ProcessSpec::iid(0);
        let mut sched = Schedule::geometric(1);
        let opts = CalibrationOptions {
            base: 1,
            cap: 64,
            grid_factor: 2,
            reps: 1,
        };
        let cal =
            calibrate_schedule(&spec, &mut sched, 1, |_, _, _, _| Ok(0.7), 0.7, &opts).unwrap();
        assert!(cal.block_len > 1);
        assert!(satisfies_rule2(cal.epsilon, 0.5, 1, cal.block_len));
    }

    #[test]
    fn calibration_walks_candidates_until_estimator_agrees() {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(1e-3, 1000).unwrap());
        let mut sched = Schedule::new(vec![0.5, 0.05]).unwrap();
        let opts = CalibrationOptions {
            base: 250,
            cap: 1 << 20,
            grid_factor: 3,
            reps: 2,
        };
        // Pretend the ratio only recovers once n >= 20_000.
        let cal = calibrate_schedule(
            &spec,
            &mut sched,
            2,
            |s, j, n, _| {
                assert_eq!(j, 1);
                assert_eq!(s.depth(), 1);
                Ok(if n >= 20_000 { 0.71 } else { 0.55 })
            },
            0.7,
            &opts,
        )
        .unwrap();
        assert!(cal.block_len > 4 * 1000);
        assert!(cal.block_len / 2 >= 20_000);
        assert_eq!(cal.block_len % (250 * 2), 0);
        assert!(cal.epsilon < 1e-3);
        assert!(satisfies_rule2(cal.epsilon, 0.05, 2, cal.block_len));
        assert_eq!(sched.chosen, vec![(cal.block_len, cal.epsilon)]);
        assert!(!cal.rejected.is_empty());
    }

    #[test]
    fn calibration_failure_is_reported() {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(1e-3, 100).unwrap());
        let mut sched = Schedule::new(vec![0.5, 0.05]).unwrap();
        let opts = CalibrationOptions {
            base: 250,
            cap: 4000,
            grid_factor: 2,
            reps: 1,
        };
        let err =
            calibrate_schedule(&spec, &mut sched, 2, |_, _, _, _| Ok(0.1), 0.7, &opts).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }
}
