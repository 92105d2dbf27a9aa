//! Random-access construction of the iterated twin-city processes.
//!
//! Stage `j` of a [`ProcessSpec`] turns `X^(j-1)` into `X^(j)`:
//!
//! 1. the hat transform cuts `X^(j-1)` into blocks of `N` consecutive points
//!    and follows each block with its ε-translates, so block `k` of the hat
//!    process is `X_kN, …, X_(k+1)N-1, X_kN(ε), …, X_(k+1)N-1(ε)`;
//! 2. the hat process is re-indexed by the stage's shift index `I`,
//!    `X^(j)_t = hat_(t+I)`, which turns period-`2N` stationarity in
//!    distribution into plain stationarity once `I` is uniform on `[0, 2N)`.
//!
//! Nothing is materialized. [`ProcessSpec::eval`] walks the stages downward
//! mapping the index, then applies the collected translations upward starting
//! from the base point, so every point costs `O(j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, CounterStream};
use crate::torus::TorusPoint;

/// One `T_{ε,N}` transformation with its realized shift index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub epsilon: f64,
    pub block_len: u64,
    pub shift_index: u64,
}

impl Stage {
    pub fn new(epsilon: f64, block_len: u64, shift_index: u64) -> Result<Self> {
        let stage = Self {
            epsilon,
            block_len,
            shift_index,
        };
        stage.validate(0)?;
        Ok(stage)
    }

    /// Shift index 0: the hat process itself.
    pub fn pinned(epsilon: f64, block_len: u64) -> Result<Self> {
        Self::new(epsilon, block_len, 0)
    }

    pub fn period(&self) -> u64 {
        2 * self.block_len
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidStage { index, reason });
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} not in (0,1)", self.epsilon));
        }
        if self.block_len == 0 {
            return bad("block_len must be at least 1".into());
        }
        if self.block_len > (i64::MAX as u64) / 4 {
            return bad(format!("block_len {} too large", self.block_len));
        }
        if self.shift_index >= self.period() {
            return bad(format!(
                "shift_index {} not in [0, {})",
                self.shift_index,
                self.period()
            ));
        }
        Ok(())
    }
}

/// Map hat-process index `u` to the index of the underlying point and
/// whether that point appears translated.
///
/// Blocks have length `2N` and block boundaries use floor division, so
/// negative indices belong to negative blocks.
#[inline]
pub fn hat_index_map(u: i64, block_len: u64) -> (i64, bool) {
    let n = block_len as i64;
    let k = u.div_euclid(2 * n);
    let r = u.rem_euclid(2 * n);
    if r < n {
        (k * n + r, false)
    } else {
        (k * n + (r - n), true)
    }
}

/// Full recipe for `X^(j)`: base seed plus the ordered stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub base_seed: u64,
    #[serde(default)]
    pub stages: Vec<Stage>,
}

impl ProcessSpec {
    /// The iid uniform process.
    pub fn iid(base_seed: u64) -> Self {
        Self {
            base_seed,
            stages: Vec::new(),
        }
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.stages.iter().enumerate() {
            s.validate(i + 1)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copy of the spec with a different base seed.
    pub fn reseeded(&self, base_seed: u64) -> Self {
        Self {
            base_seed,
            stages: self.stages.clone(),
        }
    }

    /// First `j` stages only, describing `X^(j)`.
    pub fn truncated(&self, j: usize) -> Result<Self> {
        self.check_stage(j)?;
        Ok(Self {
            base_seed: self.base_seed,
            stages: self.stages[..j].to_vec(),
        })
    }

    fn check_stage(&self, j: usize) -> Result<()> {
        if j > self.stages.len() {
            Err(Error::StageOutOfRange {
                j,
                stages: self.stages.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `X^(j)_t`.
    pub fn eval(&self, j: usize, t: i64) -> Result<TorusPoint> {
        self.check_stage(j)?;
        let mut stream = CounterStream::new(self.base_seed);
        Ok(self.eval_with_base(j, t, |i| base_point(&mut stream, i)))
    }

    /// Like [`eval`](Self::eval) but reading `X^(0)` from `base`. Panics if
    /// `j` exceeds the number of stages.
    pub fn eval_with_base<F>(&self, j: usize, t: i64, mut base: F) -> TorusPoint
    where
        F: FnMut(i64) -> TorusPoint,
    {
        let mut shifted = 0u64;
        let mut extra: Vec<bool> = Vec::new();
        let mut idx = t;
        for (level, stage) in self.stages[..j].iter().enumerate().rev() {
            let (v, s) = hat_index_map(idx + stage.shift_index as i64, stage.block_len);
            if level < 64 {
                shifted |= (s as u64) << level;
            } else {
                if extra.len() < level - 63 {
                    extra.resize(level - 63, false);
                }
                extra[level - 64] = s;
            }
            idx = v;
        }
        let mut p = base(idx);
        for (level, stage) in self.stages[..j].iter().enumerate() {
            let s = if level < 64 {
                shifted >> level & 1 == 1
            } else {
                extra[level - 64]
            };
            if s {
                p = p.translate(stage.epsilon);
            }
        }
        p
    }

    /// `[X^(j)_a, …, X^(j)_b]`.
    pub fn sample_segment(&self, j: usize, a: i64, b: i64) -> Result<Vec<TorusPoint>> {
        self.check_stage(j)?;
        if a > b {
            return Err(Error::EmptySegment { a, b });
        }
        let mut stream = CounterStream::new(self.base_seed);
        Ok((a..=b)
            .map(|t| self.eval_with_base(j, t, |i| base_point(&mut stream, i)))
            .collect())
    }

    /// `X^(j)[0:n-1]`; empty when `n == 0`.
    pub fn prefix(&self, j: usize, n: usize) -> Result<Vec<TorusPoint>> {
        if n == 0 {
            self.check_stage(j)?;
            return Ok(Vec::new());
        }
        self.sample_segment(j, 0, n as i64 - 1)
    }
}

/// `X^(0)_t` under `seed`.
pub fn base_eval(seed: u64, t: i64) -> TorusPoint {
    base_point(&mut CounterStream::new(seed), t)
}

#[inline]
fn base_point(stream: &mut CounterStream, t: i64) -> TorusPoint {
    let (x, y) = stream.pair(t);
    TorusPoint::new(x, y)
}

/// Draw every stage's shift index independently and uniformly on
/// `[0, 2N_j)`, deterministically from `rng_seed`.
pub fn draw_shift_indices(spec: &ProcessSpec, rng_seed: u64) -> ProcessSpec {
    let mut rng = rng::seeded(rng_seed);
    let stages = spec
        .stages
        .iter()
        .map(|s| Stage {
            shift_index: rng::uniform_below(&mut rng, s.period()),
            ..*s
        })
        .collect();
    ProcessSpec {
        base_seed: spec.base_seed,
        stages,
    }
}

/// `(t·φ1 mod 1, t·φ2 mod 1)` for `t = 1..=n`.
pub fn kronecker_sequence(phi1: f64, phi2: f64, n: usize) -> Vec<TorusPoint> {
    (1..=n)
        .map(|t| {
            let t = t as f64;
            TorusPoint::new((t * phi1).fract(), (t * phi2).fract())
        })
        .collect()
}

/// Kronecker sequence with the default irrationals √2 and √3.
pub fn default_kronecker(n: usize) -> Vec<TorusPoint> {
    kronecker_sequence(2f64.sqrt(), 3f64.sqrt(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::torus_distance;
    use proptest::prelude::*;

    fn one_stage(seed: u64, eps: f64, n: u64, shift: u64) -> ProcessSpec {
        ProcessSpec::iid(seed).with_stage(Stage::new(eps, n, shift).unwrap())
    }

    #[test]
    fn base_eval_is_deterministic() {
        assert_eq!(base_eval(11, 5), base_eval(11, 5));
        assert_ne!(base_eval(11, 5), base_eval(12, 5));
        let p = base_eval(11, -3);
        assert!((0.0..1.0).contains(&p.x()) && (0.0..1.0).contains(&p.y()));
    }

    #[test]
    fn hat_index_map_examples() {
        assert_eq!(hat_index_map(4, 3), (1, true));
        assert_eq!(hat_index_map(7, 3), (4, false));
        assert_eq!(hat_index_map(-1, 3), (-1, true));
        assert_eq!(hat_index_map(0, 1), (0, false));
        assert_eq!(hat_index_map(1, 1), (0, true));
    }

    #[test]
    fn every_base_index_hit_twice_per_block() {
        let n = 7u64;
        for k in -3i64..3 {
            let mut hits = vec![(0, 0); n as usize];
            for u in (2 * n as i64 * k)..(2 * n as i64 * (k + 1)) {
                let (v, s) = hat_index_map(u, n);
                let r = (v - k * n as i64) as usize;
                if s {
                    hits[r].1 += 1;
                } else {
                    hits[r].0 += 1;
                }
            }
            assert!(hits.iter().all(|&h| h == (1, 1)));
        }
    }

    #[test]
    fn eval_stage_zero_is_base() {
        let spec = one_stage(3, 0.1, 4, 2);
        for t in -10..10 {
            assert_eq!(spec.eval(0, t).unwrap(), base_eval(3, t));
        }
    }

    #[test]
    fn eval_one_stage_example() {
        let spec = one_stage(9, 0.25, 3, 0);
        assert_eq!(spec.eval(1, 4).unwrap(), base_eval(9, 1).translate(0.25));
        // r < N branch keeps the second coordinate of the mapped base point.
        assert_eq!(spec.eval(1, 7).unwrap(), base_eval(9, 4));
    }

    #[test]
    fn eval_rejects_out_of_range_stage() {
        let spec = one_stage(1, 0.1, 3, 0);
        assert!(matches!(
            spec.eval(2, 0),
            Err(Error::StageOutOfRange { j: 2, stages: 1 })
        ));
    }

    #[test]
    fn segment_examples() {
        let spec = one_stage(5, 0.3, 4, 0);
        assert_eq!(
            spec.sample_segment(1, 2, 2).unwrap(),
            vec![spec.eval(1, 2).unwrap()]
        );
        let iid: Vec<_> = (0..10).map(|t| base_eval(5, t)).collect();
        assert_eq!(spec.sample_segment(0, 0, 9).unwrap(), iid);
        let seg = spec.sample_segment(1, 0, 7).unwrap();
        for r in 0..4 {
            assert_eq!(seg[r], base_eval(5, r as i64));
            assert_eq!(seg[r + 4], base_eval(5, r as i64).translate(0.3));
        }
        assert!(matches!(
            spec.sample_segment(1, 3, 2),
            Err(Error::EmptySegment { .. })
        ));
    }

    #[test]
    fn stage_validation() {
        assert!(Stage::new(0.0, 3, 0).is_err());
        assert!(Stage::new(1.0, 3, 0).is_err());
        assert!(Stage::new(0.5, 0, 0).is_err());
        assert!(Stage::new(0.5, 3, 6).is_err());
        assert!(Stage::new(0.5, 3, 5).is_ok());
    }

    #[test]
    fn spec_json_schema() {
        let spec = one_stage(42, 0.125, 10, 3);
        let v: serde_json::Value = serde_json::from_str(&spec.to_json().unwrap()).unwrap();
        assert_eq!(v["base_seed"], 42);
        assert_eq!(v["stages"][0]["epsilon"], 0.125);
        assert_eq!(v["stages"][0]["block_len"], 10);
        assert_eq!(v["stages"][0]["shift_index"], 3);
        let back = ProcessSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
        let bad =
            r#"{"base_seed": 1, "stages": [{"epsilon": 0.5, "block_len": 2, "shift_index": 4}]}"#;
        assert!(ProcessSpec::from_json(bad).is_err());
    }

    #[test]
    fn shift_indices_deterministic_and_in_range() {
        let spec = ProcessSpec::iid(0)
            .with_stage(Stage::pinned(0.1, 1).unwrap())
            .with_stage(Stage::pinned(0.05, 5).unwrap());
        let a = draw_shift_indices(&spec, 77);
        assert_eq!(a, draw_shift_indices(&spec, 77));
        for seed in 0..200 {
            let d = draw_shift_indices(&spec, seed);
            assert!(d.stages[0].shift_index < 2);
            assert!(d.stages[1].shift_index < 10);
            d.validate().unwrap();
        }
    }

    #[test]
    fn kronecker_examples() {
        let k = kronecker_sequence(0.5, 0.5, 4);
        let expect = [(0.5, 0.5), (0.0, 0.0), (0.5, 0.5), (0.0, 0.0)];
        for (p, e) in k.iter().zip(expect) {
            assert_eq!((p.x(), p.y()), e);
        }
        let first = default_kronecker(1)[0];
        assert!((first.x() - 0.414214).abs() < 1e-6);
        assert!((first.y() - 0.732051).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn hat_index_periodicity(u in -1_000_000i64..1_000_000, n in 1u64..500) {
            let (v0, s0) = hat_index_map(u, n);
            let (v1, s1) = hat_index_map(u + 2 * n as i64, n);
            prop_assert_eq!(v1, v0 + n as i64);
            prop_assert_eq!(s0, s1);
        }

        #[test]
        fn twin_identity(seed in any::<u64>(), n in 1u64..40, k in -5i64..5, r in 0u64..40, eps in 0.001..0.999f64) {
            let r = r % n;
            let n_i = n as i64;
            let spec = ProcessSpec::iid(seed)
                .with_stage(Stage::new(0.37, 3, 1).unwrap())
                .with_stage(Stage::pinned(eps, n).unwrap());
            let t = 2 * k * n_i + r as i64;
            let lhs = spec.eval(2, t + n_i).unwrap();
            let rhs = spec.eval(2, t).unwrap().translate(eps);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn random_access_consistency(seed in any::<u64>(), a in -200i64..200, len in 0i64..60, shift in 0u64..8) {
            let spec = ProcessSpec::iid(seed)
                .with_stage(Stage::new(0.2, 4, shift).unwrap())
                .with_stage(Stage::new(0.1, 9, shift * 2).unwrap());
            let seg = spec.sample_segment(2, a, a + len).unwrap();
            for (i, p) in seg.iter().enumerate() {
                prop_assert_eq!(*p, spec.eval(2, a + i as i64).unwrap());
            }
        }

        #[test]
        fn translation_equivariance(seed in any::<u64>(), t in -500i64..500, delta in 0.0..1.0f64) {
            let spec = ProcessSpec::iid(seed)
                .with_stage(Stage::new(0.3, 5, 7).unwrap())
                .with_stage(Stage::new(0.05, 11, 2).unwrap());
            let mut stream = CounterStream::new(seed);
            let shifted = spec.eval_with_base(2, t, |i| {
                let (x, y) = stream.pair(i);
                TorusPoint::new(x, y).translate(delta)
            });
            let direct = spec.eval(2, t).unwrap().translate(delta);
            prop_assert!(torus_distance(shifted, direct) < 1e-12);
        }
    }
}
