//! Counting functionals, uniformity tests, local-uniformity checks and
//! rectangle discrepancy.

mod chi2;
mod discrepancy;
mod local;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{wrap_unit, TorusPoint};

pub use chi2::{chi_square_counts, uniformity_chi_square, ChiSquare};
pub use discrepancy::{
    rectangle_discrepancy, DiscrepancyMode, DiscrepancyResult, EXACT_DISCREPANCY_CAP,
};
pub use local::{
    twin_shift_uniformity_check, variance_condition_fit, variance_constant_after_hat,
    LocalUniformityParams, TwinShiftOptions, TwinShiftReport, VarianceFit, VarianceWindow,
};

/// Axis-aligned rectangle on the torus, `[x0, x0+width) × [y0, y0+height)`
/// with both ranges taken mod 1, that fits in a subsquare of side
/// `container_side`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionQuery {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
    pub container_side: f64,
}

impl RegionQuery {
    pub fn new(x0: f64, y0: f64, width: f64, height: f64, container_side: f64) -> Result<Self> {
        let r = Self {
            x0: wrap_unit(x0),
            y0: wrap_unit(y0),
            width,
            height,
            container_side,
        };
        r.validate()?;
        Ok(r)
    }

    /// The whole torus.
    pub fn full() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            width: 1.0,
            height: 1.0,
            container_side: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.width) || !unit(self.height) {
            return Err(Error::Precondition(format!(
                "rectangle sides must lie in (0,1], got {}×{}",
                self.width, self.height
            )));
        }
        if !unit(self.container_side) {
            return Err(Error::Precondition(
                "container side must lie in (0,1]".into(),
            ));
        }
        if self.width > self.container_side || self.height > self.container_side {
            return Err(Error::Precondition(format!(
                "rectangle {}×{} does not fit in a square of side {}",
                self.width, self.height, self.container_side
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Coordinates of `p` relative to the corner, in `[0,1)²`.
    #[inline]
    pub fn local(&self, p: &TorusPoint) -> (f64, f64) {
        (wrap_unit(p.x() - self.x0), wrap_unit(p.y() - self.y0))
    }

    #[inline]
    pub fn contains(&self, p: &TorusPoint) -> bool {
        let (u, v) = self.local(p);
        u < self.width && v < self.height
    }

    /// The rectangle moved by `dx` in the first coordinate.
    pub fn shifted(&self, dx: f64) -> Self {
        Self {
            x0: wrap_unit(self.x0 + dx),
            ..*self
        }
    }
}

/// Number of points inside `region`.
pub fn count_in_region(points: &[TorusPoint], region: &RegionQuery) -> usize {
    points.iter().filter(|p| region.contains(p)).count()
}

/// Serialized form of every statistical check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub params: serde_json::Value,
    pub seed: u64,
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().fold(0.0, |a, x| a + x) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn count_examples() {
        let r = RegionQuery::new(0.2, 0.2, 0.3, 0.3, 0.5).unwrap();
        assert_eq!(count_in_region(&[], &r), 0);
        let pts = [p(0.1, 0.1), p(0.9, 0.9), p(0.5, 0.5)];
        assert_eq!(count_in_region(&pts, &RegionQuery::full()), 3);
        let corner = RegionQuery::new(0.85, 0.85, 0.3, 0.3, 0.3).unwrap();
        assert_eq!(count_in_region(&pts[..2], &corner), 2);
    }

    #[test]
    fn region_validation() {
        assert!(RegionQuery::new(0.0, 0.0, 0.0, 0.1, 1.0).is_err());
        assert!(RegionQuery::new(0.0, 0.0, 0.2, 0.1, 0.15).is_err());
        assert!(RegionQuery::new(0.0, 0.0, 0.2, 1.5, 1.0).is_err());
    }

    #[test]
    fn mean_variance_basics() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(mean_variance(&[7.0]), (7.0, 0.0));
    }

    // Dyadic coordinates keep every wrap exact so membership never flips.
    fn dyadic() -> impl Strategy<Value = f64> {
        (0u32..1024).prop_map(|k| (k as f64 + 0.5) / 1024.0)
    }

    fn dyadic_points() -> impl Strategy<Value = Vec<TorusPoint>> {
        proptest::collection::vec((dyadic(), dyadic()).prop_map(|(x, y)| p(x, y)), 0..200)
    }

    proptest! {
        #[test]
        fn additive_over_split(pts in dyadic_points(), x0 in 0u32..1024, y0 in 0u32..1024, w1 in 1u32..256, w2 in 1u32..256, h in 1u32..512) {
            let f = |k: u32| k as f64 / 1024.0;
            let whole = RegionQuery::new(f(x0), f(y0), f(w1 + w2), f(h), 1.0).unwrap();
            let left = RegionQuery::new(f(x0), f(y0), f(w1), f(h), 1.0).unwrap();
            let right = RegionQuery::new(f(x0 + w1), f(y0), f(w2), f(h), 1.0).unwrap();
            prop_assert_eq!(count_in_region(&pts, &whole), count_in_region(&pts, &left) + count_in_region(&pts, &right));
        }

        #[test]
        fn invariant_under_joint_translation(pts in dyadic_points(), x0 in 0u32..1024, y0 in 0u32..1024, w in 1u32..512, h in 1u32..512, dx in 0u32..1024, dy in 0u32..1024) {
            let f = |k: u32| k as f64 / 1024.0;
            let r = RegionQuery::new(f(x0), f(y0), f(w), f(h), 1.0).unwrap();
            let moved_r = RegionQuery::new(f(x0) + f(dx), f(y0) + f(dy), f(w), f(h), 1.0).unwrap();
            let moved: Vec<_> = pts.iter().map(|q| p(q.x() + f(dx), q.y() + f(dy))).collect();
            prop_assert_eq!(count_in_region(&pts, &r), count_in_region(&moved, &moved_r));
        }
    }
}
