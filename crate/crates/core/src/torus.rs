//! Flat-torus and unit-square geometry.
//!
//! Every point lives in `[0,1)²`. The same coordinates can be measured with the
//! plain Euclidean metric of the unit square, the flat-torus metric (opposite
//! edges identified), or the free-on-boundary metric where travel along the
//! square's boundary costs nothing.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Reduce `v` to its canonical representative in `[0,1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let r = v - v.floor();
    // `v.floor()` can round such that `r == 1.0` for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of the flat torus, stored canonically in `[0,1)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    /// Builds a point, normalizing both coordinates mod 1.
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: wrap_unit(x),
            y: wrap_unit(y),
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Distance to the boundary of the unit square.
    #[inline]
    pub fn boundary_distance(&self) -> f64 {
        self.x.min(1.0 - self.x).min(self.y.min(1.0 - self.y))
    }

    /// Shift the first coordinate by `eps` modulo 1; the second coordinate is
    /// left alone.
    #[inline]
    pub fn translate(&self, eps: f64) -> Self {
        Self {
            x: wrap_unit(self.x + eps),
            y: self.y,
        }
    }
}

impl From<[f64; 2]> for TorusPoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<TorusPoint> for [f64; 2] {
    fn from(p: TorusPoint) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// See [`TorusPoint::translate`].
#[inline]
pub fn translate(p: TorusPoint, eps: f64) -> TorusPoint {
    p.translate(eps)
}

/// Which of the three path metrics to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Torus,
    #[serde(rename = "free")]
    FreeBoundary,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclidean, Metric::Torus, Metric::FreeBoundary];

    #[inline]
    pub fn distance(self, a: TorusPoint, b: TorusPoint) -> f64 {
        match self {
            Metric::Euclidean => euclidean_distance(a, b),
            Metric::Torus => torus_distance(a, b),
            Metric::FreeBoundary => free_boundary_distance(a, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Torus => "torus",
            Metric::FreeBoundary => "free",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "e" => Ok(Metric::Euclidean),
            "torus" | "t" => Ok(Metric::Torus),
            "free" | "freeboundary" | "free-boundary" | "b" => Ok(Metric::FreeBoundary),
            other => Err(format!(
                "unknown metric `{other}` (expected euclidean, torus or free)"
            )),
        }
    }
}

#[inline]
pub fn euclidean_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Shortest separation of two coordinates on the circle of circumference 1.
#[inline]
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

#[inline]
pub fn torus_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    periodic_delta(a.x, b.x).hypot(periodic_delta(a.y, b.y))
}

/// The boundary is a single connected zero-cost network, so the best route
/// either goes straight or walks to the boundary and back in from it.
#[inline]
pub fn free_boundary_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    euclidean_distance(a, b).min(a.boundary_distance() + b.boundary_distance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;
    const ALMOST_ONE: f64 = 0.999_999;

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn construction_normalizes() {
        let q = p(1.25, -0.25);
        assert!((q.x() - 0.25).abs() < TOL);
        assert!((q.y() - 0.75).abs() < TOL);
        let z = p(-1e-300, 1.0);
        assert!(z.x() < 1.0 && z.y() == 0.0);
    }

    #[test]
    fn euclidean_examples() {
        assert!(
            (euclidean_distance(p(0.0, 0.0), p(ALMOST_ONE, ALMOST_ONE)) - std::f64::consts::SQRT_2)
                .abs()
                < 1e-5
        );
        assert_eq!(euclidean_distance(p(0.3, 0.4), p(0.3, 0.4)), 0.0);
        assert!((euclidean_distance(p(0.0, 0.0), p(0.3, 0.4)) - 0.5).abs() < TOL);
    }

    #[test]
    fn torus_examples() {
        assert!((torus_distance(p(0.9, 0.0), p(0.1, 0.0)) - 0.2).abs() < TOL);
        assert!((torus_distance(p(0.0, 0.0), p(0.5, 0.5)) - 0.5f64.sqrt()).abs() < TOL);
        assert_eq!(torus_distance(p(0.2, 0.3), p(0.2, 0.3)), 0.0);
    }

    #[test]
    fn free_boundary_examples() {
        assert!((free_boundary_distance(p(0.05, 0.5), p(0.95, 0.5)) - 0.1).abs() < TOL);
        assert!((free_boundary_distance(p(0.5, 0.5), p(0.5, 0.6)) - 0.1).abs() < TOL);
        assert!(free_boundary_distance(p(0.0, 0.3), p(ALMOST_ONE, 0.7)) < 2e-6);
    }

    #[test]
    fn translate_examples() {
        let a = translate(p(0.8, 0.3), 0.5);
        assert!((a.x() - 0.3).abs() < TOL && a.y() == 0.3);
        assert_eq!(translate(p(0.1, 0.9), 0.0), p(0.1, 0.9));
        let c = translate(p(0.25, 0.5), 0.25);
        assert!((c.x() - 0.5).abs() < TOL && c.y() == 0.5);
    }

    #[test]
    fn metric_parse_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("manhattan".parse::<Metric>().is_err());
    }

    fn point() -> impl Strategy<Value = TorusPoint> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn pairwise_sandwich(a in point(), b in point()) {
            let fb = free_boundary_distance(a, b);
            let t = torus_distance(a, b);
            let e = euclidean_distance(a, b);
            prop_assert!(fb <= t + TOL);
            prop_assert!(t <= e + TOL);
            prop_assert!(t <= 0.5f64.sqrt() + TOL);
        }

        #[test]
        fn symmetric_and_zero_on_diagonal(a in point(), b in point()) {
            for m in Metric::ALL {
                prop_assert!((m.distance(a, b) - m.distance(b, a)).abs() < 1e-12);
                prop_assert!(m.distance(a, a).abs() < 1e-12);
            }
        }

        #[test]
        fn triangle_inequality(a in point(), b in point(), c in point()) {
            for m in Metric::ALL {
                prop_assert!(m.distance(a, c) <= m.distance(a, b) + m.distance(b, c) + TOL);
            }
        }

        #[test]
        fn translation_is_torus_isometry(a in point(), b in point(), eps in 0.0..1.0f64) {
            let d0 = torus_distance(a, b);
            let d1 = torus_distance(a.translate(eps), b.translate(eps));
            prop_assert!((d0 - d1).abs() < TOL);
        }

        #[test]
        fn translations_compose(a in point(), e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
            let lhs = a.translate(e1).translate(e2);
            let rhs = a.translate(wrap_unit(e1 + e2));
            prop_assert!(torus_distance(lhs, rhs) < TOL);
            prop_assert_eq!(lhs.y(), a.y());
        }
    }
}
