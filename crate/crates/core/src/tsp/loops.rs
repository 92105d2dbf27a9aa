use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Metric, TorusPoint};

use super::{is_permutation, Method, PathSolution};

/// A path through `base points ∪ twins` built by detouring to each twin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopAugmented {
    /// Base points followed by the twins in pair order.
    pub points: Vec<TorusPoint>,
    pub solution: PathSolution,
    /// Length of the walk that goes out to every twin and back:
    /// `base.length + Σ 2·d(point, twin)`.
    pub loop_bound: f64,
}

/// Visit each twin immediately after its partner on the base path.
///
/// The walk that returns from every twin has length `loop_bound`; the
/// returned Hamiltonian path skips the return legs, so by the triangle
/// inequality `solution.length <= loop_bound`.
pub fn loop_augmented_path(
    points: &[TorusPoint],
    base: &PathSolution,
    twin_pairs: &[(usize, TorusPoint)],
    metric: Metric,
) -> Result<LoopAugmented> {
    let n = points.len();
    if !is_permutation(&base.order, n) {
        return Err(Error::NotAPermutation { n });
    }
    let mut twins_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut all = points.to_vec();
    let mut loop_bound = base.length;
    for &(i, twin) in twin_pairs {
        if i >= n {
            return Err(Error::TwinIndexOutOfRange { index: i, n });
        }
        twins_of[i].push(all.len());
        all.push(twin);
        loop_bound += 2.0 * metric.distance(points[i], twin);
    }
    let mut order = Vec::with_capacity(all.len());
    for &i in &base.order {
        order.push(i);
        order.extend_from_slice(&twins_of[i]);
    }
    let solution = PathSolution::build(&all, order, Method::LoopAugmented, metric);
    Ok(LoopAugmented {
        points: all,
        solution,
        loop_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessSpec;
    use crate::tsp::solve_exact;

    #[test]
    fn no_pairs_leaves_base_unchanged() {
        let pts = ProcessSpec::iid(1).prefix(0, 6).unwrap();
        let base = solve_exact(&pts, Metric::Torus).unwrap();
        let aug = loop_augmented_path(&pts, &base, &[], Metric::Torus).unwrap();
        assert_eq!(aug.solution.order, base.order);
        assert_eq!(aug.loop_bound, base.length);
        assert!((aug.solution.length - base.length).abs() < 1e-12);
    }

    #[test]
    fn one_pair_adds_two_eps() {
        let pts = ProcessSpec::iid(2).prefix(0, 5).unwrap();
        let base = solve_exact(&pts, Metric::Torus).unwrap();
        let eps = 0.01;
        let aug =
            loop_augmented_path(&pts, &base, &[(3, pts[3].translate(eps))], Metric::Torus).unwrap();
        assert!((aug.loop_bound - base.length - 2.0 * eps).abs() < 1e-12);
        assert!(aug.solution.length <= aug.loop_bound + 1e-12);
        aug.solution.verify(&aug.points).unwrap();
    }

    #[test]
    fn every_point_paired() {
        let pts = ProcessSpec::iid(3).prefix(0, 8).unwrap();
        let base = solve_exact(&pts, Metric::Torus).unwrap();
        let eps = 0.003;
        let pairs: Vec<_> = (0..8).map(|i| (i, pts[i].translate(eps))).collect();
        let aug = loop_augmented_path(&pts, &base, &pairs, Metric::Torus).unwrap();
        assert!((aug.loop_bound - base.length - 2.0 * 8.0 * eps).abs() < 1e-12);
        assert_eq!(aug.points.len(), 16);
        assert!(aug.solution.length <= aug.loop_bound + 1e-12);
    }

    #[test]
    fn out_of_range_twin() {
        let pts = ProcessSpec::iid(3).prefix(0, 4).unwrap();
        let base = solve_exact(&pts, Metric::Torus).unwrap();
        let err = loop_augmented_path(&pts, &base, &[(4, pts[0])], Metric::Torus).unwrap_err();
        assert!(matches!(err, Error::TwinIndexOutOfRange { index: 4, n: 4 }));
    }
}
