use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson statistic of `counts` against equal expected frequencies.
pub fn chi_square_counts(counts: &[u64]) -> ChiSquare {
    let cells = counts.len();
    let total: u64 = counts.iter().sum();
    let df = cells.saturating_sub(1);
    if total == 0 || df == 0 {
        return ChiSquare {
            statistic: 0.0,
            df,
            p_value: 1.0,
        };
    }
    let expected = total as f64 / cells as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = ChiSquared::new(df as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquare {
        statistic,
        df,
        p_value,
    }
}

/// Chi-square test of the points against the uniform law on `[0,1)²`
/// using a `g×g` grid of equal cells.
pub fn uniformity_chi_square(points: &[TorusPoint], g: usize) -> Result<ChiSquare> {
    if g < 2 {
        return Err(Error::Precondition(format!(
            "grid must be at least 2, got {g}"
        )));
    }
    let required = 5 * g * g;
    if points.len() < required {
        return Err(Error::UndersizedSample {
            n: points.len(),
            required,
        });
    }
    let mut counts = vec![0u64; g * g];
    for p in points {
        let cx = ((p.x() * g as f64) as usize).min(g - 1);
        let cy = ((p.y() * g as f64) as usize).min(g - 1);
        counts[cy * g + cx] += 1;
    }
    Ok(chi_square_counts(&counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y)
    }

    #[test]
    fn balanced_counts() {
        let pts: Vec<_> = (0..100)
            .map(|i| {
                p(
                    if i % 2 == 0 { 0.25 } else { 0.75 },
                    if (i / 2) % 2 == 0 { 0.25 } else { 0.75 },
                )
            })
            .collect();
        let c = uniformity_chi_square(&pts, 2).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.p_value, 1.0);
        assert_eq!(c.df, 3);
    }

    #[test]
    fn all_in_one_cell() {
        let pts = vec![p(0.1, 0.1); 100];
        let c = uniformity_chi_square(&pts, 2).unwrap();
        // n·(g²−1)
        assert!((c.statistic - 300.0).abs() < 1e-9);
        assert!(c.p_value < 1e-50);
    }

    #[test]
    fn undersized_sample() {
        let pts = vec![p(0.1, 0.1); 19];
        assert!(matches!(
            uniformity_chi_square(&pts, 2),
            Err(Error::UndersizedSample { required: 20, .. })
        ));
        assert!(uniformity_chi_square(&pts, 1).is_err());
    }
}
