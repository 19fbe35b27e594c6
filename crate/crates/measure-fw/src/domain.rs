//! Compact axis-aligned box domains.

use crate::error::{FwError, Result};

/// A point in the box; the coordinate count is the domain dimension.
pub type Point = Vec<f64>;

/// Compact axis-aligned box `[lower_1, upper_1] x ... x [lower_d, upper_d]`
/// with nonempty interior (strict inequality per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(FwError::argument(
                "box bounds must be nonempty and of equal dimension",
            ));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(FwError::argument(format!(
                    "box requires finite lower < upper per coordinate, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[a, b]`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Boundary points are feasible (closed box).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (lo, hi))| xi.is_finite() && *xi >= *lo && *xi <= *hi)
    }

    /// Euclidean distance between the two corners.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Projects a point onto the box, coordinate-wise.
    pub fn clamp(&self, x: &[f64]) -> Point {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xi, (lo, hi))| xi.max(*lo).min(*hi))
            .collect()
    }

    pub(crate) fn check_contains(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(FwError::OutsideDomain { point: x.to_vec() })
        }
    }
}

/// Lexicographic comparison of points; total order used for deterministic
/// tie-breaking (NaNs are rejected upstream by domain checks).
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_interior() {
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(BoxDomain::interval(1.0, 1.0).is_err());
        assert!(BoxDomain::interval(2.0, 1.0).is_err());
    }

    #[test]
    fn boundary_is_feasible() {
        let b = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[-1.0, 1.0]));
        assert!(!b.contains(&[-1.0, 1.0 + 1e-12]));
        assert!(!b.contains(&[0.5]));
    }

    #[test]
    fn diameter_is_corner_distance() {
        let b = BoxDomain::new(vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert!((b.diameter() - 5.0).abs() < 1e-15);
        assert_eq!(BoxDomain::interval(0.0, 1.0).unwrap().diameter(), 1.0);
    }

    #[test]
    fn clamp_projects() {
        let b = BoxDomain::interval(0.0, 1.0).unwrap();
        assert_eq!(b.clamp(&[1.7]), vec![1.0]);
        assert_eq!(b.clamp(&[-0.2]), vec![0.0]);
    }
}
