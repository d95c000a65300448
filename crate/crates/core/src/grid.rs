use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Geometric,
    Linear,
    /// Non-uniform points produced by adaptive refinement.
    Adaptive,
}

/// Strictly increasing, finite, nonempty list of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

impl ScalarGrid {
    pub fn new(points: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::Input("grid must be nonempty".into()));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(LabError::Input(format!("grid point {bad} is not finite")));
        }
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
            return Err(LabError::Input(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(ScalarGrid { points, spacing })
    }

    /// `n` points from `lo` to `hi` inclusive.
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![lo], Spacing::Linear);
        }
        if n == 0 || !(hi > lo) {
            return Err(LabError::Input(format!(
                "linear grid needs n >= 1 and lo < hi (got n={n}, [{lo}, {hi}])"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Self::new(points, Spacing::Linear)
    }

    /// `n` geometrically spaced points from `lo > 0` to `hi`.
    pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0) {
            return Err(LabError::Input(format!(
                "geometric grid needs a positive start (got {lo})"
            )));
        }
        if n == 1 {
            return Self::new(vec![lo], Spacing::Geometric);
        }
        if n == 0 || !(hi > lo) {
            return Err(LabError::Input(format!(
                "geometric grid needs n >= 1 and lo < hi (got n={n}, [{lo}, {hi}])"
            )));
        }
        let ratio = (hi / lo).ln() / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
        points[0] = lo;
        points[n - 1] = hi;
        Self::new(points, Spacing::Geometric)
    }

    /// Geometric grid of offsets from `base`: `base + lo·r^i`.
    pub fn geometric_offset(base: f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let offsets = Self::geometric(lo, hi, n)?;
        let points: Vec<f64> = offsets.points.iter().map(|d| base + d).collect();
        // Offsets far below ulp(base) can collapse; drop duplicates.
        let mut dedup: Vec<f64> = Vec::with_capacity(points.len());
        for p in points {
            if dedup.last().map_or(true, |&q| p > q) {
                dedup.push(p);
            }
        }
        Self::new(dedup, Spacing::Geometric)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// `{spacing, len, min, max}` in place of the full point list.
    pub fn serialize_summary<S: serde::Serializer>(
        grid: &ScalarGrid,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Summary {
            spacing: Spacing,
            len: usize,
            min: f64,
            max: f64,
        }
        Summary {
            spacing: grid.spacing,
            len: grid.len(),
            min: grid.min(),
            max: grid.max(),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(ScalarGrid::new(vec![], Spacing::Linear).is_err());
        assert!(ScalarGrid::new(vec![1.0, 1.0], Spacing::Linear).is_err());
        assert!(ScalarGrid::new(vec![0.0, f64::NAN], Spacing::Linear).is_err());
        assert!(ScalarGrid::geometric(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        let g = ScalarGrid::geometric(1e-3, 1e6, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.min(), 1e-3);
        assert_eq!(g.max(), 1e6);
        let l = ScalarGrid::linear(0.0, 10.0, 64).unwrap();
        assert_eq!(l.max(), 10.0);
        assert!((l.points()[1] - 10.0 / 63.0).abs() < 1e-15);
    }
}
