use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

/// Equally spaced sampling of one gait cycle over [0, 100] percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    num_points: usize,
}

impl GridSpec {
    pub fn new(num_points: usize) -> Result<Self> {
        if num_points < 2 {
            return Err(GaitError::arg(format!(
                "a gait-cycle grid needs at least 2 points, got {num_points}"
            )));
        }
        Ok(GridSpec { num_points })
    }

    /// Validate explicit sample positions and return the matching grid.
    pub fn from_positions(positions: &[f64]) -> Result<Self> {
        let grid = GridSpec::new(positions.len())?;
        let expected = grid.positions();
        if positions[0] != 0.0 || positions[positions.len() - 1] != 100.0 {
            return Err(GaitError::data("grid must start at 0 and end at 100"));
        }
        let step = 100.0 / (positions.len() - 1) as f64;
        for (l, (&p, &e)) in positions.iter().zip(&expected).enumerate() {
            if l > 0 && p <= positions[l - 1] {
                return Err(GaitError::data("grid positions must be strictly increasing"));
            }
            if (p - e).abs() > 1e-9 * step {
                return Err(GaitError::data(format!(
                    "grid position {l} = {p} deviates from uniform spacing (expected {e})"
                )));
            }
        }
        Ok(grid)
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// Sample positions in percent of the gait cycle.
    pub fn positions(&self) -> Vec<f64> {
        let last = (self.num_points - 1) as f64;
        (0..self.num_points)
            .map(|l| {
                if l + 1 == self.num_points {
                    100.0
                } else {
                    100.0 * l as f64 / last
                }
            })
            .collect()
    }

    /// Trapezoidal quadrature weights on the cycle rescaled to unit length.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = 1.0 / (self.num_points - 1) as f64;
        let mut w = vec![h; self.num_points];
        w[0] = h / 2.0;
        w[self.num_points - 1] = h / 2.0;
        w
    }
}

impl Default for GridSpec {
    /// 1% increments: 101 points.
    fn default() -> Self {
        GridSpec { num_points: 101 }
    }
}
