//! Adjusted `|t|` over a rectangular grid of partial-R² pairs, for drawing
//! sensitivity contours.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ovb::{adjust, RestrictedFit, StrengthPair};
use crate::robustness::critical_value;

pub const DEFAULT_RESOLUTION: usize = 101;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSheet {
    pub axis_y: Vec<f64>,
    pub axis_d: Vec<f64>,
    /// `t_values[i][j]` is the adversarial `|t|` at `(axis_y[i], axis_d[j])`.
    pub t_values: Vec<Vec<f64>>,
    pub critical_value: f64,
}

/// `resolution` evenly spaced points from 0 to `hi`, both ends included.
fn axis(hi: f64, resolution: usize) -> Vec<f64> {
    let step = hi / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| if i + 1 == resolution { hi } else { i as f64 * step })
        .collect()
}

pub fn grid(
    fit: &RestrictedFit,
    alpha: f64,
    r2_y_max: f64,
    r2_d_max: f64,
    resolution: usize,
) -> Result<GridSheet> {
    if resolution < 2 {
        return Err(Error::domain(format!("grid resolution {resolution} is below 2")));
    }
    for (name, v) in [("r2_y", r2_y_max), ("r2_d", r2_d_max)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::domain(format!("{name} bound {v} outside [0, 1)")));
        }
    }
    let axis_y = axis(r2_y_max, resolution);
    let axis_d = axis(r2_d_max, resolution);
    let t_values = axis_y
        .iter()
        .map(|&ry| {
            axis_d
                .iter()
                .map(|&rd| {
                    adjust(fit, &StrengthPair { r2_y: ry, r2_d: rd })
                        .map(|a| a.t_adversarial.value())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(GridSheet {
        axis_y,
        axis_d,
        t_values,
        critical_value: critical_value(fit, alpha)?,
    })
}
