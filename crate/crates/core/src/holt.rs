//! Holt two-parameter exponential smoothing for the electric state block.
//!
//! The filter's electric transition is the affine map `x -> alpha*x + c`
//! with `c` frozen once per tracking step from the current estimate, so
//! the map stays a pure function while reproducing the Holt forecast at
//! the estimate itself.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Level and trend state of the vector Holt smoother.
#[derive(Debug, Clone)]
pub struct HoltState {
    pub level: DVector<f64>,
    pub trend: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl HoltState {
    /// Initializes from the first two state vectors: level = x2,
    /// trend = x2 - x1.
    pub fn init(x1: &DVector<f64>, x2: &DVector<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::DimensionMismatch {
                expected: x1.len(),
                got: x2.len(),
                context: "Holt initialization vectors",
            });
        }
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parse(format!(
                    "smoothing index {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(HoltState {
            level: x2.clone(),
            trend: x2 - x1,
            alpha,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.level.len()
    }

    /// One smoothing update from the current estimate. Returns the new
    /// state and the one-step forecast `level' + trend'`.
    pub fn update(&self, estimate: &DVector<f64>) -> Result<(HoltState, DVector<f64>)> {
        if estimate.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: estimate.len(),
                context: "Holt update estimate",
            });
        }
        let level = self.alpha * estimate + (1.0 - self.alpha) * (&self.level + &self.trend);
        let trend = self.beta * (&level - &self.level) + (1.0 - self.beta) * &self.trend;
        let forecast = &level + &trend;
        Ok((
            HoltState {
                level,
                trend,
                alpha: self.alpha,
                beta: self.beta,
            },
            forecast,
        ))
    }

    /// Affine transition for the filter: gain `alpha` and offset `c`
    /// frozen at the current estimate, so that
    /// `alpha * estimate + c == update(estimate).forecast`.
    pub fn affine_transition(&self, estimate: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (_, forecast) = self.update(estimate)?;
        let c = forecast - self.alpha * estimate;
        Ok((self.alpha, c))
    }
}
