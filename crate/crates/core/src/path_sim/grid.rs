use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds in the default 6.5 hour trading day.
pub const TRADING_DAY_SECONDS: f64 = 6.5 * 3600.0;

/// Regular simulation grid, in seconds.
///
/// `unit_seconds` is the length of the model time unit: model parameters and
/// variances are expressed per unit (one trading day by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseGrid {
    pub t0: f64,
    pub step: f64,
    pub n_steps: usize,
    pub unit_seconds: f64,
}

impl DenseGrid {
    pub fn new(t0: f64, step: f64, n_steps: usize) -> Result<Self> {
        Self::with_unit(t0, step, n_steps, TRADING_DAY_SECONDS)
    }

    pub fn with_unit(t0: f64, step: f64, n_steps: usize, unit_seconds: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::arg(format!("grid step must be positive, got {step}")));
        }
        if n_steps == 0 {
            return Err(Error::arg("grid needs at least one step"));
        }
        if !(unit_seconds > 0.0) {
            return Err(Error::arg("time unit must be positive"));
        }
        Ok(Self {
            t0,
            step,
            n_steps,
            unit_seconds,
        })
    }

    /// 6.5 hour day on a 2 second grid.
    pub fn trading_day() -> Self {
        Self::trading_day_with_step(2.0).expect("static grid is valid")
    }

    pub fn trading_day_with_step(step: f64) -> Result<Self> {
        let n = TRADING_DAY_SECONDS / step;
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::arg(format!(
                "step {step} s does not divide the trading day"
            )));
        }
        Self::new(0.0, step, n.round() as usize)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.step * self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.step * i as f64
    }

    /// Step length in model time units.
    pub fn dt(&self) -> f64 {
        self.step / self.unit_seconds
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.step;
        if t < self.t0 - tol || t > self.t_end() + tol {
            return Err(Error::arg(format!(
                "time {t} outside grid range [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        let i = ((t - self.t0) / self.step).round();
        Ok((i.max(0.0) as usize).min(self.n_steps))
    }

    /// Number of grid steps in `gap` seconds; `gap` must be a whole multiple
    /// of the step.
    pub fn steps_per_gap(&self, gap: f64) -> Result<usize> {
        let k = gap / self.step;
        if !(k >= 1.0 - 1e-9) || (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::arg(format!(
                "gap {gap} s is not a positive multiple of the {} s grid step",
                self.step
            )));
        }
        Ok(k.round() as usize)
    }

    /// Position of `t` in the window, mapped to [0, 1].
    pub fn normalized(&self, t: f64) -> f64 {
        (t - self.t0) / (self.t_end() - self.t0)
    }
}
