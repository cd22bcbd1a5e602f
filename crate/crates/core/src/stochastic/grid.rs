use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        let dt = horizon / n_steps as f64;
        let mut points: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
        // pin the endpoint so points[n] == T exactly
        points[n_steps] = horizon;
        Ok(Self {
            horizon,
            n_steps,
            points,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Remaining time `T - t_i`.
    pub fn remaining(&self, i: usize) -> f64 {
        self.horizon - self.points[i]
    }
}
