use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = i·T/n`, `i = 0..=n`, on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {t_end}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs at least one subinterval".into()));
        }
        Ok(Self { t_end, n })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.t_end
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights; they sum to `T`.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.n + 1];
        w[0] = 0.5 * h;
        w[self.n] = 0.5 * h;
        w
    }

    /// Index of the node equal to `t` up to rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step();
        let i = x.round();
        if (x - i).abs() < 1e-9 && i >= 0.0 && i as usize <= self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Trapezoid integral of grid samples over `[0, T]`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Running trapezoid integral `t_j ↦ ∫_0^{t_j} f`.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let h = self.step();
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in f.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }
}
