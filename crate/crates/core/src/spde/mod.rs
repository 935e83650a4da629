//! Heat-type equations `du = A u dt + Σ_ℓ (M_ℓ u + g_ℓ) ⋄ dX_ℓ` on a periodic
//! interval.

mod evolution;
mod heat;

pub use evolution::{
    check_parabolicity_general, energy_report, solve_evolution_chaos, ChaosField, EnergyReport,
    EvolutionOptions, EvolutionProblem, EvolutionSolution, GeneralParabolicity, ModeSelection,
};
pub use heat::{
    check_parabolicity, heat_second_moment, solve_heat_closed, HeatInput, HeatProblem,
    ParabolicityReport,
};

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic grid `x_j = j·L/n` on `[0, L)`, `n` even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub length: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("spatial grid needs an even n ≥ 2, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn step(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.step()).collect()
    }

    /// Number of stored modes `0..=n/2`.
    pub fn n_modes(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.length
    }

    /// Symbol of the forward difference seminorm, `|e^{iyh} − 1|²/h²`.
    pub fn difference_symbol(&self, m: usize) -> f64 {
        let h = self.step();
        (2.0 * (PI * m as f64 / self.n as f64).sin() / h).powi(2)
    }

    /// Weight of mode `m` in `‖v‖²_H = h Σ v_j²` when only modes `0..=n/2` are kept.
    pub fn mode_weight(&self, m: usize) -> f64 {
        let w = self.length / (self.n * self.n) as f64;
        if m == 0 || m == self.n / 2 {
            w
        } else {
            2.0 * w
        }
    }

    /// `‖v‖²_H = h Σ v_j²`.
    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        self.step() * v.iter().map(|x| x * x).sum::<f64>()
    }

    /// `‖v‖²_H + ‖D₊v‖²_H` with periodic forward differences.
    pub fn norm_x_sq(&self, v: &[f64]) -> f64 {
        let h = self.step();
        let n = v.len();
        let d: f64 = (0..n).map(|j| ((v[(j + 1) % n] - v[j]) / h).powi(2)).sum();
        self.norm_sq(v) + h * d
    }

    /// `exp(−(x − c)²/(2w²))`, periodized by nearest image.
    pub fn gaussian(&self, center: f64, width: f64) -> Vec<f64> {
        let l = self.length;
        self.nodes()
            .iter()
            .map(|&x| {
                let mut d = (x - center).rem_euclid(l);
                if d > 0.5 * l {
                    d -= l;
                }
                (-d * d / (2.0 * width * width)).exp()
            })
            .collect()
    }
}

/// Forward and inverse real transforms on one grid.
pub(crate) struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub(crate) fn new(space: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self { n: space.n, fwd: planner.plan_fft_forward(space.n), inv: planner.plan_fft_inverse(space.n) }
    }

    /// Modes `0..=n/2` of `Σ_j v_j e^{−2πijm/n}`.
    pub(crate) fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf.truncate(self.n / 2 + 1);
        buf
    }

    /// Inverse of [`Spectral::forward`] for real signals.
    pub(crate) fn inverse(&self, half: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        buf[n / 2] = Complex64::new(half[n / 2].re, 0.0);
        for m in 1..n / 2 {
            buf[m] = half[m];
            buf[n - m] = half[m].conj();
        }
        self.inv.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}

/// Linear operator on periodic grid functions.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialOperator {
    /// Constant-coefficient operator given by its symbol on modes `0..=n/2`;
    /// the symbol on negative modes is the conjugate, so real data stay real.
    Symbol(Vec<Complex64>),
    /// Matrix acting on nodal values.
    Matrix(DMatrix<f64>),
}

impl SpatialOperator {
    pub fn zero(space: &SpatialGrid) -> Self {
        SpatialOperator::Symbol(vec![Complex64::new(0.0, 0.0); space.n_modes()])
    }

    /// `a ∂²ₓ`, spectral.
    pub fn laplacian(space: &SpatialGrid, a: f64) -> Self {
        SpatialOperator::Symbol(
            (0..space.n_modes()).map(|m| Complex64::new(-a * space.wavenumber(m).powi(2), 0.0)).collect(),
        )
    }

    /// `σ ∂ₓ`, spectral; zero on the Nyquist mode.
    pub fn derivative(space: &SpatialGrid, sigma: f64) -> Self {
        let nyq = space.n / 2;
        SpatialOperator::Symbol(
            (0..space.n_modes())
                .map(|m| if m == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, sigma * space.wavenumber(m)) })
                .collect(),
        )
    }

    /// Three-point `a ∂²ₓ` with periodic wrap.
    pub fn fd_laplacian(space: &SpatialGrid, a: f64) -> Self {
        let n = space.n;
        let c = a / space.step().powi(2);
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] -= 2.0 * c;
            m[(j, (j + 1) % n)] += c;
            m[(j, (j + n - 1) % n)] += c;
        }
        SpatialOperator::Matrix(m)
    }

    /// Central-difference `σ ∂ₓ` with periodic wrap.
    pub fn fd_derivative(space: &SpatialGrid, sigma: f64) -> Self {
        let n = space.n;
        let c = sigma / (2.0 * space.step());
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, (j + 1) % n)] += c;
            m[(j, (j + n - 1) % n)] -= c;
        }
        SpatialOperator::Matrix(m)
    }

    pub fn scale(&self, c: f64) -> Self {
        match self {
            SpatialOperator::Symbol(s) => SpatialOperator::Symbol(s.iter().map(|z| z * c).collect()),
            SpatialOperator::Matrix(m) => SpatialOperator::Matrix(m * c),
        }
    }

    pub(crate) fn check(&self, space: &SpatialGrid) -> Result<()> {
        let ok = match self {
            SpatialOperator::Symbol(s) => s.len() == space.n_modes(),
            SpatialOperator::Matrix(m) => m.nrows() == space.n && m.ncols() == space.n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("operator does not match the spatial grid".into()))
        }
    }

    pub fn to_matrix(&self, space: &SpatialGrid) -> DMatrix<f64> {
        match self {
            SpatialOperator::Matrix(m) => m.clone(),
            SpatialOperator::Symbol(_) => {
                let n = space.n;
                let mut out = DMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = self.apply(space, &e);
                    out.set_column(j, &nalgebra::DVector::from_vec(col));
                    e[j] = 0.0;
                }
                out
            }
        }
    }

    pub fn apply(&self, space: &SpatialGrid, v: &[f64]) -> Vec<f64> {
        match self {
            SpatialOperator::Matrix(m) => (m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec(),
            SpatialOperator::Symbol(s) => {
                let sp = Spectral::new(space);
                let mut hat = sp.forward(v);
                hat.iter_mut().zip(s).for_each(|(h, z)| *h *= z);
                sp.inverse(&hat)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_round_trip_and_norms_agree() {
        let g = SpatialGrid::new(7.0, 32).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| (x * 0.9).sin() + 0.3 * (3.0 * x).cos() + 0.1).collect();
        let sp = Spectral::new(&g);
        let hat = sp.forward(&v);
        let back = sp.inverse(&hat);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        let h: f64 = hat.iter().enumerate().map(|(m, c)| g.mode_weight(m) * c.norm_sqr()).sum();
        assert!((h - g.norm_sq(&v)).abs() < 1e-12);
        let x: f64 = hat
            .iter()
            .enumerate()
            .map(|(m, c)| g.mode_weight(m) * (1.0 + g.difference_symbol(m)) * c.norm_sqr())
            .sum();
        assert!((x - g.norm_x_sq(&v)).abs() < 1e-10);
    }

    #[test]
    fn spectral_operators_act_on_modes() {
        let g = SpatialGrid::new(2.0 * PI, 16).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| (2.0 * x).sin()).collect();
        let d = SpatialOperator::derivative(&g, 1.5).apply(&g, &v);
        let l = SpatialOperator::laplacian(&g, 0.5).apply(&g, &v);
        for (j, x) in g.nodes().iter().enumerate() {
            assert!((d[j] - 3.0 * (2.0 * x).cos()).abs() < 1e-12);
            assert!((l[j] + 2.0 * (2.0 * x).sin()).abs() < 1e-12);
        }
        let m = SpatialOperator::laplacian(&g, 0.5).to_matrix(&g);
        let lv = &m * nalgebra::DVector::from_vec(v);
        for (a, b) in lv.iter().zip(&l) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_operators_annihilate_constants() {
        let g = SpatialGrid::new(1.0, 8).unwrap();
        for op in [SpatialOperator::fd_laplacian(&g, 2.0), SpatialOperator::fd_derivative(&g, 3.0)] {
            assert!(op.apply(&g, &[1.0; 8]).iter().all(|x| x.abs() < 1e-12));
        }
    }
}
