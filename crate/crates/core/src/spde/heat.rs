//! Closed-form solution of `u = u_0 + ∫ a u_xx + 𝔛⋄_t(σ u_x)` and its
//! non-explosion condition `A(t) ≥ ½R_σ(t,t)`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use super::{SpatialGrid, Spectral};
use crate::error::{Error, Result};
use crate::field::{covariance, FieldModel, KernelSpec};

#[derive(Debug, Clone)]
pub struct HeatProblem {
    model: FieldModel,
    space: SpatialGrid,
    a: Vec<f64>,
    sigma: Vec<f64>,
    u0: Vec<f64>,
    margin: OnceLock<(Vec<f64>, Vec<f64>)>,
}

/// What [`solve_heat_closed`] returns.
#[derive(Debug, Clone, Copy)]
pub enum HeatInput<'a> {
    /// One realization of the shift `X_σ(t)` on the time nodes.
    Shift(&'a [f64]),
    /// `E u(t, ·)`.
    Moment,
}

impl HeatProblem {
    /// `a(t) > 0` and `σ(t)` on the time nodes of `model`.
    pub fn new(model: FieldModel, space: SpatialGrid, a: Vec<f64>, sigma: Vec<f64>, u0: Vec<f64>) -> Result<Self> {
        let n1 = model.grid().n_nodes();
        for v in [&a, &sigma] {
            if v.len() != n1 {
                return Err(Error::GridMismatch { expected: n1, got: v.len() });
            }
        }
        if u0.len() != space.n {
            return Err(Error::GridMismatch { expected: space.n, got: u0.len() });
        }
        if a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("diffusion coefficient must be positive".into()));
        }
        if sigma.iter().chain(&u0).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("σ and u_0 must be finite".into()));
        }
        Ok(Self { model, space, a, sigma, u0, margin: OnceLock::new() })
    }

    pub fn constant(model: FieldModel, space: SpatialGrid, a: f64, sigma: f64, u0: Vec<f64>) -> Result<Self> {
        let n1 = model.grid().n_nodes();
        Self::new(model, space, vec![a; n1], vec![sigma; n1], u0)
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `Some((a, σ))` when both are constant.
    pub fn constants(&self) -> Option<(f64, f64)> {
        let (a, s) = (self.a[0], self.sigma[0]);
        (self.a.iter().all(|x| *x == a) && self.sigma.iter().all(|x| *x == s)).then_some((a, s))
    }

    /// `A(t) = ∫_0^t a`.
    pub fn drift_integral(&self) -> Vec<f64> {
        match self.constants() {
            Some((a, _)) => self.model.grid().nodes().iter().map(|t| a * t).collect(),
            None => self.model.grid().cumulative(&self.a),
        }
    }

    /// `R_σ(t,t) = E X_σ(t)²`: `σ²R(t,t)` by quadrature for constant `σ`,
    /// otherwise `Σ_k (∫_0^t σ m̃_k)²` over the basis of the model.
    pub fn shift_variance(&self) -> Vec<f64> {
        self.parts().1.clone()
    }

    /// `r_σ(t) = A(t) − ½R_σ(t,t)` on the time nodes.
    pub fn margin(&self) -> Vec<f64> {
        self.parts().0.clone()
    }

    fn parts(&self) -> &(Vec<f64>, Vec<f64>) {
        self.margin.get_or_init(|| {
            let rs = match self.constants() {
                Some((_, s)) => self.model.variance().iter().map(|r| s * s * r).collect(),
                None => {
                    let h = self.model.grid().step();
                    let n1 = self.model.grid().n_nodes();
                    let mut acc = vec![0.0; n1];
                    for k in 1..=self.model.basis_dim() {
                        let mut run = 0.0;
                        for (i, m) in self.model.mtilde_cells(k).iter().enumerate() {
                            run += h * m * 0.5 * (self.sigma[i] + self.sigma[i + 1]);
                            acc[i + 1] += run * run;
                        }
                    }
                    acc
                }
            };
            let big_a = self.drift_integral();
            let r = big_a.iter().zip(&rs).map(|(a, v)| a - 0.5 * v).collect();
            (r, rs)
        })
    }

    fn violates(&self, j: usize) -> bool {
        let (r, rs) = self.parts();
        r[j] < -1e-12 * (r[j] + rs[j]).abs().max(f64::MIN_POSITIVE)
    }

    /// `X_σ(t_j) = Σ_{i<j} σ̄_i (X(t_{i+1}) − X(t_i))` from samples of `X`.
    pub fn shift_path(&self, x: &[f64]) -> Vec<f64> {
        match self.constants() {
            Some((_, s)) => x.iter().map(|v| s * v).collect(),
            None => {
                let mut out = vec![0.0; x.len()];
                for i in 0..x.len() - 1 {
                    out[i + 1] = out[i] + 0.5 * (self.sigma[i] + self.sigma[i + 1]) * (x[i + 1] - x[i]);
                }
                out
            }
        }
    }
}

/// `u(t_j, ·)` for the requested node indices: `û_0 e^{−y² r_σ(t) + iyX_σ(t)}`
/// for a shift, `û_0 e^{−y² A(t)}` for the mean.
pub fn solve_heat_closed(p: &HeatProblem, input: HeatInput, nodes: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n1 = p.model.grid().n_nodes();
    if let HeatInput::Shift(z) = input {
        if z.len() != n1 {
            return Err(Error::GridMismatch { expected: n1, got: z.len() });
        }
    }
    let grid = p.model.grid();
    let (r, _) = p.parts();
    for &j in nodes {
        if j >= n1 {
            return Err(Error::InvalidParameter(format!("node {j} is outside the time grid")));
        }
        if p.violates(j) {
            return Err(Error::NegativeVariance { t: grid.node(j), value: r[j] });
        }
    }
    let sp = Spectral::new(&p.space);
    let hat0 = sp.forward(&p.u0);
    let big_a = p.drift_integral();
    let out = nodes
        .iter()
        .map(|&j| {
            let hat: Vec<Complex64> = hat0
                .iter()
                .enumerate()
                .map(|(m, c)| {
                    let y = p.space.wavenumber(m);
                    match input {
                        HeatInput::Shift(z) => {
                            c * Complex64::from_polar((-y * y * r[j].max(0.0)).exp(), y * z[j])
                        }
                        HeatInput::Moment => c * (-y * y * big_a[j]).exp(),
                    }
                })
                .collect();
            sp.inverse(&hat)
        })
        .collect();
    Ok(out)
}

/// `E‖u(t_j)‖²_H = Σ_y |û_0(y)|² e^{−2y² r_σ(t_j)}` on the grid; finite even when
/// `r_σ < 0`.
pub fn heat_second_moment(p: &HeatProblem, node: usize) -> f64 {
    let r = p.parts().0[node];
    let hat0 = Spectral::new(&p.space).forward(&p.u0);
    hat0.iter()
        .enumerate()
        .map(|(m, c)| {
            let y = p.space.wavenumber(m);
            p.space.mode_weight(m) * c.norm_sqr() * (-2.0 * y * y * r).exp()
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ParabolicityReport {
    pub holds: bool,
    pub times: Vec<f64>,
    pub margin: Vec<f64>,
    /// First grid node with negative margin.
    pub first_violation_t: Option<f64>,
    /// Root of the margin between that node and its predecessor.
    pub crossing_t: Option<f64>,
    pub condition: String,
}

fn condition_text(kernel: &KernelSpec, constant: bool) -> String {
    if !constant {
        return "A(t) ≥ R_σ(t,t)/2".into();
    }
    match kernel {
        KernelSpec::Wiener => "2a ≥ σ²".into(),
        KernelSpec::Fbm { hurst } if *hurst == 0.5 => "2a ≥ σ²".into(),
        KernelSpec::Fbm { .. } => "t^{2H−1} ≤ 2a/σ²".into(),
        KernelSpec::OuStable { .. } => "a ≥ σ²(1 − e^{−2bt})/(4bt), equivalent to 2a ≥ σ²".into(),
        KernelSpec::OuUnstable { .. } => "at ≥ σ²(e^{2bt} − 1)/(4b); holds for small t when 2a ≥ σ²".into(),
        KernelSpec::Rho { .. } => "at ≥ σ²R(t,t)/2".into(),
    }
}

/// Margin `r_σ(t)` on the grid, with the first sign change located by bisection
/// for constant coefficients and linear interpolation otherwise.
pub fn check_parabolicity(p: &HeatProblem) -> ParabolicityReport {
    let grid = p.model.grid();
    let times = grid.nodes();
    let margin = p.margin();
    let first = (1..times.len()).find(|&j| p.violates(j));
    let crossing = first.map(|j| {
        let (lo, hi) = (times[j - 1], times[j]);
        match p.constants() {
            Some((a, s)) => {
                let kernel = *p.model.kernel();
                let f = |t: f64| a * t - 0.5 * s * s * covariance(&kernel, t, t);
                let (mut lo, mut hi) = (lo, hi);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            None => {
                let (m0, m1) = (margin[j - 1], margin[j]);
                lo + (hi - lo) * m0 / (m0 - m1)
            }
        }
    });
    ParabolicityReport {
        holds: first.is_none(),
        first_violation_t: first.map(|j| times[j]),
        crossing_t: crossing,
        times,
        margin,
        condition: condition_text(p.model.kernel(), p.constants().is_some()),
    }
}
