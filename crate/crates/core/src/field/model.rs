use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::grid::TimeGrid;
use super::kernel::{KernelSpec, NormBound};
use super::quad::{cell_rule_into, integrate_panels, GaussLegendre};
use crate::error::Result;

/// Cosine basis function `m_k` (`k ≥ 1`) of `L₂((0,T))` at `t`.
pub fn cosine(k: usize, t_end: f64, t: f64) -> f64 {
    assert!(k >= 1, "basis functions are numbered from 1");
    if k == 1 {
        1.0 / t_end.sqrt()
    } else {
        (2.0 / t_end).sqrt() * (PI * (k - 1) as f64 * t / t_end).cos()
    }
}

/// `m_k` sampled on the grid nodes.
pub fn cosine_basis(k: usize, grid: &TimeGrid) -> Vec<f64> {
    grid.nodes().iter().map(|&t| cosine(k, grid.t_end(), t)).collect()
}

/// `R(t, s) = ∫_0^{min(t,s)} K(t,τ) K(s,τ) dτ` by composite Gauss-Legendre
/// with endpoint substitutions.
pub fn covariance(kernel: &KernelSpec, t: f64, s: f64) -> f64 {
    let m = t.min(s);
    if m <= 0.0 {
        return 0.0;
    }
    let ea = 2.0 * kernel.origin_exponent();
    let eb = kernel.diagonal_exponent();
    integrate_panels(|x| kernel.eval(t, x) * kernel.eval(s, x), 0.0, m, ea, eb, 16, GaussLegendre::gl16())
}

/// Discretized field: kernel, grid, the first `K` functions `M̃_k(t) = ∫_0^t K(t,s) m_k(s) ds`
/// and, on demand, the matrix of `𝒦*`.
#[derive(Debug)]
pub struct FieldModel {
    kernel: KernelSpec,
    grid: TimeGrid,
    basis_dim: usize,
    /// `basis_dim × (n+1)`, row-major.
    mtilde: Vec<f64>,
    /// `basis_dim × n` cell averages of `m̃_k = d M̃_k / dt`.
    mtilde_cells: Vec<f64>,
    kstar: OnceLock<Vec<f64>>,
}

impl Clone for FieldModel {
    fn clone(&self) -> Self {
        let kstar = OnceLock::new();
        if let Some(m) = self.kstar.get() {
            let _ = kstar.set(m.clone());
        }
        Self {
            kernel: self.kernel,
            grid: self.grid,
            basis_dim: self.basis_dim,
            mtilde: self.mtilde.clone(),
            mtilde_cells: self.mtilde_cells.clone(),
            kstar,
        }
    }
}

impl FieldModel {
    pub fn build(kernel: KernelSpec, grid: TimeGrid, basis_dim: usize) -> Result<Self> {
        kernel.validate()?;
        if basis_dim == 0 {
            return Err(crate::Error::InvalidParameter("basis dimension must be at least 1".into()));
        }
        let mtilde = build_mtilde(&kernel, &grid, basis_dim);
        let n = grid.n();
        let h = grid.step();
        let mut mtilde_cells = vec![0.0; basis_dim * n];
        for k in 0..basis_dim {
            let row = &mtilde[k * (n + 1)..(k + 1) * (n + 1)];
            for j in 0..n {
                mtilde_cells[k * n + j] = (row[j + 1] - row[j]) / h;
            }
        }
        Ok(Self { kernel, grid, basis_dim, mtilde, mtilde_cells, kstar: OnceLock::new() })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    /// `M̃_k` on the grid nodes, `k` from 1.
    pub fn mtilde(&self, k: usize) -> &[f64] {
        let n1 = self.grid.n_nodes();
        &self.mtilde[(k - 1) * n1..k * n1]
    }

    /// Cell averages of `m̃_k` (length `n`).
    pub fn mtilde_cells(&self, k: usize) -> &[f64] {
        let n = self.grid.n();
        &self.mtilde_cells[(k - 1) * n..k * n]
    }

    /// `max_{k, cells} |m̃_k|`.
    pub fn sup_mtilde(&self) -> f64 {
        self.mtilde_cells.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `Σ_k M̃_k(t_j)²`, the truncated variance of `X(t_j)`.
    pub fn truncated_variance(&self) -> Vec<f64> {
        let n1 = self.grid.n_nodes();
        (0..n1)
            .map(|j| (1..=self.basis_dim).map(|k| self.mtilde(k)[j].powi(2)).sum())
            .collect()
    }

    pub fn covariance(&self, t: f64, s: f64) -> f64 {
        covariance(&self.kernel, t, s)
    }

    /// `R(t_j, t_j)` on every node.
    pub fn variance(&self) -> Vec<f64> {
        self.grid.nodes().par_iter().map(|&t| covariance(&self.kernel, t, t)).collect()
    }

    pub fn norm_bound(&self) -> Result<NormBound> {
        self.kernel.norm_bound(self.grid.t_end())
    }

    /// Matrix of `f ↦ K(s⁺,s) f(s) + ∫_s^T f(t) ∂_tK(t,s) dt` on the nodes,
    /// row-major `(n+1) × (n+1)`.
    pub fn kstar_matrix(&self) -> &[f64] {
        self.kstar.get_or_init(|| kstar_build(&self.kernel, &self.grid))
    }

    /// `𝒦* f` for grid samples `f`.
    pub fn kstar_apply(&self, f: &[f64]) -> Vec<f64> {
        let n1 = self.grid.n_nodes();
        let a = self.kstar_matrix();
        (0..n1).map(|i| a[i * n1..(i + 1) * n1].iter().zip(f).map(|(x, y)| x * y).sum()).collect()
    }

    /// `‖W^{1/2} A W^{−1/2}‖₂` with `W` the trapezoid weights, by power iteration.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self.kstar_matrix(), &self.grid.weights())
    }

    /// `‖P𝒦*P‖` for `P` the projection onto step functions on the grid cells,
    /// with the first cell refined geometrically when the kernel is singular
    /// at the origin. Never exceeds `‖𝒦*‖` beyond quadrature error.
    pub fn galerkin_norm(&self) -> f64 {
        galerkin_norm(&self.kernel, &self.grid)
    }
}

/// Cell edges: the grid nodes, with `[0, h]` split into dyadic pieces for kernels
/// singular at the origin.
fn graded_edges(kernel: &KernelSpec, grid: &TimeGrid) -> Vec<f64> {
    let mut edges = vec![0.0];
    if kernel.origin_exponent() != 0.0 {
        let h = grid.step();
        for m in (1..=40).rev() {
            edges.push(h * 0.5f64.powi(m));
        }
    }
    edges.extend((1..=grid.n()).map(|i| grid.node(i)));
    edges
}

fn galerkin_norm(kernel: &KernelSpec, grid: &TimeGrid) -> f64 {
    let edges = graded_edges(kernel, grid);
    let nc = edges.len() - 1;
    let e0 = kernel.origin_exponent();
    let ed = kernel.diagonal_exponent();
    let gl8 = GaussLegendre::gl8();
    let gl16 = GaussLegendre::gl16();
    // f[j][i] = ∫_{cell i} K(edge_j, s) ds for i < j
    let f: Vec<Vec<f64>> = (0..=nc)
        .into_par_iter()
        .map(|j| {
            let b = edges[j];
            let mut buf = Vec::new();
            (0..j)
                .map(|i| {
                    let ea = if i == 0 { e0 } else { 0.0 };
                    let eb = if i + 1 == j { ed } else { 0.0 };
                    buf.clear();
                    let gl = if ea == 0.0 && eb == 0.0 { gl8 } else { gl16 };
                    cell_rule_into(edges[i], edges[i + 1], ea, eb, gl, &mut buf);
                    buf.iter().map(|&(x, w)| w * kernel.eval(b, x)).sum()
                })
                .collect()
        })
        .collect();
    let len: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let mut g = vec![0.0; nc * nc];
    for i in 0..nc {
        for j in i..nc {
            let hi = f[j + 1][i];
            let lo = if i < j { f[j][i] } else { 0.0 };
            g[i * nc + j] = (hi - lo) / (len[i] * len[j]).sqrt();
        }
    }
    spectral_norm(&g, &vec![1.0; nc])
}

/// `M̃_k(t_j) = ∫_0^{t_j} K(t_j, s) m_k(s) ds` for all `k ≤ dim`, node-major result
/// transposed to `dim × (n+1)`.
fn build_mtilde(kernel: &KernelSpec, grid: &TimeGrid, dim: usize) -> Vec<f64> {
    let n = grid.n();
    let h = grid.step();
    let t_end = grid.t_end();
    let gl8 = GaussLegendre::gl8();
    let gl16 = GaussLegendre::gl16();
    let e0 = kernel.origin_exponent();
    let ed = kernel.diagonal_exponent();

    // plain 8-point nodes in every cell and the basis there
    let q = gl8.len();
    let mut plain_x = vec![0.0; n * q];
    let mut plain_m = vec![0.0; n * q * dim];
    for i in 0..n {
        for (p, u) in gl8.nodes.iter().enumerate() {
            let x = (i as f64 + u) * h;
            plain_x[i * q + p] = x;
            for k in 0..dim {
                plain_m[(i * q + p) * dim + k] = cosine(k + 1, t_end, x);
            }
        }
    }

    let columns: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let mut out = vec![0.0; dim];
            if j == 0 {
                return out;
            }
            let t = grid.node(j);
            let mut buf = Vec::new();
            for i in 0..j {
                let ea = if i == 0 { e0 } else { 0.0 };
                let eb = if i + 1 == j { ed } else { 0.0 };
                if ea == 0.0 && eb == 0.0 {
                    for p in 0..q {
                        let x = plain_x[i * q + p];
                        let wk = gl8.weights[p] * h * kernel.eval(t, x);
                        let m = &plain_m[(i * q + p) * dim..(i * q + p + 1) * dim];
                        for (o, mk) in out.iter_mut().zip(m) {
                            *o += wk * mk;
                        }
                    }
                } else {
                    buf.clear();
                    let a = i as f64 * h;
                    let b = if i + 1 == j { t } else { a + h };
                    cell_rule_into(a, b, ea, eb, gl16, &mut buf);
                    for &(x, w) in &buf {
                        let wk = w * kernel.eval(t, x);
                        for (k, o) in out.iter_mut().enumerate() {
                            *o += wk * cosine(k + 1, t_end, x);
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut mt = vec![0.0; dim * (n + 1)];
    for (j, col) in columns.iter().enumerate() {
        for k in 0..dim {
            mt[k * (n + 1) + j] = col[k];
        }
    }
    mt
}

/// Product integration of `∫_{s_i}^T f(t) ∂_tK(t, s_i) dt` with `f` linear on cells.
fn kstar_build(kernel: &KernelSpec, grid: &TimeGrid) -> Vec<f64> {
    let n = grid.n();
    let n1 = n + 1;
    let h = grid.step();
    let gl = GaussLegendre::gl16();
    let ed = kernel.dt_diagonal_exponent();
    let rows: Vec<Vec<f64>> = (0..n1)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n1];
            let s = grid.node(i);
            row[i] = kernel.diag(s);
            // on the first row of a kernel singular at s = 0, use the average of
            // the s-factor over [0, h/2]
            let (dt, e_first): (Box<dyn Fn(f64) -> f64>, f64) = match *kernel {
                KernelSpec::Fbm { hurst } if i == 0 && hurst > 0.5 => {
                    let g = hurst - 0.5;
                    let avg = (0.5 * h).powf(-g) / (1.0 - g);
                    let c = super::kernel::fbm_constant(hurst) * g * avg;
                    (Box::new(move |t: f64| c * t.powf(2.0 * hurst - 2.0)), 2.0 * hurst - 2.0)
                }
                _ => (Box::new(move |t: f64| kernel.dt(t, s).unwrap_or(0.0)), ed),
            };
            let mut buf = Vec::new();
            for j in i..n {
                let a = grid.node(j);
                let b = grid.node(j + 1);
                let (mut w0, mut w1) = (0.0, 0.0);
                if j == i && i > 0 && ed != 0.0 {
                    // t = s + h·u^q; the power (t−s)^e is applied in closed form
                    let hh = b - a;
                    let q = 2.0 / (1.0 + ed);
                    for (u, w) in gl.nodes.iter().zip(&gl.weights) {
                        let lam = u.powf(q);
                        let d = w * q * hh.powf(1.0 + ed) * u * kernel.dt_regular(a + hh * lam, s);
                        w0 += d * (1.0 - lam);
                        w1 += d * lam;
                    }
                } else {
                    buf.clear();
                    cell_rule_into(a, b, if j == i { e_first } else { 0.0 }, 0.0, gl, &mut buf);
                    for &(t, w) in &buf {
                        let d = w * dt(t);
                        let lam = (t - a) / (b - a);
                        w0 += d * (1.0 - lam);
                        w1 += d * lam;
                    }
                }
                row[j] += w0;
                row[j + 1] += w1;
            }
            row
        })
        .collect();
    rows.concat()
}

/// Largest singular value of `W^{1/2} A W^{−1/2}` for row-major square `A`.
pub fn spectral_norm(a: &[f64], weights: &[f64]) -> f64 {
    let n = weights.len();
    assert_eq!(a.len(), n * n);
    let sq: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b: Vec<f64> = (0..n * n).map(|idx| sq[idx / n] * a[idx] / sq[idx % n]).collect();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    let mut bv = vec![0.0; n];
    for _ in 0..200 {
        for i in 0..n {
            bv[i] = b[i * n..(i + 1) * n].iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let mut w = vec![0.0; n];
        for i in 0..n {
            let bi = bv[i];
            for (wj, bij) in w.iter_mut().zip(&b[i * n..(i + 1) * n]) {
                *wj += bij * bi;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
        let done = (next - sigma).abs() <= 1e-10 * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}
