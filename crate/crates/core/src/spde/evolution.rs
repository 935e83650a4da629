//! Chaos propagator for `u = u_0 + ∫(A u + f) + Σ_ℓ 𝔛⋄_{ℓ,t}(σ_ℓ(M_ℓ u + g_ℓ))`.
//!
//! Coefficients are swept by order. When every operator is a Fourier symbol the
//! sweep runs one spatial mode at a time with an exponential integrator; with a
//! matrix operator it runs on nodal values with Crank-Nicolson. Forcing from the
//! noise is linear in time on each cell and multiplied by the cell value of
//! `m̃`, so with `A = 0` both reduce to the quadrature of the SODE solver.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{SpatialGrid, SpatialOperator, Spectral};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::multiindex::{enumerate, MultiIndex, TruncationSpec};

type C = Complex64;

#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    pub space: SpatialGrid,
    pub fields: Vec<FieldModel>,
    pub a: SpatialOperator,
    /// `A(t) = c(t)·a` with `c` on the time nodes.
    pub a_scale: Vec<f64>,
    pub m: Vec<SpatialOperator>,
    /// Per field, `σ_ℓ(t)` on the time nodes; it multiplies `M_ℓ u + g_ℓ`.
    pub sigma: Vec<Vec<f64>>,
    pub u0: Vec<f64>,
    /// `f(t_j, x)`, indexed `[node][x]`.
    pub f: Option<Vec<Vec<f64>>>,
    /// Per field, `g_ℓ(t_j, x)`.
    pub g: Vec<Option<Vec<Vec<f64>>>>,
}

impl EvolutionProblem {
    /// `du = a u_xx dt + σ u_x ⋄ dX` with spectral derivatives.
    pub fn heat(model: FieldModel, space: SpatialGrid, a: f64, sigma: f64, u0: Vec<f64>) -> Self {
        let n1 = model.grid().n_nodes();
        Self {
            a: SpatialOperator::laplacian(&space, a),
            a_scale: vec![1.0; n1],
            m: vec![SpatialOperator::derivative(&space, sigma)],
            sigma: vec![vec![1.0; n1]],
            fields: vec![model],
            space,
            u0,
            f: None,
            g: vec![None],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.fields[0].grid().n_nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let nl = self.fields.len();
        if nl == 0 || self.m.len() != nl || self.sigma.len() != nl || self.g.len() != nl {
            return Err(Error::InvalidParameter("need one M, σ and g per field".into()));
        }
        let grid = *self.fields[0].grid();
        let n1 = grid.n_nodes();
        for f in &self.fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch { expected: n1, got: f.grid().n_nodes() });
            }
        }
        self.a.check(&self.space)?;
        for op in &self.m {
            op.check(&self.space)?;
        }
        for v in self.sigma.iter().chain(std::iter::once(&self.a_scale)) {
            if v.len() != n1 {
                return Err(Error::GridMismatch { expected: n1, got: v.len() });
            }
        }
        if self.u0.len() != self.space.n {
            return Err(Error::GridMismatch { expected: self.space.n, got: self.u0.len() });
        }
        for forcing in self.g.iter().chain(std::iter::once(&self.f)).flatten() {
            if forcing.len() != n1 {
                return Err(Error::GridMismatch { expected: n1, got: forcing.len() });
            }
            if let Some(row) = forcing.iter().find(|r| r.len() != self.space.n) {
                return Err(Error::GridMismatch { expected: self.space.n, got: row.len() });
            }
        }
        Ok(())
    }

    fn all_symbols(&self) -> bool {
        matches!(self.a, SpatialOperator::Symbol(_))
            && self.m.iter().all(|m| matches!(m, SpatialOperator::Symbol(_)))
    }

    fn n_slots(&self, truncation: &TruncationSpec) -> usize {
        let kmax = self.fields.iter().map(FieldModel::basis_dim).min().unwrap_or(0);
        truncation.max_dim.min(kmax * self.fields.len())
    }

    /// `(field, σ̄ m̃ on cells)` of a slot `(k − 1)·L + ℓ`.
    fn slot(&self, slot: usize) -> (usize, Vec<f64>) {
        let nl = self.fields.len();
        let (k, l) = ((slot - 1) / nl + 1, (slot - 1) % nl);
        let s = &self.sigma[l];
        let cells = self.fields[l]
            .mtilde_cells(k)
            .iter()
            .enumerate()
            .map(|(i, m)| 0.5 * (s[i] + s[i + 1]) * m)
            .collect();
        (l, cells)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub enum ModeSelection {
    #[default]
    All,
    /// Only these Fourier modes (`0..=n/2`); symbol operators only.
    Only(Vec<usize>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolutionOptions {
    pub modes: ModeSelection,
    /// Keep every coefficient as a space-time array.
    pub keep_coefficients: bool,
}

/// Coefficients `u_α(t_j, x_i)`, stored `[α][node][x]`.
#[derive(Debug, Clone)]
pub struct ChaosField {
    pub indices: Vec<MultiIndex>,
    pub n_nodes: usize,
    pub n_x: usize,
    data: Vec<f64>,
    lookup: HashMap<MultiIndex, usize>,
}

impl ChaosField {
    fn new(indices: Vec<MultiIndex>, n_nodes: usize, n_x: usize, data: Vec<f64>) -> Self {
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Self { indices, n_nodes, n_x, data, lookup }
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        let size = self.n_nodes * self.n_x;
        self.lookup.get(alpha).map(|&i| &self.data[i * size..(i + 1) * size])
    }

    pub fn at(&self, alpha: &MultiIndex, node: usize) -> Option<&[f64]> {
        self.get(alpha).map(|v| &v[node * self.n_x..(node + 1) * self.n_x])
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionSolution {
    pub truncation: TruncationSpec,
    pub times: Vec<f64>,
    /// Fourier modes included; `None` for the whole grid.
    pub modes: Option<Vec<usize>>,
    /// `Σ_{|α|=n} ‖u_α(t_j)‖²_H`, indexed `[n][node]`.
    pub grade_energy: Vec<Vec<f64>>,
    /// Same in the `X` norm.
    pub grade_energy_x: Vec<Vec<f64>>,
    /// `E u(t_j, ·) = u_(0)(t_j, ·)`, indexed `[node][x]`.
    pub mean: Vec<Vec<f64>>,
    pub coefficients: Option<ChaosField>,
}

impl EvolutionSolution {
    /// `E‖u(t_j)‖²_H` over the stored orders.
    pub fn energy(&self) -> Vec<f64> {
        sum_rows(&self.grade_energy)
    }

    pub fn energy_x(&self) -> Vec<f64> {
        sum_rows(&self.grade_energy_x)
    }
}

fn sum_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        out.iter_mut().zip(r).for_each(|(o, v)| *o += v);
    }
    out
}

/// Graded index list, the first position of every order, and for each index
/// its parents `(slot, √α_s, position of α − ε_s)`.
struct IndexTable {
    indices: Vec<MultiIndex>,
    starts: Vec<usize>,
    parents: Vec<Vec<(usize, f64, usize)>>,
}

impl IndexTable {
    fn new(max_order: usize, slots: usize) -> Result<Self> {
        let indices = enumerate(TruncationSpec::new(max_order, slots)?);
        let pos: HashMap<&MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut starts = vec![0; max_order + 2];
        for a in &indices {
            starts[a.order() + 1] += 1;
        }
        for n in 1..starts.len() {
            starts[n] += starts[n - 1];
        }
        let parents = indices
            .iter()
            .map(|a| {
                a.entries()
                    .iter()
                    .map(|&(s, m)| (s, (m as f64).sqrt(), pos[&a.sub_unit(s).expect("slot in support")]))
                    .collect()
            })
            .collect();
        Ok(Self { indices, starts, parents })
    }
}

/// `(e^z, φ₁(z), φ₂(z))` with `φ₁ = (e^z − 1)/z`, `φ₂ = (e^z − 1 − z)/z²`.
fn phi(z: C) -> (C, C, C) {
    let e = z.exp();
    if z.norm() < 1e-2 {
        let mut p1 = C::new(0.0, 0.0);
        let mut p2 = C::new(0.0, 0.0);
        let mut term = C::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..7 {
            p1 += term / fact / (k + 1) as f64;
            p2 += term / fact / ((k + 1) * (k + 2)) as f64;
            term *= z;
            fact *= (k + 1) as f64;
        }
        (e, p1, p2)
    } else {
        (e, (e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// Forward sweep of the propagator system over all indices up to the
/// truncation order.
pub fn solve_evolution_chaos(
    p: &EvolutionProblem,
    truncation: TruncationSpec,
    opts: &EvolutionOptions,
) -> Result<EvolutionSolution> {
    p.validate()?;
    let slots = p.n_slots(&truncation);
    let table = IndexTable::new(truncation.max_order, slots)?;
    let slot_data: Vec<(usize, Vec<f64>)> = (1..=slots).map(|s| p.slot(s)).collect();
    let truncation = TruncationSpec::new(truncation.max_order, slots.max(truncation.max_dim))?;
    if p.all_symbols() {
        spectral_sweep(p, truncation, opts, &table, &slot_data)
    } else {
        if opts.modes != ModeSelection::All {
            return Err(Error::InvalidParameter("mode selection needs symbol operators".into()));
        }
        nodal_sweep(p, truncation, opts, &table, &slot_data)
    }
}

fn symbol(op: &SpatialOperator) -> &[C] {
    match op {
        SpatialOperator::Symbol(s) => s,
        SpatialOperator::Matrix(_) => unreachable!("checked by the caller"),
    }
}

fn spectral_sweep(
    p: &EvolutionProblem,
    truncation: TruncationSpec,
    opts: &EvolutionOptions,
    table: &IndexTable,
    slot_data: &[(usize, Vec<f64>)],
) -> Result<EvolutionSolution> {
    let space = p.space;
    let grid = *p.fields[0].grid();
    let (n1, h) = (grid.n_nodes(), grid.step());
    let n_modes = space.n_modes();
    let modes: Vec<usize> = match &opts.modes {
        ModeSelection::All => (0..n_modes).collect(),
        ModeSelection::Only(v) => {
            if let Some(m) = v.iter().find(|&&m| m >= n_modes) {
                return Err(Error::InvalidParameter(format!("mode {m} exceeds n/2")));
            }
            v.clone()
        }
    };
    let sp = Spectral::new(&space);
    let u0_hat = sp.forward(&p.u0);
    let transform = |rows: &Vec<Vec<f64>>| -> Vec<Vec<C>> { rows.iter().map(|r| sp.forward(r)).collect() };
    let f_hat = p.f.as_ref().map(transform);
    let g_hat: Vec<Option<Vec<Vec<C>>>> = p.g.iter().map(|g| g.as_ref().map(transform)).collect();
    let lam = symbol(&p.a);
    let mus: Vec<&[C]> = p.m.iter().map(symbol).collect();

    let n_idx = table.indices.len();
    let max_order = truncation.max_order;
    let mut grade_energy = vec![vec![0.0; n1]; max_order + 1];
    let mut grade_energy_x = vec![vec![0.0; n1]; max_order + 1];
    let mut mean_hat = vec![vec![C::new(0.0, 0.0); n_modes]; n1];
    let mut coeff_hat = if opts.keep_coefficients { vec![C::new(0.0, 0.0); n_idx * n1 * n_modes] } else { Vec::new() };
    let mut data = vec![C::new(0.0, 0.0); n_idx * n1];

    for &m in &modes {
        let steps: Vec<(C, C, C)> =
            (0..n1 - 1).map(|j| phi(lam[m] * (h * 0.5 * (p.a_scale[j] + p.a_scale[j + 1])))).collect();
        let advance = |row: &mut [C], forcing: &dyn Fn(usize) -> (C, C)| {
            for j in 0..n1 - 1 {
                let (f0, f1) = forcing(j);
                let (e, p1, p2) = steps[j];
                row[j + 1] = e * row[j] + h * (p1 * f0 + p2 * (f1 - f0));
            }
        };
        data.iter_mut().for_each(|v| *v = C::new(0.0, 0.0));
        {
            let row = &mut data[..n1];
            row[0] = u0_hat[m];
            match &f_hat {
                Some(fh) => advance(row, &|j| (fh[j][m], fh[j + 1][m])),
                None => advance(row, &|_| (C::new(0.0, 0.0), C::new(0.0, 0.0))),
            }
        }
        for order in 1..=max_order {
            let (s, e) = (table.starts[order], table.starts[order + 1]);
            let (lower, upper) = data.split_at_mut(s * n1);
            let lower = &*lower;
            upper[..(e - s) * n1].par_chunks_mut(n1).enumerate().for_each(|(r, row)| {
                let mut f0 = vec![C::new(0.0, 0.0); n1 - 1];
                let mut f1 = vec![C::new(0.0, 0.0); n1 - 1];
                for &(slot, w, pi) in &table.parents[s + r] {
                    let (l, cells) = &slot_data[slot - 1];
                    let mu = mus[*l][m];
                    let prow = &lower[pi * n1..(pi + 1) * n1];
                    for j in 0..n1 - 1 {
                        let c = w * cells[j];
                        f0[j] += c * mu * prow[j];
                        f1[j] += c * mu * prow[j + 1];
                    }
                    if pi == 0 {
                        if let Some(gh) = &g_hat[*l] {
                            for j in 0..n1 - 1 {
                                let c = w * cells[j];
                                f0[j] += c * gh[j][m];
                                f1[j] += c * gh[j + 1][m];
                            }
                        }
                    }
                }
                advance(row, &|j| (f0[j], f1[j]));
            });
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::UnstableStep(format!("non-finite coefficient on mode {m}")));
        }
        let w = space.mode_weight(m);
        let wx = w * (1.0 + space.difference_symbol(m));
        for (i, a) in table.indices.iter().enumerate() {
            let row = &data[i * n1..(i + 1) * n1];
            for (j, v) in row.iter().enumerate() {
                grade_energy[a.order()][j] += w * v.norm_sqr();
                grade_energy_x[a.order()][j] += wx * v.norm_sqr();
                if opts.keep_coefficients {
                    coeff_hat[(i * n1 + j) * n_modes + m] = *v;
                }
            }
        }
        for j in 0..n1 {
            mean_hat[j][m] = data[j];
        }
    }

    let mean = mean_hat.iter().map(|h| sp.inverse(h)).collect();
    let coefficients = opts.keep_coefficients.then(|| {
        let mut out = Vec::with_capacity(n_idx * n1 * space.n);
        for chunk in coeff_hat.chunks(n_modes) {
            out.extend(sp.inverse(chunk));
        }
        ChaosField::new(table.indices.clone(), n1, space.n, out)
    });
    Ok(EvolutionSolution {
        truncation,
        times: grid.nodes(),
        modes: match opts.modes {
            ModeSelection::All => None,
            ModeSelection::Only(_) => Some(modes),
        },
        grade_energy,
        grade_energy_x,
        mean,
        coefficients,
    })
}

fn nodal_sweep(
    p: &EvolutionProblem,
    truncation: TruncationSpec,
    opts: &EvolutionOptions,
    table: &IndexTable,
    slot_data: &[(usize, Vec<f64>)],
) -> Result<EvolutionSolution> {
    let space = p.space;
    let nx = space.n;
    let grid = *p.fields[0].grid();
    let (n1, h) = (grid.n_nodes(), grid.step());
    let a = p.a.to_matrix(&space);
    let ms: Vec<DMatrix<f64>> = p.m.iter().map(|m| m.to_matrix(&space)).collect();
    let id = DMatrix::<f64>::identity(nx, nx);
    let constant = p.a_scale.iter().all(|c| *c == p.a_scale[0]);
    let factor = |c: f64| -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let lu = (&id - &a * (0.5 * h * c)).lu();
        if lu.is_invertible() {
            Ok(lu)
        } else {
            Err(Error::UnstableStep("Crank-Nicolson matrix is singular".into()))
        }
    };
    let lus = if constant { vec![factor(p.a_scale[0])?] } else { p.a_scale[1..].iter().map(|&c| factor(c)).collect::<Result<Vec<_>>>()? };
    let explicit: Vec<DMatrix<f64>> = if constant {
        vec![&id + &a * (0.5 * h * p.a_scale[0])]
    } else {
        p.a_scale[..n1 - 1].iter().map(|&c| &id + &a * (0.5 * h * c)).collect()
    };
    let advance = |row: &mut [f64], forcing: &dyn Fn(usize) -> DVector<f64>| {
        for j in 0..n1 - 1 {
            let k = if constant { 0 } else { j };
            let uj = DVector::from_column_slice(&row[j * nx..(j + 1) * nx]);
            let rhs = &explicit[k] * uj + forcing(j) * h;
            let next = lus[k].solve(&rhs).expect("factor is invertible");
            row[(j + 1) * nx..(j + 2) * nx].copy_from_slice(next.as_slice());
        }
    };
    let stride = n1 * nx;
    let mut data = vec![0.0; table.indices.len() * stride];
    {
        let row = &mut data[..stride];
        row[..nx].copy_from_slice(&p.u0);
        let zero = DVector::zeros(nx);
        match &p.f {
            Some(f) => advance(row, &|j| {
                (DVector::from_column_slice(&f[j]) + DVector::from_column_slice(&f[j + 1])) * 0.5
            }),
            None => advance(row, &|_| zero.clone()),
        }
    }
    for order in 1..=truncation.max_order {
        let (s, e) = (table.starts[order], table.starts[order + 1]);
        let (lower, upper) = data.split_at_mut(s * stride);
        let lower = &*lower;
        upper[..(e - s) * stride].par_chunks_mut(stride).enumerate().for_each(|(r, row)| {
            let parents = &table.parents[s + r];
            // M_ℓ u_{α−ε} (+ g_ℓ) on every node, per parent
            let gs: Vec<Vec<DVector<f64>>> = parents
                .iter()
                .map(|&(slot, _, pi)| {
                    let l = slot_data[slot - 1].0;
                    (0..n1)
                        .map(|j| {
                            let u = DVector::from_column_slice(&lower[pi * stride + j * nx..pi * stride + (j + 1) * nx]);
                            let mut g = &ms[l] * u;
                            if pi == 0 {
                                if let Some(gl) = &p.g[l] {
                                    g += DVector::from_column_slice(&gl[j]);
                                }
                            }
                            g
                        })
                        .collect()
                })
                .collect();
            advance(row, &|j| {
                let mut acc = DVector::zeros(nx);
                for (q, &(slot, w, _)) in parents.iter().enumerate() {
                    let c = 0.5 * w * slot_data[slot - 1].1[j];
                    acc += (&gs[q][j] + &gs[q][j + 1]) * c;
                }
                acc
            });
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnstableStep("non-finite coefficient".into()));
    }
    let mut grade_energy = vec![vec![0.0; n1]; truncation.max_order + 1];
    let mut grade_energy_x = grade_energy.clone();
    for (i, a) in table.indices.iter().enumerate() {
        for j in 0..n1 {
            let v = &data[i * stride + j * nx..i * stride + (j + 1) * nx];
            grade_energy[a.order()][j] += space.norm_sq(v);
            grade_energy_x[a.order()][j] += space.norm_x_sq(v);
        }
    }
    let mean = (0..n1).map(|j| data[j * nx..(j + 1) * nx].to_vec()).collect();
    let coefficients =
        opts.keep_coefficients.then(|| ChaosField::new(table.indices.clone(), n1, nx, data));
    Ok(EvolutionSolution {
        truncation,
        times: grid.nodes(),
        modes: None,
        grade_energy,
        grade_energy_x,
        mean,
        coefficients,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralParabolicity {
    /// Largest `δ_0` for which `2(Av,v) + Σ𝔎²‖Mv‖² + δ_0‖v‖²_X ≤ C_0‖v‖²_H`
    /// holds with `C_0` independent of the frequency.
    pub delta0: f64,
    pub c0: f64,
    pub holds: bool,
    /// `δ_A`, `C_A` of `(Av,v) + δ_A‖v‖²_X ≤ C_A‖v‖²_H`, `‖Av‖_{X'} ≤ C_A‖v‖_X`.
    pub delta_a: f64,
    pub c_a: f64,
    /// `(K_0 + K_1)²` per field, the values used.
    pub kappa_squared: Vec<f64>,
    /// `‖P𝒦*P‖²` per field, for comparison.
    pub kappa_squared_galerkin: Vec<f64>,
    /// `max |m̃_k|` per field.
    pub sup_mtilde: Vec<f64>,
    /// `true` when evaluated exactly per Fourier mode; `false` when the forms
    /// were sampled on test vectors.
    pub per_mode: bool,
}

/// Quadratic-form values of one test direction: `(Av,v)`, `‖M_ℓv‖²`, `‖Av‖²_{X'}`,
/// `‖D₊v‖²`, `‖v‖²_H`.
struct Form {
    av: f64,
    mv: Vec<f64>,
    av_dual: f64,
    dv: f64,
    v: f64,
}

fn forms(p: &EvolutionProblem) -> Vec<Form> {
    let space = p.space;
    if p.all_symbols() {
        let lam = symbol(&p.a);
        return (0..space.n_modes())
            .map(|m| {
                let d = space.difference_symbol(m);
                Form {
                    av: lam[m].re,
                    mv: p.m.iter().map(|op| symbol(op)[m].norm_sqr()).collect(),
                    av_dual: lam[m].norm_sqr() / (1.0 + d),
                    dv: d,
                    v: 1.0,
                }
            })
            .collect();
    }
    let n = space.n;
    let a = p.a.to_matrix(&space);
    let ms: Vec<DMatrix<f64>> = p.m.iter().map(|m| m.to_matrix(&space)).collect();
    let sp = Spectral::new(&space);
    let dual = |w: &[f64]| -> f64 {
        sp.forward(w)
            .iter()
            .enumerate()
            .map(|(m, c)| space.mode_weight(m) * c.norm_sqr() / (1.0 + space.difference_symbol(m)))
            .sum()
    };
    let x = space.nodes();
    let mut vs: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for m in 1..=n / 2 {
        let y = space.wavenumber(m);
        vs.push(x.iter().map(|t| (y * t).cos()).collect());
        if m < n / 2 {
            vs.push(x.iter().map(|t| (y * t).sin()).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..16 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|e| *e -= mean);
        vs.push(v);
    }
    let hx = space.step();
    vs.iter()
        .map(|v| {
            let dv = DVector::from_column_slice(v);
            let av = &a * &dv;
            Form {
                av: hx * av.dot(&dv),
                mv: ms.iter().map(|m| space.norm_sq((m * &dv).as_slice())).collect(),
                av_dual: dual(av.as_slice()),
                dv: space.norm_x_sq(v) - space.norm_sq(v),
                v: space.norm_sq(v),
            }
        })
        .collect()
}

/// Checks the coercivity conditions with `𝔎_ℓ` from the closed-form bound. For
/// symbol operators every Fourier mode is checked; otherwise the forms are
/// sampled on trigonometric and seeded random vectors, which is heuristic.
pub fn check_parabolicity_general(p: &EvolutionProblem) -> Result<GeneralParabolicity> {
    p.validate()?;
    let kappa: Vec<f64> = p.fields.iter().map(|f| f.norm_bound().map(|b| b.bound)).collect::<Result<_>>()?;
    let forms = forms(p);
    let n1 = p.n_nodes();
    // cancellation below rounding of the two sides counts as equality
    let q = |f: &Form, j: usize| -> f64 {
        let drift = 2.0 * p.a_scale[j] * f.av;
        let noise: Vec<f64> =
            f.mv.iter().enumerate().map(|(l, mv)| kappa[l] * (p.sigma[l][j]).powi(2) * mv).collect();
        let v = drift + noise.iter().sum::<f64>();
        let scale = drift.abs() + noise.iter().map(|x| x.abs()).sum::<f64>();
        if v.abs() <= 1e-12 * scale {
            0.0
        } else {
            v
        }
    };
    let (mut d_hf, mut d_a) = (f64::INFINITY, f64::INFINITY);
    for j in 0..n1 {
        for f in forms.iter().filter(|f| f.dv > 0.0) {
            d_hf = d_hf.min(-q(f, j) / f.dv);
            d_a = d_a.min(-p.a_scale[j] * f.av / f.dv);
        }
    }
    let delta0 = d_hf.min(d_a);
    let (mut c0, mut c_a) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for j in 0..n1 {
        let c = p.a_scale[j];
        for f in &forms {
            let xn = f.v + f.dv;
            c0 = c0.max((q(f, j) + delta0.max(0.0) * xn) / f.v);
            c_a = c_a.max((c * f.av + d_a.max(0.0) * xn) / f.v).max((c * c * f.av_dual / xn).sqrt());
        }
    }
    Ok(GeneralParabolicity {
        delta0,
        c0,
        holds: d_hf >= 0.0 && d_a > 0.0,
        delta_a: d_a,
        c_a,
        kappa_squared: kappa,
        kappa_squared_galerkin: p.fields.iter().map(|f| f.galerkin_norm().powi(2)).collect(),
        sup_mtilde: p.fields.iter().map(FieldModel::sup_mtilde).collect(),
        per_mode: p.all_symbols(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub delta0: f64,
    /// `sup_t E‖u(t)‖²_H`.
    pub sup_energy: f64,
    /// `∫_0^T E‖u‖²_X`.
    pub x_integral: f64,
    pub lhs: f64,
    /// `‖u_0‖²_H + ∫‖f‖²_{X'} + Σ𝔎²∫‖g‖²_{X'}`.
    pub data_norm: f64,
    pub ratio: f64,
    /// `F_n(T) = Σ_{|α|=n} ‖u_α(T)‖²_H`.
    pub grade_energy_end: Vec<f64>,
    pub partial_sums_end: Vec<f64>,
    /// `partial_sums_end[n] / partial_sums_end[n − 1]`, from `n = 1`.
    pub growth: Vec<f64>,
}

/// Both sides of the a-priori estimate at the given `δ_0`. The data norm is
/// restricted to the modes the solution was computed on.
pub fn energy_report(sol: &EvolutionSolution, p: &EvolutionProblem, delta0: f64) -> Result<EnergyReport> {
    let grid = p.fields[0].grid();
    let energy = sol.energy();
    let sup_energy = energy.iter().cloned().fold(0.0, f64::max);
    let x_integral = grid.integrate(&sol.energy_x());
    let lhs = sup_energy + delta0 * x_integral;

    let space = p.space;
    let sp = Spectral::new(&space);
    let modes: Vec<usize> = sol.modes.clone().unwrap_or_else(|| (0..space.n_modes()).collect());
    let h_norm = |v: &[f64]| -> f64 {
        let hat = sp.forward(v);
        modes.iter().map(|&m| space.mode_weight(m) * hat[m].norm_sqr()).sum()
    };
    let dual_norm = |v: &[f64]| -> f64 {
        let hat = sp.forward(v);
        modes
            .iter()
            .map(|&m| space.mode_weight(m) * hat[m].norm_sqr() / (1.0 + space.difference_symbol(m)))
            .sum()
    };
    let mut data_norm = h_norm(&p.u0);
    if let Some(f) = &p.f {
        data_norm += grid.integrate(&f.iter().map(|r| dual_norm(r)).collect::<Vec<_>>());
    }
    for (l, g) in p.g.iter().enumerate() {
        if let Some(g) = g {
            let k2 = p.fields[l].norm_bound()?.bound;
            data_norm += k2 * grid.integrate(&g.iter().map(|r| dual_norm(r)).collect::<Vec<_>>());
        }
    }
    let last = grid.n();
    let grade_energy_end: Vec<f64> = sol.grade_energy.iter().map(|r| r[last]).collect();
    let mut acc = 0.0;
    let partial_sums_end: Vec<f64> = grade_energy_end
        .iter()
        .map(|e| {
            acc += e;
            acc
        })
        .collect();
    let growth = partial_sums_end.windows(2).map(|w| w[1] / w[0]).collect();
    let ratio = if data_norm > 0.0 { lhs / data_norm } else { 0.0 };
    Ok(EnergyReport {
        delta0,
        sup_energy,
        x_integral,
        lhs,
        data_norm,
        ratio,
        grade_energy_end,
        partial_sums_end,
        growth,
    })
}
