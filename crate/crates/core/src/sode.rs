//! The linear Wick equation `u(t) = u_0 + ∫_0^t a u ds + Σ_ℓ 𝔛_ℓ⋄(σ_ℓ u χ_t)`.
//!
//! Several fields share one flattened index space: basis function `k` of
//! field `ℓ` (both from 1) sits in slot `(k − 1)·L + ℓ`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::ChaosProcess;
use crate::error::{Error, Result};
use crate::field::{covariance, FieldModel, KernelSpec};
use crate::multiindex::{MultiIndex, TruncationSpec};
use crate::skorokhod::running_cell_integral;

#[derive(Debug, Clone)]
pub struct SodeProblem {
    pub fields: Vec<FieldModel>,
    /// Per field, `σ_ℓ` on the grid nodes.
    pub sigma: Vec<Vec<f64>>,
    /// `a` on the grid nodes.
    pub drift: Vec<f64>,
    pub u0: f64,
    pub truncation: TruncationSpec,
}

impl SodeProblem {
    /// One field, `σ = 1`, `a = 0`, `u_0 = 1`.
    pub fn new(model: FieldModel, truncation: TruncationSpec) -> Self {
        let n1 = model.grid().n_nodes();
        Self { fields: vec![model], sigma: vec![vec![1.0; n1]], drift: vec![0.0; n1], u0: 1.0, truncation }
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_u0(mut self, u0: f64) -> Self {
        self.u0 = u0;
        self
    }

    pub fn with_fields(mut self, fields: Vec<FieldModel>, sigma: Vec<Vec<f64>>) -> Self {
        self.fields = fields;
        self.sigma = sigma;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.fields[0].grid().n_nodes()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fields.is_empty() || self.fields.len() != self.sigma.len() {
            return Err(Error::InvalidParameter("need one σ per field and at least one field".into()));
        }
        let grid = *self.fields[0].grid();
        let n1 = grid.n_nodes();
        for f in &self.fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch { expected: n1, got: f.grid().n_nodes() });
            }
        }
        for v in self.sigma.iter().chain(std::iter::once(&self.drift)) {
            if v.len() != n1 {
                return Err(Error::GridMismatch { expected: n1, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    /// Slot of basis function `k` of field `l`.
    pub fn slot(&self, k: usize, l: usize) -> usize {
        (k - 1) * self.fields.len() + l
    }

    /// `(k, l)` of a slot.
    pub fn slot_parts(&self, slot: usize) -> (usize, usize) {
        let nl = self.fields.len();
        ((slot - 1) / nl + 1, (slot - 1) % nl + 1)
    }

    fn n_slots(&self) -> usize {
        let kmax = self.fields.iter().map(FieldModel::basis_dim).min().unwrap_or(0);
        self.truncation.max_dim.min(kmax * self.fields.len())
    }

    /// Cell values of `σ_ℓ m̃_k` for a slot.
    pub fn slot_cells(&self, slot: usize) -> Vec<f64> {
        let (k, l) = self.slot_parts(slot);
        let sig = &self.sigma[l - 1];
        self.fields[l - 1]
            .mtilde_cells(k)
            .iter()
            .enumerate()
            .map(|(i, m)| 0.5 * (sig[i] + sig[i + 1]) * m)
            .collect()
    }

    /// `t ↦ ∫_0^t σ_ℓ dM̃_k` for a slot.
    pub fn slot_mtilde(&self, slot: usize) -> Vec<f64> {
        let h = self.fields[0].grid().step();
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for c in self.slot_cells(slot) {
            acc += c * h;
            out.push(acc);
        }
        out
    }

    /// `t ↦ ∫_0^t a`.
    pub fn drift_integral(&self) -> Vec<f64> {
        self.fields[0].grid().cumulative(&self.drift)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PropagatorOptions {
    /// Drop coefficients whose sup over the grid falls below this value;
    /// children are generated only from kept parents.
    pub prune_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SodeSolution {
    pub process: ChaosProcess,
    pub pruned: usize,
}

/// Forward sweep over orders of `v_α(t) = Σ_s √α_s ∫_0^t v_{α−ε_s} σ m̃_s ds`,
/// `v_(0) = u_0`, then `u_α = e^{∫a} v_α`.
pub fn solve_propagator(p: &SodeProblem, opts: PropagatorOptions) -> Result<SodeSolution> {
    sweep(p, opts, |_| {})
}

pub(crate) fn sweep<F: Fn(&mut Vec<MultiIndex>)>(
    p: &SodeProblem,
    opts: PropagatorOptions,
    reorder: F,
) -> Result<SodeSolution> {
    p.validate()?;
    let n1 = p.n_nodes();
    let h = p.fields[0].grid().step();
    let slots = p.n_slots();
    let cells: Vec<Vec<f64>> = (1..=slots).map(|s| p.slot_cells(s)).collect();
    let mut process = ChaosProcess::new(p.truncation, n1);
    process.push(MultiIndex::zero(), &vec![p.u0; n1])?;
    let mut pruned = 0;
    let mut parents = vec![MultiIndex::zero()];
    for _order in 1..=p.truncation.max_order {
        let set: BTreeSet<MultiIndex> =
            parents.iter().flat_map(|b| (1..=slots).map(move |s| b.add_unit(s))).collect();
        let mut children: Vec<MultiIndex> = set.into_iter().collect();
        reorder(&mut children);
        let rows: Vec<Vec<f64>> = children
            .par_iter()
            .map(|alpha| {
                let mut row = vec![0.0; n1];
                for &(s, a_s) in alpha.entries() {
                    let parent = alpha.sub_unit(s).expect("slot is in the support");
                    if let Some(prow) = process.get(&parent) {
                        let run = running_cell_integral(prow, &cells[s - 1], h);
                        let f = (a_s as f64).sqrt();
                        row.iter_mut().zip(&run).for_each(|(r, v)| *r += f * v);
                    }
                }
                row
            })
            .collect();
        parents.clear();
        for (alpha, row) in children.into_iter().zip(rows) {
            let keep = match opts.prune_tol {
                Some(tol) => row.iter().any(|v| v.abs() >= tol),
                None => true,
            };
            if keep {
                process.push(alpha.clone(), &row)?;
                parents.push(alpha);
            } else {
                pruned += 1;
            }
        }
        if parents.is_empty() {
            break;
        }
    }
    apply_drift(p, &mut process)?;
    Ok(SodeSolution { process, pruned })
}

fn apply_drift(p: &SodeProblem, process: &mut ChaosProcess) -> Result<()> {
    if p.drift.iter().all(|a| *a == 0.0) {
        return Ok(());
    }
    let growth: Vec<f64> = p.drift_integral().iter().map(|x| x.exp()).collect();
    let indices: Vec<MultiIndex> = process.indices().to_vec();
    for a in indices {
        let row: Vec<f64> = process.get(&a).unwrap().iter().zip(&growth).map(|(v, g)| v * g).collect();
        process.push(a, &row)?;
    }
    Ok(())
}

/// `u_0 e^{∫a} Π_s M_s(t)^{α_s} / √(α!)` with `M_s = ∫σ dM̃`.
pub fn closed_form_coefficient(p: &SodeProblem, alpha: &MultiIndex) -> Vec<f64> {
    let growth = p.drift_integral();
    let mut row: Vec<f64> = growth.iter().map(|g| p.u0 * g.exp()).collect();
    for &(s, m) in alpha.entries() {
        let ms = p.slot_mtilde(s);
        row.iter_mut().zip(&ms).for_each(|(r, x)| *r *= x.powi(m as i32));
    }
    let f = alpha.factorial().sqrt();
    row.iter_mut().for_each(|r| *r /= f);
    row
}

/// Wick exponential solution `u_0 e^{∫a} exp⋄(Σ_ℓ X_{σ_ℓ}(t))`, with the same
/// index generation and pruning rule as [`solve_propagator`].
pub fn closed_form(p: &SodeProblem, opts: PropagatorOptions) -> Result<ChaosProcess> {
    p.validate()?;
    let n1 = p.n_nodes();
    let slots = p.n_slots();
    let ms: Vec<Vec<f64>> = (1..=slots).map(|s| p.slot_mtilde(s)).collect();
    let base: Vec<f64> = p.drift_integral().iter().map(|g| p.u0 * g.exp()).collect();
    let mut process = ChaosProcess::new(p.truncation, n1);
    process.push(MultiIndex::zero(), &base)?;
    let mut parents = vec![MultiIndex::zero()];
    for _ in 1..=p.truncation.max_order {
        let set: BTreeSet<MultiIndex> =
            parents.iter().flat_map(|b| (1..=slots).map(move |s| b.add_unit(s))).collect();
        parents.clear();
        for alpha in set {
            let f = alpha.factorial().sqrt();
            let mut row = base.clone();
            for &(s, m) in alpha.entries() {
                row.iter_mut().zip(&ms[s - 1]).for_each(|(r, x)| *r *= x.powi(m as i32));
            }
            row.iter_mut().for_each(|r| *r /= f);
            let keep = opts.prune_tol.is_none_or(|tol| row.iter().any(|v| v.abs() >= tol));
            if keep {
                process.push(alpha.clone(), &row)?;
                parents.push(alpha);
            }
        }
    }
    Ok(process)
}

/// `max_{α, t} |v_α(t) − u_0 δ_{α,(0)} − Σ_s √α_s ∫_0^t v_{α−ε_s} σ m̃_s|`, with
/// `v = e^{−∫a} u`.
pub fn residual(p: &SodeProblem, u: &ChaosProcess) -> Result<f64> {
    let h = p.fields[0].grid().step();
    let shrink: Vec<f64> = p.drift_integral().iter().map(|g| (-g).exp()).collect();
    let v = |row: &[f64]| -> Vec<f64> { row.iter().zip(&shrink).map(|(x, s)| x * s).collect() };
    let slots = p.n_slots();
    let mut worst: f64 = 0.0;
    for (alpha, row) in u.iter() {
        let mut rhs = vec![if alpha.is_zero() { p.u0 } else { 0.0 }; row.len()];
        for &(s, a_s) in alpha.entries() {
            if s > slots {
                continue;
            }
            if let Some(prow) = u.get(&alpha.sub_unit(s)?) {
                let run = running_cell_integral(&v(prow), &p.slot_cells(s), h);
                rhs.iter_mut().zip(&run).for_each(|(r, x)| *r += (a_s as f64).sqrt() * x);
            }
        }
        for (l, r) in v(row).iter().zip(&rhs) {
            worst = worst.max((l - r).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DoleanReport {
    pub times: Vec<f64>,
    /// `½R(t,t)`, the exponent correction of the Wick solution.
    pub wick_correction: Vec<f64>,
    /// `½⟨X⟩_t = t/2`, the correction of the Doléans exponential.
    pub dolean_correction: Vec<f64>,
    pub difference: Vec<f64>,
}

/// Compare `exp(X(t) − ½R(t,t))` with the Doléans exponential `exp(X(t) − t/2)`
/// for semimartingale fields.
pub fn dolean_comparison(kernel: &KernelSpec, times: &[f64]) -> Result<DoleanReport> {
    if !kernel.is_semimartingale() {
        return Err(Error::UnsupportedField(format!(
            "{} is not a semimartingale",
            kernel.name()
        )));
    }
    let wick: Vec<f64> = times.iter().map(|&t| 0.5 * covariance(kernel, t, t)).collect();
    let dolean: Vec<f64> = times.iter().map(|&t| 0.5 * t).collect();
    let difference = wick.iter().zip(&dolean).map(|(w, d)| w - d).collect();
    Ok(DoleanReport { times: times.to_vec(), wick_correction: wick, dolean_correction: dolean, difference })
}
