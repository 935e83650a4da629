//! Itô-Skorokhod and Stratonovich-type integrals on chaos coefficients.
//!
//! With `m̃_k = 𝒦 m_k`, the Skorokhod integral of `η = Σ_α η_α(t) ξ_α`
//! up to time `t` has coefficient `Σ_k √α_k ∫_0^t η_{α−ε_k}(s) m̃_k(s) ds`
//! at `α`. Time integrals use the cell averages of `m̃_k` against the
//! trapezoid value of the integrand on each cell; the propagator solver uses
//! the same rule.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::chaos::{ChaosProcess, ChaosVector};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::multiindex::{MultiIndex, TruncationSpec};

/// `t_j ↦ Σ_{i<j} m_i·h·(f_i + f_{i+1})/2` for cell values `m`.
pub fn running_cell_integral(f: &[f64], cells: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (i, m) in cells.iter().enumerate() {
        acc += m * h * 0.5 * (f[i] + f[i + 1]);
        out.push(acc);
    }
    out
}

fn cell_integral(f: &[f64], cells: &[f64], h: f64, upto: usize) -> f64 {
    (0..upto).map(|i| cells[i] * h * 0.5 * (f[i] + f[i + 1])).sum()
}

fn check_grid(eta: &ChaosProcess, model: &FieldModel) -> Result<()> {
    let expected = model.grid().n_nodes();
    if eta.n_nodes() != expected {
        return Err(Error::GridMismatch { expected, got: eta.n_nodes() });
    }
    Ok(())
}

fn result_truncation(eta: &ChaosProcess, model: &FieldModel) -> TruncationSpec {
    let t = eta.truncation();
    TruncationSpec { max_order: t.max_order + 1, max_dim: t.max_dim.max(model.basis_dim()) }
}

/// The associated process `X(t) = Σ_k M̃_k(t) ξ_k` as a chaos process.
pub fn associated_process(model: &FieldModel, truncation: TruncationSpec) -> ChaosProcess {
    let mut p = ChaosProcess::new(truncation, model.grid().n_nodes());
    for k in 1..=model.basis_dim().min(truncation.max_dim) {
        if truncation.max_order >= 1 {
            p.push(MultiIndex::unit(k), model.mtilde(k)).expect("first-order index fits");
        }
    }
    p
}

/// Skorokhod integral of `η χ_t`, `t` a grid node.
pub fn skorokhod_integral(eta: &ChaosProcess, model: &FieldModel, t: f64) -> Result<ChaosVector> {
    check_grid(eta, model)?;
    let grid = model.grid();
    let upto = grid
        .index_of(t)
        .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not a grid node")))?;
    let h = grid.step();
    let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (beta, row) in eta.iter() {
        for k in 1..=model.basis_dim() {
            let c = ((beta.get(k) + 1) as f64).sqrt() * cell_integral(row, model.mtilde_cells(k), h, upto);
            *acc.entry(beta.add_unit(k)).or_insert(0.0) += c;
        }
    }
    ChaosVector::from_coeffs(result_truncation(eta, model), acc)
}

/// `t ↦` Skorokhod integral of `η χ_t` on every grid node.
pub fn skorokhod_running(eta: &ChaosProcess, model: &FieldModel) -> Result<ChaosProcess> {
    check_grid(eta, model)?;
    let h = model.grid().step();
    let n1 = model.grid().n_nodes();
    let mut acc: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
    for (beta, row) in eta.iter() {
        for k in 1..=model.basis_dim() {
            let f = ((beta.get(k) + 1) as f64).sqrt();
            let run = running_cell_integral(row, model.mtilde_cells(k), h);
            let target = acc.entry(beta.add_unit(k)).or_insert_with(|| vec![0.0; n1]);
            target.iter_mut().zip(&run).for_each(|(a, r)| *a += f * r);
        }
    }
    let mut out = ChaosProcess::new(result_truncation(eta, model), n1);
    for (a, row) in acc {
        out.push(a, &row)?;
    }
    Ok(out)
}

/// Stratonovich-type integral over `[0, T]` split into its parts.
#[derive(Debug, Clone)]
pub struct StratonovichResult {
    pub value: ChaosVector,
    pub skorokhod: ChaosVector,
    /// Trace of the Malliavin derivative, `value − skorokhod`.
    pub trace: ChaosVector,
    /// Squared trace contributions from the top order of `η`; the terms one
    /// order higher are not resolved by the truncation and are of this size.
    pub overflow_mass: f64,
}

/// Coefficient `Σ_k (√α_k η̃_{α−ε_k,k} + √(α_k+1) η̃_{α+ε_k,k})` with
/// `η̃_{α,k} = ∫_0^T η_α m̃_k`.
pub fn stratonovich_integral(eta: &ChaosProcess, model: &FieldModel) -> Result<StratonovichResult> {
    let t_end = model.grid().t_end();
    let skorokhod = skorokhod_integral(eta, model, t_end)?;
    let grid = model.grid();
    let h = grid.step();
    let n = grid.n();
    let top = eta.truncation().max_order;
    let mut trace = ChaosVector::new(skorokhod.truncation());
    let mut overflow = BTreeMap::new();
    for (beta, row) in eta.iter() {
        for &(k, bk) in beta.entries() {
            if k > model.basis_dim() {
                continue;
            }
            let c = (bk as f64).sqrt() * cell_integral(row, model.mtilde_cells(k), h, n);
            let alpha = beta.sub_unit(k)?;
            trace.add_to(alpha.clone(), c)?;
            if beta.order() == top {
                *overflow.entry(alpha).or_insert(0.0) += c;
            }
        }
    }
    let overflow_mass = overflow.values().map(|c: &f64| c * c).sum();
    Ok(StratonovichResult { value: skorokhod.axpy(1.0, &trace), skorokhod, trace, overflow_mass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    /// `Σ_α |α|·‖η_α‖²_{L₂}` over the stored coefficients.
    pub weighted_sum: f64,
    /// Share of `weighted_sum` carried by the top stored order.
    pub top_order_fraction: f64,
}

pub fn check_integrability(eta: &ChaosProcess, model: &FieldModel) -> IntegrabilityReport {
    let grid = model.grid();
    let mut total = 0.0;
    let mut per_order = vec![0.0; eta.truncation().max_order + 1];
    for (a, row) in eta.iter() {
        let sq: Vec<f64> = row.iter().map(|v| v * v).collect();
        let c = a.order() as f64 * grid.integrate(&sq);
        total += c;
        per_order[a.order()] += c;
    }
    let top = per_order.iter().rposition(|&c| c > 0.0).map(|i| per_order[i]).unwrap_or(0.0);
    IntegrabilityReport {
        weighted_sum: total,
        top_order_fraction: if total > 0.0 { top / total } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{KernelSpec, TimeGrid};

    fn model(kernel: KernelSpec, n: usize, k: usize) -> FieldModel {
        FieldModel::build(kernel, TimeGrid::new(1.0, n).unwrap(), k).unwrap()
    }

    #[test]
    fn integral_of_one_is_the_field() {
        let m = model(KernelSpec::Wiener, 64, 8);
        let one = ChaosProcess::deterministic(TruncationSpec::new(0, 8).unwrap(), &vec![1.0; 65]);
        let r = skorokhod_integral(&one, &m, 0.5).unwrap();
        for k in 1..=8 {
            assert!((r.get(&MultiIndex::unit(k)) - m.mtilde(k)[32]).abs() < 1e-14);
        }
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn integral_of_w_is_half_wick_square() {
        let m = model(KernelSpec::Wiener, 128, 16);
        let t = TruncationSpec::new(2, 16).unwrap();
        let w = associated_process(&m, t);
        let r = skorokhod_integral(&w, &m, 1.0).unwrap();
        let w1 = w.at_node(128);
        let sq = w1.wick_product(&w1).result.scale(0.5);
        for (a, c) in sq.iter() {
            assert!((r.get(a) - c).abs() < 1e-12, "{a}");
        }
        for (a, c) in r.iter() {
            assert!((sq.get(a) - c).abs() < 1e-12, "{a}");
        }
    }

    #[test]
    fn stratonovich_of_deterministic_is_skorokhod() {
        let m = model(KernelSpec::OuStable { b: 1.0 }, 64, 6);
        let f: Vec<f64> = m.grid().nodes().iter().map(|t| t.sin()).collect();
        let eta = ChaosProcess::deterministic(TruncationSpec::new(0, 6).unwrap(), &f);
        let s = stratonovich_integral(&eta, &m).unwrap();
        assert_eq!(s.value, s.skorokhod);
        assert!(s.trace.is_empty());
    }

    #[test]
    fn stratonovich_trace_of_w() {
        let m = model(KernelSpec::Wiener, 512, 64);
        let w = associated_process(&m, TruncationSpec::new(1, 64).unwrap());
        let s = stratonovich_integral(&w, &m).unwrap();
        // Σ_k ∫ M̃_k dM̃_k = Σ_k M̃_k(T)²/2
        let half: f64 = (1..=64).map(|k| 0.5 * m.mtilde(k)[512].powi(2)).sum();
        assert!((s.trace.mean() - half).abs() < 1e-12);
        assert!((s.value.mean() - s.skorokhod.mean() - half).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let m = model(KernelSpec::Wiener, 16, 2);
        let eta = ChaosProcess::deterministic(TruncationSpec::new(0, 2).unwrap(), &[1.0; 5]);
        assert_eq!(
            skorokhod_integral(&eta, &m, 1.0).unwrap_err(),
            Error::GridMismatch { expected: 17, got: 5 }
        );
    }

    #[test]
    fn integrability_examples() {
        let m = model(KernelSpec::Wiener, 256, 32);
        let det = ChaosProcess::deterministic(TruncationSpec::new(0, 1).unwrap(), &vec![2.0; 257]);
        assert_eq!(check_integrability(&det, &m).weighted_sum, 0.0);
        let w = associated_process(&m, TruncationSpec::new(1, 32).unwrap());
        let r = check_integrability(&w, &m);
        assert!((r.weighted_sum - 0.5).abs() < 0.01, "{}", r.weighted_sum);

        // every index of order n on two slots: n + 1 of them, each with |α|·‖η_α‖² = 1
        let t = TruncationSpec::new(12, 2).unwrap();
        let mut bad = ChaosProcess::new(t, 257);
        for a in crate::multiindex::enumerate(t).into_iter().filter(|a| !a.is_zero()) {
            let c = 1.0 / (a.order() as f64).sqrt();
            bad.push(a, &vec![c; 257]).unwrap();
        }
        assert!(check_integrability(&bad, &m).top_order_fraction > 0.1);
    }
}
