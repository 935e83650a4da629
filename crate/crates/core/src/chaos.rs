//! Hermite polynomials, the chaos basis `ξ_α`, and the Wick algebra on
//! truncated chaos expansions.
//!
//! [`ChaosVector`] holds scalar coefficients (a random variable);
//! [`ChaosProcess`] holds one grid function per multi-index (a random
//! process sampled on a time grid).

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate_grade, MultiIndex, TruncationSpec};

/// Probabilists' Hermite polynomial `H_n(t)` by the three-term recurrence.
pub fn hermite(n: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = t * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ξ_α = Π_k H_{α_k}(ξ_k)/√(α_k!)` evaluated at `xi = (ξ_1, ξ_2, …)`.
pub fn xi_alpha(alpha: &MultiIndex, xi: &[f64]) -> Result<f64> {
    let mut acc = 1.0;
    for &(k, m) in alpha.entries() {
        let x = *xi
            .get(k - 1)
            .ok_or(Error::SupportExceeded { slot: k, len: xi.len() })?;
        let m = m as usize;
        let norm: f64 = (1..=m).map(|i| i as f64).product::<f64>().sqrt();
        acc *= hermite(m, x) / norm;
    }
    Ok(acc)
}

/// `√((α+β)!/(α!β!))`.
pub fn wick_factor(alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
    let mut ln = 0.0;
    for &(k, a) in alpha.entries() {
        let b = beta.get(k);
        if b > 0 {
            // ln C(a+b, a)
            ln += (1..=b).map(|i| ((a + i) as f64 / i as f64).ln()).sum::<f64>();
        }
    }
    (0.5 * ln).exp()
}

/// Result of a truncated Wick product.
#[derive(Debug, Clone)]
pub struct WickProduct<T> {
    pub result: T,
    /// Σ of squared coefficients that fell outside the truncation.
    pub dropped_mass: f64,
}

/// Truncated chaos expansion with scalar coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVector {
    truncation: TruncationSpec,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl ChaosVector {
    pub fn new(truncation: TruncationSpec) -> Self {
        Self { truncation, coeffs: BTreeMap::new() }
    }

    /// The deterministic random variable `c`.
    pub fn constant(truncation: TruncationSpec, c: f64) -> Self {
        let mut v = Self::new(truncation);
        v.coeffs.insert(MultiIndex::zero(), c);
        v
    }

    /// `c·ξ_α`.
    pub fn basis(truncation: TruncationSpec, alpha: MultiIndex, c: f64) -> Result<Self> {
        let mut v = Self::new(truncation);
        v.set(alpha, c)?;
        Ok(v)
    }

    pub fn from_coeffs<I>(truncation: TruncationSpec, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut v = Self::new(truncation);
        for (a, c) in coeffs {
            v.add_to(a, c)?;
        }
        Ok(v)
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.truncation
    }

    pub fn set(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        self.check(&alpha)?;
        self.coeffs.insert(alpha, c);
        Ok(())
    }

    pub fn add_to(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        self.check(&alpha)?;
        *self.coeffs.entry(alpha).or_insert(0.0) += c;
        Ok(())
    }

    fn check(&self, alpha: &MultiIndex) -> Result<()> {
        if self.truncation.contains(alpha) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{alpha} lies outside truncation N={}, K={}",
                self.truncation.max_order, self.truncation.max_dim
            )))
        }
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    /// Stored coefficients in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.get(&MultiIndex::zero())
    }

    /// `E F² = Σ_α F_α²`.
    pub fn second_moment(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.second_moment() - self.mean().powi(2)
    }

    /// `E(FG) = Σ_α F_α G_α`.
    pub fn inner(&self, other: &ChaosVector) -> f64 {
        self.coeffs.iter().map(|(a, c)| c * other.get(a)).sum()
    }

    /// Energy `Σ_{|α|=n} F_α²` per order `n`.
    pub fn grade_energies(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.truncation.max_order + 1];
        for (a, c) in &self.coeffs {
            out[a.order()] += c * c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> ChaosVector {
        ChaosVector {
            truncation: self.truncation,
            coeffs: self.coeffs.iter().map(|(a, c)| (a.clone(), c * s)).collect(),
        }
    }

    /// `self + s·other` over the wider truncation.
    pub fn axpy(&self, s: f64, other: &ChaosVector) -> ChaosVector {
        let mut out = ChaosVector {
            truncation: self.truncation.union(&other.truncation),
            coeffs: self.coeffs.clone(),
        };
        for (a, c) in &other.coeffs {
            *out.coeffs.entry(a.clone()).or_insert(0.0) += s * c;
        }
        out
    }

    /// Wick product per the basis rule `ξ_α ⋄ ξ_β = √((α+β)!/(α!β!)) ξ_{α+β}`.
    pub fn wick_product(&self, other: &ChaosVector) -> WickProduct<ChaosVector> {
        let truncation = self.truncation.union(&other.truncation);
        let mut kept = BTreeMap::new();
        let mut dropped: HashMap<MultiIndex, f64> = HashMap::new();
        for (a, c) in &self.coeffs {
            for (b, d) in &other.coeffs {
                let key = a.add(b);
                let v = c * d * wick_factor(a, b);
                if key.order() <= truncation.max_order {
                    *kept.entry(key).or_insert(0.0) += v;
                } else {
                    *dropped.entry(key).or_insert(0.0) += v;
                }
            }
        }
        WickProduct {
            result: ChaosVector { truncation, coeffs: kept },
            dropped_mass: dropped.values().map(|v| v * v).sum(),
        }
    }

    /// Wick exponential of a first-order vector `c_0 + Σ_k c_k ξ_{ε_k}`:
    /// coefficient `e^{c_0} Π_k c_k^{α_k}/√(α!)` on every `α` in the truncation
    /// supported on slots with nonzero `c_k`.
    pub fn wick_exp(&self) -> Result<ChaosVector> {
        let mut shift = 0.0;
        let mut slots = Vec::new();
        for (a, &c) in &self.coeffs {
            match a.order() {
                0 => shift = c,
                1 => {
                    if c != 0.0 {
                        slots.push((a.entries()[0].0, c));
                    }
                }
                n => {
                    if c != 0.0 {
                        return Err(Error::NotFirstOrder(n));
                    }
                }
            }
        }
        Ok(wick_exp_first_order(self.truncation, shift, &slots))
    }

    /// Evaluate the expansion at a sample of `(ξ_1, ξ_2, …)`.
    pub fn evaluate(&self, xi: &[f64]) -> Result<f64> {
        self.coeffs
            .iter()
            .map(|(a, c)| xi_alpha(a, xi).map(|x| c * x))
            .sum()
    }

    /// JSON object: truncation header plus `rank → coefficient`.
    pub fn to_json(&self) -> Value {
        let mut entries: Vec<(u128, f64)> =
            self.coeffs.iter().map(|(a, &c)| (graded_rank(self.truncation, a), c)).collect();
        entries.sort_by_key(|e| e.0);
        let mut map = Map::new();
        for (r, c) in entries {
            map.insert(r.to_string(), json!(c));
        }
        json!({
            "kind": "scalar",
            "max_order": self.truncation.max_order,
            "max_dim": self.truncation.max_dim,
            "coefficients": Value::Object(map),
        })
    }

    pub fn from_json(v: &Value) -> Result<ChaosVector> {
        let (truncation, coeffs) = parse_header(v, "scalar")?;
        let mut out = ChaosVector::new(truncation);
        for (rank, c) in coeffs {
            let alpha = graded_unrank(truncation, rank)?;
            let c = c.as_f64().ok_or_else(|| bad_json("coefficient is not a number"))?;
            out.set(alpha, c)?;
        }
        Ok(out)
    }
}

/// Wick exponential of `shift + Σ c_k ξ_k` restricted to the given slots.
pub fn wick_exp_first_order(
    truncation: TruncationSpec,
    shift: f64,
    slots: &[(usize, f64)],
) -> ChaosVector {
    let scale = shift.exp();
    let mut out = ChaosVector::new(truncation);
    let active: Vec<(usize, f64)> =
        slots.iter().copied().filter(|&(k, _)| k <= truncation.max_dim).collect();
    let mut grade = Vec::new();
    for order in 0..=truncation.max_order {
        grade.clear();
        enumerate_grade(active.len().max(1), order, &mut grade);
        for local in &grade {
            if active.is_empty() && !local.is_zero() {
                continue;
            }
            let mut c = scale;
            let mut pairs = Vec::with_capacity(local.entries().len());
            for &(j, m) in local.entries() {
                let (slot, ck) = active[j - 1];
                c *= ck.powi(m as i32);
                pairs.push((slot, m));
            }
            let alpha = MultiIndex::from_pairs(pairs);
            c /= alpha.factorial().sqrt();
            out.coeffs.insert(alpha, c);
        }
    }
    out
}

/// Chaos expansion whose coefficients are functions on a common time grid.
#[derive(Debug, Clone)]
pub struct ChaosProcess {
    truncation: TruncationSpec,
    n_nodes: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    data: Vec<f64>,
}

impl ChaosProcess {
    pub fn new(truncation: TruncationSpec, n_nodes: usize) -> Self {
        Self { truncation, n_nodes, indices: Vec::new(), lookup: HashMap::new(), data: Vec::new() }
    }

    /// Deterministic process `f(t)`.
    pub fn deterministic(truncation: TruncationSpec, f: &[f64]) -> Self {
        let mut p = Self::new(truncation, f.len());
        p.push(MultiIndex::zero(), f).expect("zero index fits any truncation");
        p
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.truncation
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Insert or overwrite the coefficient function of `alpha`.
    pub fn push(&mut self, alpha: MultiIndex, values: &[f64]) -> Result<()> {
        if values.len() != self.n_nodes {
            return Err(Error::IncompatibleGrids { left: self.n_nodes, right: values.len() });
        }
        if !self.truncation.contains(&alpha) {
            return Err(Error::InvalidParameter(format!("{alpha} lies outside truncation")));
        }
        if let Some(&i) = self.lookup.get(&alpha) {
            self.data[i * self.n_nodes..(i + 1) * self.n_nodes].copy_from_slice(values);
        } else {
            self.lookup.insert(alpha.clone(), self.indices.len());
            self.indices.push(alpha);
            self.data.extend_from_slice(values);
        }
        Ok(())
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.lookup.get(alpha).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    /// Multi-indices in insertion order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[f64])> {
        self.indices.iter().enumerate().map(move |(i, a)| (a, self.row(i)))
    }

    /// Scalar chaos vector at one grid node.
    pub fn at_node(&self, node: usize) -> ChaosVector {
        let mut v = ChaosVector::new(self.truncation);
        for (a, row) in self.iter() {
            v.coeffs.insert(a.clone(), row[node]);
        }
        v
    }

    /// Mean function `t ↦ F_(0)(t)`.
    pub fn mean(&self) -> Vec<f64> {
        self.get(&MultiIndex::zero()).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; self.n_nodes])
    }

    /// `t ↦ Σ_α F_α(t)²`.
    pub fn second_moment(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        for (_, row) in self.iter() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * v;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> ChaosProcess {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ChaosProcess) -> Result<ChaosProcess> {
        if self.n_nodes != other.n_nodes {
            return Err(Error::IncompatibleGrids { left: self.n_nodes, right: other.n_nodes });
        }
        let mut out = self.clone();
        out.truncation = self.truncation.union(&other.truncation);
        for (a, row) in other.iter() {
            let scaled: Vec<f64> = match out.get(a) {
                Some(cur) => cur.iter().zip(row).map(|(c, r)| c + s * r).collect(),
                None => row.iter().map(|r| s * r).collect(),
            };
            out.push(a.clone(), &scaled)?;
        }
        Ok(out)
    }

    /// Pointwise-in-time Wick product with a scalar chaos vector.
    pub fn wick_scalar(&self, other: &ChaosVector) -> WickProduct<ChaosProcess> {
        let truncation = self.truncation.union(&other.truncation);
        let mut acc: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        let mut dropped: HashMap<MultiIndex, Vec<f64>> = HashMap::new();
        for (a, row) in self.iter() {
            for (b, d) in other.iter() {
                let key = a.add(b);
                let f = d * wick_factor(a, b);
                let target = if key.order() <= truncation.max_order {
                    acc.entry(key).or_insert_with(|| vec![0.0; self.n_nodes])
                } else {
                    dropped.entry(key).or_insert_with(|| vec![0.0; self.n_nodes])
                };
                target.iter_mut().zip(row).for_each(|(t, r)| *t += f * r);
            }
        }
        let mut result = ChaosProcess::new(truncation, self.n_nodes);
        for (a, row) in acc {
            result.push(a, &row).expect("keys checked against truncation");
        }
        let dropped_mass = dropped
            .values()
            .map(|r| r.iter().map(|v| v * v).fold(0.0, f64::max))
            .sum();
        WickProduct { result, dropped_mass }
    }

    /// Pointwise-in-time Wick product of two processes on the same grid.
    pub fn wick_product(&self, other: &ChaosProcess) -> Result<WickProduct<ChaosProcess>> {
        if self.n_nodes != other.n_nodes {
            return Err(Error::IncompatibleGrids { left: self.n_nodes, right: other.n_nodes });
        }
        let truncation = self.truncation.union(&other.truncation);
        let mut acc: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        let mut dropped_mass = 0.0;
        let mut dropped: HashMap<MultiIndex, Vec<f64>> = HashMap::new();
        for (a, ra) in self.iter() {
            for (b, rb) in other.iter() {
                let key = a.add(b);
                let f = wick_factor(a, b);
                let target = if key.order() <= truncation.max_order {
                    acc.entry(key).or_insert_with(|| vec![0.0; self.n_nodes])
                } else {
                    dropped.entry(key).or_insert_with(|| vec![0.0; self.n_nodes])
                };
                for ((t, x), y) in target.iter_mut().zip(ra).zip(rb) {
                    *t += f * x * y;
                }
            }
        }
        for r in dropped.values() {
            dropped_mass += r.iter().map(|v| v * v).fold(0.0, f64::max);
        }
        let mut result = ChaosProcess::new(truncation, self.n_nodes);
        for (a, row) in acc {
            result.push(a, &row)?;
        }
        Ok(WickProduct { result, dropped_mass })
    }

    pub fn to_json(&self) -> Value {
        let mut entries: Vec<(u128, &[f64])> =
            self.iter().map(|(a, r)| (graded_rank(self.truncation, a), r)).collect();
        entries.sort_by_key(|e| e.0);
        let mut map = Map::new();
        for (r, row) in entries {
            map.insert(r.to_string(), json!(row));
        }
        json!({
            "kind": "grid",
            "max_order": self.truncation.max_order,
            "max_dim": self.truncation.max_dim,
            "nodes": self.n_nodes,
            "coefficients": Value::Object(map),
        })
    }

    pub fn from_json(v: &Value) -> Result<ChaosProcess> {
        let (truncation, coeffs) = parse_header(v, "grid")?;
        let nodes = v["nodes"].as_u64().ok_or_else(|| bad_json("missing nodes"))? as usize;
        let mut entries = Vec::new();
        for (rank, row) in coeffs {
            let alpha = graded_unrank(truncation, rank)?;
            let row: Vec<f64> = row
                .as_array()
                .ok_or_else(|| bad_json("coefficient is not an array"))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad_json("non-numeric entry")))
                .collect::<Result<_>>()?;
            entries.push((alpha, row));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = ChaosProcess::new(truncation, nodes);
        for (a, row) in entries {
            out.push(a, &row)?;
        }
        Ok(out)
    }
}

fn bad_json(msg: &str) -> Error {
    Error::InvalidParameter(format!("chaos JSON: {msg}"))
}

fn parse_header(v: &Value, kind: &str) -> Result<(TruncationSpec, Vec<(u128, Value)>)> {
    if v["kind"].as_str() != Some(kind) {
        return Err(bad_json("unexpected kind"));
    }
    let n = v["max_order"].as_u64().ok_or_else(|| bad_json("missing max_order"))? as usize;
    let k = v["max_dim"].as_u64().ok_or_else(|| bad_json("missing max_dim"))? as usize;
    let truncation = TruncationSpec::new(n, k)?;
    let obj = v["coefficients"].as_object().ok_or_else(|| bad_json("missing coefficients"))?;
    let coeffs = obj
        .iter()
        .map(|(key, val)| {
            key.parse::<u128>().map(|r| (r, val.clone())).map_err(|_| bad_json("bad rank key"))
        })
        .collect::<Result<_>>()?;
    Ok((truncation, coeffs))
}

fn binom(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) / i;
    }
    acc
}

/// Number of nondecreasing sequences of length `len` with entries in `lo..=dim`.
fn count_sequences(dim: usize, lo: usize, len: usize) -> u128 {
    if lo > dim {
        return u128::from(len == 0);
    }
    let width = (dim - lo + 1) as u128;
    binom(width + len as u128 - 1, len as u128)
}

/// Position of `alpha` in `enumerate(truncation)`, computed without enumerating.
pub fn graded_rank(truncation: TruncationSpec, alpha: &MultiIndex) -> u128 {
    let n = alpha.order();
    let k = truncation.max_dim as u128;
    let below = if n == 0 { 0 } else { binom(n as u128 - 1 + k, k) };
    let cs = alpha.characteristic_set();
    let mut within = 0u128;
    let mut lo = 1;
    for (i, &c) in cs.iter().enumerate() {
        for v in lo..c {
            within += count_sequences(truncation.max_dim, v, n - i - 1);
        }
        lo = c;
    }
    below + within
}

/// Inverse of [`graded_rank`].
pub fn graded_unrank(truncation: TruncationSpec, rank: u128) -> Result<MultiIndex> {
    let k = truncation.max_dim as u128;
    let mut n = 0usize;
    let mut below = 0u128;
    loop {
        if n > truncation.max_order {
            return Err(bad_json("rank outside truncation"));
        }
        let upto = binom(n as u128 + k, k);
        if rank < upto {
            break;
        }
        below = upto;
        n += 1;
    }
    let mut r = rank - below;
    let mut cs = Vec::with_capacity(n);
    let mut lo = 1;
    for i in 0..n {
        let mut v = lo;
        loop {
            let c = count_sequences(truncation.max_dim, v, n - i - 1);
            if r < c {
                break;
            }
            r -= c;
            v += 1;
        }
        cs.push(v);
        lo = v;
    }
    Ok(MultiIndex::from_pairs(cs.into_iter().map(|s| (s, 1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate;
    use proptest::prelude::*;

    fn tr(n: usize, k: usize) -> TruncationSpec {
        TruncationSpec::new(n, k).unwrap()
    }

    /// `H_n(t) = (-1)^n e^{t²/2} dⁿ/dtⁿ e^{-t²/2}` through the polynomial
    /// factor `p_n` of `dⁿ/dtⁿ e^{-t²/2} = p_n(t) e^{-t²/2}`, `p_{n+1} = p_n' − t p_n`.
    fn rodrigues(n: usize, t: f64) -> f64 {
        let mut p = vec![1.0f64];
        for _ in 0..n {
            let mut next = vec![0.0; p.len() + 1];
            for (i, &c) in p.iter().enumerate() {
                if i > 0 {
                    next[i - 1] += i as f64 * c;
                }
                next[i + 1] -= c;
            }
            p = next;
        }
        let val: f64 = p.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum();
        if n % 2 == 0 { val } else { -val }
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 7.3), 1.0);
        assert_eq!(hermite(2, 2.0), 3.0);
        assert_eq!(hermite(3, 1.0), -2.0);
    }

    #[test]
    fn hermite_matches_rodrigues() {
        for n in 0..=6 {
            for &t in &[-2.5, -1.0, -0.3, 0.0, 0.7, 1.9, 3.1] {
                assert!((hermite(n, t) - rodrigues(n, t)).abs() < 1e-10, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn hermite_derivative_identity() {
        let h = 1e-5;
        for n in 1..=10 {
            for i in 0..10 {
                let x = -2.0 + 0.45 * i as f64;
                let fd = (hermite(n, x + h) - hermite(n, x - h)) / (2.0 * h);
                let exact = n as f64 * hermite(n - 1, x);
                let rel = (fd - exact).abs() / exact.abs().max(1.0);
                assert!(rel <= 1e-6, "n={n} x={x} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn xi_alpha_examples() {
        assert_eq!(xi_alpha(&MultiIndex::zero(), &[0.3]).unwrap(), 1.0);
        assert_eq!(xi_alpha(&MultiIndex::unit(2), &[9.0, 1.5]).unwrap(), 1.5);
        let x: f64 = 1.7;
        let v = xi_alpha(&MultiIndex::from_dense(&[2]), &[x]).unwrap();
        assert!((v - (x * x - 1.0) / 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(
            xi_alpha(&MultiIndex::unit(3), &[1.0]),
            Err(Error::SupportExceeded { slot: 3, len: 1 })
        );
    }

    #[test]
    fn product_identity_holds_pointwise() {
        let xi = [0.3, -1.2, 2.1];
        for a in enumerate(tr(4, 3)) {
            for k in 1..=3 {
                let lhs = xi[k - 1] * xi_alpha(&a, &xi).unwrap();
                let ak = a.get(k) as f64;
                let mut rhs = (ak + 1.0).sqrt() * xi_alpha(&a.add_unit(k), &xi).unwrap();
                if let Ok(lower) = a.sub_unit(k) {
                    rhs += ak.sqrt() * xi_alpha(&lower, &xi).unwrap();
                }
                assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn wick_product_examples() {
        let t = tr(4, 3);
        let f = ChaosVector::from_coeffs(
            t,
            [(MultiIndex::unit(1), 0.4), (MultiIndex::from_dense(&[1, 1]), -1.3)],
        )
        .unwrap();
        let one = ChaosVector::constant(t, 1.0);
        assert_eq!(one.wick_product(&f).result, f);

        let x1 = ChaosVector::basis(t, MultiIndex::unit(1), 1.0).unwrap();
        let sq = x1.wick_product(&x1).result;
        assert!((sq.get(&MultiIndex::from_dense(&[2])) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.len(), 1);

        let a = ChaosVector::basis(t, MultiIndex::unit(1), 2.0).unwrap();
        let b = ChaosVector::basis(t, MultiIndex::unit(2), -3.0).unwrap();
        let ab = a.wick_product(&b).result;
        assert!((ab.get(&MultiIndex::from_dense(&[1, 1])) + 6.0).abs() < 1e-14);
    }

    #[test]
    fn wick_product_reports_dropped_mass() {
        let t = tr(2, 2);
        let x = ChaosVector::basis(t, MultiIndex::from_dense(&[2]), 1.0).unwrap();
        let p = x.wick_product(&x);
        assert!(p.result.is_empty());
        // √(4!/(2!2!)) = √6
        assert!((p.dropped_mass - 6.0).abs() < 1e-12);
    }

    #[test]
    fn wick_exp_examples() {
        let t = tr(5, 2);
        let zero = ChaosVector::new(t);
        assert_eq!(zero.wick_exp().unwrap(), ChaosVector::constant(t, 1.0));
        let c = 0.7;
        let e = ChaosVector::basis(t, MultiIndex::unit(1), c).unwrap().wick_exp().unwrap();
        assert!((e.get(&MultiIndex::from_dense(&[2])) - c * c / 2f64.sqrt()).abs() < 1e-15);
        let bad = ChaosVector::basis(t, MultiIndex::from_dense(&[2]), 1.0).unwrap();
        assert_eq!(bad.wick_exp(), Err(Error::NotFirstOrder(2)));
    }

    #[test]
    fn wick_exp_second_moment_is_exponential_series() {
        let c: f64 = 0.9;
        for n in [2usize, 5, 12] {
            let e = ChaosVector::basis(tr(n, 1), MultiIndex::unit(1), c).unwrap().wick_exp().unwrap();
            let series: f64 = (0..=n)
                .map(|k| c.powi(2 * k as i32) / (1..=k).map(|i| i as f64).product::<f64>())
                .sum();
            assert!((e.second_moment() - series).abs() < 1e-12);
        }
        let e = ChaosVector::basis(tr(25, 1), MultiIndex::unit(1), c).unwrap().wick_exp().unwrap();
        assert!((e.second_moment() - (c * c).exp()).abs() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let t = tr(3, 2);
        let x = ChaosVector::basis(t, MultiIndex::unit(1), 1.0).unwrap();
        assert_eq!(x.mean(), 0.0);
        let y = x.axpy(2.0, &ChaosVector::basis(t, MultiIndex::from_dense(&[2]), 1.0).unwrap());
        assert_eq!(y.second_moment(), 5.0);
        assert_eq!(y.inner(&x), 1.0);
    }

    #[test]
    fn wick_exp_is_multiplicative() {
        let t = tr(6, 3);
        let a = ChaosVector::from_coeffs(t, [(MultiIndex::unit(1), 0.4), (MultiIndex::unit(2), -0.2)])
            .unwrap();
        let b = ChaosVector::from_coeffs(t, [(MultiIndex::unit(1), 0.1), (MultiIndex::unit(3), 0.5)])
            .unwrap();
        let lhs = a.axpy(1.0, &b).wick_exp().unwrap();
        let rhs = a.wick_exp().unwrap().wick_product(&b.wick_exp().unwrap()).result;
        for (k, c) in rhs.iter() {
            assert!((lhs.get(k) - c).abs() < 1e-13, "{k}");
        }
        assert_eq!(lhs.len(), rhs.iter().filter(|(_, c)| *c != 0.0).count());
    }

    #[test]
    fn rank_matches_enumeration() {
        for (n, k) in [(0, 3), (3, 1), (3, 4), (5, 3)] {
            let t = tr(n, k);
            for (i, a) in enumerate(t).iter().enumerate() {
                assert_eq!(graded_rank(t, a), i as u128);
                assert_eq!(&graded_unrank(t, i as u128).unwrap(), a);
            }
        }
    }

    #[test]
    fn process_wick_with_mismatched_grid_fails() {
        let t = tr(2, 2);
        let a = ChaosProcess::deterministic(t, &[1.0, 2.0]);
        let b = ChaosProcess::deterministic(t, &[1.0, 2.0, 3.0]);
        assert_eq!(a.wick_product(&b).unwrap_err(), Error::IncompatibleGrids { left: 2, right: 3 });
    }

    #[test]
    fn json_roundtrip_golden() {
        let t = tr(2, 2);
        let v = ChaosVector::from_coeffs(
            t,
            [(MultiIndex::zero(), 1.0), (MultiIndex::unit(2), 0.5), (MultiIndex::from_dense(&[1, 1]), -2.0)],
        )
        .unwrap();
        let j = v.to_json();
        assert_eq!(
            j.to_string(),
            r#"{"kind":"scalar","max_order":2,"max_dim":2,"coefficients":{"0":1.0,"2":0.5,"4":-2.0}}"#
        );
        assert_eq!(ChaosVector::from_json(&j).unwrap(), v);
    }

    fn arb_vec(t: TruncationSpec) -> impl Strategy<Value = ChaosVector> {
        let all = enumerate(t);
        prop::collection::vec(-2.0f64..2.0, all.len()).prop_map(move |cs| {
            ChaosVector::from_coeffs(t, all.iter().cloned().zip(cs)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn wick_commutative(a in arb_vec(tr(3, 2)), b in arb_vec(tr(3, 2))) {
            let ab = a.wick_product(&b);
            let ba = b.wick_product(&a);
            for (k, c) in ab.result.iter() {
                prop_assert!((c - ba.result.get(k)).abs() < 1e-12);
            }
            prop_assert!((ab.dropped_mass - ba.dropped_mass).abs() < 1e-9 * (1.0 + ab.dropped_mass));
        }

        #[test]
        fn wick_associative_without_truncation(
            a in arb_vec(tr(1, 2)), b in arb_vec(tr(1, 2)), c in arb_vec(tr(1, 2))
        ) {
            let wide = tr(3, 2);
            let lift = |v: &ChaosVector| ChaosVector::from_coeffs(wide, v.iter().map(|(k, c)| (k.clone(), c))).unwrap();
            let (a, b, c) = (lift(&a), lift(&b), lift(&c));
            let left = a.wick_product(&b).result.wick_product(&c).result;
            let right = a.wick_product(&b.wick_product(&c).result).result;
            for (k, v) in left.iter() {
                prop_assert!((v - right.get(k)).abs() < 1e-10);
            }
        }

        #[test]
        fn json_roundtrip(a in arb_vec(tr(3, 3))) {
            prop_assert_eq!(ChaosVector::from_json(&a.to_json()).unwrap(), a);
        }
    }
}
