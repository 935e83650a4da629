//! Multi-indices: finitely supported sequences of nonnegative integers.
//!
//! Slots are 1-based. Ordering is graded: first by order `|α|`, then
//! lexicographically by characteristic set, so `ε_1 < ε_2` and
//! `2ε_1 < ε_1 + ε_2 < 2ε_2`. Every `α − ε_k` therefore precedes `α`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Sparse multi-index. Entries are `(slot, multiplicity)` sorted by slot with
/// every multiplicity at least one.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    entries: Vec<(usize, u32)>,
}

impl MultiIndex {
    /// The zero multi-index `(0)`.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit multi-index `ε_k`.
    pub fn unit(k: usize) -> Self {
        assert!(k >= 1, "slots are 1-based");
        Self { entries: vec![(k, 1)] }
    }

    /// Build from a dense vector `(α_1, α_2, …)`.
    pub fn from_dense(dense: &[u32]) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (i + 1, m))
            .collect();
        Self { entries }
    }

    /// Build from `(slot, multiplicity)` pairs in any order; zero
    /// multiplicities are dropped and repeated slots are summed.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut entries: Vec<(usize, u32)> = Vec::new();
        for (k, m) in pairs {
            assert!(k >= 1, "slots are 1-based");
            if m == 0 {
                continue;
            }
            match entries.binary_search_by_key(&k, |e| e.0) {
                Ok(i) => entries[i].1 += m,
                Err(i) => entries.insert(i, (k, m)),
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    /// Multiplicity `α_k`.
    pub fn get(&self, k: usize) -> u32 {
        self.entries
            .binary_search_by_key(&k, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Order `|α|`.
    pub fn order(&self) -> usize {
        self.entries.iter().map(|e| e.1 as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest slot in the support, 0 for `(0)`.
    pub fn max_slot(&self) -> usize {
        self.entries.last().map(|e| e.0).unwrap_or(0)
    }

    /// `α!` as a float. Falls back to `exp(Σ ln α_k!)` once any factor passes 170!.
    pub fn factorial(&self) -> f64 {
        if self.entries.iter().all(|e| e.1 <= 170) {
            self.entries
                .iter()
                .map(|e| (1..=e.1).map(f64::from).product::<f64>())
                .product()
        } else {
            self.ln_factorial().exp()
        }
    }

    /// `ln α!`.
    pub fn ln_factorial(&self) -> f64 {
        self.entries.iter().map(|e| ln_factorial(e.1 as u64)).sum()
    }

    /// Componentwise sum.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.entries[i..]);
        out.extend_from_slice(&other.entries[j..]);
        MultiIndex { entries: out }
    }

    /// `α + ε_k`.
    pub fn add_unit(&self, k: usize) -> MultiIndex {
        assert!(k >= 1, "slots are 1-based");
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&k, |e| e.0) {
            Ok(i) => entries[i].1 += 1,
            Err(i) => entries.insert(i, (k, 1)),
        }
        MultiIndex { entries }
    }

    /// `α − ε_k`; [`Error::UnderflowAt`] when `α_k = 0`.
    pub fn sub_unit(&self, k: usize) -> Result<MultiIndex> {
        let i = self
            .entries
            .binary_search_by_key(&k, |e| e.0)
            .map_err(|_| Error::UnderflowAt(k))?;
        let mut entries = self.entries.clone();
        if entries[i].1 == 1 {
            entries.remove(i);
        } else {
            entries[i].1 -= 1;
        }
        Ok(MultiIndex { entries })
    }

    /// Nondecreasing list of slots in which slot `k` appears `α_k` times.
    pub fn characteristic_set(&self) -> Vec<usize> {
        self.entries
            .iter()
            .flat_map(|&(k, m)| std::iter::repeat_n(k, m as usize))
            .collect()
    }

    /// Dense form of length `dim` (entries beyond `dim` are cut off).
    pub fn to_dense(&self, dim: usize) -> Vec<u32> {
        let mut v = vec![0; dim];
        for &(k, m) in &self.entries {
            if k <= dim {
                v[k - 1] = m;
            }
        }
        v
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| {
                let a = self.entries.iter().flat_map(|&(k, m)| std::iter::repeat_n(k, m as usize));
                let b = other.entries.iter().flat_map(|&(k, m)| std::iter::repeat_n(k, m as usize));
                a.cmp(b)
            })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "(0)");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|&(k, m)| if m == 1 { format!("e{k}") } else { format!("{m}e{k}") })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Finite truncation of the multi-index set: `|α| ≤ max_order`, support in `1..=max_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub max_order: usize,
    pub max_dim: usize,
}

impl TruncationSpec {
    pub fn new(max_order: usize, max_dim: usize) -> Result<Self> {
        if max_dim == 0 {
            return Err(Error::InvalidParameter("max_dim must be at least 1".into()));
        }
        Ok(Self { max_order, max_dim })
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        alpha.order() <= self.max_order && alpha.max_slot() <= self.max_dim
    }

    /// `binomial(N + K, K)`, or `None` on overflow.
    pub fn size(&self) -> Option<usize> {
        let (n, k) = (self.max_order as u128, self.max_dim as u128);
        let mut acc: u128 = 1;
        for i in 1..=n {
            acc = acc.checked_mul(k + i)? / i;
        }
        usize::try_from(acc).ok()
    }

    /// The wider of two truncations.
    pub fn union(&self, other: &TruncationSpec) -> TruncationSpec {
        TruncationSpec {
            max_order: self.max_order.max(other.max_order),
            max_dim: self.max_dim.max(other.max_dim),
        }
    }
}

/// All multi-indices in the truncation, in graded order.
pub fn enumerate(spec: TruncationSpec) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(spec.size().unwrap_or(0));
    for order in 0..=spec.max_order {
        enumerate_grade(spec.max_dim, order, &mut out);
    }
    out
}

/// Multi-indices of exactly `order` with support in `1..=dim`, in graded order.
pub fn enumerate_grade(dim: usize, order: usize, out: &mut Vec<MultiIndex>) {
    // characteristic sets as nondecreasing sequences, generated in lex order
    let mut seq = vec![1usize; order];
    if order == 0 {
        out.push(MultiIndex::zero());
        return;
    }
    loop {
        out.push(MultiIndex::from_pairs(seq.iter().map(|&k| (k, 1))));
        // advance: rightmost position that can grow
        let mut pos = order;
        while pos > 0 && seq[pos - 1] == dim {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = seq[pos - 1] + 1;
        for s in seq.iter_mut().skip(pos - 1) {
            *s = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(order: usize, dim: usize) -> Vec<Vec<u32>> {
        fn rec(dim: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if prefix.len() == dim {
                out.push(prefix.clone());
                return;
            }
            for m in 0..=left {
                prefix.push(m as u32);
                rec(dim, left - m, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim, order, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(MultiIndex::unit(3).factorial(), 1.0);
        assert_eq!(MultiIndex::from_dense(&[2, 1]).factorial(), 2.0);
        assert_eq!(MultiIndex::from_dense(&[3, 0, 2]).factorial(), 12.0);
        let big = MultiIndex::from_dense(&[171]);
        let rel = (big.factorial().ln() - ln_factorial(171)).abs() / ln_factorial(171);
        assert!(rel < 1e-12 || big.factorial().is_infinite());
    }

    #[test]
    fn add_examples() {
        let e1 = MultiIndex::unit(1);
        assert_eq!(e1.add(&e1), MultiIndex::from_dense(&[2]));
        assert_eq!(e1.add(&MultiIndex::unit(2)), MultiIndex::from_dense(&[1, 1]));
        let a = MultiIndex::from_dense(&[0, 3, 1]);
        assert_eq!(MultiIndex::zero().add(&a), a);
    }

    #[test]
    fn sub_unit_examples() {
        assert_eq!(MultiIndex::from_dense(&[2]).sub_unit(1).unwrap(), MultiIndex::unit(1));
        assert_eq!(MultiIndex::from_dense(&[1, 1]).sub_unit(2).unwrap(), MultiIndex::unit(1));
        assert_eq!(MultiIndex::unit(1).sub_unit(2), Err(Error::UnderflowAt(2)));
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate(TruncationSpec::new(0, 5).unwrap()), vec![MultiIndex::zero()]);
        assert_eq!(
            enumerate(TruncationSpec::new(1, 2).unwrap()),
            vec![MultiIndex::zero(), MultiIndex::unit(1), MultiIndex::unit(2)]
        );
        let six = enumerate(TruncationSpec::new(2, 2).unwrap());
        assert_eq!(six.len(), 6);
        assert_eq!(six[3], MultiIndex::from_dense(&[2]));
        assert_eq!(six[4], MultiIndex::from_dense(&[1, 1]));
        assert_eq!(six[5], MultiIndex::from_dense(&[0, 2]));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for n in 0..=6 {
            for k in 1..=6 {
                let spec = TruncationSpec::new(n, k).unwrap();
                let list = enumerate(spec);
                let mut brute: Vec<MultiIndex> = (0..=n)
                    .flat_map(|o| brute_force(o, k))
                    .map(|d| MultiIndex::from_dense(&d))
                    .collect();
                brute.sort();
                brute.dedup();
                assert_eq!(list.len(), spec.size().unwrap());
                assert_eq!(list, brute, "N={n} K={k}");
                assert!(list.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn enumeration_closed_under_sub_unit() {
        let list = enumerate(TruncationSpec::new(4, 4).unwrap());
        let set: std::collections::HashSet<_> = list.iter().cloned().collect();
        for a in &list {
            for &(k, _) in a.entries() {
                let p = a.sub_unit(k).unwrap();
                assert!(set.contains(&p));
                assert!(p < *a);
            }
        }
    }

    #[test]
    fn characteristic_set_examples() {
        assert!(MultiIndex::zero().characteristic_set().is_empty());
        assert_eq!(MultiIndex::from_dense(&[2, 0, 1]).characteristic_set(), vec![1, 1, 3]);
        assert_eq!(MultiIndex::from_pairs([(2, 1), (5, 1)]).characteristic_set(), vec![2, 5]);
    }

    fn arb_index() -> impl Strategy<Value = MultiIndex> {
        prop::collection::vec(0u32..4, 0..6).prop_map(|d| MultiIndex::from_dense(&d))
    }

    proptest! {
        #[test]
        fn factorial_superadditive(a in arb_index(), b in arb_index()) {
            prop_assert!(a.add(&b).factorial() >= a.factorial() * b.factorial());
            prop_assert_eq!(a.add(&b).order(), a.order() + b.order());
        }

        #[test]
        fn sub_unit_inverts_add_unit(a in arb_index(), k in 1usize..8) {
            prop_assert_eq!(a.add_unit(k).sub_unit(k).unwrap(), a.clone());
            prop_assert_eq!(a.add(&MultiIndex::unit(k)), a.add_unit(k));
        }

        #[test]
        fn characteristic_set_roundtrip(a in arb_index()) {
            let cs = a.characteristic_set();
            prop_assert_eq!(cs.len(), a.order());
            prop_assert!(cs.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(MultiIndex::from_pairs(cs.into_iter().map(|k| (k, 1))), a);
        }
    }
}
