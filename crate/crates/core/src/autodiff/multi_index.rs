use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent vector `α` of a partial derivative `∂^α`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    /// Unit index `e_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::new(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn order(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Componentwise `self ≤ other`.
    pub fn is_below(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.exponents.iter().zip(&other.exponents).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::new(self.exponents.iter().zip(&other.exponents).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference; `None` unless `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.is_below(self) {
            return None;
        }
        Some(MultiIndex::new(self.exponents.iter().zip(&other.exponents).map(|(a, b)| a - b).collect()))
    }

    /// `Π_i binom(self_i, beta_i)`.
    pub fn binomial(&self, beta: &MultiIndex) -> f64 {
        self.exponents
            .iter()
            .zip(&beta.exponents)
            .map(|(&a, &b)| binom(a as u64, b as u64) as f64)
            .product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self::new(v)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exponents)
    }
}

pub(crate) fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// `binom(dim + order, order)`, the number of multi-indices with `|α| ≤ order`.
pub fn num_multi_indices(dim: usize, order: usize) -> usize {
    binom((dim + order) as u64, order as u64) as usize
}

/// All multi-indices with `|α| ≤ order`, graded by order, and within one order
/// in decreasing lexicographic order of the exponent vector.
pub fn multi_indices(dim: usize, order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(num_multi_indices(dim, order));
    let mut buf = vec![0u32; dim];
    for k in 0..=order as u32 {
        fill(&mut buf, 0, k, &mut out);
    }
    out
}

fn fill(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 >= buf.len() {
        if let Some(last) = buf.last_mut() {
            *last = remaining;
            out.push(MultiIndex::new(buf.to_vec()));
        } else if remaining == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return;
    }
    for v in (0..=remaining).rev() {
        buf[pos] = v;
        fill(buf, pos + 1, remaining - v, out);
    }
    buf[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_in_two_dims() {
        let got: Vec<Vec<u32>> = multi_indices(2, 2).iter().map(|m| m.exponents().to_vec()).collect();
        let want = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
        assert_eq!(got, want);
    }

    #[test]
    fn cardinality_matches_binomial() {
        for d in 1..=5 {
            for k in 0..=4 {
                let idx = multi_indices(d, k);
                assert_eq!(idx.len(), num_multi_indices(d, k));
                let mut sorted = idx.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), idx.len());
                assert!(idx.windows(2).all(|w| w[0].order() <= w[1].order()));
            }
        }
    }

    #[test]
    fn binomial_of_multi_indices() {
        let a = MultiIndex::new(vec![2, 3]);
        let b = MultiIndex::new(vec![1, 2]);
        assert_eq!(a.binomial(&b), 6.0);
        assert_eq!(a.checked_sub(&b), Some(MultiIndex::new(vec![1, 1])));
        assert_eq!(b.checked_sub(&a), None);
    }
}
