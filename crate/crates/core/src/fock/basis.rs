//! Enumeration of the truncated fermion ⊗ boson occupation basis.

use crate::error::{Error, Result};

/// Default cap on the total basis dimension.
pub const DEFAULT_BUDGET: usize = 200_000;

/// Product basis `{N-subsets of M orbitals} × {0..=n_max}^{modes}`.
///
/// Fermion configurations are bitmasks in increasing numeric order; the
/// boson index is mixed radix with mode 0 least significant. The flat index
/// is `fermion_index · boson_dim + boson_index`, so all boson states of one
/// fermion configuration are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    n_orbitals: usize,
    n_fermions: usize,
    n_modes: usize,
    n_max: usize,
    configs: Vec<u64>,
    boson_dim: usize,
}

pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

impl FockBasis {
    pub fn new(n_orbitals: usize, n_fermions: usize, n_modes: usize, n_max: usize, budget: usize) -> Result<Self> {
        if n_orbitals > 63 {
            return Err(Error::InvalidParams(format!(
                "at most 63 one-particle modes are supported, got {n_orbitals}"
            )));
        }
        if n_fermions > n_orbitals {
            return Err(Error::InvalidParams(format!(
                "{n_fermions} fermions do not fit into {n_orbitals} modes"
            )));
        }
        let too_big = |dim: Option<usize>| Error::BudgetExceeded { dim: dim.unwrap_or(usize::MAX), budget };
        let fermion_dim = binomial(n_orbitals, n_fermions).ok_or_else(|| too_big(None))?;
        let boson_dim = (0..n_modes)
            .try_fold(1usize, |acc, _| acc.checked_mul(n_max + 1))
            .ok_or_else(|| too_big(None))?;
        let dim = fermion_dim.checked_mul(boson_dim);
        match dim {
            Some(d) if d <= budget => {}
            other => return Err(too_big(other)),
        }
        Ok(FockBasis {
            n_orbitals,
            n_fermions,
            n_modes,
            n_max,
            configs: enumerate_subsets(n_orbitals, n_fermions),
            boson_dim,
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_fermions(&self) -> usize {
        self.n_fermions
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.configs.len() * self.boson_dim
    }

    pub fn fermion_dim(&self) -> usize {
        self.configs.len()
    }

    pub fn boson_dim(&self) -> usize {
        self.boson_dim
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn config(&self, f: usize) -> u64 {
        self.configs[f]
    }

    pub fn config_index(&self, mask: u64) -> Option<usize> {
        self.configs.binary_search(&mask).ok()
    }

    pub fn index(&self, f: usize, b: usize) -> usize {
        f * self.boson_dim + b
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.boson_dim, index % self.boson_dim)
    }

    /// Index step of one quantum in mode `κ`.
    pub fn boson_stride(&self, mode: usize) -> usize {
        (self.n_max + 1).pow(mode as u32)
    }

    pub fn occupation(&self, b: usize, mode: usize) -> usize {
        (b / self.boson_stride(mode)) % (self.n_max + 1)
    }

    pub fn occupations(&self, b: usize) -> Vec<usize> {
        (0..self.n_modes).map(|m| self.occupation(b, m)).collect()
    }

    pub fn boson_index(&self, occupations: &[usize]) -> usize {
        occupations.iter().rev().fold(0, |acc, &n| acc * (self.n_max + 1) + n)
    }

    /// Total boson number of a boson index.
    pub fn boson_number(&self, b: usize) -> usize {
        (0..self.n_modes).map(|m| self.occupation(b, m)).sum()
    }
}

/// All `n`-bit subsets of `m` bits in increasing numeric order (Gosper's hack).
fn enumerate_subsets(m: usize, n: usize) -> Vec<u64> {
    if n == 0 {
        return vec![0];
    }
    let limit = 1u64 << m;
    let mut out = Vec::new();
    let mut x: u64 = (1u64 << n) - 1;
    while x < limit {
        out.push(x);
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// `(-1)^{#occupied modes below p}`.
pub fn parity_below(mask: u64, p: usize) -> f64 {
    if (mask & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c†_q c_p |mask⟩ = sign |target⟩`, or `None` if the result vanishes.
pub fn hop(mask: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    if mask & (1u64 << p) == 0 {
        return None;
    }
    let removed = mask ^ (1u64 << p);
    if removed & (1u64 << q) != 0 {
        return None;
    }
    Some((removed | (1u64 << q), parity_below(mask, p) * parity_below(removed, q)))
}

/// Occupied modes of a configuration, ascending.
pub fn occupied(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |p| mask & (1u64 << p) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_complete_and_sorted() {
        let b = FockBasis::new(6, 3, 0, 0, 1000).unwrap();
        assert_eq!(b.fermion_dim(), 20);
        assert!(b.configs().windows(2).all(|w| w[0] < w[1]));
        assert!(b.configs().iter().all(|c| c.count_ones() == 3));
        for (i, &c) in b.configs().iter().enumerate() {
            assert_eq!(b.config_index(c), Some(i));
        }
    }

    #[test]
    fn desk_dimension() {
        let b = FockBasis::new(16, 2, 5, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(b.dim(), 29160);
    }

    #[test]
    fn budget_is_enforced() {
        let err = FockBasis::new(16, 2, 5, 2, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { dim: 29160, budget: 1000 }));
    }

    #[test]
    fn boson_index_round_trip() {
        let b = FockBasis::new(2, 1, 3, 2, 1000).unwrap();
        for i in 0..b.boson_dim() {
            assert_eq!(b.boson_index(&b.occupations(i)), i);
        }
        assert_eq!(b.occupation(b.boson_stride(2), 2), 1);
    }

    #[test]
    fn hop_signs() {
        // c†_2 c_0 on {0,1}: remove 0 (+), insert 2 past mode 1 (-)
        assert_eq!(hop(0b011, 0, 2), Some((0b110, -1.0)));
        assert_eq!(hop(0b011, 1, 2), Some((0b101, 1.0)));
        assert_eq!(hop(0b011, 0, 1), None);
        assert_eq!(hop(0b011, 2, 3), None);
        assert_eq!(hop(0b011, 1, 1), Some((0b011, 1.0)));
    }
}
