//! Fixed-universe bitsets over transaction ids.
//!
//! Every per-item and per-pattern selection in a database shares the same
//! universe `0..n_transactions`, so the word loops below can fuse several
//! sets without allocating intermediates. Gain evaluation spends nearly all
//! of its time in these loops.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TidSet {
    words: Vec<u64>,
    universe: usize,
}

impl TidSet {
    pub fn empty(universe: usize) -> Self {
        TidSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = TidSet {
            words: vec![u64::MAX; universe.div_ceil(64)],
            universe,
        };
        s.clear_tail();
        s
    }

    pub fn from_tids<I: IntoIterator<Item = usize>>(universe: usize, tids: I) -> Self {
        let mut s = Self::empty(universe);
        for t in tids {
            s.insert(t);
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.universe % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn insert(&mut self, tid: usize) {
        assert!(tid < self.universe, "tid {tid} outside universe {}", self.universe);
        self.words[tid / 64] |= 1u64 << (tid % 64);
    }

    #[inline]
    pub fn remove(&mut self, tid: usize) {
        if tid < self.universe {
            self.words[tid / 64] &= !(1u64 << (tid % 64));
        }
    }

    #[inline]
    pub fn contains(&self, tid: usize) -> bool {
        tid < self.universe && self.words[tid / 64] & (1u64 << (tid % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersect_with(&mut self, other: &TidSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn union_with(&mut self, other: &TidSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn difference_with(&mut self, other: &TidSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn intersection(&self, other: &TidSet) -> TidSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    /// `|self ∩ other|`
    pub fn intersection_len(&self, other: &TidSet) -> usize {
        debug_assert_eq!(self.universe, other.universe);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `|self ∩ a ∩ b|`
    pub fn intersection3_len(&self, a: &TidSet, b: &TidSet) -> usize {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .map(|((x, y), z)| (x & y & z).count_ones() as usize)
            .sum()
    }

    pub fn is_disjoint(&self, other: &TidSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// Transactions in which exactly one of `sets` is present.
    pub fn exactly_one<'a, I>(universe: usize, sets: I) -> TidSet
    where
        I: IntoIterator<Item = &'a TidSet>,
    {
        let mut once = TidSet::empty(universe);
        let mut twice = TidSet::empty(universe);
        for s in sets {
            for ((o, t), x) in once.words.iter_mut().zip(twice.words.iter_mut()).zip(&s.words) {
                *t |= *o & *x;
                *o |= *x;
            }
        }
        once.difference_with(&twice);
        once
    }
}

impl fmt::Debug for TidSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_bits_stay_clear() {
        let s = TidSet::full(70);
        assert_eq!(s.len(), 70);
        assert!(!s.contains(70));
    }

    #[test]
    fn exactly_one_semantics() {
        let a = TidSet::from_tids(10, [0, 1, 2]);
        let b = TidSet::from_tids(10, [1, 3]);
        let c = TidSet::from_tids(10, [1, 2, 9]);
        let x = TidSet::exactly_one(10, [&a, &b, &c]);
        assert_eq!(x.iter().collect::<Vec<_>>(), vec![0, 3, 9]);
    }

    #[test]
    fn iteration_matches_membership() {
        let s = TidSet::from_tids(200, [0, 63, 64, 127, 199]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 64, 127, 199]);
        assert_eq!(s.len(), 5);
    }
}
