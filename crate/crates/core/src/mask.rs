//! Fixed-width bitmask over variable (or player) indices.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Widest index set a mask can represent.
pub const MASK_WIDTH: usize = 64;

/// Bit `i` set means index `i` belongs to the subset.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetMask(pub u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// Mask holding indices `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MASK_WIDTH, "mask width {n} exceeds {MASK_WIDTH}");
        if n == MASK_WIDTH {
            SubsetMask(u64::MAX)
        } else {
            SubsetMask((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        SubsetMask(1u64 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(Self::EMPTY, |m, i| m.with(i))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < MASK_WIDTH && self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        SubsetMask(self.0 | 1u64 << i)
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        SubsetMask(self.0 & !(1u64 << i))
    }

    pub fn insert(&mut self, i: usize) {
        *self = self.with(i);
    }

    pub fn remove(&mut self, i: usize) {
        *self = self.without(i);
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> Indices {
        Indices(self.0)
    }

    /// Every subset of `self`, in increasing numeric (lexicographic-by-bitmask) order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for SubsetMask {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_indices(iter)
    }
}

pub struct Indices(u64);

impl Iterator for Indices {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Indices {}

/// Submask enumeration in increasing order: `next = ((cur | !universe) + 1) & universe`.
pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let cur = self.next?;
        let succ = (cur | !self.universe).wrapping_add(1) & self.universe;
        self.next = if succ == 0 { None } else { Some(succ) };
        Some(SubsetMask(cur))
    }
}
