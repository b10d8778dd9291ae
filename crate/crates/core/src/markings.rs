//! Subsets of marking indices `{1, …, n}` stored as bitmasks.

use std::cmp::Ordering;
use std::fmt;

/// A subset of `{1, …, n}` with `n ≤ 62`; bit `i - 1` stands for marking `i`.
///
/// The total order is by cardinality, then lexicographic on the ascending
/// index lists, which is the order used for generator listings.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MarkingSet(u64);

impl MarkingSet {
    pub const EMPTY: MarkingSet = MarkingSet(0);

    pub fn from_bits(bits: u64) -> Self {
        MarkingSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{1, …, n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= 62, "at most 62 markings are supported");
        MarkingSet((1u64 << n) - 1)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut set = MarkingSet::EMPTY;
        for i in indices {
            set = set.with(i);
        }
        set
    }

    pub fn singleton(i: usize) -> Self {
        MarkingSet::EMPTY.with(i)
    }

    pub fn with(self, i: usize) -> Self {
        assert!((1..=62).contains(&i), "marking index {i} out of range");
        MarkingSet(self.0 | (1u64 << (i - 1)))
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=62).contains(&i) && self.0 & (1u64 << (i - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        MarkingSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        MarkingSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        MarkingSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Complement inside `{1, …, n}`.
    pub fn complement(self, n: usize) -> Self {
        MarkingSet::full(n).difference(self)
    }

    /// Largest index in the set.
    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| 64 - self.0.leading_zeros() as usize)
    }

    /// Ascending indices.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=62usize).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `{1, …, n}`.
    pub fn all_subsets(n: usize) -> impl Iterator<Item = MarkingSet> {
        assert!(n <= 62);
        (0..(1u64 << n)).map(MarkingSet)
    }

    /// Renumbers the members: `map(i)` gives the new index of marking `i`.
    pub fn relabel(self, map: impl Fn(usize) -> usize) -> Self {
        MarkingSet::from_indices(self.iter().map(map))
    }
}

impl Ord for MarkingSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for MarkingSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MarkingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for MarkingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_size_then_lex() {
        let mut sets = [
            MarkingSet::from_indices([1, 2, 3]),
            MarkingSet::from_indices([2, 3]),
            MarkingSet::from_indices([1, 3]),
            MarkingSet::from_indices([1, 2]),
            MarkingSet::EMPTY,
            MarkingSet::from_indices([3]),
        ];
        sets.sort();
        let shown: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["{}", "{3}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"]);
    }

    #[test]
    fn set_operations() {
        let a = MarkingSet::from_indices([1, 4]);
        assert_eq!(a.complement(4), MarkingSet::from_indices([2, 3]));
        assert_eq!(a.max(), Some(4));
        assert!(MarkingSet::singleton(4).is_subset(a));
        assert_eq!(a.relabel(|i| i + 1), MarkingSet::from_indices([2, 5]));
        assert_eq!(MarkingSet::all_subsets(3).count(), 8);
    }
}
