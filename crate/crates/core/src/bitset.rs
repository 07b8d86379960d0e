use core::fmt;
use core::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, Not, Sub};

/// A set of small indices (< 64) packed into a word.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitSet(pub u64);

pub type VertexSet = BitSet;
pub type NodeSet = BitSet;

impl BitSet {
    pub const EMPTY: BitSet = BitSet(0);
    pub const CAPACITY: usize = 64;

    #[inline]
    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < 64);
        BitSet(1u64 << i)
    }

    /// `{0, .., n-1}`
    #[inline]
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            BitSet(u64::MAX)
        } else {
            BitSet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u64 << i);
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        BitSet(self.0 | 1u64 << i)
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        BitSet(self.0 & !(1u64 << i))
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset(self, other: BitSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn intersects(self, other: BitSet) -> bool {
        self.0 & other.0 != 0
    }

    #[inline]
    pub fn first(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }

    #[inline]
    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }

    /// Image under an index map.
    pub fn map(self, f: impl Fn(usize) -> usize) -> BitSet {
        let mut out = BitSet::EMPTY;
        for i in self.iter() {
            out.insert(f(i));
        }
        out
    }
}

impl FromIterator<usize> for BitSet {
    fn from_iter<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut s = BitSet::EMPTY;
        for i in it {
            s.insert(i);
        }
        s
    }
}

impl IntoIterator for BitSet {
    type Item = usize;
    type IntoIter = Iter;
    fn into_iter(self) -> Iter {
        self.iter()
    }
}

#[derive(Clone)]
pub struct Iter(u64);

impl Iterator for Iter {
    type Item = usize;
    #[inline]
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

impl ExactSizeIterator for Iter {}

pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = BitSet;
    fn next(&mut self) -> Option<BitSet> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some((cur | !self.mask).wrapping_add(1) & self.mask)
        };
        Some(BitSet(cur))
    }
}

impl BitOr for BitSet {
    type Output = BitSet;
    fn bitor(self, o: BitSet) -> BitSet {
        BitSet(self.0 | o.0)
    }
}

impl BitOrAssign for BitSet {
    fn bitor_assign(&mut self, o: BitSet) {
        self.0 |= o.0;
    }
}

impl BitAnd for BitSet {
    type Output = BitSet;
    fn bitand(self, o: BitSet) -> BitSet {
        BitSet(self.0 & o.0)
    }
}

impl BitAndAssign for BitSet {
    fn bitand_assign(&mut self, o: BitSet) {
        self.0 &= o.0;
    }
}

impl Sub for BitSet {
    type Output = BitSet;
    fn sub(self, o: BitSet) -> BitSet {
        BitSet(self.0 & !o.0)
    }
}

impl Not for BitSet {
    type Output = BitSet;
    fn not(self) -> BitSet {
        BitSet(!self.0)
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn subsets_cover_powerset() {
        let s = BitSet(0b1011);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|t| t.is_subset(s)));
        assert_eq!(BitSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn iter_ascending() {
        let s: BitSet = [5, 1, 9].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), [1, 5, 9]);
        assert_eq!(s.first(), Some(1));
        assert_eq!(BitSet::full(64).len(), 64);
    }
}
