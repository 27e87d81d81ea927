use std::fmt;

/// Block-local range-table index, 1-based.
pub type Rti = usize;

pub const MAX_RTI: Rti = 64;

/// Set of range-table indices of one query block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct RelSet(u64);

impl RelSet {
    pub const EMPTY: RelSet = RelSet(0);

    pub fn single(rti: Rti) -> Self {
        assert!((1..=MAX_RTI).contains(&rti), "rti {rti} out of range");
        RelSet(1u64 << (rti - 1))
    }

    pub fn from_bits(bits: u64) -> Self {
        RelSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, rti: Rti) -> bool {
        (1..=MAX_RTI).contains(&rti) && self.0 & (1u64 << (rti - 1)) != 0
    }

    pub fn insert(&mut self, rti: Rti) {
        *self = self.union(RelSet::single(rti));
    }

    pub fn union(self, other: RelSet) -> RelSet {
        RelSet(self.0 | other.0)
    }

    pub fn intersect(self, other: RelSet) -> RelSet {
        RelSet(self.0 & other.0)
    }

    pub fn minus(self, other: RelSet) -> RelSet {
        RelSet(self.0 & !other.0)
    }

    pub fn overlaps(self, other: RelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: RelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Rti> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let tz = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(tz + 1)
        })
    }

    /// Smallest member.
    pub fn first(self) -> Option<Rti> {
        self.iter().next()
    }
}

impl FromIterator<Rti> for RelSet {
    fn from_iter<I: IntoIterator<Item = Rti>>(iter: I) -> Self {
        iter.into_iter().fold(RelSet::EMPTY, |acc, r| acc.union(RelSet::single(r)))
    }
}

impl fmt::Display for RelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a: RelSet = [1, 3, 5].into_iter().collect();
        let b: RelSet = [3, 4].into_iter().collect();
        assert_eq!(a.intersect(b), RelSet::single(3));
        assert_eq!(a.union(b).len(), 4);
        assert_eq!(a.minus(b).iter().collect::<Vec<_>>(), vec![1, 5]);
        assert!(RelSet::single(5).is_subset(a));
        assert!(!b.is_subset(a));
        assert!(!a.contains(64) && RelSet::single(64).contains(64));
        assert_eq!(a.to_string(), "{1,3,5}");
    }
}
