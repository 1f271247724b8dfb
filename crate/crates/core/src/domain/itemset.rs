use std::fmt;

/// Fixed-width bit set over the positions of an [`ItemDomain`](super::ItemDomain).
///
/// Equality, hashing and ordering only look at the bits, so an `ItemSet` doubles as the canonical
/// cache key for a live set of items.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet {
    width: usize,
    words: Vec<u64>,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl ItemSet {
    pub fn empty(width: usize) -> Self {
        ItemSet {
            width,
            words: vec![0; word_count(width)],
        }
    }

    pub fn full(width: usize) -> Self {
        let mut set = Self::empty(width);
        for (i, word) in set.words.iter_mut().enumerate() {
            let remaining = width - i * 64;
            *word = if remaining >= 64 {
                u64::MAX
            } else {
                (1u64 << remaining) - 1
            };
        }
        set
    }

    /// Builds a set from item positions. Positions at or beyond `width` are ignored.
    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
        let mut set = Self::empty(width);
        for i in indices {
            if i < width {
                set.insert(i);
            }
        }
        set
    }

    pub fn singleton(width: usize, index: usize) -> Self {
        Self::from_indices(width, [index])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.width && self.words[index / 64] & (1u64 << (index % 64)) != 0
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < self.width, "index {index} outside width {}", self.width);
        self.words[index / 64] |= 1u64 << (index % 64);
    }

    pub fn remove(&mut self, index: usize) {
        if index < self.width {
            self.words[index / 64] &= !(1u64 << (index % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// The single member of a one-item set.
    pub fn only(&self) -> Option<usize> {
        let mut it = self.iter();
        match (it.next(), it.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    pub fn intersection(&self, other: &ItemSet) -> ItemSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &ItemSet) -> ItemSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &ItemSet) -> ItemSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &ItemSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &ItemSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn zip_with(&self, other: &ItemSet, op: impl Fn(u64, u64) -> u64) -> ItemSet {
        debug_assert_eq!(self.width, other.width, "item sets of different widths");
        ItemSet {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    /// Members in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
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

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_and_empty() {
        for width in [0, 1, 63, 64, 65, 130] {
            assert_eq!(ItemSet::full(width).len(), width);
            assert!(ItemSet::empty(width).is_empty());
        }
    }

    #[test]
    fn only_member() {
        assert_eq!(ItemSet::singleton(70, 66).only(), Some(66));
        assert_eq!(ItemSet::from_indices(5, [1, 2]).only(), None);
        assert_eq!(ItemSet::empty(5).only(), None);
    }

    proptest! {
        #[test]
        fn split_partitions(members in proptest::collection::vec(any::<bool>(), 1..150),
                            mask in proptest::collection::vec(any::<bool>(), 150)) {
            let width = members.len();
            let s = ItemSet::from_indices(width, (0..width).filter(|&i| members[i]));
            let q = ItemSet::from_indices(width, (0..width).filter(|&i| mask[i]));
            let yes = s.intersection(&q);
            let no = s.difference(&q);
            prop_assert_eq!(yes.len() + no.len(), s.len());
            prop_assert!(yes.is_disjoint(&no));
            prop_assert_eq!(yes.union(&no), s.clone());
            prop_assert_eq!(ItemSet::from_indices(width, s.to_indices()), s);
        }
    }
}
