//! Opaque source tokens and the sets they travel in.
//!
//! Answer payloads are sets of source tokens with plain union semantics; the
//! application-level content of an answer is out of scope, so a token is just
//! a dense index into the trial's source list. Payload sets are copied on
//! every delivery, so they are kept as fixed-width bitsets.

use serde::{Deserialize, Serialize};

/// Identifier of one source's answer, dense in `0..n_star`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceToken(pub u32);

/// A set of source tokens over a universe fixed at trial start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    universe: u32,
    words: Vec<u64>,
}

impl TokenSet {
    pub fn empty(universe: u32) -> Self {
        let words = vec![0u64; (universe as usize).div_ceil(64)];
        Self { universe, words }
    }

    pub fn singleton(universe: u32, token: SourceToken) -> Self {
        let mut set = Self::empty(universe);
        set.insert(token);
        set
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn insert(&mut self, token: SourceToken) {
        assert!(token.0 < self.universe, "token outside universe");
        self.words[(token.0 / 64) as usize] |= 1u64 << (token.0 % 64);
    }

    pub fn contains(&self, token: SourceToken) -> bool {
        token.0 < self.universe && self.words[(token.0 / 64) as usize] >> (token.0 % 64) & 1 == 1
    }

    pub fn union_with(&mut self, other: &TokenSet) {
        assert_eq!(self.universe, other.universe, "mismatched universes");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn is_subset_of(&self, other: &TokenSet) -> bool {
        self.words.iter().zip(&other.words).all(|(w, o)| w & !o == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = SourceToken> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                Some(SourceToken(i as u32 * 64 + b))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_contains_iter() {
        let mut s = TokenSet::empty(130);
        for t in [0, 63, 64, 129] {
            s.insert(SourceToken(t));
        }
        assert!(s.contains(SourceToken(64)));
        assert!(!s.contains(SourceToken(1)));
        assert_eq!(s.len(), 4);
        let collected: Vec<u32> = s.iter().map(|t| t.0).collect();
        assert_eq!(collected, vec![0, 63, 64, 129]);
    }

    #[test]
    fn union_and_subset() {
        let a = TokenSet::singleton(70, SourceToken(3));
        let mut b = TokenSet::singleton(70, SourceToken(69));
        b.union_with(&a);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.len(), 2);
        // Re-union is idempotent.
        let before = b.clone();
        b.union_with(&a);
        assert_eq!(b, before);
    }

    #[test]
    fn empty_set() {
        let s = TokenSet::empty(0);
        assert!(s.is_empty());
        assert_eq!(s.len(), 0);
        assert_eq!(s.iter().count(), 0);
    }
}
