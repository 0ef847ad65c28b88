//! Finite sets of terms modulo alpha-equivalence.

use indexmap::IndexMap;

use crate::term::{CanonKey, Term};

/// One-step reducts of a term, deduplicated by alpha-equivalence and kept in
/// insertion order.
#[derive(Clone, Default)]
pub struct StepSet {
    items: IndexMap<CanonKey, Term>,
}

impl StepSet {
    pub fn new() -> StepSet {
        StepSet::default()
    }

    pub fn singleton(t: Term) -> StepSet {
        let mut s = StepSet::new();
        s.insert(t);
        s
    }

    /// Returns `true` if the term was not already present.
    pub fn insert(&mut self, t: Term) -> bool {
        let key = t.canon_key();
        self.insert_keyed(key, t)
    }

    pub fn insert_keyed(&mut self, key: CanonKey, t: Term) -> bool {
        if self.items.contains_key(&key) {
            false
        } else {
            self.items.insert(key, t);
            true
        }
    }

    pub fn extend(&mut self, other: StepSet) {
        for (k, t) in other.items {
            self.insert_keyed(k, t);
        }
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.items.contains_key(&t.canon_key())
    }

    pub fn contains_key(&self, key: &CanonKey) -> bool {
        self.items.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.items.values()
    }

    pub fn keyed(&self) -> impl Iterator<Item = (&CanonKey, &Term)> {
        self.items.iter()
    }

    /// The least common element under the (size, key) order, if any.
    pub fn first_common(&self, other: &StepSet) -> Option<Term> {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .items
            .iter()
            .filter(|(k, _)| large.items.contains_key(*k))
            .min_by(|(ka, a), (kb, b)| a.size().cmp(&b.size()).then_with(|| ka.cmp(kb)))
            .map(|(_, t)| t.clone())
    }

    pub fn intersects(&self, other: &StepSet) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.items.keys().any(|k| large.items.contains_key(k))
    }

    /// Elements in (size, key) order.
    pub fn sorted(&self) -> Vec<Term> {
        let mut v: Vec<(usize, &CanonKey, &Term)> =
            self.items.iter().map(|(k, t)| (t.size(), k, t)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        v.into_iter().map(|(_, _, t)| t.clone()).collect()
    }
}

impl FromIterator<Term> for StepSet {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> StepSet {
        let mut s = StepSet::new();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

impl std::fmt::Debug for StepSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.items.values()).finish()
    }
}
