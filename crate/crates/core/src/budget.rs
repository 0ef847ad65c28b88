//! Fuel for procedures that may not terminate, and three-valued answers.

use serde::Serialize;

/// A step counter shared by everything one top-level call does.
///
/// Accounting: one unit per rewrite in normalization, one per frontier term
/// expanded in a reachability search, one per minimal-promotion step and one
/// per node visited by the well-formedness procedures.
#[derive(Clone, Debug)]
pub struct Budget {
    remaining: u64,
    spent: u64,
    exhausted_in: Option<&'static str>,
    note: Option<String>,
}

impl Budget {
    pub fn new(fuel: u64) -> Budget {
        Budget {
            remaining: fuel,
            spent: 0,
            exhausted_in: None,
            note: None,
        }
    }

    /// Takes one unit. Returns `false`, and remembers `what`, once the fuel
    /// is gone.
    pub fn spend(&mut self, what: &'static str) -> bool {
        if self.remaining == 0 {
            self.exhausted_in.get_or_insert(what);
            return false;
        }
        self.remaining -= 1;
        self.spent += 1;
        true
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted_in.is_some()
    }

    /// The procedure that first ran out of fuel, if any did.
    pub fn exhausted_in(&self) -> Option<&'static str> {
        self.exhausted_in
    }

    /// Records a reason for an `Unknown` that is not fuel exhaustion.
    pub fn note(&mut self, msg: impl Into<String>) {
        self.note.get_or_insert_with(|| msg.into());
    }

    pub fn noted(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// Carves out `numer/denom` of the remaining fuel as a separate budget.
    /// Hand it back with [`Budget::absorb`].
    pub fn split(&mut self, numer: u64, denom: u64) -> Budget {
        let part = self.remaining * numer / denom;
        self.remaining -= part;
        Budget::new(part)
    }

    pub fn absorb(&mut self, child: Budget) {
        self.remaining += child.remaining;
        self.spent += child.spent;
        if self.exhausted_in.is_none() {
            self.exhausted_in = child.exhausted_in;
        }
        if self.note.is_none() {
            self.note = child.note;
        }
    }

    /// Human-readable reason for an `Unknown` produced under this budget.
    pub fn unknown_reason(&self) -> String {
        match (self.exhausted_in, &self.note) {
            (Some(what), _) => format!("fuel exhausted during {what}"),
            (None, Some(note)) => note.clone(),
            (None, None) => "undetermined".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    /// Three-valued conjunction.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
            _ => Verdict::Unknown,
        }
    }

    pub fn is_definite(self) -> bool {
        self != Verdict::Unknown
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

/// A three-valued answer that carries evidence when positive.
#[derive(Clone, Debug)]
pub enum Decision<T> {
    Yes(T),
    No,
    Unknown,
}

impl<T> Decision<T> {
    pub fn verdict(&self) -> Verdict {
        match self {
            Decision::Yes(_) => Verdict::Yes,
            Decision::No => Verdict::No,
            Decision::Unknown => Verdict::Unknown,
        }
    }

    pub fn yes(self) -> Option<T> {
        match self {
            Decision::Yes(t) => Some(t),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spend_until_empty() {
        let mut b = Budget::new(2);
        assert!(b.spend("a"));
        assert!(b.spend("a"));
        assert!(!b.spend("normalization"));
        assert!(!b.spend("other"));
        assert_eq!(b.exhausted_in(), Some("normalization"));
        assert_eq!(b.spent(), 2);
        assert_eq!(b.unknown_reason(), "fuel exhausted during normalization");
    }

    #[test]
    fn split_and_absorb_conserve_fuel() {
        let mut b = Budget::new(11);
        let mut child = b.split(1, 2);
        assert_eq!(child.remaining() + b.remaining(), 11);
        child.spend("x");
        b.absorb(child);
        assert_eq!(b.remaining(), 10);
        assert_eq!(b.spent(), 1);
    }

    #[test]
    fn three_valued_and() {
        use Verdict::*;
        assert_eq!(Yes.and(Unknown), Unknown);
        assert_eq!(Unknown.and(No), No);
        assert_eq!(Yes.and(Yes), Yes);
    }
}
