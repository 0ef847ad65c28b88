//! Exhaustive enumeration of small terms and contexts.
//!
//! Binders are named by nesting depth from a fixed list disjoint from the
//! free-variable alphabet, so every alpha-class has exactly one
//! representative and no deduplication is needed.

use std::collections::HashMap;

use serde::Serialize;

use crate::context::ExtContext;
use crate::term::{Name, Term};

const BINDER_NAMES: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

#[derive(Clone, Debug, Serialize)]
pub struct EnumSpec {
    /// Largest node count enumerated.
    pub max_size: usize,
    /// Free variables that may occur.
    pub var_alphabet: Vec<Name>,
    pub max_annots: usize,
    pub max_stack: usize,
    /// Largest node count of a bound or stack entry in an enumerated context.
    pub max_embedded_size: usize,
}

impl EnumSpec {
    pub fn terms(max_size: usize, alphabet: &[&str]) -> EnumSpec {
        EnumSpec {
            max_size,
            var_alphabet: alphabet.iter().map(|s| Name::new(s)).collect(),
            max_annots: 0,
            max_stack: 0,
            max_embedded_size: 0,
        }
    }

    pub fn with_contexts(mut self, max_annots: usize, max_stack: usize, max_embedded_size: usize) -> EnumSpec {
        self.max_annots = max_annots;
        self.max_stack = max_stack;
        self.max_embedded_size = max_embedded_size;
        self
    }
}

fn binder_name(depth: usize, alphabet: &[Name]) -> Name {
    let avail: Vec<&str> = BINDER_NAMES
        .iter()
        .copied()
        .filter(|n| !alphabet.iter().any(|a| a.as_str() == *n))
        .collect();
    match avail.get(depth) {
        Some(n) => Name::new(n),
        None => Name::new(&format!("b{depth}")),
    }
}

struct Enumerator<'a> {
    alphabet: &'a [Name],
    memo: HashMap<(usize, usize), Vec<Term>>,
}

impl Enumerator<'_> {
    /// Terms of exactly `size` nodes in which binders at depth `< depth` may
    /// be referenced.
    fn exact(&mut self, size: usize, depth: usize) -> Vec<Term> {
        if let Some(v) = self.memo.get(&(size, depth)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if size == 1 {
            out.push(Term::Top);
            out.extend(self.alphabet.iter().map(|x| Term::Var(x.clone())));
            out.extend((0..depth).map(|d| Term::Var(binder_name(d, self.alphabet))));
        } else if size >= 3 {
            for left in 1..size - 1 {
                let right = size - 1 - left;
                let fs = self.exact(left, depth);
                let vs = self.exact(right, depth);
                for f in &fs {
                    for v in &vs {
                        out.push(Term::app(f.clone(), v.clone()));
                    }
                }
                let annots = fs;
                let bodies = self.exact(right, depth + 1);
                let x = binder_name(depth, self.alphabet);
                for a in &annots {
                    for b in &bodies {
                        out.push(Term::abs(x.clone(), a.clone(), b.clone()));
                    }
                }
            }
        }
        self.memo.insert((size, depth), out.clone());
        out
    }
}

/// Every term over `spec.var_alphabet` with at most `spec.max_size` nodes,
/// one per alpha-class, ordered by size and then by printed form.
pub fn enum_terms(spec: &EnumSpec) -> Vec<Term> {
    enum_terms_over(spec.max_size, &spec.var_alphabet)
}

pub fn enum_terms_over(max_size: usize, alphabet: &[Name]) -> Vec<Term> {
    let mut e = Enumerator {
        alphabet,
        memo: HashMap::new(),
    };
    let mut out = Vec::new();
    for size in 1..=max_size {
        let mut level: Vec<(String, Term)> = e
            .exact(size, 0)
            .into_iter()
            .map(|t| (t.to_string(), t))
            .collect();
        level.sort_by(|a, b| a.0.cmp(&b.0));
        out.extend(level.into_iter().map(|(_, t)| t));
    }
    out
}

/// Every prevalid context annotating distinct alphabet variables (at most
/// `max_annots` of them, in any order) with at most `max_stack` stack
/// entries; bounds and entries have at most `max_embedded_size` nodes and
/// mention only variables annotated before them.
pub fn enum_contexts(spec: &EnumSpec) -> Vec<ExtContext> {
    let mut by_scope: HashMap<Vec<Name>, Vec<Term>> = HashMap::new();
    let mut terms_over = |scope: &[Name]| -> Vec<Term> {
        by_scope
            .entry(scope.to_vec())
            .or_insert_with(|| enum_terms_over(spec.max_embedded_size, scope))
            .clone()
    };
    let mut annot_seqs: Vec<Vec<(Name, Term)>> = vec![vec![]];
    let mut frontier: Vec<Vec<(Name, Term)>> = vec![vec![]];
    for _ in 0..spec.max_annots {
        let mut next = Vec::new();
        for seq in &frontier {
            let dom: Vec<Name> = seq.iter().map(|(x, _)| x.clone()).collect();
            for x in &spec.var_alphabet {
                if dom.contains(x) {
                    continue;
                }
                for t in terms_over(&dom) {
                    let mut s = seq.clone();
                    s.push((x.clone(), t));
                    next.push(s);
                }
            }
        }
        annot_seqs.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::new();
    for seq in annot_seqs {
        let dom: Vec<Name> = seq.iter().map(|(x, _)| x.clone()).collect();
        let entries = terms_over(&dom);
        let mut stacks: Vec<Vec<Term>> = vec![vec![]];
        let mut sfront: Vec<Vec<Term>> = vec![vec![]];
        for _ in 0..spec.max_stack {
            let mut next = Vec::new();
            for st in &sfront {
                for e in &entries {
                    let mut s = st.clone();
                    s.push(e.clone());
                    next.push(s);
                }
            }
            stacks.extend(next.iter().cloned());
            sfront = next;
        }
        for st in stacks {
            out.push(ExtContext::new(seq.clone(), st));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_one() {
        let t = enum_terms(&EnumSpec::terms(1, &["x"]));
        assert_eq!(t, vec![Term::Top, Term::var("x")]);
    }

    #[test]
    fn contexts_are_prevalid() {
        let spec = EnumSpec::terms(0, &["x", "y"]).with_contexts(2, 1, 1);
        let cs = enum_contexts(&spec);
        assert!(cs.iter().all(ExtContext::is_prevalid));
        assert!(cs.contains(&ExtContext::empty()));
    }
}
