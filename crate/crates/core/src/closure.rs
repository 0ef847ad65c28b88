//! Breadth-first exploration of a reduction relation with parent pointers,
//! so that any discovered term comes with a replayable step trace.

use indexmap::IndexMap;

use crate::budget::Budget;
use crate::steps::StepSet;
use crate::term::{CanonKey, Term};

pub(crate) enum Level {
    /// A newly discovered node satisfied the hit predicate.
    Hit(usize),
    /// The level was fully expanded without a hit.
    Expanded,
    /// Fuel ran out before the level was finished.
    OutOfFuel,
}

pub(crate) struct Explorer {
    nodes: IndexMap<CanonKey, (Term, Option<usize>)>,
    frontier: Vec<usize>,
}

impl Explorer {
    pub fn new(root: Term) -> Explorer {
        let mut nodes = IndexMap::new();
        nodes.insert(root.canon_key(), (root, None));
        Explorer {
            nodes,
            frontier: vec![0],
        }
    }

    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    pub fn index_of(&self, key: &CanonKey) -> Option<usize> {
        self.nodes.get_index_of(key)
    }

    pub fn key(&self, idx: usize) -> &CanonKey {
        self.nodes.get_index(idx).expect("node index").0
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.nodes.values().map(|(t, _)| t)
    }

    /// Terms from the root to `idx`, following the discovery edges.
    pub fn trace(&self, idx: usize) -> Vec<Term> {
        let mut out = Vec::new();
        let mut cur = Some(idx);
        while let Some(i) = cur {
            let (_, (t, parent)) = self.nodes.get_index(i).expect("node index");
            out.push(t.clone());
            cur = *parent;
        }
        out.reverse();
        out
    }

    /// Expands every frontier node once, in (size, key) order. One unit of
    /// fuel per node expanded.
    pub fn expand_level(
        &mut self,
        budget: &mut Budget,
        what: &'static str,
        mut step: impl FnMut(&Term) -> StepSet,
        mut hit: impl FnMut(&CanonKey) -> bool,
    ) -> Level {
        let mut order = std::mem::take(&mut self.frontier);
        order.sort_by(|&a, &b| {
            let (ka, (ta, _)) = self.nodes.get_index(a).unwrap();
            let (kb, (tb, _)) = self.nodes.get_index(b).unwrap();
            ta.size().cmp(&tb.size()).then_with(|| ka.cmp(kb))
        });
        let mut next = Vec::new();
        for (pos, &idx) in order.iter().enumerate() {
            if !budget.spend(what) {
                self.frontier = order[pos..].to_vec();
                self.frontier.extend(next);
                return Level::OutOfFuel;
            }
            let term = self.nodes.get_index(idx).unwrap().1 .0.clone();
            for (key, succ) in step(&term).keyed() {
                if self.nodes.contains_key(key) {
                    continue;
                }
                let (new_idx, _) = self.nodes.insert_full(key.clone(), (succ.clone(), Some(idx)));
                next.push(new_idx);
                if hit(key) {
                    self.frontier = order[pos + 1..].to_vec();
                    self.frontier.extend(next);
                    return Level::Hit(new_idx);
                }
            }
        }
        self.frontier = next;
        Level::Expanded
    }

    /// Explores until the closure is complete or fuel runs out.
    pub fn run_to_completion(
        &mut self,
        budget: &mut Budget,
        what: &'static str,
        mut step: impl FnMut(&Term) -> StepSet,
    ) -> bool {
        while !self.is_complete() {
            if let Level::OutOfFuel = self.expand_level(budget, what, &mut step, |_| false) {
                return false;
            }
        }
        true
    }

    pub fn into_set(self) -> StepSet {
        let mut s = StepSet::new();
        for (k, (t, _)) in self.nodes {
            s.insert_keyed(k, t);
        }
        s
    }
}
