//! The operational semantics `↦`, normalization, and the simultaneous
//! equivalence reduction `≡→`.

use std::sync::Arc;

use serde::Serialize;

use crate::budget::Budget;
use crate::closure::Explorer;
use crate::steps::StepSet;
use crate::term::Term;

/// Terms larger than this are treated as diverging by the normalizer.
pub const NORMALIZE_SIZE_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Annot,
    Body,
    Fun,
    Arg,
}

/// A path from the root to a subterm.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct RedexPosition {
    pub path: Vec<Selector>,
}

impl RedexPosition {
    pub fn root() -> RedexPosition {
        RedexPosition::default()
    }

    pub fn subterm<'a>(&self, t: &'a Term) -> Option<&'a Term> {
        let mut cur = t;
        for sel in &self.path {
            cur = match (sel, cur) {
                (Selector::Annot, Term::Abs(_, a, _)) => a,
                (Selector::Body, Term::Abs(_, _, b)) => b,
                (Selector::Fun, Term::App(f, _)) => f,
                (Selector::Arg, Term::App(_, a)) => a,
                _ => return None,
            };
        }
        Some(cur)
    }
}

fn is_beta_redex(t: &Term) -> bool {
    matches!(t, Term::App(f, _) if matches!(**f, Term::Abs(..)))
}

/// Contracts `(λx≼t.u) v` to `u[x := v]`.
fn contract(t: &Term) -> Option<Term> {
    match t {
        Term::App(f, v) => match &**f {
            Term::Abs(x, _, u) => Some(u.subst(x, v)),
            _ => None,
        },
        _ => None,
    }
}

/// Every beta-redex position, leftmost-outermost first.
pub fn beta_redexes(t: &Term) -> Vec<RedexPosition> {
    fn go(t: &Term, path: &mut Vec<Selector>, out: &mut Vec<RedexPosition>) {
        if is_beta_redex(t) {
            out.push(RedexPosition { path: path.clone() });
        }
        match t {
            Term::Abs(_, a, b) => {
                path.push(Selector::Annot);
                go(a, path, out);
                path.pop();
                path.push(Selector::Body);
                go(b, path, out);
                path.pop();
            }
            Term::App(f, a) => {
                path.push(Selector::Fun);
                go(f, path, out);
                path.pop();
                path.push(Selector::Arg);
                go(a, path, out);
                path.pop();
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Fires the beta-redex at `pos`, if there is one.
pub fn contract_at(t: &Term, pos: &RedexPosition) -> Option<Term> {
    fn go(t: &Term, path: &[Selector]) -> Option<Term> {
        let Some((sel, rest)) = path.split_first() else {
            return contract(t);
        };
        match (sel, t) {
            (Selector::Annot, Term::Abs(x, a, b)) => {
                Some(Term::Abs(x.clone(), Arc::new(go(a, rest)?), b.clone()))
            }
            (Selector::Body, Term::Abs(x, a, b)) => {
                Some(Term::Abs(x.clone(), a.clone(), Arc::new(go(b, rest)?)))
            }
            (Selector::Fun, Term::App(f, a)) => Some(Term::App(Arc::new(go(f, rest)?), a.clone())),
            (Selector::Arg, Term::App(f, a)) => Some(Term::App(f.clone(), Arc::new(go(a, rest)?))),
            _ => None,
        }
    }
    go(t, &pos.path)
}

/// `{t′ | t ↦ t′}`.
pub fn beta_step_all(t: &Term) -> StepSet {
    let mut out = StepSet::new();
    beta_steps_into(t, &mut |s| {
        out.insert(s);
    });
    out
}

fn beta_steps_into(t: &Term, emit: &mut dyn FnMut(Term)) {
    if let Some(r) = contract(t) {
        emit(r);
    }
    match t {
        Term::Abs(x, a, b) => {
            beta_steps_into(a, &mut |a2| emit(Term::Abs(x.clone(), Arc::new(a2), b.clone())));
            beta_steps_into(b, &mut |b2| emit(Term::Abs(x.clone(), a.clone(), Arc::new(b2))));
        }
        Term::App(f, a) => {
            beta_steps_into(f, &mut |f2| emit(Term::App(Arc::new(f2), a.clone())));
            beta_steps_into(a, &mut |a2| emit(Term::App(f.clone(), Arc::new(a2))));
        }
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    LeftmostOutermost,
    RightmostInnermost,
}

#[derive(Clone, Debug)]
pub enum NormalizeOutcome {
    Normal { term: Term, steps: u64 },
    Diverged { last: Term },
}

impl NormalizeOutcome {
    pub fn normal(self) -> Option<Term> {
        match self {
            NormalizeOutcome::Normal { term, .. } => Some(term),
            NormalizeOutcome::Diverged { .. } => None,
        }
    }
}

/// One rewrite of the normalizer: beta, or `⊤ u` to `⊤`.
fn collapse(t: &Term) -> Option<Term> {
    match t {
        Term::App(f, _) if f.is_top() => Some(Term::Top),
        _ => contract(t),
    }
}

fn step_lo(t: &Term) -> Option<Term> {
    if let Some(r) = collapse(t) {
        return Some(r);
    }
    match t {
        Term::Abs(x, a, b) => {
            if let Some(a2) = step_lo(a) {
                return Some(Term::Abs(x.clone(), Arc::new(a2), b.clone()));
            }
            step_lo(b).map(|b2| Term::Abs(x.clone(), a.clone(), Arc::new(b2)))
        }
        Term::App(f, a) => {
            if let Some(f2) = step_lo(f) {
                return Some(Term::App(Arc::new(f2), a.clone()));
            }
            step_lo(a).map(|a2| Term::App(f.clone(), Arc::new(a2)))
        }
        _ => None,
    }
}

fn step_ri(t: &Term) -> Option<Term> {
    match t {
        Term::Abs(x, a, b) => {
            if let Some(b2) = step_ri(b) {
                return Some(Term::Abs(x.clone(), a.clone(), Arc::new(b2)));
            }
            step_ri(a).map(|a2| Term::Abs(x.clone(), Arc::new(a2), b.clone()))
        }
        Term::App(f, a) => {
            if let Some(a2) = step_ri(a) {
                return Some(Term::App(f.clone(), Arc::new(a2)));
            }
            if let Some(f2) = step_ri(f) {
                return Some(Term::App(Arc::new(f2), a.clone()));
            }
            collapse(t)
        }
        _ => None,
    }
}

/// Normalizes leftmost-outermost, collapsing `⊤ u` to `⊤`. One unit of fuel
/// per rewrite.
pub fn normalize(t: &Term, budget: &mut Budget) -> NormalizeOutcome {
    normalize_with(t, Strategy::LeftmostOutermost, budget)
}

pub fn normalize_with(t: &Term, strategy: Strategy, budget: &mut Budget) -> NormalizeOutcome {
    let step = match strategy {
        Strategy::LeftmostOutermost => step_lo,
        Strategy::RightmostInnermost => step_ri,
    };
    let mut cur = t.clone();
    let mut steps = 0;
    loop {
        let Some(next) = step(&cur) else {
            return NormalizeOutcome::Normal { term: cur, steps };
        };
        if !budget.spend("normalization") {
            return NormalizeOutcome::Diverged { last: cur };
        }
        steps += 1;
        if next.size() > NORMALIZE_SIZE_CAP {
            budget.note("normalization exceeded the term size cap");
            return NormalizeOutcome::Diverged { last: next };
        }
        cur = next;
    }
}

/// `{t′ | t ≡→ t′}`: every combination of Cr rules. Contains `t`.
pub fn equiv_step_all(t: &Term) -> StepSet {
    equiv_list(t).into_iter().collect()
}

fn dedup(v: Vec<Term>) -> Vec<Term> {
    let s: StepSet = v.into_iter().collect();
    s.iter().cloned().collect()
}

fn equiv_list(t: &Term) -> Vec<Term> {
    match t {
        Term::Var(_) | Term::Top => vec![t.clone()],
        Term::Abs(x, a, b) => {
            let as_ = equiv_list(a);
            let bs = equiv_list(b);
            let mut out = Vec::with_capacity(as_.len() * bs.len());
            for a2 in &as_ {
                for b2 in &bs {
                    out.push(Term::abs(x.clone(), a2.clone(), b2.clone()));
                }
            }
            out
        }
        Term::App(f, v) => {
            let fs = equiv_list(f);
            let vs = equiv_list(v);
            let mut out = Vec::with_capacity(fs.len() * vs.len() + 1);
            for f2 in &fs {
                for v2 in &vs {
                    out.push(Term::app(f2.clone(), v2.clone()));
                }
            }
            match &**f {
                Term::Top => out.push(Term::Top),
                Term::Abs(x, _, b) => {
                    for b2 in &equiv_list(b) {
                        for v2 in &vs {
                            out.push(b2.subst(x, v2));
                        }
                    }
                }
                _ => {}
            }
            dedup(out)
        }
    }
}

/// A closure of `≡→` computed under a budget.
#[derive(Clone, Debug)]
pub struct Reachable {
    pub terms: StepSet,
    /// Whether the frontier was exhausted, i.e. `terms` is the whole closure.
    pub complete: bool,
}

/// Breadth-first `≡→*` closure of `t`, one unit of fuel per term expanded.
pub fn equiv_reachable(t: &Term, budget: &mut Budget) -> Reachable {
    let mut ex = Explorer::new(t.clone());
    let complete = ex.run_to_completion(budget, "equivalence closure", equiv_step_all);
    Reachable {
        terms: ex.into_set(),
        complete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nf::is_nf;

    fn id(x: &str) -> Term {
        Term::abs(x, Term::Top, Term::var(x))
    }

    fn omega() -> Term {
        let w = Term::abs("x", Term::Top, Term::app(Term::var("x"), Term::var("x")));
        Term::app(w.clone(), w)
    }

    #[test]
    fn beta_single_redex() {
        let t = Term::app(id("x"), Term::Top);
        let s = beta_step_all(&t);
        assert_eq!(s.len(), 1);
        assert!(s.contains(&Term::Top));
        assert!(beta_step_all(&Term::Top).is_empty());
    }

    #[test]
    fn beta_two_positions() {
        let inner = Term::app(id("y"), Term::Top);
        let t = Term::app(id("x"), inner.clone());
        // Both reducts are `(λ_≼⊤._)⊤`: two positions, one alpha class.
        let s = beta_step_all(&t);
        assert_eq!(s.len(), 1);
        assert!(s.contains(&inner));
        assert!(s.contains(&Term::app(id("x"), Term::Top)));
        let pos = beta_redexes(&t);
        assert_eq!(pos[0], RedexPosition::root());
        assert_eq!(pos[1].path, vec![Selector::Arg]);
        assert_eq!(contract_at(&t, &pos[1]).unwrap(), Term::app(id("x"), Term::Top));

        let k = Term::abs("y", Term::Top, Term::Top);
        let t = Term::app(id("x"), Term::app(k.clone(), Term::Top));
        let s = beta_step_all(&t);
        assert_eq!(s.len(), 2);
        assert!(s.contains(&Term::app(k, Term::Top)));
        assert!(s.contains(&Term::app(id("x"), Term::Top)));
    }

    #[test]
    fn beta_inside_annotation() {
        let t = Term::abs("z", Term::app(id("x"), Term::Top), Term::var("z"));
        assert!(beta_step_all(&t).contains(&Term::abs("z", Term::Top, Term::var("z"))));
    }

    #[test]
    fn normalize_examples() {
        let mut b = Budget::new(100);
        match normalize(&Term::app(id("x"), id("x")), &mut b) {
            NormalizeOutcome::Normal { term, steps } => {
                assert_eq!(term, id("y"));
                assert_eq!(steps, 1);
            }
            other => panic!("{other:?}"),
        }
        let mut b = Budget::new(100);
        assert!(matches!(
            normalize(&Term::Top, &mut b),
            NormalizeOutcome::Normal { steps: 0, .. }
        ));
        let mut b = Budget::new(100);
        assert!(matches!(normalize(&omega(), &mut b), NormalizeOutcome::Diverged { .. }));
        assert_eq!(b.exhausted_in(), Some("normalization"));
    }

    #[test]
    fn normalize_collapses_top_application() {
        let t = Term::app(Term::Top, Term::var("y"));
        let mut b = Budget::new(10);
        let n = normalize(&t, &mut b).normal().unwrap();
        assert_eq!(n, Term::Top);
        assert!(is_nf(&n));
    }

    #[test]
    fn leftmost_outermost_erases_divergence() {
        let k = Term::abs("a", Term::Top, Term::Top);
        let t = Term::app(k, omega());
        let mut b = Budget::new(50);
        assert_eq!(normalize(&t, &mut b).normal(), Some(Term::Top));
        let mut b = Budget::new(50);
        assert!(normalize_with(&t, Strategy::RightmostInnermost, &mut b)
            .normal()
            .is_none());
    }

    #[test]
    fn equiv_examples() {
        let x = Term::var("x");
        let s = equiv_step_all(&x);
        assert_eq!(s.len(), 1);

        let t = Term::app(Term::Top, Term::var("y"));
        let s = equiv_step_all(&t);
        assert_eq!(s.len(), 2);
        assert!(s.contains(&t) && s.contains(&Term::Top));

        let t = Term::app(id("x"), Term::var("y"));
        let s = equiv_step_all(&t);
        assert_eq!(s.len(), 2);
        assert!(s.contains(&t) && s.contains(&Term::var("y")));
    }

    #[test]
    fn equiv_is_simultaneous() {
        // (λx.x) ((λy.y) ⊤) reaches ⊤ in one parallel step.
        let t = Term::app(id("x"), Term::app(id("y"), Term::Top));
        assert!(equiv_step_all(&t).contains(&Term::Top));
    }

    #[test]
    fn reachable_closures() {
        let mut b = Budget::new(100);
        let r = equiv_reachable(&Term::Top, &mut b);
        assert!(r.complete);
        assert_eq!(r.terms.len(), 1);

        let mut b = Budget::new(100);
        let t = Term::app(id("x"), Term::Top);
        let r = equiv_reachable(&t, &mut b);
        assert!(r.complete);
        assert!(r.terms.contains(&t) && r.terms.contains(&Term::Top));

        let mut b = Budget::new(100);
        let r = equiv_reachable(&omega(), &mut b);
        assert!(r.complete, "Ω only reaches itself under ≡→");
        let mut b = Budget::new(100);
        let big = Term::app(
            Term::abs("x", Term::Top, Term::app(Term::app(Term::var("x"), Term::var("x")), Term::var("x"))),
            Term::abs("x", Term::Top, Term::app(Term::app(Term::var("x"), Term::var("x")), Term::var("x"))),
        );
        assert!(!equiv_reachable(&big, &mut b).complete);
    }
}
