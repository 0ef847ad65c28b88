//! The subtyping reduction `≤→` with its continuation stack, the reduction of
//! extended contexts, and bounded decision of `⊲` and `⊲*` through common
//! reducts.

use serde::Serialize;

use crate::budget::{Budget, Verdict};
use crate::closure::{Explorer, Level};
use crate::context::ExtContext;
use crate::error::{PssError, Result};
use crate::reduce::{equiv_step_all, Reachable};
use crate::steps::StepSet;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelKind {
    Equiv,
    Sub,
}

impl RelKind {
    pub fn symbol(self) -> &'static str {
        match self {
            RelKind::Equiv => "==",
            RelKind::Sub => "<=",
        }
    }
}

/// A common reduct `witness` with `left[0] = u ⊲→ ... ⊲→ witness` and
/// `right[0] = t ≡→ ... ≡→ witness`.
#[derive(Clone, Debug, Serialize)]
pub struct RelWitness {
    pub witness: Term,
    pub left: Vec<Term>,
    pub right: Vec<Term>,
}

#[derive(Clone, Debug)]
pub enum RelOutcome {
    Yes(RelWitness),
    No,
    Unknown { reason: String },
}

impl RelOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            RelOutcome::Yes(_) => Verdict::Yes,
            RelOutcome::No => Verdict::No,
            RelOutcome::Unknown { .. } => Verdict::Unknown,
        }
    }

    pub fn witness(&self) -> Option<&RelWitness> {
        match self {
            RelOutcome::Yes(w) => Some(w),
            _ => None,
        }
    }
}

fn require_prevalid(ctx: &ExtContext) -> Result<()> {
    if ctx.is_prevalid() {
        Ok(())
    } else {
        Err(PssError::InvalidContext(ctx.clone()))
    }
}

/// `{t′ | Γ; s ⊢ t ≤→ t′}`.
pub fn sub_step_all(ctx: &ExtContext, t: &Term) -> Result<StepSet> {
    require_prevalid(ctx)?;
    Ok(sub_steps(ctx, t))
}

/// [`sub_step_all`] for a context already known to be prevalid.
pub(crate) fn sub_steps(ctx: &ExtContext, t: &Term) -> StepSet {
    let mut out = StepSet::new();
    sub_steps_into(ctx, t, &mut out);
    out
}

fn sub_steps_into(ctx: &ExtContext, t: &Term, out: &mut StepSet) {
    out.insert(Term::Top);
    out.extend(equiv_step_all(t));
    match t {
        Term::Top => {}
        Term::Var(x) => {
            if let Some(bound) = ctx.lookup(x) {
                out.insert(bound.clone());
            }
        }
        Term::App(u, v) => {
            if ctx.scopes(v) {
                let inner = ctx.push_arg((**v).clone());
                for u2 in sub_steps(&inner, u).iter() {
                    out.insert(Term::app(u2.clone(), (**v).clone()));
                }
            }
        }
        Term::Abs(x, annot, body) => {
            let (bound, rest) = match ctx.pop_arg() {
                Some((alpha, rest)) => (alpha, rest),
                None => {
                    if !ctx.scopes(annot) {
                        return;
                    }
                    ((**annot).clone(), ctx.clone())
                }
            };
            let (y, body) = ctx.open_binder(x, body);
            let inner = rest.push_annot(y.clone(), bound);
            for b2 in sub_steps(&inner, &body).iter() {
                out.insert(Term::abs(y.clone(), (**annot).clone(), b2.clone()));
            }
        }
    }
}

/// All one-step reducts of a context, itself included: every annotation
/// bound and every stack entry independently takes one `≡→` step.
pub fn ctx_step_all(ctx: &ExtContext) -> Vec<ExtContext> {
    let mut acc: Vec<ExtContext> = vec![ExtContext::empty()];
    for (x, bound) in ctx.annots() {
        let choices = equiv_step_all(bound);
        acc = acc
            .iter()
            .flat_map(|c| choices.iter().map(move |b| c.push_annot(x.clone(), b.clone())))
            .collect();
    }
    for entry in ctx.stack() {
        let choices = equiv_step_all(entry);
        acc = acc
            .into_iter()
            .flat_map(|c| {
                choices.iter().map(move |e| {
                    let mut c = c.clone();
                    c.stack_mut().push(e.clone());
                    c
                })
            })
            .collect();
    }
    let mut seen = std::collections::HashSet::new();
    acc.retain(|c| seen.insert(c.canon_key()));
    acc
}

fn left_step(ctx: &ExtContext, kind: RelKind) -> impl Fn(&Term) -> StepSet + '_ {
    move |t| match kind {
        RelKind::Sub => sub_steps(ctx, t),
        RelKind::Equiv => equiv_step_all(t),
    }
}

/// Decides `Γ; s ⊢ u ⊲ t` by searching for `v` with `u ⊲→* v` and
/// `t ≡→* v`. The two sides are explored one breadth-first level at a time,
/// alternately. `No` is only returned once both closures are exhausted.
pub fn check_rel(
    ctx: &ExtContext,
    u: &Term,
    t: &Term,
    kind: RelKind,
    budget: &mut Budget,
) -> Result<RelOutcome> {
    require_prevalid(ctx)?;
    let mut left = Explorer::new(u.clone());
    let mut right = Explorer::new(t.clone());
    if let Some(i) = left.index_of(right.key(0)) {
        return Ok(RelOutcome::Yes(witness_at(&left, i, &right, 0)));
    }
    let step = left_step(ctx, kind);
    let what = match kind {
        RelKind::Sub => "subtyping search",
        RelKind::Equiv => "equivalence search",
    };
    loop {
        if left.is_complete() && right.is_complete() {
            return Ok(RelOutcome::No);
        }
        if !left.is_complete() {
            match left.expand_level(budget, what, &step, |k| right.index_of(k).is_some()) {
                Level::Hit(i) => {
                    let j = right.index_of(left.key(i)).expect("hit is shared");
                    return Ok(RelOutcome::Yes(witness_at(&left, i, &right, j)));
                }
                Level::OutOfFuel => return Ok(unknown(budget)),
                Level::Expanded => {}
            }
        }
        if !right.is_complete() {
            match right.expand_level(budget, what, equiv_step_all, |k| left.index_of(k).is_some()) {
                Level::Hit(j) => {
                    let i = left.index_of(right.key(j)).expect("hit is shared");
                    return Ok(RelOutcome::Yes(witness_at(&left, i, &right, j)));
                }
                Level::OutOfFuel => return Ok(unknown(budget)),
                Level::Expanded => {}
            }
        }
    }
}

fn unknown(budget: &Budget) -> RelOutcome {
    RelOutcome::Unknown {
        reason: budget.unknown_reason(),
    }
}

fn witness_at(left: &Explorer, i: usize, right: &Explorer, j: usize) -> RelWitness {
    let l = left.trace(i);
    let r = right.trace(j);
    RelWitness {
        witness: l.last().expect("trace is nonempty").clone(),
        left: l,
        right: r,
    }
}

/// Whether `to` is reachable from `from` by `≤→` steps, within fuel.
pub fn sub_reaches(ctx: &ExtContext, from: &Term, to: &Term, budget: &mut Budget) -> Result<Verdict> {
    require_prevalid(ctx)?;
    let target = to.canon_key();
    let mut ex = Explorer::new(from.clone());
    if ex.index_of(&target).is_some() {
        return Ok(Verdict::Yes);
    }
    while !ex.is_complete() {
        match ex.expand_level(budget, "subtyping search", |t| sub_steps(ctx, t), |k| *k == target) {
            Level::Hit(_) => return Ok(Verdict::Yes),
            Level::OutOfFuel => return Ok(Verdict::Unknown),
            Level::Expanded => {}
        }
    }
    Ok(Verdict::No)
}

/// `Γ; s ⊢ t ≤→* _` computed under a budget.
pub fn sub_reachable(ctx: &ExtContext, t: &Term, budget: &mut Budget) -> Result<Reachable> {
    require_prevalid(ctx)?;
    let mut ex = Explorer::new(t.clone());
    let complete = ex.run_to_completion(budget, "subtyping closure", |x| sub_steps(ctx, x));
    Ok(Reachable {
        terms: ex.into_set(),
        complete,
    })
}

/// Precomputed `⊲→*` and `≡→*` closures for a pool of terms, from which
/// the one-shot relation `a ⊲ b` between any two pool members is read off.
pub struct RelationTable {
    kind: RelKind,
    terms: Vec<Term>,
    left: Vec<Reachable>,
    right: Vec<Reachable>,
}

impl RelationTable {
    /// The fuel is shared evenly among the closures.
    pub fn build(
        ctx: &ExtContext,
        pool: &[Term],
        kind: RelKind,
        budget: &mut Budget,
    ) -> Result<RelationTable> {
        require_prevalid(ctx)?;
        let mut terms: Vec<Term> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for t in pool {
            if seen.insert(t.canon_key()) {
                terms.push(t.clone());
            }
        }
        let mut left = Vec::with_capacity(terms.len());
        let mut right = Vec::with_capacity(terms.len());
        let shares = 2 * terms.len() as u64;
        for t in &terms {
            let mut b = budget.split(1, shares);
            let mut ex = Explorer::new(t.clone());
            let complete = ex.run_to_completion(&mut b, "subtyping closure", left_step(ctx, kind));
            budget.absorb(b);
            left.push(Reachable {
                terms: ex.into_set(),
                complete,
            });
            let mut b = budget.split(1, shares);
            let mut ex = Explorer::new(t.clone());
            let complete = ex.run_to_completion(&mut b, "equivalence closure", equiv_step_all);
            budget.absorb(b);
            right.push(Reachable {
                terms: ex.into_set(),
                complete,
            });
        }
        Ok(RelationTable {
            kind,
            terms,
            left,
            right,
        })
    }

    pub fn kind(&self) -> RelKind {
        self.kind
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn index_of(&self, t: &Term) -> Option<usize> {
        let k = t.canon_key();
        self.terms.iter().position(|x| x.canon_key() == k)
    }

    /// `terms[i] ⊲ terms[j]` as far as the stored closures tell.
    pub fn related(&self, i: usize, j: usize) -> Verdict {
        if self.left[i].terms.intersects(&self.right[j].terms) {
            Verdict::Yes
        } else if self.left[i].complete && self.right[j].complete {
            Verdict::No
        } else {
            Verdict::Unknown
        }
    }

    /// A shortest chain `terms[from] ⊲ ... ⊲ terms[to]` through the pool.
    pub fn chain(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.terms.len();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        visited[from] = true;
        queue.push_back(from);
        while let Some(i) = queue.pop_front() {
            if i == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for j in 0..n {
                if !visited[j] && self.related(i, j) == Verdict::Yes {
                    visited[j] = true;
                    parent[j] = Some(i);
                    queue.push_back(j);
                }
            }
        }
        None
    }
}

/// A derivation of `u ⊲* t` as a chain of one-shot steps.
#[derive(Clone, Debug, Serialize)]
pub struct Stair {
    /// `terms[0] = u`, last is `t`.
    pub terms: Vec<Term>,
    /// `legs[i]` relates `terms[i]` to `terms[i + 1]`.
    pub legs: Vec<RelWitness>,
}

#[derive(Clone, Debug)]
pub enum StarOutcome {
    Yes(Stair),
    /// Every pool edge was decided and no chain exists inside the pool.
    No,
    Unknown { reason: String },
}

impl StarOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            StarOutcome::Yes(_) => Verdict::Yes,
            StarOutcome::No => Verdict::No,
            StarOutcome::Unknown { .. } => Verdict::Unknown,
        }
    }
}

/// Decides `Γ; s ⊢ u ⊲* t` by chaining one-shot steps through
/// `intermediates`, the terms reachable from `u`, and `t`.
pub fn check_rel_transitive(
    ctx: &ExtContext,
    u: &Term,
    t: &Term,
    kind: RelKind,
    intermediates: &[Term],
    budget: &mut Budget,
) -> Result<StarOutcome> {
    require_prevalid(ctx)?;
    let mut pool = vec![u.clone(), t.clone()];
    pool.extend(intermediates.iter().cloned());
    let share = budget.split(1, 4);
    let discovered = {
        let mut b = share;
        let mut ex = Explorer::new(u.clone());
        ex.run_to_completion(&mut b, "subtyping closure", left_step(ctx, kind));
        let found: Vec<Term> = ex.terms().cloned().collect();
        budget.absorb(b);
        found
    };
    pool.extend(discovered);
    let table = RelationTable::build(ctx, &pool, kind, budget)?;
    let from = table.index_of(u).expect("u is pooled");
    let to = table.index_of(t).expect("t is pooled");
    if let Some(path) = table.chain(from, to) {
        let terms: Vec<Term> = path.iter().map(|&i| table.terms[i].clone()).collect();
        let mut legs = Vec::new();
        for pair in terms.windows(2) {
            // The pair's closures intersect, so this search succeeds
            // within the fuel they took.
            let mut b = Budget::new(u64::MAX / 2);
            match check_rel(ctx, &pair[0], &pair[1], kind, &mut b)? {
                RelOutcome::Yes(w) => legs.push(w),
                _ => unreachable!("closures already intersect"),
            }
        }
        return Ok(StarOutcome::Yes(Stair { terms, legs }));
    }
    let n = table.terms.len();
    let all_decided = (0..n).all(|i| (0..n).all(|j| table.related(i, j).is_definite()));
    if all_decided {
        Ok(StarOutcome::No)
    } else {
        Ok(StarOutcome::Unknown {
            reason: "fuel exhausted during transitive search".to_string(),
        })
    }
}

/// Closes `b ≡← a ⊲→ c` with `b ⊲→ d` and `c ≡→ d`, taking the least such `d`.
fn close_square(ctx: &ExtContext, kind: RelKind, a: &Term, b: &Term, c: &Term) -> Result<Term> {
    let down = equiv_step_all(c);
    let across = left_step(ctx, kind)(b);
    down.first_common(&across).ok_or_else(|| PssError::CommutationFailure {
        top: a.clone(),
        equiv_side: b.clone(),
        sub_side: c.clone(),
    })
}

/// Flattens a stair into a single common-reduct witness for `u ⊲ t` by tiling
/// each peak `v ≡←* w ⊲→* v′` with commutation squares.
pub fn eliminate_transitivity(ctx: &ExtContext, kind: RelKind, stair: &Stair) -> Result<RelWitness> {
    require_prevalid(ctx)?;
    let mut acc = match stair.legs.first() {
        Some(l) => l.clone(),
        None => {
            let u = stair
                .terms
                .first()
                .ok_or_else(|| PssError::NotApplicable("empty stair".to_string()))?;
            RelWitness {
                witness: u.clone(),
                left: vec![u.clone()],
                right: vec![u.clone()],
            }
        }
    };
    for leg in stair.legs.iter().skip(1) {
        // acc: u ⊲→* p and w ≡→* p; leg: w ⊲→* q and t ≡→* q.
        let (bottom, last_col) = tile(ctx, kind, &acc.right, &leg.left)?;
        let mut left = acc.left.clone();
        left.extend(bottom.into_iter().skip(1));
        let mut right = leg.right.clone();
        right.extend(last_col.into_iter().skip(1));
        acc = RelWitness {
            witness: left.last().unwrap().clone(),
            left: dedup_consecutive(left),
            right: dedup_consecutive(right),
        };
    }
    Ok(acc)
}

/// Fills the grid spanned by an `≡→` path `down` and a `⊲→` path `across`
/// sharing their first term. Returns the bottom row (a `⊲→` path) and the
/// last column (an `≡→` path); both end at the far corner.
fn tile(ctx: &ExtContext, kind: RelKind, down: &[Term], across: &[Term]) -> Result<(Vec<Term>, Vec<Term>)> {
    let mut row: Vec<Term> = across.to_vec();
    let mut col = vec![row.last().unwrap().clone()];
    for d in &down[1..] {
        let mut next = Vec::with_capacity(row.len());
        next.push(d.clone());
        for j in 1..row.len() {
            let corner = close_square(ctx, kind, &row[j - 1], &next[j - 1], &row[j])?;
            next.push(corner);
        }
        col.push(next.last().unwrap().clone());
        row = next;
    }
    Ok((row, col))
}

fn dedup_consecutive(v: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(v.len());
    for t in v {
        if out.last().map_or(true, |p| p != &t) {
            out.push(t);
        }
    }
    out
}

/// A failed instance of strong commutation.
#[derive(Clone, Debug, Serialize)]
pub struct OpenSquare {
    pub ctx: ExtContext,
    pub top: Term,
    pub equiv_side: Term,
    pub sub_side: Term,
    pub ctx_side: ExtContext,
}

/// Checks that every `t1 ≡← t0 ≤→ t2` (under `Γ; s`) closes as
/// `t2 ≡→ t3` and `Γ′; s′ ⊢ t1 ≤→ t3` for every `Γ; s ↣ Γ′; s′`. One unit of
/// fuel per square.
pub fn commutation_check(ctx: &ExtContext, t0: &Term, budget: &mut Budget) -> Result<Option<OpenSquare>> {
    require_prevalid(ctx)?;
    let equiv_sides = equiv_step_all(t0);
    let sub_sides = sub_steps(ctx, t0);
    let ctx_sides = ctx_step_all(ctx);
    let downs: Vec<(Term, StepSet)> = sub_sides
        .iter()
        .map(|t2| (t2.clone(), equiv_step_all(t2)))
        .collect();
    for c2 in &ctx_sides {
        for t1 in equiv_sides.iter() {
            let across = sub_steps(c2, t1);
            for (t2, down) in &downs {
                if !budget.spend("commutation check") {
                    return Err(PssError::BudgetExceeded("commutation check"));
                }
                if !down.intersects(&across) {
                    return Ok(Some(OpenSquare {
                        ctx: ctx.clone(),
                        top: t0.clone(),
                        equiv_side: t1.clone(),
                        sub_side: t2.clone(),
                        ctx_side: c2.clone(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: &str) -> Term {
        Term::abs(x, Term::Top, Term::var(x))
    }

    fn big() -> Budget {
        Budget::new(10_000)
    }

    #[test]
    fn var_promotes() {
        let ctx = ExtContext::empty().push_annot("x", Term::Top);
        let s = sub_step_all(&ctx, &Term::var("x")).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.contains(&Term::var("x")) && s.contains(&Term::Top));
    }

    #[test]
    fn invalid_context_rejected() {
        let ctx = ExtContext::empty().push_annot("x", Term::var("y"));
        assert!(matches!(
            sub_step_all(&ctx, &Term::Top),
            Err(PssError::InvalidContext(_))
        ));
    }

    #[test]
    fn operand_flows_into_parameter() {
        let ctx = ExtContext::empty()
            .push_annot("t", Term::Top)
            .push_annot("v", Term::Top);
        let t0 = Term::app(Term::abs("x", Term::var("t"), Term::var("x")), Term::var("v"));
        let s = sub_step_all(&ctx, &t0).unwrap();
        let expect = Term::app(Term::abs("x", Term::var("t"), Term::var("v")), Term::var("v"));
        assert!(s.contains(&expect));
        assert!(s.contains(&Term::Top));
        assert!(s.contains(&Term::var("v")));
    }

    #[test]
    fn binder_shadowing_context_is_renamed() {
        let ctx = ExtContext::empty().push_annot("x", Term::Top);
        let t = Term::abs("x", Term::var("x"), Term::var("x"));
        let s = sub_step_all(&ctx, &t).unwrap();
        // Promoting the bound occurrence gives λz≼x.x, not λx≼x.⊤ twice.
        assert!(s.contains(&Term::abs("z", Term::var("x"), Term::var("x"))));
        assert!(s.contains(&Term::abs("z", Term::var("x"), Term::Top)));
    }

    #[test]
    fn ctx_steps() {
        assert_eq!(ctx_step_all(&ExtContext::empty()).len(), 1);
        let c = ExtContext::empty().push_annot("x", Term::app(Term::Top, Term::var("y")));
        let cs = ctx_step_all(&c);
        assert!(cs.contains(&ExtContext::empty().push_annot("x", Term::Top)));
        assert!(cs.contains(&c));
        let c = ExtContext::empty().push_arg(Term::app(id("x"), Term::Top));
        assert!(ctx_step_all(&c).contains(&ExtContext::empty().push_arg(Term::Top)));
    }

    #[test]
    fn check_rel_basics() {
        let e = ExtContext::empty();
        let u = Term::app(id("x"), id("y"));
        let r = check_rel(&e, &u, &Term::Top, RelKind::Sub, &mut big()).unwrap();
        assert_eq!(r.witness().unwrap().witness, Term::Top);
        let r = check_rel(&e, &u, &u, RelKind::Sub, &mut big()).unwrap();
        assert_eq!(r.verdict(), Verdict::Yes);
        let z = ExtContext::empty().push_annot("z", Term::Top);
        let r = check_rel(&z, &Term::Top, &Term::abs("x", Term::Top, Term::Top), RelKind::Sub, &mut big())
            .unwrap();
        assert_eq!(r.verdict(), Verdict::No);
    }

    #[test]
    fn check_rel_traces_replay() {
        let e = ExtContext::empty();
        let u = id("x");
        let t = Term::abs("x", Term::Top, Term::Top);
        let RelOutcome::Yes(w) = check_rel(&e, &u, &t, RelKind::Sub, &mut big()).unwrap() else {
            panic!()
        };
        for p in w.left.windows(2) {
            assert!(sub_steps(&e, &p[0]).contains(&p[1]));
        }
        for p in w.right.windows(2) {
            assert!(equiv_step_all(&p[0]).contains(&p[1]));
        }
        assert_eq!(w.left.last().unwrap(), &w.witness);
        assert_eq!(w.right.last().unwrap(), &w.witness);
    }

    #[test]
    fn equivalence_is_not_subtyping() {
        let e = ExtContext::empty();
        let r = check_rel(&e, &id("x"), &Term::Top, RelKind::Equiv, &mut big()).unwrap();
        assert_eq!(r.verdict(), Verdict::No);
        let t = Term::app(id("x"), Term::Top);
        let r = check_rel(&e, &t, &Term::Top, RelKind::Equiv, &mut big()).unwrap();
        assert_eq!(r.verdict(), Verdict::Yes);
    }

    #[test]
    fn stair_flattens() {
        let e = ExtContext::empty();
        let a = id("y");
        let u = Term::app(Term::abs("x", Term::Top, Term::var("x")), a.clone());
        let w = Term::app(Term::abs("x", Term::Top, a.clone()), a.clone());
        let t = Term::app(Term::abs("x", Term::Top, Term::Top), a.clone());
        let out = check_rel_transitive(&e, &u, &t, RelKind::Sub, &[w.clone()], &mut big()).unwrap();
        let StarOutcome::Yes(stair) = out else { panic!("{out:?}") };
        let flat = eliminate_transitivity(&e, RelKind::Sub, &stair).unwrap();
        for p in flat.left.windows(2) {
            assert!(sub_steps(&e, &p[0]).contains(&p[1]));
        }
        for p in flat.right.windows(2) {
            assert!(equiv_step_all(&p[0]).contains(&p[1]));
        }
        assert_eq!(flat.left[0], u);
        assert_eq!(flat.right[0], t);
    }

    #[test]
    fn commutation_small() {
        let e = ExtContext::empty();
        assert!(commutation_check(&e, &Term::Top, &mut big()).unwrap().is_none());
        let c = ExtContext::empty().push_annot("x", Term::Top);
        assert!(commutation_check(&c, &Term::var("x"), &mut big()).unwrap().is_none());
        let c = ExtContext::empty()
            .push_annot("t", Term::Top)
            .push_annot("v", Term::Top);
        let t0 = Term::app(Term::abs("x", Term::var("t"), Term::var("x")), Term::var("v"));
        assert!(commutation_check(&c, &t0, &mut big()).unwrap().is_none());
    }
}
