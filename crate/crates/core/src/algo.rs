//! The practical algorithms: minimal promotion, the minimal superpath, the
//! subtyping check `≤A`, the well-formedness check `wfA`, and the incremental
//! rule for applications of an already-checked function.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::Serialize;

use crate::budget::{Budget, Verdict};
use crate::context::ExtContext;
use crate::error::{PssError, Result};
use crate::nf::is_nf;
use crate::reduce::{normalize, normalize_with, NormalizeOutcome, Strategy};
use crate::subtype::{check_rel, check_rel_transitive, RelKind, RelOutcome, StarOutcome};
use crate::term::{Name, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MpOutcome {
    Promoted { term: Term },
    IsTop,
    Stuck { reason: String },
    Diverged { partial: Term },
}

fn require_prevalid(ctx: &ExtContext) -> Result<()> {
    if ctx.is_prevalid() {
        Ok(())
    } else {
        Err(PssError::InvalidContext(ctx.clone()))
    }
}

/// `Γ; s ⊢ u mp v`. One unit of fuel per call, plus the normalizer's.
pub fn minimal_promotion(ctx: &ExtContext, u: &Term, budget: &mut Budget) -> Result<MpOutcome> {
    require_prevalid(ctx)?;
    Ok(mp(ctx, u, budget))
}

/// Context in which an applied abstraction's body is promoted.
fn funop_context(rest: &ExtContext, y: Name, alpha: Term) -> ExtContext {
    if cfg!(feature = "mp-funop-keeps-stack") {
        rest.push_annot(y, alpha)
    } else {
        rest.without_stack().push_annot(y, alpha)
    }
}

fn mp(ctx: &ExtContext, u: &Term, budget: &mut Budget) -> MpOutcome {
    if u.is_top() {
        return MpOutcome::IsTop;
    }
    if !budget.spend("minimal promotion") {
        return MpOutcome::Diverged { partial: u.clone() };
    }
    if !is_nf(u) {
        return match normalize(u, budget) {
            NormalizeOutcome::Normal { term, .. } => MpOutcome::Promoted { term },
            NormalizeOutcome::Diverged { last } => MpOutcome::Diverged { partial: last },
        };
    }
    match u {
        Term::Abs(x, annot, body) => {
            if body.is_top() {
                return MpOutcome::Promoted { term: Term::Top };
            }
            let inner = match ctx.pop_arg() {
                Some((alpha, rest)) => {
                    let (y, b) = ctx.open_binder(x, body);
                    (funop_context(&rest, y.clone(), alpha), y, b)
                }
                None => {
                    if !ctx.scopes(annot) {
                        return MpOutcome::Stuck {
                            reason: "annotation mentions an unannotated variable".into(),
                        };
                    }
                    let (y, b) = ctx.open_binder(x, body);
                    (ctx.push_annot(y.clone(), (**annot).clone()), y, b)
                }
            };
            let (inner_ctx, y, b) = inner;
            match mp(&inner_ctx, &b, budget) {
                MpOutcome::Promoted { term } => MpOutcome::Promoted {
                    term: Term::abs(y, (**annot).clone(), term),
                },
                MpOutcome::Diverged { partial } => MpOutcome::Diverged {
                    partial: Term::abs(y, (**annot).clone(), partial),
                },
                other => other,
            }
        }
        _ => {
            let (head, args) = u.spine();
            match head {
                Term::Var(x) => match ctx.lookup(x) {
                    Some(bound) => MpOutcome::Promoted {
                        term: Term::apps(bound.clone(), args.into_iter().cloned()),
                    },
                    None => MpOutcome::Stuck {
                        reason: format!("head variable {x} is unbound"),
                    },
                },
                _ => MpOutcome::Stuck {
                    reason: "no promotion rule applies".into(),
                },
            }
        }
    }
}

/// Every `v` with `Γ; s ⊢ u mp v` derivable by some rule, ignoring rule
/// priority. A non-normal `u` contributes the normal forms found by two
/// different normalization strategies.
pub fn mp_candidates(ctx: &ExtContext, u: &Term, budget: &mut Budget) -> Result<Vec<Term>> {
    require_prevalid(ctx)?;
    let mut out: Vec<Term> = Vec::new();
    candidates_into(ctx, u, budget, &mut out);
    let mut seen = std::collections::HashSet::new();
    out.retain(|t| seen.insert(t.canon_key()));
    Ok(out)
}

fn candidates_into(ctx: &ExtContext, u: &Term, budget: &mut Budget, out: &mut Vec<Term>) {
    if !is_nf(u) {
        for s in [Strategy::LeftmostOutermost, Strategy::RightmostInnermost] {
            if let NormalizeOutcome::Normal { term, .. } = normalize_with(u, s, budget) {
                out.push(term);
            }
        }
        return;
    }
    if let Term::Abs(x, annot, body) = u {
        if body.is_top() {
            out.push(Term::Top);
        }
        let inner = match ctx.pop_arg() {
            Some((alpha, rest)) => {
                let (y, b) = ctx.open_binder(x, body);
                Some((funop_context(&rest, y.clone(), alpha), y, b))
            }
            None if ctx.scopes(annot) => {
                let (y, b) = ctx.open_binder(x, body);
                Some((ctx.push_annot(y.clone(), (**annot).clone()), y, b))
            }
            None => None,
        };
        if let Some((c, y, b)) = inner {
            let mut sub = Vec::new();
            if !b.is_top() {
                candidates_into(&c, &b, budget, &mut sub);
            }
            out.extend(sub.into_iter().map(|t| Term::abs(y.clone(), (**annot).clone(), t)));
        }
        return;
    }
    let (head, args) = u.spine();
    if let Term::Var(x) = head {
        if let Some(bound) = ctx.lookup(x) {
            out.push(Term::apps(bound.clone(), args.into_iter().cloned()));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    ReachedTop,
    /// The search was stopped by the caller's predicate at the last element.
    Stopped,
    Stuck { reason: String },
    /// Fuel ran out, or (`cycle`) a term repeated.
    Diverged { cycle: bool, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Superpath {
    pub elems: Vec<Term>,
    pub terminal: Terminal,
}

/// The iteration of [`minimal_promotion`] starting from `u`.
pub fn superpath(ctx: &ExtContext, u: &Term, budget: &mut Budget) -> Result<Superpath> {
    require_prevalid(ctx)?;
    Ok(walk(ctx, u, budget, |_| false))
}

/// Walks the superpath until `stop` accepts an element.
fn walk(ctx: &ExtContext, u: &Term, budget: &mut Budget, mut stop: impl FnMut(&Term) -> bool) -> Superpath {
    let mut elems = vec![u.clone()];
    let mut seen = std::collections::HashSet::new();
    seen.insert(u.canon_key());
    loop {
        let cur = elems.last().unwrap();
        if stop(cur) {
            return Superpath {
                elems,
                terminal: Terminal::Stopped,
            };
        }
        match mp(ctx, cur, budget) {
            MpOutcome::IsTop => {
                return Superpath {
                    elems,
                    terminal: Terminal::ReachedTop,
                }
            }
            MpOutcome::Stuck { reason } => return Superpath {
                elems,
                terminal: Terminal::Stuck { reason },
            },
            MpOutcome::Diverged { .. } => {
                return Superpath {
                    elems,
                    terminal: Terminal::Diverged {
                        cycle: false,
                        reason: budget.unknown_reason(),
                    },
                }
            }
            MpOutcome::Promoted { term } => {
                let fresh = seen.insert(term.canon_key());
                elems.push(term);
                if !fresh {
                    return Superpath {
                        elems,
                        terminal: Terminal::Diverged {
                            cycle: true,
                            reason: "the minimal superpath revisits a term".into(),
                        },
                    };
                }
            }
        }
    }
}

/// Records the contexts in which one variable's bound is consulted.
#[derive(Clone, Debug, Default)]
pub struct Recorder {
    target: Option<Name>,
    pub contexts: Vec<ExtContext>,
}

impl Recorder {
    pub fn watching(x: Name) -> Recorder {
        Recorder {
            target: Some(x),
            contexts: Vec::new(),
        }
    }

    fn hit(&mut self, x: &Name, ctx: &ExtContext) {
        if self.target.as_ref() == Some(x) && !self.contexts.contains(ctx) {
            self.contexts.push(ctx.clone());
        }
    }
}

/// `Γ; s ⊢ u ≤A t`.
pub fn algo_subtype(ctx: &ExtContext, u: &Term, t: &Term, budget: &mut Budget) -> Result<Verdict> {
    require_prevalid(ctx)?;
    Ok(sub_algo(ctx, u, t, budget))
}

fn sub_algo(ctx: &ExtContext, u: &Term, t: &Term, budget: &mut Budget) -> Verdict {
    let tn = match normalize(t, budget) {
        NormalizeOutcome::Normal { term, .. } => term,
        NormalizeOutcome::Diverged { .. } => return Verdict::Unknown,
    };
    let key = tn.canon_key();
    let path = walk(ctx, u, budget, |e| e.canon_key() == key);
    match path.terminal {
        Terminal::Stopped => Verdict::Yes,
        Terminal::ReachedTop | Terminal::Stuck { .. } => Verdict::No,
        Terminal::Diverged { reason, .. } => {
            budget.note(reason);
            Verdict::Unknown
        }
    }
}

/// `Γ; s ⊢ u wfA`. One unit of fuel per node visited, plus the fuel of the
/// promotions and normalizations it runs.
pub fn algo_wf(ctx: &ExtContext, u: &Term, budget: &mut Budget) -> Result<Verdict> {
    require_prevalid(ctx)?;
    Ok(wf(ctx, u, budget, &mut Recorder::default()))
}

/// [`algo_wf`] that also reports the contexts in which `rec`'s variable was
/// looked up.
pub fn algo_wf_recording(
    ctx: &ExtContext,
    u: &Term,
    budget: &mut Budget,
    rec: &mut Recorder,
) -> Result<Verdict> {
    require_prevalid(ctx)?;
    Ok(wf(ctx, u, budget, rec))
}

fn wf(ctx: &ExtContext, u: &Term, budget: &mut Budget, rec: &mut Recorder) -> Verdict {
    if !budget.spend("well-formedness check") {
        return Verdict::Unknown;
    }
    match u {
        Term::Top => Verdict::Yes,
        Term::Var(x) => match ctx.lookup(x) {
            Some(bound) => {
                rec.hit(x, ctx);
                let bound = bound.clone();
                wf(ctx, &bound, budget, rec)
            }
            None => Verdict::No,
        },
        Term::Abs(x, annot, body) => {
            let inner = match ctx.pop_arg() {
                Some((alpha, rest)) => {
                    let (y, b) = ctx.open_binder(x, body);
                    (rest.push_annot(y, alpha), b)
                }
                None => {
                    if !ctx.scopes(annot) {
                        return Verdict::No;
                    }
                    let (y, b) = ctx.open_binder(x, body);
                    (ctx.push_annot(y, (**annot).clone()), b)
                }
            };
            let first = wf(&inner.0, &inner.1, budget, rec);
            if first == Verdict::No {
                return Verdict::No;
            }
            first.and(wf(&ctx.without_stack(), annot, budget, rec))
        }
        Term::App(f, v) => {
            if !ctx.scopes(v) {
                return Verdict::No;
            }
            let pushed = ctx.push_arg((**v).clone());
            let path = walk(&pushed, f, budget, |e| {
                matches!(e, Term::Abs(_, _, b) if b.is_top())
            });
            let bounding = match path.terminal {
                Terminal::Stopped => path.elems.last().unwrap().clone(),
                Terminal::ReachedTop | Terminal::Stuck { .. } => return Verdict::No,
                Terminal::Diverged { reason, .. } => {
                    budget.note(reason);
                    return Verdict::Unknown;
                }
            };
            let Term::Abs(_, tn, _) = &bounding else { unreachable!() };
            let nil = ctx.without_stack();
            let mut acc = Verdict::Yes;
            let checks: [&dyn Fn(&mut Budget, &mut Recorder) -> Verdict; 5] = [
                &|b, _| sub_algo(&nil, v, tn, b),
                &|b, r| wf(&pushed, f, b, r),
                &|b, r| wf(&nil, v, b, r),
                &|b, r| wf(&nil, tn, b, r),
                &|b, r| wf(&pushed, &bounding, b, r),
            ];
            for check in checks {
                acc = acc.and(check(budget, rec));
                if acc == Verdict::No {
                    return Verdict::No;
                }
            }
            acc
        }
    }
}

/// What a completed `wfA` run of a term remembers.
#[derive(Clone, Debug)]
pub struct WfRecord {
    pub verdict: Verdict,
    /// The checked term as stored, parameter renamed apart.
    pub term: Term,
    /// Contexts in which the parameter's bound was consulted.
    pub occurrences: Vec<ExtContext>,
    pub superpath: Vec<Term>,
}

/// Results of definite `wfA` runs keyed by alpha-canonical term and context.
#[derive(Default)]
pub struct WfCache {
    entries: RwLock<HashMap<(String, String), WfRecord>>,
}

impl WfCache {
    pub fn new() -> WfCache {
        WfCache::default()
    }

    fn key(ctx: &ExtContext, u: &Term) -> (String, String) {
        (u.canon_key().as_str().to_string(), ctx.canon_key())
    }

    pub fn get(&self, ctx: &ExtContext, u: &Term) -> Option<WfRecord> {
        self.entries.read().unwrap().get(&Self::key(ctx, u)).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs `wfA` on `u` under `ctx`, recording occurrences of the parameter
    /// when `u` is an abstraction, and caches the result if it is definite.
    pub fn check(&self, ctx: &ExtContext, u: &Term, budget: &mut Budget) -> Result<Verdict> {
        require_prevalid(ctx)?;
        if let Some(r) = self.get(ctx, u) {
            return Ok(r.verdict);
        }
        let stored = match u {
            Term::Abs(x, annot, body) => {
                let z = x.fresh(|n| ctx.in_dom(n) || body.occurs_free(n) || annot.occurs_free(n));
                Term::abs(z.clone(), (**annot).clone(), body.rename_free(x, &z)).with_distinct_binders()
            }
            _ => u.with_distinct_binders(),
        };
        let mut rec = match &stored {
            Term::Abs(z, _, _) => Recorder::watching(z.clone()),
            _ => Recorder::default(),
        };
        let verdict = wf(ctx, &stored, budget, &mut rec);
        if verdict.is_definite() {
            let mut b = Budget::new(budget.remaining());
            let sp = walk(ctx, &stored, &mut b, |_| false).elems;
            let record = WfRecord {
                verdict,
                term: stored,
                occurrences: rec.contexts,
                superpath: sp,
            };
            self.entries
                .write()
                .unwrap()
                .entry(Self::key(ctx, u))
                .or_insert(record);
        }
        Ok(verdict)
    }
}

/// `Γ; s ⊢ u v wfA` for a cached, well-formed normal abstraction `u`,
/// without re-checking `u`'s body: `v` and the parameter's annotation must
/// be well-formed, `v ≤A` the annotation, and both must also hold in every
/// context where the cached run consulted the parameter.
pub fn check_app_incremental(
    ctx: &ExtContext,
    u: &Term,
    v: &Term,
    budget: &mut Budget,
    cache: &WfCache,
) -> Result<Verdict> {
    require_prevalid(ctx)?;
    if !matches!(u, Term::Abs(..)) || !is_nf(u) {
        return Err(PssError::NotApplicable(format!("{u} is not a normal abstraction")));
    }
    let record = cache.get(ctx, u).ok_or_else(|| PssError::CacheMiss(u.clone()))?;
    if record.verdict != Verdict::Yes {
        return Err(PssError::NotApplicable(format!("{u} is not well-formed")));
    }
    if !ctx.scopes(v) {
        return Ok(Verdict::No);
    }
    let Term::Abs(_, annot, _) = &record.term else { unreachable!() };
    let nil = ctx.without_stack();
    let mut acc = Verdict::Yes;
    let mut obligations: Vec<(ExtContext, bool)> = vec![(nil.clone(), true)];
    obligations.extend(record.occurrences.iter().map(|c| (c.clone(), false)));
    for (c, global) in obligations {
        acc = acc.and(wf(&c, v, budget, &mut Recorder::default()));
        if global && acc != Verdict::No {
            acc = acc.and(wf(&c, annot, budget, &mut Recorder::default()));
        }
        if acc != Verdict::No {
            acc = acc.and(sub_algo(&c, v, annot, budget));
        }
        if acc == Verdict::No {
            return Ok(Verdict::No);
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InversionOutcome {
    Holds,
    /// The abstractions are not (found to be) related.
    Vacuous,
    Violated,
    Unknown,
}

/// If `λx≼t.u ≤* λx≼t′.u′` then `t ≡ t′`.
pub fn inversion_check(
    ctx: &ExtContext,
    f1: &Term,
    f2: &Term,
    budget: &mut Budget,
) -> Result<InversionOutcome> {
    require_prevalid(ctx)?;
    let (Term::Abs(_, t1, _), Term::Abs(_, t2, _)) = (f1, f2) else {
        return Err(PssError::NotApplicable("inversion needs two abstractions".into()));
    };
    let mut half = budget.split(1, 2);
    let related = check_rel_transitive(ctx, f1, f2, RelKind::Sub, &[], &mut half)?;
    budget.absorb(half);
    match related {
        StarOutcome::Yes(_) => {}
        StarOutcome::No => return Ok(InversionOutcome::Vacuous),
        StarOutcome::Unknown { .. } => return Ok(InversionOutcome::Unknown),
    }
    Ok(match check_rel(ctx, t1, t2, RelKind::Equiv, budget)? {
        RelOutcome::Yes(_) => InversionOutcome::Holds,
        RelOutcome::No => InversionOutcome::Violated,
        RelOutcome::Unknown { .. } => InversionOutcome::Unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: &str) -> Term {
        Term::abs(x, Term::Top, Term::var(x))
    }

    fn w() -> Term {
        Term::abs("x", Term::Top, Term::app(Term::var("x"), Term::var("x")))
    }

    fn b() -> Budget {
        Budget::new(10_000)
    }

    #[test]
    fn mp_rules() {
        let e = ExtContext::empty();
        let k = Term::abs("x", Term::Top, Term::Top);
        assert_eq!(
            minimal_promotion(&e, &k, &mut b()).unwrap(),
            MpOutcome::Promoted { term: Term::Top }
        );
        assert_eq!(minimal_promotion(&e, &Term::Top, &mut b()).unwrap(), MpOutcome::IsTop);
        let ctx = ExtContext::empty()
            .push_annot("t", Term::Top)
            .push_annot("y", Term::Top)
            .push_annot("x", Term::var("t"));
        let u = Term::app(Term::var("x"), Term::var("y"));
        assert_eq!(
            minimal_promotion(&ctx, &u, &mut b()).unwrap(),
            MpOutcome::Promoted {
                term: Term::app(Term::var("t"), Term::var("y"))
            }
        );
        let u = Term::app(id("x"), id("y"));
        assert_eq!(
            minimal_promotion(&e, &u, &mut b()).unwrap(),
            MpOutcome::Promoted { term: id("y") }
        );
    }

    #[test]
    fn superpath_of_identity() {
        let sp = superpath(&ExtContext::empty(), &id("x"), &mut b()).unwrap();
        assert_eq!(
            sp.elems,
            vec![id("x"), Term::abs("x", Term::Top, Term::Top), Term::Top]
        );
        assert_eq!(sp.terminal, Terminal::ReachedTop);
        let sp = superpath(&ExtContext::empty(), &Term::Top, &mut b()).unwrap();
        assert_eq!(sp.elems, vec![Term::Top]);
    }

    #[test]
    fn superpath_of_omega_prime_diverges() {
        let op = Term::abs("y", w(), Term::app(Term::var("y"), w()));
        let sp = superpath(&ExtContext::empty(), &op, &mut Budget::new(1000)).unwrap();
        assert!(matches!(sp.terminal, Terminal::Diverged { .. }));
    }

    #[test]
    fn subtyping_algorithm() {
        let e = ExtContext::empty();
        assert_eq!(algo_subtype(&e, &id("x"), &id("y"), &mut b()).unwrap(), Verdict::Yes);
        assert_eq!(algo_subtype(&e, &id("x"), &Term::Top, &mut b()).unwrap(), Verdict::Yes);
        let z = ExtContext::empty().push_annot("z", Term::Top);
        let k = Term::abs("x", Term::Top, Term::Top);
        assert_eq!(algo_subtype(&z, &Term::Top, &k, &mut b()).unwrap(), Verdict::No);
        let omega = Term::app(w(), w());
        assert_eq!(algo_subtype(&e, &omega, &omega, &mut Budget::new(500)).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn wellformedness_algorithm() {
        let e = ExtContext::empty();
        assert_eq!(algo_wf(&e, &Term::Top, &mut b()).unwrap(), Verdict::Yes);
        assert_eq!(algo_wf(&e, &Term::app(id("x"), Term::Top), &mut b()).unwrap(), Verdict::Yes);
        assert_eq!(algo_wf(&e, &Term::var("x"), &mut b()).unwrap(), Verdict::No);
        assert_eq!(algo_wf(&e, &Term::app(Term::Top, Term::Top), &mut b()).unwrap(), Verdict::No);
        let omega = Term::app(w(), w());
        assert_eq!(algo_wf(&e, &omega, &mut Budget::new(1000)).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn incremental_identity() {
        let e = ExtContext::empty();
        let cache = WfCache::new();
        assert_eq!(cache.check(&e, &id("x"), &mut b()).unwrap(), Verdict::Yes);
        let rec = cache.get(&e, &id("x")).unwrap();
        assert_eq!(rec.occurrences.len(), 1);
        assert_eq!(
            check_app_incremental(&e, &id("x"), &Term::Top, &mut b(), &cache).unwrap(),
            Verdict::Yes
        );
        let k = Term::abs("x", Term::Top, Term::Top);
        cache.check(&e, &k, &mut b()).unwrap();
        assert!(cache.get(&e, &k).unwrap().occurrences.is_empty());
    }

    #[test]
    fn cache_miss_reported() {
        let e = ExtContext::empty();
        let u = Term::abs("x", Term::Top, Term::Top);
        assert!(matches!(
            check_app_incremental(&e, &u, &Term::Top, &mut b(), &WfCache::new()),
            Err(PssError::CacheMiss(_))
        ));
    }

    #[test]
    fn inversion_examples() {
        let e = ExtContext::empty();
        assert_eq!(inversion_check(&e, &id("x"), &id("x"), &mut b()).unwrap(), InversionOutcome::Holds);
        let k = Term::abs("x", Term::Top, Term::Top);
        assert_eq!(inversion_check(&e, &id("x"), &k, &mut b()).unwrap(), InversionOutcome::Holds);
        assert!(inversion_check(&e, &Term::Top, &k, &mut b()).is_err());
    }
}
