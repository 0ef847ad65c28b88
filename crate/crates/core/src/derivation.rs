//! Explicit derivation trees for prevalidity, well-formedness and the
//! subtyping judgments, a node-local checker for them, and a bounded
//! backward search that produces them for small terms.

use std::fmt;

use serde::Serialize;

use crate::budget::{Budget, Decision, Verdict};
use crate::context::ExtContext;
use crate::error::{PssError, Result};
use crate::reduce::equiv_step_all;
use crate::subtype::{check_rel, sub_reachable, sub_steps, RelKind, RelOutcome, RelWitness, Stair};
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Judgment {
    Prevalid(ExtContext),
    Wf(ExtContext, Term),
    WellSub(ExtContext, Term, Term),
    WellSubStar(ExtContext, Term, Term),
    Rel(ExtContext, Term, Term, RelKind),
    RelStar(ExtContext, Term, Term, RelKind),
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Judgment::Prevalid(c) => write!(f, "{c} prevalid"),
            Judgment::Wf(c, t) => write!(f, "{c} |- {t} wf"),
            Judgment::WellSub(c, u, t) => write!(f, "{c} |- {u} <=wf {t}"),
            Judgment::WellSubStar(c, u, t) => write!(f, "{c} |- {u} <=wf* {t}"),
            Judgment::Rel(c, u, t, k) => write!(f, "{c} |- {u} {} {t}", k.symbol()),
            Judgment::RelStar(c, u, t, k) => write!(f, "{c} |- {u} {}* {t}", k.symbol()),
        }
    }
}

impl Serialize for Judgment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    #[serde(rename = "P-Ctx1")]
    PCtx1,
    #[serde(rename = "P-Ctx2")]
    PCtx2,
    #[serde(rename = "P-Ctx3")]
    PCtx3,
    #[serde(rename = "W-Var")]
    WVar,
    #[serde(rename = "W-Top")]
    WTop,
    #[serde(rename = "W-Fun")]
    WFun,
    #[serde(rename = "W-FunOp")]
    WFunOp,
    #[serde(rename = "W-App")]
    WApp,
    #[serde(rename = "Wf-Rule")]
    WfRule,
    #[serde(rename = "Wf-Sub")]
    WfSub,
    #[serde(rename = "Wf-Trans")]
    WfTrans,
    #[serde(rename = "As-Refl")]
    AsRefl,
    #[serde(rename = "As-Left")]
    AsLeft,
    #[serde(rename = "As-Right")]
    AsRight,
    #[serde(rename = "Ast-Sub")]
    AstSub,
    #[serde(rename = "Ast-Trans")]
    AstTrans,
}

/// One node of a derivation. `side` holds the term a rule needs beyond its
/// premises: the reduct for As-Left and As-Right, the middle term for
/// Wf-Trans and Ast-Trans.
#[derive(Clone, Debug, Serialize)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Judgment,
    pub premises: Vec<Derivation>,
    pub side: Option<Term>,
}

impl Derivation {
    fn node(rule: Rule, conclusion: Judgment, premises: Vec<Derivation>) -> Derivation {
        Derivation {
            rule,
            conclusion,
            premises,
            side: None,
        }
    }

    fn with_side(mut self, t: Term) -> Derivation {
        self.side = Some(t);
        self
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("derivations serialize")
    }
}

/// Where and why a derivation fails to check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyError {
    /// Premise indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {:?}: {}", self.path, self.reason)
    }
}

/// Checks every node of `d` against its rule.
pub fn verify_derivation(d: &Derivation) -> std::result::Result<(), VerifyError> {
    let mut path = Vec::new();
    verify_at(d, &mut path)
}

pub fn is_valid(d: &Derivation) -> bool {
    verify_derivation(d).is_ok()
}

fn verify_at(d: &Derivation, path: &mut Vec<usize>) -> std::result::Result<(), VerifyError> {
    if let Err(reason) = check_node(d) {
        return Err(VerifyError {
            path: path.clone(),
            reason,
        });
    }
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        verify_at(p, path)?;
        path.pop();
    }
    Ok(())
}

fn ensure(cond: bool, msg: &str) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn premises<const N: usize>(d: &Derivation) -> std::result::Result<[&Judgment; N], String> {
    if d.premises.len() != N {
        return Err(format!("expected {N} premises, found {}", d.premises.len()));
    }
    Ok(std::array::from_fn(|i| &d.premises[i].conclusion))
}

/// `inner` is `outer` extended by one annotation; returns it.
fn last_annot<'a>(outer: &ExtContext, inner: &'a ExtContext) -> Option<&'a (crate::term::Name, Term)> {
    let (last, init) = inner.annots().split_last()?;
    if init.len() == outer.annots().len()
        && init.iter().zip(outer.annots()).all(|((x, t), (y, u))| x == y && t == u)
    {
        Some(last)
    } else {
        None
    }
}

/// Checks that the premise body is the conclusion body with parameter `x`
/// renamed to `y`.
fn body_matches(x: &crate::term::Name, body: &Term, y: &crate::term::Name, premise_body: &Term) -> bool {
    if x != y && body.occurs_free(y) {
        return false;
    }
    body.rename_free(x, y) == *premise_body
}

fn rel_step(ctx: &ExtContext, kind: RelKind, from: &Term, to: &Term) -> bool {
    match kind {
        RelKind::Sub => ctx.is_prevalid() && sub_steps(ctx, from).contains(to),
        RelKind::Equiv => equiv_step_all(from).contains(to),
    }
}

fn check_node(d: &Derivation) -> std::result::Result<(), String> {
    use Judgment as J;
    match (d.rule, &d.conclusion) {
        (Rule::PCtx1, J::Prevalid(c)) => {
            premises::<0>(d)?;
            ensure(c.is_empty(), "P-Ctx1 concludes only the empty context")
        }
        (Rule::PCtx2, J::Prevalid(c)) => {
            let [p] = premises::<1>(d)?;
            ensure(c.stack().is_empty(), "P-Ctx2 needs an empty stack")?;
            let (last, init) = c.annots().split_last().ok_or("P-Ctx2 needs an annotation")?;
            let gamma = ExtContext::new(init.to_vec(), vec![]);
            ensure(*p == J::Prevalid(gamma.clone()), "P-Ctx2 premise mismatch")?;
            ensure(!gamma.in_dom(&last.0), "P-Ctx2: variable already annotated")?;
            ensure(gamma.scopes(&last.1), "P-Ctx2: bound not scoped")
        }
        (Rule::PCtx3, J::Prevalid(c)) => {
            let [p] = premises::<1>(d)?;
            let (alpha, rest) = c.pop_arg().ok_or("P-Ctx3 needs a stack entry")?;
            ensure(*p == J::Prevalid(rest.clone()), "P-Ctx3 premise mismatch")?;
            ensure(rest.scopes(&alpha), "P-Ctx3: stack entry not scoped")
        }
        (Rule::WTop, J::Wf(c, t)) => {
            let [p] = premises::<1>(d)?;
            ensure(t.is_top(), "W-Top concludes only Top")?;
            ensure(*p == J::Prevalid(c.clone()), "W-Top premise mismatch")
        }
        (Rule::WVar, J::Wf(c, t)) => {
            let [p, q] = premises::<2>(d)?;
            let Term::Var(x) = t else {
                return Err("W-Var concludes only variables".into());
            };
            let bound = c.lookup(x).ok_or("W-Var: variable not annotated")?;
            ensure(*p == J::Prevalid(c.clone()), "W-Var first premise mismatch")?;
            ensure(*q == J::Wf(c.clone(), bound.clone()), "W-Var second premise mismatch")
        }
        (Rule::WFun | Rule::WFunOp, J::Wf(c, t)) => {
            let [p, q] = premises::<2>(d)?;
            let Term::Abs(x, annot, body) = t else {
                return Err("W-Fun concludes only abstractions".into());
            };
            let (expected_bound, rest) = if d.rule == Rule::WFun {
                ensure(c.stack().is_empty(), "W-Fun needs an empty stack")?;
                ((**annot).clone(), c.clone())
            } else {
                c.pop_arg().ok_or("W-FunOp needs a stack entry")?
            };
            let J::Wf(pc, pbody) = p else {
                return Err("W-Fun first premise must be wf".into());
            };
            let (y, bound) = last_annot(&rest, pc).ok_or("W-Fun premise context mismatch")?;
            ensure(pc.stack() == rest.stack(), "W-Fun premise stack mismatch")?;
            ensure(*bound == expected_bound, "W-Fun premise bound mismatch")?;
            ensure(body_matches(x, body, y, pbody), "W-Fun premise body mismatch")?;
            ensure(
                *q == J::Wf(c.without_stack(), (**annot).clone()),
                "W-Fun annotation premise mismatch",
            )
        }
        (Rule::WApp, J::Wf(c, t)) => {
            let [p, q] = premises::<2>(d)?;
            let Term::App(u, v) = t else {
                return Err("W-App concludes only applications".into());
            };
            let J::WellSubStar(pc, pu, pf) = p else {
                return Err("W-App first premise must be <=wf*".into());
            };
            ensure(*pc == c.push_arg((**v).clone()), "W-App first premise context")?;
            ensure(*pu == **u, "W-App first premise operator")?;
            let Term::Abs(_, bound, body) = pf else {
                return Err("W-App first premise must bound by a function".into());
            };
            ensure(body.is_top(), "W-App bounding function must have body Top")?;
            ensure(
                *q == J::WellSubStar(c.without_stack(), (**v).clone(), (**bound).clone()),
                "W-App second premise mismatch",
            )
        }
        (Rule::WfRule, J::WellSub(c, u, t)) => {
            let [p, q, r] = premises::<3>(d)?;
            ensure(*p == J::Wf(c.clone(), u.clone()), "Wf-Rule first premise")?;
            ensure(*q == J::Wf(c.clone(), t.clone()), "Wf-Rule second premise")?;
            ensure(
                *r == J::Rel(c.clone(), u.clone(), t.clone(), RelKind::Sub),
                "Wf-Rule third premise",
            )
        }
        (Rule::WfSub, J::WellSubStar(c, u, t)) => {
            let [p] = premises::<1>(d)?;
            ensure(*p == J::WellSub(c.clone(), u.clone(), t.clone()), "Wf-Sub premise")
        }
        (Rule::WfTrans, J::WellSubStar(c, v, t)) => {
            let [p, q, r] = premises::<3>(d)?;
            let m = d.side.as_ref().ok_or("Wf-Trans needs its middle term")?;
            ensure(*p == J::WellSubStar(c.clone(), v.clone(), m.clone()), "Wf-Trans first premise")?;
            ensure(*q == J::WellSubStar(c.clone(), m.clone(), t.clone()), "Wf-Trans second premise")?;
            ensure(*r == J::Wf(c.clone(), m.clone()), "Wf-Trans third premise")
        }
        (Rule::AsRefl, J::Rel(c, u, t, _)) => {
            let [p] = premises::<1>(d)?;
            ensure(u == t, "As-Refl needs identical sides")?;
            ensure(*p == J::Prevalid(c.clone()), "As-Refl premise")
        }
        (Rule::AsLeft, J::Rel(c, v, t, k)) => {
            let [p] = premises::<1>(d)?;
            let v2 = d.side.as_ref().ok_or("As-Left needs its reduct")?;
            ensure(rel_step(c, *k, v, v2), "As-Left side is not a single step")?;
            ensure(*p == J::Rel(c.clone(), v2.clone(), t.clone(), *k), "As-Left premise")
        }
        (Rule::AsRight, J::Rel(c, v, t, k)) => {
            let [p] = premises::<1>(d)?;
            let t2 = d.side.as_ref().ok_or("As-Right needs its reduct")?;
            ensure(equiv_step_all(t).contains(t2), "As-Right side is not an equivalence step")?;
            ensure(*p == J::Rel(c.clone(), v.clone(), t2.clone(), *k), "As-Right premise")
        }
        (Rule::AstSub, J::RelStar(c, v, t, k)) => {
            let [p] = premises::<1>(d)?;
            ensure(*p == J::Rel(c.clone(), v.clone(), t.clone(), *k), "Ast-Sub premise")
        }
        (Rule::AstTrans, J::RelStar(c, v, t, k)) => {
            let [p, q] = premises::<2>(d)?;
            let m = d.side.as_ref().ok_or("Ast-Trans needs its middle term")?;
            ensure(*p == J::RelStar(c.clone(), v.clone(), m.clone(), *k), "Ast-Trans first premise")?;
            ensure(*q == J::RelStar(c.clone(), m.clone(), t.clone(), *k), "Ast-Trans second premise")
        }
        (rule, j) => Err(format!("{rule:?} cannot conclude {j}")),
    }
}

/// The unique prevalidity derivation of `ctx`, if it is prevalid.
pub fn derive_prevalid(ctx: &ExtContext) -> Option<Derivation> {
    if !ctx.is_prevalid() {
        return None;
    }
    let mut d = Derivation::node(Rule::PCtx1, Judgment::Prevalid(ExtContext::empty()), vec![]);
    let mut cur = ExtContext::empty();
    for (x, t) in ctx.annots() {
        cur = cur.push_annot(x.clone(), t.clone());
        d = Derivation::node(Rule::PCtx2, Judgment::Prevalid(cur.clone()), vec![d]);
    }
    for alpha in ctx.stack().iter().rev() {
        cur = cur.push_arg(alpha.clone());
        d = Derivation::node(Rule::PCtx3, Judgment::Prevalid(cur.clone()), vec![d]);
    }
    Some(d)
}

/// Turns a common-reduct witness into As-Refl, As-Right and As-Left nodes.
pub fn derive_rel(ctx: &ExtContext, kind: RelKind, w: &RelWitness) -> Option<Derivation> {
    let pv = derive_prevalid(ctx)?;
    let t = &w.right[0];
    let mut d = Derivation::node(
        Rule::AsRefl,
        Judgment::Rel(ctx.clone(), w.witness.clone(), w.witness.clone(), kind),
        vec![pv],
    );
    for i in (0..w.right.len() - 1).rev() {
        d = Derivation::node(
            Rule::AsRight,
            Judgment::Rel(ctx.clone(), w.witness.clone(), w.right[i].clone(), kind),
            vec![d],
        )
        .with_side(w.right[i + 1].clone());
    }
    for j in (0..w.left.len() - 1).rev() {
        d = Derivation::node(
            Rule::AsLeft,
            Judgment::Rel(ctx.clone(), w.left[j].clone(), t.clone(), kind),
            vec![d],
        )
        .with_side(w.left[j + 1].clone());
    }
    Some(d)
}

/// Ast-Trans over Ast-Sub legs, associating to the left.
pub fn derive_rel_star(ctx: &ExtContext, kind: RelKind, stair: &Stair) -> Option<Derivation> {
    let leg = |i: usize| -> Option<Derivation> {
        let inner = derive_rel(ctx, kind, &stair.legs[i])?;
        Some(Derivation::node(
            Rule::AstSub,
            Judgment::RelStar(ctx.clone(), stair.terms[i].clone(), stair.terms[i + 1].clone(), kind),
            vec![inner],
        ))
    };
    if stair.legs.is_empty() {
        let u = stair.terms.first()?;
        let refl = RelWitness {
            witness: u.clone(),
            left: vec![u.clone()],
            right: vec![u.clone()],
        };
        return Some(Derivation::node(
            Rule::AstSub,
            Judgment::RelStar(ctx.clone(), u.clone(), u.clone(), kind),
            vec![derive_rel(ctx, kind, &refl)?],
        ));
    }
    let mut d = leg(0)?;
    for i in 1..stair.legs.len() {
        d = Derivation::node(
            Rule::AstTrans,
            Judgment::RelStar(ctx.clone(), stair.terms[0].clone(), stair.terms[i + 1].clone(), kind),
            vec![d, leg(i)?],
        )
        .with_side(stair.terms[i].clone());
    }
    Some(d)
}

fn require_prevalid(ctx: &ExtContext) -> Result<()> {
    if ctx.is_prevalid() {
        Ok(())
    } else {
        Err(PssError::InvalidContext(ctx.clone()))
    }
}

/// Bounded backward search for `Γ; s ⊢ t wf`. One unit of fuel per goal.
///
/// W-App is tried with every bounding function `λx≼b.⊤` found in the
/// `≤→*` closure of the operator; its premises are discharged by
/// [`well_subtype_check`] with the remaining fuel split evenly.
pub fn search_wf(ctx: &ExtContext, t: &Term, budget: &mut Budget) -> Result<Decision<Derivation>> {
    require_prevalid(ctx)?;
    Ok(search(ctx, t, budget))
}

fn both(
    a: Decision<Derivation>,
    b: impl FnOnce() -> Decision<Derivation>,
    k: impl FnOnce(Derivation, Derivation) -> Derivation,
) -> Decision<Derivation> {
    match a {
        Decision::No => Decision::No,
        Decision::Yes(da) => match b() {
            Decision::Yes(db) => Decision::Yes(k(da, db)),
            Decision::No => Decision::No,
            Decision::Unknown => Decision::Unknown,
        },
        Decision::Unknown => match b() {
            Decision::No => Decision::No,
            _ => Decision::Unknown,
        },
    }
}

fn search(ctx: &ExtContext, t: &Term, budget: &mut Budget) -> Decision<Derivation> {
    if !budget.spend("well-formedness search") {
        return Decision::Unknown;
    }
    let concl = Judgment::Wf(ctx.clone(), t.clone());
    match t {
        Term::Top => {
            let pv = derive_prevalid(ctx).expect("prevalid by construction");
            Decision::Yes(Derivation::node(Rule::WTop, concl, vec![pv]))
        }
        Term::Var(x) => match ctx.lookup(x) {
            None => Decision::No,
            Some(bound) => {
                let bound = bound.clone();
                match search(ctx, &bound, budget) {
                    Decision::Yes(d) => {
                        let pv = derive_prevalid(ctx).expect("prevalid by construction");
                        Decision::Yes(Derivation::node(Rule::WVar, concl, vec![pv, d]))
                    }
                    other => other,
                }
            }
        },
        Term::Abs(x, annot, body) => {
            let (rule, bound, rest) = match ctx.pop_arg() {
                Some((alpha, rest)) => (Rule::WFunOp, alpha, rest),
                None => {
                    if !ctx.scopes(annot) {
                        return Decision::No;
                    }
                    (Rule::WFun, (**annot).clone(), ctx.clone())
                }
            };
            let (y, body) = ctx.open_binder(x, body);
            let inner = rest.push_annot(y, bound);
            let first = search(&inner, &body, budget);
            both(
                first,
                || search(&ctx.without_stack(), annot, budget),
                |p, q| Derivation::node(rule, concl.clone(), vec![p, q]),
            )
        }
        Term::App(u, v) => {
            if !ctx.scopes(v) {
                return Decision::No;
            }
            let inner = ctx.push_arg((**v).clone());
            let mut closure_budget = budget.split(1, 2);
            let closure = sub_reachable(&inner, u, &mut closure_budget).expect("prevalid");
            budget.absorb(closure_budget);
            let mut saw_unknown = !closure.complete;
            for cand in closure.terms.sorted() {
                let Term::Abs(_, b, body) = &cand else { continue };
                if !body.is_top() {
                    continue;
                }
                let bound = (**b).clone();
                let mut b1 = budget.split(1, 2);
                let p1 = well_sub(&inner, u, &cand, &mut b1);
                budget.absorb(b1);
                let p2 = match &p1 {
                    Decision::No => Decision::No,
                    _ => well_sub(&ctx.without_stack(), v, &bound, budget),
                };
                match (p1, p2) {
                    (Decision::Yes(d1), Decision::Yes(d2)) => {
                        let s1 = star(d1);
                        let s2 = star(d2);
                        return Decision::Yes(Derivation::node(Rule::WApp, concl, vec![s1, s2]));
                    }
                    (Decision::No, _) | (_, Decision::No) => {}
                    _ => saw_unknown = true,
                }
            }
            if saw_unknown {
                Decision::Unknown
            } else {
                Decision::No
            }
        }
    }
}

fn star(d: Derivation) -> Derivation {
    let Judgment::WellSub(c, u, t) = &d.conclusion else {
        unreachable!("Wf-Sub wraps a well-subtyping derivation")
    };
    let concl = Judgment::WellSubStar(c.clone(), u.clone(), t.clone());
    Derivation::node(Rule::WfSub, concl, vec![d])
}

/// `Γ; s ⊢ u ≤wf t` by Wf-Rule: both sides well-formed and `u ≤ t`.
pub fn well_subtype_check(
    ctx: &ExtContext,
    u: &Term,
    t: &Term,
    budget: &mut Budget,
) -> Result<Decision<Derivation>> {
    require_prevalid(ctx)?;
    Ok(well_sub(ctx, u, t, budget))
}

fn well_sub(ctx: &ExtContext, u: &Term, t: &Term, budget: &mut Budget) -> Decision<Derivation> {
    let concl = Judgment::WellSub(ctx.clone(), u.clone(), t.clone());
    let wu = search(ctx, u, budget);
    if matches!(wu, Decision::No) {
        return Decision::No;
    }
    let wt = search(ctx, t, budget);
    if matches!(wt, Decision::No) {
        return Decision::No;
    }
    let rel = check_rel(ctx, u, t, RelKind::Sub, budget).expect("prevalid");
    match (wu, wt, rel) {
        (Decision::Yes(a), Decision::Yes(b), RelOutcome::Yes(w)) => {
            let r = derive_rel(ctx, RelKind::Sub, &w).expect("prevalid");
            Decision::Yes(Derivation::node(Rule::WfRule, concl, vec![a, b, r]))
        }
        (_, _, RelOutcome::No) => Decision::No,
        _ => Decision::Unknown,
    }
}

/// Three-valued summary of [`search_wf`].
pub fn oracle_wf(ctx: &ExtContext, t: &Term, budget: &mut Budget) -> Result<Verdict> {
    Ok(search_wf(ctx, t, budget)?.verdict())
}
