//! Extended contexts `Γ; s`: ordered subtype annotations plus a stack of
//! operands crossed while descending into the operator of an application.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::term::{Name, Term};

#[derive(Clone, Default, Serialize)]
pub struct ExtContext {
    /// Oldest annotation first.
    annots: Vec<(Name, Term)>,
    /// Top of the stack first.
    stack: Vec<Term>,
}

impl ExtContext {
    /// `ε; nil`.
    pub fn empty() -> ExtContext {
        ExtContext::default()
    }

    pub fn new(annots: Vec<(Name, Term)>, stack: Vec<Term>) -> ExtContext {
        ExtContext { annots, stack }
    }

    pub fn annots(&self) -> &[(Name, Term)] {
        &self.annots
    }

    /// Stack entries, top first.
    pub fn stack(&self) -> &[Term] {
        &self.stack
    }

    pub fn is_empty(&self) -> bool {
        self.annots.is_empty() && self.stack.is_empty()
    }

    /// `Γ, x≼t; s`
    pub fn push_annot(&self, x: impl Into<Name>, t: Term) -> ExtContext {
        let mut c = self.clone();
        c.annots.push((x.into(), t));
        c
    }

    /// `Γ; u :: s`
    pub fn push_arg(&self, u: Term) -> ExtContext {
        let mut c = self.clone();
        c.stack.insert(0, u);
        c
    }

    /// `Γ; nil`
    pub fn without_stack(&self) -> ExtContext {
        ExtContext {
            annots: self.annots.clone(),
            stack: Vec::new(),
        }
    }

    /// Splits `Γ; α :: s` into `α` and `Γ; s`.
    pub fn pop_arg(&self) -> Option<(Term, ExtContext)> {
        let (top, rest) = self.stack.split_first()?;
        Some((
            top.clone(),
            ExtContext {
                annots: self.annots.clone(),
                stack: rest.to_vec(),
            },
        ))
    }

    pub(crate) fn stack_mut(&mut self) -> &mut Vec<Term> {
        &mut self.stack
    }

    /// The topmost annotation for `x`.
    pub fn lookup(&self, x: &Name) -> Option<&Term> {
        self.annots.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn in_dom(&self, x: &Name) -> bool {
        self.annots.iter().any(|(y, _)| y == x)
    }

    pub fn dom(&self) -> BTreeSet<Name> {
        self.annots.iter().map(|(x, _)| x.clone()).collect()
    }

    /// `Γ₁, Γ₂` and `s₁ ++ s₂`.
    pub fn concat(&self, other: &ExtContext) -> ExtContext {
        let mut c = self.clone();
        c.annots.extend(other.annots.iter().cloned());
        c.stack.extend(other.stack.iter().cloned());
        c
    }

    /// Derivability of `Γ; s prevalid`: annotations read left to right
    /// introduce fresh variables whose bounds mention only earlier ones, and
    /// stack entries mention only annotated variables.
    pub fn is_prevalid(&self) -> bool {
        let mut seen: BTreeSet<&Name> = BTreeSet::new();
        for (x, t) in &self.annots {
            if seen.contains(x) || !t.free_vars().iter().all(|y| seen.contains(y)) {
                return false;
            }
            seen.insert(x);
        }
        self.stack
            .iter()
            .all(|a| a.free_vars().iter().all(|y| seen.contains(y)))
    }

    /// Whether every free variable of `t` is annotated.
    pub fn scopes(&self, t: &Term) -> bool {
        t.free_vars().iter().all(|x| self.in_dom(x))
    }

    /// A name for binder `x` that does not clash with the support of the
    /// context, together with the body renamed accordingly.
    pub(crate) fn open_binder(&self, x: &Name, body: &Term) -> (Name, Term) {
        if self.in_dom(x) {
            let z = x.fresh(|n| self.in_dom(n) || body.occurs_free(n));
            let renamed = body.rename_free(x, &z);
            (z, renamed)
        } else {
            (x.clone(), body.clone())
        }
    }

    /// Alpha-insensitive key for the whole context.
    pub fn canon_key(&self) -> String {
        let mut out = String::new();
        for (x, t) in &self.annots {
            out.push_str(x.as_str());
            out.push('<');
            out.push_str(t.canon_key().as_str());
            out.push(';');
        }
        out.push('|');
        for a in &self.stack {
            out.push_str(a.canon_key().as_str());
            out.push(';');
        }
        out
    }
}

impl PartialEq for ExtContext {
    fn eq(&self, other: &ExtContext) -> bool {
        self.annots.len() == other.annots.len()
            && self.stack.len() == other.stack.len()
            && self
                .annots
                .iter()
                .zip(&other.annots)
                .all(|((x, t), (y, u))| x == y && t == u)
            && self.stack.iter().zip(&other.stack).all(|(a, b)| a == b)
    }
}

impl Eq for ExtContext {}

impl fmt::Display for ExtContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.annots.is_empty() {
            f.write_str("ε")?;
        }
        for (i, (x, t)) in self.annots.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x} <= {t}")?;
        }
        f.write_str("; ")?;
        for a in &self.stack {
            write!(f, "({a}) :: ")?;
        }
        f.write_str("nil")
    }
}

impl fmt::Debug for ExtContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// `Γ'[x := t]` on an annotation sequence: entries after the last annotation
/// of `x` are substituted; that annotation and everything before it are left
/// alone.
pub fn subst_annots(annots: &[(Name, Term)], x: &Name, t: &Term) -> Vec<(Name, Term)> {
    match annots.split_last() {
        None => Vec::new(),
        Some(((y, u), init)) => {
            if y == x {
                annots.to_vec()
            } else {
                let mut out = subst_annots(init, x, t);
                out.push((y.clone(), u.subst(x, t)));
                out
            }
        }
    }
}

/// `s[x := t]`: every stack entry is substituted.
pub fn subst_stack(stack: &[Term], x: &Name, t: &Term) -> Vec<Term> {
    stack.iter().map(|a| a.subst(x, t)).collect()
}

/// Substitution on both components of an extended context (or a suffix of
/// one).
pub fn subst_context(ctx: &ExtContext, x: &Name, t: &Term) -> ExtContext {
    ExtContext::new(
        subst_annots(ctx.annots(), x, t),
        subst_stack(ctx.stack(), x, t),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn lookup_is_topmost() {
        let c = ExtContext::new(
            vec![(n("x"), Term::Top), (n("x"), Term::var("y"))],
            vec![],
        );
        assert_eq!(c.lookup(&n("x")), Some(&Term::var("y")));
        assert_eq!(ExtContext::empty().lookup(&n("x")), None);
    }

    #[test]
    fn dom_is_support() {
        let c = ExtContext::empty()
            .push_annot("x", Term::Top)
            .push_annot("y", Term::var("x"));
        let d: Vec<_> = c.dom().into_iter().collect();
        assert_eq!(d, vec![n("x"), n("y")]);
    }

    #[test]
    fn prevalidity_rules() {
        assert!(ExtContext::empty().is_prevalid());
        let dup = ExtContext::empty()
            .push_annot("x", Term::Top)
            .push_annot("x", Term::Top);
        assert!(!dup.is_prevalid());
        let unscoped = ExtContext::empty().push_annot("x", Term::var("y"));
        assert!(!unscoped.is_prevalid());
        let stack_bad = ExtContext::empty().push_arg(Term::var("x"));
        assert!(!stack_bad.is_prevalid());
        let ok = ExtContext::empty()
            .push_annot("x", Term::Top)
            .push_arg(Term::var("x"));
        assert!(ok.is_prevalid());
    }

    #[test]
    fn stack_order() {
        let c = ExtContext::empty()
            .push_arg(Term::var("a"))
            .push_arg(Term::var("b"));
        let (top, rest) = c.pop_arg().unwrap();
        assert_eq!(top, Term::var("b"));
        assert_eq!(rest.stack(), &[Term::var("a")]);
    }

    #[test]
    fn subst_context_cases() {
        let x = n("x");
        let c = ExtContext::empty().push_annot("y", Term::var("x"));
        let r = subst_context(&c, &x, &Term::Top);
        assert_eq!(r, ExtContext::empty().push_annot("y", Term::Top));

        let c = ExtContext::empty().push_annot("x", Term::var("u"));
        assert_eq!(subst_context(&c, &x, &Term::Top), c);

        let c = ExtContext::empty().push_arg(Term::var("x"));
        assert_eq!(
            subst_context(&c, &x, &Term::Top),
            ExtContext::empty().push_arg(Term::Top)
        );
    }

    #[test]
    fn subst_stops_at_rebinding() {
        let x = n("x");
        let c = ExtContext::new(
            vec![
                (n("a"), Term::var("x")),
                (n("x"), Term::var("x")),
                (n("b"), Term::var("x")),
            ],
            vec![],
        );
        let r = subst_context(&c, &x, &Term::Top);
        assert_eq!(r.annots()[0].1, Term::var("x"));
        assert_eq!(r.annots()[1].1, Term::var("x"));
        assert_eq!(r.annots()[2].1, Term::Top);
    }
}
