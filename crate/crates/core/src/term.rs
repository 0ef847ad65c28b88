//! Terms, names and the binding discipline.
//!
//! Terms use named variables. Bound variables are only renamed when a
//! substitution would otherwise capture a free variable; the fresh names have
//! the form `base$n`, which the surface syntax never produces on its own.
//! Equality on [`Term`] is alpha-equivalence, and hashing goes through the
//! nameless [`CanonKey`], so terms can be used directly as set elements.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// A variable name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether `s` is a name a user may write: an ASCII letter followed by
    /// letters, digits or underscores.
    pub fn is_user_ident(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    /// The name with any machine-generated `$n` suffix removed.
    pub fn base(&self) -> &str {
        match self.0.find('$') {
            Some(i) => &self.0[..i],
            None => &self.0,
        }
    }

    /// The first `base$n` (n = 1, 2, ...) rejected by `taken`.
    pub fn fresh(&self, mut taken: impl FnMut(&Name) -> bool) -> Name {
        let base = self.base();
        (1..)
            .map(|n| Name::new(&format!("{base}${n}")))
            .find(|cand| !taken(cand))
            .expect("unbounded supply of names")
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

/// A term: variable, the top type, an annotated abstraction `λx≼t.u`, or an
/// application.
#[derive(Clone)]
pub enum Term {
    Var(Name),
    Top,
    /// `Abs(x, t, u)` is `λx≼t.u`; `x` is bound in `u` but not in `t`.
    Abs(Name, Arc<Term>, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
}

impl Term {
    pub fn var(name: impl Into<Name>) -> Term {
        Term::Var(name.into())
    }

    pub fn abs(param: impl Into<Name>, annot: Term, body: Term) -> Term {
        Term::Abs(param.into(), Arc::new(annot), Arc::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Arc::new(fun), Arc::new(arg))
    }

    /// `head a1 ... an`, associating to the left.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Term::Top)
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Top => 1,
            Term::Abs(_, t, u) => 1 + t.size() + u.size(),
            Term::App(u, v) => 1 + u.size() + v.size(),
        }
    }

    /// Splits `h a1 ... an` into `h` and `[a1, ..., an]`.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Term::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(&x) {
                    out.insert(x.clone());
                }
            }
            Term::Top => {}
            Term::Abs(x, t, u) => {
                t.collect_free(bound, out);
                bound.push(x);
                u.collect_free(bound, out);
                bound.pop();
            }
            Term::App(u, v) => {
                u.collect_free(bound, out);
                v.collect_free(bound, out);
            }
        }
    }

    pub fn occurs_free(&self, x: &Name) -> bool {
        match self {
            Term::Var(y) => y == x,
            Term::Top => false,
            Term::Abs(y, t, u) => t.occurs_free(x) || (y != x && u.occurs_free(x)),
            Term::App(u, v) => u.occurs_free(x) || v.occurs_free(x),
        }
    }

    /// Whether every free variable satisfies `pred`.
    pub fn free_vars_all(&self, mut pred: impl FnMut(&Name) -> bool) -> bool {
        self.free_vars().iter().all(|x| pred(x))
    }

    /// Capture-avoiding substitution `self[x := v]`.
    pub fn subst(&self, x: &Name, v: &Term) -> Term {
        if !self.occurs_free(x) {
            return self.clone();
        }
        let fv = v.free_vars();
        subst_node(self, x, v, &fv)
    }

    /// Renames the free occurrences of `x` to `y`.
    pub fn rename_free(&self, x: &Name, y: &Name) -> Term {
        self.subst(x, &Term::Var(y.clone()))
    }

    /// Alpha-equivalence.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha_eq_in(self, other, &mut Vec::new(), &mut Vec::new())
    }

    /// The nameless key shared by exactly the alpha-equivalent terms.
    pub fn canon_key(&self) -> CanonKey {
        let mut out = String::new();
        let mut bound = Vec::new();
        write_canon(self, &mut bound, &mut out);
        CanonKey(out)
    }

    /// Renames binders so that no binder shadows another binder or a free
    /// variable of the term. Output is alpha-equivalent to the input.
    pub fn with_distinct_binders(&self) -> Term {
        let mut taken: BTreeSet<Name> = self.free_vars();
        distinct_binders(self, &mut taken)
    }
}

fn subst_arc(t: &Arc<Term>, x: &Name, v: &Term, fv: &BTreeSet<Name>) -> Arc<Term> {
    if t.occurs_free(x) {
        Arc::new(subst_node(t, x, v, fv))
    } else {
        t.clone()
    }
}

fn subst_node(t: &Term, x: &Name, v: &Term, fv: &BTreeSet<Name>) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                v.clone()
            } else {
                t.clone()
            }
        }
        Term::Top => Term::Top,
        Term::App(f, a) => Term::App(subst_arc(f, x, v, fv), subst_arc(a, x, v, fv)),
        Term::Abs(y, annot, body) => {
            let annot = subst_arc(annot, x, v, fv);
            if y == x || !body.occurs_free(x) {
                return Term::Abs(y.clone(), annot, body.clone());
            }
            if fv.contains(y) {
                let z = y.fresh(|n| fv.contains(n) || n == x || body.occurs_free(n));
                let renamed = body.rename_free(y, &z);
                let body = subst_node(&renamed, x, v, fv);
                Term::Abs(z, annot, Arc::new(body))
            } else {
                Term::Abs(y.clone(), annot, subst_arc(body, x, v, fv))
            }
        }
    }
}

fn alpha_eq_in<'a>(
    a: &'a Term,
    b: &'a Term,
    env_a: &mut Vec<&'a Name>,
    env_b: &mut Vec<&'a Name>,
) -> bool {
    match (a, b) {
        (Term::Top, Term::Top) => true,
        (Term::Var(x), Term::Var(y)) => {
            let ix = env_a.iter().rposition(|n| *n == x);
            let iy = env_b.iter().rposition(|n| *n == y);
            match (ix, iy) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::App(f1, a1), Term::App(f2, a2)) => {
            alpha_eq_in(f1, f2, env_a, env_b) && alpha_eq_in(a1, a2, env_a, env_b)
        }
        (Term::Abs(x, t1, u1), Term::Abs(y, t2, u2)) => {
            if !alpha_eq_in(t1, t2, env_a, env_b) {
                return false;
            }
            env_a.push(x);
            env_b.push(y);
            let same = alpha_eq_in(u1, u2, env_a, env_b);
            env_a.pop();
            env_b.pop();
            same
        }
        _ => false,
    }
}

fn write_canon<'a>(t: &'a Term, bound: &mut Vec<&'a Name>, out: &mut String) {
    use std::fmt::Write;
    match t {
        Term::Top => out.push('T'),
        Term::Var(x) => match bound.iter().rposition(|n| *n == x) {
            Some(i) => {
                let _ = write!(out, "#{} ", bound.len() - 1 - i);
            }
            None => {
                let _ = write!(out, "'{x} ");
            }
        },
        Term::Abs(x, a, u) => {
            out.push('L');
            write_canon(a, bound, out);
            bound.push(x);
            write_canon(u, bound, out);
            bound.pop();
        }
        Term::App(f, a) => {
            out.push('@');
            write_canon(f, bound, out);
            write_canon(a, bound, out);
        }
    }
}

fn distinct_binders(t: &Term, taken: &mut BTreeSet<Name>) -> Term {
    match t {
        Term::Var(_) | Term::Top => t.clone(),
        Term::App(f, a) => Term::app(distinct_binders(f, taken), distinct_binders(a, taken)),
        Term::Abs(x, a, u) => {
            let a = distinct_binders(a, taken);
            let (x2, u2) = if taken.contains(x) {
                let z = x.fresh(|n| taken.contains(n) || u.occurs_free(n));
                let u2 = u.rename_free(x, &z);
                (z, u2)
            } else {
                (x.clone(), (**u).clone())
            };
            taken.insert(x2.clone());
            let u2 = distinct_binders(&u2, taken);
            Term::abs(x2, a, u2)
        }
    }
}

/// Nameless rendering of a term: bound variables become de Bruijn indices.
/// Two terms have the same key iff they are alpha-equivalent; the string order
/// is the deterministic tie-break used by every search in the crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonKey(String);

impl CanonKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        self.alpha_eq(other)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canon_key().hash(state)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Pos {
    /// Top level, abstraction body: abstractions print bare.
    Open,
    /// Operator of an application.
    Fun,
    /// Operand of an application.
    Arg,
    /// Annotation of an abstraction.
    Annot,
}

fn fmt_term(t: &Term, pos: Pos, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(x) => write!(f, "{x}"),
        Term::Top => f.write_str("Top"),
        Term::Abs(x, a, u) => {
            let paren = pos != Pos::Open;
            if paren {
                f.write_str("(")?;
            }
            write!(f, "\\{x} <= ")?;
            fmt_term(a, Pos::Annot, f)?;
            f.write_str(" . ")?;
            fmt_term(u, Pos::Open, f)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Term::App(u, v) => {
            let paren = pos == Pos::Arg;
            if paren {
                f.write_str("(")?;
            }
            fmt_term(u, Pos::Fun, f)?;
            f.write_str(" ")?;
            fmt_term(v, Pos::Arg, f)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

/// Prints in the concrete syntax accepted by the `pss` front end.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, Pos::Open, f)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: &str) -> Term {
        Term::abs(x, Term::Top, Term::var(x))
    }

    #[test]
    fn free_vars_examples() {
        assert!(Term::Top.free_vars().is_empty());
        assert!(id("x").free_vars().is_empty());
        let t = Term::abs(
            "x",
            Term::var("y"),
            Term::app(Term::var("x"), Term::var("z")),
        );
        let fv: Vec<_> = t.free_vars().into_iter().collect();
        assert_eq!(fv, vec![Name::new("y"), Name::new("z")]);
    }

    #[test]
    fn annotation_is_outside_binder_scope() {
        let t = Term::abs("x", Term::var("x"), Term::var("x"));
        assert_eq!(t.free_vars().len(), 1);
        assert!(t.occurs_free(&Name::new("x")));
    }

    #[test]
    fn subst_examples() {
        let x = Name::new("x");
        assert!(Term::var("x").subst(&x, &id("y")).alpha_eq(&id("y")));
        assert!(id("x").subst(&x, &Term::Top).alpha_eq(&id("x")));

        // λy≼⊤. y x  [x := y]  must rename the binder.
        let t = Term::abs("y", Term::Top, Term::app(Term::var("y"), Term::var("x")));
        let r = t.subst(&x, &Term::var("y"));
        let expected = Term::abs(
            "w",
            Term::Top,
            Term::app(Term::var("w"), Term::var("y")),
        );
        assert!(r.alpha_eq(&expected), "{r}");
        match &r {
            Term::Abs(b, _, _) => assert_eq!(b.as_str(), "y$1"),
            _ => panic!(),
        }
    }

    #[test]
    fn subst_reaches_annotation_under_shadowing_binder() {
        // (λx≼x. x)[x := ⊤] = λx≼⊤. x
        let t = Term::abs("x", Term::var("x"), Term::var("x"));
        let r = t.subst(&Name::new("x"), &Term::Top);
        assert!(r.alpha_eq(&Term::abs("z", Term::Top, Term::var("z"))));
    }

    #[test]
    fn alpha_eq_examples() {
        assert!(id("x").alpha_eq(&id("y")));
        assert!(!id("x").alpha_eq(&Term::abs("x", Term::Top, Term::Top)));
        assert!(!Term::var("x").alpha_eq(&Term::var("y")));
        // λx.λy.x vs λy.λx.x : different
        let a = Term::abs("x", Term::Top, Term::abs("y", Term::Top, Term::var("x")));
        let b = Term::abs("y", Term::Top, Term::abs("x", Term::Top, Term::var("x")));
        assert!(!a.alpha_eq(&b));
        // free variable vs bound variable of the same name
        let c = Term::abs("x", Term::Top, Term::var("y"));
        let d = Term::abs("y", Term::Top, Term::var("y"));
        assert!(!c.alpha_eq(&d));
    }

    #[test]
    fn canon_key_agrees_with_alpha_eq() {
        let a = Term::abs("x", Term::Top, Term::abs("y", Term::var("x"), Term::var("y")));
        let b = Term::abs("p", Term::Top, Term::abs("q", Term::var("p"), Term::var("q")));
        assert_eq!(a.canon_key(), b.canon_key());
        assert_ne!(a.canon_key(), id("x").canon_key());
    }

    #[test]
    fn fresh_names_strip_suffix() {
        let n = Name::new("y$3");
        assert_eq!(n.base(), "y");
        let f = n.fresh(|c| c.as_str() == "y$1");
        assert_eq!(f.as_str(), "y$2");
    }

    #[test]
    fn display_round_shape() {
        let t = Term::app(id("x"), Term::app(Term::var("f"), Term::var("a")));
        assert_eq!(t.to_string(), "(\\x <= Top . x) (f a)");
        let t = Term::abs("x", id("y"), Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(t.to_string(), "\\x <= (\\y <= Top . y) . x x");
    }

    #[test]
    fn distinct_binders_removes_shadowing() {
        let t = Term::abs("x", Term::Top, Term::abs("x", Term::Top, Term::var("x")));
        let d = t.with_distinct_binders();
        assert!(d.alpha_eq(&t));
        match &d {
            Term::Abs(a, _, body) => match &**body {
                Term::Abs(b, _, _) => assert_ne!(a, b),
                _ => panic!(),
            },
            _ => panic!(),
        }
    }
}
