//! Normal forms: `⊤ | λx≼t_n.u_n | x t_n ... t_n`.

use crate::term::{Name, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalFormClass {
    TopNF,
    AbsNF,
    NeutralNF { head: Name, args: usize },
    NotNF,
}

impl NormalFormClass {
    pub fn is_normal(&self) -> bool {
        !matches!(self, NormalFormClass::NotNF)
    }
}

pub fn classify_nf(t: &Term) -> NormalFormClass {
    match t {
        Term::Top => NormalFormClass::TopNF,
        Term::Abs(_, a, u) => {
            if is_nf(a) && is_nf(u) {
                NormalFormClass::AbsNF
            } else {
                NormalFormClass::NotNF
            }
        }
        Term::Var(x) => NormalFormClass::NeutralNF {
            head: x.clone(),
            args: 0,
        },
        Term::App(..) => {
            let (head, args) = t.spine();
            match head {
                Term::Var(x) if args.iter().all(|a| is_nf(a)) => NormalFormClass::NeutralNF {
                    head: x.clone(),
                    args: args.len(),
                },
                _ => NormalFormClass::NotNF,
            }
        }
    }
}

pub fn is_nf(t: &Term) -> bool {
    classify_nf(t).is_normal()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id() -> Term {
        Term::abs("x", Term::Top, Term::var("x"))
    }

    #[test]
    fn examples() {
        assert_eq!(classify_nf(&Term::Top), NormalFormClass::TopNF);
        assert_eq!(classify_nf(&Term::app(id(), id())), NormalFormClass::NotNF);
        let t = Term::apps(Term::var("x"), [Term::Top, Term::Top]);
        assert_eq!(
            classify_nf(&t),
            NormalFormClass::NeutralNF {
                head: Name::new("x"),
                args: 2
            }
        );
        assert_eq!(classify_nf(&id()), NormalFormClass::AbsNF);
    }

    #[test]
    fn top_headed_application_is_not_normal() {
        assert_eq!(
            classify_nf(&Term::app(Term::Top, Term::var("y"))),
            NormalFormClass::NotNF
        );
    }

    #[test]
    fn neutral_requires_normal_arguments() {
        let t = Term::app(Term::var("x"), Term::app(id(), Term::Top));
        assert_eq!(classify_nf(&t), NormalFormClass::NotNF);
        let t = Term::abs("y", Term::app(id(), Term::Top), Term::Top);
        assert_eq!(classify_nf(&t), NormalFormClass::NotNF);
    }
}
