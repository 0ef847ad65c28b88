//! Seeded random generation of terms and contexts.
//!
//! Well-formed terms are built bottom-up: an application is only formed from
//! an operator whose bound is known and an operand chosen to be a subtype of
//! that bound, and every candidate is confirmed with `wfA` before use.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algo::algo_wf;
use crate::budget::{Budget, Verdict};
use crate::context::ExtContext;
use crate::term::{Name, Term};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepWeights {
    pub top: u32,
    pub var: u32,
    pub abs: u32,
    pub app: u32,
}

impl Default for StepWeights {
    fn default() -> StepWeights {
        StepWeights {
            top: 2,
            var: 3,
            abs: 3,
            app: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenConfig {
    pub seed: u64,
    pub target_size: usize,
    pub step_weights: StepWeights,
    /// Fuel for each `wfA` confirmation.
    pub fuel: u64,
}

impl GenConfig {
    pub fn new(seed: u64, target_size: usize) -> GenConfig {
        GenConfig {
            seed,
            target_size,
            step_weights: StepWeights::default(),
            fuel: 2_000,
        }
    }
}

/// A candidate term together with the bound it is known to satisfy.
#[derive(Clone)]
struct Typed {
    term: Term,
    /// An abstraction `λx≼A.B` the term is a subtype of, when known.
    fun_bound: Option<(Term, Term)>,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    cfg: &'a GenConfig,
    counter: usize,
}

impl Gen<'_> {
    fn fresh(&mut self) -> Name {
        self.counter += 1;
        Name::new(&format!("v{}", self.counter))
    }

    fn pick_kind(&mut self, size: usize) -> usize {
        let w = self.cfg.step_weights;
        let weights = if size <= 1 {
            [w.top, w.var, 0, 0]
        } else {
            [w.top, w.var, w.abs, w.app]
        };
        let total: u32 = weights.iter().sum();
        let mut r = self.rng.gen_range(0..total.max(1));
        for (i, wi) in weights.iter().enumerate() {
            if r < *wi {
                return i;
            }
            r -= wi;
        }
        0
    }

    /// A term meant to be well-formed in `ctx` (annotations only, empty stack).
    fn term(&mut self, ctx: &ExtContext, size: usize) -> Typed {
        match self.pick_kind(size) {
            1 if !ctx.annots().is_empty() => {
                let (x, bound) = ctx.annots().choose(&mut self.rng).unwrap().clone();
                let fun_bound = match &bound {
                    Term::Abs(_, a, b) => Some(((**a).clone(), (**b).clone())),
                    _ => None,
                };
                Typed {
                    term: Term::Var(x),
                    fun_bound,
                }
            }
            2 => {
                let annot_size = self.rng.gen_range(1..=(size / 3).max(1));
                let annot = self.term(ctx, annot_size).term;
                let x = self.fresh();
                let inner = ctx.push_annot(x.clone(), annot.clone());
                let body = self.term(&inner, size.saturating_sub(annot_size + 1).max(1)).term;
                Typed {
                    fun_bound: Some((annot.clone(), body.clone())),
                    term: Term::abs(x, annot, body),
                }
            }
            3 => {
                let fsize = self.rng.gen_range(1..size.max(2));
                let f = self.function(ctx, fsize);
                let Some((annot, _)) = &f.fun_bound else {
                    return Typed {
                        term: Term::Top,
                        fun_bound: None,
                    };
                };
                let v = self.operand(ctx, annot, size.saturating_sub(fsize + 1).max(1));
                let term = Term::app(f.term.clone(), v);
                let mut b = Budget::new(self.cfg.fuel);
                if algo_wf(ctx, &term, &mut b).unwrap_or(Verdict::No) == Verdict::Yes {
                    Typed { term, fun_bound: None }
                } else {
                    f
                }
            }
            _ => Typed {
                term: Term::Top,
                fun_bound: None,
            },
        }
    }

    /// A term with a known function bound.
    fn function(&mut self, ctx: &ExtContext, size: usize) -> Typed {
        let vars: Vec<(Name, Term)> = ctx
            .annots()
            .iter()
            .filter(|(_, b)| matches!(b, Term::Abs(..)))
            .cloned()
            .collect();
        if !vars.is_empty() && self.rng.gen_bool(0.3) {
            let (x, bound) = vars.choose(&mut self.rng).unwrap().clone();
            let Term::Abs(_, a, b) = bound else { unreachable!() };
            return Typed {
                term: Term::Var(x),
                fun_bound: Some(((*a).clone(), (*b).clone())),
            };
        }
        let annot_size = self.rng.gen_range(1..=(size / 3).max(1));
        let annot = if self.rng.gen_bool(0.5) {
            Term::Top
        } else {
            self.term(ctx, annot_size).term
        };
        let x = self.fresh();
        let inner = ctx.push_annot(x.clone(), annot.clone());
        let body = if self.rng.gen_bool(0.4) {
            Term::Var(x.clone())
        } else {
            self.term(&inner, size.saturating_sub(annot_size + 1).max(1)).term
        };
        Typed {
            fun_bound: Some((annot.clone(), body.clone())),
            term: Term::abs(x, annot, body),
        }
    }

    /// A term likely to be a subtype of `bound`.
    fn operand(&mut self, ctx: &ExtContext, bound: &Term, size: usize) -> Term {
        let same: Vec<Name> = ctx
            .annots()
            .iter()
            .filter(|(_, b)| b == bound)
            .map(|(x, _)| x.clone())
            .collect();
        match self.rng.gen_range(0..3) {
            0 if !same.is_empty() => Term::Var(same.choose(&mut self.rng).unwrap().clone()),
            1 => bound.clone(),
            _ if bound.is_top() => self.term(ctx, size).term,
            _ => bound.clone(),
        }
    }
}

/// A well-formed term under the empty context with at least half the target
/// size, or the largest one found if no candidate got there. `None` if no
/// candidate passed `wfA` within the attempts allowed.
pub fn gen_wf_term(cfg: &GenConfig) -> Option<(ExtContext, Term)> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg,
        counter: 0,
    };
    let ctx = ExtContext::empty();
    let min_size = (cfg.target_size / 2).max(1);
    let mut best: Option<Term> = None;
    for _ in 0..64 {
        let t = g.term(&ctx, cfg.target_size).term;
        if best.as_ref().is_some_and(|b| b.size() >= t.size()) {
            continue;
        }
        let mut b = Budget::new(cfg.fuel);
        if algo_wf(&ctx, &t, &mut b).ok() == Some(Verdict::Yes) {
            if t.size() >= min_size {
                return Some((ctx, t));
            }
            best = Some(t);
        }
    }
    best.map(|t| (ctx, t))
}

/// An arbitrary term of roughly `size` nodes over `vars`.
pub fn random_term(rng: &mut impl Rng, size: usize, vars: &[Name]) -> Term {
    fn go(rng: &mut impl Rng, size: usize, vars: &mut Vec<Name>, depth: usize) -> Term {
        if size <= 2 {
            if vars.is_empty() || rng.gen_bool(0.3) {
                return Term::Top;
            }
            return Term::Var(vars.choose(rng).unwrap().clone());
        }
        let left = rng.gen_range(1..size - 1).max(1);
        let right = (size - 1 - left).max(1);
        if rng.gen_bool(0.5) {
            let a = go(rng, left, vars, depth);
            let x = Name::new(&format!("r{depth}"));
            vars.push(x.clone());
            let b = go(rng, right, vars, depth + 1);
            vars.pop();
            Term::abs(x, a, b)
        } else {
            Term::app(go(rng, left, vars, depth), go(rng, right, vars, depth))
        }
    }
    let mut vs = vars.to_vec();
    go(rng, size.max(1), &mut vs, 0)
}

/// An arbitrary abstraction of roughly `size` nodes over `vars`.
pub fn random_abs(rng: &mut impl Rng, size: usize, vars: &[Name]) -> Term {
    let size = size.max(3);
    let left = rng.gen_range(1..size - 1);
    let a = random_term(rng, left, vars);
    let x = Name::new("p");
    let mut inner = vars.to_vec();
    inner.push(x.clone());
    let b = random_term(rng, size - 1 - left, &inner);
    Term::abs(x, a, b)
}

/// A prevalid context over `alphabet` with small random bounds and entries.
pub fn random_context(
    rng: &mut impl Rng,
    alphabet: &[Name],
    max_annots: usize,
    max_stack: usize,
    max_entry_size: usize,
) -> ExtContext {
    let mut names = alphabet.to_vec();
    names.shuffle(rng);
    let n = rng.gen_range(0..=max_annots.min(names.len()));
    let mut ctx = ExtContext::empty();
    for x in names.into_iter().take(n) {
        let dom: Vec<Name> = ctx.dom().into_iter().collect();
        let size = rng.gen_range(1..=max_entry_size.max(1));
        let t = random_term(rng, size, &dom);
        ctx = ctx.push_annot(x, t);
    }
    let dom: Vec<Name> = ctx.dom().into_iter().collect();
    for _ in 0..rng.gen_range(0..=max_stack) {
        let size = rng.gen_range(1..=max_entry_size.max(1));
        ctx = ctx.push_arg(random_term(rng, size, &dom));
    }
    debug_assert!(ctx.is_prevalid());
    ctx
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_terms_are_wf() {
        let mut found = 0;
        for seed in 0..40 {
            if let Some((ctx, t)) = gen_wf_term(&GenConfig::new(seed, 9)) {
                let mut b = Budget::new(5_000);
                assert_eq!(algo_wf(&ctx, &t, &mut b).unwrap(), Verdict::Yes);
                found += 1;
            }
        }
        assert!(found > 30);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_wf_term(&GenConfig::new(7, 9)).map(|p| p.1);
        let b = gen_wf_term(&GenConfig::new(7, 9)).map(|p| p.1);
        assert_eq!(a.map(|t| t.to_string()), b.map(|t| t.to_string()));
    }

    #[test]
    fn random_contexts_are_prevalid() {
        let alphabet = [Name::new("x"), Name::new("y")];
        let mut rng = rng_for(3, 0);
        for _ in 0..200 {
            assert!(random_context(&mut rng, &alphabet, 2, 2, 4).is_prevalid());
        }
    }
}
