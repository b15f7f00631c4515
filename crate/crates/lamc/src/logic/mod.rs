//! Second-order formulas over a finite first-order structure.
//!
//! First-order terms denote values in `{0, .., N-1}`; function symbols come
//! from a fixed registry (`s`, `add`, `mul`, `min`, `max`, `or`, `and`,
//! `not`) and evaluate with *clamping*: results saturate at `N-1` instead of
//! wrapping around, so the finite structure is a prefix of the intended
//! infinite one.
//!
//! Formulas have two separate binder families — first-order `forall x` and
//! second-order `forall2 Z` — each with its own de Bruijn indices
//! ([`FoTerm::Bound`], [`PredRef::Bound`]). Free variables are named; closed
//! formulas are required for semantic computations. Binder name hints use
//! [`Binder`] and are ignored by equality.
//!
//! The core connectives are implication, the two universal quantifiers, the
//! equation-conditioned implication `a = b |> A` (which collapses to `A` when
//! the equation holds and to `Top`'s falsity otherwise), and the type-level
//! intersection `cap` / union `cup`. Everything else (equality, negation,
//! conjunction, disjunction, existentials) is second-order sugar, provided by
//! builder functions here and accepted by the parser.

pub mod families;
mod model;
mod parse;

pub use model::{sem_eq, sem_le, Falsity, FiniteModel, ModelBuilder, PoleSample, PredTable};
pub use parse::{parse_formula, parse_fo_term};

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::syntax::Binder;

/// Errors from formula construction and semantic evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("free individual variable '{name}' in a closed-formula context")]
    FreeIndVariable { name: String },
    #[error("free predicate variable '{name}' in a closed-formula context")]
    FreePredVariable { name: String },
    #[error("unknown function symbol '{name}'")]
    UnknownFunction { name: String },
    #[error("function '{name}' expects {want} arguments, got {got}")]
    FunctionArity { name: String, want: usize, got: usize },
    #[error("unknown predicate table '{name}'")]
    UnknownTable { name: String },
    #[error("table '{name}' has arity {want}, used with {got} arguments")]
    TableArity { name: String, want: usize, got: usize },
    #[error("table '{name}' entry uses value {value} outside 0..{n}")]
    TableValue { name: String, value: u64, n: u64 },
    #[error("second-order quantifier needs {bits} table bits; cap is {cap}")]
    CombinatorialBound { bits: u32, cap: u32 },
    #[error("process escapes the model world without resolving: {process}")]
    WorldEscape { process: String },
    #[error("model stack is not in the model: {stack}")]
    UnknownStack { stack: String },
    #[error("model world is not saturated: {process} reaches {target} whose stack is outside the stack list")]
    NotSaturated { process: String, target: String },
    #[error("model has {count} stacks; cap is {cap}")]
    TooManyStacks { count: usize, cap: usize },
    #[error("model has {count} terms; cap is {cap}")]
    TooManyTerms { count: usize, cap: usize },
    #[error("table '{name}' needs {want} rows for this arity and domain, got {got}")]
    TableShape { name: String, want: usize, got: usize },
    #[error("table '{name}' row references stack bit {bit}, but the model has {stacks} stacks")]
    TableRow { name: String, bit: usize, stacks: usize },
    #[error("explicit pole {index} is not closed under the evaluation rules")]
    InvalidPole { index: usize },
    #[error(transparent)]
    World(#[from] crate::multieval::MultiEvalError),
    #[error("formula parse error at byte {at}: {message}")]
    Parse { at: usize, message: String },
}

/// A first-order term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FoTerm {
    /// Free variable, by name.
    Var(String),
    /// Bound by the `i`-th enclosing first-order quantifier (0 = innermost).
    Bound(u32),
    /// Numeral; evaluates to `min(k, N-1)`.
    Lit(u64),
    /// Registered function application.
    App(String, Vec<FoTerm>),
}

impl FoTerm {
    pub fn var(name: &str) -> FoTerm {
        FoTerm::Var(name.into())
    }

    pub fn app(name: &str, args: impl IntoIterator<Item = FoTerm>) -> FoTerm {
        FoTerm::App(name.into(), args.into_iter().collect())
    }

    /// Successor (clamped).
    pub fn s(a: FoTerm) -> FoTerm {
        FoTerm::app("s", [a])
    }

    /// Arity of a registered function symbol.
    pub fn fn_arity(name: &str) -> Option<usize> {
        match name {
            "s" | "not" => Some(1),
            "add" | "mul" | "min" | "max" | "or" | "and" => Some(2),
            _ => None,
        }
    }

    /// Evaluates a registered function on values below `n`, clamping into
    /// `0..n`. Boolean functions read any nonzero value as true and return 0
    /// or 1.
    pub fn eval_fn(name: &str, args: &[u64], n: u64) -> Result<u64, LogicError> {
        let want = Self::fn_arity(name).ok_or_else(|| LogicError::UnknownFunction {
            name: name.into(),
        })?;
        if args.len() != want {
            return Err(LogicError::FunctionArity { name: name.into(), want, got: args.len() });
        }
        let clamp = |v: u64| v.min(n - 1);
        Ok(match name {
            "s" => clamp(args[0] + 1),
            "add" => clamp(args[0].saturating_add(args[1])),
            "mul" => clamp(args[0].saturating_mul(args[1])),
            "min" => args[0].min(args[1]),
            "max" => args[0].max(args[1]),
            "or" => clamp(u64::from(args[0] > 0 || args[1] > 0)),
            "and" => clamp(u64::from(args[0] > 0 && args[1] > 0)),
            "not" => clamp(u64::from(args[0] == 0)),
            _ => unreachable!("arity table covers the registry"),
        })
    }

    /// Evaluates in an environment for bound variables (innermost last).
    /// Free variables are an error: semantics only touch closed formulas.
    pub fn eval(&self, env: &[u64], n: u64) -> Result<u64, LogicError> {
        match self {
            FoTerm::Var(name) => Err(LogicError::FreeIndVariable { name: name.clone() }),
            FoTerm::Bound(i) => {
                let k = env
                    .len()
                    .checked_sub(1 + *i as usize)
                    .expect("bound index within the quantifier environment");
                Ok(env[k])
            }
            FoTerm::Lit(k) => Ok((*k).min(n - 1)),
            FoTerm::App(f, args) => {
                let vals: Vec<u64> =
                    args.iter().map(|a| a.eval(env, n)).collect::<Result<_, _>>()?;
                FoTerm::eval_fn(f, &vals, n)
            }
        }
    }

    /// Shifts bound indices at or above `cutoff` up by `by` (used when a term
    /// is spliced under extra first-order binders).
    fn shift(&self, by: u32, cutoff: u32) -> FoTerm {
        match self {
            FoTerm::Bound(i) if *i >= cutoff => FoTerm::Bound(i + by),
            FoTerm::Var(_) | FoTerm::Bound(_) | FoTerm::Lit(_) => self.clone(),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.shift(by, cutoff)).collect())
            }
        }
    }

    /// Replaces bound index `target` with `rep` (shifted under binders) and
    /// shifts higher indices down: the opening step of `forall x` elimination.
    fn open(&self, target: u32, rep: &FoTerm) -> FoTerm {
        match self {
            FoTerm::Bound(i) => {
                if *i == target {
                    rep.shift(target, 0)
                } else if *i > target {
                    FoTerm::Bound(i - 1)
                } else {
                    self.clone()
                }
            }
            FoTerm::Var(_) | FoTerm::Lit(_) => self.clone(),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.open(target, rep)).collect())
            }
        }
    }

    /// Closes the free variable `name` into bound index `depth`.
    fn close(&self, name: &str, depth: u32) -> FoTerm {
        match self {
            FoTerm::Var(n) if n == name => FoTerm::Bound(depth),
            FoTerm::Var(_) | FoTerm::Bound(_) | FoTerm::Lit(_) => self.clone(),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.close(name, depth)).collect())
            }
        }
    }

    /// Substitutes named free variables simultaneously.
    fn subst_vars(&self, map: &[(String, FoTerm)]) -> FoTerm {
        match self {
            FoTerm::Var(n) => map
                .iter()
                .find(|(k, _)| k == n)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| self.clone()),
            FoTerm::Bound(_) | FoTerm::Lit(_) => self.clone(),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.subst_vars(map)).collect())
            }
        }
    }

    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            FoTerm::Var(n) => {
                out.insert(n.clone());
            }
            FoTerm::Bound(_) | FoTerm::Lit(_) => {}
            FoTerm::App(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }
}

/// Reference to a predicate variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PredRef {
    /// Free, by name.
    Var(String),
    /// Bound by the `i`-th enclosing second-order quantifier (0 = innermost).
    Bound(u32),
}

/// A formula.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Top,
    Bot,
    /// Predicate-variable atom; arity is the argument count.
    Atom { pred: PredRef, args: Vec<FoTerm> },
    /// Predicate-constant atom, interpreted by a model table.
    Table { name: String, args: Vec<FoTerm> },
    Imp(Arc<Formula>, Arc<Formula>),
    /// First-order universal.
    AllInd(Binder, Arc<Formula>),
    /// Second-order universal over predicates of the given arity.
    AllPred(Binder, u32, Arc<Formula>),
    /// `lhs = rhs |> body`: body if the equation holds, trivial otherwise.
    EqImp { lhs: FoTerm, rhs: FoTerm, body: Arc<Formula> },
    /// Type intersection: realized by terms realizing both sides.
    Inter(Arc<Formula>, Arc<Formula>),
    /// Type union: realized by terms realizing either side.
    Union(Arc<Formula>, Arc<Formula>),
}

impl Formula {
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Arc::new(a), Arc::new(b))
    }

    /// Right-associated chain `h1 -> h2 -> ... -> conclusion`.
    pub fn imp_chain(
        hyps: impl IntoIterator<Item = Formula, IntoIter: DoubleEndedIterator>,
        conclusion: Formula,
    ) -> Formula {
        hyps.into_iter().rev().fold(conclusion, |acc, h| Formula::imp(h, acc))
    }

    pub fn atom(pred: PredRef, args: impl IntoIterator<Item = FoTerm>) -> Formula {
        Formula::Atom { pred, args: args.into_iter().collect() }
    }

    pub fn table(name: &str, args: impl IntoIterator<Item = FoTerm>) -> Formula {
        Formula::Table { name: name.into(), args: args.into_iter().collect() }
    }

    pub fn inter(a: Formula, b: Formula) -> Formula {
        Formula::Inter(Arc::new(a), Arc::new(b))
    }

    pub fn union(a: Formula, b: Formula) -> Formula {
        Formula::Union(Arc::new(a), Arc::new(b))
    }

    pub fn eq_imp(lhs: FoTerm, rhs: FoTerm, body: Formula) -> Formula {
        Formula::EqImp { lhs, rhs, body: Arc::new(body) }
    }

    /// Binds the free individual variable `name`: `forall name. body`.
    pub fn forall_ind(name: &str, body: Formula) -> Formula {
        Formula::AllInd(Binder::named(name), Arc::new(body.close_ind(name, 0)))
    }

    /// Binds the free predicate variable `name` at the given arity.
    pub fn forall_pred(name: &str, arity: u32, body: Formula) -> Formula {
        Formula::AllPred(Binder::named(name), arity, Arc::new(body.close_pred(name, 0)))
    }

    // ---- sugar ----

    /// Leibniz equality: `forall2 Z (Z(a) -> Z(b))`.
    pub fn eq(a: FoTerm, b: FoTerm) -> Formula {
        Formula::AllPred(
            Binder::named("Z"),
            1,
            Arc::new(Formula::imp(
                Formula::atom(PredRef::Bound(0), [a]),
                Formula::atom(PredRef::Bound(0), [b]),
            )),
        )
    }

    /// Disequality: `(a = b) |> Bot`.
    pub fn neq(a: FoTerm, b: FoTerm) -> Formula {
        Formula::eq_imp(a, b, Formula::Bot)
    }

    /// Negation: `A -> Bot`. (A builder, not [`std::ops::Not`]: formulas are
    /// built by name like the other connectives here.)
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bot)
    }

    /// Second-order conjunction: `forall2 Z ((A -> B -> Z) -> Z)`.
    pub fn and(a: Formula, b: Formula) -> Formula {
        let z = Formula::atom(PredRef::Bound(0), []);
        let body = Formula::imp(
            Formula::imp(a.shift_pred(1, 0), Formula::imp(b.shift_pred(1, 0), z.clone())),
            z,
        );
        Formula::AllPred(Binder::named("Z"), 0, Arc::new(body))
    }

    /// Second-order disjunction: `forall2 Z ((A -> Z) -> (B -> Z) -> Z)`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        let z = || Formula::atom(PredRef::Bound(0), []);
        let body = Formula::imp(
            Formula::imp(a.shift_pred(1, 0), z()),
            Formula::imp(Formula::imp(b.shift_pred(1, 0), z()), z()),
        );
        Formula::AllPred(Binder::named("Z"), 0, Arc::new(body))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    /// Second-order existential: `forall2 Z ((forall name (A -> Z)) -> Z)`.
    pub fn exists_ind(name: &str, body: Formula) -> Formula {
        let z = || Formula::atom(PredRef::Bound(0), []);
        let inner = Formula::forall_ind(name, Formula::imp(body.shift_pred(1, 0), z()));
        Formula::AllPred(Binder::named("Z"), 0, Arc::new(Formula::imp(inner, z())))
    }

    /// `forall2 Z ((forall2 name (A -> Z)) -> Z)`.
    pub fn exists_pred(name: &str, arity: u32, body: Formula) -> Formula {
        let z = || Formula::atom(PredRef::Bound(0), []);
        let inner = Formula::forall_pred(name, arity, Formula::imp(body.shift_pred(1, 0), z()));
        Formula::AllPred(Binder::named("Z"), 0, Arc::new(Formula::imp(inner, z())))
    }

    // ---- structural operations ----

    fn close_ind(&self, name: &str, depth: u32) -> Formula {
        self.map(
            &mut |t, d, _| t.close(name, depth + d),
            &mut |p, _, _| p.clone(),
        )
    }

    fn close_pred(&self, name: &str, depth: u32) -> Formula {
        self.map(
            &mut |t, _, _| t.clone(),
            &mut |p, _, d2| match p {
                PredRef::Var(n) if n == name => PredRef::Bound(depth + d2),
                _ => p.clone(),
            },
        )
    }

    /// Shifts second-order bound indices at or above `cutoff` by `by`.
    fn shift_pred(&self, by: u32, cutoff: u32) -> Formula {
        self.map(
            &mut |t, _, _| t.clone(),
            &mut |p, _, d2| match p {
                PredRef::Bound(i) if *i >= cutoff + d2 => PredRef::Bound(i + by),
                _ => p.clone(),
            },
        )
    }

    /// Shifts first-order bound indices at or above `cutoff` by `by`.
    fn shift_ind(&self, by: u32, cutoff: u32) -> Formula {
        self.map(
            &mut |t, d, _| t.shift(by, cutoff + d),
            &mut |p, _, _| p.clone(),
        )
    }

    /// Rebuilds the formula, rewriting terms and predicate references with
    /// the current binder depths (first-order, second-order).
    fn map(
        &self,
        ft: &mut dyn FnMut(&FoTerm, u32, u32) -> FoTerm,
        fp: &mut dyn FnMut(&PredRef, u32, u32) -> PredRef,
    ) -> Formula {
        self.map_at(0, 0, ft, fp)
    }

    fn map_at(
        &self,
        d: u32,
        d2: u32,
        ft: &mut dyn FnMut(&FoTerm, u32, u32) -> FoTerm,
        fp: &mut dyn FnMut(&PredRef, u32, u32) -> PredRef,
    ) -> Formula {
        match self {
            Formula::Top => Formula::Top,
            Formula::Bot => Formula::Bot,
            Formula::Atom { pred, args } => Formula::Atom {
                pred: fp(pred, d, d2),
                args: args.iter().map(|a| ft(a, d, d2)).collect(),
            },
            Formula::Table { name, args } => Formula::Table {
                name: name.clone(),
                args: args.iter().map(|a| ft(a, d, d2)).collect(),
            },
            Formula::Imp(a, b) => Formula::Imp(
                Arc::new(a.map_at(d, d2, ft, fp)),
                Arc::new(b.map_at(d, d2, ft, fp)),
            ),
            Formula::AllInd(h, b) => {
                Formula::AllInd(h.clone(), Arc::new(b.map_at(d + 1, d2, ft, fp)))
            }
            Formula::AllPred(h, k, b) => {
                Formula::AllPred(h.clone(), *k, Arc::new(b.map_at(d, d2 + 1, ft, fp)))
            }
            Formula::EqImp { lhs, rhs, body } => Formula::EqImp {
                lhs: ft(lhs, d, d2),
                rhs: ft(rhs, d, d2),
                body: Arc::new(body.map_at(d, d2, ft, fp)),
            },
            Formula::Inter(a, b) => Formula::Inter(
                Arc::new(a.map_at(d, d2, ft, fp)),
                Arc::new(b.map_at(d, d2, ft, fp)),
            ),
            Formula::Union(a, b) => Formula::Union(
                Arc::new(a.map_at(d, d2, ft, fp)),
                Arc::new(b.map_at(d, d2, ft, fp)),
            ),
        }
    }

    /// Opens the body of a first-order universal with a term: bound index 0
    /// (relative to the removed binder) becomes `term`.
    pub fn open_ind(body: &Formula, term: &FoTerm) -> Formula {
        body.map(&mut |t, d, _| t.open(d, term), &mut |p, _, _| p.clone())
    }

    /// Opens the body of a second-order universal with a fresh free predicate
    /// name (the introduction direction).
    pub fn open_pred_var(body: &Formula, name: &str) -> Formula {
        body.map(
            &mut |t, _, _| t.clone(),
            &mut |p, _, d2| match p {
                PredRef::Bound(i) if *i == d2 => PredRef::Var(name.into()),
                PredRef::Bound(i) if *i > d2 => PredRef::Bound(i - 1),
                _ => p.clone(),
            },
        )
    }

    /// Opens the body of a second-order universal with a predicate payload:
    /// atoms of the removed binder at arguments `a...` become
    /// `payload[params := a...]`. The payload is a formula over the named
    /// parameters; its other free names pass through.
    pub fn open_pred(body: &Formula, params: &[String], payload: &Formula) -> Formula {
        body.open_pred_at(0, 0, params, payload)
    }

    fn open_pred_at(
        &self,
        d: u32,
        d2: u32,
        params: &[String],
        payload: &Formula,
    ) -> Formula {
        match self {
            Formula::Atom { pred: PredRef::Bound(i), args } if *i == d2 => {
                // Splice the payload, substituting the parameters. The
                // payload was written outside the quantifier, so its free
                // indices (if any) climb over the binders crossed on the way
                // in; the argument terms shift under the payload's own
                // binders inside subst_params.
                debug_assert_eq!(params.len(), args.len(), "payload arity");
                payload.shift_ind(d, 0).shift_pred(d2, 0).subst_params(params, args)
            }
            Formula::Atom { pred: PredRef::Bound(i), args } if *i > d2 => Formula::Atom {
                pred: PredRef::Bound(i - 1),
                args: args.clone(),
            },
            Formula::Atom { .. } | Formula::Table { .. } | Formula::Top | Formula::Bot => {
                self.clone()
            }
            Formula::Imp(a, b) => Formula::Imp(
                Arc::new(a.open_pred_at(d, d2, params, payload)),
                Arc::new(b.open_pred_at(d, d2, params, payload)),
            ),
            Formula::AllInd(h, b) => {
                Formula::AllInd(h.clone(), Arc::new(b.open_pred_at(d + 1, d2, params, payload)))
            }
            Formula::AllPred(h, k, b) => Formula::AllPred(
                h.clone(),
                *k,
                Arc::new(b.open_pred_at(d, d2 + 1, params, payload)),
            ),
            Formula::EqImp { lhs, rhs, body } => Formula::EqImp {
                lhs: lhs.clone(),
                rhs: rhs.clone(),
                body: Arc::new(body.open_pred_at(d, d2, params, payload)),
            },
            Formula::Inter(a, b) => Formula::Inter(
                Arc::new(a.open_pred_at(d, d2, params, payload)),
                Arc::new(b.open_pred_at(d, d2, params, payload)),
            ),
            Formula::Union(a, b) => Formula::Union(
                Arc::new(a.open_pred_at(d, d2, params, payload)),
                Arc::new(b.open_pred_at(d, d2, params, payload)),
            ),
        }
    }

    /// Substitutes named parameters in a payload, shifting the argument terms
    /// under the payload's own first-order binders.
    fn subst_params(&self, params: &[String], args: &[FoTerm]) -> Formula {
        self.map(
            &mut |t, d, _| {
                let shifted: Vec<(String, FoTerm)> = params
                    .iter()
                    .cloned()
                    .zip(args.iter().map(|a| a.shift(d, 0)))
                    .collect();
                t.subst_vars(&shifted)
            },
            &mut |p, _, _| p.clone(),
        )
    }

    /// Free individual variable names.
    pub fn free_ind_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let _ = self.map(
            &mut |t, _, _| {
                t.free_vars_into(&mut out);
                t.clone()
            },
            &mut |p, _, _| p.clone(),
        );
        out
    }

    /// Free predicate variable names.
    pub fn free_pred_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let _ = self.map(
            &mut |t, _, _| t.clone(),
            &mut |p, _, _| {
                if let PredRef::Var(n) = p {
                    out.insert(n.clone());
                }
                p.clone()
            },
        );
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_ind_vars().is_empty() && self.free_pred_vars().is_empty()
    }
}
