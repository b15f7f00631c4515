//! Terms, stacks and processes.
//!
//! Terms are lambda terms extended with the control operator `cc`, continuation
//! constants (saved stacks), and two indexed families of inert instructions.
//! Variables are de Bruijn indices; an index that points past the enclosing
//! binders is a free variable. Closed terms have no such index.
//!
//! Stacks are lists of *closed* terms ending in an indexed bottom marker `eN`.
//! A process pairs a closed term with a stack.
//!
//! Binder names are carried as [`Binder`] display hints that all comparisons
//! ignore, so the derived `Eq`/`Ord`/`Hash` on [`Term`] are alpha-equivalence.

mod parse;
mod print;

pub use parse::{parse_process, parse_stack, parse_term, parse_term_with_env, ParseError};
pub use print::display_with_env;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// A binder-name display hint.
///
/// Compares equal to every other hint (and hashes to nothing), so terms that
/// differ only in binder names are structurally equal. Printing falls back to
/// generated names when the hint is absent or shadowed.
#[derive(Clone, Default)]
pub struct Binder(pub Option<Arc<str>>);

impl Binder {
    pub fn named(name: &str) -> Self {
        Binder(Some(Arc::from(name)))
    }

    pub fn hint(&self) -> Option<&str> {
        self.0.as_deref()
    }
}

impl PartialEq for Binder {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Binder {}

impl PartialOrd for Binder {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Binder {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl Hash for Binder {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for Binder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "_"),
        }
    }
}

/// Instruction family: plain instructions may appear in proof-like terms,
/// restricted ones may not.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum InstrKind {
    /// Printed `#aN`.
    Unrestricted,
    /// Printed `#bN`.
    Restricted,
}

/// An inert instruction constant.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Instr {
    pub kind: InstrKind,
    pub index: u32,
}

impl Instr {
    pub fn unrestricted(index: u32) -> Self {
        Instr { kind: InstrKind::Unrestricted, index }
    }

    pub fn restricted(index: u32) -> Self {
        Instr { kind: InstrKind::Restricted, index }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            InstrKind::Unrestricted => 'a',
            InstrKind::Restricted => 'b',
        };
        write!(f, "#{}{}", c, self.index)
    }
}

/// A term of the calculus.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    /// De Bruijn index: 0 is the innermost binder.
    Var(u32),
    Abs(Binder, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    /// The control operator; saves the current stack.
    Callcc,
    /// A continuation constant: a saved stack.
    Cont(Arc<Stack>),
    Instr(Instr),
}

/// A stack: closed terms pushed on an indexed bottom marker.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Stack {
    /// Bottom marker `eN`.
    Bottom(u32),
    /// A closed term on top of a stack.
    Push(Arc<Term>, Arc<Stack>),
}

/// A process: a closed term facing a stack.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Process {
    pub term: Arc<Term>,
    pub stack: Arc<Stack>,
}

/// Errors from validating constructors and substitution.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("term is not closed: free index {index} escapes {binders} binders")]
    NotClosed { index: u32, binders: u32 },
    #[error("substitution replacement for index {index} is not closed")]
    OpenReplacement { index: u32 },
    #[error("free index {index} has no replacement")]
    UnboundIndex { index: u32 },
}

impl Term {
    pub fn var(index: u32) -> Self {
        Term::Var(index)
    }

    /// Abstraction with a named display hint.
    pub fn lam(name: &str, body: Term) -> Self {
        Term::Abs(Binder::named(name), Arc::new(body))
    }

    /// Abstraction without a display hint.
    pub fn abs(body: Term) -> Self {
        Term::Abs(Binder::default(), Arc::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Self {
        Term::App(Arc::new(fun), Arc::new(arg))
    }

    /// Left-associated application of `head` to `args`.
    pub fn apply(head: Term, args: impl IntoIterator<Item = Term>) -> Self {
        args.into_iter().fold(head, Term::app)
    }

    pub fn instr(i: Instr) -> Self {
        Term::Instr(i)
    }

    pub fn cont(stack: Stack) -> Self {
        Term::Cont(Arc::new(stack))
    }

    /// The identity term.
    pub fn id() -> Self {
        Term::lam("x", Term::var(0))
    }

    /// True iff every variable is bound by one of `depth` enclosing binders.
    pub fn is_closed_at(&self, depth: u32) -> bool {
        match self {
            Term::Var(i) => *i < depth,
            Term::Abs(_, b) => b.is_closed_at(depth + 1),
            Term::App(f, a) => f.is_closed_at(depth) && a.is_closed_at(depth),
            Term::Callcc | Term::Instr(_) => true,
            Term::Cont(s) => s.is_closed(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.is_closed_at(0)
    }

    /// Number of syntax nodes (continuations count the saved stack too).
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Callcc | Term::Instr(_) => 1,
            Term::Abs(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Cont(s) => 1 + s.size(),
        }
    }

    /// True iff the term contains no continuation constant and no restricted
    /// instruction. Proof-like terms are the candidates produced by proofs:
    /// `cc` and unrestricted instructions are allowed.
    pub fn is_proof_like(&self) -> bool {
        match self {
            Term::Var(_) | Term::Callcc => true,
            Term::Instr(i) => i.kind == InstrKind::Unrestricted,
            Term::Cont(_) => false,
            Term::Abs(_, b) => b.is_proof_like(),
            Term::App(f, a) => f.is_proof_like() && a.is_proof_like(),
        }
    }

    /// Collects the instruction constants occurring anywhere in the term,
    /// including inside saved stacks.
    pub fn instructions(&self) -> BTreeSet<Instr> {
        let mut out = BTreeSet::new();
        self.collect_instructions(&mut out);
        out
    }

    fn collect_instructions(&self, out: &mut BTreeSet<Instr>) {
        match self {
            Term::Var(_) | Term::Callcc => {}
            Term::Instr(i) => {
                out.insert(*i);
            }
            Term::Abs(_, b) => b.collect_instructions(out),
            Term::App(f, a) => {
                f.collect_instructions(out);
                a.collect_instructions(out);
            }
            Term::Cont(s) => s.collect_instructions(out),
        }
    }

    /// Simultaneous substitution of closed terms for the free variables.
    ///
    /// Free index `depth + i` (under `depth` binders) is replaced by
    /// `replacements[i]`, so `replacements[0]` is the innermost hypothesis of
    /// a context telescope. Every replacement must be closed and every free
    /// index must be covered.
    pub fn substitute(&self, replacements: &[Term]) -> Result<Term, SyntaxError> {
        for (i, r) in replacements.iter().enumerate() {
            if !r.is_closed() {
                return Err(SyntaxError::OpenReplacement { index: i as u32 });
            }
        }
        self.subst_from(0, replacements)
    }

    fn subst_from(&self, depth: u32, replacements: &[Term]) -> Result<Term, SyntaxError> {
        Ok(match self {
            Term::Var(i) => {
                if *i < depth {
                    Term::Var(*i)
                } else {
                    let j = (*i - depth) as usize;
                    replacements
                        .get(j)
                        .cloned()
                        .ok_or(SyntaxError::UnboundIndex { index: *i - depth })?
                }
            }
            Term::Abs(hint, b) => {
                Term::Abs(hint.clone(), Arc::new(b.subst_from(depth + 1, replacements)?))
            }
            Term::App(f, a) => Term::App(
                Arc::new(f.subst_from(depth, replacements)?),
                Arc::new(a.subst_from(depth, replacements)?),
            ),
            Term::Callcc | Term::Instr(_) | Term::Cont(_) => self.clone(),
        })
    }

    /// Replaces the variable bound by the innermost binder with a closed term.
    ///
    /// This is the body side of the machine's grab rule: `self` is a binder
    /// body whose index 0 refers to the removed binder. Indices above it are
    /// shifted down, which only matters for open bodies.
    pub(crate) fn open_with(&self, replacement: &Term) -> Term {
        debug_assert!(replacement.is_closed());
        self.open_at(0, replacement)
    }

    fn open_at(&self, depth: u32, replacement: &Term) -> Term {
        match self {
            Term::Var(i) => {
                if *i == depth {
                    replacement.clone()
                } else if *i > depth {
                    Term::Var(*i - 1)
                } else {
                    Term::Var(*i)
                }
            }
            Term::Abs(hint, b) => {
                Term::Abs(hint.clone(), Arc::new(b.open_at(depth + 1, replacement)))
            }
            Term::App(f, a) => Term::App(
                Arc::new(f.open_at(depth, replacement)),
                Arc::new(a.open_at(depth, replacement)),
            ),
            Term::Callcc | Term::Instr(_) | Term::Cont(_) => self.clone(),
        }
    }
}

impl From<Instr> for Term {
    fn from(i: Instr) -> Self {
        Term::Instr(i)
    }
}

impl Stack {
    pub fn bottom(index: u32) -> Self {
        Stack::Bottom(index)
    }

    /// Pushes a term, validating that it is closed.
    pub fn push(term: Term, below: Stack) -> Result<Stack, SyntaxError> {
        if !term.is_closed() {
            return Err(SyntaxError::NotClosed { index: first_escape(&term), binders: 0 });
        }
        Ok(Stack::Push(Arc::new(term), Arc::new(below)))
    }

    /// Builds a stack from top-to-bottom elements over a bottom marker.
    pub fn from_terms(
        elems: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>,
        bottom: u32,
    ) -> Result<Stack, SyntaxError> {
        let mut s = Stack::Bottom(bottom);
        for t in elems.into_iter().rev() {
            s = Stack::push(t, s)?;
        }
        Ok(s)
    }

    pub(crate) fn push_raw(term: Arc<Term>, below: Arc<Stack>) -> Stack {
        debug_assert!(term.is_closed());
        Stack::Push(term, below)
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Stack::Bottom(_) => true,
            Stack::Push(t, s) => t.is_closed() && s.is_closed(),
        }
    }

    /// Number of pushed elements.
    pub fn depth(&self) -> usize {
        match self {
            Stack::Bottom(_) => 0,
            Stack::Push(_, s) => 1 + s.depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Stack::Bottom(_) => 1,
            Stack::Push(t, s) => t.size() + s.size(),
        }
    }

    /// Top-to-bottom elements.
    pub fn elems(&self) -> impl Iterator<Item = &Arc<Term>> {
        let mut cur = self;
        std::iter::from_fn(move || match cur {
            Stack::Bottom(_) => None,
            Stack::Push(t, s) => {
                cur = s;
                Some(t)
            }
        })
    }

    /// All suffixes of the stack, from the stack itself down to the bottom.
    pub fn suffixes(&self) -> Vec<Stack> {
        let mut out = vec![self.clone()];
        let mut cur = self;
        while let Stack::Push(_, s) = cur {
            out.push((**s).clone());
            cur = s;
        }
        out
    }

    pub fn bottom_index(&self) -> u32 {
        match self {
            Stack::Bottom(i) => *i,
            Stack::Push(_, s) => s.bottom_index(),
        }
    }

    fn collect_instructions(&self, out: &mut BTreeSet<Instr>) {
        match self {
            Stack::Bottom(_) => {}
            Stack::Push(t, s) => {
                t.collect_instructions(out);
                s.collect_instructions(out);
            }
        }
    }
}

impl Process {
    /// Pairs a term with a stack, validating that the term is closed.
    pub fn new(term: Term, stack: Stack) -> Result<Process, SyntaxError> {
        if !term.is_closed() {
            return Err(SyntaxError::NotClosed { index: first_escape(&term), binders: 0 });
        }
        Ok(Process { term: Arc::new(term), stack: Arc::new(stack) })
    }

    pub(crate) fn from_parts(term: Arc<Term>, stack: Arc<Stack>) -> Process {
        debug_assert!(term.is_closed());
        Process { term, stack }
    }

    pub fn size(&self) -> usize {
        self.term.size() + self.stack.size()
    }

    /// Instruction constants occurring in the term or the stack.
    pub fn instructions(&self) -> BTreeSet<Instr> {
        let mut out = self.term.instructions();
        self.stack.collect_instructions(&mut out);
        out
    }
}

/// Smallest escaping index of an open term, for error messages.
fn first_escape(t: &Term) -> u32 {
    fn walk(t: &Term, depth: u32) -> Option<u32> {
        match t {
            Term::Var(i) => (*i >= depth).then(|| *i - depth),
            Term::Abs(_, b) => walk(b, depth + 1),
            Term::App(f, a) => walk(f, depth).into_iter().chain(walk(a, depth)).min(),
            Term::Callcc | Term::Instr(_) | Term::Cont(_) => None,
        }
    }
    walk(t, 0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_equivalence_ignores_binder_names() {
        let a = Term::lam("x", Term::var(0));
        let b = Term::lam("y", Term::var(0));
        let c = Term::abs(Term::var(0));
        assert_eq!(a, b);
        assert_eq!(a, c);
        let mut set = BTreeSet::new();
        set.insert(a);
        assert!(set.contains(&b));
    }

    #[test]
    fn closedness() {
        assert!(Term::id().is_closed());
        assert!(!Term::var(0).is_closed());
        assert!(Term::lam("x", Term::lam("y", Term::var(1))).is_closed());
        assert!(!Term::lam("x", Term::var(1)).is_closed());
    }

    #[test]
    fn substitute_telescope() {
        // Under one binder, index 1 is the innermost telescope entry.
        let t = Term::lam("x", Term::app(Term::var(1), Term::var(0)));
        let got = t.substitute(&[Term::id()]).unwrap();
        assert_eq!(got, Term::lam("x", Term::app(Term::id(), Term::var(0))));
    }

    #[test]
    fn substitute_rejects_open_replacement() {
        let t = Term::var(0);
        assert_eq!(
            t.substitute(&[Term::var(3)]),
            Err(SyntaxError::OpenReplacement { index: 0 })
        );
    }

    #[test]
    fn substitute_rejects_uncovered_index() {
        let t = Term::app(Term::var(0), Term::var(1));
        assert_eq!(t.substitute(&[Term::id()]), Err(SyntaxError::UnboundIndex { index: 1 }));
    }

    #[test]
    fn open_with_replaces_innermost() {
        // (\x. \y. x y) opened with I gives \y. I y.
        let body = Term::lam("y", Term::app(Term::var(1), Term::var(0)));
        let got = body.open_with(&Term::id());
        assert_eq!(got, Term::lam("y", Term::app(Term::id(), Term::var(0))));
    }

    #[test]
    fn stack_push_validates() {
        assert!(Stack::push(Term::var(0), Stack::bottom(0)).is_err());
        let s = Stack::from_terms([Term::id(), Term::Callcc], 0).unwrap();
        assert_eq!(s.depth(), 2);
        assert_eq!(s.bottom_index(), 0);
        let tops: Vec<_> = s.elems().map(|t| (**t).clone()).collect();
        assert_eq!(tops, vec![Term::id(), Term::Callcc]);
    }

    #[test]
    fn suffixes_enumerate() {
        let s = Stack::from_terms([Term::id(), Term::Callcc], 0).unwrap();
        let sufs = s.suffixes();
        assert_eq!(sufs.len(), 3);
        assert_eq!(sufs[2], Stack::bottom(0));
    }

    #[test]
    fn proof_like() {
        assert!(Term::id().is_proof_like());
        assert!(Term::Callcc.is_proof_like());
        assert!(Term::instr(Instr::unrestricted(0)).is_proof_like());
        assert!(!Term::instr(Instr::restricted(0)).is_proof_like());
        assert!(!Term::cont(Stack::bottom(0)).is_proof_like());
    }
}
