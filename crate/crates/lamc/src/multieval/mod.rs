//! Finite process worlds, poles, and multi-evaluation relations.
//!
//! A *world* is a finite set of processes closed under the behavior of
//! interest (deterministic steps, and rule instances when rules are in play).
//! Subsets of a world are packed into [`ProcSet`] bit masks.
//!
//! A *pole* is a subset of a world that is closed under anti-evaluation: if
//! every target of some rule instance for `p` lies in the pole, then `p` does
//! too. For the deterministic machine this is the usual "closed under
//! anti-step" condition.
//!
//! A *multi-evaluation relation* relates a set of processes `P` to a set `Q`
//! (`P > Q`): intuitively, if all of `Q` terminates-or-is-accepted then some
//! member of `P` is. The axioms are identity, weakening, a cut rule, and the
//! embedding of deterministic steps. [`relation::poles_of_relation`] and
//! [`relation::relation_of`] realize the two directions of the duality between
//! relations and pole families, and [`relation::closure`] builds the least
//! relation over a world containing a seed.

pub mod membership;
pub mod relation;
pub mod rules;

pub use membership::{pole_membership, replay, Justification, Membership, ReplayError, Verdict};
pub use relation::{check_axioms, closure, poles_of_relation, poles_of_rules, relation_of,
    AxiomReport, FiniteRelation};
pub use rules::{fork, choose, RuleInstance, RuleSchema, RuleSet};

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;

use crate::machine::{step, StepOutcome};
use crate::syntax::Process;

/// Largest world size for pole enumeration (2^16 subsets).
pub const MAX_POLE_WORLD: usize = 16;
/// Largest world size for materialized relations and closure (2^12 subsets).
pub const MAX_RELATION_WORLD: usize = 12;

/// Errors from world and relation operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MultiEvalError {
    #[error("world has {size} processes; this operation caps at {cap}")]
    WorldTooLarge { size: usize, cap: usize },
    #[error("process is not in the world: {process}")]
    UnknownProcess { process: String },
    #[error("world is not closed: {process} reaches {target} (schema {schema})")]
    NotClosed { process: String, target: String, schema: String },
    #[error("closure antichain exceeded {cap} pairs; world too entangled for desk scale")]
    ClosureBlowup { cap: usize },
    #[error("relation width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
}

/// A subset of a world's processes, packed into a bit mask.
///
/// Bit `i` is the world's `i`-th process (in the world's canonical order).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProcSet(pub u32);

impl ProcSet {
    pub const EMPTY: ProcSet = ProcSet(0);

    pub fn full(n: usize) -> ProcSet {
        debug_assert!(n <= 32);
        if n == 32 {
            ProcSet(u32::MAX)
        } else {
            ProcSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> ProcSet {
        ProcSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> ProcSet {
        ProcSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> ProcSet {
        ProcSet(self.0 & !(1 << i))
    }

    pub fn union(self, other: ProcSet) -> ProcSet {
        ProcSet(self.0 | other.0)
    }

    pub fn inter(self, other: ProcSet) -> ProcSet {
        ProcSet(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: ProcSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Indices of the members, ascending.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for ProcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A pole is a subset of the world; the enumeration functions only produce
/// anti-evaluation-closed ones.
pub type Pole = ProcSet;

/// A finite, canonically ordered set of processes.
#[derive(Clone, Debug)]
pub struct FiniteWorld {
    procs: Vec<Process>,
    index: HashMap<Process, usize>,
}

impl FiniteWorld {
    /// Builds a world from processes, deduplicating and fixing a canonical
    /// (structural) order.
    pub fn new(procs: impl IntoIterator<Item = Process>) -> FiniteWorld {
        let set: BTreeSet<Process> = procs.into_iter().collect();
        let procs: Vec<Process> = set.into_iter().collect();
        let index = procs.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        FiniteWorld { procs, index }
    }

    pub fn len(&self) -> usize {
        self.procs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    pub fn procs(&self) -> &[Process] {
        &self.procs
    }

    pub fn get(&self, i: usize) -> &Process {
        &self.procs[i]
    }

    pub fn position(&self, p: &Process) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Packs processes into a mask; errors on processes outside the world.
    pub fn mask_of<'a>(
        &self,
        procs: impl IntoIterator<Item = &'a Process>,
    ) -> Result<ProcSet, MultiEvalError> {
        let mut m = ProcSet::EMPTY;
        for p in procs {
            let i = self.position(p).ok_or_else(|| MultiEvalError::UnknownProcess {
                process: p.to_string(),
            })?;
            m = m.with(i);
        }
        Ok(m)
    }

    /// Deterministic-step pairs `(i, j)` staying inside the world, plus the
    /// violations that leave it.
    #[allow(clippy::type_complexity)]
    pub fn det_edges(&self) -> (Vec<(usize, usize)>, Vec<(Process, Process)>) {
        let mut edges = Vec::new();
        let mut violations = Vec::new();
        for (i, p) in self.procs.iter().enumerate() {
            if let StepOutcome::Step { next, .. } = step(p) {
                match self.position(&next) {
                    Some(j) => edges.push((i, j)),
                    None => violations.push((p.clone(), next)),
                }
            }
        }
        (edges, violations)
    }

    /// Checks closure under deterministic steps.
    pub fn require_det_closed(&self) -> Result<Vec<(usize, usize)>, MultiEvalError> {
        let (edges, violations) = self.det_edges();
        if let Some((p, q)) = violations.into_iter().next() {
            return Err(MultiEvalError::NotClosed {
                process: p.to_string(),
                target: q.to_string(),
                schema: "det".into(),
            });
        }
        Ok(edges)
    }

    /// All rule instances of world members, with targets resolved to indices.
    /// Errors if a target escapes the world.
    pub fn rule_instances(
        &self,
        rules: &rules::RuleSet,
    ) -> Result<Vec<(usize, ProcSet, RuleInstance)>, MultiEvalError> {
        let mut out = Vec::new();
        for (i, p) in self.procs.iter().enumerate() {
            for inst in rules.instances(p) {
                let mut mask = ProcSet::EMPTY;
                for t in &inst.targets {
                    match self.position(t) {
                        Some(j) => mask = mask.with(j),
                        None => {
                            return Err(MultiEvalError::NotClosed {
                                process: p.to_string(),
                                target: t.to_string(),
                                schema: inst.schema.clone(),
                            })
                        }
                    }
                }
                out.push((i, mask, inst));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    #[test]
    fn procset_ops() {
        let a = ProcSet::singleton(0).with(3);
        assert!(a.contains(0) && a.contains(3) && !a.contains(1));
        assert_eq!(a.len(), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 3]);
        assert!(a.is_subset_of(ProcSet::full(4)));
        assert!(!ProcSet::full(4).is_subset_of(a));
        assert_eq!(a.without(3), ProcSet::singleton(0));
    }

    #[test]
    fn world_is_canonical_and_deduplicated() {
        let p1 = parse_process("#a0 * e0").unwrap();
        let p2 = parse_process("#a1 * e0").unwrap();
        let w = FiniteWorld::new([p2.clone(), p1.clone(), p2.clone()]);
        assert_eq!(w.len(), 2);
        assert!(w.position(&p1).is_some());
        let again = FiniteWorld::new([p1, p2]);
        assert_eq!(w.procs(), again.procs());
    }

    #[test]
    fn det_edges_and_closure() {
        let a = parse_process("(\\x. x) #a0 * e0").unwrap();
        let b = parse_process("\\x. x * #a0 . e0").unwrap();
        let c = parse_process("#a0 * e0").unwrap();
        let w = FiniteWorld::new([a.clone(), b, c]);
        let edges = w.require_det_closed().unwrap();
        assert_eq!(edges.len(), 2);

        let open = FiniteWorld::new([a]);
        assert!(open.require_det_closed().is_err());
    }
}
