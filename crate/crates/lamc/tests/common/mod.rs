//! Shared helpers for the integration tests. The centerpiece is a
//! brute-force falsity evaluator used as an oracle against the vectorized
//! engine: same clauses, but the simplest possible strategy — one pole at a
//! time, no bitset transposition, no caching.

#![allow(dead_code)]

use std::collections::HashSet;

use lamc::logic::{FiniteModel, Formula, PredRef};
use lamc::machine::{step, StepOutcome};
use lamc::multieval::ProcSet;
use lamc::syntax::{Process, Stack, Term};

const ORACLE_FUEL: u32 = 10_000;

/// Pole membership of an arbitrary process: world members answer directly,
/// everything else follows deterministic steps until it enters the world or
/// dies (stuck or cycling out of the world count as rejected).
pub fn in_pole(m: &FiniteModel, pole: ProcSet, p: &Process) -> bool {
    let mut seen: HashSet<Process> = HashSet::new();
    let mut cur = p.clone();
    for _ in 0..ORACLE_FUEL {
        if let Some(i) = m.world().position(&cur) {
            return pole.contains(i);
        }
        match step(&cur) {
            StepOutcome::Stuck(_) => return false,
            StepOutcome::Step { next, .. } => {
                if !seen.insert(cur) {
                    return false;
                }
                cur = next;
            }
        }
    }
    panic!("oracle: {p} does not resolve within the fuel bound");
}

/// Brute-force falsity of a closed formula at one pole, as a bit mask over
/// the model's stack universe.
pub fn falsity_oracle(m: &FiniteModel, f: &Formula, pole: ProcSet) -> u64 {
    Oracle::new(m, pole).eval(f, &mut Vec::new(), &mut Vec::new())
}

/// Brute-force realizability of a closed formula by a term at one pole:
/// `t ⋆ π` accepted for every `π` in the falsity.
pub fn realizes_oracle(m: &FiniteModel, t: &Term, f: &Formula, pole: ProcSet) -> bool {
    let mask = falsity_oracle(m, f, pole);
    m.stacks().iter().enumerate().all(|(si, s)| {
        mask & (1 << si) == 0
            || in_pole(m, pole, &Process::new(t.clone(), s.clone()).unwrap())
    })
}

struct Oracle<'a> {
    m: &'a FiniteModel,
    pole: ProcSet,
    /// `pair[ti * sigma + si]`: is `terms[ti] ⋆ stacks[si]` accepted?
    pair: Vec<bool>,
    /// Head term index and tail stack index of each push stack, when the
    /// tail is itself a universe stack.
    split: Vec<Option<(usize, usize)>>,
    full: u64,
}

impl<'a> Oracle<'a> {
    fn new(m: &'a FiniteModel, pole: ProcSet) -> Oracle<'a> {
        let sigma = m.stacks().len();
        let mut pair = Vec::with_capacity(m.terms().len() * sigma);
        for t in m.terms() {
            for s in m.stacks() {
                let p = Process::new(t.clone(), s.clone()).unwrap();
                pair.push(in_pole(m, pole, &p));
            }
        }
        let split = m
            .stacks()
            .iter()
            .map(|s| match s {
                Stack::Bottom(_) => None,
                Stack::Push(h, tail) => {
                    let hi = m
                        .term_index(h)
                        .expect("stack elements are universe terms");
                    m.stack_index(tail).map(|ti| (hi, ti))
                }
            })
            .collect();
        let full = if sigma == 0 { 0 } else { (1u64 << sigma) - 1 };
        Oracle { m, pole, pair, split, full }
    }

    /// Is every falsity stack of the mask accepted when faced by term `ti`?
    fn dual_has(&self, ti: usize, mask: u64) -> bool {
        let sigma = self.m.stacks().len();
        (0..sigma).all(|si| mask & (1 << si) == 0 || self.pair[ti * sigma + si])
    }

    fn eval(&self, f: &Formula, ind: &mut Vec<u64>, pred: &mut Vec<(u32, Vec<u64>)>) -> u64 {
        let n = self.m.n();
        match f {
            Formula::Top => 0,
            Formula::Bot => self.full,
            Formula::Atom { pred: pref, args } => {
                let i = match pref {
                    PredRef::Bound(i) => *i as usize,
                    PredRef::Var(name) => panic!("oracle: free predicate {name}"),
                };
                let (arity, rows) = &pred[pred.len() - 1 - i];
                let vals: Vec<u64> =
                    args.iter().map(|a| a.eval(ind, n).unwrap()).collect();
                assert_eq!(vals.len(), *arity as usize);
                let idx = vals.iter().fold(0usize, |acc, &v| acc * n as usize + v as usize);
                rows[idx]
            }
            Formula::Table { name, args } => {
                let table = self.m.named_table(name).expect("oracle: unknown table");
                let vals: Vec<u64> =
                    args.iter().map(|a| a.eval(ind, n).unwrap()).collect();
                table.lookup(&vals, n).unwrap()
            }
            Formula::Imp(a, b) => {
                let fb = self.eval(b, ind, pred);
                if fb == 0 {
                    return 0;
                }
                let fa = self.eval(a, ind, pred);
                let mut out = 0u64;
                for (si, split) in self.split.iter().enumerate() {
                    if let Some((hi, tail)) = split {
                        if fb & (1 << tail) != 0 && self.dual_has(*hi, fa) {
                            out |= 1 << si;
                        }
                    }
                }
                out
            }
            Formula::AllInd(_, body) => {
                let mut out = 0u64;
                for v in 0..n {
                    ind.push(v);
                    out |= self.eval(body, ind, pred);
                    ind.pop();
                }
                out
            }
            Formula::AllPred(_, arity, body) => {
                let sigma = self.m.stacks().len();
                let tuples = (n as usize).pow(*arity);
                let bits = tuples * sigma;
                assert!(bits <= 20, "oracle: table space too large ({bits} bits)");
                let mut out = 0u64;
                for code in 0u64..(1u64 << bits) {
                    let rows: Vec<u64> = (0..tuples)
                        .map(|i| (code >> (i * sigma)) & self.full)
                        .collect();
                    pred.push((*arity, rows));
                    out |= self.eval(body, ind, pred);
                    pred.pop();
                    if out == self.full {
                        break;
                    }
                }
                out
            }
            Formula::EqImp { lhs, rhs, body } => {
                if lhs.eval(ind, n).unwrap() == rhs.eval(ind, n).unwrap() {
                    self.eval(body, ind, pred)
                } else {
                    0
                }
            }
            Formula::Inter(a, b) => self.eval(a, ind, pred) | self.eval(b, ind, pred),
            Formula::Union(a, b) => self.eval(a, ind, pred) & self.eval(b, ind, pred),
        }
    }
}
