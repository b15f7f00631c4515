//! Stratified pole membership for rule-generated relations.
//!
//! The least pole of a rule set is built in layers: layer 0 is empty, and a
//! process enters layer `r+1` when some rule instance for it has all targets
//! in layer `r`. Membership in *some* layer is what `pole_membership`
//! decides, up to a depth cap:
//!
//! - `In { depth }`: the process is in the layer `depth` (least such depth),
//!   witnessed by a justification tree that [`replay`] re-validates.
//! - `Out`: provably in no layer (every instance, at every expansion, runs
//!   into a process with no instances at all). Only finite search spaces can
//!   be proved out.
//! - `Unknown`: the cap truncated the search without a proof either way.

use std::collections::HashMap;

use super::rules::RuleSet;
use crate::syntax::Process;

/// Decision for a membership query.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    /// In the stratified pole, with the least layer.
    In { depth: u32 },
    /// Provably in no layer.
    Out,
    /// Undecided at the given depth cap.
    Unknown { cap: u32 },
}

/// A replayable witness: the instance used at each node.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Justification {
    pub process: Process,
    pub schema: String,
    pub label: String,
    pub premises: Vec<Justification>,
}

impl Justification {
    /// Height of the tree = the layer this witnesses.
    pub fn depth(&self) -> u32 {
        1 + self.premises.iter().map(Justification::depth).max().unwrap_or(0)
    }
}

/// Membership decision with its witness when in.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Membership {
    pub verdict: Verdict,
    pub justification: Option<Justification>,
}

#[derive(Clone, Debug)]
enum Res {
    In(Justification),
    Out,
    CapHit,
}

struct Search<'a> {
    rules: &'a RuleSet,
    /// Memo on (process, remaining budget). Out results are budget-free but
    /// storing them per budget keeps the table simple.
    memo: HashMap<(Process, u32), Res>,
}

impl Search<'_> {
    fn solve(&mut self, p: &Process, budget: u32) -> Res {
        if let Some(r) = self.memo.get(&(p.clone(), budget)) {
            return r.clone();
        }
        // Mark as cap-hit while exploring: a cycle within the current budget
        // cannot produce a witness of height <= budget anyway.
        self.memo.insert((p.clone(), budget), Res::CapHit);
        let insts = self.rules.instances(p);
        let res = if insts.is_empty() {
            Res::Out
        } else if budget == 0 {
            Res::CapHit
        } else {
            let mut all_out = true;
            let mut found: Option<Justification> = None;
            for inst in insts {
                let mut premises = Vec::with_capacity(inst.targets.len());
                let mut instance_out = false;
                let mut instance_capped = false;
                for t in &inst.targets {
                    match self.solve(t, budget - 1) {
                        Res::In(j) => premises.push(j),
                        Res::Out => {
                            instance_out = true;
                            break;
                        }
                        Res::CapHit => {
                            instance_capped = true;
                            break;
                        }
                    }
                }
                if !instance_out && !instance_capped {
                    found = Some(Justification {
                        process: p.clone(),
                        schema: inst.schema,
                        label: inst.label,
                        premises,
                    });
                    break;
                }
                if !instance_out {
                    all_out = false;
                }
            }
            match found {
                Some(j) => Res::In(j),
                None if all_out => Res::Out,
                None => Res::CapHit,
            }
        };
        self.memo.insert((p.clone(), budget), res.clone());
        res
    }
}

/// Decides membership in the stratified pole of `rules`, searching layers
/// `1..=depth_cap` in order, so an `In` verdict reports the least layer.
pub fn pole_membership(rules: &RuleSet, p: &Process, depth_cap: u32) -> Membership {
    let mut search = Search { rules, memo: HashMap::new() };
    for budget in 1..=depth_cap {
        match search.solve(p, budget) {
            Res::In(j) => {
                debug_assert!(j.depth() <= budget);
                return Membership {
                    verdict: Verdict::In { depth: budget },
                    justification: Some(j),
                };
            }
            Res::Out => return Membership { verdict: Verdict::Out, justification: None },
            Res::CapHit => {}
        }
    }
    Membership { verdict: Verdict::Unknown { cap: depth_cap }, justification: None }
}

/// Errors from replaying a justification.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("no instance of schema '{schema}' labeled '{label}' applies to {process}")]
    NoSuchInstance { process: String, schema: String, label: String },
    #[error("premises of {process} do not match the instance targets")]
    PremiseMismatch { process: String },
}

/// Re-validates a justification against the rules; returns the witnessed
/// layer (the tree height).
pub fn replay(rules: &RuleSet, j: &Justification) -> Result<u32, ReplayError> {
    let insts = rules.instances(&j.process);
    let inst = insts
        .into_iter()
        .find(|i| i.schema == j.schema && i.label == j.label)
        .ok_or_else(|| ReplayError::NoSuchInstance {
            process: j.process.to_string(),
            schema: j.schema.clone(),
            label: j.label.clone(),
        })?;
    if inst.targets.len() != j.premises.len()
        || inst
            .targets
            .iter()
            .zip(&j.premises)
            .any(|(t, pj)| t != &pj.process)
    {
        return Err(ReplayError::PremiseMismatch { process: j.process.to_string() });
    }
    let mut depth = 0;
    for pj in &j.premises {
        depth = depth.max(replay(rules, pj)?);
    }
    Ok(depth + 1)
}
