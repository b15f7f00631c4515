//! The deterministic head-reduction machine.
//!
//! A process `t * s` steps by exactly one of four rules:
//!
//! ```text
//! push     t u * s        >  t * u . s
//! grab     (\x. b) * u . s >  b[x := u] * s
//! save     cc * u . s      >  u * k[s] . s
//! restore  k[s'] * u . s   >  u * s'
//! ```
//!
//! No rule overlaps another, so the step function is total and deterministic:
//! every process either steps by a unique rule or is stuck for one of four
//! disjoint reasons. Instructions never step on their own; rule-generated
//! behavior for them lives in `multieval`.

use std::fmt;

use serde::Serialize;

use crate::syntax::{Process, Stack, Term};

/// The rule that fired in a step.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Push,
    Grab,
    Save,
    Restore,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepRule::Push => "push",
            StepRule::Grab => "grab",
            StepRule::Save => "save",
            StepRule::Restore => "restore",
        };
        write!(f, "{s}")
    }
}

/// Why a process cannot step.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StuckReason {
    /// The head is an instruction; instructions are inert here.
    BareInstruction,
    /// An abstraction faces the bottom marker.
    EmptyStackAbstraction,
    /// `cc` faces the bottom marker.
    BottomReached,
    /// A continuation constant faces the bottom marker.
    ContinuationEmptyStack,
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StuckReason::BareInstruction => "bare-instruction",
            StuckReason::EmptyStackAbstraction => "empty-stack-abstraction",
            StuckReason::BottomReached => "bottom-reached",
            StuckReason::ContinuationEmptyStack => "continuation-empty-stack",
        };
        write!(f, "{s}")
    }
}

/// Result of a single step attempt.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepOutcome {
    Step { rule: StepRule, next: Process },
    Stuck(StuckReason),
}

/// Attempts one machine step.
pub fn step(p: &Process) -> StepOutcome {
    match &*p.term {
        Term::App(f, a) => StepOutcome::Step {
            rule: StepRule::Push,
            next: Process::from_parts(
                f.clone(),
                Stack::push_raw(a.clone(), p.stack.clone()).into(),
            ),
        },
        Term::Abs(_, body) => match &*p.stack {
            Stack::Push(u, rest) => StepOutcome::Step {
                rule: StepRule::Grab,
                next: Process::from_parts(body.open_with(u).into(), rest.clone()),
            },
            Stack::Bottom(_) => StepOutcome::Stuck(StuckReason::EmptyStackAbstraction),
        },
        Term::Callcc => match &*p.stack {
            Stack::Push(u, rest) => StepOutcome::Step {
                rule: StepRule::Save,
                next: Process::from_parts(
                    u.clone(),
                    Stack::push_raw(Term::Cont(rest.clone()).into(), rest.clone()).into(),
                ),
            },
            Stack::Bottom(_) => StepOutcome::Stuck(StuckReason::BottomReached),
        },
        Term::Cont(saved) => match &*p.stack {
            Stack::Push(u, _) => StepOutcome::Step {
                rule: StepRule::Restore,
                next: Process::from_parts(u.clone(), saved.clone()),
            },
            Stack::Bottom(_) => StepOutcome::Stuck(StuckReason::ContinuationEmptyStack),
        },
        Term::Instr(_) => StepOutcome::Stuck(StuckReason::BareInstruction),
        Term::Var(_) => unreachable!("process heads are closed"),
    }
}

/// How a bounded run ended.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Stuck(StuckReason),
    OutOfFuel,
}

/// A full run transcript.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub start: Process,
    /// Fired rule and resulting process, in order.
    pub steps: Vec<(StepRule, Process)>,
    pub outcome: RunOutcome,
}

impl Trace {
    pub fn end(&self) -> &Process {
        self.steps.last().map_or(&self.start, |(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of grab steps (one per head beta reduction).
    pub fn grabs(&self) -> usize {
        self.steps.iter().filter(|(r, _)| *r == StepRule::Grab).count()
    }
}

/// Runs with an observer called after each step with the step index (from 1),
/// the rule and the new process. Returns the final process, the number of
/// steps taken, and the outcome.
pub fn run_with(
    p: &Process,
    fuel: u64,
    mut observe: impl FnMut(u64, StepRule, &Process),
) -> (Process, u64, RunOutcome) {
    let mut cur = p.clone();
    let mut taken = 0u64;
    while taken < fuel {
        match step(&cur) {
            StepOutcome::Step { rule, next } => {
                taken += 1;
                observe(taken, rule, &next);
                cur = next;
            }
            StepOutcome::Stuck(r) => return (cur, taken, RunOutcome::Stuck(r)),
        }
    }
    (cur, taken, RunOutcome::OutOfFuel)
}

/// Runs and records the whole trace.
pub fn run(p: &Process, fuel: u64) -> Trace {
    let mut steps = Vec::new();
    let (_, _, outcome) = run_with(p, fuel, |_, rule, next| steps.push((rule, next.clone())));
    Trace { start: p.clone(), steps, outcome }
}

/// Runs without recording intermediate processes.
pub fn run_final(p: &Process, fuel: u64) -> (Process, u64, RunOutcome) {
    run_with(p, fuel, |_, _, _| {})
}
