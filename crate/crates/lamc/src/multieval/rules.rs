//! Rule sets: schema families that generate multi-evaluation behavior.
//!
//! A schema maps a process to the rule instances that apply to it. An
//! instance has a *target set*: the process is accepted (enters the pole)
//! as soon as, for some instance, every target is accepted. Several
//! instances on the same process give "may" nondeterminism; several targets
//! in one instance give "must" nondeterminism.
//!
//! Every [`RuleSet`] embeds the deterministic machine as the schema `det`
//! (one instance, one target, per steppable process).

use std::sync::Arc;

use crate::machine::{step, StepOutcome};
use crate::syntax::{Instr, Process, Stack, Term};

/// One applicable rule instance for a process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    /// Name of the generating schema.
    pub schema: String,
    /// Distinguishes instances of the same schema on the same process.
    pub label: String,
    /// All targets must be accepted for this instance to fire.
    pub targets: Vec<Process>,
}

/// A family of rules of the same shape.
pub trait RuleSchema: Send + Sync {
    fn name(&self) -> &str;
    /// Instances applying to `p`. Targets must be processes.
    fn instances(&self, p: &Process) -> Vec<RuleInstance>;
}

/// The deterministic machine as a schema.
struct DetSchema;

impl RuleSchema for DetSchema {
    fn name(&self) -> &str {
        "det"
    }

    fn instances(&self, p: &Process) -> Vec<RuleInstance> {
        match step(p) {
            StepOutcome::Step { rule, next } => vec![RuleInstance {
                schema: "det".into(),
                label: rule.to_string(),
                targets: vec![next],
            }],
            StepOutcome::Stuck(_) => Vec::new(),
        }
    }
}

/// A collection of schemas; always includes `det`.
#[derive(Clone)]
pub struct RuleSet {
    schemas: Vec<Arc<dyn RuleSchema>>,
}

impl RuleSet {
    /// Just the deterministic machine.
    pub fn deterministic() -> RuleSet {
        RuleSet { schemas: vec![Arc::new(DetSchema)] }
    }

    /// Adds a schema (builder style).
    pub fn with(mut self, schema: impl RuleSchema + 'static) -> RuleSet {
        self.schemas.push(Arc::new(schema));
        self
    }

    pub fn schema_names(&self) -> Vec<&str> {
        self.schemas.iter().map(|s| s.name()).collect()
    }

    /// All instances applying to `p`, `det` first.
    pub fn instances(&self, p: &Process) -> Vec<RuleInstance> {
        self.schemas.iter().flat_map(|s| s.instances(p)).collect()
    }
}

impl std::fmt::Debug for RuleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RuleSet").field("schemas", &self.schema_names()).finish()
    }
}

/// "May" fork: `i * u . v . s` accepts if the left branch `u * s` does, or if
/// the right branch `v * s` does (two instances, one target each).
pub fn fork(instr: Instr) -> impl RuleSchema {
    struct Fork(Instr);
    impl RuleSchema for Fork {
        fn name(&self) -> &str {
            "fork"
        }

        fn instances(&self, p: &Process) -> Vec<RuleInstance> {
            let Term::Instr(i) = &*p.term else { return Vec::new() };
            if *i != self.0 {
                return Vec::new();
            }
            let Stack::Push(u, rest) = &*p.stack else { return Vec::new() };
            let Stack::Push(v, below) = &**rest else { return Vec::new() };
            ["left", "right"]
                .into_iter()
                .zip([u, v])
                .map(|(label, t)| RuleInstance {
                    schema: "fork".into(),
                    label: label.into(),
                    targets: vec![Process::from_parts(t.clone(), below.clone())],
                })
                .collect()
        }
    }
    Fork(instr)
}

/// "Must" choice: `i * u . v . s` accepts only if both `u * s` and `v * s`
/// do (one instance, two targets).
pub fn choose(instr: Instr) -> impl RuleSchema {
    struct Choose(Instr);
    impl RuleSchema for Choose {
        fn name(&self) -> &str {
            "choose"
        }

        fn instances(&self, p: &Process) -> Vec<RuleInstance> {
            let Term::Instr(i) = &*p.term else { return Vec::new() };
            if *i != self.0 {
                return Vec::new();
            }
            let Stack::Push(u, rest) = &*p.stack else { return Vec::new() };
            let Stack::Push(v, below) = &**rest else { return Vec::new() };
            vec![RuleInstance {
                schema: "choose".into(),
                label: "both".into(),
                targets: vec![
                    Process::from_parts(u.clone(), below.clone()),
                    Process::from_parts(v.clone(), below.clone()),
                ],
            }]
        }
    }
    Choose(instr)
}
