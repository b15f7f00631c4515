//! Finite realizability models.
//!
//! A [`FiniteModel`] fixes a finite process world, a finite family of poles
//! over it, and an individual domain `{0, .., N-1}`. Falsity values are then
//! computable: they are subsets of the model's stack universe (the stacks of
//! the world's processes), and the implication clause ranges over the model's
//! term universe (the stack elements plus the world's head terms). Everything
//! outside those universes is cut off, so a model value is the restriction of
//! the real falsity value to the universe; corpus worlds are chosen so that
//! the restriction is faithful for the formulas under test.
//!
//! Falsity is computed for *all* poles at once: the working representation
//! keeps, for every stack, a bitset over poles ("this stack is in the falsity
//! value at these poles"), so the second-order quantifier's table enumeration
//! pays for each table only once rather than once per pole.
//!
//! Membership of a process in a pole is decided by the world index when the
//! process is a world member. A process outside the world is resolved by
//! running deterministic machine steps until the trajectory enters the world
//! (the entry point decides), gets stuck, or cycles (never in any pole);
//! running out of fuel is a hard error rather than a silent guess.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FoTerm, Formula, LogicError, PredRef};
use crate::machine::{step, StepOutcome};
use crate::multieval::{poles_of_rules, FiniteWorld, MultiEvalError, Pole, ProcSet, RuleSet};
use crate::syntax::{Process, Stack, Term};

/// Largest world a model may have (bitset-backed pole members).
pub const MAX_MODEL_WORLD: usize = 24;
/// Largest stack universe (falsity values are 64-bit masks over it).
pub const MAX_MODEL_STACKS: usize = 24;
/// Largest term universe.
pub const MAX_MODEL_TERMS: usize = 32;
/// Cap on `N^arity * |stacks|`; the second-order quantifier enumerates
/// `2^bits` predicate tables, so this bounds a single quantifier node at
/// about a million tables.
pub const TABLE_BITS_CAP: u32 = 20;

const DEFAULT_TRAJECTORY_FUEL: u32 = 10_000;

// ---- pole bitsets ----

/// Bitset over the model's pole family.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(words: usize) -> Bits {
        Bits(vec![0; words])
    }

    fn all(count: usize) -> Bits {
        let words = count.div_ceil(64);
        let mut v = vec![u64::MAX; words];
        if !count.is_multiple_of(64) {
            if let Some(last) = v.last_mut() {
                *last = (1u64 << (count % 64)) - 1;
            }
        }
        Bits(v)
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and_assign(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
    }

    /// `self &= !col | other`: keep a pole only if the column does not
    /// require it or `other` provides it.
    fn require_assign(&mut self, col: &[u64], other: &Bits) {
        for ((a, &c), &b) in self.0.iter_mut().zip(col).zip(&other.0) {
            *a &= !c | b;
        }
    }
}

// ---- falsity columns (stack-indexed, pole-bitset-valued) ----

/// Working falsity representation: for each stack, the set of poles at which
/// the stack belongs to the falsity value.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Cols {
    sigma: usize,
    words: usize,
    data: Vec<u64>,
}

impl Cols {
    fn zeros(sigma: usize, words: usize) -> Cols {
        Cols { sigma, words, data: vec![0; sigma * words] }
    }

    fn full(sigma: usize, words: usize, pole_count: usize) -> Cols {
        let all = Bits::all(pole_count);
        let mut data = Vec::with_capacity(sigma * words);
        for _ in 0..sigma {
            data.extend_from_slice(&all.0);
        }
        Cols { sigma, words, data }
    }

    fn col(&self, s: usize) -> &[u64] {
        &self.data[s * self.words..(s + 1) * self.words]
    }

    fn col_is_zero(&self, s: usize) -> bool {
        self.col(s).iter().all(|&w| w == 0)
    }

    fn or_assign(&mut self, other: &Cols) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
    }

    fn and_assign(&mut self, other: &Cols) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a &= b;
        }
    }

    fn or_col_masked(&mut self, s: usize, add: &Bits, mask: &[u64]) {
        let base = s * self.words;
        for ((dst, &a), &m) in self.data[base..base + self.words]
            .iter_mut()
            .zip(&add.0)
            .zip(mask)
        {
            *dst |= a & m;
        }
    }

    fn set_col_all(&mut self, s: usize, all: &Bits) {
        let base = s * self.words;
        self.data[base..base + self.words].copy_from_slice(&all.0);
    }

    /// If every column is either empty or the full pole set, returns the mask
    /// of full columns; such falsity values do not depend on the pole.
    fn uniform(&self, all: &Bits) -> Option<u64> {
        let mut mask = 0u64;
        for s in 0..self.sigma {
            let col = self.col(s);
            if col == all.0.as_slice() {
                mask |= 1 << s;
            } else if !self.col_is_zero(s) {
                return None;
            }
        }
        Some(mask)
    }

    fn is_full(&self, all: &Bits) -> bool {
        (0..self.sigma).all(|s| self.col(s) == all.0.as_slice())
    }
}

// ---- predicate tables ----

/// An extensional predicate: a finite map from value tuples to stack sets
/// (stored as bit masks over the model's stack universe).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PredTable {
    arity: u32,
    rows: Vec<u64>,
}

impl PredTable {
    /// A table mapping every tuple to the same stack mask.
    pub fn constant(arity: u32, n: u64, mask: u64) -> Result<PredTable, LogicError> {
        let rows = vec![mask; tuple_count(n, arity)?];
        Ok(PredTable { arity, rows })
    }

    /// A table from explicit rows, one per tuple. Tuples are ordered
    /// lexicographically (first argument most significant).
    pub fn from_rows(arity: u32, n: u64, rows: Vec<u64>) -> Result<PredTable, LogicError> {
        let want = tuple_count(n, arity)?;
        if rows.len() != want {
            return Err(LogicError::TableShape {
                name: String::new(),
                want,
                got: rows.len(),
            });
        }
        Ok(PredTable { arity, rows })
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    /// Sets the row for one tuple.
    pub fn set(&mut self, tuple: &[u64], n: u64, mask: u64) -> Result<(), LogicError> {
        let i = self.index(tuple, n)?;
        self.rows[i] = mask;
        Ok(())
    }

    /// The stack mask at a tuple.
    pub fn lookup(&self, tuple: &[u64], n: u64) -> Result<u64, LogicError> {
        Ok(self.rows[self.index(tuple, n)?])
    }

    fn index(&self, tuple: &[u64], n: u64) -> Result<usize, LogicError> {
        if tuple.len() != self.arity as usize {
            return Err(LogicError::TableArity {
                name: String::new(),
                want: self.arity as usize,
                got: tuple.len(),
            });
        }
        let mut idx = 0usize;
        for &v in tuple {
            if v >= n {
                return Err(LogicError::TableValue { name: String::new(), value: v, n });
            }
            idx = idx * n as usize + v as usize;
        }
        Ok(idx)
    }
}

fn tuple_count(n: u64, arity: u32) -> Result<usize, LogicError> {
    let c = (n as u128).checked_pow(arity).unwrap_or(u128::MAX);
    if c > 1 << TABLE_BITS_CAP {
        return Err(LogicError::CombinatorialBound { bits: u32::MAX, cap: TABLE_BITS_CAP });
    }
    Ok(c as usize)
}

// ---- pole selection ----

/// Seeded random pole sampling: random subsets of the world, closed under
/// the evaluation rules, plus the smallest and the full pole.
#[derive(Clone, Copy, Debug)]
pub struct PoleSample {
    pub count: usize,
    pub seed: u64,
}

enum PoleSpec {
    Enumerate,
    EnumerateContaining(Vec<Process>),
    Sample(PoleSample),
    Explicit(Vec<Pole>),
}

// ---- builder ----

/// Builds a [`FiniteModel`]: seeds a process corpus, closes it under the
/// machine and the evaluation rules, derives the stack and term universes,
/// and fixes a pole family.
pub struct ModelBuilder {
    n: u64,
    seeds: Vec<Process>,
    rules: RuleSet,
    spec: PoleSpec,
    tables: BTreeMap<String, PredTable>,
    fuel: u32,
}

impl ModelBuilder {
    /// A builder over the domain `{0, .., n-1}` with deterministic rules and
    /// exhaustive pole enumeration.
    pub fn new(n: u64) -> ModelBuilder {
        assert!(n >= 1, "the individual domain must be nonempty");
        ModelBuilder {
            n,
            seeds: Vec::new(),
            rules: RuleSet::deterministic(),
            spec: PoleSpec::Enumerate,
            tables: BTreeMap::new(),
            fuel: DEFAULT_TRAJECTORY_FUEL,
        }
    }

    /// Replaces the rule set used for world closure and pole generation.
    pub fn rules(mut self, rules: RuleSet) -> ModelBuilder {
        self.rules = rules;
        self
    }

    pub fn seed(mut self, p: Process) -> ModelBuilder {
        self.seeds.push(p);
        self
    }

    pub fn seed_all(mut self, ps: impl IntoIterator<Item = Process>) -> ModelBuilder {
        self.seeds.extend(ps);
        self
    }

    /// Seeds every `head ⋆ suffix` combination for the suffixes of `stack`.
    pub fn seed_grid(mut self, heads: &[Term], stack: &Stack) -> ModelBuilder {
        for suffix in stack.suffixes() {
            for head in heads {
                self.seeds.push(
                    Process::new(head.clone(), suffix.clone())
                        .expect("grid heads must be closed"),
                );
            }
        }
        self
    }

    /// Enumerate every pole of the rule-generated relation (the default).
    pub fn poles_enumerated(mut self) -> ModelBuilder {
        self.spec = PoleSpec::Enumerate;
        self
    }

    /// Enumerate the poles that contain every one of the given processes:
    /// the structures observing those computations as accepted. Since poles
    /// are closed under anti-evaluation, such a pole also contains everything
    /// that reaches the given processes.
    pub fn poles_containing(mut self, procs: impl IntoIterator<Item = Process>) -> ModelBuilder {
        self.spec = PoleSpec::EnumerateContaining(procs.into_iter().collect());
        self
    }

    /// Sample a pole subfamily instead of enumerating.
    pub fn poles_sampled(mut self, count: usize, seed: u64) -> ModelBuilder {
        self.spec = PoleSpec::Sample(PoleSample { count, seed });
        self
    }

    /// Use an explicit pole family; each member is validated.
    pub fn poles_explicit(mut self, poles: Vec<Pole>) -> ModelBuilder {
        self.spec = PoleSpec::Explicit(poles);
        self
    }

    /// Attaches a named predicate table, used by `[name](args)` atoms.
    pub fn table(mut self, name: &str, table: PredTable) -> ModelBuilder {
        self.tables.insert(name.to_string(), table);
        self
    }

    /// Fuel for resolving out-of-world processes by deterministic steps.
    pub fn trajectory_fuel(mut self, fuel: u32) -> ModelBuilder {
        self.fuel = fuel;
        self
    }

    pub fn build(self) -> Result<FiniteModel, LogicError> {
        // Close the seed corpus under machine steps and rule targets.
        let mut procs: BTreeSet<Process> = BTreeSet::new();
        let mut queue: VecDeque<Process> = self.seeds.into_iter().collect();
        while let Some(p) = queue.pop_front() {
            if !procs.insert(p.clone()) {
                continue;
            }
            if procs.len() > MAX_MODEL_WORLD {
                return Err(MultiEvalError::WorldTooLarge {
                    size: procs.len(),
                    cap: MAX_MODEL_WORLD,
                }
                .into());
            }
            if let StepOutcome::Step { next, .. } = step(&p) {
                queue.push_back(next);
            }
            for inst in self.rules.instances(&p) {
                queue.extend(inst.targets.iter().cloned());
            }
        }
        let world = FiniteWorld::new(procs);

        // Universes.
        let stack_set: BTreeSet<Stack> =
            world.procs().iter().map(|p| (*p.stack).clone()).collect();
        let stacks: Vec<Stack> = stack_set.into_iter().collect();
        if stacks.len() > MAX_MODEL_STACKS {
            return Err(LogicError::TooManyStacks {
                count: stacks.len(),
                cap: MAX_MODEL_STACKS,
            });
        }
        let mut term_set: BTreeSet<Term> = BTreeSet::new();
        for s in &stacks {
            term_set.extend(s.elems().map(|t| (**t).clone()));
        }
        for p in world.procs() {
            term_set.insert((*p.term).clone());
        }
        let terms: Vec<Term> = term_set.into_iter().collect();
        if terms.len() > MAX_MODEL_TERMS {
            return Err(LogicError::TooManyTerms {
                count: terms.len(),
                cap: MAX_MODEL_TERMS,
            });
        }

        // Pole family.
        let conds: Vec<(usize, ProcSet)> = world
            .rule_instances(&self.rules)?
            .into_iter()
            .map(|(head, targets, _)| (head, targets))
            .collect();
        let poles = match self.spec {
            PoleSpec::Enumerate => poles_of_rules(&self.rules, &world)?,
            PoleSpec::EnumerateContaining(procs) => {
                let must = world.mask_of(procs.iter())?;
                poles_of_rules(&self.rules, &world)?
                    .into_iter()
                    .filter(|p| must.is_subset_of(*p))
                    .collect()
            }
            PoleSpec::Sample(sample) => sample_poles(&conds, world.len(), sample),
            PoleSpec::Explicit(poles) => {
                for (i, pole) in poles.iter().enumerate() {
                    let closed = conds
                        .iter()
                        .all(|&(h, t)| !t.is_subset_of(*pole) || pole.contains(h));
                    if !closed || pole.0 & !ProcSet::full(world.len()).0 != 0 {
                        return Err(LogicError::InvalidPole { index: i });
                    }
                }
                poles
            }
        };

        // Validate tables against the universes.
        let full_mask: u64 = if stacks.is_empty() { 0 } else { (1u64 << stacks.len()) - 1 };
        for (name, t) in &self.tables {
            let want = tuple_count(self.n, t.arity)?;
            if t.rows.len() != want {
                return Err(LogicError::TableShape {
                    name: name.clone(),
                    want,
                    got: t.rows.len(),
                });
            }
            for &row in &t.rows {
                if row & !full_mask != 0 {
                    return Err(LogicError::TableRow {
                        name: name.clone(),
                        bit: (row & !full_mask).trailing_zeros() as usize,
                        stacks: stacks.len(),
                    });
                }
            }
        }

        // Index maps and per-pair process resolution.
        let stack_ids: HashMap<Stack, usize> =
            stacks.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let term_ids: HashMap<Term, usize> =
            terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let sigma = stacks.len();
        let mut push_id = vec![None; terms.len() * sigma];
        let mut pair_proc = vec![None; terms.len() * sigma];
        for (ti, t) in terms.iter().enumerate() {
            for (si, s) in stacks.iter().enumerate() {
                let pushed = Stack::push(t.clone(), s.clone()).expect("universe terms are closed");
                push_id[ti * sigma + si] = stack_ids.get(&pushed).copied();
                let p = Process::new(t.clone(), s.clone()).expect("universe terms are closed");
                pair_proc[ti * sigma + si] = world.position(&p);
            }
        }
        let words = poles.len().div_ceil(64).max(1);
        let mut proc_bits = vec![Bits::zeros(words); world.len()];
        for (pi, pole) in poles.iter().enumerate() {
            for i in pole.iter() {
                proc_bits[i].set(pi);
            }
        }

        Ok(FiniteModel {
            n: self.n,
            world,
            stacks,
            terms,
            poles,
            tables: self.tables,
            fuel: self.fuel,
            stack_ids,
            term_ids,
            push_id,
            pair_proc,
            proc_bits,
            words,
            escape_cache: RefCell::new(HashMap::new()),
            foreign_cache: RefCell::new(HashMap::new()),
            dual_cache: RefCell::new(HashMap::new()),
        })
    }
}

fn saturate(mut s: ProcSet, conds: &[(usize, ProcSet)]) -> ProcSet {
    loop {
        let mut changed = false;
        for &(head, targets) in conds {
            if targets.is_subset_of(s) && !s.contains(head) {
                s = s.with(head);
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

fn sample_poles(conds: &[(usize, ProcSet)], world_len: usize, sample: PoleSample) -> Vec<Pole> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
    let full = ProcSet::full(world_len);
    let mut out: BTreeSet<u32> = BTreeSet::new();
    out.insert(saturate(ProcSet::EMPTY, conds).0);
    out.insert(full.0);
    let mut attempts = 0usize;
    while out.len() < sample.count && attempts < sample.count.saturating_mul(32) + 64 {
        attempts += 1;
        let raw = ProcSet(rng.gen::<u32>() & full.0);
        out.insert(saturate(raw, conds).0);
    }
    out.into_iter().map(ProcSet).collect()
}

// ---- the model ----

/// A pole-indexed finite semantics for closed formulas.
pub struct FiniteModel {
    n: u64,
    world: FiniteWorld,
    stacks: Vec<Stack>,
    terms: Vec<Term>,
    poles: Vec<Pole>,
    tables: BTreeMap<String, PredTable>,
    fuel: u32,
    stack_ids: HashMap<Stack, usize>,
    term_ids: HashMap<Term, usize>,
    /// `[term * sigma + stack]` — id of the pushed stack, when in-universe.
    push_id: Vec<Option<usize>>,
    /// `[term * sigma + stack]` — world index of `term ⋆ stack`, when a member.
    pair_proc: Vec<Option<usize>>,
    /// Per world process, the set of poles containing it.
    proc_bits: Vec<Bits>,
    words: usize,
    /// Trajectory results for out-of-world `(term, stack)` universe pairs;
    /// `None` records an unresolvable escape.
    escape_cache: RefCell<HashMap<(usize, usize), Option<Bits>>>,
    /// Same, for realizer subjects outside the term universe.
    foreign_cache: RefCell<HashMap<(Term, usize), Option<Bits>>>,
    /// Dual bitsets for pole-independent falsity masks.
    dual_cache: RefCell<HashMap<(usize, u64), Bits>>,
}

/// A computed falsity value: one stack set per pole.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Falsity {
    rows: Vec<u64>,
}

impl Falsity {
    /// The stack mask at a pole (bit `i` = model stack `i`).
    pub fn mask(&self, pole: usize) -> u64 {
        self.rows[pole]
    }

    pub fn pole_count(&self) -> usize {
        self.rows.len()
    }

    /// True if the falsity value is the same stack set at every pole.
    pub fn is_pole_independent(&self) -> bool {
        self.rows.windows(2).all(|w| w[0] == w[1])
    }
}

impl FiniteModel {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn world(&self) -> &FiniteWorld {
        &self.world
    }

    pub fn stacks(&self) -> &[Stack] {
        &self.stacks
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    pub fn stack_index(&self, s: &Stack) -> Option<usize> {
        self.stack_ids.get(s).copied()
    }

    /// A named predicate table attached at build time.
    pub fn named_table(&self, name: &str) -> Option<&PredTable> {
        self.tables.get(name)
    }

    pub fn term_index(&self, t: &Term) -> Option<usize> {
        self.term_ids.get(t).copied()
    }

    /// Membership of an arbitrary process in each pole, resolving
    /// out-of-world processes along their deterministic trajectory.
    pub fn process_in_poles(&self, p: &Process) -> Result<Vec<bool>, LogicError> {
        let bits = match self.world.position(p) {
            Some(i) => self.proc_bits[i].clone(),
            None => self.resolve(p.clone())?,
        };
        Ok((0..self.poles.len()).map(|i| bits.get(i)).collect())
    }

    /// The falsity value of a closed formula, at every pole.
    pub fn falsity(&self, f: &Formula) -> Result<Falsity, LogicError> {
        let cols = self.eval_closed(f)?;
        let mut rows = vec![0u64; self.poles.len()];
        for s in 0..self.stacks.len() {
            let col = cols.col(s);
            for (pi, row) in rows.iter_mut().enumerate() {
                if col[pi / 64] & (1 << (pi % 64)) != 0 {
                    *row |= 1 << s;
                }
            }
        }
        Ok(Falsity { rows })
    }

    /// Whether `t` realizes `f` at each pole.
    pub fn realizes_by_pole(&self, t: &Term, f: &Formula) -> Result<Vec<bool>, LogicError> {
        let cols = self.eval_closed(f)?;
        let mut ok = Bits::all(self.poles.len());
        for s in 0..self.stacks.len() {
            let col = cols.col(s);
            if col.iter().all(|&w| w == 0) {
                continue;
            }
            let bits = self.term_stack_bits(t, s)?;
            ok.require_assign(col, &bits);
        }
        Ok((0..self.poles.len()).map(|i| ok.get(i)).collect())
    }

    /// Whether `t` realizes `f` at every pole of the family.
    pub fn realizes(&self, t: &Term, f: &Formula) -> Result<bool, LogicError> {
        Ok(self.realizes_by_pole(t, f)?.into_iter().all(|b| b))
    }

    /// Whether `t` realizes `f` at one pole.
    pub fn realizes_at(&self, t: &Term, f: &Formula, pole: usize) -> Result<bool, LogicError> {
        Ok(self.realizes_by_pole(t, f)?[pole])
    }

    // ---- internals ----

    fn eval_closed(&self, f: &Formula) -> Result<Cols, LogicError> {
        if let Some(name) = f.free_ind_vars().into_iter().next() {
            return Err(LogicError::FreeIndVariable { name });
        }
        if let Some(name) = f.free_pred_vars().into_iter().next() {
            return Err(LogicError::FreePredVariable { name });
        }
        let mut ind = Vec::new();
        let mut pred = Vec::new();
        self.eval(f, &mut ind, &mut pred)
    }

    fn all_bits(&self) -> Bits {
        Bits::all(self.poles.len())
    }

    fn eval(
        &self,
        f: &Formula,
        ind: &mut Vec<u64>,
        pred: &mut Vec<PredTable>,
    ) -> Result<Cols, LogicError> {
        let sigma = self.stacks.len();
        match f {
            Formula::Top => Ok(Cols::zeros(sigma, self.words)),
            Formula::Bot => Ok(Cols::full(sigma, self.words, self.poles.len())),
            Formula::Atom { pred: pref, args } => {
                let table = match pref {
                    PredRef::Bound(i) => {
                        let k = pred
                            .len()
                            .checked_sub(1 + *i as usize)
                            .expect("bound predicate within the quantifier environment");
                        &pred[k]
                    }
                    PredRef::Var(name) => {
                        return Err(LogicError::FreePredVariable { name: name.clone() })
                    }
                };
                let vals = eval_args(args, ind, self.n)?;
                let mask = table.lookup(&vals, self.n)?;
                Ok(self.uniform_cols(mask))
            }
            Formula::Table { name, args } => {
                let table = self
                    .tables
                    .get(name)
                    .ok_or_else(|| LogicError::UnknownTable { name: name.clone() })?;
                if args.len() != table.arity as usize {
                    return Err(LogicError::TableArity {
                        name: name.clone(),
                        want: table.arity as usize,
                        got: args.len(),
                    });
                }
                let vals = eval_args(args, ind, self.n)?;
                let mask = table.lookup(&vals, self.n)?;
                Ok(self.uniform_cols(mask))
            }
            Formula::Imp(a, b) => {
                let cb = self.eval(b, ind, pred)?;
                let mut out = Cols::zeros(sigma, self.words);
                if cb.data.iter().all(|&w| w == 0) {
                    return Ok(out);
                }
                let ca = self.eval(a, ind, pred)?;
                let all = self.all_bits();
                let ua = ca.uniform(&all);
                for ti in 0..self.terms.len() {
                    let da = match ua {
                        Some(mask) => self.dual_uniform(ti, mask)?,
                        None => self.dual_general(ti, &ca)?,
                    };
                    if da.is_zero() {
                        continue;
                    }
                    for si in 0..sigma {
                        if let Some(dst) = self.push_id[ti * sigma + si] {
                            out.or_col_masked(dst, &da, cb.col(si));
                        }
                    }
                }
                Ok(out)
            }
            Formula::AllInd(_, body) => {
                let mut out = Cols::zeros(sigma, self.words);
                let all = self.all_bits();
                for v in 0..self.n {
                    ind.push(v);
                    let c = self.eval(body, ind, pred);
                    ind.pop();
                    out.or_assign(&c?);
                    if out.is_full(&all) {
                        break;
                    }
                }
                Ok(out)
            }
            Formula::AllPred(_, arity, body) => {
                let tuples = tuple_count(self.n, *arity)?;
                let bits = (tuples as u128) * (sigma as u128);
                if bits > TABLE_BITS_CAP as u128 {
                    return Err(LogicError::CombinatorialBound {
                        bits: bits.min(u32::MAX as u128) as u32,
                        cap: TABLE_BITS_CAP,
                    });
                }
                let bits = bits as u32;
                let row_mask = if sigma == 0 { 0 } else { (1u64 << sigma) - 1 };
                let mut out = Cols::zeros(sigma, self.words);
                let all = self.all_bits();
                pred.push(PredTable { arity: *arity, rows: vec![0; tuples] });
                let mut result = Ok(());
                for code in 0u64..(1u64 << bits) {
                    {
                        let table = pred.last_mut().expect("just pushed");
                        for (i, row) in table.rows.iter_mut().enumerate() {
                            *row = (code >> (i * sigma)) & row_mask;
                        }
                    }
                    match self.eval(body, ind, pred) {
                        Ok(c) => out.or_assign(&c),
                        Err(e) => {
                            result = Err(e);
                            break;
                        }
                    }
                    if out.is_full(&all) {
                        break;
                    }
                }
                pred.pop();
                result.map(|()| out)
            }
            Formula::EqImp { lhs, rhs, body } => {
                let l = lhs.eval(ind, self.n)?;
                let r = rhs.eval(ind, self.n)?;
                if l == r {
                    self.eval(body, ind, pred)
                } else {
                    Ok(Cols::zeros(sigma, self.words))
                }
            }
            Formula::Inter(a, b) => {
                let mut ca = self.eval(a, ind, pred)?;
                ca.or_assign(&self.eval(b, ind, pred)?);
                Ok(ca)
            }
            Formula::Union(a, b) => {
                let mut ca = self.eval(a, ind, pred)?;
                ca.and_assign(&self.eval(b, ind, pred)?);
                Ok(ca)
            }
        }
    }

    fn uniform_cols(&self, mask: u64) -> Cols {
        let mut cols = Cols::zeros(self.stacks.len(), self.words);
        let all = self.all_bits();
        for s in 0..self.stacks.len() {
            if mask & (1 << s) != 0 {
                cols.set_col_all(s, &all);
            }
        }
        cols
    }

    /// Membership bitset of the universe pair `terms[ti] ⋆ stacks[si]`.
    fn pair_bits(&self, ti: usize, si: usize) -> Result<Bits, LogicError> {
        if let Some(wi) = self.pair_proc[ti * self.stacks.len() + si] {
            return Ok(self.proc_bits[wi].clone());
        }
        if let Some(cached) = self.escape_cache.borrow().get(&(ti, si)) {
            return match cached {
                Some(bits) => Ok(bits.clone()),
                None => Err(self.escape_error(ti, si)),
            };
        }
        let p = Process::new(self.terms[ti].clone(), self.stacks[si].clone())
            .expect("universe terms are closed");
        let resolved = self.resolve(p);
        let entry = resolved.as_ref().ok().cloned();
        self.escape_cache.borrow_mut().insert((ti, si), entry);
        resolved
    }

    fn escape_error(&self, ti: usize, si: usize) -> LogicError {
        LogicError::WorldEscape {
            process: format!("{} * {}", self.terms[ti], self.stacks[si]),
        }
    }

    /// Pole membership for a process outside the world: follow deterministic
    /// steps; the first world member on the trajectory decides, and a stuck
    /// or cycling trajectory is in no pole.
    fn resolve(&self, start: Process) -> Result<Bits, LogicError> {
        let mut seen: HashSet<Process> = HashSet::new();
        let mut cur = start.clone();
        for _ in 0..self.fuel {
            if let Some(i) = self.world.position(&cur) {
                return Ok(self.proc_bits[i].clone());
            }
            match step(&cur) {
                StepOutcome::Stuck(_) => return Ok(Bits::zeros(self.words)),
                StepOutcome::Step { next, .. } => {
                    if !seen.insert(cur) {
                        return Ok(Bits::zeros(self.words));
                    }
                    cur = next;
                }
            }
        }
        Err(LogicError::WorldEscape { process: start.to_string() })
    }

    fn term_stack_bits(&self, t: &Term, si: usize) -> Result<Bits, LogicError> {
        if let Some(&ti) = self.term_ids.get(t) {
            return self.pair_bits(ti, si);
        }
        if let Some(cached) = self.foreign_cache.borrow().get(&(t.clone(), si)) {
            return match cached {
                Some(bits) => Ok(bits.clone()),
                None => Err(LogicError::WorldEscape {
                    process: format!("{} * {}", t, self.stacks[si]),
                }),
            };
        }
        let p = Process::new(t.clone(), self.stacks[si].clone()).map_err(|_| {
            LogicError::WorldEscape { process: format!("<open term> * {}", self.stacks[si]) }
        })?;
        let resolved = self.resolve(p);
        let entry = resolved.as_ref().ok().cloned();
        self.foreign_cache.borrow_mut().insert((t.clone(), si), entry);
        resolved
    }

    /// `dual(mask)` for a pole-independent falsity mask: the poles at which
    /// `terms[ti]` belongs to the truth value.
    fn dual_uniform(&self, ti: usize, mask: u64) -> Result<Bits, LogicError> {
        if let Some(bits) = self.dual_cache.borrow().get(&(ti, mask)) {
            return Ok(bits.clone());
        }
        let mut acc = self.all_bits();
        let mut rest = mask;
        while rest != 0 {
            let s = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            acc.and_assign(&self.pair_bits(ti, s)?);
            if acc.is_zero() {
                break;
            }
        }
        self.dual_cache.borrow_mut().insert((ti, mask), acc.clone());
        Ok(acc)
    }

    fn dual_general(&self, ti: usize, cols: &Cols) -> Result<Bits, LogicError> {
        let mut acc = self.all_bits();
        for s in 0..cols.sigma {
            let col = cols.col(s);
            if col.iter().all(|&w| w == 0) {
                continue;
            }
            let bits = self.pair_bits(ti, s)?;
            acc.require_assign(col, &bits);
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }
}

fn eval_args(args: &[FoTerm], ind: &[u64], n: u64) -> Result<Vec<u64>, LogicError> {
    args.iter().map(|a| a.eval(ind, n)).collect()
}

/// Semantic subtyping `A ⊴ B`: the falsity value of `A` contains that of `B`
/// at every pole, so every realizer of `A` realizes `B`.
pub fn sem_le(a: &Formula, b: &Formula, model: &FiniteModel) -> Result<bool, LogicError> {
    let fa = model.falsity(a)?;
    let fb = model.falsity(b)?;
    Ok((0..model.pole_count()).all(|p| fb.mask(p) & !fa.mask(p) == 0))
}

/// Semantic equivalence: equal falsity values at every pole.
pub fn sem_eq(a: &Formula, b: &Formula, model: &FiniteModel) -> Result<bool, LogicError> {
    Ok(model.falsity(a)? == model.falsity(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{families, parse_formula};
    use crate::syntax::{parse_stack, parse_term};

    fn instr_world_model(stack_src: &str, heads: &[&str], n: u64) -> FiniteModel {
        let stack = parse_stack(stack_src).unwrap();
        let heads: Vec<Term> = heads.iter().map(|h| parse_term(h).unwrap()).collect();
        ModelBuilder::new(n).seed_grid(&heads, &stack).build().unwrap()
    }

    #[test]
    fn top_and_bot_falsity() {
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        let top = m.falsity(&Formula::Top).unwrap();
        let bot = m.falsity(&Formula::Bot).unwrap();
        let full = (1u64 << m.stacks().len()) - 1;
        for p in 0..m.pole_count() {
            assert_eq!(top.mask(p), 0);
            assert_eq!(bot.mask(p), full);
        }
    }

    #[test]
    fn identity_realizes_universal_implication() {
        // \x. x realizes forall2 X (X -> X) in every pole of every model.
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        let id = parse_term("\\x. x").unwrap();
        let f = parse_formula("forall2 X (X -> X)").unwrap();
        assert!(m.realizes(&id, &f).unwrap());
    }

    #[test]
    fn equality_falsity_closed_forms() {
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        // 0 = 0 has the falsity of forall2 X (X -> X): pushes t.pi with
        // t * pi in the pole.
        let eq = parse_formula("0 = 0").unwrap();
        let fa = m.falsity(&eq).unwrap();
        for (pi, pole) in m.poles().iter().enumerate() {
            let mut want = 0u64;
            for (si, s) in m.stacks().iter().enumerate() {
                if let Stack::Push(t, rest) = s {
                    let p = Process::new((**t).clone(), (**rest).clone()).unwrap();
                    let inside = match m.world().position(&p) {
                        Some(i) => pole.contains(i),
                        None => false,
                    };
                    if inside {
                        want |= 1 << si;
                    }
                }
            }
            assert_eq!(fa.mask(pi), want, "pole {pi}");
        }
        // 0 = 1 has the falsity of Top -> Bot: every push.
        let ne = parse_formula("0 = 1").unwrap();
        let fa = m.falsity(&ne).unwrap();
        let every_push: u64 = m
            .stacks()
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Stack::Push(..)))
            .map(|(i, _)| 1u64 << i)
            .sum();
        for p in 0..m.pole_count() {
            assert_eq!(fa.mask(p), every_push);
        }
        // Disequalities: 0 != 1 is Top, 0 != 0 is Bot.
        let t = m.falsity(&parse_formula("0 != 1").unwrap()).unwrap();
        let b = m.falsity(&parse_formula("0 != 0").unwrap()).unwrap();
        let full = (1u64 << m.stacks().len()) - 1;
        for p in 0..m.pole_count() {
            assert_eq!(t.mask(p), 0);
            assert_eq!(b.mask(p), full);
        }
    }

    #[test]
    fn bool_shapes_match_lemma() {
        // bool(0) = forall2 X (X -> Top -> X), bool(1) = forall2 X (Top -> X -> X),
        // and bool(v) for v >= 2 = Top -> Top -> Bot; needs N = 4 so that 2
        // is distinguished from 0, 1 and from the clamp cap.
        let m = instr_world_model("#a0 . #a1 . #a0 . e0", &["#a0", "#a1"], 4);
        assert!(sem_eq(
            &families::bool_of(FoTerm::Lit(0)),
            &parse_formula("forall2 X (X -> Top -> X)").unwrap(),
            &m
        )
        .unwrap());
        assert!(sem_eq(
            &families::bool_of(FoTerm::Lit(1)),
            &parse_formula("forall2 X (Top -> X -> X)").unwrap(),
            &m
        )
        .unwrap());
        assert!(sem_eq(
            &families::bool_of(FoTerm::Lit(2)),
            &parse_formula("Top -> Top -> Bot").unwrap(),
            &m
        )
        .unwrap());
    }

    #[test]
    fn inter_is_union_of_falsities() {
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        let a = parse_formula("0 = 0").unwrap();
        let b = parse_formula("Top -> Bot").unwrap();
        let fa = m.falsity(&a).unwrap();
        let fb = m.falsity(&b).unwrap();
        let fab = m.falsity(&Formula::inter(a.clone(), b.clone())).unwrap();
        for p in 0..m.pole_count() {
            assert_eq!(fab.mask(p), fa.mask(p) | fb.mask(p));
        }
        // And A cap B is a semantic subtype of both halves.
        assert!(sem_le(&Formula::inter(a.clone(), b.clone()), &a, &m).unwrap());
        assert!(sem_le(&Formula::inter(a.clone(), b.clone()), &b, &m).unwrap());
    }

    #[test]
    fn empty_pole_classifies_arithmetic_truth() {
        // With the empty pole, a closed arithmetic sentence is realized by
        // every term if true in the bounded structure, by none otherwise.
        let m = ModelBuilder::new(3)
            .seed_grid(
                &[parse_term("#a0").unwrap()],
                &parse_stack("#a0 . e0").unwrap(),
            )
            .poles_explicit(vec![ProcSet::EMPTY])
            .build()
            .unwrap();
        let some_term = parse_term("#a0").unwrap();
        let truths = [
            ("forall x x = x", true),
            ("forall x min(x, 0) = 0", true),
            ("forall x s(x) != x", false), // clamping: s(2) = 2 at N = 3
            ("s(0) = 1", true),
            ("0 = 1", false),
            ("forall x forall y min(x, y) = min(y, x)", true),
            ("forall x s(x) = x", false),
        ];
        for (src, truth) in truths {
            let f = parse_formula(src).unwrap();
            assert_eq!(
                m.realizes_at(&some_term, &f, 0).unwrap(),
                truth,
                "sentence {src}"
            );
        }
    }

    #[test]
    fn continuation_realizes_bot_in_full_pole() {
        // k[pi] realizes Bot at any pole containing all k[pi] * rho.
        let stack = parse_stack("#a0 . e0").unwrap();
        let heads = [parse_term("#a0").unwrap()];
        let mut builder = ModelBuilder::new(2).seed_grid(&heads, &stack);
        let cont = Term::Cont(std::sync::Arc::new(stack.clone()));
        for suffix in stack.suffixes() {
            builder = builder.seed(Process::new(cont.clone(), suffix).unwrap());
        }
        let m = builder.build().unwrap();
        let full = ProcSet::full(m.world().len());
        let full_idx = m.poles().iter().position(|p| *p == full).unwrap();
        assert!(m.realizes_at(&cont, &Formula::Bot, full_idx).unwrap());
        // But not at the empty pole.
        let empty_idx = m.poles().iter().position(|p| p.is_empty()).unwrap();
        assert!(!m.realizes_at(&cont, &Formula::Bot, empty_idx).unwrap());
    }

    #[test]
    fn named_tables_resolve() {
        let m0 = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        let sigma = m0.stacks().len();
        drop(m0);
        let table = PredTable::from_rows(1, 2, vec![0, (1 << sigma) - 1]).unwrap();
        let stack = parse_stack("#a0 . #a1 . e0").unwrap();
        let heads: Vec<Term> =
            ["#a0", "#a1"].iter().map(|h| parse_term(h).unwrap()).collect();
        let m = ModelBuilder::new(2)
            .seed_grid(&heads, &stack)
            .table("P", table)
            .build()
            .unwrap();
        let f0 = m.falsity(&parse_formula("[P](0)").unwrap()).unwrap();
        let f1 = m.falsity(&parse_formula("[P](1)").unwrap()).unwrap();
        let full = (1u64 << m.stacks().len()) - 1;
        for p in 0..m.pole_count() {
            assert_eq!(f0.mask(p), 0);
            assert_eq!(f1.mask(p), full);
        }
        assert!(matches!(
            m.falsity(&parse_formula("[Q](0)").unwrap()),
            Err(LogicError::UnknownTable { .. })
        ));
    }

    #[test]
    fn combinatorial_bound_is_loud() {
        // Arity 2 at N = 4 over 3 stacks needs 48 bits > 20.
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 4);
        let f = Formula::forall_pred(
            "Z",
            2,
            Formula::atom(
                PredRef::Var("Z".into()),
                [FoTerm::Lit(0), FoTerm::Lit(1)],
            ),
        );
        assert!(matches!(
            m.falsity(&f),
            Err(LogicError::CombinatorialBound { .. })
        ));
    }

    #[test]
    fn sampled_poles_are_valid_and_reproducible() {
        let stack = parse_stack("#a0 . #a1 . #a0 . e0").unwrap();
        let heads: Vec<Term> =
            ["#a0", "#a1"].iter().map(|h| parse_term(h).unwrap()).collect();
        let build = |seed| {
            ModelBuilder::new(2)
                .seed_grid(&heads, &stack)
                .poles_sampled(12, seed)
                .build()
                .unwrap()
        };
        let m1 = build(7);
        let m2 = build(7);
        assert_eq!(m1.poles(), m2.poles());
        assert!(m1.poles().len() >= 2);
        assert!(m1.poles().contains(&ProcSet::EMPTY));
        assert!(m1.poles().contains(&ProcSet::full(m1.world().len())));
        // Instruction-headed worlds have no rules, so every subset is a pole;
        // a world with machine steps restricts the family.
        let id_world = ModelBuilder::new(2)
            .seed(Process::new(
                parse_term("(\\x. x) #a0").unwrap(),
                parse_stack("e0").unwrap(),
            )
            .unwrap())
            .build()
            .unwrap();
        // (\x.x) #a0 * e0  >  \x.x * #a0.e0  >  #a0 * e0: a three-chain.
        assert_eq!(id_world.world().len(), 3);
        assert_eq!(id_world.poles().len(), 4);
    }

    #[test]
    fn containing_poles_filter_the_enumeration() {
        // (\x.x) #a0 * e0  >  \x.x * #a0.e0  >  #a0 * e0: a three-chain with
        // four poles. Requiring the seed keeps the three nonempty ones;
        // requiring the endpoint keeps only the full pole, because
        // anti-evaluation closure pulls in everything that reaches it.
        let seed = Process::new(
            parse_term("(\\x. x) #a0").unwrap(),
            parse_stack("e0").unwrap(),
        )
        .unwrap();
        let endpoint =
            Process::new(parse_term("#a0").unwrap(), parse_stack("e0").unwrap()).unwrap();
        let m = ModelBuilder::new(2)
            .seed(seed.clone())
            .poles_containing([seed.clone()])
            .build()
            .unwrap();
        assert_eq!(m.poles().len(), 3);
        assert!(m.poles().iter().all(|p| !p.is_empty()));
        let m = ModelBuilder::new(2)
            .seed(seed.clone())
            .poles_containing([endpoint])
            .build()
            .unwrap();
        assert_eq!(m.poles(), &[ProcSet::full(3)]);
        // A process outside the world is an error, not an empty family.
        let stray =
            Process::new(parse_term("#a1").unwrap(), parse_stack("e0").unwrap()).unwrap();
        assert!(matches!(
            ModelBuilder::new(2).seed(seed).poles_containing([stray]).build(),
            Err(LogicError::World(_))
        ));
    }

    #[test]
    fn explicit_poles_are_validated() {
        let r = ModelBuilder::new(2)
            .seed(Process::new(
                parse_term("(\\x. x) #a0").unwrap(),
                parse_stack("e0").unwrap(),
            )
            .unwrap())
            .poles_explicit(vec![ProcSet(0b001)])
            .build();
        // Whether 0b001 is closed depends on the canonical process order, so
        // just demand a definite answer consistent with validation.
        match r {
            Ok(m) => {
                let conds = m.world().det_edges().0;
                for pole in m.poles() {
                    for &(src, dst) in &conds {
                        assert!(!pole.contains(dst) || pole.contains(src));
                    }
                }
            }
            Err(LogicError::InvalidPole { index: 0 }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn trajectory_resolution_decides_out_of_world_processes() {
        // The realizer (\x. x) #a0 is not a universe term, and its processes
        // are not world members, but they deterministically reach #a0 * pi.
        let m = instr_world_model("#a0 . #a1 . e0", &["#a0", "#a1"], 2);
        let t = parse_term("(\\x. x) #a0").unwrap();
        let direct = parse_term("#a0").unwrap();
        for f in [parse_formula("Bot").unwrap(), parse_formula("Top -> Bot").unwrap()] {
            assert_eq!(
                m.realizes_by_pole(&t, &f).unwrap(),
                m.realizes_by_pole(&direct, &f).unwrap(),
                "formula {f}"
            );
        }
    }
}
