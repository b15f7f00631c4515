//! Materialized relations between process sets, their closure under the
//! relation axioms, and the duality with pole families.
//!
//! The axioms for a multi-evaluation relation `>` over a world are:
//!
//! - identity: `{p} > {p}`;
//! - weakening: `P > Q`, `P ⊆ P'`, `Q ⊆ Q'` implies `P' > Q'`;
//! - cut: `P > Q ∪ {r}` and `P' ∪ {r} > Q'` imply `P ∪ P' > Q ∪ Q'`;
//! - det embedding: `{p} > {q}` whenever `p` steps to `q`.
//!
//! Duality: a relation induces the family of its poles (`poles_of_relation`),
//! and a pole family induces a relation (`relation_of`: `P > Q` iff every
//! pole containing all of `Q` meets `P`). Relations obtained from pole
//! families satisfy all axioms, and the round trip
//! `poles_of_relation(relation_of(S))` restores exactly the closure of `S`
//! under the pole conditions; on families of actual poles it is the identity.

use super::rules::RuleSet;
use super::{FiniteWorld, MultiEvalError, Pole, ProcSet, MAX_POLE_WORLD, MAX_RELATION_WORLD};

/// A relation between subsets of a world of at most [`MAX_RELATION_WORLD`]
/// processes, stored densely: pair `(P, Q)` lives at bit `P * 2^n + Q`.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteRelation {
    n: usize,
    bits: Vec<u64>,
}

impl FiniteRelation {
    /// Empty relation over a world of `world_size` processes.
    pub fn new(world_size: usize) -> Result<FiniteRelation, MultiEvalError> {
        if world_size > MAX_RELATION_WORLD {
            return Err(MultiEvalError::WorldTooLarge {
                size: world_size,
                cap: MAX_RELATION_WORLD,
            });
        }
        let pairs = 1usize << (2 * world_size);
        Ok(FiniteRelation { n: world_size, bits: vec![0; pairs.div_ceil(64)] })
    }

    pub fn world_size(&self) -> usize {
        self.n
    }

    fn idx(&self, p: ProcSet, q: ProcSet) -> usize {
        debug_assert!(p.is_subset_of(ProcSet::full(self.n)));
        debug_assert!(q.is_subset_of(ProcSet::full(self.n)));
        ((p.0 as usize) << self.n) | q.0 as usize
    }

    pub fn contains(&self, p: ProcSet, q: ProcSet) -> bool {
        let i = self.idx(p, q);
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert(&mut self, p: ProcSet, q: ProcSet) {
        let i = self.idx(p, q);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    /// Number of related pairs.
    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// All related pairs, ascending. Meant for small worlds.
    pub fn pairs(&self) -> impl Iterator<Item = (ProcSet, ProcSet)> + '_ {
        let n = self.n;
        (0..1u64 << (2 * n)).filter_map(move |i| {
            let (w, b) = ((i / 64) as usize, i % 64);
            if self.bits[w] & (1 << b) != 0 {
                Some((ProcSet((i >> n) as u32), ProcSet((i & ((1 << n) - 1)) as u32)))
            } else {
                None
            }
        })
    }

    /// Closes the relation under weakening (supersets on both sides).
    pub fn weaken(&mut self) {
        let n = self.n;
        let row_bits = 1usize << n;
        // Q dimension, within each row.
        if row_bits <= 64 {
            // Rows start at multiples of their own width, so each row sits
            // inside a single word. Grow bit j by a masked shift: sources
            // with bit j clear land exactly on their superset position.
            let masks: Vec<u64> = (0..n).map(|j| spread_mask(n, j)).collect();
            let row_mask = if row_bits == 64 { u64::MAX } else { (1u64 << row_bits) - 1 };
            for p in 0..1usize << n {
                let bitpos = p * row_bits;
                let (w, off) = (bitpos / 64, bitpos % 64);
                let mut row = (self.bits[w] >> off) & row_mask;
                for (j, m) in masks.iter().enumerate() {
                    row |= (row << (1usize << j)) & m;
                }
                self.bits[w] |= row << off;
            }
        } else {
            for j in 0..n {
                let bit = 1usize << j;
                for src in 0..row_bits << n {
                    if src & bit == 0 && self.bits[src / 64] & (1 << (src % 64)) != 0 {
                        let dst = src | bit;
                        self.bits[dst / 64] |= 1 << (dst % 64);
                    }
                }
            }
        }
        // P dimension: OR whole rows upward.
        for j in 0..n {
            let bit = 1usize << j;
            for p in 0..1usize << n {
                if p & bit == 0 {
                    self.or_row_into(p, p | bit);
                }
            }
        }
    }

    fn or_row_into(&mut self, src: usize, dst: usize) {
        let n = self.n;
        let row_bits = 1usize << n;
        if row_bits >= 64 {
            let words = row_bits / 64;
            let s0 = src * words;
            let d0 = dst * words;
            for k in 0..words {
                let v = self.bits[s0 + k];
                self.bits[d0 + k] |= v;
            }
        } else {
            let sbit = src * row_bits;
            let dbit = dst * row_bits;
            let mask = (1u64 << row_bits) - 1;
            let v = (self.bits[sbit / 64] >> (sbit % 64)) & mask;
            self.bits[dbit / 64] |= v << (dbit % 64);
        }
    }

    /// The minimal pairs (antichain): pairs with no strictly smaller related
    /// pair below them componentwise.
    pub fn minimal_pairs(&self) -> Vec<(ProcSet, ProcSet)> {
        let mut min: Vec<(ProcSet, ProcSet)> = Vec::new();
        let mut order: Vec<(u32, ProcSet, ProcSet)> = self
            .pairs()
            .map(|(p, q)| (p.0.count_ones() + q.0.count_ones(), p, q))
            .collect();
        order.sort_unstable_by_key(|&(w, p, q)| (w, p, q));
        for (_, p, q) in order {
            if !min.iter().any(|&(a, b)| a.is_subset_of(p) && b.is_subset_of(q)) {
                min.push((p, q));
            }
        }
        min
    }
}

impl std::fmt::Debug for FiniteRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteRelation(n={}, pairs={})", self.n, self.count())
    }
}

/// Mask of Q-positions whose bit `j` can be grown by a shift of `1 << j`
/// (positions that had bit `j` clear get the shifted copy).
fn spread_mask(n: usize, j: usize) -> u64 {
    let mut m = 0u64;
    for q in 0..1usize << n {
        if q & (1 << j) != 0 {
            m |= 1 << q;
        }
    }
    m
}

/// Enumerates all poles of a rule-generated relation over a closed world.
///
/// A subset `S` is a pole iff for every rule instance with head `p` and
/// target set `T ⊆ S`, also `p ∈ S`. The world must be closed under rule
/// targets.
pub fn poles_of_rules(
    rules: &RuleSet,
    world: &FiniteWorld,
) -> Result<Vec<Pole>, MultiEvalError> {
    if world.len() > MAX_POLE_WORLD {
        return Err(MultiEvalError::WorldTooLarge { size: world.len(), cap: MAX_POLE_WORLD });
    }
    let insts = world.rule_instances(rules)?;
    let conds: Vec<(usize, ProcSet)> = insts.into_iter().map(|(i, m, _)| (i, m)).collect();
    Ok(enumerate_poles(world.len(), |s| {
        conds.iter().all(|&(head, targets)| !targets.is_subset_of(s) || s.contains(head))
    }))
}

/// Enumerates all poles of an explicit relation: `S` is a pole iff for every
/// related pair `(P, Q)` with `Q ⊆ S`, `P` meets `S`.
pub fn poles_of_relation(
    rel: &FiniteRelation,
    world: &FiniteWorld,
) -> Result<Vec<Pole>, MultiEvalError> {
    if world.len() != rel.world_size() {
        return Err(MultiEvalError::WidthMismatch {
            left: world.len(),
            right: rel.world_size(),
        });
    }
    // Checking every pair is wasteful; minimal pairs suffice, because a
    // weakened pair imposes a weaker condition than the pair it grew from
    // whenever the relation is weakening-closed, and otherwise the condition
    // set is exactly the given pairs. We keep the exact set to stay honest on
    // non-closed inputs.
    let pairs: Vec<(ProcSet, ProcSet)> = rel.pairs().collect();
    Ok(enumerate_poles(world.len(), |s| {
        pairs.iter().all(|&(p, q)| !q.is_subset_of(s) || !p.inter(s).is_empty())
    }))
}

fn enumerate_poles(n: usize, is_pole: impl Fn(ProcSet) -> bool) -> Vec<Pole> {
    (0..1u32 << n).map(ProcSet).filter(|&s| is_pole(s)).collect()
}

/// The relation induced by a pole family: `P > Q` iff every pole of the
/// family containing all of `Q` meets `P`.
pub fn relation_of(
    poles: &[Pole],
    world: &FiniteWorld,
) -> Result<FiniteRelation, MultiEvalError> {
    let mut rel = FiniteRelation::new(world.len())?;
    let n = world.len();
    for q in 0..1u32 << n {
        let q = ProcSet(q);
        let relevant: Vec<Pole> = poles.iter().copied().filter(|s| q.is_subset_of(*s)).collect();
        for p in 0..1u32 << n {
            let p = ProcSet(p);
            if relevant.iter().all(|s| !p.inter(*s).is_empty()) {
                rel.insert(p, q);
            }
        }
    }
    Ok(rel)
}

/// Builds the least relation over the world that contains the seed pairs and
/// satisfies all four axioms.
///
/// Internally maintains the antichain of minimal pairs: weakening makes the
/// relation upward closed, so the antichain determines it, and cut conclusions
/// from non-minimal premises are weakenings of conclusions from minimal ones.
pub fn closure(
    world: &FiniteWorld,
    seed: impl IntoIterator<Item = (ProcSet, ProcSet)>,
) -> Result<FiniteRelation, MultiEvalError> {
    const ANTICHAIN_CAP: usize = 8192;
    let n = world.len();
    if n > MAX_RELATION_WORLD {
        return Err(MultiEvalError::WorldTooLarge { size: n, cap: MAX_RELATION_WORLD });
    }

    let mut min: Vec<(ProcSet, ProcSet)> = Vec::new();
    let add = |min: &mut Vec<(ProcSet, ProcSet)>, p: ProcSet, q: ProcSet| -> bool {
        if min.iter().any(|&(a, b)| a.is_subset_of(p) && b.is_subset_of(q)) {
            return false;
        }
        min.retain(|&(a, b)| !(p.is_subset_of(a) && q.is_subset_of(b)));
        min.push((p, q));
        true
    };

    for i in 0..n {
        add(&mut min, ProcSet::singleton(i), ProcSet::singleton(i));
    }
    let (edges, _) = world.det_edges();
    for (i, j) in edges {
        add(&mut min, ProcSet::singleton(i), ProcSet::singleton(j));
    }
    for (p, q) in seed {
        add(&mut min, p, q);
    }

    loop {
        let mut changed = false;
        // Cut on every pivot r: (A, B ∋ r) with (C ∋ r, D) gives
        // (A ∪ (C \ r), (B \ r) ∪ D).
        let snapshot = min.clone();
        for r in 0..n {
            for &(a, b) in snapshot.iter().filter(|&&(_, b)| b.contains(r)) {
                for &(c, d) in snapshot.iter().filter(|&&(c, _)| c.contains(r)) {
                    let p = a.union(c.without(r));
                    let q = b.without(r).union(d);
                    changed |= add(&mut min, p, q);
                    if min.len() > ANTICHAIN_CAP {
                        return Err(MultiEvalError::ClosureBlowup { cap: ANTICHAIN_CAP });
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut rel = FiniteRelation::new(n)?;
    for (p, q) in min {
        rel.insert(p, q);
    }
    rel.weaken();
    Ok(rel)
}

/// One related pair of process sets.
pub type Pair = (ProcSet, ProcSet);

/// A violation report for the relation axioms.
#[derive(Debug, Default, Clone)]
pub struct AxiomReport {
    pub missing_identity: Vec<usize>,
    pub missing_det: Vec<(usize, usize)>,
    /// Number of pairs missing for weakening closure, with one example.
    pub weakening_gaps: u64,
    pub weakening_example: Option<(ProcSet, ProcSet)>,
    /// Cut conclusions missing from the relation: (premise, premise, conclusion).
    pub cut_gaps: Vec<(Pair, Pair, Pair)>,
}

impl AxiomReport {
    pub fn is_ok(&self) -> bool {
        self.missing_identity.is_empty()
            && self.missing_det.is_empty()
            && self.weakening_gaps == 0
            && self.cut_gaps.is_empty()
    }
}

impl std::fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "all axioms hold");
        }
        writeln!(f, "axiom violations:")?;
        if !self.missing_identity.is_empty() {
            writeln!(f, "  identity missing for processes {:?}", self.missing_identity)?;
        }
        if !self.missing_det.is_empty() {
            writeln!(f, "  det embedding missing for steps {:?}", self.missing_det)?;
        }
        if self.weakening_gaps > 0 {
            writeln!(
                f,
                "  weakening: {} missing pairs, e.g. {:?}",
                self.weakening_gaps, self.weakening_example
            )?;
        }
        for (p1, p2, c) in self.cut_gaps.iter().take(3) {
            writeln!(f, "  cut: {p1:?} and {p2:?} demand {c:?}")?;
        }
        Ok(())
    }
}

/// Checks the four axioms on a materialized relation.
///
/// Weakening is checked exactly (closing a copy and comparing). Cut is checked
/// on the minimal antichain, which suffices once weakening holds: a cut from
/// non-minimal premises is dominated by a cut from the minimal pairs beneath
/// them (or by one of those pairs directly).
pub fn check_axioms(rel: &FiniteRelation, world: &FiniteWorld) -> AxiomReport {
    let mut report = AxiomReport::default();
    let n = world.len();

    for i in 0..n {
        if !rel.contains(ProcSet::singleton(i), ProcSet::singleton(i)) {
            report.missing_identity.push(i);
        }
    }

    let (edges, _) = world.det_edges();
    for (i, j) in edges {
        if !rel.contains(ProcSet::singleton(i), ProcSet::singleton(j)) {
            report.missing_det.push((i, j));
        }
    }

    let mut weakened = rel.clone();
    weakened.weaken();
    if &weakened != rel {
        for (p, q) in weakened.pairs() {
            if !rel.contains(p, q) {
                report.weakening_gaps += 1;
                report.weakening_example.get_or_insert((p, q));
            }
        }
    }

    let min = rel.minimal_pairs();
    'outer: for r in 0..n {
        for &(a, b) in min.iter().filter(|&&(_, b)| b.contains(r)) {
            for &(c, d) in min.iter().filter(|&&(c, _)| c.contains(r)) {
                let p = a.union(c.without(r));
                let q = b.without(r).union(d);
                if !rel.contains(p, q) {
                    report.cut_gaps.push(((a, b), (c, d), (p, q)));
                    if report.cut_gaps.len() >= 8 {
                        break 'outer;
                    }
                }
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    fn stuck_world(k: usize) -> FiniteWorld {
        FiniteWorld::new((0..k).map(|i| parse_process(&format!("#a{i} * e0")).unwrap()))
    }

    #[test]
    fn relation_bits_roundtrip() {
        let mut rel = FiniteRelation::new(3).unwrap();
        assert!(!rel.contains(ProcSet(0b101), ProcSet(0b010)));
        rel.insert(ProcSet(0b101), ProcSet(0b010));
        assert!(rel.contains(ProcSet(0b101), ProcSet(0b010)));
        assert_eq!(rel.count(), 1);
        assert_eq!(rel.pairs().collect::<Vec<_>>(), vec![(ProcSet(0b101), ProcSet(0b010))]);
    }

    #[test]
    fn weaken_closes_upward() {
        let mut rel = FiniteRelation::new(2).unwrap();
        rel.insert(ProcSet(0b01), ProcSet(0b10));
        rel.weaken();
        for p in [0b01u32, 0b11] {
            for q in [0b10u32, 0b11] {
                assert!(rel.contains(ProcSet(p), ProcSet(q)), "missing ({p:#b},{q:#b})");
            }
        }
        assert_eq!(rel.count(), 4);
    }

    #[test]
    fn minimal_pairs_extract_the_antichain() {
        let mut rel = FiniteRelation::new(2).unwrap();
        rel.insert(ProcSet(0b01), ProcSet(0b10));
        rel.weaken();
        assert_eq!(rel.minimal_pairs(), vec![(ProcSet(0b01), ProcSet(0b10))]);
    }

    #[test]
    fn poles_of_stuck_world_are_all_subsets() {
        // No steps, no rules beyond det: every subset is a pole.
        let w = stuck_world(3);
        let poles = poles_of_rules(&RuleSet::deterministic(), &w).unwrap();
        assert_eq!(poles.len(), 8);
    }

    #[test]
    fn poles_respect_det_steps() {
        // World: (\x. x) #a0 * e0  >  \x. x * #a0 . e0  >  #a0 * e0.
        let w = FiniteWorld::new([
            parse_process("(\\x. x) #a0 * e0").unwrap(),
            parse_process("\\x. x * #a0 . e0").unwrap(),
            parse_process("#a0 * e0").unwrap(),
        ]);
        let poles = poles_of_rules(&RuleSet::deterministic(), &w).unwrap();
        // A pole containing the final stuck process must contain the chain.
        for s in &poles {
            let last = w.position(&parse_process("#a0 * e0").unwrap()).unwrap();
            if s.contains(last) {
                assert_eq!(s.len(), 3, "pole {s:?} misses an ancestor");
            }
        }
        // Exactly the ancestor-closed prefixes of the chain: {}, {root},
        // {root, mid}, {root, mid, last}.
        assert_eq!(poles.len(), 4);
    }

    #[test]
    fn closure_contains_axioms_and_passes_check() {
        let w = FiniteWorld::new([
            parse_process("(\\x. x) #a0 * e0").unwrap(),
            parse_process("\\x. x * #a0 . e0").unwrap(),
            parse_process("#a0 * e0").unwrap(),
            parse_process("#a1 * e0").unwrap(),
        ]);
        let rel = closure(&w, []).unwrap();
        let report = check_axioms(&rel, &w);
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn closure_cut_composes_seeds() {
        // Seed {0} > {1} and {1} > {2} in a 3-process stuck world: cut gives
        // {0} > {2}.
        let w = stuck_world(3);
        let rel = closure(
            &w,
            [
                (ProcSet::singleton(0), ProcSet::singleton(1)),
                (ProcSet::singleton(1), ProcSet::singleton(2)),
            ],
        )
        .unwrap();
        assert!(rel.contains(ProcSet::singleton(0), ProcSet::singleton(2)));
        assert!(check_axioms(&rel, &w).is_ok());
    }

    #[test]
    fn duality_roundtrip_on_pole_families() {
        // For a family closed under the pole conditions of its own relation,
        // poles_of_relation(relation_of(S)) == S. Use all poles of det.
        let w = FiniteWorld::new([
            parse_process("(\\x. x) #a0 * e0").unwrap(),
            parse_process("\\x. x * #a0 . e0").unwrap(),
            parse_process("#a0 * e0").unwrap(),
        ]);
        let poles = poles_of_rules(&RuleSet::deterministic(), &w).unwrap();
        let rel = relation_of(&poles, &w).unwrap();
        let back = poles_of_relation(&rel, &w).unwrap();
        assert_eq!(poles, back);
    }

    #[test]
    fn relation_of_satisfies_axioms() {
        let w = stuck_world(4);
        // An arbitrary family of subsets (all anti-closed here).
        let poles = vec![ProcSet(0b0011), ProcSet(0b1010), ProcSet(0b0000)];
        let rel = relation_of(&poles, &w).unwrap();
        assert!(check_axioms(&rel, &w).is_ok());
    }
}
