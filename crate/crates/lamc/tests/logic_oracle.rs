//! Cross-checks the vectorized falsity engine against the brute-force
//! oracle in `common`, per pole, over worlds that exercise every formula
//! constructor, trajectory resolution through continuations, and the
//! heavyweight second-order enumeration.

mod common;

use common::{falsity_oracle, realizes_oracle};
use lamc::logic::{families, parse_formula, FiniteModel, FoTerm, Formula, ModelBuilder, PredTable};
use lamc::machine::{step, StepOutcome};
use lamc::syntax::{parse_stack, parse_term, Process, Stack, Term};

fn assert_engine_matches_oracle(m: &FiniteModel, f: &Formula) {
    let fal = m.falsity(f).unwrap();
    for (pi, pole) in m.poles().iter().enumerate() {
        assert_eq!(
            fal.mask(pi),
            falsity_oracle(m, f, *pole),
            "falsity of {f} at pole {pi}"
        );
    }
}

fn assert_realizes_matches_oracle(m: &FiniteModel, t: &Term, f: &Formula) {
    let by_pole = m.realizes_by_pole(t, f).unwrap();
    for (pi, pole) in m.poles().iter().enumerate() {
        assert_eq!(
            by_pole[pi],
            realizes_oracle(m, t, f, *pole),
            "{t} realizing {f} at pole {pi}"
        );
    }
}

fn grid_model(n: u64) -> FiniteModel {
    let stack = parse_stack("#a0 . #a1 . e0").unwrap();
    let heads = [parse_term("#a0").unwrap(), parse_term("#a1").unwrap()];
    ModelBuilder::new(n).seed_grid(&heads, &stack).build().unwrap()
}

#[test]
fn connective_battery_on_instruction_grid() {
    let m = grid_model(2);
    let parsed = [
        "Top",
        "Bot",
        "Top -> Bot",
        "forall2 X (X -> X)",
        "forall2 X (X -> Top -> X)",
        "0 = 0",
        "0 = 1",
        "0 != 0",
        "0 != 1",
        "forall x (x = x)",
        "forall x (s(x) = max(x, 1))",
        "forall x forall y (min(x, y) = min(y, x))",
    ];
    for src in parsed {
        let f = parse_formula(src).unwrap();
        assert_engine_matches_oracle(&m, &f);
    }
    let eq00 = Formula::eq(FoTerm::Lit(0), FoTerm::Lit(0));
    let eq01 = Formula::eq(FoTerm::Lit(0), FoTerm::Lit(1));
    let built = [
        Formula::and(eq00.clone(), eq01.clone()),
        Formula::or(eq00.clone(), eq01.clone()),
        Formula::iff(eq00.clone(), eq01.clone()),
        Formula::exists_ind("x", Formula::eq(FoTerm::var("x"), FoTerm::Lit(1))),
        Formula::inter(eq00.clone(), Formula::imp(Formula::Top, Formula::Bot)),
        Formula::union(eq00.clone(), Formula::imp(Formula::Top, Formula::Bot)),
        Formula::eq_imp(FoTerm::s(FoTerm::Lit(1)), FoTerm::Lit(1), eq01.clone()),
        families::bool_of(FoTerm::Lit(0)),
        families::bool_of(FoTerm::Lit(1)),
        families::nat(FoTerm::Lit(0)),
        families::nat(FoTerm::Lit(1)),
        Formula::imp(families::nat(FoTerm::Lit(0)), families::nat(FoTerm::Lit(1))),
    ];
    for f in &built {
        assert_engine_matches_oracle(&m, f);
    }
}

#[test]
fn named_tables_match_oracle() {
    let stack = parse_stack("#a0 . #a1 . e0").unwrap();
    let heads = [parse_term("#a0").unwrap(), parse_term("#a1").unwrap()];
    // Row masks picked to be asymmetric across the three stacks.
    let table = PredTable::from_rows(1, 2, vec![0b101, 0b010]).unwrap();
    let m = ModelBuilder::new(2)
        .seed_grid(&heads, &stack)
        .table("P", table)
        .build()
        .unwrap();
    for src in [
        "[P](0)",
        "[P](1)",
        "forall x [P](x)",
        "forall x ([P](x) -> [P](s(x)))",
        "forall2 X (forall x ([P](x) -> X) -> X)",
    ] {
        let f = parse_formula(src).unwrap();
        assert_engine_matches_oracle(&m, &f);
    }
}

#[test]
fn continuation_world_matches_oracle() {
    // cc * (\x.x) . #a0 . e0 runs through save and restore, so the world's
    // stack universe contains a continuation constant.
    let seed = Process::new(
        parse_term("cc").unwrap(),
        parse_stack("(\\x. x) . #a0 . e0").unwrap(),
    )
    .unwrap();
    let m = ModelBuilder::new(2).seed(seed).build().unwrap();
    let peirce = parse_formula("forall2 X forall2 Y (((X -> Y) -> X) -> X)").unwrap();
    let formulas = [
        parse_formula("Bot").unwrap(),
        parse_formula("forall2 X (X -> X)").unwrap(),
        peirce.clone(),
    ];
    for f in &formulas {
        assert_engine_matches_oracle(&m, f);
    }
    let cc = parse_term("cc").unwrap();
    assert_realizes_matches_oracle(&m, &cc, &peirce);
    // A continuation constant is not a universe term, so this exercises the
    // foreign-term resolution path.
    let cont = Term::Cont(std::sync::Arc::new(parse_stack("#a0 . e0").unwrap()));
    assert_realizes_matches_oracle(&m, &cont, &parse_formula("Bot").unwrap());
    assert_realizes_matches_oracle(&m, &cont, &parse_formula("Top -> Bot").unwrap());
}

fn church(k: usize) -> Term {
    let body = (0..k).fold("x".to_string(), |acc, _| format!("f ({acc})"));
    parse_term(&format!("\\f. \\x. {body}")).unwrap()
}

fn terminal(p: &Process) -> Process {
    let mut cur = p.clone();
    loop {
        match step(&cur) {
            StepOutcome::Step { next, .. } => cur = next,
            StepOutcome::Stuck(_) => return cur,
        }
    }
}

#[test]
fn successor_world_matches_oracle() {
    // The numeral world used by the arithmetic checks: both chains seeded,
    // pole family restricted to the observers of the applied chain's end.
    let succ = parse_term("\\n. \\f. \\x. n f (f x)").unwrap();
    let probe = parse_stack("#a0 . #a1 . e0").unwrap();
    let seed = Process::new(succ.clone(), Stack::push(church(1), probe.clone()).unwrap())
        .unwrap();
    let m = ModelBuilder::new(3)
        .seed(seed.clone())
        .seed(Process::new(church(1), probe).unwrap())
        .poles_containing([terminal(&seed)])
        .build()
        .unwrap();
    let f = Formula::imp(families::nat(FoTerm::Lit(1)), families::nat(FoTerm::Lit(2)));
    assert_engine_matches_oracle(&m, &f);
    assert_realizes_matches_oracle(&m, &succ, &f);
    // The check is not vacuous: the falsity is inhabited at every family pole.
    let fal = m.falsity(&f).unwrap();
    for pi in 0..m.pole_count() {
        assert_ne!(fal.mask(pi), 0, "falsity empty at family pole {pi}");
    }
}
