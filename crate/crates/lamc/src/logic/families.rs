//! Named formula families used by the realizer kits and the check suites.
//!
//! Everything here is a closed formula (or a closed formula once the
//! caller's argument terms are closed), built from the core connectives.

use super::{FoTerm, Formula, PredRef};

fn xi(i: usize) -> FoTerm {
    FoTerm::var(&format!("x{i}"))
}

/// `nat(a)`: the induction predicate
/// `forall2 Z ((forall y Z(y) -> Z(s(y))) -> Z(0) -> Z(a))`.
pub fn nat(a: FoTerm) -> Formula {
    let z = |t: FoTerm| Formula::atom(PredRef::Var("Z".into()), [t]);
    let step = Formula::forall_ind(
        "y",
        Formula::imp(z(FoTerm::var("y")), z(FoTerm::s(FoTerm::var("y")))),
    );
    Formula::forall_pred("Z", 1, Formula::imp_chain([step, z(FoTerm::Lit(0))], z(a)))
}

/// `bool(a)`: `forall2 X (X(0) -> X(1) -> X(a))`.
pub fn bool_of(a: FoTerm) -> Formula {
    let x = |t: FoTerm| Formula::atom(PredRef::Var("X".into()), [t]);
    Formula::forall_pred(
        "X",
        1,
        Formula::imp_chain([x(FoTerm::Lit(0)), x(FoTerm::Lit(1))], x(a)),
    )
}

/// The guard equation of `gim_k`: `min(s(a), k) = s(a)`, i.e. `s(a) <= k`.
fn gim_guard(k: u64, a: FoTerm) -> (FoTerm, FoTerm) {
    let sa = FoTerm::s(a);
    (FoTerm::app("min", [sa.clone(), FoTerm::Lit(k)]), sa)
}

/// `gim_k(a)`: the equation `s(a) <= k`, true of `0, ..., k-1`.
///
/// Crucially, the guard holds of every admissible value *in the same way*:
/// the falsity value does not depend on which value below `k` is used.
pub fn gim(k: u64, a: FoTerm) -> Formula {
    let (lhs, rhs) = gim_guard(k, a);
    Formula::eq(lhs, rhs)
}

/// Relativized quantification `forall name (gim_k(name) |> body)`.
///
/// The guard is attached with `|>` (equational implication), not `->`,
/// so out-of-range values contribute nothing to the falsity value.
pub fn forall_gim(k: u64, name: &str, body: Formula) -> Formula {
    let (lhs, rhs) = gim_guard(k, FoTerm::var(name));
    Formula::forall_ind(name, Formula::eq_imp(lhs, rhs, body))
}

/// Relativization to the two-valued core, `forall name^gim2 body`.
pub fn forall_gim2(name: &str, body: Formula) -> Formula {
    forall_gim(2, name, body)
}

/// The voting formula with `n` alternatives:
/// `forall2 X ((Top -> X -> ... -> X -> X) cap ... cap (X -> ... -> Top -> X))`,
/// where the `j`-th component replaces the `j`-th of `n` hypotheses by `Top`.
pub fn vote(n: usize) -> Formula {
    assert!(n >= 1, "voting formula needs at least one alternative");
    let x = || Formula::atom(PredRef::Var("X".into()), []);
    let component = |j: usize| {
        let hyps = (1..=n).map(|i| if i == j { Formula::Top } else { x() }).collect::<Vec<_>>();
        Formula::imp_chain(hyps, x())
    };
    let body = (1..=n)
        .rev()
        .map(component)
        .reduce(|acc, c| Formula::inter(c, acc))
        .expect("n >= 1");
    Formula::forall_pred("X", 0, body)
}

/// `x1 != 0 -> ... -> xn != 0 -> (or over i<j of and(xi, xj)) != 0`,
/// with free variables `x1, ..., xn`. States that the `xi` cannot be
/// pairwise disjoint and all nonzero. For `n = 1` the disjunction is
/// empty, so the conclusion is `0 != 0`.
fn no_disjoint_body(n: usize) -> Formula {
    let mut overlaps = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            overlaps.push(FoTerm::app("and", [xi(i), xi(j)]));
        }
    }
    let some_overlap = overlaps
        .into_iter()
        .reduce(|acc, t| FoTerm::app("or", [acc, t]))
        .unwrap_or(FoTerm::Lit(0));
    let conclusion = Formula::neq(some_overlap, FoTerm::Lit(0));
    let hyps = (1..=n).map(|i| Formula::neq(xi(i), FoTerm::Lit(0)));
    Formula::imp_chain(hyps.collect::<Vec<_>>(), conclusion)
}

/// The no-`n`-disjoint-elements formula with unrelativized quantifiers.
pub fn no_disjoint(n: usize) -> Formula {
    assert!(n >= 1);
    (1..=n)
        .rev()
        .fold(no_disjoint_body(n), |acc, i| Formula::forall_ind(&format!("x{i}"), acc))
}

/// The no-`n`-disjoint-elements formula with all quantifiers relativized
/// to `gim2`.
pub fn gim2_models_no_disjoint(n: usize) -> Formula {
    assert!(n >= 1);
    (1..=n)
        .rev()
        .fold(no_disjoint_body(n), |acc, i| forall_gim2(&format!("x{i}"), acc))
}

/// "The two-valued core has fewer than `n` elements":
/// `forall x1 .. xn (or over i<j of xi = xj)`, relativized to `gim2`.
pub fn card_lt(n: usize) -> Formula {
    assert!(n >= 1);
    let mut collisions = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            collisions.push(Formula::eq(xi(i), xi(j)));
        }
    }
    let body = collisions.into_iter().reduce(Formula::or).unwrap_or(Formula::Bot);
    (1..=n).rev().fold(body, |acc, i| forall_gim2(&format!("x{i}"), acc))
}

/// "At most `n` elements."
pub fn card_le(n: usize) -> Formula {
    card_lt(n + 1)
}

/// "At least `n` elements": the negation of [`card_lt`].
pub fn card_ge(n: usize) -> Formula {
    Formula::imp(card_lt(n), Formula::Bot)
}

/// "Exactly `n` elements."
pub fn card_eq(n: usize) -> Formula {
    Formula::and(card_ge(n), card_lt(n + 1))
}

/// Specification of a may-nondeterministic choice (fork):
/// `forall2 X forall2 Y (X -> Y -> X cap Y)`.
pub fn fork_spec() -> Formula {
    let x = || Formula::atom(PredRef::Var("X".into()), []);
    let y = || Formula::atom(PredRef::Var("Y".into()), []);
    Formula::forall_pred(
        "X",
        0,
        Formula::forall_pred(
            "Y",
            0,
            Formula::imp_chain([x(), y()], Formula::inter(x(), y())),
        ),
    )
}

/// Specification of a must-nondeterministic choice:
/// `forall2 X forall2 Y (X -> Y -> X cup Y)`.
pub fn must_spec() -> Formula {
    let x = || Formula::atom(PredRef::Var("X".into()), []);
    let y = || Formula::atom(PredRef::Var("Y".into()), []);
    Formula::forall_pred(
        "X",
        0,
        Formula::forall_pred(
            "Y",
            0,
            Formula::imp_chain([x(), y()], Formula::union(x(), y())),
        ),
    )
}

/// The total binary-or specification:
/// `forall x forall y (bool(x) -> bool(y) -> bool(or(x, y)))`.
pub fn or_total_spec() -> Formula {
    let body = Formula::imp_chain(
        [bool_of(FoTerm::var("x")), bool_of(FoTerm::var("y"))],
        bool_of(FoTerm::app("or", [FoTerm::var("x"), FoTerm::var("y")])),
    );
    Formula::forall_ind("x", Formula::forall_ind("y", body))
}

/// What a left-first or actually achieves:
/// `(forall x bool(0) -> bool(x) -> bool(x)) cap (bool(1) -> Top -> bool(1))`.
pub fn or_left_spec() -> Formula {
    let lazy = Formula::forall_ind(
        "x",
        Formula::imp_chain(
            [bool_of(FoTerm::Lit(0)), bool_of(FoTerm::var("x"))],
            bool_of(FoTerm::var("x")),
        ),
    );
    let eager = Formula::imp_chain(
        [bool_of(FoTerm::Lit(1)), Formula::Top],
        bool_of(FoTerm::Lit(1)),
    );
    Formula::inter(lazy, eager)
}

/// What a right-first or actually achieves:
/// `(forall x bool(x) -> bool(0) -> bool(x)) cap (Top -> bool(1) -> bool(1))`.
pub fn or_right_spec() -> Formula {
    let lazy = Formula::forall_ind(
        "x",
        Formula::imp_chain(
            [bool_of(FoTerm::var("x")), bool_of(FoTerm::Lit(0))],
            bool_of(FoTerm::var("x")),
        ),
    );
    let eager = Formula::imp_chain(
        [Formula::Top, bool_of(FoTerm::Lit(1))],
        bool_of(FoTerm::Lit(1)),
    );
    Formula::inter(lazy, eager)
}

/// Specification of parallel or: returns true as soon as either argument
/// is true (even if the other is left unexamined), and false when both
/// arguments are false.
pub fn por_spec() -> Formula {
    let b = |v: u64| bool_of(FoTerm::Lit(v));
    Formula::inter(
        Formula::imp_chain([b(1), Formula::Top], b(1)),
        Formula::inter(
            Formula::imp_chain([Formula::Top, b(1)], b(1)),
            Formula::imp_chain([b(0), b(0)], b(0)),
        ),
    )
}

/// Specification of the three-argument function that returns true on the
/// cyclic patterns `01?`, `?01`, `1?0` and false on `000` and `111`,
/// examining only two arguments in the true cases.
pub fn gustave_spec() -> Formula {
    let row = |pattern: [Option<u64>; 3], out: u64| {
        let hyps = pattern
            .into_iter()
            .map(|v| v.map_or(Formula::Top, |v| bool_of(FoTerm::Lit(v))))
            .collect::<Vec<_>>();
        Formula::imp_chain(hyps, bool_of(FoTerm::Lit(out)))
    };
    [
        row([Some(0), Some(1), None], 1),
        row([None, Some(0), Some(1)], 1),
        row([Some(1), None, Some(0)], 1),
        row([Some(0), Some(0), Some(0)], 0),
        row([Some(1), Some(1), Some(1)], 0),
    ]
    .into_iter()
    .rev()
    .reduce(|acc, c| Formula::inter(c, acc))
    .expect("five components")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    #[test]
    fn families_are_closed() {
        for f in [
            nat(FoTerm::Lit(0)),
            bool_of(FoTerm::Lit(1)),
            gim(2, FoTerm::Lit(3)),
            vote(3),
            no_disjoint(3),
            gim2_models_no_disjoint(2),
            card_lt(2),
            card_eq(2),
            fork_spec(),
            must_spec(),
            or_total_spec(),
            or_left_spec(),
            or_right_spec(),
            por_spec(),
            gustave_spec(),
        ] {
            assert!(f.is_closed(), "not closed: {f}");
        }
    }

    #[test]
    fn families_print_and_reparse() {
        for f in [
            nat(FoTerm::Lit(0)),
            gim(2, FoTerm::Lit(0)),
            vote(2),
            gim2_models_no_disjoint(2),
            card_ge(2),
            por_spec(),
            gustave_spec(),
        ] {
            let s = f.to_string();
            let back = parse_formula(&s).unwrap_or_else(|e| panic!("reparse '{s}': {e}"));
            assert_eq!(f, back, "roundtrip changed: {s}");
        }
    }

    #[test]
    fn sugar_atoms_match_families() {
        assert_eq!(parse_formula("nat(0)").unwrap(), nat(FoTerm::Lit(0)));
        assert_eq!(parse_formula("bool(s(x))").unwrap(), bool_of(FoTerm::s(FoTerm::var("x"))));
        assert_eq!(parse_formula("gim2(1)").unwrap(), gim(2, FoTerm::Lit(1)));
    }

    #[test]
    fn vote_shape() {
        // vote(1) is forall2 X (Top -> X).
        let f = vote(1);
        let Formula::AllPred(_, 0, body) = &f else { panic!("{f}") };
        assert_eq!(
            **body,
            Formula::imp(Formula::Top, Formula::atom(PredRef::Bound(0), []))
        );
        // vote(3): three components, each with three hypotheses.
        let f = vote(3);
        let Formula::AllPred(_, 0, body) = &f else { panic!("{f}") };
        let Formula::Inter(c1, rest) = &**body else { panic!("{f}") };
        let Formula::Inter(_, c3) = &**rest else { panic!("{f}") };
        let Formula::Imp(h, _) = &**c1 else { panic!("{f}") };
        assert_eq!(**h, Formula::Top, "first component starts with Top");
        let Formula::Imp(h, _) = &**c3 else { panic!("{f}") };
        assert_eq!(**h, Formula::atom(PredRef::Bound(0), []), "last component starts with X");
    }

    #[test]
    fn no_disjoint_one_has_trivial_conclusion() {
        let f = no_disjoint(1);
        let Formula::AllInd(_, body) = &f else { panic!("{f}") };
        let Formula::Imp(_, concl) = &**body else { panic!("{f}") };
        assert_eq!(**concl, Formula::neq(FoTerm::Lit(0), FoTerm::Lit(0)));
    }

    #[test]
    fn relativized_quantifier_uses_equational_guard() {
        let f = forall_gim2("x", Formula::Top);
        let Formula::AllInd(_, body) = &f else { panic!("{f}") };
        let Formula::EqImp { lhs, rhs, body } = &**body else { panic!("{f}") };
        assert_eq!(**body, Formula::Top);
        assert_eq!(*rhs, FoTerm::s(FoTerm::Bound(0)));
        assert_eq!(*lhs, FoTerm::app("min", [FoTerm::s(FoTerm::Bound(0)), FoTerm::Lit(2)]));
    }

    #[test]
    fn gustave_has_five_components() {
        let mut f = &gustave_spec();
        let mut count = 1;
        while let Formula::Inter(_, rest) = f {
            count += 1;
            f = rest;
        }
        assert_eq!(count, 5);
    }
}
