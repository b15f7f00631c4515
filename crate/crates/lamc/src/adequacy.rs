//! Derivation checking and realizer extraction for the ten-rule
//! natural-deduction system, plus Horn-clause realizer synthesis and the
//! Church-numeral / fixpoint toolkit.
//!
//! A [`Judgment`] is a context telescope, a term and a formula. Contexts are
//! stored innermost-first: hypothesis `i` is the formula of de Bruijn index
//! `i` in the term, so `context[0]` belongs to `Var(0)`. This matches
//! [`Term::substitute`], whose replacement list is also innermost-first, and
//! makes duplicate hypothesis names unrepresentable.
//!
//! A [`Derivation`] is an explicit tree: every node carries its full
//! conclusion. [`check_derivation`] validates each node against its rule
//! schema (premise counts, context discipline, eigenvariable freshness,
//! substitution correctness in the universal eliminations) and reports the
//! first offending node by path. There is no proof search; the forward
//! builders on [`Derivation`] construct well-shaped nodes from premises, and
//! the checker is the single source of truth for acceptance.
//!
//! Derivations can be stored in a line-oriented s-expression format (see
//! `parse_derivation` / `write_derivation`); embedded terms and formulas use
//! the ordinary term and formula syntax inside quoted strings.

use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{
    parse_fo_term, parse_formula, Formula, FoTerm, LogicError, PredRef,
};
use crate::syntax::{display_with_env, parse_term_with_env, SyntaxError, Term};

/// Errors from derivation construction, extraction, Horn-clause handling and
/// the derivation file format. Schema violations inside a derivation tree are
/// not errors but [`Rejection`] values, returned by [`check_derivation`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdequacyError {
    #[error("axiom index {index} out of range: the context has {len} hypotheses")]
    AxiomIndex { index: u32, len: usize },
    #[error("cannot discharge a hypothesis from an empty context")]
    EmptyContext,
    #[error("expected an implication, found '{found}'")]
    ExpectedImplication { found: Formula },
    #[error("expected a first-order universal, found '{found}'")]
    ExpectedUniversal1 { found: Formula },
    #[error("expected a second-order universal, found '{found}'")]
    ExpectedUniversal2 { found: Formula },
    #[error("universal binds a {want}-ary predicate, instantiation names {got} parameters")]
    TemplateParams { want: u32, got: usize },
    #[error("derivation has {hyps} hypotheses, got {given} realizers")]
    HypothesisCount { hyps: usize, given: usize },
    #[error("clause uses variable '{name}' but does not quantify it")]
    UnlistedVariable { name: String },
    #[error("clause quantifies '{name}' twice")]
    DuplicateVariable { name: String },
    #[error("clause term contains a dangling bound variable")]
    DanglingBound,
    #[error("witness has {got} values, the clause has {want} universals")]
    WitnessLength { want: usize, got: usize },
    #[error("exhaustive search over {n}^{vars} instances exceeds the budget")]
    SearchBudget { n: u64, vars: usize },
    #[error("derivation file error at byte {at}: {message}")]
    File { at: usize, message: String },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

// ---------------------------------------------------------------------------
// Judgments and derivations
// ---------------------------------------------------------------------------

/// A typing judgment: context telescope, subject term, asserted formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    /// Hypothesis formulas, innermost-first: `context[i]` types `Var(i)`.
    pub context: Vec<Formula>,
    pub term: Term,
    pub formula: Formula,
}

impl Judgment {
    pub fn new(context: Vec<Formula>, term: Term, formula: Formula) -> Judgment {
        Judgment { context, term, formula }
    }
}

/// The rule used at a derivation node, with its instantiation payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    /// Conclude hypothesis `index` of the context.
    Axiom { index: u32 },
    /// `cc` at an instance of `((A -> B) -> A) -> A`.
    Peirce,
    /// Any well-scoped term proves `Top`.
    TopIntro,
    /// From `Bot`, conclude anything.
    BotElim,
    /// Discharge the innermost hypothesis.
    ImpIntro,
    /// Apply premise 0 (the implication) to premise 1 (the argument).
    ImpElim,
    /// Generalize over the free individual variable `var`.
    All1Intro { var: String },
    /// Instantiate the bound individual with `witness`.
    All1Elim { witness: FoTerm },
    /// Generalize over the free `arity`-ary predicate variable `var`.
    All2Intro { var: String, arity: u32 },
    /// Instantiate the bound predicate: its uses at arguments `a...` become
    /// `template[params := a...]`.
    All2Elim { params: Vec<String>, template: Formula },
}

impl Rule {
    fn premise_count(&self) -> usize {
        match self {
            Rule::Axiom { .. } | Rule::Peirce | Rule::TopIntro => 0,
            Rule::ImpElim => 2,
            _ => 1,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Rule::Axiom { .. } => "axiom",
            Rule::Peirce => "peirce",
            Rule::TopIntro => "top-intro",
            Rule::BotElim => "bot-elim",
            Rule::ImpIntro => "imp-intro",
            Rule::ImpElim => "imp-elim",
            Rule::All1Intro { .. } => "all1-intro",
            Rule::All1Elim { .. } => "all1-elim",
            Rule::All2Intro { .. } => "all2-intro",
            Rule::All2Elim { .. } => "all2-elim",
        }
    }
}

/// A derivation node: rule, full conclusion, premise subtrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub judgment: Judgment,
    pub premises: Vec<Derivation>,
}

/// Forward constructors. Each builds the conclusion a rule instance produces
/// from its premises; they fail only where the conclusion cannot even be
/// written down (an out-of-range index, eliminating a non-universal). Side
/// conditions such as eigenvariable freshness are deliberately *not* checked
/// here — [`check_derivation`] is the authority, and the builders let tests
/// construct candidates for it.
impl Derivation {
    pub fn axiom(context: Vec<Formula>, index: u32) -> Result<Derivation, AdequacyError> {
        let formula = context
            .get(index as usize)
            .cloned()
            .ok_or(AdequacyError::AxiomIndex { index, len: context.len() })?;
        Ok(Derivation {
            rule: Rule::Axiom { index },
            judgment: Judgment::new(context, Term::var(index), formula),
            premises: vec![],
        })
    }

    /// `cc : ((a -> b) -> a) -> a`.
    pub fn peirce(context: Vec<Formula>, a: Formula, b: Formula) -> Derivation {
        let inner = Formula::imp(Formula::imp(a.clone(), b), a.clone());
        Derivation {
            rule: Rule::Peirce,
            judgment: Judgment::new(context, Term::Callcc, Formula::imp(inner, a)),
            premises: vec![],
        }
    }

    pub fn top_intro(context: Vec<Formula>, term: Term) -> Derivation {
        Derivation {
            rule: Rule::TopIntro,
            judgment: Judgment::new(context, term, Formula::Top),
            premises: vec![],
        }
    }

    pub fn bot_elim(premise: Derivation, formula: Formula) -> Derivation {
        let judgment = Judgment::new(
            premise.judgment.context.clone(),
            premise.judgment.term.clone(),
            formula,
        );
        Derivation { rule: Rule::BotElim, judgment, premises: vec![premise] }
    }

    /// Discharges the innermost hypothesis of the premise context.
    pub fn imp_intro(premise: Derivation) -> Result<Derivation, AdequacyError> {
        let p = &premise.judgment;
        let Some((hyp, rest)) = p.context.split_first() else {
            return Err(AdequacyError::EmptyContext);
        };
        let judgment = Judgment::new(
            rest.to_vec(),
            Term::abs(p.term.clone()),
            Formula::imp(hyp.clone(), p.formula.clone()),
        );
        Ok(Derivation { rule: Rule::ImpIntro, judgment, premises: vec![premise] })
    }

    pub fn imp_elim(fun: Derivation, arg: Derivation) -> Result<Derivation, AdequacyError> {
        let Formula::Imp(_, b) = &fun.judgment.formula else {
            return Err(AdequacyError::ExpectedImplication { found: fun.judgment.formula.clone() });
        };
        let judgment = Judgment::new(
            fun.judgment.context.clone(),
            Term::app(fun.judgment.term.clone(), arg.judgment.term.clone()),
            (**b).clone(),
        );
        Ok(Derivation { rule: Rule::ImpElim, judgment, premises: vec![fun, arg] })
    }

    pub fn all1_intro(premise: Derivation, var: &str) -> Derivation {
        let judgment = Judgment::new(
            premise.judgment.context.clone(),
            premise.judgment.term.clone(),
            Formula::forall_ind(var, premise.judgment.formula.clone()),
        );
        Derivation {
            rule: Rule::All1Intro { var: var.into() },
            judgment,
            premises: vec![premise],
        }
    }

    pub fn all1_elim(premise: Derivation, witness: FoTerm) -> Result<Derivation, AdequacyError> {
        let Formula::AllInd(_, body) = &premise.judgment.formula else {
            return Err(AdequacyError::ExpectedUniversal1 {
                found: premise.judgment.formula.clone(),
            });
        };
        let judgment = Judgment::new(
            premise.judgment.context.clone(),
            premise.judgment.term.clone(),
            Formula::open_ind(body, &witness),
        );
        Ok(Derivation { rule: Rule::All1Elim { witness }, judgment, premises: vec![premise] })
    }

    pub fn all2_intro(premise: Derivation, var: &str, arity: u32) -> Derivation {
        let judgment = Judgment::new(
            premise.judgment.context.clone(),
            premise.judgment.term.clone(),
            Formula::forall_pred(var, arity, premise.judgment.formula.clone()),
        );
        Derivation {
            rule: Rule::All2Intro { var: var.into(), arity },
            judgment,
            premises: vec![premise],
        }
    }

    pub fn all2_elim(
        premise: Derivation,
        params: Vec<String>,
        template: Formula,
    ) -> Result<Derivation, AdequacyError> {
        let Formula::AllPred(_, arity, body) = &premise.judgment.formula else {
            return Err(AdequacyError::ExpectedUniversal2 {
                found: premise.judgment.formula.clone(),
            });
        };
        if params.len() != *arity as usize {
            return Err(AdequacyError::TemplateParams { want: *arity, got: params.len() });
        }
        let judgment = Judgment::new(
            premise.judgment.context.clone(),
            premise.judgment.term.clone(),
            Formula::open_pred(body, &params, &template),
        );
        Ok(Derivation { rule: Rule::All2Elim { params, template }, judgment, premises: vec![premise] })
    }
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

/// Why a node failed its rule schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reject {
    /// Wrong number of premise subtrees for the rule.
    PremiseCount { want: usize, got: usize },
    /// The subject term has a free index outside the context.
    UndeclaredVariable { depth: u32 },
    /// A premise context differs from what the rule demands.
    ContextMismatch,
    /// The conclusion term is not the rule's image of the premise terms.
    TermMismatch,
    /// The conclusion formula is not the required instance.
    FormulaMismatch,
    HypothesisIndex { index: u32, len: usize },
    /// `cc` typed by something other than an instance of Peirce's law.
    NotPeirce,
    PremiseNotBot,
    /// An implication rule applied to a non-implication.
    NotImp,
    NotUniversal1,
    NotUniversal2,
    /// The generalized variable occurs free in the context.
    EigenvariableNotFresh { var: String },
    /// A predicate variable used at an arity other than the binder's.
    PredArityMismatch { var: String, want: u32, got: u32 },
    DuplicateParam { name: String },
    /// A witness or template is structurally unusable.
    BadPayload { reason: String },
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reject::PremiseCount { want, got } => {
                write!(f, "rule takes {want} premises, node has {got}")
            }
            Reject::UndeclaredVariable { depth } => {
                write!(f, "term mentions a variable beyond the {depth} declared hypotheses")
            }
            Reject::ContextMismatch => write!(f, "premise context does not match"),
            Reject::TermMismatch => write!(f, "conclusion term does not follow from the premises"),
            Reject::FormulaMismatch => write!(f, "conclusion formula is not the required instance"),
            Reject::HypothesisIndex { index, len } => {
                write!(f, "hypothesis {index} out of range ({len} declared)")
            }
            Reject::NotPeirce => write!(f, "formula is not an instance of Peirce's law"),
            Reject::PremiseNotBot => write!(f, "premise does not conclude Bot"),
            Reject::NotImp => write!(f, "formula is not an implication"),
            Reject::NotUniversal1 => write!(f, "premise is not a first-order universal"),
            Reject::NotUniversal2 => write!(f, "premise is not a second-order universal"),
            Reject::EigenvariableNotFresh { var } => {
                write!(f, "eigenvariable '{var}' occurs free in the context")
            }
            Reject::PredArityMismatch { var, want, got } => {
                write!(f, "predicate variable '{var}' bound at arity {want} but used at {got}")
            }
            Reject::DuplicateParam { name } => write!(f, "duplicate parameter '{name}'"),
            Reject::BadPayload { reason } => write!(f, "bad rule payload: {reason}"),
        }
    }
}

/// A schema violation, located by the premise path from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Premise indices from the root; empty means the root itself.
    pub path: Vec<usize>,
    pub reason: Reject,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "at the conclusion: {}", self.reason)
        } else {
            let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
            write!(f, "at premise {}: {}", path.join("."), self.reason)
        }
    }
}

/// Validates every node of a derivation against its rule schema.
///
/// On failure, reports the shallowest offending node in depth-first order.
/// Schema checks relate each node's conclusion to its premises' conclusions,
/// so an error in how two levels fit together is reported at the parent.
pub fn check_derivation(d: &Derivation) -> Result<(), Rejection> {
    let mut path = Vec::new();
    check_at(d, &mut path)
}

fn check_at(d: &Derivation, path: &mut Vec<usize>) -> Result<(), Rejection> {
    if let Err(reason) = check_node(d) {
        return Err(Rejection { path: path.clone(), reason });
    }
    for (i, premise) in d.premises.iter().enumerate() {
        path.push(i);
        let r = check_at(premise, path);
        path.pop();
        r?;
    }
    Ok(())
}

fn check_node(d: &Derivation) -> Result<(), Reject> {
    let j = &d.judgment;
    let depth = j.context.len() as u32;
    if !j.term.is_closed_at(depth) {
        return Err(Reject::UndeclaredVariable { depth });
    }
    let want = d.rule.premise_count();
    if d.premises.len() != want {
        return Err(Reject::PremiseCount { want, got: d.premises.len() });
    }
    match &d.rule {
        Rule::Axiom { index } => {
            let formula = j
                .context
                .get(*index as usize)
                .ok_or(Reject::HypothesisIndex { index: *index, len: j.context.len() })?;
            if j.term != Term::Var(*index) {
                return Err(Reject::TermMismatch);
            }
            if j.formula != *formula {
                return Err(Reject::FormulaMismatch);
            }
        }
        Rule::Peirce => {
            if j.term != Term::Callcc {
                return Err(Reject::TermMismatch);
            }
            if !is_peirce(&j.formula) {
                return Err(Reject::NotPeirce);
            }
        }
        Rule::TopIntro => {
            if j.formula != Formula::Top {
                return Err(Reject::FormulaMismatch);
            }
        }
        Rule::BotElim => {
            let p = &d.premises[0].judgment;
            same_context(j, p)?;
            same_term(j, p)?;
            if p.formula != Formula::Bot {
                return Err(Reject::PremiseNotBot);
            }
        }
        Rule::ImpIntro => {
            let p = &d.premises[0].judgment;
            let Formula::Imp(a, b) = &j.formula else {
                return Err(Reject::NotImp);
            };
            let expected: Vec<Formula> = std::iter::once((**a).clone())
                .chain(j.context.iter().cloned())
                .collect();
            if p.context != expected {
                return Err(Reject::ContextMismatch);
            }
            if p.formula != **b {
                return Err(Reject::FormulaMismatch);
            }
            match &j.term {
                Term::Abs(_, body) if **body == p.term => {}
                _ => return Err(Reject::TermMismatch),
            }
        }
        Rule::ImpElim => {
            let pf = &d.premises[0].judgment;
            let pa = &d.premises[1].judgment;
            same_context(j, pf)?;
            same_context(j, pa)?;
            let Formula::Imp(a, b) = &pf.formula else {
                return Err(Reject::NotImp);
            };
            if pa.formula != **a || j.formula != **b {
                return Err(Reject::FormulaMismatch);
            }
            match &j.term {
                Term::App(fun, arg) if **fun == pf.term && **arg == pa.term => {}
                _ => return Err(Reject::TermMismatch),
            }
        }
        Rule::All1Intro { var } => {
            let p = &d.premises[0].judgment;
            same_context(j, p)?;
            same_term(j, p)?;
            if j.context.iter().any(|c| c.free_ind_vars().contains(var)) {
                return Err(Reject::EigenvariableNotFresh { var: var.clone() });
            }
            if j.formula != Formula::forall_ind(var, p.formula.clone()) {
                return Err(Reject::FormulaMismatch);
            }
        }
        Rule::All1Elim { witness } => {
            let p = &d.premises[0].judgment;
            same_context(j, p)?;
            same_term(j, p)?;
            validate_fo_term(witness).map_err(|reason| Reject::BadPayload { reason })?;
            let Formula::AllInd(_, body) = &p.formula else {
                return Err(Reject::NotUniversal1);
            };
            if j.formula != Formula::open_ind(body, witness) {
                return Err(Reject::FormulaMismatch);
            }
        }
        Rule::All2Intro { var, arity } => {
            let p = &d.premises[0].judgment;
            same_context(j, p)?;
            same_term(j, p)?;
            if j.context.iter().any(|c| c.free_pred_vars().contains(var)) {
                return Err(Reject::EigenvariableNotFresh { var: var.clone() });
            }
            let mut used = BTreeSet::new();
            free_pred_arities(&p.formula, var, &mut used);
            if let Some(&bad) = used.iter().find(|&&a| a != *arity as usize) {
                return Err(Reject::PredArityMismatch {
                    var: var.clone(),
                    want: *arity,
                    got: bad as u32,
                });
            }
            if j.formula != Formula::forall_pred(var, *arity, p.formula.clone()) {
                return Err(Reject::FormulaMismatch);
            }
        }
        Rule::All2Elim { params, template } => {
            let p = &d.premises[0].judgment;
            same_context(j, p)?;
            same_term(j, p)?;
            for (i, name) in params.iter().enumerate() {
                if params[..i].contains(name) {
                    return Err(Reject::DuplicateParam { name: name.clone() });
                }
            }
            let Formula::AllPred(_, arity, body) = &p.formula else {
                return Err(Reject::NotUniversal2);
            };
            if params.len() != *arity as usize {
                return Err(Reject::PredArityMismatch {
                    var: "_".into(),
                    want: *arity,
                    got: params.len() as u32,
                });
            }
            // A malformed universal (binder used at the wrong arity) cannot
            // be instantiated; rejecting here keeps open_pred total.
            let mut used = BTreeSet::new();
            bound_pred_arities(body, 0, &mut used);
            if let Some(&bad) = used.iter().find(|&&a| a != *arity as usize) {
                return Err(Reject::PredArityMismatch {
                    var: "_".into(),
                    want: *arity,
                    got: bad as u32,
                });
            }
            if j.formula != Formula::open_pred(body, params, template) {
                return Err(Reject::FormulaMismatch);
            }
        }
    }
    Ok(())
}

fn same_context(j: &Judgment, p: &Judgment) -> Result<(), Reject> {
    if j.context != p.context {
        return Err(Reject::ContextMismatch);
    }
    Ok(())
}

fn same_term(j: &Judgment, p: &Judgment) -> Result<(), Reject> {
    if j.term != p.term {
        return Err(Reject::TermMismatch);
    }
    Ok(())
}

fn is_peirce(f: &Formula) -> bool {
    // ((A -> B) -> A) -> A for some A, B.
    let Formula::Imp(left, a) = f else { return false };
    let Formula::Imp(ab, a2) = &**left else { return false };
    let Formula::Imp(a3, _b) = &**ab else { return false };
    a2 == a && a3 == a
}

/// Structural sanity for rule payload terms: no dangling de Bruijn indices,
/// registry functions at the right arities.
fn validate_fo_term(t: &FoTerm) -> Result<(), String> {
    match t {
        FoTerm::Var(_) | FoTerm::Lit(_) => Ok(()),
        FoTerm::Bound(i) => Err(format!("dangling bound variable ^{i}")),
        FoTerm::App(name, args) => {
            match FoTerm::fn_arity(name) {
                None => return Err(format!("unknown function '{name}'")),
                Some(want) if want != args.len() => {
                    return Err(format!(
                        "function '{name}' expects {want} arguments, got {}",
                        args.len()
                    ));
                }
                Some(_) => {}
            }
            args.iter().try_for_each(validate_fo_term)
        }
    }
}

/// Arities at which the free predicate variable `name` is used.
fn free_pred_arities(f: &Formula, name: &str, out: &mut BTreeSet<usize>) {
    match f {
        Formula::Top | Formula::Bot | Formula::Table { .. } => {}
        Formula::Atom { pred, args } => {
            if matches!(pred, PredRef::Var(n) if n == name) {
                out.insert(args.len());
            }
        }
        Formula::Imp(a, b) | Formula::Inter(a, b) | Formula::Union(a, b) => {
            free_pred_arities(a, name, out);
            free_pred_arities(b, name, out);
        }
        Formula::AllInd(_, b) => free_pred_arities(b, name, out),
        Formula::AllPred(_, _, b) => free_pred_arities(b, name, out),
        Formula::EqImp { body, .. } => free_pred_arities(body, name, out),
    }
}

/// Arities at which bound predicate index `target` (relative to the formula's
/// root) is used.
fn bound_pred_arities(f: &Formula, target: u32, out: &mut BTreeSet<usize>) {
    match f {
        Formula::Top | Formula::Bot | Formula::Table { .. } => {}
        Formula::Atom { pred, args } => {
            if matches!(pred, PredRef::Bound(i) if *i == target) {
                out.insert(args.len());
            }
        }
        Formula::Imp(a, b) | Formula::Inter(a, b) | Formula::Union(a, b) => {
            bound_pred_arities(a, target, out);
            bound_pred_arities(b, target, out);
        }
        Formula::AllInd(_, b) => bound_pred_arities(b, target, out),
        Formula::AllPred(_, _, b) => bound_pred_arities(b, target + 1, out),
        Formula::EqImp { body, .. } => bound_pred_arities(body, target, out),
    }
}

// ---------------------------------------------------------------------------
// Realizer extraction
// ---------------------------------------------------------------------------

/// Substitutes one closed realizer per hypothesis into the derivation's
/// subject term, innermost-first like the context itself.
///
/// The derivation should have passed [`check_derivation`]; this function only
/// performs the substitution and does not re-validate the tree.
pub fn extract_realizer(d: &Derivation, hyp_realizers: &[Term]) -> Result<Term, AdequacyError> {
    let hyps = d.judgment.context.len();
    if hyp_realizers.len() != hyps {
        return Err(AdequacyError::HypothesisCount { hyps, given: hyp_realizers.len() });
    }
    Ok(d.judgment.term.substitute(hyp_realizers)?)
}

// ---------------------------------------------------------------------------
// Horn clauses
// ---------------------------------------------------------------------------

/// A universally quantified implication chain between equations:
/// `forall vars (a1 = b1 -> ... -> an = bn -> goal)` where the goal is an
/// equation (definite clause) or `Bot` (goal clause).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub vars: Vec<String>,
    pub premises: Vec<(FoTerm, FoTerm)>,
    /// `Some` for a definite clause, `None` for a goal clause (`Bot`).
    pub goal: Option<(FoTerm, FoTerm)>,
}

/// A truth certificate for a Horn clause, supplied by the caller: either the
/// clause holds in the intended domain, or the given variable values
/// invalidate it. [`HornClause::counterexample`] searches a finite domain for
/// the latter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HornTruth {
    True,
    FalseAt(Vec<u64>),
}

impl HornClause {
    fn terms(&self) -> impl Iterator<Item = &FoTerm> {
        self.premises
            .iter()
            .chain(self.goal.iter())
            .flat_map(|(a, b)| [a, b])
    }

    fn validate(&self) -> Result<(), AdequacyError> {
        for (i, v) in self.vars.iter().enumerate() {
            if self.vars[..i].contains(v) {
                return Err(AdequacyError::DuplicateVariable { name: v.clone() });
            }
        }
        for t in self.terms() {
            validate_clause_term(t, &self.vars)?;
        }
        Ok(())
    }

    /// The clause as a formula (equations in their second-order encoding).
    pub fn formula(&self) -> Result<Formula, AdequacyError> {
        self.validate()?;
        let eqs = self
            .premises
            .iter()
            .map(|(a, b)| Formula::eq(a.clone(), b.clone()));
        let goal = match &self.goal {
            Some((c, d)) => Formula::eq(c.clone(), d.clone()),
            None => Formula::Bot,
        };
        let mut f = Formula::imp_chain(eqs.collect::<Vec<_>>(), goal);
        for v in self.vars.iter().rev() {
            f = Formula::forall_ind(v, f);
        }
        Ok(f)
    }

    /// Truth of the instance at `values` over the clamped domain `{0..n-1}`:
    /// if every premise equation holds, the goal must.
    pub fn holds_at(&self, values: &[u64], n: u64) -> Result<bool, AdequacyError> {
        self.validate()?;
        if values.len() != self.vars.len() {
            return Err(AdequacyError::WitnessLength {
                want: self.vars.len(),
                got: values.len(),
            });
        }
        for (a, b) in &self.premises {
            if eval_clause_term(a, &self.vars, values, n)?
                != eval_clause_term(b, &self.vars, values, n)?
            {
                return Ok(true);
            }
        }
        match &self.goal {
            Some((c, d)) => Ok(eval_clause_term(c, &self.vars, values, n)?
                == eval_clause_term(d, &self.vars, values, n)?),
            None => Ok(false),
        }
    }

    /// Exhaustively searches `{0..n-1}^vars` for a falsifying tuple. `None`
    /// means the clause holds everywhere on that finite domain — which is
    /// complete for a model of size `n`, but only evidence for the infinite
    /// domain.
    pub fn counterexample(&self, n: u64) -> Result<Option<Vec<u64>>, AdequacyError> {
        self.validate()?;
        let m = self.vars.len();
        let total = n.checked_pow(m as u32).filter(|&t| t <= 1 << 20).ok_or(
            AdequacyError::SearchBudget { n, vars: m },
        )?;
        let mut values = vec![0u64; m];
        for code in 0..total {
            let mut c = code;
            for v in values.iter_mut() {
                *v = c % n;
                c /= n;
            }
            if !self.holds_at(&values, n)? {
                return Ok(Some(values));
            }
        }
        Ok(None)
    }
}

fn validate_clause_term(t: &FoTerm, vars: &[String]) -> Result<(), AdequacyError> {
    match t {
        FoTerm::Var(name) => {
            if vars.iter().any(|v| v == name) {
                Ok(())
            } else {
                Err(AdequacyError::UnlistedVariable { name: name.clone() })
            }
        }
        FoTerm::Bound(_) => Err(AdequacyError::DanglingBound),
        FoTerm::Lit(_) => Ok(()),
        FoTerm::App(name, args) => {
            let want = FoTerm::fn_arity(name)
                .ok_or_else(|| LogicError::UnknownFunction { name: name.clone() })?;
            if want != args.len() {
                return Err(LogicError::FunctionArity {
                    name: name.clone(),
                    want,
                    got: args.len(),
                }
                .into());
            }
            args.iter().try_for_each(|a| validate_clause_term(a, vars))
        }
    }
}

fn eval_clause_term(
    t: &FoTerm,
    vars: &[String],
    values: &[u64],
    n: u64,
) -> Result<u64, AdequacyError> {
    match t {
        FoTerm::Var(name) => vars
            .iter()
            .position(|v| v == name)
            .map(|i| values[i].min(n - 1))
            .ok_or_else(|| AdequacyError::UnlistedVariable { name: name.clone() }),
        FoTerm::Bound(_) => Err(AdequacyError::DanglingBound),
        FoTerm::Lit(k) => Ok((*k).min(n - 1)),
        FoTerm::App(name, args) => {
            let vals: Vec<u64> = args
                .iter()
                .map(|a| eval_clause_term(a, vars, values, n))
                .collect::<Result<_, _>>()?;
            Ok(FoTerm::eval_fn(name, &vals, n)?)
        }
    }
}

/// The uniform realizer of a Horn clause given a truth certificate.
///
/// For a true clause with premises `t1..tn` the realizer chains them:
/// `\t1...\tn. \y. t1 (... (tn y))` for a definite clause, and the chain
/// with the identity plugged into the hole, `\t1...\tn. t1 (... (tn I))`,
/// for a goal clause. For a false clause (the certificate carries the
/// falsifying values), `\f. f I ... I` refutes it: it realizes the negation
/// of the instance, i.e. `H -> Bot` for a goal clause and `H -> Top -> Bot`
/// for a definite one.
pub fn horn_realizer(h: &HornClause, truth: &HornTruth) -> Result<Term, AdequacyError> {
    h.validate()?;
    let n = h.premises.len();
    Ok(match truth {
        HornTruth::FalseAt(values) => {
            if values.len() != h.vars.len() {
                return Err(AdequacyError::WitnessLength {
                    want: h.vars.len(),
                    got: values.len(),
                });
            }
            Term::lam("f", Term::apply(Term::var(0), (0..n).map(|_| Term::id())))
        }
        HornTruth::True => match &h.goal {
            Some(_) => {
                // \t1...\tn. \y. t1 (... (tn y))
                let mut body = Term::var(0);
                for i in 1..=n {
                    body = Term::app(Term::var(i as u32), body);
                }
                let mut t = Term::lam("y", body);
                for i in (1..=n).rev() {
                    t = Term::lam(&format!("t{i}"), t);
                }
                t
            }
            None => {
                // \t1...\tn. t1 (... (tn I))
                let mut body = Term::id();
                for i in 0..n {
                    body = Term::app(Term::var(i as u32), body);
                }
                let mut t = body;
                for i in (1..=n).rev() {
                    t = Term::lam(&format!("t{i}"), t);
                }
                t
            }
        },
    })
}

// ---------------------------------------------------------------------------
// Numerals and the fixpoint combinator
// ---------------------------------------------------------------------------

/// The `n`-th Church numeral `\f.\x. f (f ... (f x))`.
pub fn church(n: u32) -> Term {
    let mut body = Term::var(0);
    for _ in 0..n {
        body = Term::app(Term::var(1), body);
    }
    Term::lam("f", Term::lam("x", body))
}

/// The Church successor `\n.\f.\x. n f (f x)`.
pub fn church_succ() -> Term {
    Term::lam(
        "n",
        Term::lam(
            "f",
            Term::lam(
                "x",
                Term::app(
                    Term::app(Term::var(2), Term::var(1)),
                    Term::app(Term::var(1), Term::var(0)),
                ),
            ),
        ),
    )
}

/// The fixpoint combinator seeded with a closed head: both halves of
/// `\d. t (d d)` applied to each other. Running `y_comb(t) * pi` pushes,
/// grabs and pushes once more, reaching `t * y_comb(t) . pi` in three steps.
pub fn y_comb(t: &Term) -> Term {
    debug_assert!(t.is_closed());
    let delta = Term::lam("d", Term::app(t.clone(), Term::app(Term::var(0), Term::var(0))));
    Term::app(delta.clone(), delta)
}

/// The recursor `y_comb(\y. psi church(0) (church_succ y))`: unrolls in six
/// steps to `psi * church(0) . (church_succ y_psi(psi)) . pi`.
pub fn y_psi(psi: &Term) -> Term {
    debug_assert!(psi.is_closed());
    let head = Term::lam(
        "y",
        Term::apply(psi.clone(), [church(0), Term::app(church_succ(), Term::var(0))]),
    );
    y_comb(&head)
}

// ---------------------------------------------------------------------------
// Derivation files
// ---------------------------------------------------------------------------
//
// One node per parenthesized record:
//
//   (imp-intro
//     (ctx (f "A -> B") (x "A"))      ; hypotheses, outermost first
//     (term "f x")                    ; free variables named by the ctx
//     (formula "B")
//     (premises <node> ...))          ; omitted when the rule has none
//
// Rule payloads sit between (formula ...) and (premises ...):
//   axiom       (index N)
//   all1-intro  (var x)
//   all1-elim   (witness "s(0)")
//   all2-intro  (var X) (arity N)
//   all2-elim   (params y z) (template "y = z")
//
// `;` starts a comment running to end of line. Inside quoted strings, `\"`
// and `\\` are escapes; any other backslash is literal, so lambda terms can
// be written naturally.

#[derive(Debug, Clone, PartialEq, Eq)]
enum STok {
    Open,
    Close,
    Atom(String),
    Str(String),
}

fn slex(src: &str) -> Result<Vec<(usize, STok)>, AdequacyError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            c if c.is_whitespace() => i += 1,
            ';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push((i, STok::Open));
                i += 1;
            }
            ')' => {
                out.push((i, STok::Close));
                i += 1;
            }
            '"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(AdequacyError::File {
                                at: start,
                                message: "unterminated string".into(),
                            });
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') if matches!(bytes.get(i + 1), Some(b'"') | Some(b'\\')) => {
                            s.push(bytes[i + 1] as char);
                            i += 2;
                        }
                        Some(&b) => {
                            s.push(b as char);
                            i += 1;
                        }
                    }
                }
                out.push((start, STok::Str(s)));
            }
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let b = bytes[i] as char;
                    if b.is_ascii_alphanumeric() || b == '-' || b == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((start, STok::Atom(src[start..i].into())));
            }
            c => {
                return Err(AdequacyError::File {
                    at: i,
                    message: format!("unexpected character '{c}'"),
                });
            }
        }
    }
    Ok(out)
}

struct SParser {
    toks: Vec<(usize, STok)>,
    pos: usize,
}

impl SParser {
    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or_else(
            || self.toks.last().map_or(0, |(at, _)| *at + 1),
            |(at, _)| *at,
        )
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, AdequacyError> {
        Err(AdequacyError::File { at: self.here(), message: message.into() })
    }

    fn next(&mut self) -> Result<&STok, AdequacyError> {
        let at = self.here();
        match self.toks.get(self.pos) {
            Some((_, t)) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(AdequacyError::File { at, message: "unexpected end of input".into() }),
        }
    }

    fn peek(&self) -> Option<&STok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn open(&mut self) -> Result<(), AdequacyError> {
        match self.next()? {
            STok::Open => Ok(()),
            t => {
                let msg = format!("expected '(', found {t:?}");
                self.pos -= 1;
                self.fail(msg)
            }
        }
    }

    fn close(&mut self) -> Result<(), AdequacyError> {
        match self.next()? {
            STok::Close => Ok(()),
            t => {
                let msg = format!("expected ')', found {t:?}");
                self.pos -= 1;
                self.fail(msg)
            }
        }
    }

    fn atom(&mut self) -> Result<String, AdequacyError> {
        match self.next()? {
            STok::Atom(s) => Ok(s.clone()),
            t => {
                let msg = format!("expected an atom, found {t:?}");
                self.pos -= 1;
                self.fail(msg)
            }
        }
    }

    fn string(&mut self) -> Result<(usize, String), AdequacyError> {
        let at = self.here();
        match self.next()? {
            STok::Str(s) => Ok((at, s.clone())),
            t => {
                let msg = format!("expected a quoted string, found {t:?}");
                self.pos -= 1;
                self.fail(msg)
            }
        }
    }

    fn nat(&mut self) -> Result<u32, AdequacyError> {
        let at = self.here();
        let a = self.atom()?;
        a.parse().map_err(|_| AdequacyError::File {
            at,
            message: format!("expected a number, found '{a}'"),
        })
    }

    /// `(keyword ...` — opens a labeled block.
    fn open_tagged(&mut self, keyword: &str) -> Result<(), AdequacyError> {
        self.open()?;
        let at = self.here();
        let a = self.atom()?;
        if a != keyword {
            return Err(AdequacyError::File {
                at,
                message: format!("expected '{keyword}', found '{a}'"),
            });
        }
        Ok(())
    }

    fn node(&mut self) -> Result<Derivation, AdequacyError> {
        self.open()?;
        let tag_at = self.here();
        let tag = self.atom()?;

        self.open_tagged("ctx")?;
        let mut names: Vec<String> = Vec::new();
        let mut outer_first: Vec<Formula> = Vec::new();
        while matches!(self.peek(), Some(STok::Open)) {
            self.open()?;
            let name_at = self.here();
            let name = self.atom()?;
            if names.contains(&name) {
                return Err(AdequacyError::File {
                    at: name_at,
                    message: format!("hypothesis '{name}' declared twice"),
                });
            }
            let (f_at, f_src) = self.string()?;
            outer_first.push(embedded(f_at, parse_formula(&f_src))?);
            names.push(name);
            self.close()?;
        }
        self.close()?;

        self.open_tagged("term")?;
        let (t_at, t_src) = self.string()?;
        let env: Vec<&str> = names.iter().map(String::as_str).collect();
        let term = embedded(t_at, parse_term_with_env(&t_src, &env))?;
        self.close()?;

        self.open_tagged("formula")?;
        let (f_at, f_src) = self.string()?;
        let formula = embedded(f_at, parse_formula(&f_src))?;
        self.close()?;

        let rule = match tag.as_str() {
            "axiom" => {
                self.open_tagged("index")?;
                let index = self.nat()?;
                self.close()?;
                Rule::Axiom { index }
            }
            "peirce" => Rule::Peirce,
            "top-intro" => Rule::TopIntro,
            "bot-elim" => Rule::BotElim,
            "imp-intro" => Rule::ImpIntro,
            "imp-elim" => Rule::ImpElim,
            "all1-intro" => {
                self.open_tagged("var")?;
                let var = self.atom()?;
                self.close()?;
                Rule::All1Intro { var }
            }
            "all1-elim" => {
                self.open_tagged("witness")?;
                let (w_at, w_src) = self.string()?;
                let witness = embedded(w_at, parse_fo_term(&w_src))?;
                self.close()?;
                Rule::All1Elim { witness }
            }
            "all2-intro" => {
                self.open_tagged("var")?;
                let var = self.atom()?;
                self.close()?;
                self.open_tagged("arity")?;
                let arity = self.nat()?;
                self.close()?;
                Rule::All2Intro { var, arity }
            }
            "all2-elim" => {
                self.open_tagged("params")?;
                let mut params = Vec::new();
                while matches!(self.peek(), Some(STok::Atom(_))) {
                    params.push(self.atom()?);
                }
                self.close()?;
                self.open_tagged("template")?;
                let (tp_at, tp_src) = self.string()?;
                let template = embedded(tp_at, parse_formula(&tp_src))?;
                self.close()?;
                Rule::All2Elim { params, template }
            }
            other => {
                return Err(AdequacyError::File {
                    at: tag_at,
                    message: format!("unknown rule tag '{other}'"),
                });
            }
        };

        let mut premises = Vec::new();
        if matches!(self.peek(), Some(STok::Open)) {
            self.open_tagged("premises")?;
            while matches!(self.peek(), Some(STok::Open)) {
                premises.push(self.node()?);
            }
            self.close()?;
        }
        self.close()?;

        // Files list hypotheses outermost-first; the telescope stores them
        // innermost-first.
        outer_first.reverse();
        Ok(Derivation {
            rule,
            judgment: Judgment::new(outer_first, term, formula),
            premises,
        })
    }
}

fn embedded<T, E: fmt::Display>(at: usize, r: Result<T, E>) -> Result<T, AdequacyError> {
    r.map_err(|e| AdequacyError::File { at, message: e.to_string() })
}

/// Parses one derivation from its file form.
pub fn parse_derivation(src: &str) -> Result<Derivation, AdequacyError> {
    let mut p = SParser { toks: slex(src)?, pos: 0 };
    let d = p.node()?;
    if p.peek().is_some() {
        return p.fail("trailing input after the derivation");
    }
    Ok(d)
}

/// Prints a derivation in the file format; hypotheses get generated names
/// `h1, h2, ...` outermost-first. The output parses back to an equal tree.
pub fn write_derivation(d: &Derivation) -> String {
    let mut out = String::new();
    write_node(d, 0, &mut out);
    out.push('\n');
    out
}

fn write_node(d: &Derivation, indent: usize, out: &mut String) {
    use fmt::Write;

    let pad = "  ".repeat(indent);
    let j = &d.judgment;
    let names: Vec<String> = (1..=j.context.len()).map(|i| format!("h{i}")).collect();
    let env: Vec<&str> = names.iter().map(String::as_str).collect();

    let _ = write!(out, "{pad}({}\n{pad}  (ctx", d.rule.tag());
    for (name, f) in names.iter().zip(j.context.iter().rev()) {
        let _ = write!(out, " ({name} \"{}\")", quote(&f.to_string()));
    }
    let _ = writeln!(out, ")");
    let _ = writeln!(out, "{pad}  (term \"{}\")", quote(&display_with_env(&j.term, &env)));
    let _ = writeln!(out, "{pad}  (formula \"{}\")", quote(&j.formula.to_string()));
    match &d.rule {
        Rule::Axiom { index } => {
            let _ = writeln!(out, "{pad}  (index {index})");
        }
        Rule::All1Intro { var } => {
            let _ = writeln!(out, "{pad}  (var {var})");
        }
        Rule::All1Elim { witness } => {
            let _ = writeln!(out, "{pad}  (witness \"{}\")", quote(&witness.to_string()));
        }
        Rule::All2Intro { var, arity } => {
            let _ = writeln!(out, "{pad}  (var {var})");
            let _ = writeln!(out, "{pad}  (arity {arity})");
        }
        Rule::All2Elim { params, template } => {
            let _ = write!(out, "{pad}  (params");
            for p in params {
                let _ = write!(out, " {p}");
            }
            let _ = writeln!(out, ")");
            let _ = writeln!(out, "{pad}  (template \"{}\")", quote(&template.to_string()));
        }
        _ => {}
    }
    if d.premises.is_empty() {
        // Close on the last field's line.
        out.pop();
        out.push(')');
    } else {
        let _ = writeln!(out, "{pad}  (premises");
        for (i, p) in d.premises.iter().enumerate() {
            write_node(p, indent + 2, out);
            if i + 1 < d.premises.len() {
                out.push('\n');
            }
        }
        let _ = write!(out, "))");
    }
}

fn quote(s: &str) -> String {
    // Only '"' needs an escape; backslashes in term syntax are never followed
    // by '"' or '\', so the lenient reader keeps them literal.
    s.replace('"', "\\\"")
}

/// Convenience re-export: the relativized induction predicate used by the
/// numeral toolkit lives with the other formula families.
pub use crate::logic::families::nat as nat_formula;

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{run, StepRule};
    use crate::syntax::{parse_term, Instr, Process, Stack};

    fn pvar(name: &str) -> Formula {
        Formula::atom(PredRef::Var(name.into()), [])
    }

    fn formula(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    /// `\x.\y. x : A -> B -> A`, built forward.
    fn k_derivation() -> Derivation {
        let (a, b) = (pvar("A"), pvar("B"));
        let ax = Derivation::axiom(vec![b, a], 1).unwrap();
        Derivation::imp_intro(Derivation::imp_intro(ax).unwrap()).unwrap()
    }

    #[test]
    fn k_combinator_checks_and_extracts() {
        let d = k_derivation();
        assert_eq!(d.judgment.formula, formula("A -> B -> A"));
        check_derivation(&d).unwrap();
        let t = extract_realizer(&d, &[]).unwrap();
        assert_eq!(t, parse_term("\\x. \\y. x").unwrap());
    }

    #[test]
    fn axiom_extraction_is_the_given_realizer() {
        let d = Derivation::axiom(vec![pvar("A")], 0).unwrap();
        check_derivation(&d).unwrap();
        let u = parse_term("\\x. x cc").unwrap();
        assert_eq!(extract_realizer(&d, &[u.clone()]).unwrap(), u);
        assert_eq!(
            extract_realizer(&d, &[]),
            Err(AdequacyError::HypothesisCount { hyps: 1, given: 0 })
        );
    }

    #[test]
    fn peirce_checks_and_rejects_other_shapes() {
        let d = Derivation::peirce(vec![], pvar("A"), pvar("B"));
        assert_eq!(d.judgment.formula, formula("((A -> B) -> A) -> A"));
        check_derivation(&d).unwrap();

        let mut bad = d.clone();
        bad.judgment.formula = formula("((A -> B) -> A) -> B");
        assert_eq!(
            check_derivation(&bad),
            Err(Rejection { path: vec![], reason: Reject::NotPeirce })
        );
    }

    #[test]
    fn undeclared_variables_are_rejected() {
        let mut d = Derivation::top_intro(vec![], Term::var(0));
        assert_eq!(
            check_derivation(&d),
            Err(Rejection { path: vec![], reason: Reject::UndeclaredVariable { depth: 0 } })
        );
        d.judgment.context.push(pvar("A"));
        check_derivation(&d).unwrap();
    }

    #[test]
    fn bot_elim_requires_a_bot_premise() {
        let ax = Derivation::axiom(vec![Formula::Bot], 0).unwrap();
        let d = Derivation::bot_elim(ax, pvar("A"));
        check_derivation(&d).unwrap();

        let ax = Derivation::axiom(vec![pvar("B")], 0).unwrap();
        let d = Derivation::bot_elim(ax, pvar("A"));
        assert_eq!(
            check_derivation(&d),
            Err(Rejection { path: vec![], reason: Reject::PremiseNotBot })
        );
    }

    #[test]
    fn eigenvariable_freshness_is_enforced() {
        // x free in the context: generalizing over it must fail.
        let hyp = formula("X(x)");
        let ax = Derivation::axiom(vec![hyp.clone()], 0).unwrap();
        let d = Derivation::all1_intro(ax, "x");
        assert_eq!(
            check_derivation(&d),
            Err(Rejection {
                path: vec![],
                reason: Reject::EigenvariableNotFresh { var: "x".into() }
            })
        );

        // A fresh variable generalizes fine: from forall y X(y), conclude
        // forall z X(z) by eliminating at z and reintroducing.
        let ax = Derivation::axiom(vec![formula("forall y X(y)")], 0).unwrap();
        let inst = Derivation::all1_elim(ax, FoTerm::var("z")).unwrap();
        assert_eq!(inst.judgment.formula, formula("X(z)"));
        let gen = Derivation::all1_intro(inst, "z");
        assert_eq!(gen.judgment.formula, formula("forall z X(z)"));
        check_derivation(&gen).unwrap();
    }

    #[test]
    fn all1_elim_substitutes_the_witness() {
        let ax = Derivation::axiom(vec![formula("forall x (x = s(x) -> X(x))")], 0).unwrap();
        let d = Derivation::all1_elim(ax, parse_fo_term("s(0)").unwrap()).unwrap();
        assert_eq!(d.judgment.formula, formula("s(0) = s(s(0)) -> X(s(0))"));
        check_derivation(&d).unwrap();

        // Tampering with the conclusion is caught.
        let mut bad = d.clone();
        bad.judgment.formula = formula("s(0) = s(s(0)) -> X(0)");
        assert_eq!(
            check_derivation(&bad),
            Err(Rejection { path: vec![], reason: Reject::FormulaMismatch })
        );
    }

    #[test]
    fn all2_elim_splices_the_template() {
        let ax = Derivation::axiom(vec![formula("forall2 Z (Z(0) -> Z(s(0)))")], 0).unwrap();
        let d = Derivation::all2_elim(ax, vec!["w".into()], formula("w = 1")).unwrap();
        assert_eq!(d.judgment.formula, formula("0 = 1 -> s(0) = 1"));
        check_derivation(&d).unwrap();

        // Nullary universal instantiated at Bot.
        let ax = Derivation::axiom(vec![formula("forall2 X (X -> X)")], 0).unwrap();
        let d = Derivation::all2_elim(ax, vec![], Formula::Bot).unwrap();
        assert_eq!(d.judgment.formula, formula("Bot -> Bot"));
        check_derivation(&d).unwrap();
    }

    #[test]
    fn all2_intro_checks_arity_discipline() {
        let used_two_ways = Formula::imp(
            Formula::atom(PredRef::Var("P".into()), [FoTerm::Lit(0)]),
            Formula::atom(PredRef::Var("P".into()), [FoTerm::Lit(0), FoTerm::Lit(1)]),
        );
        let d = Derivation::all2_intro(
            Derivation::top_intro(vec![], Term::id()),
            "P",
            1,
        );
        // Rebuild with a premise that concludes the mixed-arity formula.
        let mut d = d;
        d.premises[0].judgment.formula = used_two_ways.clone();
        d.judgment.formula = Formula::forall_pred("P", 1, used_two_ways);
        let err = check_derivation(&d).unwrap_err();
        assert!(matches!(err.reason, Reject::PredArityMismatch { .. }), "{err}");
    }

    #[test]
    fn rejection_paths_point_at_the_broken_node() {
        let mut d = k_derivation();
        // Corrupt only the leaf's rule payload: its judgment still fits the
        // parent, so the failure is localized two levels down.
        d.premises[0].premises[0].rule = Rule::Axiom { index: 0 };
        let err = check_derivation(&d).unwrap_err();
        assert_eq!(err.path, vec![0, 0]);
        assert_eq!(err.reason, Reject::TermMismatch);
        assert_eq!(
            err.to_string(),
            "at premise 0.0: conclusion term does not follow from the premises"
        );

        // Corrupting the leaf's term breaks the parent's abstraction link
        // first, so the report points at the parent.
        let mut d = k_derivation();
        d.premises[0].premises[0].judgment.term = Term::var(0);
        let err = check_derivation(&d).unwrap_err();
        assert_eq!(err.path, vec![0]);
        assert_eq!(err.reason, Reject::TermMismatch);
    }

    #[test]
    fn premise_count_is_checked() {
        let mut d = k_derivation();
        d.premises.clear();
        assert_eq!(
            check_derivation(&d),
            Err(Rejection { path: vec![], reason: Reject::PremiseCount { want: 1, got: 0 } })
        );
    }

    #[test]
    fn classical_double_negation_derivation() {
        // \f. cc (\k. f k) : ((A -> Bot) -> Bot) -> A
        let (a, nna) = (pvar("A"), formula("(A -> Bot) -> Bot"));
        let na = formula("A -> Bot");
        // Context [k : A -> Bot, f : (A -> Bot) -> Bot], innermost first.
        let ctx = vec![na.clone(), nna.clone()];
        let fk = Derivation::imp_elim(
            Derivation::axiom(ctx.clone(), 1).unwrap(),
            Derivation::axiom(ctx, 0).unwrap(),
        )
        .unwrap();
        let body = Derivation::imp_intro(Derivation::bot_elim(fk, a.clone())).unwrap();
        let peirce = Derivation::peirce(vec![nna.clone()], a, Formula::Bot);
        let applied = Derivation::imp_elim(peirce, body).unwrap();
        let d = Derivation::imp_intro(applied).unwrap();
        assert_eq!(d.judgment.formula, formula("((A -> Bot) -> Bot) -> A"));
        check_derivation(&d).unwrap();
        assert_eq!(
            extract_realizer(&d, &[]).unwrap(),
            parse_term("\\f. cc (\\k. f k)").unwrap()
        );
    }

    #[test]
    fn fixpoint_unrolls_in_three_steps() {
        let t = Term::instr(Instr::unrestricted(0));
        let y = y_comb(&t);
        let p = Process::new(y.clone(), Stack::bottom(0)).unwrap();
        let tr = run(&p, 10);
        assert_eq!(tr.steps.len(), 3);
        let rules: Vec<StepRule> = tr.steps.iter().map(|(r, _)| *r).collect();
        assert_eq!(rules, [StepRule::Push, StepRule::Grab, StepRule::Push]);
        let expected =
            Process::new(t, Stack::push(y, Stack::bottom(0)).unwrap()).unwrap();
        assert_eq!(*tr.end(), expected);
    }

    #[test]
    fn recursor_unrolls_to_numeral_and_successor() {
        let psi = Term::instr(Instr::unrestricted(0));
        let y = y_psi(&psi);
        let p = Process::new(y.clone(), Stack::bottom(0)).unwrap();
        let tr = run(&p, 20);
        assert_eq!(tr.steps.len(), 6);
        let rules: Vec<StepRule> = tr.steps.iter().map(|(r, _)| *r).collect();
        assert_eq!(
            rules,
            [
                StepRule::Push,
                StepRule::Grab,
                StepRule::Push,
                StepRule::Grab,
                StepRule::Push,
                StepRule::Push,
            ]
        );
        let stack = Stack::push(
            church(0),
            Stack::push(Term::app(church_succ(), y), Stack::bottom(0)).unwrap(),
        )
        .unwrap();
        assert_eq!(*tr.end(), Process::new(psi, stack).unwrap());
    }

    #[test]
    fn church_numerals_have_the_expected_shape() {
        assert_eq!(church(0), parse_term("\\f. \\x. x").unwrap());
        assert_eq!(church(2), parse_term("\\f. \\x. f (f x)").unwrap());
        assert_eq!(church_succ(), parse_term("\\n. \\f. \\x. n f (f x)").unwrap());
        assert!(church(3).is_proof_like());
    }

    fn symmetry_clause() -> HornClause {
        HornClause {
            vars: vec!["x".into(), "y".into()],
            premises: vec![(FoTerm::var("x"), FoTerm::var("y"))],
            goal: Some((FoTerm::var("y"), FoTerm::var("x"))),
        }
    }

    #[test]
    fn horn_formula_and_true_realizers() {
        let h = symmetry_clause();
        assert_eq!(h.formula().unwrap(), formula("forall x forall y (x = y -> y = x)"));
        assert_eq!(
            horn_realizer(&h, &HornTruth::True).unwrap(),
            parse_term("\\t. \\y. t y").unwrap()
        );

        // Goal clause: forall x (s(x) = 0 -> Bot), true in the unclamped
        // domain; the chain has the identity in the hole.
        let g = HornClause {
            vars: vec!["x".into()],
            premises: vec![(FoTerm::s(FoTerm::var("x")), FoTerm::Lit(0))],
            goal: None,
        };
        assert_eq!(g.formula().unwrap(), formula("forall x (s(x) = 0 -> Bot)"));
        assert_eq!(
            horn_realizer(&g, &HornTruth::True).unwrap(),
            parse_term("\\t. t (\\y. y)").unwrap()
        );

        // No premises: the definite chain degenerates to the identity.
        let refl = HornClause { vars: vec![], premises: vec![], goal: Some((FoTerm::Lit(0), FoTerm::Lit(0))) };
        assert_eq!(horn_realizer(&refl, &HornTruth::True).unwrap(), parse_term("\\y. y").unwrap());
    }

    #[test]
    fn horn_false_realizer_feeds_identities() {
        // 0 = 1, definite, no premises, refuted by the empty witness.
        let h = HornClause { vars: vec![], premises: vec![], goal: Some((FoTerm::Lit(0), FoTerm::Lit(1))) };
        assert!(!h.holds_at(&[], 2).unwrap());
        assert_eq!(
            horn_realizer(&h, &HornTruth::FalseAt(vec![])).unwrap(),
            parse_term("\\f. f").unwrap()
        );

        // One premise: \f. f I.
        let h = HornClause {
            vars: vec!["x".into()],
            premises: vec![(FoTerm::var("x"), FoTerm::var("x"))],
            goal: Some((FoTerm::Lit(0), FoTerm::Lit(1))),
        };
        assert_eq!(
            horn_realizer(&h, &HornTruth::FalseAt(vec![3])).unwrap(),
            parse_term("\\f. f (\\y. y)").unwrap()
        );
    }

    #[test]
    fn clamped_domains_break_successor_injectivity() {
        // forall x forall y (s(x) = s(y) -> x = y): true in the unclamped
        // domain, falsified at the clamp boundary of a finite one.
        let h = HornClause {
            vars: vec!["x".into(), "y".into()],
            premises: vec![
                (FoTerm::s(FoTerm::var("x")), FoTerm::s(FoTerm::var("y"))),
            ],
            goal: Some((FoTerm::var("x"), FoTerm::var("y"))),
        };
        assert_eq!(h.counterexample(4).unwrap(), Some(vec![3, 2]));
        assert!(h.holds_at(&[1, 1], 4).unwrap());
        assert!(!h.holds_at(&[3, 2], 4).unwrap());

        // Symmetry has no counterexample anywhere.
        assert_eq!(symmetry_clause().counterexample(4).unwrap(), None);
    }

    #[test]
    fn horn_validation_catches_malformed_clauses() {
        let h = HornClause {
            vars: vec!["x".into()],
            premises: vec![(FoTerm::var("x"), FoTerm::var("z"))],
            goal: None,
        };
        assert_eq!(
            h.formula(),
            Err(AdequacyError::UnlistedVariable { name: "z".into() })
        );

        let h = HornClause {
            vars: vec!["x".into(), "x".into()],
            premises: vec![],
            goal: None,
        };
        assert_eq!(
            h.formula(),
            Err(AdequacyError::DuplicateVariable { name: "x".into() })
        );
    }

    #[test]
    fn derivation_files_roundtrip() {
        let k = k_derivation();
        let text = write_derivation(&k);
        let back = parse_derivation(&text).unwrap();
        assert_eq!(back, k);

        // A derivation with every payload kind survives the roundtrip.
        let ax = Derivation::axiom(vec![formula("forall x (x = s(x) -> X(x))")], 0).unwrap();
        let d = Derivation::all1_elim(ax, parse_fo_term("s(0)").unwrap()).unwrap();
        let back = parse_derivation(&write_derivation(&d)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn derivation_files_parse_hand_written_sources() {
        let src = r#"
            ; modus ponens under two hypotheses
            (imp-elim
              (ctx (f "A -> B") (x "A"))
              (term "f x")
              (formula "B")
              (premises
                (axiom
                  (ctx (f "A -> B") (x "A"))
                  (term "f")
                  (formula "A -> B")
                  (index 1))
                (axiom
                  (ctx (f "A -> B") (x "A"))
                  (term "x")
                  (formula "A")
                  (index 0))))
        "#;
        let d = parse_derivation(src).unwrap();
        check_derivation(&d).unwrap();
        assert_eq!(d.judgment.term, Term::app(Term::var(1), Term::var(0)));
        assert_eq!(
            extract_realizer(&d, &[Term::id(), parse_term("\\u. \\v. u").unwrap()]).unwrap(),
            parse_term("(\\u. \\v. u) (\\x. x)").unwrap()
        );
    }

    #[test]
    fn derivation_file_errors_carry_positions() {
        let err = parse_derivation("(nonsense)").unwrap_err();
        assert!(matches!(err, AdequacyError::File { .. }), "{err}");
        let err = parse_derivation(
            "(axiom (ctx (x \"A\") (x \"B\")) (term \"x\") (formula \"A\") (index 0))",
        )
        .unwrap_err();
        assert!(err.to_string().contains("declared twice"), "{err}");
        let err = parse_derivation("(axiom (ctx) (term \"missing\") (formula \"A\") (index 0))")
            .unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }
}
