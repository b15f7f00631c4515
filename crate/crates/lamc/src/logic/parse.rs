//! Formula parser and printer.
//!
//! Concrete syntax (FORMATS.md has the full reference):
//!
//! ```text
//! formula ::= 'forall' ident formula | 'forall2' IDENT formula
//!           | 'ex' ident formula     | 'ex2' IDENT formula
//!           | iff
//! iff     ::= imp ('iff' imp)*
//! imp     ::= disj ('->' imp)?                      (right associative)
//! disj    ::= conj ('or' conj)*
//! conj    ::= union ('and' union)*
//! union   ::= inter ('cup' union)?
//! inter   ::= unary ('cap' inter)?
//! unary   ::= 'not' unary | atom
//! atom    ::= 'Top' | 'Bot' | '(' formula ')'
//!           | UIDENT ('(' term,* ')')?              (predicate variable)
//!           | '[' ident ']' ('(' term,* ')')?       (model table)
//!           | 'nat' '(' term ')' | 'bool' '(' term ')' | 'gim'N '(' term ')'
//!           | term '=' term ('|>' formula)?         (sugar eq / eq-implies)
//!           | term '!=' term
//! term    ::= ident | NAT | ident '(' term,* ')'
//! ```
//!
//! Identifiers starting with an uppercase letter are predicate variables;
//! lowercase identifiers are individual variables or function symbols.
//! `forall2` infers the predicate arity from the uses in its body.
//!
//! The printer emits core syntax only, except that it recognizes the
//! equality and disequality encodings and prints them back as `a = b` /
//! `a != b`; printed output reparses to an equal formula.

use std::collections::BTreeSet;
use std::fmt;

use super::families;
use super::{Formula, FoTerm, LogicError, PredRef};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u64),
    LPar,
    RPar,
    Comma,
    Arrow,
    PipeArrow,
    Eq,
    Neq,
    LBracket,
    RBracket,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Nat(n) => write!(f, "'{n}'"),
            Tok::LPar => write!(f, "'('"),
            Tok::RPar => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::PipeArrow => write!(f, "'|>'"),
            Tok::Eq => write!(f, "'='"),
            Tok::Neq => write!(f, "'!='"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, LogicError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((i, Tok::LPar));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RPar));
                i += 1;
            }
            ',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            '[' => {
                out.push((i, Tok::LBracket));
                i += 1;
            }
            ']' => {
                out.push((i, Tok::RBracket));
                i += 1;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    out.push((i, Tok::Arrow));
                    i += 2;
                } else {
                    return Err(LogicError::Parse { at: i, message: "expected '->'".into() });
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    out.push((i, Tok::PipeArrow));
                    i += 2;
                } else {
                    return Err(LogicError::Parse { at: i, message: "expected '|>'".into() });
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((i, Tok::Neq));
                    i += 2;
                } else {
                    return Err(LogicError::Parse { at: i, message: "expected '!='".into() });
                }
            }
            '=' => {
                out.push((i, Tok::Eq));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: u64 = src[start..i].parse().map_err(|_| LogicError::Parse {
                    at: start,
                    message: "numeral out of range".into(),
                })?;
                out.push((start, Tok::Nat(n)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                return Err(LogicError::Parse {
                    at: i,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(a, _)| *a)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, LogicError> {
        Err(LogicError::Parse { at: self.here(), message: message.into() })
    }

    fn expect(&mut self, want: &Tok) -> Result<(), LogicError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let t = t.clone();
                self.fail(format!("expected {want}, found {t}"))
            }
            None => self.fail(format!("expected {want}, found end of input")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LogicError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(t) => self.fail(format!("expected {what}, found {t}")),
            None => self.fail(format!("expected {what}, found end of input")),
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        match self.peek() {
            Some(Tok::Ident(k)) if k == "forall" => {
                self.pos += 1;
                let name = self.ident("a variable name after 'forall'")?;
                let body = self.formula()?;
                Ok(Formula::forall_ind(&name, body))
            }
            Some(Tok::Ident(k)) if k == "forall2" => {
                self.pos += 1;
                let name = self.ident("a predicate name after 'forall2'")?;
                let body = self.formula()?;
                let arity = infer_arity(&body, &name).map_err(|m| LogicError::Parse {
                    at: self.here(),
                    message: m,
                })?;
                Ok(Formula::forall_pred(&name, arity, body))
            }
            Some(Tok::Ident(k)) if k == "ex" => {
                self.pos += 1;
                let name = self.ident("a variable name after 'ex'")?;
                let body = self.formula()?;
                Ok(Formula::exists_ind(&name, body))
            }
            Some(Tok::Ident(k)) if k == "ex2" => {
                self.pos += 1;
                let name = self.ident("a predicate name after 'ex2'")?;
                let body = self.formula()?;
                let arity = infer_arity(&body, &name).map_err(|m| LogicError::Parse {
                    at: self.here(),
                    message: m,
                })?;
                Ok(Formula::exists_pred(&name, arity, body))
            }
            _ => self.iff(),
        }
    }

    fn iff(&mut self) -> Result<Formula, LogicError> {
        let mut f = self.imp()?;
        while matches!(self.peek(), Some(Tok::Ident(k)) if k == "iff") {
            self.pos += 1;
            let rhs = self.imp()?;
            f = Formula::iff(f, rhs);
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.disj()?;
        if matches!(self.peek(), Some(Tok::Arrow)) {
            self.pos += 1;
            let rhs = self.imp()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula, LogicError> {
        let mut f = self.conj()?;
        while matches!(self.peek(), Some(Tok::Ident(k)) if k == "or") {
            // Infix only: 'or' starting a function call is handled in atoms.
            self.pos += 1;
            let rhs = self.conj()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, LogicError> {
        let mut f = self.union_()?;
        while matches!(self.peek(), Some(Tok::Ident(k)) if k == "and") {
            self.pos += 1;
            let rhs = self.union_()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn union_(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.inter()?;
        if matches!(self.peek(), Some(Tok::Ident(k)) if k == "cup") {
            self.pos += 1;
            let rhs = self.union_()?;
            return Ok(Formula::union(lhs, rhs));
        }
        Ok(lhs)
    }

    fn inter(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Some(Tok::Ident(k)) if k == "cap") {
            self.pos += 1;
            let rhs = self.inter()?;
            return Ok(Formula::inter(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        if matches!(self.peek(), Some(Tok::Ident(k)) if k == "not") {
            // 'not' is always formula negation here; the term function 'not'
            // cannot start an equation (write it on the right-hand side).
            self.pos += 1;
            let f = self.unary()?;
            return Ok(Formula::not(f));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        match self.peek().cloned() {
            Some(Tok::LPar) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(&Tok::RPar)?;
                Ok(f)
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let name = self.ident("a table name")?;
                self.expect(&Tok::RBracket)?;
                let args = if matches!(self.peek(), Some(Tok::LPar)) {
                    self.paren_terms()?
                } else {
                    Vec::new()
                };
                Ok(Formula::Table { name, args })
            }
            Some(Tok::Ident(name)) => {
                match name.as_str() {
                    "Top" => {
                        self.pos += 1;
                        return Ok(Formula::Top);
                    }
                    "Bot" => {
                        self.pos += 1;
                        return Ok(Formula::Bot);
                    }
                    "nat" if self.peek2() == Some(&Tok::LPar) => {
                        self.pos += 1;
                        let mut args = self.paren_terms()?;
                        if args.len() != 1 {
                            return self.fail("nat(..) takes one argument");
                        }
                        return Ok(families::nat(args.pop().unwrap()));
                    }
                    "bool" if self.peek2() == Some(&Tok::LPar) => {
                        self.pos += 1;
                        let mut args = self.paren_terms()?;
                        if args.len() != 1 {
                            return self.fail("bool(..) takes one argument");
                        }
                        return Ok(families::bool_of(args.pop().unwrap()));
                    }
                    _ => {}
                }
                if let Some(k) = name.strip_prefix("gim") {
                    if !k.is_empty()
                        && k.bytes().all(|b| b.is_ascii_digit())
                        && self.peek2() == Some(&Tok::LPar)
                    {
                        let k: u64 = k.parse().map_err(|_| LogicError::Parse {
                            at: self.here(),
                            message: "cardinality index out of range".into(),
                        })?;
                        self.pos += 1;
                        let mut args = self.paren_terms()?;
                        if args.len() != 1 {
                            return self.fail("gimN(..) takes one argument");
                        }
                        return Ok(families::gim(k, args.pop().unwrap()));
                    }
                }
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    // Predicate variable atom.
                    self.pos += 1;
                    let args = if matches!(self.peek(), Some(Tok::LPar)) {
                        self.paren_terms()?
                    } else {
                        Vec::new()
                    };
                    return Ok(Formula::Atom { pred: PredRef::Var(name), args });
                }
                self.equation()
            }
            Some(Tok::Nat(_)) => self.equation(),
            Some(t) => self.fail(format!("expected a formula, found {t}")),
            None => self.fail("expected a formula, found end of input"),
        }
    }

    /// `term = term`, `term != term`, `term = term |> formula`.
    fn equation(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.term()?;
        match self.bump() {
            Some(Tok::Eq) => {
                let rhs = self.term()?;
                if matches!(self.peek(), Some(Tok::PipeArrow)) {
                    self.pos += 1;
                    let body = self.imp()?;
                    Ok(Formula::eq_imp(lhs, rhs, body))
                } else {
                    Ok(Formula::eq(lhs, rhs))
                }
            }
            Some(Tok::Neq) => {
                let rhs = self.term()?;
                Ok(Formula::neq(lhs, rhs))
            }
            Some(t) => self.fail(format!("expected '=' or '!=' after a term, found {t}")),
            None => self.fail("expected '=' or '!=' after a term"),
        }
    }

    fn term(&mut self) -> Result<FoTerm, LogicError> {
        match self.bump() {
            Some(Tok::Nat(n)) => Ok(FoTerm::Lit(n)),
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return self.fail(format!(
                        "'{name}' is a predicate name; individual terms are lowercase"
                    ));
                }
                if matches!(self.peek(), Some(Tok::LPar)) {
                    let args = self.paren_terms()?;
                    if let Some(want) = FoTerm::fn_arity(&name) {
                        if args.len() != want {
                            return self.fail(format!(
                                "function '{name}' expects {want} arguments"
                            ));
                        }
                        Ok(FoTerm::App(name, args))
                    } else {
                        self.fail(format!("unknown function symbol '{name}'"))
                    }
                } else {
                    Ok(FoTerm::Var(name))
                }
            }
            Some(t) => self.fail(format!("expected an individual term, found {t}")),
            None => self.fail("expected an individual term, found end of input"),
        }
    }

    fn paren_terms(&mut self) -> Result<Vec<FoTerm>, LogicError> {
        self.expect(&Tok::LPar)?;
        let mut args = Vec::new();
        if matches!(self.peek(), Some(Tok::RPar)) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RPar) => return Ok(args),
                Some(t) => return self.fail(format!("expected ',' or ')', found {t}")),
                None => return self.fail("unclosed argument list"),
            }
        }
    }
}

/// Infers the arity of predicate-variable `name` from its atoms.
fn infer_arity(f: &Formula, name: &str) -> Result<u32, String> {
    fn walk(f: &Formula, name: &str, seen: &mut BTreeSet<usize>) {
        match f {
            Formula::Atom { pred: PredRef::Var(n), args } if n == name => {
                seen.insert(args.len());
            }
            Formula::Atom { .. } | Formula::Table { .. } | Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::Inter(a, b) | Formula::Union(a, b) => {
                walk(a, name, seen);
                walk(b, name, seen);
            }
            Formula::AllInd(_, b) | Formula::AllPred(_, _, b) => walk(b, name, seen),
            Formula::EqImp { body, .. } => walk(body, name, seen),
        }
    }
    let mut seen = BTreeSet::new();
    walk(f, name, &mut seen);
    match seen.len() {
        0 => Ok(0),
        1 => Ok(*seen.iter().next().unwrap() as u32),
        _ => Err(format!("predicate '{name}' used with mixed arities {seen:?}")),
    }
}

/// Parses a formula.
pub fn parse_formula(src: &str) -> Result<Formula, LogicError> {
    let toks = lex(src)?;
    let mut p = P { toks, pos: 0, end: src.len() };
    let f = p.formula()?;
    match p.peek() {
        None => Ok(f),
        Some(t) => {
            let t = t.clone();
            p.fail(format!("unexpected trailing {t}"))
        }
    }
}

/// Parses a first-order term.
pub fn parse_fo_term(src: &str) -> Result<FoTerm, LogicError> {
    let toks = lex(src)?;
    let mut p = P { toks, pos: 0, end: src.len() };
    let t = p.term()?;
    match p.peek() {
        None => Ok(t),
        Some(tok) => {
            let tok = tok.clone();
            p.fail(format!("unexpected trailing {tok}"))
        }
    }
}

// ---- printing ----

const PREC_TOP: u8 = 0;
const PREC_IMP: u8 = 1;
const PREC_UNION: u8 = 2;
const PREC_INTER: u8 = 3;
const PREC_ATOM: u8 = 4;

fn fresh(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    for k in 1.. {
        let cand = format!("{base}{k}");
        if !used.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

struct Scopes {
    ind: Vec<String>,
    pred: Vec<String>,
    used: BTreeSet<String>,
}

fn write_formula(
    f: &mut fmt::Formatter<'_>,
    fla: &Formula,
    prec: u8,
    sc: &mut Scopes,
) -> fmt::Result {
    // Sugar recognition first: equality and disequality print compactly.
    if let Some((a, b)) = as_eq(fla) {
        return with_parens(f, prec > PREC_ATOM, |f| {
            write_term(f, a, sc)?;
            write!(f, " = ")?;
            write_term(f, b, sc)
        });
    }
    if let Formula::EqImp { lhs, rhs, body } = fla {
        if **body == Formula::Bot {
            return with_parens(f, prec > PREC_ATOM, |f| {
                write_term(f, lhs, sc)?;
                write!(f, " != ")?;
                write_term(f, rhs, sc)
            });
        }
    }
    match fla {
        Formula::Top => write!(f, "Top"),
        Formula::Bot => write!(f, "Bot"),
        Formula::Atom { pred, args } => {
            let name = match pred {
                PredRef::Var(n) => n.clone(),
                PredRef::Bound(i) => {
                    let k = sc.pred.len().checked_sub(1 + *i as usize);
                    k.map_or_else(|| format!("@{i}"), |k| sc.pred[k].clone())
                }
            };
            write!(f, "{name}")?;
            write_args(f, args, sc)
        }
        Formula::Table { name, args } => {
            write!(f, "[{name}]")?;
            write_args(f, args, sc)
        }
        Formula::Imp(a, b) => with_parens(f, prec > PREC_IMP, |f| {
            write_formula(f, a, PREC_UNION, sc)?;
            write!(f, " -> ")?;
            write_formula(f, b, PREC_IMP, sc)
        }),
        Formula::AllInd(hint, body) => with_parens(f, prec > PREC_TOP, |f| {
            let name = fresh(hint.hint().unwrap_or("x"), &sc.used);
            write!(f, "forall {name} ")?;
            sc.ind.push(name.clone());
            sc.used.insert(name.clone());
            let r = write_formula(f, body, PREC_TOP, sc);
            sc.ind.pop();
            sc.used.remove(&name);
            r
        }),
        Formula::AllPred(hint, _, body) => with_parens(f, prec > PREC_TOP, |f| {
            let name = fresh(hint.hint().unwrap_or("Z"), &sc.used);
            write!(f, "forall2 {name} ")?;
            sc.pred.push(name.clone());
            sc.used.insert(name.clone());
            let r = write_formula(f, body, PREC_TOP, sc);
            sc.pred.pop();
            sc.used.remove(&name);
            r
        }),
        Formula::EqImp { lhs, rhs, body } => with_parens(f, prec > PREC_TOP, |f| {
            write_term(f, lhs, sc)?;
            write!(f, " = ")?;
            write_term(f, rhs, sc)?;
            write!(f, " |> ")?;
            write_formula(f, body, PREC_IMP, sc)
        }),
        Formula::Inter(a, b) => with_parens(f, prec > PREC_INTER, |f| {
            write_formula(f, a, PREC_ATOM, sc)?;
            write!(f, " cap ")?;
            write_formula(f, b, PREC_INTER, sc)
        }),
        Formula::Union(a, b) => with_parens(f, prec > PREC_UNION, |f| {
            write_formula(f, a, PREC_INTER, sc)?;
            write!(f, " cup ")?;
            write_formula(f, b, PREC_UNION, sc)
        }),
    }
}

fn as_eq(f: &Formula) -> Option<(&FoTerm, &FoTerm)> {
    let Formula::AllPred(_, 1, body) = f else { return None };
    let Formula::Imp(l, r) = &**body else { return None };
    let Formula::Atom { pred: PredRef::Bound(0), args: la } = &**l else { return None };
    let Formula::Atom { pred: PredRef::Bound(0), args: ra } = &**r else { return None };
    if la.len() == 1 && ra.len() == 1 {
        Some((&la[0], &ra[0]))
    } else {
        None
    }
}

fn with_parens(
    f: &mut fmt::Formatter<'_>,
    parens: bool,
    inner: impl FnOnce(&mut fmt::Formatter<'_>) -> fmt::Result,
) -> fmt::Result {
    if parens {
        write!(f, "(")?;
        inner(f)?;
        write!(f, ")")
    } else {
        inner(f)
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[FoTerm], sc: &mut Scopes) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    write!(f, "(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write_term(f, a, sc)?;
    }
    write!(f, ")")
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &FoTerm, sc: &mut Scopes) -> fmt::Result {
    match t {
        FoTerm::Var(n) => write!(f, "{n}"),
        FoTerm::Bound(i) => {
            let k = sc.ind.len().checked_sub(1 + *i as usize);
            match k {
                Some(k) => write!(f, "{}", sc.ind[k]),
                None => write!(f, "@{i}"),
            }
        }
        FoTerm::Lit(n) => write!(f, "{n}"),
        FoTerm::App(name, args) => {
            write!(f, "{name}")?;
            write_args(f, args, sc)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let used: BTreeSet<String> = self
            .free_ind_vars()
            .into_iter()
            .chain(self.free_pred_vars())
            .collect();
        let mut sc = Scopes { ind: Vec::new(), pred: Vec::new(), used };
        write_formula(f, self, PREC_TOP, &mut sc)
    }
}

impl fmt::Display for FoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sc = Scopes { ind: Vec::new(), pred: Vec::new(), used: BTreeSet::new() };
        write_term(f, self, &mut sc)
    }
}
