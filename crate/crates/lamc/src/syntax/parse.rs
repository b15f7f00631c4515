//! Recursive-descent parser for terms, stacks and processes.
//!
//! Grammar (see FORMATS.md at the workspace root for the full reference):
//!
//! ```text
//! term    ::= '\' ident '.' term | app
//! app     ::= atom atom*                        (left associative)
//! atom    ::= ident | 'cc' | '#a' nat | '#b' nat | '(' term ')'
//! stack   ::= 'e' nat | element '.' stack
//! element ::= term                              (a '.' ends the element)
//! process ::= term '*' stack
//! ```
//!
//! `cc` is reserved. Stack bottoms `e0`, `e1`, ... are only recognized in
//! final stack position; elsewhere they lex as ordinary identifiers.
//! Continuation constants print as `k[stack]` but are rejected by the parser:
//! they only arise from machine execution.

use std::fmt;
use std::sync::Arc;

use super::{Binder, Instr, Process, Stack, Term};

/// Parse failure with a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {at}: {message}")]
pub struct ParseError {
    pub at: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    Star,
    LPar,
    RPar,
    LBracket,
    RBracket,
    Ident(String),
    Instr(Instr),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lambda => write!(f, "'\\'"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Star => write!(f, "'*'"),
            Tok::LPar => write!(f, "'('"),
            Tok::RPar => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Instr(i) => write!(f, "instruction '{i}'"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(at, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '\\' => {
                it.next();
                toks.push((at, Tok::Lambda));
            }
            '.' => {
                it.next();
                toks.push((at, Tok::Dot));
            }
            '*' => {
                it.next();
                toks.push((at, Tok::Star));
            }
            '(' => {
                it.next();
                toks.push((at, Tok::LPar));
            }
            ')' => {
                it.next();
                toks.push((at, Tok::RPar));
            }
            '[' => {
                it.next();
                toks.push((at, Tok::LBracket));
            }
            ']' => {
                it.next();
                toks.push((at, Tok::RBracket));
            }
            '#' => {
                it.next();
                let kind = match it.peek() {
                    Some((_, 'a')) => {
                        it.next();
                        super::InstrKind::Unrestricted
                    }
                    Some((_, 'b')) => {
                        it.next();
                        super::InstrKind::Restricted
                    }
                    _ => {
                        return Err(ParseError {
                            at,
                            message: "expected '#a' or '#b' instruction".into(),
                        })
                    }
                };
                let mut digits = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                if digits.is_empty() {
                    return Err(ParseError {
                        at,
                        message: "instruction needs an index, e.g. '#a0'".into(),
                    });
                }
                let index: u32 = digits.parse().map_err(|_| ParseError {
                    at,
                    message: format!("instruction index '{digits}' out of range"),
                })?;
                toks.push((at, Tok::Instr(Instr { kind, index })));
            }
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if is_ident_continue(d) {
                        name.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                toks.push((at, Tok::Ident(name)));
            }
            _ => {
                return Err(ParseError { at, message: format!("unexpected character '{c}'") });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    /// Binder scope, innermost last; seeded with the free-variable env.
    scope: Vec<String>,
}

impl Parser {
    fn new(src: &str, env: &[&str]) -> Result<Self, ParseError> {
        let toks = lex(src)?;
        Ok(Parser {
            toks,
            pos: 0,
            end: src.len(),
            scope: env.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(at, _)| *at)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { at: self.here(), message: message.into() })
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
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

    fn term(&mut self) -> Result<Term, ParseError> {
        if let Some(Tok::Lambda) = self.peek() {
            self.pos += 1;
            let name = match self.bump() {
                Some(Tok::Ident(n)) => n,
                other => {
                    return self.fail(match other {
                        Some(t) => format!("expected binder name after '\\', found {t}"),
                        None => "expected binder name after '\\'".into(),
                    })
                }
            };
            if name == "cc" {
                return self.fail("'cc' is reserved and cannot be a binder");
            }
            self.expect(&Tok::Dot)?;
            self.scope.push(name.clone());
            let body = self.term();
            self.scope.pop();
            return Ok(Term::Abs(Binder::named(&name), Arc::new(body?)));
        }
        self.app()
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            t = Term::app(t, arg);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Instr(_) | Tok::LPar | Tok::Lambda)
        )
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Lambda) => self.term(),
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "cc" {
                    return Ok(Term::Callcc);
                }
                if name == "k" && matches!(self.peek(), Some(Tok::LBracket)) {
                    return self.fail(
                        "continuation constants ('k[...]') are print-only and cannot be parsed",
                    );
                }
                // Innermost binding wins; seeded free names resolve to the
                // indices past the binders.
                for (i, n) in self.scope.iter().rev().enumerate() {
                    if n == &name {
                        return Ok(Term::Var(i as u32));
                    }
                }
                self.fail(format!("unbound variable '{name}'"))
            }
            Some(Tok::Instr(i)) => {
                self.pos += 1;
                Ok(Term::Instr(i))
            }
            Some(Tok::LPar) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RPar)?;
                Ok(t)
            }
            Some(t) => self.fail(format!("expected a term, found {t}")),
            None => self.fail("expected a term, found end of input"),
        }
    }

    /// Parses a stack: elements separated by '.', ending in a bottom `eN`.
    fn stack(&mut self) -> Result<Stack, ParseError> {
        // A lone identifier of shape e<digits> in final position is a bottom.
        if let Some(Tok::Ident(name)) = self.peek() {
            if let Some(idx) = bottom_index(name) {
                // Only a bottom if nothing follows that would extend a term.
                let next = self.toks.get(self.pos + 1).map(|(_, t)| t.clone());
                let ends_stack = !matches!(
                    next,
                    Some(Tok::Ident(_) | Tok::Instr(_) | Tok::LPar | Tok::Lambda | Tok::Dot)
                );
                if ends_stack {
                    self.pos += 1;
                    return Ok(Stack::Bottom(idx));
                }
            }
        }
        let elem = self.term()?;
        if !elem.is_closed() {
            return self.fail("stack elements must be closed terms");
        }
        self.expect(&Tok::Dot)?;
        let below = self.stack()?;
        Ok(Stack::Push(Arc::new(elem), Arc::new(below)))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => {
                let t = t.clone();
                self.fail(format!("unexpected trailing {t}"))
            }
        }
    }
}

fn bottom_index(name: &str) -> Option<u32> {
    let rest = name.strip_prefix('e')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Parses a closed term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let t = parse_term_with_env(src, &[])?;
    debug_assert!(t.is_closed());
    Ok(t)
}

/// Parses a term whose free variables are named by `env` (outermost first):
/// the last entry of `env` is de Bruijn index 0 outside the binders.
pub fn parse_term_with_env(src: &str, env: &[&str]) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, env)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses a stack of closed elements ending in a bottom marker.
pub fn parse_stack(src: &str) -> Result<Stack, ParseError> {
    let mut p = Parser::new(src, &[])?;
    let s = p.stack()?;
    p.finish()?;
    Ok(s)
}

/// Parses a process `term * stack`.
pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(src, &[])?;
    let t = p.term()?;
    if !t.is_closed() {
        return p.fail("process head must be a closed term");
    }
    p.expect(&Tok::Star)?;
    let s = p.stack()?;
    p.finish()?;
    Ok(Process { term: Arc::new(t), stack: Arc::new(s) })
}
