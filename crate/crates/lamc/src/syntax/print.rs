//! Display impls for terms, stacks and processes.
//!
//! Binder hints are used when available and freshened against the enclosing
//! scope (`x`, `x1`, `x2`, ...); anonymous binders get generated names. The
//! output re-parses to an alpha-equal term, except for continuation constants,
//! which print as `k[stack]` and are deliberately not parseable.

use std::fmt;

use super::{Process, Stack, Term};

fn fresh_name(scope: &[String], hint: Option<&str>) -> String {
    let base = match hint {
        Some(h) if !h.is_empty() => h.to_string(),
        _ => "x".to_string(),
    };
    if hint.is_some() && !scope.iter().any(|n| n == &base) {
        return base;
    }
    let mut k = if hint.is_some() { 1 } else { scope.len() };
    loop {
        let cand = format!("{base}{k}");
        if !scope.iter().any(|n| n == &cand) {
            return cand;
        }
        k += 1;
    }
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    t: &Term,
    scope: &mut Vec<String>,
) -> fmt::Result {
    match t {
        Term::Abs(hint, body) => {
            let name = fresh_name(scope, hint.hint());
            write!(f, "\\{name}. ")?;
            scope.push(name);
            let r = write_term(f, body, scope);
            scope.pop();
            r
        }
        _ => write_app(f, t, scope),
    }
}

fn write_app(f: &mut fmt::Formatter<'_>, t: &Term, scope: &mut Vec<String>) -> fmt::Result {
    match t {
        Term::App(fun, arg) => {
            write_app(f, fun, scope)?;
            write!(f, " ")?;
            write_atom(f, arg, scope)
        }
        _ => write_atom(f, t, scope),
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, t: &Term, scope: &mut Vec<String>) -> fmt::Result {
    match t {
        Term::Var(i) => {
            let i = *i as usize;
            if i < scope.len() {
                write!(f, "{}", scope[scope.len() - 1 - i])
            } else {
                // Free index, only reachable when printing open terms.
                write!(f, "_{}", i - scope.len())
            }
        }
        Term::Callcc => write!(f, "cc"),
        Term::Instr(i) => write!(f, "{i}"),
        Term::Cont(s) => {
            write!(f, "k[")?;
            write_stack(f, s, scope)?;
            write!(f, "]")
        }
        Term::Abs(..) | Term::App(..) => {
            write!(f, "(")?;
            write_term(f, t, scope)?;
            write!(f, ")")
        }
    }
}

fn write_stack(f: &mut fmt::Formatter<'_>, s: &Stack, scope: &mut Vec<String>) -> fmt::Result {
    match s {
        Stack::Bottom(i) => write!(f, "e{i}"),
        Stack::Push(t, below) => {
            // Elements are closed; parenthesize non-atoms so the element
            // boundary stays visible.
            match **t {
                Term::Var(_) | Term::Callcc | Term::Instr(_) | Term::Cont(_) => {
                    write_atom(f, t, scope)?
                }
                _ => {
                    write!(f, "(")?;
                    write_term(f, t, scope)?;
                    write!(f, ")")?
                }
            }
            write!(f, " . ")?;
            write_stack(f, below, scope)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &mut Vec::new())
    }
}

impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_stack(f, self, &mut Vec::new())
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {}", self.term, self.stack)
    }
}

/// Prints an open term using `env` for its free indices.
///
/// `env` lists names outermost-first, matching the context telescopes of the
/// proof checker: the innermost entry (last) names index 0.
pub fn display_with_env(t: &Term, env: &[&str]) -> String {
    struct WithEnv<'a>(&'a Term, &'a [&'a str]);
    impl fmt::Display for WithEnv<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let mut scope: Vec<String> = self.1.iter().map(|s| s.to_string()).collect();
            write_term(f, self.0, &mut scope)
        }
    }
    WithEnv(t, env).to_string()
}
