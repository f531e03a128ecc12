//! Formula text syntax. The grammar inverts the printer:
//!
//! ```text
//! imp   := or ("->" imp)?
//! or    := and ("|" or)?
//! and   := star ("&" and)?
//! star  := unary (("*" | "*>" | "*d" | "-*" | "->*") star)?
//! unary := ("!" | "[]") unary | "true" | "false" | comp "::" var | "(" imp ")"
//! ```
//!
//! Unicode spellings `⊤ ⊥ ¬ □ ∧ ∨ → ∗ −∗` are accepted as well.

use super::syntax::Pos;
use super::Diagnostic;
use crate::logic::{Formula, Variable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum T {
    Ident(String),
    Sep,
    Not,
    Box,
    And,
    Or,
    Implies,
    Star,
    DirStar,
    DisjStar,
    Wand,
    DirWand,
    LParen,
    RParen,
    End,
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '.'
}

fn lex(text: &str) -> std::result::Result<Vec<(T, usize)>, (usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, len) = match c {
            '(' => (T::LParen, 1),
            ')' => (T::RParen, 1),
            '!' | '¬' => (T::Not, 1),
            '□' => (T::Box, 1),
            '[' if at(1) == Some(']') => (T::Box, 2),
            '&' | '∧' => (T::And, 1),
            '|' | '∨' => (T::Or, 1),
            '→' => (T::Implies, 1),
            '⊤' => (T::Ident("true".into()), 1),
            '⊥' => (T::Ident("false".into()), 1),
            '−' if at(1) == Some('∗') => (T::Wand, 2),
            '-' if at(1) == Some('>') && at(2) == Some('*') => (T::DirWand, 3),
            '-' if at(1) == Some('>') => (T::Implies, 2),
            '-' if at(1) == Some('*') => (T::Wand, 2),
            ':' if at(1) == Some(':') => (T::Sep, 2),
            '*' | '∗' if at(1) == Some('>') => (T::DirStar, 2),
            // `*d` is an operator only when `d` does not start an identifier
            '*' | '∗' if at(1) == Some('d') && !at(2).is_some_and(|n| ident_char(n) || n == ':') => {
                (T::DisjStar, 2)
            }
            '*' | '∗' => (T::Star, 1),
            _ if ident_char(c) => {
                let start = i;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                out.push((T::Ident(chars[start..i].iter().collect()), start));
                continue;
            }
            _ => return Err((i, format!("unexpected character `{c}` in formula"))),
        };
        out.push((tok, i));
        i += len;
    }
    out.push((T::End, chars.len()));
    Ok(out)
}

struct P {
    toks: Vec<(T, usize)>,
    at: usize,
}

type R<T> = std::result::Result<T, (usize, String)>;

impl P {
    fn peek(&self) -> &T {
        &self.toks[self.at].0
    }

    fn col(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> T {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<X>(&self, msg: &str) -> R<X> {
        let found = match self.peek() {
            T::End => "end of formula".to_string(),
            T::Ident(s) => format!("`{s}`"),
            t => format!("{t:?}").to_lowercase(),
        };
        Err((self.col(), format!("{msg}, found {found}")))
    }

    fn imp(&mut self) -> R<Formula> {
        let a = self.or()?;
        if *self.peek() == T::Implies {
            self.bump();
            return Ok(Formula::implies(a, self.imp()?));
        }
        Ok(a)
    }

    fn or(&mut self) -> R<Formula> {
        let a = self.and()?;
        if *self.peek() == T::Or {
            self.bump();
            return Ok(Formula::or(a, self.or()?));
        }
        Ok(a)
    }

    fn and(&mut self) -> R<Formula> {
        let a = self.star()?;
        if *self.peek() == T::And {
            self.bump();
            return Ok(Formula::and(a, self.and()?));
        }
        Ok(a)
    }

    fn star(&mut self) -> R<Formula> {
        let a = self.unary()?;
        let build: fn(Formula, Formula) -> Formula = match self.peek() {
            T::Star => Formula::star,
            T::DirStar => Formula::dir_star,
            T::DisjStar => Formula::disj_star,
            T::Wand => Formula::wand,
            T::DirWand => Formula::dir_wand,
            _ => return Ok(a),
        };
        self.bump();
        Ok(build(a, self.star()?))
    }

    fn unary(&mut self) -> R<Formula> {
        match self.peek().clone() {
            T::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            T::Box => {
                self.bump();
                Ok(Formula::necessity(self.unary()?))
            }
            T::LParen => {
                self.bump();
                let f = self.imp()?;
                if *self.peek() != T::RParen {
                    return self.fail("expected `)`");
                }
                self.bump();
                Ok(f)
            }
            T::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::Top)
            }
            T::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::not(Formula::Top))
            }
            T::Ident(comp) => {
                let col = self.col();
                self.bump();
                if *self.peek() != T::Sep {
                    return self.fail("expected `::` after a component name");
                }
                self.bump();
                match self.bump() {
                    T::Ident(name) => Variable::new(&comp, &name)
                        .map(Formula::atom)
                        .map_err(|e| (col, e.to_string())),
                    _ => Err((col, "expected a variable name after `::`".into())),
                }
            }
            _ => self.fail("expected a formula"),
        }
    }
}

/// Parses formula text. Diagnostics are relative to `origin`, the position
/// of the text's first character.
pub fn parse_formula_at(text: &str, origin: Pos) -> Result<Formula> {
    let diag = |(col, msg): (usize, String)| {
        Error::Parse(vec![Diagnostic::new(origin.line, origin.column + col, msg)])
    };
    let toks = lex(text).map_err(diag)?;
    let mut p = P { toks, at: 0 };
    let f = p.imp().map_err(diag)?;
    if *p.peek() != T::End {
        return Err(diag((p.col(), "unexpected trailing input in formula".into())));
    }
    Ok(f)
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    parse_formula_at(text, Pos { line: 1, column: 1 })
}
