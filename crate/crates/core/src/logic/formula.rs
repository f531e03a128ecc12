use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::kernel::ComponentId;
use crate::{Error, Result};

/// A propositional variable `p ∈ Var(c)`, written `c::p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Variable {
    pub component: ComponentId,
    pub name: String,
}

impl Variable {
    pub fn new(component: &str, name: &str) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::Argument("variable names must be non-empty".into()));
        }
        Ok(Variable {
            component: ComponentId::new(component)?,
            name: name.to_owned(),
        })
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.component, self.name)
    }
}

/// Formulas of the behaviour logic. `∨`, `→` are abbreviations built from
/// `¬` and `∧`; `⊤` is a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Atom(Variable),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// The universal modality `□`.
    Necessity(Box<Formula>),
    Star(Box<Formula>, Box<Formula>),
    /// `→∗`: the interface is an input to the right part.
    DirStar(Box<Formula>, Box<Formula>),
    /// `∗_d`: the parts share no component.
    DisjStar(Box<Formula>, Box<Formula>),
    Wand(Box<Formula>, Box<Formula>),
    DirWand(Box<Formula>, Box<Formula>),
}

/// Language levels, each extending the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Language {
    Elementary,
    Boxed,
    Structural,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Elementary => "ℒ",
            Language::Boxed => "ℒ^□",
            Language::Structural => "ℒ*",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Polarity {
    pub positive: bool,
    pub negative: bool,
}

impl Polarity {
    pub fn is_definite(&self) -> bool {
        self.positive || self.negative
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.positive, self.negative) {
            (true, true) => "positive and negative",
            (true, false) => "positive",
            (false, true) => "negative",
            (false, false) => "neither",
        })
    }
}

impl Formula {
    pub fn atom(v: Variable) -> Self {
        Formula::Atom(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// `a ∨ b := ¬(¬a ∧ ¬b)`
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a → b := ¬a ∨ b`
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::not(a), b)
    }

    pub fn necessity(a: Formula) -> Self {
        Formula::Necessity(Box::new(a))
    }

    pub fn star(a: Formula, b: Formula) -> Self {
        Formula::Star(Box::new(a), Box::new(b))
    }

    pub fn dir_star(a: Formula, b: Formula) -> Self {
        Formula::DirStar(Box::new(a), Box::new(b))
    }

    pub fn disj_star(a: Formula, b: Formula) -> Self {
        Formula::DisjStar(Box::new(a), Box::new(b))
    }

    pub fn wand(a: Formula, b: Formula) -> Self {
        Formula::Wand(Box::new(a), Box::new(b))
    }

    pub fn dir_wand(a: Formula, b: Formula) -> Self {
        Formula::DirWand(Box::new(a), Box::new(b))
    }

    /// Conjunction of a list, `⊤` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Atom(_) => vec![],
            Formula::Not(a) | Formula::Necessity(a) => vec![a],
            Formula::And(a, b)
            | Formula::Star(a, b)
            | Formula::DirStar(a, b)
            | Formula::DisjStar(a, b)
            | Formula::Wand(a, b)
            | Formula::DirWand(a, b) => vec![a, b],
        }
    }

    pub fn is_structural_node(&self) -> bool {
        matches!(
            self,
            Formula::Star(..)
                | Formula::DirStar(..)
                | Formula::DisjStar(..)
                | Formula::Wand(..)
                | Formula::DirWand(..)
        )
    }

    /// All distinct subformulas, children before parents.
    pub fn subformulas(&self) -> Vec<&Formula> {
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            for c in f.children() {
                walk(c, out);
            }
            if !out.contains(&f) {
                out.push(f);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        if let Formula::Atom(v) = self {
            out.insert(v.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn components(&self) -> BTreeSet<ComponentId> {
        self.variables().into_iter().map(|v| v.component).collect()
    }

    /// The smallest language level containing the formula.
    pub fn language(&self) -> Language {
        let here = match self {
            Formula::Necessity(_) => Language::Boxed,
            f if f.is_structural_node() => Language::Structural,
            _ => Language::Elementary,
        };
        self.children()
            .into_iter()
            .map(Formula::language)
            .fold(here, Ord::max)
    }

    /// Errors unless the formula is in `level(comps)`.
    pub fn require_language(&self, level: Language, comps: &BTreeSet<ComponentId>) -> Result<()> {
        let found = self.language();
        if found > level {
            return Err(Error::Language(format!(
                "`{self}` is in {found}, not in {level}"
            )));
        }
        if let Some(v) = self.variables().iter().find(|v| !comps.contains(&v.component)) {
            let names: Vec<&str> = comps.iter().map(ComponentId::as_str).collect();
            return Err(Error::Language(format!(
                "atom `{v}` is not over the components {{{}}}",
                names.join(", ")
            )));
        }
        Ok(())
    }

    /// Counts negations above every `□`. Errors on structural connectives.
    pub fn polarity(&self) -> Result<Polarity> {
        if self.language() == Language::Structural {
            return Err(Error::Language(format!(
                "polarity is only defined on ℒ^□, `{self}` has structural connectives"
            )));
        }
        let mut pol = Polarity {
            positive: true,
            negative: true,
        };
        fn walk(f: &Formula, negations: usize, pol: &mut Polarity) {
            if let Formula::Necessity(_) = f {
                if negations % 2 == 0 {
                    pol.negative = false;
                } else {
                    pol.positive = false;
                }
            }
            let below = negations + matches!(f, Formula::Not(_)) as usize;
            for c in f.children() {
                walk(c, below, pol);
            }
        }
        walk(self, 0, &mut pol);
        Ok(pol)
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }
}

// Precedence levels for printing; larger binds tighter.
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const STAR: u8 = 4;
const UNARY: u8 = 5;

enum View<'a> {
    Leaf(String),
    Unary(&'static str, &'a Formula),
    Binary(&'static str, u8, &'a Formula, &'a Formula),
}

fn negated(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Not(a) => Some(a),
        _ => None,
    }
}

fn view(f: &Formula) -> View<'_> {
    match f {
        Formula::Top => View::Leaf("true".into()),
        Formula::Atom(v) => View::Leaf(v.to_string()),
        Formula::Not(inner) => {
            // ¬(¬¬a ∧ ¬b) prints as a → b, ¬(¬a ∧ ¬b) as a ∨ b.
            if let Formula::And(l, r) = inner.as_ref() {
                if let (Some(nl), Some(nr)) = (negated(l), negated(r)) {
                    if let Some(a) = negated(nl) {
                        return View::Binary("->", IMPLIES, a, nr);
                    }
                    return View::Binary("|", OR, nl, nr);
                }
            }
            View::Unary("!", inner)
        }
        Formula::Necessity(a) => View::Unary("[]", a),
        Formula::And(a, b) => View::Binary("&", AND, a, b),
        Formula::Star(a, b) => View::Binary("*", STAR, a, b),
        Formula::DirStar(a, b) => View::Binary("*>", STAR, a, b),
        Formula::DisjStar(a, b) => View::Binary("*d", STAR, a, b),
        Formula::Wand(a, b) => View::Binary("-*", STAR, a, b),
        Formula::DirWand(a, b) => View::Binary("->*", STAR, a, b),
    }
}

fn level(f: &Formula) -> u8 {
    match view(f) {
        View::Leaf(_) | View::Unary(..) => UNARY,
        View::Binary(_, l, _, _) => l,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let paren = level(f) < min;
    if paren {
        out.write_str("(")?;
    }
    match view(f) {
        View::Leaf(s) => out.write_str(&s)?,
        View::Unary(op, a) => {
            out.write_str(op)?;
            write_at(a, UNARY, out)?;
        }
        View::Binary(op, l, a, b) => {
            // Right-associative: the left operand needs a strictly tighter
            // level, the right one may repeat the operator's level.
            write_at(a, l + 1, out)?;
            write!(out, " {op} ")?;
            write_at(b, l, out)?;
        }
    }
    if paren {
        out.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_at(self, 0, f)
    }
}
