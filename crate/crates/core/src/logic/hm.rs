use std::collections::BTreeSet;

use serde::Serialize;

use super::eval::Evaluator;
use super::formula::{Formula, Variable};
use super::valuation::Valuation;
use crate::kernel::{Behaviour, System};
use crate::{Error, Result};

/// `tp(x)` for every behaviour and `tps(f)`, over `V(Comp(f))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeSet {
    pub tp: Vec<BTreeSet<Variable>>,
    pub tps: BTreeSet<BTreeSet<Variable>>,
}

pub fn compute_types(f: &System, valuation: &Valuation) -> Result<TypeSet> {
    let vars = valuation.variables_over(&f.component_ids());
    let mut ev = Evaluator::new(valuation, None);
    let mut tp = vec![BTreeSet::new(); f.len()];
    for v in &vars {
        for x in ev.truth(f, &Formula::atom(v.clone()))?.ones() {
            tp[x].insert(v.clone());
        }
    }
    let tps = tp.iter().cloned().collect();
    Ok(TypeSet { tp, tps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HmFlavour {
    /// Agreement on all of `ℒ(C)`.
    Elementary,
    /// Agreement on all of `ℒ(C)^□`.
    Boxed,
}

/// Decides agreement of `(f, x)` and `(g, y)` on all formulas of the chosen
/// flavour through types.
pub fn hm_equivalent(
    f: &System,
    g: &System,
    x: &Behaviour,
    y: &Behaviour,
    valuation: &Valuation,
    flavour: HmFlavour,
) -> Result<bool> {
    if f.component_ids() != g.component_ids() {
        return Err(Error::Domain(format!(
            "`{}` and `{}` have different component sets",
            f.name(),
            g.name()
        )));
    }
    let (xi, yi) = (f.require_index(x)?, g.require_index(y)?);
    let (tf, tg) = (compute_types(f, valuation)?, compute_types(g, valuation)?);
    let same_type = tf.tp[xi] == tg.tp[yi];
    Ok(match flavour {
        HmFlavour::Elementary => same_type,
        HmFlavour::Boxed => same_type && tf.tps == tg.tps,
    })
}

/// `φ_D = ⋀{p | p ∈ D} ∧ ⋀{¬p | p ∈ V(C)∖D}`, conjuncts in variable order.
pub fn characteristic_formula(d: &BTreeSet<Variable>, all: &BTreeSet<Variable>) -> Formula {
    Formula::conjunction(all.iter().map(|v| {
        let atom = Formula::atom(v.clone());
        if d.contains(v) {
            atom
        } else {
            Formula::not(atom)
        }
    }))
}
