//! The behaviour logic: an elementary propositional language over component
//! variables, the universal modality `□`, and structural connectives
//! (`∗`, `→∗`, `∗_d`, `−∗` and its directed variant) evaluated over a finite
//! universe of systems.
//!
//! A formula is *defined* at a system when every atom outside structural
//! connectives is over one of its components. Structural connectives only
//! consider decompositions (resp. plugged-in systems) at which their operands
//! are defined; a wand whose conclusion is undefined on the composite counts
//! as false there.

mod absoluteness;
mod eval;
mod formula;
mod hm;
mod rules;
mod valuation;

pub use absoluteness::{
    check_absoluteness, AbsolutenessCounterexample, AbsolutenessMode, AbsolutenessVerdict,
};
pub use eval::{satisfies, system_decomposes, valid_in, Evaluator, SkippedTensor, Universe};
pub use formula::{Formula, Language, Polarity, Variable};
pub use hm::{characteristic_formula, compute_types, hm_equivalent, HmFlavour, TypeSet};
pub use rules::{
    frame_rule, global_local, global_local_formula, local_global, local_global_formula,
    local_reasoning_i, local_reasoning_ii, local_reasoning_iii, Audit, PremiseCheck, Rule,
    RuleReport,
};
pub use valuation::Valuation;
