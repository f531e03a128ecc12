//! Certification of the local-reasoning rules and the frame rule.
//!
//! Each rule checks its side conditions and premises on the finite data and,
//! when they hold, certifies the conclusion without evaluating it. Audit mode
//! additionally evaluates the conclusion directly; certification and audit
//! must never disagree.

use std::collections::BTreeSet;

use serde::Serialize;

use super::eval::{Evaluator, Universe};
use super::formula::{Formula, Language};
use super::valuation::Valuation;
use crate::kernel::{interface, is_input_set, tensor, Behaviour, ComponentId, ImplementationMap, System};
use crate::{Error, Limits, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    LocalReasoningI,
    LocalReasoningII,
    LocalReasoningIII,
    Frame,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PremiseCheck {
    pub statement: String,
    pub holds: bool,
    /// A failing behaviour for `⊨` premises, the witnessing behaviour for
    /// `⊭` premises.
    pub witness: Option<Behaviour>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Audit {
    /// Direct evaluation confirms the certified conclusion.
    pub agrees: bool,
    /// First behaviour where the conclusion's formula fails, if any.
    pub failing_behaviour: Option<Behaviour>,
    /// Frame rule only: number of `(subformula, behaviour)` pairs where the
    /// bridging biconditional fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridging_failures: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    pub rule: Rule,
    pub interface: Vec<ComponentId>,
    pub premises: Vec<PremiseCheck>,
    pub certified: bool,
    pub conclusion: String,
    pub audit: Option<Audit>,
}

fn valid_check(ev: &mut Evaluator<'_>, f: &System, phi: &Formula) -> Result<PremiseCheck> {
    let fail = ev.first_failure(f, phi)?;
    Ok(PremiseCheck {
        statement: format!("{}, V ⊨ {phi}", f.name()),
        holds: fail.is_none(),
        witness: fail.map(|x| f.behaviour(x).clone()),
    })
}

fn invalid_check(ev: &mut Evaluator<'_>, f: &System, phi: &Formula) -> Result<PremiseCheck> {
    let fail = ev.first_failure(f, phi)?;
    Ok(PremiseCheck {
        statement: format!("{}, V ⊭ {phi}", f.name()),
        holds: fail.is_some(),
        witness: fail.map(|x| f.behaviour(x).clone()),
    })
}

fn non_empty(int: BTreeSet<ComponentId>, what: &str) -> Result<BTreeSet<ComponentId>> {
    if int.is_empty() {
        return Err(Error::Precondition(format!("the interface {what} is empty")));
    }
    Ok(int)
}

#[allow(clippy::too_many_arguments)]
fn local_reasoning(
    rule: Rule,
    sigma: &ImplementationMap,
    pi: &ImplementationMap,
    valuation: &Valuation,
    alpha: &Formula,
    beta: &Formula,
    audit: bool,
) -> Result<RuleReport> {
    let f = sigma.source();
    if pi.source() != f {
        return Err(Error::Structural(
            "σ and π must be implementations with the same source".into(),
        ));
    }
    let (g, h) = (sigma.target(), pi.target());
    // α has to be readable in both g and h, so the interface is Int(g, h).
    let int = non_empty(
        interface(g, h),
        &format!("of `{}` and `{}`", g.name(), h.name()),
    )?;
    alpha.require_language(Language::Elementary, &int)?;
    match rule {
        Rule::LocalReasoningI => beta.require_language(Language::Elementary, &h.component_ids())?,
        _ => {
            beta.require_language(Language::Boxed, &h.component_ids())?;
            if !beta.polarity()?.positive {
                return Err(Error::Precondition(format!("`{beta}` is not positive")));
            }
        }
    }
    let mut ev = Evaluator::new(valuation, None);
    let premises = vec![
        valid_check(&mut ev, g, alpha)?,
        valid_check(&mut ev, h, &Formula::implies(alpha.clone(), beta.clone()))?,
    ];
    let certified = premises.iter().all(|p| p.holds);
    let audit = if audit && certified {
        let fail = ev.first_failure(f, beta)?;
        Some(Audit {
            agrees: fail.is_none(),
            failing_behaviour: fail.map(|x| f.behaviour(x).clone()),
            bridging_failures: None,
        })
    } else {
        None
    };
    Ok(RuleReport {
        rule,
        interface: int.into_iter().collect(),
        premises,
        certified,
        conclusion: format!("{}, V ⊨ {beta}", f.name()),
        audit,
    })
}

/// From `g ⊨ α` and `h ⊨ α → β` conclude `f ⊨ β`, for `g ⊣σ f ⊢π h`,
/// `α ∈ ℒ(I)` and `β ∈ ℒ(h)`.
pub fn local_reasoning_i(
    sigma: &ImplementationMap,
    pi: &ImplementationMap,
    valuation: &Valuation,
    alpha: &Formula,
    beta: &Formula,
    audit: bool,
) -> Result<RuleReport> {
    local_reasoning(Rule::LocalReasoningI, sigma, pi, valuation, alpha, beta, audit)
}

/// As [`local_reasoning_i`] with `β` a positive formula of `ℒ(h)^□`.
pub fn local_reasoning_ii(
    sigma: &ImplementationMap,
    pi: &ImplementationMap,
    valuation: &Valuation,
    alpha: &Formula,
    beta: &Formula,
    audit: bool,
) -> Result<RuleReport> {
    local_reasoning(Rule::LocalReasoningII, sigma, pi, valuation, alpha, beta, audit)
}

/// From `f ⊭ α` and `g ⊨ ¬α → ¬β` conclude `f ⊗ g ⊭ β`, where the interface
/// `I` is an input to `g`, `α ∈ ℒ(I)` and `β ∈ ℒ(g)^□` is negative.
pub fn local_reasoning_iii(
    f: &System,
    g: &System,
    valuation: &Valuation,
    alpha: &Formula,
    beta: &Formula,
    limits: &Limits,
    audit: bool,
) -> Result<RuleReport> {
    let int = non_empty(interface(f, g), &format!("of `{}` and `{}`", f.name(), g.name()))?;
    if !is_input_set(g, &int)? {
        return Err(Error::Precondition(format!(
            "the interface is not an input to `{}`",
            g.name()
        )));
    }
    alpha.require_language(Language::Elementary, &int)?;
    beta.require_language(Language::Boxed, &g.component_ids())?;
    if !beta.polarity()?.negative {
        return Err(Error::Precondition(format!("`{beta}` is not negative")));
    }
    let mut ev = Evaluator::new(valuation, None).with_limits(*limits);
    let premises = vec![
        invalid_check(&mut ev, f, alpha)?,
        valid_check(
            &mut ev,
            g,
            &Formula::implies(Formula::not(alpha.clone()), Formula::not(beta.clone())),
        )?,
    ];
    let certified = premises.iter().all(|p| p.holds);
    let t = tensor(f, g, limits)?;
    let audit = if audit && certified {
        let fail = ev.first_failure(&t.system, beta)?;
        Some(Audit {
            agrees: fail.is_some(),
            failing_behaviour: fail.map(|z| t.system.behaviour(z).clone()),
            bridging_failures: None,
        })
    } else {
        None
    };
    Ok(RuleReport {
        rule: Rule::LocalReasoningIII,
        interface: int.into_iter().collect(),
        premises,
        certified,
        conclusion: format!("{}, V ⊭ {beta}", t.system.name()),
        audit,
    })
}

/// From `h ⊨ β` conclude `g ⊗ h ⊨ β` for `β ∈ ℒ(h)^□` when `Int(g, h) = ∅`.
///
/// The audit checks `g⊗h,(x,y) ⊨ δ ⟺ h,y ⊨ δ` for every subformula `δ` and
/// every behaviour, then evaluates the conclusion.
pub fn frame_rule(
    g: &System,
    h: &System,
    valuation: &Valuation,
    beta: &Formula,
    limits: &Limits,
    audit: bool,
) -> Result<RuleReport> {
    if !interface(g, h).is_empty() {
        return Err(Error::Precondition(format!(
            "`{}` and `{}` share components",
            g.name(),
            h.name()
        )));
    }
    beta.require_language(Language::Boxed, &h.component_ids())?;
    let mut ev = Evaluator::new(valuation, None).with_limits(*limits);
    let premises = vec![valid_check(&mut ev, h, beta)?];
    let certified = premises[0].holds;
    let t = tensor(g, h, limits)?;
    let audit = if audit && certified {
        let mut bridging = 0;
        for delta in beta.subformulas() {
            let at_t = ev.truth(&t.system, delta)?;
            let at_h = ev.truth(h, delta)?;
            bridging += (0..t.system.len())
                .filter(|&z| at_t.contains(z) != at_h.contains(t.right.apply(z)))
                .count();
        }
        let fail = ev.first_failure(&t.system, beta)?;
        Some(Audit {
            agrees: bridging == 0 && fail.is_none(),
            failing_behaviour: fail.map(|z| t.system.behaviour(z).clone()),
            bridging_failures: Some(bridging),
        })
    } else {
        None
    };
    Ok(RuleReport {
        rule: Rule::Frame,
        interface: Vec::new(),
        premises,
        certified,
        conclusion: format!("{}, V ⊨ {beta}", t.system.name()),
        audit,
    })
}

/// `φ ∗ ⊤ → φ`
pub fn local_global_formula(phi: &Formula) -> Formula {
    Formula::implies(Formula::star(phi.clone(), Formula::Top), phi.clone())
}

/// `φ → (ψ ∗ ψ′ → (ψ ∧ φ) ∗ ψ′)`
pub fn global_local_formula(phi: &Formula, psi: &Formula, psi2: &Formula) -> Formula {
    Formula::implies(
        phi.clone(),
        Formula::implies(
            Formula::star(psi.clone(), psi2.clone()),
            Formula::star(Formula::and(psi.clone(), phi.clone()), psi2.clone()),
        ),
    )
}

fn require_polarity(phi: &Formula, positive: bool) -> Result<()> {
    if phi.language() == Language::Structural {
        return Err(Error::Language(format!("`{phi}` is not in ℒ^□")));
    }
    let pol = phi.polarity()?;
    let ok = if positive { pol.positive } else { pol.negative };
    if !ok {
        return Err(Error::Precondition(format!(
            "`{phi}` is not {}",
            if positive { "positive" } else { "negative" }
        )));
    }
    Ok(())
}

/// Evaluates `φ ∗ ⊤ → φ` at `(f, x)` for positive `φ`.
pub fn local_global(
    f: &System,
    valuation: &Valuation,
    x: &Behaviour,
    phi: &Formula,
    universe: &Universe,
) -> Result<bool> {
    require_polarity(phi, true)?;
    let xi = f.require_index(x)?;
    Evaluator::new(valuation, Some(universe)).holds(f, xi, &local_global_formula(phi))
}

/// Evaluates `φ → (ψ ∗ ψ′ → (ψ ∧ φ) ∗ ψ′)` at `(f, x)` for negative `φ`.
pub fn global_local(
    f: &System,
    valuation: &Valuation,
    x: &Behaviour,
    phi: &Formula,
    psi: &Formula,
    psi2: &Formula,
    universe: &Universe,
) -> Result<bool> {
    require_polarity(phi, false)?;
    let xi = f.require_index(x)?;
    Evaluator::new(valuation, Some(universe)).holds(f, xi, &global_local_formula(phi, psi, psi2))
}
