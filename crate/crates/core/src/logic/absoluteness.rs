use serde::Serialize;

use super::eval::Evaluator;
use super::formula::{Formula, Language};
use super::valuation::Valuation;
use crate::kernel::{Behaviour, ImplementationMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsolutenessMode {
    /// `f,x ⊨ α ⟺ g,σ(x) ⊨ α` for `α ∈ ℒ(g)`.
    Biconditional,
    /// Upward transfer for positive `α ∈ ℒ(g)^□`, downward for negative.
    Directed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbsolutenessCounterexample {
    pub behaviour: Behaviour,
    pub image: Behaviour,
    pub at_source: bool,
    pub at_target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbsolutenessVerdict {
    pub holds: bool,
    pub upward: bool,
    pub downward: bool,
    pub counterexample: Option<AbsolutenessCounterexample>,
}

/// Tests the transfer of `α` along `σ : f → g` at every `x ∈ Beh(f)`.
pub fn check_absoluteness(
    sigma: &ImplementationMap,
    valuation: &Valuation,
    alpha: &Formula,
    mode: AbsolutenessMode,
) -> Result<AbsolutenessVerdict> {
    let (f, g) = (sigma.source(), sigma.target());
    let (upward, downward) = match mode {
        AbsolutenessMode::Biconditional => {
            alpha.require_language(Language::Elementary, &g.component_ids())?;
            (true, true)
        }
        AbsolutenessMode::Directed => {
            alpha.require_language(Language::Boxed, &g.component_ids())?;
            let pol = alpha.polarity()?;
            if !pol.is_definite() {
                return Err(Error::Precondition(format!(
                    "`{alpha}` is neither positive nor negative"
                )));
            }
            (pol.positive, pol.negative)
        }
    };
    let mut ev = Evaluator::new(valuation, None);
    let at_f = ev.truth(f, alpha)?;
    let at_g = ev.truth(g, alpha)?;
    let counterexample = (0..f.len()).find_map(|x| {
        let (s, t) = (at_f.contains(x), at_g.contains(sigma.apply(x)));
        let broken = (upward && t && !s) || (downward && s && !t);
        broken.then(|| AbsolutenessCounterexample {
            behaviour: f.behaviour(x).clone(),
            image: g.behaviour(sigma.apply(x)).clone(),
            at_source: s,
            at_target: t,
        })
    });
    Ok(AbsolutenessVerdict {
        holds: counterexample.is_none(),
        upward,
        downward,
        counterexample,
    })
}
