//! The shipped fixture corpus and the checks each fixture documents.

use serde::Serialize;

use super::{parse_model_with, ModelFile};
use crate::cap_scenario::{scenario_size, verify_appendix};
use crate::guarantees::{cap_verify_exhaustive, is_entangled};
use crate::kernel::{
    factor_through_tensor, is_free_composition, is_input_set, systems_equivalent,
    Behaviour, ComponentId, CompositionWitness, Snapshot, System,
};
use crate::logic::{compute_types, local_reasoning_i, Evaluator};
use crate::timed::{derived_order, validate_timed};
use crate::{Error, Limits, Result};

pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
}

pub const FIXTURES: [Fixture; 8] = [
    Fixture {
        name: "strings",
        text: include_str!("../../fixtures/strings.bsm"),
    },
    Fixture {
        name: "message_passing",
        text: include_str!("../../fixtures/message_passing.bsm"),
    },
    Fixture {
        name: "traces",
        text: include_str!("../../fixtures/traces.bsm"),
    },
    Fixture {
        name: "heaps",
        text: include_str!("../../fixtures/heaps.bsm"),
    },
    Fixture {
        name: "temperature",
        text: include_str!("../../fixtures/temperature.bsm"),
    },
    Fixture {
        name: "register",
        text: include_str!("../../fixtures/register.bsm"),
    },
    Fixture {
        name: "cap_toy",
        text: include_str!("../../fixtures/cap_toy.bsm"),
    },
    Fixture {
        name: "timed",
        text: include_str!("../../fixtures/timed.bsm"),
    },
];

pub fn fixture(name: &str) -> Result<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name).ok_or_else(|| {
        let known: Vec<&str> = FIXTURES.iter().map(|f| f.name).collect();
        Error::Argument(format!("unknown fixture `{name}` (known: {})", known.join(", ")))
    })
}

pub fn load_fixture(name: &str, limits: &Limits) -> Result<ModelFile> {
    parse_model_with(fixture(name)?.text, limits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureCheck {
    pub check: String,
    pub holds: bool,
    pub detail: String,
}

fn check(out: &mut Vec<FixtureCheck>, name: &str, holds: bool, detail: impl Into<String>) {
    out.push(FixtureCheck {
        check: name.to_string(),
        holds,
        detail: detail.into(),
    });
}

fn b(label: &str) -> Behaviour {
    Behaviour::new(label)
}

fn id(name: &str) -> ComponentId {
    ComponentId::new(name).expect("fixture component names are valid")
}

fn snapshot_of(f: &System, label: &str) -> Result<Snapshot> {
    Ok(f.snapshot(f.require_index(&b(label))?))
}

fn witness(m: &ModelFile, left: &str, right: &str) -> Result<CompositionWitness> {
    CompositionWitness::new(m.implementation(left)?.clone(), m.implementation(right)?.clone())
}

/// Runs the documented checks of one fixture. Every check is expected to
/// hold; a failing check is reported, not raised.
pub fn run_checks(name: &str, limits: &Limits) -> Result<Vec<FixtureCheck>> {
    let m = load_fixture(name, limits)?;
    let mut out = Vec::new();
    match name {
        "strings" => {
            let f = m.system("f")?;
            let s = snapshot_of(f, "xxyxzzxy")?;
            let want = Snapshot::new([(id("c"), b("xxxx")), (id("d"), b("yzzy"))]);
            check(&mut out, "projection of xxyxzzxy", s == want, s.to_string());
            let t = snapshot_of(f, "xxxxyzzy")?;
            check(&mut out, "xxyxzzxy and xxxxyzzy share a snapshot", s == t, t.to_string());
            let v = m.default_valuation()?;
            let phi = m.formula("both").expect("declared");
            let x = f.require_index(&b("xxyxzzxy"))?;
            let holds = Evaluator::new(v, None).holds(f, x, phi)?;
            check(&mut out, "xxyxzzxy satisfies c::four & d::ends_y", holds, phi.to_string());
        }
        "message_passing" => {
            let w = witness(&m, "hf", "hg")?;
            let free = is_free_composition(&w)?;
            check(
                &mut out,
                "h is a free composition of f and g",
                free.free,
                format!("{} compatible pairs", free.compatible_pairs),
            );
            let eq = systems_equivalent(m.system("h")?, m.system("fg")?);
            check(&mut out, "h ≡ f ⊗ g", eq, "");
            let input = is_input_set(m.system("f")?, &[id("c")].into())?;
            check(&mut out, "the channel is an input of the receiver", input, "");
        }
        "traces" => {
            let fg = m.system("fg")?;
            let pair = b("(abbcab,bdbcdb)");
            let restriction = fg.index_of(&pair).and_then(|x| fg.local(x, &id("e")).cloned());
            check(
                &mut out,
                "(abbcab, bdbcdb) ∈ Beh(f ⊗ g) with interface restriction bbcb",
                restriction.as_ref().map(Behaviour::as_str) == Some("bbcb"),
                format!("{restriction:?}"),
            );
            let h = m.system("h")?;
            check(
                &mut out,
                "abdbcadb ∈ Beh(h)",
                h.index_of(&b("abdbcadb")).is_some(),
                format!("{} linearizations", h.len()),
            );
            let fact = factor_through_tensor(&witness(&m, "hf", "hg")?, limits)?;
            check(
                &mut out,
                "the factor map of h onto f ⊗ g is surjective",
                fact.surjective,
                format!("{} → {}", h.len(), fact.tensor.system.len()),
            );
        }
        "heaps" => {
            let heap = m.system("heap")?;
            let input = is_input_set(heap, &[id("l1")].into())?;
            check(&mut out, "cell l1 is an input of the heap", input, "");
            let free = is_free_composition(&witness(&m, "r1", "r2")?)?;
            let detail = match &free.unrealized {
                Some((x, y)) => format!("unrealized pair ({x}, {y})"),
                None => String::new(),
            };
            check(
                &mut out,
                "bounded runs do not realize every pair of cell streams",
                !free.free,
                detail,
            );
            let v = m.default_valuation()?;
            let phi = m.formula("both_zero").expect("declared");
            let mut ev = Evaluator::new(v, None);
            let at_start = ev.holds(heap, heap.require_index(&b("ε"))?, phi)?;
            let after = ev.holds(heap, heap.require_index(&b("p1"))?, phi)?;
            check(
                &mut out,
                "both cells read 0 initially but not after p1",
                at_start && !after,
                "",
            );
        }
        "temperature" => {
            let v = m.default_valuation()?;
            let (alpha, beta) = (m.formula("alpha").expect("declared"), m.formula("beta").expect("declared"));
            let rep = local_reasoning_i(m.implementation("sg")?, m.implementation("ph")?, v, alpha, beta, true)?;
            let agrees = rep.audit.as_ref().is_some_and(|a| a.agrees);
            check(&mut out, "rule I certifies g ⊗ h ⊨ d::p_d", rep.certified, rep.conclusion.clone());
            check(&mut out, "direct evaluation agrees", agrees, "");
            let gh = m.system("gh")?;
            let tps = compute_types(gh, v)?.tps;
            let names: Vec<Vec<String>> = tps
                .iter()
                .map(|t| t.iter().map(ToString::to_string).collect())
                .collect();
            check(
                &mut out,
                "tps(g ⊗ h) = {{c::p_c, d::p_d}}",
                names == vec![vec!["c::p_c".to_string(), "d::p_d".to_string()]],
                format!("{names:?}"),
            );
        }
        "register" => {
            let rep = verify_appendix(m.scenario("micro")?, limits)?;
            check(
                &mut out,
                "micro scenario: entangled and closure verdict holds",
                rep.entangled && rep.verdict,
                format!("{} traces", rep.stats.traces),
            );
            check(
                &mut out,
                "micro scenario: exhaustive and closure modes agree",
                rep.modes_agree == Some(true),
                "",
            );
            let size = scenario_size(m.scenario("standard")?)?;
            check(&mut out, "standard scenario has 3375 traces", size == 3375, size.to_string());
        }
        "cap_toy" => {
            let loose = cap_verify_exhaustive(m.cap("loose")?, limits)?;
            check(
                &mut out,
                "without relations some subset meets every guarantee",
                !loose.verdict && !loose.entanglement.entangled,
                "",
            );
            let tight = m.cap("tight")?;
            let ent = is_entangled(tight).entangled;
            let rep = cap_verify_exhaustive(tight, limits)?;
            check(&mut out, "total relations entangle and forbid every subset", ent && rep.verdict, "");
        }
        "timed" => {
            let clocked = m.timed_implementation("clocked")?;
            let ord = derived_order(clocked);
            let at = |l: &str| clocked.f().require_index(&b(l));
            let (idle, busy, done) = (at("idle")?, at("busy")?, at("done")?);
            check(
                &mut out,
                "clocked is valid and orders idle ≤ busy ≤ done",
                validate_timed(clocked).valid
                    && ord.leq(idle, busy)
                    && ord.leq(busy, done)
                    && !ord.leq(done, idle),
                format!("{:?}", ord.pairs()),
            );
            let flat_t = m.timed_implementation("flat")?;
            let flat = derived_order(flat_t);
            let (x, y) = (flat_t.f().require_index(&b("x"))?, flat_t.f().require_index(&b("y"))?);
            check(
                &mut out,
                "flat: x is not related to itself, the order stays transitive",
                !flat.leq(x, x) && flat.leq(y, y) && flat.is_transitive(),
                "",
            );
        }
        _ => unreachable!("fixture names are checked on load"),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::serialize_model;

    #[test]
    fn every_fixture_loads_round_trips_and_passes_its_checks() {
        let limits = Limits::default();
        for fx in &FIXTURES {
            let m = load_fixture(fx.name, &limits).unwrap_or_else(|e| panic!("{}: {e}", fx.name));
            let again = parse_model_with(&serialize_model(&m), &limits).unwrap();
            assert_eq!(m, again, "{}", fx.name);
            for c in run_checks(fx.name, &limits).unwrap() {
                assert!(c.holds, "{}: {} ({})", fx.name, c.check, c.detail);
            }
        }
    }
}
