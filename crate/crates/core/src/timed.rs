//! Timed implementations: a system composed with a partially ordered
//! observer component, and the order this induces on the system's
//! behaviours.

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::kernel::{
    components_as_system, is_input, Behaviour, Component, ImplementationMap, System,
};
use crate::{Error, Limits, Result};

/// A component whose behaviour set carries a partial order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedComponent {
    component: Arc<Component>,
    /// `leq[a]` contains `b` iff `a ≤ b`.
    leq: Vec<FixedBitSet>,
}

impl OrderedComponent {
    /// Validates that `pairs` is reflexive, antisymmetric and transitive. No
    /// closure is taken.
    pub fn new(component: Arc<Component>, pairs: &[(Behaviour, Behaviour)]) -> Result<Self> {
        let n = component.len();
        let mut leq = vec![FixedBitSet::with_capacity(n); n];
        for (a, b) in pairs {
            let pos = |x: &Behaviour| {
                component.position(x).map(|i| i as usize).ok_or_else(|| {
                    Error::Domain(format!("`{x}` is not a behaviour of `{}`", component.id()))
                })
            };
            leq[pos(a)?].insert(pos(b)?);
        }
        let label = |i: usize| component.behaviour(i as u32);
        for a in 0..n {
            if !leq[a].contains(a) {
                return Err(Error::Argument(format!(
                    "order on `{}` is not reflexive at `{}`",
                    component.id(),
                    label(a)
                )));
            }
            for b in leq[a].ones() {
                if a != b && leq[b].contains(a) {
                    return Err(Error::Argument(format!(
                        "order on `{}` is not antisymmetric: `{}` and `{}`",
                        component.id(),
                        label(a),
                        label(b)
                    )));
                }
                if !leq[b].is_subset(&leq[a]) {
                    let c = leq[b].difference(&leq[a]).next().unwrap();
                    return Err(Error::Argument(format!(
                        "order on `{}` is not transitive: `{}` ≤ `{}` ≤ `{}`",
                        component.id(),
                        label(a),
                        label(b),
                        label(c)
                    )));
                }
            }
        }
        Ok(OrderedComponent { component, leq })
    }

    /// As [`OrderedComponent::new`] after adding the diagonal.
    pub fn with_reflexive_pairs(
        component: Arc<Component>,
        pairs: &[(Behaviour, Behaviour)],
    ) -> Result<Self> {
        let mut all = pairs.to_vec();
        all.extend(component.behaviours().iter().map(|b| (b.clone(), b.clone())));
        Self::new(component, &all)
    }

    pub fn component(&self) -> &Arc<Component> {
        &self.component
    }

    pub fn leq(&self, a: u32, b: u32) -> bool {
        self.leq[a as usize].contains(b as usize)
    }

    /// The non-reflexive pairs of the order.
    pub fn strict_pairs(&self) -> Vec<(Behaviour, Behaviour)> {
        let label = |i: usize| self.component.behaviour(i as u32).clone();
        (0..self.leq.len())
            .flat_map(|a| {
                self.leq[a]
                    .ones()
                    .filter(move |&b| b != a)
                    .map(move |b| (label(a), label(b)))
            })
            .collect()
    }

    pub fn as_system(&self, limits: &Limits) -> Result<System> {
        components_as_system(std::slice::from_ref(&self.component), limits)
    }
}

/// `f ⊣σ h ⊢ρ c` with `c` an ordered observer.
#[derive(Debug, Clone)]
pub struct TimedImplementation {
    pub observer: OrderedComponent,
    pub sigma: ImplementationMap,
    pub rho: ImplementationMap,
}

impl TimedImplementation {
    pub fn new(
        observer: OrderedComponent,
        sigma: ImplementationMap,
        rho: ImplementationMap,
    ) -> Result<Self> {
        if sigma.source() != rho.source() {
            return Err(Error::Structural(
                "σ and ρ must be implementations with the same source".into(),
            ));
        }
        let target = rho.target();
        if target.components().len() != 1 || target.components()[0] != observer.component {
            return Err(Error::Structural(format!(
                "ρ must target the observer component `{}`",
                observer.component.id()
            )));
        }
        Ok(TimedImplementation {
            observer,
            sigma,
            rho,
        })
    }

    pub fn f(&self) -> &System {
        self.sigma.target()
    }

    pub fn h(&self) -> &System {
        self.sigma.source()
    }

    fn observed(&self, v: usize) -> u32 {
        self.rho.target().value(self.rho.apply(v), 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimedClause {
    /// The observer component is not already a component of `f`.
    ObserverOutsideSystem,
    /// `Comp(h) = Comp(f) ∪ {c}`.
    CompositionComponents,
    /// `σ` is an input implementation.
    SystemIsInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimedValidation {
    pub valid: bool,
    pub failed: Vec<TimedClause>,
}

pub fn validate_timed(t: &TimedImplementation) -> TimedValidation {
    let c = t.observer.component.id();
    let mut failed = Vec::new();
    if t.f().has_component(c) {
        failed.push(TimedClause::ObserverOutsideSystem);
    }
    let mut expected = t.f().component_ids();
    expected.insert(c.clone());
    if t.h().component_ids() != expected {
        failed.push(TimedClause::CompositionComponents);
    }
    if !is_input(&t.sigma) {
        failed.push(TimedClause::SystemIsInput);
    }
    TimedValidation {
        valid: failed.is_empty(),
        failed,
    }
}

/// A relation on `Beh(f)`: `leq[x]` contains `y` iff `x ≤ y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedOrder {
    system: System,
    leq: Vec<FixedBitSet>,
}

impl DerivedOrder {
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.leq[x].contains(y)
    }

    pub fn pairs(&self) -> Vec<(Behaviour, Behaviour)> {
        let s = &self.system;
        (0..self.leq.len())
            .flat_map(|x| {
                self.leq[x]
                    .ones()
                    .map(move |y| (s.behaviour(x).clone(), s.behaviour(y).clone()))
            })
            .collect()
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.leq.len()).all(|x| self.leq[x].ones().all(|y| self.leq[y].is_subset(&self.leq[x])))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.leq.len()).all(|x| self.leq[x].contains(x))
    }

    /// Classes of mutually related behaviours; behaviours related to
    /// nothing in both directions form singletons.
    pub fn preorder_classes(&self) -> Vec<Vec<Behaviour>> {
        let n = self.leq.len();
        let mut class = vec![usize::MAX; n];
        let mut out: Vec<Vec<Behaviour>> = Vec::new();
        for x in 0..n {
            if class[x] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![self.system.behaviour(x).clone()];
            class[x] = id;
            for y in x + 1..n {
                if class[y] == usize::MAX && self.leq(x, y) && self.leq(y, x) {
                    class[y] = id;
                    members.push(self.system.behaviour(y).clone());
                }
            }
            out.push(members);
        }
        out
    }
}

/// `x ≤ y` iff `ρ(v) ≤ ρ(w)` for all `v ∈ σ⁻¹(x)`, `w ∈ σ⁻¹(y)`.
pub fn derived_order(t: &TimedImplementation) -> DerivedOrder {
    let f = t.f();
    let mut fibers: Vec<Vec<u32>> = vec![Vec::new(); f.len()];
    for v in 0..t.h().len() {
        fibers[t.sigma.apply(v)].push(t.observed(v));
    }
    let leq = (0..f.len())
        .map(|x| {
            let mut row = FixedBitSet::with_capacity(f.len());
            for y in 0..f.len() {
                let all = fibers[x]
                    .iter()
                    .all(|&a| fibers[y].iter().all(|&b| t.observer.leq(a, b)));
                if all {
                    row.insert(y);
                }
            }
            row
        })
        .collect();
    DerivedOrder {
        system: f.clone(),
        leq,
    }
}

/// Behaviours `x` with no `y ≠ x` such that `y ≤ x` and not `x ≤ y`.
pub fn minimal_behaviours(t: &TimedImplementation) -> Vec<Behaviour> {
    let order = derived_order(t);
    let f = t.f();
    (0..f.len())
        .filter(|&x| (0..f.len()).all(|y| y == x || !order.leq(y, x) || order.leq(x, y)))
        .map(|x| f.behaviour(x).clone())
        .collect()
}
