use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::formula::Variable;
use crate::kernel::{Behaviour, Component, ComponentId};
use crate::{Error, Result};

/// Assigns every declared variable `p ∈ Var(c)` a subset of `𝔹eh(c)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    vars: BTreeMap<Variable, (Arc<Component>, FixedBitSet)>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    /// Declares `component::name` with the given extension.
    pub fn insert(
        &mut self,
        component: &Arc<Component>,
        name: &str,
        values: &[Behaviour],
    ) -> Result<Variable> {
        let var = Variable::new(component.id().as_str(), name)?;
        if let Some((c, _)) = self.vars.values().find(|(c, _)| c.id() == component.id()) {
            if c != component {
                return Err(Error::ComponentMismatch(component.id().to_string()));
            }
        }
        let mut set = FixedBitSet::with_capacity(component.len());
        for v in values {
            let i = component.position(v).ok_or_else(|| {
                Error::Domain(format!(
                    "`{v}` is not a behaviour of component `{}` (variable {var})",
                    component.id()
                ))
            })?;
            set.insert(i as usize);
        }
        self.vars.insert(var.clone(), (component.clone(), set));
        Ok(var)
    }

    pub fn insert_indices(
        &mut self,
        component: &Arc<Component>,
        name: &str,
        values: &FixedBitSet,
    ) -> Result<Variable> {
        let labels: Vec<Behaviour> = values
            .ones()
            .map(|i| {
                if i < component.len() {
                    Ok(component.behaviour(i as u32).clone())
                } else {
                    Err(Error::Domain(format!("index {i} outside 𝔹eh({})", component.id())))
                }
            })
            .collect::<Result<_>>()?;
        self.insert(component, name, &labels)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.vars.keys()
    }

    /// `V(C)`: the declared variables over components in `comps`.
    pub fn variables_over(&self, comps: &BTreeSet<ComponentId>) -> BTreeSet<Variable> {
        self.vars
            .keys()
            .filter(|v| comps.contains(&v.component))
            .cloned()
            .collect()
    }

    pub fn component(&self, v: &Variable) -> Option<&Arc<Component>> {
        self.vars.get(v).map(|(c, _)| c)
    }

    pub fn extension(&self, v: &Variable) -> Option<&FixedBitSet> {
        self.vars.get(v).map(|(_, s)| s)
    }

    /// Labels of `V(p)` in the component's declared order.
    pub fn extension_labels(&self, v: &Variable) -> Option<Vec<Behaviour>> {
        self.vars.get(v).map(|(c, s)| {
            s.ones()
                .map(|i| c.behaviour(i as u32).clone())
                .collect()
        })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}
