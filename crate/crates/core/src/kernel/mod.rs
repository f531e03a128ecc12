//! Components, snapshots, systems, implementations and compositions.
//!
//! Systems are immutable and cheap to clone (the data sits behind an `Arc`).
//! Behaviours are addressed by their index in the system's ordered behaviour
//! set; that index order is the canonical order used for every witness
//! choice. Snapshot values are stored as indices into the owning
//! component's behaviour list, so two systems sharing a component must share
//! its declaration.

mod compose;
mod implementation;
mod system;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use compose::{
    compatible_pairs, factor_through_tensor, interface, is_free_composition, is_runnable,
    systems_equivalent, tensor, CompositionWitness, Factorization, FreeComposition, Tensor,
};
pub use implementation::{
    identity, implementation_exists, is_input, is_input_set, validate_implementation,
    validate_indices, CommutingViolation, ImplementationMap, Validation,
};
pub use system::{components_as_system, project, Projection, Snapshot, System};

/// Identifier of a basic component. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Argument("component identifiers must be non-empty".into()));
        }
        Ok(ComponentId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An opaque behaviour label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Behaviour(String);

impl Behaviour {
    pub fn new(label: impl Into<String>) -> Self {
        Behaviour(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Behaviour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Behaviour {
    fn from(s: &str) -> Self {
        Behaviour(s.to_owned())
    }
}

impl From<String> for Behaviour {
    fn from(s: String) -> Self {
        Behaviour(s)
    }
}

/// A basic component with its finite, ordered behaviour set.
#[derive(Debug, Clone)]
pub struct Component {
    id: ComponentId,
    behaviours: Vec<Behaviour>,
    index: HashMap<Behaviour, u32>,
}

impl PartialEq for Component {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.behaviours == other.behaviours
    }
}

impl Eq for Component {}

impl Component {
    pub fn new(id: ComponentId, behaviours: Vec<Behaviour>) -> Result<Self> {
        if behaviours.is_empty() {
            return Err(Error::Argument(format!("component `{id}` has no behaviours")));
        }
        if behaviours.len() > u32::MAX as usize {
            return Err(Error::Argument(format!("component `{id}` is too large")));
        }
        let mut index = HashMap::with_capacity(behaviours.len());
        for (i, b) in behaviours.iter().enumerate() {
            if index.insert(b.clone(), i as u32).is_some() {
                return Err(Error::Argument(format!(
                    "component `{id}` lists behaviour `{b}` twice"
                )));
            }
        }
        Ok(Component {
            id,
            behaviours,
            index,
        })
    }

    /// Shorthand for tests and fixtures.
    pub fn from_labels(id: &str, labels: &[&str]) -> Result<Arc<Self>> {
        Ok(Arc::new(Component::new(
            ComponentId::new(id)?,
            labels.iter().map(|&l| Behaviour::from(l)).collect(),
        )?))
    }

    pub fn id(&self) -> &ComponentId {
        &self.id
    }

    pub fn behaviours(&self) -> &[Behaviour] {
        &self.behaviours
    }

    pub fn len(&self) -> usize {
        self.behaviours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviours.is_empty()
    }

    pub fn position(&self, b: &Behaviour) -> Option<u32> {
        self.index.get(b).copied()
    }

    pub fn behaviour(&self, i: u32) -> &Behaviour {
        &self.behaviours[i as usize]
    }
}

/// Checks that components shared by two lists (sorted by id) are declared
/// identically.
pub(crate) fn check_shared_components(a: &[Arc<Component>], b: &[Arc<Component>]) -> Result<()> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].id.cmp(&b[j].id) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if !Arc::ptr_eq(&a[i], &b[j]) && a[i] != b[j] {
                    return Err(Error::ComponentMismatch(a[i].id.to_string()));
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ok(())
}
