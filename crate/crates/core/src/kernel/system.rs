use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{check_shared_components, Behaviour, Component, ComponentId};
use crate::label::tuple_label;
use crate::{Error, Limits, Result};

/// An assignment of one behaviour to each component of a fixed set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Snapshot(BTreeMap<ComponentId, Behaviour>);

impl Snapshot {
    pub fn new(entries: impl IntoIterator<Item = (ComponentId, Behaviour)>) -> Self {
        Snapshot(entries.into_iter().collect())
    }

    pub fn get(&self, c: &ComponentId) -> Option<&Behaviour> {
        self.0.get(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ComponentId, &Behaviour)> {
        self.0.iter()
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentId> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (c, b)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}→{b}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug)]
struct SystemData {
    name: String,
    components: Vec<Arc<Component>>,
    behaviours: Vec<Behaviour>,
    index: HashMap<Behaviour, usize>,
    /// `table[x][k]` is the index, within `components[k]`, of the local
    /// behaviour of behaviour `x` at component `k`.
    table: Vec<Box<[u32]>>,
}

/// A finite behaviour set together with its snapshot table.
#[derive(Debug, Clone)]
pub struct System(Arc<SystemData>);

impl PartialEq for System {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.name == other.0.name
                && self.0.components == other.0.components
                && self.0.behaviours == other.0.behaviours
                && self.0.table == other.0.table)
    }
}

impl Eq for System {}

impl System {
    /// Builds a system from labelled rows. Every row must assign exactly the
    /// given components, with values from their declared behaviour sets.
    pub fn new(
        name: impl Into<String>,
        components: Vec<Arc<Component>>,
        rows: Vec<(Behaviour, Snapshot)>,
    ) -> Result<Self> {
        let name = name.into();
        let components = sort_components(components)?;
        let mut behaviours = Vec::with_capacity(rows.len());
        let mut table = Vec::with_capacity(rows.len());
        for (b, snap) in rows {
            if snap.len() != components.len() {
                return Err(Error::Domain(format!(
                    "system `{name}`: snapshot of `{b}` must assign exactly {} components",
                    components.len()
                )));
            }
            let mut row = Vec::with_capacity(components.len());
            for comp in &components {
                let value = snap.get(comp.id()).ok_or_else(|| {
                    Error::Domain(format!(
                        "system `{name}`: snapshot of `{b}` does not assign component `{}`",
                        comp.id()
                    ))
                })?;
                let idx = comp.position(value).ok_or_else(|| {
                    Error::Domain(format!(
                        "system `{name}`: `{value}` is not a behaviour of component `{}`",
                        comp.id()
                    ))
                })?;
                row.push(idx);
            }
            behaviours.push(b);
            table.push(row.into_boxed_slice());
        }
        System::from_parts(name, components, behaviours, table)
    }

    pub(crate) fn from_parts(
        name: String,
        components: Vec<Arc<Component>>,
        behaviours: Vec<Behaviour>,
        table: Vec<Box<[u32]>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Argument(format!(
                "system `{name}` must have at least one component"
            )));
        }
        debug_assert!(components.windows(2).all(|w| w[0].id() < w[1].id()));
        debug_assert_eq!(behaviours.len(), table.len());
        let mut index = HashMap::with_capacity(behaviours.len());
        for (i, b) in behaviours.iter().enumerate() {
            if index.insert(b.clone(), i).is_some() {
                return Err(Error::Argument(format!(
                    "system `{name}` lists behaviour `{b}` twice"
                )));
            }
        }
        Ok(System(Arc::new(SystemData {
            name,
            components,
            behaviours,
            index,
            table,
        })))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    /// The same system under a different name.
    pub fn renamed(&self, name: impl Into<String>) -> System {
        System(Arc::new(SystemData {
            name: name.into(),
            components: self.0.components.clone(),
            behaviours: self.0.behaviours.clone(),
            index: self.0.index.clone(),
            table: self.0.table.clone(),
        }))
    }

    pub fn components(&self) -> &[Arc<Component>] {
        &self.0.components
    }

    pub fn component_ids(&self) -> BTreeSet<ComponentId> {
        self.0.components.iter().map(|c| c.id().clone()).collect()
    }

    pub fn behaviours(&self) -> &[Behaviour] {
        &self.0.behaviours
    }

    pub fn behaviour(&self, x: usize) -> &Behaviour {
        &self.0.behaviours[x]
    }

    pub fn len(&self) -> usize {
        self.0.behaviours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.behaviours.is_empty()
    }

    pub fn index_of(&self, b: &Behaviour) -> Option<usize> {
        self.0.index.get(b).copied()
    }

    pub fn require_index(&self, b: &Behaviour) -> Result<usize> {
        self.index_of(b).ok_or_else(|| {
            Error::Domain(format!("`{b}` is not a behaviour of system `{}`", self.name()))
        })
    }

    /// Column of component `c`, if it belongs to the system.
    pub fn column(&self, c: &ComponentId) -> Option<usize> {
        self.0
            .components
            .binary_search_by(|comp| comp.id().cmp(c))
            .ok()
    }

    pub fn has_component(&self, c: &ComponentId) -> bool {
        self.column(c).is_some()
    }

    pub(crate) fn columns(&self, ids: &BTreeSet<ComponentId>) -> Result<Vec<usize>> {
        ids.iter()
            .map(|c| {
                self.column(c).ok_or_else(|| {
                    Error::Domain(format!(
                        "component `{c}` is not a component of system `{}`",
                        self.name()
                    ))
                })
            })
            .collect()
    }

    /// Index of the local behaviour of `x` at column `col`.
    pub(crate) fn value(&self, x: usize, col: usize) -> u32 {
        self.0.table[x][col]
    }

    pub(crate) fn row(&self, x: usize) -> &[u32] {
        &self.0.table[x]
    }

    pub(crate) fn key(&self, x: usize, cols: &[usize]) -> Vec<u32> {
        let row = &self.0.table[x];
        cols.iter().map(|&c| row[c]).collect()
    }

    pub fn snapshot(&self, x: usize) -> Snapshot {
        Snapshot::new(
            self.0
                .components
                .iter()
                .zip(self.0.table[x].iter())
                .map(|(c, &v)| (c.id().clone(), c.behaviour(v).clone())),
        )
    }

    /// Local behaviour of `x` at component `c`.
    pub fn local(&self, x: usize, c: &ComponentId) -> Option<&Behaviour> {
        let col = self.column(c)?;
        Some(self.0.components[col].behaviour(self.0.table[x][col]))
    }

    /// The set of snapshots realized by the system, as raw rows.
    pub(crate) fn image_rows(&self) -> BTreeSet<&[u32]> {
        self.0.table.iter().map(|r| &r[..]).collect()
    }

    /// Stable identity of the shared data, used as a cache key.
    pub(crate) fn identity(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }
}

pub(crate) fn sort_components(mut components: Vec<Arc<Component>>) -> Result<Vec<Arc<Component>>> {
    components.sort_by(|a, b| a.id().cmp(b.id()));
    for w in components.windows(2) {
        if w[0].id() == w[1].id() {
            return Err(Error::Argument(format!(
                "component `{}` listed twice",
                w[0].id()
            )));
        }
    }
    Ok(components)
}

/// The projection `f_D` of a system onto a subset of its components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub components: BTreeSet<ComponentId>,
    pub snapshots: Vec<Snapshot>,
}

impl Projection {
    pub fn at(&self, x: usize) -> &Snapshot {
        &self.snapshots[x]
    }
}

pub fn project(f: &System, d: &BTreeSet<ComponentId>) -> Result<Projection> {
    if d.is_empty() {
        return Err(Error::Argument("projection onto an empty component set".into()));
    }
    let cols = f.columns(d)?;
    let snapshots = (0..f.len())
        .map(|x| {
            Snapshot::new(cols.iter().map(|&col| {
                let comp = &f.components()[col];
                (comp.id().clone(), comp.behaviour(f.value(x, col)).clone())
            }))
        })
        .collect();
    Ok(Projection {
        components: d.clone(),
        snapshots,
    })
}

/// The set of components `C` viewed as the identity system on `𝔹eh(C)`.
///
/// The product is enumerated lexicographically: the component with the
/// smallest identifier varies slowest. With a single component the labels
/// are the component's own labels, otherwise tuple labels.
pub fn components_as_system(components: &[Arc<Component>], limits: &Limits) -> Result<System> {
    if components.is_empty() {
        return Err(Error::Argument("empty component set".into()));
    }
    let mut comps = components.to_vec();
    comps.sort_by(|a, b| a.id().cmp(b.id()));
    comps.dedup_by(|a, b| a.id() == b.id());
    for w in components.iter() {
        let kept = comps.iter().find(|c| c.id() == w.id()).unwrap();
        check_shared_components(std::slice::from_ref(kept), std::slice::from_ref(w))?;
    }
    let count = comps
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    let name = format!(
        "{{{}}}",
        comps
            .iter()
            .map(|c| c.id().as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    limits.check(format!("product system {name}"), count)?;

    let count = count as usize;
    let mut behaviours = Vec::with_capacity(count);
    let mut table = Vec::with_capacity(count);
    let mut digits = vec![0u32; comps.len()];
    for _ in 0..count {
        let label = if comps.len() == 1 {
            comps[0].behaviour(digits[0]).as_str().to_owned()
        } else {
            let parts: Vec<&str> = comps
                .iter()
                .zip(&digits)
                .map(|(c, &d)| c.behaviour(d).as_str())
                .collect();
            tuple_label(&parts)
        };
        behaviours.push(Behaviour::new(label));
        table.push(digits.clone().into_boxed_slice());
        for k in (0..comps.len()).rev() {
            digits[k] += 1;
            if (digits[k] as usize) < comps[k].len() {
                break;
            }
            digits[k] = 0;
        }
    }
    System::from_parts(name, comps, behaviours, table)
}
