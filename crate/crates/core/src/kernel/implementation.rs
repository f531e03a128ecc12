use std::collections::{BTreeSet, HashMap, HashSet};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::system::System;
use super::{check_shared_components, Behaviour, ComponentId, Snapshot};
use crate::{Error, Result};

/// A validated implementation `σ : Beh(f) → Beh(g)` of `g` in `f`.
///
/// Only obtainable through validation, so the commuting condition
/// `f_{Comp(g)} = g ∘ σ` always holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplementationMap {
    source: System,
    target: System,
    map: Vec<usize>,
}

impl ImplementationMap {
    pub fn source(&self) -> &System {
        &self.source
    }

    pub fn target(&self) -> &System {
        &self.target
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// `{σ(x) | x ∈ Beh(f)}` as a subset of `Beh(g)`.
    pub fn image(&self) -> FixedBitSet {
        let mut image = FixedBitSet::with_capacity(self.target.len());
        for &y in &self.map {
            image.insert(y);
        }
        image
    }

    pub fn pairs(&self) -> Vec<(Behaviour, Behaviour)> {
        self.map
            .iter()
            .enumerate()
            .map(|(x, &y)| (self.source.behaviour(x).clone(), self.target.behaviour(y).clone()))
            .collect()
    }

    /// Used where validity holds by construction (tensor projections and
    /// the like); still checked in debug builds.
    pub(crate) fn trusted(source: System, target: System, map: Vec<usize>) -> Self {
        debug_assert!(matches!(
            check_commuting(&source, &target, &map),
            Ok(None)
        ));
        ImplementationMap {
            source,
            target,
            map,
        }
    }
}

/// First behaviour (in canonical order) at which the commuting condition
/// fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutingViolation {
    pub behaviour: Behaviour,
    pub image: Behaviour,
    /// `f_{Comp(g)}(x)`
    pub expected: Snapshot,
    /// `g(σ(x))`
    pub found: Snapshot,
}

impl std::fmt::Display for CommutingViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "`{}` ↦ `{}` projects to {} but the image has snapshot {}",
            self.behaviour, self.image, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validation {
    Valid(ImplementationMap),
    Violated(CommutingViolation),
}

impl Validation {
    pub fn into_result(self) -> Result<ImplementationMap> {
        match self {
            Validation::Valid(m) => Ok(m),
            Validation::Violated(v) => Err(Error::Structural(format!(
                "not an implementation: `{}` ↦ `{}` has {} but the target shows {}",
                v.behaviour, v.image, v.expected, v.found
            ))),
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid(_))
    }
}

fn check_inclusion(f: &System, g: &System) -> Result<Vec<usize>> {
    check_shared_components(f.components(), g.components())?;
    let missing: Vec<String> = g
        .component_ids()
        .iter()
        .filter(|c| !f.has_component(c))
        .map(ToString::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Structural(format!(
            "Comp({}) is not included in Comp({}): missing {}",
            g.name(),
            f.name(),
            missing.join(", ")
        )));
    }
    f.columns(&g.component_ids())
}

fn check_commuting(f: &System, g: &System, map: &[usize]) -> Result<Option<CommutingViolation>> {
    let cols = check_inclusion(f, g)?;
    for (x, &y) in map.iter().enumerate() {
        if f.key(x, &cols).as_slice() != g.row(y) {
            let expected = Snapshot::new(cols.iter().map(|&col| {
                let comp = &f.components()[col];
                (comp.id().clone(), comp.behaviour(f.value(x, col)).clone())
            }));
            return Ok(Some(CommutingViolation {
                behaviour: f.behaviour(x).clone(),
                image: g.behaviour(y).clone(),
                expected,
                found: g.snapshot(y),
            }));
        }
    }
    Ok(None)
}

/// Validates an extensional map given by labels.
pub fn validate_implementation(
    f: &System,
    g: &System,
    map: &[(Behaviour, Behaviour)],
) -> Result<Validation> {
    let mut indices: Vec<Option<usize>> = vec![None; f.len()];
    for (x, y) in map {
        let xi = f.require_index(x)?;
        let yi = g.require_index(y)?;
        if indices[xi].replace(yi).is_some_and(|prev| prev != yi) {
            return Err(Error::Domain(format!("map assigns `{x}` twice")));
        }
    }
    let indices = indices
        .into_iter()
        .enumerate()
        .map(|(x, y)| {
            y.ok_or_else(|| {
                Error::Domain(format!("map is not total: `{}` has no image", f.behaviour(x)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    validate_indices(f, g, indices)
}

pub fn validate_indices(f: &System, g: &System, map: Vec<usize>) -> Result<Validation> {
    if map.len() != f.len() {
        return Err(Error::Domain(format!(
            "map has {} entries but `{}` has {} behaviours",
            map.len(),
            f.name(),
            f.len()
        )));
    }
    if let Some(&y) = map.iter().find(|&&y| y >= g.len()) {
        return Err(Error::Domain(format!("index {y} is outside Beh({})", g.name())));
    }
    Ok(match check_commuting(f, g, &map)? {
        None => Validation::Valid(ImplementationMap {
            source: f.clone(),
            target: g.clone(),
            map,
        }),
        Some(v) => Validation::Violated(v),
    })
}

pub fn identity(f: &System) -> ImplementationMap {
    ImplementationMap::trusted(f.clone(), f.clone(), (0..f.len()).collect())
}

/// Decides whether `f` implements `g`, returning the canonical witness.
///
/// The implementation can be chosen independently at every behaviour, so it
/// exists iff every snapshot `f_{Comp(g)}(x)` is realized by `g`; the
/// smallest realizing behaviour is picked.
pub fn implementation_exists(f: &System, g: &System) -> Option<ImplementationMap> {
    let cols = check_inclusion(f, g).ok()?;
    let mut first: HashMap<&[u32], usize> = HashMap::with_capacity(g.len());
    for y in 0..g.len() {
        first.entry(g.row(y)).or_insert(y);
    }
    let map = (0..f.len())
        .map(|x| first.get(f.key(x, &cols).as_slice()).copied())
        .collect::<Option<Vec<_>>>()?;
    Some(ImplementationMap::trusted(f.clone(), g.clone(), map))
}

/// An implementation is an input implementation when it is surjective.
pub fn is_input(sigma: &ImplementationMap) -> bool {
    let image = sigma.image();
    image.count_ones(..) == sigma.target().len()
}

/// Whether `E ⊆ Comp(f)` is an input of `f`: the projection `f_E` reaches
/// every snapshot of the full product `𝔹eh(E)`.
///
/// For `E = ∅` the product has exactly one (empty) snapshot, so the empty set
/// is an input iff `f` is runnable.
pub fn is_input_set(f: &System, e: &BTreeSet<ComponentId>) -> Result<bool> {
    if e.is_empty() {
        return Ok(!f.is_empty());
    }
    let cols = f.columns(e)?;
    let product = cols
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(f.components()[c].len() as u128))
        .unwrap_or(u128::MAX);
    if product > f.len() as u128 {
        return Ok(false);
    }
    let realized: HashSet<Vec<u32>> = (0..f.len()).map(|x| f.key(x, &cols)).collect();
    Ok(realized.len() as u128 == product)
}
