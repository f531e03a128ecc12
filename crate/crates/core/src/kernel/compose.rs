use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::implementation::ImplementationMap;
use super::system::{sort_components, System};
use super::{check_shared_components, Behaviour, ComponentId};
use crate::label::pair_label;
use crate::{Error, Limits, Result};

/// `Int(f, g) = Comp(f) ∩ Comp(g)`.
pub fn interface(f: &System, g: &System) -> BTreeSet<ComponentId> {
    f.component_ids()
        .intersection(&g.component_ids())
        .cloned()
        .collect()
}

pub fn is_runnable(f: &System) -> bool {
    !f.is_empty()
}

/// Behaviours of `g` grouped by their projection onto `cols`.
fn fibers<'a>(g: &'a System, cols: &[usize]) -> HashMap<Vec<u32>, Vec<usize>> {
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for y in 0..g.len() {
        groups.entry(g.key(y, cols)).or_default().push(y);
    }
    groups
}

/// All compatible pairs `(x, y)` in lexicographic order: pairs agreeing on
/// the interface, or every pair when the interface is empty.
pub fn compatible_pairs(f: &System, g: &System) -> Result<Vec<(usize, usize)>> {
    check_shared_components(f.components(), g.components())?;
    let int = interface(f, g);
    let fcols = f.columns(&int)?;
    let gcols = g.columns(&int)?;
    let groups = fibers(g, &gcols);
    let mut pairs = Vec::new();
    for x in 0..f.len() {
        if let Some(ys) = groups.get(&f.key(x, &fcols)) {
            pairs.extend(ys.iter().map(|&y| (x, y)));
        }
    }
    Ok(pairs)
}

fn count_compatible(f: &System, g: &System) -> Result<u128> {
    let int = interface(f, g);
    let fcols = f.columns(&int)?;
    let gcols = g.columns(&int)?;
    let mut sizes: HashMap<Vec<u32>, u128> = HashMap::new();
    for y in 0..g.len() {
        *sizes.entry(g.key(y, &gcols)).or_default() += 1;
    }
    Ok((0..f.len())
        .map(|x| sizes.get(&f.key(x, &fcols)).copied().unwrap_or(0))
        .sum())
}

/// The canonical free composition `f ⊗ g` with its two projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub system: System,
    pub left: ImplementationMap,
    pub right: ImplementationMap,
}

impl Tensor {
    /// The behaviour of `f ⊗ g` labelled by the pair `(x, y)`, if compatible.
    pub fn pair_index(&self, x: usize, y: usize) -> Option<usize> {
        let label = pair_label(
            self.left.target().behaviour(x).as_str(),
            self.right.target().behaviour(y).as_str(),
        );
        self.system.index_of(&Behaviour::new(label))
    }
}

/// Builds `f ⊗ g`. Behaviours are the compatible pairs labelled `(x,y)`; a
/// component of `f` takes its value from `x`, the remaining ones from `y`.
///
/// A tensor without compatible pairs is returned as a non-runnable system.
pub fn tensor(f: &System, g: &System, limits: &Limits) -> Result<Tensor> {
    check_shared_components(f.components(), g.components())?;
    let name = format!("{}⊗{}", f.name(), g.name());
    limits.check(format!("tensor {name}"), count_compatible(f, g)?)?;
    let pairs = compatible_pairs(f, g)?;

    let mut comps = f.components().to_vec();
    comps.extend(
        g.components()
            .iter()
            .filter(|c| !f.has_component(c.id()))
            .cloned(),
    );
    let comps = sort_components(comps)?;
    // For every column of the tensor: take it from f (Ok) or from g (Err).
    let sources: Vec<std::result::Result<usize, usize>> = comps
        .iter()
        .map(|c| match f.column(c.id()) {
            Some(col) => Ok(col),
            None => Err(g.column(c.id()).expect("component comes from g")),
        })
        .collect();

    let mut behaviours = Vec::with_capacity(pairs.len());
    let mut table = Vec::with_capacity(pairs.len());
    for &(x, y) in &pairs {
        behaviours.push(Behaviour::new(pair_label(
            f.behaviour(x).as_str(),
            g.behaviour(y).as_str(),
        )));
        let row: Vec<u32> = sources
            .iter()
            .map(|s| match *s {
                Ok(col) => f.value(x, col),
                Err(col) => g.value(y, col),
            })
            .collect();
        table.push(row.into_boxed_slice());
    }
    let system = System::from_parts(name, comps, behaviours, table)?;
    let left = ImplementationMap::trusted(
        system.clone(),
        f.clone(),
        pairs.iter().map(|&(x, _)| x).collect(),
    );
    let right = ImplementationMap::trusted(
        system.clone(),
        g.clone(),
        pairs.iter().map(|&(_, y)| y).collect(),
    );
    Ok(Tensor {
        system,
        left,
        right,
    })
}

/// An environment `f` implementing both `g₁` (via `left`) and `g₂` (via
/// `right`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionWitness {
    pub left: ImplementationMap,
    pub right: ImplementationMap,
}

impl CompositionWitness {
    pub fn new(left: ImplementationMap, right: ImplementationMap) -> Result<Self> {
        if left.source() != right.source() {
            return Err(Error::Structural(format!(
                "implementations have different sources `{}` and `{}`",
                left.source().name(),
                right.source().name()
            )));
        }
        Ok(CompositionWitness { left, right })
    }

    pub fn environment(&self) -> &System {
        self.left.source()
    }

    /// Errors unless the environment is a composition, i.e. its components
    /// are exactly `Comp(g₁) ∪ Comp(g₂)`.
    pub fn require_composition(&self) -> Result<()> {
        let mut union = self.left.target().component_ids();
        union.extend(self.right.target().component_ids());
        let env = self.environment().component_ids();
        if env != union {
            let extra: Vec<String> = env.difference(&union).map(ToString::to_string).collect();
            return Err(Error::Structural(format!(
                "`{}` is an environment for `{}` and `{}` but not a composition: \
                 components {} lie outside Comp({}) ∪ Comp({})",
                self.environment().name(),
                self.left.target().name(),
                self.right.target().name(),
                extra.join(", "),
                self.left.target().name(),
                self.right.target().name(),
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeComposition {
    pub free: bool,
    /// First compatible pair (canonical order) that no behaviour realizes.
    pub unrealized: Option<(Behaviour, Behaviour)>,
    pub compatible_pairs: usize,
}

/// A composition is free when every compatible pair is jointly realized.
pub fn is_free_composition(w: &CompositionWitness) -> Result<FreeComposition> {
    w.require_composition()?;
    let g1 = w.left.target();
    let g2 = w.right.target();
    let env = w.environment();
    let realized: std::collections::HashSet<(usize, usize)> = (0..env.len())
        .map(|z| (w.left.apply(z), w.right.apply(z)))
        .collect();
    let pairs = compatible_pairs(g1, g2)?;
    let unrealized = pairs
        .iter()
        .find(|p| !realized.contains(p))
        .map(|&(a, b)| (g1.behaviour(a).clone(), g2.behaviour(b).clone()));
    Ok(FreeComposition {
        free: unrealized.is_none(),
        unrealized,
        compatible_pairs: pairs.len(),
    })
}

/// `f ≡ g`: each implements the other. Both directions require equal
/// component sets, where the condition reduces to equal images.
pub fn systems_equivalent(f: &System, g: &System) -> bool {
    if f.component_ids() != g.component_ids() {
        return false;
    }
    if check_shared_components(f.components(), g.components()).is_err() {
        return false;
    }
    f.image_rows() == g.image_rows()
}

/// The map `z ↦ (σ₁(z), σ₂(z))` from a free composition into `g₁ ⊗ g₂`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub tensor: Tensor,
    pub map: Vec<usize>,
    pub surjective: bool,
}

pub fn factor_through_tensor(w: &CompositionWitness, limits: &Limits) -> Result<Factorization> {
    let free = is_free_composition(w)?;
    if !free.free {
        return Err(Error::Precondition(format!(
            "`{}` is not a free composition",
            w.environment().name()
        )));
    }
    let t = tensor(w.left.target(), w.right.target(), limits)?;
    let env = w.environment();
    let mut hit = vec![false; t.system.len()];
    let mut map = Vec::with_capacity(env.len());
    for z in 0..env.len() {
        let idx = t
            .pair_index(w.left.apply(z), w.right.apply(z))
            .expect("realized pairs are compatible");
        hit[idx] = true;
        map.push(idx);
    }
    Ok(Factorization {
        surjective: hit.iter().all(|&h| h),
        tensor: t,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{implementation_exists, Component, Snapshot};
    use std::sync::Arc;

    fn sys(name: &str, comps: &[Arc<Component>], rows: &[(&str, &[&str])]) -> System {
        let rows = rows
            .iter()
            .map(|(b, vals)| {
                (
                    Behaviour::from(*b),
                    Snapshot::new(
                        comps
                            .iter()
                            .zip(vals.iter())
                            .map(|(c, v)| (c.id().clone(), Behaviour::from(*v))),
                    ),
                )
            })
            .collect();
        System::new(name, comps.to_vec(), rows).unwrap()
    }

    fn comps() -> (Arc<Component>, Arc<Component>, Arc<Component>) {
        (
            Component::from_labels("a", &["0", "1"]).unwrap(),
            Component::from_labels("b", &["0", "1"]).unwrap(),
            Component::from_labels("c", &["0", "1"]).unwrap(),
        )
    }

    #[test]
    fn interface_is_intersection() {
        let (a, b, c) = comps();
        let f = sys("f", &[a.clone(), b.clone()], &[]);
        let g = sys("g", &[b.clone(), c.clone()], &[]);
        assert_eq!(interface(&f, &g), [b.id().clone()].into());
        let h = sys("h", &[c], &[]);
        let k = sys("k", &[a], &[]);
        assert!(interface(&h, &k).is_empty());
    }

    #[test]
    fn tensor_with_empty_interface_is_the_product() {
        let (a, _, c) = comps();
        let f = sys("f", &[a], &[("p", &["0"]), ("q", &["1"])]);
        let g = sys("g", &[c], &[("u", &["1"]), ("v", &["1"]), ("w", &["0"])]);
        let t = tensor(&f, &g, &Limits::default()).unwrap();
        assert_eq!(t.system.len(), 6);
        assert_eq!(t.system.behaviour(1).as_str(), "(p,v)");
        let w = CompositionWitness::new(t.left.clone(), t.right.clone()).unwrap();
        assert!(is_free_composition(&w).unwrap().free);
    }

    #[test]
    fn tensor_without_compatible_pairs_is_not_runnable() {
        let (a, b, _) = comps();
        let f = sys("f", &[a.clone(), b.clone()], &[("p", &["0", "0"])]);
        let g = sys("g", &[b], &[("u", &["1"])]);
        assert!(compatible_pairs(&f, &g).unwrap().is_empty());
        let t = tensor(&f, &g, &Limits::default()).unwrap();
        assert!(!is_runnable(&t.system));
    }

    #[test]
    fn deleting_a_realizer_breaks_freeness() {
        let (a, b, c) = comps();
        let f = sys("f", &[a.clone(), b.clone()], &[("p", &["0", "0"]), ("q", &["1", "0"])]);
        let g = sys("g", &[b.clone(), c.clone()], &[("u", &["0", "0"]), ("v", &["0", "1"])]);
        let t = tensor(&f, &g, &Limits::default()).unwrap();
        assert_eq!(t.system.len(), 4);
        // Drop the behaviour realizing (q,u).
        let keep: Vec<usize> = (0..t.system.len()).filter(|&z| z != 2).collect();
        let rows = keep
            .iter()
            .map(|&z| (t.system.behaviour(z).clone(), t.system.snapshot(z)))
            .collect();
        let h = System::new("h", t.system.components().to_vec(), rows).unwrap();
        let w = CompositionWitness::new(
            implementation_exists(&h, &f).unwrap(),
            implementation_exists(&h, &g).unwrap(),
        )
        .unwrap();
        let verdict = is_free_composition(&w).unwrap();
        assert!(!verdict.free);
        assert_eq!(
            verdict.unrealized,
            Some((Behaviour::from("q"), Behaviour::from("u")))
        );
        assert!(matches!(
            factor_through_tensor(&w, &Limits::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn environment_that_is_not_a_composition() {
        let (a, b, c) = comps();
        let f = sys("f", &[a.clone(), b.clone(), c.clone()], &[("p", &["0", "0", "0"])]);
        let g1 = sys("g1", &[a], &[("u", &["0"])]);
        let g2 = sys("g2", &[b], &[("v", &["0"])]);
        let w = CompositionWitness::new(
            implementation_exists(&f, &g1).unwrap(),
            implementation_exists(&f, &g2).unwrap(),
        )
        .unwrap();
        match is_free_composition(&w) {
            Err(Error::Structural(msg)) => assert!(msg.contains("not a composition")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tensor_is_symmetric_up_to_equivalence() {
        let (a, b, c) = comps();
        let f = sys("f", &[a.clone(), b.clone()], &[("p", &["0", "0"]), ("q", &["1", "1"])]);
        let g = sys("g", &[b.clone(), c.clone()], &[("u", &["0", "1"]), ("v", &["1", "1"])]);
        let lim = Limits::default();
        let fg = tensor(&f, &g, &lim).unwrap();
        let gf = tensor(&g, &f, &lim).unwrap();
        assert!(systems_equivalent(&fg.system, &gf.system));
        assert!(implementation_exists(&fg.system, &gf.system).is_some());
        assert!(!systems_equivalent(&f, &g));
    }

    #[test]
    fn tensor_capacity() {
        let (a, _, c) = comps();
        let f = sys("f", &[a], &[("p", &["0"]), ("q", &["1"])]);
        let g = sys("g", &[c], &[("u", &["1"]), ("v", &["1"])]);
        let small = Limits {
            max_behaviours: 3,
            ..Limits::default()
        };
        assert!(matches!(tensor(&f, &g, &small), Err(Error::Capacity { count: 4, .. })));
    }
}
