//! Seeded generators and naive oracles shared by the integration suites.
//!
//! The oracles work on labelled snapshots only and never call the library's
//! evaluator, closure or entanglement code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use bsm::guarantees::{BehaviourRelation, CapInstance};
use bsm::kernel::{
    implementation_exists, validate_indices, Behaviour, Component, ComponentId, ImplementationMap,
    Snapshot, System, Validation,
};
use bsm::logic::{Formula, Valuation, Variable};
use bsm::Limits;
use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn component(name: &str, size: usize) -> Arc<Component> {
    let labels: Vec<String> = (0..size).map(|i| format!("{name}{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Component::from_labels(name, &refs).unwrap()
}

pub fn system_from_rows(name: &str, comps: &[Arc<Component>], rows: &[Vec<u32>]) -> System {
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                Behaviour::new(format!("{name}{i}")),
                Snapshot::new(
                    comps
                        .iter()
                        .zip(r)
                        .map(|(c, &v)| (c.id().clone(), c.behaviour(v).clone())),
                ),
            )
        })
        .collect();
    System::new(name, comps.to_vec(), rows).unwrap()
}

pub fn random_rows(rng: &mut Rng8, comps: &[Arc<Component>], n: usize) -> Vec<Vec<u32>> {
    (0..n)
        .map(|_| comps.iter().map(|c| rng.gen_range(0..c.len() as u32)).collect())
        .collect()
}

pub fn random_system(rng: &mut Rng8, name: &str, comps: &[Arc<Component>], n: usize) -> System {
    let rows = random_rows(rng, comps, n);
    system_from_rows(name, comps, &rows)
}

/// Two variables `p`, `q` per component with random extensions.
pub fn random_valuation(rng: &mut Rng8, comps: &[Arc<Component>], per_comp: usize) -> Valuation {
    let mut v = Valuation::new();
    for c in comps {
        for k in 0..per_comp {
            let ext: Vec<Behaviour> = c
                .behaviours()
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            v.insert(c, ["p", "q"][k], &ext).unwrap();
        }
    }
    v
}

/// Random formula over `vars` with connectives ¬ ∧ ∨ → and, if `boxed`, □.
pub fn random_formula(rng: &mut Rng8, vars: &[Variable], depth: usize, boxed: bool) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..8) {
            0 => Formula::Top,
            1 => Formula::not(Formula::Top),
            _ => Formula::atom(vars.choose(rng).unwrap().clone()),
        };
    }
    let sub = |rng: &mut Rng8| random_formula(rng, vars, depth - 1, boxed);
    match rng.gen_range(0..if boxed { 6 } else { 5 }) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::not(sub(rng)),
        _ => Formula::necessity(sub(rng)),
    }
}

pub fn vars_over(v: &Valuation, comps: &BTreeSet<ComponentId>) -> Vec<Variable> {
    v.variables_over(comps).into_iter().collect()
}

/// A system over `comps ⊆ Comp(f)` realizing every projection of `f`, with
/// `extra` additional random rows and duplicated rows, and a random valid
/// implementation of it in `f`.
pub fn random_implementation(
    rng: &mut Rng8,
    f: &System,
    name: &str,
    comps: &[Arc<Component>],
    extra: usize,
) -> ImplementationMap {
    let proj = |x: usize| -> Vec<u32> {
        let s = f.snapshot(x);
        comps
            .iter()
            .map(|c| c.position(s.get(c.id()).unwrap()).unwrap())
            .collect()
    };
    let mut rows: Vec<Vec<u32>> = (0..f.len()).map(proj).collect();
    rows.sort();
    rows.dedup();
    for _ in 0..extra {
        if rng.gen_bool(0.5) && !rows.is_empty() {
            let r = rows.choose(rng).unwrap().clone();
            rows.push(r);
        } else {
            rows.extend(random_rows(rng, comps, 1));
        }
    }
    rows.shuffle(rng);
    let g = system_from_rows(name, comps, &rows);
    let map: Vec<usize> = (0..f.len())
        .map(|x| {
            let want = proj(x);
            let candidates: Vec<usize> = (0..g.len())
                .filter(|&y| {
                    let s = g.snapshot(y);
                    comps
                        .iter()
                        .zip(&want)
                        .all(|(c, &v)| s.get(c.id()) == Some(c.behaviour(v)))
                })
                .collect();
            *candidates.choose(rng).unwrap()
        })
        .collect();
    match validate_indices(f, &g, map).unwrap() {
        Validation::Valid(m) => m,
        Validation::Violated(v) => panic!("generator produced an invalid map: {v:?}"),
    }
}

pub fn random_subset(rng: &mut Rng8, n: usize, p: f64) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    for i in 0..n {
        if rng.gen_bool(p) {
            s.insert(i);
        }
    }
    s
}

pub fn random_relation(rng: &mut Rng8, f: &System, p: f64) -> BehaviourRelation {
    let n = f.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    BehaviourRelation::from_indices(f, pairs).unwrap()
}

pub fn limits() -> Limits {
    Limits::default()
}

// ---------------------------------------------------------------------------
// naive evaluation

pub type Snap = BTreeMap<String, String>;

pub fn snap(f: &System, x: usize) -> Snap {
    f.snapshot(x)
        .iter()
        .map(|(c, b)| (c.to_string(), b.to_string()))
        .collect()
}

pub fn comps(f: &System) -> BTreeSet<String> {
    f.component_ids().iter().map(ToString::to_string).collect()
}

fn image(f: &System) -> BTreeSet<Snap> {
    (0..f.len()).map(|x| snap(f, x)).collect()
}

/// `f ≡ f₁ ⊗ f₂` by merging every interface-compatible pair of snapshots.
pub fn decomposes(f: &System, f1: &System, f2: &System) -> bool {
    let mut union = comps(f1);
    union.extend(comps(f2));
    if union != comps(f) {
        return false;
    }
    let mut merged = BTreeSet::new();
    for a in image(f1) {
        for b in image(f2) {
            if a.iter().all(|(c, v)| b.get(c).map_or(true, |w| w == v)) {
                let mut m = a.clone();
                m.extend(b.clone());
                merged.insert(m);
            }
        }
    }
    merged == image(f)
}

/// The components of the atoms outside every structural connective.
fn local_components(phi: &Formula, out: &mut BTreeSet<String>) {
    match phi {
        Formula::Atom(v) => {
            out.insert(v.component.to_string());
        }
        Formula::Not(a) | Formula::Necessity(a) => local_components(a, out),
        Formula::And(a, b) => {
            local_components(a, out);
            local_components(b, out);
        }
        _ => {}
    }
}

pub fn defined(f: &System, phi: &Formula) -> bool {
    let mut cs = BTreeSet::new();
    local_components(phi, &mut cs);
    cs.is_subset(&comps(f))
}

/// Input condition on an interface, by counting realized projections.
fn is_input_naive(f: &System, int: &BTreeSet<String>) -> bool {
    if int.is_empty() {
        return f.len() > 0;
    }
    let realized: BTreeSet<Vec<String>> = (0..f.len())
        .map(|x| {
            let s = snap(f, x);
            int.iter().map(|c| s[c].clone()).collect()
        })
        .collect();
    let product: usize = f
        .components()
        .iter()
        .filter(|c| int.contains(c.id().as_str()))
        .map(|c| c.len())
        .product();
    realized.len() == product
}

pub struct Naive<'a> {
    pub valuation: &'a Valuation,
    pub universe: &'a [System],
}

impl Naive<'_> {
    fn atom(&self, s: &Snap, v: &Variable) -> bool {
        let ext = self.valuation.extension_labels(v).expect("declared variable");
        let local = &s[v.component.as_str()];
        ext.iter().any(|b| b.as_str() == local)
    }

    /// Truth at the behaviour of `f` with snapshot `s`.
    pub fn holds_at(&self, f: &System, s: &Snap, phi: &Formula) -> bool {
        match phi {
            Formula::Top => true,
            Formula::Atom(v) => self.atom(s, v),
            Formula::Not(a) => !self.holds_at(f, s, a),
            Formula::And(a, b) => self.holds_at(f, s, a) && self.holds_at(f, s, b),
            Formula::Necessity(a) => (0..f.len()).all(|y| self.holds_at(f, &snap(f, y), a)),
            Formula::Star(a, b) => self.star(f, s, a, b, 0),
            Formula::DirStar(a, b) => self.star(f, s, a, b, 1),
            Formula::DisjStar(a, b) => self.star(f, s, a, b, 2),
            Formula::Wand(a, b) => self.wand(f, s, a, b, false),
            Formula::DirWand(a, b) => self.wand(f, s, a, b, true),
        }
    }

    pub fn holds(&self, f: &System, x: usize, phi: &Formula) -> bool {
        self.holds_at(f, &snap(f, x), phi)
    }

    pub fn valid(&self, f: &System, phi: &Formula) -> bool {
        (0..f.len()).all(|x| self.holds(f, x, phi))
    }

    fn restrict(s: &Snap, cs: &BTreeSet<String>) -> Snap {
        s.iter()
            .filter(|(c, _)| cs.contains(*c))
            .map(|(c, v)| (c.clone(), v.clone()))
            .collect()
    }

    fn star(&self, f: &System, s: &Snap, a: &Formula, b: &Formula, kind: u8) -> bool {
        self.universe.iter().any(|f1| {
            defined(f1, a)
                && self.universe.iter().any(|f2| {
                    if !defined(f2, b) || !decomposes(f, f1, f2) {
                        return false;
                    }
                    let int: BTreeSet<String> = comps(f1).intersection(&comps(f2)).cloned().collect();
                    let ok = match kind {
                        0 => true,
                        1 => is_input_naive(f2, &int),
                        _ => int.is_empty(),
                    };
                    let (s1, s2) = (Self::restrict(s, &comps(f1)), Self::restrict(s, &comps(f2)));
                    ok && (0..f1.len()).any(|y| snap(f1, y) == s1 && self.holds(f1, y, a))
                        && (0..f2.len()).any(|y| snap(f2, y) == s2 && self.holds(f2, y, b))
                })
        })
    }

    fn wand(&self, f: &System, s: &Snap, a: &Formula, b: &Formula, directed: bool) -> bool {
        self.universe.iter().all(|g| {
            if !defined(g, a) {
                return true;
            }
            let int: BTreeSet<String> = comps(f).intersection(&comps(g)).cloned().collect();
            if directed && !is_input_naive(g, &int) {
                return true;
            }
            (0..g.len()).all(|y| {
                let t = snap(g, y);
                let compatible = int.iter().all(|c| s[c] == t[c]);
                if !compatible || !self.holds(g, y, a) {
                    return true;
                }
                let mut merged = s.clone();
                merged.extend(t);
                // the tensor of f and g as the evaluation context of ψ
                let fg = bsm::kernel::tensor(f, g, &limits()).unwrap().system;
                defined(&fg, b) && self.holds_at(&fg, &merged, b)
            })
        })
    }
}

// ---------------------------------------------------------------------------
// naive CAP

/// The guarantee groups (consistency, availability, partition tolerance)
/// broken by the subset `x`, under strong `R` and weak `S`.
pub fn cap_groups_naive(inst: &CapInstance, x: &[usize]) -> [bool; 3] {
    let inside = |b: usize| x.contains(&b);
    let consistent = x.iter().all(|&b| inst.consistent.contains(b));
    let strong = x.iter().all(|&a| inst.r.successors(a).iter().all(|&b| inside(b)));
    let weak = x
        .iter()
        .all(|&a| inst.s.successors(a).is_empty() || inst.s.successors(a).iter().any(|&b| inside(b)));
    let c1: BTreeSet<usize> = x.iter().map(|&b| inst.sigma1.apply(b)).collect();
    let c2: BTreeSet<usize> = x.iter().map(|&b| inst.sigma2.apply(b)).collect();
    let joint: BTreeSet<(usize, usize)> = x
        .iter()
        .map(|&b| (inst.sigma1.apply(b), inst.sigma2.apply(b)))
        .collect();
    let pt = c1.iter().all(|a| c2.iter().all(|b| joint.contains(&(*a, *b))));
    [consistent, strong && weak, pt]
}

/// Non-empty subsets satisfying all three groups.
pub fn satisfying_subsets_naive(inst: &CapInstance) -> Vec<Vec<usize>> {
    let n = inst.f.len();
    (1u64..(1 << n))
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|x| cap_groups_naive(inst, x).iter().all(|&g| g))
        .collect()
}

/// The entanglement condition, read literally from its quantifiers.
pub fn entangled_naive(inst: &CapInstance) -> bool {
    let n = inst.f.len();
    let (s1, s2) = (&inst.sigma1, &inst.sigma2);
    (0..n).all(|w| {
        inst.r.successors(w).iter().any(|&x| {
            !inst.s.successors(x).is_empty()
                && inst.s.successors(x).iter().all(|&v| {
                    (0..n).all(|y| {
                        (0..n).all(|z| {
                            let premise = s1.apply(y) == s1.apply(v)
                                && s1.apply(z) == s1.apply(v)
                                && s2.apply(y) == s2.apply(w)
                                && s2.apply(z) == s2.apply(x);
                            !premise || !inst.consistent.contains(y) || !inst.consistent.contains(z)
                        })
                    })
                })
        })
    })
}

/// A random CAP instance on `f` with partition maps onto systems over each
/// component.
pub fn random_cap_instance(rng: &mut Rng8, f: &System) -> CapInstance {
    let cs = f.components().to_vec();
    let s1 = { let k = rng.gen_range(0..2); random_implementation(rng, f, "g1", &cs[..1], k) };
    let s2 = { let k = rng.gen_range(0..2); random_implementation(rng, f, "g2", &cs[1..], k) };
    let n = f.len();
    let c = { let k = rng.gen_range(0.0..0.6); random_subset(rng, n, k) };
    let r = { let k = rng.gen_range(0.2..0.9); random_relation(rng, f, k) };
    let s = { let k = rng.gen_range(0.2..0.9); random_relation(rng, f, k) };
    CapInstance::new(s1, s2, c, r, s).unwrap()
}

pub fn derive(f: &System, g: &System) -> ImplementationMap {
    implementation_exists(f, g).expect("implementation exists")
}

/// The tensor built directly from compatible snapshot pairs, labelled `x|y`.
pub fn naive_tensor(f: &System, g: &System) -> System {
    let mut comps: Vec<Arc<Component>> = f.components().to_vec();
    for c in g.components() {
        if !comps.iter().any(|d| d.id() == c.id()) {
            comps.push(c.clone());
        }
    }
    let mut rows = Vec::new();
    for x in 0..f.len() {
        for y in 0..g.len() {
            let (a, b) = (f.snapshot(x), g.snapshot(y));
            if a.iter().all(|(c, v)| b.get(c).map_or(true, |w| w == v)) {
                let merged = Snapshot::new(a.iter().chain(b.iter()).map(|(c, v)| (c.clone(), v.clone())));
                rows.push((Behaviour::new(format!("{}|{}", f.behaviour(x), g.behaviour(y))), merged));
            }
        }
    }
    System::new(format!("{}*{}", f.name(), g.name()), comps, rows).unwrap()
}

/// The set of variables true at each behaviour, by the naive evaluator.
pub fn naive_types(f: &System, v: &Valuation, vars: &[Variable]) -> Vec<BTreeSet<Variable>> {
    let n = Naive { valuation: v, universe: &[] };
    (0..f.len())
        .map(|x| {
            vars.iter()
                .filter(|p| n.holds(f, x, &Formula::atom((*p).clone())))
                .cloned()
                .collect()
        })
        .collect()
}

/// `⋀ D ∧ ⋀ ¬(vars ∖ D)`, built here rather than by the library.
pub fn char_formula(d: &BTreeSet<Variable>, vars: &[Variable]) -> Formula {
    vars.iter()
        .map(|p| {
            let a = Formula::atom(p.clone());
            if d.contains(p) {
                a
            } else {
                Formula::not(a)
            }
        })
        .reduce(Formula::and)
        .unwrap_or(Formula::Top)
}

/// Disjunction of the characteristic formulas of the given types; `¬⊤`
/// when there are none.
pub fn types_disjunction<'a>(
    types: impl IntoIterator<Item = &'a BTreeSet<Variable>>,
    vars: &[Variable],
) -> Formula {
    let set: BTreeSet<&BTreeSet<Variable>> = types.into_iter().collect();
    set.into_iter()
        .map(|d| char_formula(d, vars))
        .reduce(Formula::or)
        .unwrap_or_else(|| Formula::not(Formula::Top))
}
