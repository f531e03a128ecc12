use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::formula::{Formula, Variable};
use super::valuation::Valuation;
use crate::kernel::{
    interface, is_input_set, systems_equivalent, tensor, Behaviour, ComponentId, System, Tensor,
};
use crate::{Error, Limits, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedTensor {
    pub left: String,
    pub right: String,
    pub count: u128,
}

/// The finite family of systems the structural connectives quantify over.
///
/// The declared systems are closed `depth` times under tensors of ordered
/// pairs of distinct members. A tensor equivalent to an existing member is
/// not added: satisfaction only depends on a system's component set, its
/// image and the snapshot at the behaviour, so equivalent copies change no
/// verdict. Tensors over the behaviour cap are skipped and listed.
#[derive(Debug, Clone)]
pub struct Universe {
    members: Vec<System>,
    declared: usize,
    depth: usize,
    skipped: Vec<SkippedTensor>,
    limits: Limits,
}

type Signature = (BTreeSet<ComponentId>, BTreeSet<Vec<u32>>);

fn signature(f: &System) -> Signature {
    (
        f.component_ids(),
        f.image_rows().into_iter().map(<[u32]>::to_vec).collect(),
    )
}

impl Universe {
    pub fn new(systems: Vec<System>, depth: usize, limits: &Limits) -> Result<Self> {
        let declared = systems.len();
        let mut members = systems;
        let mut seen: HashSet<Signature> = members.iter().map(signature).collect();
        let mut skipped = Vec::new();
        for _ in 0..depth {
            let current = members.clone();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for (j, b) in current.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let t = match tensor(a, b, limits) {
                        Ok(t) => t,
                        Err(Error::Capacity { count, .. }) => {
                            let entry = SkippedTensor {
                                left: a.name().to_owned(),
                                right: b.name().to_owned(),
                                count,
                            };
                            if !skipped.contains(&entry) {
                                skipped.push(entry);
                            }
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    if seen.insert(signature(&t.system)) {
                        members.push(t.system);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        Ok(Universe {
            members,
            declared,
            depth,
            skipped,
            limits: *limits,
        })
    }

    pub fn members(&self) -> &[System] {
        &self.members
    }

    /// Number of members supplied by the caller (they come first).
    pub fn declared(&self) -> usize {
        self.declared
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn skipped(&self) -> &[SkippedTensor] {
        &self.skipped
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn member_names(&self) -> Vec<String> {
        self.members.iter().map(|m| m.name().to_owned()).collect()
    }
}

type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StarKind {
    Plain,
    Directed,
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Top,
    Atom(Variable),
    Not(NodeId),
    And(NodeId, NodeId),
    Necessity(NodeId),
    Star(StarKind, NodeId, NodeId),
    Wand(bool, NodeId, NodeId),
}

struct NodeInfo {
    node: Node,
    /// Atoms evaluated at the system itself, i.e. outside every structural
    /// connective. The formula is defined at `f` iff they lie in `Comp(f)`.
    local_atoms: BTreeSet<Variable>,
}

/// Truth-vector evaluator with memoization per (system, subformula).
///
/// An evaluator is tied to one valuation and one universe and is not shared
/// between threads. Systems it has seen (including tensors it built) are kept
/// alive so cache keys stay unique.
pub struct Evaluator<'a> {
    valuation: &'a Valuation,
    universe: Option<&'a Universe>,
    limits: Limits,
    nodes: Vec<NodeInfo>,
    intern: HashMap<Node, NodeId>,
    cache: HashMap<(usize, NodeId), Rc<FixedBitSet>>,
    alive: HashMap<usize, System>,
    tensors: HashMap<(usize, usize), Rc<Tensor>>,
    decompositions: HashMap<(usize, usize, usize), bool>,
}

fn full(n: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

impl<'a> Evaluator<'a> {
    pub fn new(valuation: &'a Valuation, universe: Option<&'a Universe>) -> Self {
        Evaluator {
            valuation,
            universe,
            limits: universe.map(|u| u.limits).unwrap_or_default(),
            nodes: Vec::new(),
            intern: HashMap::new(),
            cache: HashMap::new(),
            alive: HashMap::new(),
            tensors: HashMap::new(),
            decompositions: HashMap::new(),
        }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    fn add(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.intern.get(&node) {
            return id;
        }
        let local_atoms = match &node {
            Node::Top | Node::Star(..) | Node::Wand(..) => BTreeSet::new(),
            Node::Atom(v) => [v.clone()].into(),
            Node::Not(a) | Node::Necessity(a) => self.nodes[*a].local_atoms.clone(),
            Node::And(a, b) => self.nodes[*a]
                .local_atoms
                .union(&self.nodes[*b].local_atoms)
                .cloned()
                .collect(),
        };
        let id = self.nodes.len();
        self.nodes.push(NodeInfo {
            node: node.clone(),
            local_atoms,
        });
        self.intern.insert(node, id);
        id
    }

    fn intern_formula(&mut self, f: &Formula) -> NodeId {
        let node = match f {
            Formula::Top => Node::Top,
            Formula::Atom(v) => Node::Atom(v.clone()),
            Formula::Not(a) => Node::Not(self.intern_formula(a)),
            Formula::Necessity(a) => Node::Necessity(self.intern_formula(a)),
            Formula::And(a, b) => Node::And(self.intern_formula(a), self.intern_formula(b)),
            Formula::Star(a, b) => {
                Node::Star(StarKind::Plain, self.intern_formula(a), self.intern_formula(b))
            }
            Formula::DirStar(a, b) => {
                Node::Star(StarKind::Directed, self.intern_formula(a), self.intern_formula(b))
            }
            Formula::DisjStar(a, b) => {
                Node::Star(StarKind::Disjoint, self.intern_formula(a), self.intern_formula(b))
            }
            Formula::Wand(a, b) => Node::Wand(false, self.intern_formula(a), self.intern_formula(b)),
            Formula::DirWand(a, b) => {
                Node::Wand(true, self.intern_formula(a), self.intern_formula(b))
            }
        };
        self.add(node)
    }

    fn undefined_atom(&self, f: &System, id: NodeId) -> Option<&Variable> {
        self.nodes[id]
            .local_atoms
            .iter()
            .find(|v| !f.has_component(&v.component))
    }

    fn defined(&self, f: &System, id: NodeId) -> bool {
        self.undefined_atom(f, id).is_none()
    }

    /// The set of behaviours of `f` satisfying `φ`.
    pub fn truth(&mut self, f: &System, phi: &Formula) -> Result<FixedBitSet> {
        let id = self.intern_formula(phi);
        if let Some(v) = self.undefined_atom(f, id) {
            return Err(Error::Language(format!(
                "atom `{v}` of `{phi}` is not over Comp({})",
                f.name()
            )));
        }
        Ok((*self.eval(f, id)?).clone())
    }

    pub fn holds(&mut self, f: &System, x: usize, phi: &Formula) -> Result<bool> {
        if x >= f.len() {
            return Err(Error::Domain(format!("index {x} outside Beh({})", f.name())));
        }
        Ok(self.truth(f, phi)?.contains(x))
    }

    /// First behaviour (canonical order) at which `φ` fails.
    pub fn first_failure(&mut self, f: &System, phi: &Formula) -> Result<Option<usize>> {
        let t = self.truth(f, phi)?;
        Ok((0..f.len()).find(|&x| !t.contains(x)))
    }

    pub fn valid(&mut self, f: &System, phi: &Formula) -> Result<bool> {
        Ok(self.first_failure(f, phi)?.is_none())
    }

    fn universe(&self) -> Result<&'a Universe> {
        self.universe.ok_or_else(|| {
            Error::Configuration("structural connectives need a universe of systems".into())
        })
    }

    fn eval(&mut self, f: &System, id: NodeId) -> Result<Rc<FixedBitSet>> {
        let key = (f.identity(), id);
        if let Some(t) = self.cache.get(&key) {
            return Ok(t.clone());
        }
        self.alive.entry(f.identity()).or_insert_with(|| f.clone());
        let n = f.len();
        let node = self.nodes[id].node.clone();
        let result = match node {
            Node::Top => full(n),
            Node::Atom(v) => self.atom(f, &v)?,
            Node::Not(a) => {
                let mut t = (*self.eval(f, a)?).clone();
                t.toggle_range(..);
                t
            }
            Node::And(a, b) => {
                let mut t = (*self.eval(f, a)?).clone();
                let other = self.eval(f, b)?;
                t.intersect_with(&other);
                t
            }
            Node::Necessity(a) => {
                let t = self.eval(f, a)?;
                if t.count_ones(..) == n {
                    full(n)
                } else {
                    FixedBitSet::with_capacity(n)
                }
            }
            Node::Star(kind, a, b) => self.star(f, kind, a, b)?,
            Node::Wand(directed, a, b) => self.wand(f, directed, a, b)?,
        };
        let result = Rc::new(result);
        self.cache.insert(key, result.clone());
        Ok(result)
    }

    fn atom(&self, f: &System, v: &Variable) -> Result<FixedBitSet> {
        let comp = self
            .valuation
            .component(v)
            .ok_or_else(|| Error::Language(format!("variable `{v}` has no valuation")))?;
        let col = f
            .column(&v.component)
            .expect("definedness is checked before evaluation");
        if &f.components()[col] != comp {
            return Err(Error::ComponentMismatch(v.component.to_string()));
        }
        let ext = self.valuation.extension(v).expect("declared variable");
        let mut t = FixedBitSet::with_capacity(f.len());
        for x in 0..f.len() {
            if ext.contains(f.value(x, col) as usize) {
                t.insert(x);
            }
        }
        Ok(t)
    }

    /// `f ≡ f₁ ⊗ f₂`, decided on images without building the tensor.
    fn decomposes(&mut self, f: &System, f1: &System, f2: &System) -> bool {
        let key = (f.identity(), f1.identity(), f2.identity());
        if let Some(&d) = self.decompositions.get(&key) {
            return d;
        }
        self.alive.entry(f1.identity()).or_insert_with(|| f1.clone());
        self.alive.entry(f2.identity()).or_insert_with(|| f2.clone());
        let d = tensor_image_equals(f, f1, f2);
        self.decompositions.insert(key, d);
        d
    }

    fn star(&mut self, f: &System, kind: StarKind, a: NodeId, b: NodeId) -> Result<FixedBitSet> {
        let universe = self.universe()?;
        let n = f.len();
        let mut out = FixedBitSet::with_capacity(n);
        for f1 in universe.members() {
            if !self.defined(f1, a) {
                continue;
            }
            for f2 in universe.members() {
                if !self.defined(f2, b) || !self.decomposes(f, f1, f2) {
                    continue;
                }
                let int = interface(f1, f2);
                let admissible = match kind {
                    StarKind::Plain => true,
                    StarKind::Disjoint => int.is_empty(),
                    StarKind::Directed => is_input_set(f2, &int)?,
                };
                if !admissible {
                    continue;
                }
                let t1 = self.eval(f1, a)?;
                let t2 = self.eval(f2, b)?;
                let k1: HashSet<&[u32]> = t1.ones().map(|x| f1.row(x)).collect();
                let k2: HashSet<&[u32]> = t2.ones().map(|x| f2.row(x)).collect();
                let c1 = f.columns(&f1.component_ids())?;
                let c2 = f.columns(&f2.component_ids())?;
                for x in 0..n {
                    if !out.contains(x)
                        && k1.contains(f.key(x, &c1).as_slice())
                        && k2.contains(f.key(x, &c2).as_slice())
                    {
                        out.insert(x);
                    }
                }
                if out.count_ones(..) == n {
                    return Ok(out);
                }
            }
        }
        Ok(out)
    }

    fn tensor_with(&mut self, f: &System, g: &System) -> Result<Rc<Tensor>> {
        let key = (f.identity(), g.identity());
        if let Some(t) = self.tensors.get(&key) {
            return Ok(t.clone());
        }
        self.alive.entry(g.identity()).or_insert_with(|| g.clone());
        let t = Rc::new(tensor(f, g, &self.limits)?);
        self.alive
            .insert(t.system.identity(), t.system.clone());
        self.tensors.insert(key, t.clone());
        Ok(t)
    }

    fn wand(&mut self, f: &System, directed: bool, a: NodeId, b: NodeId) -> Result<FixedBitSet> {
        let universe = self.universe()?;
        let n = f.len();
        let mut failing = FixedBitSet::with_capacity(n);
        for g in universe.members() {
            if !self.defined(g, a) {
                continue;
            }
            if directed && !is_input_set(g, &interface(f, g))? {
                continue;
            }
            let tg = self.eval(g, a)?;
            if tg.is_clear() {
                continue;
            }
            let t = self.tensor_with(f, g)?;
            // ψ outside the language of f ⊗ g counts as false there.
            let tpsi = if self.defined(&t.system, b) {
                Some(self.eval(&t.system, b)?)
            } else {
                None
            };
            for z in 0..t.system.len() {
                if tg.contains(t.right.apply(z)) && !tpsi.as_ref().is_some_and(|s| s.contains(z)) {
                    failing.insert(t.left.apply(z));
                }
            }
        }
        let mut out = full(n);
        out.difference_with(&failing);
        Ok(out)
    }
}

/// Whether `image(f₁ ⊗ f₂)` equals `image(f)` over the same components.
fn tensor_image_equals(f: &System, f1: &System, f2: &System) -> bool {
    let mut union = f1.component_ids();
    union.extend(f2.component_ids());
    if union != f.component_ids() {
        return false;
    }
    let same_decl = |g: &System| {
        g.components()
            .iter()
            .all(|c| f.components()[f.column(c.id()).unwrap()] == *c)
    };
    if !same_decl(f1) || !same_decl(f2) {
        return false;
    }
    let int = interface(f1, f2);
    let (i1, i2) = match (f1.columns(&int), f2.columns(&int)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    // For each column of f: where to read it from.
    let sources: Vec<(bool, usize)> = f
        .components()
        .iter()
        .map(|c| match f1.column(c.id()) {
            Some(col) => (true, col),
            None => (false, f2.column(c.id()).unwrap()),
        })
        .collect();
    let target = f.image_rows();
    let img2: Vec<&[u32]> = f2.image_rows().into_iter().collect();
    let mut by_key: HashMap<Vec<u32>, Vec<&[u32]>> = HashMap::new();
    for r2 in img2 {
        by_key
            .entry(i2.iter().map(|&c| r2[c]).collect())
            .or_default()
            .push(r2);
    }
    let mut produced = 0usize;
    for r1 in f1.image_rows() {
        let Some(partners) = by_key.get(&i1.iter().map(|&c| r1[c]).collect::<Vec<_>>()) else {
            continue;
        };
        for r2 in partners {
            let row: Vec<u32> = sources
                .iter()
                .map(|&(left, col)| if left { r1[col] } else { r2[col] })
                .collect();
            if !target.contains(row.as_slice()) {
                return false;
            }
            produced += 1;
        }
    }
    // Distinct image pairs give distinct merged rows, so counting suffices.
    produced == target.len()
}

pub fn satisfies(
    f: &System,
    valuation: &Valuation,
    x: &Behaviour,
    phi: &Formula,
    universe: Option<&Universe>,
) -> Result<bool> {
    let xi = f.require_index(x)?;
    Evaluator::new(valuation, universe).holds(f, xi, phi)
}

/// `f, V ⊨ φ`: every behaviour satisfies `φ`.
pub fn valid_in(
    f: &System,
    valuation: &Valuation,
    phi: &Formula,
    universe: Option<&Universe>,
) -> Result<bool> {
    Evaluator::new(valuation, universe).valid(f, phi)
}

/// `(f, x) = (f₁, x₁) ⊗ (f₂, x₂)`, checked literally: build the tensor, test
/// equivalence, then compare local behaviours component by component.
pub fn system_decomposes(
    f: &System,
    x: usize,
    f1: &System,
    x1: usize,
    f2: &System,
    x2: usize,
    limits: &Limits,
) -> Result<bool> {
    let t = match tensor(f1, f2, limits) {
        Ok(t) => t,
        Err(Error::ComponentMismatch(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    if !systems_equivalent(f, &t.system) {
        return Ok(false);
    }
    let agrees = |g: &System, y: usize| {
        g.component_ids()
            .iter()
            .all(|c| f.local(x, c) == g.local(y, c))
    };
    Ok(agrees(f1, x1) && agrees(f2, x2))
}
