//! Implementation guarantees, entanglement, and the two CAP verification
//! modes.
//!
//! A guarantee is a family of behaviour subsets given by a membership test.
//! Whether an implementation satisfies a guarantee depends only on its image,
//! and every non-empty subset of `Beh(f)` is the image of some runnable
//! implementation, so "every runnable implementation" reduces to "every
//! non-empty subset".

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::kernel::{Behaviour, ImplementationMap, System};
use crate::{Error, Limits, Result};

/// A binary relation on the behaviours of one system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviourRelation {
    carrier: System,
    /// Sorted, deduplicated successor lists.
    succ: Vec<Vec<usize>>,
}

impl BehaviourRelation {
    pub fn new(carrier: &System, pairs: &[(Behaviour, Behaviour)]) -> Result<Self> {
        let pairs = pairs
            .iter()
            .map(|(a, b)| Ok((carrier.require_index(a)?, carrier.require_index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(carrier, pairs)
    }

    pub fn from_indices(
        carrier: &System,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = carrier.len();
        let mut succ = vec![Vec::new(); n];
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Domain(format!(
                    "relation pair ({a}, {b}) lies outside Beh({})",
                    carrier.name()
                )));
            }
            succ[a].push(b);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        Ok(BehaviourRelation {
            carrier: carrier.clone(),
            succ,
        })
    }

    pub fn empty(carrier: &System) -> Self {
        BehaviourRelation {
            carrier: carrier.clone(),
            succ: vec![Vec::new(); carrier.len()],
        }
    }

    pub fn carrier(&self) -> &System {
        &self.carrier
    }

    /// `R(x, •)` in ascending order.
    pub fn successors(&self, x: usize) -> &[usize] {
        &self.succ[x]
    }

    pub fn in_domain(&self, x: usize) -> bool {
        !self.succ[x].is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.iter().all(Vec::is_empty)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuaranteeKind {
    Consistency(FixedBitSet),
    WeakAvailability(BehaviourRelation),
    StrongAvailability(BehaviourRelation),
    PartitionTolerance(ImplementationMap, ImplementationMap),
    Explicit(Vec<FixedBitSet>),
    Conjunction(Vec<Guarantee>),
}

/// A family of subsets of `Beh(g)`, given intensionally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantee {
    system: System,
    kind: GuaranteeKind,
}

fn check_subset(g: &System, set: &FixedBitSet, what: &str) -> Result<()> {
    if let Some(i) = set.ones().find(|&i| i >= g.len()) {
        return Err(Error::Domain(format!(
            "{what} contains index {i}, outside Beh({})",
            g.name()
        )));
    }
    Ok(())
}

fn sized(set: &FixedBitSet, n: usize) -> FixedBitSet {
    let mut out = set.clone();
    out.grow(n);
    out
}

impl Guarantee {
    pub fn consistency(g: &System, c: FixedBitSet) -> Result<Self> {
        check_subset(g, &c, "consistency set")?;
        Ok(Guarantee {
            system: g.clone(),
            kind: GuaranteeKind::Consistency(sized(&c, g.len())),
        })
    }

    pub fn weak_availability(r: BehaviourRelation) -> Self {
        Guarantee {
            system: r.carrier.clone(),
            kind: GuaranteeKind::WeakAvailability(r),
        }
    }

    pub fn strong_availability(r: BehaviourRelation) -> Self {
        Guarantee {
            system: r.carrier.clone(),
            kind: GuaranteeKind::StrongAvailability(r),
        }
    }

    pub fn partition_tolerance(s1: ImplementationMap, s2: ImplementationMap) -> Result<Self> {
        if s1.source() != s2.source() {
            return Err(Error::Domain(
                "partition-tolerance needs two implementations with the same source".into(),
            ));
        }
        Ok(Guarantee {
            system: s1.source().clone(),
            kind: GuaranteeKind::PartitionTolerance(s1, s2),
        })
    }

    pub fn explicit(g: &System, family: Vec<FixedBitSet>) -> Result<Self> {
        for set in &family {
            check_subset(g, set, "explicit family member")?;
        }
        let mut family: Vec<FixedBitSet> = family.iter().map(|s| sized(s, g.len())).collect();
        family.sort_by(|a, b| a.ones().cmp(b.ones()));
        family.dedup();
        Ok(Guarantee {
            system: g.clone(),
            kind: GuaranteeKind::Explicit(family),
        })
    }

    pub fn conjunction(g: &System, parts: Vec<Guarantee>) -> Result<Self> {
        if let Some(p) = parts.iter().find(|p| &p.system != g) {
            return Err(Error::Domain(format!(
                "conjunct lives on `{}`, not on `{}`",
                p.system.name(),
                g.name()
            )));
        }
        Ok(Guarantee {
            system: g.clone(),
            kind: GuaranteeKind::Conjunction(parts),
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn kind(&self) -> &GuaranteeKind {
        &self.kind
    }
}

fn weak_ok(x: &FixedBitSet, r: &BehaviourRelation) -> bool {
    x.ones()
        .all(|a| !r.in_domain(a) || r.successors(a).iter().any(|&b| x.contains(b)))
}

fn strong_ok(x: &FixedBitSet, r: &BehaviourRelation) -> bool {
    x.ones().all(|a| r.successors(a).iter().all(|&b| x.contains(b)))
}

/// Partition-tolerance: the classes realized by `X` under `σ₁` and `σ₂` are
/// jointly realized in every combination.
fn partition_ok(x: &FixedBitSet, s1: &ImplementationMap, s2: &ImplementationMap) -> bool {
    let mut left = std::collections::BTreeSet::new();
    let mut right = std::collections::BTreeSet::new();
    let mut joint = std::collections::BTreeSet::new();
    for i in x.ones() {
        let (a, b) = (s1.apply(i), s2.apply(i));
        left.insert(a);
        right.insert(b);
        joint.insert((a, b));
    }
    joint.len() == left.len() * right.len()
}

fn satisfied(x: &FixedBitSet, g: &Guarantee) -> bool {
    match &g.kind {
        GuaranteeKind::Consistency(c) => x.is_subset(c),
        GuaranteeKind::WeakAvailability(r) => weak_ok(x, r),
        GuaranteeKind::StrongAvailability(r) => strong_ok(x, r),
        GuaranteeKind::PartitionTolerance(s1, s2) => partition_ok(x, s1, s2),
        GuaranteeKind::Explicit(family) => family.iter().any(|s| s == x),
        GuaranteeKind::Conjunction(parts) => parts.iter().all(|p| satisfied(x, p)),
    }
}

/// `X ∈ 𝒳` for the family described by `g`.
pub fn guarantee_satisfied(x: &FixedBitSet, g: &Guarantee) -> Result<bool> {
    check_subset(&g.system, x, "subset")?;
    Ok(satisfied(&sized(x, g.system.len()), g))
}

/// `σ ⊨ 𝒳`: the image of `σ` belongs to the family.
pub fn implementation_satisfies(sigma: &ImplementationMap, g: &Guarantee) -> Result<bool> {
    if sigma.target() != &g.system {
        return Err(Error::Domain(format!(
            "implementation targets `{}` but the guarantee lives on `{}`",
            sigma.target().name(),
            g.system.name()
        )));
    }
    Ok(satisfied(&sigma.image(), g))
}

/// How the two availability relations are read in guarantee group 2. Only
/// `StrongWeak` (strong `R`, weak `S`) carries the impossibility result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvailabilityPairing {
    #[default]
    StrongWeak,
    WeakWeak,
    StrongStrong,
    WeakStrong,
}

impl AvailabilityPairing {
    pub const ALL: [Self; 4] = [
        Self::StrongWeak,
        Self::WeakWeak,
        Self::StrongStrong,
        Self::WeakStrong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrongWeak => "strong-weak",
            Self::WeakWeak => "weak-weak",
            Self::StrongStrong => "strong-strong",
            Self::WeakStrong => "weak-strong",
        }
    }

    fn r_strong(self) -> bool {
        matches!(self, Self::StrongWeak | Self::StrongStrong)
    }

    fn s_strong(self) -> bool {
        matches!(self, Self::StrongStrong | Self::WeakStrong)
    }
}

impl std::str::FromStr for AvailabilityPairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown availability pairing `{s}` (expected strong-weak, weak-weak, strong-strong or weak-strong)"
                ))
            })
    }
}

/// The data of one application of the generalized CAP theorem.
#[derive(Debug, Clone)]
pub struct CapInstance {
    pub f: System,
    pub sigma1: ImplementationMap,
    pub sigma2: ImplementationMap,
    pub consistent: FixedBitSet,
    pub r: BehaviourRelation,
    pub s: BehaviourRelation,
    /// Behaviours over which the outer `∀w` of entanglement ranges. `None`
    /// means all of `Beh(f)`. When set, exhaustive mode only considers
    /// subsets that realize at least one anchor.
    pub anchors: Option<FixedBitSet>,
    pub pairing: AvailabilityPairing,
}

impl CapInstance {
    pub fn new(
        sigma1: ImplementationMap,
        sigma2: ImplementationMap,
        consistent: FixedBitSet,
        r: BehaviourRelation,
        s: BehaviourRelation,
    ) -> Result<Self> {
        let f = sigma1.source().clone();
        if sigma2.source() != &f {
            return Err(Error::Domain(
                "σ₁ and σ₂ must have the same source system".into(),
            ));
        }
        if r.carrier() != &f || s.carrier() != &f {
            return Err(Error::Domain(format!(
                "R and S must be relations on `{}`",
                f.name()
            )));
        }
        check_subset(&f, &consistent, "consistency set")?;
        let consistent = sized(&consistent, f.len());
        Ok(CapInstance {
            f,
            sigma1,
            sigma2,
            consistent,
            r,
            s,
            anchors: None,
            pairing: AvailabilityPairing::default(),
        })
    }

    pub fn with_anchors(mut self, anchors: FixedBitSet) -> Result<Self> {
        check_subset(&self.f, &anchors, "anchor set")?;
        self.anchors = Some(sized(&anchors, self.f.len()));
        Ok(self)
    }

    pub fn with_pairing(mut self, pairing: AvailabilityPairing) -> Self {
        self.pairing = pairing;
        self
    }

    fn anchor_set(&self) -> FixedBitSet {
        match &self.anchors {
            Some(a) => a.clone(),
            None => {
                let mut all = FixedBitSet::with_capacity(self.f.len());
                all.insert_range(..);
                all
            }
        }
    }

    /// The three guarantee groups as one conjunction on `f`.
    pub fn guarantee(&self) -> Result<Guarantee> {
        let avail = |r: &BehaviourRelation, strong: bool| {
            if strong {
                Guarantee::strong_availability(r.clone())
            } else {
                Guarantee::weak_availability(r.clone())
            }
        };
        Guarantee::conjunction(
            &self.f,
            vec![
                Guarantee::consistency(&self.f, self.consistent.clone())?,
                avail(&self.r, self.pairing.r_strong()),
                avail(&self.s, self.pairing.s_strong()),
                Guarantee::partition_tolerance(self.sigma1.clone(), self.sigma2.clone())?,
            ],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuaranteeGroup {
    Consistency,
    Availability,
    PartitionTolerance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum EntanglementRow {
    /// The smallest `x ∈ R(w,•) ∩ dom(S)` for which the condition holds.
    Witness { w: Behaviour, x: Behaviour },
    /// `R(w,•) ∩ dom(S)` is empty.
    NoCandidate { w: Behaviour },
    /// Every candidate fails; one failing `(v, y, z)` per candidate `x`.
    Refuted {
        w: Behaviour,
        failures: Vec<EntanglementFailure>,
    },
}

impl EntanglementRow {
    pub fn w(&self) -> &Behaviour {
        match self {
            EntanglementRow::Witness { w, .. }
            | EntanglementRow::NoCandidate { w }
            | EntanglementRow::Refuted { w, .. } => w,
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, EntanglementRow::Witness { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntanglementFailure {
    pub x: Behaviour,
    pub v: Behaviour,
    pub y: Behaviour,
    pub z: Behaviour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntanglementReport {
    pub entangled: bool,
    /// Whether `w` ranged over declared anchors rather than all of `Beh(f)`.
    pub anchored: bool,
    pub rows: Vec<EntanglementRow>,
}

impl EntanglementReport {
    pub fn first_failure(&self) -> Option<&EntanglementRow> {
        self.rows.iter().find(|r| !r.holds())
    }
}

/// Smallest member of `C` in each `(σ₁, σ₂)` class.
fn consistent_classes(inst: &CapInstance) -> HashMap<(usize, usize), usize> {
    let mut classes = HashMap::new();
    for y in inst.consistent.ones() {
        classes
            .entry((inst.sigma1.apply(y), inst.sigma2.apply(y)))
            .or_insert(y);
    }
    classes
}

/// Decides the entanglement condition
///
/// `∀w ∃x∈R(w,•)∩dom(S) ∀v∈S(x,•) ∀y,z: σ₁(y)=σ₁(z)=σ₁(v) ∧ σ₂(y)=σ₂(w) ∧
/// σ₂(z)=σ₂(x) ⇒ y∉C ∨ z∉C`.
///
/// For fixed `v` the inner condition fails iff `C` meets both classes
/// `(σ₁(v), σ₂(w))` and `(σ₁(v), σ₂(x))`.
pub fn is_entangled(inst: &CapInstance) -> EntanglementReport {
    let classes = consistent_classes(inst);
    let anchors = inst.anchor_set();
    let rows: Vec<EntanglementRow> = anchors
        .ones()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&w| {
            let f = &inst.f;
            let mut failures = Vec::new();
            let mut any = false;
            for &x in inst.r.successors(w) {
                if !inst.s.in_domain(x) {
                    continue;
                }
                any = true;
                match refute(inst, &classes, w, x) {
                    None => {
                        return EntanglementRow::Witness {
                            w: f.behaviour(w).clone(),
                            x: f.behaviour(x).clone(),
                        }
                    }
                    Some(fail) => failures.push(fail),
                }
            }
            if any {
                EntanglementRow::Refuted {
                    w: f.behaviour(w).clone(),
                    failures,
                }
            } else {
                EntanglementRow::NoCandidate {
                    w: f.behaviour(w).clone(),
                }
            }
        })
        .collect();
    EntanglementReport {
        entangled: rows.iter().all(EntanglementRow::holds),
        anchored: inst.anchors.is_some(),
        rows,
    }
}

fn refute(
    inst: &CapInstance,
    classes: &HashMap<(usize, usize), usize>,
    w: usize,
    x: usize,
) -> Option<EntanglementFailure> {
    let (s1, s2, f) = (&inst.sigma1, &inst.sigma2, &inst.f);
    inst.s.successors(x).iter().find_map(|&v| {
        let y = classes.get(&(s1.apply(v), s2.apply(w)))?;
        let z = classes.get(&(s1.apply(v), s2.apply(x)))?;
        Some(EntanglementFailure {
            x: f.behaviour(x).clone(),
            v: f.behaviour(v).clone(),
            y: f.behaviour(*y).clone(),
            z: f.behaviour(*z).clone(),
        })
    })
}

/// Checks the inner condition of entanglement for one chosen pair
/// `(w, x)`; `None` when every `v ∈ S(x,•)` passes.
pub fn entanglement_at(
    inst: &CapInstance,
    w: &Behaviour,
    x: &Behaviour,
) -> Result<Option<EntanglementFailure>> {
    let (wi, xi) = (inst.f.require_index(w)?, inst.f.require_index(x)?);
    Ok(refute(inst, &consistent_classes(inst), wi, xi))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GroupCounts {
    pub consistency: u64,
    pub availability: u64,
    pub partition_tolerance: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetVerdict {
    pub subset: Vec<Behaviour>,
    pub violated: Vec<GuaranteeGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExhaustiveDetail {
    pub subsets_checked: u64,
    /// Number of checked subsets violating each group.
    pub violations: GroupCounts,
    /// Number of checked subsets satisfying all three groups.
    pub satisfying_count: u64,
    /// The smallest satisfying subsets (by bitmask), at most a handful.
    pub satisfying: Vec<Vec<Behaviour>>,
    /// The smallest failing subsets with the groups they violate.
    pub failing_samples: Vec<SubsetVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum ClosureOutcome {
    /// The closure leaves `C`; the listed members are the ones outside.
    ConsistencyViolated { outside: Vec<Behaviour> },
    /// Some pair of realized classes has no joint realizer in `Beh(f)`.
    PartitionUnsatisfiable { x1: Behaviour, x2: Behaviour },
    /// A closed set satisfying every group; impossible for entangled
    /// instances.
    AllSatisfied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosureDetail {
    pub seed: Behaviour,
    pub closure: Vec<Behaviour>,
    pub outcome: ClosureOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CapDetail {
    Exhaustive(ExhaustiveDetail),
    Closure(ClosureDetail),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapReport {
    /// True when no considered implementation satisfies all three groups.
    pub verdict: bool,
    pub pairing: AvailabilityPairing,
    pub entanglement: EntanglementReport,
    pub detail: CapDetail,
}

/// Bitmask tables for fast subset checks (at most 64 behaviours).
struct MaskTables {
    consistent: u64,
    anchors: u64,
    r: Vec<u64>,
    s: Vec<u64>,
    r_strong: bool,
    s_strong: bool,
    class1: Vec<usize>,
    class2: Vec<usize>,
}

fn relation_masks(r: &BehaviourRelation) -> Vec<u64> {
    (0..r.carrier.len())
        .map(|a| r.successors(a).iter().fold(0u64, |m, &b| m | 1 << b))
        .collect()
}

/// Dense ranks of an implementation's values, so classes fit in a `u64`.
fn ranks(sigma: &ImplementationMap) -> Vec<usize> {
    let mut seen = HashMap::new();
    (0..sigma.source().len())
        .map(|x| {
            let next = seen.len();
            *seen.entry(sigma.apply(x)).or_insert(next)
        })
        .collect()
}

fn to_mask(set: &FixedBitSet) -> u64 {
    set.ones().fold(0u64, |m, i| m | 1 << i)
}

impl MaskTables {
    fn new(inst: &CapInstance) -> Self {
        MaskTables {
            consistent: to_mask(&inst.consistent),
            anchors: to_mask(&inst.anchor_set()),
            r: relation_masks(&inst.r),
            s: relation_masks(&inst.s),
            r_strong: inst.pairing.r_strong(),
            s_strong: inst.pairing.s_strong(),
            class1: ranks(&inst.sigma1),
            class2: ranks(&inst.sigma2),
        }
    }

    fn avail(masks: &[u64], strong: bool, x: u64) -> bool {
        bits(x).all(|i| {
            let succ = masks[i];
            if strong {
                succ & !x == 0
            } else {
                succ == 0 || succ & x != 0
            }
        })
    }

    fn violated(&self, x: u64) -> [bool; 3] {
        let consistency = x & !self.consistent != 0;
        let availability =
            !(Self::avail(&self.r, self.r_strong, x) && Self::avail(&self.s, self.s_strong, x));
        let mut left = 0u64;
        let mut right = 0u64;
        let mut rows = [0u64; 64];
        for i in bits(x) {
            let (a, b) = (self.class1[i], self.class2[i]);
            left |= 1 << a;
            right |= 1 << b;
            rows[a] |= 1 << b;
        }
        let partition = bits(left).any(|a| rows[a] != right);
        [consistency, availability, partition]
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(i)
    })
}

const SAMPLE: usize = 8;

#[derive(Default)]
struct Tally {
    checked: u64,
    counts: GroupCounts,
    satisfying_count: u64,
    satisfying: Vec<u64>,
    failing: Vec<(u64, [bool; 3])>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.counts.consistency += other.counts.consistency;
        self.counts.availability += other.counts.availability;
        self.counts.partition_tolerance += other.counts.partition_tolerance;
        self.satisfying_count += other.satisfying_count;
        self.satisfying.extend(other.satisfying);
        self.satisfying.sort_unstable();
        self.satisfying.truncate(SAMPLE);
        self.failing.extend(other.failing);
        self.failing.sort_unstable_by_key(|&(m, _)| m);
        self.failing.truncate(SAMPLE);
        self
    }
}

fn subset_labels(f: &System, mask: u64) -> Vec<Behaviour> {
    bits(mask).map(|i| f.behaviour(i).clone()).collect()
}

fn violated_groups(v: [bool; 3]) -> Vec<GuaranteeGroup> {
    [
        GuaranteeGroup::Consistency,
        GuaranteeGroup::Availability,
        GuaranteeGroup::PartitionTolerance,
    ]
    .into_iter()
    .zip(v)
    .filter_map(|(g, bad)| bad.then_some(g))
    .collect()
}

/// Checks every non-empty subset of `Beh(f)` (meeting the anchors, when
/// declared) against the three guarantee groups.
pub fn cap_verify_exhaustive(inst: &CapInstance, limits: &Limits) -> Result<CapReport> {
    let n = inst.f.len();
    let bound = limits.exhaustive_bound.min(63);
    if n > bound {
        return Err(Error::Capacity {
            what: format!(
                "exhaustive subset enumeration over Beh({}) (use closure mode instead)",
                inst.f.name()
            ),
            count: n as u128,
            cap: bound,
        });
    }
    let tables = MaskTables::new(inst);
    let total: u64 = 1u64 << n;
    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            let lo = (c * CHUNK).max(1);
            let hi = ((c + 1) * CHUNK).min(total);
            for x in lo..hi {
                if x & tables.anchors == 0 {
                    continue;
                }
                t.checked += 1;
                let v = tables.violated(x);
                t.counts.consistency += v[0] as u64;
                t.counts.availability += v[1] as u64;
                t.counts.partition_tolerance += v[2] as u64;
                if v.iter().any(|&b| b) {
                    if t.failing.len() < SAMPLE {
                        t.failing.push((x, v));
                    }
                } else {
                    t.satisfying_count += 1;
                    if t.satisfying.len() < SAMPLE {
                        t.satisfying.push(x);
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let f = &inst.f;
    Ok(CapReport {
        verdict: tally.satisfying_count == 0,
        pairing: inst.pairing,
        entanglement: is_entangled(inst),
        detail: CapDetail::Exhaustive(ExhaustiveDetail {
            subsets_checked: tally.checked,
            violations: tally.counts,
            satisfying_count: tally.satisfying_count,
            satisfying: tally.satisfying.iter().map(|&m| subset_labels(f, m)).collect(),
            failing_samples: tally
                .failing
                .iter()
                .map(|&(m, v)| SubsetVerdict {
                    subset: subset_labels(f, m),
                    violated: violated_groups(v),
                })
                .collect(),
        }),
    })
}

/// Result of closing a set under the availability and partition-tolerance
/// requirements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub set: FixedBitSet,
    /// First pair `(x₁, x₂)` of members whose classes have no joint
    /// realizer anywhere in `Beh(f)`.
    pub unrealizable: Option<(usize, usize)>,
}

/// The least superset of `start` that is closed under: all `R`-successors
/// (strong) or the smallest `R`-successor when none is present (weak), the
/// same for `S`, and the smallest joint realizer for every pair of realized
/// `(σ₁, σ₂)` classes. Weak witnesses are chosen canonically, so the result
/// is least only relative to that choice.
pub fn close(inst: &CapInstance, start: &FixedBitSet, limits: &Limits) -> Result<Closure> {
    let (set, stop) = close_staged(inst, start, limits, false)?;
    Ok(Closure {
        set,
        unrealizable: match stop {
            Stop::Unrealizable(a, b) => Some((a, b)),
            _ => None,
        },
    })
}

enum Stop {
    Fixed,
    Outside,
    Unrealizable(usize, usize),
}

/// Alternates an availability stage and a partition-tolerance stage. With
/// `stop_outside`, returns as soon as the set leaves `C`: consistency is
/// downward closed, so every closed superset violates it as well.
fn close_staged(
    inst: &CapInstance,
    start: &FixedBitSet,
    limits: &Limits,
    stop_outside: bool,
) -> Result<(FixedBitSet, Stop)> {
    check_subset(&inst.f, start, "start set")?;
    let f = &inst.f;
    let (s1, s2) = (&inst.sigma1, &inst.sigma2);
    let mut realizer: HashMap<(usize, usize), usize> = HashMap::new();
    for x in 0..f.len() {
        realizer.entry((s1.apply(x), s2.apply(x))).or_insert(x);
    }
    let mut set = sized(start, f.len());
    let outside = |set: &FixedBitSet| set.ones().any(|x| !inst.consistent.contains(x));
    loop {
        let before = set.count_ones(..);
        let mut queue: Vec<usize> = set.ones().collect();
        while let Some(x) = queue.pop() {
            for (rel, strong) in [
                (&inst.r, inst.pairing.r_strong()),
                (&inst.s, inst.pairing.s_strong()),
            ] {
                let succ = rel.successors(x);
                let add: &[usize] = if strong {
                    succ
                } else if succ.is_empty() || succ.iter().any(|&y| set.contains(y)) {
                    &[]
                } else {
                    &succ[..1]
                };
                for &y in add {
                    if !set.put(y) {
                        queue.push(y);
                    }
                }
            }
        }
        limits.check(format!("closure in {}", f.name()), set.count_ones(..) as u128)?;
        if stop_outside && outside(&set) {
            return Ok((set, Stop::Outside));
        }
        let mut first1 = std::collections::BTreeMap::new();
        let mut first2 = std::collections::BTreeMap::new();
        for x in set.ones() {
            first1.entry(s1.apply(x)).or_insert(x);
            first2.entry(s2.apply(x)).or_insert(x);
        }
        for (&a, &x1) in &first1 {
            for (&b, &x2) in &first2 {
                match realizer.get(&(a, b)) {
                    Some(&z) => set.insert(z),
                    None => return Ok((set, Stop::Unrealizable(x1, x2))),
                }
            }
        }
        if stop_outside && outside(&set) {
            return Ok((set, Stop::Outside));
        }
        if set.count_ones(..) == before {
            return Ok((set, Stop::Fixed));
        }
    }
}

/// Runs the proof of the theorem from one realized behaviour: closes
/// `{seed}` stage by stage and reports the first guarantee group that every
/// closed superset must break.
pub fn cap_verify_closure(inst: &CapInstance, seed: &Behaviour, limits: &Limits) -> Result<CapReport> {
    let f = &inst.f;
    let w = f.require_index(seed)?;
    let mut start = FixedBitSet::with_capacity(f.len());
    start.insert(w);
    let (set, stop) = close_staged(inst, &start, limits, true)?;
    let labels = |set: &FixedBitSet| set.ones().map(|i| f.behaviour(i).clone()).collect();
    let outcome = match stop {
        Stop::Unrealizable(x1, x2) => ClosureOutcome::PartitionUnsatisfiable {
            x1: f.behaviour(x1).clone(),
            x2: f.behaviour(x2).clone(),
        },
        Stop::Outside => {
            let mut outside = set.clone();
            outside.difference_with(&inst.consistent);
            ClosureOutcome::ConsistencyViolated {
                outside: labels(&outside),
            }
        }
        Stop::Fixed => ClosureOutcome::AllSatisfied,
    };
    Ok(CapReport {
        verdict: outcome != ClosureOutcome::AllSatisfied,
        pairing: inst.pairing,
        entanglement: is_entangled(inst),
        detail: CapDetail::Closure(ClosureDetail {
            seed: seed.clone(),
            closure: labels(&set),
            outcome,
        }),
    })
}
