//! Timestamped read/write traces of two users sharing one register, as a
//! bounded instance of the generalized CAP theorem.
//!
//! A configuration fixes a finite timestamp grid, a value alphabet, the
//! initial value `s₀` and a length budget. Behaviours of `f` are all
//! well-formed traces within budget; `g₁`, `g₂` carry the per-user
//! projections as single components `user1`, `user2`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::guarantees::{
    cap_verify_closure, cap_verify_exhaustive, entanglement_at, is_entangled, BehaviourRelation,
    CapDetail, CapInstance, CapReport, ClosureOutcome, EntanglementRow,
};
use crate::kernel::{
    components_as_system, validate_indices, Behaviour, Component, ComponentId, ImplementationMap,
    Snapshot, System,
};
use crate::{Error, Limits, Result};

pub type Timestamp = Ratio<u64>;

/// Parses `3`, `3/2` or `1.25` into an exact timestamp.
pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    let s = s.trim();
    let bad = || Error::Argument(format!("`{s}` is not a non-negative rational timestamp"));
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10u64.pow(frac.len() as u32);
        let num = int
            .checked_mul(den)
            .and_then(|n| n.checked_add(frac.parse::<u64>().ok()?))
            .ok_or_else(bad)?;
        return Ok(Ratio::new(num, den));
    }
    let r = Ratio::<u64>::from_str(s).map_err(|_| bad())?;
    Ok(r)
}

fn serialize_timestamp<S: Serializer>(t: &Timestamp, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum User {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl User {
    pub fn number(self) -> u8 {
        match self {
            User::One => 1,
            User::Two => 2,
        }
    }

    fn from_char(c: char) -> Option<User> {
        match c {
            '1' => Some(User::One),
            '2' => Some(User::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ActionKind {
    ReadRequest,
    ReadReturn(String),
    Write(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Action {
    #[serde(serialize_with = "serialize_timestamp")]
    pub timestamp: Timestamp,
    pub user: User,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl Action {
    pub fn new(timestamp: Timestamp, user: User, kind: ActionKind) -> Self {
        Action {
            timestamp,
            user,
            kind,
        }
    }

    pub fn written(&self) -> Option<&str> {
        match &self.kind {
            ActionKind::Write(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (t, i) = (self.timestamp, self.user.number());
        match &self.kind {
            ActionKind::ReadRequest => write!(f, "{t}:rd^{i}?"),
            ActionKind::ReadReturn(s) => write!(f, "{t}:rd^{i}({s})"),
            ActionKind::Write(s) => write!(f, "{t}:wr^{i}({s})"),
        }
    }
}

/// `t:rd^i?`, `t:rd^i(s)`, `t:wr^i(s)`; the `^` is optional. With
/// `wildcards`, `t` and `s` may be `*`.
fn parse_atom(text: &str, wildcards: bool) -> Result<(Option<Timestamp>, User, u8, Option<String>)> {
    let bad = |why: &str| Error::Argument(format!("`{text}` is not an action ({why})"));
    let (t, rest) = text.trim().split_once(':').ok_or_else(|| bad("missing `:`"))?;
    let t = if wildcards && t.trim() == "*" {
        None
    } else {
        Some(parse_timestamp(t)?)
    };
    let (kind, rest) = if let Some(r) = rest.strip_prefix("rd") {
        (0u8, r)
    } else if let Some(r) = rest.strip_prefix("wr") {
        (2u8, r)
    } else {
        return Err(bad("expected `rd` or `wr`"));
    };
    let rest = rest.strip_prefix('^').unwrap_or(rest);
    let mut chars = rest.chars();
    let user = chars
        .next()
        .and_then(User::from_char)
        .ok_or_else(|| bad("user must be 1 or 2"))?;
    let rest = chars.as_str();
    if rest == "?" {
        if kind == 2 {
            return Err(bad("a write needs a value"));
        }
        return Ok((t, user, 0, None));
    }
    let value = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .filter(|v| !v.is_empty())
        .ok_or_else(|| bad("expected `?` or `(value)`"))?;
    let kind = if kind == 0 { 1 } else { 2 };
    if wildcards && value == "*" {
        return Ok((t, user, kind, None));
    }
    Ok((t, user, kind, Some(value.to_string())))
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (t, user, kind, value) = parse_atom(s, false)?;
        let t = t.expect("timestamps are mandatory without wildcards");
        let kind = match (kind, value) {
            (0, _) => ActionKind::ReadRequest,
            (1, Some(v)) => ActionKind::ReadReturn(v),
            (_, Some(v)) => ActionKind::Write(v),
            _ => unreachable!(),
        };
        Ok(Action::new(t, user, kind))
    }
}

/// A finite action sequence; well-formed iff timestamps strictly ascend.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "String")]
pub struct Trace(pub Vec<Action>);

impl From<Trace> for String {
    fn from(t: Trace) -> String {
        t.to_string()
    }
}

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_well_formed(&self) -> bool {
        self.0.windows(2).all(|w| w[0].timestamp < w[1].timestamp)
    }

    /// `σ_i`: the subsequence of actions initiated by `user`.
    pub fn project(&self, user: User) -> Trace {
        Trace(self.0.iter().filter(|a| a.user == user).cloned().collect())
    }

    pub fn appended(&self, action: Action) -> Trace {
        let mut t = self.clone();
        t.0.push(action);
        t
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.0.last().map(|a| a.timestamp)
    }

    pub fn label(&self) -> Behaviour {
        Behaviour::new(self.to_string())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("⟩")
    }
}

impl FromStr for Trace {
    type Err = Error;

    /// Accepts `⟨a,b⟩`, `<a,b>` or a bare comma list; `⟨⟩`, `<>` and the
    /// empty string are the empty trace.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = s
            .strip_prefix('⟨')
            .and_then(|r| r.strip_suffix('⟩'))
            .or_else(|| s.strip_prefix('<').and_then(|r| r.strip_suffix('>')))
            .unwrap_or(s)
            .trim();
        if inner.is_empty() {
            return Ok(Trace::empty());
        }
        inner.split(',').map(str::parse).collect::<Result<_>>().map(Trace)
    }
}

/// Restricts which atoms the generator may use; `None` fields match any
/// timestamp or value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomPattern {
    #[serde(serialize_with = "serialize_opt_timestamp")]
    pub timestamp: Option<Timestamp>,
    pub user: User,
    pub kind: PatternKind,
}

fn serialize_opt_timestamp<S: Serializer>(
    t: &Option<Timestamp>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.collect_str(t),
        None => s.serialize_str("*"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum PatternKind {
    ReadRequest,
    ReadReturn(Option<String>),
    Write(Option<String>),
}

impl AtomPattern {
    pub fn matches(&self, a: &Action) -> bool {
        if self.timestamp.is_some_and(|t| t != a.timestamp) || self.user != a.user {
            return false;
        }
        let fits = |p: &Option<String>, v: &String| p.as_ref().is_none_or(|p| p == v);
        match (&self.kind, &a.kind) {
            (PatternKind::ReadRequest, ActionKind::ReadRequest) => true,
            (PatternKind::ReadReturn(p), ActionKind::ReadReturn(v)) => fits(p, v),
            (PatternKind::Write(p), ActionKind::Write(v)) => fits(p, v),
            _ => false,
        }
    }
}

impl FromStr for AtomPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (timestamp, user, kind, value) = parse_atom(s, true)?;
        let kind = match kind {
            0 => PatternKind::ReadRequest,
            1 => PatternKind::ReadReturn(value),
            _ => PatternKind::Write(value),
        };
        Ok(AtomPattern {
            timestamp,
            user,
            kind,
        })
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.timestamp {
            Some(t) => write!(f, "{t}")?,
            None => f.write_str("*")?,
        }
        let i = self.user.number();
        let v = |p: &Option<String>| p.clone().unwrap_or_else(|| "*".into());
        match &self.kind {
            PatternKind::ReadRequest => write!(f, ":rd^{i}?"),
            PatternKind::ReadReturn(p) => write!(f, ":rd^{i}({})", v(p)),
            PatternKind::Write(p) => write!(f, ":wr^{i}({})", v(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioConfig {
    #[serde(serialize_with = "serialize_timestamps")]
    pub timestamps: Vec<Timestamp>,
    pub values: Vec<String>,
    pub initial: String,
    pub max_length: usize,
    /// When set, only atoms matching one of the patterns are generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<AtomPattern>>,
}

fn serialize_timestamps<S: Serializer>(
    ts: &[Timestamp],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(|t| t.to_string()))
}

impl ScenarioConfig {
    /// Integer timestamps, `s₀` = the first value.
    pub fn grid(timestamps: &[u64], values: &[&str], max_length: usize) -> Self {
        ScenarioConfig {
            timestamps: timestamps.iter().map(|&t| Ratio::from_integer(t)).collect(),
            values: values.iter().map(|v| v.to_string()).collect(),
            initial: values.first().map(|v| v.to_string()).unwrap_or_default(),
            max_length,
            allowed: None,
        }
    }

    pub fn with_allowed(mut self, patterns: Vec<AtomPattern>) -> Self {
        self.allowed = Some(patterns);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamps.is_empty() {
            return Err(Error::Argument("a scenario needs at least one timestamp".into()));
        }
        if let Some(w) = self.timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Argument(format!(
                "timestamps must strictly ascend, got {} before {}",
                w[0], w[1]
            )));
        }
        if self.values.is_empty() {
            return Err(Error::Argument("a scenario needs at least one value".into()));
        }
        let mut seen = BTreeSet::new();
        for v in &self.values {
            if v.is_empty() || v.contains(['(', ')', ',', ' ', '⟨', '⟩']) {
                return Err(Error::Argument(format!("`{v}` is not a usable value name")));
            }
            if !seen.insert(v) {
                return Err(Error::Argument(format!("value `{v}` is listed twice")));
            }
        }
        if !seen.contains(&self.initial) {
            return Err(Error::Argument(format!(
                "the initial value `{}` is not among the values",
                self.initial
            )));
        }
        if self.max_length > self.timestamps.len() {
            return Err(Error::Argument(format!(
                "max_length {} exceeds the {} available timestamps",
                self.max_length,
                self.timestamps.len()
            )));
        }
        for p in self.allowed.iter().flatten() {
            if let Some(t) = p.timestamp {
                if !self.timestamps.contains(&t) {
                    return Err(Error::Argument(format!("pattern `{p}` uses timestamp {t} off the grid")));
                }
            }
            if let PatternKind::ReadReturn(Some(v)) | PatternKind::Write(Some(v)) = &p.kind {
                if !seen.contains(v) {
                    return Err(Error::Argument(format!("pattern `{p}` uses unknown value `{v}`")));
                }
            }
        }
        Ok(())
    }

    /// Atoms at one timestamp in canonical order: user 1 before user 2,
    /// then read request, read returns, writes, values in declared order.
    fn atoms_at(&self, t: Timestamp) -> Vec<Action> {
        let mut out = Vec::new();
        for user in [User::One, User::Two] {
            out.push(Action::new(t, user, ActionKind::ReadRequest));
            for v in &self.values {
                out.push(Action::new(t, user, ActionKind::ReadReturn(v.clone())));
            }
            for v in &self.values {
                out.push(Action::new(t, user, ActionKind::Write(v.clone())));
            }
        }
        if let Some(allowed) = &self.allowed {
            out.retain(|a| allowed.iter().any(|p| p.matches(a)));
        }
        out
    }

    /// Every allowed atom, ordered by timestamp then canonical order.
    pub fn atoms(&self) -> Vec<Action> {
        self.timestamps.iter().flat_map(|&t| self.atoms_at(t)).collect()
    }
}

/// Number of well-formed traces the configuration generates, without
/// generating them: choose up to `max_length` grid points, one atom each.
pub fn scenario_size(cfg: &ScenarioConfig) -> Result<u128> {
    cfg.validate()?;
    // by_len[l] = number of traces of length l over the timestamps seen so far
    let mut by_len = vec![0u128; cfg.max_length + 1];
    by_len[0] = 1;
    for &t in &cfg.timestamps {
        let a = cfg.atoms_at(t).len() as u128;
        for l in (1..=cfg.max_length).rev() {
            by_len[l] = by_len[l].saturating_add(by_len[l - 1].saturating_mul(a));
        }
    }
    Ok(by_len.iter().fold(0u128, |s, &c| s.saturating_add(c)))
}

/// `current value at t`: the value of the latest write with timestamp `≤ t`,
/// else `s₀`.
pub fn current_value<'a>(tr: &'a Trace, t: Timestamp, cfg: &'a ScenarioConfig) -> &'a str {
    current_value_from(tr, t, &cfg.initial)
}

fn current_value_from<'a>(tr: &'a Trace, t: Timestamp, initial: &'a str) -> &'a str {
    tr.0.iter()
        .rev()
        .filter(|a| a.timestamp <= t)
        .find_map(Action::written)
        .unwrap_or(initial)
}

/// A matched read `t:rd^i?` … `t′:rd^i(s)` whose `s` is not the current
/// value anywhere in `[t, t′]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InconsistentRead {
    pub trace: Trace,
    pub user: User,
    #[serde(serialize_with = "serialize_timestamp")]
    pub requested_at: Timestamp,
    #[serde(serialize_with = "serialize_timestamp")]
    pub returned_at: Timestamp,
    pub returned: String,
    /// Current values at `t` and at every write in `(t, t′]`.
    pub current_values: Vec<String>,
}

/// Finds the first read pair violating consistency, if any.
pub fn inconsistent_read(tr: &Trace, cfg: &ScenarioConfig) -> Option<InconsistentRead> {
    for user in [User::One, User::Two] {
        let reads: Vec<&Action> = tr
            .0
            .iter()
            .filter(|a| a.user == user && !matches!(a.kind, ActionKind::Write(_)))
            .collect();
        for pair in reads.windows(2) {
            let (req, ret) = (pair[0], pair[1]);
            let ActionKind::ReadReturn(s) = &ret.kind else {
                continue;
            };
            if req.kind != ActionKind::ReadRequest {
                continue;
            }
            // current values are piecewise constant, changing only at writes
            let points = std::iter::once(req.timestamp).chain(
                tr.0.iter()
                    .filter(|a| {
                        a.written().is_some() && a.timestamp > req.timestamp && a.timestamp <= ret.timestamp
                    })
                    .map(|a| a.timestamp),
            );
            let current: Vec<String> = points
                .map(|p| current_value_from(tr, p, &cfg.initial).to_string())
                .collect();
            if !current.iter().any(|c| c == s) {
                return Some(InconsistentRead {
                    trace: tr.clone(),
                    user,
                    requested_at: req.timestamp,
                    returned_at: ret.timestamp,
                    returned: s.clone(),
                    current_values: current,
                });
            }
        }
    }
    None
}

pub fn is_consistent(tr: &Trace, cfg: &ScenarioConfig) -> bool {
    inconsistent_read(tr, cfg).is_none()
}

pub const USER1: &str = "user1";
pub const USER2: &str = "user2";

/// The generated trace universe with its composition `g₁ ⊣σ₁ f ⊢σ₂ g₂` and
/// the CAP instance (anchored at the extendable traces).
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    traces: Vec<Trace>,
    index: HashMap<Trace, usize>,
    children: Vec<Vec<usize>>,
    pub f: System,
    pub g1: System,
    pub g2: System,
    pub sigma1: ImplementationMap,
    pub sigma2: ImplementationMap,
    pub instance: CapInstance,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn trace(&self, x: usize) -> &Trace {
        &self.traces[x]
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn index_of(&self, tr: &Trace) -> Option<usize> {
        self.index.get(tr).copied()
    }

    /// One-action extensions of `x` inside the universe.
    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    fn last(&self, x: usize) -> &Action {
        self.traces[x].0.last().expect("children are non-empty traces")
    }

    /// `R(x,•)`: `x⌢⟨t:wr²(s)⟩` for every later grid point and value.
    pub fn r_successors(&self, x: usize) -> Vec<usize> {
        self.children(x)
            .iter()
            .copied()
            .filter(|&c| {
                let a = self.last(c);
                a.user == User::Two && a.written().is_some()
            })
            .collect()
    }

    /// `S(x,•)`: `x⌢⟨t:rd¹?⟩⌢u⌢⟨t′:rd¹(s)⟩` with `u` any user-2 string.
    pub fn s_successors(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self
            .children(x)
            .iter()
            .copied()
            .filter(|&c| self.last(c).user == User::One && self.last(c).kind == ActionKind::ReadRequest)
            .collect();
        while let Some(m) = stack.pop() {
            for &c in self.children(m) {
                let a = self.last(c);
                match (a.user, &a.kind) {
                    (User::One, ActionKind::ReadReturn(_)) => out.push(c),
                    (User::Two, _) => stack.push(c),
                    _ => {}
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn user_component(id: &str, traces: &[Trace], user: User) -> Result<Arc<Component>> {
    let labels: Vec<Behaviour> = traces
        .iter()
        .filter(|t| t.0.iter().all(|a| a.user == user))
        .map(Trace::label)
        .collect();
    Ok(Arc::new(Component::new(ComponentId::new(id)?, labels)?))
}

/// Enumerates the universe, builds `f`, `g₁`, `g₂`, `σ₁`, `σ₂`, and attaches
/// `C`, `R`, `S` and the anchors.
pub fn generate_scenario(cfg: &ScenarioConfig, limits: &Limits) -> Result<Scenario> {
    let size = scenario_size(cfg)?;
    limits.check("trace universe of the scenario", size)?;

    let atoms_by_t: Vec<Vec<Action>> = cfg.timestamps.iter().map(|&t| cfg.atoms_at(t)).collect();
    // level-by-level extension keeps traces sorted by (length, action keys)
    let mut traces = vec![Trace::empty()];
    let mut next_slot = vec![0usize];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut level = 0..1;
    for _ in 0..cfg.max_length {
        let start = traces.len();
        for p in level.clone() {
            for (ti, atoms) in atoms_by_t.iter().enumerate().skip(next_slot[p]) {
                for a in atoms {
                    children[p].push(traces.len());
                    traces.push(traces[p].appended(a.clone()));
                    next_slot.push(ti + 1);
                    children.push(Vec::new());
                }
            }
        }
        level = start..traces.len();
    }
    debug_assert_eq!(traces.len() as u128, size);

    let c1 = user_component(USER1, &traces, User::One)?;
    let c2 = user_component(USER2, &traces, User::Two)?;
    let rows = traces
        .iter()
        .map(|t| {
            (
                t.label(),
                Snapshot::new([
                    (c1.id().clone(), t.project(User::One).label()),
                    (c2.id().clone(), t.project(User::Two).label()),
                ]),
            )
        })
        .collect();
    let f = System::new("f", vec![c1.clone(), c2.clone()], rows)?;
    let g1 = components_as_system(&[c1.clone()], limits)?.renamed("g1");
    let g2 = components_as_system(&[c2.clone()], limits)?.renamed("g2");
    let project = |g: &System, user: User| -> Result<ImplementationMap> {
        let map = traces
            .iter()
            .map(|t| g.require_index(&t.project(user).label()))
            .collect::<Result<Vec<_>>>()?;
        validate_indices(&f, g, map)?.into_result()
    };
    let sigma1 = project(&g1, User::One)?;
    let sigma2 = project(&g2, User::Two)?;

    let index = traces.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let mut scenario = Scenario {
        config: cfg.clone(),
        traces,
        index,
        children,
        f: f.clone(),
        g1,
        g2,
        sigma1: sigma1.clone(),
        sigma2: sigma2.clone(),
        instance: CapInstance::new(
            sigma1.clone(),
            sigma2.clone(),
            FixedBitSet::new(),
            BehaviourRelation::empty(&f),
            BehaviourRelation::empty(&f),
        )?,
    };
    let mut consistent = FixedBitSet::with_capacity(f.len());
    for (i, t) in scenario.traces.iter().enumerate() {
        consistent.set(i, is_consistent(t, cfg));
    }
    let r = relation_r(&scenario)?;
    let s = relation_s(&scenario)?;
    let anchors = extendable(&r, &s);
    scenario.instance = CapInstance::new(sigma1, sigma2, consistent, r, s)?.with_anchors(anchors)?;
    Ok(scenario)
}

pub fn relation_r(sc: &Scenario) -> Result<BehaviourRelation> {
    BehaviourRelation::from_indices(
        &sc.f,
        (0..sc.len()).flat_map(|x| sc.r_successors(x).into_iter().map(move |y| (x, y))),
    )
}

pub fn relation_s(sc: &Scenario) -> Result<BehaviourRelation> {
    BehaviourRelation::from_indices(
        &sc.f,
        (0..sc.len()).flat_map(|x| sc.s_successors(x).into_iter().map(move |y| (x, y))),
    )
}

/// Traces `w` with `R(w,•) ∩ dom(S) ≠ ∅`: the ones the budget leaves room
/// to extend by a write and then a complete read.
fn extendable(r: &BehaviourRelation, s: &BehaviourRelation) -> FixedBitSet {
    let n = r.carrier().len();
    let mut out = FixedBitSet::with_capacity(n);
    for w in 0..n {
        out.set(w, r.successors(w).iter().any(|&x| s.in_domain(x)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioStats {
    pub traces: usize,
    pub user1_traces: usize,
    pub user2_traces: usize,
    pub consistent: usize,
    pub r_pairs: usize,
    pub s_pairs: usize,
    /// Traces from which the outer quantifier of entanglement is checked.
    pub anchors: usize,
}

impl Scenario {
    pub fn stats(&self) -> ScenarioStats {
        let inst = &self.instance;
        ScenarioStats {
            traces: self.len(),
            user1_traces: self.g1.len(),
            user2_traces: self.g2.len(),
            consistent: inst.consistent.count_ones(..),
            r_pairs: inst.r.len(),
            s_pairs: inst.s.len(),
            anchors: inst.anchors.as_ref().map_or(self.len(), |a| a.count_ones(..)),
        }
    }
}

/// The canonical choice `x = w⌢⟨t:wr²(s)⟩` with `s` fresh for `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppendixWitness {
    pub w: Trace,
    pub x: Trace,
    pub fresh_value: String,
    /// The entanglement condition holds at `(w, x)`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum FreshValueLimitation {
    /// Every value is `s₀` or already written in `w`.
    ValuesExhausted { w: Trace },
    /// A fresh value exists but no write of it leaves room for a read.
    NoRoom { w: Trace, fresh_value: String },
}

/// Entanglement with `w` ranging over all of `Beh(f)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiteralEntanglement {
    pub entangled: bool,
    pub failing: usize,
    pub first_failure: Option<EntanglementRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppendixReport {
    pub config: ScenarioConfig,
    pub stats: ScenarioStats,
    /// Entanglement over the extendable traces.
    pub entangled: bool,
    pub literal: LiteralEntanglement,
    pub first_entanglement_failure: Option<EntanglementRow>,
    pub witnesses_checked: usize,
    pub witnesses_holding: usize,
    /// The first few canonical witnesses.
    pub witnesses: Vec<AppendixWitness>,
    pub fresh_value_limitations: Vec<FreshValueLimitation>,
    pub closure: CapReport,
    pub inconsistent_read: Option<InconsistentRead>,
    pub exhaustive: Option<CapReport>,
    pub modes_agree: Option<bool>,
    /// Entangled, the closure breaks a guarantee group, and exhaustive mode
    /// (when run) finds no satisfying subset.
    pub verdict: bool,
}

const WITNESS_SAMPLE: usize = 16;

/// Smallest value that is neither `s₀` nor written in `w`.
pub fn fresh_value<'a>(w: &Trace, cfg: &'a ScenarioConfig) -> Option<&'a str> {
    cfg.values
        .iter()
        .find(|v| **v != cfg.initial && !w.0.iter().any(|a| a.written() == Some(v.as_str())))
        .map(String::as_str)
}

fn canonical_witness(
    sc: &Scenario,
    w: usize,
) -> std::result::Result<(usize, String), FreshValueLimitation> {
    let wt = sc.trace(w);
    let fresh = fresh_value(wt, &sc.config).ok_or_else(|| FreshValueLimitation::ValuesExhausted {
        w: wt.clone(),
    })?;
    sc.r_successors(w)
        .into_iter()
        .find(|&x| sc.last(x).written() == Some(fresh) && sc.instance.s.in_domain(x))
        .map(|x| (x, fresh.to_string()))
        .ok_or_else(|| FreshValueLimitation::NoRoom {
            w: wt.clone(),
            fresh_value: fresh.to_string(),
        })
}

/// Generates the scenario, checks entanglement, closes `{⟨⟩}` and, for small
/// universes, enumerates every subset.
pub fn verify_appendix(cfg: &ScenarioConfig, limits: &Limits) -> Result<AppendixReport> {
    let sc = generate_scenario(cfg, limits)?;
    let inst = &sc.instance;
    let scoped = is_entangled(inst);

    let mut literal_inst = inst.clone();
    literal_inst.anchors = None;
    let literal = is_entangled(&literal_inst);
    let literal = LiteralEntanglement {
        entangled: literal.entangled,
        failing: literal.rows.iter().filter(|r| !r.holds()).count(),
        first_failure: literal.first_failure().cloned(),
    };

    let mut witnesses = Vec::new();
    let mut limitations = Vec::new();
    let (mut checked, mut holding) = (0, 0);
    for w in inst.anchors.as_ref().expect("scenario instances are anchored").ones() {
        match canonical_witness(&sc, w) {
            Ok((x, fresh)) => {
                let holds = entanglement_at(inst, sc.f.behaviour(w), sc.f.behaviour(x))?.is_none();
                checked += 1;
                holding += holds as usize;
                if witnesses.len() < WITNESS_SAMPLE {
                    witnesses.push(AppendixWitness {
                        w: sc.trace(w).clone(),
                        x: sc.trace(x).clone(),
                        fresh_value: fresh,
                        holds,
                    });
                }
            }
            Err(lim) => limitations.push(lim),
        }
    }

    let empty = Trace::empty().label();
    let closure = cap_verify_closure(inst, &empty, limits)?;
    let inconsistent_read = match &closure.detail {
        CapDetail::Closure(d) => match &d.outcome {
            ClosureOutcome::ConsistencyViolated { outside } => outside.iter().find_map(|b| {
                let i = sc.f.index_of(b)?;
                inconsistent_read(sc.trace(i), cfg)
            }),
            _ => None,
        },
        CapDetail::Exhaustive(_) => None,
    };
    let exhaustive = if sc.len() <= limits.exhaustive_bound {
        Some(cap_verify_exhaustive(inst, limits)?)
    } else {
        None
    };
    let modes_agree = exhaustive.as_ref().map(|e| e.verdict == closure.verdict);
    let verdict = scoped.entangled
        && closure.verdict
        && exhaustive.as_ref().is_none_or(|e| e.verdict);
    Ok(AppendixReport {
        config: cfg.clone(),
        stats: sc.stats(),
        entangled: scoped.entangled,
        literal,
        first_entanglement_failure: scoped.first_failure().cloned(),
        witnesses_checked: checked,
        witnesses_holding: holding,
        witnesses,
        fresh_value_limitations: limitations,
        closure,
        inconsistent_read,
        exhaustive,
        modes_agree,
        verdict,
    })
}
