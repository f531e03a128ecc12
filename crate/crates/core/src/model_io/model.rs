//! Resolution of parsed declarations into validated objects.

use std::collections::HashSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use indexmap::IndexMap;

use super::formula_syntax::parse_formula_at;
use super::syntax::{parse_decls, CapDecl, Decl, DeclKind, GuaranteeDef, ImplDef, Name, Pos, ScenarioDecl, SystemDef};
use super::Diagnostic;
use crate::cap_scenario::{parse_timestamp, ScenarioConfig};
use crate::guarantees::{AvailabilityPairing, BehaviourRelation, CapInstance, Guarantee};
use crate::kernel::{
    components_as_system, implementation_exists, tensor, validate_implementation, Behaviour,
    Component, ComponentId, ImplementationMap, Snapshot, System, Validation,
};
use crate::logic::{Formula, Universe, Valuation};
use crate::timed::{OrderedComponent, TimedImplementation};
use crate::{Error, Limits, Result};

/// A parsed and validated model. Equality compares declarations only.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub decls: Vec<Decl>,
    pub components: IndexMap<String, Arc<Component>>,
    pub ordered: IndexMap<String, OrderedComponent>,
    pub systems: IndexMap<String, System>,
    pub impls: IndexMap<String, ImplementationMap>,
    pub valuations: IndexMap<String, Valuation>,
    pub formulas: IndexMap<String, Formula>,
    pub relations: IndexMap<String, BehaviourRelation>,
    pub guarantees: IndexMap<String, Guarantee>,
    pub universes: IndexMap<String, Universe>,
    pub scenarios: IndexMap<String, ScenarioConfig>,
    pub caps: IndexMap<String, CapInstance>,
    pub timed: IndexMap<String, TimedImplementation>,
}

impl PartialEq for ModelFile {
    fn eq(&self, other: &Self) -> bool {
        self.decls == other.decls
    }
}

impl Eq for ModelFile {}

fn lookup<'m, T>(map: &'m IndexMap<String, T>, name: &Name, what: &str) -> Result<&'m T> {
    map.get(name.as_str())
        .ok_or_else(|| Error::Argument(format!("no {what} named `{name}`")))
}

macro_rules! getter {
    ($fn:ident, $field:ident, $ty:ty, $what:expr) => {
        pub fn $fn(&self, name: &str) -> Result<&$ty> {
            self.$field
                .get(name)
                .ok_or_else(|| Error::Argument(format!("no {} named `{name}`", $what)))
        }
    };
}

impl ModelFile {
    fn empty() -> Self {
        ModelFile {
            decls: Vec::new(),
            components: IndexMap::new(),
            ordered: IndexMap::new(),
            systems: IndexMap::new(),
            impls: IndexMap::new(),
            valuations: IndexMap::new(),
            formulas: IndexMap::new(),
            relations: IndexMap::new(),
            guarantees: IndexMap::new(),
            universes: IndexMap::new(),
            scenarios: IndexMap::new(),
            caps: IndexMap::new(),
            timed: IndexMap::new(),
        }
    }

    getter!(component, components, Arc<Component>, "component");
    getter!(system, systems, System, "system");
    getter!(implementation, impls, ImplementationMap, "implementation");
    getter!(valuation, valuations, Valuation, "valuation");
    getter!(relation, relations, BehaviourRelation, "relation");
    getter!(guarantee, guarantees, Guarantee, "guarantee");
    getter!(universe, universes, Universe, "universe");
    getter!(scenario, scenarios, ScenarioConfig, "scenario");
    getter!(cap, caps, CapInstance, "cap instance");
    getter!(timed_implementation, timed, TimedImplementation, "timed implementation");

    /// The single valuation when exactly one is declared.
    pub fn default_valuation(&self) -> Result<&Valuation> {
        match self.valuations.len() {
            1 => Ok(&self.valuations[0]),
            0 => Err(Error::Argument("the model declares no valuation".into())),
            _ => Err(Error::Argument(
                "the model declares several valuations; name one".into(),
            )),
        }
    }

    /// A declared formula by name.
    pub fn formula(&self, name: &str) -> Option<&Formula> {
        self.formulas.get(name)
    }

    /// `a⊗b⊗…` over declared systems, or a single declared system.
    pub fn system_expr(&self, expr: &str, limits: &Limits) -> Result<System> {
        if let Some(s) = self.systems.get(expr.trim()) {
            return Ok(s.clone());
        }
        let parts: Vec<&str> = expr.split('⊗').map(str::trim).collect();
        let mut acc = self.system(parts[0])?.clone();
        for p in &parts[1..] {
            acc = tensor(&acc, self.system(p)?, limits)?.system;
        }
        Ok(acc)
    }

    fn has(&self, name: &str) -> bool {
        self.components.contains_key(name)
            || self.systems.contains_key(name)
            || self.impls.contains_key(name)
            || self.valuations.contains_key(name)
            || self.formulas.contains_key(name)
            || self.relations.contains_key(name)
            || self.guarantees.contains_key(name)
            || self.universes.contains_key(name)
            || self.scenarios.contains_key(name)
            || self.caps.contains_key(name)
            || self.timed.contains_key(name)
    }
}

fn labels(v: &[String]) -> Vec<Behaviour> {
    v.iter().map(Behaviour::new).collect()
}

fn subset(f: &System, members: &[String]) -> Result<FixedBitSet> {
    let mut set = FixedBitSet::with_capacity(f.len());
    for m in members {
        set.insert(f.require_index(&Behaviour::new(m))?);
    }
    Ok(set)
}

fn pairs(v: &[(String, String)]) -> Vec<(Behaviour, Behaviour)> {
    v.iter()
        .map(|(a, b)| (Behaviour::new(a), Behaviour::new(b)))
        .collect()
}

struct Resolver<'a> {
    model: ModelFile,
    /// Names whose declaration failed; references to them stay silent.
    failed: HashSet<String>,
    limits: &'a Limits,
}

/// Marks an error caused by referring to a failed declaration.
const CASCADE: &str = "\u{0}cascade";

impl Resolver<'_> {
    fn check_ref(&self, name: &Name) -> Result<()> {
        if self.failed.contains(name.as_str()) {
            return Err(Error::Argument(CASCADE.into()));
        }
        if !self.model.has(name.as_str()) {
            return Err(Error::Argument(format!(
                "`{name}` at {} does not refer to a declaration",
                name.pos
            )));
        }
        Ok(())
    }

    fn get<'m, T>(&'m self, map: &'m IndexMap<String, T>, name: &Name, what: &str) -> Result<&'m T> {
        self.check_ref(name)?;
        lookup(map, name, what).map_err(|_| {
            Error::Argument(format!("`{name}` at {} is not a {what}", name.pos))
        })
    }

    fn resolve(&mut self, d: &Decl) -> Result<()> {
        let name = d.name.text.clone();
        let m = &self.model;
        match &d.kind {
            DeclKind::Component { labels: ls, order } => {
                let comp = Arc::new(Component::new(ComponentId::new(&name)?, labels(ls))?);
                if let Some(order) = order {
                    let oc = OrderedComponent::with_reflexive_pairs(comp.clone(), &pairs(order))?;
                    self.model.ordered.insert(name.clone(), oc);
                }
                self.model.components.insert(name, comp);
            }
            DeclKind::System(def) => {
                let sys = match def {
                    SystemDef::Table { over, rows } => {
                        let comps = over
                            .iter()
                            .map(|c| self.get(&m.components, c, "component").cloned())
                            .collect::<Result<Vec<_>>>()?;
                        let rows = rows
                            .iter()
                            .map(|(label, values)| {
                                if values.len() != comps.len() {
                                    return Err(Error::Argument(format!(
                                        "row `{label}` has {} values for {} components",
                                        values.len(),
                                        comps.len()
                                    )));
                                }
                                Ok((
                                    Behaviour::new(label),
                                    Snapshot::new(
                                        comps
                                            .iter()
                                            .zip(values)
                                            .map(|(c, v)| (c.id().clone(), Behaviour::new(v))),
                                    ),
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        System::new(&name, comps, rows)?
                    }
                    SystemDef::Tensor(parts) => {
                        let mut acc = self.get(&m.systems, &parts[0], "system")?.clone();
                        for p in &parts[1..] {
                            let next = self.get(&m.systems, p, "system")?;
                            acc = tensor(&acc, next, self.limits)?.system;
                        }
                        acc.renamed(&name)
                    }
                    SystemDef::Components(cs) => {
                        let comps = cs
                            .iter()
                            .map(|c| self.get(&m.components, c, "component").cloned())
                            .collect::<Result<Vec<_>>>()?;
                        components_as_system(&comps, self.limits)?.renamed(&name)
                    }
                };
                self.model.systems.insert(name, sys);
            }
            DeclKind::Impl { from, to, def } => {
                let f = self.get(&m.systems, from, "system")?;
                let g = self.get(&m.systems, to, "system")?;
                let map = match def {
                    ImplDef::Derive => implementation_exists(f, g).ok_or_else(|| {
                        Error::Structural(format!("`{from}` does not implement `{to}`"))
                    })?,
                    ImplDef::Map(ps) => match validate_implementation(f, g, &pairs(ps))? {
                        Validation::Valid(map) => map,
                        Validation::Violated(v) => {
                            return Err(Error::Structural(format!(
                                "`{name}` is not an implementation: {v}"
                            )))
                        }
                    },
                };
                self.model.impls.insert(name, map);
            }
            DeclKind::Valuation(entries) => {
                let mut val = Valuation::new();
                for (comp, var, ext) in entries {
                    let c = self.get(&m.components, comp, "component")?;
                    val.insert(c, var, &labels(ext))?;
                }
                self.model.valuations.insert(name, val);
            }
            DeclKind::Formula(text) => {
                // the body position is the opening quote
                let origin = Pos {
                    line: d.body_pos.0.line,
                    column: d.body_pos.0.column + 1,
                };
                let f = parse_formula_at(text, origin)?;
                self.model.formulas.insert(name, f);
            }
            DeclKind::Relation { on, pairs: ps } => {
                let f = self.get(&m.systems, on, "system")?;
                let r = BehaviourRelation::new(f, &pairs(ps))?;
                self.model.relations.insert(name, r);
            }
            DeclKind::Guarantee(def) => {
                let g = self.guarantee(def)?;
                self.model.guarantees.insert(name, g);
            }
            DeclKind::Universe { systems, depth } => {
                let members = systems
                    .iter()
                    .map(|s| self.get(&m.systems, s, "system").cloned())
                    .collect::<Result<Vec<_>>>()?;
                let u = Universe::new(members, *depth, self.limits)?;
                self.model.universes.insert(name, u);
            }
            DeclKind::Scenario(s) => {
                let cfg = scenario_config(s)?;
                self.model.scenarios.insert(name, cfg);
            }
            DeclKind::Cap(c) => {
                let inst = self.cap(c)?;
                self.model.caps.insert(name, inst);
            }
            DeclKind::Timed {
                observer,
                sigma,
                rho,
            } => {
                self.check_ref(observer)?;
                let obs = lookup(&m.ordered, observer, "ordered component").map_err(|_| {
                    Error::Argument(format!("`{observer}` is not a component with an order"))
                })?;
                let s = self.get(&m.impls, sigma, "implementation")?;
                let r = self.get(&m.impls, rho, "implementation")?;
                let t = TimedImplementation::new(obs.clone(), s.clone(), r.clone())?;
                self.model.timed.insert(name, t);
            }
        }
        Ok(())
    }

    fn guarantee(&self, def: &GuaranteeDef) -> Result<Guarantee> {
        let m = &self.model;
        Ok(match def {
            GuaranteeDef::Consistency { system, set } => {
                let f = self.get(&m.systems, system, "system")?;
                Guarantee::consistency(f, subset(f, set)?)?
            }
            GuaranteeDef::WeakAvailability(r) => {
                Guarantee::weak_availability(self.get(&m.relations, r, "relation")?.clone())
            }
            GuaranteeDef::StrongAvailability(r) => {
                Guarantee::strong_availability(self.get(&m.relations, r, "relation")?.clone())
            }
            GuaranteeDef::PartitionTolerance(a, b) => Guarantee::partition_tolerance(
                self.get(&m.impls, a, "implementation")?.clone(),
                self.get(&m.impls, b, "implementation")?.clone(),
            )?,
            GuaranteeDef::Explicit { system, family } => {
                let f = self.get(&m.systems, system, "system")?;
                let family = family
                    .iter()
                    .map(|s| subset(f, s))
                    .collect::<Result<Vec<_>>>()?;
                Guarantee::explicit(f, family)?
            }
            GuaranteeDef::All(parts) => {
                let gs = parts
                    .iter()
                    .map(|p| self.get(&m.guarantees, p, "guarantee").cloned())
                    .collect::<Result<Vec<_>>>()?;
                let f = gs
                    .first()
                    .map(|g| g.system().clone())
                    .ok_or_else(|| Error::Argument("`all()` needs at least one guarantee".into()))?;
                Guarantee::conjunction(&f, gs)?
            }
            GuaranteeDef::Cap(c) => self.get(&m.caps, c, "cap instance")?.guarantee()?,
        })
    }

    fn cap(&self, c: &CapDecl) -> Result<CapInstance> {
        let m = &self.model;
        let s1 = self.get(&m.impls, &c.sigma1, "implementation")?.clone();
        let s2 = self.get(&m.impls, &c.sigma2, "implementation")?.clone();
        let f = s1.source().clone();
        let r = self.get(&m.relations, &c.r, "relation")?.clone();
        let s = self.get(&m.relations, &c.s, "relation")?.clone();
        let mut inst = CapInstance::new(s1, s2, subset(&f, &c.consistent)?, r, s)?;
        if let Some(a) = &c.anchors {
            inst = inst.with_anchors(subset(&f, a)?)?;
        }
        if let Some(p) = &c.pairing {
            inst = inst.with_pairing(p.parse::<AvailabilityPairing>()?);
        }
        Ok(inst)
    }
}

pub fn scenario_config(s: &ScenarioDecl) -> Result<ScenarioConfig> {
    let cfg = ScenarioConfig {
        timestamps: s
            .timestamps
            .iter()
            .map(|t| parse_timestamp(t))
            .collect::<Result<_>>()?,
        values: s.values.clone(),
        initial: s
            .initial
            .clone()
            .or_else(|| s.values.first().cloned())
            .unwrap_or_default(),
        max_length: s.max_length,
        allowed: s
            .allow
            .as_ref()
            .map(|ps| ps.iter().map(|p| p.parse()).collect::<Result<_>>())
            .transpose()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    parse_model_with(text, &Limits::from_env())
}

/// Parses and validates a model; every failure becomes a positioned
/// diagnostic.
pub fn parse_model_with(text: &str, limits: &Limits) -> Result<ModelFile> {
    let decls = parse_decls(text).map_err(Error::Parse)?;
    let mut r = Resolver {
        model: ModelFile::empty(),
        failed: HashSet::new(),
        limits,
    };
    let mut diags = Vec::new();
    for d in &decls {
        let pos = d.name.pos;
        if r.model.has(d.name.as_str()) || r.failed.contains(d.name.as_str()) {
            diags.push(Diagnostic::new(
                pos.line,
                pos.column,
                format!("`{}` is declared twice", d.name),
            ));
            continue;
        }
        if let Err(e) = r.resolve(d) {
            r.failed.insert(d.name.text.clone());
            match e {
                Error::Argument(msg) if msg == CASCADE => {}
                Error::Parse(inner) => diags.extend(inner),
                e => diags.push(Diagnostic::new(
                    pos.line,
                    pos.column,
                    format!("{} `{}`: {e}", d.kind.keyword(), d.name),
                )),
            }
        }
    }
    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.column));
        return Err(Error::Parse(diags));
    }
    r.model.decls = decls;
    Ok(r.model)
}
