//! The `bsm` command line: one subcommand per operation, one report per run.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fixedbitset::FixedBitSet;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::fixtures::{load_fixture, run_checks, FIXTURES};
use super::report::{render_pretty, Report};
use super::syntax::ScenarioDecl;
use super::{parse_formula, parse_model_with, scenario_config, ModelFile};
use crate::cap_scenario::{generate_scenario, verify_appendix, ScenarioConfig};
use crate::guarantees::{
    cap_verify_closure, cap_verify_exhaustive, guarantee_satisfied, implementation_satisfies,
    is_entangled, CapInstance,
};
use crate::kernel::{
    factor_through_tensor, implementation_exists, interface, is_free_composition, is_input,
    systems_equivalent, tensor, validate_implementation, Behaviour, CompositionWitness,
    ImplementationMap, System, Validation,
};
use crate::logic::{
    compute_types, frame_rule, hm_equivalent, local_reasoning_i, local_reasoning_ii,
    local_reasoning_iii, Evaluator, Formula, HmFlavour, RuleReport, Universe, Valuation,
};
use crate::timed::{derived_order, minimal_behaviours, validate_timed};
use crate::{Error, Limits, Result};

#[derive(Parser, Debug)]
#[command(
    name = "bsm",
    version,
    about = "Check finite behavioural system models",
    disable_help_subcommand = true
)]
struct Cli {
    /// Model file, or `fixture:NAME` for a shipped fixture.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Human-readable rendering instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a declared implementation, validate a map, or decide existence.
    CheckImpl(CheckImpl),
    /// Build the tensor of two systems.
    Compose(Pair),
    /// Decide whether two implementations with one source form a free composition.
    CheckFree(Pair),
    /// Decide equivalence of two systems.
    Equiv(Pair),
    /// Evaluate a formula at one behaviour or at all of them.
    Eval(Eval),
    /// Decide validity of a formula in a system.
    Valid(Eval),
    /// Local reasoning rule I.
    #[command(name = "rule-1")]
    Rule1(LocalRule),
    /// Local reasoning rule II.
    #[command(name = "rule-2")]
    Rule2(LocalRule),
    /// Local reasoning rule III.
    #[command(name = "rule-3")]
    Rule3(Rule3),
    /// The frame rule.
    Frame(Frame),
    /// Decide logical equivalence of two pointed systems through types.
    Hm(Hm),
    /// Types of every behaviour of a system.
    Types(Types),
    /// Check a subset or an implementation against a guarantee.
    Guarantee(GuaranteeCmd),
    /// Decide entanglement of a CAP instance.
    Entangle(CapCmd),
    /// Enumerate every subset of a CAP instance.
    CapExhaustive(CapCmd),
    /// Close a seed of a CAP instance under the guarantees.
    CapClosure(CapCmd),
    /// Generate the two-user register scenario.
    ScenarioGen(Scenario),
    /// Verify the generalized CAP theorem on the register scenario.
    ScenarioVerify(Scenario),
    /// Derived order of a timed implementation.
    TimedOrder(Timed),
    /// Load every shipped fixture and run its checks.
    Fixtures(Fixtures),
}

#[derive(Args, Debug, Serialize)]
struct CheckImpl {
    /// A declared implementation.
    #[arg(long = "impl", conflicts_with_all = ["from", "to", "map"])]
    implementation: Option<String>,
    #[arg(long, requires = "to")]
    from: Option<String>,
    #[arg(long, requires = "from")]
    to: Option<String>,
    /// Extensional map `x -> y, ...`; without it existence is decided.
    #[arg(long, requires = "from")]
    map: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct Pair {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
}

#[derive(Args, Debug, Serialize)]
struct Eval {
    /// A declared system or a tensor expression `a ⊗ b`.
    #[arg(long)]
    system: String,
    /// A declared formula or formula text.
    #[arg(long)]
    formula: String,
    #[arg(long)]
    valuation: Option<String>,
    #[arg(long, conflicts_with = "all")]
    behaviour: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    universe: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct LocalRule {
    #[arg(long)]
    sigma: String,
    #[arg(long)]
    pi: String,
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    #[arg(long)]
    valuation: Option<String>,
    /// Also evaluate the conclusion directly.
    #[arg(long)]
    audit: bool,
}

#[derive(Args, Debug, Serialize)]
struct Rule3 {
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    #[arg(long)]
    valuation: Option<String>,
    #[arg(long)]
    audit: bool,
}

#[derive(Args, Debug, Serialize)]
struct Frame {
    #[arg(long)]
    g: String,
    #[arg(long)]
    h: String,
    #[arg(long)]
    beta: String,
    #[arg(long)]
    valuation: Option<String>,
    #[arg(long)]
    audit: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Flavour {
    Elementary,
    Boxed,
}

#[derive(Args, Debug, Serialize)]
struct Hm {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long, value_enum, default_value = "elementary")]
    flavour: Flavour,
    #[arg(long)]
    valuation: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct Types {
    #[arg(long)]
    system: String,
    #[arg(long)]
    valuation: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct GuaranteeCmd {
    #[arg(long)]
    guarantee: String,
    /// Comma-separated behaviours; empty for the empty set.
    #[arg(long, conflicts_with = "implementation", required_unless_present = "implementation")]
    subset: Option<String>,
    #[arg(long = "impl")]
    implementation: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct CapCmd {
    #[arg(long)]
    cap: String,
    /// Seed behaviour for cap-closure; defaults to the smallest anchor.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct Scenario {
    /// A declared scenario.
    #[arg(long, conflicts_with_all = ["timestamps", "values", "initial", "max_len", "allow"])]
    scenario: Option<String>,
    /// Comma-separated timestamps such as `1,3/2,2`.
    #[arg(long, required_unless_present = "scenario", requires = "values")]
    timestamps: Option<String>,
    #[arg(long)]
    values: Option<String>,
    /// Initial register value; defaults to the first value.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long, default_value_t = 3)]
    max_len: usize,
    /// Comma-separated atom patterns restricting the generated actions.
    #[arg(long)]
    allow: Option<String>,
    /// scenario-gen: list every trace.
    #[arg(long)]
    list: bool,
}

#[derive(Args, Debug, Serialize)]
struct Timed {
    #[arg(long)]
    timed: String,
}

#[derive(Args, Debug, Serialize)]
struct Fixtures {
    /// Run a single fixture.
    #[arg(long)]
    name: Option<String>,
}

struct Outcome {
    verdict: bool,
    details: Value,
    citations: Vec<&'static str>,
    provenance: Map<String, Value>,
}

impl Outcome {
    fn new(verdict: bool, details: Value, citation: &'static str) -> Self {
        Outcome {
            verdict,
            details,
            citations: vec![citation],
            provenance: Map::new(),
        }
    }

    fn with(mut self, key: &str, v: Value) -> Self {
        self.provenance.insert(key.to_string(), v);
        self
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report data serializes")
}

struct Ctx {
    model: Option<(String, ModelFile)>,
    limits: Limits,
}

impl Ctx {
    fn model(&self) -> Result<&ModelFile> {
        self.model
            .as_ref()
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Argument("this command needs --model".into()))
    }

    fn system(&self, expr: &str) -> Result<System> {
        self.model()?.system_expr(expr, &self.limits)
    }

    fn implementation(&self, name: &str) -> Result<&ImplementationMap> {
        self.model()?.implementation(name)
    }

    fn valuation(&self, name: &Option<String>) -> Result<&Valuation> {
        let m = self.model()?;
        match name {
            Some(n) => m.valuation(n),
            None => m.default_valuation(),
        }
    }

    /// A declared formula name, or formula text.
    fn formula(&self, text: &str) -> Result<Formula> {
        if let Some(f) = self.model.as_ref().and_then(|(_, m)| m.formula(text.trim())) {
            return Ok(f.clone());
        }
        parse_formula(text)
    }

    fn cap(&self, name: &str) -> Result<&CapInstance> {
        self.model()?.cap(name)
    }
}

fn load(source: &str, limits: &Limits) -> Result<ModelFile> {
    match source.strip_prefix("fixture:") {
        Some(name) => load_fixture(name, limits),
        None => {
            let text = std::fs::read_to_string(source)
                .map_err(|e| Error::Argument(format!("cannot read `{source}`: {e}")))?;
            parse_model_with(&text, limits)
        }
    }
}

fn labels(text: &str) -> Vec<Behaviour> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Behaviour::new)
        .collect()
}

fn subset_of(f: &System, text: &str) -> Result<FixedBitSet> {
    let mut set = FixedBitSet::with_capacity(f.len());
    for b in labels(text) {
        set.insert(f.require_index(&b)?);
    }
    Ok(set)
}

fn names(f: &System, set: impl IntoIterator<Item = usize>) -> Vec<String> {
    set.into_iter().map(|x| f.behaviour(x).to_string()).collect()
}

fn map_pairs(text: &str) -> Result<Vec<(Behaviour, Behaviour)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once("->")
                .ok_or_else(|| Error::Argument(format!("map entry `{p}` is not `x -> y`")))?;
            Ok((Behaviour::new(a.trim()), Behaviour::new(b.trim())))
        })
        .collect()
}

fn impl_details(sigma: &ImplementationMap) -> Value {
    json!({
        "source": sigma.source().name(),
        "target": sigma.target().name(),
        "map": sigma.pairs().iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect::<Vec<_>>(),
        "input": is_input(sigma),
    })
}

fn check_impl(ctx: &Ctx, a: &CheckImpl) -> Result<Outcome> {
    const CITE: &str = "an implementation commutes with projection onto the target's components";
    if let Some(name) = &a.implementation {
        return Ok(Outcome::new(true, impl_details(ctx.implementation(name)?), CITE));
    }
    let (from, to) = match (&a.from, &a.to) {
        (Some(f), Some(t)) => (ctx.system(f)?, ctx.system(t)?),
        _ => return Err(Error::Argument("give --impl, or --from and --to".into())),
    };
    match &a.map {
        Some(text) => match validate_implementation(&from, &to, &map_pairs(text)?)? {
            Validation::Valid(s) => Ok(Outcome::new(true, impl_details(&s), CITE)),
            Validation::Violated(v) => Ok(Outcome::new(
                false,
                json!({"violation": to_value(&v), "message": v.to_string()}),
                CITE,
            )),
        },
        None => Ok(match implementation_exists(&from, &to) {
            Some(s) => Outcome::new(true, impl_details(&s), CITE),
            None => Outcome::new(
                false,
                json!({"source": from.name(), "target": to.name(), "exists": false}),
                CITE,
            ),
        }),
    }
}

fn system_rows(f: &System) -> Value {
    Value::Array(
        (0..f.len())
            .map(|x| json!({"behaviour": f.behaviour(x), "snapshot": f.snapshot(x)}))
            .collect(),
    )
}

fn compose(ctx: &Ctx, a: &Pair) -> Result<Outcome> {
    let (f, g) = (ctx.system(&a.left)?, ctx.system(&a.right)?);
    let t = tensor(&f, &g, &ctx.limits)?;
    Ok(Outcome::new(
        true,
        json!({
            "system": t.system.name(),
            "interface": interface(&f, &g),
            "behaviours": t.system.len(),
            "rows": system_rows(&t.system),
        }),
        "the tensor is the canonical free composition",
    ))
}

fn check_free(ctx: &Ctx, a: &Pair) -> Result<Outcome> {
    let w = CompositionWitness::new(
        ctx.implementation(&a.left)?.clone(),
        ctx.implementation(&a.right)?.clone(),
    )?;
    let free = is_free_composition(&w)?;
    let mut details = to_value(&free);
    if free.free {
        let fact = factor_through_tensor(&w, &ctx.limits)?;
        details["factor_surjective"] = json!(fact.surjective);
        details["tensor_behaviours"] = json!(fact.tensor.system.len());
    }
    Ok(Outcome::new(
        free.free,
        details,
        "a free composition factors surjectively through the tensor",
    ))
}

fn equiv(ctx: &Ctx, a: &Pair) -> Result<Outcome> {
    let (f, g) = (ctx.system(&a.left)?, ctx.system(&a.right)?);
    Ok(Outcome::new(
        systems_equivalent(&f, &g),
        json!({"left": f.name(), "right": g.name()}),
        "equivalent systems implement each other",
    ))
}

fn universe_provenance(u: &Universe) -> Value {
    json!({
        "members": u.member_names(),
        "declared": u.declared(),
        "depth": u.depth(),
        "skipped": u.skipped(),
    })
}

fn eval(ctx: &Ctx, a: &Eval, force_all: bool) -> Result<Outcome> {
    let f = ctx.system(&a.system)?;
    let phi = ctx.formula(&a.formula)?;
    let val = ctx.valuation(&a.valuation)?;
    let universe = a.universe.as_ref().map(|u| ctx.model()?.universe(u)).transpose()?;
    let mut ev = Evaluator::new(val, universe).with_limits(ctx.limits);
    const CITE: &str = "satisfaction of behaviour-logic formulas";
    let out = match (&a.behaviour, force_all) {
        (Some(b), false) => {
            let holds = ev.holds(&f, f.require_index(&Behaviour::new(b))?, &phi)?;
            Outcome::new(
                holds,
                json!({"system": f.name(), "formula": phi.to_string(), "behaviour": b, "holds": holds}),
                CITE,
            )
        }
        _ => {
            let truth = ev.truth(&f, &phi)?;
            let failing: Vec<usize> = (0..f.len()).filter(|&x| !truth.contains(x)).collect();
            Outcome::new(
                failing.is_empty(),
                json!({
                    "system": f.name(),
                    "formula": phi.to_string(),
                    "behaviours": f.len(),
                    "satisfying": names(&f, truth.ones()),
                    "failing": names(&f, failing),
                }),
                CITE,
            )
        }
    };
    Ok(match universe {
        Some(u) => out.with("universe", universe_provenance(u)),
        None => out,
    })
}

fn rule_outcome(rep: RuleReport, cite: &'static str) -> Outcome {
    let verdict = rep.certified && rep.audit.as_ref().map_or(true, |a| a.agrees);
    Outcome::new(verdict, to_value(&rep), cite)
}

fn local_rule(ctx: &Ctx, a: &LocalRule, second: bool) -> Result<Outcome> {
    let (sigma, pi) = (ctx.implementation(&a.sigma)?, ctx.implementation(&a.pi)?);
    let (alpha, beta) = (ctx.formula(&a.alpha)?, ctx.formula(&a.beta)?);
    let val = ctx.valuation(&a.valuation)?;
    Ok(if second {
        rule_outcome(
            local_reasoning_ii(sigma, pi, val, &alpha, &beta, a.audit)?,
            "local reasoning rule II",
        )
    } else {
        rule_outcome(
            local_reasoning_i(sigma, pi, val, &alpha, &beta, a.audit)?,
            "local reasoning rule I",
        )
    })
}

fn rule3(ctx: &Ctx, a: &Rule3) -> Result<Outcome> {
    let (f, g) = (ctx.system(&a.f)?, ctx.system(&a.g)?);
    let (alpha, beta) = (ctx.formula(&a.alpha)?, ctx.formula(&a.beta)?);
    let rep = local_reasoning_iii(&f, &g, ctx.valuation(&a.valuation)?, &alpha, &beta, &ctx.limits, a.audit)?;
    Ok(rule_outcome(rep, "local reasoning rule III"))
}

fn frame(ctx: &Ctx, a: &Frame) -> Result<Outcome> {
    let (g, h) = (ctx.system(&a.g)?, ctx.system(&a.h)?);
    let beta = ctx.formula(&a.beta)?;
    let rep = frame_rule(&g, &h, ctx.valuation(&a.valuation)?, &beta, &ctx.limits, a.audit)?;
    Ok(rule_outcome(rep, "the frame rule"))
}

fn hm(ctx: &Ctx, a: &Hm) -> Result<Outcome> {
    let (f, g) = (ctx.system(&a.left)?, ctx.system(&a.right)?);
    let val = ctx.valuation(&a.valuation)?;
    let (x, y) = (Behaviour::new(&a.x), Behaviour::new(&a.y));
    let flavour = match a.flavour {
        Flavour::Elementary => HmFlavour::Elementary,
        Flavour::Boxed => HmFlavour::Boxed,
    };
    let eq = hm_equivalent(&f, &g, &x, &y, val, flavour)?;
    let (tf, tg) = (compute_types(&f, val)?, compute_types(&g, val)?);
    Ok(Outcome::new(
        eq,
        json!({
            "flavour": a.flavour,
            "tp_x": tf.tp[f.require_index(&x)?],
            "tp_y": tg.tp[g.require_index(&y)?],
            "same_tps": tf.tps == tg.tps,
        }),
        "pointed systems agree on all formulas iff their types agree",
    ))
}

fn types(ctx: &Ctx, a: &Types) -> Result<Outcome> {
    let f = ctx.system(&a.system)?;
    let ts = compute_types(&f, ctx.valuation(&a.valuation)?)?;
    let tp: Vec<Value> = (0..f.len())
        .map(|x| json!({"behaviour": f.behaviour(x), "tp": ts.tp[x]}))
        .collect();
    Ok(Outcome::new(
        true,
        json!({"system": f.name(), "tp": tp, "tps": ts.tps}),
        "the type of a behaviour is the set of variables true at it",
    ))
}

fn guarantee(ctx: &Ctx, a: &GuaranteeCmd) -> Result<Outcome> {
    let g = ctx.model()?.guarantee(&a.guarantee)?;
    const CITE: &str = "an implementation meets a guarantee when its image lies in the family";
    match (&a.subset, &a.implementation) {
        (Some(s), _) => {
            let set = subset_of(g.system(), s)?;
            let holds = guarantee_satisfied(&set, g)?;
            Ok(Outcome::new(
                holds,
                json!({"system": g.system().name(), "subset": names(g.system(), set.ones())}),
                CITE,
            ))
        }
        (None, Some(i)) => {
            let sigma = ctx.implementation(i)?;
            let holds = implementation_satisfies(sigma, g)?;
            Ok(Outcome::new(
                holds,
                json!({"implementation": i, "image": names(g.system(), sigma.image().ones())}),
                CITE,
            ))
        }
        (None, None) => Err(Error::Argument("give --subset or --impl".into())),
    }
}

const CAP_CITE: &str = "generalized CAP theorem: entanglement rules out meeting all three guarantee groups";

fn cap_provenance(inst: &CapInstance) -> Value {
    json!({
        "system": inst.f.name(),
        "behaviours": inst.f.len(),
        "pairing": inst.pairing,
        "anchors": inst.anchors.as_ref().map(|a| names(&inst.f, a.ones())),
    })
}

fn cap_cmd(ctx: &Ctx, a: &CapCmd, mode: &str) -> Result<Outcome> {
    let inst = ctx.cap(&a.cap)?;
    let out = match mode {
        "entangle" => {
            let rep = is_entangled(inst);
            Outcome::new(rep.entangled, to_value(&rep), CAP_CITE)
        }
        "exhaustive" => {
            let rep = cap_verify_exhaustive(inst, &ctx.limits)?;
            Outcome::new(rep.verdict, to_value(&rep), CAP_CITE)
        }
        _ => {
            let seed = match &a.seed {
                Some(s) => Behaviour::new(s),
                None => {
                    let first = match &inst.anchors {
                        Some(set) => set.ones().next(),
                        None => (!inst.f.is_empty()).then_some(0),
                    };
                    let x = first.ok_or_else(|| Error::Argument("no seed behaviour available".into()))?;
                    inst.f.behaviour(x).clone()
                }
            };
            let rep = cap_verify_closure(inst, &seed, &ctx.limits)?;
            Outcome::new(rep.verdict, to_value(&rep), CAP_CITE)
        }
    };
    Ok(out.with("cap", cap_provenance(inst)))
}

fn scenario_cfg(ctx: &Ctx, a: &Scenario) -> Result<ScenarioConfig> {
    if let Some(name) = &a.scenario {
        return Ok(ctx.model()?.scenario(name)?.clone());
    }
    let split = |s: &Option<String>| -> Vec<String> {
        s.as_deref()
            .unwrap_or_default()
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect()
    };
    scenario_config(&ScenarioDecl {
        timestamps: split(&a.timestamps),
        values: split(&a.values),
        initial: a.initial.clone(),
        max_length: a.max_len,
        allow: a.allow.as_ref().map(|_| split(&a.allow)),
    })
}

fn scenario_gen(ctx: &Ctx, a: &Scenario) -> Result<Outcome> {
    let cfg = scenario_cfg(ctx, a)?;
    let sc = generate_scenario(&cfg, &ctx.limits)?;
    let mut details = json!({"stats": sc.stats()});
    if a.list {
        details["traces"] = to_value(&sc.traces());
    }
    Ok(Outcome::new(true, details, "classical CAP as an instance of the generalized theorem")
        .with("scenario", to_value(&cfg)))
}

fn scenario_verify(ctx: &Ctx, a: &Scenario) -> Result<Outcome> {
    let cfg = scenario_cfg(ctx, a)?;
    let rep = verify_appendix(&cfg, &ctx.limits)?;
    Ok(Outcome::new(
        rep.verdict,
        to_value(&rep),
        "classical CAP as an instance of the generalized theorem",
    )
    .with("scenario", to_value(&cfg)))
}

fn timed_order(ctx: &Ctx, a: &Timed) -> Result<Outcome> {
    let t = ctx.model()?.timed_implementation(&a.timed)?;
    let validation = validate_timed(t);
    let ord = derived_order(t);
    let pairs: Vec<[String; 2]> = ord
        .pairs()
        .iter()
        .map(|(x, y)| [x.to_string(), y.to_string()])
        .collect();
    Ok(Outcome::new(
        validation.valid,
        json!({
            "validation": validation,
            "order": pairs,
            "reflexive": ord.is_reflexive(),
            "transitive": ord.is_transitive(),
            "classes": ord.preorder_classes(),
            "minimal": minimal_behaviours(t),
        }),
        "a timed implementation orders behaviours by their observations",
    ))
}

fn fixtures(ctx: &Ctx, a: &Fixtures) -> Result<Outcome> {
    let selected: Vec<&str> = match &a.name {
        Some(n) => vec![super::fixtures::fixture(n)?.name],
        None => FIXTURES.iter().map(|f| f.name).collect(),
    };
    let mut all = true;
    let mut details = Map::new();
    for name in selected {
        let checks = run_checks(name, &ctx.limits)?;
        all &= checks.iter().all(|c| c.holds);
        details.insert(name.to_string(), to_value(&checks));
    }
    Ok(Outcome::new(all, Value::Object(details), "documented fixture checks"))
}

fn run(ctx: &Ctx, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::CheckImpl(a) => check_impl(ctx, a),
        Command::Compose(a) => compose(ctx, a),
        Command::CheckFree(a) => check_free(ctx, a),
        Command::Equiv(a) => equiv(ctx, a),
        Command::Eval(a) => eval(ctx, a, a.all || a.behaviour.is_none()),
        Command::Valid(a) => eval(ctx, a, true),
        Command::Rule1(a) => local_rule(ctx, a, false),
        Command::Rule2(a) => local_rule(ctx, a, true),
        Command::Rule3(a) => rule3(ctx, a),
        Command::Frame(a) => frame(ctx, a),
        Command::Hm(a) => hm(ctx, a),
        Command::Types(a) => types(ctx, a),
        Command::Guarantee(a) => guarantee(ctx, a),
        Command::Entangle(a) => cap_cmd(ctx, a, "entangle"),
        Command::CapExhaustive(a) => cap_cmd(ctx, a, "exhaustive"),
        Command::CapClosure(a) => cap_cmd(ctx, a, "closure"),
        Command::ScenarioGen(a) => scenario_gen(ctx, a),
        Command::ScenarioVerify(a) => scenario_verify(ctx, a),
        Command::TimedOrder(a) => timed_order(ctx, a),
        Command::Fixtures(a) => fixtures(ctx, a),
    }
}

fn echo(cmd: &Command) -> (String, Map<String, Value>) {
    let (name, v) = match cmd {
        Command::CheckImpl(a) => ("check-impl", to_value(a)),
        Command::Compose(a) => ("compose", to_value(a)),
        Command::CheckFree(a) => ("check-free", to_value(a)),
        Command::Equiv(a) => ("equiv", to_value(a)),
        Command::Eval(a) => ("eval", to_value(a)),
        Command::Valid(a) => ("valid", to_value(a)),
        Command::Rule1(a) => ("rule-1", to_value(a)),
        Command::Rule2(a) => ("rule-2", to_value(a)),
        Command::Rule3(a) => ("rule-3", to_value(a)),
        Command::Frame(a) => ("frame", to_value(a)),
        Command::Hm(a) => ("hm", to_value(a)),
        Command::Types(a) => ("types", to_value(a)),
        Command::Guarantee(a) => ("guarantee", to_value(a)),
        Command::Entangle(a) => ("entangle", to_value(a)),
        Command::CapExhaustive(a) => ("cap-exhaustive", to_value(a)),
        Command::CapClosure(a) => ("cap-closure", to_value(a)),
        Command::ScenarioGen(a) => ("scenario-gen", to_value(a)),
        Command::ScenarioVerify(a) => ("scenario-verify", to_value(a)),
        Command::TimedOrder(a) => ("timed-order", to_value(a)),
        Command::Fixtures(a) => ("fixtures", to_value(a)),
    };
    // unset options and false switches are left out
    let args = match v {
        Value::Object(m) => m
            .into_iter()
            .filter(|(_, x)| !x.is_null() && *x != Value::Bool(false))
            .collect(),
        _ => Map::new(),
    };
    (name.to_string(), args)
}

/// Runs one command. `argv` includes the program name. Returns the exit
/// code (0 true, 1 false, 2 usage or validation error) and the text for
/// standard output.
pub fn cli_dispatch<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            return (code, e.render().to_string());
        }
    };
    let limits = Limits::from_env();
    let (command, mut args) = echo(&cli.command);
    if let Some(m) = &cli.model {
        args.insert("model".into(), json!(m));
    }
    let result = cli
        .model
        .as_ref()
        .map(|src| load(src, &limits).map(|m| (src.clone(), m)))
        .transpose()
        .and_then(|model| {
            let ctx = Ctx { model, limits };
            run(&ctx, &cli.command).map(|o| (o, ctx.model.map(|(s, _)| s)))
        });
    let report = match result {
        Ok((o, source)) => {
            let mut provenance = o.provenance;
            provenance.insert("model".into(), json!(source));
            provenance.insert("limits".into(), to_value(&limits));
            Report {
                command,
                args,
                verdict: Some(o.verdict),
                details: o.details,
                citations: o.citations.into_iter().map(String::from).collect(),
                provenance: Value::Object(provenance),
            }
        }
        Err(e) => Report::error(&command, args, &e),
    };
    let text = if cli.pretty {
        render_pretty(&report)
    } else {
        report.to_json()
    };
    (report.exit_code(), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, Value) {
        let mut argv = vec!["bsm"];
        argv.extend_from_slice(args);
        let (code, text) = cli_dispatch(argv);
        (code, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    #[test]
    fn temperature_conclusion_through_eval() {
        let (code, r) = run(&[
            "eval", "--model", "fixture:temperature", "--system", "g⊗h", "--formula", "d::p_d", "--all",
        ]);
        assert_eq!(code, 0, "{r}");
        assert_eq!(r["verdict"], json!(true));
        assert_eq!(r["details"]["failing"], json!([]));
    }

    #[test]
    fn toy_without_relations_exits_one() {
        let (code, r) = run(&["cap-exhaustive", "--model", "fixture:cap_toy", "--cap", "loose"]);
        assert_eq!(code, 1);
        assert_eq!(r["verdict"], json!(false));
    }

    #[test]
    fn usage_and_validation_errors_exit_two() {
        let (code, r) = run(&["frobnicate"]);
        assert_eq!(code, 2);
        assert!(r.as_str().unwrap().contains("Usage"));
        let (code, r) = run(&["eval", "--system", "f", "--formula", "c::p"]);
        assert_eq!(code, 2);
        assert_eq!(r["details"]["error"]["kind"], json!("argument"));
        let (code, _) = run(&["--help"]);
        assert_eq!(code, 0);
    }
}
