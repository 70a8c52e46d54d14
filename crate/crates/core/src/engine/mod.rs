//! Trace replay. Each event runs through structural preconditions, the
//! deontic evaluator, obligation ticking and role collection, and leaves a
//! [`StepResult`] in the report.

mod report;

pub use report::{explain, RunReport, StepResult, Summary};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::deontic::{ObligationLedger, Outcome, Verdict};
use crate::ids::{AspectId, ContextId, EntityId, RoleId, RoleType, WarrantId};
use crate::metamodel::{EntityKind, Model, ModelError, Violation, WarrantScope};
use crate::patterns::{self, ActOptions, Blocklist, Instantiation, OffensivePredicate, ReserveBook, TemplateName};
use crate::verb::Verb;

/// One line of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    /// A role id, an aspect id, or an entity id, depending on the verb.
    pub actor: String,
    pub verb: Verb,
    pub args: Vec<String>,
}

impl Event {
    pub fn new(seq: u64, actor: &str, verb: Verb, args: &[&str]) -> Self {
        Self {
            seq,
            actor: actor.to_owned(),
            verb,
            args: args.iter().map(|a| (*a).to_owned()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("initial model is invalid ({} violation(s))", .0.len())]
    InvalidInitialModel(Vec<Violation>),
    #[error("event {found} out of sequence, expected {expected}")]
    SequenceGap { expected: u64, found: u64 },
}

#[derive(Clone)]
pub struct EngineConfig {
    /// Apply forbidden actions anyway, recording the verdicts.
    pub monitor: bool,
    pub offensive: Arc<dyn OffensivePredicate>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            monitor: false,
            offensive: Arc::new(Blocklist::parse(patterns::DEFAULT_BLOCKLIST)),
        }
    }
}

impl fmt::Debug for EngineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineConfig")
            .field("monitor", &self.monitor)
            .field("offensive", &self.offensive)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct EngineState {
    pub model: Model,
    pub counter: u64,
    pub ledger: ObligationLedger,
    pub reserve: ReserveBook,
    pub results: Vec<StepResult>,
    config: EngineConfig,
}

/// Starts a run on a model that passes [`crate::check`].
pub fn init(model: Model, config: EngineConfig) -> Result<EngineState, EngineError> {
    let violations = patterns::check(&model);
    if !violations.is_empty() {
        return Err(EngineError::InvalidInitialModel(violations));
    }
    Ok(EngineState {
        model,
        counter: 0,
        ledger: ObligationLedger::new(),
        reserve: ReserveBook::default(),
        results: Vec::new(),
        config,
    })
}

/// Value-passing form of [`EngineState::step`].
pub fn step(mut state: EngineState, event: &Event) -> Result<(EngineState, StepResult), EngineError> {
    let result = state.step(event)?.clone();
    Ok((state, result))
}

/// Replays a whole trace.
pub fn run(model: Model, trace: &[Event], config: EngineConfig) -> Result<RunReport, EngineError> {
    let mut state = init(model, config)?;
    for event in trace {
        state.step(event)?;
    }
    Ok(state.report())
}

/// What a dispatched event produced before bookkeeping.
struct Dispatched {
    verdict: Verdict,
    /// Role charged with any triggered obligation.
    obligor: Option<RoleId>,
    delta: Vec<String>,
    collect: bool,
}

impl Dispatched {
    fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            obligor: None,
            delta: Vec::new(),
            collect: false,
        }
    }

    fn by(verdict: Verdict, obligor: &RoleId) -> Self {
        Self {
            verdict,
            obligor: Some(obligor.clone()),
            delta: Vec::new(),
            collect: false,
        }
    }

    fn created(mut self, id: Option<impl fmt::Display>) -> Self {
        if let Some(id) = id {
            self.delta.push(format!("+{id}"));
        }
        self
    }
}

#[derive(Debug)]
struct Structural(String);

impl<E: std::error::Error> From<E> for Structural {
    fn from(e: E) -> Self {
        Structural(e.to_string())
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T, Structural> {
    Err(Structural(msg.into()))
}

impl EngineState {
    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    fn opts(&self) -> ActOptions {
        ActOptions {
            at: self.counter,
            monitor: self.config.monitor,
        }
    }

    /// Processes the next event. Rejects out-of-sequence events without
    /// touching the state.
    pub fn step(&mut self, event: &Event) -> Result<&StepResult, EngineError> {
        let expected = self.counter + 1;
        if event.seq != expected {
            return Err(EngineError::SequenceGap {
                expected,
                found: event.seq,
            });
        }
        self.counter = event.seq;

        let mut violations = Vec::new();
        let mut delta = Vec::new();
        let verdict = match self.dispatch(event) {
            Ok(d) => {
                if d.verdict.outcome == Outcome::Permit {
                    if let Some(obligor) = &d.obligor {
                        for t in &d.verdict.obligations_triggered {
                            for b in self.ledger.trigger(&t.rule, obligor, self.counter, t.deadline) {
                                violations.push(report::describe_breach(&b));
                            }
                        }
                    }
                }
                if d.collect {
                    for role in self.model.gc_roles() {
                        delta.push(format!("-{role}"));
                    }
                }
                delta.extend(d.delta);
                d.verdict
            }
            Err(Structural(msg)) => {
                violations.push(msg);
                Verdict::structural_error()
            }
        };

        for b in self.ledger.tick(self.counter) {
            violations.push(report::describe_breach(&b));
        }
        let gone: Vec<RoleId> = self
            .ledger
            .pending
            .iter()
            .map(|e| e.obligor.clone())
            .filter(|r| self.model.role(r).is_none())
            .collect();
        for role in gone {
            for b in self.ledger.breach_obligor(&role) {
                violations.push(report::describe_breach(&b));
            }
        }

        self.results.push(StepResult {
            seq: event.seq,
            verb: event.verb,
            actor: event.actor.clone(),
            outcome: verdict.outcome,
            chain: verdict.chain,
            violations,
            delta,
        });
        Ok(self.results.last().expect("just pushed"))
    }

    /// The role an actor token stands for: a role id, or the single role
    /// enacted by an aspect.
    fn actor_role(&self, token: &str) -> Result<RoleId, Structural> {
        let id = RoleId::new(token);
        if self.model.role(&id).is_some() {
            return Ok(id);
        }
        let aspect = AspectId::new(token);
        if self.model.aspect(&aspect).is_none() {
            return fail(format!("unknown actor `{token}`"));
        }
        let held: Vec<&RoleId> = self
            .model
            .roles()
            .filter(|r| r.enactor.as_ref() == Some(&aspect))
            .map(|r| &r.id)
            .collect();
        match held.as_slice() {
            [one] => Ok((*one).clone()),
            [] => fail(format!("aspect `{token}` enacts no role")),
            _ => fail(format!("aspect `{token}` enacts several roles; name the role")),
        }
    }

    fn actor_aspect(&self, token: &str) -> Result<AspectId, Structural> {
        let id = AspectId::new(token);
        if self.model.aspect(&id).is_none() {
            return fail(format!("unknown aspect `{token}`"));
        }
        Ok(id)
    }

    fn actor_entity(&self, token: &str) -> Result<EntityId, Structural> {
        let id = EntityId::new(token);
        if self.model.entity(&id).is_none() {
            return fail(format!("unknown entity `{token}`"));
        }
        Ok(id)
    }

    fn dispatch(&mut self, event: &Event) -> Result<Dispatched, Structural> {
        let (min, max) = event.verb.arity();
        let n = event.args.len();
        if n < min || max.is_some_and(|m| n > m) {
            return fail(format!(
                "`{}` takes {min}..{} argument(s), got {n}",
                event.verb,
                max.map_or("*".to_owned(), |m| m.to_string())
            ));
        }
        let args: Vec<&str> = event.args.iter().map(String::as_str).collect();
        let arg = |i: usize| args.get(i).copied();
        let opts = self.opts();
        let actor = event.actor.as_str();

        let out = match event.verb {
            Verb::CreateEntity => {
                let kind: EntityKind = args[1]
                    .parse()
                    .map_err(|_| Structural(format!("unknown entity kind `{}`", args[1])))?;
                let id = EntityId::new(args[0]);
                let owner = arg(2).map(EntityId::new);
                self.model.create_entity_as(id.clone(), kind, owner.as_ref())?;
                Dispatched::new(Verdict::permit()).created(Some(id))
            }
            Verb::DisplayAspect => {
                let entity = self.actor_entity(actor)?;
                let id = AspectId::new(args[0]);
                self.model
                    .display_aspect_as(&entity, id.clone(), arg(1).unwrap_or(""))?;
                Dispatched::new(Verdict::permit()).created(Some(id))
            }
            Verb::Enact => {
                let aspect = self.actor_aspect(actor)?;
                let (verdict, role) = patterns::enact(
                    &mut self.model,
                    &aspect,
                    &ContextId::new(args[0]),
                    &RoleType::new(args[1]),
                    opts,
                )?;
                Dispatched::new(verdict).created(role)
            }
            Verb::Relinquish => {
                let role = RoleId::new(args[0]);
                let held = self
                    .model
                    .role(&role)
                    .ok_or_else(|| Structural(format!("unknown role `{role}`")))?;
                if actor != role.as_str() && held.enactor.as_ref().map(AspectId::as_str) != Some(actor) {
                    return fail(format!("`{actor}` does not hold `{role}`"));
                }
                let verdict = patterns::relinquish(&mut self.model, &role, opts)?;
                let removed = self.model.role(&role).is_none().then(|| format!("-{role}"));
                let mut d = Dispatched::new(verdict);
                d.delta.extend(removed);
                d
            }
            Verb::Instantiate => {
                let template: TemplateName = args[1]
                    .parse()
                    .map_err(|_| Structural(format!("unknown template `{}`", args[1])))?;
                let mut inst = Instantiation::new(args[0], template, args[2]);
                for extra in &args[3..] {
                    let Some((key, value)) = extra.split_once('=') else {
                        return fail(format!("expected Role=aspects or key=value, found `{extra}`"));
                    };
                    if key.starts_with(|c: char| c.is_ascii_uppercase()) {
                        let aspects = value.split(',').filter(|a| !a.is_empty()).map(AspectId::new).collect();
                        inst.bindings.push((RoleType::new(key), aspects));
                    } else {
                        inst.params.insert(key.to_owned(), value.to_owned());
                    }
                }
                let id = patterns::instantiate(&mut self.model, &inst)?;
                Dispatched::new(Verdict::permit()).created(Some(id))
            }
            Verb::DestroyContext => {
                let entity = self.actor_entity(actor)?;
                let ctx_id = ContextId::new(args[0]);
                let ctx = self
                    .model
                    .context(&ctx_id)
                    .ok_or_else(|| Structural(format!("unknown context `{ctx_id}`")))?;
                let embodier = &ctx.embodied_by;
                let entitled =
                    &entity == embodier || self.model.entity(&entity).is_some_and(|e| e.owns.contains(embodier));
                let verdict = if entitled { Verdict::permit() } else { Verdict::deny() };
                let mut d = Dispatched::new(verdict);
                if opts.monitor || entitled {
                    self.model.destroy_context(&ctx_id)?;
                    d.delta.push(format!("-{ctx_id}"));
                    d.collect = true;
                }
                d
            }
            Verb::Introspect | Verb::Intrude | Verb::Observe | Verb::Surveil | Verb::Compel | Verb::AccessAsset => {
                let role = self.actor_role(actor)?;
                let verdict = patterns::act(&mut self.model, &role, event.verb, arg(0), opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::Control => {
                let role = self.actor_role(actor)?;
                let verdict = patterns::control(&mut self.model, &role, args[0], arg(1), opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::ClaimSolitude => {
                let aspect = self.actor_aspect(actor)?;
                let id = patterns::claim_solitude(
                    &mut self.model,
                    &aspect,
                    &ContextId::new(args[0]),
                    ContextId::new(args[1]),
                )?;
                Dispatched::new(Verdict::permit()).created(Some(id))
            }
            Verb::Invite => {
                let role = self.actor_role(actor)?;
                let verdict = patterns::invite(&mut self.model, &role, &AspectId::new(args[0]), args[1], opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::Join => {
                let aspect = self.actor_aspect(actor)?;
                let (verdict, role) = patterns::join(&mut self.model, &aspect, &ContextId::new(args[0]), arg(1), opts)?;
                let obligor = role.clone();
                let mut d = Dispatched::new(verdict).created(role);
                d.obligor = obligor;
                d
            }
            Verb::DepositSecret => {
                let role = self.actor_role(actor)?;
                let (verdict, secret) =
                    patterns::deposit_secret(&mut self.model, &role, &EntityId::new(args[0]), opts)?;
                Dispatched::by(verdict, &role).created(secret)
            }
            Verb::Reveal => {
                let role = self.actor_role(actor)?;
                let secret = arg(1).map(RoleId::new);
                let verdict = patterns::reveal(&mut self.model, &role, args[0], secret.as_ref(), opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::CreateAnon => {
                let role = self.actor_role(actor)?;
                let (verdict, anon) = patterns::create_anon(&mut self.model, &role, arg(0), opts)?;
                Dispatched::by(verdict, &role).created(anon)
            }
            Verb::Publish => {
                let role = self.actor_role(actor)?;
                let predicate = Arc::clone(&self.config.offensive);
                let (verdict, property) = patterns::publish(
                    &mut self.model,
                    &mut self.reserve,
                    &role,
                    args[0],
                    predicate.as_ref(),
                    opts,
                )?;
                Dispatched::by(verdict, &role).created(property)
            }
            Verb::Sanction => {
                let role = self.actor_role(actor)?;
                let verdict =
                    patterns::sanction(&mut self.model, &mut self.reserve, &role, &RoleId::new(args[0]), opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::Appeal => {
                let role = self.actor_role(actor)?;
                let verdict = patterns::appeal(&mut self.model, &mut self.reserve, &role, opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::AuthenticateAnonym => {
                let challenger = self.actor_aspect(actor)?;
                let ok = patterns::authenticate_anonym(&self.model, &RoleId::new(args[0]), &challenger, arg(1))?;
                Dispatched::new(if ok { Verdict::permit() } else { Verdict::deny() })
            }
            Verb::Disclose => {
                let role = self.actor_role(actor)?;
                let verdict = patterns::disclose(&mut self.model, &role, &RoleId::new(args[0]), args[1], arg(2), opts)?;
                Dispatched::by(verdict, &role)
            }
            Verb::ResolveEntity => {
                let requester = self.actor_entity(actor)?;
                let warrant = arg(1).map(WarrantId::new);
                match self
                    .model
                    .resolve_entity(&AspectId::new(args[0]), &requester, warrant.as_ref(), self.counter)
                {
                    Ok(_) => Dispatched::new(Verdict::permit()),
                    Err(ModelError::LinkageDenied { .. }) => Dispatched::new(Verdict::deny()),
                    Err(e) => return Err(e.into()),
                }
            }
            Verb::GrantWarrant => {
                let issuer = self.actor_entity(actor)?;
                let scope = WarrantScope::parse(args[2])
                    .ok_or_else(|| Structural(format!("unknown warrant scope `{}`", args[2])))?;
                let mut context = None;
                let mut expiry = None;
                for extra in &args[3..] {
                    match extra.parse::<u64>() {
                        Ok(n) if expiry.is_none() => expiry = Some(n),
                        Ok(_) => return fail("more than one expiry given"),
                        Err(_) if context.is_none() && expiry.is_none() => context = Some(ContextId::new(*extra)),
                        Err(_) => return fail(format!("unexpected argument `{extra}`")),
                    }
                }
                let id = WarrantId::new(args[0]);
                self.model.grant_warrant_as(
                    id.clone(),
                    &issuer,
                    &EntityId::new(args[1]),
                    scope,
                    context.as_ref(),
                    expiry,
                )?;
                Dispatched::new(Verdict::permit()).created(Some(id))
            }
        };
        Ok(out)
    }

    pub fn report(&self) -> RunReport {
        let mut summary = Summary::default();
        for r in &self.results {
            match r.outcome {
                Outcome::Permit => summary.permits += 1,
                Outcome::Forbid => summary.forbids += 1,
                Outcome::StructuralError => summary.structural_errors += 1,
            }
        }
        summary.breaches = self.ledger.breached.len();
        summary.final_violations = patterns::check(&self.model);
        RunReport {
            events: self.results.clone(),
            obligations: self.ledger.clone(),
            audit: self.model.linkage().audit().to_vec(),
            summary,
        }
    }
}
