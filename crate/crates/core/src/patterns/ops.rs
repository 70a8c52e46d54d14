//! Pattern operations. Each one checks its structural preconditions first
//! (an `Err` leaves the model untouched), then asks the deontic evaluator,
//! then applies its effect when the verdict permits it, or always in
//! monitor mode.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    capabilities, check_conformance, check_param, multiplicity, param_or_default, template, OffensivePredicate,
    TemplateName,
};
use crate::deontic::{evaluate, ActionRequest, Condition, DeonticError, Outcome, Verdict};
use crate::ids::{AspectId, ContextId, EntityId, RoleId, RoleType};
use crate::metamodel::{
    ContextInstance, EntityKind, Model, ModelError, RoleInstance, TokenGrant, Violation, WarrantScope,
};
use crate::verb::Verb;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Deontic(#[from] DeonticError),
    #[error("context `{0}` has no enacted guarantor")]
    NoGuarantor(ContextId),
    #[error("`{0}` is not an intimate")]
    NotAnIntimate(RoleId),
    #[error("`{0}` is not a public figure")]
    NotAPublicFigure(RoleId),
    #[error("`{0}` is not an anon")]
    NotAnAnon(RoleId),
    #[error("`{role}` is not a {expected}")]
    WrongRole { role: RoleId, expected: &'static str },
    #[error("context `{context}` is not a {expected} context")]
    WrongTemplate { context: ContextId, expected: TemplateName },
    #[error("`{aspect}` already holds a `{role_type}` role in `{context}`")]
    AlreadyMember {
        aspect: AspectId,
        context: ContextId,
        role_type: RoleType,
    },
    #[error("{role_type} in `{context}`: {count} role(s), expected {min}..{}", max.map_or("*".to_owned(), |m| m.to_string()))]
    MultiplicityViolation {
        context: ContextId,
        role_type: RoleType,
        count: usize,
        min: usize,
        max: Option<usize>,
    },
    #[error("parameter `{key}`: {message}")]
    ParamError { key: String, message: String },
    #[error("trustee `{0}` of a legal trust must be enacted by a legal actor")]
    LegalActorRequired(AspectId),
    #[error("entity `{0}` is not owned by any intimate")]
    SecretNotOwnedByIntimate(EntityId),
    #[error("governor `{0}` of a public sphere must be a judicial authority")]
    GovernorNotJudicial(AspectId),
    #[error("anon `{0}` is not aliased to a public figure of its sphere")]
    UnaliasedAnon(RoleId),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("token `{0}` is already in use")]
    DuplicateToken(String),
    #[error("context `{0}` has no governor")]
    NoGovernor(ContextId),
    #[error("{template} has no role type `{role_type}`")]
    UnknownRoleType {
        template: TemplateName,
        role_type: RoleType,
    },
    #[error("{template} role `{role_type}` cannot be taken with enact")]
    NotEnactable {
        template: TemplateName,
        role_type: RoleType,
    },
    #[error("role `{role}` is not part of context `{context}`")]
    NotInContext { role: RoleId, context: ContextId },
    #[error("{0}")]
    Conformance(Violation),
}

/// Where and how an action happens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActOptions {
    /// Event sequence number.
    pub at: u64,
    /// Apply forbidden actions too, recording only the verdict.
    pub monitor: bool,
}

impl ActOptions {
    pub fn at(seq: u64) -> Self {
        Self {
            at: seq,
            monitor: false,
        }
    }

    fn applies(&self, verdict: &Verdict) -> bool {
        verdict.outcome == Outcome::Permit || (self.monitor && verdict.outcome == Outcome::Forbid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SanctionRecord {
    pub seq: u64,
    pub society: RoleId,
    pub target: RoleId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AppealRecord {
    pub seq: u64,
    pub figure: RoleId,
    pub governor: RoleId,
}

/// Reserve bookkeeping of public spheres: publication breaches, sanctions
/// and appeals. Kept beside the model, keyed by role so that naming and
/// shaming touches the persona only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReserveBook {
    pub breaches: BTreeMap<RoleId, Vec<u64>>,
    pub sanctions: Vec<SanctionRecord>,
    pub appeals: Vec<AppealRecord>,
}

impl ReserveBook {
    pub fn has_breach(&self, role: &RoleId) -> bool {
        self.breaches.get(role).is_some_and(|b| !b.is_empty())
    }
}

/// Blueprint for a new context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiation {
    pub id: ContextId,
    pub template: TemplateName,
    pub embodied_by: EntityId,
    /// Bound in order; role ids are numbered per type in binding order.
    pub bindings: Vec<(RoleType, Vec<AspectId>)>,
    pub params: BTreeMap<String, String>,
}

impl Instantiation {
    pub fn new(id: impl Into<ContextId>, template: TemplateName, embodied_by: impl Into<EntityId>) -> Self {
        Self {
            id: id.into(),
            template,
            embodied_by: embodied_by.into(),
            bindings: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn bind(mut self, role_type: &str, aspects: &[&str]) -> Self {
        self.bindings.push((
            RoleType::new(role_type),
            aspects.iter().map(|a| AspectId::new(*a)).collect(),
        ));
        self
    }

    pub fn param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_owned(), value.to_owned());
        self
    }
}

/// Builds the context without checking anything beyond id uniqueness.
/// Bundled rules missing from the model are registered.
pub(crate) fn build_context(model: &mut Model, inst: &Instantiation) -> Result<ContextId, ModelError> {
    if model.context(&inst.id).is_some() {
        return Err(ModelError::DuplicateId {
            namespace: "context",
            id: inst.id.to_string(),
        });
    }
    let mut ctx = ContextInstance::bare(inst.id.clone(), inst.template, inst.embodied_by.clone());
    ctx.params = inst.params.clone();
    model.insert_context(ctx);
    if model.entity(&inst.embodied_by).is_some_and(|e| e.embodies.is_none()) {
        model.tamper().set_embodies(&inst.embodied_by, Some(inst.id.clone()));
    }
    for (role_type, aspects) in &inst.bindings {
        for aspect in aspects {
            model.bind_role(&inst.id, role_type, Some(aspect.clone()))?;
        }
    }
    let anons: Vec<RoleId> = model
        .roles_in(&inst.id)
        .filter(|r| r.role_type.is(RoleType::ANON))
        .map(|r| r.id.clone())
        .collect();
    for anon in anons {
        if let Some(figure) = figure_for_anon(model, &inst.id, &anon) {
            model.aliases.bind(anon, figure, None);
        }
    }
    for rule in template(inst.template).bundled {
        if !model.rules().contains(&rule.id) {
            model.rules_mut().insert_unchecked(rule);
        }
    }
    Ok(inst.id.clone())
}

/// The public figure of the same sphere whose enactor belongs to the same
/// entity as the anon's enactor; lowest role id first.
fn figure_for_anon(model: &Model, ctx: &ContextId, anon: &RoleId) -> Option<RoleId> {
    let entity = model
        .role(anon)?
        .enactor
        .as_ref()
        .and_then(|a| model.entity_behind(a))?
        .clone();
    model
        .roles_in(ctx)
        .filter(|r| r.role_type.is(RoleType::PUBLIC_FIGURE))
        .find(|r| r.enactor.as_ref().and_then(|a| model.entity_behind(a)) == Some(&entity))
        .map(|r| r.id.clone())
}

fn conformance_error(v: Violation) -> PatternError {
    match v {
        Violation::Multiplicity {
            context,
            role_type,
            count,
            min,
            max,
        } => PatternError::MultiplicityViolation {
            context,
            role_type,
            count,
            min,
            max,
        },
        Violation::ParamError { key, message, .. } => PatternError::ParamError { key, message },
        other => PatternError::Conformance(other),
    }
}

/// Creates a context from a template after checking the blueprint against
/// the template's multiplicities, parameter schema and special constraints.
pub fn instantiate(model: &mut Model, inst: &Instantiation) -> Result<ContextId, PatternError> {
    let embodier = model
        .entity(&inst.embodied_by)
        .ok_or_else(|| ModelError::UnknownEntity(inst.embodied_by.clone()))?;
    if let Some(existing) = &embodier.embodies {
        return Err(ModelError::AlreadyEmbodied {
            entity: inst.embodied_by.clone(),
            context: existing.clone(),
        }
        .into());
    }
    for (key, value) in &inst.params {
        check_param(inst.template, key, value).map_err(|message| PatternError::ParamError {
            key: key.clone(),
            message,
        })?;
    }
    let t = template(inst.template);
    for (role_type, aspects) in &inst.bindings {
        if inst.template != TemplateName::Generic && t.role(role_type.as_str()).is_none() {
            return Err(PatternError::UnknownRoleType {
                template: inst.template,
                role_type: role_type.clone(),
            });
        }
        for aspect in aspects {
            if model.aspect(aspect).is_none() {
                return Err(ModelError::UnknownAspect(aspect.clone()).into());
            }
        }
    }
    let mut next = model.clone();
    let id = build_context(&mut next, inst)?;
    let ctx = next.context(&id).expect("just built");
    if let Some(v) = check_conformance(&next, ctx).into_iter().next() {
        return Err(match v {
            Violation::LegalActorRequired { role, .. } => PatternError::LegalActorRequired(
                next.role(&role)
                    .and_then(|r| r.enactor.clone())
                    .unwrap_or_else(|| AspectId::new(role.as_str())),
            ),
            Violation::GovernorNotJudicial { role, .. } => PatternError::GovernorNotJudicial(
                next.role(&role)
                    .and_then(|r| r.enactor.clone())
                    .unwrap_or_else(|| AspectId::new(role.as_str())),
            ),
            Violation::SecretNotOwnedByIntimate { role, .. } => {
                let entity = next
                    .role(&role)
                    .and_then(|r| r.enactor.as_ref())
                    .and_then(|a| next.entity_behind(a))
                    .cloned()
                    .unwrap_or_else(|| EntityId::new(role.as_str()));
                PatternError::SecretNotOwnedByIntimate(entity)
            }
            Violation::UnaliasedAnon { role, .. } => PatternError::UnaliasedAnon(role),
            other => conformance_error(other),
        });
    }
    *model = next;
    Ok(id)
}

/// Evaluates `verb` by `actor` with the conditions the engine can observe.
pub(crate) fn decide(
    model: &Model,
    actor: &RoleInstance,
    verb: Verb,
    target: Option<RoleType>,
    mut conditions: BTreeSet<Condition>,
    at: u64,
) -> Result<Verdict, PatternError> {
    let ctx = model
        .context(&actor.context)
        .ok_or_else(|| ModelError::UnknownContext(actor.context.clone()))?;
    if actor.retired {
        return Ok(Verdict::deny());
    }
    let entity = actor.enactor.as_ref().and_then(|a| model.entity_behind(a));
    let kind = entity.and_then(|e| model.entity(e)).map(|e| e.kind);
    let scope = match verb {
        Verb::Surveil => Some(WarrantScope::Surveil),
        Verb::Compel => Some(WarrantScope::Compel),
        _ => None,
    };
    if let (Some(scope), Some(entity)) = (scope, entity) {
        let warranted = model.warrants().any(|w| {
            w.scope == scope
                && &w.grantee == entity
                && w.is_live_at(at)
                && w.context.as_ref().is_none_or(|c| c == &ctx.id)
                && model
                    .entity(&w.issuer)
                    .is_some_and(|i| i.kind == EntityKind::JudicialAuthority)
        });
        if warranted {
            conditions.insert(Condition::Warranted);
        }
    }
    let request = ActionRequest {
        verb,
        actor,
        actor_kind: kind,
        target,
        conditions,
        at,
    };
    Ok(evaluate(&request, ctx, &capabilities(ctx), model.rules())?)
}

/// Role type a target token has from inside `context`: the type of a role
/// in that context named directly or enacted by the named aspect, and
/// `Outsider` for anything else that exists.
pub(crate) fn role_type_of_target(model: &Model, context: &ContextId, token: &str) -> Result<RoleType, PatternError> {
    let role_id = RoleId::new(token);
    if let Some(role) = model.role(&role_id) {
        return Ok(if &role.context == context {
            role.role_type.clone()
        } else {
            RoleType::new(RoleType::OUTSIDER)
        });
    }
    let aspect = AspectId::new(token);
    if model.aspect(&aspect).is_some() {
        let held = model
            .roles_in(context)
            .find(|r| r.enactor.as_ref() == Some(&aspect))
            .map(|r| r.role_type.clone());
        return Ok(held.unwrap_or_else(|| RoleType::new(RoleType::OUTSIDER)));
    }
    if model.entity(&EntityId::new(token)).is_some() {
        return Ok(RoleType::new(RoleType::OUTSIDER));
    }
    Err(PatternError::UnknownTarget(token.to_owned()))
}

fn live_role(model: &Model, role: &RoleId) -> Result<RoleInstance, PatternError> {
    Ok(model
        .role(role)
        .cloned()
        .ok_or_else(|| ModelError::UnknownRole(role.clone()))?)
}

fn live_context(model: &Model, context: &ContextId) -> Result<ContextInstance, PatternError> {
    Ok(model
        .context(context)
        .cloned()
        .ok_or_else(|| ModelError::UnknownContext(context.clone()))?)
}

fn token_free(ctx: &ContextInstance, token: &str) -> Result<(), PatternError> {
    if ctx.invitations.contains_key(token) || ctx.consents.contains_key(token) {
        return Err(PatternError::DuplicateToken(token.to_owned()));
    }
    Ok(())
}

/// Retires an unlinkable anon once it has acted.
fn after_act(model: &mut Model, actor: &RoleInstance) {
    if !actor.role_type.is(RoleType::ANON) {
        return;
    }
    let unlinkable = model
        .context(&actor.context)
        .is_some_and(|c| param_or_default(c, "linkability") == Some("unlinkable"));
    if unlinkable {
        if let Some(r) = model.role_mut(&actor.id) {
            r.retired = true;
        }
    }
}

/// An action with no effect on the model beyond its verdict: introspect,
/// intrude, observe, control, surveil, compel.
pub fn act(
    model: &mut Model,
    actor: &RoleId,
    verb: Verb,
    target: Option<&str>,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let actor = live_role(model, actor)?;
    let target = target
        .map(|t| role_type_of_target(model, &actor.context, t))
        .transpose()?;
    let verdict = decide(model, &actor, verb, target, BTreeSet::new(), opts.at)?;
    if opts.applies(&verdict) {
        after_act(model, &actor);
    }
    Ok(verdict)
}

/// Control by `actor` over `target`. A truster controlling a trustee may
/// attach a single-use consent token for one disclosure.
pub fn control(
    model: &mut Model,
    actor: &RoleId,
    target: &str,
    consent: Option<&str>,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let actor_role = live_role(model, actor)?;
    let target_type = role_type_of_target(model, &actor_role.context, target)?;
    let ctx = live_context(model, &actor_role.context)?;
    let trustee = if let Some(token) = consent {
        if !actor_role.role_type.is(RoleType::TRUSTER) {
            return Err(PatternError::WrongRole {
                role: actor.clone(),
                expected: "Truster",
            });
        }
        let trustee = model
            .role(&RoleId::new(target))
            .filter(|r| r.context == ctx.id && r.role_type.is(RoleType::TRUSTEE))
            .map(|r| r.id.clone())
            .ok_or_else(|| PatternError::WrongRole {
                role: RoleId::new(target),
                expected: "Trustee",
            })?;
        token_free(&ctx, token)?;
        Some((token, trustee))
    } else {
        None
    };
    let verdict = decide(
        model,
        &actor_role,
        Verb::Control,
        Some(target_type),
        BTreeSet::new(),
        opts.at,
    )?;
    if opts.applies(&verdict) {
        if let Some((token, trustee)) = trustee {
            let grant = TokenGrant {
                issuer: actor.clone(),
                holder: trustee.to_string(),
                consumed: false,
            };
            model
                .context_mut(&ctx.id)
                .expect("live")
                .consents
                .insert(token.to_owned(), grant);
        }
        after_act(model, &actor_role);
    }
    Ok(verdict)
}

/// Takes an open role of a context.
pub fn enact(
    model: &mut Model,
    aspect: &AspectId,
    context: &ContextId,
    role_type: &RoleType,
    opts: ActOptions,
) -> Result<(Verdict, Option<RoleId>), PatternError> {
    let ctx = live_context(model, context)?;
    if model.aspect(aspect).is_none() {
        return Err(ModelError::UnknownAspect(aspect.clone()).into());
    }
    if ctx.template == TemplateName::Generic {
        if !crate::ids::is_valid_ident(role_type.as_str()) {
            return Err(ModelError::InvalidId(role_type.to_string()).into());
        }
    } else {
        let t = template(ctx.template);
        let spec = t
            .role(role_type.as_str())
            .ok_or_else(|| PatternError::UnknownRoleType {
                template: ctx.template,
                role_type: role_type.clone(),
            })?;
        if !spec.enactable {
            return Err(PatternError::NotEnactable {
                template: ctx.template,
                role_type: role_type.clone(),
            });
        }
    }
    let kind = model.kind_behind(aspect);
    if ctx.template == TemplateName::Trusting
        && role_type.is(RoleType::TRUSTEE)
        && param_or_default(&ctx, "mode") == Some("legal")
        && !kind.is_some_and(EntityKind::is_legal_actor)
    {
        return Err(PatternError::LegalActorRequired(aspect.clone()));
    }
    if ctx.template == TemplateName::PublicSphere
        && role_type.is(RoleType::GOVERNOR)
        && kind != Some(EntityKind::JudicialAuthority)
    {
        return Err(PatternError::GovernorNotJudicial(aspect.clone()));
    }
    let count = model.roles_in(context).filter(|r| &r.role_type == role_type).count();
    let full = multiplicity(&ctx, role_type.as_str())
        .and_then(|(_, max)| max)
        .is_some_and(|max| count >= max);
    let verdict = if full { Verdict::deny() } else { Verdict::permit() };
    let mut bound = None;
    if opts.applies(&verdict) {
        bound = Some(model.bind_role(context, role_type, Some(aspect.clone()))?);
    }
    Ok((verdict, bound))
}

/// Leaves a role. Refused when it would take the context below the role's
/// minimum multiplicity.
pub fn relinquish(model: &mut Model, role: &RoleId, opts: ActOptions) -> Result<Verdict, PatternError> {
    let r = live_role(model, role)?;
    let ctx = live_context(model, &r.context)?;
    let count = model.roles_in(&ctx.id).filter(|x| x.role_type == r.role_type).count();
    let min = multiplicity(&ctx, r.role_type.as_str()).map_or(0, |(min, _)| min);
    let verdict = if count <= min {
        Verdict::deny()
    } else {
        Verdict::permit()
    };
    if opts.applies(&verdict) {
        model.remove_role(role);
    }
    Ok(verdict)
}

/// Answers a solitude claim: a fresh isolation entity embodies a new
/// Isolated context whose isolate is the claimant.
pub fn claim_solitude(
    model: &mut Model,
    claimant: &AspectId,
    surrounding: &ContextId,
    new_context: ContextId,
) -> Result<ContextId, PatternError> {
    live_context(model, surrounding)?;
    if model.aspect(claimant).is_none() {
        return Err(ModelError::UnknownAspect(claimant.clone()).into());
    }
    let guarantor = model
        .roles_in(surrounding)
        .find(|r| r.role_type.is(RoleType::GUARANTOR) && r.enactor.is_some())
        .ok_or_else(|| PatternError::NoGuarantor(surrounding.clone()))?;
    let provider = guarantor
        .enactor
        .as_ref()
        .and_then(|a| model.entity_behind(a))
        .filter(|e| {
            model
                .entity(e)
                .is_some_and(|rec| rec.kind.may_own(model.strict_ownership()))
        })
        .cloned();
    let mut next = model.clone();
    let pod = next.create_entity(EntityKind::Inert, provider.as_ref())?;
    let inst = Instantiation {
        id: new_context,
        template: TemplateName::Isolated,
        embodied_by: pod,
        bindings: vec![(RoleType::new(RoleType::ISOLATE), vec![claimant.clone()])],
        params: BTreeMap::new(),
    };
    let id = instantiate(&mut next, &inst)?;
    *model = next;
    Ok(id)
}

fn require_type(role: &RoleInstance, expected: &'static str) -> Result<(), PatternError> {
    if role.role_type.is(expected) {
        return Ok(());
    }
    Err(match expected {
        RoleType::INTIMATE => PatternError::NotAnIntimate(role.id.clone()),
        RoleType::PUBLIC_FIGURE => PatternError::NotAPublicFigure(role.id.clone()),
        RoleType::ANON => PatternError::NotAnAnon(role.id.clone()),
        _ => PatternError::WrongRole {
            role: role.id.clone(),
            expected,
        },
    })
}

/// Issues a single-use invitation into the inviter's secluded context.
pub fn invite(
    model: &mut Model,
    inviter: &RoleId,
    invitee: &AspectId,
    token: &str,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let role = live_role(model, inviter)?;
    require_type(&role, RoleType::INTIMATE)?;
    if model.aspect(invitee).is_none() {
        return Err(ModelError::UnknownAspect(invitee.clone()).into());
    }
    let ctx = live_context(model, &role.context)?;
    token_free(&ctx, token)?;
    let target = role_type_of_target(model, &ctx.id, invitee.as_str())?;
    let verdict = decide(model, &role, Verb::Invite, Some(target), BTreeSet::new(), opts.at)?;
    if opts.applies(&verdict) {
        let grant = TokenGrant {
            issuer: inviter.clone(),
            holder: invitee.to_string(),
            consumed: false,
        };
        model
            .context_mut(&ctx.id)
            .expect("live")
            .invitations
            .insert(token.to_owned(), grant);
    }
    Ok(verdict)
}

/// Asks to join a secluded group. The invitation, when valid, is consumed
/// by a successful join.
pub fn join(
    model: &mut Model,
    invitee: &AspectId,
    context: &ContextId,
    token: Option<&str>,
    opts: ActOptions,
) -> Result<(Verdict, Option<RoleId>), PatternError> {
    let ctx = live_context(model, context)?;
    if ctx.template != TemplateName::Secluded {
        return Err(PatternError::WrongTemplate {
            context: context.clone(),
            expected: TemplateName::Secluded,
        });
    }
    if model.aspect(invitee).is_none() {
        return Err(ModelError::UnknownAspect(invitee.clone()).into());
    }
    let intimate = RoleType::new(RoleType::INTIMATE);
    if model
        .roles_in(context)
        .any(|r| r.role_type == intimate && r.enactor.as_ref() == Some(invitee))
    {
        return Err(PatternError::AlreadyMember {
            aspect: invitee.clone(),
            context: context.clone(),
            role_type: intimate,
        });
    }
    let count = model.roles_in(context).filter(|r| r.role_type == intimate).count();
    let full = multiplicity(&ctx, RoleType::INTIMATE)
        .and_then(|(_, max)| max)
        .is_some_and(|max| count >= max);
    let valid_token = token.filter(|t| {
        ctx.invitations
            .get(*t)
            .is_some_and(|g| !g.consumed && g.holder == invitee.as_str())
    });
    let verdict = if full {
        Verdict::deny()
    } else {
        let provisional = RoleInstance::new(
            RoleId::new(format!("{context}.{}.pending", RoleType::INTIMATE)),
            intimate.clone(),
            context.clone(),
            Some(invitee.clone()),
        );
        let mut conditions = BTreeSet::new();
        if valid_token.is_some() {
            conditions.insert(Condition::Invitation);
        }
        decide(model, &provisional, Verb::Join, None, conditions, opts.at)?
    };
    let mut bound = None;
    if opts.applies(&verdict) {
        bound = Some(model.bind_role(context, &intimate, Some(invitee.clone()))?);
        if let Some(t) = valid_token {
            if let Some(g) = model.context_mut(context).and_then(|c| c.invitations.get_mut(t)) {
                g.consumed = true;
            }
        }
    }
    Ok((verdict, bound))
}

/// Entities reachable upward from `entity` through ownership, excluding
/// `entity` itself unless it owns itself.
fn owner_chain(model: &Model, entity: &EntityId) -> Vec<EntityId> {
    let mut chain = Vec::new();
    let mut seen = BTreeSet::new();
    let mut cursor = model.owner_of(entity).cloned();
    while let Some(owner) = cursor {
        if !seen.insert(owner.clone()) {
            break;
        }
        cursor = model.owner_of(&owner).cloned();
        chain.push(owner);
    }
    chain
}

/// Whether `entity` is owned, directly or transitively, by the entity
/// behind some intimate of `context`.
pub(crate) fn owned_by_intimate(model: &Model, context: &ContextId, entity: &EntityId) -> bool {
    let intimates: BTreeSet<&EntityId> = model
        .roles_in(context)
        .filter(|r| r.role_type.is(RoleType::INTIMATE))
        .filter_map(|r| r.enactor.as_ref().and_then(|a| model.entity_behind(a)))
        .collect();
    owner_chain(model, entity).iter().any(|o| intimates.contains(o))
}

/// Binds an intimate's entity as a secret of the group through a fresh aspect.
pub fn deposit_secret(
    model: &mut Model,
    owner: &RoleId,
    secret: &EntityId,
    opts: ActOptions,
) -> Result<(Verdict, Option<RoleId>), PatternError> {
    let role = live_role(model, owner)?;
    require_type(&role, RoleType::INTIMATE)?;
    if model.entity(secret).is_none() {
        return Err(ModelError::UnknownEntity(secret.clone()).into());
    }
    if !owned_by_intimate(model, &role.context, secret) {
        return Err(PatternError::SecretNotOwnedByIntimate(secret.clone()));
    }
    let verdict = decide(model, &role, Verb::DepositSecret, None, BTreeSet::new(), opts.at)?;
    let mut bound = None;
    if opts.applies(&verdict) {
        let aspect = model.fresh_aspect_for(secret, "secret")?;
        bound = Some(model.bind_role(&role.context, &RoleType::new(RoleType::SECRET), Some(aspect))?);
    }
    Ok((verdict, bound))
}

/// Reveals something, optionally a named secret of the group, to `target`.
pub fn reveal(
    model: &mut Model,
    actor: &RoleId,
    target: &str,
    secret: Option<&RoleId>,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let role = live_role(model, actor)?;
    if let Some(secret) = secret {
        let s = live_role(model, secret)?;
        if s.context != role.context || !s.role_type.is(RoleType::SECRET) {
            return Err(PatternError::WrongRole {
                role: secret.clone(),
                expected: "Secret of this context",
            });
        }
    }
    let target = role_type_of_target(model, &role.context, target)?;
    let verdict = decide(model, &role, Verb::Reveal, Some(target), BTreeSet::new(), opts.at)?;
    if opts.applies(&verdict) {
        after_act(model, &role);
    }
    Ok(verdict)
}

/// Creates an anon for a public figure through a fresh aspect of the same
/// entity. The alias, with its optional proof token, is sealed in the
/// alias registry.
pub fn create_anon(
    model: &mut Model,
    figure: &RoleId,
    proof: Option<&str>,
    opts: ActOptions,
) -> Result<(Verdict, Option<RoleId>), PatternError> {
    let role = live_role(model, figure)?;
    require_type(&role, RoleType::PUBLIC_FIGURE)?;
    let entity = role
        .enactor
        .as_ref()
        .and_then(|a| model.entity_behind(a))
        .cloned()
        .ok_or_else(|| PatternError::NotAPublicFigure(figure.clone()))?;
    let verdict = decide(model, &role, Verb::CreateAnon, None, BTreeSet::new(), opts.at)?;
    let mut bound = None;
    if opts.applies(&verdict) {
        let aspect = model.fresh_aspect_for(&entity, "anon")?;
        let anon = model.bind_role(&role.context, &RoleType::new(RoleType::ANON), Some(aspect))?;
        model
            .aliases
            .bind(anon.clone(), figure.clone(), proof.map(str::to_owned));
        bound = Some(anon);
    }
    Ok((verdict, bound))
}

/// Answers a challenge to an anon's identity under the sphere's policy.
pub fn authenticate_anonym(
    model: &Model,
    anon: &RoleId,
    challenger: &AspectId,
    proof: Option<&str>,
) -> Result<bool, PatternError> {
    let role = live_role(model, anon)?;
    require_type(&role, RoleType::ANON)?;
    if model.aspect(challenger).is_none() {
        return Err(ModelError::UnknownAspect(challenger.clone()).into());
    }
    let ctx = live_context(model, &role.context)?;
    if param_or_default(&ctx, "authentication") != Some("prove-on-match") {
        return Ok(false);
    }
    let sealed = model.aliases.get(anon).and_then(|b| b.token.as_deref());
    Ok(matches!((sealed, proof), (Some(s), Some(p)) if s == p))
}

/// Publishes content. Offensive content is forbidden by the reserve rules
/// and recorded as a breach of the publishing role.
pub fn publish(
    model: &mut Model,
    book: &mut ReserveBook,
    actor: &RoleId,
    content: &str,
    predicate: &dyn OffensivePredicate,
    opts: ActOptions,
) -> Result<(Verdict, Option<RoleId>), PatternError> {
    let role = live_role(model, actor)?;
    let offensive = predicate.is_offensive(content);
    let mut conditions = BTreeSet::new();
    if !offensive {
        conditions.insert(Condition::Unoffensive);
    }
    let verdict = decide(model, &role, Verb::Publish, None, conditions, opts.at)?;
    if offensive && verdict.outcome == Outcome::Forbid && !verdict.chain.is_empty() {
        book.breaches.entry(actor.clone()).or_default().push(opts.at);
    }
    let mut bound = None;
    if opts.applies(&verdict) {
        let property = model.bind_role(&role.context, &RoleType::new(RoleType::PUBLIC_PROPERTY), None)?;
        if let Some(p) = model.role_mut(&property) {
            p.attributes.insert("author".to_owned(), actor.to_string());
            p.attributes.insert("content".to_owned(), content.to_owned());
        }
        after_act(model, &role);
        bound = Some(property);
    }
    Ok((verdict, bound))
}

/// Names and shames a role of the sphere. Allowed only against a recorded
/// reserve breach.
pub fn sanction(
    model: &mut Model,
    book: &mut ReserveBook,
    society: &RoleId,
    target: &RoleId,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let role = live_role(model, society)?;
    let t = live_role(model, target)?;
    if t.context != role.context {
        return Err(PatternError::NotInContext {
            role: target.clone(),
            context: role.context.clone(),
        });
    }
    let mut conditions = BTreeSet::new();
    if book.has_breach(target) {
        conditions.insert(Condition::TargetBreached);
    }
    let verdict = decide(
        model,
        &role,
        Verb::Sanction,
        Some(t.role_type.clone()),
        conditions,
        opts.at,
    )?;
    if opts.applies(&verdict) {
        book.sanctions.push(SanctionRecord {
            seq: opts.at,
            society: society.clone(),
            target: target.clone(),
        });
    }
    Ok(verdict)
}

/// Logs an appeal to the sphere's governor. No adjudication follows.
pub fn appeal(
    model: &mut Model,
    book: &mut ReserveBook,
    figure: &RoleId,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let role = live_role(model, figure)?;
    let governor = model
        .roles_in(&role.context)
        .find(|r| r.role_type.is(RoleType::GOVERNOR) && r.enactor.is_some())
        .map(|r| r.id.clone())
        .ok_or_else(|| PatternError::NoGovernor(role.context.clone()))?;
    let verdict = decide(
        model,
        &role,
        Verb::Appeal,
        Some(RoleType::new(RoleType::GOVERNOR)),
        BTreeSet::new(),
        opts.at,
    )?;
    if opts.applies(&verdict) {
        book.appeals.push(AppealRecord {
            seq: opts.at,
            figure: figure.clone(),
            governor,
        });
    }
    Ok(verdict)
}

/// A trustee's access to an asset; triggers the duty of care.
pub fn access_asset(
    model: &mut Model,
    trustee: &RoleId,
    asset: &str,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    act(model, trustee, Verb::AccessAsset, Some(asset), opts)
}

/// Discloses an asset of the trust to `outside`. A trustee needs an unused
/// consent token issued to it by a truster.
pub fn disclose(
    model: &mut Model,
    actor: &RoleId,
    asset: &RoleId,
    outside: &str,
    consent: Option<&str>,
    opts: ActOptions,
) -> Result<Verdict, PatternError> {
    let role = live_role(model, actor)?;
    let a = live_role(model, asset)?;
    if a.context != role.context || !a.role_type.is(RoleType::ASSET) {
        return Err(PatternError::WrongRole {
            role: asset.clone(),
            expected: "Asset of this context",
        });
    }
    let target = role_type_of_target(model, &role.context, outside)?;
    let ctx = live_context(model, &role.context)?;
    let valid = consent.filter(|t| {
        ctx.consents.get(*t).is_some_and(|g| {
            !g.consumed
                && g.holder == actor.as_str()
                && model
                    .role(&g.issuer)
                    .is_some_and(|i| i.role_type.is(RoleType::TRUSTER) && i.context == ctx.id)
        })
    });
    let mut conditions = BTreeSet::new();
    if valid.is_some() {
        conditions.insert(Condition::Consent);
    }
    let verdict = decide(model, &role, Verb::Disclose, Some(target), conditions, opts.at)?;
    if opts.applies(&verdict) {
        if let Some(t) = valid {
            if let Some(g) = model.context_mut(&ctx.id).and_then(|c| c.consents.get_mut(t)) {
                g.consumed = true;
            }
        }
        after_act(model, &role);
    }
    Ok(verdict)
}
