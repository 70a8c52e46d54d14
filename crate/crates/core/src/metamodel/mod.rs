//! Entities, aspects, roles and contexts, the ownership and warrant
//! relations, and the structural checks over them.
//!
//! A [`Model`] is a plain value. Operations take `&mut self` and either
//! succeed or leave the model untouched, so keeping a snapshot is a `clone`.

mod kind;
mod registry;
mod validate;

pub use kind::EntityKind;
pub use registry::{AliasRegistry, AuditOutcome, AuditRecord, LinkageRegistry};
pub use validate::{validate_structure, Violation};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deontic::{DeonticError, DeonticRule, RuleBook};
use crate::ids::{AspectId, ContextId, EntityId, RoleId, RoleType, RuleId, WarrantId};
use crate::patterns::{self, TemplateName};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: EntityId,
    pub kind: EntityKind,
    /// Entities this one owns. Ownership is navigable owner → owned only.
    pub owns: BTreeSet<EntityId>,
    pub embodies: Option<ContextId>,
}

/// What an entity shows of itself. Holds no reference to that entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectRecord {
    pub id: AspectId,
    pub label: String,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarrantScope {
    Surveil,
    Compel,
    Resolve,
}

impl WarrantScope {
    pub const ALL: [WarrantScope; 3] = [WarrantScope::Surveil, WarrantScope::Compel, WarrantScope::Resolve];

    pub fn as_str(self) -> &'static str {
        match self {
            WarrantScope::Surveil => "surveil",
            WarrantScope::Compel => "compel",
            WarrantScope::Resolve => "resolve",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        WarrantScope::ALL.into_iter().find(|s| s.as_str() == raw)
    }
}

impl fmt::Display for WarrantScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warrant {
    pub id: WarrantId,
    pub issuer: EntityId,
    pub grantee: EntityId,
    pub scope: WarrantScope,
    pub context: Option<ContextId>,
    /// Last event number at which the warrant is still valid.
    pub expiry: Option<u64>,
}

impl Warrant {
    pub fn is_live_at(&self, seq: u64) -> bool {
        self.expiry.is_none_or(|e| seq <= e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleInstance {
    pub id: RoleId,
    pub role_type: RoleType,
    pub context: ContextId,
    pub enactor: Option<AspectId>,
    /// Set once an unlinkable anon has acted.
    pub retired: bool,
    pub attributes: BTreeMap<String, String>,
}

impl RoleInstance {
    pub fn new(id: RoleId, role_type: RoleType, context: ContextId, enactor: Option<AspectId>) -> Self {
        Self {
            id,
            role_type,
            context,
            enactor,
            retired: false,
            attributes: BTreeMap::new(),
        }
    }
}

/// A single-use token: an invitation into a secluded context, or a
/// truster's consent to one disclosure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenGrant {
    pub issuer: RoleId,
    /// Invitee aspect, or the trustee role a consent is addressed to.
    pub holder: String,
    pub consumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextInstance {
    pub id: ContextId,
    pub template: TemplateName,
    pub embodied_by: EntityId,
    pub roles: BTreeSet<RoleId>,
    pub params: BTreeMap<String, String>,
    pub invitations: BTreeMap<String, TokenGrant>,
    pub consents: BTreeMap<String, TokenGrant>,
    role_counters: BTreeMap<RoleType, u32>,
}

impl ContextInstance {
    pub fn bare(id: ContextId, template: TemplateName, embodied_by: EntityId) -> Self {
        Self {
            id,
            template,
            embodied_by,
            roles: BTreeSet::new(),
            params: BTreeMap::new(),
            invitations: BTreeMap::new(),
            consents: BTreeMap::new(),
            role_counters: BTreeMap::new(),
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("unknown aspect `{0}`")]
    UnknownAspect(AspectId),
    #[error("unknown context `{0}`")]
    UnknownContext(ContextId),
    #[error("unknown role `{0}`")]
    UnknownRole(RoleId),
    #[error("unknown warrant `{0}`")]
    UnknownWarrant(WarrantId),
    #[error("unknown owner `{0}`")]
    UnknownOwner(EntityId),
    #[error("natural person `{owned}` cannot be owned by `{owner}`")]
    AntiSlaveryViolation { owner: EntityId, owned: EntityId },
    #[error("`{owner}` ({kind}) may not own other entities")]
    IneligibleOwner { owner: EntityId, kind: EntityKind },
    #[error("linkage of aspect `{aspect}` denied to `{requester}`")]
    LinkageDenied { aspect: AspectId, requester: EntityId },
    #[error("`{0}` is not a judicial authority")]
    NotAJudicialAuthority(EntityId),
    #[error("`{entity}` cannot embody `{context}`: already embodied")]
    AlreadyEmbodied { entity: EntityId, context: ContextId },
    #[error("{namespace} id `{id}` is already in use")]
    DuplicateId { namespace: &'static str, id: String },
    #[error("invalid identifier `{0}`")]
    InvalidId(String),
    #[error(transparent)]
    Deontic(#[from] DeonticError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub(crate) entities: BTreeMap<EntityId, EntityRecord>,
    pub(crate) aspects: BTreeMap<AspectId, AspectRecord>,
    pub(crate) linkage: LinkageRegistry,
    pub(crate) contexts: BTreeMap<ContextId, ContextInstance>,
    pub(crate) roles: BTreeMap<RoleId, RoleInstance>,
    pub(crate) rules: RuleBook,
    pub(crate) warrants: BTreeMap<WarrantId, Warrant>,
    pub(crate) aliases: AliasRegistry,
    strict_ownership: bool,
    serial: u64,
}

impl Default for Model {
    fn default() -> Self {
        Self::new()
    }
}

impl Model {
    /// An empty model carrying the global surveillance and compulsion rules.
    pub fn new() -> Self {
        let mut rules = RuleBook::new();
        for rule in patterns::baseline_rules() {
            rules.insert_unchecked(rule);
        }
        Self {
            entities: BTreeMap::new(),
            aspects: BTreeMap::new(),
            linkage: LinkageRegistry::default(),
            contexts: BTreeMap::new(),
            roles: BTreeMap::new(),
            rules,
            warrants: BTreeMap::new(),
            aliases: AliasRegistry::default(),
            strict_ownership: false,
            serial: 0,
        }
    }

    pub fn strict_ownership(&self) -> bool {
        self.strict_ownership
    }

    /// Restricts ownership to legal persons.
    pub fn set_strict_ownership(&mut self, strict: bool) {
        self.strict_ownership = strict;
    }

    pub fn entity(&self, id: &EntityId) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    pub fn aspect(&self, id: &AspectId) -> Option<&AspectRecord> {
        self.aspects.get(id)
    }

    pub fn aspects(&self) -> impl Iterator<Item = &AspectRecord> {
        self.aspects.values()
    }

    pub fn context(&self, id: &ContextId) -> Option<&ContextInstance> {
        self.contexts.get(id)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextInstance> {
        self.contexts.values()
    }

    pub fn role(&self, id: &RoleId) -> Option<&RoleInstance> {
        self.roles.get(id)
    }

    pub fn roles(&self) -> impl Iterator<Item = &RoleInstance> {
        self.roles.values()
    }

    pub fn roles_in<'a>(&'a self, context: &'a ContextId) -> impl Iterator<Item = &'a RoleInstance> + 'a {
        self.roles.values().filter(move |r| &r.context == context)
    }

    pub fn rules(&self) -> &RuleBook {
        &self.rules
    }

    pub fn warrant(&self, id: &WarrantId) -> Option<&Warrant> {
        self.warrants.get(id)
    }

    pub fn warrants(&self) -> impl Iterator<Item = &Warrant> {
        self.warrants.values()
    }

    pub fn linkage(&self) -> &LinkageRegistry {
        &self.linkage
    }

    pub fn aliases(&self) -> &AliasRegistry {
        &self.aliases
    }

    /// Owners recorded for `owned`, found by scanning owner records.
    pub fn owners_of(&self, owned: &EntityId) -> Vec<&EntityId> {
        self.entities
            .values()
            .filter(|e| e.owns.contains(owned))
            .map(|e| &e.id)
            .collect()
    }

    pub fn owner_of(&self, owned: &EntityId) -> Option<&EntityId> {
        self.owners_of(owned).into_iter().next()
    }

    /// Entity behind an aspect. Crate-internal: the public route is the
    /// warrant-gated [`Model::resolve_entity`].
    pub(crate) fn entity_behind(&self, aspect: &AspectId) -> Option<&EntityId> {
        self.linkage.entity_of(aspect)
    }

    pub(crate) fn kind_behind(&self, aspect: &AspectId) -> Option<EntityKind> {
        self.entity_behind(aspect)
            .and_then(|e| self.entities.get(e))
            .map(|e| e.kind)
    }

    fn check_owner(&self, owner: &EntityId, owned: &EntityId, owned_kind: EntityKind) -> Result<(), ModelError> {
        let owner_rec = self
            .entities
            .get(owner)
            .ok_or_else(|| ModelError::UnknownOwner(owner.clone()))?;
        if owned_kind == EntityKind::NaturalPerson && owner != owned {
            return Err(ModelError::AntiSlaveryViolation {
                owner: owner.clone(),
                owned: owned.clone(),
            });
        }
        let self_owned_person = owner == owned && owned_kind == EntityKind::NaturalPerson;
        if !self_owned_person && !owner_rec.kind.may_own(self.strict_ownership) {
            return Err(ModelError::IneligibleOwner {
                owner: owner.clone(),
                kind: owner_rec.kind,
            });
        }
        Ok(())
    }

    /// Creates an entity with a generated id.
    pub fn create_entity(&mut self, kind: EntityKind, owner: Option<&EntityId>) -> Result<EntityId, ModelError> {
        if let Some(o) = owner {
            if !self.entities.contains_key(o) {
                return Err(ModelError::UnknownOwner(o.clone()));
            }
        }
        let id = EntityId::new(next_serial(&mut self.serial, "entity", |c| {
            self.entities.contains_key(&EntityId::new(c))
        }));
        self.create_entity_as(id.clone(), kind, owner)?;
        Ok(id)
    }

    pub fn create_entity_as(
        &mut self,
        id: EntityId,
        kind: EntityKind,
        owner: Option<&EntityId>,
    ) -> Result<(), ModelError> {
        if !crate::ids::is_valid_ident(id.as_str()) {
            return Err(ModelError::InvalidId(id.to_string()));
        }
        if self.entities.contains_key(&id) {
            return Err(ModelError::DuplicateId {
                namespace: "entity",
                id: id.to_string(),
            });
        }
        if let Some(owner) = owner {
            if owner == &id {
                // Self-ownership: decided per kind below without the record existing yet.
                if !(kind == EntityKind::NaturalPerson || kind.may_own(self.strict_ownership)) {
                    return Err(ModelError::IneligibleOwner {
                        owner: id.clone(),
                        kind,
                    });
                }
            } else {
                self.check_owner(owner, &id, kind)?;
            }
        }
        self.entities.insert(
            id.clone(),
            EntityRecord {
                id: id.clone(),
                kind,
                owns: BTreeSet::new(),
                embodies: None,
            },
        );
        if let Some(owner) = owner {
            self.entities.get_mut(owner).expect("checked").owns.insert(id);
        }
        Ok(())
    }

    /// Makes `owner` the sole owner of `owned`, replacing any previous owner.
    pub fn assign_owner(&mut self, owner: &EntityId, owned: &EntityId) -> Result<(), ModelError> {
        let owned_kind = self
            .entities
            .get(owned)
            .ok_or_else(|| ModelError::UnknownEntity(owned.clone()))?
            .kind;
        self.check_owner(owner, owned, owned_kind)?;
        for rec in self.entities.values_mut() {
            rec.owns.remove(owned);
        }
        self.entities
            .get_mut(owner)
            .expect("checked")
            .owns
            .insert(owned.clone());
        Ok(())
    }

    /// Displays a new aspect with a generated id that does not contain the
    /// displaying entity's id.
    pub fn display_aspect(&mut self, entity: &EntityId, label: &str) -> Result<AspectId, ModelError> {
        if !self.entities.contains_key(entity) {
            return Err(ModelError::UnknownEntity(entity.clone()));
        }
        // An entity id always has a letter. If all its letters occur in
        // "aspect", none of them occur in "mirror", so the fallback prefix
        // can never contain it.
        let prefix = if entity
            .as_str()
            .chars()
            .any(|c| c.is_ascii_alphabetic() && !"aspect".contains(c))
        {
            "aspect"
        } else {
            "mirror"
        };
        let id = AspectId::new(next_serial(&mut self.serial, prefix, |c| {
            self.aspects.contains_key(&AspectId::new(c)) || c.contains(entity.as_str())
        }));
        self.display_aspect_as(entity, id.clone(), label)?;
        Ok(id)
    }

    pub fn display_aspect_as(&mut self, entity: &EntityId, id: AspectId, label: &str) -> Result<(), ModelError> {
        if !self.entities.contains_key(entity) {
            return Err(ModelError::UnknownEntity(entity.clone()));
        }
        if self.aspects.contains_key(&id) {
            return Err(ModelError::DuplicateId {
                namespace: "aspect",
                id: id.to_string(),
            });
        }
        self.aspects.insert(
            id.clone(),
            AspectRecord {
                id: id.clone(),
                label: label.to_owned(),
                attributes: BTreeMap::new(),
            },
        );
        self.linkage.link(id, entity.clone());
        Ok(())
    }

    fn warrant_allows_resolve(&self, warrant: &Warrant, aspect: &AspectId, requester: &EntityId, at: u64) -> bool {
        let issuer_ok = self
            .entities
            .get(&warrant.issuer)
            .is_some_and(|e| e.kind == EntityKind::JudicialAuthority);
        let context_ok = match &warrant.context {
            None => true,
            Some(ctx) => self
                .roles
                .values()
                .any(|r| &r.context == ctx && r.enactor.as_ref() == Some(aspect)),
        };
        warrant.scope == WarrantScope::Resolve
            && &warrant.grantee == requester
            && warrant.is_live_at(at)
            && issuer_ok
            && context_ok
    }

    /// Reverse lookup through the sealed registry. Succeeds only with a live
    /// `resolve` warrant granted to the requester. Every call is audited.
    pub fn resolve_entity(
        &mut self,
        aspect: &AspectId,
        requester: &EntityId,
        warrant: Option<&WarrantId>,
        at: u64,
    ) -> Result<EntityId, ModelError> {
        let record = |outcome| AuditRecord {
            seq: at,
            requester: requester.clone(),
            aspect: aspect.clone(),
            warrant: warrant.cloned(),
            outcome,
        };
        let Some(entity) = self.linkage.entity_of(aspect).cloned() else {
            self.linkage.record(record(AuditOutcome::UnknownAspect));
            return Err(ModelError::UnknownAspect(aspect.clone()));
        };
        let granted = warrant
            .and_then(|w| self.warrants.get(w))
            .is_some_and(|w| self.warrant_allows_resolve(w, aspect, requester, at));
        if granted {
            self.linkage.record(record(AuditOutcome::Resolved));
            Ok(entity)
        } else {
            self.linkage.record(record(AuditOutcome::Denied));
            Err(ModelError::LinkageDenied {
                aspect: aspect.clone(),
                requester: requester.clone(),
            })
        }
    }

    /// Forward lookup, open to the entity itself and to its owner.
    pub fn aspects_of(&self, entity: &EntityId, requester: &EntityId) -> Result<Vec<AspectId>, ModelError> {
        let rec = self
            .entities
            .get(entity)
            .ok_or_else(|| ModelError::UnknownEntity(entity.clone()))?;
        let owner_asks = self.entities.get(requester).is_some_and(|r| r.owns.contains(&rec.id));
        if requester != entity && !owner_asks {
            // Forward queries carry no aspect; report the entity in its place.
            return Err(ModelError::LinkageDenied {
                aspect: AspectId::new(format!("*{entity}")),
                requester: requester.clone(),
            });
        }
        Ok(self.linkage.forward(entity))
    }

    pub fn grant_warrant(
        &mut self,
        issuer: &EntityId,
        grantee: &EntityId,
        scope: WarrantScope,
        context: Option<&ContextId>,
        expiry: Option<u64>,
    ) -> Result<WarrantId, ModelError> {
        let id = WarrantId::new(next_serial(&mut self.serial, "warrant", |c| {
            self.warrants.contains_key(&WarrantId::new(c))
        }));
        self.grant_warrant_as(id.clone(), issuer, grantee, scope, context, expiry)?;
        Ok(id)
    }

    pub fn grant_warrant_as(
        &mut self,
        id: WarrantId,
        issuer: &EntityId,
        grantee: &EntityId,
        scope: WarrantScope,
        context: Option<&ContextId>,
        expiry: Option<u64>,
    ) -> Result<(), ModelError> {
        let issuer_rec = self
            .entities
            .get(issuer)
            .ok_or_else(|| ModelError::UnknownEntity(issuer.clone()))?;
        if issuer_rec.kind != EntityKind::JudicialAuthority {
            return Err(ModelError::NotAJudicialAuthority(issuer.clone()));
        }
        if !self.entities.contains_key(grantee) {
            return Err(ModelError::UnknownEntity(grantee.clone()));
        }
        if let Some(ctx) = context {
            if !self.contexts.contains_key(ctx) {
                return Err(ModelError::UnknownContext(ctx.clone()));
            }
        }
        if self.warrants.contains_key(&id) {
            return Err(ModelError::DuplicateId {
                namespace: "warrant",
                id: id.to_string(),
            });
        }
        self.warrants.insert(
            id.clone(),
            Warrant {
                id,
                issuer: issuer.clone(),
                grantee: grantee.clone(),
                scope,
                context: context.cloned(),
                expiry,
            },
        );
        Ok(())
    }

    /// Records that `entity` embodies `context`. An entity embodies at most
    /// one context and a context is embodied by exactly one entity.
    pub fn embody_context(&mut self, entity: &EntityId, context: &ContextId) -> Result<(), ModelError> {
        let rec = self
            .entities
            .get(entity)
            .ok_or_else(|| ModelError::UnknownEntity(entity.clone()))?;
        let ctx = self
            .contexts
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.clone()))?;
        if rec.embodies.as_ref().is_some_and(|c| c != context) {
            return Err(ModelError::AlreadyEmbodied {
                entity: entity.clone(),
                context: context.clone(),
            });
        }
        let current = &ctx.embodied_by;
        if current != entity
            && self
                .entities
                .get(current)
                .is_some_and(|e| e.embodies.as_ref() == Some(context))
        {
            return Err(ModelError::AlreadyEmbodied {
                entity: entity.clone(),
                context: context.clone(),
            });
        }
        self.contexts.get_mut(context).expect("checked").embodied_by = entity.clone();
        self.entities.get_mut(entity).expect("checked").embodies = Some(context.clone());
        Ok(())
    }

    pub fn add_rule(&mut self, rule: DeonticRule) -> Result<RuleId, ModelError> {
        Ok(self.rules.add_rule(rule)?)
    }

    /// Removes a context. Its roles stay behind as orphans until
    /// [`Model::gc_roles`] runs.
    pub fn destroy_context(&mut self, context: &ContextId) -> Result<(), ModelError> {
        let ctx = self
            .contexts
            .remove(context)
            .ok_or_else(|| ModelError::UnknownContext(context.clone()))?;
        if let Some(e) = self.entities.get_mut(&ctx.embodied_by) {
            if e.embodies.as_ref() == Some(context) {
                e.embodies = None;
            }
        }
        Ok(())
    }

    /// Collects roles whose context no longer exists. Idempotent.
    pub fn gc_roles(&mut self) -> Vec<RoleId> {
        let orphans: Vec<RoleId> = self
            .roles
            .values()
            .filter(|r| !self.contexts.contains_key(&r.context))
            .map(|r| r.id.clone())
            .collect();
        for id in &orphans {
            self.roles.remove(id);
            self.aliases.remove(id);
        }
        orphans
    }

    pub(crate) fn insert_context(&mut self, ctx: ContextInstance) {
        self.contexts.insert(ctx.id.clone(), ctx);
    }

    /// Binds a fresh role `<context>.<type>.<n>` in an existing context.
    pub(crate) fn bind_role(
        &mut self,
        context: &ContextId,
        role_type: &RoleType,
        enactor: Option<AspectId>,
    ) -> Result<RoleId, ModelError> {
        let ctx = self
            .contexts
            .get_mut(context)
            .ok_or_else(|| ModelError::UnknownContext(context.clone()))?;
        let id = loop {
            let n = ctx.role_counters.entry(role_type.clone()).or_insert(0);
            *n += 1;
            let candidate = RoleId::new(format!("{context}.{role_type}.{n}"));
            if !self.roles.contains_key(&candidate) {
                break candidate;
            }
        };
        ctx.roles.insert(id.clone());
        self.roles.insert(
            id.clone(),
            RoleInstance::new(id.clone(), role_type.clone(), context.clone(), enactor),
        );
        Ok(id)
    }

    pub(crate) fn remove_role(&mut self, role: &RoleId) -> Option<RoleInstance> {
        let removed = self.roles.remove(role)?;
        if let Some(ctx) = self.contexts.get_mut(&removed.context) {
            ctx.roles.remove(role);
        }
        self.aliases.remove(role);
        Some(removed)
    }

    pub(crate) fn role_mut(&mut self, role: &RoleId) -> Option<&mut RoleInstance> {
        self.roles.get_mut(role)
    }

    pub(crate) fn context_mut(&mut self, context: &ContextId) -> Option<&mut ContextInstance> {
        self.contexts.get_mut(context)
    }

    pub(crate) fn rules_mut(&mut self) -> &mut RuleBook {
        &mut self.rules
    }

    pub(crate) fn fresh_aspect_for(&mut self, entity: &EntityId, label: &str) -> Result<AspectId, ModelError> {
        self.display_aspect(entity, label)
    }

    /// Same model with the audit log emptied. Two models with equal
    /// structure compare equal under this view.
    pub fn structure(&self) -> Model {
        let mut copy = self.clone();
        copy.linkage.clear_audit();
        copy
    }

    /// Fault-injection handle that bypasses every invariant check.
    pub fn tamper(&mut self) -> Tamper<'_> {
        Tamper { model: self }
    }
}

fn next_serial(serial: &mut u64, prefix: &str, taken: impl Fn(&str) -> bool) -> String {
    loop {
        *serial += 1;
        let candidate = format!("{prefix}-{serial}");
        if !taken(&candidate) {
            return candidate;
        }
    }
}

/// Direct edits used by the permissive DSL builder and by mutation tests.
pub struct Tamper<'a> {
    model: &'a mut Model,
}

impl Tamper<'_> {
    pub fn insert_entity(&mut self, id: EntityId, kind: EntityKind) {
        self.model.entities.insert(
            id.clone(),
            EntityRecord {
                id,
                kind,
                owns: BTreeSet::new(),
                embodies: None,
            },
        );
    }

    pub fn insert_aspect(&mut self, id: AspectId, entity: EntityId) {
        self.model.aspects.insert(
            id.clone(),
            AspectRecord {
                id: id.clone(),
                label: String::new(),
                attributes: BTreeMap::new(),
            },
        );
        self.model.linkage.link(id, entity);
    }

    pub fn add_ownership(&mut self, owner: &EntityId, owned: &EntityId) {
        if let Some(rec) = self.model.entities.get_mut(owner) {
            rec.owns.insert(owned.clone());
        }
    }

    pub fn remove_ownership(&mut self, owner: &EntityId, owned: &EntityId) {
        if let Some(rec) = self.model.entities.get_mut(owner) {
            rec.owns.remove(owned);
        }
    }

    pub fn unlink_aspect(&mut self, aspect: &AspectId) {
        self.model.linkage.unlink(aspect);
    }

    pub fn set_embodier(&mut self, context: &ContextId, entity: EntityId) {
        if let Some(ctx) = self.model.contexts.get_mut(context) {
            ctx.embodied_by = entity;
        }
    }

    pub fn set_embodies(&mut self, entity: &EntityId, context: Option<ContextId>) {
        if let Some(rec) = self.model.entities.get_mut(entity) {
            rec.embodies = context;
        }
    }

    pub fn insert_rule(&mut self, rule: DeonticRule) {
        self.model.rules.insert_unchecked(rule);
    }

    pub fn remove_rule(&mut self, id: &RuleId) {
        self.model.rules.remove(id);
    }

    pub fn set_derogation(&mut self, rule: &RuleId, target: Option<RuleId>) {
        if let Some(r) = self.model.rules.get_mut(rule) {
            r.derogates = target;
        }
    }

    pub fn insert_warrant(&mut self, warrant: Warrant) {
        self.model.warrants.insert(warrant.id.clone(), warrant);
    }

    pub fn set_warrant_issuer(&mut self, warrant: &WarrantId, issuer: EntityId) {
        if let Some(w) = self.model.warrants.get_mut(warrant) {
            w.issuer = issuer;
        }
    }

    pub fn set_param(&mut self, context: &ContextId, key: &str, value: Option<&str>) {
        if let Some(ctx) = self.model.contexts.get_mut(context) {
            match value {
                Some(v) => ctx.params.insert(key.to_owned(), v.to_owned()),
                None => ctx.params.remove(key),
            };
        }
    }

    pub fn remove_role(&mut self, role: &RoleId) {
        self.model.remove_role(role);
    }

    pub fn set_enactor(&mut self, role: &RoleId, enactor: Option<AspectId>) {
        if let Some(r) = self.model.roles.get_mut(role) {
            r.enactor = enactor;
        }
    }

    pub fn bind_role(&mut self, context: &ContextId, role_type: &str, enactor: Option<AspectId>) -> Option<RoleId> {
        self.model.bind_role(context, &RoleType::new(role_type), enactor).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> (Model, EntityId, EntityId, EntityId) {
        let mut m = Model::new();
        let alice = EntityId::new("alice");
        let bob = EntityId::new("bob");
        let judge = EntityId::new("judge");
        m.create_entity_as(alice.clone(), EntityKind::NaturalPerson, None)
            .unwrap();
        m.create_entity_as(bob.clone(), EntityKind::NaturalPerson, None)
            .unwrap();
        m.create_entity_as(judge.clone(), EntityKind::JudicialAuthority, None)
            .unwrap();
        (m, alice, bob, judge)
    }

    #[test]
    fn ownerless_natural_person_is_legal() {
        let mut m = Model::new();
        let id = m.create_entity(EntityKind::NaturalPerson, None).unwrap();
        assert!(m.owner_of(&id).is_none());
    }

    #[test]
    fn natural_person_cannot_own_natural_person() {
        let (mut m, alice, _, _) = base();
        let err = m.create_entity(EntityKind::NaturalPerson, Some(&alice)).unwrap_err();
        assert!(matches!(err, ModelError::AntiSlaveryViolation { .. }));
        let err = m.assign_owner(&alice, &EntityId::new("bob")).unwrap_err();
        assert!(matches!(err, ModelError::AntiSlaveryViolation { .. }));
    }

    #[test]
    fn legal_person_owns_a_document() {
        let mut m = Model::new();
        let acme = EntityId::new("acme");
        m.create_entity_as(acme.clone(), EntityKind::LegalPerson, None).unwrap();
        let doc = m.create_entity(EntityKind::Inert, Some(&acme)).unwrap();
        assert_eq!(m.owner_of(&doc), Some(&acme));
        assert!(m.entity(&acme).unwrap().owns.contains(&doc));
    }

    #[test]
    fn unknown_and_ineligible_owners() {
        let mut m = Model::new();
        let err = m
            .create_entity(EntityKind::Inert, Some(&EntityId::new("ghost")))
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownOwner(EntityId::new("ghost")));
        let rock = m.create_entity(EntityKind::Inert, None).unwrap();
        let err = m.create_entity(EntityKind::Inert, Some(&rock)).unwrap_err();
        assert!(matches!(err, ModelError::IneligibleOwner { .. }));
    }

    #[test]
    fn strict_mode_stops_natural_person_owners() {
        let (mut m, alice, _, _) = base();
        assert!(m.create_entity(EntityKind::Inert, Some(&alice)).is_ok());
        m.set_strict_ownership(true);
        assert!(matches!(
            m.create_entity(EntityKind::Inert, Some(&alice)),
            Err(ModelError::IneligibleOwner { .. })
        ));
    }

    #[test]
    fn displayed_aspect_leaks_nothing() {
        let (mut m, alice, _, _) = base();
        let a1 = m.display_aspect(&alice, "work").unwrap();
        let a2 = m.display_aspect(&alice, "work").unwrap();
        assert_ne!(a1, a2);
        let json = serde_json::to_string(m.aspect(&a1).unwrap()).unwrap();
        assert!(!json.contains("alice"), "{json}");
        assert!(m.linkage().contains(&a1));
    }

    #[test]
    fn generated_aspect_ids_avoid_the_entity_id() {
        let mut m = Model::new();
        let e = EntityId::new("aspect-1");
        m.create_entity_as(e.clone(), EntityKind::NaturalPerson, None).unwrap();
        let a = m.display_aspect(&e, "x").unwrap();
        assert!(!a.as_str().contains(e.as_str()));
    }

    #[test]
    fn resolution_is_warrant_gated_and_audited() {
        let (mut m, alice, bob, judge) = base();
        let a1 = m.display_aspect(&alice, "work").unwrap();

        assert!(matches!(
            m.resolve_entity(&a1, &bob, None, 1),
            Err(ModelError::LinkageDenied { .. })
        ));
        assert_eq!(m.linkage().audit().len(), 1);

        let w = m
            .grant_warrant(&judge, &judge, WarrantScope::Resolve, None, None)
            .unwrap();
        assert_eq!(m.resolve_entity(&a1, &judge, Some(&w), 2).unwrap(), alice);

        let late = m
            .grant_warrant(&judge, &bob, WarrantScope::Resolve, None, Some(100))
            .unwrap();
        assert!(m.resolve_entity(&a1, &bob, Some(&late), 100).is_ok());
        assert!(m.resolve_entity(&a1, &bob, Some(&late), 101).is_err());

        assert!(m.resolve_entity(&AspectId::new("nope"), &bob, None, 3).is_err());
        assert_eq!(m.linkage().audit().len(), 5);
        assert_eq!(m.linkage().audit()[4].outcome, AuditOutcome::UnknownAspect);
    }

    #[test]
    fn wrong_scope_or_grantee_is_denied() {
        let (mut m, alice, bob, judge) = base();
        let a1 = m.display_aspect(&alice, "work").unwrap();
        let surveil = m
            .grant_warrant(&judge, &bob, WarrantScope::Surveil, None, None)
            .unwrap();
        assert!(m.resolve_entity(&a1, &bob, Some(&surveil), 1).is_err());
        let for_judge = m
            .grant_warrant(&judge, &judge, WarrantScope::Resolve, None, None)
            .unwrap();
        assert!(m.resolve_entity(&a1, &bob, Some(&for_judge), 1).is_err());
    }

    #[test]
    fn forward_queries_for_self_and_owner_only() {
        let (mut m, alice, bob, _) = base();
        let a1 = m.display_aspect(&alice, "work").unwrap();
        let a2 = m.display_aspect(&alice, "family").unwrap();
        assert_eq!(m.aspects_of(&alice, &alice).unwrap(), vec![a1, a2]);
        assert!(matches!(
            m.aspects_of(&alice, &bob),
            Err(ModelError::LinkageDenied { .. })
        ));

        let doc = m.create_entity(EntityKind::Inert, Some(&alice)).unwrap();
        let d1 = m.display_aspect(&doc, "cover").unwrap();
        assert_eq!(m.aspects_of(&doc, &alice).unwrap(), vec![d1]);
    }

    #[test]
    fn only_judges_grant_warrants() {
        let (mut m, alice, bob, _) = base();
        let err = m
            .grant_warrant(&alice, &bob, WarrantScope::Compel, None, None)
            .unwrap_err();
        assert_eq!(err, ModelError::NotAJudicialAuthority(alice));
    }

    #[test]
    fn gc_collects_roles_of_destroyed_contexts_once() {
        let (mut m, alice, _, _) = base();
        let ctx = ContextId::new("c");
        m.insert_context(ContextInstance::bare(ctx.clone(), TemplateName::Generic, alice.clone()));
        m.embody_context(&alice, &ctx).unwrap();
        let rt = RoleType::new("Member");
        let ids: Vec<RoleId> = (0..3).map(|_| m.bind_role(&ctx, &rt, None).unwrap()).collect();
        m.destroy_context(&ctx).unwrap();
        assert!(m.entity(&alice).unwrap().embodies.is_none());
        assert_eq!(m.gc_roles(), ids);
        assert!(m.gc_roles().is_empty());
    }

    #[test]
    fn embodiment_is_exclusive() {
        let (mut m, alice, bob, _) = base();
        let c1 = ContextId::new("c1");
        let c2 = ContextId::new("c2");
        m.insert_context(ContextInstance::bare(c1.clone(), TemplateName::Generic, alice.clone()));
        m.insert_context(ContextInstance::bare(c2.clone(), TemplateName::Generic, alice.clone()));
        m.embody_context(&alice, &c1).unwrap();
        assert!(matches!(
            m.embody_context(&alice, &c2),
            Err(ModelError::AlreadyEmbodied { .. })
        ));
        assert!(matches!(
            m.embody_context(&bob, &c1),
            Err(ModelError::AlreadyEmbodied { .. })
        ));
    }

    #[test]
    fn generated_aspect_ids_avoid_short_entity_ids() {
        let mut m = Model::new();
        for name in ["a", "pet", "aspect", "mirror"] {
            let e = EntityId::new(name);
            m.create_entity_as(e.clone(), EntityKind::NaturalPerson, None).unwrap();
            let a = m.display_aspect(&e, "").unwrap();
            assert!(!a.as_str().contains(name), "{a} contains {name}");
        }
    }
}
