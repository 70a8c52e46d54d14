//! The sealed aspect → entity map and the anon → public-figure alias map.
//!
//! Neither map is reachable through the public API in the reverse
//! direction. Gated resolution goes through [`crate::Model::resolve_entity`],
//! which records every attempt in the audit log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{AspectId, EntityId, RoleId, WarrantId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditOutcome {
    Resolved,
    Denied,
    UnknownAspect,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub requester: EntityId,
    pub aspect: AspectId,
    pub warrant: Option<WarrantId>,
    pub outcome: AuditOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkageRegistry {
    links: BTreeMap<AspectId, EntityId>,
    audit: Vec<AuditRecord>,
}

impl LinkageRegistry {
    pub fn contains(&self, aspect: &AspectId) -> bool {
        self.links.contains_key(aspect)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub(crate) fn link(&mut self, aspect: AspectId, entity: EntityId) {
        self.links.insert(aspect, entity);
    }

    pub(crate) fn unlink(&mut self, aspect: &AspectId) -> Option<EntityId> {
        self.links.remove(aspect)
    }

    pub(crate) fn entity_of(&self, aspect: &AspectId) -> Option<&EntityId> {
        self.links.get(aspect)
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (&AspectId, &EntityId)> {
        self.links.iter()
    }

    pub(crate) fn forward(&self, entity: &EntityId) -> Vec<AspectId> {
        self.links
            .iter()
            .filter(|(_, e)| *e == entity)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub(crate) fn record(&mut self, record: AuditRecord) {
        self.audit.push(record);
    }

    pub(crate) fn clear_audit(&mut self) {
        self.audit.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct AliasBinding {
    pub figure: RoleId,
    pub token: Option<String>,
}

/// Anon role → the public figure it aliases, plus the proof token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasRegistry {
    bindings: BTreeMap<RoleId, AliasBinding>,
}

impl AliasRegistry {
    pub fn is_aliased(&self, anon: &RoleId) -> bool {
        self.bindings.contains_key(anon)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub(crate) fn bind(&mut self, anon: RoleId, figure: RoleId, token: Option<String>) {
        self.bindings.insert(anon, AliasBinding { figure, token });
    }

    pub(crate) fn get(&self, anon: &RoleId) -> Option<&AliasBinding> {
        self.bindings.get(anon)
    }

    pub(crate) fn remove(&mut self, anon: &RoleId) {
        self.bindings.remove(anon);
    }
}
