use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EntityKind, Model};
use crate::deontic::Stereotype;
use crate::ids::{AspectId, ContextId, EntityId, RoleId, RoleType, RuleId, WarrantId};

/// One broken invariant, naming the offending ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Violation {
    OrphanAspect {
        aspect: AspectId,
    },
    DanglingLinkage {
        aspect: AspectId,
        entity: EntityId,
    },
    OrphanRole {
        role: RoleId,
        context: ContextId,
    },
    DanglingEnactor {
        role: RoleId,
        aspect: AspectId,
    },
    RoleContextMismatch {
        role: RoleId,
        context: ContextId,
    },
    ContextWithoutEmbodiment {
        context: ContextId,
        entity: EntityId,
    },
    EmbodimentMismatch {
        context: ContextId,
        entity: EntityId,
    },
    DanglingOwnership {
        owner: EntityId,
        owned: EntityId,
    },
    AntiSlavery {
        owner: EntityId,
        owned: EntityId,
    },
    IneligibleOwner {
        owner: EntityId,
        owned: EntityId,
    },
    MultipleOwners {
        entity: EntityId,
        owners: Vec<EntityId>,
    },
    DanglingDerogation {
        rule: RuleId,
        target: RuleId,
    },
    IllegalDerogationPair {
        rule: RuleId,
        target: RuleId,
    },
    DerogationCycle {
        rules: Vec<RuleId>,
    },
    DeadlineOnNonObligation {
        rule: RuleId,
    },
    DanglingWarrantParty {
        warrant: WarrantId,
        entity: EntityId,
    },
    WarrantIssuerNotJudicial {
        warrant: WarrantId,
        issuer: EntityId,
    },
    DanglingWarrantContext {
        warrant: WarrantId,
        context: ContextId,
    },
    UnknownRoleType {
        context: ContextId,
        role: RoleId,
        role_type: RoleType,
    },
    Multiplicity {
        context: ContextId,
        role_type: RoleType,
        count: usize,
        min: usize,
        max: Option<usize>,
    },
    MissingBundledRule {
        context: ContextId,
        rule: RuleId,
    },
    ParamError {
        context: ContextId,
        key: String,
        message: String,
    },
    SecretNotOwnedByIntimate {
        context: ContextId,
        role: RoleId,
    },
    LegalActorRequired {
        context: ContextId,
        role: RoleId,
    },
    UnaliasedAnon {
        context: ContextId,
        role: RoleId,
    },
    GovernorNotJudicial {
        context: ContextId,
        role: RoleId,
    },
}

impl Violation {
    /// Variant name, as it appears in the serialized `kind` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::OrphanAspect { .. } => "OrphanAspect",
            Violation::DanglingLinkage { .. } => "DanglingLinkage",
            Violation::OrphanRole { .. } => "OrphanRole",
            Violation::DanglingEnactor { .. } => "DanglingEnactor",
            Violation::RoleContextMismatch { .. } => "RoleContextMismatch",
            Violation::ContextWithoutEmbodiment { .. } => "ContextWithoutEmbodiment",
            Violation::EmbodimentMismatch { .. } => "EmbodimentMismatch",
            Violation::DanglingOwnership { .. } => "DanglingOwnership",
            Violation::AntiSlavery { .. } => "AntiSlavery",
            Violation::IneligibleOwner { .. } => "IneligibleOwner",
            Violation::MultipleOwners { .. } => "MultipleOwners",
            Violation::DanglingDerogation { .. } => "DanglingDerogation",
            Violation::IllegalDerogationPair { .. } => "IllegalDerogationPair",
            Violation::DerogationCycle { .. } => "DerogationCycle",
            Violation::DeadlineOnNonObligation { .. } => "DeadlineOnNonObligation",
            Violation::DanglingWarrantParty { .. } => "DanglingWarrantParty",
            Violation::WarrantIssuerNotJudicial { .. } => "WarrantIssuerNotJudicial",
            Violation::DanglingWarrantContext { .. } => "DanglingWarrantContext",
            Violation::UnknownRoleType { .. } => "UnknownRoleType",
            Violation::Multiplicity { .. } => "Multiplicity",
            Violation::MissingBundledRule { .. } => "MissingBundledRule",
            Violation::ParamError { .. } => "ParamError",
            Violation::SecretNotOwnedByIntimate { .. } => "SecretNotOwnedByIntimate",
            Violation::LegalActorRequired { .. } => "LegalActorRequired",
            Violation::UnaliasedAnon { .. } => "UnaliasedAnon",
            Violation::GovernorNotJudicial { .. } => "GovernorNotJudicial",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OrphanAspect { aspect } => write!(f, "aspect `{aspect}` has no linkage entry"),
            Violation::DanglingLinkage { aspect, entity } => {
                write!(f, "linkage entry `{aspect}` -> `{entity}` points at a missing record")
            }
            Violation::OrphanRole { role, context } => {
                write!(f, "role `{role}` belongs to missing context `{context}`")
            }
            Violation::DanglingEnactor { role, aspect } => {
                write!(f, "role `{role}` is enacted by unknown aspect `{aspect}`")
            }
            Violation::RoleContextMismatch { role, context } => {
                write!(f, "context `{context}` lists role `{role}` which does not reference it")
            }
            Violation::ContextWithoutEmbodiment { context, entity } => {
                write!(f, "context `{context}` is embodied by unknown entity `{entity}`")
            }
            Violation::EmbodimentMismatch { context, entity } => {
                write!(
                    f,
                    "embodiment of `{context}` by `{entity}` is not recorded on both sides"
                )
            }
            Violation::DanglingOwnership { owner, owned } => {
                write!(f, "ownership `{owner}` -> `{owned}` names a missing entity")
            }
            Violation::AntiSlavery { owner, owned } => {
                write!(f, "natural person `{owned}` is owned by `{owner}`")
            }
            Violation::IneligibleOwner { owner, owned } => {
                write!(f, "`{owner}` may not own `{owned}`")
            }
            Violation::MultipleOwners { entity, owners } => {
                let names: Vec<&str> = owners.iter().map(EntityId::as_str).collect();
                write!(f, "`{entity}` has several owners: {}", names.join(", "))
            }
            Violation::DanglingDerogation { rule, target } => {
                write!(f, "rule `{rule}` derogates unknown rule `{target}`")
            }
            Violation::IllegalDerogationPair { rule, target } => {
                write!(f, "rule `{rule}` may not derogate `{target}`")
            }
            Violation::DerogationCycle { rules } => {
                let names: Vec<&str> = rules.iter().map(RuleId::as_str).collect();
                write!(f, "derogation cycle through {}", names.join(", "))
            }
            Violation::DeadlineOnNonObligation { rule } => {
                write!(f, "rule `{rule}` has a deadline but is not an obligation")
            }
            Violation::DanglingWarrantParty { warrant, entity } => {
                write!(f, "warrant `{warrant}` names unknown entity `{entity}`")
            }
            Violation::WarrantIssuerNotJudicial { warrant, issuer } => {
                write!(f, "warrant `{warrant}` issued by `{issuer}`, not a judicial authority")
            }
            Violation::DanglingWarrantContext { warrant, context } => {
                write!(f, "warrant `{warrant}` is bound to unknown context `{context}`")
            }
            Violation::UnknownRoleType {
                context,
                role,
                role_type,
            } => {
                write!(
                    f,
                    "role `{role}` in `{context}` has type `{role_type}` unknown to its template"
                )
            }
            Violation::Multiplicity {
                context,
                role_type,
                count,
                min,
                max,
            } => {
                let max = max.map_or("*".to_owned(), |m| m.to_string());
                write!(
                    f,
                    "`{context}` has {count} `{role_type}` role(s), expected {min}..{max}"
                )
            }
            Violation::MissingBundledRule { context, rule } => {
                write!(f, "bundled rule `{rule}` required by `{context}` is missing")
            }
            Violation::ParamError { context, key, message } => {
                write!(f, "parameter `{key}` of `{context}`: {message}")
            }
            Violation::SecretNotOwnedByIntimate { context, role } => {
                write!(f, "secret `{role}` in `{context}` is not owned by an intimate")
            }
            Violation::LegalActorRequired { context, role } => {
                write!(f, "trustee `{role}` in legal trust `{context}` is not a legal actor")
            }
            Violation::UnaliasedAnon { context, role } => {
                write!(
                    f,
                    "anon `{role}` in `{context}` is not aliased to a public figure of the sphere"
                )
            }
            Violation::GovernorNotJudicial { context, role } => {
                write!(f, "governor `{role}` in `{context}` is not a judicial authority")
            }
        }
    }
}

/// Every violated structural invariant of the model, sorted. Total: never
/// fails, and an empty list means structurally sound.
pub fn validate_structure(model: &Model) -> Vec<Violation> {
    let mut out = Vec::new();

    for aspect in model.aspects.keys() {
        if !model.linkage.contains(aspect) {
            out.push(Violation::OrphanAspect { aspect: aspect.clone() });
        }
    }
    for (aspect, entity) in model.linkage.entries() {
        if !model.aspects.contains_key(aspect) || !model.entities.contains_key(entity) {
            out.push(Violation::DanglingLinkage {
                aspect: aspect.clone(),
                entity: entity.clone(),
            });
        }
    }

    for role in model.roles.values() {
        match model.contexts.get(&role.context) {
            None => out.push(Violation::OrphanRole {
                role: role.id.clone(),
                context: role.context.clone(),
            }),
            Some(ctx) if !ctx.roles.contains(&role.id) => out.push(Violation::RoleContextMismatch {
                role: role.id.clone(),
                context: ctx.id.clone(),
            }),
            Some(_) => {}
        }
        if let Some(aspect) = &role.enactor {
            if !model.aspects.contains_key(aspect) {
                out.push(Violation::DanglingEnactor {
                    role: role.id.clone(),
                    aspect: aspect.clone(),
                });
            }
        }
    }

    for ctx in model.contexts.values() {
        for role in &ctx.roles {
            if model.roles.get(role).is_none_or(|r| r.context != ctx.id) {
                out.push(Violation::RoleContextMismatch {
                    role: role.clone(),
                    context: ctx.id.clone(),
                });
            }
        }
        match model.entities.get(&ctx.embodied_by) {
            None => out.push(Violation::ContextWithoutEmbodiment {
                context: ctx.id.clone(),
                entity: ctx.embodied_by.clone(),
            }),
            Some(e) if e.embodies.as_ref() != Some(&ctx.id) => out.push(Violation::EmbodimentMismatch {
                context: ctx.id.clone(),
                entity: e.id.clone(),
            }),
            Some(_) => {}
        }
    }
    for entity in model.entities.values() {
        if let Some(ctx) = &entity.embodies {
            if model.contexts.get(ctx).is_none_or(|c| c.embodied_by != entity.id) {
                out.push(Violation::EmbodimentMismatch {
                    context: ctx.clone(),
                    entity: entity.id.clone(),
                });
            }
        }
    }

    let mut owners: BTreeMap<&EntityId, Vec<EntityId>> = BTreeMap::new();
    for owner in model.entities.values() {
        for owned in &owner.owns {
            let Some(owned_rec) = model.entities.get(owned) else {
                out.push(Violation::DanglingOwnership {
                    owner: owner.id.clone(),
                    owned: owned.clone(),
                });
                continue;
            };
            owners.entry(owned).or_default().push(owner.id.clone());
            let self_owned = owner.id == *owned;
            if owned_rec.kind == EntityKind::NaturalPerson && !self_owned {
                out.push(Violation::AntiSlavery {
                    owner: owner.id.clone(),
                    owned: owned.clone(),
                });
            } else if !(self_owned && owned_rec.kind == EntityKind::NaturalPerson)
                && !owner.kind.may_own(model.strict_ownership())
            {
                out.push(Violation::IneligibleOwner {
                    owner: owner.id.clone(),
                    owned: owned.clone(),
                });
            }
        }
    }
    for (entity, list) in owners {
        if list.len() > 1 {
            out.push(Violation::MultipleOwners {
                entity: entity.clone(),
                owners: list,
            });
        }
    }

    for rule in model.rules.iter() {
        if rule.deadline.is_some() && rule.stereotype != Stereotype::Obligation {
            out.push(Violation::DeadlineOnNonObligation { rule: rule.id.clone() });
        }
        let Some(target) = &rule.derogates else { continue };
        match model.rules.get(target) {
            None => out.push(Violation::DanglingDerogation {
                rule: rule.id.clone(),
                target: target.clone(),
            }),
            Some(t) if !rule.stereotype.may_derogate(t.stereotype) => out.push(Violation::IllegalDerogationPair {
                rule: rule.id.clone(),
                target: target.clone(),
            }),
            Some(_) => {}
        }
    }
    for rules in model.rules.cycles() {
        out.push(Violation::DerogationCycle { rules });
    }

    for w in model.warrants.values() {
        for party in [&w.issuer, &w.grantee] {
            if !model.entities.contains_key(party) {
                out.push(Violation::DanglingWarrantParty {
                    warrant: w.id.clone(),
                    entity: party.clone(),
                });
            }
        }
        if model
            .entities
            .get(&w.issuer)
            .is_some_and(|e| e.kind != EntityKind::JudicialAuthority)
        {
            out.push(Violation::WarrantIssuerNotJudicial {
                warrant: w.id.clone(),
                issuer: w.issuer.clone(),
            });
        }
        if let Some(ctx) = &w.context {
            if !model.contexts.contains_key(ctx) {
                out.push(Violation::DanglingWarrantContext {
                    warrant: w.id.clone(),
                    context: ctx.clone(),
                });
            }
        }
    }

    out.sort();
    out.dedup();
    out
}
