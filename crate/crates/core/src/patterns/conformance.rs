use std::collections::BTreeMap;

use super::ops::owned_by_intimate;
use super::{check_param, multiplicity, param_or_default, template, TemplateName};
use crate::ids::{RoleId, RoleType};
use crate::metamodel::{validate_structure, ContextInstance, EntityKind, Model, Violation};

/// Template conformance of one context: multiplicities, bundled rules,
/// parameters and the template's special constraints.
pub fn check_conformance(model: &Model, ctx: &ContextInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut counts: BTreeMap<&RoleType, usize> = BTreeMap::new();
    for role in model.roles_in(&ctx.id) {
        *counts.entry(&role.role_type).or_default() += 1;
        if multiplicity(ctx, role.role_type.as_str()).is_none() {
            out.push(Violation::UnknownRoleType {
                context: ctx.id.clone(),
                role: role.id.clone(),
                role_type: role.role_type.clone(),
            });
        }
    }

    let t = template(ctx.template);
    for spec in &t.roles {
        let (min, max) = multiplicity(ctx, spec.role_type).unwrap_or((spec.min, spec.max));
        let count = counts.get(&RoleType::new(spec.role_type)).copied().unwrap_or(0);
        if count < min || max.is_some_and(|m| count > m) {
            out.push(Violation::Multiplicity {
                context: ctx.id.clone(),
                role_type: RoleType::new(spec.role_type),
                count,
                min,
                max,
            });
        }
    }

    for rule in &t.bundled {
        if !model.rules().contains(&rule.id) {
            out.push(Violation::MissingBundledRule {
                context: ctx.id.clone(),
                rule: rule.id.clone(),
            });
        }
    }

    for (key, value) in &ctx.params {
        if let Err(message) = check_param(ctx.template, key, value) {
            out.push(Violation::ParamError {
                context: ctx.id.clone(),
                key: key.clone(),
                message,
            });
        }
    }

    // Kind of the entity behind a role, or None when the enactor dangles.
    let kind_of = |role: &RoleId| {
        model
            .role(role)
            .and_then(|r| r.enactor.as_ref())
            .and_then(|a| model.kind_behind(a))
    };
    let dangling = |role: &RoleId| {
        model
            .role(role)
            .and_then(|r| r.enactor.as_ref())
            .is_some_and(|a| model.aspect(a).is_none())
    };

    match ctx.template {
        TemplateName::Secluded => {
            for role in model.roles_in(&ctx.id).filter(|r| r.role_type.is(RoleType::SECRET)) {
                if dangling(&role.id) {
                    continue;
                }
                let ok = role
                    .enactor
                    .as_ref()
                    .and_then(|a| model.entity_behind(a))
                    .is_some_and(|e| owned_by_intimate(model, &ctx.id, e));
                if !ok {
                    out.push(Violation::SecretNotOwnedByIntimate {
                        context: ctx.id.clone(),
                        role: role.id.clone(),
                    });
                }
            }
        }
        TemplateName::Trusting if param_or_default(ctx, "mode") == Some("legal") => {
            for role in model.roles_in(&ctx.id).filter(|r| r.role_type.is(RoleType::TRUSTEE)) {
                if !dangling(&role.id) && !kind_of(&role.id).is_some_and(EntityKind::is_legal_actor) {
                    out.push(Violation::LegalActorRequired {
                        context: ctx.id.clone(),
                        role: role.id.clone(),
                    });
                }
            }
        }
        TemplateName::PublicSphere => {
            for role in model.roles_in(&ctx.id) {
                if role.role_type.is(RoleType::ANON) {
                    let aliased = model.aliases.get(&role.id).is_some_and(|b| {
                        model
                            .role(&b.figure)
                            .is_some_and(|f| f.context == ctx.id && f.role_type.is(RoleType::PUBLIC_FIGURE))
                    });
                    if !aliased {
                        out.push(Violation::UnaliasedAnon {
                            context: ctx.id.clone(),
                            role: role.id.clone(),
                        });
                    }
                }
                if role.role_type.is(RoleType::GOVERNOR)
                    && !dangling(&role.id)
                    && kind_of(&role.id) != Some(EntityKind::JudicialAuthority)
                {
                    out.push(Violation::GovernorNotJudicial {
                        context: ctx.id.clone(),
                        role: role.id.clone(),
                    });
                }
            }
        }
        _ => {}
    }

    out.sort();
    out
}

/// Structural validation plus template conformance of every context.
pub fn check(model: &Model) -> Vec<Violation> {
    let mut out = validate_structure(model);
    for ctx in model.contexts() {
        out.extend(check_conformance(model, ctx));
    }
    out.sort();
    out.dedup();
    out
}
