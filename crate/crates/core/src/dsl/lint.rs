use std::fmt;

use super::{Document, SourceSpan};
use crate::deontic::Stereotype;
use crate::metamodel::{EntityKind, WarrantScope};
use crate::patterns::{capabilities, TemplateName};
use crate::verb::Verb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LintCode {
    OwnerlessEntity,
    UncappedSeclusion,
    ObligationDerogatesExemption,
    UnusedWarrant,
    AspectEmbedsEntity,
}

impl LintCode {
    pub fn as_str(self) -> &'static str {
        match self {
            LintCode::OwnerlessEntity => "ownerless-entity",
            LintCode::UncappedSeclusion => "uncapped-seclusion",
            LintCode::ObligationDerogatesExemption => "obligation-derogates-exemption",
            LintCode::UnusedWarrant => "unused-warrant",
            LintCode::AspectEmbedsEntity => "aspect-embeds-entity",
        }
    }
}

impl fmt::Display for LintCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A warning about a model that is valid but probably not what was meant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lint {
    pub span: SourceSpan,
    pub code: LintCode,
    pub message: String,
}

impl fmt::Display for Lint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning[{}]: {}", self.span, self.code, self.message)
    }
}

/// Ownerless non-root entities, Secluded contexts without `max_intimates`,
/// obligations that derogate an exemption, warrants nothing can use, and
/// aspect ids that spell out their entity id. Sorted by position.
pub fn lint(doc: &Document) -> Vec<Lint> {
    let model = &doc.model;
    let fallback = SourceSpan::new(&doc.file, 1, 1, 0);
    let span = |map: &std::collections::BTreeMap<String, SourceSpan>, id: &str| {
        map.get(id).cloned().unwrap_or_else(|| fallback.clone())
    };
    let mut out = Vec::new();

    for e in model.entities() {
        let root = matches!(
            e.kind,
            EntityKind::NaturalPerson | EntityKind::LegalPerson | EntityKind::JudicialAuthority
        );
        if !root && model.owners_of(&e.id).is_empty() {
            out.push(Lint {
                span: span(&doc.spans.entities, e.id.as_str()),
                code: LintCode::OwnerlessEntity,
                message: format!("{} `{}` has no owner", e.kind, e.id),
            });
        }
    }

    for a in model.aspects() {
        if let Some(entity) = model.entity_behind(&a.id) {
            if a.id.as_str().contains(entity.as_str()) {
                out.push(Lint {
                    span: span(&doc.spans.aspects, a.id.as_str()),
                    code: LintCode::AspectEmbedsEntity,
                    message: format!("aspect id `{}` reveals its entity `{entity}`", a.id),
                });
            }
        }
    }

    for ctx in model.contexts() {
        if ctx.template == TemplateName::Secluded && ctx.param("max_intimates").is_none() {
            out.push(Lint {
                span: span(&doc.spans.contexts, ctx.id.as_str()),
                code: LintCode::UncappedSeclusion,
                message: format!("secluded context `{}` sets no max_intimates", ctx.id),
            });
        }
    }

    for rule in model.rules().iter() {
        if rule.stereotype != Stereotype::Obligation {
            continue;
        }
        let Some(target) = rule.derogates.as_ref().and_then(|t| model.rules().get(t)) else {
            continue;
        };
        if target.stereotype == Stereotype::Exemption {
            out.push(Lint {
                span: span(&doc.spans.rules, rule.id.as_str()),
                code: LintCode::ObligationDerogatesExemption,
                message: format!("obligation `{}` overrides exemption `{}`", rule.id, target.id),
            });
        }
    }

    for w in model.warrants() {
        let unused = match w.scope {
            WarrantScope::Surveil | WarrantScope::Compel => {
                let verb = if w.scope == WarrantScope::Surveil {
                    Verb::Surveil
                } else {
                    Verb::Compel
                };
                !model.roles().any(|r| {
                    let held = r.enactor.as_ref().and_then(|a| model.entity_behind(a)) == Some(&w.grantee);
                    held && model
                        .context(&r.context)
                        .is_some_and(|c| capabilities(c).permits(&r.role_type, verb))
                })
            }
            WarrantScope::Resolve => match &w.context {
                Some(ctx) => model.roles_in(ctx).next().is_none(),
                None => false,
            },
        };
        if unused {
            let message = match (w.scope, &w.context) {
                (WarrantScope::Resolve, Some(ctx)) => {
                    format!("resolve warrant `{}` is bound to `{ctx}`, which has no roles", w.id)
                }
                _ => format!(
                    "no role held by `{}` may {}; warrant `{}` is never usable",
                    w.grantee, w.scope, w.id
                ),
            };
            out.push(Lint {
                span: span(&doc.spans.warrants, w.id.as_str()),
                code: LintCode::UnusedWarrant,
                message,
            });
        }
    }

    out.sort();
    out
}
