use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::deontic::{RuleOrigin, Stereotype};
use crate::metamodel::Model;

/// Canonical text of a model. Statements are grouped by kind in the order
/// entity, aspect, owns, context, rule, warrant, with ids sorted inside each
/// group. Only user rules are written; bundled and baseline rules come back
/// from the contexts and the model defaults when the text is parsed again.
/// Aspects without a linkage entry and roles without an enactor have no
/// textual form and are skipped.
pub fn render_model(model: &Model) -> String {
    let mut groups: Vec<String> = Vec::new();

    let mut s = String::new();
    for e in model.entities() {
        let _ = writeln!(s, "entity {} : {}", e.id, e.kind);
    }
    groups.push(s);

    let mut s = String::new();
    for a in model.aspects() {
        if let Some(entity) = model.entity_behind(&a.id) {
            let _ = writeln!(s, "aspect {} of {}", a.id, entity);
        }
    }
    groups.push(s);

    let mut s = String::new();
    for e in model.entities() {
        for owned in &e.owns {
            let _ = writeln!(s, "owns {} {}", e.id, owned);
        }
    }
    groups.push(s);

    let mut blocks = Vec::new();
    for ctx in model.contexts() {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "context {} : {} embodied-by {} {{",
            ctx.id, ctx.template, ctx.embodied_by
        );
        let mut by_type: BTreeMap<&str, Vec<(u64, &str, &str)>> = BTreeMap::new();
        for role in model.roles_in(&ctx.id) {
            if let Some(enactor) = &role.enactor {
                let index = role
                    .id
                    .as_str()
                    .rsplit('.')
                    .next()
                    .and_then(|n| n.parse().ok())
                    .unwrap_or(u64::MAX);
                by_type
                    .entry(role.role_type.as_str())
                    .or_default()
                    .push((index, role.id.as_str(), enactor.as_str()));
            }
        }
        for (role_type, mut roles) in by_type {
            roles.sort();
            let aspects: Vec<&str> = roles.iter().map(|r| r.2).collect();
            let _ = writeln!(s, "  role {role_type} {}", aspects.join(", "));
        }
        for (key, value) in &ctx.params {
            let _ = writeln!(s, "  param {key} = {value}");
        }
        s.push_str("}\n");
        blocks.push(s);
    }
    groups.push(blocks.join("\n"));

    let mut s = String::new();
    for rule in model.rules().iter() {
        if rule.origin != RuleOrigin::User || rule.stereotype == Stereotype::Requirement {
            continue;
        }
        let p = &rule.pattern;
        let verb = p.verb.map_or("*", |v| v.as_str());
        let _ = write!(s, "{} {} on {} : {verb}", rule.stereotype, rule.id, p.actor);
        if let Some(t) = &p.target {
            let _ = write!(s, " target {t}");
        }
        if let Some(t) = p.template {
            let _ = write!(s, " in {t}");
        }
        if let Some(d) = &rule.derogates {
            let _ = write!(s, " derogates {d}");
        }
        if let Some(d) = rule.deadline {
            let _ = write!(s, " deadline {d}");
        }
        s.push('\n');
    }
    groups.push(s);

    let mut s = String::new();
    for w in model.warrants() {
        let _ = write!(
            s,
            "warrant {} from {} to {} scope {}",
            w.id, w.issuer, w.grantee, w.scope
        );
        if let Some(c) = &w.context {
            let _ = write!(s, " in {c}");
        }
        if let Some(e) = w.expiry {
            let _ = write!(s, " expires {e}");
        }
        s.push('\n');
    }
    groups.push(s);

    groups.retain(|g| !g.is_empty());
    groups.join("\n")
}
