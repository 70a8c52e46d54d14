//! The five privacy-state templates: role vocabularies with multiplicities,
//! capability tables, bundled rules and parameter schemas.

mod conformance;
mod offensive;
mod ops;

pub use conformance::{check, check_conformance};
pub use offensive::{Blocklist, OffensivePredicate, DEFAULT_BLOCKLIST};
pub(crate) use ops::build_context;
pub use ops::{
    access_asset, act, appeal, authenticate_anonym, claim_solitude, control, create_anon, deposit_secret, disclose,
    enact, instantiate, invite, join, publish, relinquish, reveal, sanction, ActOptions, AppealRecord, Instantiation,
    PatternError, ReserveBook, SanctionRecord,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deontic::{ActionPattern, CapabilityTable, Condition, DeonticRule, RuleOrigin, Scope, Stereotype};
use crate::ids::RoleType;
use crate::metamodel::{ContextInstance, EntityKind};
use crate::verb::Verb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateName {
    Isolated,
    Secluded,
    PublicSphere,
    Trusting,
    Generic,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::Isolated,
        TemplateName::Secluded,
        TemplateName::PublicSphere,
        TemplateName::Trusting,
        TemplateName::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Isolated => "Isolated",
            TemplateName::Secluded => "Secluded",
            TemplateName::PublicSphere => "PublicSphere",
            TemplateName::Trusting => "Trusting",
            TemplateName::Generic => "Generic",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateName::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// A role slot of a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleSpec {
    pub role_type: &'static str,
    pub min: usize,
    pub max: Option<usize>,
    pub verbs: &'static [Verb],
    /// Whether an aspect may take this role with a plain `enact`.
    pub enactable: bool,
    pub summary: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamKind {
    /// Integer no smaller than the bound.
    IntAtLeast(u64),
    OneOf(&'static [&'static str]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: ParamKind,
    pub default: Option<&'static str>,
    pub summary: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternTemplate {
    pub name: TemplateName,
    pub state: &'static str,
    pub summary: &'static str,
    pub roles: Vec<RoleSpec>,
    pub params: Vec<ParamSpec>,
    pub bundled: Vec<DeonticRule>,
}

impl PatternTemplate {
    pub fn role(&self, role_type: &str) -> Option<&RoleSpec> {
        self.roles.iter().find(|r| r.role_type == role_type)
    }

    pub fn param(&self, key: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.key == key)
    }
}

use Verb::*;

const ISOLATE_VERBS: &[Verb] = &[Introspect];
const INTRUDER_VERBS: &[Verb] = &[Intrude, Observe, Control, Surveil, Compel];
const INTIMATE_VERBS: &[Verb] = &[Invite, Join, Reveal, DepositSecret, Observe, Control];
const FIGURE_VERBS: &[Verb] = &[Publish, Appeal, CreateAnon, Observe, Surveil, Compel];
const ANON_VERBS: &[Verb] = &[Publish, Observe];
const SOCIETY_VERBS: &[Verb] = &[Sanction, Observe];
const SPHERE_GOVERNOR_VERBS: &[Verb] = &[Observe, Surveil, Compel];
const TRUSTER_VERBS: &[Verb] = &[Disclose, Observe, Control];
const TRUSTEE_VERBS: &[Verb] = &[AccessAsset, Disclose, Observe];

fn rule(
    template: TemplateName,
    id: &str,
    stereotype: Stereotype,
    verb: Option<Verb>,
    scope: &str,
    text: &str,
) -> DeonticRule {
    DeonticRule::new(
        id,
        stereotype,
        ActionPattern::new(verb, Scope::parse(scope)).within(template),
    )
    .with_origin(RuleOrigin::Bundled(template))
    .with_text(text)
}

pub fn template(name: TemplateName) -> PatternTemplate {
    use Stereotype::*;
    use TemplateName as T;
    match name {
        T::Isolated => PatternTemplate {
            name,
            state: "Solitude",
            summary: "an isolate who may only introspect, shielded from intruders",
            roles: vec![
                RoleSpec {
                    role_type: "Isolate",
                    min: 1,
                    max: Some(1),
                    verbs: ISOLATE_VERBS,
                    enactable: false,
                    summary: "introspects; observes and controls no one",
                },
                RoleSpec {
                    role_type: "Intruder",
                    min: 0,
                    max: None,
                    verbs: INTRUDER_VERBS,
                    enactable: true,
                    summary: "forbidden from intruding on the isolate",
                },
                RoleSpec {
                    role_type: "Guarantor",
                    min: 0,
                    max: Some(1),
                    verbs: &[],
                    enactable: true,
                    summary: "answers solitude claims",
                },
                RoleSpec {
                    role_type: "Governor",
                    min: 0,
                    max: Some(1),
                    verbs: &[],
                    enactable: true,
                    summary: "may sanction urgent intrusions",
                },
            ],
            params: vec![],
            bundled: vec![rule(
                T::Isolated,
                "isolated-no-intrusion",
                Forbiddance,
                None,
                "Intruder",
                "intruders shall not act on the isolate",
            )
            .tap_target("Isolate")],
        },
        T::Secluded => PatternTemplate {
            name,
            state: "Intimacy",
            summary: "a small invited group sharing secrets owned by its members",
            roles: vec![
                RoleSpec {
                    role_type: "Intimate",
                    min: 2,
                    max: None,
                    verbs: INTIMATE_VERBS,
                    enactable: false,
                    summary: "joins only by invitation; reveals nothing outside",
                },
                RoleSpec {
                    role_type: "Secret",
                    min: 0,
                    max: None,
                    verbs: &[],
                    enactable: false,
                    summary: "an entity owned by one of the intimates",
                },
            ],
            params: vec![ParamSpec {
                key: "max_intimates",
                kind: ParamKind::IntAtLeast(2),
                default: None,
                summary: "upper limit on the size of the group",
            }],
            bundled: vec![
                rule(
                    T::Secluded,
                    "secluded-uninvited-join",
                    Forbiddance,
                    Some(Join),
                    "Intimate",
                    "no one joins without an invitation",
                ),
                rule(
                    T::Secluded,
                    "secluded-invited-join",
                    Allowance,
                    Some(Join),
                    "Intimate",
                    "an invitee may join",
                )
                .tap_condition(Condition::Invitation)
                .derogating("secluded-uninvited-join"),
                rule(
                    T::Secluded,
                    "secluded-no-reveal",
                    Forbiddance,
                    Some(Reveal),
                    "Intimate",
                    "intimates reveal nothing to outsiders",
                )
                .tap_target(RoleType::OUTSIDER),
            ],
        },
        T::PublicSphere => PatternTemplate {
            name,
            state: "Anonymity and Reserve",
            summary: "public figures and their anons publish under the society's reserve",
            roles: vec![
                RoleSpec {
                    role_type: "PublicFigure",
                    min: 0,
                    max: None,
                    verbs: FIGURE_VERBS,
                    enactable: true,
                    summary: "publishes, appeals, creates anons",
                },
                RoleSpec {
                    role_type: "Anon",
                    min: 0,
                    max: None,
                    verbs: ANON_VERBS,
                    enactable: false,
                    summary: "aliased to exactly one public figure",
                },
                RoleSpec {
                    role_type: "PublicProperty",
                    min: 0,
                    max: None,
                    verbs: &[],
                    enactable: false,
                    summary: "a published work",
                },
                RoleSpec {
                    role_type: "Society",
                    min: 1,
                    max: Some(1),
                    verbs: SOCIETY_VERBS,
                    enactable: false,
                    summary: "judges offensiveness; names and shames",
                },
                RoleSpec {
                    role_type: "Governor",
                    min: 0,
                    max: Some(1),
                    verbs: SPHERE_GOVERNOR_VERBS,
                    enactable: true,
                    summary: "a judicial authority hearing appeals",
                },
            ],
            params: vec![
                ParamSpec {
                    key: "linkability",
                    kind: ParamKind::OneOf(&["persistent", "unlinkable"]),
                    default: Some("persistent"),
                    summary: "whether an anon keeps a history or acts at most once",
                },
                ParamSpec {
                    key: "authentication",
                    kind: ParamKind::OneOf(&["always-deny", "prove-on-match"]),
                    default: Some("always-deny"),
                    summary: "answer policy of authenticate-anonym",
                },
            ],
            bundled: vec![
                rule(
                    T::PublicSphere,
                    "publicsphere-reserve-figure",
                    Forbiddance,
                    Some(Publish),
                    "PublicFigure",
                    "offensive publication breaches reserve",
                ),
                rule(
                    T::PublicSphere,
                    "publicsphere-unoffensive-figure",
                    Allowance,
                    Some(Publish),
                    "PublicFigure",
                    "unoffensive publication is allowed",
                )
                .tap_condition(Condition::Unoffensive)
                .derogating("publicsphere-reserve-figure"),
                rule(
                    T::PublicSphere,
                    "publicsphere-reserve-anon",
                    Forbiddance,
                    Some(Publish),
                    "Anon",
                    "offensive publication breaches reserve",
                ),
                rule(
                    T::PublicSphere,
                    "publicsphere-unoffensive-anon",
                    Allowance,
                    Some(Publish),
                    "Anon",
                    "unoffensive publication is allowed",
                )
                .tap_condition(Condition::Unoffensive)
                .derogating("publicsphere-reserve-anon"),
                rule(
                    T::PublicSphere,
                    "publicsphere-no-unmasking-figure",
                    Forbiddance,
                    None,
                    "PublicFigure",
                    "no help in piercing the veil of anonymity",
                )
                .tap_target(RoleType::ANON),
                rule(
                    T::PublicSphere,
                    "publicsphere-no-unmasking-anon",
                    Forbiddance,
                    None,
                    "Anon",
                    "no help in piercing the veil of anonymity",
                )
                .tap_target(RoleType::ANON),
                rule(
                    T::PublicSphere,
                    "publicsphere-sanction-requires-breach",
                    Forbiddance,
                    Some(Sanction),
                    "Society",
                    "no sanction without a breach",
                ),
                rule(
                    T::PublicSphere,
                    "publicsphere-sanction-on-breach",
                    Allowance,
                    Some(Sanction),
                    "Society",
                    "a reserve breach may be named and shamed",
                )
                .tap_condition(Condition::TargetBreached)
                .derogating("publicsphere-sanction-requires-breach"),
            ],
        },
        T::Trusting => PatternTemplate {
            name,
            state: "Confidence",
            summary: "a trustee holds a duty of care over the truster's asset",
            roles: vec![
                RoleSpec {
                    role_type: "Truster",
                    min: 1,
                    max: None,
                    verbs: TRUSTER_VERBS,
                    enactable: true,
                    summary: "controls the trustee; consents to disclosure",
                },
                RoleSpec {
                    role_type: "Trustee",
                    min: 1,
                    max: None,
                    verbs: TRUSTEE_VERBS,
                    enactable: true,
                    summary: "accesses the asset under a duty of care",
                },
                RoleSpec {
                    role_type: "Asset",
                    min: 1,
                    max: None,
                    verbs: &[],
                    enactable: true,
                    summary: "the truster's entrusted asset",
                },
            ],
            params: vec![ParamSpec {
                key: "mode",
                kind: ParamKind::OneOf(&["informal", "legal"]),
                default: Some("informal"),
                summary: "legal trusts require trustees that are legal actors",
            }],
            bundled: vec![
                rule(
                    T::Trusting,
                    "trustee-no-disclosure",
                    Forbiddance,
                    Some(Disclose),
                    "Trustee",
                    "trustees keep the asset confidential",
                ),
                rule(
                    T::Trusting,
                    "trustee-consented-disclosure",
                    Allowance,
                    Some(Disclose),
                    "Trustee",
                    "disclosure with the truster's consent",
                )
                .tap_condition(Condition::Consent)
                .derogating("trustee-no-disclosure"),
                rule(
                    T::Trusting,
                    "trustee-duty-of-care",
                    Obligation,
                    Some(AccessAsset),
                    "Trustee",
                    "duty of care for the truster's asset",
                )
                .tap_target(RoleType::ASSET)
                .with_deadline(10),
            ],
        },
        T::Generic => PatternTemplate {
            name,
            state: "none",
            summary: "user-defined roles; capabilities from cap_<RoleType> parameters",
            roles: vec![],
            params: vec![],
            bundled: vec![],
        },
    }
}

trait Tap {
    fn tap_target(self, role_type: &str) -> Self;
    fn tap_condition(self, condition: Condition) -> Self;
}

impl Tap for DeonticRule {
    fn tap_target(mut self, role_type: &str) -> Self {
        self.pattern = self.pattern.target(role_type);
        self
    }

    fn tap_condition(mut self, condition: Condition) -> Self {
        self.pattern = self.pattern.when(condition);
        self
    }
}

/// Global surveillance and compulsion rules carried by every model.
pub fn baseline_rules() -> Vec<DeonticRule> {
    let warranted = |id: &str, verb: Verb, target: &str, text: &str| {
        DeonticRule::new(
            id,
            Stereotype::Allowance,
            ActionPattern::new(Some(verb), Scope::Kind(EntityKind::Actor)).when(Condition::Warranted),
        )
        .derogating(target)
        .with_origin(RuleOrigin::Baseline)
        .with_text(text)
    };
    let forbid = |id: &str, verb: Verb, text: &str| {
        DeonticRule::new(
            id,
            Stereotype::Forbiddance,
            ActionPattern::new(Some(verb), Scope::Kind(EntityKind::Actor)),
        )
        .with_origin(RuleOrigin::Baseline)
        .with_text(text)
    };
    vec![
        forbid(
            "no-surveillance",
            Surveil,
            "actors are generally forbidden from surveilling",
        ),
        forbid(
            "no-compulsion",
            Compel,
            "actors are generally forbidden from compelling",
        ),
        warranted(
            "warranted-surveillance",
            Surveil,
            "no-surveillance",
            "a judicial authority may allow some surveillance",
        ),
        warranted(
            "warranted-compulsion",
            Compel,
            "no-compulsion",
            "a judicial authority may allow some compulsion",
        ),
    ]
}

/// Capability table in force for a context.
pub fn capabilities(ctx: &ContextInstance) -> CapabilityTable {
    let mut table = CapabilityTable::new();
    if ctx.template == TemplateName::Generic {
        for (key, value) in &ctx.params {
            if let Some(role_type) = key.strip_prefix("cap_") {
                let verbs = value.split(',').filter_map(|v| v.trim().parse::<Verb>().ok());
                table.insert(RoleType::new(role_type), verbs);
            }
        }
        return table;
    }
    for spec in template(ctx.template).roles {
        table.insert(RoleType::new(spec.role_type), spec.verbs.iter().copied());
    }
    table
}

/// Effective multiplicity of a role type in a context, or `None` if the
/// template does not know the role type.
pub fn multiplicity(ctx: &ContextInstance, role_type: &str) -> Option<(usize, Option<usize>)> {
    if ctx.template == TemplateName::Generic {
        return Some((0, None));
    }
    let t = template(ctx.template);
    let spec = t.role(role_type)?;
    let mut max = spec.max;
    if ctx.template == TemplateName::Secluded && role_type == RoleType::INTIMATE {
        max = ctx.param("max_intimates").and_then(|v| v.parse().ok());
    }
    Some((spec.min, max))
}

/// Value of a parameter, falling back to the template default.
pub fn param_or_default<'a>(ctx: &'a ContextInstance, key: &str) -> Option<&'a str> {
    if let Some(v) = ctx.param(key) {
        return Some(v);
    }
    template(ctx.template).param(key).and_then(|p| p.default)
}

/// Checks one parameter against its template schema.
pub fn check_param(template_name: TemplateName, key: &str, value: &str) -> Result<(), String> {
    if template_name == TemplateName::Generic {
        let Some(role_type) = key.strip_prefix("cap_") else {
            return Err("Generic contexts only take cap_<RoleType> parameters".to_owned());
        };
        if !crate::ids::is_valid_ident(role_type) {
            return Err(format!("`{role_type}` is not a valid role type"));
        }
        for verb in value.split(',') {
            if verb.trim().parse::<Verb>().is_err() {
                return Err(format!("unknown verb `{verb}`"));
            }
        }
        return Ok(());
    }
    let t = template(template_name);
    let Some(spec) = t.param(key) else {
        return Err(format!("{template_name} has no parameter `{key}`"));
    };
    match &spec.kind {
        ParamKind::IntAtLeast(min) => match value.parse::<u64>() {
            Ok(n) if n >= *min => Ok(()),
            _ => Err(format!("expected an integer of at least {min}, found `{value}`")),
        },
        ParamKind::OneOf(choices) if choices.contains(&value) => Ok(()),
        ParamKind::OneOf(choices) => Err(format!("expected one of {}, found `{value}`", choices.join(", "))),
    }
}

/// Human-readable catalog of all templates.
pub fn catalog() -> String {
    let mut out = String::new();
    for name in TemplateName::ALL {
        let t = template(name);
        out.push_str(&format!("{} ({}): {}\n", t.name, t.state, t.summary));
        for r in &t.roles {
            let max = r.max.map_or("*".to_owned(), |m| m.to_string());
            let verbs: Vec<&str> = r.verbs.iter().map(|v| v.as_str()).collect();
            let verbs = if verbs.is_empty() {
                "-".to_owned()
            } else {
                verbs.join(", ")
            };
            out.push_str(&format!(
                "  role {:<15} {}..{:<3} {:<48} {}\n",
                r.role_type, r.min, max, verbs, r.summary
            ));
        }
        for p in &t.params {
            let choices = match &p.kind {
                ParamKind::IntAtLeast(min) => format!("integer >= {min}"),
                ParamKind::OneOf(c) => c.join(" | "),
            };
            let default = p.default.map_or(String::new(), |d| format!(" (default {d})"));
            out.push_str(&format!("  param {} = {choices}{default}: {}\n", p.key, p.summary));
        }
        for r in &t.bundled {
            let derogates = r
                .derogates
                .as_ref()
                .map_or(String::new(), |d| format!(" derogates {d}"));
            out.push_str(&format!("  {} {}: {}{derogates}\n", r.stereotype, r.id, r.pattern));
        }
    }
    out.push_str(
        "Corporation: catalogued for reference only; it carries no privacy requirements and no engine support\n",
    );
    out
}

/// A starter model that parses and instantiates the template with
/// placeholder ids.
pub fn scaffold(name: TemplateName) -> String {
    let body = match name {
        TemplateName::Isolated => {
            "entity pod : Inert\n\
             entity provider : LegalPerson\n\
             entity sleeper : NaturalPerson\n\
             aspect guest of sleeper\n\
             aspect front-desk of provider\n\
             owns provider pod\n\
             context solitude : Isolated embodied-by pod {\n\
             \x20 role Isolate guest\n\
             \x20 role Guarantor front-desk\n\
             }\n"
        }
        TemplateName::Secluded => {
            "entity circle : SentientActor\n\
             entity first : NaturalPerson\n\
             entity second : NaturalPerson\n\
             aspect p1 of first\n\
             aspect p2 of second\n\
             owns first circle\n\
             context intimacy : Secluded embodied-by circle {\n\
             \x20 role Intimate p1, p2\n\
             \x20 param max_intimates = 4\n\
             }\n"
        }
        TemplateName::PublicSphere => {
            "entity society : LegalPerson\n\
             entity court : JudicialAuthority\n\
             entity writer : NaturalPerson\n\
             aspect commons of society\n\
             aspect bench of court\n\
             aspect byline of writer\n\
             context sphere : PublicSphere embodied-by society {\n\
             \x20 role PublicFigure byline\n\
             \x20 role Society commons\n\
             \x20 role Governor bench\n\
             \x20 param linkability = persistent\n\
             }\n"
        }
        TemplateName::Trusting => {
            "entity trust : LegalPerson\n\
             entity owner : NaturalPerson\n\
             entity holder : LegalPerson\n\
             entity records : Inert\n\
             aspect client of owner\n\
             aspect custodian of holder\n\
             aspect file of records\n\
             owns owner records\n\
             context confidence : Trusting embodied-by trust {\n\
             \x20 role Truster client\n\
             \x20 role Trustee custodian\n\
             \x20 role Asset file\n\
             \x20 param mode = legal\n\
             }\n"
        }
        TemplateName::Generic => {
            "entity stage : LegalPerson\n\
             entity player : NaturalPerson\n\
             aspect part of player\n\
             context play : Generic embodied-by stage {\n\
             \x20 role Actor part\n\
             \x20 param cap_Actor = observe\n\
             }\n"
        }
    };
    format!("# {name} starter model\n{body}")
}

/// Bundled rules of a template, by id.
pub fn bundled_rules(name: TemplateName) -> BTreeMap<crate::ids::RuleId, DeonticRule> {
    template(name).bundled.into_iter().map(|r| (r.id.clone(), r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deontic::RuleBook;

    #[test]
    fn names_round_trip() {
        for t in TemplateName::ALL {
            assert_eq!(t.as_str().parse::<TemplateName>(), Ok(t));
        }
    }

    #[test]
    fn bundled_rules_are_scoped_to_template_roles() {
        for name in TemplateName::ALL {
            let t = template(name);
            for r in &t.bundled {
                match &r.pattern.actor {
                    Scope::Role(rt) => assert!(t.role(rt.as_str()).is_some(), "{} in {name}", r.id),
                    Scope::Kind(_) => panic!("bundled rule {} scoped to a kind", r.id),
                }
                assert_eq!(r.pattern.template, Some(name));
            }
        }
        assert!(template(TemplateName::Generic).bundled.is_empty());
    }

    #[test]
    fn bundles_and_baseline_form_a_legal_rule_book() {
        let mut book = RuleBook::new();
        for r in baseline_rules() {
            book.add_rule(r).unwrap();
        }
        for name in TemplateName::ALL {
            for r in template(name).bundled {
                book.add_rule(r).unwrap();
            }
        }
        assert!(book.cycles().is_empty());
    }

    #[test]
    fn confidence_is_asymmetric() {
        let t = template(TemplateName::Trusting);
        let truster = t.role("Truster").unwrap().verbs;
        let trustee = t.role("Trustee").unwrap().verbs;
        assert_ne!(truster, trustee);
        assert!(trustee.contains(&AccessAsset));
        assert!(!truster.contains(&AccessAsset));
    }

    #[test]
    fn param_schema() {
        assert!(check_param(TemplateName::Secluded, "max_intimates", "3").is_ok());
        assert!(check_param(TemplateName::Secluded, "max_intimates", "1").is_err());
        assert!(check_param(TemplateName::Secluded, "max_intimates", "abc").is_err());
        assert!(check_param(TemplateName::PublicSphere, "linkability", "unlinkable").is_ok());
        assert!(check_param(TemplateName::PublicSphere, "linkability", "sometimes").is_err());
        assert!(check_param(TemplateName::Generic, "cap_Member", "observe,control").is_ok());
        assert!(check_param(TemplateName::Generic, "cap_Member", "fly").is_err());
        assert!(check_param(TemplateName::Isolated, "anything", "x").is_err());
    }
}
