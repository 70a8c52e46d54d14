//! Reference implementations written against the rules as stated, not
//! against the library code. They share only the plain enums.

use std::collections::BTreeSet;

use proptest::collection::vec;
use proptest::prelude::*;

use westin_core::deontic::{
    ActionPattern, ActionRequest, CapabilityTable, Condition, Outcome, RuleBook, Scope, Stereotype,
};
use westin_core::{DeonticRule, EntityKind, RoleType, TemplateName, Verb};

pub const ROLE_NAMES: [&str; 4] = ["R0", "R1", "R2", "R3"];
pub const CONDITIONS: [Condition; 5] = [
    Condition::Invitation,
    Condition::Consent,
    Condition::Warranted,
    Condition::Unoffensive,
    Condition::TargetBreached,
];
const RULE_VERBS: [Verb; 5] = [
    Verb::Observe,
    Verb::Control,
    Verb::Intrude,
    Verb::Disclose,
    Verb::Surveil,
];

/// Kind hierarchy: child to parent.
pub fn parent_kind(kind: EntityKind) -> Option<EntityKind> {
    use EntityKind::*;
    match kind {
        Inert | Actor => None,
        SentientActor | LegalPerson => Some(Actor),
        NaturalPerson => Some(SentientActor),
        JudicialAuthority => Some(LegalPerson),
    }
}

pub fn kind_is(kind: EntityKind, ancestor: EntityKind) -> bool {
    kind == ancestor || parent_kind(kind).is_some_and(|p| kind_is(p, ancestor))
}

/// Only legal persons own, plus natural persons when not strict.
pub fn may_own(kind: EntityKind, strict: bool) -> bool {
    matches!(kind, EntityKind::LegalPerson | EntityKind::JudicialAuthority)
        || (!strict && kind == EntityKind::NaturalPerson)
}

/// The derogating counterpart of a stereotype.
pub fn counterpart(s: Stereotype) -> Stereotype {
    match s {
        Stereotype::Forbiddance => Stereotype::Allowance,
        Stereotype::Allowance => Stereotype::Forbiddance,
        Stereotype::Obligation => Stereotype::Exemption,
        Stereotype::Exemption => Stereotype::Obligation,
        Stereotype::Requirement => Stereotype::Requirement,
    }
}

pub fn permits(s: Stereotype) -> bool {
    matches!(s, Stereotype::Allowance | Stereotype::Obligation)
}

#[derive(Debug, Clone)]
pub enum Who {
    Role(usize),
    Kind(EntityKind),
}

#[derive(Debug, Clone)]
pub struct GenRule {
    pub id: String,
    pub stereotype: Stereotype,
    pub verb: Option<Verb>,
    pub who: Who,
    pub target: Option<usize>,
    pub template: Option<TemplateName>,
    pub condition: Option<Condition>,
    /// Index of an earlier rule this one derogates.
    pub parent: Option<usize>,
    pub deadline: Option<u64>,
}

impl GenRule {
    pub fn to_rule(&self, parent_id: Option<&str>) -> DeonticRule {
        let scope = match &self.who {
            Who::Role(i) => Scope::Role(RoleType::new(ROLE_NAMES[*i])),
            Who::Kind(k) => Scope::Kind(*k),
        };
        let mut pattern = ActionPattern::new(self.verb, scope);
        if let Some(t) = self.target {
            pattern = pattern.target(ROLE_NAMES[t]);
        }
        if let Some(t) = self.template {
            pattern = pattern.within(t);
        }
        if let Some(c) = self.condition {
            pattern = pattern.when(c);
        }
        let mut rule = DeonticRule::new(self.id.as_str(), self.stereotype, pattern);
        if let Some(p) = parent_id {
            rule = rule.derogating(p);
        }
        if let Some(d) = self.deadline {
            rule = rule.with_deadline(d);
        }
        rule
    }

    fn specificity(&self) -> u32 {
        [
            self.verb.is_some(),
            self.target.is_some(),
            self.template.is_some(),
            self.condition.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count() as u32
            + 1
    }
}

fn stereotype_strategy() -> impl Strategy<Value = Stereotype> {
    prop::sample::select(vec![
        Stereotype::Forbiddance,
        Stereotype::Allowance,
        Stereotype::Obligation,
        Stereotype::Exemption,
    ])
}

fn who_strategy(roles: usize) -> impl Strategy<Value = Who> {
    prop_oneof![
        4 => (0..roles).prop_map(Who::Role),
        1 => prop::sample::select(EntityKind::ALL.to_vec()).prop_map(Who::Kind),
    ]
}

/// Up to `max` rules over `roles` role types. Derogation edges always
/// point to an earlier rule and always pair legally.
pub fn rule_world(max: usize, roles: usize) -> impl Strategy<Value = Vec<GenRule>> {
    let one = (
        stereotype_strategy(),
        prop::option::of(prop::sample::select(RULE_VERBS.to_vec())),
        who_strategy(roles),
        prop::option::weighted(0.4, 0..roles),
        prop::option::weighted(0.3, prop::sample::select(TemplateName::ALL.to_vec())),
        prop::option::weighted(0.3, prop::sample::select(CONDITIONS.to_vec())),
        prop::option::weighted(0.6, any::<prop::sample::Index>()),
        prop::option::of(0u64..4),
    );
    (vec(one, 1..=max), Just((0..max).collect::<Vec<usize>>()).prop_shuffle()).prop_map(|(raw, order)| {
        let mut rules: Vec<GenRule> = Vec::new();
        for (i, (st, verb, who, target, template, condition, parent, deadline)) in raw.into_iter().enumerate() {
            let parent = if i == 0 { None } else { parent.map(|ix| ix.index(i)) };
            let stereotype = match parent {
                Some(p) => counterpart(rules[p].stereotype),
                None => st,
            };
            let deadline = if stereotype == Stereotype::Obligation {
                deadline
            } else {
                None
            };
            rules.push(GenRule {
                // Ids are shuffled so that the tie-break is not index order.
                id: format!("r{}", order[i]),
                stereotype,
                verb,
                who,
                target,
                template,
                condition,
                parent,
                deadline,
            });
        }
        rules
    })
}

/// The subset of `rules` selected by `mask`, as a rule book. A derogation
/// whose target is outside the subset is dropped, making the rule a root.
pub fn book(rules: &[GenRule], mask: u32) -> RuleBook {
    let mut book = RuleBook::new();
    for (i, r) in rules.iter().enumerate() {
        if mask & (1 << i) == 0 {
            continue;
        }
        let parent = r.parent.filter(|p| mask & (1 << p) != 0).map(|p| rules[p].id.as_str());
        book.add_rule(r.to_rule(parent)).expect("generated rules are legal");
    }
    book
}

/// A request as the oracle sees it.
#[derive(Debug, Clone)]
pub struct Req {
    pub verb: Verb,
    pub actor: usize,
    pub kind: Option<EntityKind>,
    pub target: Option<usize>,
    pub template: TemplateName,
    pub conditions: BTreeSet<Condition>,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expected {
    pub outcome: Outcome,
    pub chain: Vec<String>,
    pub triggered: Option<(String, Option<u64>)>,
}

fn matches(r: &GenRule, q: &Req) -> bool {
    r.verb.is_none_or(|v| v == q.verb)
        && match &r.who {
            Who::Role(i) => *i == q.actor,
            Who::Kind(k) => q.kind.is_some_and(|actual| kind_is(actual, *k)),
        }
        && r.target.is_none_or(|t| Some(t) == q.target)
        && r.template.is_none_or(|t| t == q.template)
        && r.condition.is_none_or(|c| q.conditions.contains(&c))
}

/// Exhaustive decision: enumerate every matching rule in the subset with
/// its full derogation path, then take the most specific, deepest,
/// smallest-id one.
pub fn decide(rules: &[GenRule], mask: u32, caps: &[BTreeSet<Verb>], q: &Req) -> Expected {
    let deny = Expected {
        outcome: Outcome::Forbid,
        chain: Vec::new(),
        triggered: None,
    };
    if !caps[q.actor].contains(&q.verb) {
        return deny;
    }
    if matches!(q.verb, Verb::Surveil | Verb::Compel) && q.kind == Some(EntityKind::Inert) {
        return deny;
    }
    let in_subset = |i: usize| mask & (1 << i) != 0;
    let mut candidates: Vec<(u32, usize, &str, Vec<usize>)> = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        if !in_subset(i) || !matches(r, q) {
            continue;
        }
        let mut path = vec![i];
        let mut cursor = r.parent;
        while let Some(p) = cursor.filter(|p| in_subset(*p)) {
            path.push(p);
            cursor = rules[p].parent;
        }
        path.reverse();
        candidates.push((r.specificity(), path.len() - 1, &r.id, path));
    }
    let Some(best) = candidates
        .iter()
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| b.2.cmp(a.2)))
    else {
        return Expected {
            outcome: Outcome::Permit,
            chain: Vec::new(),
            triggered: None,
        };
    };
    let winner = &rules[*best.3.last().expect("path ends at the rule")];
    Expected {
        outcome: if permits(winner.stereotype) {
            Outcome::Permit
        } else {
            Outcome::Forbid
        },
        chain: best.3.iter().map(|i| rules[*i].id.clone()).collect(),
        triggered: (winner.stereotype == Stereotype::Obligation)
            .then(|| (winner.id.clone(), winner.deadline.map(|d| q.at + d))),
    }
}

pub fn capability_table(caps: &[BTreeSet<Verb>]) -> CapabilityTable {
    let mut table = CapabilityTable::new();
    for (i, verbs) in caps.iter().enumerate() {
        table.insert(RoleType::new(ROLE_NAMES[i]), verbs.iter().copied());
    }
    table
}

pub fn request<'a>(q: &Req, actor: &'a westin_core::metamodel::RoleInstance) -> ActionRequest<'a> {
    let mut req = ActionRequest::new(q.verb, actor).at(q.at);
    req.actor_kind = q.kind;
    if let Some(t) = q.target {
        req = req.target(ROLE_NAMES[t]);
    }
    req.conditions = q.conditions.clone();
    req
}

pub fn conditions_strategy() -> impl Strategy<Value = BTreeSet<Condition>> {
    prop::sample::subsequence(CONDITIONS.to_vec(), 0..=CONDITIONS.len()).prop_map(|v| v.into_iter().collect())
}

/// Obligation ledger as a flat list of (entry, state).
#[derive(Debug, Default)]
pub struct LedgerModel {
    pub entries: Vec<(u64, String, String, Option<u64>, LedgerState)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerState {
    Pending,
    Discharged,
    Breached,
}

impl LedgerModel {
    pub fn trigger(&mut self, rule: &str, obligor: &str, now: u64, deadline: Option<u64>) {
        for e in &mut self.entries {
            if e.4 == LedgerState::Pending && e.1 == rule && e.2 == obligor {
                e.4 = if e.3.is_some_and(|d| d < now) {
                    LedgerState::Breached
                } else {
                    LedgerState::Discharged
                };
            }
        }
        self.entries
            .push((now, rule.to_owned(), obligor.to_owned(), deadline, LedgerState::Pending));
    }

    pub fn tick(&mut self, now: u64) {
        for e in &mut self.entries {
            if e.4 == LedgerState::Pending && e.3.is_some_and(|d| d < now) {
                e.4 = LedgerState::Breached;
            }
        }
    }

    pub fn drop_obligor(&mut self, obligor: &str) {
        for e in &mut self.entries {
            if e.4 == LedgerState::Pending && e.2 == obligor {
                e.4 = LedgerState::Breached;
            }
        }
    }

    pub fn in_state(&self, state: LedgerState) -> BTreeSet<(u64, String, String, Option<u64>)> {
        self.entries
            .iter()
            .filter(|e| e.4 == state)
            .map(|e| (e.0, e.1.clone(), e.2.clone(), e.3))
            .collect()
    }
}
