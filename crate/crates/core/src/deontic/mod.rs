//! Forbiddance / allowance / obligation / exemption rules with derogation,
//! and the evaluator that turns a candidate action into a [`Verdict`].
//!
//! Resolution order for one action:
//!
//! 1. default deny: a verb missing from the actor role's capability set is
//!    forbidden with an empty chain (so is surveil/compel by an inert entity);
//! 2. every matching rule is a candidate; the winner is the most specific,
//!    then the deepest in the derogation graph, then the lexicographically
//!    smallest id;
//! 3. the chain is the winner's derogation ancestry, root first, and its last
//!    stereotype decides the outcome. An obligation winner is recorded in
//!    [`Verdict::obligations_triggered`].

mod ledger;

pub use ledger::{tick_obligations, ObligationEntry, ObligationLedger};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ContextId, RoleId, RoleType, RuleId};
use crate::metamodel::{ContextInstance, EntityKind, RoleInstance};
use crate::patterns::TemplateName;
use crate::verb::Verb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stereotype {
    /// Correctness constraint. Compiled into structural checks, never evaluated.
    Requirement,
    /// SHALL NOT be performed.
    Forbiddance,
    /// MAY be performed.
    Allowance,
    /// SHALL be performed.
    Obligation,
    /// MAY NOT be performed.
    Exemption,
}

impl Stereotype {
    pub const RUNTIME: [Stereotype; 4] = [
        Stereotype::Forbiddance,
        Stereotype::Allowance,
        Stereotype::Obligation,
        Stereotype::Exemption,
    ];

    /// Whether a rule of this stereotype may derogate one of `target`.
    pub fn may_derogate(self, target: Stereotype) -> bool {
        matches!(
            (self, target),
            (Stereotype::Allowance, Stereotype::Forbiddance)
                | (Stereotype::Forbiddance, Stereotype::Allowance)
                | (Stereotype::Exemption, Stereotype::Obligation)
                | (Stereotype::Obligation, Stereotype::Exemption)
        )
    }

    pub fn outcome(self) -> Outcome {
        match self {
            Stereotype::Allowance | Stereotype::Obligation => Outcome::Permit,
            Stereotype::Forbiddance | Stereotype::Exemption => Outcome::Forbid,
            Stereotype::Requirement => Outcome::StructuralError,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Stereotype::Requirement => "requirement",
            Stereotype::Forbiddance => "forbiddance",
            Stereotype::Allowance => "allowance",
            Stereotype::Obligation => "obligation",
            Stereotype::Exemption => "exemption",
        }
    }
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Stereotype {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "requirement" => Ok(Stereotype::Requirement),
            "forbiddance" => Ok(Stereotype::Forbiddance),
            "allowance" => Ok(Stereotype::Allowance),
            "obligation" => Ok(Stereotype::Obligation),
            "exemption" => Ok(Stereotype::Exemption),
            _ => Err(()),
        }
    }
}

/// Facts about a single event that a rule may be conditioned on. The engine
/// computes them; the DSL cannot express conditions, so only bundled rules
/// carry one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// An unconsumed invitation addressed to the actor was presented.
    Invitation,
    /// An unconsumed consent token issued by a truster was presented.
    Consent,
    /// The acting entity holds a live warrant whose scope matches the verb.
    Warranted,
    /// The published content passed the society's offensiveness predicate.
    Unoffensive,
    /// The target role has a recorded reserve breach.
    TargetBreached,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Invitation => "invitation",
            Condition::Consent => "consent",
            Condition::Warranted => "warranted",
            Condition::Unoffensive => "unoffensive",
            Condition::TargetBreached => "target-breached",
        };
        f.write_str(s)
    }
}

/// Who a rule speaks to: holders of a role type, or any actor whose entity
/// kind is a subtype of the given kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scope {
    Role(RoleType),
    Kind(EntityKind),
}

impl Scope {
    /// Entity-kind names take precedence over role-type names.
    pub fn parse(raw: &str) -> Scope {
        match raw.parse::<EntityKind>() {
            Ok(kind) => Scope::Kind(kind),
            Err(_) => Scope::Role(RoleType::new(raw)),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Role(r) => write!(f, "{r}"),
            Scope::Kind(k) => write!(f, "{k}"),
        }
    }
}

/// Machine form of a callout's action text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPattern {
    /// `None` is the wildcard.
    pub verb: Option<Verb>,
    pub actor: Scope,
    pub target: Option<RoleType>,
    pub template: Option<TemplateName>,
    pub condition: Option<Condition>,
}

impl ActionPattern {
    pub fn new(verb: Option<Verb>, actor: Scope) -> Self {
        Self {
            verb,
            actor,
            target: None,
            template: None,
            condition: None,
        }
    }

    pub fn target(mut self, role_type: &str) -> Self {
        self.target = Some(RoleType::new(role_type));
        self
    }

    pub fn within(mut self, template: TemplateName) -> Self {
        self.template = Some(template);
        self
    }

    pub fn when(mut self, condition: Condition) -> Self {
        self.condition = Some(condition);
        self
    }

    /// Count of non-wildcard fields. The actor scope is never a wildcard.
    pub fn specificity(&self) -> u32 {
        1 + u32::from(self.verb.is_some())
            + u32::from(self.target.is_some())
            + u32::from(self.template.is_some())
            + u32::from(self.condition.is_some())
    }

    pub fn matches(&self, request: &ActionRequest<'_>, template: TemplateName) -> bool {
        if let Some(verb) = self.verb {
            if verb != request.verb {
                return false;
            }
        }
        let actor_ok = match &self.actor {
            Scope::Role(role_type) => request.actor.role_type == *role_type,
            Scope::Kind(kind) => request.actor_kind.is_some_and(|k| k.is_a(*kind)),
        };
        if !actor_ok {
            return false;
        }
        if let Some(target) = &self.target {
            if request.target.as_ref() != Some(target) {
                return false;
            }
        }
        if let Some(t) = self.template {
            if t != template {
                return false;
            }
        }
        if let Some(c) = self.condition {
            if !request.conditions.contains(&c) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for ActionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verb {
            Some(v) => write!(f, "{v}")?,
            None => f.write_str("*")?,
        }
        write!(f, " by {}", self.actor)?;
        if let Some(t) = &self.target {
            write!(f, " target {t}")?;
        }
        if let Some(t) = self.template {
            write!(f, " in {t}")?;
        }
        if let Some(c) = self.condition {
            write!(f, " when {c}")?;
        }
        Ok(())
    }
}

/// Where a rule came from. Only user rules are written back by the renderer;
/// the others are re-created from the model's contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleOrigin {
    Baseline,
    Bundled(TemplateName),
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeonticRule {
    pub id: RuleId,
    pub stereotype: Stereotype,
    pub pattern: ActionPattern,
    pub derogates: Option<RuleId>,
    /// Event count allowed between trigger and discharge. Obligations only.
    pub deadline: Option<u64>,
    pub text: String,
    pub origin: RuleOrigin,
}

impl DeonticRule {
    pub fn new(id: impl Into<RuleId>, stereotype: Stereotype, pattern: ActionPattern) -> Self {
        Self {
            id: id.into(),
            stereotype,
            pattern,
            derogates: None,
            deadline: None,
            text: String::new(),
            origin: RuleOrigin::User,
        }
    }

    pub fn derogating(mut self, target: impl Into<RuleId>) -> Self {
        self.derogates = Some(target.into());
        self
    }

    pub fn with_deadline(mut self, events: u64) -> Self {
        self.deadline = Some(events);
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    pub fn with_origin(mut self, origin: RuleOrigin) -> Self {
        self.origin = origin;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeonticError {
    #[error("rule `{0}` is already defined")]
    DuplicateRule(RuleId),
    #[error("unknown rule `{0}`")]
    UnknownRule(RuleId),
    #[error("{rule} ({stereotype}) may not derogate {target} ({target_stereotype})")]
    IllegalDerogationPair {
        rule: RuleId,
        stereotype: Stereotype,
        target: RuleId,
        target_stereotype: Stereotype,
    },
    #[error("derogation of `{target}` by `{rule}` would close a cycle")]
    DerogationCycle { rule: RuleId, target: RuleId },
    #[error("rule `{0}` carries a deadline but is not an obligation")]
    DeadlineOnNonObligation(RuleId),
    #[error("role `{role}` does not belong to context `{context}`")]
    RoleNotInContext { role: RoleId, context: ContextId },
}

/// The active rule set, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleBook {
    rules: BTreeMap<RuleId, DeonticRule>,
}

impl RuleBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &RuleId) -> Option<&DeonticRule> {
        self.rules.get(id)
    }

    pub fn contains(&self, id: &RuleId) -> bool {
        self.rules.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeonticRule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Registers a rule after checking the derogation edge it introduces.
    pub fn add_rule(&mut self, rule: DeonticRule) -> Result<RuleId, DeonticError> {
        if self.rules.contains_key(&rule.id) {
            return Err(DeonticError::DuplicateRule(rule.id));
        }
        if rule.deadline.is_some() && rule.stereotype != Stereotype::Obligation {
            return Err(DeonticError::DeadlineOnNonObligation(rule.id));
        }
        if let Some(target) = &rule.derogates {
            self.check_edge(&rule.id, rule.stereotype, target)?;
        }
        let id = rule.id.clone();
        self.rules.insert(id.clone(), rule);
        Ok(id)
    }

    /// Re-points (or clears) an existing rule's derogation edge.
    pub fn set_derogation(&mut self, rule: &RuleId, target: Option<RuleId>) -> Result<(), DeonticError> {
        let stereotype = self
            .rules
            .get(rule)
            .ok_or_else(|| DeonticError::UnknownRule(rule.clone()))?
            .stereotype;
        if let Some(t) = &target {
            self.check_edge(rule, stereotype, t)?;
        }
        if let Some(r) = self.rules.get_mut(rule) {
            r.derogates = target;
        }
        Ok(())
    }

    fn check_edge(&self, rule: &RuleId, stereotype: Stereotype, target: &RuleId) -> Result<(), DeonticError> {
        let target_rule = self
            .rules
            .get(target)
            .ok_or_else(|| DeonticError::UnknownRule(target.clone()))?;
        if !stereotype.may_derogate(target_rule.stereotype) {
            return Err(DeonticError::IllegalDerogationPair {
                rule: rule.clone(),
                stereotype,
                target: target.clone(),
                target_stereotype: target_rule.stereotype,
            });
        }
        // Walking up from the target must not reach the rule itself.
        let mut cursor = Some(target.clone());
        let mut steps = 0;
        while let Some(id) = cursor {
            if &id == rule {
                return Err(DeonticError::DerogationCycle {
                    rule: rule.clone(),
                    target: target.clone(),
                });
            }
            steps += 1;
            if steps > self.rules.len() {
                break;
            }
            cursor = self.rules.get(&id).and_then(|r| r.derogates.clone());
        }
        Ok(())
    }

    /// Inserts or replaces without any check. Used by the permissive model
    /// builder so that `validate_structure` can report what is wrong.
    pub(crate) fn insert_unchecked(&mut self, rule: DeonticRule) {
        self.rules.insert(rule.id.clone(), rule);
    }

    pub(crate) fn remove(&mut self, id: &RuleId) -> Option<DeonticRule> {
        self.rules.remove(id)
    }

    pub(crate) fn get_mut(&mut self, id: &RuleId) -> Option<&mut DeonticRule> {
        self.rules.get_mut(id)
    }

    /// The rule's derogation ancestry, root first and ending at the rule.
    /// Stops at dangling targets and at the first repeated rule.
    pub fn ancestry(&self, id: &RuleId) -> Vec<&DeonticRule> {
        let mut path = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cursor = self.rules.get(id);
        while let Some(rule) = cursor {
            if !seen.insert(&rule.id) {
                break;
            }
            path.push(rule);
            cursor = rule.derogates.as_ref().and_then(|t| self.rules.get(t));
        }
        path.reverse();
        path
    }

    /// Number of derogation edges between the rule and its root.
    pub fn depth(&self, id: &RuleId) -> usize {
        self.ancestry(id).len().saturating_sub(1)
    }

    /// Every derogation cycle, each as its sorted member set.
    pub fn cycles(&self) -> Vec<Vec<RuleId>> {
        let mut found: BTreeSet<Vec<RuleId>> = BTreeSet::new();
        for start in self.rules.keys() {
            let mut order: Vec<&RuleId> = Vec::new();
            let mut cursor = Some(start);
            while let Some(id) = cursor {
                if let Some(pos) = order.iter().position(|seen| *seen == id) {
                    let mut cycle: Vec<RuleId> = order[pos..].iter().map(|r| (*r).clone()).collect();
                    cycle.sort();
                    found.insert(cycle);
                    break;
                }
                order.push(id);
                cursor = self.rules.get(id).and_then(|r| r.derogates.as_ref());
            }
        }
        found.into_iter().collect()
    }
}

/// Role type → verbs a holder of that role may attempt at all.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityTable(BTreeMap<RoleType, BTreeSet<Verb>>);

impl CapabilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, role_type: &str, verbs: &[Verb]) -> Self {
        self.insert(RoleType::new(role_type), verbs.iter().copied());
        self
    }

    pub fn insert(&mut self, role_type: RoleType, verbs: impl IntoIterator<Item = Verb>) {
        self.0.entry(role_type).or_default().extend(verbs);
    }

    pub fn permits(&self, role_type: &RoleType, verb: Verb) -> bool {
        self.0.get(role_type).is_some_and(|set| set.contains(&verb))
    }

    pub fn verbs_of(&self, role_type: &RoleType) -> BTreeSet<Verb> {
        self.0.get(role_type).cloned().unwrap_or_default()
    }

    pub fn role_types(&self) -> impl Iterator<Item = &RoleType> {
        self.0.keys()
    }
}

/// One candidate action handed to [`evaluate`].
#[derive(Debug, Clone)]
pub struct ActionRequest<'a> {
    pub verb: Verb,
    pub actor: &'a RoleInstance,
    /// Kind of the entity behind the actor's enacting aspect, when known.
    pub actor_kind: Option<EntityKind>,
    /// Role type of the target within the actor's context, or `Outsider`.
    pub target: Option<RoleType>,
    pub conditions: BTreeSet<Condition>,
    /// Event sequence number, used for obligation deadlines.
    pub at: u64,
}

impl<'a> ActionRequest<'a> {
    pub fn new(verb: Verb, actor: &'a RoleInstance) -> Self {
        Self {
            verb,
            actor,
            actor_kind: None,
            target: None,
            conditions: BTreeSet::new(),
            at: 0,
        }
    }

    pub fn kind(mut self, kind: EntityKind) -> Self {
        self.actor_kind = Some(kind);
        self
    }

    pub fn target(mut self, role_type: &str) -> Self {
        self.target = Some(RoleType::new(role_type));
        self
    }

    pub fn condition(mut self, condition: Condition) -> Self {
        self.conditions.insert(condition);
        self
    }

    pub fn at(mut self, seq: u64) -> Self {
        self.at = seq;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Permit,
    Forbid,
    StructuralError,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Permit => "permit",
            Outcome::Forbid => "forbid",
            Outcome::StructuralError => "structural-error",
        })
    }
}

/// One applied rule as it appears in a verdict chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub rule: RuleId,
    pub stereotype: Stereotype,
    pub scope: String,
    pub action: String,
    pub derogates: Option<RuleId>,
}

impl ChainLink {
    fn of(rule: &DeonticRule) -> Self {
        Self {
            rule: rule.id.clone(),
            stereotype: rule.stereotype,
            scope: rule.pattern.actor.to_string(),
            action: rule.pattern.to_string(),
            derogates: rule.derogates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggeredObligation {
    pub rule: RuleId,
    pub deadline: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Most general rule first.
    pub chain: Vec<ChainLink>,
    pub obligations_triggered: Vec<TriggeredObligation>,
}

impl Verdict {
    pub fn permit() -> Self {
        Self::bare(Outcome::Permit)
    }

    /// Forbid with an empty chain.
    pub fn deny() -> Self {
        Self::bare(Outcome::Forbid)
    }

    pub fn structural_error() -> Self {
        Self::bare(Outcome::StructuralError)
    }

    fn bare(outcome: Outcome) -> Self {
        Self {
            outcome,
            chain: Vec::new(),
            obligations_triggered: Vec::new(),
        }
    }

    pub fn rule_ids(&self) -> Vec<&RuleId> {
        self.chain.iter().map(|l| &l.rule).collect()
    }
}

/// Decides one action by `request.actor` in `context`.
pub fn evaluate(
    request: &ActionRequest<'_>,
    context: &ContextInstance,
    capabilities: &CapabilityTable,
    rules: &RuleBook,
) -> Result<Verdict, DeonticError> {
    if request.actor.context != context.id {
        return Err(DeonticError::RoleNotInContext {
            role: request.actor.id.clone(),
            context: context.id.clone(),
        });
    }
    if !capabilities.permits(&request.actor.role_type, request.verb) {
        return Ok(Verdict::deny());
    }
    if matches!(request.verb, Verb::Surveil | Verb::Compel) && request.actor_kind == Some(EntityKind::Inert) {
        return Ok(Verdict::deny());
    }

    let winner = rules
        .iter()
        .filter(|r| r.stereotype != Stereotype::Requirement)
        .filter(|r| r.pattern.matches(request, context.template))
        .map(|r| (r.pattern.specificity(), rules.depth(&r.id), r))
        .max_by(|(sa, da, ra), (sb, db, rb)| sa.cmp(sb).then(da.cmp(db)).then_with(|| rb.id.cmp(&ra.id)))
        .map(|(_, _, r)| r);

    let Some(winner) = winner else {
        return Ok(Verdict::permit());
    };

    let chain: Vec<ChainLink> = rules.ancestry(&winner.id).into_iter().map(ChainLink::of).collect();
    let mut verdict = Verdict {
        outcome: winner.stereotype.outcome(),
        chain,
        obligations_triggered: Vec::new(),
    };
    if winner.stereotype == Stereotype::Obligation {
        verdict.obligations_triggered.push(TriggeredObligation {
            rule: winner.id.clone(),
            deadline: winner.deadline.map(|d| request.at + d),
        });
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::ContextId;
    use crate::patterns::TemplateName;

    fn ctx(template: TemplateName) -> ContextInstance {
        ContextInstance::bare(ContextId::new("c"), template, "e".into())
    }

    fn role(role_type: &str) -> RoleInstance {
        RoleInstance::new(
            RoleId::new(format!("c.{role_type}.1")),
            RoleType::new(role_type),
            ContextId::new("c"),
            None,
        )
    }

    fn forbid(id: &str, verb: Verb, scope: &str) -> DeonticRule {
        DeonticRule::new(
            id,
            Stereotype::Forbiddance,
            ActionPattern::new(Some(verb), Scope::parse(scope)),
        )
    }

    fn allow(id: &str, verb: Verb, scope: &str) -> DeonticRule {
        DeonticRule::new(
            id,
            Stereotype::Allowance,
            ActionPattern::new(Some(verb), Scope::parse(scope)),
        )
    }

    #[test]
    fn derogation_pair_table() {
        use Stereotype::*;
        let legal: Vec<(Stereotype, Stereotype)> = Stereotype::RUNTIME
            .iter()
            .flat_map(|a| Stereotype::RUNTIME.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.may_derogate(*b))
            .collect();
        assert_eq!(
            legal,
            vec![
                (Forbiddance, Allowance),
                (Allowance, Forbiddance),
                (Obligation, Exemption),
                (Exemption, Obligation)
            ]
        );
    }

    #[test]
    fn allowance_may_derogate_forbiddance() {
        let mut book = RuleBook::new();
        book.add_rule(forbid("f1", Verb::Observe, "Intruder")).unwrap();
        assert!(book
            .add_rule(allow("a1", Verb::Observe, "Intruder").derogating("f1"))
            .is_ok());
    }

    #[test]
    fn allowance_derogating_allowance_is_rejected() {
        let mut book = RuleBook::new();
        book.add_rule(allow("a0", Verb::Observe, "Intruder")).unwrap();
        let err = book
            .add_rule(allow("a1", Verb::Observe, "Intruder").derogating("a0"))
            .unwrap_err();
        assert!(matches!(err, DeonticError::IllegalDerogationPair { .. }));
    }

    #[test]
    fn deadline_only_on_obligations() {
        let mut book = RuleBook::new();
        let err = book
            .add_rule(forbid("f", Verb::Observe, "X").with_deadline(3))
            .unwrap_err();
        assert_eq!(err, DeonticError::DeadlineOnNonObligation(RuleId::new("f")));
    }

    /// Independent cycle detector: DFS with colour marking.
    fn has_cycle_dfs(book: &RuleBook) -> bool {
        fn visit(id: &RuleId, book: &RuleBook, colour: &mut BTreeMap<RuleId, u8>) -> bool {
            match colour.get(id) {
                Some(1) => return true,
                Some(2) => return false,
                _ => {}
            }
            colour.insert(id.clone(), 1);
            if let Some(next) = book.get(id).and_then(|r| r.derogates.clone()) {
                if book.contains(&next) && visit(&next, book, colour) {
                    return true;
                }
            }
            colour.insert(id.clone(), 2);
            false
        }
        let mut colour = BTreeMap::new();
        book.iter().any(|r| visit(&r.id, book, &mut colour))
    }

    #[test]
    fn repointing_into_a_cycle_is_rejected() {
        // F1 <- A1 <- F2 <- A2, then try F1 derogates A2.
        let mut book = RuleBook::new();
        book.add_rule(forbid("F1", Verb::Observe, "X")).unwrap();
        book.add_rule(allow("A1", Verb::Observe, "X").derogating("F1")).unwrap();
        book.add_rule(forbid("F2", Verb::Observe, "X").derogating("A1"))
            .unwrap();
        book.add_rule(allow("A2", Verb::Observe, "X").derogating("F2")).unwrap();

        let mut probe = book.clone();
        probe.insert_unchecked(forbid("F1", Verb::Observe, "X").derogating("A2"));
        assert!(has_cycle_dfs(&probe), "oracle sees the cycle");
        assert_eq!(probe.cycles().len(), 1);

        let err = book
            .set_derogation(&RuleId::new("F1"), Some(RuleId::new("A2")))
            .unwrap_err();
        assert!(matches!(err, DeonticError::DerogationCycle { .. }));
        assert!(!has_cycle_dfs(&book));
        assert!(book.cycles().is_empty());
    }

    #[test]
    fn introspect_by_isolate_is_permitted() {
        let caps = CapabilityTable::new().with("Isolate", &[Verb::Introspect]);
        let isolate = role("Isolate");
        let v = evaluate(
            &ActionRequest::new(Verb::Introspect, &isolate),
            &ctx(TemplateName::Isolated),
            &caps,
            &RuleBook::new(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Permit);
        assert!(v.chain.is_empty());
    }

    #[test]
    fn verb_outside_capabilities_is_default_denied() {
        let caps = CapabilityTable::new().with("Isolate", &[Verb::Introspect]);
        let isolate = role("Isolate");
        let v = evaluate(
            &ActionRequest::new(Verb::Observe, &isolate).target("Intruder"),
            &ctx(TemplateName::Isolated),
            &caps,
            &RuleBook::new(),
        )
        .unwrap();
        assert_eq!(v, Verdict::deny());
    }

    #[test]
    fn surveillance_without_warrant_hits_global_forbiddance() {
        let caps = CapabilityTable::new().with("PublicFigure", &[Verb::Surveil]);
        let mut book = RuleBook::new();
        book.add_rule(forbid("no-surveillance", Verb::Surveil, "Actor"))
            .unwrap();
        let figure = role("PublicFigure");
        let req = ActionRequest::new(Verb::Surveil, &figure)
            .kind(EntityKind::NaturalPerson)
            .target("Anon");
        let v = evaluate(&req, &ctx(TemplateName::PublicSphere), &caps, &book).unwrap();
        assert_eq!(v.outcome, Outcome::Forbid);
        assert_eq!(v.rule_ids(), vec![&RuleId::new("no-surveillance")]);
    }

    #[test]
    fn inert_entities_cannot_surveil() {
        let caps = CapabilityTable::new().with("X", &[Verb::Surveil]);
        let r = role("X");
        let req = ActionRequest::new(Verb::Surveil, &r).kind(EntityKind::Inert);
        let v = evaluate(&req, &ctx(TemplateName::Generic), &caps, &RuleBook::new()).unwrap();
        assert_eq!(v.outcome, Outcome::Forbid);
    }

    #[test]
    fn three_rule_chain_resolves_to_deepest() {
        let caps = CapabilityTable::new().with("X", &[Verb::Observe]);
        let mut book = RuleBook::new();
        book.add_rule(forbid("f1", Verb::Observe, "X")).unwrap();
        book.add_rule(allow("a1", Verb::Observe, "X").derogating("f1")).unwrap();
        book.add_rule(forbid("f2", Verb::Observe, "X").derogating("a1"))
            .unwrap();
        let r = role("X");
        let v = evaluate(
            &ActionRequest::new(Verb::Observe, &r),
            &ctx(TemplateName::Generic),
            &caps,
            &book,
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Forbid);
        let ids: Vec<&str> = v.chain.iter().map(|l| l.rule.as_str()).collect();
        assert_eq!(ids, ["f1", "a1", "f2"]);
    }

    #[test]
    fn specificity_beats_depth_and_id_breaks_ties() {
        let caps = CapabilityTable::new().with("X", &[Verb::Observe]);
        let mut book = RuleBook::new();
        book.add_rule(forbid("f1", Verb::Observe, "X")).unwrap();
        book.add_rule(allow("a1", Verb::Observe, "X").derogating("f1")).unwrap();
        let specific = DeonticRule::new(
            "z-specific",
            Stereotype::Forbiddance,
            ActionPattern::new(Some(Verb::Observe), Scope::parse("X")).within(TemplateName::Generic),
        );
        book.add_rule(specific).unwrap();
        let r = role("X");
        let v = evaluate(
            &ActionRequest::new(Verb::Observe, &r),
            &ctx(TemplateName::Generic),
            &caps,
            &book,
        )
        .unwrap();
        assert_eq!(v.rule_ids(), vec![&RuleId::new("z-specific")]);

        let mut ties = RuleBook::new();
        ties.add_rule(forbid("b", Verb::Observe, "X")).unwrap();
        ties.add_rule(allow("a", Verb::Observe, "X")).unwrap();
        let v = evaluate(
            &ActionRequest::new(Verb::Observe, &r),
            &ctx(TemplateName::Generic),
            &caps,
            &ties,
        )
        .unwrap();
        assert_eq!(v.rule_ids(), vec![&RuleId::new("a")]);
        assert_eq!(v.outcome, Outcome::Permit);
    }

    #[test]
    fn obligation_winner_is_triggered_with_deadline() {
        let caps = CapabilityTable::new().with("Trustee", &[Verb::AccessAsset]);
        let mut book = RuleBook::new();
        book.add_rule(
            DeonticRule::new(
                "care",
                Stereotype::Obligation,
                ActionPattern::new(Some(Verb::AccessAsset), Scope::parse("Trustee")),
            )
            .with_deadline(5),
        )
        .unwrap();
        let r = role("Trustee");
        let v = evaluate(
            &ActionRequest::new(Verb::AccessAsset, &r).at(7),
            &ctx(TemplateName::Trusting),
            &caps,
            &book,
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Permit);
        assert_eq!(
            v.obligations_triggered,
            vec![TriggeredObligation {
                rule: RuleId::new("care"),
                deadline: Some(12)
            }]
        );
    }

    #[test]
    fn foreign_role_is_rejected() {
        let caps = CapabilityTable::new();
        let mut r = role("X");
        r.context = ContextId::new("elsewhere");
        let err = evaluate(
            &ActionRequest::new(Verb::Observe, &r),
            &ctx(TemplateName::Generic),
            &caps,
            &RuleBook::new(),
        )
        .unwrap_err();
        assert!(matches!(err, DeonticError::RoleNotInContext { .. }));
    }
}
