use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::deontic::{ChainLink, ObligationEntry, ObligationLedger, Outcome};
use crate::metamodel::{AuditRecord, Violation};
use crate::verb::Verb;

/// Outcome of one replayed event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub seq: u64,
    pub verb: Verb,
    pub actor: String,
    pub outcome: Outcome,
    pub chain: Vec<ChainLink>,
    /// Structural failures and obligation breaches observed at this step.
    pub violations: Vec<String>,
    /// Ids created or removed by the step. Not part of the serialized report.
    #[serde(skip)]
    pub delta: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub permits: usize,
    pub forbids: usize,
    pub structural_errors: usize,
    pub breaches: usize,
    pub final_violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub events: Vec<StepResult>,
    pub obligations: ObligationLedger,
    pub audit: Vec<AuditRecord>,
    pub summary: Summary,
}

impl RunReport {
    /// Pretty JSON with a trailing newline. Byte-stable for identical runs.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn event(&self, seq: u64) -> Option<&StepResult> {
        self.events.iter().find(|e| e.seq == seq)
    }

    /// Whether any event was forbidden or any obligation breached.
    pub fn has_forbids_or_breaches(&self) -> bool {
        self.summary.forbids > 0 || self.summary.breaches > 0
    }

    pub fn human_summary(&self) -> String {
        let s = &self.summary;
        format!(
            "permits: {}\nforbids: {}\nstructural errors: {}\nbreaches: {}\nfinal violations: {}\n",
            s.permits,
            s.forbids,
            s.structural_errors,
            s.breaches,
            s.final_violations.len()
        )
    }
}

pub(crate) fn describe_breach(entry: &ObligationEntry) -> String {
    match entry.deadline {
        Some(d) => format!(
            "obligation `{}` of `{}` breached (deadline {d})",
            entry.rule, entry.obligor
        ),
        None => format!("obligation `{}` of `{}` breached", entry.rule, entry.obligor),
    }
}

/// Renders the verdict chain of event `seq`, root rule first.
pub fn explain(report: &RunReport, seq: u64) -> Option<String> {
    let event = report.event(seq)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "#{} {} {} -> {}",
        event.seq, event.actor, event.verb, event.outcome
    );
    if event.chain.is_empty() {
        out.push_str("  chain: empty\n");
    }
    for (i, link) in event.chain.iter().enumerate() {
        let arrow = if i == 0 { "  " } else { "  <- " };
        let _ = write!(
            out,
            "{arrow}{} «{}» scope {}: {}",
            link.rule, link.stereotype, link.scope, link.action
        );
        if let Some(target) = &link.derogates {
            let _ = write!(out, " (derogates {target})");
        }
        out.push('\n');
    }
    for v in &event.violations {
        let _ = writeln!(out, "  ! {v}");
    }
    Some(out)
}
