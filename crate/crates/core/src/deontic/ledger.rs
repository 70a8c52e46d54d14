use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{RoleId, RuleId};

/// One triggered obligation instance, attached to the obligor role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObligationEntry {
    pub triggered_at: u64,
    pub rule: RuleId,
    pub obligor: RoleId,
    /// Last event number at which the obligation may still be discharged.
    pub deadline: Option<u64>,
}

impl ObligationEntry {
    pub fn overdue_at(&self, now: u64) -> bool {
        self.deadline.is_some_and(|d| d < now)
    }
}

/// Pending, discharged and breached obligations. The three sets partition
/// every obligation ever triggered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationLedger {
    pub pending: BTreeSet<ObligationEntry>,
    pub discharged: BTreeSet<ObligationEntry>,
    pub breached: BTreeSet<ObligationEntry>,
}

impl ObligationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a matching action by `obligor` at `now`.
    ///
    /// Any pending instance of the same rule for the same obligor is settled
    /// first: discharged when still in time, breached when already overdue.
    /// A fresh pending instance is then opened. Returns newly breached entries.
    pub fn trigger(
        &mut self,
        rule: &RuleId,
        obligor: &RoleId,
        now: u64,
        deadline: Option<u64>,
    ) -> Vec<ObligationEntry> {
        let settled: Vec<ObligationEntry> = self
            .pending
            .iter()
            .filter(|e| &e.rule == rule && &e.obligor == obligor)
            .cloned()
            .collect();
        let mut breached = Vec::new();
        for entry in settled {
            self.pending.remove(&entry);
            if entry.overdue_at(now) {
                self.breached.insert(entry.clone());
                breached.push(entry);
            } else {
                self.discharged.insert(entry);
            }
        }
        self.pending.insert(ObligationEntry {
            triggered_at: now,
            rule: rule.clone(),
            obligor: obligor.clone(),
            deadline,
        });
        breached
    }

    /// Moves every pending obligation whose deadline is strictly before `now`
    /// to breached.
    pub fn tick(&mut self, now: u64) -> Vec<ObligationEntry> {
        let overdue: Vec<ObligationEntry> = self.pending.iter().filter(|e| e.overdue_at(now)).cloned().collect();
        for entry in &overdue {
            self.pending.remove(entry);
            self.breached.insert(entry.clone());
        }
        overdue
    }

    /// Breaches every pending obligation held by a role that no longer exists.
    pub fn breach_obligor(&mut self, obligor: &RoleId) -> Vec<ObligationEntry> {
        let held: Vec<ObligationEntry> = self.pending.iter().filter(|e| &e.obligor == obligor).cloned().collect();
        for entry in &held {
            self.pending.remove(entry);
            self.breached.insert(entry.clone());
        }
        held
    }

    pub fn total(&self) -> usize {
        self.pending.len() + self.discharged.len() + self.breached.len()
    }

    pub fn is_partition(&self) -> bool {
        self.pending.is_disjoint(&self.discharged)
            && self.pending.is_disjoint(&self.breached)
            && self.discharged.is_disjoint(&self.breached)
    }
}

/// Value-returning form of [`ObligationLedger::tick`].
pub fn tick_obligations(ledger: &ObligationLedger, now: u64) -> (ObligationLedger, Vec<ObligationEntry>) {
    let mut next = ledger.clone();
    let breached = next.tick(now);
    (next, breached)
}
