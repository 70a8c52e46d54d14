use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Entity subtypes. `Inert` and `Actor` sit directly under the abstract
/// entity; `SentientActor` and `LegalPerson` under `Actor`; `NaturalPerson`
/// under `SentientActor`; `JudicialAuthority` under `LegalPerson`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Inert,
    Actor,
    SentientActor,
    NaturalPerson,
    LegalPerson,
    JudicialAuthority,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Inert,
        EntityKind::Actor,
        EntityKind::SentientActor,
        EntityKind::NaturalPerson,
        EntityKind::LegalPerson,
        EntityKind::JudicialAuthority,
    ];

    pub fn parent(self) -> Option<EntityKind> {
        match self {
            EntityKind::Inert | EntityKind::Actor => None,
            EntityKind::SentientActor | EntityKind::LegalPerson => Some(EntityKind::Actor),
            EntityKind::NaturalPerson => Some(EntityKind::SentientActor),
            EntityKind::JudicialAuthority => Some(EntityKind::LegalPerson),
        }
    }

    /// Reflexive subtype test.
    pub fn is_a(self, other: EntityKind) -> bool {
        let mut cursor = Some(self);
        while let Some(k) = cursor {
            if k == other {
                return true;
            }
            cursor = k.parent();
        }
        false
    }

    /// Everything except inert entities may surveil or compel.
    pub fn can_surveil_or_compel(self) -> bool {
        self != EntityKind::Inert
    }

    /// Legal persons, including judicial authorities.
    pub fn is_legal_actor(self) -> bool {
        self.is_a(EntityKind::LegalPerson)
    }

    /// Whether an entity of this kind may own others. Natural persons may
    /// own non-persons unless `strict` restores legal-persons-only.
    pub fn may_own(self, strict: bool) -> bool {
        self.is_legal_actor() || (!strict && self == EntityKind::NaturalPerson)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Inert => "Inert",
            EntityKind::Actor => "Actor",
            EntityKind::SentientActor => "SentientActor",
            EntityKind::NaturalPerson => "NaturalPerson",
            EntityKind::LegalPerson => "LegalPerson",
            EntityKind::JudicialAuthority => "JudicialAuthority",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[cfg(test)]
mod tests {
    use super::EntityKind::*;
    use super::*;

    #[test]
    fn lattice() {
        assert!(NaturalPerson.is_a(SentientActor));
        assert!(NaturalPerson.is_a(Actor));
        assert!(JudicialAuthority.is_a(LegalPerson));
        assert!(!JudicialAuthority.is_a(SentientActor));
        assert!(!Inert.is_a(Actor));
        for k in EntityKind::ALL {
            assert!(k.is_a(k));
        }
    }

    #[test]
    fn capability_is_monotone_down_the_lattice() {
        for k in EntityKind::ALL {
            if let Some(p) = k.parent() {
                assert!(!p.can_surveil_or_compel() || k.can_surveil_or_compel());
            }
        }
        assert!(!Inert.can_surveil_or_compel());
        assert!(Actor.can_surveil_or_compel());
    }

    #[test]
    fn ownership_eligibility() {
        assert!(LegalPerson.may_own(true));
        assert!(JudicialAuthority.may_own(true));
        assert!(NaturalPerson.may_own(false));
        assert!(!NaturalPerson.may_own(true));
        assert!(!SentientActor.may_own(false));
        assert!(!Inert.may_own(false));
    }
}
