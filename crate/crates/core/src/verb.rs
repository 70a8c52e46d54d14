//! The closed event-verb vocabulary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! verbs {
    ($($variant:ident => $text:literal, $min:literal, $max:expr;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum Verb {
            $(
                #[serde(rename = $text)]
                $variant,
            )*
        }

        impl Verb {
            pub const ALL: &'static [Verb] = &[$(Verb::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Verb::$variant => $text,)*
                }
            }

            /// Positional argument count accepted in a trace line; `None` is unbounded.
            pub fn arity(self) -> (usize, Option<usize>) {
                match self {
                    $(Verb::$variant => ($min, $max),)*
                }
            }
        }

        impl FromStr for Verb {
            type Err = UnknownVerb;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok(Verb::$variant),)*
                    other => Err(UnknownVerb(other.to_owned())),
                }
            }
        }
    };
}

verbs! {
    CreateEntity => "create-entity", 2, Some(3);
    DisplayAspect => "display-aspect", 1, Some(2);
    Enact => "enact", 2, Some(2);
    Relinquish => "relinquish", 1, Some(1);
    Instantiate => "instantiate", 3, None;
    DestroyContext => "destroy-context", 1, Some(1);
    Introspect => "introspect", 0, Some(0);
    Intrude => "intrude", 1, Some(1);
    ClaimSolitude => "claim-solitude", 2, Some(2);
    Invite => "invite", 2, Some(2);
    Join => "join", 1, Some(2);
    DepositSecret => "deposit-secret", 1, Some(1);
    Reveal => "reveal", 1, Some(2);
    CreateAnon => "create-anon", 0, Some(1);
    Publish => "publish", 1, Some(1);
    Sanction => "sanction", 1, Some(1);
    Appeal => "appeal", 0, Some(0);
    AuthenticateAnonym => "authenticate-anonym", 1, Some(2);
    AccessAsset => "access-asset", 1, Some(1);
    Disclose => "disclose", 2, Some(3);
    Observe => "observe", 1, Some(1);
    Control => "control", 1, Some(2);
    Surveil => "surveil", 1, Some(1);
    Compel => "compel", 1, Some(1);
    ResolveEntity => "resolve-entity", 1, Some(2);
    GrantWarrant => "grant-warrant", 3, Some(5);
}

impl Verb {
    /// Verbs whose permission is decided by the deontic evaluator for a role
    /// inside a context. The rest are registry or lifecycle operations gated
    /// only by structural preconditions.
    pub fn is_contextual(self) -> bool {
        !matches!(
            self,
            Verb::CreateEntity
                | Verb::DisplayAspect
                | Verb::Enact
                | Verb::Relinquish
                | Verb::Instantiate
                | Verb::DestroyContext
                | Verb::ClaimSolitude
                | Verb::AuthenticateAnonym
                | Verb::ResolveEntity
                | Verb::GrantWarrant
        )
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown verb `{0}`")]
pub struct UnknownVerb(pub String);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_closed_and_round_trips() {
        assert_eq!(Verb::ALL.len(), 26);
        for verb in Verb::ALL {
            assert_eq!(verb.as_str().parse::<Verb>().unwrap(), *verb);
        }
        assert!("teleport".parse::<Verb>().is_err());
    }

    #[test]
    fn serde_uses_kebab_names() {
        let json = serde_json::to_string(&Verb::ClaimSolitude).unwrap();
        assert_eq!(json, "\"claim-solitude\"");
    }
}
