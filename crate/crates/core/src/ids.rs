//! Opaque identifiers, one newtype per namespace.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Self {
                Self(raw.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(raw: &str) -> Self {
                Self(raw.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(raw: String) -> Self {
                Self(raw)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Identifies an entity: a person, group, corporation, document, pod.
    EntityId
);
id_type!(
    /// Identifies an aspect. Never embeds the displaying entity's id.
    AspectId
);
id_type!(ContextId);
id_type!(
    /// Role instance id, `<context>.<RoleType>.<n>` when generated.
    RoleId
);
id_type!(RuleId);
id_type!(WarrantId);
id_type!(
    /// Template-defined role name such as `Isolate` or `Trustee`.
    RoleType
);

impl RoleType {
    pub const ISOLATE: &'static str = "Isolate";
    pub const INTRUDER: &'static str = "Intruder";
    pub const GUARANTOR: &'static str = "Guarantor";
    pub const GOVERNOR: &'static str = "Governor";
    pub const INTIMATE: &'static str = "Intimate";
    pub const SECRET: &'static str = "Secret";
    pub const PUBLIC_FIGURE: &'static str = "PublicFigure";
    pub const ANON: &'static str = "Anon";
    pub const PUBLIC_PROPERTY: &'static str = "PublicProperty";
    pub const SOCIETY: &'static str = "Society";
    pub const TRUSTER: &'static str = "Truster";
    pub const TRUSTEE: &'static str = "Trustee";
    pub const ASSET: &'static str = "Asset";
    /// Pseudo role type for a target that holds no role in the acting context.
    pub const OUTSIDER: &'static str = "Outsider";

    pub fn is(&self, name: &str) -> bool {
        self.0 == name
    }
}

/// True when `raw` matches `letter { letter | digit | "_" | "-" }`.
pub fn is_valid_ident(raw: &str) -> bool {
    let mut chars = raw.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ident_grammar() {
        assert!(is_valid_ident("alice"));
        assert!(is_valid_ident("a1_b-c"));
        assert!(!is_valid_ident(""));
        assert!(!is_valid_ident("1abc"));
        assert!(!is_valid_ident("-x"));
        assert!(!is_valid_ident("a.b"));
    }

    #[test]
    fn ids_serialize_as_plain_strings() {
        let id = AspectId::new("a1");
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"a1\"");
    }
}
