//! Versioned default configs behind `verify <id>`. Tolerances live in the
//! TOML files, not in code.

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

pub struct Bundle {
    pub id: &'static str,
    pub aliases: &'static [&'static str],
    pub toml: &'static str,
}

macro_rules! bundle {
    ($id:literal $(, $alias:literal)*) => {
        Bundle {
            id: $id,
            aliases: &[$($alias),*],
            toml: include_str!(concat!("../../configs/", $id, ".toml")),
        }
    };
}

pub const BUNDLES: &[Bundle] = &[
    bundle!("thm1.1"),
    bundle!("thm1.2"),
    bundle!("thm1.3"),
    bundle!("cor1.1"),
    bundle!("thm1.5", "thm1.4"),
    bundle!("thm4.1"),
    bundle!("thm4.2"),
    bundle!("thm4.3"),
    bundle!("lemma2.1"),
    bundle!("prop1.4-1.6", "prop1.4", "prop1.5", "prop1.6"),
    bundle!("prop1.3"),
];

pub fn find(id: &str) -> Option<&'static Bundle> {
    let id = id.to_ascii_lowercase();
    BUNDLES.iter().find(|b| b.id == id || b.aliases.contains(&id.as_str()))
}

/// Parsed bundled config for `id` (or an alias).
pub fn bundle(id: &str) -> Result<ExperimentConfig> {
    let b = find(id).ok_or_else(|| {
        let known: Vec<&str> = BUNDLES.iter().map(|b| b.id).collect();
        Error::Config(format!("unknown id '{id}'; known: {}", known.join(", ")))
    })?;
    ExperimentConfig::from_toml(b.toml)
}
