//! Tail diagnostics for the `tail-diag` subcommand.

use serde::{Deserialize, Serialize};

use crate::asymptotics::g_star;
use crate::error::{Error, Result};
use crate::heavy_tails::{
    dominance_grid, tail_dominance, ClassTags, DominanceReport, MatuszewskaIndices, TailFunctionalReport, TailModel,
    DEFAULT_X_MAX,
};

use super::config::ExperimentConfig;

pub const DIAG_Y_GRID: [f64; 4] = [1.5, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiag {
    pub law: String,
    pub mean: f64,
    pub declared: ClassTags,
    pub diagnosed: ClassTags,
    pub functionals: TailFunctionalReport,
    pub matuszewska: MatuszewskaIndices,
    /// `Ḡ_*(2)` as used by the constants.
    pub g_star_2: f64,
    pub index_ordering_holds: bool,
}

pub fn tail_diagnostics(law: &TailModel) -> Result<TailDiag> {
    let functionals = law.limit_ratios(&DIAG_Y_GRID, DEFAULT_X_MAX)?;
    Ok(TailDiag {
        law: law.to_string(),
        mean: law.mean(),
        declared: *law.tags(),
        diagnosed: law.diagnosed_tags(),
        index_ordering_holds: functionals.index_ordering_holds(),
        functionals,
        matuszewska: law.matuszewska(),
        g_star_2: g_star(law, 2.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDiag {
    pub claims: TailDiag,
    pub inter_arrivals: TailDiag,
    /// Whether the inter-arrival tail is negligible against the claim tail.
    pub arrival_dominance: DominanceReport,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFile {
    law: TailModel,
}

/// Diagnostics for a TOML document holding either an experiment config
/// (both laws of its model) or a single `[law]` table.
pub fn diagnose_document(text: &str) -> Result<serde_json::Value> {
    if let Ok(l) = toml::from_str::<LawFile>(text) {
        return Ok(serde_json::to_value(tail_diagnostics(&l.law)?)?);
    }
    match ExperimentConfig::from_toml(text) {
        Ok(cfg) => {
            let m = &cfg.model;
            let d = ModelDiag {
                claims: tail_diagnostics(&m.claims)?,
                inter_arrivals: tail_diagnostics(&m.inter_arrivals)?,
                arrival_dominance: tail_dominance(&m.inter_arrivals, &m.claims, &dominance_grid()),
            };
            Ok(serde_json::to_value(d)?)
        }
        Err(e) => Err(Error::Config(format!(
            "expected an experiment config or a [law] table: {e}"
        ))),
    }
}

/// Parses an inline law such as `{ family = "pareto", alpha = 2.0, scale = 1.0 }`.
pub fn parse_law(inline: &str) -> Result<TailModel> {
    let l: LawFile = toml::from_str(&format!("law = {inline}"))?;
    Ok(l.law)
}
