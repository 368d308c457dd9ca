//! Experiment descriptors, read from TOML.
//!
//! ```toml
//! name = "ruin-band"
//! target = "psi_finite"
//! t_grid = [25.0, 50.0, 100.0]
//! n_paths = 400000
//! seed = 7
//! tolerance = 0.40
//!
//! [x_rule]
//! kind = "band"
//! gamma = 2.0
//! big_gamma = 6.0
//!
//! [model]
//! premium_rate = 1.2
//! case = "case2"
//! claims = { family = "pareto", alpha = 2.5, scale = 1.5 }
//! inter_arrivals = { family = "exponential", mean = 1.0 }
//! pair_plan = { mode = "pair_copula", copula = "comonotone" }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{wide_scale, Centering, Region, Theorem};
use crate::dependence::DependencePlan;
use crate::error::{Error, Result};
use crate::estimators::{Functional, MethodChoice};
use crate::heavy_tails::geometric_grid;
use crate::processes::{Case, RiskModel};

pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_X_MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    PsiFinite,
    PsiRandomTime,
    NetLoss,
    TotalClaims,
    Proportional,
    Excess,
    StoplossMean,
    Lemma21Oracle,
    RenewalChecks,
    DependenceChecks,
}

impl Target {
    /// Path functional behind an exceedance target.
    pub fn functional(self) -> Option<Functional> {
        Some(match self {
            Target::PsiFinite | Target::PsiRandomTime => Functional::RunningMax,
            Target::NetLoss => Functional::NetLoss,
            Target::TotalClaims => Functional::TotalClaims,
            Target::Proportional => Functional::Proportional,
            Target::Excess => Functional::Excess,
            _ => return None,
        })
    }

    /// Statement whose hypotheses gate this target, if any.
    pub fn theorem(self, model: &RiskModel, rule: Option<&XRule>) -> Option<Theorem> {
        Some(match self {
            Target::PsiFinite => match (model.case, rule) {
                (Case::Case2, _) => Theorem::RuinBand,
                (Case::Case1, Some(XRule::Wide { .. })) => Theorem::RuinWide,
                (Case::Case1, _) => Theorem::RuinRay,
            },
            Target::PsiRandomTime => Theorem::RandomTime,
            Target::NetLoss => Theorem::NetLoss,
            Target::TotalClaims => Theorem::TotalClaims,
            Target::Proportional => Theorem::Proportional,
            Target::Excess => Theorem::Excess,
            Target::StoplossMean => Theorem::StopLoss,
            Target::Lemma21Oracle => Theorem::Sums,
            Target::RenewalChecks | Target::DependenceChecks => return None,
        })
    }

    fn needs_x_rule(self) -> bool {
        matches!(
            self,
            Target::PsiFinite
                | Target::NetLoss
                | Target::TotalClaims
                | Target::Proportional
                | Target::Excess
                | Target::Lemma21Oracle
        )
    }
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_factor() -> f64 {
    DEFAULT_X_MAX_FACTOR
}

/// Capital grid per horizon. `gamma` and `big_gamma` are absolute slopes,
/// so `x` runs over multiples of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XRule {
    /// `points` geometric points on `[γt, Γt]`.
    Band {
        gamma: f64,
        big_gamma: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    /// `points` geometric points on `[γt, x_max_factor·γt]`.
    Ray {
        gamma: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_factor")]
        x_max_factor: f64,
    },
    /// As `Ray` but starting from `γ t ln t`.
    Wide {
        gamma: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_factor")]
        x_max_factor: f64,
    },
}

impl XRule {
    pub fn region(&self) -> Region {
        match *self {
            XRule::Band { gamma, big_gamma, .. } => Region::Band { gamma, big_gamma },
            XRule::Ray { gamma, .. } => Region::Ray { gamma },
            XRule::Wide { gamma, .. } => Region::Wide { gamma },
        }
    }

    pub fn points(&self) -> usize {
        match *self {
            XRule::Band { points, .. } | XRule::Ray { points, .. } | XRule::Wide { points, .. } => points,
        }
    }

    /// Grid of capitals at horizon `t`.
    pub fn grid(&self, t: f64) -> Vec<f64> {
        match *self {
            XRule::Band {
                gamma,
                big_gamma,
                points,
            } => geometric_grid(gamma * t, big_gamma * t, points),
            XRule::Ray {
                gamma,
                points,
                x_max_factor,
            } => geometric_grid(gamma * t, x_max_factor * gamma * t, points),
            XRule::Wide {
                gamma,
                points,
                x_max_factor,
            } => {
                let lo = gamma * t * wide_scale(t);
                geometric_grid(lo, x_max_factor * lo, points)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (points, factor) = match *self {
            XRule::Band { points, .. } => (points, 1.0),
            XRule::Ray {
                points, x_max_factor, ..
            }
            | XRule::Wide {
                points, x_max_factor, ..
            } => (points, x_max_factor),
        };
        if points == 0 {
            return Err(Error::Config("x_rule needs at least one point".into()));
        }
        if !(factor >= 1.0 && factor.is_finite()) {
            return Err(Error::Config(format!("x_max_factor must be >= 1, got {factor}")));
        }
        Ok(())
    }
}

/// Parameters of the renewal-count checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenewalChecks {
    /// Arrival plans to check; empty means the model's own plan.
    pub plans: Vec<DependencePlan>,
    /// Horizon of the moment and SLLN checks.
    pub t: f64,
    /// Bound on `|Ê N^k(t) (μ_H/t)^k − 1|` for `k = 1, 2, ...`.
    pub moment_tolerances: Vec<f64>,
    /// Horizons of the `N(t)μ_H/t` trace; the band share is judged at the last.
    pub slln_grid: Vec<f64>,
    pub min_band_fraction: f64,
    pub exp_r: f64,
    pub exp_delta: f64,
    pub exp_t_grid: Vec<f64>,
}

impl Default for RenewalChecks {
    fn default() -> Self {
        Self {
            plans: Vec::new(),
            t: 1e4,
            moment_tolerances: vec![0.01, 0.02],
            slln_grid: vec![1e3, 2.5e3, 5e3, 1e4],
            min_band_fraction: 0.98,
            exp_r: 1e-4,
            exp_delta: 0.02,
            exp_t_grid: vec![1e3, 2e3, 4e3],
        }
    }
}

/// Parameters of the orthant and product-moment checks on the claim plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DependenceChecks {
    /// Tuple widths `n`.
    pub widths: Vec<usize>,
    /// Marginal tail levels at which orthant probabilities are compared.
    pub tail_levels: Vec<f64>,
    /// Dominating constant; `None` takes the plan's certified value.
    pub m: Option<f64>,
}

impl Default for DependenceChecks {
    fn default() -> Self {
        Self {
            widths: vec![2, 3],
            tail_levels: vec![0.5, 0.3, 0.1, 0.05, 0.02],
            m: None,
        }
    }
}

/// Where a run writes its files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub csv: String,
    pub summary: String,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: None,
            csv: "ratios.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub target: Target,
    pub model: RiskModel,
    /// Horizons; sample sizes `n` for `lemma21_oracle`.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub x_rule: Option<XRule>,
    /// Explicit capitals, used by `psi_random_time`.
    #[serde(default)]
    pub x_grid: Vec<f64>,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_centering")]
    pub centering: Centering,
    /// Bound on the final deviation for a passing verdict.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub renewal: RenewalChecks,
    #[serde(default)]
    pub dependence: DependenceChecks,
    #[serde(default)]
    pub output: Output,
}

fn default_centering() -> Centering {
    Centering::MuG
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Checks the shape of the descriptor. Theorem gates are checked by
    /// the runner.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.n_paths < 2 {
            return cfg_err(format!("n_paths must be at least 2, got {}", self.n_paths));
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return cfg_err(format!("tolerance must be positive, got {tol}"));
            }
        }
        let needs_t = !matches!(self.target, Target::PsiRandomTime | Target::RenewalChecks | Target::DependenceChecks);
        if needs_t && self.t_grid.is_empty() {
            return cfg_err("t_grid is empty".into());
        }
        if let Some(bad) = self.t_grid.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return cfg_err(format!("t_grid entries must be positive and finite, got {bad}"));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return cfg_err("t_grid must be strictly increasing".into());
        }
        if self.target == Target::Lemma21Oracle && self.t_grid.iter().any(|t| t.fract() != 0.0) {
            return cfg_err("lemma21_oracle reads t_grid as sample sizes; use integers".into());
        }
        match (&self.x_rule, self.target.needs_x_rule()) {
            (None, true) => return cfg_err(format!("target {:?} needs an x_rule", self.target)),
            (Some(rule), _) => rule.validate()?,
            _ => {}
        }
        if self.target == Target::PsiRandomTime {
            if self.x_grid.is_empty() {
                return cfg_err("psi_random_time needs a nonempty x_grid".into());
            }
            if self.x_grid.windows(2).any(|w| w[1] <= w[0]) {
                return cfg_err("x_grid must be strictly increasing".into());
            }
        }
        if let Some(bad) = self.x_grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return cfg_err(format!("x_grid entries must be positive and finite, got {bad}"));
        }
        if self.target == Target::RenewalChecks {
            let r = &self.renewal;
            if r.moment_tolerances.is_empty() || r.moment_tolerances.len() > 3 {
                return cfg_err("renewal.moment_tolerances needs 1 to 3 entries".into());
            }
            if r.slln_grid.is_empty() || r.exp_t_grid.is_empty() {
                return cfg_err("renewal grids must be nonempty".into());
            }
        }
        if self.target == Target::DependenceChecks {
            let d = &self.dependence;
            if d.widths.iter().any(|&w| w < 2) || d.widths.is_empty() {
                return cfg_err("dependence.widths must be >= 2".into());
            }
            if d.tail_levels.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return cfg_err("dependence.tail_levels must lie in (0, 1)".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
target = "psi_finite"
t_grid = [25.0, 50.0]
n_paths = 1000
seed = 1

[x_rule]
kind = "ray"
gamma = 2.0

[model]
premium_rate = 1.5
case = "case1"
claims = { family = "pareto", alpha = 2.5, scale = 1.5 }
inter_arrivals = { family = "exponential", mean = 1.0 }
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.x_rule.unwrap().points(), DEFAULT_POINTS);
        assert_eq!(cfg.method, MethodChoice::Auto);
        assert_eq!(cfg.x_rule.unwrap().grid(25.0)[0], 50.0);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_t_grid_is_a_config_error() {
        let text = BASE.replace("t_grid = [25.0, 50.0]", "t_grid = []");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("seed = 1", "seed = 1\nsede = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn grid_targets_need_a_rule() {
        let text = BASE.replace("[x_rule]\nkind = \"ray\"\ngamma = 2.0\n", "");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn band_grid_spans_the_band() {
        let r = XRule::Band {
            gamma: 2.0,
            big_gamma: 6.0,
            points: 20,
        };
        let g = r.grid(10.0);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 20.0).abs() < 1e-12 && (g[19] - 60.0).abs() < 1e-9);
        let w = XRule::Wide {
            gamma: 1.0,
            points: 3,
            x_max_factor: 4.0,
        };
        assert!((w.grid(100.0)[0] - 100.0 * 100f64.ln()).abs() < 1e-9);
    }
}
