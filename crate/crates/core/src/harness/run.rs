//! Execution of an [`ExperimentConfig`]: gate, simulate, compare.

use serde::Serialize;

use crate::asymptotics::{
    excess_asymptote, proportional_asymptote, psi_kernel, random_time_asymptote, stoploss_asymptote,
    theorem_constants, total_claims_asymptote, validity, AsymptoticReport, Constants, GateReport, Region,
};
use crate::dependence::{
    check_wlod, check_wuod, monotone_transform, product_moment_check, sample_tuples, DependencePlan, Monotone,
};
use crate::error::{Error, Result};
use crate::estimators::{
    exceedance_grid, exceedance_random_time, expected_count_random_time, lde_sum_oracle, stoploss_mean, Cell,
    McConfig, MethodChoice, SimEstimate,
};
use crate::renewal::{exp_moment_tail, renewal_moments, slln_check};

use super::config::{ExperimentConfig, Target, XRule};
use super::verdict::{all_pass, convergence_verdict, Verdict};

/// One resolved cell set against its asymptote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub t: f64,
    pub x: f64,
    pub empirical: SimEstimate,
    pub asymptote: f64,
    pub ratio: f64,
    /// The empirical 95% interval divided by the asymptote.
    pub ratio_ci: (f64, f64),
}

impl RatioRow {
    fn new(t: f64, x: f64, empirical: SimEstimate, asymptote: f64) -> Self {
        let ratio = empirical.value / asymptote;
        let ratio_ci = (empirical.ci95.0 / asymptote, empirical.ci95.1 / asymptote);
        Self {
            t,
            x,
            empirical,
            asymptote,
            ratio,
            ratio_ci,
        }
    }
}

/// Per-horizon (per-`n` for the sums oracle, per-`x` for random time)
/// deviation summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSummary {
    pub t: f64,
    /// `sup |ratio − 1|` over resolved cells; `None` when none resolved.
    pub sup_deviation: Option<f64>,
    pub resolved: usize,
    /// Capitals whose estimates had too few hits to enter the supremum.
    pub starved: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl CheckResult {
    fn at_most(name: String, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            bound,
            pass: value <= bound,
            trace: Vec::new(),
        }
    }

    fn at_least(name: String, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            bound,
            pass: value >= bound,
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub target: Target,
    pub seed: u64,
    pub n_paths: u64,
    pub method: MethodChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    pub horizons: Vec<HorizonSummary>,
    /// Sequence the verdict is judged on.
    pub deviations: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub summary: Summary,
    pub rows: Vec<RatioRow>,
}

impl Report {
    pub fn verdict(&self) -> Verdict {
        self.summary.verdict
    }
}

/// Checks the target's hypotheses. `None` for check-only targets.
pub fn gate(cfg: &ExperimentConfig) -> Option<GateReport> {
    let theorem = cfg.target.theorem(&cfg.model, cfg.x_rule.as_ref())?;
    // Random-time and stop-loss statements are free of an x-region.
    let region = cfg.x_rule.map(|r| r.region()).unwrap_or(Region::Ray { gamma: f64::INFINITY });
    Some(validity(&cfg.model, region, theorem))
}

fn require(gate: &Option<GateReport>) -> Result<()> {
    match gate {
        Some(g) if !g.pass() => Err(Error::Gate(g.violated.clone())),
        _ => Ok(()),
    }
}

/// Asymptote at `(x, t)` for the grid targets, refusing invalid reports.
pub fn asymptote(cfg: &ExperimentConfig, x: f64, t: f64) -> Result<AsymptoticReport> {
    let m = &cfg.model;
    let rep = match cfg.target {
        Target::PsiFinite => psi_kernel(m, x, t, cfg.centering)?,
        Target::NetLoss => psi_kernel(m, x, t, crate::asymptotics::Centering::MuG)?,
        Target::TotalClaims => total_claims_asymptote(m, x, t)?,
        Target::Proportional => proportional_asymptote(m, x, t)?,
        Target::Excess => excess_asymptote(m, x, t)?,
        Target::StoplossMean => stoploss_asymptote(m, t)?,
        other => return Err(Error::Config(format!("target {other:?} has no (x, t) asymptote"))),
    };
    if rep.valid {
        Ok(rep)
    } else {
        Err(Error::Gate(rep.violated_conditions))
    }
}

fn mc(cfg: &ExperimentConfig) -> McConfig {
    McConfig::new(cfg.n_paths, cfg.seed, cfg.method)
}

fn sup_dev<'a>(rows: impl Iterator<Item = &'a RatioRow>) -> Option<f64> {
    rows.map(|r| (r.ratio - 1.0).abs()).reduce(f64::max)
}

/// Runs the experiment. Gates are checked before any path is simulated.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let gate = gate(cfg);
    require(&gate)?;
    let mut summary = Summary {
        name: cfg.name.clone(),
        target: cfg.target,
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        method: cfg.method,
        gate,
        constants: None,
        horizons: Vec::new(),
        deviations: Vec::new(),
        tolerance: cfg.tolerance,
        verdict: Verdict::Inconclusive,
        checks: Vec::new(),
        notes: Vec::new(),
    };
    let rows = match cfg.target {
        Target::PsiFinite | Target::NetLoss | Target::TotalClaims | Target::Proportional | Target::Excess => {
            run_grid(cfg, &mut summary)?
        }
        Target::PsiRandomTime => run_random_time(cfg, &mut summary)?,
        Target::StoplossMean => run_stoploss(cfg, &mut summary)?,
        Target::Lemma21Oracle => run_sums(cfg, &mut summary)?,
        Target::RenewalChecks => {
            run_renewal(cfg, &mut summary)?;
            Vec::new()
        }
        Target::DependenceChecks => {
            run_dependence(cfg, &mut summary)?;
            Vec::new()
        }
    };
    if summary.checks.is_empty() {
        summary.deviations = summary.horizons.iter().map(|h| h.sup_deviation.unwrap_or(f64::NAN)).collect();
        summary.verdict = match cfg.tolerance {
            Some(tol) => convergence_verdict(&summary.deviations, tol),
            None => Verdict::Inconclusive,
        };
    } else {
        summary.verdict = all_pass(summary.checks.iter().map(|c| c.pass));
    }
    Ok(Report { summary, rows })
}

/// One estimator call per horizon, so each horizon gets a stratification
/// threshold matched to its own capitals.
fn run_grid(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Vec<RatioRow>> {
    let rule = cfg.x_rule.expect("validated");
    let functional = cfg.target.functional().expect("grid target");
    let horizons = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let xs = rule.grid(t);
            let asymptotes = xs
                .iter()
                .map(|&x| asymptote(cfg, x, t).map(|r| r.value))
                .collect::<Result<Vec<f64>>>()?;
            Ok((t, xs, asymptotes))
        })
        .collect::<Result<Vec<_>>>()?;
    if cfg.target == Target::PsiFinite {
        summary.constants = Some(theorem_constants(&cfg.model, rule.region().gamma()));
    }
    let mut rows = Vec::new();
    for (t, xs, asymptotes) in horizons {
        let cells: Vec<Cell> = xs.iter().map(|&x| Cell { t, x }).collect();
        let estimates = exceedance_grid(&cfg.model, functional, &cells, &mc(cfg))?;
        let mut starved = Vec::new();
        let first = rows.len();
        for ((x, e), a) in xs.into_iter().zip(estimates).zip(asymptotes) {
            if e.resolved() {
                rows.push(RatioRow::new(t, x, e, a));
            } else {
                starved.push(x);
            }
        }
        summary.horizons.push(HorizonSummary {
            t,
            sup_deviation: sup_dev(rows[first..].iter()),
            resolved: rows.len() - first,
            starved,
        });
    }
    Ok(rows)
}

fn run_random_time(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Vec<RatioRow>> {
    let m = &cfg.model;
    let tau_mean = m.tau.as_ref().map(|t| t.mean()).expect("gate requires tau");
    let en = expected_count_random_time(m, cfg.n_paths, cfg.seed)?;
    summary.notes.push(format!(
        "E N(tau) estimated as {:e} (stderr {:e}); the t column carries E tau",
        en.value, en.stderr
    ));
    let asymptotes = cfg
        .x_grid
        .iter()
        .map(|&x| {
            let r = random_time_asymptote(m, x, en.value)?;
            if r.valid {
                Ok(r.value)
            } else {
                Err(Error::Gate(r.violated_conditions))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let functional = cfg.target.functional().expect("exceedance");
    // One call per capital: the stratification threshold follows x.
    let estimates = cfg
        .x_grid
        .iter()
        .map(|&x| exceedance_random_time(m, functional, &[x], &mc(cfg)).map(|mut v| v.remove(0)))
        .collect::<Result<Vec<SimEstimate>>>()?;
    let mut rows = Vec::new();
    let mut starved = Vec::new();
    for ((&x, e), &a) in cfg.x_grid.iter().zip(estimates).zip(&asymptotes) {
        if e.resolved() {
            let row = RatioRow::new(tau_mean, x, e, a);
            summary.horizons.push(HorizonSummary {
                t: x,
                sup_deviation: Some((row.ratio - 1.0).abs()),
                resolved: 1,
                starved: Vec::new(),
            });
            rows.push(row);
        } else {
            starved.push(x);
        }
    }
    if !starved.is_empty() {
        summary.notes.push(format!("starved capitals left out of the trend: {starved:?}"));
    }
    Ok(rows)
}

fn run_stoploss(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Vec<RatioRow>> {
    let k = cfg.model.reinsurance.k;
    let asymptotes = cfg
        .t_grid
        .iter()
        .map(|&t| asymptote(cfg, 0.0, t).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    for (&t, &a) in cfg.t_grid.iter().zip(&asymptotes) {
        let e = stoploss_mean(&cfg.model, t, cfg.n_paths, cfg.seed)?;
        let resolved = e.resolved();
        let row = RatioRow::new(t, k * t, e, a);
        summary.horizons.push(HorizonSummary {
            t,
            sup_deviation: resolved.then(|| (row.ratio - 1.0).abs()),
            resolved: resolved as usize,
            starved: if resolved { Vec::new() } else { vec![k * t] },
        });
        if resolved {
            rows.push(row);
        }
    }
    summary.notes.push("the x column carries the stop-loss level K t".into());
    Ok(rows)
}

fn run_sums(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Vec<RatioRow>> {
    let (gamma, points, factor) = match cfg.x_rule.expect("validated") {
        XRule::Ray {
            gamma,
            points,
            x_max_factor,
        } => (gamma, points, x_max_factor),
        _ => return Err(Error::Config("lemma21_oracle needs a ray x_rule".into())),
    };
    let ns: Vec<usize> = cfg.t_grid.iter().map(|&n| n as usize).collect();
    let m = &cfg.model;
    let table = lde_sum_oracle(&m.claims, m.claim_plan, &ns, gamma, points, factor, &mc(cfg))?;
    let mut rows = Vec::new();
    for r in table {
        let t = r.n as f64;
        let first = rows.len();
        for ((&x, e), &a) in r.xs.iter().zip(r.estimates).zip(&r.asymptotes) {
            if !r.starved.contains(&x) {
                rows.push(RatioRow::new(t, x, e, a));
            }
        }
        summary.horizons.push(HorizonSummary {
            t,
            sup_deviation: (rows.len() > first).then_some(r.sup_deviation),
            resolved: rows.len() - first,
            starved: r.starved,
        });
    }
    summary.notes.push("the t column carries the number of summands n".into());
    Ok(rows)
}

fn plan_name(p: &DependencePlan) -> String {
    serde_json::to_string(p).expect("plans serialize")
}

fn run_renewal(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<()> {
    let r = &cfg.renewal;
    let h = &cfg.model.inter_arrivals;
    let plans = if r.plans.is_empty() {
        vec![cfg.model.arrival_plan]
    } else {
        r.plans.clone()
    };
    for plan in plans {
        let name = plan_name(&plan);
        for (k, &tol) in (1..).zip(&r.moment_tolerances) {
            let e = renewal_moments(h, plan, r.t, k, cfg.n_paths, cfg.seed)?;
            summary.checks.push(CheckResult::at_most(
                format!("{name} |E N^{k}(t) (mu_H/t)^{k} - 1| at t = {}", r.t),
                (e.value - 1.0).abs(),
                tol,
            ));
        }
        let s = slln_check(h, plan, &r.slln_grid, cfg.n_paths, cfg.seed)?;
        let mut c = CheckResult::at_least(
            format!("{name} share of paths with |N(t) mu_H/t - 1| <= {} at t = {}", s.band, s.t_grid[s.t_grid.len() - 1]),
            s.fraction_in_band[s.fraction_in_band.len() - 1],
            r.min_band_fraction,
        );
        c.trace = s.mean_trace;
        summary.checks.push(c);
        let e = exp_moment_tail(h, plan, r.exp_r, r.exp_delta, &r.exp_t_grid, cfg.n_paths, cfg.seed)?;
        let first = e.log_values[0];
        let last = e.log_values[e.log_values.len() - 1];
        summary.checks.push(CheckResult {
            name: format!(
                "{name} E e^(rN(t)) 1{{N(t) > (1+delta) t/mu_H}} strictly decreasing, r = {}, delta = {}",
                r.exp_r, r.exp_delta
            ),
            value: last - first,
            bound: 0.0,
            pass: e.decreasing,
            trace: e.values,
        });
    }
    Ok(())
}

fn run_dependence(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<()> {
    let d = &cfg.dependence;
    let plan = cfg.model.claim_plan;
    let g = &cfg.model.claims;
    let name = plan_name(&plan);
    let (mu, ml) = plan.dominating();
    let (mu, ml) = d.m.map(|m| (m, m)).unwrap_or((mu, ml));
    let thresholds: Vec<f64> = d.tail_levels.iter().map(|&p| g.tail_quantile(p)).collect();
    for &w in &d.widths {
        let samples = sample_tuples(&plan, g, w, cfg.n_paths as usize, cfg.seed);
        let up = check_wuod(&samples, &thresholds, mu)?;
        let lo = check_wlod(&samples, &thresholds, ml)?;
        let pm = product_moment_check(&samples, mu)?;
        for (label, rep) in [("upper", up), ("lower", lo)] {
            let mut c = CheckResult::at_most(format!("{name} n = {w} {label} orthant sup ratio"), rep.sup_ratio, rep.m);
            c.pass = rep.pass;
            c.trace = rep.points.iter().map(|p| p.ratio).collect();
            summary.checks.push(c);
            summary.notes.extend(rep.skipped);
        }
        summary.checks.push(CheckResult {
            name: format!("{name} n = {w} E prod X_i <= M prod E X_i (margin)"),
            value: pm.margin,
            bound: -3.0 * pm.stderr,
            pass: pm.holds,
            trace: Vec::new(),
        });
    }
    let tags = plan.orthant_tags();
    let same = |a: crate::dependence::OrthantTags| a == tags;
    let once = monotone_transform(tags, Monotone::Nonincreasing);
    let pairs = [
        ("nondecreasing maps keep the orthant tags", same(monotone_transform(tags, Monotone::Nondecreasing))),
        (
            "nonincreasing maps swap the orthant tags",
            once.upper == tags.lower && once.lower == tags.upper,
        ),
        (
            "two nonincreasing maps restore the tags",
            same(monotone_transform(once, Monotone::Nonincreasing)),
        ),
    ];
    for (label, ok) in pairs {
        summary.checks.push(CheckResult {
            name: label.into(),
            value: ok as u8 as f64,
            bound: 1.0,
            pass: ok,
            trace: Vec::new(),
        });
    }
    Ok(())
}

/// Asymptote-only table for the `asymptotic` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub t: f64,
    pub x: f64,
    pub asymptote: f64,
    pub kernel_argument: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticTable {
    pub name: String,
    pub target: Target,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    pub rows: Vec<AsymptoticRow>,
}

/// Evaluates the target's formula on its grid without simulating. Random
/// time reports `Ḡ(x)`, the asymptote per unit of `E N(τ)`.
pub fn asymptotic_table(cfg: &ExperimentConfig) -> Result<AsymptoticTable> {
    cfg.validate()?;
    let gate = gate(cfg);
    require(&gate)?;
    let mut rows = Vec::new();
    let mut constants = None;
    match cfg.target {
        Target::PsiFinite | Target::NetLoss | Target::TotalClaims | Target::Proportional | Target::Excess => {
            let rule = cfg.x_rule.expect("validated");
            for &t in &cfg.t_grid {
                for x in rule.grid(t) {
                    let r = asymptote(cfg, x, t)?;
                    rows.push(AsymptoticRow {
                        t,
                        x,
                        asymptote: r.value,
                        kernel_argument: r.kernel_argument,
                    });
                }
            }
            if cfg.target == Target::PsiFinite {
                constants = Some(theorem_constants(&cfg.model, rule.region().gamma()));
            }
        }
        Target::StoplossMean => {
            for &t in &cfg.t_grid {
                let r = asymptote(cfg, 0.0, t)?;
                rows.push(AsymptoticRow {
                    t,
                    x: cfg.model.reinsurance.k * t,
                    asymptote: r.value,
                    kernel_argument: r.kernel_argument,
                });
            }
        }
        Target::PsiRandomTime => {
            let tau_mean = cfg.model.tau.as_ref().map(|t| t.mean()).expect("gate requires tau");
            for &x in &cfg.x_grid {
                // Per unit of E N(tau).
                let r = random_time_asymptote(&cfg.model, x, 1.0)?;
                rows.push(AsymptoticRow {
                    t: tau_mean,
                    x,
                    asymptote: r.value,
                    kernel_argument: x,
                });
            }
        }
        Target::Lemma21Oracle => {
            let g = &cfg.model.claims;
            let rule = cfg.x_rule.expect("validated");
            for &n in &cfg.t_grid {
                for x in rule.grid(n) {
                    let arg = x - g.mean() * n;
                    rows.push(AsymptoticRow {
                        t: n,
                        x,
                        asymptote: n * g.sf(arg),
                        kernel_argument: arg,
                    });
                }
            }
        }
        Target::RenewalChecks | Target::DependenceChecks => {
            return Err(Error::Config(format!("target {:?} has no asymptotic formula", cfg.target)));
        }
    }
    Ok(AsymptoticTable {
        name: cfg.name.clone(),
        target: cfg.target,
        gate,
        constants,
        rows,
    })
}
