//! Monte Carlo estimators of ruin probabilities, net-loss exceedances and
//! treaty means, plus two analytic companions: the truncation bound for
//! WUOD sums and the nonrandom-sum large-deviation oracle.
//!
//! Exceedance probabilities are estimated on a grid of `(t, x)` cells that
//! share paths. Three estimators are available:
//!
//! - crude: the proportion of paths whose functional exceeds `x`;
//! - big-jump stratified: the claims `Y_1..Y_n̄` are split on
//!   `M = max Y_i` versus a threshold `u`. Both strata are sampled on every
//!   path and combined with their exact weights
//!   `P(M ≤ u) = (1 − Ḡ(u))^{n̄}` and `1 − (1 − Ḡ(u))^{n̄}`:
//!
//!   ```text
//!   P(A) = P(M ≤ u) P(A | M ≤ u) + P(M > u) P(A | M > u)
//!   ```
//!
//!   Within `{M > u}` the index of the first exceedance is a geometric
//!   variable truncated to `[1, n̄]`; claims before it are drawn from
//!   `G(· | ≤ u)`, the exceeding claim from `G(· | > u)`, later claims from
//!   `G`. This requires i.i.d. claims. In case 1 the arrivals are drawn first
//!   and `n̄ = N(h)` for the largest horizon `h`; in case 2 a fixed `n̄`
//!   comfortably above `h/μ_H` is used and pairs past `n̄` are unconditioned;
//! - big-jump mixture, for dependent (NA) claims whose strata cannot be
//!   sampled directly. `{M ≤ u}` is scored on an unconditioned path and
//!   `{M > u}` on a path where a uniformly chosen claim `J ≤ n̄` is forced
//!   above `u`, with likelihood ratio `n̄ Ḡ(u) / #{i ≤ n̄ : Y_i > u}`.
//!
//! Paths are processed in fixed chunks and reduced in chunk order, so every
//! estimate is a function of the seed alone.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dependence::DependencePlan;
use crate::error::{invalid, Error, Result};
use crate::heavy_tails::TailModel;
use crate::processes::{summaries_at, Case, PathSummary, RiskModel, StopLoss};
use crate::renewal::ArrivalPath;
use crate::rng::{interior_unit, open_unit, stream, tag, StreamRng};
use crate::stats::{map_chunks, wilson_interval, Moments};

/// Minimum hits for an estimate to be considered resolved.
pub const MIN_HITS: u64 = 100;
/// Below this many hits a proportion uses the Wilson interval.
pub const WILSON_HITS: u64 = 30;
/// Below this rate a proportion uses the Wilson interval.
pub const WILSON_RATE: f64 = 1e-3;
pub const Z95: f64 = 1.959_963_984_540_054;
/// Share of a sum above which one term marks the sample as heavy-tailed.
const HEAVY_TERM_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Crude,
    BigJumpStratified,
    BigJumpMixture,
}

/// Requested estimator. `Stratified` selects the big-jump estimator suited to
/// the claims: stratification for i.i.d. claims, the mixture otherwise.
/// `Auto` runs crude and re-estimates cells with fewer than [`MIN_HITS`]
/// hits by the big-jump estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Crude,
    Stratified,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// No hits: value 0 and a one-sided interval.
    InsufficientHits,
    /// Fewer than [`MIN_HITS`] hits.
    LowHits,
    HeavyTail,
    /// The `{M > u}` stratum weight underflowed.
    WeightUnderflow,
    /// A validity condition of the target formula fails.
    GateViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub ci95: (f64, f64),
    pub method: Method,
    /// Paths with a nonzero contribution.
    pub hits: u64,
    pub flags: Vec<Flag>,
}

impl SimEstimate {
    /// Mean-type estimate with a normal interval.
    pub fn from_mean(value: f64, stderr: f64, m: &Moments, seed: u64) -> Self {
        Self {
            value,
            stderr,
            n_paths: m.count,
            seed,
            ci95: (value - Z95 * stderr, value + Z95 * stderr),
            method: Method::Crude,
            hits: m.hits,
            flags: Vec::new(),
        }
    }

    /// Proportion `hits / n`: Wald interval, or Wilson when `hits < 30` or
    /// the rate is below `10⁻³`.
    pub fn proportion(hits: u64, n: u64, seed: u64) -> Self {
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let stderr = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
        let ci95 = if hits == 0 {
            (0.0, wilson_interval(0, n, Z95).1)
        } else if hits < WILSON_HITS || p < WILSON_RATE {
            wilson_interval(hits, n, Z95)
        } else {
            ((p - Z95 * stderr).max(0.0), (p + Z95 * stderr).min(1.0))
        };
        let mut e = Self {
            value: p,
            stderr,
            n_paths: n,
            seed,
            ci95,
            method: Method::Crude,
            hits,
            flags: Vec::new(),
        };
        e.flag_hits();
        e
    }

    /// Mean of per-path big-jump contributions.
    pub fn stratified(m: &Moments, seed: u64, method: Method) -> Self {
        let value = m.mean();
        let stderr = m.stderr();
        let ci95 = if m.hits == 0 {
            (0.0, wilson_interval(0, m.count, Z95).1)
        } else {
            ((value - Z95 * stderr).max(0.0), (value + Z95 * stderr).min(1.0))
        };
        let mut e = Self {
            value,
            stderr,
            n_paths: m.count,
            seed,
            ci95,
            method,
            hits: m.hits,
            flags: Vec::new(),
        };
        e.flag_hits();
        e
    }

    fn flag_hits(&mut self) {
        if self.hits == 0 {
            self.flags.push(Flag::InsufficientHits);
        }
        if self.hits < MIN_HITS {
            self.flags.push(Flag::LowHits);
        }
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    /// Resolved: at least [`MIN_HITS`] hits.
    pub fn resolved(&self) -> bool {
        self.hits >= MIN_HITS
    }

    fn exact(value: f64, seed: u64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_paths: 0,
            seed,
            ci95: (value, value),
            method: Method::Crude,
            hits: 0,
            flags: Vec::new(),
        }
    }
}

/// Whether two estimates agree within `k` joint standard errors.
pub fn agree(a: &SimEstimate, b: &SimEstimate, k: f64) -> bool {
    (a.value - b.value).abs() <= k * (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub method: MethodChoice,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64, method: MethodChoice) -> Self {
        Self { n_paths, seed, method }
    }

    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be positive"));
        }
        Ok(())
    }
}

/// Path functional whose exceedance of `x` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `R̃_0(t)`: ruin before `t`.
    RunningMax,
    /// `R_0(t)`.
    NetLoss,
    /// `R_00(t)`.
    TotalClaims,
    /// `R_01(t)`.
    Proportional,
    /// `R_02(t)`.
    Excess,
}

impl Functional {
    #[inline]
    pub fn eval(&self, s: &PathSummary, m: &RiskModel) -> f64 {
        let c = m.c();
        let r = &m.reinsurance;
        match self {
            Functional::RunningMax => s.running_max,
            Functional::NetLoss => s.net_loss(c),
            Functional::TotalClaims => s.total_claims(),
            Functional::Proportional => s.proportional(r.q1, r.q2, c),
            Functional::Excess => s.excess(r.q2, c),
        }
    }
}

/// One `(t, x)` cell. For random-time targets `t` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Horizon {
    Fixed,
    Tau,
}

struct Grid<'a> {
    model: &'a RiskModel,
    functional: Functional,
    horizon: Horizon,
    times: Vec<f64>,
    cell_time: Vec<usize>,
    cell_x: Vec<f64>,
}

impl<'a> Grid<'a> {
    fn new(model: &'a RiskModel, functional: Functional, cells: &[Cell], horizon: Horizon) -> Result<Self> {
        if cells.is_empty() {
            return Err(invalid("no cells to estimate"));
        }
        for c in cells {
            if !(c.x >= 0.0) {
                return Err(Error::Domain(format!("capital x must be >= 0, got {}", c.x)));
            }
            if horizon == Horizon::Fixed && !(c.t >= 0.0 && c.t.is_finite()) {
                return Err(Error::Domain(format!("horizon t must be >= 0, got {}", c.t)));
            }
        }
        if horizon == Horizon::Tau && model.tau.is_none() {
            return Err(invalid("random-time target needs a tau law in the model"));
        }
        let mut times: Vec<f64> = match horizon {
            Horizon::Fixed => cells.iter().map(|c| c.t).collect(),
            Horizon::Tau => vec![0.0],
        };
        times.sort_by(f64::total_cmp);
        times.dedup();
        let cell_time = cells
            .iter()
            .map(|c| match horizon {
                Horizon::Fixed => times.partition_point(|&t| t < c.t),
                Horizon::Tau => 0,
            })
            .collect();
        Ok(Self {
            model,
            functional,
            horizon,
            times,
            cell_time,
            cell_x: cells.iter().map(|c| c.x).collect(),
        })
    }

    fn horizons(&self, seed: u64, path: u64) -> Vec<f64> {
        match self.horizon {
            Horizon::Fixed => self.times.clone(),
            Horizon::Tau => vec![self.model.draw_tau(seed, path).expect("tau checked")],
        }
    }

    fn score(&self, summaries: &[PathSummary], weight: f64, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            let s = &summaries[self.cell_time[k]];
            if self.functional.eval(s, self.model) > self.cell_x[k] {
                *slot += weight;
            }
        }
    }

    fn reduce(&self, chunks: Vec<Vec<Moments>>) -> Vec<Moments> {
        (0..self.cell_x.len())
            .map(|k| {
                let parts: Vec<Moments> = chunks.iter().map(|c| c[k]).collect();
                Moments::merge_ordered(&parts)
            })
            .collect()
    }

    fn crude(&self, n_paths: u64, seed: u64) -> Vec<Moments> {
        let cells = self.cell_x.len();
        let chunks = map_chunks(n_paths, |lo, hi| {
            let mut acc = vec![Moments::default(); cells];
            let mut scores = vec![0.0; cells];
            for p in lo..hi {
                let hs = self.horizons(seed, p);
                let summaries = self.model.path(seed, p).summaries(&hs);
                scores.iter_mut().for_each(|s| *s = 0.0);
                self.score(&summaries, 1.0, &mut scores);
                for (m, &s) in acc.iter_mut().zip(&scores) {
                    m.push(s);
                }
            }
            acc
        });
        self.reduce(chunks)
    }

    fn stratified(&self, n_paths: u64, seed: u64, u: f64) -> (Vec<Moments>, bool) {
        let cells = self.cell_x.len();
        let p = self.model.claims.sf(u);
        let chunks = map_chunks(n_paths, |lo, hi| {
            let mut acc = vec![Moments::default(); cells];
            let mut scores = vec![0.0; cells];
            let mut underflow = false;
            for path in lo..hi {
                let hs = self.horizons(seed, path);
                scores.iter_mut().for_each(|s| *s = 0.0);
                underflow |= match self.model.case {
                    Case::Case1 => self.stratified_case1(seed, path, p, &hs, &mut scores),
                    Case::Case2 => self.stratified_case2(seed, path, p, &hs, &mut scores),
                };
                for (m, &s) in acc.iter_mut().zip(&scores) {
                    m.push(s);
                }
            }
            (acc, underflow)
        });
        let underflow = chunks.iter().any(|c| c.1);
        (self.reduce(chunks.into_iter().map(|c| c.0).collect()), underflow)
    }

    fn mixture(&self, n_paths: u64, seed: u64, u: f64) -> Vec<Moments> {
        let cells = self.cell_x.len();
        let m = self.model;
        let p = m.claims.sf(u);
        let (c, d) = (m.c(), m.reinsurance.retention);
        let chunks = map_chunks(n_paths, |lo, hi| {
            let mut acc = vec![Moments::default(); cells];
            let mut scores = vec![0.0; cells];
            let mut forced = Vec::new();
            for path in lo..hi {
                let hs = self.horizons(seed, path);
                scores.iter_mut().for_each(|s| *s = 0.0);
                let mut rp = m.path(seed, path);
                let counts: Vec<usize> = hs.iter().map(|&t| rp.count(t)).collect();
                let n = counts.last().copied().unwrap_or(0);
                let (y, z) = rp.prefix(n);
                if y.iter().all(|&v| v <= u) {
                    self.score(&summaries_at(y, z, &counts, c, d), 1.0, &mut scores);
                }
                if n > 0 && p > 0.0 {
                    let mut rng = stream(seed, tag::STRATA, path);
                    let j = rng.random_range(0..n);
                    let k = m.claim_plan.fill_forced(&m.claims, n, j, p, &mut rng, &mut forced);
                    let w = n as f64 * p / k as f64;
                    self.score(&summaries_at(&forced, z, &counts, c, d), w, &mut scores);
                }
                for (a, &s) in acc.iter_mut().zip(&scores) {
                    a.push(s);
                }
            }
            acc
        });
        self.reduce(chunks)
    }

    fn stratified_case1(&self, seed: u64, path: u64, p: f64, hs: &[f64], scores: &mut [f64]) -> bool {
        let m = self.model;
        let mut arrivals =
            ArrivalPath::new(&m.inter_arrivals, m.arrival_plan, seed, path).expect("validated model");
        let counts: Vec<usize> = hs.iter().map(|&t| arrivals.count(t)).collect();
        let n = counts.last().copied().unwrap_or(0);
        arrivals.ensure_len(n);
        let z = &arrivals.inter_arrivals()[..n];
        let (w_lo, w_hi) = stratum_weights(p, n);
        let mut rng = stream(seed, tag::STRATA, path);
        let c = m.c();
        let d = m.reinsurance.retention;

        let mut y: Vec<f64> = (0..n).map(|_| m.claims.draw_below(&mut rng, p)).collect();
        self.score(&summaries_at(&y, z, &counts, c, d), w_lo, scores);
        if w_hi > 0.0 {
            let k = first_exceedance(&mut rng, p, n, w_hi);
            y.clear();
            for i in 1..=n {
                y.push(match i.cmp(&k) {
                    std::cmp::Ordering::Less => m.claims.draw_below(&mut rng, p),
                    std::cmp::Ordering::Equal => m.claims.draw_above(&mut rng, p),
                    std::cmp::Ordering::Greater => m.claims.draw(&mut rng),
                });
            }
            self.score(&summaries_at(&y, z, &counts, c, d), w_hi, scores);
        }
        p > 0.0 && n > 0 && w_hi == 0.0
    }

    fn stratified_case2(&self, seed: u64, path: u64, p: f64, hs: &[f64], scores: &mut [f64]) -> bool {
        let m = self.model;
        let h = hs.last().copied().unwrap_or(0.0);
        let n_bar = stratified_pair_count(h, m.mu_h());
        let (w_lo, w_hi) = stratum_weights(p, n_bar);
        let mut rng = stream(seed, tag::STRATA, path);
        let (c, d) = (m.c(), m.reinsurance.retention);

        let (y, z, counts) = pair_sample(m, &mut rng, p, n_bar, None, hs);
        self.score(&summaries_at(&y, &z, &counts, c, d), w_lo, scores);
        if w_hi > 0.0 {
            let k = first_exceedance(&mut rng, p, n_bar, w_hi);
            let (y, z, counts) = pair_sample(m, &mut rng, p, n_bar, Some(k), hs);
            self.score(&summaries_at(&y, &z, &counts, c, d), w_hi, scores);
        }
        p > 0.0 && n_bar > 0 && w_hi == 0.0
    }
}

/// `((1 − p)^n, 1 − (1 − p)^n)` without cancellation.
#[inline]
pub fn stratum_weights(p: f64, n: usize) -> (f64, f64) {
    if p <= 0.0 || n == 0 {
        return (1.0, 0.0);
    }
    if p >= 1.0 {
        return (0.0, 1.0);
    }
    let log_lo = n as f64 * (-p).ln_1p();
    (log_lo.exp(), -log_lo.exp_m1())
}

/// First index `K ∈ [1, n]` with `Y_K > u`, given that one exists:
/// `P(K ≤ k) = (1 − (1 − p)^k) / q` with `q = 1 − (1 − p)^n`.
#[inline]
fn first_exceedance(rng: &mut StreamRng, p: f64, n: usize, q: f64) -> usize {
    if p >= 1.0 {
        return 1;
    }
    let v = open_unit(rng);
    let k = ((-v * q).ln_1p() / (-p).ln_1p()).ceil();
    (k as usize).clamp(1, n)
}

/// Pairs covered by the stratification in case 2.
pub fn stratified_pair_count(h: f64, mu_h: f64) -> usize {
    (1.25 * h / mu_h).ceil() as usize + 10
}

/// Case-2 path: pairs `1..n̄` conditioned on the stratum (`k = None` for
/// `{M ≤ u}`, `Some(k)` for first exceedance at `k`), later pairs free,
/// extended until the largest horizon is passed.
fn pair_sample(
    m: &RiskModel,
    rng: &mut StreamRng,
    p: f64,
    n_bar: usize,
    k: Option<usize>,
    hs: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let h = hs.last().copied().unwrap_or(0.0);
    let copula = m.copula();
    let (mut y, mut z) = (Vec::new(), Vec::new());
    let mut cum = 0.0;
    let mut cums = Vec::new();
    while cum <= h {
        let i = y.len() + 1;
        let u = interior_unit(rng);
        let w_y = if i > n_bar {
            u
        } else {
            match k {
                Some(k) if i == k => p * u,
                Some(k) if i > k => u,
                _ => p + (1.0 - p) * u,
            }
        };
        let w_z = copula.partner(w_y, rng);
        y.push(m.claims.tail_quantile(w_y.min(1.0)));
        let zi = m.inter_arrivals.tail_quantile(w_z);
        z.push(zi);
        cum += zi;
        cums.push(cum);
    }
    let counts = hs.iter().map(|&t| cums.partition_point(|&s| s <= t)).collect();
    (y, z, counts)
}

/// Estimates `P(functional(t) > x)` on every cell, sharing paths.
pub fn exceedance_grid(model: &RiskModel, functional: Functional, cells: &[Cell], cfg: &McConfig) -> Result<Vec<SimEstimate>> {
    run_grid(model, functional, cells, cfg, Horizon::Fixed)
}

/// Random-horizon version of [`exceedance_grid`]: each path draws `τ` from
/// its own substream and is evaluated at `t = τ`.
pub fn exceedance_random_time(model: &RiskModel, functional: Functional, xs: &[f64], cfg: &McConfig) -> Result<Vec<SimEstimate>> {
    let cells: Vec<Cell> = xs.iter().map(|&x| Cell { t: f64::NAN, x }).collect();
    run_grid(model, functional, &cells, cfg, Horizon::Tau)
}

fn run_grid(model: &RiskModel, functional: Functional, cells: &[Cell], cfg: &McConfig, horizon: Horizon) -> Result<Vec<SimEstimate>> {
    cfg.check()?;
    let grid = Grid::new(model, functional, cells, horizon)?;
    let stratify = |subset: &[usize]| -> Vec<SimEstimate> {
        let x_min = subset.iter().map(|&k| grid.cell_x[k]).fold(f64::INFINITY, f64::min);
        let u = x_min / 2.0;
        let (moments, underflow, method) = if model.claims_iid() {
            let (m, under) = grid.stratified(cfg.n_paths, cfg.seed, u);
            (m, under, Method::BigJumpStratified)
        } else {
            (grid.mixture(cfg.n_paths, cfg.seed, u), false, Method::BigJumpMixture)
        };
        subset
            .iter()
            .map(|&k| {
                let mut e = SimEstimate::stratified(&moments[k], cfg.seed, method);
                if underflow {
                    e.flags.push(Flag::WeightUnderflow);
                }
                e
            })
            .collect()
    };
    let crude = |grid: &Grid| -> Vec<SimEstimate> {
        grid.crude(cfg.n_paths, cfg.seed)
            .iter()
            .map(|m| SimEstimate::proportion(m.hits, m.count, cfg.seed))
            .collect()
    };
    let all: Vec<usize> = (0..cells.len()).collect();
    Ok(match cfg.method {
        MethodChoice::Crude => crude(&grid),
        MethodChoice::Stratified => stratify(&all),
        MethodChoice::Auto => {
            let mut out = crude(&grid);
            let starved: Vec<usize> = all.into_iter().filter(|&k| !out[k].resolved()).collect();
            if !starved.is_empty() {
                for (k, e) in starved.iter().zip(stratify(&starved)) {
                    out[*k] = e;
                }
            }
            out
        }
    })
}

fn single(model: &RiskModel, functional: Functional, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    Ok(exceedance_grid(model, functional, &[Cell { t, x }], cfg)?.remove(0))
}

/// `ψ(x; t) = P(R̃_0(t) > x)`.
pub fn ruin_prob_finite(model: &RiskModel, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    single(model, Functional::RunningMax, x, t, cfg)
}

/// `ψ(x; τ)`.
pub fn ruin_prob_random_time(model: &RiskModel, x: f64, cfg: &McConfig) -> Result<SimEstimate> {
    Ok(exceedance_random_time(model, Functional::RunningMax, &[x], cfg)?.remove(0))
}

/// `P(R_0(t) > x)`.
pub fn net_loss_exceed(model: &RiskModel, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    single(model, Functional::NetLoss, x, t, cfg)
}

/// `P(R_00(t) > x)`.
pub fn total_claims_exceed(model: &RiskModel, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    single(model, Functional::TotalClaims, x, t, cfg)
}

/// `P(R_01(t) > x)`.
pub fn proportional_exceed(model: &RiskModel, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    single(model, Functional::Proportional, x, t, cfg)
}

/// `P(R_02(t) > x)`.
pub fn excess_exceed(model: &RiskModel, x: f64, t: f64, cfg: &McConfig) -> Result<SimEstimate> {
    single(model, Functional::Excess, x, t, cfg)
}

/// The stratified estimator alone, with `u = x/2`.
pub fn big_jump_stratified(model: &RiskModel, functional: Functional, x: f64, t: f64, n_paths: u64, seed: u64) -> Result<SimEstimate> {
    single(model, functional, x, t, &McConfig::new(n_paths, seed, MethodChoice::Stratified))
}

/// Whether `K` satisfies the stop-loss condition: `q₂ = 0` or
/// `K > q₁ μ_H μ_G / μ₀`.
pub fn stoploss_gate(model: &RiskModel) -> bool {
    let r = &model.reinsurance;
    let mu0 = model.mu0();
    r.q2 == 0.0 || r.k > r.q1 * model.mu_h() * model.mu_g() / mu0
}

/// `E R_03(t)` by crude Monte Carlo.
pub fn stoploss_mean(model: &RiskModel, t: f64, n_paths: u64, seed: u64) -> Result<SimEstimate> {
    let sl = StopLoss::from_model(model);
    if !(sl.mu0 > 0.0) {
        return Err(invalid(format!("stop-loss needs mu0 > 0, got {}", sl.mu0)));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("stop-loss needs t > 0, got {t}")));
    }
    McConfig::new(n_paths, seed, MethodChoice::Crude).check()?;
    let parts = map_chunks(n_paths, |lo, hi| {
        let mut m = Moments::default();
        let mut largest = 0.0f64;
        for p in lo..hi {
            let s = model.path(seed, p).summaries(&[t])[0];
            let v = sl.apply(&s, t);
            largest = largest.max(v);
            m.push(v);
        }
        (m, largest)
    });
    let largest = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let moments: Vec<Moments> = parts.into_iter().map(|p| p.0).collect();
    let m = Moments::merge_ordered(&moments);
    let mut e = SimEstimate::from_mean(m.mean(), m.stderr(), &m, seed);
    if m.sum > 0.0 && largest > HEAVY_TERM_SHARE * m.sum {
        e.flags.push(Flag::HeavyTail);
    }
    if !stoploss_gate(model) || !model.generalized_load_holds() {
        e.flags.push(Flag::GateViolated);
    }
    Ok(e)
}

/// `E N(τ)` on the same `τ` and arrival substreams as the random-time
/// ruin estimator.
pub fn expected_count_random_time(model: &RiskModel, n_paths: u64, seed: u64) -> Result<SimEstimate> {
    if model.tau.is_none() {
        return Err(invalid("model has no tau law"));
    }
    McConfig::new(n_paths, seed, MethodChoice::Crude).check()?;
    let parts = map_chunks(n_paths, |lo, hi| {
        let mut m = Moments::default();
        for p in lo..hi {
            let tau = model.draw_tau(seed, p).expect("checked");
            m.push(model.path(seed, p).count(tau) as f64);
        }
        m
    });
    let m = Moments::merge_ordered(&parts);
    Ok(SimEstimate::from_mean(m.mean(), m.stderr(), &m, seed))
}

/// Truncation bound for nonnegative WUOD sums:
/// `P(S_n > x) ≤ n Ḡ(x/v) + M (e μ n / x)^v`.
pub fn nagaev_bound(n: u64, x: f64, v: f64, m: f64, mu: f64, g: &TailModel) -> Result<f64> {
    if !(v > 0.0 && x > 0.0) {
        return Err(Error::Domain(format!("bound needs v > 0 and x > 0, got v = {v}, x = {x}")));
    }
    let nf = n as f64;
    Ok(nf * g.sf(x / v) + m * (std::f64::consts::E * mu * nf / x).powf(v))
}

/// `P(S_n > x)` for a nonrandom sum of `n` claims coupled by `plan`;
/// stratified (threshold `min x / 2`) when requested and the plan is i.i.d.
pub fn sum_exceed(g: &TailModel, plan: DependencePlan, n: usize, xs: &[f64], cfg: &McConfig) -> Result<Vec<SimEstimate>> {
    cfg.check()?;
    if xs.is_empty() {
        return Err(invalid("no thresholds"));
    }
    let iid = plan.is_iid_sequence();
    let per_threshold = |parts: Vec<Vec<Moments>>, make: &dyn Fn(&Moments) -> SimEstimate| -> Vec<SimEstimate> {
        (0..xs.len())
            .map(|k| {
                let v: Vec<Moments> = parts.iter().map(|c| c[k]).collect();
                make(&Moments::merge_ordered(&v))
            })
            .collect()
    };
    let crude = || -> Vec<SimEstimate> {
        let parts = map_chunks(cfg.n_paths, |lo, hi| {
            let mut acc = vec![Moments::default(); xs.len()];
            let mut buf = Vec::with_capacity(n);
            for p in lo..hi {
                let mut rng = stream(cfg.seed, tag::SUMS, p);
                plan.fill_sequence(g, n, &mut rng, &mut buf);
                let s: f64 = buf.iter().sum();
                for (m, &x) in acc.iter_mut().zip(xs) {
                    m.push((s > x) as u8 as f64);
                }
            }
            acc
        });
        per_threshold(parts, &|m| SimEstimate::proportion(m.hits, m.count, cfg.seed))
    };
    let u = xs.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    let p = g.sf(u);
    let big_jump = || -> Vec<SimEstimate> {
        let (w_lo, w_hi) = stratum_weights(p, n);
        let parts = map_chunks(cfg.n_paths, |lo, hi| {
            let mut acc = vec![Moments::default(); xs.len()];
            let mut buf = Vec::with_capacity(n);
            for path in lo..hi {
                let mut rng = stream(cfg.seed, tag::STRATA, path);
                // (sum, weight) for the two terms of the decomposition
                let (lo_term, hi_term) = if iid {
                    let s_lo: f64 = (0..n).map(|_| g.draw_below(&mut rng, p)).sum();
                    let s_hi = if w_hi > 0.0 {
                        let k = first_exceedance(&mut rng, p, n, w_hi);
                        let mut s = 0.0;
                        for i in 1..=n {
                            s += match i.cmp(&k) {
                                std::cmp::Ordering::Less => g.draw_below(&mut rng, p),
                                std::cmp::Ordering::Equal => g.draw_above(&mut rng, p),
                                std::cmp::Ordering::Greater => g.draw(&mut rng),
                            };
                        }
                        s
                    } else {
                        f64::NEG_INFINITY
                    };
                    ((s_lo, w_lo), (s_hi, w_hi))
                } else {
                    let mut plain = stream(cfg.seed, tag::SUMS, path);
                    plan.fill_sequence(g, n, &mut plain, &mut buf);
                    let below = buf.iter().all(|&y| y <= u);
                    let s_lo = if below { buf.iter().sum() } else { f64::NEG_INFINITY };
                    let s_hi = if p > 0.0 {
                        let j = rng.random_range(0..n);
                        let k = plan.fill_forced(g, n, j, p, &mut rng, &mut buf);
                        (buf.iter().sum(), n as f64 * p / k as f64)
                    } else {
                        (f64::NEG_INFINITY, 0.0)
                    };
                    ((s_lo, 1.0), s_hi)
                };
                for (m, &x) in acc.iter_mut().zip(xs) {
                    let mut v = 0.0;
                    if lo_term.0 > x {
                        v += lo_term.1;
                    }
                    if hi_term.0 > x {
                        v += hi_term.1;
                    }
                    m.push(v);
                }
            }
            acc
        });
        let method = if iid { Method::BigJumpStratified } else { Method::BigJumpMixture };
        per_threshold(parts, &|m| SimEstimate::stratified(m, cfg.seed, method))
    };
    Ok(match cfg.method {
        MethodChoice::Crude => crude(),
        MethodChoice::Stratified => big_jump(),
        MethodChoice::Auto => {
            let mut out = crude();
            if out.iter().any(|e| !e.resolved()) {
                for (o, s) in out.iter_mut().zip(big_jump()) {
                    if !o.resolved() {
                        *o = s;
                    }
                }
            }
            out
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdeRow {
    pub n: usize,
    pub xs: Vec<f64>,
    pub estimates: Vec<SimEstimate>,
    /// `n Ḡ(x − μ_G n)`.
    pub asymptotes: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `sup |ratio − 1|` over resolved cells.
    pub sup_deviation: f64,
    /// Cells left out of the supremum for lack of hits.
    pub starved: Vec<f64>,
}

/// `P(S_n > x) / (n Ḡ(x − μ_G n))` over `x` on a geometric ray
/// `[γn, factor·γn]` with `points` points, for each `n`. `n = 1` is exact.
pub fn lde_sum_oracle(
    g: &TailModel,
    plan: DependencePlan,
    ns: &[usize],
    gamma: f64,
    points: usize,
    factor: f64,
    cfg: &McConfig,
) -> Result<Vec<LdeRow>> {
    let mu = g.mean();
    if !(gamma > mu) {
        return Err(Error::Gate(vec![format!("gamma = {gamma} must exceed mu_G = {mu}")]));
    }
    if !(factor >= 1.0) || points == 0 {
        return Err(invalid("ray needs factor >= 1 and at least one point"));
    }
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(invalid("n must be positive"));
            }
            let lo = gamma * n as f64;
            let xs = crate::heavy_tails::geometric_grid(lo, lo * factor, points);
            let estimates = if n == 1 {
                xs.iter().map(|&x| SimEstimate::exact(g.sf(x), cfg.seed)).collect()
            } else {
                sum_exceed(g, plan, n, &xs, cfg)?
            };
            let asymptotes: Vec<f64> = xs.iter().map(|&x| n as f64 * g.sf(x - mu * n as f64)).collect();
            let ratios: Vec<f64> = estimates.iter().zip(&asymptotes).map(|(e, a)| e.value / a).collect();
            let usable = |e: &SimEstimate| n == 1 || e.resolved();
            let sup_deviation = estimates
                .iter()
                .zip(&ratios)
                .filter(|(e, _)| usable(e))
                .map(|(_, r)| (r - 1.0).abs())
                .fold(f64::NAN, f64::max);
            let starved = xs
                .iter()
                .zip(&estimates)
                .filter(|(_, e)| !usable(e))
                .map(|(&x, _)| x)
                .collect();
            Ok(LdeRow {
                n,
                xs,
                estimates,
                asymptotes,
                ratios,
                sup_deviation,
                starved,
            })
        })
        .collect()
}

/// Draws `count` values of a uniform on `(0, 1)`; exposed for benchmarks.
pub fn uniform_block<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| interior_unit(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::PairCopula;
    use crate::processes::Reinsurance;
    use proptest::prelude::*;

    fn pareto(alpha: f64) -> TailModel {
        TailModel::pareto_with_mean(alpha, 1.0).unwrap()
    }

    fn exp(mean: f64) -> TailModel {
        TailModel::exponential(mean).unwrap()
    }

    fn case1(c: f64) -> RiskModel {
        RiskModel::case1(pareto(2.0), exp(1.0), c, DependencePlan::iid(), DependencePlan::iid()).unwrap()
    }

    fn cfg(n: u64, seed: u64, method: MethodChoice) -> McConfig {
        McConfig::new(n, seed, method)
    }

    #[test]
    fn trivial_horizons_and_domains() {
        let m = case1(2.0);
        let e = ruin_prob_finite(&m, 1.0, 0.0, &cfg(1000, 1, MethodChoice::Crude)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.has(Flag::InsufficientHits));
        assert_eq!(e.ci95.0, 0.0);
        assert!(e.ci95.1 > 0.0);
        assert!(ruin_prob_finite(&m, -1.0, 1.0, &cfg(10, 1, MethodChoice::Crude)).is_err());
        assert_eq!(net_loss_exceed(&m, 1.0, 0.0, &cfg(100, 1, MethodChoice::Crude)).unwrap().value, 0.0);
        let tau0 = m.clone().with_tau(TailModel::degenerate(0.0).unwrap());
        assert_eq!(ruin_prob_random_time(&tau0, 1.0, &cfg(1000, 1, MethodChoice::Auto)).unwrap().value, 0.0);
    }

    #[test]
    fn proportion_intervals() {
        let wald = SimEstimate::proportion(500, 10_000, 0);
        assert!((wald.ci95.1 - wald.value - Z95 * wald.stderr).abs() < 1e-15);
        let wilson = SimEstimate::proportion(10, 10_000, 0);
        assert_eq!(wilson.ci95, wilson_interval(10, 10_000, Z95));
        assert!(wilson.has(Flag::LowHits));
    }

    #[test]
    fn crude_and_stratified_agree() {
        let m = case1(2.0);
        let crude = ruin_prob_finite(&m, 30.0, 10.0, &cfg(400_000, 3, MethodChoice::Crude)).unwrap();
        let strat = big_jump_stratified(&m, Functional::RunningMax, 30.0, 10.0, 100_000, 3).unwrap();
        assert!(agree(&crude, &strat, 3.0), "{crude:?} {strat:?}");
        assert!(crude.resolved() && strat.resolved());
    }

    #[test]
    fn stratification_agrees_in_case2() {
        for copula in [PairCopula::Comonotone, PairCopula::Gaussian { rho: 0.5 }] {
            let m = RiskModel::case2(pareto(2.0), exp(1.0), 1.5, copula).unwrap();
            for f in [Functional::RunningMax, Functional::TotalClaims] {
                let cells = [Cell { t: 10.0, x: 25.0 }, Cell { t: 20.0, x: 40.0 }];
                let crude = exceedance_grid(&m, f, &cells, &cfg(300_000, 5, MethodChoice::Crude)).unwrap();
                let strat = exceedance_grid(&m, f, &cells, &cfg(100_000, 5, MethodChoice::Stratified)).unwrap();
                for (a, b) in crude.iter().zip(&strat) {
                    assert!(agree(a, b, 3.0), "{copula:?} {f:?} {a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn stratification_beats_crude_on_rare_cells() {
        let m = case1(2.0);
        let (t, x) = (10.0, 100.0);
        let n = 200_000;
        let crude = ruin_prob_finite(&m, x, t, &cfg(n, 7, MethodChoice::Crude)).unwrap();
        let strat = big_jump_stratified(&m, Functional::RunningMax, x, t, n, 7).unwrap();
        let ratio = crude.stderr.powi(2) / strat.stderr.powi(2);
        assert!(ratio > 1.0, "variance ratio {ratio}");
        assert!(agree(&crude, &strat, 3.0));
    }

    #[test]
    fn zero_tail_threshold_reduces_to_crude() {
        let g = TailModel::user_table(vec![0.0, 2.0], vec![1.0, 0.0]).unwrap();
        let m = RiskModel::case1(g, exp(1.0), 2.0, DependencePlan::iid(), DependencePlan::iid()).unwrap();
        // u = 5 lies beyond the support, so Ḡ(u) = 0 and only the lower stratum exists.
        let s = big_jump_stratified(&m, Functional::TotalClaims, 10.0, 10.0, 50_000, 1).unwrap();
        let c = total_claims_exceed(&m, 10.0, 10.0, &cfg(50_000, 2, MethodChoice::Crude)).unwrap();
        assert!(agree(&s, &c, 3.0), "{s:?} {c:?}");
        assert!(!s.has(Flag::WeightUnderflow));
    }

    #[test]
    fn na_claims_use_the_mixture() {
        let na = DependencePlan::gaussian_na(-0.2, 5).unwrap();
        let m = RiskModel::case1(pareto(2.0), exp(1.0), 1.5, na, DependencePlan::iid()).unwrap();
        let e = ruin_prob_finite(&m, 200.0, 10.0, &cfg(2000, 1, MethodChoice::Auto)).unwrap();
        assert_eq!(e.method, Method::BigJumpMixture);
        for f in [Functional::NetLoss, Functional::RunningMax] {
            let cells = [Cell { t: 10.0, x: 20.0 }, Cell { t: 20.0, x: 40.0 }];
            let crude = exceedance_grid(&m, f, &cells, &cfg(400_000, 5, MethodChoice::Crude)).unwrap();
            let mix = exceedance_grid(&m, f, &cells, &cfg(100_000, 5, MethodChoice::Stratified)).unwrap();
            for (a, b) in crude.iter().zip(&mix) {
                assert!(agree(a, b, 3.0), "{f:?} {a:?} {b:?}");
                assert!(b.stderr < a.stderr, "{a:?} {b:?}");
            }
        }
        let xs = [10.0, 30.0];
        let crude = sum_exceed(&m.claims, na, 10, &xs, &cfg(400_000, 2, MethodChoice::Crude)).unwrap();
        let mix = sum_exceed(&m.claims, na, 10, &xs, &cfg(100_000, 2, MethodChoice::Stratified)).unwrap();
        for (a, b) in crude.iter().zip(&mix) {
            assert!(agree(a, b, 3.0), "{a:?} {b:?}");
        }
    }

    #[test]
    fn random_time_examples() {
        let poisson_tau = case1(2.0).with_tau(exp(1.0));
        let en = expected_count_random_time(&poisson_tau, 100_000, 1).unwrap();
        assert!((en.value - 1.0).abs() < 3.0 * en.stderr, "{en:?}");

        let fixed = case1(2.0).with_tau(TailModel::degenerate(10.0).unwrap());
        let a = ruin_prob_random_time(&fixed, 15.0, &cfg(100_000, 4, MethodChoice::Crude)).unwrap();
        let b = ruin_prob_finite(&fixed, 15.0, 10.0, &cfg(100_000, 4, MethodChoice::Crude)).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn net_loss_below_ruin_on_shared_seeds() {
        let m = case1(1.5);
        let cells: Vec<Cell> = [5.0, 10.0, 20.0].iter().map(|&x| Cell { t: 20.0, x }).collect();
        let c = cfg(50_000, 9, MethodChoice::Crude);
        let psi = exceedance_grid(&m, Functional::RunningMax, &cells, &c).unwrap();
        let r0 = exceedance_grid(&m, Functional::NetLoss, &cells, &c).unwrap();
        for (a, b) in r0.iter().zip(&psi) {
            assert!(a.value <= b.value);
        }
        assert!(psi.windows(2).all(|w| w[1].value <= w[0].value));
        let later: Vec<Cell> = cells.iter().map(|c| Cell { t: 40.0, ..*c }).collect();
        let psi_later = exceedance_grid(&m, Functional::RunningMax, &later, &c).unwrap();
        for (a, b) in psi.iter().zip(&psi_later) {
            assert!(a.value <= b.value);
        }
    }

    #[test]
    fn stoploss_examples() {
        let huge = case1(2.0).with_reinsurance(Reinsurance { q2: 0.0, k: 1e9, ..Reinsurance::default() }).unwrap();
        assert_eq!(stoploss_mean(&huge, 100.0, 1000, 1).unwrap().value, 0.0);

        // Deterministic Y ≡ 1, Z ≡ 1, q1 = 1, q2 = 0, μ0 = 1, K = 0.5:
        // R_03(t) = ⌊t⌋/t − 0.5.
        let det = RiskModel::case1(
            TailModel::degenerate(1.0).unwrap(),
            TailModel::degenerate(1.0).unwrap(),
            2.0,
            DependencePlan::iid(),
            DependencePlan::iid(),
        )
        .unwrap()
        .with_reinsurance(Reinsurance { q2: 0.0, k: 0.5, ..Reinsurance::default() })
        .unwrap();
        let e = stoploss_mean(&det, 10.5, 10, 1).unwrap();
        assert!((e.value - (10.0 / 10.5 - 0.5)).abs() < 1e-15);

        let gated = case1(2.0).with_reinsurance(Reinsurance { q1: 1.0, q2: 1.0, k: 0.1, ..Reinsurance::default() }).unwrap();
        assert!(stoploss_mean(&gated, 10.0, 100, 1).unwrap().has(Flag::GateViolated));
    }

    #[test]
    fn nagaev_examples() {
        let g = pareto(2.0);
        let b = nagaev_bound(1, 10.0, 1.0, 1.0, 1.0, &g).unwrap();
        assert!((b - (1.0 / 121.0 + std::f64::consts::E / 10.0)).abs() < 1e-15);
        assert!(nagaev_bound(1, 0.0, 1.0, 1.0, 1.0, &g).is_err());
        let far = nagaev_bound(10, 1e9, 3.0, 1.0, 1.0, &g).unwrap();
        assert!(far < 1e-12);
    }

    #[test]
    fn lde_single_summand_is_exact() {
        let g = pareto(2.0);
        let rows = lde_sum_oracle(&g, DependencePlan::iid(), &[1], 100.0, 1, 1.0, &cfg(10, 1, MethodChoice::Auto)).unwrap();
        assert!((rows[0].ratios[0] - 100.0f64.powi(2) / 101.0f64.powi(2)).abs() < 1e-12);
        assert!(lde_sum_oracle(&g, DependencePlan::iid(), &[5], 1.0, 3, 2.0, &cfg(10, 1, MethodChoice::Auto)).is_err());
    }

    #[test]
    fn sums_agree_across_methods() {
        let g = pareto(2.5);
        let xs = [20.0, 40.0, 80.0];
        let crude = sum_exceed(&g, DependencePlan::iid(), 10, &xs, &cfg(400_000, 1, MethodChoice::Crude)).unwrap();
        let strat = sum_exceed(&g, DependencePlan::iid(), 10, &xs, &cfg(100_000, 1, MethodChoice::Stratified)).unwrap();
        for (a, b) in crude.iter().zip(&strat) {
            assert!(agree(a, b, 3.0), "{a:?} {b:?}");
        }
    }

    #[test]
    fn weights_and_geometric_index() {
        let (lo, hi) = stratum_weights(1e-12, 100);
        assert!((hi - 1e-10).abs() < 1e-20 && (lo + hi - 1.0).abs() < 1e-15);
        assert_eq!(stratum_weights(0.0, 5), (1.0, 0.0));
        // Empirical law of the truncated geometric index.
        let (p, n) = (0.2, 5);
        let q = stratum_weights(p, n).1;
        let mut rng = stream(1, 0, 0);
        let mut freq = [0u32; 6];
        for _ in 0..200_000 {
            freq[first_exceedance(&mut rng, p, n, q)] += 1;
        }
        for k in 1..=n {
            let expect = (1.0 - p).powi(k as i32 - 1) * p / q;
            let got = freq[k] as f64 / 200_000.0;
            assert!((got - expect).abs() < 0.005, "k={k} {got} vs {expect}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn ruin_monotone_in_capital(seed in any::<u64>(), x in 1.0f64..50.0, dx in 0.0f64..20.0) {
            let m = case1(1.5);
            let c = cfg(4096, seed, MethodChoice::Crude);
            let cells = [Cell { t: 10.0, x }, Cell { t: 10.0, x: x + dx }];
            let e = exceedance_grid(&m, Functional::RunningMax, &cells, &c).unwrap();
            prop_assert!(e[1].value <= e[0].value);
        }
    }
}
