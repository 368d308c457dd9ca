//! Risk processes built from simulated claim and inter-arrival paths.
//!
//! With `S^G_n`, `S^H_n` the claim and arrival partial sums and
//! `S^F_n = S^G_n − c S^H_n` the net-loss partial sums:
//!
//! | process | value at `t` |
//! |---|---|
//! | `R̃_0` | `max_{0≤n≤N(t)} S^F_n` |
//! | `R_0` | `S^G_{N(t)} − c S^H_{N(t)}` |
//! | `R_00` | `S^G_{N(t)}` |
//! | `R_01` | `q₁ S^G_{N(t)} − q₂ c S^H_{N(t)}` |
//! | `R_02` | `Σ_{i≤N(t)} (Y_i − D)⁺ − q₂ c S^H_{N(t)}` |
//! | `R_03` | `(R_01 / (μ₀ t/μ_H) − K)⁺` |
//!
//! Prefix sums are accumulated left to right and every process is formed
//! from the same `S^G`, `S^H`, so identities such as
//! `R_0 = R_00 − c S^H_{N(t)}` hold exactly in floating point.

use serde::{Deserialize, Serialize};

use crate::dependence::{draw_pair, DependencePlan, PairCopula};
use crate::error::{invalid, Error, Result};
use crate::estimators::SimEstimate;
use crate::heavy_tails::{Family, TailModel};
use crate::quad::{self, Tolerance};
use crate::renewal::ArrivalPath;
use crate::rng::{interior_unit, stream, tag, BlockedStream};
use crate::stats::{map_chunks, Moments};

/// Dependence structure between the claim and arrival sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Claims, inter-arrivals (and `τ`) mutually independent sequences;
    /// either may be internally dependent.
    Case1,
    /// `(Y_i, Z_i)` i.i.d. across `i`, arbitrarily coupled within a pair.
    Case2,
}

/// Centering `μ₀` of the stop-loss functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu0Rule {
    /// `|q₂ c μ_H − q₁ μ_G|`.
    Loaded,
    /// `|q₂ μ_H − q₁ c μ_G|`, the expression as literally printed.
    Literal,
    Fixed(f64),
}

/// Treaty parameters: quota shares `q₁`, `q₂`, retention `D`, stop-loss
/// level `K` and the `μ₀` rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Reinsurance {
    pub q1: f64,
    pub q2: f64,
    pub retention: f64,
    pub k: f64,
    /// Use `|q₂ μ_H − q₁ c μ_G|` for `μ₀`.
    pub mu0_literal: bool,
    /// Explicit `μ₀`, overriding both rules.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
}

impl Default for Reinsurance {
    fn default() -> Self {
        Self {
            q1: 1.0,
            q2: 1.0,
            retention: 0.0,
            k: 1.0,
            mu0_literal: false,
            mu0: None,
        }
    }
}

impl Reinsurance {
    pub fn validate(&self) -> Result<()> {
        if !(self.q1 > 0.0 && self.q1 <= 1.0) {
            return Err(invalid(format!("q1 must lie in (0, 1], got {}", self.q1)));
        }
        if !(0.0..=1.0).contains(&self.q2) {
            return Err(invalid(format!("q2 must lie in [0, 1], got {}", self.q2)));
        }
        if !(self.retention >= 0.0 && self.retention.is_finite()) {
            return Err(invalid(format!("retention must be >= 0, got {}", self.retention)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid(format!("K must be positive, got {}", self.k)));
        }
        if let Some(m) = self.mu0 {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid(format!("mu0 must be positive, got {m}")));
            }
        }
        Ok(())
    }

    pub fn mu0_rule(&self) -> Mu0Rule {
        match (self.mu0, self.mu0_literal) {
            (Some(v), _) => Mu0Rule::Fixed(v),
            (None, true) => Mu0Rule::Literal,
            (None, false) => Mu0Rule::Loaded,
        }
    }

    pub fn mu0(&self, mu_g: f64, mu_h: f64, c: f64) -> f64 {
        match self.mu0_rule() {
            Mu0Rule::Loaded => (self.q2 * c * mu_h - self.q1 * mu_g).abs(),
            Mu0Rule::Literal => (self.q2 * mu_h - self.q1 * c * mu_g).abs(),
            Mu0Rule::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiskModelSpec {
    claims: TailModel,
    inter_arrivals: TailModel,
    premium_rate: f64,
    case: Case,
    #[serde(default)]
    claim_plan: DependencePlan,
    #[serde(default)]
    arrival_plan: DependencePlan,
    #[serde(default)]
    pair_plan: Option<DependencePlan>,
    #[serde(default)]
    reinsurance: Reinsurance,
    #[serde(default)]
    tau: Option<TailModel>,
}

/// Full risk model: laws, premium rate, dependence case, treaty, and an
/// optional random horizon `τ`.
///
/// Descriptor keys: `claims`, `inter_arrivals` (law tables), `premium_rate`,
/// `case = "case1" | "case2"`, optional `claim_plan`, `arrival_plan`
/// (case 1), `pair_plan` (case 2), `reinsurance`, `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RiskModelSpec")]
pub struct RiskModel {
    pub claims: TailModel,
    pub inter_arrivals: TailModel,
    pub premium_rate: f64,
    pub case: Case,
    pub claim_plan: DependencePlan,
    pub arrival_plan: DependencePlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_plan: Option<DependencePlan>,
    pub reinsurance: Reinsurance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<TailModel>,
}

impl TryFrom<RiskModelSpec> for RiskModel {
    type Error = Error;

    fn try_from(s: RiskModelSpec) -> Result<Self> {
        let mut m = match s.case {
            Case::Case1 => {
                if s.pair_plan.is_some() {
                    return Err(invalid("pair_plan is only meaningful in case2"));
                }
                RiskModel::case1(s.claims, s.inter_arrivals, s.premium_rate, s.claim_plan, s.arrival_plan)?
            }
            Case::Case2 => {
                if !(s.claim_plan.is_iid_sequence() && s.arrival_plan.is_iid_sequence()) {
                    return Err(invalid("case2 pairs are independent across indices; drop claim_plan/arrival_plan"));
                }
                let copula = s
                    .pair_plan
                    .and_then(|p| p.pair_copula())
                    .ok_or_else(|| invalid("case2 needs a pair_copula pair_plan"))?;
                RiskModel::case2(s.claims, s.inter_arrivals, s.premium_rate, copula)?
            }
        };
        m = m.with_reinsurance(s.reinsurance)?;
        if let Some(tau) = s.tau {
            m = m.with_tau(tau);
        }
        Ok(m)
    }
}

impl RiskModel {
    fn check_base(g: &TailModel, h: &TailModel, c: f64) -> Result<()> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("premium rate must be positive, got {c}")));
        }
        if !(h.mean() > 0.0) {
            return Err(invalid("inter-arrival law must have a positive mean"));
        }
        if !(g.mean() < c * h.mean()) {
            return Err(invalid(format!(
                "safety load violated: mu_G = {} >= c mu_H = {}",
                g.mean(),
                c * h.mean()
            )));
        }
        Ok(())
    }

    /// Independent claim and arrival sequences.
    pub fn case1(
        claims: TailModel,
        inter_arrivals: TailModel,
        c: f64,
        claim_plan: DependencePlan,
        arrival_plan: DependencePlan,
    ) -> Result<Self> {
        Self::check_base(&claims, &inter_arrivals, c)?;
        if claim_plan.pair_copula().is_some() || arrival_plan.pair_copula().is_some() {
            return Err(invalid("case1 sequence plans must be iid or gaussian_na"));
        }
        Ok(Self {
            claims,
            inter_arrivals,
            premium_rate: c,
            case: Case::Case1,
            claim_plan,
            arrival_plan,
            pair_plan: None,
            reinsurance: Reinsurance::default(),
            tau: None,
        })
    }

    /// I.i.d. pairs `(Y_i, Z_i)` coupled by `copula`.
    pub fn case2(claims: TailModel, inter_arrivals: TailModel, c: f64, copula: PairCopula) -> Result<Self> {
        Self::check_base(&claims, &inter_arrivals, c)?;
        Ok(Self {
            claims,
            inter_arrivals,
            premium_rate: c,
            case: Case::Case2,
            claim_plan: DependencePlan::iid(),
            arrival_plan: DependencePlan::iid(),
            pair_plan: Some(DependencePlan::pairs(copula)?),
            reinsurance: Reinsurance::default(),
            tau: None,
        })
    }

    pub fn with_reinsurance(mut self, r: Reinsurance) -> Result<Self> {
        r.validate()?;
        self.reinsurance = r;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: TailModel) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn mu_g(&self) -> f64 {
        self.claims.mean()
    }

    pub fn mu_h(&self) -> f64 {
        self.inter_arrivals.mean()
    }

    pub fn c(&self) -> f64 {
        self.premium_rate
    }

    /// Intra-pair coupling; independent in case 1.
    pub fn copula(&self) -> PairCopula {
        self.pair_plan
            .and_then(|p| p.pair_copula())
            .unwrap_or(PairCopula::Independent)
    }

    pub fn mu0(&self) -> f64 {
        self.reinsurance.mu0(self.mu_g(), self.mu_h(), self.c())
    }

    /// `q₁ μ_G < q₂ c μ_H`, required by the treaty functionals when `q₂ > 0`.
    pub fn generalized_load_holds(&self) -> bool {
        let r = &self.reinsurance;
        r.q2 == 0.0 || r.q1 * self.mu_g() < r.q2 * self.c() * self.mu_h()
    }

    /// Whether claims are i.i.d. (needed by the stratified estimator).
    pub fn claims_iid(&self) -> bool {
        self.claim_plan.is_iid_sequence()
    }

    /// Path `index` under `seed`.
    pub fn path(&self, seed: u64, index: u64) -> RiskPath<'_> {
        RiskPath::new(self, seed, index)
    }

    /// `τ` for path `index`, from its own substream.
    pub fn draw_tau(&self, seed: u64, index: u64) -> Option<f64> {
        self.tau
            .as_ref()
            .map(|tau| tau.draw(&mut stream(seed, tag::TAU, index)))
    }
}

/// Lazily extended realization of `(Y_i, Z_i)`.
#[derive(Debug, Clone)]
pub struct RiskPath<'a> {
    model: &'a RiskModel,
    source: Source<'a>,
    claims: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Source<'a> {
    Independent {
        arrivals: ArrivalPath<'a>,
        claim_stream: BlockedStream,
    },
    Pairs {
        stream: BlockedStream,
        copula: PairCopula,
        inter: Vec<f64>,
        cum: Vec<f64>,
    },
}

impl<'a> RiskPath<'a> {
    fn new(model: &'a RiskModel, seed: u64, index: u64) -> Self {
        let source = match model.case {
            Case::Case1 => Source::Independent {
                arrivals: ArrivalPath::new(&model.inter_arrivals, model.arrival_plan, seed, index)
                    .expect("model validated a positive arrival mean"),
                claim_stream: BlockedStream::new(seed, tag::CLAIMS, index),
            },
            Case::Case2 => Source::Pairs {
                stream: BlockedStream::new(seed, tag::PAIRS, index),
                copula: model.copula(),
                inter: Vec::new(),
                cum: Vec::new(),
            },
        };
        Self {
            model,
            source,
            claims: Vec::new(),
        }
    }

    fn push_pair(&mut self) {
        if let Source::Pairs { stream, copula, inter, cum } = &mut self.source {
            let (y, z) = draw_pair(*copula, &self.model.claims, &self.model.inter_arrivals, stream.group(1));
            self.claims.push(y);
            inter.push(z);
            cum.push(cum.last().copied().unwrap_or(0.0) + z);
        }
    }

    /// `N(t)`.
    pub fn count(&mut self, t: f64) -> usize {
        match &mut self.source {
            Source::Independent { arrivals, .. } => arrivals.count(t),
            Source::Pairs { .. } => loop {
                if let Source::Pairs { cum, .. } = &self.source {
                    if cum.last().is_some_and(|&s| s > t) {
                        return cum.partition_point(|&s| s <= t);
                    }
                }
                self.push_pair();
            },
        }
    }

    /// Ensures `n` claims and inter-arrivals exist.
    pub fn ensure(&mut self, n: usize) {
        match &mut self.source {
            Source::Independent { arrivals, claim_stream } => {
                arrivals.ensure_len(n);
                while self.claims.len() < n {
                    self.model
                        .claim_plan
                        .extend(&self.model.claims, claim_stream, &mut self.claims);
                }
            }
            Source::Pairs { .. } => {
                while self.claims.len() < n {
                    self.push_pair();
                }
            }
        }
    }

    /// `(Y_1..Y_n, Z_1..Z_n)`.
    pub fn prefix(&mut self, n: usize) -> (&[f64], &[f64]) {
        self.ensure(n);
        let z = match &self.source {
            Source::Independent { arrivals, .. } => &arrivals.inter_arrivals()[..n],
            Source::Pairs { inter, .. } => &inter[..n],
        };
        (&self.claims[..n], z)
    }

    /// Summaries at each `t` of an ascending grid.
    pub fn summaries(&mut self, t_grid: &[f64]) -> Vec<PathSummary> {
        let counts: Vec<usize> = t_grid.iter().map(|&t| self.count(t)).collect();
        let n = counts.last().copied().unwrap_or(0);
        let c = self.model.c();
        let d = self.model.reinsurance.retention;
        let (y, z) = self.prefix(n);
        summaries_at(y, z, &counts, c, d)
    }
}

/// Everything the functionals need from one path at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PathSummary {
    /// `N(t)`.
    pub n: usize,
    /// `S^G_{N(t)}`.
    pub sum_claims: f64,
    /// `S^H_{N(t)}`.
    pub sum_inter: f64,
    /// `Σ_{i≤N(t)} (Y_i − D)⁺`.
    pub sum_excess: f64,
    /// `R̃_0(t)`.
    pub running_max: f64,
}

impl PathSummary {
    pub fn net_loss(&self, c: f64) -> f64 {
        self.sum_claims - c * self.sum_inter
    }

    pub fn total_claims(&self) -> f64 {
        self.sum_claims
    }

    pub fn proportional(&self, q1: f64, q2: f64, c: f64) -> f64 {
        q1 * self.sum_claims - q2 * c * self.sum_inter
    }

    pub fn excess(&self, q2: f64, c: f64) -> f64 {
        self.sum_excess - q2 * c * self.sum_inter
    }
}

/// One pass over `(y, z)` producing summaries at the nondecreasing counts.
pub fn summaries_at(y: &[f64], z: &[f64], counts: &[usize], c: f64, retention: f64) -> Vec<PathSummary> {
    let mut out = Vec::with_capacity(counts.len());
    let mut s = PathSummary::default();
    let mut i = 0;
    for &n in counts {
        while i < n {
            s.sum_claims += y[i];
            s.sum_inter += z[i];
            s.sum_excess += (y[i] - retention).max(0.0);
            s.running_max = s.running_max.max(s.sum_claims - c * s.sum_inter);
            i += 1;
        }
        s.n = n;
        out.push(s);
    }
    out
}

/// `S^F_k = S^G_k − c S^H_k` for `k = 1..n`.
pub fn net_loss_partial_sums(y: &[f64], z: &[f64], c: f64, n: usize) -> Result<Vec<f64>> {
    if y.len() < n || z.len() < n {
        return Err(invalid("paths shorter than n"));
    }
    let (mut sy, mut sz) = (0.0, 0.0);
    Ok((0..n)
        .map(|i| {
            sy += y[i];
            sz += z[i];
            sy - c * sz
        })
        .collect())
}

fn summary(y: &[f64], z: &[f64], n: usize, c: f64, retention: f64) -> Result<PathSummary> {
    if y.len() < n || z.len() < n {
        return Err(invalid("paths shorter than N(t)"));
    }
    Ok(summaries_at(y, z, &[n], c, retention)[0])
}

/// `R̃_0(t) = max_{0≤k≤n} S^F_k` with `n = N(t)`; the `k = 0` term is 0.
pub fn running_max_net_loss(y: &[f64], z: &[f64], c: f64, n: usize) -> Result<f64> {
    Ok(summary(y, z, n, c, 0.0)?.running_max)
}

/// `R_0(t) = S^F_{N(t)}`.
pub fn net_loss(y: &[f64], z: &[f64], c: f64, n: usize) -> Result<f64> {
    Ok(summary(y, z, n, c, 0.0)?.net_loss(c))
}

/// `R_00(t) = S^G_{N(t)}`.
pub fn total_claims(y: &[f64], n: usize) -> Result<f64> {
    if y.len() < n {
        return Err(invalid("paths shorter than N(t)"));
    }
    Ok(y[..n].iter().sum())
}

/// `R_01(t) = q₁ S^G_{N(t)} − q₂ c S^H_{N(t)}`.
pub fn proportional_net_loss(y: &[f64], z: &[f64], n: usize, q1: f64, q2: f64, c: f64) -> Result<f64> {
    Ok(summary(y, z, n, c, 0.0)?.proportional(q1, q2, c))
}

/// `R_02(t) = Σ (Y_i − D)⁺ − q₂ c S^H_{N(t)}`.
pub fn excess_of_net_loss(y: &[f64], z: &[f64], n: usize, retention: f64, q2: f64, c: f64) -> Result<f64> {
    Ok(summary(y, z, n, c, retention)?.excess(q2, c))
}

/// Parameters of the stop-loss transform `R_03`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopLoss {
    pub q1: f64,
    pub q2: f64,
    pub c: f64,
    pub k: f64,
    pub mu0: f64,
    pub mu_h: f64,
}

impl StopLoss {
    pub fn from_model(m: &RiskModel) -> Self {
        Self {
            q1: m.reinsurance.q1,
            q2: m.reinsurance.q2,
            c: m.c(),
            k: m.reinsurance.k,
            mu0: m.mu0(),
            mu_h: m.mu_h(),
        }
    }

    /// `(R_01 / (μ₀ t/μ_H) − K)⁺`.
    pub fn apply(&self, s: &PathSummary, t: f64) -> f64 {
        let scaled = s.proportional(self.q1, self.q2, self.c) / (self.mu0 * t / self.mu_h);
        (scaled - self.k).max(0.0)
    }
}

/// `R_03(t)` from raw paths.
pub fn stop_net_loss(y: &[f64], z: &[f64], n: usize, t: f64, p: StopLoss) -> Result<f64> {
    if !(p.mu0 > 0.0) {
        return Err(invalid(format!("stop-loss needs mu0 > 0, got {}", p.mu0)));
    }
    if !(t > 0.0) {
        return Err(invalid("stop-loss needs t > 0"));
    }
    Ok(p.apply(&summary(y, z, n, p.c, 0.0)?, t))
}

/// Means of the auxiliary laws `G₁ = L(Y + cZ)`, `G₂ = L(max{Y, cZ})` and
/// of `(Y − D)⁺`, plus the stop-loss centering `μ₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxLawMoments {
    /// `μ_G + c μ_H`.
    pub mu_g1: f64,
    pub mu_g1_mc: SimEstimate,
    /// Exact `μ_G2` by quadrature when the intra-pair copula allows it.
    pub mu_g2_exact: Option<f64>,
    pub mu_g2_mc: SimEstimate,
    /// `E(Y − D)⁺ = ∫_D^∞ Ḡ`.
    pub mu_excess: f64,
    pub mu_excess_mc: SimEstimate,
    pub mu0: f64,
}

impl AuxLawMoments {
    /// Best available `μ_G2`.
    pub fn mu_g2(&self) -> f64 {
        self.mu_g2_exact.unwrap_or(self.mu_g2_mc.value)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn degenerate_point(m: &TailModel) -> Option<f64> {
    match m.family() {
        Family::Degenerate { value } => Some(*value),
        _ => None,
    }
}

/// `E max{Y, cZ}` by quadrature of `P(max > s)` for the independent,
/// comonotone and countermonotone couplings; `None` for the Gaussian one.
pub fn mu_g2_exact(model: &RiskModel) -> Option<f64> {
    let g = &model.claims;
    let h = &model.inter_arrivals;
    let c = model.c();
    let copula = model.copula();
    if matches!(copula, PairCopula::Gaussian { .. }) {
        return None;
    }
    let ln_c = c.ln();
    let log_tail = move |s: f64| -> f64 {
        let a = g.log_tail_at_log(s);
        let b = h.log_tail_at_log(s - ln_c);
        match copula {
            PairCopula::Independent => {
                // ln(e^a + e^b (1 − e^a))
                let tail_b = if a < 0.0 { b + (-a.exp()).ln_1p() } else { f64::NEG_INFINITY };
                log_add_exp(a, tail_b)
            }
            PairCopula::Comonotone => a.max(b),
            PairCopula::Countermonotone => log_add_exp(a, b).min(0.0),
            PairCopula::Gaussian { .. } => unreachable!(),
        }
    };
    let tol = Tolerance::default();
    let split = g
        .tail_quantile(1e-12)
        .max(c * h.tail_quantile(1e-12))
        .max(1.0);
    let mut breaks: Vec<f64> = [degenerate_point(g), degenerate_point(h).map(|v| c * v)]
        .into_iter()
        .flatten()
        .filter(|&b| b > 0.0 && b < split)
        .collect();
    breaks.sort_by(f64::total_cmp);
    let body = quad::integrate_with_breaks(
        |s| {
            if s <= 0.0 {
                return log_tail(f64::NEG_INFINITY).exp();
            }
            log_tail(s.ln()).exp()
        },
        0.0,
        split,
        &breaks,
        tol,
    );
    let upper = quad::integrate_log_upper(log_tail, split, None, tol);
    Some(body.value + upper.value)
}

/// Monte Carlo and exact auxiliary moments from `reps` i.i.d. pairs
/// `(Y_1, Z_1)` drawn with the model's intra-pair coupling.
pub fn aux_moments(model: &RiskModel, reps: u64, seed: u64) -> Result<AuxLawMoments> {
    if reps < 2 {
        return Err(invalid("aux_moments needs at least 2 replications"));
    }
    let c = model.c();
    let d = model.reinsurance.retention;
    let copula = model.copula();
    let parts = map_chunks(reps, |lo, hi| {
        let mut m = [Moments::default(); 3];
        for i in lo..hi {
            let mut rng = stream(seed, tag::AUX, i);
            let w_y = interior_unit(&mut rng);
            let w_z = copula.partner(w_y, &mut rng);
            let y = model.claims.tail_quantile(w_y);
            let z = model.inter_arrivals.tail_quantile(w_z);
            m[0].push(y + c * z);
            m[1].push(y.max(c * z));
            m[2].push((y - d).max(0.0));
        }
        m
    });
    let merge = |k: usize| {
        let v: Vec<Moments> = parts.iter().map(|p| p[k]).collect();
        let m = Moments::merge_ordered(&v);
        SimEstimate::from_mean(m.mean(), m.stderr(), &m, seed)
    };
    Ok(AuxLawMoments {
        mu_g1: model.mu_g() + c * model.mu_h(),
        mu_g1_mc: merge(0),
        mu_g2_exact: mu_g2_exact(model),
        mu_g2_mc: merge(1),
        mu_excess: model.claims.excess_mean(d),
        mu_excess_mc: merge(2),
        mu0: model.mu0(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pareto2() -> TailModel {
        TailModel::pareto(2.0, 1.0).unwrap()
    }

    fn exp(mean: f64) -> TailModel {
        TailModel::exponential(mean).unwrap()
    }

    fn model(copula: Option<PairCopula>) -> RiskModel {
        match copula {
            None => RiskModel::case1(pareto2(), exp(1.0), 2.0, DependencePlan::iid(), DependencePlan::iid()).unwrap(),
            Some(c) => RiskModel::case2(pareto2(), exp(1.0), 2.0, c).unwrap(),
        }
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(net_loss_partial_sums(&[3.0, 1.0], &[1.0, 1.0], 2.0, 2).unwrap(), vec![1.0, 0.0]);
        let s = net_loss_partial_sums(&[0.0; 3], &[1.0, 2.0, 3.0], 2.0, 3).unwrap();
        assert!(s.iter().all(|&v| v < 0.0));
        assert!(net_loss_partial_sums(&[], &[], 2.0, 0).unwrap().is_empty());
        assert!(net_loss_partial_sums(&[1.0], &[1.0], 2.0, 2).is_err());
    }

    #[test]
    fn process_examples() {
        assert_eq!(running_max_net_loss(&[1.0], &[1.0], 1.0, 0).unwrap(), 0.0);
        assert_eq!(running_max_net_loss(&[5.0], &[1.0], 1.0, 1).unwrap(), 4.0);
        assert_eq!(total_claims(&[2.0, 3.0], 0).unwrap(), 0.0);
        assert_eq!(total_claims(&[2.0, 3.0], 2).unwrap(), 5.0);
        assert_eq!(proportional_net_loss(&[4.0], &[1.0], 1, 0.5, 0.5, 2.0).unwrap(), 1.0);
        assert_eq!(excess_of_net_loss(&[5.0, 1.0], &[1.0, 1.0], 2, 2.0, 0.0, 1.0).unwrap(), 3.0);
        assert_eq!(excess_of_net_loss(&[5.0, 1.0], &[1.0, 1.0], 2, 10.0, 0.5, 2.0).unwrap(), -2.0);
        let p = StopLoss { q1: 1.0, q2: 0.0, c: 1.0, k: 5.0, mu0: 1.0, mu_h: 1.0 };
        assert_eq!(stop_net_loss(&[10.0], &[1.0], 1, 1.0, p).unwrap(), 5.0);
        assert_eq!(stop_net_loss(&[3.0], &[1.0], 1, 1.0, p).unwrap(), 0.0);
        assert!(stop_net_loss(&[3.0], &[1.0], 1, 1.0, StopLoss { mu0: 0.0, ..p }).is_err());
        assert!(stop_net_loss(&[3.0], &[1.0], 1, 0.0, p).is_err());
    }

    #[test]
    fn treaty_reductions() {
        let y = [4.0, 0.5, 7.25, 1.0];
        let z = [1.0, 0.3, 2.0, 0.7];
        let c = 1.7;
        let r0 = net_loss(&y, &z, c, 4).unwrap();
        assert_eq!(proportional_net_loss(&y, &z, 4, 1.0, 1.0, c).unwrap(), r0);
        assert_eq!(
            proportional_net_loss(&y, &z, 4, 0.6, 0.0, c).unwrap(),
            0.6 * total_claims(&y, 4).unwrap()
        );
        assert_eq!(excess_of_net_loss(&y, &z, 4, 0.0, 1.0, c).unwrap(), r0);
    }

    #[test]
    fn construction_checks() {
        assert!(RiskModel::case1(pareto2(), exp(1.0), 0.9, DependencePlan::iid(), DependencePlan::iid()).is_err());
        assert!(RiskModel::case1(pareto2(), exp(1.0), 1.2, DependencePlan::pairs(PairCopula::Comonotone).unwrap(), DependencePlan::iid()).is_err());
        let bad = Reinsurance { q1: 0.0, ..Reinsurance::default() };
        assert!(model(None).with_reinsurance(bad).is_err());
        let text = r#"
            premium_rate = 1.2
            case = "case2"
            claims = { family = "pareto", alpha = 2.0, scale = 1.0 }
            inter_arrivals = { family = "exponential", mean = 1.0 }
            pair_plan = { mode = "pair_copula", copula = "comonotone" }
        "#;
        let m: RiskModel = toml::from_str(text).unwrap();
        assert_eq!(m.copula(), PairCopula::Comonotone);
        let missing = text.replace("pair_plan", "claim_plan");
        assert!(toml::from_str::<RiskModel>(&missing).is_err());
    }

    #[test]
    fn mu0_rules() {
        let r = Reinsurance { q1: 1.0, q2: 0.0, ..Reinsurance::default() };
        assert_eq!(r.mu0(1.0, 1.0, 2.0), 1.0);
        let r = Reinsurance { q1: 0.5, q2: 0.8, ..Reinsurance::default() };
        assert!((r.mu0(1.0, 1.0, 2.0) - 1.1).abs() < 1e-15);
        let lit = Reinsurance { mu0_literal: true, ..r };
        assert!((lit.mu0(1.0, 1.0, 2.0) - 0.2).abs() < 1e-15);
        assert_eq!(Reinsurance { mu0: Some(3.0), ..lit }.mu0(1.0, 1.0, 2.0), 3.0);
    }

    #[test]
    fn aux_moment_examples() {
        let m = model(None);
        let aux = aux_moments(&m, 200_000, 1).unwrap();
        assert!((aux.mu_g1_mc.value - aux.mu_g1).abs() < 3.0 * aux.mu_g1_mc.stderr);
        // Y ~ Pareto(2, mean 1), cZ ~ Exp(mean 2), independent.
        let g2 = aux.mu_g2_exact.unwrap();
        assert!(g2 > 2.0 && g2 < 3.0, "{g2}");
        assert!((aux.mu_g2_mc.value - g2).abs() < 4.0 * aux.mu_g2_mc.stderr);
        assert!(m.mu_g() <= g2 && g2 <= aux.mu_g1);

        // Comonotone with Y = Z in law: max{Y, 2Z} = 2Z.
        let co = RiskModel::case2(exp(1.0), exp(1.0), 2.0, PairCopula::Comonotone).unwrap();
        assert!((mu_g2_exact(&co).unwrap() - 2.0).abs() < 1e-8);

        let counter = model(Some(PairCopula::Countermonotone));
        let aux = aux_moments(&counter, 200_000, 2).unwrap();
        let g2 = aux.mu_g2_exact.unwrap();
        assert!((aux.mu_g2_mc.value - g2).abs() < 4.0 * aux.mu_g2_mc.stderr);

        let gauss = model(Some(PairCopula::Gaussian { rho: 0.5 }));
        assert!(mu_g2_exact(&gauss).is_none());

        let deg = RiskModel::case1(pareto2(), TailModel::degenerate(1.0).unwrap(), 2.0, DependencePlan::iid(), DependencePlan::iid()).unwrap();
        // E max{Y, 2} = 2 + ∫_2^∞ (1+s)^{-2} ds = 2 + 1/3
        assert!((mu_g2_exact(&deg).unwrap() - (2.0 + 1.0 / 3.0)).abs() < 1e-7);
    }

    #[test]
    fn excess_mean_matches_mc() {
        let m = model(None)
            .with_reinsurance(Reinsurance { retention: 1.0, ..Reinsurance::default() })
            .unwrap();
        let aux = aux_moments(&m, 200_000, 3).unwrap();
        // ∫_1^∞ (1+y)^{-2} dy = 1/2
        assert!((aux.mu_excess - 0.5).abs() < 1e-8);
        assert!((aux.mu_excess_mc.value - 0.5).abs() < 3.0 * aux.mu_excess_mc.stderr);
    }

    #[test]
    fn paths_are_deterministic_and_consistent() {
        for m in [model(None), model(Some(PairCopula::Comonotone))] {
            let grid = [1.0, 5.0, 20.0, 50.0];
            let a = m.path(7, 3).summaries(&grid);
            let b = m.path(7, 3).summaries(&grid);
            assert_eq!(a, b);
            let mut p = m.path(7, 3);
            let n = p.count(50.0);
            let (y, z) = p.prefix(n);
            assert_eq!(a[3].running_max, running_max_net_loss(y, z, 2.0, n).unwrap());
        }
    }

    proptest! {
        #[test]
        fn pathwise_identities(seed in any::<u64>(), t in 0.0f64..100.0, c in 1.01f64..4.0) {
            for copula in [None, Some(PairCopula::Comonotone), Some(PairCopula::Gaussian { rho: -0.3 })] {
                let m = match copula {
                    None => RiskModel::case1(pareto2(), exp(1.0), c, DependencePlan::gaussian_na(-0.2, 4).unwrap(), DependencePlan::iid()).unwrap(),
                    Some(cop) => RiskModel::case2(pareto2(), exp(1.0), c, cop).unwrap(),
                };
                let s = m.path(seed, 0).summaries(&[t])[0];
                prop_assert_eq!(s.net_loss(c), s.total_claims() - c * s.sum_inter);
                prop_assert!(s.running_max >= s.net_loss(c).max(0.0));
                let mut p = m.path(seed, 0);
                let n = p.count(t);
                let (y, z) = p.prefix(n);
                let sums = net_loss_partial_sums(y, z, c, n).unwrap();
                if let Some(&last) = sums.last() {
                    prop_assert_eq!(last, s.net_loss(c));
                }
            }
        }

        #[test]
        fn stop_loss_monotone_in_claims(y in proptest::collection::vec(0.0f64..50.0, 1..10), bump in 0.0f64..10.0, i in 0usize..10) {
            let n = y.len();
            let z = vec![1.0; n];
            let p = StopLoss { q1: 0.7, q2: 0.4, c: 1.5, k: 0.5, mu0: 1.0, mu_h: 1.0 };
            let base = stop_net_loss(&y, &z, n, 3.0, p).unwrap();
            let mut y2 = y.clone();
            y2[i % n] += bump;
            prop_assert!(stop_net_loss(&y2, &z, n, 3.0, p).unwrap() >= base);
        }
    }
}
