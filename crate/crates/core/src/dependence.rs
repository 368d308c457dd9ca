//! Dependent sequences with certified orthant-dependence class.
//!
//! Negatively associated sequences come from a Gaussian copula with
//! nonpositive equicorrelation `ρ` inside consecutive blocks of length `m`
//! (independent across blocks). NA implies negative upper and lower orthant
//! dependence, so these plans certify WUOD/WLOD with `M_U = M_L = 1`.
//!
//! The equicorrelated latent block is built in O(m) from the symmetric
//! square root of `Σ = (1-ρ)I + ρ11ᵀ`:
//!
//! ```text
//! W = √(1-ρ)(ε - ε̄1) + √(1+(m-1)ρ) ε̄1,   ε ~ N(0, I_m)
//! ```
//!
//! and mapped to the marginal by `Y = Ḡ⁻¹(Φ̄(W))`, which preserves `G`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heavy_tails::TailModel;
use crate::rng::{interior_unit, BlockedStream};
use crate::stats::{normal_isf, normal_sf};

/// Largest block handled by the equicorrelated generator.
pub const MAX_BLOCK: usize = 64;
/// Minimum joint hits for an orthant grid point to be scored.
pub const MIN_JOINT_HITS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifiedClass {
    Independent,
    NegativelyAssociated,
    Enod,
    /// Independent across pairs, arbitrary within a pair.
    ArbitraryWithinPair,
}

/// Coupling of `(Y_i, Z_i)` inside one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PairCopula {
    Independent,
    Comonotone,
    Countermonotone,
    Gaussian { rho: f64 },
}

impl PairCopula {
    pub fn name(&self) -> &'static str {
        match self {
            PairCopula::Independent => "independent",
            PairCopula::Comonotone => "comonotone",
            PairCopula::Countermonotone => "countermonotone",
            PairCopula::Gaussian { .. } => "gaussian",
        }
    }

    /// Tail probability level of `Z` given that of `Y`.
    #[inline]
    pub fn partner<R: Rng + ?Sized>(&self, w_y: f64, rng: &mut R) -> f64 {
        match *self {
            PairCopula::Independent => interior_unit(rng),
            PairCopula::Comonotone => w_y,
            PairCopula::Countermonotone => 1.0 - w_y,
            PairCopula::Gaussian { rho } => {
                let e1 = normal_isf(w_y);
                let e2: f64 = rng.sample(StandardNormal);
                latent_to_level(rho * e1 + (1.0 - rho * rho).sqrt() * e2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DependenceMode {
    Iid,
    GaussianNa { rho: f64, block: usize },
    PairCopula(PairCopula),
}

/// How a sequence, or a sequence of pairs, is coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanDescriptor", into = "PlanDescriptor")]
pub struct DependencePlan {
    mode: DependenceMode,
    certified: CertifiedClass,
    m_upper: f64,
    m_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeName {
    Iid,
    GaussianNa,
    PairCopula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CopulaName {
    Independent,
    Comonotone,
    Countermonotone,
    Gaussian,
}

/// Plan descriptor: `mode = "iid" | "gaussian_na" | "pair_copula"`, with
/// `rho`, `block` for `gaussian_na` and `copula` (plus `rho` for
/// `gaussian`) for `pair_copula`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDescriptor {
    mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    copula: Option<CopulaName>,
}

impl TryFrom<PlanDescriptor> for DependencePlan {
    type Error = Error;

    fn try_from(d: PlanDescriptor) -> Result<Self> {
        match d.mode {
            ModeName::Iid => Ok(DependencePlan::iid()),
            ModeName::GaussianNa => DependencePlan::gaussian_na(
                d.rho.ok_or_else(|| invalid("gaussian_na plan needs rho"))?,
                d.block.ok_or_else(|| invalid("gaussian_na plan needs block"))?,
            ),
            ModeName::PairCopula => {
                let copula = match d.copula.ok_or_else(|| invalid("pair_copula plan needs copula"))? {
                    CopulaName::Independent => PairCopula::Independent,
                    CopulaName::Comonotone => PairCopula::Comonotone,
                    CopulaName::Countermonotone => PairCopula::Countermonotone,
                    CopulaName::Gaussian => PairCopula::Gaussian {
                        rho: d.rho.ok_or_else(|| invalid("gaussian pair copula needs rho"))?,
                    },
                };
                DependencePlan::pairs(copula)
            }
        }
    }
}

impl From<DependencePlan> for PlanDescriptor {
    fn from(p: DependencePlan) -> Self {
        let none = PlanDescriptor {
            mode: ModeName::Iid,
            rho: None,
            block: None,
            copula: None,
        };
        match p.mode {
            DependenceMode::Iid => none,
            DependenceMode::GaussianNa { rho, block } => PlanDescriptor {
                mode: ModeName::GaussianNa,
                rho: Some(rho),
                block: Some(block),
                copula: None,
            },
            DependenceMode::PairCopula(c) => {
                let (copula, rho) = match c {
                    PairCopula::Independent => (CopulaName::Independent, None),
                    PairCopula::Comonotone => (CopulaName::Comonotone, None),
                    PairCopula::Countermonotone => (CopulaName::Countermonotone, None),
                    PairCopula::Gaussian { rho } => (CopulaName::Gaussian, Some(rho)),
                };
                PlanDescriptor {
                    mode: ModeName::PairCopula,
                    rho,
                    block: None,
                    copula: Some(copula),
                }
            }
        }
    }
}

impl Default for DependencePlan {
    fn default() -> Self {
        Self::iid()
    }
}

impl DependencePlan {
    pub fn iid() -> Self {
        Self {
            mode: DependenceMode::Iid,
            certified: CertifiedClass::Independent,
            m_upper: 1.0,
            m_lower: 1.0,
        }
    }

    /// NA plan; requires `-1/(m-1) < ρ ≤ 0` and `2 ≤ m ≤ 64`.
    pub fn gaussian_na(rho: f64, block: usize) -> Result<Self> {
        if !(2..=MAX_BLOCK).contains(&block) {
            return Err(Error::Construction(format!(
                "block size must lie in [2, {MAX_BLOCK}], got {block}"
            )));
        }
        let floor = -1.0 / (block as f64 - 1.0);
        if !(rho > floor && rho <= 0.0) {
            return Err(Error::Construction(format!(
                "rho must lie in ({floor}, 0] for block size {block}, got {rho}"
            )));
        }
        Ok(Self {
            mode: DependenceMode::GaussianNa { rho, block },
            certified: CertifiedClass::NegativelyAssociated,
            m_upper: 1.0,
            m_lower: 1.0,
        })
    }

    pub fn pairs(copula: PairCopula) -> Result<Self> {
        if let PairCopula::Gaussian { rho } = copula {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::Construction(format!(
                    "pair correlation must lie in [-1, 1], got {rho}"
                )));
            }
        }
        Ok(Self {
            mode: DependenceMode::PairCopula(copula),
            certified: CertifiedClass::ArbitraryWithinPair,
            m_upper: 1.0,
            m_lower: 1.0,
        })
    }

    pub fn mode(&self) -> DependenceMode {
        self.mode
    }

    pub fn certified(&self) -> CertifiedClass {
        self.certified
    }

    /// `(M_U, M_L)`.
    pub fn dominating(&self) -> (f64, f64) {
        (self.m_upper, self.m_lower)
    }

    /// Whether the coordinates of one sequence are i.i.d.
    pub fn is_iid_sequence(&self) -> bool {
        !matches!(self.mode, DependenceMode::GaussianNa { .. })
    }

    pub fn pair_copula(&self) -> Option<PairCopula> {
        match self.mode {
            DependenceMode::PairCopula(c) => Some(c),
            _ => None,
        }
    }

    pub fn orthant_tags(&self) -> OrthantTags {
        OrthantTags {
            upper: Some(self.m_upper),
            lower: Some(self.m_lower),
            negatively_associated: matches!(
                self.certified,
                CertifiedClass::NegativelyAssociated | CertifiedClass::Independent
            ),
        }
    }

    /// Elements produced by one call of [`Self::extend`].
    pub fn group_len(&self) -> usize {
        match self.mode {
            DependenceMode::GaussianNa { block, .. } => block,
            _ => 1,
        }
    }

    /// Appends one group (a full NA block, or a single i.i.d. draw) to `out`.
    #[inline]
    pub fn extend(&self, marginal: &TailModel, stream: &mut BlockedStream, out: &mut Vec<f64>) {
        match self.mode {
            DependenceMode::GaussianNa { rho, block } => {
                let rng = stream.group(block);
                push_na_block(rho, block, marginal, rng, out);
            }
            _ => out.push(marginal.draw(stream.group(1))),
        }
    }

    /// Replaces the contents of `out` with one dependent sequence of length `n`.
    pub fn fill_sequence<R: Rng + ?Sized>(&self, marginal: &TailModel, n: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match self.mode {
            DependenceMode::GaussianNa { rho, block } => {
                while out.len() < n {
                    let k = block.min(n - out.len());
                    push_na_block(rho, k, marginal, rng, out);
                }
            }
            _ => out.extend((0..n).map(|_| marginal.draw(rng))),
        }
    }

    /// `n` coordinates with marginal `marginal`, coupled as certified.
    pub fn gen_sequence<R: Rng + ?Sized>(&self, marginal: &TailModel, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        self.fill_sequence(marginal, n, rng, &mut out);
        out
    }

    /// `n` coordinates in full groups, with coordinate `j` conditioned to
    /// exceed the level-`p` quantile. Inside an NA block the other
    /// coordinates follow the exact Gaussian conditional law
    /// `W_k = W'_k + ρ (w_j − W'_j)`. Returns the number of coordinates
    /// above that quantile, `j` included.
    pub fn fill_forced<R: Rng + ?Sized>(
        &self,
        marginal: &TailModel,
        n: usize,
        j: usize,
        p: f64,
        rng: &mut R,
        out: &mut Vec<f64>,
    ) -> usize {
        assert!(j < n, "forced index {j} outside sequence of length {n}");
        out.clear();
        let forced_level = p * interior_unit(rng);
        let mut exceed = 1;
        let mut push = |i: usize, level: f64, out: &mut Vec<f64>| {
            if i == j {
                out.push(marginal.tail_quantile(forced_level));
            } else {
                if level < p {
                    exceed += 1;
                }
                out.push(marginal.tail_quantile(level));
            }
        };
        match self.mode {
            DependenceMode::GaussianNa { rho, block } => {
                let mut buf = [0.0f64; MAX_BLOCK];
                let mut start = 0;
                while start < n {
                    let w = &mut buf[..block];
                    na_latent(rho, rng, w);
                    if (start..start + block).contains(&j) {
                        let local = j - start;
                        let shift = normal_isf(forced_level) - w[local];
                        for (k, v) in w.iter_mut().enumerate() {
                            if k != local {
                                *v += rho * shift;
                            }
                        }
                    }
                    for (k, &v) in w.iter().enumerate().take(n - start) {
                        push(start + k, latent_to_level(v), out);
                    }
                    start += block;
                }
            }
            _ => {
                for i in 0..n {
                    let level = if i == j { forced_level } else { interior_unit(rng) };
                    push(i, level, out);
                }
            }
        }
        exceed
    }

    /// `n` pairs `(Y_i, Z_i)`, i.i.d. across `i`, coupled within a pair by
    /// the plan's copula. An i.i.d. plan couples nothing.
    pub fn gen_pairs<R: Rng + ?Sized>(
        &self,
        g: &TailModel,
        h: &TailModel,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<(f64, f64)>> {
        let copula = match self.mode {
            DependenceMode::PairCopula(c) => c,
            DependenceMode::Iid => PairCopula::Independent,
            DependenceMode::GaussianNa { .. } => {
                return Err(invalid("pairs need a pair_copula or iid plan"))
            }
        };
        Ok((0..n).map(|_| draw_pair(copula, g, h, rng)).collect())
    }
}

/// One `(Y, Z)` pair under `copula`.
#[inline]
pub fn draw_pair<R: Rng + ?Sized>(copula: PairCopula, g: &TailModel, h: &TailModel, rng: &mut R) -> (f64, f64) {
    let w_y = interior_unit(rng);
    let w_z = copula.partner(w_y, rng);
    (g.tail_quantile(w_y), h.tail_quantile(w_z))
}

#[inline]
fn latent_to_level(w: f64) -> f64 {
    normal_sf(w).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Equicorrelated standard normals in place, via the symmetric square root
/// of the correlation matrix.
fn na_latent<R: Rng + ?Sized>(rho: f64, rng: &mut R, w: &mut [f64]) {
    let k = w.len();
    for e in w.iter_mut() {
        *e = rng.sample(StandardNormal);
    }
    let mean = w.iter().sum::<f64>() / k as f64;
    let spread = (1.0 - rho).sqrt();
    let common = (1.0 + (k as f64 - 1.0) * rho).sqrt() * mean;
    for e in w.iter_mut() {
        *e = spread * (*e - mean) + common;
    }
}

fn push_na_block<R: Rng + ?Sized>(
    rho: f64,
    k: usize,
    marginal: &TailModel,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let mut w = [0.0f64; MAX_BLOCK];
    let w = &mut w[..k];
    na_latent(rho, rng, w);
    out.extend(w.iter().map(|&v| marginal.tail_quantile(latent_to_level(v))));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orthant {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthantPoint {
    pub threshold: f64,
    pub joint: f64,
    pub marginal_product: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub joint_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthantReport {
    pub orthant: Orthant,
    pub m: f64,
    pub points: Vec<OrthantPoint>,
    pub skipped: Vec<String>,
    pub sup_ratio: f64,
    pub pass: bool,
}

/// Empirical check of `P(∩{X_i > x}) ≤ M ∏ P(X_i > x)` at each threshold.
pub fn check_wuod(samples: &[Vec<f64>], thresholds: &[f64], m: f64) -> Result<OrthantReport> {
    check_orthant(samples, thresholds, m, Orthant::Upper)
}

/// Empirical check of `P(∩{X_i ≤ x}) ≤ M ∏ P(X_i ≤ x)` at each threshold.
pub fn check_wlod(samples: &[Vec<f64>], thresholds: &[f64], m: f64) -> Result<OrthantReport> {
    check_orthant(samples, thresholds, m, Orthant::Lower)
}

fn tuple_width(samples: &[Vec<f64>]) -> Result<usize> {
    let n = samples
        .first()
        .map(Vec::len)
        .ok_or_else(|| invalid("no samples"))?;
    if n < 2 || samples.iter().any(|r| r.len() != n) {
        return Err(invalid("samples must be tuples of a common length >= 2"));
    }
    Ok(n)
}

fn check_orthant(samples: &[Vec<f64>], thresholds: &[f64], m: f64, orthant: Orthant) -> Result<OrthantReport> {
    let width = tuple_width(samples)?;
    let total = samples.len() as f64;
    let event = |v: f64, x: f64| match orthant {
        Orthant::Upper => v > x,
        Orthant::Lower => v <= x,
    };
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &x in thresholds {
        let mut joint_hits = 0u64;
        let mut marginal_hits = vec![0u64; width];
        for row in samples {
            let mut all = true;
            for (i, &v) in row.iter().enumerate() {
                if event(v, x) {
                    marginal_hits[i] += 1;
                } else {
                    all = false;
                }
            }
            joint_hits += all as u64;
        }
        if joint_hits < MIN_JOINT_HITS {
            skipped.push(format!("threshold {x}: {joint_hits} joint hits (< {MIN_JOINT_HITS})"));
            continue;
        }
        let joint = joint_hits as f64 / total;
        let probs: Vec<f64> = marginal_hits.iter().map(|&h| h as f64 / total).collect();
        let product: f64 = probs.iter().product();
        let ratio = joint / product;
        let rel_var = (1.0 - joint) / (total * joint)
            + probs.iter().map(|p| (1.0 - p) / (total * p)).sum::<f64>();
        points.push(OrthantPoint {
            threshold: x,
            joint,
            marginal_product: product,
            ratio,
            stderr: ratio * rel_var.sqrt(),
            joint_hits,
        });
    }
    let sup_ratio = points.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    let pass = !points.is_empty() && points.iter().all(|p| p.ratio <= m + 3.0 * p.stderr);
    if points.is_empty() {
        skipped.push("no threshold retained enough joint hits".to_string());
    }
    Ok(OrthantReport {
        orthant,
        m,
        points,
        skipped,
        sup_ratio,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMomentReport {
    pub mean_product: f64,
    pub stderr_product: f64,
    pub product_of_means: f64,
    /// `M ∏ Ê X_i − Ê ∏ X_i`; negative when the inequality is violated.
    pub margin: f64,
    /// Combined standard error used in the verdict.
    pub stderr: f64,
    pub holds: bool,
    /// Set when one product term dominates the sample, in which case the
    /// tolerance is doubled.
    pub heavy_tail: bool,
}

/// Share of the total product sum above which a single sample counts as
/// dominating.
const HEAVY_TERM_SHARE: f64 = 0.05;

/// Empirical check of `E ∏ X_i ≤ M ∏ E X_i` for nonnegative tuples.
pub fn product_moment_check(samples: &[Vec<f64>], m: f64) -> Result<ProductMomentReport> {
    let width = tuple_width(samples)?;
    if samples.iter().flatten().any(|&v| !(v >= 0.0)) {
        return Err(invalid("product moment check needs nonnegative coordinates"));
    }
    let n = samples.len() as f64;
    let products: Vec<f64> = samples.iter().map(|r| r.iter().product()).collect();
    let (mean_p, se_p) = mean_and_stderr(&products);
    let mut means = Vec::with_capacity(width);
    let mut rel_var = 0.0;
    for i in 0..width {
        let col: Vec<f64> = samples.iter().map(|r| r[i]).collect();
        let (mu, se) = mean_and_stderr(&col);
        means.push(mu);
        if mu > 0.0 {
            rel_var += (se / mu).powi(2);
        }
    }
    let product_of_means: f64 = means.iter().product();
    let se_bound = m * product_of_means * rel_var.sqrt();
    let max_term = products.iter().cloned().fold(0.0, f64::max);
    let heavy_tail = mean_p > 0.0 && max_term > HEAVY_TERM_SHARE * mean_p * n;
    let widen = if heavy_tail { 2.0 } else { 1.0 };
    let stderr = widen * (se_p * se_p + se_bound * se_bound).sqrt();
    let margin = m * product_of_means - mean_p;
    Ok(ProductMomentReport {
        mean_product: mean_p,
        stderr_product: se_p,
        product_of_means,
        margin,
        stderr,
        holds: margin >= -3.0 * stderr,
        heavy_tail,
    })
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Orthant-dependence tags carried by a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthantTags {
    /// WUOD with this dominating coefficient.
    pub upper: Option<f64>,
    /// WLOD with this dominating coefficient.
    pub lower: Option<f64>,
    pub negatively_associated: bool,
}

/// Direction shared by the coordinatewise maps `f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Identity,
    Nondecreasing,
    Nonincreasing,
}

/// Tags of `f_i(X_i)` given tags of `X_i`: nondecreasing maps keep them,
/// nonincreasing maps swap the upper and lower orthant tags. NA survives
/// either direction when all maps share it.
pub fn monotone_transform(tags: OrthantTags, direction: Monotone) -> OrthantTags {
    match direction {
        Monotone::Identity | Monotone::Nondecreasing => tags,
        Monotone::Nonincreasing => OrthantTags {
            upper: tags.lower,
            lower: tags.upper,
            negatively_associated: tags.negatively_associated,
        },
    }
}

/// `count` independent rows, each an `width`-tuple drawn as one sequence
/// under `plan`; row `r` uses stream `(seed, tag::DEPENDENCE, r)`.
pub fn sample_tuples(plan: &DependencePlan, marginal: &TailModel, width: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|r| {
            let mut rng = crate::rng::stream(seed, crate::rng::tag::DEPENDENCE, r as u64);
            plan.gen_sequence(marginal, width, &mut rng)
        })
        .collect()
}
