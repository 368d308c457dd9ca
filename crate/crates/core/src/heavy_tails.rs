//! Heavy-tailed claim and inter-arrival laws.
//!
//! A [`TailModel`] is an immutable law on `[0, ∞)` described by its tail
//! function `Ḡ(x) = P(Y > x)`. Besides evaluation and inverse-transform
//! sampling it offers the tail diagnostics used by the asymptotic formulas:
//!
//! - windowed proxies for `Ḡ_*(y) = liminf Ḡ(xy)/Ḡ(x)` and
//!   `Ḡ^*(y) = limsup Ḡ(xy)/Ḡ(x)`, and `L_G = lim_{y↓1} Ḡ_*(y)`;
//! - the Matuszewska indices `J⁻ ≤ I ≤ J⁺` and the moment index `I`;
//! - the integrated tail `Ḡ_I(x) = μ⁻¹ ∫_x^∞ Ḡ(y) dy`.
//!
//! Limits in `x` are approximated over the geometric window
//! `[10², x_max]`. Slowly varying factors (e.g. `ln⁻² x`) make raw window
//! extrema converge only like `1/ln x`, so the ratios are first detrended
//! linearly in `1/ln x` and the extrema are taken over the detrended values.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{self, Tolerance};
use crate::rng::open_unit;

/// Lower edge of the diagnostic window.
pub const WINDOW_START: f64 = 1e2;
/// Default upper edge of the diagnostic window.
pub const DEFAULT_X_MAX: f64 = 1e8;
const POINTS_PER_DECADE: usize = 10;
/// `y` at which the Matuszewska indices are read off.
const MATUSZEWSKA_Y: f64 = 10.0;
/// Estimates of `J±` above this are reported as divergent (model not in D).
const MATUSZEWSKA_CAP: f64 = 100.0;
/// `y` values used to extrapolate `Ḡ_*(y)` down to `y = 1`.
const LF_POINTS: [f64; 3] = [1.01, 1.05, 1.1];
/// Tolerance on `L_G = 1` when declaring class C from diagnostics.
pub const CLASS_C_TOLERANCE: f64 = 0.01;
/// Resolution of the numeric index estimates; orderings between them are
/// asserted up to this slack.
pub const INDEX_RESOLUTION: f64 = 0.02;
/// Split point of the tail quadrature: the quantile where `Ḡ = 10⁻¹²`.
const QUAD_SPLIT_TAIL: f64 = 1e-12;
/// Final ratio below which one tail counts as negligible against another.
pub const DOMINANCE_THRESHOLD: f64 = 1e-3;

/// Structured-text descriptor of a law.
///
/// ```toml
/// family = "pareto"
/// alpha = 2.5
/// scale = 1.0
/// ```
///
/// Keys per family: `pareto {alpha, scale}`, `log_pareto {}`,
/// `weibull {shape, scale}`, `exponential {mean}`, `degenerate {value}`,
/// `user_table {x, tail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `Ḡ(x) = (1 + x/scale)^{-alpha}`.
    Pareto { alpha: f64, scale: f64 },
    /// `Ḡ(x) = (1 + x)^{-1} ln^{-2}(e + x)`: regularly varying with index 1,
    /// finite mean, every moment of order above 1 infinite.
    LogPareto,
    /// `Ḡ(x) = exp(-(x/scale)^shape)`.
    Weibull { shape: f64, scale: f64 },
    Exponential { mean: f64 },
    /// Point mass at `value`.
    Degenerate { value: f64 },
    /// Piecewise-linear tail through `(x[k], tail[k])`; must start at
    /// `(0, 1)` and reach tail 0 at the last abscissa.
    UserTable { x: Vec<f64>, tail: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Pareto { .. } => "pareto",
            Family::LogPareto => "log_pareto",
            Family::Weibull { .. } => "weibull",
            Family::Exponential { .. } => "exponential",
            Family::Degenerate { .. } => "degenerate",
            Family::UserTable { .. } => "user_table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    /// `R_α`
    RegularlyVarying,
    /// `ERV`
    ExtendedRegular,
    /// `C`
    Consistent,
    /// `D`
    Dominated,
    /// `L`
    LongTailed,
    /// `S`
    Subexponential,
}

/// Distribution-class membership.
///
/// Inclusion chain: `R_α ⊂ ERV ⊂ C ⊂ L ∩ D ⊂ S ⊂ L`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassTags {
    /// Index `α` when the tail is regularly varying.
    pub regular_variation: Option<f64>,
    pub extended_regular: bool,
    pub consistent: bool,
    pub dominated: bool,
    pub long_tailed: bool,
    pub subexponential: bool,
}

impl ClassTags {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn regularly_varying(alpha: f64) -> Self {
        Self {
            regular_variation: Some(alpha),
            ..Self::consistent_variation()
        }
    }

    pub fn consistent_variation() -> Self {
        Self {
            regular_variation: None,
            extended_regular: false,
            consistent: true,
            dominated: true,
            long_tailed: true,
            subexponential: true,
        }
    }

    pub fn subexponential_only() -> Self {
        Self {
            subexponential: true,
            long_tailed: true,
            ..Self::default()
        }
    }

    pub fn contains(&self, tag: ClassTag) -> bool {
        match tag {
            ClassTag::RegularlyVarying => self.regular_variation.is_some(),
            ClassTag::ExtendedRegular => {
                self.extended_regular || self.regular_variation.is_some()
            }
            ClassTag::Consistent => self.consistent,
            ClassTag::Dominated => self.dominated,
            ClassTag::LongTailed => self.long_tailed,
            ClassTag::Subexponential => self.subexponential,
        }
    }

    /// Whether every tag carries all of its superclasses.
    pub fn respects_inclusions(&self) -> bool {
        let rv = self.regular_variation.is_some();
        let erv = self.extended_regular || rv;
        (!erv || self.consistent)
            && (!self.consistent || (self.long_tailed && self.dominated))
            && (!(self.long_tailed && self.dominated) || self.subexponential)
            && (!self.subexponential || self.long_tailed)
    }
}

/// Windowed estimates of the tail functionals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFunctionalReport {
    pub y_grid: Vec<f64>,
    /// `Ḡ_*(y)` proxies.
    pub lower_ratio: Vec<f64>,
    /// `Ḡ^*(y)` proxies.
    pub upper_ratio: Vec<f64>,
    pub l_f: f64,
    pub j_minus: f64,
    pub j_plus: f64,
    pub i_f: f64,
    /// Window actually used, after any shrinking.
    pub window: (f64, f64),
    pub warnings: Vec<String>,
}

impl TailFunctionalReport {
    /// `J⁻ ≤ I ≤ J⁺` up to [`INDEX_RESOLUTION`].
    pub fn index_ordering_holds(&self) -> bool {
        self.j_minus <= self.i_f + INDEX_RESOLUTION && self.i_f <= self.j_plus + INDEX_RESOLUTION
    }

    pub fn is_consistently_varying(&self) -> bool {
        self.l_f >= 1.0 - CLASS_C_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatuszewskaIndices {
    pub lower: f64,
    pub upper: f64,
    /// Set when the estimates blow up, i.e. the law is not in class D.
    pub diverging: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub x_grid: Vec<f64>,
    /// `small.tail(x) / big.tail(x)` along the grid.
    pub ratios: Vec<f64>,
    pub dominated: bool,
}

/// An analytic or tabulated law on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct TailModel {
    family: Family,
    mean: f64,
    tags: ClassTags,
}

impl TryFrom<Family> for TailModel {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        TailModel::from_family(family)
    }
}

impl From<TailModel> for Family {
    fn from(model: TailModel) -> Self {
        model.family
    }
}

impl fmt::Display for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Pareto { alpha, scale } => write!(f, "Pareto(alpha={alpha}, scale={scale})"),
            Family::LogPareto => write!(f, "LogPareto"),
            Family::Weibull { shape, scale } => write!(f, "Weibull(shape={shape}, scale={scale})"),
            Family::Exponential { mean } => write!(f, "Exp(mean={mean})"),
            Family::Degenerate { value } => write!(f, "Degenerate({value})"),
            Family::UserTable { x, .. } => write!(f, "UserTable({} points)", x.len()),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TailModel {
    pub fn from_family(family: Family) -> Result<Self> {
        let (mean, tags) = match &family {
            Family::Pareto { alpha, scale } => {
                positive("scale", *scale)?;
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return Err(invalid(format!(
                        "Pareto alpha must exceed 1 (finite mean), got {alpha}"
                    )));
                }
                (scale / (alpha - 1.0), ClassTags::regularly_varying(*alpha))
            }
            Family::LogPareto => (f64::NAN, ClassTags::regularly_varying(1.0)),
            Family::Weibull { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)?;
                let mean = scale * statrs::function::gamma::gamma(1.0 + 1.0 / shape);
                let tags = if *shape < 1.0 {
                    ClassTags::subexponential_only()
                } else {
                    ClassTags::none()
                };
                (mean, tags)
            }
            Family::Exponential { mean } => {
                positive("mean", *mean)?;
                (*mean, ClassTags::none())
            }
            Family::Degenerate { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(invalid(format!("degenerate value must be >= 0, got {value}")));
                }
                (*value, ClassTags::none())
            }
            Family::UserTable { x, tail } => {
                validate_table(x, tail)?;
                let mean = x
                    .windows(2)
                    .zip(tail.windows(2))
                    .map(|(xs, ts)| 0.5 * (ts[0] + ts[1]) * (xs[1] - xs[0]))
                    .sum();
                (mean, ClassTags::none())
            }
        };
        let mut model = TailModel { family, mean, tags };
        if model.mean.is_nan() {
            model.mean = model.tail_integral_quadrature(0.0);
        }
        if let Family::UserTable { .. } = model.family {
            model.tags = model.diagnosed_tags();
        }
        Ok(model)
    }

    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        Self::from_family(Family::Pareto { alpha, scale })
    }

    /// Pareto law with index `alpha` rescaled to the given mean.
    pub fn pareto_with_mean(alpha: f64, mean: f64) -> Result<Self> {
        Self::pareto(alpha, mean * (alpha - 1.0))
    }

    pub fn log_pareto() -> Self {
        Self::from_family(Family::LogPareto).expect("parameter-free family")
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::from_family(Family::Weibull { shape, scale })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::from_family(Family::Exponential { mean })
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        Self::from_family(Family::Degenerate { value })
    }

    pub fn user_table(x: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        Self::from_family(Family::UserTable { x, tail })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tags(&self) -> &ClassTags {
        &self.tags
    }

    pub fn has_tag(&self, tag: ClassTag) -> bool {
        self.tags.contains(tag)
    }

    /// `Ḡ(x)`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("tail evaluated at x = {x}; need x >= 0")));
        }
        Ok(self.sf(x))
    }

    /// Infallible `Ḡ(x)`; `Ḡ(x) = 1` for `x < 0`.
    #[inline]
    pub fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match &self.family {
            Family::Pareto { alpha, scale } => (-alpha * (x / scale).ln_1p()).exp(),
            Family::LogPareto => {
                let l = (std::f64::consts::E + x).ln();
                1.0 / ((1.0 + x) * l * l)
            }
            Family::Weibull { shape, scale } => (-(x / scale).powf(*shape)).exp(),
            Family::Exponential { mean } => (-x / mean).exp(),
            Family::Degenerate { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            Family::UserTable { x: xs, tail } => table_tail(xs, tail, x),
        }
    }

    /// `ln Ḡ(x)`, finite wherever the tail is positive even if `Ḡ(x)`
    /// underflows.
    pub fn log_tail(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Pareto { alpha, scale } => -alpha * (x / scale).ln_1p(),
            Family::LogPareto => -x.ln_1p() - 2.0 * (std::f64::consts::E + x).ln().ln(),
            Family::Weibull { shape, scale } => -(x / scale).powf(*shape),
            Family::Exponential { mean } => -x / mean,
            _ => self.sf(x).ln(),
        }
    }

    /// `ln Ḡ(e^s)`, stable for very large `s`.
    pub fn log_tail_at_log(&self, s: f64) -> f64 {
        match &self.family {
            Family::Pareto { alpha, scale } => {
                let ls = scale.ln();
                if s > ls {
                    -alpha * (s - ls + (ls - s).exp().ln_1p())
                } else {
                    -alpha * (s - ls).exp().ln_1p()
                }
            }
            Family::LogPareto => {
                if s > 30.0 {
                    let l1p = s + (-s).exp().ln_1p();
                    let le = s + (1.0 - s).exp().ln_1p();
                    -l1p - 2.0 * le.ln()
                } else {
                    self.log_tail(s.exp())
                }
            }
            Family::Weibull { shape, scale } => -(shape * (s - scale.ln())).exp(),
            Family::Exponential { mean } => -(s - mean.ln()).exp(),
            _ => {
                let x = s.exp();
                if x.is_finite() {
                    self.log_tail(x)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Smallest `x ≥ 0` with `Ḡ(x) ≤ w`, for `w ∈ (0, 1]`.
    pub fn tail_quantile(&self, w: f64) -> f64 {
        debug_assert!(w > 0.0 && w <= 1.0, "tail probability {w} outside (0, 1]");
        match &self.family {
            Family::Pareto { alpha, scale } => scale * (-w.ln() / alpha).exp_m1(),
            Family::LogPareto => log_pareto_quantile(w),
            Family::Weibull { shape, scale } => scale * (-w.ln()).powf(1.0 / shape),
            Family::Exponential { mean } => -mean * w.ln(),
            Family::Degenerate { value } => *value,
            Family::UserTable { x, tail } => table_quantile(x, tail, w),
        }
    }

    /// One draw by inverse transform.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.tail_quantile(open_unit(rng))
    }

    /// `n` i.i.d. draws; deterministic given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// Draw conditioned on `Y ≤ u`, given `p = Ḡ(u) < 1`.
    #[inline]
    pub fn draw_below<R: Rng + ?Sized>(&self, rng: &mut R, p: f64) -> f64 {
        let w = p + (1.0 - p) * open_unit(rng);
        self.tail_quantile(w.min(1.0))
    }

    /// Draw conditioned on `Y > u`, given `p = Ḡ(u) > 0`.
    #[inline]
    pub fn draw_above<R: Rng + ?Sized>(&self, rng: &mut R, p: f64) -> f64 {
        self.tail_quantile(p * open_unit(rng))
    }

    /// `∫_x^∞ Ḡ(y) dy`.
    pub fn tail_integral(&self, x: f64) -> f64 {
        match &self.family {
            Family::Degenerate { value } => (value - x.max(0.0)).max(0.0),
            Family::UserTable { x: xs, tail } => table_tail_integral(xs, tail, x.max(0.0)),
            _ => self.tail_integral_quadrature(x.max(0.0)),
        }
    }

    fn tail_integral_quadrature(&self, x: f64) -> f64 {
        let tol = Tolerance::default();
        let split = self.tail_quantile(QUAD_SPLIT_TAIL);
        let mut total = 0.0;
        let lower = if x < 1.0 {
            total += quad::integrate(|y| self.sf(y), x, 1.0, tol).value;
            1.0
        } else {
            x
        };
        total += quad::integrate_log_upper(|s| self.log_tail_at_log(s), lower, Some(split), tol)
            .value;
        total
    }

    /// `Ḡ_I(x) = μ⁻¹ ∫_x^∞ Ḡ(y) dy`, the tail of the integrated-tail law.
    pub fn integral_tail(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("integral tail at x = {x}; need x >= 0")));
        }
        if !(self.mean.is_finite() && self.mean > 0.0) {
            return Err(Error::Domain(format!(
                "integrated tail needs a finite positive mean, got {}",
                self.mean
            )));
        }
        Ok((self.tail_integral(x) / self.mean).min(1.0))
    }

    /// `E(Y − d)⁺ = ∫_d^∞ Ḡ(y) dy`.
    pub fn excess_mean(&self, retention: f64) -> f64 {
        self.tail_integral(retention)
    }

    /// `sup{s : E Y^s < ∞}`; `+∞` for laws with all moments finite.
    pub fn moment_index(&self) -> f64 {
        match &self.family {
            Family::Pareto { alpha, .. } => *alpha,
            Family::LogPareto => 1.0,
            _ => f64::INFINITY,
        }
    }

    fn window_grid(x_max: f64) -> Vec<f64> {
        let decades = (x_max / WINDOW_START).log10().max(0.0);
        let n = ((decades * POINTS_PER_DECADE as f64).round() as usize).max(2);
        (0..=n)
            .map(|i| WINDOW_START * (x_max / WINDOW_START).powf(i as f64 / n as f64))
            .collect()
    }

    /// Detrended windowed extrema of `Ḡ(xy)/Ḡ(x)`; returns
    /// `(lower, upper, points_used, points_dropped)`.
    fn ratio_extrema(&self, y: f64, x_max: f64) -> (f64, f64, usize, usize) {
        let grid = Self::window_grid(x_max);
        let mid = (WINDOW_START * x_max).sqrt();
        let mut s = Vec::new();
        let mut r = Vec::new();
        let mut dropped = 0;
        for &x in grid.iter().filter(|&&x| x >= mid * (1.0 - 1e-12)) {
            let lx = self.log_tail(x);
            let lxy = self.log_tail(x * y);
            if !lx.is_finite() || !lxy.is_finite() {
                dropped += 1;
                continue;
            }
            s.push(1.0 / x.ln());
            r.push((lxy - lx).exp());
        }
        if r.is_empty() {
            return (0.0, 0.0, 0, dropped);
        }
        let slope = if r.len() >= 3 { ls_slope(&s, &r) } else { 0.0 };
        let adjusted = s.iter().zip(&r).map(|(si, ri)| ri - slope * si);
        let (lo, hi) = adjusted.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        (lo.max(0.0), hi.max(lo.max(0.0)), r.len(), dropped)
    }

    /// Numeric proxy for `Ḡ_*(y)` over the default window.
    pub fn lower_ratio(&self, y: f64) -> f64 {
        self.ratio_extrema(y, DEFAULT_X_MAX).0
    }

    /// Numeric proxy for `Ḡ^*(y)` over the default window.
    pub fn upper_ratio(&self, y: f64) -> f64 {
        self.ratio_extrema(y, DEFAULT_X_MAX).1
    }

    /// `Ḡ_*(y)`: exact `y^{-α}` for regularly varying laws, windowed proxy
    /// otherwise.
    pub fn lower_limit_ratio(&self, y: f64) -> f64 {
        match self.tags.regular_variation {
            Some(alpha) => y.powf(-alpha),
            None => self.lower_ratio(y),
        }
    }

    pub fn matuszewska(&self) -> MatuszewskaIndices {
        let (lo, hi, used, _) = self.ratio_extrema(MATUSZEWSKA_Y, DEFAULT_X_MAX);
        let ln_y = MATUSZEWSKA_Y.ln();
        let upper = if used == 0 { f64::INFINITY } else { -lo.ln() / ln_y };
        let lower = if used == 0 { f64::INFINITY } else { -hi.ln() / ln_y };
        let diverging = !(upper.is_finite() && upper <= MATUSZEWSKA_CAP);
        MatuszewskaIndices {
            lower,
            upper,
            diverging,
        }
    }

    /// `L_G`, by linear extrapolation of `Ḡ_*(y)` from `y ∈ {1.01, 1.05, 1.1}`
    /// to `y = 1`.
    pub fn consistency_limit(&self) -> f64 {
        let d: Vec<f64> = LF_POINTS.iter().map(|y| y - 1.0).collect();
        let v: Vec<f64> = LF_POINTS.iter().map(|&y| self.lower_ratio(y)).collect();
        let slope = ls_slope(&d, &v);
        let intercept = mean(&v) - slope * mean(&d);
        intercept.clamp(0.0, 1.0)
    }

    /// Full tail-functional report over `y_grid` (all `y > 1`) and the
    /// window `[10², x_max]`.
    pub fn limit_ratios(&self, y_grid: &[f64], x_max: f64) -> Result<TailFunctionalReport> {
        if let Some(bad) = y_grid.iter().find(|&&y| !(y > 1.0 && y.is_finite())) {
            return Err(invalid(format!("ratio grid needs y > 1, got {bad}")));
        }
        if !(x_max > WINDOW_START * 10.0) {
            return Err(invalid(format!("x_max = {x_max} leaves no window above 1e2")));
        }
        let mut warnings = Vec::new();
        let mut lower = Vec::with_capacity(y_grid.len());
        let mut upper = Vec::with_capacity(y_grid.len());
        let mut window_hi = x_max;
        for &y in y_grid {
            let (lo, hi, used, dropped) = self.ratio_extrema(y, x_max);
            if dropped > 0 {
                warnings.push(format!(
                    "tail vanishes near x*y for y = {y}: window shrunk by {dropped} points"
                ));
                let grid = Self::window_grid(x_max);
                if let Some(&last) = grid.iter().rev().find(|&&x| self.sf(x * y) > 0.0) {
                    window_hi = window_hi.min(last);
                }
            }
            if used == 0 {
                warnings.push(format!("no usable window points for y = {y}"));
            }
            lower.push(lo);
            upper.push(hi);
        }
        let m = self.matuszewska();
        if m.diverging {
            warnings.push("Matuszewska estimates diverge: law not in class D".to_string());
        }
        Ok(TailFunctionalReport {
            y_grid: y_grid.to_vec(),
            lower_ratio: lower,
            upper_ratio: upper,
            l_f: self.consistency_limit(),
            j_minus: m.lower,
            j_plus: m.upper,
            i_f: self.moment_index(),
            window: (WINDOW_START, window_hi),
            warnings,
        })
    }

    /// Class tags implied by the numeric diagnostics alone.
    pub fn diagnosed_tags(&self) -> ClassTags {
        let dominated = [2.0, 4.0, 8.0].iter().all(|&y| self.lower_ratio(y) > 0.0);
        let consistent = dominated && self.consistency_limit() >= 1.0 - CLASS_C_TOLERANCE;
        if consistent {
            ClassTags::consistent_variation()
        } else {
            ClassTags::none()
        }
    }

    /// `x^p Ḡ(x)` along `x_grid`: tends to 0 for `p < J⁻` and to ∞ for `p > J⁺`.
    pub fn power_weighted_tail(&self, p: f64, x_grid: &[f64]) -> Vec<f64> {
        x_grid
            .iter()
            .map(|&x| (p * x.ln() + self.log_tail(x)).exp())
            .collect()
    }
}

/// Whether `small` has a negligible tail against `big` along `x_grid`
/// (`small.tail = o(big.tail)` as far as the grid can tell).
pub fn tail_dominance(small: &TailModel, big: &TailModel, x_grid: &[f64]) -> DominanceReport {
    let ratios: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let ls = small.log_tail(x);
            let lb = big.log_tail(x);
            if ls == f64::NEG_INFINITY {
                0.0
            } else {
                (ls - lb).exp()
            }
        })
        .collect();
    let tail_half = &ratios[ratios.len() / 2..];
    let decreasing = tail_half.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let dominated = ratios
        .last()
        .map(|&r| r < DOMINANCE_THRESHOLD)
        .unwrap_or(false)
        && decreasing;
    DominanceReport {
        x_grid: x_grid.to_vec(),
        ratios,
        dominated,
    }
}

/// Geometric grid with `n` points from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Default grid for dominance checks.
pub fn dominance_grid() -> Vec<f64> {
    geometric_grid(1.0, 1e6, 25)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn log_pareto_quantile(w: f64) -> f64 {
    if w >= 1.0 {
        return 0.0;
    }
    // Solve u + 2 ln ln(e + e^u - 1) = -ln w for u = ln(1 + x).
    let target = -w.ln();
    let h = |u: f64| {
        let x = u.exp_m1();
        u + 2.0 * (std::f64::consts::E + x).ln().ln() - target
    };
    let (mut lo, mut hi) = (0.0_f64, target);
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let hv = h(u);
        if hv.abs() < 1e-14 * target.max(1.0) {
            break;
        }
        if hv > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let ex = u.exp();
        let le = (std::f64::consts::E + ex - 1.0).ln();
        let dh = 1.0 + 2.0 * ex / ((std::f64::consts::E + ex - 1.0) * le);
        let newton = u - hv / dh;
        u = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    u.exp_m1()
}

fn validate_table(x: &[f64], tail: &[f64]) -> Result<()> {
    if x.len() != tail.len() || x.len() < 2 {
        return Err(invalid("tail table needs matching x and tail columns of length >= 2"));
    }
    if x[0] != 0.0 || tail[0] != 1.0 {
        return Err(invalid("tail table must start at (0, 1)"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(invalid("tail table abscissae must be finite and strictly increasing"));
    }
    if tail.windows(2).any(|w| w[1] > w[0]) || tail.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("tail table values must be nonincreasing within [0, 1]"));
    }
    if *tail.last().expect("nonempty") != 0.0 {
        return Err(invalid(
            "tail table must reach 0 at its last abscissa (compact support)",
        ));
    }
    Ok(())
}

fn table_tail(xs: &[f64], tail: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x >= xs[last] {
        return 0.0;
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let f = (x - xs[i]) / (xs[i + 1] - xs[i]);
    tail[i] + f * (tail[i + 1] - tail[i])
}

fn table_quantile(xs: &[f64], tail: &[f64], w: f64) -> f64 {
    // first index whose tail value is <= w
    let j = tail.partition_point(|&t| t > w);
    if j == 0 {
        return 0.0;
    }
    let (t0, t1) = (tail[j - 1], tail[j]);
    let f = if t0 == t1 { 0.0 } else { (t0 - w) / (t0 - t1) };
    xs[j - 1] + f * (xs[j] - xs[j - 1])
}

fn table_tail_integral(xs: &[f64], tail: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..xs.len() - 1 {
        let (a, b) = (xs[k], xs[k + 1]);
        if b <= x {
            continue;
        }
        let a2 = a.max(x);
        let ta = table_tail(xs, tail, a2);
        total += 0.5 * (ta + tail[k + 1]) * (b - a2);
    }
    total
}
