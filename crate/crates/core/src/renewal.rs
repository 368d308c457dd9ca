//! Claim-arrival counting process and its renewal-type limit checks.
//!
//! Arrival paths extend lazily: inter-arrival groups are appended from a
//! [`BlockedStream`] until the horizon is covered, so a path is a pure
//! function of `(seed, path index)` whatever horizon is asked for first.

use serde::Serialize;

use crate::dependence::DependencePlan;
use crate::error::{invalid, Result};
use crate::estimators::SimEstimate;
use crate::heavy_tails::TailModel;
use crate::rng::{pairwise_sum, tag, BlockedStream};
use crate::stats::{map_chunks, Moments};

/// Band around 1 used for the almost-sure limit `N(t)μ_H/t → 1`.
pub const SLLN_BAND: f64 = 0.05;

/// One realization of `Z_1, Z_2, …` and `S^H_n = Z_1 + … + Z_n`.
#[derive(Debug, Clone)]
pub struct ArrivalPath<'a> {
    h: &'a TailModel,
    plan: DependencePlan,
    stream: BlockedStream,
    inter_arrivals: Vec<f64>,
    cum_times: Vec<f64>,
}

impl<'a> ArrivalPath<'a> {
    /// Path `index` of the arrival family seeded by `seed`.
    pub fn new(h: &'a TailModel, plan: DependencePlan, seed: u64, index: u64) -> Result<Self> {
        if !(h.mean() > 0.0) {
            return Err(invalid("inter-arrival law must have a positive mean"));
        }
        Ok(Self {
            h,
            plan,
            stream: BlockedStream::new(seed, tag::ARRIVALS, index),
            inter_arrivals: Vec::new(),
            cum_times: Vec::new(),
        })
    }

    fn grow(&mut self) {
        let start = self.inter_arrivals.len();
        self.plan.extend(self.h, &mut self.stream, &mut self.inter_arrivals);
        let mut acc = self.cum_times.last().copied().unwrap_or(0.0);
        for &z in &self.inter_arrivals[start..] {
            acc += z;
            self.cum_times.push(acc);
        }
    }

    /// Generates arrivals until some `S^H_n > t`.
    pub fn cover(&mut self, t: f64) {
        while self.cum_times.last().is_none_or(|&s| s <= t) {
            self.grow();
        }
    }

    /// Generates at least `n` arrivals.
    pub fn ensure_len(&mut self, n: usize) {
        while self.inter_arrivals.len() < n {
            self.grow();
        }
    }

    /// `N(t) = max{n : S^H_n ≤ t}`.
    pub fn count(&mut self, t: f64) -> usize {
        self.cover(t);
        self.cum_times.partition_point(|&s| s <= t)
    }

    /// `S^H_n`, with `S^H_0 = 0`.
    pub fn cum_time(&mut self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.ensure_len(n);
        self.cum_times[n - 1]
    }

    pub fn inter_arrivals(&self) -> &[f64] {
        &self.inter_arrivals
    }

    pub fn cum_times(&self) -> &[f64] {
        &self.cum_times
    }
}

/// Path-by-path values of `N(t)` for `paths` arrival paths.
fn counts_at(h: &TailModel, plan: DependencePlan, t_grid: &[f64], paths: u64, seed: u64) -> Result<Vec<Vec<Vec<usize>>>> {
    ArrivalPath::new(h, plan, seed, 0)?;
    Ok(map_chunks(paths, |lo, hi| {
        (lo..hi)
            .map(|p| {
                let mut path = ArrivalPath::new(h, plan, seed, p).expect("validated above");
                t_grid.iter().map(|&t| path.count(t)).collect()
            })
            .collect()
    }))
}

/// `Ê N(t)` over `paths` paths.
pub fn mean_count(h: &TailModel, plan: DependencePlan, t: f64, paths: u64, seed: u64) -> Result<f64> {
    let chunks = counts_at(h, plan, &[t], paths, seed)?;
    let moments = fold_moments(&chunks, |n| n[0] as f64);
    Ok(moments.mean())
}

fn fold_moments(chunks: &[Vec<Vec<usize>>], f: impl Fn(&[usize]) -> f64) -> Moments {
    let parts: Vec<Moments> = chunks
        .iter()
        .map(|c| {
            let mut m = Moments::default();
            for counts in c {
                m.push(f(counts));
            }
            m
        })
        .collect();
    Moments::merge_ordered(&parts)
}

/// Estimate of `E N^k(t) (t/μ_H)^{-k}`, which tends to 1.
pub fn renewal_moments(
    h: &TailModel,
    plan: DependencePlan,
    t: f64,
    k: u32,
    paths: u64,
    seed: u64,
) -> Result<SimEstimate> {
    if !(1..=3).contains(&k) {
        return Err(invalid(format!("moment order must be 1, 2 or 3, got {k}")));
    }
    if !(t > 0.0) {
        return Err(invalid("renewal moments need t > 0"));
    }
    let chunks = counts_at(h, plan, &[t], paths, seed)?;
    let raw = fold_moments(&chunks, |n| (n[0] as f64).powi(k as i32));
    let scale = (h.mean() / t).powi(k as i32);
    Ok(SimEstimate::from_mean(raw.mean() * scale, raw.stderr() * scale, &raw, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SllnReport {
    pub t_grid: Vec<f64>,
    /// Mean of `N(t)μ_H/t` across paths.
    pub mean_trace: Vec<f64>,
    /// Fraction of paths with `|N(t)μ_H/t − 1| ≤ band`.
    pub fraction_in_band: Vec<f64>,
    pub band: f64,
    pub paths: u64,
}

/// `N(t)μ_H/t` along `t_grid` for every path, summarized as the mean and
/// the share of paths inside the band.
pub fn slln_check(h: &TailModel, plan: DependencePlan, t_grid: &[f64], paths: u64, seed: u64) -> Result<SllnReport> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("SLLN grid needs t > 0"));
    }
    let chunks = counts_at(h, plan, t_grid, paths, seed)?;
    let mu = h.mean();
    let mut mean_trace = Vec::new();
    let mut fraction_in_band = Vec::new();
    for (j, &t) in t_grid.iter().enumerate() {
        let m = fold_moments(&chunks, |n| n[j] as f64 * mu / t);
        let inside: usize = chunks
            .iter()
            .flatten()
            .filter(|n| (n[j] as f64 * mu / t - 1.0).abs() <= SLLN_BAND)
            .count();
        mean_trace.push(m.mean());
        fraction_in_band.push(inside as f64 / paths as f64);
    }
    Ok(SllnReport {
        t_grid: t_grid.to_vec(),
        mean_trace,
        fraction_in_band,
        band: SLLN_BAND,
        paths,
    })
}

/// `N(t)μ_H/t` along `t_grid` for a single path.
pub fn path_trace(path: &mut ArrivalPath<'_>, t_grid: &[f64]) -> Vec<f64> {
    let mu = path.h.mean();
    t_grid.iter().map(|&t| path.count(t) as f64 * mu / t).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMomentReport {
    pub r: f64,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    /// `Ê e^{rN(t)} 1{N(t) > (1+δ)t/μ_H}`; may be `inf` when only the log
    /// is representable.
    pub values: Vec<f64>,
    /// Natural log of `values`, `-inf` for an empty indicator.
    pub log_values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub hits: Vec<u64>,
    /// Strictly decreasing along the grid.
    pub decreasing: bool,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + pairwise_sum(&v.iter().map(|x| (x - max).exp()).collect::<Vec<_>>()).ln()
}

/// Trace of `E e^{rN(t)} 1{N(t) > (1+δ)μ_H⁻¹t}` over `t_grid`, computed in
/// log space. All grid points share the same paths.
pub fn exp_moment_tail(
    h: &TailModel,
    plan: DependencePlan,
    r: f64,
    delta: f64,
    t_grid: &[f64],
    paths: u64,
    seed: u64,
) -> Result<ExpMomentReport> {
    if !(r > 0.0 && delta > 0.0) {
        return Err(invalid("exp_moment_tail needs r > 0 and delta > 0"));
    }
    let chunks = counts_at(h, plan, t_grid, paths, seed)?;
    let n = paths as f64;
    let mu = h.mean();
    let mut values = Vec::new();
    let mut log_values = Vec::new();
    let mut stderr = Vec::new();
    let mut hits = Vec::new();
    for (j, &t) in t_grid.iter().enumerate() {
        let cut = (1.0 + delta) * t / mu;
        let exps: Vec<f64> = chunks
            .iter()
            .flatten()
            .filter(|c| c[j] as f64 > cut)
            .map(|c| r * c[j] as f64)
            .collect();
        let log_mean = log_sum_exp(&exps) - n.ln();
        let doubled: Vec<f64> = exps.iter().map(|e| 2.0 * e).collect();
        let log_second = log_sum_exp(&doubled) - n.ln();
        let var = (log_second.exp() - (2.0 * log_mean).exp()).max(0.0) * n / (n - 1.0).max(1.0);
        log_values.push(log_mean);
        values.push(log_mean.exp());
        stderr.push((var / n).sqrt());
        hits.push(exps.len() as u64);
    }
    let decreasing = log_values.windows(2).all(|w| w[1] < w[0]);
    Ok(ExpMomentReport {
        r,
        delta,
        t_grid: t_grid.to_vec(),
        values,
        log_values,
        stderr,
        hits,
        decreasing,
    })
}
