//! Closed-form first-order asymptotics and their validity gates.
//!
//! Every formula returns an [`AsymptoticReport`] carrying the value, the
//! argument handed to the tail, and the conditions that failed. A report
//! with `valid == false` must never be presented as an approximation.
//!
//! Deviation kernels share one shape,
//!
//! ```text
//! (t / μ_H) · Ḡ(x − μ · t / μ_H + c · t)
//! ```
//!
//! with the centering `μ` and the income rate `c` depending on the target.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heavy_tails::{dominance_grid, tail_dominance, ClassTag, Family, TailModel};
use crate::processes::{aux_moments, mu_g2_exact, Case, RiskModel};

/// Replications for `μ_G2` when no quadrature is available.
pub const AUX_REPS: u64 = 400_000;
pub const AUX_SEED: u64 = 0x6d75_6732;

/// Centering of the deviation kernel: `μ_G` or `μ_G2 = E max{Y, cZ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    MuG,
    MuG2,
}

/// The constants bracketing the ruin-probability ratio. Each is `None` when
/// its threshold on `γ` fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// Lower bound of the `μ_G2`-centred ratio (case 1).
    pub a: Option<f64>,
    /// `b⁻¹` bounds the `μ_G`-centred ratio from above (case 1).
    pub b: Option<f64>,
    /// `d⁻¹` bounds the `μ_G`-centred ratio from above on a band (case 2).
    pub d: Option<f64>,
    /// First argument of the maximum defining `b`.
    pub b_first: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub value: f64,
    pub kernel_argument: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    pub valid: bool,
    pub violated_conditions: Vec<String>,
}

impl AsymptoticReport {
    fn new(value: f64, kernel_argument: f64) -> Self {
        Self {
            value,
            kernel_argument,
            constants: None,
            valid: true,
            violated_conditions: Vec::new(),
        }
    }

    fn violate(&mut self, condition: impl Into<String>) {
        self.valid = false;
        self.violated_conditions.push(condition.into());
    }

    /// Folds a gate into the report.
    pub fn gated(mut self, gate: &GateReport) -> Self {
        for v in &gate.violated {
            self.violate(v.clone());
        }
        self
    }
}

fn check_xt(x: f64, t: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be finite and >= 0, got {x}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `(t/μ_H) Ḡ(x − center·t/μ_H + rate·t)`. Invalid when the argument is not
/// positive.
pub fn deviation_kernel(g: &TailModel, mu_h: f64, center: f64, rate: f64, x: f64, t: f64) -> AsymptoticReport {
    let arg = x - center * t / mu_h + rate * t;
    let mut r = AsymptoticReport::new(t / mu_h * g.sf(arg), arg);
    if !(arg > 0.0) {
        r.violate(format!("kernel argument {arg} is not positive"));
    }
    r
}

/// `μ_G2`, by quadrature when the coupling allows it and by Monte Carlo
/// (fixed seed) otherwise.
pub fn mu_g2(model: &RiskModel) -> f64 {
    mu_g2_exact(model).unwrap_or_else(|| {
        aux_moments(model, AUX_REPS, AUX_SEED)
            .expect("AUX_REPS >= 2")
            .mu_g2_mc
            .value
    })
}

/// `(t/μ_H) Ḡ(x − μ t/μ_H + ct)` with `μ = μ_G` or `μ_G2`.
pub fn psi_kernel(model: &RiskModel, x: f64, t: f64, centering: Centering) -> Result<AsymptoticReport> {
    check_xt(x, t)?;
    let center = match centering {
        Centering::MuG => model.mu_g(),
        Centering::MuG2 => mu_g2(model),
    };
    Ok(deviation_kernel(&model.claims, model.mu_h(), center, model.c(), x, t))
}

/// `(t/μ_H) Ḡ(x − μ_G t/μ_H)`.
pub fn total_claims_asymptote(model: &RiskModel, x: f64, t: f64) -> Result<AsymptoticReport> {
    check_xt(x, t)?;
    Ok(deviation_kernel(&model.claims, model.mu_h(), model.mu_g(), 0.0, x, t))
}

/// `(t/μ_H) Ḡ(x/q₁ − μ_G t/μ_H + q₂ c t/q₁)`.
pub fn proportional_asymptote(model: &RiskModel, x: f64, t: f64) -> Result<AsymptoticReport> {
    check_xt(x, t)?;
    let r = &model.reinsurance;
    let rate = r.q2 * model.c() / r.q1;
    Ok(deviation_kernel(&model.claims, model.mu_h(), model.mu_g(), rate, x / r.q1, t))
}

/// `E(Y − D)⁺`, exactly `μ_G` at `D = 0`.
pub fn excess_mean(model: &RiskModel) -> f64 {
    let d = model.reinsurance.retention;
    if d == 0.0 {
        model.mu_g()
    } else {
        model.claims.excess_mean(d)
    }
}

/// `(t/μ_H) Ḡ(x + D − μ_excess t/μ_H + q₂ c t)`.
pub fn excess_asymptote(model: &RiskModel, x: f64, t: f64) -> Result<AsymptoticReport> {
    check_xt(x, t)?;
    let r = &model.reinsurance;
    Ok(deviation_kernel(
        &model.claims,
        model.mu_h(),
        excess_mean(model),
        r.q2 * model.c(),
        x + r.retention,
        t,
    ))
}

/// `EN(τ) Ḡ(x)`, gated on case 1, a finite `EN(τ)` and `P(τ > x) = o(Ḡ(x))`.
pub fn random_time_asymptote(model: &RiskModel, x: f64, en_tau: f64) -> Result<AsymptoticReport> {
    check_xt(x, 0.0)?;
    if !(en_tau >= 0.0) {
        return Err(Error::Domain(format!("EN(tau) must be >= 0, got {en_tau}")));
    }
    let mut r = AsymptoticReport::new(en_tau * model.claims.sf(x), x);
    if !en_tau.is_finite() {
        r.violate("EN(tau) is infinite");
    }
    let gate = validity(model, Region::Ray { gamma: 0.0 }, Theorem::RandomTime);
    Ok(r.gated(&gate))
}

/// Stop-loss gate: `q₂ = 0` or `K > q₁ μ_H μ_G / μ₀`.
pub fn stoploss_condition(model: &RiskModel) -> std::result::Result<(), String> {
    let r = &model.reinsurance;
    let mu0 = model.mu0();
    let bound = r.q1 * model.mu_h() * model.mu_g() / mu0;
    if r.q2 == 0.0 || r.k > bound {
        Ok(())
    } else {
        Err(format!("K = {} must exceed q1 mu_H mu_G / mu0 = {bound} when q2 > 0", r.k))
    }
}

/// `(q₁/μ₀) μ_G Ḡ_I(μ₀ K t/(q₁ μ_H) − μ_G t/μ_H + q₂ c t/q₁)`.
pub fn stoploss_asymptote(model: &RiskModel, t: f64) -> Result<AsymptoticReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let r = &model.reinsurance;
    let mu0 = model.mu0();
    if !(mu0 > 0.0) {
        return Err(invalid(format!("mu0 must be positive, got {mu0}")));
    }
    let (mu_g, mu_h) = (model.mu_g(), model.mu_h());
    let arg = mu0 * r.k * t / (r.q1 * mu_h) - mu_g * t / mu_h + r.q2 * model.c() * t / r.q1;
    let value = if arg > 0.0 {
        r.q1 / mu0 * model.claims.tail_integral(arg)
    } else {
        f64::NAN
    };
    let mut rep = AsymptoticReport::new(value, arg);
    if !(arg > 0.0) {
        rep.violate(format!("kernel argument {arg} is not positive"));
    }
    let gate = validity(model, Region::Ray { gamma: 0.0 }, Theorem::StopLoss);
    Ok(rep.gated(&gate))
}

/// Three equivalent forms of the stop-loss mean for the log-Pareto law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogParetoEquivalents {
    pub t: f64,
    /// Quadrature of the integrated tail.
    pub exact: f64,
    /// `(q₁/μ₀) / ln(k t)`.
    pub log_form: f64,
    /// `(q₁/μ₀) Ḡ(t) t ln t`.
    pub scaled_form: f64,
}

impl LogParetoEquivalents {
    pub fn exact_over_log(&self) -> f64 {
        self.exact / self.log_form
    }

    pub fn log_over_scaled(&self) -> f64 {
        self.log_form / self.scaled_form
    }
}

/// Stop-loss equivalents for a model whose claims follow
/// `Ḡ(x) = (1+x)⁻¹ ln⁻²(e+x)`.
pub fn example41_equivalents(model: &RiskModel, t: f64) -> Result<LogParetoEquivalents> {
    if !matches!(model.claims.family(), Family::LogPareto) {
        return Err(invalid("log-Pareto equivalents need log_pareto claims"));
    }
    if !(t > 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must exceed 1, got {t}")));
    }
    let rep = stoploss_asymptote(model, t)?;
    if !rep.valid {
        return Err(Error::Gate(rep.violated_conditions));
    }
    let r = &model.reinsurance;
    let mu0 = model.mu0();
    let k = rep.kernel_argument / t;
    Ok(LogParetoEquivalents {
        t,
        exact: rep.value,
        log_form: r.q1 / mu0 / (k * t).ln(),
        scaled_form: r.q1 / mu0 * model.claims.sf(t) * t * t.ln(),
    })
}

/// `Ḡ_*(y)`.
pub fn g_star(g: &TailModel, y: f64) -> f64 {
    g.lower_limit_ratio(y)
}

/// Constants from explicit means.
pub fn constants_from(g: &TailModel, mu_g: f64, mu_g2: f64, mu_h: f64, c: f64, gamma: f64) -> Constants {
    let positive = |v: f64| (v > 0.0).then_some(v);
    let ray_ok = gamma > 1.0_f64.max(mu_g);
    let a = ray_ok
        .then(|| positive(gamma - mu_g2 / mu_h + c))
        .flatten()
        .map(|den| g_star(g, 1.0 + (mu_g2 - mu_g) / mu_h / den));
    let b_first = ray_ok
        .then(|| positive(gamma - mu_g / mu_h + c))
        .flatten()
        .map(|den| g_star(g, 1.0 + (mu_g2 - mu_g) / mu_h / den));
    let b_second = ray_ok
        .then(|| positive(gamma - 1.0 + c - mu_g / mu_h))
        .flatten()
        .map(|den| g_star(g, 1.0 + 1.0 / den));
    let b = match (b_first, b_second) {
        (Some(p), Some(q)) => Some(p.max(q)),
        _ => None,
    };
    let d = (gamma > mu_g.max(mu_g / mu_h))
        .then(|| positive(gamma - mu_g / mu_h))
        .flatten()
        .map(|den| g_star(g, 1.0 + c / den));
    Constants { a, b, d, b_first }
}

/// `a`, `b`, `d` at `γ`.
pub fn theorem_constants(model: &RiskModel, gamma: f64) -> Constants {
    constants_from(&model.claims, model.mu_g(), mu_g2(model), model.mu_h(), model.c(), gamma)
}

/// Region of capitals `x` for horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `x ≥ γ t`.
    Ray { gamma: f64 },
    /// `γ t ≤ x ≤ Γ t`.
    Band { gamma: f64, big_gamma: f64 },
    /// `x ≥ γ t s(t)` with `s(t) = ln t`.
    Wide { gamma: f64 },
}

impl Region {
    pub fn gamma(&self) -> f64 {
        match *self {
            Region::Ray { gamma } | Region::Band { gamma, .. } | Region::Wide { gamma } => gamma,
        }
    }

    /// Lower edge of the region at horizon `t`.
    pub fn lower(&self, t: f64) -> f64 {
        match *self {
            Region::Ray { gamma } | Region::Band { gamma, .. } => gamma * t,
            Region::Wide { gamma } => gamma * t * wide_scale(t),
        }
    }
}

/// `s(t) = ln t` for the wide-range mode.
pub fn wide_scale(t: f64) -> f64 {
    t.ln()
}

/// Statements whose hypotheses can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Ruin probability, case 1, on a ray: bounds `a`, `b`.
    RuinRay,
    /// Ruin probability, case 1, wide range `x ≥ γ t ln t`.
    RuinWide,
    /// Ruin probability, case 2, on a band: bound `d`.
    RuinBand,
    /// `R_0`: ray in case 1, band in case 2.
    NetLoss,
    /// `R_00` on a band.
    TotalClaims,
    /// `ψ(x; τ)`.
    RandomTime,
    /// `R_01`.
    Proportional,
    /// `R_02`.
    Excess,
    /// `E R_03`.
    StopLoss,
    /// Nonrandom sums.
    Sums,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub theorem: Theorem,
    pub checked: Vec<String>,
    pub violated: Vec<String>,
}

impl GateReport {
    pub fn pass(&self) -> bool {
        self.violated.is_empty()
    }

    fn check(&mut self, ok: bool, condition: String) {
        if ok {
            self.checked.push(condition);
        } else {
            self.violated.push(condition);
        }
    }
}

/// Checks the hypotheses of `theorem` for `model` on `region`.
pub fn validity(model: &RiskModel, region: Region, theorem: Theorem) -> GateReport {
    let mut g = GateReport {
        theorem,
        checked: Vec::new(),
        violated: Vec::new(),
    };
    let (mu_g, mu_h) = (model.mu_g(), model.mu_h());
    let gamma = region.gamma();
    let claims = &model.claims;
    g.check(claims.has_tag(ClassTag::Consistent), "claim law is consistently varying".into());
    let band = |g: &mut GateReport, lo: f64| {
        match region {
            Region::Band { gamma, big_gamma } => {
                g.check(gamma > lo, format!("gamma = {gamma} > {lo}"));
                g.check(big_gamma > gamma && big_gamma.is_finite(), format!("Gamma = {big_gamma} > gamma = {gamma}"));
            }
            _ => g.check(false, "x-region must be a band [gamma t, Gamma t]".into()),
        }
    };
    let ray = |g: &mut GateReport, lo: f64| match region {
        Region::Ray { .. } | Region::Band { .. } => g.check(gamma > lo, format!("gamma = {gamma} > {lo}")),
        Region::Wide { .. } => g.check(false, "x-region must be a ray or band".into()),
    };
    let case1 = model.case == Case::Case1;
    let arrivals_light = tail_dominance(&model.inter_arrivals, claims, &dominance_grid()).dominated;
    match theorem {
        Theorem::RuinRay | Theorem::RuinWide | Theorem::RuinBand | Theorem::RandomTime => {
            g.check(arrivals_light, "inter-arrival tail is o(claim tail)".into());
        }
        _ => {}
    }
    match theorem {
        Theorem::RuinRay => {
            g.check(case1, "case 1 model".into());
            ray(&mut g, 1.0_f64.max(mu_g));
        }
        Theorem::RuinWide => {
            g.check(case1, "case 1 model".into());
            match region {
                Region::Wide { gamma } => g.check(gamma > 0.0, format!("gamma = {gamma} > 0")),
                _ => g.check(false, "x-region must be wide (x >= gamma t ln t)".into()),
            }
        }
        Theorem::RuinBand => band(&mut g, mu_g.max(mu_g / mu_h)),
        Theorem::NetLoss | Theorem::Proportional | Theorem::Excess => {
            let lo = match theorem {
                Theorem::NetLoss => mu_g,
                Theorem::Proportional => model.reinsurance.q1 * mu_g,
                _ => excess_mean(model),
            };
            if case1 {
                ray(&mut g, lo);
            } else {
                band(&mut g, lo);
            }
            if theorem == Theorem::Proportional {
                g.check(model.generalized_load_holds(), "q1 mu_G < q2 c mu_H or q2 = 0".into());
            }
        }
        Theorem::TotalClaims => band(&mut g, mu_g),
        Theorem::RandomTime => {
            g.check(case1, "case 1 model".into());
            match &model.tau {
                Some(tau) => {
                    g.check(tau.mean().is_finite(), "E tau < infinity".into());
                    g.check(
                        tail_dominance(tau, claims, &dominance_grid()).dominated,
                        "P(tau > x) = o(claim tail)".into(),
                    );
                }
                None => g.check(false, "model defines a tau law".into()),
            }
        }
        Theorem::StopLoss => {
            g.check(case1, "case 1 model".into());
            g.check(model.mu0() > 0.0, "mu0 > 0".into());
            match stoploss_condition(model) {
                Ok(()) => g.check(true, "q2 = 0 or K > q1 mu_H mu_G / mu0".into()),
                Err(e) => g.check(false, e),
            }
        }
        Theorem::Sums => ray(&mut g, mu_g),
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{DependencePlan, PairCopula};
    use crate::processes::Reinsurance;
    use proptest::prelude::*;

    fn pareto(alpha: f64, mean: f64) -> TailModel {
        TailModel::pareto_with_mean(alpha, mean).unwrap()
    }

    fn exp(mean: f64) -> TailModel {
        TailModel::exponential(mean).unwrap()
    }

    fn case1(g: TailModel, c: f64) -> RiskModel {
        RiskModel::case1(g, exp(1.0), c, DependencePlan::iid(), DependencePlan::iid()).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let m = case1(pareto(2.0, 1.0), 2.0);
        let r = psi_kernel(&m, 300.0, 100.0, Centering::MuG).unwrap();
        assert!((r.value - 100.0 / 401.0f64.powi(2)).abs() < 1e-15);
        assert!((r.value - 6.2189e-4).abs() < 1e-8);
        assert_eq!(r.kernel_argument, 400.0);
        assert!(r.valid);
        assert_eq!(psi_kernel(&m, 5.0, 0.0, Centering::MuG).unwrap().value, 0.0);
        let g2 = psi_kernel(&m, 300.0, 100.0, Centering::MuG2).unwrap();
        // μ_G2 ≥ μ_G lowers the argument, so the μ_G2 kernel is the larger one.
        assert!(g2.value >= r.value);
        assert!(!psi_kernel(&m, 0.0, 0.0, Centering::MuG).unwrap().valid);
        assert!(psi_kernel(&m, -1.0, 1.0, Centering::MuG).is_err());
    }

    #[test]
    fn total_claims_examples() {
        let m = case1(pareto(2.0, 1.0), 2.0);
        let r = total_claims_asymptote(&m, 300.0, 100.0).unwrap();
        assert!((r.value - 100.0 / 201.0f64.powi(2)).abs() < 1e-15);
        let k = deviation_kernel(&m.claims, 1.0, 1.0, 0.0, 300.0, 100.0);
        assert_eq!(r.value, k.value);
        assert!(r.value >= psi_kernel(&m, 300.0, 100.0, Centering::MuG).unwrap().value);
    }

    #[test]
    fn treaty_reductions() {
        let m = case1(pareto(2.0, 1.0), 2.0);
        let psi = psi_kernel(&m, 300.0, 100.0, Centering::MuG).unwrap();
        assert_eq!(proportional_asymptote(&m, 300.0, 100.0).unwrap().value, psi.value);
        let q20 = m.clone().with_reinsurance(Reinsurance { q2: 0.0, ..Reinsurance::default() }).unwrap();
        assert_eq!(
            proportional_asymptote(&q20, 300.0, 100.0).unwrap().value,
            total_claims_asymptote(&q20, 300.0, 100.0).unwrap().value
        );
        // q1 = 0.5, q2 = 1: argument 600 − 100 + 400 = 900.
        let half = m.clone().with_reinsurance(Reinsurance { q1: 0.5, ..Reinsurance::default() }).unwrap();
        let r = proportional_asymptote(&half, 300.0, 100.0).unwrap();
        assert_eq!(r.kernel_argument, 900.0);
        assert!((r.value - 100.0 / 901.0f64.powi(2)).abs() < 1e-15);

        assert_eq!(excess_asymptote(&m, 300.0, 100.0).unwrap().value, psi.value);
        let q2 = m.clone().with_reinsurance(Reinsurance { q2: 0.5, ..Reinsurance::default() }).unwrap();
        assert_eq!(
            excess_asymptote(&q2, 300.0, 100.0).unwrap().value,
            deviation_kernel(&m.claims, 1.0, 1.0, 1.0, 300.0, 100.0).value
        );
        // D = 1: E(Y − 1)⁺ = ∫_1^∞ (1+y)⁻² dy = 1/2; argument 301 − 50 + 200.
        let d1 = m.clone().with_reinsurance(Reinsurance { retention: 1.0, ..Reinsurance::default() }).unwrap();
        assert!((excess_mean(&d1) - 0.5).abs() < 1e-9);
        let r = excess_asymptote(&d1, 300.0, 100.0).unwrap();
        assert!((r.kernel_argument - 451.0).abs() < 1e-6);
        assert!((r.value / (100.0 / 452.0f64.powi(2)) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn excess_mean_matches_monte_carlo() {
        let m = case1(pareto(2.5, 1.0), 2.0).with_reinsurance(Reinsurance { retention: 2.0, ..Reinsurance::default() }).unwrap();
        let aux = aux_moments(&m, 400_000, 3).unwrap();
        assert!((aux.mu_excess_mc.value - excess_mean(&m)).abs() < 3.0 * aux.mu_excess_mc.stderr);
    }

    #[test]
    fn random_time_examples() {
        let m = case1(pareto(2.5, 1.0), 2.0).with_tau(exp(1.0));
        assert_eq!(random_time_asymptote(&m, 10.0, 0.0).unwrap().value, 0.0);
        let r = random_time_asymptote(&m, 10.0, 1.0).unwrap();
        assert!(r.valid, "{r:?}");
        assert_eq!(r.value, m.claims.sf(10.0));
        let big = random_time_asymptote(&m, 1e6, 1.0).unwrap().value;
        let bigger = random_time_asymptote(&m, 2e6, 1.0).unwrap().value;
        assert!((bigger / big / 2f64.powf(-2.5) - 1.0).abs() < 1e-3);
        let heavy_tau = case1(pareto(2.5, 1.0), 2.0).with_tau(pareto(1.5, 1.0));
        assert!(!random_time_asymptote(&heavy_tau, 10.0, 1.0).unwrap().valid);
    }

    #[test]
    fn stoploss_examples() {
        let r = Reinsurance { q1: 1.0, q2: 0.0, k: 3.0, ..Reinsurance::default() };
        let m = case1(pareto(2.0, 1.0), 2.0).with_reinsurance(r).unwrap();
        let rep = stoploss_asymptote(&m, 100.0).unwrap();
        assert!(rep.valid, "{rep:?}");
        assert!((rep.value - 1.0 / 201.0).abs() < 1e-10, "{rep:?}");

        let low = Reinsurance { q1: 1.0, q2: 0.0, k: 0.5, ..Reinsurance::default() };
        let m = case1(pareto(2.0, 1.0), 2.0).with_reinsurance(low).unwrap();
        assert!(!stoploss_asymptote(&m, 100.0).unwrap().valid);

        let ungated = Reinsurance { q1: 1.0, q2: 1.0, k: 0.6, ..Reinsurance::default() };
        let m = case1(pareto(2.0, 1.0), 2.0).with_reinsurance(ungated).unwrap();
        assert!(!stoploss_asymptote(&m, 100.0).unwrap().valid);
    }

    fn log_pareto_model() -> RiskModel {
        let r = Reinsurance { q1: 1.0, q2: 0.0, k: 3.0, ..Reinsurance::default() };
        case1(TailModel::log_pareto(), 2.0).with_reinsurance(r).unwrap()
    }

    #[test]
    fn log_pareto_equivalents() {
        let m = log_pareto_model();
        let at = |t| example41_equivalents(&m, t).unwrap();
        let e6 = at(1e6);
        assert!(e6.exact > 0.0 && e6.log_form > 0.0 && e6.scaled_form > 0.0);
        assert!((e6.exact_over_log() - 1.0).abs() < 0.02, "{e6:?}");
        let gaps: Vec<f64> = [1e4, 1e5, 1e6].iter().map(|&t| (at(t).log_over_scaled() - 1.0).abs()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(example41_equivalents(&case1(pareto(2.0, 1.0), 2.0), 1e4).is_err());
    }

    #[test]
    fn constant_examples() {
        let m = case1(pareto(2.0, 1.0), 2.0);
        let k = theorem_constants(&m, 3.0);
        assert!((k.d.unwrap() - 0.25).abs() < 1e-15);
        let (a, b) = (k.a.unwrap(), k.b.unwrap());
        assert!(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0);
        assert!(k.d.unwrap() <= k.b_first.unwrap());
        // μ_G2 = μ_G collapses the ratio argument to 1.
        let same = constants_from(&m.claims, 1.0, 1.0, 1.0, 2.0, 3.0);
        assert_eq!(same.a, Some(1.0));
        assert!(theorem_constants(&m, 0.5).a.is_none());
    }

    #[test]
    fn gates() {
        let m = case1(pareto(2.0, 1.0), 2.0);
        assert!(!validity(&m, Region::Ray { gamma: 1.0 }, Theorem::NetLoss).pass());
        assert!(validity(&m, Region::Ray { gamma: 1.5 }, Theorem::NetLoss).pass());
        assert!(!validity(&m, Region::Band { gamma: 3.0, big_gamma: 2.0 }, Theorem::TotalClaims).pass());
        let ok = validity(&m, Region::Band { gamma: 2.0, big_gamma: 6.0 }, Theorem::RuinBand);
        assert!(ok.pass() && !ok.checked.is_empty(), "{ok:?}");
        assert!(!validity(&m, Region::Ray { gamma: 2.0 }, Theorem::RuinBand).pass());
        let co = RiskModel::case2(pareto(2.0, 1.0), exp(1.0), 2.0, PairCopula::Comonotone).unwrap();
        assert!(!validity(&co, Region::Ray { gamma: 2.0 }, Theorem::NetLoss).pass());
        assert!(!validity(&co, Region::Ray { gamma: 2.0 }, Theorem::RuinRay).pass());
        let light = case1(exp(1.0), 2.0);
        assert!(!validity(&light, Region::Ray { gamma: 2.0 }, Theorem::NetLoss).pass());
        assert!(validity(&m, Region::Wide { gamma: 0.1 }, Theorem::RuinWide).pass());
    }

    proptest! {
        #[test]
        fn regular_variation_scaling(alpha in 1.5f64..3.0, scale in 0.5f64..2.0, x in 1e6f64..1e8) {
            let g = TailModel::pareto(alpha, scale).unwrap();
            let m = case1(g, 2.0 * alpha * scale);
            let r = psi_kernel(&m, x, 100.0, Centering::MuG).unwrap();
            let scaled = r.value * r.kernel_argument.powf(alpha) * m.mu_h() / 100.0;
            prop_assert!((scaled / scale.powf(alpha) - 1.0).abs() < 1e-3 * alpha);
        }

        #[test]
        fn class_c_constants_bounded(alpha in 1.2f64..4.0, gamma in 1.1f64..10.0, c in 1.2f64..4.0) {
            let m = case1(pareto(alpha, 1.0), c);
            let k = constants_from(&m.claims, 1.0, 1.0 + 0.5 * c, 1.0, c, gamma);
            for v in [k.a, k.b, k.d].into_iter().flatten() {
                prop_assert!(v > 0.0 && v <= 1.0);
            }
            if let (Some(d), Some(b1)) = (k.d, k.b_first) {
                prop_assert!(d <= b1);
            }
        }

        #[test]
        fn centering_order(x in 1.0f64..1e4, t in 0.0f64..100.0) {
            let m = case1(pareto(2.0, 1.0), 2.0);
            let a = psi_kernel(&m, x, t, Centering::MuG).unwrap();
            let b = psi_kernel(&m, x, t, Centering::MuG2).unwrap();
            prop_assert!(b.value >= a.value);
        }
    }
}
