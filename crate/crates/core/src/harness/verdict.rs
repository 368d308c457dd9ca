use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Deviations must strictly decrease along the grid and end at or below
/// `tolerance`. One value, or any unresolved (NaN) value, is inconclusive.
pub fn convergence_verdict(deviations: &[f64], tolerance: f64) -> Verdict {
    if deviations.len() < 2 || deviations.iter().any(|d| d.is_nan()) {
        return Verdict::Inconclusive;
    }
    let decreasing = deviations.windows(2).all(|w| w[1] < w[0]);
    let last = deviations[deviations.len() - 1];
    if decreasing && last <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Pass when every check passed.
pub fn all_pass<I: IntoIterator<Item = bool>>(checks: I) -> Verdict {
    if checks.into_iter().all(|c| c) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}
