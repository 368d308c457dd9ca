//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-300,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every point of `breaks`
/// that falls strictly inside the interval.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut segments: Vec<Segment> = points
        .windows(2)
        .map(|w| kronrod15(&f, w[0], w[1]))
        .collect();

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target || segments.len() >= tol.max_intervals {
            return QuadResult {
                value,
                abs_error: error,
                intervals: segments.len(),
                converged: error <= target,
            };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        segments.push(kronrod15(&f, seg.a, mid));
        segments.push(kronrod15(&f, mid, seg.b));
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// `∫_a^∞ f(x) dx` for `a > 0`, with the integrand supplied in log form
/// `ln f(e^s)`.
///
/// Uses `x = a·exp(v / (1 − v))`, which maps `[a, ∞)` onto `[0, 1)` and keeps
/// integrands with regularly or slowly varying decay bounded near `v = 1`.
/// `split_at` (an `x` value) becomes an initial breakpoint.
pub fn integrate_log_upper<F: Fn(f64) -> f64>(
    log_f_at_log: F,
    a: f64,
    split_at: Option<f64>,
    tol: Tolerance,
) -> QuadResult {
    assert!(a > 0.0, "lower limit must be positive");
    let ln_a = a.ln();
    let g = |v: f64| {
        if v >= 1.0 {
            return 0.0;
        }
        let y = v / (1.0 - v);
        let lx = ln_a + y;
        let log_val = log_f_at_log(lx) + lx + 2.0 * y.ln_1p();
        if log_val == f64::NEG_INFINITY {
            0.0
        } else {
            log_val.exp()
        }
    };
    let mut breaks = Vec::new();
    if let Some(s) = split_at {
        if s > a && s.is_finite() {
            let y = (s / a).ln();
            breaks.push(y / (1.0 + y));
        }
    }
    integrate_with_breaks(g, 0.0, 1.0, &breaks, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default());
        assert!((r.value - 8.0).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let r = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, Tolerance::default());
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn breakpoint_handles_jump() {
        let tol = Tolerance::default();
        let step = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let r = integrate_with_breaks(step, 0.0, 1.0, &[0.3], tol);
        assert!((r.value - 0.3).abs() < 1e-14);
    }

    #[test]
    fn log_upper_power_law() {
        // ∫_2^∞ x^{-3} dx = 1/8
        let r = integrate_log_upper(|lx| -3.0 * lx, 2.0, None, Tolerance::default());
        assert!((r.value - 0.125).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn log_upper_slowly_varying() {
        // ∫_{e^2}^∞ dx / (x ln² x) = 1/2
        let r = integrate_log_upper(
            |lx| -lx - 2.0 * lx.ln(),
            2.0_f64.exp(),
            Some(1e9),
            Tolerance::default(),
        );
        assert!((r.value - 0.5).abs() < 1e-8, "{}", r.value);
    }
}
