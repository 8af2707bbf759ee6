//! Adaptive Gauss-Kronrod quadrature and oscillatory power-law tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Value, error estimate and cost of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0 }
    }

    /// Sum of two independent estimates; errors add.
    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn scale(self, c: f64) -> QuadResult {
        QuadResult { value: c * self.value, abs_error: c.abs() * self.abs_error, evaluations: self.evaluations }
    }

    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_error
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-14, rel_tol: 1e-11, max_subdivisions: 2000 }
    }
}

impl QuadConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadConfig { abs_tol, rel_tol, ..Default::default() }
    }
}

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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One 15-point Kronrod rule on `[a, b]` with the QUADPACK error heuristic.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_k = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = (res_k - res_g * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Adaptive integration over `[p_0, p_last]` with the given initial
/// breakpoints (sorted ascending).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::usage("quadrature needs at least two points"));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::usage("quadrature breakpoints must be finite and sorted"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, err) = gk15(&f, w[0], w[1]);
        evals += 15;
        total += value;
        total_err += err;
        heap.push(Segment { a: w[0], b: w[1], value, err });
    }
    let mut splits = 0;
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target || heap.is_empty() {
            break;
        }
        if !total.is_finite() {
            return Err(Error::numeric("quadrature", "non-finite integrand values"));
        }
        if splits >= cfg.max_subdivisions {
            return Err(Error::numeric(
                "quadrature",
                format!(
                    "no convergence after {splits} subdivisions: value {total:e}, error {total_err:e}, target {target:e}"
                ),
            ));
        }
        let seg = heap.pop().expect("heap nonempty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at machine resolution; its error cannot be reduced.
            heap.push(Segment { err: 0.0, ..seg });
            if heap.iter().all(|s| s.err == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evals += 30;
        splits += 1;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    // Re-sum to shed accumulated update drift.
    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.err).sum::<f64>().max(0.0);
    Ok(QuadResult { value, abs_error, evaluations: evals })
}

/// Smallest starting point accepted by [`oscillatory_tail`].
pub const OSC_TAIL_MIN_START: f64 = 50.0;

/// `E(beta, X) = int_X^inf e^{it} t^{-beta} dt` for `beta > 0`, `X >= 50`, by the
/// asymptotic expansion `i e^{iX} X^{-beta} sum_k (beta)_k (-i/X)^k`
/// truncated at its smallest term. The truncation error is bounded by the
/// first omitted term, returned as the second component.
pub fn oscillatory_tail(beta: f64, x: f64) -> Result<(Complex64, f64)> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain("oscillatory_tail", format!("exponent {beta} must be positive")));
    }
    if !(x >= OSC_TAIL_MIN_START) || !x.is_finite() {
        return Err(Error::domain("oscillatory_tail", format!("start {x} below {OSC_TAIL_MIN_START}")));
    }
    let step = Complex64::new(0.0, -1.0 / x);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut omitted = 0.0;
    for k in 0..200 {
        let next = term * step * (beta + k as f64);
        if next.norm() >= term.norm() {
            omitted = term.norm();
            break;
        }
        sum += next;
        term = next;
        omitted = term.norm();
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    let pref = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, x) * x.powf(-beta);
    Ok((pref * sum, x.powf(-beta) * omitted))
}

/// `int_{x0}^inf (1 - cos t) t^{-beta} dt` for `beta > 1`, `x0 > 0`.
///
/// Adaptive quadrature up to `X = max(x0, 50)` rounded to a multiple of `2 pi`,
/// then `X^{1-beta}/(beta-1) - Re E(beta, X)`.
pub fn one_minus_cos_tail(beta: f64, x0: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    if !(beta > 1.0) {
        return Err(Error::domain("one_minus_cos_tail", format!("exponent {beta} must exceed 1")));
    }
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::domain("one_minus_cos_tail", format!("start {x0} must be positive")));
    }
    let period = 2.0 * std::f64::consts::PI;
    let x_far = if x0 >= OSC_TAIL_MIN_START { x0 } else { (OSC_TAIL_MIN_START / period).ceil() * period };
    let mut head = QuadResult::zero();
    if x_far > x0 {
        // One breakpoint per half period.
        let mut pts = vec![x0];
        let mut p = (x0 / std::f64::consts::PI).floor() * std::f64::consts::PI;
        loop {
            p += std::f64::consts::PI;
            if p >= x_far {
                break;
            }
            pts.push(p);
        }
        pts.push(x_far);
        head = integrate_with_breaks(
            |t| {
                let h = (0.5 * t).sin();
                2.0 * h * h * t.powf(-beta)
            },
            &pts,
            cfg,
        )?;
    }
    let (e, e_err) = oscillatory_tail(beta, x_far)?;
    let tail = x_far.powf(1.0 - beta) / (beta - 1.0) - e.re;
    Ok(QuadResult {
        value: head.value + tail,
        abs_error: head.abs_error + e_err + 4.0 * f64::EPSILON * tail.abs(),
        evaluations: head.evaluations,
    })
}

/// `int_0^inf (1 - cos t) t^{-beta} dt` for `1 < beta < 3`: power series on
/// `[0, 1]` plus [`one_minus_cos_tail`].
pub fn one_minus_cos_integral(beta: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    if !(beta > 1.0 && beta < 3.0) {
        return Err(Error::domain("one_minus_cos_integral", format!("exponent {beta} outside (1, 3)")));
    }
    // int_0^1 t^{2k-beta} dt = 1/(2k+1-beta)
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        fact *= (2.0 * kf - 1.0) * (2.0 * kf);
        let term = 1.0 / (fact * (2.0 * kf + 1.0 - beta));
        head += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    let tail = one_minus_cos_tail(beta, 1.0, cfg)?;
    Ok(QuadResult { value: head + tail.value, abs_error: tail.abs_error + 1e-16 * head, evaluations: tail.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x * x, 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn sine_over_half_period() {
        let r = integrate(f64::sin, 0.0, PI, &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let cfg = QuadConfig::with_tolerances(1e-13, 1e-11);
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
        assert!(r.abs_error < 1e-8);
    }

    #[test]
    fn breakpoints_at_kink() {
        let pts = [-1.0, 0.3, 2.0];
        let r = integrate_with_breaks(|x: f64| (x - 0.3).abs(), &pts, &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7, max_relative = 1e-14);
    }

    #[test]
    fn subdivision_limit_is_reported() {
        let cfg = QuadConfig { abs_tol: 0.0, rel_tol: 1e-15, max_subdivisions: 3 };
        let e = integrate(|x: f64| (50.0 * x).sin().abs().sqrt(), 0.0, 10.0, &cfg).unwrap_err();
        assert!(matches!(e, Error::Numeric { .. }));
    }

    #[test]
    fn bad_breakpoints_are_rejected() {
        assert!(integrate_with_breaks(|x| x, &[1.0], &QuadConfig::default()).is_err());
        assert!(integrate_with_breaks(|x| x, &[1.0, 0.0], &QuadConfig::default()).is_err());
    }

    #[test]
    fn oscillatory_tail_matches_direct_integration() {
        // Direct: integrate to T over half periods, then the remainder with
        // two integration-by-parts terms (error ~ T^{-beta-2}).
        let beta = 1.4;
        let x = 60.0;
        let (e, _) = oscillatory_tail(beta, x).unwrap();
        let t_end = 4000.0 * PI;
        let mut pts = vec![x];
        let mut p = (x / PI).ceil() * PI;
        while p < t_end {
            pts.push(p);
            p += PI;
        }
        pts.push(t_end);
        let cfg = QuadConfig::with_tolerances(1e-13, 1e-12);
        let re = integrate_with_breaks(|t: f64| t.cos() * t.powf(-beta), &pts, &cfg).unwrap();
        let im = integrate_with_breaks(|t: f64| t.sin() * t.powf(-beta), &pts, &cfg).unwrap();
        let rest = Complex64::new(0.0, 1.0)
            * Complex64::from_polar(1.0, t_end)
            * t_end.powf(-beta)
            * Complex64::new(1.0, -beta / t_end);
        let direct = Complex64::new(re.value, im.value) + rest;
        assert!((direct - e).norm() < 1e-8 * e.norm(), "{direct} vs {e}");
    }

    #[test]
    fn one_minus_cos_full_line_closed_form() {
        // int_0^inf (1 - cos t) t^{-1-2s} dt = -Gamma(-2s) cos(pi s)
        let cfg = QuadConfig::with_tolerances(1e-15, 1e-13);
        for s in [0.05, 0.1, 0.25, 0.5, 0.75, 0.9] {
            let beta = 1.0 + 2.0 * s;
            let head = integrate(
                |t: f64| {
                    let h = (0.5 * t).sin();
                    2.0 * h * h * t.powf(-beta)
                },
                0.0,
                1.0,
                &cfg,
            )
            .unwrap();
            let tail = one_minus_cos_tail(beta, 1.0, &cfg).unwrap();
            let want = if s == 0.5 { PI / 2.0 } else { -gamma(-2.0 * s).unwrap() * (PI * s).cos() };
            let got = head.value + tail.value;
            assert!(((got - want) / want).abs() < 1e-9, "s={s}: {got} vs {want}");
            let series = one_minus_cos_integral(beta, &cfg).unwrap();
            assert!(((series.value - want) / want).abs() < 1e-11, "s={s}: {}", series.value);
        }
        assert!(one_minus_cos_integral(3.0, &cfg).is_err());
    }

    #[test]
    fn tail_domain_checks() {
        assert!(oscillatory_tail(1.5, 10.0).is_err());
        assert!(oscillatory_tail(0.0, 100.0).is_err());
        assert!(one_minus_cos_tail(1.0, 1.0, &QuadConfig::default()).is_err());
        assert!(one_minus_cos_tail(1.5, 0.0, &QuadConfig::default()).is_err());
    }

    #[test]
    fn combine_and_scale() {
        let a = QuadResult { value: 1.0, abs_error: 0.1, evaluations: 15 };
        let b = QuadResult { value: 2.0, abs_error: 0.2, evaluations: 30 };
        let c = a.combine(b).scale(-2.0);
        assert_eq!(c.value, -6.0);
        assert!((c.abs_error - 0.6).abs() < 1e-15);
        assert_eq!(c.evaluations, 45);
    }
}
