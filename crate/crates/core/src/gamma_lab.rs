//! One-dimensional phase-transition experiments.
//!
//! Intervals are described by their center and half-width `h`; the squared
//! Fourier modulus of the indicator of `[c-h, c+h]` is `4 sin^2(h xi) / xi^2`.
//! With that convention the interaction energy of the indicator is
//!
//! ```text
//! T_s(h) = int_R S_s(xi) 4 sin^2(h xi)/xi^2 d xi = 8 int_0^inf St_s(xi) sin^2(h xi) xi^{2s-2} d xi,
//! ```
//!
//! which behaves like `h^{1-2s}` for small `h` and saturates at
//! `4 int_0^inf St_s(xi) xi^{2s-2} d xi` for large `h` (`s < 1/2`).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::fit::logspace;
use crate::quad::{integrate_with_breaks, one_minus_cos_integral, one_minus_cos_tail, QuadConfig, QuadResult};
use crate::spectral_field::{
    c_constant_closed_form, f_epsilon_gradient, f_epsilon_with, interaction_coefficient, rescale_weight, EnergyReport,
    Field, Operator, PeriodicGrid, SpectralOperator,
};
use crate::symbol::{ds_tilde, s_tilde, FracParams, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalSpec {
    pub center: f64,
    pub half_width: f64,
}

impl IntervalSpec {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::domain("interval", "center must be finite"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::domain("interval", format!("half-width {half_width} must be positive")));
        }
        Ok(IntervalSpec { center, half_width })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.half_width
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: f64) -> f64 {
        self.half_width - (x - self.center).abs()
    }
}

/// `|chi^(xi)|^2 = 4 sin^2(h xi) / xi^2`, continuously extended by `4 h^2` at 0.
pub fn indicator_spectrum_sq(spec: &IntervalSpec, xi: f64) -> f64 {
    let h = spec.half_width;
    if xi == 0.0 {
        return 4.0 * h * h;
    }
    let sn = (h * xi).sin();
    4.0 * sn * sn / (xi * xi)
}

fn check_subcritical(op: &'static str, s: f64) -> Result<FracParams> {
    let params = FracParams::new(s)?;
    if params.regime() != Regime::Subcritical {
        return Err(Error::domain(op, format!("s = {s} must be below 1/2")));
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsConfig {
    /// Split point between the quadrature head and the analytic tail.
    pub xi_star: f64,
    pub rel_tol: f64,
}

impl Default for TsConfig {
    fn default() -> Self {
        TsConfig { xi_star: 20.0, rel_tol: 1e-10 }
    }
}

/// Bound on `int_{xi*}^inf (lambda - St_s) xi^{2s-2} * c`; the gap decays like
/// `St_s'/2`.
fn symbol_gap_tail(params: &FracParams, xi_star: f64) -> Result<f64> {
    let s = params.s();
    Ok(ds_tilde(params, xi_star)? * xi_star.powf(2.0 * s - 1.0) / (1.0 - 2.0 * s))
}

/// `T_s(h)` for `s < 1/2` and half-width `h > 0`.
pub fn t_s(s: f64, h: f64) -> Result<QuadResult> {
    t_s_with(s, h, &TsConfig::default())
}

pub fn t_s_with(s: f64, h: f64, cfg: &TsConfig) -> Result<QuadResult> {
    let params = check_subcritical("t_s", s)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain("t_s", format!("half-width {h} must be positive")));
    }
    if !(cfg.xi_star >= 1.0) {
        return Err(Error::usage("t_s split point must be at least 1"));
    }
    let xs = cfg.xi_star;
    // Head: panels no wider than an eighth of the period pi/h of sin^2(h xi).
    let width = (PI / (8.0 * h)).min(1.0);
    let panels = (xs / width).ceil() as usize;
    let pts: Vec<f64> = (0..=panels).map(|i| (i as f64 * width).min(xs)).collect();
    let qcfg = QuadConfig { abs_tol: 0.0, rel_tol: cfg.rel_tol, max_subdivisions: 20 * panels + 2000 };
    let head = integrate_with_breaks(
        |xi: f64| {
            if xi == 0.0 {
                return 0.0;
            }
            let sn = (h * xi).sin();
            8.0 * s_tilde(&params, xi).unwrap_or(0.0) * sn * sn * xi.powf(2.0 * s - 2.0)
        },
        &pts,
        &qcfg,
    )?;
    // Tail with St = lambda: 8 lambda int sin^2(h xi) xi^{2s-2}
    //   = 4 lambda (2h)^{1-2s} int_{2h xi*}^inf (1 - cos t) t^{2s-2} dt.
    let beta = 2.0 - 2.0 * s;
    let omega = 2.0 * h;
    let g = one_minus_cos_tail(beta, omega * xs, &QuadConfig::with_tolerances(0.0, cfg.rel_tol))?;
    let tail = g.scale(4.0 * params.lambda() * omega.powf(1.0 - 2.0 * s));
    let gap = 8.0 * symbol_gap_tail(&params, xs)?;
    Ok(QuadResult {
        value: head.value + tail.value,
        abs_error: head.abs_error + tail.abs_error + gap,
        evaluations: head.evaluations + tail.evaluations,
    })
}

/// Large-`h` limit of `T_s`: `4 int_0^inf St_s(xi) xi^{2s-2} d xi`.
pub fn plateau_constant(s: f64) -> Result<QuadResult> {
    plateau_constant_with_cutoff(s, 20.0)
}

pub fn plateau_constant_with_cutoff(s: f64, xi_star: f64) -> Result<QuadResult> {
    let params = check_subcritical("plateau_constant", s)?;
    if !(xi_star >= 1.0) || !xi_star.is_finite() {
        return Err(Error::usage("plateau cutoff must be at least 1"));
    }
    let mut pts = vec![0.0];
    pts.extend([0.5, 1.0, 2.0, 4.0, 8.0, 16.0].iter().copied().filter(|&p| p < xi_star));
    pts.push(xi_star);
    let head = integrate_with_breaks(
        |xi: f64| {
            if xi == 0.0 {
                // St ~ xi^{2-2s} / (2(1-s)) near 0.
                return 4.0 * params.small_r_constant();
            }
            4.0 * s_tilde(&params, xi).unwrap_or(0.0) * xi.powf(2.0 * s - 2.0)
        },
        &pts,
        &QuadConfig::with_tolerances(0.0, 1e-12),
    )?;
    let tail = 4.0 * params.lambda() * xi_star.powf(2.0 * s - 1.0) / (1.0 - 2.0 * s);
    let gap = 4.0 * symbol_gap_tail(&params, xi_star)?;
    Ok(QuadResult {
        value: head.value + tail,
        abs_error: head.abs_error + gap + 1e-15 * tail,
        evaluations: head.evaluations,
    })
}

/// `H^s` seminorm of the indicator of an interval of half-width `h`:
/// `(2 C(1,s)^{-1} / 2pi) int |xi|^{2s} 4 sin^2(h xi)/xi^2 d xi`, exactly
/// homogeneous of degree `1 - 2s`.
pub fn fractional_perimeter_interval(s: f64, h: f64) -> Result<f64> {
    check_subcritical("fractional_perimeter_interval", s)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain("fractional_perimeter_interval", format!("half-width {h} must be positive")));
    }
    // int_0^inf eta^{2s-2} sin^2(eta) = 2^{-2s} int_0^inf (1 - cos t) t^{2s-2} dt
    let j =
        2f64.powf(-2.0 * s) * one_minus_cos_integral(2.0 - 2.0 * s, &QuadConfig::with_tolerances(1e-15, 1e-13))?.value;
    let c_inv = 1.0 / c_constant_closed_form(1, s)?;
    Ok(2.0 * c_inv / (2.0 * PI) * 8.0 * h.powf(1.0 - 2.0 * s) * j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsRow {
    pub h: f64,
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TsCurve {
    pub s: f64,
    pub rows: Vec<TsRow>,
}

/// `T_s` on `points` log-spaced half-widths; rows run independently.
pub fn ts_curve(s: f64, h_min: f64, h_max: f64, points: usize, exec: Exec) -> Result<TsCurve> {
    check_subcritical("ts_curve", s)?;
    if !(h_min > 0.0 && h_max > h_min && h_max.is_finite()) {
        return Err(Error::usage(format!("need 0 < h_min < h_max, got [{h_min}, {h_max}]")));
    }
    if points < 2 {
        return Err(Error::usage("ts curve needs at least 2 points"));
    }
    let hs = logspace(h_min, h_max, points);
    let rows = exec::try_map_indexed(exec, hs.len(), |i| {
        let q = t_s(s, hs[i])?;
        Ok::<_, Error>(TsRow { h: hs[i], value: q.value, abs_error: q.abs_error, evaluations: q.evaluations })
    })?;
    Ok(TsCurve { s, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragingResult {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `int f sin^2(omega x)` with `1/2 int f` by the rectangle rule on
/// uniformly spaced samples.
pub fn averaging_check(xs: &[f64], fs: &[f64], omega: f64) -> Result<AveragingResult> {
    if xs.len() != fs.len() || xs.len() < 2 {
        return Err(Error::usage("averaging check needs two or more paired samples"));
    }
    let dx = xs[1] - xs[0];
    if !(dx > 0.0) || xs.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx) {
        return Err(Error::usage("averaging check needs a uniform increasing grid"));
    }
    if !omega.is_finite() || fs.iter().any(|f| !f.is_finite()) {
        return Err(Error::domain("averaging_check", "inputs must be finite"));
    }
    let lhs: f64 = xs
        .iter()
        .zip(fs)
        .map(|(&x, &f)| {
            let sn = (omega * x).sin();
            f * sn * sn
        })
        .sum::<f64>()
        * dx;
    let rhs = 0.5 * fs.iter().sum::<f64>() * dx;
    Ok(AveragingResult { lhs, rhs, gap: (lhs - rhs).abs() })
}

fn check_line(grid: &PeriodicGrid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::usage("phase-transition experiments run on 1D grids"));
    }
    Ok(())
}

/// Exact 0/1 samples of the indicator of the interval.
pub fn indicator_field(interval: &IntervalSpec, grid: PeriodicGrid) -> Result<Field> {
    check_line(&grid)?;
    Field::from_fn(grid, |x| if interval.contains(x[0]) { 1.0 } else { 0.0 })
}

/// Heteroclinic stand-in `(1 + tanh t) / 2`.
pub fn heteroclinic_profile(t: f64) -> f64 {
    0.5 * (1.0 + t.tanh())
}

/// `u(x) = u0(d(x) / eps)` with `d` the signed distance to the interval
/// boundary. The interval must stay `4 eps` away from the grid edges.
pub fn recovery_sequence(interval: &IntervalSpec, epsilon: f64, grid: PeriodicGrid) -> Result<Field> {
    check_line(&grid)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain("recovery_sequence", format!("epsilon = {epsilon} must be positive")));
    }
    let half = 0.5 * grid.length();
    let margin = 4.0 * epsilon;
    if interval.center - interval.half_width - margin < -half || interval.center + interval.half_width + margin > half {
        return Err(Error::usage(format!(
            "interval [{}, {}] needs margin {margin} inside [-{half}, {half})",
            interval.center - interval.half_width,
            interval.center + interval.half_width
        )));
    }
    Field::from_fn(grid, |x| heteroclinic_profile(interval.signed_distance(x[0]) / epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Initial step; `None` picks one from the stiffness of the gradient.
    pub step: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub max_backtracks: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { step: None, max_iter: 20_000, tol: 1e-10, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeRun {
    pub s: f64,
    pub epsilon: f64,
    #[serde(skip)]
    pub field: Field,
    pub energy_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MinimizeRun {
    /// Fraction of samples within `delta` of 0 or 1.
    pub fn fraction_near_wells(&self, delta: f64) -> f64 {
        let v = &self.field.values;
        v.iter().filter(|&&u| u <= delta || u >= 1.0 - delta).count() as f64 / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeTrace {
    pub s: f64,
    pub epsilons: Vec<f64>,
    pub runs: Vec<MinimizeRun>,
}

/// Step `1 / L` with `L` a bound on the Lipschitz constant of the gradient.
pub fn stable_step(op: &SpectralOperator, params: &FracParams, epsilon: f64, dim: usize) -> Result<f64> {
    let weight = rescale_weight(params, epsilon)?;
    let m = op.multiplier().iter().copied().fold(0.0, f64::max);
    let c = interaction_coefficient(params, epsilon) * 2.0 * (2.0 * PI).powi(dim as i32);
    // |W''| <= 2 on [0, 1].
    Ok(1.0 / (c * m + 2.0 * weight))
}

fn project(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Projected gradient descent with step halving on any energy increase.
pub fn minimize_f_epsilon(
    initial: &Field,
    params: &FracParams,
    epsilon: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizeRun> {
    if !initial.in_unit_box() {
        return Err(Error::domain("minimize_f_epsilon", "initial field must lie in [0, 1]"));
    }
    if let Some(step) = opts.step {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::usage(format!("step {step} must be positive")));
        }
    }
    let op = SpectralOperator::new(initial.grid, params, Operator::SlabDtn)?;
    let mut step = match opts.step {
        Some(s) => s,
        None => stable_step(&op, params, epsilon, initial.grid.dim())?,
    };
    let mut u = initial.clone();
    let mut energy = f_epsilon_with(&op, &u, params, epsilon)?.total;
    let mut history = vec![energy];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let grad = f_epsilon_gradient(&op, &u, params, epsilon)?;
        let mut accepted = None;
        let mut rejected_increase = 0.0;
        for _ in 0..=opts.max_backtracks {
            let values: Vec<f64> = u.values.iter().zip(&grad).map(|(&v, &g)| project(v - step * g)).collect();
            let trial = Field::new(u.grid, values)?;
            let e = f_epsilon_with(&op, &trial, params, epsilon)?.total;
            if e <= energy {
                accepted = Some((trial, e));
                break;
            }
            rejected_increase = e - energy;
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((trial, e)) => {
                let decrease = energy - e;
                u = trial;
                energy = e;
                history.push(energy);
                if decrease <= opts.tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // Only rounding-level increases remain: a stationary point.
                if rejected_increase <= opts.tol.max(1e-12 * energy.abs()) {
                    converged = true;
                    break;
                }
                return Err(Error::numeric(
                    "minimize_f_epsilon",
                    format!(
                        "no descent after {} step halvings at iteration {iterations}; energy history {:?}",
                        opts.max_backtracks,
                        &history[history.len().saturating_sub(5)..]
                    ),
                ));
            }
        }
    }
    Ok(MinimizeRun { s: params.s(), epsilon, field: u, energy_history: history, iterations, converged })
}

/// Independent minimizations from a common start, one per epsilon.
pub fn minimize_sweep(
    initial: &Field,
    params: &FracParams,
    epsilons: &[f64],
    opts: &MinimizeOptions,
    exec: Exec,
) -> Result<MinimizeTrace> {
    check_decreasing(epsilons)?;
    let runs = exec::try_map_indexed(exec, epsilons.len(), |i| minimize_f_epsilon(initial, params, epsilons[i], opts))?;
    Ok(MinimizeTrace { s: params.s(), epsilons: epsilons.to_vec(), runs })
}

fn check_decreasing(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::usage("need at least one epsilon"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::usage("epsilons must be strictly decreasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimsupRow {
    pub epsilon: f64,
    pub report: EnergyReport,
}

/// Energies along the recovery sequence: the indicator itself for `s < 1/2`,
/// the rescaled heteroclinic profile otherwise.
pub fn limsup_trend(
    interval: &IntervalSpec,
    params: &FracParams,
    epsilons: &[f64],
    grid: PeriodicGrid,
    exec: Exec,
) -> Result<Vec<LimsupRow>> {
    check_decreasing(epsilons)?;
    check_line(&grid)?;
    let op = SpectralOperator::new(grid, params, Operator::SlabDtn)?;
    let indicator = match params.regime() {
        Regime::Subcritical => Some(indicator_field(interval, grid)?),
        _ => None,
    };
    exec::try_map_indexed(exec, epsilons.len(), |i| {
        let eps = epsilons[i];
        let field = match &indicator {
            Some(f) => f.clone(),
            None => recovery_sequence(interval, eps, grid)?,
        };
        Ok(LimsupRow { epsilon: eps, report: f_epsilon_with(&op, &field, params, eps)? })
    })
}

/// `|E_last - E_prev| / |E_prev|` for the two smallest epsilons.
pub fn last_pair_change(rows: &[LimsupRow]) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (rows[n - 2].report.total, rows[n - 1].report.total);
    Some((b - a).abs() / a.abs())
}
