//! The acceptance suite: eleven end-to-end checks, each with a numeric
//! tolerance and a wall-clock budget. A check passes only when its numbers are
//! within tolerance and it finished inside its budget.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::exec::Exec;
use crate::fit::{loglog_slope, logspace};
use crate::gamma_lab::{
    averaging_check, fractional_perimeter_interval, heteroclinic_profile, indicator_field, indicator_spectrum_sq,
    last_pair_change, limsup_trend, minimize_sweep, plateau_constant, t_s, IntervalSpec, MinimizeOptions,
};
use crate::oracles::{correction_constant_fubini, indicator_transform_direct};
use crate::slab_oracle::{convergence_study, extension_field, GradedMesh};
use crate::specfun::{bessel_i, bessel_i_scaled, bessel_ratio, gamma, BesselOrder};
use crate::spectral_field::{apply_operator, dirichlet_energy, f_epsilon, Field, Operator, PeriodicGrid};
use crate::symbol::{correction_constant, s_full, s_tilde, FracParams};

#[derive(Debug, Clone, Copy)]
pub struct CriterionInfo {
    pub id: usize,
    pub name: &'static str,
    pub budget: Duration,
}

const fn info(id: usize, name: &'static str, secs: u64) -> CriterionInfo {
    CriterionInfo { id, name, budget: Duration::from_secs(secs) }
}

pub const CRITERIA: [CriterionInfo; 11] = [
    info(1, "tanh reduction", 1),
    info(2, "symbol asymptotics", 5),
    info(3, "monotonicity and positivity", 5),
    info(4, "ODE oracle agreement", 30),
    info(5, "energy identity", 10),
    info(6, "correction integral", 5),
    info(7, "T_s regimes", 60),
    info(8, "constant-sequence regime", 5),
    info(9, "supercritical trend", 120),
    info(10, "indicator transform and averaging", 5),
    info(11, "special-function substrate", 5),
];

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceRecord {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub within_tolerance: bool,
    pub elapsed_s: f64,
    pub budget_s: f64,
    pub detail: String,
}

impl fmt::Display for AcceptanceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {} ({:.3} s of {} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.budget_s,
            self.detail
        )
    }
}

/// Outcome of one check: overall verdict plus a human-readable summary.
struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into() }
    }
}

pub fn run_criterion(id: usize, exec: Exec) -> Option<AcceptanceRecord> {
    let info = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let result = match id {
        1 => tanh_reduction(),
        2 => symbol_asymptotics(),
        3 => monotonicity(),
        4 => ode_oracle(exec),
        5 => energy_identity(exec),
        6 => correction_integral(),
        7 => ts_regimes(),
        8 => constant_sequence(exec),
        9 => supercritical_trend(exec),
        10 => appendix_lemmas(),
        11 => special_functions(),
        _ => unreachable!("ids come from CRITERIA"),
    };
    let elapsed = start.elapsed();
    let outcome = result.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    let in_budget = elapsed < info.budget;
    let detail = if in_budget { outcome.detail } else { format!("{}; over runtime budget", outcome.detail) };
    Some(AcceptanceRecord {
        id,
        name: info.name,
        passed: outcome.ok && in_budget,
        within_tolerance: outcome.ok,
        elapsed_s: elapsed.as_secs_f64(),
        budget_s: info.budget.as_secs_f64(),
        detail,
    })
}

pub fn run_all(exec: Exec) -> Vec<AcceptanceRecord> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.id, exec)).collect()
}

fn fp(s: f64) -> Result<FracParams> {
    FracParams::new(s)
}

const S_SWEEP: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn tanh_reduction() -> Result<Outcome> {
    let p = fp(0.5)?;
    let mut worst: f64 = 0.0;
    for r in [0.01, 0.1, 1.0, 10.0, 100.0] {
        worst = worst.max((s_tilde(&p, r)? - r.tanh()).abs());
    }
    Ok(Outcome::new(worst <= 1e-12, format!("max |St - tanh| = {worst:.2e}")))
}

fn symbol_asymptotics() -> Result<Outcome> {
    let mut ok = true;
    let mut worst_lo: f64 = 0.0;
    let mut worst_hi: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for s in S_SWEEP {
        let p = fp(s)?;
        let lo = logspace(1e-4, 1e-3, 20);
        let hi = logspace(1e2, 1e3, 20);
        let y_lo = lo.iter().map(|&r| s_full(&p, r)).collect::<Result<Vec<_>>>()?;
        let y_hi = hi.iter().map(|&r| s_full(&p, r)).collect::<Result<Vec<_>>>()?;
        let d_lo = (loglog_slope(&lo, &y_lo)? - 2.0).abs();
        let d_hi = (loglog_slope(&hi, &y_hi)? - 2.0 * s).abs();
        // Leading series terms of I_{1-s} and I_{s-1} give the small-r constant.
        let series = p.lambda() * 2f64.powf(2.0 * s - 2.0) * gamma(s)? / gamma(2.0 - s)?;
        let c1 = 1.0 / (2.0 * (1.0 - s));
        let d_oracle = ((series - c1) / c1).abs();
        let d_const = ((s_full(&p, 1e-4)? / 1e-8 - c1) / c1).abs();
        ok &= d_lo <= 0.01 && d_hi <= 0.01 && d_oracle <= 1e-12 && d_const <= 1e-3;
        worst_lo = worst_lo.max(d_lo);
        worst_hi = worst_hi.max(d_hi);
        worst_const = worst_const.max(d_const);
        worst_oracle = worst_oracle.max(d_oracle);
    }
    Ok(Outcome::new(
        ok,
        format!(
            "slope dev small r {worst_lo:.1e}, large r {worst_hi:.1e}; series-oracle dev {worst_oracle:.1e}; S/r^2 dev {worst_const:.1e}"
        ),
    ))
}

fn monotonicity() -> Result<Outcome> {
    let rs = logspace(1e-3, 1e3, 500);
    let mut bad = 0;
    for s in S_SWEEP {
        let p = fp(s)?;
        let vals = rs.iter().map(|&r| s_full(&p, r)).collect::<Result<Vec<_>>>()?;
        bad += vals.iter().filter(|&&v| !(v > 0.0)).count();
        bad += vals.windows(2).filter(|w| !(w[1] > w[0])).count();
    }
    Ok(Outcome::new(bad == 0, format!("{bad} violations over 5 x 500 samples")))
}

/// Errors below this are at the rounding floor of the solver and carry no
/// information about the convergence order.
const ORDER_FLOOR: f64 = 1e-10;

fn ode_oracle(exec: Exec) -> Result<Outcome> {
    let sizes = [256, 512, 1024, 2048, 4096];
    let mut ok = true;
    let mut worst_err: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    let mut floored = 0;
    for s in [0.25, 0.5, 0.75] {
        let p = fp(s)?;
        for r in [0.1, 1.0, 10.0] {
            let rows = convergence_study(&p, r, &sizes, exec)?;
            let last = rows.last().expect("nonempty sizes");
            worst_err = worst_err.max(last.error);
            ok &= last.error <= 1e-5;
            let resolved: Vec<_> = rows.iter().filter(|row| row.error > ORDER_FLOOR).copied().collect();
            match crate::slab_oracle::empirical_order(&resolved) {
                Some(order) => {
                    min_order = min_order.min(order);
                    ok &= order >= 1.5;
                }
                None => {
                    floored += 1;
                    ok &= rows.iter().all(|row| row.error <= 100.0 * ORDER_FLOOR);
                }
            }
        }
    }
    Ok(Outcome::new(
        ok,
        format!("max rel error at M=4096 {worst_err:.2e}; min order {min_order:.3}; {floored} cases at rounding floor"),
    ))
}

fn energy_identity(exec: Exec) -> Result<Outcome> {
    use rand::{Rng, SeedableRng};
    let p = fp(0.4)?;
    let grid = PeriodicGrid::line(10.0, 256)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = Field::new(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let e = dirichlet_energy(&f, &p)?;
        let lu = apply_operator(&f, &p, Operator::SlabDtn)?;
        let direct = 0.5 * grid.cell_volume() * f.values.iter().zip(&lu.values).map(|(a, b)| a * b).sum::<f64>();
        worst = worst.max(((e - direct) / e).abs());
    }
    let mut worst_mode: f64 = 0.0;
    for s in [0.25, 0.5, 0.75] {
        let p = fp(s)?;
        let modes = [(0.5, 1.0), (2.0, -0.7), (7.0, 0.3)];
        let ext = extension_field(&p, &modes, GradedMesh::for_params(&p, 4096)?, exec)?;
        for ((r, amp), e) in modes.iter().zip(&ext.mode_energies) {
            let want = 0.5 * s_full(&p, *r)? * amp * amp;
            worst_mode = worst_mode.max(((e - want) / want).abs());
        }
    }
    Ok(Outcome::new(
        worst <= 1e-10 && worst_mode <= 1e-5,
        format!("Plancherel max rel dev {worst:.1e} (50 fields); mode energy max rel dev {worst_mode:.1e} at M=4096"),
    ))
}

fn correction_integral() -> Result<Outcome> {
    let half = fp(0.5)?;
    let target = PI * PI / 12.0;
    let oracle = correction_constant_fubini(&half, 1)?.value;
    let oracle_dev = ((oracle - target) / target).abs();
    let value = correction_constant(&half, 1)?.value;
    let dev = ((value - target) / target).abs();
    let mut others = Vec::new();
    for s in [0.25, 0.75] {
        others.push(correction_constant(&fp(s)?, 1)?.value);
    }
    let ok = oracle_dev <= 1e-8 && dev <= 1e-8 && others.iter().all(|v| v.is_finite() && *v > 0.0);
    Ok(Outcome::new(
        ok,
        format!(
            "s=1/2 rel dev {dev:.1e} (oracle {oracle_dev:.1e}); s=0.25 -> {:.10}, s=0.75 -> {:.10}",
            others[0], others[1]
        ),
    ))
}

fn ts_regimes() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.1, 0.25, 0.4] {
        let hs = logspace(1e-4, 1e-3, 6);
        let vals = hs.iter().map(|&h| Ok(t_s(s, h)?.value)).collect::<Result<Vec<_>>>()?;
        let slope = loglog_slope(&hs, &vals)?;
        let plateau = plateau_constant(s)?.value;
        let far = t_s(s, 1e3)?.value;
        let plateau_dev = ((far - plateau) / plateau).abs();
        let ratio = |h: f64| -> Result<f64> { Ok(t_s(s, h)?.value / fractional_perimeter_interval(s, h)?) };
        // Near 0 the ratio settles to a constant; far out it decays like h^{-(1-2s)}.
        let (r0, r1) = (ratio(1e-4)?, ratio(1e-3)?);
        let far_ratios = [1.0, 10.0, 100.0, 1e3].map(ratio);
        let far_ratios = far_ratios.into_iter().collect::<Result<Vec<_>>>()?;
        let near_dev = ((r1 - r0) / r0).abs();
        let decreasing = far_ratios.windows(2).all(|w| w[1] < w[0]);
        let decay = far_ratios[3] / far_ratios[2];
        let decay_dev = (decay / 10f64.powf(-(1.0 - 2.0 * s)) - 1.0).abs();
        let this = (slope - (1.0 - 2.0 * s)).abs() <= 0.02
            && plateau_dev <= 0.01
            && near_dev <= 0.01
            && decreasing
            && decay_dev <= 0.02;
        ok &= this;
        parts.push(format!(
            "s={s}: slope {slope:.4}, plateau dev {plateau_dev:.1e}, ratio near 0 {r0:.4}, ratio(1e3) {:.2e}",
            far_ratios[3]
        ));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn constant_sequence(exec: Exec) -> Result<Outcome> {
    let p = fp(0.3)?;
    let grid = PeriodicGrid::line(8.0, 1024)?;
    let iv = IntervalSpec::new(0.0, 1.0)?;
    let chi = indicator_field(&iv, grid)?;
    let rows = limsup_trend(&iv, &p, &[0.1, 0.01, 0.001], grid, exec)?;
    let base = rows[0].report.total;
    let spread = rows.iter().map(|r| (r.report.total - base).abs()).fold(0.0, f64::max) / base.abs();
    // Also confirm against a direct evaluation on the sharp indicator.
    let direct = f_epsilon(&chi, &p, 0.5)?.total;
    let ok = spread <= 1e-12 && ((direct - base) / base).abs() <= 1e-12;
    Ok(Outcome::new(ok, format!("F_eps(chi) = {base:.12}; relative spread {spread:.1e}")))
}

fn supercritical_trend(exec: Exec) -> Result<Outcome> {
    let p = fp(0.75)?;
    let iv = IntervalSpec::new(0.0, 1.0)?;
    let fine = PeriodicGrid::line(8.0, 8192)?;
    let rows = limsup_trend(&iv, &p, &[0.1, 0.05, 0.025, 0.0125], fine, exec)?;
    let change = last_pair_change(&rows).expect("four rows");
    let bounded = rows.iter().all(|r| r.report.total.is_finite() && r.report.total > 0.0);

    let grid = PeriodicGrid::line(8.0, 256)?;
    let start = IntervalSpec::new(0.0, 1.5)?;
    let init = Field::from_fn(grid, |x| heteroclinic_profile(start.signed_distance(x[0]) / 0.3))?;
    let trace = minimize_sweep(&init, &p, &[0.1, 0.05], &MinimizeOptions::default(), exec)?;
    let fractions: Vec<f64> = trace.runs.iter().map(|r| r.fraction_near_wells(0.05)).collect();
    let monotone =
        trace.runs.iter().all(|r| r.energy_history.windows(2).all(|w| w[1] <= w[0]) && r.field.in_unit_box());
    let ok = change <= 0.10 && bounded && monotone && fractions.iter().all(|&f| f >= 0.9);
    let energies: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.report.total)).collect();
    Ok(Outcome::new(
        ok,
        format!(
            "F_eps(u_eps) = [{}], last-pair change {:.1}%; minimizer fractions near wells {:?}",
            energies.join(", "),
            100.0 * change,
            fractions
        ),
    ))
}

fn appendix_lemmas() -> Result<Outcome> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let spec = IntervalSpec::new(rng.random_range(-2.0..2.0), rng.random_range(0.05..3.0))?;
        let xi = rng.random_range(-25.0..25.0);
        let want = indicator_spectrum_sq(&spec, xi);
        worst = worst.max((indicator_transform_direct(&spec, xi)? - want).abs());
    }
    let n = 1 << 16;
    let half = 8.0;
    let dx = 2.0 * half / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -half + i as f64 * dx).collect();
    let fs: Vec<f64> = xs.iter().map(|x| (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).collect();
    let avg = averaging_check(&xs, &fs, 100.0)?;
    Ok(Outcome::new(
        worst <= 1e-10 && avg.gap <= 1e-3,
        format!(
            "indicator transform max abs dev {worst:.1e}; averaging gap at omega=100: {:.1e} (rhs {:.6})",
            avg.gap, avg.rhs
        ),
    ))
}

fn special_functions() -> Result<Outcome> {
    let half = BesselOrder::new(0.5)?;
    let mhalf = BesselOrder::new(-0.5)?;
    let mut closed: f64 = 0.0;
    for x in [0.5, 1.0, 5.0, 10.0, 20.0] {
        let pref = (2.0 / (PI * x)).sqrt();
        closed = closed.max(((bessel_i(half, x)? - pref * x.sinh()) / (pref * x.sinh())).abs());
        closed = closed.max(((bessel_i(mhalf, x)? - pref * x.cosh()) / (pref * x.cosh())).abs());
    }
    for x in [0.1, 1.0, 10.0, 100.0] {
        closed = closed.max((bessel_ratio(half, mhalf, x)? - x.tanh()).abs());
    }
    let mut recurrence: f64 = 0.0;
    for nu in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let (lo, mid, hi) = (BesselOrder::new(nu - 1.0)?, BesselOrder::new(nu)?, BesselOrder::new(nu + 1.0)?);
        for x in [0.05, 0.5, 2.0, 10.0, 14.0, 16.0, 30.0, 50.0] {
            let lhs = bessel_i(lo, x)? - bessel_i(hi, x)?;
            let rhs = 2.0 * nu / x * bessel_i(mid, x)?;
            recurrence = recurrence.max(((lhs - rhs) / rhs).abs());
        }
    }
    let mut scaled: f64 = 0.0;
    for nu in [-0.75, -0.25, 0.25, 0.5, 1.5] {
        let o = BesselOrder::new(nu)?;
        for x in [0.01, 0.5, 3.0, 10.0, 15.0, 17.5, 20.0] {
            let direct = bessel_i(o, x)?;
            let via = x.exp() * bessel_i_scaled(o, x)?.value_scaled;
            scaled = scaled.max(((direct - via) / direct).abs());
        }
    }
    Ok(Outcome::new(
        closed <= 1e-12 && recurrence <= 1e-10 && scaled <= 1e-12,
        format!("closed forms {closed:.1e}; recurrence {recurrence:.1e}; scaled/unscaled {scaled:.1e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_contiguous() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.id, i + 1);
        }
        assert!(run_criterion(0, Exec::Sequential).is_none());
        assert!(run_criterion(12, Exec::Sequential).is_none());
    }

    #[test]
    fn record_line_format() {
        let rec = run_criterion(1, Exec::Sequential).unwrap();
        let line = rec.to_string();
        assert!(line.starts_with("PASS [ 1] tanh reduction"), "{line}");
    }
}
