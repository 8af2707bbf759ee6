//! The slab Dirichlet-to-Neumann symbol.
//!
//! For a slab of unit height with weight `y^a`, the operator acts on Fourier
//! modes as multiplication by `S_s(r) = r^{2s} St_s(r)` where
//!
//! ```text
//! St_s(r) = lambda(s) * I_{1-s}(r) / I_{s-1}(r),   lambda(s) = 2^{1-2s} Gamma(1-s) / Gamma(s).
//! ```
//!
//! `St_s` increases from 0 to `lambda(s)`; its derivative has the closed form
//! `kappa(s) / (r I_{s-1}(r)^2)` with `kappa(s) = 2^{2-2s} / Gamma(s)^2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::quad::{integrate, QuadConfig, QuadResult};
use crate::specfun::{bessel_i_scaled, bessel_ratio, gamma, BesselOrder};

/// Which side of `s = 1/2` a parameter lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Nonlocality parameter `s` in `(0, 1)` together with the weight exponent
/// `a = 1 - 2s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    s: f64,
    a: f64,
    #[serde(skip)]
    lambda: f64,
    #[serde(skip)]
    kappa: f64,
    #[serde(skip)]
    nu_num: BesselOrder,
    #[serde(skip)]
    nu_den: BesselOrder,
}

impl Serialize for BesselOrder {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_f64(self.nu())
    }
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::domain("frac_params", format!("s = {s} outside (0, 1)")));
        }
        let g_s = gamma(s)?;
        let lambda = 2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s)? / g_s;
        let kappa = 2f64.powf(2.0 - 2.0 * s) / (g_s * g_s);
        Ok(FracParams {
            s,
            a: 1.0 - 2.0 * s,
            lambda,
            kappa,
            nu_num: BesselOrder::new(1.0 - s)?,
            nu_den: BesselOrder::new(s - 1.0)?,
        })
    }

    /// Builds the parameter from the weight exponent `a` in `(-1, 1)`.
    pub fn from_weight(a: f64) -> Result<Self> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::domain("frac_params", format!("a = {a} outside (-1, 1)")));
        }
        Self::new(0.5 * (1.0 - a))
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Large-frequency limit `lambda(s)` of `St_s`, i.e. `S_s(r) ~ lambda r^{2s}`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Small-frequency constant: `S_s(r) ~ r^2 / (2(1-s))`.
    pub fn small_r_constant(&self) -> f64 {
        0.5 / (1.0 - self.s)
    }

    pub fn regime(&self) -> Regime {
        if self.s < 0.5 {
            Regime::Subcritical
        } else if self.s == 0.5 {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }
}

fn check_r(op: &'static str, r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("frequency {r} must be finite and nonnegative")))
    }
}

/// `St_s(r)`; exactly 0 at `r = 0`.
///
/// Past `r ~ 19` the Bessel ratio rounds to 1 and the value equals
/// `lambda(s)` in double precision.
pub fn s_tilde(params: &FracParams, r: f64) -> Result<f64> {
    check_r("s_tilde", r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(params.lambda * bessel_ratio(params.nu_num, params.nu_den, r)?)
}

/// `S_s(r) = r^{2s} St_s(r)`.
pub fn s_full(params: &FracParams, r: f64) -> Result<f64> {
    let st = s_tilde(params, r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(r.powf(2.0 * params.s) * st)
}

/// Radial derivative of `St_s` for `r > 0`. Decays like `e^{-2r}` and
/// underflows to zero for `r` beyond about 350.
pub fn ds_tilde(params: &FracParams, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("ds_tilde", format!("frequency {r} must be positive")));
    }
    let sc = bessel_i_scaled(params.nu_den, r)?.value_scaled;
    Ok(params.kappa * (-2.0 * r).exp() / (r * sc * sc))
}

/// `r^{2s}`.
pub fn frac_laplacian_symbol(params: &FracParams, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.abs().powf(2.0 * params.s)
    }
}

/// One evaluation of the symbol at a radial frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolSample {
    pub r: f64,
    pub s_tilde: f64,
    pub s_full: f64,
    pub ds_tilde: f64,
}

/// Evaluates all symbol columns at `r`. At `r = 0` the derivative column holds
/// its one-sided limit: 0 for `s < 1/2`, 1 for `s = 1/2`, `+inf` for `s > 1/2`.
pub fn sample(params: &FracParams, r: f64) -> Result<SymbolSample> {
    let st = s_tilde(params, r)?;
    let sf = s_full(params, r)?;
    let ds = if r == 0.0 {
        match params.regime() {
            Regime::Subcritical => 0.0,
            Regime::Critical => 1.0,
            Regime::Supercritical => f64::INFINITY,
        }
    } else {
        ds_tilde(params, r)?
    };
    Ok(SymbolSample { r, s_tilde: st, s_full: sf, ds_tilde: ds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolTable {
    pub params: FracParams,
    pub rows: Vec<SymbolSample>,
    pub spacing: Spacing,
    pub r_min: f64,
    pub r_max: f64,
}

/// Grid of `points` radial frequencies on `[r_min, r_max]`; both endpoints are
/// hit exactly.
pub fn radial_grid(r_min: f64, r_max: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::usage(format!("need 0 <= r_min < r_max, got [{r_min}, {r_max}]")));
    }
    if points < 2 {
        return Err(Error::usage(format!("need at least 2 points, got {points}")));
    }
    if spacing == Spacing::Logarithmic && r_min == 0.0 {
        return Err(Error::usage("logarithmic spacing needs r_min > 0"));
    }
    let last = (points - 1) as f64;
    let mut grid: Vec<f64> = match spacing {
        Spacing::Linear => (0..points).map(|i| r_min + (r_max - r_min) * (i as f64 / last)).collect(),
        Spacing::Logarithmic => {
            let (l0, l1) = (r_min.ln(), r_max.ln());
            (0..points).map(|i| (l0 + (l1 - l0) * (i as f64 / last)).exp()).collect()
        }
    };
    grid[0] = r_min;
    grid[points - 1] = r_max;
    Ok(grid)
}

/// Tabulates the symbol; rows are evaluated independently.
pub fn tabulate(
    params: &FracParams,
    r_min: f64,
    r_max: f64,
    points: usize,
    spacing: Spacing,
    exec: Exec,
) -> Result<SymbolTable> {
    let grid = radial_grid(r_min, r_max, points, spacing)?;
    let rows = exec::try_map_indexed(exec, grid.len(), |i| sample(params, grid[i]))?;
    Ok(SymbolTable { params: *params, rows, spacing, r_min, r_max })
}

/// Surface measure of the unit sphere in `R^dim`, dim in {1, 2}.
pub(crate) fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

fn check_dim(op: &'static str, dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::usage(format!("{op}: dimension {dim} not in {{1, 2}}")))
    }
}

/// Default radial truncation of the correction integral.
pub const CORRECTION_R_MAX: usize = 40;

fn correction_panels(params: &FracParams, dim: usize, r_max: usize) -> Result<QuadResult> {
    let p = dim as f64 - 1.0 + 2.0 * params.s;
    let lambda = params.lambda;
    // Below this the difference is rounding noise of the ratio near 1.
    let noise = 64.0 * f64::EPSILON * lambda;
    let mut acc = QuadResult::zero();
    // Unit panels summed in order: every partial sum is a sum of nonnegative
    // terms, so the result is monotone in the cutoff.
    for k in 0..r_max {
        let (a, b) = (k as f64, (k + 1) as f64);
        // Rounding noise in the gap is amplified by the weight r^p.
        let cfg = QuadConfig::with_tolerances(1e-13 * b.powf(p).max(1.0), 1e-12);
        let panel = integrate(
            |r: f64| {
                if r == 0.0 {
                    return 0.0;
                }
                let gap = lambda - s_tilde(params, r).unwrap_or(lambda);
                if gap <= noise {
                    0.0
                } else {
                    gap * r.powf(p)
                }
            },
            a,
            b,
            &cfg,
        )?;
        acc = acc.combine(QuadResult { value: panel.value.max(0.0), ..panel });
    }
    Ok(acc)
}

/// `omega_{dim-1} * int_0^{r_max} (lambda - St_s(r)) r^{dim-1+2s} dr` with no
/// tail term. Nondecreasing in `r_max`.
pub fn correction_constant_truncated(params: &FracParams, dim: usize, r_max: usize) -> Result<QuadResult> {
    check_dim("correction_constant", dim)?;
    Ok(correction_panels(params, dim, r_max)?.scale(sphere_measure(dim)))
}

/// `int_{R^dim} (lambda(s) - St_s(|xi|)) |xi|^{2s} d xi`, the finite gap
/// between the slab symbol and its fractional-Laplacian asymptote.
///
/// The integrand decays like `e^{-2r}`; beyond `r = 40` the remainder is
/// bounded through `lambda - St_s(r) = int_r^inf St_s'`.
pub fn correction_constant(params: &FracParams, dim: usize) -> Result<QuadResult> {
    check_dim("correction_constant", dim)?;
    let head = correction_panels(params, dim, CORRECTION_R_MAX)?;
    let r = CORRECTION_R_MAX as f64;
    let p = dim as f64 - 1.0 + 2.0 * params.s;
    // lambda - St(r) ~ St'(r)/2 and the tail integral ~ (lambda - St(R)) R^p / 2.
    let tail_bound = ds_tilde(params, r)? * r.powf(p);
    let total = QuadResult {
        value: head.value + 0.25 * tail_bound,
        abs_error: head.abs_error + tail_bound,
        evaluations: head.evaluations,
    };
    let total = total.scale(sphere_measure(dim));
    if !(total.value > 0.0) || !total.value.is_finite() {
        return Err(Error::numeric("correction_constant", format!("nonpositive or non-finite value {}", total.value)));
    }
    Ok(total)
}
