//! Gamma function and modified Bessel functions `I_nu` of real order.
//!
//! Only the orders the slab symbol needs are supported: `nu` in `(-1, 2)`.
//! `I_nu(x)` is summed from its power series for `x <= 15` and from the
//! Hankel asymptotic expansion (truncated at its smallest term) beyond, where
//! the exponentially scaled form `e^{-x} I_nu(x)` is the primary quantity.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Series/asymptotic switch point. `max(15, 10 + nu^2)` is 15 on the whole
/// supported order range.
const X_SWITCH: f64 = 15.0;

const SERIES_REL_TOL: f64 = 1e-17;
const MAX_SERIES_TERMS: usize = 500;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// The Gamma function.
///
/// Nonpositive integers are poles and are rejected.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("gamma", format!("non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::domain("gamma", format!("pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// A validated Bessel order `nu` in `(-1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -1.0 && nu < 2.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::domain("bessel_order", format!("order {nu} outside (-1, 2)")))
        }
    }

    pub fn nu(self) -> f64 {
        self.0
    }
}

/// `e^{-x} I_nu(x)` together with its argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBessel {
    pub value_scaled: f64,
    pub x: f64,
}

impl ScaledBessel {
    /// `I_nu(x)`; overflows to infinity past `x ~ 709`.
    pub fn unscaled(&self) -> f64 {
        self.value_scaled * self.x.exp()
    }

    pub fn ln_unscaled(&self) -> f64 {
        self.value_scaled.ln() + self.x
    }
}

/// Power series `sum_k (x/2)^{2k+nu} / (k! Gamma(k+nu+1))`. All terms are
/// positive for `nu > -1`, so the sum is free of cancellation.
fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = (nu * half.ln()).exp() / gamma_unchecked(nu + 1.0);
    let mut sum = term;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term < SERIES_REL_TOL * sum {
            break;
        }
    }
    sum
}

/// Hankel expansion of `e^{-x} I_nu(x)`, truncated before the terms start
/// growing.
fn asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 1..MAX_SERIES_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Modified Bessel function of the first kind, `I_nu(x)`.
///
/// `x = 0` is allowed only for `nu >= 0` (`I_nu` diverges at the origin for
/// negative order).
pub fn bessel_i(order: BesselOrder, x: f64) -> Result<f64> {
    let nu = order.nu();
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_i", format!("argument {x} < 0")));
    }
    if x == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::domain("bessel_i", format!("I_{nu}(0) diverges for negative order")))
        };
    }
    if x <= X_SWITCH {
        Ok(series(nu, x))
    } else {
        Ok(asymptotic_scaled(nu, x) * x.exp())
    }
}

/// Exponentially scaled `e^{-x} I_nu(x)`, finite for every `x > 0`.
pub fn bessel_i_scaled(order: BesselOrder, x: f64) -> Result<ScaledBessel> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_i_scaled", format!("argument {x} must be positive")));
    }
    let value_scaled =
        if x <= X_SWITCH { series(order.nu(), x) * (-x).exp() } else { asymptotic_scaled(order.nu(), x) };
    Ok(ScaledBessel { value_scaled, x })
}

/// `I_{nu_num}(x) / I_{nu_den}(x)`; the exponential factors cancel so the
/// ratio stays finite for arbitrarily large `x`.
pub fn bessel_ratio(nu_num: BesselOrder, nu_den: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_ratio", format!("argument {x} must be positive")));
    }
    if x <= X_SWITCH {
        Ok(series(nu_num.nu(), x) / series(nu_den.nu(), x))
    } else {
        Ok(asymptotic_scaled(nu_num.nu(), x) / asymptotic_scaled(nu_den.nu(), x))
    }
}
