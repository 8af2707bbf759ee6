//! Independent reference computations used to cross-check the main routines.
//! Each one takes a different numerical path from the quantity it validates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gamma_lab::IntervalSpec;
use crate::quad::{integrate_with_breaks, QuadConfig, QuadResult};
use crate::spectral_field::Field;
use crate::symbol::{ds_tilde, sphere_measure, FracParams};

/// Correction constant by exchanging the order of integration:
/// `omega int_0^inf (lambda - St(r)) r^{n-1+2s} dr = omega/(n+2s) int_0^inf St'(t) t^{n+2s} dt`.
pub fn correction_constant_fubini(params: &FracParams, dim: usize) -> Result<QuadResult> {
    if dim != 1 && dim != 2 {
        return Err(Error::usage(format!("dimension {dim} not in {{1, 2}}")));
    }
    let omega = sphere_measure(dim);
    let p = dim as f64 + 2.0 * params.s();
    let mut pts: Vec<f64> = (0..=16).map(|k| k as f64 * 0.25).collect();
    pts.extend((5..=60).map(|k| k as f64));
    let q = integrate_with_breaks(
        |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            ds_tilde(params, t).unwrap_or(0.0) * t.powf(p)
        },
        &pts,
        &QuadConfig::with_tolerances(1e-15, 1e-12),
    )?;
    Ok(q.scale(omega / p))
}

/// Brute-force `int int |u(x)-u(y)|^2 / |x-y|^{1+2s}` on a 1D grid, treating
/// `u` as zero outside `[-L/2, L/2)`.
///
/// Off-diagonal cells use the midpoint rule; the diagonal cells use the local
/// quadratic expansion `u'(x)^2 |x-y|^2`; the exterior contributes
/// `2 u(x)^2 int_{outside} |x-y|^{-1-2s} dy` in closed form.
pub fn hs_double_sum(field: &Field, s: f64) -> Result<f64> {
    if field.grid.dim() != 1 {
        return Err(Error::usage("double-sum oracle is one-dimensional"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain("hs_double_sum", format!("s = {s} outside (0, 1)")));
    }
    let u = &field.values;
    let n = u.len();
    let dx = field.grid.spacing();
    let half = 0.5 * field.grid.length();
    let xs = field.grid.nodes();
    let e = 1.0 + 2.0 * s;
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = u[i] - u[j];
            if d != 0.0 {
                total += 2.0 * d * d / (((j - i) as f64) * dx).powf(e);
            }
        }
    }
    total *= dx * dx;
    let self_cell = 2.0 * dx.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
    for i in 0..n {
        let du = (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * dx);
        total += du * du * self_cell;
        // Cells are centered on nodes, so the sampled domain is shifted by dx/2.
        let (lo, hi) = (xs[i] + half + 0.5 * dx, half - 0.5 * dx - xs[i]);
        total += 2.0 * u[i] * u[i] * dx * (lo.powf(-2.0 * s) + hi.powf(-2.0 * s)) / (2.0 * s);
    }
    Ok(total)
}

/// `|int_{c-h}^{c+h} e^{-i x xi} dx|^2` by adaptive quadrature of the real and
/// imaginary parts.
pub fn indicator_transform_direct(spec: &IntervalSpec, xi: f64) -> Result<f64> {
    let (a, b) = (spec.center - spec.half_width, spec.center + spec.half_width);
    let width = if xi == 0.0 { b - a } else { (PI / (4.0 * xi.abs())).min(b - a) };
    let panels = ((b - a) / width).ceil() as usize;
    let pts: Vec<f64> =
        (0..=panels).map(|k| if k == panels { b } else { a + k as f64 * (b - a) / panels as f64 }).collect();
    let cfg = QuadConfig::with_tolerances(1e-13, 1e-12);
    let re = integrate_with_breaks(|x: f64| (x * xi).cos(), &pts, &cfg)?;
    let im = integrate_with_breaks(|x: f64| -(x * xi).sin(), &pts, &cfg)?;
    Ok(re.value * re.value + im.value * im.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_lab::indicator_spectrum_sq;
    use crate::spectral_field::{hs_seminorm_sq, PeriodicGrid};
    use crate::symbol::correction_constant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fubini_matches_direct_correction() {
        for s in [0.25, 0.5, 0.75] {
            for dim in [1, 2] {
                let p = FracParams::new(s).unwrap();
                let a = correction_constant(&p, dim).unwrap().value;
                let b = correction_constant_fubini(&p, dim).unwrap().value;
                assert!(((a - b) / b).abs() <= 1e-9, "s={s} dim={dim}: {a} vs {b}");
            }
        }
        let half = correction_constant_fubini(&FracParams::new(0.5).unwrap(), 1).unwrap().value;
        assert!((half - PI * PI / 12.0).abs() <= 1e-10);
    }

    #[test]
    fn double_sum_matches_spectral_seminorm() {
        let g = PeriodicGrid::line(16.0, 256).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
        for s in [0.3, 0.6] {
            let p = FracParams::new(s).unwrap();
            let spectral = hs_seminorm_sq(&u, &p).unwrap();
            let direct = hs_double_sum(&u, s).unwrap();
            assert!(((spectral - direct) / direct).abs() <= 0.05, "s={s}: {spectral} vs {direct}");
        }
    }

    #[test]
    fn indicator_transform_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spec = IntervalSpec::new(rng.random_range(-3.0..3.0), rng.random_range(0.05..3.0)).unwrap();
            let xi = rng.random_range(-20.0..20.0);
            let want = indicator_spectrum_sq(&spec, xi);
            let got = indicator_transform_direct(&spec, xi).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{got} vs {want}");
        }
    }
}
