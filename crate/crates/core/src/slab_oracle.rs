//! Finite-difference oracle for the slab symbol.
//!
//! A single Fourier mode `v(y)` of the extension solves the degenerate
//! two-point problem
//!
//! ```text
//! (y^a v')' = r^2 y^a v  on (0, 1),   v(0) = 1,   v'(1) = 0,
//! ```
//!
//! and the symbol is the weighted Neumann value `-lim_{y->0} y^a v'(y)`. This
//! module discretizes the self-adjoint form with exact-flux weights on a mesh
//! graded toward `y = 0`; no Bessel function is involved anywhere.
//!
//! Near the degenerate end the local solutions are `1` and `y^{1-a}`. The flux
//! weight `1 / int_{y_0}^{y_1} y^{-a}` is exact for this pair on the first
//! cell, so the half-cell flux is recovered from `v_1` alone and moved to
//! `y = 0` with the discrete conservation law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::symbol::{s_full, FracParams};

/// Smallest accepted number of cells.
pub const MIN_CELLS: usize = 16;

/// Mesh `y_j = (j/M)^g` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradedMesh {
    pub cells: usize,
    pub grading: f64,
}

impl GradedMesh {
    pub fn new(cells: usize, grading: f64) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::usage(format!("mesh needs at least {MIN_CELLS} cells, got {cells}")));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::usage(format!("grading exponent {grading} must be >= 1")));
        }
        Ok(GradedMesh { cells, grading })
    }

    /// Default grading `max(1, 2/(1-a))`, which equidistributes the
    /// interpolation error of the `y^{1-a}` branch.
    pub fn for_params(params: &FracParams, cells: usize) -> Result<Self> {
        Self::new(cells, default_grading(params))
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = self.cells as f64;
        let mut y: Vec<f64> = (0..=self.cells).map(|j| (j as f64 / m).powf(self.grading)).collect();
        y[self.cells] = 1.0;
        y
    }
}

pub fn default_grading(params: &FracParams) -> f64 {
    (2.0 / (1.0 - params.a())).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProblem {
    pub params: FracParams,
    pub r: f64,
    pub mesh: GradedMesh,
}

impl ModeProblem {
    pub fn new(params: FracParams, r: f64, cells: usize) -> Result<Self> {
        Self::with_mesh(params, r, GradedMesh::for_params(&params, cells)?)
    }

    pub fn with_mesh(params: FracParams, r: f64, mesh: GradedMesh) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain("mode_problem", format!("frequency {r} must be finite and nonnegative")));
        }
        Ok(ModeProblem { params, r, mesh })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSolution {
    pub values: Vec<f64>,
    pub dtn_value: f64,
    pub mesh_size: usize,
    /// Residual of the discrete zero-flux condition at `y = 1`.
    pub top_flux: f64,
    /// Discrete energy `1/2 (sum W_j (dv_j)^2 + r^2 sum m_j v_j^2)`.
    pub energy: f64,
}

// int_lo^hi y^p dy, p > -1.
fn power_integral(lo: f64, hi: f64, p: f64) -> f64 {
    (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
}

/// Flux weights `W_j` between nodes and lumped masses `m_j` of the dual cells.
fn coefficients(a: f64, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = y.len() - 1;
    let flux: Vec<f64> = y.windows(2).map(|w| 1.0 / power_integral(w[0], w[1], -a)).collect();
    let mid: Vec<f64> = y.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut mass = vec![0.0; m + 1];
    mass[0] = power_integral(0.0, mid[0], a);
    for j in 1..m {
        mass[j] = power_integral(mid[j - 1], mid[j], a);
    }
    mass[m] = power_integral(mid[m - 1], 1.0, a);
    (flux, mass)
}

/// LU factors of a tridiagonal matrix (Thomas algorithm); `lower[0]` and
/// `upper[n-1]` are ignored.
struct Tridiagonal {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    c: Vec<f64>,
}

impl Tridiagonal {
    fn factor(lower: Vec<f64>, diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut pivots = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 { diag[0] } else { diag[i] - lower[i] * c[i - 1] };
            if p == 0.0 || !p.is_finite() {
                return Err(Error::numeric("solve_mode", format!("zero pivot at row {i}")));
            }
            pivots[i] = p;
            c[i] = if i + 1 < n { upper[i] / p } else { 0.0 };
        }
        Ok(Tridiagonal { lower, pivots, c })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0] / self.pivots[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.lower[i] * x[i - 1]) / self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
        x
    }
}

/// Solves one mode and extracts its Neumann value.
pub fn solve_mode(problem: &ModeProblem) -> Result<ModeSolution> {
    let a = problem.params.a();
    let r2 = problem.r * problem.r;
    let y = problem.mesh.nodes();
    let m = problem.mesh.cells;
    let (flux, mass) = coefficients(a, &y);

    // Unknown w = v - 1 at nodes 1..=M, w_0 = 0. Solving for the deviation
    // keeps full relative precision in the flux W_0 (v_1 - v_0) at small r.
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 1..=m {
        let i = j - 1;
        let mut dj = -r2 * mass[j] - flux[j - 1];
        if j > 1 {
            lower[i] = flux[j - 1];
        }
        if j < m {
            dj -= flux[j];
            upper[i] = flux[j];
        }
        diag[i] = dj;
        rhs[i] = r2 * mass[j];
    }
    let lu = Tridiagonal::factor(lower, &diag, &upper)?;
    let mut w = Vec::with_capacity(m + 1);
    w.push(0.0);
    w.extend(lu.solve(&rhs));

    // The same system for v itself: its right-hand side is nonnegative, so
    // v stays positive even where 1 + w would cancel (large r).
    let mut rhs_v = vec![0.0; m];
    rhs_v[0] = -flux[0];
    let values = if r2 == 0.0 {
        vec![1.0; m + 1]
    } else {
        let mut v = Vec::with_capacity(m + 1);
        v.push(1.0);
        v.extend(lu.solve(&rhs_v));
        v
    };

    let dtn_value = -(flux[0] * w[1] - r2 * mass[0]);
    let top_flux = flux[m - 1] * (w[m - 1] - w[m]) - r2 * mass[m] * values[m];

    let grad: f64 = (0..m).map(|j| flux[j] * (w[j + 1] - w[j]).powi(2)).sum();
    let pot: f64 = (0..=m).map(|j| mass[j] * values[j] * values[j]).sum();
    let energy = 0.5 * (grad + r2 * pot);

    if !dtn_value.is_finite() {
        return Err(Error::numeric("solve_mode", "non-finite Neumann value"));
    }
    Ok(ModeSolution { values, dtn_value, mesh_size: m, top_flux, energy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub dtn_value: f64,
    /// Relative error against the Bessel symbol (absolute when the symbol is 0).
    pub error: f64,
}

/// Mesh-refinement study against the closed-form symbol.
pub fn convergence_study(params: &FracParams, r: f64, mesh_sizes: &[usize], exec: Exec) -> Result<Vec<ConvergenceRow>> {
    if mesh_sizes.is_empty() {
        return Err(Error::usage("convergence study needs at least one mesh size"));
    }
    if mesh_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("mesh sizes must be strictly increasing"));
    }
    let exact = s_full(params, r)?;
    exec::try_map_indexed(exec, mesh_sizes.len(), |i| {
        let sol = solve_mode(&ModeProblem::new(*params, r, mesh_sizes[i])?)?;
        let diff = (sol.dtn_value - exact).abs();
        let error = if exact > 0.0 { diff / exact } else { diff };
        Ok(ConvergenceRow { cells: mesh_sizes[i], dtn_value: sol.dtn_value, error })
    })
}

/// Observed order `log(e_prev / e_last) / log(M_last / M_prev)` of the two
/// finest meshes. `None` when fewer than two rows or an error is zero.
pub fn empirical_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let (p, q) = (&rows[n - 2], &rows[n - 1]);
    if p.error <= 0.0 || q.error <= 0.0 {
        return None;
    }
    Some((p.error / q.error).ln() / (q.cells as f64 / p.cells as f64).ln())
}

/// Mode-by-mode extension of `sum_k amp_k e^{i xi_k x}` into the slab.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionField {
    pub mesh: Vec<f64>,
    /// `values[k][j]`: mode `k` at node `y_j`, scaled by its amplitude.
    pub values: Vec<Vec<f64>>,
    /// Discrete energy of each scaled mode.
    pub mode_energies: Vec<f64>,
    pub energy: f64,
}

pub fn extension_field(
    params: &FracParams,
    modes: &[(f64, f64)],
    mesh: GradedMesh,
    exec: Exec,
) -> Result<ExtensionField> {
    if modes.iter().any(|(r, amp)| !r.is_finite() || !amp.is_finite()) {
        return Err(Error::domain("extension_field", "mode data must be finite"));
    }
    let sols =
        exec::try_map_indexed(exec, modes.len(), |k| solve_mode(&ModeProblem::with_mesh(*params, modes[k].0, mesh)?))?;
    let mut values = Vec::with_capacity(modes.len());
    let mut mode_energies = Vec::with_capacity(modes.len());
    for ((_, amp), sol) in modes.iter().zip(&sols) {
        values.push(sol.values.iter().map(|v| amp * v).collect());
        mode_energies.push(amp * amp * sol.energy);
    }
    let energy = mode_energies.iter().sum();
    Ok(ExtensionField { mesh: mesh.nodes(), values, mode_energies, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(s: f64) -> FracParams {
        FracParams::new(s).unwrap()
    }

    fn dtn(s: f64, r: f64, m: usize) -> f64 {
        solve_mode(&ModeProblem::new(fp(s), r, m).unwrap()).unwrap().dtn_value
    }

    #[test]
    fn zero_frequency_is_constant() {
        for s in [0.25, 0.5, 0.75] {
            let sol = solve_mode(&ModeProblem::new(fp(s), 0.0, 64).unwrap()).unwrap();
            assert!(sol.values.iter().all(|&v| v == 1.0));
            assert_eq!(sol.dtn_value, 0.0);
            assert_eq!(sol.energy, 0.0);
        }
    }

    #[test]
    fn half_matches_tanh() {
        assert!((dtn(0.5, 1.0, 4096) - 1f64.tanh()).abs() <= 1e-6);
    }

    #[test]
    fn quarter_matches_symbol_at_two() {
        let want = s_full(&fp(0.25), 2.0).unwrap();
        assert!(((dtn(0.25, 2.0, 4096) - want) / want).abs() <= 1e-5);
    }

    #[test]
    fn agreement_grid_at_4096() {
        for s in [0.25, 0.5, 0.75] {
            for r in [0.1, 1.0, 10.0, 50.0] {
                let want = s_full(&fp(s), r).unwrap();
                let got = dtn(s, r, 4096);
                assert!(((got - want) / want).abs() <= 1e-5, "s={s} r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn second_order_convergence() {
        for s in [0.25, 0.5, 0.75] {
            let rows = convergence_study(&fp(s), 1.0, &[64, 256, 1024, 4096], Exec::default()).unwrap();
            for w in rows.windows(2) {
                assert!(w[1].error < w[0].error);
                // 4x refinement: a factor >= 2.8^2 corresponds to >= 2.8 per doubling.
                assert!(w[0].error / w[1].error >= 2.8 * 2.8, "s={s}: {rows:?}");
            }
            let order = empirical_order(&rows).unwrap();
            assert!(order >= 1.5, "s={s}: order {order}");
        }
    }

    #[test]
    fn zero_frequency_study_has_zero_error() {
        let rows = convergence_study(&fp(0.3), 0.0, &[16, 32, 64], Exec::Sequential).unwrap();
        assert!(rows.iter().all(|r| r.error == 0.0));
        assert_eq!(empirical_order(&rows), None);
    }

    #[test]
    fn study_rejects_bad_sizes() {
        assert!(convergence_study(&fp(0.3), 1.0, &[], Exec::Sequential).is_err());
        assert!(convergence_study(&fp(0.3), 1.0, &[64, 32], Exec::Sequential).is_err());
        assert!(convergence_study(&fp(0.3), 1.0, &[8], Exec::Sequential).is_err());
    }

    #[test]
    fn neumann_condition_is_exact() {
        for s in [0.25, 0.5, 0.75] {
            for r in [0.1, 1.0, 10.0] {
                let sol = solve_mode(&ModeProblem::new(fp(s), r, 1024).unwrap()).unwrap();
                assert!(sol.top_flux.abs() <= 1e-12 * (1.0 + sol.dtn_value), "s={s} r={r}");
            }
        }
    }

    #[test]
    fn discrete_energy_is_half_the_neumann_value() {
        for s in [0.25, 0.5, 0.75] {
            for r in [0.1, 1.0, 10.0] {
                let sol = solve_mode(&ModeProblem::new(fp(s), r, 512).unwrap()).unwrap();
                let rel = (sol.energy - 0.5 * sol.dtn_value).abs() / sol.dtn_value;
                assert!(rel <= 1e-10, "s={s} r={r}: {rel}");
            }
        }
    }

    #[test]
    fn extension_energy_matches_symbol() {
        let p = fp(0.5);
        let mut last = f64::INFINITY;
        for m in [64, 256, 1024, 4096] {
            let f =
                extension_field(&p, &[(1.0, 1.0)], GradedMesh::for_params(&p, m).unwrap(), Exec::Sequential).unwrap();
            let err = (f.energy - 0.5 * 1f64.tanh()).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last <= 1e-6);
    }

    #[test]
    fn extension_zero_amplitude_and_additivity() {
        let p = fp(0.3);
        let mesh = GradedMesh::for_params(&p, 256).unwrap();
        let z = extension_field(&p, &[(2.0, 0.0)], mesh, Exec::Sequential).unwrap();
        assert_eq!(z.energy, 0.0);
        assert!(z.values[0].iter().all(|&v| v == 0.0));
        let a = extension_field(&p, &[(1.0, 0.5)], mesh, Exec::Sequential).unwrap();
        let b = extension_field(&p, &[(3.0, -2.0)], mesh, Exec::Sequential).unwrap();
        let ab = extension_field(&p, &[(1.0, 0.5), (3.0, -2.0)], mesh, Exec::Parallel).unwrap();
        assert!((ab.energy - a.energy - b.energy).abs() <= 1e-14 * ab.energy);
        assert!(extension_field(&p, &[(1.0, f64::NAN)], mesh, Exec::Sequential).is_err());
    }

    #[test]
    fn mesh_validation() {
        assert!(GradedMesh::new(8, 2.0).is_err());
        assert!(GradedMesh::new(16, 0.5).is_err());
        let m = GradedMesh::for_params(&fp(0.25), 16).unwrap();
        assert_eq!(m.grading, 4.0);
        assert_eq!(GradedMesh::for_params(&fp(0.75), 16).unwrap().grading, 4.0 / 3.0);
        let y = m.nodes();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[16], 1.0);
        assert!(y.windows(2).all(|w| w[1] > w[0]));
        assert!(ModeProblem::new(fp(0.3), -1.0, 64).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn maximum_principle(s in 0.05f64..0.95, r in 0.0f64..60.0) {
            let sol = solve_mode(&ModeProblem::new(FracParams::new(s).unwrap(), r, 256).unwrap()).unwrap();
            prop_assert_eq!(sol.values[0], 1.0);
            for &v in &sol.values {
                prop_assert!(v > 0.0 && v <= 1.0);
            }
            prop_assert!(sol.dtn_value >= 0.0);
        }

        #[test]
        fn increasing_in_frequency(s in 0.05f64..0.95, r in 0.01f64..50.0, f in 1.01f64..2.0) {
            let p = FracParams::new(s).unwrap();
            let lo = solve_mode(&ModeProblem::new(p, r, 256).unwrap()).unwrap().dtn_value;
            let hi = solve_mode(&ModeProblem::new(p, r * f, 256).unwrap()).unwrap().dtn_value;
            prop_assert!(hi > lo);
        }
    }
}
