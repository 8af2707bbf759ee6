use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wwdtn::acceptance::{run_criterion, CRITERIA};
use wwdtn::gamma_lab::{
    averaging_check, fractional_perimeter_interval, heteroclinic_profile, indicator_field, last_pair_change,
    limsup_trend, minimize_sweep, plateau_constant, recovery_sequence, ts_curve, IntervalSpec, MinimizeOptions,
};
use wwdtn::plot::{PlotSpec, Scale};
use wwdtn::slab_oracle::{convergence_study, empirical_order};
use wwdtn::spectral_field::{dirichlet_energy, f_epsilon, hs_seminorm_sq, Field, PeriodicGrid};
use wwdtn::symbol::{frac_laplacian_symbol, tabulate, FracParams, Spacing};
use wwdtn::table::{field_from_table, field_to_table, format_float, Table};
use wwdtn::{Error, Exec, Result};

use crate::output::{emit_csv, emit_json, emit_svg, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "wwdtn", version, about = "Water-wave Dirichlet-to-Neumann operator experiments")]
pub struct Cli {
    /// Evaluate sweeps on a single thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the symbol St_s(r), S_s(r) = r^{2s} St_s(r) and its derivative.
    Symbol(SymbolArgs),
    /// Recover S_s(r) from the slab ODE by finite differences and report the error.
    Oracle(OracleArgs),
    /// Evaluate the rescaled phase-transition energy of a 1D field.
    Energy(EnergyArgs),
    /// Interaction energy T_s(h) of an interval of half-width h (s < 1/2).
    TsCurve(TsCurveArgs),
    /// Projected-gradient minimization of the rescaled energy for several epsilons.
    GammaMin(GammaMinArgs),
    /// Energies along the recovery sequence of an interval as epsilon decreases.
    LimsupTrend(LimsupArgs),
    /// Compare int f sin^2(omega x) with half of int f for a Gaussian f.
    Averaging(AveragingArgs),
    /// Run the acceptance suite and print PASS/FAIL per item.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// CSV output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot output path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SymbolArgs {
    /// Fractional order(s) in (0, 1), comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    r_min: f64,
    #[arg(long, default_value_t = 10.0)]
    r_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    spacing: SpacingArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    s: f64,
    /// Mode frequencies, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    r: Vec<f64>,
    /// Mesh sizes (cells), comma-separated and increasing.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
    cells: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Profile {
    /// Sharp indicator of the interval.
    Indicator,
    /// Heteroclinic profile (1 + tanh(d/eps))/2 of the signed distance d.
    Recovery,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "recovery")]
    profile: Profile,
    /// Load the field from a CSV written by --field-out instead of building a profile.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    /// Torus length L; the domain is [-L/2, L/2).
    #[arg(long, default_value_t = 8.0)]
    length: f64,
    /// Grid points (power of two).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// JSON report path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the evaluated field as CSV.
    #[arg(long)]
    field_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TsCurveArgs {
    /// Fractional order in (0, 1/2).
    #[arg(long)]
    s: f64,
    /// Smallest interval half-width.
    #[arg(long, default_value_t = 1e-4)]
    r_min: f64,
    /// Largest interval half-width.
    #[arg(long, default_value_t = 1e3)]
    r_max: f64,
    #[arg(long, default_value_t = 40)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GammaMinArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    s: f64,
    /// Strictly decreasing epsilons, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 8.0)]
    length: f64,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    /// Half-width of the smoothed step used as the initial field.
    #[arg(long, default_value_t = 1.5)]
    half_width: f64,
    /// Transition width of the initial smoothed step.
    #[arg(long, default_value_t = 0.3)]
    init_width: f64,
    /// Initial step; chosen from the gradient's Lipschitz bound when omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Stop when one iteration lowers the energy by at most this much.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 30)]
    max_backtracks: usize,
    /// Energy histories as CSV (epsilon, iteration, energy).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Traces as a JSON array of {s, epsilon, energy_history, converged}.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Final fields as CSV, one column per epsilon.
    #[arg(long)]
    fields: Option<PathBuf>,
    /// SVG plot of the final fields.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LimsupArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    s: f64,
    /// Strictly decreasing epsilons, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    #[arg(long, default_value_t = 8.0)]
    length: f64,
    #[arg(long, default_value_t = 8192)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct AveragingArgs {
    /// Standard deviation of the unit-mass Gaussian.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Frequencies, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,50,100,200")]
    omegas: Vec<f64>,
    /// Samples cover [-X, X).
    #[arg(long, default_value_t = 8.0)]
    half_extent: f64,
    #[arg(long, default_value_t = 65536)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Run only these criteria (comma-separated ids 1-11).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
    /// Also write the records as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run(cli: Cli, argv: &[String]) -> Result<ExitCode> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let stamp = format!("argv: wwdtn {}", argv[1..].join(" "));
    match cli.command {
        Command::Symbol(a) => symbol(a, exec, &stamp),
        Command::Oracle(a) => oracle(a, exec, &stamp),
        Command::Energy(a) => energy(a),
        Command::TsCurve(a) => ts(a, exec, &stamp),
        Command::GammaMin(a) => gamma_min(a, exec, &stamp),
        Command::LimsupTrend(a) => limsup(a, exec, &stamp),
        Command::Averaging(a) => averaging(a, &stamp),
        Command::Selftest(a) => selftest(a, exec),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn finish(table: &Table, output: &OutputArgs, spec: impl FnOnce() -> PlotSpec) -> Result<()> {
    emit_csv(table, output.out.as_deref())?;
    if let Some(p) = &output.plot {
        emit_svg(table, &spec(), p)?;
    }
    Ok(())
}

fn label(s: f64) -> String {
    format!("s={s}")
}

fn symbol(a: SymbolArgs, exec: Exec, stamp: &str) -> Result<()> {
    let spacing = match a.spacing {
        SpacingArg::Linear => Spacing::Linear,
        SpacingArg::Log => Spacing::Logarithmic,
    };
    let params = a.s.iter().map(|&s| FracParams::new(s)).collect::<Result<Vec<_>>>()?;
    let tables =
        params.iter().map(|p| tabulate(p, a.r_min, a.r_max, a.points, spacing, exec)).collect::<Result<Vec<_>>>()?;
    let fields = ["s_tilde", "s_full", "ds_tilde", "frac_laplacian"];
    let single = params.len() == 1;
    let mut columns = vec!["r".to_string()];
    for p in &params {
        for f in fields {
            columns.push(if single { f.to_string() } else { format!("{f}_{}", label(p.s())) });
        }
    }
    let mut table = Table::new(columns)?.with_comment(stamp);
    for i in 0..a.points {
        let mut row = vec![tables[0].rows[i].r];
        for (p, t) in params.iter().zip(&tables) {
            let smp = &t.rows[i];
            row.extend([smp.s_tilde, smp.s_full, smp.ds_tilde, frac_laplacian_symbol(p, smp.r)]);
        }
        table.push(row)?;
    }
    finish(&table, &a.output, || {
        let ys: Vec<String> = table.columns.iter().filter(|c| c.starts_with("s_tilde")).cloned().collect();
        let ys: Vec<&str> = ys.iter().map(String::as_str).collect();
        let mut spec = PlotSpec::new("r", &ys).with_title("St_s(r)");
        if spacing == Spacing::Logarithmic {
            spec = spec.log_log().with_guide(2.0 - 2.0 * params[0].s(), "slope 2-2s");
            spec.y_scale = Scale::Log;
        }
        spec
    })
}

fn oracle(a: OracleArgs, exec: Exec, stamp: &str) -> Result<()> {
    let p = FracParams::new(a.s)?;
    if a.r.is_empty() || a.r.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::Usage("--r needs nonnegative finite frequencies".into()));
    }
    let mut table = Table::new(["r", "cells", "dtn_value", "symbol", "error"])?.with_comment(stamp);
    let mut by_r = Table::new(["cells"])?;
    for (k, &r) in a.r.iter().enumerate() {
        let rows = convergence_study(&p, r, &a.cells, exec)?;
        let exact = wwdtn::symbol::s_full(&p, r)?;
        for row in &rows {
            table.push(vec![r, row.cells as f64, row.dtn_value, exact, row.error])?;
        }
        match empirical_order(&rows) {
            Some(o) => eprintln!("r = {r}: empirical order {o:.3}"),
            None => eprintln!("r = {r}: order undefined (zero error)"),
        }
        if k == 0 {
            by_r.rows = rows.iter().map(|row| vec![row.cells as f64]).collect();
        }
        by_r.columns.push(format!("error_r={r}"));
        for (dst, row) in by_r.rows.iter_mut().zip(&rows) {
            dst.push(row.error);
        }
    }
    emit_csv(&table, a.output.out.as_deref())?;
    if let Some(path) = &a.output.plot {
        let ys: Vec<&str> = by_r.columns[1..].iter().map(String::as_str).collect();
        let spec = PlotSpec::new("cells", &ys)
            .log_log()
            .with_guide(-2.0, "slope -2")
            .with_title(format!("slab oracle error, s = {}", a.s));
        emit_svg(&by_r, &spec, path)?;
    }
    Ok(())
}

fn check_line(length: f64, n: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::line(length, n)
}

fn energy(a: EnergyArgs) -> Result<()> {
    let p = FracParams::new(a.s)?;
    let field = match &a.field {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            field_from_table(&Table::from_csv(&text)?)?
        }
        None => {
            let grid = check_line(a.length, a.n)?;
            let iv = IntervalSpec::new(a.center, a.half_width)?;
            match a.profile {
                Profile::Indicator => indicator_field(&iv, grid)?,
                Profile::Recovery => recovery_sequence(&iv, a.epsilon, grid)?,
            }
        }
    };
    if !field.in_unit_box() {
        return Err(Error::Usage("field values must lie in [0, 1]".into()));
    }
    let report = f_epsilon(&field, &p, a.epsilon)?;
    let doc = json!({
        "report": report,
        "regime": report.regime.as_str(),
        "dirichlet_energy": dirichlet_energy(&field, &p)?,
        "hs_seminorm_sq": hs_seminorm_sq(&field, &p)?,
        "grid": field.grid,
    });
    if let Some(path) = &a.field_out {
        write_atomic(path, field_to_table(&field).to_csv().as_bytes())?;
    }
    emit_json(&doc, a.out.as_deref())
}

fn ts(a: TsCurveArgs, exec: Exec, stamp: &str) -> Result<()> {
    let curve = ts_curve(a.s, a.r_min, a.r_max, a.points, exec)?;
    let plateau = plateau_constant(a.s)?;
    let mut table = Table::new(["h", "t_s", "abs_error", "evaluations", "perimeter", "ratio"])?
        .with_comment(stamp)
        .with_comment(format!("plateau: {}", format_float(plateau.value)));
    for row in &curve.rows {
        let per = fractional_perimeter_interval(a.s, row.h)?;
        table.push(vec![row.h, row.value, row.abs_error, row.evaluations as f64, per, row.value / per])?;
    }
    finish(&table, &a.output, || {
        PlotSpec::new("h", &["t_s"])
            .log_log()
            .with_guide(1.0 - 2.0 * a.s, "slope 1-2s")
            .with_title(format!("T_s(h), s = {}", a.s))
    })
}

fn check_decreasing(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage("--epsilons must be nonempty and strictly decreasing".into()));
    }
    Ok(())
}

fn gamma_min(a: GammaMinArgs, exec: Exec, stamp: &str) -> Result<()> {
    let p = FracParams::new(a.s)?;
    check_decreasing(&a.epsilons)?;
    let grid = check_line(a.length, a.n)?;
    let iv = IntervalSpec::new(a.center, a.half_width)?;
    if !(a.init_width > 0.0) {
        return Err(Error::Usage("--init-width must be positive".into()));
    }
    let init = Field::from_fn(grid, |x| heteroclinic_profile(iv.signed_distance(x[0]) / a.init_width))?;
    let opts = MinimizeOptions { step: a.step, max_iter: a.max_iter, tol: a.tol, max_backtracks: a.max_backtracks };
    let trace = minimize_sweep(&init, &p, &a.epsilons, &opts, exec)?;
    let mut hist = Table::new(["epsilon", "iteration", "energy"])?.with_comment(stamp);
    for run in &trace.runs {
        for (i, e) in run.energy_history.iter().enumerate() {
            hist.push(vec![run.epsilon, i as f64, *e])?;
        }
        eprintln!(
            "epsilon = {}: {} iterations, converged = {}, final energy {:.6e}, fraction near wells {:.3}",
            run.epsilon,
            run.iterations,
            run.converged,
            run.energy_history.last().copied().unwrap_or(f64::NAN),
            run.fraction_near_wells(0.05)
        );
    }
    emit_csv(&hist, a.out.as_deref())?;
    if let Some(path) = &a.json {
        let doc: Vec<_> = trace
            .runs
            .iter()
            .map(|r| {
                json!({
                    "s": r.s,
                    "epsilon": r.epsilon,
                    "energy_history": r.energy_history,
                    "converged": r.converged,
                })
            })
            .collect();
        emit_json(&serde_json::Value::Array(doc), Some(path))?;
    }
    if a.fields.is_some() || a.plot.is_some() {
        let mut cols = vec!["x".to_string(), "initial".to_string()];
        cols.extend(trace.runs.iter().map(|r| format!("u_eps={}", r.epsilon)));
        let mut fields = Table::new(cols)?.with_comment(stamp);
        for (i, x) in grid.nodes().into_iter().enumerate() {
            let mut row = vec![x, init.values[i]];
            row.extend(trace.runs.iter().map(|r| r.field.values[i]));
            fields.push(row)?;
        }
        if let Some(path) = &a.fields {
            write_atomic(path, fields.to_csv().as_bytes())?;
        }
        if let Some(path) = &a.plot {
            let ys: Vec<&str> = fields.columns[1..].iter().map(String::as_str).collect();
            let spec = PlotSpec::new("x", &ys).with_title(format!("minimizers, s = {}", a.s));
            emit_svg(&fields, &spec, path)?;
        }
    }
    Ok(())
}

fn limsup(a: LimsupArgs, exec: Exec, stamp: &str) -> Result<()> {
    let p = FracParams::new(a.s)?;
    check_decreasing(&a.epsilons)?;
    let grid = check_line(a.length, a.n)?;
    let iv = IntervalSpec::new(a.center, a.half_width)?;
    let rows = limsup_trend(&iv, &p, &a.epsilons, grid, exec)?;
    let mut table = Table::new(["epsilon", "interaction", "potential", "rescale_weight", "total"])?
        .with_comment(stamp)
        .with_comment(format!("regime: {}", p.regime().as_str()));
    for r in &rows {
        table.push(vec![
            r.epsilon,
            r.report.interaction,
            r.report.potential,
            r.report.rescale_weight,
            r.report.total,
        ])?;
    }
    if let Some(c) = last_pair_change(&rows) {
        eprintln!("last-pair relative change: {:.4}", c);
    }
    finish(&table, &a.output, || {
        let mut spec =
            PlotSpec::new("epsilon", &["total"]).with_title(format!("F_eps along the recovery sequence, s = {}", a.s));
        spec.x_scale = Scale::Log;
        spec
    })
}

fn averaging(a: AveragingArgs, stamp: &str) -> Result<()> {
    if !(a.sigma > 0.0 && a.half_extent > 0.0) || a.n < 2 {
        return Err(Error::Usage("need --sigma > 0, --half-extent > 0 and --n >= 2".into()));
    }
    if a.omegas.is_empty() {
        return Err(Error::Usage("--omegas must not be empty".into()));
    }
    let dx = 2.0 * a.half_extent / a.n as f64;
    let xs: Vec<f64> = (0..a.n).map(|i| -a.half_extent + i as f64 * dx).collect();
    let norm = 1.0 / (a.sigma * (2.0 * std::f64::consts::PI).sqrt());
    let fs: Vec<f64> = xs.iter().map(|x| norm * (-0.5 * (x / a.sigma).powi(2)).exp()).collect();
    let mut table = Table::new(["omega", "lhs", "rhs", "gap"])?.with_comment(stamp);
    for &w in &a.omegas {
        let r = averaging_check(&xs, &fs, w)?;
        table.push(vec![w, r.lhs, r.rhs, r.gap])?;
    }
    finish(&table, &a.output, || PlotSpec::new("omega", &["gap"]).log_log().with_title("averaging gap"))
}

fn selftest(a: SelftestArgs, exec: Exec) -> Result<()> {
    let ids: Vec<usize> = if a.only.is_empty() { CRITERIA.iter().map(|c| c.id).collect() } else { a.only.clone() };
    let mut records = Vec::new();
    for id in ids {
        let rec = run_criterion(id, exec).ok_or_else(|| Error::Usage(format!("no acceptance criterion {id}")))?;
        println!("{rec}");
        records.push(rec);
    }
    let failed = records.iter().filter(|r| !r.passed).count();
    println!("selftest: {} passed, {failed} failed", records.len() - failed);
    if let Some(path) = &a.json {
        let value = serde_json::to_value(&records).map_err(|e| Error::Io(e.to_string()))?;
        emit_json(&value, Some(path as &Path))?;
    }
    if failed > 0 {
        return Err(Error::Numeric { op: "selftest", msg: format!("{failed} criteria failed") });
    }
    Ok(())
}
