//! Batch subcommands: scenario dispatch and file outputs.
//!
//! Every command reads a scenario config, computes, and writes CSV/PGM/text
//! outputs into one output directory. Outputs are deterministic: identical
//! config and seed give byte-identical files.

use crate::analysis::{
    check_tl1, check_tl2, field_elastic_report, label_cells, measure_layer_width, CellLabel,
};
use crate::config::{Format, InitKind, ScenarioConfig};
use crate::energy::{
    assemble_matrices, curvature_identity, density_expanded, gamma_convexity_coeff,
    pointwise_gamma_min, stretch_energy_matrix, PointState,
};
use crate::field::{
    apply_dirichlet, write_csv, write_pgm, Grid2D, ScalarField,
};
use crate::params::{MaterialParams, ShearDrive, SlipSystem};
use crate::potential::{j_value, jbeta_deriv, jbeta_value, linspace, trace_extrema};
use crate::solver::{
    evolve_observed, solve_harmonic, EvolveConfig, EvolutionDiagnostics, Mode,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Errors split by exit code: config problems exit 2, everything else 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

macro_rules! numerical_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Numerical(e.to_string())
            }
        })*
    };
}
numerical_from!(
    crate::solver::SolverError,
    crate::potential::PotentialError,
    crate::analysis::AnalysisError,
    crate::field::FieldError,
    crate::params::ParamsError
);

fn require<T: Clone>(opt: &Option<T>, what: &str) -> Result<T, CliError> {
    opt.clone()
        .ok_or_else(|| CliError::Config(format!("scenario is missing the [{what}] section")))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Numerical(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))
}

fn out_dir(cfg: &ScenarioConfig, cli_out: Option<&Path>) -> PathBuf {
    match cli_out {
        Some(p) => p.to_path_buf(),
        None => cfg
            .output
            .clone()
            .unwrap_or_default()
            .dir,
    }
}

fn formats(cfg: &ScenarioConfig) -> Vec<Format> {
    cfg.output.clone().unwrap_or_default().formats
}

/// Tabulates `J` and `J_beta` for the requested shears on `n_alpha`
/// equispaced angles in `[0, 2*pi)`; writes `potential.csv`.
pub fn cmd_potential(
    cfg: &ScenarioConfig,
    cli_out: Option<&Path>,
    betas: &[f64],
    n_alpha: usize,
) -> Result<PathBuf, CliError> {
    let m = require(&cfg.material, "material")?;
    if n_alpha < 2 {
        return Err(CliError::Config("n_alpha must be at least 2".into()));
    }
    let dir = out_dir(cfg, cli_out);
    ensure_dir(&dir)?;
    let mut text = String::from("alpha,J");
    for b in betas {
        let _ = write!(text, ",J_beta_{b}");
    }
    text.push('\n');
    for k in 0..n_alpha {
        let alpha = std::f64::consts::TAU * k as f64 / n_alpha as f64;
        let _ = write!(text, "{alpha},{}", j_value(&m, alpha));
        for b in betas {
            let _ = write!(text, ",{}", jbeta_value(&m, *b, alpha));
        }
        text.push('\n');
    }
    let path = dir.join("potential.csv");
    write_text(&path, &text)?;
    Ok(path)
}

/// Traces the extremum branches over `[beta_min, beta_max]` and writes
/// `trace.csv` with header `beta,m1,m2,M1,M2` (absent branches as empty
/// cells).
pub fn cmd_minima(
    cfg: &ScenarioConfig,
    cli_out: Option<&Path>,
    beta_min: f64,
    beta_max: f64,
    n_beta: usize,
) -> Result<PathBuf, CliError> {
    let m = require(&cfg.material, "material")?;
    let dir = out_dir(cfg, cli_out);
    ensure_dir(&dir)?;
    let grid = if n_beta <= 1 || beta_min == beta_max {
        vec![beta_min]
    } else if beta_max < beta_min {
        return Err(CliError::Config("beta_max must be >= beta_min".into()));
    } else {
        linspace(beta_min, beta_max, n_beta)
    };
    let trace = trace_extrema(&m, &grid)?;
    let mut text = String::from("beta,m1,m2,M1,M2\n");
    for (k, beta) in trace.betas.iter().enumerate() {
        let cell = |tp: &Option<crate::potential::TracePoint>| match tp {
            Some(tp) => format!("{}", tp.alpha),
            None => String::new(),
        };
        let _ = writeln!(
            text,
            "{beta},{},{},{},{}",
            cell(&trace.m1[k]),
            cell(&trace.m2[k]),
            cell(&trace.max1[k]),
            cell(&trace.max2[k]),
        );
    }
    let path = dir.join("trace.csv");
    write_text(&path, &text)?;
    Ok(path)
}

const HARMONIC_TOL: f64 = 1e-10;
const HARMONIC_MAX_ITER: usize = 200_000;

/// Solves the harmonic limiting problem for the scenario's boundary data;
/// writes `alpha_harmonic.csv` (and PGM when requested).
pub fn cmd_harmonic(cfg: &ScenarioConfig, cli_out: Option<&Path>) -> Result<PathBuf, CliError> {
    let grid = require(&cfg.grid, "grid")?;
    let bc = require(&cfg.bc, "bc")?;
    let dir = out_dir(cfg, cli_out);
    ensure_dir(&dir)?;
    let sol = solve_harmonic(&grid, &bc, HARMONIC_TOL, HARMONIC_MAX_ITER)?;
    let path = dir.join("alpha_harmonic.csv");
    write_csv(&sol, &path)?;
    if formats(cfg).contains(&Format::Pgm) {
        let (lo, hi) = bc.value_range();
        let hi = if hi > lo { hi } else { lo + 1.0 };
        write_pgm(&sol, &dir.join("alpha_harmonic.pgm"), lo, hi)?;
    }
    Ok(path)
}

/// Default angular tolerance for well labelling.
const WELL_TOL: f64 = 0.3;

fn partition_wells(m: &MaterialParams, mode: Mode, beta_final: f64) -> Result<Vec<f64>, CliError> {
    match mode {
        Mode::Case2J => Ok(vec![0.0, std::f64::consts::PI]),
        Mode::Case3Jbeta => {
            let pts = crate::potential::list_extrema(m, beta_final, 64)?;
            let wells: Vec<f64> = pts
                .iter()
                .filter(|s| s.kind == crate::potential::ExtremumKind::Minimum)
                .map(|s| s.alpha)
                .collect();
            Ok(wells)
        }
    }
}

/// Runs the Allen-Cahn relaxation for the scenario: writes snapshots,
/// `alpha_final.csv`, `diag.csv`, `partition.txt`, `elastic.csv` (and PGMs
/// when requested). Returns an error after writing everything if the flow
/// did not reach stationarity.
pub fn cmd_evolve(cfg: &ScenarioConfig, cli_out: Option<&Path>) -> Result<PathBuf, CliError> {
    let m = require(&cfg.material, "material")?;
    let grid = require(&cfg.grid, "grid")?;
    let bc = require(&cfg.bc, "bc")?;
    let ev = require(&cfg.evolve, "evolve")?;
    let drive = cfg.drive.clone().unwrap_or_else(|| ShearDrive::constant(0.0));
    let dir = out_dir(cfg, cli_out);
    ensure_dir(&dir)?;
    let fmts = formats(cfg);
    let pgm = fmts.contains(&Format::Pgm);

    let t_end = match ev.t_end {
        Some(t) => t,
        None => {
            let t = drive.t_last();
            if t > 0.0 {
                t
            } else {
                1e-3
            }
        }
    };
    let run_cfg = EvolveConfig {
        dt: ev.dt,
        t_end,
        stat_tol: ev.stat_tol,
        max_steps: ev.max_steps,
        scheme: ev.scheme,
        mode: ev.mode,
        record_every: ev.record_every,
    };

    let f0 = match ev.init {
        InitKind::Harmonic => solve_harmonic(&grid, &bc, HARMONIC_TOL, HARMONIC_MAX_ITER)?,
        InitKind::Constant(v) => apply_dirichlet(&ScalarField::constant(grid, v), &bc),
    };

    let beta_at = |t: f64| drive.eval_clamped(t.min(t_end));
    let mut elastic = String::from("step,t,beta,fraction_elastic,all_elastic\n");
    let mut record_elastic = |step: usize, t: f64, f: &ScalarField| {
        let beta = beta_at(t);
        let (frac, all) = field_elastic_report(&m, f, beta);
        let _ = writeln!(elastic, "{step},{t},{beta},{frac},{all}");
    };

    let snap_dir = dir.clone();
    let mut observer = |step: usize, t: f64, f: &ScalarField| -> Result<(), crate::solver::SolverError> {
        let name = format!("alpha_{step:08}");
        write_csv(f, &snap_dir.join(format!("{name}.csv")))?;
        if pgm {
            let (lo, hi) = field_pgm_range(f);
            write_pgm(f, &snap_dir.join(format!("{name}.pgm")), lo, hi)?;
        }
        record_elastic(step, t, f);
        Ok(())
    };

    let result = evolve_observed(&f0, &m, &bc, &drive, &run_cfg, ev.snapshot_every, &mut observer);
    let (final_field, diag) = result?;

    // final field and diagnostics
    let final_path = dir.join("alpha_final.csv");
    write_csv(&final_field, &final_path)?;
    if pgm {
        let (lo, hi) = field_pgm_range(&final_field);
        write_pgm(&final_field, &dir.join("alpha_final.pgm"), lo, hi)?;
    }

    let mut diag_text = String::from("step,t,energy,residual\n");
    for k in 0..diag.record_steps.len() {
        let _ = writeln!(
            diag_text,
            "{},{},{},{}",
            diag.record_steps[k], diag.times[k], diag.energies[k], diag.residuals[k]
        );
    }
    write_text(&dir.join("diag.csv"), &diag_text)?;

    // elastic record at the final state
    record_elastic(diag.steps, *diag.times.last().unwrap(), &final_field);
    write_text(&dir.join("elastic.csv"), &elastic)?;

    // partition report
    let beta_final = beta_at(f64::INFINITY);
    let wells = partition_wells(&m, ev.mode, beta_final)?;
    let mut report = label_cells(&final_field, &wells, WELL_TOL)?;
    if wells.len() == 2 {
        report.widths = measure_layer_width(&final_field, (wells[0], wells[1]), 0.1, 0.9)?;
    }
    write_text(&dir.join("partition.txt"), &partition_text(&report, &diag))?;
    if pgm {
        write_labels_pgm(&report, &grid, &dir.join("labels.pgm"))?;
    }

    if !diag.converged {
        return Err(CliError::Numerical(format!(
            "did not reach stationarity within {} steps (last residual {:.3e}); outputs written to {}",
            diag.steps,
            diag.residuals.last().copied().unwrap_or(f64::NAN),
            dir.display()
        )));
    }
    Ok(final_path)
}

fn field_pgm_range(f: &ScalarField) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in f.values() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn partition_text(report: &crate::analysis::PartitionReport, diag: &EvolutionDiagnostics) -> String {
    let mut text = String::new();
    let wells: Vec<String> = report.wells.iter().map(|w| format!("{w}")).collect();
    let _ = writeln!(text, "wells: {}", wells.join(","));
    let _ = writeln!(text, "tol: {}", report.tol);
    let _ = writeln!(text, "cell_count: {}", report.cell_count);
    let _ = writeln!(text, "layer_fraction: {}", report.layer_fraction);
    let _ = writeln!(text, "widths_count: {}", report.widths.len());
    if !report.widths.is_empty() {
        let mut sorted = report.widths.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let mean: f64 = sorted.iter().sum::<f64>() / sorted.len() as f64;
        let _ = writeln!(text, "width_median: {median}");
        let _ = writeln!(text, "width_mean: {mean}");
    }
    let _ = writeln!(text, "converged: {}", diag.converged);
    let _ = writeln!(text, "steps: {}", diag.steps);
    let _ = writeln!(text, "final_energy: {}", diag.energies.last().unwrap());
    let _ = writeln!(text, "final_residual: {}", diag.residuals.last().unwrap());
    text
}

fn write_labels_pgm(
    report: &crate::analysis::PartitionReport,
    grid: &Grid2D,
    path: &Path,
) -> Result<(), CliError> {
    let n_wells = report.wells.len().max(2);
    let values: Vec<f64> = report
        .labels
        .iter()
        .map(|l| match l {
            CellLabel::Layer => 128.0,
            CellLabel::Well(k) => 255.0 * *k as f64 / (n_wells - 1) as f64,
        })
        .collect();
    let f = ScalarField::new(*grid, values).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_pgm(&f, path, 0.0, 255.0)?;
    Ok(())
}

/// Evaluates the closed-form parameter and boundary-data conditions;
/// returns the report text (also printed by the binary).
pub fn cmd_check(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let m = require(&cfg.material, "material")?;
    let bc = require(&cfg.bc, "bc")?;
    let drive = cfg.drive.clone().unwrap_or_else(|| ShearDrive::constant(0.0));

    let mut text = String::new();
    let _ = writeln!(text, "mccond: {}", m.has_two_wells());
    let _ = writeln!(text, "s2: {}", m.elastic_sufficient(drive.max_abs_beta()));
    let _ = writeln!(text, "tl1: {}", check_tl1(&bc));
    let tl2 = if m.has_two_wells() {
        let trace = trace_extrema(&m, &linspace(-2.0, 2.0, 81))?;
        check_tl2(&m, &bc, &trace)?
    } else {
        false
    };
    let _ = writeln!(text, "tl2: {tl2}");
    Ok(text)
}

/// Randomized self-checks behind the hidden `selftest` subcommand. The
/// seed controls every sample; any failure is reported in the returned
/// text alongside `ok = false`.
pub fn cmd_selftest(seed: u64) -> (String, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        let _ = writeln!(
            text,
            "{name}: {}{}",
            if ok { "ok" } else { "FAIL" },
            if detail.is_empty() {
                String::new()
            } else {
                format!(" ({detail})")
            }
        );
        all_ok &= ok;
    };

    let rand_mat = |rng: &mut ChaCha8Rng| {
        MaterialParams::new(
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.1..15.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..5.0),
        )
        .expect("ranges are admissible")
    };

    // dual-path energy equivalence
    {
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let m = rand_mat(&mut rng);
            let slip = SlipSystem::rotated(rng.gen_range(0.0..std::f64::consts::TAU));
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            let gamma = rng.gen_range(-3.0..3.0);
            let beta = rng.gen_range(-3.0..3.0);
            let st = PointState { alpha, gamma, beta, grad_alpha_sq: 0.0 };
            let expanded =
                density_expanded(&m, &st) - m.rho * gamma * gamma - m.sigma_y * gamma.abs();
            let matrixed = stretch_energy_matrix(&m, &assemble_matrices(&slip, alpha, gamma, beta));
            worst = worst.max((expanded - matrixed).abs() / matrixed.abs().max(1.0));
        }
        report("dual_path", worst <= 1e-10, format!("worst rel err {worst:.2e}"));
    }

    // derivative consistency
    {
        let h = 1e-5;
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let m = rand_mat(&mut rng);
            let beta = rng.gen_range(-3.0..3.0);
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            let fd = (jbeta_value(&m, beta, alpha + h) - jbeta_value(&m, beta, alpha - h)) / (2.0 * h);
            let an = jbeta_deriv(&m, beta, alpha);
            worst = worst.max((an - fd).abs() / an.abs().max(1.0));
        }
        report("derivative_fd", worst <= 1e-6, format!("worst rel err {worst:.2e}"));
    }

    // curvature identity
    {
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let (lhs, rhs) = curvature_identity(
                rng.gen_range(-10.0..10.0),
                [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
            );
            worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
        }
        report("curvature_identity", worst <= 1e-12, format!("worst rel err {worst:.2e}"));
    }

    // slip convexity via second differences (the density is quadratic in
    // the slip, so the wide step only suppresses cancellation noise)
    {
        let h = 1e-2;
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let m = rand_mat(&mut rng);
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            let beta = rng.gen_range(-3.0..3.0);
            let gamma = rng.gen_range(0.02..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let d = |g: f64| {
                density_expanded(&m, &PointState { alpha, gamma: g, beta, grad_alpha_sq: 0.0 })
            };
            let second = (d(gamma + h) - 2.0 * d(gamma) + d(gamma - h)) / (h * h);
            let expect = 2.0 * m.rho + gamma_convexity_coeff(&m, alpha);
            worst = worst.max((second - expect).abs() / expect.abs().max(1.0));
        }
        report("slip_convexity", worst <= 1e-6, format!("worst rel err {worst:.2e}"));
    }

    // closed-form slip minimiser against a brute-force scan
    {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let m = rand_mat(&mut rng);
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            let beta = rng.gen_range(-3.0..3.0);
            let d = |g: f64| {
                density_expanded(&m, &PointState { alpha, gamma: g, beta, grad_alpha_sq: 0.0 })
            };
            let mut best = (f64::INFINITY, 0.0);
            let mut g = -10.0;
            while g <= 10.0 {
                let val = d(g);
                if val < best.0 {
                    best = (val, g);
                }
                g += 1e-4;
            }
            worst = worst.max((pointwise_gamma_min(&m, alpha, beta) - best.1).abs());
        }
        report("slip_minimiser", worst <= 2e-4, format!("worst abs err {worst:.2e}"));
    }

    (text, all_ok)
}
