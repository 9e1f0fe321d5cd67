//! Acceptance suite: one test per criterion, each printing a pass line
//! with its wall time. The three expensive 128x128 relaxation runs are
//! shared between criteria through lazy fixtures.

use cosserat_shear::analysis::{
    label_cells, measure_layer_width, monotone_maxima, s1_pointwise,
    CellLabel,
};
use cosserat_shear::energy::{
    assemble_matrices, curvature_identity, density_expanded, gamma_convexity_coeff,
    stretch_energy_matrix, PointState,
};
use cosserat_shear::field::{linf_diff, BoundarySpec, Grid2D, ScalarField, Segment, Side};
use cosserat_shear::params::{MaterialParams, ShearDrive, SlipSystem};
use cosserat_shear::potential::{
    cyclic_distance, jbeta_deriv, jbeta_value, linspace, list_extrema, scan_extrema,
    trace_extrema, ExtremumKind,
};
use cosserat_shear::solver::{
    el_residual, evolve_to_stationary, solve_harmonic, EvolutionDiagnostics, EvolveConfig, Mode,
    Scheme,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use std::time::Instant;

fn mat(mu_c: f64, mu2: f64, rho: f64, sigma_y: f64) -> MaterialParams {
    MaterialParams::new(1.0, 1.0, mu_c, mu2, rho, sigma_y).unwrap()
}

fn tl1_bc() -> BoundarySpec {
    BoundarySpec::new(vec![
        Segment { side: Side::Left, t0: 0.0, t1: 1.0, value: 0.0 },
        Segment { side: Side::Bottom, t0: 0.0, t1: 1.0, value: 0.0 },
        Segment { side: Side::Right, t0: 0.0, t1: 1.0, value: PI },
        Segment { side: Side::Top, t0: 0.0, t1: 1.0, value: PI },
    ])
    .unwrap()
}

struct Relaxation {
    field: ScalarField,
    diag: EvolutionDiagnostics,
}

fn run_tl1(mu2: f64, scheme: Scheme, record_every: usize) -> Relaxation {
    let p = mat(12.0, mu2, 0.0, 0.0);
    let grid = Grid2D::new(128, 128, 1.0, 1.0).unwrap();
    let bc = tl1_bc();
    let f0 = solve_harmonic(&grid, &bc, 1e-10, 200_000).expect("harmonic init");
    let cfg = EvolveConfig {
        dt: None,
        t_end: 1e-3,
        stat_tol: 1e-8,
        max_steps: 2_000_000,
        scheme,
        mode: Mode::Case2J,
        record_every,
    };
    let (field, diag) =
        evolve_to_stationary(&f0, &p, &bc, &ShearDrive::constant(0.0), &cfg).expect("relaxation");
    Relaxation { field, diag }
}

fn tl1_explicit() -> &'static Relaxation {
    static RUN: OnceLock<Relaxation> = OnceLock::new();
    RUN.get_or_init(|| run_tl1(1e-3, Scheme::Explicit, 1))
}

fn tl1_quadruple_mu2() -> &'static Relaxation {
    static RUN: OnceLock<Relaxation> = OnceLock::new();
    RUN.get_or_init(|| run_tl1(4e-3, Scheme::Explicit, 100))
}

fn tl1_semi_implicit() -> &'static Relaxation {
    static RUN: OnceLock<Relaxation> = OnceLock::new();
    RUN.get_or_init(|| run_tl1(1e-3, Scheme::SemiImplicit, 100))
}

fn pass(n: usize, name: &str, started: Instant) {
    println!(
        "criterion {n:2} ({name}): PASS [{:.2} s]",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_01_well_structure() {
    let t0 = Instant::now();
    for (mu_c, expected_minima) in [(12.0, 2usize), (1.0, 1usize)] {
        let p = mat(mu_c, 0.0, 0.0, 0.0);
        let pts = list_extrema(&p, 0.0, 64).unwrap();
        let minima: Vec<f64> = pts
            .iter()
            .filter(|s| s.kind == ExtremumKind::Minimum)
            .map(|s| s.alpha)
            .collect();
        assert_eq!(minima.len(), expected_minima, "mu_c = {mu_c}");
        assert!(cyclic_distance(minima[0], 0.0) <= 1e-8);
        if expected_minima == 2 {
            assert!((minima[1] - PI).abs() <= 1e-8);
        }
        // brute-force sign-change scan on a 1e5 grid must agree point for point
        let scan = scan_extrema(&p, 0.0, 100_000);
        assert_eq!(scan.len(), pts.len(), "mu_c = {mu_c}");
        for (a, b) in pts.iter().zip(scan.iter()) {
            assert!(cyclic_distance(a.alpha, b.alpha) <= 1e-6);
            assert_eq!(a.kind, b.kind);
        }
    }
    pass(1, "two wells vs one", t0);
}

fn reference_trace() -> &'static cosserat_shear::potential::BifurcationTrace {
    static TRACE: OnceLock<cosserat_shear::potential::BifurcationTrace> = OnceLock::new();
    TRACE.get_or_init(|| {
        let p = mat(6.0, 0.0, 0.0, 0.0);
        trace_extrema(&p, &linspace(-2.0, 2.0, 81)).unwrap()
    })
}

#[test]
fn criterion_02_branch_trace() {
    let t0 = Instant::now();
    let p = mat(6.0, 0.0, 0.0, 0.0);
    let tr = reference_trace();
    assert_eq!(tr.betas.len(), 81);

    // both minima branches exist at every grid point
    for k in 0..81 {
        assert!(tr.m1[k].is_some() && tr.m2[k].is_some(), "missing minima at index {k}");
    }
    // at beta = 0 the minima sit at 0 and pi
    let k0 = tr.betas.iter().position(|b| *b == 0.0).expect("grid hits zero");
    assert!(cyclic_distance(tr.m1[k0].unwrap().alpha, 0.0) <= 1e-8);
    assert!((tr.m2[k0].unwrap().alpha - PI).abs() <= 1e-8);
    // adjacent branch values stay within 0.2 rad (cyclic metric)
    for br in [&tr.m1, &tr.m2] {
        for w in br.windows(2) {
            assert!(cyclic_distance(w[0].unwrap().alpha, w[1].unwrap().alpha) < 0.2);
        }
    }
    // every minima branch point is a converged minimum
    for (k, beta) in tr.betas.iter().enumerate() {
        for br in [&tr.m1, &tr.m2] {
            let tp = br[k].unwrap();
            assert!(jbeta_deriv(&p, *beta, tp.alpha).abs() <= 1e-10);
            assert!(tp.second_deriv > 0.0);
        }
    }
    pass(2, "minima branch trace", t0);
}

#[test]
fn criterion_03_maxima_monotonicity() {
    let t0 = Instant::now();
    let tr = reference_trace();
    assert!(monotone_maxima(tr).unwrap());
    // verified direction: both maxima branches strictly decrease in beta,
    // which is what the time-independent layer bound uses
    for br in [&tr.max1, &tr.max2] {
        for w in br.windows(2) {
            assert!(w[1].unwrap().alpha < w[0].unwrap().alpha - 1e-10);
        }
    }
    pass(3, "maxima monotonicity (M1, M2 strictly decreasing)", t0);
}

#[test]
fn criterion_04_dual_path_energy() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let frames = [
        SlipSystem::rotated(rng.gen_range(0.0..TAU)),
        SlipSystem::rotated(rng.gen_range(0.0..TAU)),
    ];
    for k in 0..1000 {
        let p = MaterialParams::new(
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.1..15.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..5.0),
        )
        .unwrap();
        let slip = frames[k % 2];
        let alpha = rng.gen_range(0.0..TAU);
        let gamma = rng.gen_range(-3.0..3.0);
        let beta = rng.gen_range(-3.0..3.0);
        let st = PointState { alpha, gamma, beta, grad_alpha_sq: 0.0 };
        let expanded =
            density_expanded(&p, &st) - p.rho * gamma * gamma - p.sigma_y * gamma.abs();
        let matrixed = stretch_energy_matrix(&p, &assemble_matrices(&slip, alpha, gamma, beta));
        assert!(
            (expanded - matrixed).abs() <= 1e-10 * matrixed.abs().max(1.0),
            "sample {k}: {expanded} vs {matrixed}"
        );
    }
    pass(4, "dual-path energy equivalence", t0);
}

#[test]
fn criterion_05_derivative_consistency() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let h = 1e-5;
    for _ in 0..1000 {
        let p = mat(rng.gen_range(0.1..15.0), 0.0, 0.0, 0.0);
        let beta = rng.gen_range(-3.0..3.0);
        let alpha = rng.gen_range(0.0..TAU);
        let fd = (jbeta_value(&p, beta, alpha + h) - jbeta_value(&p, beta, alpha - h)) / (2.0 * h);
        let an = jbeta_deriv(&p, beta, alpha);
        assert!((an - fd).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {fd}");
    }
    for _ in 0..1000 {
        let (lhs, rhs) = curvature_identity(
            rng.gen_range(-10.0..10.0),
            [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        );
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }
    pass(5, "derivatives vs finite differences + curvature identity", t0);
}

#[test]
fn criterion_06_slip_convexity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    // the density is exactly quadratic in the slip away from the kink, so
    // this step has zero truncation error and negligible cancellation noise
    let h = 1e-2;
    for _ in 0..1000 {
        let p = MaterialParams::new(
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.1..15.0),
            0.0,
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..5.0),
        )
        .unwrap();
        let alpha = rng.gen_range(0.0..TAU);
        let beta = rng.gen_range(-3.0..3.0);
        let gamma = rng.gen_range(0.02..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d = |g: f64| {
            density_expanded(&p, &PointState { alpha, gamma: g, beta, grad_alpha_sq: 0.0 })
        };
        let second = (d(gamma + h) - 2.0 * d(gamma) + d(gamma - h)) / (h * h);
        let expect = 2.0 * p.rho + gamma_convexity_coeff(&p, alpha);
        assert!(second > 0.0);
        assert!(
            (second - expect).abs() <= 1e-6 * expect.abs().max(1.0),
            "{second} vs {expect}"
        );
    }
    pass(6, "slip convexity second difference", t0);
}

#[test]
fn criterion_07_harmonic_solver() {
    let t0 = Instant::now();
    // linear data is reproduced to near machine precision
    let grid = Grid2D::new(33, 33, 1.0, 1.0).unwrap();
    let bc = BoundarySpec::from_fn(&grid, |x, y| x + y);
    let sol = solve_harmonic(&grid, &bc, 1e-12, 50_000).unwrap();
    let exact = ScalarField::from_fn(grid, |x, y| x + y);
    assert!(linf_diff(&sol, &exact).unwrap() <= 1e-10);

    // the quadratic harmonic x^2 - y^2 is stencil-exact
    let grid = Grid2D::new(65, 65, 1.0, 1.0).unwrap();
    let bc = BoundarySpec::from_fn(&grid, |x, y| x * x - y * y);
    let sol = solve_harmonic(&grid, &bc, 1e-11, 100_000).unwrap();
    let exact = ScalarField::from_fn(grid, |x, y| x * x - y * y);
    assert!(linf_diff(&sol, &exact).unwrap() <= 1e-6);

    // discrete maximum principle on random piecewise-constant data
    let mut rng = ChaCha8Rng::seed_from_u64(2027);
    let grid = Grid2D::new(33, 33, 1.0, 1.0).unwrap();
    for case in 0..20 {
        let mut segs = Vec::new();
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            let split = rng.gen_range(0.2..0.8);
            segs.push(Segment { side, t0: 0.0, t1: split, value: rng.gen_range(-2.0..2.0) });
            segs.push(Segment { side, t0: split, t1: 1.0, value: rng.gen_range(-2.0..2.0) });
        }
        let bc = BoundarySpec::new(segs).unwrap();
        let (lo, hi) = bc.value_range();
        let sol = solve_harmonic(&grid, &bc, 1e-11, 50_000).unwrap();
        for v in sol.values() {
            assert!(*v >= lo && *v <= hi, "case {case}: {v} outside [{lo}, {hi}]");
        }
    }
    pass(7, "harmonic solver", t0);
}

#[test]
fn criterion_08_elastic_regime_conditions() {
    let t0 = Instant::now();
    assert!(mat(12.0, 0.0, 0.0, 40.0).elastic_sufficient(1.0)); // 24 + 15 <= 40
    assert!(!mat(12.0, 0.0, 0.0, 10.0).elastic_sufficient(0.0)); // 24 > 10
    // whenever the global bound holds, the pointwise condition holds for all angles
    let mut rng = ChaCha8Rng::seed_from_u64(2028);
    let mut hits = 0;
    while hits < 50 {
        let p = MaterialParams::new(
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.1..15.0),
            0.0,
            0.0,
            rng.gen_range(0.0..80.0),
        )
        .unwrap();
        let beta = rng.gen_range(-2.0..2.0);
        if !p.elastic_sufficient(beta) {
            continue;
        }
        hits += 1;
        for k in 0..1000 {
            let alpha = TAU * k as f64 / 1000.0;
            assert!(s1_pointwise(&p, alpha, beta), "alpha = {alpha}");
        }
    }
    pass(8, "elastic-regime conditions and implication", t0);
}

const WELL_TOL: f64 = 0.3;

#[test]
fn criterion_09_tl1_patterning_run() {
    let t0 = Instant::now();
    let run = tl1_explicit();
    assert!(run.diag.converged, "flow did not reach stationarity");

    let p = mat(12.0, 1e-3, 0.0, 0.0);
    assert!(el_residual(&run.field, &p, Mode::Case2J, 0.0) <= 1e-6);

    // energy non-increasing on every step (diagnostics recorded each step)
    let e0 = run.diag.energies[0].abs();
    for (k, w) in run.diag.energies.windows(2).enumerate() {
        assert!(
            w[1] <= w[0] + 1e-12 * e0,
            "energy rose at record {k}: {} -> {}",
            w[0],
            w[1]
        );
    }

    let report = label_cells(&run.field, &[0.0, PI], WELL_TOL).unwrap();
    assert!(report.cell_count >= 2, "cell_count = {}", report.cell_count);
    assert!(
        report.layer_fraction < 0.25,
        "layer_fraction = {}",
        report.layer_fraction
    );
    // every non-layer node is within the tolerance of a well
    for (idx, label) in report.labels.iter().enumerate() {
        if *label != CellLabel::Layer {
            let v = run.field.values()[idx];
            let d = cyclic_distance(v, 0.0).min(cyclic_distance(v, PI));
            assert!(d <= WELL_TOL, "node {idx}: {v}");
        }
    }
    pass(9, "TL1 patterning run", t0);
}

fn median(widths: &[f64]) -> f64 {
    assert!(!widths.is_empty());
    let mut sorted = widths.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}

#[test]
fn criterion_10_layer_width_scaling() {
    let t0 = Instant::now();
    let base = tl1_explicit();
    let quad = tl1_quadruple_mu2();
    assert!(quad.diag.converged);
    let w1 = measure_layer_width(&base.field, (0.0, PI), 0.1, 0.9).unwrap();
    let w4 = measure_layer_width(&quad.field, (0.0, PI), 0.1, 0.9).unwrap();
    assert!(!w1.is_empty() && !w4.is_empty());
    let ratio = median(&w4) / median(&w1);
    assert!(
        (1.6..=2.4).contains(&ratio),
        "width ratio {ratio} (medians {} and {})",
        median(&w4),
        median(&w1)
    );
    pass(10, "layer width scaling in the curvature modulus", t0);
}

#[test]
fn criterion_11_scheme_agreement() {
    let t0 = Instant::now();
    let explicit = tl1_explicit();
    let semi = tl1_semi_implicit();
    assert!(semi.diag.converged);
    let diff = linf_diff(&explicit.field, &semi.field).unwrap();
    assert!(diff <= 1e-4, "scheme disagreement {diff}");
    pass(11, "explicit vs semi-implicit stationary states", t0);
}

#[test]
fn criterion_12_large_mu2_trend() {
    let t0 = Instant::now();
    let grid = Grid2D::new(65, 65, 1.0, 1.0).unwrap();
    let bc = tl1_bc();
    let harm = solve_harmonic(&grid, &bc, 1e-11, 100_000).unwrap();
    let mut dists = Vec::new();
    for mu2 in [1.0, 10.0, 100.0] {
        let p = mat(12.0, mu2, 0.0, 0.0);
        let f0 = solve_harmonic(&grid, &bc, 1e-10, 100_000).unwrap();
        let cfg = EvolveConfig {
            dt: None,
            t_end: 1e-3,
            stat_tol: 1e-8,
            max_steps: 2_000_000,
            scheme: Scheme::Explicit,
            mode: Mode::Case2J,
            record_every: 10_000,
        };
        let (f, diag) =
            evolve_to_stationary(&f0, &p, &bc, &ShearDrive::constant(0.0), &cfg).unwrap();
        assert!(diag.converged, "mu2 = {mu2}");
        dists.push(linf_diff(&f, &harm).unwrap());
    }
    assert!(
        dists[1] < dists[0] && dists[2] < dists[1],
        "distances to harmonic not strictly decreasing: {dists:?}"
    );
    pass(12, "stationary field approaches the harmonic limit", t0);
}

#[test]
fn criterion_13_cli_determinism() {
    let t0 = Instant::now();
    let scenario = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/tl1.cfg");
    assert!(scenario.exists(), "missing {}", scenario.display());
    let base = std::env::temp_dir().join("cosserat_acceptance_determinism");
    let _ = std::fs::remove_dir_all(&base);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = base.join(format!("run{run}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_cosserat-shear"))
            .arg("--config")
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .arg("evolve")
            .status()
            .expect("spawn binary");
        assert!(status.success(), "evolve run {run} failed");
        outputs.push(std::fs::read(out.join("alpha_final.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "alpha_final.csv differs between runs");
    let _ = std::fs::remove_dir_all(&base);
    pass(13, "bitwise-deterministic relaxation outputs", t0);
}
