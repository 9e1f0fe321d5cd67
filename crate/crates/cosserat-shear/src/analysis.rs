//! Diagnostics on stationary fields: partition labelling, layer-width
//! measurement, the boundary-data layer conditions, and the pointwise
//! elastic-regime check.

use crate::field::{BoundarySpec, ScalarField};
use crate::params::MaterialParams;
use crate::potential::{cyclic_distance, normalize_angle, scan_extrema, BifurcationTrace, ExtremumKind};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("wells list must not be empty and tol must be positive")]
    BadWells,
    #[error("layer levels need 0 < lo_frac < hi_frac < 1 and distinct wells")]
    BadLevels,
    #[error("trace misses the {branch} branch at beta = {beta}")]
    MissingBranch { branch: &'static str, beta: f64 },
    #[error("trace does not contain beta = {0}")]
    MissingBeta(f64),
    #[error("traced maximum at beta = {beta} disagrees with the brute-force scan ({traced} vs {scanned})")]
    TraceScanMismatch { beta: f64, traced: f64, scanned: f64 },
}

/// Per-node partition label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    /// Within tolerance of `wells[k]` (angular distance).
    Well(usize),
    Layer,
}

/// Partition of a field into well cells and layer nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub wells: Vec<f64>,
    pub tol: f64,
    /// Row-major labels, one per node.
    pub labels: Vec<CellLabel>,
    /// Connected components (4-neighbourhood) among non-layer nodes.
    pub cell_count: usize,
    /// Layer nodes over total nodes.
    pub layer_fraction: f64,
    /// Measured 10-90 style layer widths (filled by the caller when a
    /// two-well measurement applies).
    pub widths: Vec<f64>,
}

/// Labels each node by its nearest well (within `tol`, angular distance)
/// or as a layer node, and counts connected same-well components.
pub fn label_cells(
    f: &ScalarField,
    wells: &[f64],
    tol: f64,
) -> Result<PartitionReport, AnalysisError> {
    if wells.is_empty() || !(tol > 0.0) {
        return Err(AnalysisError::BadWells);
    }
    let grid = *f.grid();
    let labels: Vec<CellLabel> = f
        .values()
        .iter()
        .map(|v| {
            let mut best = (f64::INFINITY, 0usize);
            for (k, w) in wells.iter().enumerate() {
                let d = cyclic_distance(normalize_angle(*v), normalize_angle(*w));
                if d < best.0 {
                    best = (d, k);
                }
            }
            if best.0 <= tol {
                CellLabel::Well(best.1)
            } else {
                CellLabel::Layer
            }
        })
        .collect();

    let layer_nodes = labels.iter().filter(|l| **l == CellLabel::Layer).count();
    let layer_fraction = layer_nodes as f64 / labels.len() as f64;

    // flood fill over same-label non-layer nodes
    let (nx, ny) = (grid.nx, grid.ny);
    let mut seen = vec![false; labels.len()];
    let mut cell_count = 0usize;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if seen[start] || labels[start] == CellLabel::Layer {
            continue;
        }
        cell_count += 1;
        let want = labels[start];
        stack.push(start);
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx % nx, idx / nx);
            let mut push = |ii: usize, jj: usize, stack: &mut Vec<usize>| {
                let nidx = jj * nx + ii;
                if !seen[nidx] && labels[nidx] == want {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if i > 0 {
                push(i - 1, j, &mut stack);
            }
            if i + 1 < nx {
                push(i + 1, j, &mut stack);
            }
            if j > 0 {
                push(i, j - 1, &mut stack);
            }
            if j + 1 < ny {
                push(i, j + 1, &mut stack);
            }
        }
    }

    Ok(PartitionReport {
        wells: wells.to_vec(),
        tol,
        labels,
        cell_count,
        layer_fraction,
        widths: Vec::new(),
    })
}

/// Measures layer widths along every grid row and column: wherever the
/// field passes through the band between `w0 + lo_frac (w1 - w0)` and
/// `w0 + hi_frac (w1 - w0)` (in either direction), the traversed arc
/// length between the two level crossings (linear interpolation) is one
/// width. Returns the empty list when no crossing exists.
pub fn measure_layer_width(
    f: &ScalarField,
    wells: (f64, f64),
    lo_frac: f64,
    hi_frac: f64,
) -> Result<Vec<f64>, AnalysisError> {
    if wells.0 == wells.1 || !(lo_frac > 0.0 && lo_frac < hi_frac && hi_frac < 1.0) {
        return Err(AnalysisError::BadLevels);
    }
    let lo = wells.0 + lo_frac * (wells.1 - wells.0);
    let hi = wells.0 + hi_frac * (wells.1 - wells.0);
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let grid = *f.grid();
    let mut widths = Vec::new();

    let mut scan_line = |values: &mut dyn Iterator<Item = f64>, h: f64| {
        #[derive(Clone, Copy, PartialEq)]
        enum Zone {
            Below,
            Inside,
            Above,
        }
        let zone = |v: f64| {
            if v < lo {
                Zone::Below
            } else if v > hi {
                Zone::Above
            } else {
                Zone::Inside
            }
        };
        let cross = |a: f64, b: f64, level: f64, k: usize| {
            // position of the level crossing inside cell [k-1, k]
            (k as f64 - 1.0 + (level - a) / (b - a)) * h
        };
        let mut prev: Option<f64> = None;
        // (zone we entered the band from, entry position)
        let mut entry: Option<(Zone, f64)> = None;
        for (k, v) in values.enumerate() {
            if let Some(pv) = prev {
                let (zp, zv) = (zone(pv), zone(v));
                if zp != zv {
                    match (zp, zv) {
                        (Zone::Below, Zone::Inside) => entry = Some((Zone::Below, cross(pv, v, lo, k))),
                        (Zone::Above, Zone::Inside) => entry = Some((Zone::Above, cross(pv, v, hi, k))),
                        (Zone::Inside, Zone::Above) => {
                            if let Some((Zone::Below, x0)) = entry {
                                widths.push(cross(pv, v, hi, k) - x0);
                            }
                            entry = None;
                        }
                        (Zone::Inside, Zone::Below) => {
                            if let Some((Zone::Above, x0)) = entry {
                                widths.push(cross(pv, v, lo, k) - x0);
                            }
                            entry = None;
                        }
                        (Zone::Below, Zone::Above) => {
                            // full band inside one cell
                            widths.push(cross(pv, v, hi, k) - cross(pv, v, lo, k));
                            entry = None;
                        }
                        (Zone::Above, Zone::Below) => {
                            widths.push(cross(pv, v, lo, k) - cross(pv, v, hi, k));
                            entry = None;
                        }
                        _ => {}
                    }
                }
            } else if zone(v) != Zone::Inside {
                entry = None;
            }
            prev = Some(v);
        }
    };

    let v = f.values();
    for j in 0..grid.ny {
        let mut it = v[j * grid.nx..(j + 1) * grid.nx].iter().copied();
        scan_line(&mut it, grid.hx());
    }
    for i in 0..grid.nx {
        let mut it = (0..grid.ny).map(|j| v[j * grid.nx + i]);
        scan_line(&mut it, grid.hy());
    }
    Ok(widths)
}

fn in_band_d1_tl1(v: f64) -> bool {
    let v = normalize_angle(v);
    v < std::f64::consts::FRAC_PI_2 || v > 1.5 * std::f64::consts::PI
}

fn in_band_d2_tl1(v: f64) -> bool {
    let v = normalize_angle(v);
    v > std::f64::consts::FRAC_PI_2 && v < 1.5 * std::f64::consts::PI
}

/// Sufficient layer condition on the boundary data for the zero-shear
/// potential: some positive-length segments lie in the basin of the 0 well
/// (`[0, pi/2)` or `(3pi/2, 2pi)`) and others in the basin of the pi well
/// (`(pi/2, 3pi/2)`).
pub fn check_tl1(bc: &BoundarySpec) -> bool {
    let mut d1 = false;
    let mut d2 = false;
    for s in bc.segments() {
        if s.t1 - s.t0 <= 0.0 {
            continue;
        }
        if in_band_d1_tl1(s.value) {
            d1 = true;
        } else if in_band_d2_tl1(s.value) {
            d2 = true;
        }
    }
    d1 && d2
}

fn trace_maxima_at(
    trace: &BifurcationTrace,
    beta: f64,
) -> Result<(f64, f64), AnalysisError> {
    let k = trace
        .betas
        .iter()
        .position(|b| (b - beta).abs() <= 1e-9)
        .ok_or(AnalysisError::MissingBeta(beta))?;
    let m1 = trace.max1[k].ok_or(AnalysisError::MissingBranch {
        branch: "M1",
        beta,
    })?;
    let m2 = trace.max2[k].ok_or(AnalysisError::MissingBranch {
        branch: "M2",
        beta,
    })?;
    Ok((m1.alpha, m2.alpha))
}

/// Time-independent sufficient layer condition for the driven problem,
/// using the maxima branches at the extreme shears: clause one is
/// `[0, M1(2))` or `(M2(-2), 2pi)`, clause two `(M1(-2), M2(2))`. The `M`
/// values are taken from the trace and cross-checked against the
/// brute-force extrema scan.
pub fn check_tl2(
    p: &MaterialParams,
    bc: &BoundarySpec,
    trace: &BifurcationTrace,
) -> Result<bool, AnalysisError> {
    let (m1_hi, m2_hi) = trace_maxima_at(trace, 2.0)?;
    let (m1_lo, m2_lo) = trace_maxima_at(trace, -2.0)?;

    // cross-check against the scan
    for (beta, traced) in [(2.0, m1_hi), (2.0, m2_hi), (-2.0, m1_lo), (-2.0, m2_lo)] {
        let scan = scan_extrema(p, beta, 100_000);
        let ok = scan
            .iter()
            .filter(|s| s.kind == ExtremumKind::Maximum)
            .any(|s| cyclic_distance(s.alpha, traced) < 1e-6);
        if !ok {
            let nearest = scan
                .iter()
                .filter(|s| s.kind == ExtremumKind::Maximum)
                .map(|s| s.alpha)
                .fold(f64::NAN, |acc, a| {
                    if acc.is_nan() || cyclic_distance(a, traced) < cyclic_distance(acc, traced) {
                        a
                    } else {
                        acc
                    }
                });
            return Err(AnalysisError::TraceScanMismatch {
                beta,
                traced,
                scanned: nearest,
            });
        }
    }

    let clause1 = |v: f64| {
        let v = normalize_angle(v);
        v < m1_hi || v > m2_lo
    };
    let clause2 = |v: f64| {
        let v = normalize_angle(v);
        v > m1_lo && v < m2_hi
    };
    let mut d1 = false;
    let mut d2 = false;
    for s in bc.segments() {
        if s.t1 - s.t0 <= 0.0 {
            continue;
        }
        if clause1(s.value) {
            d1 = true;
        } else if clause2(s.value) {
            d2 = true;
        }
    }
    Ok(d1 && d2)
}

/// The subdifferential expression whose membership in `[-sigma_y, sigma_y]`
/// keeps the slip at zero.
pub fn s1_expression(p: &MaterialParams, alpha: f64, beta: f64) -> f64 {
    let a = p.lambda + p.mu;
    let b = p.mu_c - p.lambda - p.mu;
    let (sa, ca) = alpha.sin_cos();
    -2.0 * (b * ca + a) * sa - beta * (p.mu + a * sa * sa + p.mu_c * ca * ca)
}

/// Pointwise elastic-regime check: no plastic flow starts at `(alpha, beta)`.
pub fn s1_pointwise(p: &MaterialParams, alpha: f64, beta: f64) -> bool {
    s1_expression(p, alpha, beta).abs() <= p.sigma_y
}

/// Evaluates [`s1_pointwise`] at every node.
pub fn field_elastic_report(p: &MaterialParams, f: &ScalarField, beta: f64) -> (f64, bool) {
    let total = f.values().len();
    let elastic = f
        .values()
        .iter()
        .filter(|v| s1_pointwise(p, **v, beta))
        .count();
    (elastic as f64 / total as f64, elastic == total)
}

/// Strictness slack for the branch monotonicity test.
const MONOTONE_SLACK: f64 = 1e-10;

/// True iff both maxima branches move strictly monotonically in the
/// direction the time-independent layer condition relies on: `M1` and `M2`
/// strictly decreasing along the beta grid (each consecutive difference
/// below `-1e-10`). Errors if a maxima branch is absent anywhere.
pub fn monotone_maxima(trace: &BifurcationTrace) -> Result<bool, AnalysisError> {
    for (name, branch) in [("M1", &trace.max1), ("M2", &trace.max2)] {
        for (k, v) in branch.iter().enumerate() {
            if v.is_none() {
                return Err(AnalysisError::MissingBranch {
                    branch: if name == "M1" { "M1" } else { "M2" },
                    beta: trace.betas[k],
                });
            }
        }
        for w in branch.windows(2) {
            let (a, b) = (w[0].unwrap().alpha, w[1].unwrap().alpha);
            if !(b - a < -MONOTONE_SLACK) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
