//! The scalar reaction potentials `J` and `J_beta`, their derivatives,
//! Newton search for stationary points, and branch tracing over the shear
//! parameter.
//!
//! With `a = lambda + mu` and `b = mu_c - lambda - mu`:
//!
//! ```text
//! J(alpha)      = -a cos(alpha) + (b/2) sin^2(alpha)
//! J_beta(alpha) = -(a - (beta b / 2) sin(alpha)) cos(alpha)
//!                 + (beta a / 2) sin(alpha)
//!                 + (b/2) (1 - beta^2/4) sin^2(alpha)
//! ```
//!
//! `J_0` coincides with `J`. Newton iteration runs on the unwrapped real
//! line; angles are normalised to `[0, 2*pi)` only on output.

use crate::params::MaterialParams;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("Newton iteration left [-2pi, 4pi) after {iters} iterations (last iterate {last})")]
    Diverged { last: f64, iters: usize },
    #[error("Newton did not converge in {iters} iterations (last iterate {last}, |J'| = {residual:.3e})")]
    NoConvergence {
        last: f64,
        iters: usize,
        residual: f64,
    },
    #[error("second derivative vanished at iterate {0}")]
    FlatSecondDerivative(f64),
    #[error("no stationary points found from {0} seeds; potential evaluation is broken")]
    NoExtrema(usize),
    #[error("need at least 8 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("beta grid must be non-empty and strictly increasing")]
    BadBetaGrid,
}

/// Classification of a stationary point by the sign of the second
/// derivative relative to the scale-aware tolerance [`class_tol`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Minimum,
    Maximum,
    Degenerate,
}

/// A converged stationary point of `J_beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    /// Angle in `[0, 2*pi)`.
    pub alpha: f64,
    pub kind: ExtremumKind,
    /// Potential value at `alpha`.
    pub value: f64,
    pub second_deriv: f64,
}

/// One tracked point on a bifurcation branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Angle in `[0, 2*pi)`.
    pub alpha: f64,
    pub value: f64,
    pub second_deriv: f64,
}

/// Minima (`m1`, `m2`) and maxima (`max1`, `max2`) branches of `J_beta`
/// followed over a shear grid. An entry is `None` where the branch has
/// disappeared (Newton failure, lost classification, or a jump).
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationTrace {
    pub betas: Vec<f64>,
    pub m1: Vec<Option<TracePoint>>,
    pub m2: Vec<Option<TracePoint>>,
    pub max1: Vec<Option<TracePoint>>,
    pub max2: Vec<Option<TracePoint>>,
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn normalize_angle(alpha: f64) -> f64 {
    let r = alpha.rem_euclid(TAU);
    // rem_euclid of a tiny negative rounds to TAU itself
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn cyclic_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Signed angular step from `from` to `to`, wrapped into `(-pi, pi]`.
fn cyclic_signed_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

#[inline]
fn ab(p: &MaterialParams) -> (f64, f64) {
    (p.lambda + p.mu, p.mu_c - p.lambda - p.mu)
}

/// `J(alpha) = -(lambda+mu) cos(alpha) + (mu_c-lambda-mu)/2 sin^2(alpha)`.
pub fn j_value(p: &MaterialParams, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    -a * ca + 0.5 * b * sa * sa
}

/// `J'(alpha) = [lambda+mu + (mu_c-lambda-mu) cos(alpha)] sin(alpha)`.
pub fn j_deriv(p: &MaterialParams, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    (a + b * ca) * sa
}

/// `J''(alpha) = (lambda+mu) cos(alpha) + (mu_c-lambda-mu) cos(2 alpha)`.
pub fn j_second(p: &MaterialParams, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    a * ca + b * (ca * ca - sa * sa)
}

/// The sheared potential `J_beta`; `J_0` equals `J`.
pub fn jbeta_value(p: &MaterialParams, beta: f64, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    let damp = 1.0 - 0.25 * beta * beta;
    -(a - 0.5 * beta * b * sa) * ca + 0.5 * beta * a * sa + 0.5 * b * damp * sa * sa
}

/// First derivative of `J_beta` in `alpha`.
pub fn jbeta_deriv(p: &MaterialParams, beta: f64, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    let damp = 1.0 - 0.25 * beta * beta;
    (a + b * damp * ca) * sa + 0.5 * beta * (a * ca + b * (ca * ca - sa * sa))
}

/// Second derivative of `J_beta` in `alpha`.
pub fn jbeta_second(p: &MaterialParams, beta: f64, alpha: f64) -> f64 {
    let (a, b) = ab(p);
    let (sa, ca) = alpha.sin_cos();
    let damp = 1.0 - 0.25 * beta * beta;
    a * ca + b * damp * (ca * ca - sa * sa) - 0.5 * beta * (a * sa + 4.0 * b * sa * ca)
}

/// Upper bound for `|J_beta''|` over all angles; used for time-step control.
pub fn jbeta_second_bound(p: &MaterialParams, beta: f64) -> f64 {
    let (a, b) = ab(p);
    let damp = (1.0 - 0.25 * beta * beta).abs();
    a + b.abs() * damp + 0.5 * beta.abs() * (a + 2.0 * b.abs())
}

/// Newton residual tolerance, relative to the modulus scale.
pub fn newton_tol(p: &MaterialParams) -> f64 {
    1e-12 * (p.lambda + p.mu + p.mu_c).max(1.0)
}

/// Below this |second derivative| a stationary point is reported degenerate.
pub fn class_tol(p: &MaterialParams) -> f64 {
    1e-8 * (p.lambda + p.mu + p.mu_c)
}

fn classify(p: &MaterialParams, second: f64) -> ExtremumKind {
    let tol = class_tol(p);
    if second > tol {
        ExtremumKind::Minimum
    } else if second < -tol {
        ExtremumKind::Maximum
    } else {
        ExtremumKind::Degenerate
    }
}

/// Newton iteration on `J_beta'` starting from `alpha0`.
///
/// Fails on divergence out of `[-2*pi, 4*pi)`, on a vanishing second
/// derivative, or when `max_iter` updates do not reach the residual
/// tolerance; the error carries the last iterate.
pub fn find_stationary(
    p: &MaterialParams,
    beta: f64,
    alpha0: f64,
    max_iter: usize,
) -> Result<StationaryPoint, PotentialError> {
    let tol = newton_tol(p);
    let mut x = alpha0;
    for it in 0..=max_iter {
        let f = jbeta_deriv(p, beta, x);
        if f.abs() <= tol {
            let second = jbeta_second(p, beta, x);
            return Ok(StationaryPoint {
                alpha: normalize_angle(x),
                kind: classify(p, second),
                value: jbeta_value(p, beta, x),
                second_deriv: second,
            });
        }
        if it == max_iter {
            return Err(PotentialError::NoConvergence {
                last: x,
                iters: max_iter,
                residual: f.abs(),
            });
        }
        let fpp = jbeta_second(p, beta, x);
        if fpp == 0.0 || !fpp.is_finite() {
            return Err(PotentialError::FlatSecondDerivative(x));
        }
        x -= f / fpp;
        if !(-TAU..2.0 * TAU).contains(&x) {
            return Err(PotentialError::Diverged { last: x, iters: it + 1 });
        }
    }
    unreachable!()
}

pub const DEFAULT_NEWTON_ITER: usize = 50;

/// Angular radius within which converged seeds count as the same point.
const DEDUP_RADIUS: f64 = 1e-6;

/// Runs Newton from `n_seeds` equispaced seeds and returns the distinct
/// stationary points in `[0, 2*pi)`, sorted by angle. Failed seeds are
/// skipped; finding nothing at all is an error (impossible for a smooth
/// periodic potential and signals a broken evaluation).
pub fn list_extrema(
    p: &MaterialParams,
    beta: f64,
    n_seeds: usize,
) -> Result<Vec<StationaryPoint>, PotentialError> {
    if n_seeds < 8 {
        return Err(PotentialError::TooFewSeeds(n_seeds));
    }
    let mut found: Vec<StationaryPoint> = Vec::new();
    for k in 0..n_seeds {
        let seed = TAU * k as f64 / n_seeds as f64;
        if let Ok(sp) = find_stationary(p, beta, seed, DEFAULT_NEWTON_ITER) {
            found.push(sp);
        }
    }
    if found.is_empty() {
        return Err(PotentialError::NoExtrema(n_seeds));
    }
    found.sort_by(|u, v| u.alpha.total_cmp(&v.alpha));
    let mut distinct: Vec<StationaryPoint> = Vec::new();
    for sp in found {
        if let Some(last) = distinct.last() {
            if (sp.alpha - last.alpha).abs() <= DEDUP_RADIUS {
                continue;
            }
        }
        distinct.push(sp);
    }
    // the list is sorted, so only the first and last can still alias (0 vs 2*pi)
    if distinct.len() > 1 {
        let first = distinct[0];
        let last = *distinct.last().unwrap();
        if cyclic_distance(first.alpha, last.alpha) <= DEDUP_RADIUS {
            distinct.pop();
        }
    }
    Ok(distinct)
}

/// Brute-force sign-change scan of `J_beta'` on a uniform grid, refined by
/// bisection. Independent of the Newton path; used as a cross-check.
pub fn scan_extrema(p: &MaterialParams, beta: f64, n_grid: usize) -> Vec<StationaryPoint> {
    assert!(n_grid >= 16);
    let h = TAU / n_grid as f64;
    let mut points = Vec::new();
    let mut f_prev = jbeta_deriv(p, beta, 0.0);
    for k in 0..n_grid {
        let x0 = k as f64 * h;
        let x1 = (k + 1) as f64 * h;
        let f_next = jbeta_deriv(p, beta, x1);
        if f_prev == 0.0 || f_prev * f_next < 0.0 {
            let root = if f_prev == 0.0 {
                x0
            } else {
                let (mut lo, mut hi) = (x0, x1);
                let (mut flo, _) = (f_prev, f_next);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = jbeta_deriv(p, beta, mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                0.5 * (lo + hi)
            };
            let second = jbeta_second(p, beta, root);
            points.push(StationaryPoint {
                alpha: normalize_angle(root),
                kind: classify(p, second),
                value: jbeta_value(p, beta, root),
                second_deriv: second,
            });
        }
        f_prev = f_next;
    }
    points.sort_by(|u, v| u.alpha.total_cmp(&v.alpha));
    points.dedup_by(|u, v| (u.alpha - v.alpha).abs() <= DEDUP_RADIUS);
    if points.len() > 1 {
        let first = points[0].alpha;
        let last = points.last().unwrap().alpha;
        if cyclic_distance(first, last) <= DEDUP_RADIUS {
            points.pop();
        }
    }
    points
}

/// Seeds used for the first grid point of a trace.
const TRACE_SEEDS: usize = 64;

/// A continuation step must stay within this angular distance of the
/// previous branch value; larger moves count as losing the branch.
const BRANCH_JUMP_GUARD: f64 = 0.5;

struct BranchState {
    /// Unwrapped current angle, `None` once the branch is lost.
    unwrapped: Option<f64>,
    want: ExtremumKind,
    points: Vec<Option<TracePoint>>,
}

impl BranchState {
    fn new(want: ExtremumKind) -> Self {
        BranchState {
            unwrapped: None,
            want,
            points: Vec::new(),
        }
    }

    fn start(&mut self, sp: Option<&StationaryPoint>) {
        match sp {
            Some(sp) => {
                self.unwrapped = Some(sp.alpha);
                self.points.push(Some(TracePoint {
                    alpha: sp.alpha,
                    value: sp.value,
                    second_deriv: sp.second_deriv,
                }));
            }
            None => self.points.push(None),
        }
    }

    fn advance(&mut self, p: &MaterialParams, beta: f64) {
        let Some(prev) = self.unwrapped else {
            self.points.push(None);
            return;
        };
        let next = match find_stationary(p, beta, normalize_angle(prev), DEFAULT_NEWTON_ITER) {
            Ok(sp) if sp.kind == self.want => {
                let step = cyclic_signed_delta(normalize_angle(prev), sp.alpha);
                if step.abs() <= BRANCH_JUMP_GUARD {
                    self.unwrapped = Some(prev + step);
                    Some(TracePoint {
                        alpha: sp.alpha,
                        value: sp.value,
                        second_deriv: sp.second_deriv,
                    })
                } else {
                    None
                }
            }
            _ => None,
        };
        if next.is_none() {
            self.unwrapped = None;
        }
        self.points.push(next);
    }
}

/// Follows the minima and maxima branches of `J_beta` over `beta_grid` by
/// Newton continuation seeded from the previous grid point. The first grid
/// point is initialised from [`list_extrema`]; minima are named `m1 < m2`
/// by angle there, and `max1` is the maximum lying cyclically between them.
pub fn trace_extrema(
    p: &MaterialParams,
    beta_grid: &[f64],
) -> Result<BifurcationTrace, PotentialError> {
    if beta_grid.is_empty() || beta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PotentialError::BadBetaGrid);
    }
    let start = list_extrema(p, beta_grid[0], TRACE_SEEDS)?;
    let minima: Vec<&StationaryPoint> = start
        .iter()
        .filter(|s| s.kind == ExtremumKind::Minimum)
        .collect();
    let maxima: Vec<&StationaryPoint> = start
        .iter()
        .filter(|s| s.kind == ExtremumKind::Maximum)
        .collect();

    let (m1_0, m2_0) = (minima.first().copied(), minima.get(1).copied());
    // max1 sits cyclically between m1 and m2 when both minima exist
    let (max1_0, max2_0) = match (m1_0, m2_0, maxima.len()) {
        (Some(m1), Some(m2), _) => {
            let inside = |x: f64| {
                let span = normalize_angle(m2.alpha - m1.alpha);
                normalize_angle(x - m1.alpha) < span
            };
            let mut first = None;
            let mut second = None;
            for mx in &maxima {
                if inside(mx.alpha) && first.is_none() {
                    first = Some(*mx);
                } else if second.is_none() {
                    second = Some(*mx);
                }
            }
            (first, second)
        }
        _ => (maxima.first().copied(), maxima.get(1).copied()),
    };

    let mut m1 = BranchState::new(ExtremumKind::Minimum);
    let mut m2 = BranchState::new(ExtremumKind::Minimum);
    let mut max1 = BranchState::new(ExtremumKind::Maximum);
    let mut max2 = BranchState::new(ExtremumKind::Maximum);
    m1.start(m1_0);
    m2.start(m2_0);
    max1.start(max1_0);
    max2.start(max2_0);

    for &beta in &beta_grid[1..] {
        m1.advance(p, beta);
        m2.advance(p, beta);
        max1.advance(p, beta);
        max2.advance(p, beta);
    }

    Ok(BifurcationTrace {
        betas: beta_grid.to_vec(),
        m1: m1.points,
        m2: m2.points,
        max1: max1.points,
        max2: max2.points,
    })
}

/// Numerically symmetric linspace: hits both endpoints exactly and returns
/// exact zero when the range is symmetric.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo);
    let den = (n - 1) as f64;
    (0..n)
        .map(|k| (lo * (den - k as f64) + hi * k as f64) / den)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MaterialParams;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn mat(mu_c: f64) -> MaterialParams {
        MaterialParams::new(1.0, 1.0, mu_c, 0.0, 0.0, 0.0).unwrap()
    }

    fn rand_params(rng: &mut ChaCha8Rng) -> MaterialParams {
        MaterialParams::new(
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.1..15.0),
            0.0,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn j_value_anchors() {
        let p = mat(12.0);
        assert!((j_value(&p, 0.0) + 2.0).abs() < 1e-14);
        assert!((j_value(&p, PI) - 2.0).abs() < 1e-14);
        // 0 + (10/2) * 1
        assert!((j_value(&p, FRAC_PI_2) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn j_deriv_zeros_and_closed_root() {
        let p = mat(12.0);
        assert_eq!(j_deriv(&p, 0.0), 0.0);
        assert!(j_deriv(&p, PI).abs() < 1e-14);
        let root = (-0.2f64).acos(); // cos(alpha) = -(lambda+mu)/(mu_c-lambda-mu)
        assert!(j_deriv(&p, root).abs() < 1e-13);
    }

    #[test]
    fn j_second_anchors() {
        let p = mat(12.0);
        assert!((j_second(&p, 0.0) - 12.0).abs() < 1e-13);
        assert!((j_second(&p, PI) - 8.0).abs() < 1e-13);
        let p1 = mat(1.0);
        assert!((j_second(&p1, PI) + 3.0).abs() < 1e-13);
    }

    #[test]
    fn jbeta_reduces_to_j_at_zero_shear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = rand_params(&mut rng);
            let alpha = rng.gen_range(-10.0..10.0);
            assert_eq!(jbeta_value(&p, 0.0, alpha), j_value(&p, alpha));
            assert_eq!(jbeta_deriv(&p, 0.0, alpha), j_deriv(&p, alpha));
        }
    }

    #[test]
    fn jbeta_anchors() {
        let p = mat(6.0);
        // sin(alpha) = 0 kills every beta term
        assert!((jbeta_value(&p, 2.0, 0.0) + 2.0).abs() < 1e-14);
        // recomputed by hand: only (beta/2)(lambda+mu) sin survives at pi/2, beta=2
        assert!((jbeta_value(&p, 2.0, FRAC_PI_2) - 2.0).abs() < 1e-14);
        // (beta/2) (a cos + b cos 2a) at alpha=0: (2/2)(2 + 4) = 6
        assert!((jbeta_deriv(&p, 2.0, 0.0) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-5;
        for _ in 0..1000 {
            let p = rand_params(&mut rng);
            let beta = rng.gen_range(-3.0..3.0);
            let alpha = rng.gen_range(0.0..TAU);
            let fd = (jbeta_value(&p, beta, alpha + h) - jbeta_value(&p, beta, alpha - h)) / (2.0 * h);
            let an = jbeta_deriv(&p, beta, alpha);
            assert!(
                (an - fd).abs() <= 1e-6 * an.abs().max(1.0),
                "J_beta' mismatch: analytic {an}, fd {fd}"
            );
            let fd2 = (jbeta_deriv(&p, beta, alpha + h) - jbeta_deriv(&p, beta, alpha - h)) / (2.0 * h);
            let an2 = jbeta_second(&p, beta, alpha);
            assert!(
                (an2 - fd2).abs() <= 1e-6 * an2.abs().max(1.0),
                "J_beta'' mismatch: analytic {an2}, fd {fd2}"
            );
        }
    }

    #[test]
    fn periodicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..300 {
            let p = rand_params(&mut rng);
            let beta = rng.gen_range(-3.0..3.0);
            let alpha = rng.gen_range(0.0..TAU);
            assert!((j_value(&p, alpha) - j_value(&p, alpha + TAU)).abs() < 1e-12);
            assert!((jbeta_value(&p, beta, alpha) - jbeta_value(&p, beta, alpha + TAU)).abs() < 1e-12);
        }
    }

    #[test]
    fn evenness_at_zero_shear() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let p = rand_params(&mut rng);
            let alpha = rng.gen_range(0.0..TAU);
            assert!((j_value(&p, alpha) - j_value(&p, -alpha)).abs() < 1e-13);
        }
    }

    #[test]
    fn newton_finds_the_three_reference_points() {
        let p = mat(12.0);
        let sp = find_stationary(&p, 0.0, 0.1, 50).unwrap();
        assert_eq!(sp.kind, ExtremumKind::Minimum);
        assert!(cyclic_distance(sp.alpha, 0.0) < 1e-10);

        let sp = find_stationary(&p, 0.0, 3.0, 50).unwrap();
        assert_eq!(sp.kind, ExtremumKind::Minimum);
        assert!((sp.alpha - PI).abs() < 1e-10);

        let sp = find_stationary(&p, 0.0, 1.7, 50).unwrap();
        assert_eq!(sp.kind, ExtremumKind::Maximum);
        assert!((sp.alpha - (-0.2f64).acos()).abs() < 1e-10);
        assert!(sp.second_deriv < 0.0);
    }

    #[test]
    fn newton_reports_nonconvergence() {
        let p = mat(12.0);
        let err = find_stationary(&p, 0.0, 1.0, 0);
        assert!(matches!(err, Err(PotentialError::NoConvergence { .. })));
    }

    #[test]
    fn newton_reports_divergence() {
        // seeding right at an inflection point makes the first step huge
        let p = mat(12.0);
        let mut inflection = 0.85;
        for _ in 0..60 {
            // bisect J'' to sit almost exactly on the inflection
            let f = j_second(&p, inflection);
            inflection -= f * 1e-3;
            if j_second(&p, inflection).abs() < 1e-9 {
                break;
            }
        }
        let err = find_stationary(&p, 0.0, inflection, 50);
        assert!(matches!(
            err,
            Err(PotentialError::Diverged { .. }) | Err(PotentialError::NoConvergence { .. })
        ));
    }

    #[test]
    fn listing_needs_enough_seeds() {
        let p = mat(12.0);
        assert!(matches!(
            list_extrema(&p, 0.0, 7),
            Err(PotentialError::TooFewSeeds(7))
        ));
        assert!(list_extrema(&p, 0.0, 8).is_ok());
    }

    #[test]
    fn extrema_for_reference_materials() {
        let p = mat(12.0);
        let pts = list_extrema(&p, 0.0, 64).unwrap();
        let minima: Vec<f64> = pts
            .iter()
            .filter(|s| s.kind == ExtremumKind::Minimum)
            .map(|s| s.alpha)
            .collect();
        let maxima: Vec<f64> = pts
            .iter()
            .filter(|s| s.kind == ExtremumKind::Maximum)
            .map(|s| s.alpha)
            .collect();
        assert_eq!(minima.len(), 2);
        assert!(cyclic_distance(minima[0], 0.0) < 1e-9);
        assert!((minima[1] - PI).abs() < 1e-9);
        assert_eq!(maxima.len(), 2);
        let root = (-0.2f64).acos();
        assert!((maxima[0] - root).abs() < 1e-9);
        assert!((maxima[1] - (TAU - root)).abs() < 1e-9);

        let single = list_extrema(&mat(1.0), 0.0, 64).unwrap();
        let minima: Vec<&StationaryPoint> = single
            .iter()
            .filter(|s| s.kind == ExtremumKind::Minimum)
            .collect();
        assert_eq!(minima.len(), 1);
        assert!(cyclic_distance(minima[0].alpha, 0.0) < 1e-9);

        let p6 = mat(6.0);
        let minima: Vec<f64> = list_extrema(&p6, 0.0, 64)
            .unwrap()
            .into_iter()
            .filter(|s| s.kind == ExtremumKind::Minimum)
            .map(|s| s.alpha)
            .collect();
        assert_eq!(minima.len(), 2);
        assert!(cyclic_distance(minima[0], 0.0) < 1e-9);
        assert!((minima[1] - PI).abs() < 1e-9);
    }

    #[test]
    fn newton_extrema_match_brute_force_scan() {
        for mu_c in [1.0, 3.0, 5.0, 6.0, 12.0] {
            for beta in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let p = mat(mu_c);
                let newton = list_extrema(&p, beta, 64).unwrap();
                let scan = scan_extrema(&p, beta, 100_000);
                assert_eq!(
                    newton.len(),
                    scan.len(),
                    "count mismatch at mu_c={mu_c}, beta={beta}"
                );
                for (n, s) in newton.iter().zip(scan.iter()) {
                    assert!(
                        cyclic_distance(n.alpha, s.alpha) < 1e-6,
                        "angle mismatch at mu_c={mu_c}, beta={beta}: {} vs {}",
                        n.alpha,
                        s.alpha
                    );
                    assert_eq!(n.kind, s.kind);
                }
            }
        }
    }

    #[test]
    fn well_count_sweep() {
        for (mu_c, wells) in [(1.0, 1), (3.0, 1), (5.0, 2), (12.0, 2)] {
            let p = mat(mu_c);
            let count = list_extrema(&p, 0.0, 64)
                .unwrap()
                .iter()
                .filter(|s| s.kind == ExtremumKind::Minimum)
                .count();
            assert_eq!(count, wells, "mu_c = {mu_c}");
            assert_eq!(p.has_two_wells(), wells == 2);
        }
    }

    #[test]
    fn extrema_alternate_cyclically() {
        for mu_c in [5.0, 6.0, 12.0] {
            for beta in [-2.0, -0.7, 0.0, 1.3, 2.0] {
                let pts = list_extrema(&mat(mu_c), beta, 64).unwrap();
                assert!(pts.len() % 2 == 0);
                for k in 0..pts.len() {
                    let next = &pts[(k + 1) % pts.len()];
                    assert_ne!(pts[k].kind, next.kind, "mu_c={mu_c} beta={beta}");
                }
            }
        }
    }

    /// At beta = +/-2 the stationary points have closed forms:
    /// minima where sin+cos = 0, maxima where sin-cos = 1/2
    /// (cosines are the roots of 2c^2 + c - 3/4 = 0).
    #[test]
    fn exact_stationary_points_at_extreme_shear() {
        let p = mat(6.0);
        let pts = list_extrema(&p, 2.0, 64).unwrap();
        let c1 = (7.0f64.sqrt() - 1.0) / 4.0; // sin = c1 + 1/2 > 0
        let c2 = -(1.0 + 7.0f64.sqrt()) / 4.0; // sin = c2 + 1/2 < 0
        let max1 = c1.acos();
        let max2 = TAU - c2.acos();
        assert_eq!(pts.len(), 4);
        assert!((pts[0].alpha - max1).abs() < 1e-9);
        assert_eq!(pts[0].kind, ExtremumKind::Maximum);
        assert!((pts[1].alpha - 3.0 * FRAC_PI_4).abs() < 1e-9);
        assert_eq!(pts[1].kind, ExtremumKind::Minimum);
        assert!((pts[2].alpha - max2).abs() < 1e-9);
        assert_eq!(pts[2].kind, ExtremumKind::Maximum);
        assert!((pts[3].alpha - 7.0 * FRAC_PI_4).abs() < 1e-9);
        assert_eq!(pts[3].kind, ExtremumKind::Minimum);

        // mirror symmetry J_{-beta}(2*pi - alpha) = J_beta(alpha)
        let pts_neg = list_extrema(&p, -2.0, 64).unwrap();
        assert_eq!(pts_neg.len(), 4);
        assert!((pts_neg[0].alpha - FRAC_PI_4).abs() < 1e-9);
        assert_eq!(pts_neg[0].kind, ExtremumKind::Minimum);
        assert!((pts_neg[2].alpha - 5.0 * FRAC_PI_4).abs() < 1e-9);
        assert_eq!(pts_neg[2].kind, ExtremumKind::Minimum);
    }

    #[test]
    fn trace_reference_grid() {
        let p = mat(6.0);
        let grid = linspace(-2.0, 2.0, 81);
        assert_eq!(grid[40], 0.0); // symmetric linspace hits zero exactly
        let tr = trace_extrema(&p, &grid).unwrap();

        // all four branches exist everywhere on this range
        for k in 0..81 {
            assert!(tr.m1[k].is_some() && tr.m2[k].is_some());
            assert!(tr.max1[k].is_some() && tr.max2[k].is_some());
        }
        // at beta = 0 the minima sit at 0 and pi
        let m1_0 = tr.m1[40].unwrap();
        let m2_0 = tr.m2[40].unwrap();
        assert!(cyclic_distance(m1_0.alpha, 0.0) < 1e-8);
        assert!((m2_0.alpha - PI).abs() < 1e-8);

        // branch continuity in the cyclic metric
        for br in [&tr.m1, &tr.m2, &tr.max1, &tr.max2] {
            for w in br.windows(2) {
                let (a, b) = (w[0].unwrap(), w[1].unwrap());
                assert!(cyclic_distance(a.alpha, b.alpha) < 0.2);
            }
        }

        // each traced point is a genuine stationary point of the right kind
        for (k, &beta) in tr.betas.iter().enumerate() {
            for (br, min) in [(&tr.m1, true), (&tr.m2, true), (&tr.max1, false), (&tr.max2, false)] {
                let tp = br[k].unwrap();
                assert!(jbeta_deriv(&p, beta, tp.alpha).abs() <= 1e-10);
                assert_eq!(tp.second_deriv > 0.0, min);
            }
        }

        // cyclic alternation m1 -> max1 -> m2 -> max2 around the circle
        for k in 0..81 {
            let angles = [
                tr.m1[k].unwrap().alpha,
                tr.max1[k].unwrap().alpha,
                tr.m2[k].unwrap().alpha,
                tr.max2[k].unwrap().alpha,
            ];
            let mut total = 0.0;
            for i in 0..4 {
                let step = normalize_angle(angles[(i + 1) % 4] - angles[i]);
                assert!(step > 0.0);
                total += step;
            }
            assert!((total - TAU).abs() < 1e-9, "branches out of cyclic order");
        }

        // against the brute-force scan at every grid point
        for (k, &beta) in tr.betas.iter().enumerate() {
            let scan = scan_extrema(&p, beta, 20_000);
            for tp in [tr.m1[k].unwrap(), tr.m2[k].unwrap(), tr.max1[k].unwrap(), tr.max2[k].unwrap()] {
                assert!(
                    scan.iter().any(|s| cyclic_distance(s.alpha, tp.alpha) < 1e-6),
                    "traced point {} not found by scan at beta={beta}",
                    tp.alpha
                );
            }
        }
    }

    #[test]
    fn trace_maxima_angles_decrease() {
        // Direction check for the transition-layer bound: both maxima
        // branches strictly decrease in beta (exact endpoints:
        // max1 goes from 2*pi - acos(-(1+sqrt7)/4) down to acos((sqrt7-1)/4)).
        let p = mat(6.0);
        let grid = linspace(-2.0, 2.0, 81);
        let tr = trace_extrema(&p, &grid).unwrap();
        for br in [&tr.max1, &tr.max2] {
            for w in br.windows(2) {
                assert!(w[1].unwrap().alpha < w[0].unwrap().alpha - 1e-10);
            }
        }
        let max1_hi = ((7.0f64.sqrt() - 1.0) / 4.0).acos();
        let max2_hi = TAU - (-(1.0 + 7.0f64.sqrt()) / 4.0).acos();
        assert!((tr.max1[80].unwrap().alpha - max1_hi).abs() < 1e-8);
        // mirror symmetry: max1 at beta=-2 is 2*pi minus max2 at beta=+2
        assert!((tr.max1[0].unwrap().alpha - (TAU - max2_hi)).abs() < 1e-8);
        // maxima heights are beta-independent (exactly a^2/(2b) + b/2 = 2.5)
        for k in 0..81 {
            assert!((tr.max1[k].unwrap().value - 2.5).abs() < 1e-9);
            assert!((tr.max2[k].unwrap().value - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_single_minimum_material() {
        let p = mat(1.0);
        let grid = linspace(-0.5, 0.5, 11);
        let tr = trace_extrema(&p, &grid).unwrap();
        for k in 0..11 {
            assert!(tr.m1[k].is_some());
            assert!(tr.m2[k].is_none());
        }
    }

    #[test]
    fn normalize_angle_edge_cases() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert_eq!(normalize_angle(TAU), 0.0);
        let tiny = normalize_angle(-1e-300);
        assert!((0.0..TAU).contains(&tiny));
        assert!((normalize_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
    }
}
