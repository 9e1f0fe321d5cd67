//! Material constants, the applied shear drive, and slip-system data.
//!
//! All quantities are dimensionless. The curvature energy is used in its
//! reduced form `mu2 * |grad R|^2`; the reduction constants behind it
//! (length scale sqrt(2), unit sym/skw weights, linear exponent) are fixed
//! and not configurable.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("shear drive needs at least one (t, beta) sample")]
    EmptyDrive,
    #[error("shear drive times must be strictly increasing (sample {0})")]
    DriveOrder(usize),
    #[error("time {t} outside the drive range [{t0}, {t1}]")]
    DriveRange { t: f64, t0: f64, t1: f64 },
    #[error("slip vectors must be orthonormal: {0}")]
    BadSlipSystem(&'static str),
}

/// Elastic and dissipative moduli of the shear problem.
///
/// `lambda`, `mu` are the Lame constants, `mu_c` the Cosserat couple
/// modulus, `mu2` the curvature modulus, `rho` the dislocation energy
/// coefficient and `sigma_y` the yield stress. `rho`, `sigma_y` and `mu2`
/// admit zero so the limiting cases (ultra-soft material, unregularised
/// energy) are representable; solvers reject `mu2 = 0` themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
    pub mu_c: f64,
    pub mu2: f64,
    pub rho: f64,
    pub sigma_y: f64,
}

impl MaterialParams {
    /// Validates and returns the parameter set.
    pub fn new(
        lambda: f64,
        mu: f64,
        mu_c: f64,
        mu2: f64,
        rho: f64,
        sigma_y: f64,
    ) -> Result<Self, ParamsError> {
        MaterialParams {
            lambda,
            mu,
            mu_c,
            mu2,
            rho,
            sigma_y,
        }
        .validate()
    }

    /// Checks sign constraints and finiteness, naming the offending field.
    pub fn validate(self) -> Result<Self, ParamsError> {
        let positive = [
            (self.lambda, "lambda"),
            (self.mu, "mu"),
            (self.mu_c, "mu_c"),
        ];
        for (v, name) in positive {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(ParamsError::NotPositive(name));
            }
        }
        let non_negative = [(self.mu2, "mu2"), (self.rho, "rho"), (self.sigma_y, "sigma_y")];
        for (v, name) in non_negative {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite(name));
            }
            if v < 0.0 {
                return Err(ParamsError::Negative(name));
            }
        }
        Ok(self)
    }

    /// True iff the reaction potential has the two local minima 0 and pi,
    /// i.e. `mu_c > 2 (lambda + mu)` (strict).
    pub fn has_two_wells(&self) -> bool {
        self.mu_c > 2.0 * (self.lambda + self.mu)
    }

    /// Sufficient condition for a purely elastic response at shear `beta`,
    /// independent of the rotation angle:
    /// `2 max{2(lambda+mu) - mu_c, mu_c} + |beta| (lambda + 2 mu + mu_c) <= sigma_y`.
    pub fn elastic_sufficient(&self, beta: f64) -> bool {
        let a = self.lambda + self.mu;
        let bound = 2.0 * (2.0 * a - self.mu_c).max(self.mu_c)
            + beta.abs() * (self.lambda + 2.0 * self.mu + self.mu_c);
        bound <= self.sigma_y
    }
}

/// Piecewise-linear shear path `beta(t)` given by ordered `(t, beta)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearDrive {
    samples: Vec<(f64, f64)>,
}

impl ShearDrive {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, ParamsError> {
        if samples.is_empty() {
            return Err(ParamsError::EmptyDrive);
        }
        for (k, (t, b)) in samples.iter().enumerate() {
            if !t.is_finite() || !b.is_finite() {
                return Err(ParamsError::NonFinite("drive sample"));
            }
            if k > 0 && *t <= samples[k - 1].0 {
                return Err(ParamsError::DriveOrder(k));
            }
        }
        Ok(ShearDrive { samples })
    }

    /// A drive that holds a constant shear.
    pub fn constant(beta: f64) -> Self {
        ShearDrive {
            samples: vec![(0.0, beta)],
        }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn t_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Largest |beta| attained on the path (piecewise linear, so at a sample).
    pub fn max_abs_beta(&self) -> f64 {
        self.samples
            .iter()
            .map(|(_, b)| b.abs())
            .fold(0.0, f64::max)
    }

    /// Linear interpolation; errors when `t` lies outside the sample range.
    pub fn eval(&self, t: f64) -> Result<f64, ParamsError> {
        if t < self.t_start() || t > self.t_last() {
            return Err(ParamsError::DriveRange {
                t,
                t0: self.t_start(),
                t1: self.t_last(),
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// Linear interpolation with the end values held outside the range.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        // s is strictly increasing in t, so the bracket exists.
        let k = s.partition_point(|(ti, _)| *ti <= t);
        let (t0, b0) = s[k - 1];
        let (t1, b1) = s[k];
        b0 + (b1 - b0) * (t - t0) / (t1 - t0)
    }
}

/// One slip system: unit slip direction `m` and unit slip-plane normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipSystem {
    pub m: [f64; 2],
    pub n: [f64; 2],
}

const SLIP_TOL: f64 = 1e-12;

impl SlipSystem {
    pub fn new(m: [f64; 2], n: [f64; 2]) -> Result<Self, ParamsError> {
        let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
        if !(m.iter().chain(n.iter()).all(|x| x.is_finite())) {
            return Err(ParamsError::NonFinite("slip vector"));
        }
        if (norm(m) - 1.0).abs() > SLIP_TOL {
            return Err(ParamsError::BadSlipSystem("|m| != 1"));
        }
        if (norm(n) - 1.0).abs() > SLIP_TOL {
            return Err(ParamsError::BadSlipSystem("|n| != 1"));
        }
        if (m[0] * n[0] + m[1] * n[1]).abs() > SLIP_TOL {
            return Err(ParamsError::BadSlipSystem("m . n != 0"));
        }
        Ok(SlipSystem { m, n })
    }

    /// The rotation of the default system by `theta`.
    pub fn rotated(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SlipSystem {
            m: [c, s],
            n: [-s, c],
        }
    }
}

impl Default for SlipSystem {
    fn default() -> Self {
        SlipSystem {
            m: [1.0, 0.0],
            n: [0.0, 1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, mu: f64, mu_c: f64, mu2: f64, rho: f64, sigma_y: f64) -> MaterialParams {
        MaterialParams {
            lambda,
            mu,
            mu_c,
            mu2,
            rho,
            sigma_y,
        }
    }

    #[test]
    fn validate_accepts_reference_set() {
        assert!(p(1.0, 1.0, 12.0, 1.0, 1.0, 1.0).validate().is_ok());
        // limiting case: zero dissipation and curvature moduli
        assert!(p(1.0, 1.0, 6.0, 0.0, 0.0, 0.0).validate().is_ok());
    }

    #[test]
    fn validate_names_offending_field() {
        let err = p(1.0, 1.0, 0.0, 1.0, 1.0, 1.0).validate().unwrap_err();
        assert_eq!(err.to_string(), "mu_c must be positive");
        let err = p(1.0, 1.0, 12.0, -0.5, 1.0, 1.0).validate().unwrap_err();
        assert_eq!(err.to_string(), "mu2 must be non-negative");
        let err = p(f64::NAN, 1.0, 12.0, 1.0, 1.0, 1.0).validate().unwrap_err();
        assert_eq!(err.to_string(), "lambda must be finite");
    }

    #[test]
    fn two_well_condition() {
        assert!(p(1.0, 1.0, 12.0, 0.0, 0.0, 0.0).has_two_wells());
        assert!(!p(1.0, 1.0, 1.0, 0.0, 0.0, 0.0).has_two_wells());
        // boundary case mu_c = 2 (lambda + mu): strict inequality
        assert!(!p(1.0, 1.0, 4.0, 0.0, 0.0, 0.0).has_two_wells());
    }

    #[test]
    fn two_well_condition_monotone_in_mu_c() {
        let mut prev = false;
        for k in 0..50 {
            let mu_c = 0.5 + 0.2 * k as f64;
            let now = p(1.0, 1.0, mu_c, 0.0, 0.0, 0.0).has_two_wells();
            assert!(now || !prev, "two-well test not monotone at mu_c={mu_c}");
            prev = now;
        }
    }

    #[test]
    fn elastic_sufficient_examples() {
        // 2*12 + 1*15 = 39 <= 40
        assert!(p(1.0, 1.0, 12.0, 0.0, 0.0, 40.0).elastic_sufficient(1.0));
        // 24 > 10
        assert!(!p(1.0, 1.0, 12.0, 0.0, 0.0, 10.0).elastic_sufficient(0.0));
        // boundary: 24 <= 24
        assert!(p(1.0, 1.0, 12.0, 0.0, 0.0, 24.0).elastic_sufficient(0.0));
    }

    #[test]
    fn elastic_sufficient_monotone_in_beta_magnitude() {
        let m = p(1.0, 1.0, 12.0, 0.0, 0.0, 40.0);
        for k in 0..=20 {
            let beta = -1.0 + 0.1 * k as f64;
            if m.elastic_sufficient(1.0) && beta.abs() <= 1.0 {
                assert!(m.elastic_sufficient(beta));
            }
        }
    }

    #[test]
    fn drive_interpolation() {
        let d = ShearDrive::new(vec![(0.0, -2.0), (1.0, 2.0)]).unwrap();
        assert_eq!(d.eval(0.0).unwrap(), -2.0);
        assert_eq!(d.eval(0.5).unwrap(), 0.0);
        assert_eq!(d.eval(1.0).unwrap(), 2.0);
        assert!(d.eval(1.5).is_err());
        assert_eq!(d.eval_clamped(1.5), 2.0);
        assert_eq!(d.eval_clamped(-1.0), -2.0);
        assert_eq!(d.max_abs_beta(), 2.0);
    }

    #[test]
    fn drive_rejects_bad_samples() {
        assert_eq!(ShearDrive::new(vec![]).unwrap_err(), ParamsError::EmptyDrive);
        assert_eq!(
            ShearDrive::new(vec![(0.0, 0.0), (0.0, 1.0)]).unwrap_err(),
            ParamsError::DriveOrder(1)
        );
    }

    #[test]
    fn slip_system_validation() {
        assert!(SlipSystem::new([1.0, 0.0], [0.0, 1.0]).is_ok());
        assert!(SlipSystem::new([1.0, 0.0], [1.0, 0.0]).is_err());
        assert!(SlipSystem::new([2.0, 0.0], [0.0, 1.0]).is_err());
        let r = SlipSystem::rotated(0.7);
        assert!(SlipSystem::new(r.m, r.n).is_ok());
    }
}
