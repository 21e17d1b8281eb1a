//! Parameter triplets and the exact maps between them.
//!
//! The physical drive is `q(t) = B + A cos(omega t)`. The reduced triplet is
//! `n = -(B/omega + 1)`, `mu = A / (2 omega)`, `lambda = 1/(2 omega)^2 - mu^2`,
//! so that `4 omega^2 (lambda + mu^2) = 1` holds by construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Default tolerance for deciding that `n_real` is an integer.
pub const TOL_INT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsjParams {
    a: f64,
    b: f64,
    omega: f64,
}

impl RsjParams {
    pub fn new(a: f64, b: f64, omega: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidParams("A, B and omega must be finite".into()));
        }
        if a == 0.0 {
            return Err(Error::InvalidParams("drive amplitude A must be non-zero".into()));
        }
        if omega == 0.0 {
            return Err(Error::InvalidParams("frequency omega must be non-zero".into()));
        }
        Ok(Self { a, b, omega })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Drive period `2 pi / |omega|`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega.abs()
    }
}

/// Reduced triplet `(n, mu, lambda)`.
///
/// `mu = 0` is accepted so the degenerate spectral problem can be studied; the
/// physical map [`dche_to_params`] rejects it since it would force `A = 0`.
///
/// The discriminant `lambda + mu^2 = (2 omega)^-2` is stored alongside: near the
/// bottom of the spectrum it is many orders of magnitude smaller than `mu^2`,
/// and recomputing it from `lambda` would cancel away most of its digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcheParams {
    n: usize,
    mu: f64,
    lambda: f64,
    disc: f64,
}

impl DcheParams {
    pub fn new(n: usize, mu: f64, lambda: f64) -> Result<Self> {
        if !(mu.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParams("mu and lambda must be finite".into()));
        }
        Ok(Self { n, mu, lambda, disc: lambda + mu * mu })
    }

    /// Like [`DcheParams::new`] with an independently computed `lambda + mu^2`.
    pub fn with_discriminant(n: usize, mu: f64, lambda: f64, disc: f64) -> Result<Self> {
        let mut d = Self::new(n, mu, lambda)?;
        let slack = 1e-12 * lambda.abs().max(mu * mu).max(1.0);
        if !disc.is_finite() || (disc - d.disc).abs() > slack {
            return Err(Error::InvalidParams(format!(
                "discriminant {disc} inconsistent with lambda + mu^2 = {}",
                d.disc
            )));
        }
        d.disc = disc;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, self.mu, lambda)
    }

    /// `lambda + mu^2`, which equals `1 / (2 omega)^2` for physical points.
    pub fn discriminant(&self) -> f64 {
        self.disc
    }

    /// `(2 omega)^-1 = sqrt(lambda + mu^2)`.
    pub fn half_inverse_omega(&self) -> Result<f64> {
        if self.disc > 0.0 {
            Ok(self.disc.sqrt())
        } else {
            Err(Error::NonPositiveDiscriminant(self.disc))
        }
    }
}

/// Result of reducing a physical triplet: `n` may come out non-integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcheCandidate {
    pub n_real: f64,
    pub mu: f64,
    pub lambda: f64,
    /// `1 / (2 omega)^2`, equal to `lambda + mu^2`.
    pub disc: f64,
    pub integral: bool,
}

impl DcheCandidate {
    /// The reduced triplet, if `n_real` was classified as a non-negative integer.
    pub fn to_dche(&self) -> Option<DcheParams> {
        if !self.integral {
            return None;
        }
        DcheParams::with_discriminant(self.n_real.round() as usize, self.mu, self.lambda, self.disc).ok()
    }
}

pub fn params_to_dche(p: &RsjParams) -> DcheCandidate {
    params_to_dche_with_tol(p, TOL_INT)
}

pub fn params_to_dche_with_tol(p: &RsjParams, tol_int: f64) -> DcheCandidate {
    let n_real = -(p.b / p.omega + 1.0);
    let mu = p.a / (2.0 * p.omega);
    let disc = 1.0 / (4.0 * p.omega * p.omega);
    let lambda = disc - mu * mu;
    let rounded = n_real.round();
    let integral = (n_real - rounded).abs() <= tol_int && rounded >= 0.0;
    DcheCandidate { n_real, mu, lambda, disc, integral }
}

/// Inverse map on the `omega > 0` branch. The other branch is reachable through
/// the sign symmetries of the equation and is not produced.
pub fn dche_to_params(d: &DcheParams) -> Result<RsjParams> {
    let c = d.half_inverse_omega()?;
    if d.mu == 0.0 {
        return Err(Error::InvalidParams("mu = 0 corresponds to A = 0".into()));
    }
    let omega = 0.5 / c;
    RsjParams::new(2.0 * d.mu * omega, -((d.n + 1) as f64) * omega, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Monic degree-`n` polynomial `a_0 + a_1 z + ... + z^n` tied to its reduced parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeunPolynomial {
    params: DcheParams,
    coeffs: Vec<f64>,
}

impl HeunPolynomial {
    /// Builds the polynomial, rescaling so that the leading coefficient is 1.
    pub fn new(params: DcheParams, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != params.n + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                params.n + 1,
                coeffs.len()
            )));
        }
        let lead = coeffs[params.n];
        if lead == 0.0 || !lead.is_finite() {
            return Err(Error::InvalidArgument("leading coefficient must be finite and non-zero".into()));
        }
        if lead != 1.0 {
            coeffs.iter_mut().for_each(|c| *c /= lead);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(Self { params, coeffs })
    }

    pub fn params(&self) -> &DcheParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        poly::eval(&self.coeffs, z)
    }

    /// `(P, P', P'')` at `z`.
    pub fn eval_jet(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        poly::eval_jet(&self.coeffs, z)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        poly::eval_real(&self.coeffs, x)
    }

    pub fn eval_jet_real(&self, x: f64) -> (f64, f64, f64) {
        poly::eval_jet_real(&self.coeffs, x)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// One row of a trajectory file.
pub trait Sample: Copy {
    const COLUMNS: &'static [&'static str];
    fn components(&self) -> Vec<f64>;
}

impl Sample for f64 {
    const COLUMNS: &'static [&'static str] = &["phi"];
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl Sample for [f64; 1] {
    const COLUMNS: &'static [&'static str] = &["phi"];
    fn components(&self) -> Vec<f64> {
        self.to_vec()
    }
}

impl Sample for [f64; 2] {
    const COLUMNS: &'static [&'static str] = &["x", "y"];
    fn components(&self) -> Vec<f64> {
        self.to_vec()
    }
}

/// Time-stamped samples with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    times: Vec<f64>,
    values: Vec<S>,
}

pub type PhaseTrajectory = Trajectory<f64>;
pub type XyTrajectory = Trajectory<[f64; 2]>;

impl<S: Sample> Trajectory<S> {
    pub fn new(times: Vec<f64>, values: Vec<S>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times but {} samples",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, S)> {
        Some((*self.times.last()?, *self.values.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> + '_ {
        self.times.iter().copied().zip(self.values.iter())
    }

    pub fn map<T: Sample>(&self, f: impl Fn(f64, &S) -> T) -> Trajectory<T> {
        Trajectory {
            times: self.times.clone(),
            values: self.iter().map(|(t, s)| f(t, s)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rsj_rejects_degenerate_drive() {
        assert!(RsjParams::new(0.0, 1.0, 1.0).is_err());
        assert!(RsjParams::new(1.0, 1.0, 0.0).is_err());
        assert!(RsjParams::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(RsjParams::new(-1.0, 0.0, -2.0).is_ok());
    }

    #[test]
    fn reduction_examples() {
        let omega = 0.7;
        let mu0 = 1.3;
        let p = RsjParams::new(2.0 * omega * mu0, -2.0 * omega, omega).unwrap();
        let c = params_to_dche(&p);
        assert!((c.n_real - 1.0).abs() < 1e-15);
        assert!((c.mu - mu0).abs() < 1e-15);
        assert!(c.integral);

        let c = params_to_dche(&RsjParams::new(1.0, -1.0, 1.0).unwrap());
        assert_eq!(c.n_real, 0.0);
        assert_eq!(c.mu, 0.5);
        assert_eq!(c.lambda, 0.0);
        assert_eq!(c.to_dche().unwrap().n(), 0);

        let c = params_to_dche(&RsjParams::new(1.0, 0.5, 1.0).unwrap());
        assert_eq!(c.n_real, -1.5);
        assert!(!c.integral);
        assert!(c.to_dche().is_none());
    }

    #[test]
    fn negative_integer_is_not_integral() {
        let c = params_to_dche(&RsjParams::new(1.0, 0.0, 1.0).unwrap());
        assert_eq!(c.n_real, -1.0);
        assert!(!c.integral);
    }

    #[test]
    fn integrality_tolerance() {
        let p = RsjParams::new(1.0, -2.0 + 5e-10, 1.0).unwrap();
        assert!(params_to_dche(&p).integral);
        let p = RsjParams::new(1.0, -2.0 + 5e-9, 1.0).unwrap();
        assert!(!params_to_dche(&p).integral);
        assert!(params_to_dche_with_tol(&p, 1e-8).integral);
    }

    #[test]
    fn inverse_map_examples() {
        let p = dche_to_params(&DcheParams::new(0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!((p.a(), p.b(), p.omega()), (1.0, -1.0, 1.0));

        let lambda = (1.0 + 5f64.sqrt()) / 2.0;
        let p = dche_to_params(&DcheParams::new(1, 1.0, lambda).unwrap()).unwrap();
        let omega = 1.0 / (2.0 * (lambda + 1.0).sqrt());
        assert!((p.omega() - omega).abs() < 1e-15);
        assert!((p.a() - 2.0 * omega).abs() < 1e-15);
        assert!((p.b() + 2.0 * omega).abs() < 1e-15);

        let err = dche_to_params(&DcheParams::new(2, 1.0, -1.5).unwrap()).unwrap_err();
        assert_eq!(err, Error::NonPositiveDiscriminant(-0.5));
        assert!(matches!(
            dche_to_params(&DcheParams::new(1, 0.0, 1.0).unwrap()),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn heun_polynomial_is_normalized() {
        let d = DcheParams::new(2, 1.0, 0.0).unwrap();
        let p = HeunPolynomial::new(d, vec![2.0, 4.0, 2.0]).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0, 1.0]);
        assert!(HeunPolynomial::new(d, vec![1.0, 1.0]).is_err());
        assert!(HeunPolynomial::new(d, vec![1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        let t = Trajectory::new(vec![0.0, 0.5], vec![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.last(), Some((0.5, [0.0, 1.0])));
    }
}
