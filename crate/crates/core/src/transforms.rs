//! Substitution chain from the linear `(x, y)` system to the Heun-type equations,
//! and residual evaluators for every intermediate form.
//!
//! Residuals come with a `scale`: the largest magnitude among the individual
//! summands at that point, so a tolerance is always relative to the size of what
//! cancelled.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DcheParams, HeunPolynomial, RsjParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A complex function value with its first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSample {
    pub z: Complex64,
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl ComplexSample {
    pub fn new(z: Complex64, value: Complex64, d1: Complex64, d2: Complex64) -> Result<Self> {
        let finite = [z, value, d1, d2].iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("sample components must be finite".into()));
        }
        Ok(Self { z, value, d1, d2 })
    }

    pub fn zero(z: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { z, value: zero, d1: zero, d2: zero }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: Complex64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(terms: &[Complex64]) -> Self {
        let value = terms.iter().sum();
        let scale = terms.iter().fold(0.0, |m: f64, t| m.max(t.norm()));
        Self { value, scale }
    }

    /// `|value| / scale`, or `|value|` when every term vanished.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.norm() / self.scale
        } else {
            self.value.norm()
        }
    }
}

pub fn z_of_t(t: f64, omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, omega * t)
}

/// Shared prefactor `z^(-B/2 omega) exp((A/4 omega)(-z + 1/z))`, with the power
/// taken through the supplied `ln z`.
fn v_prefactor(z: Complex64, log_z: Complex64, p: &RsjParams) -> Complex64 {
    let power = -p.b() / (2.0 * p.omega());
    let kappa = p.a() / (4.0 * p.omega());
    (log_z * power + (-z + z.inv()) * kappa).exp()
}

/// `(v, v_check)` from `(x, y)` at `z`, principal branch of `z^(-B/2 omega)`.
pub fn xy_to_v(z: Complex64, x: Complex64, y: Complex64, p: &RsjParams) -> Result<(Complex64, Complex64)> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    Ok(xy_to_v_with_log(z, z.ln(), x, y, p))
}

/// Same as [`xy_to_v`] with an explicit `ln z`, so callers following a trajectory
/// can keep the argument continuous (`ln z = i omega t`).
pub fn xy_to_v_with_log(
    z: Complex64,
    log_z: Complex64,
    x: Complex64,
    y: Complex64,
    p: &RsjParams,
) -> (Complex64, Complex64) {
    let pref = v_prefactor(z, log_z, p);
    let v = I * pref * (x - I * y);
    let v_check = pref * (x + I * y) / (2.0 * p.omega() * z);
    (v, v_check)
}

/// `(v, v_check)` along a real-time trajectory, `z = exp(i omega t)` with continuous argument.
pub fn v_at_time(t: f64, x: f64, y: f64, p: &RsjParams) -> (Complex64, Complex64) {
    let log_z = Complex64::new(0.0, p.omega() * t);
    xy_to_v_with_log(log_z.exp(), log_z, x.into(), y.into(), p)
}

/// `z^2 v'' + [(A/2 omega)(z^2 + 1) + (B/omega + 1) z] v' + v / (4 omega^2)`.
pub fn residual_eq8(s: &ComplexSample, p: &RsjParams) -> Result<Residual> {
    if s.z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let z = s.z;
    let mu = p.a() / (2.0 * p.omega());
    let c1 = p.b() / p.omega() + 1.0;
    Ok(Residual::from_terms(&[
        z * z * s.d2,
        mu * (z * z + 1.0) * s.d1,
        c1 * z * s.d1,
        s.value / (4.0 * p.omega() * p.omega()),
    ]))
}

/// Residual of the master equation
/// `z (z P' - n P)' - mu z (z P' - n P) + (mu - z) P' + lambda P` for an
/// arbitrary function given by its value and derivatives at `z`.
pub fn residual_eq11_values(d: &DcheParams, z: Complex64, f: Complex64, f1: Complex64, f2: Complex64) -> Residual {
    let n = d.n() as f64;
    let mu = d.mu();
    // z^2 f'' - (n z + mu z^2 - mu) f' + (mu n z + lambda) f
    Residual::from_terms(&[
        z * z * f2,
        -n * z * f1,
        -mu * z * z * f1,
        mu * n * z * f,
        mu * f1,
        d.lambda() * f,
    ])
}

pub fn residual_eq11(poly: &HeunPolynomial, z: Complex64) -> Residual {
    let (p, p1, p2) = poly.eval_jet(z);
    residual_eq11_values(poly.params(), z, p, p1, p2)
}

/// `v = exp(-mu z) P` and its derivatives, the solution of the second-order
/// equation carried by a Heun polynomial.
pub fn v_from_polynomial(poly: &HeunPolynomial, z: Complex64) -> ComplexSample {
    let mu = poly.mu();
    let (p, p1, p2) = poly.eval_jet(z);
    let e = (-mu * z).exp();
    ComplexSample {
        z,
        value: e * p,
        d1: e * (p1 - mu * p),
        d2: e * (p2 - 2.0 * mu * p1 + mu * mu * p),
    }
}

/// `zeta = (z + alpha) / (z - alpha)`.
pub fn mobius(z: Complex64, alpha: Complex64) -> Result<Complex64> {
    if alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("alpha must be non-zero".into()));
    }
    if z == alpha {
        return Err(Error::PoleAtAlpha);
    }
    Ok((z + alpha) / (z - alpha))
}

/// `z = alpha (zeta + 1) / (zeta - 1)`, the inverse of [`mobius`].
pub fn mobius_inverse(zeta: Complex64, alpha: Complex64) -> Result<Complex64> {
    if alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("alpha must be non-zero".into()));
    }
    if zeta == Complex64::new(1.0, 0.0) {
        return Err(Error::PoleAtAlpha);
    }
    Ok(alpha * (zeta + 1.0) / (zeta - 1.0))
}

/// Re-expresses a sample of `v(z)` as a sample of `V(zeta) = v(z(zeta))` with
/// derivatives carried by the chain rule.
pub fn transport_to_zeta(s: &ComplexSample, alpha: Complex64) -> Result<ComplexSample> {
    let zeta = mobius(s.z, alpha)?;
    let w = zeta - 1.0;
    let dz = -2.0 * alpha / (w * w);
    let d2z = 4.0 * alpha / (w * w * w);
    ComplexSample::new(zeta, s.value, s.d1 * dz, s.d2 * dz * dz + s.d1 * d2z)
}

fn check_regular(zeta: Complex64) -> Result<()> {
    for pole in [1.0, -1.0] {
        if (zeta - pole).norm() == 0.0 {
            return Err(Error::SingularPoint(pole));
        }
    }
    Ok(())
}

/// `(1 - zeta^2) d/dzeta (1 - zeta^2) dV/dzeta
///  + 2 [(B/omega)(1 - zeta^2) - (A/omega)(1 + zeta^2)] dV/dzeta + V / omega^2`.
pub fn residual_eq8a(s: &ComplexSample, p: &RsjParams) -> Result<Residual> {
    check_regular(s.z)?;
    let zeta = s.z;
    let one_minus = 1.0 - zeta * zeta;
    let (bw, aw) = (p.b() / p.omega(), p.a() / p.omega());
    Ok(Residual::from_terms(&[
        one_minus * one_minus * s.d2,
        -2.0 * zeta * one_minus * s.d1,
        2.0 * bw * one_minus * s.d1,
        -2.0 * aw * (1.0 + zeta * zeta) * s.d1,
        s.value / (p.omega() * p.omega()),
    ]))
}

/// `(1 - zeta^2)^2 V'' + 2 [(B/omega - zeta)(1 - zeta^2) - 2 i (A/omega) zeta] V' + V / omega^2`.
pub fn residual_eq8b(s: &ComplexSample, p: &RsjParams) -> Result<Residual> {
    check_regular(s.z)?;
    let zeta = s.z;
    let one_minus = 1.0 - zeta * zeta;
    let (bw, aw) = (p.b() / p.omega(), p.a() / p.omega());
    Ok(Residual::from_terms(&[
        one_minus * one_minus * s.d2,
        2.0 * (bw - zeta) * one_minus * s.d1,
        -4.0 * I * aw * zeta * s.d1,
        s.value / (p.omega() * p.omega()),
    ]))
}

/// Sample of `W(zeta) = V(1/zeta)` at `1/zeta`.
pub fn reflect_reciprocal(s: &ComplexSample) -> Result<ComplexSample> {
    if s.z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let w = s.z.inv();
    // V evaluated at 1/w = s.z; W'(w) = -V'(1/w)/w^2, W''(w) = V''(1/w)/w^4 + 2V'(1/w)/w^3
    let w2 = w * w;
    ComplexSample::new(w, s.value, -s.d1 / w2, s.d2 / (w2 * w2) + 2.0 * s.d1 / (w2 * w))
}

/// Sample of `W(zeta) = V(-zeta)` at `-zeta`.
pub fn reflect_negate(s: &ComplexSample) -> ComplexSample {
    ComplexSample { z: -s.z, value: s.value, d1: -s.d1, d2: s.d2 }
}

/// Parameters `(a, c, t, lambda)` of a double confluent Heun form
/// `z^2 y'' + (-z^2 + c z + t) y' + (-a z + lambda) y = 0` and the like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeunFormParams {
    pub a: Complex64,
    pub c: Complex64,
    pub t: Complex64,
    pub lambda: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalDcheParams {
    /// Parameter set for the `alpha = i` Moebius form.
    pub mobius_form: HeunFormParams,
    /// Parameter set for the rescaled canonical form.
    pub rescaled_form: HeunFormParams,
}

pub fn canonical_dche_params(p: &RsjParams) -> CanonicalDcheParams {
    let (a, b, w) = (p.a(), p.b(), p.omega());
    let zero = Complex64::new(0.0, 0.0);
    CanonicalDcheParams {
        mobius_form: HeunFormParams {
            a: zero,
            c: Complex64::from(-(b / w + 1.0)),
            t: I * a / (2.0 * w),
            lambda: (2.0 * I * w * a).inv(),
        },
        rescaled_form: HeunFormParams {
            a: zero,
            c: Complex64::from(b / w + 1.0),
            t: Complex64::from(-(a / (2.0 * w)).powi(2)),
            lambda: Complex64::from(1.0 / (4.0 * w * w)),
        },
    }
}

/// Scale factor `k` with `w = k z` taking the second-order equation to the rescaled canonical form.
pub fn canonical_rescaling(p: &RsjParams) -> f64 {
    -p.a() / (2.0 * p.omega())
}

/// `w^2 y'' + (-w^2 + c w + t) y' + (-a w + lambda) y`.
pub fn residual_canonical(s: &ComplexSample, form: &HeunFormParams) -> Residual {
    let w = s.z;
    Residual::from_terms(&[
        w * w * s.d2,
        (-w * w + form.c * w + form.t) * s.d1,
        (-form.a * w + form.lambda) * s.value,
    ])
}

/// Rescales a sample of `v(z)` to `y(w) = v(w / k)`, located at `w = k z`.
pub fn rescale_sample(s: &ComplexSample, k: f64) -> ComplexSample {
    ComplexSample { z: s.z * k, value: s.value, d1: s.d1 / k, d2: s.d2 / (k * k) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn n1_poly(mu: f64, lambda: f64) -> HeunPolynomial {
        let d = DcheParams::new(1, mu, lambda).unwrap();
        HeunPolynomial::new(d, vec![-mu / lambda, 1.0]).unwrap()
    }

    #[test]
    fn z_of_t_examples() {
        let w = 1.7;
        assert!((z_of_t(0.0, w) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((z_of_t(FRAC_PI_2 / w, w) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((z_of_t(2.0 * PI / w, w) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((z_of_t(123.4, w).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn v_prefactors_at_one() {
        let p = RsjParams::new(0.7, 0.3, 1.9).unwrap();
        let (x, y) = (c(0.4, 0.0), c(-1.2, 0.0));
        let (v, vc) = xy_to_v(c(1.0, 0.0), x, y, &p).unwrap();
        assert!((v - I * (x - I * y)).norm() < 1e-15);
        assert!((vc - (x + I * y) / (2.0 * 1.9)).norm() < 1e-15);
        assert_eq!(xy_to_v(c(0.0, 0.0), x, y, &p), Err(Error::ZeroArgument));
    }

    #[test]
    fn v_modulus_on_unit_circle() {
        // B/(2 omega) = -1, integral power, so |z^power| = 1 on the circle
        let p = RsjParams::new(0.9, -2.0, 1.0).unwrap();
        for k in 0..8 {
            let z = Complex64::from_polar(1.0, 0.7 * k as f64 + 0.1);
            let (x, y) = (0.3 + 0.1 * k as f64, -0.8);
            let (v, _) = xy_to_v(z, x.into(), y.into(), &p).unwrap();
            assert!((v.norm() - c(x, -y).norm()).abs() < 1e-14);
            let e = ((-z + z.inv()) * (0.9 / 4.0)).exp();
            assert!((e.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn heun_residual_examples() {
        let d0 = DcheParams::new(0, 0.8, 0.0).unwrap();
        let p0 = HeunPolynomial::new(d0, vec![1.0]).unwrap();
        for z in [c(0.5, 0.0), c(2.0, 1.0)] {
            assert_eq!(residual_eq11(&p0, z).value, c(0.0, 0.0));
        }
        let lambda = (1.0 + 5f64.sqrt()) / 2.0;
        let p1 = n1_poly(1.0, lambda);
        for z in [c(0.5, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)] {
            assert!(residual_eq11(&p1, z).value.norm() <= 1e-12);
        }
        // not spectral: lambda = 1
        let bad = n1_poly(1.0, 1.0);
        let worst = [c(0.5, 0.0), c(1.0, 0.0), c(2.0, 0.0)]
            .iter()
            .map(|&z| residual_eq11(&bad, z).value.norm())
            .fold(0.0, f64::max);
        assert!(worst > 1e-6);
    }

    #[test]
    fn transported_residual_examples() {
        let lambda = (1.0 - 5f64.sqrt()) / 2.0;
        let poly = n1_poly(1.0, lambda);
        let p = crate::model::dche_to_params(poly.params()).unwrap();
        for k in 0..20 {
            let z = Complex64::from_polar(0.3 + 0.2 * k as f64, 0.9 * k as f64);
            let r = residual_eq8(&v_from_polynomial(&poly, z), &p).unwrap();
            assert!(r.relative() <= 1e-9, "k={k} rel={}", r.relative());
        }
        assert_eq!(residual_eq8(&ComplexSample::zero(c(0.3, 0.1)), &p).unwrap().value, c(0.0, 0.0));
        let one = ComplexSample::new(c(0.3, 0.1), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let r = residual_eq8(&one, &p).unwrap();
        assert!((r.value - 1.0 / (4.0 * p.omega() * p.omega())).norm() < 1e-15);
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(c(0.0, 0.0), c(1.0, 0.0)).unwrap(), c(-1.0, 0.0));
        assert!((mobius(c(1e12, 0.0), c(0.0, 1.0)).unwrap() - 1.0).norm() < 1e-11);
        assert_eq!(mobius(c(1.0, 0.0), c(1.0, 0.0)), Err(Error::PoleAtAlpha));
        for z in [c(0.2, 0.3), c(-3.0, 1.0)] {
            let zeta = mobius(z, c(0.0, 1.0)).unwrap();
            assert!((mobius_inverse(zeta, c(0.0, 1.0)).unwrap() - z).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_points_rejected() {
        let p = RsjParams::new(1.0, 0.0, 1.0).unwrap();
        let s = ComplexSample::zero(c(1.0, 0.0));
        assert_eq!(residual_eq8a(&s, &p), Err(Error::SingularPoint(1.0)));
        let s = ComplexSample::zero(c(-1.0, 0.0));
        assert_eq!(residual_eq8b(&s, &p), Err(Error::SingularPoint(-1.0)));
        let s = ComplexSample::zero(c(0.4, 0.0));
        assert_eq!(residual_eq8a(&s, &p).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn canonical_params_examples() {
        let s = canonical_dche_params(&RsjParams::new(1.0, 0.0, 1.0).unwrap());
        assert_eq!(s.rescaled_form.a, c(0.0, 0.0));
        assert_eq!(s.rescaled_form.c, c(1.0, 0.0));
        assert_eq!(s.rescaled_form.t, c(-0.25, 0.0));
        assert_eq!(s.rescaled_form.lambda, c(0.25, 0.0));
        let s = canonical_dche_params(&RsjParams::new(1.0, -2.0, 1.0).unwrap());
        assert_eq!(s.mobius_form.c, c(1.0, 0.0));
        assert_eq!(s.mobius_form.t, c(0.0, 0.5));
        assert!((s.mobius_form.lambda - c(0.0, -0.5)).norm() < 1e-16);
        let s = canonical_dche_params(&RsjParams::new(2.0, 0.0, 1.0).unwrap());
        assert_eq!(s.rescaled_form.t, c(-1.0, 0.0));
    }
}
