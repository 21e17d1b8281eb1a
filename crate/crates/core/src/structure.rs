//! Identities satisfied by Heun polynomials: the reflection symmetry, the
//! associated second solution, closed-form phase, and orthogonality on the
//! positive semi-axis.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{HeunPolynomial, Sign};
use crate::poly;
use crate::quad;
use crate::transforms::{residual_eq11_values, Residual};

/// `epsilon_sign` accepts a ratio within this distance of `+-1`.
pub const TOL_UNIMODULAR: f64 = 1e-8;
/// Number of roots of unity scanned for zeros of `P` before phase reconstruction.
pub const UNIT_CIRCLE_SCAN: usize = 4096;
/// Minimum sampling density, in points per drive period, when unwrapping.
pub const MIN_POINTS_PER_PERIOD: usize = 64;

const Q_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 4000;

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Coefficients of `z^n [P'(1/z) - mu P(1/z)]`: `(n+1-k) a_{n+1-k} - mu a_{n-k}`.
pub fn tilde_p(p: &HeunPolynomial) -> Vec<f64> {
    tilde_coeffs(p.coeffs(), p.mu())
}

fn tilde_coeffs(a: &[f64], mu: f64) -> Vec<f64> {
    let n = a.len() - 1;
    (0..=n)
        .map(|k| {
            let up = if k >= 1 { (n + 1 - k) as f64 * a[n + 1 - k] } else { 0.0 };
            up - mu * a[n - k]
        })
        .collect()
}

/// Least-squares `kappa` in `tilde_p(P) = kappa P` and the worst coefficient
/// misfit relative to the larger of the two vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reflection {
    pub kappa: f64,
    pub deviation: f64,
}

pub fn reflection(p: &HeunPolynomial) -> Reflection {
    let t = tilde_p(p);
    let a = p.coeffs();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let kappa = t.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() / aa;
    let size = t.iter().fold(kappa.abs() * p.max_abs_coeff(), |m, x| m.max(x.abs()));
    let misfit = t.iter().zip(a).fold(0.0, |m: f64, (x, y)| m.max((x - kappa * y).abs()));
    let deviation = if size > 0.0 { misfit / size } else { misfit };
    Reflection { kappa, deviation }
}

/// `sign[(P'(1) - mu P(1)) 2 omega / P(1)]`, after checking the ratio is `+-1`.
pub fn epsilon_sign(p: &HeunPolynomial) -> Result<Sign> {
    epsilon_sign_with_tol(p, TOL_UNIMODULAR)
}

pub fn epsilon_sign_with_tol(p: &HeunPolynomial, tol: f64) -> Result<Sign> {
    let c = p.params().half_inverse_omega()?;
    let (p0, p1, _) = p.eval_jet_real(1.0);
    if p0.abs() <= 1e-12 * p.coeff_norm() {
        return Err(Error::ZeroAtOne);
    }
    let ratio = (p1 - p.mu() * p0) / (c * p0);
    let sign = Sign::of(ratio);
    if !((ratio - sign.value()).abs() <= tol) {
        return Err(Error::NotUnimodular(ratio));
    }
    Ok(sign)
}

/// Points where the reflection identity is checked.
pub fn symmetry_sample_points() -> Vec<Complex64> {
    let mut pts = vec![c64(0.5), c64(1.0), c64(2.0)];
    pts.extend((0..16).map(|k| Complex64::from_polar(1.0, PI * k as f64 / 8.0)));
    pts.push(c64(-1.0));
    pts
}

/// Reflection identity residual at `z` for a given coefficient vector:
/// `P'(z) - mu P(z) - eps c z^n P(1/z)`.
pub fn symmetry_residual_at(coeffs: &[f64], mu: f64, eps_c: f64, z: Complex64) -> Residual {
    let n = coeffs.len() as i32 - 1;
    let (pz, dpz, _) = poly::eval_jet(coeffs, z);
    let reflected = eps_c * z.powi(n) * poly::eval(coeffs, z.inv());
    let terms = [dpz, -mu * pz, -reflected];
    Residual {
        value: terms.iter().sum(),
        scale: terms.iter().fold(0.0, |m: f64, t| m.max(t.norm())),
    }
}

/// Worst relative residual of the reflection identity over the sample set.
pub fn symmetry_residual(p: &HeunPolynomial) -> Result<f64> {
    let eps = epsilon_sign(p)?;
    let eps_c = eps.value() * p.params().half_inverse_omega()?;
    Ok(symmetry_residual_with(p.coeffs(), p.mu(), eps_c))
}

pub fn symmetry_residual_with(coeffs: &[f64], mu: f64, eps_c: f64) -> f64 {
    symmetry_sample_points()
        .into_iter()
        .map(|z| symmetry_residual_at(coeffs, mu, eps_c, z).relative())
        .fold(0.0, f64::max)
}

/// `eps c a_k - (n+1-k) a_{n+1-k} + mu a_{n-k}` for `k = 0..=n`.
pub fn coeff_relations_residual(p: &HeunPolynomial) -> Result<Vec<f64>> {
    let eps = epsilon_sign(p)?;
    let eps_c = eps.value() * p.params().half_inverse_omega()?;
    Ok(tilde_p(p).iter().zip(p.coeffs()).map(|(t, a)| eps_c * a - t).collect())
}

/// `s^n exp(mu (s + 1/s)) / P(s)^2`.
pub fn q_integrand(p: &HeunPolynomial, s: f64) -> f64 {
    let v = p.eval_real(s);
    wronskian(p.n(), p.mu(), s) / (v * v)
}

/// `z^n exp(mu (z + 1/z))`, the Wronskian of `P` and `Q`.
pub fn wronskian(n: usize, mu: f64, z: f64) -> f64 {
    z.powi(n as i32) * (mu * (z + 1.0 / z)).exp()
}

/// The associated solution at a point, with its derivatives from the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssociatedValue {
    pub z: f64,
    pub q: f64,
    pub dq: f64,
    pub d2q: f64,
    /// `int_base^z s^n exp(mu (s + 1/s)) P(s)^-2 ds`
    pub integral: f64,
}

impl AssociatedValue {
    /// `P Q' - P' Q`.
    pub fn wronskian(&self, p: &HeunPolynomial) -> f64 {
        let (v, dv, _) = p.eval_jet_real(self.z);
        v * self.dq - dv * self.q
    }

    /// Master-equation residual of `Q`.
    pub fn residual(&self, p: &HeunPolynomial) -> Residual {
        residual_eq11_values(p.params(), c64(self.z), c64(self.q), c64(self.dq), c64(self.d2q))
    }
}

pub fn associated_q(p: &HeunPolynomial, z: f64) -> Result<AssociatedValue> {
    associated_q_from(p, z, 1.0)
}

/// `Q(z) = P(z) int_base^z s^n exp(mu (s + 1/s)) P(s)^-2 ds` along the real segment.
pub fn associated_q_from(p: &HeunPolynomial, z: f64, base: f64) -> Result<AssociatedValue> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NonPositiveArgument(z));
    }
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::NonPositiveArgument(base));
    }
    check_no_zero_on_segment(p, base.min(z), base.max(z))?;
    let integral = quad::integrate(|s| q_integrand(p, s), base, z, Q_TOL, Q_TOL, MAX_SEGMENTS)?.value;
    let (n, mu) = (p.n(), p.mu());
    let (v, dv, d2v) = p.eval_jet_real(z);
    let w = wronskian(n, mu, z);
    let dw = w * (n as f64 / z + mu * (1.0 - 1.0 / (z * z)));
    Ok(AssociatedValue {
        z,
        q: v * integral,
        dq: dv * integral + w / v,
        d2q: d2v * integral + dw / v,
        integral,
    })
}

fn check_no_zero_on_segment(p: &HeunPolynomial, lo: f64, hi: f64) -> Result<()> {
    const SAMPLES: usize = 1024;
    let mut prev: Option<f64> = None;
    for i in 0..=SAMPLES {
        let s = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let v = p.eval_real(s);
        if v.abs() <= 1e-12 * poly::abs_bound(p.coeffs(), s) {
            return Err(Error::PolynomialZeroOnPath(s));
        }
        if let Some(pv) = prev {
            if pv.signum() != v.signum() {
                return Err(Error::PolynomialZeroOnPath(s));
            }
        }
        prev = Some(v);
    }
    Ok(())
}

/// Closed-form phase `phi(t) = -arg[i eps z^{n+1} P(1/z) / P(z)]`, `z = exp(i omega t)`,
/// unwrapped continuously from `t = 0`.
#[derive(Debug, Clone)]
pub struct PhaseSolution {
    poly: HeunPolynomial,
    eps: Sign,
    omega: f64,
}

/// A phase value together with `|exp(-i phi) - i eps z^{n+1} P(1/z) / P(z)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub t: f64,
    pub phi: f64,
    pub certificate: f64,
}

impl PhaseSolution {
    pub fn new(p: &HeunPolynomial) -> Result<Self> {
        let eps = epsilon_sign(p)?;
        let omega = 0.5 / p.params().half_inverse_omega()?;
        let norm = p.coeff_norm();
        for k in 0..UNIT_CIRCLE_SCAN {
            let z = Complex64::from_polar(1.0, TAU * k as f64 / UNIT_CIRCLE_SCAN as f64);
            if p.eval(z).norm() <= 1e-10 * norm {
                return Err(Error::ZeroOnUnitCircle(z.arg()));
            }
        }
        Ok(Self { poly: p.clone(), eps, omega })
    }

    pub fn epsilon(&self) -> Sign {
        self.eps
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `i eps z^{n+1} P(1/z) / P(z)` at time `t`.
    pub fn factor(&self, t: f64) -> Result<Complex64> {
        let z = Complex64::from_polar(1.0, self.omega * t);
        let pz = self.poly.eval(z);
        if pz.norm() <= 1e-10 * self.poly.coeff_norm() {
            return Err(Error::ZeroOnUnitCircle(z.arg()));
        }
        let n1 = self.poly.n() as i32 + 1;
        Ok(Complex64::new(0.0, self.eps.value()) * z.powi(n1) * self.poly.eval(z.inv()) / pz)
    }

    fn point(&self, t: f64, phi: f64, f: Complex64) -> PhasePoint {
        let certificate = (Complex64::from_polar(1.0, -phi) - f).norm();
        PhasePoint { t, phi, certificate }
    }

    /// Advances the unwrapped phase from `(t0, phi0, f0)` to `t1`, bisecting any
    /// step whose argument increment exceeds `pi / 4`.
    fn advance(&self, t0: f64, phi0: f64, f0: Complex64, t1: f64, depth: u32) -> Result<(f64, Complex64)> {
        let f1 = self.factor(t1)?;
        let step = (f1 / f0).arg();
        if step.abs() <= PI / 4.0 || depth >= 40 {
            return Ok((phi0 - step, f1));
        }
        let tm = 0.5 * (t0 + t1);
        let (phim, fm) = self.advance(t0, phi0, f0, tm, depth + 1)?;
        self.advance(tm, phim, fm, t1, depth + 1)
    }

    fn walk(&self, t0: f64, phi0: f64, f0: Complex64, t1: f64) -> Result<(f64, Complex64)> {
        let max_step = TAU / self.omega.abs() / MIN_POINTS_PER_PERIOD as f64;
        let steps = ((t1 - t0).abs() / max_step).ceil().max(1.0) as usize;
        let (mut phi, mut f, mut t) = (phi0, f0, t0);
        for i in 1..=steps {
            let next = if i == steps { t1 } else { t0 + (t1 - t0) * i as f64 / steps as f64 };
            (phi, f) = self.advance(t, phi, f, next, 0)?;
            t = next;
        }
        Ok((phi, f))
    }

    fn origin(&self) -> Result<(f64, Complex64)> {
        let f = self.factor(0.0)?;
        Ok((-f.arg(), f))
    }

    pub fn phase(&self, t: f64) -> Result<PhasePoint> {
        let (phi0, f0) = self.origin()?;
        let (phi, f) = self.walk(0.0, phi0, f0, t)?;
        Ok(self.point(t, phi, f))
    }

    /// Phase on an increasing time grid.
    pub fn series(&self, times: &[f64]) -> Result<Vec<PhasePoint>> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        let Some(&first) = times.first() else {
            return Ok(Vec::new());
        };
        let (phi0, f0) = self.origin()?;
        let (mut phi, mut f) = self.walk(0.0, phi0, f0, first)?;
        let mut out = Vec::with_capacity(times.len());
        out.push(self.point(first, phi, f));
        for w in times.windows(2) {
            (phi, f) = self.walk(w[0], phi, f, w[1])?;
            out.push(self.point(w[1], phi, f));
        }
        Ok(out)
    }
}

pub fn phase_from_poly(p: &HeunPolynomial, t: f64) -> Result<f64> {
    Ok(PhaseSolution::new(p)?.phase(t)?.phi)
}

fn check_pair(p1: &HeunPolynomial, p2: &HeunPolynomial) -> Result<()> {
    if p1.mu() != p2.mu() {
        return Err(Error::InvalidArgument(format!("mu differs: {} vs {}", p1.mu(), p2.mu())));
    }
    Ok(())
}

/// Bracket of the weight without the `z^{-(n1+n2)/2} exp(-mu (z + 1/z))` prefactor.
fn xi_bracket(z: f64, p1: &HeunPolynomial, p2: &HeunPolynomial) -> f64 {
    let (n1, n2) = (p1.n() as f64, p2.n() as f64);
    let mu = p1.mu();
    let zi = 1.0 / z;
    (p1.lambda() - p2.lambda() - 0.25 * (n1 - n2) * (n1 + n2 + 2.0)) * zi * zi
        + 0.5 * mu * (n1 - n2) * zi * (1.0 + zi * zi)
}

fn log_prefactor(z: f64, p1: &HeunPolynomial, p2: &HeunPolynomial) -> f64 {
    -0.5 * (p1.n() + p2.n()) as f64 * z.ln() - p1.mu() * (z + 1.0 / z)
}

/// The weight `Xi_{n1,n2}(z)`.
pub fn weight_xi(z: f64, p1: &HeunPolynomial, p2: &HeunPolynomial) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveArgument(z));
    }
    check_pair(p1, p2)?;
    Ok(log_prefactor(z, p1, p2).exp() * xi_bracket(z, p1, p2))
}

/// `d/dz F + Xi P1 P2` with
/// `F = z^{-(n1+n2)/2} exp(-mu (z + 1/z)) [P2 P1' - P1 P2' - (n1 - n2) P1 P2 / 2z]`,
/// all derivatives analytic.
pub fn divergence_residual(z: f64, p1: &HeunPolynomial, p2: &HeunPolynomial) -> Result<Residual> {
    let xi = weight_xi(z, p1, p2)?;
    let (n1, n2) = (p1.n() as f64, p2.n() as f64);
    let mu = p1.mu();
    let (u, du, d2u) = p1.eval_jet_real(z);
    let (v, dv, d2v) = p2.eval_jet_real(z);
    let h = 0.5 * (n1 - n2);
    let bracket = v * du - u * dv - h * u * v / z;
    let dbracket = v * d2u - u * d2v - h * ((du * v + u * dv) / z - u * v / (z * z));
    let w = log_prefactor(z, p1, p2).exp();
    let dw = w * (-0.5 * (n1 + n2) / z - mu * (1.0 - 1.0 / (z * z)));
    let terms = [dw * bracket, w * dbracket, xi * u * v];
    Ok(Residual {
        value: c64(terms.iter().sum()),
        scale: terms.iter().fold(0.0, |m: f64, t| m.max(t.abs())),
    })
}

/// Integral over `z > 0` computed on `u = ln z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiAxisIntegral {
    pub value: f64,
    /// Integral of the absolute value of the integrand.
    pub scale: f64,
    /// Integration window `[u_min, u_max]` on the logarithmic axis.
    pub u_min: f64,
    pub u_max: f64,
}

impl SemiAxisIntegral {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

/// Window on `u` outside which the integrand stays below `1e-14` of its peak.
fn cutoff(g: &impl Fn(f64) -> f64) -> (f64, f64) {
    const REACH: f64 = 60.0;
    const STEP: f64 = 0.125;
    let count = (REACH / STEP) as i64;
    let vals: Vec<(f64, f64)> = (-count..=count)
        .map(|i| {
            let u = i as f64 * STEP;
            let v = g(u).abs();
            (u, if v.is_finite() { v } else { 0.0 })
        })
        .collect();
    let peak = vals.iter().fold(0.0, |m: f64, v| m.max(v.1));
    let floor = 1e-14 * peak;
    let lo = vals.iter().find(|v| v.1 >= floor).map_or(-1.0, |v| v.0);
    let hi = vals.iter().rev().find(|v| v.1 >= floor).map_or(1.0, |v| v.0);
    (lo - 4.0 * STEP, hi + 4.0 * STEP)
}

fn semi_axis(g: impl Fn(f64) -> f64) -> Result<SemiAxisIntegral> {
    let (u_min, u_max) = cutoff(&g);
    let scale = quad::integrate(|u| g(u).abs(), u_min, u_max, 0.0, 1e-8, MAX_SEGMENTS)?.value;
    let abs_tol = 1e-11 * scale;
    let value = quad::integrate(&g, u_min, u_max, abs_tol, 0.0, MAX_SEGMENTS)?.value;
    Ok(SemiAxisIntegral { value, scale, u_min, u_max })
}

/// `int_0^inf Xi P1 P2 dz`.
pub fn orthogonality_integral(p1: &HeunPolynomial, p2: &HeunPolynomial) -> Result<SemiAxisIntegral> {
    check_pair(p1, p2)?;
    if !(p1.mu() > 0.0) {
        return Err(Error::MuNotPositive(p1.mu()));
    }
    if p1.n() == p2.n() && p1.lambda() == p2.lambda() {
        return Err(Error::InvalidArgument("the pair must differ in n or lambda".into()));
    }
    semi_axis(|u| {
        let z = u.exp();
        (log_prefactor(z, p1, p2) + u).exp() * xi_bracket(z, p1, p2) * p1.eval_real(z) * p2.eval_real(z)
    })
}

/// `int_0^inf z^{-n} exp(-mu (z + 1/z)) P^2 dz`.
pub fn norm_integral(p: &HeunPolynomial) -> Result<f64> {
    if !(p.mu() > 0.0) {
        return Err(Error::MuNotPositive(p.mu()));
    }
    let n = p.n() as f64;
    let mu = p.mu();
    let r = semi_axis(|u| {
        let z = u.exp();
        let v = p.eval_real(z);
        ((1.0 - n) * u - 2.0 * mu * u.cosh()).exp() * v * v
    })?;
    Ok(r.value)
}
