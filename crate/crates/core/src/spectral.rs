//! Solving `Delta_n(lambda, mu) = 0` for `lambda`, the `G^(+-1)` factorization of
//! `Phi`, and recovery of the physical drive from a spectral point.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heun_poly::{build_phi, delta_direct, delta_scale, ScaledReal};
use crate::model::{dche_to_params, DcheParams, RsjParams, Sign};

/// Roots must satisfy `|Delta_n| <= ROOT_TOL * max(scale, 1)`.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSet {
    pub n: usize,
    pub mu: f64,
    /// Ascending, with multiplicity.
    pub lambdas: Vec<f64>,
    /// `lambda + mu^2` for each root, computed without cancellation.
    #[serde(skip)]
    pub discriminants: Vec<f64>,
}

impl SpectralSet {
    pub fn params(&self, root_index: usize) -> Result<DcheParams> {
        let lambda = *self
            .lambdas
            .get(root_index)
            .ok_or(Error::IndexOutOfRange { index: root_index, max: self.n })?;
        match self.discriminants.get(root_index) {
            Some(&disc) => DcheParams::with_discriminant(self.n, self.mu, lambda, disc),
            None => DcheParams::new(self.n, self.mu, lambda),
        }
    }
}

/// Anti-diagonal part `K` of `G^(eps) = eps c I + K`. Its square is
/// `mu^2 I + T`, so its eigenvalues are `-eps c` over the roots, and a root
/// near `lambda = -mu^2` shows up as a small eigenvalue with full absolute accuracy.
fn antidiagonal_part(n: usize, mu: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |j, k| {
        let mut v = 0.0;
        if j + k == n {
            v += mu;
        }
        if j + k == n + 1 {
            v -= j as f64;
        }
        v
    })
}

/// `lambda + mu^2` for the ascending roots, or `None` when `K` has complex
/// eigenvalues or the pairing with `lambdas` is not consistent.
fn accurate_discriminants(n: usize, mu: f64, lambdas: &[f64]) -> Option<Vec<f64>> {
    let eig = antidiagonal_part(n, mu).complex_eigenvalues();
    let norm = (n as f64).max(mu.abs()).max(1.0);
    if eig.iter().any(|e| e.im.abs() > 1e-9 * norm) {
        return None;
    }
    let mut discs: Vec<f64> = eig.iter().map(|e| e.re * e.re).collect();
    discs.sort_by(f64::total_cmp);
    for (&disc, &lambda) in discs.iter().zip(lambdas) {
        let slack = 1e-12 * lambda.abs().max(mu * mu).max(1.0);
        if (disc - (lambda + mu * mu)).abs() > slack {
            return None;
        }
    }
    Some(discs)
}

/// Symmetric tridiagonal matrix similar to `lambda I - Phi`:
/// diagonal `j (n + 1 - j)`, off-diagonal `|mu| sqrt((j + 1)(n - j))`.
///
/// `Phi = lambda I - T` with `T` carrying `-mu (j + 1)` above and `-mu (n - j)`
/// below the diagonal; the products of opposite off-diagonal entries are
/// `mu^2 (j + 1)(n - j) >= 0`, so a diagonal similarity makes `T` symmetric.
pub fn symmetric_form(n: usize, mu: f64) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..=n).map(|j| (j * (n + 1 - j)) as f64).collect();
    let off = (0..n).map(|j| mu.abs() * (((j + 1) * (n - j)) as f64).sqrt()).collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence via LDL^T pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue by bisection on the Sturm count.
fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(Delta_n, dDelta_n/dlambda)` sharing one binary exponent.
fn delta_with_derivative(d: &DcheParams) -> (ScaledReal, ScaledReal) {
    let phi = build_phi(d);
    let (mut p2, mut p1, mut dp2, mut dp1) = (0.0, 1.0, 0.0, 0.0);
    let mut exp2 = 0i64;
    for j in 0..phi.dim() {
        let off = if j > 0 { phi.sub[j - 1] * phi.sup[j - 1] } else { 0.0 };
        let next = phi.diag[j] * p1 - off * p2;
        let dnext = p1 + phi.diag[j] * dp1 - off * dp2;
        (p2, p1, dp2, dp1) = (p1, next, dp1, dnext);
        let big = p1.abs().max(p2.abs()).max(dp1.abs()).max(dp2.abs());
        if big > 1e150 {
            let k = big.log2().round() as i32;
            let f = 2f64.powi(-k);
            p1 *= f;
            p2 *= f;
            dp1 *= f;
            dp2 *= f;
            exp2 += k as i64;
        }
    }
    (ScaledReal { mantissa: p1, exp2 }, ScaledReal { mantissa: dp1, exp2 })
}

fn root_ok(d: &DcheParams) -> bool {
    let delta = delta_direct(d).abs();
    let scale = delta_scale(d).max(1.0);
    if delta.is_finite() && scale.is_finite() {
        return delta <= ROOT_TOL * scale;
    }
    crate::heun_poly::delta_relative(d) <= ROOT_TOL
}

/// All `n + 1` roots in `lambda` of `Delta_n(lambda, mu)`, ascending.
pub fn lambda_spectrum(n: usize, mu: f64) -> Result<SpectralSet> {
    if !mu.is_finite() {
        return Err(Error::InvalidParams("mu must be finite".into()));
    }
    if n == 0 {
        return Ok(SpectralSet { n, mu, lambdas: vec![0.0], discriminants: vec![mu * mu] });
    }
    let (diag, off) = symmetric_form(n, mu);
    // Gershgorin interval
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..=n {
        let r = if j > 0 { off[j - 1] } else { 0.0 } + if j < n { off[j] } else { 0.0 };
        lo = lo.min(diag[j] - r);
        hi = hi.max(diag[j] + r);
    }
    let pad = 1.0 + 1e-12 * lo.abs().max(hi.abs());
    let (lo, hi) = (lo - pad, hi + pad);

    let mut lambdas = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut lambda = bisect_eigenvalue(&diag, &off, k, lo, hi);
        let mut d = DcheParams::new(n, mu, lambda)?;
        let mut tries = 0;
        while !root_ok(&d) && tries < 8 {
            let (f, df) = delta_with_derivative(&d);
            if df.mantissa == 0.0 {
                break;
            }
            let candidate = lambda - f.ratio(df);
            let cd = DcheParams::new(n, mu, candidate)?;
            if delta_direct(&cd).abs() >= delta_direct(&d).abs() {
                break;
            }
            lambda = candidate;
            d = cd;
            tries += 1;
        }
        if !root_ok(&d) {
            return Err(Error::ConvergenceFailure { index: k });
        }
        lambdas.push(lambda);
    }
    let discriminants = accurate_discriminants(n, mu, &lambdas)
        .unwrap_or_else(|| lambdas.iter().map(|l| l + mu * mu).collect());
    Ok(SpectralSet { n, mu, lambdas, discriminants })
}

/// The `(n+1) x (n+1)` matrix `G^(eps)_{jk} = eps c delta_{jk} + mu delta_{j,n-k} - j delta_{j,n+1-k}`
/// with `c = (2 omega)^-1 = sqrt(lambda + mu^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    pub sign: Sign,
    pub n: usize,
    pub entries: DMatrix<f64>,
}

pub fn g_matrix(sign: Sign, d: &DcheParams) -> Result<GMatrix> {
    let c = d.half_inverse_omega()?;
    let n = d.n();
    let entries = DMatrix::from_fn(n + 1, n + 1, |j, k| {
        let mut v = 0.0;
        if j == k {
            v += sign.value() * c;
        }
        if j + k == n {
            v += d.mu();
        }
        if j + k == n + 1 {
            v -= j as f64;
        }
        v
    });
    Ok(GMatrix { sign, n, entries })
}

fn dense_phi_kronecker(d: &DcheParams) -> DMatrix<f64> {
    let k = build_phi(d).kronecker_form();
    DMatrix::from_fn(d.n() + 1, d.n() + 1, |i, j| k[i][j])
}

/// Outcome of comparing `G^(+1) G^(-1)` with `+Phi` and `-Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationCheck {
    /// Max entrywise deviation from `sign * Phi` (Kronecker orientation).
    pub deviation: f64,
    pub sign: Sign,
    /// Largest sum of summand magnitudes over the entries of the product.
    pub scale: f64,
}

impl FactorizationCheck {
    pub fn relative(&self) -> f64 {
        self.deviation / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// `G^(+1) G^(-1)` against `+-Phi`. The product comes out as `-Phi`.
pub fn check_factorization(d: &DcheParams) -> Result<FactorizationCheck> {
    let gp = g_matrix(Sign::Plus, d)?.entries;
    let gm = g_matrix(Sign::Minus, d)?.entries;
    let product = &gp * &gm;
    let magnitude = gp.abs() * gm.abs();
    let phi = dense_phi_kronecker(d);
    let dev_plus = (&product - &phi).abs().max();
    let dev_minus = (&product + &phi).abs().max();
    let scale = magnitude.max().max(phi.abs().max());
    let (deviation, sign) = if dev_minus <= dev_plus {
        (dev_minus, Sign::Minus)
    } else {
        (dev_plus, Sign::Plus)
    };
    Ok(FactorizationCheck { deviation, sign, scale })
}

/// Max entry of `G^(+1) G^(-1) - G^(-1) G^(+1)` and the summand scale.
pub fn commutator(d: &DcheParams) -> Result<(f64, f64)> {
    let gp = g_matrix(Sign::Plus, d)?.entries;
    let gm = g_matrix(Sign::Minus, d)?.entries;
    let diff = (&gp * &gm - &gm * &gp).abs().max();
    let scale = (gp.abs() * gm.abs()).max();
    Ok((diff, scale))
}

/// Determinants of the two factors and their Hadamard bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCondition {
    pub det_plus: f64,
    pub det_minus: f64,
    pub scale_plus: f64,
    pub scale_minus: f64,
}

impl SplitCondition {
    /// `min(|det+| / scale+, |det-| / scale-)`.
    pub fn min_relative(&self) -> f64 {
        let rel = |det: f64, scale: f64| if det == 0.0 { 0.0 } else { det.abs() / scale };
        rel(self.det_plus, self.scale_plus).min(rel(self.det_minus, self.scale_minus))
    }

    pub fn product(&self) -> f64 {
        self.det_plus * self.det_minus
    }
}

fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

pub fn spectral_condition(d: &DcheParams) -> Result<SplitCondition> {
    let gp = g_matrix(Sign::Plus, d)?.entries;
    let gm = g_matrix(Sign::Minus, d)?.entries;
    Ok(SplitCondition {
        det_plus: gp.clone().determinant(),
        det_minus: gm.clone().determinant(),
        scale_plus: hadamard_bound(&gp),
        scale_minus: hadamard_bound(&gm),
    })
}

/// Physical drive `(A, B, omega)` admitting a polynomial solution of degree `n`.
pub fn physical_point(n: usize, mu: f64, root_index: usize) -> Result<(RsjParams, DcheParams)> {
    if root_index > n {
        return Err(Error::IndexOutOfRange { index: root_index, max: n });
    }
    let d = lambda_spectrum(n, mu)?.params(root_index)?;
    Ok((dche_to_params(&d)?, d))
}

/// One row of the spectral surface: a root and, where it exists, its drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub n: usize,
    pub mu: f64,
    pub root_index: usize,
    pub lambda: f64,
    pub physical: Option<RsjParams>,
}

pub fn surface_rows(n: usize, mu: f64) -> Result<Vec<SurfaceRow>> {
    let set = lambda_spectrum(n, mu)?;
    Ok((0..=n)
        .map(|root_index| SurfaceRow {
            n,
            mu,
            root_index,
            lambda: set.lambdas[root_index],
            physical: set.params(root_index).ok().and_then(|d| dche_to_params(&d).ok()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(n: usize, mu: f64, lambda: f64) -> DcheParams {
        DcheParams::new(n, mu, lambda).unwrap()
    }

    #[test]
    fn spectrum_examples() {
        assert_eq!(lambda_spectrum(0, 0.7).unwrap().lambdas, vec![0.0]);
        let s = lambda_spectrum(1, 1.0).unwrap();
        let r5 = 5f64.sqrt();
        assert!((s.lambdas[0] - (1.0 - r5) / 2.0).abs() < 1e-12);
        assert!((s.lambdas[1] - (1.0 + r5) / 2.0).abs() < 1e-12);
        let s = lambda_spectrum(3, 0.0).unwrap();
        let expect = [0.0, 3.0, 3.0, 4.0];
        for (a, b) in s.lambdas.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_form_has_same_determinant() {
        // det(lambda I - S) by recurrence on the symmetric form vs Delta_n
        for n in 1..8 {
            for &(mu, lambda) in &[(0.6, 0.2), (-1.5, 3.1)] {
                let (diag, off) = symmetric_form(n, mu);
                let (mut p2, mut p1) = (0.0, 1.0);
                for j in 0..=n {
                    let o = if j > 0 { off[j - 1] * off[j - 1] } else { 0.0 };
                    (p2, p1) = (p1, (lambda - diag[j]) * p1 - o * p2);
                }
                let d = dp(n, mu, lambda);
                assert!((p1 - delta_direct(&d)).abs() <= 1e-12 * delta_scale(&d));
            }
        }
    }

    #[test]
    fn g_matrix_examples() {
        let d = dp(0, 0.4, 0.9);
        let c = (0.9f64 + 0.16).sqrt();
        assert!((g_matrix(Sign::Plus, &d).unwrap().entries[(0, 0)] - (c + 0.4)).abs() < 1e-15);
        assert!((g_matrix(Sign::Minus, &d).unwrap().entries[(0, 0)] - (-c + 0.4)).abs() < 1e-15);

        let d = dp(1, 0.4, 0.9);
        let g = g_matrix(Sign::Minus, &d).unwrap().entries;
        assert!((g[(0, 0)] + c).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.4);
        assert_eq!(g[(1, 0)], 0.4);
        assert!((g[(1, 1)] - (-c - 1.0)).abs() < 1e-15);

        assert!(matches!(g_matrix(Sign::Plus, &dp(1, 0.1, -1.0)), Err(Error::NonPositiveDiscriminant(_))));
    }

    #[test]
    fn factorization_small_n_by_hand() {
        // n = 0: (c + mu)(-c + mu) = mu^2 - c^2 = -lambda
        let chk = check_factorization(&dp(0, 0.4, 0.9)).unwrap();
        assert_eq!(chk.sign, Sign::Minus);
        assert!(chk.deviation < 1e-15);
        let chk = check_factorization(&dp(1, 1.3, 0.25)).unwrap();
        assert_eq!(chk.sign, Sign::Minus);
        assert!(chk.deviation <= 1e-13);
    }

    #[test]
    fn commutes_for_small_n() {
        for n in 0..=10 {
            let (diff, scale) = commutator(&dp(n, 0.8, 0.3)).unwrap();
            assert!(diff <= 1e-12 * scale, "n={n}");
        }
    }

    #[test]
    fn split_condition_examples() {
        let lambda = (1.0 + 5f64.sqrt()) / 2.0;
        let s = spectral_condition(&dp(1, 1.0, lambda)).unwrap();
        assert!(s.min_relative() <= 1e-10);
        let s = spectral_condition(&dp(1, 1.0, 1.0)).unwrap();
        assert!(s.det_plus.abs() > 0.1 && s.det_minus.abs() > 0.1);
        assert!((s.product().abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn physical_point_examples() {
        let (p, d) = physical_point(0, 0.5, 0).unwrap();
        assert_eq!(d.lambda(), 0.0);
        assert!((p.omega() - 1.0).abs() < 1e-15);
        assert!((p.a() - 1.0).abs() < 1e-15);
        assert!((p.b() + 1.0).abs() < 1e-15);

        let (p, d) = physical_point(1, 1.0, 1).unwrap();
        let omega = 1.0 / (2.0 * (d.lambda() + 1.0).sqrt());
        assert!((p.omega() - omega).abs() < 1e-15);
        assert!((p.a() - 2.0 * omega).abs() < 1e-15);
        assert!((p.b() + 2.0 * omega).abs() < 1e-15);

        let back = crate::model::params_to_dche(&p);
        assert!(back.integral);
        assert!((back.n_real - 1.0).abs() < 1e-12);
        assert!((back.mu - 1.0).abs() < 1e-12);
        assert!((back.lambda - d.lambda()).abs() < 1e-12 * d.lambda().abs());

        assert!(matches!(physical_point(1, 1.0, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn bottom_root_discriminant_is_resolved() {
        // lambda_0 + mu^2 is tiny but positive; K recovers it to full relative accuracy
        let s = lambda_spectrum(6, 0.25).unwrap();
        let disc = s.discriminants[0];
        assert!(disc > 0.0 && disc < 1e-12, "{disc}");
        // 60-digit reference values
        assert!((disc / 7.037_815_365_857_697e-15 - 1.0).abs() < 1e-6, "{disc}");
        let d5 = lambda_spectrum(5, 0.25).unwrap().discriminants[0];
        assert!((d5 / 4.036_855_369_290_396e-12 - 1.0).abs() < 1e-8, "{d5}");
        let d4 = lambda_spectrum(4, 0.25).unwrap().discriminants[0];
        assert!((d4 / 1.604_612_536_611_348_5e-9 - 1.0).abs() < 1e-10, "{d4}");
        for (l, d) in s.lambdas.iter().zip(&s.discriminants) {
            assert!((l + 0.0625 - d).abs() < 1e-14 * l.abs().max(1.0) * 10.0);
        }
    }

    #[test]
    fn nonpositive_discriminant_has_no_drive() {
        assert!(matches!(dche_to_params(&dp(2, 1.0, -1.5)), Err(Error::NonPositiveDiscriminant(_))));
        let rows = surface_rows(2, 1.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.physical.is_some()));
        let s = lambda_spectrum(0, 0.0).unwrap();
        assert!(surface_rows(0, 0.0).unwrap()[0].physical.is_none());
        assert_eq!(s.discriminants, vec![0.0]);
        assert_eq!(lambda_spectrum(0, 0.5).unwrap().discriminants, vec![0.25]);
    }
}
