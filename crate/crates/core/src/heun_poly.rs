//! Polynomial solutions `P_n` of the master equation
//! `z (z P' - n P)' - mu z (z P' - n P) + (mu - z) P' + lambda P = 0`.
//!
//! Substituting `P = sum a_k z^k` gives a tridiagonal homogeneous system whose
//! determinant `Delta_n(lambda, mu)` must vanish. Two independent routes compute
//! the determinant (three-term recurrence and a product of 2x2 transfer
//! matrices) and two compute the coefficients (scaled-ratio recurrence and the
//! transfer-matrix formula).

use std::ops::Mul;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::{DcheParams, HeunPolynomial};

/// Default gate for `|Delta_n| <= tol * scale` in [`build_polynomial`].
pub const TOL_SPEC: f64 = 1e-8;

/// Offsets used for the `k -> 0` limit of the transfer-matrix coefficient formula.
pub const LIMIT_EPSILONS: [f64; 2] = [1e-6, 1e-7];

/// Tridiagonal matrix `Phi` in row-per-equation orientation: row `j` holds the
/// coefficients of `a_{j-1}, a_j, a_{j+1}` in the `j`-th equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriDiagMatrix {
    pub n: usize,
    /// `lambda - j (n + 1 - j)`, `j = 0..=n`.
    pub diag: Vec<f64>,
    /// `mu (j + 1)` at row `j = 0..n`.
    pub sup: Vec<f64>,
    /// `mu (n - j + 1)` at row `j = 1..=n`, stored at index `j - 1`.
    pub sub: Vec<f64>,
}

impl TriDiagMatrix {
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row == col {
            self.diag[row]
        } else if col == row + 1 {
            self.sup[row]
        } else if row == col + 1 {
            self.sub[col]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// The Kronecker-delta orientation `(n - j) mu` above, `j mu` below the
    /// diagonal: the transpose of the row-per-equation layout.
    pub fn kronecker_form(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.get(c, r)).collect())
            .collect()
    }
}

pub fn build_phi(d: &DcheParams) -> TriDiagMatrix {
    let n = d.n();
    let (mu, lambda) = (d.mu(), d.lambda());
    TriDiagMatrix {
        n,
        diag: (0..=n).map(|j| lambda - (j * (n + 1 - j)) as f64).collect(),
        sup: (0..n).map(|j| mu * (j + 1) as f64).collect(),
        sub: (1..=n).map(|j| mu * (n - j + 1) as f64).collect(),
    }
}

/// A real number `mantissa * 2^exp2`, used where determinants outgrow `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledReal {
    pub mantissa: f64,
    pub exp2: i64,
}

impl ScaledReal {
    pub fn to_f64(self) -> f64 {
        let mut m = self.mantissa;
        let mut e = self.exp2;
        // apply the exponent in chunks so intermediate powers stay representable
        while e > 1000 {
            m *= 2f64.powi(1000);
            e -= 1000;
        }
        while e < -1000 {
            m *= 2f64.powi(-1000);
            e += 1000;
        }
        m * 2f64.powi(e as i32)
    }

    /// `self / other` as a plain float.
    pub fn ratio(self, other: ScaledReal) -> f64 {
        ScaledReal { mantissa: self.mantissa / other.mantissa, exp2: self.exp2 - other.exp2 }.to_f64()
    }

    pub fn abs(self) -> Self {
        Self { mantissa: self.mantissa.abs(), ..self }
    }
}

const RESCALE_ABOVE: f64 = 1e150;

/// `D_j = diag_j D_{j-1} - off_j D_{j-2}` with `D_{-1} = 1`, carrying a shared
/// binary exponent so large `n` cannot overflow.
fn three_term_det(len: usize, diag: impl Fn(usize) -> f64, off: impl Fn(usize) -> f64) -> ScaledReal {
    let (mut prev2, mut prev) = (0.0, 1.0);
    let mut exp2: i64 = 0;
    for j in 0..len {
        let next = diag(j) * prev - if j > 0 { off(j) * prev2 } else { 0.0 };
        prev2 = prev;
        prev = next;
        let big = prev.abs().max(prev2.abs());
        if big > RESCALE_ABOVE || (big < 1.0 / RESCALE_ABOVE && big > 0.0) {
            let k = big.log2().round() as i32;
            let f = 2f64.powi(-k);
            prev *= f;
            prev2 *= f;
            exp2 += k as i64;
        }
    }
    ScaledReal { mantissa: prev, exp2 }
}

pub fn delta_direct_scaled(d: &DcheParams) -> ScaledReal {
    let phi = build_phi(d);
    three_term_det(phi.dim(), |j| phi.diag[j], |j| phi.sub[j - 1] * phi.sup[j - 1])
}

/// `det Phi` by the three-term tridiagonal recurrence.
pub fn delta_direct(d: &DcheParams) -> f64 {
    delta_direct_scaled(d).to_f64()
}

/// Same recurrence with every summand replaced by its magnitude
/// (`|lambda| + j(n+1-j)` on the diagonal). Bounds the size of the terms that
/// cancel in `Delta_n`, and serves as the scale for "is this zero" decisions.
pub fn delta_scale_scaled(d: &DcheParams) -> ScaledReal {
    let phi = build_phi(d);
    let n = d.n();
    let lam = d.lambda().abs();
    three_term_det(
        phi.dim(),
        |j| lam + (j * (n + 1 - j)) as f64,
        |j| -(phi.sub[j - 1] * phi.sup[j - 1]).abs(),
    )
}

pub fn delta_scale(d: &DcheParams) -> f64 {
    delta_scale_scaled(d).to_f64()
}

/// `|Delta_n| / scale`, robust against overflow of either factor.
pub fn delta_relative(d: &DcheParams) -> f64 {
    let scale = delta_scale_scaled(d);
    if scale.mantissa == 0.0 {
        return delta_direct(d).abs();
    }
    delta_direct_scaled(d).abs().ratio(scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwo(pub [[f64; 2]; 2]);

impl TwoByTwo {
    pub const IDENTITY: TwoByTwo = TwoByTwo([[1.0, 0.0], [0.0, 1.0]]);

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

impl Mul for TwoByTwo {
    type Output = TwoByTwo;

    fn mul(self, rhs: TwoByTwo) -> TwoByTwo {
        let (a, b) = (self.0, rhs.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        TwoByTwo([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

/// `Z_k = k (k - n - 1)` for a possibly non-integer `k`.
fn z_factor(k: f64, n: usize) -> f64 {
    k * (k - n as f64 - 1.0)
}

/// `M_k = [[Z_k + lambda, mu^2], [Z_k, 0]]`.
pub fn transfer_matrix(k: f64, d: &DcheParams) -> TwoByTwo {
    let z = z_factor(k, d.n());
    TwoByTwo([[z + d.lambda(), d.mu() * d.mu()], [z, 0.0]])
}

/// Ordered product `M_from M_{from+1} ... M_to` (identity when `from > to`).
pub fn transfer_product(from: usize, to: usize, d: &DcheParams) -> TwoByTwo {
    (from..=to).fold(TwoByTwo::IDENTITY, |acc, j| acc * transfer_matrix(j as f64, d))
}

/// `M_from ... M_{n-1} v`, applied right to left.
fn apply_chain(from: usize, d: &DcheParams, v: [f64; 2]) -> [f64; 2] {
    (from..d.n()).rev().fold(v, |acc, j| transfer_matrix(j as f64, d).apply(acc))
}

/// `-[lambda, mu^2] M_1 ... M_{n-1} [n - lambda, n]^T`.
pub fn delta_matrix(d: &DcheParams) -> Result<f64> {
    let n = d.n();
    if n == 0 {
        return Err(Error::DegreeZeroUnsupported);
    }
    let w = apply_chain(1, d, [n as f64 - d.lambda(), n as f64]);
    Ok(-(d.lambda() * w[0] + d.mu() * d.mu() * w[1]))
}

/// Scaled ratios `R_k = (mu / k) a_{k-1} / a_k`; index `k - 1` holds `R_k`.
/// Starts from `R_n = 1 - lambda / n` and runs the recurrence down to `k = 1`.
pub fn ratios(d: &DcheParams) -> Result<Vec<f64>> {
    let n = d.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mu, lambda) = (d.mu(), d.lambda());
    let mut r = vec![0.0; n];
    r[n - 1] = 1.0 - lambda / n as f64;
    for k in (1..n).rev() {
        let next = r[k];
        if next == 0.0 {
            return Err(Error::ZeroRatioDivision { k: k + 1 });
        }
        let z = z_factor(k as f64, n);
        r[k - 1] = 1.0 + lambda / z + mu * mu / (z * next);
    }
    Ok(r)
}

/// Coefficients from the ratio chain, `a_n = 1`, `a_{k-1} = (k / mu) R_k a_k`.
pub fn coeffs_from_ratios(d: &DcheParams) -> Result<HeunPolynomial> {
    let n = d.n();
    let r = ratios(d)?;
    if n > 0 && d.mu() == 0.0 {
        return Err(Error::MuZero);
    }
    let mut a = vec![0.0; n + 1];
    a[n] = 1.0;
    for k in (1..=n).rev() {
        a[k - 1] = k as f64 / d.mu() * r[k - 1] * a[k];
    }
    HeunPolynomial::new(*d, a)
}

/// Coefficients by running rows `n, n-1, ..., 1` of the linear system downward
/// from `a_n = 1`. Same recurrence as the ratio chain without the divisions by
/// `R_k`, so it survives roots where an intermediate coefficient vanishes.
pub fn coeffs_from_recurrence(d: &DcheParams) -> Result<HeunPolynomial> {
    let n = d.n();
    if n > 0 && d.mu() == 0.0 {
        return Err(Error::MuZero);
    }
    let (mu, lambda) = (d.mu(), d.lambda());
    let mut a = vec![0.0; n + 1];
    a[n] = 1.0;
    if n > 0 {
        a[n - 1] = (n as f64 - lambda) / mu;
    }
    for k in (1..n).rev() {
        let diag = lambda - (k * (n - k + 1)) as f64;
        a[k - 1] = -(diag * a[k] + mu * (k + 1) as f64 * a[k + 1]) / (mu * (n - k + 1) as f64);
    }
    HeunPolynomial::new(*d, a)
}

/// `a_k` from the transfer-matrix product formula, normalized to `a_n = 1`.
///
/// For `k = 0` the formula is singular (`1/k` against a vanishing matrix row),
/// so `k` is shifted to `epsilon` in the scalar factor and in `M_0`, evaluated
/// at the two [`LIMIT_EPSILONS`] and Richardson-extrapolated to `epsilon = 0`.
pub fn coeff_matrix(k: usize, d: &DcheParams) -> Result<f64> {
    let n = d.n();
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    if k == n {
        return Ok(1.0);
    }
    let mu = d.mu();
    if mu == 0.0 {
        return Err(Error::MuZero);
    }
    let v = [n as f64 - d.lambda(), n as f64];
    let power = (-mu).powi(k as i32 - n as i32);
    if k > 0 {
        let w = apply_chain(k, d, v);
        let fact = gamma((n + 2 - k) as f64);
        return Ok(power * w[1] / (k as f64 * fact));
    }
    // k = 0: [0, 1] M_eps w = Z_eps w_0
    let w = apply_chain(1, d, v);
    let at = |eps: f64| {
        let m = transfer_matrix(eps, d);
        power * m.apply(w)[1] / (eps * gamma(n as f64 + 1.0 - eps + 1.0))
    };
    let [e1, e2] = LIMIT_EPSILONS;
    let (f1, f2) = (at(e1), at(e2));
    Ok((e1 * f2 - e2 * f1) / (e1 - e2))
}

/// All coefficients through [`coeff_matrix`].
pub fn coeffs_from_matrix(d: &DcheParams) -> Result<HeunPolynomial> {
    let a = (0..=d.n()).map(|k| coeff_matrix(k, d)).collect::<Result<Vec<_>>>()?;
    HeunPolynomial::new(*d, a)
}

/// Residuals of the homogeneous linear system, split as first row, interior
/// rows and last row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSystemResidual {
    pub r0: f64,
    pub rmid: Vec<f64>,
    pub rn: f64,
}

impl LinearSystemResidual {
    pub fn max_abs(&self) -> f64 {
        self.rmid.iter().fold(self.r0.abs().max(self.rn.abs()), |m, r| m.max(r.abs()))
    }
}

pub fn residual_linear_system(p: &HeunPolynomial) -> LinearSystemResidual {
    let n = p.n();
    let (mu, lambda) = (p.mu(), p.lambda());
    let a = p.coeffs();
    if n == 0 {
        return LinearSystemResidual { r0: lambda * a[0], rmid: Vec::new(), rn: lambda * a[0] };
    }
    let rmid = (1..n)
        .map(|k| {
            mu * (n - k + 1) as f64 * a[k - 1]
                + (lambda - (k * (n - k + 1)) as f64) * a[k]
                + mu * (k + 1) as f64 * a[k + 1]
        })
        .collect();
    LinearSystemResidual {
        r0: lambda * a[0] + mu * a[1],
        rmid,
        rn: mu * a[n - 1] + (lambda - n as f64) * a[n],
    }
}

/// `[1, mu^2 / lambda] M_1 ... M_{n-1} [1 - lambda / n, 1]^T`.
pub fn necessary_condition(d: &DcheParams) -> Result<f64> {
    let n = d.n();
    if n == 0 {
        return Err(Error::DegreeZeroUnsupported);
    }
    if d.lambda() == 0.0 {
        return Err(Error::LambdaZero);
    }
    let w = apply_chain(1, d, [1.0 - d.lambda() / n as f64, 1.0]);
    Ok(w[0] + d.mu() * d.mu() / d.lambda() * w[1])
}

pub fn build_polynomial(d: &DcheParams) -> Result<HeunPolynomial> {
    build_polynomial_with_tol(d, TOL_SPEC)
}

/// The spectral gate `|Delta_n| <= tol * max(scale, 1)` followed by the ratio chain.
pub fn build_polynomial_with_tol(d: &DcheParams, tol: f64) -> Result<HeunPolynomial> {
    let scale = delta_scale(d).max(1.0);
    let delta = delta_direct(d);
    if !(delta.abs() <= tol * scale) {
        return Err(Error::NotSpectral { delta: delta.abs(), bound: tol * scale });
    }
    if d.n() == 0 {
        return HeunPolynomial::new(*d, vec![1.0]);
    }
    match coeffs_from_ratios(d) {
        Err(Error::ZeroRatioDivision { .. }) => coeffs_from_recurrence(d),
        other => other,
    }
}
