//! Horner evaluation of real-coefficient polynomials, ascending order `c[0] + c[1] z + ...`.

use num_complex::Complex64;

/// Value and first two derivatives at `z`.
pub fn eval_jet(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut p, mut d1, mut d2) = (zero, zero, zero);
    for &c in coeffs.iter().rev() {
        d2 = d2 * z + d1 * 2.0;
        d1 = d1 * z + p;
        p = p * z + c;
    }
    (p, d1, d2)
}

pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Value and first two derivatives at real `x`.
pub fn eval_jet_real(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + c;
    }
    (p, d1, d2)
}

/// Sum of |c_k| |z|^k, the magnitude of the largest possible cancellation.
pub fn abs_bound(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_hand_derivatives() {
        // 1 - 2z + 3z^2 + z^3
        let c = [1.0, -2.0, 3.0, 1.0];
        let z = Complex64::new(0.3, -1.1);
        let (p, d1, d2) = eval_jet(&c, z);
        let p_ref = 1.0 - 2.0 * z + 3.0 * z * z + z * z * z;
        let d1_ref = -2.0 + 6.0 * z + 3.0 * z * z;
        let d2_ref = 6.0 + 6.0 * z;
        assert!((p - p_ref).norm() < 1e-14);
        assert!((d1 - d1_ref).norm() < 1e-14);
        assert!((d2 - d2_ref).norm() < 1e-14);
        let (pr, d1r, d2r) = eval_jet_real(&c, 0.7);
        assert!((pr - eval_real(&c, 0.7)).abs() < 1e-15);
        assert!((d1r - (-2.0 + 4.2 + 3.0 * 0.49)).abs() < 1e-14);
        assert!((d2r - (6.0 + 4.2)).abs() < 1e-14);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(eval(&[], Complex64::new(2.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(eval_real(&[], 2.0), 0.0);
    }
}
