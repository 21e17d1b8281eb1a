//! Python module `heun_rsj_py`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use heun_rsj::heun_poly;
use heun_rsj::io::{to_json, PolynomialRecord};
use heun_rsj::rsj_dynamics;
use heun_rsj::spectral;
use heun_rsj::structure;
use heun_rsj::transforms;
use heun_rsj::{DcheParams, Error};

create_exception!(heun_rsj_py, HeunRsjError, PyValueError, "Raised for any failure reported by the core library.");

fn py_err(e: Error) -> PyErr {
    HeunRsjError::new_err(format!("{}: {e}", e.name()))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for heun_rsj::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Physical drive `q(t) = B + A cos(omega t)`.
#[pyclass(name = "RsjParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRsjParams(heun_rsj::RsjParams);

#[pymethods]
impl PyRsjParams {
    #[new]
    fn new(a: f64, b: f64, omega: f64) -> PyResult<Self> {
        heun_rsj::RsjParams::new(a, b, omega).py().map(Self)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    /// `(n_real, mu, lambda, integral)`.
    fn to_dche(&self) -> (f64, f64, f64, bool) {
        let c = heun_rsj::params_to_dche(&self.0);
        (c.n_real, c.mu, c.lambda, c.integral)
    }

    fn __repr__(&self) -> String {
        format!("RsjParams(a={}, b={}, omega={})", self.0.a(), self.0.b(), self.0.omega())
    }
}

/// Monic Heun polynomial at a spectral point.
#[pyclass(name = "HeunPolynomial", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHeunPolynomial(heun_rsj::HeunPolynomial);

#[pymethods]
impl PyHeunPolynomial {
    /// Polynomial for root `root` (ascending) of `Delta_n(lambda, mu) = 0`.
    #[staticmethod]
    #[pyo3(signature = (n, mu, root, tol_spec = heun_poly::TOL_SPEC))]
    fn spectral(n: usize, mu: f64, root: usize, tol_spec: f64) -> PyResult<Self> {
        let d = spectral::lambda_spectrum(n, mu).py()?.params(root).py()?;
        heun_poly::build_polynomial_with_tol(&d, tol_spec).py().map(Self)
    }

    /// Polynomial for explicit `(n, mu, lambda)`, which must pass the spectral gate.
    #[staticmethod]
    #[pyo3(signature = (n, mu, lam, tol_spec = heun_poly::TOL_SPEC))]
    fn build(n: usize, mu: f64, lam: f64, tol_spec: f64) -> PyResult<Self> {
        let d = DcheParams::new(n, mu, lam).py()?;
        heun_poly::build_polynomial_with_tol(&d, tol_spec).py().map(Self)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.0.eval(z)
    }

    /// `(P, P', P'')` at `z`.
    fn jet(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        self.0.eval_jet(z)
    }

    /// Drive `(A, B, omega)` on the `omega > 0` branch.
    fn physical(&self) -> PyResult<PyRsjParams> {
        heun_rsj::dche_to_params(self.0.params()).py().map(PyRsjParams)
    }

    fn epsilon(&self) -> PyResult<i8> {
        Ok(match structure::epsilon_sign(&self.0).py()? {
            heun_rsj::Sign::Plus => 1,
            heun_rsj::Sign::Minus => -1,
        })
    }

    /// Relative master-equation residual at `z`.
    fn residual(&self, z: Complex64) -> f64 {
        transforms::residual_eq11(&self.0, z).relative()
    }

    fn linear_system_residual(&self) -> f64 {
        heun_poly::residual_linear_system(&self.0).max_abs()
    }

    fn symmetry_residual(&self) -> PyResult<f64> {
        structure::symmetry_residual(&self.0).py()
    }

    fn coeff_relations_residual(&self) -> PyResult<Vec<f64>> {
        structure::coeff_relations_residual(&self.0).py()
    }

    fn tilde(&self) -> Vec<f64> {
        structure::tilde_p(&self.0)
    }

    /// Closed-form phase at each time of an increasing sequence.
    fn phase(&self, times: Vec<f64>) -> PyResult<Vec<f64>> {
        let sol = structure::PhaseSolution::new(&self.0).py()?;
        Ok(sol.series(&times).py()?.into_iter().map(|p| p.phi).collect())
    }

    /// `(Q, Q', Q'')` at `z > 0`, integrating from `base`.
    #[pyo3(signature = (z, base = 1.0))]
    fn associated(&self, z: f64, base: f64) -> PyResult<(f64, f64, f64)> {
        let q = structure::associated_q_from(&self.0, z, base).py()?;
        Ok((q.q, q.dq, q.d2q))
    }

    fn norm(&self) -> PyResult<f64> {
        structure::norm_integral(&self.0).py()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&PolynomialRecord::from(&self.0)).py()
    }

    fn __repr__(&self) -> String {
        format!("HeunPolynomial(n={}, mu={}, lam={})", self.0.n(), self.0.mu(), self.0.lambda())
    }
}

/// Ascending roots in `lambda` of `Delta_n(lambda, mu)`.
#[pyfunction]
fn lambda_spectrum(n: usize, mu: f64) -> PyResult<Vec<f64>> {
    Ok(spectral::lambda_spectrum(n, mu).py()?.lambdas)
}

#[pyfunction]
fn delta(n: usize, mu: f64, lam: f64) -> PyResult<f64> {
    Ok(heun_poly::delta_direct(&DcheParams::new(n, mu, lam).py()?))
}

#[pyfunction]
fn delta_matrix(n: usize, mu: f64, lam: f64) -> PyResult<f64> {
    heun_poly::delta_matrix(&DcheParams::new(n, mu, lam).py()?).py()
}

#[pyfunction]
fn dche_to_params(n: usize, mu: f64, lam: f64) -> PyResult<PyRsjParams> {
    heun_rsj::dche_to_params(&DcheParams::new(n, mu, lam).py()?).py().map(PyRsjParams)
}

/// RK4 solution of `phi' + sin(phi) = q(t)` as `(times, phases)`.
#[pyfunction]
#[pyo3(signature = (params, phi0, t_end, h = None))]
fn integrate_phase(params: &PyRsjParams, phi0: f64, t_end: f64, h: Option<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let h = h.unwrap_or_else(|| rsj_dynamics::default_step(&params.0));
    let t = rsj_dynamics::integrate_phase(&params.0, phi0, t_end, h).py()?;
    Ok((t.times().to_vec(), t.values().to_vec()))
}

/// RK4 solution of the linear system as `(times, xs, ys)`.
#[pyfunction]
#[pyo3(signature = (params, x0, y0, t_end, h = None))]
fn integrate_xy(
    params: &PyRsjParams,
    x0: f64,
    y0: f64,
    t_end: f64,
    h: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let h = h.unwrap_or_else(|| rsj_dynamics::default_step(&params.0));
    let t = rsj_dynamics::integrate_xy(&params.0, x0, y0, t_end, h).py()?;
    let (xs, ys) = t.values().iter().map(|s| (s[0], s[1])).unzip();
    Ok((t.times().to_vec(), xs, ys))
}

#[pyfunction]
fn weight_xi(z: f64, p1: &PyHeunPolynomial, p2: &PyHeunPolynomial) -> PyResult<f64> {
    structure::weight_xi(z, &p1.0, &p2.0).py()
}

/// `(value, scale)` of the weighted integral over the positive axis.
#[pyfunction]
fn orthogonality_integral(p1: &PyHeunPolynomial, p2: &PyHeunPolynomial) -> PyResult<(f64, f64)> {
    let r = structure::orthogonality_integral(&p1.0, &p2.0).py()?;
    Ok((r.value, r.scale))
}

#[pymodule]
pub fn heun_rsj_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HeunRsjError", m.py().get_type::<HeunRsjError>())?;
    m.add_class::<PyRsjParams>()?;
    m.add_class::<PyHeunPolynomial>()?;
    m.add_function(wrap_pyfunction!(lambda_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(delta_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dche_to_params, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_phase, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_xy, m)?)?;
    m.add_function(wrap_pyfunction!(weight_xi, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_integral, m)?)?;
    Ok(())
}
