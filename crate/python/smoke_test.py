"""Smoke test for the heun_rsj_py extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

import cmath
import math

import heun_rsj_py as h


def main():
    mu = 1.0
    lams = h.lambda_spectrum(1, mu)
    s = math.sqrt(1 + 4 * mu * mu)
    assert abs(lams[0] - (1 - s) / 2) < 1e-12 and abs(lams[1] - (1 + s) / 2) < 1e-12

    assert abs(h.delta(5, 0.7, 2.3) - h.delta_matrix(5, 0.7, 2.3)) < 1e-10 * max(1.0, abs(h.delta(5, 0.7, 2.3)))

    p = h.HeunPolynomial.spectral(2, 0.5, 2)
    assert p.coeffs[-1] == 1.0
    assert p.residual(complex(0.3, 1.1)) < 1e-9
    assert p.symmetry_residual() < 1e-9
    assert p.epsilon() in (-1, 1)

    drive = p.physical()
    assert abs(4 * drive.omega ** 2 * (p.lam + p.mu ** 2) - 1) < 1e-12
    n_real, mu_back, lam_back, integral = drive.to_dche()
    assert integral and round(n_real) == 2 and abs(lam_back - p.lam) < 1e-12

    h_step = drive.period / 2000
    times = [i * h_step for i in range(2001)]
    closed = p.phase(times)
    t_rk, rk = h.integrate_phase(drive, closed[0], times[-1], h_step)
    worst = max(abs(cmath.phase(cmath.exp(1j * (a - b)))) for a, b in zip(closed, rk))
    assert worst < 1e-6, worst

    z = 1.2
    q, dq, _ = p.associated(z)
    v, dv, _ = p.jet(z)
    w = z ** 2 * math.exp(p.mu * (z + 1 / z))
    assert abs(v.real * dq - dv.real * q - w) < 1e-10 * w

    p0 = h.HeunPolynomial.spectral(0, 1.0, 0)
    p1 = h.HeunPolynomial.spectral(1, 1.0, 1)
    value, scale = h.orthogonality_integral(p0, p1)
    assert abs(value) <= 1e-8 * scale
    assert p1.norm() > 0

    try:
        h.HeunPolynomial.build(2, 1.0, 0.123)
    except h.HeunRsjError as e:
        assert str(e).startswith("NotSpectral")
    else:
        raise AssertionError("non-spectral lambda accepted")

    assert '"schema": "heun-rsj/1"' in p.to_json()
    print("smoke test passed")


if __name__ == "__main__":
    main()
