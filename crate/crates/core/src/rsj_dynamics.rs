//! Time-domain reference solvers.
//!
//! Two routes to the phase: the nonlinear equation `phi' + sin(phi) = q(t)`
//! directly, and the linear pair `2x' = x + q y`, `2y' = -(q x + y)` followed by
//! `exp(i phi) = (x - i y) / (x + i y)`. Both use fixed-step classical RK4 so
//! results are reproducible bit for bit.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{PhaseTrajectory, RsjParams, Sample, Trajectory, XyTrajectory};

/// Steps per drive period used when no step is given.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 2000.0;

pub fn default_step(p: &RsjParams) -> f64 {
    p.period() / DEFAULT_STEPS_PER_PERIOD
}

pub fn bias(t: f64, p: &RsjParams) -> f64 {
    p.b() + p.a() * (p.omega() * t).cos()
}

/// Classical RK4 from `t = 0` to `t_end`. The last step is shortened when
/// `t_end` is not a multiple of `h`; sample times are `k h`, not accumulated.
pub fn rk4<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    h: f64,
) -> Result<Trajectory<[f64; N]>>
where
    [f64; N]: Sample,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    let steps = (t_end / h * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    values.push(y0);
    let mut y = y0;
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *y;
        out.iter_mut().zip(k).for_each(|(o, ki)| *o += s * ki);
        out
    };
    for i in 0..steps {
        let t = i as f64 * h;
        let t_next = if i + 1 == steps { t_end } else { (i + 1) as f64 * h };
        let dt = t_next - t;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * dt, &axpy(&y, &k1, 0.5 * dt));
        let k3 = rhs(t + 0.5 * dt, &axpy(&y, &k2, 0.5 * dt));
        let k4 = rhs(t + dt, &axpy(&y, &k3, dt));
        for j in 0..N {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        times.push(t_next);
        values.push(y);
    }
    Trajectory::new(times, values)
}

pub fn integrate_phase(p: &RsjParams, phi0: f64, t_end: f64, h: f64) -> Result<PhaseTrajectory> {
    if !phi0.is_finite() {
        return Err(Error::InvalidArgument("phi0 must be finite".into()));
    }
    let traj = rk4(|t, y: &[f64; 1]| [bias(t, p) - y[0].sin()], [phi0], t_end, h)?;
    Ok(traj.map(|_, y| y[0]))
}

pub fn integrate_xy(p: &RsjParams, x0: f64, y0: f64, t_end: f64, h: f64) -> Result<XyTrajectory> {
    if x0 == 0.0 && y0 == 0.0 {
        return Err(Error::OriginUndefined);
    }
    rk4(
        |t, s: &[f64; 2]| {
            let q = bias(t, p);
            [0.5 * (s[0] + q * s[1]), -0.5 * (q * s[0] + s[1])]
        },
        [x0, y0],
        t_end,
        h,
    )
}

/// `phi = 2 atan2(-y, x)` reduced to `[0, 2 pi)`.
pub fn phase_from_xy(x: f64, y: f64) -> Result<f64> {
    if x == 0.0 && y == 0.0 {
        return Err(Error::OriginUndefined);
    }
    let phi = (2.0 * (-y).atan2(x)).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    Ok(if phi >= TAU { 0.0 } else { phi })
}

/// Initial point on the unit circle whose phase is `phi0`.
pub fn xy_from_phase(phi0: f64) -> (f64, f64) {
    let half = 0.5 * phi0;
    (half.cos(), -half.sin())
}

/// Wrapped phases of an `(x, y)` trajectory.
pub fn phase_of_xy(traj: &XyTrajectory) -> Result<PhaseTrajectory> {
    let values = traj
        .values()
        .iter()
        .map(|s| phase_from_xy(s[0], s[1]))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(traj.times().to_vec(), values)
}

/// Continuous phase: each sample is shifted by the multiple of `2 pi` that
/// brings it closest to its predecessor.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<f64> = None;
    for &p in phases {
        let v = match prev {
            None => p,
            Some(q) => p - TAU * ((p - q) / TAU).round(),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Distance between two angles modulo `2 pi`, in `[0, pi]`.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Largest wrapped deviation between two phase series sampled at the same times.
pub fn max_wrapped_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrapped_distance(*x, *y))
        .fold(0.0, f64::max)
}

/// Fourth-order central difference `(f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / 12h`
/// on a uniform grid; the two end points on each side are skipped.
pub fn central_derivative(values: &[f64], h: f64) -> Vec<(usize, f64)> {
    if values.len() < 5 {
        return Vec::new();
    }
    (2..values.len() - 2)
        .map(|i| {
            let d = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2])
                / (12.0 * h);
            (i, d)
        })
        .collect()
}

/// Max of `|phi' + sin(phi) - q(t)|` over a uniformly sampled phase series,
/// with `phi'` from central differences. The series is unwrapped first.
pub fn phase_equation_residual(times: &[f64], phases: &[f64], p: &RsjParams) -> Result<f64> {
    if times.len() != phases.len() || times.len() < 5 {
        return Err(Error::InvalidArgument("need at least 5 equally long samples".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(Error::InvalidArgument("phase residual needs a uniform time grid".into()));
    }
    let phi = unwrap(phases);
    Ok(central_derivative(&phi, h)
        .into_iter()
        .map(|(i, d)| (d + phi[i].sin() - bias(times[i], p)).abs())
        .fold(0.0, f64::max))
}
