use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use heun_rsj::heun_poly::{build_polynomial_with_tol, delta_relative, residual_linear_system};
use heun_rsj::io::{fmt_f64, to_json, trajectory_to_json, write_csv, write_trajectory_csv, ErrorRecord, PolynomialRecord};
use heun_rsj::rsj_dynamics::{
    default_step, integrate_phase, integrate_xy, max_wrapped_deviation, phase_equation_residual, xy_from_phase,
};
use heun_rsj::spectral::{check_factorization, lambda_spectrum, spectral_condition};
use heun_rsj::structure::{
    coeff_relations_residual, epsilon_sign, orthogonality_integral, symmetry_residual, symmetry_sample_points,
    PhaseSolution,
};
use heun_rsj::transforms::residual_eq11;
use heun_rsj::{dche_to_params, Error, HeunPolynomial, RsjParams, Sign, Trajectory};

use crate::{Command, Failure, Format, System};

pub struct Output {
    pub text: String,
    /// False when a reported quantity exceeded its tolerance.
    pub ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, ok: true }
    }
}

type Run = Result<Output, Failure>;

pub fn error_json(name: &str, message: &str) -> String {
    let rec = ErrorRecord { error: name.to_string(), message: message.to_string() };
    to_json(&rec).unwrap_or_default()
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive")))
    }
}

fn unsupported(format: Format, what: &str) -> Failure {
    let name = match format {
        Format::Text => "text",
        Format::Json => "json",
        Format::Csv => "csv",
    };
    usage(format!("format {name} is not available for {what}"))
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write_csv(header, rows, &mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn spectral_poly(n: usize, mu: f64, root: usize, tol: f64) -> Result<HeunPolynomial, Failure> {
    if root > n {
        return Err(usage(format!("root index {root} out of range 0..={n}")));
    }
    let d = lambda_spectrum(n, mu)?.params(root)?;
    Ok(build_polynomial_with_tol(&d, tol)?)
}

pub fn run(cmd: &Command) -> Run {
    match *cmd {
        Command::Spectrum { n, mu, format } => spectrum(n, finite("mu", mu)?, format),
        Command::Poly { n, mu, root, tol_spec, format } => {
            poly(n, finite("mu", mu)?, root, positive("tol-spec", tol_spec)?, format)
        }
        Command::Verify { .. } => verify(cmd),
        Command::Simulate { .. } => simulate(cmd),
        Command::PhaseCompare { n, mu, root, periods, steps_per_period, tol, format } => {
            if steps_per_period == 0 {
                return Err(usage("--steps-per-period must be positive"));
            }
            phase_compare(n, finite("mu", mu)?, root, positive("periods", periods)?, steps_per_period, tol, format)
        }
        Command::Ortho { n1, root1, n2, root2, mu, tol, format } => {
            ortho(n1, root1, n2, root2, finite("mu", mu)?, tol, format)
        }
        Command::Sweep { n_min, n_max, mu_min, mu_max, mu_count } => {
            sweep(n_min, n_max, finite("mu-min", mu_min)?, finite("mu-max", mu_max)?, mu_count)
        }
    }
}

#[derive(Serialize)]
struct RootReport {
    index: usize,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SpectrumReport {
    n: usize,
    mu: f64,
    lambdas: Vec<f64>,
    roots: Vec<RootReport>,
}

fn spectrum(n: usize, mu: f64, format: Format) -> Run {
    let set = lambda_spectrum(n, mu)?;
    let roots: Vec<RootReport> = (0..=n)
        .map(|i| {
            let lambda = set.lambdas[i];
            match set.params(i).and_then(|d| dche_to_params(&d)) {
                Ok(p) => RootReport {
                    index: i,
                    lambda,
                    omega: Some(p.omega()),
                    a: Some(p.a()),
                    b: Some(p.b()),
                    error: None,
                },
                Err(e) => RootReport { index: i, lambda, omega: None, a: None, b: None, error: Some(e.name().into()) },
            }
        })
        .collect();
    let text = match format {
        Format::Json => to_json(&SpectrumReport { n, mu, lambdas: set.lambdas.clone(), roots })?,
        Format::Text => {
            let mut s = format!("n {n}\nmu {}\n", fmt_f64(mu));
            for r in &roots {
                s += &format!("root {} lambda {}", r.index, fmt_f64(r.lambda));
                match (&r.error, r.omega, r.a, r.b) {
                    (None, Some(w), Some(a), Some(b)) => {
                        s += &format!(" omega {} A {} B {}\n", fmt_f64(w), fmt_f64(a), fmt_f64(b))
                    }
                    (err, ..) => s += &format!(" {}\n", err.as_deref().unwrap_or("")),
                }
            }
            s
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = roots
                .iter()
                .map(|r| {
                    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
                    vec![r.index.to_string(), fmt_f64(r.lambda), opt(r.omega), opt(r.a), opt(r.b)]
                })
                .collect();
            csv_text(&["root", "lambda", "omega", "A", "B"], &rows)?
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct PolyReport {
    root: usize,
    #[serde(flatten)]
    poly: PolynomialRecord,
}

fn poly(n: usize, mu: f64, root: usize, tol: f64, format: Format) -> Run {
    let p = spectral_poly(n, mu, root, tol)?;
    let text = match format {
        Format::Json => to_json(&PolyReport { root, poly: PolynomialRecord::from(&p) })?,
        Format::Text => {
            let mut s = format!("n {n}\nmu {}\nlambda {}\nroot {root}\n", fmt_f64(mu), fmt_f64(p.lambda()));
            for (k, a) in p.coeffs().iter().enumerate() {
                s += &format!("a{k} {}\n", fmt_f64(*a));
            }
            s
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                p.coeffs().iter().enumerate().map(|(k, a)| vec![k.to_string(), fmt_f64(*a)]).collect();
            csv_text(&["k", "a"], &rows)?
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check { name, value, tol, pass: value <= tol }
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    mu: f64,
    root: usize,
    lambda: f64,
    epsilon: i8,
    factorization_sign: i8,
    checks: Vec<Check>,
}

fn sign_i8(s: Sign) -> i8 {
    match s {
        Sign::Plus => 1,
        Sign::Minus => -1,
    }
}

fn verify(cmd: &Command) -> Run {
    let Command::Verify {
        n,
        mu,
        root,
        tol_spec,
        tol_heun,
        tol_linear,
        tol_symmetry,
        tol_relations,
        tol_factorization,
        tol_split,
        format,
    } = *cmd
    else {
        unreachable!()
    };
    let mu = finite("mu", mu)?;
    if format == Format::Csv {
        return Err(unsupported(format, "verify"));
    }
    let p = spectral_poly(n, mu, root, positive("tol-spec", tol_spec)?)?;
    let d = *p.params();
    let amax = p.max_abs_coeff();
    let mut points = symmetry_sample_points();
    points.extend([Complex64::new(0.3, 1.7), Complex64::new(-2.5, -0.4), Complex64::new(5.0, 0.0)]);
    let heun = points.iter().map(|&z| residual_eq11(&p, z).relative()).fold(0.0, f64::max);
    let lin = residual_linear_system(&p);
    let rmid = lin.rmid.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    let eps = epsilon_sign(&p)?;
    let relations = coeff_relations_residual(&p)?.iter().fold(0.0, |m: f64, r| m.max(r.abs())) / amax;
    let fact = check_factorization(&d)?;
    let split = spectral_condition(&d)?;
    let checks = vec![
        check("spectral_gate", delta_relative(&d), tol_spec),
        check("heun_equation", heun, tol_heun),
        check("linear_first_row", lin.r0.abs() / amax, tol_linear),
        check("linear_middle_rows", rmid / amax, tol_linear),
        check("linear_last_row", lin.rn.abs() / amax, tol_linear),
        check("symmetry", symmetry_residual(&p)?, tol_symmetry),
        check("coeff_relations", relations, tol_relations),
        check("factorization", fact.relative(), tol_factorization),
        check("split_condition", split.min_relative(), tol_split),
    ];
    let ok = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        n,
        mu,
        root,
        lambda: p.lambda(),
        epsilon: sign_i8(eps),
        factorization_sign: sign_i8(fact.sign),
        checks,
    };
    let text = match format {
        Format::Json => to_json(&report)?,
        _ => {
            let mut s = format!(
                "n {n}\nmu {}\nroot {root}\nlambda {}\nepsilon {}\nfactorization_sign {}\n",
                fmt_f64(mu),
                fmt_f64(report.lambda),
                report.epsilon,
                report.factorization_sign
            );
            for c in &report.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                s += &format!("{} {} <= {} {status}\n", c.name, fmt_f64(c.value), fmt_f64(c.tol));
            }
            s
        }
    };
    Ok(Output { text, ok })
}

fn simulate(cmd: &Command) -> Run {
    let Command::Simulate { a, b, omega, t_end, h, system, phi0, every, format } = *cmd else {
        unreachable!()
    };
    let p = RsjParams::new(a, b, omega).map_err(|e| usage(e.to_string()))?;
    let t_end = positive("t-end", t_end)?;
    let h = match h {
        Some(h) => positive("h", h)?,
        None => default_step(&p),
    };
    let phi0 = finite("phi0", phi0)?;
    if every == 0 {
        return Err(usage("--every must be positive"));
    }
    fn thin<S: heun_rsj::model::Sample>(t: &Trajectory<S>, every: usize) -> heun_rsj::Result<Trajectory<S>> {
        let keep: Vec<usize> = (0..t.len()).filter(|i| i % every == 0 || i + 1 == t.len()).collect();
        Trajectory::new(keep.iter().map(|&i| t.times()[i]).collect(), keep.iter().map(|&i| t.values()[i]).collect())
    }
    fn render<S: heun_rsj::model::Sample>(t: &Trajectory<S>, format: Format) -> Result<String, Failure> {
        match format {
            Format::Json => Ok(trajectory_to_json(t)?),
            _ => {
                let mut buf = Vec::new();
                write_trajectory_csv(t, &mut buf)?;
                Ok(String::from_utf8_lossy(&buf).into_owned())
            }
        }
    }
    let text = match system {
        System::Phase => render(&thin(&integrate_phase(&p, phi0, t_end, h)?, every)?, format)?,
        System::Xy => {
            let (x0, y0) = xy_from_phase(phi0);
            render(&thin(&integrate_xy(&p, x0, y0, t_end, h)?, every)?, format)?
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct PhaseReport {
    n: usize,
    mu: f64,
    root: usize,
    lambda: f64,
    omega: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    epsilon: i8,
    phi0: f64,
    periods: f64,
    samples: usize,
    max_deviation: f64,
    ode_residual: f64,
    max_certificate: f64,
    tol: f64,
    pass: bool,
}

fn phase_compare(n: usize, mu: f64, root: usize, periods: f64, steps: usize, tol: f64, format: Format) -> Run {
    if format == Format::Csv {
        return Err(unsupported(format, "phase-compare"));
    }
    let p = spectral_poly(n, mu, root, heun_rsj::heun_poly::TOL_SPEC)?;
    let sol = PhaseSolution::new(&p)?;
    let phys = dche_to_params(p.params())?;
    let h = phys.period() / steps as f64;
    let count = (periods * steps as f64).round() as usize;
    let times: Vec<f64> = (0..=count).map(|i| i as f64 * h).collect();
    let pts = sol.series(&times)?;
    let phi: Vec<f64> = pts.iter().map(|q| q.phi).collect();
    let rk = integrate_phase(&phys, phi[0], times[count], h)?;
    if rk.len() != phi.len() {
        return Err(Error::InvalidArgument("time grids differ".into()).into());
    }
    let max_deviation = max_wrapped_deviation(rk.values(), &phi);
    let ode_residual = phase_equation_residual(&times, &phi, &phys)?;
    let max_certificate = pts.iter().fold(0.0, |m: f64, q| m.max(q.certificate));
    let pass = max_deviation <= tol && ode_residual <= tol;
    let report = PhaseReport {
        n,
        mu,
        root,
        lambda: p.lambda(),
        omega: phys.omega(),
        a: phys.a(),
        b: phys.b(),
        epsilon: sign_i8(sol.epsilon()),
        phi0: phi[0],
        periods,
        samples: phi.len(),
        max_deviation,
        ode_residual,
        max_certificate,
        tol,
        pass,
    };
    let text = match format {
        Format::Json => to_json(&report)?,
        _ => format!(
            "n {n}\nmu {}\nroot {root}\nlambda {}\nomega {}\nA {}\nB {}\nepsilon {}\nphi0 {}\nsamples {}\nmax_deviation {}\node_residual {}\nmax_certificate {}\nstatus {}\n",
            fmt_f64(mu),
            fmt_f64(report.lambda),
            fmt_f64(report.omega),
            fmt_f64(report.a),
            fmt_f64(report.b),
            report.epsilon,
            fmt_f64(report.phi0),
            report.samples,
            fmt_f64(max_deviation),
            fmt_f64(ode_residual),
            fmt_f64(max_certificate),
            if pass { "PASS" } else { "FAIL" }
        ),
    };
    Ok(Output { text, ok: pass })
}

#[derive(Serialize)]
struct OrthoReport {
    n1: usize,
    root1: usize,
    lambda1: f64,
    n2: usize,
    root2: usize,
    lambda2: f64,
    mu: f64,
    value: f64,
    scale: f64,
    relative: f64,
    tol: f64,
    /// `false` for same-degree pairs, which are measured but not covered by the theorem.
    asserted: bool,
    pass: bool,
}

fn ortho(n1: usize, root1: usize, n2: usize, root2: usize, mu: f64, tol: f64, format: Format) -> Run {
    if format == Format::Csv {
        return Err(unsupported(format, "ortho"));
    }
    let tol_spec = heun_rsj::heun_poly::TOL_SPEC;
    let p1 = spectral_poly(n1, mu, root1, tol_spec)?;
    let p2 = spectral_poly(n2, mu, root2, tol_spec)?;
    let r = orthogonality_integral(&p1, &p2)?;
    let asserted = n1 != n2;
    let pass = !asserted || r.relative() <= tol;
    let report = OrthoReport {
        n1,
        root1,
        lambda1: p1.lambda(),
        n2,
        root2,
        lambda2: p2.lambda(),
        mu,
        value: r.value,
        scale: r.scale,
        relative: r.relative(),
        tol,
        asserted,
        pass,
    };
    let text = match format {
        Format::Json => to_json(&report)?,
        _ => format!(
            "n1 {n1}\nroot1 {root1}\nlambda1 {}\nn2 {n2}\nroot2 {root2}\nlambda2 {}\nmu {}\nvalue {}\nscale {}\nrelative {}\nstatus {}\n",
            fmt_f64(report.lambda1),
            fmt_f64(report.lambda2),
            fmt_f64(mu),
            fmt_f64(r.value),
            fmt_f64(r.scale),
            fmt_f64(report.relative),
            match (asserted, pass) {
                (false, _) => "REPORTED",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            }
        ),
    };
    Ok(Output { text, ok: pass })
}

fn thread_limit() -> Result<Option<usize>, Failure> {
    match std::env::var("HEUN_RSJ_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(usage(format!("HEUN_RSJ_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn sweep(n_min: usize, n_max: usize, mu_min: f64, mu_max: f64, mu_count: usize) -> Run {
    if n_min > n_max {
        return Err(usage("--n-min must not exceed --n-max"));
    }
    if mu_count == 0 || mu_min > mu_max {
        return Err(usage("need --mu-count >= 1 and --mu-min <= --mu-max"));
    }
    let mus: Vec<f64> = (0..mu_count)
        .map(|i| if mu_count == 1 { mu_min } else { mu_min + (mu_max - mu_min) * i as f64 / (mu_count - 1) as f64 })
        .collect();
    let grid: Vec<(usize, f64)> = (n_min..=n_max).flat_map(|n| mus.iter().map(move |&m| (n, m))).collect();
    let work = || -> heun_rsj::Result<Vec<(usize, f64, Vec<String>)>> {
        let chunks: Vec<Vec<(usize, f64, Vec<String>)>> = grid
            .par_iter()
            .map(|&(n, mu)| {
                let set = lambda_spectrum(n, mu)?;
                Ok((0..=n)
                    .map(|i| {
                        let phys = set.params(i).and_then(|d| dche_to_params(&d)).ok();
                        let opt = |f: fn(&RsjParams) -> f64| phys.as_ref().map(|p| fmt_f64(f(p))).unwrap_or_default();
                        let row = vec![
                            n.to_string(),
                            fmt_f64(mu),
                            fmt_f64(set.lambdas[i]),
                            opt(RsjParams::omega),
                            opt(RsjParams::a),
                            opt(RsjParams::b),
                        ];
                        (n, mu, row)
                    })
                    .collect())
            })
            .collect::<heun_rsj::Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    };
    let mut rows = match thread_limit()? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| usage(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.2).collect();
    Ok(Output::ok(csv_text(&["n", "mu", "lambda", "omega", "A", "B"], &rows)?))
}
