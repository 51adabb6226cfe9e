//! One function per subcommand, each returning the rendered output.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use qdinf::bounds::{thm2_closed, thm2_zeta, Thm1Query};
use qdinf::gaussian::{certify_at, cutoff_params, exp_moment_capped, exp_moment, mean_photon, CertifyReport, CutoffReport, GaussianState};
use qdinf::optimizer::{
    fig2_default_grid, fig2_sweep, fig3_default_grid, fig3_sweep, minimize_thm1, minimize_thm2,
    power_law_fit, thm2_integer_min, ParameterRoute,
};
use qdinf::verify::{run_suite, LemmaReport};
use qdinf::FragmentCount;

use crate::config::{Command, FigureId, OutputFormat, RunConfig};
use crate::{CliError, Outcome};

fn ok(body: String) -> Outcome {
    Outcome { body, counterexample: false }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serialises") + "\n"
}

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Integral `f64` as a plain integer while exact, scientific beyond 2^53.
fn int_cell(x: f64) -> String {
    if x.abs() < 9.007_199_254_740_992e15 {
        format!("{}", x as i64)
    } else {
        sci(x)
    }
}

fn count_cell(n: FragmentCount) -> String {
    format!("{:.11}e{}", n.mantissa(), n.exponent())
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Bound => cmd_bound(cfg),
        Command::Figure => cmd_figure(cfg),
        Command::Gaussian => cmd_gaussian(cfg),
        Command::Verify => cmd_verify(cfg),
    }
}

#[derive(Debug, Serialize)]
struct Thm1Report {
    theorem: u8,
    #[serde(rename = "N")]
    n: String,
    nbar: f64,
    delta: f64,
    analytic: f64,
    /// Absent when the optimal `d` is beyond the integer search range.
    numeric: Option<f64>,
    d: Option<u64>,
    m: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Thm2Report {
    theorem: u8,
    #[serde(rename = "N")]
    n: String,
    nbar: Option<f64>,
    delta: f64,
    route: &'static str,
    epsilon: Option<f64>,
    omega: f64,
    #[serde(rename = "Omega")]
    cap: f64,
    closed: Option<f64>,
    numeric: f64,
    d: u64,
}

pub fn cmd_bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.n.ok_or_else(|| CliError::Usage("bound needs --N".into()))?;
    let delta = cfg.delta;
    let csv = cfg.format() == OutputFormat::Csv;
    if cfg.theorem == Some(1) {
        let nbar = cfg.nbar.ok_or_else(|| CliError::Usage("theorem 1 needs --nbar".into()))?;
        let query = |d, m| Thm1Query { nbar, n, delta, d, m };
        let analytic = query(None, None).evaluate()?.value;
        let (numeric, d, m) = match cfg.d {
            Some(d) => (Some(query(Some(d), cfg.m).evaluate()?.value), Some(d), cfg.m.map(|m| m as f64)),
            None => match minimize_thm1(nbar, n) {
                Ok(opt) => (Some(opt.zeta / delta), Some(opt.d), Some(opt.m)),
                Err(qdinf::Error::Domain(_)) => (None, None, None),
                Err(e) => return Err(e.into()),
            },
        };
        let r = Thm1Report { theorem: 1, n: n.to_string(), nbar, delta, analytic, numeric, d, m };
        return Ok(ok(if csv {
            format!(
                "theorem,N,nbar,delta,analytic,numeric,d,m\n1,{},{},{},{},{},{},{}\n",
                count_cell(n),
                sci(nbar),
                sci(delta),
                sci(analytic),
                sci_opt(numeric),
                d.map(|d| d.to_string()).unwrap_or_default(),
                m.map(int_cell).unwrap_or_default()
            )
        } else {
            to_json(&r)
        }));
    }

    let (route, epsilon, omega, cap, d, zeta) = if let Some(omega) = cfg.omega.filter(|_| cfg.epsilon.is_none()) {
        let cap = cfg.cap.ok_or_else(|| CliError::Usage("--omega needs --Omega".into()))?;
        let (d, zeta) = match cfg.d {
            Some(d) => (d, thm2_zeta(d, omega, cap, n)?),
            None => thm2_integer_min(omega, cap, n)?,
        };
        ("given", None, omega, cap, d, zeta)
    } else {
        let nbar = cfg.nbar.ok_or_else(|| CliError::Usage("theorem 2 needs --nbar".into()))?;
        match (cfg.epsilon, cfg.cap) {
            (Some(eps), Some(cap)) => {
                let omega = cutoff_params(nbar, eps, cap)?;
                let (d, zeta) = thm2_integer_min(omega, cap, n)?;
                ("sufficient_condition", Some(eps), omega, cap, d, zeta)
            }
            (Some(_), None) => return Err(CliError::Usage("--eps needs --Omega".into())),
            _ => {
                let opt = minimize_thm2(nbar, n)?;
                let route = match opt.route {
                    ParameterRoute::SufficientCondition { .. } => "sufficient_condition",
                    ParameterRoute::ExactEnvelope => "exact_envelope",
                };
                (route, opt.epsilon(), opt.omega, opt.cap, opt.d, opt.zeta)
            }
        }
    };
    let closed = thm2_closed(omega, cap, n).ok().map(|v| v / delta);
    let r = Thm2Report {
        theorem: 2,
        n: n.to_string(),
        nbar: cfg.nbar,
        delta,
        route,
        epsilon,
        omega,
        cap,
        closed,
        numeric: zeta / delta,
        d,
    };
    Ok(ok(if csv {
        format!(
            "theorem,N,delta,route,epsilon,omega,Omega,closed,numeric,d\n2,{},{},{},{},{},{},{},{},{}\n",
            count_cell(n),
            sci(delta),
            route,
            sci_opt(epsilon),
            sci(omega),
            sci(cap),
            sci_opt(closed),
            sci(r.numeric),
            d
        )
    } else {
        to_json(&r)
    }))
}

pub fn cmd_figure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let id = cfg.figure.ok_or_else(|| CliError::Usage("figure needs fig2 or fig3".into()))?;
    let nbar = cfg.nbar.unwrap_or(1.0);
    let delta = cfg.delta;
    let grid = match (cfg.grid, id) {
        (Some(g), _) => g.counts()?,
        (None, FigureId::Fig2) => fig2_default_grid(),
        (None, FigureId::Fig3) => fig3_default_grid(),
    };
    let (header, lines, points, rows_json) = match id {
        FigureId::Fig2 => {
            let rows = fig2_sweep(nbar, delta, &grid)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{}",
                        count_cell(r.n),
                        sci(r.bound_analytic),
                        sci(r.bound_numeric),
                        r.d,
                        int_cell(r.m)
                    )
                })
                .collect();
            let points: Vec<_> = rows.iter().map(|r| (r.n, r.bound_numeric)).collect();
            let js: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({"N": r.n.to_string(), "bound_analytic": r.bound_analytic,
                           "bound_numeric": r.bound_numeric, "d": r.d, "m": r.m})
                })
                .collect();
            ("N,bound_analytic,bound_numeric,d,m", lines, points, js)
        }
        FigureId::Fig3 => {
            let rows = fig3_sweep(nbar, delta, &grid)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        count_cell(r.n),
                        sci_opt(r.bound_closed),
                        sci(r.bound_numeric),
                        r.d,
                        sci_opt(r.epsilon),
                        sci(r.omega),
                        sci(r.cap)
                    )
                })
                .collect();
            let points: Vec<_> = rows.iter().map(|r| (r.n, r.bound_numeric)).collect();
            let js: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({"N": r.n.to_string(), "bound_closed": r.bound_closed,
                           "bound_numeric": r.bound_numeric, "d": r.d, "epsilon": r.epsilon,
                           "omega": r.omega, "Omega": r.cap})
                })
                .collect();
            ("N,bound_closed,bound_numeric,d,epsilon,omega,Omega", lines, points, js)
        }
    };
    let fit = power_law_fit(&points, delta)?;
    let fit_json = json!({"alpha": fit.alpha, "beta": fit.beta, "rms_residual": fit.residual, "points": points.len()});
    let name = if id == FigureId::Fig2 { "fig2" } else { "fig3" };
    let body = match cfg.format() {
        OutputFormat::Csv => {
            let mut s = String::from(header);
            s.push('\n');
            for l in lines {
                s.push_str(&l);
                s.push('\n');
            }
            s.push_str(&format!("# fit: {fit_json}\n"));
            s
        }
        OutputFormat::Json => to_json(&json!({
            "figure": name, "nbar": nbar, "delta": delta, "rows": rows_json, "fit": fit_json
        })),
    };
    Ok(ok(body))
}

#[derive(Debug, Serialize)]
struct CutoffSummary {
    nbar: f64,
    epsilon: f64,
    #[serde(rename = "Omega")]
    cap: f64,
    omega: Option<f64>,
    feasible: bool,
}

#[derive(Debug, Serialize)]
struct GaussianReport {
    state: GaussianState,
    mean_photon: f64,
    cutoff: Option<CutoffSummary>,
    moment: Option<CutoffReport>,
    certify: Option<CertifyReport>,
}

pub fn cmd_gaussian(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.format() == OutputFormat::Csv {
        return Err(CliError::Usage("gaussian reports are JSON only".into()));
    }
    let state = GaussianState::new(Complex64::new(cfg.alpha_re, cfg.alpha_im), cfg.thermal, cfg.squeeze)?;
    let cutoff = match cfg.epsilon {
        Some(epsilon) => {
            let nbar = cfg.nbar.ok_or_else(|| CliError::Usage("--eps needs --nbar".into()))?;
            let cap = cfg.cap.ok_or_else(|| CliError::Usage("--eps needs --Omega".into()))?;
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(CliError::Usage(format!("epsilon must lie in (0, 1), got {epsilon}")));
            }
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(CliError::Usage(format!("Omega must be positive and finite, got {cap}")));
            }
            let omega = if cap * (1.0 - epsilon) > 1.0 { Some(cutoff_params(nbar, epsilon, cap)?) } else { None };
            Some(CutoffSummary { nbar, epsilon, cap, omega, feasible: omega.is_some() })
        }
        None => None,
    };
    let omega = cfg.omega.or(cutoff.as_ref().and_then(|c| c.omega));
    let moment = match (omega, cfg.cap) {
        (Some(w), Some(cap)) => Some(exp_moment_capped(&state, w, cap)?),
        (Some(w), None) => Some(exp_moment(&state, w)?),
        _ => None,
    };
    let certify = match &cutoff {
        Some(c) if cfg.certify => match c.omega {
            Some(w) => Some(certify_at(c.nbar, w, c.cap, cfg.samples, cfg.seed)?),
            None => None,
        },
        _ => None,
    };
    let counterexample = certify.as_ref().is_some_and(|r| !r.passed);
    let report = GaussianReport { mean_photon: mean_photon(&state), state, cutoff, moment, certify };
    Ok(Outcome { body: to_json(&report), counterexample })
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    suite: String,
    trials: usize,
    seed: u64,
    passed: bool,
    reports: Vec<LemmaReport>,
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.format() == OutputFormat::Csv {
        return Err(CliError::Usage("verify reports are JSON only".into()));
    }
    let suite = cfg.suite.clone().unwrap_or_else(|| "all".into());
    let reports = run_suite(&suite, cfg.trials, cfg.seed, cfg.tolerances)?;
    let passed = reports.iter().all(|r| r.passed);
    let report = VerifyReport { suite, trials: cfg.trials, seed: cfg.seed, passed, reports };
    Ok(Outcome { body: to_json(&report), counterexample: !passed })
}
