//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::cell::Cell;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use qdinf::bounds::{lambert_w0, thm1_coefficient, thm2_closed, thm2_dmin, thm2_intermediates};
use qdinf::gaussian::{certify_set, exp_moment, GaussianState};
use qdinf::optimizer::{
    fig2_default_grid, fig2_sweep, fig3_default_grid, fig3_sweep, log_grid, minimize_thm1, power_law_fit,
    thm2_integer_min,
};
use qdinf::verify::{run_suite, Tolerances};
use qdinf::FragmentCount;

const DELTA: f64 = 0.01;
const SLACK: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() <= limit_s
}

fn seed() -> u64 {
    std::env::var("QDINF_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(1)
}

/// Ordinary least squares of `ln y` on `ln N`, returning `(β, α, rms)` for
/// `y = (β/δ) N^{-1/α}`.
fn loglog_fit(points: &[(FragmentCount, f64)]) -> (f64, f64, f64) {
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / k).sqrt();
    (icpt.exp() * DELTA, -1.0 / slope, rms)
}

fn c1_coefficient() -> Verdict {
    let oracle = 17.0 * (2.0f64 / 7.0).powf(14.0 / 17.0);
    let c = thm1_coefficient();
    verdict(
        (6.05..=6.07).contains(&c) && (c - oracle).abs() < 1e-12,
        format!("coefficient {c:.6} (oracle {oracle:.6})"),
    )
}

fn c2_fig2() -> Verdict {
    let t = Instant::now();
    let rows = match fig2_sweep(1.0, DELTA, &fig2_default_grid()) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let elapsed = t.elapsed();
    let last = rows.last().expect("non-empty grid");
    let points: Vec<_> = rows.iter().map(|r| (r.n, r.bound_numeric)).collect();
    let fit = power_law_fit(&points, DELTA).expect("fit");
    let (beta, alpha, rms) = loglog_fit(&points);
    let agree = (fit.alpha / alpha - 1.0).abs() < 1e-9
        && (fit.beta / beta - 1.0).abs() < 1e-9
        && (fit.residual - rms).abs() < 1e-9;
    verdict(
        (0.03..=0.3).contains(&last.bound_numeric)
            && (14.5..=16.0).contains(&fit.alpha)
            && (5.0..=9.0).contains(&fit.beta)
            && fit.residual <= 0.05
            && agree
            && within(elapsed, 10.0),
        format!(
            "bound(1e60) = {:.4}, alpha = {:.3}, beta = {:.3}, rms = {:.4}, fit oracle agrees = {agree}, {:.2}s",
            last.bound_numeric,
            fit.alpha,
            fit.beta,
            fit.residual,
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_fig3() -> Verdict {
    let t = Instant::now();
    let rows = match fig3_sweep(1.0, DELTA, &fig3_default_grid()) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let elapsed = t.elapsed();
    let last = rows.last().expect("non-empty grid");
    let points: Vec<_> = rows.iter().map(|r| (r.n, r.bound_numeric)).collect();
    let fit = power_law_fit(&points, DELTA).expect("fit");
    verdict(
        last.bound_numeric <= 5e-4 && (3.0..=3.5).contains(&fit.alpha) && within(elapsed, 60.0),
        format!(
            "bound(1e29) = {:.3e} (omega = {:.4}, Omega = {:.4}, d = {}), alpha = {:.3}, {:.2}s",
            last.bound_numeric,
            last.omega,
            last.cap,
            last.d,
            fit.alpha,
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_relaxation() -> Verdict {
    let config = || Config { cases: 256, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new(config());
    let thm1 = runner.run(&(12.0f64..=60.0, 0.05f64..5.0), |(e, nbar)| {
        let n = FragmentCount::from_log10(e).unwrap();
        let numeric = minimize_thm1(nbar, n).unwrap().zeta;
        let analytic = qdinf::bounds::thm1_analytic(nbar, n).unwrap().value;
        prop_assert!(numeric <= analytic * (1.0 + SLACK), "N = 1e{e}, nbar = {nbar}: {numeric} > {analytic}");
        Ok(())
    });
    let grid_ok = log_grid(12.0, 60.0, 49).unwrap().into_iter().all(|n| {
        minimize_thm1(1.0, n).unwrap().zeta <= qdinf::bounds::thm1_analytic(1.0, n).unwrap().value * (1.0 + SLACK)
    });
    let mut runner = TestRunner::new(config());
    let checked = Cell::new(0usize);
    let thm2 = runner.run(&(0.05f64..1.5, 1.05f64..10.0, 2.0f64..60.0), |(w, cap, e)| {
        let n = FragmentCount::from_log10(e).unwrap();
        let k = thm2_intermediates(w, cap).unwrap();
        prop_assume!(k.gamma2.ln() + n.ln() > 0.0);
        let closed = thm2_closed(w, cap, n).unwrap();
        let (_, numeric) = thm2_integer_min(w, cap, n).unwrap();
        prop_assert!(numeric <= closed * (1.0 + SLACK), "omega {w}, Omega {cap}, N 1e{e}: {numeric} > {closed}");
        checked.set(checked.get() + 1);
        Ok(())
    });
    let detail = match (&thm1, &thm2) {
        (Ok(()), Ok(())) => format!("thm1 on 49-point grid and 256 random cases, thm2 on {} cases with gamma2 N > 1", checked.get()),
        (Err(e), _) => format!("thm1: {e}"),
        (_, Err(e)) => format!("thm2: {e}"),
    };
    verdict(thm1.is_ok() && thm2.is_ok() && grid_ok, detail)
}

fn series(first: f64, ratio: impl Fn(usize) -> f64, bound: f64) -> f64 {
    let (mut term, mut sum, mut n) = (first, 0.0, 0usize);
    loop {
        sum += term;
        if term * bound / (1.0 - bound) < 1e-15 * sum {
            return sum;
        }
        term *= ratio(n);
        n += 1;
    }
}

fn c5_gaussian_oracles() -> Verdict {
    let t = Instant::now();
    let omegas = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut worst = 0.0f64;
    for &w in &omegas {
        for (k, &a) in [0.1, 0.5, 1.0, 1.5, 2.0].iter().enumerate() {
            let x = a * a * f64::exp(w);
            // Poisson terms; the ratio x/(n+1) stays below 1/2 once n ≥ 2x
            let oracle = {
                let (mut term, mut sum) = ((-a * a).exp(), 0.0);
                for n in 0.. {
                    sum += term;
                    let r = x / (n + 1) as f64;
                    if r < 0.5 && term * r / (1.0 - r) < 1e-15 * sum {
                        break;
                    }
                    term *= r;
                }
                sum
            };
            let g = GaussianState::coherent(Complex64::from_polar(a, 0.9 * k as f64));
            worst = worst.max((exp_moment(&g, w).unwrap().moment.unwrap() / oracle - 1.0).abs());
        }
        for &m in &[0.05, 0.1, 0.2, 0.5, 1.0] {
            let q = m / (m + 1.0);
            let oracle = series(1.0 - q, |_| q * f64::exp(w), q * f64::exp(w));
            let g = GaussianState::thermal(m).unwrap();
            worst = worst.max((exp_moment(&g, w).unwrap().moment.unwrap() / oracle - 1.0).abs());
        }
        for &r in &[0.05, 0.1, 0.2, 0.3, 0.4] {
            let t2 = f64::tanh(r).powi(2) * (2.0 * w).exp();
            let oracle = series(1.0 / f64::cosh(r), |n| (2 * n + 1) as f64 / (2 * n + 2) as f64 * t2, t2);
            let g = GaussianState::squeezed_vacuum(r).unwrap();
            worst = worst.max((exp_moment(&g, w).unwrap().moment.unwrap() / oracle - 1.0).abs());
        }
    }
    let vacuum = omegas.iter().all(|&w| exp_moment(&GaussianState::vacuum(), w).unwrap().moment == Some(1.0));
    let elapsed = t.elapsed();
    verdict(
        worst <= 1e-8 && vacuum && within(elapsed, 5.0),
        format!("worst relative error {worst:.2e} over 75 points, vacuum exact = {vacuum}, {:.3}s", elapsed.as_secs_f64()),
    )
}

fn c6_certificate() -> Verdict {
    let t = Instant::now();
    let r = certify_set(1.0, 0.5, 4.0, 10_000, seed()).expect("certify");
    let elapsed = t.elapsed();
    verdict(
        r.violations == 0 && r.passed && r.samples == 10_000 && within(elapsed, 10.0),
        format!(
            "omega = {:.6}, {} samples, {} violations, max moment {:.4}, {:.2}s",
            r.omega,
            r.samples,
            r.violations,
            r.max_moment.unwrap_or(f64::INFINITY),
            elapsed.as_secs_f64()
        ),
    )
}

fn c7_lemma_suites() -> Verdict {
    let t = Instant::now();
    let reports = run_suite("all", 200, seed(), Tolerances::default()).expect("suites");
    let elapsed = t.elapsed();
    let mut lines = Vec::new();
    let mut pass = reports.len() == 8 && within(elapsed, 300.0);
    for r in &reports {
        let ok = r.passed && r.worst_slack >= -1e-9 && r.worst_residual <= 1e-10 && r.violations == 0;
        pass &= ok;
        lines.push(format!(
            "{}[{}/{} slack {:.1e} res {:.1e}]",
            r.lemma,
            r.trials - r.skipped,
            r.trials,
            r.worst_slack,
            r.worst_residual
        ));
    }
    verdict(pass, format!("{} | {:.1}s", lines.join(" "), elapsed.as_secs_f64()))
}

fn c8_lambert() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..=360 {
        let x = 10f64.powf(-6.0 + 36.0 * i as f64 / 360.0);
        let w = lambert_w0(x).unwrap();
        worst = worst.max((w * w.exp() - x).abs() / x.max(1.0));
    }
    let mut worst_stat = 0.0f64;
    for &(omega, cap) in &[(0.3, 2.3), (0.5, 3.0), (1.0, 2.0), (1.5, 10.0)] {
        for e in [10.0, 20.0, 29.0, 45.0, 60.0] {
            let n = FragmentCount::pow10(e as i32);
            let d = thm2_dmin(omega, cap, n).unwrap().lambert;
            let nt = 1.0 / f64::exp_m1(omega);
            let s = (nt + 1.0) * (nt + 1.0).ln() - nt * nt.ln();
            let dt = cap / (1.0 - (-omega).exp());
            // d/dd of (27 dt² d⁴ s/N)^{1/3} + 4 dt e^{-ωd/2}
            let ln_grow = (4.0f64 / 3.0).ln() + (27.0 * dt * dt * s).ln() / 3.0 - e * std::f64::consts::LN_10 / 3.0 + d.ln() / 3.0;
            let ln_decay = (2.0 * omega * dt).ln() - 0.5 * omega * d;
            worst_stat = worst_stat.max(((ln_decay - ln_grow).exp() - 1.0).abs());
        }
    }
    verdict(
        worst <= 1e-12 && worst_stat <= 1e-8,
        format!("max |We^W - x|/max(1,x) = {worst:.2e}, d_min stationarity residual {worst_stat:.2e}"),
    )
}

fn qdinf(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qdinf"))
        .args(args)
        .env("QDINF_SEED", seed().to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}", out.status));
    }
    Ok(out.stdout)
}

fn c9_determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("qdinf-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let cfg = dir.join("fig3.cfg");
    let cfg_s = cfg.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["bound", "--thm", "1", "--nbar", "1", "--N", "1e60"],
        vec!["bound", "--thm", "2", "--nbar", "1", "--N", "1e29", "--format", "csv"],
        vec!["figure", "fig2"],
        vec!["figure", "fig3", "--save-config", cfg_s],
        vec!["figure", "fig2", "--format", "json"],
        vec!["gaussian", "--nbar", "1", "--eps", "0.5", "--Omega", "4", "--certify", "--samples", "10000"],
        vec!["verify", "--suite", "all", "--trials", "20"],
    ];
    let mut failures = Vec::new();
    let mut fig3 = Vec::new();
    for args in &runs {
        match (qdinf(args), qdinf(args)) {
            (Ok(a), Ok(b)) if a == b => {
                if args[..2] == ["figure", "fig3"] {
                    fig3 = a;
                }
            }
            (Ok(_), Ok(_)) => failures.push(format!("{} {} differs", args[0], args[1])),
            (Err(e), _) | (_, Err(e)) => failures.push(e),
        }
    }
    match qdinf(&["run", cfg_s]) {
        Ok(out) if out == fig3 => {}
        Ok(_) => failures.push("config replay differs".into()),
        Err(e) => failures.push(e),
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} commands byte-identical across runs and config replay", runs.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("coefficient", c1_coefficient),
        ("fig2 reproduction", c2_fig2),
        ("fig3 reproduction", c3_fig3),
        ("relaxation dominance", c4_relaxation),
        ("gaussian moment oracles", c5_gaussian_oracles),
        ("gaussian certificate", c6_certificate),
        ("lemma suites", c7_lemma_suites),
        ("lambert w", c8_lambert),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
