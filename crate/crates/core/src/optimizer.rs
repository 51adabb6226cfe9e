//! Numeric minimisation of the bound expressions and power-law fits of
//! bound-versus-N curves.
//!
//! Everything here is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    self, thm1_analytic, thm1_f, thm1_m_opt, thm1_zeta, thm2_closed, thm2_dmin, thm2_intermediates,
    Thm2Intermediates,
};
use crate::count::FragmentCount;
use crate::error::{Error, Result};
use crate::gaussian::{cutoff_params, max_finite_omega, moment_envelope};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimiser of a unimodal `f` on `[a, b]` to within `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval(a, b));
    }
    let tol = tol.max(f64::EPSILON * (a.abs() + b.abs()));
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    Ok(if fc < fm && fc <= fd {
        c
    } else if fd < fm {
        d
    } else {
        mid
    })
}

/// Exact argmin over the candidates; the first is kept on ties.
pub fn integer_argmin(f: impl Fn(u64) -> f64, candidates: impl IntoIterator<Item = u64>) -> Result<u64> {
    let mut best: Option<(u64, f64)> = None;
    for c in candidates {
        let v = f(c);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c).ok_or_else(|| Error::InvalidData("no candidates".into()))
}

/// Walks from `start` to a local minimum of `f` over integers `≥ lo`.
fn integer_descent(f: &impl Fn(u64) -> f64, start: u64, lo: u64) -> (u64, f64) {
    let mut x = start.max(lo);
    let mut fx = f(x);
    loop {
        let mut moved = false;
        let mut step = 1u64 << (63 - (x / 2).max(1).leading_zeros());
        while step >= 1 {
            let up = x.saturating_add(step);
            let fu = f(up);
            if fu < fx {
                x = up;
                fx = fu;
                moved = true;
                break;
            }
            if x >= lo + step {
                let down = x - step;
                let fdn = f(down);
                if fdn < fx {
                    x = down;
                    fx = fdn;
                    moved = true;
                    break;
                }
            }
            step /= 2;
        }
        if !moved {
            return (x, fx);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm1Optimum {
    pub d: u64,
    /// Integer measurement size, stored as an integral `f64`.
    pub m: f64,
    /// Smaller of the real-`m` objective and ζ at the integer `(d, m)`.
    pub zeta: f64,
    /// ζ at the reported integer `(d, m)`.
    pub zeta_integer: f64,
}

fn m_upper(n: FragmentCount) -> f64 {
    n.to_f64().floor().max(1.0)
}

/// `min_{1 ≤ m ≤ N} ζ(d, m)` over real `m`.
fn thm1_real_m(d: u64, nbar: f64, n: FragmentCount) -> f64 {
    let m = thm1_m_opt(d, n).unwrap_or(1.0);
    if m >= 1.0 && m <= m_upper(n) {
        thm1_f(d, nbar, n).unwrap_or(f64::INFINITY)
    } else {
        thm1_zeta(d, m.clamp(1.0, m_upper(n)), nbar, n).unwrap_or(f64::INFINITY)
    }
}

const MAX_D: f64 = 1e18;

/// Minimises the Theorem 1 ζ over integer `d ≥ 2` and `1 ≤ m ≤ N`.
/// Fails with [`Error::Domain`] once the optimal `d` would exceed `1e18`.
pub fn minimize_thm1(nbar: f64, n: FragmentCount) -> Result<Thm1Optimum> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be non-negative, got {nbar}")));
    }
    if n.ln() < 0.0 {
        return Err(Error::InvalidParameter(format!("N must be at least 1, got {n}")));
    }
    let h = |d: u64| thm1_real_m(d, nbar, n);

    // coarse geometric scan, stopped once the measurement term alone exceeds the best
    let mut best = (2u64, h(2));
    let mut dd = 2.0f64;
    loop {
        if dd > MAX_D {
            return Err(Error::Domain(format!("optimal d for N = {n} exceeds {MAX_D:e}")));
        }
        dd *= 1.15;
        let d = dd.round() as u64;
        let v = h(d);
        if v < best.1 {
            best = (d, v);
        }
        let cube = ((27f64.ln() + 6.0 * dd.ln() + dd.ln().ln() - n.ln()) / 3.0).exp();
        if cube > best.1 {
            break;
        }
    }
    let (d_real, h_best) = integer_descent(&h, best.0, 2);

    let upper = m_upper(n);
    let m_real = thm1_m_opt(d_real, n)?.clamp(1.0, upper);
    let zeta = |d: u64, m: f64| thm1_zeta(d, m, nbar, n).unwrap_or(f64::INFINITY);
    let mut d = d_real;
    let mut m = m_real.floor().max(1.0);
    for k in -2i32..=3 {
        let cand = (m_real.floor() + k as f64).clamp(1.0, upper);
        if zeta(d, cand) < zeta(d, m) {
            m = cand;
        }
    }
    // integer neighbourhood descent so the reported point is locally optimal
    loop {
        let current = zeta(d, m);
        let mut next = None;
        let mut best_v = current;
        for dd in [-1i64, 0, 1] {
            for dm in [-1.0, 0.0, 1.0] {
                let nd = d as i64 + dd;
                let nm = m + dm;
                if nd < 2 || nm < 1.0 || nm > upper {
                    continue;
                }
                let v = zeta(nd as u64, nm);
                if v < best_v {
                    best_v = v;
                    next = Some((nd as u64, nm));
                }
            }
        }
        match next {
            Some((nd, nm)) => {
                d = nd;
                m = nm;
            }
            None => break,
        }
    }
    let zi = zeta(d, m);
    Ok(Thm1Optimum { d, m, zeta: h_best.min(zi), zeta_integer: zi })
}

/// True when every integer neighbour within ±1 of `(d, m)` has
/// ζ ≥ ζ(d, m) − `slack`.
pub fn thm1_neighbour_certificate(opt: &Thm1Optimum, nbar: f64, n: FragmentCount, slack: f64) -> bool {
    let upper = m_upper(n);
    let at = thm1_zeta(opt.d, opt.m, nbar, n).unwrap_or(f64::INFINITY);
    for dd in [-1i64, 0, 1] {
        for dm in [-1.0, 0.0, 1.0] {
            let nd = opt.d as i64 + dd;
            let nm = opt.m + dm;
            if nd < 2 || nm < 1.0 || nm > upper {
                continue;
            }
            if thm1_zeta(nd as u64, nm, nbar, n).unwrap_or(f64::INFINITY) < at - slack {
                return false;
            }
        }
    }
    true
}

/// How the cut-off parameters `(ω, Ω)` were justified for the Gaussian set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterRoute {
    /// `ω` from [`cutoff_params`] at the given `ε`, with `Ω` above `1/(1−ε)`.
    SufficientCondition { epsilon: f64 },
    /// `Ω` is the exact supremum of the moment over the Gaussian set.
    ExactEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Optimum {
    pub route: ParameterRoute,
    pub omega: f64,
    pub cap: f64,
    pub d: u64,
    pub zeta: f64,
}

impl Thm2Optimum {
    pub fn epsilon(&self) -> Option<f64> {
        match self.route {
            ParameterRoute::SufficientCondition { epsilon } => Some(epsilon),
            ParameterRoute::ExactEnvelope => None,
        }
    }
}

/// Integer-`d` minimum of the Theorem 2 ζ, seeded at the stationary point.
pub fn thm2_integer_min(omega: f64, cap: f64, n: FragmentCount) -> Result<(u64, f64)> {
    let k = thm2_intermediates(omega, cap)?;
    let dm = thm2_dmin(omega, cap, n)?;
    Ok(thm2_integer_min_with(&k, dm.lambert, omega, n))
}

fn thm2_integer_min_with(k: &Thm2Intermediates, seed: f64, omega: f64, n: FragmentCount) -> (u64, f64) {
    let g = |d: u64| bounds::thm2_zeta_with(k, d as f64, omega, n);
    let start = seed.round().clamp(1.0, 1e15) as u64;
    integer_descent(&g, start, 1)
}

fn thm2_value(omega: f64, cap: f64, n: FragmentCount) -> Option<(u64, f64)> {
    thm2_integer_min(omega, cap, n).ok()
}

const EPS_GRID: usize = 25;
const CAP_FACTORS: [f64; 6] = [1.01, 1.1, 1.5, 2.0, 4.0, 10.0];

fn sufficient_route(nbar: f64, n: FragmentCount) -> Option<Thm2Optimum> {
    let eval = |eps: f64, factor: f64| -> Option<Thm2Optimum> {
        let cap = factor / (1.0 - eps);
        let omega = cutoff_params(nbar, eps, cap).ok()?;
        if !(omega > 0.0) {
            return None;
        }
        let (d, zeta) = thm2_value(omega, cap, n)?;
        Some(Thm2Optimum { route: ParameterRoute::SufficientCondition { epsilon: eps }, omega, cap, d, zeta })
    };
    let better = |a: Option<Thm2Optimum>, b: Option<Thm2Optimum>| match (a, b) {
        (Some(x), Some(y)) => Some(if y.zeta < x.zeta { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    };
    let mut best: Option<(Thm2Optimum, f64)> = None;
    let step = 0.96 / (EPS_GRID - 1) as f64;
    for i in 0..EPS_GRID {
        let eps = 0.02 + step * i as f64;
        for &factor in &CAP_FACTORS {
            if let Some(o) = eval(eps, factor) {
                if best.is_none_or(|(b, _)| o.zeta < b.zeta) {
                    best = Some((o, factor));
                }
            }
        }
    }
    let (found, factor) = best?;
    let eps0 = found.epsilon()?;
    let (lo, hi) = ((eps0 - step).max(1e-6), (eps0 + step).min(1.0 - 1e-6));
    let objective = |e: f64| eval(e, factor).map_or(f64::INFINITY, |o| o.zeta);
    let refined = golden_section(objective, lo, hi, 1e-9).ok().and_then(|e| eval(e, factor));
    better(Some(found), refined)
}

fn envelope_route(nbar: f64, n: FragmentCount) -> Option<Thm2Optimum> {
    let eval = |omega: f64| -> Option<Thm2Optimum> {
        let env = moment_envelope(nbar, omega).ok()?;
        let cap = env.moment? * (1.0 + 1e-9);
        if !(cap > 1.0) {
            return None;
        }
        let (d, zeta) = thm2_value(omega, cap, n)?;
        Some(Thm2Optimum { route: ParameterRoute::ExactEnvelope, omega, cap, d, zeta })
    };
    let w_hi = if nbar > 0.0 { max_finite_omega(nbar) * (1.0 - 1e-9) } else { 20.0 };
    const STEPS: usize = 40;
    let mut best: Option<(Thm2Optimum, usize)> = None;
    for i in 1..=STEPS {
        let omega = w_hi * i as f64 / STEPS as f64;
        if let Some(o) = eval(omega) {
            if best.is_none_or(|(b, _)| o.zeta < b.zeta) {
                best = Some((o, i));
            }
        }
    }
    let (found, i) = best?;
    let lo = w_hi * (i as f64 - 1.0).max(0.5) / STEPS as f64;
    let hi = w_hi * ((i + 1).min(STEPS) as f64) / STEPS as f64;
    let objective = |w: f64| eval(w).map_or(f64::INFINITY, |o| o.zeta);
    let refined = golden_section(objective, lo, hi, 1e-10).ok().and_then(eval);
    Some(match refined {
        Some(r) if r.zeta < found.zeta => r,
        _ => found,
    })
}

/// Minimises the Theorem 2 ζ over admissible `(ω, Ω)` for Gaussian inputs
/// with `⟨n̂⟩ ≤ n̄` and over integer `d`, trying both parameter routes.
pub fn minimize_thm2(nbar: f64, n: FragmentCount) -> Result<Thm2Optimum> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be positive, got {nbar}")));
    }
    if n.ln() < 0.0 {
        return Err(Error::InvalidParameter(format!("N must be at least 1, got {n}")));
    }
    let a = sufficient_route(nbar, n);
    let b = envelope_route(nbar, n);
    match (a, b) {
        (Some(x), Some(y)) => Ok(if y.zeta < x.zeta { y } else { x }),
        (Some(x), None) | (None, Some(x)) => Ok(x),
        (None, None) => Err(Error::NoFeasiblePoint),
    }
}

/// As [`minimize_thm2`] restricted to the sufficient-condition route.
pub fn minimize_thm2_sufficient(nbar: f64, n: FragmentCount) -> Result<Thm2Optimum> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be positive, got {nbar}")));
    }
    sufficient_route(nbar, n).ok_or(Error::NoFeasiblePoint)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub beta: f64,
    pub alpha: f64,
    /// Root-mean-square residual of the fit in natural-log space.
    pub residual: f64,
}

/// Least-squares fit of `δ · bound = β N^{−1/α}` in log-log space.
pub fn power_law_fit(rows: &[(FragmentCount, f64)], delta: f64) -> Result<PowerLawFit> {
    if rows.len() < 3 {
        return Err(Error::InvalidData(format!("need at least 3 rows, got {}", rows.len())));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if let Some((n, b)) = rows.iter().find(|(_, b)| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::InvalidData(format!("bound {b} at N = {n} is not positive")));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|(n, b)| (n.ln(), (delta * b).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidData("all rows share one N".into()));
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return Err(Error::InvalidData(format!("bound does not decrease with N (slope {slope})")));
    }
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(PowerLawFit { beta: intercept.exp(), alpha: -1.0 / slope, residual: (rss / k).sqrt() })
}

/// `points` values of N evenly spaced in `log10 N` over `[10^lo, 10^hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<FragmentCount>> {
    if points < 2 || !(lo < hi) {
        return Err(Error::InvalidInterval(lo, hi));
    }
    (0..points)
        .map(|i| FragmentCount::from_log10(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect()
}

pub fn fig2_default_grid() -> Vec<FragmentCount> {
    log_grid(12.0, 60.0, 13).expect("valid grid")
}

pub fn fig3_default_grid() -> Vec<FragmentCount> {
    log_grid(5.0, 29.0, 13).expect("valid grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub n: FragmentCount,
    pub bound_analytic: f64,
    pub bound_numeric: f64,
    pub d: u64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub n: FragmentCount,
    /// Closed form at the chosen `(ω, Ω)`; absent when `γ₂N ≤ 1`.
    pub bound_closed: Option<f64>,
    pub bound_numeric: f64,
    pub d: u64,
    pub epsilon: Option<f64>,
    pub omega: f64,
    pub cap: f64,
}

/// Theorem 1 bounds (divided by δ) along a grid, in grid order.
pub fn fig2_sweep(nbar: f64, delta: f64, grid: &[FragmentCount]) -> Result<Vec<Fig2Row>> {
    grid.par_iter()
        .map(|&n| {
            let opt = minimize_thm1(nbar, n)?;
            Ok(Fig2Row {
                n,
                bound_analytic: thm1_analytic(nbar, n)?.value / delta,
                bound_numeric: opt.zeta / delta,
                d: opt.d,
                m: opt.m,
            })
        })
        .collect()
}

/// Theorem 2 bounds (divided by δ) along a grid, in grid order.
pub fn fig3_sweep(nbar: f64, delta: f64, grid: &[FragmentCount]) -> Result<Vec<Fig3Row>> {
    grid.par_iter()
        .map(|&n| {
            let opt = minimize_thm2(nbar, n)?;
            Ok(Fig3Row {
                n,
                bound_closed: thm2_closed(opt.omega, opt.cap, n).ok().map(|v| v / delta),
                bound_numeric: opt.zeta / delta,
                d: opt.d,
                epsilon: opt.epsilon(),
                omega: opt.omega,
                cap: opt.cap,
            })
        })
        .collect()
}
