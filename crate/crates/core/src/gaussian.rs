//! Single-mode Gaussian states and their exponential photon-number moment
//! `⟨e^{ωn̂}⟩`.
//!
//! A state is a displaced squeezed thermal state with displacement `α`,
//! thermal occupation `m` and squeezing `r ≥ 0`, covariance
//! `diag(e^{2r}(2m+1), e^{−2r}(2m+1))`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::golden_section;
use crate::random::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    alpha: Complex64,
    m: f64,
    r: f64,
}

impl GaussianState {
    /// Negative squeezing is folded onto `r ≥ 0` by a quarter-turn phase
    /// rotation, which maps `α ↦ −iα`.
    pub fn new(alpha: Complex64, m: f64, r: f64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite() && m.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParameter("Gaussian parameters must be finite".into()));
        }
        if m < 0.0 {
            return Err(Error::InvalidParameter(format!("thermal occupation must be non-negative, got {m}")));
        }
        if r < 0.0 {
            return Ok(Self { alpha: alpha * Complex64::new(0.0, -1.0), m, r: -r });
        }
        Ok(Self { alpha, m, r })
    }

    pub fn vacuum() -> Self {
        Self { alpha: Complex64::new(0.0, 0.0), m: 0.0, r: 0.0 }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self { alpha, m: 0.0, r: 0.0 }
    }

    pub fn thermal(m: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), m, 0.0)
    }

    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), 0.0, r)
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `√2 (Re α, Im α)`.
    pub fn displacement(&self) -> [f64; 2] {
        let s = std::f64::consts::SQRT_2;
        [s * self.alpha.re, s * self.alpha.im]
    }

    /// Diagonal of the covariance matrix.
    pub fn covariance(&self) -> [f64; 2] {
        let v = 2.0 * self.m + 1.0;
        [v * (2.0 * self.r).exp(), v * (-2.0 * self.r).exp()]
    }

    /// `(2m+1) e^{2r}`, the larger covariance eigenvalue.
    pub fn shape(&self) -> f64 {
        self.covariance()[0]
    }
}

/// `⟨n̂⟩ = |α|² + m cosh 2r + sinh² r`.
pub fn mean_photon(g: &GaussianState) -> f64 {
    g.alpha.norm_sqr() + g.m * (2.0 * g.r).cosh() + g.r.sinh().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub omega: f64,
    /// `κ₊`, absent when `κ₊² ≤ 0`.
    pub kappa_plus: Option<f64>,
    pub kappa_minus: Option<f64>,
    /// `⟨e^{ωn̂}⟩`, absent when it diverges.
    pub moment: Option<f64>,
    pub feasible: bool,
    /// Whether `moment ≤ Ω` for the supplied `Ω`.
    pub satisfies_cap: Option<bool>,
}

/// `u± = (e^ω − 1) κ±² / 2 = 1 − (e^ω − 1)((2m+1)e^{±2r} − 1)/2`.
fn scaled_kappas(g: &GaussianState, omega: f64) -> (f64, f64, f64) {
    let e = omega.exp_m1();
    let xp = 2.0 * g.m * (2.0 * g.r).exp() + (2.0 * g.r).exp_m1();
    let xm = 2.0 * g.m * (-2.0 * g.r).exp() + (-2.0 * g.r).exp_m1();
    (e, 1.0 - 0.5 * e * xp, 1.0 - 0.5 * e * xm)
}

/// Natural log of the moment; `None` when it diverges.
pub fn ln_exp_moment(g: &GaussianState, omega: f64) -> Option<f64> {
    let (e, up, um) = scaled_kappas(g, omega);
    if up <= 0.0 || um <= 0.0 {
        return None;
    }
    Some(e * (g.alpha.re.powi(2) / up + g.alpha.im.powi(2) / um) - 0.5 * (up.ln() + um.ln()))
}

/// `⟨e^{ωn̂}⟩ = 2 exp[2Re(α)²/κ₊² + 2Im(α)²/κ₋²] / ((e^ω−1) κ₊ κ₋)` with
/// `κ±² = coth(ω/2) − (2m+1)e^{±2r}`.
pub fn exp_moment(g: &GaussianState, omega: f64) -> Result<CutoffReport> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let (e, up, um) = scaled_kappas(g, omega);
    let kappa = |u: f64| (u > 0.0).then(|| (2.0 * u / e).sqrt());
    let feasible = up > 0.0;
    let moment = if feasible {
        let expo = e * (g.alpha.re.powi(2) / up + g.alpha.im.powi(2) / um);
        Some(expo.exp() / (up * um).sqrt())
    } else {
        None
    };
    Ok(CutoffReport {
        omega,
        kappa_plus: kappa(up),
        kappa_minus: kappa(um),
        moment,
        feasible,
        satisfies_cap: None,
    })
}

/// [`exp_moment`] with the cap check `moment ≤ Ω` filled in.
pub fn exp_moment_capped(g: &GaussianState, omega: f64, cap: f64) -> Result<CutoffReport> {
    let mut r = exp_moment(g, omega)?;
    r.satisfies_cap = Some(matches!(r.moment, Some(v) if v <= cap));
    Ok(r)
}

/// `3/2 + 2n̄(2 + n̄)`, the shape budget of Gaussian states with `⟨n̂⟩ ≤ n̄`.
pub fn shape_budget(nbar: f64) -> f64 {
    1.5 + 2.0 * nbar * (2.0 + nbar)
}

/// `ω = min{2ε/(3/2 + 2n̄(2+n̄)), (1−ε)/n̄ · ln((1−ε)Ω)}`; for `n̄ = 0` only
/// the first branch applies.
pub fn cutoff_params(nbar: f64, epsilon: f64, cap: f64) -> Result<f64> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be non-negative, got {nbar}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(cap.is_finite() && cap * (1.0 - epsilon) > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Omega must exceed 1/(1 - epsilon) = {}, got {cap}",
            1.0 / (1.0 - epsilon)
        )));
    }
    let first = 2.0 * epsilon / shape_budget(nbar);
    let omega = if nbar == 0.0 {
        first
    } else {
        first.min((1.0 - epsilon) / nbar * ((1.0 - epsilon) * cap).ln())
    };
    debug_assert!(omega < 2.0);
    Ok(omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub nbar: f64,
    pub omega: f64,
    pub cap: f64,
    pub samples: usize,
    pub seed: u64,
    pub violations: usize,
    /// Largest moment seen; `None` if some sample diverged.
    pub max_moment: Option<f64>,
    pub worst: Option<GaussianState>,
    /// Largest `(2m+1)e^{2r}` seen and whether it stayed within [`shape_budget`].
    pub max_shape: f64,
    pub shape_within_budget: bool,
    pub passed: bool,
}

const MAX_ATTEMPTS_PER_SAMPLE: usize = 10_000;

/// Uniform draw over `(|α|², m, r, arg α)` boxes, rejected until `⟨n̂⟩ ≤ n̄`.
fn sample_state<R: Rng + ?Sized>(rng: &mut R, nbar: f64) -> Result<GaussianState> {
    if nbar == 0.0 {
        return Ok(GaussianState::vacuum());
    }
    let r_max = nbar.sqrt().asinh();
    for _ in 0..MAX_ATTEMPTS_PER_SAMPLE {
        let a2 = rng.random::<f64>() * nbar;
        let m = rng.random::<f64>() * nbar;
        let r = rng.random::<f64>() * r_max;
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let g = GaussianState::new(Complex64::from_polar(a2.sqrt(), theta), m, r)?;
        if mean_photon(&g) <= nbar {
            return Ok(g);
        }
    }
    Err(Error::Sampler(format!("no state with mean photon number <= {nbar} found")))
}

/// Samples Gaussian states with `⟨n̂⟩ ≤ n̄` and checks the moment against `Ω`
/// at `ω = cutoff_params(n̄, ε, Ω)`.
pub fn certify_set(nbar: f64, epsilon: f64, cap: f64, samples: usize, seed: u64) -> Result<CertifyReport> {
    let omega = cutoff_params(nbar, epsilon, cap)?;
    certify_at(nbar, omega, cap, samples, seed)
}

/// As [`certify_set`] at an explicit `ω`. Violations are reported, not errors.
pub fn certify_at(nbar: f64, omega: f64, cap: f64, samples: usize, seed: u64) -> Result<CertifyReport> {
    if samples == 0 {
        return Err(Error::InvalidBudget);
    }
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be non-negative, got {nbar}")));
    }
    let draws: Vec<(GaussianState, Option<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let g = sample_state(&mut rng, nbar)?;
            Ok((g, exp_moment(&g, omega)?.moment))
        })
        .collect::<Result<_>>()?;

    let mut violations = 0;
    let mut max_moment = Some(f64::NEG_INFINITY);
    let mut worst = None;
    let mut max_shape = f64::NEG_INFINITY;
    for (g, moment) in &draws {
        max_shape = max_shape.max(g.shape());
        let exceeds = !matches!(moment, Some(v) if *v <= cap);
        if exceeds {
            violations += 1;
        }
        let larger = match (moment, max_moment) {
            (None, Some(_)) => true,
            (Some(v), Some(best)) => *v > best,
            _ => false,
        };
        if larger {
            max_moment = *moment;
            worst = Some(*g);
        }
    }
    Ok(CertifyReport {
        nbar,
        omega,
        cap,
        samples,
        seed,
        violations,
        max_moment,
        worst,
        max_shape,
        shape_within_budget: max_shape <= shape_budget(nbar) * (1.0 + 1e-12),
        passed: violations == 0,
    })
}

/// The state with `⟨n̂⟩ = n̄`, squeezing `r`, thermal fraction `t` of the
/// remaining budget, and the rest as real displacement.
fn saturated_state(nbar: f64, r: f64, t: f64) -> GaussianState {
    let sq = r.sinh().powi(2);
    let spare = (nbar - sq).max(0.0);
    let m = t * spare / (2.0 * r).cosh();
    let a2 = (spare - m * (2.0 * r).cosh()).max(0.0);
    GaussianState { alpha: Complex64::new(a2.sqrt(), 0.0), m, r }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub nbar: f64,
    pub omega: f64,
    /// `sup ⟨e^{ωn̂}⟩` over Gaussian states with `⟨n̂⟩ ≤ n̄`; `None` if some
    /// such state has a divergent moment.
    pub moment: Option<f64>,
    pub maximiser: GaussianState,
}

/// Largest moment at `ω` over Gaussian states with `⟨n̂⟩ ≤ n̄`, by a grid over
/// squeezing and thermal fraction followed by alternating golden-section
/// refinement. Only energy-saturated states are searched: at fixed `(m, r)`
/// the moment grows with `|α|²` and is largest along `Re α`.
pub fn moment_envelope(nbar: f64, omega: f64) -> Result<Envelope> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("nbar must be non-negative, got {nbar}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    if nbar == 0.0 {
        return Ok(Envelope { nbar, omega, moment: Some(1.0), maximiser: GaussianState::vacuum() });
    }
    let r_max = nbar.sqrt().asinh();
    let objective = |r: f64, t: f64| ln_exp_moment(&saturated_state(nbar, r, t), omega);

    const NR: usize = 96;
    const NT: usize = 48;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=NR {
        let r = r_max * i as f64 / NR as f64;
        for j in 0..=NT {
            let t = j as f64 / NT as f64;
            match objective(r, t) {
                None => {
                    return Ok(Envelope { nbar, omega, moment: None, maximiser: saturated_state(nbar, r, t) });
                }
                Some(v) if v > best.0 => best = (v, r, t),
                _ => {}
            }
        }
    }
    let (_, mut r, mut t) = best;
    let mut hr = r_max / NR as f64;
    let mut ht = 1.0 / NT as f64;
    let neg = |v: Option<f64>| v.map_or(f64::NEG_INFINITY, |x| x);
    for _ in 0..6 {
        let (lo, hi) = ((r - hr).max(0.0), (r + hr).min(r_max));
        if hi > lo {
            r = golden_section(|x| -neg(objective(x, t)), lo, hi, 1e-12)?;
        }
        let (lo, hi) = ((t - ht).max(0.0), (t + ht).min(1.0));
        if hi > lo {
            t = golden_section(|x| -neg(objective(r, x)), lo, hi, 1e-12)?;
        }
        hr *= 0.5;
        ht *= 0.5;
    }
    let refined = objective(r, t);
    let (value, r, t) = match refined {
        None => return Ok(Envelope { nbar, omega, moment: None, maximiser: saturated_state(nbar, r, t) }),
        Some(v) if v >= best.0 => (v, r, t),
        _ => best,
    };
    Ok(Envelope { nbar, omega, moment: Some(value.exp()), maximiser: saturated_state(nbar, r, t) })
}

/// Largest `ω` at which every Gaussian state with `⟨n̂⟩ ≤ n̄` has a finite
/// moment: `coth(ω/2) > max (2m+1)e^{2r} = (√n̄ + √(n̄+1))²`, attained by
/// squeezed vacuum.
pub fn max_finite_omega(nbar: f64) -> f64 {
    let s = (nbar.sqrt() + (nbar + 1.0).sqrt()).powi(2);
    ((s + 1.0) / (s - 1.0)).ln()
}
