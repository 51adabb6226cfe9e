//! Sampled lower bounds on the energy-constrained and exponential cut-off
//! diamond norms, and brute-force checks of the supporting inequalities on
//! small truncated spaces.
//!
//! Every check evaluates the harder side by a certified lower bound, so a
//! negative slack is a genuine counterexample. Trials draw from independent
//! per-trial RNG streams and are aggregated in trial order.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{gibbs_entropy_nats, thm2_intermediates};
use crate::channels::{
    build_measure_prepare, modified_choi, random_channel_with, truncated_choi, ChannelCombination,
    ConditioningMeasurement, MeasurePrepare, QuantumChannel,
};
use crate::error::{Error, Result};
use crate::fock::{self, mutual_information, two_mode_squeezed, CMatrix, FockOperator, FockState, Subsystem};
use crate::random::{self, trial_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed negative slack on inequalities.
    pub inequality: f64,
    /// Allowed residual on identities.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inequality: 1e-9, identity: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormBudget {
    /// Random pure-state starting points.
    pub samples: usize,
    /// Coordinate moves in each local refinement.
    pub refine_iters: usize,
}

impl Default for NormBudget {
    fn default() -> Self {
        Self { samples: 512, refine_iters: 200 }
    }
}

/// Constraint on the channel-input marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputConstraint {
    /// `Tr(ρ n̂) ≤ n̄`.
    Energy { nbar: f64 },
    /// `Tr(ρ e^{ωn̂}) ≤ Ω`.
    Exponential { omega: f64, cap: f64 },
}

impl InputConstraint {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Energy { nbar } if nbar >= 0.0 && nbar.is_finite() => Ok(()),
            Self::Exponential { omega, cap } if omega > 0.0 && cap >= 1.0 && cap.is_finite() => Ok(()),
            _ => Err(Error::InvalidParameter(format!("invalid input constraint {self:?}"))),
        }
    }

    fn weights(&self, dim: usize) -> Vec<f64> {
        match *self {
            Self::Energy { .. } => (0..dim).map(|k| k as f64).collect(),
            Self::Exponential { omega, .. } => (0..dim).map(|k| (omega * k as f64).exp()).collect(),
        }
    }

    /// Value of the constrained quantity and its bound; the vacuum takes
    /// the value `floor`.
    fn limits(&self) -> (f64, f64) {
        match *self {
            Self::Energy { nbar } => (0.0, nbar),
            Self::Exponential { cap, .. } => (1.0, cap),
        }
    }

    /// Mixes `ρ` with the vacuum just enough to satisfy the constraint.
    fn project(&self, rho: &CMatrix) -> CMatrix {
        let w = self.weights(rho.nrows());
        let value: f64 = (0..rho.nrows()).map(|k| w[k] * rho[(k, k)].re).sum();
        let (floor, bound) = self.limits();
        if value <= bound {
            return rho.clone();
        }
        let t = ((bound - floor) / (value - floor)).clamp(0.0, 1.0);
        let mut out = rho * Complex64::new(t, 0.0);
        out[(0, 0)] += Complex64::new(1.0 - t, 0.0);
        out
    }

    pub fn value(&self, rho: &CMatrix) -> f64 {
        let w = self.weights(rho.nrows());
        (0..rho.nrows()).map(|k| w[k] * rho[(k, k)].re).sum()
    }

    pub fn admits(&self, rho: &CMatrix, tol: f64) -> bool {
        self.value(rho) <= self.limits().1 + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower_bound: f64,
    /// Coefficients `ψ_{ij}` (reference index first) of the best input, as `[re, im]`.
    pub best_input: Vec<[f64; 2]>,
    /// Constrained quantity of the best input's channel marginal.
    pub input_value: f64,
    pub budget: NormBudget,
    pub constraint: InputConstraint,
}

/// Canonical purification `Σ (√ρ)_{ji} |i⟩|j⟩` of `ρ` on a reference copy.
pub fn canonical_purification(rho: &CMatrix) -> DVector<Complex64> {
    let dim = rho.nrows();
    let root = FockOperator::new(rho.clone()).map(|o| o.hermitian_function(f64::sqrt)).unwrap_or_else(|_| rho.clone());
    DVector::from_fn(dim * dim, |k, _| root[(k % dim, k / dim)])
}

/// `‖(id ⊗ Δ)(|ψ⟩⟨ψ|)‖₁` for the canonical purification of `ρ`.
pub fn output_norm(map: &ChannelCombination, rho: &CMatrix) -> f64 {
    let v = canonical_purification(rho);
    match map.apply_to_pure_on_second(&v, map.din()) {
        Ok(out) => FockOperator::new(out).map(|o| o.trace_norm()).unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

fn density_from(g: &CMatrix) -> CMatrix {
    let mut rho = g * g.adjoint();
    let tr = rho.trace().re;
    if tr > 0.0 {
        rho.unscale_mut(tr);
    }
    rho
}

fn structured_seeds(dim: usize) -> Vec<CMatrix> {
    let mut seeds = Vec::new();
    let one = Complex64::new(1.0, 0.0);
    for k in 0..dim {
        let mut g = CMatrix::zeros(dim, dim);
        g[(k, 0)] = one;
        seeds.push(g);
    }
    for k in 2..=dim {
        let mut g = CMatrix::zeros(dim, dim);
        for i in 0..k {
            g[(i, i)] = one;
        }
        seeds.push(g);
    }
    for k in 1..dim {
        let mut g = CMatrix::zeros(dim, dim);
        g[(0, 0)] = one;
        g[(k, 0)] = one;
        seeds.push(g);
    }
    seeds
}

struct Search<'a> {
    map: &'a ChannelCombination,
    constraint: InputConstraint,
}

impl Search<'_> {
    fn eval(&self, g: &CMatrix) -> (f64, CMatrix) {
        let rho = self.constraint.project(&density_from(g));
        (output_norm(self.map, &rho), rho)
    }

    /// Greedy coordinate search over the real and imaginary parts of `g`.
    fn refine(&self, mut g: CMatrix, iters: usize) -> (f64, CMatrix) {
        let coords = 2 * g.len();
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-3);
        let mut step = 0.3 * scale;
        let (mut best, _) = self.eval(&g);
        let mut since_improvement = 0;
        for it in 0..iters {
            let c = it % coords;
            let (idx, imag) = (c / 2, c % 2 == 1);
            let delta = if imag { Complex64::new(0.0, step) } else { Complex64::new(step, 0.0) };
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut trial = g.clone();
                trial[idx] += delta * sign;
                let (v, _) = self.eval(&trial);
                if v > best {
                    best = v;
                    g = trial;
                    improved = true;
                    break;
                }
            }
            if improved {
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement >= coords {
                    step *= 0.5;
                    since_improvement = 0;
                }
            }
        }
        let (v, rho) = self.eval(&g);
        (v, rho)
    }
}

/// Lower bound on `sup ‖(id ⊗ Δ)(ψ)‖₁` over pure inputs whose channel
/// marginal satisfies `constraint`. Structured seeds come first, then
/// `budget.samples` Ginibre draws; every draw that beats all earlier raw
/// values is refined by coordinate search. The result is nondecreasing in
/// both budget entries.
pub fn constrained_lower_bound(
    map: &ChannelCombination,
    constraint: InputConstraint,
    budget: NormBudget,
    seed: u64,
) -> Result<NormEstimate> {
    if budget.samples == 0 {
        return Err(Error::InvalidBudget);
    }
    constraint.validate()?;
    let dim = map.din();
    let search = Search { map, constraint };
    let seeds = structured_seeds(dim);
    let mut rng = random::rng(seed);
    let mut record = f64::NEG_INFINITY;
    let mut best = (f64::NEG_INFINITY, CMatrix::zeros(dim, dim));
    for k in 0..seeds.len() + budget.samples {
        let g = if k < seeds.len() { seeds[k].clone() } else { random::ginibre(&mut rng, dim, dim) };
        let (raw, rho) = search.eval(&g);
        if raw > best.0 {
            best = (raw, rho);
        }
        if raw > record {
            record = raw;
            let (v, rho) = search.refine(g, budget.refine_iters);
            if v > best.0 {
                best = (v, rho);
            }
        }
    }
    let (lower_bound, rho) = best;
    let psi = canonical_purification(&rho);
    Ok(NormEstimate {
        lower_bound,
        best_input: psi.iter().map(|z| [z.re, z.im]).collect(),
        input_value: constraint.value(&rho),
        budget,
        constraint,
    })
}

/// Sampled lower bound on `‖Λ₀ − Λ₁‖_{⋄n̄}`.
pub fn ecd_lower_bound(
    l0: &QuantumChannel,
    l1: &QuantumChannel,
    nbar: f64,
    budget: NormBudget,
    seed: u64,
) -> Result<NormEstimate> {
    let diff = ChannelCombination::difference(l0, l1)?;
    constrained_lower_bound(&diff, InputConstraint::Energy { nbar }, budget, seed)
}

/// Sampled lower bound on `‖Λ₀ − Λ₁‖_{⋄ω,Ω}`.
pub fn exp_lower_bound(
    l0: &QuantumChannel,
    l1: &QuantumChannel,
    omega: f64,
    cap: f64,
    budget: NormBudget,
    seed: u64,
) -> Result<NormEstimate> {
    let diff = ChannelCombination::difference(l0, l1)?;
    constrained_lower_bound(&diff, InputConstraint::Exponential { omega, cap }, budget, seed)
}

/// A feasible input with `‖(id ⊗ Δ)(ρ)‖₁ > 0` whenever `Δ ≠ 0`: the vacuum
/// if it already separates, otherwise the vacuum mixed with a separating
/// basis or maximally entangled input.
pub fn positivity_witness(map: &ChannelCombination, nbar: f64) -> f64 {
    let dim = map.din();
    let constraint = InputConstraint::Energy { nbar };
    let mut best = 0.0f64;
    for g in structured_seeds(dim) {
        let rho = constraint.project(&density_from(&g));
        best = best.max(output_norm(map, &rho));
        if best > 0.0 {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub trials: usize,
    pub skipped: usize,
    /// Smallest `RHS − LHS` over non-skipped trials.
    pub worst_slack: f64,
    /// Largest residual of the identities checked alongside.
    pub worst_residual: f64,
    pub worst_params: Value,
    /// Trials failing a strict condition (for example a zero positivity witness).
    pub violations: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub passed: bool,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    slack: f64,
    residual: f64,
    violation: bool,
    params: Value,
}

fn run_trials(
    lemma: &str,
    trials: usize,
    seed: u64,
    tol: Tolerances,
    trial: impl Fn(usize, &mut ChaCha8Rng) -> Result<Option<TrialOutcome>> + Sync,
) -> Result<LemmaReport> {
    let outcomes: Vec<Option<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            trial(i, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut skipped = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    let mut worst_params = Value::Null;
    let mut violations = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        let Some(o) = o else {
            skipped += 1;
            continue;
        };
        if o.violation {
            violations += 1;
        }
        worst_residual = worst_residual.max(o.residual);
        if o.slack < worst_slack || worst_params.is_null() {
            worst_slack = o.slack.min(worst_slack);
            let mut p = o.params;
            if let Value::Object(m) = &mut p {
                m.insert("trial".into(), json!(i));
            }
            worst_params = p;
        }
    }
    let passed = worst_slack >= -tol.inequality && worst_residual <= tol.identity && violations == 0;
    Ok(LemmaReport {
        lemma: lemma.to_string(),
        trials,
        skipped,
        worst_slack: if worst_slack.is_finite() { worst_slack } else { 0.0 },
        worst_residual,
        worst_params,
        violations,
        seed,
        tolerances: tol,
        passed,
    })
}

fn random_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> usize {
    rng.random_range(1..=dim)
}

/// `½‖ρ − √M ρ √M / Tr(Mρ)‖₁ ≤ √(1 − Tr(Mρ))` for random `ρ` and effects `M`.
pub fn check_gentle_measurement(trials: usize, dim: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    run_trials("gentle", trials, seed, tol, |_, rng| {
        let rank = random_rank(rng, dim);
        let rho = random::random_density(rng, dim, rank);
        let m = random::random_effect(rng, dim);
        Ok(gentle_slack(&rho, &m).map(|(slack, p)| TrialOutcome {
            slack,
            residual: 0.0,
            violation: false,
            params: json!({ "dim": dim, "rank": rank, "p": p }),
        }))
    })
}

/// Slack of the gentle-measurement inequality and the outcome probability;
/// `None` when the outcome has probability zero.
pub fn gentle_slack(rho: &FockState, m: &FockOperator) -> Option<(f64, f64)> {
    let p = rho.expectation(m).ok()?;
    if p <= 1e-12 {
        return None;
    }
    let root = m.sqrt_psd();
    let post = root.matrix() * rho.matrix() * root.matrix() / Complex64::new(p, 0.0);
    let lhs = 0.5 * fock::trace_norm(&(rho.matrix() - post)).ok()?;
    let rhs = (1.0 - p).max(0.0).sqrt();
    Some((rhs - lhs, p))
}

/// Slack of `½‖ρ − ρ_TN‖₁ ≤ √((⟨n̂_A⟩_ρ − Tr(n̂_A ρ_T))/d)`, where `ρ_T` is
/// `ρ` projected onto the lowest `d` levels of its first factor (not
/// renormalised) and `ρ_TN = ρ_T / Tr ρ_T`. `None` when the projection
/// annihilates `ρ`.
pub fn fock_truncation_slack(rho: &FockState, dims: (usize, usize), d: usize) -> Result<Option<f64>> {
    let (da, dc) = dims;
    if rho.dim() != da * dc || d == 0 || d > da {
        return Err(Error::Shape(format!("truncation {d} on {da}x{dc} state of dimension {}", rho.dim())));
    }
    let proj = FockOperator::fock_projector(da, d).kron(&FockOperator::identity(dc));
    let kept = proj.matrix() * rho.matrix() * proj.matrix();
    let p = kept.trace().re;
    if p <= 1e-14 {
        return Ok(None);
    }
    let tn = kept.unscale(p);
    let lhs = 0.5 * fock::trace_norm(&(rho.matrix() - &tn))?;
    let n_a = FockOperator::number(da).kron(&FockOperator::identity(dc));
    let before = rho.expectation(&n_a)?;
    let after = (n_a.matrix() * &kept).trace().re;
    let rhs = ((before - after).max(0.0) / d as f64).sqrt();
    Ok(Some(rhs - lhs))
}

pub fn check_fock_truncation(trials: usize, dims: (usize, usize), seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    let (da, dc) = dims;
    run_trials("fock-truncation", trials, seed, tol, |_, rng| {
        let rank = random_rank(rng, da * dc);
        let rho = random::random_density(rng, da * dc, rank);
        let d = rng.random_range(1..da.max(2)).min(da);
        Ok(fock_truncation_slack(&rho, dims, d)?.map(|slack| TrialOutcome {
            slack,
            residual: 0.0,
            violation: false,
            params: json!({ "dims": [da, dc], "d": d, "rank": rank }),
        }))
    })
}

/// Working truncation `D = d + max(20, ⌈10/ω⌉)`.
pub fn working_truncation(d: usize, omega: f64) -> usize {
    d + 20usize.max((10.0 / omega).ceil() as usize)
}

/// `‖ρ − ρ_d‖₁` for `ρ = J(Λ)` and its reference-side projection onto `d`
/// levels, together with `2 e^{−ωd/2}`.
pub fn cj_truncation_sides(ch: &QuantumChannel, omega: f64, d: usize) -> Result<(f64, f64)> {
    let dim = ch.din();
    if d == 0 || d > dim {
        return Err(Error::Shape(format!("truncation {d} exceeds the input dimension {dim}")));
    }
    let j = modified_choi(ch, omega, dim)?;
    let proj = FockOperator::fock_projector(dim, d).kron(&FockOperator::identity(ch.dout()));
    let rho_d = proj.matrix() * j.state.matrix() * proj.matrix();
    let lhs = fock::trace_norm(&(j.state.matrix() - rho_d))?;
    Ok((lhs, 2.0 * (-0.5 * omega * d as f64).exp()))
}

pub fn check_cj_truncation(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    const OMEGAS: [f64; 3] = [0.3, 1.0, 2.0];
    run_trials("cj-truncation", trials, seed, tol, |i, rng| {
        let omega = OMEGAS[i % OMEGAS.len()];
        let d = rng.random_range(1..=5);
        let big = working_truncation(d, omega);
        let dout = rng.random_range(2..=3);
        let kraus = big.div_ceil(dout);
        let ch = random_channel_with(rng, big, dout, kraus)?;
        let (lhs, rhs) = cj_truncation_sides(&ch, omega, d)?;
        let tail = (-omega * big as f64).exp();
        Ok(Some(TrialOutcome {
            slack: rhs - lhs + tail,
            residual: 0.0,
            violation: false,
            params: json!({ "omega": omega, "d": d, "working_dim": big, "dout": dout, "lhs": lhs, "rhs": rhs }),
        }))
    })
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R, din: usize, dout: usize) -> Result<(QuantumChannel, QuantumChannel)> {
    let k0 = din.div_ceil(dout) + rng.random_range(0..2);
    let k1 = din.div_ceil(dout) + rng.random_range(0..2);
    Ok((random_channel_with(rng, din, dout, k0)?, random_channel_with(rng, din, dout, k1)?))
}

/// Budget used inside the lemma suites; any lower bound keeps the checks sound.
pub const SUITE_BUDGET: NormBudget = NormBudget { samples: 48, refine_iters: 60 };

/// `‖Λ₀ − Λ₁‖_{⋄n̄} ≤ d ‖J_T(Λ₀) − J_T(Λ₁)‖₁ + 4√(n̄/d)` for every `d ≤ din`,
/// with the left side replaced by a sampled lower bound.
pub fn check_trunc_lemma2(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    run_trials("trunc-lemma2", trials, seed, tol, |i, rng| {
        let din = rng.random_range(2..=4);
        let dout = rng.random_range(2..=3);
        let (l0, l1) = if i == 0 {
            let c = QuantumChannel::identity(din);
            (c.clone(), c)
        } else if i == 1 {
            (QuantumChannel::identity(din), QuantumChannel::full_dephasing(din))
        } else {
            random_pair(rng, din, dout)?
        };
        let nbar = rng.random::<f64>() * (din - 1) as f64;
        let est = ecd_lower_bound(&l0, &l1, nbar, SUITE_BUDGET, rng.random())?;
        let mut slack = f64::INFINITY;
        let mut at = 0;
        for d in 1..=din {
            let j0 = truncated_choi(&l0, d)?;
            let j1 = truncated_choi(&l1, d)?;
            let diff = fock::trace_norm(&(j0.state.matrix() - j1.state.matrix()))?;
            let rhs = d as f64 * diff + 4.0 * (nbar / d as f64).sqrt();
            if rhs - est.lower_bound < slack {
                slack = rhs - est.lower_bound;
                at = d;
            }
        }
        Ok(Some(TrialOutcome {
            slack,
            residual: 0.0,
            violation: false,
            params: json!({ "din": l0.din(), "dout": l0.dout(), "nbar": nbar, "d": at, "estimate": est.lower_bound }),
        }))
    })
}

/// Filter `C_{ij} = ψ_{ij} √(e^{ωj}/(1 − e^{−ω}))` with `(C ⊗ I)|φ⟩ = |ψ⟩`.
pub fn expcut_filter(psi: &DVector<Complex64>, omega: f64, dim: usize) -> CMatrix {
    let norm = -(-omega).exp_m1();
    CMatrix::from_fn(dim, dim, |i, j| psi[i * dim + j] * ((omega * j as f64).exp() / norm).sqrt())
}

/// Residual of `(C ⊗ I)|φ⟩ = |ψ⟩` and slack of
/// `‖C‖∞² ≤ Tr C†C ≤ Ω/(1 − e^{−ω})` (the smaller of the two slacks).
pub fn expcut_filter_check(psi: &DVector<Complex64>, omega: f64, cap: f64, dim: usize) -> Result<(f64, f64)> {
    let c = expcut_filter(psi, omega, dim);
    let phi = two_mode_squeezed(omega, dim)?.ket();
    let id = CMatrix::identity(dim, dim);
    let rebuilt = c.kronecker(&id) * phi;
    let residual = (rebuilt - psi).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let op = c.clone().svd(false, false).singular_values.max().powi(2);
    let hs = c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let bound = cap / -(-omega).exp_m1();
    Ok((residual, (hs - op).min(bound - hs)))
}

/// `‖Λ₀ − Λ₁‖_{⋄ω,Ω} ≤ d̃ ‖J(Λ₀) − J(Λ₁)‖₁` with a sampled left side, plus the
/// filter identity on a random feasible input.
pub fn check_expcut_lemma(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    const OMEGAS: [f64; 3] = [0.3, 1.0, 2.0];
    run_trials("expcut", trials, seed, tol, |i, rng| {
        let omega = OMEGAS[i % OMEGAS.len()];
        let cap = 1.0 + rng.random::<f64>() * 4.0;
        let din = rng.random_range(2..=4);
        let dout = rng.random_range(2..=3);
        let (l0, l1) = if i == 0 {
            let c = QuantumChannel::identity(din);
            (c.clone(), c)
        } else {
            random_pair(rng, din, dout)?
        };
        let est = exp_lower_bound(&l0, &l1, omega, cap, SUITE_BUDGET, rng.random())?;
        let k = thm2_intermediates(omega, cap.max(1.0 + 1e-12))?;
        let j0 = modified_choi(&l0, omega, din)?;
        let j1 = modified_choi(&l1, omega, din)?;
        let rhs = k.d_tilde * fock::trace_norm(&(j0.state.matrix() - j1.state.matrix()))?;

        let constraint = InputConstraint::Exponential { omega, cap };
        let g = random::ginibre(rng, din, din);
        let rho = constraint.project(&density_from(&g));
        let psi = canonical_purification(&rho);
        let (residual, filter_slack) = expcut_filter_check(&psi, omega, cap, din)?;
        Ok(Some(TrialOutcome {
            slack: (rhs - est.lower_bound).min(filter_slack),
            residual,
            violation: false,
            params: json!({ "omega": omega, "Omega": cap, "din": din, "dout": l0.dout(), "estimate": est.lower_bound, "rhs": rhs }),
        }))
    })
}

/// Random measure-and-prepare channel with `outcomes` effects.
pub fn random_measure_prepare<R: Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    outcomes: usize,
) -> Result<MeasurePrepare> {
    let povm = random::random_povm(rng, din, outcomes);
    let states = (0..outcomes)
        .map(|_| {
            let rank = random_rank(rng, dout);
            random::random_density(rng, dout, rank)
        })
        .collect();
    MeasurePrepare::from_povm(povm, states)
}

/// `I(A:B) ≤ ς(ω)` bits for modified Choi states of measure-and-prepare channels.
pub fn check_mutual_info_bound(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    let omega = 1.0;
    let (_, s) = gibbs_entropy_nats(omega)?;
    let varsigma = s / std::f64::consts::LN_2;
    run_trials("mutual-info", trials, seed, tol, |i, rng| {
        let din = rng.random_range(2..=4);
        let dout = rng.random_range(2..=4);
        let outcomes = if i == 0 { 1 } else { rng.random_range(2..=4) };
        let mp = random_measure_prepare(rng, din, dout, outcomes)?;
        let ch = mp.to_channel()?;
        let j = modified_choi(&ch, omega, din)?;
        let info = mutual_information(&j.state, (din, dout))?;
        Ok(Some(TrialOutcome {
            slack: varsigma + 1e-6 - info,
            residual: if outcomes == 1 { info.abs() } else { 0.0 },
            violation: false,
            params: json!({ "omega": omega, "din": din, "dout": dout, "outcomes": outcomes, "information": info }),
        }))
    })
}

/// Homogeneity and the triangle inequality at fixed feasible inputs, and a
/// nonzero positivity witness for nonzero differences.
pub fn check_norm_axioms(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    run_trials("norm-axioms", trials, seed, tol, |i, rng| {
        let din = rng.random_range(2..=3);
        let dout = rng.random_range(2..=3);
        let (a, b) = random_pair(rng, din, dout)?;
        let (c, e) = random_pair(rng, din, dout)?;
        let d0 = ChannelCombination::difference(&a, &b)?;
        let d1 = if i == 1 {
            ChannelCombination::difference(&c, &c)?
        } else {
            ChannelCombination::difference(&c, &e)?
        };
        let scale = if i == 0 { -1.0 } else { rng.random_range(-3.0..3.0) };
        let nbar = 0.1 + rng.random::<f64>() * (din - 1) as f64;
        let constraint = InputConstraint::Energy { nbar };
        let rho = constraint.project(&density_from(&random::ginibre(rng, din, din)));

        let n0 = output_norm(&d0, &rho);
        let n1 = output_norm(&d1, &rho);
        let scaled = output_norm(&d0.scaled(scale), &rho);
        let sum = output_norm(&d0.plus(&d1)?, &rho);
        let homogeneity = (scaled - scale.abs() * n0).abs();
        let triangle = n0 + n1 - sum;
        let witness = positivity_witness(&d0, nbar);
        Ok(Some(TrialOutcome {
            slack: triangle,
            residual: homogeneity,
            violation: !(witness > 0.0),
            params: json!({ "din": din, "dout": dout, "scale": scale, "nbar": nbar, "witness": witness }),
        }))
    })
}

/// Measure-and-prepare construction: effect completeness and positivity,
/// `J(E_j) = Σ_z Tr_B ρ^z ⊗ ρ_{B_j}^z`, equal reference marginals, and a
/// positive partial transpose of `J(E_j)`.
pub fn check_measure_prepare(trials: usize, seed: u64, tol: Tolerances) -> Result<LemmaReport> {
    run_trials("measure-prepare", trials, seed, tol, |_, rng| {
        let omega = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let din = rng.random_range(2..=3);
        let nfrag = rng.random_range(2..=3);
        let frag_dims = vec![2usize; nfrag];
        let dout: usize = frag_dims.iter().product();
        let kraus = rng.random_range(1..=2);
        let ch = random_channel_with(rng, din, dout, kraus)?;
        let target = rng.random_range(0..nfrag);
        let mut conditioning = Vec::new();
        for k in (0..nfrag).filter(|&k| k != target) {
            if rng.random::<f64>() < 0.7 {
                let povm = if rng.random::<bool>() {
                    random::random_projective_povm(rng, 2)
                } else {
                    random::random_povm(rng, 2, 3)
                };
                conditioning.push(ConditioningMeasurement { fragment: k, povm });
            }
        }
        let mp = build_measure_prepare(&ch, omega, &frag_dims, target, &conditioning)?;
        let completeness = mp.completeness_residual();
        let min_effect = mp.effects().iter().map(FockOperator::min_eigenvalue).fold(f64::INFINITY, f64::min);

        let e = mp.to_channel()?;
        let j_e = modified_choi(&e, omega, din)?;
        let dj = frag_dims[target];
        let mut direct = CMatrix::zeros(din * dj, din * dj);
        let choi = modified_choi(&ch, omega, din)?;
        let mut dims = vec![din];
        dims.extend_from_slice(&frag_dims);
        let counts: Vec<usize> = conditioning.iter().map(|c| c.povm.len()).collect();
        for (z, sigma) in mp.prepared_states().iter().enumerate() {
            let mut rem = z;
            let mut insert = Vec::new();
            for (c, &n) in conditioning.iter().zip(&counts).rev() {
                insert.push((1 + c.fragment, c.povm[rem % n].matrix()));
                rem /= n;
            }
            let rho_z = fock::reduce(choi.state.matrix(), &dims, &[0, 1 + target], &insert)?;
            let a = FockOperator::new(rho_z)?.partial_trace((din, dj), Subsystem::First)?;
            direct += a.matrix().kronecker(sigma.matrix());
        }
        let identity = (j_e.state.matrix() - &direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let marg_e = j_e.state.operator().partial_trace((din, dj), Subsystem::First)?;
        let marg_l = fock::reduce(choi.state.matrix(), &dims, &[0], &[])?;
        let marginal = (marg_e.matrix() - marg_l).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ppt = j_e.state.operator().partial_transpose((din, dj), Subsystem::First)?.min_eigenvalue();
        Ok(Some(TrialOutcome {
            slack: ppt.min(min_effect),
            residual: completeness.max(identity).max(marginal),
            violation: false,
            params: json!({
                "omega": omega, "din": din, "fragments": nfrag, "target": target,
                "conditioned": conditioning.iter().map(|c| c.fragment).collect::<Vec<_>>(),
                "completeness": completeness, "identity": identity, "marginal": marginal, "ppt_min": ppt,
            }),
        }))
    })
}

pub const SUITES: [&str; 8] = [
    "gentle",
    "fock-truncation",
    "cj-truncation",
    "trunc-lemma2",
    "expcut",
    "mutual-info",
    "norm-axioms",
    "measure-prepare",
];

/// Runs one suite by id, or every suite for `"all"`.
pub fn run_suite(id: &str, trials: usize, seed: u64, tol: Tolerances) -> Result<Vec<LemmaReport>> {
    let one = |name: &str| -> Result<LemmaReport> {
        match name {
            "gentle" => check_gentle_measurement(trials, 4, seed, tol),
            "fock-truncation" => check_fock_truncation(trials, (4, 3), seed, tol),
            "cj-truncation" => check_cj_truncation(trials, seed, tol),
            "trunc-lemma2" => check_trunc_lemma2(trials, seed, tol),
            "expcut" => check_expcut_lemma(trials, seed, tol),
            "mutual-info" => check_mutual_info_bound(trials, seed, tol),
            "norm-axioms" => check_norm_axioms(trials, seed, tol),
            "measure-prepare" => check_measure_prepare(trials, seed, tol),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    };
    if id == "all" {
        SUITES.iter().map(|s| one(s)).collect()
    } else {
        Ok(vec![one(id)?])
    }
}
