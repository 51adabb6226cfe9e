//! Closed-form bound expressions, evaluated in log domain so that fragment
//! counts up to `10^300` stay finite.
//!
//! Natural logarithms are used throughout; `ln 2 · log₂ x = ln x`.

use serde::{Deserialize, Serialize};

use crate::count::FragmentCount;
use crate::error::{Error, Result};

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

fn check_nbar(nbar: f64) -> Result<()> {
    check_finite("nbar", nbar)?;
    if nbar < 0.0 {
        return Err(Error::InvalidParameter(format!("nbar must be non-negative, got {nbar}")));
    }
    Ok(())
}

fn check_count(n: FragmentCount) -> Result<()> {
    if n.ln() < 0.0 {
        return Err(Error::InvalidParameter(format!("N must be at least 1, got {n}")));
    }
    Ok(())
}

fn check_dim_real(d: f64) -> Result<()> {
    check_finite("d", d)?;
    if d < 2.0 {
        return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    Ok(())
}

fn energy_term(nbar: f64, d: f64) -> f64 {
    4.0 * (nbar / d).sqrt()
}

/// `ζ = √(2 d⁶ ln d / m) + 4√(n̄/d) + 2m/N`.
pub fn thm1_zeta(d: u64, m: f64, nbar: f64, n: FragmentCount) -> Result<f64> {
    thm1_zeta_real(d as f64, m, nbar, n)
}

/// Real-`d` form of [`thm1_zeta`].
pub fn thm1_zeta_real(d: f64, m: f64, nbar: f64, n: FragmentCount) -> Result<f64> {
    check_dim_real(d)?;
    check_nbar(nbar)?;
    check_count(n)?;
    check_finite("m", m)?;
    if m < 1.0 {
        return Err(Error::InvalidParameter(format!("m must be at least 1, got {m}")));
    }
    let measurement = (0.5 * (2f64.ln() + 6.0 * d.ln() + d.ln().ln() - m.ln())).exp();
    let sampling = (2f64.ln() + m.ln() - n.ln()).exp();
    Ok(measurement + energy_term(nbar, d) + sampling)
}

/// Stationary point `(c N²/16)^{1/3}`, `c = 2 d⁶ ln d`, of `√(c/m) + 2m/N`.
pub fn thm1_m_opt(d: u64, n: FragmentCount) -> Result<f64> {
    let d = d as f64;
    check_dim_real(d)?;
    let ln_c = 2f64.ln() + 6.0 * d.ln() + d.ln().ln();
    Ok(((ln_c + 2.0 * n.ln() - 16f64.ln()) / 3.0).exp())
}

/// The `m`-optimised objective `4√(n̄/d) + (27 d⁶ ln d / N)^{1/3}`.
pub fn thm1_f(d: u64, nbar: f64, n: FragmentCount) -> Result<f64> {
    thm1_f_real(d as f64, nbar, n)
}

/// Real-`d` form of [`thm1_f`].
pub fn thm1_f_real(d: f64, nbar: f64, n: FragmentCount) -> Result<f64> {
    check_dim_real(d)?;
    check_nbar(nbar)?;
    check_count(n)?;
    let cube = ((27f64.ln() + 6.0 * d.ln() + d.ln().ln() - n.ln()) / 3.0).exp();
    Ok(energy_term(nbar, d) + cube)
}

/// `4√(n̄/d) + (27 d⁷/N)^{1/3}`, the objective after `ln d ≤ d`.
pub fn thm1_relaxed_real(d: f64, nbar: f64, n: FragmentCount) -> Result<f64> {
    check_finite("d", d)?;
    if d <= 0.0 {
        return Err(Error::InvalidParameter(format!("d must be positive, got {d}")));
    }
    check_nbar(nbar)?;
    check_count(n)?;
    let cube = ((27f64.ln() + 7.0 * d.ln() - n.ln()) / 3.0).exp();
    Ok(energy_term(nbar, d) + cube)
}

/// Minimiser of [`thm1_relaxed_real`] over `d > 0`:
/// `d^{17/6} = (2/7) n̄^{1/2} N^{1/3}`.
pub fn thm1_relaxed_argmin(nbar: f64, n: FragmentCount) -> Result<f64> {
    check_nbar(nbar)?;
    check_count(n)?;
    if nbar == 0.0 {
        return Ok(0.0);
    }
    let ln = (2f64 / 7.0).ln() + 0.5 * nbar.ln() + n.ln() / 3.0;
    Ok((6.0 / 17.0 * ln).exp())
}

/// `17 (2/7)^{14/17}`.
pub fn thm1_coefficient() -> f64 {
    (17f64.ln() + 14.0 / 17.0 * (2f64 / 7.0).ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBound {
    pub value: f64,
    /// Set when `n̄ = 0`, where the expression collapses to its limit 0.
    pub degenerate: bool,
}

/// `17 (2/7)^{14/17} (n̄⁷/N)^{1/17}`, before division by δ.
///
/// This is the exact minimum of [`thm1_relaxed_real`] over real `d > 0`;
/// the minimiser lies below 2 for small `N`.
pub fn thm1_analytic(nbar: f64, n: FragmentCount) -> Result<AnalyticBound> {
    check_nbar(nbar)?;
    check_count(n)?;
    if nbar == 0.0 {
        return Ok(AnalyticBound { value: 0.0, degenerate: true });
    }
    let ln = thm1_coefficient().ln() + (7.0 * nbar.ln() - n.ln()) / 17.0;
    Ok(AnalyticBound { value: ln.exp(), degenerate: false })
}

/// Mean photon number `ñ = 1/(e^ω − 1)` and entropy
/// `s = (ñ+1) ln(ñ+1) − ñ ln ñ` (nats) of the Gibbs state.
pub fn gibbs_entropy_nats(omega: f64) -> Result<(f64, f64)> {
    check_finite("omega", omega)?;
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let n = 1.0 / omega.exp_m1();
    let s = if n > 0.0 { (n + 1.0) * n.ln_1p() - n * n.ln() } else { 0.0 };
    Ok((n, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Intermediates {
    pub d_tilde: f64,
    pub n_tilde: f64,
    /// Gibbs entropy in nats.
    pub s: f64,
    /// Gibbs entropy in bits.
    pub varsigma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

fn check_cutoff(omega: f64, omega_cap: f64) -> Result<()> {
    check_finite("omega", omega)?;
    check_finite("Omega", omega_cap)?;
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    if omega_cap <= 1.0 {
        return Err(Error::InvalidParameter(format!("Omega must exceed 1, got {omega_cap}")));
    }
    Ok(())
}

/// `d̃ = Ω e^ω/(e^ω − 1)`, `γ₁ = 2 d̃² s/(3ω⁴)`, `γ₂ = 3 d̃ ω⁴/(16 s)`.
pub fn thm2_intermediates(omega: f64, omega_cap: f64) -> Result<Thm2Intermediates> {
    check_cutoff(omega, omega_cap)?;
    let (n_tilde, s) = gibbs_entropy_nats(omega)?;
    if s <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega = {omega} leaves no Gibbs entropy")));
    }
    let d_tilde = omega_cap / -(-omega).exp_m1();
    let w4 = omega.powi(4);
    Ok(Thm2Intermediates {
        d_tilde,
        n_tilde,
        s,
        varsigma: s / std::f64::consts::LN_2,
        gamma1: 2.0 * d_tilde * d_tilde * s / (3.0 * w4),
        gamma2: 3.0 * d_tilde * w4 / (16.0 * s),
    })
}

/// `ζ = (27 d̃² d⁴ s / N)^{1/3} + 4 d̃ e^{−ωd/2}`.
pub fn thm2_zeta(d: u64, omega: f64, omega_cap: f64, n: FragmentCount) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    thm2_zeta_real(d as f64, omega, omega_cap, n)
}

/// Real-`d` form of [`thm2_zeta`].
pub fn thm2_zeta_real(d: f64, omega: f64, omega_cap: f64, n: FragmentCount) -> Result<f64> {
    check_finite("d", d)?;
    if d <= 0.0 {
        return Err(Error::InvalidParameter(format!("d must be positive, got {d}")));
    }
    check_count(n)?;
    let k = thm2_intermediates(omega, omega_cap)?;
    Ok(thm2_zeta_with(&k, d, omega, n))
}

pub(crate) fn thm2_zeta_with(k: &Thm2Intermediates, d: f64, omega: f64, n: FragmentCount) -> f64 {
    let first = ((27f64.ln() + 2.0 * k.d_tilde.ln() + 4.0 * d.ln() + k.s.ln() - n.ln()) / 3.0).exp();
    let tail = (4f64.ln() + k.d_tilde.ln() - 0.5 * omega * d).exp();
    first + tail
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DMin {
    /// `2 W(γ₂ N)/(3ω)`, the exact stationary point of the real-`d` objective.
    pub lambert: f64,
    /// `2 ln(γ₂ N)/(3ω)`.
    pub log_approx: f64,
    /// `ln(γ₂ N)`, the log of the Lambert-W argument.
    pub ln_argument: f64,
}

/// Stationary truncation of [`thm2_zeta_real`]. The W argument
/// `81 B³ N ω⁴/(1024 A³)` with `A = (27 d̃² s)^{1/3}`, `B = 4 d̃` equals `γ₂ N`.
pub fn thm2_dmin(omega: f64, omega_cap: f64, n: FragmentCount) -> Result<DMin> {
    check_count(n)?;
    let k = thm2_intermediates(omega, omega_cap)?;
    let ln_x = k.gamma2.ln() + n.ln();
    let w = lambert_w0_ln(ln_x)?;
    Ok(DMin {
        lambert: 2.0 * w / (3.0 * omega),
        log_approx: 2.0 * ln_x / (3.0 * omega),
        ln_argument: ln_x,
    })
}

/// `8 (γ₁/N)^{1/3} [1 + ¼ (ln γ₂N)^{4/3}]`, before division by δ.
pub fn thm2_closed(omega: f64, omega_cap: f64, n: FragmentCount) -> Result<f64> {
    check_count(n)?;
    let k = thm2_intermediates(omega, omega_cap)?;
    thm2_closed_from(k.gamma1, k.gamma2, n)
}

/// [`thm2_closed`] in terms of the intermediates alone.
pub fn thm2_closed_from(gamma1: f64, gamma2: f64, n: FragmentCount) -> Result<f64> {
    if !(gamma1 > 0.0 && gamma2 > 0.0) {
        return Err(Error::InvalidParameter("gamma1 and gamma2 must be positive".into()));
    }
    let l = gamma2.ln() + n.ln();
    if l <= 0.0 {
        return Err(Error::DomainTooSmall(format!(
            "closed form needs gamma2 * N > 1, got ln(gamma2 N) = {l}"
        )));
    }
    let scale = (8f64.ln() + (gamma1.ln() - n.ln()) / 3.0).exp();
    Ok(scale * (1.0 + 0.25 * l.powf(4.0 / 3.0)))
}

/// Principal branch of the Lambert W function, by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if x.is_nan() || x < branch {
        return Err(Error::Domain(format!("Lambert W0 is undefined at {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x - branch < 1e-300 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.32 {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p() * (1.0 - 0.25 * x.ln_1p() / (1.0 + x.ln_1p()))
    } else {
        let l = x.ln();
        l - l.ln() + l.ln() / l
    };
    for _ in 0..64 {
        let e = w.exp();
        let f = w * e - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = e * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `W(e^{ln_x})` without forming `e^{ln_x}`; solves `w + ln w = ln_x` for
/// large arguments.
pub fn lambert_w0_ln(ln_x: f64) -> Result<f64> {
    if ln_x.is_nan() {
        return Err(Error::Domain("Lambert W0 argument is NaN".into()));
    }
    if ln_x < 700.0 {
        return lambert_w0(ln_x.exp());
    }
    let mut w = ln_x - ln_x.ln();
    for _ in 0..64 {
        let f = w + w.ln() - ln_x;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}

/// How a [`BoundResult`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaTag {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// `zeta / δ`.
    pub value: f64,
    pub zeta: f64,
    pub d: Option<u64>,
    pub m: Option<u64>,
    pub formula: FormulaTag,
}

impl BoundResult {
    pub fn new(zeta: f64, delta: f64, d: Option<u64>, m: Option<u64>, formula: FormulaTag) -> Self {
        Self { value: zeta / delta, zeta, d, m, formula }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm1Query {
    pub nbar: f64,
    pub n: FragmentCount,
    pub delta: f64,
    pub d: Option<u64>,
    pub m: Option<u64>,
}

impl Thm1Query {
    pub fn validate(&self) -> Result<()> {
        check_nbar(self.nbar)?;
        check_count(self.n)?;
        check_delta(self.delta)?;
        if matches!(self.d, Some(d) if d < 2) {
            return Err(Error::InvalidParameter("d must be at least 2".into()));
        }
        if matches!(self.m, Some(0)) {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if self.m.is_some() && self.d.is_none() {
            return Err(Error::InvalidParameter("m requires d".into()));
        }
        Ok(())
    }

    /// With `d` and `m`: ζ itself. With `d` only: the `m`-optimised form.
    /// Otherwise the analytic closed form.
    pub fn evaluate(&self) -> Result<BoundResult> {
        self.validate()?;
        let r = match (self.d, self.m) {
            (Some(d), Some(m)) => BoundResult::new(
                thm1_zeta(d, m as f64, self.nbar, self.n)?,
                self.delta,
                Some(d),
                Some(m),
                FormulaTag::Numeric,
            ),
            (Some(d), None) => {
                BoundResult::new(thm1_f(d, self.nbar, self.n)?, self.delta, Some(d), None, FormulaTag::Numeric)
            }
            _ => BoundResult::new(
                thm1_analytic(self.nbar, self.n)?.value,
                self.delta,
                None,
                None,
                FormulaTag::Analytic,
            ),
        };
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Query {
    pub omega: f64,
    pub omega_cap: f64,
    pub n: FragmentCount,
    pub delta: f64,
    pub d: Option<u64>,
}

impl Thm2Query {
    pub fn validate(&self) -> Result<()> {
        check_cutoff(self.omega, self.omega_cap)?;
        check_count(self.n)?;
        check_delta(self.delta)?;
        if matches!(self.d, Some(0)) {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        Ok(())
    }

    /// With `d`: ζ itself; otherwise the closed form.
    pub fn evaluate(&self) -> Result<BoundResult> {
        self.validate()?;
        match self.d {
            Some(d) => Ok(BoundResult::new(
                thm2_zeta(d, self.omega, self.omega_cap, self.n)?,
                self.delta,
                Some(d),
                None,
                FormulaTag::Numeric,
            )),
            None => Ok(BoundResult::new(
                thm2_closed(self.omega, self.omega_cap, self.n)?,
                self.delta,
                None,
                None,
                FormulaTag::Analytic,
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn n(x: f64) -> FragmentCount {
        FragmentCount::from_f64(x).unwrap()
    }

    #[test]
    fn thm1_zeta_scalar() {
        let z = thm1_zeta(2, 176.0, 1.0, n(1000.0)).unwrap();
        let direct = (128.0 * 2f64.ln() / 176.0).sqrt() + 4.0 / 2f64.sqrt() + 0.352;
        assert_relative_eq!(z, direct, max_relative = 1e-14);
        assert!((z - 3.8905).abs() < 1e-4);
        assert!(matches!(thm1_zeta(1, 1.0, 1.0, n(10.0)), Err(Error::InvalidParameter(_))));
        assert!(thm1_zeta(2, 0.5, 1.0, n(10.0)).is_err());
    }

    #[test]
    fn natural_log_convention() {
        for d in 2..=50u64 {
            let df = d as f64;
            let base2 = (2.0 * 2f64.ln() * df.powi(6) * df.log2() / 7.0).sqrt() + 4.0 * (1.5 / df).sqrt() + 14.0 / 1e4;
            let ours = thm1_zeta(d, 7.0, 1.5, n(1e4)).unwrap();
            assert_relative_eq!(ours, base2, max_relative = 1e-13);
        }
    }

    #[test]
    fn thm1_zeta_limits() {
        let z = thm1_zeta(3, 1e200, 0.0, FragmentCount::pow10(300)).unwrap();
        assert!(z < 1e-80);
        let a = thm1_zeta(3, 10.0, 1.0, n(1e3)).unwrap();
        let b = thm1_zeta(3, 10.0, 1.0, n(1e4)).unwrap();
        assert!(b < a);
    }

    #[test]
    fn m_opt_matches_integer_grid() {
        let m = thm1_m_opt(2, n(1000.0)).unwrap();
        let best = (1..=2000u64)
            .min_by(|&a, &b| {
                let za = thm1_zeta(2, a as f64, 1.0, n(1000.0)).unwrap();
                let zb = thm1_zeta(2, b as f64, 1.0, n(1000.0)).unwrap();
                za.partial_cmp(&zb).unwrap()
            })
            .unwrap();
        assert!((m - best as f64).abs() <= 1.0, "m_opt {m} vs grid {best}");
        let c = 2.0 * 64.0 * 2f64.ln();
        assert_relative_eq!(thm1_m_opt(2, n(4.0 / c.sqrt())).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn m_opt_scales_as_two_thirds() {
        let a = thm1_m_opt(4, FragmentCount::pow10(30)).unwrap();
        let b = thm1_m_opt(4, FragmentCount::pow10(33)).unwrap();
        assert_relative_eq!(b / a, 100.0, max_relative = 1e-10);
    }

    #[test]
    fn thm1_f_is_zeta_at_m_opt() {
        for &(d, nn) in &[(2u64, 1e3), (5, 1e9), (17, 1e25), (300, 1e60)] {
            let m = thm1_m_opt(d, n(nn)).unwrap();
            let f = thm1_f(d, 1.0, n(nn)).unwrap();
            let z = thm1_zeta(d, m, 1.0, n(nn)).unwrap();
            assert_relative_eq!(f, z, max_relative = 1e-12);
        }
    }

    #[test]
    fn thm1_f_large_values() {
        let v = thm1_f(10_000_000, 1.0, FragmentCount::pow10(60)).unwrap();
        let energy = 4.0 * 10f64.powf(-3.5);
        let cube = (27.0 * 1e42 * 1e7f64.ln() / 1e60).cbrt();
        assert_relative_eq!(v, energy + cube, max_relative = 1e-12);
        assert!((v - 1.2725e-3).abs() < 1e-7);
        let e = thm1_f_real(std::f64::consts::E, 1.0, n(1e6)).unwrap();
        let expect = 4.0 / std::f64::consts::E.sqrt() + (27.0 * std::f64::consts::E.powi(6) / 1e6).cbrt();
        assert_relative_eq!(e, expect, max_relative = 1e-12);
    }

    #[test]
    fn relaxation_is_conservative() {
        for d in 2..200u64 {
            let f = thm1_f(d, 1.0, n(1e20)).unwrap();
            let r = thm1_relaxed_real(d as f64, 1.0, n(1e20)).unwrap();
            assert!(f <= r);
        }
    }

    #[test]
    fn analytic_coefficient_and_values() {
        let c = thm1_coefficient();
        assert!((6.05..=6.07).contains(&c), "{c}");
        let v = thm1_analytic(1.0, FragmentCount::pow10(17)).unwrap();
        assert!((v.value - 0.60588).abs() < 5e-5);
        assert_relative_eq!(v.value, c / 10.0, max_relative = 1e-14);
        let a = thm1_analytic(1.0, n(1e20)).unwrap().value;
        let b = thm1_analytic(1.0, n(1e20 * 131072.0)).unwrap().value;
        assert_relative_eq!(b / a, 0.5, max_relative = 1e-12);
        let z = thm1_analytic(0.0, n(10.0)).unwrap();
        assert!(z.degenerate && z.value == 0.0);
        let huge = thm1_analytic(1.0, FragmentCount::pow10(300)).unwrap();
        assert!(huge.value.is_finite() && huge.value > 0.0);
    }

    #[test]
    fn analytic_is_relaxed_minimum() {
        for &nn in &[1e12, 1e30, 1e60, 1e200] {
            let d = thm1_relaxed_argmin(1.0, n(nn)).unwrap();
            let at = thm1_relaxed_real(d, 1.0, n(nn)).unwrap();
            let a = thm1_analytic(1.0, n(nn)).unwrap().value;
            assert_relative_eq!(at, a, max_relative = 1e-12);
            for k in [0.9, 0.99, 1.01, 1.1] {
                assert!(thm1_relaxed_real(d * k, 1.0, n(nn)).unwrap() >= a - 1e-12);
            }
        }
    }

    #[test]
    fn gibbs_entropy_values() {
        let (nt, s) = gibbs_entropy_nats(1.0).unwrap();
        assert!((nt - 0.581977).abs() < 1e-6);
        assert!((s - 1.040652).abs() < 1e-6);
        let (_, s) = gibbs_entropy_nats(60.0).unwrap();
        assert!((0.0..1e-24).contains(&s));
        let (_, s) = gibbs_entropy_nats(800.0).unwrap();
        assert_eq!(s, 0.0);
        assert!(gibbs_entropy_nats(0.0).is_err());
    }

    #[test]
    fn thm2_intermediate_values() {
        let k = thm2_intermediates(1.0, 2.0).unwrap();
        assert!((k.d_tilde - 3.16395).abs() < 1e-5);
        assert!((k.gamma1 - 6.945).abs() < 1e-3);
        assert!((k.gamma2 - 0.57005).abs() < 5e-5);
        assert_relative_eq!(k.s, std::f64::consts::LN_2 * k.varsigma, max_relative = 1e-15);
        assert!(k.d_tilde > 2.0);
        assert!(thm2_intermediates(1.0, 1.0).is_err());
        assert!(thm2_intermediates(-1.0, 2.0).is_err());
    }

    #[test]
    fn thm2_zeta_direct() {
        let k = thm2_intermediates(0.7, 3.0).unwrap();
        let d: f64 = 12.0;
        let direct = (27.0 * k.d_tilde.powi(2) * d.powi(4) * k.s / 1e9).cbrt() + 4.0 * k.d_tilde * (-0.35 * d).exp();
        assert_relative_eq!(thm2_zeta(12, 0.7, 3.0, n(1e9)).unwrap(), direct, max_relative = 1e-12);
        let far = thm2_zeta(1_000_000, 0.7, 3.0, n(1e9)).unwrap();
        assert!(far > 1e3);
        assert!(thm2_zeta(0, 0.7, 3.0, n(1e9)).is_err());
    }

    #[test]
    fn dmin_is_stationary() {
        for &(w, c, nn) in &[(1.0, 2.0, 1e10), (0.3, 4.0, 1e29), (2.0, 1.5, 1e60), (0.1, 10.0, 1e200)] {
            let dm = thm2_dmin(w, c, n(nn)).unwrap();
            let d = dm.lambert;
            let h = 1e-5 * d;
            let g = |x: f64| thm2_zeta_real(x, w, c, n(nn)).unwrap();
            let deriv = (g(d + h) - g(d - h)) / (2.0 * h);
            let scale = g(d) / d;
            assert!((deriv / scale).abs() < 1e-6, "stationarity {}", deriv / scale);
        }
    }

    #[test]
    fn dmin_log_approx_and_monotone() {
        let dm = thm2_dmin(1.0, 2.0, n(1e60)).unwrap();
        assert!((dm.log_approx - dm.lambert).abs() / dm.lambert < 0.05);
        let a = thm2_dmin(1.0, 2.0, n(1e20)).unwrap().lambert;
        let b = thm2_dmin(1.0, 2.0, n(1e21)).unwrap().lambert;
        assert!(b > a);
    }

    #[test]
    fn closed_form_identities() {
        let v = thm2_closed_from(1e10, std::f64::consts::E / 1e10, n(1e10)).unwrap();
        assert_relative_eq!(v, 10.0, max_relative = 1e-12);
        assert!(matches!(thm2_closed(1.0, 2.0, n(1.0)), Err(Error::DomainTooSmall(_))));
        let dm = thm2_dmin(0.5, 3.0, n(1e40)).unwrap();
        let at = thm2_zeta_real(dm.log_approx, 0.5, 3.0, n(1e40)).unwrap();
        assert_relative_eq!(thm2_closed(0.5, 3.0, n(1e40)).unwrap(), at, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_scaling() {
        let model = |nn: f64| {
            let l = nn * 10f64.ln();
            thm2_closed(1.0, 2.0, FragmentCount::from_log10(nn).unwrap()).unwrap() / (l.powf(4.0 / 3.0) * 10f64.powf(-nn / 3.0))
        };
        let ratio = model(60.0) / model(40.0);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn closed_form_dominates_integer_minimum() {
        let mut rng = crate::random::rng(11);
        use rand::Rng;
        for _ in 0..50 {
            let w = rng.random_range(0.05..2.0);
            let c = rng.random_range(1.1..20.0);
            let nn = FragmentCount::from_log10(rng.random_range(6.0..60.0)).unwrap();
            let Ok(closed) = thm2_closed(w, c, nn) else { continue };
            let dm = thm2_dmin(w, c, nn).unwrap().lambert;
            let centre = dm.round().max(1.0) as u64;
            let best = (centre.saturating_sub(50).max(1)..centre + 50)
                .map(|d| thm2_zeta(d, w, c, nn).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= closed + 1e-12, "w {w} c {c} N {nn}: {best} > {closed}");
        }
    }

    #[test]
    fn lambert_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_relative_eq!(lambert_w0(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-15);
        let w1 = lambert_w0(1.0).unwrap();
        assert!((w1 - 0.567143).abs() < 1e-6);
        assert!((w1 * w1.exp() - 1.0).abs() < 1e-15);
        assert_relative_eq!(lambert_w0(-(-1f64).exp()).unwrap(), -1.0, epsilon = 1e-7);
        assert!(matches!(lambert_w0(-0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn lambert_residual_grid() {
        for k in 0..=360 {
            let x = 10f64.powf(-6.0 + k as f64 / 10.0);
            let w = lambert_w0(x).unwrap();
            let r = (w * w.exp() - x).abs();
            assert!(r <= 1e-12 * x.max(1.0), "x {x}: residual {r}");
        }
        for x in [-0.36, -0.3, -0.1, -1e-8] {
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn lambert_log_form() {
        let w = lambert_w0_ln(5000.0).unwrap();
        assert!((w + w.ln() - 5000.0).abs() < 1e-12);
        assert_relative_eq!(lambert_w0_ln(10.0).unwrap(), lambert_w0(10f64.exp()).unwrap());
    }

    #[test]
    fn queries() {
        let q = Thm1Query { nbar: 1.0, n: FragmentCount::pow10(60), delta: 0.01, d: None, m: None };
        let r = q.evaluate().unwrap();
        assert!((r.value - 0.1791).abs() < 1e-3);
        assert_eq!(r.formula, FormulaTag::Analytic);
        let q = Thm1Query { d: Some(2), m: Some(176), n: n(1000.0), ..q };
        assert!((q.evaluate().unwrap().zeta - 3.8905).abs() < 1e-4);
        assert!(Thm1Query { delta: 1.5, ..q }.validate().is_err());
        let t = Thm2Query { omega: 1.0, omega_cap: 2.0, n: n(1e30), delta: 0.01, d: None };
        assert!(t.evaluate().unwrap().value > 0.0);
        assert!(Thm2Query { omega_cap: 0.5, ..t }.evaluate().is_err());
    }
}
