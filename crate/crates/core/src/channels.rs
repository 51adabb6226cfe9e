//! Quantum channels in Kraus form, their Choi-type states and the
//! measure-and-prepare construction.
//!
//! Bipartite inputs live on `R ⊗ S` with the channel acting on the second
//! factor `S`; Choi-type states therefore live on `R ⊗ B`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, two_mode_squeezed, CMatrix, FockOperator, FockState, Subsystem};
use crate::random;

/// Trace-preservation tolerance on `Σ K†K - I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A completely positive trace-preserving map given by Kraus operators
/// `K_k: din → dout`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    din: usize,
    dout: usize,
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
        let (dout, din) = first.shape();
        if din == 0 || dout == 0 {
            return Err(Error::Shape("Kraus operators must be non-empty".into()));
        }
        if kraus.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::Shape("Kraus operators differ in shape".into()));
        }
        if kraus.iter().flat_map(|k| k.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidOperator("non-finite Kraus entry".into()));
        }
        let ch = Self { din, dout, kraus };
        let residual = ch.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(Error::InvalidParameter(format!(
                "Kraus operators are not trace preserving (residual {residual:e})"
            )));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self { din: dim, dout: dim, kraus: vec![CMatrix::identity(dim, dim)] }
    }

    /// Full dephasing in the Fock basis, Kraus `{|i⟩⟨i|}`.
    pub fn full_dephasing(dim: usize) -> Self {
        let kraus = (0..dim)
            .map(|i| {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, i)] = Complex64::new(1.0, 0.0);
                k
            })
            .collect();
        Self { din: dim, dout: dim, kraus }
    }

    /// `X ↦ Tr(X) I/dout`.
    pub fn completely_depolarizing(din: usize, dout: usize) -> Self {
        let amp = Complex64::new((1.0 / dout as f64).sqrt(), 0.0);
        let mut kraus = Vec::with_capacity(din * dout);
        for a in 0..dout {
            for i in 0..din {
                let mut k = CMatrix::zeros(dout, din);
                k[(a, i)] = amp;
                kraus.push(k);
            }
        }
        Self { din, dout, kraus }
    }

    /// `X ↦ V X V†` for an isometry `V`.
    pub fn from_isometry(v: CMatrix) -> Result<Self> {
        Self::new(vec![v])
    }

    /// `|i⟩ ↦ |i⟩^{⊗copies}`, the classical broadcast channel.
    pub fn broadcast(dim: usize, copies: u32) -> Result<Self> {
        let dout = dim.pow(copies);
        let mut v = CMatrix::zeros(dout, dim);
        for i in 0..dim {
            let idx: usize = (0..copies).fold(0, |acc, _| acc * dim + i);
            v[(idx, i)] = Complex64::new(1.0, 0.0);
        }
        Self::from_isometry(v)
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `max |Σ K†K - I|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let mut s = CMatrix::zeros(self.din, self.din);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        s -= CMatrix::identity(self.din, self.din);
        max_abs(&s)
    }

    /// `Σ K X K†` for an arbitrary operator.
    pub fn apply_operator(&self, x: &FockOperator) -> Result<FockOperator> {
        if x.dim() != self.din {
            return Err(Error::Shape(format!(
                "channel input dimension {} but operator dimension {}",
                self.din,
                x.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.dout, self.dout);
        for k in &self.kraus {
            out += k * x.matrix() * k.adjoint();
        }
        FockOperator::new(out)
    }

    pub fn apply(&self, rho: &FockState) -> Result<FockState> {
        let out = self.apply_operator(rho.operator())?;
        FockState::new(out.hermitian_part())
    }

    /// `(id_R ⊗ Λ)(X)` for `X` on `R ⊗ S`.
    pub fn apply_on_second(&self, x: &FockOperator, dim_ref: usize) -> Result<FockOperator> {
        if x.dim() != dim_ref * self.din {
            return Err(Error::Shape(format!(
                "bipartite operator of dimension {} does not match {dim_ref}x{}",
                x.dim(),
                self.din
            )));
        }
        let id = CMatrix::identity(dim_ref, dim_ref);
        let mut out = CMatrix::zeros(dim_ref * self.dout, dim_ref * self.dout);
        for k in &self.kraus {
            let big = id.kronecker(k);
            out += &big * x.matrix() * big.adjoint();
        }
        FockOperator::new(out)
    }

    /// `(id_R ⊗ Λ)(|v⟩⟨v|)` for a vector `v` on `R ⊗ S`.
    pub fn apply_to_pure_on_second(&self, v: &DVector<Complex64>, dim_ref: usize) -> Result<CMatrix> {
        if v.len() != dim_ref * self.din {
            return Err(Error::Shape(format!(
                "vector of length {} does not match {dim_ref}x{}",
                v.len(),
                self.din
            )));
        }
        let coeff = DMatrix::from_fn(dim_ref, self.din, |i, j| v[i * self.din + j]);
        let mut out = CMatrix::zeros(dim_ref * self.dout, dim_ref * self.dout);
        for k in &self.kraus {
            // (I ⊗ K)|v⟩ has coefficient matrix C Kᵀ
            let w = &coeff * k.transpose();
            let flat = DVector::from_iterator(dim_ref * self.dout, w.transpose().iter().copied());
            out += &flat * flat.adjoint();
        }
        Ok(out)
    }

    /// Unnormalised Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` on `din · dout`.
    pub fn choi_matrix(&self) -> FockOperator {
        let mut gamma = DVector::zeros(self.din * self.din);
        for i in 0..self.din {
            gamma[i * self.din + i] = Complex64::new(1.0, 0.0);
        }
        FockOperator::new(self.apply_to_pure_on_second(&gamma, self.din).expect("shapes match"))
            .expect("finite")
    }
}

/// Action of the map whose unnormalised Choi matrix is `choi`:
/// `Λ(X) = Tr_R[(Xᵀ ⊗ I) J]`.
pub fn apply_via_choi(choi: &FockOperator, din: usize, dout: usize, x: &FockOperator) -> Result<FockOperator> {
    if choi.dim() != din * dout || x.dim() != din {
        return Err(Error::Shape("Choi matrix and input dimensions disagree".into()));
    }
    let xt = x.matrix().transpose();
    let out = fock::reduce(choi.matrix(), &[din, dout], &[1], &[(0, &xt)])?;
    FockOperator::new(out)
}

/// `J_T = id ⊗ Λ(Φ_d)` with `Φ_d` maximally entangled on the lowest `d` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedChoi {
    pub d: usize,
    pub dout: usize,
    pub state: FockState,
}

pub fn truncated_choi(ch: &QuantumChannel, d: usize) -> Result<TruncatedChoi> {
    if d == 0 || d > ch.din() {
        return Err(Error::Shape(format!(
            "truncation {d} must lie in 1..={} (channel input dimension)",
            ch.din()
        )));
    }
    let amp = Complex64::new((1.0 / d as f64).sqrt(), 0.0);
    let mut v = DVector::zeros(d * ch.din());
    for k in 0..d {
        v[k * ch.din() + k] = amp;
    }
    let out = ch.apply_to_pure_on_second(&v, d)?;
    Ok(TruncatedChoi { d, dout: ch.dout(), state: FockState::from_matrix(out)? })
}

/// `J(Λ) = id ⊗ Λ(|φ⟩⟨φ|)` for the exact-tail two-mode squeezed `|φ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedChoi {
    pub omega: f64,
    pub dim: usize,
    pub dout: usize,
    pub state: FockState,
}

pub fn modified_choi(ch: &QuantumChannel, omega: f64, dim: usize) -> Result<ModifiedChoi> {
    if dim != ch.din() {
        return Err(Error::Shape(format!(
            "modified Choi truncation {dim} must equal the channel input dimension {}",
            ch.din()
        )));
    }
    let phi = two_mode_squeezed(omega, dim)?;
    let out = ch.apply_to_pure_on_second(&phi.ket(), dim)?;
    Ok(ModifiedChoi { omega, dim, dout: ch.dout(), state: FockState::from_matrix(out)? })
}

/// The effective channel `Tr_{\B_j} ∘ Λ` onto fragment `j` (zero-based).
pub fn fragment_channel(ch: &QuantumChannel, j: usize, frag_dims: &[usize]) -> Result<QuantumChannel> {
    let total: usize = frag_dims.iter().product();
    if frag_dims.is_empty() || total != ch.dout() {
        return Err(Error::Shape(format!(
            "fragment dimensions {frag_dims:?} do not multiply to the output dimension {}",
            ch.dout()
        )));
    }
    if j >= frag_dims.len() {
        return Err(Error::Index(format!(
            "fragment {j} out of range for {} fragments",
            frag_dims.len()
        )));
    }
    let n = frag_dims.len();
    let mut stride = vec![1usize; n];
    for k in (0..n - 1).rev() {
        stride[k] = stride[k + 1] * frag_dims[k + 1];
    }
    let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
    let other_dim: usize = others.iter().map(|&k| frag_dims[k]).product();
    let dj = frag_dims[j];
    let mut kraus = Vec::with_capacity(ch.kraus().len() * other_dim);
    for k in ch.kraus() {
        for e in 0..other_dim {
            let mut rem = e;
            let mut offset = 0;
            for &o in others.iter().rev() {
                offset += (rem % frag_dims[o]) * stride[o];
                rem /= frag_dims[o];
            }
            let mut kj = CMatrix::zeros(dj, ch.din());
            for b in 0..dj {
                for i in 0..ch.din() {
                    kj[(b, i)] = k[(offset + b * stride[j], i)];
                }
            }
            if kj.iter().any(|z| *z != zero()) {
                kraus.push(kj);
            }
        }
    }
    QuantumChannel::new(kraus)
}

/// A seeded random channel: a Ginibre stack `G` turned into the isometry
/// `G (G†G)^{-1/2}` and cut into `kraus_count` blocks.
pub fn random_channel(din: usize, dout: usize, kraus_count: usize, seed: u64) -> Result<QuantumChannel> {
    let mut rng = random::rng(seed);
    random_channel_with(&mut rng, din, dout, kraus_count)
}

pub fn random_channel_with<R: rand::Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    kraus_count: usize,
) -> Result<QuantumChannel> {
    if din == 0 || dout == 0 || kraus_count == 0 {
        return Err(Error::InvalidParameter("dimensions and Kraus count must be positive".into()));
    }
    if kraus_count * dout < din {
        return Err(Error::InvalidParameter(format!(
            "{kraus_count} Kraus operators of output dimension {dout} cannot be trace preserving on dimension {din}"
        )));
    }
    let g = random::ginibre(rng, kraus_count * dout, din);
    let gram = FockOperator::new(g.adjoint() * &g)?;
    let v = &g * gram.hermitian_function(|x| 1.0 / x.sqrt());
    let kraus = (0..kraus_count).map(|k| v.rows(k * dout, dout).into_owned()).collect();
    QuantumChannel::new(kraus)
}

/// Real linear combination `Σ c_k Λ_k` of channels with common dimensions,
/// used for differences such as `Λ₀ - Λ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCombination {
    din: usize,
    dout: usize,
    terms: Vec<(f64, QuantumChannel)>,
}

impl ChannelCombination {
    pub fn new(terms: Vec<(f64, QuantumChannel)>) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| Error::InvalidParameter("empty combination".into()))?;
        let (din, dout) = (first.din(), first.dout());
        if terms.iter().any(|(_, c)| c.din() != din || c.dout() != dout) {
            return Err(Error::Shape("channels in a combination must share dimensions".into()));
        }
        Ok(Self { din, dout, terms })
    }

    pub fn difference(a: &QuantumChannel, b: &QuantumChannel) -> Result<Self> {
        Self::new(vec![(1.0, a.clone()), (-1.0, b.clone())])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            din: self.din,
            dout: self.dout,
            terms: self.terms.iter().map(|(w, ch)| (w * c, ch.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn terms(&self) -> &[(f64, QuantumChannel)] {
        &self.terms
    }

    pub fn apply_to_pure_on_second(&self, v: &DVector<Complex64>, dim_ref: usize) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(dim_ref * self.dout, dim_ref * self.dout);
        for (w, ch) in &self.terms {
            out += ch.apply_to_pure_on_second(v, dim_ref)? * Complex64::new(*w, 0.0);
        }
        Ok(out)
    }

    pub fn apply_on_second(&self, x: &FockOperator, dim_ref: usize) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(dim_ref * self.dout, dim_ref * self.dout);
        for (w, ch) in &self.terms {
            out += ch.apply_on_second(x, dim_ref)?.into_matrix() * Complex64::new(*w, 0.0);
        }
        Ok(out)
    }

    pub fn apply_operator(&self, x: &FockOperator) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.dout, self.dout);
        for (w, ch) in &self.terms {
            out += ch.apply_operator(x)?.into_matrix() * Complex64::new(*w, 0.0);
        }
        Ok(out)
    }
}

/// `X ↦ Σ_z Tr(M_z X) σ_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePrepare {
    effects: Vec<FockOperator>,
    states: Vec<FockState>,
    weights: Vec<f64>,
}

fn povm_residual(effects: &[FockOperator], dim: usize) -> f64 {
    let mut s = CMatrix::zeros(dim, dim);
    for m in effects {
        s += m.matrix();
    }
    s -= CMatrix::identity(dim, dim);
    max_abs(&s)
}

fn check_povm(effects: &[FockOperator], dim: usize) -> Result<()> {
    if effects.is_empty() {
        return Err(Error::InvalidPovm("no effects".into()));
    }
    if effects.iter().any(|m| m.dim() != dim) {
        return Err(Error::InvalidPovm(format!("effects must act on dimension {dim}")));
    }
    for (k, m) in effects.iter().enumerate() {
        let min = m.min_eigenvalue();
        if min < -COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!("effect {k} has eigenvalue {min:e}")));
        }
    }
    let r = povm_residual(effects, dim);
    if r > COMPLETENESS_TOL {
        return Err(Error::InvalidPovm(format!("effects do not sum to identity (residual {r:e})")));
    }
    Ok(())
}

impl MeasurePrepare {
    pub fn new(effects: Vec<FockOperator>, states: Vec<FockState>, weights: Vec<f64>) -> Result<Self> {
        let dim = effects.first().map(FockOperator::dim).unwrap_or(0);
        check_povm(&effects, dim)?;
        if states.len() != effects.len() || weights.len() != effects.len() {
            return Err(Error::Shape("effects, states and weights must have equal length".into()));
        }
        let dout = states[0].dim();
        if states.iter().any(|s| s.dim() != dout || (s.trace() - 1.0).abs() > 1e-10) {
            return Err(Error::NotAState("prepared states must be normalised and share a dimension".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || weights.iter().sum::<f64>() > 1.0 + 1e-10 {
            return Err(Error::InvalidParameter("weights must be non-negative with sum at most 1".into()));
        }
        Ok(Self { effects, states, weights })
    }

    /// Measure-and-prepare channel from a POVM and one prepared state per
    /// outcome; weights are the outcome probabilities on `I/din`.
    pub fn from_povm(effects: Vec<FockOperator>, states: Vec<FockState>) -> Result<Self> {
        let dim = effects.first().map(FockOperator::dim).unwrap_or(1) as f64;
        let weights = effects.iter().map(|m| m.trace().re / dim).collect();
        Self::new(effects, states, weights)
    }

    pub fn effects(&self) -> &[FockOperator] {
        &self.effects
    }

    pub fn prepared_states(&self) -> &[FockState] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn din(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn dout(&self) -> usize {
        self.states[0].dim()
    }

    pub fn completeness_residual(&self) -> f64 {
        povm_residual(&self.effects, self.din())
    }

    pub fn apply(&self, x: &FockOperator) -> Result<FockOperator> {
        let mut out = CMatrix::zeros(self.dout(), self.dout());
        for (m, s) in self.effects.iter().zip(&self.states) {
            out += s.matrix() * m.expectation(x)?;
        }
        FockOperator::new(out)
    }

    /// Kraus form `√(μ_a s_b) |s_b⟩⟨m_a|` over the spectral decompositions of
    /// each effect and prepared state.
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let mut kraus = Vec::new();
        for (m, s) in self.effects.iter().zip(&self.states) {
            let (mu_all, m_vecs) = fock::eigh(m.hermitian_part().matrix());
            let (s_all, s_vecs) = fock::eigh(s.operator().hermitian_part().matrix());
            for (a, &mu) in mu_all.iter().enumerate() {
                for (b, &sb) in s_all.iter().enumerate() {
                    let w = mu.max(0.0) * sb.max(0.0);
                    if w <= 0.0 {
                        continue;
                    }
                    let k = s_vecs.column(b) * m_vecs.column(a).adjoint();
                    kraus.push(k * Complex64::new(w.sqrt(), 0.0));
                }
            }
        }
        QuantumChannel::new(kraus)
    }
}

/// A POVM measured on one environment fragment to condition the
/// measure-and-prepare construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningMeasurement {
    pub fragment: usize,
    pub povm: Vec<FockOperator>,
}

/// Builds `E_j(X) = 𝒩^{-2} Σ_z p(z) Tr((ρ_A^z)ᵀ O X O†) ρ_{B_j}^z` from the
/// modified Choi state of `ch`, conditioning on the outcomes `z` of the
/// given fragment measurements. The effects are
/// `M_z = 𝒩^{-2} p(z) O (ρ_A^z)ᵀ O` with `O = Σ_i φ_i^{-1} |i⟩⟨i|`.
///
/// Everything lives on the `din`-level truncation; `O` is bounded there.
pub fn build_measure_prepare(
    ch: &QuantumChannel,
    omega: f64,
    frag_dims: &[usize],
    target: usize,
    conditioning: &[ConditioningMeasurement],
) -> Result<MeasurePrepare> {
    let total: usize = frag_dims.iter().product();
    if frag_dims.is_empty() || total != ch.dout() {
        return Err(Error::Shape(format!(
            "fragment dimensions {frag_dims:?} do not multiply to {}",
            ch.dout()
        )));
    }
    if target >= frag_dims.len() {
        return Err(Error::Index(format!("target fragment {target} out of range")));
    }
    let mut seen = vec![false; frag_dims.len()];
    for c in conditioning {
        if c.fragment >= frag_dims.len() || c.fragment == target || seen[c.fragment] {
            return Err(Error::Index(format!("invalid conditioning fragment {}", c.fragment)));
        }
        seen[c.fragment] = true;
        check_povm(&c.povm, frag_dims[c.fragment])?;
    }

    let din = ch.din();
    let dj = frag_dims[target];
    let choi = modified_choi(ch, omega, din)?;
    let mut dims = vec![din];
    dims.extend_from_slice(frag_dims);
    let keep = [0, 1 + target];
    let phi = two_mode_squeezed(omega, din)?;
    let inv_norm_sqr = 1.0 / (phi.norm_const() * phi.norm_const());
    let o_diag: Vec<f64> = (0..din).map(|i| 1.0 / phi.phi(i)).collect();
    let o = FockOperator::from_diagonal(&o_diag).into_matrix();

    let counts: Vec<usize> = conditioning.iter().map(|c| c.povm.len()).collect();
    let outcomes: usize = counts.iter().product();
    let mut effects = Vec::with_capacity(outcomes);
    let mut states = Vec::with_capacity(outcomes);
    let mut weights = Vec::with_capacity(outcomes);
    for z in 0..outcomes {
        let mut rem = z;
        let mut insert = Vec::with_capacity(conditioning.len());
        for (c, &n) in conditioning.iter().zip(&counts).rev() {
            insert.push((1 + c.fragment, c.povm[rem % n].matrix()));
            rem /= n;
        }
        let rho_z = fock::reduce(choi.state.matrix(), &dims, &keep, &insert)?;
        let p = rho_z.trace().re;
        let op_z = FockOperator::new(rho_z)?;
        let a_unnorm = op_z.partial_trace((din, dj), Subsystem::First)?;
        let b_unnorm = op_z.partial_trace((din, dj), Subsystem::Second)?;
        // 𝒩^{-2} p (ρ_A^z)ᵀ = 𝒩^{-2} (Tr_B ρ^z)ᵀ, no division needed
        let m = (&o * a_unnorm.matrix().transpose() * &o).scale(inv_norm_sqr);
        effects.push(FockOperator::new(m)?.hermitian_part());
        states.push(prepared_state(&b_unnorm, p)?);
        weights.push(p.max(0.0));
    }
    MeasurePrepare::new(effects, states, weights)
}

/// `ρ_B^z = Tr_A ρ^z / p(z)`, cleaned of round-off; outcomes of negligible
/// probability get the vacuum.
fn prepared_state(unnorm: &FockOperator, p: f64) -> Result<FockState> {
    let dim = unnorm.dim();
    if p < 1e-12 {
        return FockState::new(FockOperator::fock_projector(dim, 1));
    }
    let clipped = unnorm.scale(1.0 / p).hermitian_function(|x| x);
    let tr = clipped.trace().re;
    FockState::from_matrix(clipped.unscale(tr))
}
