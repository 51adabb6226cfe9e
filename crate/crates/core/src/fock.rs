//! Dense linear algebra on truncated Fock spaces.
//!
//! Multipartite operators use the Kronecker ordering of `nalgebra`: the
//! basis vector `|i₁, …, i_k⟩` sits at the row-major multi-index, so the
//! first factor is the most significant digit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity tolerance for states.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-EIGEN_TOL` are treated as round-off and clipped to zero.
pub const EIGEN_TOL: f64 = 1e-10;
/// Allowed excess of a state's trace over one.
pub const TRACE_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Which factor of a bipartite operator to keep or act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// A square complex matrix on a truncated Fock space (levels `0..dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: CMatrix,
}

impl FockOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::Shape("operator dimension must be at least 1".into()));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: CMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x)));
        Self { entries: CMatrix::from_diagonal(&d) }
    }

    /// `Π_d = Σ_{i<d} |i⟩⟨i|` embedded in a `dim`-level space.
    pub fn fock_projector(dim: usize, d: usize) -> Self {
        let diag: Vec<f64> = (0..dim).map(|i| if i < d { 1.0 } else { 0.0 }).collect();
        Self::from_diagonal(&diag)
    }

    /// Number operator `n̂ = diag(0, 1, …, dim-1)`.
    pub fn number(dim: usize) -> Self {
        let diag: Vec<f64> = (0..dim).map(|i| i as f64).collect();
        Self::from_diagonal(&diag)
    }

    /// `e^{ω n̂}` on the truncated space.
    pub fn exp_number(dim: usize, omega: f64) -> Self {
        let diag: Vec<f64> = (0..dim).map(|i| (omega * i as f64).exp()).collect();
        Self::from_diagonal(&diag)
    }

    /// Rank-one operator `|v⟩⟨v|`.
    pub fn from_ket(v: &DVector<Complex64>) -> Self {
        Self { entries: v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { entries: self.entries.transpose() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { entries: self.entries.kronecker(&other.entries) }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { entries: self.entries.scale(factor) }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries - &other.entries })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries + &other.entries })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries * &other.entries })
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// Largest entry of `|X - X†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        Self { entries: (&self.entries + self.entries.adjoint()).scale(0.5) }
    }

    /// Eigenvalues (ascending) of the Hermitian part.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let (values, _) = eigh(&self.hermitian_part().entries);
        let mut ev: Vec<f64> = values.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    /// `V f(Λ) V†` for the eigendecomposition of the Hermitian part.
    /// Eigenvalues below zero are passed to `f` clipped at zero.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let (values, v) = eigh(&self.hermitian_part().entries);
        let fd = DVector::from_iterator(self.dim(), values.iter().map(|&l| c(f(l.max(0.0)))));
        &v * CMatrix::from_diagonal(&fd) * v.adjoint()
    }

    /// Principal square root of a positive semidefinite operator.
    pub fn sqrt_psd(&self) -> Self {
        Self { entries: self.hermitian_function(f64::sqrt) }
    }

    /// Trace norm: sum of singular values (absolute eigenvalues when Hermitian).
    pub fn trace_norm(&self) -> f64 {
        let scale = self.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if self.hermiticity_defect() <= 1e-14 * scale {
            self.hermitian_eigenvalues().iter().map(|l| l.abs()).sum()
        } else {
            self.entries.clone().svd(false, false).singular_values.sum()
        }
    }

    /// `Tr(self · other)`.
    pub fn expectation(&self, other: &Self) -> Result<Complex64> {
        self.same_dim(other)?;
        Ok((&self.entries * &other.entries).trace())
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        let keep_idx = match keep {
            Subsystem::First => 0,
            Subsystem::Second => 1,
        };
        Ok(Self { entries: reduce(&self.entries, &[dims.0, dims.1], &[keep_idx], &[])? })
    }

    pub fn partial_transpose(&self, dims: (usize, usize), which: Subsystem) -> Result<Self> {
        let (da, db) = dims;
        check_dims(self.dim(), &[da, db])?;
        let mut out = CMatrix::zeros(da * db, da * db);
        for i in 0..da {
            for j in 0..db {
                for k in 0..da {
                    for l in 0..db {
                        let (r, s) = match which {
                            Subsystem::First => ((k * db + j), (i * db + l)),
                            Subsystem::Second => ((i * db + l), (k * db + j)),
                        };
                        out[(r, s)] = self.entries[(i * db + j, k * db + l)];
                    }
                }
            }
        }
        Ok(Self { entries: out })
    }
}

/// Eigenvalues and eigenvectors (as columns) of a Hermitian matrix.
///
/// The QR iteration can break down to NaN on matrices with exactly zero
/// rows; those are retried on `H + ‖H‖_max I`, which leaves the absolute
/// accuracy unchanged.
pub fn eigh(h: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    let finite = eig.eigenvalues.iter().all(|x| x.is_finite())
        && eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if finite {
        return (eig.eigenvalues, eig.eigenvectors);
    }
    let shift = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = h.nrows();
    let shifted = h + CMatrix::identity(n, n) * c(shift);
    let eig = shifted.symmetric_eigen();
    (eig.eigenvalues.map(|x| x - shift), eig.eigenvectors)
}

/// Trace norm of a raw matrix, rejecting non-finite entries.
pub fn trace_norm(x: &CMatrix) -> Result<f64> {
    Ok(FockOperator::new(x.clone())?.trace_norm())
}

/// Bipartite partial trace: `Tr_B X` (keep `First`) or `Tr_A X` (keep `Second`).
pub fn partial_trace(x: &FockOperator, dims: (usize, usize), keep: Subsystem) -> Result<FockOperator> {
    x.partial_trace(dims, keep)
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total || dims.contains(&0) {
        return Err(Error::Shape(format!(
            "subsystem dimensions {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

/// Multipartite reduction `Tr_{rest}[(Q_rest ⊗ I_keep) X]`.
///
/// `keep` lists the retained subsystems (in ascending order); every traced
/// subsystem `k` may carry an operator `Q_k` from `insert`, defaulting to
/// the identity. The result is ordered like the retained subsystems.
pub fn reduce(
    x: &CMatrix,
    dims: &[usize],
    keep: &[usize],
    insert: &[(usize, &CMatrix)],
) -> Result<CMatrix> {
    check_dims(x.nrows(), dims)?;
    if x.nrows() != x.ncols() {
        return Err(Error::Shape("operator must be square".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Index(format!("invalid kept subsystems {keep:?}")));
    }
    for (k, q) in insert {
        if *k >= dims.len() || keep.contains(k) {
            return Err(Error::Index(format!("cannot insert an operator on subsystem {k}")));
        }
        if q.nrows() != dims[*k] || q.ncols() != dims[*k] {
            return Err(Error::Shape(format!("inserted operator on subsystem {k} has wrong size")));
        }
    }
    let n = dims.len();
    let rest: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();

    // strides of each subsystem in the full index
    let mut stride = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    let split = |idx: usize, which: &[usize]| -> usize {
        // full index of the multi-index given by `idx` over subsystems `which`
        let mut rem = idx;
        let mut full = 0;
        for &k in which.iter().rev() {
            full += (rem % dims[k]) * stride[k];
            rem /= dims[k];
        }
        full
    };
    let digits = |idx: usize, which: &[usize]| -> Vec<usize> {
        let mut rem = idx;
        let mut out = vec![0; which.len()];
        for (pos, &k) in which.iter().enumerate().rev() {
            out[pos] = rem % dims[k];
            rem /= dims[k];
        }
        out
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|i| split(i, keep)).collect();
    let rest_off: Vec<usize> = (0..rest_dim).map(|i| split(i, &rest)).collect();

    // weight[r][r'] = Π_k Q_k[r_k, r'_k] for the traced subsystems
    let ops: Vec<Option<&CMatrix>> = rest
        .iter()
        .map(|k| insert.iter().find(|(j, _)| j == k).map(|(_, q)| *q))
        .collect();
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    if ops.iter().all(Option::is_none) {
        for (a, &ka) in kept_off.iter().enumerate() {
            for (b, &kb) in kept_off.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &r in &rest_off {
                    acc += x[(ka + r, kb + r)];
                }
                out[(a, b)] = acc;
            }
        }
        return Ok(out);
    }
    let rest_digits: Vec<Vec<usize>> = (0..rest_dim).map(|i| digits(i, &rest)).collect();
    let mut weight = CMatrix::zeros(rest_dim, rest_dim);
    for r in 0..rest_dim {
        for rp in 0..rest_dim {
            let mut w = Complex64::new(1.0, 0.0);
            for (pos, op) in ops.iter().enumerate() {
                let (i, j) = (rest_digits[r][pos], rest_digits[rp][pos]);
                match op {
                    Some(q) => w *= q[(i, j)],
                    None if i != j => {
                        w = Complex64::new(0.0, 0.0);
                        break;
                    }
                    None => {}
                }
            }
            weight[(r, rp)] = w;
        }
    }
    // Y[a,b] = Σ_{r,r'} Q[r,r'] X[(a,r'),(b,r)]
    for (a, &ka) in kept_off.iter().enumerate() {
        for (b, &kb) in kept_off.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, &or) in rest_off.iter().enumerate() {
                for (rp, &orp) in rest_off.iter().enumerate() {
                    let w = weight[(r, rp)];
                    if w != Complex64::new(0.0, 0.0) {
                        acc += w * x[(ka + orp, kb + or)];
                    }
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// A density operator on a truncated space. The trace may be below one:
/// truncations of infinite-support states keep their exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    op: FockOperator,
    normalized: bool,
}

impl FockState {
    pub fn new(op: FockOperator) -> Result<Self> {
        let scale = op.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let defect = op.hermiticity_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotAState(format!("not Hermitian (defect {defect:e})")));
        }
        let op = op.hermitian_part();
        let min = op.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(Error::NotAState(format!("negative eigenvalue {min:e}")));
        }
        let tr = op.trace().re;
        if tr > 1.0 + TRACE_TOL {
            return Err(Error::NotAState(format!("trace {tr} exceeds one")));
        }
        Ok(Self { normalized: (tr - 1.0).abs() <= TRACE_TOL, op })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(FockOperator::new(m)?)
    }

    /// `|ψ⟩⟨ψ|`; the ket is used as given, so a sub-normalised ket yields a
    /// sub-normalised state.
    pub fn pure(ket: &DVector<Complex64>) -> Self {
        let op = FockOperator::from_ket(ket);
        let tr = op.trace().re;
        Self { normalized: (tr - 1.0).abs() <= TRACE_TOL, op }
    }

    pub fn operator(&self) -> &FockOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::NotAState("cannot renormalise a zero-trace state".into()));
        }
        Ok(Self { op: self.op.scale(1.0 / tr), normalized: true })
    }

    /// `⟨n̂⟩ = Σ_n n ρ_nn` (single mode).
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.op.matrix()[(n, n)].re).sum()
    }

    /// `Tr(ρ X)` real part.
    pub fn expectation(&self, x: &FockOperator) -> Result<f64> {
        Ok(self.op.expectation(x)?.re)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.hermitian_eigenvalues()
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        let op = self.op.partial_trace(dims, keep)?;
        Ok(Self { normalized: self.normalized, op: op.hermitian_part() })
    }
}

/// Truncation convention for thermal states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GibbsMode {
    /// Keep the exact coefficients; trace is `1 - e^{-ω dim}`.
    ExactTail,
    /// Rescale to unit trace.
    Renormalized,
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    Ok(())
}

/// Thermal state `(1 - e^{-ω}) e^{-ω n̂}` on `dim` levels.
pub fn gibbs_state(omega: f64, dim: usize, mode: GibbsMode) -> Result<FockState> {
    check_omega(omega)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let prefactor = -(-omega).exp_m1();
    let mut diag: Vec<f64> = (0..dim).map(|n| prefactor * (-omega * n as f64).exp()).collect();
    if mode == GibbsMode::Renormalized {
        let total: f64 = diag.iter().sum();
        diag.iter_mut().for_each(|x| *x /= total);
    }
    let op = FockOperator::from_diagonal(&diag);
    let tr = op.trace().re;
    Ok(FockState { normalized: (tr - 1.0).abs() <= TRACE_TOL, op })
}

/// The two-mode squeezed vector `𝒩 Σ_{j<dim} φ_j |j, j⟩`, `φ_j = e^{-ωj/2}`,
/// `𝒩 = √(1 - e^{-ω})`, truncated without renormalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeSqueezedState {
    omega: f64,
    dim: usize,
}

impl TwoModeSqueezedState {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `φ_j = e^{-ωj/2}`.
    pub fn phi(&self, j: usize) -> f64 {
        (-self.omega * j as f64 / 2.0).exp()
    }

    /// Normalisation `𝒩 = √(1 - e^{-ω})`.
    pub fn norm_const(&self) -> f64 {
        (-(-self.omega).exp_m1()).sqrt()
    }

    /// Mean photon number of either reduction of the untruncated state, `1/(e^ω - 1)`.
    pub fn mean_photon(&self) -> f64 {
        1.0 / self.omega.exp_m1()
    }

    /// Exact truncated squared norm `1 - e^{-ω dim}`.
    pub fn truncated_norm_sqr(&self) -> f64 {
        -(-self.omega * self.dim as f64).exp_m1()
    }

    pub fn ket(&self) -> DVector<Complex64> {
        let n = self.norm_const();
        let mut v = DVector::zeros(self.dim * self.dim);
        for j in 0..self.dim {
            v[j * self.dim + j] = c(n * self.phi(j));
        }
        v
    }

    pub fn density(&self) -> FockState {
        FockState::pure(&self.ket())
    }
}

pub fn two_mode_squeezed(omega: f64, dim: usize) -> Result<TwoModeSqueezedState> {
    check_omega(omega)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(TwoModeSqueezedState { omega, dim })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Bits,
    Nats,
}

/// `-Σ λ log λ` over the eigenvalues of `rho`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &FockState, base: LogBase) -> Result<f64> {
    entropy_of_matrix(rho.operator(), base)
}

fn entropy_of_matrix(op: &FockOperator, base: LogBase) -> Result<f64> {
    let mut s = 0.0;
    for l in op.hermitian_eigenvalues() {
        if l <= -EIGEN_TOL {
            return Err(Error::NotAState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(match base {
        LogBase::Nats => s,
        LogBase::Bits => s / std::f64::consts::LN_2,
    })
}

/// `I(A:B) = S(A) + S(B) - S(AB)` in bits, evaluated on the unit-trace
/// rescaling of `rho_ab`.
pub fn mutual_information(rho_ab: &FockState, dims: (usize, usize)) -> Result<f64> {
    let rho = if rho_ab.is_normalized() { rho_ab.clone() } else { rho_ab.renormalized()? };
    let ra = rho.operator().partial_trace(dims, Subsystem::First)?;
    let rb = rho.operator().partial_trace(dims, Subsystem::Second)?;
    let sa = entropy_of_matrix(&ra, LogBase::Bits)?;
    let sb = entropy_of_matrix(&rb, LogBase::Bits)?;
    let sab = entropy_of_matrix(rho.operator(), LogBase::Bits)?;
    Ok(sa + sb - sab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trace_norm_of_simple_operators() {
        assert_abs_diff_eq!(FockOperator::identity(2).trace_norm(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(FockOperator::from_diagonal(&[1.0, -1.0]).trace_norm(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_norm_rejects_nan() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(trace_norm(&m), Err(Error::InvalidOperator(_))));
    }

    #[test]
    fn trace_norm_non_hermitian_uses_singular_values() {
        // |0><1| has a single unit singular value
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        assert_abs_diff_eq!(trace_norm(&m).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut r = random::rng(3);
        let s = random::random_density(&mut r, 3, 3);
        let t = random::random_hermitian(&mut r, 2);
        let x = s.operator().kron(&t);
        let red = x.partial_trace((3, 2), Subsystem::First).unwrap();
        let expect = s.operator().matrix() * t.trace();
        assert!((red.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let mut v = DVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2);
        let rho = FockOperator::from_ket(&v);
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = rho.partial_trace((2, 2), keep).unwrap();
            assert!((red.matrix() - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_shape_error() {
        let x = FockOperator::identity(6);
        assert!(matches!(x.partial_trace((4, 2), Subsystem::First), Err(Error::Shape(_))));
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        let mut r = random::rng(11);
        let rho = random::random_density(&mut r, 12, 5);
        let (da, db) = (3, 4);
        // direct index contraction oracle
        let mut ra = CMatrix::zeros(da, da);
        let mut rb = CMatrix::zeros(db, db);
        let m = rho.matrix();
        for i in 0..da {
            for k in 0..da {
                for j in 0..db {
                    ra[(i, k)] += m[(i * db + j, k * db + j)];
                }
            }
        }
        for j in 0..db {
            for l in 0..db {
                for i in 0..da {
                    rb[(j, l)] += m[(i * db + j, i * db + l)];
                }
            }
        }
        let a = rho.operator().partial_trace((da, db), Subsystem::First).unwrap();
        let b = rho.operator().partial_trace((da, db), Subsystem::Second).unwrap();
        assert!((a.matrix() - &ra).norm() < 1e-13);
        assert!((b.matrix() - &rb).norm() < 1e-13);
        assert!((a.trace() - rho.operator().trace()).norm() < 1e-12);
        assert!((b.trace() - rho.operator().trace()).norm() < 1e-12);
    }

    #[test]
    fn reduce_with_inserted_operator() {
        // Tr_B[(I ⊗ Q) X] for product X = S ⊗ T is S · Tr(Q T)
        let mut r = random::rng(5);
        let s = random::random_hermitian(&mut r, 2);
        let t = random::random_hermitian(&mut r, 3);
        let q = random::random_effect(&mut r, 3);
        let x = s.kron(&t);
        let y = reduce(x.matrix(), &[2, 3], &[0], &[(1, q.matrix())]).unwrap();
        let expect = s.matrix() * (q.matrix() * t.matrix()).trace();
        assert!((y - expect).norm() < 1e-12);
    }

    #[test]
    fn reduce_keeps_middle_subsystem() {
        let mut r = random::rng(9);
        let a = random::random_density(&mut r, 2, 2);
        let b = random::random_density(&mut r, 3, 3);
        let cc = random::random_density(&mut r, 2, 2);
        let x = a.operator().kron(b.operator()).kron(cc.operator());
        let y = reduce(x.matrix(), &[2, 3, 2], &[1], &[]).unwrap();
        assert!((y - b.matrix()).norm() < 1e-13);
        let y = reduce(x.matrix(), &[2, 3, 2], &[0, 2], &[]).unwrap();
        assert!((y - a.operator().kron(cc.operator()).into_matrix()).norm() < 1e-13);
    }

    #[test]
    fn partial_transpose_twice_is_identity() {
        let mut r = random::rng(17);
        let x = random::random_hermitian(&mut r, 6);
        for w in [Subsystem::First, Subsystem::Second] {
            let y = x.partial_transpose((2, 3), w).unwrap().partial_transpose((2, 3), w).unwrap();
            assert!((y.matrix() - x.matrix()).norm() < 1e-15);
        }
        let full = x
            .partial_transpose((2, 3), Subsystem::First)
            .unwrap()
            .partial_transpose((2, 3), Subsystem::Second)
            .unwrap();
        assert!((full.matrix() - x.matrix().transpose()).norm() < 1e-15);
    }

    #[test]
    fn gibbs_geometric_values() {
        let g = gibbs_state(std::f64::consts::LN_2, 2, GibbsMode::ExactTail).unwrap();
        assert_abs_diff_eq!(g.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.matrix()[(1, 1)].re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.trace(), 0.75, epsilon = 1e-15);
        assert!(!g.is_normalized());
    }

    #[test]
    fn gibbs_zero_temperature_limit() {
        let g = gibbs_state(50.0, 3, GibbsMode::ExactTail).unwrap();
        let vac = FockOperator::fock_projector(3, 1);
        assert!((g.matrix() - vac.matrix()).iter().all(|z| z.norm() < 1e-20));
    }

    #[test]
    fn gibbs_rejects_nonpositive_omega() {
        assert!(matches!(gibbs_state(0.0, 3, GibbsMode::ExactTail), Err(Error::InvalidParameter(_))));
        assert!(gibbs_state(-1.0, 3, GibbsMode::Renormalized).is_err());
    }

    #[test]
    fn gibbs_mean_photon_matches_geometric_sum() {
        let g = gibbs_state(1.0, 60, GibbsMode::Renormalized).unwrap();
        assert!(g.is_normalized());
        // oracle: Σ n q^n (1-q) / (1 - q^60) with q = e^{-1}
        let q = (-1.0f64).exp();
        let mut num = 0.0;
        let mut den = 0.0;
        for n in 0..60 {
            num += n as f64 * q.powi(n);
            den += q.powi(n);
        }
        assert_abs_diff_eq!(g.mean_photon_number(), num / den, epsilon = 1e-12);
        assert_abs_diff_eq!(g.mean_photon_number(), 1.0 / (1f64.exp() - 1.0), epsilon = 1e-10);
    }

    #[test]
    fn two_mode_squeezed_trace_and_reductions() {
        let s = two_mode_squeezed(1.0, 3).unwrap();
        let rho = s.density();
        assert_abs_diff_eq!(rho.trace(), 1.0 - (-3.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(rho.trace(), 0.950212931632136, epsilon = 1e-12);
        let g = gibbs_state(1.0, 3, GibbsMode::ExactTail).unwrap();
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = rho.operator().partial_trace((3, 3), keep).unwrap();
            assert!((red.matrix() - g.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn two_mode_squeezed_projector_symmetry() {
        let s = two_mode_squeezed(0.7, 6).unwrap();
        let v = s.ket();
        for d in 1..=6 {
            let p = FockOperator::fock_projector(6, d);
            let id = FockOperator::identity(6);
            let left = p.kron(&id).into_matrix() * &v;
            let right = id.kron(&p).into_matrix() * &v;
            assert_eq!(left, right);
        }
    }

    #[test]
    fn entropy_basics() {
        let mut r = random::rng(1);
        let pure = random::random_pure_state(&mut r, 4);
        assert!(von_neumann_entropy(&pure, LogBase::Bits).unwrap().abs() < 1e-10);
        let mixed = FockState::new(FockOperator::identity(2).scale(0.5)).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed, LogBase::Bits).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_survives_zero_rows() {
        let phi = two_mode_squeezed(1.0, 30).unwrap().density();
        let (values, _) = eigh(phi.matrix());
        assert!(values.iter().all(|x| x.is_finite()));
        assert_abs_diff_eq!(phi.operator().trace_norm(), phi.trace(), epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_thermal_state() {
        let g = gibbs_state(1.0, 60, GibbsMode::Renormalized).unwrap();
        let n = 1.0 / (1f64.exp() - 1.0);
        let closed = (n + 1.0) * (n + 1.0).ln() - n * n.ln();
        let s = von_neumann_entropy(&g, LogBase::Nats).unwrap();
        assert_abs_diff_eq!(s, closed, epsilon = 1e-6);
        assert_abs_diff_eq!(s, 1.040652, epsilon = 1e-6);
    }

    #[test]
    fn negative_states_are_rejected() {
        let op = FockOperator::from_diagonal(&[1.1, -0.1]);
        assert!(matches!(FockState::new(op), Err(Error::NotAState(_))));
        let op = FockOperator::from_diagonal(&[1.0, -1e-11]);
        let st = FockState::new(op).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&st, LogBase::Nats).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mutual_information_cases() {
        let mut r = random::rng(2);
        let a = random::random_density(&mut r, 2, 2);
        let b = random::random_density(&mut r, 3, 3);
        let prod = FockState::new(a.operator().kron(b.operator())).unwrap();
        assert!(mutual_information(&prod, (2, 3)).unwrap().abs() < 1e-10);

        let mut v = DVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2);
        let bell = FockState::pure(&v);
        assert_abs_diff_eq!(mutual_information(&bell, (2, 2)).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_classical_table() {
        // diagonal state Σ p_ij |ij><ij| against the Shannon oracle
        let p = [[0.3, 0.1, 0.05], [0.05, 0.2, 0.3]];
        let diag: Vec<f64> = p.iter().flatten().copied().collect();
        let rho = FockState::new(FockOperator::from_diagonal(&diag)).unwrap();
        let pa: Vec<f64> = p.iter().map(|row| row.iter().sum()).collect();
        let pb: Vec<f64> = (0..3).map(|j| p[0][j] + p[1][j]).collect();
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                oracle += p[i][j] * (p[i][j] / (pa[i] * pb[j])).log2();
            }
        }
        assert_abs_diff_eq!(mutual_information(&rho, (2, 3)).unwrap(), oracle, epsilon = 1e-9);
    }
}
