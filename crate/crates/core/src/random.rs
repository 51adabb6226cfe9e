//! Seeded random operators, states and effects.
//!
//! Every generator draws from a [`ChaCha8Rng`]; [`trial_rng`] derives an
//! independent stream per trial so results never depend on scheduling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fock::{CMatrix, FockOperator, FockState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> FockOperator {
    let g = ginibre(rng, dim, dim);
    let h = (&g + g.adjoint()).scale(0.5);
    FockOperator::new(h).expect("finite square matrix")
}

pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> FockState {
    FockState::pure(&random_ket(rng, dim))
}

/// Mixed state `G G† / Tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> FockState {
    let g = ginibre(rng, dim, rank.max(1));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    FockState::new(FockOperator::new(rho.unscale(tr)).expect("finite")).expect("valid density")
}

/// Haar-ish unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = ginibre(rng, dim, dim);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let phases = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Effect `0 ≤ M ≤ I` with eigenvalues uniform in `[0, 1]` and a random eigenbasis.
pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> FockOperator {
    let u = random_unitary(rng, dim);
    let diag = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(rng.random::<f64>(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = &u * diag * u.adjoint();
    FockOperator::new((&m + m.adjoint()).scale(0.5)).expect("finite")
}

/// Rank-one projective measurement in a random orthonormal basis.
pub fn random_projective_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<FockOperator> {
    let u = random_unitary(rng, dim);
    (0..dim)
        .map(|k| FockOperator::from_ket(&u.column(k).into_owned()))
        .collect()
}

/// Random POVM with `outcomes` elements: `M_k = S^{-1/2} G_k S^{-1/2}` for
/// positive `G_k` and `S = Σ G_k`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Vec<FockOperator> {
    let parts: Vec<CMatrix> = (0..outcomes.max(1))
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for p in &parts {
        total += p;
    }
    let inv_sqrt = FockOperator::new(total)
        .expect("finite")
        .hermitian_function(|x| 1.0 / x.sqrt());
    parts
        .into_iter()
        .map(|p| {
            let m = &inv_sqrt * p * &inv_sqrt;
            FockOperator::new((&m + m.adjoint()).scale(0.5)).expect("finite")
        })
        .collect()
}
