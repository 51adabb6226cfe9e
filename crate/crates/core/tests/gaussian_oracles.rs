use num_complex::Complex64;
use qdinf::gaussian::{exp_moment, mean_photon, GaussianState};

/// Sums a series whose term ratios stay below `ratio_bound < 1` from the
/// current index on; stops once the geometric tail bound is negligible.
fn series(first: f64, next_ratio: impl Fn(usize) -> f64, ratio_bound: impl Fn(usize) -> f64) -> f64 {
    let mut term = first;
    let mut sum = 0.0;
    let mut n = 0;
    loop {
        sum += term;
        let bound = ratio_bound(n);
        if bound < 1.0 && term * bound / (1.0 - bound) < 1e-14 * sum {
            return sum;
        }
        term *= next_ratio(n);
        n += 1;
        assert!(n < 100_000, "series did not converge");
    }
}

fn coherent_oracle(alpha: f64, omega: f64) -> f64 {
    let x = alpha * alpha * omega.exp();
    series((-alpha * alpha).exp(), |n| x / (n + 1) as f64, |n| x / (n + 1) as f64)
}

fn thermal_oracle(m: f64, omega: f64) -> f64 {
    let q = m / (m + 1.0);
    let ratio = q * omega.exp();
    series(1.0 - q, |_| ratio, |_| ratio)
}

fn squeezed_oracle(r: f64, omega: f64) -> f64 {
    let t2 = r.tanh().powi(2) * (2.0 * omega).exp();
    series(1.0 / r.cosh(), |n| (2 * n + 1) as f64 / (2 * n + 2) as f64 * t2, |_| t2)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const OMEGAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[test]
fn coherent_family_matches_poisson_sum() {
    for (k, &a) in [0.1, 0.5, 1.0, 1.5, 2.0].iter().enumerate() {
        let alpha = Complex64::from_polar(a, 0.7 * k as f64);
        for &w in &OMEGAS {
            let m = exp_moment(&GaussianState::coherent(alpha), w).unwrap().moment.unwrap();
            assert!(rel(m, coherent_oracle(a, w)) < 1e-8, "alpha {a} omega {w}");
            assert!(rel(m, ((w.exp() - 1.0) * a * a).exp()) < 1e-12);
        }
    }
}

#[test]
fn thermal_family_matches_geometric_sum() {
    for &m in &[0.05, 0.1, 0.2, 0.5, 1.0] {
        for &w in &OMEGAS {
            let g = GaussianState::thermal(m).unwrap();
            let v = exp_moment(&g, w).unwrap().moment.unwrap();
            assert!(rel(v, thermal_oracle(m, w)) < 1e-8, "m {m} omega {w}");
            assert!(rel(v, 1.0 / (1.0 + m - m * w.exp())) < 1e-12);
        }
    }
}

#[test]
fn squeezed_family_matches_even_fock_sum() {
    for &r in &[0.05, 0.1, 0.2, 0.3, 0.4] {
        for &w in &OMEGAS {
            let g = GaussianState::squeezed_vacuum(r).unwrap();
            let v = exp_moment(&g, w).unwrap().moment.unwrap();
            assert!(rel(v, squeezed_oracle(r, w)) < 1e-8, "r {r} omega {w}");
        }
    }
}

#[test]
fn squeezed_mean_photon_matches_fock_distribution() {
    let r: f64 = 0.5;
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut mean = 0.0;
    for n in 0..2000 {
        mean += 2.0 * n as f64 * p;
        p *= (2 * n + 1) as f64 / (2 * n + 2) as f64 * t2;
    }
    let g = GaussianState::squeezed_vacuum(r).unwrap();
    assert!((mean_photon(&g) - mean).abs() < 1e-8);
    assert!((mean - 0.27154).abs() < 1e-5);
}

#[test]
fn vacuum_is_exactly_one() {
    for &w in &OMEGAS {
        assert_eq!(exp_moment(&GaussianState::vacuum(), w).unwrap().moment, Some(1.0));
    }
}
