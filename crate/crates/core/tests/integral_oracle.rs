//! Boys function and ERI symmetry checks. The randomized integral
//! comparisons run in the acceptance target.

mod common;

use common::quadrature;
use common::random_ao;
use idmft_core::integrals::{boys, eri};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn boys_matches_quadrature() {
    for &x in &[0.0, 1e-3, 0.5, 2.0, 7.5, 15.0, 29.0, 31.0, 60.0] {
        let f = boys::<f64>(4, x);
        for (m, v) in f.iter().enumerate() {
            let q = quadrature::boys(m, x);
            assert!((v - q).abs() < 1e-13, "F_{m}({x}): {v} vs {q}");
        }
    }
}

#[test]
fn eri_permutational_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let f: Vec<_> = (0..4).map(|_| random_ao(&mut rng, 2)).collect();
        let v = eri(&f[0], &f[1], &f[2], &f[3]);
        for w in [
            eri(&f[2], &f[3], &f[0], &f[1]),
            eri(&f[1], &f[0], &f[2], &f[3]),
            eri(&f[0], &f[1], &f[3], &f[2]),
        ] {
            assert!((v - w).abs() < 1e-12);
        }
    }
}
