#![allow(dead_code)]

pub mod brute_fci;
pub mod quadrature;

use idmft_core::system::{
    build_ao_basis, builtin_basis, parse_basis, primitive_norm, AoFunction, Molecule,
};
use idmft_core::IntegralSet;
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// HeH+ or H2 integrals in cc-pVDZ, bond length in bohr.
pub fn integrals(a: &str, b: &str, r_bohr: f64, charge: i32) -> (Molecule<f64>, IntegralSet) {
    let m = Molecule::diatomic(a, b, r_bohr, charge).unwrap();
    let map = parse_basis(builtin_basis("cc-pvdz").unwrap()).unwrap();
    let basis = build_ao_basis(&m, &map, "cc-pvdz").unwrap();
    let ints = IntegralSet::compute(&m, &basis).unwrap();
    (m, ints)
}

const POWERS: [[u8; 3]; 4] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// Random s or p contraction with centre in a 3 bohr box.
pub fn random_ao(rng: &mut ChaCha8Rng, max_prims: usize) -> AoFunction<f64> {
    let powers = POWERS[rng.gen_range(0..4)];
    let l = powers.iter().sum::<u8>();
    let n = rng.gen_range(1..=max_prims);
    let exponents: Vec<f64> = (0..n).map(|_| rng.gen_range(0.15..3.0)).collect();
    let coefficients = exponents
        .iter()
        .map(|&a| rng.gen_range(0.2..1.0) * primitive_norm(a, l))
        .collect();
    AoFunction {
        atom: 0,
        center: Vector3::new(
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
        ),
        powers,
        exponents,
        coefficients,
    }
}
