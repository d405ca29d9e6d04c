//! Determinant-space FCI for two electrons, written from the Slater-Condon
//! rules over spin orbitals with no shared code beyond the AO integrals.

use idmft_core::IntegralSet;
use nalgebra::{DMatrix, SymmetricEigen};

/// Löwdin-orthogonalized MO integrals, computed with naive loops.
fn orthonormal_integrals(ints: &IntegralSet) -> (DMatrix<f64>, Vec<f64>, usize) {
    let n = ints.n_ao();
    let eig = SymmetricEigen::new(ints.overlap.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    let x = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    let h = x.transpose() * &ints.hcore * &x;
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let mut a = vec![0.0; n * n * n * n];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    a[idx(p, q, r, s)] = ints.eri.get(p, q, r, s);
                }
            }
        }
    }
    // four quarter transforms, one index at a time
    for slot in 0..4 {
        let mut b = vec![0.0; a.len()];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            let (src, c) = match slot {
                                0 => (idx(m, q, r, s), x[(m, p)]),
                                1 => (idx(p, m, r, s), x[(m, q)]),
                                2 => (idx(p, q, m, s), x[(m, r)]),
                                _ => (idx(p, q, r, m), x[(m, s)]),
                            };
                            acc += c * a[src];
                        }
                        b[idx(p, q, r, s)] = acc;
                    }
                }
            }
        }
        a = b;
    }
    (h, a, n)
}

/// `(spatial, spin)` with spin 0 = α, 1 = β.
type SpinOrbital = (usize, u8);

fn matrix_element(
    h: &DMatrix<f64>,
    g: &[f64],
    n: usize,
    bra: [SpinOrbital; 2],
    ket: [SpinOrbital; 2],
) -> f64 {
    let one = |a: SpinOrbital, b: SpinOrbital| if a.1 == b.1 { h[(a.0, b.0)] } else { 0.0 };
    let delta = |a: SpinOrbital, b: SpinOrbital| if a == b { 1.0 } else { 0.0 };
    // physicist ⟨ab|cd⟩ = (ac|bd) with spin on each electron
    let two = |a: SpinOrbital, b: SpinOrbital, c: SpinOrbital, d: SpinOrbital| {
        if a.1 != c.1 || b.1 != d.1 {
            0.0
        } else {
            g[((a.0 * n + c.0) * n + b.0) * n + d.0]
        }
    };
    let [p, q] = bra;
    let [r, s] = ket;
    one(p, r) * delta(q, s) - one(p, s) * delta(q, r) + one(q, s) * delta(p, r)
        - one(q, r) * delta(p, s)
        + two(p, q, r, s)
        - two(p, q, s, r)
}

fn block_spectrum(h: &DMatrix<f64>, g: &[f64], n: usize, dets: &[[SpinOrbital; 2]]) -> Vec<f64> {
    let m = DMatrix::from_fn(dets.len(), dets.len(), |i, j| {
        matrix_element(h, g, n, dets[i], dets[j])
    });
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Lowest singlet energy (electronic + nuclear). The Ms = 0 spectrum holds
/// singlets and one component of every triplet; the Ms = 1 block supplies
/// the triplets to strike out.
pub fn singlet_ground_energy(ints: &IntegralSet) -> f64 {
    let (h, g, n) = orthonormal_integrals(ints);
    let mut ms0 = Vec::new();
    for i in 0..n {
        for j in 0..n {
            ms0.push([(i, 0u8), (j, 1u8)]);
        }
    }
    let mut ms1 = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            ms1.push([(i, 0u8), (j, 0u8)]);
        }
    }
    let mut zero = block_spectrum(&h, &g, n, &ms0);
    for t in block_spectrum(&h, &g, n, &ms1) {
        let k = zero
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(k, _)| k)
            .unwrap();
        assert!(
            (zero[k] - t).abs() < 1e-8,
            "triplet level {t} missing from Ms=0 block"
        );
        zero.remove(k);
    }
    zero[0] + ints.nuclear_repulsion
}
