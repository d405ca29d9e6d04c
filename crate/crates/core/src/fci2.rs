//! Exact full CI for two-electron singlets, natural orbitals, occupation
//! entropy and the cumulant part of the pair energy.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hf::OneMatrix;
use crate::idmft::y_energy;
use crate::integrals::{EriTensor, IntegralSet};
use crate::linalg::{eigh, trace_product};
use crate::scalar::{lit, to_f64, Real};

/// Integrals in an orthonormal orbital basis.
#[derive(Clone, Debug)]
pub struct MoIntegrals<T: Real> {
    pub h: DMatrix<T>,
    pub eri: EriTensor<T>,
    pub nuclear_repulsion: T,
    /// AO → MO coefficients used for the transformation.
    pub coefficients: DMatrix<T>,
}

/// Four-index transformation `(ij|kl) = Σ C_μi C_νj C_λk C_σl (μν|λσ)`.
pub fn ao_to_mo<T: Real>(ints: &IntegralSet<T>, c: &DMatrix<T>) -> Result<MoIntegrals<T>> {
    let n = ints.n_ao();
    if c.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.nrows(),
        });
    }
    let m = c.ncols();
    let h = c.transpose() * &ints.hcore * c;

    // one quarter transformation at a time; index order rotates each pass
    let mut cur: Vec<T> = (0..n * n * n * n)
        .map(|ix| {
            let (a, b, cc, d) = (ix / (n * n * n), ix / (n * n) % n, ix / n % n, ix % n);
            ints.eri.get(a, b, cc, d)
        })
        .collect();
    let mut dims = [n, n, n, n];
    for _ in 0..4 {
        // contract the first index, append the new MO index last
        let [d0, d1, d2, d3] = dims;
        let mut next = vec![T::zero(); d1 * d2 * d3 * m];
        for p in 0..m {
            for a in 0..d0 {
                let coef = c[(a, p)];
                if coef == T::zero() {
                    continue;
                }
                let src = &cur[a * d1 * d2 * d3..(a + 1) * d1 * d2 * d3];
                for (r, &v) in src.iter().enumerate() {
                    next[r * m + p] += coef * v;
                }
            }
        }
        cur = next;
        dims = [d1, d2, d3, m];
    }
    let mut eri = EriTensor::zeros(m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    eri.set(i, j, k, l, cur[((i * m + j) * m + k) * m + l]);
                }
            }
        }
    }
    Ok(MoIntegrals {
        h,
        eri,
        nuclear_repulsion: ints.nuclear_repulsion,
        coefficients: c.clone(),
    })
}

/// Two-electron singlet state and its one-matrix in natural form.
#[derive(Clone, Debug)]
pub struct CiResult<T: Real> {
    /// Total energy including nuclear repulsion.
    pub energy: T,
    /// Electronic two-electron energy `⟨Ψ|1/r12|Ψ⟩`.
    pub two_electron: T,
    /// Symmetric spatial amplitude matrix `Ψ(1,2) = Σ_ab P_ab φ_a(1) φ_b(2)`
    /// in the MO basis, `Σ P_ab² = 1`.
    pub pair_amplitudes: DMatrix<T>,
    /// Natural occupations per spin, descending.
    pub natural_occupations: DVector<T>,
    /// Natural orbitals over the AO basis, columns matching the occupations.
    pub natural_orbitals: DMatrix<T>,
}

impl<T: Real> CiResult<T> {
    /// Builds the result for an arbitrary normalized singlet amplitude
    /// matrix, evaluating its energy as an expectation value.
    pub fn from_pair_amplitudes(mo: &MoIntegrals<T>, pair: DMatrix<T>) -> Result<Self> {
        let m = mo.h.nrows();
        if pair.nrows() != m || pair.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: pair.nrows(),
            });
        }
        let two = lit::<T>(2.0);
        let one_e = two * trace_product(&(&pair * &pair), &mo.h);
        let mut two_e = T::zero();
        for a in 0..m {
            for b in 0..m {
                let pab = pair[(a, b)];
                if pab == T::zero() {
                    continue;
                }
                for c in 0..m {
                    for d in 0..m {
                        two_e += pab * pair[(c, d)] * mo.eri.get(a, c, b, d);
                    }
                }
            }
        }
        // per-spin one-matrix in the MO basis is P Pᵀ = P²
        let d_mo = &pair * pair.transpose();
        let (vals, vecs) = eigh(&d_mo);
        let mut occ: Vec<(T, DVector<T>)> = (0..m)
            .map(|k| {
                let ao = &mo.coefficients * vecs.column(k);
                (vals[k], ao)
            })
            .collect();
        order_natural_orbitals(&mut occ);
        let natural_occupations = DVector::from_iterator(m, occ.iter().map(|(n, _)| *n));
        let natural_orbitals =
            DMatrix::from_columns(&occ.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
        Ok(Self {
            energy: one_e + two_e + mo.nuclear_repulsion,
            two_electron: two_e,
            pair_amplitudes: pair,
            natural_occupations,
            natural_orbitals,
        })
    }

    /// Spin-summed one-matrix over the AO basis in natural form.
    pub fn one_matrix(&self) -> OneMatrix<T> {
        OneMatrix {
            coefficients: self.natural_orbitals.clone(),
            occupations: self.natural_occupations.map(|n| n * lit(2.0)),
        }
    }

    /// Occupations of all spin orbitals (each spatial value twice).
    pub fn spin_orbital_occupations(&self) -> Vec<T> {
        spin_orbital_occupations(&self.natural_occupations)
    }
}

pub fn spin_orbital_occupations<T: Real>(per_spin: &DVector<T>) -> Vec<T> {
    per_spin.iter().flat_map(|&n| [n, n]).collect()
}

/// Descending occupations; inside near-degenerate blocks (|Δn| < 1e-9) by
/// the AO index of the largest-magnitude coefficient. Every vector gets
/// that coefficient positive.
fn order_natural_orbitals<T: Real>(list: &mut [(T, DVector<T>)]) {
    let lead = |v: &DVector<T>| {
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() * (T::one() + lit(1e-10)) {
                best = i;
            }
        }
        best
    };
    for (_, v) in list.iter_mut() {
        let i = lead(v);
        if v[i] < T::zero() {
            v.neg_mut();
        }
    }
    list.sort_by(|(na, _), (nb, _)| nb.partial_cmp(na).unwrap_or(std::cmp::Ordering::Equal));
    let mut start = 0;
    while start < list.len() {
        let mut end = start + 1;
        while end < list.len() && (list[end - 1].0 - list[end].0).abs() < lit(1e-9) {
            end += 1;
        }
        list[start..end].sort_by_key(|(_, v)| lead(v));
        start = end;
    }
}

fn pair_index_list(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            out.push((i, j));
        }
    }
    out
}

/// Dense singlet Hamiltonian over `{|ii⟩, (|ij⟩+|ji⟩)/√2}` (electronic).
pub fn singlet_hamiltonian<T: Real>(mo: &MoIntegrals<T>) -> DMatrix<T> {
    let m = mo.h.nrows();
    let pairs = pair_index_list(m);
    let inv_sqrt2 = T::one() / lit::<T>(2.0).sqrt();
    let entries = |(i, j): (usize, usize)| -> Vec<(usize, usize, T)> {
        if i == j {
            vec![(i, i, T::one())]
        } else {
            vec![(i, j, inv_sqrt2), (j, i, inv_sqrt2)]
        }
    };
    let n = pairs.len();
    let mut hmat = DMatrix::zeros(n, n);
    for (p, &pp) in pairs.iter().enumerate() {
        let ep = entries(pp);
        for (q, &qq) in pairs.iter().enumerate().take(p + 1) {
            let eq = entries(qq);
            let mut v = T::zero();
            for &(a, b, wp) in &ep {
                for &(c, d, wq) in &eq {
                    let mut x = mo.eri.get(a, c, b, d);
                    if b == d {
                        x += mo.h[(a, c)];
                    }
                    if a == c {
                        x += mo.h[(b, d)];
                    }
                    v += wp * wq * x;
                }
            }
            hmat[(p, q)] = v;
            hmat[(q, p)] = v;
        }
    }
    hmat
}

/// Ground singlet of a two-electron system.
pub fn fci_singlet<T: Real>(mo: &MoIntegrals<T>, n_electrons: i64) -> Result<CiResult<T>> {
    if n_electrons != 2 {
        return Err(Error::ElectronCount {
            expected: 2,
            found: n_electrons,
        });
    }
    let m = mo.h.nrows();
    let hmat = singlet_hamiltonian(mo);
    let (_, vecs) = eigh(&hmat);
    let inv_sqrt2 = T::one() / lit::<T>(2.0).sqrt();
    let mut pair = DMatrix::zeros(m, m);
    for (p, (i, j)) in pair_index_list(m).into_iter().enumerate() {
        let c = vecs[(p, 0)];
        if i == j {
            pair[(i, i)] = c;
        } else {
            pair[(i, j)] = c * inv_sqrt2;
            pair[(j, i)] = c * inv_sqrt2;
        }
    }
    CiResult::from_pair_amplitudes(mo, pair)
}

/// Candidate occupation-entropy functionals over spin-orbital occupations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EntropyForm {
    /// `-Σ n ln n`
    Shannon,
    /// `-Σ [n ln n + (1-n) ln(1-n)]`
    #[default]
    Binary,
}

impl EntropyForm {
    pub const ALL: [EntropyForm; 2] = [EntropyForm::Shannon, EntropyForm::Binary];

    pub fn label(self) -> &'static str {
        match self {
            EntropyForm::Shannon => "shannon (-sum n ln n)",
            EntropyForm::Binary => "binary (-sum [n ln n + (1-n) ln(1-n)])",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            EntropyForm::Shannon => "shannon",
            EntropyForm::Binary => "binary",
        }
    }
}

impl fmt::Display for EntropyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EntropyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shannon" | "a" => Ok(EntropyForm::Shannon),
            "binary" | "b" => Ok(EntropyForm::Binary),
            other => Err(Error::Invalid(format!("unknown entropy form {other:?}"))),
        }
    }
}

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlnx<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}

/// Entropy of spin-orbital occupations `n_i ∈ [0, 1]`.
pub fn entropy<T: Real>(occupations: &[T], form: EntropyForm) -> Result<T> {
    let tol = lit::<T>(1e-10);
    let mut s = T::zero();
    for (index, &n) in occupations.iter().enumerate() {
        if n < -tol || n > T::one() + tol {
            return Err(Error::OccupationOutOfRange {
                index,
                value: to_f64(n),
            });
        }
        let n = n.max(T::zero()).min(T::one());
        s -= match form {
            EntropyForm::Shannon => xlnx(n),
            EntropyForm::Binary => xlnx(n) + xlnx(T::one() - n),
        };
    }
    Ok(s.max(T::zero()))
}

/// Pair-energy partition of a CI state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulantEnergy<T: Real> {
    pub e_cum: T,
    pub y: T,
    pub e_ee: T,
}

/// `E_ee = E_CI - Tr(γ h) - V_nn`, `E_cum = E_ee - Y[γ]`.
pub fn cumulant_energy<T: Real>(
    ci: &CiResult<T>,
    ints: &IntegralSet<T>,
) -> Result<CumulantEnergy<T>> {
    let gamma = ci.one_matrix().ao();
    ints.check_dim(gamma.nrows())?;
    let e_ee = ci.energy - trace_product(&gamma, &ints.hcore) - ints.nuclear_repulsion;
    let y = y_energy(&gamma, &ints.eri)?;
    Ok(CumulantEnergy {
        e_cum: e_ee - y,
        y,
        e_ee,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hf::{rhf_scf, ScfOptions};
    use crate::system::{build_ao_basis, parse_basis, Molecule, CC_PVDZ};

    fn setup(a: &str, b: &str, r_bohr: f64, q: i32) -> (Molecule<f64>, IntegralSet<f64>) {
        let m = Molecule::diatomic(a, b, r_bohr, q).unwrap();
        let map = parse_basis(CC_PVDZ).unwrap();
        let basis = build_ao_basis(&m, &map, "cc-pvdz").unwrap();
        let ints = IntegralSet::compute(&m, &basis).unwrap();
        (m, ints)
    }

    #[test]
    fn entropy_edge_cases() {
        assert_eq!(
            entropy(&[1.0, 1.0, 0.0, 0.0], EntropyForm::Binary).unwrap(),
            0.0
        );
        assert_eq!(
            entropy(&[1.0, 1.0, 0.0, 0.0], EntropyForm::Shannon).unwrap(),
            0.0
        );
        let half = entropy(&[0.5; 4], EntropyForm::Binary).unwrap();
        assert!((half - 4.0 * 2f64.ln()).abs() < 1e-15);
        let half_a = entropy(&[0.5; 4], EntropyForm::Shannon).unwrap();
        assert!((half_a - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            entropy(&[1.1, 0.0], EntropyForm::Binary),
            Err(Error::OccupationOutOfRange { index: 0, .. })
        ));
        assert!(entropy(&[-1e-12, 1.0 + 1e-12], EntropyForm::Binary).is_ok());
        assert_eq!("b".parse::<EntropyForm>().unwrap(), EntropyForm::Binary);
    }

    #[test]
    fn identity_transformation_in_orthonormal_basis() {
        let (_, ints) = setup("H", "H", 1.4, 0);
        // Löwdin-orthogonalized AOs form an orthonormal set; transform into
        // them, then apply the identity
        let x = crate::linalg::inverse_sqrt(&ints.overlap).unwrap();
        let mo = ao_to_mo(&ints, &x).unwrap();
        let mut ortho = ints.clone();
        ortho.overlap = DMatrix::identity(10, 10);
        ortho.hcore = mo.h.clone();
        ortho.eri = mo.eri.clone();
        let again = ao_to_mo(&ortho, &DMatrix::identity(10, 10)).unwrap();
        assert!((&again.h - &mo.h).amax() < 1e-14);
        assert!(again.eri.symmetry_error() < 1e-12);
        for i in 0..10 {
            for j in 0..10 {
                assert!((again.eri.get(i, j, j, i) - mo.eri.get(i, j, j, i)).abs() < 1e-14);
            }
        }
        // Tr(Cᵀ H C) = Tr(H S⁻¹) for any S-orthonormal C
        let s_inv = ints.overlap.clone().try_inverse().unwrap();
        let tr = crate::linalg::trace_product(&ints.hcore, &s_inv);
        assert!((mo.h.trace() - tr).abs() < 1e-10);
        assert!(matches!(
            ao_to_mo(&ints, &DMatrix::identity(4, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn heh_fci_and_cumulant() {
        let (m, ints) = setup("He", "H", 0.8 * crate::system::ANGSTROM_TO_BOHR, 1);
        let hf = rhf_scf(&m, &ints, &ScfOptions::default()).unwrap();
        let mo = ao_to_mo(&ints, &hf.orbitals.coefficients).unwrap();
        let ci = fci_singlet(&mo, 2).unwrap();
        assert!((ci.energy - -2.960888).abs() < 1e-5, "{}", ci.energy);
        assert!(ci.energy <= hf.energy);
        let occ = &ci.natural_occupations;
        assert!((occ.sum() - 1.0).abs() < 1e-10);
        assert!(occ.iter().all(|&n| (-1e-10..=1.0 + 1e-10).contains(&n)));
        assert!(occ.as_slice().windows(2).all(|w| w[0] >= w[1] - 1e-9));

        let cum = cumulant_energy(&ci, &ints).unwrap();
        assert!((cum.e_cum - -0.084944).abs() < 1e-4, "{}", cum.e_cum);
        // the 2RDM contraction gives the same pair energy
        assert!((cum.e_ee - ci.two_electron).abs() < 1e-10);

        // γ re-synthesized from its natural expansion
        let gamma = ci.one_matrix();
        assert!((gamma.electron_count(&ints.overlap) - 2.0).abs() < 1e-10);
        let c = &mo.coefficients;
        let g_direct = c * (&ci.pair_amplitudes * &ci.pair_amplitudes * 2.0) * c.transpose();
        assert!((gamma.ao() - g_direct).amax() < 1e-12);
    }

    #[test]
    fn single_determinant_has_no_cumulant() {
        let (m, ints) = setup("He", "H", 2.0, 1);
        let hf = rhf_scf(&m, &ints, &ScfOptions::default()).unwrap();
        let mo = ao_to_mo(&ints, &hf.orbitals.coefficients).unwrap();
        let mut pair = DMatrix::zeros(10, 10);
        pair[(0, 0)] = 1.0;
        let det = CiResult::from_pair_amplitudes(&mo, pair).unwrap();
        assert!((det.energy - hf.energy).abs() < 1e-9);
        let cum = cumulant_energy(&det, &ints).unwrap();
        assert!(cum.e_cum.abs() < 1e-12);
        assert_eq!(
            entropy(&det.spin_orbital_occupations(), EntropyForm::Binary).unwrap(),
            0.0
        );
    }

    #[test]
    fn wrong_electron_count() {
        let (_, ints) = setup("H", "H", 1.4, 0);
        let mo = ao_to_mo(&ints, &crate::linalg::inverse_sqrt(&ints.overlap).unwrap()).unwrap();
        assert!(matches!(
            fci_singlet(&mo, 4),
            Err(Error::ElectronCount { found: 4, .. })
        ));
    }
}
