//! Closed-shell restricted Hartree-Fock.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::diis::Diis;
use crate::error::{Error, Result};
use crate::integrals::{EriTensor, IntegralSet};
use crate::linalg::{eigh, inverse_sqrt, max_abs, solve_roothaan, sqrt_psd, trace_product};
use crate::scalar::{lit, to_f64, Real};
use crate::system::Molecule;

/// Spatial orbitals over the AO basis with spin-summed occupations.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalSet<T: Real> {
    /// Column `i` is orbital `i`.
    pub coefficients: DMatrix<T>,
    /// Orbital energies, ascending.
    pub energies: DVector<T>,
    /// Spin-summed occupations `f_i ∈ [0, 2]`.
    pub occupations: DVector<T>,
}

impl<T: Real> OrbitalSet<T> {
    pub fn one_matrix(&self) -> OneMatrix<T> {
        OneMatrix {
            coefficients: self.coefficients.clone(),
            occupations: self.occupations.clone(),
        }
    }

    /// Largest deviation of `CᵀSC` from the identity.
    pub fn orthonormality_error(&self, s: &DMatrix<T>) -> T {
        let n = self.coefficients.ncols();
        max_abs(&(self.coefficients.transpose() * s * &self.coefficients - DMatrix::identity(n, n)))
    }
}

/// One-particle density matrix in the form `(C, f)`, spin-summed.
#[derive(Clone, Debug, PartialEq)]
pub struct OneMatrix<T: Real> {
    pub coefficients: DMatrix<T>,
    pub occupations: DVector<T>,
}

impl<T: Real> OneMatrix<T> {
    /// `γ_ao = C diag(f) Cᵀ`.
    pub fn ao(&self) -> DMatrix<T> {
        density_from(&self.coefficients, &self.occupations)
    }

    /// `Tr(γ S)`, the electron count.
    pub fn electron_count(&self, s: &DMatrix<T>) -> T {
        trace_product(&self.ao(), s)
    }

    /// Eigenvalues of `S^{1/2} γ S^{1/2}` (spin-summed occupations), ascending.
    pub fn occupation_spectrum(&self, s: &DMatrix<T>) -> DVector<T> {
        let root = sqrt_psd(s);
        eigh(&(&root * self.ao() * &root)).0
    }
}

pub fn density_from<T: Real>(c: &DMatrix<T>, occ: &DVector<T>) -> DMatrix<T> {
    let scaled = DMatrix::from_fn(c.nrows(), c.ncols(), |r, k| c[(r, k)] * occ[k]);
    scaled * c.transpose()
}

/// Coulomb and exchange matrices
/// `J_μν = Σ (μν|λσ) γ_λσ`, `K_μν = Σ (μλ|νσ) γ_λσ`.
pub fn build_jk<T: Real>(
    gamma: &DMatrix<T>,
    eri: &EriTensor<T>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = eri.dim();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gamma.nrows(),
        });
    }
    let mut j = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..=mu {
            let mut jv = T::zero();
            let mut kv = T::zero();
            for la in 0..n {
                for si in 0..n {
                    let g = gamma[(la, si)];
                    jv += eri.get(mu, nu, la, si) * g;
                    kv += eri.get(mu, la, nu, si) * g;
                }
            }
            j[(mu, nu)] = jv;
            j[(nu, mu)] = jv;
            k[(mu, nu)] = kv;
            k[(nu, mu)] = kv;
        }
    }
    Ok((j, k))
}

#[derive(Clone, Debug)]
pub struct ScfOptions<T: Real> {
    pub max_iter: usize,
    pub energy_tol: T,
    pub commutator_tol: T,
    pub diis_size: usize,
    pub damping: T,
    pub damping_iters: usize,
    pub level_shift: T,
    pub level_shift_gap: T,
    /// Starting orbitals; the core-Hamiltonian guess when `None`.
    pub initial_guess: Option<DMatrix<T>>,
}

impl<T: Real> Default for ScfOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 200,
            energy_tol: lit(1e-10),
            commutator_tol: lit(1e-8),
            diis_size: 8,
            damping: lit(0.3),
            damping_iters: 3,
            level_shift: lit(0.2),
            level_shift_gap: lit(0.05),
            initial_guess: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HfResult<T: Real> {
    pub orbitals: OrbitalSet<T>,
    pub energy: T,
    pub one_electron: T,
    pub two_electron: T,
    pub nuclear_repulsion: T,
    pub iterations: usize,
}

/// Orbitals of the core Hamiltonian in the symmetrically orthogonalized basis.
pub fn core_guess<T: Real>(ints: &IntegralSet<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let x = inverse_sqrt(&ints.overlap)?;
    Ok(solve_roothaan(&ints.hcore, &x))
}

fn aufbau<T: Real>(n: usize, n_electrons: usize) -> DVector<T> {
    DVector::from_fn(n, |i, _| {
        if i < n_electrons / 2 {
            lit(2.0)
        } else {
            T::zero()
        }
    })
}

/// `F D S - S D F`.
pub(crate) fn commutator<T: Real>(f: &DMatrix<T>, d: &DMatrix<T>, s: &DMatrix<T>) -> DMatrix<T> {
    let fds = f * d * s;
    &fds - fds.transpose()
}

/// Runs closed-shell RHF to self-consistency.
pub fn rhf_scf<T: Real>(
    molecule: &Molecule<T>,
    ints: &IntegralSet<T>,
    opts: &ScfOptions<T>,
) -> Result<HfResult<T>> {
    let n_el = molecule.n_electrons();
    if n_el <= 0 || n_el % 2 != 0 {
        return Err(Error::Invalid(format!(
            "closed-shell RHF needs a positive even electron count, got {n_el}"
        )));
    }
    let n_el = n_el as usize;
    let n = ints.n_ao();
    if n_el > 2 * n {
        return Err(Error::Invalid("more electrons than spin orbitals".into()));
    }
    let s = &ints.overlap;
    let h = &ints.hcore;
    let x = inverse_sqrt(s)?;
    let occ = aufbau::<T>(n, n_el);

    let mut c = match &opts.initial_guess {
        Some(c0) => {
            ints.check_dim(c0.nrows())?;
            c0.clone()
        }
        None => solve_roothaan(h, &x).1,
    };
    let mut d = density_from(&c, &occ);
    let mut diis = Diis::new(opts.diis_size);
    let mut prev_fock: Option<DMatrix<T>> = None;
    let mut prev_energy: Option<T> = None;
    let half = lit::<T>(0.5);

    let mut energy = T::zero();
    let mut residual = T::zero();
    for iter in 1..=opts.max_iter {
        let (j, k) = build_jk(&d, &ints.eri)?;
        let fock = h + &j - &k * half;
        let one = trace_product(&d, h);
        let two = half * trace_product(&d, &(&j - &k * half));
        energy = one + two + ints.nuclear_repulsion;
        let err = commutator(&fock, &d, s);
        residual = max_abs(&err);
        let delta = prev_energy.map(|e| energy - e).unwrap_or(energy);
        debug!(
            "rhf iter {iter:4}  E = {:.12}  dE = {:.3e}  |FDS-SDF| = {:.3e}",
            to_f64(energy),
            to_f64(delta),
            to_f64(residual)
        );
        if prev_energy.is_some() && delta.abs() < opts.energy_tol && residual < opts.commutator_tol
        {
            let (eps, c_final) = solve_roothaan(&fock, &x);
            return Ok(HfResult {
                orbitals: OrbitalSet {
                    coefficients: c_final,
                    energies: eps,
                    occupations: occ,
                },
                energy,
                one_electron: one,
                two_electron: two,
                nuclear_repulsion: ints.nuclear_repulsion,
                iterations: iter,
            });
        }
        prev_energy = Some(energy);

        diis.push(fock.clone(), err);
        let mut f_use = if iter <= opts.damping_iters {
            match &prev_fock {
                Some(fp) => &fock * (T::one() - opts.damping) + fp * opts.damping,
                None => fock.clone(),
            }
        } else {
            diis.extrapolate().unwrap_or_else(|| fock.clone())
        };
        prev_fock = Some(fock.clone());

        let n_occ = n_el / 2;
        if n_occ < n {
            let (eps, _) = solve_roothaan(&fock, &x);
            if eps[n_occ] - eps[n_occ - 1] < opts.level_shift_gap {
                // shift the virtual space: σ (S - ½ S D S)
                let sds = s * &d * s;
                f_use += (s - sds * half) * opts.level_shift;
            }
        }
        let (_, c_new) = solve_roothaan(&f_use, &x);
        c = c_new;
        d = density_from(&c, &occ);
    }
    Err(Error::NoConvergence {
        method: "rhf",
        iterations: opts.max_iter,
        energy: to_f64(energy),
        residual: to_f64(residual),
        diagnostics: String::new(),
    })
}
