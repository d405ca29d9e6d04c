//! Entropic-cumulant density-matrix SCF.
//!
//! The pair energy is `Y[γ] + E_cum` with either
//! `E_cum = -κ S(n) - b` (plain) or `E_cum = A E_x S(n) - b`
//! (exchange-weighted). Orbitals diagonalize the corresponding Fock
//! operator; occupations follow from the orbital energies through the
//! stationarity condition of the entropic term, which for the binary
//! entropy is a Fermi-Dirac distribution.

use std::collections::VecDeque;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::diis::Diis;
use crate::error::{Error, Result};
use crate::fci2::{entropy, spin_orbital_occupations, EntropyForm};
use crate::hf::{build_jk, commutator, density_from, OrbitalSet};
use crate::integrals::{EriTensor, IntegralSet};
use crate::linalg::{inverse_sqrt, max_abs, solve_roothaan, trace_product};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::system::{build_ao_basis, BasisMap, Molecule};

/// Direct plus exchange energy of a spin-summed one-matrix,
/// `Y = ½ Tr(γ J[γ]) - ¼ Tr(γ K[γ])`.
pub fn y_energy<T: Real>(gamma: &DMatrix<T>, eri: &EriTensor<T>) -> Result<T> {
    let (j, k) = build_jk(gamma, eri)?;
    Ok(lit::<T>(0.5) * trace_product(gamma, &j) - lit::<T>(0.25) * trace_product(gamma, &k))
}

/// Exchange energy `E_x = -½ Σ_ij n_i n_j ⟨ij|ji⟩` over spin orbitals,
/// i.e. `-¼ Tr(γ K[γ])` for spin-summed `γ`.
pub fn exchange_energy<T: Real>(gamma: &DMatrix<T>, eri: &EriTensor<T>) -> Result<T> {
    let (_, k) = build_jk(gamma, eri)?;
    Ok(-lit::<T>(0.25) * trace_product(gamma, &k))
}

const EXP_CLAMP: f64 = 500.0;

/// `n_i = 1 / (1 + exp((ε_i - μ)/T))`.
pub fn fermi_dirac<T: Real>(eps: &DVector<T>, mu: T, temperature: T) -> DVector<T> {
    let clamp = lit::<T>(EXP_CLAMP);
    eps.map(|e| {
        let x = ((e - mu) / temperature).max(-clamp).min(clamp);
        T::one() / (T::one() + x.exp())
    })
}

/// `n_i = min(1, exp((μ - ε_i)/T - 1))`: the stationary occupations of
/// `-T Σ n ln n` under the upper bound `n ≤ 1`.
pub fn capped_boltzmann<T: Real>(eps: &DVector<T>, mu: T, temperature: T) -> DVector<T> {
    let clamp = lit::<T>(EXP_CLAMP);
    eps.map(|e| {
        let x = ((mu - e) / temperature - T::one()).max(-clamp).min(clamp);
        x.exp().min(T::one())
    })
}

fn occupations_for<T: Real>(
    form: EntropyForm,
    eps: &DVector<T>,
    mu: T,
    temperature: T,
) -> DVector<T> {
    match form {
        EntropyForm::Binary => fermi_dirac(eps, mu, temperature),
        EntropyForm::Shannon => capped_boltzmann(eps, mu, temperature),
    }
}

/// Chemical potential with `Σ_i 2 n_i(μ) = N`, by bisection on
/// `[min ε - 50T, max ε + 50T]`.
pub fn solve_mu<T: Real>(eps: &DVector<T>, temperature: T, n_electrons: T) -> Result<T> {
    solve_mu_with(EntropyForm::Binary, eps, temperature, n_electrons)
}

pub fn solve_mu_with<T: Real>(
    form: EntropyForm,
    eps: &DVector<T>,
    temperature: T,
    n_electrons: T,
) -> Result<T> {
    let m = eps.len();
    if m == 0 || n_electrons <= T::zero() || n_electrons >= from_usize::<T>(2 * m) {
        return Err(Error::ParticleNumber {
            n: to_f64(n_electrons),
            max: 2 * m,
        });
    }
    if temperature <= T::zero() {
        return Err(Error::Invalid(
            "occupation temperature must be positive".into(),
        ));
    }
    let two = lit::<T>(2.0);
    let count = |mu: T| occupations_for(form, eps, mu, temperature).sum() * two;
    let margin = lit::<T>(50.0) * temperature;
    let lo0 = eps.min() - margin;
    let hi0 = eps.max()
        + margin
        + if form == EntropyForm::Shannon {
            temperature * lit(2.0)
        } else {
            T::zero()
        };
    let (mut lo, mut hi) = (lo0, hi0);
    let mut best = (lo, (count(lo) - n_electrons).abs());
    for _ in 0..300 {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = count(mid) - n_electrons;
        if r.abs() < best.1 {
            best = (mid, r.abs());
        }
        if r == T::zero() {
            break;
        }
        if r < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

/// Which cumulant model to use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant<T: Real> {
    /// `E_cum = -κ S - b`
    Plain { kappa: T },
    /// `E_cum = A E_x S - b`
    ExchangeWeighted { a: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropicParams<T: Real> {
    pub variant: Variant<T>,
    pub b: T,
    pub entropy: EntropyForm,
}

impl<T: Real> EntropicParams<T> {
    pub fn plain(kappa: T, b: T) -> Self {
        Self {
            variant: Variant::Plain { kappa },
            b,
            entropy: EntropyForm::default(),
        }
    }

    pub fn exchange_weighted(a: T, b: T) -> Self {
        Self {
            variant: Variant::ExchangeWeighted { a },
            b,
            entropy: EntropyForm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.variant {
            Variant::Plain { kappa } if kappa <= T::zero() => {
                Err(Error::Invalid("kappa must be positive".into()))
            }
            Variant::ExchangeWeighted { a } if a <= T::zero() => {
                Err(Error::Invalid("A must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Occupations over the current orbitals, per spin and aligned with the
/// orbital energies.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationState<T: Real> {
    pub n: DVector<T>,
    pub mu: T,
    pub temperature: T,
    pub entropy: T,
    pub exchange_energy: T,
}

impl<T: Real> OccupationState<T> {
    /// Spin orbitals with `n < 0.5` count as virtual.
    pub fn is_virtual(&self, i: usize) -> bool {
        self.n[i] < lit(0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown<T: Real> {
    pub one_electron: T,
    pub y: T,
    /// `-κS` or `A E_x S`.
    pub entropic: T,
    /// `-b`.
    pub shift: T,
    pub nuclear_repulsion: T,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn total(&self) -> T {
        self.one_electron + self.y + self.entropic + self.shift + self.nuclear_repulsion
    }
}

#[derive(Clone, Debug)]
pub struct IdmftResult<T: Real> {
    /// Orbitals with spin-summed occupations `2 n_i`.
    pub orbitals: OrbitalSet<T>,
    pub occupations: OccupationState<T>,
    pub energy: T,
    pub breakdown: EnergyBreakdown<T>,
    pub iterations: usize,
    /// All occupations integral to 1e-14: the entropic term is inactive.
    pub collapsed: bool,
}

#[derive(Clone, Debug)]
pub struct IdmftOptions<T: Real> {
    pub max_iter: usize,
    pub occupation_tol: T,
    pub energy_tol: T,
    pub commutator_tol: T,
    /// Weight of the new Fermi-Dirac occupations in the linear mix.
    pub mixing: T,
    pub diis_size: usize,
    /// Iterations before DIIS extrapolation kicks in.
    pub diis_start: usize,
    pub initial_guess: Option<DMatrix<T>>,
}

impl<T: Real> Default for IdmftOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 500,
            occupation_tol: lit(1e-8),
            energy_tol: lit(1e-10),
            commutator_tol: lit(1e-9),
            mixing: lit(0.5),
            diis_size: 8,
            diis_start: 4,
            initial_guess: None,
        }
    }
}

struct Evaluation<T: Real> {
    fock: DMatrix<T>,
    breakdown: EnergyBreakdown<T>,
    entropy: T,
    exchange: T,
}

fn evaluate<T: Real>(
    ints: &IntegralSet<T>,
    params: &EntropicParams<T>,
    c: &DMatrix<T>,
    n: &DVector<T>,
) -> Result<Evaluation<T>> {
    let gamma = density_from(c, &n.map(|x| x * lit(2.0)));
    let (j, k) = build_jk(&gamma, &ints.eri)?;
    let half = lit::<T>(0.5);
    let quarter = lit::<T>(0.25);
    let s = entropy(&spin_orbital_occupations(n), params.entropy)?;
    let ex = -quarter * trace_product(&gamma, &k);
    let y = half * trace_product(&gamma, &j) + ex;
    let (exchange_scale, entropic) = match params.variant {
        Variant::Plain { kappa } => (T::one(), -kappa * s),
        Variant::ExchangeWeighted { a } => (T::one() + a * s, a * ex * s),
    };
    let fock = &ints.hcore + &j - &k * (half * exchange_scale);
    Ok(Evaluation {
        fock,
        breakdown: EnergyBreakdown {
            one_electron: trace_product(&gamma, &ints.hcore),
            y,
            entropic,
            shift: -params.b,
            nuclear_repulsion: ints.nuclear_repulsion,
        },
        entropy: s,
        exchange: ex,
    })
}

fn temperature<T: Real>(params: &EntropicParams<T>, exchange: T) -> T {
    match params.variant {
        Variant::Plain { kappa } => kappa,
        // -∂E_cum/∂S, floored so a vanishing exchange energy cannot stall μ
        Variant::ExchangeWeighted { a } => (-a * exchange).max(lit(1e-12)),
    }
}

/// Self-consistent orbitals and occupations for a two-electron system.
pub fn idmft_scf<T: Real>(
    molecule: &Molecule<T>,
    ints: &IntegralSet<T>,
    params: &EntropicParams<T>,
    opts: &IdmftOptions<T>,
) -> Result<IdmftResult<T>> {
    params.validate()?;
    let n_el = molecule.n_electrons();
    if n_el != 2 {
        return Err(Error::ElectronCount {
            expected: 2,
            found: n_el,
        });
    }
    let n_electrons = from_usize::<T>(n_el as usize);
    let m = ints.n_ao();
    let x = inverse_sqrt(&ints.overlap)?;
    let mut c = match &opts.initial_guess {
        Some(c0) => {
            ints.check_dim(c0.nrows())?;
            c0.clone()
        }
        None => solve_roothaan(&ints.hcore, &x).1,
    };
    let mut n = DVector::from_fn(m, |i, _| if i == 0 { T::one() } else { T::zero() });
    let mut diis = Diis::new(opts.diis_size);
    let mut prev_energy: Option<T> = None;
    let mut history: VecDeque<(T, T)> = VecDeque::with_capacity(8);
    let mut state = evaluate(ints, params, &c, &n)?;

    for iter in 1..=opts.max_iter {
        let energy = state.breakdown.total() + params.b;
        let gamma = density_from(&c, &n.map(|v| v * lit(2.0)));
        let err = commutator(&state.fock, &gamma, &ints.overlap);
        let residual = max_abs(&err);

        let f_use = if iter > opts.diis_start {
            diis.push(state.fock.clone(), err);
            diis.extrapolate().unwrap_or_else(|| state.fock.clone())
        } else {
            state.fock.clone()
        };
        let (eps, c_new) = solve_roothaan(&f_use, &x);
        let t = temperature(params, state.exchange);
        let mu = solve_mu_with(params.entropy, &eps, t, n_electrons)?;
        let target = occupations_for(params.entropy, &eps, mu, t);
        let n_new = &n * (T::one() - opts.mixing) + &target * opts.mixing;
        let dn = (&n_new - &n).amax();
        let de = prev_energy.map(|e| energy - e).unwrap_or(energy);
        debug!(
            "idmft iter {iter:4}  E = {:.12}  dE = {:.3e}  max|dn| = {:.3e}  |[F,γ]| = {:.3e}  mu = {:.6}",
            to_f64(energy - params.b),
            to_f64(de),
            to_f64(dn),
            to_f64(residual),
            to_f64(mu)
        );
        if history.len() == 8 {
            history.pop_front();
        }
        history.push_back((de, dn));

        let converged = prev_energy.is_some()
            && dn < opts.occupation_tol
            && de.abs() < opts.energy_tol
            && residual < opts.commutator_tol;
        prev_energy = Some(energy);
        c = c_new;
        n = n_new;
        state = evaluate(ints, params, &c, &n)?;
        if converged {
            // report orbital energies of the operator built from the final γ
            let (eps_final, c_final) = solve_roothaan(&state.fock, &x);
            let final_state = evaluate(ints, params, &c_final, &n)?;
            let collapsed = n
                .iter()
                .all(|&v| v.abs() < lit(1e-14) || (v - T::one()).abs() < lit(1e-14));
            if collapsed {
                warn!("idmft: occupations collapsed to integers; entropic term inactive");
            }
            let occupations = OccupationState {
                n: n.clone(),
                mu,
                temperature: temperature(params, final_state.exchange),
                entropy: final_state.entropy,
                exchange_energy: final_state.exchange,
            };
            return Ok(IdmftResult {
                orbitals: OrbitalSet {
                    coefficients: c_final,
                    energies: eps_final,
                    occupations: n.map(|v| v * lit(2.0)),
                },
                occupations,
                energy: final_state.breakdown.total(),
                breakdown: final_state.breakdown,
                iterations: iter,
                collapsed,
            });
        }
    }
    let diagnostics = history
        .iter()
        .map(|(de, dn)| format!("dE={:.2e} dn={:.2e}", to_f64(*de), to_f64(*dn)))
        .collect::<Vec<_>>()
        .join("; ");
    Err(Error::NoConvergence {
        method: "idmft",
        iterations: opts.max_iter,
        energy: to_f64(state.breakdown.total()),
        residual: to_f64(history.back().map(|h| h.1).unwrap_or(T::zero())),
        diagnostics,
    })
}

/// Lowest two orbital energies of the converged operator along a
/// diatomic bond-length scan (bond lengths in bohr).
pub fn orbital_energy_trace<T: Real>(
    atoms: (&str, &str),
    charge: i32,
    shells: &BasisMap<T>,
    params: &EntropicParams<T>,
    r_list: &[T],
    opts: &IdmftOptions<T>,
) -> Result<Vec<(T, T, T)>> {
    if !matches!(params.variant, Variant::ExchangeWeighted { .. }) {
        return Err(Error::Invalid(
            "orbital energy trace expects the exchange-weighted variant".into(),
        ));
    }
    r_list
        .iter()
        .map(|&r| {
            let m = Molecule::diatomic(atoms.0, atoms.1, r, charge)?;
            let basis = build_ao_basis(&m, shells, "")?;
            let ints = IntegralSet::compute(&m, &basis)?;
            let res = idmft_scf(&m, &ints, params, opts)?;
            let e = &res.orbitals.energies;
            Ok((r, e[0], e[1]))
        })
        .collect()
}
