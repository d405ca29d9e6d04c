//! Cross-calculation diagnostics: density-matrix distances, cumulant vs
//! entropy regression, dissociation scans and (κ, b) fitting.

use std::fmt::Write as _;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fci2::{ao_to_mo, cumulant_energy, entropy, fci_singlet, EntropyForm};
use crate::hf::{rhf_scf, OneMatrix, ScfOptions};
use crate::idmft::{idmft_scf, EntropicParams, IdmftOptions};
use crate::integrals::IntegralSet;
use crate::linalg::{inverse_sqrt, trace_product};
use crate::scalar::{lit, Real};
use crate::system::{build_ao_basis, BasisMap, Molecule};

/// `S_μk = ⟨ψ^B_μ|ψ^A_k⟩` between two orbital sets over one AO basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossOverlap<T: Real>(pub DMatrix<T>);

impl<T: Real> CrossOverlap<T> {
    pub fn new(a: &DMatrix<T>, b: &DMatrix<T>, s_ao: &DMatrix<T>) -> Self {
        Self(b.transpose() * s_ao * a)
    }

    /// Largest deviation of `SᵀS` from the identity.
    pub fn orthogonality_error(&self) -> T {
        let n = self.0.ncols();
        crate::linalg::max_abs(&(self.0.transpose() * &self.0 - DMatrix::identity(n, n)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusReport<T: Real> {
    /// `√Tr[((γ_A - γ_B) S)²]`.
    pub distance: T,
    /// `Tr[((γ_A - γ_B) S)²]` from the matrices directly.
    pub direct: T,
    /// `Σ n_A²`.
    pub self_a: T,
    /// `Σ n_B²`.
    pub self_b: T,
    /// `Σ_μk n^A_k n^B_μ S_μk²`.
    pub cross: T,
    /// `self_a + self_b - 2 cross`; equals `direct` for orthonormal sets.
    pub expansion: T,
    /// `√Σ (n_A - n_B)²` over occupations sorted descending.
    pub occupation_difference: T,
}

/// Distance between two spin-summed one-matrices over the same AO basis.
pub fn frobenius_distance<T: Real>(
    a: &OneMatrix<T>,
    b: &OneMatrix<T>,
    s_ao: &DMatrix<T>,
) -> Result<FrobeniusReport<T>> {
    let n = s_ao.nrows();
    for m in [&a.coefficients, &b.coefficients] {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
    }
    let diff = (a.ao() - b.ao()) * s_ao;
    let direct = trace_product(&diff, &diff);
    let self_a = a.occupations.iter().fold(T::zero(), |acc, &x| acc + x * x);
    let self_b = b.occupations.iter().fold(T::zero(), |acc, &x| acc + x * x);
    let overlap = CrossOverlap::new(&a.coefficients, &b.coefficients, s_ao).0;
    let mut cross = T::zero();
    for mu in 0..overlap.nrows() {
        for k in 0..overlap.ncols() {
            let s = overlap[(mu, k)];
            cross += a.occupations[k] * b.occupations[mu] * s * s;
        }
    }
    let expansion = self_a + self_b - lit::<T>(2.0) * cross;
    let sorted = |v: &DVector<T>| {
        let mut x: Vec<T> = v.iter().copied().collect();
        x.sort_by(|p, q| q.partial_cmp(p).unwrap_or(std::cmp::Ordering::Equal));
        x
    };
    let (sa, sb) = (sorted(&a.occupations), sorted(&b.occupations));
    let len = sa.len().max(sb.len());
    let mut occ2 = T::zero();
    for i in 0..len {
        let d = sa.get(i).copied().unwrap_or(T::zero()) - sb.get(i).copied().unwrap_or(T::zero());
        occ2 += d * d;
    }
    Ok(FrobeniusReport {
        distance: direct.max(T::zero()).sqrt(),
        direct,
        self_a,
        self_b,
        cross,
        expansion,
        occupation_difference: occ2.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<T: Real> {
    pub slope: T,
    pub intercept: T,
    /// Pearson correlation coefficient.
    pub r: T,
    /// `y - (slope x + intercept)` per input point, in input order.
    pub residuals: Vec<T>,
}

impl<T: Real> FitResult<T> {
    pub fn above(&self) -> Vec<usize> {
        (0..self.residuals.len())
            .filter(|&i| self.residuals[i] > T::zero())
            .collect()
    }

    pub fn below(&self) -> Vec<usize> {
        (0..self.residuals.len())
            .filter(|&i| self.residuals[i] < T::zero())
            .collect()
    }
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit<T: Real>(points: &[(T, T)]) -> Result<FitResult<T>> {
    if points.len() < 2 {
        return Err(Error::Invalid(
            "linear fit needs at least two points".into(),
        ));
    }
    let n = lit::<T>(points.len() as f64);
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == T::zero() {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r = if syy == T::zero() {
        T::one()
    } else {
        (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one())
    };
    let residuals = points
        .iter()
        .map(|&(x, y)| y - (slope * x + intercept))
        .collect();
    Ok(FitResult {
        slope,
        intercept,
        r,
        residuals,
    })
}

/// Separate fits for `R < split` and `R > split` (points at the split go
/// to neither). Each side needs two distinct abscissae.
pub fn regime_fits<T: Real>(
    points: &[(T, T, T)],
    split: T,
) -> Result<(FitResult<T>, FitResult<T>)> {
    let short: Vec<(T, T)> = points
        .iter()
        .filter(|p| p.0 < split)
        .map(|p| (p.1, p.2))
        .collect();
    let long: Vec<(T, T)> = points
        .iter()
        .filter(|p| p.0 > split)
        .map(|p| (p.1, p.2))
        .collect();
    Ok((linear_fit(&short)?, linear_fit(&long)?))
}

/// Picks the entropy form whose values match `reference` within `tol` at
/// every point. `occupations[i]` are the spin-orbital occupations of
/// geometry `i`.
pub fn select_entropy_form(
    occupations: &[Vec<f64>],
    reference: &[f64],
    tol: f64,
) -> Result<Option<EntropyForm>> {
    if occupations.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: occupations.len(),
        });
    }
    for form in EntropyForm::ALL {
        let mut ok = true;
        for (n, &s_ref) in occupations.iter().zip(reference) {
            if (entropy(n, form)? - s_ref).abs() > tol {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(form));
        }
    }
    Ok(None)
}

/// One row of a dissociation scan. Missing values are methods that were
/// not requested or failed.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CumulantRecord {
    /// Bond length in Å.
    pub r: f64,
    pub entropy: Option<f64>,
    pub e_cum: Option<f64>,
    pub e_hf: Option<f64>,
    pub e_ci: Option<f64>,
    pub e_idmft: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ScanMethods {
    pub hf: bool,
    pub fci: bool,
    pub idmft: Option<EntropicParams<f64>>,
}

impl Default for ScanMethods {
    fn default() -> Self {
        Self {
            hf: true,
            fci: true,
            idmft: None,
        }
    }
}

/// Diatomic scan template.
#[derive(Clone, Debug)]
pub struct ScanSpec<'a> {
    pub atoms: (&'a str, &'a str),
    pub charge: i32,
    pub shells: &'a BasisMap<f64>,
    pub basis_name: &'a str,
    pub entropy_form: EntropyForm,
    pub scf: ScfOptions<f64>,
    pub idmft_opts: IdmftOptions<f64>,
}

fn scan_point(
    spec: &ScanSpec<'_>,
    r_angstrom: f64,
    methods: &ScanMethods,
    rec: &mut CumulantRecord,
) -> Result<()> {
    let m = Molecule::diatomic_angstrom(spec.atoms.0, spec.atoms.1, r_angstrom, spec.charge)?;
    let basis = build_ao_basis(&m, spec.shells, spec.basis_name)?;
    let ints = IntegralSet::compute(&m, &basis)?;
    let mut errors = Vec::new();
    let mut hf_orbitals = None;
    if methods.hf || methods.fci {
        match rhf_scf(&m, &ints, &spec.scf) {
            Ok(hf) => {
                if methods.hf {
                    rec.e_hf = Some(hf.energy);
                }
                hf_orbitals = Some(hf.orbitals.coefficients);
            }
            Err(e) => errors.push(format!("hf: {e}")),
        }
    }
    if methods.fci {
        // any orthonormal orbital basis gives the same CI; Löwdin if HF failed
        let c = match hf_orbitals {
            Some(c) => c,
            None => inverse_sqrt(&ints.overlap)?,
        };
        let fci = ao_to_mo(&ints, &c)
            .and_then(|mo| fci_singlet(&mo, m.n_electrons()))
            .and_then(|ci| {
                let cum = cumulant_energy(&ci, &ints)?;
                let s = entropy(&ci.spin_orbital_occupations(), spec.entropy_form)?;
                Ok((ci.energy, cum.e_cum, s))
            });
        match fci {
            Ok((e, cum, s)) => {
                rec.e_ci = Some(e);
                rec.e_cum = Some(cum);
                rec.entropy = Some(s);
            }
            Err(e) => errors.push(format!("fci: {e}")),
        }
    }
    if let Some(params) = &methods.idmft {
        let mut params = *params;
        params.entropy = spec.entropy_form;
        match idmft_scf(&m, &ints, &params, &spec.idmft_opts) {
            Ok(res) => rec.e_idmft = Some(res.energy),
            Err(e) => errors.push(format!("idmft: {e}")),
        }
    }
    if !errors.is_empty() {
        rec.error = Some(errors.join("; "));
    }
    Ok(())
}

/// Runs the requested methods at every bond length (Å). Per-geometry
/// failures land in the record's `error` field; the scan continues.
pub fn dissociation_scan(
    spec: &ScanSpec<'_>,
    r_list: &[f64],
    methods: &ScanMethods,
) -> Vec<CumulantRecord> {
    r_list
        .iter()
        .map(|&r| {
            let mut rec = CumulantRecord {
                r,
                ..Default::default()
            };
            if let Err(e) = scan_point(spec, r, methods, &mut rec) {
                rec.error = Some(e.to_string());
            }
            rec
        })
        .collect()
}

pub const CSV_HEADER: [&str; 7] = ["R", "S", "E_cum", "E_HF", "E_CI", "E_iDMFT", "error"];

/// Writes scan records as CSV. `full_precision` prints shortest
/// round-trip representations instead of six decimals.
pub fn write_csv(records: &[CumulantRecord], full_precision: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let fmt = |v: Option<f64>| match v {
        Some(x) if full_precision => format!("{x}"),
        Some(x) => format!("{x:.6}"),
        None => String::new(),
    };
    for r in records {
        w.write_record([
            if full_precision {
                format!("{}", r.r)
            } else {
                format!("{:.2}", r.r)
            },
            fmt(r.entropy),
            fmt(r.e_cum),
            fmt(r.e_hf),
            fmt(r.e_ci),
            fmt(r.e_idmft),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

/// Parses the CSV written by [`write_csv`]; `#` lines are skipped.
pub fn read_csv(text: &str) -> Result<Vec<CumulantRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rd.headers()?.clone();
    if headers
        .iter()
        .take(6)
        .ne(CSV_HEADER.iter().take(6).copied())
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |k: usize| -> Result<Option<f64>> {
            match row.get(k).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number {s:?} in column {}", CSV_HEADER[k]),
                }),
            }
        };
        out.push(CumulantRecord {
            r: num(0)?.ok_or_else(|| Error::Parse {
                line,
                msg: "missing R".into(),
            })?,
            entropy: num(1)?,
            e_cum: num(2)?,
            e_hf: num(3)?,
            e_ci: num(4)?,
            e_idmft: num(5)?,
            error: row.get(6).filter(|s| !s.is_empty()).map(str::to_string),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamFit {
    pub kappa: f64,
    pub b: f64,
    /// Root-mean-square deviation from the CI energies at the optimum.
    pub rms: f64,
    /// Indices of points dropped because an inner SCF failed.
    pub dropped: Vec<usize>,
}

fn fit_cost(energies: &[f64], e_ci: &[f64], keep: &[usize]) -> (f64, f64) {
    // b enters linearly: its least-squares optimum is the mean residual
    let n = keep.len() as f64;
    let b = keep.iter().map(|&i| energies[i] - e_ci[i]).sum::<f64>() / n;
    let cost = keep
        .iter()
        .map(|&i| (energies[i] - b - e_ci[i]).powi(2))
        .sum::<f64>();
    (b, cost)
}

/// Least-squares `(κ, b)` against CI references.
///
/// `energy_at(κ, i)` returns the entropic-SCF total energy at point `i`
/// with `b = 0`. The κ grid is scanned coarsely, then refined by golden
/// section between the neighbours of the best grid point.
pub fn fit_params(
    e_ci: &[f64],
    kappa_grid: &[f64],
    mut energy_at: impl FnMut(f64, usize) -> Result<f64>,
) -> Result<ParamFit> {
    if e_ci.is_empty() || kappa_grid.is_empty() {
        return Err(Error::Invalid(
            "fit needs references and a kappa grid".into(),
        ));
    }
    let n = e_ci.len();
    let mut table: Vec<Vec<Option<f64>>> = Vec::with_capacity(kappa_grid.len());
    for &k in kappa_grid {
        table.push(
            (0..n)
                .map(|i| match energy_at(k, i) {
                    Ok(e) => Some(e),
                    Err(err) => {
                        warn!("fit: point {i} failed at kappa {k}: {err}");
                        None
                    }
                })
                .collect(),
        );
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| table.iter().all(|row| row[i].is_some()))
        .collect();
    let dropped: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    if keep.is_empty() {
        return Err(Error::Invalid("every fit point failed".into()));
    }
    let costs: Vec<(f64, f64)> = table
        .iter()
        .map(|row| {
            let e: Vec<f64> = row.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            fit_cost(&e, e_ci, &keep)
        })
        .collect();
    let best = (0..costs.len())
        .min_by(|&a, &b| {
            costs[a]
                .1
                .partial_cmp(&costs[b].1)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty grid");
    let (mut kappa, (mut b, mut cost)) = (kappa_grid[best], costs[best]);
    let worst = costs.iter().map(|c| c.1).fold(f64::MIN, f64::max);
    if kappa_grid.len() > 1 && worst - cost <= 0.01 * cost {
        warn!("fit: cost varies by under 1% across the kappa grid; kappa is poorly determined");
    }

    if kappa_grid.len() > 2 {
        let lo = kappa_grid[best.saturating_sub(1)];
        let hi = kappa_grid[(best + 1).min(kappa_grid.len() - 1)];
        let mut eval = |k: f64| -> Option<(f64, f64)> {
            let mut e = vec![f64::NAN; n];
            for &i in &keep {
                e[i] = energy_at(k, i).ok()?;
            }
            Some(fit_cost(&e, e_ci, &keep))
        };
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut d) = (lo.min(hi), lo.max(hi));
        for _ in 0..40 {
            if d - a < 1e-10 * d.abs().max(1.0) {
                break;
            }
            let x1 = d - g * (d - a);
            let x2 = a + g * (d - a);
            let (f1, f2) = (eval(x1), eval(x2));
            let c1 = f1.map(|v| v.1).unwrap_or(f64::INFINITY);
            let c2 = f2.map(|v| v.1).unwrap_or(f64::INFINITY);
            for (x, f) in [(x1, f1), (x2, f2)] {
                if let Some((bb, cc)) = f {
                    if cc < cost {
                        kappa = x;
                        b = bb;
                        cost = cc;
                    }
                }
            }
            if c1 <= c2 {
                d = x2;
            } else {
                a = x1;
            }
        }
    }
    Ok(ParamFit {
        kappa,
        b,
        rms: (cost / keep.len() as f64).sqrt(),
        dropped,
    })
}

/// Human-readable one-line summary of a fit.
pub fn describe_fit(fit: &FitResult<f64>) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "slope = {:.6}  intercept = {:.6}  r = {:.6}  above = {:?}  below = {:?}",
        fit.slope,
        fit.intercept,
        fit.r,
        fit.above(),
        fit.below()
    );
    s
}
