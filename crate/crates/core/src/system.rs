//! Molecular geometry, nuclear repulsion and Gaussian basis-set ingestion.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Bohr per ångström.
pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;

const ELEMENTS: [&str; 10] = ["H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne"];

/// Nuclear charge for an element symbol (case-insensitive).
pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
}

fn canonical_symbol(symbol: &str) -> Option<&'static str> {
    ELEMENTS
        .iter()
        .copied()
        .find(|e| e.eq_ignore_ascii_case(symbol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom<T: Real> {
    pub symbol: String,
    pub charge: u32,
    /// Position in bohr.
    pub position: Vector3<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule<T: Real> {
    pub atoms: Vec<Atom<T>>,
    pub net_charge: i32,
}

impl<T: Real> Molecule<T> {
    /// Builds a molecule from `(symbol, position in bohr)` pairs.
    pub fn new(atoms: &[(&str, Vector3<T>)], net_charge: i32) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|(sym, pos)| {
                let symbol = canonical_symbol(sym)
                    .ok_or_else(|| Error::Invalid(format!("unknown element {sym}")))?;
                Ok(Atom {
                    symbol: symbol.to_string(),
                    charge: atomic_number(symbol).unwrap_or_default(),
                    position: *pos,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if atoms.is_empty() {
            return Err(Error::Invalid("molecule has no atoms".into()));
        }
        Ok(Self { atoms, net_charge })
    }

    /// Diatomic along z with the first atom at the origin; `r` in bohr.
    pub fn diatomic(a: &str, b: &str, r: T, net_charge: i32) -> Result<Self> {
        Self::new(
            &[
                (a, Vector3::zeros()),
                (b, Vector3::new(T::zero(), T::zero(), r)),
            ],
            net_charge,
        )
    }

    /// Diatomic with the bond length given in ångström.
    pub fn diatomic_angstrom(a: &str, b: &str, r_angstrom: T, net_charge: i32) -> Result<Self> {
        Self::diatomic(a, b, r_angstrom * lit(ANGSTROM_TO_BOHR), net_charge)
    }

    /// Parses the plain-text geometry format: one `<element> <x> <y> <z>`
    /// line per atom in ångström plus an optional `charge=<int>` line.
    /// Blank lines and `#` comments are ignored.
    pub fn from_geometry_str(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut charge = 0i32;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
            if let Some(rest) = line.strip_prefix("charge") {
                let value = rest.trim_start().trim_start_matches('=').trim();
                charge = value
                    .parse()
                    .map_err(|_| parse_err(format!("bad charge {value:?}")))?;
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(parse_err(format!(
                    "expected '<element> x y z', got {line:?}"
                )));
            }
            let mut xyz = [T::zero(); 3];
            for (k, f) in fields[1..].iter().enumerate() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_err(format!("bad coordinate {f:?}")))?;
                xyz[k] = lit::<T>(v * ANGSTROM_TO_BOHR);
            }
            atoms.push((fields[0].to_string(), Vector3::new(xyz[0], xyz[1], xyz[2])));
        }
        let refs: Vec<(&str, Vector3<T>)> = atoms.iter().map(|(s, p)| (s.as_str(), *p)).collect();
        Self::new(&refs, charge)
    }

    pub fn n_electrons(&self) -> i64 {
        self.atoms.iter().map(|a| a.charge as i64).sum::<i64>() - self.net_charge as i64
    }

    /// Rigidly shifts every atom.
    pub fn translated(&self, shift: &Vector3<T>) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.position += shift;
        }
        out
    }

    /// Distance between the first two atoms, in bohr.
    pub fn bond_length(&self) -> Option<T> {
        match self.atoms.as_slice() {
            [a, b, ..] => Some((a.position - b.position).norm()),
            _ => None,
        }
    }

    pub fn formula(&self) -> String {
        self.atoms
            .iter()
            .map(|a| a.symbol.as_str())
            .collect::<Vec<_>>()
            .join("")
    }
}

/// Σ_{A<B} Z_A Z_B / R_AB.
pub fn nuclear_repulsion<T: Real>(m: &Molecule<T>) -> Result<T> {
    let mut e = T::zero();
    for (i, a) in m.atoms.iter().enumerate() {
        for (j, b) in m.atoms.iter().enumerate().skip(i + 1) {
            let r = (a.position - b.position).norm();
            if r < lit(1e-8) {
                return Err(Error::DegenerateGeometry(i, j));
            }
            e += lit::<T>((a.charge * b.charge) as f64) / r;
        }
    }
    Ok(e)
}

/// Contracted shell of one angular momentum, not yet attached to a center.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractedShell<T: Real> {
    pub l: u8,
    /// Primitive exponents in bohr⁻².
    pub exponents: Vec<T>,
    /// Contraction coefficients as written in the basis file.
    pub coefficients: Vec<T>,
    /// Coefficients multiplying *unnormalized* primitives such that every
    /// Cartesian component of the shell has unit norm.
    pub normalized: Vec<T>,
}

impl<T: Real> ContractedShell<T> {
    pub fn new(l: u8, exponents: Vec<T>, coefficients: Vec<T>) -> Result<Self> {
        if l > 1 {
            return Err(Error::Invalid(format!(
                "angular momentum {l} not supported (l <= 1)"
            )));
        }
        if exponents.is_empty() || exponents.len() != coefficients.len() {
            return Err(Error::Invalid(format!(
                "{} exponents vs {} coefficients",
                exponents.len(),
                coefficients.len()
            )));
        }
        if exponents.iter().any(|&a| a <= T::zero()) {
            return Err(Error::Invalid("non-positive exponent".into()));
        }
        let normalized = normalize_contraction(l, &exponents, &coefficients);
        Ok(Self {
            l,
            exponents,
            coefficients,
            normalized,
        })
    }

    pub fn n_cartesian(&self) -> usize {
        2 * self.l as usize + 1
    }
}

/// Norm of a Cartesian primitive x^i y^j z^k exp(-a r²) with i+j+k = l <= 1.
pub fn primitive_norm<T: Real>(a: T, l: u8) -> T {
    let two_a_over_pi = (lit::<T>(2.0) * a) / T::pi();
    let base = two_a_over_pi.powf(lit(0.75));
    base * (lit::<T>(4.0) * a).powf(lit::<T>(l as f64 * 0.5))
}

fn normalize_contraction<T: Real>(l: u8, exps: &[T], coefs: &[T]) -> Vec<T> {
    // overlap of two normalized primitives on one center: (2√(ab)/(a+b))^(l+3/2)
    let power = lit::<T>(l as f64 + 1.5);
    let mut norm2 = T::zero();
    for (&ai, &di) in exps.iter().zip(coefs) {
        for (&aj, &dj) in exps.iter().zip(coefs) {
            let s = (lit::<T>(2.0) * (ai * aj).sqrt() / (ai + aj)).powf(power);
            norm2 += di * dj * s;
        }
    }
    let scale = T::one() / norm2.sqrt();
    exps.iter()
        .zip(coefs)
        .map(|(&a, &d)| d * primitive_norm(a, l) * scale)
        .collect()
}

/// Element symbol → shells, as read from a basis file.
pub type BasisMap<T> = BTreeMap<String, Vec<ContractedShell<T>>>;

fn angular_label(label: &str) -> Option<Vec<u8>> {
    match label.to_ascii_uppercase().as_str() {
        "S" => Some(vec![0]),
        "P" => Some(vec![1]),
        "SP" | "L" => Some(vec![0, 1]),
        _ => None,
    }
}

fn parse_real(token: &str) -> Option<f64> {
    token.replace(['D', 'd'], "E").parse().ok()
}

/// Parses Gaussian94-format basis text.
///
/// Shell headers are `<L> <nprim> <scale>`; a scale other than 1 multiplies
/// every exponent by `scale²`. `SP` shells split into an s and a p shell.
pub fn parse_basis<T: Real>(text: &str) -> Result<BasisMap<T>> {
    let mut map = BasisMap::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut element: Option<String> = None;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() || line.starts_with('!') || line.starts_with('#') {
            continue;
        }
        if line.starts_with("****") {
            element = None;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let Some(current) = element.clone() else {
            let sym = canonical_symbol(fields[0])
                .ok_or_else(|| err(format!("unknown element {:?}", fields[0])))?;
            if fields.len() > 1 && fields[1].parse::<i64>().is_err() {
                return Err(err(format!("malformed element header {line:?}")));
            }
            map.entry(sym.to_string()).or_insert_with(Vec::new);
            element = Some(sym.to_string());
            continue;
        };
        if fields.len() < 2 {
            return Err(err(format!("malformed shell header {line:?}")));
        }
        let ls = angular_label(fields[0])
            .ok_or_else(|| err(format!("unknown angular momentum label {:?}", fields[0])))?;
        let nprim: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad primitive count {:?}", fields[1])))?;
        let scale = match fields.get(2) {
            Some(s) => parse_real(s).ok_or_else(|| err(format!("bad scale factor {s:?}")))?,
            None => 1.0,
        };
        let mut exps = Vec::with_capacity(nprim);
        let mut cols: Vec<Vec<T>> = vec![Vec::with_capacity(nprim); ls.len()];
        for _ in 0..nprim {
            let pline = lines.get(i).map(|s| s.trim()).unwrap_or("");
            let plineno = i + 1;
            let perr = |msg: String| Error::Parse { line: plineno, msg };
            if i >= lines.len()
                || pline.starts_with("****")
                || angular_label(pline.split_whitespace().next().unwrap_or("")).is_some()
            {
                return Err(perr(format!("expected {nprim} primitives, found fewer")));
            }
            i += 1;
            let nums: Vec<f64> = pline
                .split_whitespace()
                .map(|t| parse_real(t).ok_or_else(|| perr(format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if nums.len() != 1 + ls.len() {
                return Err(perr(format!(
                    "expected {} columns, found {}",
                    1 + ls.len(),
                    nums.len()
                )));
            }
            exps.push(lit::<T>(nums[0] * scale * scale));
            for (c, col) in cols.iter_mut().enumerate() {
                col.push(lit::<T>(nums[1 + c]));
            }
        }
        let shells = map.get_mut(&current).expect("element entry exists");
        for (l, coefs) in ls.into_iter().zip(cols) {
            let shell =
                ContractedShell::new(l, exps.clone(), coefs).map_err(|e| err(e.to_string()))?;
            shells.push(shell);
        }
    }
    Ok(map)
}

/// Writes a basis map back out in Gaussian94 format.
pub fn write_basis<T: Real>(map: &BasisMap<T>) -> String {
    let mut out = String::from("****\n");
    for (sym, shells) in map {
        let _ = writeln!(out, "{sym}     0");
        for sh in shells {
            let label = if sh.l == 0 { "S" } else { "P" };
            let _ = writeln!(out, "{label}   {}   1.00", sh.exponents.len());
            for (a, d) in sh.exponents.iter().zip(&sh.coefficients) {
                let _ = writeln!(out, "  {a:e}  {d:e}");
            }
        }
        out.push_str("****\n");
    }
    out
}

/// cc-pVDZ for hydrogen and helium.
pub const CC_PVDZ: &str = "\
! cc-pVDZ  (H, He)
****
H     0
S   3   1.00
     13.0100000              0.0196850
      1.9620000              0.1379770
      0.4446000              0.4781480
S   1   1.00
      0.1220000              1.0000000
P   1   1.00
      0.7270000              1.0000000
****
He     0
S   3   1.00
     38.3600000              0.0238090
      5.7700000              0.1548910
      1.2400000              0.4699870
S   1   1.00
      0.2976000              1.0000000
P   1   1.00
      1.2750000              1.0000000
****
";

/// Looks up a built-in basis by (case-insensitive) name.
pub fn builtin_basis(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().replace('_', "-").as_str() {
        "cc-pvdz" => Some(CC_PVDZ),
        _ => None,
    }
}

/// One normalized contracted Cartesian Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct AoFunction<T: Real> {
    pub atom: usize,
    pub center: Vector3<T>,
    /// Cartesian powers (i, j, k) of x, y, z.
    pub powers: [u8; 3],
    pub exponents: Vec<T>,
    /// Coefficients of the unnormalized primitives.
    pub coefficients: Vec<T>,
}

impl<T: Real> AoFunction<T> {
    pub fn l(&self) -> u8 {
        self.powers.iter().sum()
    }

    /// Value at a point.
    pub fn value(&self, r: &Vector3<T>) -> T {
        let d = r - self.center;
        let r2 = d.norm_squared();
        let mut poly = T::one();
        for k in 0..3 {
            for _ in 0..self.powers[k] {
                poly *= d[k];
            }
        }
        let radial = self
            .exponents
            .iter()
            .zip(&self.coefficients)
            .fold(T::zero(), |acc, (&a, &c)| acc + c * (-a * r2).exp());
        poly * radial
    }

    pub fn translated(&self, shift: &Vector3<T>) -> Self {
        let mut out = self.clone();
        out.center += shift;
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AoBasis<T: Real> {
    pub name: String,
    pub functions: Vec<AoFunction<T>>,
}

impl<T: Real> AoBasis<T> {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

const CARTESIAN: [[[u8; 3]; 3]; 2] = [
    [[0, 0, 0], [0, 0, 0], [0, 0, 0]],
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
];

/// Expands the shells of every atom into AO functions, ordered by atom,
/// then shell, then Cartesian component (x, y, z).
pub fn build_ao_basis<T: Real>(
    m: &Molecule<T>,
    shells: &BasisMap<T>,
    name: &str,
) -> Result<AoBasis<T>> {
    let mut functions = Vec::new();
    for (idx, atom) in m.atoms.iter().enumerate() {
        let list = shells
            .get(&atom.symbol)
            .ok_or_else(|| Error::MissingElement(atom.symbol.clone()))?;
        for sh in list {
            for powers in CARTESIAN[sh.l as usize].iter().take(sh.n_cartesian()) {
                functions.push(AoFunction {
                    atom: idx,
                    center: atom.position,
                    powers: *powers,
                    exponents: sh.exponents.clone(),
                    coefficients: sh.normalized.clone(),
                });
            }
        }
    }
    Ok(AoBasis {
        name: name.to_string(),
        functions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn h2_repulsion_at_unit_distance() {
        let m = Molecule::<f64>::diatomic("H", "H", 1.0, 0).unwrap();
        assert_eq!(nuclear_repulsion(&m).unwrap(), 1.0);
        assert_eq!(m.n_electrons(), 2);
    }

    #[test]
    fn single_atom_has_no_repulsion() {
        let m = Molecule::<f64>::new(&[("He", Vector3::zeros())], 0).unwrap();
        assert_eq!(nuclear_repulsion(&m).unwrap(), 0.0);
    }

    #[test]
    fn heh_repulsion() {
        let m = Molecule::<f64>::diatomic("He", "H", 1.511781, 1).unwrap();
        let e = nuclear_repulsion(&m).unwrap();
        assert_eq!(e, 2.0 / 1.511781);
        assert_abs_diff_eq!(e, 1.322943, epsilon = 1e-6);
        assert_eq!(m.n_electrons(), 2);
    }

    #[test]
    fn coincident_nuclei_rejected() {
        let m = Molecule::<f64>::diatomic("H", "H", 0.0, 0).unwrap();
        assert!(matches!(
            nuclear_repulsion(&m),
            Err(Error::DegenerateGeometry(0, 1))
        ));
    }

    #[test]
    fn cc_pvdz_shell_counts() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        for el in ["H", "He"] {
            let shells = &map[el];
            assert_eq!(shells.iter().filter(|s| s.l == 0).count(), 2);
            assert_eq!(shells.iter().filter(|s| s.l == 1).count(), 1);
            assert_eq!(shells.iter().map(|s| s.n_cartesian()).sum::<usize>(), 5);
        }
        assert_eq!(map["H"][0].exponents, vec![13.01, 1.962, 0.4446]);
        assert_eq!(
            map["He"][0].coefficients,
            vec![0.023809, 0.154891, 0.469987]
        );
    }

    #[test]
    fn empty_document_gives_empty_map() {
        assert!(parse_basis::<f64>("").unwrap().is_empty());
        assert!(parse_basis::<f64>("! only a comment\n****\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_label = "H 0\nD 1 1.00\n 1.0 1.0\n****\n";
        match parse_basis::<f64>(bad_label) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let short = "H 0\nS 3 1.00\n 1.0 0.5\n 0.5 0.5\n****\n";
        match parse_basis::<f64>(short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let garbage = "H 0\nS 1 1.00\n abc 1.0\n";
        assert!(matches!(
            parse_basis::<f64>(garbage),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_count = "H 0\nS x 1.00\n";
        assert!(matches!(
            parse_basis::<f64>(bad_count),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn fortran_exponents_and_sp_shells() {
        let text = "C 0\nSP 2 1.00\n 0.1D+01 0.5D+00 0.25\n 2.0 0.5 0.75\n****\n";
        let map = parse_basis::<f64>(text).unwrap();
        let shells = &map["C"];
        assert_eq!(shells.len(), 2);
        assert_eq!(shells[0].l, 0);
        assert_eq!(shells[1].coefficients, vec![0.25, 0.75]);
    }

    #[test]
    fn ao_basis_sizes() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        let h2 = Molecule::diatomic("H", "H", 1.4, 0).unwrap();
        assert_eq!(build_ao_basis(&h2, &map, "cc-pvdz").unwrap().len(), 10);
        let heh = Molecule::diatomic_angstrom("He", "H", 0.8, 1).unwrap();
        let basis = build_ao_basis(&heh, &map, "cc-pvdz").unwrap();
        assert_eq!(basis.len(), 10);
        assert_eq!(basis.functions[0].atom, 0);
        assert_eq!(basis.functions[9].atom, 1);
        assert_eq!(basis.functions[4].powers, [0, 0, 1]);

        let mut s_only = BasisMap::new();
        s_only.insert(
            "H".into(),
            map["H"].iter().filter(|s| s.l == 0).cloned().collect(),
        );
        let h = Molecule::new(&[("H", Vector3::zeros())], 0).unwrap();
        assert_eq!(build_ao_basis(&h, &s_only, "s").unwrap().len(), 2);
    }

    #[test]
    fn missing_element_is_named() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        let li = Molecule::<f64>::diatomic("Li", "H", 3.0, 0).unwrap();
        match build_ao_basis(&li, &map, "cc-pvdz") {
            Err(Error::MissingElement(e)) => assert_eq!(e, "Li"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn geometry_file() {
        let text = "# HeH+\ncharge=1\nHe 0 0 0\nH 0 0 0.8\n";
        let m = Molecule::<f64>::from_geometry_str(text).unwrap();
        assert_eq!(m.net_charge, 1);
        assert_eq!(m.n_electrons(), 2);
        assert_abs_diff_eq!(
            m.bond_length().unwrap(),
            0.8 * ANGSTROM_TO_BOHR,
            epsilon = 1e-14
        );
        assert!(matches!(
            Molecule::<f64>::from_geometry_str("He 0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin_basis("cc-pVDZ").is_some());
        assert!(builtin_basis("CC_PVDZ").is_some());
        assert!(builtin_basis("sto-3g").is_none());
    }
}
