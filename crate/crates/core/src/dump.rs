//! Plain-text dump of a finished calculation: enough to rebuild its
//! one-matrix and compare it with another run over the same AO basis.
//!
//! ```text
//! method = fci
//! basis = cc-pvdz
//! energy = -2.9608882...
//! param.kappa = 0.015
//! [occupations]
//! 1.95 0.03 ...
//! [coefficients]
//! ...
//! [overlap]
//! ...
//! ```
//! Occupations are spin-summed (`0 ≤ n ≤ 2`); coefficient columns are
//! orbitals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hf::OneMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CalcDump {
    pub method: String,
    pub basis: String,
    pub energy: f64,
    /// Free-form `param.<key>` headers (κ, b, entropy form, …).
    pub params: BTreeMap<String, String>,
    pub occupations: DVector<f64>,
    pub coefficients: DMatrix<f64>,
    pub overlap: DMatrix<f64>,
    pub orbital_energies: Option<DVector<f64>>,
}

impl CalcDump {
    pub fn new(
        method: &str,
        basis: &str,
        energy: f64,
        gamma: &OneMatrix<f64>,
        overlap: &DMatrix<f64>,
    ) -> Self {
        Self {
            method: method.into(),
            basis: basis.into(),
            energy,
            params: BTreeMap::new(),
            occupations: gamma.occupations.clone(),
            coefficients: gamma.coefficients.clone(),
            overlap: overlap.clone(),
            orbital_energies: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn one_matrix(&self) -> OneMatrix<f64> {
        OneMatrix {
            coefficients: self.coefficients.clone(),
            occupations: self.occupations.clone(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "basis = {}", self.basis);
        let _ = writeln!(s, "n_ao = {}", self.overlap.nrows());
        let _ = writeln!(s, "gamma = spin-summed");
        let _ = writeln!(s, "energy = {:e}", self.energy);
        for (k, v) in &self.params {
            let _ = writeln!(s, "param.{k} = {v}");
        }
        let row = |s: &mut String, it: &mut dyn Iterator<Item = f64>| {
            let v: Vec<String> = it.map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "{}", v.join(" "));
        };
        s.push_str("[occupations]\n");
        row(&mut s, &mut self.occupations.iter().copied());
        if let Some(e) = &self.orbital_energies {
            s.push_str("[orbital_energies]\n");
            row(&mut s, &mut e.iter().copied());
        }
        for (name, m) in [
            ("coefficients", &self.coefficients),
            ("overlap", &self.overlap),
        ] {
            let _ = writeln!(s, "[{name}]");
            for r in m.row_iter() {
                row(&mut s, &mut r.iter().copied());
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut headers = BTreeMap::new();
        let mut sections: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
            } else if let Some(sec) = &current {
                let row = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(format!("bad number {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                sections.get_mut(sec).expect("section inserted").push(row);
            } else {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
                headers.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let header = |k: &str| {
            headers.get(k).cloned().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing header {k}"),
            })
        };
        let n: usize = header("n_ao")?
            .parse()
            .map_err(|_| Error::Invalid("n_ao is not an integer".into()))?;
        let energy: f64 = header("energy")?
            .parse()
            .map_err(|_| Error::Invalid("energy is not a number".into()))?;
        let vector = |name: &str| -> Result<Option<DVector<f64>>> {
            match sections.get(name) {
                None => Ok(None),
                Some(rows) => {
                    let v: Vec<f64> = rows.concat();
                    if v.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: v.len(),
                        });
                    }
                    Ok(Some(DVector::from_vec(v)))
                }
            }
        };
        let matrix = |name: &str| -> Result<DMatrix<f64>> {
            let rows = sections.get(name).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing section [{name}]"),
            })?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: rows.len(),
                });
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        let occupations = vector("occupations")?.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing section [occupations]".into(),
        })?;
        let params = headers
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("param.").map(|k| (k.to_string(), v.clone())))
            .collect();
        Ok(Self {
            method: header("method")?,
            basis: header("basis")?,
            energy,
            params,
            occupations,
            coefficients: matrix("coefficients")?,
            overlap: matrix("overlap")?,
            orbital_energies: vector("orbital_energies")?,
        })
    }
}
