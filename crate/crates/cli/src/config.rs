//! Command-line and config-file parsing into a [`RunConfig`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use idmft_core::fci2::EntropyForm;
use idmft_core::reference::heh_plus_distances;
use idmft_core::system::ANGSTROM_TO_BOHR;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "idmft",
    version,
    about = "Entropic density-matrix SCF, HF and two-electron CI for diatomics"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Diatomic elements, e.g. "He H"
    #[arg(long, global = true)]
    pub mol: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub charge: Option<i32>,
    /// Bond length (Å unless --bohr)
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    /// Comma-separated bond lengths
    #[arg(long = "R-list", global = true)]
    pub r_list: Option<String>,
    /// Read bond lengths in bohr
    #[arg(long, global = true)]
    pub bohr: bool,
    /// Geometry file: `El x y z` lines in Å, optional `charge = q`
    #[arg(long, global = true)]
    pub geometry: Option<PathBuf>,
    /// Basis name or Gaussian94 file
    #[arg(long, global = true)]
    pub basis: Option<String>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long = "A", global = true)]
    pub a: Option<f64>,
    /// binary or shannon
    #[arg(long, global = true)]
    pub entropy: Option<String>,
    /// CSV (scan, fit) or calculation dump (single points)
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Shortest round-trip numbers in CSV output instead of six decimals
    #[arg(long, global = true)]
    pub full_precision: bool,
    #[arg(long, global = true)]
    pub dump_integrals: Option<PathBuf>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub energy_tol: Option<f64>,
    /// κ grid for `fit`, `start:stop:step`
    #[arg(long, global = true)]
    pub kappa_grid: Option<String>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Restricted Hartree-Fock
    Hf,
    /// Two-electron full CI with natural occupations and cumulant energy
    Fci,
    /// Entropic SCF with constant temperature κ
    Idmft,
    /// Entropic SCF with exchange-weighted temperature
    IdmftEx,
    /// Dissociation scan writing one CSV row per bond length
    Scan,
    /// Least-squares (κ, b) against CI energies
    Fit,
    /// Density-matrix distance between two calculation dumps
    Compare { first: PathBuf, second: PathBuf },
    /// Single point with the method given by --method
    Energy {
        #[arg(long, value_enum)]
        method: EnergyMethod,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMethod {
    Hf,
    Fci,
    Idmft,
    IdmftEx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hf,
    Fci,
    Idmft,
    IdmftEx,
    Scan,
    Fit,
    Compare,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hf => "hf",
            Method::Fci => "fci",
            Method::Idmft => "idmft",
            Method::IdmftEx => "idmft-ex",
            Method::Scan => "scan",
            Method::Fit => "fit",
            Method::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    /// Bond lengths in Å.
    Diatomic {
        atoms: (String, String),
        charge: i32,
        r: Vec<f64>,
    },
    Geometry(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub system: Option<SystemSpec>,
    pub basis: String,
    pub kappa: Option<f64>,
    pub b: Option<f64>,
    pub a: Option<f64>,
    pub entropy: EntropyForm,
    pub output: Option<PathBuf>,
    pub full_precision: bool,
    pub dump_integrals: Option<PathBuf>,
    pub max_iter: Option<usize>,
    pub energy_tol: Option<f64>,
    pub kappa_grid: Vec<f64>,
    pub compare: Option<(PathBuf, PathBuf)>,
    pub verbosity: u8,
    /// Resolved settings, echoed in the run header.
    pub echo: BTreeMap<String, String>,
    /// File values overridden by flags.
    pub conflicts: Vec<String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

const FILE_KEYS: [&str; 17] = [
    "mol",
    "charge",
    "r",
    "r-list",
    "bohr",
    "geometry",
    "basis",
    "kappa",
    "b",
    "a",
    "entropy",
    "output",
    "full-precision",
    "dump-integrals",
    "max-iter",
    "energy-tol",
    "kappa-grid",
];

/// Clap argument id for a config-file key.
fn arg_id(key: &str) -> String {
    key.replace('-', "_")
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(|t| parse_value(key, t)).collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    if !text.contains(':') {
        return parse_list("kappa-grid", text);
    }
    let parts: Vec<f64> = text
        .split(':')
        .map(|t| parse_value("kappa-grid", t))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Usage(format!(
            "kappa grid {text:?} is not start:stop:step"
        )));
    };
    if step <= 0.0 || stop < start || start <= 0.0 {
        return Err(CliError::Usage(format!("bad kappa grid {text:?}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn parse_config<I, S>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let matches: ArgMatches = Cli::command().try_get_matches_from(args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let file = match &cli.config {
        Some(p) => parse_config_file(
            &std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )?,
        None => BTreeMap::new(),
    };
    let mut conflicts = Vec::new();
    // command-line string for a key when the flag was given explicitly
    let sub = matches.subcommand().map(|(_, m)| m);
    let explicit = |key: &str| -> bool {
        let id = arg_id(key);
        [Some(&matches), sub].into_iter().flatten().any(|m| {
            m.try_get_raw(&id).ok().flatten().is_some()
                && m.value_source(&id) == Some(ValueSource::CommandLine)
        })
    };
    let mut pick = |key: &str, flag: Option<String>| -> Option<String> {
        match (flag, file.get(key)) {
            (Some(f), Some(v)) => {
                if explicit(key) && f != *v {
                    conflicts.push(format!("{key}: file {v}, flag {f} (flag wins)"));
                }
                Some(f)
            }
            (Some(f), None) => Some(f),
            (None, v) => v.cloned(),
        }
    };
    let opt = |x: Option<f64>| x.map(|v| v.to_string());
    let mol = pick("mol", cli.mol.clone());
    let charge = pick("charge", cli.charge.map(|c| c.to_string()));
    let r = pick("r", opt(cli.r));
    let r_list = pick("r-list", cli.r_list.clone());
    let bohr = pick("bohr", cli.bohr.then(|| "true".to_string()));
    let geometry = pick(
        "geometry",
        cli.geometry.as_ref().map(|p| p.display().to_string()),
    );
    let basis = pick("basis", cli.basis.clone()).unwrap_or_else(|| "cc-pvdz".into());
    let kappa = pick("kappa", opt(cli.kappa));
    let b = pick("b", opt(cli.b));
    let a = pick("a", opt(cli.a));
    let entropy = pick("entropy", cli.entropy.clone());
    let output = pick(
        "output",
        cli.output.as_ref().map(|p| p.display().to_string()),
    );
    let full_precision = pick(
        "full-precision",
        cli.full_precision.then(|| "true".to_string()),
    );
    let dump_integrals = pick(
        "dump-integrals",
        cli.dump_integrals.as_ref().map(|p| p.display().to_string()),
    );
    let max_iter = pick("max-iter", cli.max_iter.map(|v| v.to_string()));
    let energy_tol = pick("energy-tol", opt(cli.energy_tol));
    let kappa_grid = pick("kappa-grid", cli.kappa_grid.clone());

    let (method, compare) = match &cli.command {
        Command::Hf => (Method::Hf, None),
        Command::Fci => (Method::Fci, None),
        Command::Idmft => (Method::Idmft, None),
        Command::IdmftEx => (Method::IdmftEx, None),
        Command::Scan => (Method::Scan, None),
        Command::Fit => (Method::Fit, None),
        Command::Compare { first, second } => {
            (Method::Compare, Some((first.clone(), second.clone())))
        }
        Command::Energy { method } => (
            match method {
                EnergyMethod::Hf => Method::Hf,
                EnergyMethod::Fci => Method::Fci,
                EnergyMethod::Idmft => Method::Idmft,
                EnergyMethod::IdmftEx => Method::IdmftEx,
            },
            None,
        ),
    };

    let flag = |v: &Option<String>| -> Result<bool, CliError> {
        v.as_deref()
            .map(|s| parse_value("flag", s))
            .transpose()
            .map(|x| x.unwrap_or(false))
    };
    let in_bohr = flag(&bohr)?;
    let to_angstrom = |x: f64| if in_bohr { x / ANGSTROM_TO_BOHR } else { x };
    let system = match (&geometry, &mol) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --geometry or --mol, not both".into(),
            ))
        }
        (Some(path), None) => Some(SystemSpec::Geometry(PathBuf::from(path))),
        (None, Some(m)) => {
            let el: Vec<&str> = m.split_whitespace().collect();
            let [x, y] = el[..] else {
                return Err(CliError::Usage(format!(
                    "--mol expects two elements, got {m:?}"
                )));
            };
            let rs = match (&r, &r_list) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "give either --R or --R-list, not both".into(),
                    ))
                }
                (Some(v), None) => vec![parse_value("R", v)?],
                (None, Some(list)) => parse_list("R-list", list)?,
                (None, None) if method == Method::Scan || method == Method::Fit => {
                    heh_plus_distances()
                }
                (None, None) => {
                    return Err(CliError::Usage(
                        "missing bond length: --R or --R-list".into(),
                    ))
                }
            };
            Some(SystemSpec::Diatomic {
                atoms: (x.to_string(), y.to_string()),
                charge: charge
                    .as_deref()
                    .map(|c| parse_value("charge", c))
                    .transpose()?
                    .unwrap_or(0),
                r: rs.into_iter().map(to_angstrom).collect(),
            })
        }
        (None, None) => None,
    };
    if system.is_none() && method != Method::Compare {
        return Err(CliError::Usage(
            "missing system: --mol with --R, or --geometry".into(),
        ));
    }
    if matches!(system, Some(SystemSpec::Geometry(_)))
        && matches!(method, Method::Scan | Method::Fit)
    {
        return Err(CliError::Usage(format!(
            "{} needs a diatomic --mol spec",
            method.name()
        )));
    }

    let num = |key: &str, v: &Option<String>| {
        v.as_deref().map(|s| parse_value::<f64>(key, s)).transpose()
    };
    let kappa = num("kappa", &kappa)?;
    let b = num("b", &b)?;
    let a = num("A", &a)?;
    let require = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| CliError::Usage(format!("{} requires --{name}", method.name())))
    };
    match method {
        Method::Idmft => {
            require("kappa", kappa)?;
            require("b", b)?;
        }
        Method::IdmftEx => {
            require("A", a)?;
            require("b", b)?;
        }
        Method::Scan if kappa.is_some() => {
            require("b", b)?;
        }
        _ => {}
    }
    let entropy: EntropyForm = match &entropy {
        Some(e) => e
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown entropy form {e:?}")))?,
        None => EntropyForm::default(),
    };
    let kappa_grid = match &kappa_grid {
        Some(g) => parse_grid(g)?,
        None => parse_grid("0.005:0.1:0.005")?,
    };

    let mut echo = BTreeMap::new();
    echo.insert("method".to_string(), method.name().to_string());
    echo.insert("basis".to_string(), basis.clone());
    echo.insert("entropy".to_string(), entropy.key().to_string());
    match &system {
        Some(SystemSpec::Diatomic { atoms, charge, r }) => {
            echo.insert("mol".into(), format!("{} {}", atoms.0, atoms.1));
            echo.insert("charge".into(), charge.to_string());
            let list: Vec<String> = r
                .iter()
                .map(|&x| if in_bohr { x * ANGSTROM_TO_BOHR } else { x })
                .map(|x| format!("{}", (x * 1e9).round() / 1e9))
                .collect();
            echo.insert(
                "R".into(),
                format!("{} {}", list.join(","), if in_bohr { "bohr" } else { "Å" }),
            );
        }
        Some(SystemSpec::Geometry(p)) => {
            echo.insert("geometry".into(), p.display().to_string());
        }
        None => {}
    }
    for (k, v) in [
        ("kappa", kappa),
        ("b", b),
        ("A", a),
        ("energy-tol", num("energy-tol", &energy_tol)?),
    ] {
        if let Some(v) = v {
            echo.insert(k.into(), v.to_string());
        }
    }
    let max_iter = max_iter
        .as_deref()
        .map(|v| parse_value("max-iter", v))
        .transpose()?;
    if let Some(m) = max_iter {
        echo.insert("max-iter".into(), format!("{m}"));
    }
    if method == Method::Fit {
        echo.insert("kappa-grid".into(), format!("{} points", kappa_grid.len()));
    }

    Ok(RunConfig {
        method,
        system,
        basis,
        kappa,
        b,
        a,
        entropy,
        output: output.map(PathBuf::from),
        full_precision: flag(&full_precision)?,
        dump_integrals: dump_integrals.map(PathBuf::from),
        max_iter,
        energy_tol: num("energy-tol", &energy_tol)?,
        kappa_grid,
        compare,
        verbosity: cli.verbose,
        echo,
        conflicts,
    })
}
