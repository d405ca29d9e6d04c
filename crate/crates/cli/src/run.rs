//! Executes a parsed [`RunConfig`].

use std::io::Write;
use std::path::{Path, PathBuf};

use idmft_core::analysis::{
    dissociation_scan, fit_params, frobenius_distance, write_csv, ScanMethods, ScanSpec,
};
use idmft_core::dump::CalcDump;
use idmft_core::fci2::{ao_to_mo, cumulant_energy, entropy, fci_singlet};
use idmft_core::hf::{rhf_scf, ScfOptions};
use idmft_core::idmft::{idmft_scf, EntropicParams, IdmftOptions};
use idmft_core::linalg::max_abs;
use idmft_core::system::{build_ao_basis, builtin_basis, parse_basis, BasisMap, ANGSTROM_TO_BOHR};
use idmft_core::{IntegralSet, Molecule};
use log::{info, warn};

use crate::config::{Method, RunConfig, SystemSpec};
use crate::CliError;

/// Directory searched for `<name>.gbs` / `<name>.g94` basis files.
pub const BASIS_DIR_ENV: &str = "IDMFT_BASIS_DIR";

type Out<'a> = &'a mut dyn Write;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::File {
        path: path.display().to_string(),
        source,
    }
}

fn put(out: Out<'_>, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

/// Built-in name, explicit file path, or a file in `$IDMFT_BASIS_DIR`.
pub fn resolve_basis(name: &str) -> Result<BasisMap<f64>, CliError> {
    if let Some(text) = builtin_basis(name) {
        return Ok(parse_basis(text)?);
    }
    let mut candidates = vec![PathBuf::from(name)];
    if let Some(dir) = std::env::var_os(BASIS_DIR_ENV) {
        let dir = PathBuf::from(dir);
        for ext in ["", ".gbs", ".g94"] {
            candidates.push(dir.join(format!("{name}{ext}")));
        }
    }
    for p in candidates {
        if p.is_file() {
            let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
            return Ok(parse_basis(&text)?);
        }
    }
    Err(CliError::Usage(format!(
        "basis {name:?} is neither built in nor a readable file (see ${BASIS_DIR_ENV})"
    )))
}

/// Provenance lines, each starting with `# `.
pub fn header(cfg: &RunConfig) -> String {
    let mut s = format!("# idmft {}\n", env!("CARGO_PKG_VERSION"));
    let echo: Vec<String> = cfg.echo.iter().map(|(k, v)| format!("{k}={v}")).collect();
    s += &format!("# config: {}\n", echo.join(" "));
    s += &format!("# entropy form: {}\n", cfg.entropy.label());
    let p = |x: Option<f64>| x.map_or("-".to_string(), |v| v.to_string());
    s += &format!(
        "# parameters: kappa={} b={} A={}\n",
        p(cfg.kappa),
        p(cfg.b),
        p(cfg.a)
    );
    for c in &cfg.conflicts {
        s += &format!("# override: {c}\n");
    }
    s
}

fn molecules(cfg: &RunConfig) -> Result<Vec<Molecule>, CliError> {
    match cfg.system.as_ref().expect("validated by parse_config") {
        SystemSpec::Diatomic { atoms, charge, r } => r
            .iter()
            .map(|&x| {
                Molecule::diatomic_angstrom(&atoms.0, &atoms.1, x, *charge).map_err(Into::into)
            })
            .collect(),
        SystemSpec::Geometry(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            Ok(vec![Molecule::from_geometry_str(&text)?])
        }
    }
}

fn scf_options(cfg: &RunConfig) -> ScfOptions<f64> {
    let mut o = ScfOptions::default();
    if let Some(m) = cfg.max_iter {
        o.max_iter = m;
    }
    if let Some(t) = cfg.energy_tol {
        o.energy_tol = t;
    }
    o
}

fn idmft_options(cfg: &RunConfig) -> IdmftOptions<f64> {
    let mut o = IdmftOptions::default();
    if let Some(m) = cfg.max_iter {
        o.max_iter = m;
    }
    if let Some(t) = cfg.energy_tol {
        o.energy_tol = t;
    }
    o
}

fn entropic_params(cfg: &RunConfig) -> EntropicParams<f64> {
    let mut p = match cfg.method {
        Method::IdmftEx => {
            EntropicParams::exchange_weighted(cfg.a.unwrap_or_default(), cfg.b.unwrap_or_default())
        }
        _ => EntropicParams::plain(cfg.kappa.unwrap_or_default(), cfg.b.unwrap_or_default()),
    };
    p.entropy = cfg.entropy;
    p
}

fn list(v: impl Iterator<Item = f64>, n: usize) -> String {
    v.take(n)
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn single_point(cfg: &RunConfig, out: Out<'_>) -> Result<(), CliError> {
    let mols = molecules(cfg)?;
    if mols.len() > 1 && (cfg.output.is_some() || cfg.dump_integrals.is_some()) {
        return Err(CliError::Usage(
            "--output and --dump-integrals need a single geometry".into(),
        ));
    }
    let shells = resolve_basis(&cfg.basis)?;
    for m in &mols {
        let basis = build_ao_basis(m, &shells, &cfg.basis)?;
        let ints = IntegralSet::compute(m, &basis)?;
        if let Some(p) = &cfg.dump_integrals {
            std::fs::write(p, ints.dump()).map_err(io_err(p))?;
        }
        let r = m.bond_length().map_or(String::new(), |r| {
            format!(" R = {:.6} Å ({:.6} bohr)", r / ANGSTROM_TO_BOHR, r)
        });
        put(
            out,
            &format!(
                "{}{r}, {} basis functions, E_nuc = {:.10}\n",
                m.formula(),
                ints.n_ao(),
                ints.nuclear_repulsion
            ),
        )?;
        let dump = match cfg.method {
            Method::Hf | Method::Fci => {
                let hf = rhf_scf(m, &ints, &scf_options(cfg))?;
                put(
                    out,
                    &format!(
                        "E_HF   = {:.10}  ({} iterations)\n",
                        hf.energy, hf.iterations
                    ),
                )?;
                if cfg.method == Method::Hf {
                    put(
                        out,
                        &format!(
                            "orbital energies: {}\n",
                            list(hf.orbitals.energies.iter().copied(), 6)
                        ),
                    )?;
                    let mut d = CalcDump::new(
                        "hf",
                        &cfg.basis,
                        hf.energy,
                        &hf.orbitals.one_matrix(),
                        &ints.overlap,
                    );
                    d.orbital_energies = Some(hf.orbitals.energies.clone());
                    d
                } else {
                    let ci = fci_singlet(
                        &ao_to_mo(&ints, &hf.orbitals.coefficients)?,
                        m.n_electrons(),
                    )?;
                    let cum = cumulant_energy(&ci, &ints)?;
                    let s = entropy(&ci.spin_orbital_occupations(), cfg.entropy)?;
                    put(
                        out,
                        &format!(
                            "E_CI   = {:.10}\nE_corr = {:.10}\n",
                            ci.energy,
                            ci.energy - hf.energy
                        ),
                    )?;
                    put(
                        out,
                        &format!(
                            "natural occupations (per spin): {}\n",
                            list(ci.natural_occupations.iter().copied(), 6)
                        ),
                    )?;
                    put(
                        out,
                        &format!("S      = {s:.6}\nE_cum  = {:.10}\n", cum.e_cum),
                    )?;
                    CalcDump::new(
                        "fci",
                        &cfg.basis,
                        ci.energy,
                        &ci.one_matrix(),
                        &ints.overlap,
                    )
                    .with_param("entropy", cfg.entropy.key())
                }
            }
            _ => {
                let params = entropic_params(cfg);
                let res = idmft_scf(m, &ints, &params, &idmft_options(cfg))?;
                let bd = &res.breakdown;
                put(
                    out,
                    &format!(
                        "E      = {:.10}  ({} iterations)\n",
                        res.energy, res.iterations
                    ),
                )?;
                put(
                    out,
                    &format!(
                        "  one-electron {:.10}  Y {:.10}  entropic {:.10}  shift {:.10}  nuclear {:.10}\n",
                        bd.one_electron, bd.y, bd.entropic, bd.shift, bd.nuclear_repulsion
                    ),
                )?;
                let occ = &res.occupations;
                put(
                    out,
                    &format!(
                        "occupations (per spin): {}\n",
                        list(occ.n.iter().copied(), 6)
                    ),
                )?;
                put(
                    out,
                    &format!(
                        "mu = {:.8}  T = {:.8}  S = {:.6}\n",
                        occ.mu, occ.temperature, occ.entropy
                    ),
                )?;
                put(
                    out,
                    &format!(
                        "orbital energies: {}\n",
                        list(res.orbitals.energies.iter().copied(), 6)
                    ),
                )?;
                let mut d = CalcDump::new(
                    cfg.method.name(),
                    &cfg.basis,
                    res.energy,
                    &res.orbitals.one_matrix(),
                    &ints.overlap,
                )
                .with_param("entropy", cfg.entropy.key())
                .with_param("b", params.b);
                d = match cfg.method {
                    Method::IdmftEx => d.with_param("A", cfg.a.unwrap_or_default()),
                    _ => d.with_param("kappa", cfg.kappa.unwrap_or_default()),
                };
                d.orbital_energies = Some(res.orbitals.energies.clone());
                d
            }
        };
        if let Some(p) = &cfg.output {
            std::fs::write(p, format!("{}{}", header(cfg), dump.render())).map_err(io_err(p))?;
            info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn emit_csv(cfg: &RunConfig, csv: String, out: Out<'_>) -> Result<(), CliError> {
    let text = format!("{}{csv}", header(cfg));
    match &cfg.output {
        Some(p) => {
            std::fs::write(p, &text).map_err(io_err(p))?;
            put(out, &format!("wrote {}\n", p.display()))
        }
        None => put(out, &text),
    }
}

fn scan_spec<'a>(cfg: &'a RunConfig, shells: &'a BasisMap<f64>) -> (ScanSpec<'a>, &'a [f64]) {
    let Some(SystemSpec::Diatomic { atoms, charge, r }) = &cfg.system else {
        unreachable!("parse_config only allows diatomic scans")
    };
    let spec = ScanSpec {
        atoms: (&atoms.0, &atoms.1),
        charge: *charge,
        shells,
        basis_name: &cfg.basis,
        entropy_form: cfg.entropy,
        scf: scf_options(cfg),
        idmft_opts: idmft_options(cfg),
    };
    (spec, r)
}

fn scan(cfg: &RunConfig, out: Out<'_>) -> Result<(), CliError> {
    let shells = resolve_basis(&cfg.basis)?;
    let (spec, r) = scan_spec(cfg, &shells);
    let methods = ScanMethods {
        idmft: cfg.kappa.map(|_| entropic_params(cfg)),
        ..Default::default()
    };
    let records = dissociation_scan(&spec, r, &methods);
    emit_csv(cfg, write_csv(&records, cfg.full_precision)?, out)?;
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("R = {}: {e}", r.r)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} of {} points failed: {}",
            failed.len(),
            records.len(),
            failed.join("; ")
        )))
    }
}

fn fit(cfg: &RunConfig, out: Out<'_>) -> Result<(), CliError> {
    let shells = resolve_basis(&cfg.basis)?;
    let (spec, r) = scan_spec(cfg, &shells);
    let refs = dissociation_scan(&spec, r, &ScanMethods::default());
    let mut points = Vec::new();
    for rec in &refs {
        match rec.e_ci {
            Some(e) => {
                let m =
                    Molecule::diatomic_angstrom(spec.atoms.0, spec.atoms.1, rec.r, spec.charge)?;
                let ints = IntegralSet::compute(&m, &build_ao_basis(&m, &shells, &cfg.basis)?)?;
                points.push((m, ints, e));
            }
            None => warn!(
                "fit: no CI reference at R = {} ({})",
                rec.r,
                rec.error.as_deref().unwrap_or("")
            ),
        }
    }
    if points.is_empty() {
        return Err(CliError::Partial("no CI reference energies".into()));
    }
    let e_ci: Vec<f64> = points.iter().map(|p| p.2).collect();
    let opts = idmft_options(cfg);
    let fit = fit_params(&e_ci, &cfg.kappa_grid, |kappa, i| {
        let mut params = EntropicParams::plain(kappa, 0.0);
        params.entropy = cfg.entropy;
        Ok(idmft_scf(&points[i].0, &points[i].1, &params, &opts)?.energy)
    })?;
    put(out, &header(cfg))?;
    put(
        out,
        &format!(
            "kappa = {:.8}\nb = {:.8}\nrms = {:.3e}\npoints = {}\n",
            fit.kappa,
            fit.b,
            fit.rms,
            points.len() - fit.dropped.len()
        ),
    )?;
    if !fit.dropped.is_empty() {
        let r: Vec<String> = fit
            .dropped
            .iter()
            .map(|&i| format!("{}", refs[i].r))
            .collect();
        put(out, &format!("dropped R = {}\n", r.join(",")))?;
    }
    if let Some(p) = &cfg.output {
        let methods = ScanMethods {
            idmft: Some({
                let mut params = EntropicParams::plain(fit.kappa, fit.b);
                params.entropy = cfg.entropy;
                params
            }),
            ..Default::default()
        };
        let records = dissociation_scan(&spec, r, &methods);
        let mut fitted = cfg.clone();
        fitted.kappa = Some(fit.kappa);
        fitted.b = Some(fit.b);
        std::fs::write(
            p,
            format!(
                "{}{}",
                header(&fitted),
                write_csv(&records, cfg.full_precision)?
            ),
        )
        .map_err(io_err(p))?;
    }
    Ok(())
}

fn compare(cfg: &RunConfig, out: Out<'_>) -> Result<(), CliError> {
    let (a, b) = cfg.compare.as_ref().expect("compare paths");
    let load = |p: &PathBuf| -> Result<CalcDump, CliError> {
        Ok(CalcDump::parse(
            &std::fs::read_to_string(p).map_err(io_err(p))?,
        )?)
    };
    let (da, db) = (load(a)?, load(b)?);
    if da.overlap.shape() != db.overlap.shape() || max_abs(&(&da.overlap - &db.overlap)) > 1e-8 {
        return Err(CliError::Usage(
            "dumps were made over different AO bases".into(),
        ));
    }
    let rep = frobenius_distance(&da.one_matrix(), &db.one_matrix(), &da.overlap)?;
    put(
        out,
        &format!(
            "# compare {} ({}) vs {} ({})\n",
            a.display(),
            da.method,
            b.display(),
            db.method
        ),
    )?;
    put(
        out,
        "# gamma convention: spin-summed, trace = electron count\n",
    )?;
    put(out, &format!("frobenius distance = {:.8}\n", rep.distance))?;
    put(
        out,
        &format!("occupation difference = {:.8}\n", rep.occupation_difference),
    )?;
    put(
        out,
        &format!(
            "sum n_A^2 = {:.8}  sum n_B^2 = {:.8}  cross = {:.8}\n",
            rep.self_a, rep.self_b, rep.cross
        ),
    )?;
    put(
        out,
        &format!("energy difference = {:.10}\n", da.energy - db.energy),
    )
}

pub fn run(cfg: &RunConfig, out: Out<'_>) -> Result<(), CliError> {
    match cfg.method {
        Method::Scan => scan(cfg, out),
        Method::Fit => fit(cfg, out),
        Method::Compare => compare(cfg, out),
        _ => {
            put(out, &header(cfg))?;
            single_point(cfg, out)
        }
    }
}
