use std::path::{Path, PathBuf};

use gyron::algebra::{
    build_matrices, casimir_values, check_relations, enumerate_reps, RepDocument, RepLabel, ResonanceParams,
};
use gyron::averaging::{generator_polynomial, project_resonant, realize_in_rep, BosonicPolynomial};
use gyron::geometry::restriction::Generator;
use gyron::geometry::{
    geometry_csv, geometry_table, integral_identities, kernel, measure::ln_measure_at, measure_density,
    metric_and_ricci, IntegralTolerances, MeasureDensity, MeasureOptions,
};
use gyron::spectra::{area_csv, convergence_report, spectrum_report, Sweep};
use gyron::GyronError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Cli, LabelSelection, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Quadrature(String),
    MultiWell(String),
    /// Names of the checks that missed their tolerance.
    Tolerance(Vec<String>),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Tolerance(_) | CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Quadrature(_) => 3,
            CliError::MultiWell(_) => 4,
        }
    }

    pub fn report(&self) -> String {
        let (kind, failures) = match self {
            CliError::Input(s) => ("input", vec![s.clone()]),
            CliError::Quadrature(s) => ("quadrature", vec![s.clone()]),
            CliError::MultiWell(s) => ("multiwell", vec![s.clone()]),
            CliError::Tolerance(v) => ("tolerance", v.clone()),
            CliError::Io(s) => ("io", vec![s.clone()]),
        };
        json!({ "error": kind, "failures": failures }).to_string()
    }
}

impl From<GyronError> for CliError {
    fn from(e: GyronError) -> Self {
        match e {
            GyronError::QuadratureNotConverged(_) => CliError::Quadrature(e.to_string()),
            GyronError::MultiWell { .. } => CliError::MultiWell(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rep(f) => cmd_rep(&RunConfig::from_flags(f)?),
        Command::Geometry(f) => cmd_geometry(&RunConfig::from_flags(f)?),
        Command::Spectrum(f) => cmd_spectrum(&RunConfig::from_flags(f)?),
    }
}

fn setup(cfg: &RunConfig) -> Result<(ResonanceParams, Vec<RepLabel>), CliError> {
    let params = ResonanceParams::new(cfg.l, cfg.m, cfg.hbar)?;
    let labels = match cfg.labels {
        LabelSelection::Explicit { r, q, p } => vec![params.label(r, q, p)?],
        LabelSelection::Shell { emax } => enumerate_reps(&params, emax),
    };
    if labels.is_empty() {
        return Err(CliError::Input("no representation below the requested energy".into()));
    }
    Ok((params, labels))
}

fn tag(label: &RepLabel) -> String {
    format!("r{}_q{}_p{}", label.r, label.q, label.p)
}

/// `out` with `suffix` appended to its stem, e.g. `run.json` to `run_r4_q0_p0.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}"))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(cfg: &RunConfig, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).expect("report serializes") + "\n";
    match &cfg.out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(failures))
    }
}

pub fn cmd_rep(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, labels) = setup(cfg)?;
    let s = params.structure();
    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for label in &labels {
        let g = build_matrices(&params, label)?;
        let rel = check_relations(&g, &s);
        let cas = casimir_values(&g, &s, label);
        for (name, v) in rel.named() {
            if v > cfg.tol.relations {
                failures.push(format!("{} {name} residual {v:e}", tag(label)));
            }
        }
        if cas.kappa_residual > cfg.tol.relations {
            failures.push(format!("{} kappa residual {:e}", tag(label), cas.kappa_residual));
        }
        if cas.c_residual > cfg.tol.relations {
            failures.push(format!("{} C residual {:e}", tag(label), cas.c_residual));
        }
        let residuals: serde_json::Map<String, Value> =
            rel.named().iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        reps.push(json!({
            "rep": RepDocument::new(&params, label, &g),
            "relations": residuals,
            "casimir": cas,
        }));
    }
    emit(cfg, &json!({ "reps": reps, "failures": failures }))?;
    finish(failures)
}

pub fn cmd_geometry(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, labels) = setup(cfg)?;
    let opts = MeasureOptions::default();
    let tolerances = IntegralTolerances {
        omega: cfg.tol.omega,
        dm: cfg.tol.dm,
        ricci: cfg.tol.ricci,
    };
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for label in &labels {
        let k = kernel(&params, label);
        let metric = metric_and_ricci(&k);
        let measure = measure_density(&params, label, &k, &opts)?;
        let ids = integral_identities(&metric, &measure, tolerances);
        let gram = measure.gram(&k, cfg.grid_phi);
        let d = label.dim();
        let mut gram_dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                gram_dev = gram_dev.max((gram[(i, j)].re - target).abs().max(gram[(i, j)].im.abs()));
            }
        }
        let t = tag(label);
        if !ids.omega_ok() {
            failures.push(format!("{t} omega integral {:e}", ids.omega_integral));
        }
        if !ids.dm_ok() {
            failures.push(format!("{t} dm integral {:e}", ids.dm_integral));
        }
        if !ids.ricci_ok() {
            failures.push(format!("{t} ricci integral {:e}", ids.ricci_integral));
        }
        if gram_dev > cfg.tol.gram {
            failures.push(format!("{t} gram deviation {gram_dev:e}"));
        }
        if let Some(out) = &cfg.out {
            let (lo, hi) = (measure.ln_x[0], *measure.ln_x.last().unwrap());
            let ln_x: Vec<f64> = (0..cfg.grid_x)
                .map(|i| lo + (hi - lo) * i as f64 / (cfg.grid_x - 1) as f64)
                .collect();
            let ln_l = ln_x
                .iter()
                .map(|&y| ln_measure_at(&params, label, y, &opts))
                .collect::<gyron::Result<Vec<f64>>>()?;
            let rows = MeasureDensity {
                params,
                label: *label,
                weights: vec![0.0; ln_x.len()],
                ln_x,
                ln_l,
            };
            write(&sibling(out, &format!("{t}.csv")), &geometry_csv(&geometry_table(&metric, &rows)))?;
        }
        reports.push(json!({
            "label": label,
            "omega_integral": ids.omega_integral,
            "dm_integral": ids.dm_integral,
            "ricci_integral": ids.ricci_integral,
            "gram_deviation": gram_dev,
            "passes": ids.passes() && gram_dev <= cfg.tol.gram,
        }));
    }
    emit(cfg, &json!({ "geometry": reports, "failures": failures }))?;
    finish(failures)
}

fn load_perturbation(cfg: &RunConfig, params: &ResonanceParams) -> Result<BosonicPolynomial, CliError> {
    let b = match &cfg.perturbation {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            BosonicPolynomial::from_json(&text)
                .map_err(|e| CliError::Input(format!("bad perturbation {}: {e}", path.display())))?
        }
        None => generator_polynomial(Generator::APlus, params).add(&generator_polynomial(Generator::AMinus, params)),
    };
    let f1 = project_resonant(&b, params).f1;
    if f1.terms.is_empty() {
        return Err(CliError::Input("perturbation has no resonant terms".into()));
    }
    Ok(f1)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, labels) = setup(cfg)?;
    let f1 = load_perturbation(cfg, &params)?;
    let mut docs = Vec::new();
    for label in &labels {
        let f = realize_in_rep(&f1, &params, label);
        let (mut report, area) = spectrum_report(&f, &params, label, cfg.exact_only)?;
        let mut extra = serde_json::Map::new();
        if let (Some(out), Some(area)) = (&cfg.out, &area) {
            write(&sibling(out, &format!("{}_area.csv", tag(label))), &area_csv(&area.samples(cfg.grid_x)))?;
        }
        if !cfg.sweep_r.is_empty() && !cfg.exact_only {
            let op = |p: &ResonanceParams, lab: &RepLabel| Ok(realize_in_rep(&f1, p, lab));
            let sweep = Sweep {
                l: cfg.l,
                m: cfg.m,
                q: label.q,
                p: label.p,
                energy: label.energy,
                operator: &op,
            };
            let conv = convergence_report(&sweep, &cfg.sweep_r)?;
            report.convergence = conv.rows.clone();
            extra.insert("convergence_slope".into(), json!(conv.slope));
            extra.insert("convergence_ratios".into(), json!(conv.ratios));
            extra.insert("root_counts".into(), json!(conv.root_counts));
        }
        let mut doc = serde_json::to_value(&report).expect("report serializes");
        if let Value::Object(map) = &mut doc {
            map.extend(extra);
        }
        docs.push(doc);
    }
    if docs.len() == 1 {
        emit(cfg, &docs[0])
    } else {
        emit(cfg, &docs)
    }
}
