use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::run::CliError;

#[derive(Debug, Parser)]
#[command(name = "gyron", version, about = "Resonance algebras, quantum leaves and gyron spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build representation matrices and check the relations and Casimirs.
    Rep(Flags),
    /// Kernel, metric, Ricci form and measure tables with the integral identities.
    Geometry(Flags),
    /// Exact and Bohr–Sommerfeld spectra of a projected perturbation.
    Spectrum(Flags),
}

/// Every key can also be given in the TOML file passed with `--config`;
/// flags on the command line take precedence.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub l: Option<i64>,
    #[arg(long)]
    pub m: Option<i64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Select every label with energy at most this value.
    #[arg(long)]
    pub emax: Option<f64>,
    /// Rows of the geometry table and samples of A(λ).
    #[arg(long)]
    pub grid_x: Option<usize>,
    /// Angular nodes for the Gram matrix.
    #[arg(long)]
    pub grid_phi: Option<usize>,
    #[arg(long)]
    pub tol_relations: Option<f64>,
    #[arg(long)]
    pub tol_omega: Option<f64>,
    #[arg(long)]
    pub tol_dm: Option<f64>,
    #[arg(long)]
    pub tol_ricci: Option<f64>,
    #[arg(long)]
    pub tol_gram: Option<f64>,
    /// JSON polynomial in b₁, b₂, b₁*, b₂*.
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    /// Main JSON output; tables go next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated r values for a fixed-energy convergence sweep.
    #[arg(long, value_delimiter = ',')]
    pub sweep_r: Option<Vec<u32>>,
    #[arg(long)]
    pub exact_only: bool,
}

impl Flags {
    fn merge(self, file: Flags) -> Flags {
        Flags {
            config: self.config,
            l: self.l.or(file.l),
            m: self.m.or(file.m),
            hbar: self.hbar.or(file.hbar),
            r: self.r.or(file.r),
            q: self.q.or(file.q),
            p: self.p.or(file.p),
            emax: self.emax.or(file.emax),
            grid_x: self.grid_x.or(file.grid_x),
            grid_phi: self.grid_phi.or(file.grid_phi),
            tol_relations: self.tol_relations.or(file.tol_relations),
            tol_omega: self.tol_omega.or(file.tol_omega),
            tol_dm: self.tol_dm.or(file.tol_dm),
            tol_ricci: self.tol_ricci.or(file.tol_ricci),
            tol_gram: self.tol_gram.or(file.tol_gram),
            perturbation: self.perturbation.or(file.perturbation),
            out: self.out.or(file.out),
            sweep_r: self.sweep_r.or(file.sweep_r),
            exact_only: self.exact_only || file.exact_only,
        }
    }
}

/// How the representation labels are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSelection {
    Explicit { r: u32, q: u32, p: u32 },
    Shell { emax: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub relations: f64,
    pub omega: f64,
    pub dm: f64,
    pub ricci: f64,
    pub gram: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub l: i64,
    pub m: i64,
    pub hbar: f64,
    pub labels: LabelSelection,
    pub grid_x: usize,
    pub grid_phi: usize,
    pub tol: Tolerances,
    pub perturbation: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub sweep_r: Vec<u32>,
    pub exact_only: bool,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_flags(flags: Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
                let mut file: Flags =
                    toml::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                file.perturbation = file.perturbation.map(|p| resolve(base, p));
                file.out = file.out.map(|p| resolve(base, p));
                flags.merge(file)
            }
            None => flags,
        };
        let need = |v: Option<i64>, name: &str| v.ok_or_else(|| CliError::Input(format!("missing --{name}")));
        let l = need(flags.l, "l")?;
        let m = need(flags.m, "m")?;
        let hbar = flags.hbar.unwrap_or(1.0);
        let labels = match (flags.r, flags.emax) {
            (Some(r), None) => LabelSelection::Explicit {
                r,
                q: flags.q.unwrap_or(0),
                p: flags.p.unwrap_or(0),
            },
            (None, Some(emax)) => LabelSelection::Shell { emax },
            (Some(_), Some(_)) => return Err(CliError::Input("give either --r or --emax, not both".into())),
            (None, None) => return Err(CliError::Input("missing --r or --emax".into())),
        };
        let tol = Tolerances {
            relations: flags.tol_relations.unwrap_or(1e-12),
            omega: flags.tol_omega.unwrap_or(1e-8),
            dm: flags.tol_dm.unwrap_or(1e-4),
            ricci: flags.tol_ricci.unwrap_or(1e-6),
            gram: flags.tol_gram.unwrap_or(1e-6),
        };
        for (name, v) in [
            ("tol-relations", tol.relations),
            ("tol-omega", tol.omega),
            ("tol-dm", tol.dm),
            ("tol-ricci", tol.ricci),
            ("tol-gram", tol.gram),
        ] {
            if !(v > 0.0) {
                return Err(CliError::Input(format!("--{name} must be positive")));
            }
        }
        if let Some(p) = &flags.perturbation {
            if !p.is_file() {
                return Err(CliError::Input(format!("perturbation file {} not found", p.display())));
            }
        }
        if let Some(out) = &flags.out {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                if !dir.is_dir() {
                    return Err(CliError::Input(format!("output directory {} does not exist", dir.display())));
                }
            }
        }
        let grid_x = flags.grid_x.unwrap_or(200);
        let grid_phi = flags.grid_phi.unwrap_or(64);
        if grid_x < 2 || grid_phi < 1 {
            return Err(CliError::Input("--grid-x must be at least 2 and --grid-phi at least 1".into()));
        }
        Ok(Self {
            l,
            m,
            hbar,
            labels,
            grid_x,
            grid_phi,
            tol,
            perturbation: flags.perturbation,
            out: flags.out,
            sweep_r: flags.sweep_r.unwrap_or_default(),
            exact_only: flags.exact_only,
        })
    }
}
