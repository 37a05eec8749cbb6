use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rellich_core::report::Format;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 20240601;
pub const DEFAULT_COUNT: usize = 50;

#[derive(Debug, Parser)]
#[command(
    name = "rellich",
    version,
    about = "Numerical checks of Rellich, Hardy and spherical-derivative inequalities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify the mode-space identities on a corpus.
    Identities {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        suite: Suite,
        /// Relative finite-difference step of the substitution check.
        #[arg(long)]
        fd_step: Option<f64>,
        /// Scale the largest right-hand term by (1 + delta).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        perturb: Option<f64>,
    },
    /// Slack of every inequality on a corpus.
    Inequalities {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        suite: Suite,
    },
    /// Extrapolated limits along extremizing families.
    Sharpness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Weight exponent for the one-dimensional family.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Largest harmonic degree of the k-scan.
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Rayleigh-Ritz estimates of sharp constants.
    Bestconst {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: Option<Target>,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Coefficient R of the abstract target.
        #[arg(long)]
        param: Option<f64>,
        /// Left end of the domain.
        #[arg(long)]
        a: Option<f64>,
        /// Right end of the domain.
        #[arg(long = "R")]
        r_end: Option<f64>,
        /// Interval counts of the nested grids.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
    },
    /// Mode-space norms against the Cartesian finite-difference oracle.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fd_step: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Functions per dimension in the seeded corpus.
    #[arg(long)]
    pub count: Option<usize>,
    /// Explicit corpus file (JSON) instead of the seeded generator.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Upper end of the radial quadrature.
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub panels: Option<usize>,
    /// Gauss-Legendre points per panel.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// JSON file with default values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Suite {
    /// Restrict to these ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Radial,
    Rellich1d,
    Kscan,
    Spherical3d,
    N2demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Hardy1d,
    Rellich1d,
    Laststep,
    Abstract,
    Inducedc3,
}

/// Contents of `--config`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    dim: Option<Vec<usize>>,
    seed: Option<u64>,
    count: Option<usize>,
    corpus: Option<PathBuf>,
    tol: Option<f64>,
    rmax: Option<f64>,
    panels: Option<usize>,
    order: Option<usize>,
    out: Option<PathBuf>,
    format: Option<FormatArg>,
    ids: Option<Vec<String>>,
    fd_step: Option<f64>,
    family: Option<Family>,
    t: Option<f64>,
    k_max: Option<usize>,
    target: Option<Target>,
    param: Option<f64>,
    a: Option<f64>,
    #[serde(rename = "R")]
    r_end: Option<f64>,
    sweep: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    Seeded { seed: u64, count: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleParams {
    pub rmax: f64,
    pub panels: usize,
    pub order: usize,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams { rmax: 12.0, panels: 30, order: 16 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Identities { ids: Option<Vec<String>>, fd_step: Option<f64>, perturb: f64 },
    Inequalities { ids: Option<Vec<String>> },
    Sharpness { family: Family, t: Option<f64>, k_max: usize },
    Bestconst { target: Target, t: Option<f64>, param: f64, a: f64, r_end: f64, sweep: Vec<usize> },
    Oracle { fd_step: Option<f64> },
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub dims: Vec<usize>,
    pub corpus: CorpusSource,
    /// `None` keeps per-check defaults.
    pub tol: Option<f64>,
    pub rule: RuleParams,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => bail!("--{name} must be positive and finite, got {x}"),
        v => Ok(v),
    }
}

fn nonzero(name: &str, v: Option<usize>) -> Result<Option<usize>> {
    match v {
        Some(0) => bail!("--{name} must be at least 1"),
        v => Ok(v),
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let common = match &cli.command {
            Command::Identities { common, .. }
            | Command::Inequalities { common, .. }
            | Command::Sharpness { common, .. }
            | Command::Bestconst { common, .. }
            | Command::Oracle { common, .. } => common.clone(),
        };
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let task = match cli.command {
            Command::Identities { suite, fd_step, perturb, .. } => Task::Identities {
                ids: suite.ids.or(file.ids),
                fd_step: positive("fd-step", fd_step.or(file.fd_step))?,
                perturb: perturb.unwrap_or(0.0),
            },
            Command::Inequalities { suite, .. } => Task::Inequalities { ids: suite.ids.or(file.ids) },
            Command::Sharpness { family, t, k_max, .. } => Task::Sharpness {
                family: family.or(file.family).unwrap_or(Family::Radial),
                t: t.or(file.t),
                k_max: nonzero("k-max", k_max.or(file.k_max))?.unwrap_or(12),
            },
            Command::Bestconst { target, t, param, a, r_end, sweep, .. } => {
                let a = positive("a", a.or(file.a))?.unwrap_or(1e-3);
                let r_end = positive("R", r_end.or(file.r_end))?.unwrap_or(1e3);
                if a >= r_end {
                    bail!("--a must be below --R, got [{a}, {r_end}]");
                }
                let sweep = sweep.or(file.sweep).unwrap_or_else(|| rellich_core::spectral::DEFAULT_SWEEP.to_vec());
                if sweep.is_empty() || sweep.contains(&0) {
                    bail!("--sweep needs positive interval counts");
                }
                Task::Bestconst {
                    target: target.or(file.target).unwrap_or(Target::Hardy1d),
                    t: t.or(file.t),
                    param: positive("param", param.or(file.param))?.unwrap_or(6.0),
                    a,
                    r_end,
                    sweep,
                }
            }
            Command::Oracle { fd_step, .. } => {
                let eta = positive("fd-step", fd_step.or(file.fd_step))?;
                if let Some(e) = eta {
                    if e >= 0.5 {
                        bail!("--fd-step must lie in (0, 0.5), got {e}");
                    }
                }
                Task::Oracle { fd_step: eta }
            }
        };

        let dims = common.dim.or(file.dim).unwrap_or_else(|| default_dims(&task));
        if dims.is_empty() {
            bail!("--dim needs at least one dimension");
        }
        if let Some(&n) = dims.iter().find(|&&n| n < 2) {
            bail!("dimensions must be at least 2, got {n}");
        }
        if matches!(task, Task::Oracle { .. }) {
            if let Some(&n) = dims.iter().find(|&&n| n > 3) {
                bail!("the grid oracle covers n = 2 and 3 only, got {n}");
            }
        }

        let corpus = match common.corpus.or(file.corpus) {
            Some(p) => CorpusSource::File(p),
            None => CorpusSource::Seeded {
                seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
                count: nonzero("count", common.count.or(file.count))?.unwrap_or(DEFAULT_COUNT),
            },
        };
        let d = RuleParams::default();
        let rule = RuleParams {
            rmax: positive("rmax", common.rmax.or(file.rmax))?.unwrap_or(d.rmax),
            panels: nonzero("panels", common.panels.or(file.panels))?.unwrap_or(d.panels),
            order: nonzero("order", common.order.or(file.order))?.unwrap_or(d.order),
        };
        let format = match common.format.or(file.format).unwrap_or(FormatArg::Json) {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
        Ok(RunConfig {
            task,
            dims,
            corpus,
            tol: positive("tol", common.tol.or(file.tol))?,
            rule,
            out: common.out.or(file.out),
            format,
        })
    }
}

fn default_dims(task: &Task) -> Vec<usize> {
    match task {
        Task::Identities { .. } | Task::Inequalities { .. } => (2..=8).collect(),
        Task::Oracle { .. } => vec![2, 3],
        Task::Sharpness { family: Family::Kscan, .. } => vec![5],
        Task::Sharpness { .. } | Task::Bestconst { .. } => vec![3, 5, 6],
    }
}
