use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rellich_core::corpus::{generate, CorpusFile, CorpusParams, FunctionSpec};
use rellich_core::grid_oracle::{compare_with_mode_space, FdStep};
use rellich_core::identities::{run_identity_suite, CheckOptions, IdentityId};
use rellich_core::inequalities::{run_slack_suite, InequalityId, DEFAULT_SLACK_TOL};
use rellich_core::modes::ModeFunction;
use rellich_core::profiles::make_polyexp;
use rellich_core::quadrature::RadialRule;
use rellich_core::report::{write_report, CsvRecord};
use rellich_core::sharpness::{
    default_eps, default_truncations, n2_failure_demo, radial_rellich_sharpness, rellich_1d_sharpness,
    spherical_3d_sharpness, spherical_highdim_k_scan, LimitScan, DEFAULT_DEEP_LOG_INV_A,
};
use rellich_core::spectral::{best_constant_estimate, BestConstTarget};
use serde::Serialize;

use crate::config::{CorpusSource, Family, RunConfig, Target, Task};

const SCAN_TOL: f64 = 5e-3;
const BESTCONST_TOL: f64 = 1e-2;
const ORACLE_TOL: f64 = 1e-6;
const ORACLE_MISSING_MASS: f64 = 1e-10;

/// Outcome of a run: number of checks and how many failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub checks: usize,
    pub failed: usize,
}

fn rule(cfg: &RunConfig) -> Result<RadialRule> {
    let p = cfg.rule;
    Ok(RadialRule::with_panels(0.0, p.rmax, 0.5, p.order, p.panels)?.with_max_width(0.5)?)
}

/// Corpus functions grouped by dimension, in the order of `cfg.dims`.
fn corpus(cfg: &RunConfig) -> Result<Vec<(usize, Vec<ModeFunction>)>> {
    let specs: Vec<FunctionSpec> = match &cfg.corpus {
        CorpusSource::Seeded { seed, count } => {
            let mut all = Vec::new();
            for &n in &cfg.dims {
                all.extend(generate(*seed, n, *count, CorpusParams::default())?);
            }
            all
        }
        CorpusSource::File(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading corpus {}", p.display()))?;
            CorpusFile::parse(&text)?
        }
    };
    let mut out = Vec::new();
    for &n in &cfg.dims {
        let fs = specs.iter().filter(|s| s.dim == n).map(|s| s.build()).collect::<Result<Vec<_>, _>>()?;
        if !fs.is_empty() {
            out.push((n, fs));
        }
    }
    if out.is_empty() {
        bail!("the corpus has no functions in the requested dimensions");
    }
    Ok(out)
}

fn emit<T: Serialize + CsvRecord>(cfg: &RunConfig, items: &[T]) -> Result<()> {
    match &cfg.out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_report(&mut w, items, cfg.format)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_report(&mut w, items, cfg.format)?;
        }
    }
    Ok(())
}

fn parse_ids<T: std::str::FromStr>(names: &Option<Vec<String>>, all: Vec<T>) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    match names {
        None => Ok(all),
        Some(v) => {
            v.iter().map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("unknown id `{s}`: {e}"))).collect()
        }
    }
}

fn scan_summary(scans: &[LimitScan], tol: f64) -> Summary {
    Summary { checks: scans.len(), failed: scans.iter().filter(|s| !(s.gap.abs() <= tol)).count() }
}

pub fn run(cfg: &RunConfig) -> Result<Summary> {
    match &cfg.task {
        Task::Identities { ids, fd_step, perturb } => {
            let ids = parse_ids(ids, IdentityId::suite())?;
            let mut opts = CheckOptions { tol: cfg.tol, perturb: *perturb, ..CheckOptions::default() };
            if let Some(eta) = fd_step {
                opts.fd_step = FdStep::new(*eta)?;
            }
            let rule = rule(cfg)?;
            let mut reps = Vec::new();
            for (_, fs) in corpus(cfg)? {
                reps.extend(run_identity_suite(&fs, &ids, &rule, &opts)?);
            }
            emit(cfg, &reps)?;
            Ok(Summary { checks: reps.len(), failed: reps.iter().filter(|r| !r.pass).count() })
        }
        Task::Inequalities { ids } => {
            let ids = parse_ids(ids, InequalityId::suite())?;
            let rule = rule(cfg)?;
            let tol = cfg.tol.unwrap_or(DEFAULT_SLACK_TOL);
            let mut reps = Vec::new();
            for (_, fs) in corpus(cfg)? {
                reps.extend(run_slack_suite(&fs, &ids, &rule, tol)?);
            }
            emit(cfg, &reps)?;
            Ok(Summary { checks: reps.len(), failed: reps.iter().filter(|r| !r.pass).count() })
        }
        Task::Oracle { fd_step } => {
            let step = match fd_step {
                Some(e) => FdStep::new(*e)?,
                None => FdStep::default(),
            };
            let tol = cfg.tol.unwrap_or(ORACLE_TOL);
            let rule = rule(cfg)?;
            let mut rows = Vec::new();
            for (_, fs) in corpus(cfg)? {
                use rayon::prelude::*;
                let per: Vec<_> = fs
                    .par_iter()
                    .map(|f| compare_with_mode_space(f, &rule, step, ORACLE_MISSING_MASS, tol))
                    .collect::<Result<Vec<_>, _>>()?;
                rows.extend(per.into_iter().flatten());
            }
            emit(cfg, &rows)?;
            Ok(Summary { checks: rows.len(), failed: rows.iter().filter(|r| !r.pass).count() })
        }
        Task::Sharpness { family, t, k_max } => {
            let tol = cfg.tol.unwrap_or(SCAN_TOL);
            let eps = default_eps();
            let scans: Vec<LimitScan> = match family {
                Family::Radial => {
                    let mut v = Vec::new();
                    for &n in &cfg.dims {
                        let (a, b) = radial_rellich_sharpness(n, &eps)?;
                        v.push(a);
                        v.push(b);
                    }
                    v
                }
                Family::Rellich1d => {
                    let ts = match t {
                        Some(t) => vec![*t],
                        None => vec![0.0, 2.0 * 3f64.sqrt() - 2.0],
                    };
                    let mut v = Vec::new();
                    for t in ts {
                        let (a, b) = rellich_1d_sharpness(t, &eps)?;
                        v.push(a);
                        v.push(b);
                    }
                    v
                }
                Family::Kscan => {
                    let g = make_polyexp(vec![Complex64::new(1.0, 0.0)], 0.5)?;
                    let ks: Vec<usize> = (1..=*k_max).collect();
                    let rule = rule(cfg)?;
                    let mut v = Vec::new();
                    for &n in &cfg.dims {
                        v.push(spherical_highdim_k_scan(n, &g, &ks, &rule)?.scan);
                    }
                    v
                }
                Family::Spherical3d => {
                    let (a, b) = spherical_3d_sharpness(&eps)?;
                    vec![a, b]
                }
                Family::N2demo => {
                    let d = n2_failure_demo(&default_truncations(), DEFAULT_DEEP_LOG_INV_A)?;
                    emit(cfg, std::slice::from_ref(&d))?;
                    let tail = d.increments.last().copied().unwrap_or(f64::INFINITY);
                    let checks = [
                        d.weighted_fit.r_squared >= 0.999,
                        d.radial_fit.r_squared >= 0.999,
                        tail < 1e-10,
                        d.rellich_quotient > 100.0,
                        d.radial_quotient > 100.0,
                    ];
                    return Ok(Summary { checks: checks.len(), failed: checks.iter().filter(|c| !**c).count() });
                }
            };
            emit(cfg, &scans)?;
            Ok(scan_summary(&scans, tol))
        }
        Task::Bestconst { target, t, param, a, r_end, sweep } => {
            let tol = cfg.tol.unwrap_or(BESTCONST_TOL);
            let target = match target {
                Target::Hardy1d => BestConstTarget::Hardy1d { t: t.unwrap_or(0.0) },
                Target::Rellich1d => BestConstTarget::Rellich1d { t: t.unwrap_or(2.0 * 3f64.sqrt() - 2.0) },
                Target::Laststep => BestConstTarget::Laststep,
                Target::Abstract => BestConstTarget::AbstractTilde { r: *param },
                Target::Inducedc3 => BestConstTarget::InducedC3,
            };
            let tab = best_constant_estimate(target, *a, *r_end, sweep)?;
            emit(cfg, std::slice::from_ref(&tab))?;
            let gap = tab.final_row().gap;
            let side_gap = if tab.from_above { gap } else { -gap };
            let checks = [side_gap > 0.0 && side_gap <= tol, tab.strict(), tab.monotone()];
            Ok(Summary { checks: checks.len(), failed: checks.iter().filter(|c| !**c).count() })
        }
    }
}
