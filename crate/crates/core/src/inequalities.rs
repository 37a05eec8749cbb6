//! Slack checks of the inequalities, the abstract best-constant formula and
//! the δ-curves of the three-dimensional spherical comparison.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::{mu, project, DimensionConstants, ModeFunction, ModeOp, Selector};
use crate::profiles::weighted_selfintegral;
use crate::quadrature::RadialRule;

pub const DEFAULT_SLACK_TOL: f64 = 1e-9;
/// The best constant of the spherical comparison in three dimensions.
pub const C3: f64 = 64.0 / 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityId {
    Rellich,
    RadialRellich,
    RadialComparison,
    SphericalRellich,
    SphericalComparison,
    RefinedRellich,
    OrthogonalRellich,
    Hardy1d { t: f64 },
    Rellich1d { t: f64 },
    ElCross,
    Laststep { c3: f64 },
}

impl InequalityId {
    /// The ids run by the slack suite.
    pub fn suite() -> Vec<InequalityId> {
        use InequalityId::*;
        vec![
            Rellich,
            RadialRellich,
            RadialComparison,
            SphericalRellich,
            SphericalComparison,
            RefinedRellich,
            OrthogonalRellich,
            Hardy1d { t: 0.0 },
            Hardy1d { t: 2.0 },
            Rellich1d { t: 0.0 },
            Rellich1d { t: 2.0 * 3f64.sqrt() - 2.0 },
            ElCross,
            Laststep { c3: C3 },
        ]
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InequalityId::*;
        match self {
            Rellich => write!(f, "rellich"),
            RadialRellich => write!(f, "radial_rellich"),
            RadialComparison => write!(f, "radial_comparison"),
            SphericalRellich => write!(f, "spherical_rellich"),
            SphericalComparison => write!(f, "spherical_comparison"),
            RefinedRellich => write!(f, "refined_rellich"),
            OrthogonalRellich => write!(f, "orthogonal_rellich"),
            Hardy1d { t } => write!(f, "hardy_1d(t={t})"),
            Rellich1d { t } => write!(f, "rellich_1d(t={t})"),
            ElCross => write!(f, "el_cross"),
            Laststep { c3 } => write!(f, "laststep(C3={c3})"),
        }
    }
}

fn parse_param(s: &str, prefix: &str, key: &str) -> Option<Option<f64>> {
    let rest = s.strip_prefix(prefix)?;
    if rest.is_empty() {
        return Some(None);
    }
    let v = rest.strip_prefix('(')?.strip_suffix(')')?;
    let v = v.strip_prefix(key).and_then(|v| v.strip_prefix('=')).unwrap_or(v);
    Some(v.trim().parse().ok())
}

impl FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use InequalityId::*;
        let simple = match s {
            "rellich" => Some(Rellich),
            "radial_rellich" => Some(RadialRellich),
            "radial_comparison" => Some(RadialComparison),
            "spherical_rellich" => Some(SphericalRellich),
            "spherical_comparison" => Some(SphericalComparison),
            "refined_rellich" => Some(RefinedRellich),
            "orthogonal_rellich" => Some(OrthogonalRellich),
            "el_cross" => Some(ElCross),
            _ => None,
        };
        if let Some(id) = simple {
            return Ok(id);
        }
        let bad = || Error::config(format!("unknown inequality id `{s}`"));
        if let Some(t) = parse_param(s, "hardy_1d", "t") {
            return Ok(Hardy1d { t: t.unwrap_or(0.0) });
        }
        if let Some(t) = parse_param(s, "rellich_1d", "t") {
            return Ok(Rellich1d { t: t.unwrap_or(0.0) });
        }
        if let Some(c) = parse_param(s, "laststep", "C3") {
            return Ok(Laststep { c3: c.unwrap_or(C3) });
        }
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackReport {
    pub id: String,
    pub n: usize,
    pub modes: usize,
    pub constant: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `lhs / rhs`, absent when `rhs = 0`.
    pub quotient: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl SlackReport {
    pub fn new(id: String, n: usize, modes: usize, constant: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        let quotient = if rhs != 0.0 { Some(lhs / rhs) } else { None };
        SlackReport { id, n, modes, constant, lhs, rhs, slack, quotient, tol, pass: passes(slack, lhs, rhs, tol) }
    }

    /// Re-evaluate the verdict at another tolerance.
    pub fn passes_at(&self, tol: f64) -> bool {
        passes(self.slack, self.lhs, self.rhs, tol)
    }
}

fn passes(slack: f64, lhs: f64, rhs: f64, tol: f64) -> bool {
    slack >= -tol * lhs.abs().max(rhs.abs())
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::constraint(what))
    }
}

fn has_radial_part(f: &ModeFunction) -> bool {
    f.modes().keys().any(|i| i.k == 0)
}

/// Sum of `∫ |g^{(d)}|² r^t dr` over the profiles of `f`.
fn profile_sum(f: &ModeFunction, d: usize, t: f64, rule: &RadialRule) -> Result<f64> {
    let mut s = 0.0;
    for g in f.modes().values() {
        s += weighted_selfintegral(g, d, t, rule)?;
    }
    Ok(s)
}

/// The spherical comparison constant: 1 for `n ≥ 4`, 64/25 for `n = 3`.
pub fn spherical_comparison_constant(n: usize) -> Result<f64> {
    match n {
        0..=2 => Err(Error::constraint(format!("spherical_comparison needs n >= 3, got n = {n}"))),
        3 => Ok(C3),
        _ => Ok(1.0),
    }
}

/// Evaluate one inequality. The one-dimensional ids act on every profile of
/// `f` and report the summed sides.
pub fn check_inequality(id: InequalityId, f: &ModeFunction, rule: &RadialRule, tol: f64) -> Result<SlackReport> {
    use InequalityId::*;
    let n = f.dim();
    let d = DimensionConstants::new(n)?;
    let w2 = ModeOp::weight(2.0);
    let nrm = |op: &ModeOp, label: &str| f.norm_sq(op, rule).map_err(|e| e.in_term(label));
    let lap = || nrm(&ModeOp::laplacian(n), "|D f|^2");
    let rr = d.rellich * d.rellich;
    let (constant, lhs, rhs) = match id {
        Rellich => {
            if n == 2 {
                require(f.modes().keys().all(|i| i.k != 1), "n = 2 requires no k = 1 modes")?;
            }
            (rr, rr * nrm(&w2, "|f/|x|^2|^2")?, lap()?)
        }
        RadialRellich => (rr, rr * nrm(&w2, "|f/|x|^2|^2")?, nrm(&ModeOp::radial_laplacian(n), "|D_r f|^2")?),
        RadialComparison => {
            require(n >= 3, "radial_comparison needs n >= 3")?;
            (1.0, nrm(&ModeOp::radial_laplacian(n), "|D_r f|^2")?, lap()?)
        }
        SphericalRellich => {
            require(!has_radial_part(f), "Pf != 0")?;
            let c = (n as f64 - 1.0).powi(2);
            (c, c * nrm(&w2, "|f/|x|^2|^2")?, nrm(&ModeOp::spherical_part(), "|sum L_j^2 f|^2")?)
        }
        SphericalComparison => {
            let c = spherical_comparison_constant(n)?;
            (c, nrm(&ModeOp::spherical_part(), "|sum L_j^2 f|^2")?, c * lap()?)
        }
        RefinedRellich => {
            let perp =
                project(f, Selector::Complement).norm_sq(&w2, rule).map_err(|e| e.in_term("|P^perp f/|x|^2|^2"))?;
            (rr, rr * nrm(&w2, "|f/|x|^2|^2")? + d.rellich_tilde * perp, lap()?)
        }
        OrthogonalRellich => {
            require(!has_radial_part(f), "Pf != 0")?;
            let c = (d.rellich + n as f64 - 1.0).powi(2);
            (c, c * nrm(&w2, "|f/|x|^2|^2")?, lap()?)
        }
        Hardy1d { t } => {
            require(t != 1.0, "hardy_1d needs t != 1")?;
            let c = ((t + 1.0) / 2.0).powi(2);
            (c, c * profile_sum(f, 0, t, rule)?, profile_sum(f, 1, t + 2.0, rule)?)
        }
        Rellich1d { t } => {
            require(t != -3.0 && t != -1.0, "rellich_1d needs t not in {-3, -1}")?;
            let c = ((t + 3.0) / 2.0).powi(2) * ((t + 1.0) / 2.0).powi(2);
            (c, c * profile_sum(f, 0, t, rule)?, profile_sum(f, 2, t + 4.0, rule)?)
        }
        ElCross => {
            require(n == 3, "el_cross holds for n = 3 only")?;
            let s = ModeOp::spherical_part();
            let cross =
                f.pairing(&ModeOp::radial_laplacian(n), &s, rule).map_err(|e| e.in_term("Re<D_r f, sum L_j^2 f>"))?;
            let low = f.pairing(&w2, &s, rule).map_err(|e| e.in_term("<f/|x|^2, sum L_j^2 f>"))?;
            // 2Re⟨Δ_r f, ΣL²f⟩ ≥ (3/2)⟨f/|x|², ΣL²f⟩, the right side being ≤ 0
            (1.5, 1.5 * low, 2.0 * cross)
        }
        Laststep { c3 } => {
            require(c3 > 0.0, "laststep needs C3 > 0")?;
            let c = 4.0 / c3;
            (c, c * profile_sum(f, 0, -2.0, rule)?, profile_sum(f, 2, 2.0, rule)? + 6.0 * profile_sum(f, 1, 0.0, rule)?)
        }
    };
    Ok(SlackReport::new(id.to_string(), n, f.len(), constant, lhs, rhs, tol))
}

/// Restrict `f` so that it meets the side conditions of `id`; `None` when
/// the id does not apply in this dimension or nothing is left.
pub fn prepare_for(id: InequalityId, f: &ModeFunction) -> Option<ModeFunction> {
    use InequalityId::*;
    let n = f.dim();
    let g = match id {
        Rellich if n == 2 => {
            let mut g = ModeFunction::new(n).ok()?;
            for (i, p) in f.modes().iter().filter(|(i, _)| i.k != 1) {
                g.insert(*i, p.clone()).ok()?;
            }
            g
        }
        RadialComparison | SphericalComparison if n < 3 => return None,
        ElCross | Laststep { .. } if n != 3 => return None,
        SphericalRellich | OrthogonalRellich => project(f, Selector::Complement),
        _ => f.clone(),
    };
    (!g.is_empty()).then_some(g)
}

/// Every id on every function of the corpus, with side conditions enforced
/// by [`prepare_for`]. Reports come back in input order.
pub fn run_slack_suite(
    corpus: &[ModeFunction],
    ids: &[InequalityId],
    rule: &RadialRule,
    tol: f64,
) -> Result<Vec<SlackReport>> {
    let per_fn: Vec<Result<Vec<SlackReport>>> = corpus
        .par_iter()
        .map(|f| {
            ids.iter().filter_map(|id| prepare_for(*id, f).map(|g| check_inequality(*id, &g, rule, tol))).collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_fn {
        out.extend(r?);
    }
    Ok(out)
}

/// `(R_n + n - 1)² - R_n² - R̃_n`, zero up to rounding.
pub fn constant_consistency_defect(n: usize) -> Result<f64> {
    let d = DimensionConstants::new(n)?;
    Ok((d.rellich + n as f64 - 1.0).powi(2) - d.rellich.powi(2) - d.rellich_tilde)
}

/// `μ_k(μ_k - 3/2)` in three dimensions.
pub fn n3_coefficient(k: usize) -> f64 {
    let m = mu(k, 3);
    m * (m - 1.5)
}

/// Eigenvalues `λ_k` of the abstract angular operator, `λ_0 = 0` first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbstractSpectrum {
    n: usize,
    eigenvalues: Vec<f64>,
}

impl AbstractSpectrum {
    pub fn new(n: usize, eigenvalues: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!("dimension must be >= 2, got {n}")));
        }
        if eigenvalues.first() != Some(&0.0) {
            return Err(Error::config("the spectrum must start with lambda_0 = 0"));
        }
        if let Some(v) = eigenvalues.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite eigenvalue {v}")));
        }
        Ok(AbstractSpectrum { n, eigenvalues })
    }

    /// `λ_k = λ(k)` for `k = 0..=kmax`.
    pub fn from_fn(n: usize, kmax: usize, lambda: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(n, (0..=kmax).map(lambda).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbstractConstant {
    /// `max_{k ≥ 1} (λ_k + R_n)^{-2}`; infinite when unbounded.
    pub m_n: f64,
    /// `(1 - R_n √M_n)²`, or 1 for `n ≥ 4`; absent when unbounded.
    pub constant: Option<f64>,
    pub unbounded: bool,
    /// Index attaining `M_n`.
    pub k0: usize,
    /// Set when `λ_{k0} < -R_n`: the formula is reported but its
    /// optimality is not established.
    pub caveat: bool,
}

pub fn abstract_constant(spec: &AbstractSpectrum) -> Result<AbstractConstant> {
    let r = DimensionConstants::new(spec.n)?.rellich;
    let nonzero = &spec.eigenvalues[1..];
    if nonzero.is_empty() {
        return Err(Error::config("abstract spectrum has no nonzero modes"));
    }
    let (mut k0, mut m_n) = (1, 0.0f64);
    for (i, &l) in nonzero.iter().enumerate() {
        let s = l + r;
        let v = if s == 0.0 { f64::INFINITY } else { 1.0 / (s * s) };
        if v > m_n {
            m_n = v;
            k0 = i + 1;
        }
    }
    let unbounded = m_n.is_infinite();
    let caveat = !unbounded && spec.eigenvalues[k0] < -r;
    let constant = if spec.n >= 4 {
        Some(1.0)
    } else if unbounded {
        None
    } else if spec.eigenvalues[k0] + r > 0.0 {
        // equal to (1 - R√M)², in a form that rounds exactly for rational data
        let l = spec.eigenvalues[k0];
        Some(l * l / ((l + r) * (l + r)))
    } else {
        Some((1.0 - r * m_n.sqrt()).powi(2))
    };
    Ok(AbstractConstant { m_n, constant, unbounded: unbounded && spec.n < 4, k0, caveat })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaVariant {
    /// `16(3+4δ) / (25δ(4-3δ))`
    Refined,
    /// `16 / (3δ(4-3δ))`
    Unrefined,
}

pub fn delta_curve(delta: f64, variant: DeltaVariant) -> Result<f64> {
    if !(delta > 0.0 && delta < 4.0 / 3.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 4/3), got {delta}")));
    }
    let q = delta * (4.0 - 3.0 * delta);
    Ok(match variant {
        DeltaVariant::Refined => 16.0 * (3.0 + 4.0 * delta) / (25.0 * q),
        DeltaVariant::Unrefined => 16.0 / (3.0 * q),
    })
}

/// Golden-section search for the minimum of the curve on `(0, 4/3)`.
/// Returns `(argmin, min)`.
pub fn minimize_delta_curve(variant: DeltaVariant) -> (f64, f64) {
    let f = |d: f64| delta_curve(d, variant).expect("interior point");
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-6, 4.0 / 3.0 - 1e-6);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_rule, generate, CorpusParams};
    use crate::profiles::make_polyexp;
    use num_complex::Complex64;

    fn gauss(coeffs: &[f64]) -> crate::profiles::SmoothProfile {
        make_polyexp(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(), 1.0).unwrap()
    }

    #[test]
    fn radial_comparison_is_equality_on_radial() {
        let f = ModeFunction::single(5, 0, 1, gauss(&[1.0, 0.3])).unwrap();
        let rep = check_inequality(InequalityId::RadialComparison, &f, &corpus_rule(), DEFAULT_SLACK_TOL).unwrap();
        assert_eq!(rep.slack, 0.0);
    }

    #[test]
    fn zero_function_rellich() {
        let f = ModeFunction::new(6).unwrap();
        let rep = check_inequality(InequalityId::Rellich, &f, &corpus_rule(), DEFAULT_SLACK_TOL).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.slack), (0.0, 0.0, 0.0));
        assert!(rep.pass);
    }

    #[test]
    fn side_conditions_are_enforced() {
        let rule = corpus_rule();
        let k1 = ModeFunction::single(2, 1, 1, gauss(&[0.0, 0.0, 1.0])).unwrap();
        let err = check_inequality(InequalityId::Rellich, &k1, &rule, DEFAULT_SLACK_TOL).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)));
        let radial = ModeFunction::single(4, 0, 1, gauss(&[0.0, 1.0])).unwrap();
        match check_inequality(InequalityId::SphericalRellich, &radial, &rule, DEFAULT_SLACK_TOL) {
            Err(Error::Constraint(m)) => assert!(m.contains("Pf != 0")),
            other => panic!("{other:?}"),
        }
        assert!(check_inequality(InequalityId::RadialComparison, &k1, &rule, DEFAULT_SLACK_TOL).is_err());
        assert!(check_inequality(InequalityId::Hardy1d { t: 1.0 }, &radial, &rule, DEFAULT_SLACK_TOL).is_err());
        assert!(check_inequality(InequalityId::Rellich1d { t: -1.0 }, &radial, &rule, DEFAULT_SLACK_TOL).is_err());
    }

    #[test]
    fn spherical_comparison_near_extremal_family() {
        // g = r^{1/2+ε} cut off: the k = 1 quotient tends to 64/25 from below
        let rule = RadialRule::with_panels(0.0, 1.0, 0.5, 16, 40).unwrap();
        let g = crate::profiles::make_power_cutoff(0.5 + 1e-5, crate::profiles::CutoffChi::new(0.5, 1.0).unwrap());
        let f = ModeFunction::single(3, 1, 1, g).unwrap();
        let rep = check_inequality(InequalityId::SphericalComparison, &f, &rule, DEFAULT_SLACK_TOL).unwrap();
        assert!(rep.pass);
        let q = f.norm_sq(&ModeOp::spherical_part(), &rule).unwrap() / f.norm_sq(&ModeOp::laplacian(3), &rule).unwrap();
        assert!(q < C3 && q > 0.9 * C3, "{q}");
    }

    #[test]
    fn pass_is_monotone_in_tol() {
        let rep = SlackReport::new("x".into(), 3, 1, 1.0, 1.0 + 1e-8, 1.0, 1e-9);
        assert!(!rep.pass);
        assert!(rep.passes_at(1e-7));
        assert!(!rep.passes_at(1e-10));
    }

    #[test]
    fn abstract_examples() {
        let s = AbstractSpectrum::from_fn(3, 50, |k| (k * (k + 1)) as f64).unwrap();
        let c = abstract_constant(&s).unwrap();
        assert_eq!(c.constant, Some(64.0 / 25.0));
        assert!((c.m_n - 16.0 / 25.0).abs() < 1e-15);
        assert!(!c.caveat && !c.unbounded);
        let s = AbstractSpectrum::from_fn(2, 50, |k| (k * k) as f64).unwrap();
        let c = abstract_constant(&s).unwrap();
        assert!(c.unbounded && c.constant.is_none());
        let s = AbstractSpectrum::new(3, vec![0.0, 0.75, 6.0]).unwrap();
        assert!(abstract_constant(&s).unwrap().unbounded);
        let s = AbstractSpectrum::new(3, vec![0.0, 0.5, 6.0]).unwrap();
        assert!(abstract_constant(&s).unwrap().caveat);
        let s = AbstractSpectrum::from_fn(6, 5, |k| (k * (k + 4)) as f64).unwrap();
        assert_eq!(abstract_constant(&s).unwrap().constant, Some(1.0));
        assert!(abstract_constant(&AbstractSpectrum::new(3, vec![0.0]).unwrap()).is_err());
        assert!(AbstractSpectrum::new(3, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn delta_curves() {
        assert_eq!(delta_curve(0.5, DeltaVariant::Refined).unwrap(), 64.0 / 25.0);
        assert_eq!(delta_curve(2.0 / 3.0, DeltaVariant::Unrefined).unwrap(), 4.0);
        let (x, v) = minimize_delta_curve(DeltaVariant::Refined);
        assert!((x - 0.5).abs() < 1e-6 && (v - 2.56).abs() < 1e-12, "{x} {v}");
        assert!(delta_curve(1e-3, DeltaVariant::Refined).unwrap() > delta_curve(1e-2, DeltaVariant::Refined).unwrap());
        assert!(matches!(delta_curve(0.0, DeltaVariant::Unrefined), Err(Error::Domain(_))));
        assert!(delta_curve(4.0 / 3.0, DeltaVariant::Unrefined).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for id in InequalityId::suite() {
            assert_eq!(id.to_string().parse::<InequalityId>().unwrap(), id);
        }
        assert_eq!("hardy_1d(0.5)".parse::<InequalityId>().unwrap(), InequalityId::Hardy1d { t: 0.5 });
        assert!("bogus".parse::<InequalityId>().is_err());
    }

    #[test]
    fn small_slack_suite() {
        let rule = corpus_rule();
        for n in [2, 3, 5] {
            let fs: Vec<_> =
                generate(5, n, 5, CorpusParams::default()).unwrap().iter().map(|s| s.build().unwrap()).collect();
            for r in run_slack_suite(&fs, &InequalityId::suite(), &rule, DEFAULT_SLACK_TOL).unwrap() {
                assert!(r.pass, "n = {n} {}: slack {}", r.id, r.slack);
            }
        }
    }
}
