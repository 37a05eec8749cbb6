//! Term-by-term checks of the operator identities.
//!
//! Each check evaluates both sides in mode space (or against the grid
//! oracle for `thm12_pair`) and reports the relative residual
//! `|lhs - rhs| / max(|lhs|, |rhs|, 1e-30)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::RadialExpr;
use crate::grid_oracle::{choose_annulus, default_annulus, oracle_norms, FdStep, K_MAX};
use crate::modes::{mu, DimensionConstants, ModeFunction, ModeOp};
use crate::profiles::bilinear;
use crate::quadrature::RadialRule;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-6;

/// Coefficient of `‖f_#‖²` in the second form of the left identity, as a
/// multiple of `R_n`. Integrating the substitution identity gives `1/2`.
pub const LEFT_B_SHARP_COEFFICIENT: f64 = 0.5;

/// The weight parameter `a` of the weighted Hardy-type identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightParam {
    Fixed(f64),
    /// `a = n + 2`, used with the substituted profile.
    DimPlusTwo,
}

impl WeightParam {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            WeightParam::Fixed(a) => *a,
            WeightParam::DimPlusTwo => n as f64 + 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdentityId {
    Thm11Left,
    Thm11LeftB,
    Thm11Right,
    Thm12Pair,
    HardyEquality,
    WeightedIdentity(WeightParam),
    Substitution,
    MixEqual,
    N3Special,
    AbstractEquivalence,
}

impl IdentityId {
    /// Everything checked in mode space, plus the abstract equivalence.
    pub fn suite() -> Vec<IdentityId> {
        use IdentityId::*;
        vec![
            Thm11Left,
            Thm11LeftB,
            Thm11Right,
            HardyEquality,
            WeightedIdentity(WeightParam::Fixed(0.0)),
            WeightedIdentity(WeightParam::DimPlusTwo),
            WeightedIdentity(WeightParam::Fixed(7.0)),
            Substitution,
            MixEqual,
            N3Special,
            AbstractEquivalence,
        ]
    }

    pub fn applies_to(&self, f: &ModeFunction) -> bool {
        match self {
            IdentityId::N3Special => f.dim() == 3,
            IdentityId::Thm12Pair => matches!(f.dim(), 2 | 3) && f.max_degree().unwrap_or(0) <= K_MAX,
            _ => true,
        }
    }

    pub fn oracle_backed(&self) -> bool {
        matches!(self, IdentityId::Thm12Pair)
    }

    pub fn default_tol(&self) -> f64 {
        if self.oracle_backed() {
            ORACLE_TOL
        } else {
            DEFAULT_TOL
        }
    }

    pub fn name(&self, n: usize) -> String {
        match self {
            IdentityId::Thm11Left => "thm11_left".into(),
            IdentityId::Thm11LeftB => "thm11_leftB".into(),
            IdentityId::Thm11Right => "thm11_right".into(),
            IdentityId::Thm12Pair => "thm12_pair".into(),
            IdentityId::HardyEquality => "hardy_equality".into(),
            IdentityId::WeightedIdentity(a) => format!("weighted_identity(a={})", a.value(n)),
            IdentityId::Substitution => "substitution".into(),
            IdentityId::MixEqual => "mix_equal".into(),
            IdentityId::N3Special => "n3_special".into(),
            IdentityId::AbstractEquivalence => "abstract_equivalence".into(),
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityId::WeightedIdentity(WeightParam::DimPlusTwo) => write!(f, "weighted_identity(a=n+2)"),
            other => write!(f, "{}", other.name(0)),
        }
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use IdentityId::*;
        let id = match s {
            "thm11_left" => Thm11Left,
            "thm11_leftB" | "thm11_leftb" => Thm11LeftB,
            "thm11_right" => Thm11Right,
            "thm12_pair" => Thm12Pair,
            "hardy_equality" => HardyEquality,
            "substitution" => Substitution,
            "mix_equal" => MixEqual,
            "n3_special" => N3Special,
            "abstract_equivalence" => AbstractEquivalence,
            "weighted_identity(a=n+2)" => WeightedIdentity(WeightParam::DimPlusTwo),
            other => {
                let a = other
                    .strip_prefix("weighted_identity(a=")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::config(format!("unknown identity id `{other}`")))?;
                WeightedIdentity(WeightParam::Fixed(a))
            }
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub n: usize,
    pub modes: usize,
    pub terms: Vec<ReportTerm>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn finish(id: String, n: usize, modes: usize, lhs: f64, terms: Terms, tol: f64) -> Self {
        let rhs = terms.sum();
        let abs = (lhs - rhs).abs();
        let rel = relative(abs, lhs, rhs);
        IdentityReport {
            id,
            n,
            modes,
            terms: terms.list,
            lhs,
            rhs,
            abs_residual: abs,
            rel_residual: rel,
            tol,
            pass: rel <= tol,
        }
    }

    /// `rhs` recomputed from the listed terms.
    pub fn recomputed_rhs(&self) -> f64 {
        self.terms.iter().map(|t| t.value).sum()
    }
}

fn relative(abs: f64, lhs: f64, rhs: f64) -> f64 {
    abs / lhs.abs().max(rhs.abs()).max(1e-30)
}

/// Signed rhs terms; `rhs` is their plain sum.
#[derive(Debug, Default)]
struct Terms {
    list: Vec<ReportTerm>,
}

impl Terms {
    fn push(&mut self, label: &str, value: f64) {
        self.list.push(ReportTerm { label: label.to_string(), value });
    }

    fn sum(&self) -> f64 {
        self.list.iter().map(|t| t.value).sum()
    }

    /// Scale the dominant term by `1 + delta` (sensitivity check).
    fn perturb(&mut self, delta: f64) {
        if delta == 0.0 {
            return;
        }
        if let Some(t) = self.list.iter_mut().max_by(|a, b| a.value.abs().total_cmp(&b.value.abs())) {
            t.value *= 1.0 + delta;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Overrides the per-id default tolerance.
    pub tol: Option<f64>,
    /// Relative corruption of one coefficient, for checking that the suite
    /// notices a wrong identity.
    pub perturb: f64,
    pub fd_step: FdStep,
    /// Share of mode-space mass the oracle annulus may miss.
    pub oracle_missing_mass: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { tol: None, perturb: 0.0, fd_step: FdStep::default(), oracle_missing_mass: 1e-10 }
    }
}

struct Ctx<'a> {
    f: &'a ModeFunction,
    rule: &'a RadialRule,
    n: usize,
    d: DimensionConstants,
}

impl Ctx<'_> {
    fn norm(&self, label: &str, op: &ModeOp) -> Result<f64> {
        self.f.norm_sq(op, self.rule).map_err(|e| e.in_term(label))
    }

    fn pair(&self, label: &str, a: &ModeOp, b: &ModeOp) -> Result<f64> {
        self.f.pairing(a, b, self.rule).map_err(|e| e.in_term(label))
    }
}

pub fn check_identity(
    id: IdentityId,
    f: &ModeFunction,
    rule: &RadialRule,
    opts: &CheckOptions,
) -> Result<IdentityReport> {
    let n = f.dim();
    let ctx = Ctx { f, rule, n, d: DimensionConstants::new(n)? };
    let tol = opts.tol.unwrap_or_else(|| id.default_tol());
    let name = id.name(n);
    let (lhs, mut terms) = match id {
        IdentityId::Thm11Left => thm11_left(&ctx)?,
        IdentityId::Thm11LeftB => thm11_left_b(&ctx, LEFT_B_SHARP_COEFFICIENT)?,
        IdentityId::Thm11Right => thm11_right(&ctx)?,
        IdentityId::HardyEquality => hardy_equality(&ctx)?,
        IdentityId::WeightedIdentity(a) => weighted_identity(&ctx, a)?,
        IdentityId::MixEqual => mix_equal(&ctx)?,
        IdentityId::N3Special => n3_special(&ctx)?,
        IdentityId::Substitution => return substitution(&ctx, opts.perturb, tol),
        IdentityId::Thm12Pair => return thm12_pair(&ctx, opts, tol),
        IdentityId::AbstractEquivalence => return abstract_from_function(&ctx, opts.perturb, tol),
    };
    terms.perturb(opts.perturb);
    Ok(IdentityReport::finish(name, n, f.len(), lhs, terms, tol))
}

fn thm11_left(c: &Ctx) -> Result<(f64, Terms)> {
    let r = c.d.rellich;
    let w2 = ModeOp::weight(2.0);
    let lr = ModeOp::radial_laplacian(c.n);
    let lhs = r * r * c.norm("|f/|x|^2|^2", &w2)?;
    let mut t = Terms::default();
    t.push("|D_r f|^2", c.norm("|D_r f|^2", &lr)?);
    t.push("-|D_r f + R f/|x|^2|^2", -c.norm("|D_r f + R f/|x|^2|^2", &(lr + w2 * r))?);
    t.push("-2R |f_*/|x||^2", -2.0 * r * c.norm("|f_*/|x||^2", &ModeOp::f_star(c.n).shifted(-1.0))?);
    Ok((lhs, t))
}

fn thm11_left_b(c: &Ctx, sharp_coefficient: f64) -> Result<(f64, Terms)> {
    let r = c.d.rellich;
    let w2 = ModeOp::weight(2.0);
    let lr = ModeOp::radial_laplacian(c.n);
    let lhs = r * r * c.norm("|f/|x|^2|^2", &w2)?;
    let mut t = Terms::default();
    t.push("|D_r f|^2", c.norm("|D_r f|^2", &lr)?);
    t.push("-(1 + R/2) |D_r f + R f/|x|^2|^2", -(1.0 + 0.5 * r) * c.norm("|D_r f + R f/|x|^2|^2", &(lr + w2 * r))?);
    t.push("+(R/2) |f_#|^2", sharp_coefficient * r * c.norm("|f_#|^2", &ModeOp::f_sharp(c.n))?);
    Ok((lhs, t))
}

fn thm11_right(c: &Ctx) -> Result<(f64, Terms)> {
    let r = c.d.rellich;
    let s = ModeOp::spherical_part();
    let star = ModeOp::f_star(c.n);
    let lhs = c.norm("|D f|^2", &ModeOp::laplacian(c.n))?;
    let mut t = Terms::default();
    t.push("|D_r f|^2", c.norm("|D_r f|^2", &ModeOp::radial_laplacian(c.n))?);
    t.push("|sum L_j^2 f|^2", c.norm("|sum L_j^2 f|^2", &s)?);
    t.push("2R sum |L_j f/|x||^2", 2.0 * r * c.pair("sum |L_j f/|x||^2", &(-s), &ModeOp::weight(2.0))?);
    t.push("2<-sum L_j^2 f_*, f_*>", 2.0 * c.pair("<-sum L_j^2 f_*, f_*>", &(-s).compose(&star)?, &star)?);
    Ok((lhs, t))
}

fn hardy_equality(c: &Ctx) -> Result<(f64, Terms)> {
    let h = c.d.hardy;
    let w1 = ModeOp::weight(1.0);
    let dr = ModeOp::dr();
    let lhs = h * h * c.norm("|f/|x||^2", &w1)?;
    let mut t = Terms::default();
    t.push("|d_r f|^2", c.norm("|d_r f|^2", &dr)?);
    t.push("-|d_r f + H f/|x||^2", -c.norm("|d_r f + H f/|x||^2", &(dr + w1 * h))?);
    Ok((lhs, t))
}

/// `g̃ = (∂_r f/|x| + (H_n - 1) f/|x|²) |x|^{(n+4)/2}`.
pub fn substituted_profile_op(n: usize) -> ModeOp {
    let h = (n as f64 - 2.0) / 2.0;
    ModeOp::radial(RadialExpr::new(n as f64 / 2.0, h - 1.0, 1.0, 0.0))
}

/// The function `g` entering the weighted identity: `|x|^{a/2} f` in
/// general and the substituted `g̃` for `a = n + 2`.
fn weighted_source(n: usize, a: WeightParam) -> ModeOp {
    match a {
        WeightParam::DimPlusTwo => substituted_profile_op(n),
        WeightParam::Fixed(a) => ModeOp::radial(RadialExpr::power(a / 2.0)),
    }
}

fn weighted_identity(c: &Ctx, a: WeightParam) -> Result<(f64, Terms)> {
    let av = a.value(c.n);
    let g = weighted_source(c.n, a);
    let k = (c.n as f64 - 2.0 - av) / 2.0;
    let ga = g.shifted(-1.0 - av / 2.0);
    let gb = g.derivative()?.shifted(-av / 2.0);
    let lhs = k * k * c.norm("|g/|x|^{1+a/2}|^2", &ga)?;
    let mut t = Terms::default();
    t.push("|d_r g/|x|^{a/2}|^2", c.norm("|d_r g/|x|^{a/2}|^2", &gb)?);
    t.push("-|c g/|x|^{1+a/2} + d_r g/|x|^{a/2}|^2", -c.norm("|c g/|x|^{1+a/2} + d_r g/|x|^{a/2}|^2", &(ga * k + gb))?);
    Ok((lhs, t))
}

fn mix_equal(c: &Ctx) -> Result<(f64, Terms)> {
    let r = c.d.rellich;
    let rt = c.d.rellich_tilde;
    let w2 = ModeOp::weight(2.0);
    let t_exp = c.n as f64 - 1.0;
    let mut weighted = 0.0;
    let mut complement = 0.0;
    let mut ksum = 0.0;
    for (i, g) in c.f.modes() {
        let e = w2.at(0.0);
        let v = bilinear(g, &e, g, &e, t_exp, c.rule).map_err(|e| e.in_term("|P_k f/|x|^2|^2"))?;
        weighted += v;
        if i.k >= 1 {
            let m = mu(i.k, c.n);
            complement += v;
            ksum += (m * (m + 2.0 * r) - rt) * v;
        }
    }
    let lap = c.norm("|D f|^2", &ModeOp::laplacian(c.n))?;
    let lhs = lap - r * r * weighted - rt * complement - ksum;
    let s = ModeOp::spherical_part();
    let star = ModeOp::f_star(c.n);
    let lr = ModeOp::radial_laplacian(c.n);
    let mut t = Terms::default();
    t.push("2R |f_*/|x||^2", 2.0 * r * c.norm("|f_*/|x||^2", &star.shifted(-1.0))?);
    t.push("2<-sum L_j^2 f_*, f_*>", 2.0 * c.pair("<-sum L_j^2 f_*, f_*>", &(-s).compose(&star)?, &star)?);
    t.push("|D_r f + R f/|x|^2|^2", c.norm("|D_r f + R f/|x|^2|^2", &(lr + w2 * r))?);
    Ok((lhs, t))
}

fn n3_special(c: &Ctx) -> Result<(f64, Terms)> {
    if c.n != 3 {
        return Err(Error::constraint(format!("n3_special holds for n = 3 only, got n = {}", c.n)));
    }
    let lhs = c.norm("|d_r f/|x||^2", &ModeOp::dr().shifted(-1.0))?;
    let mut t = Terms::default();
    t.push("-Re<f/|x|^2, d_r^2 f>", -c.pair("Re<f/|x|^2, d_r^2 f>", &ModeOp::weight(2.0), &ModeOp::dr2())?);
    Ok((lhs, t))
}

/// Radii at which the substitution is checked pointwise.
const SUBSTITUTION_RADII: [f64; 7] = [0.05, 0.2, 0.45, 0.8, 1.3, 2.1, 3.4];

/// `∂_r g̃ = (Δ_r f + R_n f/|x|²) |x|^{(n+2)/2}`, with the left side from a
/// Richardson-extrapolated central difference of `g̃`.
fn substitution(c: &Ctx, perturb: f64, tol: f64) -> Result<IdentityReport> {
    let n = c.n;
    let gt_op = substituted_profile_op(n).at(0.0);
    let direct_op =
        (ModeOp::radial_laplacian(n) + ModeOp::weight(2.0) * c.d.rellich).shifted((n as f64 + 2.0) / 2.0).at(0.0);
    let mut fd_sq = 0.0;
    let mut diff_sq = 0.0;
    let mut terms = Terms::default();
    for (i, g) in c.f.modes() {
        let gt = g.transformed(&gt_op)?;
        let direct = g.transformed(&direct_op)?;
        for &r in &SUBSTITUTION_RADII {
            let h = 1e-3 * r;
            let d = |h: f64| (gt.value(r + h) - gt.value(r - h)) / (2.0 * h);
            let fd = (d(0.5 * h) * 4.0 - d(h)) / 3.0;
            let want = direct.value(r) * (1.0 + perturb);
            fd_sq += fd.norm_sqr();
            diff_sq += (fd - want).norm_sqr();
            terms.push(&format!("(k={},m={}) r={r}", i.k, i.m), want.norm_sqr());
        }
    }
    let mut rep = IdentityReport::finish("substitution".into(), n, c.f.len(), fd_sq, terms, tol);
    // pointwise mismatch, in the units of the summed squares
    let abs = rep.abs_residual.max(diff_sq.sqrt() * rep.lhs.abs().max(rep.rhs.abs()).sqrt());
    rep.abs_residual = abs;
    rep.rel_residual = relative(abs, rep.lhs, rep.rhs);
    rep.pass = rep.rel_residual <= tol;
    Ok(rep)
}

fn thm12_pair(c: &Ctx, opts: &CheckOptions, tol: f64) -> Result<IdentityReport> {
    let f = c.f;
    if !IdentityId::Thm12Pair.applies_to(f) {
        return Err(Error::capability("thm12_pair needs n in {2, 3} and k <= 3"));
    }
    let s = ModeOp::spherical_part();
    let spherical = c.norm("|sum L_j^2 f|^2", &s)?;
    let tangential = c.pair("sum |L_j f/|x||^2", &(-s), &ModeOp::weight(2.0))?;
    let (a, b) = choose_annulus(f, c.rule, opts.oracle_missing_mass)?;
    let rule = default_annulus(c.n, a, b)?;
    let o = oracle_norms(f, opts.fd_step, &rule)?;
    let mut terms = Terms::default();
    terms.push("oracle |sum L_j^2 f|^2", o.spherical);
    terms.push("oracle sum |L_j f/|x||^2", o.tangential_sum());
    terms.perturb(opts.perturb);
    let mut rep = IdentityReport::finish("thm12_pair".into(), c.n, f.len(), spherical + tangential, terms, tol);
    // both sides vanish for radial f; measure against |Δf|² then
    let scale = c.norm("|D f|^2", &ModeOp::laplacian(c.n))?;
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(scale).max(1e-300);
    rep.rel_residual =
        rel(rep.lhs, rep.rhs).max(rel(spherical, rep.terms[0].value)).max(rel(tangential, rep.terms[1].value));
    rep.pass = rep.rel_residual <= tol;
    Ok(rep)
}

/// `‖u‖² = -c Re⟨u,v⟩ + b` is equivalent to
/// `c⁻²‖u‖² = ‖v‖² - ‖v + u/c‖² + 2b/c²`; this evaluates the second form.
pub fn check_abstract_equivalence(
    u: &[Complex64],
    v: &[Complex64],
    b: f64,
    c: f64,
    tol: f64,
) -> Result<IdentityReport> {
    if c == 0.0 {
        return Err(Error::config("abstract equivalence needs c != 0"));
    }
    if u.len() != v.len() {
        return Err(Error::config("u and v must have the same length"));
    }
    let nrm = |w: &mut dyn Iterator<Item = Complex64>| w.map(|z| z.norm_sqr()).sum::<f64>();
    let uu = nrm(&mut u.iter().copied());
    let vv = nrm(&mut v.iter().copied());
    let mixed = nrm(&mut v.iter().zip(u).map(|(v, u)| v + u / c));
    let mut t = Terms::default();
    t.push("|v|^2", vv);
    t.push("-|v + u/c|^2", -mixed);
    t.push("2b/c^2", 2.0 * b / (c * c));
    Ok(IdentityReport::finish("abstract_equivalence".into(), 0, u.len(), uu / (c * c), t, tol))
}

/// The abstract equivalence on vectors sampled from `f`: `u` and `v` are
/// the values of the profiles and their derivatives at fixed radii, and
/// `b` makes the left display exact.
fn abstract_from_function(c: &Ctx, perturb: f64, tol: f64) -> Result<IdentityReport> {
    let mut u = Vec::new();
    let mut v = Vec::new();
    for g in c.f.modes().values() {
        for &r in &SUBSTITUTION_RADII[..5] {
            let j = g.jet(r)?;
            u.push(j.g);
            v.push(j.dg);
        }
    }
    let cc = -(1.0 + 0.25 * c.n as f64);
    let uu: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let uv: f64 = u.iter().zip(&v).map(|(a, b)| (a * b.conj()).re).sum();
    let b = (uu + cc * uv) * (1.0 + perturb);
    let mut rep = check_abstract_equivalence(&u, &v, b, cc, tol)?;
    rep.n = c.n;
    rep.modes = c.f.len();
    Ok(rep)
}

/// Run `ids` on every function, in parallel across functions with reports
/// returned in input order. Ids that do not apply to a function's dimension
/// are skipped.
pub fn run_identity_suite(
    corpus: &[ModeFunction],
    ids: &[IdentityId],
    rule: &RadialRule,
    opts: &CheckOptions,
) -> Result<Vec<IdentityReport>> {
    let per_fn: Vec<Result<Vec<IdentityReport>>> = corpus
        .par_iter()
        .map(|f| ids.iter().filter(|id| id.applies_to(f)).map(|id| check_identity(*id, f, rule, opts)).collect())
        .collect();
    let mut out = Vec::new();
    for r in per_fn {
        out.extend(r?);
    }
    Ok(out)
}
