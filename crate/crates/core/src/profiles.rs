//! Radial profile families with analytic first and second derivatives.
//!
//! A [`SmoothProfile`] is a finite sum of terms `w · T[b](r)`, where `b` is a
//! base family (a cut-off power or a polynomial times a Gaussian), `T` is a
//! [`RadialExpr`] and `w` a complex weight. Keeping the transform symbolic
//! lets operators act on profiles without materialising derivatives, and lets
//! weighted integrals treat pure-power regions near the origin in closed
//! form.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::euler::{Jet, RadialExpr};
use crate::quadrature::RadialRule;

/// Smooth step `χ` with `χ = 1` on `[0, r0]` and `χ = 0` on `[r1, ∞)`,
/// built from `q(x) = e^{-1/x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffChi {
    r0: f64,
    r1: f64,
}

impl Default for CutoffChi {
    fn default() -> Self {
        CutoffChi { r0: 0.5, r1: 1.0 }
    }
}

/// Below this the step `h` and its derivatives are zero to machine precision
/// (they carry a factor `e^{-1/x}`).
const STEP_FLAT: f64 = 1.4e-3;

impl CutoffChi {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::config(format!("cutoff needs 0 < r0 < r1, got r0 = {r0}, r1 = {r1}")));
        }
        Ok(CutoffChi { r0, r1 })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    /// `h(x) = q(x)/(q(x)+q(1-x))` with two derivatives, written as a
    /// logistic function of `ψ = 1/(1-x) - 1/x` to stay finite.
    fn step(x: f64) -> (f64, f64, f64) {
        if x <= STEP_FLAT {
            return (0.0, 0.0, 0.0);
        }
        if x >= 1.0 - STEP_FLAT {
            return (1.0, 0.0, 0.0);
        }
        let psi = 1.0 / (1.0 - x) - 1.0 / x;
        let (l, one_minus_l) = if psi >= 0.0 {
            let e = (-psi).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = psi.exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        let dl = l * one_minus_l;
        let d2l = dl * (one_minus_l - l);
        let u = 1.0 - x;
        let dpsi = 1.0 / (u * u) + 1.0 / (x * x);
        let d2psi = 2.0 / (u * u * u) - 2.0 / (x * x * x);
        (l, dl * dpsi, d2l * dpsi * dpsi + dl * d2psi)
    }

    /// `(χ, χ', χ'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.r0 {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.r1 {
            return (0.0, 0.0, 0.0);
        }
        let w = self.r1 - self.r0;
        let (h, dh, d2h) = Self::step((r - self.r0) / w);
        (1.0 - h, -dh / w, -d2h / (w * w))
    }

    /// The complementary step `1 - χ`.
    pub fn mirrored(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.r0 {
            return (0.0, 0.0, 0.0);
        }
        if r >= self.r1 {
            return (1.0, 0.0, 0.0);
        }
        let w = self.r1 - self.r0;
        let (h, dh, d2h) = Self::step((r - self.r0) / w);
        (h, dh / w, d2h / (w * w))
    }
}

/// The base families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `r^α χ(r)`.
    PowerCutoff { alpha: f64, chi: CutoffChi },
    /// `p(r) e^{-β r²}` with `p(r) = Σ c_j r^j`.
    PolyExp { coeffs: Vec<Complex64>, beta: f64 },
}

impl Family {
    pub fn jet(&self, r: f64) -> Jet {
        match self {
            Family::PowerCutoff { alpha, chi } => {
                let a = *alpha;
                let (c, dc, d2c) = chi.eval(r);
                if c == 0.0 && dc == 0.0 && d2c == 0.0 {
                    return Jet::ZERO;
                }
                let p = r.powf(a);
                let p1 = if a == 0.0 { 0.0 } else { a * p / r };
                let p2 = if a == 0.0 || a == 1.0 { 0.0 } else { a * (a - 1.0) * p / (r * r) };
                Jet {
                    g: Complex64::new(p * c, 0.0),
                    dg: Complex64::new(p1 * c + p * dc, 0.0),
                    d2g: Complex64::new(p2 * c + 2.0 * p1 * dc + p * d2c, 0.0),
                }
            }
            Family::PolyExp { coeffs, beta } => {
                let mut p = Complex64::new(0.0, 0.0);
                let mut dp = Complex64::new(0.0, 0.0);
                let mut d2p = Complex64::new(0.0, 0.0);
                for c in coeffs.iter().rev() {
                    d2p = d2p * r + dp * 2.0;
                    dp = dp * r + p;
                    p = p * r + c;
                }
                let b = *beta;
                let e = (-b * r * r).exp();
                Jet {
                    g: p * e,
                    dg: (dp - p * (2.0 * b * r)) * e,
                    d2g: (d2p - dp * (4.0 * b * r) + p * (4.0 * b * b * r * r - 2.0 * b)) * e,
                }
            }
        }
    }

    /// Exponent `α` of the leading behaviour `g ~ r^α` at the origin, `None`
    /// for the zero function.
    pub fn leading_exponent(&self) -> Option<f64> {
        match self {
            Family::PowerCutoff { alpha, .. } => Some(*alpha),
            Family::PolyExp { coeffs, .. } => {
                coeffs.iter().position(|c| *c != Complex64::new(0.0, 0.0)).map(|j| j as f64)
            }
        }
    }

    /// Exponent of the leading term of `e[g]` near 0; `None` if `e[g]` vanishes
    /// there identically (or to every order inspected).
    pub fn image_leading(&self, e: &RadialExpr) -> Option<f64> {
        match self {
            Family::PowerCutoff { alpha, .. } => (e.symbol(*alpha) != 0.0).then_some(alpha + e.shift),
            Family::PolyExp { coeffs, beta } => {
                // Taylor coefficients of p(r) e^{-βr²}; the symbol has at most two
                // integer roots, so a few nonzero powers past the first suffice
                let len = coeffs.len() + 8;
                let mut series = vec![Complex64::new(0.0, 0.0); len];
                for (i, c) in coeffs.iter().enumerate() {
                    let mut w = 1.0;
                    let mut k = 0;
                    while i + 2 * k < len {
                        series[i + 2 * k] += c * w;
                        k += 1;
                        w *= -beta / k as f64;
                    }
                }
                series
                    .iter()
                    .enumerate()
                    .find(|(j, c)| **c != Complex64::new(0.0, 0.0) && e.symbol(*j as f64) != 0.0)
                    .map(|(j, _)| j as f64 + e.shift)
            }
        }
    }

    /// `(α, r0)` when `g = r^α` exactly on `[0, r0]`.
    pub fn pure_power(&self) -> Option<(f64, f64)> {
        match self {
            Family::PowerCutoff { alpha, chi } => Some((*alpha, chi.r0)),
            Family::PolyExp { .. } => None,
        }
    }

    /// Radius beyond which the profile is zero (or below 1e-300).
    pub fn support(&self) -> f64 {
        match self {
            Family::PowerCutoff { chi, .. } => chi.r1,
            Family::PolyExp { coeffs, beta } => {
                let s: f64 = coeffs.iter().map(|c| c.norm()).sum();
                if s == 0.0 {
                    return 0.0;
                }
                let deg = (coeffs.len() - 1) as f64;
                // |p(r)| <= s max(1, r)^deg; solve β R² - deg ln R - ln s = 690.8
                let mut r: f64 = 1.0;
                for _ in 0..50 {
                    r = ((690.8 + s.ln().max(0.0) + deg * r.max(1.0).ln()) / beta).sqrt();
                }
                r
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.leading_exponent().is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub weight: Complex64,
    pub family: Arc<Family>,
    pub transform: RadialExpr,
}

/// A radial profile `g` with evaluable `g, g', g''`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmoothProfile {
    terms: Vec<Term>,
}

/// `g(r) = r^α χ(r)`.
pub fn make_power_cutoff(alpha: f64, chi: CutoffChi) -> SmoothProfile {
    SmoothProfile::from_family(Family::PowerCutoff { alpha, chi })
}

/// `g(r) = p(r) e^{-βr²}`.
pub fn make_polyexp(coeffs: Vec<Complex64>, beta: f64) -> Result<SmoothProfile> {
    if coeffs.is_empty() {
        return Err(Error::config("polyexp profile needs at least one coefficient"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("polyexp decay must be positive, got {beta}")));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::config("polyexp coefficients must be finite"));
    }
    Ok(SmoothProfile::from_family(Family::PolyExp { coeffs, beta }))
}

impl SmoothProfile {
    pub fn zero() -> Self {
        SmoothProfile { terms: Vec::new() }
    }

    pub fn from_family(family: Family) -> Self {
        if family.is_zero() {
            return Self::zero();
        }
        SmoothProfile {
            terms: vec![Term {
                weight: Complex64::new(1.0, 0.0),
                family: Arc::new(family),
                transform: RadialExpr::IDENTITY,
            }],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        SmoothProfile { terms: self.terms.iter().map(|t| Term { weight: t.weight * c, ..t.clone() }).collect() }
    }

    pub fn plus(&self, other: &SmoothProfile) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SmoothProfile { terms }
    }

    /// The profile `E[g]`. Fails with a capability error when the result
    /// would need more than two derivatives of a base family.
    pub fn transformed(&self, e: &RadialExpr) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let transform = e.compose(&t.transform)?;
            if !transform.is_zero() {
                terms.push(Term { transform, ..t.clone() });
            }
        }
        Ok(SmoothProfile { terms })
    }

    /// `g(r)`; always available.
    pub fn value(&self, r: f64) -> Complex64 {
        self.terms.iter().map(|t| t.weight * t.transform.apply(r, &t.family.jet(r))).sum()
    }

    /// `(g, g', g'')` at `r`; for transformed profiles the derivatives may be
    /// unavailable.
    pub fn jet(&self, r: f64) -> Result<Jet> {
        let mut out = Jet::ZERO;
        for t in &self.terms {
            let base = t.family.jet(r);
            if t.transform == RadialExpr::IDENTITY {
                out.g += t.weight * base.g;
                out.dg += t.weight * base.dg;
                out.d2g += t.weight * base.d2g;
                continue;
            }
            let d1 = t.transform.derivative()?;
            let d2 = d1.derivative()?;
            out.g += t.weight * t.transform.apply(r, &base);
            out.dg += t.weight * d1.apply(r, &base);
            out.d2g += t.weight * d2.apply(r, &base);
        }
        Ok(out)
    }

    /// Leading exponent at the origin of a single untransformed family.
    pub fn leading_exponent(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [t] => {
                let a = t.family.leading_exponent()?;
                Some(a + t.transform.shift)
            }
            _ => None,
        }
    }

    /// End of the region `[0, r0]` on which every term is a pure power; 0 if
    /// some term is not.
    pub fn pure_region_end(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.family.pure_power().map_or(0.0, |(_, r0)| r0))
            .fold(f64::INFINITY, f64::min)
            .min(if self.terms.is_empty() { 0.0 } else { f64::INFINITY })
    }

    pub fn support(&self) -> f64 {
        self.terms.iter().map(|t| t.family.support()).fold(0.0, f64::max)
    }
}

/// `Re ∫ E1[p] conj(E2[q]) r^t dr` over the rule's support.
///
/// On the common pure-power region near the origin the integral is done in
/// closed form; quadrature only sees the smooth remainder. With `a = 0` a
/// non-integrable power is a divergence error.
pub fn bilinear(
    p: &SmoothProfile,
    e1: &RadialExpr,
    q: &SmoothProfile,
    e2: &RadialExpr,
    t: f64,
    rule: &RadialRule,
) -> Result<f64> {
    bilinear_impl(p, e1, q, e2, t, rule, true)
}

/// As [`bilinear`] but by quadrature alone, without the closed-form split
/// or any divergence check.
pub fn bilinear_quadrature(
    p: &SmoothProfile,
    e1: &RadialExpr,
    q: &SmoothProfile,
    e2: &RadialExpr,
    t: f64,
    rule: &RadialRule,
) -> Result<f64> {
    bilinear_impl(p, e1, q, e2, t, rule, false)
}

/// `∫ |E[g]|² r^t dr`.
pub fn norm_sq(g: &SmoothProfile, e: &RadialExpr, t: f64, rule: &RadialRule) -> Result<f64> {
    bilinear(g, e, g, e, t, rule)
}

/// `∫ |g^{(d)}|² r^t dr` for `d ∈ {0, 1, 2}`.
pub fn weighted_selfintegral(g: &SmoothProfile, d: usize, t: f64, rule: &RadialRule) -> Result<f64> {
    let e = derivative_expr(d)?;
    norm_sq(g, &e, t, rule)
}

pub fn derivative_expr(d: usize) -> Result<RadialExpr> {
    match d {
        0 => Ok(RadialExpr::IDENTITY),
        1 => Ok(RadialExpr::d1()),
        2 => Ok(RadialExpr::d2()),
        _ => Err(Error::capability(format!("derivative order {d} is not supported (at most 2)"))),
    }
}

/// `(r_p, [(coefficient, exponent)])`: `Σ c r^e` on `[0, r_p]`.
pub type PureSplit = (f64, Vec<(f64, f64)>);

/// The integrand of [`bilinear`] on the joint pure-power region `[0, r_p]`
/// as `(r_p, [(coefficient, exponent)])`, meaning `Σ c r^e`. `None` when
/// some term has no pure region.
pub fn pure_integrand(
    p: &SmoothProfile,
    e1: &RadialExpr,
    q: &SmoothProfile,
    e2: &RadialExpr,
    t: f64,
) -> Result<Option<PureSplit>> {
    let rp = p.pure_region_end().min(q.pure_region_end());
    if !(rp > 0.0) {
        return Ok(None);
    }
    let left = compose_all(p, e1)?;
    let right = compose_all(q, e2)?;
    let mut out = Vec::new();
    for l in &left {
        for r in &right {
            let (Some((al, _)), Some((ar, _))) = (l.family.pure_power(), r.family.pure_power()) else {
                return Ok(None);
            };
            let coef = (l.weight * l.expr.symbol(al) * (r.weight * r.expr.symbol(ar)).conj()).re;
            if coef != 0.0 {
                out.push((coef, al + ar + l.expr.shift + r.expr.shift + t));
            }
        }
    }
    Ok(Some((rp, out)))
}

struct Composed<'a> {
    weight: Complex64,
    family: &'a Family,
    expr: RadialExpr,
}

fn compose_all<'a>(p: &'a SmoothProfile, e: &RadialExpr) -> Result<Vec<Composed<'a>>> {
    let mut out = Vec::with_capacity(p.terms.len());
    for t in &p.terms {
        let expr = e.compose(&t.transform)?;
        if !expr.is_zero() {
            out.push(Composed { weight: t.weight, family: &t.family, expr });
        }
    }
    Ok(out)
}

/// `(b^x - a^x)/x`, continuous through `x = 0`.
fn power_difference(a: f64, b: f64, x: f64) -> f64 {
    if a == 0.0 {
        return b.powf(x) / x;
    }
    let l = (b / a).ln();
    if x == 0.0 {
        return l;
    }
    a.powf(x) * (x * l).exp_m1() / x
}

fn bilinear_impl(
    p: &SmoothProfile,
    e1: &RadialExpr,
    q: &SmoothProfile,
    e2: &RadialExpr,
    t: f64,
    rule: &RadialRule,
    split: bool,
) -> Result<f64> {
    if e1.is_zero() || e2.is_zero() {
        return Ok(0.0);
    }
    let left = compose_all(p, e1)?;
    let right = compose_all(q, e2)?;
    if left.is_empty() || right.is_empty() {
        return Ok(0.0);
    }
    let a = rule.a();
    let top = p.support().min(q.support()).min(rule.r_max());
    if !(top > a) {
        return Ok(0.0);
    }

    let mut closed = 0.0;
    let mut start = a;
    if split {
        let rp = p.pure_region_end().min(q.pure_region_end()).min(top);
        let joint_pure = rp > 0.0;
        for l in &left {
            for r in &right {
                let (al, ar) = match (l.family.pure_power(), r.family.pure_power()) {
                    _ if !joint_pure => match (l.family.leading_exponent(), r.family.leading_exponent()) {
                        (Some(x), Some(y)) => (x, y),
                        _ => continue,
                    },
                    (Some((x, _)), Some((y, _))) => (x, y),
                    _ => unreachable!("joint pure region implies pure terms"),
                };
                let sl = l.expr.symbol(al);
                let sr = r.expr.symbol(ar);
                let e = al + ar + l.expr.shift + r.expr.shift + t;
                if joint_pure {
                    let coef = (l.weight * sl * (r.weight * sr).conj()).re;
                    if coef == 0.0 {
                        continue;
                    }
                    if rp > a {
                        if a == 0.0 && e <= -1.0 {
                            return Err(Error::Divergence { term: String::new(), exponent: e });
                        }
                        closed += coef * power_difference(a, rp, e + 1.0);
                    }
                } else if a == 0.0 {
                    // leading-order check for families without a pure region
                    if let (Some(x), Some(y)) = (l.family.image_leading(&l.expr), r.family.image_leading(&r.expr)) {
                        if x + y + t <= -1.0 {
                            return Err(Error::Divergence { term: String::new(), exponent: x + y + t });
                        }
                    }
                }
            }
        }
        if joint_pure {
            start = rp.max(a);
        }
    }

    let quad = match rule.restrict(start, top) {
        None => 0.0,
        Some(sub) => sub.integrate(|r| {
            let mut v1 = Complex64::new(0.0, 0.0);
            for l in &left {
                v1 += l.weight * l.expr.apply(r, &l.family.jet(r));
            }
            let mut v2 = Complex64::new(0.0, 0.0);
            for rr in &right {
                v2 += rr.weight * rr.expr.apply(r, &rr.family.jet(r));
            }
            let v = (v1 * v2.conj()).re;
            if v == 0.0 {
                0.0
            } else {
                v * r.powf(t)
            }
        })?,
    };
    Ok(closed + quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gaussian_rule() -> RadialRule {
        RadialRule::new(0.0, 14.0, 0.5, 16).unwrap().with_max_width(0.5).unwrap()
    }

    #[test]
    fn plateau_and_pure_power() {
        let chi = CutoffChi::default();
        let g = make_power_cutoff(0.0, chi);
        assert_eq!(g.jet(0.3).unwrap(), Jet { g: c(1.0), dg: c(0.0), d2g: c(0.0) });
        let g = make_power_cutoff(1.0, chi);
        let j = g.jet(0.25).unwrap();
        assert_eq!((j.g.re, j.dg.re, j.d2g.re), (0.25, 1.0, 0.0));
        let eps = 0.25;
        let g = make_power_cutoff((4.0 - 5.0) / 2.0 + eps / 2.0, chi);
        assert_eq!(g.leading_exponent(), Some(-0.375));
    }

    #[test]
    fn image_leading_skips_vanishing_symbols() {
        let gauss = Family::PolyExp { coeffs: vec![c(1.0)], beta: 0.5 };
        // g'' + g'/r kills the constant term; next power of a Gaussian is r²
        let lap2 = RadialExpr::new(-2.0, 0.0, 1.0, 1.0);
        assert_eq!(gauss.image_leading(&lap2), Some(0.0));
        assert_eq!(gauss.image_leading(&RadialExpr::new(0.0, 1.0, 0.0, 0.0)), Some(0.0));
        let pc = Family::PowerCutoff { alpha: 0.0, chi: CutoffChi::default() };
        assert_eq!(pc.image_leading(&lap2), None);
    }

    #[test]
    fn cutoff_endpoint_conditions() {
        let chi = CutoffChi::default();
        assert_eq!(chi.eval(0.0), (1.0, 0.0, 0.0));
        assert_eq!(chi.eval(1.0), (0.0, 0.0, 0.0));
        assert_eq!(chi.eval(3.0), (0.0, 0.0, 0.0));
        for i in 0..=200 {
            let r = i as f64 * 0.006;
            let (a, da, d2a) = chi.eval(r);
            let (b, db, d2b) = chi.mirrored(r);
            assert!((a + b - 1.0).abs() < 1e-15);
            assert!((da + db).abs() < 1e-12 && (d2a + d2b).abs() < 1e-9);
            assert!(a.is_finite() && da.is_finite() && d2a.is_finite());
            assert!((0.0..=1.0).contains(&a));
        }
        assert!(CutoffChi::new(1.0, 0.5).is_err());
    }

    #[test]
    fn polyexp_hand_derivatives() {
        let g = make_polyexp(vec![c(1.0)], 0.5).unwrap();
        let j = g.jet(0.0).unwrap();
        assert_eq!((j.g.re, j.dg.re, j.d2g.re), (1.0, 0.0, -1.0));
        let g = make_polyexp(vec![c(0.0), c(1.0)], 0.5).unwrap();
        let j = g.jet(0.0).unwrap();
        assert_eq!((j.g.re, j.dg.re, j.d2g.re), (0.0, 1.0, 0.0));
        assert!(make_polyexp(vec![c(0.0)], 1.0).unwrap().is_zero());
        assert!(matches!(make_polyexp(vec![], 1.0), Err(Error::Config(_))));
        assert!(make_polyexp(vec![c(1.0)], 0.0).is_err());
    }

    #[test]
    fn polyexp_support_bound() {
        let g = make_polyexp(vec![c(0.3), c(-1.0), c(0.5)], 0.5).unwrap();
        let r = g.support();
        assert!(g.value(r).norm() < 1e-300);
        assert!(g.value(0.8 * r).norm() > 0.0);
    }

    #[test]
    fn gaussian_derivative_moment() {
        let g = make_polyexp(vec![c(1.0)], 0.5).unwrap();
        let v = weighted_selfintegral(&g, 1, 0.0, &gaussian_rule()).unwrap();
        assert!((v - PI.sqrt() / 4.0).abs() < 1e-14, "{v}");
        assert_eq!(weighted_selfintegral(&SmoothProfile::zero(), 2, -3.0, &gaussian_rule()).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_on_plateau() {
        let chi = CutoffChi::default();
        let alpha = 0.7;
        let t = -0.4;
        let g = make_power_cutoff(alpha, chi);
        let rule = RadialRule::new(0.0, 0.5, 0.5, 16).unwrap();
        let v = weighted_selfintegral(&g, 0, t, &rule).unwrap();
        let e = 2.0 * alpha + t + 1.0;
        assert!((v - 0.5f64.powf(e) / e).abs() < 1e-15);
        // agreement with quadrature when the integrand is nonsingular
        let g = make_power_cutoff(2.0, chi);
        let a = weighted_selfintegral(&g, 1, 1.0, &rule).unwrap();
        let b = bilinear_quadrature(&g, &RadialExpr::d1(), &g, &RadialExpr::d1(), 1.0, &rule).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn divergence_reports_exponent() {
        let g = make_power_cutoff(-0.75, CutoffChi::default());
        let rule = RadialRule::new(0.0, 2.0, 0.5, 8).unwrap();
        match weighted_selfintegral(&g, 0, 0.0, &rule) {
            Err(Error::Divergence { exponent, .. }) => assert_eq!(exponent, -1.5),
            other => panic!("{other:?}"),
        }
        // the same integral is finite once truncated
        let rule = RadialRule::new(1e-6, 2.0, 0.5, 8).unwrap();
        assert!(weighted_selfintegral(&g, 0, 0.0, &rule).unwrap() > 0.0);
    }

    #[test]
    fn transformed_profile_derivatives() {
        let g = make_polyexp(vec![c(0.0), c(1.0), c(0.5)], 1.0).unwrap();
        let d = g.transformed(&RadialExpr::d1()).unwrap();
        let r = 0.9;
        let a = g.jet(r).unwrap();
        assert!((a.dg - d.value(r)).norm() < 1e-14);
        let dd = d.transformed(&RadialExpr::d1()).unwrap();
        assert!((a.d2g - dd.value(r)).norm() < 1e-14);
        assert!(matches!(d.jet(r), Err(Error::Capability(_))));
        assert!(matches!(d.transformed(&RadialExpr::d2()), Err(Error::Capability(_))));
        let dd = g.transformed(&RadialExpr::d2()).unwrap();
        assert!((dd.value(r) - a.d2g).norm() < 1e-14);
    }
}
