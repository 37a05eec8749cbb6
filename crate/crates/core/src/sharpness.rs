//! Limits along extremizing families, large-`k` scans and the
//! two-dimensional divergence demonstration.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::RadialExpr;
use crate::modes::{mu, DimensionConstants, ModeFunction, ModeOp};
use crate::profiles::{
    bilinear, bilinear_quadrature, make_power_cutoff, pure_integrand, weighted_selfintegral, CutoffChi, SmoothProfile,
};
use crate::quadrature::RadialRule;

/// `2^{-1}, …, 2^{-8}`.
pub fn default_eps() -> Vec<f64> {
    (1..=8).map(|j| 0.5f64.powi(j)).collect()
}

/// Value at `x = 0` of the polynomial through `(xs, ys)` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitScan {
    pub name: String,
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrapolated limit from the last three points.
    pub limit: f64,
    pub target: f64,
    /// `(limit - target)/|target|`, or `limit - target` when the target is 0.
    pub gap: f64,
}

/// Number of trailing points used for the extrapolation.
pub const EXTRAPOLATION_POINTS: usize = 3;

impl LimitScan {
    /// `xs` are the abscissae that tend to 0 along the scan (`ε` itself, or
    /// `1/μ_k` for a `k`-scan).
    pub fn new(name: &str, parameters: Vec<f64>, xs: &[f64], values: Vec<f64>, target: f64) -> Result<Self> {
        if parameters.len() < EXTRAPOLATION_POINTS {
            return Err(Error::config(format!("a scan needs at least {EXTRAPOLATION_POINTS} points")));
        }
        let inc = parameters.windows(2).all(|w| w[1] > w[0]);
        let dec = parameters.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::config("scan parameters must be strictly monotone"));
        }
        let k = xs.len() - EXTRAPOLATION_POINTS;
        let limit = extrapolate_to_zero(&xs[k..], &values[k..]);
        Ok(LimitScan { name: name.to_string(), parameters, values, limit, target, gap: relative_gap(limit, target) })
    }

    /// A scan of `num/den` where both blow up like `1/ε`: the limit is the
    /// ratio of the extrapolated `ε·num` and `ε·den`, which stay analytic
    /// when the quotient itself has a pole close to `ε = 0`.
    pub fn from_ratio(name: &str, eps: &[f64], num: &[f64], den: &[f64], target: f64) -> Result<Self> {
        let values = num.iter().zip(den).map(|(a, b)| a / b).collect();
        let mut scan = Self::new(name, eps.to_vec(), eps, values, target)?;
        let k = eps.len() - EXTRAPOLATION_POINTS;
        let scaled = |v: &[f64]| -> Vec<f64> { eps.iter().zip(v).map(|(e, x)| e * x).collect() };
        let ln = extrapolate_to_zero(&eps[k..], &scaled(num)[k..]);
        let ld = extrapolate_to_zero(&eps[k..], &scaled(den)[k..]);
        scan.limit = ln / ld;
        scan.gap = relative_gap(scan.limit, target);
        Ok(scan)
    }

    /// `value - target` per point.
    pub fn point_gaps(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.target).collect()
    }

    /// Every point strictly above (`above = true`) or below the target.
    pub fn strictly_on_side(&self, above: bool) -> bool {
        self.point_gaps().iter().all(|&g| if above { g > 0.0 } else { g < 0.0 })
    }

    pub fn monotone(&self) -> bool {
        let v = &self.values;
        v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
    }
}

fn relative_gap(v: f64, target: f64) -> f64 {
    if target == 0.0 {
        v - target
    } else {
        (v - target) / target.abs()
    }
}

/// Rule for cut-off power families: closed form on `[0, 1/2]`, fine panels
/// across the cutoff.
pub fn scan_rule() -> RadialRule {
    RadialRule::with_panels(0.0, 1.0, 0.5, 16, 4)
        .and_then(|r| r.with_max_width(0.02))
        .expect("static rule parameters are valid")
}

fn cut_power(alpha: f64) -> SmoothProfile {
    make_power_cutoff(alpha, CutoffChi::default())
}

fn check_eps(eps: &[f64]) -> Result<()> {
    match eps.iter().find(|e| !(**e > 0.0)) {
        Some(e) => Err(Error::Divergence { term: "epsilon".into(), exponent: e - 1.0 }),
        None => Ok(()),
    }
}

fn par_values(eps: &[f64], f: impl Fn(f64) -> Result<(f64, f64)> + Sync) -> Result<(Vec<f64>, Vec<f64>)> {
    let pts: Vec<Result<(f64, f64)>> = eps.par_iter().map(|&e| f(e)).collect();
    let mut a = Vec::with_capacity(eps.len());
    let mut b = Vec::with_capacity(eps.len());
    for p in pts {
        let (x, y) = p?;
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}

/// `ε‖Δ_r f_ε‖² → R_n²` and `ε‖f_ε/|x|²‖² → 1` for
/// `f_ε = |x|^{(4-n)/2 + ε/2} χ(|x|)`.
pub fn radial_rellich_sharpness(n: usize, eps: &[f64]) -> Result<(LimitScan, LimitScan)> {
    let d = DimensionConstants::new(n)?;
    check_eps(eps)?;
    let rule = scan_rule();
    let (lap, w) = par_values(eps, |e| {
        let f = ModeFunction::single(n, 0, 1, cut_power((4.0 - n as f64) / 2.0 + e / 2.0))?;
        let lap = f.norm_sq(&ModeOp::radial_laplacian(n), &rule).map_err(|x| x.in_term("|D_r f|^2"))?;
        let w = f.norm_sq(&ModeOp::weight(2.0), &rule).map_err(|x| x.in_term("|f/|x|^2|^2"))?;
        Ok((e * lap, e * w))
    })?;
    Ok((
        LimitScan::new(
            &format!("radial_rellich(n={n}): eps |D_r f|^2"),
            eps.to_vec(),
            eps,
            lap,
            d.rellich * d.rellich,
        )?,
        LimitScan::new(&format!("radial_rellich(n={n}): eps |f/|x|^2|^2"), eps.to_vec(), eps, w, 1.0)?,
    ))
}

/// `ε∫|g_ε″|² r^{t+4} → ((t+3)/2)²((t+1)/2)²` and `ε∫|g_ε|² r^t → 1` for
/// `g_ε = r^{-(t+1)/2 + ε/2} χ`.
pub fn rellich_1d_sharpness(t: f64, eps: &[f64]) -> Result<(LimitScan, LimitScan)> {
    if t == -3.0 || t == -1.0 {
        return Err(Error::constraint("rellich_1d needs t not in {-3, -1}"));
    }
    check_eps(eps)?;
    let rule = scan_rule();
    let (d2, w) = par_values(eps, |e| {
        let g = cut_power(-(t + 1.0) / 2.0 + e / 2.0);
        Ok((e * weighted_selfintegral(&g, 2, t + 4.0, &rule)?, e * weighted_selfintegral(&g, 0, t, &rule)?))
    })?;
    let target = ((t + 3.0) / 2.0).powi(2) * ((t + 1.0) / 2.0).powi(2);
    Ok((
        LimitScan::new(&format!("rellich_1d(t={t}): eps int |g''|^2 r^(t+4)"), eps.to_vec(), eps, d2, target)?,
        LimitScan::new(&format!("rellich_1d(t={t}): eps int |g|^2 r^t"), eps.to_vec(), eps, w, 1.0)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KScan {
    pub scan: LimitScan,
    /// `∫ |Δ_r g|² r^{n-1}`
    pub radial: f64,
    /// `Re ∫ Δ_r g · ḡ r^{n-3}`
    pub cross: f64,
    /// `∫ |g|² r^{n-5}`
    pub weighted: f64,
}

/// `‖ΣL_j²f‖² / ‖Δf‖²` for `f = g Y_k`, which equals
/// `μ² W / (μ² W - 2μ X + D)` with `W, X, D` the weighted, cross and
/// radial integrals of `g`. The limit as `k → ∞` is 1.
pub fn spherical_highdim_k_scan(n: usize, g: &SmoothProfile, ks: &[usize], rule: &RadialRule) -> Result<KScan> {
    if n < 4 {
        return Err(Error::constraint(format!("the k-scan is for n >= 4, got n = {n}")));
    }
    if ks.contains(&0) {
        return Err(Error::config("the k-scan starts at k = 1"));
    }
    let lr = ModeOp::radial_laplacian(n).at(0.0);
    let t = n as f64 - 1.0;
    let radial = bilinear(g, &lr, g, &lr, t, rule).map_err(|e| e.in_term("int |D_r g|^2 r^(n-1)"))?;
    let w2 = RadialExpr::power(-2.0);
    let cross = bilinear(g, &lr, g, &RadialExpr::IDENTITY, t - 2.0, rule)
        .map_err(|e| e.in_term("Re int D_r g conj(g) r^(n-3)"))?;
    let weighted = bilinear(g, &w2, g, &w2, t, rule).map_err(|e| e.in_term("int |g|^2 r^(n-5)"))?;
    if weighted == 0.0 {
        return Err(Error::Degenerate("int |g|^2 r^(n-5) vanishes".into()));
    }
    let mus: Vec<f64> = ks.iter().map(|&k| mu(k, n)).collect();
    let values: Vec<f64> =
        mus.iter().map(|m| m * m * weighted / (m * m * weighted - 2.0 * m * cross + radial)).collect();
    let xs: Vec<f64> = mus.iter().map(|m| 1.0 / m).collect();
    let params = ks.iter().map(|&k| k as f64).collect();
    let scan = LimitScan::new(&format!("spherical_k_scan(n={n})"), params, &xs, values, 1.0)?;
    Ok(KScan { scan, radial, cross, weighted })
}

/// The three-dimensional family `g = r^{√3} h_ε` with `h_ε` the weighted
/// Rellich near-extremizer at `t = 2√3 - 2`, i.e. `g = r^{1/2 + ε/2} χ`.
/// Returns the last-step quotient (target 25/16, from above) and the
/// induced spherical comparison quotient for `g Y_1` (target 64/25, from
/// below).
pub fn spherical_3d_sharpness(eps: &[f64]) -> Result<(LimitScan, LimitScan)> {
    check_eps(eps)?;
    let rule = scan_rule();
    let pts: Vec<Result<[f64; 4]>> = eps
        .par_iter()
        .map(|&e| {
            let g = cut_power(0.5 + e / 2.0);
            let num = weighted_selfintegral(&g, 2, 2.0, &rule)? + 6.0 * weighted_selfintegral(&g, 1, 0.0, &rule)?;
            let den = weighted_selfintegral(&g, 0, -2.0, &rule)?;
            let f = ModeFunction::single(3, 1, 1, g)?;
            let s = f.norm_sq(&ModeOp::spherical_part(), &rule)?;
            let lap = f.norm_sq(&ModeOp::laplacian(3), &rule)?;
            Ok([num, den, s, lap])
        })
        .collect();
    let pts = pts.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |j: usize| pts.iter().map(|p| p[j]).collect::<Vec<f64>>();
    Ok((
        LimitScan::from_ratio("laststep quotient", eps, &col(0), &col(1), 25.0 / 16.0)?,
        LimitScan::from_ratio("induced C3 quotient", eps, &col(2), &col(3), 64.0 / 25.0)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    LinearFit { slope, intercept, r_squared }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct N2FailureDemo {
    pub a: Vec<f64>,
    pub log_inv_a: Vec<f64>,
    /// `‖f/|x|²‖²` on `|x| > a`.
    pub weighted: Vec<f64>,
    /// `‖Δ_r f‖²` on `|x| > a`.
    pub radial: Vec<f64>,
    /// `‖Δf‖²` on `|x| > a`.
    pub laplacian: Vec<f64>,
    pub weighted_fit: LinearFit,
    pub radial_fit: LinearFit,
    /// `|‖Δf‖²_{a_{i+1}} - ‖Δf‖²_{a_i}|`
    pub increments: Vec<f64>,
    /// `ln(1/a)` of the deep truncation.
    pub deep_log_inv_a: f64,
    pub deep_weighted: f64,
    pub deep_radial: f64,
    pub deep_laplacian: f64,
    /// `‖f/|x|²‖² / ‖Δf‖²` at the deep truncation.
    pub rellich_quotient: f64,
    /// `‖Δ_r f‖² / ‖Δf‖²` at the deep truncation.
    pub radial_quotient: f64,
    /// Relative difference between the closed-form split and plain
    /// quadrature in `s = ln r` for `‖f/|x|²‖²` at the smallest `a`.
    pub log_substitution_check: f64,
}

/// Integral of `Σ c r^e` over `[a, b]` with `a = e^{-L}` possibly below
/// the floating-point range.
fn pure_integral_log(terms: &[(f64, f64)], log_inv_a: f64, b: f64) -> f64 {
    terms
        .iter()
        .map(|&(c, e)| {
            let x = e + 1.0;
            if x == 0.0 {
                c * (b.ln() + log_inv_a)
            } else {
                c * (b.powf(x) - (-x * log_inv_a).exp()) / x
            }
        })
        .sum()
}

/// Values on `|x| > e^{-L}` from the value on `|x| > a_ref`, extending the
/// closed form across the plateau.
fn deep_value(g: &SmoothProfile, e: &RadialExpr, t: f64, a_ref: f64, log_inv_a: f64, at_ref: f64) -> Result<f64> {
    let (rp, terms) = pure_integrand(g, e, g, e, t)?
        .ok_or_else(|| Error::capability("deep truncation needs a pure-power plateau"))?;
    if a_ref >= rp {
        return Err(Error::config("reference truncation must lie on the plateau"));
    }
    Ok(at_ref + pure_integral_log(&terms, log_inv_a, a_ref) - pure_integral_log(&terms, -a_ref.ln(), a_ref))
}

pub const DEFAULT_DEEP_LOG_INV_A: f64 = 2e4;

/// `a = 10^{-2}, 10^{-3}, …, 10^{-40}`.
pub fn default_truncations() -> Vec<f64> {
    (2..=40).map(|j| 10f64.powi(-j)).collect()
}

fn truncated_rule(a: f64) -> Result<RadialRule> {
    RadialRule::new(a, 1.0, 0.5, 16)?.with_max_width(0.02)
}

/// `f = r χ(r) Y_1` in two dimensions: the truncated weighted and radial
/// norms grow like `ln(1/a)` while `‖Δf‖²` stays fixed.
pub fn n2_failure_demo(a: &[f64], deep_log_inv_a: f64) -> Result<N2FailureDemo> {
    if a.len() < 2 || !a.windows(2).all(|w| w[1] < w[0]) || a.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::config("truncations must be positive and strictly decreasing"));
    }
    let g = cut_power(1.0);
    let f = ModeFunction::single(2, 1, 1, g.clone())?;
    let pts: Vec<Result<(f64, f64, f64)>> = a
        .par_iter()
        .map(|&ai| {
            let rule = truncated_rule(ai)?;
            Ok((
                f.norm_sq(&ModeOp::weight(2.0), &rule)?,
                f.norm_sq(&ModeOp::radial_laplacian(2), &rule)?,
                f.norm_sq(&ModeOp::laplacian(2), &rule)?,
            ))
        })
        .collect();
    let (mut weighted, mut radial, mut laplacian) = (vec![], vec![], vec![]);
    for p in pts {
        let (w, r, l) = p?;
        weighted.push(w);
        radial.push(r);
        laplacian.push(l);
    }
    let log_inv_a: Vec<f64> = a.iter().map(|x| -x.ln()).collect();
    let increments = laplacian.windows(2).map(|w| (w[1] - w[0]).abs()).collect();

    let last = a.len() - 1;
    let a_ref = a[last];
    let mu1 = mu(1, 2);
    let e_w = ModeOp::weight(2.0).at(mu1);
    let e_r = ModeOp::radial_laplacian(2).at(mu1);
    let e_l = ModeOp::laplacian(2).at(mu1);
    let deep_weighted = deep_value(&g, &e_w, 1.0, a_ref, deep_log_inv_a, weighted[last])?;
    let deep_radial = deep_value(&g, &e_r, 1.0, a_ref, deep_log_inv_a, radial[last])?;
    let deep_laplacian = deep_value(&g, &e_l, 1.0, a_ref, deep_log_inv_a, laplacian[last])?;

    let log_rule = truncated_rule(a_ref)?.log_substituted()?;
    let plain = bilinear_quadrature(&g, &e_w, &g, &e_w, 1.0, &log_rule)?;
    let log_substitution_check = (plain - weighted[last]).abs() / weighted[last].abs();

    Ok(N2FailureDemo {
        weighted_fit: linear_fit(&log_inv_a, &weighted),
        radial_fit: linear_fit(&log_inv_a, &radial),
        a: a.to_vec(),
        log_inv_a,
        weighted,
        radial,
        laplacian,
        increments,
        deep_log_inv_a,
        rellich_quotient: deep_weighted / deep_laplacian,
        radial_quotient: deep_radial / deep_laplacian,
        deep_weighted,
        deep_radial,
        deep_laplacian,
        log_substitution_check,
    })
}
