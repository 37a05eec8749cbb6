//! Independent check of mode-space norms in two and three dimensions.
//!
//! Functions are evaluated pointwise from explicit spherical harmonics, and
//! `Δf` and `L_j f` come from Cartesian central differences with one
//! Richardson step. Nothing here uses `μ_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::{ModeFunction, ModeOp};
use crate::quadrature::{pairwise_sum, AnnulusRule, RadialRule};

/// Highest harmonic degree with an explicit table.
pub const K_MAX: usize = 3;

/// Real orthonormal spherical harmonics on S¹ and S², `k <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicTable {
    dim: usize,
}

impl HarmonicTable {
    pub fn new(dim: usize) -> Result<Self> {
        match dim {
            2 | 3 => Ok(HarmonicTable { dim }),
            _ => Err(Error::capability(format!("no harmonic table for n = {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self, k: usize) -> usize {
        match (self.dim, k) {
            (_, 0) => 1,
            (2, _) => 2,
            _ => 2 * k + 1,
        }
    }

    /// `Y_{k,m}(ω)` for a unit vector `ω`, `m` starting at 1.
    pub fn eval(&self, k: usize, m: usize, w: &[f64]) -> Result<f64> {
        if k > K_MAX || m < 1 || m > self.count(k) {
            return Err(Error::capability(format!(
                "harmonic (k = {k}, m = {m}) is outside the n = {} table",
                self.dim
            )));
        }
        Ok(if self.dim == 2 { y2(k, m, w[0], w[1]) } else { y3(k, m, w[0], w[1], w[2]) })
    }
}

fn y2(k: usize, m: usize, x: f64, y: f64) -> f64 {
    if k == 0 {
        return 1.0 / (2.0 * PI).sqrt();
    }
    let z = Complex64::new(x, y).powu(k as u32);
    let v = if m == 1 { z.re } else { z.im };
    v / PI.sqrt()
}

fn y3(k: usize, m: usize, x: f64, y: f64, z: f64) -> f64 {
    let s = |c: f64| (c / PI).sqrt();
    match (k, m) {
        (0, _) => 0.5 * s(1.0),
        (1, 1) => s(3.0 / 4.0) * y,
        (1, 2) => s(3.0 / 4.0) * z,
        (1, 3) => s(3.0 / 4.0) * x,
        (2, 1) => 0.5 * s(15.0) * x * y,
        (2, 2) => 0.5 * s(15.0) * y * z,
        (2, 3) => 0.25 * s(5.0) * (3.0 * z * z - 1.0),
        (2, 4) => 0.5 * s(15.0) * x * z,
        (2, 5) => 0.25 * s(15.0) * (x * x - y * y),
        (3, 1) => 0.25 * s(35.0 / 2.0) * y * (3.0 * x * x - y * y),
        (3, 2) => 0.5 * s(105.0) * x * y * z,
        (3, 3) => 0.25 * s(21.0 / 2.0) * y * (5.0 * z * z - 1.0),
        (3, 4) => 0.25 * s(7.0) * z * (5.0 * z * z - 3.0),
        (3, 5) => 0.25 * s(21.0 / 2.0) * x * (5.0 * z * z - 1.0),
        (3, 6) => 0.25 * s(105.0) * z * (x * x - y * y),
        (3, 7) => 0.25 * s(35.0 / 2.0) * x * (x * x - 3.0 * y * y),
        _ => unreachable!(),
    }
}

fn check_table(f: &ModeFunction) -> Result<HarmonicTable> {
    let table = HarmonicTable::new(f.dim())?;
    if let Some(k) = f.max_degree() {
        if k > K_MAX {
            return Err(Error::capability(format!("mode degree {k} exceeds the oracle table (k <= {K_MAX})")));
        }
    }
    Ok(table)
}

/// `f(x)` and the analytic `∂_r f(x)`.
pub fn evaluate_point(f: &ModeFunction, x: &[f64]) -> Result<(Complex64, Complex64)> {
    let table = check_table(f)?;
    point_value(f, &table, x)
}

fn point_value(f: &ModeFunction, table: &HarmonicTable, x: &[f64]) -> Result<(Complex64, Complex64)> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::Evaluation { node: r, what: "point evaluation at the origin".into() });
    }
    let w: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut val = Complex64::new(0.0, 0.0);
    let mut dr = Complex64::new(0.0, 0.0);
    for (i, g) in f.modes() {
        let y = table.eval(i.k, i.m, &w)?;
        let j = g.jet(r)?;
        val += j.g * y;
        dr += j.dg * y;
    }
    Ok((val, dr))
}

fn value_only(f: &ModeFunction, table: &HarmonicTable, x: &[f64]) -> Complex64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut val = Complex64::new(0.0, 0.0);
    for (i, g) in f.modes() {
        val += g.value(r) * table.eval(i.k, i.m, &w).unwrap_or(0.0);
    }
    val
}

/// `Δ_r f` from the mode data (analytic).
fn radial_laplacian_point(f: &ModeFunction, table: &HarmonicTable, x: &[f64]) -> Result<Complex64> {
    let n = f.dim() as f64;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut out = Complex64::new(0.0, 0.0);
    for (i, g) in f.modes() {
        let j = g.jet(r)?;
        out += (j.d2g + j.dg * ((n - 1.0) / r)) * table.eval(i.k, i.m, &w)?;
    }
    Ok(out)
}

/// Finite-difference settings: the step at `x` is `eta · min(|x|, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdStep {
    pub eta: f64,
}

impl Default for FdStep {
    fn default() -> Self {
        FdStep { eta: 5e-3 }
    }
}

impl FdStep {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::config(format!("relative finite-difference step must lie in (0, 0.5), got {eta}")));
        }
        Ok(FdStep { eta })
    }

    fn at(&self, r: f64) -> f64 {
        self.eta * r.min(1.0)
    }
}

/// Pointwise Cartesian derivatives with one Richardson step.
struct Stencil<'a> {
    f: &'a ModeFunction,
    table: HarmonicTable,
}

impl Stencil<'_> {
    fn laplacian_h(&self, x: &[f64], f0: Complex64, h: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut y = x.to_vec();
        for j in 0..x.len() {
            y[j] = x[j] + h;
            let fp = value_only(self.f, &self.table, &y);
            y[j] = x[j] - h;
            let fm = value_only(self.f, &self.table, &y);
            y[j] = x[j];
            acc += fp + fm - f0 * 2.0;
        }
        acc / (h * h)
    }

    fn laplacian(&self, x: &[f64], f0: Complex64, h: f64) -> Complex64 {
        (self.laplacian_h(x, f0, 0.5 * h) * 4.0 - self.laplacian_h(x, f0, h)) / 3.0
    }

    fn partial(&self, x: &[f64], j: usize, h: f64) -> Complex64 {
        let d = |h: f64| {
            let mut y = x.to_vec();
            y[j] = x[j] + h;
            let fp = value_only(self.f, &self.table, &y);
            y[j] = x[j] - h;
            let fm = value_only(self.f, &self.table, &y);
            (fp - fm) / (2.0 * h)
        };
        (d(0.5 * h) * 4.0 - d(h)) / 3.0
    }
}

/// Oracle values of the three full-space quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleNorms {
    /// `‖Δf‖²`
    pub laplacian: f64,
    /// `‖L_j f/|x|‖²` for each `j`
    pub tangential: Vec<f64>,
    /// `‖Σ_j L_j² f‖²`, with `Σ L_j² f = Δf - Δ_r f` pointwise
    pub spherical: f64,
}

impl OracleNorms {
    pub fn tangential_sum(&self) -> f64 {
        self.tangential.iter().sum()
    }
}

/// All oracle norms on one annulus rule in a single sweep.
pub fn oracle_norms(f: &ModeFunction, step: FdStep, rule: &AnnulusRule) -> Result<OracleNorms> {
    let table = check_table(f)?;
    if rule.dim() != f.dim() {
        return Err(Error::config("annulus rule and function have different dimensions"));
    }
    let n = f.dim();
    let st = Stencil { f, table };
    let radial = rule.radial();
    let width = n + 2;
    let shells: Vec<Result<Vec<f64>>> = radial
        .nodes()
        .par_iter()
        .zip(radial.weights().par_iter())
        .map(|(&r, &wr)| {
            let h = step.at(r);
            let mut parts: Vec<Vec<f64>> = vec![Vec::with_capacity(rule.directions().len()); width];
            let mut x = vec![0.0; n];
            for (omega, &q) in rule.directions().iter().zip(rule.angular_weights()) {
                for (xi, oi) in x.iter_mut().zip(omega) {
                    *xi = r * oi;
                }
                let (f0, dr) = point_value(f, &table, &x)?;
                let lap = st.laplacian(&x, f0, h);
                let lap_r = radial_laplacian_point(f, &table, &x)?;
                let sph = lap - lap_r;
                if !(lap.re.is_finite() && lap.im.is_finite()) {
                    return Err(Error::Evaluation { node: r, what: "non-finite finite-difference Laplacian".into() });
                }
                parts[0].push(q * lap.norm_sqr());
                parts[1].push(q * sph.norm_sqr());
                for j in 0..n {
                    let lj = st.partial(&x, j, h) - dr * omega[j];
                    parts[2 + j].push(q * lj.norm_sqr() / (r * r));
                }
            }
            let jac = wr * r.powi(n as i32 - 1);
            Ok(parts.iter().map(|p| jac * pairwise_sum(p)).collect())
        })
        .collect();
    let shells = shells.into_iter().collect::<Result<Vec<_>>>()?;
    let column = |c: usize| pairwise_sum(&shells.iter().map(|s| s[c]).collect::<Vec<_>>());
    Ok(OracleNorms { laplacian: column(0), spherical: column(1), tangential: (0..n).map(|j| column(2 + j)).collect() })
}

/// `‖Δf‖²` over the annulus from finite differences.
pub fn fd_laplacian_norm_sq(f: &ModeFunction, step: FdStep, rule: &AnnulusRule) -> Result<f64> {
    Ok(oracle_norms(f, step, rule)?.laplacian)
}

/// `‖L_j f/|x|‖²`, `j = 1..n`.
#[allow(non_snake_case)]
pub fn oracle_Lj_norms(f: &ModeFunction, step: FdStep, rule: &AnnulusRule) -> Result<Vec<f64>> {
    Ok(oracle_norms(f, step, rule)?.tangential)
}

/// Angular projection `∫ f(rω) Y_{k,m}(ω) dω`.
pub fn project_mode(f: &ModeFunction, k: usize, m: usize, r: f64, rule: &AnnulusRule) -> Result<Complex64> {
    let table = check_table(f)?;
    let mut re = Vec::new();
    let mut im = Vec::new();
    for (w, &q) in rule.directions().iter().zip(rule.angular_weights()) {
        let x: Vec<f64> = w.iter().map(|v| v * r).collect();
        let (v, _) = point_value(f, &table, &x)?;
        let y = table.eval(k, m, w)?;
        re.push(q * v.re * y);
        im.push(q * v.im * y);
    }
    Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)))
}

/// Choose `[a, b]` so that each of `‖Δf‖²`, `Σ‖L_j f/|x|‖²` and
/// `‖ΣL_j² f‖²` keeps at least `1 - missing` of its mode-space mass.
pub fn choose_annulus(f: &ModeFunction, base: &RadialRule, missing: f64) -> Result<(f64, f64)> {
    let n = f.dim();
    let ops = [ModeOp::laplacian(n), ModeOp::spherical_part()];
    let full = mode_masses(f, &ops, base)?;
    let b = base.r_max();
    let mut a = 1e-2;
    while a > 1e-30 {
        let trunc = RadialRule::new(a, b, 0.5, base.order())?;
        let part = mode_masses(f, &ops, &trunc)?;
        if full.iter().zip(&part).all(|(t, p)| (t - p).abs() <= missing * t.abs().max(1e-300)) {
            return Ok((a, b));
        }
        a *= 0.1;
    }
    Err(Error::config("could not find an annulus holding the requested mass"))
}

fn mode_masses(f: &ModeFunction, ops: &[ModeOp; 2], rule: &RadialRule) -> Result<[f64; 3]> {
    Ok([f.norm_sq(&ops[0], rule)?, f.norm_sq(&ops[1], rule)?, f.pairing(&(-ops[1]), &ModeOp::weight(2.0), rule)?])
}

/// Default oracle annulus rule: graded radial panels on `[a, b]` and angular
/// rules exact for the degree-6 products that appear with `k <= 3`.
pub fn default_annulus(dim: usize, a: f64, b: f64) -> Result<AnnulusRule> {
    let radial = RadialRule::new(a, b, 0.5, 12)?.with_max_width(0.5)?;
    match dim {
        2 => AnnulusRule::new(2, radial, 16, 0),
        3 => AnnulusRule::new(3, radial, 16, 8),
        _ => Err(Error::capability(format!("no annulus rule for n = {dim}"))),
    }
}

/// One quantity computed both ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub n: usize,
    pub modes: usize,
    pub quantity: String,
    pub mode_space: f64,
    pub oracle: f64,
    pub rel_diff: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `‖Δf‖²`, `Σ_j‖L_j f/|x|‖²` and `‖ΣL_j²f‖²` from mode space (on `base`)
/// against the oracle on an annulus chosen by [`choose_annulus`]. Differences
/// are relative to `max(|value|, ‖Δf‖²)`.
pub fn compare_with_mode_space(
    f: &ModeFunction,
    base: &RadialRule,
    step: FdStep,
    missing: f64,
    tol: f64,
) -> Result<Vec<OracleComparison>> {
    let n = f.dim();
    let full = mode_masses(f, &[ModeOp::laplacian(n), ModeOp::spherical_part()], base)?;
    let (a, b) = choose_annulus(f, base, missing)?;
    let o = oracle_norms(f, step, &default_annulus(n, a, b)?)?;
    let rows = [
        ("|D f|^2", full[0], o.laplacian),
        ("sum |L_j f/|x||^2", full[2], o.tangential_sum()),
        ("|sum L_j^2 f|^2", full[1], o.spherical),
    ];
    Ok(rows
        .iter()
        .map(|&(q, m, v)| {
            // a quantity that vanishes (radial f) is measured against |Δf|²
            let rel = (m - v).abs() / m.abs().max(full[0]).max(1e-300);
            OracleComparison {
                n,
                modes: f.len(),
                quantity: q.into(),
                mode_space: m,
                oracle: v,
                rel_diff: rel,
                tol,
                pass: rel <= tol,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_polyexp;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gram_matrix_is_identity() {
        for dim in [2, 3] {
            let table = HarmonicTable::new(dim).unwrap();
            let rule = default_annulus(dim, 1.0, 2.0).unwrap();
            let idx: Vec<(usize, usize)> =
                (0..=K_MAX).flat_map(|k| (1..=table.count(k)).map(move |m| (k, m))).collect();
            for &(k1, m1) in &idx {
                for &(k2, m2) in &idx {
                    let v = rule.integrate_sphere(|w| table.eval(k1, m1, w).unwrap() * table.eval(k2, m2, w).unwrap());
                    let e = if (k1, m1) == (k2, m2) { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-10, "n={dim} ({k1},{m1})x({k2},{m2}) = {v}");
                }
            }
        }
    }

    #[test]
    fn radial_value_ignores_direction() {
        let f = ModeFunction::single(3, 0, 1, make_polyexp(vec![c(1.0), c(0.5)], 1.0).unwrap()).unwrap();
        let want = evaluate_point(&f, &[0.7, 0.0, 0.0]).unwrap().0;
        for w in [[0.0f64, 0.7, 0.0], [0.0, 0.0, -0.7], [0.4, -0.4, 0.40620192]] {
            let r = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            let x: Vec<f64> = w.iter().map(|v| v * 0.7 / r).collect();
            assert!((evaluate_point(&f, &x).unwrap().0 - want).norm() < 1e-14);
        }
    }

    #[test]
    fn degree_one_is_odd() {
        let f = ModeFunction::single(2, 1, 2, make_polyexp(vec![c(0.0), c(0.0), c(1.0)], 1.0).unwrap()).unwrap();
        let x = [0.3, -0.5];
        let (a, _) = evaluate_point(&f, &x).unwrap();
        let (b, _) = evaluate_point(&f, &[-0.3, 0.5]).unwrap();
        assert!((a + b).norm() < 1e-15 && a.norm() > 0.0);
    }

    #[test]
    fn out_of_table_mode() {
        let f = ModeFunction::single(3, 4, 1, make_polyexp(vec![c(1.0)], 1.0).unwrap()).unwrap();
        assert!(matches!(evaluate_point(&f, &[1.0, 0.0, 0.0]), Err(Error::Capability(_))));
    }

    #[test]
    fn r_squared_laplacian_on_annulus() {
        // g = r² on the plateau of the cutoff: Δf = 6 in n = 3
        let g = crate::profiles::make_power_cutoff(2.0, crate::profiles::CutoffChi::new(5.0, 6.0).unwrap());
        let f = ModeFunction::single(3, 0, 1, g.scaled(c((4.0 * PI).sqrt()))).unwrap();
        let rule = default_annulus(3, 0.5, 2.0).unwrap();
        let v = fd_laplacian_norm_sq(&f, FdStep::default(), &rule).unwrap();
        let want = 36.0 * (4.0 * PI / 3.0) * (8.0 - 0.125);
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        let zero = ModeFunction::new(3).unwrap();
        assert_eq!(fd_laplacian_norm_sq(&zero, FdStep::default(), &rule).unwrap(), 0.0);
    }

    #[test]
    fn projection_recovers_profiles() {
        let g1 = make_polyexp(vec![c(0.0), c(1.0)], 0.7).unwrap();
        let g2 = make_polyexp(vec![Complex64::new(0.2, -0.4), c(0.0), c(0.3)], 1.1).unwrap();
        let mut f = ModeFunction::single(3, 2, 4, g1.clone()).unwrap();
        f.insert(crate::modes::ModeIndex::new(3, 6), g2.clone()).unwrap();
        let rule = default_annulus(3, 0.5, 2.0).unwrap();
        for r in [0.2, 0.9, 1.7] {
            assert!((project_mode(&f, 2, 4, r, &rule).unwrap() - g1.value(r)).norm() < 1e-8);
            assert!((project_mode(&f, 3, 6, r, &rule).unwrap() - g2.value(r)).norm() < 1e-8);
            assert!(project_mode(&f, 1, 1, r, &rule).unwrap().norm() < 1e-8);
        }
    }
}
