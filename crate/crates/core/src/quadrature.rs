//! Gauss-Legendre panel rules on `(a, R]` graded geometrically toward the
//! origin, plus product rules over annuli in two and three dimensions.
//!
//! Panel sums are combined by pairwise summation so results do not depend
//! on how the caller parallelises.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A composite Gauss-Legendre rule on `[a, R]`.
///
/// Nodes are stored panel by panel; each panel holds `order` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    breaks: Vec<f64>,
    order: usize,
    log_substitution: bool,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Default number of graded panels used when the inner truncation is zero.
pub const DEFAULT_PANELS_AT_ZERO: usize = 40;

impl RadialRule {
    /// Geometric grading `R ratio^j` toward `a`. With `a > 0` the panel count
    /// is `ceil(log_{1/ratio}(R/a))`; with `a = 0` it is
    /// [`DEFAULT_PANELS_AT_ZERO`] graded panels plus a first panel `[0, R ratio^P]`.
    pub fn new(a: f64, r_max: f64, ratio: f64, order: usize) -> Result<Self> {
        let panels = if a > 0.0 {
            ((r_max / a).ln() / (1.0 / ratio).ln()).ceil().max(1.0) as usize
        } else {
            DEFAULT_PANELS_AT_ZERO
        };
        Self::with_panels(a, r_max, ratio, order, panels)
    }

    /// Like [`RadialRule::new`] but with an explicit panel count. For `a > 0`
    /// panels reaching below `a` are merged into the innermost one.
    pub fn with_panels(a: f64, r_max: f64, ratio: f64, order: usize, panels: usize) -> Result<Self> {
        if !(a >= 0.0 && a < r_max && r_max.is_finite()) {
            return Err(Error::config(format!("need 0 <= a < R_max, got a = {a}, R_max = {r_max}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::config(format!("grading ratio must lie in (0, 1), got {ratio}")));
        }
        if order < 2 {
            return Err(Error::config(format!("panel order must be >= 2, got {order}")));
        }
        if panels == 0 {
            return Err(Error::config("panel count must be positive"));
        }
        let mut breaks = Vec::with_capacity(panels + 2);
        breaks.push(r_max);
        let mut b = r_max;
        for _ in 0..panels {
            b *= ratio;
            if b <= a {
                break;
            }
            breaks.push(b);
        }
        if a > 0.0 {
            // the last graded break may sit just above a; keep it unless the
            // sliver is degenerate
            if *breaks.last().unwrap() - a < 1e-14 * a {
                breaks.pop();
            }
        } else if breaks.len() < 2 {
            breaks.push(r_max * ratio);
        }
        breaks.push(a);
        breaks.reverse();
        Ok(Self::from_breaks(breaks, order, false))
    }

    /// A rule with explicit breakpoints (strictly increasing).
    pub fn from_breakpoints(breaks: Vec<f64>, order: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::config("need at least two breakpoints"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks[0] < 0.0 {
            return Err(Error::config("breakpoints must be nonnegative and strictly increasing"));
        }
        if order < 2 {
            return Err(Error::config(format!("panel order must be >= 2, got {order}")));
        }
        Ok(Self::from_breaks(breaks, order, false))
    }

    fn from_breaks(breaks: Vec<f64>, order: usize, log_substitution: bool) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for p in breaks.windows(2) {
            let (lo, hi) = (p[0], p[1]);
            if log_substitution {
                let (slo, shi) = (lo.ln(), hi.ln());
                let half = 0.5 * (shi - slo);
                let mid = 0.5 * (shi + slo);
                for (xi, wi) in x.iter().zip(&w) {
                    let r = (mid + half * xi).exp();
                    nodes.push(r);
                    weights.push(half * wi * r);
                }
            } else {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push(mid + half * xi);
                    weights.push(half * wi);
                }
            }
        }
        RadialRule { breaks, order, log_substitution, nodes, weights }
    }

    /// Integrate in `s = ln r` on every panel. Requires `a > 0`.
    pub fn log_substituted(self) -> Result<Self> {
        if self.breaks[0] <= 0.0 {
            return Err(Error::config("log substitution needs an inner truncation a > 0"));
        }
        Ok(Self::from_breaks(self.breaks, self.order, true))
    }

    /// Split every panel wider than `width` into equal pieces.
    pub fn with_max_width(self, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::config(format!("maximum panel width must be positive, got {width}")));
        }
        let mut breaks = vec![self.breaks[0]];
        for p in self.breaks.windows(2) {
            let pieces = ((p[1] - p[0]) / width).ceil().max(1.0) as usize;
            for j in 1..=pieces {
                let b = if j == pieces { p[1] } else { p[0] + (p[1] - p[0]) * j as f64 / pieces as f64 };
                breaks.push(b);
            }
        }
        Ok(Self::from_breaks(breaks, self.order, self.log_substitution))
    }

    /// The same rule clipped to `[lo, hi]`, with `lo` and `hi` inserted as
    /// breakpoints. Returns `None` when the intersection is empty.
    pub fn restrict(&self, lo: f64, hi: f64) -> Option<RadialRule> {
        let lo = lo.max(self.a());
        let hi = hi.min(self.r_max());
        if !(hi > lo) {
            return None;
        }
        let mut breaks = vec![lo];
        breaks.extend(self.breaks.iter().copied().filter(|&b| b > lo && b < hi));
        breaks.push(hi);
        let breaks = dedup_close(breaks);
        if breaks.len() < 2 {
            return None;
        }
        let log = self.log_substitution && lo > 0.0;
        Some(Self::from_breaks(breaks, self.order, log))
    }

    pub fn a(&self) -> f64 {
        self.breaks[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_log_substituted(&self) -> bool {
        self.log_substitution
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ φ(r) dr` over the rule's support. A non-finite value at any node
    /// is an evaluation error naming that node.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> Result<f64> {
        let mut panel_sums = Vec::with_capacity(self.panels());
        let mut buf = vec![0.0; self.order];
        for (nodes, weights) in self.nodes.chunks(self.order).zip(self.weights.chunks(self.order)) {
            for ((slot, &r), &w) in buf.iter_mut().zip(nodes).zip(weights) {
                let v = phi(r);
                if !v.is_finite() {
                    return Err(Error::Evaluation { node: r, what: format!("integrand value {v}") });
                }
                *slot = v * w;
            }
            panel_sums.push(pairwise_sum(&buf));
        }
        Ok(pairwise_sum(&panel_sums))
    }
}

fn dedup_close(mut breaks: Vec<f64>) -> Vec<f64> {
    breaks.dedup_by(|b, a| (*b - *a).abs() <= 1e-15 * a.abs().max(1e-300));
    breaks
}

/// `∫ φ(r) r^t dr` over the rule's support.
pub fn integrate_weighted<F: Fn(f64) -> f64>(phi: F, t: f64, rule: &RadialRule) -> Result<f64> {
    rule.integrate(|r| {
        let v = phi(r);
        if v == 0.0 {
            0.0
        } else {
            v * r.powf(t)
        }
    })
}

/// Product rule over the annulus `a <= |x| <= R` in two or three dimensions.
#[derive(Debug, Clone)]
pub struct AnnulusRule {
    dim: usize,
    radial: RadialRule,
    directions: Vec<Vec<f64>>,
    angular_weights: Vec<f64>,
}

impl AnnulusRule {
    /// `angular` is the trapezoid point count on S¹ (n = 2) or the number of
    /// azimuthal points on S² (n = 3); `polar` is the Gauss-Legendre order in
    /// `z = cos θ` and is ignored for n = 2.
    pub fn new(dim: usize, radial: RadialRule, angular: usize, polar: usize) -> Result<Self> {
        if angular < 1 {
            return Err(Error::config("need at least one angular node"));
        }
        let mut directions = Vec::new();
        let mut angular_weights = Vec::new();
        match dim {
            2 => {
                let w = 2.0 * PI / angular as f64;
                for j in 0..angular {
                    let th = 2.0 * PI * j as f64 / angular as f64;
                    directions.push(vec![th.cos(), th.sin()]);
                    angular_weights.push(w);
                }
            }
            3 => {
                if polar < 1 {
                    return Err(Error::config("need at least one polar node"));
                }
                let (z, wz) = gauss_legendre(polar);
                let wphi = 2.0 * PI / angular as f64;
                for (zi, wzi) in z.iter().zip(&wz) {
                    let s = (1.0 - zi * zi).sqrt();
                    for j in 0..angular {
                        let ph = 2.0 * PI * j as f64 / angular as f64;
                        directions.push(vec![s * ph.cos(), s * ph.sin(), *zi]);
                        angular_weights.push(wzi * wphi);
                    }
                }
            }
            _ => return Err(Error::config(format!("annulus rules exist for n = 2, 3 only, got n = {dim}"))),
        }
        Ok(AnnulusRule { dim, radial, directions, angular_weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radial(&self) -> &RadialRule {
        &self.radial
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.angular_weights
    }

    /// Angular quadrature of `F(ω)` over the unit sphere.
    pub fn integrate_sphere<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let vals: Vec<f64> = self.directions.iter().zip(&self.angular_weights).map(|(w, &q)| q * f(w)).collect();
        pairwise_sum(&vals)
    }
}

/// `∫ F(x) dx` over the annulus. Radial nodes are evaluated in parallel;
/// the reduction order is fixed.
pub fn integrate_annulus<F>(f: F, rule: &AnnulusRule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = rule.dim;
    let radial = &rule.radial;
    let shells: Vec<Result<f64>> = radial
        .nodes()
        .par_iter()
        .zip(radial.weights().par_iter())
        .map(|(&r, &w)| {
            let mut x = vec![0.0; n];
            let mut vals = Vec::with_capacity(rule.directions.len());
            for (omega, &q) in rule.directions.iter().zip(&rule.angular_weights) {
                for (xi, oi) in x.iter_mut().zip(omega) {
                    *xi = r * oi;
                }
                let v = f(&x);
                if !v.is_finite() {
                    return Err(Error::Evaluation { node: r, what: format!("integrand value {v} at x = {x:?}") });
                }
                vals.push(q * v);
            }
            Ok(w * r.powi(n as i32 - 1) * pairwise_sum(&vals))
        })
        .collect();
    let shells = shells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&shells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_nodes_integrate_monomials() {
        for order in [2, 5, 8, 16, 24] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * order {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "order {order} deg {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn r_squared_on_unit_interval() {
        let rule = RadialRule::new(0.0, 1.0, 0.5, 8).unwrap();
        assert!(rule.nodes().iter().all(|&r| r > 0.0 && r <= 1.0));
        let v = integrate_weighted(|r| r * r, 0.0, &rule).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_integrand() {
        let rule = RadialRule::new(0.0, 5.0, 0.5, 4).unwrap();
        assert_eq!(integrate_weighted(|_| 0.0, -3.5, &rule).unwrap(), 0.0);
    }

    #[test]
    fn exponential_moment() {
        let rule = RadialRule::new(0.0, 60.0, 0.5, 16).unwrap().with_max_width(1.0).unwrap();
        let v = integrate_weighted(|r| (-r).exp(), 1.0, &rule).unwrap();
        assert!((v - 1.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn panel_count_from_grading() {
        let rule = RadialRule::new(1e-8, 1e3, 0.5, 16).unwrap();
        let expected = (1e11f64).log2().ceil() as usize;
        assert_eq!(rule.panels(), expected);
        assert_eq!(rule.a(), 1e-8);
        assert_eq!(rule.r_max(), 1e3);
    }

    #[test]
    fn cubic_exact_with_order_two() {
        let rule = RadialRule::new(0.0, 3.0, 0.5, 2).unwrap();
        let v = rule.integrate(|r| r.powi(3)).unwrap();
        assert!((v - 81.0 / 4.0).abs() / (81.0 / 4.0) < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(RadialRule::new(2.0, 1.0, 0.5, 8), Err(Error::Config(_))));
        assert!(matches!(RadialRule::new(0.0, 1.0, 1.5, 8), Err(Error::Config(_))));
        assert!(matches!(RadialRule::new(0.0, 1.0, 0.5, 1), Err(Error::Config(_))));
        assert!(RadialRule::new(0.0, 1.0, 0.5, 8).unwrap().log_substituted().is_err());
    }

    #[test]
    fn nonfinite_value_names_node() {
        let rule = RadialRule::new(0.0, 1.0, 0.5, 4).unwrap();
        let err = rule.integrate(|r| if r > 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            Error::Evaluation { node, .. } => assert!(node > 0.5),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn log_substitution_handles_reciprocal() {
        let rule = RadialRule::new(1e-30, 1.0, 0.5, 12).unwrap().log_substituted().unwrap();
        let v = rule.integrate(|r| 1.0 / r).unwrap();
        assert!((v - 30.0 * std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn restrict_clips() {
        let rule = RadialRule::new(0.0, 4.0, 0.5, 8).unwrap();
        let sub = rule.restrict(0.3, 1.7).unwrap();
        assert_eq!(sub.a(), 0.3);
        assert_eq!(sub.r_max(), 1.7);
        let v = sub.integrate(|r| r).unwrap();
        assert!((v - 0.5 * (1.7f64 * 1.7 - 0.09)).abs() < 1e-14);
        assert!(rule.restrict(5.0, 6.0).is_none());
    }

    #[test]
    fn annulus_area_and_shell() {
        let radial = RadialRule::from_breakpoints(vec![1.0, 2.0], 8).unwrap();
        let disk = AnnulusRule::new(2, radial.clone(), 32, 0).unwrap();
        let area = integrate_annulus(|_| 1.0, &disk).unwrap();
        assert!((area - 3.0 * PI).abs() < 1e-12);
        let ball = AnnulusRule::new(3, radial, 16, 8).unwrap();
        let v = integrate_annulus(|x| 1.0 / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), &ball).unwrap();
        assert!((v - 4.0 * PI).abs() < 1e-12);
        assert_eq!(integrate_annulus(|_| 0.0, &ball).unwrap(), 0.0);
    }

    #[test]
    fn angular_weights_normalised() {
        let radial = RadialRule::from_breakpoints(vec![1.0, 2.0], 4).unwrap();
        let s1: f64 = AnnulusRule::new(2, radial.clone(), 32, 0).unwrap().angular_weights().iter().sum();
        let s2: f64 = AnnulusRule::new(3, radial, 32, 16).unwrap().angular_weights().iter().sum();
        assert!((s1 / (2.0 * PI) - 1.0).abs() < 1e-12);
        assert!((s2 / (4.0 * PI) - 1.0).abs() < 1e-12);
    }
}
