//! Rayleigh-Ritz upper bounds for the one-dimensional constants.
//!
//! Forms `∫ b_i^{(d)} b_j^{(d)} r^t dr` are assembled over clamped cubic
//! B-splines on a geometric grid and the smallest generalized eigenvalue is
//! found by shifted inverse iteration with a banded Cholesky factorization.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const DEGREE: usize = 3;

/// Cubic B-splines on `a = x_0 < … < x_m = R` with `x_i = a (R/a)^{i/m}`,
/// restricted to those vanishing with their slope at both ends. There are
/// `m - 1` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    breaks: Vec<f64>,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn geometric(a: f64, r_max: f64, intervals: usize) -> Result<Self> {
        if !(a > 0.0 && r_max > a) {
            return Err(Error::config(format!("need 0 < a < R, got [{a}, {r_max}]")));
        }
        if intervals < 4 {
            return Err(Error::config("a clamped cubic basis needs at least 4 intervals"));
        }
        let ratio = r_max / a;
        let mut breaks: Vec<f64> = (0..=intervals).map(|i| a * ratio.powf(i as f64 / intervals as f64)).collect();
        breaks[intervals] = r_max;
        let mut knots = vec![a; DEGREE];
        knots.extend_from_slice(&breaks);
        knots.extend(std::iter::repeat_n(r_max, DEGREE));
        Ok(SplineBasis { breaks, knots })
    }

    pub fn len(&self) -> usize {
        self.intervals() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// Values and first two derivatives of the four full-basis functions
    /// alive on interval `i` at `u`; full index `i + j` for column `j`.
    fn local(&self, i: usize, u: f64) -> [[f64; 4]; 3] {
        basis_ders(&self.knots, i + DEGREE, u)
    }

    /// `(value, first, second)` derivative of basis function `j` at `u`.
    pub fn eval(&self, j: usize, u: f64) -> [f64; 3] {
        let full = j + 2;
        let i = match self.breaks.partition_point(|&x| x <= u) {
            0 => return [0.0; 3],
            p if p > self.intervals() => {
                if u == self.breaks[self.intervals()] {
                    self.intervals() - 1
                } else {
                    return [0.0; 3];
                }
            }
            p => p - 1,
        };
        if full < i || full > i + DEGREE {
            return [0.0; 3];
        }
        let d = self.local(i, u);
        [d[0][full - i], d[1][full - i], d[2][full - i]]
    }
}

/// Nonzero B-spline basis functions and their first two derivatives at
/// `u` in knot span `span`.
fn basis_ders(knots: &[f64], span: usize, u: f64) -> [[f64; 4]; 3] {
    const P: usize = DEGREE;
    let mut ndu = [[0.0; P + 1]; P + 1];
    let mut left = [0.0; P + 1];
    let mut right = [0.0; P + 1];
    ndu[0][0] = 1.0;
    for j in 1..=P {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = [[0.0; P + 1]; 3];
    for j in 0..=P {
        ders[0][j] = ndu[j][P];
    }
    let mut a = [[0.0; P + 1]; 2];
    for r in 0..=P {
        let (mut s1, mut s2) = (0, 1);
        a[0][0] = 1.0;
        for k in 1..=2 {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = P - k;
            if rk >= 0 {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { P - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut f = P as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= f;
        }
        f *= (P - k) as f64;
    }
    ders
}

/// Symmetric band matrix, lower band stored row by row:
/// `data[i * (bw + 1) + k] = M[i][i - k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBand { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// From a dense symmetric matrix (only the lower triangle is read).
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n, n.saturating_sub(1));
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry outside the band");
        self.data[i * (self.bw + 1) + (i - j)] = v;
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let m = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += m * x[j];
                if j != i {
                    y[j] += m * x[i];
                }
            }
        }
        y
    }

    /// `self + c·other`, same size.
    pub fn axpy(&self, c: f64, other: &SymBand) -> SymBand {
        let bw = self.bw.max(other.bw);
        let mut out = SymBand::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                out.set(i, j, self.get(i, j) + c * other.get(i, j));
            }
        }
        out
    }

    fn scaled_sym(&self, d: &[f64]) -> SymBand {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                out.set(i, j, self.get(i, j) * d[i] * d[j]);
            }
        }
        out
    }

    /// Banded Cholesky `M = L Lᵀ`; `None` if `M` is not positive definite.
    pub fn cholesky(&self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.clone();
        for j in 0..n {
            let mut d = l.get(j, j);
            for k in j.saturating_sub(bw)..j {
                d -= l.get(j, k).powi(2);
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in j + 1..(j + bw + 1).min(n) {
                let mut s = l.get(i, j);
                for k in i.saturating_sub(bw)..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Some(BandCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.l.n, self.l.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedForm {
    pub d: usize,
    pub t: f64,
    pub order: usize,
    pub matrix: SymBand,
}

/// Gauss-Legendre order per grid interval used by [`assemble_form`].
pub const DEFAULT_FORM_ORDER: usize = 12;

/// `M_ij = ∫ b_i^{(d)} b_j^{(d)} r^t dr`, by Gauss-Legendre of the given
/// order on every grid interval.
pub fn assemble_form(basis: &SplineBasis, d: usize, t: f64, order: usize) -> Result<DiscretizedForm> {
    if d > 2 {
        return Err(Error::capability(format!("derivative order {d} exceeds the cubic basis (at most 2)")));
    }
    let (x, w) = gauss_legendre(order);
    let m = basis.intervals();
    // local 4×4 blocks per interval, summed in order afterwards
    let blocks: Vec<[[f64; 4]; 4]> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = (basis.breaks[i], basis.breaks[i + 1]);
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut blk = [[0.0; 4]; 4];
            for (xq, wq) in x.iter().zip(&w) {
                let u = c + h * xq;
                let vals = basis.local(i, u)[d];
                let wt = wq * h * u.powf(t);
                for p in 0..4 {
                    for q in 0..=p {
                        blk[p][q] += wt * vals[p] * vals[q];
                    }
                }
            }
            blk
        })
        .collect();
    let n = basis.len();
    let mut mat = SymBand::zeros(n, DEGREE);
    for (i, blk) in blocks.iter().enumerate() {
        for p in 0..4 {
            for q in 0..=p {
                // full indices i+p, i+q; kept functions are full 2..=m
                let (fp, fq) = (i + p, i + q);
                if fp < 2 || fq < 2 || fp > m || fq > m {
                    continue;
                }
                mat.add(fp - 2, fq - 2, blk[p][q]);
            }
        }
    }
    if d == 0 && mat.cholesky().is_none() {
        return Err(Error::Assembly("mass matrix is not positive definite".into()));
    }
    Ok(DiscretizedForm { d, t, order, matrix: mat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const MAX_ITERATIONS: usize = 200_000;
pub const RESIDUAL_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest `λ` of `A v = λ B v` by inverse iteration on `A - σB`, where
/// `σ` must lie below the smallest eigenvalue. The start vector is all
/// ones. Both matrices are symmetrically scaled by `diag(B)^{-1/2}` first.
pub fn min_generalized_rayleigh(a: &SymBand, b: &SymBand, shift: f64) -> Result<Eigenpair> {
    if a.n() != b.n() || a.n() == 0 {
        return Err(Error::config("matrix sizes differ or are zero"));
    }
    let n = a.n();
    let mut s = vec![0.0; n];
    for (i, si) in s.iter_mut().enumerate() {
        let bii = b.get(i, i);
        if !(bii > 0.0) {
            return Err(Error::Assembly(format!("B has nonpositive diagonal entry {bii} at {i}")));
        }
        *si = 1.0 / bii.sqrt();
    }
    let a = a.scaled_sym(&s);
    let b = b.scaled_sym(&s);
    if b.cholesky().is_none() {
        return Err(Error::Assembly("B is not positive definite".into()));
    }
    let shifted = a.axpy(-shift, &b);
    let fac = shifted.cholesky().ok_or(Error::Solver { iterations: 0, residual: f64::NAN })?;
    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let bv = b.mul_vec(&v);
        let mut w = fac.solve(&bv);
        let bn = dot(&w, &b.mul_vec(&w)).sqrt();
        w.iter_mut().for_each(|x| *x /= bn);
        v = w;
        let av = a.mul_vec(&v);
        let bv = b.mul_vec(&v);
        let lambda = dot(&v, &av) / dot(&v, &bv);
        let r: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x - lambda * y).collect();
        residual = norm(&r) / norm(&av);
        if residual <= RESIDUAL_TOL {
            let vector = v.iter().zip(&s).map(|(x, si)| x * si).collect();
            return Ok(Eigenpair { lambda, vector, iterations: it, residual });
        }
    }
    Err(Error::Solver { iterations: MAX_ITERATIONS, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum BestConstTarget {
    /// `((t+1)/2)²`
    Hardy1d { t: f64 },
    /// `((t+3)/2)²((t+1)/2)²`
    Rellich1d { t: f64 },
    /// `C̃(6) = 25/16`
    Laststep,
    /// `C̃(R) = (1/4)(1/4 + R)` for `∫|g''|² r² + R∫|g'|² ≥ C̃ ∫|g|² r^{-2}`
    AbstractTilde { r: f64 },
    /// `64/25 = 4 / C̃(6)`, approached from below
    InducedC3,
}

impl BestConstTarget {
    pub fn target(&self) -> f64 {
        match *self {
            BestConstTarget::Hardy1d { t } => ((t + 1.0) / 2.0).powi(2),
            BestConstTarget::Rellich1d { t } => ((t + 3.0) / 2.0).powi(2) * ((t + 1.0) / 2.0).powi(2),
            BestConstTarget::Laststep => 25.0 / 16.0,
            BestConstTarget::AbstractTilde { r } => 0.25 * (0.25 + r),
            BestConstTarget::InducedC3 => 64.0 / 25.0,
        }
    }

    /// `true` when estimates approach the target from above.
    pub fn from_above(&self) -> bool {
        !matches!(self, BestConstTarget::InducedC3)
    }

    pub fn name(&self) -> String {
        match self {
            BestConstTarget::Hardy1d { t } => format!("hardy_1d(t={t})"),
            BestConstTarget::Rellich1d { t } => format!("rellich_1d(t={t})"),
            BestConstTarget::Laststep => "laststep".into(),
            BestConstTarget::AbstractTilde { r } => format!("abstract_tilde(R={r})"),
            BestConstTarget::InducedC3 => "induced_c3".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BestConstTarget::Hardy1d { t: 1.0 } => Err(Error::constraint("hardy_1d needs t != 1")),
            BestConstTarget::Rellich1d { t } if t == -1.0 || t == -3.0 => {
                Err(Error::constraint("rellich_1d needs t not in {-3, -1}"))
            }
            BestConstTarget::AbstractTilde { r } if !(r > 0.0) => Err(Error::constraint("abstract_tilde needs R > 0")),
            _ => Ok(()),
        }
    }
}

/// Rayleigh-Ritz estimate for one basis. `laststep` and `C̃(R)` go through
/// `g = r^ν h` with `ν = √(R/2)`, which turns them into the weighted
/// Rellich quotient at `t = 2ν - 2` plus `R(2 - R)/4`.
pub fn estimate(target: BestConstTarget, basis: &SplineBasis) -> Result<f64> {
    target.validate()?;
    let lower = |v: f64| v - 0.1 * v.abs() - 1e-3;
    let ritz = |ad: usize, at: f64, bt: f64, bound: f64| -> Result<f64> {
        let a = assemble_form(basis, ad, at, DEFAULT_FORM_ORDER)?;
        let b = assemble_form(basis, 0, bt, DEFAULT_FORM_ORDER)?;
        Ok(min_generalized_rayleigh(&a.matrix, &b.matrix, lower(bound))?.lambda)
    };
    match target {
        BestConstTarget::Hardy1d { t } => ritz(1, t + 2.0, t, target.target()),
        BestConstTarget::Rellich1d { t } => ritz(2, t + 4.0, t, target.target()),
        BestConstTarget::Laststep => estimate(BestConstTarget::AbstractTilde { r: 6.0 }, basis),
        BestConstTarget::AbstractTilde { r } => {
            let nu = (r / 2.0).sqrt();
            let inner = BestConstTarget::Rellich1d { t: 2.0 * nu - 2.0 };
            Ok(estimate(inner, basis)? + 0.25 * r * (2.0 - r))
        }
        BestConstTarget::InducedC3 => Ok(4.0 / estimate(BestConstTarget::Laststep, basis)?),
    }
}

/// Same quotient assembled directly in `g`, without the substitution.
pub fn estimate_direct_tilde(r: f64, basis: &SplineBasis) -> Result<f64> {
    let d2 = assemble_form(basis, 2, 2.0, DEFAULT_FORM_ORDER)?;
    let d1 = assemble_form(basis, 1, 0.0, DEFAULT_FORM_ORDER)?;
    let b = assemble_form(basis, 0, -2.0, DEFAULT_FORM_ORDER)?;
    let a = d2.matrix.axpy(r, &d1.matrix);
    let t = 0.25 * (0.25 + r);
    Ok(min_generalized_rayleigh(&a, &b.matrix, 0.9 * t)?.lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub basis_size: usize,
    pub a: f64,
    pub r_max: f64,
    pub estimate: f64,
    pub target: f64,
    /// `(estimate - target)/target`
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub target_id: String,
    pub target: f64,
    pub from_above: bool,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn final_row(&self) -> &ConvergenceRow {
        self.rows.last().expect("tables are never empty")
    }

    /// Nested bases give estimates that never move away from the target,
    /// up to `1e-12` relative.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            let slack = 1e-12 * w[0].estimate.abs();
            if self.from_above {
                w[1].estimate <= w[0].estimate + slack
            } else {
                w[1].estimate >= w[0].estimate - slack
            }
        })
    }

    /// Every estimate lies strictly on the non-attainment side.
    pub fn strict(&self) -> bool {
        self.rows.iter().all(|r| if self.from_above { r.estimate > r.target } else { r.estimate < r.target })
    }
}

/// Interval counts of the default sweep; each grid refines the previous
/// one, so the spline spaces are nested. Basis sizes are one less.
pub const DEFAULT_SWEEP: [usize; 5] = [25, 50, 100, 200, 400];

pub fn best_constant_estimate(
    target: BestConstTarget,
    a: f64,
    r_max: f64,
    intervals: &[usize],
) -> Result<ConvergenceTable> {
    target.validate()?;
    if intervals.is_empty() {
        return Err(Error::config("empty basis sweep"));
    }
    let rows: Vec<Result<ConvergenceRow>> = intervals
        .par_iter()
        .map(|&m| {
            let basis = SplineBasis::geometric(a, r_max, m)?;
            let e = estimate(target, &basis)?;
            let t = target.target();
            Ok(ConvergenceRow { basis_size: basis.len(), a, r_max, estimate: e, target: t, gap: (e - t) / t })
        })
        .collect();
    Ok(ConvergenceTable {
        target_id: target.name(),
        target: target.target(),
        from_above: target.from_above(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
