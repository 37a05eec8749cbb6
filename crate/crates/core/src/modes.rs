//! Functions on ℝⁿ as finite sums `Σ g_{k,m}(r) Y_{k,m}(ω)` and the operators
//! of the lab acting mode by mode.
//!
//! Every operator here preserves the degree `k` and acts on a degree-`k`
//! profile as a [`RadialExpr`] whose zeroth-order coefficient may depend on
//! `μ_k`. Norms therefore reduce to sums of one-dimensional weighted
//! integrals with the measure `r^{n-1} dr`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::RadialExpr;
use crate::profiles::{bilinear, SmoothProfile};
use crate::quadrature::RadialRule;

/// `μ_k = k(k+n-2)`.
pub fn mu(k: usize, n: usize) -> f64 {
    (k * (k + n - 2)) as f64
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of the degree-`k` spherical harmonics in `n` variables.
pub fn multiplicity(k: usize, n: usize) -> usize {
    let total = binomial(k + n - 1, n - 1);
    let lower = if k >= 2 { binomial(k + n - 3, n - 1) } else { 0 };
    (total - lower) as usize
}

/// Constants attached to the dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionConstants {
    pub n: usize,
    /// `n(n-4)/4`
    pub rellich: f64,
    /// `(n-2)/2`
    pub hardy: f64,
    /// `(n-1)(n-1+2R_n)`
    pub rellich_tilde: f64,
    /// `2π^{n/2}/Γ(n/2)`
    pub sphere_area: f64,
}

impl DimensionConstants {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!("dimension must be >= 2, got {n}")));
        }
        let nf = n as f64;
        let rellich = nf * (nf - 4.0) / 4.0;
        Ok(DimensionConstants {
            n,
            rellich,
            hardy: (nf - 2.0) / 2.0,
            rellich_tilde: (nf - 1.0) * (nf - 1.0 + 2.0 * rellich),
            sphere_area: sphere_area(n),
        })
    }

    pub fn mu(&self, k: usize) -> f64 {
        mu(k, self.n)
    }

    pub fn multiplicity(&self, k: usize) -> usize {
        multiplicity(k, self.n)
    }
}

/// `σ(S^{n-1})` via the recursion `σ_{n+2} = 2π σ_n / n`.
fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    let (mut area, mut d) = if n.is_multiple_of(2) { (2.0 * PI, 2) } else { (2.0, 1) };
    while d < n {
        area *= 2.0 * PI / d as f64;
        d += 2;
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub k: usize,
    pub m: usize,
}

impl ModeIndex {
    pub fn new(k: usize, m: usize) -> Self {
        ModeIndex { k, m }
    }
}

/// An operator acting on degree-`k` profiles as `base + μ_k · per_mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOp {
    pub base: RadialExpr,
    pub per_mu: RadialExpr,
}

impl ModeOp {
    pub fn radial(base: RadialExpr) -> Self {
        ModeOp { base, per_mu: RadialExpr::zero(base.shift) }
    }

    pub fn at(&self, mu: f64) -> RadialExpr {
        if mu == 0.0 || self.per_mu.is_zero() {
            return self.base;
        }
        self.base + self.per_mu * mu
    }

    pub fn identity() -> Self {
        Self::radial(RadialExpr::IDENTITY)
    }

    /// `f / |x|^p`.
    pub fn weight(p: f64) -> Self {
        Self::radial(RadialExpr::power(-p))
    }

    /// `∂_r`.
    pub fn dr() -> Self {
        Self::radial(RadialExpr::d1())
    }

    /// `∂_r²`.
    pub fn dr2() -> Self {
        Self::radial(RadialExpr::d2())
    }

    /// `Δ_r = ∂_r² + (n-1)/r ∂_r`.
    pub fn radial_laplacian(n: usize) -> Self {
        Self::radial(RadialExpr::new(-2.0, 0.0, n as f64 - 1.0, 1.0))
    }

    /// `Σ_j L_j² = |x|^{-2} Δ_{S^{n-1}}`, acting as `-μ_k/r²`.
    pub fn spherical_part() -> Self {
        ModeOp { base: RadialExpr::zero(-2.0), per_mu: RadialExpr::new(-2.0, -1.0, 0.0, 0.0) }
    }

    pub fn laplacian(n: usize) -> Self {
        Self::radial_laplacian(n) + Self::spherical_part()
    }

    /// `f_* = ∂_r f + (n-4)/2 · f/|x|`.
    pub fn f_star(n: usize) -> Self {
        Self::radial(RadialExpr::new(-1.0, (n as f64 - 4.0) / 2.0, 1.0, 0.0))
    }

    /// `f_# = ∂_r² f + (n-3)∂_r f/|x| + (n-4)²/4 · f/|x|²`.
    pub fn f_sharp(n: usize) -> Self {
        let a = n as f64 - 4.0;
        Self::radial(RadialExpr::new(-2.0, a * a / 4.0, n as f64 - 3.0, 1.0))
    }

    /// Multiply the output by `r^p`.
    pub fn shifted(self, p: f64) -> Self {
        ModeOp { base: self.base.shifted(p), per_mu: self.per_mu.shifted(p) }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ModeOp) -> Result<ModeOp> {
        // (B + μP)(B' + μP') expanded; the μ² part must vanish for every
        // operator used here, which holds when one side is purely radial.
        if !self.per_mu.is_zero() && !inner.per_mu.is_zero() {
            return Err(Error::capability("composition of two degree-dependent operators"));
        }
        let base = self.base.compose(&inner.base)?;
        let mut per_mu = RadialExpr::zero(base.shift);
        if !self.per_mu.is_zero() {
            per_mu = per_mu + self.per_mu.compose(&inner.base)?;
        }
        if !inner.per_mu.is_zero() {
            per_mu = per_mu + self.base.compose(&inner.per_mu)?;
        }
        Ok(ModeOp { base, per_mu })
    }

    /// `∂_r ∘ self`.
    pub fn derivative(&self) -> Result<ModeOp> {
        ModeOp::dr().compose(self)
    }
}

impl Add for ModeOp {
    type Output = ModeOp;

    fn add(self, rhs: ModeOp) -> ModeOp {
        ModeOp { base: self.base + rhs.base, per_mu: self.per_mu + rhs.per_mu }
    }
}

impl Sub for ModeOp {
    type Output = ModeOp;

    fn sub(self, rhs: ModeOp) -> ModeOp {
        self + (-rhs)
    }
}

impl Neg for ModeOp {
    type Output = ModeOp;

    fn neg(self) -> ModeOp {
        self * -1.0
    }
}

impl Mul<f64> for ModeOp {
    type Output = ModeOp;

    fn mul(self, k: f64) -> ModeOp {
        ModeOp { base: self.base * k, per_mu: self.per_mu * k }
    }
}

/// Named operators accepted by [`apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Laplacian,
    RadialLaplacian,
    SphericalPart,
    FStar,
    FSharp,
}

impl OperatorKind {
    pub fn op(self, n: usize) -> ModeOp {
        match self {
            OperatorKind::Laplacian => ModeOp::laplacian(n),
            OperatorKind::RadialLaplacian => ModeOp::radial_laplacian(n),
            OperatorKind::SphericalPart => ModeOp::spherical_part(),
            OperatorKind::FStar => ModeOp::f_star(n),
            OperatorKind::FSharp => ModeOp::f_sharp(n),
        }
    }
}

/// Which modes [`project`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Degree(usize),
    /// `P`: the radial part.
    Radial,
    /// `P⊥ = I - P`.
    Complement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    dim: usize,
    modes: BTreeMap<ModeIndex, SmoothProfile>,
}

impl ModeFunction {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::config(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(ModeFunction { dim, modes: BTreeMap::new() })
    }

    /// A single-mode function `g(r) Y_{k,m}`.
    pub fn single(dim: usize, k: usize, m: usize, g: SmoothProfile) -> Result<Self> {
        let mut f = Self::new(dim)?;
        f.insert(ModeIndex::new(k, m), g)?;
        Ok(f)
    }

    /// Add `g` to the `(k, m)` component. Zero profiles are not stored.
    pub fn insert(&mut self, idx: ModeIndex, g: SmoothProfile) -> Result<()> {
        let nk = multiplicity(idx.k, self.dim);
        if idx.m < 1 || idx.m > nk {
            return Err(Error::config(format!(
                "mode index m = {} out of range 1..={nk} for k = {} in n = {}",
                idx.m, idx.k, self.dim
            )));
        }
        if g.is_zero() {
            return Ok(());
        }
        let entry = self.modes.entry(idx).or_default();
        *entry = entry.plus(&g);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &BTreeMap<ModeIndex, SmoothProfile> {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.modes.keys().map(|i| i.k).max()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let modes = self.modes.iter().map(|(i, g)| (*i, g.scaled(c))).filter(|(_, g)| !g.is_zero()).collect();
        ModeFunction { dim: self.dim, modes }
    }

    pub fn linear_combination(&self, a: Complex64, other: &ModeFunction, b: Complex64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::config("cannot combine functions of different dimension"));
        }
        let mut out = self.scaled(a);
        for (i, g) in &other.modes {
            out.insert(*i, g.scaled(b))?;
        }
        Ok(out)
    }

    /// Apply a degree-preserving operator mode by mode, dropping modes it
    /// annihilates.
    pub fn apply(&self, op: &ModeOp) -> Result<ModeFunction> {
        let mut modes = BTreeMap::new();
        for (i, g) in &self.modes {
            let e = op.at(mu(i.k, self.dim));
            if e.is_zero() {
                continue;
            }
            let h = g.transformed(&e)?;
            if !h.is_zero() {
                modes.insert(*i, h);
            }
        }
        Ok(ModeFunction { dim: self.dim, modes })
    }

    /// `Σ_{k,m} Re ∫ A_k[g] conj(B_k[g]) r^{n-1} dr`, the `L²(ℝⁿ)` pairing
    /// `Re⟨A f, B f⟩` with orthonormal harmonics.
    pub fn pairing(&self, a: &ModeOp, b: &ModeOp, rule: &RadialRule) -> Result<f64> {
        let t = self.dim as f64 - 1.0;
        let mut parts = Vec::with_capacity(self.modes.len());
        for (i, g) in &self.modes {
            let m = mu(i.k, self.dim);
            parts.push(bilinear(g, &a.at(m), g, &b.at(m), t, rule)?);
        }
        Ok(parts.iter().sum())
    }

    /// `‖A f‖²`.
    pub fn norm_sq(&self, a: &ModeOp, rule: &RadialRule) -> Result<f64> {
        self.pairing(a, a, rule)
    }
}

/// `‖f/|x|^p‖² = Σ ∫ |g_{k,m}|² r^{n-1-2p} dr`.
pub fn weighted_norm_sq(f: &ModeFunction, p: f64, rule: &RadialRule) -> Result<f64> {
    f.norm_sq(&ModeOp::weight(p), rule)
}

pub fn apply_operator(f: &ModeFunction, kind: OperatorKind) -> Result<ModeFunction> {
    f.apply(&kind.op(f.dim))
}

/// `⟨-Σ L_j² u, u⟩ = Σ μ_k ∫ |u_{k,m}|² r^{n-3} dr`.
pub fn dirichlet_pairing(u: &ModeFunction, rule: &RadialRule) -> Result<f64> {
    u.pairing(&(-ModeOp::spherical_part()), &ModeOp::identity(), rule)
}

pub fn project(f: &ModeFunction, sel: Selector) -> ModeFunction {
    let keep = |i: &ModeIndex| match sel {
        Selector::Degree(k) => i.k == k,
        Selector::Radial => i.k == 0,
        Selector::Complement => i.k != 0,
    };
    ModeFunction { dim: f.dim, modes: f.modes.iter().filter(|(i, _)| keep(i)).map(|(i, g)| (*i, g.clone())).collect() }
}
