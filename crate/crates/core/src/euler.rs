//! Second order Euler-type radial operators
//! `E[g] = r^s (c0 g + c1 r g' + c2 r² g'')`.
//!
//! Every operator in the lab acts on a single mode profile this way, and on a
//! pure power `c r^α` it gives `c s(α) r^{α+s}` with the symbol
//! `s(α) = c0 + c1 α + c2 α(α-1)`. That is what makes the closed-form
//! treatment of the origin possible.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Value and first two derivatives of a radial profile at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub g: Complex64,
    pub dg: Complex64,
    pub d2g: Complex64,
}

impl Jet {
    pub const ZERO: Jet =
        Jet { g: Complex64::new(0.0, 0.0), dg: Complex64::new(0.0, 0.0), d2g: Complex64::new(0.0, 0.0) };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialExpr {
    pub shift: f64,
    pub c: [f64; 3],
}

impl RadialExpr {
    pub const IDENTITY: RadialExpr = RadialExpr { shift: 0.0, c: [1.0, 0.0, 0.0] };

    pub fn new(shift: f64, c0: f64, c1: f64, c2: f64) -> Self {
        RadialExpr { shift, c: [c0, c1, c2] }
    }

    /// Multiplication by `r^p`.
    pub fn power(p: f64) -> Self {
        RadialExpr::new(p, 1.0, 0.0, 0.0)
    }

    /// `∂_r`.
    pub fn d1() -> Self {
        RadialExpr::new(-1.0, 0.0, 1.0, 0.0)
    }

    /// `∂_r²`.
    pub fn d2() -> Self {
        RadialExpr::new(-2.0, 0.0, 0.0, 1.0)
    }

    pub fn zero(shift: f64) -> Self {
        RadialExpr::new(shift, 0.0, 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.c == [0.0; 3]
    }

    /// Highest derivative actually used.
    pub fn order(&self) -> usize {
        if self.c[2] != 0.0 {
            2
        } else if self.c[1] != 0.0 {
            1
        } else {
            0
        }
    }

    pub fn symbol(&self, alpha: f64) -> f64 {
        self.c[0] + self.c[1] * alpha + self.c[2] * alpha * (alpha - 1.0)
    }

    /// Multiply the output by `r^p`.
    pub fn shifted(self, p: f64) -> Self {
        RadialExpr { shift: self.shift + p, ..self }
    }

    pub fn apply(&self, r: f64, jet: &Jet) -> Complex64 {
        let [c0, c1, c2] = self.c;
        let mut v = jet.g * c0;
        if c1 != 0.0 {
            v += jet.dg * (c1 * r);
        }
        if c2 != 0.0 {
            v += jet.d2g * (c2 * r * r);
        }
        if self.shift != 0.0 {
            v *= r.powf(self.shift);
        }
        v
    }

    /// `d/dr` of the expression; needs `c2 = 0` since third derivatives of
    /// profiles are not available.
    pub fn derivative(&self) -> Result<RadialExpr> {
        if self.c[2] != 0.0 {
            return Err(Error::capability("derivative of a second order expression needs g'''"));
        }
        let s = self.shift;
        let [c0, c1, _] = self.c;
        Ok(RadialExpr::new(s - 1.0, s * c0, c0 + c1 * (s + 1.0), c1))
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &RadialExpr) -> Result<RadialExpr> {
        let [a0, a1, a2] = self.c;
        let s = self.shift;
        let mut out = RadialExpr::zero(s + inner.shift);
        if a0 != 0.0 {
            out = out + (*inner * a0).shifted(s);
        }
        if a1 != 0.0 || a2 != 0.0 {
            let d = inner.derivative()?;
            if a1 != 0.0 {
                out = out + d.shifted(1.0 + s) * a1;
            }
            if a2 != 0.0 {
                let dd = d.derivative()?;
                out = out + dd.shifted(2.0 + s) * a2;
            }
        }
        Ok(RadialExpr { shift: s + inner.shift, c: out.c })
    }
}

impl Add for RadialExpr {
    type Output = RadialExpr;

    /// Sum of two expressions with the same shift. A zero operand adopts the
    /// other's shift.
    fn add(self, rhs: RadialExpr) -> RadialExpr {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        assert!(
            (self.shift - rhs.shift).abs() < 1e-12,
            "adding radial expressions of different homogeneity ({} vs {})",
            self.shift,
            rhs.shift
        );
        RadialExpr::new(self.shift, self.c[0] + rhs.c[0], self.c[1] + rhs.c[1], self.c[2] + rhs.c[2])
    }
}

impl Sub for RadialExpr {
    type Output = RadialExpr;

    fn sub(self, rhs: RadialExpr) -> RadialExpr {
        self + (-rhs)
    }
}

impl Neg for RadialExpr {
    type Output = RadialExpr;

    fn neg(self) -> RadialExpr {
        self * -1.0
    }
}

impl Mul<f64> for RadialExpr {
    type Output = RadialExpr;

    fn mul(self, k: f64) -> RadialExpr {
        RadialExpr::new(self.shift, self.c[0] * k, self.c[1] * k, self.c[2] * k)
    }
}
