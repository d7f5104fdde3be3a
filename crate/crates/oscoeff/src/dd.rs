//! Double-double arithmetic (~106-bit mantissa) for ill-conditioned series.
//!
//! The Airy power series cancel to `exp(|zeta|)` depth near the negative real
//! axis; plain f64 summation loses up to 12 digits at the series/asymptotic
//! switch radius. Summing in double-double keeps the result at full f64
//! accuracy. Only the operations the series kernels need are implemented.
//!
//! Algorithms are the classical error-free transformations (Dekker/Knuth);
//! products use `f64::mul_add` for the exact low part.

use num_complex::Complex64;

/// Errorless sum: returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e`.
#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `two_sum` specialization valid when `|a| >= |b|`.
#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Errorless product via fused multiply-add.
#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// A real number stored as an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(rhs.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, rhs: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs);
        let p2 = p2 + self.lo * rhs;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    /// Three-step long division; accurate to the full double-double width.
    #[inline]
    pub fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul_f64(q1));
        let q2 = r.hi / rhs.hi;
        let r = r.sub(rhs.mul_f64(q2));
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::from_f64(q3))
    }

    #[inline]
    pub fn div_f64(self, rhs: f64) -> Dd {
        self.div(Dd::from_f64(rhs))
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }
}

/// Complex double-double: a pair of [`Dd`] components.
#[derive(Clone, Copy, Debug)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    #[inline]
    pub fn from_c64(z: Complex64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    #[inline]
    pub fn from_dd(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, rhs: Cdd) -> Cdd {
        Cdd { re: self.re.add(rhs.re), im: self.im.add(rhs.im) }
    }

    #[inline]
    pub fn sub(self, rhs: Cdd) -> Cdd {
        Cdd { re: self.re.sub(rhs.re), im: self.im.sub(rhs.im) }
    }

    #[inline]
    pub fn mul(self, rhs: Cdd) -> Cdd {
        let re = self.re.mul(rhs.re).sub(self.im.mul(rhs.im));
        let im = self.re.mul(rhs.im).add(self.im.mul(rhs.re));
        Cdd { re, im }
    }

    #[inline]
    pub fn mul_dd(self, rhs: Dd) -> Cdd {
        Cdd { re: self.re.mul(rhs), im: self.im.mul(rhs) }
    }

    #[inline]
    pub fn mul_f64(self, rhs: f64) -> Cdd {
        Cdd { re: self.re.mul_f64(rhs), im: self.im.mul_f64(rhs) }
    }

    /// Division by an (exactly representable) real scalar.
    #[inline]
    pub fn div_f64(self, rhs: f64) -> Cdd {
        Cdd { re: self.re.div_f64(rhs), im: self.im.div_f64(rhs) }
    }

    /// Full-width complex division via the conjugate-numerator form.
    #[inline]
    pub fn div(self, rhs: Cdd) -> Cdd {
        let den = rhs.re.mul(rhs.re).add(rhs.im.mul(rhs.im));
        let re = self.re.mul(rhs.re).add(self.im.mul(rhs.im)).div(den);
        let im = self.im.mul(rhs.re).sub(self.re.mul(rhs.im)).div(den);
        Cdd { re, im }
    }

    /// Cheap magnitude estimate at f64 level; used only for termination tests.
    #[inline]
    pub fn norm_est(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
}
