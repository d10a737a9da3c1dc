//! Reference implementations shared by the integration tests.
//!
//! `Dd` is double-double arithmetic (an unevaluated sum `hi + lo`, about
//! 106 significant bits), enough to serve as an arbitrary-precision oracle
//! for `f64` code while staying fast in debug builds. It is itself checked
//! against `astro-float` at 256 bits.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// `ln(a / b)` for positive `a`, `b`.
    pub fn ln_ratio(a: f64, b: f64) -> Dd {
        Dd::from_f64(a).div(Dd::from_f64(b)).ln()
    }

    /// Natural log via `ln x = 2 atanh((x − 1) / (x + 1))`, after scaling `x`
    /// by a power of two into `[1/√2, √2)`.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of non-positive {self:?}");
        let mut e = 0i32;
        let mut x = self;
        while x.hi >= std::f64::consts::SQRT_2 {
            x = Dd { hi: x.hi / 2.0, lo: x.lo / 2.0 };
            e += 1;
        }
        while x.hi < std::f64::consts::FRAC_1_SQRT_2 {
            x = Dd { hi: x.hi * 2.0, lo: x.lo * 2.0 };
            e -= 1;
        }
        let z = (x - Dd::ONE) / (x + Dd::ONE);
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 1.0;
        loop {
            term = term * z2;
            k += 2.0;
            let t = term / Dd::from_f64(k);
            sum = sum + t;
            if t.hi.abs() <= sum.hi.abs() * 1e-34 {
                break;
            }
        }
        let two_sum = sum + sum;
        if e == 0 {
            two_sum
        } else {
            two_sum + ln2() * Dd::from_f64(f64::from(e))
        }
    }
}

/// ln 2 to double-double precision.
pub fn ln2() -> Dd {
    Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

pub mod big {
    //! `astro-float` helpers.
    use astro_float::{BigFloat, Consts, RoundingMode};

    pub const PRECISION: usize = 256;
    const RM: RoundingMode = RoundingMode::ToEven;

    pub struct Ctx(Consts);

    impl Ctx {
        pub fn new() -> Self {
            Ctx(Consts::new().expect("astro-float constants"))
        }

        pub fn ln_ratio(&mut self, a: f64, b: f64) -> BigFloat {
            let la = BigFloat::from_f64(a, PRECISION).ln(PRECISION, RM, &mut self.0);
            let lb = BigFloat::from_f64(b, PRECISION).ln(PRECISION, RM, &mut self.0);
            la.sub(&lb, PRECISION, RM)
        }
    }

    pub fn from_dd(d: super::Dd) -> BigFloat {
        BigFloat::from_f64(d.hi, PRECISION).add(&BigFloat::from_f64(d.lo, PRECISION), PRECISION, RM)
    }

    /// `|x − y| / |y|` rounded to f64.
    pub fn rel_diff(x: &BigFloat, y: &BigFloat) -> f64 {
        let d = x.sub(y, PRECISION, RM).div(y, PRECISION, RM).abs();
        to_f64(&d)
    }

    pub fn to_f64(x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        let text = format!("{x}");
        text.parse().unwrap_or_else(|_| panic!("unparsable big float {text}"))
    }
}

/// Relative difference with an absolute floor for exact zeros.
pub fn rel_err(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}
