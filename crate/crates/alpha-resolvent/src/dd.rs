//! Double-double arithmetic: an unevaluated sum of two f64 giving ~31
//! significant digits. Used by the Mittag-Leffler evaluator when plain f64
//! cannot meet the requested tolerance (heavy cancellation, e.g. large
//! negative arguments with α near 1).
//!
//! The error-free transforms are the classical ones (TwoSum, QuickTwoSum,
//! TwoProd via fused multiply-add); add/mul/div follow the QD library
//! algorithms. `exp`, `ln` and `ln_gamma` are built on top with frozen
//! high-precision constants, and are only required on the argument ranges the
//! series code produces: |x| ≤ ~40 for exp, moderate positive arguments for
//! ln_gamma (up to ~800).

/// Double-double value `hi + lo` with |lo| ≤ ulp(hi)/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    (p, e)
}

/// ln 2 to double-double precision.
pub const LN_2: Dd = Dd {
    hi: 0.6931471805599453,
    lo: 2.3190468138462996e-17,
};

/// ln(2π)/2 to double-double precision.
pub const HALF_LN_TWO_PI: Dd = Dd {
    hi: 0.9189385332046728,
    lo: -3.8782941580672414e-17,
};

/// Stirling-series coefficients B_{2n} / (2n(2n-1)) for n = 1..=13, each as
/// a double-double split of the exact rational.
const STIRLING: [Dd; 13] = [
    Dd { hi: 0.08333333333333333, lo: 4.625929269271485e-18 },
    Dd { hi: -0.002777777777777778, lo: 1.0601087908747154e-19 },
    Dd { hi: 0.0007936507936507937, lo: 6.883823317368282e-22 },
    Dd { hi: -0.0005952380952380953, lo: 5.36938218754726e-20 },
    Dd { hi: 0.0008417508417508417, lo: 3.6870174889237694e-20 },
    Dd { hi: -0.0019175269175269176, lo: 1.0675702776872475e-19 },
    Dd { hi: 0.00641025641025641, lo: 2.2240044563805217e-19 },
    Dd { hi: -0.029550653594771242, lo: 4.861760957508855e-19 },
    Dd { hi: 0.17964437236883057, lo: -6.401600482710946e-19 },
    Dd { hi: -1.3924322169059011, lo: 1.5837056989230303e-17 },
    Dd { hi: 13.402864044168393, lo: -6.154114101993966e-16 },
    Dd { hi: -156.84828462600203, lo: 9.391823141715389e-15 },
    Dd { hi: 2193.1033333333335, lo: -1.3339255626002948e-13 },
];

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Sum of two parts, correctly rounded to f64.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, o);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * o);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add_f64(q3)
    }

    #[inline]
    pub fn div_f64(self, o: f64) -> Dd {
        self.div(Dd::from_f64(o))
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    /// Exact multiplication by 2^n (no rounding while in range).
    fn scale2(self, n: i32) -> Dd {
        let s = (2.0f64).powi(n);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    /// e^x for |x| up to a few hundred.
    pub fn exp(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        let n = (self.hi / LN_2.hi).round();
        let r = self.sub(LN_2.mul_f64(n));
        let mut term = r;
        let mut sum = Dd::ONE.add(r);
        let mut k = 2.0;
        loop {
            term = term.mul(r).div_f64(k);
            sum = sum.add(term);
            if term.hi.abs() < 1e-36 * sum.hi.abs() || k > 40.0 {
                break;
            }
            k += 1.0;
        }
        sum.scale2(n as i32)
    }

    /// Natural log for positive values: Newton refinement of the f64 seed.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of a nonpositive double-double");
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            // y <- y + x e^{-y} - 1
            y = y.add(self.mul(y.neg().exp())).add_f64(-1.0);
        }
        y
    }

    /// ln Gamma(x) for x > 0 (x up to ~800): argument shift to the Stirling
    /// regime, then the asymptotic series with 13 frozen coefficients.
    pub fn ln_gamma(self) -> Dd {
        assert!(self.hi > 0.0, "ln_gamma of a nonpositive double-double");
        let mut shift_product = Dd::ONE;
        let mut y = self;
        let shift = if self.hi < 40.0 {
            (40.0 - self.hi).ceil() as usize
        } else {
            0
        };
        for j in 0..shift {
            shift_product = shift_product.mul(self.add_f64(j as f64));
        }
        if shift > 0 {
            y = self.add_f64(shift as f64);
        }
        let ln_y = y.ln();
        let z = Dd::ONE.div(y.mul(y));
        let mut s = STIRLING[12];
        for c in STIRLING.iter().rev().skip(1) {
            s = s.mul(z).add(*c);
        }
        let series = s.div(y);
        let stirling = y
            .add_f64(-0.5)
            .mul(ln_y)
            .sub(y)
            .add(HALF_LN_TWO_PI)
            .add(series);
        if shift > 0 {
            stirling.sub(shift_product.ln())
        } else {
            stirling
        }
    }
}
