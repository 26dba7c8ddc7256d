//! Log-likelihood ratios on the extended half-line `(-inf, +inf]`.
//!
//! LLRs use the half-log normalization `l = 1/2 ln P(0)/P(1)`, so that
//! `P(0) = (1 + tanh l) / 2`. The value `+inf` is a genuine state (a bit known
//! with certainty) and is kept distinct from every finite value: finite values
//! are clamped to `[-LLR_CAP, LLR_CAP]`, where `tanh` already rounds to one,
//! but the clamp never produces infinity. `-inf` cannot occur conditional on
//! the all-zero codeword and is never constructed.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::Add;

/// Magnitude cap for finite LLRs (nats).
pub const LLR_CAP: f64 = 60.0;

#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
#[repr(transparent)]
pub struct Llr(f64);

impl Llr {
    pub const ZERO: Llr = Llr(0.0);
    pub const INFINITY: Llr = Llr(f64::INFINITY);

    /// Build an LLR, clamping finite values into `[-LLR_CAP, LLR_CAP]`.
    /// `-inf` is clamped to `-LLR_CAP`.
    pub fn new(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "NaN LLR");
        if v == f64::INFINITY {
            Llr::INFINITY
        } else if v.is_nan() {
            Llr::ZERO
        } else {
            Llr(v.clamp(-LLR_CAP, LLR_CAP))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    #[inline]
    pub fn tanh(self) -> f64 {
        self.0.tanh()
    }

    /// `arctanh` extended with `arctanh(1) = +inf`.
    pub fn from_tanh(t: f64) -> Self {
        if t >= 1.0 {
            Llr::INFINITY
        } else {
            Llr::new(t.atanh())
        }
    }

    /// `-ln tanh|l|`, in `[0, +inf]`; zero exactly for `l = +inf`.
    #[inline]
    pub fn g(self) -> f64 {
        g_of_abs(self.0.abs())
    }

    /// `ln(1 + e^{-2l})` in nats, the information content of the bit when its
    /// true value is 0. Exact zero at `+inf`.
    #[inline]
    pub fn neg_log_p0(self) -> f64 {
        softplus(-2.0 * self.0)
    }

    /// `log2(1 + e^{-2l})`.
    #[inline]
    pub fn neg_log2_p0(self) -> f64 {
        self.neg_log_p0() / LN_2
    }

    /// Binary entropy (bits) of a bit whose LLR has magnitude `|l|`.
    pub fn bit_entropy(self) -> f64 {
        let a = 2.0 * self.0.abs();
        if a == f64::INFINITY {
            return 0.0;
        }
        // p = 1/(1+e^a) is the probability of the less likely value.
        let ln_p = -softplus(a);
        let ln_q = -softplus(-a);
        -(ln_p.exp() * ln_p + ln_q.exp() * ln_q) / LN_2
    }

    /// Probability that the bit equals 0.
    pub fn p0(self) -> f64 {
        (-self.neg_log_p0()).exp()
    }
}

impl fmt::Debug for Llr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "Llr(+inf)")
        } else {
            write!(f, "Llr({})", self.0)
        }
    }
}

impl fmt::Display for Llr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "+inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Add for Llr {
    type Output = Llr;
    #[inline]
    fn add(self, rhs: Llr) -> Llr {
        if self.is_infinite() || rhs.is_infinite() {
            Llr::INFINITY
        } else {
            Llr::new(self.0 + rhs.0)
        }
    }
}

impl std::iter::Sum for Llr {
    fn sum<I: Iterator<Item = Llr>>(iter: I) -> Llr {
        iter.fold(Llr::ZERO, |a, b| a + b)
    }
}

impl serde::Serialize for Llr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `-ln tanh(a)` for `a >= 0`.
#[inline]
pub fn g_of_abs(a: f64) -> f64 {
    if a == f64::INFINITY {
        return 0.0;
    }
    if a == 0.0 {
        return f64::INFINITY;
    }
    let e = (-2.0 * a).exp();
    e.ln_1p() - (-e).ln_1p()
}

/// Inverse of [`g_of_abs`]: the magnitude `a` with `-ln tanh(a) = g`.
#[inline]
pub fn abs_of_g(g: f64) -> f64 {
    if g == 0.0 {
        return f64::INFINITY;
    }
    if g == f64::INFINITY {
        return 0.0;
    }
    // atanh(e^{-g}) = 1/2 [ln(1 + e^{-g}) - ln(1 - e^{-g})]
    0.5 * ((-g).exp().ln_1p() - (-(-g).exp_m1()).ln())
}

/// Parity-check combination in the G domain: accumulates sign and `-ln|tanh|`.
#[derive(Clone, Copy, Debug)]
pub struct BoxPlus {
    negative: bool,
    g: f64,
}

impl Default for BoxPlus {
    fn default() -> Self {
        BoxPlus { negative: false, g: 0.0 }
    }
}

impl BoxPlus {
    #[inline]
    pub fn push(&mut self, l: Llr) {
        self.push_g(l.value() < 0.0, l.g());
    }

    #[inline]
    pub fn push_g(&mut self, negative: bool, g: f64) {
        self.negative ^= negative;
        self.g += g;
    }

    /// `arctanh(prod tanh l_i)`; infinite exactly when every input is.
    #[inline]
    pub fn finish(self) -> Llr {
        let a = abs_of_g(self.g);
        if a == f64::INFINITY {
            // negative infinity is impossible: a negative input is finite
            Llr::INFINITY
        } else if self.negative {
            Llr::new(-a)
        } else {
            Llr::new(a)
        }
    }

    /// `ln((1 + prod tanh l_i) / 2)`, the log-probability of even parity.
    pub fn ln_even_probability(self) -> f64 {
        // |prod tanh| = e^{-g}
        if self.g == f64::INFINITY {
            return -LN_2;
        }
        if self.negative {
            // ln((1 - e^{-g})/2)
            (-(-self.g).exp_m1()).ln() - LN_2
        } else {
            (-self.g).exp().ln_1p() - LN_2
        }
    }
}

/// Combine LLRs with the check-node rule.
pub fn boxplus<I: IntoIterator<Item = Llr>>(it: I) -> Llr {
    let mut acc = BoxPlus::default();
    for l in it {
        acc.push(l);
    }
    acc.finish()
}

/// Log-sum-exp of two values, tolerant of `-inf`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn infinity_rules() {
        assert!((Llr::INFINITY + Llr::new(-3.0)).is_infinite());
        assert_eq!(Llr::INFINITY.tanh(), 1.0);
        assert!(Llr::from_tanh(1.0).is_infinite());
        assert_eq!(Llr::new(f64::NEG_INFINITY).value(), -LLR_CAP);
        assert_eq!(Llr::new(1e9).value(), LLR_CAP);
        assert!(!Llr::new(1e9).is_infinite());
    }

    #[test]
    fn boxplus_infinity_only_from_all_infinite() {
        assert!(boxplus([Llr::INFINITY, Llr::INFINITY]).is_infinite());
        let big = Llr::new(LLR_CAP);
        let r = boxplus([big, big, Llr::INFINITY]);
        assert!(!r.is_infinite());
        assert!(r.value() > 50.0);
        assert_eq!(boxplus([Llr::ZERO, Llr::INFINITY]).value(), 0.0);
        let r = boxplus([Llr::new(-2.0), Llr::INFINITY]);
        assert!((r.value() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn even_parity_probability() {
        let mut acc = BoxPlus::default();
        acc.push(Llr::new(0.7));
        acc.push(Llr::new(-1.3));
        let t = 0.7f64.tanh() * (-1.3f64).tanh();
        assert!((acc.ln_even_probability() - ((1.0 + t) / 2.0).ln()).abs() < 1e-14);
        // near-cancellation keeps relative accuracy
        let mut acc = BoxPlus::default();
        acc.push(Llr::new(40.0));
        acc.push(Llr::new(-40.0));
        let lp = acc.ln_even_probability();
        assert!(lp.is_finite() && lp < -70.0);
    }

    #[test]
    fn bit_entropy_endpoints() {
        assert!((Llr::ZERO.bit_entropy() - 1.0).abs() < 1e-15);
        assert_eq!(Llr::INFINITY.bit_entropy(), 0.0);
        assert!(Llr::new(LLR_CAP).bit_entropy() < 1e-40);
    }

    proptest! {
        #[test]
        fn g_round_trip(a in 1e-6f64..30.0) {
            let back = abs_of_g(g_of_abs(a));
            prop_assert!((back - a).abs() < 1e-8 * a.max(1.0));
        }

        #[test]
        fn boxplus_matches_tanh_rule(x in -8.0f64..8.0, y in -8.0f64..8.0) {
            let direct = (x.tanh() * y.tanh()).atanh();
            let r = boxplus([Llr::new(x), Llr::new(y)]).value();
            prop_assert!((r - direct).abs() < 1e-9);
        }

        #[test]
        fn neg_log_p0_matches_definition(x in -30.0f64..30.0) {
            let l = Llr::new(x);
            let direct = (1.0 + (-2.0 * x).exp()).ln();
            prop_assert!((l.neg_log_p0() - direct).abs() < 1e-10 * direct.max(1.0));
        }
    }
}
