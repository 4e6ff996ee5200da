//! Real-number abstraction with configurable precision.
//!
//! Every algorithm in this crate is generic over [`Scalar`]. Two backends are
//! provided: hardware `f64` (53 mantissa bits) and [`Mp`], a software binary
//! float with a per-run mantissa width set through [`set_mp_precision`].
//! Near the boundary of the Poincaré ball the quantity `1 - ||x||` shrinks
//! like `exp(-d)`, so the mantissa width directly bounds the distances a run
//! can represent; keeping precision a first-class parameter is what makes the
//! high-precision pipelines possible.

use std::cell::{Cell, RefCell};
use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

use crate::error::{HypError, Result};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static MP_BITS: Cell<usize> = const { Cell::new(256) };
    static MP_CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// Sets the mantissa width (in bits) used by all subsequent [`Mp`] operations
/// on this thread. Values below 64 are rejected; use `f64` for hardware runs.
pub fn set_mp_precision(bits: usize) {
    assert!(bits >= 64, "software floats need at least 64 mantissa bits");
    MP_BITS.with(|b| b.set(bits));
}

pub fn mp_precision() -> usize {
    MP_BITS.with(|b| b.get())
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    MP_CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// A real number closed under the arithmetic the toolkit needs, at a fixed
/// mantissa width.
pub trait Scalar:
    Sized
    + Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Add<Self, Output = Self>
    + Sub<Self, Output = Self>
    + Mul<Self, Output = Self>
    + Div<Self, Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign<Self>
    + SubAssign<Self>
    + MulAssign<Self>
    + DivAssign<Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    /// Mantissa bits of this backend (53 for `f64`).
    fn mantissa_bits() -> usize;

    fn from_f64(v: f64) -> Self;
    fn from_usize(v: usize) -> Self;
    fn to_f64(&self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn two() -> Self {
        Self::from_f64(2.0)
    }
    fn pi() -> Self;
    fn ln_2() -> Self;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sinh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn cos(&self) -> Self;
    fn sin(&self) -> Self;
    fn atan(&self) -> Self;

    /// `acosh` on an argument already known to be `>= 1`.
    fn acosh_unchecked(&self) -> Self;

    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// Parses a decimal literal (plain or scientific notation).
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Scientific-notation rendering, with `ceil(p log10 2) + 2` significant
    /// digits so values round-trip bit-exactly through TSV files.
    fn format_sci(&self) -> String;

    /// Unit in the last place at 1: `2^(1-p)`.
    fn ulp_one() -> Self {
        let p = Self::mantissa_bits() as i32;
        exp2_int::<Self>(1 - p)
    }

    /// Default working tolerance: `1e-12` at hardware precision, `2^(20-p)`
    /// for `p`-bit software floats.
    fn tol() -> Self {
        if Self::mantissa_bits() == 53 {
            Self::from_f64(1e-12)
        } else {
            exp2_int::<Self>(20 - Self::mantissa_bits() as i32)
        }
    }

    /// Relative-residual stop for power iteration: `1e-12` at hardware
    /// precision, `2^(16-p)` otherwise.
    fn power_tol() -> Self {
        if Self::mantissa_bits() == 53 {
            Self::from_f64(1e-12)
        } else {
            exp2_int::<Self>(16 - Self::mantissa_bits() as i32)
        }
    }

    /// `acosh` with the domain guard: arguments below 1 by at most 4 ulp
    /// (relative to `max(1, |t|)`) are clamped to 1, anything lower is a
    /// domain error.
    fn acosh_checked(&self) -> Result<Self> {
        let one = Self::one();
        if *self >= one {
            return Ok(self.acosh_unchecked());
        }
        let scale = if self.abs() > one { self.abs() } else { one.clone() };
        let slack = Self::from_f64(4.0) * Self::ulp_one() * scale;
        if one.clone() - self.clone() <= slack {
            Ok(Self::zero())
        } else {
            Err(HypError::Domain(format!(
                "acosh argument {} below 1 beyond the 4-ulp clamping tolerance",
                self
            )))
        }
    }

    /// `acosh` extended by continuity: arguments below 1 evaluate to 0.
    /// Used when measuring degraded embeddings, never for exact pipelines.
    fn acosh_saturating(&self) -> Self {
        if *self <= Self::one() {
            Self::zero()
        } else {
            self.acosh_unchecked()
        }
    }

    fn atan2(y: &Self, x: &Self) -> Self {
        let zero = Self::zero();
        if x.is_zero() && y.is_zero() {
            return zero;
        }
        if x > &zero {
            return (y.clone() / x).atan();
        }
        if x < &zero {
            let base = (y.clone() / x).atan();
            return if y >= &zero { base + Self::pi() } else { base - Self::pi() };
        }
        // x == 0, y != 0
        let half_pi = Self::pi() / Self::two();
        if y > &zero {
            half_pi
        } else {
            -half_pi
        }
    }

    fn max_s(&self, other: &Self) -> Self {
        if self >= other { self.clone() } else { other.clone() }
    }

    fn min_s(&self, other: &Self) -> Self {
        if self <= other { self.clone() } else { other.clone() }
    }

    /// Integer power by repeated multiplication (exponents stay small here).
    fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * &base;
            }
            base = base.clone() * &base;
            n >>= 1;
        }
        acc
    }
}

/// `2^k` for possibly large negative `k`, built without overflowing `f64`.
fn exp2_int<S: Scalar>(k: i32) -> S {
    let two = S::two();
    let inv = S::one() / S::two();
    let (b, n) = if k >= 0 { (two, k as u32) } else { (inv, (-k) as u32) };
    b.powi(n)
}

impl Scalar for f64 {
    fn mantissa_bits() -> usize {
        53
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_usize(v: usize) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn ln_2() -> Self {
        std::f64::consts::LN_2
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn acosh_unchecked(&self) -> Self {
        f64::acosh(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    }
    fn format_sci(&self) -> String {
        // ceil(53 log10 2) + 2 = 18 significant digits
        format!("{:.17e}", self)
    }
}

/// Software binary float. Wraps `astro_float::BigFloat`; every operation
/// rounds to the thread's configured mantissa width (round-to-nearest-even).
#[derive(Clone)]
pub struct Mp(BigFloat);

impl Mp {
    pub fn raw(&self) -> &BigFloat {
        &self.0
    }

    fn cmp_total(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.0.cmp(&other.0).map(|s| s.cmp(&0))
    }
}

macro_rules! mp_binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident, $astro:ident) => {
        impl $trait<Mp> for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                Mp(self.0.$astro(&rhs.0, mp_precision(), RM))
            }
        }
        impl<'a> $trait<&'a Mp> for Mp {
            type Output = Mp;
            fn $method(self, rhs: &'a Mp) -> Mp {
                Mp(self.0.$astro(&rhs.0, mp_precision(), RM))
            }
        }
        impl $assign_trait<Mp> for Mp {
            fn $assign_method(&mut self, rhs: Mp) {
                self.0 = self.0.$astro(&rhs.0, mp_precision(), RM);
            }
        }
        impl<'a> $assign_trait<&'a Mp> for Mp {
            fn $assign_method(&mut self, rhs: &'a Mp) {
                self.0 = self.0.$astro(&rhs.0, mp_precision(), RM);
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign, add);
mp_binop!(Sub, sub, SubAssign, sub_assign, sub);
mp_binop!(Mul, mul, MulAssign, mul_assign, mul);
mp_binop!(Div, div, DivAssign, div_assign, div);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(self.0.neg())
    }
}

impl PartialEq for Mp {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.cmp_total(other), Some(std::cmp::Ordering::Equal))
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.cmp_total(other)
    }
}

impl Debug for Mp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mp({})", self.to_f64())
    }
}

impl Display for Mp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.format_sci())
    }
}

impl Scalar for Mp {
    fn mantissa_bits() -> usize {
        mp_precision()
    }

    fn from_f64(v: f64) -> Self {
        Mp(BigFloat::from_f64(v, mp_precision()))
    }

    fn from_usize(v: usize) -> Self {
        Mp(BigFloat::from_u64(v as u64, mp_precision()))
    }

    fn to_f64(&self) -> f64 {
        let x = &self.0;
        if x.is_zero() {
            return 0.0;
        }
        if x.is_nan() {
            return f64::NAN;
        }
        if x.is_inf_pos() {
            return f64::INFINITY;
        }
        if x.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let (words, _n, s, e, _) = x.as_raw_parts().expect("finite value has raw parts");
        // words are least-significant first; the top word has its high bit set
        let top = *words.last().unwrap() as f64;
        let lo = if words.len() > 1 {
            words[words.len() - 2] as f64
        } else {
            0.0
        };
        let m = top + lo / 1.8446744073709552e19;
        // value = m * 2^(e - 64); split the scaling to keep powi in range
        let e = e as i64 - 64;
        let (h1, h2) = (e / 2, e - e / 2);
        let v = m * 2f64.powi(h1 as i32) * 2f64.powi(h2 as i32);
        if s == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn pi() -> Self {
        Mp(with_consts(|cc| cc.pi(mp_precision(), RM)))
    }

    fn ln_2() -> Self {
        Mp(with_consts(|cc| cc.ln_2(mp_precision(), RM)))
    }

    fn abs(&self) -> Self {
        let mut v = self.0.clone();
        v.set_sign(Sign::Pos);
        Mp(v)
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.sqrt(mp_precision(), RM))
    }

    fn exp(&self) -> Self {
        Mp(with_consts(|cc| self.0.exp(mp_precision(), RM, cc)))
    }

    fn ln(&self) -> Self {
        Mp(with_consts(|cc| self.0.ln(mp_precision(), RM, cc)))
    }

    fn cosh(&self) -> Self {
        Mp(with_consts(|cc| self.0.cosh(mp_precision(), RM, cc)))
    }

    fn sinh(&self) -> Self {
        Mp(with_consts(|cc| self.0.sinh(mp_precision(), RM, cc)))
    }

    fn tanh(&self) -> Self {
        Mp(with_consts(|cc| self.0.tanh(mp_precision(), RM, cc)))
    }

    fn cos(&self) -> Self {
        Mp(with_consts(|cc| self.0.cos(mp_precision(), RM, cc)))
    }

    fn sin(&self) -> Self {
        Mp(with_consts(|cc| self.0.sin(mp_precision(), RM, cc)))
    }

    fn atan(&self) -> Self {
        Mp(with_consts(|cc| self.0.atan(mp_precision(), RM, cc)))
    }

    fn acosh_unchecked(&self) -> Self {
        Mp(with_consts(|cc| self.0.acosh(mp_precision(), RM, cc)))
    }

    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.is_empty() {
            return None;
        }
        let v = with_consts(|cc| BigFloat::parse(s, Radix::Dec, mp_precision(), RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Mp(v))
        }
    }

    fn format_sci(&self) -> String {
        if self.0.is_zero() {
            return "0.0e0".to_string();
        }
        if self.0.is_nan() {
            return "nan".to_string();
        }
        if self.0.is_inf_pos() {
            return "inf".to_string();
        }
        if self.0.is_inf_neg() {
            return "-inf".to_string();
        }
        let digits = (mp_precision() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        let (s, m, e) = with_consts(|cc| self.0.convert_to_radix(Radix::Dec, RM, cc))
            .expect("finite value converts to decimal");
        let mut mant: String = m.iter().map(|d| (b'0' + d) as char).collect();
        if mant.len() > digits {
            mant.truncate(digits);
        }
        while mant.len() > 1 && mant.ends_with('0') {
            mant.pop();
        }
        let sign = if s == Sign::Neg { "-" } else { "" };
        let (head, tail) = mant.split_at(1);
        let tail = if tail.is_empty() { "0" } else { tail };
        // value = 0.mant * 10^e, so the leading digit carries exponent e-1
        format!("{}{}.{}e{}", sign, head, tail, e as i64 - 1)
    }
}

/// Small vector helpers shared by the geometry and linear-algebra code.
pub mod vecs {
    use super::Scalar;

    pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = S::zero();
        for (x, y) in a.iter().zip(b) {
            acc += x.clone() * y;
        }
        acc
    }

    pub fn norm_sq<S: Scalar>(a: &[S]) -> S {
        dot(a, a)
    }

    pub fn norm<S: Scalar>(a: &[S]) -> S {
        norm_sq(a).sqrt()
    }

    pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| x.clone() + y).collect()
    }

    pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| x.clone() - y).collect()
    }

    pub fn scale<S: Scalar>(a: &[S], c: &S) -> Vec<S> {
        a.iter().map(|x| x.clone() * c).collect()
    }

    pub fn neg<S: Scalar>(a: &[S]) -> Vec<S> {
        a.iter().map(|x| -x.clone()).collect()
    }

    pub fn zeros<S: Scalar>(n: usize) -> Vec<S> {
        (0..n).map(|_| S::zero()).collect()
    }

    /// `y += c * x`
    pub fn axpy<S: Scalar>(y: &mut [S], c: &S, x: &[S]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += c.clone() * xi;
        }
    }

    pub fn dist_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
        let mut acc = S::zero();
        for (x, y) in a.iter().zip(b) {
            let d = x.clone() - y;
            acc += d.clone() * &d;
        }
        acc
    }

    pub fn to_f64<S: Scalar>(a: &[S]) -> Vec<f64> {
        a.iter().map(|x| x.to_f64()).collect()
    }

    pub fn from_f64<S: Scalar>(a: &[f64]) -> Vec<S> {
        a.iter().map(|&x| S::from_f64(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_roundtrip_f64() {
        set_mp_precision(128);
        for v in [0.0, 1.0, -2.5, 0.1, 1e-30, 3.0e25, -7.25e-3] {
            let m = Mp::from_f64(v);
            assert_eq!(m.to_f64(), v, "roundtrip of {v}");
        }
    }

    #[test]
    fn mp_arithmetic_matches_f64_within_double() {
        set_mp_precision(128);
        let a = Mp::from_f64(1.75);
        let b = Mp::from_f64(-0.3125);
        assert_eq!((a.clone() + &b).to_f64(), 1.75 - 0.3125);
        assert_eq!((a.clone() * &b).to_f64(), 1.75 * -0.3125);
        assert!(((a / &b).to_f64() - (1.75 / -0.3125)).abs() < 1e-15);
    }

    #[test]
    fn mp_transcendentals() {
        set_mp_precision(192);
        let x = Mp::from_f64(0.5);
        assert!((x.exp().to_f64() - 0.5f64.exp()).abs() < 1e-15);
        assert!((x.cosh().to_f64() - 0.5f64.cosh()).abs() < 1e-15);
        let y = Mp::from_f64(2.0);
        assert!((y.acosh_unchecked().to_f64() - 2.0f64.acosh()).abs() < 1e-15);
        assert!((Mp::pi().to_f64() - std::f64::consts::PI).abs() < 1e-15);
        assert!((Mp::ln_2().to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn acosh_clamps_within_4_ulp_only() {
        // double: ulp(1) = 2^-52; 1 - 2 ulp clamps to 0, 1 - 1e-9 errors
        let just_below = 1.0 - 2.0 * 2f64.powi(-52);
        assert_eq!(just_below.acosh_checked().unwrap(), 0.0);
        assert!((1.0 - 1e-9).acosh_checked().is_err());
        assert!((2.0).acosh_checked().unwrap() > 0.0);

        set_mp_precision(128);
        let one = Mp::one();
        let eps = Mp::ulp_one();
        let ok = one.clone() - eps.clone() - eps.clone();
        assert_eq!(ok.acosh_checked().unwrap().to_f64(), 0.0);
        let bad = one - Mp::from_f64(1e-9);
        assert!(bad.acosh_checked().is_err());
    }

    #[test]
    fn atan2_quadrants() {
        for (y, x) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 0.0), (0.0, -2.0)] {
            let got = <f64 as Scalar>::atan2(&y, &x);
            assert!((got - y.atan2(x)).abs() < 1e-14, "atan2({y},{x})");
            set_mp_precision(128);
            let gm = <Mp as Scalar>::atan2(&Mp::from_f64(y), &Mp::from_f64(x));
            assert!((gm.to_f64() - y.atan2(x)).abs() < 1e-14, "mp atan2({y},{x})");
        }
    }

    #[test]
    fn format_parse_roundtrip_exact() {
        set_mp_precision(128);
        let x = Mp::from_f64(0.1).sqrt() * Mp::pi();
        let s = x.format_sci();
        let y = Mp::parse_decimal(&s).unwrap();
        assert_eq!(x, y, "decimal round trip at 128 bits: {s}");

        let v = 0.1f64.sqrt() * std::f64::consts::PI;
        let s = v.format_sci();
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn precision_dependent_tolerances() {
        assert_eq!(<f64 as Scalar>::tol(), 1e-12);
        set_mp_precision(64);
        let t = <Mp as Scalar>::tol().to_f64();
        assert!((t - 2f64.powi(-44)).abs() < 1e-28);
        set_mp_precision(256);
        assert!(<Mp as Scalar>::tol().to_f64() < 1e-60);
    }
}
