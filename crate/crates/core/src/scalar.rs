//! Exact scalars with denominators of the form `2^b · 3^a`.
//!
//! Every coordinate, length and measure produced by the dyadic constructions
//! lives in this ring: dyadic rationals, their ±1/3 translates, and products of
//! such lengths. Arithmetic never rounds and the representation is kept in
//! lowest terms, so structural equality is numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational `num / (2^two_exp · 3^three_exp)` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    num: BigInt,
    two_exp: u32,
    three_exp: u32,
}

pub(crate) fn pow3(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(3u8), e as usize)
}

pub(crate) fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}

impl ExactScalar {
    pub fn new(num: BigInt, two_exp: u32, three_exp: u32) -> Self {
        let mut s = ExactScalar {
            num,
            two_exp,
            three_exp,
        };
        s.canonicalize();
        s
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.two_exp = 0;
            self.three_exp = 0;
            return;
        }
        if self.two_exp > 0 {
            let tz = self.num.trailing_zeros().unwrap_or(0);
            let shift = tz.min(self.two_exp as u64);
            if shift > 0 {
                self.num >>= shift;
                self.two_exp -= shift as u32;
            }
        }
        let three = BigInt::from(3u8);
        while self.three_exp > 0 {
            let (q, r) = self.num.div_rem(&three);
            if !r.is_zero() {
                break;
            }
            self.num = q;
            self.three_exp -= 1;
        }
    }

    pub fn zero() -> Self {
        ExactScalar {
            num: BigInt::zero(),
            two_exp: 0,
            three_exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(v: i64) -> Self {
        ExactScalar {
            num: BigInt::from(v),
            two_exp: 0,
            three_exp: 0,
        }
    }

    pub fn from_bigint(v: BigInt) -> Self {
        ExactScalar {
            num: v,
            two_exp: 0,
            three_exp: 0,
        }
    }

    /// `num / 2^exp`
    pub fn dyadic(num: impl Into<BigInt>, exp: u32) -> Self {
        Self::new(num.into(), exp, 0)
    }

    /// `2^k` for any signed exponent.
    pub fn pow2(k: i64) -> Self {
        if k >= 0 {
            Self::from_bigint(pow2(k as u64))
        } else {
            ExactScalar {
                num: BigInt::one(),
                two_exp: (-k) as u32,
                three_exp: 0,
            }
        }
    }

    /// `num / 3`
    pub fn thirds(num: i64) -> Self {
        Self::new(BigInt::from(num), 0, 1)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn two_exp(&self) -> u32 {
        self.two_exp
    }

    pub fn three_exp(&self) -> u32 {
        self.three_exp
    }

    pub fn denominator(&self) -> BigInt {
        pow2(self.two_exp as u64) * pow3(self.three_exp)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.two_exp == 0 && self.three_exp == 0
    }

    pub fn is_dyadic(&self) -> bool {
        self.three_exp == 0
    }

    /// Dyadic at precision `p`, i.e. a member of `{m / 2^p}`.
    pub fn is_dyadic_at(&self, p: u32) -> bool {
        self.three_exp == 0 && self.two_exp <= p
    }

    pub fn abs(&self) -> Self {
        ExactScalar {
            num: self.num.abs(),
            two_exp: self.two_exp,
            three_exp: self.three_exp,
        }
    }

    /// Multiply by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            let k = k as u64;
            if k <= self.two_exp as u64 {
                ExactScalar {
                    num: self.num.clone(),
                    two_exp: self.two_exp - k as u32,
                    three_exp: self.three_exp,
                }
            } else {
                ExactScalar {
                    num: &self.num << (k - self.two_exp as u64),
                    two_exp: 0,
                    three_exp: self.three_exp,
                }
            }
        } else {
            Self::new(self.num.clone(), self.two_exp + (-k) as u32, self.three_exp)
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.denominator())
    }

    pub fn ceil(&self) -> BigInt {
        -((-self.num.clone()).div_floor(&self.denominator()))
    }

    /// Largest dyadic rational of precision `p` not exceeding the value.
    pub fn floor_dyadic(&self, p: u32) -> Self {
        Self::dyadic(self.mul_pow2(p as i64).floor(), p)
    }

    /// Smallest dyadic rational of precision `p` not below the value.
    pub fn ceil_dyadic(&self, p: u32) -> Self {
        Self::dyadic(self.mul_pow2(p as i64).ceil(), p)
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.denominator())
    }

    /// Converts a rational whose reduced denominator is `2^b·3^a`; `None` otherwise.
    pub fn from_ratio(r: &BigRational) -> Option<Self> {
        let mut den = r.denom().clone();
        let two_exp = den.trailing_zeros().unwrap_or(0);
        den >>= two_exp;
        let three = BigInt::from(3u8);
        let mut three_exp = 0u32;
        loop {
            let (q, rem) = den.div_rem(&three);
            if !rem.is_zero() {
                break;
            }
            den = q;
            three_exp += 1;
        }
        if !den.is_one() {
            return None;
        }
        Some(Self::new(r.numer().clone(), two_exp as u32, three_exp))
    }

    /// Lossy decimal view for plot output only.
    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.to_ratio().to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn aligned(&self, two: u32, three: u32) -> BigInt {
        let mut n = &self.num << (two - self.two_exp) as u64;
        if three > self.three_exp {
            n *= pow3(three - self.three_exp);
        }
        n
    }
}

impl Default for ExactScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for ExactScalar {
    fn from(v: i64) -> Self {
        Self::from_int(v)
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let two = self.two_exp.max(other.two_exp);
        let three = self.three_exp.max(other.three_exp);
        self.aligned(two, three).cmp(&other.aligned(two, three))
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let two = self.two_exp.max(rhs.two_exp);
        let three = self.three_exp.max(rhs.three_exp);
        ExactScalar::new(
            self.aligned(two, three) + rhs.aligned(two, three),
            two,
            three,
        )
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        self + &(-rhs)
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar::new(
            &self.num * &rhs.num,
            self.two_exp + rhs.two_exp,
            self.three_exp + rhs.three_exp,
        )
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            num: -self.num.clone(),
            two_exp: self.two_exp,
            three_exp: self.three_exp,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(mut self) -> ExactScalar {
        self.num = -self.num;
        self
    }
}

impl std::iter::Sum for ExactScalar {
    fn sum<I: Iterator<Item = ExactScalar>>(iter: I) -> Self {
        iter.fold(ExactScalar::zero(), |a, b| a + b)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.denominator())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarRepr {
    num: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    den: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    two_exp: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    third: Option<u32>,
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScalarRepr {
            num: self.num.to_string(),
            den: Some(self.denominator().to_string()),
            two_exp: Some(self.two_exp),
            third: Some(self.three_exp),
        }
        .serialize(s)
    }
}

/// Accepts `{num, two_exp, third}` or `{num, den}`; when both are given they must agree.
impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ScalarRepr::deserialize(d)?;
        let num: BigInt = repr
            .num
            .parse()
            .map_err(|_| D::Error::custom(format!("invalid integer {:?}", repr.num)))?;
        let from_den = match &repr.den {
            Some(den) => {
                let den: BigInt = den
                    .parse()
                    .map_err(|_| D::Error::custom(format!("invalid integer {den:?}")))?;
                if den.is_zero() {
                    return Err(D::Error::custom("zero denominator"));
                }
                let r = BigRational::new(num.clone(), den);
                Some(ExactScalar::from_ratio(&r).ok_or_else(|| {
                    D::Error::custom(format!("{r} is not of the form a/(2^b 3^c)"))
                })?)
            }
            None => None,
        };
        let from_exps = match (repr.two_exp, repr.third) {
            (None, None) => None,
            (b, a) => Some(ExactScalar::new(
                num.clone(),
                b.unwrap_or(0),
                a.unwrap_or(0),
            )),
        };
        match (from_den, from_exps) {
            (Some(x), Some(y)) if x != y => {
                Err(D::Error::custom("den disagrees with two_exp/third"))
            }
            (Some(x), _) | (None, Some(x)) => Ok(x),
            (None, None) => Ok(ExactScalar::from_bigint(num)),
        }
    }
}

/// Parses `"a/b"`, `"a"` into a rational.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().ok()?;
            let b: BigInt = b.trim().parse().ok()?;
            if b.is_zero() {
                return None;
            }
            Some(BigRational::new(a, b))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// `{num, den}` decimal-string rendering of a rational used by every output record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioJson {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RatioJson {
    fn from(r: &BigRational) -> Self {
        RatioJson {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl From<&ExactScalar> for RatioJson {
    fn from(s: &ExactScalar) -> Self {
        (&s.to_ratio()).into()
    }
}
