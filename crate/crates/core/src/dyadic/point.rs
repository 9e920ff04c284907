use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{parse_ratio, ExactScalar};

/// Probe point with arbitrary rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    coords: Vec<BigRational>,
}

impl Point {
    pub fn new(coords: Vec<BigRational>) -> Self {
        Point { coords }
    }

    /// Builds a point from `(numerator, denominator)` pairs.
    pub fn from_fracs(fracs: &[(i64, i64)]) -> Self {
        Point {
            coords: fracs
                .iter()
                .map(|&(a, b)| BigRational::new(BigInt::from(a), BigInt::from(b)))
                .collect(),
        }
    }

    /// Parses a comma separated list such as `"1/3,1/5"`.
    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|c| {
                parse_ratio(c).ok_or_else(|| Error::InvalidInput(format!("bad coordinate {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(Error::InvalidInput("empty point".into()));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> &BigRational {
        &self.coords[axis]
    }

    pub fn in_unit_cube(&self) -> bool {
        let one = BigRational::one();
        self.coords
            .iter()
            .all(|c| !c.is_negative_rat() && *c <= one)
    }

    /// Whether coordinate `axis` is a dyadic rational.
    pub fn is_dyadic_coord(&self, axis: usize) -> bool {
        let d = self.coords[axis].denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        (d >> tz).is_one()
    }

    pub fn has_dyadic_coord(&self) -> bool {
        (0..self.dim()).any(|i| self.is_dyadic_coord(i))
    }
}

trait RatExt {
    fn is_negative_rat(&self) -> bool;
}

impl RatExt for BigRational {
    fn is_negative_rat(&self) -> bool {
        *self < BigRational::zero()
    }
}

/// Exact comparison of a rational against a scalar without normalizing either.
pub fn cmp_ratio_scalar(r: &BigRational, s: &ExactScalar) -> Ordering {
    (r.numer() * s.denominator()).cmp(&(s.numerator() * r.denom()))
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let coords = v
            .iter()
            .map(|c| {
                parse_ratio(c)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad coordinate {c:?}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Point { coords })
    }
}
