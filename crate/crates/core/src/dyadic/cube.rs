use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::boxes::{AxisBox, Interval};
use super::point::Point;
use crate::error::{Error, Result};
use crate::scalar::{pow2, ExactScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureMode {
    /// `∏[u_i 2^-r, (u_i+1) 2^-r)`
    HalfOpenLowerClosed,
    Open,
}

/// Dyadic cube of precision `r` anchored at the integer vector `u`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub precision: u32,
    #[serde(with = "bigint_vec")]
    pub anchor: Vec<BigInt>,
    pub mode: ClosureMode,
}

pub(crate) mod bigint_vec {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|x| {
                x.parse()
                    .map_err(|_| serde::de::Error::custom(format!("bad integer {x:?}")))
            })
            .collect()
    }
}

impl DyadicCube {
    pub fn new(precision: u32, anchor: Vec<BigInt>, mode: ClosureMode) -> Self {
        DyadicCube {
            precision,
            anchor,
            mode,
        }
    }

    pub fn half_open(precision: u32, anchor: &[i64]) -> Self {
        Self::new(
            precision,
            anchor.iter().map(|&a| BigInt::from(a)).collect(),
            ClosureMode::HalfOpenLowerClosed,
        )
    }

    pub fn open(precision: u32, anchor: &[i64]) -> Self {
        Self::new(
            precision,
            anchor.iter().map(|&a| BigInt::from(a)).collect(),
            ClosureMode::Open,
        )
    }

    pub fn root(n: usize) -> Self {
        Self::new(0, vec![BigInt::zero(); n], ClosureMode::HalfOpenLowerClosed)
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// `2^{-rn}` in either closure mode.
    pub fn measure(&self) -> ExactScalar {
        ExactScalar::pow2(-(self.precision as i64) * self.dim() as i64)
    }

    /// `log2(1/μ)`, i.e. `r·n`.
    pub fn mass_exponent(&self) -> u64 {
        self.precision as u64 * self.dim() as u64
    }

    pub fn to_box(&self) -> AxisBox {
        let closed_lo = self.mode == ClosureMode::HalfOpenLowerClosed;
        AxisBox::from_axes_unchecked(
            self.anchor
                .iter()
                .map(|u| Interval {
                    lo: ExactScalar::dyadic(u.clone(), self.precision),
                    hi: ExactScalar::dyadic(u + 1, self.precision),
                    lo_closed: closed_lo,
                    hi_closed: false,
                })
                .collect(),
        )
    }

    pub fn to_open_box(&self) -> AxisBox {
        self.to_box().with_all_open()
    }

    /// Anchors lie in `{0, …, 2^r − 1}^n`.
    pub fn in_unit_partition(&self) -> bool {
        let side = pow2(self.precision as u64);
        self.anchor
            .iter()
            .all(|u| !u.is_negative_int() && *u < side)
    }

    /// Whether `other ⊆ self` (as closed cubes).
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        if other.precision < self.precision || other.dim() != self.dim() {
            return false;
        }
        let shift = (other.precision - self.precision) as u64;
        self.anchor
            .iter()
            .zip(&other.anchor)
            .all(|(a, b)| &(b >> shift) == a)
    }

    /// Interiors are disjoint.
    pub fn disjoint_from(&self, other: &DyadicCube) -> bool {
        !self.contains_cube(other) && !other.contains_cube(self)
    }

    /// The `2^n` cubes of precision `r+1` inside this one, ordered by `a ∈ {0,1}^n` as a binary number.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        (0..(1usize << n))
            .map(|bits| {
                DyadicCube::new(
                    self.precision + 1,
                    self.anchor
                        .iter()
                        .enumerate()
                        .map(|(i, u)| (u << 1u32) + BigInt::from((bits >> (n - 1 - i)) & 1))
                        .collect(),
                    self.mode,
                )
            })
            .collect()
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.anchor
                .iter()
                .map(|u| BigRational::new(2 * u + 1, pow2(self.precision as u64 + 1)))
                .collect(),
        )
    }

    /// All cubes of precision `r` in the unit partition, in lexicographic anchor order.
    pub fn enumerate(r: u32, n: usize) -> impl Iterator<Item = DyadicCube> {
        let side: u64 = 1u64 << r;
        let total = side.pow(n as u32);
        (0..total).map(move |mut idx| {
            let mut anchor = vec![BigInt::zero(); n];
            for i in (0..n).rev() {
                anchor[i] = BigInt::from(idx % side);
                idx /= side;
            }
            DyadicCube::new(r, anchor, ClosureMode::HalfOpenLowerClosed)
        })
    }
}

trait IntSign {
    fn is_negative_int(&self) -> bool;
}

impl IntSign for BigInt {
    fn is_negative_int(&self) -> bool {
        *self < BigInt::zero()
    }
}

fn floor_scaled(x: &BigRational, r: u32) -> (BigInt, bool) {
    let scaled = x * BigRational::from_integer(pow2(r as u64));
    let (q, rem) = scaled.numer().div_mod_floor(scaled.denom());
    (q, rem.is_zero())
}

/// The half-open cube `Q_r(u)` containing `x ∈ [0,1)^n`.
pub fn locate_cube(x: &Point, r: u32) -> Result<DyadicCube> {
    let one = BigRational::one();
    let zero = BigRational::zero();
    let mut anchor = Vec::with_capacity(x.dim());
    for (axis, c) in x.coords().iter().enumerate() {
        if *c < zero || *c >= one {
            return Err(Error::OutOfPartition { axis });
        }
        anchor.push(floor_scaled(c, r).0);
    }
    Ok(DyadicCube::new(r, anchor, ClosureMode::HalfOpenLowerClosed))
}

/// A component of a translation vector in `{−1/3, 0, 1/3}^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shift {
    #[serde(rename = "-1/3")]
    MinusThird,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1/3")]
    PlusThird,
}

impl Shift {
    pub fn value(self) -> ExactScalar {
        match self {
            Shift::MinusThird => ExactScalar::thirds(-1),
            Shift::Zero => ExactScalar::zero(),
            Shift::PlusThird => ExactScalar::thirds(1),
        }
    }

    pub fn ratio(self) -> BigRational {
        self.value().to_ratio()
    }

    /// All `3^n` translation vectors.
    pub fn all(n: usize) -> Vec<Vec<Shift>> {
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    [Shift::MinusThird, Shift::Zero, Shift::PlusThird]
                        .into_iter()
                        .map(move |s| {
                            let mut v = prefix.clone();
                            v.push(s);
                            v
                        })
                })
                .collect();
        }
        out
    }

    pub fn values(shift: &[Shift]) -> Vec<ExactScalar> {
        shift.iter().map(|s| s.value()).collect()
    }
}

/// `t + Q` for a dyadic cube `Q` and `t ∈ {−1/3, 0, 1/3}^n`; not clipped to the unit cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranslatedCube {
    pub base: DyadicCube,
    pub shift: Vec<Shift>,
}

impl TranslatedCube {
    pub fn to_box(&self) -> AxisBox {
        self.base.to_box().translate(&Shift::values(&self.shift))
    }

    pub fn measure(&self) -> ExactScalar {
        self.base.measure()
    }
}

/// How a point lying exactly on a translated face is resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Faces of third-shifted axes are boundary errors; zero-shift axes
    /// follow the lower-closed convention of `locate_cube`.
    #[default]
    Strict,
    /// Use the lower-closed half-open translate, as for `Q_r(u)`.
    LowerClosed,
}

/// The unique open translate `I^t_r(x)` containing `x`.
pub fn locate_translated(x: &Point, r: u32, t: &[Shift]) -> Result<TranslatedCube> {
    locate_translated_with(x, r, t, TiePolicy::Strict)
}

pub fn locate_translated_with(
    x: &Point,
    r: u32,
    t: &[Shift],
    policy: TiePolicy,
) -> Result<TranslatedCube> {
    if t.len() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: t.len(),
        });
    }
    let mut anchor = Vec::with_capacity(x.dim());
    let mut tie = false;
    for (axis, (c, s)) in x.coords().iter().zip(t).enumerate() {
        let (u, exact) = floor_scaled(&(c - s.ratio()), r);
        if exact {
            if policy == TiePolicy::Strict && *s != Shift::Zero {
                return Err(Error::Boundary { axis });
            }
            tie = true;
        }
        anchor.push(u);
    }
    let zero_shift = t.iter().all(|s| *s == Shift::Zero);
    let mode = if tie || zero_shift || policy == TiePolicy::LowerClosed {
        ClosureMode::HalfOpenLowerClosed
    } else {
        ClosureMode::Open
    };
    Ok(TranslatedCube {
        base: DyadicCube::new(r, anchor, mode),
        shift: t.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchors(c: &DyadicCube) -> Vec<i64> {
        use num_traits::ToPrimitive;
        c.anchor.iter().map(|a| a.to_i64().unwrap()).collect()
    }

    #[test]
    fn locate_examples() {
        let c = locate_cube(&Point::from_fracs(&[(1, 3), (1, 3)]), 1).unwrap();
        assert_eq!(anchors(&c), vec![0, 0]);
        let c = locate_cube(&Point::from_fracs(&[(1, 2)]), 1).unwrap();
        assert_eq!(anchors(&c), vec![1]);
        let c = locate_cube(&Point::from_fracs(&[(5, 7), (2, 7)]), 3).unwrap();
        assert_eq!(anchors(&c), vec![5, 2]);
    }

    #[test]
    fn upper_endpoint_rejected() {
        let e = locate_cube(&Point::from_fracs(&[(1, 3), (1, 1)]), 2).unwrap_err();
        assert_eq!(e, Error::OutOfPartition { axis: 1 });
    }

    #[test]
    fn translated_examples() {
        let c = locate_translated(&Point::from_fracs(&[(2, 5)]), 1, &[Shift::PlusThird]).unwrap();
        let b = c.to_box();
        assert_eq!(b.lo(0), &ExactScalar::thirds(1));
        assert_eq!(b.hi(0).to_ratio(), BigRational::new(5.into(), 6.into()));

        let c = locate_translated(&Point::from_fracs(&[(1, 4)]), 2, &[Shift::Zero]).unwrap();
        assert_eq!(anchors(&c.base), vec![1]);

        let e =
            locate_translated(&Point::from_fracs(&[(1, 3)]), 4, &[Shift::PlusThird]).unwrap_err();
        assert_eq!(e, Error::Boundary { axis: 0 });
    }

    #[test]
    fn lower_closed_tie_policy() {
        let c = locate_translated_with(
            &Point::from_fracs(&[(1, 3)]),
            4,
            &[Shift::PlusThird],
            TiePolicy::LowerClosed,
        )
        .unwrap();
        let b = c.to_box();
        assert_eq!(b.lo(0), &ExactScalar::thirds(1));
        assert!(b.contains_point(&Point::from_fracs(&[(1, 3)])));
    }

    #[test]
    fn children_average_structure() {
        let q = DyadicCube::half_open(1, &[1, 0]);
        let kids = q.children();
        assert_eq!(kids.len(), 4);
        assert_eq!(anchors(&kids[0]), vec![2, 0]);
        assert_eq!(anchors(&kids[3]), vec![3, 1]);
        for k in &kids {
            assert!(q.contains_cube(k));
        }
        assert!(kids[0].disjoint_from(&kids[1]));
    }

    #[test]
    fn shift_family_size() {
        assert_eq!(Shift::all(2).len(), 9);
        assert_eq!(Shift::all(3).len(), 27);
    }
}
