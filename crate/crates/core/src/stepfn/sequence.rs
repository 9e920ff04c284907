//! L1-computable functions given by step approximants converging at rate `2^{-m}`.

use std::fmt::Debug;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimpleStepFunction;
use crate::dyadic::{DyadicCube, Point};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::ExactScalar;

/// A sequence `f_0, f_1, …` of simple step functions with `‖f − f_m‖₁ ≤ 2^{-m}`
/// and endpoints of `f_m` at precision `precision().eval(m)`.
pub trait StepSequence: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn approximant(&self, m: u32) -> Result<SimpleStepFunction>;

    fn precision(&self) -> Poly;

    /// `f_{m+1} − f_m`
    fn increment(&self, m: u32) -> Result<SimpleStepFunction> {
        Ok(self.approximant(m + 1)?.sub(&self.approximant(m)?))
    }

    /// An index `N` with `f_m = f_N` for every `m ≥ N`, when known.
    fn stabilizes_after(&self) -> Option<u32> {
        None
    }
}

impl<S: StepSequence + ?Sized> StepSequence for Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn approximant(&self, m: u32) -> Result<SimpleStepFunction> {
        (**self).approximant(m)
    }
    fn precision(&self) -> Poly {
        (**self).precision()
    }
    fn increment(&self, m: u32) -> Result<SimpleStepFunction> {
        (**self).increment(m)
    }
    fn stabilizes_after(&self) -> Option<u32> {
        (**self).stabilizes_after()
    }
}

#[derive(Clone, Debug)]
pub struct ConstantSequence {
    f: SimpleStepFunction,
}

impl ConstantSequence {
    pub fn new(f: SimpleStepFunction) -> Self {
        ConstantSequence { f }
    }
}

impl StepSequence for ConstantSequence {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn approximant(&self, _m: u32) -> Result<SimpleStepFunction> {
        Ok(self.f.clone())
    }
    fn precision(&self) -> Poly {
        Poly::constant(self.f.precision() as u64)
    }
    fn increment(&self, _m: u32) -> Result<SimpleStepFunction> {
        Ok(SimpleStepFunction::zero(self.f.dim()))
    }
    fn stabilizes_after(&self) -> Option<u32> {
        Some(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Every bump is the dyadic cube containing this point.
    Nested(Point),
    /// Bump anchors drawn from a ChaCha stream per bump index.
    Seeded(u64),
}

/// `f = Σ_j 2^h χ_{B_j}` where `B_j` is a dyadic cube of side `2^{-s_j}`,
/// `s_j = ⌈(j + 1 + h)/n⌉`, so that bump `j` has mass at most `2^{-j-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BumpSequence {
    dim: usize,
    height_bits: u32,
    placement: Placement,
    count: Option<u32>,
}

impl BumpSequence {
    pub fn new(
        dim: usize,
        height_bits: u32,
        placement: Placement,
        count: Option<u32>,
    ) -> Result<Self> {
        crate::dyadic::check_dim(dim, crate::dyadic::DEFAULT_MAX_DIM)?;
        if let Placement::Nested(x) = &placement {
            if x.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: x.dim(),
                });
            }
            let one = num_rational::BigRational::from_integer(1.into());
            if x.coords().iter().any(|c| *c >= one) || !x.in_unit_cube() {
                return Err(Error::InvalidInput(format!(
                    "bump center {x} outside [0,1)^n"
                )));
            }
        }
        Ok(BumpSequence {
            dim,
            height_bits,
            placement,
            count,
        })
    }

    pub fn nested(x: Point, height_bits: u32) -> Result<Self> {
        let n = x.dim();
        Self::new(n, height_bits, Placement::Nested(x), None)
    }

    pub fn seeded(dim: usize, seed: u64, count: Option<u32>) -> Result<Self> {
        Self::new(dim, 0, Placement::Seeded(seed), count)
    }

    pub fn side_exponent(&self, j: u32) -> u32 {
        let n = self.dim as u32;
        (j + 1 + self.height_bits).div_ceil(n)
    }

    pub fn height(&self) -> ExactScalar {
        ExactScalar::pow2(self.height_bits as i64)
    }

    pub fn bump_count(&self) -> Option<u32> {
        self.count
    }

    pub fn bump(&self, j: u32) -> DyadicCube {
        let s = self.side_exponent(j);
        let anchor: Vec<BigInt> = match &self.placement {
            Placement::Nested(x) => crate::dyadic::locate_cube(x, s)
                .expect("validated center")
                .anchor
                .clone(),
            Placement::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(j as u64);
                (0..self.dim)
                    .map(|_| {
                        let mut u = BigInt::from(0);
                        let mut left = s;
                        while left > 0 {
                            let take = left.min(32);
                            u = (u << take) + BigInt::from(rng.gen::<u32>() >> (32 - take));
                            left -= take;
                        }
                        u
                    })
                    .collect()
            }
        };
        DyadicCube::new(s, anchor, crate::dyadic::ClosureMode::Open)
    }

    fn live(&self, j: u32) -> bool {
        self.count.is_none_or(|c| j < c)
    }
}

impl StepSequence for BumpSequence {
    fn dim(&self) -> usize {
        self.dim
    }

    fn approximant(&self, m: u32) -> Result<SimpleStepFunction> {
        let h = self.height();
        let terms = (0..m)
            .filter(|j| self.live(*j))
            .map(|j| (self.bump(j).to_open_box(), h.clone()))
            .collect();
        SimpleStepFunction::from_terms(self.dim, terms)
    }

    fn precision(&self) -> Poly {
        Poly::linear(1 + self.height_bits as u64, 1)
    }

    fn increment(&self, m: u32) -> Result<SimpleStepFunction> {
        if !self.live(m) {
            return Ok(SimpleStepFunction::zero(self.dim));
        }
        SimpleStepFunction::from_terms(self.dim, vec![(self.bump(m).to_open_box(), self.height())])
    }

    fn stabilizes_after(&self) -> Option<u32> {
        self.count
    }
}

/// JSON description of a built-in sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceSpec {
    Constant {
        function: SimpleStepFunction,
    },
    Bumps {
        dim: usize,
        #[serde(default)]
        height_bits: u32,
        placement: Placement,
        #[serde(default)]
        count: Option<u32>,
    },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<Arc<dyn StepSequence>> {
        Ok(match self {
            SequenceSpec::Constant { function } => {
                Arc::new(ConstantSequence::new(function.clone()))
            }
            SequenceSpec::Bumps {
                dim,
                height_bits,
                placement,
                count,
            } => Arc::new(BumpSequence::new(
                *dim,
                *height_bits,
                placement.clone(),
                *count,
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRow {
    pub m: u32,
    pub gap: ExactScalar,
    /// `2^{-m} + 2^{-m-1}`
    pub bound: ExactScalar,
    pub precision: u32,
    pub declared_precision: u64,
}

/// Checks `‖f_m − f_{m+1}‖₁ ≤ 2^{-m} + 2^{-m-1}` and the declared endpoint precision for `m < m_max`.
pub fn check_gap_certificates(seq: &dyn StepSequence, m_max: u32) -> Result<Vec<GapRow>> {
    let p = seq.precision();
    let mut rows = Vec::new();
    for m in 0..m_max {
        let gap = seq.increment(m)?.l1_norm();
        let bound = &ExactScalar::pow2(-(m as i64)) + &ExactScalar::pow2(-(m as i64) - 1);
        let fm = seq.approximant(m)?;
        let row = GapRow {
            m,
            gap,
            bound,
            precision: fm.precision(),
            declared_precision: p.eval(m as u64),
        };
        if row.gap > row.bound {
            return Err(Error::Invariant(format!(
                "gap certificate fails at m={m}: {} > {}",
                row.gap, row.bound
            )));
        }
        if row.precision as u64 > row.declared_precision {
            return Err(Error::Invariant(format!(
                "f_{m} has endpoint precision {} above declared {}",
                row.precision, row.declared_precision
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepfn::Evaluation;

    #[test]
    fn nested_bumps_contain_center() {
        let x = Point::from_fracs(&[(1, 3), (1, 3)]);
        let seq = BumpSequence::nested(x.clone(), 0).unwrap();
        for j in 0..8 {
            assert!(seq.bump(j).to_open_box().contains_point(&x));
            assert!(seq.bump(j).measure() <= ExactScalar::pow2(-(j as i64) - 1));
        }
        let f = seq.approximant(6).unwrap();
        assert_eq!(
            f.evaluate(&x).unwrap(),
            Evaluation::Value(ExactScalar::from_int(6))
        );
    }

    #[test]
    fn increments_match_differences() {
        let seq = BumpSequence::seeded(2, 7, Some(5)).unwrap();
        for m in 0..7 {
            let direct = seq
                .approximant(m + 1)
                .unwrap()
                .sub(&seq.approximant(m).unwrap());
            assert_eq!(
                direct.l1_distance(&seq.increment(m).unwrap()),
                ExactScalar::zero()
            );
        }
        assert!(seq.increment(5).unwrap().pieces().is_empty());
    }

    #[test]
    fn gap_certificates_hold() {
        let seq = BumpSequence::seeded(1, 3, None).unwrap();
        let rows = check_gap_certificates(&seq, 8).unwrap();
        assert_eq!(rows.len(), 8);
        let nested = BumpSequence::nested(Point::from_fracs(&[(1, 5), (2, 7)]), 2).unwrap();
        check_gap_certificates(&nested, 8).unwrap();
    }

    #[test]
    fn seeded_is_deterministic() {
        let a = BumpSequence::seeded(2, 11, None).unwrap();
        let b = BumpSequence::seeded(2, 11, None).unwrap();
        for j in 0..6 {
            assert_eq!(a.bump(j), b.bump(j));
            assert!(a.bump(j).in_unit_partition());
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = SequenceSpec::Bumps {
            dim: 2,
            height_bits: 1,
            placement: Placement::Nested(Point::from_fracs(&[(1, 3), (1, 3)])),
            count: Some(4),
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: SequenceSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
        assert_eq!(back.build().unwrap().dim(), 2);
    }
}
