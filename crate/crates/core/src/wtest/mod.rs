//! W-tests: sequences `U_m = ∪_{i ≥ q(m)} V_i` with `μ(U_m) ≤ 2^{-m}` and their
//! uniformly approximating arrays `S^k_m`.

mod families;

use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::dyadic::{AxisBox, BoxUnion, DyadicCube, Interval, Membership, Point};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::ExactScalar;
use crate::stepfn::{hardy_littlewood_default, SequenceSpec, StepSequence};

pub use families::{
    AvoidanceFamily, CauchyGapFamily, MaximalGapFamily, PointTrapFamily, TermFamily, TierApprox,
    GAP_CHECK_PREFIX, MAXIMAL_REFERENCE_EXTRA,
};

/// Terms materialized past `q(m)` by default when a finite prefix is needed.
pub const DEFAULT_PREFIX_TERMS: u32 = 8;

/// Cap (log2) on cell enumeration in the cell-center measure estimate.
pub const ESTIMATE_CELL_CAP_LOG2: u64 = 20;

/// JSON description of a test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestSpec {
    /// `axis` is one-based.
    Avoidance {
        n: usize,
        axis: usize,
    },
    CauchyGap {
        sequence: SequenceSpec,
    },
    MaximalGap {
        sequence: SequenceSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<u64>,
    },
    Custom {
        centers: Vec<Point>,
    },
}

impl TestSpec {
    pub fn build(&self) -> Result<WTest> {
        let mut w = match self {
            TestSpec::Avoidance { n, axis } => WTest::avoidance(*n, *axis)?,
            TestSpec::CauchyGap { sequence } => WTest::cauchy_gap(sequence.build()?)?,
            TestSpec::MaximalGap { sequence, c } => {
                let seq = sequence.build()?;
                let c = c.unwrap_or_else(|| hardy_littlewood_default(seq.dim()));
                WTest::maximal_gap(seq, c)?
            }
            TestSpec::Custom { centers } => WTest::point_trap(centers.clone())?,
        };
        w.spec = Some(self.clone());
        Ok(w)
    }
}

/// How `S^k_m` is assembled from the terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ArrayRule {
    /// `S^k_m = ∪_{i=q(m)}^{k + upper_offset} V_i`
    Union { upper_offset: i64 },
    /// `S^k_m = ∪_{i=q(m)}^{k+j+1} A^{2k+2}_i` where `μ(V_i) ≤ 2^{-i+j}`.
    Tail { j: u32 },
}

#[derive(Clone, Debug)]
pub struct WTest {
    spec: Option<TestSpec>,
    family: Arc<dyn TermFamily>,
    offset: u32,
    rule: ArrayRule,
    array_poly: Poly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedMeasure {
    pub m: u32,
    pub first_term: u32,
    pub last_term: u32,
    /// Exact measure of the materialized prefix, or the sum of per-term bounds.
    pub prefix: ExactScalar,
    pub prefix_exact: bool,
    pub tail: ExactScalar,
    pub upper: ExactScalar,
    pub target: ExactScalar,
    pub within_target: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayDefect {
    pub k: u32,
    pub m: u32,
    pub last_term: u32,
    /// `μ(prefix Δ S^k_m)`, exact.
    pub prefix_sym_diff: ExactScalar,
    /// The construction's guarantee on `μ(U_m Δ S^k_m)`.
    pub guaranteed: ExactScalar,
    pub target: ExactScalar,
    pub within_target: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Coverage {
    /// `x` is interior to a materialized constituent of `U_m`.
    CoveredCertified {
        term: u32,
    },
    NotCoveredAtTier {
        tier: u32,
        last_term: u32,
        certificate: String,
    },
    Unknown {
        tier: u32,
        last_term: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateRoute {
    /// Exact measure of `S^s_m ∩ Q`.
    #[default]
    Array,
    /// Classify the centers of the precision-`p(s+m)` cells of `Q` against `S^s_m`.
    CellCenters,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: ExactScalar,
    pub route: EstimateRoute,
    pub tier: u32,
    pub cells: Option<u64>,
    pub error_bound: ExactScalar,
}

fn ceil_log2(c: u64) -> u32 {
    c.next_power_of_two().trailing_zeros()
}

/// `∪_{i=first}^{last} V_i`
pub fn union_array(family: &dyn TermFamily, first: u32, last: i64) -> Result<BoxUnion> {
    let mut u = BoxUnion::empty(family.dim());
    let mut i = first as i64;
    while i <= last {
        u.extend(family.term(i as u32)?);
        i += 1;
    }
    Ok(u)
}

/// `∪_{i=first}^{k+j+1}` of the tier-`2k+2` approximants.
pub fn tail_array(family: &dyn TermFamily, first: u32, j: u32, k: u32) -> Result<BoxUnion> {
    let mut u = BoxUnion::empty(family.dim());
    for i in first..=(k + j + 1) {
        u.extend(family.term_tier(i, 2 * k + 2)?);
    }
    Ok(u)
}

/// Closed box of side `3·2^{-r}` whose interior contains `x`.
pub fn neighborhood(x: &Point, r: u32) -> AxisBox {
    let step = ExactScalar::pow2(-(r as i64));
    let axes = x
        .coords()
        .iter()
        .map(|c| {
            let scaled = c * BigInt::from(2).pow(r);
            let a = ExactScalar::dyadic(scaled.floor().to_integer(), r);
            let mut iv = Interval::open(&a - &step, &(&a + &step) + &step);
            iv.lo_closed = true;
            iv.hi_closed = true;
            iv
        })
        .collect();
    AxisBox::new(axes).expect("valid neighborhood")
}

impl WTest {
    fn build(
        family: Arc<dyn TermFamily>,
        offset: u32,
        rule: ArrayRule,
        array_poly: Poly,
    ) -> Result<Self> {
        let w = WTest {
            spec: None,
            family,
            offset,
            rule,
            array_poly,
        };
        w.check_rule()?;
        Ok(w)
    }

    /// Static check of the array guarantee and the per-term tail bounds.
    fn check_rule(&self) -> Result<()> {
        match self.rule {
            ArrayRule::Union { .. } => {
                for k in 0..24 {
                    if self.guaranteed_defect(k, 0) > ExactScalar::pow2(-(k as i64)) {
                        return Err(Error::Invariant(format!(
                            "array guarantee fails at tier {k}"
                        )));
                    }
                }
            }
            ArrayRule::Tail { j } => {
                let q0 = self.start(0);
                for i in q0..q0 + 4 {
                    let b = self.family.term_bound(i)?;
                    if b > ExactScalar::pow2(j as i64 - i as i64) {
                        return Err(Error::InvalidInput(format!(
                            "term {i} bound {b} exceeds 2^(-{i}+{j})"
                        )));
                    }
                }
            }
        }
        for m in 0..8 {
            if self.family.tail_bound(self.start(m)) > ExactScalar::pow2(-(m as i64)) {
                return Err(Error::Invariant(format!(
                    "tail bound of U_{m} exceeds 2^-{m}"
                )));
            }
        }
        Ok(())
    }

    /// Dyadic avoidance test on a one-based `axis`.
    pub fn avoidance(n: usize, axis: usize) -> Result<Self> {
        if axis == 0 {
            return Err(Error::InvalidInput("axis is one-based".into()));
        }
        let fam = AvoidanceFamily::new(n, axis - 1)?;
        let mut w = Self::build(
            Arc::new(fam),
            0,
            ArrayRule::Union { upper_offset: -1 },
            Poly::linear(0, 2),
        )?;
        w.spec = Some(TestSpec::Avoidance { n, axis });
        Ok(w)
    }

    /// Chebyshev test on the consecutive gaps of an L1-computable function.
    pub fn cauchy_gap(seq: Arc<dyn StepSequence>) -> Result<Self> {
        let poly = seq.precision().compose(&Poly::linear(7, 2));
        Self::build(
            Arc::new(CauchyGapFamily::new(seq)?),
            4,
            ArrayRule::Union { upper_offset: 3 },
            poly,
        )
    }

    /// Maximal-function test with constant `c`; `U_m` starts at `m + 4 + c`.
    pub fn maximal_gap(seq: Arc<dyn StepSequence>, c: u64) -> Result<Self> {
        let n = seq.dim() as u64;
        let j = 3 + ceil_log2(c);
        let p = seq.precision();
        let poly = p
            .compose(&Poly::linear(2 * j as u64 + 3, 2))
            .add(&Poly::linear(n + 7, 4));
        let offset =
            u32::try_from(4 + c).map_err(|_| Error::InvalidInput("constant c too large".into()))?;
        Self::build(
            Arc::new(MaximalGapFamily::new(seq, c)?),
            offset,
            ArrayRule::Tail { j },
            poly,
        )
    }

    /// Nested cubes shrinking to each center.
    pub fn point_trap(centers: Vec<Point>) -> Result<Self> {
        let fam = PointTrapFamily::new(centers.clone())?;
        let l = fam.side_exponent(0) as u64 * fam.centers()[0].dim() as u64;
        let mut w = Self::build(
            Arc::new(fam),
            0,
            ArrayRule::Union { upper_offset: -1 },
            Poly::linear(l, 1),
        )?;
        w.spec = Some(TestSpec::Custom { centers });
        Ok(w)
    }

    pub fn spec(&self) -> Option<&TestSpec> {
        self.spec.as_ref()
    }

    pub fn family(&self) -> &dyn TermFamily {
        self.family.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn rule(&self) -> ArrayRule {
        self.rule
    }

    /// `q(m)`: first term index of `U_m`.
    pub fn start(&self, m: u32) -> u32 {
        m + self.offset
    }

    /// Endpoint precision polynomial `p` with `S^k_m ⊂ 𝐃^n_{p(m+k)}`.
    pub fn array_precision(&self) -> &Poly {
        &self.array_poly
    }

    /// Term indices of `S^k_m` (empty range when the first exceeds the last).
    pub fn array_terms(&self, k: u32, m: u32) -> (u32, i64) {
        let last = match self.rule {
            ArrayRule::Union { upper_offset } => k as i64 + upper_offset,
            ArrayRule::Tail { j } => (k + j + 1) as i64,
        };
        (self.start(m), last)
    }

    pub fn array(&self, k: u32, m: u32) -> Result<BoxUnion> {
        let (first, last) = self.array_terms(k, m);
        match self.rule {
            ArrayRule::Union { .. } => union_array(self.family.as_ref(), first, last),
            ArrayRule::Tail { j } => tail_array(self.family.as_ref(), first, j, k),
        }
    }

    pub fn array_within(&self, k: u32, m: u32, region: &AxisBox) -> Result<BoxUnion> {
        let (first, last) = self.array_terms(k, m);
        let mut u = BoxUnion::empty(self.dim());
        let mut i = first as i64;
        while i <= last {
            let t = match self.rule {
                ArrayRule::Union { .. } => self.family.term_within(i as u32, region)?,
                ArrayRule::Tail { .. } => {
                    self.family.term_tier_within(i as u32, 2 * k + 2, region)?
                }
            };
            u.extend(t);
            i += 1;
        }
        Ok(u)
    }

    /// The construction's bound on `μ(U_m Δ S^k_m)`.
    pub fn guaranteed_defect(&self, k: u32, m: u32) -> ExactScalar {
        let (first, last) = self.array_terms(k, m);
        let after = (last + 1).max(first as i64) as u32;
        let tail = self.family.tail_bound(after);
        match self.rule {
            ArrayRule::Union { .. } => tail,
            ArrayRule::Tail { .. } => {
                let count = (last - first as i64 + 1).max(0);
                &ExactScalar::from_int(count).mul_pow2(-2 * k as i64 - 2) + &tail
            }
        }
    }

    fn last_live(&self, last: u32) -> u32 {
        self.family.horizon().map_or(last, |h| last.min(h))
    }

    /// `∪_{i=q(m)}^{last} term(i)`
    pub fn prefix(&self, m: u32, last: u32) -> Result<BoxUnion> {
        union_array(
            self.family.as_ref(),
            self.start(m),
            self.last_live(last) as i64,
        )
    }

    pub fn prefix_within(&self, m: u32, last: u32, region: &AxisBox) -> Result<BoxUnion> {
        let mut u = BoxUnion::empty(self.dim());
        for i in self.start(m)..=self.last_live(last) {
            u.extend(self.family.term_within(i, region)?);
        }
        Ok(u)
    }

    pub fn default_last(&self, m: u32) -> u32 {
        self.start(m) + DEFAULT_PREFIX_TERMS
    }

    /// Tail bound for terms past `last`.
    pub fn tail_after(&self, last: u32) -> ExactScalar {
        if self.family.horizon().is_some_and(|h| last >= h) {
            return ExactScalar::zero();
        }
        self.family.tail_bound(last + 1)
    }

    /// `μ(U_m) ≤ prefix + tail`, with the prefix measured exactly when terms are exact.
    pub fn certified_measure(&self, m: u32, last: u32) -> Result<CertifiedMeasure> {
        let first = self.start(m);
        let last = last.max(first);
        let (prefix, prefix_exact) = if self.family.exact_terms() {
            (self.prefix(m, last)?.measure(), true)
        } else {
            let mut acc = ExactScalar::zero();
            for i in first..=self.last_live(last) {
                acc = &acc + &self.family.term_bound(i)?;
            }
            (acc, false)
        };
        let tail = self.tail_after(last);
        let upper = &prefix + &tail;
        let target = ExactScalar::pow2(-(m as i64));
        Ok(CertifiedMeasure {
            m,
            first_term: first,
            last_term: last,
            within_target: upper <= target,
            prefix,
            prefix_exact,
            tail,
            upper,
            target,
        })
    }

    /// `μ(prefix Δ S^k_m)` against the `2^{-k}` contract.
    pub fn array_defect(&self, k: u32, m: u32, last: u32) -> Result<ArrayDefect> {
        let prefix = self.prefix(m, last)?;
        let arr = self.array(k, m)?;
        let sym = prefix.sym_diff_measure(&arr);
        let target = ExactScalar::pow2(-(k as i64));
        Ok(ArrayDefect {
            k,
            m,
            last_term: last,
            within_target: sym <= target,
            prefix_sym_diff: sym,
            guaranteed: self.guaranteed_defect(k, m),
            target,
        })
    }

    /// `U_m` itself when the family can materialize its tail exactly.
    pub fn exact_union(&self, m: u32) -> Option<Result<BoxUnion>> {
        self.family.exact_tail(self.start(m))
    }

    /// Three-valued membership of `x` in `U_m`, looking at the terms of `S^{k_max}_m`.
    pub fn covers(&self, x: &Point, m: u32, k_max: u32) -> Result<Coverage> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let first = self.start(m);
        let (_, last) = self.array_terms(k_max, m);
        let last = (last.max(first as i64 - 1)) as u32;
        let mut clean = true;
        let mut i = first;
        while i <= last && !self.family.horizon().is_some_and(|h| i > h) {
            let region = neighborhood(x, i.min(40));
            match self.family.term_within(i, &region)?.membership(x) {
                Membership::Inside => return Ok(Coverage::CoveredCertified { term: i }),
                Membership::Boundary => clean = false,
                Membership::Outside => {}
            }
            i += 1;
        }
        if clean {
            if let Some(certificate) = self.family.excludes_from(last + 1, x) {
                return Ok(Coverage::NotCoveredAtTier {
                    tier: k_max,
                    last_term: last,
                    certificate,
                });
            }
        }
        Ok(Coverage::Unknown {
            tier: k_max,
            last_term: last,
        })
    }

    /// Estimate of `μ(U_m ∩ Q_r(u))` within `2^{-s}`.
    pub fn measure_estimate(
        &self,
        s: u32,
        r: u32,
        u: &[i64],
        m: u32,
        route: EstimateRoute,
    ) -> Result<Estimate> {
        let big: Vec<BigInt> = u.iter().map(|&a| BigInt::from(a)).collect();
        self.measure_estimate_big(s, r, &big, m, route)
    }

    pub fn measure_estimate_big(
        &self,
        s: u32,
        r: u32,
        u: &[BigInt],
        m: u32,
        route: EstimateRoute,
    ) -> Result<Estimate> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: u.len(),
            });
        }
        let cube = DyadicCube::new(r, u.to_vec(), crate::dyadic::ClosureMode::Open);
        if !cube.in_unit_partition() {
            return Err(Error::InvalidInput(format!(
                "anchor out of range for precision {r}"
            )));
        }
        let q = cube.to_open_box();
        let set = self.array_within(s, m, &q)?;
        let (value, cells) = match route {
            EstimateRoute::Array => (set.measure(), None),
            EstimateRoute::CellCenters => {
                let p = (self.array_poly.eval(s as u64 + m as u64) as u32).max(r);
                crate::error::cap_check(
                    "cell-center enumeration",
                    (p - r) as u64 * n as u64,
                    ESTIMATE_CELL_CAP_LOG2,
                )?;
                let side = 1i64 << (p - r);
                let base: Vec<BigInt> = u.iter().map(|a| a << (p - r)).collect();
                let ranges: Vec<(usize, usize)> = vec![(0, side as usize); n];
                let mut idx = vec![0usize; n];
                let cell_measure = ExactScalar::pow2(-(p as i64) * n as i64);
                let mut inside = 0u64;
                let mut total = 0u64;
                loop {
                    let anchor: Vec<BigInt> = base.iter().zip(&idx).map(|(b, o)| b + *o).collect();
                    let center =
                        DyadicCube::new(p, anchor, crate::dyadic::ClosureMode::Open).center();
                    if set.membership(&center) == Membership::Inside {
                        inside += 1;
                    }
                    total += 1;
                    if !crate::stepfn::advance(&mut idx, &ranges) {
                        break;
                    }
                }
                (
                    &ExactScalar::from_int(inside as i64) * &cell_measure,
                    Some(total),
                )
            }
        };
        Ok(Estimate {
            value,
            route,
            tier: s,
            cells,
            error_bound: ExactScalar::pow2(-(s as i64)),
        })
    }

    /// Smallest tier from which each materialized term of `S^{k_max}_m` stays inside `S^k_m` up to `k_max`.
    pub fn liminf_thresholds(&self, m: u32, k_max: u32) -> Result<Vec<(u32, Option<u32>)>> {
        let (first, last) = self.array_terms(k_max, m);
        let arrays: Vec<BoxUnion> = (0..=k_max)
            .map(|k| self.array(k, m))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        let mut i = first as i64;
        while i <= last {
            let t = self.family.term(i as u32)?;
            let mut threshold = None;
            for k in (0..=k_max).rev() {
                if t.difference_measure(&arrays[k as usize]).is_zero() {
                    threshold = Some(k);
                } else {
                    break;
                }
            }
            out.push((i as u32, threshold));
            i += 1;
        }
        Ok(out)
    }
}
