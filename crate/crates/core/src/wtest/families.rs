//! The concrete term sequences `V_i` behind the constructed tests.

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::dyadic::{locate_cube, AxisBox, BoxUnion, Interval, Membership, Point};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;
use crate::stepfn::{maximal_set, SimpleStepFunction, StepSequence};

/// A sequence of open sets `V_i` with certified measure bounds.
pub trait TermFamily: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Reference materialization of `V_i`.
    fn term(&self, i: u32) -> Result<BoxUnion>;

    /// `V_i ∩ region`.
    fn term_within(&self, i: u32, region: &AxisBox) -> Result<BoxUnion> {
        Ok(self.term(i)?.intersect_box(region))
    }

    /// Whether `term(i)` equals `V_i` exactly (otherwise it is an inner approximation).
    fn exact_terms(&self) -> bool {
        true
    }

    /// Bound on `μ(V_i \ term(i))`; `term(i) ⊆ V_i` always.
    fn term_defect(&self, _i: u32) -> Result<ExactScalar> {
        Ok(ExactScalar::zero())
    }

    /// Certified bound on `μ(V_i)`.
    fn term_bound(&self, i: u32) -> Result<ExactScalar>;

    /// Closed-form bound on `Σ_{i ≥ start} μ(V_i)`.
    fn tail_bound(&self, start: u32) -> ExactScalar;

    /// Bound on `μ(∪_{i≥start} V_i ∩ Q) / μ(Q)` for every dyadic cube `Q` of precision `r`.
    fn local_tail_ratio(&self, start: u32, r: u32) -> ExactScalar {
        if self.horizon().is_some_and(|h| start > h) {
            return ExactScalar::zero();
        }
        self.tail_bound(start)
            .mul_pow2(r as i64 * self.dim() as i64)
            .min(ExactScalar::one())
    }

    /// Approximant of `V_i` with dyadic endpoints and `μ(V_i Δ ·) ≤ 2^{-tier}`.
    fn term_tier(&self, i: u32, _tier: u32) -> Result<BoxUnion> {
        self.term(i)
    }

    fn term_tier_within(&self, i: u32, tier: u32, region: &AxisBox) -> Result<BoxUnion> {
        Ok(self.term_tier(i, tier)?.intersect_box(region))
    }

    /// Endpoint precision of `term_tier(i, tier)`.
    fn term_precision(&self, i: u32, tier: u32) -> u64;

    /// Last index whose term can be non-empty.
    fn horizon(&self) -> Option<u32> {
        None
    }

    /// `∪_{i ≥ start} V_i` when it can be materialized exactly.
    fn exact_tail(&self, start: u32) -> Option<Result<BoxUnion>> {
        if !self.exact_terms() {
            return None;
        }
        let h = self.horizon()?;
        Some((|| {
            let mut u = BoxUnion::empty(self.dim());
            for i in start..=h {
                u.extend(self.term(i)?);
            }
            Ok(u)
        })())
    }

    /// A certificate that `x ∉ V_i` for every `i ≥ start`.
    fn excludes_from(&self, start: u32, _x: &Point) -> Option<String> {
        match self.horizon() {
            Some(h) if start > h => Some(format!("every term past index {h} is empty")),
            _ => None,
        }
    }
}

fn unit_strip(n: usize, axis: usize, lo: ExactScalar, hi: ExactScalar) -> Option<AxisBox> {
    let lo = lo.max(ExactScalar::zero());
    let hi = hi.min(ExactScalar::one());
    if lo >= hi {
        return None;
    }
    let axes = (0..n)
        .map(|i| {
            if i == axis {
                Interval::open(lo.clone(), hi.clone())
            } else {
                Interval::open(ExactScalar::zero(), ExactScalar::one())
            }
        })
        .collect();
    Some(AxisBox::from_axes_unchecked(axes))
}

/// `S_i = ∪_{d ∈ 𝐃_i} (d − 2^{-2i-2}, d + 2^{-2i-2})` on one axis, full on the others.
#[derive(Clone, Debug)]
pub struct AvoidanceFamily {
    n: usize,
    axis: usize,
}

impl AvoidanceFamily {
    /// `axis` is zero-based.
    pub fn new(n: usize, axis: usize) -> Result<Self> {
        crate::dyadic::check_dim(n, crate::dyadic::DEFAULT_MAX_DIM)?;
        if axis >= n {
            return Err(Error::InvalidInput(format!(
                "axis {} out of range for n={n}",
                axis + 1
            )));
        }
        Ok(AvoidanceFamily { n, axis })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    fn half_width(i: u32) -> ExactScalar {
        ExactScalar::pow2(-2 * i as i64 - 2)
    }

    fn strips(&self, i: u32, lo: &ExactScalar, hi: &ExactScalar) -> BoxUnion {
        let w = Self::half_width(i);
        let top = BigInt::one() << i;
        let j_lo = (lo - &w).mul_pow2(i as i64).floor().max(BigInt::zero());
        let j_hi = (hi + &w).mul_pow2(i as i64).ceil().min(top);
        let mut out = BoxUnion::empty(self.n);
        let mut j = j_lo;
        while j <= j_hi {
            let d = ExactScalar::dyadic(j.clone(), i);
            if let Some(b) = unit_strip(self.n, self.axis, &d - &w, &d + &w) {
                out.push(b);
            }
            j += 1;
        }
        out
    }
}

impl TermFamily for AvoidanceFamily {
    fn dim(&self) -> usize {
        self.n
    }

    fn term(&self, i: u32) -> Result<BoxUnion> {
        crate::error::cap_check("avoidance strips", i as u64, 22)?;
        Ok(self.strips(i, &ExactScalar::zero(), &ExactScalar::one()))
    }

    fn term_within(&self, i: u32, region: &AxisBox) -> Result<BoxUnion> {
        let a = region.axis(self.axis);
        let width = a.length();
        let est = width.mul_pow2(i as i64).ceil();
        if est > BigInt::from(1u64 << 22) {
            return Err(Error::ResourceCap {
                what: "avoidance strips in region".into(),
                required: est.to_string(),
                cap: format!("2^{}", 22),
            });
        }
        Ok(self.strips(i, &a.lo, &a.hi).intersect_box(region))
    }

    fn term_bound(&self, i: u32) -> Result<ExactScalar> {
        Ok(ExactScalar::pow2(-(i as i64) - 1))
    }

    fn tail_bound(&self, start: u32) -> ExactScalar {
        ExactScalar::pow2(-(start as i64))
    }

    fn local_tail_ratio(&self, start: u32, r: u32) -> ExactScalar {
        // Levels i ≥ r contribute at most 2^{-i-1} of any precision-r cube; a coarser
        // level meets the cube in at most one strip.
        let mut acc = ExactScalar::zero();
        for i in start..r {
            acc = &acc + &ExactScalar::pow2(r as i64 - 2 * i as i64 - 1).min(ExactScalar::one());
        }
        let fine = ExactScalar::pow2(-(start.max(r) as i64));
        (&acc + &fine).min(ExactScalar::one())
    }

    fn term_precision(&self, i: u32, _tier: u32) -> u64 {
        2 * i as u64 + 2
    }

    fn excludes_from(&self, start: u32, x: &Point) -> Option<String> {
        if x.is_dyadic_coord(self.axis) {
            return None;
        }
        // |a/b − j/2^i| ≥ 1/(b 2^i) ≥ 2^{-2i-2} once 2^{i+2} ≥ b
        let b = x.coord(self.axis).denom().abs();
        let need = BigInt::one() << (start as usize + 2);
        (need >= b).then(|| {
            format!(
                "coordinate {} has denominator {b}; distance to 𝐃_i is at least 1/({b}·2^i) ≥ 2^(-2i-2) for all i ≥ {start}",
                x.coord(self.axis)
            )
        })
    }
}

/// Caches increments `f_{j+1} − f_j` of a step sequence.
#[derive(Debug)]
struct IncrementCache {
    seq: Arc<dyn StepSequence>,
    cache: Mutex<HashMap<u32, Arc<SimpleStepFunction>>>,
}

impl IncrementCache {
    fn new(seq: Arc<dyn StepSequence>) -> Self {
        IncrementCache {
            seq,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, j: u32) -> Result<Arc<SimpleStepFunction>> {
        if let Some(f) = self.cache.lock().expect("cache lock").get(&j) {
            return Ok(f.clone());
        }
        let f = Arc::new(self.seq.increment(j)?);
        self.cache.lock().expect("cache lock").insert(j, f.clone());
        Ok(f)
    }

    fn horizon(&self) -> Option<u32> {
        // increments j ≥ N vanish; term i uses 2i−1 and 2i
        self.seq.stabilizes_after().map(|n| n / 2)
    }

    fn check(&self, upto: u32) -> Result<()> {
        let p = self.seq.precision();
        for j in 0..upto {
            let g = self.get(j)?;
            let bound = &ExactScalar::pow2(-(j as i64)) + &ExactScalar::pow2(-(j as i64) - 1);
            if g.l1_norm() > bound {
                return Err(Error::InvalidInput(format!(
                    "gap certificate fails at m={j}: {} > {bound}",
                    g.l1_norm()
                )));
            }
            if g.precision() as u64 > p.eval(j as u64 + 1) {
                return Err(Error::InvalidInput(format!(
                    "increment {j} breaks the declared precision"
                )));
            }
        }
        Ok(())
    }
}

/// Indices checked against the consecutive-gap certificate when a gap test is built.
pub const GAP_CHECK_PREFIX: u32 = 16;

/// `S_i = S(f_{2i−1} − f_{2i}, 2^{-i}) ∪ S(f_{2i} − f_{2i+1}, 2^{-i})`.
#[derive(Debug)]
pub struct CauchyGapFamily {
    inc: IncrementCache,
}

impl CauchyGapFamily {
    pub fn new(seq: Arc<dyn StepSequence>) -> Result<Self> {
        crate::dyadic::check_dim(seq.dim(), crate::dyadic::DEFAULT_MAX_DIM)?;
        let inc = IncrementCache::new(seq);
        inc.check(GAP_CHECK_PREFIX)?;
        Ok(CauchyGapFamily { inc })
    }

    pub fn sequence(&self) -> &Arc<dyn StepSequence> {
        &self.inc.seq
    }
}

impl TermFamily for CauchyGapFamily {
    fn dim(&self) -> usize {
        self.inc.seq.dim()
    }

    fn term(&self, i: u32) -> Result<BoxUnion> {
        if i == 0 || self.horizon().is_some_and(|h| i > h) {
            return Ok(BoxUnion::empty(self.dim()));
        }
        let eps = ExactScalar::pow2(-(i as i64));
        let mut u = self.inc.get(2 * i - 1)?.chebyshev_set(&eps)?;
        u.extend(self.inc.get(2 * i)?.chebyshev_set(&eps)?);
        Ok(u)
    }

    fn term_bound(&self, _i: u32) -> Result<ExactScalar> {
        Ok(ExactScalar::pow2(3 - _i as i64))
    }

    fn tail_bound(&self, start: u32) -> ExactScalar {
        ExactScalar::pow2(4 - start as i64)
    }

    fn term_precision(&self, i: u32, _tier: u32) -> u64 {
        self.inc.seq.precision().eval(2 * i as u64 + 1)
    }

    fn horizon(&self) -> Option<u32> {
        self.inc.horizon()
    }
}

/// Extra translate levels used for the reference materialization of `T_i`.
pub const MAXIMAL_REFERENCE_EXTRA: u32 = 6;

/// `T_i = T(f_{2i−1} − f_{2i}, 2^{-i}) ∪ T(f_{2i} − f_{2i+1}, 2^{-i})` with constant `c`.
#[derive(Debug)]
pub struct MaximalGapFamily {
    inc: IncrementCache,
    c: u64,
    tiers: Mutex<HashMap<(u32, u32), Arc<TierApprox>>>,
    reference: Mutex<HashMap<u32, Arc<(BoxUnion, ExactScalar)>>>,
}

/// A tier approximant `A^k_i` with its certified defect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierApprox {
    pub set: BoxUnion,
    pub r_max: u32,
    pub precision: u64,
    pub truncation_defect: ExactScalar,
    pub fattening_excess: ExactScalar,
}

impl TierApprox {
    pub fn defect_bound(&self) -> ExactScalar {
        &self.truncation_defect + &self.fattening_excess
    }
}

impl MaximalGapFamily {
    pub fn new(seq: Arc<dyn StepSequence>, c: u64) -> Result<Self> {
        crate::dyadic::check_dim(seq.dim(), crate::dyadic::DEFAULT_MAX_DIM)?;
        if c == 0 {
            return Err(Error::InvalidInput(
                "maximal constant c must be at least 1".into(),
            ));
        }
        let inc = IncrementCache::new(seq);
        inc.check(GAP_CHECK_PREFIX)?;
        Ok(MaximalGapFamily {
            inc,
            c,
            tiers: Mutex::new(HashMap::new()),
            reference: Mutex::new(HashMap::new()),
        })
    }

    pub fn constant(&self) -> u64 {
        self.c
    }

    pub fn sequence(&self) -> &Arc<dyn StepSequence> {
        &self.inc.seq
    }

    fn empty_index(&self, i: u32) -> bool {
        i == 0 || self.horizon().is_some_and(|h| i > h)
    }

    fn truncated(&self, i: u32, r_max: u32) -> Result<(BoxUnion, ExactScalar)> {
        let eps = ExactScalar::pow2(-(i as i64));
        let a = maximal_set(self.inc.get(2 * i - 1)?.as_ref(), &eps, r_max)?;
        let b = maximal_set(self.inc.get(2 * i)?.as_ref(), &eps, r_max)?;
        let mut set = a.set;
        set.extend(b.set);
        Ok((set, &a.truncation_defect + &b.truncation_defect))
    }

    fn reference_term(&self, i: u32) -> Result<Arc<(BoxUnion, ExactScalar)>> {
        if let Some(t) = self.reference.lock().expect("reference lock").get(&i) {
            return Ok(t.clone());
        }
        let t = if self.empty_index(i) {
            (BoxUnion::empty(self.dim()), ExactScalar::zero())
        } else {
            let p = self.inc.seq.precision().eval(2 * i as u64 + 1) as u32;
            self.truncated(i, p + MAXIMAL_REFERENCE_EXTRA)?
        };
        let t = Arc::new(t);
        self.reference
            .lock()
            .expect("reference lock")
            .insert(i, t.clone());
        Ok(t)
    }

    /// `A^k_i`: translates up to `p(2i+1)+k+2` (more if the straddle band needs it),
    /// fattened to dyadic endpoints at precision `p(2i+1)+2k+n+3`.
    pub fn tier_approx(&self, i: u32, tier: u32) -> Result<Arc<TierApprox>> {
        if let Some(t) = self.tiers.lock().expect("tier lock").get(&(i, tier)) {
            return Ok(t.clone());
        }
        let n = self.dim();
        let p = self.inc.seq.precision().eval(2 * i as u64 + 1);
        let precision = p + 2 * tier as u64 + n as u64 + 3;
        let approx = if self.empty_index(i) {
            TierApprox {
                set: BoxUnion::empty(n),
                r_max: 0,
                precision,
                truncation_defect: ExactScalar::zero(),
                fattening_excess: ExactScalar::zero(),
            }
        } else {
            let half = ExactScalar::pow2(-(tier as i64) - 1);
            let mut r_max = (p + tier as u64 + 2) as u32;
            let (set, truncation_defect) = loop {
                let (set, defect) = self.truncated(i, r_max)?;
                if defect <= half {
                    break (set, defect);
                }
                r_max += 1;
            };
            let p32 = u32::try_from(precision)
                .map_err(|_| Error::InvalidInput("precision overflow".into()))?;
            let fat = BoxUnion::new(
                n,
                set.boxes()
                    .iter()
                    .map(|b| b.fatten_to_dyadic(p32))
                    .collect(),
            )?;
            let fattening_excess = &fat.measure() - &set.measure();
            if fattening_excess > half {
                return Err(Error::Invariant(format!(
                    "fattening of A^{tier}_{i} adds {fattening_excess} > 2^-{}",
                    tier + 1
                )));
            }
            TierApprox {
                set: fat,
                r_max,
                precision,
                truncation_defect,
                fattening_excess,
            }
        };
        let approx = Arc::new(approx);
        self.tiers
            .lock()
            .expect("tier lock")
            .insert((i, tier), approx.clone());
        Ok(approx)
    }
}

impl TermFamily for MaximalGapFamily {
    fn dim(&self) -> usize {
        self.inc.seq.dim()
    }

    /// Translates up to `p(2i+1) + 6`, unfattened: an inner approximation of `T_i`.
    fn term(&self, i: u32) -> Result<BoxUnion> {
        Ok(self.reference_term(i)?.0.clone())
    }

    fn exact_terms(&self) -> bool {
        false
    }

    fn term_defect(&self, i: u32) -> Result<ExactScalar> {
        Ok(self.reference_term(i)?.1.clone())
    }

    /// `c 2^i (‖f_{2i−1} − f_{2i}‖₁ + ‖f_{2i} − f_{2i+1}‖₁)`
    fn term_bound(&self, i: u32) -> Result<ExactScalar> {
        if self.empty_index(i) {
            return Ok(ExactScalar::zero());
        }
        let norms = &self.inc.get(2 * i - 1)?.l1_norm() + &self.inc.get(2 * i)?.l1_norm();
        Ok((&ExactScalar::from_int(self.c as i64) * &norms).mul_pow2(i as i64))
    }

    fn tail_bound(&self, start: u32) -> ExactScalar {
        if self.horizon().is_some_and(|h| start > h) {
            return ExactScalar::zero();
        }
        ExactScalar::from_int(self.c as i64).mul_pow2(4 - start as i64)
    }

    fn term_tier(&self, i: u32, tier: u32) -> Result<BoxUnion> {
        Ok(self.tier_approx(i, tier)?.set.clone())
    }

    fn term_precision(&self, i: u32, tier: u32) -> u64 {
        self.inc.seq.precision().eval(2 * i as u64 + 1) + 2 * tier as u64 + self.dim() as u64 + 3
    }

    fn horizon(&self) -> Option<u32> {
        self.inc.horizon()
    }
}

/// Nested open dyadic cubes around a finite set of points with no dyadic coordinate.
#[derive(Clone, Debug)]
pub struct PointTrapFamily {
    n: usize,
    centers: Vec<Point>,
    log_count: u32,
}

impl PointTrapFamily {
    pub fn new(centers: Vec<Point>) -> Result<Self> {
        let n = centers
            .first()
            .ok_or_else(|| Error::InvalidInput("point trap needs at least one center".into()))?
            .dim();
        crate::dyadic::check_dim(n, crate::dyadic::DEFAULT_MAX_DIM)?;
        for c in &centers {
            if c.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: c.dim(),
                });
            }
            if !c.in_unit_cube() || c.has_dyadic_coord() {
                return Err(Error::InvalidInput(format!(
                    "center {c} must lie in (0,1)^n with no dyadic coordinate"
                )));
            }
        }
        let log_count = (centers.len() as u64).next_power_of_two().trailing_zeros();
        Ok(PointTrapFamily {
            n,
            centers,
            log_count,
        })
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    /// Side exponent `⌈(i + 1 + ⌈log₂|C|⌉)/n⌉` so that every term has measure at most `2^{-i-1}`.
    pub fn side_exponent(&self, i: u32) -> u32 {
        (i + 1 + self.log_count).div_ceil(self.n as u32)
    }
}

impl TermFamily for PointTrapFamily {
    fn dim(&self) -> usize {
        self.n
    }

    fn term(&self, i: u32) -> Result<BoxUnion> {
        let s = self.side_exponent(i);
        let mut u = BoxUnion::empty(self.n);
        for c in &self.centers {
            u.push(locate_cube(c, s)?.to_open_box());
        }
        Ok(u)
    }

    fn term_bound(&self, i: u32) -> Result<ExactScalar> {
        Ok(ExactScalar::pow2(-(i as i64) - 1))
    }

    fn tail_bound(&self, start: u32) -> ExactScalar {
        ExactScalar::pow2(-(start as i64))
    }

    fn term_precision(&self, i: u32, _tier: u32) -> u64 {
        self.side_exponent(i) as u64
    }

    fn exact_tail(&self, start: u32) -> Option<Result<BoxUnion>> {
        // terms are nested, so the tail is its first term
        Some(self.term(start))
    }

    fn excludes_from(&self, start: u32, x: &Point) -> Option<String> {
        let t = self.term(start).ok()?;
        (t.membership(x) == Membership::Outside).then(|| {
            format!("{x} lies outside the closure of term {start}, and later terms are nested inside it")
        })
    }
}
