//! Dyadic martingales on the cube filtration of `[0,1)^n` and the conversion of a
//! W-test into component and summed martingales.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::dyadic::{locate_cube, AxisBox, BoxUnion, ClosureMode, DyadicCube, Point};
use crate::error::{cap_check, Error, Result};
use crate::scalar::ExactScalar;
use crate::wtest::WTest;

/// Cap (log2) on the number of cubes visited by the averaging check.
pub const AVERAGING_CAP_LOG2: u64 = 16;

/// Components summed by the exact evaluator of [`SumMartingale`] unless configured.
pub const DEFAULT_SUM_COMPONENTS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approximation {
    pub value: ExactScalar,
    pub error_bound: ExactScalar,
    /// Array tier used for the estimate, when one was needed.
    pub tier: Option<u32>,
}

pub trait DyadicMartingale: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `d(Q_r(u))` when an exact evaluator exists.
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>>;

    /// A value within `2^{-s}` of the modeled martingale on `Q_r(u)`.
    fn eval_approx(&self, s: u32, r: u32, u: &[BigInt]) -> Result<Approximation>;

    /// Closed interval containing the modeled value; defaults to the exact value.
    fn certified_interval(
        &self,
        r: u32,
        u: &[BigInt],
    ) -> Result<Option<(ExactScalar, ExactScalar)>> {
        Ok(self.eval_exact(r, u)?.map(|v| (v.clone(), v)))
    }
}

impl<D: DyadicMartingale + ?Sized> DyadicMartingale for Arc<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        (**self).eval_exact(r, u)
    }
    fn eval_approx(&self, s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        (**self).eval_approx(s, r, u)
    }
    fn certified_interval(
        &self,
        r: u32,
        u: &[BigInt],
    ) -> Result<Option<(ExactScalar, ExactScalar)>> {
        (**self).certified_interval(r, u)
    }
}

/// The open cube `Q_r(u)`, rejecting anchors outside the unit partition.
pub fn cube_box(n: usize, r: u32, u: &[BigInt]) -> Result<AxisBox> {
    if u.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: u.len(),
        });
    }
    let c = DyadicCube::new(r, u.to_vec(), ClosureMode::Open);
    if !c.in_unit_partition() {
        return Err(Error::InvalidInput(format!(
            "anchor outside the precision-{r} partition"
        )));
    }
    Ok(c.to_open_box())
}

fn scale(r: u32, n: usize) -> i64 {
    r as i64 * n as i64
}

fn exact_only(v: ExactScalar) -> Approximation {
    Approximation {
        value: v,
        error_bound: ExactScalar::zero(),
        tier: None,
    }
}

fn need_exact(d: &dyn DyadicMartingale, r: u32, u: &[BigInt]) -> Result<ExactScalar> {
    d.eval_exact(r, u)?
        .ok_or_else(|| Error::Precondition(format!("no exact value at r={r}")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantMartingale {
    n: usize,
    value: ExactScalar,
}

impl ConstantMartingale {
    pub fn new(n: usize, value: ExactScalar) -> Result<Self> {
        crate::dyadic::check_dim(n, crate::dyadic::DEFAULT_MAX_DIM)?;
        if value.is_negative() {
            return Err(Error::InvalidInput(
                "martingale values are non-negative".into(),
            ));
        }
        Ok(ConstantMartingale { n, value })
    }
}

impl DyadicMartingale for ConstantMartingale {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        cube_box(self.n, r, u)?;
        Ok(Some(self.value.clone()))
    }
    fn eval_approx(&self, _s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        Ok(exact_only(need_exact(self, r, u)?))
    }
}

/// `d(Q) = μ(E ∩ Q) / μ(Q)` for a fixed finite union `E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetMartingale {
    set: BoxUnion,
}

impl SetMartingale {
    pub fn new(set: BoxUnion) -> Self {
        SetMartingale { set }
    }
}

impl DyadicMartingale for SetMartingale {
    fn dim(&self) -> usize {
        self.set.dim()
    }
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        let q = cube_box(self.dim(), r, u)?;
        Ok(Some(
            self.set
                .intersect_box(&q)
                .measure()
                .mul_pow2(scale(r, self.dim())),
        ))
    }
    fn eval_approx(&self, _s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        Ok(exact_only(need_exact(self, r, u)?))
    }
}

/// Explicit values on every cube up to `r_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableMartingale {
    n: usize,
    r_max: u32,
    values: BTreeMap<(u32, Vec<BigInt>), ExactScalar>,
}

impl TableMartingale {
    pub fn tabulate(d: &dyn DyadicMartingale, r_max: u32) -> Result<Self> {
        let n = d.dim();
        cap_check(
            "martingale table",
            (r_max as u64) * n as u64,
            AVERAGING_CAP_LOG2,
        )?;
        let mut values = BTreeMap::new();
        for r in 0..=r_max {
            for c in DyadicCube::enumerate(r, n) {
                let v = need_exact(d, r, &c.anchor)?;
                values.insert((r, c.anchor), v);
            }
        }
        Ok(TableMartingale { n, r_max, values })
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    /// Overwrites one entry; the result need not be a martingale.
    pub fn set(&mut self, r: u32, u: &[BigInt], value: ExactScalar) -> Result<()> {
        match self.values.get_mut(&(r, u.to_vec())) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::InvalidInput(format!("no table entry at r={r}"))),
        }
    }
}

impl DyadicMartingale for TableMartingale {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        cube_box(self.n, r, u)?;
        Ok(self.values.get(&(r, u.to_vec())).cloned())
    }
    fn eval_approx(&self, _s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        Ok(exact_only(need_exact(self, r, u)?))
    }
}

/// `Σ λ_j d_j` with `λ_j ≥ 0`, `Σ λ_j = 1`.
#[derive(Clone, Debug)]
pub struct ConvexCombination {
    n: usize,
    parts: Vec<(ExactScalar, Arc<dyn DyadicMartingale>)>,
}

impl ConvexCombination {
    pub fn new(parts: Vec<(ExactScalar, Arc<dyn DyadicMartingale>)>) -> Result<Self> {
        let n = parts
            .first()
            .map(|p| p.1.dim())
            .ok_or_else(|| Error::InvalidInput("empty combination".into()))?;
        let mut total = ExactScalar::zero();
        for (w, d) in &parts {
            if d.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: d.dim(),
                });
            }
            if w.is_negative() {
                return Err(Error::InvalidInput("negative weight".into()));
            }
            total = &total + w;
        }
        if total != ExactScalar::one() {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(ConvexCombination { n, parts })
    }
}

impl DyadicMartingale for ConvexCombination {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        let mut acc = ExactScalar::zero();
        for (w, d) in &self.parts {
            match d.eval_exact(r, u)? {
                Some(v) => acc = &acc + &(w * &v),
                None => return Ok(None),
            }
        }
        Ok(Some(acc))
    }
    fn eval_approx(&self, s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        // weights sum to one, so each part's error passes through unchanged
        let mut value = ExactScalar::zero();
        let mut tier = None;
        for (w, d) in &self.parts {
            let a = d.eval_approx(s, r, u)?;
            value = &value + &(w * &a.value);
            tier = tier.max(a.tier);
        }
        Ok(Approximation {
            value,
            error_bound: ExactScalar::pow2(-(s as i64)),
            tier,
        })
    }
}

/// `d_m(Q) = μ(U_m ∩ Q) / μ(Q)`.
///
/// The exact evaluator uses the materialized prefix `∪_{i=q(m)}^{H} term(i)`, a fixed
/// set, so it satisfies the averaging law exactly. The certified interval adds the
/// term defects and the local tail past `H`.
#[derive(Clone, Debug)]
pub struct ComponentMartingale {
    w: Arc<WTest>,
    m: u32,
    horizon: u32,
}

impl ComponentMartingale {
    pub fn new(w: Arc<WTest>, m: u32) -> Self {
        let horizon = w.default_last(m);
        Self::with_horizon(w, m, horizon)
    }

    pub fn with_horizon(w: Arc<WTest>, m: u32, horizon: u32) -> Self {
        let horizon = horizon.max(w.start(m));
        ComponentMartingale { w, m, horizon }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    fn live_last(&self) -> Option<u32> {
        let last = self
            .w
            .family()
            .horizon()
            .map_or(self.horizon, |h| h.min(self.horizon));
        (last >= self.w.start(self.m)).then_some(last)
    }

    fn slack(&self, r: u32) -> Result<ExactScalar> {
        let fam = self.w.family();
        let mut defect = ExactScalar::zero();
        if let Some(last) = self.live_last() {
            for i in self.w.start(self.m)..=last {
                defect = &defect + &fam.term_defect(i)?;
            }
        }
        let local = defect.mul_pow2(scale(r, self.dim()));
        Ok(&local + &fam.local_tail_ratio(self.horizon + 1, r))
    }
}

impl DyadicMartingale for ComponentMartingale {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        let q = cube_box(self.dim(), r, u)?;
        let set = self.w.prefix_within(self.m, self.horizon, &q)?;
        Ok(Some(
            set.intersect_box(&q)
                .measure()
                .mul_pow2(scale(r, self.dim())),
        ))
    }

    fn eval_approx(&self, s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        let q = cube_box(self.dim(), r, u)?;
        let k = s + r * self.dim() as u32;
        let set = self.w.array_within(k, self.m, &q)?;
        Ok(Approximation {
            value: set
                .intersect_box(&q)
                .measure()
                .mul_pow2(scale(r, self.dim())),
            error_bound: ExactScalar::pow2(-(s as i64)),
            tier: Some(k),
        })
    }

    fn certified_interval(
        &self,
        r: u32,
        u: &[BigInt],
    ) -> Result<Option<(ExactScalar, ExactScalar)>> {
        let lo = need_exact(self, r, u)?;
        let hi = (&lo + &self.slack(r)?).min(ExactScalar::one());
        Ok(Some((lo, hi)))
    }
}

/// `d = Σ_{m≥1} d_m`, which has `d(Q_0) ≤ Σ 2^{-m} ≤ 1`.
///
/// The exact evaluator sums `d_1 … d_M`, each materialized up to one shared last term.
#[derive(Clone, Debug)]
pub struct SumMartingale {
    w: Arc<WTest>,
    components: Vec<ComponentMartingale>,
}

impl SumMartingale {
    pub fn new(w: Arc<WTest>) -> Self {
        Self::with_components(w, DEFAULT_SUM_COMPONENTS)
    }

    /// `count` exact components sharing the last term `q(count) + 2`.
    pub fn with_components(w: Arc<WTest>, count: u32) -> Self {
        let last = w.start(count) + 2;
        Self::with_horizon(w, count, last)
    }

    pub fn with_horizon(w: Arc<WTest>, count: u32, last: u32) -> Self {
        let components = (1..=count)
            .map(|m| ComponentMartingale::with_horizon(w.clone(), m, last))
            .collect();
        SumMartingale { w, components }
    }

    pub fn components(&self) -> &[ComponentMartingale] {
        &self.components
    }

    /// Bound on `Σ_{m>M} d_m(Q)` for every precision-`r` cube.
    pub fn omitted_bound(&self, r: u32) -> ExactScalar {
        let count = self.components.len() as u32;
        let rn = scale(r, self.dim());
        let extra = rn as u32 + 8;
        let fam = self.w.family();
        let mut acc = ExactScalar::zero();
        for m in count + 1..=count + extra {
            let generic = ExactScalar::pow2(rn - m as i64).min(ExactScalar::one());
            acc = &acc + &fam.local_tail_ratio(self.w.start(m), r).min(generic);
        }
        &acc + &ExactScalar::pow2(rn - (count + extra) as i64)
    }
}

fn ceil_log2(v: u32) -> u32 {
    v.next_power_of_two().trailing_zeros()
}

impl DyadicMartingale for SumMartingale {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn eval_exact(&self, r: u32, u: &[BigInt]) -> Result<Option<ExactScalar>> {
        let mut acc = ExactScalar::zero();
        for c in &self.components {
            acc = &acc + &need_exact(c, r, u)?;
        }
        Ok(Some(acc))
    }

    /// Sums `d_1 … d_M`, `M = s + nr + 1`, each within `2^{-s-1-⌈log2 M⌉}`; the omitted
    /// components add at most `2^{nr−M} = 2^{-s-1}`.
    fn eval_approx(&self, s: u32, r: u32, u: &[BigInt]) -> Result<Approximation> {
        let n = self.dim() as u32;
        let count = s + n * r + 1;
        let s_each = s + 1 + ceil_log2(count);
        let mut value = ExactScalar::zero();
        let mut tier = None;
        for m in 1..=count {
            let a = ComponentMartingale::new(self.w.clone(), m).eval_approx(s_each, r, u)?;
            value = &value + &a.value;
            tier = tier.max(a.tier);
        }
        Ok(Approximation {
            value,
            error_bound: ExactScalar::pow2(-(s as i64)),
            tier,
        })
    }

    fn certified_interval(
        &self,
        r: u32,
        u: &[BigInt],
    ) -> Result<Option<(ExactScalar, ExactScalar)>> {
        let mut lo = ExactScalar::zero();
        let mut hi = ExactScalar::zero();
        for c in &self.components {
            let (a, b) = c.certified_interval(r, u)?.expect("component interval");
            lo = &lo + &a;
            hi = &hi + &b;
        }
        Ok(Some((lo, &hi + &self.omitted_bound(r))))
    }
}

pub fn from_wtest(w: Arc<WTest>, m: u32) -> ComponentMartingale {
    ComponentMartingale::new(w, m)
}

pub fn sum_martingale(w: Arc<WTest>) -> SumMartingale {
    SumMartingale::new(w)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AveragingViolation {
    pub r: u32,
    #[serde(with = "crate::dyadic::bigint_vec")]
    pub u: Vec<BigInt>,
    pub parent: ExactScalar,
    pub children_average: ExactScalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub r_max: u32,
    pub cubes_checked: u64,
    pub violation: Option<AveragingViolation>,
    pub negative: Option<(u32, String)>,
}

impl AveragingReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none() && self.negative.is_none()
    }
}

fn level_values(d: &dyn DyadicMartingale, r: u32) -> Result<BTreeMap<Vec<BigInt>, ExactScalar>> {
    DyadicCube::enumerate(r, d.dim())
        .map(|c| {
            let v = need_exact(d, r, &c.anchor)?;
            Ok((c.anchor, v))
        })
        .collect()
}

/// Checks `d(Q_r(u)) = 2^{-n} Σ_a d(Q_{r+1}(2u+a))` exactly for every cube with
/// `r ≤ r_max`, and non-negativity, stopping at the first violation.
pub fn verify_averaging(d: &dyn DyadicMartingale, r_max: u32) -> Result<AveragingReport> {
    let n = d.dim();
    cap_check(
        "averaging check",
        (r_max as u64 + 1) * n as u64,
        AVERAGING_CAP_LOG2,
    )?;
    let mut report = AveragingReport {
        r_max,
        cubes_checked: 0,
        violation: None,
        negative: None,
    };
    let mut parents = level_values(d, 0)?;
    for r in 0..=r_max {
        let children = level_values(d, r + 1)?;
        for (u, pv) in &parents {
            report.cubes_checked += 1;
            if pv.is_negative() {
                report.negative = Some((r, format!("{u:?}")));
                return Ok(report);
            }
            let kids = DyadicCube::new(r, u.clone(), ClosureMode::HalfOpenLowerClosed).children();
            let mut sum = ExactScalar::zero();
            for k in &kids {
                sum = &sum + &children[&k.anchor];
            }
            let avg = sum.mul_pow2(-(n as i64));
            if &avg != pv {
                report.violation = Some(AveragingViolation {
                    r,
                    u: u.clone(),
                    parent: pv.clone(),
                    children_average: avg,
                });
                return Ok(report);
            }
        }
        parents = children;
    }
    Ok(report)
}

/// `Σ_u d(Q_r(u)) 2^{-rn}`
pub fn global_mass(d: &dyn DyadicMartingale, r: u32) -> Result<ExactScalar> {
    let n = d.dim();
    cap_check("global mass", r as u64 * n as u64, AVERAGING_CAP_LOG2)?;
    let mut acc = ExactScalar::zero();
    for v in level_values(d, r)?.values() {
        acc = &acc + v;
    }
    Ok(acc.mul_pow2(-scale(r, n)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapitalRow {
    pub r: u32,
    #[serde(with = "crate::dyadic::bigint_vec")]
    pub u: Vec<BigInt>,
    pub value: Option<ExactScalar>,
    pub lower: Option<ExactScalar>,
    pub upper: Option<ExactScalar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapitalTrajectory {
    pub point: Point,
    pub rows: Vec<CapitalRow>,
}

impl CapitalTrajectory {
    pub fn values(&self) -> Vec<Option<ExactScalar>> {
        self.rows.iter().map(|r| r.value.clone()).collect()
    }

    pub fn non_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| match (&w[0].value, &w[1].value) {
                (Some(a), Some(b)) => a <= b,
                _ => false,
            })
    }
}

/// `d^{(r)}(x) = d(Q_r(x))` for `0 ≤ r ≤ r_max`.
pub fn capital(d: &dyn DyadicMartingale, x: &Point, r_max: u32) -> Result<CapitalTrajectory> {
    if x.dim() != d.dim() {
        return Err(Error::Dimension {
            expected: d.dim(),
            got: x.dim(),
        });
    }
    let mut rows = Vec::new();
    for r in 0..=r_max {
        let cube = locate_cube(x, r)?;
        let value = d.eval_exact(r, &cube.anchor)?;
        let interval = d.certified_interval(r, &cube.anchor)?;
        let (lower, upper) = match interval {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        rows.push(CapitalRow {
            r,
            u: cube.anchor,
            value,
            lower,
            upper,
        });
    }
    Ok(CapitalTrajectory {
        point: x.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&a| BigInt::from(a)).collect()
    }

    #[test]
    fn constant_passes_and_flat_capital() {
        let d = ConstantMartingale::new(2, ExactScalar::one()).unwrap();
        assert!(verify_averaging(&d, 3).unwrap().passed());
        let t = capital(&d, &Point::from_fracs(&[(1, 3), (2, 7)]), 6).unwrap();
        assert!(t
            .values()
            .iter()
            .all(|v| v.as_ref() == Some(&ExactScalar::one())));
    }

    #[test]
    fn half_plane_set_martingale() {
        let half = AxisBox::open(
            vec![ExactScalar::zero(), ExactScalar::zero()],
            vec![ExactScalar::dyadic(1, 1), ExactScalar::one()],
        )
        .unwrap();
        let d = SetMartingale::new(BoxUnion::single(half));
        assert_eq!(
            d.eval_exact(1, &b(&[0, 0])).unwrap(),
            Some(ExactScalar::one())
        );
        assert_eq!(
            d.eval_exact(1, &b(&[1, 0])).unwrap(),
            Some(ExactScalar::zero())
        );
        assert_eq!(
            d.eval_exact(0, &b(&[0, 0])).unwrap(),
            Some(ExactScalar::dyadic(1, 1))
        );
        assert!(verify_averaging(&d, 3).unwrap().passed());
    }

    #[test]
    fn corrupted_child_is_located() {
        let d = ConstantMartingale::new(1, ExactScalar::one()).unwrap();
        let mut t = TableMartingale::tabulate(&d, 4).unwrap();
        t.set(3, &b(&[5]), ExactScalar::dyadic(3, 1)).unwrap();
        let rep = verify_averaging(&t, 3).unwrap();
        let v = rep.violation.unwrap();
        assert_eq!((v.r, v.u), (2, b(&[2])));
    }

    #[test]
    fn component_initial_capital() {
        let w = Arc::new(WTest::avoidance(2, 1).unwrap());
        for m in 0..=6 {
            let d = from_wtest(w.clone(), m);
            let v = d.eval_exact(0, &b(&[0, 0])).unwrap().unwrap();
            assert!(v <= ExactScalar::pow2(-(m as i64)));
            let (lo, hi) = d.certified_interval(0, &b(&[0, 0])).unwrap().unwrap();
            assert_eq!(lo, v);
            assert!(hi <= ExactScalar::pow2(-(m as i64)));
        }
    }

    #[test]
    fn component_is_martingale() {
        let w = Arc::new(WTest::avoidance(1, 1).unwrap());
        let d = from_wtest(w, 1);
        assert!(verify_averaging(&d, 5).unwrap().passed());
        assert_eq!(
            global_mass(&d, 4).unwrap(),
            d.eval_exact(0, &b(&[0])).unwrap().unwrap()
        );
    }

    #[test]
    fn component_approx_is_within_interval() {
        let w = Arc::new(WTest::avoidance(1, 1).unwrap());
        let d = from_wtest(w, 2);
        for r in 0..=3u32 {
            for u in 0..(1i64 << r) {
                let (lo, hi) = d.certified_interval(r, &b(&[u])).unwrap().unwrap();
                for s in 0..4 {
                    let a = d.eval_approx(s, r, &b(&[u])).unwrap();
                    assert!(&a.value + &a.error_bound >= lo && &a.value - &a.error_bound <= hi);
                }
            }
        }
    }

    #[test]
    fn convex_combination_is_martingale() {
        let w = Arc::new(WTest::avoidance(2, 2).unwrap());
        let parts: Vec<(ExactScalar, Arc<dyn DyadicMartingale>)> = vec![
            (
                ExactScalar::dyadic(1, 2),
                Arc::new(from_wtest(w.clone(), 1)),
            ),
            (
                ExactScalar::dyadic(3, 2),
                Arc::new(ConstantMartingale::new(2, ExactScalar::thirds(1)).unwrap()),
            ),
        ];
        let c = ConvexCombination::new(parts).unwrap();
        assert!(verify_averaging(&c, 3).unwrap().passed());
    }

    #[test]
    fn omitted_bound_is_geometric_at_the_root() {
        let w = Arc::new(WTest::avoidance(1, 1).unwrap());
        let d = SumMartingale::with_components(w, 4);
        assert_eq!(d.omitted_bound(0), ExactScalar::pow2(-4));
    }
}
