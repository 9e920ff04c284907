//! Functions whose dyadic averages fail to converge: the parity function of a dyadic
//! tree, and the indicator of a half-space with a dyadic face.

use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::dyadic::{locate_cube, AxisBox, BoxUnion, Point};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::ExactScalar;
use crate::stepfn::{ConstantSequence, SimpleStepFunction, StepSequence};
use crate::tree::DyadicTree;

/// `f = 1` on residuals `Q \ ∪ children` of even-level nodes and `0` on odd ones,
/// i.e. `f = Σ_L (−1)^L χ(level L)`.
#[derive(Clone, Debug)]
pub struct OscillatingFunction {
    tree: Arc<DyadicTree>,
    built: SimpleStepFunction,
    max_precision: u32,
}

fn alternating(n: usize, levels: Vec<BoxUnion>) -> Result<SimpleStepFunction> {
    let mut terms = Vec::new();
    for (l, set) in levels.into_iter().enumerate() {
        let v = if l % 2 == 0 {
            ExactScalar::one()
        } else {
            ExactScalar::from_int(-1)
        };
        terms.extend(set.into_boxes().into_iter().map(|b| (b, v.clone())));
    }
    SimpleStepFunction::from_terms(n, terms)
}

impl OscillatingFunction {
    pub fn synthesize(tree: DyadicTree) -> Result<Self> {
        let rep = tree.verify();
        if !rep.passed() {
            return Err(Error::Precondition(format!(
                "tree fails verification: {:?}",
                rep.violations.first()
            )));
        }
        let top = tree.nodes.iter().map(|nd| nd.level).max().unwrap_or(0);
        let levels = (0..=top).map(|l| tree.level_set(l)).collect();
        let built = alternating(tree.n, levels)?;
        let max_precision = tree.nodes.iter().map(|nd| nd.r).max().unwrap_or(0);
        Ok(OscillatingFunction {
            tree: Arc::new(tree),
            built,
            max_precision,
        })
    }

    pub fn tree(&self) -> &DyadicTree {
        &self.tree
    }

    /// `f` over the materialized nodes.
    pub fn built(&self) -> &SimpleStepFunction {
        &self.built
    }

    /// `Σ μ(Q)/4` over unexpanded nodes: bounds `‖f − built‖₁`, since below such a `Q`
    /// the alternating tail is dominated by the children's indicator.
    pub fn unexpanded_bound(&self) -> ExactScalar {
        self.tree
            .nodes
            .iter()
            .filter(|nd| !nd.expanded)
            .fold(ExactScalar::zero(), |acc, nd| {
                &acc + &nd.cube().measure().mul_pow2(-2)
            })
    }

    /// `f_m` from `T_m = {Q ∈ T^{m+2}_i : i ≤ m}`.
    pub fn approximant_at(&self, m: u32) -> Result<SimpleStepFunction> {
        let levels = (0..=m).map(|i| self.tree.tree_array(m + 2, i)).collect();
        alternating(self.tree.n, levels)
    }

    /// `‖f_m − built‖₁ + unexpanded_bound`, an upper bound on `‖f − f_m‖₁`.
    pub fn certified_gap(&self, m: u32) -> Result<ExactScalar> {
        let fm = self.approximant_at(m)?;
        Ok(&fm.l1_distance(&self.built) + &self.unexpanded_bound())
    }

    /// For every node: `∫_Q f ≥ μ(Q \ ∪ children)` when even, `≤ μ(∪ children)` when odd,
    /// and those bounds against `3/4 μ(Q)` and `1/4 μ(Q)`.
    pub fn parity_bounds(&self) -> Vec<ParityRow> {
        self.tree
            .nodes
            .iter()
            .map(|nd| {
                let q = nd.cube();
                let qm = q.measure();
                let kids = nd.children.iter().fold(ExactScalar::zero(), |a, &c| {
                    &a + &self.tree.nodes[c].cube().measure()
                });
                let integral = self.built.integrate(&q.to_open_box());
                let even = nd.level % 2 == 0;
                let (bound, holds) = if even {
                    let b = &qm - &kids;
                    let holds = integral >= b && b >= &qm.mul_pow2(-2) * &ExactScalar::from_int(3);
                    (b, holds)
                } else {
                    let holds = integral <= kids && kids <= qm.mul_pow2(-2);
                    (kids, holds)
                };
                ParityRow {
                    node: nd.id,
                    level: nd.level,
                    integral,
                    bound,
                    holds,
                }
            })
            .collect()
    }
}

impl StepSequence for OscillatingFunction {
    fn dim(&self) -> usize {
        self.tree.n
    }

    fn approximant(&self, m: u32) -> Result<SimpleStepFunction> {
        self.approximant_at(m)
    }

    fn precision(&self) -> Poly {
        Poly::constant(self.max_precision as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityRow {
    pub node: usize,
    pub level: u32,
    pub integral: ExactScalar,
    pub bound: ExactScalar,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub level: u32,
    pub r: u32,
    #[serde(with = "crate::dyadic::bigint_vec")]
    pub u: Vec<BigInt>,
    /// Average of the materialized `f` over the node.
    pub average: ExactScalar,
    /// `1 − μ(children)/μ(Q)` at even levels, `μ(children)/μ(Q)` at odd ones.
    pub certified: ExactScalar,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub point: Point,
    pub requested_depth: u32,
    pub rows: Vec<OscillationRow>,
    /// Set when `x`'s path ends before the requested depth.
    pub partial: bool,
}

impl OscillationReport {
    pub fn passed(&self) -> bool {
        !self.partial && self.rows.iter().all(|r| r.holds)
    }
}

/// Averages of `f` over the ancestors of `x`: `≥ 3/4` at even levels, `≤ 1/4` at odd.
pub fn oscillation_check(
    f: &OscillatingFunction,
    x: &Point,
    depth: u32,
) -> Result<OscillationReport> {
    let tree = f.tree();
    if x.dim() != tree.n {
        return Err(Error::Dimension {
            expected: tree.n,
            got: x.dim(),
        });
    }
    let path = tree.probe(x);
    let three_quarters = ExactScalar::dyadic(3, 2);
    let quarter = ExactScalar::dyadic(1, 2);
    let mut rows = Vec::new();
    for &id in path.iter().take(depth as usize + 1) {
        let nd = &tree.nodes[id];
        let q = nd.cube();
        let scale = q.mass_exponent() as i64;
        let average = f.built().integrate(&q.to_open_box()).mul_pow2(scale);
        let kids = nd
            .children
            .iter()
            .fold(ExactScalar::zero(), |a, &c| {
                &a + &tree.nodes[c].cube().measure()
            })
            .mul_pow2(scale);
        let (certified, holds) = if nd.level.is_multiple_of(2) {
            let c = &ExactScalar::one() - &kids;
            let holds = average >= three_quarters && c >= three_quarters;
            (c, holds)
        } else {
            let holds = average <= quarter && kids <= quarter;
            (kids, holds)
        };
        rows.push(OscillationRow {
            level: nd.level,
            r: nd.r,
            u: nd.u.clone(),
            average,
            certified,
            holds,
        });
    }
    Ok(OscillationReport {
        point: x.clone(),
        requested_depth: depth,
        partial: (path.len() as u32) < depth + 1,
        rows,
    })
}

/// `χ([0,d] × [0,1]^{n−1})` with the face on `axis` (zero-based), as a constant sequence.
pub fn dyadic_component_counterexample(
    n: usize,
    axis: usize,
    d: &ExactScalar,
) -> Result<ConstantSequence> {
    crate::dyadic::check_dim(n, crate::dyadic::DEFAULT_MAX_DIM)?;
    if axis >= n {
        return Err(Error::InvalidInput(format!(
            "axis {axis} out of range for n = {n}"
        )));
    }
    if !d.is_dyadic() || !d.is_positive() || *d >= ExactScalar::one() {
        return Err(Error::InvalidInput(format!(
            "face {d} must be a dyadic rational in (0,1)"
        )));
    }
    let mut hi = vec![ExactScalar::one(); n];
    hi[axis] = d.clone();
    let b = AxisBox::open(vec![ExactScalar::zero(); n], hi)?;
    Ok(ConstantSequence::new(SimpleStepFunction::indicator(b)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceAverages {
    pub r: u32,
    pub left: ExactScalar,
    pub right: ExactScalar,
    pub centered: ExactScalar,
}

impl FaceAverages {
    pub fn gap(&self) -> ExactScalar {
        (&self.left - &self.right).abs()
    }
}

/// Averages over side-`2^{-r}` cubes just left of, just right of, and centered on the
/// face through `x`; the other axes use the dyadic cube of `x`.
pub fn face_averages(
    f: &SimpleStepFunction,
    axis: usize,
    x: &Point,
    r_min: u32,
    r_max: u32,
) -> Result<Vec<FaceAverages>> {
    let n = f.dim();
    if x.dim() != n || axis >= n {
        return Err(Error::Dimension {
            expected: n,
            got: x.dim(),
        });
    }
    let d = ExactScalar::from_ratio(x.coord(axis))
        .filter(ExactScalar::is_dyadic)
        .ok_or_else(|| Error::InvalidInput("face coordinate must be dyadic".into()))?;
    let mut rows = Vec::new();
    for r in r_min..=r_max {
        let step = ExactScalar::pow2(-(r as i64));
        let half = step.mul_pow2(-1);
        if (&d - &step).is_negative() || &d + &step > ExactScalar::one() {
            return Err(Error::InvalidInput(format!(
                "precision {r} too coarse for the face at {d}"
            )));
        }
        let cell = locate_cube(x, r)?.to_box();
        let with_axis = |lo: ExactScalar, hi: ExactScalar| {
            let mut lows: Vec<ExactScalar> = (0..n).map(|i| cell.lo(i).clone()).collect();
            let mut highs: Vec<ExactScalar> = (0..n).map(|i| cell.hi(i).clone()).collect();
            lows[axis] = lo;
            highs[axis] = hi;
            AxisBox::open(lows, highs)
        };
        let avg = |b: AxisBox| -> Result<ExactScalar> {
            ExactScalar::from_ratio(&f.average(&b)?)
                .ok_or_else(|| Error::Invariant("non-dyadic average".into()))
        };
        rows.push(FaceAverages {
            r,
            left: avg(with_axis(&d - &step, d.clone())?)?,
            right: avg(with_axis(d.clone(), &d + &step)?)?,
            centered: avg(with_axis(&d - &half, &d + &half)?)?,
        });
    }
    Ok(rows)
}
