//! Simple step functions and their exact L1 calculus.

mod maximal;
mod probe;
mod random;
mod sequence;

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dyadic::{AxisBox, BoxUnion, Point};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

pub use maximal::{
    count_straddling_translates, hardy_littlewood_default, maximal_set, translate_average,
    MaximalSet, StraddleCount, DEFAULT_HL_CONSTANT_BASE,
};
pub use probe::{lebesgue_probe, ProbeRow};
pub use random::{random_corpus, random_step_function, RANDOM_BOX_PRECISION};
pub use sequence::{
    check_gap_certificates, BumpSequence, ConstantSequence, GapRow, Placement, SequenceSpec,
    StepSequence,
};

/// Result of pointwise evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Value(ExactScalar),
    /// The point lies on a face of some piece.
    Breakpoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepPiece {
    #[serde(rename = "box")]
    pub cell: AxisBox,
    pub value: ExactScalar,
}

/// Finite dyadic-valued combination of indicators of disjoint open dyadic boxes.
///
/// Points not covered by any piece take the value 0. `precision` is the
/// largest endpoint precision, so the function is constant on every open
/// dyadic cube of at least that precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimpleStepFunction {
    #[serde(skip)]
    dim: usize,
    pieces: Vec<StepPiece>,
    precision: u32,
}

#[derive(Deserialize)]
struct StepRepr {
    pieces: Vec<StepPiece>,
    #[serde(default)]
    precision: Option<u32>,
    #[serde(default)]
    dim: Option<usize>,
}

impl<'de> Deserialize<'de> for SimpleStepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = StepRepr::deserialize(d)?;
        let dim = match (r.dim, r.pieces.first()) {
            (_, Some(p)) => p.cell.dim(),
            (Some(n), None) => n,
            (None, None) => {
                return Err(serde::de::Error::custom(
                    "empty step function needs \"dim\"",
                ))
            }
        };
        let f = SimpleStepFunction::from_terms(
            dim,
            r.pieces.into_iter().map(|p| (p.cell, p.value)).collect(),
        )
        .map_err(serde::de::Error::custom)?;
        if let Some(p) = r.precision {
            if f.precision > p {
                return Err(serde::de::Error::custom(format!(
                    "declared precision {p} below endpoint precision {}",
                    f.precision
                )));
            }
        }
        Ok(f)
    }
}

impl SimpleStepFunction {
    pub fn zero(dim: usize) -> Self {
        SimpleStepFunction {
            dim,
            pieces: Vec::new(),
            precision: 0,
        }
    }

    pub fn constant(dim: usize, value: ExactScalar) -> Result<Self> {
        Self::from_terms(dim, vec![(AxisBox::open_unit(dim), value)])
    }

    pub fn indicator(cell: AxisBox) -> Result<Self> {
        Self::from_terms(cell.dim(), vec![(cell, ExactScalar::one())])
    }

    /// `Σ value_i · χ_{box_i}` restricted to the unit cube; overlapping boxes add.
    ///
    /// The result is disjointified on the common refinement grid of all
    /// endpoints, with equal neighbours along the last axis merged.
    pub fn from_terms(dim: usize, terms: Vec<(AxisBox, ExactScalar)>) -> Result<Self> {
        let unit = AxisBox::open_unit(dim);
        let mut clipped = Vec::with_capacity(terms.len());
        for (b, v) in terms {
            if b.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: b.dim(),
                });
            }
            if b.dyadic_precision().is_none() {
                return Err(Error::InvalidInput(
                    "step function boxes need dyadic endpoints".into(),
                ));
            }
            if !v.is_dyadic() {
                return Err(Error::InvalidInput(format!("step value {v} is not dyadic")));
            }
            if v.is_zero() {
                continue;
            }
            if let Some(c) = b.intersect(&unit) {
                clipped.push((c.with_all_open(), v));
            }
        }
        let pieces = if pairwise_disjoint(&clipped) {
            clipped
        } else {
            refine(dim, &clipped)
        };
        Ok(Self::from_disjoint(dim, pieces))
    }

    fn from_disjoint(dim: usize, pieces: Vec<(AxisBox, ExactScalar)>) -> Self {
        let precision = pieces
            .iter()
            .map(|(b, _)| b.dyadic_precision().unwrap_or(0))
            .max()
            .unwrap_or(0);
        SimpleStepFunction {
            dim,
            pieces: pieces
                .into_iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(cell, value)| StepPiece { cell, value })
                .collect(),
            precision,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[StepPiece] {
        &self.pieces
    }

    /// Breakpoint precision.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn evaluate(&self, d: &Point) -> Result<Evaluation> {
        if d.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: d.dim(),
            });
        }
        if !d.in_unit_cube() {
            return Err(Error::Domain);
        }
        let mut on_face = false;
        for p in &self.pieces {
            match p.cell.classify(d) {
                crate::dyadic::Membership::Inside => return Ok(Evaluation::Value(p.value.clone())),
                crate::dyadic::Membership::Boundary => on_face = true,
                crate::dyadic::Membership::Outside => {}
            }
        }
        Ok(if on_face {
            Evaluation::Breakpoint
        } else {
            Evaluation::Value(ExactScalar::zero())
        })
    }

    /// `∫_B f dμ`
    pub fn integrate(&self, b: &AxisBox) -> ExactScalar {
        self.pieces
            .iter()
            .filter_map(|p| p.cell.intersect(b).map(|c| &p.value * &c.measure()))
            .sum()
    }

    pub fn integral(&self) -> ExactScalar {
        self.pieces
            .iter()
            .map(|p| &p.value * &p.cell.measure())
            .sum()
    }

    /// `∫_B f dμ / μ(B)`
    pub fn average(&self, b: &AxisBox) -> Result<BigRational> {
        let m = b.measure();
        if m.is_zero() {
            return Err(Error::ZeroMeasure);
        }
        Ok(self.integrate(b).to_ratio() / m.to_ratio())
    }

    pub fn l1_norm(&self) -> ExactScalar {
        self.pieces
            .iter()
            .map(|p| &p.value.abs() * &p.cell.measure())
            .sum()
    }

    pub fn abs(&self) -> Self {
        SimpleStepFunction {
            dim: self.dim,
            pieces: self
                .pieces
                .iter()
                .map(|p| StepPiece {
                    cell: p.cell.clone(),
                    value: p.value.abs(),
                })
                .collect(),
            precision: self.precision,
        }
    }

    pub fn scale(&self, c: &ExactScalar) -> Result<Self> {
        if !c.is_dyadic() {
            return Err(Error::InvalidInput("scale factor must be dyadic".into()));
        }
        Ok(Self::from_disjoint(
            self.dim,
            self.pieces
                .iter()
                .map(|p| (p.cell.clone(), &p.value * c))
                .collect(),
        ))
    }

    /// `self − other` on the common refinement.
    pub fn sub(&self, other: &SimpleStepFunction) -> Self {
        let mut terms: Vec<(AxisBox, ExactScalar)> = self
            .pieces
            .iter()
            .map(|p| (p.cell.clone(), p.value.clone()))
            .collect();
        terms.extend(other.pieces.iter().map(|p| (p.cell.clone(), -&p.value)));
        Self::from_disjoint(self.dim, refine(self.dim, &terms))
    }

    pub fn add(&self, other: &SimpleStepFunction) -> Self {
        let mut terms: Vec<(AxisBox, ExactScalar)> = self
            .pieces
            .iter()
            .map(|p| (p.cell.clone(), p.value.clone()))
            .collect();
        terms.extend(
            other
                .pieces
                .iter()
                .map(|p| (p.cell.clone(), p.value.clone())),
        );
        Self::from_disjoint(self.dim, refine(self.dim, &terms))
    }

    /// `∫ |f − g|` over the unit cube.
    pub fn l1_distance(&self, other: &SimpleStepFunction) -> ExactScalar {
        self.sub(other).l1_norm()
    }

    /// `S(f, ε) = {x : |f(x)| > ε}` as a union of open pieces.
    pub fn chebyshev_set(&self, eps: &ExactScalar) -> Result<BoxUnion> {
        if !eps.is_positive() {
            return Err(Error::Precondition("eps must be positive".into()));
        }
        Ok(BoxUnion::new(
            self.dim,
            self.pieces
                .iter()
                .filter(|p| &p.value.abs() > eps)
                .map(|p| p.cell.clone())
                .collect(),
        )
        .expect("pieces share the function's dimension"))
    }

    /// Sorted distinct piece endpoints on each axis, always including 0 and 1.
    pub fn breakpoints(&self) -> Vec<Vec<ExactScalar>> {
        (0..self.dim)
            .map(|i| {
                let mut v: Vec<ExactScalar> = vec![ExactScalar::zero(), ExactScalar::one()];
                for p in &self.pieces {
                    v.push(p.cell.lo(i).clone());
                    v.push(p.cell.hi(i).clone());
                }
                v.sort();
                v.dedup();
                v
            })
            .collect()
    }
}

fn pairwise_disjoint(items: &[(AxisBox, ExactScalar)]) -> bool {
    if items.len() > 64 {
        // Quadratic check is not worth it past this size; refinement is exact anyway.
        return false;
    }
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            if items[i].0.overlaps(&items[j].0) {
                return false;
            }
        }
    }
    true
}

/// Odometer step over the half-open index ranges; false once exhausted.
pub(crate) fn advance(idx: &mut [usize], ranges: &[(usize, usize)]) -> bool {
    for axis in (0..idx.len()).rev() {
        idx[axis] += 1;
        if idx[axis] < ranges[axis].1 {
            return true;
        }
        idx[axis] = ranges[axis].0;
    }
    false
}

/// Disjointify a signed sum of box indicators on the grid of all endpoints.
pub(crate) fn refine(dim: usize, terms: &[(AxisBox, ExactScalar)]) -> Vec<(AxisBox, ExactScalar)> {
    if terms.is_empty() {
        return Vec::new();
    }
    let grid: Vec<Vec<ExactScalar>> = (0..dim)
        .map(|i| {
            let mut v: Vec<ExactScalar> = terms
                .iter()
                .flat_map(|(b, _)| [b.lo(i).clone(), b.hi(i).clone()])
                .collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let mut cells: BTreeMap<Vec<usize>, ExactScalar> = BTreeMap::new();
    for (b, v) in terms {
        let ranges: Vec<(usize, usize)> = (0..dim)
            .map(|i| {
                let lo = grid[i].binary_search(b.lo(i)).expect("endpoint on grid");
                let hi = grid[i].binary_search(b.hi(i)).expect("endpoint on grid");
                (lo, hi)
            })
            .collect();
        if ranges.iter().any(|(lo, hi)| lo >= hi) {
            continue;
        }
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let e = cells.entry(idx.clone()).or_insert_with(ExactScalar::zero);
            *e = &*e + v;
            if !advance(&mut idx, &ranges) {
                break;
            }
        }
    }
    // Merge runs of equal values along the last axis.
    let mut out: Vec<(AxisBox, ExactScalar)> = Vec::new();
    let mut run: Option<(Vec<usize>, usize, ExactScalar)> = None;
    let flush = |run: &mut Option<(Vec<usize>, usize, ExactScalar)>,
                 out: &mut Vec<(AxisBox, ExactScalar)>| {
        if let Some((start, end, v)) = run.take() {
            if !v.is_zero() {
                let axes = (0..dim)
                    .map(|i| {
                        let (a, b) = if i + 1 == dim {
                            (start[i], end)
                        } else {
                            (start[i], start[i] + 1)
                        };
                        crate::dyadic::Interval::open(grid[i][a].clone(), grid[i][b].clone())
                    })
                    .collect();
                out.push((AxisBox::from_axes_unchecked(axes), v));
            }
        }
    };
    for (idx, v) in cells {
        if v.is_zero() {
            flush(&mut run, &mut out);
            continue;
        }
        let extend = match &run {
            Some((start, end, rv)) => {
                start[..dim - 1] == idx[..dim - 1] && *end == idx[dim - 1] && *rv == v
            }
            None => false,
        };
        if extend {
            if let Some(r) = run.as_mut() {
                r.1 += 1;
            }
        } else {
            flush(&mut run, &mut out);
            let end = idx[dim - 1] + 1;
            run = Some((idx, end, v));
        }
    }
    flush(&mut run, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: i64, e: u32) -> ExactScalar {
        ExactScalar::dyadic(n, e)
    }

    fn half_strip() -> SimpleStepFunction {
        SimpleStepFunction::indicator(
            AxisBox::open(vec![d(0, 0), d(0, 0)], vec![d(1, 1), d(1, 0)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_evaluates_everywhere() {
        let f = SimpleStepFunction::constant(2, d(1, 0)).unwrap();
        assert_eq!(
            f.evaluate(&Point::from_fracs(&[(1, 3), (1, 5)])).unwrap(),
            Evaluation::Value(d(1, 0))
        );
        assert_eq!(f.integral(), d(1, 0));
    }

    #[test]
    fn breakpoint_sentinel() {
        let f = half_strip();
        assert_eq!(
            f.evaluate(&Point::from_fracs(&[(1, 2), (1, 4)])).unwrap(),
            Evaluation::Breakpoint
        );
        assert_eq!(
            f.evaluate(&Point::from_fracs(&[(3, 4), (1, 4)])).unwrap(),
            Evaluation::Value(ExactScalar::zero())
        );
        assert_eq!(
            f.evaluate(&Point::from_fracs(&[(3, 2), (1, 4)]))
                .unwrap_err(),
            Error::Domain
        );
    }

    #[test]
    fn integrate_over_shifted_strip() {
        let f = half_strip();
        let b = AxisBox::open(vec![d(1, 2), d(0, 0)], vec![d(3, 2), d(1, 0)]).unwrap();
        assert_eq!(f.integrate(&b), d(1, 2));
    }

    #[test]
    fn l1_distance_examples() {
        let a = SimpleStepFunction::indicator(AxisBox::open(vec![d(0, 0)], vec![d(1, 1)]).unwrap())
            .unwrap();
        let b = SimpleStepFunction::indicator(AxisBox::open(vec![d(1, 2)], vec![d(3, 2)]).unwrap())
            .unwrap();
        assert_eq!(a.l1_distance(&a), ExactScalar::zero());
        assert_eq!(a.l1_distance(&b), d(1, 1));
    }

    #[test]
    fn average_of_constant() {
        let f = SimpleStepFunction::constant(1, d(3, 2)).unwrap();
        let b = AxisBox::open(vec![ExactScalar::thirds(1)], vec![d(1, 1)]).unwrap();
        assert_eq!(f.average(&b).unwrap(), d(3, 2).to_ratio());
        let flat = AxisBox::open(vec![d(1, 2)], vec![d(1, 2)]).unwrap();
        assert_eq!(f.average(&flat).unwrap_err(), Error::ZeroMeasure);
    }

    #[test]
    fn chebyshev_example() {
        let f = SimpleStepFunction::from_terms(
            1,
            vec![(
                AxisBox::open(vec![d(0, 0)], vec![d(1, 2)]).unwrap(),
                d(2, 0),
            )],
        )
        .unwrap();
        let s = f.chebyshev_set(&d(1, 0)).unwrap();
        assert_eq!(s.measure(), d(1, 2));
        assert!(&s.measure() * &d(1, 0) <= f.l1_norm());
        assert!(f.chebyshev_set(&d(2, 0)).unwrap().is_empty());
        assert!(f.chebyshev_set(&ExactScalar::zero()).is_err());
    }

    #[test]
    fn overlapping_terms_add() {
        let a = AxisBox::open(vec![d(0, 0)], vec![d(1, 1)]).unwrap();
        let b = AxisBox::open(vec![d(1, 2)], vec![d(3, 2)]).unwrap();
        let f = SimpleStepFunction::from_terms(1, vec![(a, d(1, 0)), (b, d(1, 0))]).unwrap();
        assert_eq!(f.pieces().len(), 3);
        assert_eq!(
            f.evaluate(&Point::from_fracs(&[(3, 8)])).unwrap(),
            Evaluation::Value(d(2, 0))
        );
        assert_eq!(f.integral(), d(1, 0));
    }

    #[test]
    fn json_round_trip() {
        let f = half_strip();
        let s = serde_json::to_string(&f).unwrap();
        let g: SimpleStepFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }
}
