//! Axis-aligned boxes, finite unions of boxes, and exact Lebesgue measure.
//!
//! Measures are computed by a recursive slab sweep: the breakpoints of the
//! first axis split space into slabs, each slab sees a fixed set of active
//! boxes, and the measure of that set's projection is computed recursively on
//! the remaining axes. The result is the exact measure of the union regardless
//! of overlaps. The same sweep answers intersection and symmetric-difference
//! queries by tagging boxes with the union they came from.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::point::{cmp_ratio_scalar, Point};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// Three-valued membership oracle: inside = 1, boundary = -1, outside = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

impl Membership {
    pub fn code(self) -> i8 {
        match self {
            Membership::Inside => 1,
            Membership::Boundary => -1,
            Membership::Outside => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: ExactScalar,
    pub hi: ExactScalar,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: ExactScalar, hi: ExactScalar) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn length(&self) -> ExactScalar {
        if self.hi > self.lo {
            &self.hi - &self.lo
        } else {
            ExactScalar::zero()
        }
    }
}

/// Axis-aligned product of intervals with per-face closure flags.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AxisBox {
    axes: Vec<Interval>,
}

impl AxisBox {
    pub fn new(axes: Vec<Interval>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput(
                "box must have at least one axis".into(),
            ));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.lo > a.hi {
                return Err(Error::InvalidInput(format!(
                    "box axis {i} has lower {} above upper {}",
                    a.lo, a.hi
                )));
            }
        }
        Ok(AxisBox { axes })
    }

    pub(crate) fn from_axes_unchecked(axes: Vec<Interval>) -> Self {
        AxisBox { axes }
    }

    /// Open box `∏ (lo_i, hi_i)`.
    pub fn open(lo: Vec<ExactScalar>, hi: Vec<ExactScalar>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        Self::new(
            lo.into_iter()
                .zip(hi)
                .map(|(l, h)| Interval::open(l, h))
                .collect(),
        )
    }

    pub fn closed(lo: Vec<ExactScalar>, hi: Vec<ExactScalar>) -> Result<Self> {
        let mut b = Self::open(lo, hi)?;
        for a in &mut b.axes {
            a.lo_closed = true;
            a.hi_closed = true;
        }
        Ok(b)
    }

    pub fn unit(n: usize) -> Self {
        AxisBox {
            axes: (0..n)
                .map(|_| Interval {
                    lo: ExactScalar::zero(),
                    hi: ExactScalar::one(),
                    lo_closed: true,
                    hi_closed: true,
                })
                .collect(),
        }
    }

    pub fn open_unit(n: usize) -> Self {
        AxisBox {
            axes: (0..n)
                .map(|_| Interval::open(ExactScalar::zero(), ExactScalar::one()))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Interval {
        &self.axes[i]
    }

    pub fn lo(&self, i: usize) -> &ExactScalar {
        &self.axes[i].lo
    }

    pub fn hi(&self, i: usize) -> &ExactScalar {
        &self.axes[i].hi
    }

    pub fn measure(&self) -> ExactScalar {
        let mut m = ExactScalar::one();
        for a in &self.axes {
            m = &m * &a.length();
            if m.is_zero() {
                break;
            }
        }
        m
    }

    /// True when the box has empty interior.
    pub fn is_degenerate(&self) -> bool {
        self.axes.iter().any(|a| a.lo >= a.hi)
    }

    pub fn with_all_open(&self) -> Self {
        AxisBox {
            axes: self
                .axes
                .iter()
                .map(|a| Interval::open(a.lo.clone(), a.hi.clone()))
                .collect(),
        }
    }

    pub fn is_open(&self) -> bool {
        self.axes.iter().all(|a| !a.lo_closed && !a.hi_closed)
    }

    /// Exact intersection; `None` when the interiors do not meet.
    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut axes = Vec::with_capacity(self.dim());
        for (a, b) in self.axes.iter().zip(&other.axes) {
            let (lo, lo_closed) = match a.lo.cmp(&b.lo) {
                Ordering::Greater => (a.lo.clone(), a.lo_closed),
                Ordering::Less => (b.lo.clone(), b.lo_closed),
                Ordering::Equal => (a.lo.clone(), a.lo_closed && b.lo_closed),
            };
            let (hi, hi_closed) = match a.hi.cmp(&b.hi) {
                Ordering::Less => (a.hi.clone(), a.hi_closed),
                Ordering::Greater => (b.hi.clone(), b.hi_closed),
                Ordering::Equal => (a.hi.clone(), a.hi_closed && b.hi_closed),
            };
            if lo >= hi {
                return None;
            }
            axes.push(Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            });
        }
        Some(AxisBox { axes })
    }

    /// Whether the interiors of the two boxes meet.
    pub fn overlaps(&self, other: &AxisBox) -> bool {
        self.axes
            .iter()
            .zip(&other.axes)
            .all(|(a, b)| a.lo < b.hi && b.lo < a.hi)
    }

    /// Closure containment: `other ⊆ closure(self)`.
    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.axes
            .iter()
            .zip(&other.axes)
            .all(|(a, b)| a.lo <= b.lo && b.hi <= a.hi)
    }

    /// Topological classification of a point relative to this box.
    pub fn classify(&self, p: &Point) -> Membership {
        let mut on_face = false;
        for (i, a) in self.axes.iter().enumerate() {
            let c = p.coord(i);
            let lo = cmp_ratio_scalar(c, &a.lo);
            let hi = cmp_ratio_scalar(c, &a.hi);
            if lo == Ordering::Less || hi == Ordering::Greater {
                return Membership::Outside;
            }
            if lo == Ordering::Equal || hi == Ordering::Equal {
                on_face = true;
            }
        }
        if on_face {
            Membership::Boundary
        } else {
            Membership::Inside
        }
    }

    /// Set membership respecting the closure flags.
    pub fn contains_point(&self, p: &Point) -> bool {
        self.axes.iter().enumerate().all(|(i, a)| {
            let c = p.coord(i);
            let lo = cmp_ratio_scalar(c, &a.lo);
            let hi = cmp_ratio_scalar(c, &a.hi);
            let above = lo == Ordering::Greater || (lo == Ordering::Equal && a.lo_closed);
            let below = hi == Ordering::Less || (hi == Ordering::Equal && a.hi_closed);
            above && below
        })
    }

    pub fn translate(&self, shift: &[ExactScalar]) -> AxisBox {
        AxisBox {
            axes: self
                .axes
                .iter()
                .zip(shift)
                .map(|(a, t)| Interval {
                    lo: &a.lo + t,
                    hi: &a.hi + t,
                    lo_closed: a.lo_closed,
                    hi_closed: a.hi_closed,
                })
                .collect(),
        }
    }

    /// Largest binary precision among the endpoints; `None` if any endpoint is not dyadic.
    pub fn dyadic_precision(&self) -> Option<u32> {
        let mut p = 0;
        for a in &self.axes {
            if !a.lo.is_dyadic() || !a.hi.is_dyadic() {
                return None;
            }
            p = p.max(a.lo.two_exp()).max(a.hi.two_exp());
        }
        Some(p)
    }

    /// Smallest open box with endpoints at precision `p` containing this one.
    pub fn fatten_to_dyadic(&self, p: u32) -> AxisBox {
        AxisBox {
            axes: self
                .axes
                .iter()
                .map(|a| Interval::open(a.lo.floor_dyadic(p), a.hi.ceil_dyadic(p)))
                .collect(),
        }
    }

    /// Rational center point.
    pub fn center(&self) -> Point {
        let two = ExactScalar::dyadic(1, 1);
        Point::new(
            self.axes
                .iter()
                .map(|a| (&(&a.lo + &a.hi) * &two).to_ratio())
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    bounds: Vec<[ExactScalar; 2]>,
    closed: Vec<[bool; 2]>,
}

impl Serialize for AxisBox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BoxRepr {
            bounds: self
                .axes
                .iter()
                .map(|a| [a.lo.clone(), a.hi.clone()])
                .collect(),
            closed: self
                .axes
                .iter()
                .map(|a| [a.lo_closed, a.hi_closed])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AxisBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = BoxRepr::deserialize(d)?;
        if r.closed.len() != r.bounds.len() {
            return Err(serde::de::Error::custom(
                "closure flags do not match bounds",
            ));
        }
        let axes = r
            .bounds
            .into_iter()
            .zip(r.closed)
            .map(|([lo, hi], [lc, hc])| Interval {
                lo,
                hi,
                lo_closed: lc,
                hi_closed: hc,
            })
            .collect();
        AxisBox::new(axes).map_err(serde::de::Error::custom)
    }
}

/// Finite union of boxes of a common dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxUnion {
    dim: usize,
    boxes: Vec<AxisBox>,
}

impl BoxUnion {
    pub fn empty(dim: usize) -> Self {
        BoxUnion {
            dim,
            boxes: Vec::new(),
        }
    }

    pub fn new(dim: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: b.dim(),
                });
            }
        }
        Ok(BoxUnion { dim, boxes })
    }

    pub fn single(b: AxisBox) -> Self {
        BoxUnion {
            dim: b.dim(),
            boxes: vec![b],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn into_boxes(self) -> Vec<AxisBox> {
        self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.iter().all(|b| b.is_degenerate())
    }

    pub fn push(&mut self, b: AxisBox) {
        debug_assert_eq!(b.dim(), self.dim);
        self.boxes.push(b);
    }

    pub fn extend(&mut self, other: BoxUnion) {
        debug_assert_eq!(other.dim, self.dim);
        self.boxes.extend(other.boxes);
    }

    pub fn union(&self, other: &BoxUnion) -> BoxUnion {
        let mut out = self.clone();
        out.boxes.extend(other.boxes.iter().cloned());
        out
    }

    /// Exact Lebesgue measure of the union.
    pub fn measure(&self) -> ExactScalar {
        let items: Vec<(&AxisBox, u8)> = self.boxes.iter().map(|b| (b, 1)).collect();
        masked_measure(&items, self.dim, &|m| m != 0)
    }

    /// Clip every box to `b`, dropping those whose interiors miss it.
    pub fn intersect_box(&self, b: &AxisBox) -> BoxUnion {
        BoxUnion {
            dim: self.dim,
            boxes: self.boxes.iter().filter_map(|x| x.intersect(b)).collect(),
        }
    }

    pub fn intersection_measure(&self, other: &BoxUnion) -> ExactScalar {
        let items = tagged(self, other);
        masked_measure(&items, self.dim, &|m| m == 3)
    }

    /// `μ(self Δ other)`
    pub fn sym_diff_measure(&self, other: &BoxUnion) -> ExactScalar {
        let items = tagged(self, other);
        masked_measure(&items, self.dim, &|m| m == 1 || m == 2)
    }

    /// `μ(self ∖ other)`
    pub fn difference_measure(&self, other: &BoxUnion) -> ExactScalar {
        let items = tagged(self, other);
        masked_measure(&items, self.dim, &|m| m == 1)
    }

    /// Three-valued membership: inside any constituent beats lying on a face of one.
    pub fn membership(&self, p: &Point) -> Membership {
        let mut boundary = false;
        for b in &self.boxes {
            if b.is_degenerate() {
                continue;
            }
            match b.classify(p) {
                Membership::Inside => return Membership::Inside,
                Membership::Boundary => boundary = true,
                Membership::Outside => {}
            }
        }
        if boundary {
            Membership::Boundary
        } else {
            Membership::Outside
        }
    }

    /// Largest endpoint precision, or `None` if some endpoint is not dyadic.
    pub fn dyadic_precision(&self) -> Option<u32> {
        let mut p = 0;
        for b in &self.boxes {
            p = p.max(b.dyadic_precision()?);
        }
        Some(p)
    }

    pub fn translate(&self, shift: &[ExactScalar]) -> BoxUnion {
        BoxUnion {
            dim: self.dim,
            boxes: self.boxes.iter().map(|b| b.translate(shift)).collect(),
        }
    }

    /// Every box made open; measure is unchanged.
    pub fn interior_boxes(&self) -> BoxUnion {
        BoxUnion {
            dim: self.dim,
            boxes: self.boxes.iter().map(|b| b.with_all_open()).collect(),
        }
    }
}

fn tagged<'a>(a: &'a BoxUnion, b: &'a BoxUnion) -> Vec<(&'a AxisBox, u8)> {
    debug_assert_eq!(a.dim, b.dim);
    a.boxes
        .iter()
        .map(|x| (x, 1u8))
        .chain(b.boxes.iter().map(|x| (x, 2u8)))
        .collect()
}

/// Measure of the points whose covering tag mask satisfies `pred`.
///
/// Each item carries a tag bit (1 or 2); a point's mask is the OR of the
/// tags of the boxes covering it.
pub(crate) fn masked_measure(
    items: &[(&AxisBox, u8)],
    dim: usize,
    pred: &dyn Fn(u8) -> bool,
) -> ExactScalar {
    let live: Vec<(&AxisBox, u8)> = items
        .iter()
        .filter(|(b, _)| !b.is_degenerate())
        .copied()
        .collect();
    if live.is_empty() || dim == 0 {
        return ExactScalar::zero();
    }
    sweep(&live, 0, dim, pred)
}

fn sweep(
    items: &[(&AxisBox, u8)],
    axis: usize,
    dim: usize,
    pred: &dyn Fn(u8) -> bool,
) -> ExactScalar {
    // (coordinate, is_end, item index); ends sort before starts at equal coordinates.
    let mut events: Vec<(&ExactScalar, bool, usize)> = Vec::with_capacity(items.len() * 2);
    for (i, (b, _)) in items.iter().enumerate() {
        events.push((&b.axis(axis).lo, false, i));
        events.push((&b.axis(axis).hi, true, i));
    }
    events.sort_by(|a, b| a.0.cmp(b.0).then(b.1.cmp(&a.1)));

    let last_axis = axis + 1 == dim;
    let mut total = ExactScalar::zero();
    let mut counts = [0usize; 2];
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut cached: Option<ExactScalar> = None;
    let mut prev: Option<&ExactScalar> = None;
    let mut idx = 0;
    while idx < events.len() {
        let coord = events[idx].0;
        if let Some(p) = prev {
            if coord > p {
                let width = coord - p;
                if last_axis {
                    let mask =
                        (if counts[0] > 0 { 1 } else { 0 }) | (if counts[1] > 0 { 2 } else { 0 });
                    if pred(mask) {
                        total = total + width;
                    }
                } else if !active.is_empty() {
                    let sub = match &cached {
                        Some(v) => v.clone(),
                        None => {
                            let slab: Vec<(&AxisBox, u8)> =
                                active.iter().map(|&i| items[i]).collect();
                            let v = sweep(&slab, axis + 1, dim, pred);
                            cached = Some(v.clone());
                            v
                        }
                    };
                    if !sub.is_zero() {
                        total = total + &sub * &width;
                    }
                }
            }
        }
        while idx < events.len() && events[idx].0 == coord {
            let (_, is_end, i) = events[idx];
            let tag_slot = if items[i].1 & 1 != 0 { 0 } else { 1 };
            if is_end {
                counts[tag_slot] -= 1;
                active.remove(&i);
            } else {
                counts[tag_slot] += 1;
                active.insert(i);
            }
            cached = None;
            idx += 1;
        }
        prev = Some(coord);
    }
    total
}
