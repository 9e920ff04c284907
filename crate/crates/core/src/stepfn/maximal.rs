//! Hardy–Littlewood maximal sets over the translated cube family and the
//! straddling-translate count.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::SimpleStepFunction;
use crate::dyadic::{AxisBox, BoxUnion, Interval, Shift, TranslatedCube};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// Per-axis base of the default maximal-function constant `c = 6^n`.
pub const DEFAULT_HL_CONSTANT_BASE: u64 = 6;

pub fn hardy_littlewood_default(n: usize) -> u64 {
    DEFAULT_HL_CONSTANT_BASE.pow(n as u32)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalSet {
    pub set: BoxUnion,
    pub r_max: u32,
    /// Upper bound on the measure of points only caught by translates finer than `r_max`.
    pub truncation_defect: ExactScalar,
}

/// Average of `f` over a translated cube, with `f` extended by zero outside the unit cube.
pub fn translate_average(f: &SimpleStepFunction, cube: &TranslatedCube) -> ExactScalar {
    let b = cube.to_box();
    f.integrate(&b)
        .mul_pow2(cube.base.precision as i64 * f.dim() as i64)
}

/// |f| tabulated on the compressed grid of its breakpoints.
struct CellGrid {
    grid: Vec<Vec<ExactScalar>>,
    values: Vec<ExactScalar>,
    strides: Vec<usize>,
}

impl CellGrid {
    fn new(f: &SimpleStepFunction) -> Self {
        let grid = f.breakpoints();
        let n = grid.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (grid[i + 1].len() - 1);
        }
        let total = strides
            .first()
            .map(|s| s * (grid[0].len() - 1))
            .unwrap_or(1);
        let mut values = vec![ExactScalar::zero(); total];
        for p in f.pieces() {
            let ranges: Vec<(usize, usize)> = (0..n)
                .map(|i| {
                    (
                        grid[i].binary_search(p.cell.lo(i)).expect("grid endpoint"),
                        grid[i].binary_search(p.cell.hi(i)).expect("grid endpoint"),
                    )
                })
                .collect();
            let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            let v = p.value.abs();
            loop {
                let flat: usize = idx.iter().zip(&strides).map(|(a, s)| a * s).sum();
                values[flat] = v.clone();
                if !super::advance(&mut idx, &ranges) {
                    break;
                }
            }
        }
        CellGrid {
            grid,
            values,
            strides,
        }
    }

    /// Integral of |f| over a product of per-axis cell overlaps.
    fn integral(&self, overlaps: &[&[(usize, ExactScalar)]]) -> ExactScalar {
        let n = overlaps.len();
        let ranges: Vec<(usize, usize)> = overlaps.iter().map(|o| (0, o.len())).collect();
        let mut idx = vec![0usize; n];
        let mut acc = ExactScalar::zero();
        loop {
            let flat: usize = (0..n)
                .map(|i| overlaps[i][idx[i]].0 * self.strides[i])
                .sum();
            let v = &self.values[flat];
            if !v.is_zero() {
                let mut w = v.clone();
                for i in 0..n {
                    w = &w * &overlaps[i][idx[i]].1;
                }
                acc = &acc + &w;
            }
            if !super::advance(&mut idx, &ranges) {
                break;
            }
        }
        acc
    }
}

/// A run of consecutive translate columns on one axis sharing the same cell overlap pattern.
struct ColumnClass {
    u_lo: BigInt,
    u_hi: BigInt,
    overlaps: Vec<(usize, ExactScalar)>,
}

fn column_lo(s: &ExactScalar, u: &BigInt, r: u32) -> ExactScalar {
    s + &ExactScalar::dyadic(u.clone(), r)
}

fn axis_classes(grid: &[ExactScalar], s: &ExactScalar, r: u32) -> Vec<ColumnClass> {
    let width = ExactScalar::pow2(-(r as i64));
    let mut classes = Vec::new();
    let mut straddlers: Vec<BigInt> = Vec::new();
    for g in grid {
        let pos = (g - s).mul_pow2(r as i64);
        if !pos.is_integer() {
            straddlers.push(pos.floor());
        }
    }
    straddlers.sort();
    straddlers.dedup();
    for u in straddlers {
        let lo = column_lo(s, &u, r);
        let hi = &lo + &width;
        let overlaps = grid
            .windows(2)
            .enumerate()
            .filter_map(|(j, w)| {
                let a = w[0].clone().max(lo.clone());
                let b = w[1].clone().min(hi.clone());
                (a < b).then(|| (j, &b - &a))
            })
            .collect();
        classes.push(ColumnClass {
            u_hi: &u + 1,
            u_lo: u,
            overlaps,
        });
    }
    for (j, w) in grid.windows(2).enumerate() {
        let u_lo = (&w[0] - s).mul_pow2(r as i64).ceil();
        let u_hi = (&w[1] - s).mul_pow2(r as i64).floor();
        if u_lo < u_hi {
            classes.push(ColumnClass {
                u_lo,
                u_hi,
                overlaps: vec![(j, width.clone())],
            });
        }
    }
    classes
}

/// `T(f, ε)` truncated to `1 ≤ r ≤ r_max`.
///
/// Averages use the full translate measure `2^{-rn}` with `f` extended by zero;
/// emitted boxes are clipped to the unit cube. Adjacent columns in a run are
/// merged into one open box, which adds only their shared faces.
pub fn maximal_set(f: &SimpleStepFunction, eps: &ExactScalar, r_max: u32) -> Result<MaximalSet> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    if r_max == 0 {
        return Err(Error::Precondition("r_max must be at least 1".into()));
    }
    let n = f.dim();
    let cells = CellGrid::new(f);
    let shift_values = [Shift::MinusThird, Shift::Zero, Shift::PlusThird].map(|s| s.value());
    let zero = ExactScalar::zero();
    let one = ExactScalar::one();
    let mut out = BoxUnion::empty(n);
    if !f.pieces().is_empty() {
        for r in 1..=r_max {
            let per_axis: Vec<Vec<Vec<ColumnClass>>> = (0..n)
                .map(|i| {
                    shift_values
                        .iter()
                        .map(|s| axis_classes(&cells.grid[i], s, r))
                        .collect()
                })
                .collect();
            let threshold = eps.mul_pow2(-(r as i64 * n as i64));
            for t in Shift::all(n) {
                let tix: Vec<usize> = t.iter().map(|s| *s as usize).collect();
                let lists: Vec<&Vec<ColumnClass>> = (0..n).map(|i| &per_axis[i][tix[i]]).collect();
                if lists.iter().any(|l| l.is_empty()) {
                    continue;
                }
                let ranges: Vec<(usize, usize)> = lists.iter().map(|l| (0, l.len())).collect();
                let mut idx = vec![0usize; n];
                loop {
                    let ov: Vec<&[(usize, ExactScalar)]> = (0..n)
                        .map(|i| lists[i][idx[i]].overlaps.as_slice())
                        .collect();
                    if cells.integral(&ov) > threshold {
                        let axes = (0..n)
                            .map(|i| {
                                let c = &lists[i][idx[i]];
                                let s = &shift_values[tix[i]];
                                let lo = column_lo(s, &c.u_lo, r).max(zero.clone());
                                let hi = column_lo(s, &c.u_hi, r).min(one.clone());
                                Interval::open(lo, hi)
                            })
                            .collect();
                        out.push(AxisBox::from_axes_unchecked(axes));
                    }
                    if !super::advance(&mut idx, &ranges) {
                        break;
                    }
                }
            }
        }
    }
    let bands: usize = cells.grid.iter().map(|g| g.len()).sum();
    let truncation_defect = ExactScalar::from_int(2 * bands as i64).mul_pow2(-(r_max as i64));
    Ok(MaximalSet {
        set: out,
        r_max,
        truncation_defect: truncation_defect.min(ExactScalar::one()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StraddleCount {
    pub n: usize,
    pub p: u32,
    pub r: u32,
    /// Translates meeting the open unit cube that cross an interior precision-`p` hyperplane.
    pub count: u128,
    /// `3^n · 2^{np}`
    pub bound: u128,
    pub within_bound: bool,
}

/// Per-axis (columns meeting (0,1), columns inside one precision-`p` cell).
fn axis_counts(s: &ExactScalar, r: u32, p: u32) -> (u128, u128) {
    // u ranges over columns (s + u 2^-r, s + (u+1) 2^-r) meeting (0, 1)
    let u_first = (-s).mul_pow2(r as i64).floor();
    let u_end = (&ExactScalar::one() - s).mul_pow2(r as i64).ceil();
    let total = (&u_end - &u_first).to_u128().unwrap_or(0);
    let mut straddle = 0u128;
    let top = BigInt::one() << p;
    for j in 1..top.to_u64().unwrap_or(0) {
        let pos = (&ExactScalar::dyadic(BigInt::from(j), p) - s).mul_pow2(r as i64);
        if !pos.is_integer() {
            let u = pos.floor();
            if u >= u_first && u < u_end {
                straddle += 1;
            }
        }
    }
    (total, total - straddle)
}

/// Exact count of translates `I^t_r` meeting `(0,1)^n` whose clipped box is not inside
/// any precision-`p` dyadic cube, with the comparison against `3^n 2^{np}`.
pub fn count_straddling_translates(r: u32, p: u32, n: usize) -> Result<StraddleCount> {
    if r <= p {
        return Err(Error::Precondition(format!("need r > p, got r={r}, p={p}")));
    }
    crate::error::cap_check("straddle enumeration columns", r as u64 + 2, 40)?;
    crate::error::cap_check("straddle hyperplanes", p as u64, 24)?;
    let per_shift: Vec<(u128, u128)> = [Shift::MinusThird, Shift::Zero, Shift::PlusThird]
        .iter()
        .map(|s| axis_counts(&s.value(), r, p))
        .collect();
    let mut count = 0u128;
    for t in Shift::all(n) {
        let total: u128 = t.iter().map(|s| per_shift[*s as usize].0).product();
        let plain: u128 = t.iter().map(|s| per_shift[*s as usize].1).product();
        count += total - plain;
    }
    let bound = 3u128.pow(n as u32) << (n as u32 * p);
    Ok(StraddleCount {
        n,
        p,
        r,
        count,
        bound,
        within_bound: count <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicCube, Point};
    use crate::stepfn::Evaluation;

    fn d(n: i64, e: u32) -> ExactScalar {
        ExactScalar::dyadic(n, e)
    }

    /// Every translate at every r, straight from the definition.
    fn brute_maximal(f: &SimpleStepFunction, eps: &ExactScalar, r_max: u32) -> BoxUnion {
        let n = f.dim();
        let unit = AxisBox::open_unit(n);
        let mut out = BoxUnion::empty(n);
        for r in 1..=r_max {
            for t in Shift::all(n) {
                let lo = vec![-(1i64 << r); n];
                let hi = vec![2i64 << r; n];
                let mut u = lo.clone();
                loop {
                    let cube = TranslatedCube {
                        base: DyadicCube::open(r, &u),
                        shift: t.clone(),
                    };
                    if translate_average(&f.abs(), &cube) > *eps {
                        if let Some(c) = cube.to_box().intersect(&unit) {
                            out.push(c);
                        }
                    }
                    let mut axis = n;
                    let mut done = true;
                    while axis > 0 {
                        axis -= 1;
                        u[axis] += 1;
                        if u[axis] <= hi[axis] {
                            done = false;
                            break;
                        }
                        u[axis] = lo[axis];
                    }
                    if done {
                        break;
                    }
                }
            }
        }
        out
    }

    fn brute_straddle(r: u32, p: u32, n: usize) -> u128 {
        let unit = AxisBox::open_unit(n);
        let mut count = 0;
        for t in Shift::all(n) {
            let lo = -(1i64 << r);
            let hi = 2i64 << r;
            let mut u = vec![lo; n];
            loop {
                let b = TranslatedCube {
                    base: DyadicCube::open(r, &u),
                    shift: t.clone(),
                }
                .to_box();
                if let Some(c) = b.intersect(&unit) {
                    if !c.is_degenerate() {
                        let inside = (0..n).all(|i| {
                            let a = c.lo(i).floor_dyadic(p);
                            c.hi(i) <= &(&a + &ExactScalar::pow2(-(p as i64)))
                        });
                        if !inside {
                            count += 1;
                        }
                    }
                }
                let mut axis = n;
                let mut done = true;
                while axis > 0 {
                    axis -= 1;
                    u[axis] += 1;
                    if u[axis] <= hi {
                        done = false;
                        break;
                    }
                    u[axis] = lo;
                }
                if done {
                    break;
                }
            }
        }
        count
    }

    #[test]
    fn constant_below_eps_is_empty() {
        let f = SimpleStepFunction::constant(2, d(1, 1)).unwrap();
        assert!(maximal_set(&f, &d(1, 1), 3)
            .unwrap()
            .set
            .measure()
            .is_zero());
    }

    #[test]
    fn half_indicator_contains_support() {
        let f = SimpleStepFunction::indicator(AxisBox::open(vec![d(0, 0)], vec![d(1, 1)]).unwrap())
            .unwrap();
        let t = maximal_set(&f, &d(3, 2), 3).unwrap().set;
        assert!(t.measure() >= d(1, 2));
        for x in [(1, 3), (1, 5), (3, 7), (1, 9)] {
            assert_eq!(t.membership(&Point::from_fracs(&[x])).code(), 1, "{x:?}");
        }
        assert_eq!(t.membership(&Point::from_fracs(&[(5, 7)])).code(), 0);
        assert_eq!(
            brute_maximal(&f, &d(3, 2), 3).sym_diff_measure(&t),
            ExactScalar::zero()
        );
    }

    #[test]
    fn matches_brute_force_2d() {
        let f = SimpleStepFunction::from_terms(
            2,
            vec![
                (
                    AxisBox::open(vec![d(1, 3), d(0, 0)], vec![d(5, 3), d(1, 2)]).unwrap(),
                    d(3, 0),
                ),
                (
                    AxisBox::open(vec![d(3, 2), d(1, 1)], vec![d(1, 0), d(7, 3)]).unwrap(),
                    d(-5, 1),
                ),
            ],
        )
        .unwrap();
        for eps in [d(1, 1), d(1, 0), d(3, 0)] {
            let fast = maximal_set(&f, &eps, 4).unwrap().set;
            let slow = brute_maximal(&f, &eps, 4);
            assert_eq!(
                fast.sym_diff_measure(&slow),
                ExactScalar::zero(),
                "eps={eps}"
            );
        }
    }

    #[test]
    fn dominates_chebyshev_set() {
        let f = SimpleStepFunction::from_terms(
            1,
            vec![(
                AxisBox::open(vec![d(3, 3)], vec![d(5, 3)]).unwrap(),
                d(2, 0),
            )],
        )
        .unwrap();
        let eps = d(1, 0);
        let s = f.chebyshev_set(&eps).unwrap();
        let t = maximal_set(&f, &eps, f.precision()).unwrap().set;
        assert_eq!(s.difference_measure(&t), ExactScalar::zero());
        let c = ExactScalar::from_int(hardy_littlewood_default(1) as i64);
        assert!(&t.measure() * &eps <= &c * &f.l1_norm());
    }

    #[test]
    fn translate_average_extends_by_zero() {
        let f = SimpleStepFunction::constant(1, d(1, 0)).unwrap();
        let cube = TranslatedCube {
            base: DyadicCube::open(1, &[1]),
            shift: vec![Shift::PlusThird],
        };
        // (5/6, 4/3) keeps 1/6 of its length 1/2 inside
        assert_eq!(translate_average(&f, &cube), ExactScalar::thirds(1));
        assert!(matches!(
            f.evaluate(&Point::from_fracs(&[(5, 6)])).unwrap(),
            Evaluation::Value(_)
        ));
    }

    #[test]
    fn straddle_examples() {
        let c = count_straddling_translates(2, 0, 1).unwrap();
        assert!(c.within_bound && c.bound == 3);
        let c = count_straddling_translates(4, 1, 1).unwrap();
        assert_eq!(c.bound, 6);
        assert!(c.within_bound);
        assert!(count_straddling_translates(1, 1, 1).is_err());
    }

    #[test]
    fn straddle_matches_enumeration() {
        for n in 1..=2 {
            for p in 0..=2 {
                for r in (p + 1)..=4 {
                    let c = count_straddling_translates(r, p, n).unwrap();
                    assert_eq!(c.count, brute_straddle(r, p, n), "n={n} p={p} r={r}");
                }
            }
        }
    }
}
