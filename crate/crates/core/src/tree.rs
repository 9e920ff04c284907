//! Dyadic tree decompositions of W-tests.
//!
//! Nodes are open dyadic cubes; children of `Q` are the cubes of the disjointified
//! rows of `U_m` lying in `Q`, where `m` is the smallest integer with
//! `2^{-m} < μ(Q)/8`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::dyadic::{locate_cube, AxisBox, BoxUnion, ClosureMode, DyadicCube, Point};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;
use crate::wtest::{TestSpec, WTest};

/// Cells visited by a single quadtree normalization.
pub const QUADTREE_CELL_CAP: u64 = 1 << 20;

pub const DEFAULT_NODE_BUDGET: usize = 4096;

pub const DEFAULT_K_CAP: u32 = 2;

/// `m` with `2^{-m} < μ(Q)/8` minimal, for `μ(Q) = 2^{-e}`: `m = e + 4`.
pub fn child_rule(mass_exponent: u64) -> u32 {
    (mass_exponent + 4) as u32
}

fn open_cube(r: u32, anchor: Vec<BigInt>) -> DyadicCube {
    DyadicCube::new(r, anchor, ClosureMode::Open)
}

/// Maximal dyadic cubes inside `region` that lie in `set \ minus` up to measure zero.
pub fn normalize_difference(
    set: &BoxUnion,
    minus: &BoxUnion,
    region: &DyadicCube,
) -> Result<Vec<DyadicCube>> {
    let p_set = set
        .dyadic_precision()
        .ok_or_else(|| Error::InvalidInput("set has non-dyadic endpoints".into()))?;
    let p_minus = minus
        .dyadic_precision()
        .ok_or_else(|| Error::InvalidInput("subtracted set has non-dyadic endpoints".into()))?;
    let max_p = p_set.max(p_minus).max(region.precision);
    let mut out = Vec::new();
    let mut visited = 0u64;
    let root = open_cube(region.precision, region.anchor.clone());
    let rb = root.to_open_box();
    let mut stack = vec![(root, set.intersect_box(&rb), minus.intersect_box(&rb))];
    while let Some((c, s, mi)) = stack.pop() {
        visited += 1;
        if visited > QUADTREE_CELL_CAP {
            return Err(Error::ResourceCap {
                what: "quadtree normalization".into(),
                required: format!("> {visited} cells"),
                cap: QUADTREE_CELL_CAP.to_string(),
            });
        }
        let left = s.difference_measure(&mi);
        if left.is_zero() {
            continue;
        }
        if left == c.measure() {
            out.push(c);
            continue;
        }
        if c.precision >= max_p {
            return Err(Error::Invariant(format!(
                "cell at precision {} is mixed past the endpoint precision {max_p}",
                c.precision
            )));
        }
        for child in c.children().into_iter().rev() {
            let b = child.to_open_box();
            let cs = s.intersect_box(&b);
            let cm = mi.intersect_box(&b);
            stack.push((child, cs, cm));
        }
    }
    out.sort_by(|a, b| (a.precision, &a.anchor).cmp(&(b.precision, &b.anchor)));
    Ok(out)
}

fn cubes_union(n: usize, cubes: &[DyadicCube]) -> BoxUnion {
    BoxUnion::new(n, cubes.iter().map(|c| c.to_open_box()).collect()).expect("cube dims")
}

/// `S^1 = R^1` and `S^k = R^k \ (S^1 ∪ … ∪ S^{k−1})`, each as maximal dyadic cubes in `region`.
pub fn disjointify(rows: &[BoxUnion], region: &DyadicCube) -> Result<Vec<Vec<DyadicCube>>> {
    let n = region.dim();
    let mut earlier = BoxUnion::empty(n);
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let cubes = normalize_difference(row, &earlier, region)?;
        earlier.extend(cubes_union(n, &cubes));
        out.push(cubes);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub r: u32,
    #[serde(with = "crate::dyadic::bigint_vec")]
    pub u: Vec<BigInt>,
    pub level: u32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Row index `k` of the disjointified array the node came from (0 for the root).
    pub tier: u32,
    /// `m` used for this node's children, once expanded.
    pub child_rule: Option<u32>,
    pub expanded: bool,
    pub child_mass: Option<ExactScalar>,
    pub certified_child_mass: Option<ExactScalar>,
}

impl TreeNode {
    pub fn cube(&self) -> DyadicCube {
        open_cube(self.r, self.u.clone())
    }

    /// Lower-closed membership, matching `locate_cube`.
    pub fn contains_point(&self, x: &Point) -> bool {
        locate_cube(x, self.r).is_ok_and(|c| c.anchor == self.u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub depth: u32,
    pub k_cap: u32,
    pub node_budget: usize,
    /// Only nodes containing this point are expanded past the root.
    pub focus: Option<Point>,
}

impl DecomposeOptions {
    pub fn new(depth: u32) -> Self {
        DecomposeOptions {
            depth,
            k_cap: DEFAULT_K_CAP,
            node_budget: DEFAULT_NODE_BUDGET,
            focus: None,
        }
    }

    pub fn focused(depth: u32, x: Point) -> Self {
        DecomposeOptions {
            focus: Some(x),
            ..Self::new(depth)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicTree {
    pub n: usize,
    pub depth: u32,
    pub k_cap: u32,
    /// Row `k` of level `m` is the source array at tier `k + m`.
    pub tier_shift: String,
    pub nodes: Vec<TreeNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<TestSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeViolation {
    NotSubset {
        child: usize,
        parent: usize,
    },
    Overlap {
        a: usize,
        b: usize,
    },
    Mass {
        node: usize,
        mass: ExactScalar,
        quarter: ExactScalar,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeReport {
    pub nodes: usize,
    pub pairs_checked: u64,
    pub violations: Vec<TreeViolation>,
}

impl TreeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Rows `R^k_m ∩ Q`, `1 ≤ k ≤ k_cap`, read from the array at tier `k + m`.
fn rows_within(w: &WTest, m: u32, k_cap: u32, q: &AxisBox) -> Result<Vec<BoxUnion>> {
    (1..=k_cap)
        .map(|k| Ok(w.array_within(k + m, m, q)?.intersect_box(q)))
        .collect()
}

/// `Σ_{k > k_cap}` of what later rows could still add: `2^{1 − k_cap − m}`.
pub fn unmaterialized_mass(k_cap: u32, m: u32) -> ExactScalar {
    ExactScalar::pow2(1 - k_cap as i64 - m as i64)
}

impl DyadicTree {
    pub fn bare(n: usize, depth: u32, k_cap: u32) -> Self {
        DyadicTree {
            n,
            depth,
            k_cap,
            tier_shift: "k+m".into(),
            nodes: vec![TreeNode {
                id: 0,
                r: 0,
                u: vec![BigInt::from(0); n],
                level: 0,
                parent: None,
                children: Vec::new(),
                tier: 0,
                child_rule: None,
                expanded: false,
                child_mass: None,
                certified_child_mass: None,
            }],
            source: None,
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn level(&self, level: u32) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |nd| nd.level == level)
    }

    /// Adds a child without any check; used to build negative controls.
    pub fn push_child_unchecked(&mut self, parent: usize, cube: &DyadicCube, tier: u32) -> usize {
        let id = self.nodes.len();
        let level = self.nodes[parent].level + 1;
        self.nodes.push(TreeNode {
            id,
            r: cube.precision,
            u: cube.anchor.clone(),
            level,
            parent: Some(parent),
            children: Vec::new(),
            tier,
            child_rule: None,
            expanded: false,
            child_mass: None,
            certified_child_mass: None,
        });
        self.nodes[parent].children.push(id);
        self.nodes[parent].expanded = true;
        id
    }

    fn expand(&mut self, w: &WTest, id: usize, budget: usize) -> Result<()> {
        let q = self.nodes[id].cube();
        let m = child_rule(q.mass_exponent());
        let qb = q.to_open_box();
        let rows = rows_within(w, m, self.k_cap, &qb)?;
        let tiers = disjointify(&rows, &q)?;
        let mut mass = ExactScalar::zero();
        for (k, cubes) in tiers.iter().enumerate() {
            for c in cubes {
                if c.precision <= q.precision {
                    return Err(Error::Invariant(format!(
                        "node {id}: row {} covers the whole node",
                        k + 1
                    )));
                }
                mass = &mass + &c.measure();
            }
        }
        let certified = &mass + &unmaterialized_mass(self.k_cap, m);
        let quarter = q.measure().mul_pow2(-2);
        if certified >= quarter {
            return Err(Error::Invariant(format!(
                "node {id}: certified child mass {certified} reaches μ(Q)/4 = {quarter}"
            )));
        }
        let count: usize = tiers.iter().map(Vec::len).sum();
        if self.nodes.len() + count > budget {
            return Err(Error::ResourceCap {
                what: "tree nodes".into(),
                required: (self.nodes.len() + count).to_string(),
                cap: budget.to_string(),
            });
        }
        for (k, cubes) in tiers.into_iter().enumerate() {
            for c in cubes {
                self.push_child_unchecked(id, &c, k as u32 + 1);
            }
        }
        let node = &mut self.nodes[id];
        node.expanded = true;
        node.child_rule = Some(m);
        node.child_mass = Some(mass);
        node.certified_child_mass = Some(certified);
        Ok(())
    }

    /// Rows of the approximating tree array: `T^k_1` keeps level-1 nodes from rows
    /// `≤ k`, deeper levels keep children from rows `≤ k + 3` of kept parents.
    pub fn tree_array(&self, k: u32, level: u32) -> BoxUnion {
        let kept: Vec<&TreeNode> = self
            .level(level)
            .filter(|nd| {
                let mut cur = Some(nd.id);
                while let Some(i) = cur {
                    let node = &self.nodes[i];
                    let limit = if node.level == 1 { k } else { k + 3 };
                    if node.level > 0 && node.tier > limit {
                        return false;
                    }
                    cur = node.parent;
                }
                true
            })
            .collect();
        BoxUnion::new(
            self.n,
            kept.iter().map(|nd| nd.cube().to_open_box()).collect(),
        )
        .expect("dims")
    }

    /// Union of all materialized nodes at a level.
    pub fn level_set(&self, level: u32) -> BoxUnion {
        BoxUnion::new(
            self.n,
            self.level(level)
                .map(|nd| nd.cube().to_open_box())
                .collect(),
        )
        .expect("dims")
    }

    pub fn level_mass(&self, level: u32) -> ExactScalar {
        self.level(level)
            .fold(ExactScalar::zero(), |acc, nd| &acc + &nd.cube().measure())
    }

    /// Subset, disjoint-or-nested and the quarter-mass bound, over all materialized nodes.
    pub fn verify(&self) -> TreeReport {
        let mut violations = Vec::new();
        let cubes: Vec<DyadicCube> = self.nodes.iter().map(TreeNode::cube).collect();
        for nd in &self.nodes {
            let q = &cubes[nd.id];
            let mut mass = ExactScalar::zero();
            for &c in &nd.children {
                if !(q.contains_cube(&cubes[c]) && cubes[c].precision > q.precision) {
                    violations.push(TreeViolation::NotSubset {
                        child: c,
                        parent: nd.id,
                    });
                }
                mass = &mass + &cubes[c].measure();
            }
            let quarter = q.measure().mul_pow2(-2);
            if !nd.children.is_empty() && mass >= quarter {
                violations.push(TreeViolation::Mass {
                    node: nd.id,
                    mass,
                    quarter,
                });
            }
        }
        // dyadic cubes are nested or disjoint, so nesting must match ancestry
        let mut pairs = 0u64;
        for i in 0..cubes.len() {
            for j in i + 1..cubes.len() {
                pairs += 1;
                let (a, b) = (&cubes[i], &cubes[j]);
                let nested = a.contains_cube(b) || b.contains_cube(a);
                if nested && !self.is_ancestor(i, j) && !self.is_ancestor(j, i) {
                    violations.push(TreeViolation::Overlap { a: i, b: j });
                }
            }
        }
        TreeReport {
            nodes: self.nodes.len(),
            pairs_checked: pairs,
            violations,
        }
    }

    fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = self.nodes[b].parent;
        while let Some(i) = cur {
            if i == a {
                return true;
            }
            cur = self.nodes[i].parent;
        }
        false
    }

    /// Deepest materialized node containing `x` (lower-closed), with the path to it.
    pub fn probe(&self, x: &Point) -> Vec<usize> {
        let mut path = vec![0];
        let mut cur = 0;
        while let Some(&next) = self.nodes[cur]
            .children
            .iter()
            .find(|&&c| self.nodes[c].contains_point(x))
        {
            path.push(next);
            cur = next;
        }
        path
    }
}

/// Tree of `w` down to `opts.depth` levels below the root.
pub fn decompose(w: &WTest, opts: &DecomposeOptions) -> Result<DyadicTree> {
    let mut tree = DyadicTree::bare(w.dim(), opts.depth, opts.k_cap);
    tree.source = w.spec().cloned();
    let mut frontier = vec![0usize];
    for _ in 0..opts.depth {
        let mut next = Vec::new();
        for id in frontier {
            if id != 0
                && opts
                    .focus
                    .as_ref()
                    .is_some_and(|x| !tree.nodes[id].contains_point(x))
            {
                continue;
            }
            tree.expand(w, id, opts.node_budget)?;
            next.extend(tree.nodes[id].children.iter().copied());
        }
        frontier = next;
    }
    Ok(tree)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub level: u32,
    pub r: u32,
    #[serde(with = "crate::dyadic::bigint_vec")]
    pub u: Vec<BigInt>,
    pub tier: u32,
    pub child_rule: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathProbe {
    pub point: Point,
    pub steps: Vec<PathStep>,
    pub requested_depth: u32,
    /// Why the walk stopped before the requested depth.
    pub stopped: Option<String>,
}

impl PathProbe {
    pub fn depth_reached(&self) -> u32 {
        self.steps.len() as u32
    }
}

/// The child of `q` containing `x`, found by scanning the cubes `Q_ρ(x)` for `ρ > r(q)`.
///
/// Agrees with the child produced by [`decompose`]: the first full cell along `x`'s
/// chain is the maximal cube of the normalized row.
pub fn child_containing(
    w: &WTest,
    q: &DyadicCube,
    x: &Point,
    k_cap: u32,
) -> Result<Option<(DyadicCube, u32)>> {
    let n = q.dim();
    let m = child_rule(q.mass_exponent());
    let rho_max = (1..=k_cap)
        .map(|k| w.array_precision().eval((k + 2 * m) as u64))
        .max()
        .unwrap_or(0) as u32;
    for rho in q.precision + 1..=rho_max.max(q.precision + 1) {
        let c = locate_cube(x, rho)?;
        let c = open_cube(c.precision, c.anchor);
        let cb = c.to_open_box();
        let rows = rows_within(w, m, k_cap, &cb)?;
        let mut earlier = BoxUnion::empty(n);
        let mut any = false;
        for (k, row) in rows.iter().enumerate() {
            let left = row.difference_measure(&earlier);
            if left == c.measure() {
                return Ok(Some((c, k as u32 + 1)));
            }
            any |= !left.is_zero();
            earlier.extend(row.clone());
        }
        if !any {
            return Ok(None);
        }
    }
    Err(Error::Invariant(format!(
        "no full cell along the chain of {x} up to precision {rho_max}"
    )))
}

/// Walks the containment chain of `x` without materializing siblings.
pub fn infinite_path_probe(w: &WTest, x: &Point, depth: u32, k_cap: u32) -> Result<PathProbe> {
    let mut q = open_cube(0, vec![BigInt::from(0); w.dim()]);
    let mut steps = Vec::new();
    let mut stopped = None;
    for level in 1..=depth {
        let m = child_rule(q.mass_exponent());
        match child_containing(w, &q, x, k_cap) {
            Ok(Some((c, tier))) => {
                steps.push(PathStep {
                    level,
                    r: c.precision,
                    u: c.anchor.clone(),
                    tier,
                    child_rule: m,
                });
                q = c;
            }
            Ok(None) => {
                stopped = Some(format!("x is in no child at level {level}"));
                break;
            }
            Err(e @ Error::ResourceCap { .. }) => {
                stopped = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PathProbe {
        point: x.clone(),
        steps,
        requested_depth: depth,
        stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: (i64, u32), hi: (i64, u32)) -> BoxUnion {
        BoxUnion::single(
            AxisBox::open(
                vec![ExactScalar::dyadic(lo.0, lo.1)],
                vec![ExactScalar::dyadic(hi.0, hi.1)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn child_rule_examples() {
        assert_eq!(child_rule(0), 4);
        // μ(Q) = 2^{-4}: 2^{-7} < 2^{-7} fails, 2^{-8} < 2^{-7} holds
        assert_eq!(child_rule(4), 8);
    }

    #[test]
    fn disjoint_rows_pass_through() {
        let root = DyadicCube::root(1);
        let rows = vec![iv((0, 0), (1, 2)), iv((1, 1), (3, 2))];
        let out = disjointify(&rows, &root).unwrap();
        assert_eq!(out[0], vec![open_cube(2, vec![0.into()])]);
        assert_eq!(out[1], vec![open_cube(2, vec![2.into()])]);
    }

    #[test]
    fn overlapping_rows_are_trimmed() {
        let root = DyadicCube::root(1);
        let rows = vec![iv((0, 0), (1, 1)), iv((1, 2), (3, 2))];
        let out = disjointify(&rows, &root).unwrap();
        assert_eq!(out[1], vec![open_cube(2, vec![2.into()])]);
        let r_union = rows[0].union(&rows[1]);
        let s_union = cubes_union(1, &[out[0].clone(), out[1].clone()].concat());
        assert!(r_union.sym_diff_measure(&s_union).is_zero());
    }

    #[test]
    fn non_dyadic_rows_rejected() {
        let b = AxisBox::open(vec![ExactScalar::zero()], vec![ExactScalar::thirds(1)]).unwrap();
        assert!(disjointify(&[BoxUnion::single(b)], &DyadicCube::root(1)).is_err());
    }

    #[test]
    fn bare_root_verifies() {
        let t = DyadicTree::bare(2, 0, 1);
        assert!(t.verify().passed());
        assert_eq!(t.probe(&Point::from_fracs(&[(1, 3), (1, 3)])), vec![0]);
    }

    #[test]
    fn injected_overlap_is_named() {
        let mut t = DyadicTree::bare(1, 1, 1);
        t.push_child_unchecked(0, &open_cube(4, vec![1.into()]), 1);
        t.push_child_unchecked(0, &open_cube(4, vec![1.into()]), 1);
        let rep = t.verify();
        assert!(rep
            .violations
            .contains(&TreeViolation::Overlap { a: 1, b: 2 }));
    }

    #[test]
    fn oversized_children_fail_mass() {
        let mut t = DyadicTree::bare(1, 1, 1);
        t.push_child_unchecked(0, &open_cube(2, vec![0.into()]), 1);
        assert!(matches!(
            t.verify().violations[..],
            [TreeViolation::Mass { node: 0, .. }]
        ));
    }

    #[test]
    fn point_trap_tree_is_a_chain() {
        let w = WTest::point_trap(vec![Point::from_fracs(&[(1, 3), (1, 3)])]).unwrap();
        let t = decompose(&w, &DecomposeOptions::new(4)).unwrap();
        assert!(t.verify().passed());
        for level in 1..=4 {
            assert_eq!(t.level(level).count(), 1);
        }
        let x = Point::from_fracs(&[(1, 3), (1, 3)]);
        assert_eq!(t.probe(&x).len(), 5);
        let lazy = infinite_path_probe(&w, &x, 4, DEFAULT_K_CAP).unwrap();
        let path = t.probe(&x);
        for (step, id) in lazy.steps.iter().zip(&path[1..]) {
            assert_eq!((step.r, &step.u), (t.nodes[*id].r, &t.nodes[*id].u));
        }
    }

    #[test]
    fn avoidance_tree_in_one_dimension() {
        let w = WTest::avoidance(1, 1).unwrap();
        let t = decompose(&w, &DecomposeOptions::new(1)).unwrap();
        let rep = t.verify();
        assert!(rep.passed(), "{:?}", rep.violations);
        assert!(t.level_mass(1) < ExactScalar::pow2(-2));
        // 1/3 avoids every strip
        assert_eq!(t.probe(&Point::from_fracs(&[(1, 3)])), vec![0]);
    }

    #[test]
    fn focused_avoidance_tree_follows_one_half() {
        let w = WTest::avoidance(1, 1).unwrap();
        let x = Point::from_fracs(&[(1, 2)]);
        let t = decompose(&w, &DecomposeOptions::focused(4, x.clone())).unwrap();
        assert!(t.verify().passed());
        let path = t.probe(&x);
        assert_eq!(path.len(), 5);
        let rs: Vec<u32> = path.iter().map(|&i| t.nodes[i].r).collect();
        assert_eq!(rs, vec![0, 10, 30, 70, 150]);
        for level in 1..=4 {
            assert!(t.level_mass(level) <= ExactScalar::pow2(-2 * level as i64));
        }
        let lazy = infinite_path_probe(&w, &x, 4, DEFAULT_K_CAP).unwrap();
        assert_eq!(lazy.depth_reached(), 4);
        let lazy_r: Vec<u32> = lazy.steps.iter().map(|s| s.r).collect();
        assert_eq!(lazy_r, rs[1..]);
    }

    #[test]
    fn tree_array_exhausts_finite_levels() {
        let w = WTest::avoidance(1, 1).unwrap();
        let t = decompose(
            &w,
            &DecomposeOptions::focused(2, Point::from_fracs(&[(1, 2)])),
        )
        .unwrap();
        for level in 1..=2 {
            let full = t.level_set(level);
            let arr = t.tree_array(t.k_cap, level);
            assert!(full.sym_diff_measure(&arr).is_zero());
        }
        assert!(t.tree_array(0, 1).measure() <= t.level_mass(1));
    }
}
