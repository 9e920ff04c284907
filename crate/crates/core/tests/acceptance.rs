//! Exit criteria. Each test prints one `criterion N: PASS|FAIL` line and then
//! asserts, so a red criterion never hides the others.

use std::sync::Arc;

use lebdiff::counterexample::{oscillation_check, OscillatingFunction};
use lebdiff::dyadic::{AxisBox, BoxUnion, ClosureMode, DyadicCube, Point, Shift, TiePolicy};
use lebdiff::martingale::{
    capital, from_wtest, sum_martingale, verify_averaging, DyadicMartingale, SumMartingale,
};
use lebdiff::stepfn::{
    count_straddling_translates, hardy_littlewood_default, lebesgue_probe, maximal_set,
    random_corpus, BumpSequence, ConstantSequence, Placement, SimpleStepFunction, StepSequence,
};
use lebdiff::tree::{
    child_rule, decompose, disjointify, infinite_path_probe, DecomposeOptions, DyadicTree,
};
use lebdiff::wtest::{tail_array, union_array, ArrayRule, Coverage, EstimateRoute, WTest};
use lebdiff::{Error, ExactScalar};
use num_bigint::BigInt;
use num_rational::BigRational;

fn report(id: u32, name: &str, failures: &[String], detail: &str) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} [{name}] {detail}");
    for f in failures.iter().take(8) {
        println!("  - {f}");
    }
    assert!(
        failures.is_empty(),
        "criterion {id} ({name}) failed: {} violations",
        failures.len()
    );
}

fn q(a: i64, b: u32) -> ExactScalar {
    ExactScalar::dyadic(a, b)
}

fn open_box(lo: &[ExactScalar], hi: &[ExactScalar]) -> AxisBox {
    AxisBox::open(lo.to_vec(), hi.to_vec()).unwrap()
}

/// Step-function inputs for the sequence-driven families.
fn corpus() -> Vec<(&'static str, Arc<dyn StepSequence>)> {
    let half = open_box(&[ExactScalar::zero()], &[q(1, 1)]);
    let staircase = SimpleStepFunction::from_terms(
        2,
        vec![
            (open_box(&[q(0, 0), q(0, 0)], &[q(1, 1), q(1, 1)]), q(3, 1)),
            (open_box(&[q(1, 2), q(1, 3)], &[q(3, 2), q(5, 3)]), q(-1, 0)),
        ],
    )
    .unwrap();
    vec![
        (
            "bumps n=1 seed 3",
            Arc::new(BumpSequence::seeded(1, 3, None).unwrap()),
        ),
        (
            "bumps n=2 seed 3",
            Arc::new(BumpSequence::seeded(2, 3, None).unwrap()),
        ),
        (
            "bumps n=1 seed 5 x10",
            Arc::new(BumpSequence::seeded(1, 5, Some(10)).unwrap()),
        ),
        (
            "bumps n=2 seed 5 x10",
            Arc::new(BumpSequence::seeded(2, 5, Some(10)).unwrap()),
        ),
        (
            "bumps n=2 seed 7",
            Arc::new(BumpSequence::seeded(2, 7, None).unwrap()),
        ),
        (
            "nested 1/3 h2",
            Arc::new(BumpSequence::nested(Point::from_fracs(&[(1, 3)]), 2).unwrap()),
        ),
        (
            "nested (1/3,1/5) h2",
            Arc::new(BumpSequence::nested(Point::from_fracs(&[(1, 3), (1, 5)]), 2).unwrap()),
        ),
        (
            "nested (2/3,1/7) h0",
            Arc::new(BumpSequence::nested(Point::from_fracs(&[(2, 3), (1, 7)]), 0).unwrap()),
        ),
        (
            "bumps n=1 h4 seed 11",
            Arc::new(BumpSequence::new(1, 4, Placement::Seeded(11), None).unwrap()),
        ),
        (
            "indicator [0,1/2]",
            Arc::new(ConstantSequence::new(
                SimpleStepFunction::indicator(half).unwrap(),
            )),
        ),
        ("staircase n=2", Arc::new(ConstantSequence::new(staircase))),
    ]
}

/// The three constructed families in dimension `n`, driven by `seq` where needed.
fn families(n: usize, seq: Arc<dyn StepSequence>) -> Vec<(String, WTest)> {
    vec![
        (format!("avoidance n={n}"), WTest::avoidance(n, 1).unwrap()),
        (
            format!("cauchy n={n}"),
            WTest::cauchy_gap(seq.clone()).unwrap(),
        ),
        (
            format!("maximal n={n}"),
            WTest::maximal_gap(seq, hardy_littlewood_default(n)).unwrap(),
        ),
    ]
}

fn drivers() -> Vec<(usize, Arc<dyn StepSequence>)> {
    vec![
        (1, Arc::new(BumpSequence::seeded(1, 3, None).unwrap())),
        (2, Arc::new(BumpSequence::seeded(2, 3, None).unwrap())),
    ]
}

fn origin(n: usize) -> Vec<BigInt> {
    vec![BigInt::from(0); n]
}

#[test]
fn criterion_01_averaging_law() {
    let mut failures = Vec::new();
    let mut checked = 0u64;
    for (n, seq) in drivers() {
        for (name, w) in families(n, seq) {
            let w = Arc::new(w);
            for m in [0, 2] {
                let rep = verify_averaging(&from_wtest(w.clone(), m), 4).unwrap();
                checked += rep.cubes_checked;
                if !rep.passed() {
                    failures.push(format!("{name} m={m}: {:?}", rep.violation));
                }
            }
        }
    }
    report(
        1,
        "averaging law",
        &failures,
        &format!("{checked} parent cubes, r <= 4, exact"),
    );
}

#[test]
fn criterion_02_initial_capital() {
    let mut failures = Vec::new();
    let mut tests: Vec<(String, WTest)> = Vec::new();
    for (n, seq) in drivers() {
        tests.extend(families(n, seq));
    }
    tests.push((
        "point trap (1/3,1/3)".into(),
        WTest::point_trap(vec![Point::from_fracs(&[(1, 3), (1, 3)])]).unwrap(),
    ));
    let mut worst = ExactScalar::zero();
    for (name, w) in tests {
        let n = w.dim();
        let w = Arc::new(w);
        let d = SumMartingale::with_components(w.clone(), 12);
        let (_, hi) = d.certified_interval(0, &origin(n)).unwrap().unwrap();
        if hi > ExactScalar::one() {
            failures.push(format!("{name}: d(Q0) upper {hi}"));
        }
        worst = worst.max(hi);
        for m in 0..=6u32 {
            let v = from_wtest(w.clone(), m)
                .eval_exact(0, &origin(n))
                .unwrap()
                .unwrap();
            if v > ExactScalar::pow2(-(m as i64)) {
                failures.push(format!("{name}: d_{m}(Q0) = {v}"));
            }
        }
    }
    report(
        2,
        "initial capital",
        &failures,
        &format!("max certified d(Q0) = {worst}"),
    );
}

#[test]
fn criterion_03_test_measure_bounds() {
    let mut failures = Vec::new();
    let mut rows = 0;
    let corpus = corpus();
    for n in [1, 2] {
        let w = WTest::avoidance(n, 1).unwrap();
        for m in 0..=6 {
            let c = w.certified_measure(m, w.default_last(m)).unwrap();
            rows += 1;
            if !c.within_target {
                failures.push(format!("avoidance n={n} m={m}: {}", c.upper));
            }
        }
    }
    for (label, seq) in &corpus {
        let n = seq.dim();
        let ws = [
            ("cauchy", WTest::cauchy_gap(seq.clone()).unwrap()),
            (
                "maximal",
                WTest::maximal_gap(seq.clone(), hardy_littlewood_default(n)).unwrap(),
            ),
        ];
        for (fam, w) in ws {
            for m in 0..=6 {
                let c = w.certified_measure(m, w.default_last(m)).unwrap();
                rows += 1;
                if !c.within_target {
                    failures.push(format!(
                        "{fam} on {label} m={m}: {} > {}",
                        c.upper, c.target
                    ));
                }
            }
        }
    }
    report(
        3,
        "test measure bounds",
        &failures,
        &format!("{} inputs, {rows} certified bounds, m <= 6", corpus.len()),
    );
}

#[test]
fn criterion_04_array_defect() {
    let mut failures = Vec::new();
    let mut rows = 0;
    let mut tests = Vec::new();
    for (n, seq) in drivers() {
        tests.extend(families(n, seq));
    }
    tests.push((
        "point trap (1/3,1/3)".into(),
        WTest::point_trap(vec![Point::from_fracs(&[(1, 3), (1, 3)])]).unwrap(),
    ));
    for (name, w) in &tests {
        let n = w.dim();
        let corner = DyadicCube::new(1, origin(n), ClosureMode::Open).to_open_box();
        for k in 0..=5 {
            for m in 0..=4 {
                let d = w.array_defect(k, m, w.default_last(m)).unwrap();
                rows += 1;
                if !d.within_target {
                    failures.push(format!(
                        "{name} k={k} m={m}: {} > {}",
                        d.prefix_sym_diff, d.target
                    ));
                }
                let arr = w.array(k, m).unwrap();
                let (first, last) = w.array_terms(k, m);
                let oracle = match w.rule() {
                    ArrayRule::Union { .. } => union_array(w.family(), first, last).unwrap(),
                    ArrayRule::Tail { j } => tail_array(w.family(), first, j, k).unwrap(),
                };
                let mut direct = BoxUnion::empty(n);
                let mut i = first as i64;
                while i <= last {
                    direct.extend(match w.rule() {
                        ArrayRule::Union { .. } => w.family().term(i as u32).unwrap(),
                        ArrayRule::Tail { .. } => {
                            w.family().term_tier(i as u32, 2 * k + 2).unwrap()
                        }
                    });
                    i += 1;
                }
                for (what, other) in [("array route", &oracle), ("term-by-term", &direct)] {
                    let sd = arr.sym_diff_measure(other);
                    if !sd.is_zero() {
                        failures.push(format!("{name} k={k} m={m}: {what} differs by {sd}"));
                    }
                }
                let local = w
                    .array_within(k, m, &corner)
                    .unwrap()
                    .intersect_box(&corner);
                let sd = local.sym_diff_measure(&arr.intersect_box(&corner));
                if !sd.is_zero() {
                    failures.push(format!(
                        "{name} k={k} m={m}: windowed array differs by {sd}"
                    ));
                }
            }
        }
    }
    report(
        4,
        "array defect",
        &failures,
        &format!("{rows} (test, k, m) cells, k <= 5, m <= 4"),
    );
}

#[test]
fn criterion_05_measure_estimator() {
    let mut failures = Vec::new();
    let mut checked = 0u64;
    let mut capped = 0u64;
    let finite: Vec<(&str, WTest)> = vec![
        (
            "cauchy seed 5 x10 n=1",
            WTest::cauchy_gap(Arc::new(BumpSequence::seeded(1, 5, Some(10)).unwrap())).unwrap(),
        ),
        (
            "cauchy seed 5 x10 n=2",
            WTest::cauchy_gap(Arc::new(BumpSequence::seeded(2, 5, Some(10)).unwrap())).unwrap(),
        ),
        (
            "cauchy seed 9 x6 n=2",
            WTest::cauchy_gap(Arc::new(
                BumpSequence::new(2, 2, Placement::Seeded(9), Some(6)).unwrap(),
            ))
            .unwrap(),
        ),
        (
            "point trap 1/3",
            WTest::point_trap(vec![Point::from_fracs(&[(1, 3)])]).unwrap(),
        ),
        (
            "point trap (1/3,1/3)",
            WTest::point_trap(vec![Point::from_fracs(&[(1, 3), (1, 3)])]).unwrap(),
        ),
    ];
    for (name, w) in &finite {
        let n = w.dim();
        for m in 0..=4 {
            let exact = w.exact_union(m).expect("finite test").unwrap();
            for r in 0..=3 {
                for cube in DyadicCube::enumerate(r, n) {
                    let qb = cube.to_open_box();
                    let truth = exact.intersect_box(&qb).measure();
                    for s in 0..=5 {
                        for route in [EstimateRoute::Array, EstimateRoute::CellCenters] {
                            let est = match w.measure_estimate_big(s, r, &cube.anchor, m, route) {
                                Ok(e) => e,
                                Err(Error::ResourceCap { .. }) => {
                                    capped += 1;
                                    continue;
                                }
                                Err(e) => panic!("{name}: {e}"),
                            };
                            checked += 1;
                            let err = (&est.value - &truth).abs();
                            if err > ExactScalar::pow2(-(s as i64)) {
                                failures.push(format!(
                                    "{name} s={s} r={r} u={:?} m={m} {route:?}: |{} - {truth}| = {err}",
                                    cube.anchor, est.value
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    report(
        5,
        "measure estimator",
        &failures,
        &format!("{checked} estimates within 2^-s ({capped} cell-center runs over the cell cap)"),
    );
}

#[test]
fn criterion_06_chebyshev_and_maximal_inequalities() {
    let mut failures = Vec::new();
    let epsilons = [q(1, 2), q(1, 0), q(3, 1)];
    let r_max = 6;
    let mut worst_c = BigRational::from_integer(0.into());
    let mut worst_cheb = BigRational::from_integer(0.into());
    for (idx, f) in random_corpus(20, 100, None)
        .unwrap()
        .into_iter()
        .enumerate()
    {
        let norm = f.l1_norm();
        let c = hardy_littlewood_default(f.dim());
        for eps in &epsilons {
            let cheb = f.chebyshev_set(eps).unwrap().measure();
            let bound = norm.to_ratio() / eps.to_ratio();
            if cheb.to_ratio() > bound {
                failures.push(format!("f#{idx} eps={eps}: chebyshev {cheb} > {bound}"));
            }
            let hl = maximal_set(&f, eps, r_max).unwrap().set.measure();
            if hl.to_ratio() > &bound * BigInt::from(c) {
                failures.push(format!("f#{idx} eps={eps}: maximal {hl} > {c}·{bound}"));
            }
            if !norm.is_zero() {
                worst_c = worst_c.max(hl.to_ratio() / &bound);
                worst_cheb = worst_cheb.max(cheb.to_ratio() / &bound);
            }
        }
    }
    report(
        6,
        "chebyshev / maximal",
        &failures,
        &format!(
            "300 cases; smallest empirical c = {worst_c} (~{:.4}) vs configured 6^n; chebyshev ratio max {worst_cheb}",
            ratio_f64(&worst_c)
        ),
    );
}

fn ratio_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[test]
fn criterion_07_straddle_bound() {
    let mut failures = Vec::new();
    let mut rows = 0;
    for n in 1..=2usize {
        for p in 0..=3u32 {
            for r in (p + 1)..=6 {
                let c = count_straddling_translates(r, p, n).unwrap();
                rows += 1;
                if !c.within_bound {
                    failures.push(format!("n={n} p={p} r={r}: {} > {}", c.count, c.bound));
                }
            }
        }
    }
    report(
        7,
        "straddle bound",
        &failures,
        &format!("{rows} (n, p, r) counts, r > p"),
    );
}

/// Disjointified rows of an expanded node cover exactly what the raw rows cover.
fn disjointify_gap(w: &WTest, tree: &DyadicTree, id: usize) -> ExactScalar {
    let q = tree.nodes[id].cube();
    let m = child_rule(q.mass_exponent());
    let qb = q.to_open_box();
    let rows: Vec<BoxUnion> = (1..=tree.k_cap)
        .map(|k| w.array_within(k + m, m, &qb).unwrap().intersect_box(&qb))
        .collect();
    let mut raw = BoxUnion::empty(tree.n);
    for r in &rows {
        raw.extend(r.clone());
    }
    let mut flat = BoxUnion::empty(tree.n);
    for c in disjointify(&rows, &q).unwrap().into_iter().flatten() {
        flat.push(c.to_open_box());
    }
    raw.sym_diff_measure(&flat)
}

#[test]
fn criterion_08_tree_invariants() {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let mut cases: Vec<(String, WTest, Option<Point>)> = vec![
        (
            "avoidance n=1".into(),
            WTest::avoidance(1, 1).unwrap(),
            Some(Point::from_fracs(&[(1, 2)])),
        ),
        (
            "point trap (1/3,1/3)".into(),
            WTest::point_trap(vec![Point::from_fracs(&[(1, 3), (1, 3)])]).unwrap(),
            None,
        ),
    ];
    for (label, x) in [
        ("nested 1/3", Point::from_fracs(&[(1, 3)])),
        ("nested (1/3,1/5)", Point::from_fracs(&[(1, 3), (1, 5)])),
    ] {
        let n = x.dim();
        let seq: Arc<dyn StepSequence> = Arc::new(BumpSequence::nested(x.clone(), 2).unwrap());
        for (name, w) in families(n, seq).into_iter().skip(1) {
            cases.push((format!("{name} {label}"), w, Some(x.clone())));
        }
    }
    for (name, w, focus) in &cases {
        let opts = match focus {
            Some(x) => DecomposeOptions::focused(4, x.clone()),
            None => DecomposeOptions::new(4),
        };
        let tree = decompose(w, &opts).unwrap();
        let rep = tree.verify();
        for v in &rep.violations {
            failures.push(format!("{name}: {v:?}"));
        }
        let mut worst = ExactScalar::zero();
        for nd in tree.nodes.iter().filter(|nd| nd.expanded) {
            worst = worst.max(disjointify_gap(w, &tree, nd.id));
        }
        if !worst.is_zero() {
            failures.push(format!("{name}: disjointified rows differ by {worst}"));
        }
        let deepest = tree.nodes.iter().map(|nd| nd.level).max().unwrap_or(0);
        summary.push(format!(
            "{name}: {} nodes, level {deepest}",
            tree.nodes.len()
        ));
    }
    // The planar avoidance tree has 163840 level-one children; follow the path lazily.
    let x = Point::from_fracs(&[(1, 2), (1, 3)]);
    let path = infinite_path_probe(&WTest::avoidance(2, 1).unwrap(), &x, 4, 2).unwrap();
    for pair in path.steps.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let parent = DyadicCube::new(a.r, a.u.clone(), ClosureMode::Open);
        let child = DyadicCube::new(b.r, b.u.clone(), ClosureMode::Open);
        if !parent.contains_cube(&child) || child.precision <= parent.precision {
            failures.push(format!(
                "avoidance n=2 path: level {} not inside level {}",
                b.level, a.level
            ));
        }
    }
    summary.push(format!(
        "avoidance n=2 lazy path: level {}{}",
        path.depth_reached(),
        path.stopped
            .as_ref()
            .map(|s| format!(" (stopped: {s})"))
            .unwrap_or_default()
    ));
    report(8, "tree invariants", &failures, &summary.join("; "));
}

#[test]
fn criterion_09_counterexample_oscillation() {
    let mut failures = Vec::new();
    let x = Point::from_fracs(&[(1, 3), (1, 3)]);
    let w = WTest::point_trap(vec![x.clone()]).unwrap();
    for m in 0..=4 {
        if !matches!(
            w.covers(&x, m, m + 4).unwrap(),
            Coverage::CoveredCertified { .. }
        ) {
            failures.push(format!("x not certified in U_{m}"));
        }
    }
    let f =
        OscillatingFunction::synthesize(decompose(&w, &DecomposeOptions::new(5)).unwrap()).unwrap();
    let rep = oscillation_check(&f, &x, 5).unwrap();
    if rep.partial {
        failures.push(format!("path ends after {} levels", rep.rows.len()));
    }
    for row in rep.rows.iter().filter(|r| !r.holds) {
        failures.push(format!(
            "level {}: average {} certified {}",
            row.level, row.average, row.certified
        ));
    }
    let mut gaps = Vec::new();
    for m in 0..=4 {
        let gap = f.certified_gap(m).unwrap();
        if gap > ExactScalar::pow2(-(m as i64)) {
            failures.push(format!("m={m}: |f - f_m| <= {gap}"));
        }
        gaps.push(gap.to_string());
    }
    let averages: Vec<String> = rep.rows.iter().map(|r| r.average.to_string()).collect();
    report(
        9,
        "counterexample oscillation",
        &failures,
        &format!(
            "averages [{}]; gaps [{}]",
            averages.join(", "),
            gaps.join(", ")
        ),
    );
}

#[test]
fn criterion_10_capital_growth() {
    let mut failures = Vec::new();
    let d = sum_martingale(Arc::new(WTest::avoidance(2, 1).unwrap()));
    let on = capital(&d, &Point::from_fracs(&[(1, 2), (1, 3)]), 12).unwrap();
    if !on.non_decreasing() {
        failures.push(format!("(1/2,1/3) not monotone: {:?}", on.values()));
    }
    let last = on.rows.last().and_then(|r| r.value.clone());
    if last
        .as_ref()
        .is_none_or(|v| *v < ExactScalar::from_int(3))
    {
        failures.push(format!("(1/2,1/3) ends at {last:?}"));
    }
    let off = capital(&d, &Point::from_fracs(&[(1, 3), (1, 5)]), 12).unwrap();
    let mut top = ExactScalar::zero();
    for row in &off.rows {
        let upper = row.upper.clone().unwrap();
        let cap = &ExactScalar::one() + &d.omitted_bound(row.r);
        if upper > cap {
            failures.push(format!("(1/3,1/5) r={}: {upper} > {cap}", row.r));
        }
        top = top.max(upper);
    }
    report(
        10,
        "capital growth",
        &failures,
        &format!(
            "d(1/2,1/3) at r=12 = {}; max upper at (1/3,1/5) = {top}",
            last.map(|v| v.to_string()).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_11_lebesgue_probe() {
    let mut failures = Vec::new();
    let half = open_box(&[ExactScalar::zero()], &[q(1, 1)]);
    let f = ConstantSequence::new(SimpleStepFunction::indicator(half).unwrap());
    let rows = lebesgue_probe(
        &f,
        &Point::from_fracs(&[(1, 3)]),
        10,
        0,
        TiePolicy::LowerClosed,
    )
    .unwrap();
    let one = ExactScalar::one();
    let mut finals = Vec::new();
    for t in Shift::all(1) {
        let avgs: Vec<ExactScalar> = rows
            .iter()
            .filter(|r| r.t == t)
            .map(|r| r.average.clone().expect("lower-closed ties resolve"))
            .collect();
        let gaps: Vec<ExactScalar> = avgs.iter().map(|a| (&one - a).abs()).collect();
        if gaps.windows(2).any(|g| g[1] > g[0]) {
            failures.push(format!("t={t:?}: not monotone toward 1: {avgs:?}"));
        }
        if avgs.last() != Some(&one) {
            failures.push(format!("t={t:?}: ends at {:?}", avgs.last()));
        }
        finals.push(format!(
            "{t:?}: {}",
            avgs.iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    report(11, "lebesgue probe", &failures, &finals.join("; "));
}
