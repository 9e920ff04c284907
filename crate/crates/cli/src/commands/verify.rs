use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use lebdiff::counterexample::{oscillation_check, OscillatingFunction};
use lebdiff::dyadic::{DyadicCube, Point};
use lebdiff::martingale::{
    capital, from_wtest, sum_martingale, verify_averaging, ConstantMartingale,
};
use lebdiff::stepfn::{
    count_straddling_translates, hardy_littlewood_default, maximal_set, random_corpus,
};
use lebdiff::tree::{decompose, DecomposeOptions};
use lebdiff::wtest::{EstimateRoute, WTest};
use lebdiff::{Error, ExactScalar};
use num_bigint::BigInt;
use serde::Serialize;

use super::build::build_test;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::{load_test, parse_point};
use crate::output::{Report, Table};

/// Random step functions drawn by the `chebyshev` suite.
pub const CHEBYSHEV_CORPUS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Averaging,
    Measure,
    Array,
    Estimator,
    Chebyshev,
    Straddle,
    Tree,
    Oscillation,
    Capital,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Averaging => "averaging",
            Suite::Measure => "measure",
            Suite::Array => "array",
            Suite::Estimator => "estimator",
            Suite::Chebyshev => "chebyshev",
            Suite::Straddle => "straddle",
            Suite::Tree => "tree",
            Suite::Oscillation => "oscillation",
            Suite::Capital => "capital",
            Suite::All => "all",
        }
    }
}

const EVERY_SUITE: [Suite; 9] = [
    Suite::Averaging,
    Suite::Measure,
    Suite::Array,
    Suite::Estimator,
    Suite::Chebyshev,
    Suite::Straddle,
    Suite::Tree,
    Suite::Oscillation,
    Suite::Capital,
];

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Test JSON. Without it, the avoidance test is used for measure, array and
    /// capital, and a point trap at `--x` for estimator, tree and oscillation.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Probe point; defaults to `(1/3, …, 1/3)`, or `(1/2, 1/3, …)` for capital.
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct VerifyRecord {
    suite: &'static str,
    passed: bool,
    checks: Vec<Check>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    args: &'a VerifyArgs,
}

impl Ctx<'_> {
    fn given(&self) -> CliResult<Option<WTest>> {
        match &self.args.test {
            Some(p) => Ok(Some(build_test(&load_test(p)?)?)),
            None => Ok(None),
        }
    }

    fn n(&self) -> CliResult<usize> {
        Ok(match &self.args.test {
            Some(p) => build_test(&load_test(p)?)?.dim(),
            None => self.cfg.n,
        })
    }

    fn point(&self, n: usize, first: (i64, i64)) -> CliResult<Point> {
        match &self.args.x {
            Some(x) => parse_point(x, Some(n)),
            None => {
                let mut c = vec![(1, 3); n];
                c[0] = first;
                Ok(Point::from_fracs(&c))
            }
        }
    }

    fn avoidance_or_given(&self) -> CliResult<WTest> {
        match self.given()? {
            Some(w) => Ok(w),
            None => Ok(WTest::avoidance(self.cfg.n, 1)?),
        }
    }

    fn trap_or_given(&self) -> CliResult<WTest> {
        match self.given()? {
            Some(w) => Ok(w),
            None => Ok(WTest::point_trap(vec![self.point(self.cfg.n, (1, 3))?])?),
        }
    }
}

fn check(suite: Suite, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        suite: suite.name(),
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn averaging(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let cfg = ctx.cfg;
    let n = ctx.n()?;
    cfg.check_cells("averaging check", (cfg.r_max as u64 + 1) * n as u64)?;
    let mut out = Vec::new();
    let one = ConstantMartingale::new(n, ExactScalar::one())?;
    let rep = verify_averaging(&one, cfg.r_max)?;
    out.push(check(
        Suite::Averaging,
        "constant",
        rep.passed(),
        format!("{} cubes", rep.cubes_checked),
    ));
    if let Some(w) = ctx.given()? {
        let w = Arc::new(w);
        for m in 0..=cfg.m {
            let rep = verify_averaging(&from_wtest(w.clone(), m), cfg.r_max)?;
            let detail = match &rep.violation {
                Some(v) => format!(
                    "r={} parent {} vs children {}",
                    v.r, v.parent, v.children_average
                ),
                None => format!("{} cubes", rep.cubes_checked),
            };
            out.push(check(
                Suite::Averaging,
                format!("component m={m}"),
                rep.passed(),
                detail,
            ));
        }
    }
    Ok(out)
}

fn measure(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let w = ctx.avoidance_or_given()?;
    (0..=6)
        .map(|m| {
            let c = w.certified_measure(m, w.default_last(m))?;
            Ok(check(
                Suite::Measure,
                format!("m={m}"),
                c.within_target,
                format!("{} <= {}", c.upper, c.target),
            ))
        })
        .collect()
}

fn array(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let w = ctx.avoidance_or_given()?;
    let mut out = Vec::new();
    for m in 0..=ctx.cfg.m {
        for k in 0..=ctx.cfg.k {
            let d = w.array_defect(k, m, w.default_last(m))?;
            out.push(check(
                Suite::Array,
                format!("k={k} m={m}"),
                d.within_target,
                format!("{} <= {}", d.prefix_sym_diff, d.target),
            ));
        }
    }
    Ok(out)
}

fn estimator(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let cfg = ctx.cfg;
    let w = ctx.trap_or_given()?;
    let n = w.dim();
    cfg.check_cells("estimator cubes", cfg.r_max as u64 * n as u64)?;
    let mut out = Vec::new();
    for m in 0..=cfg.m {
        let exact = w.exact_union(m).ok_or_else(|| {
            CliError::Usage("the estimator suite needs a test with a finite union".into())
        })??;
        let mut worst = ExactScalar::zero();
        let mut violations = 0u64;
        let mut capped = 0u64;
        let mut total = 0u64;
        for r in 0..=cfg.r_max {
            for cube in DyadicCube::enumerate(r, n) {
                let truth = exact.intersect_box(&cube.to_open_box()).measure();
                for s in 0..=cfg.s {
                    for route in [EstimateRoute::Array, EstimateRoute::CellCenters] {
                        let est = match w.measure_estimate_big(s, r, &cube.anchor, m, route) {
                            Err(Error::ResourceCap { .. })
                                if route == EstimateRoute::CellCenters =>
                            {
                                capped += 1;
                                continue;
                            }
                            other => other?,
                        };
                        total += 1;
                        let err = (&est.value - &truth).abs();
                        if err > est.error_bound {
                            violations += 1;
                        }
                        worst = worst.max(err.mul_pow2(s as i64));
                    }
                }
            }
        }
        out.push(check(
            Suite::Estimator,
            format!("m={m}"),
            violations == 0,
            format!("{total} estimates, {violations} violations, max err·2^s = {worst}, {capped} cell-center runs capped"),
        ));
    }
    Ok(out)
}

fn chebyshev(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let cfg = ctx.cfg;
    let n = ctx.n()?;
    let c = cfg.c.unwrap_or_else(|| hardy_littlewood_default(n));
    let eps = [
        ExactScalar::dyadic(1, 2),
        ExactScalar::one(),
        ExactScalar::dyadic(3, 1),
    ];
    let mut cheb_bad = 0;
    let mut hl_bad = 0;
    let mut worst = num_rational::BigRational::from_integer(BigInt::from(0));
    for f in random_corpus(cfg.seed, CHEBYSHEV_CORPUS, Some(n))? {
        let norm = f.l1_norm().to_ratio();
        for e in &eps {
            let bound = &norm / e.to_ratio();
            if f.chebyshev_set(e)?.measure().to_ratio() > bound {
                cheb_bad += 1;
            }
            let hl = maximal_set(&f, e, cfg.r_max)?.set.measure().to_ratio();
            if hl > &bound * BigInt::from(c) {
                hl_bad += 1;
            }
            if !norm.numer().eq(&BigInt::from(0)) {
                worst = worst.max(hl / &bound);
            }
        }
    }
    let cases = CHEBYSHEV_CORPUS * eps.len();
    Ok(vec![
        check(
            Suite::Chebyshev,
            "chebyshev",
            cheb_bad == 0,
            format!("{cases} cases, {cheb_bad} violations"),
        ),
        check(
            Suite::Chebyshev,
            format!("maximal c={c}"),
            hl_bad == 0,
            format!("{cases} cases, {hl_bad} violations, smallest empirical c = {worst}"),
        ),
    ])
}

fn straddle(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for n in 1..=ctx.n()? {
        for p in 0..=3u32 {
            for r in (p + 1)..=ctx.cfg.r_max {
                let s = count_straddling_translates(r, p, n)?;
                out.push(check(
                    Suite::Straddle,
                    format!("n={n} p={p} r={r}"),
                    s.within_bound,
                    format!("{} <= {}", s.count, s.bound),
                ));
            }
        }
    }
    Ok(out)
}

fn tree(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let w = ctx.trap_or_given()?;
    let opts = match &ctx.args.x {
        Some(x) => DecomposeOptions::focused(ctx.cfg.depth, parse_point(x, Some(w.dim()))?),
        None => DecomposeOptions::new(ctx.cfg.depth),
    };
    let t = decompose(&w, &opts)?;
    let rep = t.verify();
    let detail = match rep.violations.first() {
        Some(v) => format!("{} violations, first {v:?}", rep.violations.len()),
        None => format!("{} nodes, {} pairs", rep.nodes, rep.pairs_checked),
    };
    Ok(vec![check(
        Suite::Tree,
        "subset/nesting/mass",
        rep.passed(),
        detail,
    )])
}

fn oscillation(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let cfg = ctx.cfg;
    let w = ctx.trap_or_given()?;
    let x = ctx.point(w.dim(), (1, 3))?;
    let f = OscillatingFunction::synthesize(decompose(&w, &DecomposeOptions::new(cfg.depth))?)?;
    let rep = oscillation_check(&f, &x, cfg.depth)?;
    let averages: Vec<String> = rep.rows.iter().map(|r| r.average.to_string()).collect();
    let mut out = vec![check(
        Suite::Oscillation,
        format!("path of {x}"),
        rep.passed(),
        format!(
            "averages [{}]{}",
            averages.join(", "),
            if rep.partial { " (partial)" } else { "" }
        ),
    )];
    for m in 0..=cfg.k_max {
        let gap = f.certified_gap(m)?;
        let bound = ExactScalar::pow2(-(m as i64));
        out.push(check(
            Suite::Oscillation,
            format!("|f - f_{m}|"),
            gap <= bound,
            format!("{gap} <= {bound}"),
        ));
    }
    Ok(out)
}

fn capital_suite(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let w = ctx.avoidance_or_given()?;
    let x = ctx.point(w.dim(), (1, 2))?;
    let t = capital(&sum_martingale(Arc::new(w)), &x, ctx.cfg.r_max)?;
    let last = t.rows.last().and_then(|r| r.value.clone());
    Ok(vec![check(
        Suite::Capital,
        format!("trajectory at {x}"),
        t.non_decreasing(),
        format!(
            "final value {}",
            last.map(|v| v.to_string())
                .unwrap_or_else(|| "unknown".into())
        ),
    )])
}

fn run_suite(ctx: &Ctx, suite: Suite) -> CliResult<Vec<Check>> {
    match suite {
        Suite::Averaging => averaging(ctx),
        Suite::Measure => measure(ctx),
        Suite::Array => array(ctx),
        Suite::Estimator => estimator(ctx),
        Suite::Chebyshev => chebyshev(ctx),
        Suite::Straddle => straddle(ctx),
        Suite::Tree => tree(ctx),
        Suite::Oscillation => oscillation(ctx),
        Suite::Capital => capital_suite(ctx),
        Suite::All => {
            let mut out = Vec::new();
            for s in EVERY_SUITE {
                out.extend(run_suite(ctx, s)?);
            }
            Ok(out)
        }
    }
}

pub fn verify(cfg: &RunConfig, args: &VerifyArgs) -> CliResult<Report> {
    let ctx = Ctx { cfg, args };
    let checks = run_suite(&ctx, args.suite)?;
    let passed = checks.iter().all(|c| c.passed);
    let mut table = Table::new(&["suite", "name", "passed", "detail"]);
    for c in &checks {
        table.push(vec![
            c.suite.into(),
            c.name.clone(),
            c.passed.to_string(),
            c.detail.clone(),
        ]);
    }
    let record = VerifyRecord {
        suite: args.suite.name(),
        passed,
        checks,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}
