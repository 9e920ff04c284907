use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lebdiff::dyadic::Point;
use lebdiff::stepfn::{Placement, SequenceSpec};
use lebdiff::wtest::{ArrayDefect, ArrayRule, CertifiedMeasure, Coverage, TestSpec, WTest};
use lebdiff::Poly;
use num_bigint::BigInt;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::{load_sequence_spec, load_test, parse_point};
use crate::output::{cells, Report, Table};

/// Largest `m` reported by `gen-test`.
pub const GEN_TEST_M_MAX: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Avoidance,
    CauchyGap,
    MaximalGap,
    PointTrap,
}

#[derive(Args, Debug)]
pub struct GenTestArgs {
    #[arg(long, value_enum)]
    pub kind: TestKind,
    /// One-based axis for the avoidance test.
    #[arg(long, default_value_t = 1)]
    pub axis: usize,
    /// Sequence JSON for the gap tests; defaults to seeded bumps.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Bump height exponent for the default sequence.
    #[arg(long, default_value_t = 0)]
    pub height_bits: u32,
    /// Number of bumps in the default sequence; unbounded when omitted.
    #[arg(long)]
    pub count: Option<u32>,
    /// Point-trap centers such as `1/3,1/5`; repeat for several.
    #[arg(long = "center")]
    pub centers: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TestInfoArgs {
    #[arg(long)]
    pub test: PathBuf,
    /// Report three-valued coverage of this point.
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Serialize)]
struct GenTestRecord {
    test: TestSpec,
    dim: usize,
    rule: ArrayRule,
    first_term: u32,
    array_precision: Poly,
    certified: Vec<CertifiedMeasure>,
}

#[derive(Serialize)]
struct TestInfoRecord {
    test: TestSpec,
    dim: usize,
    rule: ArrayRule,
    m: u32,
    first_term: u32,
    certified: CertifiedMeasure,
    array_defects: Vec<ArrayDefect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<Coverage>,
}

pub fn build_test(spec: &TestSpec) -> CliResult<WTest> {
    Ok(spec.build()?)
}

fn default_sequence(cfg: &RunConfig, args: &GenTestArgs) -> CliResult<SequenceSpec> {
    match &args.sequence {
        Some(path) => load_sequence_spec(path),
        None => Ok(SequenceSpec::Bumps {
            dim: cfg.n,
            height_bits: args.height_bits,
            placement: Placement::Seeded(cfg.seed),
            count: args.count,
        }),
    }
}

fn centers(cfg: &RunConfig, args: &GenTestArgs) -> CliResult<Vec<Point>> {
    if args.centers.is_empty() {
        let third = vec![(1i64, 3i64); cfg.n];
        return Ok(vec![Point::from_fracs(&third)]);
    }
    args.centers
        .iter()
        .map(|c| parse_point(c, Some(cfg.n)))
        .collect()
}

fn certified_table(rows: &[CertifiedMeasure]) -> Table {
    let mut t = Table::new(&["m", "first_term", "last_term", "prefix_exact"])
        .with_exact(&["prefix", "tail", "upper", "target"]);
    t.headers.push("within_target".into());
    for c in rows {
        let mut row = vec![
            c.m.to_string(),
            c.first_term.to_string(),
            c.last_term.to_string(),
            c.prefix_exact.to_string(),
        ];
        for v in [&c.prefix, &c.tail, &c.upper, &c.target] {
            row.extend(cells(v));
        }
        row.push(c.within_target.to_string());
        t.push(row);
    }
    t
}

pub fn gen_test(cfg: &RunConfig, args: &GenTestArgs) -> CliResult<Report> {
    let spec = match args.kind {
        TestKind::Avoidance => {
            if args.axis == 0 || args.axis > cfg.n {
                return Err(CliError::Usage(format!("axis must lie in 1..={}", cfg.n)));
            }
            TestSpec::Avoidance {
                n: cfg.n,
                axis: args.axis,
            }
        }
        TestKind::CauchyGap => TestSpec::CauchyGap {
            sequence: default_sequence(cfg, args)?,
        },
        TestKind::MaximalGap => TestSpec::MaximalGap {
            sequence: default_sequence(cfg, args)?,
            c: cfg.c,
        },
        TestKind::PointTrap => TestSpec::Custom {
            centers: centers(cfg, args)?,
        },
    };
    let w = build_test(&spec)?;
    let certified = (0..=GEN_TEST_M_MAX)
        .map(|m| w.certified_measure(m, w.default_last(m)))
        .collect::<lebdiff::Result<Vec<_>>>()?;
    let passed = certified.iter().all(|c| c.within_target);
    let table = certified_table(&certified);
    let record = GenTestRecord {
        dim: w.dim(),
        rule: w.rule(),
        first_term: w.start(0),
        array_precision: w.array_precision().clone(),
        certified,
        test: spec,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}

pub fn test_info(cfg: &RunConfig, args: &TestInfoArgs) -> CliResult<Report> {
    let spec = load_test(&args.test)?;
    let w = build_test(&spec)?;
    let m = cfg.m;
    let certified = w.certified_measure(m, w.default_last(m))?;
    let array_defects = (0..=cfg.k)
        .map(|k| w.array_defect(k, m, w.default_last(m)))
        .collect::<lebdiff::Result<Vec<_>>>()?;
    let coverage = match &args.x {
        Some(x) => Some(w.covers(&parse_point(x, Some(w.dim()))?, m, cfg.k_max)?),
        None => None,
    };
    let mut table = Table::new(&["k", "m", "last_term"]).with_exact(&[
        "prefix_sym_diff",
        "guaranteed",
        "target",
    ]);
    table.headers.push("within_target".into());
    for d in &array_defects {
        let mut row = vec![d.k.to_string(), d.m.to_string(), d.last_term.to_string()];
        for v in [&d.prefix_sym_diff, &d.guaranteed, &d.target] {
            row.extend(cells(v));
        }
        row.push(d.within_target.to_string());
        table.push(row);
    }
    let passed = certified.within_target && array_defects.iter().all(|d| d.within_target);
    let record = TestInfoRecord {
        dim: w.dim(),
        rule: w.rule(),
        m,
        first_term: w.start(m),
        certified,
        array_defects,
        coverage,
        test: spec,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}

pub fn anchor_strings(u: &[BigInt]) -> Vec<String> {
    u.iter().map(|a| a.to_string()).collect()
}
