use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use lebdiff::dyadic::{DyadicCube, Point};
use lebdiff::martingale::{
    capital, from_wtest, sum_martingale, verify_averaging, Approximation, AveragingReport,
    CapitalRow, DyadicMartingale,
};
use lebdiff::wtest::TestSpec;
use lebdiff::ExactScalar;
use serde::Serialize;

use super::build::{anchor_strings, build_test};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::input::{load_test, parse_point};
use crate::output::{cells, opt_cells, Report, Table};

#[derive(Args, Debug)]
pub struct ToMartingaleArgs {
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunCapitalArgs {
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub x: String,
}

#[derive(Serialize)]
struct MartingaleRow {
    r: u32,
    u: Vec<String>,
    /// Exact value of the component `d_m`.
    component: Option<ExactScalar>,
    /// Approximation of the summed martingale within `error_bound`.
    sum: Approximation,
    lower: Option<ExactScalar>,
    upper: Option<ExactScalar>,
}

#[derive(Serialize)]
struct MartingaleRecord {
    test: TestSpec,
    m: u32,
    s: u32,
    r_max: u32,
    averaging: AveragingReport,
    rows: Vec<MartingaleRow>,
}

#[derive(Serialize)]
struct CapitalRecord {
    test: TestSpec,
    point: Point,
    r_max: u32,
    non_decreasing: bool,
    rows: Vec<CapitalRow>,
}

pub fn to_martingale(cfg: &RunConfig, args: &ToMartingaleArgs) -> CliResult<Report> {
    let spec = load_test(&args.test)?;
    let w = Arc::new(build_test(&spec)?);
    let n = w.dim();
    // the averaging check reads the level below r_max
    cfg.check_cells("martingale table", (cfg.r_max as u64 + 1) * n as u64)?;
    let component = from_wtest(w.clone(), cfg.m);
    let averaging = verify_averaging(&component, cfg.r_max)?;
    let sum = sum_martingale(w);
    let mut rows = Vec::new();
    for r in 0..=cfg.r_max {
        for cube in DyadicCube::enumerate(r, n) {
            let interval = sum.certified_interval(r, &cube.anchor)?;
            rows.push(MartingaleRow {
                r,
                u: anchor_strings(&cube.anchor),
                component: component.eval_exact(r, &cube.anchor)?,
                sum: sum.eval_approx(cfg.s, r, &cube.anchor)?,
                lower: interval.as_ref().map(|(lo, _)| lo.clone()),
                upper: interval.map(|(_, hi)| hi),
            });
        }
    }
    let mut table =
        Table::new(&["r", "u"]).with_exact(&["component", "sum", "sum_error", "lower", "upper"]);
    for row in &rows {
        let mut out = vec![row.r.to_string(), row.u.join(";")];
        out.extend(opt_cells(row.component.as_ref()));
        out.extend(cells(&row.sum.value));
        out.extend(cells(&row.sum.error_bound));
        out.extend(opt_cells(row.lower.as_ref()));
        out.extend(opt_cells(row.upper.as_ref()));
        table.push(out);
    }
    let passed = averaging.passed();
    let record = MartingaleRecord {
        test: spec,
        m: cfg.m,
        s: cfg.s,
        r_max: cfg.r_max,
        averaging,
        rows,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}

pub fn run_capital(cfg: &RunConfig, args: &RunCapitalArgs) -> CliResult<Report> {
    let spec = load_test(&args.test)?;
    let w = Arc::new(build_test(&spec)?);
    let x = parse_point(&args.x, Some(w.dim()))?;
    let d = sum_martingale(w);
    let t = capital(&d, &x, cfg.r_max)?;
    let mut table = Table::new(&["r", "u"]).with_exact(&["value", "lower", "upper"]);
    for row in &t.rows {
        let mut out = vec![row.r.to_string(), anchor_strings(&row.u).join(";")];
        out.extend(opt_cells(row.value.as_ref()));
        out.extend(opt_cells(row.lower.as_ref()));
        out.extend(opt_cells(row.upper.as_ref()));
        table.push(out);
    }
    let record = CapitalRecord {
        test: spec,
        point: x,
        r_max: cfg.r_max,
        non_decreasing: t.non_decreasing(),
        rows: t.rows,
    };
    Report::new(&record, table)
}
