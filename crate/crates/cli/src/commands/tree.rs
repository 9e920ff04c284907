use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lebdiff::counterexample::{
    oscillation_check, OscillatingFunction, OscillationReport, ParityRow,
};
use lebdiff::dyadic::{Point, TiePolicy};
use lebdiff::stepfn::{lebesgue_probe, ProbeRow, SimpleStepFunction};
use lebdiff::tree::{decompose, DecomposeOptions, DyadicTree, TreeReport};
use lebdiff::ExactScalar;
use serde::Serialize;

use super::build::{anchor_strings, build_test};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::{load_function, load_test, load_tree, parse_point};
use crate::output::{cells, opt_cells, Report, Table};

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub test: PathBuf,
    /// Only expand nodes containing this point.
    #[arg(long)]
    pub focus: Option<String>,
    #[arg(long)]
    pub k_cap: Option<u32>,
    #[arg(long)]
    pub node_budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// Tree JSON from `decompose`.
    #[arg(long, conflicts_with = "test")]
    pub tree: Option<PathBuf>,
    /// Decompose this test first, to `--depth`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, requires = "test")]
    pub focus: Option<String>,
    /// Also check the oscillation along this point's path.
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Tie {
    #[default]
    Strict,
    LowerClosed,
}

impl From<Tie> for TiePolicy {
    fn from(t: Tie) -> Self {
        match t {
            Tie::Strict => TiePolicy::Strict,
            Tie::LowerClosed => TiePolicy::LowerClosed,
        }
    }
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    /// Sequence or step-function JSON.
    #[arg(long, conflicts_with_all = ["tree", "test"])]
    pub function: Option<PathBuf>,
    /// Probe the counterexample synthesized from this tree.
    #[arg(long, conflicts_with = "test")]
    pub tree: Option<PathBuf>,
    /// Probe the counterexample synthesized from this test, decomposed to `--depth`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = Tie::Strict)]
    pub tie: Tie,
}

#[derive(Serialize)]
struct DecomposeRecord {
    tree: DyadicTree,
    report: TreeReport,
}

#[derive(Serialize)]
struct GapRow {
    m: u32,
    gap: ExactScalar,
    bound: ExactScalar,
    holds: bool,
}

#[derive(Serialize)]
struct SynthesisRecord {
    function: SimpleStepFunction,
    unexpanded_bound: ExactScalar,
    gaps: Vec<GapRow>,
    parity: Vec<ParityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oscillation: Option<OscillationReport>,
}

#[derive(Serialize)]
struct LebesgueRecord {
    point: Point,
    r_max: u32,
    m: u32,
    tie: &'static str,
    rows: Vec<ProbeRow>,
}

#[derive(Serialize)]
struct OscillationRecord {
    point: Point,
    depth: u32,
    oscillation: OscillationReport,
}

fn tree_table(tree: &DyadicTree) -> Table {
    let mut t = Table::new(&["id", "level", "r", "u", "parent", "tier", "expanded"])
        .with_exact(&["child_mass"]);
    for nd in &tree.nodes {
        let mut row = vec![
            nd.id.to_string(),
            nd.level.to_string(),
            nd.r.to_string(),
            anchor_strings(&nd.u).join(";"),
            nd.parent.map(|p| p.to_string()).unwrap_or_default(),
            nd.tier.to_string(),
            nd.expanded.to_string(),
        ];
        row.extend(opt_cells(nd.child_mass.as_ref()));
        t.push(row);
    }
    t
}

fn decompose_test(
    cfg: &RunConfig,
    test: &std::path::Path,
    focus: Option<&String>,
) -> CliResult<DyadicTree> {
    let w = build_test(&load_test(test)?)?;
    let opts = match focus {
        Some(x) => DecomposeOptions::focused(cfg.depth, parse_point(x, Some(w.dim()))?),
        None => DecomposeOptions::new(cfg.depth),
    };
    Ok(decompose(&w, &opts)?)
}

pub fn decompose_cmd(cfg: &RunConfig, args: &DecomposeArgs) -> CliResult<Report> {
    let w = build_test(&load_test(&args.test)?)?;
    let mut opts = match &args.focus {
        Some(x) => DecomposeOptions::focused(cfg.depth, parse_point(x, Some(w.dim()))?),
        None => DecomposeOptions::new(cfg.depth),
    };
    if let Some(k) = args.k_cap {
        if k == 0 {
            return Err(CliError::Usage("k_cap must be positive".into()));
        }
        opts.k_cap = k;
    }
    if let Some(b) = args.node_budget {
        opts.node_budget = b;
    }
    let tree = decompose(&w, &opts)?;
    let report = tree.verify();
    let table = tree_table(&tree);
    let passed = report.passed();
    Ok(Report::new(&DecomposeRecord { tree, report }, table)?.passed(passed))
}

fn counterexample(
    cfg: &RunConfig,
    tree: Option<&PathBuf>,
    test: Option<&PathBuf>,
    focus: Option<&String>,
) -> CliResult<OscillatingFunction> {
    let tree = match (tree, test) {
        (Some(path), _) => load_tree(path)?,
        (None, Some(path)) => decompose_test(cfg, path, focus)?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --tree or --test is required".into(),
            ))
        }
    };
    Ok(OscillatingFunction::synthesize(tree)?)
}

pub fn synthesize(cfg: &RunConfig, args: &SynthesizeArgs) -> CliResult<Report> {
    let f = counterexample(
        cfg,
        args.tree.as_ref(),
        args.test.as_ref(),
        args.focus.as_ref(),
    )?;
    let gaps = (0..=cfg.k_max)
        .map(|m| {
            let gap = f.certified_gap(m)?;
            let bound = ExactScalar::pow2(-(m as i64));
            Ok(GapRow {
                m,
                holds: gap <= bound,
                gap,
                bound,
            })
        })
        .collect::<lebdiff::Result<Vec<_>>>()?;
    let oscillation = match &args.x {
        Some(x) => Some(oscillation_check(
            &f,
            &parse_point(x, Some(f.tree().n))?,
            cfg.depth,
        )?),
        None => None,
    };
    let parity = f.parity_bounds();
    let passed = gaps.iter().all(|g| g.holds)
        && parity.iter().all(|p| p.holds)
        && oscillation.as_ref().is_none_or(|o| o.passed());
    let n = f.tree().n;
    let mut headers: Vec<String> = Vec::new();
    for i in 0..n {
        headers.push(format!("lo{i}"));
        headers.push(format!("hi{i}"));
    }
    let mut table = Table {
        headers,
        rows: Vec::new(),
    }
    .with_exact(&["value"]);
    for piece in f.built().pieces() {
        let mut row = Vec::new();
        for i in 0..n {
            row.push(piece.cell.lo(i).to_string());
            row.push(piece.cell.hi(i).to_string());
        }
        row.extend(cells(&piece.value));
        table.push(row);
    }
    let record = SynthesisRecord {
        function: f.built().clone(),
        unexpanded_bound: f.unexpanded_bound(),
        gaps,
        parity,
        oscillation,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}

pub fn probe(cfg: &RunConfig, args: &ProbeArgs) -> CliResult<Report> {
    if let Some(path) = &args.function {
        let seq = load_function(path)?;
        let x = parse_point(&args.x, Some(seq.dim()))?;
        let rows = lebesgue_probe(seq.as_ref(), &x, cfg.r_max, cfg.m, args.tie.into())?;
        let mut table = Table::new(&["t", "r"]).with_exact(&["average"]);
        for row in &rows {
            let t: Vec<String> = row.t.iter().map(|s| s.ratio().to_string()).collect();
            let mut out = vec![t.join(";"), row.r.to_string()];
            out.extend(opt_cells(row.average.as_ref()));
            table.push(out);
        }
        let record = LebesgueRecord {
            point: x,
            r_max: cfg.r_max,
            m: cfg.m,
            tie: match args.tie {
                Tie::Strict => "strict",
                Tie::LowerClosed => "lower_closed",
            },
            rows,
        };
        return Report::new(&record, table);
    }
    let f = counterexample(cfg, args.tree.as_ref(), args.test.as_ref(), None)?;
    let x = parse_point(&args.x, Some(f.tree().n))?;
    let rep = oscillation_check(&f, &x, cfg.depth)?;
    let mut table = Table::new(&["level", "r", "u"]).with_exact(&["average", "certified"]);
    table.headers.push("holds".into());
    for row in &rep.rows {
        let mut out = vec![
            row.level.to_string(),
            row.r.to_string(),
            anchor_strings(&row.u).join(";"),
        ];
        out.extend(cells(&row.average));
        out.extend(cells(&row.certified));
        out.push(row.holds.to_string());
        table.push(out);
    }
    let passed = rep.passed();
    let record = OscillationRecord {
        point: x,
        depth: cfg.depth,
        oscillation: rep,
    };
    Ok(Report::new(&record, table)?.passed(passed))
}
