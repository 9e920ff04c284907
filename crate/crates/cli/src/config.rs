use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lebdiff::dyadic::DEFAULT_MAX_DIM;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything a run depends on. Flags override values read from `--config`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub m: u32,
    pub k: u32,
    pub s: u32,
    pub r_max: u32,
    pub k_max: u32,
    pub depth: u32,
    /// Largest `log2` of a cell enumeration any command may start.
    pub cell_budget_log2: u64,
    pub max_dim: usize,
    /// Hardy–Littlewood constant; `None` means `6^n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            m: 0,
            k: 4,
            s: 4,
            r_max: 6,
            k_max: 4,
            depth: 3,
            cell_budget_log2: 20,
            max_dim: DEFAULT_MAX_DIM,
            c: None,
            seed: 0,
            out: None,
            format: Format::Json,
        }
    }
}

/// Flag values; `None` leaves the file or default value in place.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub m: Option<u32>,
    pub k: Option<u32>,
    pub s: Option<u32>,
    pub r_max: Option<u32>,
    pub k_max: Option<u32>,
    pub depth: Option<u32>,
    pub cell_budget_log2: Option<u64>,
    pub c: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )* };
        }
        take!(
            n,
            m,
            k,
            s,
            r_max,
            k_max,
            depth,
            cell_budget_log2,
            seed,
            format
        );
        if o.c.is_some() {
            self.c = o.c;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = [
            ("r_max", self.r_max as u64),
            ("k_max", self.k_max as u64),
            ("depth", self.depth as u64),
            ("cell_budget_log2", self.cell_budget_log2),
            ("max_dim", self.max_dim as u64),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(CliError::Usage(format!("{name} must be positive")));
        }
        if self.max_dim > DEFAULT_MAX_DIM {
            return Err(CliError::Usage(format!(
                "max_dim is at most {DEFAULT_MAX_DIM}"
            )));
        }
        if self.n == 0 || self.n > self.max_dim {
            return Err(CliError::Usage(format!(
                "n must lie in 1..={}",
                self.max_dim
            )));
        }
        if self.c == Some(0) {
            return Err(CliError::Usage("c must be positive".into()));
        }
        Ok(())
    }

    /// Fails fast when an enumeration of `2^{log2}` cells exceeds the budget.
    pub fn check_cells(&self, what: &str, log2: u64) -> CliResult<()> {
        if log2 > self.cell_budget_log2 {
            return Err(lebdiff::Error::ResourceCap {
                what: what.to_string(),
                required: format!("2^{log2} cells"),
                cap: format!("2^{}", self.cell_budget_log2),
            }
            .into());
        }
        Ok(())
    }
}
