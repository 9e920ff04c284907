use serde::{Deserialize, Serialize};

use super::maximal::translate_average;
use super::sequence::StepSequence;
use crate::dyadic::{locate_translated_with, Point, Shift, TiePolicy};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub t: Vec<Shift>,
    pub r: u32,
    /// `None` when `x` sits on a face of the translated grid under the chosen policy.
    pub average: Option<ExactScalar>,
}

/// Averages of `f_{m_probe}` over `I^t_r(x)` for every shift `t` and `1 ≤ r ≤ r_max`.
///
/// Rows are ordered by shift, then by `r`.
pub fn lebesgue_probe(
    f: &dyn StepSequence,
    x: &Point,
    r_max: u32,
    m_probe: u32,
    policy: TiePolicy,
) -> Result<Vec<ProbeRow>> {
    if x.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    if !x.in_unit_cube() {
        return Err(Error::Domain);
    }
    let fm = f.approximant(m_probe)?;
    let mut rows = Vec::new();
    for t in Shift::all(x.dim()) {
        for r in 1..=r_max {
            let average = match locate_translated_with(x, r, &t, policy) {
                Ok(cube) => Some(translate_average(&fm, &cube)),
                Err(Error::Boundary { .. }) => None,
                Err(e) => return Err(e),
            };
            rows.push(ProbeRow {
                t: t.clone(),
                r,
                average,
            });
        }
    }
    Ok(rows)
}
