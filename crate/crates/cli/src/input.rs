use std::path::Path;
use std::sync::Arc;

use lebdiff::dyadic::Point;
use lebdiff::stepfn::{ConstantSequence, SequenceSpec, SimpleStepFunction, StepSequence};
use lebdiff::tree::DyadicTree;
use lebdiff::wtest::TestSpec;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, CliResult};

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Accepts the bare record or a command output that wraps it under `key`.
fn unwrap_as<T: DeserializeOwned>(v: Value, key: &str, path: &Path) -> CliResult<T> {
    let inner = match v {
        Value::Object(mut map) if map.contains_key(key) => map.remove(key).unwrap_or(Value::Null),
        other => other,
    };
    serde_json::from_value(inner)
        .map_err(|e| CliError::Usage(format!("{}: not a valid {key}: {e}", path.display())))
}

pub fn load_test(path: &Path) -> CliResult<TestSpec> {
    unwrap_as(read_json(path)?, "test", path)
}

pub fn load_tree(path: &Path) -> CliResult<DyadicTree> {
    unwrap_as(read_json(path)?, "tree", path)
}

pub fn load_sequence_spec(path: &Path) -> CliResult<SequenceSpec> {
    unwrap_as(read_json(path)?, "sequence", path)
}

/// A sequence record, or a bare step function taken as a constant sequence.
pub fn load_function(path: &Path) -> CliResult<Arc<dyn StepSequence>> {
    let v = read_json(path)?;
    let v = match v {
        Value::Object(mut map) if map.contains_key("function") => {
            map.remove("function").unwrap_or(Value::Null)
        }
        other => other,
    };
    if v.get("kind").is_some() {
        let spec: SequenceSpec = serde_json::from_value(v)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(spec.build()?);
    }
    let f: SimpleStepFunction = serde_json::from_value(v)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(ConstantSequence::new(f)))
}

pub fn parse_point(s: &str, n: Option<usize>) -> CliResult<Point> {
    let x = Point::parse(s)?;
    if let Some(n) = n {
        if x.dim() != n {
            return Err(lebdiff::Error::Dimension {
                expected: n,
                got: x.dim(),
            }
            .into());
        }
    }
    Ok(x)
}
