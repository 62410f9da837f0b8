//! Data files: one observation per line, `#` starts a comment, blank lines
//! are skipped.
//!
//! - one-sample: a single number
//! - two-sample: `group,value` with group 1 or 2
//! - Bernoulli: 0 or 1

use std::path::Path;

use eqtest::models::{DataSet, Group, GroupObs};

use crate::error::{CliError, CliResult};

fn lines(path: &Path) -> CliResult<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| (i + 1, body.to_string()))
        })
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn number(path: &Path, line: usize, field: &str) -> CliResult<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("not finite: {field:?}")));
    }
    Ok(v)
}

fn nonempty<O: Clone>(path: &Path, obs: Vec<O>) -> CliResult<DataSet<O>> {
    DataSet::new(obs).map_err(|_| parse_err(path, 0, "no observations"))
}

pub fn read_values(path: &Path) -> CliResult<DataSet<f64>> {
    let obs = lines(path)?
        .into_iter()
        .map(|(line, body)| number(path, line, &body))
        .collect::<CliResult<Vec<_>>>()?;
    nonempty(path, obs)
}

pub fn read_groups(path: &Path) -> CliResult<DataSet<GroupObs>> {
    let obs = lines(path)?
        .into_iter()
        .map(|(line, body)| {
            let (g, v) = body
                .split_once(',')
                .ok_or_else(|| parse_err(path, line, "expected `group,value`"))?;
            let group = match g.trim() {
                "1" => Group::First,
                "2" => Group::Second,
                other => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("group must be 1 or 2, got {other:?}"),
                    ))
                }
            };
            Ok(GroupObs {
                group,
                value: number(path, line, v)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    nonempty(path, obs)
}

pub fn read_binary(path: &Path) -> CliResult<DataSet<bool>> {
    let obs = lines(path)?
        .into_iter()
        .map(|(line, body)| match body.as_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(
                path,
                line,
                format!("expected 0 or 1, got {other:?}"),
            )),
        })
        .collect::<CliResult<Vec<_>>>()?;
    nonempty(path, obs)
}
