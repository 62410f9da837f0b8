//! `simulate`: TOML-configured Monte Carlo runs.
//!
//! ```toml
//! procedures = ["tost", "plugin"]   # or: procedure = "plugin"
//! n = 400
//! replications = 100000
//! seed = 2024                       # or --seed
//! alpha = 0.05
//! delta = 1.0                       # local margin; or big_delta for a fixed one
//! theta = [0.0, 1.0]
//! grid = [0.0, 0.5, 0.9]            # optional: power curve over δ′
//! boundary = true                   # optional: size at both boundary points
//!
//! [model]
//! kind = "normal"
//! ```
//!
//! Without `grid` or `boundary` a single point (`theta`, optionally shifted
//! by `h/√n`) is simulated.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use eqtest::montecarlo::{
    boundary_pair, boundary_size_sweep, estimate_rejection, power_curve, ModelKind, Procedure,
    SimConfig, SimReport,
};

use crate::error::{usage, CliError, CliResult};
use crate::output::{to_json, with_config, Report};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub procedure: Option<Procedure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub procedures: Vec<Procedure>,
    pub model: ModelKind,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    pub n: usize,
    pub replications: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub boundary: bool,
    /// Never echoed: output must not depend on it.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

fn default_alpha() -> f64 {
    0.05
}

pub fn read_config(path: &Path) -> CliResult<SimFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Config with the seed and thread overrides applied and the procedure list
/// normalised.
pub fn resolve(mut file: SimFile, seed: Option<u64>, threads: Option<usize>) -> CliResult<SimFile> {
    if let Some(s) = seed {
        file.seed = Some(s);
    }
    if file.seed.is_none() {
        return Err(usage(
            "a seed is required: set `seed` in the config or pass --seed",
        ));
    }
    if threads.is_some() {
        file.threads = threads;
    }
    if file.threads == Some(0) {
        return Err(usage("threads must be at least 1"));
    }
    match (file.procedure.take(), file.procedures.is_empty()) {
        (Some(p), true) => file.procedures = vec![p],
        (None, false) => {}
        (Some(_), false) => return Err(usage("give either `procedure` or `procedures`, not both")),
        (None, true) => return Err(usage("no procedure given")),
    }
    if file.grid.is_some() && file.h.is_some() {
        return Err(usage("`grid` sets the alternative itself; remove `h`"));
    }
    if let Some(g) = &file.grid {
        if g.is_empty() {
            return Err(usage("`grid` must not be empty"));
        }
    }
    Ok(file)
}

fn base_config(file: &SimFile, procedure: Procedure) -> SimConfig {
    SimConfig {
        procedure,
        model: file.model.clone(),
        theta: file.theta.clone(),
        h: file.h.clone(),
        n: file.n,
        replications: file.replications,
        seed: file.seed.expect("resolved"),
        alpha: file.alpha,
        delta: file.delta,
        big_delta: file.big_delta,
        threads: file.threads,
    }
}

#[derive(Debug, Serialize)]
struct Row {
    procedure: Procedure,
    kind: &'static str,
    #[serde(flatten)]
    report: SimReport,
}

pub fn run(file: &SimFile) -> CliResult<(Value, Report)> {
    let mut rows = Vec::new();
    for &procedure in &file.procedures {
        let config = base_config(file, procedure);
        config.validate()?;
        if file.boundary {
            let mut c = config.clone();
            c.h = None;
            let points = boundary_pair(&c)?;
            for report in boundary_size_sweep(&c, &points)? {
                rows.push(Row {
                    procedure,
                    kind: "boundary",
                    report,
                });
            }
        }
        if let Some(grid) = &file.grid {
            for report in power_curve(&config, grid)? {
                rows.push(Row {
                    procedure,
                    kind: "curve",
                    report,
                });
            }
        }
        if !file.boundary && file.grid.is_none() {
            rows.push(Row {
                procedure,
                kind: "point",
                report: estimate_rejection(&config)?,
            });
        }
    }
    let config = to_json(file);
    let header = vec![
        "procedure",
        "kind",
        "grid_value",
        "theta",
        "replications",
        "rejections",
        "accepts",
        "errors",
        "rejection_rate",
        "mc_standard_error",
        "ci95_low",
        "ci95_high",
        "reference_value",
        "reference_source",
        "z_discrepancy",
    ];
    let csv_rows = rows
        .iter()
        .map(|r| {
            let p = &r.report;
            vec![
                to_json(&r.procedure),
                json!(r.kind),
                json!(p.grid_value),
                json!(p.theta),
                json!(p.replications),
                json!(p.rejections),
                json!(p.accepts),
                json!(p.errors),
                json!(p.rejection_rate),
                json!(p.mc_standard_error),
                json!(p.ci95[0]),
                json!(p.ci95[1]),
                json!(p.reference_value),
                to_json(&p.reference_source),
                json!(p.z_discrepancy),
            ]
        })
        .collect();
    let body = json!({ "rows": rows });
    Ok((
        config.clone(),
        Report {
            json: with_config(&config, body),
            header,
            rows: csv_rows,
        },
    ))
}

/// Rebuild a config echoed in a run record.
pub fn from_record(config: &Value) -> CliResult<SimFile> {
    serde_json::from_value(config.clone()).map_err(|e| usage(format!("run record config: {e}")))
}
