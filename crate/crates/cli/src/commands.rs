//! `critical`, `test` and `power`.

use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use eqtest::critical::{
    critical_constant, exact_power, onesided_local_power, tost_limit_power, EquivalenceSpec,
};
use eqtest::models::{Bernoulli, Group, Linear, NormalModel, Theta, TwoSampleNormal};
use eqtest::procedures::{
    asymptotic_power_bound, plugin_test, plugin_test_with_sd, tost, ump_known_sigma, TestDecision,
};

use crate::data::{read_binary, read_groups, read_values};
use crate::error::{usage, CliResult};
use crate::output::{to_json, with_config, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Normal,
    TwoSample,
    Bernoulli,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Half-width of the equivalence interval.
    #[arg(long)]
    pub delta: f64,
    /// Standard deviation of the test statistic.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

pub fn critical(args: &CriticalArgs) -> CliResult<(Value, Report)> {
    let spec = EquivalenceSpec::new(args.alpha, args.delta, args.sigma)?;
    let cc = critical_constant(&spec)?;
    let config = json!({"alpha": args.alpha, "delta": args.delta, "sigma": args.sigma});
    let body = json!({
        "c": cc.c,
        "residual": cc.residual,
        "lower_bound": cc.lower_bound(),
        "excess_over_lower_bound": cc.excess_over_lower_bound(),
        "small_margin_limit": cc.small_margin_limit(),
    });
    let row = vec![
        json!(args.alpha),
        json!(args.delta),
        json!(args.sigma),
        body["c"].clone(),
        body["residual"].clone(),
        body["lower_bound"].clone(),
        body["excess_over_lower_bound"].clone(),
        body["small_margin_limit"].clone(),
    ];
    Ok((
        config.clone(),
        Report {
            json: with_config(&config, body),
            header: vec![
                "alpha",
                "delta",
                "sigma",
                "c",
                "residual",
                "lower_bound",
                "excess_over_lower_bound",
                "small_margin_limit",
            ],
            rows: vec![row],
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    /// Known-variance UMP test on the mean (needs --sigma).
    Ump,
    /// Two one-sided t tests.
    Tost,
    /// Plug-in test at the maximum likelihood estimate.
    Plugin,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("margin").required(true).args(["delta", "lower", "local_delta"])))]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub method: TestMethod,
    /// Data file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "normal")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Margin Δ around --center, in the units of the data.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Lower end of the equivalence interval.
    #[arg(long, requires = "upper", allow_negative_numbers = true)]
    pub lower: Option<f64>,
    /// Upper end of the equivalence interval.
    #[arg(long, requires = "lower", allow_negative_numbers = true)]
    pub upper: Option<f64>,
    /// Plug-in only: margin δ on the √n scale (null |g| ≥ δ/√n).
    #[arg(long)]
    pub local_delta: Option<f64>,
    /// Centre of the equivalence interval (reference proportion for Bernoulli).
    #[arg(
        long,
        default_value_t = 0.0,
        allow_negative_numbers = true,
        conflicts_with = "lower"
    )]
    pub center: f64,
    /// Known σ for `ump`; for `plugin`, a σ̂ replacing the information-based one.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Two-sample allocation fraction; defaults to the observed share of group 1.
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ResolvedTest {
    method: TestMethod,
    data: PathBuf,
    model: ModelArg,
    alpha: f64,
    center: f64,
    big_delta: Option<f64>,
    local_delta: Option<f64>,
    sigma: Option<f64>,
    fraction: Option<f64>,
}

pub fn test(args: &TestArgs) -> CliResult<(Value, Report)> {
    let (center, big_delta) = match (args.delta, args.lower, args.upper) {
        (Some(d), None, None) => (args.center, Some(d)),
        (None, Some(l), Some(u)) => {
            if l >= u || l.is_nan() || u.is_nan() {
                return Err(usage(format!("--lower ({l}) must be below --upper ({u})")));
            }
            (0.5 * (l + u), Some(0.5 * (u - l)))
        }
        _ => (args.center, None),
    };
    if args.local_delta.is_some() && args.method != TestMethod::Plugin {
        return Err(usage("--local-delta applies only to --method plugin"));
    }
    if args.method != TestMethod::Plugin && args.model != ModelArg::Normal {
        return Err(usage(
            format!("--method {:?} needs --model normal", args.method).to_lowercase(),
        ));
    }
    let mut resolved = ResolvedTest {
        method: args.method,
        data: args.data.clone(),
        model: args.model,
        alpha: args.alpha,
        center,
        big_delta,
        local_delta: args.local_delta,
        sigma: args.sigma,
        fraction: args.fraction,
    };
    // δ on the √n scale for the plug-in test
    let local = |n: usize| match (args.local_delta, big_delta) {
        (Some(d), _) => d,
        (None, Some(b)) => (n as f64).sqrt() * b,
        (None, None) => unreachable!("margin group is required"),
    };

    let decision: TestDecision = match (args.method, args.model) {
        (TestMethod::Ump | TestMethod::Tost, _) => {
            let data = read_values(&args.data)?;
            let shifted: Vec<f64> = data.iter().map(|x| x - center).collect();
            let shifted = eqtest::models::DataSet::new(shifted)?;
            let big = big_delta.expect("checked above");
            if args.method == TestMethod::Ump {
                let sigma = args
                    .sigma
                    .ok_or_else(|| usage("--method ump needs the known --sigma"))?;
                ump_known_sigma(&shifted, sigma, args.alpha, big)?
            } else {
                if args.sigma.is_some() {
                    return Err(usage("--sigma does not apply to --method tost"));
                }
                tost(&shifted, args.alpha, big)?
            }
        }
        (TestMethod::Plugin, ModelArg::Normal) => {
            let data = read_values(&args.data)?;
            let g = NormalModel.mean_functional(center);
            run_plugin(
                &NormalModel,
                &g,
                &data,
                args.alpha,
                local(data.n()),
                args.sigma,
            )?
        }
        (TestMethod::Plugin, ModelArg::TwoSample) => {
            let data = read_groups(&args.data)?;
            let fraction = match args.fraction {
                Some(f) => f,
                None => {
                    let first = data.iter().filter(|x| x.group == Group::First).count();
                    if first == 0 || first == data.n() {
                        return Err(eqtest::Error::DegenerateData(
                            "two-sample data need observations in both groups".into(),
                        )
                        .into());
                    }
                    first as f64 / data.n() as f64
                }
            };
            resolved.fraction = Some(fraction);
            let model = TwoSampleNormal::new(fraction)?;
            let g = Linear::new(vec![1.0, -1.0, 0.0], center);
            run_plugin(&model, &g, &data, args.alpha, local(data.n()), args.sigma)?
        }
        (TestMethod::Plugin, ModelArg::Bernoulli) => {
            let data = read_binary(&args.data)?;
            let g = Bernoulli.proportion_functional(center);
            run_plugin(
                &Bernoulli,
                &g,
                &data,
                args.alpha,
                local(data.n()),
                args.sigma,
            )?
        }
    };
    if args.method == TestMethod::Plugin {
        resolved.local_delta = Some(decision.spec.delta());
    }
    let config = to_json(&resolved);
    let body = json!({
        "method": decision.method,
        "n": decision.n,
        "statistic": decision.statistic,
        "critical_value": decision.critical_value,
        "p_value": decision.p_value,
        "reject": decision.reject,
        "sigma_used": decision.sigma_used,
        "alpha": decision.spec.alpha(),
        "delta": decision.spec.delta(),
        "statistic_sd": decision.spec.sigma(),
        "diagnostics": decision.diagnostics,
    });
    let header = vec![
        "method",
        "n",
        "statistic",
        "critical_value",
        "p_value",
        "reject",
        "sigma_used",
        "alpha",
        "delta",
        "statistic_sd",
        "diagnostics",
    ];
    let row = header.iter().map(|k| body[*k].clone()).collect();
    Ok((
        config.clone(),
        Report {
            json: with_config(&config, body),
            header,
            rows: vec![row],
        },
    ))
}

fn run_plugin<M: eqtest::models::Model>(
    model: &M,
    g: &Linear,
    data: &eqtest::models::DataSet<M::Obs>,
    alpha: f64,
    delta: f64,
    sigma: Option<f64>,
) -> CliResult<TestDecision> {
    Ok(match sigma {
        Some(s) => plugin_test_with_sd(model, g, data, alpha, delta, s)?,
        None => plugin_test(model, g, data, alpha, delta)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMethod {
    /// Exact power of the UMP test against δ′.
    Ump,
    /// Local asymptotic power envelope at δ′ (attained by the plug-in test).
    Plugin,
    /// Limiting TOST power at local alternative h.
    Tost,
    /// One-sided envelope at distance h inside a fixed margin.
    Onesided,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long, value_enum)]
    pub method: PowerMethod,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Margin δ (not used by `onesided`).
    #[arg(long)]
    pub delta: Option<f64>,
    /// σ of the statistic (normal and two-sample models).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Model used by `plugin` to compute σ at the null centre.
    #[arg(long, value_enum, default_value = "normal")]
    pub model: ModelArg,
    /// Bernoulli null centre p₀.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Two-sample allocation fraction.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// Comma-separated δ′ (or h) values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Vec<f64>,
    /// Evenly spaced grid on [0, grid-max] (with --grid-steps intervals).
    #[arg(long, requires = "grid_steps", conflicts_with = "grid")]
    pub grid_max: Option<f64>,
    #[arg(long, requires = "grid_max")]
    pub grid_steps: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ResolvedPower {
    method: PowerMethod,
    alpha: f64,
    delta: Option<f64>,
    sigma: f64,
    model: ModelArg,
    p0: Option<f64>,
    fraction: Option<f64>,
    grid: Vec<f64>,
}

pub fn power(args: &PowerArgs) -> CliResult<(Value, Report)> {
    let grid: Vec<f64> = match (args.grid_max, args.grid_steps) {
        (Some(max), Some(steps)) => {
            if steps == 0 || max.is_nan() || max < 0.0 {
                return Err(usage(
                    "--grid-steps must be positive and --grid-max nonnegative",
                ));
            }
            (0..=steps).map(|i| max * i as f64 / steps as f64).collect()
        }
        _ => args.grid.clone(),
    };
    if grid.is_empty() {
        return Err(usage(
            "grid is empty: give --grid or --grid-max with --grid-steps",
        ));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(usage("grid values must be finite"));
    }
    let need_delta = || {
        args.delta
            .ok_or_else(|| usage("--delta is required for this method"))
    };
    let alpha = args.alpha;
    let mut resolved = ResolvedPower {
        method: args.method,
        alpha,
        delta: args.delta,
        sigma: args.sigma,
        model: args.model,
        p0: None,
        fraction: None,
        grid: grid.clone(),
    };
    let (source, values): (&str, Vec<f64>) = match args.method {
        PowerMethod::Ump => {
            let spec = EquivalenceSpec::new(alpha, need_delta()?, args.sigma)?;
            let v = grid
                .iter()
                .map(|&d| exact_power(d, &spec))
                .collect::<Result<_, _>>()?;
            ("EXACT_POWER", v)
        }
        PowerMethod::Plugin => {
            let delta = need_delta()?;
            let v = match args.model {
                ModelArg::Normal => {
                    let theta0 = Theta::new(vec![0.0, args.sigma]);
                    let g = NormalModel.mean_functional(0.0);
                    grid.iter()
                        .map(|&d| {
                            asymptotic_power_bound(d, &NormalModel, &g, &theta0, alpha, delta)
                        })
                        .collect::<Result<_, _>>()?
                }
                ModelArg::TwoSample => {
                    let model = TwoSampleNormal::new(args.fraction)?;
                    resolved.fraction = Some(args.fraction);
                    let theta0 = Theta::new(vec![0.0, 0.0, args.sigma]);
                    grid.iter()
                        .map(|&d| {
                            asymptotic_power_bound(
                                d,
                                &model,
                                &model.difference(),
                                &theta0,
                                alpha,
                                delta,
                            )
                        })
                        .collect::<Result<_, _>>()?
                }
                ModelArg::Bernoulli => {
                    let p0 = args
                        .p0
                        .ok_or_else(|| usage("--model bernoulli needs --p0"))?;
                    resolved.p0 = Some(p0);
                    let theta0 = Theta::new(vec![p0]);
                    let g = Bernoulli.proportion_functional(p0);
                    grid.iter()
                        .map(|&d| asymptotic_power_bound(d, &Bernoulli, &g, &theta0, alpha, delta))
                        .collect::<Result<_, _>>()?
                }
            };
            ("BOUND_EQ9", v)
        }
        PowerMethod::Tost => {
            let delta = need_delta()?;
            let v = grid
                .iter()
                .map(|&h| tost_limit_power(h, alpha, delta, args.sigma))
                .collect::<Result<_, _>>()?;
            ("TOST_LIMIT_EQ15", v)
        }
        PowerMethod::Onesided => {
            let v = grid
                .iter()
                .map(|&h| onesided_local_power(h, alpha, args.sigma))
                .collect::<Result<_, _>>()?;
            ("ONESIDED_BOUND", v)
        }
    };
    let rows: Vec<Vec<Value>> = grid
        .iter()
        .zip(&values)
        .map(|(g, v)| vec![json!(g), json!(v), json!(source)])
        .collect();
    let config = to_json(&resolved);
    let body = json!({
        "rows": rows.iter().map(|r| json!({
            "delta_prime_or_h": r[0],
            "analytic_power_or_bound": r[1],
            "source": r[2],
        })).collect::<Vec<_>>(),
    });
    Ok((
        config.clone(),
        Report {
            json: with_config(&config, body),
            header: vec!["delta_prime_or_h", "analytic_power_or_bound", "source"],
            rows,
        },
    ))
}
