use std::fmt;

use rayon::prelude::*;
use roughlab::lab::{
    coarsen_keeping_jumps, jump_ablation, run_approx_ladder, run_scheme_ladder, sample_driver,
    write_levels_csv, write_plot_data, write_summary_json, DriverSample, ExperimentConfig,
    LadderReport, LadderSummary,
};
use roughlab::lift::{
    canonical_lift, rie_diagnostic, second_level_variation, LiftOptions, RieOptions, RoughPath,
};
use roughlab::paths::io::{write_path_csv, write_solution_csv};
use roughlab::paths::{Partition, PartitionSequence};
use roughlab::schemes::{euler_scheme, solve_rde_reference};
use roughlab::variation::p_variation;
use serde_json::{json, Value};

use crate::manifest::{json_bytes, OutputDir};

#[derive(Debug)]
pub enum CliError {
    Core(roughlab::Error),
    Io(std::io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<roughlab::Error> for CliError {
    fn from(e: roughlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Whether the run met its acceptance criterion; subcommands without one always pass.
pub type Passed = bool;

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(value)?)
}

fn grid_details(sample: &DriverSample, cfg: &ExperimentConfig) -> Value {
    json!({"horizon": cfg.horizon, "level": cfg.levels.reference, "points": sample.path.len()})
}

/// Runs `work` for every seed in parallel and returns the results in seed order.
fn per_seed<T: Send>(
    cfg: &ExperimentConfig,
    work: impl Fn(u64) -> CliResult<T> + Sync,
) -> CliResult<Vec<(u64, T)>> {
    cfg.seeds
        .par_iter()
        .map(|&s| work(s).map(|t| (s, t)))
        .collect()
}

fn family_sequence(sample: &DriverSample, cfg: &ExperimentConfig) -> CliResult<PartitionSequence> {
    let levels: Vec<u32> = (cfg.levels.min..=cfg.levels.max).collect();
    let parts = levels
        .iter()
        .map(|&n| sample.partition(cfg.partition_family(), n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PartitionSequence::new(levels, parts)?)
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let runs = per_seed(cfg, |s| {
        let sample = sample_driver(cfg, s)?;
        let mut buf = Vec::new();
        write_path_csv(&sample.path, &mut buf)?;
        Ok((buf, grid_details(&sample, cfg)))
    })?;
    let mut grids = vec![];
    for (s, (csv, grid)) in runs {
        out.write(&format!("path_seed{s}.csv"), &csv, Some(s))?;
        grids.push(json!({"seed": s, "grid": grid}));
    }
    Ok((
        true,
        json!({"driver": to_json(&cfg.driver)?, "grids": grids}),
    ))
}

/// Canonical lift along the configured family with the master grid as the finest level.
pub fn lift(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let p = cfg.exponents.p;
    let runs = per_seed(cfg, |s| {
        let sample = sample_driver(cfg, s)?;
        let seq = family_sequence(&sample, cfg)?;
        let mut levels = seq.levels().to_vec();
        let mut parts = seq.partitions().to_vec();
        levels.push(cfg.levels.reference);
        parts.push(sample.path.grid().clone());
        let seq = PartitionSequence::new(levels, parts)?;
        let (lift, report) =
            canonical_lift(&sample.path, &seq, p, LiftOptions { tolerance: None })?;
        let coarse = sample.partition(cfg.partition_family(), cfg.levels.max)?;
        let summary = json!({
            "seed": s,
            "report": to_json(&report)?,
            "p_variation": p_variation(&sample.path, p, None)?,
            "second_level_variation": second_level_variation(&lift, p / 2.0)?,
        });
        Ok((json_bytes(&summary), lift.restrict(&coarse)?.to_json()))
    })?;
    for (s, (summary, restricted)) in runs {
        out.write(&format!("lift_seed{s}.json"), &summary, Some(s))?;
        out.write(
            &format!("lift_seed{s}_level{}.json", cfg.levels.max),
            restricted.as_bytes(),
            Some(s),
        )?;
    }
    Ok((true, json!({"family": cfg.partition_family(), "p": p})))
}

pub fn rie_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let p = cfg.exponents.p;
    let runs = per_seed(cfg, |s| {
        let sample = sample_driver(cfg, s)?;
        let seq = family_sequence(&sample, cfg)?;
        let w = cfg.rie.control.build(&sample.path, p);
        Ok(rie_diagnostic(
            &sample.path,
            &seq,
            p,
            &w,
            RieOptions {
                rel_tol: cfg.rie.rel_tol,
            },
        )?)
    })?;
    let mut failed = vec![];
    for (s, report) in &runs {
        out.write(
            &format!("rie_seed{s}.json"),
            &json_bytes(&to_json(report)?),
            Some(*s),
        )?;
        if !report.pass {
            failed.push(json!({"seed": s, "condition": report.failing_condition, "witness": to_json(&report.witness)?}));
        }
    }
    Ok((
        failed.is_empty(),
        json!({"family": cfg.partition_family(), "failed": failed}),
    ))
}

/// The self-checked reference on the master grid and the Euler scheme at the top level.
pub fn solve(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let coeffs = cfg.coefficients.build()?;
    let runs = per_seed(cfg, |s| {
        let sample = sample_driver(cfg, s)?;
        let x = &sample.path;
        let lift = RoughPath::grid_lift(x.clone(), cfg.exponents.p)?;
        let reference = solve_rde_reference(
            &coeffs,
            &cfg.y0,
            &lift,
            &coarsen_keeping_jumps(x, 2)?,
            &coarsen_keeping_jumps(x, 4)?,
        )?;
        let part: Partition = sample.partition(cfg.partition_family(), cfg.levels.max)?;
        let euler = euler_scheme(&coeffs, &cfg.y0, x, &part)?;
        let (mut r, mut e) = (Vec::new(), Vec::new());
        write_solution_csv(&reference.path, &mut r)?;
        write_solution_csv(&euler, &mut e)?;
        let summary = json!({
            "seed": s,
            "reference_tolerance": reference.tolerance,
            "milstein_gap": reference.milstein_gap,
            "euler_level": cfg.levels.max,
            "euler_points": euler.len(),
        });
        Ok((r, e, summary))
    })?;
    let mut summaries = vec![];
    for (s, (r, e, summary)) in runs {
        out.write(&format!("reference_seed{s}.csv"), &r, Some(s))?;
        out.write(&format!("euler_seed{s}.csv"), &e, Some(s))?;
        summaries.push(summary);
    }
    out.write("summary.json", &json_bytes(&Value::Array(summaries)), None)?;
    Ok((true, json!({"family": cfg.partition_family()})))
}

fn write_ladder(
    report: &LadderReport,
    cfg: &ExperimentConfig,
    prefix: &str,
    out: &mut OutputDir,
) -> CliResult<()> {
    let mut buf = Vec::new();
    write_levels_csv(report, &mut buf)?;
    out.write(&format!("{prefix}{}", cfg.outputs.levels_csv), &buf, None)?;
    if !cfg.outputs.plot_data.is_empty() {
        buf.clear();
        write_plot_data(report, &mut buf)?;
        out.write(&format!("{prefix}{}", cfg.outputs.plot_data), &buf, None)?;
    }
    Ok(())
}

pub fn rates(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let report = run_scheme_ladder(cfg)?;
    write_ladder(&report, cfg, "", out)?;
    let mut buf = Vec::new();
    write_summary_json(&report, &mut buf)?;
    out.write(&cfg.outputs.summary_json, &buf, None)?;
    Ok((
        report.pass != Some(false),
        to_json(&LadderSummary::of(&report))?,
    ))
}

pub fn approx(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let report = run_approx_ladder(cfg)?;
    write_ladder(&report.approx, cfg, "", out)?;
    write_ladder(&report.exact, cfg, "exact_", out)?;
    let summary = json!({
        "pass": report.pass,
        "approx": to_json(&LadderSummary::of(&report.approx))?,
        "exact": to_json(&LadderSummary::of(&report.exact))?,
        "seeds": to_json(&report.seeds)?,
    });
    out.write(&cfg.outputs.summary_json, &json_bytes(&summary), None)?;
    Ok((
        report.pass,
        json!({"perturbation": to_json(&cfg.perturbation)?}),
    ))
}

pub fn ablate(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<(Passed, Value)> {
    let report = jump_ablation(cfg)?;
    out.write(
        &cfg.outputs.summary_json,
        &json_bytes(&to_json(&report)?),
        None,
    )?;
    let mut text = String::from("seed,level,augmented_error,dyadic_error\n");
    for s in &report.seeds {
        for ((n, a), d) in s
            .levels
            .iter()
            .zip(&s.augmented_errors)
            .zip(&s.dyadic_errors)
        {
            text.push_str(&format!("{},{n},{a},{d}\n", s.seed));
        }
    }
    out.write("ablation.csv", text.as_bytes(), None)?;
    Ok((report.pass, json!({"seeds": report.seeds.len()})))
}
