//! The `fit`, `infer` and `simulate` subcommands.

use std::path::{Path, PathBuf};

use classo::estimators::FixedPointResiduals;
use classo::inference::{columns_inference, TargetInference};
use classo::simulate::{DesignSpec, SimReport};
use classo::{
    fit_baseline, holm, run_replicates, ClassoConfig, FitStatus, Method, SemiparametricData,
    SimSpec,
};
use serde::Serialize;

use crate::args::{DataArgs, FitArgs, InferArgs, LambdaArg, ModelArgs, SimulateArgs};
use crate::error::{CliError, Result};
use crate::output::{emit_json, SCHEMA_VERSION};
use crate::table::{fmt_f64, read_csv, render_rows, write_csv, Dataset};

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub path: PathBuf,
    pub n: usize,
    pub p: usize,
    pub response: String,
    pub centered: bool,
    pub scaled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub lambda: LambdaArg,
    pub iterations: usize,
    pub schedule_c: f64,
    pub alpha_zero: bool,
}

impl From<&ModelArgs> for ModelSummary {
    fn from(m: &ModelArgs) -> Self {
        ModelSummary {
            lambda: m.lambda,
            iterations: m.iterations,
            schedule_c: m.schedule_c,
            alpha_zero: m.alpha_zero,
        }
    }
}

/// One predictor under one method.
#[derive(Debug, Clone, Serialize)]
pub struct TargetResult {
    /// 1-based predictor position.
    pub target: usize,
    pub name: String,
    pub method: Method,
    pub estimate: f64,
    pub std_error: f64,
    pub sigma_hat: f64,
    pub ci: [f64; 2],
    pub p_value: f64,
    pub iterations: usize,
    pub status: Option<FitStatus>,
    pub fixed_point: Option<FixedPointResiduals>,
    pub lambda_used: f64,
    pub last_lambda: Option<f64>,
}

impl TargetResult {
    fn new(t: TargetInference, names: &[String]) -> Self {
        TargetResult {
            target: t.column + 1,
            name: names[t.column].clone(),
            method: t.method,
            estimate: t.estimate,
            std_error: t.std_error,
            sigma_hat: t.sigma_hat,
            ci: [t.ci.lower, t.ci.upper],
            p_value: t.p_value,
            iterations: t.iterations,
            status: t.status,
            fixed_point: t.fixed_point,
            lambda_used: t.lambda,
            last_lambda: t.last_lambda,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub data: DataSummary,
    pub model: ModelSummary,
    pub level: f64,
    pub results: Vec<TargetResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRow {
    /// Position in the ascending p-value order, from 1.
    pub rank: usize,
    pub target: usize,
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    /// `level / (p − rank + 1)`.
    pub holm_threshold: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub data: DataSummary,
    pub model: ModelSummary,
    pub method: Method,
    pub level: f64,
    pub sigma_hat: f64,
    pub lambda_used: f64,
    /// Sorted by p-value.
    pub tests: Vec<TestRow>,
    /// Rejected targets, ascending.
    pub rejected: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub report: SimReport,
}

/// Data read from disk and turned into a model, plus what was done to it.
pub struct Loaded {
    pub data: SemiparametricData,
    pub dataset: Dataset,
    pub summary: DataSummary,
}

pub fn load(args: &DataArgs) -> Result<Loaded> {
    let mut ds = read_csv(&args.data, &args.response_col)?;
    eprintln!(
        "classo: read {} rows, response {:?} and {} predictors from {}",
        ds.n(),
        ds.response_name,
        ds.p(),
        args.data.display()
    );
    preprocess(&mut ds, args.center, args.scale)?;
    let summary = DataSummary {
        path: args.data.clone(),
        n: ds.n(),
        p: ds.p(),
        response: ds.response_name.clone(),
        centered: args.center,
        scaled: args.scale,
    };
    let data =
        SemiparametricData::from_design(ds.response.clone(), ds.predictors.clone(), vec![0])?;
    Ok(Loaded {
        data,
        dataset: ds,
        summary,
    })
}

/// Centre the response and predictors and/or rescale predictors to
/// `‖x‖²/n = 1`.
pub fn preprocess(ds: &mut Dataset, center: bool, scale: bool) -> Result<()> {
    let n = ds.n() as f64;
    if center {
        let mean = ds.response.iter().sum::<f64>() / n;
        ds.response.iter_mut().for_each(|v| *v -= mean);
    }
    if !(center || scale) {
        return Ok(());
    }
    let mut columns = Vec::with_capacity(ds.p());
    for j in 0..ds.p() {
        let mut col = ds.predictors.column(j).to_vec();
        if center {
            let mean = col.iter().sum::<f64>() / n;
            col.iter_mut().for_each(|v| *v -= mean);
        }
        if scale {
            let rms = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            if rms == 0.0 {
                return Err(CliError::usage(format!(
                    "cannot scale predictor {:?}: it is constant",
                    ds.names[j]
                )));
            }
            col.iter_mut().for_each(|v| *v /= rms);
        }
        columns.push(col);
    }
    ds.predictors = classo::Matrix::from_columns(&columns)?;
    Ok(())
}

fn check_open(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{name} must lie in ({lo}, {hi}), got {v}"
        )))
    }
}

fn check_targets(targets: &[usize], p: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(CliError::usage("no targets given"));
    }
    for (k, &t) in targets.iter().enumerate() {
        if t == 0 || t > p {
            return Err(CliError::usage(format!("target {t} outside 1..={p}")));
        }
        if targets[..k].contains(&t) {
            return Err(CliError::usage(format!("target {t} given twice")));
        }
    }
    Ok(())
}

/// Collect per-target results, failing on the first module error.
fn collect(
    results: Vec<classo::Result<TargetInference>>,
    names: &[String],
) -> Result<Vec<TargetResult>> {
    results
        .into_iter()
        .map(|r| {
            r.map(|t| TargetResult::new(t, names))
                .map_err(CliError::from)
        })
        .collect()
}

pub fn fit_output(args: &FitArgs) -> Result<FitOutput> {
    check_open("--level", args.level, 0.5, 1.0)?;
    if args.methods.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    let loaded = load(&args.data)?;
    check_targets(&args.targets, loaded.dataset.p())?;
    let cfg = args.model.config();
    let base = fit_baseline(&loaded.data, &cfg)?;
    let columns: Vec<usize> = args.targets.iter().map(|t| t - 1).collect();
    let mut results = Vec::new();
    for &method in &args.methods {
        let fits = columns_inference(
            &loaded.data,
            &columns,
            method,
            &cfg,
            &base,
            1.0 - args.level,
        );
        results.extend(collect(fits, &loaded.dataset.names)?);
    }
    Ok(FitOutput {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        data: loaded.summary,
        model: (&args.model).into(),
        level: args.level,
        results,
    })
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let out = fit_output(args)?;
    emit_json(&out, args.out.as_deref())?;
    if args.out.is_some() {
        print!("{}", fit_table(&out));
    }
    Ok(())
}

/// p-values for every predictor and the Holm rejections at `level`.
pub fn infer_on(
    data: &SemiparametricData,
    names: &[String],
    method: Method,
    cfg: &ClassoConfig,
    level: f64,
) -> Result<(Vec<TestRow>, Vec<usize>, f64, f64)> {
    let p = data.design().ncols();
    let base = fit_baseline(data, cfg)?;
    let columns: Vec<usize> = (0..p).collect();
    let fits = collect(
        columns_inference(data, &columns, method, cfg, &base, level),
        names,
    )?;
    let p_values: Vec<f64> = fits.iter().map(|r| r.p_value).collect();
    let outcome = holm(&p_values, level);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut rejected: Vec<usize> = outcome.rejected_indices.iter().map(|&j| j + 1).collect();
    rejected.sort_unstable();
    let rows = order
        .iter()
        .enumerate()
        .map(|(k, &j)| TestRow {
            rank: k + 1,
            target: j + 1,
            name: names[j].clone(),
            estimate: fits[j].estimate,
            std_error: fits[j].std_error,
            p_value: p_values[j],
            holm_threshold: level / (p - k) as f64,
            rejected: outcome.rejected_indices.contains(&j),
        })
        .collect();
    Ok((rows, rejected, base.sigma_hat, base.lambda))
}

pub fn infer_output(args: &InferArgs) -> Result<InferOutput> {
    check_open("--level", args.level, 0.0, 0.5)?;
    let loaded = load(&args.data)?;
    let cfg = args.model.config();
    let (tests, rejected, sigma_hat, lambda_used) = infer_on(
        &loaded.data,
        &loaded.dataset.names,
        args.method,
        &cfg,
        args.level,
    )?;
    Ok(InferOutput {
        schema_version: SCHEMA_VERSION,
        command: "infer",
        data: loaded.summary,
        model: (&args.model).into(),
        method: args.method,
        level: args.level,
        sigma_hat,
        lambda_used,
        tests,
        rejected,
    })
}

fn test_table(tests: &[TestRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "rank",
        "target",
        "name",
        "estimate",
        "std_error",
        "p_value",
        "holm_threshold",
        "rejected",
    ];
    let rows = tests
        .iter()
        .map(|t| {
            vec![
                t.rank.to_string(),
                t.target.to_string(),
                t.name.clone(),
                fmt_f64(t.estimate),
                fmt_f64(t.std_error),
                fmt_f64(t.p_value),
                fmt_f64(t.holm_threshold),
                t.rejected.to_string(),
            ]
        })
        .collect();
    (header.iter().map(|s| s.to_string()).collect(), rows)
}

pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    let out = infer_output(args)?;
    if let Some(path) = &args.table {
        let (header, rows) = test_table(&out.tests);
        write_csv(path, &header, &rows)?;
    }
    emit_json(&out, args.out.as_deref())?;
    eprintln!(
        "classo: {} of {} hypotheses rejected at family-wise level {}",
        out.rejected.len(),
        out.tests.len(),
        out.level
    );
    Ok(())
}

pub fn sim_spec(args: &SimulateArgs) -> Result<SimSpec> {
    check_open("--level", args.level, 0.5, 1.0)?;
    check_open("--fwer-level", args.fwer_level, 0.0, 0.5)?;
    let rho = args
        .rho
        .unwrap_or_else(|| DesignSpec::default_rho(args.design));
    let design = DesignSpec {
        kind: args.design,
        p: args.p,
        rho,
    };
    let mut spec = SimSpec::new(args.n, design, args.seed)?;
    spec.reps = args.reps;
    spec.sigma = args.noise_sd;
    spec.methods = args.methods.clone();
    spec.targets = args.targets.clone();
    spec.ci_alpha = 1.0 - args.level;
    spec.fwer_alpha = args.fwer_level;
    spec.multiple_testing = args.holm;
    spec.config = args.model.config();
    spec.validate()?;
    Ok(spec)
}

/// `report.json` → `report.replicates.csv`.
fn replicates_path(out: &Path) -> PathBuf {
    out.with_extension("replicates.csv")
}

fn replicate_table(report: &SimReport) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "rep", "method", "target", "estimate", "ci_lower", "ci_upper", "covered", "sq_error",
    ];
    let rows = report
        .records
        .iter()
        .map(|r| {
            vec![
                r.rep.to_string(),
                r.method.name().to_string(),
                r.target.to_string(),
                fmt_f64(r.estimate),
                fmt_f64(r.ci_lower),
                fmt_f64(r.ci_upper),
                r.covered.to_string(),
                fmt_f64(r.sq_error),
            ]
        })
        .collect();
    (header.iter().map(|s| s.to_string()).collect(), rows)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = sim_spec(args)?;
    let report = run_replicates(&spec)?;
    for msg in &report.failure_messages {
        eprintln!("classo: {msg}");
    }
    let csv_path = args
        .replicates
        .clone()
        .or_else(|| args.out.as_deref().map(replicates_path));
    if let Some(path) = &csv_path {
        let (header, rows) = replicate_table(&report);
        write_csv(path, &header, &rows)?;
    }
    print!("{}", report.summary_table());
    let valid = report.valid;
    let (failures, replicates) = (report.failures, report.replicates);
    if let Some(path) = &args.out {
        emit_json(
            &SimulateOutput {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                report,
            },
            Some(path),
        )?;
    }
    if valid {
        Ok(())
    } else {
        Err(CliError::InvalidReport {
            failures,
            replicates,
        })
    }
}

/// Short text table of fit results for humans.
pub fn fit_table(out: &FitOutput) -> String {
    let rows: Vec<Vec<String>> = out
        .results
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.method.label().to_string(),
                format!("{:.4}", r.estimate),
                format!("{:.4}", r.std_error),
                format!("[{:.4}, {:.4}]", r.ci[0], r.ci[1]),
                format!("{:.3e}", r.p_value),
            ]
        })
        .collect();
    render_rows(&["target", "method", "estimate", "se", "ci", "p"], &rows)
}
