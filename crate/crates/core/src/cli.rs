//! Batch front end. Every command writes one report (CSV or JSON) to
//! `--out` or stdout, headed by a provenance block.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when a numerical
//! routine fails; in the last case a best-effort report marked
//! `certified: false` is still written.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bubbles::{BubbleParam, Superposition};
use crate::constants::{Ambient, SharpConstants};
use crate::error::Error;
use crate::expansion::{self, ExpansionPoint, ExpansionReport};
use crate::functional::{Functional, FunctionalReport};
use crate::quadrature::QuadratureConfig;
use crate::thresholds::{self, c_spec, c_two_peak, ThresholdReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Fraction of `min(c_spec, c_two_peak)` below which a scanned quotient is
/// flagged.
pub const SLACK: f64 = 0.95;

const SCOPE_NOTE: &str = "values are upper bounds and empirical quotients; \
the existence of a minimizer and the value of c_BE(s) are not computed";

#[derive(Parser, Debug)]
#[command(
    name = "bestab",
    version,
    about = "Stability quotients of Talenti bubble superpositions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Fractional order in (0, d/2).
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-14)]
    pub abs_tol: f64,
    #[arg(long, global = true, default_value_t = 30)]
    pub max_subdivisions: u32,
    /// Input JSON (a superposition, or the grid for `sweep-grid`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated λ values for `expand`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for grid evaluations.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Bubble normalization, sharp constant and expansion constants.
    Constants,
    /// Spectral and two-peak thresholds at (d, s).
    Thresholds,
    /// Threshold comparison over a range of dimensions at fixed s.
    Crossover {
        #[arg(long, default_value_t = 1)]
        d_min: usize,
        #[arg(long, default_value_t = 12)]
        d_max: usize,
    },
    /// Full functional report of a superposition.
    Eval,
    /// Squared distance to the bubble manifold and its maximizer.
    Dist,
    /// Two-bubble sweep B + B_λ and log-log fit of the deficit.
    Expand,
    /// Quotients of B + c2·B_{R e1, λ} over a parameter grid.
    SweepGrid,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Thresholds => "thresholds",
            Command::Crossover { .. } => "crossover",
            Command::Eval => "eval",
            Command::Dist => "dist",
            Command::Expand => "expand",
            Command::SweepGrid => "sweep-grid",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Parsed and validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub ambient: Option<Ambient>,
    /// `--s` as given; `crossover` uses it without a dimension.
    pub order: Option<f64>,
    pub tolerances: QuadratureConfig,
    pub input_path: Option<PathBuf>,
    pub lambda_grid: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
}

/// Grid of `sweep-grid`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGridConfig {
    pub c2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub separation: Vec<f64>,
}

/// Failure of a run, with the exit status it maps to.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
    /// Partial report written alongside a numerical failure.
    pub partial: Option<Box<Report>>,
    /// Ambient of the failed run, when known.
    pub ambient: Option<Ambient>,
}

impl RunError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
            partial: None,
            ambient: None,
        }
    }

    fn on(mut self, amb: &Ambient) -> Self {
        self.ambient.get_or_insert(*amb);
        self
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_INVALID
        };
        Self {
            code,
            message: e.to_string(),
            partial: None,
            ambient: None,
        }
    }
}

/// A finished report: a JSON body, a CSV table and, for `expand`, a fit
/// summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Map<String, Value>,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub sidecar: Option<Map<String, Value>>,
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_else(|| "null".into())
}

fn to_map<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("serializable") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, RunError> {
        let c = &cli.common;
        let crossover = matches!(cli.command, Command::Crossover { .. });
        let ambient = match (c.d, c.s) {
            (Some(d), Some(s)) => Some(Ambient::new(d, s)?),
            (None, None) => None,
            (None, Some(_)) if crossover => None,
            (Some(_), None) => return Err(RunError::invalid("--d given without --s")),
            (None, Some(_)) => return Err(RunError::invalid("--s given without --d")),
        };
        let tolerances = QuadratureConfig::new(c.rel_tol, c.abs_tol, c.max_subdivisions)?;
        if c.jobs == 0 {
            return Err(RunError::invalid("--jobs must be at least 1"));
        }
        let cfg = Self {
            command: cli.command,
            ambient,
            order: c.s,
            tolerances,
            input_path: c.config.clone(),
            lambda_grid: c.lambda.clone(),
            output: c.out.clone(),
            format: c.format,
            jobs: c.jobs,
        };
        cfg.check_required()?;
        Ok(cfg)
    }

    fn check_required(&self) -> Result<(), RunError> {
        let name = self.command.name();
        match self.command {
            Command::Constants | Command::Thresholds | Command::Expand | Command::SweepGrid
                if self.ambient.is_none() =>
            {
                Err(RunError::invalid(format!("{name} requires --d and --s")))
            }
            Command::Crossover { d_min, d_max } => {
                if self.order.is_none() {
                    return Err(RunError::invalid("crossover requires --s"));
                }
                if d_min == 0 || d_min > d_max {
                    return Err(RunError::invalid(format!(
                        "invalid dimension range {d_min}..={d_max}"
                    )));
                }
                Ok(())
            }
            Command::Eval | Command::Dist | Command::SweepGrid if self.input_path.is_none() => {
                Err(RunError::invalid(format!("{name} requires --config")))
            }
            _ => Ok(()),
        }
    }

    fn provenance(&self, ambient: Option<&Ambient>) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command.name()));
        if let Some(a) = ambient {
            m.insert("d".into(), json!(a.d()));
            m.insert("s".into(), json!(a.s()));
        }
        m.insert("rel_tol".into(), json!(self.tolerances.rel_tol));
        m.insert("abs_tol".into(), json!(self.tolerances.abs_tol));
        m.insert(
            "max_subdivisions".into(),
            json!(self.tolerances.max_subdivisions),
        );
        m.insert("note".into(), json!(SCOPE_NOTE));
        m
    }
}

fn read_text(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path)
        .map_err(|e| RunError::invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_superposition(cfg: &RunConfig) -> Result<Superposition, RunError> {
    let path = cfg.input_path.as_ref().expect("checked");
    let u = Superposition::from_json(&read_text(path)?)?;
    if let Some(a) = cfg.ambient {
        if a != *u.ambient() {
            return Err(RunError::invalid(format!(
                "--d/--s ({}, {}) disagree with the config ({}, {})",
                a.d(),
                a.s(),
                u.ambient().d(),
                u.ambient().s()
            )));
        }
    }
    Ok(u)
}

fn threshold_row(r: &ThresholdReport) -> Vec<String> {
    vec![
        r.d.to_string(),
        fmt_num(r.s),
        fmt_num(r.c_spec),
        fmt_num(r.c_two_peak),
        r.binding.as_str().into(),
    ]
}

const THRESHOLD_HEADER: [&str; 5] = ["d", "s", "c_spec", "c_two_peak", "binding"];
const EXPAND_HEADER: [&str; 7] = [
    "lambda",
    "hs_norm_sq",
    "lp_norm_sq_2star",
    "m",
    "mu_of_lambda",
    "dist_sq",
    "be_value",
];
const REPORT_HEADER: [&str; 6] = [
    "hs_norm_sq",
    "lp_norm",
    "m",
    "dist_sq",
    "sobolev_quotient",
    "be_quotient",
];
const SWEEP_HEADER: [&str; 11] = [
    "c2",
    "lambda",
    "separation",
    "hs_norm_sq",
    "lp_norm",
    "m",
    "dist_sq",
    "sobolev_quotient",
    "be_quotient",
    "below_slack",
    "error",
];

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|n| n.to_string()).collect()
}

fn report_row(r: &FunctionalReport) -> Vec<String> {
    vec![
        fmt_num(r.hs_norm_sq),
        fmt_num(r.lp_norm),
        fmt_num(r.m.value),
        fmt_num(r.dist_sq),
        fmt_num(r.sobolev_quotient),
        fmt_opt(r.be_quotient),
    ]
}

fn expansion_row(p: &ExpansionPoint) -> Vec<String> {
    vec![
        fmt_num(p.lambda),
        fmt_num(p.hs_norm_sq),
        fmt_num(p.lp_norm_sq_2star),
        fmt_num(p.m_value),
        fmt_num(p.mu_of_lambda),
        fmt_num(p.dist_sq),
        fmt_num(p.be_value),
    ]
}

fn fit_summary(r: &ExpansionReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("fitted_exponent".into(), json!(r.fitted_exponent));
    m.insert("fitted_coefficient".into(), json!(r.fitted_coefficient));
    m.insert("predicted_exponent".into(), json!(r.predicted_exponent));
    m.insert(
        "predicted_coefficient".into(),
        json!(r.predicted_coefficient),
    );
    m.insert("residual_max".into(), json!(r.residual_max));
    m.insert(
        "mu_deviation_constant".into(),
        json!(r.mu_deviation_constant),
    );
    m.insert("threshold".into(), json!(r.threshold));
    m.insert(
        "points_in_fit".into(),
        json!(r.points.iter().filter(|p| p.in_fit).count()),
    );
    m.insert("warnings".into(), json!(r.warnings));
    m
}

fn constants_report(amb: &Ambient) -> Report {
    let k = SharpConstants::new(amb);
    let mut json = to_map(&k);
    json.insert("two_star".into(), json!(amb.two_star()));
    json.insert("f_second_derivative".into(), json!(k.f_second_derivative()));
    json.insert("g_prime_coefficient".into(), json!(k.g_prime_coefficient()));
    let csv_rows = json
        .iter()
        .map(|(name, v)| vec![name.clone(), fmt_num(v.as_f64().expect("numeric"))])
        .collect();
    Report {
        json,
        csv_header: headers(&["quantity", "value"]),
        csv_rows,
        sidecar: None,
    }
}

fn crossover_report(s: f64, d_min: usize, d_max: usize) -> Result<Report, RunError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(RunError::invalid(format!("s must be > 0, got {s}")));
    }
    let table = thresholds::crossover_scan(s, d_min..=d_max);
    if table.rows.is_empty() {
        return Err(RunError::invalid(format!(
            "no dimension in {d_min}..={d_max} admits s = {s}"
        )));
    }
    Ok(Report {
        csv_header: headers(&THRESHOLD_HEADER),
        csv_rows: table.rows.iter().map(threshold_row).collect(),
        json: to_map(&table),
        sidecar: None,
    })
}

fn dist_report(func: &Functional, u: &Superposition) -> Result<Report, RunError> {
    let m = func.m_value(u)?;
    let hs = func.hs_norm_sq(u)?;
    let dist_sq = func.dist_sq(u)?;
    let mut json = Map::new();
    json.insert("dist_sq".into(), json!(dist_sq));
    json.insert("hs_norm_sq".into(), json!(hs));
    json.insert("m".into(), serde_json::to_value(&m).expect("serializable"));
    let b = &m.maximizer;
    let mut row = vec![
        fmt_num(dist_sq),
        fmt_num(hs),
        fmt_num(m.value),
        fmt_num(b.coeff),
        fmt_num(b.scale),
    ];
    row.extend(b.center.iter().map(|&x| fmt_num(x)));
    let mut header = headers(&[
        "dist_sq",
        "hs_norm_sq",
        "m",
        "maximizer_coeff",
        "maximizer_lambda",
    ]);
    header.extend((0..b.center.len()).map(|i| format!("maximizer_center_{i}")));
    Ok(Report {
        json,
        csv_header: header,
        csv_rows: vec![row],
        sidecar: None,
    })
}

fn expand_report(cfg: &RunConfig, amb: &Ambient) -> Result<Report, RunError> {
    let grid = match &cfg.lambda_grid {
        Some(g) => g.clone(),
        None => expansion::default_lambda_grid(amb, &cfg.tolerances)?,
    };
    let points = expansion::sweep_points(amb, &grid, &cfg.tolerances, cfg.jobs > 1)?;
    let rows: Vec<Vec<String>> = points.iter().map(expansion_row).collect();
    match expansion::fit_points(amb, points.clone(), &cfg.tolerances) {
        Ok(r) => {
            let fit = fit_summary(&r);
            let mut json = Map::new();
            json.insert(
                "points".into(),
                serde_json::to_value(&r.points).expect("serializable"),
            );
            json.insert("fit".into(), Value::Object(fit.clone()));
            Ok(Report {
                json,
                csv_header: headers(&EXPAND_HEADER),
                csv_rows: rows,
                sidecar: Some(fit),
            })
        }
        Err(e) => {
            let mut json = Map::new();
            json.insert(
                "points".into(),
                serde_json::to_value(&points).expect("serializable"),
            );
            json.insert("fit".into(), Value::Null);
            let mut fit = Map::new();
            fit.insert("error".into(), json!(e.to_string()));
            let partial = Report {
                json,
                csv_header: headers(&EXPAND_HEADER),
                csv_rows: rows,
                sidecar: Some(fit),
            };
            let mut err = RunError::from(e);
            err.partial = Some(Box::new(partial));
            Err(err)
        }
    }
}

fn sweep_grid_report(cfg: &RunConfig, amb: &Ambient) -> Result<Report, RunError> {
    let path = cfg.input_path.as_ref().expect("checked");
    let grid: SweepGridConfig = serde_json::from_str(&read_text(path)?)
        .map_err(|e| RunError::invalid(format!("sweep-grid config: {e}")))?;
    for (name, values) in [
        ("c2", &grid.c2),
        ("lambda", &grid.lambda),
        ("separation", &grid.separation),
    ] {
        if values.is_empty() {
            return Err(RunError::invalid(format!(
                "sweep-grid config: `{name}` is empty"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RunError::invalid(format!(
                "sweep-grid config: `{name}` has a non-finite entry"
            )));
        }
    }
    if let Some(l) = grid.lambda.iter().find(|&&l| l <= 0.0) {
        return Err(RunError::invalid(format!(
            "sweep-grid config: `lambda` entries must be > 0, got {l}"
        )));
    }
    if let Some(r) = grid.separation.iter().find(|&&r| r < 0.0) {
        return Err(RunError::invalid(format!(
            "sweep-grid config: `separation` entries must be >= 0, got {r}"
        )));
    }
    let mut params = Vec::new();
    for &c2 in &grid.c2 {
        for &l in &grid.lambda {
            for &r in &grid.separation {
                params.push((c2, l, r));
            }
        }
    }
    let func = Functional::new(amb, cfg.tolerances)?;
    let floor = SLACK * c_spec(amb).min(c_two_peak(amb));
    let eval = |&(c2, l, r): &(f64, f64, f64)| -> Result<FunctionalReport, Error> {
        let mut center = vec![0.0; amb.d()];
        center[0] = r;
        let u = Superposition::new(
            *amb,
            vec![
                BubbleParam::at_origin(1.0, amb.d(), 1.0),
                BubbleParam::new(c2, center, l),
            ],
        )?;
        func.report(&u)
    };
    let results: Vec<Result<FunctionalReport, Error>> = if cfg.jobs > 1 {
        params.par_iter().map(eval).collect()
    } else {
        params.iter().map(eval).collect()
    };

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut flagged = 0usize;
    let mut failed = 0usize;
    for (&(c2, l, r), res) in params.iter().zip(&results) {
        let mut row = vec![fmt_num(c2), fmt_num(l), fmt_num(r)];
        let mut entry = Map::new();
        entry.insert("c2".into(), json!(c2));
        entry.insert("lambda".into(), json!(l));
        entry.insert("separation".into(), json!(r));
        match res {
            Ok(rep) => {
                let below = rep.be_quotient.is_some_and(|e| e < floor);
                flagged += below as usize;
                row.extend(report_row(rep));
                row.push(below.to_string());
                row.push(String::new());
                entry.insert("hs_norm_sq".into(), json!(rep.hs_norm_sq));
                entry.insert("lp_norm".into(), json!(rep.lp_norm));
                entry.insert("m".into(), json!(rep.m.value));
                entry.insert("dist_sq".into(), json!(rep.dist_sq));
                entry.insert("sobolev_quotient".into(), json!(rep.sobolev_quotient));
                entry.insert("be_quotient".into(), json!(rep.be_quotient));
                entry.insert("below_slack".into(), json!(below));
                entry.insert("error".into(), Value::Null);
            }
            Err(e) => {
                failed += 1;
                row.extend(std::iter::repeat_n("null".to_string(), REPORT_HEADER.len()));
                row.push("false".into());
                row.push(e.to_string().replace([',', '\n'], ";"));
                entry.insert("error".into(), json!(e.to_string()));
            }
        }
        rows.push(row);
        entries.push(Value::Object(entry));
    }
    let mut json = Map::new();
    json.insert("slack_floor".into(), json!(floor));
    json.insert("flagged".into(), json!(flagged));
    json.insert("failed".into(), json!(failed));
    json.insert("points".into(), Value::Array(entries));
    Ok(Report {
        json,
        csv_header: headers(&SWEEP_HEADER),
        csv_rows: rows,
        sidecar: None,
    })
}

/// Computes the report of one run.
pub fn execute(cfg: &RunConfig) -> Result<(Report, Option<Ambient>), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| RunError::invalid(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    pool.install(|| match cfg.command {
        Command::Constants => {
            let amb = cfg.ambient.expect("checked");
            Ok((constants_report(&amb), Some(amb)))
        }
        Command::Thresholds => {
            let amb = cfg.ambient.expect("checked");
            let r = thresholds::compare(&amb);
            let report = Report {
                json: to_map(&r),
                csv_header: headers(&THRESHOLD_HEADER),
                csv_rows: vec![threshold_row(&r)],
                sidecar: None,
            };
            Ok((report, Some(amb)))
        }
        Command::Crossover { d_min, d_max } => Ok((
            crossover_report(cfg.order.expect("checked"), d_min, d_max)?,
            None,
        )),
        Command::Eval => {
            let u = load_superposition(cfg)?;
            let func =
                Functional::new(u.ambient(), cfg.tolerances)?.with_parallel_starts(cfg.jobs > 1);
            let r = func
                .report(&u)
                .map_err(|e| RunError::from(e).on(u.ambient()))?;
            let report = Report {
                json: to_map(&r),
                csv_header: headers(&REPORT_HEADER),
                csv_rows: vec![report_row(&r)],
                sidecar: None,
            };
            Ok((report, Some(*u.ambient())))
        }
        Command::Dist => {
            let u = load_superposition(cfg)?;
            let func =
                Functional::new(u.ambient(), cfg.tolerances)?.with_parallel_starts(cfg.jobs > 1);
            let report = dist_report(&func, &u).map_err(|e| e.on(u.ambient()))?;
            Ok((report, Some(*u.ambient())))
        }
        Command::Expand => {
            let amb = cfg.ambient.expect("checked");
            expand_report(cfg, &amb)
                .map(|r| (r, Some(amb)))
                .map_err(|e| e.on(&amb))
        }
        Command::SweepGrid => {
            let amb = cfg.ambient.expect("checked");
            let report = sweep_grid_report(cfg, &amb).map_err(|e| e.on(&amb))?;
            Ok((report, Some(amb)))
        }
    })
}

/// Renders a report in the requested format.
pub fn render(
    cfg: &RunConfig,
    report: &Report,
    ambient: Option<&Ambient>,
    certified: bool,
    error: Option<&str>,
) -> String {
    let provenance = cfg.provenance(ambient);
    match cfg.format {
        Format::Json => {
            let mut body = Map::new();
            body.insert("provenance".into(), Value::Object(provenance));
            body.insert("certified".into(), json!(certified));
            if let Some(e) = error {
                body.insert("error".into(), json!(e));
            }
            for (k, v) in &report.json {
                body.insert(k.clone(), v.clone());
            }
            let mut text =
                serde_json::to_string_pretty(&Value::Object(body)).expect("serializable");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut text = String::new();
            for (k, v) in &provenance {
                let shown = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(text, "# {k}: {shown}").expect("string write");
            }
            writeln!(text, "# certified: {certified}").expect("string write");
            if let Some(e) = error {
                writeln!(text, "# error: {}", e.replace('\n', " ")).expect("string write");
            }
            if !report.csv_header.is_empty() {
                text.push_str(&report.csv_header.join(","));
                text.push('\n');
            }
            for row in &report.csv_rows {
                text.push_str(&row.join(","));
                text.push('\n');
            }
            text
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".fit.json");
    out.with_file_name(name)
}

fn emit(
    cfg: &RunConfig,
    report: &Report,
    ambient: Option<&Ambient>,
    certified: bool,
    error: Option<&str>,
) -> Result<(), RunError> {
    let text = render(cfg, report, ambient, certified, error);
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| RunError::invalid(format!("cannot write {}: {e}", path.display())))?;
            if let (Format::Csv, Some(fit)) = (cfg.format, &report.sidecar) {
                let mut body = Map::new();
                body.insert("provenance".into(), Value::Object(cfg.provenance(ambient)));
                body.insert("certified".into(), json!(certified));
                body.extend(fit.clone());
                let mut s =
                    serde_json::to_string_pretty(&Value::Object(body)).expect("serializable");
                s.push('\n');
                let side = sidecar_path(path);
                std::fs::write(&side, s).map_err(|e| {
                    RunError::invalid(format!("cannot write {}: {e}", side.display()))
                })?;
            }
        }
        None => {
            print!("{text}");
            if let (Format::Csv, Some(fit)) = (cfg.format, &report.sidecar) {
                eprintln!("{}", serde_json::to_string(fit).expect("serializable"));
            }
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    match execute(&cfg) {
        Ok((report, amb)) => match emit(&cfg, &report, amb.as_ref(), true, None) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {}", e.message);
                e.code
            }
        },
        Err(e) => {
            eprintln!("error: {}", e.message);
            if e.code == EXIT_NUMERICAL {
                let report = e.partial.clone().map(|b| *b).unwrap_or(Report {
                    json: Map::new(),
                    csv_header: Vec::new(),
                    csv_rows: Vec::new(),
                    sidecar: None,
                });
                let amb = e.ambient.or(cfg.ambient);
                if let Err(w) = emit(&cfg, &report, amb.as_ref(), false, Some(&e.message)) {
                    eprintln!("error: {}", w.message);
                }
            }
            e.code
        }
    }
}
