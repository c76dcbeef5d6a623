//! Command-line front end for `fairaudit`.
//!
//! Every subcommand builds a [`Report`] whose JSON form has bit-stable key
//! order; with `--no-timestamp`, identical inputs and seeds give identical
//! bytes. Exit codes: 0 success, 1 usage error, 2 data error, 3 audit
//! completed but the four-fifths rule failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use fairaudit::audit::{flip_test, model_disparity};
use fairaudit::explain::{local_surrogate, permutation_importance};
use fairaudit::inference::{bootstrap_ci, di_ci_delta, eo_ci_delta, GroupStatistic};
use fairaudit::metrics::{
    base_rates, confusion_gaps, contingency, disparity_metrics, eighty_percent_verdict, group_confusion,
    impossibility_residual, Verdict,
};
use fairaudit::model::{cross_validate, misclassification, test_error, train_logistic, LogisticModel, Target, TrainConfig};
use fairaudit::repair::{apply_repair, fit_repair, repair_distortion, RepairPlan};
use fairaudit::synth::{generate, GeneratorSpec};
use fairaudit::{split, validate, Dataset, Schema};

pub mod report;

pub use report::{fmt6, Meta, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_UNFAIR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] fairaudit::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fairaudit", version, about = "Audit binary decisions for group disparities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a dataset against its schema.
    Validate(ValidateArgs),
    /// Disparity metrics, intervals, four-fifths verdict and confusion gaps.
    Audit(AuditArgs),
    /// Fit the logistic baseline; report holdout and cross-validated error.
    Train(TrainArgs),
    /// Swap the sensitive attribute and count changed decisions.
    Fliptest(FlipArgs),
    /// Move group-conditional feature distributions toward a common target.
    Repair(RepairArgs),
    /// Permutation importance and a local surrogate for one row.
    Explain(ExplainArgs),
    /// Generate biased synthetic data with a known disparate impact.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON object mapping column names to roles.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
    Both,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Directory for the report and artifacts; the report goes to stdout
    /// when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Leave the timestamp out of the report.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// Confidence level for the intervals.
    #[arg(long, default_value_t = 0.95, value_parser = open_unit)]
    pub level: f64,
    /// Four-fifths rule threshold on DI.
    #[arg(long, default_value_t = 0.8, value_parser = rule_threshold)]
    pub threshold: f64,
    /// Bootstrap replicates; bootstrap intervals are skipped when absent.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Serialized model to flip-test on the same data.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Decision cutoff on model scores for the flip test.
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Decision,
    Outcome,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Decision => Target::Decision,
            TargetArg::Outcome => Target::Outcome,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo cross-validation replicates.
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.3, value_parser = open_unit)]
    pub test_fraction: f64,
    /// Use the sensitive attribute as a feature.
    #[arg(long)]
    pub include_sensitive: bool,
    /// Training label; defaults to the config, else decision if present.
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    /// JSON config with optional `train` and `generator` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the model (default: model.json in --out).
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlipArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// Serialized model to flip-test.
    #[arg(long)]
    pub model: PathBuf,
    /// Decision cutoff on model scores.
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// Comma-separated features to repair (default: all numeric features).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Repair amount: 0 leaves features unchanged, 1 is full repair.
    #[arg(long, default_value_t = 1.0, value_parser = closed_unit)]
    pub lambda: f64,
    /// Apply a previously fitted plan instead of fitting one.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Decision cutoff for the before/after baseline comparison.
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub threshold: f64,
    /// JSON config; the `train` section sets the baseline model.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// Serialized model to explain.
    #[arg(long)]
    pub model: PathBuf,
    /// Row index for the local surrogate.
    #[arg(long)]
    pub row: Option<usize>,
    /// Permutation repeats.
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Decision cutoff on model scores.
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub threshold: f64,
    /// Perturbations drawn for the local surrogate.
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    /// Kernel width in standardized units (default 0.75 * sqrt(#numeric)).
    #[arg(long)]
    pub kernel_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub output: Output,
    /// JSON config; the `generator` section sets the generator.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of rows.
    #[arg(long)]
    pub n: Option<usize>,
    /// Solve the group bias so the true DI equals this value.
    #[arg(long)]
    pub target_di: Option<f64>,
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let x = parse_real(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not in (0, 1)"))
    }
}

fn closed_unit(s: &str) -> std::result::Result<f64, String> {
    let x = parse_real(s)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not in [0, 1]"))
    }
}

fn rule_threshold(s: &str) -> std::result::Result<f64, String> {
    let x = parse_real(s)?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not in (0, 1]"))
    }
}

/// Shared JSON configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub generator: Option<GeneratorSpec>,
    pub train: Option<TrainConfig>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Data(fairaudit::Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
        Ok(serde_json::from_str(&text).map_err(fairaudit::Error::from)?)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            } else {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Audit(a) => cmd_audit(a, stdout),
        Command::Train(a) => cmd_train(a, stdout),
        Command::Fliptest(a) => cmd_fliptest(a, stdout),
        Command::Repair(a) => cmd_repair(a, stdout),
        Command::Explain(a) => cmd_explain(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
    }
}

fn load(input: &Input) -> CliResult<Dataset> {
    let schema = Schema::from_path(&input.schema)?;
    Ok(Dataset::load_csv(&input.data, &schema)?)
}

fn load_model(path: &Path) -> CliResult<LogisticModel> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Data(fairaudit::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(LogisticModel::from_json(&text)?)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn meta(command: &str, seed: Option<u64>, output: &Output, parameters: Value) -> Meta {
    Meta {
        tool: "fairaudit",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        seed,
        timestamp: (!output.no_timestamp)
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        parameters,
    }
}

fn dataset_section(d: &Dataset) -> Value {
    let mut v = to_value(&validate(d));
    let protected = d.protected_modality().to_string();
    let other = d.non_protected_modality().unwrap_or_else(|| "(absent)".into());
    let positive = |c: Option<&fairaudit::Column>| c.and_then(|c| c.role().modality().map(String::from));
    let mut note = format!(
        "Ratios are protected over non-protected: {}='{}' over {}='{}'.",
        d.sensitive().name(),
        protected,
        d.sensitive().name(),
        other
    );
    if let (Some(c), Some(p)) = (d.decision(), positive(d.decision())) {
        note.push_str(&format!(" Positive decision: {}='{}'.", c.name(), p));
    }
    if let (Some(c), Some(p)) = (d.outcome(), positive(d.outcome())) {
        note.push_str(&format!(" Positive outcome: {}='{}'.", c.name(), p));
    }
    let obj = v.as_object_mut().unwrap();
    obj.insert("sensitive_column".into(), json!(d.sensitive().name()));
    obj.insert("protected".into(), json!(protected));
    obj.insert("non_protected".into(), json!(other));
    if let Some(p) = positive(d.decision()) {
        obj.insert("positive_decision".into(), json!(p));
    }
    if let Some(p) = positive(d.outcome()) {
        obj.insert("positive_outcome".into(), json!(p));
    }
    obj.insert("orientation".into(), json!(note));
    v
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        source: e,
    })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn emit(report: &Report, output: &Output, stdout: &mut dyn Write) -> CliResult<()> {
    let json = report.to_json();
    let md = report.to_markdown();
    match &output.out {
        Some(dir) => {
            ensure_dir(dir)?;
            if output.format != Format::Md {
                write_file(&dir.join("report.json"), json.as_bytes())?;
            }
            if output.format != Format::Json {
                write_file(&dir.join("report.md"), md.as_bytes())?;
            }
        }
        None => {
            let text = match output.format {
                Format::Json => json,
                Format::Md => md,
                Format::Both => format!("{json}\n{md}"),
            };
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Output {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let mut r = Report::new(meta("validate", None, &a.output, json!({})));
    r.dataset = Some(dataset_section(&d));
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_audit(a: &AuditArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let t = contingency(&d)?;
    let rates = base_rates(&t)?;
    let mut m = disparity_metrics(&rates)?;
    let delta = di_ci_delta(&t, a.level)?;
    m.di = m.di.with_interval(delta.interval());
    let mut intervals = vec![to_value(&delta)];
    if let Some(b) = a.replicates {
        let boot = bootstrap_ci(&GroupStatistic::DisparateImpact, &d, b, a.seed, a.level)?;
        intervals.push(to_value(&boot));
    }

    let point = eighty_percent_verdict(&m.di, a.threshold, false)?;
    let interval = eighty_percent_verdict(&m.di, a.threshold, true)?;

    let mut r = Report::new(meta(
        "audit",
        a.replicates.map(|_| a.seed),
        &a.output,
        json!({
            "level": a.level,
            "threshold": a.threshold,
            "replicates": a.replicates,
            "cutoff": a.cutoff,
        }),
    ));
    r.dataset = Some(dataset_section(&d));
    r.metrics = Some(json!({
        "contingency": {
            "a": t.a, "b": t.b, "c": t.c, "d": t.d,
            "n1": t.n1(), "n2": t.n2(), "m1": t.m1(), "m2": t.m2(), "n": t.n(),
        },
        "rates": rates,
        "disparity": [m.dr, m.di, m.cr, m.or],
    }));
    r.verdict = Some(json!({
        "rule": "fail if DI < threshold",
        "threshold": a.threshold,
        "disparate_impact": m.di.estimate,
        "point": point,
        "interval": interval,
        "level": a.level,
    }));

    if d.outcome().is_some() {
        let gc = group_confusion(&d)?;
        let gaps = confusion_gaps(&gc);
        match eo_ci_delta(&gc, a.level) {
            Ok(eo) => intervals.push(to_value(&eo)),
            Err(e) => warn!("equal-opportunity interval skipped: {e}"),
        }
        let residual = |g| impossibility_residual(g).ok();
        r.confusion = Some(json!({
            "protected": gc.protected,
            "non_protected": gc.non_protected,
            "rates": [
                group_rates_row("protected", &gc.protected),
                group_rates_row("non_protected", &gc.non_protected),
            ],
            "gaps": [
                gaps.tpr_ratio, gaps.ppv_ratio, gaps.fpr_difference, gaps.fnr_difference,
                gaps.accuracy_difference, gaps.tpr_difference, gaps.ppv_difference,
            ],
            "impossibility_residual": {
                "protected": residual(&gc.protected),
                "non_protected": residual(&gc.non_protected),
            },
        }));
    }
    r.intervals = Some(Value::Array(intervals));

    if let Some(path) = &a.model {
        let model = load_model(path)?;
        let flips = flip_test(&model, &d, a.cutoff)?;
        r.fliptest = Some(to_value(&flips));
    }
    emit(&r, &a.output, stdout)?;
    Ok(if point == Verdict::Fail {
        EXIT_UNFAIR
    } else {
        EXIT_OK
    })
}

fn group_rates_row(group: &str, c: &fairaudit::metrics::Confusion) -> Value {
    json!({
        "group": group,
        "base_rate": c.base_rate(),
        "tpr": c.tpr(),
        "fpr": c.fpr(),
        "fnr": c.fnr(),
        "ppv": c.ppv(),
        "accuracy": c.accuracy(),
    })
}

fn train_config(config: &Config, target: Option<TargetArg>, d: &Dataset, seed: Option<u64>) -> TrainConfig {
    let mut cfg = config.train.clone().unwrap_or_default();
    if let Some(t) = target {
        cfg.target = t.into();
    } else if config.train.is_none() && d.decision().is_none() && d.outcome().is_some() {
        cfg.target = Target::Outcome;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg
}

fn cmd_train(a: &TrainArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let config = Config::load(a.config.as_deref())?;
    let cfg = train_config(&config, a.target, &d, Some(a.seed));
    let (train, test) = split(&d, a.test_fraction, a.seed)?;
    let model = train_logistic(&train, a.include_sensitive, &cfg)?;
    let holdout = test_error(&model, &test, 0.5)?;
    let cv = cross_validate(&d, a.replicates, a.test_fraction, a.seed, a.include_sensitive, &cfg)?;

    let model_path = a.model.clone().or_else(|| a.output.out.as_ref().map(|o| o.join("model.json")));
    if let Some(path) = &model_path {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        write_file(path, model.to_json()?.as_bytes())?;
    } else {
        warn!("no --model or --out given; the trained model is not saved");
    }

    let mut r = Report::new(meta(
        "train",
        Some(a.seed),
        &a.output,
        json!({
            "replicates": a.replicates,
            "test_fraction": a.test_fraction,
            "include_sensitive": a.include_sensitive,
            "config": cfg,
        }),
    ));
    r.dataset = Some(dataset_section(&d));
    let weights: Vec<Value> = model
        .encoding
        .coordinate_names()
        .into_iter()
        .zip(&model.weights)
        .map(|(name, w)| json!({"coordinate": name, "weight": w}))
        .collect();
    r.metrics = Some(json!({
        "training_rows": train.n_rows(),
        "test_rows": test.n_rows(),
        "training_error": misclassification(&model, &train, 0.5)?,
        "holdout_error": holdout,
        "cv_error": cv,
        "model": {
            "intercept": model.intercept,
            "weights": weights,
            "converged": model.converged,
            "iterations": model.iterations_run,
        },
    }));
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_fliptest(a: &FlipArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let model = load_model(&a.model)?;
    let flips = flip_test(&model, &d, a.threshold)?;
    let mut r = Report::new(meta("fliptest", None, &a.output, json!({"threshold": a.threshold})));
    r.dataset = Some(dataset_section(&d));
    r.fliptest = Some(to_value(&flips));
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}

fn baseline_summary(d: &Dataset, cfg: &TrainConfig, threshold: f64) -> CliResult<Value> {
    let model = train_logistic(d, false, cfg)?;
    let (_, di) = model_disparity(&model, d, threshold)?;
    Ok(json!({
        "disparate_impact": di.di.estimate,
        "training_error": misclassification(&model, d, threshold)?,
    }))
}

fn cmd_repair(a: &RepairArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let plan = match &a.plan {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Data(fairaudit::Error::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            RepairPlan::from_json(&text)?
        }
        None => {
            let features: Vec<String> = match &a.features {
                Some(f) => f.clone(),
                None => d.numeric_feature_names().into_iter().map(String::from).collect(),
            };
            if features.is_empty() {
                return Err(CliError::Usage("no numeric features to repair".into()));
            }
            let names: Vec<&str> = features.iter().map(String::as_str).collect();
            fit_repair(&d, &names)?
        }
    };
    let repaired = apply_repair(&plan, &d, a.lambda)?;
    let names = plan.feature_names();
    let distortion = repair_distortion(&d, &repaired.dataset, &names)?;

    let config = Config::load(a.config.as_deref())?;
    let cfg = train_config(&config, None, &d, None);
    let has_target = match cfg.target {
        Target::Decision => d.decision().is_some(),
        Target::Outcome => d.outcome().is_some(),
    };
    let baseline = if has_target {
        Some(json!({
            "target": cfg.target,
            "before": baseline_summary(&d, &cfg, a.threshold)?,
            "after": baseline_summary(&repaired.dataset, &cfg, a.threshold)?,
        }))
    } else {
        None
    };

    if let Some(dir) = &a.output.out {
        ensure_dir(dir)?;
        write_file(&dir.join("repaired.csv"), repaired.dataset.to_csv_string()?.as_bytes())?;
        write_file(&dir.join("plan.json"), plan.to_json()?.as_bytes())?;
    } else {
        warn!("no --out given; the repaired data is not written");
    }

    let mut r = Report::new(meta(
        "repair",
        None,
        &a.output,
        json!({"lambda": a.lambda, "threshold": a.threshold, "features": names}),
    ));
    r.dataset = Some(dataset_section(&d));
    let groups: Vec<Value> = plan
        .features
        .iter()
        .map(|f| json!({"feature": f.feature, "n_protected": f.n_protected(), "n_non_protected": f.n_non_protected()}))
        .collect();
    let clamped: Vec<Value> = repaired
        .clamped
        .iter()
        .map(|(f, c)| json!({"feature": f, "clamped": c}))
        .collect();
    let mut section = json!({
        "lambda": a.lambda,
        "features": groups,
        "clamped": clamped,
        "distortion": distortion.features.iter().map(|(f, v)| json!({"feature": f, "mean_displacement": v})).collect::<Vec<_>>(),
        "overall_distortion": distortion.overall,
    });
    if let Some(b) = baseline {
        section.as_object_mut().unwrap().insert("baseline".into(), b);
    }
    r.repair = Some(section);
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_explain(a: &ExplainArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let d = load(&a.input)?;
    let model = load_model(&a.model)?;
    let pi = permutation_importance(&model, &d, a.threshold, a.replicates, a.seed)?;
    let mut section = json!({"permutation_importance": pi});
    if let Some(row) = a.row {
        let s = local_surrogate(&model, &d, row, a.samples, a.kernel_width, a.seed)?;
        section.as_object_mut().unwrap().insert("local_surrogate".into(), to_value(&s));
    }
    let mut r = Report::new(meta(
        "explain",
        Some(a.seed),
        &a.output,
        json!({
            "threshold": a.threshold,
            "replicates": a.replicates,
            "row": a.row,
            "samples": a.samples,
            "kernel_width": a.kernel_width,
        }),
    ));
    r.dataset = Some(dataset_section(&d));
    r.explain = Some(section);
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let config = Config::load(a.config.as_deref())?;
    let mut spec = config.generator.unwrap_or_default();
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(t) = a.target_di {
        spec = spec.with_target_di(t)?;
    }
    let s = generate(&spec)?;
    let csv = s.dataset.to_csv_string()?;
    let Some(dir) = &a.output.out else {
        stdout.write_all(csv.as_bytes()).map_err(|e| CliError::Output {
            path: "<stdout>".into(),
            source: e,
        })?;
        return Ok(EXIT_OK);
    };
    ensure_dir(dir)?;
    write_file(&dir.join("data.csv"), csv.as_bytes())?;
    let schema = serde_json::to_string_pretty(&fairaudit::synth::schema()).map_err(fairaudit::Error::from)?;
    write_file(&dir.join("schema.json"), schema.as_bytes())?;

    let t = contingency(&s.dataset)?;
    let empirical = disparity_metrics(&base_rates(&t)?)?;
    let mut r = Report::new(meta("synth", Some(spec.seed), &a.output, to_value(&spec)));
    r.dataset = Some(dataset_section(&s.dataset));
    r.metrics = Some(json!({
        "true_disparate_impact": s.true_di,
        "true_rate_protected": s.true_rate_protected,
        "true_rate_non_protected": s.true_rate_non_protected,
        "sensitive_bias": spec.sensitive_bias,
        "empirical": [empirical.dr, empirical.di, empirical.cr, empirical.or],
    }));
    emit(&r, &a.output, stdout)?;
    Ok(EXIT_OK)
}
