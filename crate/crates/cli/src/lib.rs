//! Experiment runner for Logistic-NARX classification.
//!
//! Each subcommand is a plain function that writes its files and a short
//! human-readable report to the supplied writer, so the binary and the
//! tests drive exactly the same code.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use narx_core::baselines::{knn_cv, KnnConfig, Metric};
use narx_core::dataset::{
    apply_normalization, fit_normalization, load_csv, make_folds, split_indices, Dataset, FoldAssignment, LabelColumn,
    NormalizationParams,
};
use narx_core::glm::{accuracy, FitOptions};
use narx_core::multiclass::{fit_ova, InterceptPolicy, OvaConfig, OvaModel};
use narx_core::ofr::{select_terms, Scorer, SelectionConfig, SelectionTrace};
use narx_core::regressors::{CandidateDictionary, DictionaryConfig, Mode, Term};
use narx_core::waveform::generate_waveform;
use narx_core::NarxError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: NarxError,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read model {path}: {message}")]
    Model { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for computation failures, 2 for I/O, data and argument problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } => match source {
                NarxError::SingularSystem { .. }
                | NarxError::ClassFit { .. }
                | NarxError::AllCandidatesRejected
                | NarxError::FoldMissingClass { .. }
                | NarxError::ZeroNorm
                | NarxError::NonFinite(_)
                | NarxError::CountOverflow { .. } => 1,
                _ => 2,
            },
            CliError::Write { .. } | CliError::Model { .. } | CliError::Usage(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn ctx<T>(context: impl Into<String>, r: narx_core::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Core {
        context: context.into(),
        source,
    })
}

#[derive(Debug, Parser)]
#[command(name = "lnarx", version, about = "Logistic-NARX term selection and classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select terms, fit the final model and write model.json, trace.json, curve.csv.
    Fit(FitArgs),
    /// Score a saved model on a labelled CSV file.
    Evaluate(EvaluateArgs),
    /// Cross-validate the selected model against a KNN baseline.
    Compare(CompareArgs),
    /// Write a synthetic waveform dataset as CSV.
    GenerateWaveform(WaveformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum NormalizeScope {
    /// Moments over every row, before the split.
    #[default]
    All,
    /// Moments over the training rows only.
    Train,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentConfig {
    /// CSV file with a header row.
    #[arg(long)]
    pub dataset: PathBuf,
    /// `last`, a zero-based column index or a header name.
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value_t = 2)]
    pub input_lag: usize,
    #[arg(long, default_value_t = 2)]
    pub output_lag: usize,
    #[arg(long, default_value = "static")]
    pub mode: Mode,
    #[arg(long)]
    pub include_output_lags: bool,
    #[arg(long, default_value_t = 10)]
    pub max_terms: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = narx_core::glm::DEFAULT_RIDGE)]
    pub ridge: f64,
    /// `implicit` adds an intercept unless the constant term is selected.
    #[arg(long, default_value = "implicit")]
    pub intercept: InterceptPolicy,
    #[arg(long, value_enum, default_value_t = NormalizeScope::All)]
    pub normalize_scope: NormalizeScope,
    #[arg(long, default_value = "cv-accuracy")]
    pub scorer: Scorer,
    /// Number of selected terms used by the final model; all by default.
    #[arg(long)]
    pub model_terms: Option<usize>,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for everything but the dataset path.
    pub fn for_dataset(path: impl Into<PathBuf>) -> Self {
        match Cli::parse_from(["lnarx", "fit", "--dataset", "x"]).command {
            Command::Fit(FitArgs { mut config }) => {
                config.dataset = path.into();
                config
            }
            _ => unreachable!("fit was requested"),
        }
    }

    pub fn dictionary(&self) -> DictionaryConfig {
        DictionaryConfig {
            degree: self.degree,
            input_lag: self.input_lag,
            output_lag: self.output_lag,
            mode: self.mode,
            include_output_lags: self.include_output_lags,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            ridge: self.ridge,
            ..FitOptions::default()
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("--train-fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.folds < 2 {
            return bad(format!("--folds must be at least 2, got {}", self.folds));
        }
        if self.max_terms < 1 {
            return bad("--max-terms must be at least 1".into());
        }
        if !self.ridge.is_finite() || self.ridge < 0.0 {
            return bad(format!("--ridge must be a finite non-negative number, got {}", self.ridge));
        }
        if let Some(m) = self.model_terms {
            if m < 1 || m > self.max_terms {
                return bad(format!("--model-terms must lie in 1..={}, got {m}", self.max_terms));
            }
        }
        ctx("invalid dictionary settings", self.dictionary().validate())
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
    /// Metrics file; printed to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Narx,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnnMetric {
    Euclidean,
    Minkowski,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ExperimentConfig,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Narx, Method::Knn])]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    pub knn_k: usize,
    #[arg(long, value_enum, default_value_t = KnnMetric::Euclidean)]
    pub knn_metric: KnnMetric,
    /// Minkowski exponent.
    #[arg(long, default_value_t = 3.0)]
    pub knn_p: f64,
}

impl CompareArgs {
    pub fn knn_config(&self) -> KnnConfig {
        KnnConfig {
            k_neighbors: self.knn_k,
            metric: match self.knn_metric {
                KnnMetric::Euclidean => Metric::Euclidean,
                KnnMetric::Minkowski => Metric::Minkowski { p: self.knn_p },
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WaveformArgs {
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Everything derived from the config before term selection.
pub struct Prepared {
    pub data: Dataset,
    pub normalization: NormalizationParams,
    /// Raw training rows.
    pub train: Dataset,
    /// Raw validation rows.
    pub validation: Dataset,
    pub dictionary: CandidateDictionary,
    /// Training labels aligned with the dictionary rows.
    pub labels: Vec<usize>,
    pub folds: FoldAssignment,
    /// Training rows aligned with the dictionary rows, normalized.
    pub train_normalized: Dataset,
}

pub fn prepare(config: &ExperimentConfig) -> CliResult<Prepared> {
    config.validate()?;
    let data = ctx(
        format!("cannot load {}", config.dataset.display()),
        load_csv(&config.dataset, &config.label_column),
    )?;
    let split = ctx(
        "cannot split dataset",
        split_indices(&data.labels, data.n_classes(), config.train_fraction, config.seed),
    )?;
    let train = data.subset(&split.train);
    let validation = data.subset(&split.validation);
    let normalization = match config.normalize_scope {
        NormalizeScope::All => fit_normalization(&data),
        NormalizeScope::Train => fit_normalization(&train),
    };
    let train_n = ctx("cannot normalize", apply_normalization(&train, &normalization))?;
    let dict_cfg = config.dictionary();
    let dictionary = ctx(
        "cannot build candidate dictionary",
        CandidateDictionary::build(&train_n.features, Some(&train_n.labels), &dict_cfg),
    )?;
    let skip = dict_cfg.dropped_rows();
    let rows: Vec<usize> = (skip..train_n.n_samples()).collect();
    let train_normalized = train_n.subset(&rows);
    let labels = train_normalized.labels.clone();
    let folds = ctx("cannot assign folds", make_folds(&labels, config.folds, config.seed, true))?;
    Ok(Prepared {
        data,
        normalization,
        train,
        validation,
        dictionary,
        labels,
        folds,
        train_normalized,
    })
}

pub fn selection_config(config: &ExperimentConfig) -> SelectionConfig {
    SelectionConfig {
        max_terms: config.max_terms,
        fit: config.fit_options(),
        intercept: config.intercept,
        scoring_intercept: true,
        scorer: config.scorer,
    }
}

pub struct FitOutcome {
    pub trace: SelectionTrace,
    pub model: OvaModel,
    pub validation_accuracy: Option<f64>,
    pub basis_max_off_diagonal: f64,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn output_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn model_term_count(config: &ExperimentConfig, trace: &SelectionTrace) -> CliResult<usize> {
    let available = trace.steps.len();
    match config.model_terms {
        None => Ok(available),
        Some(m) if m <= available => Ok(m),
        Some(m) => Err(CliError::Usage(format!(
            "--model-terms {m} exceeds the {available} terms selection produced"
        ))),
    }
}

fn selection_table(trace: &SelectionTrace) -> String {
    let width = trace.steps.iter().map(|s| s.term.to_string().len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:>4}  {:<width$}  {:>8}  {:>8}  {:>8}\n", "step", "term", "score", "cv_mean", "cv_max");
    for (i, s) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>8.4}  {:>8.4}  {:>8.4}",
            i + 1,
            s.term.to_string(),
            s.score,
            s.cv_mean_accuracy,
            s.cv_max_accuracy
        );
    }
    out
}

pub fn cmd_fit(config: &ExperimentConfig, out: &mut dyn Write) -> CliResult<FitOutcome> {
    let prep = prepare(config)?;
    let (trace, basis) = ctx(
        "term selection failed",
        select_terms(
            &prep.dictionary,
            &prep.labels,
            prep.data.n_classes(),
            &prep.folds,
            &selection_config(config),
        ),
    )?;
    let m = model_term_count(config, &trace)?;
    let terms: Vec<Term> = trace.terms()[..m].to_vec();
    let ova = OvaConfig {
        dictionary: config.dictionary(),
        fit: config.fit_options(),
        intercept: config.intercept,
    };
    let model = ctx(
        "final model fit failed",
        fit_ova(&prep.train, &prep.normalization, &terms, &ova),
    )?;
    let validation_accuracy = validation_accuracy(&model, &prep.validation)?;

    output_dir(&config.output_dir)?;
    write_file(&config.output_dir.join("model.json"), &to_json(&model))?;
    write_file(&config.output_dir.join("trace.json"), &to_json(&trace))?;
    write_file(&config.output_dir.join("curve.csv"), &trace.to_curve_csv())?;

    let mut report = format!(
        "{} rows, {} features, {} classes; {} candidate terms\n",
        prep.data.n_samples(),
        prep.data.n_features(),
        prep.data.n_classes(),
        prep.dictionary.len()
    );
    report.push_str(&selection_table(&trace));
    let _ = writeln!(report, "final model: {m} terms");
    if let Some(acc) = validation_accuracy {
        let _ = writeln!(report, "validation accuracy: {acc:.4} ({} rows)", prep.validation.n_samples());
    }
    let _ = writeln!(report, "wrote model.json, trace.json, curve.csv to {}", config.output_dir.display());
    let _ = out.write_all(report.as_bytes());

    Ok(FitOutcome {
        trace,
        model,
        validation_accuracy,
        basis_max_off_diagonal: basis.max_off_diagonal(),
    })
}

fn validation_accuracy(model: &OvaModel, validation: &Dataset) -> CliResult<Option<f64>> {
    let skip = model.dictionary_config.dropped_rows();
    if validation.n_samples() <= skip {
        return Ok(None);
    }
    let pred = ctx("validation prediction failed", predict(model, validation))?;
    ctx("validation scoring failed", accuracy(&pred, &validation.labels[skip..])).map(Some)
}

fn predict(model: &OvaModel, data: &Dataset) -> narx_core::Result<Vec<usize>> {
    if model.terms.iter().any(Term::uses_output) {
        model.predict_with_labels(&data.features, &data.labels)
    } else {
        model.predict(&data.features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n_samples: usize,
    pub accuracy: f64,
    pub class_names: Vec<String>,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Rows are true classes, columns predicted classes.
    pub confusion_matrix: Vec<Vec<usize>>,
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<Metrics> {
    let text = std::fs::read_to_string(&args.model).map_err(|e| CliError::Model {
        path: args.model.clone(),
        message: e.to_string(),
    })?;
    let model: OvaModel = serde_json::from_str(&text).map_err(|e| CliError::Model {
        path: args.model.clone(),
        message: e.to_string(),
    })?;
    ctx("invalid model", model.validate())?;
    let data = ctx(
        format!("cannot load {}", args.dataset.display()),
        load_csv(&args.dataset, &args.label_column),
    )?;
    if data.n_features() != model.n_features() {
        return Err(CliError::Core {
            context: "dataset does not match model".into(),
            source: NarxError::DimensionMismatch {
                expected: model.n_features(),
                actual: data.n_features(),
            },
        });
    }
    // the dataset's own class order is first-appearance; map it onto the model's
    let to_model: Vec<usize> = data
        .class_names
        .iter()
        .map(|name| {
            model.class_names.iter().position(|m| m == name).ok_or_else(|| {
                CliError::Usage(format!("label {name:?} is not one of the model's classes"))
            })
        })
        .collect::<CliResult<_>>()?;
    let labels: Vec<usize> = data.labels.iter().map(|&y| to_model[y]).collect();
    let remapped = Dataset {
        labels,
        class_names: model.class_names.clone(),
        ..data
    };
    let skip = model.dictionary_config.dropped_rows();
    let pred = ctx("prediction failed", predict(&model, &remapped))?;
    let truth = &remapped.labels[skip..];
    let metrics = metrics(&pred, truth, &model.class_names)?;

    let json = to_json(&metrics);
    match &args.output {
        Some(path) => {
            write_file(path, &json)?;
            let _ = writeln!(out, "accuracy {:.4} on {} rows; wrote {}", metrics.accuracy, metrics.n_samples, path.display());
        }
        None => {
            let _ = out.write_all(json.as_bytes());
        }
    }
    Ok(metrics)
}

fn metrics(pred: &[usize], truth: &[usize], class_names: &[String]) -> CliResult<Metrics> {
    let c = class_names.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let per_class = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect();
    Ok(Metrics {
        n_samples: truth.len(),
        accuracy: ctx("scoring failed", accuracy(pred, truth))?,
        class_names: class_names.to_vec(),
        per_class_accuracy: per_class,
        confusion_matrix: confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub cv_mean: f64,
    pub cv_max: f64,
    pub n_features_data: usize,
    pub n_terms_model: usize,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub n_features_data: usize,
    pub n_terms_model: usize,
    /// Raw features touched by at least one selected term.
    pub n_distinct_features: usize,
    pub terms: Vec<String>,
    /// Term-count convention, truncated to two decimals.
    pub reduction_pct: f64,
    /// Distinct-feature convention, truncated to two decimals.
    pub reduction_pct_distinct: f64,
}

/// `100 · (1 − used / total)` truncated to two decimals.
pub fn reduction_pct(used: usize, total: usize) -> f64 {
    let raw = 100.0 * (1.0 - used as f64 / total as f64);
    ((raw * 100.0) + 1e-9).floor() / 100.0
}

pub fn reduction_report(terms: &[Term], n_features: usize) -> ReductionReport {
    let mut distinct: Vec<usize> = terms.iter().flat_map(|t| t.input_features().collect::<Vec<_>>()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    ReductionReport {
        n_features_data: n_features,
        n_terms_model: terms.len(),
        n_distinct_features: distinct.len(),
        terms: terms.iter().map(ToString::to_string).collect(),
        reduction_pct: reduction_pct(terms.len().min(n_features), n_features),
        reduction_pct_distinct: reduction_pct(distinct.len(), n_features),
    }
}

pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub reduction: Option<ReductionReport>,
    pub trace: Option<SelectionTrace>,
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from("method,cv_mean,cv_max,n_features_data,n_terms_model,reduction_pct\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.2}",
            r.method, r.cv_mean, r.cv_max, r.n_features_data, r.n_terms_model, r.reduction_pct
        );
    }
    s
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<CompareOutcome> {
    if args.methods.is_empty() {
        return Err(CliError::Usage("--methods must name at least one method".into()));
    }
    let knn = args.knn_config();
    ctx("invalid KNN settings", knn.validate())?;
    let config = &args.config;
    let prep = prepare(config)?;
    let d = prep.data.n_features();
    let mut rows = Vec::new();
    let mut reduction = None;
    let mut trace_out = None;

    for method in &args.methods {
        match method {
            Method::Narx => {
                let (trace, _) = ctx(
                    "term selection failed",
                    select_terms(
                        &prep.dictionary,
                        &prep.labels,
                        prep.data.n_classes(),
                        &prep.folds,
                        &selection_config(config),
                    ),
                )?;
                let m = model_term_count(config, &trace)?;
                let step = &trace.steps[m - 1];
                let report = reduction_report(&trace.terms()[..m], d);
                rows.push(CompareRow {
                    method: "narx".into(),
                    cv_mean: step.cv_mean_accuracy,
                    cv_max: step.cv_max_accuracy,
                    n_features_data: d,
                    n_terms_model: m,
                    reduction_pct: report.reduction_pct,
                });
                reduction = Some(report);
                trace_out = Some(trace);
            }
            Method::Knn => {
                if knn.k_neighbors > prep.labels.len() {
                    return Err(CliError::Usage(format!(
                        "--knn-k {} exceeds the {} training rows",
                        knn.k_neighbors,
                        prep.labels.len()
                    )));
                }
                let accs = ctx("KNN cross-validation failed", knn_cv(&prep.train_normalized, &prep.folds, &knn))?;
                rows.push(CompareRow {
                    method: "knn".into(),
                    cv_mean: accs.iter().sum::<f64>() / accs.len() as f64,
                    cv_max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    n_features_data: d,
                    n_terms_model: d,
                    reduction_pct: 0.0,
                });
            }
        }
    }

    output_dir(&config.output_dir)?;
    write_file(&config.output_dir.join("compare.csv"), &compare_csv(&rows))?;
    if let Some(r) = &reduction {
        write_file(&config.output_dir.join("reduction.json"), &to_json(r))?;
    }

    let mut report = format!("{:<6}  {:>8}  {:>8}  {:>9}\n", "method", "cv_mean", "cv_max", "reduction");
    for r in &rows {
        let _ = writeln!(
            report,
            "{:<6}  {:>8.4}  {:>8.4}  {:>8.2}%",
            r.method, r.cv_mean, r.cv_max, r.reduction_pct
        );
    }
    if let Some(r) = &reduction {
        let _ = writeln!(
            report,
            "narx model: {} terms over {} of {} features ({})",
            r.n_terms_model,
            r.n_distinct_features,
            r.n_features_data,
            r.terms.join(", ")
        );
    }
    let _ = out.write_all(report.as_bytes());
    Ok(CompareOutcome {
        rows,
        reduction,
        trace: trace_out,
    })
}

pub fn cmd_generate_waveform(args: &WaveformArgs, out: &mut dyn Write) -> CliResult<()> {
    let data = ctx("waveform generation failed", generate_waveform(args.rows, args.seed))?;
    let mut s = data.feature_names.join(",");
    s.push_str(",class\n");
    for i in 0..data.n_samples() {
        for v in data.features.row(i).iter() {
            let _ = write!(s, "{v},");
        }
        let _ = writeln!(s, "{}", data.class_names[data.labels[i]]);
    }
    write_file(&args.output, &s)?;
    let _ = writeln!(out, "wrote {} rows to {}", data.n_samples(), args.output.display());
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(&a.config, out).map(drop),
        Command::Evaluate(a) => cmd_evaluate(a, out).map(drop),
        Command::Compare(a) => cmd_compare(a, out).map(drop),
        Command::GenerateWaveform(a) => cmd_generate_waveform(a, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = ExperimentConfig::for_dataset("d.csv");
        assert_eq!((c.degree, c.input_lag, c.output_lag), (2, 2, 2));
        assert_eq!((c.max_terms, c.folds, c.seed), (10, 5, 42));
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.mode, Mode::Static);
        assert_eq!(c.dataset, PathBuf::from("d.csv"));
    }

    #[test]
    fn reduction_truncates() {
        assert_eq!(reduction_pct(5, 13), 61.53);
        assert_eq!(reduction_pct(4, 9), 55.55);
        assert_eq!(reduction_pct(10, 40), 75.0);
        assert_eq!(reduction_pct(2, 4), 50.0);
    }

    #[test]
    fn reduction_counts_distinct_features() {
        use narx_core::regressors::Factor;
        let terms = vec![
            Term::constant(),
            Term::new(vec![Factor::input(3, 1), Factor::input(7, 1)]),
            Term::new(vec![Factor::input(3, 1)]),
        ];
        let r = reduction_report(&terms, 13);
        assert_eq!(r.n_terms_model, 3);
        assert_eq!(r.n_distinct_features, 2);
        assert_eq!(r.reduction_pct, 76.92);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::for_dataset("d.csv");
        c.train_fraction = 1.0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let mut c = ExperimentConfig::for_dataset("d.csv");
        c.model_terms = Some(11);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::for_dataset("d.csv");
        c.include_output_lags = true;
        assert!(c.validate().is_err());
    }

    #[test]
    fn compare_header() {
        let rows = [CompareRow {
            method: "knn".into(),
            cv_mean: 0.5,
            cv_max: 0.75,
            n_features_data: 4,
            n_terms_model: 4,
            reduction_pct: 0.0,
        }];
        assert_eq!(
            compare_csv(&rows),
            "method,cv_mean,cv_max,n_features_data,n_terms_model,reduction_pct\nknn,0.5,0.75,4,4,0.00\n"
        );
    }
}
