//! Command implementations behind the `muboost` binary.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! data errors (unreadable or malformed inputs, schema mismatches).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use muboost_core::ensemble::{probabilities_csv, read_row_scores};
use muboost_core::eval::{DEFAULT_SWEEP_MAX, DEFAULT_SWEEP_MIN, DEFAULT_SWEEP_STEP};
use muboost_core::gbdt::TrainLog;
use muboost_core::{
    compute_stats, f1_at_threshold, fuse_scores, load_dataset, load_model, predict_ensemble,
    save_model, split_train_dev, sweep_threshold, train_ensemble, Error, RunConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownConfigKey(_) | Error::Config { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "muboost",
    version,
    about = "Abusive-comment classification with boosted-tree ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a dataset: language shares, class balance, count columns.
    Stats(StatsArgs),
    /// Train a seed-varied ensemble and write the model file and training log.
    Train(TrainArgs),
    /// Write ensemble probabilities for a dataset.
    Predict(PredictArgs),
    /// Average probability files row by row.
    Fuse(FuseArgs),
    /// Sweep decision thresholds and report the best F1.
    Sweep(SweepArgs),
    /// Precision, recall and F1 of a probability file at one threshold.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Also write the report as `metric,value` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `key = value` config file; defaults to the desk preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Train/dev split seed.
    #[arg(long)]
    pub seed: Option<i64>,
    /// Comma-separated member seeds, e.g. `1,2,3`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Training log CSV; defaults to `<model-out>.log.csv`.
    #[arg(long)]
    pub log_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Adds a `label_at_threshold` column.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Also write each member's probabilities to `<prefix><seed>.csv`.
    #[arg(long)]
    pub members_out: Option<String>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Comma-separated `row_index,probability` files.
    #[arg(long, value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub probs: PathBuf,
    /// A labeled dataset or a `row_index,label` file.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SWEEP_MIN)]
    pub min: f64,
    #[arg(long, default_value_t = DEFAULT_SWEEP_MAX)]
    pub max: f64,
    #[arg(long, default_value_t = DEFAULT_SWEEP_STEP)]
    pub step: f64,
    /// Sweep CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub probs: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the text it prints on success.
pub fn execute(command: &Command) -> CliResult<String> {
    match command {
        Command::Stats(a) => cmd_stats(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| {
        CliError::Data(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))
}

pub fn cmd_stats(a: &StatsArgs) -> CliResult<String> {
    let data = load_dataset(&a.data, false)?;
    let report = compute_stats(&data)?;
    if let Some(out) = &a.out {
        write_file(out, &report.to_csv())?;
    }
    Ok(report.to_text())
}

/// The run configuration after applying command-line overrides.
pub fn train_config(a: &TrainArgs) -> CliResult<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::desk(),
    };
    if let Some(f) = a.dev_fraction {
        cfg.set("dev_fraction", &f.to_string())?;
    }
    if let Some(s) = a.seed {
        cfg.split_seed = s;
    }
    if let Some(seeds) = &a.seeds {
        cfg.set("seeds", seeds)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn log_csv(seeds: &[i64], logs: &[TrainLog]) -> String {
    let mut s = format!("member_seed,{}\n", TrainLog::CSV_HEADER);
    for (seed, log) in seeds.iter().zip(logs) {
        s.push_str(&log.csv_rows(&format!("{seed},")));
    }
    s
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<String> {
    let cfg = train_config(a)?;
    let data = load_dataset(&a.data, true)?;
    let (train, dev) = split_train_dev(&data, cfg.dev_fraction, cfg.split_seed)?;
    let spec = cfg.ensemble_spec();
    let pool = thread_pool(cfg.resolve_threads())?;
    let (model, logs, dev_probs) = pool.install(|| -> CliResult<_> {
        let (model, logs) = train_ensemble(&train, &dev, &spec)?;
        let dev_probs = predict_ensemble(&model, &dev)?;
        Ok((model, logs, dev_probs))
    })?;
    save_model(&model, &a.model_out)?;
    let log_path = a.log_out.clone().unwrap_or_else(|| {
        let mut p = a.model_out.clone().into_os_string();
        p.push(".log.csv");
        PathBuf::from(p)
    });
    write_file(&log_path, &log_csv(&cfg.seeds, &logs))?;

    let dev_labels = dev.labels().unwrap_or_default();
    let (dev_f1, _) = f1_at_threshold(&dev_labels, &dev_probs, 0.5)?;
    let mut out = format!(
        "trained {} members on {} rows (dev {} rows)\n",
        model.members.len(),
        train.row_count(),
        dev.row_count()
    );
    for (m, log) in model.members.iter().zip(&logs) {
        let _ = writeln!(
            out,
            "member seed={} trees={} best_iteration={} stop={}",
            m.seed,
            m.gbdt.trees.len(),
            m.gbdt.best_iteration,
            log.stop.as_str()
        );
    }
    let _ = writeln!(out, "ensemble dev_f1@0.5={dev_f1}");
    let _ = writeln!(out, "model written to {}", a.model_out.display());
    let _ = writeln!(out, "log written to {}", log_path.display());
    Ok(out)
}

fn default_threads() -> usize {
    RunConfig::desk().resolve_threads()
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<String> {
    if let Some(t) = a.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::Usage(format!("threshold {t} outside [0, 1]")));
        }
    }
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data, false)?;
    let pool = thread_pool(default_threads())?;
    let members = pool.install(|| model.member_probabilities(&data))?;
    let refs: Vec<&[f64]> = members.iter().map(Vec::as_slice).collect();
    let probs = fuse_scores(&refs, None)?;
    write_file(&a.out, &probabilities_csv(&probs, a.threshold))?;
    if let Some(prefix) = &a.members_out {
        for (m, p) in model.members.iter().zip(&members) {
            write_file(
                Path::new(&format!("{prefix}{}.csv", m.seed)),
                &probabilities_csv(p, None),
            )?;
        }
    }
    Ok(format!(
        "wrote {} probabilities to {}\n",
        probs.len(),
        a.out.display()
    ))
}

pub fn cmd_fuse(a: &FuseArgs) -> CliResult<String> {
    if let Some(w) = &a.weights {
        if w.len() != a.inputs.len() {
            return Err(CliError::Usage(format!(
                "{} weights for {} inputs",
                w.len(),
                a.inputs.len()
            )));
        }
    }
    let mut sources = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let n = sources.first().map(Vec::len);
        sources.push(read_row_scores(path, n)?);
    }
    let refs: Vec<&[f64]> = sources.iter().map(Vec::as_slice).collect();
    let fused = fuse_scores(&refs, a.weights.as_deref()).map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::Data(other),
    })?;
    write_file(&a.out, &probabilities_csv(&fused, None))?;
    Ok(format!(
        "fused {} sources over {} rows into {}\n",
        sources.len(),
        fused.len(),
        a.out.display()
    ))
}

/// Labels from a labeled dataset CSV or a `row_index,label` file.
pub fn read_labels(path: &Path) -> CliResult<Vec<u8>> {
    let io = |source| {
        CliError::Data(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let file = fs::File::open(path).map_err(io)?;
    let mut rdr = csv::Reader::from_reader(file);
    let csv_err = |row, e: csv::Error| {
        CliError::Data(Error::Csv {
            row,
            message: e.to_string(),
        })
    };
    let header = rdr.headers().map_err(|e| csv_err(0, e))?.clone();
    let is_row_file = header.iter().any(|h| h == "row_index");
    if !is_row_file {
        drop(rdr);
        let data = load_dataset(path, true)?;
        return Ok(data.labels().unwrap_or_default());
    }
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(Error::MissingColumn {
                column: name.to_string(),
            })
        })
    };
    let (ri, li) = (col("row_index")?, col("label")?);
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(i, e))?;
        let idx: usize = rec[ri].trim().parse().map_err(|_| {
            CliError::Data(Error::Field {
                row: i,
                column: "row_index".into(),
                message: format!("`{}` is not a row index", &rec[ri]),
            })
        })?;
        let label = match rec[li].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CliError::Data(Error::LabelDomain {
                    row: i,
                    value: other.to_string(),
                }))
            }
        };
        pairs.push((idx, label));
    }
    let out_len = pairs.len();
    let mut out: Vec<Option<u8>> = vec![None; out_len];
    for (idx, label) in pairs {
        let slot = out.get_mut(idx).ok_or_else(|| {
            CliError::Data(Error::InvalidArgument(format!(
                "row_index {idx} outside 0..{n}",
                n = out_len
            )))
        })?;
        if slot.replace(label).is_some() {
            return Err(CliError::Data(Error::DuplicateRow {
                row: idx.to_string(),
            }));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or(CliError::Data(Error::MissingRow { row: i.to_string() })))
        .collect()
}

fn probs_and_labels(probs: &Path, labels: &Path) -> CliResult<(Vec<f64>, Vec<u8>)> {
    let labels = read_labels(labels)?;
    let probs = read_row_scores(probs, Some(labels.len()))?;
    Ok((probs, labels))
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<String> {
    let (probs, labels) = probs_and_labels(&a.probs, &a.labels)?;
    let result = sweep_threshold(&labels, &probs, a.min, a.max, a.step).map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::Data(other),
    })?;
    let csv = result.to_csv();
    let summary = format!(
        "best_threshold={} best_f1={}\n",
        result.best_threshold, result.best_f1
    );
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(summary)
        }
        None => Ok(format!("{csv}{summary}")),
    }
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<String> {
    let (probs, labels) = probs_and_labels(&a.probs, &a.labels)?;
    let (f1, c) = f1_at_threshold(&labels, &probs, a.threshold)?;
    Ok(format!(
        "threshold = {}\ntp = {}\nfp = {}\ntn = {}\nfn = {}\nprecision = {}\nrecall = {}\nf1 = {f1}\n",
        a.threshold,
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        c.precision(),
        c.recall()
    ))
}
