//! Subcommand implementations behind the `wyckoff` binary: dataset
//! generation, training, evaluation, and OHLC scanning.
//!
//! Exit codes are a stable contract: 0 success, 1 usage error, 2 data
//! error, 3 numeric failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::neural_core::{forward, load_model, save_model, LstmModel, ModelError};
use crate::pattern_synth::{gen_dataset, read_dataset, write_dataset, GenSpec, Phase};
use crate::train_eval::{
    evaluate_with_threshold, train, write_history, write_roc, TrainConfig, TrainError,
};
use crate::wyckoff_rules::{extract_swings, windows_of_lows_highs};

pub const OHLC_HEADER: &str = "timestamp,open,high,low,close";

#[derive(Parser)]
#[command(name = "wyckoff", version, about = "Wyckoff phase dataset generation, LSTM training, and OHLC scanning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset CSV
    Gen {
        /// Phase to generate: tr or st
        #[arg(long)]
        phase: String,
        /// Valid-branch sample count
        #[arg(long)]
        valid: usize,
        /// Invalid-branch sample count
        #[arg(long)]
        invalid: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an LSTM classifier on a dataset CSV
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-3)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        /// Feed one value per time step instead of the whole pattern at once
        #[arg(long)]
        sequential: bool,
        /// Forbid any nondeterministic execution (runs are already
        /// single-threaded; this pins the contract)
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        history_out: PathBuf,
    },
    /// Evaluate a checkpoint against a dataset CSV and write the ROC curve
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        roc_out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Scan an OHLC CSV for trading-range candidates with a trained model
    Scan {
        #[arg(long)]
        ohlc: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Swing lookback window
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// One scored scan window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub timestamp: String,
    pub end_index: usize,
    pub probability: f64,
    pub window_values: Vec<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            TrainError::ZeroEpochs | TrainError::BadConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen {
            phase,
            valid,
            invalid,
            seed,
            out,
        } => cmd_gen(&phase, valid, invalid, seed, &out),
        Command::Train {
            data,
            epochs,
            lr,
            batch,
            seed,
            hidden,
            sequential,
            deterministic: _,
            model_out,
            history_out,
        } => {
            let cfg = TrainConfig {
                epochs,
                batch_size: batch,
                learning_rate: lr,
                shuffle_seed: seed,
                hidden,
                sequential,
                ..TrainConfig::default()
            };
            cmd_train(&data, &cfg, seed, &model_out, &history_out)
        }
        Command::Eval {
            model,
            data,
            roc_out,
            threshold,
        } => cmd_eval(&model, &data, &roc_out, threshold),
        Command::Scan { ohlc, model, k, out } => cmd_scan(&ohlc, &model, k, &out),
    }
}

fn parse_phase(s: &str) -> Result<Phase, CliError> {
    Phase::parse(s).ok_or_else(|| CliError::Usage(format!("unknown phase '{s}', expected tr or st")))
}

pub fn cmd_gen(
    phase: &str,
    valid: usize,
    invalid: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let phase = parse_phase(phase)?;
    let d = gen_dataset(&GenSpec::new(phase, valid, invalid, seed));
    write_dataset(&d, out).map_err(|e| CliError::Data(e.to_string()))
}

pub fn cmd_train(
    data: &Path,
    cfg: &TrainConfig,
    init_seed: u64,
    model_out: &Path,
    history_out: &Path,
) -> Result<(), CliError> {
    let d = read_dataset(data).map_err(|e| CliError::Data(e.to_string()))?;
    let (model, history) = train(&d, cfg, init_seed)?;
    save_model(&model, d.phase, model_out).map_err(|e| CliError::Data(e.to_string()))?;
    write_history(&history, history_out)?;
    let last = history.last().expect("epochs >= 1");
    println!("test_loss={} test_acc={}", last.test_loss, last.test_acc);
    Ok(())
}

pub fn cmd_eval(
    model_path: &Path,
    data: &Path,
    roc_out: &Path,
    threshold: f64,
) -> Result<(), CliError> {
    let (_, model) = load_model(model_path).map_err(|e| CliError::Data(e.to_string()))?;
    let d = read_dataset(data).map_err(|e| CliError::Data(e.to_string()))?;
    let report = evaluate_with_threshold(&model, &d, 100.0, threshold)?;
    write_roc(&report, roc_out)?;
    let c = report.confusion;
    println!(
        "loss={} acc={} auc={} tp={} fp={} tn={} fn={}",
        report.loss, report.accuracy, report.auc, c.tp, c.fp, c.tn, c.fn_
    );
    Ok(())
}

/// Parses an OHLC CSV, returning (timestamps, closes). Row errors carry
/// 1-based line numbers.
pub fn read_ohlc(path: &Path) -> Result<(Vec<String>, Vec<f64>), CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?;
    if header != OHLC_HEADER {
        let have: Vec<&str> = header.split(',').collect();
        let missing: Vec<&str> = OHLC_HEADER
            .split(',')
            .filter(|c| !have.contains(c))
            .collect();
        return Err(CliError::Data(format!(
            "line 1: malformed OHLC header, missing columns: {}",
            if missing.is_empty() {
                "none (wrong order or extras)".to_string()
            } else {
                missing.join(",")
            }
        )));
    }

    let mut timestamps = Vec::new();
    let mut closes = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 5 {
            return Err(CliError::Data(format!(
                "line {line}: expected 5 columns, found {}",
                cells.len()
            )));
        }
        for cell in &cells[1..] {
            if cell.parse::<f64>().is_err() {
                return Err(CliError::Data(format!(
                    "line {line}: non-numeric cell '{cell}'"
                )));
            }
        }
        timestamps.push(cells[0].to_string());
        closes.push(cells[4].parse().unwrap());
    }
    Ok((timestamps, closes))
}

/// Swing-window scan of a close series: extract swings, slide a window the
/// width of the model's input, min-max rescale each window to [0,100],
/// divide by 100, and score. Constant (zero-range) windows are skipped;
/// the skip count is returned alongside the rows.
pub fn scan_series(
    model: &LstmModel,
    timestamps: &[String],
    closes: &[f64],
    k: usize,
) -> Result<(Vec<ScanRow>, usize), CliError> {
    let width = model.n_features;
    let swings = match extract_swings(closes, k) {
        Ok(s) => s,
        // a series too short for the window simply has no swings to scan
        Err(crate::wyckoff_rules::SwingError::TooShort { .. }) => {
            return Ok((Vec::new(), 0));
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for (values, end_index) in windows_of_lows_highs(&swings, width) {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            skipped += 1;
            continue;
        }
        let features: Vec<f64> = values
            .iter()
            .map(|v| (v - lo) / (hi - lo) * 100.0 / 100.0)
            .collect();
        let (p, _) = forward(model, &[features]).map_err(|e: ModelError| match e {
            ModelError::FeatureMismatch { .. } => CliError::Data(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        })?;
        rows.push(ScanRow {
            timestamp: timestamps
                .get(end_index)
                .cloned()
                .unwrap_or_default(),
            end_index,
            probability: p,
            window_values: values,
        });
    }
    Ok((rows, skipped))
}

pub fn cmd_scan(ohlc: &Path, model_path: &Path, k: usize, out: &Path) -> Result<(), CliError> {
    let (_, model) = load_model(model_path).map_err(|e| CliError::Data(e.to_string()))?;
    let (timestamps, closes) = read_ohlc(ohlc)?;
    let (rows, skipped) = scan_series(&model, &timestamps, &closes, k)?;

    let mut f =
        fs::File::create(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let width = model.n_features;
    let cols: Vec<String> = (1..=width).map(|i| format!("p{i}")).collect();
    writeln!(f, "timestamp,end_index,probability,{}", cols.join(","))
        .map_err(|e| CliError::Data(e.to_string()))?;
    for r in &rows {
        let vals: Vec<String> = r.window_values.iter().map(|v| v.to_string()).collect();
        writeln!(
            f,
            "{},{},{},{}",
            r.timestamp,
            r.end_index,
            r.probability,
            vals.join(",")
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} constant windows");
    }
    Ok(())
}

/// Parses argv and runs the selected subcommand, returning the process
/// exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
