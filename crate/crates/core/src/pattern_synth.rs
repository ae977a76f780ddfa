//! Synthetic Wyckoff phase datasets.
//!
//! Two generators produce labeled fixed-width samples: the trading-range
//! (TR) generator emits 4-value swing tuples, the secondary-test (ST)
//! generator emits 10-value sequences built from Gaussian retest anchors
//! with uniform filler noise between them. Datasets serialize to a small
//! CSV format with a provenance comment line.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::wyckoff_rules::tr_valid;

/// Which accumulation phase a dataset encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Tr,
    St,
}

impl Phase {
    /// Fixed feature width: 4 swing values for TR, 10 filled values for ST.
    pub fn n_features(self) -> usize {
        match self {
            Phase::Tr => 4,
            Phase::St => 10,
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s.to_ascii_uppercase().as_str() {
            "TR" => Some(Phase::Tr),
            "ST" => Some(Phase::St),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Tr => write!(f, "TR"),
            Phase::St => write!(f, "ST"),
        }
    }
}

/// One labeled pattern. `anchors` keeps the underlying swing values
/// (p1..p4 or [p1,p2,p3,u]) for tests; it is not serialized.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSample {
    pub label: u8,
    pub values: Vec<f64>,
    pub anchors: Option<Vec<f64>>,
}

/// An ordered, fixed-width sample collection with its generation seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub phase: Phase,
    pub seed: u64,
    pub samples: Vec<PatternSample>,
}

impl Dataset {
    pub fn n_features(&self) -> usize {
        self.phase.n_features()
    }
}

/// Generation parameters for one dataset.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub phase: Phase,
    pub n_valid: usize,
    pub n_invalid: usize,
    pub seed: u64,
    /// Std-dev of the ST retest draws around p2.
    pub gauss_sigma: f64,
    /// Uniform noise values inserted in each anchor gap.
    pub fillers_per_gap: usize,
    /// Upward noise values appended after each up-filler start value.
    pub up_fillers: usize,
}

impl GenSpec {
    pub fn new(phase: Phase, n_valid: usize, n_invalid: usize, seed: u64) -> Self {
        GenSpec {
            phase,
            n_valid,
            n_invalid,
            seed,
            gauss_sigma: 5.0,
            fillers_per_gap: 2,
            up_fillers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected comment line '# phase=<TR|ST> seed=<u64>'")]
    MalformedMeta { line: usize },
    #[error("line {line}: malformed header, expected '{expected}'")]
    MalformedHeader { line: usize, expected: String },
    #[error("line {line}: expected {expected} value columns, found {found}")]
    WrongColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric cell '{cell}'")]
    NonNumeric { line: usize, cell: String },
    #[error("line {line}: label '{value}' outside {{0,1}}")]
    BadLabel { line: usize, value: String },
    #[error("filler needs at least 2 anchor values, got {0}")]
    TooFewAnchors(usize),
}

/// Uniform draw between `a` and `b` regardless of order; `a == b` returns `a`.
fn uniform<R: Rng>(rng: &mut R, a: f64, b: f64) -> f64 {
    a + (b - a) * rng.gen::<f64>()
}

/// One TR sample.
///
/// The valid branch constructs the chain p2 < p4 < p3 < p1 directly. The
/// invalid branch draws four iid U(0,100) values and relabels them valid
/// when they happen to satisfy the TR predicate, so label and predicate
/// always agree.
pub fn gen_tr_sample<R: Rng>(rng: &mut R, valid: bool) -> PatternSample {
    if valid {
        // Ties are zero-probability; resample the tuple until the chain is strict.
        loop {
            let p1 = uniform(rng, 0.0, 100.0);
            let p2 = uniform(rng, 0.0, p1);
            let p3 = uniform(rng, p2, p1);
            let p4 = uniform(rng, p2, p3);
            if p2 < p4 && p4 < p3 && p3 < p1 {
                let values = vec![p1, p2, p3, p4];
                return PatternSample {
                    label: 1,
                    anchors: Some(values.clone()),
                    values,
                };
            }
        }
    } else {
        let values: Vec<f64> = (0..4).map(|_| uniform(rng, 0.0, 100.0)).collect();
        let label = if tr_valid(&values) { 1 } else { 0 };
        PatternSample {
            label,
            anchors: Some(values.clone()),
            values,
        }
    }
}

/// One valid ST sample: Gaussian retests of p2 clamped to [0, p1], the
/// second retest replaced by an upward filler, then uniform noise between
/// every pair of anchors. Defaults yield exactly 10 values:
/// [p1, f, f, p2, f, f, p3, f, f, u].
pub fn gen_st_sample<R: Rng>(
    rng: &mut R,
    sigma: f64,
    fillers_per_gap: usize,
    up_fillers: usize,
) -> PatternSample {
    let p1 = uniform(rng, 0.0, 100.0);
    let p2 = uniform(rng, 0.0, p1);
    let normal = Normal::new(p2, sigma).expect("sigma > 0");
    let p3 = normal.sample(rng).clamp(0.0, p1);
    let p4 = normal.sample(rng).clamp(0.0, p1);

    let tail = up_filler(rng, &[p3, p4], p1, up_fillers).expect("two anchors");
    let mut anchors_for_fill = vec![p1, p2];
    anchors_for_fill.extend_from_slice(&tail);
    let values = filler(rng, &anchors_for_fill, fillers_per_gap).expect("four anchors");

    PatternSample {
        label: 1,
        values,
        anchors: Some(vec![p1, p2, p3, p4]),
    }
}

/// One negative ST sample: ten iid U(0,100) values, never relabeled.
pub fn gen_st_negative<R: Rng>(rng: &mut R) -> PatternSample {
    let values: Vec<f64> = (0..Phase::St.n_features())
        .map(|_| uniform(rng, 0.0, 100.0))
        .collect();
    PatternSample {
        label: 0,
        anchors: Some(values.clone()),
        values,
    }
}

/// Inserts `fillers_per_gap` uniform draws between every pair of
/// consecutive anchors. Every anchor is preserved in order; output length
/// is `(len - 1) * (1 + fillers_per_gap) + 1`.
pub fn filler<R: Rng>(
    rng: &mut R,
    anchor_values: &[f64],
    fillers_per_gap: usize,
) -> Result<Vec<f64>, DatasetError> {
    if anchor_values.len() < 2 {
        return Err(DatasetError::TooFewAnchors(anchor_values.len()));
    }
    let mut out = Vec::with_capacity((anchor_values.len() - 1) * (1 + fillers_per_gap) + 1);
    for pair in anchor_values.windows(2) {
        out.push(pair[0]);
        for _ in 0..fillers_per_gap {
            out.push(uniform(rng, pair[0], pair[1]));
        }
    }
    out.push(*anchor_values.last().unwrap());
    Ok(out)
}

/// For each input value except the last, emits the value followed by
/// `fillers` draws between it and `upper_limit`. The final input element is
/// never emitted; output length is `(len - 1) * (1 + fillers)`.
pub fn up_filler<R: Rng>(
    rng: &mut R,
    values: &[f64],
    upper_limit: f64,
    fillers: usize,
) -> Result<Vec<f64>, DatasetError> {
    if values.len() < 2 {
        return Err(DatasetError::TooFewAnchors(values.len()));
    }
    let mut out = Vec::with_capacity((values.len() - 1) * (1 + fillers));
    for &start in &values[..values.len() - 1] {
        out.push(start);
        for _ in 0..fillers {
            out.push(uniform(rng, start, upper_limit));
        }
    }
    Ok(out)
}

/// Generates the full dataset from one seeded stream: all valid-branch
/// samples first, then all invalid-branch samples. TR invalid-branch
/// samples may carry label 1 through relabeling.
pub fn gen_dataset(spec: &GenSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(spec.n_valid + spec.n_invalid);
    match spec.phase {
        Phase::Tr => {
            for _ in 0..spec.n_valid {
                samples.push(gen_tr_sample(&mut rng, true));
            }
            for _ in 0..spec.n_invalid {
                samples.push(gen_tr_sample(&mut rng, false));
            }
        }
        Phase::St => {
            for _ in 0..spec.n_valid {
                samples.push(gen_st_sample(
                    &mut rng,
                    spec.gauss_sigma,
                    spec.fillers_per_gap,
                    spec.up_fillers,
                ));
            }
            for _ in 0..spec.n_invalid {
                samples.push(gen_st_negative(&mut rng));
            }
        }
    }
    Dataset {
        phase: spec.phase,
        seed: spec.seed,
        samples,
    }
}

/// Formats a value as decimal text at 17 significant digits, enough for
/// exact f64 round trips.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a dataset as CSV: a `# phase=<P> seed=<u64>` comment line, a
/// `label,x1,...,xN` header, then one sample per row. Anchors are dropped.
pub fn write_dataset(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str(&format!("# phase={} seed={}\n", d.phase, d.seed));
    out.push_str("label");
    for i in 1..=d.n_features() {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for s in &d.samples {
        out.push_str(&s.label.to_string());
        for v in &s.values {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Reads a dataset written by [`write_dataset`], validating the comment
/// line, header, column counts, labels, and numerals. Line numbers are
/// 1-based and reported in every error.
pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, meta) = lines.next().ok_or(DatasetError::MalformedMeta { line: 1 })?;
    let (phase, seed) = parse_meta(meta).ok_or(DatasetError::MalformedMeta { line: 1 })?;
    let n = phase.n_features();

    let expected_header = {
        let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        format!("label,{}", cols.join(","))
    };
    let (_, header) = lines.next().ok_or_else(|| DatasetError::MalformedHeader {
        line: 2,
        expected: expected_header.clone(),
    })?;
    if header != expected_header {
        return Err(DatasetError::MalformedHeader {
            line: 2,
            expected: expected_header,
        });
    }

    let mut samples = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let mut cells = row.split(',');
        let label_cell = cells.next().unwrap_or("");
        let label = match label_cell {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(DatasetError::BadLabel {
                    line,
                    value: other.to_string(),
                })
            }
        };
        let mut values = Vec::with_capacity(n);
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
                line,
                cell: cell.to_string(),
            })?;
            values.push(v);
        }
        if values.len() != n {
            return Err(DatasetError::WrongColumnCount {
                line,
                expected: n,
                found: values.len(),
            });
        }
        samples.push(PatternSample {
            label,
            values,
            anchors: None,
        });
    }

    Ok(Dataset {
        phase,
        seed,
        samples,
    })
}

fn parse_meta(line: &str) -> Option<(Phase, u64)> {
    let rest = line.strip_prefix("# phase=")?;
    let (phase_str, seed_part) = rest.split_once(" seed=")?;
    let phase = Phase::parse(phase_str.trim())?;
    let seed: u64 = seed_part.trim().parse().ok()?;
    Some((phase, seed))
}
