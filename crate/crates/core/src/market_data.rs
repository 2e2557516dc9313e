//! OHLC ingestion, direction labels, chronological splits, and min-max
//! normalization.
//!
//! The CSV schema is a header row with at least `date,high,low,close`
//! (case-insensitive, any order) plus optional `open` and `volume`
//! columns. Dates are ISO 8601 (`YYYY-MM-DD`) and must be strictly
//! increasing; rows are checked, never re-sorted.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::FeatureMatrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing required column '{0}' in CSV header")]
    MissingColumn(&'static str),
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("line {line}: unparseable date '{value}' (expected YYYY-MM-DD)")]
    BadDate { line: u64, value: String },
    #[error("line {line}: non-increasing dates ({prev} followed by {next})")]
    NonIncreasingDates {
        line: u64,
        prev: NaiveDate,
        next: NaiveDate,
    },
    #[error("line {line}: low {low} > high {high}")]
    LowAboveHigh { line: u64, low: f64, high: f64 },
    #[error("line {line}: non-positive {field} price {value}")]
    NonPositivePrice {
        line: u64,
        field: &'static str,
        value: f64,
    },
    #[error("line {line}: negative volume {value}")]
    NegativeVolume { line: u64, value: f64 },
    #[error("CSV contains no data rows")]
    EmptySeries,
    #[error("train fraction {0} outside the open interval (0, 1)")]
    BadFraction(f64),
    #[error("split would leave an empty partition ({rows} rows, train fraction {fraction})")]
    EmptyPartition { rows: usize, fraction: f64 },
    #[error("dataset has {got} rows, need at least {needed}")]
    TooFewRows { needed: usize, got: usize },
    #[error("feature dates do not align with the price series: {0}")]
    AlignmentMismatch(String),
    #[error("normalizer fitted on {expected} columns, matrix has {got}")]
    ColumnCountMismatch { expected: usize, got: usize },
    #[error("cannot fit a normalizer on an empty matrix")]
    EmptyMatrix,
}

/// One daily price bar. `low <= high` is enforced; `low <= close <= high`
/// is deliberately not (real feeds violate it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub open: Option<f64>,
    pub volume: Option<f64>,
}

/// Date-ordered sequence of bars. Dates strictly increasing, length >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    bars: Vec<OhlcBar>,
}

impl PriceSeries {
    /// Validates ordering and per-bar invariants. Line numbers in errors
    /// are 1-based bar indices (use [`load_csv`] for file line numbers).
    pub fn new(bars: Vec<OhlcBar>) -> Result<Self, DataError> {
        if bars.is_empty() {
            return Err(DataError::EmptySeries);
        }
        for (i, bar) in bars.iter().enumerate() {
            check_bar(bar, i as u64 + 1)?;
            if i > 0 && bars[i - 1].date >= bar.date {
                return Err(DataError::NonIncreasingDates {
                    line: i as u64 + 1,
                    prev: bars[i - 1].date,
                    next: bar.date,
                });
            }
        }
        Ok(Self { bars })
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn highs(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.high).collect()
    }

    pub fn lows(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.low).collect()
    }

    /// Index of `date` in the series, if present.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }
}

fn check_bar(bar: &OhlcBar, line: u64) -> Result<(), DataError> {
    let mut prices = vec![("high", bar.high), ("low", bar.low), ("close", bar.close)];
    if let Some(open) = bar.open {
        prices.push(("open", open));
    }
    for (field, value) in prices {
        if value <= 0.0 || !value.is_finite() {
            return Err(DataError::NonPositivePrice { line, field, value });
        }
    }
    if bar.low > bar.high {
        return Err(DataError::LowAboveHigh {
            line,
            low: bar.low,
            high: bar.high,
        });
    }
    if let Some(v) = bar.volume {
        if v < 0.0 || !v.is_finite() {
            return Err(DataError::NegativeVolume { line, value: v });
        }
    }
    Ok(())
}

/// Feature rows with their up/down labels. Labels are exactly +1 or -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub dates: Vec<NaiveDate>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of +1 labels; the prior used by the RAE denominator.
    pub fn positive_prior(&self) -> f64 {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        pos as f64 / self.labels.len() as f64
    }
}

/// Chronological train/test partition: train strictly precedes test.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Per-column min/max fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

/// Parses an OHLC CSV. Every rejected row is reported with its file line
/// number; out-of-order input is an error, not silently re-sorted.
pub fn load_csv<R: Read>(source: R) -> Result<PriceSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| DataError::MalformedRow {
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
    };
    let date_col = find("date").ok_or(DataError::MissingColumn("date"))?;
    let high_col = find("high").ok_or(DataError::MissingColumn("high"))?;
    let low_col = find("low").ok_or(DataError::MissingColumn("low"))?;
    let close_col = find("close").ok_or(DataError::MissingColumn("close"))?;
    let open_col = find("open");
    let volume_col = find("volume");

    let mut bars: Vec<OhlcBar> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(bars.len() as u64 + 2);
            DataError::MalformedRow {
                line,
                detail: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);

        let field = |col: usize| -> Result<&str, DataError> {
            record.get(col).ok_or_else(|| DataError::MalformedRow {
                line,
                detail: format!("missing field at column {}", col + 1),
            })
        };
        let number = |col: usize, name: &'static str| -> Result<f64, DataError> {
            let raw = field(col)?;
            raw.parse::<f64>().map_err(|_| DataError::MalformedRow {
                line,
                detail: format!("cannot parse {name} value '{raw}' as a number"),
            })
        };

        let raw_date = field(date_col)?;
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
            DataError::BadDate {
                line,
                value: raw_date.to_string(),
            }
        })?;
        let bar = OhlcBar {
            date,
            high: number(high_col, "high")?,
            low: number(low_col, "low")?,
            close: number(close_col, "close")?,
            open: match open_col {
                Some(col) if !field(col)?.is_empty() => Some(number(col, "open")?),
                _ => None,
            },
            volume: match volume_col {
                Some(col) if !field(col)?.is_empty() => Some(number(col, "volume")?),
                _ => None,
            },
        };
        check_bar(&bar, line)?;
        if let Some(prev) = bars.last() {
            if prev.date >= bar.date {
                return Err(DataError::NonIncreasingDates {
                    line,
                    prev: prev.date,
                    next: bar.date,
                });
            }
        }
        bars.push(bar);
    }
    if bars.is_empty() {
        return Err(DataError::EmptySeries);
    }
    Ok(PriceSeries { bars })
}

/// Labels each feature row with the sign of the next day's close move:
/// +1 if `close[t+1] > close[t]`, otherwise -1 (ties count as down).
/// The final feature row is dropped when no next close exists.
pub fn make_labels(
    series: &PriceSeries,
    features: &FeatureMatrix,
) -> Result<LabeledDataset, DataError> {
    let rows = feature_rows(features);
    let (dates, labels) = label_dates(series, &features.dates)?;
    let features = rows.into_iter().take(labels.len()).collect();
    Ok(LabeledDataset {
        dates,
        features,
        labels,
    })
}

/// Core labeling rule shared by the continuous and discrete pipelines:
/// aligns `dates` to the series and labels all but a trailing unlabelable
/// row. Returns the kept dates and their labels.
pub fn label_dates(
    series: &PriceSeries,
    dates: &[NaiveDate],
) -> Result<(Vec<NaiveDate>, Vec<i8>), DataError> {
    if dates.is_empty() {
        return Err(DataError::AlignmentMismatch(
            "no feature dates to label".into(),
        ));
    }
    let start = series.position(dates[0]).ok_or_else(|| {
        DataError::AlignmentMismatch(format!("feature date {} not in series", dates[0]))
    })?;
    let bars = series.bars();
    for (i, date) in dates.iter().enumerate() {
        match bars.get(start + i) {
            Some(bar) if bar.date == *date => {}
            _ => {
                return Err(DataError::AlignmentMismatch(format!(
                    "feature date {date} does not match the series at offset {}",
                    start + i
                )))
            }
        }
    }
    // Rows with a following bar get a label; the rest (at most the final
    // row when the features reach the series end) are dropped.
    let labelable = (bars.len() - start - 1).min(dates.len());
    if labelable == 0 {
        return Err(DataError::TooFewRows { needed: 2, got: 1 });
    }
    let labels = (0..labelable)
        .map(|i| {
            let here = bars[start + i].close;
            let next = bars[start + i + 1].close;
            if next > here {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok((dates[..labelable].to_vec(), labels))
}

fn feature_rows(features: &FeatureMatrix) -> Vec<Vec<f64>> {
    features.rows.iter().map(|r| r.to_vec()).collect()
}

/// First `floor(train_fraction * N)` rows become train, the rest test.
/// No shuffling: order is time.
pub fn chronological_split(
    data: &LabeledDataset,
    train_fraction: f64,
) -> Result<DatasetSplit, DataError> {
    if data.len() < 2 {
        return Err(DataError::TooFewRows {
            needed: 2,
            got: data.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction(train_fraction));
    }
    let n = data.len();
    let train_len = (train_fraction * n as f64).floor() as usize;
    if train_len == 0 || train_len == n {
        return Err(DataError::EmptyPartition {
            rows: n,
            fraction: train_fraction,
        });
    }
    let part = |range: std::ops::Range<usize>| LabeledDataset {
        dates: data.dates[range.clone()].to_vec(),
        features: data.features[range.clone()].to_vec(),
        labels: data.labels[range].to_vec(),
    };
    Ok(DatasetSplit {
        train: part(0..train_len),
        test: part(train_len..n),
    })
}

/// Fits per-column min/max on the training matrix.
pub fn fit_normalizer(train: &[Vec<f64>]) -> Result<NormalizationParams, DataError> {
    let first = train.first().ok_or(DataError::EmptyMatrix)?;
    let cols = first.len();
    let mut mins = vec![f64::INFINITY; cols];
    let mut maxs = vec![f64::NEG_INFINITY; cols];
    for row in train {
        if row.len() != cols {
            return Err(DataError::ColumnCountMismatch {
                expected: cols,
                got: row.len(),
            });
        }
        for (c, &v) in row.iter().enumerate() {
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    Ok(NormalizationParams { mins, maxs })
}

/// Maps each column by `(x - min) / (max - min)`. Constant training
/// columns map to 0 everywhere; values outside the training range are
/// not clipped and may leave [0, 1].
pub fn apply_normalizer(
    params: &NormalizationParams,
    matrix: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, DataError> {
    let cols = params.mins.len();
    matrix
        .iter()
        .map(|row| {
            if row.len() != cols {
                return Err(DataError::ColumnCountMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let span = params.maxs[c] - params.mins[c];
                    if span == 0.0 {
                        0.0
                    } else {
                        (v - params.mins[c]) / span
                    }
                })
                .collect())
        })
        .collect()
}
