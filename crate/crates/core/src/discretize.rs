//! Trend rules converting the continuous feature matrix into a ±1 sign
//! matrix.
//!
//! Per column: MA and WMA compare the close against the average (price at
//! or above the average is an up trend); Mom takes its own sign; K%, D%,
//! LW, MACD and A/D compare against their previous value; RSI uses the
//! 30/70 overbought-oversold bands and falls back to the previous-value
//! comparison in between. The previous-value rules consume the first row.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{FeatureMatrix, INDICATOR_NAMES, NUM_INDICATORS};

#[derive(Debug, Error)]
pub enum DiscretizeError {
    #[error("features have {features} rows but {closes} closes were supplied")]
    AlignmentMismatch { features: usize, closes: usize },
    #[error("discretization needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("failed to write sign CSV: {0}")]
    Io(#[from] std::io::Error),
}

/// ±1 trend matrix, one fewer leading row than its source features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMatrix {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<[i8; NUM_INDICATORS]>,
}

impl SignMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows as ±1.0 floats for the classifier contract.
    pub fn to_feature_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&s| f64::from(s)).collect())
            .collect()
    }
}

fn sign(b: bool) -> i8 {
    if b {
        1
    } else {
        -1
    }
}

/// Applies the per-column trend rules. `closes[i]` must be the closing
/// price on `features.dates[i]`.
pub fn discretize(
    features: &FeatureMatrix,
    closes: &[f64],
) -> Result<SignMatrix, DiscretizeError> {
    if closes.len() != features.rows.len() {
        return Err(DiscretizeError::AlignmentMismatch {
            features: features.rows.len(),
            closes: closes.len(),
        });
    }
    if features.rows.len() < 2 {
        return Err(DiscretizeError::TooFewRows(features.rows.len()));
    }

    let rows = (1..features.rows.len())
        .map(|t| {
            let cur = &features.rows[t];
            let prev = &features.rows[t - 1];
            let close = closes[t];
            let above_prev = |col: usize| sign(cur[col] > prev[col]);
            [
                sign(close >= cur[0]), // MA
                sign(close >= cur[1]), // WMA
                sign(cur[2] >= 0.0),   // Mom
                above_prev(3),         // K%
                above_prev(4),         // D%
                // RSI bands: strictly below 30 oversold (+1), strictly
                // above 70 overbought (-1), else trend comparison.
                if cur[5] < 30.0 {
                    1
                } else if cur[5] > 70.0 {
                    -1
                } else {
                    above_prev(5)
                },
                above_prev(6), // MACD
                above_prev(7), // LW
                above_prev(8), // A/D
            ]
        })
        .collect();
    Ok(SignMatrix {
        dates: features.dates[1..].to_vec(),
        rows,
    })
}

/// Writes the sign CSV in the feature-export shape with integer entries.
pub fn write_signs_csv<W: Write>(signs: &SignMatrix, mut out: W) -> Result<(), DiscretizeError> {
    writeln!(out, "date,{}", INDICATOR_NAMES.join(","))?;
    for (date, row) in signs.dates.iter().zip(&signs.rows) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{date},{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<[f64; NUM_INDICATORS]>) -> FeatureMatrix {
        let dates = (0..rows.len())
            .map(|i| NaiveDate::from_num_days_from_ce_opt(735_000 + i as i32).unwrap())
            .collect();
        FeatureMatrix { dates, rows }
    }

    const BASE: [f64; NUM_INDICATORS] =
        [100.0, 100.0, 0.0, 50.0, 50.0, 50.0, 1.0, -50.0, 0.5];

    #[test]
    fn price_above_average_is_up() {
        let features = matrix(vec![BASE, BASE]);
        let signs = discretize(&features, &[100.0, 105.0]).unwrap();
        assert_eq!(signs.rows[0][0], 1);
        assert_eq!(signs.rows[0][1], 1);

        let signs = discretize(&features, &[100.0, 95.0]).unwrap();
        assert_eq!(signs.rows[0][0], -1);
        // Tie: close exactly at the average counts as up.
        let signs = discretize(&features, &[100.0, 100.0]).unwrap();
        assert_eq!(signs.rows[0][0], 1);
    }

    #[test]
    fn momentum_sign_rule() {
        let mut up = BASE;
        up[2] = 3.0;
        let mut down = BASE;
        down[2] = -3.0;
        let mut zero = BASE;
        zero[2] = 0.0;
        let features = matrix(vec![BASE, up, down, zero]);
        let signs = discretize(&features, &[100.0; 4]).unwrap();
        assert_eq!(signs.rows[0][2], 1);
        assert_eq!(signs.rows[1][2], -1);
        assert_eq!(signs.rows[2][2], 1); // zero momentum counts as up
    }

    #[test]
    fn rsi_bands_and_middle_comparison() {
        let mut oversold = BASE;
        oversold[5] = 25.0;
        let mut overbought = BASE;
        overbought[5] = 75.0;
        let mut mid_up = BASE;
        mid_up[5] = 55.0;
        let mut mid_down = BASE;
        mid_down[5] = 54.0;
        let features = matrix(vec![BASE, oversold, overbought, mid_up, mid_down]);
        let signs = discretize(&features, &[100.0; 5]).unwrap();
        assert_eq!(signs.rows[0][5], 1); // RSI 25 -> +1
        assert_eq!(signs.rows[1][5], -1); // RSI 75 -> -1
        assert_eq!(signs.rows[2][5], -1); // 55 after 75: middle band, falling
        assert_eq!(signs.rows[3][5], -1); // 54 after 55: falling

        // Boundary values 30 and 70 use the comparison rule.
        let mut at30 = BASE;
        at30[5] = 30.0;
        let mut at70 = BASE;
        at70[5] = 70.0;
        let features = matrix(vec![at30, at70]);
        let signs = discretize(&features, &[100.0; 2]).unwrap();
        assert_eq!(signs.rows[0][5], 1); // 70 > 30, not in a band
    }

    #[test]
    fn previous_value_rule_with_tie_down() {
        let mut rising = BASE;
        rising[6] = 1.5;
        let mut falling = BASE;
        falling[6] = 1.2;
        let features = matrix(vec![rising, falling]);
        let signs = discretize(&features, &[100.0; 2]).unwrap();
        assert_eq!(signs.rows[0][6], -1); // MACD 1.2 after 1.5

        let features = matrix(vec![BASE, BASE]);
        let signs = discretize(&features, &[99.0, 99.0]).unwrap();
        for col in [3, 4, 6, 7, 8] {
            assert_eq!(signs.rows[0][col], -1, "tie must label down (col {col})");
        }
    }

    #[test]
    fn output_shape_and_alphabet() {
        let rows: Vec<[f64; NUM_INDICATORS]> = (0..40)
            .map(|i| {
                let x = (i as f64 * 0.7).sin() * 40.0 + 50.0;
                [x, x, x - 50.0, x, x, x, x, x - 100.0, x / 100.0]
            })
            .collect();
        let features = matrix(rows);
        let closes: Vec<f64> = (0..40).map(|i| 100.0 + (i as f64).cos()).collect();
        let signs = discretize(&features, &closes).unwrap();
        assert_eq!(signs.len(), features.len() - 1);
        assert_eq!(signs.dates[0], features.dates[1]);
        for row in &signs.rows {
            for &v in row {
                assert!(v == 1 || v == -1);
            }
        }
    }

    #[test]
    fn error_paths() {
        let features = matrix(vec![BASE, BASE]);
        assert!(matches!(
            discretize(&features, &[1.0]).unwrap_err(),
            DiscretizeError::AlignmentMismatch { .. }
        ));
        let features = matrix(vec![BASE]);
        assert!(matches!(
            discretize(&features, &[1.0]).unwrap_err(),
            DiscretizeError::TooFewRows(1)
        ));
    }

    #[test]
    fn column_independence() {
        let mut rows: Vec<[f64; NUM_INDICATORS]> = (0..10)
            .map(|i| {
                let x = i as f64;
                [x, x, x, x, x, 40.0 + x, x, x, x]
            })
            .collect();
        let features = matrix(rows.clone());
        let closes = vec![5.0; 10];
        let base = discretize(&features, &closes).unwrap();

        // Permute one column; only that output column may change.
        for row in rows.iter_mut() {
            row[4] = -row[4];
        }
        let permuted = discretize(&matrix(rows), &closes).unwrap();
        for (a, b) in base.rows.iter().zip(&permuted.rows) {
            for col in 0..NUM_INDICATORS {
                if col != 4 {
                    assert_eq!(a[col], b[col]);
                }
            }
        }
    }
}
