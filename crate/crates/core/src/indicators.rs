//! The nine technical indicators and the continuous feature matrix.
//!
//! Column order is fixed: MA, WMA, Mom, K%, D%, RSI, MACD, LW, A/D.
//! Every indicator is a pure backward-looking function of the bars, so
//! appending data never changes previously emitted values. Each function
//! returns a tail-aligned vector; its documented warmup is the index of
//! the first input bar with a defined value.
//!
//! Degenerate windows resolve to neutral values (flat stochastic window
//! K% = 50, LW = -50; no price movement RSI = 50; H = L spread A/D = 0)
//! so the matrix never contains NaN or infinity.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::PriceSeries;

/// Number of feature columns.
pub const NUM_INDICATORS: usize = 9;

/// CSV column names, in matrix order.
pub const INDICATOR_NAMES: [&str; NUM_INDICATORS] =
    ["ma", "wma", "mom", "k", "d", "rsi", "macd", "lw", "ad"];

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("series has {got} bars, need at least {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid indicator config: {0}")]
    BadConfig(String),
    #[error("input slices have mismatched lengths")]
    LengthMismatch,
    #[error("failed to write feature CSV: {0}")]
    Io(#[from] std::io::Error),
}

/// Window lengths for the indicator set. `n` drives Mom, K%, D%, RSI and
/// LW; the MACD signal smoothing uses `macd_signal_n`. EMA smoothing is
/// always `alpha = 2 / (k + 1)` seeded with the first observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorConfig {
    pub ma_window: usize,
    pub wma_window: usize,
    pub n: usize,
    pub ema_short: usize,
    pub ema_long: usize,
    pub macd_signal_n: usize,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            ma_window: 14,
            wma_window: 14,
            n: 10,
            ema_short: 12,
            ema_long: 26,
            macd_signal_n: 10,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let windows = [
            self.ma_window,
            self.wma_window,
            self.n,
            self.ema_short,
            self.ema_long,
            self.macd_signal_n,
        ];
        if windows.contains(&0) {
            return Err(IndicatorError::BadConfig("all windows must be >= 1".into()));
        }
        if self.ema_short >= self.ema_long {
            return Err(IndicatorError::BadConfig(format!(
                "ema_short ({}) must be < ema_long ({})",
                self.ema_short, self.ema_long
            )));
        }
        Ok(())
    }

    /// Bars consumed before the first row where every column is defined.
    /// D% binds under the defaults: the first K% value needs `n` bars and
    /// D% averages `n` of them.
    pub fn warmup(&self) -> usize {
        [
            self.ma_window - 1,
            self.wma_window - 1,
            self.n,         // Mom and RSI both need n prior closes
            2 * (self.n - 1), // D%: K% warmup + n K values
            self.n - 1,     // K% and LW
            1,              // A/D needs one previous close
        ]
        .into_iter()
        .max()
        .unwrap()
    }
}

/// Dates with their 9-column indicator rows; starts after the warmup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<[f64; NUM_INDICATORS]>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

fn require(len: usize, needed: usize) -> Result<(), IndicatorError> {
    if len < needed {
        Err(IndicatorError::TooShort { needed, got: len })
    } else {
        Ok(())
    }
}

/// Simple moving average over the `window` closes ending at t.
/// Warmup: `window - 1`.
pub fn sma(closes: &[f64], window: usize) -> Result<Vec<f64>, IndicatorError> {
    require(closes.len(), window)?;
    Ok((window - 1..closes.len())
        .map(|t| closes[t + 1 - window..=t].iter().sum::<f64>() / window as f64)
        .collect())
}

/// Weighted moving average: weight `window - i` on the close `i` days
/// back, normalized by `1 + 2 + ... + window`. Warmup: `window - 1`.
pub fn wma(closes: &[f64], window: usize) -> Result<Vec<f64>, IndicatorError> {
    require(closes.len(), window)?;
    let denom = (window * (window + 1)) as f64 / 2.0;
    Ok((window - 1..closes.len())
        .map(|t| {
            let acc: f64 = (0..window)
                .map(|i| (window - i) as f64 * closes[t - i])
                .sum();
            acc / denom
        })
        .collect())
}

/// Lag difference `close[t] - close[t - n]`. Warmup: `n`.
pub fn momentum(closes: &[f64], n: usize) -> Result<Vec<f64>, IndicatorError> {
    require(closes.len(), n + 1)?;
    Ok((n..closes.len()).map(|t| closes[t] - closes[t - n]).collect())
}

/// Stochastic K%: position of the close within the lowest-low /
/// highest-high range of the last `n` bars, scaled to [0, 100]. A flat
/// window returns 50; feeds where the close escapes the high/low range
/// are clamped so the bound holds. Warmup: `n - 1`.
pub fn stoch_k(
    highs: &[f64],
    lows: &[f64],
    closes: &[f64],
    n: usize,
) -> Result<Vec<f64>, IndicatorError> {
    if highs.len() != lows.len() || highs.len() != closes.len() {
        return Err(IndicatorError::LengthMismatch);
    }
    require(closes.len(), n)?;
    Ok((n - 1..closes.len())
        .map(|t| {
            let window = t + 1 - n..=t;
            let hh = highs[window.clone()].iter().cloned().fold(f64::MIN, f64::max);
            let ll = lows[window].iter().cloned().fold(f64::MAX, f64::min);
            if hh == ll {
                50.0
            } else {
                (100.0 * (closes[t] - ll) / (hh - ll)).clamp(0.0, 100.0)
            }
        })
        .collect())
}

/// Stochastic D%: mean of the last `n` K% values. Warmup relative to the
/// K% series: `n - 1`.
pub fn stoch_d(k_values: &[f64], n: usize) -> Result<Vec<f64>, IndicatorError> {
    sma(k_values, n)
}

/// Relative strength index from simple `n`-day means of upward and
/// downward close changes. All-down windows give 0, all-up 100, and no
/// movement at all 50. Warmup: `n`.
pub fn rsi(closes: &[f64], n: usize) -> Result<Vec<f64>, IndicatorError> {
    require(closes.len(), n + 1)?;
    Ok((n..closes.len())
        .map(|t| {
            let mut up = 0.0;
            let mut down = 0.0;
            for i in t + 1 - n..=t {
                let change = closes[i] - closes[i - 1];
                if change > 0.0 {
                    up += change;
                } else {
                    down -= change;
                }
            }
            let (avg_up, avg_down) = (up / n as f64, down / n as f64);
            if avg_up == 0.0 && avg_down == 0.0 {
                50.0
            } else if avg_down == 0.0 {
                100.0
            } else if avg_up == 0.0 {
                0.0
            } else {
                100.0 - 100.0 / (1.0 + avg_up / avg_down)
            }
        })
        .collect())
}

/// Exponential moving average with `alpha = 2 / (k + 1)`, seeded with the
/// first observation. Defined from the first bar.
pub fn ema(values: &[f64], k: usize) -> Result<Vec<f64>, IndicatorError> {
    require(values.len(), 1)?;
    let alpha = 2.0 / (k as f64 + 1.0);
    let mut out = Vec::with_capacity(values.len());
    let mut current = values[0];
    out.push(current);
    for &v in &values[1..] {
        current += alpha * (v - current);
        out.push(current);
    }
    Ok(out)
}

/// MACD: the short/long EMA difference smoothed once more by an EMA with
/// period `macd_signal_n`, both recursions seeded by their first value.
/// Defined from the first bar (warmup 0).
pub fn macd(closes: &[f64], cfg: &IndicatorConfig) -> Result<Vec<f64>, IndicatorError> {
    let short = ema(closes, cfg.ema_short)?;
    let long = ema(closes, cfg.ema_long)?;
    let diff: Vec<f64> = short.iter().zip(&long).map(|(s, l)| s - l).collect();
    ema(&diff, cfg.macd_signal_n)
}

/// Larry Williams R%: K% shifted into [-100, 0] (`LW = K% - 100`), so a
/// close at the window high gives 0 and at the window low -100. Flat
/// windows give -50. Warmup: `n - 1`.
pub fn williams_r(
    highs: &[f64],
    lows: &[f64],
    closes: &[f64],
    n: usize,
) -> Result<Vec<f64>, IndicatorError> {
    Ok(stoch_k(highs, lows, closes, n)?
        .into_iter()
        .map(|k| k - 100.0)
        .collect())
}

/// Accumulation/distribution oscillator `(H_t - C_{t-1}) / (H_t - L_t)`;
/// a zero high-low spread gives 0. Warmup: 1.
pub fn ad_oscillator(
    highs: &[f64],
    lows: &[f64],
    closes: &[f64],
) -> Result<Vec<f64>, IndicatorError> {
    if highs.len() != lows.len() || highs.len() != closes.len() {
        return Err(IndicatorError::LengthMismatch);
    }
    require(closes.len(), 2)?;
    Ok((1..closes.len())
        .map(|t| {
            let spread = highs[t] - lows[t];
            if spread == 0.0 {
                0.0
            } else {
                (highs[t] - closes[t - 1]) / spread
            }
        })
        .collect())
}

/// Assembles the 9-column matrix, dropping every row before the latest
/// warmup boundary so all columns are defined.
pub fn compute_features(
    series: &PriceSeries,
    cfg: &IndicatorConfig,
) -> Result<FeatureMatrix, IndicatorError> {
    cfg.validate()?;
    let warmup = cfg.warmup();
    let len = series.len();
    require(len, warmup + 1)?;

    let highs = series.highs();
    let lows = series.lows();
    let closes = series.closes();

    let ma = sma(&closes, cfg.ma_window)?;
    let wma_v = wma(&closes, cfg.wma_window)?;
    let mom = momentum(&closes, cfg.n)?;
    let k = stoch_k(&highs, &lows, &closes, cfg.n)?;
    let d = stoch_d(&k, cfg.n)?;
    let rsi_v = rsi(&closes, cfg.n)?;
    let macd_v = macd(&closes, cfg)?;
    let lw = williams_r(&highs, &lows, &closes, cfg.n)?;
    let ad = ad_oscillator(&highs, &lows, &closes)?;

    // Each column vector starts at its own warmup; index the shared tail.
    let rows: Vec<[f64; NUM_INDICATORS]> = (warmup..len)
        .map(|t| {
            [
                ma[t - (cfg.ma_window - 1)],
                wma_v[t - (cfg.wma_window - 1)],
                mom[t - cfg.n],
                k[t - (cfg.n - 1)],
                d[t - 2 * (cfg.n - 1)],
                rsi_v[t - cfg.n],
                macd_v[t],
                lw[t - (cfg.n - 1)],
                ad[t - 1],
            ]
        })
        .collect();
    let dates = series.bars()[warmup..].iter().map(|b| b.date).collect();
    Ok(FeatureMatrix { dates, rows })
}

/// Writes the feature CSV: `date,ma,wma,mom,k,d,rsi,macd,lw,ad` with nine
/// significant digits.
pub fn write_features_csv<W: Write>(
    features: &FeatureMatrix,
    mut out: W,
) -> Result<(), IndicatorError> {
    writeln!(out, "date,{}", INDICATOR_NAMES.join(","))?;
    for (date, row) in features.dates.iter().zip(&features.rows) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
        writeln!(out, "{date},{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::OhlcBar;

    fn constant_series(len: usize, price: f64) -> PriceSeries {
        let bars = (0..len)
            .map(|i| OhlcBar {
                date: NaiveDate::from_num_days_from_ce_opt(730_120 + i as i32).unwrap(),
                high: price,
                low: price,
                close: price,
                open: None,
                volume: None,
            })
            .collect();
        PriceSeries::new(bars).unwrap()
    }

    #[test]
    fn sma_of_ramp_and_constant() {
        let closes: Vec<f64> = (1..=14).map(f64::from).collect();
        let out = sma(&closes, 14).unwrap();
        assert_eq!(out, vec![7.5]);

        let flat = vec![3.25; 40];
        for v in sma(&flat, 14).unwrap() {
            assert!((v - 3.25).abs() < 1e-12);
        }
        assert!(matches!(
            sma(&flat[..5], 14).unwrap_err(),
            IndicatorError::TooShort { .. }
        ));
    }

    #[test]
    fn wma_hand_value_and_constant() {
        let out = wma(&[1.0, 2.0, 3.0], 3).unwrap();
        assert!((out[0] - 14.0 / 6.0).abs() < 1e-12);

        for v in wma(&[5.5; 20], 7).unwrap() {
            assert!((v - 5.5).abs() < 1e-12);
        }
    }

    #[test]
    fn momentum_is_lag_difference() {
        let mut closes = vec![100.0; 10];
        closes.push(110.0);
        let out = momentum(&closes, 10).unwrap();
        assert_eq!(out, vec![10.0]);
        assert_eq!(momentum(&[2.0; 15], 10).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn stochastics_hit_bounds_and_flat_rule() {
        // Close at the window's highest high -> K = 100, LW = 0.
        let highs = vec![5.0, 6.0, 10.0];
        let lows = vec![4.0, 5.0, 8.0];
        let closes = vec![4.5, 5.5, 10.0];
        assert_eq!(stoch_k(&highs, &lows, &closes, 3).unwrap(), vec![100.0]);
        assert_eq!(williams_r(&highs, &lows, &closes, 3).unwrap(), vec![0.0]);

        // Close at the lowest low -> K = 0, LW = -100.
        let closes_low = vec![4.5, 5.5, 4.0];
        assert_eq!(stoch_k(&highs, &lows, &closes_low, 3).unwrap(), vec![0.0]);
        assert_eq!(
            williams_r(&highs, &lows, &closes_low, 3).unwrap(),
            vec![-100.0]
        );

        // Flat window.
        let flat = vec![7.0; 5];
        assert_eq!(stoch_k(&flat, &flat, &flat, 5).unwrap(), vec![50.0]);
        assert_eq!(williams_r(&flat, &flat, &flat, 5).unwrap(), vec![-50.0]);
    }

    #[test]
    fn stoch_d_means() {
        assert_eq!(stoch_d(&[60.0, 60.0, 60.0], 3).unwrap(), vec![60.0]);
        assert_eq!(stoch_d(&[0.0, 100.0], 2).unwrap(), vec![50.0]);
    }

    #[test]
    fn rsi_degenerate_rules() {
        let rising: Vec<f64> = (1..=12).map(f64::from).collect();
        assert_eq!(rsi(&rising, 10).unwrap(), vec![100.0, 100.0]);

        let falling: Vec<f64> = (1..=12).rev().map(f64::from).collect();
        assert_eq!(rsi(&falling, 10).unwrap(), vec![0.0, 0.0]);

        // Alternating +1/-1 changes over an even window -> 50.
        let alternating: Vec<f64> = (0..13).map(|i| if i % 2 == 0 { 10.0 } else { 11.0 }).collect();
        for v in rsi(&alternating, 10).unwrap() {
            assert!((v - 50.0).abs() < 1e-12);
        }

        // No movement at all -> 50 by the degenerate rule.
        assert_eq!(rsi(&[4.0; 11], 10).unwrap(), vec![50.0]);

        assert!(matches!(
            rsi(&[1.0; 10], 10).unwrap_err(),
            IndicatorError::TooShort { .. }
        ));
    }

    #[test]
    fn macd_constant_and_single_bar() {
        let cfg = IndicatorConfig::default();
        for v in macd(&[9.0; 30], &cfg).unwrap() {
            assert!(v.abs() < 1e-12);
        }
        assert_eq!(macd(&[42.0], &cfg).unwrap(), vec![0.0]);
    }

    #[test]
    fn ad_oscillator_hand_values() {
        let highs = vec![8.0, 10.0];
        let lows = vec![5.0, 5.0];
        // Previous close at the low -> 1.0.
        assert_eq!(ad_oscillator(&highs, &lows, &[5.0, 7.0]).unwrap(), vec![1.0]);
        // Previous close at the high -> 0.0.
        assert_eq!(
            ad_oscillator(&highs, &lows, &[10.0, 7.0]).unwrap(),
            vec![0.0]
        );
        // Zero spread -> 0.
        assert_eq!(
            ad_oscillator(&[6.0, 6.0], &[5.0, 6.0], &[5.5, 6.0]).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn constant_series_features_compose_degenerate_rules() {
        let series = constant_series(30, 12.5);
        let features = compute_features(&series, &IndicatorConfig::default()).unwrap();
        assert_eq!(features.len(), 30 - IndicatorConfig::default().warmup());
        for row in &features.rows {
            let [ma, wma_v, mom, k, d, rsi_v, macd_v, lw, ad] = *row;
            assert!((ma - 12.5).abs() < 1e-12);
            assert!((wma_v - 12.5).abs() < 1e-12);
            assert_eq!(mom, 0.0);
            assert_eq!(k, 50.0);
            assert_eq!(d, 50.0);
            assert_eq!(rsi_v, 50.0);
            assert!(macd_v.abs() < 1e-12);
            assert_eq!(lw, -50.0);
            assert_eq!(ad, 0.0);
        }
    }

    #[test]
    fn warmup_matches_hand_count_for_defaults() {
        let cfg = IndicatorConfig::default();
        // D% binds: first K% at bar index 9, ten K% values -> index 18.
        assert_eq!(cfg.warmup(), 18);
        let series = constant_series(19, 3.0);
        assert_eq!(compute_features(&series, &cfg).unwrap().len(), 1);
        let short = constant_series(18, 3.0);
        assert!(matches!(
            compute_features(&short, &cfg).unwrap_err(),
            IndicatorError::TooShort { .. }
        ));
    }

    #[test]
    fn appending_bars_never_changes_history() {
        let series = crate::synthetic::generate(&crate::synthetic::SyntheticConfig {
            bars: 120,
            seed: 11,
            ..Default::default()
        });
        let cfg = IndicatorConfig::default();
        let full = compute_features(&series, &cfg).unwrap();
        let prefix = PriceSeries::new(series.bars()[..80].to_vec()).unwrap();
        let partial = compute_features(&prefix, &cfg).unwrap();
        for (a, b) in partial.rows.iter().zip(&full.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn feature_csv_shape() {
        let series = constant_series(25, 2.0);
        let features = compute_features(&series, &IndicatorConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_features_csv(&features, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "date,ma,wma,mom,k,d,rsi,macd,lw,ad");
        assert_eq!(lines.count(), features.len());
    }

    #[test]
    fn config_validation() {
        let cfg = IndicatorConfig {
            ema_short: 30,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(IndicatorError::BadConfig(_))));
        let cfg = IndicatorConfig {
            n: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
