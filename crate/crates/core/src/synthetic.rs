//! Seeded synthetic OHLC generator for tests and demos.
//!
//! A geometric random walk whose drift switches between a bull and a bear
//! regime. Regime persistence makes the direction of tomorrow's close
//! partially predictable from trend indicators, which gives the pipeline
//! a learnable benchmark without shipping third-party market data.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::market_data::{OhlcBar, PriceSeries};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub bars: usize,
    pub seed: u64,
    pub start_price: f64,
    pub start_date: NaiveDate,
    /// Mean daily log return while the bull regime is active.
    pub bull_drift: f64,
    /// Mean daily log return while the bear regime is active.
    pub bear_drift: f64,
    /// Daily log-return standard deviation.
    pub volatility: f64,
    /// Expected regime length in days (geometric switching).
    pub mean_regime_len: usize,
    /// Scale of the high/low extension beyond the open-close body.
    pub wick: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            bars: 600,
            seed: 2020,
            start_price: 1000.0,
            start_date: NaiveDate::from_ymd_opt(2017, 1, 2).unwrap(),
            bull_drift: 0.006,
            bear_drift: -0.006,
            volatility: 0.006,
            mean_regime_len: 40,
            wick: 0.004,
        }
    }
}

/// Generates a bar sequence from the config. Identical configs give
/// identical series.
pub fn generate(cfg: &SyntheticConfig) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let switch_prob = 1.0 / cfg.mean_regime_len as f64;
    let mut bullish = rng.gen_bool(0.5);
    let mut close = cfg.start_price;
    let mut bars = Vec::with_capacity(cfg.bars);
    for i in 0..cfg.bars {
        if rng.gen_bool(switch_prob) {
            bullish = !bullish;
        }
        let drift = if bullish { cfg.bull_drift } else { cfg.bear_drift };
        let z: f64 = rng.sample(StandardNormal);
        let open = close;
        close *= (drift + cfg.volatility * z).exp();

        let hi_z: f64 = rng.sample(StandardNormal);
        let lo_z: f64 = rng.sample(StandardNormal);
        let high = open.max(close) * (cfg.wick * hi_z.abs()).exp();
        let low = open.min(close) * (-cfg.wick * lo_z.abs()).exp();
        let volume = 1000.0 * (0.25 * rng.sample::<f64, _>(StandardNormal)).exp();

        bars.push(OhlcBar {
            date: cfg.start_date.checked_add_days(Days::new(i as u64)).unwrap(),
            high,
            low,
            close,
            open: Some(open),
            volume: Some(volume),
        });
    }
    PriceSeries::new(bars).expect("generator preserves bar invariants")
}

/// The bundled benchmark: one 740-bar walk split into a 600-bar training
/// file and a 140-bar validation file (enough for 100 usable rows after
/// indicator warmup). Drawn once so the validation series continues the
/// training price level.
pub fn benchmark_pair() -> (PriceSeries, PriceSeries) {
    let cfg = SyntheticConfig {
        bars: 740,
        ..Default::default()
    };
    let full = generate(&cfg);
    let train = PriceSeries::new(full.bars()[..600].to_vec()).unwrap();
    let validation = PriceSeries::new(full.bars()[600..].to_vec()).unwrap();
    (train, validation)
}

/// Writes a series in the ingestion CSV schema.
pub fn write_csv<W: std::io::Write>(series: &PriceSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "date,open,high,low,close,volume")?;
    for bar in series.bars() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            bar.date,
            bar.open.unwrap_or(bar.close),
            bar.high,
            bar.low,
            bar.close,
            bar.volume.unwrap_or(0.0),
        )?;
    }
    Ok(())
}
