use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Standard deviations below this are replaced by it.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel statistics of the lookback window.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Channels whose lookback variance fell below the floor.
    pub floored: Vec<bool>,
}

/// Standardizes the whole series with mean and (population) standard
/// deviation of its first `lookback` samples.
pub fn normalize(series: &TimeSeries, lookback: usize) -> Result<(TimeSeries, NormStats)> {
    if lookback == 0 || lookback > series.len() {
        return Err(Error::Input(format!(
            "lookback {lookback} must lie in [1, {}]",
            series.len()
        )));
    }
    let mut stats = NormStats {
        mean: Vec::new(),
        std: Vec::new(),
        floored: Vec::new(),
    };
    let channels = series
        .channels()
        .iter()
        .map(|ch| {
            let window = &ch[..lookback];
            let n = lookback as f64;
            let mean = window.iter().sum::<f64>() / n;
            let sd = (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let floored = sd < STD_FLOOR;
            let sd = sd.max(STD_FLOOR);
            stats.mean.push(mean);
            stats.std.push(sd);
            stats.floored.push(floored);
            ch.iter().map(|v| (v - mean) / sd).collect()
        })
        .collect();
    Ok((TimeSeries::from_channels(channels)?, stats))
}

pub fn denormalize(series: &TimeSeries, stats: &NormStats) -> Result<TimeSeries> {
    if stats.mean.len() != series.n_channels() {
        return Err(Error::Shape {
            expected: format!("{} channels", stats.mean.len()),
            got: format!("{} channels", series.n_channels()),
        });
    }
    let channels = series
        .channels()
        .iter()
        .enumerate()
        .map(|(i, ch)| ch.iter().map(|v| v * stats.std[i] + stats.mean[i]).collect())
        .collect();
    TimeSeries::from_channels(channels)
}
