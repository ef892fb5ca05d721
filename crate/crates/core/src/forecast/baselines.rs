/// Classical forecasting rules shared by the numerical and image-space
/// model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    /// Repeats the last visible value.
    Persistence,
    /// Repeats the last full period detected in the lookback.
    SeasonalNaive,
    /// Extrapolates the least-squares line through the lookback.
    LinearTrend,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Persistence, Baseline::SeasonalNaive, Baseline::LinearTrend];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Persistence => "persistence",
            Baseline::SeasonalNaive => "seasonal-naive",
            Baseline::LinearTrend => "linear-trend",
        }
    }

    pub fn predict(self, lookback: &[f64], horizon: usize) -> Vec<f64> {
        if lookback.is_empty() {
            return vec![0.0; horizon];
        }
        match self {
            Baseline::Persistence => persistence(lookback, horizon),
            Baseline::SeasonalNaive => seasonal_naive(lookback, horizon),
            Baseline::LinearTrend => linear_trend(lookback, horizon),
        }
    }
}

pub fn persistence(lookback: &[f64], horizon: usize) -> Vec<f64> {
    vec![*lookback.last().expect("non-empty lookback"); horizon]
}

/// Dominant period of a lookback window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Period {
    /// Integer lag of the autocorrelation maximum; drives the repetition.
    pub lag: usize,
    /// Lag after parabolic refinement around the maximum.
    pub refined: f64,
    pub acf: f64,
}

/// Normalized autocorrelation with per-lag (unbiased) averaging, so an
/// exactly periodic lag scores 1. `None` for a constant window.
pub fn autocorrelation(x: &[f64], lag: usize) -> Option<f64> {
    let n = x.len();
    if lag >= n {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= f64::EPSILON * mean.abs().max(1.0).powi(2) {
        return None;
    }
    let cov = (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum::<f64>() / (n - lag) as f64;
    Some(cov / var)
}

/// Autocorrelation values within this distance of the maximum count as tied.
pub const PEAK_TOLERANCE: f64 = 0.05;

/// Autocorrelation argmax over lags `[2, T/2]`; near-ties (see
/// [`PEAK_TOLERANCE`]) keep the smaller lag.
pub fn detect_period(lookback: &[f64]) -> Option<Period> {
    let max_lag = lookback.len() / 2;
    if max_lag < 2 {
        return None;
    }
    let acf: Vec<f64> = (2..=max_lag)
        .map(|l| autocorrelation(lookback, l))
        .collect::<Option<_>>()?;
    let top = acf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Per-lag averaging lets multiples of a non-integer period score as
    // high as (or above) the period itself, so the smallest local maximum
    // close to the top value wins.
    let is_peak = |i: usize| {
        let left = i == 0 || acf[i] >= acf[i - 1];
        let right = i + 1 == acf.len() || acf[i] >= acf[i + 1];
        left && right
    };
    let best = (0..acf.len())
        .find(|&i| is_peak(i) && acf[i] >= top - PEAK_TOLERANCE)
        .unwrap_or(0);
    let lag = best + 2;
    let mut refined = lag as f64;
    if best > 0 && best + 1 < acf.len() {
        let (a, b, c) = (acf[best - 1], acf[best], acf[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            refined += 0.5 * (a - c) / denom;
        }
    }
    Some(Period {
        lag,
        refined,
        acf: acf[best],
    })
}

pub fn seasonal_naive(lookback: &[f64], horizon: usize) -> Vec<f64> {
    let Some(p) = detect_period(lookback) else {
        return persistence(lookback, horizon);
    };
    let start = lookback.len() - p.lag;
    (0..horizon).map(|i| lookback[start + i % p.lag]).collect()
}

/// Least-squares line through `(t, x_t)`, `t = 0..T-1`, evaluated at
/// `T, T+1, ...`.
pub fn linear_trend(lookback: &[f64], horizon: usize) -> Vec<f64> {
    let n = lookback.len();
    if n == 1 {
        return persistence(lookback, horizon);
    }
    let nf = n as f64;
    let tm = (nf - 1.0) / 2.0;
    let ym = lookback.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in lookback.iter().enumerate() {
        let dt = t as f64 - tm;
        sxy += dt * (y - ym);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (0..horizon).map(|i| ym + slope * ((n + i) as f64 - tm)).collect()
}
