//! Rescale-based forecast evaluation.
//!
//! Each test series is resampled by every factor `beta` in the rescale set,
//! cut into lookback/horizon windows and scored; ReMSE and ReMAE are the
//! unweighted means of the per-`beta` MSE and MAE.

mod perturb;

pub use perturb::{dominant_frequency, perturb, PerturbationSpec, HARMONIC_AMPLITUDE_FACTOR};

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forecast::{ForecasterHandle, Registry, Window};
use crate::imgspace::{resample_linear, STD_FLOOR};
use crate::rng::RngStream;
use crate::series::{format_sig9, read_csv_file, Observed, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub lookback: usize,
    pub horizons: Vec<usize>,
    pub rescale: Vec<f64>,
    /// Distance between window starts; `None` uses the horizon.
    pub stride: Option<usize>,
}

pub const DEFAULT_RESCALE: [f64; 5] = [0.5, 0.66, 1.0, 1.5, 2.0];
pub const DEFAULT_HORIZONS: [usize; 4] = [96, 192, 336, 720];

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lookback: 512,
            horizons: DEFAULT_HORIZONS.to_vec(),
            rescale: DEFAULT_RESCALE.to_vec(),
            stride: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 {
            return Err(Error::Config("lookback must be positive".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be a non-empty list of positive lengths".into()));
        }
        if self.rescale.is_empty() || self.rescale.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Config("rescale factors must be a non-empty list of positive reals".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be positive".into()));
        }
        Ok(())
    }

    pub fn stride_for(&self, horizon: usize) -> usize {
        self.stride.unwrap_or(horizon)
    }
}

/// `round(beta * L)` with ties to even.
pub fn rescaled_len(len: usize, beta: f64) -> usize {
    (beta * len as f64).round_ties_even() as usize
}

/// Linear-interpolation resampling of the whole series to
/// `round(beta * L)` points, endpoints preserved.
pub fn tsi_rescale(series: &TimeSeries, beta: f64) -> Result<TimeSeries> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Input(format!("rescale factor {beta} must be positive")));
    }
    if series.len() < 2 {
        return Err(Error::Input("rescaling needs at least 2 points".into()));
    }
    let n = rescaled_len(series.len(), beta);
    if n < 2 {
        return Err(Error::Input(format!("rescaled length {n} is below 2")));
    }
    TimeSeries::from_channels(series.channels().iter().map(|ch| resample_linear(ch, n)).collect())
}

/// Scores of one `(scenario, horizon, beta)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub horizon: usize,
    pub beta: f64,
    pub scenario: String,
    pub mse: f64,
    pub mae: f64,
    pub windows: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub horizon: usize,
    pub beta: f64,
    pub scenario: String,
    pub reason: String,
}

/// ReMSE / ReMAE of one `(scenario, horizon)` over the scored factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub horizon: usize,
    pub scenario: String,
    pub remse: f64,
    pub remae: f64,
    pub betas: usize,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub cells: Vec<CellScore>,
    pub skipped: Vec<Skipped>,
    pub aggregates: Vec<Aggregate>,
}

impl EvalReport {
    /// Per-cell rows, then an aggregate block and a skipped block, each
    /// introduced by a `#` line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,horizon,beta,scenario,mse,mae\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                self.dataset,
                c.horizon,
                c.beta,
                c.scenario,
                format_sig9(c.mse),
                format_sig9(c.mae)
            );
        }
        s.push_str("\n# aggregate\ndataset,horizon,scenario,remse,remae,betas,windows\n");
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.dataset,
                a.horizon,
                a.scenario,
                format_sig9(a.remse),
                format_sig9(a.remae),
                a.betas,
                a.windows
            );
        }
        if !self.skipped.is_empty() {
            s.push_str("\n# skipped\ndataset,horizon,beta,scenario,reason\n");
            for k in &self.skipped {
                let _ = writeln!(s, "{},{},{},{},{}", self.dataset, k.horizon, k.beta, k.scenario, k.reason);
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("dataset {} model {}\n", self.dataset, self.model);
        let _ = writeln!(s, "{:>8} {:<22} {:>12} {:>12} {:>6}", "horizon", "scenario", "ReMSE", "ReMAE", "betas");
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{:>8} {:<22} {:>12.6} {:>12.6} {:>6}",
                a.horizon, a.scenario, a.remse, a.remae, a.betas
            );
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(s, "{} cell(s) skipped", self.skipped.len());
        }
        s
    }

    pub fn aggregate(&self, horizon: usize, scenario: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.horizon == horizon && a.scenario == scenario)
    }
}

/// Clean-data evaluation.
pub fn remetrics(truth: &TimeSeries, model: &ForecasterHandle, cfg: &EvalConfig) -> Result<EvalReport> {
    remetrics_with(
        truth,
        model,
        cfg,
        &[PerturbationSpec::None],
        RngStream::new(0, 0),
        Exec::default(),
    )
}

/// Evaluation under each perturbation scenario. Perturbations are applied
/// to the rescaled series the model sees; errors are measured against the
/// clean rescaled series, skipping positions marked missing.
pub fn remetrics_with(
    truth: &TimeSeries,
    model: &ForecasterHandle,
    cfg: &EvalConfig,
    perturbations: &[PerturbationSpec],
    stream: RngStream,
    exec: Exec,
) -> Result<EvalReport> {
    cfg.validate()?;
    for h in &cfg.horizons {
        model.capability.check(&model.id, cfg.lookback, *h)?;
    }
    for p in perturbations {
        p.validate()?;
    }
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut aggregates = Vec::new();
    for (si, spec) in perturbations.iter().enumerate() {
        let scenario = spec.to_string();
        // per beta: clean rescaled truth and the perturbed observation
        let mut views = Vec::with_capacity(cfg.rescale.len());
        for &beta in &cfg.rescale {
            let view = tsi_rescale(truth, beta).and_then(|clean| {
                let obs = perturb(&clean, spec, stream.child(si as u64).child(beta.to_bits()))?;
                Ok((clean, obs))
            });
            views.push(view);
        }
        for &horizon in &cfg.horizons {
            let mut scored = Vec::new();
            for (bi, &beta) in cfg.rescale.iter().enumerate() {
                let skip = |reason: String| Skipped {
                    horizon,
                    beta,
                    scenario: scenario.clone(),
                    reason,
                };
                let (clean, obs) = match &views[bi] {
                    Ok(v) => v,
                    Err(e) => {
                        skipped.push(skip(e.to_string()));
                        continue;
                    }
                };
                match score_cell(clean, obs, model, cfg.lookback, horizon, cfg.stride_for(horizon), exec)? {
                    Some((mse, mae, windows, points)) => {
                        let cell = CellScore {
                            horizon,
                            beta,
                            scenario: scenario.clone(),
                            mse,
                            mae,
                            windows,
                            points,
                        };
                        scored.push(cell.clone());
                        cells.push(cell);
                    }
                    None => skipped.push(skip(format!(
                        "rescaled length {} holds no scorable window of {} + {horizon}",
                        clean.len(),
                        cfg.lookback
                    ))),
                }
            }
            if scored.is_empty() {
                continue;
            }
            // sum in ascending beta so the mean does not depend on set order
            scored.sort_by(|a, b| a.beta.total_cmp(&b.beta));
            let n = scored.len() as f64;
            aggregates.push(Aggregate {
                horizon,
                scenario: scenario.clone(),
                remse: scored.iter().map(|c| c.mse).sum::<f64>() / n,
                remae: scored.iter().map(|c| c.mae).sum::<f64>() / n,
                betas: scored.len(),
                windows: scored.iter().map(|c| c.windows).sum(),
            });
        }
    }
    if aggregates.is_empty() {
        return Err(Error::Evaluation(format!(
            "series of length {} is too short for every (horizon, rescale factor) pair",
            truth.len()
        )));
    }
    Ok(EvalReport {
        dataset: String::new(),
        model: model.id.clone(),
        cells,
        skipped,
        aggregates,
    })
}

/// Window starts `0, stride, 2 stride, ...` while lookback and horizon fit.
pub fn window_starts(len: usize, lookback: usize, horizon: usize, stride: usize) -> Vec<usize> {
    if len < lookback + horizon {
        return Vec::new();
    }
    (0..=len - lookback - horizon).step_by(stride).collect()
}

/// Pooled MSE/MAE over all windows and channels; `None` when nothing is
/// scorable.
fn score_cell(
    clean: &TimeSeries,
    obs: &Observed,
    model: &ForecasterHandle,
    lookback: usize,
    horizon: usize,
    stride: usize,
    exec: Exec,
) -> Result<Option<(f64, f64, usize, usize)>> {
    let starts = window_starts(clean.len(), lookback, horizon, stride);
    if starts.is_empty() {
        return Ok(None);
    }
    let channels = clean.n_channels();
    let tasks = starts.len() * channels;
    let partial = exec.map_indexed(tasks, |i| -> Result<(f64, f64, usize)> {
        let start = starts[i / channels];
        let ch = i % channels;
        let seen = obs.series.channel(ch);
        let target = &clean.channel(ch)[start + lookback..start + lookback + horizon];
        let missing = obs.missing.as_ref().map(|m| m.channel(ch));
        let pred = model.predict(&Window {
            lookback: &seen[start..start + lookback],
            missing: missing.map(|m| &m[start..start + lookback]),
            horizon,
            truth: target,
        })?;
        if pred.len() != horizon {
            return Err(Error::Shape {
                expected: format!("{horizon} forecast points"),
                got: format!("{}", pred.len()),
            });
        }
        let mut sq = 0.0;
        let mut abs = 0.0;
        let mut n = 0;
        for (k, (p, y)) in pred.iter().zip(target).enumerate() {
            if missing.is_some_and(|m| m[start + lookback + k]) {
                continue;
            }
            let e = p - y;
            sq += e * e;
            abs += e.abs();
            n += 1;
        }
        Ok((sq, abs, n))
    });
    let (mut sq, mut abs, mut n) = (0.0, 0.0, 0usize);
    for r in partial {
        let (a, b, c) = r?;
        sq += a;
        abs += b;
        n += c;
    }
    if n == 0 {
        return Ok(None);
    }
    Ok(Some((sq / n as f64, abs / n as f64, starts.len(), n)))
}

/// Z-scores every channel with its whole-series mean and population std.
pub fn standardize(series: &TimeSeries) -> Result<TimeSeries> {
    let channels = series
        .channels()
        .iter()
        .map(|ch| {
            let n = ch.len() as f64;
            let m = ch.iter().sum::<f64>() / n;
            let sd = (ch.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt().max(STD_FLOOR);
            ch.iter().map(|v| (v - m) / sd).collect()
        })
        .collect();
    TimeSeries::from_channels(channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub eval: EvalConfig,
    pub perturbations: Vec<PerturbationSpec>,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            eval: EvalConfig::default(),
            perturbations: vec![PerturbationSpec::None],
            standardize: true,
            seed: 0,
        }
    }
}

/// Loads a CSV dataset and evaluates a registered model on it. Gaps in
/// the file are carried forward and then treated as observed.
pub fn run_benchmark(dataset: &Path, model_id: &str, registry: &Registry, cfg: &BenchmarkConfig, exec: Exec) -> Result<EvalReport> {
    let model = registry.get(model_id)?;
    let data = read_csv_file(dataset)?;
    let series = if cfg.standardize { standardize(&data.series)? } else { data.series };
    let mut report = remetrics_with(&series, model, &cfg.eval, &cfg.perturbations, RngStream::new(cfg.seed, 0), exec)?;
    report.dataset = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(report)
}
