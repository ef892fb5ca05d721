//! Synthetic series generation from a mixture of a periodic hypothesis
//! (inverse-FFT and wave-superposition behaviours) and a trend hypothesis
//! (random walk, logistic growth, trend plus waves).

mod augment;
mod behaviors;
mod config;

use std::io::Write;

use rand::Rng;

pub use augment::{
    augment, default_smooth_window, flip, inject_level_shift, inject_spike, moving_average, replicate, smooth_detrend,
    Applied, Disturbance,
};
pub use behaviors::{
    gen_ifftb, gen_lgb, gen_pwb, gen_rwb, gen_twdb, half_spectrum_bins, ifft_synthesize, lgb_from_params,
    logistic_curve, pwb_from_waves, render_waves, sample_waves, twdb_from_params, BehaviorParams, Sample,
    WaveComponent, WaveShape,
};
pub use config::{AugmentConfig, Behavior, GeneratorConfig, Hypothesis, Interval, NoiseLevel, SpectralPrior};

use crate::error::Result;
use crate::exec::Exec;
use crate::rng::RngStream;
use crate::series::TimeSeries;

const CHOICE: u64 = 6;
const AUGMENT: u64 = 7;

/// A generated series with the labels needed for the dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub series: TimeSeries,
    pub hypothesis: Hypothesis,
    pub behavior: Behavior,
    pub params: BehaviorParams,
    pub augmentations: Applied,
    pub stream: RngStream,
}

/// Picks the hypothesis (periodic with probability `alpha`), then a
/// behaviour uniformly within it. With a behaviour restriction, the draw
/// falls back to the other hypothesis when the chosen one has no allowed
/// behaviour.
fn choose_behavior(cfg: &GeneratorConfig, stream: RngStream) -> Behavior {
    let mut rng = stream.child(CHOICE).rng();
    let periodic = rng.gen::<f64>() < cfg.alpha;
    let pick = rng.gen::<f64>();
    let allowed = |set: &[Behavior]| -> Vec<Behavior> {
        set.iter()
            .copied()
            .filter(|b| cfg.behaviors.as_ref().is_none_or(|r| r.contains(b)))
            .collect()
    };
    let (first, second) = if periodic {
        (allowed(&Behavior::PERIODIC), allowed(&Behavior::TREND))
    } else {
        (allowed(&Behavior::TREND), allowed(&Behavior::PERIODIC))
    };
    let pool = if first.is_empty() { second } else { first };
    let idx = ((pick * pool.len() as f64) as usize).min(pool.len() - 1);
    pool[idx]
}

pub fn generate_behavior(cfg: &GeneratorConfig, behavior: Behavior, stream: RngStream) -> Result<Sample> {
    let len = cfg.length;
    match behavior {
        Behavior::Ifftb => gen_ifftb(cfg, len, stream),
        Behavior::Pwb => gen_pwb(cfg, len, stream),
        Behavior::Rwb => gen_rwb(cfg.rwb_sigma, len, stream),
        Behavior::Lgb => gen_lgb(cfg, len, stream),
        Behavior::Twdb => gen_twdb(cfg, len, stream),
    }
}

/// Draws one series: hypothesis, behaviour, parameters, augmentations.
pub fn sample_series(cfg: &GeneratorConfig, stream: RngStream) -> Result<Generated> {
    cfg.validate()?;
    let behavior = choose_behavior(cfg, stream);
    let sample = generate_behavior(cfg, behavior, stream)?;
    let (series, augmentations) = augment(&sample.series, &cfg.augment, stream.child(AUGMENT));
    Ok(Generated {
        series,
        hypothesis: behavior.hypothesis(),
        behavior,
        params: sample.params,
        augmentations,
        stream,
    })
}

/// Series `i` uses stream index `first_index + i` under `seed`.
pub fn generate_batch(cfg: &GeneratorConfig, seed: u64, first_index: u64, n: usize, exec: Exec) -> Result<Vec<Generated>> {
    cfg.validate()?;
    exec.map_indexed(n, |i| sample_series(cfg, RngStream::new(seed, first_index + i as u64)))
        .into_iter()
        .collect()
}

/// One manifest line per series: `id,seed,stream,hypothesis,behavior,length`.
pub fn write_manifest<W: Write>(out: W, ids: &[String], items: &[Generated]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "id,seed,stream,hypothesis,behavior,length")?;
    for (id, g) in ids.iter().zip(items) {
        writeln!(
            w,
            "{id},{},{},{},{},{}",
            g.stream.seed,
            g.stream.stream_index,
            g.hypothesis.name(),
            g.behavior.name(),
            g.series.len()
        )?;
    }
    w.flush()
}
