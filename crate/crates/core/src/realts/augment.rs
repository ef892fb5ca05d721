//! Data augmentation, applied in the fixed order
//! replicate -> flip -> smooth/detrend -> perturb.

use rand::Rng;

use super::config::AugmentConfig;
use crate::rng::RngStream;
use crate::series::TimeSeries;

/// Which augmentations were applied to a series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Applied {
    pub replicated: Option<usize>,
    pub flipped: bool,
    pub smoothed: bool,
    pub perturbed: Option<Disturbance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disturbance {
    Spike,
    LevelShift,
}

/// Tiles the first `ceil(L / copies)` samples `copies` times, cropped to `L`.
pub fn replicate(values: &[f64], copies: usize) -> Vec<f64> {
    let len = values.len();
    let seg = len.div_ceil(copies.max(1));
    (0..len).map(|i| values[i % seg]).collect()
}

pub fn flip(values: &[f64]) -> Vec<f64> {
    values.iter().rev().copied().collect()
}

/// Centred moving average; the window shrinks symmetrically at the edges.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let len = values.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..len)
        .map(|i| {
            let r = half.min(i).min(len - 1 - i);
            let (lo, hi) = (i - r, i + r + 1);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Subtracts the moving-average trend, leaving the faster oscillations.
pub fn smooth_detrend(values: &[f64], window: usize) -> Vec<f64> {
    let trend = moving_average(values, window);
    values.iter().zip(trend).map(|(v, t)| v - t).collect()
}

pub fn default_smooth_window(len: usize) -> usize {
    (len / 16).max(3) | 1
}

pub fn inject_spike(values: &mut [f64], index: usize, height: f64) {
    values[index] += height;
}

pub fn inject_level_shift(values: &mut [f64], index: usize, shift: f64) {
    for v in &mut values[index..] {
        *v += shift;
    }
}

/// Applies each enabled augmentation with its configured probability.
/// Random draws are consumed in a fixed pattern so the outcome depends only
/// on `(cfg, stream)`.
pub fn augment(series: &TimeSeries, cfg: &AugmentConfig, stream: RngStream) -> (TimeSeries, Applied) {
    let mut rng = stream.rng();
    let mut applied = Applied::default();
    let channels = series
        .channels()
        .iter()
        .map(|ch| {
            let mut v = ch.clone();
            let len = v.len();

            let (u_rep, copies) = (rng.gen::<f64>(), rng.gen_range(cfg.replicate_copies.0..=cfg.replicate_copies.1));
            if u_rep < cfg.replicate_prob && copies > 1 {
                v = replicate(&v, copies);
                applied.replicated = Some(copies);
            }

            if rng.gen::<f64>() < cfg.flip_prob {
                v = flip(&v);
                applied.flipped = true;
            }

            if rng.gen::<f64>() < cfg.smooth_prob {
                let w = cfg.smooth_window.unwrap_or_else(|| default_smooth_window(len));
                v = smooth_detrend(&v, w);
                applied.smoothed = true;
            }

            let (u_pert, spike, index, level) = (
                rng.gen::<f64>(),
                rng.gen::<bool>(),
                rng.gen_range(0..len),
                rng.gen_range(-1.0..1.0),
            );
            if u_pert < cfg.perturb_prob {
                let sd = super::behaviors::series_std(&v);
                let scale = if sd > 0.0 { sd } else { 1.0 };
                if spike {
                    let sign = if level < 0.0 { -1.0 } else { 1.0 };
                    inject_spike(&mut v, index, sign * cfg.spike_scale * scale);
                    applied.perturbed = Some(Disturbance::Spike);
                } else {
                    inject_level_shift(&mut v, index, level * cfg.shift_scale * scale);
                    applied.perturbed = Some(Disturbance::LevelShift);
                }
            }
            v
        })
        .collect();
    let out = TimeSeries::from_channels(channels).expect("augmentations preserve shape and finiteness");
    (out, applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn acf(x: &[f64], lag: usize) -> f64 {
        let n = x.len();
        let m = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
        let cov = (0..n - lag).map(|t| (x[t] - m) * (x[t + lag] - m)).sum::<f64>() / (n - lag) as f64;
        cov / var
    }

    #[test]
    fn disabled_is_identity() {
        let s = TimeSeries::univariate((0..64).map(|i| (i as f64).sqrt()).collect()).unwrap();
        for seed in 0..20 {
            let (out, applied) = augment(&s, &AugmentConfig::disabled(), RngStream::new(seed, 0));
            assert_eq!(out, s);
            assert_eq!(applied, Applied::default());
        }
    }

    #[test]
    fn flip_small() {
        assert_eq!(flip(&[1.0, 2.0, 3.0]), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn flip_only_config() {
        let cfg = AugmentConfig { flip_prob: 1.0, ..AugmentConfig::disabled() };
        let s = TimeSeries::univariate(vec![1.0, 2.0, 3.0]).unwrap();
        let (out, applied) = augment(&s, &cfg, RngStream::new(0, 0));
        assert_eq!(out.values(), &[3.0, 2.0, 1.0]);
        assert!(applied.flipped);
    }

    #[test]
    fn replication_keeps_period_peak() {
        let p = 32;
        let x: Vec<f64> = (0..256).map(|t| (2.0 * PI * t as f64 / p as f64).sin()).collect();
        let y = replicate(&x, 2);
        assert_eq!(y.len(), 256);
        let best = (2..=128).max_by(|a, b| acf(&y, *a).partial_cmp(&acf(&y, *b)).unwrap()).unwrap();
        assert_eq!(best % p, 0);
        assert!(acf(&y, p) > 0.99);
    }

    #[test]
    fn detrend_removes_linear_trend_in_interior() {
        let x: Vec<f64> = (0..200).map(|t| 0.5 * t as f64 + 3.0).collect();
        let y = smooth_detrend(&x, 9);
        // centred average reproduces a line exactly, edges included
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn perturbation_changes_values_but_not_length() {
        let cfg = AugmentConfig { perturb_prob: 1.0, ..AugmentConfig::disabled() };
        let s = TimeSeries::univariate((0..100).map(|t| (t as f64 * 0.2).sin()).collect()).unwrap();
        let (out, applied) = augment(&s, &cfg, RngStream::new(3, 1));
        assert_eq!(out.len(), 100);
        assert!(applied.perturbed.is_some());
        assert_ne!(out, s);
    }
}
