//! The five generation behaviours. Each `gen_*` function samples its
//! parameters from the configured priors and returns them alongside the
//! series, so callers can audit or reproduce a draw.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::config::{population_std, GeneratorConfig, SpectralPrior};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::TimeSeries;

// Sub-stream tags. PWB and TWDB share WAVES and NOISE so that TWDB with a
// zero trend reproduces PWB exactly.
pub(crate) const WAVES: u64 = 1;
pub(crate) const NOISE: u64 = 2;
pub(crate) const TREND: u64 = 3;
pub(crate) const SPECTRUM: u64 = 4;
pub(crate) const STEPS: u64 = 5;
pub(crate) const LOGISTIC: u64 = 8;

/// Periodic waveform with unit amplitude and period `2*pi` in its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveShape {
    Sine,
    Cosine,
    Triangle,
    Square,
}

impl WaveShape {
    pub const ALL: [WaveShape; 4] = [WaveShape::Sine, WaveShape::Cosine, WaveShape::Triangle, WaveShape::Square];

    pub fn eval(self, theta: f64) -> f64 {
        match self {
            WaveShape::Sine => theta.sin(),
            WaveShape::Cosine => theta.cos(),
            WaveShape::Triangle => (2.0 / PI) * theta.sin().asin(),
            WaveShape::Square => {
                if theta.rem_euclid(2.0 * PI) < PI {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// One term `A * f(2*pi*t / period)` of a wave superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    pub amplitude: f64,
    /// Period in samples.
    pub period: f64,
    pub shape: WaveShape,
}

impl WaveComponent {
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * self.shape.eval(self.angular_frequency() * t)
    }
}

/// Parameters drawn for one series.
#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorParams {
    Ifftb {
        prior_index: usize,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
    },
    Pwb {
        waves: Vec<WaveComponent>,
        noise_sigma: f64,
    },
    Rwb {
        sigma: f64,
    },
    Lgb {
        capacity: f64,
        rate: f64,
        midpoint: f64,
        noise_sigma: f64,
    },
    Twdb {
        slope: f64,
        intercept: f64,
        waves: Vec<WaveComponent>,
        noise_sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub series: TimeSeries,
    pub params: BehaviorParams,
}

fn check_len(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::Config(format!("series length {len} must be at least 2")));
    }
    Ok(())
}

/// Draws `k ~ U{1..k_max}` wave components from the PWB priors.
pub fn sample_waves<R: Rng + ?Sized>(cfg: &GeneratorConfig, len: usize, rng: &mut R) -> Vec<WaveComponent> {
    let k = rng.gen_range(1..=cfg.pwb_k_max);
    let log_period = cfg.log_period_range(len);
    (0..k)
        .map(|_| WaveComponent {
            amplitude: cfg.pwb_amp_range.sample(rng),
            period: log_period.sample(rng).exp(),
            shape: WaveShape::ALL[rng.gen_range(0..WaveShape::ALL.len())],
        })
        .collect()
}

pub fn render_waves(waves: &[WaveComponent], len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| waves.iter().map(|w| w.value(t as f64)).sum())
        .collect()
}

fn add_noise(values: &mut [f64], sigma: f64, stream: RngStream) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = stream.child(NOISE).rng();
    for v in values.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
}

/// `s_t = sum_m A_m cos(2*pi*m*t/L + phi_m)` over `m = 1..amplitudes.len()`,
/// computed with a single inverse FFT. Bins at or above Nyquist are ignored.
pub fn ifft_synthesize(amplitudes: &[f64], phases: &[f64], len: usize) -> Vec<f64> {
    assert_eq!(amplitudes.len(), phases.len(), "amplitude/phase length mismatch");
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (i, (&a, &p)) in amplitudes.iter().zip(phases).enumerate() {
        let m = i + 1;
        if 2 * m >= len {
            break;
        }
        let c = Complex64::from_polar(a / 2.0, p);
        buf[m] += c;
        buf[len - m] += c.conj();
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Number of usable positive-frequency bins strictly below Nyquist.
pub fn half_spectrum_bins(len: usize) -> usize {
    (len - 1) / 2
}

fn sample_spectrum<R: Rng + ?Sized>(prior: &SpectralPrior, bins: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let amplitudes = match prior {
        SpectralPrior::PowerLaw { gamma, jitter } => {
            let g = gamma.sample(rng);
            (1..=bins)
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    (m as f64).powf(-g) * (jitter * z).exp()
                })
                .collect()
        }
        SpectralPrior::FlatBand => {
            let a = rng.gen_range(1..=bins);
            let b = rng.gen_range(1..=bins);
            let (lo, hi) = (a.min(b), a.max(b));
            (1..=bins)
                .map(|m| if (lo..=hi).contains(&m) { rng.gen::<f64>() } else { 0.0 })
                .collect()
        }
    };
    let phases = (0..bins).map(|_| rng.gen_range(-PI..PI)).collect();
    (amplitudes, phases)
}

/// Inverse-FFT behaviour: one of the two spectral priors is picked
/// uniformly, an amplitude and phase vector drawn, and transformed back.
pub fn gen_ifftb(cfg: &GeneratorConfig, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let mut rng = stream.child(SPECTRUM).rng();
    let prior_index = rng.gen_range(0..cfg.ifftb_priors.len());
    let (amplitudes, phases) = sample_spectrum(&cfg.ifftb_priors[prior_index], half_spectrum_bins(len), &mut rng);
    let values = ifft_synthesize(&amplitudes, &phases, len);
    Ok(Sample {
        series: TimeSeries::univariate(values)?,
        params: BehaviorParams::Ifftb {
            prior_index,
            amplitudes,
            phases,
        },
    })
}

/// PWB with explicit components; noise is drawn from `stream`.
pub fn pwb_from_waves(waves: Vec<WaveComponent>, noise_sigma: f64, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let mut values = render_waves(&waves, len);
    add_noise(&mut values, noise_sigma, stream);
    Ok(Sample {
        series: TimeSeries::univariate(values)?,
        params: BehaviorParams::Pwb { waves, noise_sigma },
    })
}

pub fn gen_pwb(cfg: &GeneratorConfig, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let waves = sample_waves(cfg, len, &mut stream.child(WAVES).rng());
    let noise_sigma = cfg.noise.sigma(&render_waves(&waves, len));
    pwb_from_waves(waves, noise_sigma, len, stream)
}

/// Random walk from `s_0 = 0` with `N(0, sigma^2)` increments.
pub fn gen_rwb(sigma: f64, len: usize, stream: RngStream) -> Result<Sample> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("random walk sigma {sigma} must be positive")));
    }
    if len == 0 {
        return Err(Error::Config("series length must be positive".into()));
    }
    let mut rng = stream.child(STEPS).rng();
    let mut values = Vec::with_capacity(len);
    let mut level = 0.0;
    values.push(level);
    for _ in 1..len {
        let z: f64 = StandardNormal.sample(&mut rng);
        level += sigma * z;
        values.push(level);
    }
    Ok(Sample {
        series: TimeSeries::univariate(values)?,
        params: BehaviorParams::Rwb { sigma },
    })
}

/// `K / (1 + exp(-r (t - t0)))` for `t = 0..len`.
pub fn logistic_curve(capacity: f64, rate: f64, midpoint: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| capacity / (1.0 + (-rate * (t as f64 - midpoint)).exp()))
        .collect()
}

pub fn lgb_from_params(capacity: f64, rate: f64, midpoint: f64, noise_sigma: f64, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let mut values = logistic_curve(capacity, rate, midpoint, len);
    add_noise(&mut values, noise_sigma, stream);
    Ok(Sample {
        series: TimeSeries::univariate(values)?,
        params: BehaviorParams::Lgb {
            capacity,
            rate,
            midpoint,
            noise_sigma,
        },
    })
}

pub fn gen_lgb(cfg: &GeneratorConfig, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let mut rng = stream.child(LOGISTIC).rng();
    let capacity = cfg.lgb_log_capacity_range.sample(&mut rng).exp();
    let rate = cfg.lgb_log_rate_range.sample(&mut rng).exp();
    let midpoint = cfg.lgb_midpoint_range.sample(&mut rng) * len as f64;
    let noise_sigma = cfg.noise.sigma(&logistic_curve(capacity, rate, midpoint, len));
    lgb_from_params(capacity, rate, midpoint, noise_sigma, len, stream)
}

pub fn twdb_from_params(
    slope: f64,
    intercept: f64,
    waves: Vec<WaveComponent>,
    noise_sigma: f64,
    len: usize,
    stream: RngStream,
) -> Result<Sample> {
    check_len(len)?;
    let mut values = render_waves(&waves, len);
    for (t, v) in values.iter_mut().enumerate() {
        *v += slope * t as f64 + intercept;
    }
    add_noise(&mut values, noise_sigma, stream);
    Ok(Sample {
        series: TimeSeries::univariate(values)?,
        params: BehaviorParams::Twdb {
            slope,
            intercept,
            waves,
            noise_sigma,
        },
    })
}

/// Linear trend plus a PWB-style wave sum (same priors and `k` law).
pub fn gen_twdb(cfg: &GeneratorConfig, len: usize, stream: RngStream) -> Result<Sample> {
    check_len(len)?;
    let mut trend_rng = stream.child(TREND).rng();
    let slope = cfg.twdb_slope_range.sample(&mut trend_rng);
    let intercept = cfg.twdb_intercept_range.sample(&mut trend_rng);
    let waves = sample_waves(cfg, len, &mut stream.child(WAVES).rng());
    let clean: Vec<f64> = render_waves(&waves, len)
        .into_iter()
        .enumerate()
        .map(|(t, v)| v + slope * t as f64 + intercept)
        .collect();
    let noise_sigma = cfg.noise.sigma(&clean);
    twdb_from_params(slope, intercept, waves, noise_sigma, len, stream)
}

pub(crate) fn series_std(x: &[f64]) -> f64 {
    population_std(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realts::config::{Interval, NoiseLevel};

    fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
        buf[..=n / 2].iter().map(|c| c.norm()).collect()
    }

    fn argmax(x: &[f64]) -> usize {
        x.iter()
            .enumerate()
            .fold((0, f64::MIN), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }

    #[test]
    fn single_sine_is_exact() {
        let omega = 2.0 * PI / 64.0;
        let wave = WaveComponent { amplitude: 1.0, period: 64.0, shape: WaveShape::Sine };
        let s = pwb_from_waves(vec![wave], 0.0, 256, RngStream::new(1, 0)).unwrap();
        for (t, v) in s.series.values().iter().enumerate() {
            assert!((v - (omega * t as f64).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_two_sine() {
        let wave = WaveComponent { amplitude: 2.0, period: 40.0, shape: WaveShape::Sine };
        let s = pwb_from_waves(vec![wave], 0.0, 100, RngStream::new(1, 0)).unwrap();
        for (t, v) in s.series.values().iter().enumerate() {
            assert!((v - 2.0 * (2.0 * PI * t as f64 / 40.0).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_component_sum_has_two_peaks() {
        // periods dividing 512 put the energy in bins 8 and 32
        let waves = vec![
            WaveComponent { amplitude: 1.0, period: 64.0, shape: WaveShape::Sine },
            WaveComponent { amplitude: 1.0, period: 16.0, shape: WaveShape::Cosine },
        ];
        let s = pwb_from_waves(waves.clone(), 0.0, 512, RngStream::new(1, 0)).unwrap();
        for (t, v) in s.series.values().iter().enumerate() {
            let direct = (2.0 * PI * t as f64 / 64.0).sin() + (2.0 * PI * t as f64 / 16.0).cos();
            assert!((v - direct).abs() < 1e-12);
        }
        let mag = dft_magnitudes(s.series.values());
        let mut order: Vec<usize> = (1..mag.len()).collect();
        order.sort_by(|a, b| mag[*b].partial_cmp(&mag[*a]).unwrap());
        let mut top = vec![order[0], order[1]];
        top.sort();
        assert_eq!(top, vec![8, 32]);
        assert!(mag[order[2]] < 1e-6 * mag[order[1]]);
    }

    #[test]
    fn ifft_zero_spectrum_is_zero() {
        let x = ifft_synthesize(&[0.0; 31], &[0.3; 31], 64);
        assert!(x.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn ifft_single_bin_matches_direct_cosine() {
        let mut amp = vec![0.0; 31];
        amp[2] = 1.0; // frequency index 3
        let x = ifft_synthesize(&amp, &[0.0; 31], 64);
        for (t, v) in x.iter().enumerate() {
            let direct = (2.0 * PI * 3.0 * t as f64 / 64.0).cos();
            assert!((v - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn ifftb_dominant_bin_matches_sampled_argmax() {
        let cfg = GeneratorConfig::default();
        for i in 0..50 {
            let s = gen_ifftb(&cfg, 512, RngStream::new(3, i)).unwrap();
            let BehaviorParams::Ifftb { amplitudes, .. } = &s.params else { unreachable!() };
            let mag = dft_magnitudes(s.series.values());
            assert_eq!(argmax(&mag), argmax(amplitudes) + 1, "draw {i}");
        }
    }

    #[test]
    fn pwb_k_is_uniform_over_one_to_eight() {
        // chi-square with 7 dof; p = 0.01 critical value is 18.475
        let cfg = GeneratorConfig::default();
        let n = 10_000;
        let mut counts = [0usize; 8];
        for i in 0..n {
            let waves = sample_waves(&cfg, 256, &mut RngStream::new(17, i).child(WAVES).rng());
            counts[waves.len() - 1] += 1;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 18.475, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn pwb_periods_lie_in_range() {
        let cfg = GeneratorConfig::default();
        for i in 0..200 {
            for w in sample_waves(&cfg, 300, &mut RngStream::new(5, i).rng()) {
                assert!(w.period >= 11.0 && w.period <= 600.0);
                assert!(cfg.pwb_amp_range.contains(w.amplitude));
            }
        }
    }

    #[test]
    fn rwb_rejects_nonpositive_sigma() {
        assert!(matches!(gen_rwb(0.0, 10, RngStream::new(1, 1)), Err(Error::Config(_))));
        assert!(matches!(gen_rwb(-1.0, 10, RngStream::new(1, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn rwb_tiny_sigma_is_near_zero_and_deterministic() {
        let a = gen_rwb(1e-300, 100, RngStream::new(9, 9)).unwrap();
        assert!(a.series.values().iter().all(|v| v.abs() < 1e-290));
        let b = gen_rwb(2.0, 100, RngStream::new(9, 9)).unwrap();
        let c = gen_rwb(2.0, 100, RngStream::new(9, 9)).unwrap();
        assert_eq!(b, c);
        assert_eq!(b.series.values()[0], 0.0);
    }

    #[test]
    fn rwb_increment_variance() {
        let s = gen_rwb(1.0, 1_000_000, RngStream::new(2024, 0)).unwrap();
        let v = s.series.values();
        let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((0.995..=1.005).contains(&var), "var {var}");
    }

    #[test]
    fn logistic_midpoint_and_monotone() {
        let len = 200;
        let s = lgb_from_params(10.0, 0.1, 100.0, 0.0, len, RngStream::new(0, 0)).unwrap();
        let v = s.series.values();
        assert!((v[100] - 5.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(v.iter().all(|&x| x > 0.0 && x < 10.0));
    }

    #[test]
    fn slow_logistic_rises_little() {
        // rise over 511 samples at r = 0.001 is at most K*tanh(0.2555/2) < 0.13K
        for (i, mid) in [128.0, 256.0, 384.0].into_iter().enumerate() {
            let s = lgb_from_params(7.0, 0.001, mid, 0.0, 512, RngStream::new(0, i as u64)).unwrap();
            let v = s.series.values();
            assert!(v[511] - v[0] < 0.26 * 7.0);
        }
    }

    #[test]
    fn sampled_lgb_is_bounded_without_noise() {
        let cfg = GeneratorConfig { noise: NoiseLevel::Absolute(0.0), ..Default::default() };
        for i in 0..100 {
            let s = gen_lgb(&cfg, 256, RngStream::new(8, i)).unwrap();
            let BehaviorParams::Lgb { capacity, rate, midpoint, .. } = s.params else { unreachable!() };
            assert!((1.0..=10.0).contains(&capacity));
            assert!((0.001..=0.1).contains(&rate));
            assert!((64.0..=192.0).contains(&midpoint));
            let v = s.series.values();
            assert!(v.iter().all(|&x| x > 0.0 && x < capacity));
            assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn twdb_with_zero_trend_equals_pwb() {
        let cfg = GeneratorConfig {
            twdb_slope_range: Interval::new(0.0, 1e-300),
            twdb_intercept_range: Interval::new(0.0, 1e-300),
            ..Default::default()
        };
        for i in 0..20 {
            let stream = RngStream::new(12, i);
            let t = gen_twdb(&cfg, 300, stream).unwrap();
            let p = gen_pwb(&cfg, 300, stream).unwrap();
            for (a, b) in t.series.values().iter().zip(p.series.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn twdb_pure_ramp() {
        let s = twdb_from_params(1.0, 0.0, vec![], 0.0, 50, RngStream::new(0, 0)).unwrap();
        for (t, v) in s.series.values().iter().enumerate() {
            assert_eq!(*v, t as f64);
        }
    }

    #[test]
    fn twdb_slope_recovered_by_regression() {
        let cfg = GeneratorConfig { noise: NoiseLevel::Absolute(0.0), ..Default::default() };
        for i in 0..50 {
            let s = gen_twdb(&cfg, 400, RngStream::new(21, i)).unwrap();
            let BehaviorParams::Twdb { slope, intercept, waves, .. } = &s.params else { unreachable!() };
            let wave = render_waves(waves, 400);
            let y: Vec<f64> = s.series.values().iter().zip(&wave).map(|(a, b)| a - b).collect();
            let n = y.len() as f64;
            let tm = (n - 1.0) / 2.0;
            let ym = y.iter().sum::<f64>() / n;
            let sxy: f64 = y.iter().enumerate().map(|(t, v)| (t as f64 - tm) * (v - ym)).sum();
            let sxx: f64 = (0..y.len()).map(|t| (t as f64 - tm).powi(2)).sum();
            assert!((sxy / sxx - slope).abs() < 1e-9);
            assert!((ym - tm * slope - intercept).abs() < 1e-9);
        }
    }

    #[test]
    fn relative_noise_scales_with_signal() {
        let cfg = GeneratorConfig::default();
        let s = gen_pwb(&cfg, 1000, RngStream::new(4, 4)).unwrap();
        let BehaviorParams::Pwb { waves, noise_sigma } = &s.params else { unreachable!() };
        let clean = render_waves(waves, 1000);
        assert!((noise_sigma - 0.05 * series_std(&clean)).abs() < 1e-12);
    }
}
