use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::{MissingMask, Observed, TimeSeries};

/// Robustness scenario applied to a test series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSpec {
    None,
    /// Adds `N(0, std^2)` to every point.
    GaussianNoise { std: f64 },
    /// Adds `A sin(2 pi f t + phi)` with random phase. Unset amplitude is
    /// `0.3` times the channel std; unset frequency (cycles per sample) is
    /// twice the dominant FFT frequency.
    Harmonic { amplitude: Option<f64>, frequency: Option<f64> },
    /// Marks each point missing independently with probability `p`.
    Missing { p: f64 },
}

pub const HARMONIC_AMPLITUDE_FACTOR: f64 = 0.3;

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            PerturbationSpec::GaussianNoise { std } if !(std >= 0.0 && std.is_finite()) => {
                bad(format!("noise std {std} must be nonnegative"))
            }
            PerturbationSpec::Missing { p } if !(0.0..=1.0).contains(&p) => {
                bad(format!("missing probability {p} must lie in [0, 1]"))
            }
            PerturbationSpec::Harmonic { amplitude, frequency } => {
                if amplitude.is_some_and(|a| !(a >= 0.0 && a.is_finite())) {
                    return bad("harmonic amplitude must be nonnegative".into());
                }
                if frequency.is_some_and(|f| !(f > 0.0 && f.is_finite())) {
                    return bad("harmonic frequency must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Parses `none`, `gn:<std>`, `harmonic[:<amp>[:<freq>]]` or
    /// `dm:<p>` (`missing:<p>` also accepted).
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad number '{v}' in perturbation '{s}'")))
        };
        let auto = |v: &str| -> Result<Option<f64>> { if v == "auto" { Ok(None) } else { num(v).map(Some) } };
        let spec = match parts.as_slice() {
            ["none"] => PerturbationSpec::None,
            ["gn", v] => PerturbationSpec::GaussianNoise { std: num(v)? },
            ["harmonic"] => PerturbationSpec::Harmonic { amplitude: None, frequency: None },
            ["harmonic", a] => PerturbationSpec::Harmonic { amplitude: auto(a)?, frequency: None },
            ["harmonic", a, f] => PerturbationSpec::Harmonic { amplitude: auto(a)?, frequency: auto(f)? },
            ["dm" | "missing", v] => PerturbationSpec::Missing { p: num(v)? },
            _ => {
                return Err(Error::Config(format!(
                    "unknown perturbation '{s}' (none, gn:<std>, harmonic[:<amp>[:<freq>]], dm:<p>)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |v| v.to_string());
        match *self {
            PerturbationSpec::None => write!(f, "none"),
            PerturbationSpec::GaussianNoise { std } => write!(f, "gn:{std}"),
            PerturbationSpec::Harmonic { amplitude, frequency } => {
                write!(f, "harmonic:{}:{}", opt(amplitude), opt(frequency))
            }
            PerturbationSpec::Missing { p } => write!(f, "dm:{p}"),
        }
    }
}

/// Frequency (cycles per sample) of the largest non-DC FFT bin.
pub fn dominant_frequency(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = 1;
    for m in 1..=n / 2 {
        if buf[m].norm() > buf[best].norm() {
            best = m;
        }
    }
    best as f64 / n as f64
}

pub fn perturb(series: &TimeSeries, spec: &PerturbationSpec, stream: RngStream) -> Result<Observed> {
    spec.validate()?;
    let mut rng = stream.rng();
    match *spec {
        PerturbationSpec::None => Ok(Observed::complete(series.clone())),
        PerturbationSpec::GaussianNoise { std } => {
            let channels = series
                .channels()
                .iter()
                .map(|ch| {
                    ch.iter()
                        .map(|v| v + std * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            Ok(Observed::complete(TimeSeries::from_channels(channels)?))
        }
        PerturbationSpec::Harmonic { amplitude, frequency } => {
            let channels = series
                .channels()
                .iter()
                .map(|ch| {
                    let a = amplitude.unwrap_or_else(|| HARMONIC_AMPLITUDE_FACTOR * population_std(ch));
                    let f = frequency.unwrap_or_else(|| (2.0 * dominant_frequency(ch)).min(0.5));
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    ch.iter()
                        .enumerate()
                        .map(|(t, v)| v + a * (2.0 * PI * f * t as f64 + phase).sin())
                        .collect()
                })
                .collect();
            Ok(Observed::complete(TimeSeries::from_channels(channels)?))
        }
        PerturbationSpec::Missing { p } => {
            let flags: Vec<Vec<bool>> = series
                .channels()
                .iter()
                .map(|ch| ch.iter().map(|_| rng.gen_bool(p)).collect())
                .collect();
            let values = series
                .channels()
                .iter()
                .zip(&flags)
                .map(|(ch, fl)| {
                    let raw: Vec<Option<f64>> = ch.iter().zip(fl).map(|(v, m)| (!m).then_some(*v)).collect();
                    crate::series::carry_forward(&raw)
                })
                .collect();
            let mask = MissingMask::new(flags);
            Ok(Observed {
                series: TimeSeries::from_channels(values)?,
                missing: mask.any().then_some(mask),
            })
        }
    }
}

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}
