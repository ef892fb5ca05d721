use rand::Rng;

use crate::error::{Error, Result};

/// Closed-open real interval `[lo, hi)` used for uniform priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.lo + (self.hi - self.lo) * rng.gen::<f64>()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Config(format!(
                "{name}: lower bound {} must be below upper bound {}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Observation noise level added by PWB, LGB and TWDB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// Multiple of the standard deviation of the noise-free signal.
    RelativeToSignal(f64),
    Absolute(f64),
}

impl NoiseLevel {
    pub fn sigma(&self, clean: &[f64]) -> f64 {
        match *self {
            NoiseLevel::Absolute(s) => s,
            NoiseLevel::RelativeToSignal(f) => f * population_std(clean),
        }
    }

    fn raw(&self) -> f64 {
        match *self {
            NoiseLevel::Absolute(s) | NoiseLevel::RelativeToSignal(s) => s,
        }
    }
}

/// Parametric stand-ins for the two spectral amplitude distributions used
/// by inverse-FFT synthesis. Phases are always `U(-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralPrior {
    /// `|A_m| = m^-gamma * exp(jitter * z)`, `gamma ~ U(gamma)`, `z ~ N(0,1)`.
    PowerLaw { gamma: Interval, jitter: f64 },
    /// `A_m ~ U(0, 1)` inside a random band of frequency indices, zero outside.
    FlatBand,
}

/// Probabilities of applying each augmentation, and their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub replicate_prob: f64,
    pub flip_prob: f64,
    pub smooth_prob: f64,
    pub perturb_prob: f64,
    /// Inclusive range of copies for period replication.
    pub replicate_copies: (usize, usize),
    /// Moving-average window for detrending; `None` picks `max(3, L/16)`.
    pub smooth_window: Option<usize>,
    /// Spike height in units of the series standard deviation.
    pub spike_scale: f64,
    /// Level shifts are drawn from `U(-shift_scale, shift_scale)` standard deviations.
    pub shift_scale: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            replicate_prob: 0.2,
            flip_prob: 0.2,
            smooth_prob: 0.2,
            perturb_prob: 0.2,
            replicate_copies: (2, 4),
            smooth_window: None,
            spike_scale: 3.0,
            shift_scale: 2.0,
        }
    }
}

impl AugmentConfig {
    pub fn disabled() -> Self {
        Self {
            replicate_prob: 0.0,
            flip_prob: 0.0,
            smooth_prob: 0.0,
            perturb_prob: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("replicate_prob", self.replicate_prob),
            ("flip_prob", self.flip_prob),
            ("smooth_prob", self.smooth_prob),
            ("perturb_prob", self.perturb_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        let (lo, hi) = self.replicate_copies;
        if lo < 1 || lo > hi {
            return Err(Error::Config(format!("replicate_copies ({lo}, {hi}) is not a valid range")));
        }
        if self.smooth_window == Some(0) {
            return Err(Error::Config("smooth_window must be positive".into()));
        }
        if self.spike_scale < 0.0 || self.shift_scale < 0.0 {
            return Err(Error::Config("perturbation scales must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One of the five generation behaviours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Behavior {
    Ifftb,
    Pwb,
    Rwb,
    Lgb,
    Twdb,
}

impl Behavior {
    pub const PERIODIC: [Behavior; 2] = [Behavior::Ifftb, Behavior::Pwb];
    pub const TREND: [Behavior; 3] = [Behavior::Rwb, Behavior::Lgb, Behavior::Twdb];

    pub fn hypothesis(self) -> Hypothesis {
        match self {
            Behavior::Ifftb | Behavior::Pwb => Hypothesis::Periodic,
            _ => Hypothesis::Trend,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Ifftb => "ifftb",
            Behavior::Pwb => "pwb",
            Behavior::Rwb => "rwb",
            Behavior::Lgb => "lgb",
            Behavior::Twdb => "twdb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "ifftb" => Behavior::Ifftb,
            "pwb" => Behavior::Pwb,
            "rwb" => Behavior::Rwb,
            "lgb" => Behavior::Lgb,
            "twdb" => Behavior::Twdb,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    Periodic,
    Trend,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Periodic => "periodic",
            Hypothesis::Trend => "trend",
        }
    }
}

/// Priors and switches for synthetic series generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Probability of the periodic hypothesis.
    pub alpha: f64,
    pub length: usize,
    pub pwb_amp_range: Interval,
    /// Range of `ln(period)` in samples; `None` means `[ln 11, ln 2L]`.
    pub pwb_log_period_range: Option<Interval>,
    pub pwb_k_max: usize,
    pub rwb_sigma: f64,
    pub lgb_log_capacity_range: Interval,
    pub lgb_log_rate_range: Interval,
    /// Logistic midpoint as a fraction of the length.
    pub lgb_midpoint_range: Interval,
    pub twdb_slope_range: Interval,
    pub twdb_intercept_range: Interval,
    pub noise: NoiseLevel,
    pub ifftb_priors: [SpectralPrior; 2],
    pub augment: AugmentConfig,
    /// Restricts behaviour choice; `None` allows all five.
    pub behaviors: Option<Vec<Behavior>>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            length: 1024,
            pwb_amp_range: Interval::new(0.5, 5.0),
            pwb_log_period_range: None,
            pwb_k_max: 8,
            rwb_sigma: 1.0,
            lgb_log_capacity_range: Interval::new(1f64.ln(), 10f64.ln()),
            lgb_log_rate_range: Interval::new(0.001f64.ln(), 0.1f64.ln()),
            lgb_midpoint_range: Interval::new(0.25, 0.75),
            twdb_slope_range: Interval::new(-1.0, 1.0),
            twdb_intercept_range: Interval::new(-10.0, 10.0),
            noise: NoiseLevel::RelativeToSignal(0.05),
            ifftb_priors: [
                SpectralPrior::PowerLaw {
                    gamma: Interval::new(0.5, 1.5),
                    jitter: 0.5,
                },
                SpectralPrior::FlatBand,
            ],
            augment: AugmentConfig::default(),
            behaviors: None,
        }
    }
}

impl GeneratorConfig {
    pub fn with_length(mut self, length: usize) -> Self {
        self.length = length;
        self
    }

    pub fn log_period_range(&self, len: usize) -> Interval {
        self.pwb_log_period_range
            .unwrap_or_else(|| Interval::new(11f64.ln(), (2.0 * len as f64).ln()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha = {} must lie in [0, 1]", self.alpha)));
        }
        if self.length < 2 {
            return Err(Error::Config(format!("length = {} must be at least 2", self.length)));
        }
        if self.pwb_k_max < 1 {
            return Err(Error::Config("pwb_k_max must be at least 1".into()));
        }
        if !(self.rwb_sigma > 0.0 && self.rwb_sigma.is_finite()) {
            return Err(Error::Config(format!("rwb_sigma = {} must be positive", self.rwb_sigma)));
        }
        let noise = self.noise.raw();
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::Config(format!("noise level {noise} must be nonnegative")));
        }
        self.pwb_amp_range.validate("pwb_amp_range")?;
        self.log_period_range(self.length).validate("pwb_log_period_range")?;
        self.lgb_log_capacity_range.validate("lgb_log_capacity_range")?;
        self.lgb_log_rate_range.validate("lgb_log_rate_range")?;
        self.lgb_midpoint_range.validate("lgb_midpoint_range")?;
        self.twdb_slope_range.validate("twdb_slope_range")?;
        self.twdb_intercept_range.validate("twdb_intercept_range")?;
        for prior in &self.ifftb_priors {
            if let SpectralPrior::PowerLaw { gamma, jitter } = prior {
                gamma.validate("ifftb gamma")?;
                if *jitter < 0.0 {
                    return Err(Error::Config("ifftb jitter must be nonnegative".into()));
                }
            }
        }
        if let Some(b) = &self.behaviors {
            if b.is_empty() {
                return Err(Error::Config("behavior restriction must not be empty".into()));
            }
        }
        self.augment.validate()
    }
}

pub(crate) fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
