//! Expected encode/decode reconstruction error under Gaussian inputs: the
//! analytic upper bound, a Monte-Carlo estimate, and the maximum scale that
//! minimizes the bound.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::imgspace::{active_row, bin_center, SpaceParams};
use crate::rng::RngStream;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail `1 - Phi(x)`, computed without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `phi(x) - x Q(x) = E[(Z - x)+]` for standard normal `Z`.
///
/// Above `x = 8` the two terms agree to ~14 digits, so the Mills-ratio
/// series `phi(x) sum_n (-1)^n (2n+1)!! / x^(2n+2)` is used, truncated
/// well before its smallest term.
pub fn tail_excess(x: f64) -> f64 {
    if x > 8.0 {
        let r = 1.0 / (x * x);
        let mut term = r;
        let mut series = 0.0;
        for n in 0..16 {
            series += term;
            term *= -((2 * n + 3) as f64) * r;
        }
        return normal_pdf(x) * series;
    }
    normal_pdf(x) - x * normal_sf(x)
}

/// Inputs of the bound. `k` is the variance of the Gaussian input, `c` the
/// channel count and `t` the series length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeBoundInput {
    pub h: usize,
    pub ms: f64,
    pub k: f64,
    pub c: usize,
    pub t: usize,
}

impl SeBoundInput {
    pub fn new(h: usize, ms: f64, k: f64, c: usize, t: usize) -> Result<Self> {
        let s = Self { h, ms, k, c, t };
        s.validate()?;
        Ok(s)
    }

    /// Single channel, single time step.
    pub fn unit(h: usize, ms: f64, k: f64) -> Result<Self> {
        Self::new(h, ms, k, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        SpaceParams::new(self.h, self.ms)?;
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("variance scale k = {} must be positive", self.k)));
        }
        if self.c == 0 || self.t == 0 {
            return Err(Error::Config("c and t must be positive".into()));
        }
        Ok(())
    }
}

/// `c t [ (MS/h)(Phi_k(MS) - Phi_k(-MS)) + sqrt(2k/pi) e^{-MS^2/2k} - 2 MS (1 - Phi_k(MS)) ]`
/// with `Phi_k(x) = Phi(x / sqrt k)`. The last two terms are evaluated as
/// `2 sqrt(k) tail_excess(MS / sqrt k)`.
pub fn se_bound(input: &SeBoundInput) -> f64 {
    let x = input.ms / input.k.sqrt();
    let inside = 1.0 - 2.0 * normal_sf(x);
    let quantization = input.ms / input.h as f64 * inside;
    let truncation = 2.0 * input.k.sqrt() * tail_excess(x);
    (input.c * input.t) as f64 * (quantization + truncation)
}

/// Truncation-only part of the unit-cell bound, the `h -> inf` limit.
pub fn truncation_floor(ms: f64, k: f64) -> f64 {
    2.0 * k.sqrt() * tail_excess(ms / k.sqrt())
}

/// Unit-cell bound (`k = 1, c = t = 1`) at each resolution.
pub fn bound_convergence_profile(ms: f64, h_list: &[usize]) -> Result<Vec<f64>> {
    h_list
        .iter()
        .map(|&h| Ok(se_bound(&SeBoundInput::unit(h, ms, 1.0)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

const MC_CHUNK: usize = 1 << 16;

/// Monte-Carlo mean of `|decode(encode(s)) - s|` for `s ~ N(0, k)`.
///
/// Samples are drawn in fixed-size chunks, each from its own child stream,
/// so the estimate is identical under sequential and parallel execution.
pub fn mc_system_error(params: SpaceParams, k: f64, n: usize, stream: RngStream, exec: Exec) -> Result<McEstimate> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Config(format!("variance scale k = {k} must be positive")));
    }
    let sd = k.sqrt();
    let chunks = n.div_ceil(MC_CHUNK);
    let partial = exec.map_indexed(chunks, |i| {
        let count = MC_CHUNK.min(n - i * MC_CHUNK);
        let mut rng = stream.child(i as u64).rng();
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..count {
            let z: f64 = rng.sample(StandardNormal);
            let s = sd * z;
            let e = (bin_center(active_row(s, params), params) - s).abs();
            sum += e;
            sq += e * e;
        }
        (sum, sq)
    });
    let (sum, sq) = partial.iter().fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        n,
    })
}

/// Which terms of the stationarity condition carry the variance scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Every `Phi` and the exponential are evaluated at `MS / sqrt k`; the
    /// root is the exact minimizer of [`se_bound`].
    #[default]
    Consistent,
    /// Quantization mass `Phi(MS) - Phi(-MS)` and `e^{-MS^2/2}` stay
    /// unscaled while `2 Phi(MS/sqrt k)` and `sqrt(2/(pi k))` are scaled.
    Mixed,
}

impl Scaling {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Scaling::Consistent),
            "mixed" => Ok(Scaling::Mixed),
            other => Err(Error::Config(format!("unknown scaling '{other}' (consistent, mixed)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scaling::Consistent => "consistent",
            Scaling::Mixed => "mixed",
        }
    }
}

/// Left-hand side of the stationarity condition
/// `(1/h)(Phi(m/sqrt k) - Phi(-m/sqrt k)) - 2 + 2 Phi(m/sqrt k) + (m/h) sqrt(2/(pi k)) e^{-m^2/(2k)}`.
pub fn ms_residual(m: f64, h: usize, k: f64, scaling: Scaling) -> f64 {
    let hf = h as f64;
    let x = m / k.sqrt();
    let (mass, expo) = match scaling {
        Scaling::Consistent => (1.0 - 2.0 * normal_sf(x), (-0.5 * x * x).exp()),
        Scaling::Mixed => (1.0 - 2.0 * normal_sf(m), (-0.5 * m * m).exp()),
    };
    mass / hf - 2.0 * normal_sf(x) + m / hf * (2.0 / (PI * k)).sqrt() * expo
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalMs {
    pub h: usize,
    pub k: f64,
    pub ms: f64,
    pub residual: f64,
}

pub const RESIDUAL_TOL: f64 = 1e-10;

/// Root of [`ms_residual`] on `[1e-3, sqrt(k (h + 2)) + 10]` by bisection
/// with secant refinement.
pub fn optimal_ms(h: usize, k: f64, scaling: Scaling) -> Result<OptimalMs> {
    SeBoundInput::unit(h, 1.0, k)?;
    let f = |m: f64| ms_residual(m, h, k, scaling);
    let mut lo = 1e-3;
    let mut hi = (k * (h as f64 + 2.0)).sqrt() + 10.0;
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "optimal MS not bracketed for h = {h}, k = {k}: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    // coarse bisection, then secant steps kept inside the bracket
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (mut a, mut fa) = (lo, flo);
    let (mut b, mut fb) = (hi, f(hi));
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..100 {
        if best.1.abs() < RESIDUAL_TOL * 1e-3 || (b - a).abs() < 1e-15 {
            break;
        }
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        (a, fa, b, fb) = (b, fb, x, fx);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
    }
    if best.1.abs() >= RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "optimal MS for h = {h}, k = {k} stalled at residual {:e}",
            best.1
        )));
    }
    Ok(OptimalMs {
        h,
        k,
        ms: best.0,
        residual: best.1,
    })
}

/// Resolutions and variance scales of the reference optimal-MS table.
pub const REFERENCE_H: [usize; 5] = [32, 64, 128, 256, 512];
pub const REFERENCE_K: [f64; 3] = [1.0, 1.5, 2.0];

/// Published optimal MS values, indexed `[k][h]` over the grids above.
pub const REFERENCE_MS: [[f64; 5]; 3] = [
    [2.10, 2.38, 2.64, 2.88, 3.09],
    [2.62, 2.95, 3.26, 3.53, 3.79],
    [3.03, 3.41, 3.76, 4.08, 4.38],
];

/// Solves every `(h, k)` pair, `k` outermost.
pub fn solve_grid(h_list: &[usize], k_list: &[f64], scaling: Scaling) -> Result<Vec<OptimalMs>> {
    let mut out = Vec::with_capacity(h_list.len() * k_list.len());
    for &k in k_list {
        for &h in h_list {
            out.push(optimal_ms(h, k, scaling)?);
        }
    }
    Ok(out)
}

/// `h,k,ms_star,residual` table.
pub fn grid_csv(rows: &[OptimalMs]) -> String {
    let mut s = String::from("h,k,ms_star,residual\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6},{:.3e}", r.h, r.k, r.ms, r.residual);
    }
    s
}
