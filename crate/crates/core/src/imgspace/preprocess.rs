use super::codec::{encode, soft_decode};
use super::{BinaryImage, SoftImage, SpaceParams};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Linear interpolation onto `new_len` points, mapping `[0, L-1]` affinely
/// onto `[0, new_len-1]` so both endpoints are preserved.
pub fn resample_linear(values: &[f64], new_len: usize) -> Vec<f64> {
    let len = values.len();
    if new_len == 0 {
        return Vec::new();
    }
    if len == 1 || new_len == 1 {
        return vec![values[0]; new_len];
    }
    let scale = (len - 1) as f64 / (new_len - 1) as f64;
    (0..new_len)
        .map(|i| {
            if i == new_len - 1 {
                return values[len - 1];
            }
            let x = i as f64 * scale;
            let a = (x.floor() as usize).min(len - 2);
            let frac = x - a as f64;
            values[a] + frac * (values[a + 1] - values[a])
        })
        .collect()
}

/// Gaussian blur kernel extent `(rows, cols)`, both odd. Without an
/// explicit sigma each axis uses `extent / 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSpec {
    pub rows: usize,
    pub cols: usize,
    pub sigma: Option<f64>,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self {
            rows: 31,
            cols: 31,
            sigma: None,
        }
    }
}

impl BlurSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, sigma: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_multiple_of(2) || self.cols.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "blur kernel ({}, {}) must have odd extents",
                self.rows, self.cols
            )));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("blur sigma {s} must be positive")));
            }
        }
        Ok(())
    }

    fn taps(&self, extent: usize) -> Vec<f64> {
        let sigma = self.sigma.unwrap_or(extent as f64 / 6.0);
        let r = (extent / 2) as i64;
        (-r..=r)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect()
    }
}

/// 1-D convolution with the kernel truncated and renormalized at borders.
fn convolve_truncated(input: &[f64], taps: &[f64], out: &mut [f64]) {
    let n = input.len() as i64;
    let r = (taps.len() / 2) as i64;
    for i in 0..n {
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (t, w) in taps.iter().enumerate() {
            let src = i + t as i64 - r;
            if (0..n).contains(&src) {
                acc += w * input[src as usize];
                wsum += w;
            }
        }
        out[i as usize] = acc / wsum;
    }
}

/// Separable 2-D Gaussian blur of a column-major `c x L x h` buffer.
pub fn gaussian_blur(data: &mut [f64], channels: usize, len: usize, h: usize, spec: &BlurSpec) -> Result<()> {
    spec.validate()?;
    if spec.rows > 1 {
        let taps = spec.taps(spec.rows);
        let mut tmp = vec![0.0; h];
        for col in data.chunks_mut(h) {
            convolve_truncated(col, &taps, &mut tmp);
            col.copy_from_slice(&tmp);
        }
    }
    if spec.cols > 1 {
        let taps = spec.taps(spec.cols);
        let mut line = vec![0.0; len];
        let mut tmp = vec![0.0; len];
        for ch in 0..channels {
            for j in 0..h {
                for k in 0..len {
                    line[k] = data[(ch * len + k) * h + j];
                }
                convolve_truncated(&line, &taps, &mut tmp);
                for k in 0..len {
                    data[(ch * len + k) * h + j] = tmp[k];
                }
            }
        }
    }
    Ok(())
}

/// Blurs a one-hot image and renormalizes every column to unit mass.
pub fn preprocess(image: &BinaryImage, blur: &BlurSpec) -> Result<SoftImage> {
    blur.validate()?;
    let soft = image.to_soft()?;
    let (params, channels, len) = soft.shape();
    let mut data = soft.columns().to_vec();
    gaussian_blur(&mut data, channels, len, params.h, blur)?;
    SoftImage::normalized(params, channels, len, data)
}

/// Numerical series to soft image and back: optional 2x temporal
/// interpolation before encoding, optional blur after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePipeline {
    pub params: SpaceParams,
    pub interpolate: bool,
    pub blur: Option<BlurSpec>,
}

impl ImagePipeline {
    pub fn new(params: SpaceParams) -> Self {
        Self {
            params,
            interpolate: false,
            blur: None,
        }
    }

    pub fn with_interpolation(mut self, on: bool) -> Self {
        self.interpolate = on;
        self
    }

    pub fn with_blur(mut self, blur: Option<BlurSpec>) -> Self {
        self.blur = blur;
        self
    }

    pub fn upsample(&self, series: &TimeSeries) -> Result<TimeSeries> {
        if !self.interpolate {
            return Ok(series.clone());
        }
        let channels = series
            .channels()
            .iter()
            .map(|ch| resample_linear(ch, 2 * ch.len()))
            .collect();
        TimeSeries::from_channels(channels)
    }

    pub fn encode(&self, series: &TimeSeries) -> Result<SoftImage> {
        let img = encode(&self.upsample(series)?, self.params)?;
        match &self.blur {
            Some(b) => preprocess(&img, b),
            None => img.to_soft(),
        }
    }

    /// Soft-decodes and, if the pipeline interpolated, resamples back to
    /// `original_len`.
    pub fn decode(&self, image: &SoftImage, original_len: usize) -> Result<TimeSeries> {
        let s = soft_decode(image);
        if !self.interpolate {
            return Ok(s);
        }
        let channels = s
            .channels()
            .iter()
            .map(|ch| resample_linear(ch, original_len))
            .collect();
        TimeSeries::from_channels(channels)
    }
}
