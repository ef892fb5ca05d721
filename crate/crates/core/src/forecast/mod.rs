//! Forecaster contract over both spaces and the built-in baselines.
//!
//! An image-space forecaster receives an image whose columns at or after
//! the lookback length are zeroed by a [`TemporalMask`] and returns a
//! full-length soft image: visible columns pass through, predicted columns
//! are distributions over rows.

mod baselines;

pub use baselines::{autocorrelation, detect_period, linear_trend, persistence, seasonal_naive, Baseline, Period};

use crate::error::{Error, Result};
use crate::imgspace::{
    decode_with_missing, denormalize, encode, encode_masked, normalize, preprocess, soft_decode, BinaryImage,
    BlurSpec, SoftImage, SpaceParams,
};
use crate::series::{MissingMask, TimeSeries};

/// Prefix-visible mask: `bits[k]` is true for `k < T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalMask {
    bits: Vec<bool>,
    lookback: usize,
}

pub fn make_mask(len: usize, lookback: usize) -> Result<TemporalMask> {
    if lookback == 0 || lookback > len {
        return Err(Error::Input(format!("lookback {lookback} must lie in [1, {len}]")));
    }
    Ok(TemporalMask {
        bits: (0..len).map(|k| k < lookback).collect(),
        lookback,
    })
}

impl TemporalMask {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.bits.len() - self.lookback
    }

    pub fn apply(&self, image: &BinaryImage) -> Result<BinaryImage> {
        if image.len() != self.len() {
            return Err(Error::Shape {
                expected: format!("image length {}", self.len()),
                got: format!("{}", image.len()),
            });
        }
        Ok(image.masked(self.lookback))
    }
}

/// Largest lookback and horizon a model accepts; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capability {
    pub max_lookback: Option<usize>,
    pub max_horizon: Option<usize>,
}

impl Capability {
    pub const UNBOUNDED: Capability = Capability {
        max_lookback: None,
        max_horizon: None,
    };

    pub fn check(&self, id: &str, lookback: usize, horizon: usize) -> Result<()> {
        if let Some(m) = self.max_lookback.filter(|m| lookback > *m) {
            return Err(Error::Capability(format!("{id}: lookback {lookback} exceeds {m}")));
        }
        if let Some(m) = self.max_horizon.filter(|m| horizon > *m) {
            return Err(Error::Capability(format!("{id}: horizon {horizon} exceeds {m}")));
        }
        Ok(())
    }
}

/// Image-space variants accept the operating range of the image models.
pub const IMAGE_MAX_LOOKBACK: usize = 512;
pub const IMAGE_MAX_HORIZON: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Predicts directly on numbers.
    Numerical(Baseline),
    /// Decodes the visible columns, predicts, and encodes the prediction.
    Image(Baseline, SpaceParams),
    /// Returns the true future; only usable where the truth is known.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterHandle {
    pub id: String,
    pub capability: Capability,
    pub kind: ModelKind,
}

/// One evaluation window of a single channel.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    /// Lookback values, missing points already carried forward.
    pub lookback: &'a [f64],
    pub missing: Option<&'a [bool]>,
    pub horizon: usize,
    /// The true continuation, used only by the oracle.
    pub truth: &'a [f64],
}

impl ForecasterHandle {
    pub fn space(&self) -> &'static str {
        match self.kind {
            ModelKind::Numerical(_) => "numerical",
            ModelKind::Image(..) => "image",
            ModelKind::Oracle => "numerical",
        }
    }

    /// Forecast of one numerical window. Image variants normalize the
    /// lookback with its own statistics, encode it (missing points become
    /// all-zero columns), mask the horizon, forecast in image space and
    /// soft-decode the prediction back to the original scale.
    pub fn predict(&self, w: &Window) -> Result<Vec<f64>> {
        self.capability.check(&self.id, w.lookback.len(), w.horizon)?;
        match self.kind {
            ModelKind::Numerical(b) => Ok(b.predict(w.lookback, w.horizon)),
            ModelKind::Oracle => {
                if w.truth.len() < w.horizon {
                    return Err(Error::Capability(format!("{}: true future unavailable", self.id)));
                }
                Ok(w.truth[..w.horizon].to_vec())
            }
            ModelKind::Image(_, params) => {
                let t = w.lookback.len();
                let mut full = w.lookback.to_vec();
                full.resize(t + w.horizon, *w.lookback.last().unwrap_or(&0.0));
                let series = TimeSeries::univariate(full)?;
                let (z, stats) = normalize(&series, t)?;
                let img = match w.missing {
                    Some(m) => {
                        let mut flags = m.to_vec();
                        flags.resize(t + w.horizon, false);
                        encode_masked(&z, &MissingMask::new(vec![flags]), params)?
                    }
                    None => encode(&z, params)?,
                };
                let mask = make_mask(t + w.horizon, t)?;
                let out = forecast(self, &img, &mask, None)?;
                let decoded = denormalize(&soft_decode(&out), &stats)?;
                Ok(decoded.values()[t..].to_vec())
            }
        }
    }
}

/// Fills the masked columns of `image`.
///
/// Visible columns come back unchanged (blurred when `blur` is given,
/// using only the visible prefix); predicted columns are one-hot encodings
/// of the model's forecast, saturating at `±MS`.
pub fn forecast(model: &ForecasterHandle, image: &BinaryImage, mask: &TemporalMask, blur: Option<&BlurSpec>) -> Result<SoftImage> {
    if image.len() != mask.len() {
        return Err(Error::Shape {
            expected: format!("image length {}", mask.len()),
            got: format!("{}", image.len()),
        });
    }
    let t = mask.lookback();
    let horizon = mask.horizon();
    model.capability.check(&model.id, t, horizon)?;
    let baseline = match model.kind {
        ModelKind::Image(b, _) | ModelKind::Numerical(b) => b,
        ModelKind::Oracle => {
            return Err(Error::Capability(format!("{}: needs the true future, not an image", model.id)))
        }
    };
    let params = image.params();
    let visible = truncate(image, t);
    let (lookback, _) = decode_with_missing(&visible)?;
    let predicted: Vec<Vec<f64>> = lookback
        .channels()
        .iter()
        .map(|ch| baseline.predict(ch, horizon))
        .collect();
    let pred_img = encode(&TimeSeries::from_channels(predicted)?, params)?;

    let head = match blur {
        Some(b) if !visible.has_missing() => preprocess(&visible, b)?,
        _ => soft_with_empty_columns(&visible),
    };
    let h = params.h;
    let mut data = Vec::with_capacity(image.n_channels() * image.len() * h);
    for ch in 0..image.n_channels() {
        for k in 0..t {
            data.extend_from_slice(head.column(ch, k));
        }
        for k in 0..horizon {
            let mut col = vec![0.0; h];
            col[pred_img.row(ch, k).expect("encoded column") as usize - 1] = 1.0;
            data.extend_from_slice(&col);
        }
    }
    Ok(SoftImage::from_parts(params, image.n_channels(), image.len(), data))
}

/// Visible columns keep their one-hot state; all-zero (missing) columns
/// stay all-zero so they pass through as received.
fn soft_with_empty_columns(image: &BinaryImage) -> SoftImage {
    let h = image.params().h;
    let mut data = vec![0.0; image.n_channels() * image.len() * h];
    for ch in 0..image.n_channels() {
        for (k, r) in image.channel_rows(ch).iter().enumerate() {
            if let Some(j) = r {
                data[(ch * image.len() + k) * h + *j as usize - 1] = 1.0;
            }
        }
    }
    SoftImage::from_parts(image.params(), image.n_channels(), image.len(), data)
}

fn truncate(image: &BinaryImage, len: usize) -> BinaryImage {
    let rows = (0..image.n_channels())
        .flat_map(|ch| image.channel_rows(ch)[..len].to_vec())
        .collect();
    BinaryImage::from_rows(image.params(), image.n_channels(), len, rows)
}

/// Numerical and image-space variants of every baseline, in a fixed order.
pub fn register_baselines() -> Vec<ForecasterHandle> {
    register_baselines_with(SpaceParams::default())
}

pub fn register_baselines_with(params: SpaceParams) -> Vec<ForecasterHandle> {
    let mut out = Vec::new();
    for b in Baseline::ALL {
        out.push(ForecasterHandle {
            id: b.name().to_string(),
            capability: Capability::UNBOUNDED,
            kind: ModelKind::Numerical(b),
        });
    }
    for b in Baseline::ALL {
        out.push(ForecasterHandle {
            id: format!("{}-img", b.name()),
            capability: Capability {
                max_lookback: Some(IMAGE_MAX_LOOKBACK),
                max_horizon: Some(IMAGE_MAX_HORIZON),
            },
            kind: ModelKind::Image(b, params),
        });
    }
    out
}

/// Immutable id lookup over the baselines plus the oracle.
#[derive(Debug, Clone)]
pub struct Registry {
    models: Vec<ForecasterHandle>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new(SpaceParams::default())
    }
}

impl Registry {
    pub fn new(params: SpaceParams) -> Self {
        let mut models = register_baselines_with(params);
        models.push(ForecasterHandle {
            id: "oracle".into(),
            capability: Capability::UNBOUNDED,
            kind: ModelKind::Oracle,
        });
        Self { models }
    }

    pub fn models(&self) -> &[ForecasterHandle] {
        &self.models
    }

    pub fn ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&ForecasterHandle> {
        self.models.iter().find(|m| m.id == id).ok_or_else(|| Error::UnknownModel {
            id: id.to_string(),
            registered: self.ids().join(", "),
        })
    }

    /// `id  space  max_lookback  max_horizon` table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<22} {:<10} {:>12} {:>12}\n", "id", "space", "max_lookback", "max_horizon");
        let fmt = |v: Option<usize>| v.map_or_else(|| "unbounded".to_string(), |v| v.to_string());
        for m in &self.models {
            s.push_str(&format!(
                "{:<22} {:<10} {:>12} {:>12}\n",
                m.id,
                m.space(),
                fmt(m.capability.max_lookback),
                fmt(m.capability.max_horizon)
            ));
        }
        s
    }
}
