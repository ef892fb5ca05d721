//! Binary image representation of time series.
//!
//! A `c x L` series maps to a `c x h x L` grid where each column holds
//! exactly one active row: the value bin of that sample. Row `j` (1-based)
//! covers `[(j-1)w - MS, jw - MS)` with `w = 2 MS / h`; values beyond `±MS`
//! saturate into the boundary rows.

mod codec;
mod metric;
mod normalize;
pub mod pgm;
mod preprocess;

pub use codec::{active_row, bin_center, decode, decode_with_missing, encode, encode_masked, soft_decode};
pub use metric::{emd, emd_column, kld, loss, DEFAULT_KLD_EPS, DEFAULT_LOSS_ALPHA};
pub use normalize::{denormalize, normalize, NormStats, STD_FLOOR};
pub use preprocess::{gaussian_blur, preprocess, resample_linear, BlurSpec, ImagePipeline};

use crate::error::{Error, Result};

/// Resolution `h` and maximum scale `MS` of the image space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    pub h: usize,
    pub ms: f64,
}

impl Default for SpaceParams {
    fn default() -> Self {
        Self { h: 128, ms: 3.5 }
    }
}

impl SpaceParams {
    pub fn new(h: usize, ms: f64) -> Result<Self> {
        let p = Self { h, ms };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h < 2 {
            return Err(Error::Config(format!("resolution h = {} must be at least 2", self.h)));
        }
        if !(self.ms > 0.0 && self.ms.is_finite()) {
            return Err(Error::Config(format!("maximum scale MS = {} must be positive", self.ms)));
        }
        if self.h > u32::MAX as usize {
            return Err(Error::Config("resolution too large".into()));
        }
        Ok(())
    }

    /// `2 MS / h`.
    pub fn bin_width(&self) -> f64 {
        2.0 * self.ms / self.h as f64
    }
}

/// One-hot-per-column binary grid of shape `c x h x L`.
///
/// Stored as the active row of each column (1-based). `None` marks an
/// all-zero column, which only arises from missing-data encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    params: SpaceParams,
    channels: usize,
    len: usize,
    rows: Vec<Option<u32>>,
}

impl BinaryImage {
    pub(crate) fn from_rows(params: SpaceParams, channels: usize, len: usize, rows: Vec<Option<u32>>) -> Self {
        debug_assert_eq!(rows.len(), channels * len);
        Self {
            params,
            channels,
            len,
            rows,
        }
    }

    /// Builds an image from a dense `c x h x L` bit grid (index
    /// `(ch * h + (j-1)) * L + k`). All-zero columns are accepted only when
    /// `allow_missing` is set.
    pub fn from_grid(params: SpaceParams, channels: usize, len: usize, bits: &[u8], allow_missing: bool) -> Result<Self> {
        params.validate()?;
        let h = params.h;
        if bits.len() != channels * h * len {
            return Err(Error::Shape {
                expected: format!("{} cells", channels * h * len),
                got: format!("{} cells", bits.len()),
            });
        }
        let mut rows = Vec::with_capacity(channels * len);
        for ch in 0..channels {
            for k in 0..len {
                let mut active = None;
                for j in 0..h {
                    match bits[(ch * h + j) * len + k] {
                        0 => {}
                        1 => {
                            if active.is_some() {
                                return Err(Error::Structure {
                                    channel: ch,
                                    column: k,
                                    reason: "more than one active row".into(),
                                });
                            }
                            active = Some(j as u32 + 1);
                        }
                        v => {
                            return Err(Error::Structure {
                                channel: ch,
                                column: k,
                                reason: format!("cell value {v} is not binary"),
                            })
                        }
                    }
                }
                if active.is_none() && !allow_missing {
                    return Err(Error::Structure {
                        channel: ch,
                        column: k,
                        reason: "no active row".into(),
                    });
                }
                rows.push(active);
            }
        }
        Ok(Self::from_rows(params, channels, len, rows))
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Active row (1-based) of a column, `None` for an all-zero column.
    pub fn row(&self, channel: usize, column: usize) -> Option<u32> {
        self.rows[channel * self.len + column]
    }

    pub fn channel_rows(&self, channel: usize) -> &[Option<u32>] {
        &self.rows[channel * self.len..(channel + 1) * self.len]
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().any(Option::is_none)
    }

    /// Cell value at `(channel, row j (1-based), column)`.
    pub fn get(&self, channel: usize, j: usize, column: usize) -> u8 {
        u8::from(self.row(channel, column) == Some(j as u32))
    }

    /// Dense bit grid, index `(ch * h + (j-1)) * L + k`.
    pub fn to_grid(&self) -> Vec<u8> {
        let h = self.params.h;
        let mut bits = vec![0u8; self.channels * h * self.len];
        for ch in 0..self.channels {
            for k in 0..self.len {
                if let Some(j) = self.row(ch, k) {
                    bits[(ch * h + j as usize - 1) * self.len + k] = 1;
                }
            }
        }
        bits
    }

    /// Zeroes every column at or after `visible` (the temporal mask).
    pub fn masked(&self, visible: usize) -> BinaryImage {
        let mut out = self.clone();
        for ch in 0..self.channels {
            for k in visible.min(self.len)..self.len {
                out.rows[ch * self.len + k] = None;
            }
        }
        out
    }

    /// One-hot probability columns. Fails on all-zero columns.
    pub fn to_soft(&self) -> Result<SoftImage> {
        let h = self.params.h;
        let mut data = vec![0.0; self.channels * self.len * h];
        for ch in 0..self.channels {
            for k in 0..self.len {
                let j = self.row(ch, k).ok_or_else(|| Error::Structure {
                    channel: ch,
                    column: k,
                    reason: "all-zero column has no distribution".into(),
                })?;
                data[(ch * self.len + k) * h + j as usize - 1] = 1.0;
            }
        }
        Ok(SoftImage::from_parts(self.params, self.channels, self.len, data))
    }

    /// Closed-form EMD between binary images: the sum of active-row
    /// distances, in row units.
    pub fn emd(&self, other: &BinaryImage) -> Result<f64> {
        check_same_shape(
            (self.params, self.channels, self.len),
            (other.params, other.channels, other.len),
        )?;
        let mut total = 0.0;
        for (i, (a, b)) in self.rows.iter().zip(&other.rows).enumerate() {
            match (a, b) {
                (Some(a), Some(b)) => total += (*a as f64 - *b as f64).abs(),
                _ => {
                    return Err(Error::Structure {
                        channel: i / self.len,
                        column: i % self.len,
                        reason: "all-zero column has no distribution".into(),
                    })
                }
            }
        }
        Ok(total)
    }
}

/// Nonnegative grid of shape `c x h x L` whose columns are probability
/// distributions over rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftImage {
    params: SpaceParams,
    channels: usize,
    len: usize,
    // column-major: (ch * len + k) * h + (j - 1)
    data: Vec<f64>,
}

/// Column sums must match 1 within this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

impl SoftImage {
    pub(crate) fn from_parts(params: SpaceParams, channels: usize, len: usize, data: Vec<f64>) -> Self {
        Self {
            params,
            channels,
            len,
            data,
        }
    }

    /// Validates nonnegativity and column normalization. `columns` is in
    /// column-major order: column `(ch, k)` occupies `[(ch*L + k)*h ..][..h]`.
    pub fn from_columns(params: SpaceParams, channels: usize, len: usize, columns: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let img = Self::from_parts(params, channels, len, columns);
        img.check_shape()?;
        for ch in 0..channels {
            for k in 0..len {
                let col = img.column(ch, k);
                if col.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Structure {
                        channel: ch,
                        column: k,
                        reason: "negative or non-finite mass".into(),
                    });
                }
                let s: f64 = col.iter().sum();
                if (s - 1.0).abs() > COLUMN_SUM_TOL {
                    return Err(Error::Structure {
                        channel: ch,
                        column: k,
                        reason: format!("column sums to {s}, not 1"),
                    });
                }
            }
        }
        Ok(img)
    }

    /// Scales every column to unit sum. Fails on negative mass or an
    /// all-zero column.
    pub fn normalized(params: SpaceParams, channels: usize, len: usize, mut columns: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let h = params.h;
        if columns.len() != channels * len * h {
            return Err(Error::Shape {
                expected: format!("{} cells", channels * len * h),
                got: format!("{} cells", columns.len()),
            });
        }
        for (i, col) in columns.chunks_mut(h).enumerate() {
            let s: f64 = col.iter().sum();
            if !(s > 0.0 && s.is_finite()) || col.iter().any(|v| *v < 0.0) {
                return Err(Error::Structure {
                    channel: i / len,
                    column: i % len,
                    reason: "column cannot be normalized".into(),
                });
            }
            col.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self::from_parts(params, channels, len, columns))
    }

    fn check_shape(&self) -> Result<()> {
        let expected = self.channels * self.len * self.params.h;
        if self.data.len() != expected {
            return Err(Error::Shape {
                expected: format!("{expected} cells"),
                got: format!("{} cells", self.data.len()),
            });
        }
        Ok(())
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Column `(channel, k)` as a length-`h` slice; index `j-1` is row `j`.
    pub fn column(&self, channel: usize, column: usize) -> &[f64] {
        let h = self.params.h;
        let start = (channel * self.len + column) * h;
        &self.data[start..start + h]
    }

    /// Value at `(channel, row j (1-based), column)`.
    pub fn get(&self, channel: usize, j: usize, column: usize) -> f64 {
        self.column(channel, column)[j - 1]
    }

    pub fn columns(&self) -> &[f64] {
        &self.data
    }

    /// Row index (1-based) of the largest mass in a column; ties go to the
    /// lower row.
    pub fn argmax_row(&self, channel: usize, column: usize) -> usize {
        let col = self.column(channel, column);
        let mut best = 0;
        for (j, v) in col.iter().enumerate() {
            if *v > col[best] {
                best = j;
            }
        }
        best + 1
    }

    /// Hardens every column to its argmax row.
    pub fn harden(&self) -> BinaryImage {
        let rows = (0..self.channels)
            .flat_map(|ch| (0..self.len).map(move |k| (ch, k)))
            .map(|(ch, k)| Some(self.argmax_row(ch, k) as u32))
            .collect();
        BinaryImage::from_rows(self.params, self.channels, self.len, rows)
    }

    pub(crate) fn shape(&self) -> (SpaceParams, usize, usize) {
        (self.params, self.channels, self.len)
    }
}

pub(crate) fn check_same_shape(a: (SpaceParams, usize, usize), b: (SpaceParams, usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Shape {
            expected: format!("c={} h={} L={} MS={}", a.1, a.0.h, a.2, a.0.ms),
            got: format!("c={} h={} L={} MS={}", b.1, b.0.h, b.2, b.0.ms),
        });
    }
    Ok(())
}
