//! P5 graymap files plus a `key = value` metadata sidecar.
//!
//! One file per channel, `width = L`, `height = h`. The first raster row in
//! the file is row `j = 1`, the lowest value bin. Binary images use pixel
//! values 0 and 255; soft images store `round(255 p)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{BinaryImage, NormStats, SoftImage, SpaceParams};
use crate::error::{Error, Result};

/// Decoded contents of a P5 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn write_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Graymap> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::format(path, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if token(&mut pos)? != "P5" {
        return Err(Error::format(path, "not a binary graymap (magic P5)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token(&mut pos)?;
        t.parse().map_err(|_| Error::format(path, format!("bad {what} '{t}'")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(path, format!("maxval {maxval}, expected 255")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(Error::format(
            path,
            format!("raster holds {} bytes, expected {need}", bytes.len().saturating_sub(pos)),
        ));
    }
    Ok(Graymap {
        width,
        height,
        pixels: bytes[pos..pos + need].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyImage {
    Binary(BinaryImage),
    Soft(SoftImage),
}

impl AnyImage {
    pub fn params(&self) -> SpaceParams {
        match self {
            AnyImage::Binary(b) => b.params(),
            AnyImage::Soft(s) => s.params(),
        }
    }

    pub fn n_channels(&self) -> usize {
        match self {
            AnyImage::Binary(b) => b.n_channels(),
            AnyImage::Soft(s) => s.n_channels(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyImage::Binary(b) => b.len(),
            AnyImage::Soft(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raster of one channel, first row = lowest bin.
    pub fn channel_pixels(&self, ch: usize) -> Vec<u8> {
        let h = self.params().h;
        let len = self.len();
        let mut px = vec![0u8; h * len];
        match self {
            AnyImage::Binary(b) => {
                for (k, r) in b.channel_rows(ch).iter().enumerate() {
                    if let Some(j) = r {
                        px[(*j as usize - 1) * len + k] = 255;
                    }
                }
            }
            AnyImage::Soft(s) => {
                for k in 0..len {
                    for (j, p) in s.column(ch, k).iter().enumerate() {
                        px[j * len + k] = (255.0 * p).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
        px
    }
}

/// Sidecar record describing how the graymaps were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub soft: bool,
    pub params: SpaceParams,
    pub len: usize,
    pub channels: usize,
    pub has_missing: bool,
    pub interpolated: bool,
    /// Length of the series before temporal interpolation.
    pub source_len: usize,
    pub norm: Option<NormStats>,
}

impl ImageMeta {
    pub fn for_image(image: &AnyImage) -> Self {
        Self {
            soft: matches!(image, AnyImage::Soft(_)),
            params: image.params(),
            len: image.len(),
            channels: image.n_channels(),
            has_missing: matches!(image, AnyImage::Binary(b) if b.has_missing()),
            interpolated: false,
            source_len: image.len(),
            norm: None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = if self.soft { "soft" } else { "binary" };
        let marker = if self.has_missing { "zero-column" } else { "none" };
        let _ = writeln!(s, "kind = {kind}");
        let _ = writeln!(s, "h = {}", self.params.h);
        let _ = writeln!(s, "ms = {:?}", self.params.ms);
        let _ = writeln!(s, "len = {}", self.len);
        let _ = writeln!(s, "channels = {}", self.channels);
        let _ = writeln!(s, "missing_marker = {marker}");
        let _ = writeln!(s, "interpolated = {}", self.interpolated);
        let _ = writeln!(s, "source_len = {}", self.source_len);
        if let Some(n) = &self.norm {
            for i in 0..n.mean.len() {
                let _ = writeln!(s, "mean.{i} = {:?}", n.mean[i]);
                let _ = writeln!(s, "std.{i} = {:?}", n.std[i]);
            }
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(path, format!("line {}: expected key = value", n + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::format(path, format!("missing key '{k}'")));
        fn num<T: std::str::FromStr>(path: &Path, k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::format(path, format!("bad value '{v}' for '{k}'")))
        }
        let soft = match get("kind")?.as_str() {
            "binary" => false,
            "soft" => true,
            other => return Err(Error::format(path, format!("unknown image kind '{other}'"))),
        };
        let h: usize = num(path, "h", get("h")?)?;
        let ms: f64 = num(path, "ms", get("ms")?)?;
        let params = SpaceParams::new(h, ms)?;
        let len = num(path, "len", get("len")?)?;
        let channels: usize = num(path, "channels", get("channels")?)?;
        let has_missing = kv.get("missing_marker").map(|v| v != "none").unwrap_or(false);
        let interpolated = match kv.get("interpolated") {
            Some(v) => num(path, "interpolated", v)?,
            None => false,
        };
        let source_len = match kv.get("source_len") {
            Some(v) => num(path, "source_len", v)?,
            None => len,
        };
        let norm = if kv.contains_key("mean.0") {
            let mut mean = Vec::with_capacity(channels);
            let mut std = Vec::with_capacity(channels);
            for i in 0..channels {
                let mk = format!("mean.{i}");
                let sk = format!("std.{i}");
                mean.push(num(path, &mk, get(&mk)?)?);
                std.push(num(path, &sk, get(&sk)?)?);
            }
            let floored = std.iter().map(|s| *s <= super::STD_FLOOR).collect();
            Some(NormStats { mean, std, floored })
        } else {
            None
        };
        Ok(Self {
            soft,
            params,
            len,
            channels,
            has_missing,
            interpolated,
            source_len,
            norm,
        })
    }
}

pub fn meta_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".meta")
}

pub fn channel_path(stem: &Path, ch: usize) -> PathBuf {
    with_suffix(stem, &format!(".ch{ch}.pgm"))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// All files of an image: `(path, bytes)` for each channel graymap and the
/// sidecar, in that order.
pub fn image_files(stem: &Path, image: &AnyImage, meta: &ImageMeta) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = (0..image.n_channels())
        .map(|ch| {
            let px = image.channel_pixels(ch);
            (channel_path(stem, ch), write_pgm(image.len(), image.params().h, &px))
        })
        .collect();
    files.push((meta_path(stem), meta.to_text().into_bytes()));
    files
}

/// Rebuilds an image from its sidecar and per-channel graymaps.
pub fn image_from_graymaps(meta: &ImageMeta, maps: &[(PathBuf, Graymap)]) -> Result<AnyImage> {
    let h = meta.params.h;
    let len = meta.len;
    if maps.len() != meta.channels {
        return Err(Error::Shape {
            expected: format!("{} channel files", meta.channels),
            got: format!("{}", maps.len()),
        });
    }
    for (path, g) in maps {
        if g.width != len || g.height != h {
            return Err(Error::format(
                path,
                format!("graymap is {}x{}, sidecar says {len}x{h}", g.width, g.height),
            ));
        }
    }
    if meta.soft {
        let mut data = vec![0.0; meta.channels * len * h];
        for (ch, (_, g)) in maps.iter().enumerate() {
            for k in 0..len {
                for j in 0..h {
                    data[(ch * len + k) * h + j] = g.pixels[j * len + k] as f64;
                }
            }
        }
        return SoftImage::normalized(meta.params, meta.channels, len, data).map(AnyImage::Soft);
    }
    let mut bits = vec![0u8; meta.channels * h * len];
    for (ch, (path, g)) in maps.iter().enumerate() {
        for (i, &p) in g.pixels.iter().enumerate() {
            bits[ch * h * len + i] = match p {
                0 => 0,
                255 => 1,
                v => {
                    return Err(Error::Structure {
                        channel: ch,
                        column: i % len,
                        reason: format!("pixel value {v} in {} is not 0 or 255", path.display()),
                    })
                }
            };
        }
    }
    BinaryImage::from_grid(meta.params, meta.channels, len, &bits, meta.has_missing).map(AnyImage::Binary)
}

/// Reads `<stem>.meta` and `<stem>.ch{i}.pgm` from disk.
pub fn load_image(stem: &Path) -> Result<(AnyImage, ImageMeta)> {
    let mp = meta_path(stem);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let meta = ImageMeta::parse(&text, &mp)?;
    let mut maps = Vec::with_capacity(meta.channels);
    for ch in 0..meta.channels {
        let p = channel_path(stem, ch);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let g = parse_pgm(&bytes, &p)?;
        maps.push((p, g));
    }
    let img = image_from_graymaps(&meta, &maps)?;
    Ok((img, meta))
}
