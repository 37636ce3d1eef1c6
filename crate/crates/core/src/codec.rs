//! Flow normalization and packing for diffusion-model consumption, the
//! Middlebury `.flo` interchange format, flow statistics, and color-wheel
//! visualization.

use crate::field::{BinaryMask, FieldError, FlowField};
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

/// First four bytes of a `.flo` file, the float 202021.25 ("PIEH" in ASCII).
pub const FLO_MAGIC: f32 = 202021.25;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("flo data is only {0} bytes, shorter than the 12-byte header")]
    TooShort(usize),
    #[error("bad flo magic {got}, expected {FLO_MAGIC}")]
    BadMagic { got: f32 },
    #[error("flo header declares invalid dimensions {width}x{height}")]
    BadDimensions { width: i32, height: i32 },
    #[error("flo file is {actual} bytes, expected {expected}")]
    PayloadSize { expected: usize, actual: usize },
    #[error("scale factors must be positive, got ({0}, {1})")]
    NonPositiveScale(f64, f64),
    #[error("normalized flow component {0} lies outside [-1, 1]")]
    OutOfRange(f64),
    #[error("region mask is {mask_w}x{mask_h} but the flow is {flow_w}x{flow_h}")]
    RegionSize {
        mask_w: usize,
        mask_h: usize,
        flow_w: usize,
        flow_h: usize,
    },
    #[error("region selects no pixels")]
    EmptyRegion,
    #[error("rgb8 buffer has {actual} bytes, expected {expected}")]
    Rgb8Size { expected: usize, actual: usize },
    #[error("unknown normalization profile '{0}', expected 'omsm' or 'fvsm'")]
    UnknownProfile(String),
}

// ───────────────────────────────────────────────────────────────────────────
// Normalization
// ───────────────────────────────────────────────────────────────────────────

/// Per-axis normalization scales in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowScale {
    sx: f64,
    sy: f64,
}

impl FlowScale {
    pub fn new(sx: f64, sy: f64) -> Result<Self, CodecError> {
        if !(sx.is_finite() && sx > 0.0 && sy.is_finite() && sy > 0.0) {
            return Err(CodecError::NonPositiveScale(sx, sy));
        }
        Ok(Self { sx, sy })
    }

    pub fn sx(&self) -> f64 {
        self.sx
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }
}

/// Normalization presets for the two flow-consuming models: the
/// object-motion model uses (18, 12), the video-synthesis model (45, 24).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationProfile {
    Omsm,
    Fvsm,
}

impl NormalizationProfile {
    pub fn scale(self) -> FlowScale {
        match self {
            NormalizationProfile::Omsm => FlowScale { sx: 18.0, sy: 12.0 },
            NormalizationProfile::Fvsm => FlowScale { sx: 45.0, sy: 24.0 },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationProfile::Omsm => "omsm",
            NormalizationProfile::Fvsm => "fvsm",
        }
    }
}

impl FromStr for NormalizationProfile {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "omsm" => Ok(NormalizationProfile::Omsm),
            "fvsm" => Ok(NormalizationProfile::Fvsm),
            other => Err(CodecError::UnknownProfile(other.to_string())),
        }
    }
}

/// Divides each component by its axis scale and clamps into [-1, 1].
pub fn normalize_flow(flow: &FlowField, scale: FlowScale) -> FlowField {
    let mut out = FlowField::zeros(flow.width(), flow.height());
    for v in 0..flow.height() {
        for u in 0..flow.width() {
            let (dx, dy) = flow.at(u, v);
            out.set(
                u,
                v,
                (dx / scale.sx).clamp(-1.0, 1.0),
                (dy / scale.sy).clamp(-1.0, 1.0),
            );
        }
    }
    out
}

/// Inverse of [`normalize_flow`] for in-range inputs; components outside
/// [-1, 1] are rejected.
pub fn denormalize_flow(flow_norm: &FlowField, scale: FlowScale) -> Result<FlowField, CodecError> {
    let mut out = FlowField::zeros(flow_norm.width(), flow_norm.height());
    for v in 0..flow_norm.height() {
        for u in 0..flow_norm.width() {
            let (nx, ny) = flow_norm.at(u, v);
            if !(-1.0..=1.0).contains(&nx) {
                return Err(CodecError::OutOfRange(nx));
            }
            if !(-1.0..=1.0).contains(&ny) {
                return Err(CodecError::OutOfRange(ny));
            }
            out.set(u, v, nx * scale.sx, ny * scale.sy);
        }
    }
    Ok(out)
}

// ───────────────────────────────────────────────────────────────────────────
// Three-channel packing
// ───────────────────────────────────────────────────────────────────────────

/// A normalized flow field packed into the three image channels an RGB
/// autoencoder expects: `(x, y, (x + y) / 2)`. Only the first two channels
/// carry information; the third is reconstructed filler.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedFlowImage {
    x: Vec<f64>,
    y: Vec<f64>,
    third: Vec<f64>,
    width: usize,
    height: usize,
}

impl PackedFlowImage {
    /// Assembles an image from raw channel planes, e.g. after decoding a
    /// file. The third channel is taken as-is; [`unpack_three_channel`]
    /// never reads it.
    pub fn from_planes(
        x: Vec<f64>,
        y: Vec<f64>,
        third: Vec<f64>,
        width: usize,
        height: usize,
    ) -> Result<Self, CodecError> {
        let n = width * height;
        for (plane, len) in [("x", x.len()), ("y", y.len()), ("third", third.len())] {
            if len != n {
                return Err(CodecError::Field(FieldError::DataLength {
                    expected: n,
                    actual: len,
                    width,
                    height,
                }));
            }
            let _ = plane;
        }
        Ok(Self {
            x,
            y,
            third,
            width,
            height,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel_x(&self) -> &[f64] {
        &self.x
    }

    pub fn channel_y(&self) -> &[f64] {
        &self.y
    }

    pub fn channel_third(&self) -> &[f64] {
        &self.third
    }
}

/// Packs a normalized flow into three channels `(x, y, (x + y) / 2)`.
pub fn pack_three_channel(flow_norm: &FlowField) -> PackedFlowImage {
    let x = flow_norm.dx().to_vec();
    let y = flow_norm.dy().to_vec();
    let third = x.iter().zip(&y).map(|(a, b)| (a + b) / 2.0).collect();
    PackedFlowImage {
        x,
        y,
        third,
        width: flow_norm.width(),
        height: flow_norm.height(),
    }
}

/// Recovers the flow from the first two channels, ignoring the third.
pub fn unpack_three_channel(img: &PackedFlowImage) -> Result<FlowField, CodecError> {
    Ok(FlowField::from_components(
        img.x.clone(),
        img.y.clone(),
        img.width,
        img.height,
    )?)
}

/// Quantizes a packed image to interleaved RGB8 with the fixed mapping
/// `byte = round((v + 1) * 127.5)`.
pub fn packed_to_rgb8(img: &PackedFlowImage) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(img.width * img.height * 3);
    for i in 0..img.width * img.height {
        for plane in [&img.x, &img.y, &img.third] {
            rgb.push(((plane[i] + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8);
        }
    }
    rgb
}

/// Inverse of [`packed_to_rgb8`]: `v = byte / 127.5 - 1`.
pub fn packed_from_rgb8(
    rgb: &[u8],
    width: usize,
    height: usize,
) -> Result<PackedFlowImage, CodecError> {
    let expected = width * height * 3;
    if rgb.len() != expected {
        return Err(CodecError::Rgb8Size {
            expected,
            actual: rgb.len(),
        });
    }
    let n = width * height;
    let (mut x, mut y, mut third) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for px in rgb.chunks_exact(3) {
        x.push(f64::from(px[0]) / 127.5 - 1.0);
        y.push(f64::from(px[1]) / 127.5 - 1.0);
        third.push(f64::from(px[2]) / 127.5 - 1.0);
    }
    PackedFlowImage::from_planes(x, y, third, width, height)
}

// ───────────────────────────────────────────────────────────────────────────
// Middlebury .flo
// ───────────────────────────────────────────────────────────────────────────
//
// Layout, all little-endian: float32 magic 202021.25, int32 width, int32
// height, then height * width interleaved (dx, dy) float32 pairs, row-major.

/// Serializes a flow field as a `.flo` byte stream.
pub fn write_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = (flow.width(), flow.height());
    let mut out = Vec::with_capacity(12 + w * h * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        out.extend_from_slice(&(flow.dx()[i] as f32).to_le_bytes());
        out.extend_from_slice(&(flow.dy()[i] as f32).to_le_bytes());
    }
    out
}

/// Parses a `.flo` byte stream, checking the magic, the header dimensions,
/// and the exact payload size.
pub fn read_flo(bytes: &[u8]) -> Result<FlowField, CodecError> {
    if bytes.len() < 12 {
        return Err(CodecError::TooShort(bytes.len()));
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(CodecError::BadMagic { got: magic });
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(CodecError::BadDimensions { width, height });
    }
    let (w, h) = (width as usize, height as usize);
    let expected = 12 + w * h * 8;
    if bytes.len() != expected {
        return Err(CodecError::PayloadSize {
            expected,
            actual: bytes.len(),
        });
    }

    let n = w * h;
    let mut dx = Vec::with_capacity(n);
    let mut dy = Vec::with_capacity(n);
    for pair in bytes[12..].chunks_exact(8) {
        dx.push(f64::from(f32::from_le_bytes(pair[0..4].try_into().unwrap())));
        dy.push(f64::from(f32::from_le_bytes(pair[4..8].try_into().unwrap())));
    }
    Ok(FlowField::from_components(dx, dy, w, h)?)
}

// ───────────────────────────────────────────────────────────────────────────
// Statistics
// ───────────────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub mean_magnitude: f64,
    pub max_magnitude: f64,
    pub count: usize,
}

/// Mean and maximum of the per-pixel flow magnitude sqrt(dx² + dy²) over the
/// region (1-pixels of the mask), or over every pixel when no region is
/// given.
pub fn flow_stats(flow: &FlowField, region: Option<&BinaryMask>) -> Result<FlowStats, CodecError> {
    if let Some(mask) = region {
        if mask.width() != flow.width() || mask.height() != flow.height() {
            return Err(CodecError::RegionSize {
                mask_w: mask.width(),
                mask_h: mask.height(),
                flow_w: flow.width(),
                flow_h: flow.height(),
            });
        }
    }

    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut count = 0usize;
    for i in 0..flow.len() {
        if let Some(mask) = region {
            if mask.values()[i] == 0 {
                continue;
            }
        }
        let mag = flow.magnitude_at(i);
        sum += mag;
        max = max.max(mag);
        count += 1;
    }
    if count == 0 {
        return Err(CodecError::EmptyRegion);
    }
    Ok(FlowStats {
        mean_magnitude: sum / count as f64,
        max_magnitude: max,
        count,
    })
}

// ───────────────────────────────────────────────────────────────────────────
// Color-wheel visualization
// ───────────────────────────────────────────────────────────────────────────

/// Interleaved RGB8 image produced by [`visualize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub rgb: Vec<u8>,
    pub width: usize,
    pub height: usize,
}

/// The Middlebury flow color wheel: 55 hues over six unevenly split
/// transitions.
fn color_wheel() -> Vec<[f64; 3]> {
    const SEGMENTS: [(usize, usize, usize, bool); 6] = [
        // (fixed-at-255 channel, ramp channel, count, ramp goes up)
        (0, 1, 15, true),  // red -> yellow
        (1, 0, 6, false),  // yellow -> green
        (1, 2, 4, true),   // green -> cyan
        (2, 1, 11, false), // cyan -> blue
        (2, 0, 13, true),  // blue -> magenta
        (0, 2, 6, false),  // magenta -> red
    ];
    let mut wheel = Vec::with_capacity(55);
    for (hold, ramp, count, up) in SEGMENTS {
        for i in 0..count {
            let mut color = [0.0; 3];
            color[hold] = 255.0;
            let level = 255.0 * i as f64 / count as f64;
            color[ramp] = if up { level } else { 255.0 - level };
            wheel.push(color);
        }
    }
    wheel
}

/// Colorizes a flow field with the Middlebury color wheel: hue encodes the
/// flow direction, saturation the magnitude relative to `max_magnitude`
/// (the field maximum when absent). Zero flow maps to white; magnitudes
/// beyond the maximum are darkened.
pub fn visualize(flow: &FlowField, max_magnitude: Option<f64>) -> ColorImage {
    let wheel = color_wheel();
    let ncols = wheel.len();

    let auto_max = (0..flow.len())
        .map(|i| flow.magnitude_at(i))
        .fold(0.0f64, f64::max);
    let max = match max_magnitude {
        Some(m) if m.is_finite() && m > 0.0 => m,
        _ => {
            if auto_max > 0.0 {
                auto_max
            } else {
                1.0
            }
        }
    };

    let mut rgb = Vec::with_capacity(flow.len() * 3);
    for i in 0..flow.len() {
        let dx = flow.dx()[i] / max;
        let dy = flow.dy()[i] / max;
        let rad = (dx * dx + dy * dy).sqrt();
        let angle = (-dy).atan2(-dx) / std::f64::consts::PI; // in [-1, 1]
        let fk = (angle + 1.0) / 2.0 * (ncols - 1) as f64;
        let k0 = fk.floor() as usize;
        let k1 = (k0 + 1) % ncols;
        let f = fk - k0 as f64;
        for (&c0, &c1) in wheel[k0].iter().zip(&wheel[k1]) {
            let mut col = (1.0 - f) * c0 / 255.0 + f * c1 / 255.0;
            if rad <= 1.0 {
                col = 1.0 - rad * (1.0 - col);
            } else {
                col *= 0.75;
            }
            rgb.push((255.0 * col).round() as u8);
        }
    }
    ColorImage {
        rgb,
        width: flow.width(),
        height: flow.height(),
    }
}
