//! Dense per-pixel grid containers shared by the synthesis, codec, and
//! evaluation stages: depth maps, two-channel flow fields, binary masks,
//! and multi-channel image buffers.
//!
//! All grids are row-major with `(0, 0)` at the top-left pixel; the linear
//! index of pixel `(u, v)` is `v * width + u`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid data has {actual} elements, expected {expected} for {width}x{height}")]
    DataLength {
        expected: usize,
        actual: usize,
        width: usize,
        height: usize,
    },
    #[error("depth at pixel index {index} must be positive and finite, got {value}")]
    InvalidDepth { index: usize, value: f64 },
    #[error("non-finite flow component at pixel index {0}")]
    NonFiniteFlow(usize),
    #[error("mask value at pixel index {index} must be 0 or 1, got {value}")]
    InvalidMaskValue { index: usize, value: u8 },
}

fn check_len(len: usize, width: usize, height: usize) -> Result<(), FieldError> {
    let expected = width * height;
    if len != expected {
        return Err(FieldError::DataLength {
            expected,
            actual: len,
            width,
            height,
        });
    }
    Ok(())
}

fn assert_dims(width: usize, height: usize) {
    assert!(width > 0 && height > 0, "grid dimensions must be non-zero");
}

// ───────────────────────────────────────────────────────────────────────────
// DepthMap
// ───────────────────────────────────────────────────────────────────────────

/// Per-pixel metric depth along the camera z-axis. Every value is finite
/// and strictly positive; this is enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    values: Vec<f64>,
    width: usize,
    height: usize,
}

impl DepthMap {
    pub fn from_values(values: Vec<f64>, width: usize, height: usize) -> Result<Self, FieldError> {
        assert_dims(width, height);
        check_len(values.len(), width, height)?;
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(FieldError::InvalidDepth { index, value });
            }
        }
        Ok(Self {
            values,
            width,
            height,
        })
    }

    /// Fronto-parallel plane at the given depth.
    pub fn constant(depth: f64, width: usize, height: usize) -> Result<Self, FieldError> {
        assert_dims(width, height);
        if !(depth.is_finite() && depth > 0.0) {
            return Err(FieldError::InvalidDepth {
                index: 0,
                value: depth,
            });
        }
        Ok(Self {
            values: vec![depth; width * height],
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    /// Bilinear depth sample at continuous coordinates, clamped to the border.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> f64 {
        let uc = u.clamp(0.0, (self.width - 1) as f64);
        let vc = v.clamp(0.0, (self.height - 1) as f64);
        let u0 = uc.floor() as usize;
        let v0 = vc.floor() as usize;
        let u1 = (u0 + 1).min(self.width - 1);
        let v1 = (v0 + 1).min(self.height - 1);
        let fu = uc - u0 as f64;
        let fv = vc - v0 as f64;
        let d00 = self.at(u0, v0);
        let d10 = self.at(u1, v0);
        let d01 = self.at(u0, v1);
        let d11 = self.at(u1, v1);
        (d00 * (1.0 - fu) + d10 * fu) * (1.0 - fv) + (d01 * (1.0 - fu) + d11 * fu) * fv
    }
}

// ───────────────────────────────────────────────────────────────────────────
// FlowField
// ───────────────────────────────────────────────────────────────────────────

/// Dense two-channel displacement map in pixels, from the first frame to a
/// target frame. `dx` grows to the right, `dy` downward. All components are
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    dx: Vec<f64>,
    dy: Vec<f64>,
    width: usize,
    height: usize,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert_dims(width, height);
        Self {
            dx: vec![0.0; width * height],
            dy: vec![0.0; width * height],
            width,
            height,
        }
    }

    pub fn from_components(
        dx: Vec<f64>,
        dy: Vec<f64>,
        width: usize,
        height: usize,
    ) -> Result<Self, FieldError> {
        assert_dims(width, height);
        check_len(dx.len(), width, height)?;
        check_len(dy.len(), width, height)?;
        for i in 0..dx.len() {
            if !dx[i].is_finite() || !dy[i].is_finite() {
                return Err(FieldError::NonFiniteFlow(i));
            }
        }
        Ok(Self {
            dx,
            dy,
            width,
            height,
        })
    }

    /// Uniform flow, mostly useful in tests and synthetic scenes.
    pub fn constant(dx: f64, dy: f64, width: usize, height: usize) -> Result<Self, FieldError> {
        Self::from_components(
            vec![dx; width * height],
            vec![dy; width * height],
            width,
            height,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> (f64, f64) {
        let i = v * self.width + u;
        (self.dx[i], self.dy[i])
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, dx: f64, dy: f64) {
        debug_assert!(dx.is_finite() && dy.is_finite());
        let i = v * self.width + u;
        self.dx[i] = dx;
        self.dy[i] = dy;
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    #[inline]
    pub fn magnitude_at(&self, index: usize) -> f64 {
        (self.dx[index] * self.dx[index] + self.dy[index] * self.dy[index]).sqrt()
    }
}

// ───────────────────────────────────────────────────────────────────────────
// BinaryMask
// ───────────────────────────────────────────────────────────────────────────

/// Per-pixel binary grid. Used for moving-object masks (1 = moving object),
/// synthesized-flow validity masks (1 = valid), and warp hole masks
/// (1 = hole).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    values: Vec<u8>,
    width: usize,
    height: usize,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert_dims(width, height);
        Self {
            values: vec![0; width * height],
            width,
            height,
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        assert_dims(width, height);
        Self {
            values: vec![1; width * height],
            width,
            height,
        }
    }

    pub fn from_values(values: Vec<u8>, width: usize, height: usize) -> Result<Self, FieldError> {
        assert_dims(width, height);
        check_len(values.len(), width, height)?;
        for (index, &value) in values.iter().enumerate() {
            if value > 1 {
                return Err(FieldError::InvalidMaskValue { index, value });
            }
        }
        Ok(Self {
            values,
            width,
            height,
        })
    }

    /// Builds a mask from raw bytes, mapping every nonzero byte to 1. This is
    /// the decoding rule for 8-bit mask images.
    pub fn from_nonzero(bytes: &[u8], width: usize, height: usize) -> Result<Self, FieldError> {
        assert_dims(width, height);
        check_len(bytes.len(), width, height)?;
        Ok(Self {
            values: bytes.iter().map(|&b| u8::from(b != 0)).collect(),
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

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn is_set(&self, u: usize, v: usize) -> bool {
        self.values[v * self.width + u] != 0
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.values[v * self.width + u] = u8::from(on);
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn fraction_ones(&self) -> f64 {
        self.count_ones() as f64 / self.values.len() as f64
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            values: self.values.iter().map(|&v| 1 - v).collect(),
            width: self.width,
            height: self.height,
        }
    }
}

// ───────────────────────────────────────────────────────────────────────────
// ImageGrid
// ───────────────────────────────────────────────────────────────────────────

/// Multi-channel image buffer with interleaved channels, used by the warping
/// operations. Pixel values carry whatever range the caller provides (8-bit
/// images are usually loaded as 0..=255).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    data: Vec<f64>,
    width: usize,
    height: usize,
    channels: usize,
}

impl ImageGrid {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert_dims(width, height);
        assert!(channels > 0, "image must have at least one channel");
        Self {
            data: vec![0.0; width * height * channels],
            width,
            height,
            channels,
        }
    }

    pub fn from_data(
        data: Vec<f64>,
        width: usize,
        height: usize,
        channels: usize,
    ) -> Result<Self, FieldError> {
        assert_dims(width, height);
        assert!(channels > 0, "image must have at least one channel");
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(FieldError::DataLength {
                expected,
                actual: data.len(),
                width,
                height,
            });
        }
        Ok(Self {
            data,
            width,
            height,
            channels,
        })
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(
        width: usize,
        height: usize,
        channels: usize,
        mut f: F,
    ) -> Self {
        let mut img = Self::zeros(width, height, channels);
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    let value = f(u, v, c);
                    img.set(u, v, c, value);
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize, c: usize) -> f64 {
        self.data[(v * self.width + u) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, c: usize, value: f64) {
        self.data[(v * self.width + u) * self.channels + c] = value;
    }

    /// Bilinear sample of one channel at continuous coordinates, clamped to
    /// the border.
    pub fn sample_bilinear(&self, u: f64, v: f64, c: usize) -> f64 {
        let uc = u.clamp(0.0, (self.width - 1) as f64);
        let vc = v.clamp(0.0, (self.height - 1) as f64);
        let u0 = uc.floor() as usize;
        let v0 = vc.floor() as usize;
        let u1 = (u0 + 1).min(self.width - 1);
        let v1 = (v0 + 1).min(self.height - 1);
        let fu = uc - u0 as f64;
        let fv = vc - v0 as f64;
        let p00 = self.at(u0, v0, c);
        let p10 = self.at(u1, v0, c);
        let p01 = self.at(u0, v1, c);
        let p11 = self.at(u1, v1, c);
        (p00 * (1.0 - fu) + p10 * fu) * (1.0 - fv) + (p01 * (1.0 - fu) + p11 * fu) * fv
    }
}
