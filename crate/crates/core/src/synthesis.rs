//! Flow-map synthesis: camera flow from depth and a relative pose,
//! integration of camera and object flow over a moving-object mask, and
//! explicit warped-frame previews.
//!
//! Every synthesized flow keeps the first frame as its source: the field at
//! pixel `x` is the displacement of `x` from frame 1 into the target frame.
//! Pixels that leave the camera frustum after the rigid transform are
//! reported through a per-pixel validity mask (1 = valid) instead of
//! poisoning the field with NaNs; their flow is stored as zero.
//!
//! The exact-identity transform (identity pose, identical intrinsics) is
//! applied symbolically, so the documented degenerations hold exactly:
//! camera flow of a `stop` frame is all zeros, and integration under an
//! identity camera reproduces the object flow verbatim on masked pixels.

use crate::field::{BinaryMask, DepthMap, FieldError, FlowField, ImageGrid};
use crate::geometry::{project_camera_point, unproject, CameraIntrinsics, CameraPose, Pixel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A moving-object mask covering more than this fraction of the image is
/// discarded and treated as empty.
pub const MASK_REJECT_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("all pixels project behind the camera")]
    AllPixelsBehindCamera,
    #[error("pfm: {0}")]
    Pfm(String),
    #[error("raw depth payload is {actual} bytes, expected {expected}")]
    RawDepthSize { expected: usize, actual: usize },
}

/// Which depth value carries a mask pixel that the object flow displaced to
/// a new location `x'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthPolicy {
    /// Sample the depth map at the original pixel `x`. The object carries
    /// its own depth; sampling at `x'` would pick up background depth.
    #[default]
    AtOriginal,
    /// Sample the depth map bilinearly at the displaced position `x'`.
    AtDisplaced,
}

/// A synthesized flow field plus its per-pixel validity mask (1 = valid).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedFlow {
    pub flow: FlowField,
    pub validity: BinaryMask,
}

impl SynthesizedFlow {
    pub fn all_valid(&self) -> bool {
        self.validity.count_ones() == self.validity.values().len()
    }
}

fn check_depth_dims(depth: &DepthMap, k: &CameraIntrinsics) -> Result<(), SynthesisError> {
    if depth.width() != k.width || depth.height() != k.height {
        return Err(SynthesisError::DimensionMismatch(format!(
            "depth map is {}x{} but intrinsics describe a {}x{} image",
            depth.width(),
            depth.height(),
            k.width,
            k.height
        )));
    }
    Ok(())
}

fn check_same_size(k_src: &CameraIntrinsics, k_dst: &CameraIntrinsics) -> Result<(), SynthesisError> {
    if k_src.width != k_dst.width || k_src.height != k_dst.height {
        return Err(SynthesisError::DimensionMismatch(format!(
            "source image is {}x{} but target intrinsics describe {}x{}",
            k_src.width, k_src.height, k_dst.width, k_dst.height
        )));
    }
    Ok(())
}

/// Lifts `(u, v)` at `depth` out of the source camera, applies the relative
/// pose, and projects into the target camera. Returns the target pixel plus
/// the transformed depth, or `None` for points at or behind the near plane.
///
/// `identity` short-circuits the exact-identity transform so that it maps
/// every pixel to itself bit-for-bit.
#[inline]
fn transform_source_pixel(
    u: f64,
    v: f64,
    depth: f64,
    k_src: &CameraIntrinsics,
    pose: &CameraPose,
    k_dst: &CameraIntrinsics,
    identity: bool,
) -> Option<(f64, f64, f64)> {
    if identity {
        return Some((u, v, depth));
    }
    let p = unproject(Pixel::new(u, v), depth, k_src).ok()?;
    let pc = pose.transform_point(&p);
    let px = project_camera_point(&pc, k_dst).ok()?;
    Some((px.u, px.v, pc.z))
}

#[inline]
fn is_identity_transform(
    pose: &CameraPose,
    k_src: &CameraIntrinsics,
    k_dst: &CameraIntrinsics,
) -> bool {
    pose.is_identity() && k_src == k_dst
}

/// Camera flow map: per-pixel displacement from frame 1 into the frame of
/// `pose`, induced purely by the camera motion over the frame-1 depth.
///
/// `pose` must be relative to frame 1 (a frame-1 pose is the identity).
/// Separate source/target intrinsics support per-frame focal changes.
pub fn camera_flow(
    depth: &DepthMap,
    k_src: &CameraIntrinsics,
    pose: &CameraPose,
    k_dst: &CameraIntrinsics,
) -> Result<SynthesizedFlow, SynthesisError> {
    check_depth_dims(depth, k_src)?;
    check_same_size(k_src, k_dst)?;

    let (w, h) = (depth.width(), depth.height());
    let identity = is_identity_transform(pose, k_src, k_dst);
    let mut flow = FlowField::zeros(w, h);
    let mut validity = BinaryMask::ones(w, h);
    let mut invalid = 0usize;

    for v in 0..h {
        for u in 0..w {
            match transform_source_pixel(
                u as f64,
                v as f64,
                depth.at(u, v),
                k_src,
                pose,
                k_dst,
                identity,
            ) {
                Some((tu, tv, _)) => flow.set(u, v, tu - u as f64, tv - v as f64),
                None => {
                    validity.set(u, v, false);
                    invalid += 1;
                }
            }
        }
    }

    if invalid == w * h {
        return Err(SynthesisError::AllPixelsBehindCamera);
    }
    Ok(SynthesizedFlow { flow, validity })
}

/// Accepts a moving-object mask unless its 1-pixels cover more than half of
/// the image. Rejected masks are treated as empty by [`integrate_flows`].
pub fn validate_mask(mask: &BinaryMask) -> bool {
    2 * mask.count_ones() <= mask.values().len()
}

/// Combines camera-induced flow with an object flow map over a moving-object
/// mask.
///
/// Off-mask pixels receive exactly the camera flow. For a mask pixel `x`,
/// the object flow first displaces it to `x' = x + f_obj(x)`; `x'` is then
/// carried through the camera transform with a depth chosen by
/// `depth_policy`, and the integrated flow is that final position minus `x`.
///
/// A mask rejected by [`validate_mask`] is ignored, which makes the output
/// identical to [`camera_flow`].
#[allow(clippy::too_many_arguments)]
pub fn integrate_flows(
    depth: &DepthMap,
    k_src: &CameraIntrinsics,
    pose: &CameraPose,
    k_dst: &CameraIntrinsics,
    object_flow: &FlowField,
    mask: &BinaryMask,
    depth_policy: DepthPolicy,
) -> Result<SynthesizedFlow, SynthesisError> {
    check_depth_dims(depth, k_src)?;
    check_same_size(k_src, k_dst)?;
    let (w, h) = (depth.width(), depth.height());
    if object_flow.width() != w || object_flow.height() != h {
        return Err(SynthesisError::DimensionMismatch(format!(
            "object flow is {}x{}, expected {w}x{h}",
            object_flow.width(),
            object_flow.height()
        )));
    }
    if mask.width() != w || mask.height() != h {
        return Err(SynthesisError::DimensionMismatch(format!(
            "mask is {}x{}, expected {w}x{h}",
            mask.width(),
            mask.height()
        )));
    }

    let use_mask = validate_mask(mask);
    let identity = is_identity_transform(pose, k_src, k_dst);
    let mut flow = FlowField::zeros(w, h);
    let mut validity = BinaryMask::ones(w, h);
    let mut invalid = 0usize;

    for v in 0..h {
        for u in 0..w {
            let target = if use_mask && mask.is_set(u, v) {
                let (fo_u, fo_v) = object_flow.at(u, v);
                if identity {
                    // the identity transform maps x' to itself, so the
                    // integrated flow is the object flow verbatim
                    flow.set(u, v, fo_u, fo_v);
                    continue;
                }
                let (xu, xv) = (u as f64 + fo_u, v as f64 + fo_v);
                let d = match depth_policy {
                    DepthPolicy::AtOriginal => depth.at(u, v),
                    DepthPolicy::AtDisplaced => depth.sample_bilinear(xu, xv),
                };
                transform_source_pixel(xu, xv, d, k_src, pose, k_dst, identity)
            } else {
                transform_source_pixel(
                    u as f64,
                    v as f64,
                    depth.at(u, v),
                    k_src,
                    pose,
                    k_dst,
                    identity,
                )
            };
            match target {
                Some((tu, tv, _)) => flow.set(u, v, tu - u as f64, tv - v as f64),
                None => {
                    validity.set(u, v, false);
                    invalid += 1;
                }
            }
        }
    }

    if invalid == w * h {
        return Err(SynthesisError::AllPixelsBehindCamera);
    }
    Ok(SynthesizedFlow { flow, validity })
}

/// Splats every source pixel to its camera-flow target with z-buffering:
/// the nearest transformed depth wins, ties keep the smaller linear source
/// index. Targets are rounded to the nearest pixel. Untouched target pixels
/// are holes (mask = 1) and stay zero.
pub fn forward_warp(
    image: &ImageGrid,
    depth: &DepthMap,
    k_src: &CameraIntrinsics,
    pose: &CameraPose,
    k_dst: &CameraIntrinsics,
) -> Result<(ImageGrid, BinaryMask), SynthesisError> {
    check_depth_dims(depth, k_src)?;
    check_same_size(k_src, k_dst)?;
    let (w, h) = (depth.width(), depth.height());
    if image.width() != w || image.height() != h {
        return Err(SynthesisError::DimensionMismatch(format!(
            "image is {}x{}, expected {w}x{h}",
            image.width(),
            image.height()
        )));
    }

    let identity = is_identity_transform(pose, k_src, k_dst);
    let channels = image.channels();
    let mut warped = ImageGrid::zeros(w, h, channels);
    let mut holes = BinaryMask::ones(w, h);
    let mut zbuf = vec![f64::INFINITY; w * h];

    for v in 0..h {
        for u in 0..w {
            let Some((tu, tv, z)) = transform_source_pixel(
                u as f64,
                v as f64,
                depth.at(u, v),
                k_src,
                pose,
                k_dst,
                identity,
            ) else {
                continue;
            };
            let (ti, tj) = (tu.round(), tv.round());
            if ti < 0.0 || tj < 0.0 {
                continue;
            }
            let (ti, tj) = (ti as usize, tj as usize);
            if ti >= w || tj >= h {
                continue;
            }
            if z < zbuf[tj * w + ti] {
                zbuf[tj * w + ti] = z;
                for c in 0..channels {
                    warped.set(ti, tj, c, image.at(u, v, c));
                }
                holes.set(ti, tj, false);
            }
        }
    }

    Ok((warped, holes))
}

/// Pulls each output pixel from `target` at `x + flow(x)` with bilinear
/// interpolation; samples outside the image clamp to the border.
pub fn backward_warp(target: &ImageGrid, flow: &FlowField) -> Result<ImageGrid, SynthesisError> {
    if target.width() != flow.width() || target.height() != flow.height() {
        return Err(SynthesisError::DimensionMismatch(format!(
            "image is {}x{} but flow is {}x{}",
            target.width(),
            target.height(),
            flow.width(),
            flow.height()
        )));
    }
    let (w, h, channels) = (target.width(), target.height(), target.channels());
    let mut out = ImageGrid::zeros(w, h, channels);
    for v in 0..h {
        for u in 0..w {
            let (dx, dy) = flow.at(u, v);
            let (su, sv) = (u as f64 + dx, v as f64 + dy);
            for c in 0..channels {
                out.set(u, v, c, target.sample_bilinear(su, sv, c));
            }
        }
    }
    Ok(out)
}

// ───────────────────────────────────────────────────────────────────────────
// Depth file formats
// ───────────────────────────────────────────────────────────────────────────

/// Sidecar schema for raw 32-bit float depth grids: a JSON object
/// `{"width": W, "height": H}` next to the payload.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: usize,
    pub height: usize,
}

fn pfm_token<'a>(bytes: &'a [u8], cursor: &mut usize, what: &str) -> Result<&'a str, SynthesisError> {
    while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(SynthesisError::Pfm(format!("missing {what} in header")));
    }
    std::str::from_utf8(&bytes[start..*cursor])
        .map_err(|_| SynthesisError::Pfm(format!("{what} is not valid ascii")))
}

/// Reads a grayscale PFM depth map. The header is `Pf`, width, height, and a
/// scale whose sign selects the byte order (negative = little-endian); rows
/// are stored bottom-to-top per the format.
pub fn read_pfm(bytes: &[u8]) -> Result<DepthMap, SynthesisError> {
    let mut cursor = 0usize;
    let magic = pfm_token(bytes, &mut cursor, "magic")?;
    match magic {
        "Pf" => {}
        "PF" => {
            return Err(SynthesisError::Pfm(
                "color PFM is not a depth map (expected grayscale 'Pf')".into(),
            ))
        }
        other => {
            return Err(SynthesisError::Pfm(format!(
                "bad magic '{other}', expected 'Pf'"
            )))
        }
    }
    let width: usize = pfm_token(bytes, &mut cursor, "width")?
        .parse()
        .map_err(|_| SynthesisError::Pfm("width is not an integer".into()))?;
    let height: usize = pfm_token(bytes, &mut cursor, "height")?
        .parse()
        .map_err(|_| SynthesisError::Pfm("height is not an integer".into()))?;
    let scale: f64 = pfm_token(bytes, &mut cursor, "scale")?
        .parse()
        .map_err(|_| SynthesisError::Pfm("scale is not a number".into()))?;
    if width == 0 || height == 0 {
        return Err(SynthesisError::Pfm(format!(
            "dimensions {width}x{height} are invalid"
        )));
    }
    // exactly one whitespace byte separates the header from the payload
    cursor += 1;

    let little_endian = scale < 0.0;
    let expected = width * height * 4;
    let payload = bytes
        .get(cursor..)
        .filter(|p| p.len() == expected)
        .ok_or_else(|| {
            SynthesisError::Pfm(format!(
                "payload is {} bytes, expected {expected}",
                bytes.len().saturating_sub(cursor)
            ))
        })?;

    let mut values = vec![0.0f64; width * height];
    for row in 0..height {
        // bottom row first in the file
        let image_row = height - 1 - row;
        for col in 0..width {
            let off = (row * width + col) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            let value = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            values[image_row * width + col] = f64::from(value);
        }
    }
    Ok(DepthMap::from_values(values, width, height)?)
}

/// Writes a grayscale little-endian PFM (scale -1.0), rows bottom-to-top.
pub fn write_pfm(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for row in (0..h).rev() {
        for col in 0..w {
            out.extend_from_slice(&(depth.at(col, row) as f32).to_le_bytes());
        }
    }
    out
}

/// Reads a raw row-major little-endian 32-bit float depth grid whose
/// dimensions come from a [`DepthSidecar`].
pub fn read_raw_depth(bytes: &[u8], width: usize, height: usize) -> Result<DepthMap, SynthesisError> {
    let expected = width * height * 4;
    if bytes.len() != expected {
        return Err(SynthesisError::RawDepthSize {
            expected,
            actual: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(DepthMap::from_values(values, width, height)?)
}

/// Serializes a depth map as a raw row-major little-endian float grid.
pub fn write_raw_depth(depth: &DepthMap) -> Vec<u8> {
    depth
        .values()
        .iter()
        .flat_map(|&d| (d as f32).to_le_bytes())
        .collect()
}
