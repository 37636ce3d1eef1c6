//! Pinhole camera model and rigid-transform primitives.
//!
//! Conventions, which everything downstream relies on:
//!
//! - Extrinsics are **world-to-camera**: `p_cam = R * p_world + t`. The first
//!   frame of a sequence defines the world frame, so its pose is the
//!   identity. This matches the RealEstate10K pose convention. Flipping to
//!   camera-to-world flips the sign of every synthesized flow field, so the
//!   convention is pinned here once and exported as serialization metadata.
//! - Pixel coordinates are continuous with `(0, 0)` at the center of the
//!   top-left pixel; `u` grows right, `v` grows down.
//! - The camera looks down +z. Points whose camera-space depth falls at or
//!   below [`Z_EPS`] cannot be projected.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Camera-space depth at or below which projection is rejected. Small enough
/// to admit near-plane points, large enough to keep the perspective divide
/// bounded.
pub const Z_EPS: f64 = 1e-6;

/// Per-entry tolerance for the rotation orthonormality check used by
/// [`CameraPose::new`].
pub const ROTATION_TOL: f64 = 1e-6;

/// A 3D point in scene units. Lives in the world frame (= frame-1 camera
/// frame) unless stated otherwise.
pub type Point3 = nalgebra::Point3<f64>;

/// Continuous pixel coordinates. May lie outside the image bounds, e.g.
/// after projecting into a target frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("rotation is not orthonormal with det +1 within {tol:e} (max deviation {max_dev:.3e})")]
    NotOrthonormal { tol: f64, max_dev: f64 },
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("point is behind the camera: camera-space ({x:.6}, {y:.6}, {z:.6}) has z <= {z_eps:e}")]
    BehindCamera { x: f64, y: f64, z: f64, z_eps: f64 },
}

// ───────────────────────────────────────────────────────────────────────────
// Intrinsics
// ───────────────────────────────────────────────────────────────────────────

/// Pinhole intrinsics in pixel units for a fixed image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image size must be non-zero, got {width}x{height}"
            )));
        }
        if !(fx.is_finite() && fx > 0.0 && fy.is_finite() && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive and finite, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite() && (0.0..width as f64).contains(&cx))
            || !(0.0..height as f64).contains(&cy)
        {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside image {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn principal_point(&self) -> Pixel {
        Pixel::new(self.cx, self.cy)
    }

    /// Same camera with both focal lengths multiplied by `scale`; the
    /// principal point and image size stay fixed. Used by the dolly-zoom
    /// generator.
    pub fn with_focal_scale(&self, scale: f64) -> Result<Self, GeometryError> {
        Self::new(
            self.fx * scale,
            self.fy * scale,
            self.cx,
            self.cy,
            self.width,
            self.height,
        )
    }
}

// ───────────────────────────────────────────────────────────────────────────
// Pose
// ───────────────────────────────────────────────────────────────────────────

/// World-to-camera rigid transform `[R | t]`.
///
/// Construction validates that `R` is orthonormal with determinant +1;
/// [`CameraPose::with_tolerance`] relaxes the per-entry tolerance for poses
/// coming from SfM pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

fn rotation_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r;
    let mut max_dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((gram[(i, j)] - target).abs());
        }
    }
    max_dev.max((r.determinant() - 1.0).abs())
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::with_tolerance(rotation, translation, ROTATION_TOL)
    }

    pub fn with_tolerance(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        if rotation.iter().any(|v| !v.is_finite()) || translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotOrthonormal {
                tol,
                max_dev: f64::INFINITY,
            });
        }
        let max_dev = rotation_deviation(&rotation);
        if max_dev > tol {
            return Err(GeometryError::NotOrthonormal { tol, max_dev });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Skips validation; for internal use where the rotation is carried over
    /// from an already validated pose.
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Exact (bitwise) identity test. Generated `stop` trajectories and
    /// normalized first frames are exact identities, and several flow
    /// degenerations are only exact when this holds.
    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    /// `p_cam = R * p_world + t`.
    #[inline]
    pub fn transform_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    /// Camera center in world coordinates: `-Rᵀ t`.
    pub fn camera_center(&self) -> Point3 {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Composition `self ∘ inner`: applies `inner` first. If `inner` maps
    /// frame A to frame B and `self` maps B to C, the result maps A to C.
    pub fn compose(&self, inner: &CameraPose) -> CameraPose {
        CameraPose {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> CameraPose {
        let rt = self.rotation.transpose();
        CameraPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

// ───────────────────────────────────────────────────────────────────────────
// Projection primitives
// ───────────────────────────────────────────────────────────────────────────

/// Lifts a pixel at the given depth into the camera frame of the image the
/// intrinsics belong to:
/// `((u - cx) * d / fx, (v - cy) * d / fy, d)`.
pub fn unproject(p: Pixel, depth: f64, k: &CameraIntrinsics) -> Result<Point3, GeometryError> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(GeometryError::InvalidDepth(depth));
    }
    Ok(Point3::new(
        (p.u - k.cx) * depth / k.fx,
        (p.v - k.cy) * depth / k.fy,
        depth,
    ))
}

/// Transforms a world point into the camera frame of `pose` and projects it
/// through `k`. Fails if the transformed point lands at or behind the
/// near-plane cutoff [`Z_EPS`]; the error carries the camera-space point.
pub fn project(
    point: &Point3,
    pose: &CameraPose,
    k: &CameraIntrinsics,
) -> Result<Pixel, GeometryError> {
    project_camera_point(&pose.transform_point(point), k)
}

/// Projects a point that is already expressed in the target camera frame.
#[inline]
pub fn project_camera_point(pc: &Point3, k: &CameraIntrinsics) -> Result<Pixel, GeometryError> {
    if pc.z <= Z_EPS {
        return Err(GeometryError::BehindCamera {
            x: pc.x,
            y: pc.y,
            z: pc.z,
            z_eps: Z_EPS,
        });
    }
    Ok(Pixel::new(
        k.fx * pc.x / pc.z + k.cx,
        k.fy * pc.y / pc.z + k.cy,
    ))
}

/// Pose of camera `b` expressed in camera `a`'s frame:
/// `R = R_b R_aᵀ`, `t = t_b - R_b R_aᵀ t_a`.
pub fn relative_pose(a: &CameraPose, b: &CameraPose) -> CameraPose {
    let r = b.rotation * a.rotation.transpose();
    let t = b.translation - r * a.translation;
    CameraPose {
        rotation: r,
        translation: t,
    }
}
