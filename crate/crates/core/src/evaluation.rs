//! Camera-controllability metrics, trajectory scale normalization,
//! evaluation-frame selection, and the dataset curation / motion
//! categorization rules.

use crate::geometry::CameraPose;
use crate::trajectory::Trajectory;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Orthonormality tolerance accepted by the rotation metrics; estimated
/// rotations come from SfM and are not exact.
pub const METRIC_ROTATION_TOL: f64 = 1e-3;

/// Background flow magnitude (px) at or below which a clip counts as having
/// a static camera.
pub const DEFAULT_STATIC_CAMERA_THRESHOLD: f64 = 1.0;

/// Category boundaries in pixels: mean object flow below 20 is small, below
/// 40 medium, 40 and above large.
pub const MOTION_SMALL_LIMIT: f64 = 20.0;
pub const MOTION_MEDIUM_LIMIT: f64 = 40.0;

/// Evaluation clips take 14 frames at a stride of 4, starting from the
/// middle frame; that needs at least 105 frames in the source video.
pub const EVAL_FRAME_COUNT: usize = 14;
pub const EVAL_FRAME_STRIDE: usize = 4;
pub const MIN_EVAL_TOTAL_FRAMES: usize = 105;

/// Translations of a trajectory whose cameras never move farther than this
/// from the first camera are left unscaled.
pub const SCALE_DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("rotation is not orthonormal within {METRIC_ROTATION_TOL:e} (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("trajectory lengths differ: estimated {est}, ground truth {gt}")]
    LengthMismatch { est: usize, gt: usize },
    #[error("clip has {total} frames; eval-frame selection needs at least {min}")]
    ClipTooShort { total: usize, min: usize },
    #[error("flow magnitude must be non-negative and finite, got {0}")]
    BadMagnitude(f64),
}

// ───────────────────────────────────────────────────────────────────────────
// Rotation / trajectory metrics
// ───────────────────────────────────────────────────────────────────────────

fn orthonormality_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r;
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev.max((r.determinant() - 1.0).abs())
}

fn check_rotation(r: &Matrix3<f64>) -> Result<(), EvalError> {
    let dev = orthonormality_deviation(r);
    if !dev.is_finite() || dev > METRIC_ROTATION_TOL {
        return Err(EvalError::NotOrthonormal(dev));
    }
    Ok(())
}

/// Geodesic angle between two rotations in degrees:
/// `acos(clamp((tr(R_est R_gtᵀ) - 1) / 2, -1, 1))`. The clamp keeps the
/// 180-degree case (trace numerically below -1) out of NaN territory.
pub fn rotation_error(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> Result<f64, EvalError> {
    check_rotation(r_est)?;
    check_rotation(r_gt)?;
    if r_est == r_gt {
        // acos is ill-conditioned at 1; identical inputs score exactly zero
        return Ok(0.0);
    }
    let trace = (r_est * r_gt.transpose()).trace();
    let cos = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Divides every translation by the scene scale: the largest distance from
/// the first camera center to any other camera center. Static trajectories
/// (scale below [`SCALE_DEGENERACY_EPS`]) are returned unchanged, and the
/// operation is idempotent because the normalized trajectory has scale 1.
///
/// Expects a trajectory already normalized to its first frame.
pub fn scale_normalize_translations(traj: &Trajectory) -> Trajectory {
    let origin = traj.frames()[0].pose.camera_center();
    let scale = traj
        .frames()
        .iter()
        .map(|f| (f.pose.camera_center() - origin).norm())
        .fold(0.0f64, f64::max);
    if scale < SCALE_DEGENERACY_EPS {
        return traj.clone();
    }
    traj.map_poses(|pose| {
        CameraPose::from_parts_unchecked(*pose.rotation(), pose.translation() / scale)
    })
}

/// Per-frame error terms between an estimated and a ground-truth pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    #[serde(rename = "rotErr")]
    pub rot_err: f64,
    #[serde(rename = "transErr")]
    pub trans_err: f64,
    #[serde(rename = "camMC")]
    pub cam_mc: f64,
}

/// Camera-controllability summary: per-frame means of the rotation angle
/// error (degrees), the translation error, and the Frobenius norm of the
/// 3x4 extrinsic-matrix difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraMetrics {
    #[serde(rename = "mRotErr")]
    pub m_rot_err: f64,
    #[serde(rename = "mTransErr")]
    pub m_trans_err: f64,
    #[serde(rename = "mCamMC")]
    pub m_cam_mc: f64,
    #[serde(rename = "perFrame")]
    pub per_frame: Vec<FrameMetrics>,
}

/// Compares two equal-length trajectories frame by frame. Both are expected
/// to be normalized to their first frame and scale-normalized; this function
/// measures, it does not normalize.
pub fn evaluate_trajectories(
    est: &Trajectory,
    gt: &Trajectory,
) -> Result<CameraMetrics, EvalError> {
    if est.len() != gt.len() {
        return Err(EvalError::LengthMismatch {
            est: est.len(),
            gt: gt.len(),
        });
    }

    let mut per_frame = Vec::with_capacity(est.len());
    for (fe, fg) in est.frames().iter().zip(gt.frames()) {
        let rot_err = rotation_error(fe.pose.rotation(), fg.pose.rotation())?;
        let dt = fe.pose.translation() - fg.pose.translation();
        let trans_err = dt.norm();
        let dr = fe.pose.rotation() - fg.pose.rotation();
        let cam_mc = (dr.norm_squared() + dt.norm_squared()).sqrt();
        per_frame.push(FrameMetrics {
            rot_err,
            trans_err,
            cam_mc,
        });
    }

    let n = per_frame.len() as f64;
    Ok(CameraMetrics {
        m_rot_err: per_frame.iter().map(|m| m.rot_err).sum::<f64>() / n,
        m_trans_err: per_frame.iter().map(|m| m.trans_err).sum::<f64>() / n,
        m_cam_mc: per_frame.iter().map(|m| m.cam_mc).sum::<f64>() / n,
        per_frame,
    })
}

// ───────────────────────────────────────────────────────────────────────────
// Frame selection and curation rules
// ───────────────────────────────────────────────────────────────────────────

/// Picks the 14 evaluation frame indices of a clip: the middle frame first,
/// then 13 more at a stride of 4.
pub fn select_eval_frames(total_frames: usize) -> Result<Vec<usize>, EvalError> {
    if total_frames < MIN_EVAL_TOTAL_FRAMES {
        return Err(EvalError::ClipTooShort {
            total: total_frames,
            min: MIN_EVAL_TOTAL_FRAMES,
        });
    }
    let first = total_frames / 2;
    Ok((0..EVAL_FRAME_COUNT)
        .map(|i| first + i * EVAL_FRAME_STRIDE)
        .collect())
}

/// Object-motion benchmark categories, partitioning [0, inf) at 20 and 40
/// pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionCategory {
    Small,
    Medium,
    Large,
}

impl MotionCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            MotionCategory::Small => "small",
            MotionCategory::Medium => "medium",
            MotionCategory::Large => "large",
        }
    }
}

impl fmt::Display for MotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Buckets a clip by its mean object flow magnitude: below 20 px small,
/// below 40 px medium, 40 px and above large.
pub fn classify_motion(mean_magnitude: f64) -> Result<MotionCategory, EvalError> {
    if !mean_magnitude.is_finite() || mean_magnitude < 0.0 {
        return Err(EvalError::BadMagnitude(mean_magnitude));
    }
    Ok(if mean_magnitude < MOTION_SMALL_LIMIT {
        MotionCategory::Small
    } else if mean_magnitude < MOTION_MEDIUM_LIMIT {
        MotionCategory::Medium
    } else {
        MotionCategory::Large
    })
}

/// Static-camera filter for curation: a clip is static when the mean
/// background flow magnitude does not exceed the threshold (clips whose
/// background moves more are filtered out).
pub fn is_static_camera(background_mean_magnitude: f64, threshold: f64) -> bool {
    background_mean_magnitude <= threshold
}
