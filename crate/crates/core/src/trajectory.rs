//! Camera trajectory generation, normalization, and serialization.
//!
//! Translation signs for the basic trajectories are pinned by the observable
//! flow direction, not by convention folklore: `left` means the scene content
//! flows right, `zoom-in` means the flow expands radially from the principal
//! point. The flow-synthesis tests hold these oracles.

use crate::geometry::{relative_pose, CameraIntrinsics, CameraPose, GeometryError, Point3};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default number of video frames in a synthesized clip.
pub const DEFAULT_FRAME_COUNT: usize = 14;

/// Per-entry orthonormality tolerance accepted when parsing poses from
/// trajectory files. Looser than the constructor default because SfM
/// estimates carry numerical noise.
pub const PARSED_ROTATION_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory must contain at least one frame")]
    Empty,
    #[error("frame {frame} image size {got_w}x{got_h} differs from frame 0 size {w}x{h}")]
    MixedImageSize {
        frame: usize,
        got_w: usize,
        got_h: usize,
        w: usize,
        h: usize,
    },
    #[error("kind '{0}' needs its dedicated generator")]
    NotBasicKind(TrajectoryKind),
    #[error("unknown trajectory kind '{0}'")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dolly of {total_dolly} would pass through the subject plane at depth {subject_depth}")]
    DollyThroughSubject { total_dolly: f64, subject_depth: f64 },
    #[error("line {line}: expected 19 whitespace-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: invalid pose: {source}")]
    InvalidPose { line: usize, source: GeometryError },
    #[error("{timestamps} timestamps for {frames} frames")]
    TimestampCount { timestamps: usize, frames: usize },
    #[error("trajectory json uses convention '{0}', expected 'world_to_camera'")]
    WrongConvention(String),
    #[error("trajectory json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ───────────────────────────────────────────────────────────────────────────
// Kinds
// ───────────────────────────────────────────────────────────────────────────

/// The camera-motion families supported by the generators. The first seven
/// are the basic evaluation motions; `circular` and `dolly-zoom` have
/// dedicated generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    Left,
    Right,
    Up,
    Down,
    ZoomIn,
    ZoomOut,
    Stop,
    Circular,
    DollyZoom,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 9] = [
        TrajectoryKind::Left,
        TrajectoryKind::Right,
        TrajectoryKind::Up,
        TrajectoryKind::Down,
        TrajectoryKind::ZoomIn,
        TrajectoryKind::ZoomOut,
        TrajectoryKind::Stop,
        TrajectoryKind::Circular,
        TrajectoryKind::DollyZoom,
    ];

    /// The seven kinds accepted by [`generate_basic`].
    pub const BASIC: [TrajectoryKind; 7] = [
        TrajectoryKind::Left,
        TrajectoryKind::Right,
        TrajectoryKind::Up,
        TrajectoryKind::Down,
        TrajectoryKind::ZoomIn,
        TrajectoryKind::ZoomOut,
        TrajectoryKind::Stop,
    ];

    pub fn is_basic(self) -> bool {
        !matches!(self, TrajectoryKind::Circular | TrajectoryKind::DollyZoom)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Left => "left",
            TrajectoryKind::Right => "right",
            TrajectoryKind::Up => "up",
            TrajectoryKind::Down => "down",
            TrajectoryKind::ZoomIn => "zoom-in",
            TrajectoryKind::ZoomOut => "zoom-out",
            TrajectoryKind::Stop => "stop",
            TrajectoryKind::Circular => "circular",
            TrajectoryKind::DollyZoom => "dolly-zoom",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrajectoryKind {
    type Err = TrajectoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrajectoryKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TrajectoryError::UnknownKind(s.to_string()))
    }
}

// ───────────────────────────────────────────────────────────────────────────
// Trajectory
// ───────────────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame {
    pub pose: CameraPose,
    pub intrinsics: CameraIntrinsics,
}

/// Ordered per-frame `(pose, intrinsics)` sequence. Non-empty, and every
/// frame shares the image size of frame 0. Focal lengths may vary across
/// frames (dolly zoom).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<TrajectoryFrame>,
}

impl Trajectory {
    pub fn new(frames: Vec<TrajectoryFrame>) -> Result<Self, TrajectoryError> {
        if frames.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        let (w, h) = (frames[0].intrinsics.width, frames[0].intrinsics.height);
        for (i, f) in frames.iter().enumerate() {
            if f.intrinsics.width != w || f.intrinsics.height != h {
                return Err(TrajectoryError::MixedImageSize {
                    frame: i,
                    got_w: f.intrinsics.width,
                    got_h: f.intrinsics.height,
                    w,
                    h,
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[TrajectoryFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn image_size(&self) -> (usize, usize) {
        (
            self.frames[0].intrinsics.width,
            self.frames[0].intrinsics.height,
        )
    }

    /// Re-expresses every pose relative to frame 0, which becomes the exact
    /// identity. The relative pose between any two frames is preserved.
    pub fn normalized_to_first_frame(&self) -> Trajectory {
        let base = self.frames[0].pose.clone();
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| TrajectoryFrame {
                pose: if i == 0 {
                    CameraPose::identity()
                } else {
                    relative_pose(&base, &f.pose)
                },
                intrinsics: f.intrinsics,
            })
            .collect();
        Trajectory { frames }
    }

    pub(crate) fn map_poses<F: FnMut(&CameraPose) -> CameraPose>(&self, mut f: F) -> Trajectory {
        Trajectory {
            frames: self
                .frames
                .iter()
                .map(|fr| TrajectoryFrame {
                    pose: f(&fr.pose),
                    intrinsics: fr.intrinsics,
                })
                .collect(),
        }
    }
}

// ───────────────────────────────────────────────────────────────────────────
// Generators
// ───────────────────────────────────────────────────────────────────────────

fn check_frame_count(t_count: usize) -> Result<(), TrajectoryError> {
    if t_count == 0 {
        return Err(TrajectoryError::InvalidParameter(
            "frame count must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Fraction of the full motion reached at frame `i` of `t_count`: linear from
/// 0 at frame 0 to 1 at the last frame.
fn step_fraction(i: usize, t_count: usize) -> f64 {
    if t_count < 2 {
        0.0
    } else {
        i as f64 / (t_count - 1) as f64
    }
}

/// Generates one of the seven basic camera motions. Frame 0 is the identity;
/// translations ramp linearly to the full magnitude. Under the
/// world-to-camera convention the extrinsic translation is the negated
/// camera-center motion, which yields:
///
/// - `left`/`right`: t_x = ±magnitude (scene flows right / left)
/// - `up`/`down`: t_y = ±magnitude (scene flows down / up; v grows downward)
/// - `zoom-in`/`zoom-out`: t_z = ∓magnitude (flow expands / contracts)
/// - `stop`: identity poses throughout
pub fn generate_basic(
    kind: TrajectoryKind,
    magnitude: f64,
    t_count: usize,
    k0: &CameraIntrinsics,
) -> Result<Trajectory, TrajectoryError> {
    if !kind.is_basic() {
        return Err(TrajectoryError::NotBasicKind(kind));
    }
    check_frame_count(t_count)?;
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "magnitude must be non-negative, got {magnitude}"
        )));
    }

    let direction = match kind {
        TrajectoryKind::Left => Vector3::new(1.0, 0.0, 0.0),
        TrajectoryKind::Right => Vector3::new(-1.0, 0.0, 0.0),
        TrajectoryKind::Up => Vector3::new(0.0, 1.0, 0.0),
        TrajectoryKind::Down => Vector3::new(0.0, -1.0, 0.0),
        TrajectoryKind::ZoomIn => Vector3::new(0.0, 0.0, -1.0),
        TrajectoryKind::ZoomOut => Vector3::new(0.0, 0.0, 1.0),
        TrajectoryKind::Stop => Vector3::zeros(),
        TrajectoryKind::Circular | TrajectoryKind::DollyZoom => unreachable!(),
    };

    let frames = (0..t_count)
        .map(|i| {
            let step = magnitude * step_fraction(i, t_count);
            let pose = if step == 0.0 {
                CameraPose::identity()
            } else {
                CameraPose::from_parts_unchecked(Matrix3::identity(), direction * step)
            };
            TrajectoryFrame {
                pose,
                intrinsics: *k0,
            }
        })
        .collect();
    Trajectory::new(frames)
}

/// Rows of a world-to-camera rotation aiming a camera at `target` from
/// `center`, with the camera's y-axis (image-down) aligned as closely as
/// possible with world +y.
fn look_at_rotation(center: &Point3, target: &Point3) -> Matrix3<f64> {
    let down = Vector3::new(0.0, 1.0, 0.0);
    let z = (target - center).normalize();
    let x = down.cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

/// Forward-facing circular arc: camera centers sweep `total_angle` degrees
/// along a circle of the given radius in the x-y plane of frame 1, starting
/// at the frame-1 center, with every frame re-aimed at the fixation point
/// `(0, 0, look_at_depth)`.
pub fn generate_circular(
    radius: f64,
    total_angle_deg: f64,
    t_count: usize,
    k0: &CameraIntrinsics,
    look_at_depth: f64,
) -> Result<Trajectory, TrajectoryError> {
    if t_count < 2 {
        return Err(TrajectoryError::InvalidParameter(format!(
            "circular trajectory needs at least 2 frames, got {t_count}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if !(look_at_depth.is_finite() && look_at_depth > 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "look-at depth must be positive, got {look_at_depth}"
        )));
    }
    if !total_angle_deg.is_finite() {
        return Err(TrajectoryError::InvalidParameter(
            "total angle must be finite".into(),
        ));
    }

    let fixation = Point3::new(0.0, 0.0, look_at_depth);
    let total = total_angle_deg.to_radians();
    let frames = (0..t_count)
        .map(|i| {
            let theta = total * step_fraction(i, t_count);
            // circle centered at (-radius, 0, 0) passes through the origin at theta = 0
            let center = Point3::new(radius * (theta.cos() - 1.0), radius * theta.sin(), 0.0);
            let pose = if theta == 0.0 {
                CameraPose::identity()
            } else {
                let r = look_at_rotation(&center, &fixation);
                let t = -(r * center.coords);
                CameraPose::from_parts_unchecked(r, t)
            };
            TrajectoryFrame {
                pose,
                intrinsics: *k0,
            }
        })
        .collect();
    Trajectory::new(frames)
}

/// Dolly zoom: the camera advances toward a fronto-parallel subject plane
/// while the focal length shrinks so the subject's projected size stays
/// constant. Pinhole similarity gives the focal law
/// `f_t = f_0 * (subject_depth - dz_t) / subject_depth`.
pub fn generate_dolly_zoom(
    subject_depth: f64,
    total_dolly: f64,
    t_count: usize,
    k0: &CameraIntrinsics,
) -> Result<Trajectory, TrajectoryError> {
    check_frame_count(t_count)?;
    if !(subject_depth.is_finite() && subject_depth > 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "subject depth must be positive, got {subject_depth}"
        )));
    }
    if !(total_dolly.is_finite() && total_dolly > 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "total dolly must be positive, got {total_dolly}"
        )));
    }
    if total_dolly >= subject_depth {
        return Err(TrajectoryError::DollyThroughSubject {
            total_dolly,
            subject_depth,
        });
    }

    let frames = (0..t_count)
        .map(|i| {
            let dz = total_dolly * step_fraction(i, t_count);
            let pose = if dz == 0.0 {
                CameraPose::identity()
            } else {
                // camera center moves to +z by dz => extrinsic t_z = -dz
                CameraPose::from_parts_unchecked(
                    Matrix3::identity(),
                    Vector3::new(0.0, 0.0, -dz),
                )
            };
            let intrinsics = k0.with_focal_scale((subject_depth - dz) / subject_depth)?;
            Ok(TrajectoryFrame { pose, intrinsics })
        })
        .collect::<Result<Vec<_>, TrajectoryError>>()?;
    Trajectory::new(frames)
}

// ───────────────────────────────────────────────────────────────────────────
// RealEstate10K-style text format
// ───────────────────────────────────────────────────────────────────────────
//
// One frame per line, 19 whitespace-separated fields:
//
//   timestamp  fx fy cx cy  0 0  r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
//
// Intrinsics are stored normalized (fx, cx by width; fy, cy by height) and
// denormalized on read with a caller-supplied image size. The 3x4 block is
// the row-major world-to-camera [R | t]. A leading single-token line (the
// public dataset's video URL header) is skipped.

/// Parses the 19-field trajectory text format. `width`/`height` give the
/// pixel image size used to denormalize intrinsics.
pub fn read_re10k(
    text: &str,
    width: usize,
    height: usize,
) -> Result<(Trajectory, Vec<i64>), TrajectoryError> {
    let mut frames = Vec::new();
    let mut timestamps = Vec::new();
    let mut first_data_line = true;

    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if first_data_line && fields.len() == 1 {
            // video URL header
            first_data_line = false;
            continue;
        }
        first_data_line = false;
        if fields.len() != 19 {
            return Err(TrajectoryError::FieldCount {
                line: line_no,
                found: fields.len(),
            });
        }

        let ts: i64 = fields[0].parse().map_err(|_| TrajectoryError::Parse {
            line: line_no,
            reason: format!("timestamp '{}' is not an integer", fields[0]),
        })?;
        let mut nums = [0.0f64; 18];
        for (i, field) in fields[1..].iter().enumerate() {
            nums[i] = field.parse().map_err(|_| TrajectoryError::Parse {
                line: line_no,
                reason: format!("field '{field}' is not a number"),
            })?;
        }

        let intrinsics = CameraIntrinsics::new(
            nums[0] * width as f64,
            nums[1] * height as f64,
            nums[2] * width as f64,
            nums[3] * height as f64,
            width,
            height,
        )
        .map_err(|source| TrajectoryError::InvalidPose {
            line: line_no,
            source,
        })?;

        // nums[4], nums[5] are the format's two reserved zeros
        let m = &nums[6..18];
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        let pose = CameraPose::with_tolerance(rotation, translation, PARSED_ROTATION_TOL)
            .map_err(|source| TrajectoryError::InvalidPose {
                line: line_no,
                source,
            })?;

        frames.push(TrajectoryFrame { pose, intrinsics });
        timestamps.push(ts);
    }

    Ok((Trajectory::new(frames)?, timestamps))
}

/// Serializes a trajectory to the 19-field text format. Floats use Rust's
/// shortest round-trip formatting, so `read_re10k` recovers them bit-exactly.
pub fn write_re10k(traj: &Trajectory, timestamps: &[i64]) -> Result<String, TrajectoryError> {
    if timestamps.len() != traj.len() {
        return Err(TrajectoryError::TimestampCount {
            timestamps: timestamps.len(),
            frames: traj.len(),
        });
    }
    let mut out = String::new();
    for (frame, &ts) in traj.frames().iter().zip(timestamps) {
        let k = &frame.intrinsics;
        let (w, h) = (k.width as f64, k.height as f64);
        let r = frame.pose.rotation();
        let t = frame.pose.translation();
        out.push_str(&format!(
            "{} {} {} {} {} 0 0 {} {} {} {} {} {} {} {} {} {} {} {}\n",
            ts,
            k.fx / w,
            k.fy / h,
            k.cx / w,
            k.cy / h,
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t[0],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t[1],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t[2],
        ));
    }
    Ok(out)
}

// ───────────────────────────────────────────────────────────────────────────
// JSON format
// ───────────────────────────────────────────────────────────────────────────

const CONVENTION: &str = "world_to_camera";

#[derive(Serialize, Deserialize)]
struct IntrinsicsDoc {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

#[derive(Serialize, Deserialize)]
struct FrameDoc {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    intrinsics: IntrinsicsDoc,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryDoc {
    /// Extrinsics convention marker; always "world_to_camera".
    convention: String,
    /// Pixel (0, 0) sits at the center of the top-left pixel.
    pixel_origin: String,
    frames: Vec<FrameDoc>,
}

/// JSON export with explicit convention metadata; intrinsics are stored in
/// pixels, unlike the normalized text format.
pub fn to_json(traj: &Trajectory) -> String {
    let doc = TrajectoryDoc {
        convention: CONVENTION.to_string(),
        pixel_origin: "top_left_pixel_center".to_string(),
        frames: traj
            .frames()
            .iter()
            .map(|f| {
                let r = f.pose.rotation();
                let t = f.pose.translation();
                FrameDoc {
                    rotation: [
                        [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                        [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                        [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
                    ],
                    translation: [t[0], t[1], t[2]],
                    intrinsics: IntrinsicsDoc {
                        fx: f.intrinsics.fx,
                        fy: f.intrinsics.fy,
                        cx: f.intrinsics.cx,
                        cy: f.intrinsics.cy,
                        width: f.intrinsics.width,
                        height: f.intrinsics.height,
                    },
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("trajectory serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<Trajectory, TrajectoryError> {
    let doc: TrajectoryDoc = serde_json::from_str(text)?;
    if doc.convention != CONVENTION {
        return Err(TrajectoryError::WrongConvention(doc.convention));
    }
    let frames = doc
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let ri = f.rotation;
            let rotation = Matrix3::new(
                ri[0][0], ri[0][1], ri[0][2], ri[1][0], ri[1][1], ri[1][2], ri[2][0], ri[2][1],
                ri[2][2],
            );
            let translation = Vector3::new(f.translation[0], f.translation[1], f.translation[2]);
            let pose = CameraPose::with_tolerance(rotation, translation, PARSED_ROTATION_TOL)
                .map_err(|source| TrajectoryError::InvalidPose {
                    line: i,
                    source,
                })?;
            let intrinsics = CameraIntrinsics::new(
                f.intrinsics.fx,
                f.intrinsics.fy,
                f.intrinsics.cx,
                f.intrinsics.cy,
                f.intrinsics.width,
                f.intrinsics.height,
            )?;
            Ok(TrajectoryFrame { pose, intrinsics })
        })
        .collect::<Result<Vec<_>, TrajectoryError>>()?;
    Trajectory::new(frames)
}
