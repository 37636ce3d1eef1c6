//! Deterministic geometric and numerical core for camera-controllable video
//! synthesis pipelines: dense camera-motion flow fields from depth maps and
//! camera trajectories, integration with object-motion flow, flow codecs and
//! normalization for diffusion-model consumption, evaluation trajectories,
//! and camera-controllability metrics.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`geometry`]: pinhole camera model and world-to-camera rigid transforms
//! - [`field`]: dense per-pixel grids (depth, flow, masks, images)
//! - [`trajectory`]: trajectory generation, normalization, and file formats
//! - [`synthesis`]: camera flow, camera/object flow integration, warping
//! - [`codec`]: flow normalization, three-channel packing, `.flo` I/O,
//!   statistics, and color-wheel visualization
//! - [`evaluation`]: camera-controllability metrics and curation rules
//! - [`schedule`]: quadratic timestep sampling for training schedules
//!
//! All operations are pure functions over immutable inputs and are safe to
//! call from multiple threads.

pub mod codec;
pub mod evaluation;
pub mod field;
pub mod geometry;
pub mod schedule;
pub mod synthesis;
pub mod trajectory;

pub use codec::{FlowScale, NormalizationProfile, PackedFlowImage};
pub use evaluation::{CameraMetrics, MotionCategory};
pub use field::{BinaryMask, DepthMap, FlowField, ImageGrid};
pub use geometry::{CameraIntrinsics, CameraPose, Pixel, Point3};
pub use schedule::QtsConfig;
pub use synthesis::{DepthPolicy, SynthesizedFlow};
pub use trajectory::{Trajectory, TrajectoryFrame, TrajectoryKind};
