//! Subcommand argument structs and implementations.

use crate::files::{
    load_depth, load_flo, load_mask, load_rgb_image, load_trajectory, save_flo, save_image_grid,
    save_mask, sorted_flo_files, sorted_png_files, write_text_output,
};
use anyhow::{bail, Context, Result};
use camflow::codec::{
    flow_stats, normalize_flow, pack_three_channel, packed_to_rgb8, visualize,
    NormalizationProfile,
};
use camflow::evaluation::{
    classify_motion, evaluate_trajectories, is_static_camera, scale_normalize_translations,
    DEFAULT_STATIC_CAMERA_THRESHOLD,
};
use camflow::field::{BinaryMask, DepthMap, ImageGrid};
use camflow::geometry::CameraIntrinsics;
use camflow::schedule::{qts_sample_batch, QtsConfig};
use camflow::synthesis::{camera_flow, forward_warp, integrate_flows, DepthPolicy};
use camflow::trajectory::{
    generate_basic, generate_circular, generate_dolly_zoom, to_json, write_re10k, Trajectory,
    TrajectoryKind,
};
use clap::Args;
use std::fs;
use std::path::{Path, PathBuf};

pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("'{s}' is not WxH"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in '{s}'"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in '{s}'"))?;
    if w == 0 || h == 0 {
        return Err("size must be non-zero".into());
    }
    Ok((w, h))
}

fn parse_kind(s: &str) -> Result<TrajectoryKind, String> {
    s.parse().map_err(|e: camflow::trajectory::TrajectoryError| e.to_string())
}

fn parse_profile(s: &str) -> Result<NormalizationProfile, String> {
    s.parse().map_err(|e: camflow::codec::CodecError| e.to_string())
}

/// Intrinsics from the image size with optional per-field overrides. The
/// defaults put the principal point at the image center with a focal length
/// of half the width (square pixels).
fn resolve_intrinsics(
    size: (usize, usize),
    fx: Option<f64>,
    fy: Option<f64>,
    cx: Option<f64>,
    cy: Option<f64>,
) -> Result<CameraIntrinsics> {
    let (w, h) = size;
    let fx = fx.unwrap_or(w as f64 / 2.0);
    Ok(CameraIntrinsics::new(
        fx,
        fy.unwrap_or(fx),
        cx.unwrap_or(w as f64 / 2.0),
        cy.unwrap_or(h as f64 / 2.0),
        w,
        h,
    )?)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Provenance echo written next to multi-file outputs.
fn write_config_echo(dir: &Path, command: &str, config: serde_json::Value) -> Result<()> {
    let doc = serde_json::json!({ "command": command, "config": config });
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&doc).expect("config echo serializes"),
    )
    .with_context(|| format!("writing {}", dir.join("config.json").display()))
}

fn check_depth_matches(depth: &DepthMap, traj: &Trajectory) -> Result<()> {
    let (w, h) = traj.image_size();
    if depth.width() != w || depth.height() != h {
        bail!(
            "depth map is {}x{} but the trajectory describes {w}x{h} images",
            depth.width(),
            depth.height()
        );
    }
    Ok(())
}

// ───────────────────────────────────────────────────────────────────────────
// traj gen
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct TrajGenArgs {
    /// left | right | up | down | zoom-in | zoom-out | stop | circular | dolly-zoom
    #[arg(long, value_parser = parse_kind)]
    pub kind: TrajectoryKind,
    /// total translation (scene units) for the basic kinds
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
    /// number of frames
    #[arg(long, default_value_t = 14)]
    pub frames: usize,
    /// image size as WxH
    #[arg(long, default_value = "576x320", value_parser = parse_size)]
    pub size: (usize, usize),
    #[arg(long)]
    pub fx: Option<f64>,
    #[arg(long)]
    pub fy: Option<f64>,
    #[arg(long)]
    pub cx: Option<f64>,
    #[arg(long)]
    pub cy: Option<f64>,
    /// circle radius (circular)
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// swept angle in degrees (circular)
    #[arg(long, default_value_t = 90.0)]
    pub total_angle: f64,
    /// fixation-point depth (circular)
    #[arg(long, default_value_t = 10.0)]
    pub look_at_depth: f64,
    /// subject-plane depth (dolly-zoom)
    #[arg(long, default_value_t = 10.0)]
    pub subject_depth: f64,
    /// total camera advance (dolly-zoom)
    #[arg(long, default_value_t = 5.0)]
    pub total_dolly: f64,
    /// output file; `.json` selects the JSON format, anything else the
    /// 19-field text format
    #[arg(long)]
    pub out: PathBuf,
}

pub fn traj_gen(args: &TrajGenArgs) -> Result<()> {
    let k0 = resolve_intrinsics(args.size, args.fx, args.fy, args.cx, args.cy)?;
    let traj = match args.kind {
        TrajectoryKind::Circular => generate_circular(
            args.radius,
            args.total_angle,
            args.frames,
            &k0,
            args.look_at_depth,
        )?,
        TrajectoryKind::DollyZoom => {
            generate_dolly_zoom(args.subject_depth, args.total_dolly, args.frames, &k0)?
        }
        kind => generate_basic(kind, args.magnitude, args.frames, &k0)?,
    };

    let text = if args.out.extension().is_some_and(|e| e == "json") {
        to_json(&traj)
    } else {
        let timestamps: Vec<i64> = (0..traj.len() as i64).collect();
        write_re10k(&traj, &timestamps)?
    };
    fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

// ───────────────────────────────────────────────────────────────────────────
// flow camera / integrate
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct FlowCameraArgs {
    /// depth map (.pfm, or raw f32 with a `<file>.json` sidecar)
    #[arg(long)]
    pub depth: PathBuf,
    /// trajectory file (.json or 19-field text)
    #[arg(long)]
    pub traj: PathBuf,
    /// image size as WxH, used to denormalize text-format intrinsics
    #[arg(long, default_value = "576x320", value_parser = parse_size)]
    pub size: (usize, usize),
    /// output directory for per-frame flow_NNNN.flo and valid_NNNN.png
    #[arg(long)]
    pub out: PathBuf,
}

pub fn flow_camera(args: &FlowCameraArgs) -> Result<()> {
    let depth = load_depth(&args.depth)?;
    let traj = load_trajectory(&args.traj, args.size)?.normalized_to_first_frame();
    check_depth_matches(&depth, &traj)?;
    ensure_out_dir(&args.out)?;

    let k0 = traj.frames()[0].intrinsics;
    for (t, frame) in traj.frames().iter().enumerate() {
        let out = camera_flow(&depth, &k0, &frame.pose, &frame.intrinsics)
            .with_context(|| format!("synthesizing frame {t}"))?;
        save_flo(&args.out.join(format!("flow_{t:04}.flo")), &out.flow)?;
        save_mask(&args.out.join(format!("valid_{t:04}.png")), &out.validity)?;
    }
    write_config_echo(
        &args.out,
        "flow camera",
        serde_json::json!({
            "depth": args.depth.display().to_string(),
            "traj": args.traj.display().to_string(),
            "size": [traj.image_size().0, traj.image_size().1],
            "frames": traj.len(),
        }),
    )
}

#[derive(Args)]
pub struct FlowIntegrateArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub traj: PathBuf,
    /// directory of per-frame object-flow .flo files (sorted by name, one
    /// per trajectory frame)
    #[arg(long)]
    pub object_flow: PathBuf,
    /// moving-object mask PNG (nonzero = moving)
    #[arg(long)]
    pub mask: PathBuf,
    /// sample the depth of a displaced object pixel at its new location
    /// instead of the original one
    #[arg(long)]
    pub depth_at_displaced: bool,
    #[arg(long, default_value = "576x320", value_parser = parse_size)]
    pub size: (usize, usize),
    #[arg(long)]
    pub out: PathBuf,
}

pub fn flow_integrate(args: &FlowIntegrateArgs) -> Result<()> {
    let depth = load_depth(&args.depth)?;
    let traj = load_trajectory(&args.traj, args.size)?.normalized_to_first_frame();
    check_depth_matches(&depth, &traj)?;
    let mask = load_mask(&args.mask)?;

    let flo_files = sorted_flo_files(&args.object_flow)?;
    if flo_files.len() != traj.len() {
        bail!(
            "{} object-flow files in {} for {} trajectory frames",
            flo_files.len(),
            args.object_flow.display(),
            traj.len()
        );
    }
    ensure_out_dir(&args.out)?;

    let policy = if args.depth_at_displaced {
        DepthPolicy::AtDisplaced
    } else {
        DepthPolicy::AtOriginal
    };
    let k0 = traj.frames()[0].intrinsics;
    for (t, (frame, flo_path)) in traj.frames().iter().zip(&flo_files).enumerate() {
        let object = load_flo(flo_path)?;
        let out = integrate_flows(
            &depth,
            &k0,
            &frame.pose,
            &frame.intrinsics,
            &object,
            &mask,
            policy,
        )
        .with_context(|| format!("integrating frame {t}"))?;
        save_flo(&args.out.join(format!("flow_{t:04}.flo")), &out.flow)?;
        save_mask(&args.out.join(format!("valid_{t:04}.png")), &out.validity)?;
    }
    write_config_echo(
        &args.out,
        "flow integrate",
        serde_json::json!({
            "depth": args.depth.display().to_string(),
            "traj": args.traj.display().to_string(),
            "object_flow": args.object_flow.display().to_string(),
            "mask": args.mask.display().to_string(),
            "depth_at_displaced": args.depth_at_displaced,
            "frames": traj.len(),
        }),
    )
}

// ───────────────────────────────────────────────────────────────────────────
// flow viz / pack / stats
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct FlowVizArgs {
    /// input .flo file
    #[arg(long)]
    pub input: PathBuf,
    /// saturation scale in pixels (defaults to the field maximum)
    #[arg(long)]
    pub max_magnitude: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn flow_viz(args: &FlowVizArgs) -> Result<()> {
    let flow = load_flo(&args.input)?;
    let img = visualize(&flow, args.max_magnitude);
    image::RgbImage::from_raw(img.width as u32, img.height as u32, img.rgb)
        .context("building visualization image")?
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))
}

#[derive(Args)]
pub struct FlowPackArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// normalization profile: omsm (18, 12) or fvsm (45, 24)
    #[arg(long, default_value = "fvsm", value_parser = parse_profile)]
    pub profile: NormalizationProfile,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn flow_pack(args: &FlowPackArgs) -> Result<()> {
    let flow = load_flo(&args.input)?;
    let packed = pack_three_channel(&normalize_flow(&flow, args.profile.scale()));
    let rgb = packed_to_rgb8(&packed);
    image::RgbImage::from_raw(packed.width() as u32, packed.height() as u32, rgb)
        .context("building packed image")?
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))
}

#[derive(Args)]
pub struct FlowStatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// restrict the statistics to the nonzero pixels of this mask
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// output JSON file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn flow_stats_cmd(args: &FlowStatsArgs) -> Result<()> {
    let flow = load_flo(&args.input)?;
    let mask = args.mask.as_deref().map(load_mask).transpose()?;
    let stats = flow_stats(&flow, mask.as_ref())?;
    let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    write_text_output(args.out.as_deref(), &format!("{json}\n"))
}

// ───────────────────────────────────────────────────────────────────────────
// warp preview
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct WarpPreviewArgs {
    /// first-frame image (PNG)
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long, default_value = "576x320", value_parser = parse_size)]
    pub size: (usize, usize),
    /// output directory for warp_NNNN.png and holes_NNNN.png
    #[arg(long)]
    pub out: PathBuf,
}

pub fn warp_preview(args: &WarpPreviewArgs) -> Result<()> {
    let image = load_rgb_image(&args.image)?;
    let depth = load_depth(&args.depth)?;
    let traj = load_trajectory(&args.traj, args.size)?.normalized_to_first_frame();
    check_depth_matches(&depth, &traj)?;
    if image.width() != depth.width() || image.height() != depth.height() {
        bail!(
            "image is {}x{} but depth is {}x{}",
            image.width(),
            image.height(),
            depth.width(),
            depth.height()
        );
    }
    ensure_out_dir(&args.out)?;

    let k0 = traj.frames()[0].intrinsics;
    for (t, frame) in traj.frames().iter().enumerate() {
        let (warped, holes) = forward_warp(&image, &depth, &k0, &frame.pose, &frame.intrinsics)
            .with_context(|| format!("warping frame {t}"))?;
        save_image_grid(&args.out.join(format!("warp_{t:04}.png")), &warped)?;
        save_mask(&args.out.join(format!("holes_{t:04}.png")), &holes)?;
    }
    write_config_echo(
        &args.out,
        "warp preview",
        serde_json::json!({
            "image": args.image.display().to_string(),
            "depth": args.depth.display().to_string(),
            "traj": args.traj.display().to_string(),
            "frames": traj.len(),
        }),
    )
}

// ───────────────────────────────────────────────────────────────────────────
// eval cam
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct EvalCamArgs {
    /// estimated trajectory (.json or 19-field text)
    #[arg(long)]
    pub est: PathBuf,
    /// ground-truth trajectory
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value = "576x320", value_parser = parse_size)]
    pub size: (usize, usize),
    /// metrics JSON output (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval_cam(args: &EvalCamArgs) -> Result<()> {
    // protocol: re-express both trajectories relative to their first frame,
    // remove the scene-scale ambiguity, then compare
    let est = scale_normalize_translations(
        &load_trajectory(&args.est, args.size)?.normalized_to_first_frame(),
    );
    let gt = scale_normalize_translations(
        &load_trajectory(&args.gt, args.size)?.normalized_to_first_frame(),
    );
    let metrics = evaluate_trajectories(&est, &gt)?;
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    write_text_output(args.out.as_deref(), &format!("{json}\n"))
}

// ───────────────────────────────────────────────────────────────────────────
// curate
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct CurateArgs {
    /// root directory; every subdirectory containing .flo files is a clip
    #[arg(long)]
    pub clips: PathBuf,
    /// per-clip moving-object mask file name; the background is its
    /// complement (the whole frame when the file is missing)
    #[arg(long, default_value = "mask.png")]
    pub mask_name: String,
    /// background mean magnitude above which a clip counts as camera motion
    #[arg(long, default_value_t = DEFAULT_STATIC_CAMERA_THRESHOLD)]
    pub threshold: f64,
    /// report per-clip failures and continue instead of aborting
    #[arg(long)]
    pub keep_going: bool,
    /// manifest output (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct ClipSummary {
    background_mean: f64,
    object_mean: f64,
}

fn summarize_clip(dir: &Path, mask_name: &str) -> Result<ClipSummary> {
    let flo_files = sorted_flo_files(dir)?;
    if flo_files.is_empty() {
        bail!("{} contains no .flo files", dir.display());
    }
    let mask_path = dir.join(mask_name);
    let mask = if mask_path.is_file() {
        Some(load_mask(&mask_path)?)
    } else {
        None
    };

    let mut bg = (0.0f64, 0usize);
    let mut obj = (0.0f64, 0usize);
    for path in &flo_files {
        let flow = load_flo(path)?;
        let (background, object): (Option<BinaryMask>, Option<BinaryMask>) = match &mask {
            Some(m) => (Some(m.complement()), Some(m.clone())),
            None => (None, None),
        };
        let s = flow_stats(&flow, background.as_ref())
            .with_context(|| format!("background stats for {}", path.display()))?;
        bg.0 += s.mean_magnitude * s.count as f64;
        bg.1 += s.count;
        // object motion over the mask; without a mask the whole frame stands
        // in for it
        match object.as_ref() {
            Some(m) if m.count_ones() > 0 => {
                let s = flow_stats(&flow, Some(m))?;
                obj.0 += s.mean_magnitude * s.count as f64;
                obj.1 += s.count;
            }
            _ => {
                let s = flow_stats(&flow, None)?;
                obj.0 += s.mean_magnitude * s.count as f64;
                obj.1 += s.count;
            }
        }
    }
    Ok(ClipSummary {
        background_mean: bg.0 / bg.1 as f64,
        object_mean: obj.0 / obj.1 as f64,
    })
}

pub fn curate(args: &CurateArgs) -> Result<()> {
    let mut clip_dirs: Vec<PathBuf> = fs::read_dir(&args.clips)
        .with_context(|| format!("listing {}", args.clips.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    clip_dirs.sort();
    if clip_dirs.is_empty() {
        bail!("no clip directories under {}", args.clips.display());
    }

    let mut manifest = String::new();
    let mut failures = 0usize;
    for dir in &clip_dirs {
        match summarize_clip(dir, &args.mask_name) {
            Ok(summary) => {
                let verdict = if is_static_camera(summary.background_mean, args.threshold) {
                    "static"
                } else {
                    "moving"
                };
                let category = classify_motion(summary.object_mean)?;
                manifest.push_str(&format!(
                    "{}\t{:.6}\t{}\t{}\n",
                    dir.display(),
                    summary.background_mean,
                    verdict,
                    category
                ));
            }
            Err(err) if args.keep_going => {
                eprintln!("curate: {}: {err:#}", dir.display());
                failures += 1;
            }
            Err(err) => return Err(err.context(format!("clip {}", dir.display()))),
        }
    }

    write_text_output(args.out.as_deref(), &manifest)?;
    if failures > 0 {
        bail!("{failures} clip(s) failed");
    }
    Ok(())
}

// ───────────────────────────────────────────────────────────────────────────
// qts
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct QtsArgs {
    /// number of samples
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = camflow::schedule::QTS_LO)]
    pub lo: f64,
    #[arg(long, default_value_t = camflow::schedule::QTS_HI)]
    pub hi: f64,
    /// newline-delimited output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn qts(args: &QtsArgs) -> Result<()> {
    if args.count == 0 {
        bail!("--count must be at least 1");
    }
    let config = QtsConfig::new(args.lo, args.hi)?;
    let samples = qts_sample_batch(args.count, args.seed, &config);
    let mut text = String::new();
    for s in samples {
        text.push_str(&format!("{s}\n"));
    }
    write_text_output(args.out.as_deref(), &text)
}

// ───────────────────────────────────────────────────────────────────────────
// xtslice
// ───────────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct XtsliceArgs {
    /// directory of frame PNGs, stacked in file-name order
    #[arg(long)]
    pub frames: PathBuf,
    /// pixel row to extract from every frame
    #[arg(long)]
    pub row: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn xtslice(args: &XtsliceArgs) -> Result<()> {
    let files = sorted_png_files(&args.frames)?;
    if files.is_empty() {
        bail!("no .png frames in {}", args.frames.display());
    }

    let mut slice: Option<ImageGrid> = None;
    for (t, path) in files.iter().enumerate() {
        let frame = load_rgb_image(path)?;
        let out = slice.get_or_insert_with(|| ImageGrid::zeros(frame.width(), files.len(), 3));
        if frame.width() != out.width() {
            bail!(
                "{} is {} px wide, expected {}",
                path.display(),
                frame.width(),
                out.width()
            );
        }
        if args.row >= frame.height() {
            bail!(
                "row {} out of range for {} ({} rows)",
                args.row,
                path.display(),
                frame.height()
            );
        }
        for u in 0..frame.width() {
            for c in 0..3 {
                out.set(u, t, c, frame.at(u, args.row, c));
            }
        }
    }
    save_image_grid(&args.out, &slice.expect("at least one frame"))
}
