//! End-to-end tests driving the `camflow` binary on temp directories.

use camflow::codec::{read_flo, write_flo};
use camflow::field::{DepthMap, FlowField};
use camflow::synthesis::write_pfm;
use std::fs;
use std::path::Path;
use std::process::Output;

fn camflow_bin(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_camflow"))
        .args(args)
        .output()
        .expect("failed to spawn camflow")
}

fn run_ok(args: &[&str]) -> Output {
    let out = camflow_bin(args);
    assert!(
        out.status.success(),
        "camflow {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_depth(path: &Path, depth: f64, w: usize, h: usize) {
    let map = DepthMap::constant(depth, w, h).unwrap();
    fs::write(path, write_pfm(&map)).unwrap();
}

fn write_black_png(path: &Path, w: u32, h: u32) {
    image::GrayImage::from_pixel(w, h, image::Luma([0])).save(path).unwrap();
}

#[test]
fn stop_trajectory_yields_zero_flo_files() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("stop.txt");
    let depth = tmp.path().join("depth.pfm");
    let out = tmp.path().join("flows");
    write_depth(&depth, 10.0, 16, 12);

    run_ok(&[
        "traj", "gen", "--kind", "stop", "--frames", "14", "--size", "16x12",
        "--out", traj.to_str().unwrap(),
    ]);
    run_ok(&[
        "flow", "camera", "--depth", depth.to_str().unwrap(), "--traj", traj.to_str().unwrap(),
        "--size", "16x12", "--out", out.to_str().unwrap(),
    ]);

    for t in 0..14 {
        let flow = read_flo(&fs::read(out.join(format!("flow_{t:04}.flo"))).unwrap()).unwrap();
        assert!(flow.dx().iter().all(|&v| v == 0.0));
        assert!(flow.dy().iter().all(|&v| v == 0.0));
        assert!(out.join(format!("valid_{t:04}.png")).is_file());
    }
    assert!(out.join("config.json").is_file());
}

#[test]
fn integrate_with_empty_mask_matches_camera_flow_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("right.txt");
    let depth = tmp.path().join("depth.pfm");
    write_depth(&depth, 8.0, 16, 12);

    run_ok(&[
        "traj", "gen", "--kind", "right", "--magnitude", "0.5", "--frames", "5",
        "--size", "16x12", "--out", traj.to_str().unwrap(),
    ]);

    let camera_out = tmp.path().join("camera");
    run_ok(&[
        "flow", "camera", "--depth", depth.to_str().unwrap(), "--traj", traj.to_str().unwrap(),
        "--size", "16x12", "--out", camera_out.to_str().unwrap(),
    ]);

    // object flows are non-zero on purpose; the empty mask must win
    let object_dir = tmp.path().join("object");
    fs::create_dir(&object_dir).unwrap();
    let object = FlowField::constant(2.0, -1.0, 16, 12).unwrap();
    for t in 0..5 {
        fs::write(object_dir.join(format!("obj_{t:04}.flo")), write_flo(&object)).unwrap();
    }
    let mask = tmp.path().join("empty.png");
    write_black_png(&mask, 16, 12);

    let integrated_out = tmp.path().join("integrated");
    run_ok(&[
        "flow", "integrate", "--depth", depth.to_str().unwrap(),
        "--traj", traj.to_str().unwrap(), "--object-flow", object_dir.to_str().unwrap(),
        "--mask", mask.to_str().unwrap(), "--size", "16x12",
        "--out", integrated_out.to_str().unwrap(),
    ]);

    for t in 0..5 {
        let a = fs::read(camera_out.join(format!("flow_{t:04}.flo"))).unwrap();
        let b = fs::read(integrated_out.join(format!("flow_{t:04}.flo"))).unwrap();
        assert_eq!(a, b, "frame {t} differs");
    }
}

#[test]
fn eval_cam_identical_trajectories_scores_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("t.txt");
    run_ok(&[
        "traj", "gen", "--kind", "right", "--frames", "6", "--size", "16x12",
        "--out", traj.to_str().unwrap(),
    ]);

    let out = run_ok(&[
        "eval", "cam", "--est", traj.to_str().unwrap(), "--gt", traj.to_str().unwrap(),
        "--size", "16x12",
    ]);
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["mRotErr"], 0.0);
    assert_eq!(metrics["mTransErr"], 0.0);
    assert_eq!(metrics["mCamMC"], 0.0);
    assert_eq!(metrics["perFrame"].as_array().unwrap().len(), 6);
}

#[test]
fn qts_is_deterministic_per_seed() {
    let a = run_ok(&["qts", "--count", "32", "--seed", "7"]);
    let b = run_ok(&["qts", "--count", "32", "--seed", "7"]);
    let c = run_ok(&["qts", "--count", "32", "--seed", "8"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);

    let text = String::from_utf8(a.stdout).unwrap();
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 32);
    assert!(values.iter().all(|&v| (-3.66..=3.66).contains(&v)));
}

#[test]
fn qts_rejects_zero_count() {
    let out = camflow_bin(&["qts", "--count", "0"]);
    assert!(!out.status.success());
}

#[test]
fn unknown_flags_exit_nonzero() {
    assert!(!camflow_bin(&["flow", "camera", "--nope"]).status.success());
    assert!(!camflow_bin(&["definitely-not-a-subcommand"]).status.success());
}

#[test]
fn trajectory_parse_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("bad.txt");
    fs::write(
        &traj,
        "0 0.5 0.5 0.5 0.5 0 0 1 0 0 0 0 1 0 0 0 0 1 0\n1 0.5 0.5 0.5\n",
    )
    .unwrap();
    let depth = tmp.path().join("depth.pfm");
    write_depth(&depth, 5.0, 16, 12);

    let out = camflow_bin(&[
        "flow", "camera", "--depth", depth.to_str().unwrap(), "--traj", traj.to_str().unwrap(),
        "--size", "16x12", "--out", tmp.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn viz_pack_stats_on_a_flo_file() {
    let tmp = tempfile::tempdir().unwrap();
    let flo = tmp.path().join("f.flo");
    let flow = FlowField::constant(3.0, 4.0, 6, 5).unwrap();
    fs::write(&flo, write_flo(&flow)).unwrap();

    let viz = tmp.path().join("f.png");
    run_ok(&["flow", "viz", "--input", flo.to_str().unwrap(), "--out", viz.to_str().unwrap()]);
    let img = image::open(&viz).unwrap().to_rgb8();
    assert_eq!((img.width(), img.height()), (6, 5));

    let packed = tmp.path().join("packed.png");
    run_ok(&[
        "flow", "pack", "--input", flo.to_str().unwrap(), "--profile", "fvsm",
        "--out", packed.to_str().unwrap(),
    ]);
    let img = image::open(&packed).unwrap().to_rgb8();
    // x = 3/45, y = 4/24, third = (x + y) / 2, quantized by (v + 1) * 127.5
    assert_eq!(img.get_pixel(0, 0).0, [136, 149, 142]);

    let stats_out = run_ok(&["flow", "stats", "--input", flo.to_str().unwrap()]);
    let stats: serde_json::Value = serde_json::from_slice(&stats_out.stdout).unwrap();
    assert_eq!(stats["mean_magnitude"], 5.0);
    assert_eq!(stats["count"], 30);
}

#[test]
fn warp_preview_of_stop_reproduces_the_input() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, h) = (16u32, 12u32);
    let input = tmp.path().join("frame.png");
    let img = image::RgbImage::from_fn(w, h, |x, y| {
        image::Rgb([(x * 15) as u8, (y * 20) as u8, ((x + y) * 7) as u8])
    });
    img.save(&input).unwrap();

    let depth = tmp.path().join("depth.pfm");
    write_depth(&depth, 10.0, 16, 12);
    let traj = tmp.path().join("stop.txt");
    run_ok(&[
        "traj", "gen", "--kind", "stop", "--frames", "3", "--size", "16x12",
        "--out", traj.to_str().unwrap(),
    ]);

    let out = tmp.path().join("warped");
    run_ok(&[
        "warp", "preview", "--image", input.to_str().unwrap(),
        "--depth", depth.to_str().unwrap(), "--traj", traj.to_str().unwrap(),
        "--size", "16x12", "--out", out.to_str().unwrap(),
    ]);

    for t in 0..3 {
        let warped = image::open(out.join(format!("warp_{t:04}.png"))).unwrap().to_rgb8();
        assert_eq!(warped.as_raw(), img.as_raw());
        let holes = image::open(out.join(format!("holes_{t:04}.png"))).unwrap().to_luma8();
        assert!(holes.as_raw().iter().all(|&b| b == 0));
    }
}

#[test]
fn xtslice_stacks_the_requested_row() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    fs::create_dir(&frames).unwrap();
    for t in 0..3u32 {
        let shade = (t * 10) as u8;
        image::RgbImage::from_pixel(4, 3, image::Rgb([shade, shade, shade]))
            .save(frames.join(format!("frame_{t:02}.png")))
            .unwrap();
    }

    let out = tmp.path().join("slice.png");
    run_ok(&[
        "xtslice", "--frames", frames.to_str().unwrap(), "--row", "1",
        "--out", out.to_str().unwrap(),
    ]);
    let slice = image::open(&out).unwrap().to_rgb8();
    assert_eq!((slice.width(), slice.height()), (4, 3));
    for t in 0..3u32 {
        assert_eq!(slice.get_pixel(0, t).0, [(t * 10) as u8; 3]);
    }

    let bad = camflow_bin(&[
        "xtslice", "--frames", frames.to_str().unwrap(), "--row", "9",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(!bad.status.success());
}

#[test]
fn raw_depth_sidecar_and_masked_stats() {
    let tmp = tempfile::tempdir().unwrap();

    // raw f32 grid + JSON sidecar instead of PFM
    let depth_map = DepthMap::constant(10.0, 16, 12).unwrap();
    let raw = tmp.path().join("depth.raw");
    fs::write(&raw, camflow::synthesis::write_raw_depth(&depth_map)).unwrap();
    fs::write(tmp.path().join("depth.raw.json"), r#"{"width":16,"height":12}"#).unwrap();

    let traj = tmp.path().join("right.txt");
    run_ok(&[
        "traj", "gen", "--kind", "right", "--magnitude", "0.5", "--frames", "3",
        "--size", "16x12", "--out", traj.to_str().unwrap(),
    ]);
    let out = tmp.path().join("flows");
    run_ok(&[
        "flow", "camera", "--depth", raw.to_str().unwrap(), "--traj", traj.to_str().unwrap(),
        "--size", "16x12", "--out", out.to_str().unwrap(),
    ]);
    let last = read_flo(&fs::read(out.join("flow_0002.flo")).unwrap()).unwrap();
    // fx * tx / d = 8 * 0.5 / 10
    assert!((last.at(4, 4).0 - (-0.4)).abs() < 1e-6);

    // stats restricted to a mask region
    let mut flow = FlowField::zeros(16, 12);
    for v in 0..12 {
        for u in 0..8 {
            flow.set(u, v, 3.0, 4.0);
        }
    }
    let flo = tmp.path().join("half.flo");
    fs::write(&flo, write_flo(&flow)).unwrap();
    let mask_path = tmp.path().join("left.png");
    image::GrayImage::from_fn(16, 12, |x, _| image::Luma([if x < 8 { 255 } else { 0 }]))
        .save(&mask_path)
        .unwrap();

    let stats_out = run_ok(&[
        "flow", "stats", "--input", flo.to_str().unwrap(), "--mask", mask_path.to_str().unwrap(),
    ]);
    let stats: serde_json::Value = serde_json::from_slice(&stats_out.stdout).unwrap();
    assert_eq!(stats["mean_magnitude"], 5.0);
    assert_eq!(stats["count"], 96);
}

#[test]
fn curate_builds_a_manifest_with_verdicts_and_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = tmp.path().join("clips");
    fs::create_dir(&clips).unwrap();

    let write_clip = |name: &str, flows: &[FlowField]| {
        let dir = clips.join(name);
        fs::create_dir(&dir).unwrap();
        for (t, f) in flows.iter().enumerate() {
            fs::write(dir.join(format!("{t:04}.flo")), write_flo(f)).unwrap();
        }
        dir
    };

    let zero = FlowField::zeros(8, 6);
    write_clip("a_static", &[zero.clone(), zero.clone()]);
    write_clip("b_small", &[FlowField::constant(3.0, 4.0, 8, 6).unwrap()]);
    write_clip("c_large", &[FlowField::constant(50.0, 0.0, 8, 6).unwrap()]);

    // masked clip: moving object on the left half, still background
    let masked_dir = write_clip("d_masked", &[{
        let mut f = FlowField::zeros(8, 6);
        for v in 0..6 {
            for u in 0..4 {
                f.set(u, v, 50.0, 0.0);
            }
        }
        f
    }]);
    let mask = image::GrayImage::from_fn(8, 6, |x, _| image::Luma([if x < 4 { 255 } else { 0 }]));
    mask.save(masked_dir.join("mask.png")).unwrap();

    let out = run_ok(&["curate", "--clips", clips.to_str().unwrap()]);
    let manifest = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines.len(), 4);

    let fields = |line: &str| -> Vec<String> { line.split('\t').map(String::from).collect() };
    let a = fields(lines[0]);
    assert!(a[0].ends_with("a_static"));
    assert_eq!((a[2].as_str(), a[3].as_str()), ("static", "small"));

    let b = fields(lines[1]);
    assert!(b[0].ends_with("b_small"));
    assert_eq!((b[2].as_str(), b[3].as_str()), ("moving", "small"));

    let c = fields(lines[2]);
    assert_eq!((c[2].as_str(), c[3].as_str()), ("moving", "large"));

    // background excludes the moving object, so the camera counts as static
    let d = fields(lines[3]);
    assert_eq!((d[2].as_str(), d[3].as_str()), ("static", "large"));
}

#[test]
fn traj_gen_supports_the_dedicated_generators() {
    let tmp = tempfile::tempdir().unwrap();

    let circular = tmp.path().join("circ.json");
    run_ok(&[
        "traj", "gen", "--kind", "circular", "--frames", "8", "--size", "16x12",
        "--radius", "0.4", "--total-angle", "60", "--look-at-depth", "8",
        "--out", circular.to_str().unwrap(),
    ]);
    let traj = camflow::trajectory::from_json(&fs::read_to_string(&circular).unwrap()).unwrap();
    assert_eq!(traj.len(), 8);
    assert!(traj.frames()[0].pose.is_identity());

    let dolly = tmp.path().join("dolly.txt");
    run_ok(&[
        "traj", "gen", "--kind", "dolly-zoom", "--frames", "14", "--size", "16x12",
        "--subject-depth", "10", "--total-dolly", "5", "--out", dolly.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&dolly).unwrap();
    let (traj, _) = camflow::trajectory::read_re10k(&text, 16, 12).unwrap();
    let f0 = traj.frames()[0].intrinsics.fx;
    let f_last = traj.frames()[13].intrinsics.fx;
    assert!((f_last - 0.5 * f0).abs() < 1e-9);

    // pass-through dolly is rejected
    let bad = camflow_bin(&[
        "traj", "gen", "--kind", "dolly-zoom", "--subject-depth", "5",
        "--total-dolly", "5", "--out", tmp.path().join("x.txt").to_str().unwrap(),
    ]);
    assert!(!bad.status.success());
}
