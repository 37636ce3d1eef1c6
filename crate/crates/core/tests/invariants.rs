//! Cross-module invariants, chiefly the flow-direction oracles that pin the
//! trajectory generators' translation signs: trajectory names describe the
//! camera motion, so the scene content must flow the opposite way.

use camflow::field::DepthMap;
use camflow::geometry::CameraIntrinsics;
use camflow::synthesis::camera_flow;
use camflow::trajectory::{generate_basic, TrajectoryKind};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const W: usize = 48;
const H: usize = 36;

fn k() -> CameraIntrinsics {
    CameraIntrinsics::new(60.0, 60.0, W as f64 / 2.0, H as f64 / 2.0, W, H).unwrap()
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Mean flow of the last frame of a generated basic trajectory over a
/// fronto-parallel plane.
fn last_frame_mean_flow(kind: TrajectoryKind) -> (f64, f64) {
    let k = k();
    let traj = generate_basic(kind, 0.8, 5, &k).unwrap();
    let depth = DepthMap::constant(6.0, W, H).unwrap();
    let last = traj.frames().last().unwrap();
    let out = camera_flow(&depth, &k, &last.pose, &last.intrinsics).unwrap();
    assert!(out.all_valid());
    let n = out.flow.len() as f64;
    (
        out.flow.dx().iter().sum::<f64>() / n,
        out.flow.dy().iter().sum::<f64>() / n,
    )
}

#[test]
fn camera_left_makes_content_flow_right() {
    let (dx, dy) = last_frame_mean_flow(TrajectoryKind::Left);
    assert!(dx > 1.0, "mean dx {dx}");
    assert!(dy.abs() < 1e-9);
}

#[test]
fn camera_right_makes_content_flow_left() {
    let (dx, _) = last_frame_mean_flow(TrajectoryKind::Right);
    assert!(dx < -1.0, "mean dx {dx}");
}

#[test]
fn camera_up_makes_content_flow_down() {
    let (dx, dy) = last_frame_mean_flow(TrajectoryKind::Up);
    assert!(dy > 1.0, "mean dy {dy}");
    assert!(dx.abs() < 1e-9);
}

#[test]
fn camera_down_makes_content_flow_up() {
    let (_, dy) = last_frame_mean_flow(TrajectoryKind::Down);
    assert!(dy < -1.0, "mean dy {dy}");
}

#[test]
fn zoom_in_expands_radially_from_the_principal_point() {
    let k = k();
    let traj = generate_basic(TrajectoryKind::ZoomIn, 2.0, 3, &k).unwrap();
    let depth = DepthMap::constant(6.0, W, H).unwrap();
    let last = traj.frames().last().unwrap();
    let out = camera_flow(&depth, &k, &last.pose, &last.intrinsics).unwrap();

    for v in 0..H {
        for u in 0..W {
            let (dx, dy) = out.flow.at(u, v);
            let (ru, rv) = (u as f64 - k.cx, v as f64 - k.cy);
            // flow points away from the principal point
            let dot = dx * ru + dy * rv;
            if ru.abs() + rv.abs() > 1.0 {
                assert!(dot > 0.0, "({u},{v}): flow ({dx},{dy}) not expanding");
            }
        }
    }
}

#[test]
fn zoom_out_contracts_toward_the_principal_point() {
    let k = k();
    let traj = generate_basic(TrajectoryKind::ZoomOut, 2.0, 3, &k).unwrap();
    let depth = DepthMap::constant(6.0, W, H).unwrap();
    let last = traj.frames().last().unwrap();
    let out = camera_flow(&depth, &k, &last.pose, &last.intrinsics).unwrap();

    for v in 0..H {
        for u in 0..W {
            let (dx, dy) = out.flow.at(u, v);
            let (ru, rv) = (u as f64 - k.cx, v as f64 - k.cy);
            let dot = dx * ru + dy * rv;
            if ru.abs() + rv.abs() > 1.0 {
                assert!(dot < 0.0, "({u},{v}): flow ({dx},{dy}) not contracting");
            }
        }
    }
}

#[test]
fn zoom_flow_is_radially_symmetric_on_a_plane() {
    // translation along z over a constant-depth plane scales the offset
    // from the principal point by a single factor everywhere
    let k = k();
    for kind in [TrajectoryKind::ZoomIn, TrajectoryKind::ZoomOut] {
        let traj = generate_basic(kind, 1.5, 4, &k).unwrap();
        let depth = DepthMap::constant(6.0, W, H).unwrap();
        let last = traj.frames().last().unwrap();
        let out = camera_flow(&depth, &k, &last.pose, &last.intrinsics).unwrap();

        // measure the scale factor at a reference pixel, then check it
        // explains every pixel
        let (ref_dx, _) = out.flow.at(W - 1, H / 2);
        let factor = ref_dx / (W as f64 - 1.0 - k.cx);
        for v in 0..H {
            for u in 0..W {
                let (dx, dy) = out.flow.at(u, v);
                assert!((dx - factor * (u as f64 - k.cx)).abs() < 1e-6, "{kind} ({u},{v})");
                assert!((dy - factor * (v as f64 - k.cy)).abs() < 1e-6, "{kind} ({u},{v})");
            }
        }
    }
}

#[test]
fn stop_trajectory_yields_zero_flow_at_every_frame() {
    let k = k();
    let traj = generate_basic(TrajectoryKind::Stop, 3.0, 14, &k).unwrap();
    let depth = DepthMap::constant(5.0, W, H).unwrap();
    for f in traj.frames() {
        let out = camera_flow(&depth, &k, &f.pose, &f.intrinsics).unwrap();
        assert!(out.flow.dx().iter().all(|&x| x == 0.0));
        assert!(out.flow.dy().iter().all(|&y| y == 0.0));
    }
}

#[test]
fn uniform_flow_closed_form_for_random_parameters() {
    // ten random (fx, tx, d) triples: plane flow magnitude is fx * |tx| / d
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let fx = uniform(&mut rng, 30.0, 400.0);
        let tx = uniform(&mut rng, -1.5, 1.5);
        let d = uniform(&mut rng, 2.0, 40.0);
        let k = CameraIntrinsics::new(fx, fx, W as f64 / 2.0, H as f64 / 2.0, W, H).unwrap();
        let pose = camflow::geometry::CameraPose::new(
            nalgebra::Matrix3::identity(),
            nalgebra::Vector3::new(tx, 0.0, 0.0),
        )
        .unwrap();
        let depth = DepthMap::constant(d, W, H).unwrap();
        let out = camera_flow(&depth, &k, &pose, &k).unwrap();
        let expected = fx * tx / d;
        for i in 0..out.flow.len() {
            assert!((out.flow.dx()[i] - expected).abs() < 1e-6);
            assert!(out.flow.dy()[i].abs() < 1e-6);
        }
    }
}
