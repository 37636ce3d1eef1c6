//! `camflow`: file-in/file-out front end for camera-motion flow synthesis,
//! flow codecs, warped previews, and camera-controllability evaluation.

mod commands;
mod files;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "camflow",
    version,
    about = "Camera-motion flow synthesis, integration, and evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate camera trajectories
    Traj {
        #[command(subcommand)]
        command: TrajCommand,
    },
    /// Synthesize, integrate, and inspect dense flow fields
    Flow {
        #[command(subcommand)]
        command: FlowCommand,
    },
    /// Explicit warped-frame previews
    Warp {
        #[command(subcommand)]
        command: WarpCommand,
    },
    /// Camera-controllability metrics
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Build a curation manifest from per-clip flow statistics
    Curate(commands::CurateArgs),
    /// Sample quadratic timesteps for external training code
    Qts(commands::QtsArgs),
    /// Stack one pixel row across frames into an x-t slice image
    Xtslice(commands::XtsliceArgs),
}

#[derive(Subcommand)]
enum TrajCommand {
    /// Generate a trajectory file
    Gen(commands::TrajGenArgs),
}

#[derive(Subcommand)]
enum FlowCommand {
    /// Camera flow maps from a depth map and a trajectory
    Camera(commands::FlowCameraArgs),
    /// Combine camera flow with object flow over a moving-object mask
    Integrate(commands::FlowIntegrateArgs),
    /// Color-wheel visualization of a .flo file
    Viz(commands::FlowVizArgs),
    /// Normalize and pack a .flo file into a three-channel PNG
    Pack(commands::FlowPackArgs),
    /// Flow magnitude statistics as JSON
    Stats(commands::FlowStatsArgs),
}

#[derive(Subcommand)]
enum WarpCommand {
    /// Forward-warp the first frame along a trajectory
    Preview(commands::WarpPreviewArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Compare an estimated trajectory against the ground truth
    Cam(commands::EvalCamArgs),
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Traj {
            command: TrajCommand::Gen(args),
        } => commands::traj_gen(&args),
        Command::Flow { command } => match command {
            FlowCommand::Camera(args) => commands::flow_camera(&args),
            FlowCommand::Integrate(args) => commands::flow_integrate(&args),
            FlowCommand::Viz(args) => commands::flow_viz(&args),
            FlowCommand::Pack(args) => commands::flow_pack(&args),
            FlowCommand::Stats(args) => commands::flow_stats_cmd(&args),
        },
        Command::Warp {
            command: WarpCommand::Preview(args),
        } => commands::warp_preview(&args),
        Command::Eval {
            command: EvalCommand::Cam(args),
        } => commands::eval_cam(&args),
        Command::Curate(args) => commands::curate(&args),
        Command::Qts(args) => commands::qts(&args),
        Command::Xtslice(args) => commands::xtslice(&args),
    }
}
