//! File loading and writing helpers shared by the subcommands.

use anyhow::{bail, Context, Result};
use camflow::field::{BinaryMask, DepthMap, FlowField, ImageGrid};
use camflow::synthesis::{read_pfm, read_raw_depth, DepthSidecar};
use camflow::trajectory::{self, Trajectory};
use std::fs;
use std::path::{Path, PathBuf};

/// Loads a trajectory from either the JSON document format (`.json`) or the
/// 19-field text format (anything else). Text intrinsics are denormalized
/// with `size`.
pub fn load_trajectory(path: &Path, size: (usize, usize)) -> Result<Trajectory> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading trajectory {}", path.display()))?;
    let traj = if path.extension().is_some_and(|e| e == "json") {
        trajectory::from_json(&text)
            .with_context(|| format!("parsing trajectory json {}", path.display()))?
    } else {
        let (traj, _) = trajectory::read_re10k(&text, size.0, size.1)
            .with_context(|| format!("parsing trajectory {}", path.display()))?;
        traj
    };
    Ok(traj)
}

/// Loads a depth map: `.pfm` files directly, anything else as a raw
/// little-endian float grid with a `<file>.json` sidecar carrying the size.
pub fn load_depth(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).with_context(|| format!("reading depth {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "pfm") {
        return read_pfm(&bytes).with_context(|| format!("parsing {}", path.display()));
    }
    let sidecar_path = PathBuf::from(format!("{}.json", path.display()));
    let sidecar: DepthSidecar = serde_json::from_str(
        &fs::read_to_string(&sidecar_path)
            .with_context(|| format!("reading depth sidecar {}", sidecar_path.display()))?,
    )
    .with_context(|| format!("parsing depth sidecar {}", sidecar_path.display()))?;
    read_raw_depth(&bytes, sidecar.width, sidecar.height)
        .with_context(|| format!("parsing raw depth {}", path.display()))
}

pub fn load_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    camflow::codec::read_flo(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// 8-bit mask image: any nonzero luma byte counts as 1.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path)
        .with_context(|| format!("reading mask {}", path.display()))?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(BinaryMask::from_nonzero(img.as_raw(), w, h)?)
}

pub fn load_rgb_image(path: &Path) -> Result<ImageGrid> {
    let img = image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.as_raw().iter().map(|&b| f64::from(b)).collect();
    Ok(ImageGrid::from_data(data, w, h, 3)?)
}

/// Writes a multi-channel grid as an 8-bit PNG, rounding and clamping each
/// sample to 0..=255. One channel becomes grayscale, three become RGB.
pub fn save_image_grid(path: &Path, grid: &ImageGrid) -> Result<()> {
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    let quantize = |x: f64| x.round().clamp(0.0, 255.0) as u8;
    match grid.channels() {
        1 => {
            let pixels: Vec<u8> = grid.data().iter().map(|&x| quantize(x)).collect();
            image::GrayImage::from_raw(w, h, pixels)
                .context("building gray image")?
                .save(path)
                .with_context(|| format!("writing {}", path.display()))
        }
        3 => {
            let pixels: Vec<u8> = grid.data().iter().map(|&x| quantize(x)).collect();
            image::RgbImage::from_raw(w, h, pixels)
                .context("building rgb image")?
                .save(path)
                .with_context(|| format!("writing {}", path.display()))
        }
        c => bail!("cannot save a {c}-channel image as PNG"),
    }
}

/// Writes a binary mask as an 8-bit PNG with 1-pixels white (255).
pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let pixels: Vec<u8> = mask.values().iter().map(|&v| v * 255).collect();
    image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, pixels)
        .context("building mask image")?
        .save(path)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn save_flo(path: &Path, flow: &FlowField) -> Result<()> {
    fs::write(path, camflow::codec::write_flo(flow))
        .with_context(|| format!("writing {}", path.display()))
}

/// All `.flo` files directly inside `dir`, sorted by file name.
pub fn sorted_flo_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "flo"))
        .collect();
    files.sort();
    Ok(files)
}

/// All `.png` files directly inside `dir`, sorted by file name.
pub fn sorted_png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn write_text_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
