//! Image decoding and dataset directory indexing.

use std::path::{Path, PathBuf};

use image::{ImageFormat, ImageReader};
use log::warn;

use crate::error::{Error, Result};
use crate::raster::{PlanarImage, Plane};
use crate::segmentation::BinaryMask;

/// Decodes an 8-bit PNG or BMP file into an RGB image.
pub fn load_rgb(path: &Path) -> Result<PlanarImage> {
    let decode_err = |reason: String| Error::Decode {
        path: path.to_owned(),
        reason,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Bmp) => {}
        other => return Err(decode_err(format!("unsupported format {other:?}"))),
    }
    let rgb = reader
        .decode()
        .map_err(|e| decode_err(e.to_string()))?
        .to_rgb8();
    let (w, h) = rgb.dimensions();
    PlanarImage::from_rgb8(w as usize, h as usize, rgb.as_raw())
}

/// Writes an RGB image as PNG.
pub fn save_rgb_png(img: &PlanarImage, path: &Path) -> Result<()> {
    let bytes = img.to_rgb8()?;
    image::save_buffer(
        path,
        &bytes,
        img.width() as u32,
        img.height() as u32,
        image::ColorType::Rgb8,
    )
    .map_err(|e| Error::Decode {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

/// Writes a single [0, 255] plane as an 8-bit grayscale PNG.
pub fn save_gray_png(plane: &Plane, path: &Path) -> Result<()> {
    image::save_buffer(
        path,
        &plane.quantized(),
        plane.width() as u32,
        plane.height() as u32,
        image::ColorType::L8,
    )
    .map_err(|e| Error::Decode {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

pub fn save_mask_png(mask: &BinaryMask, path: &Path) -> Result<()> {
    let plane = Plane::new(
        mask.width(),
        mask.height(),
        mask.bits()
            .iter()
            .map(|&b| if b { 255.0 } else { 0.0 })
            .collect(),
    )?;
    save_gray_png(&plane, path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectImages {
    pub id: String,
    pub images: Vec<PathBuf>,
}

/// One subdirectory per subject, each listing its decodable images in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub subjects: Vec<SubjectImages>,
    /// Files that were skipped because they could not be read or decoded.
    pub skipped: usize,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn probe_image(path: &Path) -> std::result::Result<(), String> {
    let reader = ImageReader::open(path)
        .map_err(|e| e.to_string())?
        .with_guessed_format()
        .map_err(|e| e.to_string())?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Bmp) => reader
            .into_dimensions()
            .map(|_| ())
            .map_err(|e| e.to_string()),
        other => Err(format!("not a PNG/BMP image ({other:?})")),
    }
}

pub fn ingest(root: &Path) -> Result<DatasetIndex> {
    let mut subjects = Vec::new();
    let mut skipped = 0;
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
            warn!(
                "skipping subject directory with non-UTF-8 name: {}",
                dir.display()
            );
            continue;
        };
        let mut images = Vec::new();
        for path in sorted_entries(&dir)? {
            if !path.is_file() {
                continue;
            }
            match probe_image(&path) {
                Ok(()) => images.push(path),
                Err(reason) => {
                    warn!("skipping {}: {reason}", path.display());
                    skipped += 1;
                }
            }
        }
        if !images.is_empty() {
            subjects.push(SubjectImages { id, images });
        }
    }
    if subjects.is_empty() {
        return Err(Error::EmptyInput("dataset root has no subject images"));
    }
    Ok(DatasetIndex {
        root: root.to_owned(),
        subjects,
        skipped,
    })
}
