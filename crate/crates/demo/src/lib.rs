//! Browser demo: render a synthetic face under adjustable lighting, equalize
//! its illumination, and show the skin segmentation and LBP codes.
//!
//! All images cross the boundary as RGBA byte buffers, row-major.

use clbp_core::color::rgb_to_hsi;
use clbp_core::features::lbp;
use clbp_core::illumination::{enhance_plane_detailed, ZetaMethod};
use clbp_core::raster::{ColorSpace, PlanarImage, Plane};
use clbp_core::segmentation::{face_mask, largest_component_bbox};
use clbp_core::synth::{Jitter, SubjectModel};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn from_rgba(rgba: &[u8], width: usize, height: usize) -> Res<PlanarImage> {
    if width == 0 || height == 0 || rgba.len() != width * height * 4 {
        return Err("buffer length does not match width*height*4".into());
    }
    let planes = (0..3)
        .map(|c| {
            Plane::new(
                width,
                height,
                rgba.iter().skip(c).step_by(4).map(|&v| v as f64).collect(),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(msg)?;
    PlanarImage::new(ColorSpace::Rgb, planes).map_err(msg)
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn gray_rgba(plane: &Plane) -> Vec<u8> {
    plane
        .data()
        .iter()
        .flat_map(|&v| {
            let g = to_byte(v);
            [g, g, g, 255]
        })
        .collect()
}

/// Renders subject `subject` of the synthetic population as a `size`x`size`
/// RGBA image. `gain` scales the lighting and `bias` shifts it. The face
/// oval is about 60x75 pixels whatever the frame size.
#[wasm_bindgen]
pub fn synth_face(subject: u32, size: u32, gain: f64, bias: f64) -> Result<Vec<u8>, JsError> {
    render_face(subject, size, gain, bias).map_err(js)
}

fn render_face(subject: u32, size: u32, gain: f64, bias: f64) -> Res<Vec<u8>> {
    if !(80..=512).contains(&size) {
        return Err("size must be in 80..=512".into());
    }
    let img = SubjectModel::random(0, subject as usize).render(
        size as usize,
        size as usize,
        Jitter {
            gain,
            bias,
            ..Jitter::NONE
        },
    );
    let (r, g, b) = (
        img.plane(0).data(),
        img.plane(1).data(),
        img.plane(2).data(),
    );
    Ok((0..r.len())
        .flat_map(|i| [to_byte(r[i]), to_byte(g[i]), to_byte(b[i]), 255])
        .collect())
}

/// Intensity plane before and after equalization.
#[wasm_bindgen]
pub struct Enhanced {
    zeta: f64,
    before: Vec<u8>,
    after: Vec<u8>,
}

#[wasm_bindgen]
impl Enhanced {
    #[wasm_bindgen(getter)]
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    #[wasm_bindgen(getter)]
    pub fn before(&self) -> Vec<u8> {
        self.before.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn after(&self) -> Vec<u8> {
        self.after.clone()
    }
}

/// Equalizes the HSI intensity plane. `method` is `svd` or `norm`.
#[wasm_bindgen]
pub fn enhance(
    rgba: &[u8],
    width: usize,
    height: usize,
    method: &str,
) -> Result<Enhanced, JsError> {
    enhance_rgba(rgba, width, height, method).map_err(js)
}

fn enhance_rgba(rgba: &[u8], width: usize, height: usize, method: &str) -> Res<Enhanced> {
    let method: ZetaMethod = method.parse().map_err(msg)?;
    let hsi = rgb_to_hsi(&from_rgba(rgba, width, height)?).map_err(msg)?;
    let e = enhance_plane_detailed(hsi.plane(2), method).map_err(msg)?;
    Ok(Enhanced {
        zeta: e.zeta.zeta,
        before: gray_rgba(hsi.plane(2)),
        after: gray_rgba(&e.output),
    })
}

/// Dims non-skin pixels and outlines the detected face box in red.
#[wasm_bindgen]
pub fn skin_overlay(rgba: &[u8], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    overlay_rgba(rgba, width, height).map_err(js)
}

fn overlay_rgba(rgba: &[u8], width: usize, height: usize) -> Res<Vec<u8>> {
    let mask = face_mask(&from_rgba(rgba, width, height)?).map_err(msg)?;
    let mut out = rgba.to_vec();
    for (px, &skin) in out.chunks_exact_mut(4).zip(mask.bits()) {
        if !skin {
            for v in &mut px[..3] {
                *v /= 4;
            }
        }
    }
    if let Ok(b) = largest_component_bbox(&mask) {
        for y in b.y..b.y + b.h {
            for x in b.x..b.x + b.w {
                if x == b.x || y == b.y || x + 1 == b.x + b.w || y + 1 == b.y + b.h {
                    out[(y * width + x) * 4..][..3].copy_from_slice(&[255, 0, 0]);
                }
            }
        }
    }
    Ok(out)
}

/// LBP codes of the HSI intensity plane as a gray image the size of the
/// input; the one-pixel border is black.
#[wasm_bindgen]
pub fn lbp_view(rgba: &[u8], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    lbp_rgba(rgba, width, height).map_err(js)
}

fn lbp_rgba(rgba: &[u8], width: usize, height: usize) -> Res<Vec<u8>> {
    let hsi = rgb_to_hsi(&from_rgba(rgba, width, height)?).map_err(msg)?;
    let codes = lbp(hsi.plane(2)).map_err(msg)?;
    let mut out = vec![0u8; width * height * 4];
    for px in out.chunks_exact_mut(4) {
        px[3] = 255;
    }
    for y in 0..codes.height {
        for x in 0..codes.width {
            let g = codes.get(x, y);
            out[((y + 1) * width + x + 1) * 4..][..3].copy_from_slice(&[g, g, g]);
        }
    }
    Ok(out)
}
