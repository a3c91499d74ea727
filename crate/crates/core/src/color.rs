//! Color-space conversions and per-channel plane access.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{ColorSpace, PlanarImage, Plane};

/// A single named color channel a signature can be computed on.
///
/// The declaration order is the canonical channel order used when
/// signatures are concatenated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    H,
    S,
    I,
    Y,
    Cb,
    Cr,
    Gray,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::H,
        Channel::S,
        Channel::I,
        Channel::Y,
        Channel::Cb,
        Channel::Cr,
        Channel::Gray,
    ];

    /// The color space holding this channel, and its plane index there.
    pub fn source(self) -> (ColorSpace, usize) {
        match self {
            Channel::H => (ColorSpace::Hsi, 0),
            Channel::S => (ColorSpace::Hsi, 1),
            Channel::I => (ColorSpace::Hsi, 2),
            Channel::Y => (ColorSpace::YCbCr, 0),
            Channel::Cb => (ColorSpace::YCbCr, 1),
            Channel::Cr => (ColorSpace::YCbCr, 2),
            Channel::Gray => (ColorSpace::Gray, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::H => "H",
            Channel::S => "S",
            Channel::I => "I",
            Channel::Y => "Y",
            Channel::Cb => "Cb",
            Channel::Cr => "Cr",
            Channel::Gray => "GRAY",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown channel {s:?}")))
    }
}

/// Hue, saturation, intensity of one RGB pixel.
///
/// Hue is the arccos angle divided by 2π, so it lies in [0, 1). Achromatic
/// pixels get hue 0; black gets saturation 0.
pub fn hsi_pixel(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let sum = r + g + b;
    let intensity = sum / 3.0;
    let saturation = if sum > 0.0 {
        (1.0 - 3.0 * r.min(g).min(b) / sum).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let num = 0.5 * ((r - g) + (r - b));
    let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
    let hue = if den > 0.0 {
        let theta = (num / den).clamp(-1.0, 1.0).acos();
        let angle = if b <= g { theta } else { 2.0 * PI - theta };
        let h = angle / (2.0 * PI);
        if h >= 1.0 {
            0.0
        } else {
            h
        }
    } else {
        0.0
    };
    (hue, saturation, intensity)
}

/// Full-range BT.601 luma and chroma for one RGB pixel, clamped to [0, 255].
pub fn ycbcr_pixel(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    (
        y.clamp(0.0, 255.0),
        cb.clamp(0.0, 255.0),
        cr.clamp(0.0, 255.0),
    )
}

fn convert_pixels(
    img: &PlanarImage,
    target: ColorSpace,
    f: impl Fn(f64, f64, f64) -> (f64, f64, f64),
) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Rgb)?;
    let (w, h) = (img.width(), img.height());
    let [r, g, b] = [img.plane(0), img.plane(1), img.plane(2)].map(Plane::data);
    let mut out = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for i in 0..w * h {
        let (a, bb, c) = f(r[i], g[i], b[i]);
        out[0].push(a);
        out[1].push(bb);
        out[2].push(c);
    }
    let planes = out
        .into_iter()
        .map(|d| Plane::new(w, h, d))
        .collect::<Result<Vec<_>>>()?;
    PlanarImage::new(target, planes)
}

pub fn rgb_to_hsi(img: &PlanarImage) -> Result<PlanarImage> {
    convert_pixels(img, ColorSpace::Hsi, hsi_pixel)
}

pub fn rgb_to_ycbcr(img: &PlanarImage) -> Result<PlanarImage> {
    convert_pixels(img, ColorSpace::YCbCr, ycbcr_pixel)
}

pub fn rgb_to_gray(img: &PlanarImage) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Rgb)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let plane = Plane::from_fn(img.width(), img.height(), |x, y| {
        0.299 * r.get(x, y) + 0.587 * g.get(x, y) + 0.114 * b.get(x, y)
    });
    Ok(PlanarImage::gray(plane))
}

/// Extracts `channel` from `img`, converting from RGB when the image is not
/// already in the channel's color space.
pub fn channel_plane(img: &PlanarImage, channel: Channel) -> Result<Plane> {
    let (space, index) = channel.source();
    if img.colorspace() == space {
        return Ok(img.plane(index).clone());
    }
    if img.colorspace() != ColorSpace::Rgb {
        return Err(Error::WrongColorSpace {
            expected: space,
            actual: img.colorspace(),
        });
    }
    let converted = match space {
        ColorSpace::Hsi => rgb_to_hsi(img)?,
        ColorSpace::YCbCr => rgb_to_ycbcr(img)?,
        ColorSpace::Gray => rgb_to_gray(img)?,
        other => return Err(Error::UnsupportedColorSpace(other)),
    };
    Ok(converted.into_planes().swap_remove(index))
}
