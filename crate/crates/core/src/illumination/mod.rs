//! Illumination equalization in the wavelet domain.
//!
//! The input plane and its globally equalized version are both decomposed
//! with a one-level Haar transform. The input's LL band is scaled by the
//! ratio of the two LL bands' largest singular values, and the image is
//! rebuilt from the scaled LL band and the untouched detail bands.

mod spectral;
mod wavelet;

use std::fmt;
use std::str::FromStr;

pub use spectral::{max_singular_value, spectral_norm, POWER_MAX_ITERATIONS, POWER_TOLERANCE};
pub use wavelet::{dwt2, idwt2, SubbandSet};

use crate::color::{rgb_to_hsi, rgb_to_ycbcr};
use crate::error::{Error, Result};
use crate::histogram::ghe;
use crate::raster::{ColorSpace, PlanarImage, Plane};

/// How the largest singular value of an LL band is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ZetaMethod {
    /// Full singular value decomposition.
    SvdRatio,
    /// Spectral norm by power iteration.
    #[default]
    NormRatio,
}

impl ZetaMethod {
    pub fn name(self) -> &'static str {
        match self {
            ZetaMethod::SvdRatio => "SVD_RATIO",
            ZetaMethod::NormRatio => "NORM_RATIO",
        }
    }
}

impl fmt::Display for ZetaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZetaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svd" | "svd_ratio" => Ok(ZetaMethod::SvdRatio),
            "norm" | "norm_ratio" => Ok(ZetaMethod::NormRatio),
            _ => Err(Error::InvalidParameter(format!(
                "unknown enhancement method {s:?}"
            ))),
        }
    }
}

/// Gain applied to the LL band of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionCoefficient {
    pub zeta: f64,
    pub method: ZetaMethod,
}

fn ratio(reference: f64, input: f64, method: ZetaMethod) -> Result<CorrectionCoefficient> {
    if input == 0.0 || reference == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let zeta = reference / input;
    if !zeta.is_finite() || zeta <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(CorrectionCoefficient { zeta, method })
}

/// Ratio of the largest singular values, reference over input.
pub fn zeta_svd(ll_input: &Plane, ll_reference: &Plane) -> Result<CorrectionCoefficient> {
    ratio(
        max_singular_value(ll_reference),
        max_singular_value(ll_input),
        ZetaMethod::SvdRatio,
    )
}

/// Ratio of the spectral norms, reference over input.
pub fn zeta_norm(ll_input: &Plane, ll_reference: &Plane) -> Result<CorrectionCoefficient> {
    ratio(
        spectral_norm(ll_reference),
        spectral_norm(ll_input),
        ZetaMethod::NormRatio,
    )
}

pub fn zeta(
    ll_input: &Plane,
    ll_reference: &Plane,
    method: ZetaMethod,
) -> Result<CorrectionCoefficient> {
    match method {
        ZetaMethod::SvdRatio => zeta_svd(ll_input, ll_reference),
        ZetaMethod::NormRatio => zeta_norm(ll_input, ll_reference),
    }
}

/// Everything [`enhance_plane`] computes along the way.
#[derive(Debug, Clone)]
pub struct Enhancement {
    pub zeta: CorrectionCoefficient,
    /// Reconstruction before clamping to [0, 255].
    pub unclamped: Plane,
    pub output: Plane,
}

pub fn enhance_plane_detailed(plane: &Plane, method: ZetaMethod) -> Result<Enhancement> {
    let reference = ghe(plane)?;
    let mut sub = dwt2(plane)?;
    let sub_ref = dwt2(&reference)?;
    let zeta = zeta(&sub.ll, &sub_ref.ll, method)?;
    sub.ll = sub.ll.map(|v| v * zeta.zeta);
    let unclamped = idwt2(&sub)?;
    let output = unclamped.map(|v| v.clamp(0.0, 255.0));
    Ok(Enhancement {
        zeta,
        unclamped,
        output,
    })
}

/// Equalizes one [0, 255] plane. Output has the input's dimensions.
pub fn enhance_plane(plane: &Plane, method: ZetaMethod) -> Result<Plane> {
    Ok(enhance_plane_detailed(plane, method)?.output)
}

/// Color space the enhancement runs in, and which planes it touches:
/// I for HSI, Y for YCbCr, all three for RGB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EnhanceSpace {
    #[default]
    Hsi,
    YCbCr,
    Rgb,
}

impl EnhanceSpace {
    pub fn name(self) -> &'static str {
        match self {
            EnhanceSpace::Hsi => "hsi",
            EnhanceSpace::YCbCr => "ycbcr",
            EnhanceSpace::Rgb => "rgb",
        }
    }
}

impl fmt::Display for EnhanceSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnhanceSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hsi" => Ok(EnhanceSpace::Hsi),
            "ycbcr" => Ok(EnhanceSpace::YCbCr),
            "rgb" => Ok(EnhanceSpace::Rgb),
            _ => Err(Error::InvalidParameter(format!(
                "unknown enhancement space {s:?}"
            ))),
        }
    }
}

/// Converts an RGB image to `space` and equalizes its intensity-bearing
/// plane(s). The result is tagged with `space`'s color space.
pub fn enhance_image(
    img: &PlanarImage,
    space: EnhanceSpace,
    method: ZetaMethod,
) -> Result<PlanarImage> {
    if img.colorspace() != ColorSpace::Rgb {
        return Err(Error::UnsupportedColorSpace(img.colorspace()));
    }
    match space {
        EnhanceSpace::Hsi => {
            let hsi = rgb_to_hsi(img)?;
            let i = enhance_plane(hsi.plane(2), method)?;
            hsi.with_plane(2, i)
        }
        EnhanceSpace::YCbCr => {
            let ycc = rgb_to_ycbcr(img)?;
            let y = enhance_plane(ycc.plane(0), method)?;
            ycc.with_plane(0, y)
        }
        EnhanceSpace::Rgb => {
            let planes = img
                .planes()
                .iter()
                .map(|p| enhance_plane(p, method))
                .collect::<Result<Vec<_>>>()?;
            PlanarImage::new(ColorSpace::Rgb, planes)
        }
    }
}
