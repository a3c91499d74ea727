//! Planar float rasters.

use crate::error::{Error, Result};

/// Tag describing what the planes of a [`PlanarImage`] hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColorSpace {
    Rgb,
    Hsi,
    YCbCr,
    Gray,
    Labels,
}

impl ColorSpace {
    pub fn plane_count(self) -> usize {
        match self {
            ColorSpace::Rgb | ColorSpace::Hsi | ColorSpace::YCbCr => 3,
            ColorSpace::Gray | ColorSpace::Labels => 1,
        }
    }
}

/// A single row-major 2D array of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} plane given {} values",
                width,
                height,
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    /// Builds a plane from nested rows. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Plane::new(width, height, rows.concat())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copies out the `w`x`h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Plane> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::DimensionMismatch(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{} plane",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Ok(Plane {
            width: w,
            height: h,
            data,
        })
    }

    /// Rounds every value to the nearest integer level in [0, 255].
    pub fn quantized(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }
}

/// Nearest 8-bit level for a real intensity; NaN maps to 0.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// A width x height raster of one or more planes sharing one color space tag.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    planes: Vec<Plane>,
}

impl PlanarImage {
    pub fn new(colorspace: ColorSpace, planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != colorspace.plane_count() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} needs {} planes, got {}",
                colorspace,
                colorspace.plane_count(),
                planes.len()
            )));
        }
        let (width, height) = planes[0].dims();
        if planes.iter().any(|p| p.dims() != (width, height)) {
            return Err(Error::DimensionMismatch(
                "planes have different dimensions".into(),
            ));
        }
        Ok(PlanarImage {
            width,
            height,
            colorspace,
            planes,
        })
    }

    /// Interleaved 8-bit RGB bytes, as produced by most decoders.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} RGB image given {} bytes",
                width,
                height,
                bytes.len()
            )));
        }
        let mut planes: Vec<Vec<f64>> =
            (0..3).map(|_| Vec::with_capacity(width * height)).collect();
        for px in bytes.chunks_exact(3) {
            for (plane, &v) in planes.iter_mut().zip(px) {
                plane.push(f64::from(v));
            }
        }
        let planes = planes
            .into_iter()
            .map(|d| Plane::new(width, height, d))
            .collect::<Result<Vec<_>>>()?;
        PlanarImage::new(ColorSpace::Rgb, planes)
    }

    pub fn gray(plane: Plane) -> Self {
        PlanarImage {
            width: plane.width(),
            height: plane.height(),
            colorspace: ColorSpace::Gray,
            planes: vec![plane],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &Plane {
        &self.planes[index]
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn expect_space(&self, expected: ColorSpace) -> Result<()> {
        if self.colorspace != expected {
            return Err(Error::WrongColorSpace {
                expected,
                actual: self.colorspace,
            });
        }
        Ok(())
    }

    /// Replaces one plane, keeping the tag. Dimensions must match.
    pub fn with_plane(mut self, index: usize, plane: Plane) -> Result<Self> {
        if plane.dims() != (self.width, self.height) {
            return Err(Error::DimensionMismatch(
                "replacement plane has different dimensions".into(),
            ));
        }
        self.planes[index] = plane;
        Ok(self)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        let planes = self
            .planes
            .iter()
            .map(|p| p.crop(x, y, w, h))
            .collect::<Result<Vec<_>>>()?;
        PlanarImage::new(self.colorspace, planes)
    }

    /// Interleaved 8-bit RGB bytes; only valid for RGB images.
    pub fn to_rgb8(&self) -> Result<Vec<u8>> {
        self.expect_space(ColorSpace::Rgb)?;
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for i in 0..self.width * self.height {
            for p in &self.planes {
                out.push(quantize(p.data()[i]));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_planes() {
        let a = Plane::filled(2, 2, 0.0);
        let b = Plane::filled(3, 2, 0.0);
        assert!(PlanarImage::new(ColorSpace::Rgb, vec![a.clone(), a.clone(), b]).is_err());
        assert!(PlanarImage::new(ColorSpace::Rgb, vec![a.clone()]).is_err());
        assert!(PlanarImage::new(ColorSpace::Gray, vec![a]).is_ok());
    }

    #[test]
    fn rgb8_round_trip() {
        let bytes: Vec<u8> = (0..2 * 3 * 3).map(|v| (v * 13) as u8).collect();
        let img = PlanarImage::from_rgb8(2, 3, &bytes).unwrap();
        assert_eq!(img.plane(1).get(1, 0), f64::from(bytes[4]));
        assert_eq!(img.to_rgb8().unwrap(), bytes);
    }

    #[test]
    fn crop_window() {
        let p = Plane::from_fn(4, 4, |x, y| (y * 4 + x) as f64);
        let c = p.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.data(), &[9.0, 10.0, 13.0, 14.0]);
        assert!(p.crop(3, 3, 2, 1).is_err());
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(254.6), 255);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(f64::NAN), 0);
    }
}
