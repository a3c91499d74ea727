//! Local binary pattern codes and regional LBP histogram signatures.

use std::fmt;
use std::str::FromStr;

use crate::color::{channel_plane, Channel};
use crate::error::{Error, Result};
use crate::histogram::bin_of;
use crate::raster::Plane;
use crate::segmentation::{BinaryMask, FaceRegion};

/// Neighbor offsets `(dx, dy)` for bits 0..7: top-left, then clockwise.
pub const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// Tag stored in gallery headers for the neighbor order above.
pub const NEIGHBOR_ORDER_TAG: &str = "tl-cw";

/// LBP codes of the interior pixels of a plane; one pixel smaller than the
/// source on every side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LbpImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }
}

/// 8-neighbor LBP: bit n is set when neighbor n is >= the center.
pub fn lbp(plane: &Plane) -> Result<LbpImage> {
    let (w, h) = plane.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let data = plane.data();
    let (lw, lh) = (w - 2, h - 2);
    let mut labels = Vec::with_capacity(lw * lh);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let center = data[y * w + x];
            let mut code = 0u8;
            for (n, &(dx, dy)) in NEIGHBORS.iter().enumerate() {
                let nx = x.wrapping_add_signed(dx);
                let ny = y.wrapping_add_signed(dy);
                if data[ny * w + nx] >= center {
                    code |= 1 << n;
                }
            }
            labels.push(code);
        }
    }
    Ok(LbpImage {
        width: lw,
        height: lh,
        labels,
    })
}

/// Rows x columns of regions a label image is split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one region".into(),
            ));
        }
        Ok(Grid { rows, cols })
    }

    pub fn regions(&self) -> usize {
        self.rows * self.cols
    }

    /// Half-open `[start, end)` span of region `index` along an axis of
    /// `len` pixels split `parts` ways; the last region takes the remainder.
    fn span(len: usize, parts: usize, index: usize) -> (usize, usize) {
        let step = len / parts;
        let start = index * step;
        let end = if index + 1 == parts {
            len
        } else {
            start + step
        };
        (start, end)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid { rows: 4, cols: 4 }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid {s:?} is not ROWSxCOLS"));
        let (r, c) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        Grid::new(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?)
    }
}

/// Per-region label counts, region-major: `counts[j * bins + i]` counts the
/// labels falling in bin `i` inside region `j`. Regions are numbered in
/// raster order. Pixels whose `mask` bit is false are not counted; the mask,
/// when given, is aligned with the label image.
pub fn regional_histograms(
    lbp: &LbpImage,
    grid: Grid,
    bins: usize,
    mask: Option<&BinaryMask>,
) -> Result<Vec<u64>> {
    if grid.rows > lbp.height || grid.cols > lbp.width || grid.regions() == 0 {
        return Err(Error::InvalidParameter(format!(
            "{grid} grid does not fit a {}x{} label image",
            lbp.width, lbp.height
        )));
    }
    if !(2..=256).contains(&bins) {
        return Err(Error::InvalidParameter(format!(
            "bin count {bins} outside 2..=256"
        )));
    }
    if let Some(m) = mask {
        if (m.width(), m.height()) != (lbp.width, lbp.height) {
            return Err(Error::DimensionMismatch(
                "mask does not match label image".into(),
            ));
        }
    }
    let mut counts = vec![0u64; grid.regions() * bins];
    for row in 0..grid.rows {
        let (y0, y1) = Grid::span(lbp.height, grid.rows, row);
        for col in 0..grid.cols {
            let (x0, x1) = Grid::span(lbp.width, grid.cols, col);
            let block = &mut counts[(row * grid.cols + col) * bins..][..bins];
            for y in y0..y1 {
                for x in x0..x1 {
                    if mask.is_none_or(|m| m.get(x, y)) {
                        block[bin_of(lbp.get(x, y), bins)] += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Anything matchable block by block: a flat vector of per-region PDFs of
/// `block_len()` bins each, with one weight per block.
pub trait RegionalPdf {
    fn values(&self) -> &[f64];
    fn block_len(&self) -> usize;
    fn weights(&self) -> &[f64];
}

/// Concatenated per-region LBP PDFs for one color channel of one face.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub channel: Channel,
    pub grid: Grid,
    pub bins: usize,
    pub values: Vec<f64>,
    pub region_weights: Vec<f64>,
}

impl Signature {
    /// Normalizes each region's counts to a PDF. Regions with no counted
    /// pixels become uniform.
    pub fn from_counts(channel: Channel, grid: Grid, bins: usize, counts: &[u64]) -> Result<Self> {
        if counts.len() != grid.regions() * bins {
            return Err(Error::DimensionMismatch(format!(
                "{} counts for {} regions of {} bins",
                counts.len(),
                grid.regions(),
                bins
            )));
        }
        let mut values = Vec::with_capacity(counts.len());
        for block in counts.chunks_exact(bins) {
            let total: u64 = block.iter().sum();
            if total == 0 {
                values.extend(std::iter::repeat_n(1.0 / bins as f64, bins));
            } else {
                values.extend(block.iter().map(|&c| c as f64 / total as f64));
            }
        }
        Ok(Signature {
            channel,
            grid,
            bins,
            values,
            region_weights: vec![1.0; grid.regions()],
        })
    }

    /// Replaces the region weights; they are rescaled to sum to the region
    /// count.
    pub fn with_region_weights(mut self, weights: &[f64]) -> Result<Self> {
        self.region_weights = normalize_weights(weights, self.grid.regions())?;
        Ok(self)
    }

    pub fn region(&self, j: usize) -> &[f64] {
        &self.values[j * self.bins..(j + 1) * self.bins]
    }
}

impl RegionalPdf for Signature {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn block_len(&self) -> usize {
        self.bins
    }

    fn weights(&self) -> &[f64] {
        &self.region_weights
    }
}

/// Checks a weight vector and scales it so it sums to `regions`.
pub fn normalize_weights(weights: &[f64], regions: usize) -> Result<Vec<f64>> {
    if weights.len() != regions {
        return Err(Error::DimensionMismatch(format!(
            "{} region weights for {} regions",
            weights.len(),
            regions
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter(
            "region weights must be finite and >= 0".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidParameter("region weights sum to zero".into()));
    }
    let scale = regions as f64 / sum;
    Ok(weights.iter().map(|w| w * scale).collect())
}

/// Signature of one channel of a segmented face.
///
/// Labels are counted only where the face mask is set; the mask pixel for a
/// label is the crop pixel at the center of its 3x3 neighborhood.
pub fn channel_signature(
    face: &FaceRegion,
    channel: Channel,
    grid: Grid,
    bins: usize,
) -> Result<Signature> {
    let plane = channel_plane(&face.crop, channel)?;
    let (w, h) = plane.dims();
    let (min_w, min_h) = (3 * grid.cols + 2, 3 * grid.rows + 2);
    if w < min_w || h < min_h {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: min_w,
            min_height: min_h,
        });
    }
    if (face.mask.width(), face.mask.height()) != (w, h) {
        return Err(Error::DimensionMismatch(
            "face mask does not match crop".into(),
        ));
    }
    let codes = lbp(&plane)?;
    let inner = BinaryMask::from_fn(codes.width, codes.height, |x, y| {
        face.mask.get(x + 1, y + 1)
    });
    let counts = regional_histograms(&codes, grid, bins, Some(&inner))?;
    Signature::from_counts(channel, grid, bins, &counts)
}

/// Several channel signatures of one face concatenated in canonical
/// channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSignature {
    pub channels: Vec<Channel>,
    pub grid: Grid,
    pub bins: usize,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RegionalPdf for FusedSignature {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn block_len(&self) -> usize {
        self.bins
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn fvf_signature(sigs: &[&Signature]) -> Result<FusedSignature> {
    let first = sigs
        .first()
        .ok_or(Error::EmptyInput("no signatures to fuse"))?;
    if sigs
        .iter()
        .any(|s| s.grid != first.grid || s.bins != first.bins)
    {
        return Err(Error::IncompatibleGallery(
            "fused signatures must share grid and bin count".into(),
        ));
    }
    let mut ordered: Vec<&Signature> = sigs.to_vec();
    ordered.sort_by_key(|s| s.channel);
    if ordered.windows(2).any(|w| w[0].channel == w[1].channel) {
        return Err(Error::InvalidParameter(
            "duplicate channel in fusion".into(),
        ));
    }
    Ok(FusedSignature {
        channels: ordered.iter().map(|s| s.channel).collect(),
        grid: first.grid,
        bins: first.bins,
        values: ordered
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .collect(),
        weights: ordered
            .iter()
            .flat_map(|s| s.region_weights.iter().copied())
            .collect(),
    })
}
