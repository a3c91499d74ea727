//! One-level orthonormal 2D Haar transform.
//!
//! Analysis runs along rows first, then along columns. Odd dimensions are
//! padded by replicating the last row/column and cropped again on synthesis.
//!
//! For a 2x2 block `[[a, b], [c, d]]` the coefficients are
//!
//! ```text
//! ll = (a + b + c + d) / 2
//! lh = (a + b - c - d) / 2    row lowpass, column highpass
//! hl = (a - b + c - d) / 2    row highpass, column lowpass
//! hh = (a - b - c + d) / 2
//! ```

use crate::error::{Error, Result};
use crate::raster::Plane;

/// The four quadrants of a one-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
    pub original_width: usize,
    pub original_height: usize,
}

impl SubbandSet {
    pub fn band_dims(&self) -> (usize, usize) {
        self.ll.dims()
    }
}

pub fn dwt2(plane: &Plane) -> Result<SubbandSet> {
    let (w, h) = plane.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 2,
            min_height: 2,
        });
    }
    let (bw, bh) = (w.div_ceil(2), h.div_ceil(2));
    // Edge replication for odd sizes.
    let at = |x: usize, y: usize| plane.get(x.min(w - 1), y.min(h - 1));

    let mut ll = Vec::with_capacity(bw * bh);
    let mut lh = Vec::with_capacity(bw * bh);
    let mut hl = Vec::with_capacity(bw * bh);
    let mut hh = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let (x, y) = (2 * bx, 2 * by);
            let (a, b) = (at(x, y), at(x + 1, y));
            let (c, d) = (at(x, y + 1), at(x + 1, y + 1));
            ll.push((a + b + c + d) * 0.5);
            lh.push((a + b - c - d) * 0.5);
            hl.push((a - b + c - d) * 0.5);
            hh.push((a - b - c + d) * 0.5);
        }
    }
    Ok(SubbandSet {
        ll: Plane::new(bw, bh, ll)?,
        lh: Plane::new(bw, bh, lh)?,
        hl: Plane::new(bw, bh, hl)?,
        hh: Plane::new(bw, bh, hh)?,
        original_width: w,
        original_height: h,
    })
}

pub fn idwt2(sub: &SubbandSet) -> Result<Plane> {
    let dims = sub.ll.dims();
    if [&sub.lh, &sub.hl, &sub.hh].iter().any(|b| b.dims() != dims) {
        return Err(Error::DimensionMismatch(
            "sub-bands have different shapes".into(),
        ));
    }
    let (bw, bh) = dims;
    let (w, h) = (sub.original_width, sub.original_height);
    if w.div_ceil(2) != bw || h.div_ceil(2) != bh || w == 0 || h == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{bw}x{bh} sub-bands cannot reconstruct a {w}x{h} plane"
        )));
    }

    let mut out = Plane::filled(w, h, 0.0);
    for by in 0..bh {
        for bx in 0..bw {
            let ll = sub.ll.get(bx, by);
            let lh = sub.lh.get(bx, by);
            let hl = sub.hl.get(bx, by);
            let hh = sub.hh.get(bx, by);
            let block = [
                (ll + lh + hl + hh) * 0.5,
                (ll + lh - hl - hh) * 0.5,
                (ll - lh + hl - hh) * 0.5,
                (ll - lh - hl + hh) * 0.5,
            ];
            for (k, v) in block.into_iter().enumerate() {
                let (x, y) = (2 * bx + (k & 1), 2 * by + (k >> 1));
                if x < w && y < h {
                    out.set(x, y, v);
                }
            }
        }
    }
    Ok(out)
}
