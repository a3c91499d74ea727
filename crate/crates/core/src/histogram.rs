//! Intensity histograms, probability vectors and global histogram
//! equalization.
//!
//! Real-valued planes are quantized to the nearest 8-bit level before
//! counting.

use crate::error::{Error, Result};
use crate::raster::{quantize, Plane};

/// A normalized histogram: `values[t]` is the probability of bin `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfVector {
    values: Vec<f64>,
}

impl PdfVector {
    /// Normalizes raw counts. Fails on an all-zero count vector.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("histogram has no samples"));
        }
        let n = total as f64;
        Ok(PdfVector {
            values: counts.iter().map(|&c| c as f64 / n).collect(),
        })
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Bin index of an 8-bit level when [0, 256) is split into `bins` equal bins.
#[inline]
pub fn bin_of(level: u8, bins: usize) -> usize {
    usize::from(level) * bins / 256
}

/// Counts of each 8-bit level.
pub fn level_counts(plane: &Plane) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for &v in plane.data() {
        counts[usize::from(quantize(v))] += 1;
    }
    counts
}

/// Raw bin counts. The counts always sum to the plane's pixel count.
pub fn counts(plane: &Plane, bins: usize) -> Result<Vec<u64>> {
    if plane.is_empty() {
        return Err(Error::EmptyPlane);
    }
    if !(2..=256).contains(&bins) {
        return Err(Error::InvalidParameter(format!(
            "bin count {bins} outside 2..=256"
        )));
    }
    let mut out = vec![0u64; bins];
    for (level, &c) in level_counts(plane).iter().enumerate() {
        out[bin_of(level as u8, bins)] += c;
    }
    Ok(out)
}

/// Probability of each of `bins` intensity bins.
pub fn pdf(plane: &Plane, bins: usize) -> Result<PdfVector> {
    PdfVector::from_counts(&counts(plane, bins)?)
}

/// Global histogram equalization: each level maps to floor(255 * CDF(level)).
pub fn ghe(plane: &Plane) -> Result<Plane> {
    if plane.is_empty() {
        return Err(Error::EmptyPlane);
    }
    let lut = ghe_lut(plane);
    Ok(plane.map(|v| f64::from(lut[usize::from(quantize(v))])))
}

/// The level mapping used by [`ghe`].
pub fn ghe_lut(plane: &Plane) -> [u8; 256] {
    let counts = level_counts(plane);
    let total = plane.len() as u64;
    let mut lut = [0u8; 256];
    let mut cumulative = 0u64;
    for (level, &c) in counts.iter().enumerate() {
        cumulative += c;
        // Integer arithmetic keeps the floor exact.
        lut[level] = (255 * cumulative / total.max(1)) as u8;
    }
    lut
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_levels(repeats: usize) -> Plane {
        Plane::from_fn(256, repeats, |x, _| x as f64)
    }

    #[test]
    fn ghe_constant_maps_to_top() {
        let p = Plane::filled(5, 3, 42.0);
        let out = ghe(&p).unwrap();
        assert!(out.data().iter().all(|&v| v == 255.0));
    }

    #[test]
    fn ghe_uniform_is_identity() {
        let p = uniform_levels(2);
        let out = ghe(&p).unwrap();
        assert!(out.max_abs_diff(&p) <= 1.0);
        // With the floor rule the uniform raster is an exact fixed point.
        assert_eq!(out, p);
    }

    #[test]
    fn ghe_two_levels() {
        let p = Plane::from_fn(4, 4, |x, _| if x < 2 { 0.0 } else { 255.0 });
        let out = ghe(&p).unwrap();
        assert_eq!(out.get(0, 0), 127.0);
        assert_eq!(out.get(3, 0), 255.0);
    }

    #[test]
    fn ghe_and_pdf_reject_empty() {
        let p = Plane::new(0, 0, vec![]).unwrap();
        assert!(matches!(ghe(&p), Err(Error::EmptyPlane)));
        assert!(matches!(pdf(&p, 256), Err(Error::EmptyPlane)));
    }

    #[test]
    fn pdf_point_mass_and_uniform() {
        let p = Plane::filled(3, 3, 17.0);
        let v = pdf(&p, 256).unwrap();
        assert_eq!(v.values()[17], 1.0);
        assert_eq!(v.values().iter().filter(|&&x| x > 0.0).count(), 1);

        let u = pdf(&uniform_levels(3), 256).unwrap();
        assert!(u.values().iter().all(|&x| x == 1.0 / 256.0));
    }

    #[test]
    fn last_level_lands_in_last_bin() {
        for bins in [2, 32, 64, 128, 256] {
            assert_eq!(bin_of(255, bins), bins - 1);
            assert_eq!(bin_of(0, bins), 0);
        }
        assert!(pdf(&Plane::filled(1, 1, 0.0), 1).is_err());
    }

    fn arb_plane() -> impl Strategy<Value = Plane> {
        (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..=255.0, w * h)
                .prop_map(move |d| Plane::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pdf_sums_to_one_and_counts_are_complete(p in arb_plane(), bins in prop::sample::select(vec![32usize, 64, 128, 256])) {
            let c = counts(&p, bins).unwrap();
            prop_assert_eq!(c.iter().sum::<u64>(), p.len() as u64);
            let v = pdf(&p, bins).unwrap();
            prop_assert!((v.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(v.values().iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn coarse_pdf_is_block_sum(p in arb_plane(), bins in prop::sample::select(vec![32usize, 64, 128])) {
            let fine = pdf(&p, 256).unwrap();
            let coarse = pdf(&p, bins).unwrap();
            let width = 256 / bins;
            for (b, &v) in coarse.values().iter().enumerate() {
                let sum: f64 = fine.values()[b * width..(b + 1) * width].iter().sum();
                prop_assert!((v - sum).abs() < 1e-12);
            }
        }

        #[test]
        fn ghe_is_monotone_and_nearly_idempotent(p in arb_plane()) {
            let once = ghe(&p).unwrap();
            let twice = ghe(&once).unwrap();
            prop_assert!(twice.max_abs_diff(&once) <= 1.0);
            let lut = ghe_lut(&p);
            prop_assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
