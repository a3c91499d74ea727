//! Face localization: successive mean quantization, skin-color masking,
//! hole filling and largest-blob cropping.

use std::collections::VecDeque;

use crate::color::rgb_to_hsi;
use crate::error::{Error, Result};
use crate::raster::{ColorSpace, PlanarImage, Plane};

/// Hue below this is skin-toned (red/orange side).
pub const SKIN_HUE_LOW: f64 = 0.17;
/// Hue above this is skin-toned (magenta wrap-around).
pub const SKIN_HUE_HIGH: f64 = 0.63;
/// Minimum saturation for a skin pixel.
pub const SKIN_MIN_SATURATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mask given {} bits",
                width,
                height,
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn crop(&self, r: Rect) -> Result<BinaryMask> {
        if r.x + r.w > self.width || r.y + r.h > self.height {
            return Err(Error::DimensionMismatch("crop outside mask".into()));
        }
        Ok(BinaryMask::from_fn(r.w, r.h, |x, y| {
            self.get(r.x + x, r.y + y)
        }))
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmqtLabels {
    pub level: u32,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

/// Successive mean quantization transform with `level` levels.
///
/// Every node splits its pixels at their mean: values >= mean take bit 1,
/// the rest bit 0. Bits are appended most significant first, so labels lie
/// in [0, 2^level).
pub fn smqt(region: &Plane, level: u32) -> Result<SmqtLabels> {
    if region.is_empty() {
        return Err(Error::EmptyPlane);
    }
    if !(1..=8).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "SMQT level {level} outside 1..=8"
        )));
    }
    let data = region.data();
    let mut labels = vec![0u32; data.len()];
    let mut nodes: Vec<Vec<usize>> = vec![(0..data.len()).collect()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in nodes {
            if node.is_empty() {
                next.push(Vec::new());
                next.push(Vec::new());
                continue;
            }
            let mean = node.iter().map(|&i| data[i]).sum::<f64>() / node.len() as f64;
            let (upper, lower): (Vec<usize>, Vec<usize>) =
                node.into_iter().partition(|&i| data[i] >= mean);
            for &i in &lower {
                labels[i] <<= 1;
            }
            for &i in &upper {
                labels[i] = (labels[i] << 1) | 1;
            }
            next.push(lower);
            next.push(upper);
        }
        nodes = next;
    }
    Ok(SmqtLabels {
        level,
        width: region.width(),
        height: region.height(),
        labels,
    })
}

/// The skin rule: (H < 0.17 OR H > 0.63) AND S > 0.1.
#[inline]
pub fn is_skin(hue: f64, saturation: f64) -> bool {
    !(SKIN_HUE_LOW..=SKIN_HUE_HIGH).contains(&hue) && saturation > SKIN_MIN_SATURATION
}

pub fn skin_mask(img: &PlanarImage) -> Result<BinaryMask> {
    img.expect_space(ColorSpace::Hsi)?;
    let (h, s) = (img.plane(0).data(), img.plane(1).data());
    let bits = h.iter().zip(s).map(|(&h, &s)| is_skin(h, s)).collect();
    BinaryMask::new(img.width(), img.height(), bits)
}

/// Sets every background pixel that is not 4-connected to the border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            if border && !mask.get(x, y) {
                outside[y * w + x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let mut visit = |nx: usize, ny: usize| {
            let i = ny * w + nx;
            if !outside[i] && !mask.bits[i] {
                outside[i] = true;
                queue.push_back((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
    BinaryMask {
        width: w,
        height: h,
        bits: outside.into_iter().map(|o| !o).collect(),
    }
}

/// Tight bounding box of the largest 8-connected foreground component.
///
/// Components are discovered in raster order, so on equal size the one
/// whose first pixel is topmost, then leftmost, wins.
pub fn largest_component_bbox(mask: &BinaryMask) -> Result<Rect> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut best: Option<(usize, Rect)> = None;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            size += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if mask.bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if best.is_none_or(|(s, _)| size > s) {
            let rect = Rect {
                x: x0,
                y: y0,
                w: x1 - x0 + 1,
                h: y1 - y0 + 1,
            };
            best = Some((size, rect));
        }
    }
    best.map(|(_, r)| r).ok_or(Error::NoSkinRegion)
}

/// A located face: its box in the source, the cropped pixels, and the
/// hole-filled skin mask restricted to the box.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRegion {
    pub bbox: Rect,
    pub crop: PlanarImage,
    pub mask: BinaryMask,
}

impl FaceRegion {
    /// The same box and mask applied to another image of the source's size.
    pub fn recrop(&self, img: &PlanarImage) -> Result<FaceRegion> {
        let Rect { x, y, w, h } = self.bbox;
        Ok(FaceRegion {
            bbox: self.bbox,
            crop: img.crop(x, y, w, h)?,
            mask: self.mask.clone(),
        })
    }
}

/// Skin mask with holes filled, for an RGB or HSI image.
pub fn face_mask(img: &PlanarImage) -> Result<BinaryMask> {
    let mask = match img.colorspace() {
        ColorSpace::Hsi => skin_mask(img)?,
        ColorSpace::Rgb => skin_mask(&rgb_to_hsi(img)?)?,
        other => return Err(Error::UnsupportedColorSpace(other)),
    };
    Ok(fill_holes(&mask))
}

/// Locates the face in an RGB (or already HSI) image and crops it. The crop
/// keeps the input's color space.
pub fn segment_face(img: &PlanarImage) -> Result<FaceRegion> {
    let mask = face_mask(img)?;
    let bbox = largest_component_bbox(&mask)?;
    Ok(FaceRegion {
        bbox,
        crop: img.crop(bbox.x, bbox.y, bbox.w, bbox.h)?,
        mask: mask.crop(bbox)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMask::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn smqt_constant_goes_up() {
        let l = smqt(&Plane::filled(3, 3, 5.0), 1).unwrap();
        assert!(l.labels.iter().all(|&v| v == 1));
    }

    #[test]
    fn smqt_mean_threshold() {
        let p = Plane::new(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(smqt(&p, 1).unwrap().labels, vec![0, 0, 1, 1]);
        // Second level splits each half at its own mean (1.5 and 3.5).
        assert_eq!(smqt(&p, 2).unwrap().labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn smqt_rejects_bad_input() {
        assert!(smqt(&Plane::new(0, 0, vec![]).unwrap(), 1).is_err());
        assert!(smqt(&Plane::filled(2, 2, 0.0), 0).is_err());
        assert!(smqt(&Plane::filled(2, 2, 0.0), 9).is_err());
    }

    #[test]
    fn skin_rule_examples() {
        assert!(is_skin(0.10, 0.30));
        assert!(!is_skin(0.40, 0.50));
        assert!(!is_skin(0.70, 0.05));
    }

    #[test]
    fn fill_ring() {
        let ring = mask_from(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        let filled = fill_holes(&ring);
        assert_eq!(
            filled,
            mask_from(&[".....", ".###.", ".###.", ".###.", "....."])
        );
        let empty = BinaryMask::filled(4, 4, false);
        assert_eq!(fill_holes(&empty), empty);
    }

    #[test]
    fn c_shape_open_to_border_is_kept() {
        let c = mask_from(&["####", "#...", "#.##", "####"]);
        assert_eq!(fill_holes(&c), c);
    }

    #[test]
    fn diagonal_gap_is_not_a_leak() {
        // Interior pixel touches the outside only diagonally: 4-connectivity
        // treats it as a hole.
        let m = mask_from(&[".#.", "#.#", ".#."]);
        assert!(fill_holes(&m).get(1, 1));
    }

    #[test]
    fn bbox_single_pixel() {
        let m = BinaryMask::from_fn(8, 8, |x, y| (x, y) == (3, 5));
        assert_eq!(
            largest_component_bbox(&m).unwrap(),
            Rect {
                x: 3,
                y: 5,
                w: 1,
                h: 1
            }
        );
        assert!(matches!(
            largest_component_bbox(&BinaryMask::filled(3, 3, false)),
            Err(Error::NoSkinRegion)
        ));
    }

    #[test]
    fn bbox_picks_larger_blob() {
        // 10-pixel blob (2x5) and 25-pixel blob (5x5).
        let m = BinaryMask::from_fn(20, 12, |x, y| {
            (x < 2 && y < 5) || ((10..15).contains(&x) && (4..9).contains(&y))
        });
        assert_eq!(
            largest_component_bbox(&m).unwrap(),
            Rect {
                x: 10,
                y: 4,
                w: 5,
                h: 5
            }
        );
    }

    #[test]
    fn bbox_tie_prefers_topmost_then_leftmost() {
        let m = mask_from(&["...##", "...##", "##...", "##..."]);
        assert_eq!(
            largest_component_bbox(&m).unwrap(),
            Rect {
                x: 3,
                y: 0,
                w: 2,
                h: 2
            }
        );
        let m = mask_from(&["##.##", "##.##"]);
        assert_eq!(largest_component_bbox(&m).unwrap().x, 0);
    }

    #[test]
    fn bbox_uses_diagonal_connectivity() {
        let m = mask_from(&["#..", ".#.", "..#"]);
        assert_eq!(
            largest_component_bbox(&m).unwrap(),
            Rect {
                x: 0,
                y: 0,
                w: 3,
                h: 3
            }
        );
    }

    fn scene(eyes: bool) -> PlanarImage {
        let (w, h) = (40, 30);
        let inside = |x: usize, y: usize| (8..28).contains(&x) && (5..25).contains(&y);
        let eye = |x: usize, y: usize| eyes && (12..15).contains(&x) && (10..12).contains(&y);
        let px = |x, y| {
            if inside(x, y) && !eye(x, y) {
                [210.0, 160.0, 120.0]
            } else if inside(x, y) {
                [40.0, 40.0, 40.0]
            } else {
                [60.0, 170.0, 90.0]
            }
        };
        let planes = (0..3)
            .map(|c| Plane::from_fn(w, h, |x, y| px(x, y)[c]))
            .collect();
        PlanarImage::new(ColorSpace::Rgb, planes).unwrap()
    }

    #[test]
    fn segment_synthetic_rectangle() {
        let face = segment_face(&scene(false)).unwrap();
        assert_eq!(
            face.bbox,
            Rect {
                x: 8,
                y: 5,
                w: 20,
                h: 20
            }
        );
        assert_eq!((face.crop.width(), face.crop.height()), (20, 20));
        assert_eq!(face.mask.count(), 400);
    }

    #[test]
    fn segment_fills_eye_holes() {
        let face = segment_face(&scene(true)).unwrap();
        assert_eq!(
            face.bbox,
            Rect {
                x: 8,
                y: 5,
                w: 20,
                h: 20
            }
        );
        assert_eq!(face.mask.count(), 400);
    }

    #[test]
    fn segment_without_skin_fails() {
        let green = PlanarImage::new(
            ColorSpace::Rgb,
            vec![
                Plane::filled(5, 5, 10.0),
                Plane::filled(5, 5, 220.0),
                Plane::filled(5, 5, 20.0),
            ],
        )
        .unwrap();
        assert!(matches!(segment_face(&green), Err(Error::NoSkinRegion)));
    }

    /// True when some value of a multi-pixel node equals its node's mean
    /// exactly; such ties may flip once the values are rescaled.
    fn has_exact_tie(values: &[u32], level: u32) -> bool {
        let mut nodes = vec![values.iter().map(|&v| i128::from(v)).collect::<Vec<_>>()];
        for _ in 0..level {
            let mut next = Vec::new();
            for node in nodes {
                let n = node.len() as i128;
                let sum: i128 = node.iter().sum();
                if n > 1 && node.iter().any(|&v| v * n == sum) {
                    return true;
                }
                let (up, down): (Vec<i128>, Vec<i128>) =
                    node.into_iter().partition(|&v| v * n >= sum);
                next.push(up);
                next.push(down);
            }
            nodes = next;
        }
        false
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |b| BinaryMask::new(w, h, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn fill_holes_idempotent_and_monotone(m in arb_mask()) {
            let once = fill_holes(&m);
            prop_assert_eq!(&fill_holes(&once), &once);
            for (a, b) in m.bits().iter().zip(once.bits()) {
                prop_assert!(!a || *b);
            }
        }

        #[test]
        fn smqt_gain_bias_invariance(
            values in proptest::collection::hash_set(0u32..100_000, 1..64),
            gain in 0.01f64..100.0,
            bias in -1000.0f64..1000.0,
            level in 1u32..=4,
        ) {
            let ints: Vec<u32> = values.into_iter().collect();
            prop_assume!(!has_exact_tie(&ints, level));
            let data: Vec<f64> = ints.iter().map(|&v| f64::from(v)).collect();
            let p = Plane::new(data.len(), 1, data).unwrap();
            let q = p.map(|v| gain * v + bias);
            let a = smqt(&p, level).unwrap();
            prop_assert!(a.labels.iter().all(|&l| l < 1 << level));
            prop_assert_eq!(a.labels, smqt(&q, level).unwrap().labels);
        }
    }
}
