//! Randomized checks of the invariants each stage promises.

use std::collections::BTreeMap;

use clbp_core::analysis::{channel_mutual_information, far_frr, Discrimination};
use clbp_core::color::{rgb_to_hsi, Channel};
use clbp_core::config::PipelineConfig;
use clbp_core::features::{channel_signature, lbp, regional_histograms, Grid, Signature};
use clbp_core::fusion::{channel_decisions, decide, FusionRule};
use clbp_core::gallery::{EnrolledSample, Gallery, GalleryMeta};
use clbp_core::histogram::{bin_of, ghe};
use clbp_core::illumination::{
    enhance_plane, enhance_plane_detailed, zeta_norm, zeta_svd, ZetaMethod,
};
use clbp_core::matching::{kld, metric_distance, DistanceTable, Metric, RankedResult};
use clbp_core::raster::{ColorSpace, PlanarImage, Plane};
use clbp_core::segmentation::{
    fill_holes, segment_face, skin_mask, smqt, BinaryMask, FaceRegion, Rect, SKIN_HUE_HIGH,
    SKIN_HUE_LOW, SKIN_MIN_SATURATION,
};
use proptest::prelude::*;

fn plane_of(
    w: usize,
    h: usize,
    values: impl Strategy<Value = f64>,
) -> impl Strategy<Value = Plane> {
    prop::collection::vec(values, w * h).prop_map(move |d| Plane::new(w, h, d).unwrap())
}

/// Integer-valued plane of random size.
fn levels(max_side: usize) -> impl Strategy<Value = Plane> {
    (3..max_side, 3..max_side)
        .prop_flat_map(|(w, h)| plane_of(w, h, (0u8..=255).prop_map(f64::from)))
}

fn continuous(max_side: usize) -> impl Strategy<Value = Plane> {
    (2..max_side, 2..max_side).prop_flat_map(|(w, h)| plane_of(w, h, 0.0..255.0))
}

fn rgb(w: usize, h: usize) -> impl Strategy<Value = PlanarImage> {
    prop::collection::vec(plane_of(w, h, 1.0..255.0f64), 3)
        .prop_map(|p| PlanarImage::new(ColorSpace::Rgb, p).unwrap())
}

fn mask(max_side: usize) -> impl Strategy<Value = BinaryMask> {
    (1..max_side, 1..max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.55), w * h)
            .prop_map(move |b| BinaryMask::new(w, h, b).unwrap())
    })
}

/// Region-blocked PDF: `blocks` blocks of `len` values, each summing to 1.
fn blocked_pdf(blocks: usize, len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, len), blocks).prop_map(|bs| {
        bs.into_iter()
            .flat_map(|b| {
                let s: f64 = b.iter().sum::<f64>().max(1e-12);
                b.into_iter().map(move |v| v / s)
            })
            .collect()
    })
}

fn subject(i: usize) -> String {
    format!("s{i}")
}

/// Channel x subject table of small integer distances.
fn int_table(channels: usize, subjects: usize) -> impl Strategy<Value = DistanceTable> {
    prop::collection::vec(prop::collection::vec(0u32..20, subjects), channels).prop_map(
        move |rows| DistanceTable {
            probe_id: "probe".into(),
            metric: Metric::Kld,
            entries: rows
                .into_iter()
                .enumerate()
                .map(|(c, row)| {
                    let scores = row
                        .into_iter()
                        .enumerate()
                        .map(|(s, d)| (subject(s), f64::from(d)))
                        .collect();
                    (Channel::ALL[c], scores)
                })
                .collect(),
        },
    )
}

const RULES: [FusionRule; 3] = [
    FusionRule::Sum,
    FusionRule::Median,
    FusionRule::MajorityVote,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ghe_is_idempotent(p in levels(40)) {
        let once = ghe(&p).unwrap();
        let twice = ghe(&once).unwrap();
        prop_assert!(once.max_abs_diff(&twice) <= 1.0);
    }

    #[test]
    fn hue_and_saturation_ignore_rgb_scaling(img in rgb(6, 5), a in 0.05..1.0f64) {
        let scaled = PlanarImage::new(
            ColorSpace::Rgb,
            img.planes().iter().map(|p| p.map(|v| v * a)).collect(),
        ).unwrap();
        let (h0, h1) = (rgb_to_hsi(&img).unwrap(), rgb_to_hsi(&scaled).unwrap());
        let (m0, m1) = (skin_mask(&h0).unwrap(), skin_mask(&h1).unwrap());
        for i in 0..img.plane(0).len() {
            let px: Vec<f64> = img.planes().iter().map(|p| p.data()[i]).collect();
            if px[0] == px[1] && px[1] == px[2] {
                continue;
            }
            let (h, s) = (h0.plane(0).data()[i], h0.plane(1).data()[i]);
            prop_assert!((h - h1.plane(0).data()[i]).abs() < 1e-9);
            prop_assert!((s - h1.plane(1).data()[i]).abs() < 1e-9);
            let near = [SKIN_HUE_LOW, SKIN_HUE_HIGH].iter().any(|t| (h - t).abs() < 1e-9)
                || (s - SKIN_MIN_SATURATION).abs() < 1e-9;
            if !near {
                prop_assert_eq!(m0.bits()[i], m1.bits()[i]);
            }
        }
    }

    #[test]
    fn zeta_routes_agree(a in continuous(24), b in continuous(24)) {
        let b = Plane::from_fn(a.width(), a.height(), |x, y| b.get(x % b.width(), y % b.height()));
        let (s, n) = (zeta_svd(&a, &b).unwrap().zeta, zeta_norm(&a, &b).unwrap().zeta);
        prop_assert!((s - n).abs() <= 1e-6 * s, "svd {} norm {}", s, n);
    }

    #[test]
    fn zeta_identity_and_homogeneity(a in continuous(20), b in continuous(20), k in 0.1..10.0f64) {
        prop_assert_eq!(zeta_norm(&a, &a).unwrap().zeta, 1.0);
        prop_assert_eq!(zeta_svd(&a, &a).unwrap().zeta, 1.0);
        let b = Plane::from_fn(a.width(), a.height(), |x, y| b.get(x % b.width(), y % b.height()));
        let kb = b.map(|v| v * k);
        for route in [zeta_norm, zeta_svd] {
            let (z, zk) = (route(&a, &b).unwrap().zeta, route(&a, &kb).unwrap().zeta);
            prop_assert!((zk - k * z).abs() <= 1e-9 * zk);
        }
    }

    #[test]
    fn enhancement_mean_law_and_shape(
        (w, h) in (1usize..16, 1usize..16),
        seed in prop::collection::vec(0.0..255.0f64, 1024),
    ) {
        let (w, h) = (2 * w, 2 * h);
        let p = Plane::new(w, h, seed[..w * h].to_vec()).unwrap();
        let e = enhance_plane_detailed(&p, ZetaMethod::NormRatio).unwrap();
        let expected = e.zeta.zeta * p.mean();
        prop_assert!((e.unclamped.mean() - expected).abs() <= 1e-6 * expected.max(1.0));
        prop_assert_eq!(e.output.dims(), p.dims());
    }

    #[test]
    fn enhancement_keeps_odd_dimensions(p in levels(19)) {
        prop_assume!(p.data().iter().any(|&v| v > 0.0));
        prop_assert_eq!(enhance_plane(&p, ZetaMethod::SvdRatio).unwrap().dims(), p.dims());
    }

    #[test]
    fn smqt_ignores_gain_and_bias(
        p in continuous(12),
        level in 1u32..=8,
        a in 0.1..10.0f64,
        b in -100.0..100.0f64,
    ) {
        let q = p.map(|v| a * v + b);
        prop_assert_eq!(smqt(&p, level).unwrap().labels, smqt(&q, level).unwrap().labels);
    }

    #[test]
    fn fill_holes_is_idempotent_and_monotone(m in mask(24)) {
        let f = fill_holes(&m);
        prop_assert_eq!(&fill_holes(&f), &f);
        prop_assert!(m.bits().iter().zip(f.bits()).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn face_crop_is_inside_and_nonempty(
        img in (3usize..30, 3usize..30).prop_flat_map(|(w, h)| rgb(w, h)),
        seed in any::<(u16, u16)>(),
    ) {
        // Plant one unmistakable skin pixel.
        let (x, y) = (seed.0 as usize % img.width(), seed.1 as usize % img.height());
        let planes = img
            .planes()
            .iter()
            .zip([200.0, 120.0, 90.0])
            .map(|(p, v)| {
                let mut p = p.clone();
                p.set(x, y, v);
                p
            })
            .collect();
        let img = PlanarImage::new(ColorSpace::Rgb, planes).unwrap();
        let face = segment_face(&img).unwrap();
        let Rect { x, y, w, h } = face.bbox;
        prop_assert!(w > 0 && h > 0);
        prop_assert!(x + w <= img.width() && y + h <= img.height());
        prop_assert_eq!((face.crop.width(), face.crop.height()), (w, h));
    }

    #[test]
    fn lbp_ignores_increasing_maps(p in levels(24)) {
        let g = p.map(|v| v * v + 2.0 * v);
        prop_assert_eq!(lbp(&p).unwrap(), lbp(&g).unwrap());
    }

    #[test]
    fn signature_blocks_are_pdfs(
        p in levels(40),
        (rows, cols) in (1usize..4, 1usize..4),
        bins in prop::sample::select(vec![2usize, 16, 32, 64, 256]),
    ) {
        let codes = lbp(&p).unwrap();
        let grid = Grid::new(rows, cols).unwrap();
        prop_assume!(rows <= codes.height && cols <= codes.width);
        let counts = regional_histograms(&codes, grid, bins, None).unwrap();
        let sig = Signature::from_counts(Channel::I, grid, bins, &counts).unwrap();
        prop_assert_eq!(sig.values.len(), rows * cols * bins);
        for j in 0..grid.regions() {
            prop_assert!((sig.region(j).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_region_is_global_histogram(
        p in levels(30),
        bins in prop::sample::select(vec![4usize, 32, 256]),
    ) {
        let codes = lbp(&p).unwrap();
        let grid = Grid::new(1, 1).unwrap();
        let mut oracle = vec![0u64; bins];
        for &l in &codes.labels {
            oracle[bin_of(l, bins)] += 1;
        }
        prop_assert_eq!(regional_histograms(&codes, grid, bins, None).unwrap(), oracle);
    }

    #[test]
    fn channel_signature_is_deterministic(
        img in (14usize..24, 14usize..24).prop_flat_map(|(w, h)| rgb(w, h)),
        bits in prop::collection::vec(any::<bool>(), 24 * 24),
    ) {
        let (w, h) = (img.width(), img.height());
        let face = FaceRegion {
            bbox: Rect { x: 0, y: 0, w, h },
            mask: BinaryMask::new(w, h, bits[..w * h].to_vec()).unwrap(),
            crop: img,
        };
        let grid = Grid::new(4, 4).unwrap();
        for c in [Channel::H, Channel::S, Channel::I] {
            let a = channel_signature(&face, c, grid, 32).unwrap();
            let b = channel_signature(&face, c, grid, 32).unwrap();
            prop_assert_eq!(
                a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn metric_axioms(
        (p, q) in (1usize..5, 2usize..12).prop_flat_map(|(b, l)| (blocked_pdf(b, l), blocked_pdf(b, l)).prop_map(move |pq| (pq, l))).prop_map(|((p, q), l)| ((p, l), (q, l))),
    ) {
        let ((p, len), (q, _)) = (p, q);
        for m in [Metric::Kld, Metric::L1, Metric::L2, Metric::Xcorr] {
            let same = metric_distance(&p, &p, m, len).unwrap();
            prop_assert!(same.abs() < 1e-12, "{m} d(p,p) = {same}");
            let d = metric_distance(&p, &q, m, len).unwrap();
            prop_assert!(d >= 0.0, "{m} negative: {d}");
            if m != Metric::Xcorr {
                prop_assert_eq!(d, metric_distance(&q, &p, m, len).unwrap());
            }
        }
    }

    #[test]
    fn uniform_weights_leave_kld_unchanged(p in blocked_pdf(1, 64), q in blocked_pdf(1, 64)) {
        let weighted = kld(&p, &q, 64, Some(&[1.0])).unwrap();
        prop_assert!((weighted - kld(&p, &q, 64, None).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ranking_ignores_increasing_maps(scores in prop::collection::vec(0u32..20, 1..10)) {
        let raw: BTreeMap<String, f64> =
            scores.iter().enumerate().map(|(i, &d)| (subject(i), f64::from(d))).collect();
        let mapped = raw.iter().map(|(s, &d)| (s.clone(), d * d * d + d)).collect();
        let (a, b) = (RankedResult::from_scores(&raw), RankedResult::from_scores(&mapped));
        prop_assert_eq!(a.decision(), b.decision());
        let names = |r: &RankedResult| r.ranking.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn fusion_returns_enrolled_subject_and_respects_unanimity(
        t in (1usize..4, 1usize..6).prop_flat_map(|(c, s)| int_table(c, s)),
        pick in any::<usize>(),
    ) {
        let subjects: Vec<String> = t.entries.values().next().unwrap().keys().cloned().collect();
        for rule in RULES {
            prop_assert!(subjects.contains(&decide(rule, &t).unwrap()));
        }
        let winner = subjects[pick % subjects.len()].clone();
        let mut unanimous = t.clone();
        for scores in unanimous.entries.values_mut() {
            scores.insert(winner.clone(), -1.0);
        }
        for rule in RULES {
            prop_assert_eq!(decide(rule, &unanimous).unwrap(), winner.clone());
        }
    }

    #[test]
    fn fusion_ignores_per_channel_affine_maps(
        t in (1usize..4, 1usize..6).prop_flat_map(|(c, s)| int_table(c, s)),
        maps in prop::collection::vec((1u32..6, 0u32..10), 3),
    ) {
        let mut shifted = t.clone();
        for (scores, &(a, b)) in shifted.entries.values_mut().zip(&maps) {
            for d in scores.values_mut() {
                *d = f64::from(a) * *d + f64::from(b);
            }
        }
        for rule in RULES {
            prop_assert_eq!(decide(rule, &t).unwrap(), decide(rule, &shifted).unwrap());
        }
    }

    #[test]
    fn one_channel_rules_coincide(t in (1usize..8).prop_flat_map(|s| int_table(1, s))) {
        let channel = channel_decisions(&t).unwrap().remove(0);
        for rule in RULES {
            prop_assert_eq!(decide(rule, &t).unwrap(), channel.clone());
        }
    }

    #[test]
    fn theta_ignores_distance_scale(w in 0.01..10.0f64, b in 0.0..10.0f64, k in 0.01..100.0f64) {
        let base = Discrimination::from_averages(w, b).unwrap().theta_c;
        let scaled = Discrimination::from_averages(k * w, k * b).unwrap().theta_c;
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn nmi_is_symmetric_and_bounded(a in levels(20), b in levels(20)) {
        let b = Plane::from_fn(a.width(), a.height(), |x, y| b.get(x % b.width(), y % b.height()));
        let ab = channel_mutual_information(&a, &b).unwrap();
        prop_assert_eq!(ab, channel_mutual_information(&b, &a).unwrap());
        prop_assert!((0.0..=100.0).contains(&ab));
        prop_assert_eq!(channel_mutual_information(&a, &a).unwrap(), 100.0);
    }

    #[test]
    fn roc_curves_are_monotone(
        genuine in prop::collection::vec(0.0..10.0f64, 1..40),
        impostor in prop::collection::vec(0.0..10.0f64, 1..40),
    ) {
        let c = far_frr(&genuine, &impostor).unwrap();
        prop_assert!(c.far.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.frr.windows(2).all(|w| w[0] >= w[1]));
        let max_far = c.far.iter().copied().fold(0.0, f64::max);
        prop_assert!(c.eer >= 0.0 && c.eer <= max_far, "eer {} max far {}", c.eer, max_far);
    }

    #[test]
    fn gallery_text_round_trip_is_lossless(
        values in prop::collection::vec(prop::collection::vec(prop::num::f64::POSITIVE | prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 2 * 4), 1..6),
    ) {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("grid=1x2\nbins=4\nchannels=I\n", "test").unwrap();
        let meta = GalleryMeta::from_config(&cfg).unwrap();
        let mut g = Gallery::new(meta);
        for (k, v) in values.into_iter().enumerate() {
            let sig = Signature {
                channel: Channel::I,
                grid: cfg.grid,
                bins: 4,
                values: v,
                region_weights: vec![1.0, 1.0],
            };
            let sample = EnrolledSample { index: k, signatures: BTreeMap::from([(Channel::I, sig)]) };
            g.insert(&subject(k % 2), sample).unwrap();
        }
        let back = Gallery::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), g.to_text());
        let bits = |g: &Gallery| -> Vec<u64> {
            g.subjects
                .values()
                .flatten()
                .flat_map(|s| s.signatures[&Channel::I].values.iter().map(|v| v.to_bits()))
                .collect()
        };
        prop_assert_eq!(bits(&back), bits(&g));
    }
}
