//! End-to-end flow: enhance, segment, describe, enroll and identify.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::dataset::{load_rgb, DatasetIndex};
use crate::error::{Error, Result};
use crate::features::{channel_signature, FusedSignature};
use crate::fusion::{channel_decisions, majority_vote, normalize_scores, FusionRule};
use crate::gallery::{EnrolledSample, Gallery, GalleryMeta};
use crate::illumination::enhance_image;
use crate::matching::{subject_distances, DistanceTable, Metric, RankedResult};
use crate::raster::{ColorSpace, PlanarImage};
use crate::segmentation::{segment_face, FaceRegion};

/// Enhances an RGB image and crops the face out of the enhanced result.
///
/// The skin mask is taken from the enhanced image when it is RGB or HSI
/// (enhancing I leaves hue and saturation untouched), and from the input
/// otherwise.
pub fn preprocess(img: &PlanarImage, cfg: &PipelineConfig) -> Result<FaceRegion> {
    let enhanced = enhance_image(img, cfg.space, cfg.method)?;
    let located = match enhanced.colorspace() {
        ColorSpace::Rgb | ColorSpace::Hsi => segment_face(&enhanced)?,
        _ => segment_face(img)?.recrop(&enhanced)?,
    };
    Ok(located)
}

/// Signatures of every configured channel for one face.
pub fn describe(face: &FaceRegion, cfg: &PipelineConfig, index: usize) -> Result<EnrolledSample> {
    let mut signatures = BTreeMap::new();
    for &channel in &cfg.channels {
        let mut sig = channel_signature(face, channel, cfg.grid, cfg.bins)?;
        if let Some(w) = &cfg.region_weights {
            sig = sig.with_region_weights(w)?;
        }
        signatures.insert(channel, sig);
    }
    Ok(EnrolledSample { index, signatures })
}

/// Builds a gallery from every image of an index. Images without a skin
/// region, or that fail to decode, are skipped with a warning.
pub fn enroll(index: &DatasetIndex, cfg: &PipelineConfig) -> Result<Gallery> {
    cfg.validate()?;
    let mut gallery = Gallery::new(GalleryMeta::from_config(cfg)?);
    for subject in &index.subjects {
        let mut enrolled = 0;
        let samples: Vec<Result<EnrolledSample>> = subject
            .images
            .par_iter()
            .enumerate()
            .map(|(k, path)| {
                load_rgb(path)
                    .and_then(|img| preprocess(&img, cfg))
                    .and_then(|face| describe(&face, cfg, k))
            })
            .collect();
        for (path, sample) in subject.images.iter().zip(samples) {
            match sample {
                Ok(sample) => {
                    gallery.insert(&subject.id, sample)?;
                    enrolled += 1;
                }
                Err(e @ (Error::NoSkinRegion | Error::Decode { .. } | Error::TooSmall { .. })) => {
                    warn!("skipping {}: {e}", path.display());
                }
                Err(e) => return Err(e),
            }
        }
        if enrolled == 0 {
            return Err(Error::SubjectWithoutImages(subject.id.clone()));
        }
        info!("enrolled {} image(s) of {}", enrolled, subject.id);
    }
    Ok(gallery)
}

/// A gallery sample with its concatenated signature computed once.
#[derive(Debug, Clone)]
pub struct PreparedSample<'a> {
    pub subject: &'a str,
    pub sample: &'a EnrolledSample,
    pub fused: FusedSignature,
}

impl<'a> PreparedSample<'a> {
    pub fn new(subject: &'a str, sample: &'a EnrolledSample) -> Result<Self> {
        Ok(PreparedSample {
            subject,
            sample,
            fused: sample.fused()?,
        })
    }
}

pub fn prepare(gallery: &Gallery) -> Result<Vec<PreparedSample<'_>>> {
    gallery
        .subjects
        .iter()
        .flat_map(|(s, xs)| xs.iter().map(move |x| PreparedSample::new(s, x)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub decision: String,
    pub ranking: RankedResult,
    pub table: DistanceTable,
}

/// Per-channel, per-subject distances of a probe against a gallery.
pub fn distance_table(
    probe: &EnrolledSample,
    gallery: &[&PreparedSample<'_>],
    metric: Metric,
) -> Result<DistanceTable> {
    let mut entries = BTreeMap::new();
    for (&channel, sig) in &probe.signatures {
        let samples = gallery
            .iter()
            .map(|g| -> Result<(&str, _)> {
                let s = g.sample.signatures.get(&channel).ok_or_else(|| {
                    Error::IncompatibleGallery(format!("gallery lacks channel {channel}"))
                })?;
                Ok((g.subject, s))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.insert(channel, subject_distances(sig, samples, metric)?);
    }
    Ok(DistanceTable {
        probe_id: probe.index.to_string(),
        metric,
        entries,
    })
}

fn fused_scores(rule: FusionRule, table: &DistanceTable) -> Result<BTreeMap<String, f64>> {
    let scores = normalize_scores(table)?;
    let mut per: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in scores.channels.values() {
        for (s, &v) in m {
            per.entry(s.clone()).or_default().push(v);
        }
    }
    Ok(per
        .into_iter()
        .map(|(s, mut v)| {
            let score = if rule == FusionRule::Median {
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    0.5 * (v[n / 2 - 1] + v[n / 2])
                }
            } else {
                v.iter().sum()
            };
            (s, score)
        })
        .collect())
}

/// Identifies `probe` against `gallery` under `rule`.
///
/// The ranking lists subjects by fused distance (FVF), summed or median
/// normalized distance (sum, median), or vote count then summed distance
/// (majority vote); its head is always the decision.
pub fn identify_prepared(
    probe: &EnrolledSample,
    probe_fused: Option<&FusedSignature>,
    gallery: &[&PreparedSample<'_>],
    metric: Metric,
    rule: FusionRule,
) -> Result<Identification> {
    if gallery.is_empty() {
        return Err(Error::EmptyInput("gallery is empty"));
    }
    let table = distance_table(probe, gallery, metric)?;
    let ranking = match rule {
        FusionRule::Fvf => {
            let owned;
            let fused = match probe_fused {
                Some(f) => f,
                None => {
                    owned = probe.fused()?;
                    &owned
                }
            };
            let scores =
                subject_distances(fused, gallery.iter().map(|g| (g.subject, &g.fused)), metric)?;
            RankedResult::from_scores(&scores)
        }
        FusionRule::Sum | FusionRule::Median => {
            RankedResult::from_scores(&fused_scores(rule, &table)?)
        }
        FusionRule::MajorityVote => {
            let decisions = channel_decisions(&table)?;
            let winner = majority_vote(&decisions, &normalize_scores(&table)?)?;
            let sums = fused_scores(FusionRule::Sum, &table)?;
            let mut ranking = RankedResult::from_scores(&sums);
            let votes = |s: &str| decisions.iter().filter(|d| d.as_str() == s).count();
            ranking.ranking.sort_by(|a, b| {
                (a.0 != winner)
                    .cmp(&(b.0 != winner))
                    .then(votes(&b.0).cmp(&votes(&a.0)))
                    .then(a.1.total_cmp(&b.1))
            });
            ranking
        }
    };
    Ok(Identification {
        decision: ranking.decision().to_owned(),
        ranking,
        table,
    })
}

/// Identifies one RGB image against a loaded gallery, using the gallery's
/// own pipeline settings.
pub fn identify_image(
    img: &PlanarImage,
    gallery: &Gallery,
    rule: FusionRule,
    top: usize,
) -> Result<Identification> {
    let cfg = config_from_meta(&gallery.meta);
    let face = preprocess(img, &cfg)?;
    let probe = describe(&face, &cfg, 0)?;
    let prepared = prepare(gallery)?;
    let refs: Vec<&PreparedSample<'_>> = prepared.iter().collect();
    let mut id = identify_prepared(&probe, None, &refs, gallery.meta.metric, rule)?;
    id.ranking = id.ranking.truncate(top);
    Ok(id)
}

pub fn config_from_meta(meta: &GalleryMeta) -> PipelineConfig {
    PipelineConfig {
        channels: meta.channels.clone(),
        grid: meta.grid,
        bins: meta.bins,
        metric: meta.metric,
        method: meta.method,
        space: meta.space,
        region_weights: Some(meta.region_weights.clone()),
        ..PipelineConfig::default()
    }
}
