//! Repeated random-split identification experiments.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fusion::{decide, FusionRule};
use crate::gallery::EnrolledSample;
use crate::pipeline::{describe, identify_prepared, preprocess, PreparedSample};
use crate::raster::PlanarImage;
use crate::segmentation::FaceRegion;

/// Segmented faces grouped by subject.
pub type FaceSet = Vec<(String, Vec<FaceRegion>)>;

/// Enhances and segments every image. Images without a skin region are
/// dropped; the count of dropped images is returned alongside.
pub fn prepare_faces(
    images: &[(String, Vec<PlanarImage>)],
    cfg: &PipelineConfig,
) -> Result<(FaceSet, usize)> {
    let mut dropped = 0;
    let mut out = Vec::with_capacity(images.len());
    for (id, imgs) in images {
        let mut faces = Vec::with_capacity(imgs.len());
        let results: Vec<Result<FaceRegion>> =
            imgs.par_iter().map(|img| preprocess(img, cfg)).collect();
        for result in results {
            match result {
                Ok(face) => faces.push(face),
                Err(Error::NoSkinRegion) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
        out.push((id.clone(), faces));
    }
    Ok((out, dropped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub train_counts: Vec<usize>,
    pub bins: Vec<usize>,
    pub rules: Vec<FusionRule>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: PipelineConfig::default(),
            train_counts: vec![1, 2, 3, 4, 5],
            bins: vec![256],
            rules: FusionRule::ALL.to_vec(),
            trials: 5,
            seed: 0,
        }
    }
}

/// Mean rank-1 recognition rate of one configuration cell, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub train_count: usize,
    pub rule: FusionRule,
    pub bins: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<RateRow>,
}

impl EvalReport {
    pub fn rate(&self, train_count: usize, rule: FusionRule, bins: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.train_count == train_count && r.rule == rule && r.bins == bins)
            .map(|r| r.rate)
    }

    /// `train_count,rule,bins,rate` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("train_count,rule,bins,rate\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.4}", r.train_count, r.rule, r.bins, r.rate);
        }
        out
    }

    /// One aligned table per bin count: rows are training counts, columns
    /// fusion rules.
    pub fn to_table(&self) -> String {
        let mut bins: Vec<usize> = self.rows.iter().map(|r| r.bins).collect();
        bins.sort_unstable();
        bins.dedup();
        let mut rules: Vec<FusionRule> = self.rows.iter().map(|r| r.rule).collect();
        rules.sort();
        rules.dedup();
        let mut counts: Vec<usize> = self.rows.iter().map(|r| r.train_count).collect();
        counts.sort_unstable();
        counts.dedup();

        let mut out = String::new();
        for b in bins {
            let _ = writeln!(out, "bins = {b}");
            let _ = write!(out, "{:>8}", "train");
            for r in &rules {
                let _ = write!(out, "{:>10}", r.name().to_uppercase());
            }
            out.push('\n');
            for &n in &counts {
                let _ = write!(out, "{n:>8}");
                for &r in &rules {
                    match self.rate(n, r, b) {
                        Some(v) => {
                            let _ = write!(out, "{v:>10.2}");
                        }
                        None => {
                            let _ = write!(out, "{:>10}", "-");
                        }
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Seed for one (train count, trial) split, shared by every bin count and
/// rule so they see identical splits.
fn split_seed(seed: u64, train_count: usize, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (train_count as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ (trial as u64)
            .wrapping_add(1)
            .wrapping_mul(0x8CB9_2BA7_2F3D_8DD7)
}

/// Fraction of probes whose rank-1 subject is correct under each rule, in
/// the order of `rules`.
pub fn recognition_rates(
    gallery: &[&PreparedSample<'_>],
    probes: &[&PreparedSample<'_>],
    cfg: &PipelineConfig,
    rules: &[FusionRule],
) -> Result<Vec<f64>> {
    let hits = probes
        .par_iter()
        .map(|probe| {
            let id = identify_prepared(
                probe.sample,
                Some(&probe.fused),
                gallery,
                cfg.metric,
                FusionRule::Fvf,
            )?;
            rules
                .iter()
                .map(|&rule| {
                    let decision = match rule {
                        FusionRule::Fvf => id.decision.clone(),
                        _ => decide(rule, &id.table)?,
                    };
                    Ok(decision == probe.subject)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut correct = vec![0usize; rules.len()];
    for row in hits {
        for (c, hit) in correct.iter_mut().zip(row) {
            *c += hit as usize;
        }
    }
    let n = probes.len().max(1) as f64;
    Ok(correct.into_iter().map(|c| c as f64 / n).collect())
}

/// For every train count, averages rank-1 rates over `trials` seeded random
/// splits, for every bin count and fusion rule.
pub fn run_identification_experiment(
    faces: &FaceSet,
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    cfg.pipeline.validate()?;
    if faces.is_empty() {
        return Err(Error::EmptyInput("no subjects"));
    }
    if cfg.trials == 0 || cfg.train_counts.is_empty() || cfg.bins.is_empty() || cfg.rules.is_empty()
    {
        return Err(Error::InvalidParameter(
            "experiment needs trials, train counts, bin counts and rules".into(),
        ));
    }
    let max_train = *cfg.train_counts.iter().max().unwrap();
    if let Some((id, f)) = faces.iter().find(|(_, f)| f.len() <= max_train) {
        return Err(Error::InsufficientSamples(format!(
            "subject {id} has {} usable sample(s), need more than {max_train}",
            f.len()
        )));
    }

    let mut report = EvalReport::default();
    for &bins in &cfg.bins {
        let pcfg = PipelineConfig {
            bins,
            ..cfg.pipeline.clone()
        };
        let described: Vec<(String, Vec<EnrolledSample>)> = faces
            .iter()
            .map(|(id, fs)| {
                let samples = fs
                    .par_iter()
                    .enumerate()
                    .map(|(k, f)| describe(f, &pcfg, k))
                    .collect::<Result<Vec<_>>>()?;
                Ok((id.clone(), samples))
            })
            .collect::<Result<_>>()?;
        let prepared: Vec<Vec<PreparedSample<'_>>> = described
            .iter()
            .map(|(id, xs)| xs.iter().map(|x| PreparedSample::new(id, x)).collect())
            .collect::<Result<_>>()?;

        for &train_count in &cfg.train_counts {
            let mut sums = vec![0.0; cfg.rules.len()];
            for trial in 0..cfg.trials {
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(cfg.seed, train_count, trial));
                let mut gallery = Vec::new();
                let mut probes = Vec::new();
                for subject in &prepared {
                    let mut order: Vec<usize> = (0..subject.len()).collect();
                    order.shuffle(&mut rng);
                    for (pos, &i) in order.iter().enumerate() {
                        if pos < train_count {
                            gallery.push(&subject[i]);
                        } else {
                            probes.push(&subject[i]);
                        }
                    }
                }
                let rates = recognition_rates(&gallery, &probes, &pcfg, &cfg.rules)?;
                for (s, r) in sums.iter_mut().zip(rates) {
                    *s += r;
                }
            }
            for (&rule, s) in cfg.rules.iter().zip(sums) {
                report.rows.push(RateRow {
                    train_count,
                    rule,
                    bins,
                    rate: 100.0 * s / cfg.trials as f64,
                });
            }
        }
    }
    Ok(report)
}
