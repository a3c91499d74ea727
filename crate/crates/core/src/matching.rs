//! Histogram distances and nearest-subject ranking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::color::Channel;
use crate::error::{Error, Result};
use crate::features::RegionalPdf;

/// Floor applied to every bin before taking logarithms.
pub const KLD_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Kld,
    L1,
    L2,
    Xcorr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::L1, Metric::L2, Metric::Xcorr, Metric::Kld];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Kld => "KLD",
            Metric::L1 => "L1",
            Metric::L2 => "L2",
            Metric::Xcorr => "XCORR",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "KLD" => Ok(Metric::Kld),
            "L1" => Ok(Metric::L1),
            "L2" => Ok(Metric::L2),
            "XCORR" => Ok(Metric::Xcorr),
            _ => Err(Error::InvalidParameter(format!("unknown metric {s:?}"))),
        }
    }
}

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::EmptyInput("empty vectors"));
    }
    Ok(())
}

/// Floors a block at [`KLD_EPSILON`] and renormalizes it.
fn floored(block: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = block.iter().map(|&v| v.max(KLD_EPSILON)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Symmetric Kullback-Leibler distance between two sets of per-region
/// PDFs of `block_len` bins each.
///
/// Each block contributes `D(p'||q') + D(q'||p') = sum (p' - q')(ln p' - ln q')`,
/// where `p'`, `q'` are the blocks floored at [`KLD_EPSILON`] and
/// renormalized. Block contributions are summed with `weights` (all 1 when
/// absent). The result is exactly 0 for identical inputs and exactly
/// symmetric.
pub fn kld(p: &[f64], q: &[f64], block_len: usize, weights: Option<&[f64]>) -> Result<f64> {
    check_lengths(p, q)?;
    if block_len == 0 || !p.len().is_multiple_of(block_len) {
        return Err(Error::DimensionMismatch(format!(
            "length {} is not a multiple of block length {}",
            p.len(),
            block_len
        )));
    }
    let blocks = p.len() / block_len;
    if let Some(w) = weights {
        if w.len() != blocks {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} blocks",
                w.len(),
                blocks
            )));
        }
    }
    let mut total = 0.0;
    for (j, (pb, qb)) in p
        .chunks_exact(block_len)
        .zip(q.chunks_exact(block_len))
        .enumerate()
    {
        let (pf, qf) = (floored(pb), floored(qb));
        let j_div: f64 = pf
            .iter()
            .zip(&qf)
            .map(|(&a, &b)| (a - b) * (a.ln() - b.ln()))
            .sum();
        total += weights.map_or(1.0, |w| w[j]) * j_div;
    }
    Ok(total)
}

/// Distance between two equal-length vectors. KLD treats the input as
/// consecutive PDFs of `block_len` bins with unit weights.
pub fn metric_distance(p: &[f64], q: &[f64], metric: Metric, block_len: usize) -> Result<f64> {
    check_lengths(p, q)?;
    match metric {
        Metric::Kld => kld(p, q, block_len, None),
        Metric::L1 => Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()),
        Metric::L2 => Ok(p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()),
        Metric::Xcorr => xcorr_distance(p, q),
    }
}

/// 1 minus the Pearson correlation, computed as half the squared distance
/// between the standardized vectors so it is exactly 0 for equal inputs.
fn xcorr_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    let unit = |v: &[f64]| -> Result<Vec<f64>> {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(centered.into_iter().map(|x| x / norm).collect())
    };
    let (a, b) = (unit(p)?, unit(q)?);
    Ok(0.5
        * a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>())
}

/// Distance between two regional PDFs; KLD uses the probe's region weights.
pub fn distance<A: RegionalPdf, B: RegionalPdf>(
    probe: &A,
    sample: &B,
    metric: Metric,
) -> Result<f64> {
    if probe.values().len() != sample.values().len() || probe.block_len() != sample.block_len() {
        return Err(Error::IncompatibleGallery(format!(
            "probe has {} values in blocks of {}, gallery sample {} in blocks of {}",
            probe.values().len(),
            probe.block_len(),
            sample.values().len(),
            sample.block_len()
        )));
    }
    match metric {
        Metric::Kld => kld(
            probe.values(),
            sample.values(),
            probe.block_len(),
            Some(probe.weights()),
        ),
        m => metric_distance(probe.values(), sample.values(), m, probe.block_len()),
    }
}

/// Per-subject distance: the minimum over that subject's samples.
pub fn subject_distances<'a, A, B, I>(
    probe: &A,
    samples: I,
    metric: Metric,
) -> Result<BTreeMap<String, f64>>
where
    A: RegionalPdf,
    B: RegionalPdf + 'a,
    I: IntoIterator<Item = (&'a str, &'a B)>,
{
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for (subject, sample) in samples {
        let d = distance(probe, sample, metric)?;
        best.entry(subject.to_owned())
            .and_modify(|v| *v = v.min(d))
            .or_insert(d);
    }
    if best.is_empty() {
        return Err(Error::EmptyInput("gallery has no samples"));
    }
    Ok(best)
}

/// Subjects ordered by ascending score, ties broken by subject id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub ranking: Vec<(String, f64)>,
}

impl RankedResult {
    pub fn from_scores(scores: &BTreeMap<String, f64>) -> Self {
        let mut ranking: Vec<(String, f64)> = scores.iter().map(|(s, &d)| (s.clone(), d)).collect();
        // BTreeMap order is lexicographic; a stable sort keeps it for ties.
        ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
        RankedResult { ranking }
    }

    pub fn decision(&self) -> &str {
        &self.ranking[0].0
    }

    pub fn truncate(mut self, k: usize) -> Self {
        self.ranking.truncate(k.max(1));
        self
    }
}

/// The `k` nearest subjects to `probe`.
pub fn nearest_subject<'a, A, B, I>(
    probe: &A,
    samples: I,
    metric: Metric,
    k: usize,
) -> Result<RankedResult>
where
    A: RegionalPdf,
    B: RegionalPdf + 'a,
    I: IntoIterator<Item = (&'a str, &'a B)>,
{
    let scores = subject_distances(probe, samples, metric)?;
    Ok(RankedResult::from_scores(&scores).truncate(k))
}

/// Per-channel, per-subject distances for one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    pub probe_id: String,
    pub metric: Metric,
    pub entries: BTreeMap<Channel, BTreeMap<String, f64>>,
}
