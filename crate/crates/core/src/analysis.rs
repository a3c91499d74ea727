//! Evaluation statistics: class discrimination, inter-channel mutual
//! information and FAR/FRR curves.

use std::collections::BTreeMap;

use statrs::function::gamma::digamma;

use crate::color::{channel_plane, Channel};
use crate::error::{Error, Result};
use crate::features::RegionalPdf;
use crate::matching::{distance, Metric};
use crate::raster::{PlanarImage, Plane};

/// Average within-class and between-class distances for one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrimination {
    pub avg_within: f64,
    pub avg_between: f64,
    pub theta_c: f64,
}

impl Discrimination {
    pub fn from_averages(avg_within: f64, avg_between: f64) -> Result<Self> {
        if !(avg_within >= 0.0 && avg_between >= 0.0) {
            return Err(Error::UndefinedDiscrimination("negative average distance"));
        }
        if avg_within == 0.0 {
            return Err(Error::UndefinedDiscrimination(
                "average within-class distance is zero",
            ));
        }
        Ok(Discrimination {
            avg_within,
            avg_between,
            theta_c: avg_between / avg_within,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscriminationReport {
    pub channels: BTreeMap<Channel, Discrimination>,
}

/// Mean pairwise distance within and across classes over a labeled set.
/// Distances of every unordered sample pair, split into same-subject
/// (genuine) and cross-subject (impostor) lists.
pub fn pairwise_scores<R: RegionalPdf>(
    samples: &[(&str, &R)],
    metric: Metric,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut genuine, mut impostor) = (Vec::new(), Vec::new());
    for (i, (la, a)) in samples.iter().enumerate() {
        for (lb, b) in &samples[i + 1..] {
            let d = distance(*a, *b, metric)?;
            if la == lb {
                genuine.push(d);
            } else {
                impostor.push(d);
            }
        }
    }
    Ok((genuine, impostor))
}

/// Average within-class and between-class pair distances and their ratio.
pub fn class_discrimination<R: RegionalPdf>(
    samples: &[(&str, &R)],
    metric: Metric,
) -> Result<Discrimination> {
    let (within, between) = pairwise_scores(samples, metric)?;
    if within.is_empty() {
        return Err(Error::UndefinedDiscrimination("no within-class pair"));
    }
    if between.is_empty() {
        return Err(Error::UndefinedDiscrimination("fewer than two classes"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Discrimination::from_averages(mean(&within), mean(&between))
}

/// How entropies are estimated from histogram counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiEstimator {
    /// Maximum-likelihood `-sum p ln p`. Biased upward for mutual
    /// information when the joint histogram is sparsely filled.
    PlugIn,
    /// Grassberger's bias-corrected estimator,
    /// `ln N - (1/N) sum c G(c)` with
    /// `G(c) = psi(c) + (-1)^c (psi((c+1)/2) - psi(c/2)) / 2`.
    #[default]
    Grassberger,
}

fn grassberger_g(c: u64) -> f64 {
    let x = c as f64;
    let sign = if c.is_multiple_of(2) { 1.0 } else { -1.0 };
    digamma(x) + 0.5 * sign * (digamma((x + 1.0) / 2.0) - digamma(x / 2.0))
}

/// Entropy in nats. Counts are summed in sorted order so that equal
/// multisets of counts give bit-identical results.
fn entropy(counts: impl Iterator<Item = u64>, estimator: MiEstimator) -> f64 {
    let mut c: Vec<u64> = counts.filter(|&c| c > 0).collect();
    c.sort_unstable();
    let n = c.iter().sum::<u64>() as f64;
    match estimator {
        MiEstimator::PlugIn => c
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum(),
        MiEstimator::Grassberger => {
            n.ln() - c.iter().map(|&c| c as f64 * grassberger_g(c)).sum::<f64>() / n
        }
    }
}

/// [`channel_mutual_information_with`] using the default estimator.
pub fn channel_mutual_information(a: &Plane, b: &Plane) -> Result<f64> {
    channel_mutual_information_with(a, b, MiEstimator::default())
}

/// Normalized mutual information in percent, `100 * 2 I(A;B) / (H(A) + H(B))`,
/// from the joint histogram of the two planes quantized to 256 levels.
///
/// A constant plane shares no information with a varying one (0). Two
/// constant planes give 100 when equal and 0 otherwise. Negative
/// bias-corrected estimates are clamped to 0.
pub fn channel_mutual_information_with(
    a: &Plane,
    b: &Plane,
    estimator: MiEstimator,
) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyPlane);
    }
    let (qa, qb) = (a.quantized(), b.quantized());
    let mut joint = vec![0u64; 256 * 256];
    let mut ha = [0u64; 256];
    let mut hb = [0u64; 256];
    for (&x, &y) in qa.iter().zip(&qb) {
        joint[usize::from(x) * 256 + usize::from(y)] += 1;
        ha[usize::from(x)] += 1;
        hb[usize::from(y)] += 1;
    }
    let constant = |h: &[u64; 256]| h.iter().filter(|&&c| c > 0).count() == 1;
    match (constant(&ha), constant(&hb)) {
        (true, true) => return Ok(if qa == qb { 100.0 } else { 0.0 }),
        (true, false) | (false, true) => return Ok(0.0),
        (false, false) => {}
    }
    let ea = entropy(ha.into_iter(), estimator);
    let eb = entropy(hb.into_iter(), estimator);
    let eab = entropy(joint.into_iter(), estimator);
    // Symmetric in a and b: the joint counts are the same multiset.
    let mi = (ea + eb - eab).max(0.0);
    Ok((100.0 * (2.0 * mi / (ea + eb))).clamp(0.0, 100.0))
}

/// Mean NMI (percent) of every channel pair over a set of RGB images.
/// Pairs are keyed with the first channel not after the second.
pub fn mean_channel_mi(
    images: &[PlanarImage],
    channels: &[Channel],
) -> Result<BTreeMap<(Channel, Channel), f64>> {
    if images.is_empty() {
        return Err(Error::EmptyInput("no images"));
    }
    let mut sums: BTreeMap<(Channel, Channel), f64> = BTreeMap::new();
    for img in images {
        let planes = channels
            .iter()
            .map(|&c| channel_plane(img, c).map(|p| (c, p)))
            .collect::<Result<Vec<_>>>()?;
        for (i, (ca, pa)) in planes.iter().enumerate() {
            for (cb, pb) in &planes[i..] {
                let key = ((*ca).min(*cb), (*ca).max(*cb));
                *sums.entry(key).or_default() += channel_mutual_information(pa, pb)?;
            }
        }
    }
    let n = images.len() as f64;
    Ok(sums.into_iter().map(|(k, v)| (k, v / n)).collect())
}

/// False accept / false reject rates over a threshold sweep, with the
/// equal error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
    pub eer: f64,
}

/// Sweeps every distinct score as a threshold. A distance `d` is accepted
/// at threshold `t` when `d <= t`: FAR counts accepted impostors, FRR
/// rejected genuine scores.
///
/// The EER is read where FAR - FRR changes sign, interpolating linearly
/// between the bracketing thresholds. A virtual threshold below every
/// score (FAR 0, FRR 1) anchors the left end.
pub fn far_frr(genuine: &[f64], impostor: &[f64]) -> Result<RocCurve> {
    if genuine.is_empty() {
        return Err(Error::EmptyInput("no genuine scores"));
    }
    if impostor.is_empty() {
        return Err(Error::EmptyInput("no impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let mut g = genuine.to_vec();
    let mut im = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (ng, ni) = (g.len() as f64, im.len() as f64);
    let (mut gi, mut ii) = (0usize, 0usize);
    let mut far = Vec::with_capacity(thresholds.len());
    let mut frr = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        while gi < g.len() && g[gi] <= t {
            gi += 1;
        }
        while ii < im.len() && im[ii] <= t {
            ii += 1;
        }
        far.push(ii as f64 / ni);
        frr.push((g.len() - gi) as f64 / ng);
    }
    let eer = equal_error_rate(&far, &frr);
    Ok(RocCurve {
        thresholds,
        far,
        frr,
        eer,
    })
}

fn equal_error_rate(far: &[f64], frr: &[f64]) -> f64 {
    let (mut prev_far, mut prev_diff) = (0.0, -1.0);
    for (&fa, &fr) in far.iter().zip(frr) {
        let diff = fa - fr;
        if diff == 0.0 {
            return fa;
        }
        if diff > 0.0 {
            let alpha = -prev_diff / (diff - prev_diff);
            return prev_far + alpha * (fa - prev_far);
        }
        prev_far = fa;
        prev_diff = diff;
    }
    // The last threshold accepts everything, so FAR - FRR = 1 > 0 there.
    unreachable!("threshold sweep ends with FAR 1 and FRR 0")
}
