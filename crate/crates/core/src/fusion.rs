//! Decision fusion across color channels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::color::Channel;
use crate::error::{Error, Result};
use crate::matching::DistanceTable;

/// How per-channel evidence becomes one identity decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum FusionRule {
    Sum,
    Median,
    MajorityVote,
    /// Feature vector fusion: channels are concatenated before matching.
    #[default]
    Fvf,
}

impl FusionRule {
    pub const ALL: [FusionRule; 4] = [
        FusionRule::Sum,
        FusionRule::Median,
        FusionRule::MajorityVote,
        FusionRule::Fvf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionRule::Sum => "sum",
            FusionRule::Median => "median",
            FusionRule::MajorityVote => "mv",
            FusionRule::Fvf => "fvf",
        }
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sum" => Ok(FusionRule::Sum),
            "median" => Ok(FusionRule::Median),
            "mv" | "majority" => Ok(FusionRule::MajorityVote),
            "fvf" => Ok(FusionRule::Fvf),
            _ => Err(Error::InvalidParameter(format!(
                "unknown fusion rule {s:?}"
            ))),
        }
    }
}

/// Min-max normalized distances, per channel, per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScores {
    pub channels: BTreeMap<Channel, BTreeMap<String, f64>>,
}

fn normalize_channel(scores: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let min = scores.values().copied().fold(f64::INFINITY, f64::min);
    let max = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    scores
        .iter()
        .map(|(s, &d)| {
            let v = if span > 0.0 { (d - min) / span } else { 0.0 };
            (s.clone(), v)
        })
        .collect()
}

/// Maps each channel's distances affinely onto [0, 1]. A channel whose
/// distances are all equal maps to all zeros.
pub fn normalize_scores(table: &DistanceTable) -> Result<ChannelScores> {
    if table.entries.is_empty() || table.entries.values().any(BTreeMap::is_empty) {
        return Err(Error::EmptyInput("distance table has an empty channel"));
    }
    let subjects: Vec<&String> = table.entries.values().next().unwrap().keys().collect();
    if table
        .entries
        .values()
        .any(|m| !m.keys().eq(subjects.iter().copied()))
    {
        return Err(Error::DimensionMismatch(
            "channels disagree on the subject set".into(),
        ));
    }
    Ok(ChannelScores {
        channels: table
            .entries
            .iter()
            .map(|(&c, m)| (c, normalize_channel(m)))
            .collect(),
    })
}

fn argmin(scores: impl IntoIterator<Item = (String, f64)>) -> Result<String> {
    let mut best: Option<(String, f64)> = None;
    // Subjects arrive in lexicographic order, so strict < keeps the first.
    for (s, v) in scores {
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((s, v));
        }
    }
    best.map(|(s, _)| s)
        .ok_or(Error::EmptyInput("no subjects to decide between"))
}

fn per_subject(scores: &ChannelScores) -> Result<BTreeMap<&str, Vec<f64>>> {
    if scores.channels.is_empty() {
        return Err(Error::EmptyInput("no channels to fuse"));
    }
    let mut out: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for m in scores.channels.values() {
        for (s, &v) in m {
            out.entry(s.as_str()).or_default().push(v);
        }
    }
    Ok(out)
}

/// Subject with the smallest summed normalized distance.
pub fn sum_rule(scores: &ChannelScores) -> Result<String> {
    let subjects = per_subject(scores)?;
    argmin(
        subjects
            .into_iter()
            .map(|(s, v)| (s.to_owned(), v.iter().sum())),
    )
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Subject with the smallest median normalized distance across channels.
pub fn median_rule(scores: &ChannelScores) -> Result<String> {
    let subjects = per_subject(scores)?;
    argmin(
        subjects
            .into_iter()
            .map(|(s, mut v)| (s.to_owned(), median(&mut v))),
    )
}

/// Most frequent label among per-channel decisions; ties are settled by
/// the sum rule over `fallback`, restricted to the tied subjects.
pub fn majority_vote(decisions: &[String], fallback: &ChannelScores) -> Result<String> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput("no decisions to vote on"));
    }
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for d in decisions {
        *votes.entry(d.as_str()).or_default() += 1;
    }
    let top = *votes.values().max().unwrap();
    let leaders: Vec<&str> = votes
        .iter()
        .filter(|(_, &n)| n == top)
        .map(|(&s, _)| s)
        .collect();
    if leaders.len() == 1 {
        return Ok(leaders[0].to_owned());
    }
    let restricted = ChannelScores {
        channels: fallback
            .channels
            .iter()
            .map(|(&c, m)| {
                let kept = m
                    .iter()
                    .filter(|(s, _)| leaders.contains(&s.as_str()))
                    .map(|(s, &v)| (s.clone(), v))
                    .collect();
                (c, kept)
            })
            .collect(),
    };
    match sum_rule(&restricted) {
        Ok(s) => Ok(s),
        // Fallback scores did not cover the tied subjects.
        Err(_) => Ok(leaders[0].to_owned()),
    }
}

/// Per-channel rank-1 decisions from a distance table.
pub fn channel_decisions(table: &DistanceTable) -> Result<Vec<String>> {
    table
        .entries
        .values()
        .map(|m| argmin(m.iter().map(|(s, &d)| (s.clone(), d))))
        .collect()
}

/// Applies a score-level rule to a distance table. [`FusionRule::Fvf`] is
/// decided upstream on concatenated signatures and is rejected here.
pub fn decide(rule: FusionRule, table: &DistanceTable) -> Result<String> {
    let scores = normalize_scores(table)?;
    match rule {
        FusionRule::Sum => sum_rule(&scores),
        FusionRule::Median => median_rule(&scores),
        FusionRule::MajorityVote => majority_vote(&channel_decisions(table)?, &scores),
        FusionRule::Fvf => Err(Error::InvalidParameter(
            "feature vector fusion is not a score-level rule".into(),
        )),
    }
}
