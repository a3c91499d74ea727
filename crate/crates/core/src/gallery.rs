//! Enrolled signatures and their text file format.
//!
//! ```text
//! CLBP-GALLERY v1
//! format_version=1
//! grid=4x4
//! bins=256
//! channels=H,S,I
//! neighbor_order=tl-cw
//! metric=KLD
//! enhancement=NORM_RATIO
//! space=hsi
//! region_weights=1 1 ... 1
//! records=3
//!
//! alice<TAB>H<TAB>0<TAB>v v v ...
//! ```
//!
//! Every record line ends with a newline and holds `rows * cols * bins`
//! values written with 17 significant digits, which round-trips f64 exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::color::Channel;
use crate::config::{parse_channels, parse_list, PipelineConfig};
use crate::error::{Error, Result};
use crate::features::{fvf_signature, FusedSignature, Grid, Signature, NEIGHBOR_ORDER_TAG};
use crate::illumination::{EnhanceSpace, ZetaMethod};
use crate::matching::Metric;

pub const MAGIC: &str = "CLBP-GALLERY v1";
pub const FORMAT_VERSION: &str = "1";

/// Settings every stored signature was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryMeta {
    pub grid: Grid,
    pub bins: usize,
    pub channels: Vec<Channel>,
    pub neighbor_order: String,
    pub metric: Metric,
    pub method: ZetaMethod,
    pub space: EnhanceSpace,
    pub region_weights: Vec<f64>,
}

impl GalleryMeta {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let regions = cfg.grid.regions();
        let region_weights = match &cfg.region_weights {
            Some(w) => crate::features::normalize_weights(w, regions)?,
            None => vec![1.0; regions],
        };
        Ok(GalleryMeta {
            grid: cfg.grid,
            bins: cfg.bins,
            channels: cfg.channels.clone(),
            neighbor_order: NEIGHBOR_ORDER_TAG.to_owned(),
            metric: cfg.metric,
            method: cfg.method,
            space: cfg.space,
            region_weights,
        })
    }

    pub fn signature_len(&self) -> usize {
        self.grid.regions() * self.bins
    }
}

/// One enrolled image: a signature per configured channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrolledSample {
    pub index: usize,
    pub signatures: BTreeMap<Channel, Signature>,
}

impl EnrolledSample {
    pub fn fused(&self) -> Result<FusedSignature> {
        let sigs: Vec<&Signature> = self.signatures.values().collect();
        fvf_signature(&sigs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    pub meta: GalleryMeta,
    pub subjects: BTreeMap<String, Vec<EnrolledSample>>,
}

impl Gallery {
    pub fn new(meta: GalleryMeta) -> Self {
        Gallery {
            meta,
            subjects: BTreeMap::new(),
        }
    }

    /// Adds a sample after checking it against the header metadata.
    pub fn insert(&mut self, subject: &str, sample: EnrolledSample) -> Result<()> {
        validate_subject_id(subject)?;
        let keys: Vec<Channel> = sample.signatures.keys().copied().collect();
        if keys != self.meta.channels {
            return Err(Error::IncompatibleGallery(format!(
                "sample has channels {keys:?}, gallery expects {:?}",
                self.meta.channels
            )));
        }
        for sig in sample.signatures.values() {
            self.check_signature(sig)?;
        }
        self.subjects
            .entry(subject.to_owned())
            .or_default()
            .push(sample);
        Ok(())
    }

    fn check_signature(&self, sig: &Signature) -> Result<()> {
        if sig.grid != self.meta.grid
            || sig.bins != self.meta.bins
            || sig.values.len() != self.meta.signature_len()
        {
            return Err(Error::IncompatibleGallery(format!(
                "{} signature is {}/{} bins, gallery is {}/{} bins",
                sig.channel, sig.grid, sig.bins, self.meta.grid, self.meta.bins
            )));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.subjects.values().map(Vec::len).sum()
    }

    /// `(subject, signature)` for every sample's signature of `channel`.
    pub fn channel_samples(&self, channel: Channel) -> Vec<(&str, &Signature)> {
        self.subjects
            .iter()
            .flat_map(|(s, samples)| {
                samples
                    .iter()
                    .filter_map(move |x| x.signatures.get(&channel).map(|sig| (s.as_str(), sig)))
            })
            .collect()
    }

    pub fn fused_samples(&self) -> Result<Vec<(String, FusedSignature)>> {
        let mut out = Vec::with_capacity(self.sample_count());
        for (s, samples) in &self.subjects {
            for x in samples {
                out.push((s.clone(), x.fused()?));
            }
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "format_version={FORMAT_VERSION}");
        let _ = writeln!(out, "grid={}", m.grid);
        let _ = writeln!(out, "bins={}", m.bins);
        let channels: Vec<&str> = m.channels.iter().map(|c| c.name()).collect();
        let _ = writeln!(out, "channels={}", channels.join(","));
        let _ = writeln!(out, "neighbor_order={}", m.neighbor_order);
        let _ = writeln!(out, "metric={}", m.metric);
        let _ = writeln!(out, "enhancement={}", m.method);
        let _ = writeln!(out, "space={}", m.space);
        let weights: Vec<String> = m.region_weights.iter().map(|w| fmt_f64(*w)).collect();
        let _ = writeln!(out, "region_weights={}", weights.join(" "));
        let records = self.sample_count() * m.channels.len();
        let _ = writeln!(out, "records={records}");
        out.push('\n');
        for (subject, samples) in &self.subjects {
            for sample in samples {
                for (channel, sig) in &sample.signatures {
                    let _ = write!(out, "{subject}\t{channel}\t{}\t", sample.index);
                    for (i, v) in sig.values.iter().enumerate() {
                        if i > 0 {
                            out.push(' ');
                        }
                        out.push_str(&fmt_f64(*v));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Gallery> {
        parse(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Gallery> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse(&text)
    }
}

/// 17 significant digits in scientific notation.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn validate_subject_id(s: &str) -> Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidParameter(format!(
            "subject id {s:?} is empty or contains tabs/newlines"
        )));
    }
    Ok(())
}

fn parse(text: &str) -> Result<Gallery> {
    let corrupt = |line: usize, reason: String| Error::CorruptGallery { line, reason };
    if !text.ends_with('\n') {
        return Err(corrupt(
            text.lines().count().max(1),
            "file does not end with a newline (truncated?)".into(),
        ));
    }
    let mut lines = text
        .split_terminator('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, other)) => return Err(corrupt(n, format!("bad magic line {other:?}"))),
        None => return Err(corrupt(1, "empty file".into())),
    }

    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut header_closed = false;
    for (n, line) in lines.by_ref() {
        if line.is_empty() {
            header_closed = true;
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| corrupt(n, format!("expected key=value, got {line:?}")))?;
        header.insert(k, (n, v));
    }
    if !header_closed {
        return Err(corrupt(
            header.len() + 1,
            "header is not terminated by a blank line".into(),
        ));
    }

    let get = |key: &str| -> Result<(usize, &str)> {
        header
            .get(key)
            .copied()
            .ok_or_else(|| corrupt(1, format!("missing header key {key:?}")))
    };
    let (_, version) = get("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedGalleryVersion(version.to_owned()));
    }
    let field = |key: &str| -> Result<(usize, &str)> { get(key) };
    let wrap = |n: usize| move |e: Error| corrupt(n, e.to_string());

    let (n, v) = field("grid")?;
    let grid: Grid = v.parse().map_err(wrap(n))?;
    let (n, v) = field("bins")?;
    let bins: usize = v
        .parse()
        .ok()
        .filter(|b| (2..=256).contains(b))
        .ok_or_else(|| corrupt(n, format!("bad bin count {v:?}")))?;
    let (n, v) = field("channels")?;
    let channels = parse_channels(v).map_err(wrap(n))?;
    let (n, neighbor_order) = field("neighbor_order")?;
    if neighbor_order != NEIGHBOR_ORDER_TAG {
        return Err(corrupt(
            n,
            format!("unsupported neighbor order {neighbor_order:?}"),
        ));
    }
    let (n, v) = field("metric")?;
    let metric: Metric = v.parse().map_err(wrap(n))?;
    let (n, v) = field("enhancement")?;
    let method: ZetaMethod = v.parse().map_err(wrap(n))?;
    let (n, v) = field("space")?;
    let space: EnhanceSpace = v.parse().map_err(wrap(n))?;
    let (n, v) = field("region_weights")?;
    let region_weights: Vec<f64> =
        parse_list(v).ok_or_else(|| corrupt(n, "unparseable region weights".into()))?;
    if region_weights.len() != grid.regions() {
        return Err(corrupt(
            n,
            format!("{} region weights for a {grid} grid", region_weights.len()),
        ));
    }
    let (n, v) = field("records")?;
    let records: usize = v
        .parse()
        .map_err(|_| corrupt(n, format!("bad record count {v:?}")))?;

    let meta = GalleryMeta {
        grid,
        bins,
        channels: channels.clone(),
        neighbor_order: neighbor_order.to_owned(),
        metric,
        method,
        space,
        region_weights: region_weights.clone(),
    };
    let expected_len = meta.signature_len();

    let mut samples: BTreeMap<(String, usize), BTreeMap<Channel, Signature>> = BTreeMap::new();
    let mut seen = 0usize;
    for (n, line) in lines {
        let mut parts = line.splitn(4, '\t');
        let (Some(subject), Some(channel), Some(index), Some(values)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(corrupt(n, "record needs 4 tab-separated fields".into()));
        };
        validate_subject_id(subject).map_err(wrap(n))?;
        let channel: Channel = channel.parse().map_err(wrap(n))?;
        if !channels.contains(&channel) {
            return Err(corrupt(
                n,
                format!("channel {channel} not declared in header"),
            ));
        }
        let index: usize = index
            .parse()
            .map_err(|_| corrupt(n, format!("bad sample index {index:?}")))?;
        let values: Vec<f64> = values
            .split(' ')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| corrupt(n, format!("bad value: {e}")))?;
        if values.len() != expected_len {
            return Err(corrupt(
                n,
                format!("{} values, header implies {expected_len}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(corrupt(n, "values must be finite and non-negative".into()));
        }
        let sig = Signature {
            channel,
            grid,
            bins,
            values,
            region_weights: region_weights.clone(),
        };
        let slot = samples.entry((subject.to_owned(), index)).or_default();
        if slot.insert(channel, sig).is_some() {
            return Err(corrupt(
                n,
                format!("duplicate {channel} record for {subject}/{index}"),
            ));
        }
        seen += 1;
    }
    if seen != records {
        return Err(corrupt(
            text.lines().count(),
            format!("header declares {records} records, found {seen} (truncated?)"),
        ));
    }

    let mut gallery = Gallery::new(meta);
    for ((subject, index), signatures) in samples {
        if signatures.keys().ne(channels.iter()) {
            return Err(corrupt(
                0,
                format!("sample {subject}/{index} lacks some declared channels"),
            ));
        }
        gallery
            .subjects
            .entry(subject)
            .or_default()
            .push(EnrolledSample { index, signatures });
    }
    Ok(gallery)
}
