//! Pipeline configuration from flat `key=value` text.

use std::path::Path;

use crate::color::Channel;
use crate::error::{Error, Result};
use crate::features::Grid;
use crate::fusion::FusionRule;
use crate::illumination::{EnhanceSpace, ZetaMethod};
use crate::matching::Metric;
use crate::raster::ColorSpace;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "CLBP_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub channels: Vec<Channel>,
    pub grid: Grid,
    pub bins: usize,
    pub metric: Metric,
    pub fusion: FusionRule,
    pub method: ZetaMethod,
    pub space: EnhanceSpace,
    /// One weight per region; uniform when `None`.
    pub region_weights: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            channels: vec![Channel::H, Channel::S, Channel::I],
            grid: Grid::default(),
            bins: 256,
            metric: Metric::Kld,
            fusion: FusionRule::Fvf,
            method: ZetaMethod::NormRatio,
            space: EnhanceSpace::Hsi,
            region_weights: None,
            seed: 0,
        }
    }
}

/// Parses a comma-separated channel list into canonical order.
pub fn parse_channels(s: &str) -> Result<Vec<Channel>> {
    let mut out = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Channel>>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty channel list".into()));
    }
    Ok(out)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().ok())
        .collect()
}

impl PipelineConfig {
    /// Applies one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidParameter(format!("{key}: invalid {what} {value:?}"));
        match key.trim() {
            "channels" => self.channels = parse_channels(value)?,
            "grid" => self.grid = value.parse()?,
            "bins" => {
                let bins: usize = value.trim().parse().map_err(|_| bad("bin count"))?;
                if !(2..=256).contains(&bins) {
                    return Err(bad("bin count"));
                }
                self.bins = bins;
            }
            "metric" => self.metric = value.parse()?,
            "fusion" => self.fusion = value.parse()?,
            "method" | "enhancement" => self.method = value.parse()?,
            "space" => self.space = value.parse()?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            "region_weights" => {
                let w = parse_list(value.trim()).ok_or_else(|| bad("weight list"))?;
                self.region_weights = Some(w);
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key {other:?}"
                )));
            }
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                origin: format!("{origin}:{}", n + 1),
                reason: "expected key=value".into(),
            })?;
            self.set(k, v).map_err(|e| Error::Config {
                origin: format!("{origin}:{}", n + 1),
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Defaults, overlaid with the file named by [`CONFIG_ENV`] if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(PipelineConfig::default()),
        }
    }

    /// Checks the settings against each other.
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidParameter("no channels configured".into()));
        }
        // An enhanced HSI or YCbCr crop cannot be converted to another space.
        let native = match self.space {
            EnhanceSpace::Hsi => Some(ColorSpace::Hsi),
            EnhanceSpace::YCbCr => Some(ColorSpace::YCbCr),
            EnhanceSpace::Rgb => None,
        };
        if let Some(space) = native {
            if let Some(c) = self.channels.iter().find(|c| c.source().0 != space) {
                return Err(Error::InvalidParameter(format!(
                    "channel {c} is not available after {} enhancement; use space=rgb",
                    self.space
                )));
            }
        }
        if let Some(w) = &self.region_weights {
            crate::features::normalize_weights(w, self.grid.regions())?;
        }
        Ok(())
    }
}
