//! `clbp`: command-line front end for the color LBP face identification
//! pipeline.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use clbp_core::analysis::{class_discrimination, far_frr, mean_channel_mi, pairwise_scores};
use clbp_core::color::{rgb_to_hsi, rgb_to_ycbcr, Channel};
use clbp_core::config::PipelineConfig;
use clbp_core::dataset::{
    ingest, load_rgb, save_gray_png, save_mask_png, save_rgb_png, DatasetIndex,
};
use clbp_core::experiment::{prepare_faces, run_identification_experiment, ExperimentConfig};
use clbp_core::fusion::FusionRule;
use clbp_core::gallery::Gallery;
use clbp_core::illumination::{enhance_image, enhance_plane_detailed, EnhanceSpace, ZetaMethod};
use clbp_core::pipeline::{enroll, identify_image};
use clbp_core::raster::PlanarImage;
use clbp_core::segmentation::segment_face;

#[derive(Parser)]
#[command(name = "clbp", version, about = "Color LBP face identification")]
struct Cli {
    /// Config file of key=value lines; defaults to $CLBP_CONFIG when set.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equalize an image's illumination.
    ///
    /// For hsi and ycbcr the enhanced intensity (I or Y) plane is written
    /// as a grayscale PNG; for rgb the enhanced color image is written.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Norm)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = SpaceArg::Hsi)]
        space: SpaceArg,
    },
    /// Locate the face and print its bounding box as `x y w h`.
    Detect {
        input: PathBuf,
        /// Write the cropped face as PNG.
        #[arg(long, value_name = "FILE")]
        crop: Option<PathBuf>,
        /// Write the crop-aligned skin mask as PNG.
        #[arg(long, value_name = "FILE")]
        mask: Option<PathBuf>,
    },
    /// Build a gallery from a dataset directory (one subdirectory per subject).
    Enroll {
        root: PathBuf,
        #[arg(long, value_name = "FILE")]
        gallery: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Identify one image against a gallery and print the ranking.
    Identify {
        image: PathBuf,
        #[arg(long, value_name = "FILE")]
        gallery: PathBuf,
        /// Decision rule; defaults to the configured one.
        #[arg(long, value_name = "RULE")]
        fusion: Option<FusionRule>,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Repeated random-split identification experiment.
    Evaluate {
        root: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        train_counts: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Bin counts to compare; defaults to the configured bin count.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        bin_counts: Vec<usize>,
        /// Fusion rules to report; defaults to all.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        rules: Vec<FusionRule>,
        /// Also write the results as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Dataset statistics: class discrimination, channel mutual
    /// information, or FAR/FRR curves.
    Analyze {
        root: PathBuf,
        #[arg(long, value_enum)]
        report: Report,
        /// Output prefix for the roc report's curve files.
        #[arg(long, default_value = "roc", value_name = "PREFIX")]
        out: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Svd,
    Norm,
}

impl From<MethodArg> for ZetaMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Svd => ZetaMethod::SvdRatio,
            MethodArg::Norm => ZetaMethod::NormRatio,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Hsi,
    Ycbcr,
    Rgb,
}

impl From<SpaceArg> for EnhanceSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Hsi => EnhanceSpace::Hsi,
            SpaceArg::Ycbcr => EnhanceSpace::YCbCr,
            SpaceArg::Rgb => EnhanceSpace::Rgb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Theta,
    Mi,
    Roc,
}

/// Per-command overrides of config-file settings.
#[derive(Args, Default)]
struct ConfigFlags {
    /// Comma-separated channels out of H,S,I,Y,Cb,Cr,Gray.
    #[arg(long)]
    channels: Option<String>,
    /// Region grid, ROWSxCOLS.
    #[arg(long)]
    grid: Option<String>,
    /// Histogram bins per region (2..=256).
    #[arg(long)]
    bins: Option<String>,
    /// KLD, L1, L2 or XCORR.
    #[arg(long)]
    metric: Option<String>,
    /// sum, median, mv or fvf.
    #[arg(long)]
    fusion: Option<String>,
    /// SVD_RATIO or NORM_RATIO.
    #[arg(long)]
    enhancement: Option<String>,
    /// hsi, ycbcr or rgb.
    #[arg(long)]
    space: Option<String>,
    /// One weight per region, comma-separated.
    #[arg(long)]
    region_weights: Option<String>,
    /// Seed for random splits.
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigFlags {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        let pairs = [
            ("channels", &self.channels),
            ("grid", &self.grid),
            ("bins", &self.bins),
            ("metric", &self.metric),
            ("fusion", &self.fusion),
            ("enhancement", &self.enhancement),
            ("space", &self.space),
            ("region_weights", &self.region_weights),
            ("seed", &self.seed),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)
                    .with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        cfg.validate()?;
        Ok(())
    }
}

fn base_config(path: Option<&Path>) -> Result<PipelineConfig> {
    Ok(match path {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::from_env()?,
    })
}

fn load_dataset(index: &DatasetIndex) -> Result<Vec<(String, Vec<PlanarImage>)>> {
    index
        .subjects
        .iter()
        .map(|s| {
            let images = s
                .images
                .iter()
                .map(|p| load_rgb(p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((s.id.clone(), images))
        })
        .collect()
}

fn write_lines(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Enhance {
            input,
            output,
            method,
            space,
        } => {
            let img = load_rgb(&input)?;
            let method = ZetaMethod::from(method);
            match EnhanceSpace::from(space) {
                EnhanceSpace::Rgb => {
                    save_rgb_png(&enhance_image(&img, EnhanceSpace::Rgb, method)?, &output)?;
                }
                s => {
                    let (converted, index) = match s {
                        EnhanceSpace::Hsi => (rgb_to_hsi(&img)?, 2),
                        _ => (rgb_to_ycbcr(&img)?, 0),
                    };
                    let e = enhance_plane_detailed(converted.plane(index), method)?;
                    writeln!(out, "zeta {}", e.zeta.zeta)?;
                    save_gray_png(&e.output, &output)?;
                }
            }
        }
        Command::Detect { input, crop, mask } => {
            let face = segment_face(&load_rgb(&input)?)?;
            let b = face.bbox;
            writeln!(out, "{} {} {} {}", b.x, b.y, b.w, b.h)?;
            if let Some(p) = crop {
                save_rgb_png(&face.crop, &p)?;
            }
            if let Some(p) = mask {
                save_mask_png(&face.mask, &p)?;
            }
        }
        Command::Enroll {
            root,
            gallery,
            flags,
        } => {
            let mut cfg = base_config(cli.config.as_deref())?;
            flags.apply(&mut cfg)?;
            let index = ingest(&root)?;
            let g = enroll(&index, &cfg)?;
            g.save(&gallery)?;
            writeln!(
                out,
                "enrolled {} sample(s) of {} subject(s); {} file(s) skipped",
                g.sample_count(),
                g.subjects.len(),
                index.skipped
            )?;
        }
        Command::Identify {
            image,
            gallery,
            fusion,
            top,
        } => {
            let cfg = base_config(cli.config.as_deref())?;
            let g = Gallery::load(&gallery)?;
            let rule = fusion.unwrap_or(cfg.fusion);
            let id = identify_image(&load_rgb(&image)?, &g, rule, top)?;
            for (rank, (subject, score)) in id.ranking.ranking.iter().enumerate() {
                writeln!(out, "{}\t{subject}\t{score:.6}", rank + 1)?;
            }
        }
        Command::Evaluate {
            root,
            train_counts,
            trials,
            bin_counts,
            rules,
            csv,
            flags,
        } => {
            let mut cfg = base_config(cli.config.as_deref())?;
            flags.apply(&mut cfg)?;
            let exp = ExperimentConfig {
                train_counts,
                bins: if bin_counts.is_empty() {
                    vec![cfg.bins]
                } else {
                    bin_counts
                },
                rules: if rules.is_empty() {
                    FusionRule::ALL.to_vec()
                } else {
                    rules
                },
                trials,
                seed: cfg.seed,
                pipeline: cfg,
            };
            let index = ingest(&root)?;
            let (faces, dropped) = prepare_faces(&load_dataset(&index)?, &exp.pipeline)?;
            if dropped > 0 {
                log::warn!("{dropped} image(s) without a skin region were dropped");
            }
            let report = run_identification_experiment(&faces, &exp)?;
            write!(out, "{}", report.to_table())?;
            if let Some(p) = csv {
                write_lines(&p, &report.to_csv())?;
                info!("wrote {}", p.display());
            }
        }
        Command::Analyze {
            root,
            report,
            out: prefix,
            flags,
        } => {
            let mut cfg = base_config(cli.config.as_deref())?;
            flags.apply(&mut cfg)?;
            let index = ingest(&root)?;
            match report {
                Report::Theta => {
                    let g = enroll(&index, &cfg)?;
                    writeln!(out, "channel\tavg_within\tavg_between\ttheta_c")?;
                    for &c in &g.meta.channels {
                        let d = class_discrimination(&g.channel_samples(c), cfg.metric)?;
                        writeln!(
                            out,
                            "{c}\t{:.6}\t{:.6}\t{:.4}",
                            d.avg_within, d.avg_between, d.theta_c
                        )?;
                    }
                }
                Report::Mi => {
                    // Face crops of the unenhanced images, so every channel
                    // can be derived from RGB.
                    let mut crops = Vec::new();
                    for (_, images) in load_dataset(&index)? {
                        for img in images {
                            match segment_face(&img) {
                                Ok(face) => crops.push(face.crop),
                                Err(clbp_core::Error::NoSkinRegion) => {}
                                Err(e) => return Err(e.into()),
                            }
                        }
                    }
                    let channels = [
                        Channel::H,
                        Channel::S,
                        Channel::I,
                        Channel::Y,
                        Channel::Cb,
                        Channel::Cr,
                    ];
                    let m = mean_channel_mi(&crops, &channels)?;
                    write!(out, "NMI%")?;
                    for c in channels {
                        write!(out, "\t{c}")?;
                    }
                    writeln!(out)?;
                    for a in channels {
                        write!(out, "{a}")?;
                        for b in channels {
                            write!(out, "\t{:.2}", m[&(a.min(b), a.max(b))])?;
                        }
                        writeln!(out)?;
                    }
                }
                Report::Roc => {
                    let g = enroll(&index, &cfg)?;
                    let fused = g.fused_samples()?;
                    let refs: Vec<(&str, _)> = fused.iter().map(|(s, f)| (s.as_str(), f)).collect();
                    let (genuine, impostor) = pairwise_scores(&refs, cfg.metric)?;
                    if genuine.is_empty() {
                        bail!("every subject has a single sample; no genuine pairs");
                    }
                    let curve = far_frr(&genuine, &impostor)?;
                    let column = |v: &[f64]| -> String {
                        curve
                            .thresholds
                            .iter()
                            .zip(v)
                            .map(|(t, r)| format!("{t:.10e}\t{r:.10}\n"))
                            .collect()
                    };
                    let far_path = PathBuf::from(format!("{}_far.tsv", prefix.display()));
                    let frr_path = PathBuf::from(format!("{}_frr.tsv", prefix.display()));
                    write_lines(&far_path, &column(&curve.far))?;
                    write_lines(&frr_path, &column(&curve.frr))?;
                    writeln!(
                        out,
                        "genuine {} impostor {} eer {:.6}",
                        genuine.len(),
                        impostor.len(),
                        curve.eer
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("clbp: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
