//! Seeded synthetic face-like images for tests, demos and regression runs.
//!
//! Each subject is a skin-toned oval carrying its own sinusoidal texture,
//! dark blobs and per-channel tint waves, placed on a cyan-green background.
//! Every sample of a subject gets a random gain, bias, translation and
//! per-pixel noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{ColorSpace, PlanarImage, Plane};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub subjects: usize,
    pub samples: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subjects: 10,
            samples: 8,
            width: 96,
            height: 96,
            seed: 0,
        }
    }
}

/// The fixed appearance of one subject.
#[derive(Debug, Clone)]
pub struct SubjectModel {
    skin: [f64; 3],
    radii: (f64, f64),
    waves: Vec<Wave>,
    blobs: Vec<Blob>,
    /// One multiplicative wave per RGB channel, so hue and saturation vary
    /// across the face too.
    tints: Vec<Wave>,
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amplitude: f64,
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    x: f64,
    y: f64,
    radius: f64,
    depth: f64,
}

/// Per-sample illumination and pose jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub gain: f64,
    pub bias: f64,
    pub dx: f64,
    pub dy: f64,
    pub noise: f64,
    pub noise_seed: u64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter {
        gain: 1.0,
        bias: 0.0,
        dx: 0.0,
        dy: 0.0,
        noise: 0.0,
        noise_seed: 0,
    };
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SubjectModel {
    pub fn random(seed: u64, subject: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, subject as u64, 0));
        let skin = [
            rng.random_range(175.0..195.0),
            rng.random_range(120.0..140.0),
            rng.random_range(90.0..110.0),
        ];
        let radii = (rng.random_range(28.0..32.0), rng.random_range(35.0..40.0));
        let mut wave = |periods: std::ops::Range<f64>, amplitudes: std::ops::Range<f64>| {
            let period = rng.random_range(periods);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let k = std::f64::consts::TAU / period;
            Wave {
                fx: k * angle.cos(),
                fy: k * angle.sin(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                amplitude: rng.random_range(amplitudes),
            }
        };
        let waves = (0..3).map(|_| wave(5.0..14.0, 0.05..0.12)).collect();
        let tints = (0..3).map(|_| wave(6.0..16.0, 0.06..0.12)).collect();
        let blobs = (0..4)
            .map(|_| Blob {
                x: rng.random_range(-0.6..0.6),
                y: rng.random_range(-0.6..0.6),
                radius: rng.random_range(0.12..0.25),
                depth: rng.random_range(0.2..0.35),
            })
            .collect();
        SubjectModel {
            skin,
            radii,
            waves,
            blobs,
            tints,
        }
    }

    /// Brightness multiplier of the face surface at an offset from the
    /// oval center.
    fn shade(&self, u: f64, v: f64) -> f64 {
        let mut t = 0.8;
        for w in &self.waves {
            t += w.amplitude * (w.fx * u + w.fy * v + w.phase).sin();
        }
        let (nu, nv) = (u / self.radii.0, v / self.radii.1);
        for b in &self.blobs {
            let d2 = ((nu - b.x).powi(2) + (nv - b.y).powi(2)) / (b.radius * b.radius);
            t -= b.depth * (-d2).exp();
        }
        t.clamp(0.3, 1.0)
    }

    /// Face radii are in pixels (about 30x37), so frames much below 96
    /// pixels are mostly face.
    pub fn render(&self, width: usize, height: usize, jitter: Jitter) -> PlanarImage {
        let mut rng = ChaCha8Rng::seed_from_u64(jitter.noise_seed);
        let (cx, cy) = (
            width as f64 / 2.0 + jitter.dx,
            height as f64 / 2.0 + jitter.dy,
        );
        let background = [70.0, 150.0, 140.0];
        let mut planes: Vec<Vec<f64>> =
            (0..3).map(|_| Vec::with_capacity(width * height)).collect();
        for y in 0..height {
            for x in 0..width {
                let (u, v) = (x as f64 - cx, y as f64 - cy);
                let inside = (u / self.radii.0).powi(2) + (v / self.radii.1).powi(2) <= 1.0;
                let (base, shade) = if inside {
                    (self.skin, self.shade(u, v))
                } else {
                    let ramp = 0.85 + 0.15 * (y as f64 / height as f64);
                    (background, ramp)
                };
                // Mostly luminance noise, with a smaller per-channel part.
                let mut draw = |amplitude: f64| {
                    if amplitude > 0.0 {
                        rng.random_range(-amplitude..=amplitude)
                    } else {
                        0.0
                    }
                };
                let shared = draw(jitter.noise);
                for (c, plane) in planes.iter_mut().enumerate() {
                    let tint = if inside {
                        let w = self.tints[c];
                        1.0 + w.amplitude * (w.fx * u + w.fy * v + w.phase).sin()
                    } else {
                        1.0
                    };
                    let noise = shared + draw(jitter.noise / 3.0);
                    let value = base[c] * shade * tint * jitter.gain + jitter.bias + noise;
                    plane.push(value.round().clamp(0.0, 255.0));
                }
            }
        }
        let planes = planes
            .into_iter()
            .map(|d| Plane::new(width, height, d).expect("plane size"))
            .collect();
        PlanarImage::new(ColorSpace::Rgb, planes).expect("three equal planes")
    }
}

/// Draws the jitter for sample `sample` of subject `subject`.
pub fn sample_jitter(seed: u64, subject: usize, sample: usize) -> Jitter {
    let key = mix(seed, subject as u64, sample as u64 + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    Jitter {
        gain: rng.random_range(0.6..1.2),
        bias: rng.random_range(-15.0..15.0),
        dx: rng.random_range(-3.0..3.0f64).round(),
        dy: rng.random_range(-3.0..3.0f64).round(),
        noise: 3.0,
        noise_seed: key ^ 0x5EED,
    }
}

/// A subject id with its rendered samples.
pub type SynthSubject = (String, Vec<PlanarImage>);

/// Renders the whole dataset; subject ids are `s00`, `s01`, ...
pub fn generate(cfg: &SynthConfig) -> Vec<SynthSubject> {
    (0..cfg.subjects)
        .map(|s| {
            let model = SubjectModel::random(cfg.seed, s);
            let images = (0..cfg.samples)
                .map(|k| model.render(cfg.width, cfg.height, sample_jitter(cfg.seed, s, k)))
                .collect();
            (format!("s{s:02}"), images)
        })
        .collect()
}

/// Writes the dataset as `<root>/<subject>/<nn>.png`.
pub fn write_dataset(cfg: &SynthConfig, root: &std::path::Path) -> crate::error::Result<()> {
    for (id, images) in generate(cfg) {
        let dir = root.join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| crate::error::Error::io(&dir, e))?;
        for (k, img) in images.iter().enumerate() {
            crate::dataset::save_rgb_png(img, &dir.join(format!("{k:02}.png")))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::segment_face;

    #[test]
    fn deterministic() {
        let cfg = SynthConfig {
            subjects: 2,
            samples: 2,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg), generate(&cfg));
    }

    #[test]
    fn face_is_found_near_center() {
        let model = SubjectModel::random(0, 3);
        let img = model.render(96, 96, sample_jitter(0, 3, 0));
        let face = segment_face(&img).unwrap();
        let (cx, cy) = (
            face.bbox.x as f64 + face.bbox.w as f64 / 2.0,
            face.bbox.y as f64 + face.bbox.h as f64 / 2.0,
        );
        assert!(
            (cx - 48.0).abs() <= 5.0 && (cy - 48.0).abs() <= 5.0,
            "{:?}",
            face.bbox
        );
        assert!(face.bbox.w >= 50 && face.bbox.h >= 60, "{:?}", face.bbox);
    }
}
