//! Image degradations applied to rendered samples: additive Gaussian noise,
//! Gaussian blur, JPEG round-trip, rotation and rescaling.

use std::fmt;

use image::codecs::jpeg::JpegEncoder;
use image::imageops::{self, FilterType};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::color::RgbColor;
use crate::error::{Error, Result};
use crate::render::RasterImage;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSpec {
    /// Per-channel Gaussian noise; `sigma` in 8-bit intensity units.
    Noise { sigma: f64, seed: u64 },
    /// Gaussian blur with standard deviation `radius` pixels.
    Blur { radius: f64 },
    /// Encode and decode as JPEG at `quality` (1-100).
    Jpeg { quality: u8 },
    /// Counter-clockwise rotation; the canvas grows to hold the whole image.
    Rotate { degrees: f64 },
    /// Bicubic resize of both dimensions by `factor`.
    Rescale { factor: f64 },
}

/// Noise seed used by the named presets.
pub const PRESET_NOISE_SEED: u64 = 0x5eed;

pub const PRESETS: [(&str, PerturbationSpec); 12] = [
    ("noise-10", PerturbationSpec::Noise { sigma: 10.0, seed: PRESET_NOISE_SEED }),
    ("noise-50", PerturbationSpec::Noise { sigma: 50.0, seed: PRESET_NOISE_SEED }),
    ("blur-1", PerturbationSpec::Blur { radius: 1.0 }),
    ("blur-4", PerturbationSpec::Blur { radius: 4.0 }),
    ("jpeg-75", PerturbationSpec::Jpeg { quality: 75 }),
    ("jpeg-10", PerturbationSpec::Jpeg { quality: 10 }),
    ("rot-5", PerturbationSpec::Rotate { degrees: 5.0 }),
    ("rot-45", PerturbationSpec::Rotate { degrees: 45.0 }),
    ("scale-0.25", PerturbationSpec::Rescale { factor: 0.25 }),
    ("scale-0.5", PerturbationSpec::Rescale { factor: 0.5 }),
    ("scale-1", PerturbationSpec::Rescale { factor: 1.0 }),
    ("scale-2", PerturbationSpec::Rescale { factor: 2.0 }),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Look up a named preset; unknown names get close-match suggestions.
pub fn preset(name: &str) -> Result<PerturbationSpec> {
    if let Some((_, spec)) = PRESETS.iter().find(|(n, _)| *n == name) {
        return Ok(*spec);
    }
    let mut close: Vec<(usize, &str)> = PRESETS
        .iter()
        .map(|(n, _)| (strsim::levenshtein(name, n), *n))
        .filter(|(d, _)| *d <= 3)
        .collect();
    close.sort();
    let hint = if close.is_empty() {
        String::new()
    } else {
        let names: Vec<&str> = close.iter().map(|(_, n)| *n).collect();
        format!("; did you mean {}?", names.join(" or "))
    };
    Err(Error::Perturbation(format!(
        "unknown preset {name:?}{hint} valid presets: {}",
        preset_names().join(", ")
    )))
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationSpec::Noise { sigma, seed } => write!(f, "noise(sigma={sigma}, seed={seed})"),
            PerturbationSpec::Blur { radius } => write!(f, "blur(radius={radius})"),
            PerturbationSpec::Jpeg { quality } => write!(f, "jpeg(quality={quality})"),
            PerturbationSpec::Rotate { degrees } => write!(f, "rotate(degrees={degrees})"),
            PerturbationSpec::Rescale { factor } => write!(f, "rescale(factor={factor})"),
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Perturbation(msg));
        match *self {
            PerturbationSpec::Noise { sigma, .. } if !(sigma.is_finite() && sigma >= 0.0) => {
                bad(format!("noise sigma must be finite and non-negative, got {sigma}"))
            }
            PerturbationSpec::Blur { radius } if !(radius.is_finite() && radius >= 0.0) => {
                bad(format!("blur radius must be finite and non-negative, got {radius}"))
            }
            PerturbationSpec::Jpeg { quality } if !(1..=100).contains(&quality) => {
                bad(format!("jpeg quality must be in 1..=100, got {quality}"))
            }
            PerturbationSpec::Rotate { degrees } if !degrees.is_finite() => {
                bad(format!("rotation must be finite, got {degrees}"))
            }
            PerturbationSpec::Rescale { factor } if !(factor.is_finite() && factor > 0.0) => {
                bad(format!("rescale factor must be positive, got {factor}"))
            }
            _ => Ok(()),
        }
    }

    /// Apply to one image. `background` fills area uncovered by rotation;
    /// `sample_index` selects the noise stream so samples get independent noise.
    pub fn apply(&self, image: &RasterImage, background: RgbColor, sample_index: u64) -> Result<RasterImage> {
        self.validate()?;
        match *self {
            PerturbationSpec::Noise { sigma, seed } => Ok(add_noise(image, sigma, seed, sample_index)),
            PerturbationSpec::Blur { radius } => Ok(gaussian_blur(image, radius)),
            PerturbationSpec::Jpeg { quality } => jpeg_round_trip(image, quality),
            PerturbationSpec::Rotate { degrees } => Ok(rotate(image, degrees, background)),
            PerturbationSpec::Rescale { factor } => Ok(rescale(image, factor)),
        }
    }
}

fn add_noise(image: &RasterImage, sigma: f64, seed: u64, sample_index: u64) -> RasterImage {
    if sigma == 0.0 {
        return image.clone();
    }
    let mut rng = SeededRng::derive(seed, sample_index, "noise");
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let pixels = image
        .pixels
        .iter()
        .map(|&v| (v as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage {
        width: image.width,
        height: image.height,
        pixels,
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-half..=half)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / sum).collect()
}

/// Separable Gaussian blur with clamped edges.
pub fn gaussian_blur(image: &RasterImage, sigma: f64) -> RasterImage {
    if sigma == 0.0 {
        return image.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let half = (kernel.len() / 2) as i64;
    let (w, h) = (image.width as i64, image.height as i64);
    let src: Vec<f64> = image.pixels.iter().map(|&v| v as f64).collect();
    let pass = |input: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for (k, weight) in kernel.iter().enumerate() {
                        let off = k as i64 - half;
                        let (sx, sy) = if horizontal {
                            ((x + off).clamp(0, w - 1), y)
                        } else {
                            (x, (y + off).clamp(0, h - 1))
                        };
                        acc += weight * input[((sy * w + sx) * 3 + c) as usize];
                    }
                    out[((y * w + x) * 3 + c) as usize] = acc;
                }
            }
        }
        out
    };
    let blurred = pass(&pass(&src, true), false);
    RasterImage {
        width: image.width,
        height: image.height,
        pixels: blurred.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect(),
    }
}

fn jpeg_round_trip(image: &RasterImage, quality: u8) -> Result<RasterImage> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode_image(&image.to_rgb_image())
        .map_err(|e| Error::Codec(e.to_string()))?;
    let decoded = image::load_from_memory_with_format(&buf, image::ImageFormat::Jpeg)
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(RasterImage::from_rgb_image(decoded.to_rgb8()))
}

/// Bounding size of a `w`x`h` rectangle rotated by `degrees`.
pub fn rotated_dimensions(w: u32, h: u32, degrees: f64) -> (u32, u32) {
    let t = degrees.to_radians();
    let (s, c) = (t.sin().abs(), t.cos().abs());
    let fit = |v: f64| ((v - 1e-6).ceil() as u32).max(1);
    (fit(w as f64 * c + h as f64 * s), fit(w as f64 * s + h as f64 * c))
}

fn rotate(image: &RasterImage, degrees: f64, background: RgbColor) -> RasterImage {
    let (nw, nh) = rotated_dimensions(image.width, image.height, degrees);
    let mut out = RasterImage::filled(nw, nh, background);
    let t = degrees.to_radians();
    let (s, c) = (t.sin(), t.cos());
    let (cx, cy) = (image.width as f64 / 2.0, image.height as f64 / 2.0);
    let (ncx, ncy) = (nw as f64 / 2.0, nh as f64 / 2.0);
    let bg = background.channels().map(|v| v as f64);
    let (w, h) = (image.width as i64, image.height as i64);
    let fetch = |x: i64, y: i64| -> [f64; 3] {
        if x < 0 || y < 0 || x >= w || y >= h {
            bg
        } else {
            image.pixel(x as u32, y as u32).channels().map(|v| v as f64)
        }
    };
    for oy in 0..nh {
        for ox in 0..nw {
            // Inverse map of the output pixel centre; y points down, so a
            // counter-clockwise turn on screen uses the transposed matrix.
            let dx = ox as f64 + 0.5 - ncx;
            let dy = oy as f64 + 0.5 - ncy;
            let sx = c * dx - s * dy + cx - 0.5;
            let sy = s * dx + c * dy + cy - 0.5;
            if sx <= -1.0 || sy <= -1.0 || sx >= w as f64 || sy >= h as f64 {
                continue;
            }
            let (x0, y0) = (sx.floor() as i64, sy.floor() as i64);
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let p00 = fetch(x0, y0);
            let p10 = fetch(x0 + 1, y0);
            let p01 = fetch(x0, y0 + 1);
            let p11 = fetch(x0 + 1, y0 + 1);
            let mut px = [0u8; 3];
            for k in 0..3 {
                let top = p00[k] * (1.0 - fx) + p10[k] * fx;
                let bottom = p01[k] * (1.0 - fx) + p11[k] * fx;
                px[k] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.set_pixel(ox, oy, RgbColor::from(px));
        }
    }
    out
}

/// Output dimension for `factor`, rounding half up, at least 1.
pub fn scaled_dimension(size: u32, factor: f64) -> u32 {
    ((size as f64 * factor + 0.5).floor() as u32).max(1)
}

fn rescale(image: &RasterImage, factor: f64) -> RasterImage {
    let (nw, nh) = (scaled_dimension(image.width, factor), scaled_dimension(image.height, factor));
    if (nw, nh) == (image.width, image.height) {
        return image.clone();
    }
    RasterImage::from_rgb_image(imageops::resize(&image.to_rgb_image(), nw, nh, FilterType::CatmullRom))
}
