//! Colors, the text palette, and WCAG contrast.

use std::fmt;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Minimum text/background contrast ratio for every rendered sample.
pub const MIN_CONTRAST: f64 = 4.5;

/// 8-bit sRGB color. Serialized as `[r, g, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub const WHITE: RgbColor = RgbColor::new(255, 255, 255);
    pub const BLACK: RgbColor = RgbColor::new(0, 0, 0);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        RgbColor { r, g, b }
    }

    /// Checked construction from wider integers; rejects channels outside `[0, 255]`.
    pub fn from_ints(r: i64, g: i64, b: i64) -> Result<Self> {
        let ch = |v: i64| u8::try_from(v).map_err(|_| Error::invalid("color channel", v));
        Ok(RgbColor::new(ch(r)?, ch(g)?, ch(b)?))
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub fn distance(self, other: RgbColor) -> f64 {
        let [a0, a1, a2] = self.channels().map(f64::from);
        let [b0, b1, b2] = other.channels().map(f64::from);
        ((a0 - b0).powi(2) + (a1 - b1).powi(2) + (a2 - b2).powi(2)).sqrt()
    }

    pub fn hex(self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

impl From<[u8; 3]> for RgbColor {
    fn from([r, g, b]: [u8; 3]) -> Self {
        RgbColor::new(r, g, b)
    }
}

impl From<RgbColor> for [u8; 3] {
    fn from(c: RgbColor) -> Self {
        c.channels()
    }
}

impl fmt::Display for RgbColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.r, self.g, self.b)
    }
}

fn linearize(channel: u8) -> f64 {
    let c = f64::from(channel) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// WCAG 2.x relative luminance of an sRGB color.
pub fn relative_luminance(c: RgbColor) -> f64 {
    0.2126 * linearize(c.r) + 0.7152 * linearize(c.g) + 0.0722 * linearize(c.b)
}

/// WCAG contrast ratio, symmetric, in `[1, 21]`.
pub fn contrast_ratio(a: RgbColor, b: RgbColor) -> f64 {
    let (la, lb) = (relative_luminance(a), relative_luminance(b));
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    (hi + 0.05) / (lo + 0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaletteColor {
    pub name: &'static str,
    pub rgb: RgbColor,
}

/// The eight text colors.
pub const PALETTE: [PaletteColor; 8] = [
    PaletteColor { name: "Black", rgb: RgbColor::new(0, 0, 0) },
    PaletteColor { name: "Red", rgb: RgbColor::new(220, 50, 50) },
    PaletteColor { name: "Blue", rgb: RgbColor::new(50, 50, 220) },
    PaletteColor { name: "Green", rgb: RgbColor::new(50, 150, 50) },
    PaletteColor { name: "Gray", rgb: RgbColor::new(128, 128, 128) },
    PaletteColor { name: "Orange", rgb: RgbColor::new(230, 130, 30) },
    PaletteColor { name: "Purple", rgb: RgbColor::new(150, 50, 180) },
    PaletteColor { name: "Brown", rgb: RgbColor::new(140, 90, 40) },
];

pub fn palette_by_name(name: &str) -> Option<&'static PaletteColor> {
    PALETTE.iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

pub fn palette_by_rgb(rgb: RgbColor) -> Option<&'static PaletteColor> {
    PALETTE.iter().find(|p| p.rgb == rgb)
}

/// Nearest palette entry by Euclidean RGB distance (first wins on ties).
pub fn nearest_palette(rgb: [f64; 3]) -> &'static PaletteColor {
    let dist = |p: &PaletteColor| {
        let c = p.rgb.channels().map(f64::from);
        (0..3).map(|i| (c[i] - rgb[i]).powi(2)).sum::<f64>()
    };
    PALETTE
        .iter()
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
        .expect("palette is non-empty")
}

/// Achromatic background candidates, light to dark.
pub const BACKGROUND_POOL: [RgbColor; 12] = [
    RgbColor::new(255, 255, 255),
    RgbColor::new(250, 250, 246),
    RgbColor::new(245, 245, 245),
    RgbColor::new(238, 238, 232),
    RgbColor::new(230, 230, 230),
    RgbColor::new(220, 220, 220),
    RgbColor::new(210, 210, 210),
    RgbColor::new(60, 60, 60),
    RgbColor::new(45, 45, 45),
    RgbColor::new(32, 32, 32),
    RgbColor::new(16, 16, 16),
    RgbColor::new(0, 0, 0),
];

/// Backgrounds from the pool that meet [`MIN_CONTRAST`] against `text`.
pub fn valid_backgrounds(text: RgbColor) -> Vec<RgbColor> {
    BACKGROUND_POOL
        .iter()
        .copied()
        .filter(|bg| contrast_ratio(text, *bg) >= MIN_CONTRAST)
        .collect()
}

/// Uniform draw over the valid backgrounds for `text`.
pub fn select_background(text: RgbColor, rng: &mut SeededRng) -> Result<RgbColor> {
    valid_backgrounds(text)
        .choose(rng)
        .copied()
        .ok_or_else(|| Error::invalid("text color (no background reaches 4.5:1)", text))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: WCAG 2.0 text (0.03928 knee, 8-bit lookup).
    fn oracle_ratio(a: [u8; 3], b: [u8; 3]) -> f64 {
        let lum = |c: [u8; 3]| {
            let lin: Vec<f64> = c
                .iter()
                .map(|&v| {
                    let s = v as f64 / 255.0;
                    if s <= 0.03928 {
                        s / 12.92
                    } else {
                        ((s + 0.055) / 1.055).powf(2.4)
                    }
                })
                .collect();
            0.2126 * lin[0] + 0.7152 * lin[1] + 0.0722 * lin[2]
        };
        let (x, y) = (lum(a), lum(b));
        (x.max(y) + 0.05) / (x.min(y) + 0.05)
    }

    #[test]
    fn contrast_endpoints() {
        assert!((contrast_ratio(RgbColor::BLACK, RgbColor::WHITE) - 21.0).abs() < 1e-9);
        for p in PALETTE {
            assert!((contrast_ratio(p.rgb, p.rgb) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_on_white_fails_threshold() {
        let gray = RgbColor::new(128, 128, 128);
        let ratio = contrast_ratio(gray, RgbColor::WHITE);
        // frozen from the oracle above: 3.9494
        assert!((ratio - 3.9494).abs() < 1e-3, "{ratio}");
        assert!((ratio - oracle_ratio([128; 3], [255; 3])).abs() < 1e-3);
        assert!(ratio < MIN_CONTRAST);
    }

    #[test]
    fn matches_oracle_over_palette_and_pool() {
        for p in PALETTE {
            for bg in BACKGROUND_POOL {
                let ours = contrast_ratio(p.rgb, bg);
                let theirs = oracle_ratio(p.rgb.channels(), bg.channels());
                assert!((ours - theirs).abs() < 1e-3, "{} on {bg}", p.name);
                assert!((ours - contrast_ratio(bg, p.rgb)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn every_palette_color_has_a_valid_background() {
        for p in PALETTE {
            let valid = valid_backgrounds(p.rgb);
            assert!(!valid.is_empty(), "{}", p.name);
            for bg in valid {
                assert!(oracle_ratio(p.rgb.channels(), bg.channels()) >= MIN_CONTRAST);
            }
        }
        let gray = RgbColor::new(128, 128, 128);
        assert!(valid_backgrounds(gray).iter().all(|bg| bg.r < 100));
    }

    #[test]
    fn select_background_is_deterministic_and_valid() {
        for p in PALETTE {
            let a = select_background(p.rgb, &mut SeededRng::new(9)).unwrap();
            let b = select_background(p.rgb, &mut SeededRng::new(9)).unwrap();
            assert_eq!(a, b);
            assert!(contrast_ratio(p.rgb, a) >= MIN_CONTRAST);
        }
        let bg = select_background(RgbColor::BLACK, &mut SeededRng::new(1)).unwrap();
        assert!(relative_luminance(bg) > 0.5);
    }

    #[test]
    fn channel_range_enforced() {
        assert!(RgbColor::from_ints(0, 255, 10).is_ok());
        assert!(RgbColor::from_ints(256, 0, 0).is_err());
        assert!(RgbColor::from_ints(0, -1, 0).is_err());
    }

    #[test]
    fn serializes_as_array() {
        let s = serde_json::to_string(&RgbColor::new(220, 50, 50)).unwrap();
        assert_eq!(s, "[220,50,50]");
    }
}
