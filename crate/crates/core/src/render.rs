//! Text rasterization.
//!
//! Text is shaped with rustybuzz, outlines are transformed into pixel space
//! (with an optional 12° shear for faux italic) and accumulated into a single
//! coverage canvas. The canvas is cropped to the ink bounding box, padded, and
//! composited over the background. Everything is integer- or
//! fixed-order-float arithmetic, so output is byte-identical across runs.

use ab_glyph_rasterizer::{point, Point, Rasterizer};
use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageEncoder, RgbImage};
use rustybuzz::ttf_parser::{GlyphId, OutlineBuilder};
use serde::{Deserialize, Serialize};

use crate::color::{contrast_ratio, RgbColor, MIN_CONTRAST};
use crate::error::{Error, Result};
use crate::registry::{FontFace, FontRegistry, FontStyle, ResolvedFace};

pub const DEFAULT_DPI: u32 = 96;
pub const DEFAULT_PADDING_PX: u32 = 20;

/// Point sizes offered by the benchmark, ascending.
pub const SIZES_PT: [u32; 8] = [12, 16, 20, 24, 32, 40, 48, 64];

/// Fraction of visible characters the face must cover.
pub const MIN_GLYPH_COVERAGE: f64 = 0.9;

const FAUX_ITALIC_DEGREES: f32 = 12.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub text: String,
    pub font_id: String,
    pub size_pt: u32,
    pub style: FontStyle,
    pub color: RgbColor,
    pub background: RgbColor,
    pub dpi: u32,
    pub padding_px: u32,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if !SIZES_PT.contains(&self.size_pt) {
            return Err(Error::invalid("size_pt", self.size_pt));
        }
        let ratio = contrast_ratio(self.color, self.background);
        if ratio < MIN_CONTRAST {
            return Err(Error::invalid(
                "color/background pair",
                format!("{} on {} has contrast {ratio:.2}", self.color, self.background),
            ));
        }
        if self.dpi == 0 {
            return Err(Error::invalid("dpi", 0));
        }
        Ok(())
    }

    pub fn px_per_em(&self) -> f32 {
        pt_to_px(self.size_pt, self.dpi)
    }
}

pub fn pt_to_px(size_pt: u32, dpi: u32) -> f32 {
    size_pt as f32 * dpi as f32 / 72.0
}

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RasterImage({}x{})", self.width, self.height)
    }
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: RgbColor) -> Self {
        let pixels = color
            .channels()
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> RgbColor {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        RgbColor::new(self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, c: RgbColor) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c.channels());
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone()).expect("buffer size")
    }

    pub fn from_rgb_image(img: RgbImage) -> Self {
        let (width, height) = img.dimensions();
        RasterImage {
            width,
            height,
            pixels: img.into_raw(),
        }
    }
}

/// Tight ink box of a text line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextBox {
    pub width_px: u32,
    pub height_px: u32,
    /// Distance from the top of the box down to the baseline.
    pub baseline_px: i32,
}

/// Anti-aliased coverage, cropped to ink.
struct Coverage {
    width: u32,
    height: u32,
    alpha: Vec<u8>,
    baseline_y: i32,
}

#[derive(Default)]
struct PathCollector {
    segments: Vec<Segment>,
    start: Point,
    last: Point,
    transform: Transform,
}

#[derive(Default, Clone, Copy)]
struct Transform {
    scale: f32,
    shear: f32,
    dx: f32,
    dy: f32,
}

impl Transform {
    fn apply(&self, x: f32, y: f32) -> Point {
        let sx = (x + self.dx) * self.scale;
        let sy = (y + self.dy) * self.scale;
        point(sx + self.shear * sy, -sy)
    }
}

enum Segment {
    Line(Point, Point),
    Quad(Point, Point, Point),
    Cubic(Point, Point, Point, Point),
}

impl OutlineBuilder for PathCollector {
    fn move_to(&mut self, x: f32, y: f32) {
        let p = self.transform.apply(x, y);
        self.start = p;
        self.last = p;
    }

    fn line_to(&mut self, x: f32, y: f32) {
        let p = self.transform.apply(x, y);
        self.segments.push(Segment::Line(self.last, p));
        self.last = p;
    }

    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        let c = self.transform.apply(x1, y1);
        let p = self.transform.apply(x, y);
        self.segments.push(Segment::Quad(self.last, c, p));
        self.last = p;
    }

    fn curve_to(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x: f32, y: f32) {
        let c1 = self.transform.apply(x1, y1);
        let c2 = self.transform.apply(x2, y2);
        let p = self.transform.apply(x, y);
        self.segments.push(Segment::Cubic(self.last, c1, c2, p));
        self.last = p;
    }

    fn close(&mut self) {
        if self.last != self.start {
            self.segments.push(Segment::Line(self.last, self.start));
        }
        self.last = self.start;
    }
}

fn is_invisible(c: char) -> bool {
    c.is_whitespace() || c.is_control() || matches!(c, '\u{200B}'..='\u{200F}' | '\u{2060}' | '\u{FEFF}')
}

fn face_label(face: &FontFace) -> String {
    face.path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn check_coverage(face: &FontFace, parsed: &rustybuzz::Face<'_>, text: &str) -> Result<()> {
    let visible: Vec<char> = text.chars().filter(|c| !is_invisible(*c)).collect();
    if visible.is_empty() {
        return Err(Error::Render("text has no visible characters".into()));
    }
    let mut missing: Vec<char> = visible
        .iter()
        .copied()
        .filter(|c| parsed.glyph_index(*c).is_none())
        .collect();
    let coverage = 1.0 - missing.len() as f64 / visible.len() as f64;
    if coverage < MIN_GLYPH_COVERAGE {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::GlyphCoverage {
            font: face_label(face),
            missing,
            coverage: coverage * 100.0,
        });
    }
    Ok(())
}

fn rasterize_line(face: &FontFace, text: &str, px_per_em: f32, faux_bold: bool, faux_italic: bool) -> Result<Coverage> {
    let parsed = rustybuzz::Face::from_slice(face.data(), 0)
        .ok_or_else(|| Error::Render(format!("cannot parse {}", face_label(face))))?;
    check_coverage(face, &parsed, text)?;

    let mut buffer = rustybuzz::UnicodeBuffer::new();
    buffer.push_str(text);
    buffer.guess_segment_properties();
    let shaped = rustybuzz::shape(&parsed, &[], buffer);

    let scale = px_per_em / face.units_per_em as f32;
    let shear = if faux_italic {
        FAUX_ITALIC_DEGREES.to_radians().tan()
    } else {
        0.0
    };
    let mut collector = PathCollector::default();
    let mut pen_x = 0i64;
    let mut pen_y = 0i64;
    for (info, pos) in shaped.glyph_infos().iter().zip(shaped.glyph_positions()) {
        let cluster_char = text
            .get(info.cluster as usize..)
            .and_then(|rest| rest.chars().next());
        let skip = cluster_char.is_some_and(is_invisible);
        if !skip {
            collector.transform = Transform {
                scale,
                shear,
                dx: (pen_x + pos.x_offset as i64) as f32,
                dy: (pen_y + pos.y_offset as i64) as f32,
            };
            parsed.outline_glyph(GlyphId(info.glyph_id as u16), &mut collector);
        }
        pen_x += pos.x_advance as i64;
        pen_y += pos.y_advance as i64;
    }

    if collector.segments.is_empty() {
        return Err(Error::Render("text produced no outlines".into()));
    }
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f32::MAX, f32::MAX, f32::MIN, f32::MIN);
    let mut extend = |p: &Point| {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    };
    for seg in &collector.segments {
        match seg {
            Segment::Line(a, b) => [a, b].into_iter().for_each(&mut extend),
            Segment::Quad(a, b, c) => [a, b, c].into_iter().for_each(&mut extend),
            Segment::Cubic(a, b, c, d) => [a, b, c, d].into_iter().for_each(&mut extend),
        }
    }

    let margin = 2.0;
    let origin_x = margin - min_x.floor();
    let origin_y = margin - min_y.floor();
    let width = (max_x.ceil() - min_x.floor() + 2.0 * margin) as usize;
    let height = (max_y.ceil() - min_y.floor() + 2.0 * margin) as usize;
    let shift = |p: &Point| point(p.x + origin_x, p.y + origin_y);

    let mut raster = Rasterizer::new(width, height);
    for seg in &collector.segments {
        match seg {
            Segment::Line(a, b) => raster.draw_line(shift(a), shift(b)),
            Segment::Quad(a, b, c) => raster.draw_quad(shift(a), shift(b), shift(c)),
            Segment::Cubic(a, b, c, d) => raster.draw_cubic(shift(a), shift(b), shift(c), shift(d)),
        }
    }
    let mut alpha = vec![0u8; width * height];
    raster.for_each_pixel(|i, v| alpha[i] = (v.min(1.0) * 255.0).round() as u8);

    if faux_bold {
        alpha = dilate(&alpha, width, height);
    }

    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
    for y in 0..height {
        for x in 0..width {
            if alpha[y * width + x] > 0 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == usize::MAX {
        return Err(Error::Render("text produced no ink".into()));
    }
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut cropped = Vec::with_capacity(cw * ch);
    for y in y0..=y1 {
        cropped.extend_from_slice(&alpha[y * width + x0..=y * width + x1]);
    }
    Ok(Coverage {
        width: cw as u32,
        height: ch as u32,
        alpha: cropped,
        baseline_y: origin_y as i32 - y0 as i32,
    })
}

/// 3x3 max filter: grows the coverage mask by one pixel on every side.
fn dilate(alpha: &[u8], width: usize, height: usize) -> Vec<u8> {
    let mut out = vec![0u8; alpha.len()];
    for y in 0..height {
        for x in 0..width {
            let mut m = 0u8;
            for yy in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    m = m.max(alpha[yy * width + xx]);
                }
            }
            out[y * width + x] = m;
        }
    }
    out
}

/// Ink box of `text` set in `face` at `size_pt`.
pub fn measure_text(face: &FontFace, text: &str, size_pt: u32, dpi: u32) -> Result<TextBox> {
    let cov = rasterize_line(face, text, pt_to_px(size_pt, dpi), false, false)?;
    Ok(TextBox {
        width_px: cov.width,
        height_px: cov.height,
        baseline_px: cov.baseline_y,
    })
}

/// Render with an already-resolved face.
pub fn render_with_face(spec: &RenderSpec, resolved: ResolvedFace<'_>) -> Result<RasterImage> {
    let cov = rasterize_line(
        resolved.face,
        &spec.text,
        spec.px_per_em(),
        resolved.faux_bold,
        resolved.faux_italic,
    )?;
    let pad = spec.padding_px;
    let mut img = RasterImage::filled(cov.width + 2 * pad, cov.height + 2 * pad, spec.background);
    let fg = spec.color.channels().map(u32::from);
    let bg = spec.background.channels().map(u32::from);
    for y in 0..cov.height {
        for x in 0..cov.width {
            let a = u32::from(cov.alpha[(y * cov.width + x) as usize]);
            if a == 0 {
                continue;
            }
            let mix = |i: usize| ((bg[i] * (255 - a) + fg[i] * a + 127) / 255) as u8;
            img.set_pixel(x + pad, y + pad, RgbColor::new(mix(0), mix(1), mix(2)));
        }
    }
    Ok(img)
}

pub fn render_sample(spec: &RenderSpec, registry: &FontRegistry) -> Result<RasterImage> {
    spec.validate()?;
    let entry = registry
        .get(&spec.font_id)
        .ok_or_else(|| Error::Render(format!("unknown font `{}`", spec.font_id)))?;
    let resolved = registry.resolve_face(entry, spec.style)?;
    render_with_face(spec, resolved)
}

/// PNG with pinned encoder settings: 8-bit RGB, no interlace, default
/// deflate level, adaptive filtering.
pub fn encode_png(image: &RasterImage) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(&image.pixels, image.width, image.height, image::ExtendedColorType::Rgb8)
        .expect("in-memory PNG encoding");
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(RasterImage::from_rgb_image(img.to_rgb8()))
}

/// Decode any supported image format to RGB.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Codec(e.to_string()))?;
    Ok(RasterImage::from_rgb_image(img.to_rgb8()))
}
