//! Pixel-level reference responder. Color is read from ink statistics;
//! size, style and family are recovered by re-rendering candidate answers
//! and picking the closest match. Informed mode sees the sample metadata with
//! the queried property removed; blind mode sees only the image.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::color::{nearest_palette, PaletteColor, RgbColor};
use crate::error::{Error, Result};
use crate::generator::Sample;
use crate::mcq::{parse_size_label, Property, Question};
use crate::prompt::option_letter;
use crate::registry::{FontRegistry, FontStyle};
use crate::render::{render_sample, RasterImage, RenderSpec, DEFAULT_DPI, DEFAULT_PADDING_PX};
use crate::rng::SeededRng;
use crate::runlog::{RunHeader, RunLog, RunRecord, TransportStatus};

/// RGB distance from the background above which a pixel counts as ink.
pub const INK_THRESHOLD: f64 = 32.0;

/// Point size used for the size estimator's reference render.
pub const REFERENCE_SIZE_PT: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    /// Exclusive.
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone)]
pub struct InkMask {
    pub width: u32,
    pub height: u32,
    pub mask: Vec<bool>,
    pub ink_fraction: f64,
}

impl InkMask {
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[(y * self.width + x) as usize]
    }

    pub fn bbox(&self) -> BBox {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        BBox { x0, y0, x1, y1 }
    }

    /// Pixels whose whole 3x3 neighbourhood is ink.
    pub fn eroded(&self) -> InkMask {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut mask = vec![false; self.mask.len()];
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let all = (-1..=1).all(|dy| (-1..=1).all(|dx| self.mask[((y + dy) * w + x + dx) as usize]));
                mask[(y * w + x) as usize] = all;
            }
        }
        let count = mask.iter().filter(|m| **m).count();
        InkMask {
            width: self.width,
            height: self.height,
            ink_fraction: count as f64 / mask.len().max(1) as f64,
            mask,
        }
    }
}

fn distance_f(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn channels_f(c: RgbColor) -> [f64; 3] {
    c.channels().map(|v| v as f64)
}

pub fn extract_ink_mask(image: &RasterImage, background: RgbColor) -> Result<InkMask> {
    let bg = channels_f(background);
    let mask: Vec<bool> = image
        .pixels
        .chunks_exact(3)
        .map(|p| distance_f([p[0] as f64, p[1] as f64, p[2] as f64], bg) > INK_THRESHOLD)
        .collect();
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Err(Error::Oracle("image contains no ink".into()));
    }
    Ok(InkMask {
        width: image.width,
        height: image.height,
        ink_fraction: count as f64 / mask.len() as f64,
        mask,
    })
}

/// Per-channel median of the outermost pixel ring.
pub fn estimate_background(image: &RasterImage) -> RgbColor {
    let (w, h) = (image.width, image.height);
    let mut border = Vec::new();
    for x in 0..w {
        border.push(image.pixel(x, 0));
        border.push(image.pixel(x, h - 1));
    }
    for y in 0..h {
        border.push(image.pixel(0, y));
        border.push(image.pixel(w - 1, y));
    }
    let median = |k: usize| {
        let mut v: Vec<u8> = border.iter().map(|c| c.channels()[k]).collect();
        v.sort_unstable();
        v[v.len() / 2]
    };
    RgbColor::new(median(0), median(1), median(2))
}

/// Mean color of the strongest interior ink pixels, snapped to the palette.
pub fn classify_color(image: &RasterImage, background: RgbColor) -> Result<&'static PaletteColor> {
    let mask = extract_ink_mask(image, background)?;
    let eroded = mask.eroded();
    let source = if eroded.ink_fraction > 0.0 { &eroded } else { &mask };
    let bg = channels_f(background);
    let mut pixels: Vec<(f64, [f64; 3])> = source
        .mask
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| {
            let p = &image.pixels[i * 3..i * 3 + 3];
            let c = [p[0] as f64, p[1] as f64, p[2] as f64];
            (distance_f(c, bg), c)
        })
        .collect();
    // Anti-aliased and compression-smeared pixels sit between ink and
    // background; keep the half furthest from the background.
    pixels.sort_by(|a, b| b.0.total_cmp(&a.0));
    let keep = pixels.len().div_ceil(2);
    let mut sum = [0.0; 3];
    for (_, c) in &pixels[..keep] {
        for k in 0..3 {
            sum[k] += c[k];
        }
    }
    Ok(nearest_palette(sum.map(|s| s / keep as f64)))
}

/// Ink intensity in [0, 1] per pixel, cropped to the ink bounding box.
struct InkPatch {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

fn ink_patch(image: &RasterImage, background: RgbColor, ink: RgbColor) -> Result<InkPatch> {
    let bbox = extract_ink_mask(image, background)?.bbox();
    let bg = channels_f(background);
    let full = distance_f(channels_f(ink), bg).max(1.0);
    let mut values = Vec::with_capacity((bbox.width() * bbox.height()) as usize);
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            let d = distance_f(channels_f(image.pixel(x, y)), bg);
            values.push((d / full).min(1.0) as f32);
        }
    }
    Ok(InkPatch {
        width: bbox.width(),
        height: bbox.height(),
        values,
    })
}

/// Mean absolute intensity difference after aligning the ink boxes at their
/// top-left corners; area covered by only one patch counts as full mismatch
/// of that patch's ink.
fn patch_distance(a: &InkPatch, b: &InkPatch) -> f64 {
    let w = a.width.max(b.width);
    let h = a.height.max(b.height);
    let at = |p: &InkPatch, x: u32, y: u32| {
        if x < p.width && y < p.height {
            p.values[(y * p.width + x) as usize]
        } else {
            0.0
        }
    };
    let mut total = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            total += (at(a, x, y) - at(b, x, y)).abs() as f64;
        }
    }
    total / (w as f64 * h as f64)
}

/// Sample metadata with the queried property's fields removed.
#[derive(Debug, Clone, PartialEq)]
pub struct RedactedMeta {
    pub text: String,
    pub background: RgbColor,
    pub font_id: Option<String>,
    pub size_pt: Option<u32>,
    pub style: Option<FontStyle>,
    pub color: Option<RgbColor>,
}

impl RedactedMeta {
    pub fn new(sample: &Sample, queried: Property) -> Self {
        RedactedMeta {
            text: sample.text.clone(),
            background: sample.background_rgb,
            font_id: (queried != Property::Family).then(|| sample.font_id.clone()),
            size_pt: (queried != Property::Size).then_some(sample.size_pt),
            style: (queried != Property::Style).then_some(sample.style),
            color: (queried != Property::Color).then_some(sample.color_rgb),
        }
    }

    fn need<T: Clone>(v: &Option<T>, what: &str) -> Result<T> {
        v.clone().ok_or_else(|| Error::Oracle(format!("{what} is the queried property")))
    }

    fn spec(&self, font_id: String, size_pt: u32, style: FontStyle, color: RgbColor) -> RenderSpec {
        RenderSpec {
            text: self.text.clone(),
            font_id,
            size_pt,
            style,
            color,
            background: self.background,
            dpi: DEFAULT_DPI,
            padding_px: DEFAULT_PADDING_PX,
        }
    }
}

/// Ink color used for hypothesis renders when the true color is hidden.
fn hypothesis_color(image: &RasterImage, meta: &RedactedMeta) -> Result<RgbColor> {
    match meta.color {
        Some(c) => Ok(c),
        None => Ok(classify_color(image, meta.background)?.rgb),
    }
}

/// Estimate the point size from the ink-box ratio against a reference
/// render, then return the index of the nearest offered size.
pub fn estimate_size(image: &RasterImage, meta: &RedactedMeta, options_pt: &[u32], registry: &FontRegistry) -> Result<usize> {
    if options_pt.is_empty() {
        return Err(Error::Oracle("no size options".into()));
    }
    let font_id = RedactedMeta::need(&meta.font_id, "family")?;
    let style = RedactedMeta::need(&meta.style, "style")?;
    let color = hypothesis_color(image, meta)?;
    let reference = render_sample(&meta.spec(font_id, REFERENCE_SIZE_PT, style, color), registry)?;
    let observed = extract_ink_mask(image, meta.background)?.bbox();
    let expected = extract_ink_mask(&reference, meta.background)?.bbox();
    let rw = observed.width() as f64 / expected.width() as f64;
    let rh = observed.height() as f64 / expected.height() as f64;
    let estimate = REFERENCE_SIZE_PT as f64 * (rw * rh).sqrt();
    Ok(nearest_index(options_pt, |pt| (pt as f64 - estimate).abs()))
}

fn nearest_index<T: Copy>(items: &[T], cost: impl Fn(T) -> f64) -> usize {
    items
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, cost(t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("non-empty")
}

fn best_hypothesis(image: &RasterImage, meta: &RedactedMeta, specs: Vec<RenderSpec>, registry: &FontRegistry) -> Result<(usize, Vec<f64>)> {
    let observed = ink_patch(image, meta.background, specs[0].color)?;
    let distances = specs
        .iter()
        .map(|spec| {
            let rendered = render_sample(spec, registry)?;
            Ok(patch_distance(&observed, &ink_patch(&rendered, spec.background, spec.color)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((nearest_index(&distances, |d| d), distances))
}

/// Index of the candidate style whose re-render best matches the image.
pub fn classify_style(image: &RasterImage, meta: &RedactedMeta, candidates: &[FontStyle], registry: &FontRegistry) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Oracle("no style candidates".into()));
    }
    let font_id = RedactedMeta::need(&meta.font_id, "family")?;
    let size = RedactedMeta::need(&meta.size_pt, "size")?;
    let color = hypothesis_color(image, meta)?;
    let specs = candidates.iter().map(|&s| meta.spec(font_id.clone(), size, s, color)).collect();
    Ok(best_hypothesis(image, meta, specs, registry)?.0)
}

/// Index of the candidate font (by id) whose re-render best matches the image.
pub fn classify_family(image: &RasterImage, meta: &RedactedMeta, candidates: &[String], registry: &FontRegistry) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Oracle("no family candidates".into()));
    }
    let size = RedactedMeta::need(&meta.size_pt, "size")?;
    let style = RedactedMeta::need(&meta.style, "style")?;
    let color = hypothesis_color(image, meta)?;
    let specs = candidates.iter().map(|id| meta.spec(id.clone(), size, style, color)).collect();
    Ok(best_hypothesis(image, meta, specs, registry)?.0)
}

/// What a responder may look at for one question.
pub struct QuestionContext<'a> {
    pub index: usize,
    pub question: &'a Question,
    pub sample: &'a Sample,
    pub image: &'a RasterImage,
    pub registry: &'a FontRegistry,
}

/// Anything that answers questions with raw text, like a remote model would.
pub trait Responder: Send + Sync {
    fn name(&self) -> String;
    fn respond(&self, ctx: &QuestionContext<'_>) -> Result<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Blind,
    Informed,
}

pub struct PixelOracle {
    pub mode: OracleMode,
    /// Seeds the guesses blind mode makes on non-color questions.
    pub seed: u64,
}

fn letter(i: usize) -> String {
    option_letter(i).to_string()
}

fn random_letter(seed: u64, ctx: &QuestionContext<'_>) -> String {
    let mut rng = SeededRng::derive(seed, ctx.index as u64, "guess");
    letter(rng.random_range(0..ctx.question.options.len()))
}

impl PixelOracle {
    fn choose(&self, ctx: &QuestionContext<'_>) -> Result<usize> {
        let q = ctx.question;
        let meta = RedactedMeta::new(ctx.sample, q.property);
        match q.property {
            Property::Color => {
                let bg = match self.mode {
                    OracleMode::Informed => meta.background,
                    OracleMode::Blind => estimate_background(ctx.image),
                };
                let name = classify_color(ctx.image, bg)?.name;
                q.options
                    .iter()
                    .position(|o| o == name)
                    .or_else(|| {
                        // Nearest offered color if the estimate is not an option.
                        let est = crate::color::palette_by_name(name)?.rgb;
                        let rgbs: Vec<RgbColor> = q
                            .options
                            .iter()
                            .filter_map(|o| crate::color::palette_by_name(o).map(|p| p.rgb))
                            .collect();
                        (rgbs.len() == q.options.len()).then(|| nearest_index(&rgbs, |c| c.distance(est)))
                    })
                    .ok_or_else(|| Error::Oracle(format!("color options are not palette names: {:?}", q.options)))
            }
            Property::Size => {
                let pts = q
                    .options
                    .iter()
                    .map(|o| parse_size_label(o).ok_or_else(|| Error::Oracle(format!("bad size option {o:?}"))))
                    .collect::<Result<Vec<u32>>>()?;
                estimate_size(ctx.image, &meta, &pts, ctx.registry)
            }
            Property::Style => {
                let styles = q
                    .options
                    .iter()
                    .map(|o| FontStyle::from_label(o).ok_or_else(|| Error::Oracle(format!("bad style option {o:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                classify_style(ctx.image, &meta, &styles, ctx.registry)
            }
            Property::Family => {
                let ids = q
                    .options
                    .iter()
                    .map(|o| {
                        ctx.registry
                            .by_display_name(o)
                            .map(|e| e.id.clone())
                            .ok_or_else(|| Error::Oracle(format!("unknown font option {o:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                classify_family(ctx.image, &meta, &ids, ctx.registry)
            }
        }
    }
}

impl Responder for PixelOracle {
    fn name(&self) -> String {
        match self.mode {
            OracleMode::Blind => "pixel-oracle/blind".into(),
            OracleMode::Informed => "pixel-oracle/informed".into(),
        }
    }

    fn respond(&self, ctx: &QuestionContext<'_>) -> Result<String> {
        if self.mode == OracleMode::Blind && ctx.question.property != Property::Color {
            return Ok(random_letter(self.seed, ctx));
        }
        self.choose(ctx).map(letter)
    }
}

/// Uniform random letter per question, seeded.
pub struct RandomResponder {
    pub seed: u64,
}

impl Responder for RandomResponder {
    fn name(&self) -> String {
        "random".into()
    }

    fn respond(&self, ctx: &QuestionContext<'_>) -> Result<String> {
        Ok(random_letter(self.seed, ctx))
    }
}

type Factory = fn(u64) -> Box<dyn Responder>;

fn factories() -> BTreeMap<&'static str, Factory> {
    let mut m: BTreeMap<&'static str, Factory> = BTreeMap::new();
    m.insert("informed", |seed| Box::new(PixelOracle { mode: OracleMode::Informed, seed }));
    m.insert("blind", |seed| Box::new(PixelOracle { mode: OracleMode::Blind, seed }));
    m.insert("random", |seed| Box::new(RandomResponder { seed }));
    m
}

pub fn responder_names() -> Vec<&'static str> {
    factories().keys().copied().collect()
}

/// Build a local responder by name ("informed", "blind" or "random").
pub fn make_responder(name: &str, seed: u64) -> Result<Box<dyn Responder>> {
    let key = name.strip_prefix("pixel-oracle/").unwrap_or(name);
    factories()
        .get(key)
        .map(|f| f(seed))
        .ok_or_else(|| Error::Oracle(format!("unknown responder {name:?}; available: {}", responder_names().join(", "))))
}

/// Answer every question locally and produce a run log in the same format
/// as a remote evaluation. Failures become failed records.
pub fn answer_manifest(
    questions: &[Question],
    samples: &[Sample],
    load_image: &(dyn Fn(&Sample) -> Result<RasterImage> + Sync),
    registry: &FontRegistry,
    responder: &dyn Responder,
    manifest_hash: &str,
) -> RunLog {
    let name = responder.name();
    let header = RunHeader::new(format!("{name}-{manifest_hash:.12}"), name.clone(), name, manifest_hash, questions.len());
    let by_id: BTreeMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    // Decode each image once; questions of a sample share it.
    let images: BTreeMap<&str, Result<RasterImage>> = samples
        .par_iter()
        .filter(|s| questions.iter().any(|q| q.sample_id == s.id))
        .map(|s| (s.id.as_str(), load_image(s)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let records = questions
        .par_iter()
        .enumerate()
        .map(|(index, q)| {
            let start = std::time::Instant::now();
            let outcome = by_id
                .get(q.sample_id.as_str())
                .ok_or_else(|| Error::Oracle(format!("question {} references unknown sample {}", q.id, q.sample_id)))
                .and_then(|sample| {
                    let image = match images.get(q.sample_id.as_str()) {
                        Some(Ok(img)) => img,
                        Some(Err(e)) => return Err(Error::Oracle(e.to_string())),
                        None => return Err(Error::Oracle(format!("no image for {}", q.sample_id))),
                    };
                    responder.respond(&QuestionContext {
                        index,
                        question: q,
                        sample,
                        image,
                        registry,
                    })
                });
            let latency_ms = start.elapsed().as_millis() as u64;
            let (raw_response, status, error) = match outcome {
                Ok(raw) => (Some(raw), TransportStatus::Ok, None),
                Err(e) => (None, TransportStatus::Failed, Some(e.to_string())),
            };
            RunRecord {
                index,
                question_id: q.id.clone(),
                raw_response,
                latency_ms,
                status,
                attempts: 1,
                http_status: None,
                error,
            }
        })
        .collect();
    let mut log = RunLog {
        header,
        records,
        footer: None,
    };
    log.finish();
    log
}
