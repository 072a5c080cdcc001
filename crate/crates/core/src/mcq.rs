//! Multiple-choice question construction: one question per typographic
//! property with difficulty-controlled distractors.

use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::color::{palette_by_name, PaletteColor, PALETTE};
use crate::error::{Error, Result};
use crate::generator::{Difficulty, Sample};
use crate::registry::{FontEntry, FontRegistry, FontStyle, Script};
use crate::render::SIZES_PT;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Family,
    Size,
    Style,
    Color,
}

impl Property {
    pub const ALL: [Property; 4] = [Property::Family, Property::Size, Property::Style, Property::Color];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Family => "family",
            Property::Size => "size",
            Property::Style => "style",
            Property::Color => "color",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Property::Family => "Family",
            Property::Size => "Size",
            Property::Style => "Style",
            Property::Color => "Color",
        }
    }

    pub fn parse(s: &str) -> Result<Property> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("property", s))
    }

    pub fn templates(self) -> &'static [&'static str] {
        match self {
            Property::Family => &FAMILY_TEMPLATES,
            Property::Size => &SIZE_TEMPLATES,
            Property::Style => &STYLE_TEMPLATES,
            Property::Color => &COLOR_TEMPLATES,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const FAMILY_TEMPLATES: [&str; 4] = [
    "What font family is used in this image?",
    "Identify the typeface shown in this text.",
    "Which font is used to render this text?",
    "What is the name of this font?",
];

pub const SIZE_TEMPLATES: [&str; 4] = [
    "What is the approximate font size in this image?",
    "Estimate the point size of the displayed text.",
    "How large is the font in this image?",
    "What size is this text rendered at?",
];

pub const STYLE_TEMPLATES: [&str; 4] = [
    "What style is the text rendered in?",
    "Is this text regular, bold, italic, or bold-italic?",
    "Identify the font style used here.",
    "What typographic style is applied to this text?",
];

pub const COLOR_TEMPLATES: [&str; 4] = [
    "What color is the text in this image?",
    "Identify the font color.",
    "What is the color of the displayed text?",
    "Which color is used for this text?",
];

/// Options in the full-family format used for conflicting-name samples.
pub const FIFTEEN_WAY_OPTIONS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
    XLarge,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 4] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large, SizeBucket::XLarge];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::Small => "Small",
            SizeBucket::Medium => "Medium",
            SizeBucket::Large => "Large",
            SizeBucket::XLarge => "XLarge",
        }
    }
}

impl fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn size_bucket(size_pt: u32) -> Result<SizeBucket> {
    match size_pt {
        12 | 16 => Ok(SizeBucket::Small),
        20 | 24 => Ok(SizeBucket::Medium),
        32 | 40 => Ok(SizeBucket::Large),
        48 | 64 => Ok(SizeBucket::XLarge),
        other => Err(Error::invalid("size_pt", other)),
    }
}

pub fn size_label(size_pt: u32) -> String {
    format!("{size_pt}pt")
}

pub fn parse_size_label(label: &str) -> Option<u32> {
    label.strip_suffix("pt")?.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub sample_id: String,
    pub property: Property,
    pub prompt: String,
    pub options: Vec<String>,
    pub correct_index: usize,
    pub chance_baseline: f64,
    /// Copied from the sample so runs can be scored from this manifest alone.
    pub difficulty: Difficulty,
    pub script: Script,
    pub size_bucket: SizeBucket,
}

impl Question {
    pub fn correct_option(&self) -> &str {
        &self.options[self.correct_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSet {
    pub options: Vec<String>,
    pub correct_index: usize,
}

fn shuffled(truth: String, distractors: Vec<String>, rng: &mut SeededRng) -> OptionSet {
    let mut options = distractors;
    options.push(truth.clone());
    options.shuffle(rng);
    let correct_index = options.iter().position(|o| *o == truth).expect("truth present");
    OptionSet { options, correct_index }
}

/// Ground-truth display string of `sample` for `property`.
pub fn truth_label(sample: &Sample, property: Property) -> String {
    match property {
        Property::Family => sample.font_display_name.clone(),
        Property::Size => size_label(sample.size_pt),
        Property::Style => sample.style.label().to_string(),
        Property::Color => sample.color_name.clone(),
    }
}

/// Palette colors other than `truth`, nearest first (ties by palette order).
pub fn colors_by_distance(truth: &PaletteColor) -> Vec<&'static PaletteColor> {
    let mut others: Vec<&PaletteColor> = PALETTE.iter().filter(|c| c.name != truth.name).collect();
    others.sort_by(|a, b| truth.rgb.distance(a.rgb).total_cmp(&truth.rgb.distance(b.rgb)));
    others
}

/// Size-list positions other than `truth_idx`, nearest first. Equal step
/// distance is broken by the smaller point difference, then the lower index.
fn sizes_by_distance(truth_idx: usize) -> Vec<usize> {
    let t = SIZES_PT[truth_idx] as i64;
    let mut idx: Vec<usize> = (0..SIZES_PT.len()).filter(|&i| i != truth_idx).collect();
    idx.sort_by_key(|&i| (i.abs_diff(truth_idx), (SIZES_PT[i] as i64 - t).abs(), i));
    idx
}

fn size_distractors(truth_idx: usize, difficulty: Difficulty, rng: &mut SeededRng) -> Vec<usize> {
    let ordered = sizes_by_distance(truth_idx);
    let far: Vec<usize> = ordered.iter().copied().filter(|&i| i.abs_diff(truth_idx) >= 3).collect();
    match difficulty {
        Difficulty::Hard => ordered[..3].to_vec(),
        Difficulty::Easy => {
            if far.len() >= 3 {
                far.choose_multiple(rng, 3).copied().collect()
            } else {
                let mut picked = far.clone();
                for &i in ordered.iter().rev() {
                    if picked.len() == 3 {
                        break;
                    }
                    if !picked.contains(&i) {
                        picked.push(i);
                    }
                }
                picked
            }
        }
        Difficulty::Medium => {
            let adjacent: Vec<usize> = ordered.iter().copied().filter(|&i| i.abs_diff(truth_idx) == 1).collect();
            let mut picked = vec![*adjacent.choose(rng).expect("every size has a neighbour")];
            let far_pick = far.choose(rng).copied().unwrap_or(*ordered.last().expect("non-empty"));
            picked.push(far_pick);
            let rest: Vec<usize> = ordered.iter().copied().filter(|i| !picked.contains(i)).collect();
            picked.push(*rest.choose(rng).expect("enough sizes"));
            picked
        }
    }
}

fn color_distractors(truth: &PaletteColor, difficulty: Difficulty, rng: &mut SeededRng) -> Vec<&'static PaletteColor> {
    let ordered = colors_by_distance(truth);
    match difficulty {
        Difficulty::Hard => ordered[..3].to_vec(),
        Difficulty::Easy => ordered[ordered.len() - 3..].to_vec(),
        Difficulty::Medium => {
            let mut picked = vec![ordered[0]];
            picked.extend(ordered[2..5].choose_multiple(rng, 2).copied());
            picked
        }
    }
}

/// Family distractors for `target`: up to three same-script fonts chosen by
/// difficulty. Scripts too small for the category rule fall back to any other
/// same-script font, which can yield fewer than four options.
fn family_distractors<'r>(
    registry: &'r FontRegistry,
    target: &FontEntry,
    difficulty: Difficulty,
    rng: &mut SeededRng,
) -> Result<Vec<&'r FontEntry>> {
    let available = registry.fonts_for_script(target.script).len().saturating_sub(1);
    let count = available.min(3);
    if count == 0 {
        return Err(Error::InsufficientFonts(format!(
            "{} is the only {} font",
            target.display_name, target.script
        )));
    }
    match registry.distractor_fonts(target, difficulty, count, rng) {
        Ok(d) => Ok(d),
        Err(Error::InsufficientFonts(_)) => registry.distractor_fonts(target, Difficulty::Hard, count, rng),
        Err(e) => Err(e),
    }
}

pub fn build_options(
    property: Property,
    truth: &str,
    difficulty: Difficulty,
    registry: &FontRegistry,
    rng: &mut SeededRng,
) -> Result<OptionSet> {
    let mismatch = || Error::invalid(property_truth_what(property), truth);
    match property {
        Property::Family => {
            let target = registry.by_display_name(truth).ok_or_else(mismatch)?;
            let names = family_distractors(registry, target, difficulty, rng)?
                .into_iter()
                .map(|e| e.display_name.clone())
                .collect();
            Ok(shuffled(truth.to_string(), names, rng))
        }
        Property::Size => {
            let pt = parse_size_label(truth).ok_or_else(mismatch)?;
            let idx = SIZES_PT.iter().position(|&s| s == pt).ok_or_else(mismatch)?;
            let names = size_distractors(idx, difficulty, rng)
                .into_iter()
                .map(|i| size_label(SIZES_PT[i]))
                .collect();
            Ok(shuffled(truth.to_string(), names, rng))
        }
        Property::Style => {
            let style = FontStyle::from_label(truth).ok_or_else(mismatch)?;
            let names = FontStyle::ALL
                .into_iter()
                .filter(|s| *s != style)
                .map(|s| s.label().to_string())
                .collect();
            Ok(shuffled(truth.to_string(), names, rng))
        }
        Property::Color => {
            let color = palette_by_name(truth).ok_or_else(mismatch)?;
            let names = color_distractors(color, difficulty, rng)
                .into_iter()
                .map(|c| c.name.to_string())
                .collect();
            Ok(shuffled(truth.to_string(), names, rng))
        }
    }
}

fn property_truth_what(property: Property) -> &'static str {
    match property {
        Property::Family => "family truth",
        Property::Size => "size truth",
        Property::Style => "style truth",
        Property::Color => "color truth",
    }
}

pub fn question_id(sample_id: &str, property: Property) -> String {
    format!("{sample_id}-{property}")
}

fn make_question(sample: &Sample, property: Property, prompt: &str, set: OptionSet) -> Question {
    Question {
        id: question_id(&sample.id, property),
        sample_id: sample.id.clone(),
        property,
        prompt: prompt.to_string(),
        chance_baseline: 1.0 / set.options.len() as f64,
        options: set.options,
        correct_index: set.correct_index,
        difficulty: sample.difficulty,
        script: sample.script,
        size_bucket: sample.size_bucket,
    }
}

/// Four questions (family, size, style, color) for one sample.
pub fn questions_for_sample(sample: &Sample, registry: &FontRegistry, rng: &mut SeededRng) -> Result<Vec<Question>> {
    Property::ALL
        .into_iter()
        .map(|property| {
            let prompt = *property.templates().choose(rng).expect("non-empty pool");
            let set = build_options(property, &truth_label(sample, property), sample.difficulty, registry, rng)?;
            Ok(make_question(sample, property, prompt, set))
        })
        .collect()
}

/// Family question over fifteen Latin fonts. For conflicting-name samples the
/// named font is always among the distractors.
pub fn frb_style_family_question(sample: &Sample, registry: &FontRegistry, rng: &mut SeededRng) -> Result<Question> {
    if sample.script != Script::Latin {
        return Err(Error::Generation(format!(
            "fifteen-way family questions need Latin samples, got {}",
            sample.script
        )));
    }
    let mut pool: Vec<&FontEntry> = registry
        .fonts_for_script(Script::Latin)
        .into_iter()
        .filter(|e| e.display_name != sample.font_display_name)
        .collect();
    let needed = FIFTEEN_WAY_OPTIONS - 1;
    if pool.len() < needed {
        return Err(Error::InsufficientFonts(format!(
            "fifteen-way family questions need {FIFTEEN_WAY_OPTIONS} Latin fonts, registry has {}",
            pool.len() + 1
        )));
    }
    let mut names: Vec<String> = Vec::with_capacity(needed);
    if let Some(conflict) = &sample.conflicting_name {
        if let Some(pos) = pool.iter().position(|e| &e.display_name == conflict) {
            names.push(pool.remove(pos).display_name.clone());
        }
    }
    names.extend(
        pool.choose_multiple(rng, needed - names.len())
            .map(|e| e.display_name.clone()),
    );
    let prompt = *Property::Family.templates().choose(rng).expect("non-empty pool");
    let set = shuffled(sample.font_display_name.clone(), names, rng);
    Ok(make_question(sample, Property::Family, prompt, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::default_registry;
    use std::collections::BTreeSet;

    fn opts(property: Property, truth: &str, d: Difficulty, seed: u64) -> OptionSet {
        let reg = default_registry();
        build_options(property, truth, d, &reg, &mut SeededRng::new(seed)).unwrap()
    }

    fn distractor_set(set: &OptionSet) -> BTreeSet<String> {
        set.options
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != set.correct_index)
            .map(|(_, o)| o.clone())
            .collect()
    }

    fn set_of(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    // Independent oracle: squared distances in integer arithmetic.
    fn oracle_ranked(truth: &str) -> Vec<&'static str> {
        let t = PALETTE.iter().find(|c| c.name == truth).unwrap().rgb;
        let mut v: Vec<(i64, &str)> = PALETTE
            .iter()
            .filter(|c| c.name != truth)
            .map(|c| {
                let d: i64 = [(t.r, c.rgb.r), (t.g, c.rgb.g), (t.b, c.rgb.b)]
                    .iter()
                    .map(|(a, b)| (*a as i64 - *b as i64).pow(2))
                    .sum();
                (d, c.name)
            })
            .collect();
        v.sort();
        v.into_iter().map(|(_, n)| n).collect()
    }

    #[test]
    fn color_red_easy_and_hard() {
        for seed in 0..5 {
            assert_eq!(distractor_set(&opts(Property::Color, "Red", Difficulty::Easy, seed)), set_of(&["Blue", "Black", "Green"]));
            assert_eq!(distractor_set(&opts(Property::Color, "Red", Difficulty::Hard, seed)), set_of(&["Orange", "Brown", "Gray"]));
        }
        let ranked = oracle_ranked("Red");
        assert_eq!(ranked[..3], ["Orange", "Brown", "Gray"]);
        assert_eq!(ranked[4..], ["Green", "Black", "Blue"]);
    }

    #[test]
    fn color_difficulty_monotone_for_every_truth() {
        for c in PALETTE.iter() {
            let easy = color_distractors(c, Difficulty::Easy, &mut SeededRng::new(0));
            let hard = color_distractors(c, Difficulty::Hard, &mut SeededRng::new(0));
            let min_easy = easy.iter().map(|e| c.rgb.distance(e.rgb)).fold(f64::INFINITY, f64::min);
            let max_hard = hard.iter().map(|e| c.rgb.distance(e.rgb)).fold(0.0, f64::max);
            assert!(min_easy > max_hard, "{}", c.name);
            let ranked = oracle_ranked(c.name);
            let hard_names: BTreeSet<&str> = hard.iter().map(|e| e.name).collect();
            assert_eq!(hard_names, ranked[..3].iter().copied().collect());
        }
    }

    #[test]
    fn color_medium_has_nearest() {
        for seed in 0..20 {
            let d = distractor_set(&opts(Property::Color, "Red", Difficulty::Medium, seed));
            assert!(d.contains("Orange"));
            assert_eq!(d.len(), 3);
        }
    }

    #[test]
    fn size_hard_24() {
        let set = opts(Property::Size, "24pt", Difficulty::Hard, 3);
        let all: BTreeSet<String> = set.options.iter().cloned().collect();
        assert_eq!(all, set_of(&["20pt", "24pt", "32pt", "16pt"]));
    }

    #[test]
    fn size_rules_hold_for_every_truth() {
        for (t, &pt) in SIZES_PT.iter().enumerate() {
            for seed in 0..10 {
                for d in Difficulty::ALL {
                    let set = opts(Property::Size, &size_label(pt), d, seed);
                    assert_eq!(set.options.len(), 4);
                    let idx: Vec<usize> = distractor_set(&set)
                        .iter()
                        .map(|o| SIZES_PT.iter().position(|&s| s == parse_size_label(o).unwrap()).unwrap())
                        .collect();
                    assert_eq!(idx.len(), 3);
                    match d {
                        Difficulty::Hard => {
                            for n in [t.checked_sub(1), Some(t + 1).filter(|&i| i < SIZES_PT.len())].into_iter().flatten() {
                                assert!(idx.contains(&n), "{pt} hard misses neighbour {n}");
                            }
                        }
                        Difficulty::Easy => {
                            let far = (0..SIZES_PT.len()).filter(|i| i.abs_diff(t) >= 3).count();
                            let n_far = idx.iter().filter(|i| i.abs_diff(t) >= 3).count();
                            assert_eq!(n_far, far.min(3));
                        }
                        Difficulty::Medium => {
                            assert!(idx.iter().any(|i| i.abs_diff(t) == 1));
                            assert!(idx.iter().any(|i| i.abs_diff(t) >= 3));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn style_is_always_full_set() {
        for style in FontStyle::ALL {
            for d in Difficulty::ALL {
                let set = opts(Property::Style, style.label(), d, 1);
                let all: BTreeSet<String> = set.options.iter().cloned().collect();
                assert_eq!(all, set_of(&["Regular", "Bold", "Italic", "Bold Italic"]));
                assert_eq!(set.options[set.correct_index], style.label());
            }
        }
    }

    #[test]
    fn family_easy_is_cross_category_and_hard_prefers_group() {
        let reg = default_registry();
        let arial = reg.by_display_name("Times New Roman").unwrap();
        for seed in 0..20 {
            let set = opts(Property::Family, "Times New Roman", Difficulty::Easy, seed);
            for name in distractor_set(&set) {
                assert_ne!(reg.by_display_name(&name).unwrap().category, arial.category);
            }
            let hard = opts(Property::Family, "Times New Roman", Difficulty::Hard, seed);
            let d = distractor_set(&hard);
            assert!(d.contains("Georgia") && d.contains("Palatino"));
        }
    }

    #[test]
    fn small_scripts_get_two_options() {
        for d in Difficulty::ALL {
            let set = opts(Property::Family, "STHeiti", d, 0);
            assert_eq!(set.options.len(), 2);
            assert!(set.options.contains(&"Songti SC".to_string()));
        }
    }

    #[test]
    fn mismatched_truth_is_error() {
        let reg = default_registry();
        let mut rng = SeededRng::new(0);
        assert!(build_options(Property::Color, "Teal", Difficulty::Easy, &reg, &mut rng).is_err());
        assert!(build_options(Property::Size, "13pt", Difficulty::Easy, &reg, &mut rng).is_err());
        assert!(build_options(Property::Style, "Oblique", Difficulty::Easy, &reg, &mut rng).is_err());
        assert!(build_options(Property::Family, "Comic Sans", Difficulty::Easy, &reg, &mut rng).is_err());
    }

    #[test]
    fn buckets() {
        assert_eq!(size_bucket(16).unwrap(), SizeBucket::Small);
        assert_eq!(size_bucket(48).unwrap(), SizeBucket::XLarge);
        assert_eq!(size_bucket(24).unwrap(), SizeBucket::Medium);
        assert_eq!(size_bucket(40).unwrap(), SizeBucket::Large);
        assert!(size_bucket(13).is_err());
    }

    #[test]
    fn template_pools_are_four_each_and_distinct() {
        let mut all = BTreeSet::new();
        for p in Property::ALL {
            assert_eq!(p.templates().len(), 4);
            all.extend(p.templates().iter().copied());
        }
        assert_eq!(all.len(), 16);
    }
}
