//! Sample generation: difficulty/script assignment, parameter sampling, text
//! selection and rendering.

use std::fmt;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{palette_by_rgb, select_background, PaletteColor, RgbColor, PALETTE};
use crate::error::{Error, Result};
use crate::mcq::{size_bucket, SizeBucket};
use crate::registry::{Category, FontEntry, FontRegistry, FontStyle, Script};
use crate::render::{encode_png, render_with_face, RasterImage, RenderSpec, DEFAULT_DPI, DEFAULT_PADDING_PX, SIZES_PT};
use crate::rng::SeededRng;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaCell {
    pub script: Script,
    pub difficulty: Difficulty,
    pub count: usize,
}

/// Sample counts per (script, difficulty) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quota {
    pub cells: Vec<QuotaCell>,
}

impl Quota {
    /// The reference 250-sample composition. The pooled "Other" row
    /// (8/13/8) is split between Arabic (4/7/4) and Devanagari (4/6/4).
    pub fn reference() -> Self {
        use Difficulty::*;
        use Script::*;
        let rows = [
            (Latin, [73, 57, 73]),
            (Cjk, [7, 7, 4]),
            (Arabic, [4, 7, 4]),
            (Devanagari, [4, 6, 4]),
        ];
        let cells = rows
            .into_iter()
            .flat_map(|(script, counts)| {
                [Easy, Medium, Hard]
                    .into_iter()
                    .zip(counts)
                    .map(move |(difficulty, count)| QuotaCell {
                        script,
                        difficulty,
                        count,
                    })
            })
            .collect();
        Quota { cells }
    }

    /// `n` samples spread as evenly as possible over every script and difficulty.
    pub fn balanced(n: usize) -> Self {
        let mut cells: Vec<QuotaCell> = Script::ALL
            .into_iter()
            .flat_map(|script| {
                Difficulty::ALL.into_iter().map(move |difficulty| QuotaCell {
                    script,
                    difficulty,
                    count: 1,
                })
            })
            .collect();
        let weights = vec![1.0; cells.len()];
        for (cell, c) in cells.iter_mut().zip(largest_remainder(&weights, n)) {
            cell.count = c;
        }
        Quota { cells }
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn count(&self, script: Script, difficulty: Difficulty) -> usize {
        self.cells
            .iter()
            .filter(|c| c.script == script && c.difficulty == difficulty)
            .map(|c| c.count)
            .sum()
    }

    /// Keep only the cells of `script`.
    pub fn only(&self, script: Script) -> Self {
        Quota {
            cells: self.cells.iter().copied().filter(|c| c.script == script).collect(),
        }
    }

    /// Rescale to `n` samples keeping cell proportions (largest remainder).
    pub fn scaled_to(&self, n: usize) -> Self {
        let weights: Vec<f64> = self.cells.iter().map(|c| c.count as f64).collect();
        let counts = largest_remainder(&weights, n);
        Quota {
            cells: self
                .cells
                .iter()
                .zip(counts)
                .map(|(c, count)| QuotaCell { count, ..*c })
                .collect(),
        }
    }
}

/// Integer apportionment of `n` by `weights`; ties go to the earlier cell.
fn largest_remainder(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

/// How each sample's (script, difficulty) cell is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AssignmentMode {
    /// Exact cell counts from the quota, order shuffled by the master seed.
    Quota,
    /// Independent per-sample draws: difficulty from `difficulty_weights`
    /// (easy, medium, hard), then script from the quota's per-difficulty mix.
    Sampled { difficulty_weights: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub master_seed: u64,
    pub quota: Quota,
    pub assignment: AssignmentMode,
    /// Probability that a Latin sample renders a conflicting font name.
    pub stroop_fraction: f64,
    /// Replace Latin family questions with the 15-way format.
    #[serde(default)]
    pub fifteen_way_family: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            master_seed: DEFAULT_SEED,
            quota: Quota::reference(),
            assignment: AssignmentMode::Quota,
            stroop_fraction: 0.0,
            fifteen_way_family: false,
        }
    }
}

impl GeneratorConfig {
    pub fn target_count(&self) -> usize {
        self.quota.total()
    }

    /// Check the configuration against the registry and corpus.
    pub fn validate(&self, registry: &FontRegistry, corpus: &TextCorpus) -> Result<()> {
        if !(0.0..=1.0).contains(&self.stroop_fraction) {
            return Err(Error::invalid("stroop_fraction", self.stroop_fraction));
        }
        if let AssignmentMode::Sampled { difficulty_weights } = &self.assignment {
            if difficulty_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
                || difficulty_weights.iter().sum::<f64>() <= 0.0
            {
                return Err(Error::invalid("difficulty_weights", format!("{difficulty_weights:?}")));
            }
        }
        for cell in self.quota.cells.iter().filter(|c| c.count > 0) {
            if registry.fonts_for_script(cell.script).is_empty() {
                return Err(Error::Generation(format!(
                    "quota cell ({}, {}) needs {} samples but the registry has no {} fonts",
                    cell.script, cell.difficulty, cell.count, cell.script
                )));
            }
            if corpus.sentences(cell.script).is_empty() {
                return Err(Error::Generation(format!(
                    "quota cell ({}, {}) needs text but the corpus has no {} sentences",
                    cell.script, cell.difficulty, cell.script
                )));
            }
        }
        if self.stroop_fraction > 0.0
            && self.quota.count_script(Script::Latin) > 0
            && registry.fonts_for_script(Script::Latin).len() < 2
        {
            return Err(Error::Generation("stroop mode needs at least two Latin fonts".into()));
        }
        Ok(())
    }
}

impl Quota {
    fn count_script(&self, script: Script) -> usize {
        self.cells.iter().filter(|c| c.script == script).map(|c| c.count).sum()
    }
}

/// Per-script sentence lists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCorpus {
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub latin: Vec<String>,
    #[serde(default)]
    pub cjk: Vec<String>,
    #[serde(default)]
    pub arabic: Vec<String>,
    #[serde(default)]
    pub devanagari: Vec<String>,
}

fn char_script(c: char) -> Option<Script> {
    match c as u32 {
        0x41..=0x5A | 0x61..=0x7A | 0xC0..=0x24F => Some(Script::Latin),
        0x2E80..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F => Some(Script::Cjk),
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF => {
            Some(Script::Arabic)
        }
        0x0900..=0x097F | 0xA8E0..=0xA8FF => Some(Script::Devanagari),
        _ => None,
    }
}

impl TextCorpus {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let corpus: TextCorpus = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        corpus.validate().map_err(|e| Error::parse(path, e))?;
        Ok(corpus)
    }

    pub fn sentences(&self, script: Script) -> &[String] {
        match script {
            Script::Latin => &self.latin,
            Script::Cjk => &self.cjk,
            Script::Arabic => &self.arabic,
            Script::Devanagari => &self.devanagari,
        }
    }

    /// Every sentence must be non-empty and contain letters of its own script only.
    pub fn validate(&self) -> Result<()> {
        for script in Script::ALL {
            for s in self.sentences(script) {
                let letters: Vec<Script> = s.chars().filter_map(char_script).collect();
                if letters.is_empty() || letters.iter().any(|sc| *sc != script) {
                    return Err(Error::Generation(format!(
                        "corpus sentence {s:?} is not pure {script} text"
                    )));
                }
            }
        }
        if !self.latin.is_empty() && !self.latin.iter().any(|s| is_pangram(s)) {
            return Err(Error::Generation("Latin corpus contains no pangram".into()));
        }
        Ok(())
    }

    pub fn all_sentences(&self) -> impl Iterator<Item = &String> {
        Script::ALL.into_iter().flat_map(move |s| self.sentences(s).iter())
    }
}

pub fn is_pangram(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    ('a'..='z').all(|c| lower.contains(c))
}

/// One generated sample; the serialized field set is the sample manifest schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub image_path: String,
    pub text: String,
    pub font_id: String,
    pub font_display_name: String,
    pub script: Script,
    pub category: Category,
    pub size_pt: u32,
    pub size_bucket: SizeBucket,
    pub style: FontStyle,
    pub color_name: String,
    pub color_rgb: RgbColor,
    pub background_rgb: RgbColor,
    pub difficulty: Difficulty,
    pub stroop: bool,
    pub conflicting_name: Option<String>,
    pub faux_bold: bool,
    pub faux_italic: bool,
    pub seed_index: u64,
}

impl Sample {
    pub fn render_spec(&self) -> RenderSpec {
        RenderSpec {
            text: self.text.clone(),
            font_id: self.font_id.clone(),
            size_pt: self.size_pt,
            style: self.style,
            color: self.color_rgb,
            background: self.background_rgb,
            dpi: DEFAULT_DPI,
            padding_px: DEFAULT_PADDING_PX,
        }
    }

    pub fn palette_color(&self) -> Option<&'static PaletteColor> {
        palette_by_rgb(self.color_rgb)
    }
}

pub fn sample_id(index: u64) -> String {
    format!("s{index:04}")
}

/// Draw font, size, style, color and background. `text` is left empty for
/// [`pick_text`] to fill, since stroop text depends on the chosen font.
pub fn sample_parameters(
    rng: &mut SeededRng,
    _difficulty: Difficulty,
    script: Script,
    registry: &FontRegistry,
) -> Result<RenderSpec> {
    let fonts = registry.fonts_for_script(script);
    let font = fonts
        .choose(rng)
        .ok_or_else(|| Error::Generation(format!("registry has no {script} fonts")))?;
    let size_pt = *SIZES_PT.choose(rng).expect("non-empty");
    let style = *FontStyle::ALL.choose(rng).expect("non-empty");
    let color = PALETTE.choose(rng).expect("non-empty").rgb;
    let background = select_background(color, rng)?;
    Ok(RenderSpec {
        text: String::new(),
        font_id: font.id.clone(),
        size_pt,
        style,
        color,
        background,
        dpi: DEFAULT_DPI,
        padding_px: DEFAULT_PADDING_PX,
    })
}

/// Normal mode: a uniform corpus sentence. Stroop mode: the display name of
/// a different Latin font.
pub fn pick_text(
    corpus: &TextCorpus,
    script: Script,
    rng: &mut SeededRng,
    stroop: bool,
    font: &FontEntry,
    registry: &FontRegistry,
) -> Result<String> {
    if stroop {
        if script != Script::Latin {
            return Err(Error::Generation(format!("stroop text requested for {script} script")));
        }
        let names: Vec<&str> = registry
            .fonts_for_script(Script::Latin)
            .into_iter()
            .filter(|e| e.id != font.id)
            .map(|e| e.display_name.as_str())
            .collect();
        return names
            .choose(rng)
            .map(|s| s.to_string())
            .ok_or_else(|| Error::Generation("no conflicting font name available".into()));
    }
    corpus
        .sentences(script)
        .choose(rng)
        .cloned()
        .ok_or_else(|| Error::Generation(format!("corpus has no {script} sentences")))
}

#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub sample: Sample,
    pub image: RasterImage,
    pub png: Vec<u8>,
}

/// (script, difficulty) for every index, in index order.
pub fn assignment_plan(config: &GeneratorConfig) -> Result<Vec<(Script, Difficulty)>> {
    match &config.assignment {
        AssignmentMode::Quota => {
            let mut plan: Vec<(Script, Difficulty)> = config
                .quota
                .cells
                .iter()
                .flat_map(|c| std::iter::repeat_n((c.script, c.difficulty), c.count))
                .collect();
            plan.shuffle(&mut SeededRng::derive(config.master_seed, 0, "plan"));
            Ok(plan)
        }
        AssignmentMode::Sampled { difficulty_weights } => {
            let n = config.quota.total();
            (0..n as u64)
                .map(|i| {
                    let mut rng = SeededRng::derive(config.master_seed, i, "plan");
                    let d = weighted_pick(&mut rng, difficulty_weights)
                        .map(|k| Difficulty::ALL[k])
                        .ok_or_else(|| Error::invalid("difficulty_weights", "all zero"))?;
                    let cells: Vec<&QuotaCell> =
                        config.quota.cells.iter().filter(|c| c.difficulty == d).collect();
                    let weights: Vec<f64> = cells.iter().map(|c| c.count as f64).collect();
                    let s = weighted_pick(&mut rng, &weights)
                        .map(|k| cells[k].script)
                        .ok_or_else(|| {
                            Error::Generation(format!("quota has no cells for difficulty {d}"))
                        })?;
                    Ok((s, d))
                })
                .collect()
        }
    }
}

fn weighted_pick(rng: &mut SeededRng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return Some(i);
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0)
}

/// Build sample `index` from its own derived stream.
pub fn generate_sample(
    config: &GeneratorConfig,
    registry: &FontRegistry,
    corpus: &TextCorpus,
    index: u64,
    script: Script,
    difficulty: Difficulty,
) -> Result<GeneratedSample> {
    let mut rng = SeededRng::derive(config.master_seed, index, "sample");
    let mut spec = sample_parameters(&mut rng, difficulty, script, registry)?;
    let stroop_draw: f64 = rng.random();
    let stroop = script == Script::Latin && stroop_draw < config.stroop_fraction;
    let font = registry.get(&spec.font_id).expect("sampled from registry");
    spec.text = pick_text(corpus, script, &mut rng, stroop, font, registry)?;

    let resolved = registry.resolve_face(font, spec.style)?;
    spec.validate()?;
    let image = render_with_face(&spec, resolved)?;
    let png = encode_png(&image);
    let id = sample_id(index);
    let palette = palette_by_rgb(spec.color).expect("palette color");
    let sample = Sample {
        image_path: format!("images/{id}.png"),
        id,
        text: spec.text.clone(),
        font_id: font.id.clone(),
        font_display_name: font.display_name.clone(),
        script,
        category: font.category,
        size_pt: spec.size_pt,
        size_bucket: size_bucket(spec.size_pt)?,
        style: spec.style,
        color_name: palette.name.to_string(),
        color_rgb: spec.color,
        background_rgb: spec.background,
        difficulty,
        stroop,
        conflicting_name: stroop.then(|| spec.text.clone()),
        faux_bold: resolved.faux_bold,
        faux_italic: resolved.faux_italic,
        seed_index: index,
    };
    Ok(GeneratedSample { sample, image, png })
}

/// Regenerate only sample `index`.
pub fn regenerate_sample(
    config: &GeneratorConfig,
    registry: &FontRegistry,
    corpus: &TextCorpus,
    index: u64,
) -> Result<GeneratedSample> {
    let plan = assignment_plan(config)?;
    let (script, difficulty) = *plan
        .get(index as usize)
        .ok_or_else(|| Error::Generation(format!("index {index} beyond {} samples", plan.len())))?;
    generate_sample(config, registry, corpus, index, script, difficulty)
}

/// Generate every sample in parallel; output is in index order.
pub fn generate_samples(
    config: &GeneratorConfig,
    registry: &FontRegistry,
    corpus: &TextCorpus,
) -> Result<Vec<GeneratedSample>> {
    config.validate(registry, corpus)?;
    let plan = assignment_plan(config)?;
    plan.par_iter()
        .enumerate()
        .map(|(i, (script, difficulty))| {
            generate_sample(config, registry, corpus, i as u64, *script, *difficulty)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{default_corpus, default_registry};
    use std::collections::HashMap;

    #[test]
    fn reference_quota_matches_composition() {
        let q = Quota::reference();
        assert_eq!(q.total(), 250);
        let row = |s: Script| Difficulty::ALL.map(|d| q.count(s, d));
        assert_eq!(row(Script::Latin), [73, 57, 73]);
        assert_eq!(row(Script::Cjk), [7, 7, 4]);
        let other: Vec<usize> = Difficulty::ALL
            .iter()
            .map(|d| q.count(Script::Arabic, *d) + q.count(Script::Devanagari, *d))
            .collect();
        assert_eq!(other, [8, 13, 8]);
        assert_eq!(Difficulty::ALL.map(|d| Script::ALL.iter().map(|s| q.count(*s, d)).sum::<usize>()), [88, 77, 85]);
    }

    #[test]
    fn quota_scaling() {
        let q = Quota::reference().scaled_to(500);
        assert_eq!(q.total(), 500);
        assert_eq!(q.count(Script::Latin, Difficulty::Easy), 146);
        assert_eq!(Quota::balanced(750).total(), 750);
        assert_eq!(Quota::balanced(0).total(), 0);
        assert_eq!(Quota::reference().only(Script::Latin).total(), 203);
    }

    #[test]
    fn difficulty_order() {
        assert!(Difficulty::Easy < Difficulty::Medium && Difficulty::Medium < Difficulty::Hard);
    }

    #[test]
    fn plan_respects_quota_exactly() {
        let cfg = GeneratorConfig::default();
        let plan = assignment_plan(&cfg).unwrap();
        assert_eq!(plan.len(), 250);
        let mut counts: HashMap<(Script, Difficulty), usize> = HashMap::new();
        for cell in &plan {
            *counts.entry(*cell).or_default() += 1;
        }
        for c in &cfg.quota.cells {
            assert_eq!(counts.get(&(c.script, c.difficulty)).copied().unwrap_or(0), c.count);
        }
    }

    #[test]
    fn sampled_mode_draws_all_cells() {
        let cfg = GeneratorConfig {
            assignment: AssignmentMode::Sampled {
                difficulty_weights: [0.352, 0.308, 0.34],
            },
            ..Default::default()
        };
        let plan = assignment_plan(&cfg).unwrap();
        assert_eq!(plan.len(), 250);
        assert!(plan.iter().any(|(s, _)| *s == Script::Cjk));
        assert_eq!(plan, assignment_plan(&cfg).unwrap());
    }

    #[test]
    fn size_marginal_is_uniform() {
        let reg = default_registry();
        let mut counts: HashMap<u32, usize> = HashMap::new();
        let mut styles: HashMap<FontStyle, usize> = HashMap::new();
        let mut colors: HashMap<RgbColor, usize> = HashMap::new();
        for i in 0..10_000u64 {
            let mut rng = SeededRng::derive(7, i, "t");
            let spec = sample_parameters(&mut rng, Difficulty::Easy, Script::Latin, &reg).unwrap();
            *counts.entry(spec.size_pt).or_default() += 1;
            *styles.entry(spec.style).or_default() += 1;
            *colors.entry(spec.color).or_default() += 1;
            assert!(crate::color::contrast_ratio(spec.color, spec.background) >= 4.5);
        }
        assert_eq!(counts.len(), 8);
        for (size, n) in counts {
            assert!((1100..=1400).contains(&n), "{size}: {n}");
        }
        // binomial 3 sigma at p = 1/4: 2500 +- 130; p = 1/8: 1250 +- 99
        for (_, n) in styles {
            assert!((2370..=2630).contains(&n), "{n}");
        }
        for (_, n) in colors {
            assert!((1151..=1349).contains(&n), "{n}");
        }
    }

    #[test]
    fn sample_parameters_deterministic() {
        let reg = default_registry();
        let a = sample_parameters(&mut SeededRng::new(5), Difficulty::Hard, Script::Cjk, &reg).unwrap();
        let b = sample_parameters(&mut SeededRng::new(5), Difficulty::Hard, Script::Cjk, &reg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stroop_text_never_names_the_rendering_font() {
        let reg = default_registry();
        let corpus = default_corpus();
        let arial = reg.by_display_name("Arial").unwrap();
        let latin_names: Vec<&str> = reg
            .fonts_for_script(Script::Latin)
            .iter()
            .map(|e| e.display_name.as_str())
            .collect();
        for seed in 0..200 {
            let t = pick_text(&corpus, Script::Latin, &mut SeededRng::new(seed), true, arial, &reg).unwrap();
            assert_ne!(t, "Arial");
            assert!(latin_names.contains(&t.as_str()));
        }
        let normal = pick_text(&corpus, Script::Latin, &mut SeededRng::new(1), false, arial, &reg).unwrap();
        assert!(corpus.latin.contains(&normal));
        let heiti = reg.by_display_name("STHeiti").unwrap();
        assert!(pick_text(&corpus, Script::Cjk, &mut SeededRng::new(1), true, heiti, &reg).is_err());
    }

    #[test]
    fn corpus_validation() {
        let corpus = default_corpus();
        assert_eq!(corpus.latin.len(), 40);
        assert_eq!(corpus.cjk.len(), 20);
        let mut bad = corpus.clone();
        bad.cjk.push("hello".into());
        assert!(bad.validate().is_err());
        let mut no_pangram = TextCorpus::default();
        no_pangram.latin.push("hello world".into());
        assert!(no_pangram.validate().is_err());
    }

    #[test]
    fn empty_config_generates_nothing() {
        let reg = default_registry();
        let corpus = default_corpus();
        let cfg = GeneratorConfig {
            quota: Quota::reference().scaled_to(0),
            ..Default::default()
        };
        assert!(generate_samples(&cfg, &reg, &corpus).unwrap().is_empty());
    }

    #[test]
    fn missing_corpus_script_is_named() {
        let reg = default_registry();
        let mut corpus = default_corpus();
        corpus.arabic.clear();
        let err = GeneratorConfig::default().validate(&reg, &corpus).unwrap_err();
        assert!(err.to_string().contains("arabic"), "{err}");
    }

    #[test]
    fn regenerating_one_index_matches_full_run() {
        let reg = default_registry();
        let corpus = default_corpus();
        let cfg = GeneratorConfig {
            quota: Quota::reference().scaled_to(12),
            stroop_fraction: 0.5,
            ..Default::default()
        };
        let all = generate_samples(&cfg, &reg, &corpus).unwrap();
        let one = regenerate_sample(&cfg, &reg, &corpus, 7).unwrap();
        assert_eq!(all[7].png, one.png);
        assert_eq!(all[7].sample, one.sample);
        for g in &all {
            if g.sample.stroop {
                assert_eq!(g.sample.script, Script::Latin);
                assert_ne!(g.sample.conflicting_name.as_deref(), Some(g.sample.font_display_name.as_str()));
            }
        }
    }
}
