//! Typeface catalog.
//!
//! A registry is loaded from a TOML manifest of `[[font]]` tables. Face paths
//! are resolved relative to the manifest's directory and every face is parsed
//! at load time, so a loaded registry can always render its regular faces.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Difficulty;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Latin,
    Cjk,
    Arabic,
    Devanagari,
}

impl Script {
    pub const ALL: [Script; 4] = [Script::Latin, Script::Cjk, Script::Arabic, Script::Devanagari];

    pub fn as_str(self) -> &'static str {
        match self {
            Script::Latin => "latin",
            Script::Cjk => "cjk",
            Script::Arabic => "arabic",
            Script::Devanagari => "devanagari",
        }
    }

    /// Reporting column: Arabic and Devanagari are pooled as "Other".
    pub fn report_group(self) -> &'static str {
        match self {
            Script::Latin => "Latin",
            Script::Cjk => "CJK",
            Script::Arabic | Script::Devanagari => "Other",
        }
    }

    pub fn parse(s: &str) -> Result<Script> {
        Script::ALL
            .into_iter()
            .find(|sc| sc.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("script", s))
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Serif,
    SansSerif,
    Monospace,
    SlabSerif,
    Display,
    Cjk,
    Arabic,
    Devanagari,
}

impl Category {
    pub fn fits(self, script: Script) -> bool {
        match self {
            Category::Serif
            | Category::SansSerif
            | Category::Monospace
            | Category::SlabSerif
            | Category::Display => script == Script::Latin,
            Category::Cjk => script == Script::Cjk,
            Category::Arabic => script == Script::Arabic,
            Category::Devanagari => script == Script::Devanagari,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Serif => "serif",
            Category::SansSerif => "sans-serif",
            Category::Monospace => "monospace",
            Category::SlabSerif => "slab-serif",
            Category::Display => "display",
            Category::Cjk => "cjk",
            Category::Arabic => "arabic",
            Category::Devanagari => "devanagari",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FontStyle {
    Regular,
    Bold,
    Italic,
    BoldItalic,
}

impl FontStyle {
    pub const ALL: [FontStyle; 4] = [
        FontStyle::Regular,
        FontStyle::Bold,
        FontStyle::Italic,
        FontStyle::BoldItalic,
    ];

    pub fn is_bold(self) -> bool {
        matches!(self, FontStyle::Bold | FontStyle::BoldItalic)
    }

    pub fn is_italic(self) -> bool {
        matches!(self, FontStyle::Italic | FontStyle::BoldItalic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FontStyle::Regular => "regular",
            FontStyle::Bold => "bold",
            FontStyle::Italic => "italic",
            FontStyle::BoldItalic => "bold_italic",
        }
    }

    /// Option text shown in style questions.
    pub fn label(self) -> &'static str {
        match self {
            FontStyle::Regular => "Regular",
            FontStyle::Bold => "Bold",
            FontStyle::Italic => "Italic",
            FontStyle::BoldItalic => "Bold Italic",
        }
    }

    pub fn from_label(label: &str) -> Option<FontStyle> {
        FontStyle::ALL.into_iter().find(|s| s.label() == label)
    }
}

/// One logical typeface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FontEntry {
    pub id: String,
    pub display_name: String,
    pub script: Script,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_group: Option<String>,
    /// Face files as written in the manifest (relative to it).
    pub face_paths: BTreeMap<FontStyle, PathBuf>,
}

/// A parsed face file.
#[derive(Clone)]
pub struct FontFace {
    pub path: PathBuf,
    data: Arc<Vec<u8>>,
    pub units_per_em: u16,
}

impl FontFace {
    fn load(entry: &FontEntry, path: PathBuf) -> Result<Self> {
        let data = std::fs::read(&path).map_err(|e| Error::FontFile {
            entry: entry.display_name.clone(),
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let face = rustybuzz::ttf_parser::Face::parse(&data, 0).map_err(|e| Error::FontFile {
            entry: entry.display_name.clone(),
            path: path.clone(),
            reason: format!("not a scalable font: {e}"),
        })?;
        let units_per_em = face.units_per_em();
        Ok(FontFace {
            path,
            data: Arc::new(data),
            units_per_em,
        })
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

impl fmt::Debug for FontFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FontFace")
            .field("path", &self.path)
            .field("units_per_em", &self.units_per_em)
            .finish()
    }
}

/// Face chosen for a requested style, with the axes the renderer must synthesize.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedFace<'a> {
    pub face: &'a FontFace,
    pub faux_bold: bool,
    pub faux_italic: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RegistryDocument {
    #[serde(default)]
    font: Vec<FontEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct FontRegistry {
    entries: Vec<FontEntry>,
    faces: Vec<BTreeMap<FontStyle, FontFace>>,
    by_script: BTreeMap<Script, Vec<usize>>,
    by_category: BTreeMap<Category, Vec<usize>>,
}

impl FontRegistry {
    /// Load a manifest file; face paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Registry(msg) => Error::Registry(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let doc: RegistryDocument =
            toml::from_str(text).map_err(|e| Error::Registry(e.to_string()))?;
        Self::from_entries(doc.font, base_dir)
    }

    pub fn from_entries(entries: Vec<FontEntry>, base_dir: &Path) -> Result<Self> {
        let mut names = HashSet::new();
        let mut ids = HashSet::new();
        let mut faces = Vec::with_capacity(entries.len());
        let mut by_script: BTreeMap<Script, Vec<usize>> = BTreeMap::new();
        let mut by_category: BTreeMap<Category, Vec<usize>> = BTreeMap::new();

        for (i, entry) in entries.iter().enumerate() {
            if !ids.insert(entry.id.as_str()) {
                return Err(Error::Registry(format!("duplicate id `{}`", entry.id)));
            }
            if !names.insert(entry.display_name.as_str()) {
                return Err(Error::Registry(format!(
                    "duplicate display_name `{}`",
                    entry.display_name
                )));
            }
            if !entry.category.fits(entry.script) {
                return Err(Error::Registry(format!(
                    "`{}`: category {} does not belong to script {}",
                    entry.display_name,
                    entry.category.as_str(),
                    entry.script
                )));
            }
            if !entry.face_paths.contains_key(&FontStyle::Regular) {
                return Err(Error::Registry(format!(
                    "`{}`: a regular face is required",
                    entry.display_name
                )));
            }
            let mut loaded = BTreeMap::new();
            for (style, rel) in &entry.face_paths {
                loaded.insert(*style, FontFace::load(entry, base_dir.join(rel))?);
            }
            faces.push(loaded);
            by_script.entry(entry.script).or_default().push(i);
            by_category.entry(entry.category).or_default().push(i);
        }

        Ok(FontRegistry {
            entries,
            faces,
            by_script,
            by_category,
        })
    }

    /// Manifest text for this registry (entry order preserved).
    pub fn to_toml(&self) -> String {
        let doc = RegistryDocument {
            font: self.entries.clone(),
        };
        toml::to_string_pretty(&doc).expect("registry entries serialize")
    }

    pub fn entries(&self) -> &[FontEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FontEntry> {
        self.index_of(id).map(|i| &self.entries[i])
    }

    pub fn by_display_name(&self, name: &str) -> Option<&FontEntry> {
        self.entries.iter().find(|e| e.display_name == name)
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn fonts_for_script(&self, script: Script) -> Vec<&FontEntry> {
        self.by_script
            .get(&script)
            .map(|ix| ix.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    pub fn fonts_in_category(&self, category: Category) -> Vec<&FontEntry> {
        self.by_category
            .get(&category)
            .map(|ix| ix.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Face for `style`, falling back to the nearest loaded face and flagging
    /// the missing axes for synthetic emulation.
    pub fn resolve_face(&self, entry: &FontEntry, style: FontStyle) -> Result<ResolvedFace<'_>> {
        let idx = self
            .index_of(&entry.id)
            .ok_or_else(|| Error::Registry(format!("unknown font `{}`", entry.id)))?;
        let faces = &self.faces[idx];
        let pick = |s: FontStyle, faux_bold: bool, faux_italic: bool| {
            faces.get(&s).map(|face| ResolvedFace {
                face,
                faux_bold,
                faux_italic,
            })
        };
        let resolved = match style {
            FontStyle::Regular => pick(FontStyle::Regular, false, false),
            FontStyle::Bold => pick(FontStyle::Bold, false, false)
                .or_else(|| pick(FontStyle::Regular, true, false)),
            FontStyle::Italic => pick(FontStyle::Italic, false, false)
                .or_else(|| pick(FontStyle::Regular, false, true)),
            FontStyle::BoldItalic => pick(FontStyle::BoldItalic, false, false)
                .or_else(|| pick(FontStyle::Bold, false, true))
                .or_else(|| pick(FontStyle::Italic, true, false))
                .or_else(|| pick(FontStyle::Regular, true, true)),
        };
        Ok(resolved.expect("regular face is mandatory at load"))
    }

    /// Incorrect font options for a family question about `target`.
    ///
    /// Candidates come only from the target's script. Easy draws every
    /// distractor from other categories; Hard takes the similarity group
    /// first, then the same category, then any same-script font; Medium mixes
    /// one same-category and one other-category font when both exist.
    pub fn distractor_fonts(
        &self,
        target: &FontEntry,
        difficulty: Difficulty,
        count: usize,
        rng: &mut SeededRng,
    ) -> Result<Vec<&FontEntry>> {
        let mut pool: Vec<&FontEntry> = self
            .fonts_for_script(target.script)
            .into_iter()
            .filter(|e| e.id != target.id)
            .collect();
        if pool.len() < count {
            return Err(Error::InsufficientFonts(format!(
                "{} needs {count} distractors but script {} has only {} other fonts",
                target.display_name,
                target.script,
                pool.len()
            )));
        }
        pool.shuffle(rng);
        let (same_cat, other_cat): (Vec<&FontEntry>, Vec<&FontEntry>) =
            pool.iter().partition(|e| e.category == target.category);

        let chosen = match difficulty {
            Difficulty::Easy => {
                if other_cat.len() < count {
                    return Err(Error::InsufficientFonts(format!(
                        "easy distractors for {} need {count} fonts outside category {} but only {} exist",
                        target.display_name,
                        target.category.as_str(),
                        other_cat.len()
                    )));
                }
                other_cat[..count].to_vec()
            }
            Difficulty::Hard => {
                let in_group = |e: &&FontEntry| {
                    target.similarity_group.is_some() && e.similarity_group == target.similarity_group
                };
                let mut ordered: Vec<&FontEntry> = pool.iter().copied().filter(in_group).collect();
                ordered.extend(same_cat.iter().copied().filter(|e| !in_group(e)));
                ordered.extend(other_cat.iter().copied());
                ordered.truncate(count);
                ordered
            }
            Difficulty::Medium => {
                let mut picked: Vec<&FontEntry> = Vec::with_capacity(count);
                if count >= 2 && !same_cat.is_empty() && !other_cat.is_empty() {
                    picked.push(same_cat[0]);
                    picked.push(other_cat[0]);
                }
                for e in &pool {
                    if picked.len() == count {
                        break;
                    }
                    if !picked.iter().any(|p| p.id == e.id) {
                        picked.push(e);
                    }
                }
                picked
            }
        };
        Ok(chosen)
    }
}
