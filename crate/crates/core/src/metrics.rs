//! Scoring run logs against the question manifest and aggregating accuracy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::color::PALETTE;
use crate::error::{Error, Result};
use crate::generator::Difficulty;
use crate::mcq::{size_label, Property, Question, SizeBucket};
use crate::parser::{parse, ParseStep};
use crate::registry::{FontStyle, Script};
use crate::render::SIZES_PT;
use crate::runlog::RunLog;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Below this many discordant pairs McNemar uses the exact binomial test.
pub const MCNEMAR_EXACT_BELOW: u64 = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    pub property: Property,
    pub difficulty: Difficulty,
    pub script: Script,
    /// Set for size questions only.
    pub size_bucket: Option<SizeBucket>,
    pub truth_index: usize,
    pub truth_label: String,
    pub choice: Option<usize>,
    pub predicted_label: Option<String>,
    pub step: ParseStep,
    pub correct: bool,
    pub chance_baseline: f64,
}

fn eval_record(q: &Question, raw: Option<&str>) -> EvalRecord {
    let parsed = raw.map(|r| parse(r, &q.options));
    let (choice, step) = match parsed {
        Some(p) => (p.choice, p.step),
        None => (None, ParseStep::Failed),
    };
    EvalRecord {
        question_id: q.id.clone(),
        property: q.property,
        difficulty: q.difficulty,
        script: q.script,
        size_bucket: (q.property == Property::Size).then_some(q.size_bucket),
        truth_index: q.correct_index,
        truth_label: q.correct_option().to_string(),
        choice,
        predicted_label: choice.map(|c| q.options[c].clone()),
        step,
        correct: choice == Some(q.correct_index),
        chance_baseline: q.chance_baseline,
    }
}

/// One record per manifest question. Questions absent from the log, or whose
/// request failed, score as failed parses.
pub fn score(log: &RunLog, questions: &[Question]) -> Result<Vec<EvalRecord>> {
    let known: HashMap<&str, usize> = questions.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
    let mut raw: Vec<Option<&str>> = vec![None; questions.len()];
    for r in &log.records {
        let i = *known
            .get(r.question_id.as_str())
            .ok_or_else(|| Error::Metrics(format!("log record for unknown question {}", r.question_id)))?;
        raw[i] = r.raw_response.as_deref();
    }
    Ok(questions.iter().zip(raw).map(|(q, r)| eval_record(q, r)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub k: u64,
    pub n: u64,
    /// None when the cell is empty.
    pub accuracy: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
    pub parse_failures: u64,
}

impl AccuracyCell {
    pub fn from_counts(k: u64, n: u64, parse_failures: u64) -> Self {
        let (accuracy, low, high) = match wilson_interval(k, n, 0.95) {
            Ok((lo, hi)) => (Some(k as f64 / n as f64), Some(lo), Some(hi)),
            Err(_) => (None, None, None),
        };
        AccuracyCell {
            k,
            n,
            accuracy,
            wilson_low: low,
            wilson_high: high,
            parse_failures,
        }
    }

    pub fn parse_failure_rate(&self) -> Option<f64> {
        (self.n > 0).then(|| self.parse_failures as f64 / self.n as f64)
    }
}

/// Two-sided Wilson score interval.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Metrics("wilson interval needs n >= 1".into()));
    }
    if k > n {
        return Err(Error::Metrics(format!("k = {k} exceeds n = {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid("confidence", confidence));
    }
    let z = if (confidence - 0.95).abs() < 1e-12 {
        Z_95
    } else {
        Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + confidence / 2.0)
    };
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Overall,
    Property,
    Difficulty,
    /// Latin / CJK / Other.
    ScriptGroup,
    Script,
    SizeBucket,
    PropertyDifficulty,
    PropertyScriptGroup,
}

impl Grouping {
    pub const ALL: [Grouping; 8] = [
        Grouping::Overall,
        Grouping::Property,
        Grouping::Difficulty,
        Grouping::ScriptGroup,
        Grouping::Script,
        Grouping::SizeBucket,
        Grouping::PropertyDifficulty,
        Grouping::PropertyScriptGroup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Overall => "overall",
            Grouping::Property => "property",
            Grouping::Difficulty => "difficulty",
            Grouping::ScriptGroup => "script_group",
            Grouping::Script => "script",
            Grouping::SizeBucket => "size_bucket",
            Grouping::PropertyDifficulty => "property_difficulty",
            Grouping::PropertyScriptGroup => "property_script_group",
        }
    }

    pub fn parse(s: &str) -> Result<Grouping> {
        let norm = s.replace(['-', 'x', '×'], "_");
        Grouping::ALL
            .into_iter()
            .find(|g| g.as_str() == s || g.as_str() == norm)
            .ok_or_else(|| Error::invalid("grouping", s))
    }

    /// Cell keys in display order; a record maps to at most one key.
    fn keys(self) -> Vec<String> {
        let props = Property::ALL.map(|p| p.label().to_string());
        let diffs = ["Easy", "Med", "Hard"].map(String::from);
        let groups = ["Latin", "CJK", "Other"].map(String::from);
        let cross = |a: &[String], b: &[String]| a.iter().flat_map(|x| b.iter().map(move |y| format!("{x}/{y}"))).collect();
        match self {
            Grouping::Overall => vec!["Overall".into()],
            Grouping::Property => props.to_vec(),
            Grouping::Difficulty => diffs.to_vec(),
            Grouping::ScriptGroup => groups.to_vec(),
            Grouping::Script => Script::ALL.iter().map(|s| s.as_str().to_string()).collect(),
            Grouping::SizeBucket => SizeBucket::ALL.iter().map(|b| b.as_str().to_string()).collect(),
            Grouping::PropertyDifficulty => cross(&props, &diffs),
            Grouping::PropertyScriptGroup => cross(&props, &groups),
        }
    }

    fn key_of(self, r: &EvalRecord) -> Option<String> {
        let diff = match r.difficulty {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Med",
            Difficulty::Hard => "Hard",
        };
        match self {
            Grouping::Overall => Some("Overall".into()),
            Grouping::Property => Some(r.property.label().into()),
            Grouping::Difficulty => Some(diff.into()),
            Grouping::ScriptGroup => Some(r.script.report_group().into()),
            Grouping::Script => Some(r.script.as_str().into()),
            Grouping::SizeBucket => r.size_bucket.map(|b| b.as_str().into()),
            Grouping::PropertyDifficulty => Some(format!("{}/{diff}", r.property.label())),
            Grouping::PropertyScriptGroup => Some(format!("{}/{}", r.property.label(), r.script.report_group())),
        }
    }
}

/// Accuracy per cell of `grouping`, in display order. Empty cells are kept
/// with n = 0.
pub fn aggregate(records: &[EvalRecord], grouping: Grouping) -> Vec<(String, AccuracyCell)> {
    let mut counts: HashMap<String, (u64, u64, u64)> = HashMap::new();
    for r in records {
        if let Some(key) = grouping.key_of(r) {
            let e = counts.entry(key).or_default();
            e.0 += r.correct as u64;
            e.1 += 1;
            e.2 += (r.step == ParseStep::Failed) as u64;
        }
    }
    grouping
        .keys()
        .into_iter()
        .map(|key| {
            let (k, n, f) = counts.get(&key).copied().unwrap_or_default();
            (key, AccuracyCell::from_counts(k, n, f))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    NoDiscordance,
    ExactBinomial,
    ChiSquareCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Questions only the first run got right.
    pub b: u64,
    /// Questions only the second run got right.
    pub c: u64,
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub method: McNemarMethod,
}

fn ln_choose(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// Two-sided exact binomial p-value for `b` successes in `b + c` fair trials.
pub fn exact_binomial_two_sided(b: u64, c: u64) -> f64 {
    let n = b + c;
    let m = b.min(c);
    let tail: f64 = (0..=m).map(|i| (ln_choose(n, i) - n as f64 * std::f64::consts::LN_2).exp()).sum();
    (2.0 * tail).min(1.0)
}

pub fn mcnemar_counts(b: u64, c: u64) -> McNemar {
    let n = b + c;
    if n == 0 {
        return McNemar {
            b,
            c,
            statistic: None,
            p_value: 1.0,
            method: McNemarMethod::NoDiscordance,
        };
    }
    if n < MCNEMAR_EXACT_BELOW {
        return McNemar {
            b,
            c,
            statistic: None,
            p_value: exact_binomial_two_sided(b, c),
            method: McNemarMethod::ExactBinomial,
        };
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let stat = diff.max(0.0).powi(2) / n as f64;
    let p = 1.0 - ChiSquared::new(1.0).expect("one degree of freedom").cdf(stat);
    McNemar {
        b,
        c,
        statistic: Some(stat),
        p_value: p,
        method: McNemarMethod::ChiSquareCorrected,
    }
}

/// Paired comparison of two scored runs over the same questions.
pub fn mcnemar(a: &[EvalRecord], b: &[EvalRecord]) -> Result<McNemar> {
    let map_a: HashMap<&str, bool> = a.iter().map(|r| (r.question_id.as_str(), r.correct)).collect();
    let map_b: HashMap<&str, bool> = b.iter().map(|r| (r.question_id.as_str(), r.correct)).collect();
    let ids_a: BTreeSet<&str> = map_a.keys().copied().collect();
    let ids_b: BTreeSet<&str> = map_b.keys().copied().collect();
    if ids_a != ids_b || map_a.len() != a.len() || map_b.len() != b.len() {
        return Err(Error::Metrics("mcnemar needs both runs to cover the same questions".into()));
    }
    let (mut only_a, mut only_b) = (0, 0);
    for id in ids_a {
        match (map_a[id], map_b[id]) {
            (true, false) => only_a += 1,
            (false, true) => only_b += 1,
            _ => {}
        }
    }
    Ok(mcnemar_counts(only_a, only_b))
}

pub const FAILED_LABEL: &str = "Failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub property: Property,
    /// Row labels (truths); columns are these plus a final failed column.
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Row-normalised counts; rows without records are all zero.
    pub proportions: Vec<Vec<f64>>,
}

fn closed_labels(property: Property, records: &[EvalRecord]) -> Vec<String> {
    match property {
        Property::Style => FontStyle::ALL.iter().map(|s| s.label().to_string()).collect(),
        Property::Color => PALETTE.iter().map(|c| c.name.to_string()).collect(),
        Property::Size => SIZES_PT.iter().map(|&s| size_label(s)).collect(),
        Property::Family => {
            let set: BTreeSet<String> = records
                .iter()
                .flat_map(|r| std::iter::once(r.truth_label.clone()).chain(r.predicted_label.clone()))
                .collect();
            set.into_iter().collect()
        }
    }
}

pub fn confusion_matrix(records: &[EvalRecord], property: Property) -> ConfusionMatrix {
    let relevant: Vec<&EvalRecord> = records.iter().filter(|r| r.property == property).collect();
    let owned: Vec<EvalRecord> = relevant.iter().map(|r| (*r).clone()).collect();
    let labels = closed_labels(property, &owned);
    let pos: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let cols = labels.len() + 1;
    let mut counts = vec![vec![0u64; cols]; labels.len()];
    for r in relevant {
        let Some(&row) = pos.get(r.truth_label.as_str()) else { continue };
        let col = r
            .predicted_label
            .as_deref()
            .and_then(|p| pos.get(p).copied())
            .unwrap_or(labels.len());
        counts[row][col] += 1;
    }
    let proportions = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
        })
        .collect();
    ConfusionMatrix {
        property,
        labels,
        counts,
        proportions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: usize, property: Property, correct: bool) -> EvalRecord {
        EvalRecord {
            question_id: format!("q{id}"),
            property,
            difficulty: Difficulty::ALL[id % 3],
            script: Script::ALL[id % 4],
            size_bucket: (property == Property::Size).then_some(SizeBucket::Small),
            truth_index: 0,
            truth_label: "Regular".into(),
            choice: Some(if correct { 0 } else { 1 }),
            predicted_label: Some(if correct { "Regular" } else { "Bold" }.into()),
            step: ParseStep::ExactLetter,
            correct,
            chance_baseline: 0.25,
        }
    }

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn wilson_golden_values() {
        let (lo, hi) = wilson_interval(667, 1000, 0.95).unwrap();
        assert_eq!((round3(lo), round3(hi)), (0.637, 0.696));
        let (lo, hi) = wilson_interval(242, 1000, 0.95).unwrap();
        assert_eq!((round3(lo), round3(hi)), (0.216, 0.270));
        let (lo, hi) = wilson_interval(500, 1000, 0.95).unwrap();
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(wilson_interval(0, 0, 0.95).is_err());
        // general confidence uses the normal quantile
        let (lo90, hi90) = wilson_interval(500, 1000, 0.90).unwrap();
        assert!(hi90 - lo90 < hi - lo);
    }

    #[test]
    fn mcnemar_regimes() {
        let m = mcnemar_counts(30, 5);
        assert_eq!(m.method, McNemarMethod::ChiSquareCorrected);
        assert!((m.statistic.unwrap() - 576.0 / 35.0).abs() < 1e-12);
        assert!(m.p_value < 0.001);
        // independent tail: chi-square(1) sf(x) = erfc(sqrt(x/2))
        let expected = statrs::function::erf::erfc((576.0f64 / 35.0 / 2.0).sqrt());
        assert!((m.p_value - expected).abs() < 1e-12);
        let e = mcnemar_counts(3, 2);
        assert_eq!(e.method, McNemarMethod::ExactBinomial);
        // 2 * (1 + 5 + 10) / 32 = 1.0
        assert!((e.p_value - 1.0).abs() < 1e-12);
        assert!(mcnemar_counts(0, 8).p_value < 0.01);
        assert_eq!(mcnemar_counts(0, 0).p_value, 1.0);
    }

    #[test]
    fn mcnemar_identical_and_mismatched() {
        let a: Vec<EvalRecord> = (0..10).map(|i| rec(i, Property::Style, i % 2 == 0)).collect();
        let m = mcnemar(&a, &a).unwrap();
        assert_eq!((m.b, m.c, m.p_value), (0, 0, 1.0));
        assert!(mcnemar(&a, &a[..5]).is_err());
    }

    #[test]
    fn aggregation_partitions() {
        let recs: Vec<EvalRecord> = (0..40).map(|i| rec(i, Property::ALL[i % 4], i % 3 == 0)).collect();
        for g in [Grouping::Property, Grouping::Difficulty, Grouping::ScriptGroup, Grouping::Script] {
            let total: u64 = aggregate(&recs, g).iter().map(|(_, c)| c.n).sum();
            assert_eq!(total, 40, "{g:?}");
        }
        let overall = aggregate(&recs, Grouping::Overall);
        assert_eq!(overall[0].1.n, 40);
        assert_eq!(aggregate(&recs, Grouping::SizeBucket).iter().map(|(_, c)| c.n).sum::<u64>(), 10);
        let single = aggregate(&recs[..1], Grouping::Overall);
        assert!(matches!(single[0].1.accuracy, Some(a) if a == 0.0 || a == 1.0));
        assert!(aggregate(&[], Grouping::Property).iter().all(|(_, c)| c.accuracy.is_none()));
    }

    #[test]
    fn confusion_rows() {
        let mut recs: Vec<EvalRecord> = (0..8).map(|i| rec(i, Property::Style, i < 6)).collect();
        recs[7].choice = None;
        recs[7].predicted_label = None;
        recs[7].step = ParseStep::Failed;
        let m = confusion_matrix(&recs, Property::Style);
        assert_eq!(m.labels.len(), 4);
        let row = &m.proportions[0];
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.counts[0], vec![6, 1, 0, 0, 1]);
        assert!(m.proportions[1..].iter().all(|r| r.iter().all(|v| *v == 0.0)));
    }

    proptest! {
        #[test]
        fn wilson_contains_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as u64;
            let (lo, hi) = wilson_interval(k, n, 0.95).unwrap();
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        }

        #[test]
        fn wilson_shrinks_with_n(n in 2u64..2000, frac in 0.01f64..0.99) {
            let k = ((n as f64) * frac).round().clamp(1.0, (n - 1) as f64) as u64;
            let (lo1, hi1) = wilson_interval(k, n, 0.95).unwrap();
            let (lo2, hi2) = wilson_interval(2 * k, 2 * n, 0.95).unwrap();
            prop_assert!(hi2 - lo2 < hi1 - lo1);
        }

        #[test]
        fn mcnemar_symmetry(b in 0u64..60, c in 0u64..60) {
            let x = mcnemar_counts(b, c);
            let y = mcnemar_counts(c, b);
            prop_assert_eq!((x.b, x.c), (y.c, y.b));
            prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
        }
    }
}
