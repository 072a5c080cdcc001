//! Four-step cascade mapping a free-text model response to an option index.

use serde::{Deserialize, Serialize};

/// Bumped whenever cascade behaviour changes; stamped into scored outputs.
pub const PARSER_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStep {
    ExactLetter,
    PunctuatedLetter,
    FirstValidLetter,
    OptionText,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub choice: Option<usize>,
    pub step: ParseStep,
}

impl ParseResult {
    fn hit(choice: usize, step: ParseStep) -> Self {
        ParseResult {
            choice: Some(choice),
            step,
        }
    }

    pub const FAILED: ParseResult = ParseResult {
        choice: None,
        step: ParseStep::Failed,
    };
}

fn letter_index(c: char, n_options: usize) -> Option<usize> {
    if c.is_ascii_uppercase() {
        let i = (c as u8 - b'A') as usize;
        (i < n_options).then_some(i)
    } else {
        None
    }
}

fn single_letter(s: &str, n: usize) -> Option<usize> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => letter_index(c, n),
        _ => None,
    }
}

fn punctuated_letter(s: &str, n: usize) -> Option<usize> {
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        return single_letter(inner, n);
    }
    for suffix in [".", ")", ":", "-"] {
        if let Some(inner) = s.strip_suffix(suffix) {
            if let Some(i) = single_letter(inner.trim_end(), n) {
                return Some(i);
            }
        }
    }
    None
}

/// First uppercase valid letter whose neighbours are not alphanumeric.
fn first_standalone_letter(s: &str, n: usize) -> Option<usize> {
    let chars: Vec<char> = s.chars().collect();
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    for (i, &c) in chars.iter().enumerate() {
        let Some(idx) = letter_index(c, n) else { continue };
        let before_ok = i == 0 || !is_word(chars[i - 1]);
        let after_ok = i + 1 == chars.len() || !is_word(chars[i + 1]);
        if before_ok && after_ok {
            return Some(idx);
        }
    }
    None
}

/// Option whose display string occurs in the response. When several occur,
/// the longest wins; equal-length ties fail.
fn option_text(s: &str, options: &[String]) -> Option<usize> {
    let hay = s.to_lowercase();
    let mut contained: Vec<(usize, usize)> = options
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.is_empty() && hay.contains(&o.to_lowercase()))
        .map(|(i, o)| (o.chars().count(), i))
        .collect();
    contained.sort_by_key(|c| std::cmp::Reverse(c.0));
    match contained.as_slice() {
        [] => None,
        [(_, i)] => Some(*i),
        [(la, i), (lb, _), ..] => (la > lb).then_some(*i),
    }
}

pub fn parse(raw: &str, options: &[String]) -> ParseResult {
    let n = options.len();
    let s = raw.trim();
    if let Some(i) = single_letter(s, n) {
        return ParseResult::hit(i, ParseStep::ExactLetter);
    }
    if let Some(i) = punctuated_letter(s, n) {
        return ParseResult::hit(i, ParseStep::PunctuatedLetter);
    }
    if let Some(i) = first_standalone_letter(s, n) {
        return ParseResult::hit(i, ParseStep::FirstValidLetter);
    }
    if let Some(i) = option_text(s, options) {
        return ParseResult::hit(i, ParseStep::OptionText);
    }
    ParseResult::FAILED
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four() -> Vec<String> {
        ["Arial", "Georgia", "Menlo", "Helvetica"].map(String::from).to_vec()
    }

    #[test]
    fn letter_bounds_follow_option_count() {
        assert_eq!(parse("E", &four()), ParseResult::FAILED);
        assert_eq!(parse("D", &four()).choice, Some(3));
    }

    #[test]
    fn lowercase_never_matches_letter_steps() {
        assert_eq!(parse("the answer", &four()), ParseResult::FAILED);
        assert_eq!(parse("a", &four()), ParseResult::FAILED);
    }

    #[test]
    fn longest_option_text_wins() {
        let opts = ["Helvetica", "Helvetica Neue", "Arial", "Futura"].map(String::from);
        let r = parse("it looks like helvetica neue to me", &opts);
        assert_eq!(r, ParseResult::hit(1, ParseStep::OptionText));
        let tie = ["Red", "Tan", "Blue", "Green"].map(String::from);
        assert_eq!(parse("red or tan", &tie), ParseResult::FAILED);
    }

    proptest! {
        #[test]
        fn choice_present_iff_not_failed(raw in ".{0,40}", n in 2usize..=26) {
            let opts: Vec<String> = (0..n).map(|i| format!("option number {i}")).collect();
            let r = parse(&raw, &opts);
            prop_assert_eq!(r.choice.is_some(), r.step != ParseStep::Failed);
            if let Some(c) = r.choice {
                prop_assert!(c < n);
            }
            prop_assert_eq!(r, parse(&raw, &opts));
        }
    }
}
