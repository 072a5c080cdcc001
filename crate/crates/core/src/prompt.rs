//! Evaluation prompt text for a multiple-choice question.

use crate::mcq::Question;

pub const MIN_OPTIONS: usize = 2;
pub const MAX_OPTIONS: usize = 26;

pub fn option_letter(index: usize) -> char {
    assert!(index < MAX_OPTIONS, "option index {index} has no letter");
    (b'A' + index as u8) as char
}

/// "(A or B)", "(A, B, C, or D)", ...
fn letter_enumeration(n: usize) -> String {
    let letters: Vec<String> = (0..n).map(|i| option_letter(i).to_string()).collect();
    match letters.as_slice() {
        [a, b] => format!("({a} or {b})"),
        [init @ .., last] => format!("({}, or {last})", init.join(", ")),
        [] => String::new(),
    }
}

pub fn build_prompt_parts(question_text: &str, options: &[String]) -> String {
    assert!(
        (MIN_OPTIONS..=MAX_OPTIONS).contains(&options.len()),
        "prompts need {MIN_OPTIONS} to {MAX_OPTIONS} options, got {}",
        options.len()
    );
    let mut out = String::from("Look at this image and answer the following question.\n\n");
    out.push_str("Question: ");
    out.push_str(question_text);
    out.push_str("\n\nOptions:\n");
    for (i, opt) in options.iter().enumerate() {
        out.push(option_letter(i));
        out.push_str(". ");
        out.push_str(opt);
        out.push('\n');
    }
    out.push_str("\nRespond with only the letter ");
    out.push_str(&letter_enumeration(options.len()));
    out.push_str(" of your answer.");
    out
}

pub fn build_prompt(question: &Question) -> String {
    build_prompt_parts(&question.prompt, &question.options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("opt{i}")).collect()
    }

    #[test]
    fn four_option_template() {
        let options = ["Arial", "Georgia", "Menlo", "Futura"].map(String::from);
        let p = build_prompt_parts("What font family is used in this image?", &options);
        assert_eq!(
            p,
            "Look at this image and answer the following question.\n\nQuestion: What font family is used in this image?\n\nOptions:\nA. Arial\nB. Georgia\nC. Menlo\nD. Futura\n\nRespond with only the letter (A, B, C, or D) of your answer."
        );
    }

    #[test]
    fn two_and_fifteen_options() {
        assert!(build_prompt_parts("Q?", &opts(2)).ends_with("Respond with only the letter (A or B) of your answer."));
        let p = build_prompt_parts("Q?", &opts(15));
        assert!(p.contains("O. opt14\n"));
        assert!(p.ends_with("(A, B, C, D, E, F, G, H, I, J, K, L, M, N, or O) of your answer."));
    }

    #[test]
    #[should_panic]
    fn one_option_rejected() {
        build_prompt_parts("Q?", &opts(1));
    }
}
