//! Token helpers shared by the cue baseline and connective matching.

/// Lowercases `token` and strips leading and trailing punctuation.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation() || is_unicode_punct(c))
        .to_lowercase()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}'
    )
}

/// Normalized whitespace tokens of `text`, dropping tokens that were pure
/// punctuation.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

/// First normalized token of `text`, skipping punctuation-only tokens.
pub fn first_token(text: &str) -> Option<String> {
    text.split_whitespace()
        .map(normalize_token)
        .find(|t| !t.is_empty())
}
