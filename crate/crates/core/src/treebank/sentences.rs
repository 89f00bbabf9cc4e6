use super::{DiscourseTree, SENTENCE_MARKER};

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201D}', '\u{2019}', '`'];

/// True when `text` closes a sentence: it ends in `.`, `!` or `?`, possibly
/// followed by closing quotes or brackets, or it carries the SciDTB
/// sentence marker.
pub fn ends_sentence(text: &str) -> bool {
    let t = text.trim_end();
    if t.ends_with(SENTENCE_MARKER) {
        return true;
    }
    let t = t.trim_end_matches(|c: char| CLOSERS.contains(&c) || c.is_whitespace());
    // PTB-style closing quote
    let t = t.strip_suffix("''").map_or(t, str::trim_end);
    t.ends_with(['.', '!', '?'])
}

/// Assigns sentence indices in document order. The ROOT keeps index 0.
pub fn derive_sentence_indices(mut tree: DiscourseTree) -> DiscourseTree {
    let mut sentence = 0;
    for edu in tree.edus.iter_mut() {
        if edu.is_root() {
            edu.sentence_index = 0;
            continue;
        }
        edu.sentence_index = sentence;
        if ends_sentence(&edu.text) {
            sentence += 1;
        }
    }
    tree
}
