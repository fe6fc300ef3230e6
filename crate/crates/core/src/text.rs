//! Deterministic sentence segmentation and word tokenization.
//!
//! The splitter is rule based: a sentence ends after a run of `.`, `!` or `?`
//! (plus any closing quotes or brackets) when it is followed by whitespace and
//! then an uppercase letter, an opening quote or a digit. A period that closes
//! one of the abbreviations in [`ABBREVIATIONS`] never ends a sentence.

/// Abbreviations whose trailing period is not a sentence boundary. Case sensitive.
pub const ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "St.", "No.", "U.S.", "e.g.", "i.e.", "etc.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// The whitespace-delimited word that ends right before byte offset `end`,
/// with leading opening punctuation removed.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    head[start..].trim_start_matches(is_opener)
}

/// Splits `text` into sentences. Empty or whitespace-only input yields no sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    let text = text.trim();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminal(chars[i].1) {
            i += 1;
        }
        let run_len = i - run_start;
        while i < chars.len() && is_closer(chars[i].1) {
            i += 1;
        }
        if i >= chars.len() {
            break;
        }
        let boundary = chars[i].0;
        if !chars[i].1.is_whitespace() {
            continue;
        }
        let mut j = i;
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        if j >= chars.len() {
            break;
        }
        let next = chars[j].1;
        if !(next.is_uppercase() || next.is_ascii_digit() || is_opener(next)) {
            continue;
        }
        if c == '.' && run_len == 1 {
            let period_end = chars[run_start].0 + 1;
            if ABBREVIATIONS.contains(&word_before(text, period_end)) {
                continue;
            }
        }
        let sentence = text[start..boundary].trim();
        if !sentence.is_empty() {
            sentences.push(sentence.to_string());
        }
        start = chars[j].0;
        i = j;
    }

    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

/// Lowercased alphanumeric runs. No stemming, no stopword removal.
pub fn word_tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
