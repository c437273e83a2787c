//! Tokenization and the bundled English stopword list.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Splits text on non-alphanumeric boundaries.
///
/// Runs of letters and runs of digits become separate tokens, so `"350F"`
/// yields `["350", "F"]` and `"don't"` yields `["don", "t"]`. Case is kept;
/// callers lowercase as needed.
pub fn tokenize(text: &str) -> Vec<&str> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Letter,
        Digit,
    }
    let classify = |c: char| {
        if c.is_numeric() {
            Some(Class::Digit)
        } else if c.is_alphanumeric() {
            Some(Class::Letter)
        } else {
            None
        }
    };

    let mut out = Vec::new();
    let mut start: Option<(usize, Class)> = None;
    for (i, c) in text.char_indices() {
        let class = classify(c);
        match (start, class) {
            (Some((s, prev)), Some(cur)) if prev != cur => {
                out.push(&text[s..i]);
                start = Some((i, cur));
            }
            (Some((s, _)), None) => {
                out.push(&text[s..i]);
                start = None;
            }
            (None, Some(cur)) => start = Some((i, cur)),
            _ => {}
        }
    }
    if let Some((s, _)) = start {
        out.push(&text[s..]);
    }
    out
}

/// Lowercased tokens.
pub fn tokenize_lower(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(str::to_lowercase).collect()
}

pub fn is_number_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(char::is_numeric)
}

const STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// The bundled English stopword list (lowercase).
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}
