use std::collections::HashSet;
use std::sync::OnceLock;

/// Lowercases, drops URLs and `@mentions`, turns punctuation other than `#`
/// into separators and splits on whitespace. Apostrophes are deleted so
/// contractions stay one token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        let trimmed = lower.trim_start_matches(|c: char| !(c.is_alphanumeric() || c == '#' || c == '@'));
        if trimmed.starts_with('@') || is_url(trimmed) {
            continue;
        }
        let mut cur = String::new();
        for c in trimmed.chars() {
            if c.is_alphanumeric() || c == '#' {
                cur.push(c);
            } else if c == '\'' || c == '\u{2019}' {
                // don't -> dont
            } else {
                push_token(&mut out, &mut cur);
            }
        }
        push_token(&mut out, &mut cur);
    }
    out
}

fn push_token(out: &mut Vec<String>, cur: &mut String) {
    if cur.chars().any(char::is_alphanumeric) {
        out.push(std::mem::take(cur));
    } else {
        cur.clear();
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://") || s.starts_with("www.")
}

/// The English stopword list shipped with the crate.
pub fn default_stopwords() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_word_list(include_str!("../../data/stopwords.txt")))
}

/// One word per line; blank lines and `//` comments ignored.
pub fn parse_word_list(body: &str) -> HashSet<String> {
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("//"))
        .map(str::to_lowercase)
        .collect()
}
