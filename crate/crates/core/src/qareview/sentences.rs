//! Caption segmentation into sentences.

use std::ops::Range;

const ABBREVIATIONS: [&str; 10] = ["e.g", "i.e", "approx", "vs", "fig", "dr", "mr", "mrs", "ms", "cf"];

fn is_abbreviation(word: &str) -> bool {
    let w = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    // initials such as "U.S" or "e.g"
    ABBREVIATIONS.contains(&w.as_str()) || (w.contains('.') && w.split('.').all(|p| p.chars().count() == 1))
}

/// Byte ranges of the sentences in `caption`. Only whitespace lies between
/// consecutive ranges and around them.
pub fn sentence_spans(caption: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = caption.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = None;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if start.is_none() {
            if !c.is_whitespace() {
                start = Some(pos);
            }
            i += 1;
            continue;
        }
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        if c == '.' {
            let prev = i.checked_sub(1).map(|j| chars[j].1);
            let next = chars.get(i + 1).map(|x| x.1);
            if prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit()) {
                i += 1;
                continue;
            }
            let word_start = caption[..pos].rfind(char::is_whitespace).map_or(0, |w| w + 1);
            let s = start.expect("inside a sentence");
            if is_abbreviation(&caption[word_start.max(s)..pos]) {
                i += 1;
                continue;
            }
        }
        // absorb runs like "?!" and closing quotes or brackets
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '”' | '’') {
            j += 1;
        }
        if j < chars.len() && !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let end = chars.get(j).map_or(caption.len(), |x| x.0);
        spans.push(start.take().expect("inside a sentence")..end);
        i = j;
    }
    if let Some(s) = start {
        let end = caption.trim_end().len();
        spans.push(s..end);
    }
    spans
}

pub fn split_sentences(caption: &str) -> Vec<String> {
    sentence_spans(caption).into_iter().map(|r| caption[r].to_string()).collect()
}
