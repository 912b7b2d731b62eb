//! Answer matching rules.

/// Lowercase, trim, collapse whitespace and strip trailing punctuation.
pub fn canonical(text: &str) -> String {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_end_matches(['.', '!', '?', ',', ';', ':']).trim_end().to_string()
}

/// Leading "yes" or "no" token, if any.
pub fn leading_yes_no(canon: &str) -> Option<&'static str> {
    let first: String = canon.chars().take_while(|c| c.is_alphanumeric()).collect();
    match first.as_str() {
        "yes" => Some("yes"),
        "no" => Some("no"),
        _ => None,
    }
}

/// Option letter at the start of an answer: `c`, `(c)`, `c)`, `c.`, `c:`
/// or `option c`, alone or followed by a space.
fn leading_letter(canon: &str) -> Option<usize> {
    let s = canon.strip_prefix("option ").unwrap_or(canon);
    let b = s.as_bytes();
    let (letter, after) = if b.len() >= 3 && b[0] == b'(' && b[2] == b')' {
        (b[1], &b[3..])
    } else if b.len() == 1 || (b.len() >= 2 && matches!(b[1], b')' | b'.' | b':')) {
        (b[0], &b[b.len().min(2)..])
    } else {
        return None;
    };
    if !(after.is_empty() || after[0] == b' ') || !letter.is_ascii_lowercase() {
        return None;
    }
    Some(usize::from(letter - b'a'))
}

/// Canonical form used for matching.
///
/// With `yes_no`, a leading yes or no token is the whole answer. With
/// `choices`, the answer resolves to a choice by full text first, then by a
/// leading option letter (lists of at most 26 options).
pub fn normalize_answer(text: &str, choices: Option<&[String]>, yes_no: bool) -> String {
    let canon = canonical(text);
    if yes_no {
        if let Some(t) = leading_yes_no(&canon) {
            return t.to_string();
        }
    }
    if let Some(choices) = choices {
        if let Some(c) = choices.iter().find(|c| canonical(c) == canon) {
            return canonical(c);
        }
        if choices.len() <= 26 {
            if let Some(c) = leading_letter(&canon).and_then(|i| choices.get(i)) {
                return canonical(c);
            }
        }
        // full option text after a letter, e.g. "(c) right side" with a mismatched letter
        if let Some(c) = choices.iter().find(|c| {
            let cc = canonical(c);
            canon.len() > cc.len() && canon.ends_with(&cc) && canon[..canon.len() - cc.len()].trim().starts_with('(')
        }) {
            return canonical(c);
        }
    }
    canon
}

const COLOR_SYNONYMS: [(&str, &str); 3] = [("grey", "gray"), ("colour", "color"), ("violet", "purple")];

/// First color word in the text, with the synonym table applied.
pub fn first_color(text: &str) -> Option<String> {
    canonical(text)
        .split(|c: char| !c.is_alphanumeric())
        .map(|t| COLOR_SYNONYMS.iter().find(|(a, _)| *a == t).map_or(t, |(_, b)| b))
        .find(|t| crate::captioner::COLOR_LEXICON.contains(t))
        .map(str::to_string)
}
