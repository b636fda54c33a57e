/// Lowercased words whose trailing period never ends a sentence.
const ABBREVIATIONS: [&str; 24] = [
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.", "vs.", "e.g.", "i.e.", "etc.", "u.s.",
    "u.k.", "no.", "inc.", "ltd.", "co.", "corp.", "gen.", "col.", "lt.", "approx.",
];

const CLOSERS: [char; 4] = ['"', '\'', ')', '\u{201d}'];

fn is_boundary(prev_word: &str) -> bool {
    let word = prev_word.trim_start_matches(['(', '"', '\'', '\u{201c}']);
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return false;
    }
    // single initials such as "J."
    let core: Vec<char> = word.chars().collect();
    !(core.len() == 2 && core[0].is_uppercase() && core[1] == '.')
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '\u{201c}' | '(')
}

/// Rule-based sentence splitter.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes or
/// parentheses) when followed by whitespace and a character that can start
/// a sentence, unless the word carrying the period is a known abbreviation
/// or a single initial. Line breaks always end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut out);
    }
    out
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = line.chars().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && (matches!(chars[end], '.' | '!' | '?') || CLOSERS.contains(&chars[end])) {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].is_whitespace() {
                next += 1;
            }
            if next > end && next < chars.len() && starts_sentence(chars[next]) {
                let word_start = (start..i).rev().find(|&k| chars[k].is_whitespace()).map_or(start, |k| k + 1);
                let word: String = chars[word_start..=i].iter().collect();
                if chars[i] != '.' || is_boundary(&word) {
                    push_trimmed(&chars[start..end], out);
                    start = next;
                }
            }
            i = end;
        } else {
            i += 1;
        }
    }
    push_trimmed(&chars[start..], out);
}

fn push_trimmed(chars: &[char], out: &mut Vec<String>) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        assert_eq!(split_sentences("A b. C d."), vec!["A b.", "C d."]);
        assert_eq!(split_sentences("Dr. Smith left."), vec!["Dr. Smith left."]);
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn boundaries() {
        assert_eq!(split_sentences("It rose. 1990 was next!"), vec!["It rose.", "1990 was next!"]);
        assert_eq!(split_sentences("He said \"go.\" Then left."), vec!["He said \"go.\"", "Then left."]);
        assert_eq!(split_sentences("Made in the U.S. Army camp."), vec!["Made in the U.S. Army camp."]);
        assert_eq!(split_sentences("J. R. Tolkien wrote."), vec!["J. R. Tolkien wrote."]);
        assert_eq!(split_sentences("a. b"), vec!["a. b"]);
        assert_eq!(split_sentences("Title\nBody text. More"), vec!["Title", "Body text.", "More"]);
        assert_eq!(split_sentences("Version 2.5 is out."), vec!["Version 2.5 is out."]);
    }
}
