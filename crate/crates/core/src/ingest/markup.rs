/// Best-effort wikitext to plain text.
///
/// Removes templates, comments, `<ref>` blocks, HTML tags, bold/italic
/// quotes, heading and list markers, table rows and bare URLs. Internal
/// links keep their display text (file, image and category links vanish);
/// external links keep their anchor text. Unbalanced constructs are passed
/// through verbatim. Whitespace is otherwise left untouched.
pub fn strip_markup(wikitext: &str) -> String {
    let chars: Vec<char> = wikitext.chars().collect();
    let inline = scan(&chars);
    let mut out = String::with_capacity(inline.len());
    for (i, line) in inline.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&clean_line(line));
    }
    decode_entities(&out)
}

fn clean_line(line: &str) -> String {
    let t = line.trim();
    if t.starts_with("{|") || t.starts_with("|}") || t.starts_with('|') || t.starts_with('!') {
        return String::new();
    }
    if t.len() >= 2 && t.starts_with('=') && t.ends_with('=') {
        return t.trim_matches('=').trim().to_string();
    }
    if t.starts_with(['*', '#', ':', ';']) {
        return t.trim_start_matches(['*', '#', ':', ';']).trim_start().to_string();
    }
    line.to_string()
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    s.replace("&nbsp;", " ")
        .replace("&ndash;", "\u{2013}")
        .replace("&mdash;", "\u{2014}")
        .replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

fn starts_with(chars: &[char], i: usize, pat: &str) -> bool {
    let mut k = i;
    for p in pat.chars() {
        match chars.get(k) {
            Some(c) if *c == p => k += 1,
            _ => return false,
        }
    }
    true
}

fn starts_with_ci(chars: &[char], i: usize, pat: &str) -> bool {
    let mut k = i;
    for p in pat.chars() {
        match chars.get(k) {
            Some(c) if c.to_ascii_lowercase() == p => k += 1,
            _ => return false,
        }
    }
    true
}

fn find(chars: &[char], from: usize, pat: &str) -> Option<usize> {
    (from..chars.len()).find(|&k| starts_with(chars, k, pat))
}

fn find_ci(chars: &[char], from: usize, pat: &str) -> Option<usize> {
    (from..chars.len()).find(|&k| starts_with_ci(chars, k, pat))
}

/// Index just past the delimiter that closes `open` at `i`, honouring
/// nesting of the same delimiter pair.
fn balanced_end(chars: &[char], i: usize, open: &str, close: &str) -> Option<usize> {
    let (ol, cl) = (open.chars().count(), close.chars().count());
    let mut depth = 0usize;
    let mut k = i;
    while k < chars.len() {
        if starts_with(chars, k, open) {
            depth += 1;
            k += ol;
        } else if starts_with(chars, k, close) {
            depth -= 1;
            k += cl;
            if depth == 0 {
                return Some(k);
            }
        } else {
            k += 1;
        }
    }
    None
}

const DROPPED_NAMESPACES: [&str; 3] = ["file:", "image:", "category:"];

fn link_text(inner: &[char]) -> String {
    let lower: String = inner.iter().collect::<String>().trim_start().to_lowercase();
    if DROPPED_NAMESPACES.iter().any(|ns| lower.starts_with(ns)) {
        return String::new();
    }
    // display text follows the last top-level pipe
    let mut depth = 0i32;
    let mut split = None;
    for (k, c) in inner.iter().enumerate() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            '|' if depth == 0 => split = Some(k),
            _ => {}
        }
    }
    let shown = match split {
        Some(k) => &inner[k + 1..],
        None => inner,
    };
    scan(shown)
}

fn scan(chars: &[char]) -> String {
    let mut out = String::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if starts_with(chars, i, "<!--") {
            i = find(chars, i + 4, "-->").map_or(chars.len(), |k| k + 3);
            continue;
        }
        if starts_with(chars, i, "{{") {
            if let Some(end) = balanced_end(chars, i, "{{", "}}") {
                i = end;
                continue;
            }
        }
        if starts_with(chars, i, "[[") {
            if let Some(end) = balanced_end(chars, i, "[[", "]]") {
                out.push_str(&link_text(&chars[i + 2..end - 2]));
                i = end;
                continue;
            }
        }
        if c == '[' && (starts_with(chars, i + 1, "http://") || starts_with(chars, i + 1, "https://") || starts_with(chars, i + 1, "//")) {
            if let Some(end) = (i + 1..chars.len()).find(|&k| chars[k] == ']' || chars[k] == '\n') {
                if chars[end] == ']' {
                    let inner = &chars[i + 1..end];
                    if let Some(sp) = inner.iter().position(|ch| *ch == ' ') {
                        out.push_str(&scan(&inner[sp + 1..]));
                    }
                    i = end + 1;
                    continue;
                }
            }
        }
        if starts_with_ci(chars, i, "<ref") && matches!(chars.get(i + 4), Some('>' | ' ' | '/')) {
            if let Some(gt) = find(chars, i, ">") {
                if chars[gt - 1] == '/' {
                    i = gt + 1;
                    continue;
                }
                if let Some(close) = find_ci(chars, gt, "</ref>") {
                    i = close + 6;
                    continue;
                }
            }
        }
        if c == '<' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic() || *n == '/') {
            if let Some(gt) = (i + 1..chars.len()).find(|&k| chars[k] == '>' || chars[k] == '<') {
                if chars[gt] == '>' {
                    i = gt + 1;
                    continue;
                }
            }
        }
        if c == '\'' && chars.get(i + 1) == Some(&'\'') {
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            continue;
        }
        let at_word_start = i == 0 || chars[i - 1].is_whitespace();
        if at_word_start && (starts_with(chars, i, "http://") || starts_with(chars, i, "https://")) {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}
