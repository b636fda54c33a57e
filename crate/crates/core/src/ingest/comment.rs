use super::DropReason;

/// Substrings that mark a revision comment as being about layout, media or
/// discussion rather than the prose itself. Matched against the lowercased
/// comment.
pub const BLACKLIST: [&str; 12] = [
    "template", "image", "infobox", "pic", "link", "photo", "comment", "http:", "https:", ".jpg", ".png",
    "reply",
];

/// Wiki policy shortcuts replaced by their plain-language meaning.
pub const SHORTCUTS: [(&str, &str); 4] = [
    ("[[WP:NPOV|POV]]", "neutral point of view"),
    ("[[WP:TYPO]]", "typo"),
    ("[[WP:RS]]", "reliable sources"),
    ("[[WP:SYN]]", "synthesis"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommentDisposition {
    Keep(String),
    Drop(DropReason),
}

/// Decides whether a revision comment is usable and normalizes it.
///
/// Normalization expands [`SHORTCUTS`] and collapses whitespace.
pub fn filter_comment(comment: &str) -> CommentDisposition {
    let lower = comment.to_lowercase();
    if let Some(term) = BLACKLIST.iter().find(|t| lower.contains(*t)) {
        return CommentDisposition::Drop(DropReason::Blacklist(term));
    }
    let mut text = comment.to_string();
    for (short, long) in SHORTCUTS {
        text = text.replace(short, long);
    }
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() {
        CommentDisposition::Drop(DropReason::EmptyComment)
    } else {
        CommentDisposition::Keep(text)
    }
}
