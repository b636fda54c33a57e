//! Token-level transforms and their detection.

use super::tags::{EditTag, TagSet, Transform};
use super::verbs;
use super::EditOpsError;

const IRREGULAR_NOUNS: &[(&str, &str)] = &[
    ("child", "children"),
    ("man", "men"),
    ("woman", "women"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("mouse", "mice"),
    ("person", "people"),
];

fn inapplicable(t: Transform, token: &str) -> EditOpsError {
    EditOpsError::InapplicableTransform {
        tag: t.name(),
        token: token.to_string(),
    }
}

fn map_char_at(token: &str, idx: usize, upper: bool) -> Option<String> {
    let chars: Vec<char> = token.chars().collect();
    if idx >= chars.len() {
        return None;
    }
    let mut out = String::with_capacity(token.len());
    for (i, c) in chars.iter().enumerate() {
        if i == idx {
            if upper {
                out.extend(c.to_uppercase());
            } else {
                out.extend(c.to_lowercase());
            }
        } else {
            out.push(*c);
        }
    }
    Some(out)
}

fn match_case(pattern: &str, word: &str) -> String {
    if pattern.chars().next().is_some_and(char::is_uppercase) {
        let mut cs = word.chars();
        match cs.next() {
            Some(f) => f.to_uppercase().chain(cs).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

fn ends_with_letter(token: &str) -> bool {
    token.chars().last().is_some_and(|c| c.is_ascii_alphabetic())
}

fn pluralize(token: &str) -> Option<String> {
    if !ends_with_letter(token) {
        return None;
    }
    let lower = token.to_lowercase();
    if let Some((_, pl)) = IRREGULAR_NOUNS.iter().find(|(sg, _)| *sg == lower) {
        return Some(match_case(token, pl));
    }
    if IRREGULAR_NOUNS.iter().any(|(_, pl)| *pl == lower) {
        return None;
    }
    let out = if ["s", "x", "z", "ch", "sh"].iter().any(|e| lower.ends_with(e)) {
        format!("{token}es")
    } else if lower.len() >= 2
        && lower.ends_with('y')
        && !matches!(lower.as_bytes()[lower.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u')
    {
        format!("{}ies", &token[..token.len() - 1])
    } else {
        format!("{token}s")
    };
    Some(out)
}

fn singularize(token: &str) -> Option<String> {
    if !ends_with_letter(token) {
        return None;
    }
    let lower = token.to_lowercase();
    if let Some((sg, _)) = IRREGULAR_NOUNS.iter().find(|(_, pl)| *pl == lower) {
        return Some(match_case(token, sg));
    }
    let n = token.len();
    if lower.ends_with("ies") && n > 3 {
        Some(format!("{}y", &token[..n - 3]))
    } else if ["sses", "xes", "zes", "ches", "shes"].iter().any(|e| lower.ends_with(e)) {
        Some(token[..n - 2].to_string())
    } else if lower.ends_with('s') && !lower.ends_with("ss") && n > 1 {
        Some(token[..n - 1].to_string())
    } else {
        None
    }
}

/// Applies `t` to `token` (and, for merges, the following token).
///
/// Returns the replacement tokens: one for most transforms, two for
/// `SPLIT_HYPHEN`. A rule that cannot fire or would leave the token
/// unchanged is an `InapplicableTransform` error.
pub fn apply_transform(
    t: Transform,
    token: &str,
    next: Option<&str>,
) -> Result<Vec<String>, EditOpsError> {
    let single = |s: Option<String>| -> Result<Vec<String>, EditOpsError> {
        match s {
            Some(out) if out != token && !out.is_empty() => Ok(vec![out]),
            _ => Err(inapplicable(t, token)),
        }
    };
    match t {
        Transform::CaseCapital => single(map_char_at(token, 0, true)),
        Transform::CaseCapital1 => single(map_char_at(token, 1, true)),
        Transform::CaseLower => single(Some(token.to_lowercase())),
        Transform::CaseUpper => single(Some(token.to_uppercase())),
        Transform::CaseUpperMinus1 => {
            let chars: Vec<char> = token.chars().collect();
            if chars.len() < 2 {
                return Err(inapplicable(t, token));
            }
            let (head, last) = chars.split_at(chars.len() - 1);
            let mut out: String = head.iter().flat_map(|c| c.to_uppercase()).collect();
            out.push(last[0]);
            single(Some(out))
        }
        Transform::AgreementPlural => single(pluralize(token)),
        Transform::AgreementSingular => single(singularize(token)),
        Transform::SplitHyphen => match token.split_once('-') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(vec![a.to_string(), b.to_string()]),
            _ => Err(inapplicable(t, token)),
        },
        Transform::MergeHyphen | Transform::MergeSpace => {
            let next = next.filter(|n| !n.is_empty()).ok_or_else(|| inapplicable(t, token))?;
            let sep = if t == Transform::MergeHyphen { "-" } else { "" };
            Ok(vec![format!("{token}{sep}{next}")])
        }
        Transform::Verb(from, to) => single(verbs::inflect(token, from, to)),
    }
}

/// How a source span maps onto target tokens under a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformMatch {
    pub tag: EditTag,
    /// Source tokens consumed.
    pub src_len: usize,
    /// Target tokens produced.
    pub tgt_len: usize,
}

/// Every transform of `tag_set` that rewrites the source span starting at
/// `src[i]` into the target span starting at `tgt[j]`, in detection
/// priority order. The coarse verb tag (slot-carrying) comes last.
pub fn transform_matches(
    src: &[String],
    i: usize,
    tgt: &[String],
    j: usize,
    tag_set: &TagSet,
) -> Vec<TransformMatch> {
    let mut out = Vec::new();
    if i >= src.len() || j >= tgt.len() {
        return out;
    }
    let next = src.get(i + 1).map(String::as_str);
    for t in tag_set.transforms() {
        if t.source_span() == 2 && next.is_none() {
            continue;
        }
        let Ok(produced) = apply_transform(t, &src[i], next) else {
            continue;
        };
        let k = produced.len();
        if j + k <= tgt.len() && produced[..] == tgt[j..j + k] {
            // identity spans are never transforms
            if t.source_span() == 1 && k == 1 && src[i] == tgt[j] {
                continue;
            }
            out.push(TransformMatch {
                tag: EditTag::Transform(t),
                src_len: t.source_span(),
                tgt_len: k,
            });
        }
    }
    if tag_set.has_coarse_verb() && src[i] != tgt[j] && verbs::detect_verb_change(&src[i], &tgt[j]).is_some() {
        out.push(TransformMatch {
            tag: EditTag::TransformVerb { slot: usize::MAX },
            src_len: 1,
            tgt_len: 1,
        });
    }
    out
}

/// The highest-priority transform mapping `src` to `tgt` (single tokens).
pub fn detect_transform(src: &str, tgt: &str, tag_set: &TagSet) -> Option<EditTag> {
    if src == tgt {
        return None;
    }
    for t in tag_set.transforms() {
        if t.source_span() != 1 {
            continue;
        }
        if let Ok(out) = apply_transform(t, src, None) {
            if out.len() == 1 && out[0] == tgt {
                return Some(EditTag::Transform(t));
            }
        }
    }
    if tag_set.has_coarse_verb() && verbs::detect_verb_change(src, tgt).is_some() {
        return Some(EditTag::TransformVerb { slot: 0 });
    }
    None
}
