//! Mining sentence-level edit pairs from revision histories.
//!
//! A dump (MediaWiki XML export or JSONL of [`RawRevision`]s) is streamed
//! page by page. Each revision is paired with its parent, revisions with
//! uninformative comments are dropped, markup is stripped, the two documents
//! are aligned sentence by sentence and the resulting pairs are filtered.

mod comment;
mod dump;
mod filter;
mod markup;
mod pairs;
mod sentences;

use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use comment::{filter_comment, CommentDisposition, BLACKLIST, SHORTCUTS};
pub use dump::{detect_format, stream_pages, DumpFormat, Page, PageStream, RawRevision};
pub use filter::{filter_pair, length_ratio_ok, FilterConfig, PairDisposition};
pub use markup::strip_markup;
pub use pairs::{extract_sentence_pairs, RevisionPair};
pub use sentences::split_sentences;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed dump at byte {offset}: {message}")]
    MalformedDump { offset: u64, message: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: String,
    pub target: String,
    pub comment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<String>,
}

/// Why a revision or sentence pair was discarded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    EmptyComment,
    Blacklist(&'static str),
    NoParent,
    Identical,
    EmptySide,
    NumberOrTime,
    BleuBelowMin,
    BleuAboveMax,
    LengthRatio,
    CommentSimilarity,
}

impl DropReason {
    pub fn key(&self) -> String {
        match self {
            DropReason::EmptyComment => "empty_comment".into(),
            DropReason::Blacklist(t) => format!("blacklist:{t}"),
            DropReason::NoParent => "no_parent".into(),
            DropReason::Identical => "identical".into(),
            DropReason::EmptySide => "empty_side".into(),
            DropReason::NumberOrTime => "number_or_time".into(),
            DropReason::BleuBelowMin => "bleu_min".into(),
            DropReason::BleuAboveMax => "bleu_max".into(),
            DropReason::LengthRatio => "length_ratio".into(),
            DropReason::CommentSimilarity => "comment_similarity".into(),
        }
    }
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.key())
    }
}

/// Counters for one ingestion run. Every revision lands in exactly one of
/// `revisions_kept` / `revisions_dropped`, every extracted sentence pair in
/// exactly one of `pairs_kept` / `pairs_dropped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub pages: usize,
    pub revisions: usize,
    pub revisions_kept: usize,
    pub revisions_dropped: BTreeMap<String, usize>,
    pub pairs_extracted: usize,
    pub pairs_kept: usize,
    pub pairs_dropped: BTreeMap<String, usize>,
}

impl IngestStats {
    fn drop_revision(&mut self, reason: &DropReason) {
        *self.revisions_dropped.entry(reason.key()).or_insert(0) += 1;
    }

    fn drop_pair(&mut self, reason: &DropReason) {
        *self.pairs_dropped.entry(reason.key()).or_insert(0) += 1;
    }

    pub fn revisions_dropped_total(&self) -> usize {
        self.revisions_dropped.values().sum()
    }

    pub fn pairs_dropped_total(&self) -> usize {
        self.pairs_dropped.values().sum()
    }
}

enum RevisionOutcome {
    Dropped(DropReason),
    Kept(Vec<(SentencePair, PairDisposition)>),
}

fn process_revision(parent: Option<&RawRevision>, rev: &RawRevision, cfg: &FilterConfig) -> RevisionOutcome {
    let comment = match filter_comment(&rev.comment) {
        CommentDisposition::Keep(c) => c,
        CommentDisposition::Drop(r) => return RevisionOutcome::Dropped(r),
    };
    let Some(parent) = parent else {
        return RevisionOutcome::Dropped(DropReason::NoParent);
    };
    let pair = RevisionPair {
        comment,
        source_doc: strip_markup(&parent.text),
        target_doc: strip_markup(&rev.text),
    };
    RevisionOutcome::Kept(
        extract_sentence_pairs(&pair)
            .into_iter()
            .map(|p| {
                let d = filter_pair(&p, cfg);
                (p, d)
            })
            .collect(),
    )
}

/// Runs the full pipeline over one page, appending kept pairs to `out` in
/// revision order.
pub fn process_page(page: &Page, cfg: &FilterConfig, stats: &mut IngestStats, out: &mut Vec<SentencePair>) {
    stats.pages += 1;
    let by_id: BTreeMap<u64, &RawRevision> = page.revisions.iter().map(|r| (r.rev_id, r)).collect();
    let outcomes: Vec<RevisionOutcome> = page
        .revisions
        .par_iter()
        .enumerate()
        .map(|(i, rev)| {
            let parent = match rev.parent_rev_id {
                Some(pid) => by_id.get(&pid).copied().or_else(|| i.checked_sub(1).map(|k| &page.revisions[k])),
                None => i.checked_sub(1).map(|k| &page.revisions[k]),
            };
            process_revision(parent, rev, cfg)
        })
        .collect();
    for outcome in outcomes {
        stats.revisions += 1;
        match outcome {
            RevisionOutcome::Dropped(r) => stats.drop_revision(&r),
            RevisionOutcome::Kept(pairs) => {
                stats.revisions_kept += 1;
                for (p, d) in pairs {
                    stats.pairs_extracted += 1;
                    match d {
                        PairDisposition::Keep => {
                            stats.pairs_kept += 1;
                            out.push(p);
                        }
                        PairDisposition::Drop(r) => stats.drop_pair(&r),
                    }
                }
            }
        }
    }
}

/// Streams a dump and calls `sink` for every kept sentence pair, in page
/// then revision order.
pub fn ingest<R: BufRead>(
    reader: R,
    format: DumpFormat,
    cfg: &FilterConfig,
    mut sink: impl FnMut(&SentencePair) -> Result<(), IngestError>,
) -> Result<IngestStats, IngestError> {
    let mut stats = IngestStats::default();
    let mut buf = Vec::new();
    for page in stream_pages(reader, format) {
        let page = page?;
        buf.clear();
        process_page(&page, cfg, &mut stats, &mut buf);
        for p in &buf {
            sink(p)?;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rev(id: u64, comment: &str, text: &str) -> RawRevision {
        RawRevision {
            page_id: 1,
            rev_id: id,
            parent_rev_id: None,
            comment: comment.into(),
            text: text.into(),
        }
    }

    #[test]
    fn revision_dispositions_are_total() {
        let page = Page {
            page_id: 1,
            revisions: vec![
                rev(1, "create", "The cat sat on the mat today. It was warm."),
                rev(2, "grammar", "The cat sat on a mat today. It was warm."),
                rev(3, "", "The cat sat on a mat yesterday. It was warm."),
                rev(4, "add photo", "x"),
            ],
        };
        let mut stats = IngestStats::default();
        let mut out = Vec::new();
        process_page(&page, &FilterConfig::default(), &mut stats, &mut out);
        assert_eq!(stats.revisions, 4);
        assert_eq!(stats.revisions_kept + stats.revisions_dropped_total(), 4);
        assert_eq!(stats.revisions_dropped["no_parent"], 1);
        assert_eq!(stats.revisions_dropped["blacklist:photo"], 1);
        assert_eq!(stats.pairs_extracted, stats.pairs_kept + stats.pairs_dropped_total());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].source, "The cat sat on the mat today.");
        assert_eq!(out[0].target, "The cat sat on a mat today.");
    }

    #[test]
    fn parent_id_overrides_order() {
        let mut r3 = rev(3, "fix", "The dog ran fast. Then it stopped.");
        r3.parent_rev_id = Some(1);
        let page = Page {
            page_id: 1,
            revisions: vec![
                rev(1, "init", "The dog ran quickly. Then it stopped."),
                rev(2, "vandal", "zzz"),
                r3,
            ],
        };
        let mut stats = IngestStats::default();
        let mut out = Vec::new();
        process_page(&page, &FilterConfig::default(), &mut stats, &mut out);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].source, "The dog ran quickly.");
    }

    #[test]
    fn pair_json_omits_missing_intent() {
        let p = SentencePair {
            source: "a".into(),
            target: "b".into(),
            comment: "c".into(),
            intent: None,
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"source":"a","target":"b","comment":"c"}"#
        );
    }
}
