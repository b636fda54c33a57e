use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kmeans::ClusterModel;
use super::label::IntentLabel;
use super::ClusterError;
use crate::edit_ops::tokenize;
use crate::ingest::{length_ratio_ok, FilterConfig, SentencePair};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportCounts {
    pub written: BTreeMap<String, usize>,
    /// Pairs in discarded clusters.
    pub discarded: usize,
    /// Pairs dropped by the length-ratio rule of their intent.
    pub length_dropped: usize,
}

/// Splits `pairs` by the intent of their cluster. Every name in `intents`
/// gets an entry, possibly empty. Pairs receive their intent and pass the
/// length-ratio filter unless the intent is exempt.
pub fn partition_corpus(
    pairs: &[SentencePair],
    assignments: &[usize],
    labels: &BTreeMap<usize, IntentLabel>,
    intents: &[&str],
    cfg: &FilterConfig,
) -> (BTreeMap<String, Vec<SentencePair>>, ExportCounts) {
    assert_eq!(pairs.len(), assignments.len(), "one assignment per pair");
    let mut out: BTreeMap<String, Vec<SentencePair>> = intents.iter().map(|i| (i.to_string(), Vec::new())).collect();
    let mut counts = ExportCounts::default();
    for (pair, c) in pairs.iter().zip(assignments) {
        let Some(intent) = labels.get(c).and_then(IntentLabel::intent) else {
            counts.discarded += 1;
            continue;
        };
        let mut p = pair.clone();
        p.intent = Some(intent.to_string());
        if !cfg.len_ratio_exempt.iter().any(|e| e == intent) && !length_ratio_ok(&p, cfg) {
            counts.length_dropped += 1;
            continue;
        }
        out.entry(intent.to_string()).or_default().push(p);
    }
    counts.written = out.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    (out, counts)
}

/// Writes `<intent>.jsonl` for every intent of [`partition_corpus`].
pub fn export_corpus(
    out_dir: &Path,
    pairs: &[SentencePair],
    assignments: &[usize],
    labels: &BTreeMap<usize, IntentLabel>,
    intents: &[&str],
    cfg: &FilterConfig,
) -> Result<ExportCounts, ClusterError> {
    let (parts, counts) = partition_corpus(pairs, assignments, labels, intents, cfg);
    std::fs::create_dir_all(out_dir)?;
    for (intent, rows) in parts {
        let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join(format!("{intent}.jsonl")))?);
        for r in rows {
            writeln!(f, "{}", serde_json::to_string(&r).expect("pair serializes"))?;
        }
        f.flush()?;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub size: usize,
    pub label: String,
    pub top_terms: Vec<String>,
}

const STOPWORDS: [&str; 24] = [
    "a", "an", "the", "and", "or", "of", "to", "in", "on", "for", "with", "is", "was", "it", "this", "that",
    "as", "at", "by", "from", "be", "are", "some", "per",
];

/// Per-cluster size, label and the five most frequent content words of the
/// member comments (ties broken alphabetically).
pub fn cluster_report(
    model: &ClusterModel,
    labels: &BTreeMap<usize, IntentLabel>,
    comments: &[String],
) -> BTreeMap<usize, ClusterSummary> {
    let mut terms: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); model.centroids.len()];
    let mut sizes = vec![0usize; model.centroids.len()];
    for (c, comment) in model.assignments.iter().zip(comments) {
        sizes[*c] += 1;
        let words: BTreeSet<String> = tokenize(&comment.to_lowercase())
            .into_inner()
            .into_iter()
            .filter(|w| w.chars().any(char::is_alphabetic) && !STOPWORDS.contains(&w.as_str()))
            .collect();
        for w in words {
            *terms[*c].entry(w).or_insert(0) += 1;
        }
    }
    (0..model.centroids.len())
        .map(|c| {
            let mut ranked: Vec<(&String, &usize)> = terms[c].iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            let summary = ClusterSummary {
                size: sizes[c],
                label: labels.get(&c).map_or("discarded".to_string(), |l| l.to_string()),
                top_terms: ranked.into_iter().take(5).map(|(w, _)| w.clone()).collect(),
            };
            (c, summary)
        })
        .collect()
}
