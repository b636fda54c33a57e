use super::sentences::split_sentences;
use super::SentencePair;

/// Two consecutive document versions with the (normalized) edit comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionPair {
    pub comment: String,
    pub source_doc: String,
    pub target_doc: String,
}

/// Sentence pairs from the changed regions of a document diff.
///
/// Sentences are aligned by a longest common subsequence over exact
/// matches. Inside each changed block the k-th source sentence is paired
/// with the k-th target sentence; surplus sentences on either side are
/// discarded.
pub fn extract_sentence_pairs(pair: &RevisionPair) -> Vec<SentencePair> {
    let src = split_sentences(&pair.source_doc);
    let tgt = split_sentences(&pair.target_doc);
    let mut out = Vec::new();
    for ((s0, s1), (t0, t1)) in changed_blocks(&src, &tgt) {
        for (s, t) in src[s0..s1].iter().zip(&tgt[t0..t1]) {
            if s != t {
                out.push(SentencePair {
                    source: s.clone(),
                    target: t.clone(),
                    comment: pair.comment.clone(),
                    intent: None,
                });
            }
        }
    }
    out
}

type Block = ((usize, usize), (usize, usize));

/// Maximal unmatched ranges between consecutive LCS anchors.
fn changed_blocks(a: &[String], b: &[String]) -> Vec<Block> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a_mid, b_mid) = (&a[prefix..a.len() - suffix], &b[prefix..b.len() - suffix]);
    let (n, m) = (a_mid.len(), b_mid.len());
    // lcs[i][j] = LCS length of a_mid[i..], b_mid[j..]
    let mut lcs = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[at(i, j)] = if a_mid[i] == b_mid[j] {
                lcs[at(i + 1, j + 1)] + 1
            } else {
                lcs[at(i + 1, j)].max(lcs[at(i, j + 1)])
            };
        }
    }
    let mut blocks = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut bi, mut bj) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && a_mid[i] == b_mid[j] {
            if (bi, bj) != (i, j) {
                blocks.push(((bi, i), (bj, j)));
            }
            i += 1;
            j += 1;
            (bi, bj) = (i, j);
        } else if j == m || (i < n && lcs[at(i + 1, j)] >= lcs[at(i, j + 1)]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    if (bi, bj) != (n, m) {
        blocks.push(((bi, n), (bj, m)));
    }
    blocks
        .into_iter()
        .map(|((s0, s1), (t0, t1))| ((s0 + prefix, s1 + prefix), (t0 + prefix, t1 + prefix)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(s: &str, t: &str) -> RevisionPair {
        RevisionPair {
            comment: "c".into(),
            source_doc: s.into(),
            target_doc: t.into(),
        }
    }

    #[test]
    fn identical_docs_yield_nothing() {
        assert!(extract_sentence_pairs(&rp("A b. C d.", "A b. C d.")).is_empty());
    }

    #[test]
    fn one_changed_sentence() {
        let out = extract_sentence_pairs(&rp("A b. C d. E f.", "A b. C x. E f."));
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].source.as_str(), out[0].target.as_str()), ("C d.", "C x."));
    }

    #[test]
    fn inserted_sentence_is_discarded() {
        assert!(extract_sentence_pairs(&rp("A b. C d.", "A b. New one. C d.")).is_empty());
    }

    #[test]
    fn positional_matching_in_block() {
        let out = extract_sentence_pairs(&rp("A b. C d. E f. G h.", "A b. C x. E y. Z z. G h."));
        let got: Vec<_> = out.iter().map(|p| (p.source.as_str(), p.target.as_str())).collect();
        assert_eq!(got, vec![("C d.", "C x."), ("E f.", "E y.")]);
    }

    #[test]
    fn blocks_cover_unmatched() {
        let a: Vec<String> = ["x", "a", "y", "b"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["a", "z", "b", "w"].iter().map(|s| s.to_string()).collect();
        assert_eq!(changed_blocks(&a, &b), vec![((0, 1), (0, 0)), ((2, 3), (1, 2)), ((4, 4), (3, 4))]);
    }
}
