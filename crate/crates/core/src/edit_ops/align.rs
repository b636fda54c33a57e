//! Word-level edit-distance alignment producing [`EditPlan`]s.
//!
//! Costs are kept in half units so ties compare exactly: KEEP 0, any
//! transform 1, REPLACE / DELETE / inserted token 2 each.
//!
//! The search state is `(i, j, anchored)`: source and target cursors plus
//! whether the most recent non-deleted source position can host an
//! insertion slot (virtual start, KEEP, REPLACE). Insertions are only legal
//! while anchored, which keeps every optimal path expressible as a plan.

use std::collections::BTreeMap;

use super::plan::EditPlan;
use super::tags::{EditTag, TagSet};
use super::tokenize::TokenSequence;
use super::transform::{transform_matches, TransformMatch};

const COST_TRANSFORM: u32 = 1;
const COST_EDIT: u32 = 2;
const INF: u32 = u32::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Keep,
    Transform(TransformMatch),
    Replace,
    Delete,
    Insert,
}

struct Lattice<'a> {
    src: &'a [String],
    tgt: &'a [String],
    /// Transform matches at (i, j), priority order.
    matches: Vec<Vec<TransformMatch>>,
    /// Cost-to-go, indexed by [(i * (m + 1) + j) * 2 + anchored].
    best: Vec<u32>,
}

impl<'a> Lattice<'a> {
    fn new(src: &'a [String], tgt: &'a [String], tag_set: &TagSet) -> Self {
        let (n, m) = (src.len(), tgt.len());
        let mut matches = vec![Vec::new(); (n + 1) * (m + 1)];
        for i in 0..n {
            for j in 0..m {
                matches[i * (m + 1) + j] = transform_matches(src, i, tgt, j, tag_set);
            }
        }
        let mut lat = Self {
            src,
            tgt,
            matches,
            best: vec![INF; (n + 1) * (m + 1) * 2],
        };
        lat.fill();
        lat
    }

    fn idx(&self, i: usize, j: usize, anchored: bool) -> usize {
        (i * (self.tgt.len() + 1) + j) * 2 + anchored as usize
    }

    fn best_at(&self, i: usize, j: usize, anchored: bool) -> u32 {
        self.best[self.idx(i, j, anchored)]
    }

    /// Steps leaving (i, j, anchored) in tie-break priority order, with
    /// their cost and successor state.
    fn steps(&self, i: usize, j: usize, anchored: bool) -> Vec<(Step, u32, (usize, usize, bool))> {
        let (n, m) = (self.src.len(), self.tgt.len());
        let mut out = Vec::new();
        if i < n && j < m && self.src[i] == self.tgt[j] {
            out.push((Step::Keep, 0, (i + 1, j + 1, true)));
        }
        if i < n && j < m {
            for tm in &self.matches[i * (m + 1) + j] {
                out.push((
                    Step::Transform(*tm),
                    COST_TRANSFORM,
                    (i + tm.src_len, j + tm.tgt_len, false),
                ));
            }
            if self.src[i] != self.tgt[j] {
                out.push((Step::Replace, COST_EDIT, (i + 1, j + 1, true)));
            }
        }
        if i < n {
            out.push((Step::Delete, COST_EDIT, (i + 1, j, anchored)));
        }
        if anchored && j < m {
            out.push((Step::Insert, COST_EDIT, (i, j + 1, true)));
        }
        out
    }

    fn fill(&mut self) {
        let (n, m) = (self.src.len(), self.tgt.len());
        for i in (0..=n).rev() {
            for j in (0..=m).rev() {
                // anchored=true may depend on nothing at the same (i, j) but
                // Insert moves to j+1, already filled.
                for anchored in [false, true] {
                    let v = if i == n && j == m {
                        0
                    } else {
                        self.steps(i, j, anchored)
                            .into_iter()
                            .map(|(_, c, (a, b, k))| c.saturating_add(self.best_at(a, b, k)))
                            .min()
                            .unwrap_or(INF)
                    };
                    let k = self.idx(i, j, anchored);
                    self.best[k] = v;
                }
            }
        }
    }

    fn path(&self) -> Vec<(Step, usize, usize)> {
        let (n, m) = (self.src.len(), self.tgt.len());
        let (mut i, mut j, mut anchored) = (0, 0, true);
        let mut out = Vec::new();
        while (i, j) != (n, m) {
            let here = self.best_at(i, j, anchored);
            let (step, _, next) = self
                .steps(i, j, anchored)
                .into_iter()
                .find(|(_, c, (a, b, k))| c + self.best_at(*a, *b, *k) == here)
                .expect("optimal step exists");
            out.push((step, i, j));
            (i, j, anchored) = next;
        }
        out
    }
}

/// Minimal alignment cost in half units.
pub fn alignment_cost(source: &TokenSequence, target: &TokenSequence, tag_set: &TagSet) -> u32 {
    Lattice::new(source.tokens(), target.tokens(), tag_set).best_at(0, 0, true)
}

/// Aligns `source` to `target` and returns the minimal-cost edit plan.
///
/// Among optimal alignments the earliest decision prefers KEEP, then
/// transforms (in detection priority), REPLACE, DELETE and finally INSERT.
/// Consecutive inserted tokens join the slot of the most recent anchor
/// (virtual start, KEEP or REPLACE position).
pub fn align(source: &TokenSequence, target: &TokenSequence, tag_set: &TagSet) -> EditPlan {
    let lat = Lattice::new(source.tokens(), target.tokens(), tag_set);
    let tgt = target.tokens();
    let mut tags = vec![EditTag::Keep; source.len() + 1];
    let mut pending: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut anchor = 0usize;
    for (step, i, j) in lat.path() {
        match step {
            Step::Keep => {
                tags[i + 1] = EditTag::Keep;
                anchor = i + 1;
            }
            Step::Replace => {
                tags[i + 1] = EditTag::Replace { slot: 0 };
                pending.insert(i + 1, vec![tgt[j].clone()]);
                anchor = i + 1;
            }
            Step::Delete => tags[i + 1] = EditTag::Delete,
            Step::Insert => {
                if tags[anchor] == EditTag::Keep {
                    tags[anchor] = EditTag::Append { slot: 0 };
                }
                pending.entry(anchor).or_default().push(tgt[j].clone());
            }
            Step::Transform(tm) => match tm.tag {
                EditTag::TransformVerb { .. } => {
                    tags[i + 1] = EditTag::TransformVerb { slot: 0 };
                    pending.insert(i + 1, vec![tgt[j].clone()]);
                }
                tag => {
                    tags[i + 1] = tag;
                    if tm.src_len == 2 {
                        tags[i + 2] = EditTag::Merged;
                    }
                }
            },
        }
    }
    // number slots left to right
    let mut insertions = BTreeMap::new();
    for (slot, (pos, tokens)) in pending.into_iter().enumerate() {
        tags[pos] = match tags[pos] {
            EditTag::Append { .. } => EditTag::Append { slot },
            EditTag::Replace { .. } => EditTag::Replace { slot },
            EditTag::TransformVerb { .. } => EditTag::TransformVerb { slot },
            other => unreachable!("slot on {other}"),
        };
        insertions.insert(slot, tokens);
    }
    EditPlan { tags, insertions }
}
