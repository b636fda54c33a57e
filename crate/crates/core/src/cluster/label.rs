use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kmeans::ClusterModel;
use super::linalg::sq_dist;
use super::ClusterError;

/// The four intents kept for training, in their canonical order.
pub const INTENTS: [&str; 4] = ["fluency", "readability", "simplification", "neutralization"];

/// Prompts describing each intent, keyed by intent name.
pub type SeedPrompts = BTreeMap<String, Vec<String>>;

/// Bundled seed prompts (five per intent).
pub fn default_seed_prompts() -> SeedPrompts {
    serde_json::from_str(include_str!("../../data/seed_prompts.json")).expect("bundled prompts parse")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntentLabel {
    Intent(String),
    Discarded(usize),
}

impl IntentLabel {
    pub fn intent(&self) -> Option<&str> {
        match self {
            IntentLabel::Intent(s) => Some(s),
            IntentLabel::Discarded(_) => None,
        }
    }
}

impl std::fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntentLabel::Intent(s) => f.write_str(s),
            IntentLabel::Discarded(_) => f.write_str("discarded"),
        }
    }
}

/// Cluster labels plus the intents that could not be placed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: BTreeMap<usize, IntentLabel>,
    pub unlabeled: Vec<String>,
}

/// Labels clusters by where each intent's prompts land.
///
/// `prompts` are `(intent, embedding)` pairs already in the reduced space.
/// An intent claims the cluster that receives a strict majority of its
/// prompts. When several intents claim one cluster, the one whose claiming
/// prompts lie closer on average (squared distance) keeps it; ties go to the
/// intent that sorts first. Intents without a cluster are reported in
/// `unlabeled`; every unclaimed cluster is discarded.
pub fn label_clusters_lenient(model: &ClusterModel, prompts: &[(String, Vec<f64>)]) -> Labeling {
    let mut per_intent: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for (intent, v) in prompts {
        let (c, d) = model
            .centroids
            .iter()
            .enumerate()
            .map(|(c, mu)| (c, sq_dist(v, mu)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        per_intent.entry(intent.as_str()).or_default().push((c, d));
    }
    // intent -> (cluster, mean distance of the prompts in it)
    let mut claims: BTreeMap<usize, Vec<(f64, &str)>> = BTreeMap::new();
    let mut unlabeled = Vec::new();
    for (intent, hits) in &per_intent {
        let mut counts: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for (c, d) in hits {
            let e = counts.entry(*c).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d;
        }
        match counts.iter().find(|(_, (n, _))| 2 * n > hits.len()) {
            Some((c, (n, total))) => claims.entry(*c).or_default().push((total / *n as f64, intent)),
            None => unlabeled.push(intent.to_string()),
        }
    }
    let mut labels: BTreeMap<usize, IntentLabel> =
        (0..model.centroids.len()).map(|c| (c, IntentLabel::Discarded(c))).collect();
    for (c, mut contenders) in claims {
        contenders.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        labels.insert(c, IntentLabel::Intent(contenders[0].1.to_string()));
        unlabeled.extend(contenders[1..].iter().map(|(_, i)| i.to_string()));
    }
    unlabeled.sort();
    Labeling { labels, unlabeled }
}

/// Like [`label_clusters_lenient`] but fails on the first (alphabetical)
/// intent left without a cluster.
pub fn label_clusters(
    model: &ClusterModel,
    prompts: &[(String, Vec<f64>)],
) -> Result<BTreeMap<usize, IntentLabel>, ClusterError> {
    let l = label_clusters_lenient(model, prompts);
    match l.unlabeled.into_iter().next() {
        Some(intent) => Err(ClusterError::UnlabeledIntent(intent)),
        None => Ok(l.labels),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(centroids: Vec<Vec<f64>>) -> ClusterModel {
        ClusterModel {
            centroids,
            assignments: vec![],
            inertia: 0.0,
            inertia_history: vec![],
            iterations: 0,
            seed: 0,
        }
    }

    fn p(intent: &str, v: &[f64]) -> (String, Vec<f64>) {
        (intent.to_string(), v.to_vec())
    }

    #[test]
    fn one_prompt_per_intent() {
        let m = model((0..6).map(|i| vec![i as f64 * 10.0]).collect());
        let prompts = vec![p("fluency", &[0.0]), p("readability", &[11.0]), p("simplification", &[19.0]), p("neutralization", &[50.0])];
        let labels = label_clusters(&m, &prompts).unwrap();
        assert_eq!(labels[&0], IntentLabel::Intent("fluency".into()));
        assert_eq!(labels[&1], IntentLabel::Intent("readability".into()));
        assert_eq!(labels[&2], IntentLabel::Intent("simplification".into()));
        assert_eq!(labels[&5], IntentLabel::Intent("neutralization".into()));
        assert_eq!(labels[&3], IntentLabel::Discarded(3));
        assert_eq!(labels[&4], IntentLabel::Discarded(4));
    }

    #[test]
    fn conflict_goes_to_closer_intent() {
        let m = model(vec![vec![0.0], vec![100.0]]);
        let prompts = vec![p("fluency", &[1.0]), p("fluency", &[2.0]), p("readability", &[3.0]), p("readability", &[4.0])];
        let l = label_clusters_lenient(&m, &prompts);
        assert_eq!(l.labels[&0], IntentLabel::Intent("fluency".into()));
        assert_eq!(l.unlabeled, vec!["readability"]);
        assert_eq!(
            label_clusters(&m, &prompts),
            Err(ClusterError::UnlabeledIntent("readability".into()))
        );
    }

    #[test]
    fn scattered_prompts_and_empty_prompt_list() {
        let m = model(vec![vec![0.0], vec![100.0]]);
        let prompts = vec![p("fluency", &[1.0]), p("fluency", &[99.0])];
        assert_eq!(label_clusters(&m, &prompts), Err(ClusterError::UnlabeledIntent("fluency".into())));
        let labels = label_clusters(&m, &[]).unwrap();
        assert!(labels.values().all(|l| l.intent().is_none()));
    }

    #[test]
    fn bundled_prompts() {
        let p = default_seed_prompts();
        assert_eq!(p.len(), 4);
        assert!(INTENTS.iter().all(|i| p[*i].len() == 5));
    }
}
