use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_match, gleu, sari, EvalInstance, MetricsError};

/// Which optional metrics to compute next to SARI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSelection {
    pub gleu: bool,
    pub em: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self { gleu: true, em: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub sari: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
}

impl InstanceScores {
    pub fn compute(instance: &EvalInstance, select: MetricSelection) -> Result<Self, MetricsError> {
        Ok(Self {
            sari: sari(instance)?,
            gleu: if select.gleu { Some(gleu(instance)?) } else { None },
            em: select.em.then(|| exact_match(instance)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub count: usize,
    pub sari: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
}

impl DatasetReport {
    /// Arithmetic means over `scores`; an optional metric is reported only
    /// when every instance has it.
    pub fn from_scores(scores: &[InstanceScores]) -> Self {
        let n = scores.len();
        let mean = |vals: Option<Vec<f64>>| -> Option<f64> {
            let vals = vals?;
            (n > 0).then(|| vals.iter().sum::<f64>() / n as f64)
        };
        Self {
            count: n,
            sari: mean(Some(scores.iter().map(|s| s.sari).collect())).unwrap_or(0.0),
            gleu: mean(scores.iter().map(|s| s.gleu).collect()),
            em: mean(scores.iter().map(|s| s.em).collect()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub datasets: BTreeMap<String, DatasetReport>,
}

/// Scores every instance (in parallel) and returns per-instance scores in
/// input order together with their summary.
pub fn evaluate(
    instances: &[EvalInstance],
    select: MetricSelection,
) -> Result<(Vec<InstanceScores>, DatasetReport), MetricsError> {
    let scores = instances
        .par_iter()
        .map(|i| InstanceScores::compute(i, select))
        .collect::<Result<Vec<_>, _>>()?;
    let report = DatasetReport::from_scores(&scores);
    Ok((scores, report))
}

/// Reads `{"source", "prediction", "references"}` lines; blank lines are
/// skipped.
pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<EvalInstance>, MetricsError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let parse_err = |message: String| MetricsError::Parse { line: idx + 1, message };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: EvalInstance = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if inst.references.is_empty() {
            return Err(MetricsError::EmptyReferenceSet);
        }
        out.push(inst);
    }
    Ok(out)
}
