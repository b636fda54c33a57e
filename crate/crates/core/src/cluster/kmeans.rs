use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{sq_dist, Matrix};
use super::ClusterError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Independent k-means++ starts; the lowest final inertia wins.
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 42,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after initialization and after every accepted iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

fn distinct_rows(x: &Matrix) -> usize {
    let mut rows: Vec<&[f64]> = (0..x.rows).map(|i| x.row(i)).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(*b)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.dedup();
    rows.len()
}

/// k-means++ seeding; returns the chosen row indices in pick order.
///
/// The first row is uniform; each further row is drawn with probability
/// proportional to its squared distance to the nearest chosen row.
pub fn kmeans_pp_init(x: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>, ClusterError> {
    if k == 0 {
        return Err(ClusterError::DegenerateData("k must be positive".into()));
    }
    if x.rows < k || distinct_rows(x) < k {
        return Err(ClusterError::DegenerateData(format!(
            "{} rows ({} distinct) for k = {k}",
            x.rows,
            distinct_rows(x)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..x.rows)];
    let mut d2: Vec<f64> = (0..x.rows).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, w) in d2.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("distinct rows remain");
        chosen.push(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    Ok(chosen)
}

/// Nearest centroid (ties to the lowest index) and squared distance for
/// every row.
pub fn assign(x: &Matrix, centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    (0..x.rows)
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut best = (0, f64::INFINITY);
            for (c, mu) in centroids.iter().enumerate() {
                let d = sq_dist(row, mu);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

fn means(x: &Matrix, labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; x.cols]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    (sums, counts)
}

/// Seeds of the individual restarts, all derived from `cfg.seed`.
pub fn restart_seeds(cfg: &KMeansConfig) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_init.max(1)).map(|_| rng.gen()).collect()
}

/// Best of [`KMeansConfig::n_init`] runs of [`kmeans_run`] (ties keep the
/// earliest run). The returned model records `cfg.seed`.
pub fn kmeans_fit(x: &Matrix, cfg: &KMeansConfig) -> Result<ClusterModel, ClusterError> {
    let mut best: Option<ClusterModel> = None;
    for seed in restart_seeds(cfg) {
        let m = kmeans_run(x, cfg, seed)?;
        if best.as_ref().is_none_or(|b| m.inertia < b.inertia) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one run");
    best.seed = cfg.seed;
    Ok(best)
}

/// Lloyd's algorithm from one k-means++ start seeded with `seed`.
///
/// Each iteration recomputes means, repairs empty clusters by moving in the
/// point farthest from its centroid, and reassigns. It stops when the
/// inertia improves by less than `tol`, after `max_iter` iterations, or
/// when an update would raise the inertia (floating-point noise near
/// convergence), in which case the previous state is kept.
pub fn kmeans_run(x: &Matrix, cfg: &KMeansConfig, seed: u64) -> Result<ClusterModel, ClusterError> {
    let k = cfg.k;
    let init = kmeans_pp_init(x, k, seed)?;
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| x.row(i).to_vec()).collect();
    let assigned = assign(x, &centroids);
    let mut labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
    let mut inertia: f64 = assigned.iter().map(|a| a.1).sum();
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let (mut new_centroids, mut counts) = means(x, &labels, k);
        let mut new_labels = labels.clone();
        for e in 0..k {
            if counts[e] > 0 {
                continue;
            }
            let far = (0..x.rows)
                .filter(|&i| counts[new_labels[i]] > 1)
                .map(|i| (i, sq_dist(x.row(i), &new_centroids[new_labels[i]])))
                .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                });
            let Some((p, _)) = far else { break };
            counts[new_labels[p]] -= 1;
            new_labels[p] = e;
            counts[e] = 1;
            let (m, _) = means(x, &new_labels, k);
            new_centroids = m;
        }
        let assigned = assign(x, &new_centroids);
        let new_inertia: f64 = assigned.iter().map(|a| a.1).sum();
        if new_inertia > inertia {
            break;
        }
        iterations += 1;
        centroids = new_centroids;
        labels = assigned.iter().map(|a| a.0).collect();
        let improvement = inertia - new_inertia;
        inertia = new_inertia;
        history.push(inertia);
        if improvement < cfg.tol {
            break;
        }
    }
    Ok(ClusterModel {
        centroids,
        assignments: labels,
        inertia,
        inertia_history: history,
        iterations,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            seed,
            ..KMeansConfig::default()
        }
    }

    #[test]
    fn four_point_fixture() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]]);
        for seed in 0..20 {
            let m = kmeans_fit(&x, &cfg(2, seed)).unwrap();
            assert!((m.inertia - 1.0).abs() < 1e-12, "seed {seed}");
            let mut c = m.centroids.clone();
            c.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(c, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
        }
    }

    #[test]
    fn k_one_is_the_mean() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![6.0]]);
        let m = kmeans_fit(&x, &cfg(1, 0)).unwrap();
        assert_eq!(m.centroids, vec![vec![3.0]]);
        assert!((m.inertia - 14.0).abs() < 1e-12);
    }

    #[test]
    fn points_equal_to_centroids() {
        let x = Matrix::from_rows(&[vec![0.0], vec![5.0], vec![9.0]]);
        let m = kmeans_fit(&x, &cfg(3, 3)).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_eq!(m.iterations, 1);
    }

    #[test]
    fn init_properties() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let mut ids = kmeans_pp_init(&x, 4, 9).unwrap();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(kmeans_pp_init(&x, 2, 42).unwrap(), kmeans_pp_init(&x, 2, 42).unwrap());
        let dup = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        assert!(matches!(kmeans_pp_init(&dup, 2, 0), Err(ClusterError::DegenerateData(_))));
        assert!(matches!(kmeans_fit(&x, &cfg(5, 0)), Err(ClusterError::DegenerateData(_))));
    }
}
