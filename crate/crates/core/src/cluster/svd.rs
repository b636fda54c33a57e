use super::linalg::{jacobi_eigen, Matrix};
use super::ClusterError;

/// Rank-r truncated SVD `X - mean ≈ scores · components`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// `U_r Σ_r`, n × r.
    pub scores: Matrix,
    /// Non-increasing, length r.
    pub singular_values: Vec<f64>,
    /// `V_rᵀ`, r × d, orthonormal rows.
    pub components: Matrix,
    /// Column means removed before the decomposition, if centering was on.
    pub mean: Option<Vec<f64>>,
}

impl Svd {
    /// Maps new rows (e.g. prompt embeddings) into the reduced space.
    pub fn project(&self, x: &Matrix) -> Matrix {
        let mut centered = x.clone();
        if let Some(mean) = &self.mean {
            for i in 0..centered.rows {
                for (v, m) in centered.row_mut(i).iter_mut().zip(mean) {
                    *v -= m;
                }
            }
        }
        centered.matmul(&self.components.transpose())
    }

    /// `scores · components` plus the mean.
    pub fn reconstruct(&self) -> Matrix {
        let mut out = self.scores.matmul(&self.components);
        if let Some(mean) = &self.mean {
            for i in 0..out.rows {
                for (v, m) in out.row_mut(i).iter_mut().zip(mean) {
                    *v += m;
                }
            }
        }
        out
    }
}

/// Truncated SVD via the eigen-decomposition of the smaller Gram matrix.
///
/// With `center` the column means are subtracted first. Right singular
/// vectors are sign-normalized so their largest-magnitude entry is
/// positive, which makes the output deterministic.
pub fn truncated_svd(x: &Matrix, r: usize, center: bool) -> Result<Svd, ClusterError> {
    let (n, d) = (x.rows, x.cols);
    let max = n.min(d);
    if r == 0 || r > max {
        return Err(ClusterError::InvalidRank { r, max });
    }
    let mut xc = x.clone();
    let mean = center.then(|| {
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for i in 0..n {
            for (v, m) in xc.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        mean
    });

    let mut components = Matrix::zeros(r, d);
    let mut singular_values = Vec::with_capacity(r);
    if d <= n {
        let (vals, vecs) = jacobi_eigen(&xc.gram())?;
        for k in 0..r {
            singular_values.push(vals[k].max(0.0).sqrt());
            for j in 0..d {
                components.set(k, j, vecs.get(j, k));
            }
        }
    } else {
        // eigenvectors of X Xᵀ are left singular vectors; V = Xᵀ U Σ⁻¹
        let xt = xc.transpose();
        let (vals, vecs) = jacobi_eigen(&xt.gram())?;
        for k in 0..r {
            let sigma = vals[k].max(0.0).sqrt();
            singular_values.push(sigma);
            let mut v = vec![0.0; d];
            for i in 0..n {
                let u = vecs.get(i, k);
                for (vj, xij) in v.iter_mut().zip(xc.row(i)) {
                    *vj += xij * u;
                }
            }
            for j in 0..d {
                components.set(k, j, v[j]);
            }
        }
        orthonormalize_rows(&mut components);
    }
    for k in 0..r {
        let row = components.row_mut(k);
        let (pivot, _) = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (j, v)| if v.abs() > acc.1 + 1e-12 { (j, v.abs()) } else { acc });
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let scores = xc.matmul(&components.transpose());
    Ok(Svd {
        scores,
        singular_values,
        components,
        mean,
    })
}

/// Modified Gram-Schmidt over rows; rows that vanish (null directions) are
/// replaced by the first unit vector orthogonal to the earlier rows.
fn orthonormalize_rows(m: &mut Matrix) {
    let (r, d) = (m.rows, m.cols);
    for k in 0..r {
        let mut candidate: Vec<f64> = m.row(k).to_vec();
        let mut basis_try = 0;
        loop {
            for p in 0..k {
                let prev = m.row(p).to_vec();
                let dot: f64 = candidate.iter().zip(&prev).map(|(a, b)| a * b).sum();
                for (c, b) in candidate.iter_mut().zip(&prev) {
                    *c -= dot * b;
                }
            }
            let norm = candidate.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-10 {
                for (dst, c) in m.row_mut(k).iter_mut().zip(&candidate) {
                    *dst = c / norm;
                }
                break;
            }
            candidate = vec![0.0; d];
            candidate[basis_try] = 1.0;
            basis_try += 1;
        }
    }
}
