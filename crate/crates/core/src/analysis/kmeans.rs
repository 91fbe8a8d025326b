//! Lloyd's k-means with kmeans++ seeding, plus the adjusted Rand index for
//! scoring cluster agreement.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::linalg::{Matrix, Rng};
use crate::Scalar;

/// Iteration knobs; `seed` drives kmeans++ sampling only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig { max_iter: 100, tol: 1e-6, seed: 0 }
    }
}

/// Clustering result. `inertia` is exactly the sum of squared distances
/// from each point to its assigned centroid; `inertia_history` holds that
/// value after every Lloyd iteration.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterAssignment<S: Scalar> {
    pub k: usize,
    pub centroids: Matrix<S>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub inertia_history: Vec<f64>,
}

/// Nearest centroid for one point; ties go to the lowest cluster index.
fn nearest<S: Scalar>(z: &Matrix<S>, i: usize, centroids: &Matrix<S>) -> (usize, S) {
    let mut best = 0usize;
    let mut best_d = z.row_dist_sq(i, centroids, 0);
    for c in 1..centroids.rows() {
        let d = z.row_dist_sq(i, centroids, c);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (best, best_d)
}

/// kmeans++: first centroid uniform, the rest sampled with probability
/// proportional to the squared distance from the nearest chosen one.
fn plus_plus_init<S: Scalar>(z: &Matrix<S>, k: usize, rng: &mut Rng) -> Matrix<S> {
    let n = z.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.index(n));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| z.row_dist_sq(i, z, chosen[0]).to_f64_lossy())
        .collect();
    while chosen.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.uniform::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass is zero (duplicates); fall back to uniform.
            rng.index(n)
        };
        chosen.push(next);
        for (i, d2) in dist2.iter_mut().enumerate() {
            let d = z.row_dist_sq(i, z, next).to_f64_lossy();
            if d < *d2 {
                *d2 = d;
            }
        }
    }
    z.select_rows(&chosen)
}

/// Clusters the rows of `z` into `k` groups. Deterministic for a given
/// seed; an empty cluster is re-seeded to the point farthest from its
/// assigned centroid.
pub fn kmeans<S: Scalar>(
    z: &Matrix<S>,
    k: usize,
    config: &KmeansConfig,
) -> Result<ClusterAssignment<S>, AnalysisError> {
    let n = z.rows();
    if k == 0 || k > n {
        return Err(AnalysisError::KTooLarge { k, n });
    }
    let mut rng = Rng::new(config.seed);
    let mut centroids = plus_plus_init(z, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        // Assignment step.
        let mut dist2 = vec![S::zero(); n];
        for i in 0..n {
            let (c, d) = nearest(z, i, &centroids);
            labels[i] = c;
            dist2[i] = d;
        }

        // Re-seed empty clusters with the farthest points, one per cluster.
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let mut stolen = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            for i in 0..n {
                if stolen[i] || counts[labels[i]] <= 1 {
                    continue;
                }
                if far.is_none_or(|(_, d)| dist2[i] > d) {
                    far = Some((i, dist2[i]));
                }
            }
            if let Some((i, _)) = far {
                counts[labels[i]] -= 1;
                labels[i] = c;
                counts[c] = 1;
                stolen[i] = true;
            }
        }

        // Update step: centroids move to the mean of their members.
        let previous = centroids.clone();
        centroids = Matrix::zeros(k, z.cols());
        for (i, &l) in labels.iter().enumerate() {
            for j in 0..z.cols() {
                centroids[(l, j)] += z[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = S::from_usize(counts[c]).unwrap().recip();
                for j in 0..z.cols() {
                    centroids[(c, j)] *= inv;
                }
            } else {
                // Nothing to steal (more clusters than distinct points);
                // keep the previous position.
                for j in 0..z.cols() {
                    centroids[(c, j)] = previous[(c, j)];
                }
            }
        }
        iterations += 1;

        let inertia: f64 = (0..n)
            .map(|i| z.row_dist_sq(i, &centroids, labels[i]).to_f64_lossy())
            .sum();
        history.push(inertia);

        let mut shift = S::zero();
        for c in 0..k {
            shift = shift.max(previous.row_dist_sq(c, &centroids, c).sqrt());
        }
        if shift.to_f64_lossy() < config.tol {
            break;
        }
    }

    let inertia = *history.last().expect("at least one iteration ran");
    Ok(ClusterAssignment {
        k,
        centroids,
        labels,
        inertia,
        iterations,
        inertia_history: history,
    })
}

/// Adjusted Rand index between two labelings of the same points: 1.0 for
/// identical partitions, about 0 for independent ones. Degenerate cases
/// where the expected and maximum index coincide return 1.0.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings cover different point sets");
    assert!(!a.is_empty(), "empty labelings have no agreement");
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0.0f64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1.0;
    }
    let choose2 = |x: f64| x * (x - 1.0) * 0.5;
    let mut index = 0.0;
    let mut row_sum = 0.0;
    let mut col_sum = 0.0;
    for row in &table {
        for &cell in row {
            index += choose2(cell);
        }
    }
    for row in &table {
        row_sum += choose2(row.iter().sum());
    }
    for j in 0..kb {
        col_sum += choose2(table.iter().map(|row| row[j]).sum());
    }
    let expected = row_sum * col_sum / choose2(a.len() as f64);
    let maximum = 0.5 * (row_sum + col_sum);
    if (maximum - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (maximum - expected)
}
