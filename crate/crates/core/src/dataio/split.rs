use serde::{Deserialize, Serialize};

use super::DataError;
use crate::linalg::Rng;
use crate::Mat;

/// Disjoint train/test row indices covering `0..n`, both sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Class-stratified holdout split. The total test size is
/// `round(ratio * n)`; per-class counts deviate from `round(ratio * n_c)`
/// by at most one row (largest-remainder apportionment).
pub fn stratified_split(labels: &[u8], ratio: f64, seed: u64) -> Result<SplitIndices, DataError> {
    assert!(ratio > 0.0 && ratio < 1.0, "split ratio must be in (0, 1)");
    let n = labels.len();
    let classes: [Vec<usize>; 2] = {
        let mut by_class = [Vec::new(), Vec::new()];
        for (i, &label) in labels.iter().enumerate() {
            by_class[usize::from(label != 0)].push(i);
        }
        by_class
    };
    for (class, members) in classes.iter().enumerate() {
        if members.len() < 2 {
            return Err(DataError::DegenerateClass {
                class: class as u8,
                count: members.len(),
            });
        }
    }

    let total_test = (ratio * n as f64).round() as usize;
    // Floor each class quota, then hand out the remainder by descending
    // fractional part (ties to the lower class index).
    let exact: Vec<f64> = classes.iter().map(|c| ratio * c.len() as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let mut leftover = total_test.saturating_sub(quota.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &class in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if quota[class] < classes[class].len() {
            quota[class] += 1;
            leftover -= 1;
        }
    }

    let mut rng = Rng::new(seed);
    let mut train = Vec::with_capacity(n - total_test);
    let mut test = Vec::with_capacity(total_test);
    for (class, members) in classes.iter().enumerate() {
        let mut shuffled = members.clone();
        rng.shuffle(&mut shuffled);
        test.extend_from_slice(&shuffled[..quota[class]]);
        train.extend_from_slice(&shuffled[quota[class]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        seed,
        ratio,
    })
}

/// Unstratified variant for tables without a target column.
pub fn random_split(n: usize, ratio: f64, seed: u64) -> SplitIndices {
    assert!(ratio > 0.0 && ratio < 1.0, "split ratio must be in (0, 1)");
    let total_test = (ratio * n as f64).round() as usize;
    let mut rng = Rng::new(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut indices);
    let mut test: Vec<usize> = indices[..total_test].to_vec();
    let mut train: Vec<usize> = indices[total_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    SplitIndices {
        train,
        test,
        seed,
        ratio,
    }
}

/// Returns a copy of `x` with N(0, sigma^2) noise added to the columns
/// marked in `mask`. Unmasked (one-hot) columns pass through untouched.
pub fn inject_noise(x: &Mat, sigma: f64, mask: &[bool], rng: &mut Rng) -> Mat {
    assert_eq!(mask.len(), x.cols(), "mask length must equal column count");
    assert!(sigma >= 0.0, "noise sigma must be non-negative");
    let mut out = x.clone();
    if sigma == 0.0 {
        return out;
    }
    for r in 0..out.rows() {
        for (c, &masked) in mask.iter().enumerate() {
            if masked {
                out[(r, c)] += sigma * rng.normal::<f64>();
            }
        }
    }
    out
}
