//! Seeded synthetic data generators used by the test suite and the bundled
//! demo configuration, so the full pipeline runs with zero downloads.
//!
//! Two families: a bank-marketing-like mixed-type table driven by a few
//! latent factors, and a 2-D nonlinear manifold embedded in 10-D. Both are
//! deterministic functions of `(rows, seed)`.

use crate::dataio::{Column, ColumnKind, ColumnSpec, RawTable, Schema};
use crate::linalg::Rng;
use crate::Mat;

fn spec(name: &str, kind: ColumnKind) -> ColumnSpec {
    ColumnSpec { name: name.to_string(), kind }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Picks the first bin whose upper edge exceeds `v`; the last label catches
/// the rest.
fn bin<'a>(v: f64, edges: &[f64], labels: &[&'a str]) -> &'a str {
    debug_assert_eq!(edges.len() + 1, labels.len());
    for (i, &edge) in edges.iter().enumerate() {
        if v < edge {
            return labels[i];
        }
    }
    labels[labels.len() - 1]
}

/// Mixed-type table shaped like a retail-banking campaign dataset: five
/// numeric columns, six categoricals, and an imbalanced binary target, all
/// driven by four latent factors plus noise. Columns `day` and `contact`
/// carry no signal at all.
pub fn bank_like(rows: usize, seed: u64) -> RawTable {
    assert!(rows >= 50, "bank_like needs enough rows for both classes");
    let mut rng = Rng::new(seed);

    let mut age = Vec::with_capacity(rows);
    let mut job = Vec::with_capacity(rows);
    let mut marital = Vec::with_capacity(rows);
    let mut education = Vec::with_capacity(rows);
    let mut balance = Vec::with_capacity(rows);
    let mut housing = Vec::with_capacity(rows);
    let mut loan = Vec::with_capacity(rows);
    let mut contact = Vec::with_capacity(rows);
    let mut day = Vec::with_capacity(rows);
    let mut duration = Vec::with_capacity(rows);
    let mut campaign = Vec::with_capacity(rows);
    let mut subscribed = Vec::with_capacity(rows);

    for _ in 0..rows {
        let z1 = rng.normal::<f64>();
        let z2 = rng.normal::<f64>();
        let z3 = rng.normal::<f64>();
        let z4 = rng.normal::<f64>();

        age.push((39.0 + 9.0 * z1 + 2.5 * rng.normal::<f64>()).round());
        balance.push((1400.0 + 900.0 * z2 + 250.0 * rng.normal::<f64>()).round());
        duration.push((260.0 + 110.0 * z3 + 35.0 * rng.normal::<f64>()).round());
        campaign.push(1.0_f64.max((2.8 + 1.1 * z4 + 0.5 * rng.normal::<f64>()).round()));
        day.push((rng.index(31) + 1) as f64);

        job.push(
            bin(
                z1 + 0.3 * rng.normal::<f64>(),
                &[-1.0, -0.3, 0.4, 1.1],
                &["services", "blue-collar", "technician", "admin", "management"],
            )
            .to_string(),
        );
        marital.push(
            bin(
                z2 + 0.4 * rng.normal::<f64>(),
                &[-0.6, 0.9],
                &["single", "married", "divorced"],
            )
            .to_string(),
        );
        education.push(
            bin(
                0.7 * z1 + 0.7 * z3 + 0.3 * rng.normal::<f64>(),
                &[-0.5, 0.6],
                &["primary", "secondary", "tertiary"],
            )
            .to_string(),
        );
        housing.push(
            bin(z2 + 0.6 * rng.normal::<f64>(), &[0.2], &["yes", "no"]).to_string(),
        );
        loan.push(bin(z4 + 0.6 * rng.normal::<f64>(), &[0.8], &["no", "yes"]).to_string());
        contact.push(
            ["cellular", "telephone", "unknown"][rng.index(3)].to_string(),
        );

        let score = 1.3 * z3 + 0.9 * z1 - 0.6 * z4 + 0.5 * rng.normal::<f64>();
        let p = sigmoid(score - 1.7);
        subscribed.push(if rng.uniform::<f64>() < p { "yes" } else { "no" }.to_string());
    }

    let schema = Schema {
        delimiter: ';',
        columns: vec![
            spec("age", ColumnKind::Numeric),
            spec("job", ColumnKind::Categorical),
            spec("marital", ColumnKind::Categorical),
            spec("education", ColumnKind::Categorical),
            spec("balance", ColumnKind::Numeric),
            spec("housing", ColumnKind::Categorical),
            spec("loan", ColumnKind::Categorical),
            spec("contact", ColumnKind::Categorical),
            spec("day", ColumnKind::Numeric),
            spec("duration", ColumnKind::Numeric),
            spec("campaign", ColumnKind::Numeric),
            spec("subscribed", ColumnKind::Target),
        ],
    };
    let columns = vec![
        Column::Numeric(age),
        Column::Categorical(job),
        Column::Categorical(marital),
        Column::Categorical(education),
        Column::Numeric(balance),
        Column::Categorical(housing),
        Column::Categorical(loan),
        Column::Categorical(contact),
        Column::Numeric(day),
        Column::Numeric(duration),
        Column::Numeric(campaign),
        Column::Categorical(subscribed),
    ];
    RawTable::from_columns(schema, columns).expect("generated table matches its schema")
}

/// The 10 smooth coordinate functions of the 2-D manifold.
fn manifold_point(u: f64, v: f64) -> [f64; 10] {
    [
        u.sin(),
        u.cos(),
        v.sin(),
        v.cos(),
        (u + v).sin(),
        (u - v).cos(),
        (0.5 * u).sin() * v.cos(),
        (0.5 * v).cos() * u.sin(),
        0.8 * (u + 0.5 * v).cos(),
        0.8 * (v - 0.5 * u).sin(),
    ]
}

/// Points on a 2-D sinusoidal manifold embedded in 10-D, plus isotropic
/// noise. Linear projections cannot flatten it, which is exactly what the
/// nonlinear-advantage tests exploit.
pub fn manifold_10d(rows: usize, seed: u64) -> Mat {
    let mut rng = Rng::new(seed);
    let mut x = Mat::zeros(rows, 10);
    for i in 0..rows {
        let u = rng.uniform_in::<f64>(-std::f64::consts::PI, std::f64::consts::PI);
        let v = rng.uniform_in::<f64>(-std::f64::consts::PI, std::f64::consts::PI);
        let point = manifold_point(u, v);
        for (j, value) in point.iter().enumerate() {
            x[(i, j)] = value + 0.05 * rng.normal::<f64>();
        }
    }
    x
}

/// [`manifold_10d`] wrapped as a target-free table (columns `x0`..`x9`) so
/// the schema-driven pipeline can consume it.
pub fn manifold_table(rows: usize, seed: u64) -> RawTable {
    let x = manifold_10d(rows, seed);
    let schema = Schema {
        delimiter: ';',
        columns: (0..10)
            .map(|j| spec(&format!("x{j}"), ColumnKind::Numeric))
            .collect(),
    };
    let columns = (0..10)
        .map(|j| Column::Numeric((0..rows).map(|i| x[(i, j)]).collect()))
        .collect();
    RawTable::from_columns(schema, columns).expect("generated table matches its schema")
}

/// Anomaly benchmark: manifold inliers followed by uniform-box outliers,
/// with `true` marking the outliers. The box extends past the inlier range
/// in every coordinate, so off-manifold points are common but not trivial.
pub fn outlier_benchmark(
    inliers: usize,
    outliers: usize,
    seed: u64,
) -> (Mat, Vec<bool>) {
    let mut rng = Rng::new(seed);
    let n = inliers + outliers;
    let mut x = Mat::zeros(n, 10);
    let mut labels = vec![false; n];
    for i in 0..inliers {
        let u = rng.uniform_in::<f64>(-std::f64::consts::PI, std::f64::consts::PI);
        let v = rng.uniform_in::<f64>(-std::f64::consts::PI, std::f64::consts::PI);
        let point = manifold_point(u, v);
        for (j, value) in point.iter().enumerate() {
            x[(i, j)] = value + 0.03 * rng.normal::<f64>();
        }
    }
    for i in inliers..n {
        for j in 0..10 {
            x[(i, j)] = rng.uniform_in::<f64>(-1.8, 1.8);
        }
        labels[i] = true;
    }
    (x, labels)
}

/// Well-separated isotropic Gaussian blobs on orthogonal axes; returns the
/// points and their true cluster labels, cluster by cluster.
pub fn gaussian_blobs(
    per_cluster: usize,
    clusters: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Mat, Vec<usize>) {
    assert!(clusters <= dim, "need an axis per cluster");
    let mut rng = Rng::new(seed);
    let n = per_cluster * clusters;
    let mut x = Mat::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for c in 0..clusters {
        for i in 0..per_cluster {
            let row = c * per_cluster + i;
            for j in 0..dim {
                let center = if j == c { separation } else { 0.0 };
                x[(row, j)] = center + rng.normal::<f64>();
            }
            labels.push(c);
        }
    }
    (x, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::PreprocessPipeline;

    #[test]
    fn bank_like_is_deterministic_and_imbalanced() {
        let a = bank_like(1000, 5);
        let b = bank_like(1000, 5);
        assert_eq!(a.rows(), 1000);
        let ta = a.target().unwrap().expect("has target");
        let tb = b.target().unwrap().expect("has target");
        assert_eq!(ta.labels, tb.labels);
        let positives: usize = ta.labels.iter().map(|&l| l as usize).sum();
        let rate = positives as f64 / 1000.0;
        assert!(
            (0.05..=0.35).contains(&rate),
            "positive rate {rate} out of the imbalanced band"
        );
        assert_eq!(ta.classes[1], "yes");
    }

    #[test]
    fn bank_like_feeds_the_preprocessing_pipeline() {
        let table = bank_like(300, 9);
        let indices: Vec<usize> = (0..300).collect();
        let pipeline = PreprocessPipeline::fit(&table, &indices).unwrap();
        let x = pipeline.transform(&table, &indices).unwrap();
        assert_eq!(x.rows(), 300);
        // 5 numeric columns plus the fitted one-hot widths.
        assert!(x.cols() > 15, "one-hot expansion missing, got {}", x.cols());
        assert!(x.all_finite());
    }

    #[test]
    fn manifold_rows_sit_near_the_noiseless_surface() {
        let x = manifold_10d(200, 11);
        assert_eq!(x.shape(), (200, 10));
        // Coordinates are bounded functions plus 0.05 noise.
        assert!(x.max_abs() < 1.5);
    }

    #[test]
    fn manifold_table_round_trips_through_the_pipeline() {
        let table = manifold_table(120, 13);
        assert!(table.target().unwrap().is_none());
        let indices: Vec<usize> = (0..120).collect();
        let pipeline = PreprocessPipeline::fit(&table, &indices).unwrap();
        let x = pipeline.transform(&table, &indices).unwrap();
        assert_eq!(x.shape(), (120, 10));
    }

    #[test]
    fn outlier_benchmark_labels_the_tail() {
        let (x, labels) = outlier_benchmark(500, 25, 17);
        assert_eq!(x.rows(), 525);
        assert_eq!(labels.iter().filter(|&&o| o).count(), 25);
        assert!(labels[..500].iter().all(|&o| !o));
    }

    #[test]
    fn blobs_are_separated_by_construction() {
        let (x, labels) = gaussian_blobs(50, 3, 10, 8.0, 19);
        assert_eq!(x.rows(), 150);
        assert_eq!(labels.len(), 150);
        // Cluster means land near their construction centers.
        for c in 0..3 {
            let mut mean = 0.0;
            for i in 0..50 {
                mean += x[(c * 50 + i, c)];
            }
            mean /= 50.0;
            assert!((mean - 8.0).abs() < 1.0, "cluster {c} mean {mean}");
        }
    }
}
