use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, DataError, RawTable};
use crate::Mat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NumericStats {
    column: usize,
    name: String,
    mean: f64,
    std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Vocabulary {
    column: usize,
    name: String,
    values: Vec<String>,
}

/// Feature encoder fitted on training rows only.
///
/// Numeric columns are standardized with the population (divisor n)
/// deviation; zero-variance columns map to 0. Categorical columns become
/// one-hot blocks over the sorted training vocabulary, with categories
/// unseen at fit time encoded as all-zeros. Output column order: numerics
/// in schema order, then one-hot blocks in schema order. The target column
/// is never encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPipeline {
    fitted: bool,
    numeric: Vec<NumericStats>,
    categorical: Vec<Vocabulary>,
}

impl PreprocessPipeline {
    pub fn fit(table: &RawTable, rows: &[usize]) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptyFit);
        }
        let n = rows.len() as f64;
        let mut numeric = Vec::new();
        let mut categorical = Vec::new();
        for (index, spec) in table.schema().columns.iter().enumerate() {
            match (spec.kind, table.column(index)) {
                (ColumnKind::Numeric, Column::Numeric(values)) => {
                    let mean = rows.iter().map(|&r| values[r]).sum::<f64>() / n;
                    let var = rows
                        .iter()
                        .map(|&r| {
                            let d = values[r] - mean;
                            d * d
                        })
                        .sum::<f64>()
                        / n;
                    numeric.push(NumericStats {
                        column: index,
                        name: spec.name.clone(),
                        mean,
                        std: var.sqrt(),
                    });
                }
                (ColumnKind::Categorical, Column::Categorical(values)) => {
                    let mut seen: Vec<&str> = Vec::new();
                    for &r in rows {
                        let v = values[r].as_str();
                        if !seen.contains(&v) {
                            seen.push(v);
                        }
                    }
                    seen.sort_unstable();
                    categorical.push(Vocabulary {
                        column: index,
                        name: spec.name.clone(),
                        values: seen.iter().map(|s| s.to_string()).collect(),
                    });
                }
                (ColumnKind::Target, _) => {}
                _ => unreachable!("table construction enforces kind/column agreement"),
            }
        }
        Ok(PreprocessPipeline {
            fitted: true,
            numeric,
            categorical,
        })
    }

    /// Width of the encoded matrix.
    pub fn width(&self) -> usize {
        self.numeric.len() + self.categorical.iter().map(|v| v.values.len()).sum::<usize>()
    }

    /// True for output columns that hold standardized numerics, the only
    /// columns eligible for test-noise injection.
    pub fn numeric_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.width()];
        for m in mask.iter_mut().take(self.numeric.len()) {
            *m = true;
        }
        mask
    }

    pub fn transform(&self, table: &RawTable, rows: &[usize]) -> Result<Mat, DataError> {
        if !self.fitted {
            return Err(DataError::NotFitted);
        }
        let mut out = Mat::zeros(rows.len(), self.width());
        for (out_col, stats) in self.numeric.iter().enumerate() {
            let Column::Numeric(values) = table.column(stats.column) else {
                unreachable!("numeric stats always point at numeric columns");
            };
            for (out_row, &r) in rows.iter().enumerate() {
                out[(out_row, out_col)] = if stats.std > 0.0 {
                    (values[r] - stats.mean) / stats.std
                } else {
                    0.0
                };
            }
        }
        let mut offset = self.numeric.len();
        for vocab in &self.categorical {
            let Column::Categorical(values) = table.column(vocab.column) else {
                unreachable!("vocabularies always point at categorical columns");
            };
            for (out_row, &r) in rows.iter().enumerate() {
                if let Ok(pos) = vocab.values.binary_search(&values[r]) {
                    out[(out_row, offset + pos)] = 1.0;
                }
            }
            offset += vocab.values.len();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Schema;

    fn table(numeric: Vec<f64>, labels: Vec<&str>) -> RawTable {
        let schema = Schema::from_toml_str(
            r#"
[[column]]
name = "x"
kind = "numeric"
[[column]]
name = "c"
kind = "categorical"
"#,
        )
        .unwrap();
        RawTable::from_columns(
            schema,
            vec![
                Column::Numeric(numeric),
                Column::Categorical(labels.into_iter().map(String::from).collect()),
            ],
        )
        .unwrap()
    }

    fn all_rows(t: &RawTable) -> Vec<usize> {
        (0..t.rows()).collect()
    }

    #[test]
    fn fit_uses_population_deviation() {
        let t = table(vec![2.0, 4.0, 6.0], vec!["a", "b", "a"]);
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        assert_eq!(p.numeric[0].mean, 4.0);
        // sqrt(((2-4)^2 + 0 + (6-4)^2) / 3)
        assert!((p.numeric[0].std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_is_sorted() {
        let t = table(vec![0.0; 3], vec!["single", "married", "divorced"]);
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        assert_eq!(p.categorical[0].values, ["divorced", "married", "single"]);
    }

    #[test]
    fn constant_column_encodes_to_zero() {
        let t = table(vec![5.0, 5.0, 5.0], vec!["a", "a", "b"]);
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        assert_eq!(p.numeric[0].std, 0.0);
        let x = p.transform(&t, &all_rows(&t)).unwrap();
        for r in 0..3 {
            assert_eq!(x[(r, 0)], 0.0);
        }
    }

    #[test]
    fn one_hot_block_is_an_indicator() {
        let t = table(vec![0.0; 3], vec!["single", "married", "divorced"]);
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        let probe = table(vec![0.0], vec!["married"]);
        let x = p.transform(&probe, &[0]).unwrap();
        assert_eq!(x.shape(), (1, 4));
        assert_eq!(&x.data()[1..], &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn unseen_category_encodes_all_zeros() {
        let t = table(vec![0.0; 2], vec!["a", "b"]);
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        let probe = table(vec![0.0], vec!["retired-x"]);
        let x = p.transform(&probe, &[0]).unwrap();
        assert_eq!(&x.data()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn fit_rows_standardize_to_zero_mean_unit_std() {
        let t = table(
            vec![1.5, -2.0, 0.25, 7.0, 3.0, -1.0],
            vec!["a", "b", "a", "c", "b", "a"],
        );
        let p = PreprocessPipeline::fit(&t, &all_rows(&t)).unwrap();
        let x = p.transform(&t, &all_rows(&t)).unwrap();
        let mean = x.col_means()[0];
        let std = x.col_stds()[0];
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_ignores_rows_outside_subset() {
        let a = table(vec![2.0, 4.0, 6.0, 100.0], vec!["a", "b", "a", "zzz"]);
        let b = table(vec![2.0, 4.0, 6.0, -777.0], vec!["a", "b", "a", "qqq"]);
        let fit_rows = [0usize, 1, 2];
        assert_eq!(
            PreprocessPipeline::fit(&a, &fit_rows).unwrap(),
            PreprocessPipeline::fit(&b, &fit_rows).unwrap()
        );
    }

    #[test]
    fn empty_subset_is_rejected() {
        let t = table(vec![1.0], vec!["a"]);
        assert!(matches!(
            PreprocessPipeline::fit(&t, &[]),
            Err(DataError::EmptyFit)
        ));
    }

    #[test]
    fn unfitted_pipeline_refuses_transform() {
        let t = table(vec![1.0], vec!["a"]);
        let p = PreprocessPipeline::fit(&t, &[0]).unwrap();
        let mut json = serde_json::to_value(&p).unwrap();
        json["fitted"] = serde_json::Value::Bool(false);
        let stale: PreprocessPipeline = serde_json::from_value(json).unwrap();
        assert!(matches!(
            stale.transform(&t, &[0]),
            Err(DataError::NotFitted)
        ));
    }

    #[test]
    fn pipeline_round_trips_through_json() {
        let t = table(vec![2.0, 4.0], vec!["a", "b"]);
        let p = PreprocessPipeline::fit(&t, &[0, 1]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: PreprocessPipeline = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn numeric_mask_covers_exactly_the_numeric_prefix() {
        let t = table(vec![1.0, 2.0], vec!["a", "b"]);
        let p = PreprocessPipeline::fit(&t, &[0, 1]).unwrap();
        assert_eq!(p.numeric_mask(), vec![true, false, false]);
    }
}
