use std::path::Path;

use super::{ColumnKind, DataError, Schema};

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }
}

/// Binary target labels extracted from a table, with the class names the
/// 0/1 codes map to. Class 1 is the lexicographically larger name.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetInfo {
    pub labels: Vec<u8>,
    pub classes: [String; 2],
}

/// A parsed CSV held column-major, cell values preserved exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    schema: Schema,
    columns: Vec<Column>,
    rows: usize,
}

impl RawTable {
    /// Assembles a table from pre-built columns; used by the synthetic
    /// generators. Column kinds and lengths must match the schema.
    pub fn from_columns(schema: Schema, columns: Vec<Column>) -> Result<Self, DataError> {
        schema.validate()?;
        if columns.len() != schema.arity() {
            return Err(DataError::SchemaError {
                reason: format!(
                    "schema declares {} columns, got {}",
                    schema.arity(),
                    columns.len()
                ),
            });
        }
        let rows = columns.first().map_or(0, Column::len);
        for (spec, col) in schema.columns.iter().zip(&columns) {
            let kind_ok = matches!(
                (spec.kind, col),
                (ColumnKind::Numeric, Column::Numeric(_))
                    | (ColumnKind::Categorical | ColumnKind::Target, Column::Categorical(_))
            );
            if !kind_ok {
                return Err(DataError::SchemaError {
                    reason: format!("column {:?} does not match its declared kind", spec.name),
                });
            }
            if col.len() != rows {
                return Err(DataError::SchemaError {
                    reason: format!("column {:?} has a mismatched length", spec.name),
                });
            }
        }
        Ok(RawTable {
            schema,
            columns,
            rows,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    /// Extracts binary labels from the target column, if the schema has
    /// one. Errors unless exactly two distinct values occur.
    pub fn target(&self) -> Result<Option<TargetInfo>, DataError> {
        let Some(idx) = self.schema.target_index() else {
            return Ok(None);
        };
        let name = &self.schema.columns[idx].name;
        let Column::Categorical(values) = &self.columns[idx] else {
            unreachable!("target columns are stored as categorical");
        };
        let mut classes: Vec<&str> = Vec::new();
        for v in values {
            if !classes.contains(&v.as_str()) {
                classes.push(v);
            }
        }
        if classes.len() != 2 {
            return Err(DataError::TargetError {
                name: name.clone(),
                found: classes.len(),
            });
        }
        classes.sort_unstable();
        let positive = classes[1];
        let labels = values
            .iter()
            .map(|v| u8::from(v == positive))
            .collect();
        Ok(Some(TargetInfo {
            labels,
            classes: [classes[0].to_string(), classes[1].to_string()],
        }))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    let path = path.display().to_string();
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io { path, source },
            _ => unreachable!("is_io_error guarantees an io kind"),
        }
    } else {
        DataError::Csv { path, source: e }
    }
}

/// Reads a delimited file against `schema`. The first row must repeat the
/// schema's column names in order; every later row becomes one record.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawTable, DataError> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut columns: Vec<Column> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Categorical | ColumnKind::Target => Column::Categorical(Vec::new()),
        })
        .collect();

    let mut rows = 0usize;
    let mut saw_header = false;
    for (record_index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if !saw_header {
            let found: Vec<String> = record.iter().map(|s| s.trim().to_string()).collect();
            if found != schema.names() {
                return Err(DataError::HeaderMismatch {
                    expected: schema.names().iter().map(|s| s.to_string()).collect(),
                    found,
                });
            }
            saw_header = true;
            continue;
        }
        // 1-based data row number, header not counted.
        let row = record_index;
        if record.len() != schema.arity() {
            return Err(DataError::ArityError {
                row,
                expected: schema.arity(),
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            match &mut columns[col] {
                Column::Numeric(values) => {
                    let parsed = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
                    match parsed {
                        Some(v) => values.push(v),
                        None => {
                            return Err(DataError::ParseError {
                                row,
                                col,
                                name: schema.columns[col].name.clone(),
                                value: cell.to_string(),
                            })
                        }
                    }
                }
                Column::Categorical(values) => values.push(cell.to_string()),
            }
        }
        rows += 1;
    }
    if !saw_header {
        return Err(DataError::HeaderMismatch {
            expected: schema.names().iter().map(|s| s.to_string()).collect(),
            found: Vec::new(),
        });
    }
    Ok(RawTable {
        schema: schema.clone(),
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank_schema() -> Schema {
        Schema::from_toml_str(
            r#"
delimiter = ";"
[[column]]
name = "age"
kind = "numeric"
[[column]]
name = "job"
kind = "categorical"
[[column]]
name = "y"
kind = "target"
"#,
        )
        .unwrap()
    }

    fn write_csv(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_quoted_rows_intact() {
        let (_d, path) = write_csv("age;job;y\n\"58\";\"admin.\";\"no\"\n44;technician;yes\n");
        let t = load_csv(&path, &bank_schema()).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.column(0), &Column::Numeric(vec![58.0, 44.0]));
        assert_eq!(
            t.column(1),
            &Column::Categorical(vec!["admin.".into(), "technician".into()])
        );
    }

    #[test]
    fn header_only_file_gives_zero_rows() {
        let (_d, path) = write_csv("age;job;y\n");
        let t = load_csv(&path, &bank_schema()).unwrap();
        assert_eq!(t.rows(), 0);
    }

    #[test]
    fn unknown_label_is_an_ordinary_category() {
        let (_d, path) = write_csv("age;job;y\n30;unknown;no\n31;services;yes\n");
        let t = load_csv(&path, &bank_schema()).unwrap();
        assert_eq!(
            t.column(1),
            &Column::Categorical(vec!["unknown".into(), "services".into()])
        );
    }

    #[test]
    fn mismatched_header_is_rejected() {
        let (_d, path) = write_csv("age;occupation;y\n30;admin.;no\n");
        match load_csv(&path, &bank_schema()) {
            Err(DataError::HeaderMismatch { found, .. }) => {
                assert_eq!(found[1], "occupation");
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn text_in_numeric_column_names_row_and_col() {
        let (_d, path) = write_csv("age;job;y\n30;admin.;no\nforty;services;yes\n");
        match load_csv(&path, &bank_schema()) {
            Err(DataError::ParseError { row, col, value, .. }) => {
                assert_eq!((row, col), (2, 0));
                assert_eq!(value, "forty");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_numeric_cell_is_rejected() {
        let (_d, path) = write_csv("age;job;y\ninf;admin.;no\n");
        assert!(matches!(
            load_csv(&path, &bank_schema()),
            Err(DataError::ParseError { .. })
        ));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let (_d, path) = write_csv("age;job;y\n30;admin.\n");
        match load_csv(&path, &bank_schema()) {
            Err(DataError::ArityError { row, expected, found }) => {
                assert_eq!((row, expected, found), (1, 3, 2));
            }
            other => panic!("expected ArityError, got {other:?}"),
        }
    }

    #[test]
    fn binary_target_maps_larger_name_to_one() {
        let (_d, path) = write_csv("age;job;y\n30;admin.;no\n31;services;yes\n32;admin.;no\n");
        let t = load_csv(&path, &bank_schema()).unwrap();
        let target = t.target().unwrap().unwrap();
        assert_eq!(target.classes, ["no".to_string(), "yes".to_string()]);
        assert_eq!(target.labels, vec![0, 1, 0]);
    }

    #[test]
    fn one_class_target_is_rejected() {
        let (_d, path) = write_csv("age;job;y\n30;admin.;no\n31;services;no\n");
        let t = load_csv(&path, &bank_schema()).unwrap();
        assert!(matches!(
            t.target(),
            Err(DataError::TargetError { found: 1, .. })
        ));
    }
}
