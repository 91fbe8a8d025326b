//! Tabular ingestion and preprocessing.
//!
//! A [`Schema`] names each CSV column and its kind, [`RawTable`] holds the
//! parsed file, and [`PreprocessPipeline`] turns rows into the numeric
//! matrix the models consume: standardized numeric columns first, then
//! one-hot blocks, both in schema order. Splitting and test-noise
//! injection live in [`split`].

mod preprocess;
mod schema;
mod split;
mod table;

pub use preprocess::PreprocessPipeline;
pub use schema::{ColumnKind, ColumnSpec, Schema};
pub use split::{inject_noise, random_split, stratified_split, SplitIndices};
pub use table::{load_csv, Column, RawTable, TargetInfo};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv at {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("schema error: {reason}")]
    SchemaError { reason: String },
    #[error("header mismatch: expected columns {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}, column {col} ({name}): cannot parse {value:?} as a finite number")]
    ParseError {
        row: usize,
        col: usize,
        name: String,
        value: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    ArityError {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot fit a pipeline on an empty row subset")]
    EmptyFit,
    #[error("pipeline must be fitted before transform")]
    NotFitted,
    #[error("target column {name}: expected exactly 2 classes, found {found}")]
    TargetError { name: String, found: usize },
    #[error("class {class} has only {count} rows; need at least 2 to stratify")]
    DegenerateClass { class: u8, count: usize },
}
