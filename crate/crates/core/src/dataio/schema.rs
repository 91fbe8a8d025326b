use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    /// Binary categorical column used as the supervised label. At most one.
    Target,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered column declarations for one CSV layout.
///
/// Shipped as a TOML file because the public bank-marketing file variants
/// disagree on column count and naming; see `configs/` for examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSpec>,
}

fn default_delimiter() -> char {
    ';'
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let schema: Schema = toml::from_str(text).map_err(|e| DataError::SchemaError {
            reason: e.to_string(),
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !self.delimiter.is_ascii() {
            return Err(DataError::SchemaError {
                reason: format!("delimiter {:?} must be a single ascii character", self.delimiter),
            });
        }
        if self.columns.is_empty() {
            return Err(DataError::SchemaError {
                reason: "schema declares no columns".into(),
            });
        }
        let mut seen: Vec<&str> = Vec::new();
        for c in &self.columns {
            if seen.contains(&c.name.as_str()) {
                return Err(DataError::SchemaError {
                    reason: format!("duplicate column name {:?}", c.name),
                });
            }
            seen.push(&c.name);
        }
        let targets = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Target)
            .count();
        if targets > 1 {
            return Err(DataError::SchemaError {
                reason: format!("schema declares {targets} target columns; at most one allowed"),
            });
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn target_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::Target)
    }
}
