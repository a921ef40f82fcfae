use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::FeatureTable;
use super::Side;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Categorical,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
}

/// Contents of `schema.json`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDeclaration {
    #[serde(default)]
    pub user_fields: Vec<FieldDecl>,
    #[serde(default)]
    pub item_fields: Vec<FieldDecl>,
}

impl SchemaDeclaration {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn fields(&self, side: Side) -> &[FieldDecl] {
        match side {
            Side::User => &self.user_fields,
            Side::Item => &self.item_fields,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldEncoder {
    /// Vocabulary in index order; the out-of-vocabulary index is `vocabulary.len()`.
    Categorical {
        vocabulary: Vec<String>,
        lookup: HashMap<String, usize>,
    },
    Continuous { min: f64, max: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedField {
    pub name: String,
    pub encoder: FieldEncoder,
}

impl FittedField {
    pub fn categorical(name: impl Into<String>, vocabulary: Vec<String>) -> Self {
        let lookup = vocabulary
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        FittedField {
            name: name.into(),
            encoder: FieldEncoder::Categorical { vocabulary, lookup },
        }
    }

    pub fn continuous(name: impl Into<String>, min: f64, max: f64) -> Self {
        FittedField {
            name: name.into(),
            encoder: FieldEncoder::Continuous { min, max },
        }
    }

    pub fn kind(&self) -> FieldKind {
        match self.encoder {
            FieldEncoder::Categorical { .. } => FieldKind::Categorical,
            FieldEncoder::Continuous { .. } => FieldKind::Continuous,
        }
    }

    /// Rows of the embedding table: vocabulary plus the OOV slot.
    pub fn table_rows(&self) -> Option<usize> {
        match &self.encoder {
            FieldEncoder::Categorical { vocabulary, .. } => Some(vocabulary.len() + 1),
            FieldEncoder::Continuous { .. } => None,
        }
    }
}

/// Fitted per-side feature encoders.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSchema {
    pub user_fields: Vec<FittedField>,
    pub item_fields: Vec<FittedField>,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    name: String,
    kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<BTreeMap<String, usize>>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    user_fields: Vec<FieldRepr>,
    item_fields: Vec<FieldRepr>,
}

impl From<&FittedField> for FieldRepr {
    fn from(f: &FittedField) -> Self {
        match &f.encoder {
            FieldEncoder::Categorical { vocabulary, .. } => FieldRepr {
                name: f.name.clone(),
                kind: FieldKind::Categorical,
                min: None,
                max: None,
                vocabulary: Some(
                    vocabulary
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.clone(), i))
                        .collect(),
                ),
            },
            FieldEncoder::Continuous { min, max } => FieldRepr {
                name: f.name.clone(),
                kind: FieldKind::Continuous,
                min: Some(*min),
                max: Some(*max),
                vocabulary: None,
            },
        }
    }
}

impl TryFrom<FieldRepr> for FittedField {
    type Error = Error;

    fn try_from(r: FieldRepr) -> Result<Self> {
        match r.kind {
            FieldKind::Continuous => {
                let (min, max) = match (r.min, r.max) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::Schema(format!("field {}: missing min/max", r.name))),
                };
                if min > max {
                    return Err(Error::Schema(format!("field {}: min > max", r.name)));
                }
                Ok(FittedField::continuous(r.name, min, max))
            }
            FieldKind::Categorical => {
                let vocab = r.vocabulary.unwrap_or_default();
                let mut ordered = vec![None; vocab.len()];
                for (value, idx) in vocab {
                    match ordered.get_mut(idx) {
                        Some(slot @ None) => *slot = Some(value),
                        _ => {
                            return Err(Error::Schema(format!(
                                "field {}: vocabulary indices must be dense and unique",
                                r.name
                            )))
                        }
                    }
                }
                let vocabulary = ordered.into_iter().map(Option::unwrap).collect();
                Ok(FittedField::categorical(r.name, vocabulary))
            }
        }
    }
}

impl FeatureSchema {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn fields(&self, side: Side) -> &[FittedField] {
        match side {
            Side::User => &self.user_fields,
            Side::Item => &self.item_fields,
        }
    }

    pub fn transpose(&self) -> Self {
        FeatureSchema {
            user_fields: self.item_fields.clone(),
            item_fields: self.user_fields.clone(),
        }
    }

    /// Embedding-table row counts (vocabulary + OOV) of the categorical fields, in order.
    pub fn categorical_sizes(&self, side: Side) -> Vec<usize> {
        self.fields(side).iter().filter_map(|f| f.table_rows()).collect()
    }

    pub fn continuous_count(&self, side: Side) -> usize {
        self.fields(side)
            .iter()
            .filter(|f| f.kind() == FieldKind::Continuous)
            .count()
    }

    pub fn to_json(&self) -> String {
        let repr = SchemaRepr {
            user_fields: self.user_fields.iter().map(FieldRepr::from).collect(),
            item_fields: self.item_fields.iter().map(FieldRepr::from).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: SchemaRepr = serde_json::from_str(text)?;
        let convert = |v: Vec<FieldRepr>| -> Result<Vec<FittedField>> {
            v.into_iter().map(FittedField::try_from).collect()
        };
        Ok(FeatureSchema {
            user_fields: convert(repr.user_fields)?,
            item_fields: convert(repr.item_fields)?,
        })
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(Error::file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        Self::from_json(&text)
    }
}

fn fit_side(decls: &[FieldDecl], table: Option<&FeatureTable>, side: Side) -> Result<Vec<FittedField>> {
    let mut fitted = Vec::with_capacity(decls.len());
    for decl in decls {
        let values: Vec<(u64, &str)> = match table {
            Some(t) => t.column_values(&decl.name).ok_or_else(|| {
                Error::Schema(format!(
                    "declared {side:?} field {:?} is not a column of the feature file",
                    decl.name
                ))
            })?,
            None => {
                return Err(Error::Schema(format!(
                    "declared {side:?} field {:?} but no feature file was given",
                    decl.name
                )))
            }
        };
        let field = match decl.kind {
            FieldKind::Continuous => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for (line, raw) in values {
                    let x = parse_continuous(raw, line, &decl.name)?;
                    min = min.min(x);
                    max = max.max(x);
                }
                if min > max {
                    // No observed values: degenerate range, encodes to the midpoint.
                    min = 0.0;
                    max = 0.0;
                }
                FittedField::continuous(&decl.name, min, max)
            }
            FieldKind::Categorical => {
                let mut counts: HashMap<&str, usize> = HashMap::new();
                for (_, raw) in values {
                    *counts.entry(raw).or_default() += 1;
                }
                let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
                FittedField::categorical(
                    &decl.name,
                    ranked.into_iter().map(|(v, _)| v.to_owned()).collect(),
                )
            }
        };
        fitted.push(field);
    }
    Ok(fitted)
}

pub(crate) fn parse_continuous(raw: &str, line: u64, field: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Parse {
            line,
            message: format!("continuous field {field:?} has non-numeric value {raw:?}"),
        }),
    }
}

/// Fits min/max of continuous fields and vocabularies (by descending
/// frequency, then lexicographically) of categorical fields.
pub fn fit_schema(
    declaration: &SchemaDeclaration,
    user_features: Option<&FeatureTable>,
    item_features: Option<&FeatureTable>,
) -> Result<FeatureSchema> {
    Ok(FeatureSchema {
        user_fields: fit_side(&declaration.user_fields, user_features, Side::User)?,
        item_fields: fit_side(&declaration.item_fields, item_features, Side::Item)?,
    })
}
