use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::dataset::InteractionDataset;
use super::schema::{parse_continuous, FeatureSchema, FieldEncoder, FittedField};
use super::Side;
use crate::error::{Error, Result};

/// Maps `x` from `[min, max]` onto `[0, 1]`, clamping out-of-range values.
/// A degenerate range (`min == max`) maps everything to 0.5.
pub fn normalize_continuous(x: f64, min: f64, max: f64) -> Result<f64> {
    if min > max {
        return Err(Error::invalid(format!("normalization range min {min} > max {max}")));
    }
    if min == max {
        return Ok(0.5);
    }
    Ok(((x - min) / (max - min)).clamp(0.0, 1.0))
}

/// Encoded inputs of one user or item.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub id: usize,
    /// One vocabulary index per categorical field, schema order.
    pub categorical: Vec<usize>,
    /// One value in `[0, 1]` per continuous field, schema order.
    pub continuous: Vec<f64>,
}

impl FeatureVector {
    pub fn id_only(id: usize) -> Self {
        FeatureVector {
            id,
            categorical: Vec::new(),
            continuous: Vec::new(),
        }
    }
}

struct FeatureRow {
    id: String,
    line: u64,
    values: Vec<String>,
}

/// Raw per-entity feature CSV (`<id column>,<field...>`). Empty cells are missing values.
pub struct FeatureTable {
    columns: Vec<String>,
    rows: Vec<FeatureRow>,
    by_id: HashMap<String, usize>,
}

impl FeatureTable {
    pub fn from_csv_reader<R: Read>(reader: R, id_column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let id_pos = headers.iter().position(|h| h == id_column).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header is missing the {id_column:?} column"),
        })?;
        let columns: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != id_pos)
            .map(|(_, h)| h.clone())
            .collect();

        let mut rows = Vec::new();
        let mut by_id = HashMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let id = record.get(id_pos).unwrap_or("").to_owned();
            if id.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("empty {id_column}"),
                });
            }
            let values = record
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != id_pos)
                .map(|(_, v)| v.to_owned())
                .collect();
            if by_id.insert(id.clone(), rows.len()).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate {id_column} {id:?}"),
                });
            }
            rows.push(FeatureRow { id, line, values });
        }
        Ok(FeatureTable { columns, rows, by_id })
    }

    pub fn load(path: impl AsRef<Path>, id_column: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::file(path))?;
        Self::from_csv_reader(std::io::BufReader::new(file), id_column)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Non-empty cells of a column with their source line numbers.
    pub fn column_values(&self, name: &str) -> Option<Vec<(u64, &str)>> {
        let c = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| (r.line, r.values[c].as_str()))
                .filter(|(_, v)| !v.is_empty())
                .collect(),
        )
    }

    /// Non-empty value of `field` for entity `id`.
    pub fn value(&self, id: &str, field: &str) -> Option<&str> {
        let row = &self.rows[*self.by_id.get(id)?];
        let v = row.values[self.column(field)?].as_str();
        (!v.is_empty()).then_some(v)
    }

    fn line_of(&self, id: &str) -> u64 {
        self.by_id.get(id).map(|&r| self.rows[r].line).unwrap_or(0)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.id.as_str())
    }
}

fn encode_with<'a>(
    lookup: impl Fn(&str) -> Option<&'a str>,
    fields: &[FittedField],
    id: usize,
    line: u64,
) -> Result<FeatureVector> {
    let mut fv = FeatureVector::id_only(id);
    for field in fields {
        let raw = lookup(&field.name);
        match &field.encoder {
            FieldEncoder::Categorical { vocabulary, lookup } => {
                let idx = raw
                    .and_then(|v| lookup.get(v).copied())
                    .unwrap_or(vocabulary.len());
                fv.categorical.push(idx);
            }
            FieldEncoder::Continuous { min, max } => {
                let value = match raw {
                    None => 0.5,
                    Some(v) => normalize_continuous(parse_continuous(v, line, &field.name)?, *min, *max)?,
                };
                fv.continuous.push(value);
            }
        }
    }
    Ok(fv)
}

/// Encodes raw field values of one entity. Unseen or missing categorical
/// values map to the OOV index; missing continuous values to 0.5.
pub fn encode_entity(
    raw: &HashMap<String, String>,
    schema: &FeatureSchema,
    side: Side,
    id_index: usize,
) -> Result<FeatureVector> {
    encode_with(
        |name| raw.get(name).map(String::as_str).filter(|v| !v.is_empty()),
        schema.fields(side),
        id_index,
        0,
    )
}

/// Encoded features for every user and item of a dataset, by dense index.
#[derive(Clone, Debug, PartialEq)]
pub struct EntityFeatures {
    users: Vec<FeatureVector>,
    items: Vec<FeatureVector>,
}

impl EntityFeatures {
    /// Entities absent from a feature table get all-missing features.
    pub fn build(
        schema: &FeatureSchema,
        dataset: &InteractionDataset,
        user_table: Option<&FeatureTable>,
        item_table: Option<&FeatureTable>,
    ) -> Result<Self> {
        let encode_side = |side: Side, ids: &[String], table: Option<&FeatureTable>| {
            ids.iter()
                .enumerate()
                .map(|(idx, id)| match table {
                    Some(t) => encode_with(|f| t.value(id, f), schema.fields(side), idx, t.line_of(id)),
                    None => encode_with(|_| None, schema.fields(side), idx, 0),
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(EntityFeatures {
            users: encode_side(Side::User, dataset.users().ids(), user_table)?,
            items: encode_side(Side::Item, dataset.items().ids(), item_table)?,
        })
    }

    /// ID-only features (no auxiliary fields).
    pub fn ids_only(num_users: usize, num_items: usize) -> Self {
        EntityFeatures {
            users: (0..num_users).map(FeatureVector::id_only).collect(),
            items: (0..num_items).map(FeatureVector::id_only).collect(),
        }
    }

    pub fn from_vectors(users: Vec<FeatureVector>, items: Vec<FeatureVector>) -> Self {
        EntityFeatures { users, items }
    }

    pub fn side(&self, side: Side) -> &[FeatureVector] {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }

    pub fn user(&self, idx: usize) -> &FeatureVector {
        &self.users[idx]
    }

    pub fn item(&self, idx: usize) -> &FeatureVector {
        &self.items[idx]
    }

    pub fn transpose(&self) -> Self {
        EntityFeatures {
            users: self.items.clone(),
            items: self.users.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{fit_schema, FieldDecl, FieldKind, SchemaDeclaration};
    use proptest::prelude::*;

    #[test]
    fn normalization_bounds() {
        assert_eq!(normalize_continuous(18.0, 18.0, 65.0).unwrap(), 0.0);
        assert_eq!(normalize_continuous(65.0, 18.0, 65.0).unwrap(), 1.0);
        assert!((normalize_continuous(41.5, 18.0, 65.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(normalize_continuous(100.0, 18.0, 65.0).unwrap(), 1.0);
        assert_eq!(normalize_continuous(-3.0, 18.0, 65.0).unwrap(), 0.0);
        assert_eq!(normalize_continuous(7.0, 3.0, 3.0).unwrap(), 0.5);
        assert!(normalize_continuous(1.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_monotone(a in -100.0f64..100.0, b in -100.0f64..100.0,
                                     lo in -50.0f64..0.0, width in 0.1f64..80.0) {
            let hi = lo + width;
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            let nx = normalize_continuous(x, lo, hi).unwrap();
            let ny = normalize_continuous(y, lo, hi).unwrap();
            prop_assert!(nx <= ny);
            prop_assert!((0.0..=1.0).contains(&nx));
        }
    }

    fn schema() -> FeatureSchema {
        let t = FeatureTable::from_csv_reader("user_id,sex,age\na,M,20\nb,F,30\nc,M,\n".as_bytes(), "user_id")
            .unwrap();
        let decl = SchemaDeclaration {
            user_fields: vec![
                FieldDecl { name: "sex".into(), kind: FieldKind::Categorical },
                FieldDecl { name: "age".into(), kind: FieldKind::Continuous },
            ],
            item_fields: vec![],
        };
        fit_schema(&decl, Some(&t), None).unwrap()
    }

    #[test]
    fn encodes_known_unseen_and_missing() {
        let s = schema();
        let raw = |pairs: &[(&str, &str)]| -> HashMap<String, String> {
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
        };
        let fv = encode_entity(&raw(&[("sex", "M"), ("age", "25")]), &s, Side::User, 4).unwrap();
        assert_eq!(fv.id, 4);
        assert_eq!(fv.categorical, vec![0]);
        assert!((fv.continuous[0] - 0.5).abs() < 1e-12);

        let fv = encode_entity(&raw(&[("sex", "X")]), &s, Side::User, 0).unwrap();
        assert_eq!(fv.categorical, vec![2]);
        assert_eq!(fv.continuous, vec![0.5]);

        assert!(encode_entity(&raw(&[("age", "old")]), &s, Side::User, 0).is_err());
    }

    #[test]
    fn build_covers_all_entities() {
        let s = schema();
        let d = InteractionDataset::from_csv_reader("user_id,item_id\na,x\nz,x\n".as_bytes()).unwrap();
        let t = FeatureTable::from_csv_reader("user_id,sex,age\na,F,30\n".as_bytes(), "user_id").unwrap();
        let f = EntityFeatures::build(&s, &d, Some(&t), None).unwrap();
        assert_eq!(f.user(0).categorical, vec![1]);
        assert_eq!(f.user(0).continuous, vec![1.0]);
        // "z" has no feature row.
        assert_eq!(f.user(1).categorical, vec![2]);
        assert_eq!(f.user(1).continuous, vec![0.5]);
        assert_eq!(f.item(0), &FeatureVector::id_only(0));
    }
}
