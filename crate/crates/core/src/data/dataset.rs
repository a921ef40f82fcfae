use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Bidirectional map between external string ids and dense indices,
/// assigned in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl IdIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut index = IdIndex::new();
        for id in ids {
            let id = id.into();
            if index.lookup.contains_key(&id) {
                return Err(Error::invalid(format!("duplicate id {id:?}")));
            }
            index.get_or_insert(&id);
        }
        Ok(index)
    }

    /// Sequential ids `{prefix}{i}` for `i` in `0..n`.
    pub fn sequential(prefix: &str, n: usize) -> Self {
        let mut index = IdIndex::new();
        for i in 0..n {
            index.get_or_insert(&format!("{prefix}{i}"));
        }
        index
    }

    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.lookup.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.lookup.insert(id.to_owned(), i);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// One observed positive. `order` is the row position in the source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub timestamp: i64,
    pub order: usize,
}

impl Interaction {
    /// Sort key for "latest": timestamp, then file order.
    pub fn recency(&self) -> (i64, usize) {
        (self.timestamp, self.order)
    }
}

/// Implicit-feedback interactions with adjacency lists for both axes.
///
/// Each (user, item) pair occurs once; adjacency lists are sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionDataset {
    users: IdIndex,
    items: IdIndex,
    interactions: Vec<Interaction>,
    user_items: Vec<Vec<usize>>,
    item_users: Vec<Vec<usize>>,
}

impl InteractionDataset {
    /// Builds a dataset from interactions over fixed index spaces. Duplicate
    /// pairs keep the earliest occurrence by `(timestamp, order)`.
    pub fn new(users: IdIndex, items: IdIndex, interactions: Vec<Interaction>) -> Result<Self> {
        let (n_users, n_items) = (users.len(), items.len());
        for x in &interactions {
            if x.user >= n_users || x.item >= n_items {
                return Err(Error::Index(format!(
                    "interaction ({}, {}) outside {n_users} users x {n_items} items",
                    x.user, x.item
                )));
            }
        }
        let mut sorted = interactions;
        sorted.sort_by_key(|x| (x.user, x.item, x.timestamp, x.order));
        sorted.dedup_by_key(|x| (x.user, x.item));
        sorted.sort_by_key(|x| (x.order, x.user, x.item));

        let mut user_items = vec![Vec::new(); n_users];
        let mut item_users = vec![Vec::new(); n_items];
        for x in &sorted {
            user_items[x.user].push(x.item);
            item_users[x.item].push(x.user);
        }
        user_items.iter_mut().for_each(|v| v.sort_unstable());
        item_users.iter_mut().for_each(|v| v.sort_unstable());
        Ok(InteractionDataset {
            users,
            items,
            interactions: sorted,
            user_items,
            item_users,
        })
    }

    /// Builds from `(user_id, item_id, timestamp)` records in file order;
    /// a missing timestamp falls back to the record position.
    pub fn from_records<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, Option<i64>)>,
        S: AsRef<str>,
    {
        let mut users = IdIndex::new();
        let mut items = IdIndex::new();
        let mut interactions = Vec::new();
        for (order, (u, i, ts)) in records.into_iter().enumerate() {
            let user = users.get_or_insert(u.as_ref());
            let item = items.get_or_insert(i.as_ref());
            interactions.push(Interaction {
                user,
                item,
                timestamp: ts.unwrap_or(order as i64),
                order,
            });
        }
        if interactions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::new(users, items, interactions)
    }

    /// Parses `user_id,item_id[,timestamp]` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (user_col, item_col) = match (col("user_id"), col("item_id")) {
            (Some(u), Some(i)) => (u, i),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "header must contain user_id and item_id".into(),
                })
            }
        };
        let ts_col = col("timestamp");

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let field = |c: usize| row.get(c).unwrap_or("");
            let (u, i) = (field(user_col), field(item_col));
            if u.is_empty() || i.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty user_id or item_id".into(),
                });
            }
            let ts = match ts_col.map(field) {
                None | Some("") => None,
                Some(raw) => Some(raw.parse::<i64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("timestamp {raw:?} is not an integer"),
                })?),
            };
            records.push((u.to_owned(), i.to_owned(), ts));
        }
        Self::from_records(records)
    }

    pub fn load_interactions(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::file(path))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["user_id", "item_id", "timestamp"])?;
        for x in &self.interactions {
            w.write_record([
                self.users.id(x.user),
                self.items.id(x.item),
                &x.timestamp.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn users(&self) -> &IdIndex {
        &self.users
    }

    pub fn items(&self) -> &IdIndex {
        &self.items
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    /// Sorted item indices the user interacted with.
    pub fn items_of(&self, user: usize) -> &[usize] {
        &self.user_items[user]
    }

    /// Sorted user indices who interacted with the item.
    pub fn users_of(&self, item: usize) -> &[usize] {
        &self.item_users[item]
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.user_items[user].binary_search(&item).is_ok()
    }

    /// Percentage of the user x item matrix without an interaction.
    pub fn sparsity(&self) -> f64 {
        let cells = self.num_users() as f64 * self.num_items() as f64;
        100.0 * (1.0 - self.len() as f64 / cells)
    }

    /// Swaps the roles of users and items.
    pub fn transpose(&self) -> Self {
        InteractionDataset {
            users: self.items.clone(),
            items: self.users.clone(),
            interactions: self
                .interactions
                .iter()
                .map(|x| Interaction {
                    user: x.item,
                    item: x.user,
                    ..*x
                })
                .collect(),
            user_items: self.item_users.clone(),
            item_users: self.user_items.clone(),
        }
    }

    /// Same index spaces, subset of interactions.
    pub fn retain(&self, mut keep: impl FnMut(&Interaction) -> bool) -> Self {
        let interactions = self.interactions.iter().copied().filter(|x| keep(x)).collect();
        Self::new(self.users.clone(), self.items.clone(), interactions)
            .expect("subset of a valid dataset is valid")
    }
}
