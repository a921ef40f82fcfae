use rand::seq::index;

use super::dataset::InteractionDataset;
use super::Direction;
use crate::error::{Error, Result};
use crate::rng;

/// One held-out query: rank `held_out` against `negatives`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub query: usize,
    pub held_out: usize,
    pub negatives: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LooSplit {
    pub direction: Direction,
    pub train: InteractionDataset,
    pub tests: Vec<TestCase>,
}

impl LooSplit {
    /// Number of test cases whose candidate pool was smaller than requested.
    pub fn short_pools(&self, requested: usize) -> usize {
        self.tests.iter().filter(|t| t.negatives.len() < requested).count()
    }
}

/// Item-direction split; queries are users.
fn split_by_user(dataset: &InteractionDataset, negatives_per_test: usize, seed: u64) -> LooSplit {
    let n_items = dataset.num_items();
    let mut latest: Vec<Option<(i64, usize, usize)>> = vec![None; dataset.num_users()];
    for x in dataset.interactions() {
        let slot = &mut latest[x.user];
        let cand = (x.timestamp, x.order, x.item);
        if slot.is_none_or(|cur| (cand.0, cand.1) > (cur.0, cur.1)) {
            *slot = Some(cand);
        }
    }

    let mut tests = Vec::new();
    let mut held_out = vec![None; dataset.num_users()];
    for user in 0..dataset.num_users() {
        let seen = dataset.items_of(user);
        if seen.len() < 2 {
            continue;
        }
        let (_, _, item) = latest[user].expect("user has interactions");
        held_out[user] = Some(item);

        let mut pool = Vec::with_capacity(n_items - seen.len());
        let mut s = seen.iter().peekable();
        for i in 0..n_items {
            if s.peek() == Some(&&i) {
                s.next();
            } else {
                pool.push(i);
            }
        }
        let negatives = if pool.len() <= negatives_per_test {
            pool
        } else {
            let mut r = rng::seeded(rng::derive_seed(seed, user as u64));
            index::sample(&mut r, pool.len(), negatives_per_test)
                .into_iter()
                .map(|k| pool[k])
                .collect()
        };
        tests.push(TestCase {
            query: user,
            held_out: item,
            negatives,
        });
    }
    let train = dataset.retain(|x| held_out[x.user] != Some(x.item));
    LooSplit {
        direction: Direction::Item,
        train,
        tests,
    }
}

/// Leave-one-out split: each query's latest interaction (by timestamp, then
/// file order) is held out and paired with up to `negatives_per_test`
/// candidates it never interacted with, sampled without replacement.
/// Queries with fewer than two interactions stay entirely in train.
///
/// The user direction is computed on the transposed dataset, so it is the
/// exact mirror of the item direction.
pub fn leave_one_out_split(
    dataset: &InteractionDataset,
    direction: Direction,
    negatives_per_test: usize,
    seed: u64,
) -> Result<LooSplit> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if negatives_per_test == 0 {
        return Err(Error::invalid("negatives_per_test must be at least 1"));
    }
    Ok(match direction {
        Direction::Item => split_by_user(dataset, negatives_per_test, seed),
        Direction::User => {
            let mirrored = split_by_user(&dataset.transpose(), negatives_per_test, seed);
            LooSplit {
                direction: Direction::User,
                train: mirrored.train.transpose(),
                tests: mirrored.tests,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{IdIndex, Interaction};
    use proptest::prelude::*;

    fn dataset(rows: &[(usize, usize, i64)], users: usize, items: usize) -> InteractionDataset {
        let interactions = rows
            .iter()
            .enumerate()
            .map(|(order, &(user, item, timestamp))| Interaction { user, item, timestamp, order })
            .collect();
        InteractionDataset::new(IdIndex::sequential("u", users), IdIndex::sequential("i", items), interactions)
            .unwrap()
    }

    #[test]
    fn latest_interaction_is_held_out() {
        let d = dataset(&[(0, 2, 30), (0, 0, 10), (0, 1, 20), (1, 3, 5)], 2, 5);
        let s = leave_one_out_split(&d, Direction::Item, 99, 1).unwrap();
        assert_eq!(s.tests.len(), 1);
        assert_eq!(s.tests[0].query, 0);
        assert_eq!(s.tests[0].held_out, 2);
        assert_eq!(s.train.items_of(0), &[0, 1]);
        // Single-interaction user stays in train.
        assert_eq!(s.train.items_of(1), &[3]);
        // Pool exhausted: items 3 and 4 are the only unobserved ones.
        assert_eq!(s.tests[0].negatives, vec![3, 4]);
    }

    #[test]
    fn timestamp_tie_uses_file_order() {
        let d = dataset(&[(0, 1, 7), (0, 0, 7)], 1, 3);
        let s = leave_one_out_split(&d, Direction::Item, 5, 1).unwrap();
        assert_eq!(s.tests[0].held_out, 0);
    }

    #[test]
    fn exhausted_pool_records_short_count() {
        let rows: Vec<_> = (0..60).map(|i| (0, i, i as i64)).collect();
        let d = dataset(&rows, 1, 100);
        let s = leave_one_out_split(&d, Direction::Item, 99, 3).unwrap();
        assert_eq!(s.tests[0].negatives.len(), 40);
        assert_eq!(s.short_pools(99), 1);
    }

    #[test]
    fn errors() {
        let d = dataset(&[(0, 0, 1)], 1, 1);
        assert!(leave_one_out_split(&d, Direction::Item, 0, 1).is_err());
        let empty = InteractionDataset::new(IdIndex::sequential("u", 1), IdIndex::sequential("i", 1), vec![])
            .unwrap();
        assert!(matches!(
            leave_one_out_split(&empty, Direction::Item, 99, 1),
            Err(Error::EmptyDataset)
        ));
    }

    fn arb_dataset() -> impl Strategy<Value = InteractionDataset> {
        (2usize..12, 2usize..30).prop_flat_map(|(u, i)| {
            proptest::collection::vec((0..u, 0..i, 0i64..50), 1..120)
                .prop_map(move |rows| dataset(&rows, u, i))
        })
    }

    proptest! {
        #[test]
        fn split_is_sound(d in arb_dataset(), seed in 0u64..1000, dir in prop_oneof![Just(Direction::Item), Just(Direction::User)]) {
            let s = leave_one_out_split(&d, dir, 7, seed).unwrap();
            for t in &s.tests {
                let (full, train_seen): (&[usize], &[usize]) = match dir {
                    Direction::Item => (d.items_of(t.query), s.train.items_of(t.query)),
                    Direction::User => (d.users_of(t.query), s.train.users_of(t.query)),
                };
                prop_assert!(!train_seen.contains(&t.held_out));
                prop_assert!(full.contains(&t.held_out));
                let mut negs = t.negatives.clone();
                negs.sort_unstable();
                negs.dedup();
                prop_assert_eq!(negs.len(), t.negatives.len());
                prop_assert!(t.negatives.iter().all(|n| !full.contains(n)));
            }
            prop_assert_eq!(s.train.len() + s.tests.len(), d.len());
        }

        #[test]
        fn user_direction_mirrors_transposed_item_direction(d in arb_dataset(), seed in 0u64..1000) {
            let a = leave_one_out_split(&d, Direction::User, 5, seed).unwrap();
            let b = leave_one_out_split(&d.transpose(), Direction::Item, 5, seed).unwrap();
            prop_assert_eq!(a.tests, b.tests);
            prop_assert_eq!(a.train.transpose(), b.train);
        }
    }
}
