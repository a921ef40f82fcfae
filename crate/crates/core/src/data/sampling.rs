use rand::seq::SliceRandom;
use rand::Rng as _;

use super::dataset::InteractionDataset;
use crate::rng::{self, stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingInstance {
    pub user: usize,
    pub item: usize,
    /// 1.0 for observed positives, 0.0 for sampled negatives.
    pub label: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledEpoch {
    pub instances: Vec<TrainingInstance>,
    /// Negatives that could not be drawn because the user had no unobserved item.
    pub skipped_negatives: usize,
}

/// Uniform draw from the items `user` has not interacted with in `train`.
fn draw_unobserved(train: &InteractionDataset, user: usize, rng: &mut rng::Rng) -> Option<usize> {
    let seen = train.items_of(user);
    let n_items = train.num_items();
    let free = n_items - seen.len();
    if free == 0 {
        return None;
    }
    if seen.len() * 2 <= n_items {
        loop {
            let i = rng.random_range(0..n_items);
            if seen.binary_search(&i).is_err() {
                return Some(i);
            }
        }
    }
    // Dense row: pick the k-th unobserved item directly.
    let mut k = rng.random_range(0..free);
    let mut s = 0;
    for i in 0..n_items {
        if s < seen.len() && seen[s] == i {
            s += 1;
        } else if k == 0 {
            return Some(i);
        } else {
            k -= 1;
        }
    }
    unreachable!("free count is consistent with adjacency")
}

/// Training instances for one epoch: every positive plus
/// `negatives_per_positive` uniformly drawn unobserved items for its user,
/// shuffled. The draw depends only on `(seed, epoch)`.
pub fn sample_training_instances(
    train: &InteractionDataset,
    negatives_per_positive: usize,
    seed: u64,
    epoch: u64,
) -> SampledEpoch {
    let mut r = rng::seeded(rng::derive_seed(rng::derive_seed(seed, stream::SAMPLING), epoch));
    let mut instances = Vec::with_capacity(train.len() * (1 + negatives_per_positive));
    let mut skipped = 0;
    for x in train.interactions() {
        instances.push(TrainingInstance {
            user: x.user,
            item: x.item,
            label: 1.0,
        });
        for _ in 0..negatives_per_positive {
            match draw_unobserved(train, x.user, &mut r) {
                Some(item) => instances.push(TrainingInstance {
                    user: x.user,
                    item,
                    label: 0.0,
                }),
                None => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        log::debug!("epoch {epoch}: skipped {skipped} negatives for saturated users");
    }
    instances.shuffle(&mut r);
    SampledEpoch {
        instances,
        skipped_negatives: skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{IdIndex, Interaction};

    fn dataset(users: usize, items: usize, per_user: usize) -> InteractionDataset {
        let mut xs = Vec::new();
        for u in 0..users {
            for k in 0..per_user {
                xs.push(Interaction {
                    user: u,
                    item: (u * 7 + k * 3) % items,
                    timestamp: xs.len() as i64,
                    order: xs.len(),
                });
            }
        }
        InteractionDataset::new(IdIndex::sequential("u", users), IdIndex::sequential("i", items), xs).unwrap()
    }

    #[test]
    fn counts() {
        let d = dataset(10, 50, 10);
        assert_eq!(d.len(), 100);
        let e = sample_training_instances(&d, 3, 1, 0);
        assert_eq!(e.instances.len(), 400);
        assert_eq!(e.instances.iter().filter(|x| x.label == 1.0).count(), 100);
        for x in e.instances.iter().filter(|x| x.label == 0.0) {
            assert!(!d.contains(x.user, x.item));
        }
        let e = sample_training_instances(&d, 0, 1, 0);
        assert_eq!(e.instances.len(), 100);
    }

    #[test]
    fn deterministic_per_epoch() {
        let d = dataset(10, 50, 10);
        assert_eq!(sample_training_instances(&d, 3, 9, 2), sample_training_instances(&d, 3, 9, 2));
        assert_ne!(sample_training_instances(&d, 3, 9, 2), sample_training_instances(&d, 3, 9, 3));
    }

    #[test]
    fn saturated_user_skips_negatives() {
        // Dense row path and the saturated case.
        let d = dataset(1, 4, 4);
        let e = sample_training_instances(&d, 2, 1, 0);
        assert_eq!(e.skipped_negatives, 8);
        assert_eq!(e.instances.len(), 4);
        let d = dataset(1, 5, 4);
        let e = sample_training_instances(&d, 2, 1, 0);
        assert_eq!(e.skipped_negatives, 0);
        let free = missing_item(&d);
        assert!(e.instances.iter().filter(|x| x.label == 0.0).all(|x| x.item == free));
    }

    fn missing_item(d: &InteractionDataset) -> usize {
        (0..d.num_items()).find(|&i| !d.contains(0, i)).unwrap()
    }
}
