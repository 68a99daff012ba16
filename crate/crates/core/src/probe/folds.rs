use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold id (`0..k`) for each of `n` items. With `stratify_on`, each class is
/// shuffled separately and the classes are dealt round-robin in sequence, so
/// per-class and overall fold sizes differ by at most one. A class with fewer
/// than `k` members disables stratification.
pub fn kfold_split(n: usize, k: usize, stratify_on: Option<&[usize]>, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= n for k-fold (k={k}, n={n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match stratify_on {
        Some(classes) => {
            if classes.len() != n {
                return Err(Error::Shape(format!("{} class labels for {n} items", classes.len())));
            }
            let n_classes = classes.iter().max().map_or(0, |m| m + 1);
            let mut members = vec![Vec::new(); n_classes];
            for (i, &c) in classes.iter().enumerate() {
                members[c].push(i);
            }
            if members.iter().any(|m| !m.is_empty() && m.len() < k) {
                log::warn!("a class has fewer than {k} members; falling back to unstratified folds");
                shuffled(n, &mut rng)
            } else {
                members
                    .into_iter()
                    .flat_map(|mut m| {
                        m.shuffle(&mut rng);
                        m
                    })
                    .collect()
            }
        }
        None => shuffled(n, &mut rng),
    };
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}
