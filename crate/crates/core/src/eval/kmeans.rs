use ndarray::{Array2, ArrayView2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Partition;
use crate::error::{Error, Result};

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-6;

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding then Lloyd iterations; the lowest-inertia of
/// `restarts` independent runs is returned (ties go to the earlier run).
pub fn kmeans(z: ArrayView2<f64>, k: usize, seed: u64, restarts: usize) -> Result<Partition> {
    let n = z.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= k <= n (k={k}, n={n})")));
    }
    let runs: Vec<(Partition, Vec<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(z, k, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .map(|(p, _)| p)
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn seed_centers(z: ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = z.nrows();
    let mut centers = Array2::zeros((k, z.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&z.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(first))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point already coincides with a center
            Err(_) => rng.random_range(0..n),
        };
        centers.row_mut(c).assign(&z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), centers.row(c)));
        }
    }
    centers
}

/// One seeded Lloyd run; also returns the inertia after every assignment.
pub(crate) fn lloyd(z: ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> (Partition, Vec<f64>) {
    let n = z.nrows();
    let mut centers = seed_centers(z, k, rng);
    let mut assign = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITER {
        for i in 0..n {
            let (best, d) = (0..k)
                .map(|c| (c, sq_dist(z.row(i), centers.row(c))))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assign[i] = best;
            dist[i] = d;
        }
        repair_empty(k, &mut assign, &mut dist);
        history.push(dist.iter().sum());

        let mut next = Array2::<f64>::zeros(centers.dim());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            next.row_mut(assign[i]).scaled_add(1.0, &z.row(i));
            counts[assign[i]] += 1;
        }
        for (mut row, &c) in next.axis_iter_mut(Axis(0)).zip(&counts) {
            row /= c as f64;
        }
        let shift = (0..k)
            .map(|c| sq_dist(next.row(c), centers.row(c)).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < KMEANS_TOL {
            break;
        }
    }
    for i in 0..n {
        dist[i] = sq_dist(z.row(i), centers.row(assign[i]));
    }
    let inertia = dist.iter().sum();
    (
        Partition {
            assignments: assign,
            k,
            inertia: Some(inertia),
        },
        history,
    )
}

/// Empty clusters take the point farthest from its center within the
/// currently largest cluster.
fn repair_empty(k: usize, assign: &mut [usize], dist: &mut [f64]) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
        let victim = (0..assign.len())
            .filter(|&i| assign[i] == largest)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
            .unwrap();
        assign[victim] = empty;
        dist[victim] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn blobs() -> Array2<f64> {
        array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]]
    }

    #[test]
    fn recovers_separated_blobs() {
        let p = kmeans(blobs().view(), 2, 1, 10).unwrap();
        let a = &p.assignments;
        assert!(a[0] == a[1] && a[1] == a[2]);
        assert!(a[3] == a[4] && a[4] == a[5]);
        assert_ne!(a[0], a[3]);
    }

    #[test]
    fn single_cluster_inertia_is_total_scatter() {
        let z = blobs();
        let p = kmeans(z.view(), 1, 0, 3).unwrap();
        let mean = z.mean_axis(Axis(0)).unwrap();
        let scatter: f64 = z.rows().into_iter().map(|r| sq_dist(r, mean.view())).sum();
        assert!((p.inertia.unwrap() - scatter).abs() < 1e-9);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let p = kmeans(blobs().view(), 6, 2, 5).unwrap();
        assert!(p.inertia.unwrap().abs() < 1e-12);
        let mut ids = p.assignments.clone();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let z = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let p = kmeans(z.view(), 3, 0, 2).unwrap();
        let mut seen = p.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn inertia_never_increases_across_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = Array2::from_shape_simple_fn((200, 3), || rng.random::<f64>());
        for s in 0..5 {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let (_, hist) = lloyd(z.view(), 6, &mut r);
            for w in hist.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{hist:?}");
            }
        }
    }

    #[test]
    fn deterministic_and_validates_k() {
        let z = blobs();
        assert_eq!(kmeans(z.view(), 2, 3, 4).unwrap(), kmeans(z.view(), 2, 3, 4).unwrap());
        assert!(kmeans(z.view(), 7, 0, 1).is_err());
        assert!(kmeans(z.view(), 0, 0, 1).is_err());
    }
}
