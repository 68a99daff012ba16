use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::Partition;
use crate::error::{Error, Result};

/// First-neighbour index of every row under cosine distance; ties go to the
/// lowest index. Zero rows have similarity 0 to everything.
fn first_neighbours(x: ArrayView2<f64>) -> Vec<usize> {
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for j in 0..x.nrows() {
                if j == i {
                    continue;
                }
                let denom = norms[i] * norms[j];
                let sim = if denom > 0.0 { x.row(i).dot(&x.row(j)) / denom } else { 0.0 };
                if sim > best.1 {
                    best = (j, sim);
                }
            }
            best.0
        })
        .collect()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One linking round: components of "j is i's first neighbour, or i is j's,
/// or they share one". Ids follow the lowest member index.
fn link(x: ArrayView2<f64>) -> Vec<usize> {
    let n = x.nrows();
    let nn = first_neighbours(x);
    let mut dsu = Dsu((0..n).collect());
    // sharing a neighbour k means both are joined to k already
    for (i, &k) in nn.iter().enumerate() {
        dsu.union(i, k);
    }
    let roots: Vec<usize> = (0..n).map(|i| dsu.find(i)).collect();
    Partition::from_labels(&roots).assignments
}

fn group_means(x: ArrayView2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut means = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        means.row_mut(l).scaled_add(1.0, &x.row(i));
        counts[l] += 1.0;
    }
    for (mut row, c) in means.axis_iter_mut(Axis(0)).zip(counts) {
        row /= c;
    }
    means
}

/// The FINCH hierarchy, finest partition first, ending with one cluster.
pub fn finch(z: ArrayView2<f64>) -> Result<Vec<Partition>> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("FINCH needs at least two points".into()));
    }
    let mut levels = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    let mut points = z.to_owned();
    loop {
        let local = link(points.view());
        let k = local.iter().max().map_or(0, |m| m + 1);
        current = current.iter().map(|&c| local[c]).collect();
        levels.push(Partition {
            assignments: current.clone(),
            k,
            inertia: None,
        });
        if k <= 1 {
            break;
        }
        points = group_means(points.view(), &local, k);
    }
    Ok(levels)
}

/// The level whose cluster count is closest to `target`; ties prefer the
/// finer level.
pub fn nearest_level(levels: &[Partition], target: usize) -> Option<&Partition> {
    levels.iter().min_by_key(|p| p.k.abs_diff(target))
}
