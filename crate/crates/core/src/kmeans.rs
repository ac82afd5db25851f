//! K-Means with K-Means++ seeding.
//!
//! Used to initialize the Gaussian mixture. Squared Euclidean distance,
//! Lloyd iterations until assignments stop changing (at most
//! [`MAX_KMEANS_ITERS`]), empty clusters reseeded from the point farthest
//! from its centroid (ties broken by lowest index).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_KMEANS_ITERS: usize = 100;

/// Hard clustering: centers are `k x d` row-major, `assignment[i]` is the
/// cluster of sample `i`.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub centers: Vec<f64>,
    pub assignment: Vec<usize>,
    pub k: usize,
    pub d: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(data: &[f64], d: usize, i: usize) -> &[f64] {
    &data[i * d..(i + 1) * d]
}

/// K-Means++ seeding: the first center uniform, each next one drawn with
/// probability proportional to the squared distance to the nearest center.
fn seed_centers(data: &[f64], n: usize, d: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(row(data, d, first));
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| dist2(row(data, d, i), &centers[..d]))
        .collect();
    for c in 1..k {
        let total: f64 = min_d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in min_d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // all remaining mass at the chosen centers; any point works
            rng.random_range(0..n)
        };
        let start = c * d;
        centers.extend_from_slice(row(data, d, pick));
        for i in 0..n {
            let dd = dist2(row(data, d, i), &centers[start..start + d]);
            if dd < min_d2[i] {
                min_d2[i] = dd;
            }
        }
    }
    centers
}

/// Cluster `n` samples of dimension `d` into `k` groups.
pub fn cluster(data: &[f64], n: usize, d: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            reason: "k must be >= 1".into(),
        });
    }
    if n < k {
        return Err(Error::InvalidArgument {
            reason: format!("need at least k={k} samples, got {n}"),
        });
    }
    debug_assert_eq!(data.len(), n * d);

    let mut centers = seed_centers(data, n, d, k, rng);
    let mut assignment = vec![usize::MAX; n];

    for _ in 0..MAX_KMEANS_ITERS {
        // assignment phase; ties go to the lowest cluster index
        let mut changed = false;
        for i in 0..n {
            let x = row(data, d, i);
            let mut best = 0;
            let mut best_d = dist2(x, &centers[..d]);
            for j in 1..k {
                let dd = dist2(x, &centers[j * d..(j + 1) * d]);
                if dd < best_d {
                    best_d = dd;
                    best = j;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        // empty-cluster repair: move in the point farthest from its centroid
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let mut far_i = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if counts[assignment[i]] <= 1 {
                    continue;
                }
                let dd = dist2(
                    row(data, d, i),
                    &centers[assignment[i] * d..(assignment[i] + 1) * d],
                );
                if dd > far_d {
                    far_d = dd;
                    far_i = Some(i);
                }
            }
            let i = far_i.expect("n >= k guarantees a movable point");
            counts[assignment[i]] -= 1;
            assignment[i] = j;
            counts[j] = 1;
            centers[j * d..(j + 1) * d].copy_from_slice(row(data, d, i));
            changed = true;
        }

        if !changed {
            break;
        }

        // update phase
        centers.fill(0.0);
        for i in 0..n {
            let j = assignment[i];
            for (c, &x) in centers[j * d..(j + 1) * d].iter_mut().zip(row(data, d, i)) {
                *c += x;
            }
        }
        for j in 0..k {
            let inv = 1.0 / counts[j] as f64;
            for c in &mut centers[j * d..(j + 1) * d] {
                *c *= inv;
            }
        }
    }

    Ok(Clustering {
        centers,
        assignment,
        k,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn separates_two_obvious_blobs() {
        let mut data = Vec::new();
        for i in 0..30 {
            data.extend_from_slice(&[0.0 + 0.001 * i as f64, 0.0]);
        }
        for i in 0..70 {
            data.extend_from_slice(&[10.0 + 0.001 * i as f64, 10.0]);
        }
        let c = cluster(&data, 100, 2, 2, &mut seeded_rng(1)).unwrap();
        let first = c.assignment[0];
        assert!(c.assignment[..30].iter().all(|&a| a == first));
        assert!(c.assignment[30..].iter().all(|&a| a != first));
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let data = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let c = cluster(&data, 3, 2, 3, &mut seeded_rng(2)).unwrap();
        let mut seen = c.assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn n_below_k_is_rejected() {
        let data = [0.0, 1.0];
        assert!(cluster(&data, 2, 1, 3, &mut seeded_rng(3)).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        use rand::Rng;
        let mut data_rng = seeded_rng(4);
        let data: Vec<f64> = (0..200).map(|_| data_rng.random::<f64>()).collect();
        let a = cluster(&data, 100, 2, 5, &mut seeded_rng(9)).unwrap();
        let b = cluster(&data, 100, 2, 5, &mut seeded_rng(9)).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn identical_points_do_not_loop_forever() {
        let data = vec![1.0; 20];
        let c = cluster(&data, 10, 2, 3, &mut seeded_rng(5)).unwrap();
        assert_eq!(c.assignment.len(), 10);
        // every cluster keeps at least one member after repair
        let mut counts = vec![0; 3];
        for &a in &c.assignment {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }
}
