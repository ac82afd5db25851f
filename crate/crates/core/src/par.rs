//! Data-parallel batch helpers with deterministic reductions.
//!
//! With the `parallel` feature (default) the mapping helpers fan out over the
//! rayon pool; without it they run on the calling thread. Either way results
//! come back in input order and every floating-point accumulation goes through
//! a fixed-shape pairwise tree, so outputs are bit-identical across feature
//! settings and thread counts. The `*_seq` variants always run sequentially;
//! they exist as the comparison baseline for the bench suite.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

/// Map `f` over `items`, preserving order.
pub fn map_batch<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map_batch`].
pub fn map_batch_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Fallible map; on error the first failure in input order is returned.
pub fn try_map_batch<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let results: Vec<Result<U>> = map_batch(items, f);
    results.into_iter().collect()
}

const PAIRWISE_LEAF: usize = 8;

/// Sum with a fixed pairwise tree. The tree shape depends only on `xs.len()`,
/// never on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Element-wise pairwise sum of equally sized vectors, folded in index order.
pub fn pairwise_sum_vecs(mut vecs: Vec<Vec<f64>>) -> Vec<f64> {
    assert!(!vecs.is_empty(), "pairwise_sum_vecs on empty list");
    while vecs.len() > 1 {
        let mut next = Vec::with_capacity(vecs.len().div_ceil(2));
        let mut iter = vecs.into_iter();
        while let Some(mut a) = iter.next() {
            if let Some(b) = iter.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += *y;
                }
            }
            next.push(a);
        }
        vecs = next;
    }
    vecs.pop().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_batch_preserves_order() {
        let items: Vec<u32> = (0..1000).collect();
        let doubled = map_batch(&items, |x| x * 2);
        assert_eq!(doubled, map_batch_seq(&items, |x| x * 2));
    }

    #[test]
    fn pairwise_sum_matches_exact_on_integers() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }

    #[test]
    fn pairwise_sum_vecs_folds_elementwise() {
        let vecs = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        assert_eq!(pairwise_sum_vecs(vecs), vec![9.0, 12.0]);
    }

    #[test]
    fn try_map_batch_returns_first_error_by_index() {
        let items = vec![1i32, -2, 3, -4];
        let err = try_map_batch(&items, |&x| {
            if x < 0 {
                Err(crate::error::Error::InvalidArgument {
                    reason: format!("negative {x}"),
                })
            } else {
                Ok(x)
            }
        })
        .unwrap_err();
        assert!(err.to_string().contains("-2"));
    }
}
