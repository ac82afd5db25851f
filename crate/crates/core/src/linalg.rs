//! Minimal dense routines for symmetric positive-definite matrices.

/// Lower-triangular Cholesky factor of a `d x d` row-major matrix, or `None`
/// when the matrix is not positive definite.
pub(crate) fn cholesky_lower(a: &[f64], d: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), d * d);
    let mut l = vec![0.0f64; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * d + j] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Solve `L y = b` in place for lower-triangular `L`.
pub(crate) fn solve_lower_in_place(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * b[k];
        }
        b[i] = sum / l[i * d + i];
    }
}

/// `log det A` from the Cholesky factor of `A`.
pub(crate) fn log_det_from_cholesky(l: &[f64], d: usize) -> f64 {
    (0..d).map(|i| l[i * d + i].ln()).sum::<f64>() * 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factors_and_solves_a_known_spd_matrix() {
        // A = [[4, 2], [2, 3]], chol = [[2, 0], [1, sqrt(2)]]
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky_lower(&a, 2).unwrap();
        assert_relative_eq!(l[0], 2.0);
        assert_relative_eq!(l[2], 1.0);
        assert_relative_eq!(l[3], 2.0f64.sqrt());
        assert_relative_eq!(log_det_from_cholesky(&l, 2), (8.0f64).ln(), epsilon = 1e-14);

        let mut b = [2.0, 3.0];
        solve_lower_in_place(&l, 2, &mut b);
        // L y = b  =>  y = [1, sqrt(2)]
        assert_relative_eq!(b[0], 1.0);
        assert_relative_eq!(b[1], 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_positive_definite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_lower(&a, 2).is_none());
        let zero = [0.0; 4];
        assert!(cholesky_lower(&zero, 2).is_none());
    }
}
