//! Dense factorization helpers on top of nalgebra, operating on ndarray
//! matrices. Everything here is deterministic: no threading, no randomness.

use nalgebra::DMatrix;
use ndarray::Array2;

/// Singular values below `SV_ZERO_REL * sigma_max` are treated as exact zeros.
pub const SV_ZERO_REL: f64 = 1e-14;

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    let std = a.as_standard_layout();
    DMatrix::from_row_iterator(r, c, std.iter().cloned())
}

pub fn to_array2(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin QR: `a = q * r` with `q` having orthonormal columns.
pub fn qr_thin(a: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let qr = to_dmatrix(a).qr();
    (to_array2(&qr.q()), to_array2(&qr.r()))
}

/// Thin LQ: `a = l * q` with `q` having orthonormal rows.
pub fn lq_thin(a: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let qr = to_dmatrix(&a.t().to_owned()).qr();
    (to_array2(&qr.r().transpose()), to_array2(&qr.q().transpose()))
}

/// SVD truncated to the smallest rank whose discarded tail satisfies
/// `sqrt(sum of squared dropped singular values) <= abs_tol`. Singular values
/// below `SV_ZERO_REL * sigma_max` — or below the absolute `zero_floor`,
/// which callers anchor to the overall scale of the tensor being factored so
/// that cancellation noise collapses — are always dropped. At least one
/// singular triple is kept so rank chains stay valid even for zero matrices.
///
/// Returns `(u, sigma, v_t)` with `u: m x r`, `v_t: r x n`.
pub fn svd_trunc(
    a: &Array2<f64>,
    abs_tol: f64,
    zero_floor: f64,
) -> (Array2<f64>, Vec<f64>, Array2<f64>) {
    let svd = to_dmatrix(a).svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();

    let smax = sv.first().cloned().unwrap_or(0.0);
    let hard_cut = (SV_ZERO_REL * smax).max(zero_floor);
    let budget2 = abs_tol * abs_tol;

    // Largest rank we could keep after removing numerical zeros.
    let mut max_keep = sv.iter().filter(|&&s| s > hard_cut).count().max(1);
    max_keep = max_keep.min(sv.len());
    // Then shave further while the discarded tail stays within budget.
    let mut tail = 0.0;
    for i in (0..sv.len()).rev() {
        if i + 1 > max_keep {
            continue;
        }
        let cand = tail + sv[i] * sv[i];
        if cand <= budget2 && i > 0 {
            tail = cand;
            max_keep = i;
        } else {
            break;
        }
    }
    let r = max_keep.max(1);

    let ur = Array2::from_shape_fn((u.nrows(), r), |(i, j)| u[(i, j)]);
    let vtr = Array2::from_shape_fn((r, vt.ncols()), |(i, j)| vt[(i, j)]);
    (ur, sv[..r].to_vec(), vtr)
}

/// Solve the ridge-regularized SPD system `(g + ridge*I) x = b` by Cholesky.
/// The ridge is grown by 100x (a few times) if the factorization fails.
pub fn solve_spd(g: &Array2<f64>, b: &[f64], ridge: f64) -> Vec<f64> {
    let n = g.nrows();
    let mut lambda = ridge.max(0.0);
    for _ in 0..6 {
        let mut m = to_dmatrix(g);
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        if let Some(chol) = m.cholesky() {
            let x = chol.solve(&DMatrix::from_column_slice(n, 1, b));
            return x.column(0).iter().cloned().collect();
        }
        lambda = if lambda == 0.0 { 1e-12 } else { lambda * 100.0 };
    }
    vec![0.0; n]
}

/// Row selection by the maxvol algorithm on a tall matrix `a` (m >= n rows).
/// Starts from the column-pivoted QR of `a^T` and swaps rows until no entry
/// of `a * a[sel]^-1` exceeds `1 + tol` in modulus.
pub fn maxvol(a: &Array2<f64>, tol: f64, max_iter: usize) -> Vec<usize> {
    let (m, n) = a.dim();
    assert!(m >= n, "maxvol needs at least as many rows as columns");
    if m == n {
        return (0..n).collect();
    }
    let da = to_dmatrix(a);

    // RRQR of a^T picks well-separated rows as the starting selection.
    let qr = da.transpose().col_piv_qr();
    let mut sel: Vec<usize> = Vec::with_capacity(n);
    {
        let mut order: Vec<usize> = (0..m).collect();
        // PermutationSequence applies in-place; replay it on an index list.
        let perm = qr.p();
        let mut id = DMatrix::<f64>::zeros(m, 1);
        for (i, v) in id.iter_mut().enumerate() {
            *v = i as f64;
        }
        perm.permute_rows(&mut id);
        for i in 0..m {
            order[i] = id[(i, 0)] as usize;
        }
        sel.extend_from_slice(&order[..n]);
    }

    for _ in 0..max_iter {
        let sub = DMatrix::from_fn(n, n, |i, j| da[(sel[i], j)]);
        let lu = sub.transpose().lu();
        let Some(bt) = lu.solve(&da.transpose()) else {
            break;
        };
        // b = a * sub^-1 has shape m x n; b[sel] is the identity.
        let mut best = (0usize, 0usize, 1.0 + tol);
        for i in 0..m {
            for j in 0..n {
                let v = bt[(j, i)].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= 1.0 + tol {
            break;
        }
        sel[best.1] = best.0;
    }
    sel
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn qr_reconstructs() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let (q, r) = qr_thin(&a);
        let back = q.dot(&r);
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let qtq = q.t().dot(&q);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lq_reconstructs() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let (l, q) = lq_thin(&a);
        let back = l.dot(&q);
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_trunc_respects_budget() {
        // rank-2 matrix with singular values ~ (5, 1e-3)
        let u = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let vt = array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        let s = array![[5.0, 0.0], [0.0, 1e-3]];
        let a = u.dot(&s).dot(&vt);
        let (_, sv, _) = svd_trunc(&a, 0.0, 0.0);
        assert_eq!(sv.len(), 2);
        let (_, sv, _) = svd_trunc(&a, 1e-2, 0.0);
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn svd_trunc_zero_matrix_keeps_rank_one() {
        let a = Array2::<f64>::zeros((3, 4));
        let (u, sv, vt) = svd_trunc(&a, 0.0, 0.0);
        assert_eq!(sv.len(), 1);
        assert_eq!(u.dim(), (3, 1));
        assert_eq!(vt.dim(), (1, 4));
    }

    #[test]
    fn solve_spd_matches_direct() {
        let g = array![[4.0, 1.0], [1.0, 3.0]];
        let x = solve_spd(&g, &[1.0, 2.0], 0.0);
        // exact solution of [[4,1],[1,3]] x = [1,2]
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn maxvol_bounds_coefficients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = Array2::from_shape_fn((40, 5), |_| rng.gen_range(-1.0..1.0));
        let sel = maxvol(&a, 0.01, 200);
        assert_eq!(sel.len(), 5);
        let sub = Array2::from_shape_fn((5, 5), |(i, j)| a[[sel[i], j]]);
        let inv = to_array2(&to_dmatrix(&sub).try_inverse().unwrap());
        let b = a.dot(&inv);
        let maxabs = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(maxabs <= 1.02, "maxvol coefficient bound violated: {maxabs}");
    }
}
