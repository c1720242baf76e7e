//! Tensor-train format and its arithmetic.
//!
//! An N-dimensional array is stored as a chain of 3-way cores; core n has
//! shape (R_{n-1}, I_n, R_n) with R_0 = R_N = 1, and an element is the
//! product of one matrix slice per core:
//!
//! T[i_1, ..., i_N] = T1[i_1] * T2[i_2] * ... * TN[i_N]
//!
//! Values are immutable after construction; every operation returns a new
//! tensor. Addition concatenates ranks block-diagonally, the element-wise
//! product is a slice-wise Kronecker product, and `round` recompresses to a
//! prescribed relative Frobenius error via orthogonalization + truncated SVD.

use crate::error::{Result, SttError};
use crate::linalg;
use ndarray::{Array1, Array2, Array3, ArrayD, Axis, IxDyn};
use rand::Rng;

/// Cap on the number of entries `full` will densify by default.
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

/// Default cap on any internal rank produced by `hadamard`.
pub const DEFAULT_HADAMARD_RANK_CAP: usize = 4096;

/// Per-axis probability masses of the discretized marginals. Each vector is
/// nonnegative and sums to one.
#[derive(Debug, Clone)]
pub struct Weights {
    axes: Vec<Vec<f64>>,
}

impl Weights {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        for (n, w) in axes.iter().enumerate() {
            if w.is_empty() {
                return Err(SttError::InvalidArgument(format!("axis {n} has no weights")));
            }
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(SttError::InvalidArgument(format!(
                    "axis {n} has a negative or non-finite weight"
                )));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(SttError::InvalidArgument(format!(
                    "axis {n} weights sum to {s}, expected 1"
                )));
            }
        }
        Ok(Self { axes })
    }

    /// Uniform masses 1/I_n on every axis.
    pub fn uniform(dims: &[usize]) -> Self {
        Self {
            axes: dims.iter().map(|&i| vec![1.0 / i as f64; i]).collect(),
        }
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, n: usize) -> &[f64] {
        &self.axes[n]
    }
}

/// Tensor train over f64 with cores shaped (R_{n-1}, I_n, R_n).
#[derive(Debug, Clone)]
pub struct TtTensor {
    cores: Vec<Array3<f64>>,
}

impl TtTensor {
    /// Build from cores, validating the rank chain and boundary ranks.
    pub fn new(cores: Vec<Array3<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(SttError::InvalidArgument("a tensor needs at least one core".into()));
        }
        if cores[0].dim().0 != 1 || cores[cores.len() - 1].dim().2 != 1 {
            return Err(SttError::ShapeMismatch(
                "boundary ranks must be 1".into(),
            ));
        }
        for n in 0..cores.len() {
            let (r0, i, r1) = cores[n].dim();
            if r0 == 0 || i == 0 || r1 == 0 {
                return Err(SttError::ShapeMismatch(format!("core {n} has a zero extent")));
            }
            if n + 1 < cores.len() && r1 != cores[n + 1].dim().0 {
                return Err(SttError::ShapeMismatch(format!(
                    "cores {} and {} disagree on the shared rank",
                    n,
                    n + 1
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Rank-1 tensor from per-axis factor vectors.
    pub fn from_rank1_factors(factors: &[Vec<f64>]) -> Result<Self> {
        if factors.is_empty() {
            return Err(SttError::InvalidArgument("no factors".into()));
        }
        let cores = factors
            .iter()
            .map(|f| {
                Array3::from_shape_fn((1, f.len(), 1), |(_, i, _)| f[i])
            })
            .collect();
        Self::new(cores)
    }

    /// Constant tensor of the given value, all ranks 1.
    pub fn constant(dims: &[usize], value: f64) -> Result<Self> {
        let mut factors: Vec<Vec<f64>> = dims.iter().map(|&i| vec![1.0; i]).collect();
        if let Some(first) = factors.first_mut() {
            for x in first.iter_mut() {
                *x = value;
            }
        }
        Self::from_rank1_factors(&factors)
    }

    /// All-ones tensor (rank 1).
    pub fn ones(dims: &[usize]) -> Result<Self> {
        Self::constant(dims, 1.0)
    }

    /// Random tensor with internal ranks `min(max_rank, feasible)` and
    /// entries uniform in (-1, 1). Deterministic for a fixed RNG state.
    pub fn random<R: Rng>(dims: &[usize], max_rank: usize, rng: &mut R) -> Result<Self> {
        if dims.is_empty() {
            return Err(SttError::InvalidArgument("no dimensions".into()));
        }
        let ranks = clamp_ranks(dims, max_rank);
        let cores = (0..dims.len())
            .map(|n| {
                Array3::from_shape_fn((ranks[n], dims[n], ranks[n + 1]), |_| {
                    rng.gen_range(-1.0..1.0)
                })
            })
            .collect();
        Self::new(cores)
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// Rank chain of length N+1 including the boundary 1s.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dim().0).collect();
        r.push(1);
        r
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn core(&self, n: usize) -> &Array3<f64> {
        &self.cores[n]
    }

    /// Number of stored core elements.
    pub fn stored_len(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(SttError::ShapeMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// Element at a multi-index: the chained product of indexed slices.
    pub fn eval(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.ndim() {
            return Err(SttError::InvalidArgument(format!(
                "index arity {} vs {} dimensions",
                idx.len(),
                self.ndim()
            )));
        }
        for (axis, (&i, c)) in idx.iter().zip(&self.cores).enumerate() {
            if i >= c.dim().1 {
                return Err(SttError::IndexOutOfBounds {
                    axis,
                    index: i,
                    size: c.dim().1,
                });
            }
        }
        let mut v: Array1<f64> = self.cores[0]
            .index_axis(Axis(1), idx[0])
            .row(0)
            .to_owned();
        for (c, &i) in self.cores.iter().zip(idx).skip(1) {
            let slice = c.index_axis(Axis(1), i);
            v = v.dot(&slice);
        }
        Ok(v[0])
    }

    /// Densify. Errors when the entry count exceeds `DEFAULT_DENSE_CAP`.
    pub fn full(&self) -> Result<ArrayD<f64>> {
        self.full_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn full_with_cap(&self, cap: usize) -> Result<ArrayD<f64>> {
        let dims = self.dims();
        let entries = dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        match entries {
            Some(e) if e <= cap => {}
            _ => {
                return Err(SttError::DenseCapExceeded {
                    entries: entries.unwrap_or(usize::MAX),
                    cap,
                })
            }
        }
        // Progressive contraction: m holds (prod of leading dims) x R_n.
        let mut m: Array2<f64> = right_unfold(&self.cores[0]); // (1, I_1*R_1)
        m = reshape2(m, dims[0], self.cores[0].dim().2);
        for c in self.cores.iter().skip(1) {
            let (r0, i, r1) = c.dim();
            let unf = right_unfold(c); // (r0, i*r1)
            let prod = m.dot(&unf); // (lead, i*r1)
            m = reshape2(prod, m.dim().0 * i, r1);
            debug_assert_eq!(m.dim().1, r1);
            let _ = r0;
        }
        let flat: Vec<f64> = m.iter().cloned().collect();
        Ok(ArrayD::from_shape_vec(IxDyn(&dims), flat).expect("shape product checked"))
    }

    /// Compress a dense array into TT form with relative Frobenius error
    /// at most `eps`, using sequential truncated SVDs with the per-step
    /// budget `eps * ||a|| / sqrt(N-1)`.
    pub fn from_full(a: &ArrayD<f64>, eps: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(SttError::InvalidArgument("eps must be nonnegative".into()));
        }
        let dims: Vec<usize> = a.shape().to_vec();
        if dims.is_empty() || a.len() == 0 {
            return Err(SttError::InvalidArgument("empty array".into()));
        }
        let n = dims.len();
        if n == 1 {
            let core = Array3::from_shape_fn((1, dims[0], 1), |(_, i, _)| a[[i]]);
            return Self::new(vec![core]);
        }
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let budget = if norm > 0.0 {
            eps * norm / ((n - 1) as f64).sqrt()
        } else {
            0.0
        };

        let flat: Vec<f64> = a.as_standard_layout().iter().cloned().collect();
        let mut rest: usize = a.len() / dims[0];
        let mut m = reshape2(
            Array2::from_shape_vec((dims[0], rest), flat).expect("len checked"),
            dims[0],
            rest,
        );
        let zero_floor = linalg::SV_ZERO_REL * norm;
        let mut cores = Vec::with_capacity(n);
        let mut r_prev = 1usize;
        for (k, &ik) in dims.iter().enumerate().take(n - 1) {
            let (u, s, vt) = linalg::svd_trunc(&m, budget, zero_floor);
            let r = s.len();
            cores.push(reshape3(u, r_prev, ik, r));
            let mut sv = vt;
            for (i, &si) in s.iter().enumerate() {
                sv.row_mut(i).mapv_inplace(|x| x * si);
            }
            rest /= dims[k + 1];
            m = reshape2(sv, r * dims[k + 1], rest);
            r_prev = r;
        }
        cores.push(reshape3(m, r_prev, dims[n - 1], 1));
        Self::new(cores)
    }

    /// Recompress to relative Frobenius error at most `eps`. Ranks never
    /// increase; `eps = 0` removes exact rank deficiency only.
    pub fn round(&self, eps: f64) -> Self {
        let n = self.ndim();
        if n == 1 {
            return self.clone();
        }
        // Scale hint for the numerical-zero cutoff: exact cancellations leave
        // a tensor whose norm is pure rounding noise, so anchor the cutoff to
        // the magnitude of the stored cores rather than to that noise.
        let scale_hint = self
            .cores
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        // Right-to-left orthogonalization pass.
        let mut cores = self.cores.clone();
        for k in (1..n).rev() {
            let (r0, i, r1) = cores[k].dim();
            let m = reshape2(right_unfold(&cores[k]), r0, i * r1);
            let (l, q) = linalg::lq_thin(&m);
            let r_new = q.dim().0;
            cores[k] = reshape3(q, r_new, i, r1);
            cores[k - 1] = mode3_mul(&cores[k - 1], &l);
        }
        let norm = cores[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        let budget = if norm > 0.0 {
            eps * norm / ((n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let zero_floor = linalg::SV_ZERO_REL * scale_hint.max(norm);
        // Left-to-right truncation pass.
        for k in 0..n - 1 {
            let (r0, i, r1) = cores[k].dim();
            let m = reshape2(left_unfold(&cores[k]), r0 * i, r1);
            let (u, s, vt) = linalg::svd_trunc(&m, budget, zero_floor);
            let r = s.len();
            cores[k] = reshape3(u, r0, i, r);
            let mut sv = vt;
            for (row, &si) in s.iter().enumerate() {
                sv.row_mut(row).mapv_inplace(|x| x * si);
            }
            cores[k + 1] = mode1_mul(&sv, &cores[k + 1]);
        }
        Self { cores }
    }

    /// Frobenius norm computed through orthogonalized cores.
    pub fn norm(&self) -> f64 {
        let n = self.ndim();
        let mut cores = self.cores.clone();
        for k in (1..n).rev() {
            let (r0, i, r1) = cores[k].dim();
            let m = reshape2(right_unfold(&cores[k]), r0, i * r1);
            let (l, q) = linalg::lq_thin(&m);
            let r_new = q.dim().0;
            cores[k] = reshape3(q, r_new, i, r1);
            cores[k - 1] = mode3_mul(&cores[k - 1], &l);
        }
        cores[0].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Multiply every element by `alpha` (scales the first core; ranks are
    /// unchanged).
    pub fn scale(&self, alpha: f64) -> Self {
        let mut cores = self.cores.clone();
        cores[0].mapv_inplace(|x| x * alpha);
        Self { cores }
    }

    /// Element-wise sum via the block-diagonal core construction; internal
    /// ranks add.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let n = self.ndim();
        if n == 1 {
            return Ok(Self {
                cores: vec![&self.cores[0] + &other.cores[0]],
            });
        }
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let a = &self.cores[k];
            let b = &other.cores[k];
            let (ra0, i, ra1) = a.dim();
            let (rb0, _, rb1) = b.dim();
            let core = if k == 0 {
                // row concat: (1, i, ra1 + rb1)
                Array3::from_shape_fn((1, i, ra1 + rb1), |(_, j, c)| {
                    if c < ra1 {
                        a[[0, j, c]]
                    } else {
                        b[[0, j, c - ra1]]
                    }
                })
            } else if k == n - 1 {
                Array3::from_shape_fn((ra0 + rb0, i, 1), |(r, j, _)| {
                    if r < ra0 {
                        a[[r, j, 0]]
                    } else {
                        b[[r - ra0, j, 0]]
                    }
                })
            } else {
                Array3::from_shape_fn((ra0 + rb0, i, ra1 + rb1), |(r, j, c)| {
                    if r < ra0 && c < ra1 {
                        a[[r, j, c]]
                    } else if r >= ra0 && c >= ra1 {
                        b[[r - ra0, j, c - ra1]]
                    } else {
                        0.0
                    }
                })
            };
            cores.push(core);
        }
        Ok(Self { cores })
    }

    /// Element-wise (Hadamard) product via slice-wise Kronecker products;
    /// internal ranks multiply. Uses the default rank cap.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.hadamard_with_cap(other, DEFAULT_HADAMARD_RANK_CAP)
    }

    pub fn hadamard_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_same_dims(other)?;
        let n = self.ndim();
        let ra = self.ranks();
        let rb = other.ranks();
        for k in 1..n {
            let r = ra[k] * rb[k];
            if r > cap {
                return Err(SttError::RankCapExceeded { mode: k, rank: r, cap });
            }
        }
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let a = &self.cores[k];
            let b = &other.cores[k];
            let (ra0, i, ra1) = a.dim();
            let (rb0, _, rb1) = b.dim();
            let mut core = Array3::zeros((ra0 * rb0, i, ra1 * rb1));
            for j in 0..i {
                let sa = a.index_axis(Axis(1), j);
                let sb = b.index_axis(Axis(1), j);
                let kr = ndarray::linalg::kron(&sa, &sb);
                core.index_axis_mut(Axis(1), j).assign(&kr);
            }
            cores.push(core);
        }
        Ok(Self { cores })
    }

    /// Inner product: sum over all indices of the element-wise product,
    /// computed by a left-to-right contraction in O(N I R^3).
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        let mut l: Option<Array2<f64>> = None;
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let i = a.dim().1;
            let mut next = Array2::zeros((a.dim().2, b.dim().2));
            for j in 0..i {
                let sa = a.index_axis(Axis(1), j);
                let sb = b.index_axis(Axis(1), j);
                match &l {
                    None => next = next + sa.t().dot(&sb),
                    Some(prev) => next = next + sa.t().dot(&prev.dot(&sb)),
                }
            }
            l = Some(next);
        }
        Ok(l.expect("at least one core")[[0, 0]])
    }

    /// Weighted average of the slices of core `n`: sum_i w[i] * core[:, i, :].
    pub fn core_expectation(&self, n: usize, w: &Weights) -> Result<Array2<f64>> {
        if n >= self.ndim() {
            return Err(SttError::InvalidArgument(format!(
                "axis {n} out of range for {} dimensions",
                self.ndim()
            )));
        }
        let c = &self.cores[n];
        let (r0, i, r1) = c.dim();
        if w.axis(n).len() != i {
            return Err(SttError::ShapeMismatch(format!(
                "weights length {} vs axis size {i}",
                w.axis(n).len()
            )));
        }
        let mut m = Array2::zeros((r0, r1));
        for (j, &wj) in w.axis(n).iter().enumerate() {
            m.scaled_add(wj, &c.index_axis(Axis(1), j));
        }
        Ok(m)
    }

    /// Contract each axis n with a matrix mats[n] of shape (J_n, I_n),
    /// producing a tensor with dims (J_1, ..., J_N):
    /// new_core[:, a, :] = sum_i mats[n][a, i] * core[:, i, :].
    pub fn contract_modes(&self, mats: &[Array2<f64>]) -> Result<Self> {
        if mats.len() != self.ndim() {
            return Err(SttError::ShapeMismatch(format!(
                "{} matrices for {} axes",
                mats.len(),
                self.ndim()
            )));
        }
        let mut cores = Vec::with_capacity(self.ndim());
        for (c, m) in self.cores.iter().zip(mats) {
            let (r0, i, r1) = c.dim();
            if m.dim().1 != i {
                return Err(SttError::ShapeMismatch(format!(
                    "matrix has {} columns for axis of size {i}",
                    m.dim().1
                )));
            }
            let j = m.dim().0;
            let mut core = Array3::zeros((r0, j, r1));
            for a in 0..j {
                let mut slice = core.index_axis_mut(Axis(1), a);
                for i_old in 0..i {
                    slice.scaled_add(m[[a, i_old]], &c.index_axis(Axis(1), i_old));
                }
            }
            cores.push(core);
        }
        Self::new(cores)
    }
}

/// Internal ranks clamped to what the dims can support: R_n is at most the
/// product of dims on either side.
pub(crate) fn clamp_ranks(dims: &[usize], max_rank: usize) -> Vec<usize> {
    let n = dims.len();
    let mut ranks = vec![1usize; n + 1];
    for k in 1..n {
        let left: usize = dims[..k].iter().product::<usize>().min(1 << 30);
        let right: usize = dims[k..].iter().product::<usize>().min(1 << 30);
        ranks[k] = max_rank.min(left).min(right).max(1);
    }
    ranks
}

pub(crate) fn left_unfold(c: &Array3<f64>) -> Array2<f64> {
    let (r0, i, r1) = c.dim();
    reshape2(
        Array2::from_shape_vec(
            (r0 * i, r1),
            c.as_standard_layout().iter().cloned().collect(),
        )
        .expect("contiguous"),
        r0 * i,
        r1,
    )
}

pub(crate) fn right_unfold(c: &Array3<f64>) -> Array2<f64> {
    let (r0, i, r1) = c.dim();
    Array2::from_shape_vec(
        (r0, i * r1),
        c.as_standard_layout().iter().cloned().collect(),
    )
    .expect("contiguous")
}

pub(crate) fn reshape2(a: Array2<f64>, r: usize, c: usize) -> Array2<f64> {
    debug_assert_eq!(a.len(), r * c);
    Array2::from_shape_vec((r, c), a.as_standard_layout().iter().cloned().collect())
        .expect("length preserved")
}

pub(crate) fn reshape3(a: Array2<f64>, r0: usize, i: usize, r1: usize) -> Array3<f64> {
    debug_assert_eq!(a.len(), r0 * i * r1);
    Array3::from_shape_vec(
        (r0, i, r1),
        a.as_standard_layout().iter().cloned().collect(),
    )
    .expect("length preserved")
}

/// (r0, i, r1) x (r1, r) -> (r0, i, r)
pub(crate) fn mode3_mul(c: &Array3<f64>, m: &Array2<f64>) -> Array3<f64> {
    let (r0, i, _r1) = c.dim();
    let prod = left_unfold(c).dot(m);
    reshape3(prod, r0, i, m.dim().1)
}

/// (r, r0) x (r0, i, r1) -> (r, i, r1)
pub(crate) fn mode1_mul(m: &Array2<f64>, c: &Array3<f64>) -> Array3<f64> {
    let (_r0, i, r1) = c.dim();
    let prod = m.dot(&right_unfold(c));
    reshape3(prod, m.dim().0, i, r1)
}
