//! Extraction of the Sobol tensor train: a 2 x ... x 2 tensor whose entry at
//! the binary encoding of a variable subset is that subset's Sobol index.
//!
//! The construction works entirely in the compressed domain. Centered and
//! averaged core slices encode every decomposition term at once; squaring by
//! a Hadamard product and per-axis weighted reduction yields the variance
//! tensor, which the total variance normalizes into Sobol indices.

use crate::error::{Result, SttError};
use crate::tt::{TtTensor, Weights};
use ndarray::{Array3, Axis};

/// Default relative tolerance for recompressing the squared tensor.
pub const DEFAULT_SQUARING_EPS: f64 = 1e-6;

/// All 2^N - 1 Sobol indices of a surrogate, in compressed form.
#[derive(Debug, Clone)]
pub struct SobolTt {
    s: TtTensor,
    d_tensor: TtTensor,
    total_variance: f64,
    corner_zeroed: bool,
}

impl SobolTt {
    /// Reassemble from parts (used by deserialization). Validates shapes.
    pub fn from_parts(
        s: TtTensor,
        d_tensor: TtTensor,
        total_variance: f64,
        corner_zeroed: bool,
    ) -> Result<Self> {
        if s.dims().iter().any(|&d| d != 2) || d_tensor.dims().iter().any(|&d| d != 2) {
            return Err(SttError::ShapeMismatch(
                "Sobol tensors must have size 2 along every axis".into(),
            ));
        }
        if s.ndim() != d_tensor.ndim() {
            return Err(SttError::ShapeMismatch(
                "index and variance tensors disagree on dimensionality".into(),
            ));
        }
        if !(total_variance.is_finite() && total_variance > 0.0) {
            return Err(SttError::DegenerateModel(format!(
                "total variance {total_variance} must be positive"
            )));
        }
        Ok(Self {
            s,
            d_tensor,
            total_variance,
            corner_zeroed,
        })
    }

    pub fn ndim(&self) -> usize {
        self.s.ndim()
    }

    /// The Sobol index tensor S (2 x ... x 2).
    pub fn s(&self) -> &TtTensor {
        &self.s
    }

    /// The unnormalized variance tensor; its corner holds the squared mean.
    pub fn d_tensor(&self) -> &TtTensor {
        &self.d_tensor
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn corner_zeroed(&self) -> bool {
        self.corner_zeroed
    }

    /// Raw Sobol index for a nonempty 0-based variable list. Reporting paths
    /// clamp to [0, 1]; this preserves the raw value.
    pub fn index(&self, vars: &[usize]) -> Result<f64> {
        if vars.is_empty() {
            return Err(SttError::InvalidArgument(
                "the empty variable set has no Sobol index".into(),
            ));
        }
        let idx = binary_index(self.ndim(), vars)?;
        self.s.eval(&idx)
    }
}

/// Binary multi-index of a variable subset: 1 where present, 0 elsewhere.
pub fn binary_index(ndim: usize, vars: &[usize]) -> Result<Vec<usize>> {
    let mut idx = vec![0usize; ndim];
    for &v in vars {
        if v >= ndim {
            return Err(SttError::InvalidArgument(format!(
                "variable {v} out of range for {ndim} dimensions"
            )));
        }
        idx[v] = 1;
    }
    Ok(idx)
}

fn check_weights(t: &TtTensor, w: &Weights) -> Result<()> {
    if w.ndim() != t.ndim() {
        return Err(SttError::ShapeMismatch(format!(
            "{} weight axes for {} tensor axes",
            w.ndim(),
            t.ndim()
        )));
    }
    for (n, d) in t.dims().iter().enumerate() {
        if w.axis(n).len() != *d {
            return Err(SttError::ShapeMismatch(format!(
                "axis {n}: {} weights for size {d}",
                w.axis(n).len()
            )));
        }
    }
    Ok(())
}

/// Decomposition term of the surrogate for a variable subset: axes outside
/// `vars` carry the constant expectation slice, axes inside carry centered
/// slices. The empty set yields the constant grand-mean tensor.
pub fn anova_term(t: &TtTensor, vars: &[usize], w: &Weights) -> Result<TtTensor> {
    check_weights(t, w)?;
    for &v in vars {
        if v >= t.ndim() {
            return Err(SttError::InvalidArgument(format!(
                "variable {v} out of range for {} dimensions",
                t.ndim()
            )));
        }
    }
    let mut cores = Vec::with_capacity(t.ndim());
    for n in 0..t.ndim() {
        let e = t.core_expectation(n, w)?;
        let c = t.core(n);
        let (r0, i, r1) = c.dim();
        let active = vars.contains(&n);
        let core = Array3::from_shape_fn((r0, i, r1), |(a, j, b)| {
            if active {
                c[[a, j, b]] - e[[a, b]]
            } else {
                e[[a, b]]
            }
        });
        cores.push(core);
    }
    TtTensor::new(cores)
}

/// The concatenated-slice tensor with dims (I_1 + 1, ..., I_N + 1): slice 0
/// of core n is the expectation of core n, slices 1..I_n are the centered
/// original slices. Chaining slice 0 on axes outside a subset and slice
/// i_n + 1 on axes inside reproduces the corresponding decomposition term.
pub fn sobol_star(t: &TtTensor, w: &Weights) -> Result<TtTensor> {
    check_weights(t, w)?;
    let mut cores = Vec::with_capacity(t.ndim());
    for n in 0..t.ndim() {
        let e = t.core_expectation(n, w)?;
        let c = t.core(n);
        let (r0, i, r1) = c.dim();
        let core = Array3::from_shape_fn((r0, i + 1, r1), |(a, j, b)| {
            if j == 0 {
                e[[a, b]]
            } else {
                c[[a, j - 1, b]] - e[[a, b]]
            }
        });
        cores.push(core);
    }
    TtTensor::new(cores)
}

/// Extract the Sobol tensor train, the variance tensor and the total
/// variance from a surrogate under per-axis weights. `eps` is the relative
/// tolerance for recompressing the squared tensor.
pub fn sobol_tensor(t: &TtTensor, w: &Weights, eps: f64) -> Result<SobolTt> {
    sobol_tensor_with_cap(t, w, eps, crate::tt::DEFAULT_HADAMARD_RANK_CAP)
}

pub fn sobol_tensor_with_cap(
    t: &TtTensor,
    w: &Weights,
    eps: f64,
    rank_cap: usize,
) -> Result<SobolTt> {
    if eps < 0.0 {
        return Err(SttError::InvalidArgument("eps must be nonnegative".into()));
    }
    let n = t.ndim();
    let star = sobol_star(t, w)?;
    let squared = star.hadamard_with_cap(&star, rank_cap)?.round(eps);

    // Variance tensor: slice 0 passes through, slice 1 is the weighted sum of
    // the centered-squared slices.
    let mut cores = Vec::with_capacity(n);
    for k in 0..n {
        let c = squared.core(k);
        let (r0, i1, r1) = c.dim();
        debug_assert_eq!(i1, t.dims()[k] + 1);
        let mut core = Array3::zeros((r0, 2, r1));
        core.index_axis_mut(Axis(1), 0)
            .assign(&c.index_axis(Axis(1), 0));
        {
            let mut s1 = core.index_axis_mut(Axis(1), 1);
            for (j, &wj) in w.axis(k).iter().enumerate() {
                s1.scaled_add(wj, &c.index_axis(Axis(1), j + 1));
            }
        }
        cores.push(core);
    }
    let d_tensor = TtTensor::new(cores)?;

    // Chained product of per-core slice sums = sum over every subset
    // including the empty one, i.e. the second moment E[f^2]. Subtracting
    // the corner (the squared mean) leaves the variance.
    let mut acc: Option<ndarray::Array2<f64>> = None;
    for k in 0..n {
        let c = d_tensor.core(k);
        let m = &c.index_axis(Axis(1), 0).to_owned() + &c.index_axis(Axis(1), 1);
        acc = Some(match acc {
            None => m,
            Some(prev) => prev.dot(&m),
        });
    }
    let second_moment = acc.expect("n >= 1")[[0, 0]];
    let corner = d_tensor.eval(&vec![0; n])?;
    let total = second_moment - corner;

    let scale = second_moment.abs().max(corner.abs());
    if !total.is_finite() {
        return Err(SttError::NumericalInstability(
            "non-finite total variance".into(),
        ));
    }
    if total < -1e-10 * scale.max(1e-300) {
        return Err(SttError::NumericalInstability(format!(
            "total variance {total} is negative; retry with a smaller squaring eps"
        )));
    }
    if total <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
        return Err(SttError::DegenerateModel(format!(
            "total variance {total} is zero or negligible; the model is constant"
        )));
    }

    let s_raw = d_tensor.scale(1.0 / total);
    // Rank-1 corner correction: the corner entry is the normalized squared
    // mean, not a Sobol index; subtract it so S[0,...,0] = 0.
    let corner_s = s_raw.eval(&vec![0; n])?;
    let mut factors = vec![vec![1.0, 0.0]; n];
    factors[0] = vec![-corner_s, 0.0];
    let correction = TtTensor::from_rank1_factors(&factors)?;
    let s = s_raw.add(&correction)?;

    SobolTt::from_parts(s, d_tensor, total, true)
}
