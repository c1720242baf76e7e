//! Aggregated index families as slice-level linear transforms of a Sobol
//! tensor: superset, closed and total indices, their inverses, and the
//! complement swap. Each transform is O(N R^2) core surgery.
//!
//! The total-index transform assumes a corner-zeroed Sobol tensor whose
//! entries sum to one; the other transforms are unconditional slice maps.

use crate::error::{Result, SttError};
use crate::tt::TtTensor;
use ndarray::{Array3, Axis};

fn check_binary(t: &TtTensor) -> Result<()> {
    if t.dims().iter().any(|&d| d != 2) {
        return Err(SttError::ShapeMismatch(
            "aggregation needs size 2 along every axis".into(),
        ));
    }
    Ok(())
}

/// Apply `f(slice0, slice1) -> (new0, new1)` to every core.
fn map_slices<F>(t: &TtTensor, f: F) -> Result<TtTensor>
where
    F: Fn(&ndarray::Array2<f64>, &ndarray::Array2<f64>) -> (ndarray::Array2<f64>, ndarray::Array2<f64>),
{
    check_binary(t)?;
    let mut cores = Vec::with_capacity(t.ndim());
    for c in t.cores() {
        let s0 = c.index_axis(Axis(1), 0).to_owned();
        let s1 = c.index_axis(Axis(1), 1).to_owned();
        let (n0, n1) = f(&s0, &s1);
        let (r0, _, r1) = c.dim();
        let mut core = Array3::zeros((r0, 2, r1));
        core.index_axis_mut(Axis(1), 0).assign(&n0);
        core.index_axis_mut(Axis(1), 1).assign(&n1);
        cores.push(core);
    }
    TtTensor::new(cores)
}

/// Superset aggregation: result_alpha = sum over beta containing alpha.
pub fn to_superset(s: &TtTensor) -> Result<TtTensor> {
    map_slices(s, |s0, s1| (s0 + s1, s1.clone()))
}

/// Exact inverse of `to_superset`.
pub fn from_superset(ss: &TtTensor) -> Result<TtTensor> {
    map_slices(ss, |s0, s1| (s0 - s1, s1.clone()))
}

/// Closed aggregation: result_alpha = sum over beta contained in alpha.
pub fn to_closed(s: &TtTensor) -> Result<TtTensor> {
    map_slices(s, |s0, s1| (s0.clone(), s0 + s1))
}

/// Exact inverse of `to_closed`.
pub fn from_closed(sc: &TtTensor) -> Result<TtTensor> {
    map_slices(sc, |s0, s1| (s0.clone(), s1 - s0))
}

/// Complement swap: result_alpha = t_{-alpha}; an involution.
pub fn complement(t: &TtTensor) -> Result<TtTensor> {
    map_slices(t, |s0, s1| (s1.clone(), s0.clone()))
}

/// One-minus-complement, mapping closed indices to total indices and back;
/// an involution on tensors whose entries sum to one.
pub fn closed_to_total(sc: &TtTensor) -> Result<TtTensor> {
    check_binary(sc)?;
    let ones = TtTensor::ones(&sc.dims())?;
    let diff = ones.add(&complement(sc)?.scale(-1.0))?;
    Ok(diff.round(1e-12))
}

/// Total aggregation of a corner-zeroed Sobol tensor:
/// result_alpha = sum over beta intersecting alpha.
pub fn to_total(s: &TtTensor) -> Result<TtTensor> {
    closed_to_total(&to_closed(s)?)
}

/// Inverse of `to_total`: repeat the one-minus-complement transform, then
/// undo the closed aggregation.
pub fn from_total(st: &TtTensor) -> Result<TtTensor> {
    from_closed(&closed_to_total(st)?)
}
