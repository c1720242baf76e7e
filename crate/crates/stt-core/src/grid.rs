//! Discretization of the variable space: per-axis grid values (continuous or
//! categorical) plus per-axis probability weights.

use crate::error::{Result, SttError};
use crate::tt::Weights;

#[derive(Debug, Clone)]
pub enum GridAxis {
    /// Strictly increasing coordinate values, in model units.
    Continuous(Vec<f64>),
    /// Categorical labels, matched exactly.
    Categorical(Vec<String>),
}

impl GridAxis {
    pub fn len(&self) -> usize {
        match self {
            GridAxis::Continuous(v) => v.len(),
            GridAxis::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A coordinate to quantize onto a grid axis.
#[derive(Debug, Clone)]
pub enum Coord<'a> {
    Real(f64),
    Label(&'a str),
}

#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<GridAxis>,
    weights: Weights,
}

impl Grid {
    pub fn new(axes: Vec<GridAxis>, weights: Weights) -> Result<Self> {
        if axes.is_empty() {
            return Err(SttError::InvalidArgument("grid needs at least one axis".into()));
        }
        if weights.ndim() != axes.len() {
            return Err(SttError::ShapeMismatch(format!(
                "{} weight axes for {} grid axes",
                weights.ndim(),
                axes.len()
            )));
        }
        for (n, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(SttError::InvalidArgument(format!("axis {n} is empty")));
            }
            if weights.axis(n).len() != axis.len() {
                return Err(SttError::ShapeMismatch(format!(
                    "axis {n}: {} weights for {} grid points",
                    weights.axis(n).len(),
                    axis.len()
                )));
            }
            if let GridAxis::Continuous(v) = axis {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(SttError::InvalidArgument(format!(
                        "axis {n} has non-finite grid values"
                    )));
                }
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(SttError::InvalidArgument(format!(
                        "axis {n} values must be strictly increasing"
                    )));
                }
            }
        }
        Ok(Self { axes, weights })
    }

    /// Uniform measure on boxes: each axis gets `bins` midpoint values of the
    /// equal-width subintervals of [lo, hi], with mass 1/bins per point.
    pub fn uniform(ranges: &[(f64, f64)], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(SttError::InvalidArgument("bins must be positive".into()));
        }
        let mut axes = Vec::with_capacity(ranges.len());
        for (n, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo < hi) {
                return Err(SttError::InvalidArgument(format!(
                    "axis {n}: range [{lo}, {hi}] is empty"
                )));
            }
            let step = (hi - lo) / bins as f64;
            let vals: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * step).collect();
            axes.push(GridAxis::Continuous(vals));
        }
        let dims = vec![bins; ranges.len()];
        Self::new(axes, Weights::uniform(&dims))
    }

    /// Pure index grid (axis values 0, 1, ..., I_n - 1) with uniform weights;
    /// used for categorical data and external evaluators that work directly
    /// on indices.
    pub fn indexed(dims: &[usize]) -> Result<Self> {
        let axes = dims
            .iter()
            .map(|&i| GridAxis::Continuous((0..i).map(|k| k as f64).collect()))
            .collect();
        Ok(Self::new(axes, Weights::uniform(dims))?)
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Continuous value of grid point `i` on axis `n`.
    pub fn value(&self, n: usize, i: usize) -> Result<f64> {
        match &self.axes[n] {
            GridAxis::Continuous(v) => v.get(i).cloned().ok_or(SttError::IndexOutOfBounds {
                axis: n,
                index: i,
                size: v.len(),
            }),
            GridAxis::Categorical(_) => Err(SttError::InvalidArgument(format!(
                "axis {n} is categorical"
            ))),
        }
    }

    /// Continuous coordinates of a grid multi-index.
    pub fn coords(&self, idx: &[usize]) -> Result<Vec<f64>> {
        idx.iter().enumerate().map(|(n, &i)| self.value(n, i)).collect()
    }

    /// Nearest grid index per axis; distance ties resolve to the lower
    /// index. Categorical coordinates must match a label exactly.
    pub fn quantize(&self, x: &[Coord]) -> Result<Vec<usize>> {
        if x.len() != self.ndim() {
            return Err(SttError::InvalidArgument(format!(
                "{} coordinates for {} axes",
                x.len(),
                self.ndim()
            )));
        }
        let mut out = Vec::with_capacity(x.len());
        for (n, (c, axis)) in x.iter().zip(&self.axes).enumerate() {
            match (c, axis) {
                (Coord::Real(v), GridAxis::Continuous(vals)) => {
                    if !v.is_finite() {
                        return Err(SttError::InvalidArgument(format!(
                            "axis {n}: non-finite coordinate"
                        )));
                    }
                    out.push(nearest_tie_low(vals, *v));
                }
                (Coord::Label(s), GridAxis::Categorical(labels)) => {
                    match labels.iter().position(|l| l == s) {
                        Some(i) => out.push(i),
                        None => {
                            return Err(SttError::UnknownLabel {
                                axis: n,
                                label: (*s).to_string(),
                            })
                        }
                    }
                }
                (Coord::Real(_), GridAxis::Categorical(_)) => {
                    return Err(SttError::InvalidArgument(format!(
                        "axis {n} is categorical but got a real coordinate"
                    )))
                }
                (Coord::Label(_), GridAxis::Continuous(_)) => {
                    return Err(SttError::InvalidArgument(format!(
                        "axis {n} is continuous but got a label"
                    )))
                }
            }
        }
        Ok(out)
    }
}

fn nearest_tie_low(vals: &[f64], x: f64) -> usize {
    let mut lo = vals.partition_point(|&v| v < x);
    if lo == vals.len() {
        return vals.len() - 1;
    }
    if lo == 0 {
        return 0;
    }
    // candidates are lo-1 (below) and lo (at-or-above)
    let d_low = x - vals[lo - 1];
    let d_high = vals[lo] - x;
    if d_low <= d_high {
        lo -= 1;
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis3() -> Grid {
        Grid::new(
            vec![GridAxis::Continuous(vec![0.0, 0.5, 1.0])],
            Weights::uniform(&[3]),
        )
        .unwrap()
    }

    #[test]
    fn quantize_exact_hit() {
        let g = axis3();
        assert_eq!(g.quantize(&[Coord::Real(0.5)]).unwrap(), vec![1]);
    }

    #[test]
    fn quantize_tie_goes_low() {
        let g = axis3();
        assert_eq!(g.quantize(&[Coord::Real(0.24)]).unwrap(), vec![0]);
        assert_eq!(g.quantize(&[Coord::Real(0.25)]).unwrap(), vec![0]);
        assert_eq!(g.quantize(&[Coord::Real(0.26)]).unwrap(), vec![1]);
    }

    #[test]
    fn quantize_clamps_outside_range() {
        let g = axis3();
        assert_eq!(g.quantize(&[Coord::Real(-3.0)]).unwrap(), vec![0]);
        assert_eq!(g.quantize(&[Coord::Real(7.0)]).unwrap(), vec![2]);
    }

    #[test]
    fn quantize_idempotent_on_grid_points() {
        let g = Grid::uniform(&[(-2.0, 3.0), (0.0, 1.0)], 17).unwrap();
        for n in 0..2 {
            for i in 0..17 {
                let v = g.value(n, i).unwrap();
                let mut coords = vec![Coord::Real(g.value(0, 0).unwrap()); 2];
                coords[n] = Coord::Real(v);
                assert_eq!(g.quantize(&coords).unwrap()[n], i);
            }
        }
    }

    #[test]
    fn categorical_labels() {
        let g = Grid::new(
            vec![GridAxis::Categorical(vec!["a".into(), "b".into()])],
            Weights::uniform(&[2]),
        )
        .unwrap();
        assert_eq!(g.quantize(&[Coord::Label("b")]).unwrap(), vec![1]);
        match g.quantize(&[Coord::Label("c")]) {
            Err(SttError::UnknownLabel { axis: 0, label }) => assert_eq!(label, "c"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn uniform_grid_uses_midpoints() {
        let g = Grid::uniform(&[(0.0, 1.0)], 4).unwrap();
        let want = [0.125, 0.375, 0.625, 0.875];
        for (i, w) in want.iter().enumerate() {
            assert!((g.value(0, i).unwrap() - w).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_increasing_axis() {
        let r = Grid::new(
            vec![GridAxis::Continuous(vec![0.0, 0.0, 1.0])],
            Weights::uniform(&[3]),
        );
        assert!(r.is_err());
    }
}
