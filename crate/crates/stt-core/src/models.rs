//! Built-in analytic test models and a brute-force ANOVA oracle over dense
//! grids. The oracle computes every decomposition term by weighted
//! marginalization and recursive subtraction, so it is independent of the
//! tensor-train pipeline it verifies.

use crate::error::{Result, SttError};
use crate::tt::Weights;
use ndarray::{ArrayD, Axis, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Coefficients of the Sobol "G" function, all nonnegative.
#[derive(Debug, Clone)]
pub struct GSpec {
    a: Vec<f64>,
}

impl GSpec {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(SttError::InvalidArgument("empty coefficient vector".into()));
        }
        if a.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(SttError::InvalidArgument(
                "G coefficients must be nonnegative".into(),
            ));
        }
        Ok(Self { a })
    }

    /// Coefficients drawn uniformly from (0, 1) with a seeded generator.
    pub fn seeded(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
    }

    pub fn ndim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

/// Sobol G function: prod_n (|4 x_n - 2| + a_n) / (1 + a_n) on [0,1]^N.
pub fn sobol_g(x: &[f64], spec: &GSpec) -> Result<f64> {
    if x.len() != spec.ndim() {
        return Err(SttError::InvalidArgument(format!(
            "{} coordinates for {} coefficients",
            x.len(),
            spec.ndim()
        )));
    }
    Ok(x.iter()
        .zip(spec.a())
        .map(|(&xi, &ai)| ((4.0 * xi - 2.0).abs() + ai) / (1.0 + ai))
        .product())
}

/// Closed-form sensitivity values of the G function.
#[derive(Debug, Clone)]
pub struct GAnalytic {
    d: Vec<f64>,
    total: f64,
}

pub fn sobol_g_analytic(spec: &GSpec) -> GAnalytic {
    let d: Vec<f64> = spec
        .a()
        .iter()
        .map(|&a| 1.0 / (3.0 * (1.0 + a) * (1.0 + a)))
        .collect();
    let total = d.iter().map(|&dn| dn + 1.0).product::<f64>() - 1.0;
    GAnalytic { d, total }
}

impl GAnalytic {
    pub fn variance(&self, n: usize) -> f64 {
        self.d[n]
    }

    pub fn total_variance(&self) -> f64 {
        self.total
    }

    /// S_alpha = (prod_{n in alpha} D_n) / D for a 0-based variable list.
    pub fn index(&self, vars: &[usize]) -> f64 {
        vars.iter().map(|&n| self.d[n]).product::<f64>() / self.total
    }
}

/// Variable ranges of the piston cycle-time model, in order
/// (M, S, V0, k, P0, Ta, T0). The spring coefficient unit is N/m.
pub const PISTON_RANGES: [(f64, f64); 7] = [
    (30.0, 60.0),        // M: piston weight, kg
    (0.005, 0.02),       // S: piston surface area, m^2
    (0.002, 0.01),       // V0: initial gas volume, m^3
    (1000.0, 5000.0),    // k: spring coefficient, N/m
    (90000.0, 110000.0), // P0: atmospheric pressure, N/m^2
    (290.0, 296.0),      // Ta: ambient temperature, K
    (340.0, 360.0),      // T0: filling gas temperature, K
];

pub const PISTON_VAR_NAMES: [&str; 7] = ["M", "S", "V0", "k", "P0", "Ta", "T0"];

/// Piston cycle time in seconds. Inputs must lie within `PISTON_RANGES`;
/// the formula's validity outside them is unestablished.
pub fn piston(x: &[f64]) -> Result<f64> {
    if x.len() != 7 {
        return Err(SttError::InvalidArgument(format!(
            "piston takes 7 variables, got {}",
            x.len()
        )));
    }
    for (n, (&v, &(lo, hi))) in x.iter().zip(PISTON_RANGES.iter()).enumerate() {
        if !(lo..=hi).contains(&v) {
            return Err(SttError::InvalidArgument(format!(
                "piston variable {} ({}) = {v} outside [{lo}, {hi}]",
                n + 1,
                PISTON_VAR_NAMES[n]
            )));
        }
    }
    let (m, s, v0, k, p0, ta, t0) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let disc = a * a + 4.0 * k * (p0 * v0 / t0) * ta;
    if disc <= 0.0 {
        return Err(SttError::NumericalInstability(
            "piston: negative discriminant".into(),
        ));
    }
    let v = s / (2.0 * k) * (disc.sqrt() - a);
    let denom = k + s * s * (p0 * v0 / t0) * (ta / (v * v));
    if denom <= 0.0 || m / denom <= 0.0 {
        return Err(SttError::NumericalInstability(
            "piston: nonpositive square-root argument".into(),
        ));
    }
    Ok(2.0 * std::f64::consts::PI * (m / denom).sqrt())
}

/// Default caps for the brute-force oracle.
pub const ANOVA_MAX_DIMS: usize = 8;
pub const ANOVA_MAX_AXIS: usize = 12;

/// Full ANOVA decomposition of a dense array under a separable discrete
/// measure: every term f_alpha, every variance contribution D_alpha, the
/// total variance, and the resulting Sobol indices.
#[derive(Debug, Clone)]
pub struct AnovaOracle {
    ndim: usize,
    total_variance: f64,
    total_variance_direct: f64,
    variances: BTreeMap<u32, f64>,
    terms: BTreeMap<u32, ArrayD<f64>>,
}

impl AnovaOracle {
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Sum of all variance contributions D_alpha.
    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// E[f^2] - E^2[f], computed directly on the dense array.
    pub fn total_variance_direct(&self) -> f64 {
        self.total_variance_direct
    }

    fn mask(&self, vars: &[usize]) -> Result<u32> {
        let mut m = 0u32;
        for &v in vars {
            if v >= self.ndim {
                return Err(SttError::InvalidArgument(format!(
                    "variable {v} out of range for {} dimensions",
                    self.ndim
                )));
            }
            m |= 1 << v;
        }
        Ok(m)
    }

    /// Sobol index for a nonempty 0-based variable list.
    pub fn index(&self, vars: &[usize]) -> Result<f64> {
        if vars.is_empty() {
            return Err(SttError::InvalidArgument("empty variable set".into()));
        }
        let m = self.mask(vars)?;
        Ok(self.variances[&m] / self.total_variance)
    }

    /// Variance contribution D_alpha for a nonempty variable list.
    pub fn variance(&self, vars: &[usize]) -> Result<f64> {
        if vars.is_empty() {
            return Err(SttError::InvalidArgument("empty variable set".into()));
        }
        let m = self.mask(vars)?;
        Ok(self.variances[&m])
    }

    /// All (bitmask, Sobol index) pairs, alpha != empty.
    pub fn indices(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.variances
            .iter()
            .map(move |(&m, &d)| (m, d / self.total_variance))
    }

    /// Decomposition term f_alpha on its own subgrid (axes of alpha in
    /// ascending order); the empty set yields a 0-dimensional array holding
    /// the grand mean.
    pub fn term(&self, vars: &[usize]) -> Result<&ArrayD<f64>> {
        let m = self.mask(vars)?;
        Ok(&self.terms[&m])
    }
}

/// Weighted sum over all axes not in `keep`, preserving the kept axes'
/// relative order.
fn weighted_marginal(a: &ArrayD<f64>, w: &Weights, keep: u32) -> ArrayD<f64> {
    let mut res = a.clone();
    for axis in (0..a.ndim()).rev() {
        if keep & (1 << axis) != 0 {
            continue;
        }
        let wv = w.axis(axis);
        let mut acc = res.index_axis(Axis(axis), 0).to_owned() * wv[0];
        for (i, &wi) in wv.iter().enumerate().skip(1) {
            acc.scaled_add(wi, &res.index_axis(Axis(axis), i));
        }
        res = acc;
    }
    res
}

/// View `term` (defined on the axes of `beta`) as an array over the axes of
/// `alpha` (a superset), broadcasting across the missing axes.
fn broadcast_term(
    term: &ArrayD<f64>,
    alpha_axes: &[usize],
    beta: u32,
    alpha_dims: &[usize],
) -> ArrayD<f64> {
    let mut v = term.view();
    for (pos, &axis) in alpha_axes.iter().enumerate() {
        if beta & (1 << axis) == 0 {
            v = v.insert_axis(Axis(pos));
        }
    }
    v.broadcast(IxDyn(alpha_dims))
        .expect("superset broadcast")
        .to_owned()
}

pub fn brute_force_anova(dense: &ArrayD<f64>, w: &Weights) -> Result<AnovaOracle> {
    brute_force_anova_with_caps(dense, w, ANOVA_MAX_DIMS, ANOVA_MAX_AXIS)
}

pub fn brute_force_anova_with_caps(
    dense: &ArrayD<f64>,
    w: &Weights,
    max_dims: usize,
    max_axis: usize,
) -> Result<AnovaOracle> {
    let n = dense.ndim();
    if n == 0 || dense.len() == 0 {
        return Err(SttError::InvalidArgument("empty array".into()));
    }
    if w.ndim() != n {
        return Err(SttError::ShapeMismatch(format!(
            "{} weight axes for {n} array axes",
            w.ndim()
        )));
    }
    if n > max_dims || dense.shape().iter().any(|&i| i > max_axis) {
        return Err(SttError::DenseCapExceeded {
            entries: dense.len() << n,
            cap: (max_axis.pow(max_dims as u32)) << max_dims,
        });
    }

    // Masks in increasing cardinality so all proper subsets exist already.
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));

    let mut terms: BTreeMap<u32, ArrayD<f64>> = BTreeMap::new();
    let mut variances: BTreeMap<u32, f64> = BTreeMap::new();
    let mut total = 0.0;

    for &alpha in &masks {
        let alpha_axes: Vec<usize> = (0..n).filter(|&k| alpha & (1 << k) != 0).collect();
        let alpha_dims: Vec<usize> = alpha_axes.iter().map(|&k| dense.shape()[k]).collect();
        let mut f = weighted_marginal(dense, w, alpha);
        for (&beta, term) in terms.iter() {
            if beta & !alpha == 0 && beta != alpha {
                let b = broadcast_term(term, &alpha_axes, beta, &alpha_dims);
                f = f - &b;
            }
        }
        if alpha != 0 {
            let sq = f.mapv(|x| x * x);
            let sub_w = Weights::new(alpha_axes.iter().map(|&k| w.axis(k).to_vec()).collect())?;
            let d = weighted_marginal(&sq, &sub_w, 0)[IxDyn(&[])];
            variances.insert(alpha, d);
            total += d;
        }
        terms.insert(alpha, f);
    }

    let mean = terms[&0][IxDyn(&[])];
    let sq = dense.mapv(|x| x * x);
    let m2 = weighted_marginal(&sq, w, 0)[IxDyn(&[])];
    let direct = m2 - mean * mean;

    let scale = m2.max(mean * mean);
    if !(total.is_finite() && direct.is_finite()) {
        return Err(SttError::NumericalInstability(
            "non-finite variance in the dense oracle".into(),
        ));
    }
    if total <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(SttError::DegenerateModel(format!(
            "total variance {total} is zero or negligible; the model is constant"
        )));
    }

    Ok(AnovaOracle {
        ndim: n,
        total_variance: total,
        total_variance_direct: direct,
        variances,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_at_zero_is_product_form() {
        let spec = GSpec::new(vec![0.3, 1.2, 4.0]).unwrap();
        let got = sobol_g(&[0.0, 0.0, 0.0], &spec).unwrap();
        let want: f64 = spec.a().iter().map(|a| (2.0 + a) / (1.0 + a)).product();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn g_vanishes_at_center_with_zero_coeffs() {
        let spec = GSpec::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(sobol_g(&[0.5, 0.5], &spec).unwrap(), 0.0);
    }

    #[test]
    fn g_single_variable_value() {
        let spec = GSpec::new(vec![1.0]).unwrap();
        assert_eq!(sobol_g(&[0.75], &spec).unwrap(), 1.0);
    }

    #[test]
    fn g_analytic_two_zero_coeffs() {
        let spec = GSpec::new(vec![0.0, 0.0]).unwrap();
        let an = sobol_g_analytic(&spec);
        assert!((an.variance(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((an.total_variance() - 7.0 / 9.0).abs() < 1e-15);
        assert!((an.index(&[0]) - 3.0 / 7.0).abs() < 1e-15);
        assert!((an.index(&[1]) - 3.0 / 7.0).abs() < 1e-15);
        assert!((an.index(&[0, 1]) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn g_analytic_large_coefficient_suppresses_index() {
        let spec = GSpec::new(vec![1e9, 0.0]).unwrap();
        let an = sobol_g_analytic(&spec);
        assert!(an.index(&[0]) < 1e-15);
    }

    #[test]
    fn g_analytic_indices_partition_unity() {
        let spec = GSpec::seeded(6, 99).unwrap();
        let an = sobol_g_analytic(&spec);
        let mut sum = 0.0;
        for mask in 1u32..(1 << 6) {
            let vars: Vec<usize> = (0..6).filter(|&k| mask & (1 << k) != 0).collect();
            sum += an.index(&vars);
        }
        assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
    }

    #[test]
    fn piston_midpoint_regression_value() {
        let x: Vec<f64> = PISTON_RANGES.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let c = piston(&x).unwrap();
        assert!(c.is_finite() && c > 0.0);
        // pinned once from direct evaluation of the formula above
        assert!(
            (c - 0.4643970224718025).abs() <= 1e-12 * c,
            "midpoint cycle time changed: {c}"
        );
    }

    #[test]
    fn piston_positive_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..10_000 {
            let x: Vec<f64> = PISTON_RANGES
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            let c = piston(&x).unwrap();
            assert!(c.is_finite() && c > 0.0);
        }
    }

    #[test]
    fn piston_increases_with_mass() {
        let mid: Vec<f64> = PISTON_RANGES.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut hi = mid.clone();
        hi[0] += 1.0;
        assert!(piston(&hi).unwrap() > piston(&mid).unwrap());
    }

    #[test]
    fn piston_rejects_out_of_range() {
        let mut x: Vec<f64> = PISTON_RANGES.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        x[3] = 100.0;
        assert!(matches!(piston(&x), Err(SttError::InvalidArgument(_))));
    }

    #[test]
    fn oracle_rejects_constant_array() {
        let a = ArrayD::from_elem(IxDyn(&[3, 3]), 2.5);
        let w = Weights::uniform(&[3, 3]);
        assert!(matches!(
            brute_force_anova(&a, &w),
            Err(SttError::DegenerateModel(_))
        ));
    }

    #[test]
    fn oracle_additive_array_has_no_interaction() {
        let g = [0.2, 1.4, -0.7, 0.9];
        let h = [1.0, -0.5, 0.25];
        let a = ArrayD::from_shape_fn(IxDyn(&[4, 3]), |ix| g[ix[0]] + h[ix[1]]);
        let w = Weights::uniform(&[4, 3]);
        let o = brute_force_anova(&a, &w).unwrap();
        assert!(o.index(&[0, 1]).unwrap().abs() < 1e-12);
        assert!((o.index(&[0]).unwrap() + o.index(&[1]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_g_analytic_on_fine_grid() {
        // two independent oracles agreeing: dense ANOVA vs closed form
        let spec = GSpec::seeded(3, 5).unwrap();
        let an = sobol_g_analytic(&spec);
        let bins = 32;
        let a = ArrayD::from_shape_fn(IxDyn(&[bins; 3]), |ix| {
            let x: Vec<f64> = (0..3).map(|k| (ix[k] as f64 + 0.5) / bins as f64).collect();
            sobol_g(&x, &spec).unwrap()
        });
        let w = Weights::uniform(&[bins; 3]);
        let o = brute_force_anova_with_caps(&a, &w, 8, 64).unwrap();
        for mask in 1u32..8 {
            let vars: Vec<usize> = (0..3).filter(|&k| mask & (1 << k) != 0).collect();
            let diff = (o.index(&vars).unwrap() - an.index(&vars)).abs();
            assert!(diff <= 1e-3, "alpha {vars:?}: diff {diff}");
        }
    }

    #[test]
    fn oracle_self_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = ArrayD::from_shape_fn(IxDyn(&[4, 5, 3, 4]), |_| rng.gen_range(-1.0..1.0));
        let mut raw: Vec<Vec<f64>> = Vec::new();
        for &d in a.shape() {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = v.iter().sum();
            raw.push(v.into_iter().map(|x| x / s).collect());
        }
        let w = Weights::new(raw).unwrap();
        let o = brute_force_anova(&a, &w).unwrap();
        let rel = (o.total_variance() - o.total_variance_direct()).abs() / o.total_variance();
        assert!(rel < 1e-10, "rel {rel}");
        let sum: f64 = o.indices().map(|(_, s)| s).sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oracle_terms_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let dims = [3usize, 4, 3];
        let a = ArrayD::from_shape_fn(IxDyn(&dims), |_| rng.gen_range(-1.0..1.0));
        let w = Weights::uniform(&dims);
        let o = brute_force_anova(&a, &w).unwrap();
        // weighted inner product of every distinct pair of terms on the full grid
        let full = |mask: u32| -> ArrayD<f64> {
            let vars: Vec<usize> = (0..3).filter(|&k| mask & (1 << k) != 0).collect();
            let t = o.term(&vars).unwrap();
            ArrayD::from_shape_fn(IxDyn(&dims), |ix| {
                let sub: Vec<usize> = vars.iter().map(|&k| ix[k]).collect();
                t[IxDyn(&sub)]
            })
        };
        for am in 0u32..8 {
            for bm in (am + 1)..8 {
                let fa = full(am);
                let fb = full(bm);
                let mut ip = 0.0;
                for (ix, (x, y)) in fa.indexed_iter().zip(fb.iter()).map(|(p, y)| (p.0, (p.1, y))) {
                    let mut wt = 1.0;
                    for k in 0..3 {
                        wt *= w.axis(k)[ix[k]];
                    }
                    ip += wt * x * y;
                }
                assert!(ip.abs() < 1e-10, "terms {am:#b}, {bm:#b} not orthogonal: {ip}");
            }
        }
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let a = ArrayD::from_elem(IxDyn(&[13, 2]), 0.0);
        let w = Weights::uniform(&[13, 2]);
        assert!(matches!(
            brute_force_anova(&a, &w),
            Err(SttError::DenseCapExceeded { .. })
        ));
    }
}
