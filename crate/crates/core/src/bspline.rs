//! Uniform B-spline knot grids, basis evaluation and grid extension.
//!
//! A [`KnotGrid`] over `[lo, hi]` with `g` intervals and degree `k` carries
//! `g + 2k + 1` uniformly spaced knots: the `g + 1` interior grid points plus
//! `k` continuation knots on each side. This yields `g + k` basis functions
//! that form a partition of unity on `[lo, hi]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FbkanError, Result};

/// Plain description of a grid; the knot vector is derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub intervals: usize,
    pub degree: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, intervals: usize, degree: usize) -> Self {
        GridSpec {
            lo,
            hi,
            intervals,
            degree,
        }
    }

    pub fn with_intervals(self, intervals: usize) -> Self {
        GridSpec { intervals, ..self }
    }
}

/// Degree-`k` knot layout over `[lo, hi]` with `intervals` uniform sub-intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct KnotGrid {
    lo: f64,
    hi: f64,
    intervals: usize,
    degree: usize,
    spacing: f64,
    knots: Vec<f64>,
}

impl TryFrom<GridSpec> for KnotGrid {
    type Error = FbkanError;

    fn try_from(spec: GridSpec) -> Result<Self> {
        build_grid(spec.lo, spec.hi, spec.intervals, spec.degree)
    }
}

impl From<KnotGrid> for GridSpec {
    fn from(grid: KnotGrid) -> Self {
        grid.spec()
    }
}

/// Highest supported spline degree.
pub const MAX_DEGREE: usize = 7;

const BINOMIAL: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1] = {
    let mut t = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    let mut m = 0;
    while m <= MAX_DEGREE {
        t[m][0] = 1.0;
        let mut i = 1;
        while i <= m {
            t[m][i] = t[m - 1][i - 1] + if i < m { t[m - 1][i] } else { 0.0 };
            i += 1;
        }
        m += 1;
    }
    t
};

/// Nonzero cardinal B-splines of degree `P` at local coordinate `u` and
/// derivatives up to `n`, written as `out[m * (P + 1) + r]`. The m-th
/// derivative is the m-th backward difference of the degree `P - m` values.
#[inline(always)]
fn cardinal<const P: usize>(u: f64, n: usize, inv_h: f64, out: &mut [f64]) {
    let w = P + 1;
    // b[r + 1] holds function r of the current degree; b[0] stays zero
    let mut b = [0.0f64; MAX_DEGREE + 2];
    b[1] = 1.0;
    for j in 0..=P {
        if j > 0 {
            let jf = j as f64;
            let inv = 1.0 / jf;
            let mut r = j;
            loop {
                let rf = r as f64;
                b[r + 1] = ((u + jf - rf) * b[r] + (rf + 1.0 - u) * b[r + 1]) * inv;
                if r == 0 {
                    break;
                }
                r -= 1;
            }
        }
        let m = P - j;
        if m >= 1 && m <= n {
            let binom = &BINOMIAL[m];
            let mut scale = inv_h;
            for _ in 1..m {
                scale *= inv_h;
            }
            // entries of b past the current degree are still zero
            for r in 0..w {
                let mut d = 0.0;
                for i in 0..=m.min(r) {
                    let c = binom[i];
                    d += if (m - i) % 2 == 0 { c } else { -c } * b[r - i + 1];
                }
                out[m * w + r] = d * scale;
            }
        }
    }
    out[..w].copy_from_slice(&b[1..=w]);
}

/// Construct the uniform knot grid for `[lo, hi]`.
pub fn build_grid(lo: f64, hi: f64, intervals: usize, degree: usize) -> Result<KnotGrid> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(FbkanError::invalid(format!(
            "grid bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if hi <= lo {
        return Err(FbkanError::invalid(format!(
            "grid upper bound {hi} must exceed lower bound {lo}"
        )));
    }
    if intervals == 0 {
        return Err(FbkanError::invalid("grid needs at least one interval"));
    }
    if degree > MAX_DEGREE {
        return Err(FbkanError::invalid(format!(
            "spline degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let spacing = (hi - lo) / intervals as f64;
    let knots = (0..=intervals + 2 * degree)
        .map(|i| {
            let j = i as isize - degree as isize;
            if j == 0 {
                lo
            } else if j == intervals as isize {
                hi
            } else {
                lo + j as f64 * spacing
            }
        })
        .collect();
    Ok(KnotGrid {
        lo,
        hi,
        intervals,
        degree,
        spacing,
        knots,
    })
}

impl KnotGrid {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `g + k`.
    pub fn basis_count(&self) -> usize {
        self.intervals + self.degree
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.lo, self.hi, self.intervals, self.degree)
    }

    /// Index `s` with `knot(s) <= x < knot(s+1)`, or `None` when `x` lies
    /// outside the extended knot range. `x == hi` maps to the last interior
    /// interval so the basis stays a partition of unity on the closed domain.
    #[inline]
    fn span(&self, x: f64) -> Option<isize> {
        let last = self.knots.len() - 1;
        if !(x >= self.knots[0] && x <= self.knots[last]) {
            return None;
        }
        if x == self.hi {
            return Some((self.degree + self.intervals) as isize - 1);
        }
        // x - knots[0] >= 0 here, so truncation is floor
        let mut s = ((x - self.knots[0]) / self.spacing) as isize;
        s = s.clamp(0, last as isize - 1);
        while s > 0 && x < self.knots[s as usize] {
            s -= 1;
        }
        while (s as usize) < last - 1 && x >= self.knots[s as usize + 1] {
            s += 1;
        }
        if x >= self.knots[s as usize + 1] {
            // x sits on the final extended knot
            return None;
        }
        Some(s)
    }

    /// Evaluate the `k + 1` potentially nonzero basis functions at `x` and
    /// their derivatives up to `max_order`.
    ///
    /// `out` receives `(max_order + 1) * (k + 1)` values laid out as
    /// `out[m * (k + 1) + r]`, the `m`-th derivative of basis function
    /// `first + r`. Returns `first`, which may be negative near the ends: such
    /// indices do not correspond to stored basis functions and must be skipped.
    /// Returns `None` (and leaves `out` untouched) when no basis function has
    /// support at `x`.
    pub fn nonzero_basis(&self, x: f64, max_order: usize, out: &mut [f64]) -> Option<isize> {
        let span = self.span(x)?;
        let p = self.degree;
        let w = p + 1;
        let out = &mut out[..(max_order + 1) * w];
        let n = max_order.min(p);
        // on a uniform grid every basis function is a shifted cardinal
        // B-spline of the local coordinate u in [0, 1]
        let u = (x - self.knots[span as usize]) / self.spacing;
        let inv_h = 1.0 / self.spacing;
        match p {
            0 => cardinal::<0>(u, n, inv_h, out),
            1 => cardinal::<1>(u, n, inv_h, out),
            2 => cardinal::<2>(u, n, inv_h, out),
            3 => cardinal::<3>(u, n, inv_h, out),
            4 => cardinal::<4>(u, n, inv_h, out),
            5 => cardinal::<5>(u, n, inv_h, out),
            6 => cardinal::<6>(u, n, inv_h, out),
            _ => cardinal::<7>(u, n, inv_h, out),
        }
        for v in &mut out[(n + 1) * w..] {
            *v = 0.0;
        }
        Some(span - p as isize)
    }

    /// Value (or derivative) of `Σ c_i B_i(x)`.
    pub fn eval_spline(&self, coeffs: &[f64], x: f64, order: usize) -> f64 {
        let w = self.degree + 1;
        let mut buf = vec![0.0; (order + 1) * w];
        match self.nonzero_basis(x, order, &mut buf) {
            None => 0.0,
            Some(first) => {
                let mut acc = 0.0;
                for r in 0..w {
                    let i = first + r as isize;
                    if i >= 0 && (i as usize) < coeffs.len() {
                        acc += coeffs[i as usize] * buf[order * w + r];
                    }
                }
                acc
            }
        }
    }
}

/// Trainable spline coefficients `c_i`, one per basis function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineCoefficients {
    pub values: Vec<f64>,
}

impl SplineCoefficients {
    pub fn new(values: Vec<f64>) -> Self {
        SplineCoefficients { values }
    }
}

/// All `g + k` basis values (or their `derivative_order`-th derivatives) at `x`.
pub fn basis_values(grid: &KnotGrid, x: f64, derivative_order: usize) -> Result<Vec<f64>> {
    if derivative_order > grid.degree {
        return Err(FbkanError::invalid(format!(
            "derivative order {derivative_order} exceeds spline degree {}",
            grid.degree
        )));
    }
    if !x.is_finite() {
        return Err(FbkanError::invalid("basis evaluation point must be finite"));
    }
    let w = grid.degree + 1;
    let mut values = vec![0.0; grid.basis_count()];
    let mut buf = vec![0.0; (derivative_order + 1) * w];
    if let Some(first) = grid.nonzero_basis(x, derivative_order, &mut buf) {
        for r in 0..w {
            let i = first + r as isize;
            if i >= 0 && (i as usize) < values.len() {
                values[i as usize] = buf[derivative_order * w + r];
            }
        }
    }
    Ok(values)
}

/// Linear map from coefficients on one grid to least-squares coefficients
/// on another grid over the same interval.
#[derive(Debug, Clone)]
pub struct GridTransfer {
    old: KnotGrid,
    new: KnotGrid,
    // row-major, new basis count x old basis count
    matrix: Vec<f64>,
}

impl GridTransfer {
    /// Transfer with the default sample count `max(10 * new basis count, 200)`.
    pub fn new(old: &KnotGrid, new: &KnotGrid) -> Result<Self> {
        let samples = (10 * new.basis_count()).max(200);
        Self::with_samples(old, new, samples)
    }

    pub fn with_samples(old: &KnotGrid, new: &KnotGrid, samples: usize) -> Result<Self> {
        if old.lo != new.lo || old.hi != new.hi || old.degree != new.degree {
            return Err(FbkanError::invalid(
                "grid transfer requires the same interval and degree",
            ));
        }
        if samples < 2 {
            return Err(FbkanError::invalid("grid transfer needs at least two samples"));
        }
        let nb_old = old.basis_count();
        let nb_new = new.basis_count();
        let mut design = DMatrix::<f64>::zeros(samples, nb_new);
        let mut old_basis = DMatrix::<f64>::zeros(samples, nb_old);
        let w = old.degree + 1;
        let mut buf = vec![0.0; w];
        let step = (old.hi - old.lo) / (samples - 1) as f64;
        for s in 0..samples {
            let x = if s == samples - 1 {
                old.hi
            } else {
                old.lo + s as f64 * step
            };
            for (grid, mat, nb) in [(new, &mut design, nb_new), (old, &mut old_basis, nb_old)] {
                if let Some(first) = grid.nonzero_basis(x, 0, &mut buf) {
                    for r in 0..w {
                        let i = first + r as isize;
                        if i >= 0 && (i as usize) < nb {
                            mat[(s, i as usize)] = buf[r];
                        }
                    }
                }
            }
        }
        let svd = design.svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if sv.len() < nb_new || !(smin > 1e-10 * smax) {
            return Err(FbkanError::numerical(
                "grid extension",
                format!(
                    "rank-deficient fit system ({samples} samples, {nb_new} basis functions, \
                     singular value ratio {:.3e})",
                    smin / smax
                ),
            ));
        }
        let pinv = svd
            .pseudo_inverse(1e-12 * smax)
            .map_err(|e| FbkanError::numerical("grid extension", e.to_string()))?;
        let transfer = pinv * old_basis;
        let mut matrix = Vec::with_capacity(nb_new * nb_old);
        for i in 0..nb_new {
            for j in 0..nb_old {
                matrix.push(transfer[(i, j)]);
            }
        }
        Ok(GridTransfer {
            old: old.clone(),
            new: new.clone(),
            matrix,
        })
    }

    pub fn old_grid(&self) -> &KnotGrid {
        &self.old
    }

    pub fn new_grid(&self) -> &KnotGrid {
        &self.new
    }

    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let nb_old = self.old.basis_count();
        debug_assert_eq!(coeffs.len(), nb_old);
        self.matrix
            .chunks_exact(nb_old)
            .map(|row| row.iter().zip(coeffs).map(|(a, c)| a * c).sum())
            .collect()
    }
}

/// Refine `grid` to `new_intervals` and refit `coeffs` by least squares.
pub fn extend_grid(
    grid: &KnotGrid,
    coeffs: &SplineCoefficients,
    new_intervals: usize,
) -> Result<(KnotGrid, SplineCoefficients)> {
    if new_intervals < grid.intervals {
        return Err(FbkanError::invalid(format!(
            "grid extension cannot coarsen ({} -> {new_intervals} intervals)",
            grid.intervals
        )));
    }
    if coeffs.values.len() != grid.basis_count() {
        return Err(FbkanError::invalid(format!(
            "expected {} coefficients, got {}",
            grid.basis_count(),
            coeffs.values.len()
        )));
    }
    let new = build_grid(grid.lo, grid.hi, new_intervals, grid.degree)?;
    let transfer = GridTransfer::new(grid, &new)?;
    let values = transfer.apply(&coeffs.values);
    Ok((new, SplineCoefficients::new(values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook Cox-de Boor recursion on an explicit knot vector. The last
    /// interval is closed at `hi` so that the basis sums to one there.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64, hi: f64) -> f64 {
        if p == 0 {
            let (a, b) = (knots[i], knots[i + 1]);
            return if (a <= x && x < b) || (x == hi && b == hi) {
                1.0
            } else {
                0.0
            };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x, hi);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x, hi);
        }
        v
    }

    fn cox_de_boor_derivative(knots: &[f64], i: usize, p: usize, x: f64, hi: f64) -> f64 {
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += p as f64 / d1 * cox_de_boor(knots, i, p - 1, x, hi);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v -= p as f64 / d2 * cox_de_boor(knots, i + 1, p - 1, x, hi);
        }
        v
    }

    #[test]
    fn single_constant_basis() {
        let g = build_grid(0.0, 1.0, 1, 0).unwrap();
        assert_eq!(g.knots(), &[0.0, 1.0]);
        assert_eq!(g.basis_count(), 1);
        assert_eq!(basis_values(&g, 0.5, 0).unwrap(), vec![1.0]);
        assert_eq!(basis_values(&g, 1.0, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn cubic_grid_layout() {
        let g = build_grid(0.0, 8.0, 5, 3).unwrap();
        assert_eq!(g.knots().len(), 5 + 2 * 3 + 1);
        assert_eq!(g.basis_count(), 8);
        for w in g.knots().windows(2) {
            assert!(((w[1] - w[0]) - 1.6).abs() < 1e-12 * 1.6);
        }
        assert!((g.knots()[0] + 4.8).abs() < 1e-12);
        assert!((g.knots()[11] - 12.8).abs() < 1e-12);
        assert_eq!((g.knots()[3], g.knots()[8]), (0.0, 8.0));
    }

    #[test]
    fn symmetric_interior_knots() {
        let g = build_grid(-1.0, 1.0, 10, 3).unwrap();
        let interior = &g.knots()[3..=13];
        for (i, t) in interior.iter().enumerate() {
            assert!((t - (-1.0 + 0.2 * i as f64)).abs() < 1e-12);
        }
        assert_eq!(interior[0], -1.0);
        assert_eq!(interior[10], 1.0);
    }

    #[test]
    fn invalid_grids() {
        assert!(build_grid(1.0, 1.0, 3, 2).is_err());
        assert!(build_grid(2.0, 1.0, 3, 2).is_err());
        assert!(build_grid(0.0, 1.0, 0, 2).is_err());
        assert!(build_grid(f64::NAN, 1.0, 3, 2).is_err());
        assert!(build_grid(0.0, f64::INFINITY, 3, 2).is_err());
        assert!(build_grid(0.0, 1.0, 3, MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn derivative_order_above_degree_rejected() {
        let g = build_grid(0.0, 1.0, 4, 2).unwrap();
        assert!(matches!(
            basis_values(&g, 0.5, 3),
            Err(FbkanError::InvalidArgument(_))
        ));
    }

    #[test]
    fn piecewise_constant_indicator() {
        let g = build_grid(0.0, 1.0, 4, 0).unwrap();
        assert_eq!(basis_values(&g, 0.3, 0).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(basis_values(&g, 0.0, 0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(basis_values(&g, 1.0, 0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cubic_matches_recursive_oracle() {
        let g = build_grid(0.0, 1.0, 4, 3).unwrap();
        let v0 = basis_values(&g, 0.3, 0).unwrap();
        let v1 = basis_values(&g, 0.3, 1).unwrap();
        for i in 0..g.basis_count() {
            let o0 = cox_de_boor(g.knots(), i, 3, 0.3, 1.0);
            let o1 = cox_de_boor_derivative(g.knots(), i, 3, 0.3, 1.0);
            assert!((v0[i] - o0).abs() < 1e-12, "B_{i}: {} vs {o0}", v0[i]);
            assert!((v1[i] - o1).abs() < 1e-12, "B'_{i}: {} vs {o1}", v1[i]);
        }
    }

    #[test]
    fn outside_extended_range_is_zero() {
        let g = build_grid(0.0, 1.0, 4, 3).unwrap();
        assert!(basis_values(&g, 5.0, 0).unwrap().iter().all(|v| *v == 0.0));
        assert!(basis_values(&g, -5.0, 0).unwrap().iter().all(|v| *v == 0.0));
        // continuation region: same recursion, no clamping
        let x = 1.1;
        let v = basis_values(&g, x, 0).unwrap();
        for i in 0..g.basis_count() {
            assert!((v[i] - cox_de_boor(g.knots(), i, 3, x, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = build_grid(-1.0, 2.0, 7, 3).unwrap();
        let h = 1e-6;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-0.99..1.99);
            let d = basis_values(&g, x, 1).unwrap();
            let p = basis_values(&g, x + h, 0).unwrap();
            let m = basis_values(&g, x - h, 0).unwrap();
            for i in 0..g.basis_count() {
                let fd = (p[i] - m[i]) / (2.0 * h);
                assert!((d[i] - fd).abs() < 1e-5, "x={x} i={i}: {} vs {fd}", d[i]);
            }
        }
    }

    #[test]
    fn identity_refinement_reproduces_spline() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = build_grid(0.0, 8.0, 5, 3).unwrap();
        let c: Vec<f64> = (0..g.basis_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g2, c2) = extend_grid(&g, &SplineCoefficients::new(c.clone()), 5).unwrap();
        for s in 0..=400 {
            let x = 8.0 * s as f64 / 400.0;
            let a = g.eval_spline(&c, x, 0);
            let b = g2.eval_spline(&c2.values, x, 0);
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_survive_extension() {
        let g = build_grid(-2.0, 2.0, 5, 3).unwrap();
        let c = SplineCoefficients::new(vec![1.0; g.basis_count()]);
        let (g2, c2) = extend_grid(&g, &c, 13).unwrap();
        for s in 0..=500 {
            let x = -2.0 + 4.0 * s as f64 / 500.0;
            assert!((g2.eval_spline(&c2.values, x, 0) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nested_refinement_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = build_grid(0.0, 8.0, 5, 3).unwrap();
        let c: Vec<f64> = (0..g.basis_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g2, c2) = extend_grid(&g, &SplineCoefficients::new(c.clone()), 10).unwrap();
        let mut worst: f64 = 0.0;
        for s in 0..=10_000 {
            let x = 8.0 * s as f64 / 10_000.0;
            worst = worst.max((g.eval_spline(&c, x, 0) - g2.eval_spline(&c2.values, x, 0)).abs());
        }
        assert!(worst <= 1e-8, "max deviation {worst}");
    }

    #[test]
    fn refit_error_is_monotone_in_resolution() {
        let target = |x: f64| (4.0 * x).sin();
        let error_at = |g: usize| {
            let grid = build_grid(0.0, 8.0, g, 3).unwrap();
            // fit the target directly through a transfer from a very fine spline
            let fine = build_grid(0.0, 8.0, 400, 3).unwrap();
            let t = GridTransfer::new(&fine, &grid).unwrap();
            let fine_fit = fit_samples(&fine, target);
            let c = t.apply(&fine_fit);
            (0..=2000)
                .map(|s| {
                    let x = 8.0 * s as f64 / 2000.0;
                    (grid.eval_spline(&c, x, 0) - target(x)).powi(2)
                })
                .sum::<f64>()
        };
        let e5 = error_at(5);
        let e10 = error_at(10);
        let e20 = error_at(20);
        assert!(e10 <= e5 && e20 <= e10, "{e5} {e10} {e20}");
    }

    fn fit_samples(grid: &KnotGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = 10 * grid.basis_count();
        let nb = grid.basis_count();
        let mut a = DMatrix::<f64>::zeros(n, nb);
        let mut y = nalgebra::DVector::<f64>::zeros(n);
        for s in 0..n {
            let x = grid.lo() + (grid.hi() - grid.lo()) * s as f64 / (n - 1) as f64;
            let b = basis_values(grid, x, 0).unwrap();
            for i in 0..nb {
                a[(s, i)] = b[i];
            }
            y[s] = f(x);
        }
        let svd = a.svd(true, true);
        svd.solve(&y, 1e-12).unwrap().iter().copied().collect()
    }

    #[test]
    fn rank_deficient_transfer_is_reported() {
        let g = build_grid(0.0, 1.0, 5, 3).unwrap();
        let g2 = build_grid(0.0, 1.0, 20, 3).unwrap();
        let err = GridTransfer::with_samples(&g, &g2, 10).unwrap_err();
        assert!(matches!(err, FbkanError::NumericalFailure { .. }));
    }

    #[test]
    fn coarsening_rejected() {
        let g = build_grid(0.0, 1.0, 5, 3).unwrap();
        let c = SplineCoefficients::new(vec![0.0; 8]);
        assert!(extend_grid(&g, &c, 4).is_err());
    }

    #[test]
    fn grid_serializes_as_spec() {
        let g = build_grid(-2.0, 2.0, 7, 5).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: KnotGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    proptest::proptest! {
        #[test]
        fn partition_of_unity(degree in 0usize..7, intervals in 1usize..30,
                              lo in -10.0f64..10.0, width in 0.1f64..20.0, t in 0.0f64..=1.0) {
            let g = build_grid(lo, lo + width, intervals, degree).unwrap();
            let x = (lo + t * width).min(lo + width);
            let s: f64 = basis_values(&g, x, 0).unwrap().iter().sum();
            proptest::prop_assert!((s - 1.0).abs() < 1e-12, "sum {}", s);
        }
    }
}
