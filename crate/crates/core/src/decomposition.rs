//! Overlapping uniform decompositions, partition-of-unity weights and the
//! finite-basis model `u(x) = (1/N) Σ_levels Σ_j ω_j(x) K_j(x)`.
//!
//! One-dimensional subdomain `j` of `L > 1` has center
//! `μ_j = lo + l (j - 1) / (L - 1)` and half-width `σ_j = (δ l / 2) / (L - 1)`
//! with `l = hi - lo`. Raw weights are `[1 + cos(π (x - μ_j) / σ_j)]²` inside
//! `|x - μ_j| <= σ_j` and zero outside; in several dimensions the raw weight
//! is the product of the per-dimension factors, normalized over all
//! subdomains of the level.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bspline::GridSpec;
use crate::error::{FbkanError, Result};
use crate::kan::{init_network, layer_grid_specs, KanNetwork};
use crate::seeding::derive_seed;

/// Overlap ratio used by every benchmark.
pub const DEFAULT_OVERLAP: f64 = 1.9;
/// Normalized weight above which a point counts as inside a subdomain.
pub const SUPPORT_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_BOUNDS_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Decomposition1DSpec {
    lo: f64,
    hi: f64,
    count: usize,
    overlap: f64,
}

/// Uniform overlapping decomposition of `[lo, hi]` into `count` subdomains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Decomposition1DSpec", into = "Decomposition1DSpec")]
pub struct Decomposition1D {
    lo: f64,
    hi: f64,
    count: usize,
    overlap: f64,
    centers: Vec<f64>,
    half_widths: Vec<f64>,
}

impl TryFrom<Decomposition1DSpec> for Decomposition1D {
    type Error = FbkanError;
    fn try_from(s: Decomposition1DSpec) -> Result<Self> {
        Decomposition1D::new(s.lo, s.hi, s.count, s.overlap)
    }
}

impl From<Decomposition1D> for Decomposition1DSpec {
    fn from(d: Decomposition1D) -> Self {
        Decomposition1DSpec {
            lo: d.lo,
            hi: d.hi,
            count: d.count,
            overlap: d.overlap,
        }
    }
}

impl Decomposition1D {
    pub fn new(lo: f64, hi: f64, count: usize, overlap: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(FbkanError::invalid(format!(
                "decomposition needs a finite interval with hi > lo, got [{lo}, {hi}]"
            )));
        }
        if count == 0 {
            return Err(FbkanError::invalid("decomposition needs at least one subdomain"));
        }
        if !(overlap > 1.0) || !overlap.is_finite() {
            return Err(FbkanError::invalid(format!(
                "overlap ratio must exceed 1, got {overlap}"
            )));
        }
        let l = hi - lo;
        let (centers, half_widths) = if count == 1 {
            (vec![0.5 * (lo + hi)], vec![0.5 * overlap * l])
        } else {
            let m = (count - 1) as f64;
            let sigma = 0.5 * overlap * l / m;
            (
                (0..count).map(|j| lo + l * j as f64 / m).collect(),
                vec![sigma; count],
            )
        };
        Ok(Decomposition1D {
            lo,
            hi,
            count,
            overlap,
            centers,
            half_widths,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Raw weight of subdomain `j` at `x` with its first two derivatives.
    #[inline]
    pub fn raw_factor(&self, j: usize, x: f64) -> [f64; 3] {
        if self.count == 1 {
            return [1.0, 0.0, 0.0];
        }
        let sigma = self.half_widths[j];
        let t = x - self.centers[j];
        if t.abs() >= sigma {
            return [0.0, 0.0, 0.0];
        }
        let k = PI / sigma;
        let (s, c) = (k * t).sin_cos();
        let q = 1.0 + c;
        [q * q, -2.0 * q * s * k, 2.0 * k * k * (s * s - q * c)]
    }

    /// Index range of subdomains whose support may contain `x`.
    #[inline]
    fn candidates(&self, x: f64) -> std::ops::Range<usize> {
        if self.count == 1 {
            return 0..1;
        }
        let sigma = self.half_widths[0];
        let spacing = (self.hi - self.lo) / (self.count - 1) as f64;
        let lo = ((x - sigma - self.lo) / spacing).floor().max(0.0) as usize;
        let hi = (((x + sigma - self.lo) / spacing).ceil() + 1.0).max(0.0) as usize;
        lo.min(self.count)..hi.min(self.count)
    }

    /// Normalized one-dimensional weights at `x` (all subdomains).
    pub fn normalized(&self, x: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.count).map(|j| self.raw_factor(j, x)[0]).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|r| if s > 0.0 { r / s } else { 0.0 }).collect()
    }
}

/// Tensor product of per-dimension decompositions; subdomains are indexed
/// row-major with the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDecomposition {
    dims: Vec<Decomposition1D>,
}

/// Normalized weights and their input derivatives for the subdomains that
/// are active at one point.
#[derive(Debug, Clone, Default)]
pub struct PouJets {
    dim: usize,
    pub(crate) indices: Vec<usize>,
    pub(crate) values: Vec<f64>,
    pub(crate) first: Vec<f64>,
    pub(crate) second: Vec<f64>,
    raw: Vec<[f64; 3]>,
    per_dim: Vec<Vec<(usize, [f64; 3])>>,
    cursor: Vec<usize>,
}

impl PouJets {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, a: usize) -> usize {
        self.indices[a]
    }

    pub fn value(&self, a: usize) -> f64 {
        self.values[a]
    }

    pub fn first(&self, a: usize) -> &[f64] {
        &self.first[a * self.dim..(a + 1) * self.dim]
    }

    pub fn second(&self, a: usize) -> &[f64] {
        &self.second[a * self.dim..(a + 1) * self.dim]
    }
}

impl TensorDecomposition {
    pub fn new(dims: Vec<Decomposition1D>) -> Result<Self> {
        if dims.is_empty() {
            return Err(FbkanError::invalid("decomposition needs at least one dimension"));
        }
        Ok(TensorDecomposition { dims })
    }

    /// Same count and overlap in every dimension of `domain`.
    pub fn uniform(domain: &[(f64, f64)], per_dim: usize, overlap: f64) -> Result<Self> {
        let dims = domain
            .iter()
            .map(|&(lo, hi)| Decomposition1D::new(lo, hi, per_dim, overlap))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    /// Decomposition with `total` subdomains split evenly across dimensions;
    /// `total` must be a perfect `d`-th power.
    pub fn with_total(domain: &[(f64, f64)], total: usize, overlap: f64) -> Result<Self> {
        let d = domain.len() as u32;
        let root = (total as f64).powf(1.0 / d as f64).round() as usize;
        if root == 0 || root.pow(d) != total {
            return Err(FbkanError::invalid(format!(
                "{total} subdomains cannot be split uniformly over {d} dimensions"
            )));
        }
        Self::uniform(domain, root, overlap)
    }

    pub fn dims(&self) -> &[Decomposition1D] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn count(&self) -> usize {
        self.dims.iter().map(Decomposition1D::count).product()
    }

    pub fn multi_index(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for d in (0..self.dims.len()).rev() {
            let n = self.dims[d].count;
            idx[d] = j % n;
            j /= n;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&m, d)| acc * d.count + m)
    }

    /// Active subdomain weights at `x`, with input derivatives up to `order`.
    pub fn jets(&self, x: &[f64], order: usize, out: &mut PouJets) -> Result<()> {
        let dim = self.dims.len();
        out.dim = dim;
        out.indices.clear();
        out.values.clear();
        out.first.clear();
        out.second.clear();
        out.raw.clear();
        out.per_dim.resize_with(dim, Vec::new);
        for (d, dec) in self.dims.iter().enumerate() {
            let list = &mut out.per_dim[d];
            list.clear();
            for j in dec.candidates(x[d]) {
                let f = dec.raw_factor(j, x[d]);
                if f[0] > 0.0 {
                    list.push((j, f));
                }
            }
            if list.is_empty() {
                return Err(FbkanError::CoverageViolation(format!(
                    "point {x:?} lies outside every subdomain support"
                )));
            }
        }
        // enumerate the tensor product of active per-dimension factors
        out.cursor.clear();
        out.cursor.resize(dim, 0);
        let mut sum = 0.0;
        let mut sum_d = [0.0f64; 8];
        let mut sum_dd = [0.0f64; 8];
        debug_assert!(dim <= 8);
        loop {
            let mut flat = 0;
            let mut w = 1.0;
            for d in 0..dim {
                let (j, f) = out.per_dim[d][out.cursor[d]];
                flat = flat * self.dims[d].count + j;
                w *= f[0];
            }
            out.indices.push(flat);
            out.values.push(w);
            sum += w;
            for d in 0..dim {
                let mut g1 = 1.0;
                let mut g2 = 1.0;
                for e in 0..dim {
                    let f = out.per_dim[e][out.cursor[e]].1;
                    if e == d {
                        g1 *= f[1];
                        g2 *= f[2];
                    } else {
                        g1 *= f[0];
                        g2 *= f[0];
                    }
                }
                out.first.push(g1);
                out.second.push(g2);
                sum_d[d] += g1;
                sum_dd[d] += g2;
            }
            // advance the odometer
            let mut d = dim;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                out.cursor[d] += 1;
                if out.cursor[d] < out.per_dim[d].len() {
                    break;
                }
                out.cursor[d] = 0;
                if d == 0 {
                    d = usize::MAX;
                    break;
                }
            }
            if d == usize::MAX {
                break;
            }
        }
        if !(sum > 0.0) {
            return Err(FbkanError::CoverageViolation(format!(
                "raw weights vanish at {x:?}"
            )));
        }
        let inv = 1.0 / sum;
        for a in 0..out.indices.len() {
            let w = out.values[a];
            for d in 0..dim {
                let i = a * dim + d;
                let (w1, w2) = (out.first[i], out.second[i]);
                if order >= 1 {
                    out.first[i] = inv * (w1 - w * sum_d[d] * inv);
                }
                if order >= 2 {
                    out.second[i] = inv
                        * (w2 - 2.0 * w1 * sum_d[d] * inv - w * sum_dd[d] * inv
                            + 2.0 * w * sum_d[d] * sum_d[d] * inv * inv);
                }
            }
            out.values[a] = w * inv;
        }
        if order < 1 {
            out.first.iter_mut().for_each(|v| *v = 0.0);
        }
        if order < 2 {
            out.second.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(())
    }
}

/// Normalized partition-of-unity weights of every subdomain at `x`.
pub fn pou_weights(dec: &TensorDecomposition, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != dec.dim() {
        return Err(FbkanError::invalid(format!(
            "decomposition is {}-dimensional, point has {} coordinates",
            dec.dim(),
            x.len()
        )));
    }
    let mut jets = PouJets::default();
    dec.jets(x, 0, &mut jets)?;
    let mut w = vec![0.0; dec.count()];
    for a in 0..jets.len() {
        w[jets.indices[a]] = jets.values[a];
    }
    Ok(w)
}

/// Per-dimension grid bounds `(a^j, b^j)` of subdomain `j`: extremes of the
/// dense uniform sample points where its normalized weight exceeds `1e-4`.
pub fn subdomain_bounds(
    dec: &TensorDecomposition,
    j: usize,
    samples_per_dim: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples_per_dim < 100 {
        return Err(FbkanError::invalid(format!(
            "subdomain bounds need at least 100 samples per dimension, got {samples_per_dim}"
        )));
    }
    if j >= dec.count() {
        return Err(FbkanError::invalid(format!(
            "subdomain {j} out of range (count {})",
            dec.count()
        )));
    }
    let multi = dec.multi_index(j);
    // the normalized tensor weight factorizes into normalized 1D weights
    let per_dim: Vec<(Vec<f64>, Vec<f64>)> = dec
        .dims
        .iter()
        .zip(&multi)
        .map(|(d, &m)| {
            let xs: Vec<f64> = (0..samples_per_dim)
                .map(|s| {
                    if s == samples_per_dim - 1 {
                        d.hi
                    } else {
                        d.lo + (d.hi - d.lo) * s as f64 / (samples_per_dim - 1) as f64
                    }
                })
                .collect();
            let ws = xs.iter().map(|&x| d.normalized(x)[m]).collect();
            (xs, ws)
        })
        .collect();
    let maxima: Vec<f64> = per_dim
        .iter()
        .map(|(_, ws)| ws.iter().cloned().fold(0.0, f64::max))
        .collect();
    let mut bounds = Vec::with_capacity(dec.dim());
    for (d, (xs, ws)) in per_dim.iter().enumerate() {
        let others: f64 = maxima
            .iter()
            .enumerate()
            .filter(|(e, _)| *e != d)
            .map(|(_, m)| m)
            .product();
        let inside: Vec<f64> = xs
            .iter()
            .zip(ws)
            .filter(|(_, &w)| w * others > SUPPORT_THRESHOLD)
            .map(|(&x, _)| x)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(&a), Some(&b)) if b > a => bounds.push((a, b)),
            _ => {
                return Err(FbkanError::CoverageViolation(format!(
                    "subdomain {j} has no sample with weight above {SUPPORT_THRESHOLD} in dimension {d}"
                )))
            }
        }
    }
    Ok(bounds)
}

/// A stack of decompositions of the same domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilevelDecomposition {
    levels: Vec<TensorDecomposition>,
}

impl MultilevelDecomposition {
    pub fn new(levels: Vec<TensorDecomposition>) -> Result<Self> {
        if levels.is_empty() {
            return Err(FbkanError::invalid("need at least one decomposition level"));
        }
        let d = levels[0].dim();
        if levels.iter().any(|l| l.dim() != d) {
            return Err(FbkanError::invalid("all levels must share the input dimension"));
        }
        Ok(MultilevelDecomposition { levels })
    }

    /// One level per entry of `totals` (subdomain count per level).
    pub fn from_totals(domain: &[(f64, f64)], totals: &[usize], overlap: f64) -> Result<Self> {
        let levels = totals
            .iter()
            .map(|&t| TensorDecomposition::with_total(domain, t, overlap))
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[TensorDecomposition] {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn total_subdomains(&self) -> usize {
        self.levels.iter().map(TensorDecomposition::count).sum()
    }
}

/// Shape shared by every subdomain network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub intervals: usize,
    pub degree: usize,
    pub hidden_range: (f64, f64),
    pub bounds_samples: usize,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, intervals: usize, degree: usize) -> Self {
        Architecture {
            widths,
            intervals,
            degree,
            hidden_range: (-2.0, 2.0),
            bounds_samples: DEFAULT_BOUNDS_SAMPLES,
        }
    }

    /// Parameters of one subdomain network.
    pub fn network_param_count(&self) -> usize {
        let nb = self.intervals + self.degree;
        self.widths
            .windows(2)
            .map(|w| w[0] * w[1] * (nb + 2))
            .sum()
    }
}

/// Decomposition plus one KAN per subdomain per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbkanModel {
    decomposition: MultilevelDecomposition,
    networks: Vec<KanNetwork>,
    #[serde(skip)]
    level_starts: Vec<usize>,
}

impl FbkanModel {
    /// Randomly initialized model; each subdomain network gets its own
    /// first-layer grid over the subdomain bounds.
    pub fn new(
        decomposition: MultilevelDecomposition,
        arch: &Architecture,
        seed: u64,
    ) -> Result<Self> {
        let d = decomposition.dim();
        if arch.widths.first() != Some(&d) {
            return Err(FbkanError::invalid(format!(
                "first width must equal the input dimension {d}, got {:?}",
                arch.widths
            )));
        }
        let mut networks = Vec::with_capacity(decomposition.total_subdomains());
        for (l, level) in decomposition.levels.iter().enumerate() {
            for j in 0..level.count() {
                let bounds = subdomain_bounds(level, j, arch.bounds_samples)?;
                let specs = layer_grid_specs(
                    &arch.widths,
                    &bounds,
                    arch.hidden_range,
                    arch.intervals,
                    arch.degree,
                );
                let net_seed = derive_seed(seed, "network", ((l as u64) << 32) | j as u64);
                networks.push(init_network(&arch.widths, &specs, net_seed)?);
            }
        }
        Self::from_parts(decomposition, networks)
    }

    pub fn from_parts(
        decomposition: MultilevelDecomposition,
        networks: Vec<KanNetwork>,
    ) -> Result<Self> {
        if networks.len() != decomposition.total_subdomains() {
            return Err(FbkanError::invalid(format!(
                "decomposition has {} subdomains but {} networks were given",
                decomposition.total_subdomains(),
                networks.len()
            )));
        }
        let d = decomposition.dim();
        if let Some(net) = networks.iter().find(|n| n.input_dim() != d) {
            return Err(FbkanError::invalid(format!(
                "network input dimension {} does not match the domain dimension {d}",
                net.input_dim()
            )));
        }
        let out = networks[0].output_dim();
        if networks.iter().any(|n| n.output_dim() != out) {
            return Err(FbkanError::invalid("networks disagree on output dimension"));
        }
        let mut model = FbkanModel {
            decomposition,
            networks,
            level_starts: Vec::new(),
        };
        model.rebuild_index();
        Ok(model)
    }

    fn rebuild_index(&mut self) {
        let mut start = 0;
        self.level_starts.clear();
        for level in &self.decomposition.levels {
            self.level_starts.push(start);
            start += level.count();
        }
    }

    /// Restore derived indices after deserialization.
    pub fn validated(mut self) -> Result<Self> {
        self.rebuild_index();
        Self::from_parts(self.decomposition, self.networks)
    }

    pub fn decomposition(&self) -> &MultilevelDecomposition {
        &self.decomposition
    }

    pub fn networks(&self) -> &[KanNetwork] {
        &self.networks
    }

    pub fn networks_mut(&mut self) -> &mut [KanNetwork] {
        &mut self.networks
    }

    /// Index of subdomain `j` of level `l` in [`FbkanModel::networks`].
    pub fn network_index(&self, level: usize, j: usize) -> usize {
        self.level_starts[level] + j
    }

    pub fn input_dim(&self) -> usize {
        self.decomposition.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.networks[0].output_dim()
    }

    pub fn level_count(&self) -> usize {
        self.decomposition.levels.len()
    }

    pub fn param_count(&self) -> usize {
        self.networks.iter().map(KanNetwork::param_count).sum()
    }

    pub fn intervals(&self) -> usize {
        self.networks[0].intervals()
    }

    /// Concatenated parameters of all networks, level-major then subdomain.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for n in &self.networks {
            v.extend_from_slice(n.params());
        }
        v
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(FbkanError::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut off = 0;
        for n in &mut self.networks {
            let len = n.param_count();
            n.params_mut().copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        Ok(())
    }

    /// Offsets of each network's block in the flat parameter vector.
    pub fn param_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.networks.len());
        let mut off = 0;
        for n in &self.networks {
            offs.push(off);
            off += n.param_count();
        }
        offs
    }

    pub fn extend_grids(&mut self, new_intervals: usize) -> Result<()> {
        for n in &mut self.networks {
            n.extend_grids(new_intervals)?;
        }
        Ok(())
    }

    pub fn grid_specs(&self) -> Vec<Vec<Vec<GridSpec>>> {
        self.networks.iter().map(KanNetwork::grid_specs).collect()
    }
}

/// Evaluate the finite-basis model at `x`.
pub fn fbkan_forward(model: &FbkanModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(FbkanError::invalid(format!(
            "model expects {} inputs, got {}",
            model.input_dim(),
            x.len()
        )));
    }
    let mut out = vec![0.0; model.output_dim()];
    let mut jets = PouJets::default();
    let scale = 1.0 / model.level_count() as f64;
    for (l, level) in model.decomposition.levels.iter().enumerate() {
        level.jets(x, 0, &mut jets)?;
        for a in 0..jets.len() {
            let w = jets.values[a];
            if w == 0.0 {
                continue;
            }
            let net = &model.networks[model.level_starts[l] + jets.indices[a]];
            let y = net.forward(x)?;
            for (o, v) in out.iter_mut().zip(y) {
                *o += scale * w * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct transcription of the raw-weight formula, evaluated independently.
    fn raw_weight_scalar(x: f64, mu: f64, sigma: f64) -> f64 {
        if (x - mu).abs() > sigma {
            0.0
        } else {
            (1.0 + (PI * (x - mu) / sigma).cos()).powi(2)
        }
    }

    #[test]
    fn centers_and_half_widths() {
        let d = Decomposition1D::new(0.0, 2.0, 4, 1.9).unwrap();
        for (j, mu) in d.centers().iter().enumerate() {
            assert!((mu - 2.0 * j as f64 / 3.0).abs() < 1e-15);
        }
        assert!((d.half_widths()[0] - 1.9 / 3.0).abs() < 1e-15);
        let shifted = Decomposition1D::new(-1.0, 1.0, 3, 1.9).unwrap();
        assert_eq!(shifted.centers(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_decompositions() {
        assert!(Decomposition1D::new(0.0, 1.0, 0, 1.9).is_err());
        assert!(Decomposition1D::new(0.0, 1.0, 2, 1.0).is_err());
        assert!(Decomposition1D::new(1.0, 0.0, 2, 1.9).is_err());
        assert!(TensorDecomposition::with_total(&[(0.0, 1.0), (0.0, 1.0)], 8, 1.9).is_err());
    }

    #[test]
    fn single_subdomain_weight_is_one() {
        let dec = TensorDecomposition::uniform(&[(0.0, 8.0)], 1, 1.9).unwrap();
        for &x in &[0.0, 3.3, 8.0] {
            assert_eq!(pou_weights(&dec, &[x]).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn weights_at_a_center() {
        let dec = TensorDecomposition::uniform(&[(0.0, 2.0)], 4, 1.9).unwrap();
        let mu = 2.0 / 3.0;
        let w = pou_weights(&dec, &[mu]).unwrap();
        let sigma = 1.9 / 3.0;
        let raw: Vec<f64> = (0..4)
            .map(|j| raw_weight_scalar(mu, 2.0 * j as f64 / 3.0, sigma))
            .collect();
        let s: f64 = raw.iter().sum();
        for j in 0..4 {
            assert!((w[j] - raw[j] / s).abs() < 1e-14, "{j}: {} vs {}", w[j], raw[j] / s);
        }
        assert!(w[1] > w[0] && w[1] > w[2] && w[1] > w[3]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_vanish_outside_support() {
        let dec = TensorDecomposition::uniform(&[(0.0, 8.0)], 8, 1.9).unwrap();
        let d = &dec.dims()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.0..8.0);
            let w = pou_weights(&dec, &[x]).unwrap();
            for j in 0..8 {
                assert!(w[j] >= 0.0);
                if (x - d.centers()[j]).abs() >= d.half_widths()[j] {
                    assert_eq!(w[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn tensor_weights_sum_to_one() {
        let dom = [(-1.0, 1.0), (-1.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for total in [4usize, 9, 16, 36] {
            let dec = TensorDecomposition::with_total(&dom, total, 1.9).unwrap();
            for _ in 0..500 {
                let x = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
                let s: f64 = pou_weights(&dec, &x).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multi_index_is_row_major() {
        let dec = TensorDecomposition::new(vec![
            Decomposition1D::new(0.0, 1.0, 2, 1.9).unwrap(),
            Decomposition1D::new(0.0, 1.0, 3, 1.9).unwrap(),
        ])
        .unwrap();
        assert_eq!(dec.multi_index(4), vec![1, 1]);
        for j in 0..6 {
            assert_eq!(dec.flat_index(&dec.multi_index(j)), j);
        }
    }

    #[test]
    fn pou_first_derivatives_match_finite_differences() {
        let dec = TensorDecomposition::with_total(&[(0.0, 1.0), (0.0, 1.0)], 9, 1.9).unwrap();
        let mut jets = PouJets::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..50 {
            let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            dec.jets(&x, 2, &mut jets).unwrap();
            for a in 0..jets.len() {
                let j = jets.index(a);
                for d in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[d] += h;
                    xm[d] -= h;
                    let wp = pou_weights(&dec, &xp).unwrap()[j];
                    let wm = pou_weights(&dec, &xm).unwrap()[j];
                    let w0 = pou_weights(&dec, &x).unwrap()[j];
                    let fd1 = (wp - wm) / (2.0 * h);
                    let fd2 = (wp - 2.0 * w0 + wm) / (h * h);
                    assert!((jets.first(a)[d] - fd1).abs() < 1e-6);
                    assert!((jets.second(a)[d] - fd2).abs() < 1e-3 * fd2.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn bounds_of_single_domain_are_the_domain() {
        let dec = TensorDecomposition::uniform(&[(0.0, 8.0)], 1, 1.9).unwrap();
        assert_eq!(subdomain_bounds(&dec, 0, 1000).unwrap(), vec![(0.0, 8.0)]);
    }

    #[test]
    fn bounds_match_fine_scan() {
        let dec = TensorDecomposition::uniform(&[(0.0, 8.0)], 4, 1.9).unwrap();
        let spacing = 8.0 / 999.0;
        let (a1, b1) = subdomain_bounds(&dec, 0, 1000).unwrap()[0];
        assert_eq!(a1, 0.0);
        assert!(b1 < 8.0);
        for j in 0..4 {
            let (a, b) = subdomain_bounds(&dec, j, 1000).unwrap()[0];
            let n = 100_000;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in 0..n {
                let x = 8.0 * s as f64 / (n - 1) as f64;
                if pou_weights(&dec, &[x]).unwrap()[j] > SUPPORT_THRESHOLD {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
            assert!((a - lo).abs() <= spacing, "{j}: {a} vs {lo}");
            assert!((b - hi).abs() <= spacing, "{j}: {b} vs {hi}");
        }
    }

    #[test]
    fn tensor_bounds_match_brute_force_grid_scan() {
        let dom = [(0.0, 1.0), (-1.0, 1.0)];
        let dec = TensorDecomposition::with_total(&dom, 4, 1.9).unwrap();
        let n = 150;
        for j in 0..4 {
            let bounds = subdomain_bounds(&dec, j, n).unwrap();
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for s in 0..n {
                for t in 0..n {
                    let x = [
                        if s == n - 1 { 1.0 } else { s as f64 / (n - 1) as f64 },
                        if t == n - 1 { 1.0 } else { -1.0 + 2.0 * t as f64 / (n - 1) as f64 },
                    ];
                    if pou_weights(&dec, &x).unwrap()[j] > SUPPORT_THRESHOLD {
                        for d in 0..2 {
                            lo[d] = lo[d].min(x[d]);
                            hi[d] = hi[d].max(x[d]);
                        }
                    }
                }
            }
            for d in 0..2 {
                assert_eq!(bounds[d], (lo[d], hi[d]));
            }
        }
    }

    #[test]
    fn too_few_bound_samples_rejected() {
        let dec = TensorDecomposition::uniform(&[(0.0, 1.0)], 2, 1.9).unwrap();
        assert!(subdomain_bounds(&dec, 0, 50).is_err());
    }

    fn constant_network(arch: &Architecture, dim: usize, c: f64) -> KanNetwork {
        // hidden node = c via a single edge with constant spline, output edge identity-like
        let specs = layer_grid_specs(
            &arch.widths,
            &vec![(0.0, 1.0); dim],
            arch.hidden_range,
            arch.intervals,
            arch.degree,
        );
        let mut net = KanNetwork::with_zero_params(&arch.widths, &specs).unwrap();
        // the last layer: spline coefficients all equal to c / fan_in gives
        // a constant output for hidden values inside the grid range
        let last = net.layers().len() - 1;
        let fan_in = net.layers()[last].fan_in();
        for i in 0..fan_in {
            let e = net.edge_mut(last, i, 0);
            e[1] = 1.0;
            for v in &mut e[2..] {
                *v = c / fan_in as f64;
            }
        }
        net
    }

    #[test]
    fn single_domain_model_is_the_network() {
        let arch = Architecture::new(vec![2, 3, 1], 5, 3);
        let dec = MultilevelDecomposition::from_totals(&[(0.0, 1.0), (0.0, 1.0)], &[1], 1.9)
            .unwrap();
        let model = FbkanModel::new(dec, &arch, 3).unwrap();
        let x = [0.25, 0.8];
        assert_eq!(
            fbkan_forward(&model, &x).unwrap(),
            model.networks()[0].forward(&x).unwrap()
        );
    }

    #[test]
    fn constant_networks_reproduce_constants() {
        let arch = Architecture::new(vec![1, 2, 1], 5, 3);
        let dom = [(0.0, 1.0)];
        let dec = MultilevelDecomposition::from_totals(&dom, &[4], 1.9).unwrap();
        let nets = (0..4).map(|_| constant_network(&arch, 1, 0.7)).collect();
        let model = FbkanModel::from_parts(dec, nets).unwrap();
        for &x in &[0.0, 0.3, 0.61, 1.0] {
            assert!((fbkan_forward(&model, &[x]).unwrap()[0] - 0.7).abs() < 1e-12);
        }
        let dec = MultilevelDecomposition::from_totals(&dom, &[1, 4], 1.9).unwrap();
        let mut nets = vec![constant_network(&arch, 1, 0.4)];
        nets.extend((0..4).map(|_| constant_network(&arch, 1, 1.0)));
        let model = FbkanModel::from_parts(dec, nets).unwrap();
        for &x in &[0.0, 0.45, 1.0] {
            assert!((fbkan_forward(&model, &[x]).unwrap()[0] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_networks_are_irrelevant() {
        let arch = Architecture::new(vec![1, 3, 1], 5, 3);
        let dec = MultilevelDecomposition::from_totals(&[(0.0, 8.0)], &[8], 1.9).unwrap();
        let model = FbkanModel::new(dec.clone(), &arch, 1).unwrap();
        let x = [0.3];
        let w = pou_weights(&dec.levels()[0], &x).unwrap();
        let mut other = model.clone();
        let replacement = FbkanModel::new(dec, &arch, 99).unwrap();
        for j in 0..8 {
            if w[j] == 0.0 {
                other.networks_mut()[j] = replacement.networks()[j].clone();
            }
        }
        let a = fbkan_forward(&model, &x).unwrap()[0];
        let b = fbkan_forward(&other, &x).unwrap()[0];
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn param_count_scales_with_subdomains() {
        let arch = Architecture::new(vec![1, 5, 1], 5, 3);
        let single = arch.network_param_count();
        assert_eq!(single, 100);
        for l in [1usize, 2, 4, 8, 16] {
            let a = FbkanModel::new(
                MultilevelDecomposition::from_totals(&[(0.0, 8.0)], &[l], 1.9).unwrap(),
                &arch,
                0,
            )
            .unwrap();
            let b = FbkanModel::new(
                MultilevelDecomposition::from_totals(&[(0.0, 8.0)], &[2 * l], 1.9).unwrap(),
                &arch,
                0,
            )
            .unwrap();
            assert_eq!(a.param_count(), l * single);
            assert_eq!(b.param_count(), 2 * a.param_count());
        }
    }

    #[test]
    fn model_round_trips_through_json() {
        let arch = Architecture::new(vec![2, 4, 1], 5, 3);
        let dec = MultilevelDecomposition::from_totals(&[(0.0, 1.0), (0.0, 1.0)], &[1, 4], 1.9)
            .unwrap();
        let model = FbkanModel::new(dec, &arch, 12).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: FbkanModel = serde_json::from_str(&text).unwrap();
        let back = back.validated().unwrap();
        assert_eq!(model, back);
    }
}
