//! Kolmogorov-Arnold networks with B-spline edge activations.
//!
//! Every edge carries `φ(x) = w_b·b(x) + w_s·Σ c_i B_i(x)` with
//! `b(x) = x·sigmoid(x)`; node values are sums of incoming edge activations.
//!
//! Parameters live in one flat vector, ordered layer-major, then edge-major
//! (edge `e = i * fan_out + o` joins input node `i` to output node `o`), and
//! within an edge as `[w_b, w_s, c_0, ..., c_{n-1}]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bspline::{build_grid, GridSpec, GridTransfer, KnotGrid};
use crate::error::{FbkanError, Result};

/// Standard deviation of the initial spline coefficients.
pub const COEFFICIENT_INIT_STD: f64 = 0.1;

/// `b(x) = x / (1 + e^{-x})`.
#[inline]
pub fn base_function(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `b` and its first three derivatives at `x`.
#[inline]
pub fn base_derivatives(x: f64) -> [f64; 4] {
    let s = sigmoid(x);
    let s1 = s * (1.0 - s);
    let s2 = s1 * (1.0 - 2.0 * s);
    let q = 2.0 + x * (1.0 - 2.0 * s);
    [
        x * s,
        s + x * s1,
        s1 * q,
        s2 * q + s1 * ((1.0 - 2.0 * s) - 2.0 * x * s1),
    ]
}

/// One KAN layer: `fan_in * fan_out` edges, one knot grid per input node.
#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    fan_in: usize,
    fan_out: usize,
    grids: Vec<KnotGrid>,
}

impl KanLayer {
    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    pub fn grids(&self) -> &[KnotGrid] {
        &self.grids
    }

    pub fn basis_count(&self) -> usize {
        self.grids[0].basis_count()
    }

    pub fn degree(&self) -> usize {
        self.grids[0].degree()
    }

    /// Scalars per edge: `w_b`, `w_s` and the coefficients.
    pub fn edge_len(&self) -> usize {
        self.basis_count() + 2
    }

    pub fn param_len(&self) -> usize {
        self.fan_in * self.fan_out * self.edge_len()
    }
}

/// Layered KAN with its flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct KanNetwork {
    widths: Vec<usize>,
    layers: Vec<KanLayer>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Checkpoint layout of a [`KanNetwork`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    widths: Vec<usize>,
    grids: Vec<Vec<GridSpec>>,
    params: Vec<f64>,
}

impl TryFrom<NetworkDocument> for KanNetwork {
    type Error = FbkanError;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        let mut net = KanNetwork::with_zero_params(&doc.widths, &doc.grids)?;
        if doc.params.len() != net.params.len() {
            return Err(FbkanError::Serialization(format!(
                "network expects {} parameters, document has {}",
                net.params.len(),
                doc.params.len()
            )));
        }
        net.params = doc.params;
        Ok(net)
    }
}

impl From<KanNetwork> for NetworkDocument {
    fn from(net: KanNetwork) -> Self {
        NetworkDocument {
            grids: net.grid_specs(),
            widths: net.widths,
            params: net.params,
        }
    }
}

/// Grid specs for every input node of every layer: the first layer uses
/// `input_ranges` (one per input dimension), hidden layers `hidden_range`.
pub fn layer_grid_specs(
    widths: &[usize],
    input_ranges: &[(f64, f64)],
    hidden_range: (f64, f64),
    intervals: usize,
    degree: usize,
) -> Vec<Vec<GridSpec>> {
    let mut specs = Vec::with_capacity(widths.len().saturating_sub(1));
    for (l, &fan_in) in widths.iter().take(widths.len().saturating_sub(1)).enumerate() {
        let layer = (0..fan_in)
            .map(|i| {
                let (lo, hi) = if l == 0 {
                    input_ranges[i]
                } else {
                    hidden_range
                };
                GridSpec::new(lo, hi, intervals, degree)
            })
            .collect();
        specs.push(layer);
    }
    specs
}

/// Build a network with randomly initialized parameters.
///
/// Coefficients are i.i.d. `N(0, 0.1²)`, `w_s = 1` and `w_b` is uniform in
/// `±sqrt(6 / (fan_in + fan_out))`. The same seed gives the same parameters.
pub fn init_network(widths: &[usize], grids: &[Vec<GridSpec>], seed: u64) -> Result<KanNetwork> {
    let mut net = KanNetwork::with_zero_params(widths, grids)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, COEFFICIENT_INIT_STD).expect("valid normal");
    for l in 0..net.layers.len() {
        let layer = &net.layers[l];
        let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        let edge_len = layer.edge_len();
        let edges = layer.fan_in * layer.fan_out;
        let off = net.offsets[l];
        for e in 0..edges {
            let block = &mut net.params[off + e * edge_len..off + (e + 1) * edge_len];
            block[0] = rng.gen_range(-bound..=bound);
            block[1] = 1.0;
            for c in &mut block[2..] {
                *c = normal.sample(&mut rng);
            }
        }
    }
    Ok(net)
}

impl KanNetwork {
    /// Structure with every parameter set to zero.
    pub fn with_zero_params(widths: &[usize], grids: &[Vec<GridSpec>]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(FbkanError::invalid(
                "a KAN needs at least an input and an output width",
            ));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(FbkanError::invalid("layer widths must be positive"));
        }
        if grids.len() != widths.len() - 1 {
            return Err(FbkanError::invalid(format!(
                "expected grid specs for {} layers, got {}",
                widths.len() - 1,
                grids.len()
            )));
        }
        let mut layers = Vec::with_capacity(grids.len());
        for (l, specs) in grids.iter().enumerate() {
            if specs.len() != widths[l] {
                return Err(FbkanError::invalid(format!(
                    "layer {l} has {} inputs but {} grid specs",
                    widths[l],
                    specs.len()
                )));
            }
            let grids = specs
                .iter()
                .map(|s| build_grid(s.lo, s.hi, s.intervals, s.degree))
                .collect::<Result<Vec<_>>>()?;
            let (nb, k) = (grids[0].basis_count(), grids[0].degree());
            if grids.iter().any(|g| g.basis_count() != nb || g.degree() != k) {
                return Err(FbkanError::invalid(format!(
                    "layer {l}: all input grids must share intervals and degree"
                )));
            }
            layers.push(KanLayer {
                fan_in: widths[l],
                fan_out: widths[l + 1],
                grids,
            });
        }
        let mut net = KanNetwork {
            widths: widths.to_vec(),
            layers,
            params: Vec::new(),
            offsets: Vec::new(),
        };
        net.rebuild_offsets();
        net.params = vec![0.0; net.param_count()];
        Ok(net)
    }

    fn rebuild_offsets(&mut self) {
        let mut off = 0;
        self.offsets.clear();
        for layer in &self.layers {
            self.offsets.push(off);
            off += layer.param_len();
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Exact number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(KanLayer::param_len).sum()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of layer `l`'s block in the flat parameter vector.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    /// Parameter block `[w_b, w_s, c...]` of edge `(input, output)` in layer `l`.
    pub fn edge(&self, l: usize, input: usize, output: usize) -> &[f64] {
        let layer = &self.layers[l];
        let e = input * layer.fan_out + output;
        let start = self.offsets[l] + e * layer.edge_len();
        &self.params[start..start + layer.edge_len()]
    }

    pub fn edge_mut(&mut self, l: usize, input: usize, output: usize) -> &mut [f64] {
        let layer = &self.layers[l];
        let e = input * layer.fan_out + output;
        let len = layer.edge_len();
        let start = self.offsets[l] + e * len;
        &mut self.params[start..start + len]
    }

    pub fn grid_specs(&self) -> Vec<Vec<GridSpec>> {
        self.layers
            .iter()
            .map(|l| l.grids.iter().map(KnotGrid::spec).collect())
            .collect()
    }

    /// Number of grid intervals (shared by every layer).
    pub fn intervals(&self) -> usize {
        self.layers[0].grids[0].intervals()
    }

    /// Evaluate the network at `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(FbkanError::invalid(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut tape = NetTape::default();
        tape.forward(self, x, 0, false);
        Ok(tape.output_values().to_vec())
    }

    /// Refine every grid to `new_intervals` and refit all edge coefficients.
    pub fn extend_grids(&mut self, new_intervals: usize) -> Result<()> {
        let mut new_params = Vec::new();
        let mut new_layers = Vec::with_capacity(self.layers.len());
        let mut cache: Vec<(GridSpec, GridTransfer)> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let old_len = layer.edge_len();
            let mut grids = Vec::with_capacity(layer.fan_in);
            let mut transfers = Vec::with_capacity(layer.fan_in);
            for grid in &layer.grids {
                let spec = grid.spec();
                let transfer = match cache.iter().find(|(s, _)| *s == spec) {
                    Some((_, t)) => t.clone(),
                    None => {
                        if new_intervals < grid.intervals() {
                            return Err(FbkanError::invalid(format!(
                                "grid extension cannot coarsen ({} -> {new_intervals})",
                                grid.intervals()
                            )));
                        }
                        let new = build_grid(grid.lo(), grid.hi(), new_intervals, grid.degree())?;
                        let t = GridTransfer::new(grid, &new)?;
                        cache.push((spec, t.clone()));
                        t
                    }
                };
                grids.push(transfer.new_grid().clone());
                transfers.push(transfer);
            }
            for i in 0..layer.fan_in {
                for o in 0..layer.fan_out {
                    let e = i * layer.fan_out + o;
                    let block = &self.params[self.offsets[l] + e * old_len..][..old_len];
                    new_params.push(block[0]);
                    new_params.push(block[1]);
                    new_params.extend(transfers[i].apply(&block[2..]));
                }
            }
            new_layers.push(KanLayer {
                fan_in: layer.fan_in,
                fan_out: layer.fan_out,
                grids,
            });
        }
        self.layers = new_layers;
        self.params = new_params;
        self.rebuild_offsets();
        debug_assert_eq!(self.params.len(), self.param_count());
        Ok(())
    }
}

/// Forward record of one network evaluation, reused across points.
///
/// Node jets carry the value, the first derivative with respect to each
/// model input and the diagonal second derivatives. The backward pass turns
/// an adjoint of the output jet into parameter gradients.
#[derive(Debug, Default, Clone)]
pub(crate) struct NetTape {
    dim: usize,
    order: usize,
    backward: bool,
    // node jets per layer boundary (0 = network input)
    z: Vec<Vec<f64>>,
    zd: Vec<Vec<f64>>,
    zdd: Vec<Vec<f64>>,
    // per layer: derivative order stored for activations
    stored: Vec<usize>,
    first: Vec<Vec<isize>>,
    valid: Vec<Vec<(usize, usize)>>,
    basis: Vec<Vec<f64>>,
    base: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    spline: Vec<Vec<f64>>,
    zb: Vec<Vec<f64>>,
    zdb: Vec<Vec<f64>>,
    zddb: Vec<Vec<f64>>,
    shape: Vec<(usize, usize, usize)>,
}

const NO_SUPPORT: isize = isize::MIN;

impl NetTape {
    fn prepare(&mut self, net: &KanNetwork, order: usize, backward: bool) {
        let dim = net.input_dim();
        if self.dim == dim
            && self.order == order
            && self.backward == backward
            && !self.z.is_empty()
            && self.shape.len() == net.layers.len()
            && self
                .shape
                .iter()
                .zip(&net.layers)
                .all(|(s, l)| *s == (l.fan_in, l.fan_out, l.degree()))
        {
            return;
        }
        let shape: Vec<(usize, usize, usize)> = net
            .layers
            .iter()
            .map(|l| (l.fan_in, l.fan_out, l.degree()))
            .collect();
        self.dim = dim;
        self.order = order;
        self.backward = backward;
        let n = net.layers.len();
        let dd = if order >= 1 { dim } else { 0 };
        let ddd = if order >= 2 { dim } else { 0 };
        self.z = net.widths.iter().map(|&w| vec![0.0; w]).collect();
        self.zd = net.widths.iter().map(|&w| vec![0.0; w * dd]).collect();
        self.zdd = net.widths.iter().map(|&w| vec![0.0; w * ddd]).collect();
        self.zb = self.z.clone();
        self.zdb = self.zd.clone();
        self.zddb = self.zdd.clone();
        self.stored = (0..n)
            .map(|l| order + usize::from(backward && l > 0))
            .collect();
        self.first = net.layers.iter().map(|l| vec![NO_SUPPORT; l.fan_in]).collect();
        self.valid = net.layers.iter().map(|l| vec![(0, 0); l.fan_in]).collect();
        self.basis = net
            .layers
            .iter()
            .zip(&self.stored)
            .map(|(l, &m)| vec![0.0; l.fan_in * (m + 1) * (l.degree() + 1)])
            .collect();
        self.base = net
            .layers
            .iter()
            .zip(&self.stored)
            .map(|(l, &m)| vec![0.0; l.fan_in * (m + 1)])
            .collect();
        self.phi = net
            .layers
            .iter()
            .zip(&self.stored)
            .map(|(l, &m)| vec![0.0; l.fan_in * l.fan_out * (m + 1)])
            .collect();
        self.spline = self.phi.clone();
        self.shape = shape;
    }

    pub(crate) fn output_values(&self) -> &[f64] {
        self.z.last().unwrap()
    }

    pub(crate) fn output_first(&self) -> &[f64] {
        self.zd.last().unwrap()
    }

    pub(crate) fn output_second(&self) -> &[f64] {
        self.zdd.last().unwrap()
    }

    /// Propagate the input jet of `x` through `net`. `order` is the highest
    /// input derivative tracked (0, 1 or 2); `backward` stores what
    /// [`NetTape::backward`] needs.
    pub(crate) fn forward(&mut self, net: &KanNetwork, x: &[f64], order: usize, backward: bool) {
        debug_assert!(order <= 2);
        self.prepare(net, order, backward);
        let dim = self.dim;
        let dd = if order >= 1 { dim } else { 0 };
        let ddd = if order >= 2 { dim } else { 0 };
        self.z[0].copy_from_slice(x);
        if dd > 0 {
            let zd0 = &mut self.zd[0];
            zd0.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..dim {
                zd0[i * dim + i] = 1.0;
            }
        }
        if ddd > 0 {
            self.zdd[0].iter_mut().for_each(|v| *v = 0.0);
        }

        for (l, layer) in net.layers.iter().enumerate() {
            let m_max = self.stored[l];
            let mw = m_max + 1;
            let k1 = layer.degree() + 1;
            let nb = layer.basis_count();
            let edge_len = nb + 2;
            let fo = layer.fan_out;
            let params = &net.params[net.offsets[l]..net.offsets[l] + layer.param_len()];

            let (lower, upper) = self.z.split_at_mut(l + 1);
            let zin = &lower[l];
            let zout = &mut upper[0];
            let (lower_d, upper_d) = self.zd.split_at_mut(l + 1);
            let zdin = &lower_d[l];
            let zdout = &mut upper_d[0];
            let (lower_dd, upper_dd) = self.zdd.split_at_mut(l + 1);
            let zddin = &lower_dd[l];
            let zddout = &mut upper_dd[0];
            zout.iter_mut().for_each(|v| *v = 0.0);
            zdout.iter_mut().for_each(|v| *v = 0.0);
            zddout.iter_mut().for_each(|v| *v = 0.0);

            let basis = &mut self.basis[l];
            let base = &mut self.base[l];
            let phi = &mut self.phi[l];
            let spline = &mut self.spline[l];

            for i in 0..layer.fan_in {
                let zi = zin[i];
                let bslice = &mut basis[i * mw * k1..(i + 1) * mw * k1];
                let first =
                    layer.grids[i].nonzero_basis(zi, m_max, bslice);
                let (r_lo, r_hi) = match first {
                    Some(f) => {
                        let lo = (-f).max(0) as usize;
                        let hi = ((nb as isize - f).min(k1 as isize)).max(0) as usize;
                        (lo, hi.max(lo))
                    }
                    None => (0, 0),
                };
                self.first[l][i] = first.unwrap_or(NO_SUPPORT);
                self.valid[l][i] = (r_lo, r_hi);
                let bd = base_derivatives(zi);
                base[i * mw..(i + 1) * mw].copy_from_slice(&bd[..mw]);

                for o in 0..fo {
                    let e = i * fo + o;
                    let block = &params[e * edge_len..(e + 1) * edge_len];
                    let (wb, ws) = (block[0], block[1]);
                    let ph = &mut phi[e * mw..(e + 1) * mw];
                    let sp = &mut spline[e * mw..(e + 1) * mw];
                    let coef = match first {
                        Some(f) if r_hi > r_lo => {
                            let c0 = 2 + (f + r_lo as isize) as usize;
                            &block[c0..c0 + (r_hi - r_lo)]
                        }
                        _ => &block[..0],
                    };
                    for m in 0..mw {
                        let brow = &bslice[m * k1 + r_lo..m * k1 + r_lo + coef.len()];
                        let s: f64 = coef.iter().zip(brow).map(|(c, b)| c * b).sum();
                        sp[m] = s;
                        ph[m] = wb * bd[m] + ws * s;
                    }
                    zout[o] += ph[0];
                    for d in 0..dd {
                        let zid = zdin[i * dim + d];
                        zdout[o * dim + d] += ph[1] * zid;
                        if ddd > 0 {
                            zddout[o * dim + d] += ph[2] * zid * zid + ph[1] * zddin[i * dim + d];
                        }
                    }
                }
            }
        }
    }

    /// Accumulate into `grad` (this network's parameter slice) the gradient
    /// of a scalar whose sensitivity to the output jet is given by
    /// `value_adj` (per output), `first_adj` and `second_adj`
    /// (per output, per input dimension).
    pub(crate) fn backward(
        &mut self,
        net: &KanNetwork,
        value_adj: &[f64],
        first_adj: &[f64],
        second_adj: &[f64],
        grad: &mut [f64],
    ) {
        debug_assert!(self.backward);
        let dim = self.dim;
        let order = self.order;
        let dd = if order >= 1 { dim } else { 0 };
        let ddd = if order >= 2 { dim } else { 0 };
        let n = net.layers.len();
        self.zb[n].copy_from_slice(value_adj);
        if dd > 0 {
            let len = self.zdb[n].len();
            self.zdb[n].copy_from_slice(&first_adj[..len]);
        }
        if ddd > 0 {
            let len = self.zddb[n].len();
            self.zddb[n].copy_from_slice(&second_adj[..len]);
        }

        for l in (0..n).rev() {
            let layer = &net.layers[l];
            let mw = self.stored[l] + 1;
            let k1 = layer.degree() + 1;
            let nb = layer.basis_count();
            let edge_len = nb + 2;
            let fo = layer.fan_out;
            let off = net.offsets[l];
            let params = &net.params[off..off + layer.param_len()];
            let g = &mut grad[off..off + layer.param_len()];
            let propagate = l > 0;

            let (lower, upper) = self.zb.split_at_mut(l + 1);
            let zb_in = &mut lower[l];
            let zb_out = &upper[0];
            let (lower_d, upper_d) = self.zdb.split_at_mut(l + 1);
            let zdb_in = &mut lower_d[l];
            let zdb_out = &upper_d[0];
            let (lower_dd, upper_dd) = self.zddb.split_at_mut(l + 1);
            let zddb_in = &mut lower_dd[l];
            let zddb_out = &upper_dd[0];
            if propagate {
                zb_in.iter_mut().for_each(|v| *v = 0.0);
                zdb_in.iter_mut().for_each(|v| *v = 0.0);
                zddb_in.iter_mut().for_each(|v| *v = 0.0);
            }
            let zd = &self.zd[l];
            let zdd = &self.zdd[l];

            for i in 0..layer.fan_in {
                let first = self.first[l][i];
                let (r_lo, r_hi) = self.valid[l][i];
                let bslice = &self.basis[l][i * mw * k1..(i + 1) * mw * k1];
                let bd = &self.base[l][i * mw..(i + 1) * mw];
                for o in 0..fo {
                    let e = i * fo + o;
                    let a0 = zb_out[o];
                    let mut a1 = 0.0;
                    let mut a2 = 0.0;
                    for d in 0..dd {
                        let zid = zd[i * dim + d];
                        a1 += zdb_out[o * dim + d] * zid;
                        if ddd > 0 {
                            let yb2 = zddb_out[o * dim + d];
                            a1 += yb2 * zdd[i * dim + d];
                            a2 += yb2 * zid * zid;
                        }
                    }
                    if a0 == 0.0 && a1 == 0.0 && a2 == 0.0 {
                        continue;
                    }
                    let sp = &self.spline[l][e * mw..(e + 1) * mw];
                    let ph = &self.phi[l][e * mw..(e + 1) * mw];
                    let ws = params[e * edge_len + 1];
                    let ge = &mut g[e * edge_len..(e + 1) * edge_len];

                    let mut gb = a0 * bd[0];
                    let mut gs = a0 * sp[0];
                    if order >= 1 {
                        gb += a1 * bd[1];
                        gs += a1 * sp[1];
                    }
                    if order >= 2 {
                        gb += a2 * bd[2];
                        gs += a2 * sp[2];
                    }
                    ge[0] += gb;
                    ge[1] += gs;
                    if first != NO_SUPPORT && r_hi > r_lo {
                        let c0 = 2 + (first + r_lo as isize) as usize;
                        let n = r_hi - r_lo;
                        let gc = &mut ge[c0..c0 + n];
                        let b0 = &bslice[r_lo..r_lo + n];
                        match order {
                            0 => gc.iter_mut().zip(b0).for_each(|(g, b)| *g += ws * a0 * b),
                            1 => {
                                let b1 = &bslice[k1 + r_lo..k1 + r_lo + n];
                                for ((g, x0), x1) in gc.iter_mut().zip(b0).zip(b1) {
                                    *g += ws * (a0 * x0 + a1 * x1);
                                }
                            }
                            _ => {
                                let b1 = &bslice[k1 + r_lo..k1 + r_lo + n];
                                let b2 = &bslice[2 * k1 + r_lo..2 * k1 + r_lo + n];
                                for (((g, x0), x1), x2) in gc.iter_mut().zip(b0).zip(b1).zip(b2) {
                                    *g += ws * (a0 * x0 + a1 * x1 + a2 * x2);
                                }
                            }
                        }
                    }

                    if propagate {
                        let mut zbar = a0 * ph[1];
                        if order >= 1 {
                            zbar += a1 * ph[2];
                        }
                        if order >= 2 {
                            zbar += a2 * ph[3];
                        }
                        zb_in[i] += zbar;
                        for d in 0..dd {
                            let yb1 = zdb_out[o * dim + d];
                            let mut v = yb1 * ph[1];
                            if ddd > 0 {
                                let yb2 = zddb_out[o * dim + d];
                                v += 2.0 * yb2 * zd[i * dim + d] * ph[2];
                                zddb_in[i * dim + d] += yb2 * ph[1];
                            }
                            zdb_in[i * dim + d] += v;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::basis_values;
    use rand::Rng;

    fn specs(widths: &[usize], range: (f64, f64), g: usize, k: usize) -> Vec<Vec<GridSpec>> {
        let inputs = vec![range; widths[0]];
        layer_grid_specs(widths, &inputs, (-2.0, 2.0), g, k)
    }

    #[test]
    fn parameter_counts() {
        let net = init_network(&[1, 5, 1], &specs(&[1, 5, 1], (0.0, 8.0), 5, 3), 0).unwrap();
        assert_eq!(net.param_count(), 100);
        let net = init_network(&[2, 10, 1], &specs(&[2, 10, 1], (0.0, 1.0), 5, 5), 0).unwrap();
        assert_eq!(net.param_count(), 360);
        let net = init_network(&[2, 5, 1], &specs(&[2, 5, 1], (0.0, 1.0), 5, 3), 0).unwrap();
        assert_eq!(net.param_count(), 150);
    }

    #[test]
    fn init_is_deterministic_and_scaled() {
        let s = specs(&[2, 10, 1], (-1.0, 1.0), 5, 3);
        let a = init_network(&[2, 10, 1], &s, 42).unwrap();
        let b = init_network(&[2, 10, 1], &s, 42).unwrap();
        let c = init_network(&[2, 10, 1], &s, 43).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
        let bound = (6.0f64 / 12.0).sqrt();
        for i in 0..2 {
            for o in 0..10 {
                let e = a.edge(0, i, o);
                assert!(e[0].abs() <= bound);
                assert_eq!(e[1], 1.0);
            }
        }
    }

    #[test]
    fn empty_widths_rejected() {
        assert!(init_network(&[], &[], 0).is_err());
        assert!(init_network(&[3], &[], 0).is_err());
    }

    #[test]
    fn base_function_values() {
        assert_eq!(base_function(0.0), 0.0);
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((base_function(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((base_function(1.0) - expected).abs() < 1e-15);
        let v = base_function(-100.0);
        assert!(v.is_finite() && v.abs() < 1e-40);
        assert!((base_function(100.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn base_derivatives_match_finite_differences() {
        for &x in &[-5.0, -1.3, 0.0, 0.4, 2.0, 7.5] {
            let d = base_derivatives(x);
            let h = 1e-5;
            let p = base_derivatives(x + h);
            let m = base_derivatives(x - h);
            for k in 0..3 {
                let fd = (p[k] - m[k]) / (2.0 * h);
                assert!((d[k + 1] - fd).abs() < 1e-7, "x={x} order {}", k + 1);
            }
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = KanNetwork::with_zero_params(&[2, 4, 1], &specs(&[2, 4, 1], (0.0, 1.0), 5, 3))
            .unwrap();
        assert_eq!(net.forward(&[0.3, 0.9]).unwrap(), vec![0.0]);
    }

    #[test]
    fn single_edge_is_the_spline() {
        let s = specs(&[1, 1], (0.0, 1.0), 6, 3);
        let mut net = init_network(&[1, 1], &s, 5).unwrap();
        net.edge_mut(0, 0, 0)[0] = 0.0;
        net.edge_mut(0, 0, 0)[1] = 1.0;
        let grid = &net.layers()[0].grids()[0];
        let coeffs = net.edge(0, 0, 0)[2..].to_vec();
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let b = basis_values(grid, x, 0).unwrap();
            let oracle: f64 = b.iter().zip(&coeffs).map(|(b, c)| b * c).sum();
            assert!((net.forward(&[x]).unwrap()[0] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_weight_zero_decouples_coefficients() {
        let s = specs(&[2, 3, 1], (-1.0, 1.0), 5, 3);
        let mut net = init_network(&[2, 3, 1], &s, 9).unwrap();
        for l in 0..2 {
            let layer = net.layers()[l].clone();
            for i in 0..layer.fan_in() {
                for o in 0..layer.fan_out() {
                    net.edge_mut(l, i, o)[1] = 0.0;
                }
            }
        }
        let before = net.forward(&[0.2, -0.7]).unwrap();
        for l in 0..2 {
            let layer = net.layers()[l].clone();
            for i in 0..layer.fan_in() {
                for o in 0..layer.fan_out() {
                    for c in &mut net.edge_mut(l, i, o)[2..] {
                        *c += 3.0;
                    }
                }
            }
        }
        assert_eq!(before, net.forward(&[0.2, -0.7]).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = init_network(&[2, 3, 1], &specs(&[2, 3, 1], (0.0, 1.0), 5, 3), 0).unwrap();
        assert!(net.forward(&[0.5]).is_err());
    }

    #[test]
    fn final_layer_linearity() {
        let s = specs(&[2, 4, 1], (-1.0, 1.0), 5, 3);
        let net = init_network(&[2, 4, 1], &s, 1).unwrap();
        let x = [0.3, -0.4];
        let y = net.forward(&x).unwrap()[0];
        // doubling (w_b, c) at fixed w_s
        let mut a = net.clone();
        for i in 0..4 {
            let e = a.edge_mut(1, i, 0);
            e[0] *= 2.0;
            for c in &mut e[2..] {
                *c *= 2.0;
            }
        }
        assert!((a.forward(&x).unwrap()[0] - 2.0 * y).abs() <= 1e-15 * y.abs().max(1.0) * 4.0);
        // doubling (w_b, w_s) at fixed c
        let mut b = net.clone();
        for i in 0..4 {
            let e = b.edge_mut(1, i, 0);
            e[0] *= 2.0;
            e[1] *= 2.0;
        }
        assert!((b.forward(&x).unwrap()[0] - 2.0 * y).abs() <= 1e-15 * y.abs().max(1.0) * 4.0);
    }

    #[test]
    fn continuity_under_small_perturbation() {
        let s = specs(&[2, 5, 1], (0.0, 1.0), 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..5 {
            let net = init_network(&[2, 5, 1], &s, seed).unwrap();
            for _ in 0..50 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let y = net.forward(&x).unwrap()[0];
                let y2 = net.forward(&[x[0] + 1e-6, x[1] - 1e-6]).unwrap()[0];
                assert!((y - y2).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn nested_grid_extension_preserves_outputs() {
        let s = specs(&[2, 5, 1], (-1.0, 1.0), 5, 3);
        let net = init_network(&[2, 5, 1], &s, 4).unwrap();
        let mut ext = net.clone();
        ext.extend_grids(10).unwrap();
        assert_eq!(ext.intervals(), 10);
        assert_eq!(ext.param_count(), 15 * (13 + 2));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let d = net.forward(&x).unwrap()[0] - ext.forward(&x).unwrap()[0];
            worst = worst.max(d.abs());
        }
        assert!(worst <= 1e-6, "max change {worst}");
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let s = specs(&[2, 10, 1], (0.0, 1.0), 5, 5);
        let net = init_network(&[2, 10, 1], &s, 17).unwrap();
        let text = serde_json::to_string(&net).unwrap();
        let back: KanNetwork = serde_json::from_str(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn corrupted_checkpoint_rejected() {
        let s = specs(&[1, 2, 1], (0.0, 1.0), 3, 2);
        let net = init_network(&[1, 2, 1], &s, 0).unwrap();
        let mut v: serde_json::Value = serde_json::to_value(&net).unwrap();
        v["params"].as_array_mut().unwrap().pop();
        assert!(serde_json::from_value::<KanNetwork>(v).is_err());
    }
}
