//! Input derivatives of the model and parameter gradients of scalar losses
//! built from them.
//!
//! Input jets (value, gradient, diagonal Hessian) are propagated forward
//! through every active subdomain network; the parameter gradient is a
//! reverse sweep over the recorded jets, so derivatives of input
//! derivatives are exact.

use serde::{Deserialize, Serialize};

use crate::decomposition::{FbkanModel, PouJets};
use crate::error::{FbkanError, Result};
use crate::kan::NetTape;

/// Value, first derivatives and diagonal second derivatives at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetValue {
    pub value: f64,
    pub first: Vec<f64>,
    pub second_diag: Vec<f64>,
}

impl JetValue {
    pub fn zeros(dim: usize) -> Self {
        JetValue {
            value: 0.0,
            first: vec![0.0; dim],
            second_diag: vec![0.0; dim],
        }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        JetValue {
            value,
            ..JetValue::zeros(dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.first.iter().all(|v| v.is_finite())
            && self.second_diag.iter().all(|v| v.is_finite())
    }

    fn clear(&mut self, dim: usize) {
        self.value = 0.0;
        self.first.clear();
        self.first.resize(dim, 0.0);
        self.second_diag.clear();
        self.second_diag.resize(dim, 0.0);
    }
}

/// Anything that can report a scalar field jet at a point.
pub trait JetModel {
    fn input_dim(&self) -> usize;
    fn jet(&self, x: &[f64]) -> Result<JetValue>;
}

impl JetModel for FbkanModel {
    fn input_dim(&self) -> usize {
        FbkanModel::input_dim(self)
    }

    fn jet(&self, x: &[f64]) -> Result<JetValue> {
        eval_jet(self, x)
    }
}

/// Gradient of a scalar with respect to all parameters, laid out like
/// [`FbkanModel::params_flat`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradient {
    pub values: Vec<f64>,
}

impl ParameterGradient {
    pub fn zeros(len: usize) -> Self {
        ParameterGradient {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Reusable evaluation state for one model.
#[derive(Debug, Default)]
pub struct ModelTape {
    pou: Vec<PouJets>,
    // one pool per derivative order so that switching orders reuses buffers
    pools: [Vec<NetTape>; 3],
    active: Vec<Active>,
    offsets: Vec<usize>,
    offsets_total: usize,
    jet: JetValue,
    order: usize,
}

#[derive(Debug, Clone, Copy)]
struct Active {
    level: usize,
    slot: usize,
    network: usize,
}

impl Default for JetValue {
    fn default() -> Self {
        JetValue::zeros(0)
    }
}

impl ModelTape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evaluate the model jet at `x` up to derivative `order`, keeping what
    /// [`ModelTape::backward`] needs when `record` is set.
    pub fn forward(
        &mut self,
        model: &FbkanModel,
        x: &[f64],
        order: usize,
        record: bool,
    ) -> Result<&JetValue> {
        let dim = model.input_dim();
        if x.len() != dim {
            return Err(FbkanError::invalid(format!(
                "model expects {dim} inputs, got {}",
                x.len()
            )));
        }
        if order > 2 {
            return Err(FbkanError::invalid(format!(
                "derivative order {order} not supported (max 2)"
            )));
        }
        if model.output_dim() != 1 {
            return Err(FbkanError::invalid("jets are defined for scalar-output models"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FbkanError::invalid(format!("non-finite input {x:?}")));
        }
        self.order = order;
        let levels = model.decomposition().levels();
        self.pou.resize_with(levels.len(), PouJets::default);
        self.active.clear();
        self.jet.clear(dim);
        let scale = 1.0 / levels.len() as f64;
        let pool = &mut self.pools[order];
        let mut used = 0;
        for (l, level) in levels.iter().enumerate() {
            let pj = &mut self.pou[l];
            level.jets(x, order, pj)?;
            for a in 0..pj.len() {
                let w = pj.value(a);
                if w == 0.0 {
                    continue;
                }
                let network = model.network_index(l, pj.index(a));
                let net = &model.networks()[network];
                if pool.len() <= used {
                    pool.push(NetTape::default());
                }
                let tape = &mut pool[used];
                tape.forward(net, x, order, record);
                let k = tape.output_values()[0];
                self.jet.value += scale * w * k;
                if order >= 1 {
                    let kd = tape.output_first();
                    let wd = pj.first(a);
                    for d in 0..dim {
                        self.jet.first[d] += scale * (wd[d] * k + w * kd[d]);
                    }
                }
                if order >= 2 {
                    let kd = tape.output_first();
                    let kdd = tape.output_second();
                    let wd = pj.first(a);
                    let wdd = pj.second(a);
                    for d in 0..dim {
                        self.jet.second_diag[d] +=
                            scale * (wdd[d] * k + 2.0 * wd[d] * kd[d] + w * kdd[d]);
                    }
                }
                self.active.push(Active {
                    level: l,
                    slot: a,
                    network,
                });
                used += 1;
            }
        }
        Ok(&self.jet)
    }

    /// Add to `grad` the parameter gradient of `adj · jet` for the point of
    /// the last recorded forward pass.
    pub fn backward(&mut self, model: &FbkanModel, adj: &JetValue, grad: &mut [f64]) {
        let total = model.param_count();
        if self.offsets_total != total || self.offsets.len() != model.networks().len() {
            self.offsets = model.param_offsets();
            self.offsets_total = total;
        }
        let dim = model.input_dim();
        let order = self.order;
        let scale = 1.0 / model.level_count() as f64;
        let dd = if order >= 1 { dim } else { 0 };
        let ddd = if order >= 2 { dim } else { 0 };
        let mut kb = [0.0f64; 1];
        let mut kdb = vec![0.0; dd];
        let mut kddb = vec![0.0; ddd];
        for (n, act) in self.active.iter().enumerate() {
            let pj = &self.pou[act.level];
            let w = pj.value(act.slot);
            let wd = pj.first(act.slot);
            let wdd = pj.second(act.slot);
            let mut v = adj.value * w;
            for d in 0..dd {
                v += adj.first[d] * wd[d];
            }
            for d in 0..ddd {
                v += adj.second_diag[d] * wdd[d];
            }
            kb[0] = scale * v;
            for d in 0..dd {
                let mut t = adj.first[d] * w;
                if ddd > 0 {
                    t += 2.0 * adj.second_diag[d] * wd[d];
                }
                kdb[d] = scale * t;
            }
            for d in 0..ddd {
                kddb[d] = scale * adj.second_diag[d] * w;
            }
            let net = &model.networks()[act.network];
            let off = self.offsets[act.network];
            let g = &mut grad[off..off + net.param_count()];
            self.pools[order][n].backward(net, &kb, &kdb, &kddb, g);
        }
    }
}

/// Exact value, gradient and diagonal Hessian of the model at `x`.
pub fn eval_jet(model: &FbkanModel, x: &[f64]) -> Result<JetValue> {
    eval_jet_order(model, x, 2)
}

/// Like [`eval_jet`] but only up to derivative `order`; higher entries are 0.
pub fn eval_jet_order(model: &FbkanModel, x: &[f64], order: usize) -> Result<JetValue> {
    let mut tape = ModelTape::new();
    Ok(tape.forward(model, x, order, false)?.clone())
}

/// Central-difference jet of the model at `x`, with step `h1` for first
/// and `h2` for second derivatives.
pub fn finite_difference_jet(model: &FbkanModel, x: &[f64], h1: f64, h2: f64) -> Result<JetValue> {
    let mut tape = ModelTape::new();
    let mut f = |y: &[f64]| tape.forward(model, y, 0, false).map(|j| j.value);
    let dim = x.len();
    let mut out = JetValue::zeros(dim);
    out.value = f(x)?;
    let mut y = x.to_vec();
    for d in 0..dim {
        y[d] = x[d] + h1;
        let p1 = f(&y)?;
        y[d] = x[d] - h1;
        let m1 = f(&y)?;
        y[d] = x[d] + h2;
        let p2 = f(&y)?;
        y[d] = x[d] - h2;
        let m2 = f(&y)?;
        y[d] = x[d];
        out.first[d] = (p1 - m1) / (2.0 * h1);
        out.second_diag[d] = (p2 - 2.0 * out.value + m2) / (h2 * h2);
    }
    Ok(out)
}

/// Relative mismatch of first and second derivative vectors:
/// `max_d |a_d - b_d| / max(max_d |b_d|, 1e-8)`.
pub fn jet_mismatch(a: &JetValue, b: &JetValue) -> (f64, f64) {
    let rel = |x: &[f64], y: &[f64]| {
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / scale
    };
    (rel(&a.first, &b.first), rel(&a.second_diag, &b.second_diag))
}

/// A scalar loss `Σ_i scale_i · r_i²` whose residuals `r_i` depend on the
/// model jet at point `i`, grouped into named parts.
pub trait LossEvaluator {
    fn num_terms(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    /// Highest input derivative that term `i` reads.
    fn order(&self, i: usize) -> usize;
    fn part(&self, i: usize) -> usize;
    fn part_names(&self) -> Vec<String>;
    /// Multiplier applied to each part in the total.
    fn part_weights(&self) -> Vec<f64>;
    /// Factor on `r_i²` inside its part (usually one over the set size).
    fn scale(&self, i: usize) -> f64;
    /// Residual `r_i` and its derivative with respect to the jet entries.
    fn residual(&self, i: usize, jet: &JetValue) -> (f64, JetValue);
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub total: f64,
    pub parts: Vec<f64>,
    pub grad: ParameterGradient,
}

fn check_term(loss: &dyn LossEvaluator, i: usize, r: f64, jet: &JetValue) -> Result<()> {
    if r.is_finite() && jet.is_finite() {
        return Ok(());
    }
    let names = loss.part_names();
    let name = names
        .get(loss.part(i))
        .cloned()
        .unwrap_or_else(|| "loss".into());
    Err(FbkanError::numerical(
        format!("{name}[{i}]"),
        format!("non-finite residual {r} at {:?}", loss.point(i)),
    ))
}

/// Loss value only, per part and weighted total.
pub fn loss_value(
    model: &FbkanModel,
    loss: &dyn LossEvaluator,
    tape: &mut ModelTape,
) -> Result<(f64, Vec<f64>)> {
    let mut parts = vec![0.0; loss.part_names().len()];
    for i in 0..loss.num_terms() {
        let jet = tape.forward(model, loss.point(i), loss.order(i), false)?;
        let (r, _) = loss.residual(i, jet);
        check_term(loss, i, r, jet)?;
        parts[loss.part(i)] += loss.scale(i) * r * r;
    }
    let total = parts.iter().zip(loss.part_weights()).map(|(p, w)| p * w).sum();
    Ok((total, parts))
}

/// Loss and its exact gradient with respect to every model parameter.
/// Terms are accumulated in index order, so results are reproducible.
pub fn loss_gradient(
    model: &FbkanModel,
    loss: &dyn LossEvaluator,
    tape: &mut ModelTape,
) -> Result<LossGradient> {
    let weights = loss.part_weights();
    let mut parts = vec![0.0; weights.len()];
    let mut grad = ParameterGradient::zeros(model.param_count());
    for i in 0..loss.num_terms() {
        let part = loss.part(i);
        let jet = tape.forward(model, loss.point(i), loss.order(i), true)?;
        let (r, mut dr) = loss.residual(i, jet);
        check_term(loss, i, r, jet)?;
        let s = loss.scale(i);
        parts[part] += s * r * r;
        let f = 2.0 * weights[part] * s * r;
        if f == 0.0 {
            continue;
        }
        dr.value *= f;
        dr.first.iter_mut().for_each(|v| *v *= f);
        dr.second_diag.iter_mut().for_each(|v| *v *= f);
        tape.backward(model, &dr, &mut grad.values);
    }
    let total: f64 = parts.iter().zip(&weights).map(|(p, w)| p * w).sum();
    if !total.is_finite() {
        return Err(FbkanError::numerical("total", format!("loss is {total}")));
    }
    if let Some(j) = grad.values.iter().position(|v| !v.is_finite()) {
        return Err(FbkanError::numerical(
            "gradient",
            format!("non-finite gradient entry {j}"),
        ));
    }
    Ok(LossGradient { total, parts, grad })
}
