//! Composite losses, point sampling, Adam and the training loop.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::decomposition::FbkanModel;
use crate::diff::{loss_gradient, loss_value, JetValue, LossEvaluator, ModelTape};
use crate::error::{FbkanError, Result};
use crate::problems::{Face, ProblemSpec};
use crate::seeding::stream;

pub const PART_NAMES: [&str; 4] = ["ic", "bc", "r", "data"];
const IC: usize = 0;
const BC: usize = 1;
const RES: usize = 2;
const DATA: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub ic: f64,
    pub bc: f64,
    pub r: f64,
    pub data: f64,
}

impl LossWeights {
    pub fn data_only() -> Self {
        LossWeights {
            ic: 0.0,
            bc: 0.0,
            r: 0.0,
            data: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.ic, self.bc, self.r, self.data];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(FbkanError::invalid(format!("loss weights must be non-negative, got {w:?}")));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(FbkanError::invalid("at least one loss weight must be positive"));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 4] {
        [self.ic, self.bc, self.r, self.data]
    }
}

/// Number of points per loss term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleCounts {
    pub residual: usize,
    pub bc: usize,
    pub ic: usize,
    pub data: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSchedule {
    pub iterations: usize,
    /// Grid sizes; entry `i` applies from iteration `grid_iterations[i]`.
    pub grid_values: Vec<usize>,
    pub grid_iterations: Vec<usize>,
    pub lr_initial: f64,
    /// Learning-rate multiplier applied at each grid change.
    #[serde(default = "one")]
    pub lr_scale: f64,
    #[serde(default)]
    pub resample_residual: bool,
    /// Test-grid error is recorded every this many iterations and at the end.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn one() -> f64 {
    1.0
}

fn default_eval_every() -> usize {
    100
}

impl TrainSchedule {
    pub fn fixed(iterations: usize, g: usize, lr: f64) -> Self {
        TrainSchedule {
            iterations,
            grid_values: vec![g],
            grid_iterations: vec![0],
            lr_initial: lr,
            lr_scale: 1.0,
            resample_residual: false,
            eval_every: default_eval_every(),
        }
    }

    pub fn extension(iterations: usize, values: &[usize], at: &[usize], lr: f64, scale: f64) -> Self {
        TrainSchedule {
            iterations,
            grid_values: values.to_vec(),
            grid_iterations: at.to_vec(),
            lr_initial: lr,
            lr_scale: scale,
            resample_residual: false,
            eval_every: default_eval_every(),
        }
    }

    pub fn initial_grid(&self) -> usize {
        self.grid_values[0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_values.is_empty() || self.grid_values.len() != self.grid_iterations.len() {
            return Err(FbkanError::invalid(
                "grid_values and grid_iterations must be non-empty and of equal length",
            ));
        }
        if self.grid_iterations[0] != 0 {
            return Err(FbkanError::invalid("grid_iterations must start at 0"));
        }
        if self.grid_iterations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FbkanError::invalid("grid_iterations must be strictly increasing"));
        }
        if self.grid_values.windows(2).any(|w| w[1] < w[0]) || self.grid_values[0] == 0 {
            return Err(FbkanError::invalid("grid_values must be positive and nondecreasing"));
        }
        if !(self.lr_initial > 0.0 && self.lr_initial.is_finite()) {
            return Err(FbkanError::invalid("lr_initial must be positive"));
        }
        if !(self.lr_scale > 0.0 && self.lr_scale.is_finite()) {
            return Err(FbkanError::invalid("lr_scale must be positive"));
        }
        if self.eval_every == 0 {
            return Err(FbkanError::invalid("eval_every must be at least 1"));
        }
        Ok(())
    }

    /// Copy with iteration counts (and extension instants) scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        let scale = |v: usize| ((v as f64) * factor).round() as usize;
        s.iterations = scale(self.iterations);
        let mut last = None;
        let mut values = Vec::new();
        let mut at = Vec::new();
        for (&g, &t) in self.grid_values.iter().zip(&self.grid_iterations) {
            let t = scale(t);
            if last == Some(t) {
                *values.last_mut().unwrap() = g;
                continue;
            }
            last = Some(t);
            values.push(g);
            at.push(t);
        }
        s.grid_values = values;
        s.grid_iterations = at;
        s
    }
}

/// Points of one loss term with their targets, stored row-major.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetSet {
    pub dim: usize,
    pub points: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TargetSet {
    pub fn new(dim: usize) -> Self {
        TargetSet {
            dim,
            ..Default::default()
        }
    }

    pub fn from_points(points: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        TargetSet {
            dim,
            points: points.into_iter().flatten().collect(),
            targets,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    /// Collocation points; targets hold the source term.
    pub residual: TargetSet,
    pub bc: TargetSet,
    pub ic: TargetSet,
    /// Derivative targets on the initial points.
    pub ic_rate: TargetSet,
    pub data: TargetSet,
}

/// I.i.d. uniform points in a box.
pub fn sample_uniform(domain: &[(f64, f64)], n: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(FbkanError::invalid("need at least one sample point"));
    }
    if domain.is_empty() || domain.iter().any(|&(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
        return Err(FbkanError::invalid(format!("degenerate sampling box {domain:?}")));
    }
    Ok((0..n)
        .map(|_| domain.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect())
}

/// Points spread evenly over `faces` (round-robin), uniform along each face.
pub fn sample_faces(
    domain: &[(f64, f64)],
    faces: &[Face],
    n: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let face = faces[i % faces.len()];
            domain
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| if d == face.dim { face.value } else { rng.gen_range(lo..=hi) })
                .collect()
        })
        .collect()
}

/// Add i.i.d. `N(0, σ²)` noise; also returns `mean|ε| / mean|f|`.
pub fn add_noise(targets: &[f64], sigma: f64, rng: &mut impl Rng) -> Result<(Vec<f64>, f64)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(FbkanError::invalid(format!("noise level must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 || targets.is_empty() {
        return Ok((targets.to_vec(), 0.0));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| FbkanError::invalid(e.to_string()))?;
    let eps: Vec<f64> = targets.iter().map(|_| normal.sample(rng)).collect();
    let noisy = targets.iter().zip(&eps).map(|(f, e)| f + e).collect();
    let mean_eps = eps.iter().map(|e| e.abs()).sum::<f64>() / eps.len() as f64;
    let mean_f = targets.iter().map(|f| f.abs()).sum::<f64>() / targets.len() as f64;
    let rel = if mean_f > 0.0 { mean_eps / mean_f } else { f64::INFINITY };
    Ok((noisy, rel))
}

/// Collocation points with their source terms, drawn from the `residual`
/// stream of `iteration`.
pub fn residual_samples(problem: &ProblemSpec, n: usize, seed: u64, iteration: u64) -> Result<TargetSet> {
    if n == 0 || !problem.is_physics() {
        return Ok(TargetSet::new(problem.dim()));
    }
    let mut rng = stream(seed, "residual", iteration);
    let pts = sample_uniform(&problem.domain, n, &mut rng)?;
    let q = pts.iter().map(|x| problem.source(x)).collect();
    Ok(TargetSet::from_points(pts, q))
}

/// Draw all training points of a problem. Returns the set and the measured
/// mean relative noise on the data targets.
pub fn draw_samples(
    problem: &ProblemSpec,
    counts: &SampleCounts,
    seed: u64,
    noise_sigma: f64,
) -> Result<(SampleSet, f64)> {
    let dim = problem.dim();
    let mut set = SampleSet {
        residual: residual_samples(problem, counts.residual, seed, 0)?,
        bc: TargetSet::new(dim),
        ic: TargetSet::new(dim),
        ic_rate: TargetSet::new(dim),
        data: TargetSet::new(dim),
    };
    if counts.bc > 0 {
        if problem.boundary.is_empty() {
            return Err(FbkanError::invalid(format!("problem '{}' has no boundary term", problem.name)));
        }
        let pts = sample_faces(&problem.domain, &problem.boundary, counts.bc, &mut stream(seed, "bc", 0));
        let g = pts.iter().map(|x| problem.exact(x)).collect();
        set.bc = TargetSet::from_points(pts, g);
    }
    if counts.ic > 0 {
        if problem.initial.is_empty() {
            return Err(FbkanError::invalid(format!("problem '{}' has no initial term", problem.name)));
        }
        let pts = sample_faces(&problem.domain, &problem.initial, counts.ic, &mut stream(seed, "ic", 0));
        let u = pts.iter().map(|x| problem.exact(x)).collect();
        if let Some(d) = problem.initial_rate {
            let rate = pts.iter().map(|x| problem.exact_jet(x).first[d]).collect();
            set.ic_rate = TargetSet::from_points(pts.clone(), rate);
        }
        set.ic = TargetSet::from_points(pts, u);
    }
    let mut rel_noise = 0.0;
    if counts.data > 0 {
        let pts = sample_uniform(&problem.domain, counts.data, &mut stream(seed, "data", 0))?;
        let f: Vec<f64> = pts.iter().map(|x| problem.exact(x)).collect();
        let (noisy, rel) = add_noise(&f, noise_sigma, &mut stream(seed, "noise", 0))?;
        rel_noise = rel;
        set.data = TargetSet::from_points(pts, noisy);
    }
    Ok((set, rel_noise))
}

/// The weighted PINN/data loss of a problem over a sample set. Each part is
/// the mean of squared residuals over its points; the derivative initial
/// condition contributes its own mean to the initial-condition part.
pub struct PinnLoss<'a> {
    problem: &'a ProblemSpec,
    samples: &'a SampleSet,
    weights: [f64; 4],
    ends: [usize; 5],
    residual_order: usize,
    rate_dim: usize,
}

impl<'a> PinnLoss<'a> {
    pub fn new(problem: &'a ProblemSpec, samples: &'a SampleSet, weights: &LossWeights) -> Result<Self> {
        if !samples.residual.is_empty() && !problem.is_physics() {
            return Err(FbkanError::invalid("residual points given for a data-only problem"));
        }
        let lens = [
            samples.ic.len(),
            samples.ic_rate.len(),
            samples.bc.len(),
            samples.residual.len(),
            samples.data.len(),
        ];
        let mut ends = [0; 5];
        let mut acc = 0;
        for (e, l) in ends.iter_mut().zip(lens) {
            acc += l;
            *e = acc;
        }
        Ok(PinnLoss {
            problem,
            samples,
            weights: weights.as_array(),
            ends,
            residual_order: problem.operator.as_ref().map_or(0, |o| o.order()),
            rate_dim: problem.initial_rate.unwrap_or(0),
        })
    }

    fn locate(&self, i: usize) -> (usize, usize) {
        let mut start = 0;
        for (s, &end) in self.ends.iter().enumerate() {
            if i < end {
                return (s, i - start);
            }
            start = end;
        }
        unreachable!("term index out of range")
    }

    fn set(&self, s: usize) -> &TargetSet {
        match s {
            0 => &self.samples.ic,
            1 => &self.samples.ic_rate,
            2 => &self.samples.bc,
            3 => &self.samples.residual,
            _ => &self.samples.data,
        }
    }
}

impl LossEvaluator for PinnLoss<'_> {
    fn num_terms(&self) -> usize {
        self.ends[4]
    }

    fn point(&self, i: usize) -> &[f64] {
        let (s, j) = self.locate(i);
        self.set(s).point(j)
    }

    fn order(&self, i: usize) -> usize {
        match self.locate(i).0 {
            1 => 1,
            3 => self.residual_order,
            _ => 0,
        }
    }

    fn part(&self, i: usize) -> usize {
        match self.locate(i).0 {
            0 | 1 => IC,
            2 => BC,
            3 => RES,
            _ => DATA,
        }
    }

    fn part_names(&self) -> Vec<String> {
        PART_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn part_weights(&self) -> Vec<f64> {
        self.weights.to_vec()
    }

    fn scale(&self, i: usize) -> f64 {
        let (s, _) = self.locate(i);
        1.0 / self.set(s).len() as f64
    }

    fn residual(&self, i: usize, jet: &JetValue) -> (f64, JetValue) {
        let (s, j) = self.locate(i);
        let target = self.set(s).targets[j];
        let dim = jet.dim();
        match s {
            1 => {
                let mut dr = JetValue::zeros(dim);
                dr.first[self.rate_dim] = 1.0;
                (jet.first[self.rate_dim] - target, dr)
            }
            3 => {
                let op = self.problem.operator.as_ref().expect("physics problem");
                (op.apply(jet) - target, op.coefficients())
            }
            _ => (jet.value - target, JetValue::constant(1.0, dim)),
        }
    }
}

/// Loss parts in the order of [`PART_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub ic: f64,
    pub bc: f64,
    pub r: f64,
    pub data: f64,
}

impl LossParts {
    fn from_slice(p: &[f64]) -> Self {
        LossParts {
            ic: p[IC],
            bc: p[BC],
            r: p[RES],
            data: p[DATA],
        }
    }
}

/// Weighted total and unweighted parts of the loss.
pub fn compute_loss(
    model: &FbkanModel,
    samples: &SampleSet,
    weights: &LossWeights,
    problem: &ProblemSpec,
) -> Result<(f64, LossParts)> {
    let loss = PinnLoss::new(problem, samples, weights)?;
    let (total, parts) = loss_value(model, &loss, &mut ModelTape::new())?;
    Ok((total, LossParts::from_slice(&parts)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if params.len() != grad.len() || state.m.len() != params.len() {
        return Err(FbkanError::invalid(format!(
            "Adam shapes differ: params {}, grad {}, state {}",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if let Some(j) = grad.iter().position(|g| !g.is_finite()) {
        return Err(FbkanError::numerical("gradient", format!("entry {j} is {}", grad[j])));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for j in 0..params.len() {
        let g = grad[j];
        state.m[j] = ADAM_BETA1 * state.m[j] + (1.0 - ADAM_BETA1) * g;
        state.v[j] = ADAM_BETA2 * state.v[j] + (1.0 - ADAM_BETA2) * g * g;
        let mh = state.m[j] / c1;
        let vh = state.v[j] / c2;
        params[j] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
    Ok(())
}

/// `‖pred − truth‖₂ / ‖truth‖₂`.
pub fn relative_l2(prediction: &[f64], truth: &[f64]) -> Result<f64> {
    if prediction.len() != truth.len() || truth.is_empty() {
        return Err(FbkanError::invalid(format!(
            "relative error needs equal non-empty lengths, got {} and {}",
            prediction.len(),
            truth.len()
        )));
    }
    let den: f64 = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(FbkanError::invalid("truth has zero norm"));
    }
    let num: f64 = prediction
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}

/// Model values at `points`.
pub fn predict(model: &FbkanModel, points: &[Vec<f64>], tape: &mut ModelTape) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|x| tape.forward(model, x, 0, false).map(|j| j.value))
        .collect()
}

/// One row of the metric history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub lr: f64,
    pub g: usize,
    pub loss_total: f64,
    pub loss_ic: f64,
    pub loss_bc: f64,
    pub loss_r: f64,
    pub loss_data: f64,
    /// Test-grid error after this step; NaN on rows without evaluation.
    pub rel_l2: f64,
}

/// Output change caused by one grid extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionEvent {
    pub iteration: usize,
    pub from: usize,
    pub to: usize,
    pub max_abs_change: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FbkanModel,
    pub history: Vec<HistoryRow>,
    pub extensions: Vec<ExtensionEvent>,
}

/// Aborted run: the error plus the model and history as of the failure.
#[derive(Debug)]
pub struct TrainFailure {
    pub iteration: usize,
    pub error: FbkanError,
    pub snapshot: Box<FbkanModel>,
    pub history: Vec<HistoryRow>,
}

impl std::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training failed at iteration {}: {}", self.iteration, self.error)
    }
}

impl std::error::Error for TrainFailure {}

/// Everything the loop needs besides the model.
pub struct TrainSetup<'a> {
    pub problem: &'a ProblemSpec,
    pub schedule: &'a TrainSchedule,
    pub weights: &'a LossWeights,
    pub samples: SampleSet,
    pub seed: u64,
}

/// Run `schedule.iterations` Adam steps. At each scheduled grid change the
/// grids of every network are extended, the learning rate is multiplied by
/// `lr_scale` and the Adam moments restart (the parameter vector changes
/// length). `observer` sees every history row with the current model.
pub fn train(
    mut model: FbkanModel,
    setup: TrainSetup<'_>,
    observer: &mut dyn FnMut(&HistoryRow, &FbkanModel),
) -> std::result::Result<TrainOutcome, TrainFailure> {
    let TrainSetup {
        problem,
        schedule,
        weights,
        mut samples,
        seed,
    } = setup;
    let mut history = Vec::new();
    let fail = |iteration, error, model: &FbkanModel, history: &Vec<HistoryRow>| TrainFailure {
        iteration,
        error,
        snapshot: Box::new(model.clone()),
        history: history.clone(),
    };
    if let Err(e) = schedule.validate().and_then(|_| weights.validate()) {
        return Err(fail(0, e, &model, &history));
    }
    let grid = problem.test_grid();
    let truth: Vec<f64> = grid.iter().map(|x| problem.exact(x)).collect();
    let mut tape = ModelTape::new();
    let mut lr = schedule.lr_initial;
    let mut params = model.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut extensions = Vec::new();
    let mut next_event = 1;
    let n_res = samples.residual.len();

    for it in 0..schedule.iterations {
        if next_event < schedule.grid_iterations.len() && schedule.grid_iterations[next_event] == it {
            let to = schedule.grid_values[next_event];
            let from = model.intervals();
            next_event += 1;
            let before = match predict(&model, &grid, &mut tape) {
                Ok(v) => v,
                Err(e) => return Err(fail(it, e, &model, &history)),
            };
            if to != from {
                if let Err(e) = model.extend_grids(to) {
                    return Err(fail(it, e, &model, &history));
                }
            }
            let after = match predict(&model, &grid, &mut tape) {
                Ok(v) => v,
                Err(e) => return Err(fail(it, e, &model, &history)),
            };
            let change = before
                .iter()
                .zip(&after)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            extensions.push(ExtensionEvent {
                iteration: it,
                from,
                to,
                max_abs_change: change,
            });
            lr *= schedule.lr_scale;
            params = model.params_flat();
            adam = AdamState::new(params.len());
        }
        if schedule.resample_residual && it > 0 && n_res > 0 {
            match residual_samples(problem, n_res, seed, it as u64) {
                Ok(s) => samples.residual = s,
                Err(e) => return Err(fail(it, e, &model, &history)),
            }
        }
        let step = PinnLoss::new(problem, &samples, weights)
            .and_then(|loss| loss_gradient(&model, &loss, &mut tape));
        let lg = match step {
            Ok(v) => v,
            Err(e) => return Err(fail(it, e, &model, &history)),
        };
        if let Err(e) = adam_step(&mut adam, &mut params, &lg.grad.values, lr) {
            return Err(fail(it, e, &model, &history));
        }
        model
            .set_params_flat(&params)
            .expect("parameter length is fixed between grid events");
        let evaluate = (it + 1) % schedule.eval_every == 0 || it + 1 == schedule.iterations;
        let rel = if evaluate {
            match predict(&model, &grid, &mut tape).and_then(|p| relative_l2(&p, &truth)) {
                Ok(v) => v,
                Err(e) => return Err(fail(it, e, &model, &history)),
            }
        } else {
            f64::NAN
        };
        let parts = LossParts::from_slice(&lg.parts);
        let row = HistoryRow {
            iteration: it,
            lr,
            g: model.intervals(),
            loss_total: lg.total,
            loss_ic: parts.ic,
            loss_bc: parts.bc,
            loss_r: parts.r,
            loss_data: parts.data,
            rel_l2: rel,
        };
        observer(&row, &model);
        history.push(row);
    }
    Ok(TrainOutcome {
        model,
        history,
        extensions,
    })
}

/// Relative error of `model` on the problem's test grid.
pub fn test_error(model: &FbkanModel, problem: &ProblemSpec) -> Result<f64> {
    let grid = problem.test_grid();
    let truth: Vec<f64> = grid.iter().map(|x| problem.exact(x)).collect();
    let pred = predict(model, &grid, &mut ModelTape::new())?;
    relative_l2(&pred, &truth)
}
