//! Benchmark problems: domains, linear residual operators, boundary and
//! initial constraints, exact solutions and default hyperparameters.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diff::{JetModel, JetValue};
use crate::error::{FbkanError, Result};
use crate::training::{LossWeights, SampleCounts, TrainSchedule};

/// Closed-form fields of the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Field {
    /// `exp(sin(0.3 π x²))`
    Data1,
    /// `sin(6 π x²) sin(8 π y²)`
    Data2,
    /// `sin(4x) + sin(40x)`
    Multiscale1d,
    /// `sin(a1 π x) sin(a2 π y)`
    Helmholtz { a1: f64, a2: f64, kh: f64 },
    /// `sin(π x) cos(c π t) + 0.5 sin(4 π x) cos(4 c π t)`
    Wave { c: f64 },
    /// `(1/M) Σ_{i=1}^{M} sin(2^i π x) sin(2^i π y)`
    Laplacian { m: u32 },
}

impl Field {
    pub fn dim(&self) -> usize {
        match self {
            Field::Data1 | Field::Multiscale1d => 1,
            _ => 2,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }

    /// Analytic value, gradient and diagonal Hessian.
    pub fn jet(&self, x: &[f64]) -> JetValue {
        match *self {
            Field::Data1 => {
                let a = 0.3 * PI;
                let t = a * x[0] * x[0];
                let (s, c) = t.sin_cos();
                let e = s.exp();
                let dt = 2.0 * a * x[0];
                let ddt = 2.0 * a;
                // u = exp(sin t): u' = u cos t t', u'' = u[(cos t t')² - sin t t'² + cos t t'']
                let d1 = e * c * dt;
                let d2 = e * (c * c * dt * dt - s * dt * dt + c * ddt);
                JetValue {
                    value: e,
                    first: vec![d1],
                    second_diag: vec![d2],
                }
            }
            Field::Data2 => {
                let (ax, ay) = (6.0 * PI, 8.0 * PI);
                let (sx, cx) = (ax * x[0] * x[0]).sin_cos();
                let (sy, cy) = (ay * x[1] * x[1]).sin_cos();
                let fx = [
                    sx,
                    cx * 2.0 * ax * x[0],
                    -sx * (2.0 * ax * x[0]).powi(2) + cx * 2.0 * ax,
                ];
                let fy = [
                    sy,
                    cy * 2.0 * ay * x[1],
                    -sy * (2.0 * ay * x[1]).powi(2) + cy * 2.0 * ay,
                ];
                separable(fx, fy)
            }
            Field::Multiscale1d => {
                let x = x[0];
                JetValue {
                    value: (4.0 * x).sin() + (40.0 * x).sin(),
                    first: vec![4.0 * (4.0 * x).cos() + 40.0 * (40.0 * x).cos()],
                    second_diag: vec![-16.0 * (4.0 * x).sin() - 1600.0 * (40.0 * x).sin()],
                }
            }
            Field::Helmholtz { a1, a2, .. } => {
                separable(sine_jet(a1 * PI, x[0]), sine_jet(a2 * PI, x[1]))
            }
            Field::Wave { c } => {
                let mut out = JetValue::zeros(2);
                for (amp, n) in [(1.0, 1.0), (0.5, 4.0)] {
                    let j = separable(sine_jet(n * PI, x[0]), cosine_jet(n * c * PI, x[1]));
                    out.value += amp * j.value;
                    for d in 0..2 {
                        out.first[d] += amp * j.first[d];
                        out.second_diag[d] += amp * j.second_diag[d];
                    }
                }
                out
            }
            Field::Laplacian { m } => {
                let mut out = JetValue::zeros(2);
                let scale = 1.0 / m as f64;
                for i in 1..=m {
                    let w = 2f64.powi(i as i32) * PI;
                    let j = separable(sine_jet(w, x[0]), sine_jet(w, x[1]));
                    out.value += scale * j.value;
                    for d in 0..2 {
                        out.first[d] += scale * j.first[d];
                        out.second_diag[d] += scale * j.second_diag[d];
                    }
                }
                out
            }
        }
    }
}

fn sine_jet(w: f64, x: f64) -> [f64; 3] {
    let (s, c) = (w * x).sin_cos();
    [s, w * c, -w * w * s]
}

fn cosine_jet(w: f64, x: f64) -> [f64; 3] {
    let (s, c) = (w * x).sin_cos();
    [c, -w * s, -w * w * c]
}

fn separable(fx: [f64; 3], fy: [f64; 3]) -> JetValue {
    JetValue {
        value: fx[0] * fy[0],
        first: vec![fx[1] * fy[0], fx[0] * fy[1]],
        second_diag: vec![fx[2] * fy[0], fx[0] * fy[2]],
    }
}

/// Source terms, transcribed from their stated formulas rather than
/// derived from [`Field::jet`].
pub mod forcing {
    use std::f64::consts::PI;

    /// Right-hand side of `f'(x) = 4 cos(4x) + 40 cos(40x)`.
    pub fn multiscale_ode(x: f64) -> f64 {
        4.0 * (4.0 * x).cos() + 40.0 * (40.0 * x).cos()
    }

    /// `q(x, y)` of the Helmholtz problem.
    pub fn helmholtz(a1: f64, a2: f64, kh: f64, x: f64, y: f64) -> f64 {
        let s = (a1 * PI * x).sin() * (a2 * PI * y).sin();
        -(a1 * PI).powi(2) * s - (a2 * PI).powi(2) * s + kh * kh * s
    }

    /// `f(x, y) = (2/M) Σ (2^i π)² sin(2^i π x) sin(2^i π y)` with `-∇²u = f`.
    pub fn laplacian(m: u32, x: f64, y: f64) -> f64 {
        let mut s = 0.0;
        for i in 1..=m {
            let w = 2f64.powi(i as i32) * PI;
            s += w * w * (w * x).sin() * (w * y).sin();
        }
        2.0 / m as f64 * s
    }
}

/// Residual `r = a u + Σ b_d ∂_d u + Σ c_d ∂²_d u - q(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    pub value: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl LinearOperator {
    pub fn order(&self) -> usize {
        if self.second.iter().any(|&c| c != 0.0) {
            2
        } else if self.first.iter().any(|&c| c != 0.0) {
            1
        } else {
            0
        }
    }

    /// `L u` for the jet `u` (without the source term).
    pub fn apply(&self, jet: &JetValue) -> f64 {
        let mut r = self.value * jet.value;
        for d in 0..self.first.len() {
            r += self.first[d] * jet.first[d] + self.second[d] * jet.second_diag[d];
        }
        r
    }

    /// Sensitivity of `L u` to the jet entries.
    pub fn coefficients(&self) -> JetValue {
        JetValue {
            value: self.value,
            first: self.first.clone(),
            second_diag: self.second.clone(),
        }
    }
}

/// The part of the domain boundary where `x[dim] = value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub dim: usize,
    pub value: f64,
}

/// Default hyperparameters of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefaults {
    pub widths: Vec<usize>,
    pub degree: usize,
    pub schedule: TrainSchedule,
    pub weights: LossWeights,
    pub counts: SampleCounts,
    /// Subdomain totals per level.
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub field: Field,
    pub domain: Vec<(f64, f64)>,
    /// `None` for data-driven problems.
    pub operator: Option<LinearOperator>,
    pub boundary: Vec<Face>,
    pub initial: Vec<Face>,
    /// Input dimension whose derivative is also prescribed on `initial`.
    pub initial_rate: Option<usize>,
    pub defaults: ProblemDefaults,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn is_physics(&self) -> bool {
        self.operator.is_some()
    }

    pub fn exact(&self, x: &[f64]) -> f64 {
        self.field.value(x)
    }

    pub fn exact_jet(&self, x: &[f64]) -> JetValue {
        self.field.jet(x)
    }

    /// Source term `q(x)` of the residual.
    pub fn source(&self, x: &[f64]) -> f64 {
        match self.field {
            Field::Multiscale1d => forcing::multiscale_ode(x[0]),
            Field::Helmholtz { a1, a2, kh } => forcing::helmholtz(a1, a2, kh, x[0], x[1]),
            Field::Laplacian { m } => forcing::laplacian(m, x[0], x[1]),
            _ => 0.0,
        }
    }

    /// Residual of a jet at `x`; zero for data-driven problems.
    pub fn residual(&self, x: &[f64], jet: &JetValue) -> f64 {
        match &self.operator {
            Some(op) => op.apply(jet) - self.source(x),
            None => 0.0,
        }
    }

    /// Evaluation grid: 1000 evenly spaced points in 1D, 100 per axis in 2D.
    pub fn test_grid(&self) -> Vec<Vec<f64>> {
        match self.dim() {
            1 => linspace(self.domain[0], 1000).into_iter().map(|x| vec![x]).collect(),
            _ => {
                let xs = linspace(self.domain[0], 100);
                let ys = linspace(self.domain[1], 100);
                let mut pts = Vec::with_capacity(xs.len() * ys.len());
                for &x in &xs {
                    for &y in &ys {
                        pts.push(vec![x, y]);
                    }
                }
                pts
            }
        }
    }
}

/// Exact solution of a problem viewed as a model.
pub struct ExactModel<'a>(pub &'a ProblemSpec);

impl JetModel for ExactModel<'_> {
    fn input_dim(&self) -> usize {
        self.0.dim()
    }

    fn jet(&self, x: &[f64]) -> Result<JetValue> {
        Ok(self.0.exact_jet(x))
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn fixed(iterations: usize, g: usize, lr: f64) -> TrainSchedule {
    TrainSchedule::fixed(iterations, g, lr)
}

/// Data-driven test 1 on `[0, 8]`.
pub fn data_test_1() -> ProblemSpec {
    ProblemSpec {
        name: "data1".into(),
        field: Field::Data1,
        domain: vec![(0.0, 8.0)],
        operator: None,
        boundary: vec![],
        initial: vec![],
        initial_rate: None,
        defaults: ProblemDefaults {
            widths: vec![1, 5, 1],
            degree: 3,
            schedule: fixed(4000, 5, 0.04),
            weights: LossWeights::data_only(),
            counts: SampleCounts {
                data: 1200,
                ..SampleCounts::default()
            },
            levels: vec![4],
        },
    }
}

/// Data-driven test 2 on `[0, 1]²` (fixed-grid column).
pub fn data_test_2() -> ProblemSpec {
    ProblemSpec {
        name: "data2".into(),
        field: Field::Data2,
        domain: vec![(0.0, 1.0), (0.0, 1.0)],
        operator: None,
        boundary: vec![],
        initial: vec![],
        initial_rate: None,
        defaults: ProblemDefaults {
            widths: vec![2, 10, 1],
            degree: 3,
            schedule: fixed(2400, 5, 0.02),
            weights: LossWeights::data_only(),
            counts: SampleCounts {
                data: 10000,
                ..SampleCounts::default()
            },
            levels: vec![4],
        },
    }
}

/// `f' = 4 cos(4x) + 40 cos(40x)`, `f(0) = 0` on `[-4, 4]`.
pub fn physics_test_1() -> ProblemSpec {
    let mut schedule = TrainSchedule::extension(4000, &[5, 10, 15, 20], &[0, 1000, 2000, 3000], 0.01, 0.8);
    schedule.resample_residual = true;
    ProblemSpec {
        name: "physics1".into(),
        field: Field::Multiscale1d,
        domain: vec![(-4.0, 4.0)],
        operator: Some(LinearOperator {
            value: 0.0,
            first: vec![1.0],
            second: vec![0.0],
        }),
        boundary: vec![],
        initial: vec![Face { dim: 0, value: 0.0 }],
        initial_rate: None,
        defaults: ProblemDefaults {
            widths: vec![1, 10, 1],
            degree: 3,
            schedule,
            weights: LossWeights {
                ic: 1.0,
                bc: 0.0,
                r: 1.0 / 40.0,
                data: 0.0,
            },
            counts: SampleCounts {
                residual: 400,
                ic: 1,
                ..SampleCounts::default()
            },
            levels: vec![4],
        },
    }
}

fn square_faces(lo: f64, hi: f64) -> Vec<Face> {
    vec![
        Face { dim: 0, value: lo },
        Face { dim: 0, value: hi },
        Face { dim: 1, value: lo },
        Face { dim: 1, value: hi },
    ]
}

/// Helmholtz problem on `[-1, 1]²` with zero Dirichlet data.
pub fn physics_test_2(a1: f64, a2: f64, kh: f64) -> Result<ProblemSpec> {
    for (name, v) in [("a1", a1), ("a2", a2)] {
        if v.fract() != 0.0 || v == 0.0 {
            return Err(FbkanError::invalid(format!(
                "{name} must be a nonzero integer for zero boundary values, got {v}"
            )));
        }
    }
    if !kh.is_finite() {
        return Err(FbkanError::invalid("kh must be finite"));
    }
    let iterations = if a1.abs() >= 6.0 || a2.abs() >= 6.0 { 30000 } else { 10000 };
    Ok(ProblemSpec {
        name: "helmholtz".into(),
        field: Field::Helmholtz { a1, a2, kh },
        domain: vec![(-1.0, 1.0), (-1.0, 1.0)],
        operator: Some(LinearOperator {
            value: kh * kh,
            first: vec![0.0, 0.0],
            second: vec![1.0, 1.0],
        }),
        boundary: square_faces(-1.0, 1.0),
        initial: vec![],
        initial_rate: None,
        defaults: ProblemDefaults {
            widths: vec![2, 10, 1],
            degree: 5,
            schedule: fixed(iterations, 5, 0.005),
            weights: LossWeights {
                ic: 0.0,
                bc: 1.0,
                r: 0.01,
                data: 0.0,
            },
            counts: SampleCounts {
                residual: 800,
                bc: 400,
                ..SampleCounts::default()
            },
            levels: vec![4],
        },
    })
}

/// Wave equation `f_tt = c² f_xx` on `(x, t) ∈ [0, 1]²`.
pub fn physics_test_3(c: f64) -> Result<ProblemSpec> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(FbkanError::invalid(format!("wave speed must be positive, got {c}")));
    }
    // the deeper, slower-trained column applies from c = 2 upwards
    let (widths, lr, iterations, residual) = if c < 2.0 {
        (vec![2, 10, 1], 0.001, 60000, 1000)
    } else {
        (vec![2, 10, 10, 1], 0.0005, 120000, 1200)
    };
    Ok(ProblemSpec {
        name: "wave".into(),
        field: Field::Wave { c },
        domain: vec![(0.0, 1.0), (0.0, 1.0)],
        operator: Some(LinearOperator {
            value: 0.0,
            first: vec![0.0, 0.0],
            second: vec![-c * c, 1.0],
        }),
        boundary: vec![Face { dim: 0, value: 0.0 }, Face { dim: 0, value: 1.0 }],
        initial: vec![Face { dim: 1, value: 0.0 }],
        initial_rate: Some(1),
        defaults: ProblemDefaults {
            widths,
            degree: 5,
            schedule: fixed(iterations, 10, lr),
            weights: LossWeights {
                ic: 1.0,
                bc: 1.0,
                r: 0.01,
                data: 0.0,
            },
            counts: SampleCounts {
                residual,
                bc: 200,
                ic: 100,
                ..SampleCounts::default()
            },
            levels: vec![4],
        },
    })
}

/// Multiscale Laplacian `-∇²u = f` on `[0, 1]²` with `M` frequencies.
pub fn ml_physics_test_2(m: i64) -> Result<ProblemSpec> {
    if m < 1 {
        return Err(FbkanError::invalid(format!("M must be at least 1, got {m}")));
    }
    Ok(ProblemSpec {
        name: "ml-laplacian".into(),
        field: Field::Laplacian { m: m as u32 },
        domain: vec![(0.0, 1.0), (0.0, 1.0)],
        operator: Some(LinearOperator {
            value: 0.0,
            first: vec![0.0, 0.0],
            second: vec![-1.0, -1.0],
        }),
        boundary: square_faces(0.0, 1.0),
        initial: vec![],
        initial_rate: None,
        defaults: ProblemDefaults {
            widths: vec![2, 10, 1],
            degree: 5,
            schedule: fixed(30000, 5, 0.005),
            weights: LossWeights {
                ic: 0.0,
                bc: 1.0,
                r: 0.001,
                data: 0.0,
            },
            counts: SampleCounts {
                residual: 800,
                bc: 400,
                ..SampleCounts::default()
            },
            levels: vec![1, 4, 16],
        },
    })
}

/// Multilevel Helmholtz study: the Helmholtz problem with its own defaults.
pub fn ml_physics_test_1(a: f64, kh: f64) -> Result<ProblemSpec> {
    let mut p = physics_test_2(a, a, kh)?;
    p.name = "ml-helmholtz".into();
    p.defaults.schedule = fixed(30000, 5, 0.005);
    p.defaults.levels = vec![1, 4, 16];
    Ok(p)
}

pub const PROBLEM_NAMES: &[&str] = &[
    "data1",
    "data2",
    "physics1",
    "helmholtz",
    "wave",
    "ml-helmholtz",
    "ml-laplacian",
];

fn take_param(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

/// Look a problem up by name; `params` holds problem parameters such as
/// `a1`, `a2`, `kh`, `c`, `m` or `a`.
pub fn problem_by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<ProblemSpec> {
    let mut p = params.clone();
    let spec = match name {
        "data1" => data_test_1(),
        "data2" => data_test_2(),
        "physics1" => physics_test_1(),
        "helmholtz" => {
            let a1 = take_param(&mut p, "a1", 1.0);
            let a2 = take_param(&mut p, "a2", 4.0);
            let kh = take_param(&mut p, "kh", 1.0);
            physics_test_2(a1, a2, kh)?
        }
        "wave" => physics_test_3(take_param(&mut p, "c", 2f64.sqrt()))?,
        "ml-helmholtz" => {
            let a = take_param(&mut p, "a", 8.0);
            let kh = take_param(&mut p, "kh", 1.0);
            ml_physics_test_1(a, kh)?
        }
        "ml-laplacian" => {
            let m = take_param(&mut p, "m", 5.0);
            if m.fract() != 0.0 {
                return Err(FbkanError::invalid(format!("M must be an integer, got {m}")));
            }
            ml_physics_test_2(m as i64)?
        }
        other => {
            return Err(FbkanError::Config(format!(
                "unknown problem '{other}' (known: {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    if let Some(key) = p.keys().next() {
        return Err(FbkanError::Config(format!(
            "problem '{name}' has no parameter '{key}'"
        )));
    }
    Ok(spec)
}
