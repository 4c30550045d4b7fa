//! Caputo fractional initial-value problems `D^α x = g(x)`, `1 < α < 2`,
//! with `x(0) = x0` and `x'(0) = v0`, integrated by the fractional
//! Adams-Bashforth-Moulton predictor-corrector (one corrector pass per step,
//! full memory).

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::check_alpha;
use crate::exprdsl::DemoSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    AlphaOutOfRange(f64),
    #[error("step {step} is too large for horizon {horizon} (need h <= T/50)")]
    StepTooLarge { step: f64, horizon: f64 },
    #[error("invalid simulation setup: {0}")]
    InvalidConfig(String),
    #[error("tail_fraction must lie in (0, 0.5], got {0}")]
    TailFraction(f64),
    #[error("trajectory tail has {0} samples; need at least 2")]
    TrajectoryTooShort(usize),
}

/// Right-hand side `g(x)` of the fractional system.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// `D^α x = λ x`, componentwise.
#[derive(Debug, Clone, Copy)]
pub struct LinearField {
    pub dim: usize,
    pub rate: f64,
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.rate * v;
        }
    }
}

/// The three-neuron demo network at fixed `(mu1, mu2)`.
#[derive(Debug, Clone)]
pub struct DemoField {
    pub system: DemoSystem,
    pub mu: [f64; 2],
}

impl VectorField for DemoField {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.system.vector_field(self.mu, x, out);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: f64,
    pub x0: Vec<f64>,
    /// Initial derivative; zero when `None`.
    pub v0: Option<Vec<f64>>,
    pub horizon: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Largest predictor-corrector discrepancy over all steps.
    pub max_step_residual: f64,
    /// Index of the first non-finite step, where integration stopped.
    pub blowup: Option<usize>,
}

impl SimConfig {
    fn validate(&self, dim: usize) -> Result<(), SimError> {
        if !check_alpha(self.alpha) {
            return Err(SimError::AlphaOutOfRange(self.alpha));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.step > self.horizon / 50.0 {
            return Err(SimError::StepTooLarge {
                step: self.step,
                horizon: self.horizon,
            });
        }
        let v0_len = self.v0.as_ref().map_or(dim, Vec::len);
        if self.x0.len() != dim || v0_len != dim {
            return Err(SimError::InvalidConfig(format!(
                "state dimension is {dim}, got x0 of length {} and v0 of length {v0_len}",
                self.x0.len()
            )));
        }
        if self.x0.iter().chain(self.v0.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(SimError::InvalidConfig("initial state is not finite".into()));
        }
        Ok(())
    }
}

pub fn integrate<F: VectorField>(field: &F, cfg: &SimConfig) -> Result<SimTrajectory, SimError> {
    let dim = field.dim();
    cfg.validate(dim)?;
    let alpha = cfg.alpha;
    let h = cfg.step;
    let steps = (cfg.horizon / h).round() as usize;
    let x0 = &cfg.x0;
    let zeros = vec![0.0; dim];
    let v0 = cfg.v0.as_deref().unwrap_or(&zeros);

    // weights depend only on the lag m = k - j
    let pow_a: Vec<f64> = (0..=steps + 1).map(|m| (m as f64).powf(alpha)).collect();
    let pow_a1: Vec<f64> = (0..=steps + 1).map(|m| (m as f64).powf(alpha + 1.0)).collect();
    let predictor_w: Vec<f64> = (0..=steps).map(|m| pow_a[m + 1] - pow_a[m]).collect();
    let corrector_w: Vec<f64> = (0..steps)
        .map(|m| pow_a1[m + 2] + pow_a1[m] - 2.0 * pow_a1[m + 1])
        .collect();
    let predictor_scale = h.powf(alpha) / gamma(alpha + 1.0);
    let corrector_scale = h.powf(alpha) / gamma(alpha + 2.0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    let mut g = vec![0.0; dim];
    field.eval(x0, &mut g);
    rhs.push(g.clone());

    let mut max_step_residual = 0.0_f64;
    let mut blowup = None;
    let mut pred = vec![0.0; dim];
    let mut corr = vec![0.0; dim];
    for k in 0..steps {
        let t = (k + 1) as f64 * h;
        let kf = k as f64;
        let first = pow_a1[k] - (kf - alpha) * pow_a[k + 1];
        for d in 0..dim {
            let taylor = x0[d] + v0[d] * t;
            let mut p = 0.0;
            let mut c = first * rhs[0][d];
            for j in 0..=k {
                p += predictor_w[k - j] * rhs[j][d];
            }
            for j in 1..=k {
                c += corrector_w[k - j] * rhs[j][d];
            }
            pred[d] = taylor + predictor_scale * p;
            corr[d] = taylor + corrector_scale * c;
        }
        field.eval(&pred, &mut g);
        let mut residual = 0.0_f64;
        for d in 0..dim {
            let x = corr[d] + corrector_scale * g[d];
            residual = residual.max((x - pred[d]).abs());
            corr[d] = x;
        }
        if corr.iter().any(|v| !v.is_finite()) {
            blowup = Some(k + 1);
            break;
        }
        max_step_residual = max_step_residual.max(residual);
        field.eval(&corr, &mut g);
        times.push(t);
        states.push(corr.clone());
        rhs.push(g.clone());
    }
    Ok(SimTrajectory {
        times,
        states,
        max_step_residual,
        blowup,
    })
}

/// Peak-to-peak range of `‖x(t)‖` over the last `tail_fraction` of the samples.
pub fn oscillation_metric(tr: &SimTrajectory, tail_fraction: f64) -> Result<f64, SimError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(SimError::TailFraction(tail_fraction));
    }
    let n = tr.states.len();
    let tail = ((n as f64) * tail_fraction).floor() as usize;
    if tail < 2 {
        return Err(SimError::TrajectoryTooShort(tail));
    }
    let (lo, hi) = tr.states[n - tail..]
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    Ok(hi - lo)
}
