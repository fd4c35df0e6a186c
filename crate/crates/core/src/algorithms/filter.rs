use serde::{Deserialize, Serialize};

use super::penalty::sign;
use super::vss::{vss_step_size, vss_update_projection};
use super::{AlgorithmSpec, Penalty, StepPolicy, Variant};
use crate::error::{check_len, Error, Result};

/// Regressors with `x^T x` below this are skipped entirely.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// Running state of one estimator. Starts at `w = 0`, `p = 0`, step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    weights: Vec<f64>,
    projection: Vec<f64>,
    current_step: f64,
    iteration: usize,
}

impl FilterState {
    pub fn new(n_taps: usize) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::config("filter needs at least one tap"));
        }
        Ok(Self {
            weights: vec![0.0; n_taps],
            projection: vec![0.0; n_taps],
            current_step: 0.0,
            iteration: 0,
        })
    }

    /// State with given weights and a zero projection vector.
    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        let mut state = Self::new(weights.len())?;
        state.weights = weights;
        Ok(state)
    }

    pub fn n_taps(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    /// Step used by the most recent update (0 before the first one).
    pub fn current_step(&self) -> f64 {
        self.current_step
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Applies one update in place.
    pub fn advance(&mut self, spec: &AlgorithmSpec, regressor: &[f64], observation: f64) -> Result<StepOutcome> {
        let error = compute_error(self, regressor, observation)?;
        let energy: f64 = regressor.iter().map(|x| x * x).sum();
        self.iteration += 1;
        if energy < ENERGY_FLOOR {
            return Ok(StepOutcome {
                error,
                step: self.current_step,
                delta_sq: 0.0,
                skipped: true,
            });
        }

        let mu = match spec.variant.step_policy() {
            StepPolicy::Invariable => spec.mu,
            StepPolicy::Variable => {
                self.projection = vss_update_projection(&self.projection, regressor, error, spec.beta);
                vss_step_size(&self.projection, spec.mu_max, spec.threshold_c)
            }
        };
        self.current_step = mu;

        let gain = if spec.variant == Variant::IssRzaNlms && spec.unnormalized_rza {
            mu * error
        } else {
            mu * error / energy
        };
        let penalty = spec.variant.penalty();
        let mut delta_sq = 0.0;
        for (w, &x) in self.weights.iter_mut().zip(regressor) {
            let attract = match penalty {
                Penalty::None => 0.0,
                Penalty::ZeroAttracting => spec.rho_za * sign(*w),
                Penalty::Reweighted => spec.rho_rza * sign(*w) / (1.0 + spec.eps_rza * w.abs()),
            };
            let next = *w + gain * x - attract;
            delta_sq += (next - *w) * (next - *w);
            *w = next;
        }

        Ok(StepOutcome {
            error,
            step: mu,
            delta_sq,
            skipped: false,
        })
    }
}

/// What a single update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// A-priori error `y - w(n)^T x`.
    pub error: f64,
    /// Step size applied (carried over unchanged when skipped).
    pub step: f64,
    /// `|w(n+1) - w(n)|^2`, penalty included.
    pub delta_sq: f64,
    /// True when the regressor fell below [`ENERGY_FLOOR`].
    pub skipped: bool,
}

/// `observation - w^T x`.
pub fn compute_error(state: &FilterState, regressor: &[f64], observation: f64) -> Result<f64> {
    check_len(state.n_taps(), regressor.len())?;
    let predicted: f64 = state.weights.iter().zip(regressor).map(|(w, x)| w * x).sum();
    Ok(observation - predicted)
}

/// Pure form of [`FilterState::advance`]: returns the next state and `e(n)`.
pub fn step(state: &FilterState, spec: &AlgorithmSpec, regressor: &[f64], observation: f64) -> Result<(FilterState, f64)> {
    let mut next = state.clone();
    let outcome = next.advance(spec, regressor, observation)?;
    Ok((next, outcome.error))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCriterion {
    pub delta_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StopCriterion {
    fn default() -> Self {
        Self {
            delta_tolerance: 1e-5,
            max_iterations: 5000,
        }
    }
}

impl StopCriterion {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_tolerance > 0.0) {
            return Err(Error::config("stop.delta_tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("stop.max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
}

/// Per-iteration record of one run. All vectors have the same length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialTrace {
    pub error: Vec<f64>,
    pub step: Vec<f64>,
    /// Whatever the caller's hook measured after each update, usually
    /// `|h - w(n+1)|^2`.
    pub mse: Vec<f64>,
    pub stop: Option<StopReason>,
}

impl TrialTrace {
    pub fn len(&self) -> usize {
        self.mse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mse.is_empty()
    }
}

/// Iterates until `|w(n+1) - w(n)|^2 <= delta_tolerance` or `max_iterations`
/// updates have been applied. Skipped (zero-energy) iterations never satisfy
/// the tolerance test.
pub fn run_until_stop<S, R, F>(
    initial: FilterState,
    spec: &AlgorithmSpec,
    stop: &StopCriterion,
    stream: S,
    mut mse_hook: F,
) -> Result<(FilterState, TrialTrace)>
where
    S: IntoIterator<Item = (R, f64)>,
    R: AsRef<[f64]>,
    F: FnMut(&FilterState) -> f64,
{
    let mut state = initial;
    let mut trace = TrialTrace::default();
    let mut samples = stream.into_iter();
    let mut done = 0;
    loop {
        if done >= stop.max_iterations {
            trace.stop = Some(StopReason::MaxIterations);
            break;
        }
        let (regressor, observation) = samples
            .next()
            .ok_or(Error::StreamExhausted { consumed: done })?;
        let outcome = state.advance(spec, regressor.as_ref(), observation)?;
        done += 1;
        trace.error.push(outcome.error);
        trace.step.push(outcome.step);
        trace.mse.push(mse_hook(&state));
        if !outcome.skipped && outcome.delta_sq <= stop.delta_tolerance {
            trace.stop = Some(StopReason::Tolerance);
            break;
        }
    }
    Ok((state, trace))
}
