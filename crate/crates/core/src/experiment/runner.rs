//! Seeded Monte-Carlo runner.
//!
//! Trial `i` of scenario `(K, SNR)` is seeded from `(master_seed, K, SNR, i)`
//! only, so every algorithm in a scenario faces the same channel, training
//! sequence and noise. Trials run in parallel; reductions always sum in
//! trial-index order.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Horizon};
use crate::algorithms::{run_until_stop, AlgorithmSpec, FilterState, StopCriterion, TrialTrace, Variant};
use crate::error::{Error, Result};
use crate::metrics::{average_mse, effective_snr, to_db, BerConstants, Modulation};
use crate::signal_model::{derive_seed, generate_channel, SampleStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub sparsity: usize,
    pub snr_db: f64,
}

impl Scenario {
    /// Short label, e.g. `k3_snr10db`.
    pub fn label(&self) -> String {
        if self.snr_db == f64::INFINITY {
            format!("k{}_snrinf", self.sparsity)
        } else {
            format!("k{}_snr{}db", self.sparsity, self.snr_db)
        }
    }
}

pub fn trial_seed(master_seed: u64, scenario: Scenario, trial: usize) -> u64 {
    derive_seed(
        master_seed,
        &[scenario.sparsity as u64, scenario.snr_db.to_bits(), trial as u64],
    )
}

fn effective_stop(config: &ExperimentConfig) -> StopCriterion {
    match config.horizon {
        Horizon::Tolerance => config.stop,
        // a squared difference is never negative, so only the cap ends the trial
        Horizon::Fixed => StopCriterion {
            delta_tolerance: f64::NEG_INFINITY,
            max_iterations: config.stop.max_iterations,
        },
    }
}

/// One seeded run: fresh channel and stream, trace of `|h - w(n)|^2`.
pub fn run_trial(
    config: &ExperimentConfig,
    scenario: Scenario,
    spec: &AlgorithmSpec,
    trial_seed: u64,
) -> Result<TrialTrace> {
    let channel = generate_channel(config.n_taps, scenario.sparsity, trial_seed)?;
    let stream = SampleStream::new(
        trial_seed,
        config.n_taps,
        config.noise_power(scenario.snr_db),
        config.signal_power,
    )?;
    let truth = channel.taps();
    let (_, trace) = run_until_stop(
        FilterState::new(config.n_taps)?,
        spec,
        &effective_stop(config),
        stream.samples(&channel)?,
        |state| average_mse(truth, state.weights()).expect("lengths agree"),
    )?;
    Ok(trace)
}

/// Run-averaged learning curve of one algorithm in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseCurve {
    pub algorithm: Variant,
    /// Mean of `|h - w(n)|^2` over trials, for `n = 1, 2, ...`.
    pub mean_mse: Vec<f64>,
    /// Mean realized step size.
    pub mean_step: Vec<f64>,
    /// Mean over the final 10% of the iteration axis.
    pub steady_state_mse: f64,
    /// Per-trial steady-state MSE, trial-index order.
    pub trial_steady_state: Vec<f64>,
    /// Smallest and largest step realized in any trial at any iteration.
    pub step_range: (f64, f64),
}

impl MseCurve {
    pub fn mean_mse_db(&self) -> Vec<f64> {
        self.mean_mse.iter().map(|&v| to_db(v)).collect()
    }

    /// First iteration (1-based) whose mean MSE is at most `level`.
    pub fn first_reaching(&self, level: f64) -> Option<usize> {
        self.mean_mse.iter().position(|&v| v <= level).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub curves: Vec<MseCurve>,
}

impl ScenarioResult {
    pub fn curve(&self, variant: Variant) -> Option<&MseCurve> {
        self.curves.iter().find(|c| c.algorithm == variant)
    }

    pub fn iterations(&self) -> usize {
        self.curves.first().map_or(0, |c| c.mean_mse.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub es_n0_db: f64,
    pub modulation: Modulation,
    pub algorithm: Variant,
    pub ber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSample {
    pub iteration: usize,
    pub error: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AggregateResult {
    pub scenarios: Vec<ScenarioResult>,
    pub ber: Vec<BerRow>,
    pub stepsize_trace: Vec<StepSample>,
}

impl AggregateResult {
    pub fn scenario(&self, sparsity: usize, snr_db: f64) -> Option<&ScenarioResult> {
        self.scenarios
            .iter()
            .find(|s| s.scenario.sparsity == sparsity && s.scenario.snr_db == snr_db)
    }
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2..=8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn pointwise_mean(series: &[&[f64]], len: usize) -> Vec<f64> {
    let mut column = vec![0.0; series.len()];
    (0..len)
        .map(|i| {
            for (slot, s) in column.iter_mut().zip(series) {
                // traces that stopped early hold their final value
                *slot = s.get(i).or(s.last()).copied().unwrap_or(0.0);
            }
            pairwise_sum(&column) / series.len() as f64
        })
        .collect()
}

fn steady_state(curve: &[f64], axis_len: usize) -> f64 {
    let tail = ((axis_len as f64) * 0.1).ceil().max(1.0) as usize;
    let start = axis_len.saturating_sub(tail);
    let held: Vec<f64> = (start..axis_len)
        .map(|i| curve.get(i).or(curve.last()).copied().unwrap_or(0.0))
        .collect();
    pairwise_sum(&held) / held.len() as f64
}

fn run_cell(config: &ExperimentConfig, scenario: Scenario, variant: Variant) -> Result<Vec<TrialTrace>> {
    let label = |e: Error| Error::Cell {
        cell: format!("{}/{variant}", scenario.label()),
        source: Box::new(e),
    };
    let spec = config.resolve_spec(variant, scenario.snr_db).map_err(label)?;
    (0..config.runs)
        .into_par_iter()
        .map(|trial| run_trial(config, scenario, &spec, trial_seed(config.master_seed, scenario, trial)))
        .collect::<Result<Vec<_>>>()
        .map_err(label)
}

fn aggregate(scenario: Scenario, variants: &[Variant], cells: Vec<Vec<TrialTrace>>) -> ScenarioResult {
    let axis = cells
        .iter()
        .flat_map(|traces| traces.iter().map(TrialTrace::len))
        .max()
        .unwrap_or(0);
    let curves = variants
        .iter()
        .zip(&cells)
        .map(|(&algorithm, traces)| {
            let mse: Vec<&[f64]> = traces.iter().map(|t| t.mse.as_slice()).collect();
            let steps: Vec<&[f64]> = traces.iter().map(|t| t.step.as_slice()).collect();
            let mean_mse = pointwise_mean(&mse, axis);
            MseCurve {
                algorithm,
                steady_state_mse: steady_state(&mean_mse, axis),
                trial_steady_state: mse.iter().map(|m| steady_state(m, axis)).collect(),
                mean_mse,
                mean_step: pointwise_mean(&steps, axis),
                step_range: steps
                    .iter()
                    .flat_map(|s| s.iter())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
            }
        })
        .collect();
    ScenarioResult { scenario, curves }
}

/// Runs one scenario for every configured algorithm.
pub fn run_scenario(config: &ExperimentConfig, scenario: Scenario) -> Result<ScenarioResult> {
    let cells = config
        .algorithms
        .iter()
        .map(|&v| run_cell(config, scenario, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(scenario, &config.algorithms, cells))
}

/// Maps each curve's steady-state MSE through the effective-SNR model onto
/// every modulation over the Es/N0 grid.
pub fn ber_table(config: &ExperimentConfig, scenario: &ScenarioResult) -> Result<Vec<BerRow>> {
    let consts = BerConstants::default();
    let grid = config.es_n0_grid();
    let mut rows = Vec::new();
    for &modulation in &config.modulations {
        for curve in &scenario.curves {
            let mse = curve.steady_state_mse.clamp(0.0, 1.0);
            for &es_n0_db in &grid {
                let gamma = effective_snr(es_n0_db, mse)?;
                rows.push(BerRow {
                    es_n0_db,
                    modulation,
                    algorithm: curve.algorithm,
                    ber: modulation.ber(gamma, &consts)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Every `(K, SNR)` scenario of the config, sparsity-major.
pub fn scenarios(config: &ExperimentConfig) -> Vec<Scenario> {
    config
        .sparsity_list
        .iter()
        .flat_map(|&sparsity| {
            config
                .snr_db_list
                .iter()
                .map(move |&snr_db| Scenario { sparsity, snr_db })
        })
        .collect()
}

/// Step size against a-priori error for trial 0 of `scenario`.
pub fn stepsize_samples(
    config: &ExperimentConfig,
    scenario: Scenario,
    spec: &AlgorithmSpec,
) -> Result<Vec<StepSample>> {
    let trace = run_trial(config, scenario, spec, trial_seed(config.master_seed, scenario, 0))?;
    Ok(trace
        .error
        .iter()
        .zip(&trace.step)
        .enumerate()
        .map(|(i, (&error, &step))| StepSample {
            iteration: i + 1,
            error,
            step,
        })
        .collect())
}

/// Full study: all scenarios, all algorithms, BER sweep of the configured
/// BER scenario (empty when that scenario is not part of the grid) and the
/// step-size trace of the first variable-step algorithm.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    config.validate()?;
    let results = scenarios(config)
        .into_iter()
        .map(|s| run_scenario(config, s))
        .collect::<Result<Vec<_>>>()?;

    let ber = match results
        .iter()
        .find(|r| r.scenario.sparsity == config.ber_sparsity && r.scenario.snr_db == config.ber_snr_db)
    {
        Some(r) => ber_table(config, r)?,
        None => Vec::new(),
    };

    let first = results[0].scenario;
    let variant = config
        .algorithms
        .iter()
        .copied()
        .find(|v| v.is_variable())
        .unwrap_or(config.algorithms[0]);
    let spec = config.resolve_spec(variant, first.snr_db)?;
    let stepsize_trace = stepsize_samples(config, first, &spec)?;

    Ok(AggregateResult {
        scenarios: results,
        ber,
        stepsize_trace,
    })
}

/// Step size against error for VSS-ZA-NLMS with `mu_max = 1`, the setting
/// compared against the constant ISS steps 0.5 and 1.
pub fn stepsize_demo(config: &ExperimentConfig) -> Result<AggregateResult> {
    let mut demo = config.clone();
    demo.mu_max = 1.0;
    demo.validate()?;
    let scenario = Scenario {
        sparsity: demo.sparsity_list[0],
        snr_db: demo.snr_db_list[0],
    };
    let spec = demo.resolve_spec(Variant::VssZaNlms, scenario.snr_db)?;
    Ok(AggregateResult {
        stepsize_trace: stepsize_samples(&demo, scenario, &spec)?,
        ..AggregateResult::default()
    })
}

/// Constant step sizes drawn next to the variable-step trace.
pub const ISS_REFERENCE_STEPS: [f64; 2] = [0.5, 1.0];

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_taps: 8,
            sparsity_list: vec![2],
            snr_db_list: vec![10.0],
            runs: 4,
            algorithms: vec![Variant::IssNlms, Variant::VssZaNlms],
            stop: StopCriterion {
                delta_tolerance: 1e-5,
                max_iterations: 50,
            },
            ber_sparsity: 2,
            ber_snr_db: 10.0,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_exact_inputs() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn trials_are_deterministic_and_distinct() {
        let c = small();
        let s = Scenario { sparsity: 2, snr_db: 10.0 };
        let spec = c.resolve_spec(Variant::VssZaNlms, 10.0).unwrap();
        let a = run_trial(&c, s, &spec, 42).unwrap();
        assert_eq!(a, run_trial(&c, s, &spec, 42).unwrap());
        assert_ne!(a.mse, run_trial(&c, s, &spec, 43).unwrap().mse);
        assert_eq!(a.len(), 50);
    }

    #[test]
    fn trial_seeds_differ_across_cells() {
        let s = Scenario { sparsity: 3, snr_db: 5.0 };
        let t = Scenario { sparsity: 3, snr_db: 10.0 };
        assert_ne!(trial_seed(1, s, 0), trial_seed(1, s, 1));
        assert_ne!(trial_seed(1, s, 0), trial_seed(1, t, 0));
        assert_ne!(trial_seed(1, s, 0), trial_seed(2, s, 0));
    }

    #[test]
    fn single_run_collapses_to_trial() {
        let mut c = small();
        c.runs = 1;
        let s = Scenario { sparsity: 2, snr_db: 10.0 };
        let r = run_scenario(&c, s).unwrap();
        let spec = c.resolve_spec(Variant::IssNlms, 10.0).unwrap();
        let t = run_trial(&c, s, &spec, trial_seed(c.master_seed, s, 0)).unwrap();
        assert_eq!(r.curve(Variant::IssNlms).unwrap().mean_mse, t.mse);
    }

    #[test]
    fn tolerance_mode_pads_with_final_value() {
        let mut c = small();
        c.horizon = Horizon::Tolerance;
        c.stop.delta_tolerance = 1e300;
        let r = run_scenario(&c, Scenario { sparsity: 2, snr_db: 10.0 }).unwrap();
        assert_eq!(r.iterations(), 1);
        for curve in &r.curves {
            assert_eq!(curve.mean_mse.len(), 1);
        }
    }

    #[test]
    fn steady_state_uses_last_tenth() {
        let curve: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        assert_eq!(steady_state(&curve, 20), 19.5);
        assert_eq!(steady_state(&[4.0], 1), 4.0);
        // held final value beyond the trace end
        assert_eq!(steady_state(&[1.0, 2.0], 10), 2.0);
    }

    #[test]
    fn experiment_shapes() {
        let c = small();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.scenarios.len(), 1);
        assert_eq!(r.scenarios[0].curves.len(), 2);
        assert!(r.scenarios[0].curves.iter().all(|c| c.mean_mse.len() == 50));
        assert_eq!(r.ber.len(), 19 * 4 * 2);
        assert_eq!(r.stepsize_trace.len(), 50);
        assert!(r.stepsize_trace.iter().all(|s| (0.0..2.0).contains(&s.step)));
    }

    #[test]
    fn ber_scenario_absent_gives_empty_table() {
        let mut c = small();
        c.ber_snr_db = 5.0;
        assert!(run_experiment(&c).unwrap().ber.is_empty());
    }

    #[test]
    fn failing_cell_is_labelled() {
        let mut c = small();
        c.threshold_c_by_snr = super::super::config::ThresholdBySnr::new([]);
        let err = run_scenario(&c, Scenario { sparsity: 2, snr_db: 10.0 }).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("k2_snr10db/vss-za-nlms"), "{msg}");
    }

    #[test]
    fn demo_caps_step_at_one() {
        let c = small();
        let r = stepsize_demo(&c).unwrap();
        assert_eq!(r.stepsize_trace.len(), 50);
        assert!(r.stepsize_trace.iter().all(|s| (0.0..1.0).contains(&s.step)));
    }
}
