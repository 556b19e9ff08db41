//! Experiment orchestration: seeded replications, parameter sweeps,
//! learning-curve gain tracking, and CSV/JSON export.
//!
//! Each replication draws its traffic from RNG streams that depend only
//! on `(base_seed, replication)`, never on the scheme, so LRI, S-ALOHA
//! and MMPC runs under the same seed face bitwise-identical traffic
//! realizations and can be compared pairwise.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baselines::{estimate_correlation, mmpc_assign, saloha_strategy, BaselineError};
use crate::config::{ConfigError, Scheme, SimConfig};
use crate::engine::{
    run_phase, Engine, PhaseOptions, PhaseOutput, RunLength, StrategySnapshot,
};
use crate::metrics::{self, MetricError, MetricsReport};
use crate::rng::{stream_rng, Stream};
use crate::strategy::StrategyMatrix;
use crate::traffic::{
    activations_from_events, place_devices, sample_events, ActivationVector, Arena,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown sweep parameter '{0}' (lambda | mu | alpha | beta | n_devices | k_slots)")]
    UnknownParameter(String),
    #[error("gain tracking requires scheme = lri, got {0}")]
    GainNeedsLri(Scheme),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Why one replication produced no metrics.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReplicationError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("baseline setup failed: {0}")]
    Setup(String),
}

/// One replication's result; undefined metrics are carried, not fatal.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub report: Result<MetricsReport, ReplicationError>,
    /// Frame at which the learning phase stopped on purity, if it did.
    pub stopped_pure_at: Option<u64>,
}

/// Mean and 95% CI over the replications with defined metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub mean_l: f64,
    pub ci95_l: f64,
    pub mean_t: f64,
    pub ci95_t: f64,
    pub defined_replications: usize,
    pub undefined_replications: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: SimConfig,
    pub outcomes: Vec<ReplicationOutcome>,
    pub aggregate: Aggregate,
}

fn measurement_length(config: &SimConfig) -> RunLength {
    if config.mu == 0.0 {
        RunLength::Episodes(config.episodes)
    } else {
        RunLength::Frames(config.frames)
    }
}

fn learning_length(config: &SimConfig) -> RunLength {
    if config.mu == 0.0 {
        RunLength::Episodes(config.learning_episodes)
    } else {
        RunLength::Frames(config.learning_frames)
    }
}

fn place_arena(config: &SimConfig, replication: u64) -> Arena {
    let mut rng = stream_rng(config.base_seed, replication, Stream::Placement);
    place_devices(config.side, config.radius, config.n_devices, &mut rng)
}

/// Active-frame activation vectors for MMPC correlation estimation,
/// drawn from a warm-up traffic stream separate from the measured run.
fn warmup_activations(config: &SimConfig, arena: &Arena, replication: u64) -> Vec<ActivationVector> {
    let mut rng = stream_rng(config.base_seed, replication, Stream::TrafficWarmup);
    (0..config.warmup_active_frames)
        .map(|_| {
            let events = sample_events(config.lambda, arena, &mut rng);
            activations_from_events(arena, &events)
        })
        .collect()
}

fn mmpc_strategies(
    config: &SimConfig,
    arena: &Arena,
    replication: u64,
) -> Result<Vec<StrategyMatrix>, HarnessError> {
    let warmup = warmup_activations(config, arena, replication);
    let correlation = estimate_correlation(&warmup)?;
    let assignment = mmpc_assign(&correlation, config.k_slots);
    Ok(assignment
        .iter()
        .map(|&slot| StrategyMatrix::pure_on_slot(slot, config.k_slots, config.beta))
        .collect())
}

/// MMPC-style slot assignment for one replication (for export).
pub fn mmpc_assignment(config: &SimConfig, replication: u64) -> Result<Vec<usize>, HarnessError> {
    let arena = place_arena(config, replication);
    let warmup = warmup_activations(config, &arena, replication);
    let correlation = estimate_correlation(&warmup)?;
    Ok(mmpc_assign(&correlation, config.k_slots))
}

fn measure(
    config: &SimConfig,
    arena: &Arena,
    engine: &mut Engine,
    replication: u64,
) -> PhaseOutput {
    let mut traffic = stream_rng(config.base_seed, replication, Stream::TrafficMeasure);
    let mut policy = stream_rng(config.base_seed, replication, Stream::PolicyMeasure);
    run_phase(
        engine,
        arena,
        config.lambda,
        config.mu,
        measurement_length(config),
        PhaseOptions::default(),
        &mut traffic,
        &mut policy,
    )
}

/// Learns (LRI only), freezes, and measures one replication.
///
/// For LRI the learning transient runs on its own traffic/policy streams,
/// then strategies are frozen and metrics are taken over a fresh
/// measurement phase, so reported numbers reflect converged behavior.
pub fn run_replication(config: &SimConfig, replication: usize) -> ReplicationOutcome {
    let rep = replication as u64;
    let arena = place_arena(config, rep);
    let mut stopped_pure_at = None;

    let engine_result: Result<Engine, HarnessError> = match config.scheme {
        Scheme::Saloha => Ok(Engine::new(
            config.k_slots,
            config.beta,
            config.alpha,
            config.buffer_policy,
            false,
            vec![saloha_strategy(config.k_slots, config.beta); config.n_devices],
        )),
        Scheme::Mmpc => mmpc_strategies(config, &arena, rep).map(|strategies| {
            Engine::new(
                config.k_slots,
                config.beta,
                config.alpha,
                config.buffer_policy,
                false,
                strategies,
            )
        }),
        Scheme::Lri => {
            let mut engine = Engine::new(
                config.k_slots,
                config.beta,
                config.alpha,
                config.buffer_policy,
                true,
                vec![StrategyMatrix::uniform(config.k_slots, config.beta); config.n_devices],
            );
            let mut traffic = stream_rng(config.base_seed, rep, Stream::TrafficLearn);
            let mut policy = stream_rng(config.base_seed, rep, Stream::PolicyLearn);
            let options = PhaseOptions {
                purity_stop: config
                    .learning_frozen_after_purity
                    .then_some(config.purity_epsilon),
                snapshot_every: 0,
            };
            let out = run_phase(
                &mut engine,
                &arena,
                config.lambda,
                config.mu,
                learning_length(config),
                options,
                &mut traffic,
                &mut policy,
            );
            stopped_pure_at = out.stopped_pure_at;
            engine.learning = false;
            engine.reset_states();
            Ok(engine)
        }
    };

    let report = match engine_result {
        Ok(mut engine) => {
            let out = measure(config, &arena, &mut engine, rep);
            metrics::report(&out.records).map_err(ReplicationError::from)
        }
        // surfaced as an undefined replication, the batch continues
        Err(e) => Err(ReplicationError::Setup(e.to_string())),
    };

    ReplicationOutcome {
        replication,
        report,
        stopped_pure_at,
    }
}

fn aggregate(outcomes: &[ReplicationOutcome]) -> Aggregate {
    let defined: Vec<&MetricsReport> = outcomes
        .iter()
        .filter_map(|o| o.report.as_ref().ok())
        .collect();
    let n = defined.len();
    let (mean_l, ci95_l) = mean_ci(defined.iter().map(|r| r.l));
    let (mean_t, ci95_t) = mean_ci(defined.iter().map(|r| r.t));
    Aggregate {
        mean_l,
        ci95_l,
        mean_t,
        ci95_t,
        defined_replications: n,
        undefined_replications: outcomes.len() - n,
    }
}

/// Sample mean and normal-approximation 95% CI half-width.
pub fn mean_ci(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Runs `config.replications` independent replications in parallel and
/// aggregates. Results are ordered by replication index regardless of
/// completion order.
pub fn run_experiment(config: &SimConfig) -> ExperimentResult {
    let mut outcomes: Vec<ReplicationOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect();
    outcomes.sort_by_key(|o| o.replication);
    let aggregate = aggregate(&outcomes);
    ExperimentResult {
        config: config.clone(),
        outcomes,
        aggregate,
    }
}

/// Applies one sweep value to a copy of the config.
pub fn with_param(
    config: &SimConfig,
    parameter: &str,
    value: f64,
) -> Result<SimConfig, HarnessError> {
    let mut cfg = config.clone();
    match parameter {
        "lambda" => cfg.lambda = value,
        "mu" => cfg.mu = value,
        "alpha" => cfg.alpha = value,
        "beta" => cfg.beta = value as usize,
        "n_devices" => cfg.n_devices = value as usize,
        "k_slots" => cfg.k_slots = value as usize,
        other => return Err(HarnessError::UnknownParameter(other.to_string())),
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One experiment per sweep value, sharing the base seed so that runs are
/// paired across schemes and sweep points.
pub fn sweep(
    config: &SimConfig,
    parameter: &str,
    values: &[f64],
) -> Result<Vec<ExperimentResult>, HarnessError> {
    values
        .iter()
        .map(|&v| Ok(run_experiment(&with_param(config, parameter, v)?)))
        .collect()
}

/// Aggregated learning curve: mean snapshot throughput across
/// replications, normalized between the S-ALOHA level and the converged
/// LRI level.
#[derive(Debug, Clone, Serialize)]
pub struct GainCurve {
    /// Snapshot times (frames of learning; episodes when μ = 0).
    pub times: Vec<u64>,
    /// Mean frozen-evaluation throughput per snapshot.
    pub throughput: Vec<f64>,
    /// Affine-normalized gain per snapshot.
    pub gain: Vec<f64>,
    /// Uniform-strategy (S-ALOHA) throughput level.
    pub t_saloha: f64,
    /// Converged LRI throughput level.
    pub t_lri: f64,
}

fn eval_snapshot_throughput(
    config: &SimConfig,
    arena: &Arena,
    snapshot: &StrategySnapshot,
    replication: u64,
) -> Result<f64, MetricError> {
    let mut engine = Engine::new(
        config.k_slots,
        config.beta,
        config.alpha,
        config.buffer_policy,
        false,
        snapshot.strategies.clone(),
    );
    let mut traffic = stream_rng(config.base_seed, replication, Stream::GainEvalTraffic);
    let mut policy = stream_rng(config.base_seed, replication, Stream::GainEvalPolicy);
    let length = if config.mu == 0.0 {
        RunLength::Episodes(config.gain_eval_frames)
    } else {
        RunLength::Frames(config.gain_eval_frames)
    };
    let out = run_phase(
        &mut engine,
        arena,
        config.lambda,
        config.mu,
        length,
        PhaseOptions::default(),
        &mut traffic,
        &mut policy,
    );
    metrics::system_throughput(&out.records)
}

/// Tracks the LRI learning curve for one replication: snapshots every
/// `gain_window` time units of learning, each evaluated frozen over
/// identical traffic/policy streams. The time-0 snapshot is uniform and
/// therefore reproduces S-ALOHA bit for bit.
fn gain_replication(config: &SimConfig, replication: usize) -> Result<Vec<(u64, f64)>, HarnessError> {
    let rep = replication as u64;
    let arena = place_arena(config, rep);
    let mut engine = Engine::new(
        config.k_slots,
        config.beta,
        config.alpha,
        config.buffer_policy,
        true,
        vec![StrategyMatrix::uniform(config.k_slots, config.beta); config.n_devices],
    );
    let mut traffic = stream_rng(config.base_seed, rep, Stream::TrafficLearn);
    let mut policy = stream_rng(config.base_seed, rep, Stream::PolicyLearn);
    let out = run_phase(
        &mut engine,
        &arena,
        config.lambda,
        config.mu,
        learning_length(config),
        PhaseOptions {
            purity_stop: None, // fixed grid: every replication learns the full budget
            snapshot_every: config.gain_window,
        },
        &mut traffic,
        &mut policy,
    );
    let mut points = Vec::with_capacity(out.snapshots.len());
    for snapshot in &out.snapshots {
        let t = eval_snapshot_throughput(config, &arena, snapshot, rep)?;
        // keep the latest snapshot per time unit (the final snapshot can
        // land on a grid point)
        if points.last().map(|&(time, _)| time) == Some(snapshot.time) {
            points.pop();
        }
        points.push((snapshot.time, t));
    }
    Ok(points)
}

/// Runs the convergence-speed experiment: per-replication learning curves
/// averaged across `config.replications`, normalized to a gain in [0, 1].
pub fn gain_experiment(config: &SimConfig) -> Result<GainCurve, HarnessError> {
    if config.scheme != Scheme::Lri {
        return Err(HarnessError::GainNeedsLri(config.scheme));
    }
    let curves: Result<Vec<Vec<(u64, f64)>>, HarnessError> = (0..config.replications)
        .into_par_iter()
        .map(|rep| gain_replication(config, rep))
        .collect();
    let curves = curves?;
    let grid: Vec<u64> = curves[0].iter().map(|&(t, _)| t).collect();
    for curve in &curves {
        assert_eq!(
            curve.iter().map(|&(t, _)| t).collect::<Vec<_>>(),
            grid,
            "replications disagree on the snapshot grid"
        );
    }
    let throughput: Vec<f64> = (0..grid.len())
        .map(|i| curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64)
        .collect();
    let t_saloha = throughput[0];
    let t_lri = *throughput.last().expect("at least one snapshot");
    let series: Vec<(u64, f64)> = grid.iter().copied().zip(throughput.iter().copied()).collect();
    let gain = metrics::throughput_gain(&series, t_saloha, t_lri)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    Ok(GainCurve {
        times: grid,
        throughput,
        gain,
        t_saloha,
        t_lri,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigDraft;

    fn small_config() -> SimConfig {
        let mut draft = ConfigDraft::default();
        for (k, v) in [
            ("n_devices", "6"),
            ("k_slots", "4"),
            ("beta", "5"),
            ("alpha", "0.05"),
            ("lambda", "0.05"),
            ("mu", "0"),
            ("side", "10"),
            ("radius", "1.25"),
            ("scheme", "saloha"),
            ("episodes", "200"),
            ("learning_episodes", "400"),
            ("replications", "3"),
        ] {
            draft.set(k, v).unwrap();
        }
        draft.build().unwrap()
    }

    #[test]
    fn single_replication_aggregate_equals_report() {
        let mut cfg = small_config();
        cfg.replications = 1;
        let result = run_experiment(&cfg);
        let report = result.outcomes[0].report.as_ref().unwrap();
        assert_eq!(result.aggregate.mean_l, report.l);
        assert_eq!(result.aggregate.mean_t, report.t);
        assert_eq!(result.aggregate.defined_replications, 1);
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = small_config();
        let a = run_experiment(&cfg);
        let b = run_experiment(&cfg);
        for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
            let (rx, ry) = (x.report.as_ref().unwrap(), y.report.as_ref().unwrap());
            assert_eq!(rx.l, ry.l);
            assert_eq!(rx.t, ry.t);
        }
    }

    #[test]
    fn paired_traffic_across_schemes() {
        // identical activation realizations for saloha and lri under one seed
        let cfg = small_config();
        let arena_a = place_arena(&cfg, 0);
        let mut lri = cfg.clone();
        lri.scheme = Scheme::Lri;
        let arena_b = place_arena(&lri, 0);
        assert_eq!(arena_a.positions, arena_b.positions);
        let mut t1 = stream_rng(cfg.base_seed, 0, Stream::TrafficMeasure);
        let mut t2 = stream_rng(lri.base_seed, 0, Stream::TrafficMeasure);
        let e1 = sample_events(cfg.lambda, &arena_a, &mut t1);
        let e2 = sample_events(lri.lambda, &arena_b, &mut t2);
        assert_eq!(e1, e2);
    }

    #[test]
    fn sweep_empty_values() {
        let cfg = small_config();
        assert!(sweep(&cfg, "lambda", &[]).unwrap().is_empty());
    }

    #[test]
    fn sweep_unknown_parameter() {
        let cfg = small_config();
        assert!(matches!(
            sweep(&cfg, "bogus", &[1.0]),
            Err(HarnessError::UnknownParameter(_))
        ));
    }

    #[test]
    fn sweep_applies_values() {
        let cfg = small_config();
        let results = sweep(&cfg, "lambda", &[0.01, 0.04]).unwrap();
        assert_eq!(results.len(), 2);
        assert_eq!(results[0].config.lambda, 0.01);
        assert_eq!(results[1].config.lambda, 0.04);
    }

    #[test]
    fn gain_requires_lri() {
        let cfg = small_config();
        assert!(matches!(
            gain_experiment(&cfg),
            Err(HarnessError::GainNeedsLri(Scheme::Saloha))
        ));
    }

    #[test]
    fn gain_curve_endpoints() {
        let mut cfg = small_config();
        cfg.scheme = Scheme::Lri;
        cfg.replications = 2;
        cfg.learning_episodes = 300;
        cfg.gain_window = 100;
        cfg.gain_eval_frames = 300;
        let curve = gain_experiment(&cfg).unwrap();
        assert_eq!(curve.times[0], 0);
        assert_eq!(curve.gain[0], 0.0);
        assert_eq!(*curve.gain.last().unwrap(), 1.0);
        assert_eq!(curve.t_saloha, curve.throughput[0]);
    }
}
