//! Open-loop training runs: sample a trajectory, measure the pendulum drift
//! term, record the a priori prediction, then let the trainer take one step.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use smrls_core::{
    batch_oracle_weighted, EstimatorState, Normalizer, PartitionStore, RbfNetwork, SmrlsState,
    WeightedSample,
};

use crate::config::{ConfigError, ExperimentConfig, TrainerKind, TrajectoryKind};
use crate::plant::{pendulum_f, PendulumParams};
use crate::trajectory::{perturbed_half_length, ClosedSpline, Trajectory};

/// Spline control points are drawn from `[-SPLINE_EXTENT, SPLINE_EXTENT]²`.
pub const SPLINE_EXTENT: f64 = 0.9;

/// Length of the spiral used to probe generalization, seconds.
pub const ERGODIC_DURATION: f64 = 100.0;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trainer failed at row {row} (t = {time}): {source}")]
    Trainer {
        row: usize,
        time: f64,
        source: smrls_core::Error,
    },
    #[error("failed to set up the network: {0}")]
    Setup(smrls_core::Error),
}

/// Any of the four trainers behind one stepping interface.
#[derive(Debug, Clone)]
pub enum Trainer {
    Estimator(EstimatorState),
    Smrls(Box<SmrlsState>),
}

impl Trainer {
    pub fn new(
        cfg: &ExperimentConfig,
        net: &RbfNetwork,
        normalizer: &Normalizer,
    ) -> smrls_core::Result<Self> {
        let n = net.neurons();
        let w0 = DVector::from_element(n, cfg.w0);
        let p0 = DMatrix::identity(n, n) * cfg.p0_scale;
        Ok(match cfg.trainer {
            TrainerKind::Sgd => Trainer::Estimator(EstimatorState::sgd(cfg.eta, w0)?),
            TrainerKind::Rls => Trainer::Estimator(EstimatorState::rls(p0, w0)?),
            TrainerKind::Ffrls => Trainer::Estimator(EstimatorState::ffrls(cfg.lambda, p0, w0)?),
            TrainerKind::Smrls => Trainer::Smrls(Box::new(SmrlsState::new(
                net.clone(),
                normalizer.clone(),
                cfg.partitions_per_dim,
                p0,
                w0,
            )?)),
        })
    }

    pub fn weights(&self) -> &DVector<f64> {
        match self {
            Trainer::Estimator(e) => e.weights(),
            Trainer::Smrls(s) => s.weights(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub state: [f64; 2],
    pub normalized: [f64; 2],
    pub measurement: f64,
    pub prediction: f64,
    pub error: f64,
    /// SMRLS only.
    pub partition: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub weights: DVector<f64>,
}

/// One `summary.csv` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub metric: String,
    pub scope: String,
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Metric {
    fn new(metric: &str, scope: &str, start: f64, end: f64, value: f64) -> Self {
        Self {
            metric: metric.to_string(),
            scope: scope.to_string(),
            start,
            end,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub snapshots: Vec<Snapshot>,
    pub metrics: Vec<Metric>,
    pub final_weights: DVector<f64>,
    /// Case C only.
    pub spline: Option<ClosedSpline>,
    /// Final partition memory, SMRLS only.
    pub store: Option<PartitionStore>,
}

impl RunRecord {
    /// First metric with this name, scope and window.
    pub fn metric(&self, metric: &str, scope: &str, start: f64, end: f64) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| {
                m.metric == metric
                    && m.scope == scope
                    && (m.start - start).abs() < 1e-9
                    && (m.end - end).abs() < 1e-9
            })
            .map(|m| m.value)
    }

    pub fn snapshot(&self, t: f64) -> Option<&DVector<f64>> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() < 1e-9)
            .map(|s| &s.weights)
    }
}

/// Learned-knowledge errors `f(x) − WᵀΦ(x̄)` along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedEval {
    pub errors: Vec<f64>,
    pub rms: f64,
}

impl LearnedEval {
    /// RMS of each of `segments` contiguous, nearly equal slices.
    pub fn segment_rms(&self, segments: usize) -> Vec<f64> {
        let len = self.errors.len();
        (0..segments)
            .map(|s| {
                let lo = s * len / segments;
                let hi = (s + 1) * len / segments;
                rms(&self.errors[lo..hi])
            })
            .collect()
    }

    /// Max over min segment RMS.
    pub fn segment_spread(&self, segments: usize) -> f64 {
        let seg = self.segment_rms(segments);
        let max = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = seg.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Evaluates frozen weights on every point of `path` against `plant`.
pub fn evaluate_learned(
    weights: &DVector<f64>,
    net: &RbfNetwork,
    normalizer: &Normalizer,
    path: &[(f64, [f64; 2])],
    plant: &PendulumParams,
) -> smrls_core::Result<LearnedEval> {
    let mut phi = DVector::zeros(net.neurons());
    let mut xbar = [0.0; 2];
    let mut errors = Vec::with_capacity(path.len());
    for (_, x) in path {
        normalizer.normalize_into(x, &mut xbar)?;
        net.regressor_into(&xbar, &mut phi)?;
        errors.push(pendulum_f(*x, plant) - weights.dot(&phi));
    }
    let rms = rms(&errors);
    Ok(LearnedEval { errors, rms })
}

/// Least-squares weights over the points of `path`, with a negligible ridge
/// term. No trainer can beat this on the same path.
pub fn least_squares_fit(
    net: &RbfNetwork,
    normalizer: &Normalizer,
    path: &[(f64, [f64; 2])],
    plant: &PendulumParams,
) -> smrls_core::Result<DVector<f64>> {
    let n = net.neurons();
    let samples = path
        .iter()
        .map(|(_, x)| {
            let xbar = normalizer.normalize(x)?;
            Ok(WeightedSample::new(
                net.regressor(&xbar)?,
                pendulum_f(*x, plant),
                1.0,
            ))
        })
        .collect::<smrls_core::Result<Vec<_>>>()?;
    batch_oracle_weighted(
        &samples,
        &(DMatrix::identity(n, n) * 1e12),
        &DVector::zeros(n),
    )
}

pub fn network(cfg: &ExperimentConfig) -> smrls_core::Result<RbfNetwork> {
    RbfNetwork::grid(cfg.neurons_per_dim, cfg.dimension, cfg.width)
}

pub fn normalizer(cfg: &ExperimentConfig) -> smrls_core::Result<Normalizer> {
    Normalizer::new(cfg.bounds.to_vec())
}

pub fn trajectory(cfg: &ExperimentConfig) -> Trajectory {
    match cfg.trajectory.kind {
        TrajectoryKind::Sine => Trajectory::Sine,
        TrajectoryKind::Spiral => Trajectory::Spiral,
        TrajectoryKind::Spline => Trajectory::Spline(ClosedSpline::random(
            cfg.seed,
            cfg.trajectory.control_points,
            SPLINE_EXTENT,
            cfg.trajectory.loop_time,
        )),
    }
}

/// Plant parameters in force at time `t`.
pub fn plant_at(cfg: &ExperimentConfig, t: f64) -> PendulumParams {
    match cfg.perturbation {
        Some(p) => cfg.plant.with_half_length(perturbed_half_length(
            t,
            cfg.plant.half_length,
            p.half_length,
            p.time,
        )),
        None => cfg.plant,
    }
}

fn in_window(t: f64, start: f64, end: f64) -> bool {
    t >= start - 1e-9 && t <= end + 1e-9
}

/// Runs one configuration to completion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord, RunError> {
    cfg.validate()?;
    let net = network(cfg).map_err(RunError::Setup)?;
    let normalizer = normalizer(cfg).map_err(RunError::Setup)?;
    let mut trainer = Trainer::new(cfg, &net, &normalizer).map_err(RunError::Setup)?;
    let traj = trajectory(cfg);
    let path = traj.sample(cfg.trajectory.duration, cfg.trajectory.period);

    let mut snapshot_steps: Vec<(usize, f64)> = cfg
        .snapshots
        .iter()
        .map(|&t| ((t / cfg.trajectory.period).round() as usize, t))
        .collect();
    snapshot_steps.sort_by_key(|s| s.0);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());

    let mut rows = Vec::with_capacity(path.len());
    let mut phi = DVector::zeros(net.neurons());
    for (k, &(t, x)) in path.iter().enumerate() {
        let plant = plant_at(cfg, t);
        let y = pendulum_f(x, &plant);
        let mut xbar = [0.0; 2];
        normalizer
            .normalize_into(&x, &mut xbar)
            .map_err(RunError::Setup)?;
        let fail = |source| RunError::Trainer {
            row: k,
            time: t,
            source,
        };
        let (prediction, partition) = match &mut trainer {
            Trainer::Estimator(est) => {
                net.regressor_into(&xbar, &mut phi).map_err(fail)?;
                let prediction = est.weights().dot(&phi);
                est.step(&phi, y).map_err(fail)?;
                (prediction, None)
            }
            Trainer::Smrls(s) => {
                let outcome = s.step_normalized(&xbar, y).map_err(fail)?;
                (outcome.prediction, Some(outcome.partition))
            }
        };
        rows.push(Row {
            t,
            state: x,
            normalized: xbar,
            measurement: y,
            prediction,
            error: y - prediction,
            partition,
        });
        while next_snapshot < snapshot_steps.len() && snapshot_steps[next_snapshot].0 == k + 1 {
            snapshots.push(Snapshot {
                t: snapshot_steps[next_snapshot].1,
                weights: trainer.weights().clone(),
            });
            next_snapshot += 1;
        }
    }

    let final_weights = trainer.weights().clone();
    let metrics = summarize(
        cfg,
        &net,
        &normalizer,
        &path,
        &rows,
        &snapshots,
        &final_weights,
    )
    .map_err(RunError::Setup)?;
    Ok(RunRecord {
        config: cfg.clone(),
        rows,
        snapshots,
        metrics,
        final_weights,
        spline: match traj {
            Trajectory::Spline(s) => Some(s),
            _ => None,
        },
        store: match trainer {
            Trainer::Smrls(s) => Some(s.store().clone()),
            Trainer::Estimator(_) => None,
        },
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    net: &RbfNetwork,
    normalizer: &Normalizer,
    path: &[(f64, [f64; 2])],
    rows: &[Row],
    snapshots: &[Snapshot],
    weights: &DVector<f64>,
) -> smrls_core::Result<Vec<Metric>> {
    let duration = cfg.trajectory.duration;
    let tracking = |start: f64, end: f64| {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| in_window(r.t, start, end))
            .map(|r| r.error)
            .collect();
        rms(&errs)
    };
    let mut metrics = vec![Metric::new(
        "tracking_rms",
        "run",
        0.0,
        duration,
        tracking(0.0, duration),
    )];
    for &(a, b) in &cfg.windows {
        metrics.push(Metric::new("tracking_rms", "window", a, b, tracking(a, b)));
    }

    let final_plant = plant_at(cfg, duration);
    let learned = evaluate_learned(weights, net, normalizer, path, &final_plant)?;
    metrics.push(Metric::new(
        "learned_rms",
        "training_path",
        0.0,
        duration,
        learned.rms,
    ));
    for &(a, b) in &cfg.eval_windows {
        let errs: Vec<f64> = path
            .iter()
            .zip(&learned.errors)
            .filter(|((t, _), _)| in_window(*t, a, b))
            .map(|(_, e)| *e)
            .collect();
        metrics.push(Metric::new(
            "learned_rms",
            "training_path",
            a,
            b,
            rms(&errs),
        ));
    }
    metrics.push(Metric::new(
        "segment_spread",
        "training_path",
        0.0,
        duration,
        learned.segment_spread(cfg.segments),
    ));

    if cfg.ergodic_eval {
        let ergodic = Trajectory::Spiral.sample(ERGODIC_DURATION, cfg.trajectory.period);
        let eval = evaluate_learned(weights, net, normalizer, &ergodic, &final_plant)?;
        metrics.push(Metric::new(
            "learned_rms",
            "ergodic",
            0.0,
            ERGODIC_DURATION,
            eval.rms,
        ));
        metrics.push(Metric::new(
            "segment_spread",
            "ergodic",
            0.0,
            ERGODIC_DURATION,
            eval.segment_spread(cfg.segments),
        ));
    }

    for pair in snapshots.windows(2) {
        metrics.push(Metric::new(
            "weight_change",
            "snapshot",
            pair[0].t,
            pair[1].t,
            (&pair[1].weights - &pair[0].weights).norm(),
        ));
    }
    Ok(metrics)
}
