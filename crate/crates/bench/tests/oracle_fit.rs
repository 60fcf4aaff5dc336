//! The batch least-squares fit over a path bounds every trainer's learned
//! error on that same path from below.

use smrls_bench::config::{ExperimentConfig, ExperimentKind, TrainerKind};
use smrls_bench::experiment::{
    evaluate_learned, least_squares_fit, network, normalizer, plant_at, run_experiment, trajectory,
};

fn check(experiment: ExperimentKind) {
    let base = ExperimentConfig::defaults(experiment, TrainerKind::Sgd);
    let net = network(&base).unwrap();
    let norm = normalizer(&base).unwrap();
    let path = trajectory(&base).sample(base.trajectory.duration, base.trajectory.period);
    let plant = plant_at(&base, 0.0);
    let best = least_squares_fit(&net, &norm, &path, &plant).unwrap();
    let floor = evaluate_learned(&best, &net, &norm, &path, &plant)
        .unwrap()
        .rms;
    for trainer in [
        TrainerKind::Sgd,
        TrainerKind::Rls,
        TrainerKind::Ffrls,
        TrainerKind::Smrls,
    ] {
        let rec = run_experiment(&ExperimentConfig::defaults(experiment, trainer)).unwrap();
        let learned = evaluate_learned(&rec.final_weights, &net, &norm, &path, &plant)
            .unwrap()
            .rms;
        assert!(
            floor <= learned * (1.0 + 1e-9),
            "{trainer}: fit {floor} above trained {learned}"
        );
    }
}

#[test]
fn spiral_fit_bounds_trainers() {
    check(ExperimentKind::CaseB);
}

#[test]
fn wide_field_fit_bounds_trainers() {
    check(ExperimentKind::GlobalRbf);
}
