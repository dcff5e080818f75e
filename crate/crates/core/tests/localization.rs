//! Trainer behavior on the synthetic localization task, scaled down to five
//! samples per reference point so the suite stays quick.

use rssiloc_core::channel::{generate_dataset, reproduction_unknown_points};
use rssiloc_core::dataset::split;
use rssiloc_core::metrics::evaluate;
use rssiloc_core::optim::{train, Algorithm, StopReason, TrainConfig};
use rssiloc_core::{AnchorConfig, ChannelModel, Dataset, Deployment, GridSpec, MlpModel, SplitSpec};

fn task(seed: u64) -> (Dataset, Dataset, Dataset) {
    let grid = GridSpec::reproduction();
    let dep = Deployment::reference(&grid, AnchorConfig::Four).unwrap();
    let ch = ChannelModel { seed, ..ChannelModel::default() };
    let (pool, unknown) = generate_dataset(&dep, &ch, &grid, 5, &reproduction_unknown_points(), 5).unwrap();
    let (train, test) = split(&pool, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
    (train, test, unknown)
}

fn net(seed: u64) -> MlpModel {
    MlpModel::localization(4, &[12, 12], seed).unwrap()
}

#[test]
fn bayesian_regularization_shrinks_weights_relative_to_lm() {
    for seed in 0..5 {
        let (train_rows, _, _) = task(seed);
        let cfg = |algo| TrainConfig { max_epochs: 150, seed, validation_fraction: 0.0, ..TrainConfig::new(algo) };
        let (lm, _) = train(&net(seed), &train_rows, &cfg(Algorithm::Lm)).unwrap();
        let (br, _) = train(&net(seed), &train_rows, &cfg(Algorithm::Br)).unwrap();
        assert!(
            br.weight_energy() <= lm.weight_energy(),
            "seed {seed}: BR E_W {} vs LM E_W {}",
            br.weight_energy(),
            lm.weight_energy()
        );
    }
}

#[test]
fn scaled_conjugate_gradient_beats_plain_descent() {
    let (train_rows, _, _) = task(3);
    let cfg = |algo| TrainConfig { max_epochs: 200, seed: 3, validation_fraction: 0.0, ..TrainConfig::new(algo) };
    let (_, scg) = train(&net(3), &train_rows, &cfg(Algorithm::Scg)).unwrap();
    let (_, gd) = train(&net(3), &train_rows, &cfg(Algorithm::Gd)).unwrap();
    assert!(scg.final_train_mse <= gd.final_train_mse, "{} vs {}", scg.final_train_mse, gd.final_train_mse);
}

#[test]
fn effective_parameters_stay_below_parameter_count() {
    let (train_rows, _, _) = task(1);
    let cfg = TrainConfig { max_epochs: 100, seed: 1, ..TrainConfig::new(Algorithm::Br) };
    let model = net(1);
    let (_, report) = train(&model, &train_rows, &cfg).unwrap();
    let gamma = report.effective_parameters.expect("BR reports gamma");
    assert!(gamma > 0.0 && gamma < model.parameter_count() as f64, "gamma {gamma}");
}

#[test]
fn early_stop_returns_best_validation_model() {
    let (train_rows, _, _) = task(2);
    let cfg = TrainConfig { max_epochs: 500, seed: 2, ..TrainConfig::new(Algorithm::Lm) };
    let (_, report) = train(&net(2), &train_rows, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::EarlyStop);
    let best = report.loss_trace.iter().filter_map(|e| e.validation_mse).fold(f64::INFINITY, f64::min);
    let last = report.loss_trace.last().unwrap().validation_mse.unwrap();
    assert_eq!(report.final_validation_mse, Some(best));
    assert!(best < last);
    // The trailing epochs are exactly `patience` non-improvements.
    let tail = &report.loss_trace[report.epochs_run - cfg.patience..];
    assert!(tail.iter().all(|e| e.validation_mse.unwrap() >= best));
}

#[test]
fn bayesian_run_is_reproducible() {
    let (train_rows, test_rows, _) = task(4);
    let cfg = TrainConfig { max_epochs: 60, seed: 4, ..TrainConfig::new(Algorithm::Br) };
    let (m1, mut r1) = train(&net(4), &train_rows, &cfg).unwrap();
    let (m2, mut r2) = train(&net(4), &train_rows, &cfg).unwrap();
    assert_eq!(m1, m2);
    r1.wall_time = 0.0;
    r2.wall_time = 0.0;
    assert_eq!(r1, r2);
    assert_eq!(evaluate(&m1, &test_rows).unwrap(), evaluate(&m2, &test_rows).unwrap());
}

#[test]
fn trained_network_beats_guessing_the_room_center() {
    let (train_rows, test_rows, unknown) = task(0);
    let cfg = TrainConfig { max_epochs: 100, ..TrainConfig::new(Algorithm::Lm) };
    let (model, _) = train(&net(0), &train_rows, &cfg).unwrap();
    for rows in [&test_rows, &unknown] {
        let centre = rssiloc_core::Position::new(1.8, 2.25);
        let guess: f64 = rows.targets().iter().map(|t| t.distance(&centre)).sum::<f64>() / rows.len() as f64;
        let report = evaluate(&model, rows).unwrap();
        assert!(report.average_error < 0.6 * guess, "{} vs {guess}", report.average_error);
    }
}
