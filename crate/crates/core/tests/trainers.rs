use proptest::prelude::*;
use rssiloc_core::linalg::Matrix;
use rssiloc_core::mlp::Batch;
use rssiloc_core::optim::br::{br_epoch, br_step, effective_parameters, BrState};
use rssiloc_core::optim::lm::lm_epoch;
use rssiloc_core::optim::rprop::RpState;
use rssiloc_core::optim::*;
use rssiloc_core::{Activation, Dataset, Error, MinMax, MlpModel, Position, RssiVector, Sample};

/// Rosenbrock as least squares: r = (10·(y − x²), 1 − x), minimum at (1, 1).
struct Rosenbrock;

impl Rosenbrock {
    fn residuals(t: &[f64]) -> [f64; 2] {
        [10.0 * (t[1] - t[0] * t[0]), 1.0 - t[0]]
    }
}

impl LeastSquares for Rosenbrock {
    fn sse(&self, t: &[f64]) -> f64 {
        Self::residuals(t).iter().map(|r| r * r).sum()
    }

    fn normal_equations(&self, t: &[f64]) -> NormalEquations {
        let jac = Matrix::from_row_major(2, 2, vec![-20.0 * t[0], 10.0, -1.0, 0.0]);
        NormalEquations::from_jacobian(&jac, &Self::residuals(t))
    }
}

#[test]
fn lm_on_rosenbrock_agrees_with_long_gradient_descent() {
    let start = [-1.2, 1.0];

    // Oracle: a million small fixed steps on the same sum of squares.
    let (mut x, mut y) = (start[0], start[1]);
    for _ in 0..1_000_000 {
        let (r1, r2) = (10.0 * (y - x * x), 1.0 - x);
        let gx = 2.0 * r1 * (-20.0 * x) - 2.0 * r2;
        let gy = 2.0 * r1 * 10.0;
        x -= 5e-4 * gx;
        y -= 5e-4 * gy;
    }

    let mut theta = start.to_vec();
    let mut lambda = 1e-3;
    let params = LmParams::default();
    for _ in 0..200 {
        match lm_epoch(&Rosenbrock, &mut theta, &mut lambda, &params) {
            Ok(_) => {}
            Err(Error::LambdaOverflow) => break,
            Err(e) => panic!("{e}"),
        }
    }
    assert!((theta[0] - x).abs() < 1e-6 && (theta[1] - y).abs() < 1e-6, "LM {theta:?}, GD ({x}, {y})");
}

#[test]
fn lm_epochs_never_raise_the_sum_of_squares() {
    let mut theta = vec![-1.2, 1.0];
    let mut lambda = 1e-3;
    let mut prev = Rosenbrock.sse(&theta);
    for _ in 0..50 {
        let Ok(sse) = lm_epoch(&Rosenbrock, &mut theta, &mut lambda, &LmParams::default()) else { break };
        assert!(sse < prev);
        prev = sse;
    }
}

#[test]
fn br_with_vanishing_prior_is_an_lm_step() {
    let theta = [-1.2, 1.0];
    let ne = Rosenbrock.normal_equations(&theta);
    for lambda in [1e-3, 1.0, 100.0] {
        // BR retries from the same linearization until it accepts; so does this.
        let mut lm = lm_step(&theta, &ne, lambda, &LmParams::default(), |t| Rosenbrock.sse(t)).unwrap();
        while !lm.accepted {
            lm = lm_step(&theta, &ne, lm.lambda, &LmParams::default(), |t| Rosenbrock.sse(t)).unwrap();
        }
        let br = br_step(&theta, &ne, 1e-15, 1.0, lambda, &LmParams::default(), |t| Rosenbrock.sse(t)).unwrap();
        for (a, b) in lm.theta.iter().zip(&br.theta) {
            assert!((a - b).abs() < 1e-8, "λ = {lambda}: {a} vs {b}");
        }
        assert_eq!(lm.lambda, br.lambda);
    }
}

proptest! {
    #[test]
    fn effective_parameters_stay_in_range(
        entries in prop::collection::vec(-3.0f64..3.0, 6 * 4),
        log_alpha in -8.0f64..4.0,
        log_beta in -4.0f64..6.0,
    ) {
        let jac = Matrix::from_row_major(6, 4, entries);
        let gamma = effective_parameters(&jac.gram(), 10f64.powf(log_alpha), 10f64.powf(log_beta));
        prop_assert!((0.0..=4.0).contains(&gamma), "γ = {}", gamma);
    }

    #[test]
    fn rprop_grows_steps_on_agreeing_signs(g in prop::collection::vec(0.001f64..5.0, 1..8), flip in any::<bool>()) {
        let params = RpParams::default();
        let g: Vec<f64> = g.into_iter().map(|v| if flip { -v } else { v }).collect();
        let mut st = RpState::new(g.len(), &params);
        let mut theta = vec![0.0; g.len()];
        rp_step(&mut theta, &g, &mut st, &params);
        let before = st.step_sizes.clone();
        rp_step(&mut theta, &g, &mut st, &params);
        for (b, a) in before.iter().zip(&st.step_sizes) {
            prop_assert_eq!(*a, (b * 1.2).min(params.delta_max));
        }
    }
}

#[test]
fn rprop_leaves_zero_gradient_components_alone() {
    let params = RpParams::default();
    let mut st = RpState::new(3, &params);
    let mut theta = vec![1.0, 2.0, 3.0];
    rp_step(&mut theta, &[0.5, 0.0, -0.5], &mut st, &params);
    assert_eq!(theta[1], 2.0);
    assert!(theta[0] < 1.0 && theta[2] > 3.0);
}

#[test]
fn rprop_sign_flip_shrinks_and_skips() {
    let params = RpParams::default();
    let mut st = RpState::new(1, &params);
    let mut theta = vec![0.0];
    rp_step(&mut theta, &[1.0], &mut st, &params);
    let after_first = theta[0];
    let delta = st.step_sizes[0];
    rp_step(&mut theta, &[-1.0], &mut st, &params);
    assert_eq!(theta[0], after_first);
    assert_eq!(st.step_sizes[0], (delta * 0.5).max(params.delta_min));
}

#[test]
fn gd_steps_follow_the_closed_form() {
    let mut theta = vec![1.0, -2.0];
    gd_step(&mut theta, &[0.0, 0.0], 0.1);
    assert_eq!(theta, vec![1.0, -2.0]);
    // f = w², lr 0.4: w' = w − 0.4·2w = 0.2·w.
    let mut w = vec![5.0];
    for _ in 0..3 {
        let before = w[0];
        let g = [2.0 * before];
        gd_step(&mut w, &g, 0.4);
        assert!((w[0] - 0.2 * before).abs() < 1e-15);
    }
}

/// Rows on a ±1 factorial design in normalized space (repeated `reps`
/// times), with targets an exact affine function of the inputs.
fn linear_dataset(reps: usize) -> Dataset {
    let mut rows = Vec::new();
    for _ in 0..reps {
        for code in 0..8u32 {
            let r: Vec<f64> = (0..3).map(|b| if code >> b & 1 == 1 { -40.0 } else { -80.0 }).collect();
            let x = 0.05 * r[0] - 0.02 * r[1] + 0.01 * r[2] + 4.0;
            let y = -0.03 * r[0] + 0.04 * r[1] + 0.025 * r[2] + 2.5;
            rows.push(Sample::new(RssiVector::new(r).unwrap(), Position::new(x, y)));
        }
    }
    Dataset::new(3, rows, "linear").unwrap()
}

fn linear_model(seed: u64) -> MlpModel {
    MlpModel::new(&[3, 2], &[Activation::PureLin], seed).unwrap()
}

#[test]
fn lm_solves_linear_least_squares_in_a_few_epochs() {
    let data = linear_dataset(4);
    let cfg = TrainConfig { max_epochs: 5, ..TrainConfig::new(Algorithm::Lm) };
    let (_, report) = train(&linear_model(1), &data, &cfg).unwrap();
    assert!(report.epochs_run <= 5);
    assert!(report.final_train_mse <= 1e-16, "{report:?}");
}

#[test]
fn every_trainer_fits_the_linear_dataset_within_its_default_budget() {
    let data = linear_dataset(4);
    for algo in Algorithm::ALL {
        let (_, report) = train(&linear_model(2), &data, &TrainConfig::new(algo)).unwrap();
        assert!(report.final_train_mse <= 1e-6, "{algo}: {report:?}");
        assert_eq!(report.loss_trace.len(), report.epochs_run);
    }
}

#[test]
fn lm_train_mse_never_increases() {
    let data = linear_dataset(3);
    let model = MlpModel::localization(3, &[4], 3).unwrap();
    let cfg = TrainConfig { validation_fraction: 0.0, max_epochs: 60, ..TrainConfig::new(Algorithm::Lm) };
    let (_, report) = train(&model, &data, &cfg).unwrap();
    for w in report.loss_trace.windows(2) {
        assert!(w[1].train_mse <= w[0].train_mse);
    }
}

#[test]
fn br_accepted_steps_lower_the_regularized_objective() {
    let data = linear_dataset(3);
    let model = MlpModel::localization(3, &[5], 4).unwrap();
    let batch = Batch::new(
        3,
        2,
        data.rows().iter().flat_map(|r| r.rssi.iter().map(|v| (v + 60.0) / 20.0)).collect(),
        data.rows().iter().flat_map(|r| [r.target.x / 4.0 - 1.0, r.target.y / 4.0 - 1.0]).collect(),
    );
    let problem = MlpObjective { model: &model, batch: &batch };
    let mut theta = model.params().to_vec();
    let mut state = BrState::new(&BrParams::default());
    for _ in 0..40 {
        let Ok(step) = br_epoch(&problem, &mut theta, &mut state, &LmParams::default()) else { break };
        assert!(step.objective_after < step.objective_before);
        assert!((0.0..=model.parameter_count() as f64).contains(&step.gamma));
    }
}

#[test]
fn training_at_the_optimum_stops_immediately() {
    let mut model = linear_model(0);
    model.set_params(&[0.0; 8]).unwrap();
    let model =
        model.with_normalization(vec![MinMax::new(-100.0, 0.0).unwrap(); 3], vec![MinMax::IDENTITY; 2]).unwrap();
    let rows = (0..5)
        .map(|i| Sample::new(RssiVector::new(vec![-10.0 * i as f64, -50.0, -70.0]).unwrap(), Position::new(0.0, 0.0)))
        .collect();
    let data = Dataset::new(3, rows, "").unwrap();
    for algo in Algorithm::ALL {
        let cfg = TrainConfig { normalization: Normalization::KeepModel, ..TrainConfig::new(algo) };
        let (trained, report) = train(&model, &data, &cfg).unwrap();
        assert!(report.epochs_run <= 1);
        assert!(matches!(report.stop_reason, StopReason::GoalReached | StopReason::GradientSmall), "{algo}");
        assert_eq!(trained.params(), model.params());
    }
}

#[test]
fn one_row_interpolates_with_kept_normalization() {
    let model = MlpModel::localization(3, &[4], 11)
        .unwrap()
        .with_normalization(vec![MinMax::new(-96.0, -20.0).unwrap(); 3], vec![MinMax::new(0.0, 4.0).unwrap(); 2])
        .unwrap();
    let row = Sample::new(RssiVector::new(vec![-50.0, -61.0, -72.0]).unwrap(), Position::new(1.3, 2.9));
    let data = Dataset::new(3, vec![row.clone()], "").unwrap();
    let cfg = TrainConfig { normalization: Normalization::KeepModel, ..TrainConfig::new(Algorithm::Lm) };
    let (trained, _) = train(&model, &data, &cfg).unwrap();
    assert!(trained.forward(&row.rssi).unwrap().distance(&row.target) < 1e-9);
    // Fitting normalization to one row is undefined.
    assert!(matches!(train(&model, &data, &TrainConfig::new(Algorithm::Lm)), Err(Error::DegenerateData(_))));
}

#[test]
fn oversized_learning_rate_diverges_visibly() {
    let data = linear_dataset(4);
    let mut cfg = TrainConfig { validation_fraction: 0.0, max_epochs: 20, ..TrainConfig::new(Algorithm::Gd) };
    // Curvature of this problem is 1 in every direction; anything above 2 diverges.
    cfg.params.gd.learning_rate = 2.5;
    let (_, report) = train(&linear_model(5), &data, &cfg).unwrap();
    let trace: Vec<f64> = report.loss_trace.iter().map(|l| l.train_mse).collect();
    assert!(trace.windows(2).all(|w| w[1] > w[0]), "{trace:?}");
}

#[test]
fn input_model_is_untouched_and_shapes_are_checked() {
    let data = linear_dataset(2);
    let model = linear_model(6);
    let snapshot = model.clone();
    train(&model, &data, &TrainConfig::new(Algorithm::Rp)).unwrap();
    assert_eq!(model, snapshot);
    let wide = MlpModel::new(&[4, 2], &[Activation::PureLin], 0).unwrap();
    assert_eq!(
        train(&wide, &data, &TrainConfig::new(Algorithm::Lm)).unwrap_err(),
        Error::DimensionMismatch { expected: 4, found: 3 }
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let data = linear_dataset(1);
    let model = linear_model(0);
    for cfg in [
        TrainConfig { max_epochs: 0, ..TrainConfig::new(Algorithm::Lm) },
        TrainConfig { validation_fraction: 1.0, ..TrainConfig::new(Algorithm::Lm) },
        TrainConfig { patience: 0, ..TrainConfig::new(Algorithm::Lm) },
    ] {
        assert!(matches!(train(&model, &data, &cfg), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(Algorithm::from_name(a.name()), Some(a));
    }
    assert_eq!(Algorithm::from_name("adam"), None);
}
