use std::sync::Arc;
use std::time::{Duration, Instant};

use csmbench::dataset::{generate_instance, GenerationConfig, InstanceKey, NormStats, WindowSet};
use csmbench::dataset::{split_ics, SplitCounts};
use csmbench::dynamics::ring_adjacency;
use csmbench::evaluation::{evaluate_instance, rollout, InstanceInput, RolloutConfig, RolloutEnv};
use csmbench::forecasters::{
    ExternalForecaster, ForecastError, ForecastRequest, Forecaster, Persistence, TrainingData,
};
use csmbench::par::Execution;
use ndarray::Array2;

const CLIENT: &str = env!("CARGO_BIN_EXE_reference-client");

fn command(mode: &str) -> String {
    format!("{CLIENT} --mode {mode}")
}

fn input() -> InstanceInput {
    let key = InstanceKey::new(2.0, 0.2, 4);
    let config = GenerationConfig {
        master_seed: 9,
        transient: 100,
        record: 400,
        diagnose: false,
        sali_horizon: 100,
    };
    let data = generate_instance(
        &key,
        &(0..6).collect::<Vec<_>>(),
        &config,
        Execution::Sequential,
    )
    .unwrap();
    let split = split_ics(
        6,
        SplitCounts {
            train: 4,
            val: 0,
            test: 2,
        },
        1,
    )
    .unwrap();
    InstanceInput::from_data(&data, &split).unwrap()
}

/// A fitted adapter plus a request for the first test trajectory.
fn fitted(mode: &str, timeout: Duration) -> (ExternalForecaster, ForecastRequest) {
    fitted_command(&command(mode), timeout)
}

fn fitted_command(cmd: &str, timeout: Duration) -> (ExternalForecaster, ForecastRequest) {
    let input = input();
    let params = input.key.params().unwrap();
    let stats = NormStats::fit(input.train.iter().map(|t| t.view())).unwrap();
    let train = input
        .train
        .iter()
        .map(|t| Arc::new(stats.apply(t.view()).unwrap()))
        .collect();
    let windows = WindowSet::new(train, 48, 12, 12).unwrap();
    let adjacency = Arc::new(ring_adjacency(params.n).unwrap());
    let mut model = ExternalForecaster::new(cmd, timeout);
    model
        .fit(&TrainingData {
            windows: &windows,
            params,
            stats: &stats,
            adjacency: Arc::clone(&adjacency),
        })
        .unwrap();
    let context = stats
        .apply(input.test[0].1.slice(ndarray::s![..48, ..]))
        .unwrap();
    let request = ForecastRequest {
        context,
        horizon: 12,
        params,
        adjacency,
        raw_anchor: None,
    };
    (model, request)
}

#[test]
fn echo_client_is_bit_identical_to_builtin_persistence() {
    let input = input();
    let config = RolloutConfig::with_cap(120);
    let seeds = [0, 1];
    let builtin = evaluate_instance(
        &|| Box::new(Persistence),
        &input,
        &seeds,
        &config,
        Execution::Parallel,
    )
    .unwrap();
    let external = evaluate_instance(
        &|| {
            Box::new(ExternalForecaster::new(
                command("persistence"),
                Duration::from_secs(30),
            ))
        },
        &input,
        &seeds,
        &config,
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(builtin.len(), external.len());
    for (a, b) in builtin.iter().zip(&external) {
        assert_eq!(a.rollouts, b.rollouts);
        assert_eq!(a.mean_vpt.to_bits(), b.mean_vpt.to_bits());
        assert_eq!(a.test_mse.to_bits(), b.test_mse.to_bits());
        assert_eq!((a.valid, a.n_degenerate), (b.valid, b.n_degenerate));
    }
}

#[test]
fn echo_client_returns_the_last_context_row() {
    let (model, request) = fitted("persistence", Duration::from_secs(30));
    let response = model.predict(&request).unwrap();
    let last = request.context.row(47);
    for row in response.prediction.rows() {
        assert_eq!(row, last);
    }
}

#[test]
fn predict_before_fit_is_unfitted() {
    let (_, request) = fitted("persistence", Duration::from_secs(30));
    let model = ExternalForecaster::new(command("persistence"), Duration::from_secs(30));
    assert_eq!(
        model.predict(&request).unwrap_err(),
        ForecastError::Unfitted
    );
}

#[test]
fn short_response_is_a_protocol_error_with_the_request_id() {
    let (model, request) = fitted("short", Duration::from_secs(30));
    for expected_id in 0..2 {
        match model.predict(&request).unwrap_err() {
            ForecastError::Protocol { id, message } => {
                assert_eq!(id, Some(expected_id));
                assert!(message.contains("11"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn nan_response_marks_the_rollout_degenerate() {
    let input = input();
    let config = RolloutConfig::with_cap(120);
    let rows = evaluate_instance(
        &|| {
            Box::new(ExternalForecaster::new(
                command("nan"),
                Duration::from_secs(30),
            ))
        },
        &input,
        &[0],
        &config,
        Execution::Sequential,
    )
    .unwrap();
    let r = &rows[0];
    assert!(!r.valid);
    assert_eq!(r.n_degenerate, input.test.len());
    for (_, rollout) in &r.rollouts {
        assert!(rollout
            .degenerate_reason
            .as_deref()
            .unwrap()
            .starts_with("non_finite"));
        assert_eq!(rollout.vpt, 0);
    }
}

#[test]
fn stalled_client_times_out_and_is_restarted() {
    let timeout = Duration::from_millis(300);
    let (model, request) = fitted("stall", timeout);
    for expected_id in 0..2 {
        let started = Instant::now();
        let err = model.predict(&request).unwrap_err();
        assert_eq!(
            err,
            ForecastError::Timeout {
                id: expected_id,
                after: timeout
            }
        );
        assert!(started.elapsed() < Duration::from_secs(10));
    }
}

#[test]
fn crashing_client_reports_process_exit_every_time() {
    let (model, request) = fitted("crash", Duration::from_secs(30));
    for _ in 0..2 {
        let err = model.predict(&request).unwrap_err();
        assert_eq!(err.tag(), "process_exit", "{err}");
    }
}

#[test]
fn garbage_output_is_a_protocol_error() {
    let (model, request) = fitted("garbage", Duration::from_secs(30));
    let err = model.predict(&request).unwrap_err();
    assert!(
        matches!(err, ForecastError::Protocol { id: Some(0), .. }),
        "{err}"
    );
}

#[test]
fn missing_command_fails_the_rollout_not_the_harness() {
    let (model, request) = fitted_command("/nonexistent/forecaster", Duration::from_secs(5));
    let err = model.predict(&request).unwrap_err();
    assert_eq!(err.tag(), "process_exit", "{err}");

    let input = input();
    let params = input.key.params().unwrap();
    let stats = NormStats::fit(input.train.iter().map(|t| t.view())).unwrap();
    let env = RolloutEnv {
        params,
        adjacency: Arc::new(ring_adjacency(params.n).unwrap()),
        stats: &stats,
    };
    let raw: Array2<f64> = input.test[0].1.clone();
    let r = rollout(&model, raw.view(), &env, &RolloutConfig::with_cap(24)).unwrap();
    assert!(r.is_degenerate() && !r.valid);
    assert!(r.degenerate_reason.unwrap().starts_with("process_exit"));
}
