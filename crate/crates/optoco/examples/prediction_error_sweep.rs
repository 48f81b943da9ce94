//! Sweep the gradient-noise scale and watch the accumulated prediction error
//! drive both the regret and its bound.
//!
//! ```bash
//! cargo run --example prediction_error_sweep
//! ```

use optoco::environments::PredictorSpec;
use optoco::geometry::Domain;
use optoco::harness::{self, Algorithm, RunConfig};

fn main() {
    let base = RunConfig {
        algorithm: Algorithm::AdagradOmd,
        geometry: None,
        domain: Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
        loss: optoco::environments::LossFamily::Quadratic,
        constraint: optoco::environments::ConstraintFamily::None,
        drift_rate: 0.05,
        predictor: PredictorSpec::noisy_perfect(0.0),
        constraint_predictor: None,
        horizon: 3000,
        doubling: false,
        eta: None,
        lambda_mode: optoco::harness::LambdaMode::Oracle,
        inner: optoco::harness::InnerKind::AdagradOmd,
        seed: 13,
        instrument: false,
        smoothness_override: None,
    };
    let values = [0.0, 0.1, 0.3, 1.0, 3.0, 10.0];
    let table = harness::sweep(&base, "noise", &values).expect("sweep");
    println!("{}", table.to_csv_string());
    println!("err_f grows like d * noise^2 * T; regret tracks its square root.");
}
