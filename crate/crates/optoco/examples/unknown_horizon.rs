//! Unknown-horizon mode: restart epochs of doubling length, recalibrating
//! the multiplier from the previous epoch's measured violation errors.
//!
//! ```bash
//! cargo run --example unknown_horizon
//! ```

use optoco::environments::{ConstraintFamily, PredictorSpec};
use optoco::geometry::Domain;
use optoco::harness::{self, Algorithm, LambdaMode, RunConfig};

fn main() {
    let cfg = RunConfig {
        algorithm: Algorithm::Coco,
        geometry: None,
        domain: Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
        loss: optoco::environments::LossFamily::Quadratic,
        constraint: ConstraintFamily::FixedHalfspace,
        drift_rate: 0.05,
        predictor: PredictorSpec::previous_function(),
        constraint_predictor: None,
        horizon: 4000,
        doubling: true,
        eta: None,
        lambda_mode: LambdaMode::Doubling,
        inner: optoco::harness::InnerKind::AdagradOmd,
        seed: 4,
        instrument: true,
        smoothness_override: None,
    };
    let out = harness::run(&cfg).expect("run");
    let epochs = out.sidecar.epochs.as_ref().expect("doubling epochs");

    println!(
        "{:>6} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "epoch", "len", "lambda", "ccv", "final q", "viol err"
    );
    println!("{}", "-".repeat(68));
    for (k, e) in epochs.iter().enumerate() {
        println!(
            "{:>6} {:>8} {:>12.5} {:>12.4} {:>12.4} {:>12.4}",
            k + 1,
            e.len,
            e.lambda,
            e.ccv,
            e.final_q,
            e.err_g
        );
    }
    let total: f64 = epochs.iter().map(|e| e.ccv).sum();
    println!("\naggregate ccv = {total:.4} (sum of per-epoch values by construction)");
    println!("total regret  = {:.4}", out.sidecar.totals.regret);
    println!("\nreport:\n{}", out.report.render());
}
