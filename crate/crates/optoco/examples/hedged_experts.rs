//! Learning with experts on the simplex: multiplicative updates with a
//! uniform-mixing floor, optimistic about the next loss vector.
//!
//! ```bash
//! cargo run --example hedged_experts
//! ```

use optoco::environments::PredictorSpec;
use optoco::geometry::Domain;
use optoco::harness::{self, Algorithm, GeometryKind, RunConfig};

fn main() {
    println!(
        "{:>6} {:>20} {:>12} {:>12} {:>12}",
        "d", "prediction", "regret", "err total", "bound"
    );
    println!("{}", "-".repeat(68));
    for dim in [4usize, 32, 128] {
        for (name, predictor) in [
            ("zero", PredictorSpec::zero()),
            ("previous vector", PredictorSpec::previous_function()),
        ] {
            let cfg = RunConfig {
                algorithm: Algorithm::Experts,
                geometry: Some(GeometryKind::Entropic),
                domain: Domain::Simplex { dim },
                loss: optoco::environments::LossFamily::Linear,
                constraint: optoco::environments::ConstraintFamily::None,
                drift_rate: 0.08,
                predictor,
                constraint_predictor: None,
                horizon: 5000,
                doubling: false,
                eta: None,
                lambda_mode: optoco::harness::LambdaMode::Oracle,
                inner: optoco::harness::InnerKind::AdagradOmd,
                seed: 19,
                instrument: false,
                smoothness_override: None,
            };
            let out = harness::run(&cfg).expect("run");
            let row = out
                .report
                .rows
                .iter()
                .find(|r| r.check == "experts regret bound")
                .expect("bound row");
            println!(
                "{:>6} {:>20} {:>12.3} {:>12.2} {:>12.2}",
                dim, name, row.measured, out.sidecar.totals.err_f, row.bound
            );
        }
    }
    println!("\nregret vs the best fixed expert; the bound scales with sqrt(log d * err).");
}
