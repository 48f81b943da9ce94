//! Shared helpers for the integration suites.
#![allow(dead_code)] // each suite uses its own subset

use optoco::environments::{ConstraintFamily, LossFamily, PredictorSpec};
use optoco::geometry::Domain;
use optoco::harness::report::ReportRow;
use optoco::harness::{Algorithm, GeometryKind, InnerKind, LambdaMode, RunConfig, RunOutput};
use optoco::omd::ProblemBounds;
use optoco::rng::Rng;

/// The workhorse environment: drifting quadratics on the unit box.
pub fn quadratic_drift_config() -> RunConfig {
    RunConfig {
        algorithm: Algorithm::AdagradOmd,
        geometry: None,
        domain: Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
        loss: LossFamily::Quadratic,
        constraint: ConstraintFamily::None,
        drift_rate: 0.05,
        predictor: PredictorSpec::previous_function(),
        constraint_predictor: None,
        horizon: 1000,
        doubling: false,
        eta: None,
        lambda_mode: LambdaMode::Oracle,
        inner: InnerKind::AdagradOmd,
        seed: 1,
        instrument: true,
        smoothness_override: None,
    }
}

pub fn report_row<'a>(out: &'a RunOutput, name: &str) -> &'a ReportRow {
    out.report
        .rows
        .iter()
        .find(|r| r.check == name)
        .unwrap_or_else(|| panic!("report row {name:?} missing:\n{}", out.report.render()))
}

/// Problem constants matching what the harness derives for a config.
pub fn bounds_for(cfg: &RunConfig) -> ProblemBounds {
    let env = cfg.environment();
    let declared = env.declared_bounds();
    let (primal_diam, bregman_radius) = match cfg.geometry_kind() {
        GeometryKind::Euclidean => {
            let d = cfg.domain.diameter(optoco::geometry::Norm::L2);
            (d, 0.5 * d * d)
        }
        GeometryKind::Entropic => {
            let d = cfg.domain.diameter(optoco::geometry::Norm::L1);
            (d, ((cfg.domain.dim() * cfg.horizon.max(2)) as f64 * std::f64::consts::E).ln())
        }
    };
    ProblemBounds {
        diameter: primal_diam,
        loss_bound: declared.loss_bound,
        constraint_bound: declared.constraint_bound,
        lipschitz_f: declared.lipschitz_f,
        lipschitz_g: declared.lipschitz_g,
        smoothness_f: cfg.predictor.smoothness(env.loss_smoothness()),
        smoothness_g: cfg.predictor.smoothness(env.constraint_smoothness()),
        bregman_radius,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn linf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Random simplex point; optionally degenerate (nearly all mass on one
/// coordinate) to stress the boundary cases.
pub fn random_simplex_point(rng: &mut Rng, dim: usize, near_boundary: bool) -> Vec<f64> {
    if near_boundary {
        let k = (rng.next_u64() as usize) % dim;
        let eps = 1e-9;
        let mut x = vec![eps / (dim - 1) as f64; dim];
        x[k] = 1.0 - eps;
        return x;
    }
    let raw: Vec<f64> = (0..dim).map(|_| -rng.next_f64().max(1e-12).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}
