//! Optimistic online mirror descent.
//!
//! Round lifecycle (one call to [`OmdState::round`] per round `t`):
//!
//! 1. play `x_t`, observe the loss, compute its gradient at `x_t`;
//! 2. score the prediction that produced `x_t`:
//!    `eps_t = |grad f_t(x_t) - pred_t(x_t)|_dual^2`;
//! 3. compute the next step size `eta_{t+1}`;
//! 4. mirror step on the true gradient: `anchor_{t+1}` from `anchor_t`
//!    with step `eta_t`;
//! 5. optimistic mirror step on the new prediction, evaluated at the new
//!    anchor, with step `eta_{t+1}`, producing `x_{t+1}`.
//!
//! The adaptive schedule is
//! `eta_t = min( sqrt(beta B) / (sqrt(E_{t-1}) + sqrt(E_{t-2})), sqrt(beta) / L_t )`
//! where `E_t` is the running prediction-error sum and `L_t` the running
//! maximum of declared gradient-Lipschitz constants (predictions included, so
//! the step cap already accounts for the upcoming round's declared scale).
//! An empty error history makes the first argument infinite and the cap wins.

use thiserror::Error;

use crate::function::{FirstOrderOracle, ZeroFunction};
use crate::geometry::{self, BregmanGeometry, Domain, GeometryError};
use crate::vecops;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("oracle returned a non-finite {what} at round {round}")]
    NonFiniteOracle { round: usize, what: &'static str },
    #[error("invalid problem bounds: {reason}")]
    BadBounds { reason: String },
    #[error("initial point lies outside the domain")]
    BadInitialPoint,
    #[error("round {round} is not in the instrumented history (len {len})")]
    NoSuchRound { round: usize, len: usize },
    #[error("instrumentation is disabled for this learner")]
    NotInstrumented,
    #[error("expert count must be at least 2, got {dim}")]
    TooFewExperts { dim: usize },
    #[error("mixing weight must lie in (0, 1), got {delta}")]
    BadMixingWeight { delta: f64 },
    #[error("expected a vector of length {expected}, got {got}")]
    BadVectorLength { expected: usize, got: usize },
}

/// Cumulative squared prediction-error bookkeeping with the two lagged sums
/// the adaptive schedule needs. `E_0 = E_{-1} = 0`.
#[derive(Clone, Debug, Default)]
pub struct ErrorTracker {
    rounds: usize,
    last: f64,
    sum: f64,
    lag1: f64,
    lag2: f64,
}

impl ErrorTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, eps: f64) {
        assert!(eps >= 0.0 && eps.is_finite(), "instantaneous error must be finite and >= 0");
        self.lag2 = self.lag1;
        self.lag1 = self.sum;
        self.sum += eps;
        self.last = eps;
        self.rounds += 1;
    }

    /// `E_t` after `t` pushes.
    pub fn total(&self) -> f64 {
        self.sum
    }

    /// `E_{t-1}`.
    pub fn lag1(&self) -> f64 {
        self.lag1
    }

    /// `E_{t-2}`.
    pub fn lag2(&self) -> f64 {
        self.lag2
    }

    pub fn last(&self) -> f64 {
        self.last
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// Adaptive step size for the upcoming round, computed from the two most
/// recent error sums. With an empty history the ratio is `+inf` and the
/// Lipschitz cap `sqrt(beta)/L` is returned.
pub fn adaptive_eta(errors: &ErrorTracker, beta: f64, bregman_radius: f64, lipschitz: f64) -> f64 {
    debug_assert!(beta > 0.0 && bregman_radius > 0.0 && lipschitz > 0.0);
    let denom = errors.total().sqrt() + errors.lag1().sqrt();
    let cap = beta.sqrt() / lipschitz;
    if denom == 0.0 {
        cap
    } else {
        ((beta * bregman_radius).sqrt() / denom).min(cap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateMode {
    Constant(f64),
    Adaptive,
}

/// Declared problem constants. Environments must declare these; nothing is
/// estimated from data.
#[derive(Clone, Debug)]
pub struct ProblemBounds {
    /// Domain diameter in the primal norm.
    pub diameter: f64,
    /// Bound on |f_t| over the domain.
    pub loss_bound: f64,
    /// Bound on |g_t| over the domain.
    pub constraint_bound: f64,
    /// Gradient-Lipschitz bound for losses.
    pub lipschitz_f: f64,
    /// Gradient-Lipschitz bound for constraints.
    pub lipschitz_g: f64,
    /// Declared smoothness of the loss-prediction sequence (0 for constant
    /// predictions such as the zero predictor).
    pub smoothness_f: f64,
    /// Declared smoothness of the constraint-prediction sequence.
    pub smoothness_g: f64,
    /// Upper bound on the Bregman divergence from any anchor to any domain
    /// point. Euclidean box/ball: half the squared diameter.
    pub bregman_radius: f64,
}

impl ProblemBounds {
    pub fn validate(&self, rate: &RateMode, beta: f64) -> Result<(), LearnerError> {
        let pos = [
            ("diameter", self.diameter),
            ("loss_bound", self.loss_bound),
            ("constraint_bound", self.constraint_bound),
            ("lipschitz_f", self.lipschitz_f),
            ("lipschitz_g", self.lipschitz_g),
            ("bregman_radius", self.bregman_radius),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LearnerError::BadBounds {
                    reason: format!("{name} must be > 0, got {v}"),
                });
            }
        }
        if self.smoothness_f < 0.0 || self.smoothness_g < 0.0 {
            return Err(LearnerError::BadBounds { reason: "smoothness must be >= 0".into() });
        }
        if matches!(rate, RateMode::Adaptive) && self.smoothness_f > beta.sqrt() * self.lipschitz_f
        {
            return Err(LearnerError::BadBounds {
                reason: format!(
                    "adaptive rate requires smoothness_f <= sqrt(beta) * lipschitz_f ({} > {})",
                    self.smoothness_f,
                    beta.sqrt() * self.lipschitz_f
                ),
            });
        }
        if let RateMode::Constant(eta) = rate {
            if !(eta.is_finite() && *eta > 0.0) {
                return Err(LearnerError::BadBounds {
                    reason: format!("constant eta must be > 0, got {eta}"),
                });
            }
        }
        Ok(())
    }
}

/// One completed learner round.
#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub round: usize,
    pub loss_value: f64,
    /// Squared dual-norm prediction error at the played point.
    pub eps: f64,
    /// Step size used by this round's mirror step.
    pub eta: f64,
    /// Step size chosen for the next round.
    pub eta_next: f64,
    pub x_played: Vec<f64>,
    /// Gradient at the played point; retained only when instrumented.
    pub gradient: Option<Vec<f64>>,
}

/// Per-round state retained for the per-step inequality check.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub anchor: Vec<f64>,
    pub next_anchor: Vec<f64>,
    pub gradient: Vec<f64>,
    pub eps: f64,
    pub eta: f64,
    pub eta_next: f64,
    /// Declared smoothness of the prediction that produced `x`.
    pub pred_smoothness: f64,
}

/// Slack of one per-step inequality; guaranteed nonnegative when the
/// smoothness precondition held for that round.
#[derive(Clone, Copy, Debug)]
pub struct StepSlack {
    pub slack: f64,
    pub precondition_met: bool,
}

pub struct OmdState {
    geometry: BregmanGeometry,
    domain: Domain,
    bounds: ProblemBounds,
    rate: RateMode,
    x: Vec<f64>,
    anchor: Vec<f64>,
    eta: f64,
    errors: ErrorTracker,
    lipschitz_seen: f64,
    pending: Box<dyn FirstOrderOracle>,
    round: usize,
    instrument: bool,
    history: Vec<StepRecord>,
}

impl OmdState {
    /// Initializes with `anchor_1 = x_1` (domain centroid by default) and the
    /// zero prediction, so the first played point equals the anchor.
    pub fn init(
        geometry: BregmanGeometry,
        domain: Domain,
        bounds: ProblemBounds,
        rate: RateMode,
        x1: Option<Vec<f64>>,
    ) -> Result<Self, LearnerError> {
        bounds.validate(&rate, geometry.beta)?;
        domain.validate()?;
        let anchor = match x1 {
            Some(p) => {
                if !domain.contains(&p, 1e-9) {
                    return Err(LearnerError::BadInitialPoint);
                }
                p
            }
            None => domain.centroid(),
        };
        let errors = ErrorTracker::new();
        let eta = match rate {
            RateMode::Constant(e) => e,
            RateMode::Adaptive => {
                adaptive_eta(&errors, geometry.beta, bounds.bregman_radius, bounds.lipschitz_f)
            }
        };
        let lipschitz_seen = bounds.lipschitz_f;
        Ok(OmdState {
            geometry,
            domain,
            bounds,
            rate,
            x: anchor.clone(),
            anchor,
            eta,
            errors,
            lipschitz_seen,
            pending: Box::new(ZeroFunction),
            round: 1,
            instrument: false,
            history: Vec::new(),
        })
    }

    /// Replaces the round-1 prediction and recomputes the first played point
    /// as the optimistic step from the initial anchor.
    pub fn with_initial_prediction(
        mut self,
        pred: Box<dyn FirstOrderOracle>,
    ) -> Result<Self, LearnerError> {
        let g = pred.gradient(&self.anchor);
        if !vecops::all_finite(&g) {
            return Err(LearnerError::NonFiniteOracle { round: 1, what: "prediction gradient" });
        }
        self.x = geometry::mirror_step(&self.geometry, &self.domain, &self.anchor, &g, self.eta)?;
        self.pending = pred;
        Ok(self)
    }

    /// Enables retention of per-round state for `step_slack`.
    pub fn with_instrumentation(mut self) -> Self {
        self.instrument = true;
        self
    }

    /// The point to play this round.
    pub fn current_point(&self) -> &[f64] {
        &self.x
    }

    pub fn current_anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn current_eta(&self) -> f64 {
        self.eta
    }

    pub fn errors(&self) -> &ErrorTracker {
        &self.errors
    }

    /// Running maximum of declared gradient-Lipschitz constants.
    pub fn lipschitz_seen(&self) -> f64 {
        self.lipschitz_seen
    }

    pub fn bounds(&self) -> &ProblemBounds {
        &self.bounds
    }

    pub fn geometry(&self) -> &BregmanGeometry {
        &self.geometry
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    /// Plays one round: consumes the observed loss and the prediction formed
    /// for the next round (a function the learner evaluates at the new anchor
    /// now and at the next played point when scoring it).
    pub fn round(
        &mut self,
        loss: &dyn FirstOrderOracle,
        next_prediction: Box<dyn FirstOrderOracle>,
    ) -> Result<RoundRecord, LearnerError> {
        let t = self.round;
        let loss_value = loss.value(&self.x);
        let grad = loss.gradient(&self.x);
        if !loss_value.is_finite() {
            return Err(LearnerError::NonFiniteOracle { round: t, what: "loss value" });
        }
        if !vecops::all_finite(&grad) {
            return Err(LearnerError::NonFiniteOracle { round: t, what: "loss gradient" });
        }

        let pred_at_x = self.pending.gradient(&self.x);
        let diff = vecops::sub(&grad, &pred_at_x);
        let eps = self.geometry.norm_pair.dual_value(&diff).powi(2);
        // Smoothness between the prediction's two evaluation points (the
        // anchor it steered from and the point it is scored at): exactly the
        // quantity the per-step inequality's hypothesis needs.
        let pred_smoothness = self.pending.smoothness_between(&self.x, &self.anchor);
        self.errors.push(eps);

        self.lipschitz_seen =
            self.lipschitz_seen.max(loss.grad_lipschitz()).max(next_prediction.grad_lipschitz());
        let eta = self.eta;
        let eta_next = match self.rate {
            RateMode::Constant(e) => e,
            RateMode::Adaptive => adaptive_eta(
                &self.errors,
                self.geometry.beta,
                self.bounds.bregman_radius,
                self.lipschitz_seen,
            ),
        };

        let next_anchor =
            geometry::mirror_step(&self.geometry, &self.domain, &self.anchor, &grad, eta)?;
        let pred_at_anchor = next_prediction.gradient(&next_anchor);
        if !vecops::all_finite(&pred_at_anchor) {
            return Err(LearnerError::NonFiniteOracle { round: t, what: "prediction gradient" });
        }
        let next_x = geometry::mirror_step(
            &self.geometry,
            &self.domain,
            &next_anchor,
            &pred_at_anchor,
            eta_next,
        )?;

        if self.instrument {
            self.history.push(StepRecord {
                x: self.x.clone(),
                anchor: self.anchor.clone(),
                next_anchor: next_anchor.clone(),
                gradient: grad.clone(),
                eps,
                eta,
                eta_next,
                pred_smoothness,
            });
        }

        let record = RoundRecord {
            round: t,
            loss_value,
            eps,
            eta,
            eta_next,
            x_played: std::mem::replace(&mut self.x, next_x),
            gradient: if self.instrument { Some(grad) } else { None },
        };
        self.anchor = next_anchor;
        self.eta = eta_next;
        self.pending = next_prediction;
        self.round += 1;
        Ok(record)
    }

    /// Slack of the per-step regret inequality at round `t` (1-based):
    ///
    /// `<grad_t, x_t - u> <= (B(u;a_t) - B(u;a_{t+1}))/eta_t
    ///     + B(x_t;a_{t+1}) (1/eta_{t+1} - 1/eta_t) + eta_{t+1}/beta * eps_t`
    ///
    /// Nonnegative whenever the prediction that produced `x_t` was
    /// `beta / sqrt(2 eta_t eta_{t+1})`-smooth between its two evaluation
    /// points, which is what `precondition_met` reports.
    pub fn step_slack(&self, u: &[f64], t: usize) -> Result<StepSlack, LearnerError> {
        if !self.instrument {
            return Err(LearnerError::NotInstrumented);
        }
        let rec = self
            .history
            .get(
                t.checked_sub(1)
                    .ok_or(LearnerError::NoSuchRound { round: t, len: self.history.len() })?,
            )
            .ok_or(LearnerError::NoSuchRound { round: t, len: self.history.len() })?;
        let geo = &self.geometry;
        let lhs = vecops::dot(&rec.gradient, &vecops::sub(&rec.x, u));
        let rhs = (geometry::bregman_div(geo, u, &rec.anchor)
            - geometry::bregman_div(geo, u, &rec.next_anchor))
            / rec.eta
            + geometry::bregman_div(geo, &rec.x, &rec.next_anchor)
                * (1.0 / rec.eta_next - 1.0 / rec.eta)
            + rec.eta_next / geo.beta * rec.eps;
        // Absorbing the prediction-smoothness term through strong convexity
        // (`B >= beta/2 |.|^2`) requires `2 eta_t eta_{t+1} alpha^2 <= beta^2`,
        // a factor sqrt(2) stricter than `alpha <= beta/eta_t`.
        let cap = geo.beta / (2.0 * rec.eta * rec.eta_next).sqrt();
        Ok(StepSlack { slack: rhs - lhs, precondition_met: rec.pred_smoothness <= cap + 1e-12 })
    }

    /// Raises the running Lipschitz maximum ahead of the next round; the
    /// constrained meta-learner uses this to account for the next surrogate's
    /// declared scale before the step size for that round is chosen.
    pub fn observe_lipschitz(&mut self, lipschitz: f64) {
        if lipschitz.is_finite() {
            self.lipschitz_seen = self.lipschitz_seen.max(lipschitz);
        }
    }
}

/// Regret bound for the constant-rate schedule: `2B/eta + eta/beta * E_T`.
pub fn constant_rate_regret_bound(bregman_radius: f64, eta: f64, err_total: f64, beta: f64) -> f64 {
    2.0 * bregman_radius / eta + eta / beta * err_total
}

/// Regret bound for the adaptive schedule:
/// `5 sqrt(B/beta) (sqrt(E_T) + sqrt(B) L_T)`.
pub fn adaptive_regret_bound(
    bregman_radius: f64,
    beta: f64,
    err_total: f64,
    lipschitz_final: f64,
) -> f64 {
    5.0 * (bregman_radius / beta).sqrt()
        * (err_total.sqrt() + bregman_radius.sqrt() * lipschitz_final)
}

/// Non-optimistic mirror descent baseline: a single mirror step per round
/// from the played point itself. Uses the same error accounting as the
/// optimistic learner scored against the zero prediction, so the two produce
/// identical step-size sequences.
pub struct PlainOmd {
    geometry: BregmanGeometry,
    domain: Domain,
    bounds: ProblemBounds,
    rate: RateMode,
    x: Vec<f64>,
    eta: f64,
    errors: ErrorTracker,
    lipschitz_seen: f64,
    round: usize,
}

impl PlainOmd {
    pub fn init(
        geometry: BregmanGeometry,
        domain: Domain,
        bounds: ProblemBounds,
        rate: RateMode,
        x1: Option<Vec<f64>>,
    ) -> Result<Self, LearnerError> {
        bounds.validate(&rate, geometry.beta)?;
        domain.validate()?;
        let x = match x1 {
            Some(p) => {
                if !domain.contains(&p, 1e-9) {
                    return Err(LearnerError::BadInitialPoint);
                }
                p
            }
            None => domain.centroid(),
        };
        let errors = ErrorTracker::new();
        let eta = match rate {
            RateMode::Constant(e) => e,
            RateMode::Adaptive => {
                adaptive_eta(&errors, geometry.beta, bounds.bregman_radius, bounds.lipschitz_f)
            }
        };
        let lipschitz_seen = bounds.lipschitz_f;
        Ok(PlainOmd { geometry, domain, bounds, rate, x, eta, errors, lipschitz_seen, round: 1 })
    }

    pub fn current_point(&self) -> &[f64] {
        &self.x
    }

    pub fn round(&mut self, loss: &dyn FirstOrderOracle) -> Result<RoundRecord, LearnerError> {
        let t = self.round;
        let loss_value = loss.value(&self.x);
        let grad = loss.gradient(&self.x);
        if !loss_value.is_finite() || !vecops::all_finite(&grad) {
            return Err(LearnerError::NonFiniteOracle { round: t, what: "loss" });
        }
        let eps = self.geometry.norm_pair.dual_value(&grad).powi(2);
        self.errors.push(eps);
        self.lipschitz_seen = self.lipschitz_seen.max(loss.grad_lipschitz());
        let eta = self.eta;
        let eta_next = match self.rate {
            RateMode::Constant(e) => e,
            RateMode::Adaptive => adaptive_eta(
                &self.errors,
                self.geometry.beta,
                self.bounds.bregman_radius,
                self.lipschitz_seen,
            ),
        };
        let next = geometry::mirror_step(&self.geometry, &self.domain, &self.x, &grad, eta)?;
        let record = RoundRecord {
            round: t,
            loss_value,
            eps,
            eta,
            eta_next,
            x_played: std::mem::replace(&mut self.x, next),
            gradient: None,
        };
        self.eta = eta_next;
        self.round += 1;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::QuadraticForm;

    fn unit_box(dim: usize) -> Domain {
        Domain::Box { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    fn bounds_for_tests() -> ProblemBounds {
        ProblemBounds {
            diameter: std::f64::consts::SQRT_2,
            loss_bound: 1.0,
            constraint_bound: 1.0,
            lipschitz_f: 2.0,
            lipschitz_g: 1.0,
            smoothness_f: 0.0,
            smoothness_g: 0.0,
            bregman_radius: 1.0,
        }
    }

    struct Affine {
        coeffs: Vec<f64>,
    }

    impl FirstOrderOracle for Affine {
        fn value(&self, x: &[f64]) -> f64 {
            vecops::dot(&self.coeffs, x)
        }
        fn gradient(&self, _x: &[f64]) -> Vec<f64> {
            self.coeffs.clone()
        }
        fn grad_lipschitz(&self) -> f64 {
            1.0
        }
        fn quadratic_form(&self) -> Option<QuadraticForm> {
            Some(QuadraticForm { quad: 0.0, linear: self.coeffs.clone(), constant: 0.0 })
        }
    }

    struct Quad {
        theta: Vec<f64>,
    }

    impl FirstOrderOracle for Quad {
        fn value(&self, x: &[f64]) -> f64 {
            let d = vecops::sub(x, &self.theta);
            0.5 * vecops::dot(&d, &d)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vecops::sub(x, &self.theta)
        }
        fn grad_lipschitz(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn default_simplex_start_is_uniform() {
        let st = OmdState::init(
            BregmanGeometry::entropic(),
            Domain::Simplex { dim: 4 },
            ProblemBounds { lipschitz_f: 2.0, ..bounds_for_tests() },
            RateMode::Constant(0.1),
            None,
        )
        .unwrap();
        assert_eq!(st.current_point(), &[0.25, 0.25, 0.25, 0.25]);
        assert_eq!(st.current_anchor(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn adaptive_initial_rate_is_the_lipschitz_cap() {
        let st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            bounds_for_tests(),
            RateMode::Adaptive,
            None,
        )
        .unwrap();
        assert_eq!(st.current_eta(), 0.5); // sqrt(1)/2
    }

    #[test]
    fn constant_rate_passes_through() {
        let st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            bounds_for_tests(),
            RateMode::Constant(0.1),
            None,
        )
        .unwrap();
        assert_eq!(st.current_eta(), 0.1);
    }

    #[test]
    fn initial_point_outside_domain_is_rejected() {
        let st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            bounds_for_tests(),
            RateMode::Constant(0.1),
            Some(vec![2.0, 0.5]),
        );
        assert!(matches!(st, Err(LearnerError::BadInitialPoint)));
    }

    #[test]
    fn adaptive_eta_zero_history_convention() {
        let tr = ErrorTracker::new();
        assert_eq!(adaptive_eta(&tr, 1.0, 1.0, 2.0), 0.5);
    }

    #[test]
    fn adaptive_eta_direct_arithmetic() {
        // E_{t-1} = 4, E_{t-2} = 1.
        let mut tr = ErrorTracker::new();
        tr.push(1.0);
        tr.push(3.0);
        assert!((adaptive_eta(&tr, 1.0, 1.0, 0.1) - 1.0 / 3.0).abs() < 1e-15);

        // E_{t-1} = E_{t-2} = 1: min{2/2, 2} = 1.
        let mut tr = ErrorTracker::new();
        tr.push(1.0);
        tr.push(0.0);
        assert!((adaptive_eta(&tr, 4.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn error_tracker_lags_shift() {
        let mut tr = ErrorTracker::new();
        assert_eq!((tr.total(), tr.lag1(), tr.lag2()), (0.0, 0.0, 0.0));
        tr.push(2.0);
        assert_eq!((tr.total(), tr.lag1(), tr.lag2()), (2.0, 0.0, 0.0));
        tr.push(3.0);
        assert_eq!((tr.total(), tr.lag1(), tr.lag2()), (5.0, 2.0, 0.0));
        tr.push(1.0);
        assert_eq!((tr.total(), tr.lag1(), tr.lag2()), (6.0, 5.0, 2.0));
    }

    #[test]
    fn zero_prediction_keeps_play_equal_to_anchor() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, ..bounds_for_tests() },
            RateMode::Constant(0.2),
            None,
        )
        .unwrap();
        for t in 0..20 {
            let loss = Affine { coeffs: vec![if t % 2 == 0 { 1.0 } else { -0.5 }, 0.3] };
            let _ = st.round(&loss, Box::new(ZeroFunction)).unwrap();
            assert_eq!(st.current_point(), st.current_anchor(), "round {t}");
        }
    }

    #[test]
    fn perfect_prediction_has_zero_error() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, smoothness_f: 1.0, ..bounds_for_tests() },
            RateMode::Constant(0.2),
            None,
        )
        .unwrap()
        .with_initial_prediction(Box::new(Affine { coeffs: vec![1.0, 0.0] }))
        .unwrap();
        for _ in 0..10 {
            let loss = Affine { coeffs: vec![1.0, 0.0] };
            let rec = st.round(&loss, Box::new(Affine { coeffs: vec![1.0, 0.0] })).unwrap();
            assert_eq!(rec.eps, 0.0);
        }
    }

    #[test]
    fn hand_evaluated_double_step_on_the_interval() {
        // f(x) = x on [0,1], eta = 0.1 throughout, anchor 0.5, perfect
        // prediction: anchor moves to 0.4, play moves to 0.3.
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(1),
            ProblemBounds {
                diameter: 1.0,
                lipschitz_f: 1.0,
                smoothness_f: 1.0,
                bregman_radius: 0.5,
                ..bounds_for_tests()
            },
            RateMode::Constant(0.1),
            Some(vec![0.5]),
        )
        .unwrap();
        let loss = Affine { coeffs: vec![1.0] };
        let rec = st.round(&loss, Box::new(Affine { coeffs: vec![1.0] })).unwrap();
        assert!((st.current_anchor()[0] - 0.4).abs() < 1e-15);
        assert!((st.current_point()[0] - 0.3).abs() < 1e-15);
        assert_eq!(rec.x_played, vec![0.5]);
    }

    #[test]
    fn adaptive_eta_never_increases_along_a_run() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, ..bounds_for_tests() },
            RateMode::Adaptive,
            None,
        )
        .unwrap();
        let mut last = st.current_eta();
        for t in 1..200 {
            let c = vec![(0.3 * t as f64).sin(), (0.7 * t as f64).cos()];
            let rec = st.round(&Affine { coeffs: c }, Box::new(ZeroFunction)).unwrap();
            assert!(rec.eta_next <= rec.eta + 1e-15);
            assert!(rec.eta <= last + 1e-15);
            last = rec.eta_next;
        }
    }

    #[test]
    fn error_sum_accounts_per_round_errors() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, ..bounds_for_tests() },
            RateMode::Adaptive,
            None,
        )
        .unwrap();
        let mut sum = 0.0;
        for t in 1..100 {
            let c = vec![(0.3 * t as f64).sin(), (0.7 * t as f64).cos()];
            let rec = st.round(&Affine { coeffs: c }, Box::new(ZeroFunction)).unwrap();
            sum += rec.eps;
        }
        let total = st.errors().total();
        assert!((total - sum).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn step_slack_nonnegative_for_zero_prediction_at_played_point() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, ..bounds_for_tests() },
            RateMode::Constant(0.3),
            None,
        )
        .unwrap()
        .with_instrumentation();
        let loss = Affine { coeffs: vec![1.0, -1.0] };
        let rec = st.round(&loss, Box::new(ZeroFunction)).unwrap();
        let s = st.step_slack(&rec.x_played, 1).unwrap();
        assert!(s.precondition_met);
        assert!(s.slack >= -1e-12, "slack {}", s.slack);
    }

    #[test]
    fn step_slack_nonnegative_under_perfect_constant_rate_predictions() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, smoothness_f: 1.0, ..bounds_for_tests() },
            RateMode::Constant(0.25),
            None,
        )
        .unwrap()
        .with_instrumentation()
        .with_initial_prediction(Box::new(Quad { theta: vec![0.8, 0.2] }))
        .unwrap();
        for t in 1..=30 {
            let theta = vec![0.5 + 0.3 * (0.2 * t as f64).sin(), 0.5];
            let next_theta = vec![0.5 + 0.3 * (0.2 * (t + 1) as f64).sin(), 0.5];
            // Prediction for the next round is the next loss itself.
            st.round(&Quad { theta }, Box::new(Quad { theta: next_theta })).unwrap();
        }
        for u in [vec![0.0, 0.0], vec![1.0, 1.0], vec![0.3, 0.9]] {
            for t in 1..=30 {
                let s = st.step_slack(&u, t).unwrap();
                assert!(s.precondition_met, "round {t}");
                assert!(s.slack >= -1e-12, "round {t} vs {u:?}: {}", s.slack);
            }
        }
    }

    #[test]
    fn step_slacks_nonnegative_on_a_random_quadratic_run() {
        let mut st = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            ProblemBounds { lipschitz_f: 1.0, smoothness_f: 1.0, ..bounds_for_tests() },
            RateMode::Adaptive,
            None,
        )
        .unwrap()
        .with_instrumentation();
        let mut rng = crate::rng::Rng::new(11);
        let mut prev: Option<Quad> = None;
        for _ in 0..50 {
            let theta = vec![rng.next_f64(), rng.next_f64()];
            let loss = Quad { theta: theta.clone() };
            let pred: Box<dyn FirstOrderOracle> = match prev.take() {
                Some(q) => Box::new(q),
                None => Box::new(ZeroFunction),
            };
            // Previous-function prediction for the NEXT round is this round's loss.
            st.round(&loss, pred).unwrap();
            prev = Some(Quad { theta });
        }
        let u = vec![0.5, 0.5];
        for t in 1..=50 {
            let s = st.step_slack(&u, t).unwrap();
            if s.precondition_met {
                assert!(s.slack >= -1e-9, "round {t}: slack {}", s.slack);
            }
        }
    }

    #[test]
    fn regret_bound_values() {
        assert_eq!(constant_rate_regret_bound(1.0, 0.1, 0.0, 1.0), 20.0);
        assert_eq!(adaptive_regret_bound(1.0, 1.0, 0.0, 2.0), 10.0);
        assert_eq!(adaptive_regret_bound(4.0, 1.0, 9.0, 1.0), 50.0);
    }

    #[test]
    fn zero_predictor_matches_plain_baseline() {
        let bounds = ProblemBounds { lipschitz_f: 1.0, ..bounds_for_tests() };
        let mut opt = OmdState::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            bounds.clone(),
            RateMode::Constant(0.15),
            None,
        )
        .unwrap();
        let mut plain = PlainOmd::init(
            BregmanGeometry::euclidean(),
            unit_box(2),
            bounds,
            RateMode::Constant(0.15),
            None,
        )
        .unwrap();
        for t in 1..100 {
            let c = vec![(0.3 * t as f64).sin(), (0.7 * t as f64).cos()];
            let a = opt.round(&Affine { coeffs: c.clone() }, Box::new(ZeroFunction)).unwrap();
            let b = plain.round(&Affine { coeffs: c }).unwrap();
            assert_eq!(a.x_played, b.x_played, "round {t}");
            assert_eq!(a.loss_value, b.loss_value);
        }
    }
}
