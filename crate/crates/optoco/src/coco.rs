//! Constrained online learning through a virtual queue.
//!
//! Each round builds a surrogate loss
//!
//! `L_t(x) = V f_t(x) + lambda exp(Q_t) g_t^+(x)`
//!
//! and hands it to an inner optimistic learner together with a predicted
//! surrogate for the next round. The queue accumulates scaled violations,
//! `Q_{t+1} = Q_t + lambda g_t^+(x_t)` with `Q_1 = 0`, so that
//! `CCV_t = Q_{t+1} / lambda` holds exactly. The update is deliberately
//! shifted one round early: forming the predicted surrogate for round `t+1`
//! needs its queue weight `exp(Q_{t+1})` to be known at the end of round `t`.
//!
//! The exponential potential `Phi(Q) = exp(Q) - 1` converts queue growth into
//! a multiplicative penalty. With the multiplier calibrated as
//! `lambda = 1 / (2C (sqrt(2 E_g) + psi(g)) + 2G)` the queue stays
//! logarithmic in the horizon; a queue passing the overflow guard means the
//! multiplier was set too large for the environment and the run aborts with a
//! diagnostic rather than feeding infinities downstream.

use std::sync::Arc;

use thiserror::Error;

use crate::experts::ExpertState;
use crate::function::FirstOrderOracle;
use crate::geometry::Norm;
use crate::omd::{ErrorTracker, LearnerError, OmdState, RoundRecord};
use crate::vecops;

#[derive(Debug, Error)]
pub enum CocoError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("queue blow-up: Q = {q} exceeded the overflow guard {guard}; the multiplier lambda is too large for this environment")]
    QueueBlowUp { q: f64, guard: f64 },
    #[error("oracle returned a non-finite {what} at round {round}")]
    NonFiniteOracle { round: usize, what: &'static str },
    #[error("comparator violates a past constraint by {violation} (round {round})")]
    InfeasibleComparator { round: usize, violation: f64 },
    #[error("round {round} is not in the instrumented history (len {len})")]
    NoSuchRound { round: usize, len: usize },
    #[error("instrumentation is disabled for this run")]
    NotInstrumented,
    #[error("multiplier must be positive and finite, got {lambda}")]
    BadMultiplier { lambda: f64 },
}

/// Exponential Lyapunov potential `Phi(Q) = exp(Q) - 1`.
///
/// `Phi(0) = 0`, convex, nondecreasing, with nondecreasing derivative
/// `Phi'(Q) = exp(Q)`.
#[derive(Clone, Copy, Debug)]
pub struct ExpPotential {
    /// Abort threshold for the exponent. Calibrated multipliers keep
    /// `Q = O(log T)`, far below this; crossing it signals miscalibration.
    pub q_guard: f64,
}

impl Default for ExpPotential {
    fn default() -> Self {
        ExpPotential { q_guard: 500.0 }
    }
}

impl ExpPotential {
    pub fn value(&self, q: f64) -> Result<f64, CocoError> {
        Ok(self.prime(q)? - 1.0)
    }

    /// `Phi'(Q) = exp(Q)`, guarded.
    pub fn prime(&self, q: f64) -> Result<f64, CocoError> {
        if q.is_nan() || q > self.q_guard {
            return Err(CocoError::QueueBlowUp { q, guard: self.q_guard });
        }
        Ok(q.exp())
    }
}

/// Virtual queue with its multiplier and the (fixed) loss weight `V = 1`.
#[derive(Clone, Copy, Debug)]
pub struct QueueState {
    pub q: f64,
    pub lambda: f64,
    /// Loss weight in the surrogate; fixed to 1 and exposed read-only.
    pub v: f64,
}

impl QueueState {
    pub fn new(lambda: f64) -> Result<Self, CocoError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CocoError::BadMultiplier { lambda });
        }
        Ok(QueueState { q: 0.0, lambda, v: 1.0 })
    }

    /// `Q += lambda * max(0, g(x))`; returns the clipped violation added.
    pub fn update(&mut self, g_value: f64) -> f64 {
        let g_plus = g_value.max(0.0);
        self.q += self.lambda * g_plus;
        g_plus
    }
}

/// The sublinear functional in the inner learner's regret contract,
/// evaluated on declared gradient-Lipschitz metadata.
#[derive(Clone, Copy, Debug)]
pub enum PsiFunctional {
    /// `psi(h) = sqrt(B) * L_h`; the adaptive mirror-descent contract.
    ScaledLipschitz { bregman_radius: f64 },
    /// `psi(h) = 1`; the experts contract. Subadditive but not homogeneous.
    Unit,
}

impl PsiFunctional {
    pub fn eval(&self, lipschitz: f64) -> f64 {
        match self {
            PsiFunctional::ScaledLipschitz { bregman_radius } => bregman_radius.sqrt() * lipschitz,
            PsiFunctional::Unit => 1.0,
        }
    }
}

/// Regret contract of the inner learner: `Regret_t <= C (sqrt(E_t) + psi_t)`.
#[derive(Clone, Copy, Debug)]
pub struct BaseAlgoContract {
    pub regret_constant: f64,
    pub psi: PsiFunctional,
}

impl BaseAlgoContract {
    /// Contract of the adaptive-rate mirror-descent learner:
    /// `C = 5 sqrt(B / beta)`, `psi_t(h) = sqrt(B) L_t^h`.
    pub fn adaptive_mirror_descent(bregman_radius: f64, beta: f64) -> Self {
        BaseAlgoContract {
            regret_constant: 5.0 * (bregman_radius / beta).sqrt(),
            psi: PsiFunctional::ScaledLipschitz { bregman_radius },
        }
    }

    /// Contract of the mixed experts learner:
    /// `C = 2 sqrt(log(d^2 T e))`, `psi = 1`.
    pub fn experts(dim: usize, horizon: usize) -> Self {
        let log_budget = ((dim * dim) as f64 * horizon as f64 * std::f64::consts::E).ln();
        BaseAlgoContract { regret_constant: 2.0 * log_budget.sqrt(), psi: PsiFunctional::Unit }
    }
}

/// `lambda = 1 / (2C (sqrt(2 E_g) + psi_g) + 2G)`; always at most `1/(2G)`.
pub fn calibrate_lambda(c: f64, err_g_total: f64, psi_g: f64, g_bound: f64) -> f64 {
    1.0 / (2.0 * c * ((2.0 * err_g_total).sqrt() + psi_g) + 2.0 * g_bound)
}

/// Regret bound of the meta-algorithm: `C (sqrt(2 E_f) + psi_f) + 1/V`.
pub fn constrained_regret_bound(c: f64, err_f_total: f64, psi_f: f64, v: f64) -> f64 {
    c * ((2.0 * err_f_total).sqrt() + psi_f) + 1.0 / v
}

/// Violation bound of the meta-algorithm:
/// `2 (C (sqrt(2 E_g) + psi_g) + G) log(2 (C (sqrt(2 E_f) + psi_f) + 2FVT + 2))`.
#[allow(clippy::too_many_arguments)]
pub fn violation_bound(
    c: f64,
    err_f_total: f64,
    psi_f: f64,
    err_g_total: f64,
    psi_g: f64,
    g_bound: f64,
    f_bound: f64,
    v: f64,
    horizon: usize,
) -> f64 {
    let prefactor = 2.0 * (c * ((2.0 * err_g_total).sqrt() + psi_g) + g_bound);
    let arg =
        2.0 * (c * ((2.0 * err_f_total).sqrt() + psi_f) + 2.0 * f_bound * v * horizon as f64 + 2.0);
    prefactor * arg.ln()
}

/// Subgradient of the surrogate `V f + lambda exp(Q) g^+` at a point where
/// `g` takes `g_value`: the clipped constraint contributes its gradient only
/// on the violated side, and 0 at `g = 0` (a valid subgradient that keeps the
/// surrogate equal to `V f` on the feasible set).
pub fn surrogate_gradient(
    grad_f: &[f64],
    g_value: f64,
    grad_g: &[f64],
    v: f64,
    lambda: f64,
    q: f64,
) -> Result<Vec<f64>, CocoError> {
    let phi_prime = ExpPotential::default().prime(q)?;
    let mut out = vecops::scale(grad_f, v);
    if g_value > 0.0 {
        out = vecops::add_scaled(&out, lambda * phi_prime, grad_g);
    }
    Ok(out)
}

/// Predicted surrogate subgradient: identical composition applied to the
/// predicted value and gradient. The predicted value decides the clip.
pub fn predicted_surrogate_gradient(
    pred_grad_f: &[f64],
    pred_g_value: f64,
    pred_grad_g: &[f64],
    v: f64,
    lambda: f64,
    q: f64,
) -> Result<Vec<f64>, CocoError> {
    surrogate_gradient(pred_grad_f, pred_g_value, pred_grad_g, v, lambda, q)
}

/// `V f(x) + weight * g^+(x)` as a first-order oracle, where
/// `weight = lambda * Phi'(Q)`. Serves both the true surrogate (built from
/// the observed pair) and the predicted one (built from prediction oracles,
/// whose predicted value decides the clip).
pub struct SurrogateFn {
    pub f: Arc<dyn FirstOrderOracle>,
    pub g: Arc<dyn FirstOrderOracle>,
    pub v: f64,
    pub weight: f64,
    /// Declared gradient-Lipschitz constant reported to the inner learner's
    /// step-size cap: `V L_f + weight L_g` with the declared per-function
    /// constants, not the (smaller) smoothness of this particular pair.
    pub declared_lipschitz: f64,
}

impl SurrogateFn {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.v * self.f.value(x) + self.weight * self.g.value(x).max(0.0)
    }
}

impl FirstOrderOracle for SurrogateFn {
    fn value(&self, x: &[f64]) -> f64 {
        self.value_at(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vecops::scale(&self.f.gradient(x), self.v);
        if self.g.value(x) > 0.0 {
            out = vecops::add_scaled(&out, self.weight, &self.g.gradient(x));
        }
        out
    }

    fn grad_lipschitz(&self) -> f64 {
        self.declared_lipschitz
    }

    fn smoothness_between(&self, a: &[f64], b: &[f64]) -> f64 {
        // The clipped constraint term makes the gradient map discontinuous at
        // its boundary: the composition is only smooth between points whose
        // clip decisions agree.
        let clip_a = self.g.value(a) > 0.0;
        let clip_b = self.g.value(b) > 0.0;
        if clip_a != clip_b {
            return f64::INFINITY;
        }
        let g_part = if clip_a { self.weight * self.g.smoothness_between(a, b) } else { 0.0 };
        self.v * self.f.smoothness_between(a, b) + g_part
    }
}

/// Inner optimistic learner run on the surrogate sequence.
pub enum InnerLearner {
    MirrorDescent(OmdState),
    Experts(ExpertState),
}

impl InnerLearner {
    pub fn current_point(&self) -> &[f64] {
        match self {
            InnerLearner::MirrorDescent(st) => st.current_point(),
            InnerLearner::Experts(st) => st.current_point(),
        }
    }

    fn dual_norm(&self) -> Norm {
        match self {
            InnerLearner::MirrorDescent(st) => st.geometry().norm_pair.dual,
            InnerLearner::Experts(_) => Norm::LInf,
        }
    }

    pub fn as_mirror_descent(&self) -> Option<&OmdState> {
        match self {
            InnerLearner::MirrorDescent(st) => Some(st),
            _ => None,
        }
    }
}

/// Per-round instrumentation retained for the decomposition check.
pub struct CocoStepRecord {
    pub x: Vec<f64>,
    pub f: Arc<dyn FirstOrderOracle>,
    pub g: Arc<dyn FirstOrderOracle>,
    pub f_value: f64,
    pub g_plus: f64,
    pub q_before: f64,
    pub q_after: f64,
    pub phi_prime_before: f64,
    pub phi_prime_after: f64,
}

/// One completed meta-round.
#[derive(Clone, Debug)]
pub struct CocoRoundRecord {
    pub round: usize,
    pub loss_value: f64,
    pub g_value: f64,
    pub g_plus: f64,
    /// Queue before this round's dual update.
    pub q_before: f64,
    /// Queue after; `ccv = q_after / lambda` exactly.
    pub q_after: f64,
    pub ccv: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub eps_surrogate: f64,
    pub eta: f64,
    pub x_played: Vec<f64>,
}

pub struct CocoState {
    inner: InnerLearner,
    queue: QueueState,
    potential: ExpPotential,
    contract: BaseAlgoContract,
    err_f: ErrorTracker,
    err_g: ErrorTracker,
    ccv: f64,
    pending_f: Arc<dyn FirstOrderOracle>,
    pending_g: Arc<dyn FirstOrderOracle>,
    lipschitz_f_decl: f64,
    lipschitz_g_decl: f64,
    round: usize,
    instrument: bool,
    history: Vec<CocoStepRecord>,
}

struct ZeroPred;

impl FirstOrderOracle for ZeroPred {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn grad_lipschitz(&self) -> f64 {
        0.0
    }
}

impl CocoState {
    /// Wraps an inner learner. The inner learner must have been constructed
    /// with its declared Lipschitz bound set to the round-1 surrogate scale
    /// `V L_f + lambda L_g` (see [`CocoState::surrogate_lipschitz`]).
    pub fn new(
        inner: InnerLearner,
        lambda: f64,
        contract: BaseAlgoContract,
        lipschitz_f_decl: f64,
        lipschitz_g_decl: f64,
    ) -> Result<Self, CocoError> {
        let queue = QueueState::new(lambda)?;
        Ok(CocoState {
            inner,
            queue,
            potential: ExpPotential::default(),
            contract,
            err_f: ErrorTracker::new(),
            err_g: ErrorTracker::new(),
            ccv: 0.0,
            pending_f: Arc::new(ZeroPred),
            pending_g: Arc::new(ZeroPred),
            lipschitz_f_decl,
            lipschitz_g_decl,
            round: 1,
            instrument: false,
            history: Vec::new(),
        })
    }

    /// Installs round-1 predictions and rebuilds the inner learner's first
    /// play from the predicted surrogate (queue weight `exp(0) = 1`).
    pub fn with_initial_predictions(
        mut self,
        pred_f: Arc<dyn FirstOrderOracle>,
        pred_g: Arc<dyn FirstOrderOracle>,
    ) -> Result<Self, CocoError> {
        let weight = self.queue.lambda; // Phi'(0) = 1
        let sur = SurrogateFn {
            f: Arc::clone(&pred_f),
            g: Arc::clone(&pred_g),
            v: self.queue.v,
            weight,
            declared_lipschitz: self.queue.v * pred_f.grad_lipschitz()
                + weight * pred_g.grad_lipschitz(),
        };
        self.inner = match self.inner {
            InnerLearner::MirrorDescent(st) => {
                InnerLearner::MirrorDescent(st.with_initial_prediction(Box::new(sur))?)
            }
            InnerLearner::Experts(st) => {
                let at = st.current_mixed_anchor().to_vec();
                InnerLearner::Experts(st.with_initial_prediction(sur.gradient(&at))?)
            }
        };
        self.pending_f = pred_f;
        self.pending_g = pred_g;
        Ok(self)
    }

    pub fn with_instrumentation(mut self) -> Self {
        self.instrument = true;
        self.inner = match self.inner {
            InnerLearner::MirrorDescent(st) => {
                InnerLearner::MirrorDescent(st.with_instrumentation())
            }
            InnerLearner::Experts(st) => InnerLearner::Experts(st.with_instrumentation()),
        };
        self
    }

    /// Declared Lipschitz constant of the surrogate at queue weight
    /// `phi_prime`: `V L_f + lambda phi_prime L_g`. The multiplier scales the
    /// constraint term exactly as it does in the surrogate itself.
    pub fn surrogate_lipschitz(&self, phi_prime: f64) -> f64 {
        self.queue.v * self.lipschitz_f_decl + self.queue.lambda * phi_prime * self.lipschitz_g_decl
    }

    pub fn queue(&self) -> &QueueState {
        &self.queue
    }

    pub fn contract(&self) -> &BaseAlgoContract {
        &self.contract
    }

    pub fn inner(&self) -> &InnerLearner {
        &self.inner
    }

    pub fn ccv(&self) -> f64 {
        self.ccv
    }

    pub fn err_f(&self) -> &ErrorTracker {
        &self.err_f
    }

    pub fn err_g(&self) -> &ErrorTracker {
        &self.err_g
    }

    pub fn history(&self) -> &[CocoStepRecord] {
        &self.history
    }

    pub fn current_point(&self) -> &[f64] {
        self.inner.current_point()
    }

    /// Plays one meta-round. `f`/`g` are the revealed loss and constraint;
    /// the prediction pair targets the next round and must expose a predicted
    /// value alongside the gradient so the clipped-constraint subgradient can
    /// be formed.
    pub fn round(
        &mut self,
        f: Arc<dyn FirstOrderOracle>,
        g: Arc<dyn FirstOrderOracle>,
        next_pred_f: Arc<dyn FirstOrderOracle>,
        next_pred_g: Arc<dyn FirstOrderOracle>,
    ) -> Result<CocoRoundRecord, CocoError> {
        let t = self.round;
        let x = self.inner.current_point().to_vec();
        let f_value = f.value(&x);
        let g_value = g.value(&x);
        if !f_value.is_finite() {
            return Err(CocoError::NonFiniteOracle { round: t, what: "loss value" });
        }
        if !g_value.is_finite() {
            return Err(CocoError::NonFiniteOracle { round: t, what: "constraint value" });
        }
        let grad_f = f.gradient(&x);
        let grad_g = g.gradient(&x);
        if !vecops::all_finite(&grad_f) || !vecops::all_finite(&grad_g) {
            return Err(CocoError::NonFiniteOracle { round: t, what: "gradient" });
        }

        let dual = self.inner.dual_norm();
        let eps_f = {
            let diff = vecops::sub(&grad_f, &self.pending_f.gradient(&x));
            dual.value(&diff).powi(2)
        };
        // Violation errors compare clipped subgradients; the predicted value
        // decides the predicted clip.
        let eps_g = {
            let dim = x.len();
            let s = if g_value > 0.0 { grad_g.clone() } else { vec![0.0; dim] };
            let s_hat = if self.pending_g.value(&x) > 0.0 {
                self.pending_g.gradient(&x)
            } else {
                vec![0.0; dim]
            };
            let diff = vecops::sub(&s, &s_hat);
            dual.value(&diff).powi(2)
        };
        self.err_f.push(eps_f);
        self.err_g.push(eps_g);

        let q_before = self.queue.q;
        let phi_prime_before = self.potential.prime(q_before)?;
        let g_plus = self.queue.update(g_value);
        self.ccv += g_plus;
        let q_after = self.queue.q;
        let phi_prime_after = self.potential.prime(q_after)?;

        let v = self.queue.v;
        let lambda = self.queue.lambda;
        let sur_loss = SurrogateFn {
            f: Arc::clone(&f),
            g: Arc::clone(&g),
            v,
            weight: lambda * phi_prime_before,
            declared_lipschitz: self.surrogate_lipschitz(phi_prime_before),
        };
        // The predicted surrogate's declared constant is its smoothness
        // (prediction oracles report theirs); the step-size cap is raised
        // separately to the next surrogate's full declared scale, which is
        // known now because the queue update runs one round early.
        let sur_pred = SurrogateFn {
            f: Arc::clone(&next_pred_f),
            g: Arc::clone(&next_pred_g),
            v,
            weight: lambda * phi_prime_after,
            declared_lipschitz: v * next_pred_f.grad_lipschitz()
                + lambda * phi_prime_after * next_pred_g.grad_lipschitz(),
        };

        let next_scale = self.surrogate_lipschitz(phi_prime_after);
        let inner_record: RoundRecord = match &mut self.inner {
            InnerLearner::MirrorDescent(st) => {
                st.observe_lipschitz(next_scale);
                st.round(&sur_loss, Box::new(sur_pred))?
            }
            InnerLearner::Experts(st) => {
                let loss_vec = sur_loss.gradient(&x);
                let pred_vec = sur_pred.gradient(&x);
                st.round(&loss_vec, &pred_vec)?
            }
        };

        if self.instrument {
            self.history.push(CocoStepRecord {
                x: x.clone(),
                f,
                g,
                f_value,
                g_plus,
                q_before,
                q_after,
                phi_prime_before,
                phi_prime_after,
            });
        }

        self.pending_f = next_pred_f;
        self.pending_g = next_pred_g;
        self.round += 1;
        Ok(CocoRoundRecord {
            round: t,
            loss_value: f_value,
            g_value,
            g_plus,
            q_before,
            q_after,
            ccv: self.ccv,
            eps_f,
            eps_g,
            eps_surrogate: inner_record.eps,
            eta: inner_record.eta,
            x_played: x,
        })
    }

    /// Slack of the regret decomposition after `t` rounds:
    ///
    /// `Phi(Q_{t+1}) + V Regret_t(u) <= Regret_t^inner(u; L_1..t) + S_t`
    /// with `S_t = lambda sum g_tau^+(x_tau) (Phi'(Q_{tau+1}) - Phi'(Q_tau))`.
    ///
    /// Requires `u` feasible for every past constraint (up to the comparator
    /// tolerance 1e-8, below which its violations are treated as zero).
    pub fn decomposition_slack(&self, u: &[f64], t: usize) -> Result<f64, CocoError> {
        if !self.instrument {
            return Err(CocoError::NotInstrumented);
        }
        if t == 0 || t > self.history.len() {
            return Err(CocoError::NoSuchRound { round: t, len: self.history.len() });
        }
        const COMPARATOR_TOL: f64 = 1e-8;
        for (i, rec) in self.history[..t].iter().enumerate() {
            let gu = rec.g.value(u);
            if gu > COMPARATOR_TOL {
                return Err(CocoError::InfeasibleComparator { round: i + 1, violation: gu });
            }
        }
        let v = self.queue.v;
        let lambda = self.queue.lambda;
        let mut inner_regret = 0.0;
        let mut regret_f = 0.0;
        let mut shift = 0.0;
        for rec in &self.history[..t] {
            let f_u = rec.f.value(u);
            // u is certified feasible, so its clipped violation is zero and
            // the surrogate at u reduces to V f(u).
            let sur_x = v * rec.f_value + lambda * rec.phi_prime_before * rec.g_plus;
            let sur_u = v * f_u;
            inner_regret += sur_x - sur_u;
            regret_f += rec.f_value - f_u;
            shift += lambda * rec.g_plus * (rec.phi_prime_after - rec.phi_prime_before);
        }
        let phi_final = self.potential.value(self.history[t - 1].q_after)?;
        Ok(inner_regret + shift - phi_final - v * regret_f)
    }

    /// Decomposition slacks for every prefix `t = 1..len` in one pass.
    pub fn decomposition_slack_sweep(&self, u: &[f64]) -> Result<Vec<f64>, CocoError> {
        if !self.instrument {
            return Err(CocoError::NotInstrumented);
        }
        const COMPARATOR_TOL: f64 = 1e-8;
        for (i, rec) in self.history.iter().enumerate() {
            let gu = rec.g.value(u);
            if gu > COMPARATOR_TOL {
                return Err(CocoError::InfeasibleComparator { round: i + 1, violation: gu });
            }
        }
        let v = self.queue.v;
        let lambda = self.queue.lambda;
        let mut inner_regret = 0.0;
        let mut regret_f = 0.0;
        let mut shift = 0.0;
        let mut out = Vec::with_capacity(self.history.len());
        for rec in &self.history {
            let f_u = rec.f.value(u);
            inner_regret += v * rec.f_value + lambda * rec.phi_prime_before * rec.g_plus - v * f_u;
            regret_f += rec.f_value - f_u;
            shift += lambda * rec.g_plus * (rec.phi_prime_after - rec.phi_prime_before);
            let phi = self.potential.value(rec.q_after)?;
            out.push(inner_regret + shift - phi - v * regret_f);
        }
        Ok(out)
    }
}

/// Epoch lengths of the restart schedule for unknown horizons: powers of two,
/// the last one truncated so they sum to `total`.
pub fn doubling_epochs(total: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut remaining = total;
    let mut len = 1usize;
    while remaining > 0 {
        let l = len.min(remaining);
        out.push(l);
        remaining -= l;
        len = len.saturating_mul(2);
    }
    out
}
