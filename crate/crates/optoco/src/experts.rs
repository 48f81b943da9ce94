//! Optimistic mirror descent over the simplex with uniform mixing.
//!
//! The entropic divergence is unbounded near the simplex boundary, so the
//! anchor is pulled back toward uniform after every true-gradient step:
//! `y_{t+1} = (1 - delta) * anchor_{t+1} + delta/d * 1` with `delta = 1/T`.
//! Every coordinate of the mixed anchor then stays at least `delta/d`, which
//! bounds the divergence to any comparator by `log(d/delta)`.
//!
//! Predictions here are constant vectors (the upcoming loss vector is
//! predicted, not a function of the play), so the prediction error
//! `eps_t = |l_t - lhat_t|_inf^2` is the same at every evaluation point.

use crate::geometry::{self, BregmanGeometry, Domain};
use crate::omd::{ErrorTracker, LearnerError, RoundRecord};
use crate::vecops;

#[derive(Clone, Copy, Debug)]
pub struct ExpertConfig {
    pub dim: usize,
    pub horizon: usize,
    /// Mixing weight toward uniform; `1/horizon`.
    pub delta: f64,
}

impl ExpertConfig {
    pub fn new(dim: usize, horizon: usize) -> Result<Self, LearnerError> {
        if dim < 2 {
            return Err(LearnerError::TooFewExperts { dim });
        }
        if horizon < 2 {
            return Err(LearnerError::BadMixingWeight { delta: 1.0 / horizon.max(1) as f64 });
        }
        Ok(ExpertConfig { dim, horizon, delta: 1.0 / horizon as f64 })
    }

    pub fn with_delta(dim: usize, horizon: usize, delta: f64) -> Result<Self, LearnerError> {
        if dim < 2 {
            return Err(LearnerError::TooFewExperts { dim });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LearnerError::BadMixingWeight { delta });
        }
        Ok(ExpertConfig { dim, horizon, delta })
    }

    /// `log(d^2 T e)`, the divergence budget behind the step-size schedule.
    pub fn log_budget(&self) -> f64 {
        ((self.dim * self.dim) as f64 * self.horizon as f64 * std::f64::consts::E).ln()
    }
}

/// Adaptive step size: `sqrt(log(d^2 T e)) * min(1/(sqrt(E_{t-1}) + sqrt(E_{t-2})), 1)`.
pub fn expert_adaptive_eta(errors: &ErrorTracker, config: &ExpertConfig) -> f64 {
    let denom = errors.total().sqrt() + errors.lag1().sqrt();
    let ratio = if denom == 0.0 { 1.0 } else { (1.0 / denom).min(1.0) };
    config.log_budget().sqrt() * ratio
}

/// Regret bound for the adaptive schedule:
/// `2 sqrt(log(d^2 T e)) (sqrt(E_T) + 1)`.
pub fn expert_regret_bound(
    dim: usize,
    horizon: usize,
    err_total: f64,
) -> Result<f64, LearnerError> {
    let config = ExpertConfig::new(dim, horizon)?;
    Ok(2.0 * config.log_budget().sqrt() * (err_total.sqrt() + 1.0))
}

#[derive(Clone, Debug)]
pub struct ExpertStepRecord {
    pub x: Vec<f64>,
    pub mixed: Vec<f64>,
    pub pre_mix: Vec<f64>,
    pub eps: f64,
    pub eta: f64,
}

pub struct ExpertState {
    config: ExpertConfig,
    geometry: BregmanGeometry,
    domain: Domain,
    x: Vec<f64>,
    /// Pre-mixture anchor.
    pre_mix: Vec<f64>,
    /// Mixed anchor; every coordinate at least `delta/d`.
    mixed: Vec<f64>,
    eta: f64,
    errors: ErrorTracker,
    pending: Vec<f64>,
    round: usize,
    instrument: bool,
    history: Vec<ExpertStepRecord>,
}

impl ExpertState {
    pub fn init(config: ExpertConfig, x1: Option<Vec<f64>>) -> Result<Self, LearnerError> {
        let domain = Domain::Simplex { dim: config.dim };
        let pre_mix = match x1 {
            Some(p) => {
                if !domain.contains(&p, 1e-9) {
                    return Err(LearnerError::BadInitialPoint);
                }
                p
            }
            None => domain.centroid(),
        };
        let mixed = mix(&pre_mix, config.delta);
        let errors = ErrorTracker::new();
        let eta = expert_adaptive_eta(&errors, &config);
        Ok(ExpertState {
            config,
            geometry: BregmanGeometry::entropic(),
            domain,
            x: mixed.clone(),
            pre_mix,
            mixed,
            eta,
            errors,
            pending: vec![0.0; config.dim],
            round: 1,
            instrument: false,
            history: Vec::new(),
        })
    }

    /// Replaces the round-1 predicted loss vector and recomputes the first
    /// play as the optimistic step from the mixed anchor.
    pub fn with_initial_prediction(mut self, pred: Vec<f64>) -> Result<Self, LearnerError> {
        self.check_vec(&pred)?;
        self.x = geometry::mirror_step(&self.geometry, &self.domain, &self.mixed, &pred, self.eta)?;
        self.pending = pred;
        Ok(self)
    }

    pub fn with_instrumentation(mut self) -> Self {
        self.instrument = true;
        self
    }

    pub fn config(&self) -> &ExpertConfig {
        &self.config
    }

    pub fn current_point(&self) -> &[f64] {
        &self.x
    }

    pub fn current_mixed_anchor(&self) -> &[f64] {
        &self.mixed
    }

    pub fn current_eta(&self) -> f64 {
        self.eta
    }

    pub fn errors(&self) -> &ErrorTracker {
        &self.errors
    }

    pub fn history(&self) -> &[ExpertStepRecord] {
        &self.history
    }

    fn check_vec(&self, v: &[f64]) -> Result<(), LearnerError> {
        if v.len() != self.config.dim {
            return Err(LearnerError::BadVectorLength { expected: self.config.dim, got: v.len() });
        }
        if !vecops::all_finite(v) {
            return Err(LearnerError::NonFiniteOracle { round: self.round, what: "loss vector" });
        }
        Ok(())
    }

    /// Plays one round on the observed loss vector; `next_prediction` is the
    /// constant vector predicting the next round's losses.
    pub fn round(
        &mut self,
        losses: &[f64],
        next_prediction: &[f64],
    ) -> Result<RoundRecord, LearnerError> {
        self.check_vec(losses)?;
        self.check_vec(next_prediction)?;
        let t = self.round;
        let loss_value = vecops::dot(losses, &self.x);

        let diff = vecops::sub(losses, &self.pending);
        let eps = vecops::linf_norm(&diff).powi(2);
        self.errors.push(eps);

        let eta = self.eta;
        let eta_next = expert_adaptive_eta(&self.errors, &self.config);

        let pre_mix =
            geometry::mirror_step(&self.geometry, &self.domain, &self.mixed, losses, eta)?;
        let mixed = mix(&pre_mix, self.config.delta);
        let next_x =
            geometry::mirror_step(&self.geometry, &self.domain, &mixed, next_prediction, eta_next)?;

        debug_assert!(self.domain.contains(&next_x, 1e-9));
        debug_assert!(
            mixed.iter().all(|v| *v >= self.config.delta / self.config.dim as f64 - 1e-15),
            "mixed anchor lost its floor"
        );

        if self.instrument {
            self.history.push(ExpertStepRecord {
                x: self.x.clone(),
                mixed: self.mixed.clone(),
                pre_mix: pre_mix.clone(),
                eps,
                eta,
            });
        }

        let record = RoundRecord {
            round: t,
            loss_value,
            eps,
            eta,
            eta_next,
            x_played: std::mem::replace(&mut self.x, next_x),
            gradient: if self.instrument { Some(losses.to_vec()) } else { None },
        };
        self.pre_mix = pre_mix;
        self.mixed = mixed;
        self.eta = eta_next;
        self.pending = next_prediction.to_vec();
        self.round += 1;
        Ok(record)
    }
}

fn mix(x: &[f64], delta: f64) -> Vec<f64> {
    let d = x.len() as f64;
    x.iter().map(|v| (1.0 - delta) * v + delta / d).collect()
}

/// Slacks of the two mixing inequalities for `y = (1-delta) x~ + delta/d * 1`:
///
/// 1. `KL(u; y) <= delta log d + KL(u; x~)`
/// 2. `KL(u; y) <= log(d / delta)`
///
/// Both nonnegative for simplex points. The first slack is `+inf` whenever
/// `KL(u; x~)` is infinite.
pub fn mixing_divergence_slacks(u: &[f64], x_tilde: &[f64], delta: f64, dim: usize) -> (f64, f64) {
    assert_eq!(u.len(), dim);
    assert_eq!(x_tilde.len(), dim);
    let geo = BregmanGeometry::entropic();
    let y = mix(x_tilde, delta);
    let kl_uy = geometry::bregman_div(&geo, u, &y);
    let kl_ux = geometry::bregman_div(&geo, u, x_tilde);
    let d = dim as f64;
    (delta * d.ln() + kl_ux - kl_uy, (d / delta).ln() - kl_uy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_single_expert() {
        assert!(matches!(ExpertConfig::new(1, 10), Err(LearnerError::TooFewExperts { .. })));
        assert!(expert_regret_bound(1, 10, 0.0).is_err());
    }

    #[test]
    fn adaptive_eta_no_history_matches_closed_form() {
        let cfg = ExpertConfig::new(2, 10).unwrap();
        let eta = expert_adaptive_eta(&ErrorTracker::new(), &cfg);
        // log(4 * 10 * e) = log(40) + 1
        let expect = (40.0_f64.ln() + 1.0).sqrt();
        assert!((eta - expect).abs() < 1e-12);
        assert!((eta - 2.1654).abs() < 1e-3, "eta {eta}");
    }

    #[test]
    fn adaptive_eta_halves_with_unit_error_history() {
        let cfg = ExpertConfig::new(2, 10).unwrap();
        let mut tr = ErrorTracker::new();
        tr.push(4.0); // E_{t-1} = 4, E_{t-2} = 0
        let eta = expert_adaptive_eta(&tr, &cfg);
        assert!((eta - 0.5 * (40.0_f64.ln() + 1.0).sqrt()).abs() < 1e-12);
        assert!((eta - 1.0827).abs() < 1e-3);
    }

    #[test]
    fn adaptive_eta_vanishes_with_huge_errors() {
        let cfg = ExpertConfig::new(2, 10).unwrap();
        let mut tr = ErrorTracker::new();
        tr.push(1e18);
        tr.push(1e18);
        let eta = expert_adaptive_eta(&tr, &cfg);
        assert!(eta > 0.0 && eta < 1e-8);
    }

    #[test]
    fn regret_bound_values() {
        let b = expert_regret_bound(2, 10, 0.0).unwrap();
        assert!((b - 2.0 * (40.0_f64.ln() + 1.0).sqrt()).abs() < 1e-12);
        assert!((b - 4.3308).abs() < 1e-3);
        let b9 = expert_regret_bound(2, 10, 9.0).unwrap();
        assert!((b9 - 8.0 * (40.0_f64.ln() + 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_matches_hand_computed_mixture() {
        let cfg = ExpertConfig::with_delta(2, 100, 0.01).unwrap();
        let mut st = ExpertState::init(cfg, None).unwrap();
        // Force eta_t = 1 by constructing the state manually via one round of
        // direct fields is unnecessary: use with_delta and inspect the pieces.
        st.eta = 1.0;
        let rec = st.round(&[std::f64::consts::LN_2, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(rec.round, 1);
        assert!((st.pre_mix[0] - 1.0 / 3.0).abs() < 1e-12, "{:?}", st.pre_mix);
        assert!((st.pre_mix[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((st.mixed[0] - 0.335).abs() < 1e-12, "{:?}", st.mixed);
        assert!((st.mixed[1] - 0.665).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_scores_zero_error() {
        let cfg = ExpertConfig::new(3, 50).unwrap();
        let l1 = vec![0.3, 0.1, 0.9];
        let mut st =
            ExpertState::init(cfg, None).unwrap().with_initial_prediction(l1.clone()).unwrap();
        let rec = st.round(&l1, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(rec.eps, 0.0);
    }

    #[test]
    fn zero_losses_leave_anchor_on_mixed_orbit() {
        let cfg = ExpertConfig::new(4, 20).unwrap();
        let mut st = ExpertState::init(cfg, None).unwrap();
        let zeros = vec![0.0; 4];
        for _ in 0..5 {
            let y_before = st.mixed.clone();
            st.round(&zeros, &zeros).unwrap();
            // mirror step with zero losses returns the mixed anchor verbatim
            assert_eq!(st.pre_mix, y_before);
            // uniform is a fixed point of mixing
            for v in st.current_point() {
                assert!((v - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn anchor_floor_holds_under_extreme_losses() {
        let cfg = ExpertConfig::new(3, 10).unwrap();
        let mut st = ExpertState::init(cfg, None).unwrap();
        let floor = cfg.delta / 3.0;
        for t in 0..30 {
            let big =
                vec![50.0 * ((t % 3 == 0) as u8 as f64), 50.0 * ((t % 3 == 1) as u8 as f64), 0.0];
            st.round(&big, &[0.0; 3]).unwrap();
            for v in st.current_mixed_anchor() {
                assert!(*v >= floor - 1e-15);
            }
            let s: f64 = st.current_point().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mixing_slacks_at_uniform_are_nonnegative() {
        let u = vec![0.5, 0.5];
        let (s1, s2) = mixing_divergence_slacks(&u, &u, 0.5, 2);
        assert!(s1 >= 0.0 && s2 >= 0.0);
    }

    #[test]
    fn mixing_slacks_on_vertex_comparator() {
        let (s1, s2) = mixing_divergence_slacks(&[1.0, 0.0], &[0.5, 0.5], 0.5, 2);
        assert!(s1 >= -1e-12, "s1 {s1}");
        assert!(s2 >= -1e-12, "s2 {s2}");
    }

    #[test]
    fn second_mixing_inequality_binds_near_degenerate_anchor() {
        let (s1, s2) = mixing_divergence_slacks(&[1.0, 0.0], &[1e-9, 1.0 - 1e-9], 0.1, 2);
        assert!(s1 >= -1e-10);
        assert!(s2 >= -1e-10, "s2 {s2}");
        // The second bound is close to tight here.
        assert!(s2 < 0.2, "s2 should bind near log(d/delta), got {s2}");
    }

    #[test]
    fn rejects_mismatched_vectors() {
        let cfg = ExpertConfig::new(3, 50).unwrap();
        let mut st = ExpertState::init(cfg, None).unwrap();
        assert!(st.round(&[0.0, 1.0], &[0.0; 3]).is_err());
        assert!(st.round(&[0.0, 1.0, f64::NAN], &[0.0; 3]).is_err());
    }
}
