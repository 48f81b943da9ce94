//! Synthetic adversaries: seeded loss/constraint generators with declared
//! bounds, plus the gradient predictors the learners consume.
//!
//! Round `t`'s oracles are a pure function of `(seed, t)`: parameters follow
//! closed-form sinusoidal orbits instead of a random walk, so `generate_round`
//! costs O(d) at any `t` and two calls with the same arguments are bitwise
//! identical. The drift rate bounds the per-round parameter change: an orbit
//! with amplitude vector `A` uses angular velocity `drift_rate / |A|`, and
//! `|sin(w(t+1)+p) - sin(wt+p)| <= w` does the rest.
//!
//! Every generated function respects the declared `F`, `G`, and Lipschitz
//! bounds on the whole domain by construction; the declared constants for
//! linear families are 1 (any positive constant is a valid gradient-Lipschitz
//! bound for a linear function, and the step-size caps need one).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function::{FirstOrderOracle, QuadraticForm};
use crate::geometry::{Domain, Norm};
use crate::rng::Rng;
use crate::vecops;

const SALT_LOSS_BASE: u64 = 0x10;
const SALT_LOSS_AMP: u64 = 0x11;
const SALT_LOSS_PHASE: u64 = 0x12;
const SALT_CON_A: u64 = 0x20;
const SALT_CON_A2: u64 = 0x21;
const SALT_CON_DIR: u64 = 0x22;
const SALT_CON_PHASE: u64 = 0x23;
const SALT_FEAS: u64 = 0x30;
const SALT_NOISE_F: u64 = 0x40;
const SALT_NOISE_G: u64 = 0x41;

/// Rounds per block in the switching constraint family.
const SWITCH_PERIOD: usize = 50;

/// Declared gradient-Lipschitz constant of the quadratic family. The true
/// constant is 1; the declared one keeps sqrt(2) headroom so prediction
/// sequences as smooth as the loss itself stay inside the per-step
/// smoothness gate of the adaptive schedule.
pub const QUADRATIC_RATE_LIPSCHITZ: f64 = 1.5;

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error("quadratic losses need a box or ball domain")]
    QuadraticNeedsEuclideanDomain,
    #[error("noise scale must be finite and >= 0, got {scale}")]
    BadNoiseScale { scale: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFamily {
    /// `f_t(x) = |x - theta_t|_2^2 / 2` with `theta_t` on a drifting orbit
    /// inside the domain.
    Quadratic,
    /// `f_t(x) = <c_t, x>` with `c_t` drifting on the unit dual-norm sphere.
    Linear,
    /// `f_t(x) = (-1)^(t+1) <c_0, x>`: the sign flips every round, the worst
    /// case for previous-function predictions.
    SignFlipping,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    /// `g = -1` everywhere: a declared constraint that never binds.
    #[default]
    None,
    /// One halfspace `<a, x> <= b`, constant over time.
    FixedHalfspace,
    /// The halfspace normal drifts along a fixed direction.
    DriftingHalfspace,
    /// Alternates between two halfspaces in blocks of 50 rounds.
    Switching,
}

/// Declared problem constants for a generated environment.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeclaredBounds {
    pub loss_bound: f64,
    pub constraint_bound: f64,
    pub lipschitz_f: f64,
    pub lipschitz_g: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub domain: Domain,
    pub loss: LossFamily,
    #[serde(default)]
    pub constraint: ConstraintFamily,
    #[serde(default)]
    pub drift_rate: f64,
    pub seed: u64,
}

/// Concrete generated function.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvFunction {
    /// `|x - center|_2^2 / 2`
    Quadratic { center: Vec<f64> },
    /// `<coeffs, x> - offset`
    Linear { coeffs: Vec<f64>, offset: f64 },
}

impl EnvFunction {
    pub fn linear_coeffs(&self) -> Option<&[f64]> {
        match self {
            EnvFunction::Linear { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }
}

impl FirstOrderOracle for EnvFunction {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            EnvFunction::Quadratic { center } => {
                let d = vecops::sub(x, center);
                0.5 * vecops::dot(&d, &d)
            }
            EnvFunction::Linear { coeffs, offset } => vecops::dot(coeffs, x) - offset,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            EnvFunction::Quadratic { center } => vecops::sub(x, center),
            EnvFunction::Linear { coeffs, .. } => coeffs.clone(),
        }
    }

    fn grad_lipschitz(&self) -> f64 {
        match self {
            EnvFunction::Quadratic { .. } => QUADRATIC_RATE_LIPSCHITZ,
            EnvFunction::Linear { .. } => 1.0,
        }
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(match self {
            EnvFunction::Quadratic { center } => QuadraticForm {
                quad: 1.0,
                linear: vecops::scale(center, -1.0),
                constant: 0.5 * vecops::dot(center, center),
            },
            EnvFunction::Linear { coeffs, offset } => {
                QuadraticForm { quad: 0.0, linear: coeffs.clone(), constant: -offset }
            }
        })
    }
}

impl EnvFunction {
    /// True gradient-Lipschitz constant (the smoothness of this function's
    /// gradient map, as opposed to the declared rate constant above).
    pub fn true_smoothness(&self) -> f64 {
        match self {
            EnvFunction::Quadratic { .. } => 1.0,
            EnvFunction::Linear { .. } => 0.0,
        }
    }
}

impl EnvironmentSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Dual norm used to size linear-loss vectors: L-infinity on the simplex,
    /// L2 elsewhere.
    fn dual_norm(&self) -> Norm {
        match self.domain {
            Domain::Simplex { .. } => Norm::LInf,
            _ => Norm::L2,
        }
    }

    fn primal_norm(&self) -> Norm {
        match self.domain {
            Domain::Simplex { .. } => Norm::L1,
            _ => Norm::L2,
        }
    }

    pub fn validate(&self) -> Result<(), EnvironmentError> {
        if self.loss == LossFamily::Quadratic
            && !matches!(self.domain, Domain::Box { .. } | Domain::L2Ball { .. })
        {
            return Err(EnvironmentError::QuadraticNeedsEuclideanDomain);
        }
        Ok(())
    }

    /// Declared bounds, sound on the whole domain. Linear families declare a
    /// gradient-Lipschitz constant of 1.
    pub fn declared_bounds(&self) -> DeclaredBounds {
        let loss_bound = match self.loss {
            LossFamily::Quadratic => 0.5 * self.domain.diameter(Norm::L2).powi(2),
            LossFamily::Linear | LossFamily::SignFlipping => match self.dual_norm() {
                // |<c, x>| <= |c|_2 |x|_2 = max |x|_2
                Norm::L2 => self.domain.max_l2_norm(),
                // |<c, x>| <= |c|_inf |x|_1 = 1 on the simplex
                _ => 1.0,
            },
        };
        let norm_cap = match self.constraint {
            ConstraintFamily::DriftingHalfspace => 1.0 + DRIFT_AMPLITUDE,
            _ => 1.0,
        };
        let constraint_bound = match self.constraint {
            ConstraintFamily::None => 1.0,
            // |<a, x - x_feas>| <= |a| * diameter in the matching norm pair.
            _ => norm_cap * self.domain.diameter(self.primal_norm()),
        };
        let lipschitz_f = match self.loss {
            LossFamily::Quadratic => QUADRATIC_RATE_LIPSCHITZ,
            LossFamily::Linear | LossFamily::SignFlipping => 1.0,
        };
        DeclaredBounds { loss_bound, constraint_bound, lipschitz_f, lipschitz_g: 1.0 }
    }

    /// True smoothness of the loss family's gradient map (1 for quadratics,
    /// 0 for linear families whose gradients are constant).
    pub fn loss_smoothness(&self) -> f64 {
        match self.loss {
            LossFamily::Quadratic => 1.0,
            LossFamily::Linear | LossFamily::SignFlipping => 0.0,
        }
    }

    /// True smoothness of the constraint family's gradient map; every
    /// implemented family is a halfspace, so 0.
    pub fn constraint_smoothness(&self) -> f64 {
        0.0
    }

    /// The designated common feasible point: every generated constraint
    /// satisfies `g_t(x_feas) <= 0` by construction.
    pub fn feasible_point(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut rng = Rng::for_index(self.seed, SALT_FEAS, 0);
        match &self.domain {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| {
                    let c = 0.5 * (l + u);
                    c + 0.3 * (u - l) * 0.5 * (2.0 * rng.next_f64() - 1.0)
                })
                .collect(),
            Domain::L2Ball { center, radius } => {
                let dir = unit_gauss(&mut rng, dim, Norm::L2);
                vecops::add_scaled(center, 0.3 * radius, &dir)
            }
            Domain::Simplex { dim } => {
                let w: Vec<f64> = (0..*dim).map(|_| rng.range(0.2, 1.0)).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            }
            Domain::HalfspaceIntersection { .. } => self.domain.centroid(),
        }
    }

    /// Generates round `t`'s loss and constraint oracles (`t >= 1`).
    /// Deterministic given `(seed, t)`.
    pub fn generate_round(&self, t: usize) -> (EnvFunction, EnvFunction) {
        (self.loss_at(t), self.constraint_at(t))
    }

    fn loss_at(&self, t: usize) -> EnvFunction {
        let dim = self.dim();
        match self.loss {
            LossFamily::Quadratic => {
                let c = self.domain.centroid();
                let mut amp_rng = Rng::for_index(self.seed, SALT_LOSS_AMP, 0);
                let amp: Vec<f64> = match &self.domain {
                    Domain::Box { lower, upper } => lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| 0.35 * (u - l) * amp_rng.range(0.5, 1.0))
                        .collect(),
                    Domain::L2Ball { radius, .. } => {
                        let dir = unit_gauss(&mut amp_rng, dim, Norm::L2);
                        vecops::scale(&dir, 0.6 * radius)
                    }
                    _ => vec![0.0; dim],
                };
                let omega = orbit_rate(self.drift_rate, &amp);
                let mut phase_rng = Rng::for_index(self.seed, SALT_LOSS_PHASE, 0);
                let center: Vec<f64> = c
                    .iter()
                    .zip(&amp)
                    .map(|(ci, ai)| {
                        let phase = 2.0 * PI * phase_rng.next_f64();
                        ci + ai * (omega * t as f64 + phase).sin()
                    })
                    .collect();
                EnvFunction::Quadratic { center }
            }
            LossFamily::Linear => {
                let mut base_rng = Rng::for_index(self.seed, SALT_LOSS_BASE, 0);
                let base: Vec<f64> = (0..dim)
                    .map(|_| {
                        let mag = base_rng.range(0.6, 1.0);
                        if base_rng.next_f64() < 0.5 {
                            -mag
                        } else {
                            mag
                        }
                    })
                    .collect();
                let mut amp_rng = Rng::for_index(self.seed, SALT_LOSS_AMP, 0);
                let amp: Vec<f64> = (0..dim).map(|_| amp_rng.range(0.2, 0.5)).collect();
                let omega = orbit_rate(self.drift_rate, &amp);
                let mut phase_rng = Rng::for_index(self.seed, SALT_LOSS_PHASE, 0);
                let raw: Vec<f64> = base
                    .iter()
                    .zip(&amp)
                    .map(|(b, a)| {
                        let phase = 2.0 * PI * phase_rng.next_f64();
                        b + a * (omega * t as f64 + phase).sin()
                    })
                    .collect();
                let n = self.dual_norm().value(&raw).max(f64::MIN_POSITIVE);
                EnvFunction::Linear { coeffs: vecops::scale(&raw, 1.0 / n), offset: 0.0 }
            }
            LossFamily::SignFlipping => {
                let mut base_rng = Rng::for_index(self.seed, SALT_LOSS_BASE, 0);
                let base: Vec<f64> = (0..dim).map(|_| base_rng.range(-1.0, 1.0)).collect();
                let n = self.dual_norm().value(&base).max(f64::MIN_POSITIVE);
                let sign = if t % 2 == 1 { 1.0 } else { -1.0 };
                EnvFunction::Linear { coeffs: vecops::scale(&base, sign / n), offset: 0.0 }
            }
        }
    }

    fn constraint_at(&self, t: usize) -> EnvFunction {
        let dim = self.dim();
        match self.constraint {
            ConstraintFamily::None => EnvFunction::Linear { coeffs: vec![0.0; dim], offset: 1.0 },
            ConstraintFamily::FixedHalfspace => {
                let a = self.constraint_base_normal();
                let b = vecops::dot(&a, &self.feasible_point());
                EnvFunction::Linear { coeffs: a, offset: b }
            }
            ConstraintFamily::DriftingHalfspace => {
                let a_base = self.constraint_base_normal();
                let mut dir_rng = Rng::for_index(self.seed, SALT_CON_DIR, 0);
                let dir = unit_gauss(&mut dir_rng, dim, Norm::L2);
                let omega =
                    if DRIFT_AMPLITUDE > 0.0 { self.drift_rate / DRIFT_AMPLITUDE } else { 0.0 };
                let mut phase_rng = Rng::for_index(self.seed, SALT_CON_PHASE, 0);
                let phase = 2.0 * PI * phase_rng.next_f64();
                let s = (omega * t as f64 + phase).sin();
                let a = vecops::add_scaled(&a_base, DRIFT_AMPLITUDE * s, &dir);
                let b = vecops::dot(&a, &self.feasible_point());
                EnvFunction::Linear { coeffs: a, offset: b }
            }
            ConstraintFamily::Switching => {
                let block = (t - 1) / SWITCH_PERIOD;
                let a = if block.is_multiple_of(2) {
                    self.constraint_base_normal()
                } else {
                    let mut rng = Rng::for_index(self.seed, SALT_CON_A2, 0);
                    unit_gauss(&mut rng, dim, Norm::L2)
                };
                let b = vecops::dot(&a, &self.feasible_point());
                EnvFunction::Linear { coeffs: a, offset: b }
            }
        }
    }

    fn constraint_base_normal(&self) -> Vec<f64> {
        let mut rng = Rng::for_index(self.seed, SALT_CON_A, 0);
        unit_gauss(&mut rng, self.dim(), Norm::L2)
    }
}

/// Drift amplitude of the constraint-normal orbit.
const DRIFT_AMPLITUDE: f64 = 0.5;

fn orbit_rate(drift_rate: f64, amp: &[f64]) -> f64 {
    let n = vecops::l2_norm(amp);
    if drift_rate > 0.0 && n > 0.0 {
        drift_rate / n
    } else {
        0.0
    }
}

fn unit_gauss(rng: &mut Rng, dim: usize, norm: Norm) -> Vec<f64> {
    let v = rng.gauss_vec(dim, 1.0);
    let n = norm.value(&v).max(f64::MIN_POSITIVE);
    vecops::scale(&v, 1.0 / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    Zero,
    PreviousFunction,
    Perfect,
    NoisyPerfect,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    #[serde(default)]
    pub noise_scale: f64,
}

impl PredictorSpec {
    pub fn zero() -> Self {
        PredictorSpec { kind: PredictorKind::Zero, noise_scale: 0.0 }
    }

    pub fn previous_function() -> Self {
        PredictorSpec { kind: PredictorKind::PreviousFunction, noise_scale: 0.0 }
    }

    pub fn perfect() -> Self {
        PredictorSpec { kind: PredictorKind::Perfect, noise_scale: 0.0 }
    }

    pub fn noisy_perfect(noise_scale: f64) -> Self {
        PredictorSpec { kind: PredictorKind::NoisyPerfect, noise_scale }
    }

    pub fn validate(&self) -> Result<(), EnvironmentError> {
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(EnvironmentError::BadNoiseScale { scale: self.noise_scale });
        }
        Ok(())
    }

    /// Declared smoothness of this prediction sequence: 0 for the constant
    /// zero prediction, the family's true smoothness otherwise (previous,
    /// perfect, and gradient-noised predictions all inherit it).
    pub fn smoothness(&self, family_smoothness: f64) -> f64 {
        match self.kind {
            PredictorKind::Zero => 0.0,
            _ => family_smoothness,
        }
    }

    /// Builds the prediction pair for round `next_round`, given the newest
    /// observed pair (`None` before round 1). The previous-function kind
    /// falls back to the zero prediction for round 1; the noisy kind
    /// perturbs the gradient with a per-round Gaussian vector but keeps the
    /// predicted value exact (the clip decision stays clean).
    pub fn make(
        &self,
        env: &EnvironmentSpec,
        next_round: usize,
        previous: Option<&(EnvFunction, EnvFunction)>,
    ) -> (PredFunction, PredFunction) {
        let dim = env.dim();
        match self.kind {
            PredictorKind::Zero => (PredFunction::Zero { dim }, PredFunction::Zero { dim }),
            PredictorKind::PreviousFunction => match previous {
                Some((f, g)) => (PredFunction::Exact(f.clone()), PredFunction::Exact(g.clone())),
                None => (PredFunction::Zero { dim }, PredFunction::Zero { dim }),
            },
            PredictorKind::Perfect => {
                let (f, g) = env.generate_round(next_round);
                (PredFunction::Exact(f), PredFunction::Exact(g))
            }
            PredictorKind::NoisyPerfect => {
                let (f, g) = env.generate_round(next_round);
                let mut rf = Rng::for_index(env.seed, SALT_NOISE_F, next_round as u64);
                let mut rg = Rng::for_index(env.seed, SALT_NOISE_G, next_round as u64);
                (
                    PredFunction::NoisyGradient {
                        inner: f,
                        noise: rf.gauss_vec(dim, self.noise_scale),
                    },
                    PredFunction::NoisyGradient {
                        inner: g,
                        noise: rg.gauss_vec(dim, self.noise_scale),
                    },
                )
            }
        }
    }
}

/// A gradient prediction as a first-order oracle.
#[derive(Clone, Debug)]
pub enum PredFunction {
    Zero { dim: usize },
    Exact(EnvFunction),
    NoisyGradient { inner: EnvFunction, noise: Vec<f64> },
}

impl FirstOrderOracle for PredFunction {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            PredFunction::Zero { .. } => 0.0,
            PredFunction::Exact(f) => f.value(x),
            PredFunction::NoisyGradient { inner, .. } => inner.value(x),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PredFunction::Zero { dim } => vec![0.0; *dim],
            PredFunction::Exact(f) => f.gradient(x),
            PredFunction::NoisyGradient { inner, noise } => {
                vecops::add_scaled(&inner.gradient(x), 1.0, noise)
            }
        }
    }

    fn grad_lipschitz(&self) -> f64 {
        // Predictions declare their smoothness: the per-round noise vector is
        // constant, so the noised gradient map is as smooth as the inner one.
        match self {
            PredFunction::Zero { .. } => 0.0,
            PredFunction::Exact(f) => f.true_smoothness(),
            PredFunction::NoisyGradient { inner, .. } => inner.true_smoothness(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_env(loss: LossFamily, constraint: ConstraintFamily, drift: f64) -> EnvironmentSpec {
        EnvironmentSpec {
            domain: Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
            loss,
            constraint,
            drift_rate: drift,
            seed: 42,
        }
    }

    #[test]
    fn same_round_is_bitwise_identical() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::DriftingHalfspace, 0.05);
        for t in [1, 7, 1000] {
            let (f1, g1) = env.generate_round(t);
            let (f2, g2) = env.generate_round(t);
            assert_eq!(f1, f2);
            assert_eq!(g1, g2);
        }
    }

    #[test]
    fn fixed_halfspace_never_moves() {
        let env = box_env(LossFamily::Linear, ConstraintFamily::FixedHalfspace, 0.3);
        let (_, g1) = env.generate_round(1);
        for t in [2, 50, 999] {
            let (_, gt) = env.generate_round(t);
            assert_eq!(g1, gt);
        }
    }

    #[test]
    fn zero_drift_quadratic_is_stationary() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::None, 0.0);
        let (f1, _) = env.generate_round(1);
        let (f9, _) = env.generate_round(9);
        assert_eq!(f1, f9);
    }

    #[test]
    fn drift_rate_bounds_per_round_center_motion() {
        let drift = 0.03;
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::None, drift);
        for t in 1..200 {
            let (EnvFunction::Quadratic { center: a }, _) = env.generate_round(t) else {
                panic!("quadratic expected")
            };
            let (EnvFunction::Quadratic { center: b }, _) = env.generate_round(t + 1) else {
                panic!("quadratic expected")
            };
            assert!(vecops::l2_norm(&vecops::sub(&a, &b)) <= drift + 1e-12);
        }
    }

    #[test]
    fn quadratic_centers_stay_inside_the_box() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::None, 0.2);
        for t in 1..500 {
            let (EnvFunction::Quadratic { center }, _) = env.generate_round(t) else {
                panic!("quadratic expected")
            };
            assert!(env.domain.contains(&center, 1e-12), "t={t} center {center:?}");
        }
    }

    #[test]
    fn linear_losses_have_unit_dual_norm() {
        let env = box_env(LossFamily::Linear, ConstraintFamily::None, 0.05);
        for t in [1, 13, 400] {
            let (f, _) = env.generate_round(t);
            let c = f.linear_coeffs().unwrap();
            assert!((vecops::l2_norm(c) - 1.0).abs() < 1e-12);
        }
        let simplex_env = EnvironmentSpec {
            domain: Domain::Simplex { dim: 5 },
            loss: LossFamily::Linear,
            constraint: ConstraintFamily::None,
            drift_rate: 0.05,
            seed: 7,
        };
        let (f, _) = simplex_env.generate_round(3);
        assert!((vecops::linf_norm(f.linear_coeffs().unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_flipping_alternates_every_round() {
        let env = box_env(LossFamily::SignFlipping, ConstraintFamily::None, 0.0);
        let (f1, _) = env.generate_round(1);
        let (f2, _) = env.generate_round(2);
        let (f3, _) = env.generate_round(3);
        let c1 = f1.linear_coeffs().unwrap().to_vec();
        let c2 = f2.linear_coeffs().unwrap().to_vec();
        let c3 = f3.linear_coeffs().unwrap().to_vec();
        assert_eq!(c1, vecops::scale(&c2, -1.0));
        assert_eq!(c1, c3);
    }

    #[test]
    fn feasible_point_satisfies_every_constraint_family() {
        for fam in [
            ConstraintFamily::None,
            ConstraintFamily::FixedHalfspace,
            ConstraintFamily::DriftingHalfspace,
            ConstraintFamily::Switching,
        ] {
            let env = box_env(LossFamily::Linear, fam, 0.07);
            let xf = env.feasible_point();
            assert!(env.domain.contains(&xf, 1e-12), "{fam:?}");
            for t in 1..300 {
                let (_, g) = env.generate_round(t);
                assert!(g.value(&xf) <= 1e-12, "{fam:?} t={t}: {}", g.value(&xf));
            }
        }
    }

    #[test]
    fn declared_bounds_hold_on_domain_samples() {
        let mut rng = Rng::new(3);
        for (loss, fam) in [
            (LossFamily::Quadratic, ConstraintFamily::DriftingHalfspace),
            (LossFamily::Linear, ConstraintFamily::FixedHalfspace),
            (LossFamily::SignFlipping, ConstraintFamily::Switching),
        ] {
            let env = box_env(loss, fam, 0.05);
            let b = env.declared_bounds();
            for _ in 0..10_000 {
                let t = 1 + (rng.next_u64() % 500) as usize;
                let (f, g) = env.generate_round(t);
                let x = vec![rng.next_f64(), rng.next_f64()];
                let y = vec![rng.next_f64(), rng.next_f64()];
                assert!(f.value(&x).abs() <= b.loss_bound + 1e-12);
                assert!(g.value(&x).abs() <= b.constraint_bound + 1e-12);
                let df = vecops::l2_norm(&vecops::sub(&f.gradient(&x), &f.gradient(&y)));
                let dx = vecops::l2_norm(&vecops::sub(&x, &y));
                assert!(df <= b.lipschitz_f * dx + 1e-12);
            }
        }
    }

    #[test]
    fn perfect_prediction_matches_next_round() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::FixedHalfspace, 0.05);
        let spec = PredictorSpec::perfect();
        let (pf, _) = spec.make(&env, 5, None);
        let (f5, _) = env.generate_round(5);
        let x = [0.3, 0.4];
        assert_eq!(pf.gradient(&x), f5.gradient(&x));
        assert_eq!(pf.value(&x), f5.value(&x));
    }

    #[test]
    fn previous_function_falls_back_to_zero_at_round_one() {
        let env = box_env(LossFamily::Linear, ConstraintFamily::None, 0.0);
        let spec = PredictorSpec::previous_function();
        let (pf, pg) = spec.make(&env, 1, None);
        let x = [0.5, 0.5];
        assert_eq!(pf.gradient(&x), vec![0.0, 0.0]);
        assert_eq!(pg.gradient(&x), vec![0.0, 0.0]);
        assert_eq!(pf.grad_lipschitz(), 0.0);
    }

    #[test]
    fn noisy_prediction_keeps_value_exact_and_is_reproducible() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::None, 0.0);
        let spec = PredictorSpec::noisy_perfect(0.5);
        let (p1, _) = spec.make(&env, 3, None);
        let (p2, _) = spec.make(&env, 3, None);
        let (f3, _) = env.generate_round(3);
        let x = [0.2, 0.9];
        assert_eq!(p1.gradient(&x), p2.gradient(&x));
        assert_eq!(p1.value(&x), f3.value(&x));
        assert_ne!(p1.gradient(&x), f3.gradient(&x));
    }

    #[test]
    fn noise_scale_zero_reduces_to_perfect() {
        let env = box_env(LossFamily::Quadratic, ConstraintFamily::None, 0.1);
        let noisy = PredictorSpec::noisy_perfect(0.0);
        let (pf, _) = noisy.make(&env, 4, None);
        let (f4, _) = env.generate_round(4);
        let x = [0.7, 0.1];
        assert_eq!(pf.gradient(&x), f4.gradient(&x));
    }

    #[test]
    fn smoothness_declaration_by_kind() {
        assert_eq!(PredictorSpec::zero().smoothness(1.0), 0.0);
        assert_eq!(PredictorSpec::previous_function().smoothness(1.0), 1.0);
        assert_eq!(PredictorSpec::perfect().smoothness(1.0), 1.0);
        // Linear predictions are constant vectors.
        let f = EnvFunction::Linear { coeffs: vec![1.0, 0.0], offset: 0.0 };
        assert_eq!(PredFunction::Exact(f).grad_lipschitz(), 0.0);
    }

    #[test]
    fn switching_family_alternates_in_blocks() {
        let env = box_env(LossFamily::Linear, ConstraintFamily::Switching, 0.0);
        let (_, g1) = env.generate_round(1);
        let (_, g50) = env.generate_round(50);
        let (_, g51) = env.generate_round(51);
        let (_, g101) = env.generate_round(101);
        assert_eq!(g1, g50);
        assert_ne!(g1, g51);
        assert_eq!(g1, g101);
    }

    #[test]
    fn quadratic_on_simplex_is_rejected() {
        let env = EnvironmentSpec {
            domain: Domain::Simplex { dim: 3 },
            loss: LossFamily::Quadratic,
            constraint: ConstraintFamily::None,
            drift_rate: 0.0,
            seed: 1,
        };
        assert!(env.validate().is_err());
    }
}
