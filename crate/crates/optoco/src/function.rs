//! First-order oracles: functions exposing value and gradient at a point.
//!
//! Losses, constraints, and gradient predictions all share this shape. Each
//! oracle also declares a Lipschitz constant for its gradient map; the
//! adaptive step-size schedules consume the declared constant rather than
//! estimating one empirically. For linear functions any positive declared
//! constant is admissible.

use crate::vecops;

pub trait FirstOrderOracle: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Declared Lipschitz constant of the gradient map (for a prediction
    /// oracle: its declared smoothness).
    fn grad_lipschitz(&self) -> f64;

    /// Smoothness bound valid between the two given points:
    /// `|grad(a) - grad(b)| <= smoothness_between(a, b) * |a - b|`.
    /// Defaults to the global constant; clipped compositions return infinity
    /// when the points straddle their clip boundary, which excludes the pair
    /// from smoothness-gated checks.
    fn smoothness_between(&self, _a: &[f64], _b: &[f64]) -> f64 {
        self.grad_lipschitz()
    }

    /// Closed form `f(x) = quad/2 * |x|^2 + <linear, x> + constant`, when the
    /// oracle has one. Lets the comparator solver aggregate a whole run's
    /// losses into a single cheap objective.
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub quad: f64,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn zero(dim: usize) -> Self {
        QuadraticForm { quad: 0.0, linear: vec![0.0; dim], constant: 0.0 }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.quad * vecops::dot(x, x) + vecops::dot(&self.linear, x) + self.constant
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vecops::add_scaled(&self.linear, self.quad, x)
    }

    pub fn accumulate(&mut self, other: &QuadraticForm) {
        debug_assert_eq!(self.linear.len(), other.linear.len());
        self.quad += other.quad;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
        self.constant += other.constant;
    }
}

/// The all-zero function; default prediction when no history exists.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFunction;

impl FirstOrderOracle for ZeroFunction {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn grad_lipschitz(&self) -> f64 {
        0.0
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(QuadraticForm { quad: 0.0, linear: Vec::new(), constant: 0.0 })
    }
}

impl<T: FirstOrderOracle + ?Sized> FirstOrderOracle for std::sync::Arc<T> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }

    fn grad_lipschitz(&self) -> f64 {
        (**self).grad_lipschitz()
    }

    fn smoothness_between(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).smoothness_between(a, b)
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        (**self).quadratic_form()
    }
}

impl<T: FirstOrderOracle + ?Sized> FirstOrderOracle for Box<T> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }

    fn grad_lipschitz(&self) -> f64 {
        (**self).grad_lipschitz()
    }

    fn smoothness_between(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).smoothness_between(a, b)
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        (**self).quadratic_form()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_matches_expansion() {
        let q = QuadraticForm { quad: 2.0, linear: vec![1.0, -1.0], constant: 3.0 };
        let x = [0.5, 2.0];
        // 1.0 * (0.25 + 4.0) + (0.5 - 2.0) + 3.0
        assert!((q.value(&x) - (4.25 - 1.5 + 3.0)).abs() < 1e-15);
        let g = q.gradient(&x);
        assert_eq!(g, vec![1.0 + 2.0 * 0.5, -1.0 + 2.0 * 2.0]);
    }

    #[test]
    fn accumulate_adds_componentwise() {
        let mut a = QuadraticForm::zero(2);
        a.accumulate(&QuadraticForm { quad: 1.0, linear: vec![1.0, 2.0], constant: 0.5 });
        a.accumulate(&QuadraticForm { quad: 0.5, linear: vec![-1.0, 1.0], constant: 0.25 });
        assert_eq!(a.quad, 1.5);
        assert_eq!(a.linear, vec![0.0, 3.0]);
        assert_eq!(a.constant, 0.75);
    }
}
