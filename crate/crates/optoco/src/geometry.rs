//! Norms, Bregman divergences, and the constrained mirror-step solver that
//! every learner builds on.
//!
//! Two geometries are supported: the Euclidean one (`R(x) = |x|_2^2 / 2`,
//! strongly convex with modulus 1 w.r.t. the L2 norm) and the entropic one
//! (`R(x) = sum_i x_i log x_i`, modulus 1 w.r.t. the L1 norm on the simplex).
//! Note the half convention: with the Euclidean regularizer the divergence is
//! `|x - y|_2^2 / 2`, not `|x - y|_2^2`; every bound in this crate uses the
//! half convention consistently.
//!
//! A mirror step
//! `argmin_{x in X} <l, x> + B(x; z) / eta`
//! is computed in two stages: invert the regularizer gradient at
//! `grad R(z) - eta * l`, then Bregman-project onto the domain. Both stages
//! are closed-form for the supported domain kinds, so no iterative inner
//! solver is involved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vecops;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("non-finite input to {op}")]
    NonFinite { op: &'static str },
    #[error("step size must be positive and finite, got {eta}")]
    BadStepSize { eta: f64 },
    #[error("entropic step requires a strictly positive anchor (component {index} is {value})")]
    ZeroAnchor { index: usize, value: f64 },
    #[error("{op} is not supported for this geometry/domain combination")]
    Unsupported { op: &'static str },
    #[error("dual pairing is only defined for L2 and L1 primal norms")]
    BadNormPair,
    #[error("point of dimension {got} does not match domain dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("halfspace-intersection domains are only supported in dimension 2")]
    PolytopeDimension,
    #[error("halfspace intersection is empty or unbounded")]
    DegeneratePolytope,
    #[error("point lies outside the domain")]
    OutsideDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L2,
    L1,
    LInf,
}

impl Norm {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Norm::L2 => vecops::l2_norm(x),
            Norm::L1 => vecops::l1_norm(x),
            Norm::LInf => vecops::linf_norm(x),
        }
    }
}

/// A primal norm together with its dual. The pairing is fixed at
/// construction: L2 is self-dual, L1 pairs with L-infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormPair {
    pub primal: Norm,
    pub dual: Norm,
}

impl NormPair {
    pub fn for_primal(primal: Norm) -> Result<NormPair, GeometryError> {
        match primal {
            Norm::L2 => Ok(NormPair { primal: Norm::L2, dual: Norm::L2 }),
            Norm::L1 => Ok(NormPair { primal: Norm::L1, dual: Norm::LInf }),
            Norm::LInf => Err(GeometryError::BadNormPair),
        }
    }

    pub fn primal_value(&self, x: &[f64]) -> f64 {
        self.primal.value(x)
    }

    pub fn dual_value(&self, x: &[f64]) -> f64 {
        self.dual.value(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    HalfSquaredL2,
    NegativeEntropy,
}

/// A regularizer with its strong-convexity modulus and norm pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BregmanGeometry {
    pub regularizer: Regularizer,
    /// Strong-convexity modulus of the regularizer w.r.t. the primal norm.
    /// Both built-in regularizers have modulus 1 (Pinsker's inequality is the
    /// entropic case).
    pub beta: f64,
    pub norm_pair: NormPair,
}

impl BregmanGeometry {
    pub fn euclidean() -> Self {
        BregmanGeometry {
            regularizer: Regularizer::HalfSquaredL2,
            beta: 1.0,
            norm_pair: NormPair::for_primal(Norm::L2).expect("L2 pairs"),
        }
    }

    pub fn entropic() -> Self {
        BregmanGeometry {
            regularizer: Regularizer::NegativeEntropy,
            beta: 1.0,
            norm_pair: NormPair::for_primal(Norm::L1).expect("L1 pairs"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    /// Constraint `<normal, x> <= offset`.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - vecops::dot(&self.normal, x)
    }
}

/// Closed, convex, bounded feasible sets with closed-form Euclidean
/// projections. Halfspace intersections are restricted to bounded planar
/// polygons so the projection stays exact (nearest point over the edge
/// segments) rather than requiring an iterative subroutine.
///
/// Call [`Domain::validate`] after constructing a halfspace intersection;
/// the geometric queries assume a validated description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    L2Ball { center: Vec<f64>, radius: f64 },
    Simplex { dim: usize },
    HalfspaceIntersection { halfspaces: Vec<Halfspace> },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::L2Ball { center, .. } => center.len(),
            Domain::Simplex { dim } => *dim,
            Domain::HalfspaceIntersection { halfspaces } => {
                halfspaces.first().map_or(0, |h| h.normal.len())
            }
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Domain::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return Err(GeometryError::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| l.partial_cmp(u) != Some(std::cmp::Ordering::Less))
                {
                    return Err(GeometryError::DegeneratePolytope);
                }
                Ok(())
            }
            Domain::L2Ball { center, radius } => {
                if center.is_empty() || !radius.is_finite() || *radius <= 0.0 {
                    return Err(GeometryError::DegeneratePolytope);
                }
                Ok(())
            }
            Domain::Simplex { dim } => {
                if *dim < 2 {
                    return Err(GeometryError::DegeneratePolytope);
                }
                Ok(())
            }
            Domain::HalfspaceIntersection { .. } => {
                // Vertex enumeration doubles as the bounded/nonempty check.
                self.polygon_vertices().map(|_| ())
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Domain::L2Ball { center, radius } => {
                vecops::l2_norm(&vecops::sub(x, center)) <= radius + tol
            }
            Domain::Simplex { .. } => {
                x.iter().all(|v| *v >= -tol)
                    && (x.iter().sum::<f64>() - 1.0).abs() <= tol.max(1e-12)
            }
            Domain::HalfspaceIntersection { halfspaces } => {
                halfspaces.iter().all(|h| h.slack(x) >= -tol)
            }
        }
    }

    /// Natural starting point: box/ball center, uniform simplex point,
    /// vertex average for polygons.
    pub fn centroid(&self) -> Vec<f64> {
        match self {
            Domain::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
            Domain::L2Ball { center, .. } => center.clone(),
            Domain::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
            Domain::HalfspaceIntersection { .. } => {
                let vs = self.polygon_vertices().expect("validated polytope");
                let n = vs.len() as f64;
                let mut c = vec![0.0; 2];
                for v in &vs {
                    c[0] += v[0] / n;
                    c[1] += v[1] / n;
                }
                c
            }
        }
    }

    /// Diameter in the given primal norm.
    pub fn diameter(&self, norm: Norm) -> f64 {
        match self {
            Domain::Box { lower, upper } => {
                let ranges: Vec<f64> = upper.iter().zip(lower).map(|(u, l)| u - l).collect();
                norm.value(&ranges)
            }
            Domain::L2Ball { center, radius } => match norm {
                Norm::L2 => 2.0 * radius,
                Norm::L1 => 2.0 * radius * (center.len() as f64).sqrt(),
                Norm::LInf => 2.0 * radius,
            },
            Domain::Simplex { .. } => match norm {
                Norm::L2 => std::f64::consts::SQRT_2,
                Norm::L1 => 2.0,
                Norm::LInf => 1.0,
            },
            Domain::HalfspaceIntersection { .. } => {
                let vs = self.polygon_vertices().expect("validated polytope");
                let mut best: f64 = 0.0;
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        best = best.max(norm.value(&vecops::sub(&vs[i], &vs[j])));
                    }
                }
                best
            }
        }
    }

    /// Largest L2 norm over the domain; used when declaring loss bounds for
    /// linear families.
    pub fn max_l2_norm(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Domain::L2Ball { center, radius } => vecops::l2_norm(center) + radius,
            Domain::Simplex { .. } => 1.0,
            Domain::HalfspaceIntersection { .. } => {
                let vs = self.polygon_vertices().expect("validated polytope");
                vs.iter().map(|v| vecops::l2_norm(v)).fold(0.0, f64::max)
            }
        }
    }

    /// Distance from `x` to the nearest inequality-constraint boundary. The
    /// simplex measures distance within its affine hull, so "interior" means
    /// relative interior there.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (v - l).min(u - v))
                .fold(f64::INFINITY, f64::min),
            Domain::L2Ball { center, radius } => radius - vecops::l2_norm(&vecops::sub(x, center)),
            Domain::Simplex { .. } => x.iter().copied().fold(f64::INFINITY, f64::min),
            Domain::HalfspaceIntersection { halfspaces } => halfspaces
                .iter()
                .map(|h| h.slack(x) / vecops::l2_norm(&h.normal).max(f64::MIN_POSITIVE))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Exact Euclidean projection.
    pub fn project_l2(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Domain::Box { lower, upper } => {
                y.iter().zip(lower.iter().zip(upper)).map(|(v, (l, u))| v.max(*l).min(*u)).collect()
            }
            Domain::L2Ball { center, radius } => {
                let d = vecops::sub(y, center);
                let n = vecops::l2_norm(&d);
                if n <= *radius {
                    y.to_vec()
                } else {
                    vecops::add_scaled(center, radius / n, &d)
                }
            }
            Domain::Simplex { .. } => project_simplex(y),
            Domain::HalfspaceIntersection { .. } => self.project_polygon(y),
        }
    }

    fn project_polygon(&self, y: &[f64]) -> Vec<f64> {
        if self.contains(y, 0.0) {
            return y.to_vec();
        }
        let vs = self.polygon_vertices().expect("validated polytope");
        let mut best = vs[0].clone();
        let mut best_d = f64::INFINITY;
        let n = vs.len();
        for i in 0..n {
            let a = &vs[i];
            let b = &vs[(i + 1) % n];
            let p = project_segment(y, a, b);
            let d = vecops::l2_norm(&vecops::sub(y, &p));
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }

    /// Vertices of a bounded planar polygon described by halfspaces, in
    /// counterclockwise order. Errors if the description is not a bounded
    /// nonempty polygon in dimension 2.
    pub fn polygon_vertices(&self) -> Result<Vec<Vec<f64>>, GeometryError> {
        let halfspaces = match self {
            Domain::HalfspaceIntersection { halfspaces } => halfspaces,
            _ => return Err(GeometryError::Unsupported { op: "polygon_vertices" }),
        };
        if halfspaces.len() < 3 || halfspaces.iter().any(|h| h.normal.len() != 2) {
            return Err(GeometryError::PolytopeDimension);
        }
        let mut verts: Vec<Vec<f64>> = Vec::new();
        let m = halfspaces.len();
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (&halfspaces[i], &halfspaces[j]);
                let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
                if det.abs() < 1e-14 {
                    continue;
                }
                let x = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
                let y = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
                let v = vec![x, y];
                if halfspaces.iter().all(|h| h.slack(&v) >= -1e-9)
                    && !verts.iter().any(|w| vecops::l2_norm(&vecops::sub(w, &v)) < 1e-10)
                {
                    verts.push(v);
                }
            }
        }
        if verts.len() < 3 {
            return Err(GeometryError::DegeneratePolytope);
        }
        // Boundedness: a planar halfspace intersection is unbounded exactly
        // when some direction d has <n_i, d> <= 0 for every normal, i.e. when
        // the normal angles leave a circular gap of at least pi.
        let mut angles: Vec<f64> =
            halfspaces.iter().map(|h| h.normal[1].atan2(h.normal[0])).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        let tau = 2.0 * std::f64::consts::PI;
        for k in 0..angles.len() {
            let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + tau };
            if next - angles[k] >= std::f64::consts::PI - 1e-12 {
                return Err(GeometryError::DegeneratePolytope);
            }
        }
        let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
        let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
        let mut ordered = verts;
        ordered.sort_by(|a, b| {
            let aa = (a[1] - cy).atan2(a[0] - cx);
            let ab = (b[1] - cy).atan2(b[0] - cx);
            aa.partial_cmp(&ab).expect("finite angles")
        });
        Ok(ordered)
    }
}

fn project_segment(y: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab = vecops::sub(b, a);
    let denom = vecops::dot(&ab, &ab);
    if denom < 1e-300 {
        return a.to_vec();
    }
    let t = (vecops::dot(&vecops::sub(y, a), &ab) / denom).clamp(0.0, 1.0);
    vecops::add_scaled(a, t, &ab)
}

/// Euclidean projection onto the probability simplex, O(d log d) sort-based.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut css = 0.0;
    let mut theta = 0.0;
    // The first candidate always qualifies (u_0 + (1 - u_0) = 1), so theta is
    // the shift of the last prefix whose smallest kept coordinate stays
    // positive.
    for (j, uj) in u.iter().enumerate() {
        css += uj;
        let cand = (1.0 - css) / (j + 1) as f64;
        if uj + cand > 0.0 {
            theta = cand;
        }
    }
    y.iter().map(|v| (v + theta).max(0.0)).collect()
}

/// Bregman divergence `B(x; y) = R(x) - R(y) - <grad R(y), x - y>`.
///
/// Euclidean case: `|x - y|_2^2 / 2`. Entropic case: generalized KL
/// `sum_i x_i log(x_i / y_i) - x_i + y_i` with the `0 log 0 = 0` convention;
/// a zero component of `y` facing a nonzero component of `x` yields
/// `f64::INFINITY` as the infinite-divergence signal.
pub fn bregman_div(geometry: &BregmanGeometry, x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "bregman_div: dimension mismatch");
    match geometry.regularizer {
        Regularizer::HalfSquaredL2 => {
            let d = vecops::sub(x, y);
            0.5 * vecops::dot(&d, &d)
        }
        Regularizer::NegativeEntropy => {
            let mut acc = 0.0;
            for (xi, yi) in x.iter().zip(y) {
                if *xi == 0.0 {
                    acc += yi;
                    continue;
                }
                if *yi == 0.0 {
                    return f64::INFINITY;
                }
                acc += xi * (xi / yi).ln() - xi + yi;
            }
            acc.max(0.0)
        }
    }
}

/// Constrained mirror step `argmin_{x in domain} <ell, x> + B(x; z) / eta`.
///
/// Euclidean geometry: Euclidean projection of `z - eta * ell`. Entropic
/// geometry over the simplex: the multiplicative update
/// `x_i proportional to z_i exp(-eta * ell_i)`, computed in log space so
/// large `eta * ell` cannot underflow. A zero dual vector returns the anchor
/// verbatim: the proximity term is uniquely minimized at `z` itself.
pub fn mirror_step(
    geometry: &BregmanGeometry,
    domain: &Domain,
    z: &[f64],
    ell: &[f64],
    eta: f64,
) -> Result<Vec<f64>, GeometryError> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(GeometryError::BadStepSize { eta });
    }
    if !vecops::all_finite(ell) || !vecops::all_finite(z) {
        return Err(GeometryError::NonFinite { op: "mirror_step" });
    }
    if z.len() != domain.dim() || ell.len() != z.len() {
        return Err(GeometryError::DimensionMismatch { expected: domain.dim(), got: z.len() });
    }
    if vecops::is_zero(ell) {
        debug_assert!(domain.contains(z, 1e-7), "mirror step from infeasible anchor");
        return Ok(z.to_vec());
    }
    match geometry.regularizer {
        Regularizer::HalfSquaredL2 => {
            let y = vecops::add_scaled(z, -eta, ell);
            Ok(domain.project_l2(&y))
        }
        Regularizer::NegativeEntropy => {
            if !matches!(domain, Domain::Simplex { .. }) {
                return Err(GeometryError::Unsupported { op: "entropic mirror_step" });
            }
            for (i, zi) in z.iter().enumerate() {
                if *zi <= 0.0 {
                    return Err(GeometryError::ZeroAnchor { index: i, value: *zi });
                }
            }
            let logits: Vec<f64> = z.iter().zip(ell).map(|(zi, li)| zi.ln() - eta * li).collect();
            let m = logits.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            Ok(logits.iter().map(|l| (l - lse).exp()).collect())
        }
    }
}

/// Bregman projection `argmin_{x in domain} B(x; y)`.
///
/// Euclidean geometry: the exact Euclidean projection for every supported
/// domain. Entropic geometry: simplex normalization `y / |y|_1`.
pub fn project(
    geometry: &BregmanGeometry,
    domain: &Domain,
    y: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    if !vecops::all_finite(y) {
        return Err(GeometryError::NonFinite { op: "project" });
    }
    match geometry.regularizer {
        Regularizer::HalfSquaredL2 => Ok(domain.project_l2(y)),
        Regularizer::NegativeEntropy => {
            if !matches!(domain, Domain::Simplex { .. }) {
                return Err(GeometryError::Unsupported { op: "entropic project" });
            }
            let total: f64 = y.iter().sum();
            if total <= 0.0 || y.iter().any(|v| *v < 0.0) {
                return Err(GeometryError::NonFinite { op: "entropic project" });
            }
            Ok(y.iter().map(|v| v / total).collect())
        }
    }
}

/// Outcome of the three-point identity check for one mirror step.
#[derive(Clone, Debug)]
pub struct ThreePointResidual {
    /// Interior solution: `|lhs - rhs|`. Boundary solution: the signed slack
    /// `rhs - lhs`, which first-order optimality keeps nonnegative.
    pub value: f64,
    pub interior: bool,
    pub solution: Vec<f64>,
}

/// Distance-to-boundary threshold below which a mirror-step solution is
/// treated as boundary-constrained.
pub const INTERIOR_TOL: f64 = 1e-7;

/// Checks the identity
/// `eta <ell, x* - u> = B(u; z) - B(u; x*) - B(x*; z)`
/// for `x*` the mirror step from `z`. The identity is exact whenever no
/// inequality constraint is active at `x*` (the simplex affine constraint
/// does not break it); on the boundary it relaxes to `<=` and the signed
/// slack is returned instead. Test oracle, not part of any learner loop.
pub fn three_point_slack(
    geometry: &BregmanGeometry,
    domain: &Domain,
    z: &[f64],
    ell: &[f64],
    eta: f64,
    u: &[f64],
) -> Result<ThreePointResidual, GeometryError> {
    if !domain.contains(u, 1e-9) {
        return Err(GeometryError::OutsideDomain);
    }
    let x_star = mirror_step(geometry, domain, z, ell, eta)?;
    let lhs = eta * vecops::dot(ell, &vecops::sub(&x_star, u));
    let rhs = bregman_div(geometry, u, z)
        - bregman_div(geometry, u, &x_star)
        - bregman_div(geometry, &x_star, z);
    let interior = domain.boundary_distance(&x_star) > INTERIOR_TOL;
    let value = if interior { (lhs - rhs).abs() } else { rhs - lhs };
    Ok(ThreePointResidual { value, interior, solution: x_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box2() -> Domain {
        Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] }
    }

    #[test]
    fn euclidean_divergence_has_half_convention() {
        let geo = BregmanGeometry::euclidean();
        let d = bregman_div(&geo, &[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(d, 0.5);
    }

    #[test]
    fn divergence_vanishes_at_identical_points() {
        let e = BregmanGeometry::euclidean();
        let n = BregmanGeometry::entropic();
        assert_eq!(bregman_div(&e, &[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_eq!(bregman_div(&n, &[0.3, 0.7], &[0.3, 0.7]), 0.0);
    }

    #[test]
    fn entropic_divergence_matches_closed_form_kl() {
        let geo = BregmanGeometry::entropic();
        let d = bregman_div(&geo, &[1.0, 0.0], &[0.5, 0.5]);
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn entropic_divergence_signals_infinity_on_support_mismatch() {
        let geo = BregmanGeometry::entropic();
        let d = bregman_div(&geo, &[0.5, 0.5], &[1.0, 0.0]);
        assert!(d.is_infinite());
        // 0 log 0 = 0: zero on the left is fine.
        let d = bregman_div(&geo, &[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn interior_euclidean_step_is_a_plain_gradient_step() {
        let geo = BregmanGeometry::euclidean();
        let x = mirror_step(&geo, &unit_box2(), &[0.5, 0.5], &[1.0, 0.0], 0.1).unwrap();
        assert_eq!(x, vec![0.4, 0.5]);
    }

    #[test]
    fn euclidean_step_clips_at_the_face() {
        let geo = BregmanGeometry::euclidean();
        let x = mirror_step(&geo, &unit_box2(), &[0.05, 0.5], &[1.0, 0.0], 0.1).unwrap();
        assert_eq!(x, vec![0.0, 0.5]);
    }

    #[test]
    fn entropic_step_is_the_multiplicative_update() {
        let geo = BregmanGeometry::entropic();
        let dom = Domain::Simplex { dim: 2 };
        let x = mirror_step(&geo, &dom, &[0.5, 0.5], &[std::f64::consts::LN_2, 0.0], 1.0).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14, "got {x:?}");
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_dual_vector_returns_the_anchor_verbatim() {
        let geo = BregmanGeometry::euclidean();
        let z = vec![0.25, 0.5];
        let x = mirror_step(&geo, &unit_box2(), &z, &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(x, z);
        let geo = BregmanGeometry::entropic();
        let dom = Domain::Simplex { dim: 2 };
        let z = vec![0.3, 0.7];
        let x = mirror_step(&geo, &dom, &z, &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(x, z);
    }

    #[test]
    fn mirror_step_rejects_bad_inputs() {
        let geo = BregmanGeometry::euclidean();
        assert!(mirror_step(&geo, &unit_box2(), &[0.5, 0.5], &[f64::NAN, 0.0], 0.1).is_err());
        assert!(mirror_step(&geo, &unit_box2(), &[0.5, 0.5], &[1.0, 0.0], 0.0).is_err());
        let geo = BregmanGeometry::entropic();
        let dom = Domain::Simplex { dim: 2 };
        assert!(matches!(
            mirror_step(&geo, &dom, &[1.0, 0.0], &[0.1, 0.0], 1.0),
            Err(GeometryError::ZeroAnchor { .. })
        ));
    }

    #[test]
    fn ball_projection_scales_radially() {
        let dom = Domain::L2Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let p = dom.project_l2(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn feasible_point_projects_to_itself() {
        let p = project_simplex(&[0.4, 0.4, 0.2]);
        assert!((p[0] - 0.4).abs() < 1e-15);
        assert!((p[1] - 0.4).abs() < 1e-15);
        assert!((p[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn simplex_projection_matches_brute_force() {
        // Independent oracle: dense grid over the 2-simplex parameterized by
        // the first coordinate.
        let y = [1.5, 0.5];
        let mut best = (f64::INFINITY, 0.0);
        let n = 2_000_000;
        for k in 0..=n {
            let s = k as f64 / n as f64;
            let d0 = s - y[0];
            let d1 = (1.0 - s) - y[1];
            let obj = d0 * d0 + d1 * d1;
            if obj < best.0 {
                best = (obj, s);
            }
        }
        let p = project_simplex(&y);
        assert!((p[0] - best.1).abs() < 1e-5, "sort-based {p:?} vs grid {}", best.1);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn entropic_projection_normalizes() {
        let geo = BregmanGeometry::entropic();
        let dom = Domain::Simplex { dim: 2 };
        let p = project(&geo, &dom, &[0.2, 0.6]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        // Only the simplex supports the entropic projection.
        let b = Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] };
        assert!(project(&geo, &b, &[0.2, 0.6]).is_err());
    }

    #[test]
    fn three_point_identity_exact_in_the_interior() {
        let geo = BregmanGeometry::euclidean();
        let r = three_point_slack(&geo, &unit_box2(), &[0.5, 0.5], &[1.0, 0.0], 0.1, &[0.0, 0.0])
            .unwrap();
        assert!(r.interior);
        assert!(r.value <= 1e-12, "residual {}", r.value);
    }

    #[test]
    fn three_point_identity_exact_on_simplex_relative_interior() {
        let geo = BregmanGeometry::entropic();
        let dom = Domain::Simplex { dim: 2 };
        let r = three_point_slack(
            &geo,
            &dom,
            &[0.5, 0.5],
            &[std::f64::consts::LN_2, 0.0],
            1.0,
            &[1.0, 0.0],
        )
        .unwrap();
        assert!(r.interior);
        assert!(r.value <= 1e-10, "residual {}", r.value);
    }

    #[test]
    fn three_point_slack_nonnegative_on_boundary() {
        let geo = BregmanGeometry::euclidean();
        let r = three_point_slack(&geo, &unit_box2(), &[0.05, 0.5], &[1.0, 0.0], 0.1, &[1.0, 1.0])
            .unwrap();
        assert!(!r.interior);
        assert!(r.value >= -1e-12, "slack {}", r.value);
    }

    #[test]
    fn polygon_projection_is_exact_for_a_triangle() {
        let dom = Domain::HalfspaceIntersection {
            halfspaces: vec![
                Halfspace { normal: vec![-1.0, 0.0], offset: 0.0 }, // x >= 0
                Halfspace { normal: vec![0.0, -1.0], offset: 0.0 }, // y >= 0
                Halfspace { normal: vec![1.0, 1.0], offset: 1.0 },  // x + y <= 1
            ],
        };
        dom.validate().unwrap();
        let p = dom.project_l2(&[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12, "{p:?}");
        let inside = dom.project_l2(&[0.2, 0.2]);
        assert_eq!(inside, vec![0.2, 0.2]);
    }

    #[test]
    fn unbounded_polytope_is_rejected() {
        let dom = Domain::HalfspaceIntersection {
            halfspaces: vec![
                Halfspace { normal: vec![-1.0, 0.0], offset: 0.0 },
                Halfspace { normal: vec![0.0, -1.0], offset: 0.0 },
                Halfspace { normal: vec![-1.0, -1.0], offset: 0.5 },
            ],
        };
        assert!(dom.validate().is_err());
    }

    #[test]
    fn diameters_match_closed_forms() {
        assert!((unit_box2().diameter(Norm::L2) - std::f64::consts::SQRT_2).abs() < 1e-15);
        let simplex = Domain::Simplex { dim: 5 };
        assert_eq!(simplex.diameter(Norm::L1), 2.0);
        let ball = Domain::L2Ball { center: vec![0.0; 3], radius: 2.0 };
        assert_eq!(ball.diameter(Norm::L2), 4.0);
    }

    #[test]
    fn feasibility_tolerance_is_respected() {
        let dom = Domain::Simplex { dim: 3 };
        assert!(dom.contains(&[0.2, 0.3, 0.5], 0.0));
        assert!(!dom.contains(&[0.2, 0.3, 0.4], 1e-9));
        assert!(dom.contains(&[0.2, 0.3, 0.5 + 1e-10], 1e-9));
    }
}
