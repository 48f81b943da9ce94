//! Offline comparator solver: the benchmark point `u` for regret is the
//! feasible minimizer of the summed losses over the run.
//!
//! Two independent routes are provided and cross-checked in tests:
//!
//! - **Grid** (dimension <= 3): multiscale refinement of a dense grid. Each
//!   level evaluates a full grid over the current window and the next level
//!   shrinks the window around the incumbent, so the final spacing is far
//!   below the documented `1e-3 * D` coarse resolution. Feasibility filters
//!   candidates to `max_t g_t(x) <= 1e-8`.
//! - **Projected descent**: penalized projected gradient on
//!   `sum f_t + penalty * sum g_t^+` with the penalty escalating
//!   geometrically from 1 to 1e8, followed by a feasibility polish and a
//!   compass search on the constrained problem.
//!
//! Whole-run objectives are evaluated through a single accumulated quadratic
//! form, so one evaluation costs O(d) regardless of the horizon. Constraint
//! lists are deduplicated, and families whose `(normal, offset)` rows lie on
//! a segment in parameter space are reduced exactly to the segment's two
//! extreme rows (the violation of any point is affine along the segment, so
//! the extremes dominate).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environments::EnvFunction;
use crate::function::{FirstOrderOracle, QuadraticForm};
use crate::geometry::Domain;
use crate::vecops;

/// A comparator must satisfy every past constraint to this absolute slack.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no feasible point found: smallest constraint violation reached {min_violation}")]
    Infeasible { min_violation: f64 },
    #[error("grid mode supports at most 3 free dimensions, this problem has {dims}")]
    GridDimension { dims: usize },
    #[error("empty loss history")]
    EmptyHistory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Grid,
    ProjectedDescent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparatorResult {
    pub point: Vec<f64>,
    /// Total loss of the run at the comparator.
    pub objective: f64,
    pub feasible: bool,
    /// Largest constraint violation at the comparator; `None` when the run
    /// had no constraint history.
    pub max_violation: Option<f64>,
    pub method: SolveMode,
}

/// Accumulated objective for a whole run.
struct Aggregate {
    form: QuadraticForm,
}

impl Aggregate {
    fn from_losses(losses: &[EnvFunction]) -> Result<Self, OracleError> {
        let dim = match losses.first() {
            Some(f) => probe_dim(f),
            None => return Err(OracleError::EmptyHistory),
        };
        let mut form = QuadraticForm::zero(dim);
        for f in losses {
            let q = f.quadratic_form().expect("environment oracles expose a closed form");
            form.accumulate(&q);
        }
        Ok(Aggregate { form })
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.form.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.form.gradient(x)
    }
}

fn probe_dim(f: &EnvFunction) -> usize {
    match f {
        EnvFunction::Quadratic { center } => center.len(),
        EnvFunction::Linear { coeffs, .. } => coeffs.len(),
    }
}

/// Reduced feasibility checker over the constraint history.
struct FeasibleSet {
    rows: Vec<(Vec<f64>, f64)>,
}

impl FeasibleSet {
    fn from_constraints(constraints: &[EnvFunction]) -> Self {
        let rows: Vec<(Vec<f64>, f64)> = constraints
            .iter()
            .map(|g| match g {
                EnvFunction::Linear { coeffs, offset } => (coeffs.clone(), *offset),
                EnvFunction::Quadratic { .. } => {
                    unreachable!("constraint families are halfspaces")
                }
            })
            .collect();
        FeasibleSet { rows: reduce_halfspaces(rows) }
    }

    fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|(a, b)| vecops::dot(a, x) - b).fold(f64::NEG_INFINITY, f64::max)
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Deduplicates halfspace rows; when every row lies on one segment in
/// `(normal, offset)` space the two extreme rows replace the family exactly.
fn reduce_halfspaces(rows: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    if rows.len() <= 2 {
        return rows;
    }
    let pts: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut p = a.clone();
            p.push(*b);
            p
        })
        .collect();
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);

    // Farthest point from row 0, then farthest from that: the candidate
    // segment endpoints.
    let far = |from: &Vec<f64>| -> usize {
        let mut best = (0usize, -1.0);
        for (i, p) in pts.iter().enumerate() {
            let d = vecops::linf_norm(&vecops::sub(p, from));
            if d > best.1 {
                best = (i, d);
            }
        }
        best.0
    };
    let i0 = far(&pts[0]);
    let i1 = far(&pts[i0]);
    let dir = vecops::sub(&pts[i1], &pts[i0]);
    let n2 = vecops::dot(&dir, &dir);

    if n2 <= (1e-12 * scale) * (1e-12 * scale) {
        // Every row is (numerically) the same halfspace.
        return vec![rows[i0].clone()];
    }

    let mut smin = (f64::INFINITY, i0);
    let mut smax = (f64::NEG_INFINITY, i0);
    for (i, p) in pts.iter().enumerate() {
        let s = vecops::dot(&vecops::sub(p, &pts[i0]), &dir) / n2;
        let on_segment = vecops::add_scaled(&pts[i0], s, &dir);
        let resid = vecops::linf_norm(&vecops::sub(p, &on_segment));
        if resid > 1e-9 * scale {
            // Not a one-parameter family; fall back to bit-exact dedup.
            return dedup_rows(rows);
        }
        if s < smin.0 {
            smin = (s, i);
        }
        if s > smax.0 {
            smax = (s, i);
        }
    }
    let mut out = vec![rows[smin.1].clone()];
    if smax.1 != smin.1 {
        out.push(rows[smax.1].clone());
    }
    out
}

fn dedup_rows(rows: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    use std::collections::HashSet;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    for (a, b) in rows {
        let mut key: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
        key.push(b.to_bits());
        if seen.insert(key) {
            out.push((a, b));
        }
    }
    out
}

/// Free-coordinate window for grid enumeration. The simplex is enumerated in
/// its first `d - 1` coordinates; everything else uses ambient coordinates
/// inside a bounding box.
fn domain_frame(domain: &Domain) -> (Vec<f64>, Vec<f64>) {
    match domain {
        Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
        Domain::L2Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
        Domain::Simplex { dim } => (vec![0.0; dim - 1], vec![1.0; dim - 1]),
        Domain::HalfspaceIntersection { .. } => {
            let vs = domain.polygon_vertices().expect("validated polytope");
            let mut lo = vs[0].clone();
            let mut hi = vs[0].clone();
            for v in &vs {
                for k in 0..v.len() {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            (lo, hi)
        }
    }
}

/// Maps free coordinates to a domain point; `None` when outside the domain.
fn embed(domain: &Domain, free: &[f64]) -> Option<Vec<f64>> {
    match domain {
        Domain::Box { .. } => Some(free.to_vec()),
        Domain::L2Ball { .. } | Domain::HalfspaceIntersection { .. } => {
            if domain.contains(free, 1e-12) {
                Some(free.to_vec())
            } else {
                None
            }
        }
        Domain::Simplex { .. } => {
            let s: f64 = free.iter().sum();
            if free.iter().any(|v| *v < 0.0) || s > 1.0 + 1e-12 {
                return None;
            }
            let mut full = free.to_vec();
            full.push((1.0 - s).max(0.0));
            Some(full)
        }
    }
}

const GRID_LEVELS: usize = 6;
const GRID_PER_AXIS: usize = 65;

/// Multiscale grid minimization of `score` over the domain. `score` returns
/// `None` for candidates it rejects (e.g. infeasible ones). `seed` is an
/// optional starting incumbent in free coordinates. Returns
/// `(free coords, point, score)` of the best candidate.
fn multiscale_grid(
    domain: &Domain,
    score: &dyn Fn(&[f64]) -> Option<f64>,
    seed: Option<Vec<f64>>,
    levels: usize,
    per_axis: usize,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let (frame_lo, frame_hi) = domain_frame(domain);
    let dims = frame_lo.len();
    let mut lo = frame_lo.clone();
    let mut hi = frame_hi.clone();
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = seed.and_then(|free| {
        let point = embed(domain, &free)?;
        let s = score(&point)?;
        Some((free, point, s))
    });

    for _ in 0..levels {
        let mut idx = vec![0usize; dims];
        'grid: loop {
            let free: Vec<f64> = (0..dims)
                .map(|k| {
                    if per_axis == 1 {
                        0.5 * (lo[k] + hi[k])
                    } else {
                        lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (per_axis - 1) as f64
                    }
                })
                .collect();
            if let Some(point) = embed(domain, &free) {
                if let Some(s) = score(&point) {
                    if best.as_ref().is_none_or(|(_, _, b)| s < *b) {
                        best = Some((free.clone(), point, s));
                    }
                }
            }
            // Odometer increment over the grid indices.
            let mut k = 0;
            while k < dims {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dims {
                break 'grid;
            }
        }
        let (center, _, _) = best.as_ref()?;
        let center = center.clone();
        let mut new_lo = Vec::with_capacity(dims);
        let mut new_hi = Vec::with_capacity(dims);
        for k in 0..dims {
            let spacing = (hi[k] - lo[k]) / (per_axis - 1).max(1) as f64;
            let w = 2.5 * spacing;
            new_lo.push((center[k] - w).max(frame_lo[k]));
            new_hi.push((center[k] + w).min(frame_hi[k]));
        }
        lo = new_lo;
        hi = new_hi;
    }
    best
}

/// Brute-force multiscale minimizer of an arbitrary objective over a domain.
/// Serves as the independent oracle for the mirror-step solver in tests.
pub fn grid_minimize(
    domain: &Domain,
    objective: &dyn Fn(&[f64]) -> f64,
    levels: usize,
    per_axis: usize,
) -> Option<(Vec<f64>, f64)> {
    multiscale_grid(
        domain,
        &|x| {
            let v = objective(x);
            v.is_finite().then_some(v)
        },
        None,
        levels,
        per_axis,
    )
    .map(|(_, point, value)| (point, value))
}

/// Solves for the comparator: the feasible minimizer of the run's summed
/// losses over the domain.
pub fn solve_comparator(
    losses: &[EnvFunction],
    constraints: &[EnvFunction],
    domain: &Domain,
    mode: SolveMode,
) -> Result<ComparatorResult, OracleError> {
    let agg = Aggregate::from_losses(losses)?;
    let feas = FeasibleSet::from_constraints(constraints);
    match mode {
        SolveMode::Grid => solve_grid(&agg, &feas, domain),
        SolveMode::ProjectedDescent => solve_descent(&agg, &feas, domain),
    }
}

fn solve_grid(
    agg: &Aggregate,
    feas: &FeasibleSet,
    domain: &Domain,
) -> Result<ComparatorResult, OracleError> {
    let frame_dims = domain_frame(domain).0.len();
    if frame_dims > 3 {
        return Err(OracleError::GridDimension { dims: frame_dims });
    }
    let feasibility_scored = |x: &[f64]| -> Option<f64> {
        if feas.is_empty() || feas.max_violation(x) <= FEASIBILITY_TOL {
            Some(agg.value(x))
        } else {
            None
        }
    };

    // A feasible incumbent can be missed by coarse grids when the feasible
    // region is thin; hunt for a minimum-violation seed first.
    let seed = if feas.is_empty() {
        None
    } else {
        let viol_score = |x: &[f64]| -> Option<f64> { Some(feas.max_violation(x)) };
        match multiscale_grid(domain, &viol_score, None, GRID_LEVELS, GRID_PER_AXIS) {
            Some((free, _, v)) if v <= FEASIBILITY_TOL => Some(free),
            Some((_, _, v)) => return Err(OracleError::Infeasible { min_violation: v }),
            None => None,
        }
    };

    let best = multiscale_grid(domain, &feasibility_scored, seed, GRID_LEVELS, GRID_PER_AXIS);
    match best {
        Some((_, point, objective)) => {
            let max_violation = (!feas.is_empty()).then(|| feas.max_violation(&point));
            Ok(ComparatorResult {
                point,
                objective,
                feasible: max_violation.is_none_or(|v| v <= FEASIBILITY_TOL),
                max_violation,
                method: SolveMode::Grid,
            })
        }
        None => Err(OracleError::Infeasible { min_violation: f64::INFINITY }),
    }
}

const PENALTY_FACTOR: f64 = 10.0;
const PENALTY_MAX: f64 = 1e8;

fn solve_descent(
    agg: &Aggregate,
    feas: &FeasibleSet,
    domain: &Domain,
) -> Result<ComparatorResult, OracleError> {
    let diameter = domain.diameter(crate::geometry::Norm::L2);
    let mut x = domain.centroid();

    // Phase 1: reach the feasible region (or certify we cannot).
    if !feas.is_empty() && feas.max_violation(&x) > FEASIBILITY_TOL {
        for _ in 0..4000 {
            let v = feas.max_violation(&x);
            if v <= 0.0 {
                break;
            }
            let (a, _) = worst_row(feas, &x);
            let n2 = vecops::dot(&a, &a).max(f64::MIN_POSITIVE);
            // Exact projection onto the most violated halfspace, then the domain.
            x = domain.project_l2(&vecops::add_scaled(&x, -v / n2, &a));
        }
        let v = feas.max_violation(&x);
        if v > FEASIBILITY_TOL {
            return Err(OracleError::Infeasible { min_violation: v });
        }
    }

    // Phase 2: penalized projected gradient with escalating penalty.
    let quad = agg.form.quad;
    let mut penalty = 1.0;
    while penalty <= PENALTY_MAX {
        for k in 1..=300u32 {
            let mut grad = agg.gradient(&x);
            for (a, b) in &feas.rows {
                if vecops::dot(a, &x) - b > 0.0 {
                    grad = vecops::add_scaled(&grad, penalty, a);
                }
            }
            let gn = vecops::l2_norm(&grad);
            if gn < 1e-14 {
                break;
            }
            // Exact curvature step for strongly convex aggregates, normalized
            // diminishing step otherwise.
            let step = if quad > 1e-12 {
                (1.0 / quad).min(0.5 * diameter / gn)
            } else {
                0.5 * diameter / (gn * (k as f64).sqrt())
            };
            x = domain.project_l2(&vecops::add_scaled(&x, -step, &grad));
        }
        penalty *= PENALTY_FACTOR;
    }

    // Phase 3: polish back to feasibility by alternating projections.
    if !feas.is_empty() {
        for _ in 0..200 {
            let v = feas.max_violation(&x);
            if v <= FEASIBILITY_TOL {
                break;
            }
            let (a, _) = worst_row(feas, &x);
            let n2 = vecops::dot(&a, &a).max(f64::MIN_POSITIVE);
            x = domain.project_l2(&vecops::add_scaled(&x, -v / n2, &a));
        }
    }

    // Phase 4: compass search on the constrained problem.
    x = compass_polish(agg, feas, domain, x, diameter);

    let max_violation = (!feas.is_empty()).then(|| feas.max_violation(&x));
    if let Some(v) = max_violation {
        if v > FEASIBILITY_TOL {
            return Err(OracleError::Infeasible { min_violation: v });
        }
    }
    Ok(ComparatorResult {
        objective: agg.value(&x),
        feasible: true,
        max_violation,
        point: x,
        method: SolveMode::ProjectedDescent,
    })
}

fn worst_row(feas: &FeasibleSet, x: &[f64]) -> (Vec<f64>, f64) {
    feas.rows
        .iter()
        .max_by(|(a1, b1), (a2, b2)| {
            let v1 = vecops::dot(a1, x) - b1;
            let v2 = vecops::dot(a2, x) - b2;
            v1.partial_cmp(&v2).expect("finite violations")
        })
        .map(|(a, b)| (a.clone(), *b))
        .expect("nonempty rows")
}

/// Local pattern search over axis and diagonal directions with halving step
/// sizes, constrained to feasible domain points.
fn compass_polish(
    agg: &Aggregate,
    feas: &FeasibleSet,
    domain: &Domain,
    mut x: Vec<f64>,
    diameter: f64,
) -> Vec<f64> {
    let dim = x.len();
    let accepts = |p: &[f64]| -> Option<f64> {
        if !domain.contains(p, 1e-12) {
            return None;
        }
        if !feas.is_empty() && feas.max_violation(p) > FEASIBILITY_TOL {
            return None;
        }
        Some(agg.value(p))
    };
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        directions.push(e.clone());
        e[k] = -1.0;
        directions.push(e);
    }
    if dim == 2 {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            directions.push(vec![sx * c, sy * c]);
        }
    }
    let mut best = match accepts(&x) {
        Some(v) => v,
        None => return x,
    };
    let mut step = 0.1 * diameter;
    while step > 1e-10 * diameter {
        let mut improved = false;
        for d in &directions {
            let cand = domain.project_l2(&vecops::add_scaled(&x, step, d));
            if let Some(v) = accepts(&cand) {
                if v < best - 1e-15 * best.abs().max(1.0) {
                    best = v;
                    x = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    x
}
