//! Aggregates FPU flexibility into the feasible operation region at the
//! slack interconnection: a seeded particle-swarm sweep over evenly spaced
//! PQ-plane directions, a random-sampling baseline, constraint attribution
//! for boundary points, and a rasterized loss map over the region.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexibility::{Fpu, PqPolygon};
use crate::geometry::{self, Pt};
use crate::grid::{Grid, GridError};
use crate::num::Scalar;
use crate::per_unit::{admittance_matrix, to_per_unit, NodalAdmittance, PerUnitGrid, DEFAULT_S_BASE_MVA};
use crate::power_flow::{
    evaluate_limits, solve_power_flow, ConstraintKind, ConstraintReport, InjectionSet,
    OperatingLimits, PfError, SolverOptions,
};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum AggError {
    /// The scenario operating point itself violates the grid limits.
    #[error("the scenario operating point is not power-flow feasible")]
    NoFeasibleStart,
    #[error("bad search config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Pf(#[from] PfError),
}

/// Swarm-search knobs. The defaults trade runtime against boundary quality
/// for grids of a few dozen buses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggConfig<T> {
    /// Evenly spaced search directions over the full PQ circle.
    pub directions: usize,
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: T,
    pub cognitive: T,
    pub social: T,
    /// Weight of the off-axis drift term in the direction fitness.
    pub perpendicular_penalty: T,
    pub seed: u64,
    /// Relative margin below which a grid constraint counts as binding.
    pub binding_margin: T,
}

impl<T: Scalar> Default for AggConfig<T> {
    fn default() -> Self {
        Self {
            directions: 72,
            swarm_size: 50,
            iterations: 150,
            inertia: T::of(0.72),
            cognitive: T::of(1.49),
            social: T::of(1.49),
            perpendicular_penalty: T::of(0.3),
            seed: 0,
            binding_margin: T::of(0.005),
        }
    }
}

impl<T: Scalar> AggConfig<T> {
    pub fn validate(&self) -> Result<(), AggError> {
        if self.directions < 8 {
            return Err(AggError::BadConfig("directions must be at least 8"));
        }
        if self.swarm_size < 2 {
            return Err(AggError::BadConfig("swarm_size must be at least 2"));
        }
        if self.iterations == 0 {
            return Err(AggError::BadConfig("iterations must be at least 1"));
        }
        if !(self.perpendicular_penalty >= T::zero() && self.binding_margin >= T::zero()) {
            return Err(AggError::BadConfig("penalty and binding margin must be non-negative"));
        }
        Ok(())
    }
}

/// One extreme of the region: the interchange reached searching along
/// `theta_rad`, the per-FPU dispatch behind it, and what limits it there.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint<T> {
    pub theta_rad: T,
    /// Vertical interchange (P MW, Q Mvar), consumption-positive.
    pub pq: Pt<T>,
    /// Per-FPU (MW, Mvar), same order as the scenario FPU list.
    pub dispatch: Vec<Pt<T>>,
    pub binding: ConstraintKind,
    /// Smallest relative grid margin at this dispatch.
    pub margin: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForResult<T> {
    pub scenario_id: String,
    /// One point per direction, ordered by theta; closes implicitly.
    pub boundary: Vec<BoundaryPoint<T>>,
    pub area_mw_mvar: T,
    pub operating_point_pq: Pt<T>,
    pub config: AggConfig<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossMapCell<T> {
    /// Interchange target (P MW, Q Mvar) at the cell center.
    pub target: Pt<T>,
    /// Total active losses of the dispatch reaching the target, where one exists.
    pub loss_mw: Option<T>,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossMap<T> {
    /// Row-major, Q fastest, `resolution` squared cells over the region bbox.
    pub cells: Vec<LossMapCell<T>>,
    pub resolution: usize,
}

/// Stateless per-dispatch evaluation: injections, Newton solve, limit check.
struct EvalContext<T> {
    pu: PerUnitGrid<T>,
    y: NodalAdmittance<T>,
    limits: OperatingLimits<T>,
    /// Bus index per FPU, scenario order.
    rows: Vec<usize>,
    opts: SolverOptions<T>,
}

struct Eval<T> {
    pq: Pt<T>,
    losses_mw: T,
    feasible: bool,
    report: ConstraintReport<T>,
    v: Vec<Complex<T>>,
}

impl<T: Scalar> EvalContext<T> {
    fn new(
        scenario: &Scenario<T>,
        grid: &Grid<T>,
        opts: &SolverOptions<T>,
    ) -> Result<Self, AggError> {
        let pu = to_per_unit(grid, T::of(DEFAULT_S_BASE_MVA))?;
        let y = admittance_matrix(&pu)?;
        let limits = scenario.grid_limits(&pu);
        let rows = scenario
            .fpus
            .iter()
            .map(|f| pu.bus_index(f.bus).ok_or(PfError::UnknownBus(f.bus)))
            .collect::<Result<Vec<_>, _>>()?;
        let opts = SolverOptions { warm_start: None, ..opts.clone() };
        Ok(Self { pu, y, limits, rows, opts })
    }

    /// Solves at `dispatch`; a failed warm-started solve is retried flat
    /// before counting as infeasible.
    fn eval(&self, dispatch: &[Pt<T>], warm: Option<&Vec<Complex<T>>>) -> Result<Eval<T>, PfError> {
        let mut inj = InjectionSet::zeros(&self.pu);
        for (&row, d) in self.rows.iter().zip(dispatch) {
            inj.add_at(row, d[0], d[1]);
        }
        let mut opts = SolverOptions { warm_start: warm.cloned(), ..self.opts.clone() };
        let mut sol = solve_power_flow(&self.pu, &self.y, &inj, &opts)?;
        if !sol.converged && opts.warm_start.is_some() {
            opts.warm_start = None;
            sol = solve_power_flow(&self.pu, &self.y, &inj, &opts)?;
        }
        let report = evaluate_limits(&sol, &self.limits);
        Ok(Eval {
            pq: [sol.slack_mw, sol.slack_mvar],
            losses_mw: sol.total_losses_mw,
            feasible: sol.converged && report.feasible,
            report,
            v: sol.v,
        })
    }
}

/// Vertex of the flexibility region furthest along `u`, discounting drift
/// away from the device's base point in the perpendicular direction. The
/// discount breaks ties (a box has a whole edge of equal-`u` vertices) in
/// favour of the least off-axis excursion.
fn directional_anchor<T: Scalar>(
    polygon: &PqPolygon<T>,
    u: [T; 2],
    perp: [T; 2],
    penalty: T,
    base: Pt<T>,
) -> Pt<T> {
    let score = |v: Pt<T>| {
        geometry::dot(v, u) - penalty * geometry::dot(geometry::sub(v, base), perp).abs()
    };
    let mut best = polygon.cells()[0][0];
    let mut best_score = score(best);
    for v in polygon.cells().iter().flatten() {
        let s = score(*v);
        if s > best_score {
            best_score = s;
            best = *v;
        }
    }
    best
}

/// Splitmix-style finalizer decorrelating per-direction and per-cell streams.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_from_report<T: Scalar>(
    report: &ConstraintReport<T>,
    binding_margin: T,
) -> (ConstraintKind, T) {
    match report.most_binding() {
        Some((kind, w)) if w.margin <= binding_margin => (kind, w.margin),
        Some((_, w)) => (ConstraintKind::FpuLimit, w.margin),
        None => (ConstraintKind::FpuLimit, T::infinity()),
    }
}

/// Pushes the interchange as far as possible along `theta`: swarm particles
/// are per-FPU dispatches repaired into their polygons, scored by projected
/// gain minus the penalized off-axis drift, with grid-infeasible states
/// rejected outright. The winner is re-verified by a fresh flat-start solve.
pub fn optimize_direction<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    theta: T,
    config: &AggConfig<T>,
) -> Result<BoundaryPoint<T>, AggError> {
    config.validate()?;
    let ctx = EvalContext::new(scenario, grid, &SolverOptions::default())?;
    let base: Vec<Pt<T>> = scenario.fpus.iter().map(|f| f.operating_point).collect();
    let e0 = ctx.eval(&base, None)?;
    if !e0.feasible {
        return Err(AggError::NoFeasibleStart);
    }
    optimize_in_ctx(&ctx, &scenario.fpus, &base, e0.pq, theta, config)
}

fn optimize_in_ctx<T: Scalar>(
    ctx: &EvalContext<T>,
    fpus: &[Fpu<T>],
    base: &[Pt<T>],
    pq0: Pt<T>,
    theta: T,
    config: &AggConfig<T>,
) -> Result<BoundaryPoint<T>, AggError> {
    let u = [theta.cos(), theta.sin()];
    let perp = [-u[1], u[0]];
    let fitness = |pq: Pt<T>| {
        let d = geometry::sub(pq, pq0);
        geometry::dot(d, u) - config.perpendicular_penalty * geometry::dot(d, perp).abs()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, theta.to_f64_lossy().to_bits()));
    let n = fpus.len();
    let mut warm: Option<Vec<Complex<T>>> = None;

    // Longest grid-feasible step from base toward target, bisected. Keeps
    // every starting particle feasible so the early swarm carries real
    // fitness information instead of a wall of rejections.
    let mut to_frontier = |target: Vec<Pt<T>>, steps: usize| -> Result<Vec<Pt<T>>, AggError> {
        let e = ctx.eval(&target, warm.as_ref())?;
        if e.feasible {
            warm = Some(e.v);
            return Ok(target);
        }
        let lerp = |t: T| -> Vec<Pt<T>> {
            base.iter()
                .zip(&target)
                .map(|(b, s)| [b[0] + t * (s[0] - b[0]), b[1] + t * (s[1] - b[1])])
                .collect()
        };
        let mut lo = T::zero();
        let mut hi = T::one();
        for _ in 0..steps {
            let mid = (lo + hi) * T::of(0.5);
            let e = ctx.eval(&lerp(mid), warm.as_ref())?;
            if e.feasible {
                warm = Some(e.v);
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lerp(lo))
    };

    let mut xs: Vec<Vec<Pt<T>>> = Vec::with_capacity(config.swarm_size);
    xs.push(base.to_vec());
    if config.swarm_size > 2 {
        // per-FPU directional extreme pushed to the frontier: a strong,
        // deterministic anchor for this direction
        let sup: Vec<Pt<T>> = fpus
            .iter()
            .zip(base)
            .map(|(f, b)| directional_anchor(&f.polygon, u, perp, config.perpendicular_penalty, *b))
            .collect();
        xs.push(to_frontier(sup, 12)?);
    }
    for _ in xs.len()..config.swarm_size {
        let raw: Vec<Pt<T>> = fpus.iter().map(|f| f.polygon.sample(&mut rng)).collect();
        xs.push(to_frontier(raw, 6)?);
    }
    let mut vs = vec![vec![[T::zero(); 2]; n]; config.swarm_size];
    let mut pbest: Vec<(T, Vec<Pt<T>>)> = Vec::with_capacity(config.swarm_size);
    let mut gbest = (T::neg_infinity(), base.to_vec());

    for x in &xs {
        let e = ctx.eval(x, warm.as_ref())?;
        let fit = if e.feasible { fitness(e.pq) } else { T::neg_infinity() };
        if e.feasible {
            warm = Some(e.v);
        }
        pbest.push((fit, x.clone()));
        if fit > gbest.0 {
            gbest = (fit, x.clone());
        }
    }

    for _ in 0..config.iterations {
        for i in 0..config.swarm_size {
            for d in 0..n {
                for c in 0..2 {
                    let r1 = T::of(rng.gen::<f64>());
                    let r2 = T::of(rng.gen::<f64>());
                    vs[i][d][c] = config.inertia * vs[i][d][c]
                        + config.cognitive * r1 * (pbest[i].1[d][c] - xs[i][d][c])
                        + config.social * r2 * (gbest.1[d][c] - xs[i][d][c]);
                    xs[i][d][c] += vs[i][d][c];
                }
                xs[i][d] = fpus[d].polygon.project(xs[i][d]);
            }
            let e = ctx.eval(&xs[i], warm.as_ref())?;
            let fit = if e.feasible { fitness(e.pq) } else { T::neg_infinity() };
            if e.feasible {
                warm = Some(e.v);
            }
            if fit > pbest[i].0 {
                pbest[i] = (fit, xs[i].clone());
            }
            if fit > gbest.0 {
                gbest = (fit, xs[i].clone());
            }
        }
    }

    // fresh flat-start verification of the winner; fall back to the known
    // feasible base dispatch if it cannot be reproduced
    let (dispatch, eval) = {
        let e = ctx.eval(&gbest.1, None)?;
        if e.feasible {
            (gbest.1, e)
        } else {
            (base.to_vec(), ctx.eval(base, None)?)
        }
    };
    let (binding, margin) = label_from_report(&eval.report, config.binding_margin);
    Ok(BoundaryPoint { theta_rad: theta, pq: eval.pq, dispatch, binding, margin })
}

pub fn compute_for<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    config: &AggConfig<T>,
) -> Result<ForResult<T>, AggError> {
    compute_for_with_solver(scenario, grid, config, &SolverOptions::default())
}

/// Full region sweep: one boundary point per direction, counterclockwise
/// from the +P axis, area by the shoelace rule over the swept polyline.
/// Directions run in parallel; each carries its own seeded stream, so the
/// result does not depend on the worker count.
pub fn compute_for_with_solver<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    config: &AggConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<ForResult<T>, AggError> {
    config.validate()?;
    let ctx = EvalContext::new(scenario, grid, opts)?;
    let base: Vec<Pt<T>> = scenario.fpus.iter().map(|f| f.operating_point).collect();
    let e0 = ctx.eval(&base, None)?;
    if !e0.feasible {
        return Err(AggError::NoFeasibleStart);
    }
    let pq0 = e0.pq;

    let step = T::of(2.0) * T::PI() / T::from_usize(config.directions).unwrap();
    let mut boundary = (0..config.directions)
        .into_par_iter()
        .map(|k| {
            let theta = T::from_usize(k).unwrap() * step;
            optimize_in_ctx(&ctx, &scenario.fpus, &base, pq0, theta, config)
        })
        .collect::<Result<Vec<_>, _>>()?;

    // the off-axis drift allowance means a point can end up ahead of or
    // behind its search ray; re-establish the sweep order around the base
    // point so the polyline stays simple
    boundary.sort_by(|a, b| {
        let key = |bp: &BoundaryPoint<T>| {
            (bp.pq[1] - pq0[1]).to_f64_lossy().atan2((bp.pq[0] - pq0[0]).to_f64_lossy())
        };
        key(a).total_cmp(&key(b)).then(a.theta_rad.to_f64_lossy().total_cmp(&b.theta_rad.to_f64_lossy()))
    });

    let ring: Vec<Pt<T>> = boundary.iter().map(|b| b.pq).collect();
    let area = geometry::signed_area(&ring).abs();
    Ok(ForResult {
        scenario_id: scenario.id.clone(),
        boundary,
        area_mw_mvar: area,
        operating_point_pq: pq0,
        config: config.clone(),
    })
}

/// Baseline cloud: uniform per-polygon dispatch draws, kept when the grid
/// accepts them, plus the convex hull of the accepted interchanges.
pub fn random_sampling_for<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<Pt<T>>, Vec<Pt<T>>), AggError> {
    if n_samples == 0 {
        return Err(AggError::BadConfig("n_samples must be at least 1"));
    }
    let ctx = EvalContext::new(scenario, grid, &SolverOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warm: Option<Vec<Complex<T>>> = None;
    let mut cloud = Vec::new();
    for _ in 0..n_samples {
        let dispatch: Vec<Pt<T>> =
            scenario.fpus.iter().map(|f| f.polygon.sample(&mut rng)).collect();
        let e = ctx.eval(&dispatch, warm.as_ref())?;
        if e.feasible {
            warm = Some(e.v);
            cloud.push(e.pq);
        }
    }
    let hull = geometry::convex_hull(&cloud);
    Ok((cloud, hull))
}

/// Re-derives the binding label for a boundary point from a fresh solve at
/// its dispatch: the tightest grid category when within `binding_margin`,
/// otherwise exhausted FPU flexibility.
pub fn attribute_constraint<T: Scalar>(
    bp: &BoundaryPoint<T>,
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    binding_margin: T,
) -> Result<ConstraintKind, AggError> {
    let ctx = EvalContext::new(scenario, grid, &SolverOptions::default())?;
    let e = ctx.eval(&bp.dispatch, None)?;
    Ok(label_from_report(&e.report, binding_margin).0)
}

const LOSS_SWARM: usize = 24;
const LOSS_ITERS: usize = 45;

#[derive(Clone, Copy)]
struct LossScore<T> {
    dist: T,
    loss: T,
}

impl<T: Scalar> LossScore<T> {
    fn worst() -> Self {
        Self { dist: T::infinity(), loss: T::infinity() }
    }

    /// Distance to target decides; losses break ties once both hit it.
    fn better_than(&self, other: &Self, dist_tol: T) -> bool {
        if self.dist <= dist_tol && other.dist <= dist_tol {
            self.loss < other.loss
        } else {
            self.dist < other.dist
        }
    }
}

/// Rasterizes the region bounding box and, per in-region cell, searches for
/// the lowest-loss dispatch whose interchange lands on the cell center
/// (within 1% of the region diameter). Out-of-region cells stay marked
/// infeasible.
pub fn loss_map<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &Grid<T>,
    for_result: &ForResult<T>,
    resolution: usize,
) -> Result<LossMap<T>, AggError> {
    if resolution == 0 {
        return Err(AggError::BadConfig("resolution must be at least 1"));
    }
    let ctx = EvalContext::new(scenario, grid, &SolverOptions::default())?;
    let base: Vec<Pt<T>> = scenario.fpus.iter().map(|f| f.operating_point).collect();
    let e0 = ctx.eval(&base, None)?;
    if !e0.feasible {
        return Err(AggError::NoFeasibleStart);
    }
    let pq0 = e0.pq;
    let base_losses = e0.losses_mw;

    let ring: Vec<Pt<T>> = for_result.boundary.iter().map(|b| b.pq).collect();
    let mut lo = pq0;
    let mut hi = pq0;
    for p in &ring {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    // floor keeps degenerate (zero-flexibility) regions workable
    let dist_tol = (T::of(0.01) * diag).max(T::of(1e-6));
    let edge_tol = (T::of(1e-9) * diag).max(T::of(1e-9));
    let res_t = T::from_usize(resolution).unwrap();
    let config = &for_result.config;

    let cells = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let i = idx / resolution;
            let j = idx % resolution;
            let target = [
                lo[0] + (T::from_usize(i).unwrap() + T::of(0.5)) * (hi[0] - lo[0]) / res_t,
                lo[1] + (T::from_usize(j).unwrap() + T::of(0.5)) * (hi[1] - lo[1]) / res_t,
            ];
            if !geometry::inside_polyline(&ring, target, edge_tol) {
                return Ok(LossMapCell { target, loss_mw: None, feasible: false });
            }
            if geometry::dist2(target, pq0) <= dist_tol * dist_tol {
                return Ok(LossMapCell { target, loss_mw: Some(base_losses), feasible: true });
            }
            let best = dispatch_to_target(
                &ctx,
                &scenario.fpus,
                &base,
                target,
                dist_tol,
                mix(config.seed, (idx as u64) | (1u64 << 63)),
                config,
            )?;
            if best.dist <= dist_tol {
                Ok(LossMapCell { target, loss_mw: Some(best.loss), feasible: true })
            } else {
                Ok(LossMapCell { target, loss_mw: None, feasible: false })
            }
        })
        .collect::<Result<Vec<_>, AggError>>()?;

    Ok(LossMap { cells, resolution })
}

/// Swarm search for the least-lossy dispatch reproducing `target`.
fn dispatch_to_target<T: Scalar>(
    ctx: &EvalContext<T>,
    fpus: &[Fpu<T>],
    base: &[Pt<T>],
    target: Pt<T>,
    dist_tol: T,
    seed: u64,
    config: &AggConfig<T>,
) -> Result<LossScore<T>, AggError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = fpus.len();
    let mut warm: Option<Vec<Complex<T>>> = None;

    let score_of = |e: &Eval<T>| {
        if e.feasible {
            LossScore { dist: geometry::dist2(e.pq, target).sqrt(), loss: e.losses_mw }
        } else {
            LossScore::worst()
        }
    };

    let mut xs: Vec<Vec<Pt<T>>> = Vec::with_capacity(LOSS_SWARM);
    xs.push(base.to_vec());
    for _ in 1..LOSS_SWARM {
        xs.push(fpus.iter().map(|f| f.polygon.sample(&mut rng)).collect());
    }
    let mut vs = vec![vec![[T::zero(); 2]; n]; LOSS_SWARM];
    let mut pbest: Vec<(LossScore<T>, Vec<Pt<T>>)> = Vec::with_capacity(LOSS_SWARM);
    let mut gbest: (LossScore<T>, Vec<Pt<T>>) = (LossScore::worst(), base.to_vec());

    for x in &xs {
        let e = ctx.eval(x, warm.as_ref())?;
        let s = score_of(&e);
        if e.feasible {
            warm = Some(e.v);
        }
        if s.better_than(&gbest.0, dist_tol) {
            gbest = (s, x.clone());
        }
        pbest.push((s, x.clone()));
    }

    for _ in 0..LOSS_ITERS {
        for i in 0..LOSS_SWARM {
            for d in 0..n {
                for c in 0..2 {
                    let r1 = T::of(rng.gen::<f64>());
                    let r2 = T::of(rng.gen::<f64>());
                    vs[i][d][c] = config.inertia * vs[i][d][c]
                        + config.cognitive * r1 * (pbest[i].1[d][c] - xs[i][d][c])
                        + config.social * r2 * (gbest.1[d][c] - xs[i][d][c]);
                    xs[i][d][c] += vs[i][d][c];
                }
                xs[i][d] = fpus[d].polygon.project(xs[i][d]);
            }
            let e = ctx.eval(&xs[i], warm.as_ref())?;
            let s = score_of(&e);
            if e.feasible {
                warm = Some(e.v);
            }
            if s.better_than(&pbest[i].0, dist_tol) {
                pbest[i] = (s, xs[i].clone());
            }
            if pbest[i].0.better_than(&gbest.0, dist_tol) {
                gbest = (pbest[i].0, pbest[i].1.clone());
            }
        }
    }
    Ok(gbest.0)
}
