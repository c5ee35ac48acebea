use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::equations::MomentEquations;
use super::integrate::{advance, Advance, Tolerances};
use super::state::{idx, CumulantState, StateMatrix, StateVector, DIM};
use crate::error::{Error, Result};
use crate::model::Model;

/// Seed for the cross-structure correlation at the start of settling.
pub const DEFAULT_SEED_CORRELATION: f64 = 1e-6;

/// Components below this size (in natural units) are refined in relative
/// precision after the main Newton solve.
const SMALL_COMPONENT: f64 = 1e-8;

const PTC_ITERATIONS: usize = 400;
/// Relative residual that ends the search over Newton starting points.
const RELATIVE_TOL: f64 = 1e-10;
const SETTLE_STEPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub seed_correlation: f64,
    /// Length of the initial settling integration. `None` picks
    /// `10 / min(gamma)`.
    pub settle_time: Option<f64>,
    /// Bound on the scaled residual, see [`scaled_residual`].
    pub residual_tol: f64,
    /// Scaled residual accepted from the long-time integration fallback.
    pub fallback_tol: f64,
    pub max_newton_iterations: usize,
    /// Settling extensions (each 4x longer) before giving up on Newton.
    pub max_rounds: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            seed_correlation: DEFAULT_SEED_CORRELATION,
            settle_time: None,
            residual_tol: 1e-10,
            fallback_tol: 1e-8,
            max_newton_iterations: 60,
            max_rounds: 5,
        }
    }
}

/// How a steady state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    Newton,
    Integration,
}

impl fmt::Display for SolvePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolvePath::Newton => f.write_str("converged-newton"),
            SolvePath::Integration => f.write_str("converged-integration"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub state: CumulantState,
    pub path: SolvePath,
    /// Scaled residual of the returned state.
    pub residual: f64,
    /// Largest `|f_i| / sum_k |term_ik|`. Small only when vanishing
    /// components are resolved to relative precision.
    pub relative_residual: f64,
    /// Largest real part of the linearization restricted to the
    /// trace-preserving subspace.
    pub max_growth_rate: f64,
    /// Total settling time integrated before the answer was produced.
    pub settle_time: f64,
}

pub fn steady_state(model: &Model) -> Result<SteadyState> {
    steady_state_with(model, &SteadyOptions::default())
}

pub fn steady_state_with(model: &Model, opts: &SteadyOptions) -> Result<SteadyState> {
    let eq = MomentEquations::new(model);
    solve(&eq, model, opts)
}

/// Steady state with the cooperative drive `(N - 1) <l u u l>` switched off:
/// thermal photons plus independent spontaneous emission from `N` structures.
pub fn noncooperative_steady_state(model: &Model) -> Result<SteadyState> {
    let mut eq = MomentEquations::new(model);
    eq.cooperative = false;
    solve(&eq, model, &SteadyOptions::default())
}

fn default_settle_time(model: &Model) -> f64 {
    let slowest = model
        .params
        .gamma
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    10.0 / slowest
}

fn solve(eq: &MomentEquations, model: &Model, opts: &SteadyOptions) -> Result<SteadyState> {
    let mut settle = opts
        .settle_time
        .unwrap_or_else(|| default_settle_time(model));
    // Settling only needs to reach the right basin; pseudo-transient
    // relaxation takes over when fast oscillations exhaust the budget.
    let tol = Tolerances {
        max_steps: SETTLE_STEPS,
        ..Tolerances::default()
    };
    let seed = CumulantState::seeded(opts.seed_correlation).to_vector();
    let mut state = CumulantState::from_vector(&seed);
    let mut elapsed = 0.0;
    let mut last_failure = String::new();

    for _ in 0..=opts.max_rounds {
        // An undamped coherent exchange can exhaust the step budget. Newton
        // then starts from the progress made and the next round continues
        // from there.
        match advance(eq, &state, settle, &tol) {
            Ok(Advance::Done(traj)) => {
                state = *traj.final_state();
                elapsed += settle;
            }
            Ok(Advance::OutOfSteps { traj, .. }) => {
                state = *traj.final_state();
                elapsed += traj.final_time();
            }
            Err(Error::Stiffness { .. }) => {}
            Err(e) => return Err(e),
        }

        // Newton from the settled state, after pseudo-transient relaxation,
        // and from the seed. A stable admissible root resolved to relative
        // precision ends the search; otherwise the best such root is kept.
        let settled = state.to_vector();
        let mut best: Option<(StateVector, f64)> = None;
        for k in 0..3 {
            let start = match k {
                0 => Some(settled),
                1 => pseudo_transient(eq, &settled, PTC_ITERATIONS),
                _ => Some(seed),
            };
            let Some(start) = start else { continue };
            match newton(eq, &start, opts) {
                Ok(y) => {
                    let growth = max_growth_rate(eq, &y);
                    if admissible(&y) && growth <= 1e-9 * spectral_scale(eq, &y) {
                        let rel = relative_residual(eq, &y);
                        if rel <= RELATIVE_TOL {
                            return Ok(finish(eq, y, SolvePath::Newton, elapsed));
                        }
                        if best.is_none_or(|(_, r)| rel < r) {
                            best = Some((y, rel));
                        }
                        continue;
                    }
                    last_failure = if admissible(&y) {
                        format!(
                            "only an unstable fixed point was found (growth rate {growth:.3e} /s)"
                        )
                    } else {
                        "newton reached an inadmissible point".to_string()
                    };
                }
                Err(e) => last_failure = e.to_string(),
            }
        }
        if let Some((y, _)) = best {
            return Ok(finish(eq, y, SolvePath::Newton, elapsed));
        }

        let y = state.to_vector();
        if admissible(&y) && scaled_residual(eq, &y) <= opts.fallback_tol {
            return Ok(finish(eq, y, SolvePath::Integration, elapsed));
        }
        settle *= 4.0;
    }
    Err(Error::NotConverged(format!(
        "after {elapsed:.3e} s of settling: {last_failure}"
    )))
}

fn finish(eq: &MomentEquations, y: StateVector, path: SolvePath, settle_time: f64) -> SteadyState {
    SteadyState {
        state: CumulantState::from_vector(&y),
        path,
        residual: scaled_residual(eq, &y),
        relative_residual: relative_residual(eq, &y),
        max_growth_rate: max_growth_rate(eq, &y),
        settle_time,
    }
}

/// Index of the largest population. Its equation is the one replaced by
/// the trace constraint: the trace row only fixes values to absolute
/// precision, so it must not stand in for a vanishing population.
fn trace_row(y: &StateVector) -> usize {
    idx::POPULATIONS
        .iter()
        .copied()
        .max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
        .unwrap_or(idx::P_L)
}

/// Right-hand side with one population equation replaced by `trace - 1`,
/// together with the per-row term magnitudes.
fn constrained_residual(
    eq: &MomentEquations,
    y: &StateVector,
    pivot: usize,
) -> (StateVector, StateVector) {
    let mut f = eq.rhs(y);
    let mut m = eq.term_magnitudes(y);
    let trace: f64 = idx::POPULATIONS.iter().map(|&i| y[i]).sum();
    f[pivot] = trace - 1.0;
    m[pivot] = idx::POPULATIONS.iter().map(|&i| y[i].abs()).sum::<f64>() + 1.0;
    (f, m)
}

fn constrained_jacobian(eq: &MomentEquations, y: &StateVector, pivot: usize) -> StateMatrix {
    let mut jac = eq.jacobian(y);
    for j in 0..DIM {
        jac[(pivot, j)] = 0.0;
    }
    for &i in &idx::POPULATIONS {
        jac[(pivot, i)] = 1.0;
    }
    jac
}

/// Natural units: populations and coherences are O(1) at most, the photon
/// number is measured in units of itself once it exceeds one.
fn natural_scales(y: &StateVector) -> StateVector {
    let mut s = StateVector::repeat(1.0);
    s[idx::N_PHOT] = y[idx::N_PHOT].abs().max(1.0);
    s
}

/// Row weights: the fastest term of each equation in natural units.
fn row_weights(jac: &StateMatrix, col: &StateVector) -> StateVector {
    StateVector::from_fn(|i, _| {
        let w = (0..DIM)
            .map(|j| (jac[(i, j)] * col[j]).abs())
            .fold(0.0, f64::max);
        if w > 0.0 {
            w
        } else {
            1.0
        }
    })
}

/// Residual with each equation divided by its fastest rate and each
/// variable measured in natural units.
pub fn scaled_residual(eq: &MomentEquations, y: &StateVector) -> f64 {
    let pivot = trace_row(y);
    let (f, _) = constrained_residual(eq, y, pivot);
    let w = row_weights(&constrained_jacobian(eq, y, pivot), &natural_scales(y));
    f.component_div(&w).amax()
}

fn ratio(f: &StateVector, m: &StateVector) -> StateVector {
    StateVector::from_fn(|i, _| {
        if f[i] == 0.0 {
            0.0
        } else {
            f[i] / m[i].max(f64::MIN_POSITIVE)
        }
    })
}

/// Scale-free residual `max_i |f_i| / sum_k |term_ik|` including the trace
/// constraint.
pub fn relative_residual(eq: &MomentEquations, y: &StateVector) -> f64 {
    let (f, m) = constrained_residual(eq, y, trace_row(y));
    ratio(&f, &m).amax()
}

fn newton(eq: &MomentEquations, y0: &StateVector, opts: &SteadyOptions) -> Result<StateVector> {
    let pivot = trace_row(y0);
    let y = absolute_newton(eq, y0, pivot, opts)?;
    Ok(refine_small(eq, &y, pivot, opts.max_newton_iterations))
}

/// Newton in natural units with a backtracking line search on the scaled
/// residual.
fn absolute_newton(
    eq: &MomentEquations,
    y0: &StateVector,
    pivot: usize,
    opts: &SteadyOptions,
) -> Result<StateVector> {
    let mut y = *y0;
    for _ in 0..opts.max_newton_iterations {
        let col = natural_scales(&y);
        let jac = constrained_jacobian(eq, &y, pivot);
        let w = row_weights(&jac, &col);
        let merit = |y: &StateVector| constrained_residual(eq, y, pivot).0.component_div(&w);
        let r = merit(&y);
        if r.amax() <= opts.residual_tol * 1e-3 {
            return Ok(y);
        }
        let a = StateMatrix::from_fn(|i, j| jac[(i, j)] * col[j] / w[i]);
        let step = scaled_solve(&a, &(-r))?.component_mul(&col);

        let phi = r.norm();
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial = y + step * lambda;
            let pt = merit(&trial).norm();
            if pt.is_finite() && pt < phi {
                y = trial;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
        if step.component_div(&col).amax() * lambda < 1e-15 {
            break;
        }
    }
    let rmax = scaled_residual(eq, &y);
    if rmax <= opts.residual_tol {
        Ok(y)
    } else {
        Err(Error::NotConverged(format!(
            "newton stalled at scaled residual {rmax:.3e}"
        )))
    }
}

/// Pseudo-transient continuation: implicit Euler steps whose length grows
/// as the residual falls. Follows the damped flow towards a stable state
/// without resolving fast undamped oscillations. `None` if it leaves the
/// admissible region or stalls without reducing the residual.
fn pseudo_transient(eq: &MomentEquations, y0: &StateVector, iters: usize) -> Option<StateVector> {
    let measure = |y: &StateVector| {
        let w = row_weights(&eq.jacobian(y), &natural_scales(y));
        eq.rhs(y).component_div(&w).amax()
    };
    let mut y = *y0;
    let mut r = measure(&y);
    let r0 = r;
    let mut tau = 1.0 / spectral_scale(eq, &y).max(f64::MIN_POSITIVE);
    for _ in 0..iters {
        if r <= 1e-8 {
            break;
        }
        let jac = eq.jacobian(&y);
        let col = natural_scales(&y);
        let mut a = StateMatrix::from_fn(|i, j| {
            let diag = if i == j { 1.0 / tau } else { 0.0 };
            (diag - jac[(i, j)]) * col[j]
        });
        let mut b = eq.rhs(&y);
        for i in 0..DIM {
            let rmax = a.row(i).amax();
            if rmax > 0.0 {
                a.row_mut(i).scale_mut(1.0 / rmax);
                b[i] /= rmax;
            }
        }
        let trial = match scaled_solve(&a, &b) {
            Ok(u) => y + u.component_mul(&col),
            Err(_) => {
                tau *= 0.1;
                continue;
            }
        };
        let rt = measure(&trial);
        if rt.is_finite() && loosely_admissible(&trial) {
            tau *= (r / rt).clamp(0.1, 10.0);
            y = trial;
            r = rt;
        } else {
            tau *= 0.25;
        }
    }
    (r < r0).then_some(y)
}

fn loosely_admissible(y: &StateVector) -> bool {
    let pops_ok = idx::POPULATIONS
        .iter()
        .all(|&i| y[i] >= -1e-6 && y[i] <= 1.0 + 1e-6);
    pops_ok && y[idx::N_PHOT] >= -1e-6 * y[idx::N_PHOT].abs().max(1.0)
}

/// Relative-precision refinement of the components that are negligible in
/// natural units (populations of levels far above kT and the coherences
/// they feed). The large components are frozen. Each small variable is
/// paired with the equation that constrains it most strongly in relative
/// terms; this is usually its own equation, but a tunneling coherence is
/// pinned by the population balance it feeds rather than by its own row.
/// The refinement is kept only if it lowers the relative residual.
fn refine_small(eq: &MomentEquations, y0: &StateVector, pivot: usize, iters: usize) -> StateVector {
    let small: Vec<usize> = (0..DIM)
        .filter(|&j| y0[j].abs() < SMALL_COMPONENT * natural_scales(y0)[j])
        .collect();
    if small.is_empty() {
        return *y0;
    }
    let Some(rows) = match_rows(eq, y0, pivot, &small) else {
        return *y0;
    };
    let mut y = *y0;
    let mut best = (*y0, relative_residual(eq, y0));
    let k = small.len();
    for _ in 0..iters {
        let (f, _) = constrained_residual(eq, &y, pivot);
        let jac = constrained_jacobian(eq, &y, pivot);
        let col: Vec<f64> = small.iter().map(|&j| y[j].abs().max(1e-250)).collect();
        let mut a = DMatrix::from_fn(k, k, |r, c| jac[(rows[r], small[c])] * col[c]);
        let mut b = DVector::from_fn(k, |r, _| -f[rows[r]]);
        for r in 0..k {
            let rmax = a.row(r).amax();
            if rmax > 0.0 {
                a.row_mut(r).scale_mut(1.0 / rmax);
                b[r] /= rmax;
            }
        }
        let Some(u) = a.lu().solve(&b) else { break };
        if u.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut step = StateVector::zeros();
        for (c, &j) in small.iter().enumerate() {
            step[j] = u[c] * col[c];
        }
        // Round-off in the first steps leaves the smallest rows at ratio one,
        // so full steps are taken and the best iterate is kept.
        y += step;
        let full = relative_residual(eq, &y);
        if !full.is_finite() {
            break;
        }
        if full < best.1 {
            best = (y, full);
        }
        if full <= 1e-14 {
            break;
        }
    }
    best.0
}

/// Greedy assignment of equations to the small variables by relative
/// sensitivity `|J_ij| |y_j| / m_i`. The trace row is never used.
fn match_rows(
    eq: &MomentEquations,
    y: &StateVector,
    pivot: usize,
    small: &[usize],
) -> Option<Vec<usize>> {
    let jac = constrained_jacobian(eq, y, pivot);
    let (_, m) = constrained_residual(eq, y, pivot);
    let mut pairs = Vec::new();
    for (c, &j) in small.iter().enumerate() {
        let yj = y[j].abs().max(1e-250);
        for i in 0..DIM {
            if i == pivot || jac[(i, j)] == 0.0 {
                continue;
            }
            let w = (jac[(i, j)] * yj).abs() / m[i].max(f64::MIN_POSITIVE);
            // Prefer the variable's own equation on ties.
            let tie: f64 = if i == j { 1.0 } else { 0.0 };
            pairs.push((w, tie, i, c));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut row_of = vec![None; small.len()];
    let mut used = [false; DIM];
    for (_, _, i, c) in pairs {
        if row_of[c].is_none() && !used[i] {
            row_of[c] = Some(i);
            used[i] = true;
        }
    }
    row_of.into_iter().collect()
}

/// LU solve, falling back to a truncated SVD when a conserved quantity
/// makes the matrix singular.
fn scaled_solve(a: &StateMatrix, b: &StateVector) -> Result<StateVector> {
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NotConverged("non-finite Newton matrix".into()));
    }
    if let Some(u) = a.lu().solve(b) {
        if u.iter().all(|v| v.is_finite()) && (a * u - b).amax() <= 1e-6 * b.amax().max(1e-300) {
            return Ok(u);
        }
    }
    let svd = nalgebra::SVD::try_new(*a, true, true, f64::EPSILON, 500)
        .ok_or_else(|| Error::NotConverged("SVD of the Newton matrix failed".into()))?;
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(b, eps)
        .map_err(|e| Error::NotConverged(format!("singular Newton matrix: {e}")))
}

fn admissible(y: &StateVector) -> bool {
    let pops_ok = idx::POPULATIONS
        .iter()
        .all(|&i| y[i] >= -1e-9 && y[i] <= 1.0 + 1e-9);
    pops_ok && y[idx::N_PHOT] >= -1e-9 * y[idx::N_PHOT].abs().max(1.0)
}

/// Jacobian on the trace-preserving subspace, with `p_l` eliminated.
pub fn reduced_jacobian(eq: &MomentEquations, y: &StateVector) -> DMatrix<f64> {
    let jac = eq.jacobian(y);
    let keep: Vec<usize> = (0..DIM).filter(|&i| i != idx::P_L).collect();
    DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
        let (i, j) = (keep[a], keep[b]);
        let tie = if idx::POPULATIONS.contains(&j) {
            jac[(i, idx::P_L)]
        } else {
            0.0
        };
        jac[(i, j)] - tie
    })
}

pub fn max_growth_rate(eq: &MomentEquations, y: &StateVector) -> f64 {
    let red = reduced_jacobian(eq, y);
    red.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn spectral_scale(eq: &MomentEquations, y: &StateVector) -> f64 {
    let jac = eq.jacobian(y);
    (0..DIM).map(|i| jac[(i, i)].abs()).fold(0.0, f64::max)
}
