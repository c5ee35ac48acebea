//! Adaptive linearly implicit integration of the moment equations.
//!
//! Second-order L-stable Rosenbrock-W scheme with an embedded third-order
//! error estimate (the `ode23s` pair). Each stage solves with the same
//! `I - h d J` matrix, so linear invariants such as the trace are kept to
//! round-off.

use super::equations::MomentEquations;
use super::state::{idx, CumulantState, StateMatrix, StateVector};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Give up after this many attempted steps.
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-7,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CumulantState>,
    pub accepted: usize,
    pub rejected: usize,
    /// Largest `|trace - trace(0)|` seen on accepted steps.
    pub max_trace_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &CumulantState {
        self.states
            .last()
            .expect("trajectory always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }
}

/// Integrates the moment equations from `state0` over `[0, t_end]` seconds.
pub fn integrate(
    state0: &CumulantState,
    model: &Model,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    integrate_equations(&MomentEquations::new(model), state0, t_end, tol)
}

/// As [`integrate`] for an explicit set of equation coefficients.
pub fn integrate_equations(
    eq: &MomentEquations,
    state0: &CumulantState,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    match advance(eq, state0, t_end, tol)? {
        Advance::Done(traj) => Ok(traj),
        Advance::OutOfSteps { traj, h, err_norm } => Err(Error::Stiffness {
            t: traj.final_time(),
            h,
            err_norm,
        }),
    }
}

/// Outcome of [`advance`].
#[derive(Debug, Clone)]
pub enum Advance {
    Done(Trajectory),
    /// The step budget ran out before `t_end`; the trajectory holds the
    /// progress made.
    OutOfSteps {
        traj: Trajectory,
        h: f64,
        err_norm: f64,
    },
}

/// As [`integrate_equations`], but an exhausted step budget returns the
/// partial trajectory instead of an error. A collapsing step size is still
/// an error.
pub fn advance(
    eq: &MomentEquations,
    state0: &CumulantState,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Advance> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![*state0],
        accepted: 0,
        rejected: 0,
        max_trace_drift: 0.0,
    };
    let trace0 = state0.trace();
    let mut y = state0.to_vector();
    let mut t = 0.0;
    let mut h = initial_step(&eq, &y, t_end);

    let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
    let e32 = 6.0 + std::f64::consts::SQRT_2;
    let ident = StateMatrix::identity();
    let mut last_err = 0.0;

    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Ok(Advance::Done(traj));
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(t_end * 1e-12);
        if h < h_min {
            return Err(Error::Stiffness {
                t,
                h,
                err_norm: last_err,
            });
        }
        h = h.min(t_end - t);

        let jac = eq.jacobian(&y);
        let w = ident - jac * (h * d);
        let lu = w.lu();
        let solve = |b: StateVector| lu.solve(&b);

        let f0 = eq.rhs(&y);
        let Some(k1) = solve(f0) else {
            h *= 0.25;
            traj.rejected += 1;
            continue;
        };
        let f1 = eq.rhs(&(y + k1 * (0.5 * h)));
        let k2 = solve(f1 - k1).map(|v| v + k1);
        let Some(k2) = k2 else {
            h *= 0.25;
            traj.rejected += 1;
            continue;
        };
        let y_new = y + k2 * h;
        let f2 = eq.rhs(&y_new);
        let Some(k3) = solve(f2 - (k2 - f1) * e32 - (k1 - f0) * 2.0) else {
            h *= 0.25;
            traj.rejected += 1;
            continue;
        };
        let err = (k1 - k2 * 2.0 + k3) * (h / 6.0);

        let mut err_norm: f64 = 0.0;
        for i in 0..err.len() {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max(err[i].abs() / sc);
        }
        if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.1;
            traj.rejected += 1;
            last_err = f64::INFINITY;
            continue;
        }
        last_err = err_norm;
        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            traj.accepted += 1;
            let s = CumulantState::from_vector(&y);
            let trace: f64 = idx::POPULATIONS.iter().map(|&i| y[i]).sum();
            traj.max_trace_drift = traj.max_trace_drift.max((trace - trace0).abs());
            traj.times.push(t);
            traj.states.push(s);
        } else {
            traj.rejected += 1;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            0.8 * err_norm.powf(-1.0 / 3.0)
        };
        h *= factor.clamp(0.1, 5.0);
    }
    if t >= t_end {
        return Ok(Advance::Done(traj));
    }
    Ok(Advance::OutOfSteps {
        traj,
        h,
        err_norm: last_err,
    })
}

fn initial_step(eq: &MomentEquations, y: &StateVector, t_end: f64) -> f64 {
    let jac = eq.jacobian(y);
    let stiff = (0..jac.nrows())
        .map(|i| jac[(i, i)].abs())
        .fold(0.0, f64::max);
    if stiff > 0.0 {
        (0.01 / stiff).min(t_end)
    } else {
        t_end * 1e-3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalParams;

    #[test]
    fn thermal_relaxation_of_the_empty_cavity() {
        let mut p = PhysicalParams::reference(300.0, 80.0, 1000);
        p.g = 0.0;
        let model = Model::new(p).unwrap();
        let kappa = model.params.kappa;
        let n1 = model.occ.n1;
        assert!(n1 > 1e-3);
        let tol = Tolerances {
            rtol: 1e-9,
            atol: 1e-14,
            ..Default::default()
        };
        let traj = integrate(&CumulantState::seeded(0.0), &model, 5.0 / kappa, &tol).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = n1 * (1.0 - (-2.0 * kappa * t).exp());
            assert!(
                (s.n_phot - exact).abs() <= 1e-6 * n1,
                "t={t}: {} vs {exact}",
                s.n_phot
            );
        }
    }

    #[test]
    fn trace_is_preserved() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.1, 10_000_000)).unwrap();
        let traj = integrate(
            &CumulantState::seeded(1e-6),
            &model,
            2e-3,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(traj.max_trace_drift <= 1e-8, "{}", traj.max_trace_drift);
        assert!(traj.accepted > 10);
    }

    #[test]
    fn rejects_bad_horizon() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.1, 10)).unwrap();
        assert!(integrate(
            &CumulantState::seeded(0.0),
            &model,
            0.0,
            &Tolerances::default()
        )
        .is_err());
    }

    #[test]
    fn step_collapse_is_reported() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.1, 10_000_000)).unwrap();
        let tol = Tolerances {
            max_steps: 3,
            ..Default::default()
        };
        match integrate(&CumulantState::seeded(1e-6), &model, 1.0, &tol) {
            Err(Error::Stiffness { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
