//! Second-order cumulant dynamics of `N` identical structures coupled to
//! one cavity mode.

mod equations;
mod integrate;
mod metrics;
mod state;
mod steady;

pub use equations::{rhs, MomentEquations};
pub use integrate::{integrate, integrate_equations, Tolerances, Trajectory};
pub use metrics::{occupation_ratio, output_flux, OccupationRatio, OutputFlux, RATIO_GUARD};
pub use state::{idx, CumulantState, StateMatrix, StateVector, COMPONENT_NAMES, DIM};
pub use steady::{
    max_growth_rate, noncooperative_steady_state, reduced_jacobian, relative_residual,
    steady_state, steady_state_with, SolvePath, SteadyOptions, SteadyState,
    DEFAULT_SEED_CORRELATION,
};
