//! Linear and mixed-integer programming plus exact tour optimisation.

mod mip;
mod model;
pub mod simplex;
pub mod tol;
mod tour;

pub use mip::{solve_mip, solve_mip_with, MipOptions};
pub use model::{dual_objective, Constraint, LinearModel, Relation, RowId, Sense, SolveResult, Status, VarId, Variable};
pub use simplex::{solve_lp, Simplex};
pub use tour::{heuristic_tour, optimal_tour, subset_tour_lengths, tour_length, Tour, MAX_TOUR_NODES};

/// Pluggable solver backend. The bundled implementation is [`Bundled`];
/// external solvers can be wired in by implementing this trait.
pub trait LpBackend: Send + Sync {
    fn solve_lp(&self, model: &LinearModel) -> SolveResult;
    fn solve_mip(&self, model: &LinearModel) -> SolveResult;
}

/// The built-in revised simplex and branch and bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bundled;

impl LpBackend for Bundled {
    fn solve_lp(&self, model: &LinearModel) -> SolveResult {
        solve_lp(model)
    }
    fn solve_mip(&self, model: &LinearModel) -> SolveResult {
        solve_mip(model)
    }
}
