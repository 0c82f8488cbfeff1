//! Solver tolerances.

/// Largest accepted primal infeasibility, scaled by `1 + max |b|`.
pub const FEASIBILITY: f64 = 1e-7;
/// Optimality gap accepted for reported solutions.
pub const OPTIMALITY: f64 = 1e-6;
/// Distance from an integer below which a value counts as integral.
pub const INTEGRALITY: f64 = 1e-6;
/// Smallest pivot element the simplex accepts.
pub const PIVOT: f64 = 1e-9;
/// Reduced cost below `-REDUCED_COST` makes a column attractive.
pub const REDUCED_COST: f64 = 1e-9;
/// Basic values in `(-PRIMAL, 0)` are snapped to zero.
pub const PRIMAL: f64 = 1e-9;
