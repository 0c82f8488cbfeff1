//! Best-first branch and bound on LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::model::{LinearModel, Sense, SolveResult, Status};
use super::simplex::solve_lp;
use super::tol;

/// Limits for [`solve_mip_with`].
#[derive(Debug, Clone, Copy)]
pub struct MipOptions {
    pub node_limit: usize,
    /// Absolute optimality gap at which a node is pruned.
    pub gap: f64,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self { node_limit: 200_000, gap: tol::OPTIMALITY }
    }
}

struct Node {
    /// Relaxation bound in minimisation form.
    bound: f64,
    id: usize,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

/// Solves a mixed-integer program to proven optimality.
pub fn solve_mip(model: &LinearModel) -> SolveResult {
    solve_mip_with(model, MipOptions::default())
}

/// [`solve_mip`] with explicit limits.
pub fn solve_mip_with(model: &LinearModel, opts: MipOptions) -> SolveResult {
    let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let ints: Vec<usize> = model.vars.iter().enumerate().filter(|(_, v)| v.integer).map(|(i, _)| i).collect();
    let root_bounds: Vec<(f64, f64)> = model
        .vars
        .iter()
        .map(|v| if v.integer { (v.lower.ceil(), v.upper.floor()) } else { (v.lower, v.upper) })
        .collect();
    let mut work = model.clone();
    let mut relax = |bounds: &[(f64, f64)]| {
        for (v, &(lo, hi)) in work.vars.iter_mut().zip(bounds) {
            v.lower = lo;
            v.upper = hi;
        }
        if bounds.iter().any(|&(lo, hi)| lo > hi) {
            return SolveResult::failed(Status::Infeasible, 0);
        }
        solve_lp(&work)
    };
    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut nodes = 0;
    let mut next_id = 0;
    heap.push(Node { bound: f64::NEG_INFINITY, id: next_id, bounds: root_bounds });
    next_id += 1;
    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - opts.gap {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            hit_limit = true;
            break;
        }
        nodes += 1;
        let lp = relax(&node.bounds);
        iterations += lp.iterations;
        match lp.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded if incumbent.is_none() && nodes == 1 => {
                let mut r = SolveResult::failed(Status::Unbounded, iterations);
                r.nodes = nodes;
                return r;
            }
            _ => continue,
        }
        let value = sign * lp.objective;
        if let Some((best, _)) = &incumbent {
            if value >= best - opts.gap {
                continue;
            }
        }
        // Most fractional variable, smallest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        for &i in &ints {
            let v = lp.x[i];
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist > tol::INTEGRALITY && branch.is_none_or(|(_, d)| dist > d + 1e-12) {
                branch = Some((i, dist));
            }
        }
        match branch {
            None => {
                let mut x = lp.x.clone();
                for &i in &ints {
                    x[i] = x[i].round();
                }
                let obj = sign * model.objective_value(&x);
                if incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                    incumbent = Some((obj, x));
                }
            }
            Some((i, _)) => {
                let v = lp.x[i];
                let mut down = node.bounds.clone();
                down[i].1 = v.floor();
                let mut up = node.bounds;
                up[i].0 = v.ceil();
                heap.push(Node { bound: value, id: next_id, bounds: down });
                heap.push(Node { bound: value, id: next_id + 1, bounds: up });
                next_id += 2;
            }
        }
    }
    match incumbent {
        Some((obj, x)) => SolveResult {
            status: if hit_limit { Status::NodeLimit } else { Status::Optimal },
            objective: sign * obj,
            x,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            nodes,
        },
        None => {
            let mut r = SolveResult::failed(if hit_limit { Status::NodeLimit } else { Status::Infeasible }, iterations);
            r.nodes = nodes;
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::model::Relation;

    #[test]
    fn binary_knapsack() {
        let mut m = LinearModel::new(Sense::Maximize);
        let a = m.add_binary("a", 3.0);
        let b = m.add_binary("b", 2.0);
        m.add_row("one", &[(a, 1.0), (b, 1.0)], Relation::Le, 1.0);
        let r = solve_mip(&m);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn general_integers() {
        // LP optimum is fractional (3, 1.5); integer optimum is 20 at (4, 0).
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_int_var("x", 0.0, 10.0, 5.0);
        let y = m.add_int_var("y", 0.0, 10.0, 4.0);
        m.add_row("a", &[(x, 6.0), (y, 4.0)], Relation::Le, 24.0);
        m.add_row("b", &[(x, 1.0), (y, 2.0)], Relation::Le, 6.0);
        let r = solve_mip(&m);
        assert!((r.objective - 20.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn node_limit_is_reported() {
        let mut m = LinearModel::new(Sense::Maximize);
        let vars: Vec<_> = (0..12).map(|i| m.add_binary(format!("v{i}"), 1.0 + i as f64 * 0.01)).collect();
        let row: Vec<_> = vars.iter().map(|&v| (v, 2.0)).collect();
        m.add_row("odd", &row, Relation::Le, 11.0);
        let r = solve_mip_with(&m, MipOptions { node_limit: 2, gap: 1e-6 });
        assert_eq!(r.status, Status::NodeLimit);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_int_var("x", 0.0, 5.0, 1.0);
        m.add_row("half", &[(x, 2.0)], Relation::Eq, 3.0);
        assert_eq!(solve_mip(&m).status, Status::Infeasible);
    }
}
