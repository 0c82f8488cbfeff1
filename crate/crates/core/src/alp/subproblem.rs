//! The pricing problem as an explicit mixed-integer program.
//!
//! Column generation prices with the exact decomposition in `pricing`; this
//! model states the same problem over the raw state and action variables and
//! serves as an independent formulation for validation and export.

use std::collections::HashMap;

use super::pricing::Prices;
use crate::instance::ProblemInstance;
use crate::mdp::{ActionPlan, State, XCoord};
use crate::optim::{LinearModel, Relation, Sense, SolveResult, VarId};

/// The pricing MIP together with the variables needed to read a solution.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub model: LinearModel,
    x: Vec<(usize, VarId)>,
    y: Vec<VarId>,
    /// `n[kl][t - 1]`.
    n: Vec<Vec<VarId>>,
    r: Vec<VarId>,
    z: Vec<VarId>,
    /// Arc variables keyed by `(from node, to node)`.
    arcs: HashMap<(usize, usize), VarId>,
}

/// Builds the pricing MIP: minimise
/// `c(s,a) − η(1−γ) − Σ τ (x − γE[X']) − Σ ρ (y − γλ)` over feasible pairs.
///
/// `prices.tau` is in full form; for two-index parameters pass `δ·τ'`.
pub fn build_subproblem(inst: &ProblemInstance, prices: &Prices) -> Subproblem {
    let lay = inst.layout();
    let g = inst.gamma;
    let (kc, lc) = (inst.types(), inst.regions());
    let mut m = LinearModel::new(Sense::Minimize);
    let mut obj: HashMap<usize, f64> = HashMap::new();
    let mut add = |v: VarId, c: f64| *obj.entry(v.0).or_insert(0.0) += c;

    let mut x_var = HashMap::new();
    let mut x = Vec::new();
    for (idx, c) in lay.free_coords() {
        let v = m.add_int_var(format!("x{:?}", (c.t, c.k, c.l, c.j)), 0.0, inst.x_cap(c.l) as f64, 0.0);
        x_var.insert(idx, v);
        x.push((idx, v));
    }
    let mut y = Vec::new();
    let mut n = Vec::new();
    let mut r = Vec::new();
    let mut z = Vec::new();
    // Upper bound on day-1 units in one region.
    let max_x = (0..lc).map(|l| inst.x_cap(l) as f64).fold(0.0, f64::max);
    let max_y = (0..lc).map(|l| inst.y_cap(l) as f64).fold(0.0, f64::max);
    let served_cap = (0..kc).map(|k| max_x * lay.dims(k).visits as f64 + max_y).sum::<f64>();
    for k in 0..kc {
        let wait = inst.service(k).wait_target;
        for l in 0..lc {
            let ycap = inst.y_cap(l) as f64;
            y.push(m.add_int_var(format!("y{:?}", (k, l)), 0.0, ycap, 0.0));
            n.push((1..=wait).map(|t| m.add_int_var(format!("n{:?}", (t, k, l)), 0.0, ycap, 0.0)).collect::<Vec<_>>());
            r.push(m.add_int_var(format!("r{:?}", (k, l)), 0.0, ycap, 0.0));
            z.push(m.add_int_var(format!("z{:?}", (k, l)), 0.0, served_cap, 0.0));
        }
    }
    let visit: Vec<VarId> = (0..lc).map(|l| m.add_binary(format!("b{l}"), 0.0)).collect();
    let mut arcs = HashMap::new();
    for a in 0..=lc {
        for b in 0..=lc {
            if a != b {
                arcs.insert((a, b), m.add_binary(format!("o{a}_{b}"), 0.0));
            }
        }
    }
    let horizon_time = inst.shift + inst.overtime_cap;
    let times: Vec<VarId> = (0..lc).map(|l| m.add_var(format!("f{l}"), 0.0, horizon_time, 0.0)).collect();
    let u = m.add_var("u", 0.0, inst.overtime_cap, 0.0);

    // Objective: immediate cost.
    for k in 0..kc {
        for l in 0..lc {
            add(r[k * lc + l], inst.rejection_cost(k));
            add(z[k * lc + l], inst.diversion_cost(k));
        }
    }
    add(u, inst.weights.overtime);
    for (&(a, b), &v) in &arcs {
        add(v, inst.weights.travel * inst.geometry.node_distance(a, b));
    }
    // −τ (x − γ E[X']) with E[X'] expanded into state and action variables.
    for (idx, c) in lay.free_coords() {
        let tau = prices.tau[idx];
        if tau == 0.0 {
            continue;
        }
        add(x_var[&idx], -tau);
        let XCoord { t, k, l, j } = c;
        let s = inst.service(k);
        let kl = k * lc + l;
        let xv = |t: usize, j: usize| if t <= lay.horizon && !lay.is_structural_zero(t, k, j) { x_var.get(&lay.x_index(t, k, l, j)).copied() } else { None };
        let nv = |t: usize| n[kl].get(t - 1).copied();
        if j == 1 && t == s.pattern {
            let p = s.continuation(2);
            if let Some(v) = xv(1, 0) {
                add(v, g * tau * p);
            }
            if let Some(v) = nv(1) {
                add(v, g * tau * p);
            }
        } else if j >= 2 && t == s.pattern {
            if let Some(v) = xv(1, j - 1) {
                add(v, g * tau * s.continuation(j + 1));
            }
        } else if j != 0 && t < s.pattern {
            if let Some(v) = xv(t + 1, j) {
                add(v, g * tau);
            }
        } else if j == 0 && t < s.wait_target {
            if let Some(v) = xv(t + 1, 0) {
                add(v, g * tau);
            }
            if let Some(v) = nv(t + 1) {
                add(v, g * tau);
            }
        }
    }
    let mut offset = -prices.eta * (1.0 - g);
    for k in 0..kc {
        for l in 0..lc {
            let rho = prices.rho[lay.y_index(k, l)];
            add(y[k * lc + l], -rho);
            offset += g * rho * inst.rate(k, l);
        }
    }
    for (v, c) in obj {
        m.vars[v].objective = c;
    }
    m.objective_offset = offset;

    // Referrals are rejected or assigned within the wait target.
    for kl in 0..kc * lc {
        let mut row: Vec<(VarId, f64)> = n[kl].iter().map(|&v| (v, 1.0)).collect();
        row.push((r[kl], 1.0));
        row.push((y[kl], -1.0));
        m.add_row(format!("assign{kl}"), &row, Relation::Eq, 0.0);
    }
    // Day-1 work per region: diversions bounded by visits, work needs a visit.
    let mut service_terms = Vec::new();
    for l in 0..lc {
        let mut work = Vec::new();
        for k in 0..kc {
            let kl = k * lc + l;
            let mut day_one: Vec<(VarId, f64)> = (0..lay.dims(k).visits)
                .filter(|&j| !lay.is_structural_zero(1, k, j))
                .map(|j| (x_var[&lay.x_index(1, k, l, j)], 1.0))
                .collect();
            day_one.push((n[kl][0], 1.0));
            let mut bound = day_one.clone();
            bound.push((z[kl], -1.0));
            m.add_row(format!("divert{kl}"), &bound, Relation::Ge, 0.0);
            let e = inst.service(k).service_time;
            for &(v, a) in &bound {
                work.push((v, a));
                service_terms.push((v, a * e));
            }
        }
        work.push((visit[l], -served_cap));
        m.add_row(format!("visit{l}"), &work, Relation::Le, 0.0);
    }
    // Routing: degree constraints, a single depot departure, MTZ timing.
    for l in 0..lc {
        let node = l + 1;
        let into: Vec<(VarId, f64)> = (0..=lc).filter(|&a| a != node).map(|a| (arcs[&(a, node)], 1.0)).chain([(visit[l], -1.0)]).collect();
        let out: Vec<(VarId, f64)> = (0..=lc).filter(|&b| b != node).map(|b| (arcs[&(node, b)], 1.0)).chain([(visit[l], -1.0)]).collect();
        m.add_row(format!("in{l}"), &into, Relation::Eq, 0.0);
        m.add_row(format!("out{l}"), &out, Relation::Eq, 0.0);
    }
    let depart: Vec<(VarId, f64)> = (1..=lc).map(|b| (arcs[&(0, b)], 1.0)).collect();
    m.add_row("depart", &depart, Relation::Le, 1.0);
    for a in 1..=lc {
        for b in a + 1..=lc {
            m.add_row(format!("pair{a}_{b}"), &[(arcs[&(a, b)], 1.0), (arcs[&(b, a)], 1.0)], Relation::Le, 1.0);
        }
    }
    let big_t = horizon_time + 2.0 * (1..=lc).map(|a| inst.geometry.node_distance(0, a)).fold(0.0, f64::max);
    for b in 1..=lc {
        let d0 = inst.geometry.node_distance(0, b);
        m.add_row(format!("first{b}"), &[(times[b - 1], 1.0), (arcs[&(0, b)], -d0)], Relation::Ge, 0.0);
        for a in 1..=lc {
            if a != b {
                let d = inst.geometry.node_distance(a, b);
                m.add_row(
                    format!("mtz{a}_{b}"),
                    &[(times[b - 1], 1.0), (times[a - 1], -1.0), (arcs[&(a, b)], -big_t)],
                    Relation::Ge,
                    d - big_t,
                );
            }
        }
    }
    // Travel plus service fits in the shift plus overtime.
    let mut cap: Vec<(VarId, f64)> = arcs.iter().map(|(&(a, b), &v)| (v, inst.geometry.node_distance(a, b))).collect();
    cap.extend(service_terms);
    cap.push((u, -1.0));
    m.add_row("capacity", &cap, Relation::Le, inst.shift);

    Subproblem { model: m, x, y, n, r, z, arcs }
}

impl Subproblem {
    /// Reads the state-action pair from a solution of [`Subproblem::model`].
    pub fn decode(&self, inst: &ProblemInstance, result: &SolveResult) -> (State, ActionPlan) {
        let lay = inst.layout();
        let lc = inst.regions();
        let val = |v: VarId| result.x[v.0].round().max(0.0) as u32;
        let mut state = State::empty(inst);
        for &(idx, v) in &self.x {
            state.x[idx] = val(v);
        }
        let mut action = ActionPlan::empty(inst);
        for kl in 0..self.y.len() {
            let (k, l) = (kl / lc, kl % lc);
            state.y[lay.y_index(k, l)] = val(self.y[kl]);
            action.reject[lay.y_index(k, l)] = val(self.r[kl]);
            action.divert[lay.y_index(k, l)] = val(self.z[kl]);
            for (t, &v) in self.n[kl].iter().enumerate() {
                action.add_assigned(inst, t + 1, k, l, val(v));
            }
        }
        let mut at = 0;
        let mut route = Vec::new();
        while route.len() <= lc {
            let next = (0..=lc).find(|&b| b != at && result.x[self.arcs[&(at, b)].0] > 0.5);
            match next {
                Some(b) if b != 0 => {
                    route.push(b - 1);
                    at = b;
                }
                _ => break,
            }
        }
        action.route = route;
        action.overtime = (action.tour_length(&state, inst) - inst.shift).max(0.0);
        (state, action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alp::pricing::price;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::mdp::check_action;
    use crate::optim::solve_mip;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(cols: usize, wait: usize, visits: usize, overtime: f64) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, cols, 0.5).unwrap(),
            services: vec![ServiceType::new(1, 1.0, wait, VisitCountDist::Uniform { max: visits }).unwrap()],
            arrival_rates: vec![vec![0.8; cols]],
            shift: 2.5,
            overtime_cap: overtime,
            weights: CostWeights::default(),
            gamma: 0.9,
            x_cap: 2,
            y_cap: 2,
        })
        .unwrap()
    }

    #[test]
    fn zero_prices_score_at_most_zero() {
        let inst = toy(2, 2, 2, 0.5);
        let lay = inst.layout();
        let p = Prices { eta: 0.0, tau: vec![0.0; lay.x_len()], rho: vec![0.0; lay.y_len()] };
        let sp = build_subproblem(&inst, &p);
        let res = solve_mip(&sp.model);
        assert!(res.objective <= 1e-9);
    }

    #[test]
    fn mip_matches_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (cols, wait, visits, ot) in [(1, 1, 1, 0.0), (2, 2, 2, 0.5), (2, 1, 2, 0.0)] {
            let inst = toy(cols, wait, visits, ot);
            let lay = inst.layout();
            for _ in 0..6 {
                let mut tau = vec![0.0; lay.x_len()];
                for (idx, _) in lay.free_coords() {
                    tau[idx] = rng.random_range(0.0..6.0);
                }
                let p = Prices { eta: rng.random_range(-3.0..3.0), tau, rho: (0..lay.y_len()).map(|_| rng.random_range(0.0..8.0)).collect() };
                let sp = build_subproblem(&inst, &p);
                let res = solve_mip(&sp.model);
                let exact = price(&inst, &p);
                assert!((res.objective - exact.value).abs() < 1e-6, "mip {} vs {}", res.objective, exact.value);
                let (s, a) = sp.decode(&inst, &res);
                assert!(check_action(&s, &a, &inst).is_empty(), "{:?}", check_action(&s, &a, &inst));
            }
        }
    }
}
