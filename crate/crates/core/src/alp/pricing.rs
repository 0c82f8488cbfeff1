//! Exact pricing: the most violated ALP constraint for given prices.
//!
//! For fixed `(η, τ, ρ)` the reduced cost separates into independent terms
//! for booked visits after day 1, late assignments and rejections, plus a
//! day-1 part where served units compete for route capacity. The first group
//! is optimised coordinate by coordinate, the day-1 part by [`solve_day_one`].

use super::column::Column;
use crate::dayone::{solve_day_one, DayOnePlan, UnitClass};
use crate::instance::ProblemInstance;
use crate::mdp::{ActionPlan, State};

const TOL: f64 = 1e-12;

/// Prices of the current master in full (un-reduced) form.
#[derive(Debug, Clone, PartialEq)]
pub struct Prices {
    pub eta: f64,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Outcome of one pricing call.
#[derive(Debug, Clone)]
pub struct Priced {
    /// Minimum reduced cost.
    pub value: f64,
    pub column: Column,
    /// False when the day-1 subproblem fell back to its heuristic.
    pub exact: bool,
}

/// What happens to a pending referral that is not served on day 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outside {
    Reject,
    Assign(usize),
}

pub(crate) struct ReferralOptions {
    /// Cheapest option that avoids day 1, and its value.
    pub outside: (Outside, f64),
    /// Value of a day-1 unit that is served.
    pub serve: f64,
    pub diversion: f64,
}

pub(crate) fn referral_options(inst: &ProblemInstance, prices: &Prices, k: usize, l: usize) -> ReferralOptions {
    let lay = inst.layout();
    let s = inst.service(k);
    let g = inst.gamma;
    let tau = |t: usize, j: usize| tau_at(inst, &prices.tau, t, k, l, j);
    let mut outside = (Outside::Reject, inst.rejection_cost(k));
    for t in 2..=s.wait_target.min(lay.horizon) {
        let v = g * tau(t - 1, 0);
        // Later days win ties.
        if v <= outside.1 + TOL {
            outside = (Outside::Assign(t), v);
        }
    }
    ReferralOptions { outside, serve: g * s.continuation(2) * tau(s.pattern, 1), diversion: inst.diversion_cost(k) }
}

fn tau_at(inst: &ProblemInstance, tau: &[f64], t: usize, k: usize, l: usize, j: usize) -> f64 {
    let lay = inst.layout();
    if t == 0 || t > lay.horizon || j >= lay.dims(k).visits || lay.is_structural_zero(t, k, j) {
        0.0
    } else {
        tau[lay.x_index(t, k, l, j)]
    }
}

/// Kind of a day-1 unit class.
#[derive(Debug, Clone, Copy)]
enum Unit {
    Booked { j: usize },
    Referral,
}

/// Minimises the reduced cost over all feasible state-action pairs.
pub fn price(inst: &ProblemInstance, prices: &Prices) -> Priced {
    price_within(inst, prices, |_, _| true)
}

/// [`price`] plus, for every `(k, l)`, the best pair whose state is zero
/// outside `(k, l)`. The extra columns carry their own reduced costs and
/// are returned only if negative below `-tolerance`.
pub fn price_with_extras(inst: &ProblemInstance, prices: &Prices, tolerance: f64) -> (Priced, Vec<Priced>) {
    let best = price(inst, prices);
    let mut extras = Vec::new();
    if inst.types() * inst.regions() > 1 {
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let p = price_within(inst, prices, |k2, l2| k2 == k && l2 == l);
                if p.value < -tolerance && p.column.state != best.column.state {
                    extras.push(p);
                }
            }
        }
    }
    (best, extras)
}

/// Minimum over pairs whose state is zero outside the `(k, l)` accepted by
/// `keep`.
fn price_within(inst: &ProblemInstance, prices: &Prices, keep: impl Fn(usize, usize) -> bool) -> Priced {
    let lay = inst.layout();
    let g = inst.gamma;
    let (kc, lc) = (inst.types(), inst.regions());
    let mut state = State::empty(inst);
    let mut action = ActionPlan::empty(inst);
    let mut value = -prices.eta * (1.0 - g);
    for k in 0..kc {
        for l in 0..lc {
            value += g * prices.rho[lay.y_index(k, l)] * inst.rate(k, l);
        }
    }
    // Booked visits after day 1 only shift one day closer.
    for (idx, c) in lay.free_coords() {
        if c.t < 2 || !keep(c.k, c.l) {
            continue;
        }
        let coef = -prices.tau[idx] + g * tau_at(inst, &prices.tau, c.t - 1, c.k, c.l, c.j);
        if coef < -TOL {
            let cap = inst.x_cap(c.l);
            state.x[idx] = cap;
            value += coef * cap as f64;
        }
    }
    let mut classes = Vec::new();
    let mut kinds = Vec::new();
    let mut options = Vec::new();
    for k in 0..kc {
        let s = inst.service(k);
        let z = inst.diversion_cost(k);
        for l in 0..lc {
            if !keep(k, l) {
                continue;
            }
            for j in 0..s.max_visits() {
                if lay.is_structural_zero(1, k, j) {
                    continue;
                }
                let serve = -prices.tau[lay.x_index(1, k, l, j)]
                    + g * s.continuation(j + 2) * tau_at(inst, &prices.tau, s.pattern, k, l, j + 1);
                classes.push(UnitClass { region: l, kind: k, count: inst.x_cap(l), serve, idle: (serve + z).min(0.0) });
                kinds.push(Unit::Booked { j });
            }
            let o = referral_options(inst, prices, k, l);
            let rho = prices.rho[lay.y_index(k, l)];
            let serve = -rho + o.serve;
            let idle = (serve + o.diversion).min(-rho + o.outside.1).min(0.0);
            classes.push(UnitClass { region: l, kind: k, count: inst.y_cap(l), serve, idle });
            kinds.push(Unit::Referral);
            options.push(o);
        }
    }
    let plan = solve_day_one(inst, &classes);
    value += plan.objective;
    build_pair(inst, prices, &classes, &kinds, &options, &plan, &mut state, &mut action);
    let column = Column::new(inst, state, action);
    Priced { value, column, exact: plan.exact }
}

#[allow(clippy::too_many_arguments)]
fn build_pair(
    inst: &ProblemInstance,
    prices: &Prices,
    classes: &[UnitClass],
    kinds: &[Unit],
    options: &[ReferralOptions],
    plan: &DayOnePlan,
    state: &mut State,
    action: &mut ActionPlan,
) {
    let lay = inst.layout();
    let mut referral = 0;
    for ((c, kind), &served) in classes.iter().zip(kinds).zip(&plan.served) {
        let (k, l) = (c.kind, c.region);
        let present = if c.idle < -TOL { c.count } else { served };
        let idle_units = present - served;
        match *kind {
            Unit::Booked { j } => {
                state.set_x(lay, 1, k, l, j, present);
                action.divert[lay.y_index(k, l)] += idle_units;
            }
            Unit::Referral => {
                let o = &options[referral];
                referral += 1;
                state.set_y(lay, k, l, present);
                action.add_assigned(inst, 1, k, l, served);
                if idle_units == 0 {
                    continue;
                }
                let rho = prices.rho[lay.y_index(k, l)];
                let diverted = c.serve + o.diversion;
                let outside = -rho + o.outside.1;
                if diverted < outside - TOL {
                    action.add_assigned(inst, 1, k, l, idle_units);
                    action.divert[lay.y_index(k, l)] += idle_units;
                } else {
                    match o.outside.0 {
                        Outside::Reject => action.reject[lay.y_index(k, l)] += idle_units,
                        Outside::Assign(t) => action.add_assigned(inst, t, k, l, idle_units),
                    }
                }
            }
        }
    }
    action.route = plan.route.clone();
    action.overtime = plan.overtime;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alp::column::initial_column;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::mdp::check_action;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(wait: usize, pattern: usize, visits: usize, cap: u32) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, 2, 0.5).unwrap(),
            services: vec![ServiceType::new(pattern, 0.5, wait, VisitCountDist::Uniform { max: visits }).unwrap()],
            arrival_rates: vec![vec![1.2, 0.6]],
            shift: 2.0,
            overtime_cap: 0.5,
            weights: CostWeights::default(),
            gamma: 0.95,
            x_cap: cap,
            y_cap: cap,
        })
        .unwrap()
    }

    fn random_prices(inst: &ProblemInstance, rng: &mut ChaCha8Rng) -> Prices {
        let lay = inst.layout();
        let mut tau = vec![0.0; lay.x_len()];
        for (idx, _) in lay.free_coords() {
            tau[idx] = rng.random_range(0.0..8.0);
        }
        Prices { eta: rng.random_range(-5.0..5.0), tau, rho: (0..lay.y_len()).map(|_| rng.random_range(0.0..8.0)).collect() }
    }

    #[test]
    fn priced_pair_is_feasible_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (w, h, j) in [(1, 1, 1), (3, 1, 2), (2, 2, 3), (4, 2, 2)] {
            let inst = inst(w, h, j, 3);
            for _ in 0..40 {
                let p = random_prices(&inst, &mut rng);
                let r = price(&inst, &p);
                let col = &r.column;
                assert!(check_action(&col.state, &col.action, &inst).is_empty());
                let rc = col.reduced_cost(inst.gamma, p.eta, &p.tau, &p.rho);
                assert!((rc - r.value).abs() < 1e-9, "{rc} vs {}", r.value);
                let seed = initial_column(&inst);
                assert!(r.value <= seed.reduced_cost(inst.gamma, p.eta, &p.tau, &p.rho) + 1e-9);
            }
        }
    }
}
